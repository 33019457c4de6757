#!/usr/bin/env python3
"""Convert UCI agaricus-lepiota.data to FIMI transactions.

One item per declared (attribute, value) pair of the 22 descriptive
attributes, numbered in declaration order: 125 items. The class column is
dropped and a missing stalk-root ("?") contributes no item.

usage: mushroom_to_fimi.py agaricus-lepiota.data > mushroom.dat
"""

import sys

DECLARED = [
    ("cap-shape", "bcxfks"),
    ("cap-surface", "fgys"),
    ("cap-color", "nbcgrpuewy"),
    ("bruises", "tf"),
    ("odor", "alcyfmnps"),
    ("gill-attachment", "adfn"),
    ("gill-spacing", "cwd"),
    ("gill-size", "bn"),
    ("gill-color", "knbhgropuewy"),
    ("stalk-shape", "et"),
    ("stalk-root", "bcuezr"),
    ("stalk-surface-above-ring", "fyks"),
    ("stalk-surface-below-ring", "fyks"),
    ("stalk-color-above-ring", "nbcgopewy"),
    ("stalk-color-below-ring", "nbcgopewy"),
    ("veil-type", "pu"),
    ("veil-color", "nowy"),
    ("ring-number", "not"),
    ("ring-type", "ceflnpsz"),
    ("spore-print-color", "knbhrouwy"),
    ("population", "acnsvy"),
    ("habitat", "glmpuwd"),
]


def item_table():
    table, names = [], []
    for attr, values in DECLARED:
        col = {}
        for v in values:
            col[v] = len(names)
            names.append(f"{attr}={v}")
        table.append(col)
    return table, names


def main():
    if len(sys.argv) not in (2, 3):
        sys.exit(__doc__)
    table, names = item_table()
    assert len(names) == 125
    out = sys.stdout
    with open(sys.argv[1]) as f:
        for line_no, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if len(cells) != 23:
                sys.exit(f"line {line_no}: expected 23 fields, got {len(cells)}")
            items = []
            for col, value in zip(table, cells[1:]):
                if value == "?":
                    continue
                items.append(col[value])
            out.write(" ".join(map(str, items)) + "\n")
    if len(sys.argv) == 3:
        with open(sys.argv[2], "w") as f:
            f.write("\n".join(names) + "\n")


if __name__ == "__main__":
    main()
