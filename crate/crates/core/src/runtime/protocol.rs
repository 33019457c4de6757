//! Driver/worker wire format.
//!
//! Every frame is a 4-byte big-endian payload length followed by that many
//! bytes of UTF-8 JSON. The JSON object's `"type"` field is one of
//! `CONFIGURE`, `MAP`, `MAP_RESULT`, `STATUS`, `SHUTDOWN`, `ERROR`.
//!
//! Partition rows in `CONFIGURE` are base64 of the row-major bit-packed
//! incidence matrix: each row takes `ceil(m / 8)` bytes and attribute `j`
//! is bit `0x80 >> (j % 8)` of byte `j / 8` of its row.

use std::io::{self, Read, Write};

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::context::{AttributeId, AttributeSet, FormalContext};
use crate::error::{Error, Result};
use crate::partition::ContextPartition;

pub const MAX_FRAME_BYTES: usize = 1 << 30;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Message {
    Configure {
        partitions: Vec<WirePartition>,
    },
    Map {
        iteration: u64,
        job: String,
        /// Each item is an intent as ascending attribute indices.
        items: Vec<Vec<usize>>,
        /// Generator attribute per item (CloseByOne jobs only).
        #[serde(default, skip_serializing_if = "Option::is_none")]
        generators: Option<Vec<Option<usize>>>,
    },
    /// One per MAP item, in item order.
    MapResult {
        iteration: u64,
        key: Vec<usize>,
        /// `[attribute_index, intent_as_index_array, partition_id]`.
        values: Vec<(usize, Vec<usize>, usize)>,
    },
    Status {
        ok: bool,
        #[serde(default)]
        partitions: Vec<usize>,
        #[serde(default)]
        configures: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        detail: Option<String>,
    },
    Shutdown,
    Error {
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WirePartition {
    pub partition_id: usize,
    pub objects: usize,
    pub attributes: usize,
    pub rows: String,
    pub object_names: Vec<String>,
    pub attribute_names: Vec<String>,
    pub global_object_ids: Vec<usize>,
}

pub fn pack_rows(ctx: &FormalContext) -> Vec<u8> {
    let m = ctx.attribute_count();
    let stride = m.div_ceil(8);
    let mut bytes = vec![0u8; stride * ctx.object_count()];
    for (o, row) in ctx.rows().iter().enumerate() {
        for j in row.iter() {
            bytes[o * stride + j / 8] |= 0x80 >> (j % 8);
        }
    }
    bytes
}

pub fn unpack_rows(bytes: &[u8], objects: usize, attributes: usize) -> Result<Vec<AttributeSet>> {
    let stride = attributes.div_ceil(8);
    if bytes.len() != stride * objects {
        return Err(Error::Protocol(format!(
            "expected {} row bytes for {objects}x{attributes}, got {}",
            stride * objects,
            bytes.len()
        )));
    }
    Ok((0..objects)
        .map(|o| {
            let row = &bytes[o * stride..(o + 1) * stride];
            AttributeSet::from_indices(
                attributes,
                (0..attributes).filter(|&j| row[j / 8] & (0x80 >> (j % 8)) != 0),
            )
        })
        .collect())
}

impl WirePartition {
    pub fn encode(part: &ContextPartition) -> Self {
        let ctx = part.context();
        Self {
            partition_id: part.id,
            objects: ctx.object_count(),
            attributes: ctx.attribute_count(),
            rows: STANDARD.encode(pack_rows(ctx)),
            object_names: ctx.object_names().to_vec(),
            attribute_names: ctx.attribute_names().to_vec(),
            global_object_ids: part.global_object_ids().to_vec(),
        }
    }

    pub fn decode(&self) -> Result<ContextPartition> {
        let bytes = STANDARD
            .decode(&self.rows)
            .map_err(|e| Error::Protocol(format!("partition {}: bad base64: {e}", self.partition_id)))?;
        if self.attribute_names.len() != self.attributes {
            return Err(Error::Protocol(format!(
                "partition {}: {} attribute names for {} attributes",
                self.partition_id,
                self.attribute_names.len(),
                self.attributes
            )));
        }
        let rows = unpack_rows(&bytes, self.objects, self.attributes)?;
        let ctx = FormalContext::new(self.object_names.clone(), self.attribute_names.clone(), rows)?;
        ContextPartition::new(self.partition_id, ctx, self.global_object_ids.clone())
    }
}

pub fn indices(set: &AttributeSet) -> Vec<usize> {
    set.iter().collect()
}

pub fn set_from_indices(width: usize, idx: &[usize]) -> Result<AttributeSet> {
    if let Some(&bad) = idx.iter().find(|&&j| j >= width) {
        return Err(Error::Protocol(format!("attribute index {bad} out of range 0..{width}")));
    }
    Ok(AttributeSet::from_indices(width, idx.iter().copied()))
}

pub fn attribute(width: usize, j: usize) -> Result<AttributeId> {
    if j < width {
        Ok(AttributeId(j))
    } else {
        Err(Error::Protocol(format!("attribute index {j} out of range 0..{width}")))
    }
}

pub fn write_frame<W: Write>(w: &mut W, msg: &Message) -> Result<usize> {
    let body = serde_json::to_vec(msg)?;
    if body.len() > MAX_FRAME_BYTES {
        return Err(Error::Protocol(format!("frame of {} bytes exceeds limit", body.len())));
    }
    w.write_all(&(body.len() as u32).to_be_bytes())?;
    w.write_all(&body)?;
    w.flush()?;
    Ok(body.len() + 4)
}

/// Reads one raw frame body. `Ok(None)` on a clean end of stream before the
/// length prefix.
pub fn read_raw_frame<R: Read>(r: &mut R) -> Result<Option<Vec<u8>>> {
    let mut len = [0u8; 4];
    match r.read_exact(&mut len) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    let len = u32::from_be_bytes(len) as usize;
    if len > MAX_FRAME_BYTES {
        return Err(Error::Protocol(format!("frame length {len} exceeds limit")));
    }
    let mut body = vec![0u8; len];
    r.read_exact(&mut body)?;
    Ok(Some(body))
}

pub fn decode(body: &[u8]) -> Result<Message> {
    serde_json::from_slice(body).map_err(|e| Error::Protocol(format!("malformed message: {e}")))
}
