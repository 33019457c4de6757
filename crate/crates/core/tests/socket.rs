//! Socket runtime against real `fcamr worker` processes.

use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};
use std::time::Duration;

use fcamr::fixtures::random_context;
use fcamr::mr::{self, MrOptions};
use fcamr::partition::{split, SplitStrategy};
use fcamr::runtime::protocol::{self, Message};
use fcamr::runtime::{configure, DynamicItem, DynamicPayload, JobKind, Mode};
use fcamr::{AttributeSet, Error, FormalContext};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Worker {
    child: Child,
    addr: String,
}

impl Worker {
    fn start() -> Self {
        let mut child = Command::new(env!("CARGO_BIN_EXE_fcamr"))
            .args(["worker", "--listen", "127.0.0.1:0"])
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .expect("spawn worker");
        let mut line = String::new();
        BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
        let addr = line.trim().strip_prefix("listening on ").expect("address line").to_string();
        Self { child, addr }
    }

    fn wait_exit(mut self) -> bool {
        for _ in 0..100 {
            if let Some(status) = self.child.try_wait().unwrap() {
                return status.success();
            }
            std::thread::sleep(Duration::from_millis(50));
        }
        panic!("worker {} did not exit", self.addr);
    }
}

impl Drop for Worker {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn fixed_context() -> FormalContext {
    let mut rng = ChaCha8Rng::seed_from_u64(50_30);
    random_context(&mut rng, 50, 30, 0.3)
}

#[test]
fn output_is_identical_across_workers_and_modes() {
    let ctx = fixed_context();
    let parts = split(&ctx, 4, SplitStrategy::RoundRobin).unwrap();
    let opts = MrOptions::default();
    let reference = mr::run(JobKind::MrGanterPlus, &parts, 1, Mode::InProcess, &opts).unwrap();
    for workers in [1, 2, 4] {
        let local = mr::run(JobKind::MrGanterPlus, &parts, workers, Mode::InProcess, &opts).unwrap();
        assert_eq!(local.intents, reference.intents, "local, {workers} workers");

        let procs: Vec<Worker> = (0..workers).map(|_| Worker::start()).collect();
        let addrs = procs.iter().map(|w| w.addr.clone()).collect();
        let remote = mr::run(JobKind::MrGanterPlus, &parts, workers, Mode::Socket(addrs), &opts).unwrap();
        assert_eq!(remote.intents, reference.intents, "socket, {workers} workers");
        assert_eq!(remote.batch_sizes, reference.batch_sizes);
        assert!(remote.transfer.static_sends.values().all(|&s| s == 1));
        assert_eq!(remote.transfer.static_sends.len(), 4);
        for w in procs {
            assert!(w.wait_exit(), "worker exits cleanly after SHUTDOWN");
        }
    }
}

#[test]
fn status_reports_one_configure() {
    let ctx = fixed_context();
    let parts = split(&ctx, 3, SplitStrategy::Contiguous).unwrap();
    let procs: Vec<Worker> = (0..2).map(|_| Worker::start()).collect();
    let addrs: Vec<String> = procs.iter().map(|w| w.addr.clone()).collect();
    let mut handle = configure(&parts, 2, Mode::Socket(addrs.clone())).unwrap();
    let empty = AttributeSet::empty(30);
    for iteration in 0..3 {
        let payload = DynamicPayload { iteration, items: vec![DynamicItem::intent(empty.clone())] };
        handle.run_iteration(JobKind::MrGanter, &payload).unwrap();
    }
    let status = handle.status().unwrap();
    assert_eq!(status.len(), 2);
    assert_eq!(status[0].worker, addrs[0]);
    assert_eq!(status[0].partitions, vec![0]);
    assert_eq!(status[1].partitions, vec![1, 2]);
    assert!(status.iter().all(|s| s.configures == 1));
    assert!(handle.transfer_stats().static_sends.values().all(|&s| s == 1));
    assert_eq!(handle.transfer_stats().iterations, 3);
    handle.shutdown().unwrap();
}

#[test]
fn killed_worker_is_reported_by_address() {
    let ctx = fixed_context();
    let parts = split(&ctx, 2, SplitStrategy::Contiguous).unwrap();
    let mut procs: Vec<Worker> = (0..2).map(|_| Worker::start()).collect();
    let addrs: Vec<String> = procs.iter().map(|w| w.addr.clone()).collect();
    let mut handle = configure(&parts, 2, Mode::Socket(addrs.clone())).unwrap();
    procs[1].child.kill().unwrap();
    procs[1].child.wait().unwrap();
    let payload = DynamicPayload { iteration: 0, items: vec![DynamicItem::intent(AttributeSet::empty(30))] };
    match handle.run_iteration(JobKind::MrGanterPlus, &payload) {
        Err(Error::Worker { worker, .. }) => assert_eq!(worker, addrs[1]),
        other => panic!("expected a worker error, got {other:?}"),
    }
}

#[test]
fn malformed_frame_then_shutdown() {
    let w = Worker::start();
    let mut s = TcpStream::connect(&w.addr).unwrap();
    let junk = b"not json";
    s.write_all(&(junk.len() as u32).to_be_bytes()).unwrap();
    s.write_all(junk).unwrap();
    let reply = protocol::decode(&protocol::read_raw_frame(&mut s).unwrap().unwrap()).unwrap();
    assert!(matches!(reply, Message::Error { .. }), "{reply:?}");

    protocol::write_frame(&mut s, &Message::Shutdown).unwrap();
    let reply = protocol::decode(&protocol::read_raw_frame(&mut s).unwrap().unwrap()).unwrap();
    assert!(matches!(reply, Message::Status { ok: true, configures: 0, .. }), "{reply:?}");
    assert!(w.wait_exit());
}
