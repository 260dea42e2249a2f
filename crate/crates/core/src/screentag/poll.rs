//! Periodic app-state polling.
//!
//! Snapshot `k` is taken at logical time `start + k·period`, the first one
//! immediately. A provider failure keeps the last known active set and marks
//! the snapshot stale; it never blanks the tag.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::mpsc::{channel, Receiver, Sender};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant, SystemTime};

use thiserror::Error;

use super::payload::{payload_encode, AppRegistry};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PollError {
    #[error("app-state provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("period must be positive and finite, got {0}")]
    BadPeriod(f64),
}

/// Logical time source in seconds.
pub trait Clock: Send {
    fn now(&self) -> f64;
    /// Blocks (or advances, for simulated clocks) until `now() >= t`.
    fn sleep_until(&self, t: f64);
}

/// Time that only moves when a poller waits on it. Clones share the same time.
#[derive(Clone, Debug, Default)]
pub struct SimulatedClock {
    now: Arc<Mutex<f64>>,
}

impl SimulatedClock {
    pub fn new(start: f64) -> Self {
        Self {
            now: Arc::new(Mutex::new(start)),
        }
    }
}

impl Clock for SimulatedClock {
    fn now(&self) -> f64 {
        *self.now.lock().expect("clock lock poisoned")
    }

    fn sleep_until(&self, t: f64) {
        let mut now = self.now.lock().expect("clock lock poisoned");
        if *now < t {
            *now = t;
        }
    }
}

/// Wall-clock time measured from construction.
#[derive(Clone, Debug)]
pub struct SystemClock {
    start: Instant,
}

impl Default for SystemClock {
    fn default() -> Self {
        Self {
            start: Instant::now(),
        }
    }
}

impl Clock for SystemClock {
    fn now(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    fn sleep_until(&self, t: f64) {
        let wait = t - self.now();
        if wait > 0.0 {
            thread::sleep(Duration::from_secs_f64(wait));
        }
    }
}

/// Answers which applications are active at logical time `t`.
pub trait StateProvider: Send {
    fn active_apps(&mut self, t: f64) -> Result<Vec<String>, PollError>;
}

/// Piecewise-constant state: each step sets the active set from its time on.
/// Outage windows `[from, to)` make the provider fail.
#[derive(Clone, Debug, Default)]
pub struct ScriptedProvider {
    steps: Vec<(f64, Vec<String>)>,
    outages: Vec<(f64, f64)>,
}

impl ScriptedProvider {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn at<S: AsRef<str>>(mut self, t: f64, active: &[S]) -> Self {
        self.steps
            .push((t, active.iter().map(|s| s.as_ref().to_string()).collect()));
        self.steps.sort_by(|a, b| a.0.total_cmp(&b.0));
        self
    }

    pub fn outage(mut self, from: f64, to: f64) -> Self {
        self.outages.push((from, to));
        self
    }
}

impl StateProvider for ScriptedProvider {
    fn active_apps(&mut self, t: f64) -> Result<Vec<String>, PollError> {
        if self.outages.iter().any(|&(a, b)| t >= a && t < b) {
            return Err(PollError::ProviderUnavailable(format!(
                "scripted outage at t={t}"
            )));
        }
        Ok(self
            .steps
            .iter()
            .rev()
            .find(|(at, _)| *at <= t)
            .map(|(_, s)| s.clone())
            .unwrap_or_default())
    }
}

/// Reads a text file holding one active app identifier per line. The file is
/// re-read only when its modification time or length changes.
#[derive(Debug)]
pub struct FileStateProvider {
    path: PathBuf,
    stamp: Option<(SystemTime, u64)>,
    cached: Vec<String>,
}

impl FileStateProvider {
    pub fn new(path: impl AsRef<Path>) -> Self {
        Self {
            path: path.as_ref().to_path_buf(),
            stamp: None,
            cached: Vec::new(),
        }
    }
}

pub fn parse_state_file(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_lowercase)
        .collect()
}

impl StateProvider for FileStateProvider {
    fn active_apps(&mut self, _t: f64) -> Result<Vec<String>, PollError> {
        let unavailable = |e: std::io::Error| {
            PollError::ProviderUnavailable(format!("{}: {e}", self.path.display()))
        };
        let meta = fs::metadata(&self.path).map_err(unavailable)?;
        let stamp = (meta.modified().map_err(unavailable)?, meta.len());
        if self.stamp != Some(stamp) {
            let text = fs::read_to_string(&self.path).map_err(unavailable)?;
            self.cached = parse_state_file(&text);
            self.stamp = Some(stamp);
        }
        Ok(self.cached.clone())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub index: u64,
    pub timestamp: f64,
    pub payload: Vec<u8>,
    /// Active registry apps, in registry order.
    pub active: Vec<String>,
    /// The provider failed; `active` is the last known state.
    pub stale: bool,
}

pub struct Poller<C: Clock, P: StateProvider> {
    clock: C,
    provider: P,
    registry: AppRegistry,
    period: f64,
    start: f64,
    next_index: u64,
    last_active: Vec<String>,
}

impl<C: Clock, P: StateProvider> Poller<C, P> {
    pub fn new(
        clock: C,
        provider: P,
        registry: AppRegistry,
        period: f64,
    ) -> Result<Self, PollError> {
        if !(period.is_finite() && period > 0.0) {
            return Err(PollError::BadPeriod(period));
        }
        let start = clock.now();
        Ok(Self {
            clock,
            provider,
            registry,
            period,
            start,
            next_index: 0,
            last_active: Vec::new(),
        })
    }

    /// Logical time of the next snapshot.
    pub fn next_time(&self) -> f64 {
        self.start + self.next_index as f64 * self.period
    }

    /// Waits for the next scheduled time and takes a snapshot.
    pub fn tick(&mut self) -> Snapshot {
        let t = self.next_time();
        self.clock.sleep_until(t);
        let stale = match self.provider.active_apps(t) {
            Ok(apps) => {
                self.last_active = self.in_registry(apps);
                false
            }
            Err(e) => {
                log::warn!("{e}; keeping last known state");
                true
            }
        };
        let payload = payload_encode(&self.registry, &self.last_active)
            .expect("active set is filtered to the registry");
        let snap = Snapshot {
            index: self.next_index,
            timestamp: t,
            payload,
            active: self.last_active.clone(),
            stale,
        };
        self.next_index += 1;
        snap
    }

    fn in_registry(&self, apps: Vec<String>) -> Vec<String> {
        let mut known: Vec<usize> = apps
            .iter()
            .filter_map(|a| {
                let i = self.registry.index_of(a);
                if i.is_none() {
                    log::debug!("ignoring unregistered app '{a}'");
                }
                i
            })
            .collect();
        known.sort_unstable();
        known.dedup();
        known
            .into_iter()
            .filter_map(|i| self.registry.name(i).map(str::to_string))
            .collect()
    }

    /// Sends snapshots until one scheduled after `until` would be next, or the
    /// receiver hangs up. Returns the number sent.
    pub fn run_until(&mut self, until: f64, tx: &Sender<Snapshot>) -> u64 {
        let mut sent = 0;
        while self.next_time() <= until + 1e-9 {
            if tx.send(self.tick()).is_err() {
                break;
            }
            sent += 1;
        }
        sent
    }

    /// Sends `count` snapshots, or runs until the receiver hangs up when `None`.
    pub fn run(&mut self, count: Option<u64>, tx: &Sender<Snapshot>) -> u64 {
        let mut sent = 0;
        while count.is_none_or(|c| sent < c) {
            if tx.send(self.tick()).is_err() {
                break;
            }
            sent += 1;
        }
        sent
    }
}

/// Runs a poller on its own thread and returns the ordered snapshot stream.
pub fn spawn_poller<C, P>(mut poller: Poller<C, P>, count: Option<u64>) -> Receiver<Snapshot>
where
    C: Clock + 'static,
    P: StateProvider + 'static,
{
    let (tx, rx) = channel();
    thread::spawn(move || {
        poller.run(count, &tx);
    });
    rx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::screentag::payload::payload_decode;

    fn registry() -> AppRegistry {
        AppRegistry::new(["gmail", "facebook", "messenger"]).unwrap()
    }

    #[test]
    fn five_seconds_gives_six_snapshots() {
        let clock = SimulatedClock::new(0.0);
        let mut p = Poller::new(clock.clone(), ScriptedProvider::new(), registry(), 1.0).unwrap();
        let (tx, rx) = channel();
        assert_eq!(p.run_until(5.0, &tx), 6);
        drop(tx);
        let times: Vec<f64> = rx.iter().map(|s| s.timestamp).collect();
        assert_eq!(times, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(clock.now(), 5.0);
    }

    #[test]
    fn change_visible_at_next_tick() {
        let provider = ScriptedProvider::new().at(2.5, &["gmail"]);
        let mut p = Poller::new(SimulatedClock::new(0.0), provider, registry(), 1.0).unwrap();
        let snaps: Vec<Snapshot> = (0..4).map(|_| p.tick()).collect();
        assert_eq!(snaps[2].payload, vec![0x53, 0x01, 0x03, 0x00]);
        assert_eq!(snaps[3].payload, vec![0x53, 0x01, 0x03, 0x01]);
        assert_eq!(snaps[3].active, vec!["gmail"]);
    }

    #[test]
    fn outage_keeps_last_state_and_flags_stale() {
        let provider = ScriptedProvider::new()
            .at(0.0, &["messenger", "gmail"])
            .outage(1.0, 3.0);
        let mut p = Poller::new(SimulatedClock::new(0.0), provider, registry(), 1.0).unwrap();
        let snaps: Vec<Snapshot> = (0..4).map(|_| p.tick()).collect();
        assert_eq!(
            snaps.iter().map(|s| s.stale).collect::<Vec<_>>(),
            vec![false, true, true, false]
        );
        for s in &snaps {
            assert_eq!(s.active, vec!["gmail", "messenger"]);
            assert_eq!(payload_decode(&s.payload).unwrap().active, vec![0, 2]);
        }
    }

    #[test]
    fn non_unit_period_and_offset_start() {
        let mut p = Poller::new(
            SimulatedClock::new(10.0),
            ScriptedProvider::new(),
            registry(),
            0.5,
        )
        .unwrap();
        let (tx, rx) = channel();
        assert_eq!(p.run_until(11.0, &tx), 3);
        drop(tx);
        assert_eq!(
            rx.iter().map(|s| s.timestamp).collect::<Vec<_>>(),
            vec![10.0, 10.5, 11.0]
        );
        assert!(Poller::new(
            SimulatedClock::new(0.0),
            ScriptedProvider::new(),
            registry(),
            0.0
        )
        .is_err());
    }

    #[test]
    fn spawned_stream_is_ordered() {
        let p = Poller::new(
            SimulatedClock::new(0.0),
            ScriptedProvider::new(),
            registry(),
            1.0,
        )
        .unwrap();
        let rx = spawn_poller(p, Some(4));
        assert_eq!(
            rx.iter().map(|s| s.index).collect::<Vec<_>>(),
            vec![0, 1, 2, 3]
        );
    }

    #[test]
    fn file_provider_rereads_on_change() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.txt");
        let mut fp = FileStateProvider::new(&path);
        assert!(matches!(
            fp.active_apps(0.0),
            Err(PollError::ProviderUnavailable(_))
        ));
        fs::write(&path, "gmail\n\n  Messenger \n").unwrap();
        assert_eq!(fp.active_apps(0.0).unwrap(), vec!["gmail", "messenger"]);
        fs::write(&path, "facebook\n").unwrap();
        assert_eq!(fp.active_apps(1.0).unwrap(), vec!["facebook"]);
    }
}
