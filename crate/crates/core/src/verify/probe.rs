//! Scripted interleavings. One driven thread runs a check/insert and stops
//! at every protocol pause point; the script thread decides when it moves
//! on and, in between, inserts, looks up, and records the trie's shape.
//!
//! Script text, one command per line (`#` starts a comment):
//!
//! ```text
//! spawn 56                  # driven thread starts insert_or_get(56, 56)
//! await post-expansion-cas  # block until it pauses exactly there
//! capture expanded          # record the shape under a label
//! run-to post-chain-break   # resume, skipping other pauses, until this one
//! insert 168                # insert from the script thread
//! lookup 104
//! resume
//! finish                    # let the driven insert complete
//! ```

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::Arc;
use std::thread::{self, ThreadId};
use std::time::Duration;

use parking_lot::Mutex;
use thiserror::Error;

use super::shape::Shape;
use super::validate::{validate, ValidationReport};
use crate::config::Config;
use crate::hash::IdentityHash;
use crate::map::{PausePoint, ProtocolHook, TrieMap, UnknownPausePoint};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Spawn(u64),
    Await(PausePoint),
    Resume,
    RunTo(PausePoint),
    Insert(u64),
    Lookup(u64),
    Capture(String),
    Finish,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScriptError {
    #[error(transparent)]
    UnknownPausePoint(#[from] UnknownPausePoint),
    #[error("line {line}: unknown command `{command}`")]
    UnknownCommand { line: usize, command: String },
    #[error("line {line}: bad or missing argument")]
    BadArgument { line: usize },
    #[error("step {step}: no driven thread is running")]
    NotRunning { step: usize },
    #[error("step {step}: a driven thread is already running")]
    AlreadyRunning { step: usize },
    #[error("step {step}: expected pause at {expected}, thread paused at {got}")]
    UnexpectedPause {
        step: usize,
        expected: PausePoint,
        got: PausePoint,
    },
    #[error("step {step}: driven thread finished before reaching {expected}")]
    Finished { step: usize, expected: PausePoint },
    #[error("step {step}: driven thread did not respond")]
    Timeout { step: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Script {
    pub steps: Vec<Step>,
}

impl Script {
    pub fn new(steps: Vec<Step>) -> Self {
        Script { steps }
    }

    pub fn parse(text: &str) -> Result<Self, ScriptError> {
        let mut steps = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw.split('#').next().unwrap_or("").trim();
            if l.is_empty() {
                continue;
            }
            let mut words = l.split_whitespace();
            let cmd = words.next().unwrap();
            let arg = words.next();
            let key = || -> Result<u64, ScriptError> {
                arg.and_then(|a| a.parse().ok())
                    .ok_or(ScriptError::BadArgument { line })
            };
            let point = || -> Result<PausePoint, ScriptError> {
                Ok(arg.ok_or(ScriptError::BadArgument { line })?.parse()?)
            };
            steps.push(match cmd {
                "spawn" => Step::Spawn(key()?),
                "await" => Step::Await(point()?),
                "resume" => Step::Resume,
                "run-to" => Step::RunTo(point()?),
                "insert" => Step::Insert(key()?),
                "lookup" => Step::Lookup(key()?),
                "capture" => Step::Capture(
                    arg.ok_or(ScriptError::BadArgument { line })?.to_string(),
                ),
                "finish" => Step::Finish,
                other => {
                    return Err(ScriptError::UnknownCommand {
                        line,
                        command: other.to_string(),
                    })
                }
            });
        }
        Ok(Script { steps })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceEvent {
    Paused(PausePoint),
    Captured(String),
    Inserted { key: u64, inserted: bool },
    Looked { key: u64, found: bool, restarts: u64 },
    Finished { key: u64, inserted: bool },
}

#[derive(Debug, Clone)]
pub struct Trace {
    pub events: Vec<TraceEvent>,
    pub shapes: HashMap<String, Shape<u64>>,
    /// Shape and validation once the script has run and the driven thread
    /// has been released.
    pub final_shape: Shape<u64>,
    pub final_report: ValidationReport,
}

impl Trace {
    pub fn shape(&self, label: &str) -> &Shape<u64> {
        self.shapes
            .get(label)
            .unwrap_or_else(|| panic!("no capture named `{label}`"))
    }

    pub fn pauses(&self) -> Vec<PausePoint> {
        self.events
            .iter()
            .filter_map(|e| match e {
                TraceEvent::Paused(p) => Some(*p),
                _ => None,
            })
            .collect()
    }

    /// Found flag and restart count of the `nth` lookup of `key`.
    pub fn lookup(&self, key: u64) -> Option<(bool, u64)> {
        self.events.iter().find_map(|e| match *e {
            TraceEvent::Looked {
                key: k,
                found,
                restarts,
            } if k == key => Some((found, restarts)),
            _ => None,
        })
    }
}

enum Msg {
    Paused(PausePoint),
    Done(bool),
}

struct ProbeHook {
    driven: Mutex<Option<ThreadId>>,
    released: AtomicBool,
    events: Mutex<Sender<Msg>>,
    resume: Mutex<Receiver<()>>,
}

impl ProtocolHook for ProbeHook {
    fn reached(&self, point: PausePoint) {
        if *self.driven.lock() != Some(thread::current().id())
            || self.released.load(Ordering::Acquire)
        {
            return;
        }
        if self.events.lock().send(Msg::Paused(point)).is_err() {
            return;
        }
        let _ = self.resume.lock().recv();
    }
}

const PATIENCE: Duration = Duration::from_secs(10);

/// Runs `script` against a fresh instrumented map with identity hashing,
/// preloaded sequentially with `preload` (each key maps to itself).
pub fn interleave_probe(config: Config, preload: &[u64], script: &Script) -> Result<Trace, ScriptError> {
    let (event_tx, event_rx) = mpsc::channel();
    let (resume_tx, resume_rx) = mpsc::channel();
    let hook = Arc::new(ProbeHook {
        driven: Mutex::new(None),
        released: AtomicBool::new(false),
        events: Mutex::new(event_tx.clone()),
        resume: Mutex::new(resume_rx),
    });
    let map: TrieMap<u64, u64, IdentityHash> = TrieMap::new(config.instrumented())
        .expect("valid probe config")
        .with_hook(hook.clone());
    for &k in preload {
        map.insert_or_get(k, k);
    }

    let mut events = Vec::new();
    let mut shapes = HashMap::new();
    let result = thread::scope(|s| {
        let mut driven: Option<(u64, thread::ScopedJoinHandle<'_, ()>)> = None;
        let mut paused = false;
        let recv = |step: usize| -> Result<Msg, ScriptError> {
            event_rx.recv_timeout(PATIENCE).map_err(|e| match e {
                RecvTimeoutError::Timeout | RecvTimeoutError::Disconnected => {
                    ScriptError::Timeout { step }
                }
            })
        };

        let outcome = (|| {
            for (step, st) in script.steps.iter().enumerate() {
                match st {
                    Step::Spawn(key) => {
                        if driven.is_some() {
                            return Err(ScriptError::AlreadyRunning { step });
                        }
                        let (map, hook, tx, key) = (&map, &hook, event_tx.clone(), *key);
                        let h = s.spawn(move || {
                            *hook.driven.lock() = Some(thread::current().id());
                            let inserted = map.insert_or_get(key, key).inserted;
                            *hook.driven.lock() = None;
                            let _ = tx.send(Msg::Done(inserted));
                        });
                        driven = Some((key, h));
                    }
                    Step::Await(expected) | Step::RunTo(expected) => {
                        if driven.is_none() {
                            return Err(ScriptError::NotRunning { step });
                        }
                        let skip = matches!(st, Step::RunTo(_));
                        loop {
                            if paused {
                                let _ = resume_tx.send(());
                                paused = false;
                            }
                            match recv(step)? {
                                Msg::Paused(got) => {
                                    paused = true;
                                    if got == *expected {
                                        events.push(TraceEvent::Paused(got));
                                        break;
                                    }
                                    if !skip {
                                        return Err(ScriptError::UnexpectedPause {
                                            step,
                                            expected: *expected,
                                            got,
                                        });
                                    }
                                }
                                Msg::Done(inserted) => {
                                    let (key, h) = driven.take().unwrap();
                                    h.join().expect("driven thread panicked");
                                    events.push(TraceEvent::Finished { key, inserted });
                                    return Err(ScriptError::Finished {
                                        step,
                                        expected: *expected,
                                    });
                                }
                            }
                            if !skip {
                                break;
                            }
                        }
                    }
                    Step::Resume => {
                        if driven.is_none() {
                            return Err(ScriptError::NotRunning { step });
                        }
                        if paused {
                            let _ = resume_tx.send(());
                            paused = false;
                        }
                    }
                    Step::Finish => {
                        let Some((key, h)) = driven.take() else {
                            return Err(ScriptError::NotRunning { step });
                        };
                        loop {
                            if paused {
                                let _ = resume_tx.send(());
                                paused = false;
                            }
                            match recv(step)? {
                                Msg::Paused(_) => paused = true,
                                Msg::Done(inserted) => {
                                    h.join().expect("driven thread panicked");
                                    events.push(TraceEvent::Finished { key, inserted });
                                    break;
                                }
                            }
                        }
                    }
                    Step::Insert(key) => {
                        let inserted = map.insert_or_get(*key, *key).inserted;
                        events.push(TraceEvent::Inserted {
                            key: *key,
                            inserted,
                        });
                    }
                    Step::Lookup(key) => {
                        let before = map.debug_stats().map(|s| s.restarts).unwrap_or(0);
                        let found = map.lookup(key) == Some(key);
                        let after = map.debug_stats().map(|s| s.restarts).unwrap_or(0);
                        events.push(TraceEvent::Looked {
                            key: *key,
                            found,
                            restarts: after - before,
                        });
                    }
                    Step::Capture(label) => {
                        shapes.insert(label.clone(), Shape::capture(&map));
                        events.push(TraceEvent::Captured(label.clone()));
                    }
                }
            }
            Ok(())
        })();

        // Let a still-running driven thread complete so the scope can join.
        hook.released.store(true, Ordering::Release);
        if driven.is_some() {
            let _ = resume_tx.send(());
        }
        outcome
    });
    result?;

    let oracle: HashMap<u64, u64> = map.snapshot_keys().map(|(&k, &v)| (k, v)).collect();
    Ok(Trace {
        events,
        shapes,
        final_shape: Shape::capture(&map),
        final_report: validate(&map, Some(&oracle)),
    })
}
