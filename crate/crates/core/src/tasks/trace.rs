//! JSON-lines episode traces: one header line, then one line per step.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::params::{Action, TaskKind};
use super::rewards::RewardBreakdown;
use crate::Error;

pub const TRACE_SCHEMA: &str = "splatnav.trace/1";

/// Ground-plane pose.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub schema: String,
    pub task: TaskKind,
    pub seed: u64,
    pub episode: usize,
    pub start: Pose2,
    pub goal: Option<[f64; 2]>,
    /// Index of the tracked avatar.
    pub target: Option<usize>,
    /// Geodesic start-goal distance at reset.
    pub shortest_path: Option<f64>,
    pub success_distance: f64,
    pub max_steps: usize,
}

/// `+inf` clearance is written as `null`.
mod clearance_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    pub action: Action,
    /// Pose after the step.
    pub pose: Pose2,
    /// Translation actually performed this step, meters.
    pub displacement: f64,
    pub blocked: bool,
    #[serde(with = "clearance_serde")]
    pub clearance: f64,
    pub intrusion: f64,
    pub collision: bool,
    pub track: bool,
    /// Geodesic distance to the goal (PointNav).
    pub d_goal: Option<f64>,
    /// Euclidean distance to the goal or tracked avatar.
    pub goal_dist: f64,
    pub reward: RewardBreakdown,
    pub done: bool,
    pub success: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Line {
    Header(TraceHeader),
    Step(StepRecord),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub header: TraceHeader,
    pub steps: Vec<StepRecord>,
}

impl Trace {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        out.push_str(&serde_json::to_string(&Line::Header(self.header.clone())).expect("header serializes"));
        out.push('\n');
        for s in &self.steps {
            out.push_str(&serde_json::to_string(&Line::Step(s.clone())).expect("step serializes"));
            out.push('\n');
        }
        out
    }

    pub fn write_jsonl(&self, path: impl AsRef<Path>) -> Result<(), Error> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        w.write_all(self.to_jsonl().as_bytes()).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn from_reader(r: impl BufRead) -> Result<Self, Error> {
        let mut header = None;
        let mut steps = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::Trace(format!("line {}: {e}", i + 1)))?;
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<Line>(&line).map_err(|e| Error::Trace(format!("line {}: {e}", i + 1)))? {
                Line::Header(h) if header.is_none() && i == 0 => {
                    if h.schema != TRACE_SCHEMA {
                        return Err(Error::Trace(format!("unsupported trace schema '{}'", h.schema)));
                    }
                    header = Some(h);
                }
                Line::Header(_) => return Err(Error::Trace(format!("line {}: unexpected header", i + 1))),
                Line::Step(s) => steps.push(s),
            }
        }
        let header = header.ok_or_else(|| Error::Trace("trace has no header line".into()))?;
        Ok(Self { header, steps })
    }

    pub fn read_jsonl(path: impl AsRef<Path>) -> Result<Self, Error> {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(BufReader::new(file))
    }

    pub fn actions(&self) -> Vec<Action> {
        self.steps.iter().map(|s| s.action).collect()
    }
}
