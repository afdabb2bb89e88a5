//! Evaluation metrics computed purely from episode traces.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::tasks::{TaskKind, Trace};
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub success: bool,
    pub spl: f64,
    /// Euclidean distance to the goal (or tracked avatar) at the end.
    pub dtg: f64,
    /// Fraction of steps in collision.
    pub cr: f64,
    /// Mean personal-space intrusion per step.
    pub psi: f64,
    /// Fraction of steps satisfying the tracking conditions.
    pub tr: f64,
    /// Number of collision onsets.
    pub cc: usize,
    pub path_length: f64,
    pub shortest_path: f64,
    pub steps: usize,
}

/// `success * l_star / max(l, l_star)`.
pub fn spl(success: bool, path_length: f64, shortest_path: f64) -> f64 {
    if !success {
        return 0.0;
    }
    let denom = path_length.max(shortest_path);
    if denom <= 0.0 {
        1.0
    } else {
        shortest_path / denom
    }
}

/// Number of `false -> true` transitions, counting a collision at the first
/// step as an onset.
pub fn rising_edges(flags: impl IntoIterator<Item = bool>) -> usize {
    let mut prev = false;
    let mut n = 0;
    for f in flags {
        if f && !prev {
            n += 1;
        }
        prev = f;
    }
    n
}

pub fn episode_metrics(trace: &Trace, task: TaskKind) -> Result<EpisodeMetrics, Error> {
    let steps = &trace.steps;
    let last = steps
        .last()
        .ok_or_else(|| Error::Contract("cannot score an empty trace".into()))?;
    let n = steps.len() as f64;
    let success = task != TaskKind::TrackNav && last.success;
    let path_length: f64 = steps.iter().map(|s| s.displacement).sum();
    let shortest_path = trace.header.shortest_path.unwrap_or(0.0);
    let collisions = steps.iter().filter(|s| s.collision).count();
    Ok(EpisodeMetrics {
        success,
        spl: spl(success, path_length, shortest_path),
        dtg: last.goal_dist,
        cr: collisions as f64 / n,
        psi: steps.iter().map(|s| s.intrusion).sum::<f64>() / n,
        tr: steps.iter().filter(|s| s.track).count() as f64 / n,
        cc: rising_edges(steps.iter().map(|s| s.collision)),
        path_length,
        shortest_path,
        steps: steps.len(),
    })
}

/// Means over episodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub episodes: usize,
    pub sr: f64,
    pub spl: f64,
    pub dtg: f64,
    pub cr: f64,
    pub psi: f64,
    pub tr: f64,
    pub cc: f64,
}

pub fn aggregate(records: &[EpisodeMetrics]) -> Result<Summary, Error> {
    if records.is_empty() {
        return Err(Error::Contract("cannot aggregate zero episodes".into()));
    }
    let n = records.len() as f64;
    let mean = |f: fn(&EpisodeMetrics) -> f64| records.iter().map(f).sum::<f64>() / n;
    Ok(Summary {
        episodes: records.len(),
        sr: mean(|m| f64::from(u8::from(m.success))),
        spl: mean(|m| m.spl),
        dtg: mean(|m| m.dtg),
        cr: mean(|m| m.cr),
        psi: mean(|m| m.psi),
        tr: mean(|m| m.tr),
        cc: mean(|m| m.cc as f64),
    })
}

/// Formats a fraction as a percentage with two decimals.
pub fn percent(v: f64) -> String {
    format!("{:.2}%", 100.0 * v)
}

impl Summary {
    pub const CSV_HEADER: &'static str = "episodes,sr,spl,dtg,cr,psi,tr,cc";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4}",
            self.episodes, self.sr, self.spl, self.dtg, self.cr, self.psi, self.tr, self.cc
        )
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "episodes  {}", self.episodes)?;
        writeln!(f, "SR        {}", percent(self.sr))?;
        writeln!(f, "SPL       {}", percent(self.spl))?;
        writeln!(f, "DTG       {:.2} m", self.dtg)?;
        writeln!(f, "CR        {}", percent(self.cr))?;
        writeln!(f, "PSI       {:.4}", self.psi)?;
        writeln!(f, "TR        {}", percent(self.tr))?;
        write!(f, "CC        {:.2}", self.cc)
    }
}

impl EpisodeMetrics {
    pub const CSV_HEADER: &'static str = "success,spl,dtg,cr,psi,tr,cc,path_length,shortest_path,steps";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            u8::from(self.success),
            self.spl,
            self.dtg,
            self.cr,
            self.psi,
            self.tr,
            self.cc,
            self.path_length,
            self.shortest_path,
            self.steps
        )
    }
}
