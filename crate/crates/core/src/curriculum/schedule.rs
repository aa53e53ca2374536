use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::data::select_train_snr;
use crate::construction::{n2c_order, CodeSpec};
use crate::{rng, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    /// Ascending index order.
    L2r,
    /// Descending index order.
    R2l,
    /// Least reliable first.
    N2c,
    /// Most reliable first.
    C2n,
    /// Seeded random order.
    Random,
    /// Full code from the start.
    None,
}

impl std::str::FromStr for ScheduleKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_lowercase()))
            .map_err(|_| crate::Error::Config(format!("unknown curriculum kind '{s}'")))
    }
}

/// How each step's training SNR is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnrPolicy {
    Fixed(f64),
    /// Per-step search for SC BER in `[1e-2, 1e-1]`.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurriculumStep {
    /// Sorted 1-based active indices.
    pub active_set: Vec<usize>,
    pub iterations: usize,
    pub train_snr_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurriculumSchedule {
    pub kind: ScheduleKind,
    pub steps: Vec<CurriculumStep>,
    pub seed: u64,
}

impl CurriculumSchedule {
    pub fn total_iterations(&self) -> usize {
        self.steps.iter().map(|s| s.iterations).sum()
    }

    /// Order in which information indices become active.
    pub fn visit_order(&self) -> Vec<usize> {
        let mut seen: Vec<usize> = Vec::new();
        for step in &self.steps {
            for &i in &step.active_set {
                if !seen.contains(&i) {
                    seen.push(i);
                }
            }
        }
        seen
    }
}

fn order_for(spec: &CodeSpec, kind: ScheduleKind, seed: u64) -> Vec<usize> {
    match kind {
        ScheduleKind::L2r | ScheduleKind::None => spec.info_set.clone(),
        ScheduleKind::R2l => spec.info_set.iter().rev().copied().collect(),
        ScheduleKind::N2c => n2c_order(spec),
        ScheduleKind::C2n => n2c_order(spec).into_iter().rev().collect(),
        ScheduleKind::Random => {
            let mut order = spec.info_set.clone();
            order.shuffle(&mut rng::derive(seed, &[0x5c4e]));
            order
        }
    }
}

/// Build the curriculum. Every step but the last trains for
/// `iters_per_step` iterations; the last (full-code) step for `final_iters`.
pub fn make_schedule(
    spec: &CodeSpec,
    kind: ScheduleKind,
    iters_per_step: usize,
    final_iters: usize,
    snr: SnrPolicy,
    seed: u64,
) -> Result<CurriculumSchedule> {
    let sets: Vec<Vec<usize>> = if kind == ScheduleKind::None {
        vec![spec.info_set.clone()]
    } else {
        let order = order_for(spec, kind, seed);
        (1..=order.len())
            .map(|j| {
                let mut set = order[..j].to_vec();
                set.sort_unstable();
                set
            })
            .collect()
    };
    let last = sets.len() - 1;
    let steps = sets
        .into_iter()
        .enumerate()
        .map(|(j, active_set)| {
            let train_snr_db = match snr {
                SnrPolicy::Fixed(db) => db,
                SnrPolicy::Auto => select_train_snr(spec, &active_set, seed ^ j as u64)?,
            };
            Ok(CurriculumStep {
                iterations: if j == last { final_iters } else { iters_per_step },
                active_set,
                train_snr_db,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CurriculumSchedule { kind, steps, seed })
}
