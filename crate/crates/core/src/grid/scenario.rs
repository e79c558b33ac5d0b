//! Random line-outage scenarios and their text format.
//!
//! A scenario file starts with `#` header lines, one of which records the
//! generator settings as `key=value` pairs, followed by one scenario per
//! line as comma-separated line ids:
//!
//! ```text
//! # damage scenarios
//! # seed=7 k=5
//! 1,4,7,12,19
//! 2,3,5,11,20
//! ```

use std::collections::HashSet;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{build_mls, solve_mls, GridError, NetworkCase};
use crate::solver::{SolverSettings, Status};

pub const DEFAULT_K: usize = 5;
/// Scenarios are kept when the base shed exceeds this (per-unit).
pub const SHED_THRESHOLD: f64 = 1e-4;

const BATCH: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DamageScenario {
    /// Sorted ids of the removed lines.
    pub lines: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    /// Seed of the generator, when the set was sampled.
    pub seed: Option<u64>,
    pub k: usize,
    pub scenarios: Vec<DamageScenario>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub k: usize,
    pub count: usize,
    pub seed: u64,
    pub threshold: f64,
    /// Number of sampled subsets after which generation gives up; defaults
    /// to `max(50 * count, 2000)`.
    pub max_attempts: Option<usize>,
}

impl ScenarioConfig {
    pub fn new(k: usize, count: usize, seed: u64) -> Self {
        ScenarioConfig {
            k,
            count,
            seed,
            threshold: SHED_THRESHOLD,
            max_attempts: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioGeneration {
    pub set: ScenarioSet,
    /// Sampled subsets, duplicates included.
    pub attempts: usize,
    /// True when the sampling budget or the subset space ran out before
    /// `count` scenarios were found.
    pub exhausted: bool,
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    r
}

/// Samples uniform `k`-subsets of the in-service lines and keeps distinct
/// ones whose base load shed exceeds the threshold. Deterministic for a
/// given seed, independent of the thread count.
pub fn generate_scenarios(
    case: &NetworkCase,
    config: &ScenarioConfig,
    settings: &SolverSettings,
) -> Result<ScenarioGeneration, GridError> {
    let ids: Vec<usize> = case.in_service_lines().map(|l| l.id).collect();
    if config.k == 0 || config.k >= ids.len() {
        return Err(GridError::TooManyLines {
            k: config.k,
            available: ids.len(),
        });
    }
    let budget = config.max_attempts.unwrap_or((50 * config.count).max(2000));
    let space = binomial(ids.len(), config.k);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut seen: HashSet<DamageScenario> = HashSet::new();
    let mut accepted = Vec::with_capacity(config.count);
    let mut attempts = 0;

    while accepted.len() < config.count && attempts < budget && (seen.len() as u128) < space {
        let mut batch = Vec::with_capacity(BATCH);
        while batch.len() < BATCH && attempts + batch.len() < budget {
            let mut lines: Vec<usize> = sample(&mut rng, ids.len(), config.k).into_iter().map(|i| ids[i]).collect();
            lines.sort_unstable();
            batch.push(DamageScenario { lines });
        }
        let fresh: Vec<Option<&DamageScenario>> = {
            let mut local = HashSet::new();
            batch
                .iter()
                .map(|s| (!seen.contains(s) && local.insert(s.clone())).then_some(s))
                .collect()
        };
        let keep: Vec<bool> = fresh
            .par_iter()
            .map(|s| match s {
                Some(s) => base_shed_exceeds(case, s, config.threshold, settings),
                None => false,
            })
            .collect();
        for ((s, f), k) in batch.iter().zip(&fresh).zip(keep) {
            if accepted.len() == config.count {
                break;
            }
            attempts += 1;
            if f.is_some() {
                seen.insert(s.clone());
                if k {
                    accepted.push(s.clone());
                }
            }
        }
    }
    let exhausted = accepted.len() < config.count;
    if exhausted {
        log::warn!(
            "scenario sampling stopped after {attempts} attempts with {} of {} scenarios",
            accepted.len(),
            config.count
        );
    }
    Ok(ScenarioGeneration {
        set: ScenarioSet {
            seed: Some(config.seed),
            k: config.k,
            scenarios: accepted,
        },
        attempts,
        exhausted,
    })
}

fn base_shed_exceeds(case: &NetworkCase, s: &DamageScenario, threshold: f64, settings: &SolverSettings) -> bool {
    let Ok(damaged) = case.apply_damage(s) else {
        return false;
    };
    match solve_mls(&damaged, &build_mls(&damaged), settings) {
        Ok(sol) if sol.status == Status::Optimal => sol.total_shed.is_some_and(|z| z > threshold),
        Ok(sol) => {
            log::debug!("scenario {:?} rejected: base status {}", s.lines, sol.status);
            false
        }
        Err(e) => {
            log::debug!("scenario {:?} rejected: {e}", s.lines);
            false
        }
    }
}

pub fn write_scenarios(set: &ScenarioSet) -> String {
    let mut out = String::from("# damage scenarios\n");
    match set.seed {
        Some(seed) => out.push_str(&format!("# seed={seed} k={}\n", set.k)),
        None => out.push_str(&format!("# k={}\n", set.k)),
    }
    for s in &set.scenarios {
        let ids: Vec<String> = s.lines.iter().map(|i| i.to_string()).collect();
        out.push_str(&ids.join(","));
        out.push('\n');
    }
    out
}

pub fn read_scenarios(text: &str) -> Result<ScenarioSet, GridError> {
    let err = |line: usize, message: String| GridError::ScenarioFormat { line, message };
    let mut seed = None;
    let mut k = None;
    let mut scenarios = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let t = raw.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(header) = t.strip_prefix('#') {
            for pair in header.split_whitespace() {
                let Some((key, value)) = pair.split_once('=') else {
                    continue;
                };
                match key {
                    "seed" => seed = Some(value.parse().map_err(|_| err(line, format!("invalid seed {value:?}")))?),
                    "k" => k = Some(value.parse().map_err(|_| err(line, format!("invalid k {value:?}")))?),
                    _ => {}
                }
            }
            continue;
        }
        let mut ids = Vec::new();
        for tok in t.split(',') {
            let tok = tok.trim();
            ids.push(tok.parse::<usize>().map_err(|_| err(line, format!("invalid line id {tok:?}")))?);
        }
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(err(line, "repeated line id".into()));
        }
        if let Some(k) = k {
            if ids.len() != k {
                return Err(err(line, format!("expected {k} line ids, found {}", ids.len())));
            }
        }
        scenarios.push(DamageScenario { lines: ids });
    }
    let k = k.or_else(|| scenarios.first().map(|s| s.lines.len())).unwrap_or(0);
    Ok(ScenarioSet { seed, k, scenarios })
}
