//! DC power network model for minimum load shedding on damaged grids.
//!
//! All quantities are per-unit on the case's base MVA. Buses, generators
//! and lines refer to each other by position in the case's vectors; lines
//! additionally carry the 1-based branch row number of the case file as
//! their public id, which damage scenarios use.

pub mod cases;
mod matpower;
mod mls;
mod scenario;

pub use matpower::{parse_matpower_case, ParseError};
pub use mls::{build_fair_mls, build_mls, build_pnorm_mls, solve_mls, MlsModel, MlsSolution, PNorm};
pub use scenario::{
    generate_scenarios, read_scenarios, write_scenarios, DamageScenario, ScenarioConfig, ScenarioGeneration,
    ScenarioSet, DEFAULT_K, SHED_THRESHOLD,
};

use crate::conic::ModelError;
use crate::fairness::FairnessError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("unknown line id {0}")]
    UnknownLine(usize),
    #[error("cannot damage {k} lines: the case has {available} in-service lines")]
    TooManyLines { k: usize, available: usize },
    #[error("scenario file line {line}: {message}")]
    ScenarioFormat { line: usize, message: String },
    #[error("unsupported p = {0}; supported values are 1, 2, 4, 8 and inf")]
    UnsupportedP(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Fairness(#[from] FairnessError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    /// Bus number from the case file.
    pub id: usize,
    /// Active demand; nonpositive values are fixed injections.
    pub demand: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    /// 1-based branch row in the case file.
    pub id: usize,
    pub from: usize,
    pub to: usize,
    pub susceptance: f64,
    /// Thermal limit; infinite when the case gives none.
    pub limit: f64,
    pub in_service: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub bus: usize,
    pub p_min: f64,
    pub p_max: f64,
}

/// A sheddable load; `d_max` is the bus demand.
#[derive(Debug, Clone, PartialEq)]
pub struct Load {
    pub bus: usize,
    pub d_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkCase {
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    pub generators: Vec<Generator>,
    /// The fairness population, in bus order.
    pub loads: Vec<Load>,
}

impl NetworkCase {
    pub fn in_service_lines(&self) -> impl Iterator<Item = &Line> {
        self.lines.iter().filter(|l| l.in_service)
    }

    pub fn line_index(&self, id: usize) -> Option<usize> {
        self.lines.iter().position(|l| l.id == id)
    }

    /// Returns a copy with the given lines taken out of service.
    pub fn apply_damage(&self, scenario: &DamageScenario) -> Result<NetworkCase, GridError> {
        let mut damaged = self.clone();
        for &id in &scenario.lines {
            let k = self.line_index(id).ok_or(GridError::UnknownLine(id))?;
            damaged.lines[k].in_service = false;
        }
        Ok(damaged)
    }

    /// Connected-component label of every bus over in-service lines. Labels
    /// are the lowest bus index in each component.
    pub fn components(&self) -> Vec<usize> {
        let n = self.buses.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for l in self.in_service_lines() {
            let (a, b) = (find(&mut parent, l.from), find(&mut parent, l.to));
            if a != b {
                let (lo, hi) = (a.min(b), a.max(b));
                parent[hi] = lo;
            }
        }
        (0..n).map(|i| find(&mut parent, i)).collect()
    }

    /// Sum of all load demands.
    pub fn total_demand(&self) -> f64 {
        self.loads.iter().map(|l| l.d_max).sum()
    }
}
