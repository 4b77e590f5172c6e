//! Design vector to penalized weight: decode, refine, analyze, check.

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::bench::ProblemDefinition;
use crate::fea::{self, AnalysisResult};
use crate::topology::{self, Topology};

/// Objective value assigned to every infeasible design.
pub const INFEASIBLE: f64 = 1e20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub allowable_stress: f64,
    pub allowable_displacement: f64,
}

/// Thread-safe tally of objective evaluations for one run.
#[derive(Debug, Default)]
pub struct EvalCounter(AtomicU64);

impl EvalCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }

    fn bump(&self) {
        self.0.fetch_add(1, Ordering::Relaxed);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub weight: f64,
    pub feasible: bool,
    pub stable: bool,
    pub objective: f64,
    /// Infinite when the refined truss is unstable.
    pub max_abs_stress: f64,
    /// Infinite when the refined truss is unstable.
    pub max_abs_displacement: f64,
    pub refined: Topology,
}

/// Stability plus stress and displacement limits, compared with plain `<=`.
pub fn check_constraints(analysis: &AnalysisResult, constraints: &ConstraintSet) -> bool {
    match (analysis.stable, analysis.max_abs_stress(), analysis.max_abs_displacement()) {
        (true, Some(s), Some(d)) => s <= constraints.allowable_stress && d <= constraints.allowable_displacement,
        _ => false,
    }
}

/// Evaluates one design vector and bumps `counter` by one.
///
/// Panics if `x` does not have one entry per design variable.
pub fn evaluate(x: &[f64], problem: &ProblemDefinition, counter: &EvalCounter) -> EvalResult {
    counter.bump();
    let el = problem.ground.len();
    let decoded = topology::decode(x, &problem.space, el).expect("design vector length must match the design space");
    let model = topology::instantiate(&decoded, &problem.ground);
    let refined = topology::remove_unwanted_elements(&model);
    let weight = fea::self_weight(&refined);
    let analysis = fea::analyze(&refined).expect("models built from a validated ground structure are well formed");
    let feasible = check_constraints(&analysis, &problem.constraints);
    EvalResult {
        weight,
        feasible,
        stable: analysis.stable,
        objective: if feasible { weight } else { INFEASIBLE },
        max_abs_stress: analysis.max_abs_stress().unwrap_or(f64::INFINITY),
        max_abs_displacement: analysis.max_abs_displacement().unwrap_or(f64::INFINITY),
        refined: topology::topology_of(&refined, el),
    }
}
