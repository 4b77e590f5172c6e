#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use sfa_truss::bench::ProblemDefinition;
use sfa_truss::fea::{Element, TrussModel};
use sfa_truss::objective::ConstraintSet;
use sfa_truss::topology::{DesignSpace, GroundStructure};

/// Fully connected `cols x 2` planar grid, pinned at the two bottom corners
/// and loaded downward at the top-right node.
pub fn grid_ground(cols: usize, spacing: f64) -> GroundStructure {
    let nodes: Vec<[f64; 3]> = (0..2)
        .flat_map(|j| (0..cols).map(move |i| [i as f64 * spacing, j as f64 * spacing, 0.0]))
        .collect();
    let n = nodes.len();
    let candidates = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let supports = [(0, 0), (0, 1), (cols - 1, 0), (cols - 1, 1)].into_iter().collect();
    let loads = BTreeMap::from([((n - 1, 1), -10.0)]);
    GroundStructure { dim: 2, nodes, candidates, supports, loads, elastic_modulus: 1e4, weight_density: 0.1 }
}

/// Small problem whose random designs are feasible often enough for the
/// swarm to make progress within a handful of iterations.
pub fn small_problem() -> ProblemDefinition {
    let ground = grid_ground(3, 100.0);
    let el = ground.len();
    ProblemDefinition {
        name: "grid2x3".into(),
        ground,
        space: DesignSpace::independent(el, 0.1, 2.0),
        constraints: ConstraintSet { allowable_stress: 100.0, allowable_displacement: 5.0 },
        units: BTreeMap::new(),
    }
}

pub fn model(nodes: Vec<[f64; 3]>, bars: &[(usize, usize, f64)], supports: &[(usize, usize)], loads: &[((usize, usize), f64)]) -> TrussModel {
    TrussModel {
        dim: 2,
        nodes,
        elements: bars.iter().enumerate().map(|(id, &(a, b, area))| Element { a, b, area, id }).collect(),
        supports: supports.iter().copied().collect::<BTreeSet<_>>(),
        loads: loads.iter().copied().collect(),
        elastic_modulus: 1e4,
        weight_density: 0.1,
    }
}

/// Sample variance computed the long way.
pub fn explicit_variance(scores: &[u8]) -> f64 {
    let n = scores.len() as f64;
    let mean = scores.iter().map(|&s| f64::from(s)).sum::<f64>() / n;
    scores.iter().map(|&s| (f64::from(s) - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Bernoulli shortcut `n m (1 - m) / (n - 1)`.
pub fn shortcut_variance(scores: &[u8]) -> f64 {
    let n = scores.len() as f64;
    let m = scores.iter().map(|&s| f64::from(s)).sum::<f64>() / n;
    n * m * (1.0 - m) / (n - 1.0)
}

/// Largest gap between the two variance forms over every 0/1 sequence of
/// length `2..=max_n`.
pub fn bernoulli_shortcut_gap(max_n: usize) -> f64 {
    let mut worst = 0.0f64;
    for n in 2..=max_n {
        for bits in 0u32..(1 << n) {
            let scores: Vec<u8> = (0..n).map(|k| ((bits >> k) & 1) as u8).collect();
            worst = worst.max((explicit_variance(&scores) - shortcut_variance(&scores)).abs());
        }
    }
    worst
}
