//! Ground structures, design-variable decoding, and element-removal refinement.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::fea::{Element, TrussModel};

/// Two members are treated as collinear below this angle (radians).
pub const COLLINEAR_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("design vector has length {got}, expected {expected}")]
    Length { got: usize, expected: usize },
    #[error("invalid design space: {0}")]
    Space(String),
    #[error("invalid ground structure: {0}")]
    Ground(String),
}

/// Candidate members over a fixed node set, with supports and loads.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundStructure {
    pub dim: usize,
    pub nodes: Vec<[f64; 3]>,
    pub candidates: Vec<(usize, usize)>,
    pub supports: BTreeSet<(usize, usize)>,
    pub loads: BTreeMap<(usize, usize), f64>,
    pub elastic_modulus: f64,
    pub weight_density: f64,
}

impl GroundStructure {
    pub fn validate(&self) -> Result<(), TopologyError> {
        let mut seen = BTreeSet::new();
        for (k, &(a, b)) in self.candidates.iter().enumerate() {
            if a >= self.nodes.len() || b >= self.nodes.len() {
                return Err(TopologyError::Ground(format!("candidate {} references a missing node", k + 1)));
            }
            let len2: f64 = (0..3).map(|d| (self.nodes[a][d] - self.nodes[b][d]).powi(2)).sum();
            if a == b || len2 == 0.0 {
                return Err(TopologyError::Ground(format!("candidate {} has zero length", k + 1)));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(TopologyError::Ground(format!("candidate {} is a duplicate", k + 1)));
            }
        }
        if self.supports.is_empty() || self.loads.is_empty() {
            return Err(TopologyError::Ground("needs at least one support and one load".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// Bounds and symmetry grouping of the area design variables.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignSpace {
    pub low: Vec<f64>,
    pub up: Vec<f64>,
    pub a_min: f64,
    pub a_max: f64,
    /// Candidate indices controlled by each variable.
    pub groups: Vec<Vec<usize>>,
}

impl DesignSpace {
    /// One variable per candidate with symmetric bounds `[-a_max, a_max]`.
    pub fn independent(el: usize, a_min: f64, a_max: f64) -> Self {
        Self::grouped((0..el).map(|e| vec![e]).collect(), a_min, a_max)
    }

    pub fn grouped(groups: Vec<Vec<usize>>, a_min: f64, a_max: f64) -> Self {
        let d = groups.len();
        DesignSpace { low: vec![-a_max; d], up: vec![a_max; d], a_min, a_max, groups }
    }

    pub fn dim(&self) -> usize {
        self.groups.len()
    }

    pub fn validate(&self, el: usize) -> Result<(), TopologyError> {
        let bad = |m: &str| Err(TopologyError::Space(m.to_string()));
        if self.low.len() != self.dim() || self.up.len() != self.dim() {
            return bad("bounds length differs from variable count");
        }
        if self.low.iter().zip(&self.up).any(|(l, u)| !(l < u)) {
            return bad("every lower bound must be below its upper bound");
        }
        if !(0.0 <= self.a_min && self.a_min <= self.a_max) {
            return bad("area limits must satisfy 0 <= a_min <= a_max");
        }
        let mut owner = vec![0usize; el];
        for g in &self.groups {
            for &e in g {
                if e >= el {
                    return bad("symmetry group references a missing candidate");
                }
                owner[e] += 1;
            }
        }
        if owner.iter().any(|&c| c != 1) {
            return bad("every candidate must be controlled by exactly one variable");
        }
        Ok(())
    }

    /// Maps one variable value to an area.
    pub fn area_of(&self, x: f64) -> f64 {
        if x < self.a_min {
            0.0
        } else if x > self.a_max {
            self.a_max
        } else {
            x
        }
    }

    /// Diagonal length of the search box.
    pub fn max_distance(&self) -> f64 {
        self.low.iter().zip(&self.up).map(|(l, u)| (u - l).powi(2)).sum::<f64>().sqrt()
    }
}

/// Areas over all candidates; absent members carry zero area.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub present: Vec<bool>,
    pub areas: Vec<f64>,
}

impl Topology {
    pub fn from_areas(areas: Vec<f64>) -> Self {
        Topology { present: areas.iter().map(|&a| a > 0.0).collect(), areas }
    }

    pub fn count(&self) -> usize {
        self.present.iter().filter(|&&p| p).count()
    }
}

pub fn decode(x: &[f64], space: &DesignSpace, el: usize) -> Result<Topology, TopologyError> {
    if x.len() != space.dim() {
        return Err(TopologyError::Length { got: x.len(), expected: space.dim() });
    }
    let mut areas = vec![0.0; el];
    for (g, &xk) in space.groups.iter().zip(x) {
        let a = space.area_of(xk);
        for &e in g {
            areas[e] = a;
        }
    }
    Ok(Topology::from_areas(areas))
}

/// Builds a model from the present members. Nodes without members are
/// dropped unless they carry a load, in which case they stay as a
/// disconnected mechanism the analysis will reject.
pub fn instantiate(topology: &Topology, ground: &GroundStructure) -> TrussModel {
    let mut keep = vec![false; ground.nodes.len()];
    for (e, &(a, b)) in ground.candidates.iter().enumerate() {
        if topology.present[e] {
            keep[a] = true;
            keep[b] = true;
        }
    }
    for &(n, _) in ground.loads.keys() {
        keep[n] = true;
    }
    let mut renum = vec![usize::MAX; ground.nodes.len()];
    let mut nodes = Vec::new();
    for (n, &k) in keep.iter().enumerate() {
        if k {
            renum[n] = nodes.len();
            nodes.push(ground.nodes[n]);
        }
    }
    let elements = ground
        .candidates
        .iter()
        .enumerate()
        .filter(|(e, _)| topology.present[*e])
        .map(|(e, &(a, b))| Element { a: renum[a], b: renum[b], area: topology.areas[e], id: e })
        .collect();
    TrussModel {
        dim: ground.dim,
        nodes,
        elements,
        supports: ground.supports.iter().filter(|(n, _)| keep[*n]).map(|&(n, d)| (renum[n], d)).collect(),
        loads: ground.loads.iter().map(|(&(n, d), &v)| ((renum[n], d), v)).collect(),
        elastic_modulus: ground.elastic_modulus,
        weight_density: ground.weight_density,
    }
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm(a: [f64; 3]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Rank of a set of unit directions, capped at 3, up to the angular tolerance.
pub fn direction_rank(dirs: &[[f64; 3]]) -> usize {
    let Some(&first) = dirs.first() else { return 0 };
    let tol = COLLINEAR_TOL.sin();
    let Some(second) = dirs.iter().find(|d| norm(cross(first, **d)) > tol) else { return 1 };
    let n = cross(first, *second);
    let n_len = norm(n);
    let n = [n[0] / n_len, n[1] / n_len, n[2] / n_len];
    if dirs.iter().any(|d| (n[0] * d[0] + n[1] * d[1] + n[2] * d[2]).abs() > tol) {
        3
    } else {
        2
    }
}

/// Whether an unloaded, unsupported node is held by its incident members.
fn node_is_braced(model: &TrussModel, incident: &[usize]) -> bool {
    if incident.len() < model.dim {
        return false;
    }
    let dirs: Vec<[f64; 3]> = incident.iter().map(|&k| model.direction(&model.elements[k]).0).collect();
    direction_rank(&dirs) >= model.dim
}

/// Iteratively strips members that cannot carry force at unbraced free
/// nodes, then drops nodes left without members.
pub fn remove_unwanted_elements(model: &TrussModel) -> TrussModel {
    let pinned: BTreeSet<usize> =
        model.supports.iter().map(|&(n, _)| n).chain(model.loads.keys().map(|&(n, _)| n)).collect();
    let mut alive = vec![true; model.elements.len()];
    loop {
        let mut incident = vec![Vec::new(); model.nodes.len()];
        for (k, e) in model.elements.iter().enumerate() {
            if alive[k] {
                incident[e.a].push(k);
                incident[e.b].push(k);
            }
        }
        let mut doomed = BTreeSet::new();
        for (n, inc) in incident.iter().enumerate() {
            if pinned.contains(&n) || inc.is_empty() || node_is_braced(model, inc) {
                continue;
            }
            for &k in inc {
                let e = &model.elements[k];
                let other = if e.a == n { e.b } else { e.a };
                // Keep the last link of a load or support.
                if pinned.contains(&other) && incident[other].len() == 1 {
                    continue;
                }
                doomed.insert(k);
            }
        }
        if doomed.is_empty() {
            break;
        }
        for k in doomed {
            alive[k] = false;
        }
    }

    let mut used = vec![false; model.nodes.len()];
    for (k, e) in model.elements.iter().enumerate() {
        if alive[k] {
            used[e.a] = true;
            used[e.b] = true;
        }
    }
    for &(n, _) in model.loads.keys() {
        used[n] = true;
    }
    let mut renum = vec![usize::MAX; model.nodes.len()];
    let mut nodes = Vec::new();
    for (n, &u) in used.iter().enumerate() {
        if u {
            renum[n] = nodes.len();
            nodes.push(model.nodes[n]);
        }
    }
    TrussModel {
        dim: model.dim,
        nodes,
        elements: model
            .elements
            .iter()
            .zip(&alive)
            .filter(|(_, &a)| a)
            .map(|(e, _)| Element { a: renum[e.a], b: renum[e.b], ..e.clone() })
            .collect(),
        supports: model.supports.iter().filter(|(n, _)| used[*n]).map(|&(n, d)| (renum[n], d)).collect(),
        loads: model.loads.iter().map(|(&(n, d), &v)| ((renum[n], d), v)).collect(),
        elastic_modulus: model.elastic_modulus,
        weight_density: model.weight_density,
    }
}

/// Topology over the ground candidates matching the members of `model`.
pub fn topology_of(model: &TrussModel, el: usize) -> Topology {
    let mut areas = vec![0.0; el];
    for e in &model.elements {
        areas[e.id] = e.area;
    }
    Topology::from_areas(areas)
}
