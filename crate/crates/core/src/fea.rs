//! Linear static analysis of pin-jointed trusses by the direct stiffness method.
//!
//! Models are either planar (two translational dofs per node) or spatial
//! (three per node). Coordinates are always stored as `[x, y, z]`; planar
//! models ignore `z`.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Relative pivot threshold used by the stability test.
pub const PIVOT_TOL: f64 = 1e-10;

/// Structural error in a truss model.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("model dimension must be 2 or 3, got {0}")]
    Dimension(usize),
    #[error("element {element} references missing node {node}")]
    DanglingNode { element: usize, node: usize },
    #[error("element {0} connects a node to itself")]
    SelfLoop(usize),
    #[error("element {0} has non-positive area")]
    NonPositiveArea(usize),
    #[error("element {0} has zero length")]
    ZeroLength(usize),
    #[error("duplicate element between nodes {0} and {1}")]
    Duplicate(usize, usize),
    #[error("dof {dof} of node {node} is outside the model")]
    BadDof { node: usize, dof: usize },
}

/// A bar element between two nodes carrying a label from its ground structure.
#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub a: usize,
    pub b: usize,
    pub area: f64,
    /// Index of the candidate this element came from.
    pub id: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrussModel {
    pub dim: usize,
    pub nodes: Vec<[f64; 3]>,
    pub elements: Vec<Element>,
    /// Fixed `(node, direction)` pairs.
    pub supports: BTreeSet<(usize, usize)>,
    /// Applied forces keyed by `(node, direction)`.
    pub loads: BTreeMap<(usize, usize), f64>,
    pub elastic_modulus: f64,
    pub weight_density: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisResult {
    pub stable: bool,
    /// Free dofs in solution order.
    pub free_dofs: Vec<(usize, usize)>,
    pub displacements: Option<Vec<f64>>,
    pub element_stresses: Option<Vec<f64>>,
}

impl AnalysisResult {
    fn unstable(free_dofs: Vec<(usize, usize)>) -> Self {
        AnalysisResult { stable: false, free_dofs, displacements: None, element_stresses: None }
    }

    pub fn max_abs_stress(&self) -> Option<f64> {
        self.element_stresses.as_ref().map(|s| s.iter().fold(0.0f64, |m, v| m.max(v.abs())))
    }

    pub fn max_abs_displacement(&self) -> Option<f64> {
        self.displacements.as_ref().map(|u| u.iter().fold(0.0f64, |m, v| m.max(v.abs())))
    }
}

impl TrussModel {
    /// Checks the structural invariants. Missing loads or supports are not an
    /// error here; such models simply come out unstable or trivially unloaded.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.dim != 2 && self.dim != 3 {
            return Err(ModelError::Dimension(self.dim));
        }
        let mut seen = BTreeSet::new();
        for (k, e) in self.elements.iter().enumerate() {
            for n in [e.a, e.b] {
                if n >= self.nodes.len() {
                    return Err(ModelError::DanglingNode { element: k, node: n });
                }
            }
            if e.a == e.b {
                return Err(ModelError::SelfLoop(k));
            }
            if !(e.area > 0.0) {
                return Err(ModelError::NonPositiveArea(k));
            }
            if self.length(e) == 0.0 {
                return Err(ModelError::ZeroLength(k));
            }
            if !seen.insert((e.a.min(e.b), e.a.max(e.b))) {
                return Err(ModelError::Duplicate(e.a, e.b));
            }
        }
        for &(node, dof) in self.supports.iter().chain(self.loads.keys()) {
            if node >= self.nodes.len() || dof >= self.dim {
                return Err(ModelError::BadDof { node, dof });
            }
        }
        Ok(())
    }

    pub fn length(&self, e: &Element) -> f64 {
        self.direction(e).1
    }

    /// Unit vector from `a` to `b` and the element length.
    pub fn direction(&self, e: &Element) -> ([f64; 3], f64) {
        let (pa, pb) = (self.nodes[e.a], self.nodes[e.b]);
        let mut d = [0.0; 3];
        for k in 0..self.dim {
            d[k] = pb[k] - pa[k];
        }
        let len = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        if len > 0.0 {
            for v in d.iter_mut() {
                *v /= len;
            }
        }
        (d, len)
    }

    /// Free dofs in node-major order.
    pub fn free_dofs(&self) -> Vec<(usize, usize)> {
        (0..self.nodes.len())
            .flat_map(|n| (0..self.dim).map(move |d| (n, d)))
            .filter(|nd| !self.supports.contains(nd))
            .collect()
    }
}

fn dof_map(model: &TrussModel, free: &[(usize, usize)]) -> Vec<Option<usize>> {
    let mut map = vec![None; model.nodes.len() * model.dim];
    for (k, &(n, d)) in free.iter().enumerate() {
        map[n * model.dim + d] = Some(k);
    }
    map
}

/// Reduced global stiffness matrix over the free dofs returned by
/// [`TrussModel::free_dofs`].
pub fn assemble_stiffness(model: &TrussModel) -> Result<DMatrix<f64>, ModelError> {
    model.validate()?;
    let free = model.free_dofs();
    let map = dof_map(model, &free);
    let dim = model.dim;
    let mut k = DMatrix::zeros(free.len(), free.len());
    for e in &model.elements {
        let (l, len) = model.direction(e);
        let s = model.elastic_modulus * e.area / len;
        let idx = |node: usize, d: usize| map[node * dim + d];
        for p in 0..dim {
            for q in 0..dim {
                let v = s * l[p] * l[q];
                let pairs = [
                    (idx(e.a, p), idx(e.a, q), v),
                    (idx(e.b, p), idx(e.b, q), v),
                    (idx(e.a, p), idx(e.b, q), -v),
                    (idx(e.b, p), idx(e.a, q), -v),
                ];
                for (r, c, v) in pairs {
                    if let (Some(r), Some(c)) = (r, c) {
                        k[(r, c)] += v;
                    }
                }
            }
        }
    }
    Ok(k)
}

/// Solves `K u = F` and recovers member stresses, or reports a mechanism.
pub fn analyze(model: &TrussModel) -> Result<AnalysisResult, ModelError> {
    let k = assemble_stiffness(model)?;
    let free = model.free_dofs();
    let n = free.len();
    if n == 0 || model.elements.is_empty() {
        return Ok(AnalysisResult::unstable(free));
    }
    let max_diag = (0..n).map(|i| k[(i, i)]).fold(0.0, f64::max);
    if !(max_diag > 0.0) {
        return Ok(AnalysisResult::unstable(free));
    }
    let Some(chol) = k.cholesky() else {
        return Ok(AnalysisResult::unstable(free));
    };
    let l = chol.l_dirty();
    let floor = PIVOT_TOL * max_diag;
    if (0..n).any(|i| !(l[(i, i)] * l[(i, i)] > floor)) {
        return Ok(AnalysisResult::unstable(free));
    }

    let map = dof_map(model, &free);
    let mut f = DVector::zeros(n);
    for (&(node, d), &v) in &model.loads {
        if let Some(r) = map[node * model.dim + d] {
            f[r] += v;
        }
    }
    let u = chol.solve(&f);

    let disp = |node: usize, d: usize| map[node * model.dim + d].map_or(0.0, |r| u[r]);
    let stresses = model
        .elements
        .iter()
        .map(|e| {
            let (l, len) = model.direction(e);
            let elong: f64 = (0..model.dim).map(|d| l[d] * (disp(e.b, d) - disp(e.a, d))).sum();
            model.elastic_modulus / len * elong
        })
        .collect();
    Ok(AnalysisResult {
        stable: true,
        free_dofs: free,
        displacements: Some(u.iter().copied().collect()),
        element_stresses: Some(stresses),
    })
}

/// Total weight `sum(rho * L * A)`.
pub fn self_weight(model: &TrussModel) -> f64 {
    model.elements.iter().fold(0.0, |w, e| w + model.weight_density * model.length(e) * e.area)
}
