//! Benchmark problems, problem-definition files, batch runs and statistics.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::firefly::{self, FaParams, RunOutcome};
use crate::gating::{CollaborationLedger, TestConfig};
use crate::objective::{evaluate, ConstraintSet, EvalCounter, EvalResult};
use crate::topology::{DesignSpace, GroundStructure};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
    #[error("unknown element label {0}")]
    UnknownElement(usize),
    #[error("elements {0} and {1} share a variable but were given different areas")]
    SymmetryConflict(usize, usize),
    #[error("problem definition: {0}")]
    Definition(String),
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed areas file: {0}")]
    Areas(String),
}

impl BenchError {
    /// Whether the failure comes from the filesystem rather than from input content.
    pub fn is_io(&self) -> bool {
        matches!(self, BenchError::Io { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemDefinition {
    pub name: String,
    pub ground: GroundStructure,
    pub space: DesignSpace,
    pub constraints: ConstraintSet,
    pub units: BTreeMap<String, String>,
}

// On-disk layout. Node and element labels are 1-based.

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    name: String,
    dimension: usize,
    #[serde(default)]
    units: BTreeMap<String, String>,
    nodes: Vec<Vec<f64>>,
    elements: Vec<[usize; 2]>,
    supports: Vec<SupportSpec>,
    loads: Vec<LoadSpec>,
    material: Material,
    constraints: ConstraintSet,
    design_space: SpaceSpec,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SupportSpec {
    node: usize,
    fixed: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LoadSpec {
    node: usize,
    direction: String,
    value: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Material {
    elastic_modulus: f64,
    weight_density: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceSpec {
    a_min: f64,
    a_max: f64,
    lower: Option<f64>,
    upper: Option<f64>,
    /// Groups of element labels sharing one variable.
    #[serde(default)]
    symmetry: Vec<Vec<usize>>,
}

fn axis(name: &str, dim: usize) -> Result<usize, BenchError> {
    let d = match name {
        "x" => 0,
        "y" => 1,
        "z" => 2,
        other => return Err(BenchError::Definition(format!("unknown direction `{other}`"))),
    };
    if d >= dim {
        return Err(BenchError::Definition(format!("direction `{name}` in a {dim}D problem")));
    }
    Ok(d)
}

fn node_index(label: usize, count: usize) -> Result<usize, BenchError> {
    if label == 0 || label > count {
        return Err(BenchError::Definition(format!("node label {label} out of range")));
    }
    Ok(label - 1)
}

impl ProblemDefinition {
    pub fn parse(text: &str) -> Result<Self, BenchError> {
        let file: ProblemFile = toml::from_str(text).map_err(|e| BenchError::Definition(e.to_string()))?;
        let dim = file.dimension;
        if dim != 2 && dim != 3 {
            return Err(BenchError::Definition(format!("dimension must be 2 or 3, got {dim}")));
        }
        let mut nodes = Vec::with_capacity(file.nodes.len());
        for (k, c) in file.nodes.iter().enumerate() {
            if c.len() != dim {
                return Err(BenchError::Definition(format!("node {} needs {dim} coordinates", k + 1)));
            }
            let mut p = [0.0; 3];
            p[..dim].copy_from_slice(c);
            nodes.push(p);
        }
        let count = nodes.len();
        let candidates = file
            .elements
            .iter()
            .map(|&[a, b]| Ok((node_index(a, count)?, node_index(b, count)?)))
            .collect::<Result<Vec<_>, BenchError>>()?;
        let mut supports = BTreeSet::new();
        for s in &file.supports {
            for d in &s.fixed {
                supports.insert((node_index(s.node, count)?, axis(d, dim)?));
            }
        }
        let mut loads = BTreeMap::new();
        for l in &file.loads {
            *loads.entry((node_index(l.node, count)?, axis(&l.direction, dim)?)).or_insert(0.0) += l.value;
        }
        let ground = GroundStructure {
            dim,
            nodes,
            candidates,
            supports,
            loads,
            elastic_modulus: file.material.elastic_modulus,
            weight_density: file.material.weight_density,
        };
        ground.validate().map_err(|e| BenchError::Definition(e.to_string()))?;

        let el = ground.len();
        let mut group_of = vec![None; el];
        for (g, members) in file.design_space.symmetry.iter().enumerate() {
            for &label in members {
                if label == 0 || label > el {
                    return Err(BenchError::Definition(format!("symmetry label {label} out of range")));
                }
                if group_of[label - 1].replace(g).is_some() {
                    return Err(BenchError::Definition(format!("element {label} is in two symmetry groups")));
                }
            }
        }
        // Variables follow the first label of each group in ascending order.
        let mut groups = Vec::new();
        let mut taken = vec![false; el];
        for e in 0..el {
            if taken[e] {
                continue;
            }
            let members: Vec<usize> = match group_of[e] {
                Some(g) => file.design_space.symmetry[g].iter().map(|l| l - 1).collect(),
                None => vec![e],
            };
            for &m in &members {
                taken[m] = true;
            }
            groups.push(members);
        }
        let ds = &file.design_space;
        let mut space = DesignSpace::grouped(groups, ds.a_min, ds.a_max);
        if let Some(lo) = ds.lower {
            space.low.iter_mut().for_each(|v| *v = lo);
        }
        if let Some(hi) = ds.upper {
            space.up.iter_mut().for_each(|v| *v = hi);
        }
        space.validate(el).map_err(|e| BenchError::Definition(e.to_string()))?;
        let c = file.constraints;
        if !(c.allowable_stress > 0.0 && c.allowable_displacement > 0.0) {
            return Err(BenchError::Definition("allowable stress and displacement must be positive".into()));
        }
        Ok(ProblemDefinition { name: file.name, ground, space, constraints: c, units: file.units })
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| BenchError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    /// Design vector putting each labeled area on its variable and every
    /// other variable at its lower bound.
    pub fn design_vector(&self, areas: &BTreeMap<usize, f64>) -> Result<Vec<f64>, BenchError> {
        let el = self.ground.len();
        let mut x = self.space.low.clone();
        let mut owner = vec![0; el];
        for (k, g) in self.space.groups.iter().enumerate() {
            for &e in g {
                owner[e] = k;
            }
        }
        let mut set_by: BTreeMap<usize, usize> = BTreeMap::new();
        for (&label, &a) in areas {
            if label == 0 || label > el {
                return Err(BenchError::UnknownElement(label));
            }
            let k = owner[label - 1];
            if let Some(&prev) = set_by.get(&k) {
                if areas[&prev] != a {
                    return Err(BenchError::SymmetryConflict(prev, label));
                }
            }
            set_by.insert(k, label);
            x[k] = a;
        }
        Ok(x)
    }
}

const PROBLEM_FILES: [(&str, &str); 4] = [
    ("problem1", include_str!("../problems/problem1.toml")),
    ("problem2", include_str!("../problems/problem2.toml")),
    ("problem3", include_str!("../problems/problem3.toml")),
    ("problem4", include_str!("../problems/problem4.toml")),
];

/// Best-known member areas shipped with the built-in problems.
const BEST_AREAS: [(&str, &str); 3] = [
    ("problem1", include_str!("../problems/problem1_best.csv")),
    ("problem2", include_str!("../problems/problem2_best.csv")),
    ("problem3", include_str!("../problems/problem3_best.csv")),
];

pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    PROBLEM_FILES.iter().map(|(n, _)| *n)
}

pub fn builtin_problem(name: &str) -> Result<ProblemDefinition, BenchError> {
    let (_, text) = PROBLEM_FILES
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| BenchError::UnknownProblem(name.to_string()))?;
    ProblemDefinition::parse(text)
}

pub fn builtin_best_areas(name: &str) -> Option<BTreeMap<usize, f64>> {
    BEST_AREAS.iter().find(|(n, _)| *n == name).map(|(_, t)| parse_areas(t).expect("shipped areas parse"))
}

/// Reads `element,area` rows; a header row is optional.
pub fn parse_areas(text: &str) -> Result<BTreeMap<usize, f64>, BenchError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut out = BTreeMap::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| BenchError::Areas(e.to_string()))?;
        if rec.len() != 2 {
            return Err(BenchError::Areas(format!("row {} needs two fields", k + 1)));
        }
        let (Ok(label), Ok(area)) = (rec[0].parse::<usize>(), rec[1].parse::<f64>()) else {
            if k == 0 {
                continue;
            }
            return Err(BenchError::Areas(format!("row {} is not `element,area`", k + 1)));
        };
        out.insert(label, area);
    }
    Ok(out)
}

pub fn load_areas(path: &Path) -> Result<BTreeMap<usize, f64>, BenchError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| BenchError::Io { path: path.display().to_string(), source })?;
    parse_areas(&text)
}

/// Evaluates a design given as areas on labeled elements.
pub fn verify_design(problem: &ProblemDefinition, areas: &BTreeMap<usize, f64>) -> Result<EvalResult, BenchError> {
    let x = problem.design_vector(areas)?;
    Ok(evaluate(&x, problem, &EvalCounter::new()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateMode {
    Fa,
    Sfa,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    pub wall_time: f64,
    pub outcome: RunOutcome,
}

impl RunRecord {
    pub fn weight(&self) -> f64 {
        self.outcome.best.f
    }
}

pub fn run_single(problem: &ProblemDefinition, params: &FaParams, mode: GateMode, test: TestConfig, seed: u64) -> RunRecord {
    let start = Instant::now();
    let mut rng = firefly::stream(seed);
    let outcome = match mode {
        GateMode::Fa => firefly::run_fa(problem, params, &mut rng),
        GateMode::Sfa => {
            let mut ledger = CollaborationLedger::new(params.npop, test);
            firefly::run(problem, params, &mut ledger, &mut rng)
        }
    };
    RunRecord { seed, wall_time: start.elapsed().as_secs_f64(), outcome }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchStatistics {
    pub runs: usize,
    pub min_weight: f64,
    pub avg_weight: f64,
    pub max_weight: f64,
    pub std_weight: f64,
    pub pct_within_2pct: f64,
    pub avg_evaluations: f64,
    pub avg_improving_moves: f64,
    pub avg_wall_time: f64,
}

/// Population standard deviation is used for `std_weight`.
pub fn statistics(records: &[RunRecord]) -> BatchStatistics {
    let n = records.len();
    assert!(n > 0, "statistics need at least one run");
    let nf = n as f64;
    // Sorting makes the sums independent of run order.
    let mut w: Vec<f64> = records.iter().map(RunRecord::weight).collect();
    w.sort_by(f64::total_cmp);
    let mean_of = |mut v: Vec<f64>| {
        v.sort_by(f64::total_cmp);
        v.iter().sum::<f64>() / nf
    };
    let min = w[0];
    let max = w[n - 1];
    let avg = w.iter().sum::<f64>() / nf;
    let var = w.iter().map(|x| (x - avg).powi(2)).sum::<f64>() / nf;
    let within = w.iter().filter(|&&x| x <= 1.02 * min).count();
    BatchStatistics {
        runs: n,
        min_weight: min,
        avg_weight: avg,
        max_weight: max,
        std_weight: var.sqrt(),
        pct_within_2pct: 100.0 * within as f64 / nf,
        avg_evaluations: mean_of(records.iter().map(|r| r.outcome.evaluations as f64).collect()),
        avg_improving_moves: mean_of(records.iter().map(|r| r.outcome.improving_moves as f64).collect()),
        avg_wall_time: mean_of(records.iter().map(|r| r.wall_time).collect()),
    }
}

/// Runs seeds `base_seed..base_seed + runs` in parallel; records come back in seed order.
pub fn run_batch(
    problem: &ProblemDefinition,
    params: &FaParams,
    mode: GateMode,
    test: TestConfig,
    runs: usize,
    base_seed: u64,
) -> (BatchStatistics, Vec<RunRecord>) {
    let records: Vec<RunRecord> = (0..runs as u64)
        .into_par_iter()
        .map(|k| run_single(problem, params, mode, test, base_seed + k))
        .collect();
    (statistics(&records), records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::firefly::Firefly;
    use crate::topology::Topology;

    fn record(weight: f64) -> RunRecord {
        let eval = EvalResult {
            weight,
            feasible: true,
            stable: true,
            objective: weight,
            max_abs_stress: 0.0,
            max_abs_displacement: 0.0,
            refined: Topology::from_areas(vec![]),
        };
        RunRecord {
            seed: 0,
            wall_time: 0.0,
            outcome: RunOutcome {
                best: Firefly { x: vec![], f: weight },
                best_eval: eval,
                trace: vec![weight],
                trace_evaluations: vec![1],
                evaluations: 1,
                executed_moves: 0,
                improving_moves: 0,
            },
        }
    }

    #[test]
    fn single_run_statistics() {
        let s = statistics(&[record(50.0)]);
        assert_eq!((s.min_weight, s.avg_weight, s.max_weight, s.std_weight, s.pct_within_2pct), (50.0, 50.0, 50.0, 0.0, 100.0));
    }

    #[test]
    fn two_percent_band() {
        assert_eq!(statistics(&[record(100.0), record(101.9)]).pct_within_2pct, 100.0);
        assert_eq!(statistics(&[record(100.0), record(103.0)]).pct_within_2pct, 50.0);
    }

    #[test]
    fn builtin_sizes() {
        let p2 = builtin_problem("problem2").unwrap();
        assert_eq!((p2.space.dim(), p2.ground.len()), (45, 45));
        let p3 = builtin_problem("problem3").unwrap();
        assert_eq!((p3.space.dim(), p3.ground.len(), p3.ground.nodes.len()), (315, 595, 35));
        let p4 = builtin_problem("problem4").unwrap();
        assert_eq!((p4.ground.dim, p4.ground.len(), p4.ground.nodes.len()), (3, 153, 18));
        let p1 = builtin_problem("problem1").unwrap();
        assert_eq!((p1.space.dim(), p1.ground.len(), p1.ground.nodes.len()), (39, 39, 12));
        assert!(matches!(builtin_problem("problem9"), Err(BenchError::UnknownProblem(_))));
    }

    #[test]
    fn areas_parsing() {
        let a = parse_areas("element,area\n1, 0.5\n# note\n7,2\n").unwrap();
        assert_eq!(a, BTreeMap::from([(1, 0.5), (7, 2.0)]));
        assert!(parse_areas("1,0.5\nx,y\n").is_err());
        assert!(parse_areas("").unwrap().is_empty());
    }

    #[test]
    fn empty_design_is_infeasible() {
        for name in builtin_names() {
            let p = builtin_problem(name).unwrap();
            let r = verify_design(&p, &BTreeMap::new()).unwrap();
            assert!(!r.feasible);
            assert_eq!(r.objective, crate::objective::INFEASIBLE);
        }
    }

    #[test]
    fn unknown_label_rejected() {
        let p = builtin_problem("problem2").unwrap();
        assert!(matches!(verify_design(&p, &BTreeMap::from([(46, 0.5)])), Err(BenchError::UnknownElement(46))));
    }

    #[test]
    fn symmetric_labels_must_agree() {
        let p = builtin_problem("problem3").unwrap();
        let areas = BTreeMap::from([(1, 2.0), (5, 3.0)]);
        assert!(matches!(verify_design(&p, &areas), Err(BenchError::SymmetryConflict(1, 5))));
    }
}
