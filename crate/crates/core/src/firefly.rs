//! Firefly swarm core: attractiveness, distance, the hybrid move, and the
//! pairwise double loop with a pluggable move gate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bench::ProblemDefinition;
use crate::objective::{evaluate, EvalCounter, EvalResult};
use crate::topology::DesignSpace;

/// Seeded generator used for every draw of a run.
pub type RandomStream = ChaCha8Rng;

pub fn stream(seed: u64) -> RandomStream {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaParams {
    pub beta0: f64,
    pub gamma: f64,
    pub omega: f64,
    pub npop: usize,
    pub max_iterations: usize,
    /// Lets a firefly with no strictly better partner take a purely random step.
    pub random_walk: bool,
}

impl Default for FaParams {
    fn default() -> Self {
        FaParams { beta0: 2.0, gamma: 1.0, omega: 0.978, npop: 20, max_iterations: 1000, random_walk: false }
    }
}

impl FaParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.beta0 > 0.0) {
            return Err("beta0 must be positive".into());
        }
        if !(self.gamma >= 0.0) {
            return Err("gamma must be non-negative".into());
        }
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return Err("omega must lie in (0, 1]".into());
        }
        if self.npop < 2 {
            return Err("npop must be at least 2".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Firefly {
    pub x: Vec<f64>,
    pub f: f64,
}

/// Decides whether firefly `i` may move toward `j` and learns from outcomes.
pub trait MoveGate {
    fn permits(&mut self, i: usize, j: usize) -> bool;
    fn record(&mut self, i: usize, j: usize, improved: bool);
    /// Called after every encounter, whether or not the move ran.
    fn retest<R: Rng>(&mut self, i: usize, j: usize, rng: &mut R);
}

/// Gate that is always open and never draws random numbers.
#[derive(Debug, Clone, Copy, Default)]
pub struct OpenGate;

impl MoveGate for OpenGate {
    fn permits(&mut self, _: usize, _: usize) -> bool {
        true
    }
    fn record(&mut self, _: usize, _: usize, _: bool) {}
    fn retest<R: Rng>(&mut self, _: usize, _: usize, _: &mut R) {}
}

pub fn attractiveness(r: f64, params: &FaParams) -> f64 {
    params.beta0 * (-params.gamma * r * r).exp()
}

/// Euclidean distance scaled by the diagonal of the search box.
pub fn normalized_distance(xi: &[f64], xj: &[f64], space: &DesignSpace) -> f64 {
    let d = xi.iter().zip(xj).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    d / space.max_distance()
}

/// Moves `xi` toward `xj` in place. `draw` supplies, per component, the
/// randomness scale, the attraction factor and the walk factor, in that order.
pub fn move_with(
    xi: &mut [f64],
    xj: &[f64],
    tau: usize,
    params: &FaParams,
    space: &DesignSpace,
    mut draw: impl FnMut() -> f64,
) {
    let beta = attractiveness(normalized_distance(xi, xj, space), params);
    let cooling = params.omega.powi(tau as i32);
    for k in 0..xi.len() {
        let (lo, hi) = (space.low[k], space.up[k]);
        let theta = draw();
        let rnd1 = draw();
        let rnd2 = draw();
        let phi = theta * (hi - lo);
        let v = xi[k] + beta * rnd1 * (xj[k] - xi[k]) + phi * cooling * (rnd2 - 0.5);
        xi[k] = v.clamp(lo, hi);
    }
}

pub fn move_toward<R: Rng>(xi: &mut [f64], xj: &[f64], tau: usize, params: &FaParams, space: &DesignSpace, rng: &mut R) {
    move_with(xi, xj, tau, params, space, || rng.random::<f64>());
}

/// Everything a run produces apart from timing.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub best: Firefly,
    pub best_eval: EvalResult,
    /// Best objective value after each iteration.
    pub trace: Vec<f64>,
    /// Cumulative evaluations after each iteration.
    pub trace_evaluations: Vec<u64>,
    pub evaluations: u64,
    pub executed_moves: u64,
    pub improving_moves: u64,
}

struct Member {
    id: usize,
    fly: Firefly,
}

fn random_position<R: Rng>(space: &DesignSpace, rng: &mut R) -> Vec<f64> {
    space.low.iter().zip(&space.up).map(|(&lo, &hi)| lo + rng.random::<f64>() * (hi - lo)).collect()
}

struct Tracker {
    best: Firefly,
    best_eval: EvalResult,
}

impl Tracker {
    fn offer(&mut self, x: &[f64], r: &EvalResult) {
        if r.objective < self.best.f {
            self.best = Firefly { x: x.to_vec(), f: r.objective };
            self.best_eval = r.clone();
        }
    }
}

fn initialize<R: Rng>(
    problem: &ProblemDefinition,
    params: &FaParams,
    counter: &EvalCounter,
    rng: &mut R,
) -> (Vec<Member>, Tracker) {
    let mut swarm = Vec::with_capacity(params.npop);
    let mut tracker: Option<Tracker> = None;
    for id in 0..params.npop {
        let x = random_position(&problem.space, rng);
        let r = evaluate(&x, problem, counter);
        match tracker.as_mut() {
            Some(t) => t.offer(&x, &r),
            None => tracker = Some(Tracker { best: Firefly { x: x.clone(), f: r.objective }, best_eval: r.clone() }),
        }
        swarm.push(Member { id, fly: Firefly { x, f: r.objective } });
    }
    let tracker = tracker.expect("swarm has at least one member");
    (swarm, tracker)
}

/// Random step with the attraction term switched off; not a pair move.
fn walk<R: Rng>(
    fly: &mut Firefly,
    tau: usize,
    params: &FaParams,
    problem: &ProblemDefinition,
    counter: &EvalCounter,
    tracker: &mut Tracker,
    rng: &mut R,
) {
    let anchor = fly.x.clone();
    move_toward(&mut fly.x, &anchor, tau, params, &problem.space, rng);
    let r = evaluate(&fly.x, problem, counter);
    fly.f = r.objective;
    tracker.offer(&fly.x, &r);
}

fn rank(swarm: &mut [Member]) {
    swarm.sort_by(|a, b| a.fly.f.total_cmp(&b.fly.f));
}

/// Runs the gated swarm. Ledger bookkeeping is keyed by firefly identity,
/// which survives the end-of-iteration ranking.
pub fn run<G: MoveGate, R: Rng>(problem: &ProblemDefinition, params: &FaParams, gate: &mut G, rng: &mut R) -> RunOutcome {
    let counter = EvalCounter::new();
    let (mut swarm, mut tracker) = initialize(problem, params, &counter, rng);
    let mut trace = Vec::with_capacity(params.max_iterations);
    let mut trace_evaluations = Vec::with_capacity(params.max_iterations);
    let (mut executed, mut improving) = (0u64, 0u64);
    let n = swarm.len();
    for tau in 0..params.max_iterations {
        for i in 0..n {
            let mut had_better = false;
            for j in 0..n {
                if swarm[j].fly.f < swarm[i].fly.f {
                    had_better = true;
                    let (id_i, id_j) = (swarm[i].id, swarm[j].id);
                    if gate.permits(id_i, id_j) {
                        let before = swarm[i].fly.f;
                        let xj = swarm[j].fly.x.clone();
                        move_toward(&mut swarm[i].fly.x, &xj, tau, params, &problem.space, rng);
                        let r = evaluate(&swarm[i].fly.x, problem, &counter);
                        swarm[i].fly.f = r.objective;
                        let improved = r.objective < before;
                        gate.record(id_i, id_j, improved);
                        executed += 1;
                        improving += u64::from(improved);
                        tracker.offer(&swarm[i].fly.x, &r);
                    }
                    gate.retest(id_i, id_j, rng);
                }
            }
            if params.random_walk && !had_better {
                walk(&mut swarm[i].fly, tau, params, problem, &counter, &mut tracker, rng);
            }
        }
        rank(&mut swarm);
        trace.push(tracker.best.f);
        trace_evaluations.push(counter.get());
    }
    RunOutcome {
        best: tracker.best,
        best_eval: tracker.best_eval,
        trace,
        trace_evaluations,
        evaluations: counter.get(),
        executed_moves: executed,
        improving_moves: improving,
    }
}

/// Plain firefly algorithm with no gate at all.
pub fn run_fa<R: Rng>(problem: &ProblemDefinition, params: &FaParams, rng: &mut R) -> RunOutcome {
    let counter = EvalCounter::new();
    let (mut swarm, mut tracker) = initialize(problem, params, &counter, rng);
    let mut trace = Vec::with_capacity(params.max_iterations);
    let mut trace_evaluations = Vec::with_capacity(params.max_iterations);
    let (mut executed, mut improving) = (0u64, 0u64);
    for tau in 0..params.max_iterations {
        for i in 0..swarm.len() {
            let mut had_better = false;
            for j in 0..swarm.len() {
                if swarm[j].fly.f >= swarm[i].fly.f {
                    continue;
                }
                had_better = true;
                let before = swarm[i].fly.f;
                let xj = swarm[j].fly.x.clone();
                move_toward(&mut swarm[i].fly.x, &xj, tau, params, &problem.space, rng);
                let r = evaluate(&swarm[i].fly.x, problem, &counter);
                swarm[i].fly.f = r.objective;
                executed += 1;
                if r.objective < before {
                    improving += 1;
                }
                tracker.offer(&swarm[i].fly.x, &r);
            }
            if params.random_walk && !had_better {
                walk(&mut swarm[i].fly, tau, params, problem, &counter, &mut tracker, rng);
            }
        }
        rank(&mut swarm);
        trace.push(tracker.best.f);
        trace_evaluations.push(counter.get());
    }
    RunOutcome {
        best: tracker.best,
        best_eval: tracker.best_eval,
        trace,
        trace_evaluations,
        evaluations: counter.get(),
        executed_moves: executed,
        improving_moves: improving,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn square(d: usize) -> DesignSpace {
        DesignSpace::independent(d, 0.0, 1.0)
    }

    #[test]
    fn attractiveness_values() {
        let p = FaParams::default();
        assert_eq!(attractiveness(0.0, &p), 2.0);
        assert_abs_diff_eq!(attractiveness(1.0, &p), 2.0 / std::f64::consts::E, epsilon = 1e-15);
        let flat = FaParams { gamma: 0.0, ..p };
        assert_eq!(attractiveness(0.7, &flat), 2.0);
    }

    #[test]
    fn distance_values() {
        let s = square(2);
        assert_eq!(normalized_distance(&[0.3, 0.3], &[0.3, 0.3], &s), 0.0);
        assert_abs_diff_eq!(normalized_distance(&[-1.0, -1.0], &[1.0, 1.0], &s), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(normalized_distance(&[0.0, 0.0], &[1.0, 1.0], &s), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn fixed_point_with_neutral_draws() {
        let s = square(3);
        let mut x = vec![0.1, -0.4, 0.9];
        let y = x.clone();
        move_with(&mut x, &y, 5, &FaParams::default(), &s, || 0.5);
        assert_eq!(x, y);
    }

    #[test]
    fn hand_computed_move_is_clamped() {
        let s = square(1);
        let mut x = vec![-0.5];
        let mut draws = [0.0, 1.0, 0.5].into_iter();
        move_with(&mut x, &[0.5], 0, &FaParams::default(), &s, || draws.next().unwrap());
        // beta = 2 exp(-0.25) ~ 1.5576 pushes x to ~1.0576 before clamping.
        assert_eq!(x[0], 1.0);
        let mut x = vec![-0.5];
        let mut draws = [0.0, 0.5, 0.5].into_iter();
        move_with(&mut x, &[0.5], 0, &FaParams::default(), &s, || draws.next().unwrap());
        assert_abs_diff_eq!(x[0], -0.5 + (-0.25f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn cooling_off_when_omega_is_one() {
        let s = square(1);
        let p = FaParams { omega: 1.0, ..Default::default() };
        let walk = |tau| {
            let mut x = vec![0.0];
            let mut d = [1.0, 0.0, 0.9].into_iter();
            move_with(&mut x, &[0.0], tau, &p, &s, || d.next().unwrap());
            x[0]
        };
        assert_eq!(walk(0), walk(400));
        assert_abs_diff_eq!(walk(0), 2.0 * 0.4, epsilon = 1e-15);
    }

    #[test]
    fn params_validation() {
        assert!(FaParams::default().validate().is_ok());
        assert!(FaParams { npop: 1, ..Default::default() }.validate().is_err());
        assert!(FaParams { omega: 0.0, ..Default::default() }.validate().is_err());
    }
}
