//! Per-pair collaboration ledgers and the left-tailed t-test that decides
//! whether a firefly may move toward a brighter partner.

use rand::Rng;

use crate::firefly::MoveGate;

/// Default left-tail critical value.
pub const DEFAULT_CRITICAL: f64 = -1.65;

/// t-statistic of a Bernoulli score record against a hypothesized mean.
///
/// With a zero sample deviation (including `n == 1`) the statistic is
/// `+inf` when the mean reaches `mu0` and `-inf` otherwise.
pub fn t_statistic(n: u64, success_sum: u64, mu0: f64) -> f64 {
    debug_assert!(n >= 1 && success_sum <= n);
    let nf = n as f64;
    let mean = success_sum as f64 / nf;
    let s = if n >= 2 { (nf * mean * (1.0 - mean) / (nf - 1.0)).sqrt() } else { 0.0 };
    if s == 0.0 {
        return if mean >= mu0 { f64::INFINITY } else { f64::NEG_INFINITY };
    }
    (mean - mu0) / (s / nf.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestConfig {
    pub critical_value: f64,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig { critical_value: DEFAULT_CRITICAL }
    }
}

/// Score record of one ordered pair. Starts with one imaginary success.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LedgerEntry {
    pub n: u64,
    pub success_sum: u64,
    pub open: bool,
}

impl Default for LedgerEntry {
    fn default() -> Self {
        LedgerEntry { n: 1, success_sum: 1, open: true }
    }
}

impl LedgerEntry {
    pub fn mean(&self) -> f64 {
        self.success_sum as f64 / self.n as f64
    }

    pub fn record(&mut self, improved: bool) {
        self.n += 1;
        self.success_sum += u64::from(improved);
    }
}

/// The gate stays open unless `t` falls in the left rejection region.
pub fn gate_open(t: f64, config: &TestConfig) -> bool {
    !(t < config.critical_value)
}

/// Rejects `mean >= mu0` when the statistic falls below the critical value.
pub fn hypothesis_test(entry: &LedgerEntry, mu0: f64, config: &TestConfig) -> bool {
    gate_open(t_statistic(entry.n, entry.success_sum, mu0), config)
}

/// Ledger over all ordered pairs of a swarm of fixed size.
#[derive(Debug, Clone)]
pub struct CollaborationLedger {
    npop: usize,
    entries: Vec<LedgerEntry>,
    pub config: TestConfig,
    /// Encounters where the gate was closed.
    pub blocked: u64,
}

impl CollaborationLedger {
    pub fn new(npop: usize, config: TestConfig) -> Self {
        CollaborationLedger { npop, entries: vec![LedgerEntry::default(); npop * npop], config, blocked: 0 }
    }

    pub fn entry(&self, i: usize, j: usize) -> &LedgerEntry {
        &self.entries[i * self.npop + j]
    }

    fn entry_mut(&mut self, i: usize, j: usize) -> &mut LedgerEntry {
        &mut self.entries[i * self.npop + j]
    }

    /// Sum over ordered pairs of recorded moves.
    pub fn executed_moves(&self) -> u64 {
        (0..self.npop)
            .flat_map(|i| (0..self.npop).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| self.entry(i, j).n - 1)
            .sum()
    }
}

impl MoveGate for CollaborationLedger {
    fn permits(&mut self, i: usize, j: usize) -> bool {
        let open = self.entry(i, j).open;
        if !open {
            self.blocked += 1;
        }
        open
    }

    fn record(&mut self, i: usize, j: usize, improved: bool) {
        self.entry_mut(i, j).record(improved);
    }

    fn retest<R: Rng>(&mut self, i: usize, j: usize, rng: &mut R) {
        let mu0: f64 = rng.random();
        let config = self.config;
        let e = self.entry_mut(i, j);
        e.open = hypothesis_test(e, mu0, &config);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;

    #[test]
    fn textbook_statistic() {
        // mean 0.3, s = sqrt(10 * 0.21 / 9); t = -0.2 / (s / sqrt(10))
        let s = (10.0 * 0.3 * 0.7 / 9.0f64).sqrt();
        let expected = -0.2 / (s / 10f64.sqrt());
        assert_abs_diff_eq!(t_statistic(10, 3, 0.5), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(t_statistic(10, 3, 0.5), -1.3093, epsilon = 5e-4);
        assert!(hypothesis_test(&LedgerEntry { n: 10, success_sum: 3, open: true }, 0.5, &TestConfig::default()));
    }

    #[test]
    fn degenerate_cases() {
        assert_eq!(t_statistic(1, 1, 1.0), f64::INFINITY);
        assert_eq!(t_statistic(5, 5, 0.9), f64::INFINITY);
        assert_eq!(t_statistic(5, 0, 0.1), f64::NEG_INFINITY);
        let fresh = LedgerEntry::default();
        for mu0 in [0.0, 0.5, 1.0] {
            assert!(hypothesis_test(&fresh, mu0, &TestConfig::default()));
        }
    }

    #[test]
    fn critical_region() {
        let cfg = TestConfig::default();
        assert!(!gate_open(-2.0, &cfg));
        assert!(gate_open(-1.3093, &cfg));
        assert!(gate_open(-1.65, &cfg));
    }

    #[test]
    fn outcome_recording() {
        let mut e = LedgerEntry::default();
        e.record(true);
        assert_eq!((e.n, e.success_sum), (2, 2));
        let mut e = LedgerEntry::default();
        e.record(false);
        assert_eq!((e.n, e.success_sum), (2, 1));
        assert_eq!(e.mean(), 0.5);
        let mut e = LedgerEntry::default();
        for _ in 0..10 {
            e.record(false);
        }
        assert_eq!((e.n, e.success_sum), (11, 1));
        assert_abs_diff_eq!(e.mean(), 1.0 / 11.0, epsilon = 1e-15);
    }

    #[test]
    fn low_mean_reopens_for_small_mu0() {
        let e = LedgerEntry { n: 11, success_sum: 1, open: false };
        let cfg = TestConfig::default();
        assert!(t_statistic(11, 1, 0.05) > 0.0);
        assert!(hypothesis_test(&e, 0.05, &cfg));
        // Independent recomputation: mean 1/11, s^2 = 11 * (1/11) * (10/11) / 10 = 1/11.
        let m = 1.0 / 11.0;
        let t = (m - 0.5) / ((1.0f64 / 11.0).sqrt() / 11f64.sqrt());
        assert_abs_diff_eq!(t_statistic(11, 1, 0.5), t, epsilon = 1e-12);
        assert!(t < -4.0);
        assert!(!hypothesis_test(&e, 0.5, &cfg));
    }

    #[test]
    fn blocked_pair_is_retested() {
        let mut ledger = CollaborationLedger::new(2, TestConfig::default());
        {
            let e = ledger.entry_mut(0, 1);
            e.open = false;
        }
        assert!(!ledger.permits(0, 1));
        assert_eq!(ledger.blocked, 1);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        ledger.retest(0, 1, &mut rng);
        // Fresh scores never reject.
        assert!(ledger.permits(0, 1));
    }
}
