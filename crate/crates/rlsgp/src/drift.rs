//! Super-multiplicative drift: the hitting-time bound for processes whose
//! expected one-step progress at state `x` is at least `(log_g(x) + 1) d x`,
//! the classical multiplicative-drift bound for comparison, and synthetic
//! Markov processes that meet the drift condition exactly, with Monte Carlo
//! hitting-time validation against the bound.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::engine::derive_seed;

/// Parameters of the drift condition: `gamma > 1`, `delta > 0`, and a start
/// state in `{0} u [1, inf)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftParams {
    pub gamma: f64,
    pub delta: f64,
    pub x0: f64,
}

impl DriftParams {
    pub fn new(gamma: f64, delta: f64, x0: f64) -> Result<Self, DriftError> {
        // NaN parameters fail all three checks.
        if gamma.is_nan() || gamma <= 1.0 {
            return Err(DriftError::GammaOutOfRange { gamma });
        }
        if delta.is_nan() || delta <= 0.0 {
            return Err(DriftError::DeltaOutOfRange { delta });
        }
        if x0.is_nan() || !(x0 == 0.0 || x0 >= 1.0) {
            return Err(DriftError::StateOutOfRange { x: x0 });
        }
        Ok(DriftParams { gamma, delta, x0 })
    }

    fn log_gamma(&self, x: f64) -> f64 {
        x.ln() / self.gamma.ln()
    }

    /// The right-hand side of the drift condition at state `x`.
    pub fn required_drift(&self, x: f64) -> f64 {
        (self.log_gamma(x) + 1.0) * self.delta * x
    }
}

/// Expected hitting time of zero under super-multiplicative drift:
/// `3/d + 2 (2 + log2 log_g max(g, X0)) ln(g) / d`.
pub fn super_multiplicative_drift_bound(params: &DriftParams) -> Result<f64, DriftError> {
    let p = DriftParams::new(params.gamma, params.delta, params.x0)?;
    let clamped = p.gamma.max(p.x0);
    let inner = p.log_gamma(clamped).log2();
    Ok(3.0 / p.delta + 2.0 * (2.0 + inner) * p.gamma.ln() / p.delta)
}

/// The classical multiplicative-drift bound `(1 + ln(x0/xmin)) / delta`, for
/// comparison against [`super_multiplicative_drift_bound`].
pub fn multiplicative_drift_bound(delta: f64, x0: f64, xmin: f64) -> Result<f64, DriftError> {
    if delta.is_nan() || delta <= 0.0 {
        return Err(DriftError::DeltaOutOfRange { delta });
    }
    if xmin.is_nan() || x0.is_nan() || xmin < 1.0 || x0 < xmin {
        return Err(DriftError::StateOutOfRange { x: x0 });
    }
    Ok((1.0 + (x0 / xmin).ln()) / delta)
}

/// The two synthetic processes used to validate the bound empirically.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriftProcessKind {
    /// From `x > 0`, jump to 0 with probability `(log_g(x) + 1) d`, else stay.
    JumpToZero,
    /// From `x`, halve with probability `2 (log_g(x) + 1) d` (moving to 0 once
    /// below 1), else stay.
    Halving,
}

/// A synthetic Markov process satisfying the drift condition with equality at
/// every reachable state, provided its step probability never exceeds one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftProcessSpec {
    pub kind: DriftProcessKind,
    pub params: DriftParams,
}

/// Tolerance for step probabilities that are exactly one up to f64 rounding
/// (e.g. `(4 + 1) * 0.2` at `x0 = gamma^4`).
const PROBABILITY_EPS: f64 = 1e-9;

impl DriftProcessSpec {
    pub fn new(kind: DriftProcessKind, params: DriftParams) -> Result<Self, DriftError> {
        let spec = DriftProcessSpec { kind, params };
        spec.validate()?;
        Ok(spec)
    }

    /// The uncapped step probability at state `x`.
    fn raw_probability(&self, x: f64) -> f64 {
        let base = (self.params.log_gamma(x) + 1.0) * self.params.delta;
        match self.kind {
            DriftProcessKind::JumpToZero => base,
            DriftProcessKind::Halving => 2.0 * base,
        }
    }

    /// The step probability, capped at one.
    pub fn step_probability(&self, x: f64) -> f64 {
        self.raw_probability(x).min(1.0)
    }

    /// Expected one-step decrease at state `x`.
    pub fn expected_decrease(&self, x: f64) -> f64 {
        match self.kind {
            DriftProcessKind::JumpToZero => x * self.step_probability(x),
            DriftProcessKind::Halving => (x / 2.0) * self.step_probability(x),
        }
    }

    /// States the process can visit before absorption.
    pub fn reachable_states(&self) -> Vec<f64> {
        let x0 = self.params.x0;
        if x0 == 0.0 {
            return Vec::new();
        }
        match self.kind {
            DriftProcessKind::JumpToZero => vec![x0],
            DriftProcessKind::Halving => {
                let mut states = Vec::new();
                let mut x = x0;
                while x >= 1.0 {
                    states.push(x);
                    x /= 2.0;
                }
                states
            }
        }
    }

    /// Closed-form check that the drift condition holds at every reachable
    /// state. Algebraically this is exactly "the step probability never needs
    /// capping": uncapped, both processes meet the condition with equality.
    pub fn drift_condition_holds(&self) -> bool {
        self.reachable_states()
            .iter()
            .all(|&x| self.raw_probability(x) <= 1.0 + PROBABILITY_EPS)
    }

    fn validate(&self) -> Result<(), DriftError> {
        DriftParams::new(self.params.gamma, self.params.delta, self.params.x0)?;
        if !self.drift_condition_holds() {
            return Err(DriftError::ProbabilityAboveOne {
                kind: self.kind,
                probability: self.raw_probability(self.params.x0),
            });
        }
        Ok(())
    }

    /// Exact expected hitting time: a sum of geometric waits along the chain
    /// of reachable states.
    pub fn expected_hitting_time(&self) -> f64 {
        self.reachable_states().iter().map(|&x| 1.0 / self.step_probability(x)).sum()
    }
}

/// Empirical hitting-time statistics over independent trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct HittingTimeStats {
    pub runs: u64,
    pub mean: f64,
    pub std_error: f64,
    pub histogram: BTreeMap<u64, u64>,
}

/// Simulates `runs` independent trajectories from `x0` and reports the first
/// hitting time of zero. States falling into (0, 1) round down to zero.
pub fn simulate_hitting_time<R: Rng>(
    spec: &DriftProcessSpec,
    runs: u64,
    rng: &mut R,
) -> Result<HittingTimeStats, DriftError> {
    if runs < 1 {
        return Err(DriftError::NoRuns);
    }
    spec.validate()?;
    let mut histogram: BTreeMap<u64, u64> = BTreeMap::new();
    let mut sum = 0.0f64;
    let mut sum_sq = 0.0f64;
    for _ in 0..runs {
        let mut x = spec.params.x0;
        let mut t = 0u64;
        while x != 0.0 {
            let p = spec.step_probability(x);
            if rng.gen::<f64>() < p {
                x = match spec.kind {
                    DriftProcessKind::JumpToZero => 0.0,
                    DriftProcessKind::Halving => {
                        let half = x / 2.0;
                        if half < 1.0 {
                            0.0
                        } else {
                            half
                        }
                    }
                };
            }
            t += 1;
        }
        *histogram.entry(t).or_default() += 1;
        sum += t as f64;
        sum_sq += (t as f64) * (t as f64);
    }
    let mean = sum / runs as f64;
    let variance = (sum_sq / runs as f64 - mean * mean).max(0.0);
    let std_error = (variance / runs as f64).sqrt();
    Ok(HittingTimeStats { runs, mean, std_error, histogram })
}

/// One validated grid point: the process, its simulated hitting time, the
/// bound, and the two checks the grid asserts.
#[derive(Debug, Clone)]
pub struct GridPointReport {
    pub spec: DriftProcessSpec,
    pub stats: HittingTimeStats,
    pub bound: f64,
    pub expected: f64,
    pub condition_holds: bool,
    pub within_bound: bool,
}

/// The default validation grid: `gamma in {2, 10}`, `delta in {0.2, 0.05,
/// 0.01}`, `x0 in {gamma, gamma^4, gamma^16}`, both processes, restricted to
/// combinations where the step probability stays at most one (the processes'
/// own feasibility invariant).
pub fn default_validation_grid() -> Vec<DriftProcessSpec> {
    let mut grid = Vec::new();
    for kind in [DriftProcessKind::JumpToZero, DriftProcessKind::Halving] {
        for gamma in [2.0f64, 10.0] {
            for delta in [0.2f64, 0.05, 0.01] {
                for exponent in [1u32, 4, 16] {
                    let x0 = gamma.powi(exponent as i32);
                    let params = DriftParams { gamma, delta, x0 };
                    if let Ok(spec) = DriftProcessSpec::new(kind, params) {
                        grid.push(spec);
                    }
                }
            }
        }
    }
    grid
}

/// Simulates every grid point with `runs` trajectories and checks both the
/// closed-form drift condition and `mean - 4 se <= bound`.
pub fn validate_grid(master_seed: u64, runs: u64) -> Result<Vec<GridPointReport>, DriftError> {
    let mut reports = Vec::new();
    for (i, spec) in default_validation_grid().into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(master_seed, 0xD21F7, i as u64));
        let stats = simulate_hitting_time(&spec, runs, &mut rng)?;
        let bound = super_multiplicative_drift_bound(&spec.params)?;
        let within_bound = stats.mean - 4.0 * stats.std_error <= bound;
        reports.push(GridPointReport {
            condition_holds: spec.drift_condition_holds(),
            expected: spec.expected_hitting_time(),
            spec,
            stats,
            bound,
            within_bound,
        });
    }
    Ok(reports)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DriftError {
    #[error("gamma must exceed 1, got {gamma}")]
    GammaOutOfRange { gamma: f64 },
    #[error("delta must be positive, got {delta}")]
    DeltaOutOfRange { delta: f64 },
    #[error("states live in {{0}} u [1, inf), got {x}")]
    StateOutOfRange { x: f64 },
    #[error("{kind:?} step probability {probability} exceeds 1 at the start state")]
    ProbabilityAboveOne { kind: DriftProcessKind, probability: f64 },
    #[error("at least one trajectory is required")]
    NoRuns,
}
