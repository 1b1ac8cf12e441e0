//! Empirical sub-survival curves, sup-distance goodness-of-fit against the
//! analytic sub-survivals, the h1-invariance two-sample test, and the
//! selected-subsample regression demonstration.
//!
//! Thresholds are fixed asymptotic 1%-level critical values: 1.63/√n for the
//! one-sample sup-distance and 1.628·√((n+m)/(n·m)) for the two-sample one.
//! Both are conservative for sub-survival comparisons at the sample sizes
//! used here. The sup is taken over a 1000-point grid spanning [0, q999] of
//! the observed minima; grid error is second order at these n.

use crate::competing_risks::{
    analytic_subsurvival, minima_from_pairs, Cause, CompetingRisksError, IdentifiedMinimum,
};
use crate::model::TreatmentModel;
use crate::sampling::{sample_batch, DurationPair, Mode, SamplingError};
use thiserror::Error;

pub const ONE_SAMPLE_CRITICAL: f64 = 1.63;
pub const TWO_SAMPLE_CRITICAL: f64 = 1.628;
pub const GRID_POINTS: usize = 1000;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least one non-tie observation")]
    EmptyInput,
    #[error("need at least {required} observations for the test, got {got}")]
    TooFewObservations { got: usize, required: usize },
    #[error("h1-invariance test requires models identical in h_W and h0")]
    NotH1Only,
    #[error("selected regression needs at least 2 pairs with y > w, got {0}")]
    TooFewSelected(usize),
    #[error("selected regression is degenerate: no variation in w")]
    DegenerateRegression,
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    CompetingRisks(#[from] CompetingRisksError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    Empirical,
    Analytic,
}

/// A sub-survival function of one cause, tabulated on a sorted support.
#[derive(Debug, Clone)]
pub struct SubsurvivalCurve {
    pub kind: CurveKind,
    pub cause: Cause,
    pub support: Vec<f64>,
    pub values: Vec<f64>,
    n_total: usize,
}

impl SubsurvivalCurve {
    /// S_n(t) = (1/n)·#{i : t_i > t, cause_i = cause}, ties excluded from n.
    pub fn eval(&self, t: f64) -> f64 {
        let idx = self.support.partition_point(|s| *s <= t);
        (self.support.len() - idx) as f64 / self.n_total as f64
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }
}

/// Empirical sub-survival of `cause` from a classified sample.
pub fn empirical_subsurvival(
    mins: &[IdentifiedMinimum],
    cause: Cause,
) -> Result<SubsurvivalCurve, StatsError> {
    let n_total = mins.iter().filter(|m| m.cause != Cause::Tie).count();
    if n_total == 0 {
        return Err(StatsError::EmptyInput);
    }
    let mut support: Vec<f64> = mins
        .iter()
        .filter(|m| m.cause == cause && cause != Cause::Tie)
        .map(|m| m.t)
        .collect();
    support.sort_by(f64::total_cmp);
    let len = support.len();
    let values = (0..len).map(|i| (len - i - 1) as f64 / n_total as f64).collect();
    Ok(SubsurvivalCurve {
        kind: CurveKind::Empirical,
        cause,
        support,
        values,
        n_total,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GofDetails {
    pub cause: Option<Cause>,
    pub grid_points: usize,
    pub grid_upper: f64,
}

/// Result of a sup-distance test. `pass` holds exactly when
/// `statistic <= threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct GofReport {
    pub statistic: f64,
    pub n: usize,
    pub threshold: f64,
    pub pass: bool,
    pub details: GofDetails,
}

fn percentile_999(mins: &[IdentifiedMinimum]) -> f64 {
    let mut times: Vec<f64> = mins
        .iter()
        .filter(|m| m.cause != Cause::Tie)
        .map(|m| m.t)
        .collect();
    times.sort_by(f64::total_cmp);
    let idx = ((times.len() as f64) * 0.999).floor() as usize;
    times[idx.min(times.len() - 1)]
}

fn grid(upper: f64) -> impl Iterator<Item = f64> {
    (0..GRID_POINTS).map(move |i| upper * i as f64 / (GRID_POINTS - 1) as f64)
}

/// Sup-distance between the empirical sub-survival of `cause` and the
/// analytic one implied by `m`, on the evaluation grid.
pub fn gof_subsurvival(
    mins: &[IdentifiedMinimum],
    m: &TreatmentModel,
    cause: Cause,
) -> Result<GofReport, StatsError> {
    let curve = empirical_subsurvival(mins, cause)?;
    let n = curve.n_total();
    if n < 100 {
        return Err(StatsError::TooFewObservations { got: n, required: 100 });
    }
    let upper = percentile_999(mins);
    let mut statistic = 0.0f64;
    for t in grid(upper) {
        let diff = (curve.eval(t) - analytic_subsurvival(m, cause, t)?).abs();
        statistic = statistic.max(diff);
    }
    let threshold = ONE_SAMPLE_CRITICAL / (n as f64).sqrt();
    Ok(GofReport {
        statistic,
        n,
        threshold,
        pass: statistic <= threshold,
        details: GofDetails { cause: Some(cause), grid_points: GRID_POINTS, grid_upper: upper },
    })
}

/// Sup over both causes and the grid of the difference between two
/// empirical sub-survival families. Identical samples give exactly 0.
pub fn two_sample_statistic(
    a: &[IdentifiedMinimum],
    b: &[IdentifiedMinimum],
) -> Result<f64, StatsError> {
    let upper = percentile_999(a).max(percentile_999(b));
    let mut statistic = 0.0f64;
    for cause in [Cause::YFirst, Cause::WFirst] {
        let ca = empirical_subsurvival(a, cause)?;
        let cb = empirical_subsurvival(b, cause)?;
        for t in grid(upper) {
            statistic = statistic.max((ca.eval(t) - cb.eval(t)).abs());
        }
    }
    Ok(statistic)
}

/// Two-sample comparison of the identified-minimum distributions of two
/// models, from independently seeded correct-mode batches.
pub fn two_sample_minimum_test(
    m1: &TreatmentModel,
    m2: &TreatmentModel,
    n: usize,
    seed: u64,
) -> Result<GofReport, StatsError> {
    let batch1 = sample_batch(m1, n, seed, Mode::Correct)?;
    let batch2 = sample_batch(m2, n, seed.wrapping_add(1), Mode::Correct)?;
    let (mins1, _) = minima_from_pairs(&batch1);
    let (mins2, _) = minima_from_pairs(&batch2);
    let n1 = mins1.iter().filter(|m| m.cause != Cause::Tie).count();
    let n2 = mins2.iter().filter(|m| m.cause != Cause::Tie).count();
    let statistic = two_sample_statistic(&mins1, &mins2)?;
    let threshold =
        TWO_SAMPLE_CRITICAL * (((n1 + n2) as f64) / ((n1 as f64) * (n2 as f64))).sqrt();
    Ok(GofReport {
        statistic,
        n: n1 + n2,
        threshold,
        pass: statistic <= threshold,
        details: GofDetails { cause: None, grid_points: GRID_POINTS, grid_upper: f64::NAN },
    })
}

/// The h1-invariance check: models sharing h_W and h0 but differing in h1
/// must produce indistinguishable identified-minimum distributions.
pub fn h1_invariance_test(
    m1: &TreatmentModel,
    m2: &TreatmentModel,
    n: usize,
    seed: u64,
) -> Result<GofReport, StatsError> {
    if m1.h_w != m2.h_w || m1.h0 != m2.h0 {
        return Err(StatsError::NotH1Only);
    }
    two_sample_minimum_test(m1, m2, n, seed)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionFit {
    pub slope: f64,
    pub intercept: f64,
    pub n_selected: usize,
}

/// OLS of y on w restricted to the selected subsample {y > w}. A
/// demonstration statistic only: under selection it does not recover a
/// structural treatment effect.
pub fn naive_selected_regression(pairs: &[DurationPair]) -> Result<RegressionFit, StatsError> {
    let selected: Vec<&DurationPair> = pairs.iter().filter(|p| !p.absurd && p.y > p.w).collect();
    let n = selected.len();
    if n < 2 {
        return Err(StatsError::TooFewSelected(n));
    }
    let nf = n as f64;
    let mean_w = selected.iter().map(|p| p.w).sum::<f64>() / nf;
    let mean_y = selected.iter().map(|p| p.y).sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for p in &selected {
        let dw = p.w - mean_w;
        sxx += dw * dw;
        sxy += dw * (p.y - mean_y);
    }
    if sxx == 0.0 {
        return Err(StatsError::DegenerateRegression);
    }
    let slope = sxy / sxx;
    Ok(RegressionFit { slope, intercept: mean_y - slope * mean_w, n_selected: n })
}
