//! The identified minimum: (min(W, Y), which event came first) and its
//! analytic sub-survival functions.

use crate::hazards::{HazardError, HazardSpec};
use crate::model::{ModelError, TreatmentModel, QUAD_TOL};
use crate::quad;
use crate::sampling::DurationPair;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cause {
    YFirst,
    WFirst,
    Tie,
}

impl Cause {
    pub fn label(self) -> &'static str {
        match self {
            Cause::YFirst => "Y_FIRST",
            Cause::WFirst => "W_FIRST",
            Cause::Tie => "TIE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentifiedMinimum {
    pub t: f64,
    pub cause: Cause,
}

#[derive(Debug, Error, PartialEq)]
pub enum CompetingRisksError {
    #[error("absurd-flagged pair cannot be classified as an identified minimum")]
    AbsurdPair,
    #[error("sub-survival is defined per actual cause, not for ties")]
    TieCause,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Classifies one pair by strict comparison. TIE only on exact float
/// equality; the continuous model assigns it probability zero.
pub fn identify_minimum(p: &DurationPair) -> Result<IdentifiedMinimum, CompetingRisksError> {
    if p.absurd {
        return Err(CompetingRisksError::AbsurdPair);
    }
    let (t, cause) = if p.y < p.w {
        (p.y, Cause::YFirst)
    } else if p.w < p.y {
        (p.w, Cause::WFirst)
    } else {
        (p.w, Cause::Tie)
    };
    Ok(IdentifiedMinimum { t, cause })
}

/// Classifies a batch, dropping absurd pairs; returns the minima and the
/// number dropped.
pub fn minima_from_pairs(pairs: &[DurationPair]) -> (Vec<IdentifiedMinimum>, usize) {
    let mut out = Vec::with_capacity(pairs.len());
    let mut absurd = 0usize;
    for p in pairs {
        match identify_minimum(p) {
            Ok(m) => out.push(m),
            Err(_) => absurd += 1,
        }
    }
    (out, absurd)
}

/// Sub-survival of the given cause: ∫_t^∞ of its sub-density. Closed form
/// when h_W and h0 are both constant, quadrature otherwise. Never touches
/// h1, so the result is bit-identical across models differing only in h1.
pub fn analytic_subsurvival(
    m: &TreatmentModel,
    cause: Cause,
    t: f64,
) -> Result<f64, CompetingRisksError> {
    if t < 0.0 || t.is_nan() {
        return Err(CompetingRisksError::Model(HazardError::NegativeTime(t).into()));
    }
    if cause == Cause::Tie {
        return Err(CompetingRisksError::TieCause);
    }
    if let (HazardSpec::Constant { rate: lw }, HazardSpec::Constant { rate: l0 }) =
        (&m.h_w, &m.h0)
    {
        let cause_rate = match cause {
            Cause::YFirst => *l0,
            Cause::WFirst => *lw,
            Cause::Tie => unreachable!(),
        };
        let total = l0 + lw;
        return Ok(cause_rate / total * (-total * t).exp());
    }
    let upper = m.default_truncation();
    if t >= upper {
        return Ok(0.0);
    }
    let mut splits: Vec<f64> = m.h_w.breakpoints().to_vec();
    splits.extend_from_slice(m.h0.breakpoints());
    splits.sort_by(f64::total_cmp);
    let integrand = |tau: f64| match cause {
        Cause::YFirst => m.subdensity_y_first(tau).unwrap(),
        Cause::WFirst => m.subdensity_w_first(tau).unwrap(),
        Cause::Tie => unreachable!(),
    };
    let v = quad::integrate_split(integrand, t, upper, &splits, QUAD_TOL)
        .map_err(ModelError::from)?;
    Ok(v)
}
