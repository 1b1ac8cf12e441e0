//! Hazard function families with exact evaluation, integration and inversion.
//!
//! Only constant and piecewise-constant hazards are supported: piecewise
//! constants approximate arbitrary positive hazards while keeping the
//! cumulative hazard and its inverse in closed form, which the samplers
//! require. No iterative root finding happens in this module.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum HazardError {
    #[error("hazard rate must be strictly positive and finite, got {0}")]
    NonpositiveRate(f64),
    #[error("breakpoints must be strictly increasing, positive and finite")]
    BadBreakpoints,
    #[error("need exactly one more rate than breakpoints, got {rates} rates for {breaks} breakpoints")]
    LengthMismatch { rates: usize, breaks: usize },
    #[error("time argument must be nonnegative, got {0}")]
    NegativeTime(f64),
    #[error("cumulative-hazard argument must be nonnegative, got {0}")]
    NegativeMass(f64),
}

/// A positive hazard function with closed-form cumulative hazard and inverse.
///
/// The first piecewise segment starts implicitly at time 0; at a breakpoint
/// the right segment's rate applies (right-continuity).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum HazardSpec {
    Constant {
        rate: f64,
    },
    Piecewise {
        breaks: Vec<f64>,
        rates: Vec<f64>,
    },
}

impl HazardSpec {
    pub fn constant(rate: f64) -> Result<Self, HazardError> {
        let h = HazardSpec::Constant { rate };
        h.validate()?;
        Ok(h)
    }

    pub fn piecewise(breaks: Vec<f64>, rates: Vec<f64>) -> Result<Self, HazardError> {
        let h = HazardSpec::Piecewise { breaks, rates };
        h.validate()?;
        Ok(h)
    }

    /// Checks the family invariants. Deserialized specs must be validated
    /// before use; the constructors do this automatically.
    pub fn validate(&self) -> Result<(), HazardError> {
        match self {
            HazardSpec::Constant { rate } => check_rate(*rate),
            HazardSpec::Piecewise { breaks, rates } => {
                if rates.len() != breaks.len() + 1 {
                    return Err(HazardError::LengthMismatch {
                        rates: rates.len(),
                        breaks: breaks.len(),
                    });
                }
                for &r in rates {
                    check_rate(r)?;
                }
                let increasing = breaks
                    .windows(2)
                    .all(|w| w[0] < w[1]);
                let positive = breaks.iter().all(|b| b.is_finite() && *b > 0.0);
                if !(increasing && positive) {
                    return Err(HazardError::BadBreakpoints);
                }
                Ok(())
            }
        }
    }

    /// h(t). On a breakpoint the right segment's rate is returned.
    pub fn evaluate(&self, t: f64) -> Result<f64, HazardError> {
        if t < 0.0 || t.is_nan() {
            return Err(HazardError::NegativeTime(t));
        }
        Ok(match self {
            HazardSpec::Constant { rate } => *rate,
            HazardSpec::Piecewise { breaks, rates } => {
                let seg = breaks.partition_point(|b| *b <= t);
                rates[seg]
            }
        })
    }

    /// Λ(t) = ∫₀ᵗ h(τ)dτ, as a sum of segment areas.
    pub fn cumulative(&self, t: f64) -> Result<f64, HazardError> {
        if t < 0.0 || t.is_nan() {
            return Err(HazardError::NegativeTime(t));
        }
        Ok(match self {
            HazardSpec::Constant { rate } => rate * t,
            HazardSpec::Piecewise { breaks, rates } => {
                let mut total = 0.0;
                let mut start = 0.0;
                for (i, &b) in breaks.iter().enumerate() {
                    if t <= b {
                        return Ok(total + rates[i] * (t - start));
                    }
                    total += rates[i] * (b - start);
                    start = b;
                }
                total + rates[rates.len() - 1] * (t - start)
            }
        })
    }

    /// The unique t with Λ(t) = x, by segment-wise linear inversion.
    pub fn inverse_cumulative(&self, x: f64) -> Result<f64, HazardError> {
        if x < 0.0 || x.is_nan() {
            return Err(HazardError::NegativeMass(x));
        }
        Ok(match self {
            HazardSpec::Constant { rate } => x / rate,
            HazardSpec::Piecewise { breaks, rates } => {
                let mut acc = 0.0;
                let mut start = 0.0;
                for (i, &b) in breaks.iter().enumerate() {
                    let seg_mass = rates[i] * (b - start);
                    if x <= acc + seg_mass {
                        return Ok(start + (x - acc) / rates[i]);
                    }
                    acc += seg_mass;
                    start = b;
                }
                start + (x - acc) / rates[rates.len() - 1]
            }
        })
    }

    /// Rate of the first segment. Used to extend the flawed integrated
    /// hazard linearly to negative times.
    pub fn initial_rate(&self) -> f64 {
        match self {
            HazardSpec::Constant { rate } => *rate,
            HazardSpec::Piecewise { rates, .. } => rates[0],
        }
    }

    /// Interior breakpoints, empty for the constant family. Quadrature
    /// routines split integration intervals here.
    pub fn breakpoints(&self) -> &[f64] {
        match self {
            HazardSpec::Constant { .. } => &[],
            HazardSpec::Piecewise { breaks, .. } => breaks,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, HazardSpec::Constant { .. })
    }
}

fn check_rate(rate: f64) -> Result<(), HazardError> {
    if rate.is_finite() && rate > 0.0 {
        Ok(())
    } else {
        Err(HazardError::NonpositiveRate(rate))
    }
}
