//! The homogeneous treatment-effects duration model: analytic densities,
//! the conditional integrated hazard of `Y` given `W` (correct and
//! mis-signed variants), and the sub-densities of the identified minimum.
//!
//! Conventions: the boundary `y = w` belongs to the pre-treatment branch;
//! ties are measure zero and carry no distributional weight.

use crate::hazards::{HazardError, HazardSpec};
use crate::quad::{self, QuadError};
use thiserror::Error;

/// Quadrature tolerance for the density/sub-survival integrals.
pub const QUAD_TOL: f64 = 1e-12;

/// Truncation point T is chosen so exp(-Λ₀(T) - Λ_W(T)) < this bound,
/// i.e. the discarded tail mass of the identified minimum is negligible.
pub const TAIL_BOUND: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error(transparent)]
    Hazard(#[from] HazardError),
    #[error(transparent)]
    Quad(#[from] QuadError),
}

/// Treatment-time hazard `h_W`, pre-treatment outcome hazard `h0` and
/// post-treatment outcome hazard `h1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TreatmentModel {
    pub h_w: HazardSpec,
    pub h0: HazardSpec,
    pub h1: HazardSpec,
}

/// Outcome of inverting a conditional integrated hazard. In flawed mode the
/// solution may be negative; it is returned as-is with `absurd` set rather
/// than clamped, since the negativity is exactly the pathology under study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionResult {
    pub y: f64,
    pub absurd: bool,
}

impl TreatmentModel {
    pub fn new(h_w: HazardSpec, h0: HazardSpec, h1: HazardSpec) -> Result<Self, HazardError> {
        h_w.validate()?;
        h0.validate()?;
        h1.validate()?;
        Ok(TreatmentModel { h_w, h0, h1 })
    }

    /// Marginal density of the treatment time: h_W(w)·exp(−Λ_W(w)).
    pub fn density_f_w(&self, w: f64) -> Result<f64, ModelError> {
        Ok(self.h_w.evaluate(w)? * (-self.h_w.cumulative(w)?).exp())
    }

    /// Integrated hazard of Y at y given W = w:
    /// Λ₀(y) for y ≤ w, and Λ₀(w) + ∫_w^y h₁ for y > w.
    /// Continuous and strictly increasing in y.
    pub fn conditional_integrated_hazard(&self, w: f64, y: f64) -> Result<f64, ModelError> {
        if y <= w {
            Ok(self.h0.cumulative(y)?)
        } else {
            Ok(self.h1.cumulative(y)? + self.hazard_gap(w)?)
        }
    }

    /// Λ₀(w) − Λ₁(w); exactly 0.0 when h0 and h1 are the same spec, which
    /// makes the flawed construction collapse onto the correct one bit-for-bit.
    fn hazard_gap(&self, w: f64) -> Result<f64, ModelError> {
        Ok(self.h0.cumulative(w)? - self.h1.cumulative(w)?)
    }

    /// The mis-signed integrated hazard: for y < w it substitutes
    /// Λ₀(w) − ∫_y^w h₁ for the correct Λ₀(y), i.e. it integrates the
    /// post-treatment hazard backwards from w instead of the pre-treatment
    /// hazard forwards from 0. For y ≥ w it coincides with the correct
    /// version. May be negative at small y.
    pub fn jl_flawed_integrated_hazard(&self, w: f64, y: f64) -> Result<f64, ModelError> {
        if y.is_nan() || y < 0.0 {
            return Err(HazardError::NegativeTime(y).into());
        }
        // Both branches reduce to Λ₁(y) + (Λ₀(w) − Λ₁(w)).
        Ok(self.h1.cumulative(y)? + self.hazard_gap(w)?)
    }

    /// Solves `cumulative(y) = x` in y for the requested variant.
    ///
    /// Correct mode always has a unique solution y ≥ 0. Flawed mode solves
    /// on the whole real line, extending the first h₁ segment linearly below
    /// zero; negative solutions come back tagged `absurd`.
    pub fn invert_conditional(
        &self,
        w: f64,
        x: f64,
        flawed: bool,
    ) -> Result<InversionResult, ModelError> {
        if w < 0.0 || w.is_nan() {
            return Err(HazardError::NegativeTime(w).into());
        }
        if x < 0.0 || x.is_nan() {
            return Err(HazardError::NegativeMass(x).into());
        }
        let l0_w = self.h0.cumulative(w)?;
        if flawed {
            // Λ₁(y) + gap = x  ⇔  Λ₁(y) = x − gap
            let target = x - self.hazard_gap(w)?;
            if target >= 0.0 {
                Ok(InversionResult {
                    y: self.h1.inverse_cumulative(target)?,
                    absurd: false,
                })
            } else {
                Ok(InversionResult {
                    y: target / self.h1.initial_rate(),
                    absurd: true,
                })
            }
        } else if x <= l0_w {
            Ok(InversionResult {
                y: self.h0.inverse_cumulative(x)?,
                absurd: false,
            })
        } else {
            let target = x - self.hazard_gap(w)?;
            Ok(InversionResult {
                y: self.h1.inverse_cumulative(target)?,
                absurd: false,
            })
        }
    }

    /// Conditional density of Y given W = w:
    /// h₀(y)·exp(−Λ₀(y)) on y ≤ w, h₁(y)·exp(−Λ₀(w) − ∫_w^y h₁) on y > w.
    pub fn density_f_y_given_w(&self, w: f64, y: f64) -> Result<f64, ModelError> {
        if w < 0.0 || w.is_nan() {
            return Err(HazardError::NegativeTime(w).into());
        }
        if y <= w {
            Ok(self.h0.evaluate(y)? * (-self.h0.cumulative(y)?).exp())
        } else {
            let exponent = self.h1.cumulative(y)? + self.hazard_gap(w)?;
            Ok(self.h1.evaluate(y)? * (-exponent).exp())
        }
    }

    /// Sub-density of Y on {Y < W}: h₀(y)·exp(−Λ₀(y) − Λ_W(y)).
    /// Depends only on h₀ and h_W.
    pub fn subdensity_y_first(&self, y: f64) -> Result<f64, ModelError> {
        Ok(self.h0.evaluate(y)? * (-(self.h0.cumulative(y)? + self.h_w.cumulative(y)?)).exp())
    }

    /// Sub-density of W on {W < Y}: h_W(w)·exp(−Λ_W(w) − Λ₀(w)).
    /// Depends only on h₀ and h_W.
    pub fn subdensity_w_first(&self, w: f64) -> Result<f64, ModelError> {
        Ok(self.h_w.evaluate(w)? * (-(self.h_w.cumulative(w)? + self.h0.cumulative(w)?)).exp())
    }

    /// Pr(Y > y, Y < W) evaluated through its mixture form,
    /// ∫_y^∞ [exp(−Λ₀(y)) − exp(−Λ₀(w))]·f_W(w) dw,
    /// by adaptive quadrature truncated at `upper_truncation`. This is an
    /// independent numeric route to the same quantity as integrating
    /// `subdensity_y_first`, and the two are compared in the tests.
    pub fn subsurvival_y_first_quadrature(
        &self,
        y: f64,
        upper_truncation: f64,
    ) -> Result<f64, ModelError> {
        if y < 0.0 || y.is_nan() {
            return Err(HazardError::NegativeTime(y).into());
        }
        if y >= upper_truncation {
            return Ok(0.0);
        }
        let surv_y = (-self.h0.cumulative(y)?).exp();
        let mut splits: Vec<f64> = self.h_w.breakpoints().to_vec();
        splits.extend_from_slice(self.h0.breakpoints());
        splits.sort_by(f64::total_cmp);
        let value = quad::integrate_split(
            |w| {
                let fw = self.h_w.evaluate(w).unwrap() * (-self.h_w.cumulative(w).unwrap()).exp();
                (surv_y - (-self.h0.cumulative(w).unwrap()).exp()) * fw
            },
            y,
            upper_truncation,
            &splits,
            QUAD_TOL,
        )?;
        Ok(value)
    }

    /// Smallest power-of-two horizon T with exp(−Λ₀(T) − Λ_W(T)) < `TAIL_BOUND`.
    pub fn default_truncation(&self) -> f64 {
        let target = -TAIL_BOUND.ln();
        let mut t = 1.0;
        while self.h0.cumulative(t).unwrap() + self.h_w.cumulative(t).unwrap() < target {
            t *= 2.0;
        }
        t
    }
}
