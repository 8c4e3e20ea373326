//! Closed-form auxiliary formulas: linear birth-death survival, biased
//! random-walk ruin, and the logistic sweep curves. Each has an independent
//! Monte Carlo cross-check in [`crate::oracle`].

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StochasticError {
    #[error("domain error: {0}")]
    Domain(String),
}

/// Survival probability at time `t` of a linear birth-death process where
/// each individual gives birth at rate 1 and dies at rate
/// `1 - selection_gap`, started from `initial` individuals.
///
/// For one founder this is `g / (1 - (1-g) e^{-g t})`; independent founder
/// lines multiply the extinction probabilities.
pub fn bd_survival(selection_gap: f64, t: f64, initial: u64) -> Result<f64, StochasticError> {
    if !(selection_gap > 0.0 && selection_gap < 1.0) {
        return Err(StochasticError::Domain(format!(
            "selection gap must lie in (0,1), got {selection_gap}"
        )));
    }
    if !(t >= 0.0) {
        return Err(StochasticError::Domain(format!("t must be >= 0, got {t}")));
    }
    if initial == 0 {
        return Err(StochasticError::Domain("initial must be >= 1".to_string()));
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    let g = selection_gap;
    let p1 = (g / (1.0 - (1.0 - g) * (-g * t).exp())).min(1.0);
    if initial == 1 {
        return Ok(p1);
    }
    // 1 - (1 - p1)^k, stable for large k.
    Ok(-((initial as f64) * (-p1).ln_1p()).exp_m1())
}

/// Probability that a biased walk (down-step odds `q = d/b`) started at
/// `start` hits 0 before `level_up`.
///
/// Evaluated in log space so `q^level` never overflows; `q = 1` falls back
/// to the symmetric ruin `1 - start/level_up`.
pub fn ruin_before(level_up: u64, start: u64, q: f64) -> Result<f64, StochasticError> {
    if !(q > 0.0) || !q.is_finite() {
        return Err(StochasticError::Domain(format!(
            "odds q must be positive and finite, got {q}"
        )));
    }
    if start > level_up || level_up == 0 {
        return Err(StochasticError::Domain(format!(
            "need 0 <= start <= level_up with level_up >= 1, got start = {start}, level_up = {level_up}"
        )));
    }
    if start == 0 {
        return Ok(1.0);
    }
    if start == level_up {
        return Ok(0.0);
    }
    let k = start as f64;
    let l = level_up as f64;
    let ln_q = q.ln();
    if ln_q == 0.0 {
        return Ok(1.0 - k / l);
    }
    // Reach probability (q^k - 1)/(q^L - 1), written with expm1 on the
    // non-overflowing side of the bias.
    let reach = if ln_q > 0.0 {
        ((k - l) * ln_q).exp() * (-(-k * ln_q).exp_m1()) / (-(-l * ln_q).exp_m1())
    } else {
        (-(k * ln_q).exp_m1()) / (-(l * ln_q).exp_m1())
    };
    Ok(1.0 - reach)
}

/// The curve `f(t) = 1 / (1 + B e^{-rate (t - anchor_time)})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticCurve {
    pub b_coeff: f64,
    pub rate: f64,
    pub anchor_time: f64,
}

impl LogisticCurve {
    pub fn new(b_coeff: f64, rate: f64, anchor_time: f64) -> Result<Self, StochasticError> {
        if !(b_coeff > 0.0) {
            return Err(StochasticError::Domain(format!(
                "B must be positive, got {b_coeff}"
            )));
        }
        Ok(Self {
            b_coeff,
            rate,
            anchor_time,
        })
    }

    /// Curve through `(anchor, value)`: `B = 1/value - 1`.
    pub fn through(
        value_at_anchor: f64,
        rate: f64,
        anchor_time: f64,
    ) -> Result<Self, StochasticError> {
        if !(value_at_anchor > 0.0 && value_at_anchor < 1.0) {
            return Err(StochasticError::Domain(format!(
                "anchor value must lie in (0,1), got {value_at_anchor}"
            )));
        }
        Self::new(1.0 / value_at_anchor - 1.0, rate, anchor_time)
    }
}

pub fn logistic_value(curve: &LogisticCurve, t: f64) -> f64 {
    1.0 / (1.0 + curve.b_coeff * (-curve.rate * (t - curve.anchor_time)).exp())
}

#[derive(Debug, Clone, Copy)]
pub struct OdeResidualReport {
    pub max_residual: f64,
    pub step: f64,
}

/// Checks `f' = rate * f (1 - f)` by central differences on a grid of
/// `points` times spanning `[anchor, anchor + span/rate]`.
pub fn logistic_ode_residual(curve: &LogisticCurve, span: f64, points: usize) -> OdeResidualReport {
    let h = 1e-4 / curve.rate.abs().max(f64::MIN_POSITIVE);
    let mut max_residual: f64 = 0.0;
    let t_end = curve.anchor_time + span / curve.rate.abs().max(f64::MIN_POSITIVE);
    for i in 0..points {
        let t = curve.anchor_time + (t_end - curve.anchor_time) * i as f64 / (points - 1) as f64;
        let fd = (logistic_value(curve, t + h) - logistic_value(curve, t - h)) / (2.0 * h);
        let f = logistic_value(curve, t);
        let analytic = curve.rate * f * (1.0 - f);
        max_residual = max_residual.max((fd - analytic).abs());
    }
    OdeResidualReport {
        max_residual,
        step: h,
    }
}
