//! Fixed-step integration of the fluid limit `dx/dt = beta(x)` (or its
//! selection-only reduction `dx/dt = b(x)`) and the sup-norm comparison of
//! simulated paths against it.

use crate::model::{drift, Parameters, SimplexPoint};
use crate::rng::Xoshiro256PlusPlus;
use crate::simulator::{sample_trajectory, ReplicateSummary, SimError};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FluidError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("coverage error: {0}")]
    Range(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Which vector field to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    /// Full drift with selection, recombination and mutation.
    FullBeta,
    /// Selection only: `b(x) = s((1-x1-x2-2x3)x1, (1-x1-x2-2x3)x2,
    /// (2-x1-x2-2x3)x3)`.
    SelectionOnly,
}

/// `b(x)`, the selection-only field.
pub fn selection_field(x: &SimplexPoint, s: f64) -> [f64; 3] {
    let lin = 1.0 - x.xi1 - x.xi2 - 2.0 * x.xi3;
    [
        s * lin * x.xi1,
        s * lin * x.xi2,
        s * (2.0 - x.xi1 - x.xi2 - 2.0 * x.xi3) * x.xi3,
    ]
}

/// `b(x)/s`; its empirical Lipschitz constant is measured, not assumed.
pub fn btilde(x: &SimplexPoint) -> [f64; 3] {
    selection_field(x, 1.0)
}

#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub times: Vec<f64>,
    pub values: Vec<SimplexPoint>,
    pub field: Field,
    /// Largest simplex excursion that had to be clipped (0 when the path
    /// stayed inside).
    pub max_simplex_violation: f64,
}

fn eval_field(x: &SimplexPoint, params: &Parameters, field: Field) -> [f64; 3] {
    match field {
        Field::FullBeta => drift(x, params),
        Field::SelectionOnly => selection_field(x, params.selection),
    }
}

/// Classical fixed-step fourth-order integration over `t_span`; the last
/// step is shortened to land exactly on the right endpoint.
pub fn integrate(
    initial: &SimplexPoint,
    params: &Parameters,
    t_span: (f64, f64),
    step: f64,
    field: Field,
) -> Result<OdeSolution, FluidError> {
    if !(step > 0.0) {
        return Err(FluidError::Domain(format!(
            "step must be positive, got {step}"
        )));
    }
    if !(t_span.1 >= t_span.0) {
        return Err(FluidError::Domain(format!(
            "t_span must be increasing, got ({}, {})",
            t_span.0, t_span.1
        )));
    }
    if !initial.on_simplex(1e-9) {
        return Err(FluidError::Domain(format!(
            "initial point off the simplex: {initial:?}"
        )));
    }
    let mut times = vec![t_span.0];
    let mut values = vec![*initial];
    let mut x = initial.as_array();
    let mut t = t_span.0;
    let mut violation: f64 = 0.0;

    let axpy = |x: &[f64; 3], k: &[f64; 3], h: f64| -> SimplexPoint {
        SimplexPoint::new(x[0] + h * k[0], x[1] + h * k[1], x[2] + h * k[2])
    };

    while t < t_span.1 {
        let h = step.min(t_span.1 - t);
        let p = SimplexPoint::new(x[0], x[1], x[2]);
        let k1 = eval_field(&p, params, field);
        let k2 = eval_field(&axpy(&x, &k1, h / 2.0), params, field);
        let k3 = eval_field(&axpy(&x, &k2, h / 2.0), params, field);
        let k4 = eval_field(&axpy(&x, &k3, h), params, field);
        for i in 0..3 {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            if x[i] < 0.0 {
                violation = violation.max(-x[i]);
                x[i] = 0.0;
            }
        }
        let sum = x[0] + x[1] + x[2];
        if sum > 1.0 {
            violation = violation.max(sum - 1.0);
            for v in x.iter_mut() {
                *v /= sum;
            }
        }
        t += h;
        times.push(t);
        values.push(SimplexPoint::new(x[0], x[1], x[2]));
    }

    Ok(OdeSolution {
        times,
        values,
        field,
        max_simplex_violation: violation,
    })
}

/// Largest Euclidean distance, over the solution grid restricted to
/// `window`, between the recorded simulation fractions (piecewise-constant
/// in time) and the integrated path.
pub fn sup_deviation(
    summary: &ReplicateSummary,
    solution: &OdeSolution,
    window: (f64, f64),
) -> Result<f64, FluidError> {
    if window.1 < window.0 {
        return Err(FluidError::Range(format!(
            "window must be ordered, got ({}, {})",
            window.0, window.1
        )));
    }
    let (sol_first, sol_last) = (
        *solution
            .times
            .first()
            .ok_or_else(|| FluidError::Range("empty solution".into()))?,
        *solution.times.last().unwrap(),
    );
    if sol_first > window.0 || sol_last < window.1 {
        return Err(FluidError::Range(format!(
            "solution covers [{sol_first}, {sol_last}], window is [{}, {}]",
            window.0, window.1
        )));
    }
    if summary.samples.is_empty() {
        return Err(FluidError::Range("trajectory has no samples".into()));
    }
    let sim_first = summary.samples[0].time;
    let sim_last = summary.samples[summary.samples.len() - 1].time;
    if sim_first > window.0 || sim_last < window.1 {
        return Err(FluidError::Range(format!(
            "trajectory covers [{sim_first}, {sim_last}], window is [{}, {}]",
            window.0, window.1
        )));
    }
    let mut times = Vec::new();
    let mut idxs = Vec::new();
    for (i, t) in solution.times.iter().enumerate() {
        if (window.0..=window.1).contains(t) {
            times.push(*t);
            idxs.push(i);
        }
    }
    let sim = sample_trajectory(summary, &times)?;
    let mut sup: f64 = 0.0;
    for (j, &i) in idxs.iter().enumerate() {
        let ode = solution.values[i];
        let d1 = sim[j].xi1 - ode.xi1;
        let d2 = sim[j].xi2 - ode.xi2;
        let d3 = sim[j].xi3 - ode.xi3;
        sup = sup.max((d1 * d1 + d2 * d2 + d3 * d3).sqrt());
    }
    Ok(sup)
}

/// Deviation-probability bound `4 L T / Delta^2` with
/// `Delta = eps0 e^{-lipschitz T} / 3`, clamped to `[0, 1]`.
pub fn dn_probability_bound(t: f64, eps0: f64, lipschitz: f64, l: f64) -> f64 {
    let delta = eps0 * (-lipschitz * t).exp() / 3.0;
    (4.0 * l * t / (delta * delta)).clamp(0.0, 1.0)
}

/// Empirical Lipschitz constant of `b/s` over random simplex pairs.
pub fn measure_btilde_lipschitz(pairs: usize, seed: u64) -> f64 {
    let mut rng = Xoshiro256PlusPlus::from_seed(seed);
    let mut random_point = move || {
        // Dirichlet(1,1,1,1) via normalized exponentials.
        let e: Vec<f64> = (0..4).map(|_| rng.next_exp(1.0)).collect();
        let sum: f64 = e.iter().sum();
        SimplexPoint::new(e[0] / sum, e[1] / sum, e[2] / sum)
    };
    let mut best: f64 = 0.0;
    for _ in 0..pairs {
        let x = random_point();
        let y = random_point();
        let bx = btilde(&x);
        let by = btilde(&y);
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..3 {
            num += (bx[i] - by[i]) * (bx[i] - by[i]);
        }
        let dx = [x.xi1 - y.xi1, x.xi2 - y.xi2, x.xi3 - y.xi3];
        for d in dx {
            den += d * d;
        }
        if den > 0.0 {
            best = best.max((num / den).sqrt());
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PopulationState;
    use crate::simulator::Sample;
    use crate::simulator::Termination;

    fn params(n: u64, mu: f64, s: f64, r: f64) -> Parameters {
        Parameters::new(n, mu, s, r).unwrap()
    }

    #[test]
    fn all_ab_vertex_is_constant_under_full_beta() {
        let p = params(1000, 1e-3, 0.1, 0.05);
        let sol = integrate(
            &SimplexPoint::new(0.0, 0.0, 1.0),
            &p,
            (0.0, 50.0),
            0.01,
            Field::FullBeta,
        )
        .unwrap();
        for v in &sol.values {
            assert_eq!(v.as_array(), [0.0, 0.0, 1.0]);
        }
        assert_eq!(sol.max_simplex_violation, 0.0);
    }

    #[test]
    fn selection_only_reduction_matches_logistic() {
        let p = params(1000, 1e-3, 0.1, 0.05);
        let f0 = 0.01;
        let init = SimplexPoint::new(f0 / 2.0, f0 / 2.0, 0.0);
        let step = 1e-3 / p.selection;
        let sol = integrate(&init, &p, (0.0, 120.0), step, Field::SelectionOnly).unwrap();
        let curve = crate::stochastic::LogisticCurve::through(f0, p.selection, 0.0).unwrap();
        let mut max_err: f64 = 0.0;
        for (i, t) in sol.times.iter().enumerate() {
            let got = sol.values[i].xi1 + sol.values[i].xi2;
            let want = crate::stochastic::logistic_value(&curve, *t);
            max_err = max_err.max((got - want).abs());
            assert_eq!(sol.values[i].xi3, 0.0);
        }
        assert!(max_err <= 1e-8, "max logistic error {max_err}");
    }

    #[test]
    fn fourth_order_convergence_on_logistic() {
        let p = params(1000, 1e-3, 0.1, 0.05);
        let f0 = 0.01;
        let init = SimplexPoint::new(f0 / 2.0, f0 / 2.0, 0.0);
        let curve = crate::stochastic::LogisticCurve::through(f0, p.selection, 0.0).unwrap();
        let err_for = |h: f64| -> f64 {
            let sol = integrate(&init, &p, (0.0, 60.0), h, Field::SelectionOnly).unwrap();
            let mut e: f64 = 0.0;
            for (i, t) in sol.times.iter().enumerate() {
                let got = sol.values[i].xi1 + sol.values[i].xi2;
                e = e.max((got - crate::stochastic::logistic_value(&curve, *t)).abs());
            }
            e
        };
        let h = 0.5;
        let ratio = err_for(h) / err_for(h / 2.0);
        assert!(
            (12.0..=20.0).contains(&ratio),
            "halving the step changed the error by {ratio}, want ~16"
        );
        let order = ratio.log2();
        assert!((3.5..=4.5).contains(&order));
    }

    fn constant_summary(state: PopulationState, t_end: f64, dt: f64) -> ReplicateSummary {
        let mut samples = Vec::new();
        let mut t = 0.0;
        while t <= t_end {
            samples.push(Sample {
                time: t,
                state,
                ledger: None,
            });
            t += dt;
        }
        ReplicateSummary {
            seed: 0,
            fixation_time: None,
            event_count: 0,
            final_state: state,
            samples,
            termination: Termination::TimeCap,
        }
    }

    #[test]
    fn sup_deviation_of_matching_paths_is_zero() {
        let p = params(100, 1e-3, 0.1, 0.05);
        let fixed = PopulationState::new(0, 0, 0, 100, 0.0);
        let summary = constant_summary(fixed, 10.0, 0.5);
        let sol = integrate(
            &SimplexPoint::new(0.0, 0.0, 1.0),
            &p,
            (0.0, 10.0),
            0.25,
            Field::FullBeta,
        )
        .unwrap();
        assert_eq!(sup_deviation(&summary, &sol, (0.0, 10.0)).unwrap(), 0.0);
        // Coverage gaps are rejected.
        assert!(matches!(
            sup_deviation(&summary, &sol, (0.0, 11.0)),
            Err(FluidError::Range(_))
        ));
    }

    #[test]
    fn sup_deviation_symmetric_under_type_relabel() {
        let p = params(100, 1e-3, 0.1, 0.05);
        let state = PopulationState::new(40, 35, 15, 10, 0.0);
        let swapped = PopulationState::new(40, 15, 35, 10, 0.0);
        let summary = constant_summary(state, 5.0, 0.5);
        let summary_swapped = constant_summary(swapped, 5.0, 0.5);
        let from = SimplexPoint::new(0.3, 0.2, 0.1);
        let from_swapped = SimplexPoint::new(0.2, 0.3, 0.1);
        let sol = integrate(&from, &p, (0.0, 5.0), 0.1, Field::SelectionOnly).unwrap();
        let sol_swapped =
            integrate(&from_swapped, &p, (0.0, 5.0), 0.1, Field::SelectionOnly).unwrap();
        let d = sup_deviation(&summary, &sol, (0.0, 5.0)).unwrap();
        let d_swapped = sup_deviation(&summary_swapped, &sol_swapped, (0.0, 5.0)).unwrap();
        assert!((d - d_swapped).abs() < 1e-15);
        assert!(d > 0.0);
    }

    #[test]
    fn dn_bound_algebra() {
        // Doubling Delta (via eps0) quarters the bound, pre-clamp.
        let b1 = dn_probability_bound(1.0, 1e-3, 0.0, 1e-12);
        let b2 = dn_probability_bound(1.0, 2e-3, 0.0, 1e-12);
        assert!((b1 / b2 - 4.0).abs() < 1e-9);
        // Huge N sends the bound to zero through L = 48/N.
        let tiny = dn_probability_bound(10.0, 0.1, 0.05, 48.0 / 1e18);
        assert!(tiny < 1e-10);
        // Clamped into [0,1].
        assert_eq!(dn_probability_bound(100.0, 1e-6, 1.0, 1.0), 1.0);
    }

    #[test]
    fn lipschitz_estimate_is_stable() {
        let a = measure_btilde_lipschitz(20_000, 1);
        let b = measure_btilde_lipschitz(20_000, 2);
        assert!(a.is_finite() && a > 0.0);
        // Two independent estimates of the same supremum agree loosely.
        assert!((a - b).abs() / a.max(b) < 0.2, "a = {a}, b = {b}");
        // And they sit in the right ballpark for this quadratic field.
        assert!(a > 1.0 && a < 10.0);
    }

    #[test]
    fn integrate_rejects_bad_inputs() {
        let p = params(100, 1e-3, 0.1, 0.05);
        let x = SimplexPoint::new(0.1, 0.1, 0.1);
        assert!(integrate(&x, &p, (0.0, 1.0), 0.0, Field::FullBeta).is_err());
        assert!(integrate(&x, &p, (1.0, 0.0), 0.1, Field::FullBeta).is_err());
        assert!(integrate(
            &SimplexPoint::new(0.9, 0.9, 0.9),
            &p,
            (0.0, 1.0),
            0.1,
            Field::FullBeta
        )
        .is_err());
    }
}
