//! The experiment subcommands.

use crate::report::{self, write_file};
use crate::runner::{run_replicates, RunSpec};
use crate::settings::Settings;
use crate::{CliError, CommonArgs};
use serde::Serialize;
use std::time::Instant;
use twolocus::analytics::{
    self, check_constant_chain, derive_constants, phase_predictions, phase_schedule, t_star,
    validate_parameters, AnalyticsError, PredictionWindow, ValidationThresholds, WindowQuantity,
};
use twolocus::fluid::{
    dn_probability_bound, integrate, measure_btilde_lipschitz, sup_deviation, Field,
};
use twolocus::model::Parameters;
use twolocus::rng::replicate_seed;
use twolocus::simulator::{sample_trajectory, ReplicateSummary, Termination};

fn analytics_err(e: AnalyticsError) -> CliError {
    match e {
        AnalyticsError::Domain(m) => CliError::Config(m),
        AnalyticsError::Degenerate(m) => CliError::Schedule(m),
        AnalyticsError::ScheduleInvalid { term } => {
            CliError::Schedule(format!("nonpositive logarithm argument in {term}"))
        }
    }
}

fn print_warnings(params: &Parameters) {
    for w in params.warnings() {
        eprintln!("warning: {w}");
    }
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

pub fn simulate(args: &CommonArgs) -> Result<(), CliError> {
    let s = Settings::resolve(args)?;
    let params = s.params()?;
    print_warnings(&params);
    let init = s.initial_state()?;
    if let Some(st) = &init {
        st.validate(&params)
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let spec = RunSpec {
        params,
        max_time: s.max_time,
        max_events: s.max_events,
        sample_interval: s.sample_dt,
        track_lineage: s.track_lineage,
        initial_state: init,
    };
    let started = Instant::now();
    let rows = run_replicates(&spec, s.replicates, s.seed, s.threads);
    let agg = report::aggregate(&params, &rows, started.elapsed().as_secs_f64());

    if let Some(dir) = &s.out {
        write_file(
            &dir.join("summary.csv"),
            &report::summary_csv(&params, &rows),
        )?;
        write_file(&dir.join("aggregate.json"), &report::to_json_pretty(&agg))?;
        if s.sample_dt.is_some() {
            for (k, row) in rows.iter().enumerate() {
                write_file(
                    &dir.join(format!("trajectory_{k:04}.csv")),
                    &report::trajectory_csv(row, s.track_lineage),
                )?;
            }
        }
    }
    print!("{}", report::to_json_pretty(&agg));
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

pub fn sweep(args: &CommonArgs) -> Result<(), CliError> {
    let s = Settings::resolve(args)?;
    let base = s.params()?;
    let r_values = s.sweep_r_values()?;
    let mut csv = String::from(report::SWEEP_HEADER);
    csv.push('\n');
    for (i, r) in r_values.iter().enumerate() {
        let params = Parameters::new(base.n_individuals, base.mutation_rate, base.selection, *r)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let spec = RunSpec {
            params,
            max_time: s.max_time,
            max_events: s.max_events,
            sample_interval: None,
            track_lineage: false,
            initial_state: None,
        };
        // Sweep point i draws replicate streams from its own derived master
        // seed, so points are independent and order-insensitive.
        let point_seed = replicate_seed(s.seed, i as u64);
        let rows = run_replicates(&spec, s.replicates, point_seed, s.threads);
        let agg = report::aggregate(&params, &rows, 0.0);
        let q = agg.quantiles.as_ref();
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            params.n_individuals,
            params.mutation_rate,
            params.selection,
            r,
            agg.regime,
            agg.t_star.map(|v| v.to_string()).unwrap_or_default(),
            q.map(|q| q.p10.to_string()).unwrap_or_default(),
            q.map(|q| q.p25.to_string()).unwrap_or_default(),
            q.map(|q| q.p50.to_string()).unwrap_or_default(),
            q.map(|q| q.p75.to_string()).unwrap_or_default(),
            q.map(|q| q.p90.to_string()).unwrap_or_default(),
            agg.mean.map(|v| v.to_string()).unwrap_or_default(),
            agg.se.map(|v| v.to_string()).unwrap_or_default(),
            agg.replicates
        ));
    }
    if let Some(dir) = &s.out {
        write_file(&dir.join("sweep.csv"), &csv)?;
    }
    print!("{csv}");
    Ok(())
}

// ---------------------------------------------------------------------------
// tstar-curve
// ---------------------------------------------------------------------------

pub fn tstar_curve(args: &CommonArgs) -> Result<(), CliError> {
    let s = Settings::resolve(args)?;
    let base = s.params()?;
    let r_values = s.sweep_r_values()?;
    let mut csv = String::from("r,t_star,regime\n");
    for r in &r_values {
        let params = Parameters::new(base.n_individuals, base.mutation_rate, base.selection, *r)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let t = t_star(&params).map_err(analytics_err)?;
        csv.push_str(&format!("{},{},{}\n", r, t, report::regime_label(&params)));
    }
    if let Some(dir) = &s.out {
        write_file(&dir.join("tstar_curve.csv"), &csv)?;
    }
    print!("{csv}");
    Ok(())
}

// ---------------------------------------------------------------------------
// phases / constants / validate
// ---------------------------------------------------------------------------

pub fn constants(args: &CommonArgs) -> Result<(), CliError> {
    let s = Settings::resolve(args)?;
    let params = s.params()?;
    let chain = match derive_constants(s.eps, s.delta, &params) {
        Ok(c) => c,
        Err(AnalyticsError::Domain(m)) => return Err(CliError::Config(m)),
        Err(e) => return Err(analytics_err(e)),
    };
    println!(
        "# constant chain (epsilon = {}, delta = {})",
        chain.epsilon, chain.delta
    );
    println!("branch = {}", chain.branch.as_str());
    println!("rho = {}", chain.rho);
    for (name, v) in [
        ("K", chain.k),
        ("C1", chain.c1),
        ("C0m", chain.c0m),
        ("C0m+", chain.c0m_plus),
        ("C0r", chain.c0r),
        ("eta", chain.eta),
        ("C2", chain.c2),
        ("C3", chain.c3),
        ("C4", chain.c4),
        ("K1r+", chain.k1r_plus),
        ("K1r-", chain.k1r_minus),
        ("K1m+", chain.k1m_plus),
        ("K1m-", chain.k1m_minus),
        ("K2r+", chain.k2r_plus),
        ("K2r-", chain.k2r_minus),
        ("K2m+", chain.k2m_plus),
        ("K2m-", chain.k2m_minus),
        ("K3", chain.k3),
        ("K'1", chain.kp1),
        ("K'2", chain.kp2),
        ("K0r", chain.k0r),
        ("K0m", chain.k0m),
        ("con22_C", chain.con22_c),
    ] {
        println!("{name} = {v}");
    }
    println!("# defining displays");
    let mut all_ok = true;
    for check in check_constant_chain(&chain) {
        println!(
            "[{}] {} ({})",
            if check.ok { "ok" } else { "VIOLATED" },
            check.label,
            check.detail
        );
        all_ok &= check.ok;
    }
    println!("chain_ok = {all_ok}");
    Ok(())
}

pub fn phases(args: &CommonArgs) -> Result<(), CliError> {
    let s = Settings::resolve(args)?;
    let params = s.params()?;
    print_warnings(&params);
    let chain = derive_constants(s.eps, s.delta, &params).map_err(analytics_err)?;
    let sched = phase_schedule(&params, &chain).map_err(analytics_err)?;
    println!("# phase schedule (branch = {})", sched.branch.as_str());
    for (name, t) in [
        ("t0r", sched.t0r),
        ("t0m", sched.t0m),
        ("t0m+", sched.t0m_plus),
        ("t1", sched.t1),
        ("t2", sched.t2),
        ("t3", sched.t3),
        ("t4", sched.t4),
        ("t5-", sched.t5_minus),
        ("t5+", sched.t5_plus),
    ] {
        println!("{name} = {t}");
    }
    if sched.violations.is_empty() {
        println!("ordering = ok");
    } else {
        println!("ordering violations at these finite parameters:");
        for v in &sched.violations {
            println!("  - {v}");
        }
    }
    println!("# prediction windows (slack = {})", s.slack);
    for w in phase_predictions(&sched, &params, &chain, s.slack) {
        println!(
            "{} at t = {}: [{}, {}] (probability floor {})",
            w.name, w.time, w.lo, w.hi, w.probability_floor
        );
    }
    Ok(())
}

pub fn validate(args: &CommonArgs) -> Result<(), CliError> {
    let s = Settings::resolve(args)?;
    let params = s.params()?;
    print_warnings(&params);
    let report = validate_parameters(&params, &ValidationThresholds::default());
    println!(
        "# asymptotic-ratio diagnostics (threshold {})",
        report.checks[0].threshold
    );
    for c in &report.checks {
        println!(
            "[{}] {} = {}",
            if c.pass { "pass" } else { "warn" },
            c.name,
            c.value
        );
    }
    println!("all_pass = {}", report.all_pass());
    match analytics::classify_regime(&params, &analytics::RegimeThresholds::default()) {
        Ok(reg) => println!("regime = {} (rho = {})", reg.tag.as_str(), reg.rho),
        Err(e) => println!("regime = undefined ({e})"),
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// phase-check
// ---------------------------------------------------------------------------

/// Value of a window's quantity for one replicate, read from the recorded
/// trajectory; fixed runs stay constant after absorption.
fn window_value(summary: &ReplicateSummary, w: &PredictionWindow, n: f64) -> Option<f64> {
    let point = if w.time < 0.0 {
        return None;
    } else {
        let last = summary.samples.last()?.time;
        if w.time <= last {
            sample_trajectory(summary, &[w.time]).ok()?[0]
        } else if summary.termination == Termination::Fixed {
            let st = &summary.final_state;
            twolocus::model::SimplexPoint::new(st.x1 as f64 / n, st.x2 as f64 / n, st.x3 as f64 / n)
        } else {
            return None;
        }
    };
    Some(match w.quantity {
        WindowQuantity::Frac0 => point.xi0(),
        WindowQuantity::Frac1 => point.xi1,
        WindowQuantity::Frac2 => point.xi2,
        WindowQuantity::Frac3 => point.xi3,
        WindowQuantity::Frac1Plus2 => point.xi1 + point.xi2,
    })
}

/// Exact two-sided sign test on the discordant pairs (b successes on one
/// side out of b + c), i.e. the paired-binomial check of the type-1/type-2
/// symmetry.
pub fn paired_binomial_p(b: u64, c: u64) -> f64 {
    let n = b + c;
    if n == 0 {
        return 1.0;
    }
    let k = b.min(c);
    // P(X <= k), X ~ Binomial(n, 1/2), via log binomials.
    let ln_half = 0.5f64.ln();
    let mut ln_choose = 0.0; // ln C(n, 0)
    let mut tail = 0.0;
    for i in 0..=k {
        if i > 0 {
            ln_choose += ((n - i + 1) as f64).ln() - (i as f64).ln();
        }
        tail += (ln_choose + n as f64 * ln_half).exp();
    }
    (2.0 * tail).min(1.0)
}

#[derive(Serialize, Debug, Clone)]
pub struct WindowReport {
    pub name: String,
    pub time: f64,
    pub lo: f64,
    pub hi: f64,
    pub inside: u64,
    pub evaluable: u64,
    pub replicates: u64,
    pub fraction_inside: f64,
    pub probability_floor: f64,
}

#[derive(Serialize, Debug, Clone)]
pub struct PhaseCheckReport {
    pub slack: f64,
    pub branch: String,
    pub schedule_violations: Vec<String>,
    pub windows: Vec<WindowReport>,
    /// Exact sign-test p-value comparing type-1 and type-2 pass patterns at t2.
    pub t2_symmetry_p_value: f64,
}

pub fn phase_check_report(s: &Settings) -> Result<PhaseCheckReport, CliError> {
    let params = s.params()?;
    if params.mutation_rate == 0.0 {
        return Err(CliError::Schedule(
            "phase-check needs mu > 0: without mutation the phase structure is undefined"
                .to_string(),
        ));
    }
    let chain = derive_constants(s.eps, s.delta, &params).map_err(analytics_err)?;
    let sched = phase_schedule(&params, &chain).map_err(analytics_err)?;
    let windows = phase_predictions(&sched, &params, &chain, s.slack);
    let spec = RunSpec {
        params,
        max_time: s.max_time,
        max_events: s.max_events,
        sample_interval: Some(s.sample_dt.unwrap_or(0.25)),
        track_lineage: false,
        initial_state: None,
    };
    let rows = run_replicates(&spec, s.replicates, s.seed, s.threads);
    let n = params.n_f64();

    let mut reports = Vec::new();
    let mut pass1_t2 = vec![false; rows.len()];
    let mut pass2_t2 = vec![false; rows.len()];
    for w in &windows {
        let mut inside = 0u64;
        let mut evaluable = 0u64;
        for (i, row) in rows.iter().enumerate() {
            let ok = match window_value(row, w, n) {
                Some(v) => {
                    evaluable += 1;
                    v >= w.lo && v <= w.hi
                }
                None => false,
            };
            if ok {
                inside += 1;
            }
            if w.name == "X1(t2)/N" {
                pass1_t2[i] = ok;
            }
            if w.name == "X2(t2)/N" {
                pass2_t2[i] = ok;
            }
        }
        reports.push(WindowReport {
            name: w.name.clone(),
            time: w.time,
            lo: w.lo,
            hi: w.hi,
            inside,
            evaluable,
            replicates: rows.len() as u64,
            fraction_inside: inside as f64 / rows.len() as f64,
            probability_floor: w.probability_floor,
        });
    }
    let b = pass1_t2
        .iter()
        .zip(&pass2_t2)
        .filter(|(a, b)| **a && !**b)
        .count() as u64;
    let c = pass1_t2
        .iter()
        .zip(&pass2_t2)
        .filter(|(a, b)| !**a && **b)
        .count() as u64;
    Ok(PhaseCheckReport {
        slack: s.slack,
        branch: sched.branch.as_str().to_string(),
        schedule_violations: sched.violations.clone(),
        windows: reports,
        t2_symmetry_p_value: paired_binomial_p(b, c),
    })
}

pub fn phase_check(args: &CommonArgs) -> Result<(), CliError> {
    let s = Settings::resolve(args)?;
    let report = phase_check_report(&s)?;
    if let Some(dir) = &s.out {
        write_file(
            &dir.join("phase_check.json"),
            &report::to_json_pretty(&report),
        )?;
    }
    print!("{}", report::to_json_pretty(&report));
    Ok(())
}

// ---------------------------------------------------------------------------
// ode-compare
// ---------------------------------------------------------------------------

#[derive(Serialize, Debug, Clone)]
pub struct OdeCompareReport {
    pub window: (f64, f64),
    pub window_clamped: bool,
    pub eps0: f64,
    pub lipschitz: f64,
    pub bound: f64,
    pub replicates: u64,
    pub exceedances: u64,
    pub exceedance_frequency: f64,
    pub frequency_se: f64,
    pub deviation_p50: f64,
    pub deviation_p90: f64,
    /// Largest simplex excursion any integrated path needed clipped.
    pub max_simplex_violation: f64,
}

pub fn ode_compare_report(s: &Settings) -> Result<OdeCompareReport, CliError> {
    let params = s.params()?;
    let chain = derive_constants(s.eps, s.delta, &params).map_err(analytics_err)?;
    let sched = phase_schedule(&params, &chain).map_err(analytics_err)?;
    let clamped = sched.t1 < 0.0;
    let window = (sched.t1.max(0.0), sched.t2);
    if !(window.1 > window.0) {
        return Err(CliError::Schedule(format!(
            "degenerate comparison window [{}, {}]",
            window.0, window.1
        )));
    }
    let eps0 = s.eps0.unwrap_or_else(|| chain.delta.powi(4) / 4.0);
    let lipschitz = measure_btilde_lipschitz(200_000, 0xB717) * params.selection;
    let bound = dn_probability_bound(window.1 - window.0, eps0, lipschitz, 48.0 / params.n_f64());

    let spec = RunSpec {
        params,
        max_time: Some(window.1),
        max_events: s.max_events,
        sample_interval: Some(s.sample_dt.unwrap_or(0.25)),
        track_lineage: false,
        initial_state: None,
    };
    let rows = run_replicates(&spec, s.replicates, s.seed, s.threads);
    let step = 1e-3 / params.selection;
    let mut deviations = Vec::with_capacity(rows.len());
    let mut max_violation: f64 = 0.0;
    for mut row in rows {
        // A replicate that fixed before the window's end stays constant;
        // extend its record so the comparison covers the whole window.
        if row.termination == Termination::Fixed {
            let last = row.samples.last().map(|s| s.time).unwrap_or(0.0);
            if last < window.1 {
                let mut state = row.final_state;
                state.time = window.1;
                row.samples.push(twolocus::simulator::Sample {
                    time: window.1,
                    state,
                    ledger: None,
                });
            }
        }
        let anchor =
            sample_trajectory(&row, &[window.0]).map_err(|e| CliError::Schedule(e.to_string()))?[0];
        let solution = integrate(&anchor, &params, window, step, Field::FullBeta)
            .map_err(|e| CliError::Schedule(e.to_string()))?;
        let dev = sup_deviation(&row, &solution, window)
            .map_err(|e| CliError::Schedule(e.to_string()))?;
        max_violation = max_violation.max(solution.max_simplex_violation);
        deviations.push(dev);
    }
    deviations.sort_by(f64::total_cmp);
    let exceedances = deviations.iter().filter(|d| **d > eps0).count() as u64;
    let n = deviations.len() as f64;
    let freq = exceedances as f64 / n;
    Ok(OdeCompareReport {
        window,
        window_clamped: clamped,
        eps0,
        lipschitz,
        bound,
        replicates: deviations.len() as u64,
        exceedances,
        exceedance_frequency: freq,
        frequency_se: (freq * (1.0 - freq) / n).sqrt(),
        deviation_p50: report::quantile(&deviations, 0.5),
        deviation_p90: report::quantile(&deviations, 0.9),
        max_simplex_violation: max_violation,
    })
}

pub fn ode_compare(args: &CommonArgs) -> Result<(), CliError> {
    let s = Settings::resolve(args)?;
    let rep = ode_compare_report(&s)?;
    if rep.window_clamped {
        eprintln!(
            "note: comparison window start clamped to 0 (the scheduled t1 is negative at these parameters)"
        );
    }
    if let Some(dir) = &s.out {
        write_file(&dir.join("ode_compare.json"), &report::to_json_pretty(&rep))?;
    }
    print!("{}", report::to_json_pretty(&rep));
    Ok(())
}
