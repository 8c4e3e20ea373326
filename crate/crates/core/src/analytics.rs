//! Closed-form predictions: parameter diagnostics, regime classification,
//! the fixation-time estimate `t*`, the derived constant chain, and the
//! phase-time schedule with its per-phase prediction windows.

use crate::model::Parameters;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate parameters: {0}")]
    Degenerate(String),
    #[error("schedule invalid: nonpositive logarithm argument in {term}")]
    ScheduleInvalid { term: String },
}

/// `ln(x)` for `x > 1`, else `0`.
#[inline]
pub fn ln_plus(x: f64) -> f64 {
    if x > 1.0 {
        x.ln()
    } else {
        0.0
    }
}

// ---------------------------------------------------------------------------
// Parameter validation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct ValidationThresholds {
    /// A ratio that should vanish asymptotically "passes" below this value.
    pub max_ratio: f64,
}

impl Default for ValidationThresholds {
    fn default() -> Self {
        Self { max_ratio: 0.25 }
    }
}

#[derive(Debug, Clone)]
pub struct RatioCheck {
    pub name: &'static str,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub checks: Vec<RatioCheck>,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Finite-size values of the ratios that the asymptotic assumptions send to
/// zero. These can only degrade, never fail outright, so each gets a
/// pass/warn verdict against the configured threshold.
pub fn validate_parameters(params: &Parameters, thr: &ValidationThresholds) -> ValidationReport {
    let n = params.n_f64();
    let mu = params.mutation_rate;
    let s = params.selection;
    let r = params.recombination_prob;
    let ratios: [(&'static str, f64); 6] = [
        ("s", s),
        (
            "1/(N*mu)",
            if mu > 0.0 {
                1.0 / (n * mu)
            } else {
                f64::INFINITY
            },
        ),
        ("N*mu^2/s", n * mu * mu / s),
        ("r*ln+(N*r)/s", r * ln_plus(n * r) / s),
        ("(r/s)*ln(N*s)", r / s * (n * s).ln()),
        (
            "(r/s)*ln(s/mu)",
            if mu > 0.0 {
                r / s * (s / mu).ln()
            } else {
                f64::INFINITY
            },
        ),
    ];
    let checks = ratios
        .into_iter()
        .map(|(name, value)| RatioCheck {
            name,
            value,
            threshold: thr.max_ratio,
            pass: value < thr.max_ratio,
        })
        .collect();
    ValidationReport { checks }
}

/// For power-law parameters `mu = N^-a`, `r = N^-b`, `s = N^-c`, the
/// admissible region is `0 < c < b` together with `(1+c)/2 < a < 1`.
pub fn power_law_check(a: f64, b: f64, c: f64) -> (bool, String) {
    let mut reasons = Vec::new();
    if !(c > 0.0) {
        reasons.push(format!("need c > 0, got c = {c}"));
    }
    if !(c < b) {
        reasons.push(format!("need c < b, got c = {c}, b = {b}"));
    }
    if !(a > (1.0 + c) / 2.0) {
        reasons.push(format!(
            "need a > (1+c)/2 = {}, got a = {a}",
            (1.0 + c) / 2.0
        ));
    }
    if !(a < 1.0) {
        reasons.push(format!("need a < 1, got a = {a}"));
    }
    if reasons.is_empty() {
        (true, "0 < c < b and (1+c)/2 < a < 1".to_string())
    } else {
        (false, reasons.join("; "))
    }
}

// ---------------------------------------------------------------------------
// Regime classification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeTag {
    RecombinationDominating,
    MutationDominating,
    Indeterminate,
}

impl RegimeTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegimeTag::RecombinationDominating => "recombination_dominating",
            RegimeTag::MutationDominating => "mutation_dominating",
            RegimeTag::Indeterminate => "indeterminate",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Regime {
    pub tag: RegimeTag,
    /// Evidence ratio `rho = r * ln+(N r) / (N mu^2)`.
    pub rho: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct RegimeThresholds {
    pub hi: f64,
    pub lo: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        Self { hi: 10.0, lo: 1.0 }
    }
}

pub fn classify_regime(
    params: &Parameters,
    thr: &RegimeThresholds,
) -> Result<Regime, AnalyticsError> {
    if params.mutation_rate == 0.0 {
        return Err(AnalyticsError::Degenerate(
            "regime classification needs mu > 0".to_string(),
        ));
    }
    let n = params.n_f64();
    let rho = params.recombination_prob * ln_plus(n * params.recombination_prob)
        / (n * params.mutation_rate * params.mutation_rate);
    let tag = if rho > thr.hi {
        RegimeTag::RecombinationDominating
    } else if rho <= thr.lo {
        RegimeTag::MutationDominating
    } else {
        RegimeTag::Indeterminate
    };
    Ok(Regime { tag, rho })
}

/// Which mechanism supplies the first surviving `AB` lineages at these
/// finite parameters, judged by comparing the two scales directly. This is
/// the branch used for the branch-dependent constants and phase times; the
/// three-way [`RegimeTag`] keeps its honest indeterminate band.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Recombination,
    Mutation,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::Recombination => "recombination",
            Branch::Mutation => "mutation",
        }
    }
}

pub fn dominance_branch(params: &Parameters) -> Branch {
    let n = params.n_f64();
    let rln = params.recombination_prob * ln_plus(n * params.recombination_prob);
    if rln > n * params.mutation_rate * params.mutation_rate {
        Branch::Recombination
    } else {
        Branch::Mutation
    }
}

// ---------------------------------------------------------------------------
// t*
// ---------------------------------------------------------------------------

/// Predicted fixation time
/// `t*(r) = (1/s) ln( N s^3 / (mu * max{N mu^2, r ln+(N r)}) )`.
pub fn t_star(params: &Parameters) -> Result<f64, AnalyticsError> {
    if params.mutation_rate <= 0.0 {
        return Err(AnalyticsError::Degenerate("t* needs mu > 0".to_string()));
    }
    let n = params.n_f64();
    let s = params.selection;
    let mu = params.mutation_rate;
    let scale =
        (n * mu * mu).max(params.recombination_prob * ln_plus(n * params.recombination_prob));
    let arg = n * s * s * s / (mu * scale);
    if !(arg > 0.0) {
        return Err(AnalyticsError::Domain(format!(
            "nonpositive argument {arg} to ln in t*"
        )));
    }
    Ok(arg.ln() / s)
}

// ---------------------------------------------------------------------------
// Constant chain
// ---------------------------------------------------------------------------

/// Fixed multiplicative headroom used to materialize every
/// lower-bound-only constant.
pub const CHAIN_SLACK: f64 = 0.01;

/// The derived constants, in dependency order. Lower-bound constants carry
/// a fixed 1% headroom over their bound so the whole chain is a
/// deterministic function of `(epsilon, delta, params)`; equality-defined
/// constants are evaluated exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantChain {
    pub epsilon: f64,
    pub delta: f64,
    pub k: f64,
    pub c1: f64,
    pub c0m: f64,
    pub c0m_plus: f64,
    pub c0r: f64,
    pub eta: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub k1r_plus: f64,
    pub k1r_minus: f64,
    pub k1m_plus: f64,
    pub k1m_minus: f64,
    pub k2r_plus: f64,
    pub k2r_minus: f64,
    pub k2m_plus: f64,
    pub k2m_minus: f64,
    pub k3: f64,
    pub kp1: f64,
    pub kp2: f64,
    pub k0r: f64,
    pub k0m: f64,
    /// Finite stand-in for the dominating-mutation comparison constant:
    /// `max(1, rho)` always satisfies the comparison at the given size.
    pub con22_c: f64,
    pub rho: f64,
    pub branch: Branch,
}

pub fn derive_constants(
    epsilon: f64,
    delta: f64,
    params: &Parameters,
) -> Result<ConstantChain, AnalyticsError> {
    if !(epsilon > 0.0 && epsilon < 1.0 / 16.0) {
        return Err(AnalyticsError::Domain(format!(
            "epsilon must lie in (0, 1/16), got {epsilon}"
        )));
    }
    if !(delta > 0.0 && delta < 0.25) {
        return Err(AnalyticsError::Domain(format!(
            "delta must lie in (0, 1/4), got {delta}"
        )));
    }
    if params.mutation_rate <= 0.0 {
        return Err(AnalyticsError::Degenerate(
            "the constant chain needs mu > 0".to_string(),
        ));
    }
    let up = 1.0 + CHAIN_SLACK;
    let n = params.n_f64();
    let mu = params.mutation_rate;
    let r = params.recombination_prob;
    let rho = r * ln_plus(n * r) / (n * mu * mu);
    let con22_c = rho.max(1.0);
    let branch = dominance_branch(params);

    let k = up * (6.0 / epsilon);
    let c1 = up * (5.0 * k / epsilon).ln().max((8.0 / (delta * delta)).ln());
    let c0m = up * (2.0 * (2.0 * k / epsilon).ln());
    let c0m_plus = up
        * c0m.max(14.0 * (-c1).exp() + (48.0 * k / (epsilon * (1.0 - delta * delta).powi(2))).ln());
    let c0r = up * (k * k / epsilon).ln().max(c1 + 4f64.ln());
    let eta = 2.0 * k * (-c1).exp();
    let c2 = -c1
        + (c1.exp() / (2.0 * (1.0 + delta * delta)) - 1.0).ln()
        + (1.0 / (delta * delta) - 1.0).ln();

    let k1r_plus = k * k * (-2.0 * c1).exp() * (2.0 * (c0r - c1) + 1.0) / epsilon;
    let k1r_minus = (-7.0 * (-c1).exp()).exp()
        * (1.0 - 5.0 * (-c1).exp())
        * (1.0 - delta * delta).powi(2)
        * (-2.0 * c1).exp()
        / 3.0;
    let k1m_plus = (4.0 * k * (-2.0 * c1 + c0m).exp()
        + k * k * (-2.0 * c1).exp() * (2.0 * (c0r - c1) + 1.0) * con22_c)
        / (2.0 * epsilon);
    let k1m_minus = (1.0 - delta * delta) * (-7.0 * (-c1).exp() - 2.0 * c1 - c0m_plus).exp()
        - (48.0 * k * c0m_plus.exp() / epsilon).sqrt() * (-2.0 * c1 - 2.0 * c0m_plus).exp();

    let e2 = (2.0 * (c2 + c1)).exp();
    let k0r = 2.0 * e2 * k1r_plus;
    let k0m = 2.0 * e2 * k1m_plus;
    let kp1 = e2 * (c2 + c1);
    let kp2 = (3.0 * (c2 + c1)).exp() * (c2 + c1);
    let k2r_plus = 2.0 * k1r_plus * e2;
    let k2m_plus = 2.0 * k1m_plus * e2;
    let k2r_minus = k1r_minus / 2.0;
    let k2m_minus = k1m_minus / 2.0;

    let (k2_plus, k2_minus) = match branch {
        Branch::Recombination => (k2r_plus, k2r_minus),
        Branch::Mutation => (k2m_plus, k2m_minus),
    };
    let c3 = c2 - 3.0 - (k2_plus / (delta * delta)).ln();
    let k3 = k2_minus * ((c3 - c2) - 2.0).exp() / 2.0;
    let c4 = c3 + ((1.0 / (delta * delta) - 1.0) * (1.0 / k3 - 1.0)).ln();

    Ok(ConstantChain {
        epsilon,
        delta,
        k,
        c1,
        c0m,
        c0m_plus,
        c0r,
        eta,
        c2,
        c3,
        c4,
        k1r_plus,
        k1r_minus,
        k1m_plus,
        k1m_minus,
        k2r_plus,
        k2r_minus,
        k2m_plus,
        k2m_minus,
        k3,
        kp1,
        kp2,
        k0r,
        k0m,
        con22_c,
        rho,
        branch,
    })
}

#[derive(Debug, Clone)]
pub struct ChainCheck {
    pub label: String,
    pub ok: bool,
    pub detail: String,
}

fn eq_check(label: &str, actual: f64, expect: f64) -> ChainCheck {
    let scale = expect.abs().max(1e-300);
    let ok = ((actual - expect) / scale).abs() < 1e-12;
    ChainCheck {
        label: label.to_string(),
        ok,
        detail: format!("value {actual:e}, recomputed {expect:e}"),
    }
}

fn gt_check(label: &str, lhs: f64, rhs: f64) -> ChainCheck {
    ChainCheck {
        label: label.to_string(),
        ok: lhs > rhs,
        detail: format!("{lhs:e} > {rhs:e}"),
    }
}

/// Re-derives every defining display of the chain from scratch and reports
/// the satisfaction status of each.
pub fn check_constant_chain(c: &ConstantChain) -> Vec<ChainCheck> {
    let (eps, d) = (c.epsilon, c.delta);
    let d2 = d * d;
    let mut out = vec![
        ChainCheck {
            label: "epsilon in (0, 1/16)".to_string(),
            ok: eps > 0.0 && eps < 1.0 / 16.0,
            detail: format!("epsilon = {eps}"),
        },
        ChainCheck {
            label: "delta in (0, 1/4)".to_string(),
            ok: d > 0.0 && d < 0.25,
            detail: format!("delta = {d}"),
        },
        gt_check("K > 6/epsilon", c.k, 6.0 / eps),
        gt_check(
            "C1 > max(ln(5K/eps), ln(8/delta^2))",
            c.c1,
            (5.0 * c.k / eps).ln().max((8.0 / d2).ln()),
        ),
        gt_check("C0m > 2 ln(2K/eps)", c.c0m, 2.0 * (2.0 * c.k / eps).ln()),
        gt_check(
            "C0m+ > max(C0m, 14 e^-C1 + ln(48K/(eps (1-delta^2)^2)))",
            c.c0m_plus,
            c.c0m
                .max(14.0 * (-c.c1).exp() + (48.0 * c.k / (eps * (1.0 - d2) * (1.0 - d2))).ln()),
        ),
        gt_check(
            "C0r > max(ln(K^2/eps), C1 + ln 4)",
            c.c0r,
            (c.k * c.k / eps).ln().max(c.c1 + 4f64.ln()),
        ),
        eq_check("eta = 2K e^-C1", c.eta, 2.0 * c.k * (-c.c1).exp()),
        ChainCheck {
            label: "eta < 2 eps / 5".to_string(),
            ok: c.eta < 2.0 * eps / 5.0,
            detail: format!("eta = {:e}", c.eta),
        },
        eq_check(
            "C2 = -C1 + ln(e^C1/(2(1+delta^2)) - 1) + ln(1/delta^2 - 1)",
            c.c2,
            -c.c1 + (c.c1.exp() / (2.0 * (1.0 + d2)) - 1.0).ln() + (1.0 / d2 - 1.0).ln(),
        ),
        eq_check(
            "K1r+ = K^2 e^-2C1 (2(C0r - C1) + 1)/eps",
            c.k1r_plus,
            c.k * c.k * (-2.0 * c.c1).exp() * (2.0 * (c.c0r - c.c1) + 1.0) / eps,
        ),
        eq_check(
            "K1r- = e^{-7 e^-C1} (1 - 5 e^-C1)(1 - delta^2)^2 e^-2C1 / 3",
            c.k1r_minus,
            (-7.0 * (-c.c1).exp()).exp()
                * (1.0 - 5.0 * (-c.c1).exp())
                * (1.0 - d2)
                * (1.0 - d2)
                * (-2.0 * c.c1).exp()
                / 3.0,
        ),
        eq_check(
            "K1m+ = (4K e^{-2C1+C0m} + K^2 e^-2C1 (2(C0r-C1)+1) C)/(2 eps)",
            c.k1m_plus,
            (4.0 * c.k * (-2.0 * c.c1 + c.c0m).exp()
                + c.k * c.k * (-2.0 * c.c1).exp() * (2.0 * (c.c0r - c.c1) + 1.0) * c.con22_c)
                / (2.0 * eps),
        ),
        eq_check(
            "K1m- = (1-delta^2) e^{-7e^-C1 - 2C1 - C0m+} - sqrt(48K e^C0m+/eps) e^{-2C1-2C0m+}",
            c.k1m_minus,
            (1.0 - d2) * (-7.0 * (-c.c1).exp() - 2.0 * c.c1 - c.c0m_plus).exp()
                - (48.0 * c.k * c.c0m_plus.exp() / eps).sqrt()
                    * (-2.0 * c.c1 - 2.0 * c.c0m_plus).exp(),
        ),
        gt_check("K1m- > 0", c.k1m_minus, 0.0),
        eq_check(
            "K0r = 2 e^{2(C2+C1)} K1r+",
            c.k0r,
            2.0 * (2.0 * (c.c2 + c.c1)).exp() * c.k1r_plus,
        ),
        eq_check(
            "K0m = 2 e^{2(C2+C1)} K1m+",
            c.k0m,
            2.0 * (2.0 * (c.c2 + c.c1)).exp() * c.k1m_plus,
        ),
        eq_check(
            "K'1 = e^{2(C2+C1)} (C2+C1)",
            c.kp1,
            (2.0 * (c.c2 + c.c1)).exp() * (c.c2 + c.c1),
        ),
        eq_check(
            "K'2 = e^{3(C2+C1)} (C2+C1)",
            c.kp2,
            (3.0 * (c.c2 + c.c1)).exp() * (c.c2 + c.c1),
        ),
        eq_check(
            "K2r+ = 2 K1r+ e^{2(C2+C1)}",
            c.k2r_plus,
            2.0 * c.k1r_plus * (2.0 * (c.c2 + c.c1)).exp(),
        ),
        eq_check(
            "K2m+ = 2 K1m+ e^{2(C2+C1)}",
            c.k2m_plus,
            2.0 * c.k1m_plus * (2.0 * (c.c2 + c.c1)).exp(),
        ),
        eq_check("K2r- = K1r-/2", c.k2r_minus, c.k1r_minus / 2.0),
        eq_check("K2m- = K1m-/2", c.k2m_minus, c.k1m_minus / 2.0),
    ];
    let (k2p, k2m) = match c.branch {
        Branch::Recombination => (c.k2r_plus, c.k2r_minus),
        Branch::Mutation => (c.k2m_plus, c.k2m_minus),
    };
    out.push(eq_check(
        "C3 = C2 - 3 - ln(K2+/delta^2)",
        c.c3,
        c.c2 - 3.0 - (k2p / d2).ln(),
    ));
    out.push(eq_check(
        "K3 = K2- e^{(C3-C2)-2}/2",
        c.k3,
        k2m * ((c.c3 - c.c2) - 2.0).exp() / 2.0,
    ));
    out.push(ChainCheck {
        label: "K3 in (0, delta^2]".to_string(),
        ok: c.k3 > 0.0 && c.k3 <= d2,
        detail: format!("K3 = {:e}", c.k3),
    });
    out.push(eq_check(
        "C4 = C3 + ln((1/delta^2 - 1)(1/K3 - 1))",
        c.c4,
        c.c3 + ((1.0 / d2 - 1.0) * (1.0 / c.k3 - 1.0)).ln(),
    ));
    out.push(ChainCheck {
        label: "con22_C >= max(1, rho)".to_string(),
        ok: c.con22_c >= 1.0f64.max(c.rho),
        detail: format!("C = {}, rho = {}", c.con22_c, c.rho),
    });
    out
}

// ---------------------------------------------------------------------------
// Phase schedule
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSchedule {
    pub t0r: f64,
    pub t0m: f64,
    pub t0m_plus: f64,
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t4: f64,
    pub t5_minus: f64,
    pub t5_plus: f64,
    pub branch: Branch,
    /// The chain the times were built from (carries `rho` and the branch
    /// evidence).
    pub constants: ConstantChain,
    /// Ordering defects at these finite parameters; the asymptotic ordering
    /// `0 < t0m < t0m+ < t1 < t2 < t3 < t4 < t5- < t5+` is checked and any
    /// violated link is reported rather than silently accepted.
    pub violations: Vec<String>,
}

fn checked_ln(arg: f64, term: &str) -> Result<f64, AnalyticsError> {
    if arg > 0.0 {
        Ok(arg.ln())
    } else {
        Err(AnalyticsError::ScheduleInvalid {
            term: format!("{term} (argument {arg})"),
        })
    }
}

pub fn phase_schedule(
    params: &Parameters,
    chain: &ConstantChain,
) -> Result<PhaseSchedule, AnalyticsError> {
    if params.mutation_rate <= 0.0 {
        return Err(AnalyticsError::Degenerate(
            "the phase schedule needs mu > 0".to_string(),
        ));
    }
    let n = params.n_f64();
    let s = params.selection;
    let mu = params.mutation_rate;
    let r = params.recombination_prob;
    let branch = chain.branch;

    let ln_s_mu = checked_ln(s / mu, "ln(s/mu)")?;
    let ln_s_nmu2 = checked_ln(s / (n * mu * mu), "ln(s/(N mu^2))")?;
    let t0r = if branch == Branch::Recombination || n * r >= std::f64::consts::E {
        checked_ln(s / (mu * (n * r).sqrt()), "ln(s/(mu sqrt(N r)))")? / s - chain.c0r / s
    } else {
        ln_s_mu / s - chain.c0r / s
    };
    let t0m = ln_s_nmu2 / s - chain.c0m / s;
    let t0m_plus = ln_s_nmu2 / s + chain.c0m_plus / s;
    let t1 = ln_s_mu / s - chain.c1 / s;
    let t2 = ln_s_mu / s + chain.c2 / s;
    let scale = match branch {
        Branch::Recombination => r * ln_plus(n * r),
        Branch::Mutation => n * mu * mu,
    };
    let ln_phase3 = checked_ln(s * s / (mu * scale), "ln(s^2/(mu * scale))")?;
    let t3 = ln_phase3 / s + chain.c3 / s;
    let t4 = ln_phase3 / s + chain.c4 / s;
    let ln_ns = checked_ln(n * s, "ln(N s)")?;
    let t5_minus = t4 + (1.0 - chain.delta) * ln_ns / s;
    let t5_plus = t4 + 1.0 / (1.0 - 2.0 * chain.delta * chain.delta) * ln_ns / s;

    let mut violations = Vec::new();
    let ordered = [
        ("0", 0.0),
        ("t0m", t0m),
        ("t0m+", t0m_plus),
        ("t1", t1),
        ("t2", t2),
        ("t3", t3),
        ("t4", t4),
        ("t5-", t5_minus),
        ("t5+", t5_plus),
    ];
    for pair in ordered.windows(2) {
        if !(pair[0].1 < pair[1].1) {
            violations.push(format!(
                "{} = {} is not below {} = {}",
                pair[0].0, pair[0].1, pair[1].0, pair[1].1
            ));
        }
    }
    if !(t0r > 0.0 && t0r < t1) {
        violations.push(format!("t0r = {t0r} is not inside (0, t1 = {t1})"));
    }

    Ok(PhaseSchedule {
        t0r,
        t0m,
        t0m_plus,
        t1,
        t2,
        t3,
        t4,
        t5_minus,
        t5_plus,
        branch,
        constants: chain.clone(),
        violations,
    })
}

// ---------------------------------------------------------------------------
// Phase predictions
// ---------------------------------------------------------------------------

/// What a prediction window constrains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowQuantity {
    Frac0,
    Frac1,
    Frac2,
    Frac3,
    Frac1Plus2,
}

#[derive(Debug, Clone)]
pub struct PredictionWindow {
    pub name: String,
    pub quantity: WindowQuantity,
    pub time: f64,
    pub lo: f64,
    pub hi: f64,
    /// Asymptotic lower bound on the probability of the un-widened window.
    pub probability_floor: f64,
}

/// The testable per-phase windows, widened by `slack >= 1` on the
/// multiplicative side (`slack = 1` gives the raw displays).
pub fn phase_predictions(
    schedule: &PhaseSchedule,
    params: &Parameters,
    chain: &ConstantChain,
    slack: f64,
) -> Vec<PredictionWindow> {
    let n = params.n_f64();
    let s = params.selection;
    let mu = params.mutation_rate;
    let r = params.recombination_prob;
    let d2 = chain.delta * chain.delta;
    let eps = chain.epsilon;
    let e_c1 = (-chain.c1).exp();
    let scale = match schedule.branch {
        Branch::Recombination => r * ln_plus(n * r),
        Branch::Mutation => n * mu * mu,
    };
    let (k1p, k1m) = match schedule.branch {
        Branch::Recombination => (chain.k1r_plus, chain.k1r_minus),
        Branch::Mutation => (chain.k1m_plus, chain.k1m_minus),
    };
    let floor1 = 1.0 - 17.0 * eps;
    let floor2 = 1.0 - 21.0 * eps;
    let floor3 = 1.0 - 25.0 * eps - 7.0 * chain.delta - d2;
    let floor4 = 1.0 - 26.0 * eps - 7.0 * chain.delta - d2;
    let mut out = Vec::new();
    for (name, qty) in [
        ("X1(t1)/N", WindowQuantity::Frac1),
        ("X2(t1)/N", WindowQuantity::Frac2),
    ] {
        out.push(PredictionWindow {
            name: name.to_string(),
            quantity: qty,
            time: schedule.t1,
            lo: (1.0 - d2 * slack) * e_c1,
            hi: (1.0 + d2 * slack) * e_c1,
            probability_floor: floor1,
        });
    }
    out.push(PredictionWindow {
        name: "X3(t1)/N".to_string(),
        quantity: WindowQuantity::Frac3,
        time: schedule.t1,
        lo: k1m / slack * scale / s,
        hi: k1p * slack * scale / s,
        probability_floor: floor1,
    });
    for (name, qty) in [
        ("X1(t2)/N", WindowQuantity::Frac1),
        ("X2(t2)/N", WindowQuantity::Frac2),
    ] {
        out.push(PredictionWindow {
            name: name.to_string(),
            quantity: qty,
            time: schedule.t2,
            lo: 0.5 - 1.5 * d2 * slack,
            hi: 0.5 - d2 * d2 / 4.0 / slack,
            probability_floor: floor2,
        });
    }
    out.push(PredictionWindow {
        name: "X0(t3)/N".to_string(),
        quantity: WindowQuantity::Frac0,
        time: schedule.t3,
        lo: 0.0,
        hi: slack
            * chain.delta
            * (-(1.0 - 3.0 * chain.delta) * (chain.c3 - chain.c2)).exp()
            * (scale / s).powf(1.0 - 3.0 * chain.delta),
        probability_floor: floor3,
    });
    out.push(PredictionWindow {
        name: "X3(t3)/N".to_string(),
        quantity: WindowQuantity::Frac3,
        time: schedule.t3,
        lo: chain.k3 / slack,
        hi: d2 * slack,
        probability_floor: floor3,
    });
    out.push(PredictionWindow {
        name: "X3(t4)/N".to_string(),
        quantity: WindowQuantity::Frac3,
        time: schedule.t4,
        lo: 1.0 - 1.25 * d2 * slack,
        hi: 1.0 - 0.75 * chain.k3 / slack,
        probability_floor: floor4,
    });
    out.push(PredictionWindow {
        name: "(X1+X2)(t4)/N".to_string(),
        quantity: WindowQuantity::Frac1Plus2,
        time: schedule.t4,
        lo: chain.k3 / (2.0 * slack),
        hi: 1.0,
        probability_floor: floor4,
    });
    out
}
