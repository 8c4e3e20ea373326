//! CSV and JSON writers with fixed schemas, plus small summary statistics.
//!
//! Floats are printed with Rust's shortest round-trip formatting, so files
//! are byte-stable across runs and parse back losslessly.

use crate::CliError;
use serde::Serialize;
use std::io::Write;
use std::path::Path;
use twolocus::analytics::{classify_regime, t_star, RegimeThresholds};
use twolocus::model::Parameters;
use twolocus::simulator::ReplicateSummary;

pub const SUMMARY_HEADER: &str = "seed,N,mu,s,r,regime,t_star,T_fix,events,termination";
pub const TRAJECTORY_HEADER: &str = "time,x0,x1,x2,x3";
pub const TRAJECTORY_HEADER_LINEAGE: &str = "time,x0,x1,x2,x3,x1m,x1r,x2m,x2r,x3m,x3r,x0r";
pub const SWEEP_HEADER: &str = "n,mu,s,r,regime,t_star,q10,q25,q50,q75,q90,mean,se,replicates";

pub fn regime_label(params: &Parameters) -> String {
    match classify_regime(params, &RegimeThresholds::default()) {
        Ok(reg) => reg.tag.as_str().to_string(),
        Err(_) => "undefined".to_string(),
    }
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn summary_csv(params: &Parameters, rows: &[ReplicateSummary]) -> String {
    let regime = regime_label(params);
    let tstar = opt_f64(t_star(params).ok());
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.seed,
            params.n_individuals,
            params.mutation_rate,
            params.selection,
            params.recombination_prob,
            regime,
            tstar,
            opt_f64(r.fixation_time),
            r.event_count,
            r.termination.as_str()
        ));
    }
    out
}

pub fn trajectory_csv(summary: &ReplicateSummary, lineage: bool) -> String {
    let mut out = String::from(if lineage {
        TRAJECTORY_HEADER_LINEAGE
    } else {
        TRAJECTORY_HEADER
    });
    out.push('\n');
    for s in &summary.samples {
        out.push_str(&format!(
            "{},{},{},{},{}",
            s.time, s.state.x0, s.state.x1, s.state.x2, s.state.x3
        ));
        if lineage {
            let l = s.ledger.unwrap_or_default();
            out.push_str(&format!(
                ",{},{},{},{},{},{},{}",
                l.x1m, l.x1r, l.x2m, l.x2r, l.x3m, l.x3r, l.x0r
            ));
        }
        out.push('\n');
    }
    out
}

#[derive(Serialize, Debug, Clone)]
pub struct ParamsOut {
    pub n: u64,
    pub mu: f64,
    pub s: f64,
    pub r: f64,
}

#[derive(Serialize, Debug, Clone)]
pub struct Quantiles {
    pub p10: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p90: f64,
}

#[derive(Serialize, Debug, Clone)]
pub struct Aggregate {
    pub params: ParamsOut,
    pub regime: String,
    pub t_star: Option<f64>,
    pub quantiles: Option<Quantiles>,
    pub mean: Option<f64>,
    pub se: Option<f64>,
    pub replicates: u64,
    pub runtime_seconds: f64,
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    if sorted.len() == 1 {
        return sorted[0];
    }
    let h = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn aggregate(
    params: &Parameters,
    rows: &[ReplicateSummary],
    runtime_seconds: f64,
) -> Aggregate {
    let mut fixed: Vec<f64> = rows.iter().filter_map(|r| r.fixation_time).collect();
    fixed.sort_by(f64::total_cmp);
    let (quantiles, mean, se) = if fixed.is_empty() {
        (None, None, None)
    } else {
        let mean = fixed.iter().sum::<f64>() / fixed.len() as f64;
        let var = if fixed.len() > 1 {
            fixed.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / (fixed.len() - 1) as f64
        } else {
            0.0
        };
        (
            Some(Quantiles {
                p10: quantile(&fixed, 0.10),
                p25: quantile(&fixed, 0.25),
                p50: quantile(&fixed, 0.50),
                p75: quantile(&fixed, 0.75),
                p90: quantile(&fixed, 0.90),
            }),
            Some(mean),
            Some((var / fixed.len() as f64).sqrt()),
        )
    };
    Aggregate {
        params: ParamsOut {
            n: params.n_individuals,
            mu: params.mutation_rate,
            s: params.selection,
            r: params.recombination_prob,
        },
        regime: regime_label(params),
        t_star: t_star(params).ok(),
        quantiles,
        mean,
        se,
        replicates: rows.len() as u64,
        runtime_seconds,
    }
}

pub fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::Io(format!("cannot create {parent:?}: {e}")))?;
        }
    }
    let mut f = std::fs::File::create(path)
        .map_err(|e| CliError::Io(format!("cannot write {path:?}: {e}")))?;
    f.write_all(content.as_bytes())
        .map_err(|e| CliError::Io(format!("cannot write {path:?}: {e}")))?;
    Ok(())
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}
