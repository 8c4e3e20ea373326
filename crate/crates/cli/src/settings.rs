//! Layered configuration: defaults, then preset, then config file, then
//! explicit command-line flags.

use crate::{CliError, CommonArgs};
use std::path::PathBuf;
use twolocus::model::{Parameters, PopulationState};

pub const ENV_THREADS: &str = "TWOLOCUS_THREADS";

#[derive(Debug, Clone)]
pub struct Settings {
    pub n: Option<u64>,
    pub mu: Option<f64>,
    pub s: Option<f64>,
    pub r: Option<f64>,
    pub seed: u64,
    pub replicates: u64,
    pub threads: usize,
    pub out: Option<PathBuf>,
    pub sample_dt: Option<f64>,
    pub max_time: Option<f64>,
    pub max_events: Option<u64>,
    pub track_lineage: bool,
    pub init: Option<String>,
    pub preset: Option<String>,
    pub eps: f64,
    pub delta: f64,
    pub slack: f64,
    pub eps0: Option<f64>,
    pub r_list: Option<String>,
    pub r_range: Option<String>,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            n: None,
            mu: None,
            s: None,
            r: None,
            seed: 42,
            replicates: 1,
            threads: 0, // resolved later
            out: None,
            sample_dt: None,
            max_time: None,
            max_events: None,
            track_lineage: false,
            init: None,
            preset: None,
            eps: 1.0 / 32.0,
            delta: 0.125,
            slack: 2.0,
            eps0: None,
            r_list: None,
            r_range: None,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse::<T>()
        .map_err(|_| CliError::Config(format!("cannot parse value '{value}' for key '{key}'")))
}

impl Settings {
    fn apply_preset(&mut self, name: &str) -> Result<(), CliError> {
        match name {
            "theorem-check" => {
                self.n = Some(100_000);
                self.mu = Some(10f64.powf(-3.75));
                self.s = Some(0.1);
                self.r = Some(10f64.powf(-2.5));
            }
            "figure-1" => {
                self.n = Some(10_000_000);
                self.mu = Some(2e-6);
                self.s = Some(1e-4);
                self.r = Some(0.0);
                if self.r_range.is_none() && self.r_list.is_none() {
                    self.r_range = Some("0:5e-5:51".to_string());
                }
            }
            other => {
                return Err(CliError::Config(format!(
                    "unknown preset '{other}' (expected theorem-check or figure-1)"
                )))
            }
        }
        Ok(())
    }

    fn apply_kv(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "n" => self.n = Some(parse(key, value)?),
            "mu" => self.mu = Some(parse(key, value)?),
            "s" => self.s = Some(parse(key, value)?),
            "r" => self.r = Some(parse(key, value)?),
            "seed" => self.seed = parse(key, value)?,
            "replicates" => self.replicates = parse(key, value)?,
            "threads" => self.threads = parse(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "sample-dt" | "sample_dt" => self.sample_dt = Some(parse(key, value)?),
            "max-time" | "max_time" => self.max_time = Some(parse(key, value)?),
            "max-events" | "max_events" => self.max_events = Some(parse(key, value)?),
            "track-lineage" | "track_lineage" => self.track_lineage = parse(key, value)?,
            "init" => self.init = Some(value.to_string()),
            "preset" => self.preset = Some(value.to_string()),
            "eps" => self.eps = parse(key, value)?,
            "delta" => self.delta = parse(key, value)?,
            "slack" => self.slack = parse(key, value)?,
            "eps0" => self.eps0 = Some(parse(key, value)?),
            "r-list" | "r_list" => self.r_list = Some(value.to_string()),
            "r-range" | "r_range" => self.r_range = Some(value.to_string()),
            other => {
                return Err(CliError::Config(format!("unknown config key '{other}'")));
            }
        }
        Ok(())
    }

    pub fn resolve(args: &CommonArgs) -> Result<Self, CliError> {
        let mut s = Settings::default();

        // Preset named anywhere (flag wins over file) is applied first so
        // that both the file and the flags can override its values.
        let file_text = match &args.config {
            Some(path) => Some(
                std::fs::read_to_string(path)
                    .map_err(|e| CliError::Config(format!("cannot read config {path:?}: {e}")))?,
            ),
            None => None,
        };
        let mut preset = args.preset.clone();
        if preset.is_none() {
            if let Some(text) = &file_text {
                for line in text.lines() {
                    let line = line.trim();
                    if let Some(rest) = line.strip_prefix("preset") {
                        if let Some(v) = rest.trim().strip_prefix('=') {
                            preset = Some(v.trim().to_string());
                        }
                    }
                }
            }
        }
        if let Some(name) = &preset {
            s.apply_preset(name)?;
            s.preset = Some(name.clone());
        }

        if let Some(text) = &file_text {
            for (lineno, raw) in text.lines().enumerate() {
                let line = raw.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    CliError::Config(format!(
                        "config line {} is not key=value: '{raw}'",
                        lineno + 1
                    ))
                })?;
                let key = key.trim();
                if key == "preset" {
                    continue; // handled above
                }
                s.apply_kv(key, value.trim())?;
            }
        }

        // Explicit flags override everything.
        if let Some(v) = args.n {
            s.n = Some(v);
        }
        if let Some(v) = args.mu {
            s.mu = Some(v);
        }
        if let Some(v) = args.s {
            s.s = Some(v);
        }
        if let Some(v) = args.r {
            s.r = Some(v);
        }
        if let Some(v) = args.seed {
            s.seed = v;
        }
        if let Some(v) = args.replicates {
            s.replicates = v;
        }
        if let Some(v) = args.threads {
            s.threads = v;
        }
        if let Some(v) = &args.out {
            s.out = Some(v.clone());
        }
        if let Some(v) = args.sample_dt {
            s.sample_dt = Some(v);
        }
        if let Some(v) = args.max_time {
            s.max_time = Some(v);
        }
        if let Some(v) = args.max_events {
            s.max_events = Some(v);
        }
        if args.track_lineage {
            s.track_lineage = true;
        }
        if let Some(v) = &args.init {
            s.init = Some(v.clone());
        }
        if let Some(v) = args.eps {
            s.eps = v;
        }
        if let Some(v) = args.delta {
            s.delta = v;
        }
        if let Some(v) = args.slack {
            s.slack = v;
        }
        if let Some(v) = args.eps0 {
            s.eps0 = Some(v);
        }
        if let Some(v) = &args.r_list {
            s.r_list = Some(v.clone());
        }
        if let Some(v) = &args.r_range {
            s.r_range = Some(v.clone());
        }

        if s.replicates == 0 {
            return Err(CliError::Config(
                "replicates must be at least 1".to_string(),
            ));
        }
        if s.threads == 0 {
            s.threads = std::env::var(ENV_THREADS)
                .ok()
                .and_then(|v| v.parse().ok())
                .filter(|v| *v > 0)
                .unwrap_or_else(|| {
                    std::thread::available_parallelism()
                        .map(|n| n.get())
                        .unwrap_or(1)
                });
        }
        Ok(s)
    }

    pub fn params(&self) -> Result<Parameters, CliError> {
        let (Some(n), Some(mu), Some(s), Some(r)) = (self.n, self.mu, self.s, self.r) else {
            return Err(CliError::Config(
                "model parameters are incomplete; set --n, --mu, --s, --r (or a preset/config)"
                    .to_string(),
            ));
        };
        Parameters::new(n, mu, s, r).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Initial state from the `init` setting (`x0,x1,x2,x3`).
    pub fn initial_state(&self) -> Result<Option<PopulationState>, CliError> {
        let Some(text) = &self.init else {
            return Ok(None);
        };
        let counts: Vec<u64> = text
            .split(',')
            .map(|v| v.trim().parse::<u64>())
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::Config(format!("init must be x0,x1,x2,x3, got '{text}'")))?;
        if counts.len() != 4 {
            return Err(CliError::Config(format!(
                "init must have four counts, got '{text}'"
            )));
        }
        Ok(Some(PopulationState::new(
            counts[0], counts[1], counts[2], counts[3], 0.0,
        )))
    }

    /// r values for sweep/tstar-curve, from `r_list` or `r_range`.
    pub fn sweep_r_values(&self) -> Result<Vec<f64>, CliError> {
        if let Some(list) = &self.r_list {
            let mut out = Vec::new();
            for piece in list.split(',') {
                let v: f64 = piece
                    .trim()
                    .parse()
                    .map_err(|_| CliError::Config(format!("bad r value '{piece}' in r-list")))?;
                out.push(v);
            }
            check_distinct(&out)?;
            return Ok(out);
        }
        if let Some(range) = &self.r_range {
            let parts: Vec<&str> = range.split(':').collect();
            if parts.len() != 3 {
                return Err(CliError::Config(format!(
                    "r-range must be lo:hi:count, got '{range}'"
                )));
            }
            let lo: f64 = parse("r-range lo", parts[0])?;
            let hi: f64 = parse("r-range hi", parts[1])?;
            let count: usize = parse("r-range count", parts[2])?;
            if count < 2 || hi <= lo {
                return Err(CliError::Config(format!(
                    "r-range needs hi > lo and count >= 2, got '{range}'"
                )));
            }
            let out: Vec<f64> = (0..count)
                .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
                .collect();
            check_distinct(&out)?;
            return Ok(out);
        }
        Err(CliError::Config(
            "this subcommand needs --r-list or --r-range (or a preset that sets one)".to_string(),
        ))
    }
}

fn check_distinct(values: &[f64]) -> Result<(), CliError> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(CliError::Config(
            "sweep points must be distinct".to_string(),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_defaults_preset_file_flags() {
        let dir = std::env::temp_dir().join("twolocus_settings_test");
        std::fs::create_dir_all(&dir).unwrap();
        let cfg = dir.join("run.cfg");
        std::fs::write(&cfg, "# comment\npreset=theorem-check\nseed=7\nmu=1e-3\n").unwrap();
        let args = CommonArgs {
            config: Some(cfg),
            mu: Some(2e-3),
            ..Default::default()
        };
        let s = Settings::resolve(&args).unwrap();
        assert_eq!(s.n, Some(100_000)); // from preset
        assert_eq!(s.seed, 7); // file overrides default
        assert_eq!(s.mu, Some(2e-3)); // flag overrides file
        assert!(s.threads >= 1);
    }

    #[test]
    fn unknown_keys_and_bad_lines_are_config_errors() {
        let dir = std::env::temp_dir().join("twolocus_settings_test2");
        std::fs::create_dir_all(&dir).unwrap();
        let cfg = dir.join("bad.cfg");
        std::fs::write(&cfg, "frobnicate=1\n").unwrap();
        let args = CommonArgs {
            config: Some(cfg.clone()),
            ..Default::default()
        };
        assert!(matches!(Settings::resolve(&args), Err(CliError::Config(_))));
        std::fs::write(&cfg, "just a line\n").unwrap();
        assert!(matches!(Settings::resolve(&args), Err(CliError::Config(_))));
    }

    #[test]
    fn sweep_values() {
        let mut s = Settings {
            r_list: Some("0,1e-4,2e-4".into()),
            ..Default::default()
        };
        assert_eq!(s.sweep_r_values().unwrap(), vec![0.0, 1e-4, 2e-4]);
        s.r_list = Some("0,0".into());
        assert!(s.sweep_r_values().is_err());
        s.r_list = None;
        s.r_range = Some("0:1e-3:5".into());
        let v = s.sweep_r_values().unwrap();
        assert_eq!(v.len(), 5);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[4], 1e-3);
    }
}
