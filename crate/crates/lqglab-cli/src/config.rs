//! Run configuration: defaults, `key = value` config files, flag overrides,
//! and the environment worker override.
//!
//! Precedence, lowest to highest: built-in defaults, config file, command
//! line flags, then the `LQGLAB_WORKERS` environment variable (workers
//! only). The seed has no default on purpose — every run must state one.

use lqglab::{Error, GridSpec, Result};
use serde::Serialize;
use std::path::PathBuf;

/// Environment variable that overrides the worker count.
pub const WORKERS_ENV: &str = "LQGLAB_WORKERS";

/// Fully resolved configuration of one `run` invocation.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub gamma: f64,
    pub weights: Vec<f64>,
    pub grid: GridSpec,
    pub n_samples: u64,
    pub seed: u64,
    pub workers: usize,
    pub output_dir: PathBuf,
    pub suite: Vec<String>,
}

/// Partial configuration from one source (file or flags); `None` means the
/// source did not mention the key.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub gamma: Option<f64>,
    pub weights: Option<Vec<f64>>,
    pub grid: Option<GridSpec>,
    pub n_samples: Option<u64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub suite: Option<Vec<String>>,
}

impl Overrides {
    fn or(self, weaker: Overrides) -> Overrides {
        Overrides {
            gamma: self.gamma.or(weaker.gamma),
            weights: self.weights.or(weaker.weights),
            grid: self.grid.or(weaker.grid),
            n_samples: self.n_samples.or(weaker.n_samples),
            seed: self.seed.or(weaker.seed),
            workers: self.workers.or(weaker.workers),
            output_dir: self.output_dir.or(weaker.output_dir),
            suite: self.suite.or(weaker.suite),
        }
    }
}

/// Comma-separated list of positive floats.
pub fn parse_weights(s: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let w: f64 = part
            .parse()
            .map_err(|_| Error::param(format!("weight '{part}' is not a number")))?;
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::param(format!("weights must be positive, got {w}")));
        }
        out.push(w);
    }
    if out.is_empty() {
        return Err(Error::param("weights list is empty"));
    }
    Ok(out)
}

/// Grid syntax `NXxNY:TCUT`, e.g. `256x16:6.0`.
pub fn parse_grid(s: &str) -> Result<GridSpec> {
    let err = || Error::param(format!("grid '{s}' must look like 256x16:6.0 (NXxNY:TCUT)"));
    let (dims, t_cut) = s.split_once(':').ok_or_else(err)?;
    let (nx, ny) = dims.split_once('x').ok_or_else(err)?;
    let nx: usize = nx.trim().parse().map_err(|_| err())?;
    let ny: usize = ny.trim().parse().map_err(|_| err())?;
    let t_cut: f64 = t_cut.trim().parse().map_err(|_| err())?;
    GridSpec::new(t_cut, nx, ny)
}

/// Comma-separated check names; an empty string is the empty suite.
pub fn parse_suite(s: &str) -> Vec<String> {
    s.split(',')
        .map(|p| p.trim().to_string())
        .filter(|p| !p.is_empty())
        .collect()
}

/// Parse a config file: one `key = value` per line, `#` comments, blank
/// lines ignored. Unknown keys are typed errors so typos cannot silently
/// fall back to defaults.
pub fn parse_config_file(text: &str) -> Result<Overrides> {
    let mut o = Overrides::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.split_once('#') {
            Some((before, _)) => before.trim(),
            None => raw.trim(),
        };
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::param(format!(
                "config line {} is not 'key = value': {raw}",
                lineno + 1
            ))
        })?;
        let (key, value) = (key.trim(), value.trim());
        let bad_num =
            |k: &str, v: &str| Error::param(format!("config key {k} has non-numeric value '{v}'"));
        match key {
            "gamma" => o.gamma = Some(value.parse().map_err(|_| bad_num(key, value))?),
            "weights" => o.weights = Some(parse_weights(value)?),
            "grid" => o.grid = Some(parse_grid(value)?),
            "n_samples" => o.n_samples = Some(value.parse().map_err(|_| bad_num(key, value))?),
            "seed" => o.seed = Some(value.parse().map_err(|_| bad_num(key, value))?),
            "workers" => o.workers = Some(value.parse().map_err(|_| bad_num(key, value))?),
            "output_dir" => o.output_dir = Some(PathBuf::from(value)),
            "suite" => o.suite = Some(parse_suite(value)),
            other => {
                return Err(Error::param(format!(
                    "unknown config key '{other}' on line {}",
                    lineno + 1
                )))
            }
        }
    }
    Ok(o)
}

/// Merge flag overrides over file overrides over defaults into a validated
/// config. `default_suite` fills `suite` when neither source names one.
pub fn resolve(
    file: Option<Overrides>,
    flags: Overrides,
    env_workers: Option<usize>,
    default_suite: &[&str],
) -> Result<RunConfig> {
    let merged = flags.or(file.unwrap_or_default());
    let gamma = merged.gamma.unwrap_or(std::f64::consts::SQRT_2);
    if !(gamma > 0.0 && gamma < 2.0) || !gamma.is_finite() {
        return Err(Error::param(format!(
            "gamma must lie in (0, 2), got {gamma}"
        )));
    }
    let weights = merged.weights.unwrap_or_else(|| vec![2.0, 0.5]);
    let grid = match merged.grid {
        Some(g) => g,
        None => GridSpec::new(6.0, 256, 16)?,
    };
    let n_samples = merged.n_samples.unwrap_or(100_000);
    if n_samples == 0 {
        return Err(Error::param("n_samples must be at least 1"));
    }
    let seed = merged.seed.ok_or_else(|| {
        Error::param(
            "seed is required and has no default; pass --seed or put 'seed = <u64>' in the config file",
        )
    })?;
    let workers = env_workers.or(merged.workers).unwrap_or(1).max(1);
    let output_dir = merged
        .output_dir
        .unwrap_or_else(|| PathBuf::from("lqglab-out"));
    let suite = merged
        .suite
        .unwrap_or_else(|| default_suite.iter().map(|s| s.to_string()).collect());
    Ok(RunConfig {
        gamma,
        weights,
        grid,
        n_samples,
        seed,
        workers,
        output_dir,
        suite,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_round_trip_and_precedence() {
        let text = "
# run parameters
gamma = 1.5
weights = 2.0, 0.5   # one thick, one thin
grid = 64x8:3.0
n_samples = 123
seed = 9
workers = 2
output_dir = somewhere/out
suite = window_mass, mot_cov
";
        let file = parse_config_file(text).unwrap();
        let flags = Overrides {
            n_samples: Some(777),
            ..Default::default()
        };
        let cfg = resolve(Some(file), flags, None, &["a", "b"]).unwrap();
        assert_eq!(cfg.gamma, 1.5);
        assert_eq!(cfg.weights, vec![2.0, 0.5]);
        assert_eq!(cfg.grid.nx, 64);
        assert_eq!(cfg.grid.t_cut, 3.0);
        assert_eq!(cfg.n_samples, 777, "flags beat the file");
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.workers, 2);
        assert_eq!(cfg.output_dir, PathBuf::from("somewhere/out"));
        assert_eq!(cfg.suite, vec!["window_mass", "mot_cov"]);
    }

    #[test]
    fn seed_is_mandatory() {
        let err = resolve(None, Overrides::default(), None, &[]).unwrap_err();
        assert!(err.to_string().contains("seed"));
    }

    #[test]
    fn env_workers_beats_everything() {
        let flags = Overrides {
            seed: Some(1),
            workers: Some(2),
            ..Default::default()
        };
        let cfg = resolve(None, flags, Some(16), &[]).unwrap();
        assert_eq!(cfg.workers, 16);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_typed_errors() {
        assert!(parse_config_file("speed = fast").is_err());
        assert!(parse_config_file("gamma = quick").is_err());
        assert!(parse_weights("2.0,-1.0").is_err());
        assert!(parse_grid("256:16x6").is_err());
        assert!(parse_grid("axb:1").is_err());
    }

    #[test]
    fn empty_suite_is_representable() {
        assert!(parse_suite("").is_empty());
        let flags = Overrides {
            seed: Some(1),
            suite: Some(vec![]),
            ..Default::default()
        };
        let cfg = resolve(None, flags, None, &["x"]).unwrap();
        assert!(cfg.suite.is_empty());
        let cfg2 = resolve(
            None,
            Overrides {
                seed: Some(1),
                ..Default::default()
            },
            None,
            &["x"],
        )
        .unwrap();
        assert_eq!(cfg2.suite, vec!["x"], "absent suite means the default");
    }
}
