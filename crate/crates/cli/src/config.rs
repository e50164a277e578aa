use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use sha2::{Digest, Sha256};
use weibull_mle::mle::DEFAULT_TOL;
use weibull_mle::quantile_eval::DEFAULT_P_LIST;
use weibull_mle::GridSpec;

use crate::error::CliError;

/// Flags shared by every subcommand. Each may also be set in a `--config`
/// file as `key = value`, using the flag name without dashes; flags win.
#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// Plain-text key=value configuration file
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Master seed for the Monte Carlo streams
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (results do not depend on this)
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output directory
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Replications per cell
    #[arg(long, global = true, value_name = "COUNT")]
    pub m: Option<usize>,
    /// Sample sizes, comma separated
    #[arg(long, global = true, value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,
    /// Shape values, comma separated
    #[arg(long, global = true, value_delimiter = ',')]
    pub delta_list: Option<Vec<f64>>,
    /// Probabilities for the quantile comparison, comma separated
    #[arg(long, global = true, value_delimiter = ',')]
    pub p_list: Option<Vec<f64>>,
    /// Convergence tolerance on the profile score
    #[arg(long, global = true)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub workers: Option<usize>,
    pub out: PathBuf,
    pub m: usize,
    pub n_list: Vec<usize>,
    pub delta_list: Vec<f64>,
    pub p_list: Vec<f64>,
    pub tol: f64,
}

const KEYS: [&str; 8] = ["seed", "workers", "out", "m", "n-list", "delta-list", "p-list", "tol"];

fn parse_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!("{} line {}: expected key=value", path.display(), i + 1))
        })?;
        let key = key.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::Config(format!(
                "{} line {}: unknown key {key:?}",
                path.display(),
                i + 1
            )));
        }
        map.insert(key, value.trim().to_owned());
    }
    Ok(map)
}

fn parse_one<T: FromStr>(key: &str, raw: &str) -> Result<T, CliError> {
    raw.parse()
        .map_err(|_| CliError::Config(format!("{key}: cannot parse {raw:?}")))
}

fn parse_list<T: FromStr>(key: &str, raw: &str) -> Result<Vec<T>, CliError> {
    raw.split(',').map(|s| parse_one(key, s.trim())).collect()
}

impl RunConfig {
    pub fn resolve(args: &CommonArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => parse_file(path)?,
            None => BTreeMap::new(),
        };
        let get = |k: &str| file.get(k).map(String::as_str);
        let desk = GridSpec::desk(42);

        let cfg = Self {
            seed: match (args.seed, get("seed")) {
                (Some(v), _) => v,
                (None, Some(raw)) => parse_one("seed", raw)?,
                (None, None) => desk.master_seed,
            },
            workers: match (args.workers, get("workers")) {
                (Some(v), _) => Some(v),
                (None, Some(raw)) => Some(parse_one("workers", raw)?),
                (None, None) => None,
            },
            out: match (&args.out, get("out")) {
                (Some(v), _) => v.clone(),
                (None, Some(raw)) => PathBuf::from(raw),
                (None, None) => PathBuf::from("."),
            },
            m: match (args.m, get("m")) {
                (Some(v), _) => v,
                (None, Some(raw)) => parse_one("m", raw)?,
                (None, None) => desk.replications,
            },
            n_list: match (&args.n_list, get("n-list")) {
                (Some(v), _) => v.clone(),
                (None, Some(raw)) => parse_list("n-list", raw)?,
                (None, None) => desk.n_values,
            },
            delta_list: match (&args.delta_list, get("delta-list")) {
                (Some(v), _) => v.clone(),
                (None, Some(raw)) => parse_list("delta-list", raw)?,
                (None, None) => desk.delta_values,
            },
            p_list: match (&args.p_list, get("p-list")) {
                (Some(v), _) => v.clone(),
                (None, Some(raw)) => parse_list("p-list", raw)?,
                (None, None) => DEFAULT_P_LIST.to_vec(),
            },
            tol: match (args.tol, get("tol")) {
                (Some(v), _) => v,
                (None, Some(raw)) => parse_one("tol", raw)?,
                (None, None) => DEFAULT_TOL,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        self.grid().validate()?;
        if self.n_list.is_empty() || self.delta_list.is_empty() {
            return Err(CliError::Config("n-list and delta-list must be non-empty".into()));
        }
        if let Some(&p) = self.p_list.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
            return Err(CliError::Config(format!("p-list entry {p} is outside (0, 1)")));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(CliError::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if self.workers == Some(0) {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec {
            n_values: self.n_list.clone(),
            delta_values: self.delta_list.clone(),
            replications: self.m,
            master_seed: self.seed,
        }
    }

    /// Settings that determine the outputs, one `key=value` per line.
    /// Worker count and output directory are left out: they do not change
    /// any result.
    pub fn canonical(&self) -> String {
        let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        let ns = self.n_list.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        format!(
            "delta-list={}\nm={}\nn-list={}\np-list={}\nseed={}\ntol={}\n",
            join(&self.delta_list),
            self.m,
            ns,
            join(&self.p_list),
            self.seed,
            self.tol
        )
    }

    pub fn hash(&self) -> String {
        hex(&Sha256::digest(self.canonical().as_bytes()))
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn defaults_are_the_desk_grid() {
        let cfg = RunConfig::resolve(&CommonArgs::default()).unwrap();
        assert_eq!(cfg.n_list, vec![10, 50, 100]);
        assert_eq!(cfg.delta_list, vec![0.5, 1.0, 5.0, 10.0]);
        assert_eq!((cfg.m, cfg.seed), (10_000, 42));
        assert_eq!(cfg.p_list, DEFAULT_P_LIST.to_vec());
    }

    #[test]
    fn flags_override_file() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "# desk overrides\nseed = 7\nm=500\nn_list = 20, 30\ntol=1e-9").unwrap();
        let args = CommonArgs {
            config: Some(file.path().to_path_buf()),
            m: Some(200),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(&args).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.m, 200);
        assert_eq!(cfg.n_list, vec![20, 30]);
        assert_eq!(cfg.tol, 1e-9);
    }

    #[test]
    fn bad_config_is_rejected() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "colour = blue").unwrap();
        let args = CommonArgs {
            config: Some(file.path().to_path_buf()),
            ..Default::default()
        };
        assert!(matches!(RunConfig::resolve(&args), Err(CliError::Config(_))));

        for args in [
            CommonArgs { m: Some(10), ..Default::default() },
            CommonArgs { n_list: Some(vec![1]), ..Default::default() },
            CommonArgs { p_list: Some(vec![0.5, 1.0]), ..Default::default() },
            CommonArgs { tol: Some(0.0), ..Default::default() },
            CommonArgs { workers: Some(0), ..Default::default() },
        ] {
            let err = RunConfig::resolve(&args).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{err}");
        }
    }

    #[test]
    fn hash_ignores_workers_and_out() {
        let a = RunConfig::resolve(&CommonArgs::default()).unwrap();
        let b = RunConfig::resolve(&CommonArgs {
            workers: Some(3),
            out: Some("elsewhere".into()),
            ..Default::default()
        })
        .unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = RunConfig::resolve(&CommonArgs { seed: Some(1), ..Default::default() }).unwrap();
        assert_ne!(a.hash(), c.hash());
    }
}
