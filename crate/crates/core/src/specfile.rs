//! Run specifications as flat `key = value` text.
//!
//! One entry per line, `#` starts a comment, blank lines are skipped. Keys
//! may appear once. Each command has a fixed key set; anything else is an
//! error. Model parameters are given either as `J`, `K`, `beta` or as `t`,
//! `u` (with optional `J`, default 1), never both.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::lattice::{ExactOracleSettings, SiteBox};
use crate::mc::{ChainConfig, Sampler};
use crate::params::ModelParams;
use crate::phase::{Axes, Grid, ScanSpec};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SpecFile {
    entries: BTreeMap<String, String>,
}

impl SpecFile {
    pub fn parse(text: &str, allowed: &[&str]) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Spec(format!("line {}: expected key = value", no + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !allowed.contains(&k) {
                return Err(Error::Spec(format!("line {}: unknown key {k:?}", no + 1)));
            }
            if v.is_empty() {
                return Err(Error::Spec(format!("line {}: empty value for {k:?}", no + 1)));
            }
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Error::Spec(format!("line {}: duplicate key {k:?}", no + 1)));
            }
        }
        Ok(SpecFile { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| Error::Spec(format!("bad value {v:?} for {key:?}"))),
        }
    }

    pub fn or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    pub fn required<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.parsed(key)?.ok_or_else(|| Error::Spec(format!("missing key {key:?}")))
    }

    /// Model parameters from exactly one of the two parameterizations.
    pub fn params(&self) -> Result<ModelParams> {
        let physical = ["K", "beta"].iter().any(|k| self.has(k));
        let series = ["t", "u"].iter().any(|k| self.has(k));
        match (physical, series) {
            (true, false) => ModelParams::from_physical(self.or("J", 1.0)?, self.required("K")?, self.required("beta")?),
            (false, true) => ModelParams::from_tu(self.required("t")?, self.required("u")?, self.or("J", 1.0)?),
            (true, true) => Err(Error::Spec("give either J, K, beta or t, u, not both".into())),
            (false, false) => Err(Error::Spec("no model parameters".into())),
        }
    }

    /// Box from `L` or `width` and `height`, plus `boundary`.
    pub fn site_box(&self) -> Result<SiteBox> {
        let (w, h) = match (self.parsed::<usize>("L")?, self.has("width") || self.has("height")) {
            (Some(_), true) => return Err(Error::Spec("give either L or width and height".into())),
            (Some(l), false) => (l, l),
            (None, _) => (self.required("width")?, self.required("height")?),
        };
        if w == 0 || h == 0 {
            return Err(Error::Spec("box must be nonempty".into()));
        }
        Ok(SiteBox::new(w, h, self.or("boundary", 0)?))
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(PathBuf::from)
    }
}

const PARAM_KEYS: [&str; 5] = ["J", "K", "beta", "t", "u"];
const BOX_KEYS: [&str; 4] = ["L", "width", "height", "boundary"];

fn keys(extra: &[&'static str]) -> Vec<&'static str> {
    let mut v: Vec<&str> = PARAM_KEYS.iter().chain(BOX_KEYS.iter()).copied().collect();
    v.extend_from_slice(extra);
    v
}

pub const SIMULATE_KEYS: [&str; 10] =
    ["sweeps", "burn_in", "thin", "seed", "proposal_cap", "sampler", "batches", "dump", "output", "sequential"];
pub const ORACLE_KEYS: [&str; 3] = ["height_cap", "cap_tolerance", "output"];
pub const SCAN_KEYS: [&str; 11] =
    ["J", "K_grid", "beta_inv_grid", "t_grid", "u_grid", "epsilon", "n_max", "k", "order", "output", "cache_dir"];

#[derive(Clone, Debug, PartialEq)]
pub struct SimulateSpec {
    pub chain: ChainConfig,
    pub dump: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

pub fn simulate_spec(text: &str) -> Result<SimulateSpec> {
    let f = SpecFile::parse(text, &keys(&SIMULATE_KEYS))?;
    let sweeps: u64 = f.required("sweeps")?;
    let mut chain = ChainConfig::new(f.site_box()?, f.params()?, sweeps, f.or("seed", 0)?);
    chain.burn_in = f.or("burn_in", chain.burn_in)?;
    chain.thin = f.or("thin", 1)?;
    chain.proposal_cap = f.or("proposal_cap", 1)?;
    chain.sampler = f.or::<Sampler>("sampler", Sampler::HeatBath)?;
    chain.batches = f.or("batches", chain.batches)?;
    if f.or("sequential", false)? {
        chain.exec = Exec::Sequential;
    }
    chain.validate()?;
    Ok(SimulateSpec { chain, dump: f.path("dump"), output: f.path("output") })
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleSpec {
    pub bx: SiteBox,
    pub params: ModelParams,
    pub settings: ExactOracleSettings,
    pub output: Option<PathBuf>,
}

pub fn oracle_spec(text: &str) -> Result<OracleSpec> {
    let f = SpecFile::parse(text, &keys(&ORACLE_KEYS))?;
    Ok(OracleSpec {
        bx: f.site_box()?,
        params: f.params()?,
        settings: ExactOracleSettings::new(f.or("height_cap", 4)?, f.or("cap_tolerance", 1e-6)?),
        output: f.path("output"),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanRun {
    pub scan: ScanSpec,
    pub output: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
}

pub fn scan_spec(text: &str) -> Result<ScanRun> {
    let f = SpecFile::parse(text, &SCAN_KEYS)?;
    let physical = f.has("K_grid") || f.has("beta_inv_grid");
    let series = f.has("t_grid") || f.has("u_grid");
    let axes = match (physical, series) {
        (true, false) => Axes::Physical { k: f.required("K_grid")?, beta_inv: f.required("beta_inv_grid")? },
        (false, true) => Axes::Series { t: f.required("t_grid")?, u: f.required("u_grid")? },
        (true, true) => return Err(Error::Spec("give either K_grid, beta_inv_grid or t_grid, u_grid".into())),
        (false, false) => return Err(Error::Spec("no grid".into())),
    };
    let d = ScanSpec::default();
    let scan = ScanSpec {
        j: f.or("J", d.j)?,
        axes,
        epsilon: f.or("epsilon", d.epsilon)?,
        n_max: f.or("n_max", d.n_max)?,
        k: f.or("k", d.k)?,
        order: f.or("order", d.order)?,
    };
    if !(scan.j > 0.0) {
        return Err(Error::Spec(format!("J must be positive, got {}", scan.j)));
    }
    Ok(ScanRun { scan, output: f.path("output"), cache_dir: f.path("cache_dir") })
}

/// Grids must be parseable on their own for the `chalker` subcommand too.
pub fn grid(s: &str) -> Result<Grid> {
    s.parse()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grammar() {
        let f = SpecFile::parse("# c\n a = 1 # tail\n\nb=x y\n", &["a", "b"]).unwrap();
        assert_eq!(f.get("a"), Some("1"));
        assert_eq!(f.get("b"), Some("x y"));
        assert!(SpecFile::parse("c = 1", &["a"]).is_err());
        assert!(SpecFile::parse("a = 1\na = 2", &["a"]).is_err());
        assert!(SpecFile::parse("a 1", &["a"]).is_err());
        assert!(SpecFile::parse("a =", &["a"]).is_err());
    }

    #[test]
    fn one_parameterization() {
        let ok = simulate_spec("L = 3\nt = 0.1\nu = 0.2\nsweeps = 100\n").unwrap();
        assert_eq!(ok.chain.bx, SiteBox::new(3, 3, 0));
        assert!(simulate_spec("L = 3\nt = 0.1\nu = 0.2\nK = 1\nbeta = 1\nsweeps = 100\n").is_err());
        assert!(simulate_spec("L = 3\nsweeps = 100\n").is_err());
        assert!(simulate_spec("L = 3\nt = 0.1\nu = 0.2\nsweeps = 100\nspeed = 3\n").is_err());
    }
}
