//! Which restricted ensemble has the lowest truncated free energy.

use std::collections::BTreeMap;
use std::sync::Mutex;

use crate::catalog::{Catalog, CatalogKey};
use crate::cluster;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::params::{t1, ModelParams};
use crate::series::LaurentSeries;

/// Lazily built `f(h)` series for one `(k, N)`.
pub struct SeriesBook {
    pub k: u32,
    pub n_max: u32,
    exec: Exec,
    cache_dir: Option<std::path::PathBuf>,
    levels: Mutex<BTreeMap<u32, LaurentSeries>>,
}

impl SeriesBook {
    pub fn new(k: u32, n_max: u32, exec: Exec) -> Self {
        SeriesBook { k, n_max, exec, cache_dir: None, levels: Mutex::new(BTreeMap::new()) }
    }

    /// Catalogs are read from and written to `dir`.
    pub fn with_cache(mut self, dir: impl Into<std::path::PathBuf>) -> Self {
        self.cache_dir = Some(dir.into());
        self
    }

    pub fn free_energy(&self, h: u32) -> Result<LaurentSeries> {
        if let Some(f) = self.levels.lock().unwrap().get(&h) {
            return Ok(f.clone());
        }
        let key = CatalogKey::new(self.k, h, self.n_max);
        let cat = match &self.cache_dir {
            Some(d) => Catalog::load_or_build(d, key, self.exec)?,
            None => Catalog::build(key, self.exec)?,
        };
        let f = cluster::free_energy_from(&cat, self.exec)?;
        self.levels.lock().unwrap().insert(h, f.clone());
        Ok(f)
    }
}

#[derive(Clone, Debug)]
pub struct Dominance {
    pub level: u32,
    /// `f(h) - f(level)` for `h = 0..=h_max`.
    pub margins: Vec<f64>,
    /// Smallest margin over the other levels.
    pub min_margin: f64,
    /// `t` above the range where the expansion is proved to converge.
    pub beyond_t1: bool,
    /// Another level within rounding of the minimum.
    pub near_tie: bool,
}

/// Argmin of the truncated `f(h)` over `0..=h_max`, smallest level on ties.
pub fn dominant_level(params: &ModelParams, book: &SeriesBook, h_max: u32) -> Result<Dominance> {
    let (t, u) = (params.t(), params.u());
    if !(t > 0.0 && t < 1.0) || u > t.sqrt() {
        return Err(Error::ParamsOutOfRange(format!("need 0 < t < 1 and u <= sqrt(t), got t={t}, u={u}")));
    }
    let fs: Vec<LaurentSeries> = (0..=h_max).map(|h| book.free_energy(h)).collect::<Result<_>>()?;
    // compare through exact difference series against the current leader
    let mut level = 0usize;
    let mut margins: Vec<f64>;
    let mut rounds = 0;
    loop {
        margins = fs.iter().map(|f| f.sub(&fs[level]).eval(t, u)).collect();
        let (best, &m) = margins
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(a.0.cmp(&b.0)))
            .unwrap();
        if m >= 0.0 || rounds > fs.len() {
            break;
        }
        level = best;
        rounds += 1;
    }
    let scale: f64 = fs[level].terms().map(|(k, c)| t.powf(k.0 as f64 / 2.0) * cluster_abs(c)).sum::<f64>() + u.abs();
    let min_margin =
        margins.iter().enumerate().filter(|&(h, _)| h != level).map(|(_, &m)| m).fold(f64::INFINITY, f64::min);
    Ok(Dominance {
        level: level as u32,
        near_tie: min_margin.abs() <= 1e-14 * scale,
        margins,
        min_margin,
        beyond_t1: t > t1(book.k),
    })
}

fn cluster_abs(c: &num_rational::BigRational) -> f64 {
    use num_traits::{Signed, ToPrimitive};
    c.abs().to_f64().unwrap_or(f64::INFINITY)
}

/// `(n, u_lo, u_hi)` for the layer windows `n = 0..=n_max`.
pub fn layering_windows(t: f64, epsilon: f64, n_max: u32) -> Result<Vec<(u32, f64, f64)>> {
    if !(epsilon > 0.0 && epsilon < 2.0) {
        return Err(Error::EpsilonRange(epsilon));
    }
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::ParamsOutOfRange(format!("t={t}")));
    }
    let c = -(-t * t).ln_1p();
    Ok((0..=n_max)
        .map(|n| {
            let lo = c + (2.0 + epsilon) * t.powi(n as i32 + 3);
            let hi = if n == 0 { t.sqrt() } else { c + (2.0 - epsilon) * t.powi(n as i32 + 2) };
            (n, lo, hi)
        })
        .collect())
}

/// Midpoint of window `n`.
pub fn window_midpoint(t: f64, epsilon: f64, n: u32) -> Result<f64> {
    let w = layering_windows(t, epsilon, n)?;
    let (_, lo, hi) = w[n as usize];
    Ok(lo + (hi - lo) / 2.0)
}
