//! Configurations on a finite box with constant boundary level, energies and
//! the brute-force exact oracle.

use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::geom::Site;
use crate::params::ModelParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SiteBox {
    pub width: usize,
    pub height: usize,
    pub boundary: u32,
}

impl SiteBox {
    pub fn new(width: usize, height: usize, boundary: u32) -> Self {
        assert!(width > 0 && height > 0, "box must be nonempty");
        SiteBox { width, height, boundary }
    }
    pub fn len(&self) -> usize {
        self.width * self.height
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn site(&self, i: usize) -> Site {
        ((i % self.width) as i32, (i / self.width) as i32)
    }
    pub fn index(&self, s: Site) -> Option<usize> {
        let (x, y) = s;
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            None
        } else {
            Some(y as usize * self.width + x as usize)
        }
    }
    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.len()).map(|i| self.site(i))
    }
    /// Neighbour indices of site `i`; `None` marks a boundary site.
    pub fn neighbors(&self, i: usize) -> [Option<usize>; 4] {
        let s = self.site(i);
        let mut out = [None; 4];
        for (k, d) in crate::geom::N4.iter().enumerate() {
            out[k] = self.index(crate::geom::add(s, *d));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HeightConfig {
    pub bx: SiteBox,
    pub heights: Vec<u32>,
}

impl HeightConfig {
    pub fn flat(bx: SiteBox, level: u32) -> Self {
        HeightConfig { bx, heights: vec![level; bx.len()] }
    }
    pub fn new(bx: SiteBox, heights: Vec<u32>) -> Self {
        assert_eq!(heights.len(), bx.len());
        HeightConfig { bx, heights }
    }
    pub fn at(&self, s: Site) -> u32 {
        match self.bx.index(s) {
            Some(i) => self.heights[i],
            None => self.bx.boundary,
        }
    }
}

/// Total height difference over bonds touching the box, and the zero count.
pub fn gradient_and_zeros(bx: &SiteBox, h: &[u32]) -> (u64, u64) {
    let w = bx.width;
    let n = bx.boundary as i64;
    let mut grad = 0u64;
    let mut zeros = 0u64;
    for i in 0..bx.len() {
        let x = i % w;
        let y = i / w;
        let hi = h[i] as i64;
        if hi == 0 {
            zeros += 1;
        }
        // Right and up bonds inside the box, boundary bonds on every side.
        if x + 1 < w {
            grad += (hi - h[i + 1] as i64).unsigned_abs();
        } else {
            grad += (hi - n).unsigned_abs();
        }
        if y + 1 < bx.height {
            grad += (hi - h[i + w] as i64).unsigned_abs();
        } else {
            grad += (hi - n).unsigned_abs();
        }
        if x == 0 {
            grad += (hi - n).unsigned_abs();
        }
        if y == 0 {
            grad += (hi - n).unsigned_abs();
        }
    }
    (grad, zeros)
}

/// `beta H` of a configuration.
pub fn energy(config: &HeightConfig, params: &ModelParams) -> f64 {
    let (g, z) = gradient_and_zeros(&config.bx, &config.heights);
    params.bond_cost() * g as f64 - params.u() * z as f64
}

/// `beta H` from the unit-cube surface: plaquette count minus the flat area,
/// and the horizontal plaquettes lying on the wall.
pub fn energy_cylinder_form(config: &HeightConfig, params: &ModelParams) -> f64 {
    let bx = config.bx;
    let top = config.heights.iter().copied().max().unwrap_or(0).max(bx.boundary);
    let mut vertical = 0u64;
    // A vertical plaquette at layer z sits between two columns exactly one of
    // which is filled at that layer.
    let filled = |s: Site, z: u32| config.at(s) > z;
    for s in bx.sites() {
        for z in 0..top {
            for d in [(1, 0), (0, 1)] {
                let t = crate::geom::add(s, d);
                if filled(s, z) != filled(t, z) {
                    vertical += 1;
                }
            }
            for d in [(-1, 0), (0, -1)] {
                let t = crate::geom::add(s, d);
                if bx.index(t).is_none() && filled(s, z) != filled(t, z) {
                    vertical += 1;
                }
            }
        }
    }
    let area = bx.len() as u64;
    let surface = area + vertical;
    let on_wall = config.heights.iter().filter(|&&h| h == 0).count() as f64;
    params.bond_cost() * (surface - area) as f64 - params.u() * on_wall
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactOracleSettings {
    pub height_cap: u32,
    pub cap_tolerance: f64,
}

impl ExactOracleSettings {
    pub fn new(height_cap: u32, cap_tolerance: f64) -> Self {
        ExactOracleSettings { height_cap, cap_tolerance }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Partition {
    pub z: f64,
    pub log_z: f64,
}

const ENUM_LIMIT: f64 = 1e9;

fn check_size(bx: &SiteBox, cap: u32) -> Result<()> {
    let count = (cap as f64 + 1.0).powi(bx.len() as i32);
    if count > ENUM_LIMIT {
        return Err(Error::EnumerationTooLarge(format!(
            "{}^{} configurations",
            cap + 1,
            bx.len()
        )));
    }
    Ok(())
}

/// Neumaier-compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
struct KahanSum {
    s: f64,
    c: f64,
}

impl KahanSum {
    fn add(&mut self, x: f64) {
        let t = self.s + x;
        if self.s.abs() >= x.abs() {
            self.c += (self.s - t) + x;
        } else {
            self.c += (x - t) + self.s;
        }
        self.s = t;
    }
    fn value(&self) -> f64 {
        self.s + self.c
    }
}

/// Sum `w(config) * obs(config)` over `{0..cap}^box`, partitioned on the first site.
fn enumerate<F>(bx: &SiteBox, params: &ModelParams, cap: u32, nobs: usize, obs: &F) -> (f64, Vec<f64>)
where
    F: Fn(&[u32]) -> Vec<f64> + Sync,
{
    let n = bx.len();
    let firsts: Vec<u32> = (0..=cap).collect();
    let parts = exec::map(Exec::Auto, &firsts, |&h0| {
        let mut h = vec![0u32; n];
        h[0] = h0;
        let mut z = KahanSum::default();
        let mut acc = vec![KahanSum::default(); nobs];
        loop {
            let (g, zc) = gradient_and_zeros(bx, &h);
            let w = (-(params.bond_cost() * g as f64) + params.u() * zc as f64).exp();
            z.add(w);
            if nobs > 0 {
                for (a, v) in acc.iter_mut().zip(obs(&h)) {
                    a.add(w * v);
                }
            }
            // Odometer over sites 1..n.
            let mut k = 1;
            while k < n {
                if h[k] < cap {
                    h[k] += 1;
                    break;
                }
                h[k] = 0;
                k += 1;
            }
            if k >= n {
                break;
            }
        }
        (z.value(), acc.iter().map(|a| a.value()).collect::<Vec<_>>())
    });
    let mut z = KahanSum::default();
    let mut acc = vec![KahanSum::default(); nobs];
    for (pz, pa) in parts {
        z.add(pz);
        for (a, v) in acc.iter_mut().zip(pa) {
            a.add(v);
        }
    }
    (z.value(), acc.iter().map(|a| a.value()).collect())
}

/// Partition function over heights `0..=cap`, checked against `cap + 1`.
pub fn exact_partition(bx: &SiteBox, params: &ModelParams, settings: &ExactOracleSettings) -> Result<Partition> {
    validate_cap(bx, settings)?;
    check_size(bx, settings.height_cap)?;
    let none = |_: &[u32]| Vec::new();
    let (z, _) = enumerate(bx, params, settings.height_cap, 0, &none);
    let (z1, _) = enumerate(bx, params, settings.height_cap + 1, 0, &none);
    let delta = (z1.ln() - z.ln()).abs();
    if delta >= settings.cap_tolerance {
        return Err(Error::CapNotConverged { cap: settings.height_cap, delta });
    }
    Ok(Partition { z, log_z: z.ln() })
}

fn validate_cap(bx: &SiteBox, settings: &ExactOracleSettings) -> Result<()> {
    if settings.height_cap < bx.boundary {
        return Err(Error::ParamsInvalid(format!(
            "height cap {} below boundary level {}",
            settings.height_cap, bx.boundary
        )));
    }
    Ok(())
}

/// Gibbs expectations of several observables at once.
pub fn exact_expectations<F>(
    bx: &SiteBox,
    params: &ModelParams,
    settings: &ExactOracleSettings,
    nobs: usize,
    obs: F,
) -> Result<Vec<f64>>
where
    F: Fn(&[u32]) -> Vec<f64> + Sync,
{
    let part = exact_partition(bx, params, settings)?;
    let (z, acc) = enumerate(bx, params, settings.height_cap, nobs, &obs);
    debug_assert!((z - part.z).abs() <= 1e-12 * z);
    Ok(acc.into_iter().map(|a| a / z).collect())
}

pub fn exact_expectation<F>(bx: &SiteBox, params: &ModelParams, settings: &ExactOracleSettings, obs: F) -> Result<f64>
where
    F: Fn(&HeightConfig) -> f64 + Sync,
{
    let v = exact_expectations(bx, params, settings, 1, |h| {
        vec![obs(&HeightConfig { bx: *bx, heights: h.to_vec() })]
    })?;
    Ok(v[0])
}

/// Exact site-averaged height histogram on `0..=cap`.
pub fn exact_histogram(bx: &SiteBox, params: &ModelParams, settings: &ExactOracleSettings) -> Result<Vec<f64>> {
    let cap = settings.height_cap as usize;
    let n = bx.len() as f64;
    exact_expectations(bx, params, settings, cap + 1, |h| {
        let mut v = vec![0.0; cap + 1];
        for &x in h {
            v[x as usize] += 1.0 / n;
        }
        v
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(t: f64, u: f64) -> ModelParams {
        ModelParams::from_tu(t, u, 1.0).unwrap()
    }

    #[test]
    fn flat_and_bump() {
        let bx = SiteBox::new(3, 2, 2);
        let q = p(0.1, 0.4);
        assert_eq!(energy(&HeightConfig::flat(bx, 2), &q), 0.0);
        let b0 = SiteBox::new(3, 2, 0);
        assert!((energy(&HeightConfig::flat(b0, 0), &q) + 0.4 * 6.0).abs() < 1e-12);
        let mut c = HeightConfig::flat(bx, 2);
        c.heights[4] = 3;
        assert!((energy(&c, &q) + 2.0 * 0.1f64.ln()).abs() < 1e-12);
        assert!((energy_cylinder_form(&c, &q) - energy(&c, &q)).abs() < 1e-12);
    }

    #[test]
    fn one_site_partition() {
        let (t, u) = (0.2, 0.3);
        let q = p(t, u);
        let bx = SiteBox::new(1, 1, 1);
        let s = ExactOracleSettings::new(2, 1.0);
        let z = exact_partition(&bx, &q, &s).unwrap().z;
        let want = t * t * u.exp() + 1.0 + t * t;
        assert!((z - want).abs() < 1e-14);
        let rho = exact_expectation(&bx, &q, &s, |c| (c.heights[0] == 0) as u8 as f64).unwrap();
        assert!((rho - t * t * u.exp() / want).abs() < 1e-14);
        let bz = SiteBox::new(1, 1, 0);
        let s0 = ExactOracleSettings::new(0, 1.0);
        assert!((exact_partition(&bz, &q, &s0).unwrap().z - u.exp()).abs() < 1e-14);
    }

    #[test]
    fn guards() {
        let q = p(0.1, 0.0);
        let bx = SiteBox::new(5, 5, 0);
        assert!(matches!(
            exact_partition(&bx, &q, &ExactOracleSettings::new(3, 1e-3)),
            Err(Error::EnumerationTooLarge(_))
        ));
        let b1 = SiteBox::new(1, 1, 0);
        assert!(matches!(
            exact_partition(&b1, &p(0.9, 0.0), &ExactOracleSettings::new(1, 1e-9)),
            Err(Error::CapNotConverged { .. })
        ));
    }
}
