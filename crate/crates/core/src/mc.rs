//! Single-site Monte Carlo for the finite-box Gibbs measure with a constant
//! boundary level.
//!
//! Randomness is counter based: the update of site `i` in sweep `s` draws from
//! a ChaCha8 stream keyed by the chain seed, with stream id `i` and word
//! position `16 s`. Same-colour sites of the checkerboard are updated from the
//! same snapshot, so results do not depend on the thread count.
//!
//! Raw dump format (little endian): the 8 bytes `SOSWRAW1`, then `u32` width,
//! `u32` height, `u32` boundary level, `u64` sample count, followed by one
//! row-major block of `u32` heights per recorded sample.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dominance::layering_windows;
use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::lattice::{HeightConfig, SiteBox};
use crate::params::ModelParams;

const WORDS_PER_UPDATE: u128 = 16;
const PARALLEL_MIN_SITES: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sampler {
    HeatBath,
    Metropolis,
}

impl std::str::FromStr for Sampler {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heat_bath" => Ok(Sampler::HeatBath),
            "metropolis" => Ok(Sampler::Metropolis),
            _ => Err(Error::ParamsInvalid(format!("unknown sampler {s:?}"))),
        }
    }
}

impl std::fmt::Display for Sampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Sampler::HeatBath => "heat_bath",
            Sampler::Metropolis => "metropolis",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainConfig {
    pub bx: SiteBox,
    pub params: ModelParams,
    /// Total sweeps including burn-in.
    pub sweeps: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub seed: u64,
    /// Largest Metropolis step.
    pub proposal_cap: u32,
    pub sampler: Sampler,
    pub batches: usize,
    pub exec: Exec,
}

impl ChainConfig {
    pub fn new(bx: SiteBox, params: ModelParams, sweeps: u64, seed: u64) -> Self {
        ChainConfig {
            bx,
            params,
            sweeps,
            burn_in: sweeps / 10,
            thin: 1,
            seed,
            proposal_cap: 1,
            sampler: Sampler::HeatBath,
            batches: 50,
            exec: Exec::Auto,
        }
    }

    pub fn samples(&self) -> u64 {
        (self.sweeps - self.burn_in).div_ceil(self.thin)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweeps <= self.burn_in {
            return Err(Error::ParamsInvalid(format!(
                "sweeps {} must exceed burn_in {}",
                self.sweeps, self.burn_in
            )));
        }
        if self.thin == 0 {
            return Err(Error::ParamsInvalid("thin must be at least 1".into()));
        }
        if self.proposal_cap == 0 {
            return Err(Error::ParamsInvalid("proposal_cap must be at least 1".into()));
        }
        if self.batches < 2 || (self.samples() as usize) < self.batches {
            return Err(Error::ParamsInvalid(format!(
                "{} samples cannot fill {} batches",
                self.samples(),
                self.batches
            )));
        }
        Ok(())
    }
}

/// The generator for one site update.
pub fn site_rng(base: &ChaCha8Rng, sweep: u64, site: usize) -> ChaCha8Rng {
    let mut r = base.clone();
    r.set_stream(site as u64);
    r.set_word_pos(sweep as u128 * WORDS_PER_UPDATE);
    r
}

fn base_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn neighbour_heights(config: &HeightConfig, i: usize) -> [u32; 4] {
    let mut out = [config.bx.boundary; 4];
    for (k, j) in config.bx.neighbors(i).iter().enumerate() {
        if let Some(j) = j {
            out[k] = config.heights[*j];
        }
    }
    out
}

fn log_weight(h: u32, nbrs: &[u32; 4], params: &ModelParams) -> f64 {
    let grad: u64 = nbrs.iter().map(|&y| (h as i64 - y as i64).unsigned_abs()).sum();
    let wall = if h == 0 { params.u() } else { 0.0 };
    -params.bond_cost() * grad as f64 + wall
}

/// Draw from the single-site conditional given the four neighbour heights.
/// Heights above the highest neighbour form a geometric tail with ratio `t^2`,
/// which is sampled exactly.
pub fn heat_bath_draw<R: Rng>(nbrs: &[u32; 4], params: &ModelParams, rng: &mut R) -> u32 {
    let top = *nbrs.iter().max().unwrap();
    let t2 = params.t() * params.t();
    let log_tail = log_weight(top, nbrs, params) + (t2 / (1.0 - t2)).ln() - if top == 0 { params.u() } else { 0.0 };
    let mut peak = log_tail;
    for h in 0..=top {
        peak = peak.max(log_weight(h, nbrs, params));
    }
    let tail = (log_tail - peak).exp();
    let mut total = tail;
    for h in 0..=top {
        total += (log_weight(h, nbrs, params) - peak).exp();
    }
    let mut x = rng.gen::<f64>() * total;
    for h in 0..=top {
        x -= (log_weight(h, nbrs, params) - peak).exp();
        if x < 0.0 {
            return h;
        }
    }
    // P(j >= k + 1) = t^{2k} for the tail offset j >= 1.
    let v: f64 = 1.0 - rng.gen::<f64>();
    top + 1 + (v.ln() / t2.ln()).floor() as u32
}

/// Heat-bath update of site `i`.
pub fn heat_bath_site<R: Rng>(config: &HeightConfig, i: usize, params: &ModelParams, rng: &mut R) -> u32 {
    heat_bath_draw(&neighbour_heights(config, i), params, rng)
}

/// Metropolis update of site `i` with steps uniform in `[-cap, cap] \ {0}`;
/// moves below the wall are rejected.
pub fn metropolis_site<R: Rng>(config: &HeightConfig, i: usize, params: &ModelParams, cap: u32, rng: &mut R) -> u32 {
    let h = config.heights[i];
    let nbrs = neighbour_heights(config, i);
    let mut d = rng.gen_range(1..=2 * cap as i64) - cap as i64;
    if d <= 0 {
        d -= 1;
    }
    let new = h as i64 + d;
    if new < 0 {
        return h;
    }
    let new = new as u32;
    let gain = log_weight(new, &nbrs, params) - log_weight(h, &nbrs, params);
    if gain >= 0.0 || rng.gen::<f64>() < gain.exp() {
        new
    } else {
        h
    }
}

/// One checkerboard sweep, even sites first.
pub fn sweep(config: &mut HeightConfig, chain: &ChainConfig, base: &ChaCha8Rng, index: u64) {
    let bx = config.bx;
    for colour in 0..2 {
        let sites: Vec<usize> = (0..bx.len())
            .filter(|&i| {
                let (x, y) = bx.site(i);
                ((x + y) & 1) as usize == colour
            })
            .collect();
        let snapshot = &*config;
        // Thread hand-off costs more than a small colour class.
        let mode = if sites.len() < PARALLEL_MIN_SITES { Exec::Sequential } else { chain.exec };
        let fresh = exec::map(mode, &sites, |&i| {
            let mut rng = site_rng(base, index, i);
            match chain.sampler {
                Sampler::HeatBath => heat_bath_site(snapshot, i, &chain.params, &mut rng),
                Sampler::Metropolis => metropolis_site(snapshot, i, &chain.params, chain.proposal_cap, &mut rng),
            }
        });
        for (i, h) in sites.into_iter().zip(fresh) {
            config.heights[i] = h;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservableSet {
    pub samples: u64,
    /// Fraction of sites at each height, up to the highest height seen.
    pub level_histogram: Vec<f64>,
    pub histogram_se: Vec<f64>,
    pub rho0: f64,
    pub rho0_se: f64,
    /// Fraction of sites at height at most `z`.
    pub rho_z: Vec<f64>,
    pub rho_z_se: Vec<f64>,
    pub majority_level: u32,
    pub not_at_n: f64,
    pub not_at_n_se: f64,
    /// Per-site frequency of height 0, row-major.
    pub site_rho0: Vec<f64>,
}

#[derive(Default)]
struct Accumulator {
    counts: Vec<u64>,
    batch_counts: Vec<Vec<u64>>,
    batch_samples: Vec<u64>,
    site_zero: Vec<u64>,
}

impl Accumulator {
    fn record(&mut self, heights: &[u32], batch: usize) {
        if self.site_zero.is_empty() {
            self.site_zero = vec![0; heights.len()];
        }
        for (i, &h) in heights.iter().enumerate() {
            let h = h as usize;
            if h >= self.counts.len() {
                self.counts.resize(h + 1, 0);
            }
            self.counts[h] += 1;
            let b = &mut self.batch_counts[batch];
            if h >= b.len() {
                b.resize(h + 1, 0);
            }
            b[h] += 1;
            if h == 0 {
                self.site_zero[i] += 1;
            }
        }
        self.batch_samples[batch] += 1;
    }

    fn finish(self, sites: usize, boundary: u32) -> ObservableSet {
        let levels = self.counts.len().max(boundary as usize + 1);
        let samples: u64 = self.batch_samples.iter().sum();
        let norm = (samples * sites as u64) as f64;
        let at = |v: &[u64], z: usize| v.get(z).copied().unwrap_or(0);
        let level_histogram: Vec<f64> = (0..levels).map(|z| at(&self.counts, z) as f64 / norm).collect();
        let mut running = 0u64;
        let rho_z: Vec<f64> = (0..levels)
            .map(|z| {
                running += at(&self.counts, z);
                running as f64 / norm
            })
            .collect();
        // Batch means of a per-batch statistic.
        let se = |f: &dyn Fn(&[u64]) -> u64| -> f64 {
            let means: Vec<f64> = self
                .batch_counts
                .iter()
                .zip(&self.batch_samples)
                .map(|(c, &n)| f(c) as f64 / (n * sites as u64) as f64)
                .collect();
            let b = means.len() as f64;
            let m = means.iter().sum::<f64>() / b;
            (means.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (b * (b - 1.0))).sqrt()
        };
        let histogram_se: Vec<f64> = (0..levels).map(|z| se(&|c| at(c, z))).collect();
        let rho_z_se: Vec<f64> = (0..levels).map(|z| se(&|c| (0..=z).map(|w| at(c, w)).sum())).collect();
        let mut majority = 0;
        for z in 0..levels {
            if level_histogram[z] > level_histogram[majority] {
                majority = z;
            }
        }
        let n = boundary as usize;
        ObservableSet {
            samples,
            rho0: level_histogram[0],
            rho0_se: histogram_se[0],
            not_at_n: 1.0 - level_histogram[n],
            not_at_n_se: histogram_se[n],
            majority_level: majority as u32,
            site_rho0: self.site_zero.iter().map(|&c| c as f64 / samples as f64).collect(),
            level_histogram,
            histogram_se,
            rho_z,
            rho_z_se,
        }
    }
}

pub fn run_chain(chain: &ChainConfig) -> Result<ObservableSet> {
    run_chain_with_dump(chain, None)
}

/// Run the chain from the flat configuration at the boundary level.
pub fn run_chain_with_dump(chain: &ChainConfig, mut dump: Option<&mut dyn Write>) -> Result<ObservableSet> {
    chain.validate()?;
    let base = base_rng(chain.seed);
    let mut config = HeightConfig::flat(chain.bx, chain.bx.boundary);
    let total = chain.samples();
    if let Some(w) = dump.as_deref_mut() {
        w.write_all(b"SOSWRAW1")?;
        for v in [chain.bx.width as u32, chain.bx.height as u32, chain.bx.boundary] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&total.to_le_bytes())?;
    }
    let mut acc = Accumulator {
        batch_counts: vec![Vec::new(); chain.batches],
        batch_samples: vec![0; chain.batches],
        ..Default::default()
    };
    let mut taken = 0u64;
    for s in 0..chain.sweeps {
        sweep(&mut config, chain, &base, s);
        if s >= chain.burn_in && (s - chain.burn_in).is_multiple_of(chain.thin) {
            let batch = (taken as u128 * chain.batches as u128 / total as u128) as usize;
            acc.record(&config.heights, batch);
            if let Some(w) = dump.as_deref_mut() {
                for h in &config.heights {
                    w.write_all(&h.to_le_bytes())?;
                }
            }
            taken += 1;
        }
    }
    debug_assert_eq!(taken, total);
    Ok(acc.finish(chain.bx.len(), chain.bx.boundary))
}

pub const CSV_HEADER: &str =
    "t,u,beta,J,K,n_boundary,L,sweeps,seed,rho0,rho0_se,majority_level,not_at_n,not_at_n_se,rho_z";

/// One CSV row; `rho_z` is a `;`-separated list over `z = 0, 1, ...`.
pub fn csv_row(chain: &ChainConfig, obs: &ObservableSet) -> String {
    let p = &chain.params;
    let l = if chain.bx.width == chain.bx.height {
        chain.bx.width.to_string()
    } else {
        format!("{}x{}", chain.bx.width, chain.bx.height)
    };
    let rho: Vec<String> = obs.rho_z.iter().map(|r| r.to_string()).collect();
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        p.t(),
        p.u(),
        p.beta(),
        p.j(),
        p.k(),
        chain.bx.boundary,
        l,
        chain.sweeps,
        chain.seed,
        obs.rho0,
        obs.rho0_se,
        obs.majority_level,
        obs.not_at_n,
        obs.not_at_n_se,
        rho.join(";")
    )
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LowerBoundCheck {
    pub bound: f64,
    pub rho0: f64,
    pub in_window: bool,
    /// The chain sits at level `n` with a usable error bar.
    pub converged: bool,
    pub holds: bool,
}

/// Compare the estimated `rho0` with `t^{2n}/2`.
pub fn rho_lower_bound_check(n: u32, params: &ModelParams, epsilon: f64, obs: &ObservableSet) -> Result<LowerBoundCheck> {
    let windows = layering_windows(params.t(), epsilon, n)?;
    let (_, lo, hi) = windows[n as usize];
    let bound = 0.5 * params.t().powi(2 * n as i32);
    let converged = obs.majority_level == n && obs.rho0_se < 0.25 * obs.rho0.max(bound);
    Ok(LowerBoundCheck {
        bound,
        rho0: obs.rho0,
        in_window: params.u() > lo && params.u() < hi,
        converged,
        holds: obs.rho0 >= bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_is_geometric() {
        let p = ModelParams::from_tu(0.5, 0.0, 1.0).unwrap();
        let mut rng = base_rng(3);
        let nbrs = [0u32; 4];
        let n = 200_000;
        let mut counts = [0u32; 8];
        for _ in 0..n {
            let h = heat_bath_draw(&nbrs, &p, &mut rng) as usize;
            if h < 8 {
                counts[h] += 1;
            }
        }
        // Weights t^{2h} for u = 0.
        let z = 1.0 / (1.0 - 0.25);
        for (h, &c) in counts.iter().enumerate().take(4) {
            let pr = 0.25f64.powi(h as i32) / z;
            let sd = (pr * (1.0 - pr) / n as f64).sqrt();
            assert!((c as f64 / n as f64 - pr).abs() < 5.0 * sd, "h={h}");
        }
    }

    #[test]
    fn streams_are_positional() {
        let base = base_rng(11);
        let a: u64 = site_rng(&base, 5, 2).gen();
        let b: u64 = site_rng(&base, 5, 2).gen();
        let c: u64 = site_rng(&base, 5, 3).gen();
        let d: u64 = site_rng(&base, 6, 2).gen();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }
}
