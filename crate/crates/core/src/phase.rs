//! Chalker's wetting criteria, layer windows and series dominance on grids.

use crate::dominance::{dominant_level, layering_windows, SeriesBook};
use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::params::{t1, ModelParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Chalker {
    Partial,
    Complete,
    Unresolved,
}

impl Chalker {
    pub fn label(self) -> &'static str {
        match self {
            Chalker::Partial => "partial_wetting_chalker",
            Chalker::Complete => "complete_wetting_chalker",
            Chalker::Unresolved => "unresolved",
        }
    }
}

/// Thresholds on `u = 2 beta (J - K)`: above the first the wall is partially
/// wet, below the second completely wet.
pub fn chalker_thresholds(j: f64, beta: f64) -> Result<(f64, f64)> {
    if !(j > 0.0) || !(beta > 0.0) {
        return Err(Error::ParamsInvalid(format!("J={j}, beta={beta}")));
    }
    let x = (-2.0 * beta * j).exp();
    let partial = -((1.0 - x) / (16.0 * (1.0 + x))).ln();
    let complete = -(-(-8.0 * beta * j).exp()).ln_1p();
    Ok((partial, complete))
}

pub fn chalker_classify(j: f64, k: f64, beta: f64) -> Result<Chalker> {
    let (partial, complete) = chalker_thresholds(j, beta)?;
    let u = 2.0 * beta * (j - k);
    Ok(if u > partial {
        Chalker::Partial
    } else if u < complete {
        Chalker::Complete
    } else {
        Chalker::Unresolved
    })
}

/// `K` on the partial-wetting curve at inverse temperature `beta`.
pub fn partial_boundary_k(j: f64, beta: f64) -> Result<f64> {
    let (partial, _) = chalker_thresholds(j, beta)?;
    Ok(j - partial / (2.0 * beta))
}

/// `K` on the complete-wetting curve.
pub fn complete_boundary_k(j: f64, beta: f64) -> Result<f64> {
    let (_, complete) = chalker_thresholds(j, beta)?;
    Ok(j - complete / (2.0 * beta))
}

/// Least-squares slope `dK / d(1/beta)` of the partial-wetting curve over the
/// given temperatures.
pub fn partial_boundary_slope(j: f64, beta_invs: &[f64]) -> Result<f64> {
    if beta_invs.len() < 2 {
        return Err(Error::ParamsInvalid("need at least two temperatures".into()));
    }
    let ks: Vec<f64> = beta_invs.iter().map(|&b| partial_boundary_k(j, 1.0 / b)).collect::<Result<_>>()?;
    let n = beta_invs.len() as f64;
    let mx = beta_invs.iter().sum::<f64>() / n;
    let my = ks.iter().sum::<f64>() / n;
    let sxy: f64 = beta_invs.iter().zip(&ks).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = beta_invs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// Inclusive evenly spaced grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.lo],
            n => (0..n).map(|i| self.lo + (self.hi - self.lo) * i as f64 / (n - 1) as f64).collect(),
        }
    }
}

impl std::str::FromStr for Grid {
    type Err = Error;
    /// `lo:hi:count`
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let bad = || Error::Spec(format!("grid {s:?} is not lo:hi:count"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo: f64 = parts[0].parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].parse().map_err(|_| bad())?;
        let count: usize = parts[2].parse().map_err(|_| bad())?;
        if !lo.is_finite() || !hi.is_finite() {
            return Err(bad());
        }
        Ok(Grid { lo, hi, count })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Axes {
    /// Coupling `K` against temperature `1/beta`, at fixed `J`.
    Physical { k: Grid, beta_inv: Grid },
    Series { t: Grid, u: Grid },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanSpec {
    pub j: f64,
    pub axes: Axes,
    pub epsilon: f64,
    /// Highest window and highest level compared.
    pub n_max: u32,
    pub k: u32,
    pub order: u32,
}

impl Default for ScanSpec {
    fn default() -> Self {
        let empty = Grid { lo: 0.0, hi: 0.0, count: 0 };
        ScanSpec { j: 1.0, axes: Axes::Series { t: empty, u: empty }, epsilon: 0.5, n_max: 3, k: 8, order: 6 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhasePoint {
    pub k: f64,
    pub beta_inv: f64,
    pub j: f64,
    pub t: f64,
    pub u: f64,
    pub chalker: Chalker,
    /// Layer window containing `u`, if any.
    pub window: Option<u32>,
    pub dominant: Option<u32>,
    pub margin: f64,
    pub flag: &'static str,
}

pub const SCAN_HEADER: &str = "K,beta_inv,J,t,u,chalker,window,dominant_level,margin,flag";

impl PhasePoint {
    pub fn csv(&self) -> String {
        let opt = |v: Option<u32>| v.map(|n| n.to_string()).unwrap_or_else(|| "-".into());
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.k,
            self.beta_inv,
            self.j,
            self.t,
            self.u,
            self.chalker.label(),
            self.window.map(|n| format!("layer_{n}")).unwrap_or_else(|| "-".into()),
            opt(self.dominant),
            self.margin,
            self.flag
        )
    }
}

fn window_of(t: f64, u: f64, epsilon: f64, n_max: u32) -> Result<Option<u32>> {
    Ok(layering_windows(t, epsilon, n_max)?.into_iter().find(|&(_, lo, hi)| u > lo && u < hi).map(|w| w.0))
}

/// Classify one node.
pub fn classify(params: &ModelParams, spec: &ScanSpec, book: &SeriesBook) -> Result<PhasePoint> {
    let (t, u) = (params.t(), params.u());
    let chalker = chalker_classify(params.j(), params.k(), params.beta())?;
    let window = window_of(t, u, spec.epsilon, spec.n_max)?;
    let (dominant, margin, trusted) = match dominant_level(params, book, spec.n_max) {
        Ok(d) => (Some(d.level), d.min_margin, !d.beyond_t1 && !d.near_tie),
        Err(Error::ParamsOutOfRange(_)) => (None, f64::NAN, false),
        Err(e) => return Err(e),
    };
    let flag = if dominant.is_none() {
        "series_out_of_range"
    } else if !trusted {
        "beyond_t1"
    } else if chalker == Chalker::Complete && margin > 0.0 {
        "complete_vs_series"
    } else if matches!(window, Some(n) if Some(n) != dominant && t < t1(spec.k) / 2.0) {
        "window_vs_series"
    } else {
        "ok"
    };
    Ok(PhasePoint {
        k: params.k(),
        beta_inv: 1.0 / params.beta(),
        j: params.j(),
        t,
        u,
        chalker,
        window,
        dominant,
        margin,
        flag,
    })
}

/// Classify every grid node; rows come back sorted by `(t, u)`.
pub fn scan(spec: &ScanSpec, book: &SeriesBook, exec: Exec) -> Result<Vec<PhasePoint>> {
    let mut nodes = Vec::new();
    match spec.axes {
        Axes::Physical { k, beta_inv } => {
            for b in beta_inv.points() {
                for kk in k.points() {
                    nodes.push(ModelParams::from_physical(spec.j, kk, 1.0 / b)?);
                }
            }
        }
        Axes::Series { t, u } => {
            for tt in t.points() {
                for uu in u.points() {
                    nodes.push(ModelParams::from_tu(tt, uu, spec.j)?);
                }
            }
        }
    }
    if nodes.is_empty() {
        return Ok(Vec::new());
    }
    // Build the series once before fanning out.
    for h in 0..=spec.n_max {
        book.free_energy(h)?;
    }
    let mut rows = exec::map(exec, &nodes, |p| classify(p, spec, book)).into_iter().collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.u.total_cmp(&b.u)));
    Ok(rows)
}

pub fn scan_csv(rows: &[PhasePoint]) -> String {
    let mut out = String::from(SCAN_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_equal_j_is_complete() {
        for beta in [0.1, 1.0, 10.0] {
            assert_eq!(chalker_classify(1.0, 1.0, beta).unwrap(), Chalker::Complete);
        }
        assert!(chalker_classify(1.0, 0.0, 0.0).is_err());
        assert!(chalker_classify(-1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn grid_parse() {
        let g: Grid = "0:1:5".parse().unwrap();
        assert_eq!(g.points(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!("0:1".parse::<Grid>().is_err());
        assert!("0:1:x".parse::<Grid>().is_err());
    }
}
