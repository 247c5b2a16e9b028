//! Model parameters. The canonical internal form is `(t, u)` with the
//! coupling `J` carried along so that `(beta, K)` can be recovered.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    t: f64,
    u: f64,
    j: f64,
}

impl ModelParams {
    /// Build from the physical couplings.
    pub fn from_physical(j: f64, k: f64, beta: f64) -> Result<Self> {
        if !(j > 0.0) || !(beta > 0.0) || !k.is_finite() {
            return Err(Error::ParamsInvalid(format!("J={j}, K={k}, beta={beta}")));
        }
        let t = (-4.0 * beta * j).exp();
        let u = 2.0 * beta * (j - k);
        Self::from_tu(t, u, j)
    }

    /// Build from the series variables with a given coupling `J`.
    pub fn from_tu(t: f64, u: f64, j: f64) -> Result<Self> {
        if !(t > 0.0 && t < 1.0) || !u.is_finite() || !(j > 0.0) {
            return Err(Error::ParamsInvalid(format!("t={t}, u={u}, J={j}")));
        }
        Ok(ModelParams { t, u, j })
    }

    pub fn t(&self) -> f64 {
        self.t
    }
    pub fn u(&self) -> f64 {
        self.u
    }
    pub fn j(&self) -> f64 {
        self.j
    }
    pub fn beta(&self) -> f64 {
        -self.t.ln() / (4.0 * self.j)
    }
    pub fn k(&self) -> f64 {
        self.j - self.u / (2.0 * self.beta())
    }
    /// `2 beta J`, the cost of one unit of height difference across a bond.
    pub fn bond_cost(&self) -> f64 {
        -0.5 * self.t.ln()
    }
    /// Weight parameter of the majorant, `s = t exp(t^{1/4})`.
    pub fn s(&self) -> f64 {
        s_of(self.t)
    }
}

pub fn s_of(t: f64) -> f64 {
    t * t.powf(0.25).exp()
}

/// Convergence threshold `(3k+3)^{-4}` of the restricted ensembles.
pub fn t1(k: u32) -> f64 {
    (3.0 * k as f64 + 3.0).powi(-4)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_tu() {
        for &(t, u) in &[(0.1, 0.3), (1e-3, -0.2), (0.5, 2.0), (1e-6, 1e-9)] {
            let p = ModelParams::from_tu(t, u, 1.3).unwrap();
            let q = ModelParams::from_physical(p.j(), p.k(), p.beta()).unwrap();
            assert!(((q.t() - t) / t).abs() < 1e-12);
            assert!((q.u() - u).abs() <= 1e-12 * u.abs().max(1e-300) + 1e-15);
            assert!(p.s() > p.t());
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ModelParams::from_physical(0.0, 0.0, 1.0).is_err());
        assert!(ModelParams::from_physical(1.0, 0.0, -1.0).is_err());
        assert!(ModelParams::from_tu(1.0, 0.0, 1.0).is_err());
    }
}
