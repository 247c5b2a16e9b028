//! Truncated series in `t` and `e^u` with exact rational coefficients, plus a
//! separate coefficient for a bare `u` term.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Key `(2p, q)` for the monomial `t^p e^{q u}`.
pub type Mono = (u32, i32);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LaurentSeries {
    /// Terms with `p <= order`.
    pub order: u32,
    terms: BTreeMap<Mono, BigRational>,
    linear_u: BigRational,
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl LaurentSeries {
    pub fn zero(order: u32) -> Self {
        LaurentSeries { order, terms: BTreeMap::new(), linear_u: BigRational::zero() }
    }

    pub fn one(order: u32) -> Self {
        let mut s = Self::zero(order);
        s.add_term(0, 0, BigRational::one());
        s
    }

    /// Add `c t^p e^{qu}`; terms beyond the order are dropped.
    pub fn add_term(&mut self, p: u32, q: i32, c: BigRational) {
        self.add_term2(2 * p, q, c)
    }

    pub fn add_term2(&mut self, two_p: u32, q: i32, c: BigRational) {
        if two_p > 2 * self.order || c.is_zero() {
            return;
        }
        let e = self.terms.entry((two_p, q)).or_insert_with(BigRational::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&(two_p, q));
        }
    }

    pub fn add_linear_u(&mut self, c: BigRational) {
        self.linear_u += c;
    }

    pub fn linear_u(&self) -> &BigRational {
        &self.linear_u
    }

    /// Coefficient of `t^p e^{qu}`.
    pub fn coeff(&self, p: u32, q: i32) -> BigRational {
        self.terms.get(&(2 * p, q)).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &BigRational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.linear_u.is_zero()
    }

    pub fn is_empty(&self) -> bool {
        self.is_zero()
    }

    /// Lowest power `p` with a nonzero term.
    pub fn min_power(&self) -> Option<u32> {
        self.terms.keys().map(|k| k.0 / 2).min()
    }

    /// Coefficients at `t^p` as a map `q -> c`.
    pub fn at_power(&self, p: u32) -> BTreeMap<i32, BigRational> {
        self.terms.range((2 * p, i32::MIN)..=(2 * p, i32::MAX)).map(|(k, v)| (k.1, v.clone())).collect()
    }

    pub fn truncate(&self, order: u32) -> Self {
        let mut s = Self::zero(order.min(self.order));
        for (k, v) in &self.terms {
            s.add_term2(k.0, k.1, v.clone());
        }
        s.linear_u = self.linear_u.clone();
        s
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        let mut s = Self::zero(self.order);
        for (k, v) in &self.terms {
            s.add_term2(k.0, k.1, v * c);
        }
        s.linear_u = &self.linear_u * c;
        s
    }

    pub fn neg(&self) -> Self {
        self.scale(&-BigRational::one())
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut s = self.truncate(self.order.min(o.order));
        for (k, v) in &o.terms {
            s.add_term2(k.0, k.1, v.clone());
        }
        s.linear_u += &o.linear_u;
        s
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    /// Truncated product; the bare `u` parts must vanish.
    pub fn mul(&self, o: &Self) -> Self {
        assert!(self.linear_u.is_zero() && o.linear_u.is_zero(), "product of series with a bare u term");
        let order = self.order.min(o.order);
        let mut s = Self::zero(order);
        for (a, x) in &self.terms {
            for (b, y) in &o.terms {
                s.add_term2(a.0 + b.0, a.1 + b.1, x * y);
            }
        }
        s
    }

    /// `log(self)` for a series with constant term 1 and no bare `u`.
    pub fn ln(&self) -> Result<Self> {
        if self.coeff(0, 0) != BigRational::one() || self.terms.keys().any(|k| k.0 == 0 && k.1 != 0) {
            return Err(Error::TemplateMismatch("logarithm needs constant term 1".into()));
        }
        let mut x = self.clone();
        x.terms.remove(&(0, 0));
        let mut out = Self::zero(self.order);
        let mut pow = Self::one(self.order);
        let mut k = 1i64;
        loop {
            pow = pow.mul(&x);
            if pow.terms.is_empty() {
                break;
            }
            let sign = if k % 2 == 1 { 1 } else { -1 };
            out = out.add(&pow.scale(&rat(sign, k)));
            k += 1;
        }
        Ok(out)
    }

    /// Numerical value at `(t, u)`. Each power of `t` is summed as
    /// `sum c + sum c (e^{qu} - 1)` so near-cancelling groups stay accurate.
    pub fn eval(&self, t: f64, u: f64) -> f64 {
        let mut total = self.linear_u.to_f64().unwrap_or(f64::NAN) * u;
        let mut by_p: BTreeMap<u32, (BigRational, f64)> = BTreeMap::new();
        for (k, v) in &self.terms {
            let e = by_p.entry(k.0).or_insert_with(|| (BigRational::zero(), 0.0));
            e.0 += v;
            e.1 += v.to_f64().unwrap_or(f64::NAN) * (k.1 as f64 * u).exp_m1();
        }
        for (two_p, (c, d)) in by_p.into_iter().rev() {
            total += t.powf(two_p as f64 / 2.0) * (c.to_f64().unwrap_or(f64::NAN) + d);
        }
        total
    }

    /// One line per term, `2p q numerator denominator`, sorted; the bare
    /// `u` coefficient is written with `u` in place of `q`.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        if !self.linear_u.is_zero() {
            s.push_str(&format!("0 u {} {}\n", self.linear_u.numer(), self.linear_u.denom()));
        }
        for (k, v) in &self.terms {
            s.push_str(&format!("{} {} {} {}\n", k.0, k.1, v.numer(), v.denom()));
        }
        s
    }

    pub fn parse_dump(order: u32, text: &str) -> Result<Self> {
        let mut s = Self::zero(order);
        for (i, line) in text.lines().enumerate() {
            let f: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::Spec(format!("series line {}: {line:?}", i + 1));
            if f.is_empty() {
                continue;
            }
            if f.len() != 4 {
                return Err(bad());
            }
            let n: BigInt = f[2].parse().map_err(|_| bad())?;
            let d: BigInt = f[3].parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            let c = BigRational::new(n, d);
            if f[1] == "u" {
                s.linear_u += c;
            } else {
                let two_p: u32 = f[0].parse().map_err(|_| bad())?;
                let q: i32 = f[1].parse().map_err(|_| bad())?;
                s.add_term2(two_p, q, c);
            }
        }
        Ok(s)
    }
}

impl fmt::Display for LaurentSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        let mut put = |f: &mut fmt::Formatter<'_>, c: &BigRational, body: String| -> fmt::Result {
            let neg = c.is_negative();
            let a = c.abs();
            let sign = match (first, neg) {
                (true, true) => "-",
                (true, false) => "",
                (false, true) => " - ",
                (false, false) => " + ",
            };
            first = false;
            if body.is_empty() {
                write!(f, "{sign}{a}")
            } else if a.is_one() {
                write!(f, "{sign}{body}")
            } else {
                write!(f, "{sign}{a}*{body}")
            }
        };
        if !self.linear_u.is_zero() {
            put(f, &self.linear_u, "u".into())?;
        }
        for (k, v) in &self.terms {
            let mut body = Vec::new();
            if k.0 != 0 {
                body.push(if k.0 % 2 == 0 { format!("t^{}", k.0 / 2) } else { format!("t^({}/2)", k.0) });
            }
            if k.1 != 0 {
                body.push(format!("e^({}u)", k.1));
            }
            put(f, v, body.join("*"))?;
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, " + O(t^{})", self.order + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_round_trip_and_eval() {
        let mut s = LaurentSeries::zero(4);
        s.add_linear_u(rat(-1, 1));
        s.add_term(2, -1, rat(-1, 1));
        s.add_term(3, 2, rat(5, 2));
        s.add_term(5, 0, rat(1, 1));
        assert_eq!(s.len(), 2);
        let text = s.dump();
        assert_eq!(text, "0 u -1 1\n4 -1 -1 1\n6 2 5 2\n");
        assert_eq!(LaurentSeries::parse_dump(4, &text).unwrap(), s);
        let (t, u) = (0.1f64, 0.3f64);
        let want = -u - t * t * (-u).exp() + 2.5 * t.powi(3) * (2.0 * u).exp();
        assert!((s.eval(t, u) - want).abs() < 1e-15);
    }

    #[test]
    fn log_of_exp() {
        // log(1 + x) with x = t^2 e^u: x - x^2/2 + ...
        let mut z = LaurentSeries::one(6);
        z.add_term(2, 1, rat(1, 1));
        let l = z.ln().unwrap();
        assert_eq!(l.coeff(2, 1), rat(1, 1));
        assert_eq!(l.coeff(4, 2), rat(-1, 2));
        assert_eq!(l.coeff(6, 3), rat(1, 3));
        assert_eq!(l.len(), 3);
    }
}
