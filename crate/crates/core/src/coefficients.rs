//! Named coefficients of the layer free-energy differences and their check
//! against the published values.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::catalog::{Catalog, CatalogKey, Perturbation};
use crate::cluster;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::series::{rat, LaurentSeries};

/// Unit or domino base.
fn base_is(p: &Perturbation, area: usize) -> bool {
    match area {
        1 => p.sites.len() == 1,
        2 => p.sites.len() == 2 && (p.sites[1] == (1, 0) || p.sites[1] == (0, 1)),
        _ => false,
    }
}

/// One cylinder from the level straight down to the wall.
pub fn is_column(p: &Perturbation, area: usize) -> bool {
    let c = p.cylinders();
    c.len() == 1 && base_is(p, area) && c.cylinders[0].i == 0
}

/// A domino step from the level down to 1 holding a unit pit down to 0.
pub fn is_domino_with_pit(p: &Perturbation) -> bool {
    let c = p.cylinders();
    c.len() == 2
        && base_is(p, 2)
        && c.cylinders[0].i == 1
        && c.cylinders[1].base.area() == 1
        && (c.cylinders[1].e, c.cylinders[1].i) == (1, 0)
}

/// Wall contact of `wall` sites at order `order`, the external cylinder
/// stopping above the wall.
pub fn is_stepped(p: &Perturbation, order: u32, wall: i32) -> bool {
    p.order == order && p.wall == wall && p.external().i > 0
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    Match,
    Mismatch,
    NotComputed,
}

#[derive(Clone, Debug)]
pub struct Row {
    pub name: String,
    pub expected: BigRational,
    pub computed: Option<BigRational>,
    pub needs_order: u32,
}

impl Row {
    pub fn status(&self) -> Status {
        match &self.computed {
            None => Status::NotComputed,
            Some(v) if *v == self.expected => Status::Match,
            Some(_) => Status::Mismatch,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Report {
    pub k: u32,
    pub n_max: u32,
    pub rows: Vec<Row>,
}

impl Report {
    /// 0 when everything matches, 1 on any mismatch, 2 when something
    /// could not be computed at this order.
    pub fn exit_code(&self) -> i32 {
        if self.rows.iter().any(|r| r.status() == Status::Mismatch) {
            1
        } else if self.rows.iter().any(|r| r.status() == Status::NotComputed) {
            2
        } else {
            0
        }
    }

    pub fn get(&self, name: &str) -> Option<&Row> {
        self.rows.iter().find(|r| r.name == name)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "coefficients at k={} N={}", self.k, self.n_max)?;
        writeln!(f, "{:<10} {:>8} {:>8}  status", "name", "expected", "computed")?;
        for r in &self.rows {
            let (c, s) = match (r.status(), &r.computed) {
                (Status::NotComputed, _) => ("-".to_string(), format!("NOT-COMPUTED (needs N>={})", r.needs_order)),
                (Status::Match, Some(v)) => (v.to_string(), "ok".to_string()),
                (_, Some(v)) => (v.to_string(), "FAIL".to_string()),
                _ => unreachable!(),
            };
            writeln!(f, "{:<10} {:>8} {:>8}  {}", r.name, r.expected.to_string(), c, s)?;
        }
        Ok(())
    }
}

/// Anything that can produce a catalog for a key.
pub type CatalogSource<'a> = dyn Fn(CatalogKey) -> Result<Catalog> + 'a;

pub fn build_source(exec: Exec) -> impl Fn(CatalogKey) -> Result<Catalog> {
    move |key| Catalog::build(key, exec)
}

/// `S_h`: the cluster sum at level `h`.
pub fn level_sum(cat: &Catalog, exec: Exec) -> Result<LaurentSeries> {
    cluster::cluster_sum(&cat.footprints, cat.key.n_max, exec)
}

fn int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Compare the computed coefficients with the published ones. Series
/// coefficients need `n_max` at least their order; the counts at level 3
/// use a catalog of their own order.
pub fn verify_coefficients(k: u32, n_max: u32, source: &CatalogSource, exec: Exec) -> Result<Report> {
    let mut rows = Vec::new();
    let mut push = |name: &str, expected: BigRational, needs: u32, v: Option<BigRational>| {
        rows.push(Row { name: name.to_string(), expected, needs_order: needs, computed: v });
    };
    let (s1, s2, c1, c2) = if n_max >= 2 {
        let c1 = source(CatalogKey::new(k, 1, n_max))?;
        let c2 = source(CatalogKey::new(k, 2, n_max))?;
        (Some(level_sum(&c1, exec)?), Some(level_sum(&c2, exec)?), Some(c1), Some(c2))
    } else {
        (None, None, None, None)
    };
    let coeff = |s: &Option<LaurentSeries>, p: u32, q: i32| -> Option<BigRational> {
        if p <= n_max {
            s.as_ref().map(|s| s.coeff(p, q))
        } else {
            None
        }
    };
    let count = |c: &Option<Catalog>, order: u32, f: &dyn Fn(&Perturbation) -> bool| -> Option<BigRational> {
        if order <= n_max {
            c.as_ref().map(|c| int(c.count_where(f)))
        } else {
            None
        }
    };
    let c3 = source(CatalogKey::new(k, 3, 9))?;
    push("A", int(1), 4, coeff(&s2, 4, 1));
    push("C", int(2), 6, coeff(&s2, 6, 2));
    push("E", int(1), 0, Some(int(c3.count_where(|p| p.order == 6 && is_column(p, 1)))));
    push("I", int(2), 0, Some(int(c3.count_where(|p| p.order == 9 && is_column(p, 2)))));
    push("G", int(4), 0, Some(int(c3.count_where(|p| p.order == 8 && is_domino_with_pit(p)))));
    push("B1(h=2)", int(4), 5, count(&c2, 5, &|p| is_stepped(p, 5, 1)));
    push("D1(h=2)", int(16), 7, count(&c2, 7, &|p| is_stepped(p, 7, 2)));
    push("B1(h=1)", int(0), 3, count(&c1, 3, &|p| is_stepped(p, 3, 1)));
    push("D1(h=1)", int(0), 4, count(&c1, 4, &|p| is_stepped(p, 4, 2)));
    push("L43(1)", int(6), 4, coeff(&s1, 4, 3));
    push("L44(1)", int(1), 4, coeff(&s1, 4, 4));
    push("L42(1)", rat(-5, 2), 4, coeff(&s1, 4, 2));
    Ok(Report { k, n_max, rows })
}

/// Coefficients of `e^{qu}` in `s` as a series in `t`.
pub fn wall_part(s: &LaurentSeries, q: i32) -> LaurentSeries {
    let mut out = LaurentSeries::zero(s.order);
    for (&(two_p, qq), c) in s.terms() {
        if qq == q {
            out.add_term2(two_p, 0, c.clone());
        }
    }
    out
}

fn mono(order: u32, p: u32, q: i32, c: BigRational) -> LaurentSeries {
    let mut s = LaurentSeries::zero(order);
    s.add_term(p, q, c);
    s
}

/// `x * (e^{mu} - 1 - m t^2 e^u)`.
fn layer_factor(x: &LaurentSeries, m: i32) -> LaurentSeries {
    let n = x.order;
    let mut f = LaurentSeries::zero(n);
    f.add_term(0, m, int(1));
    f.add_term(0, 0, int(-1));
    f.add_term(2, 1, int(-(m as i64)));
    x.mul(&f)
}

#[derive(Clone, Debug)]
pub struct TemplateReport {
    pub h: u32,
    pub difference: LaurentSeries,
    pub template: LaurentSeries,
    /// `difference - template`, truncated below the error order.
    pub residual: LaurentSeries,
    /// `(j, m, L_jm)` read off the residual.
    pub l_table: Vec<(u32, i32, BigRational)>,
    pub p_h: LaurentSeries,
    pub q_h: LaurentSeries,
}

/// Match `f(h+1) - f(h)` from level sums `s_h`, `s_h1` (both truncated at
/// `3h+3`) to the layered template. Whatever remains below `t^{3h+4}` must
/// be of the form `sum L_jm t^j (e^{mu} - 1)` with `m >= 2` and
/// `j` in `{3h+2, 3h+3}`, or also `j = 4` when `h = 1`, where those
/// `t^4` terms carry their own layer factor.
pub fn template_check(h: u32, s_h: &LaurentSeries, s_h1: &LaurentSeries) -> Result<TemplateReport> {
    if h == 0 {
        return Err(Error::TemplateMismatch("the template starts at level 1".into()));
    }
    let n = 3 * h + 3;
    if s_h.order < n || s_h1.order < n {
        return Err(Error::OrderTooLarge(format!("template at level {h} needs order {n}")));
    }
    let s_h = s_h.truncate(n);
    let s_h1 = s_h1.truncate(n);
    let diff = s_h.sub(&s_h1);
    let p_h = wall_part(&s_h, 1).sub(&mono(n, 2 * h, 0, int(1)));
    let mut q_h = wall_part(&s_h, 2).sub(&mono(n, 3 * h, 0, int(2)));
    let mut template = LaurentSeries::zero(n);
    if h == 1 {
        // L_{4m}(1) terms, including m = 2, come with their own layer factor.
        q_h = q_h.sub(&mono(n, 4, 0, q_h.coeff(4, 0)));
        for m in 2..=4 {
            let l = s_h.coeff(4, m);
            template = template.add(&layer_factor(&mono(n, 4, 0, l), m));
        }
    }
    let lead_p = mono(n, 2 * h, 0, int(1)).add(&p_h);
    let lead_q = mono(n, 3 * h, 0, int(2)).add(&q_h);
    template = template.add(&layer_factor(&lead_p, 1)).add(&layer_factor(&lead_q, 2));
    template = template.sub(&mono(n, 3 * h + 3, 2, int(2)));
    let residual = diff.sub(&template);
    let mut l_table = Vec::new();
    for p in 0..=n {
        let at = residual.at_power(p);
        if at.is_empty() {
            continue;
        }
        if p < 3 * h + 2 {
            return Err(Error::TemplateMismatch(format!("unexplained terms at t^{p}: {at:?}")));
        }
        let mut sum = BigRational::zero();
        for (&q, c) in &at {
            if q == 0 {
                continue;
            }
            if q < 2 {
                return Err(Error::TemplateMismatch(format!("t^{p} e^({q}u) with coefficient {c}")));
            }
            if (q as u64) * 4 * (h as u64).pow(2) > (p as u64).pow(2) {
                return Err(Error::TemplateMismatch(format!("t^{p} e^({q}u) exceeds the isoperimetric bound")));
            }
            sum += c;
            l_table.push((p, q, c.clone()));
        }
        let c0 = at.get(&0).cloned().unwrap_or_else(BigRational::zero);
        if c0 + sum != BigRational::zero() {
            return Err(Error::TemplateMismatch(format!("t^{p} terms do not vanish at u=0")));
        }
    }
    Ok(TemplateReport { h, difference: diff, template, residual, l_table, p_h, q_h })
}
