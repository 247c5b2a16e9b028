//! Large cylinders grouped into contours, their supports, and the contour
//! weight in its two equivalent forms.

use std::collections::BTreeMap;
use std::sync::Mutex;

use rustc_hash::FxHashSet;

use crate::catalog::{Catalog, CatalogKey, Perturbation};
use crate::cylinder::{delta, Cylinder, CylinderSet};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geom::{self, Site};
use crate::params::ModelParams;

/// Default bound on the number of sites in a region whose `Z*` is enumerated.
pub const REGION_CAP: usize = 30;

/// `(large, elementary)` parts of a cylinder set.
pub fn split_large(set: &CylinderSet, k: u32) -> (CylinderSet, CylinderSet) {
    let (el, large): (Vec<Cylinder>, Vec<Cylinder>) = set.cylinders.iter().cloned().partition(|c| c.is_elementary(k));
    let large = CylinderSet::new(set.level, large);
    debug_assert!(set.first_conflict().is_some() || large.first_conflict().is_none());
    (large, CylinderSet::new(set.level, el))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Contour {
    pub level: u32,
    pub ext: Cylinder,
    /// Cylinders neither external nor returning to the level.
    pub mids: Vec<Cylinder>,
    /// Cylinders whose interior is back at the level.
    pub ints: Vec<Cylinder>,
}

fn strictly_inside(a: &Cylinder, b: &Cylinder) -> bool {
    a.base != b.base && a.base.subset_of(&b.base)
}

impl Contour {
    pub fn cylinders(&self) -> impl Iterator<Item = &Cylinder> {
        std::iter::once(&self.ext).chain(self.mids.iter()).chain(self.ints.iter())
    }

    /// Twice the number of half vertical plaquettes, `sum L |perimeter|`.
    pub fn norm2(&self) -> u32 {
        self.cylinders().map(|c| c.monomial().0).sum()
    }

    /// Maximal contour cylinders strictly inside `c`.
    pub fn children(&self, c: &Cylinder) -> Vec<&Cylinder> {
        let inside: Vec<&Cylinder> = self.cylinders().filter(|d| strictly_inside(d, c)).collect();
        inside.iter().copied().filter(|d| !inside.iter().any(|e| strictly_inside(d, e))).collect()
    }

    fn minus(base: &Cylinder, holes: &[&Cylinder]) -> Vec<Site> {
        let cut: FxHashSet<Site> = holes.iter().flat_map(|h| h.base.sites().iter().copied()).collect();
        base.base.sites().iter().copied().filter(|s| !cut.contains(s)).collect()
    }

    pub fn support(&self) -> Vec<Site> {
        Self::minus(&self.ext, &self.ints.iter().collect::<Vec<_>>())
    }

    pub fn support_ext(&self) -> Vec<Site> {
        Self::minus(&self.ext, &self.children(&self.ext))
    }

    pub fn support_mid(&self, i: usize) -> Vec<Site> {
        let c = &self.mids[i];
        Self::minus(c, &self.children(c))
    }

    pub fn check(&self) -> Result<()> {
        if self.ext.e != self.level || self.ints.iter().any(|c| c.i != self.level) {
            return Err(Error::NotLargeSet("contour levels".into()));
        }
        if self.mids.iter().chain(&self.ints).any(|c| c.e == self.level || !strictly_inside(c, &self.ext)) {
            return Err(Error::NotLargeSet("non-external cylinder at the contour level".into()));
        }
        let mut parts: Vec<Site> = self.support_ext();
        for i in 0..self.mids.len() {
            parts.extend(self.support_mid(i));
        }
        parts.sort_unstable();
        let n = parts.len();
        parts.dedup();
        let mut supp = self.support();
        supp.sort_unstable();
        if parts.len() != n || parts != supp {
            return Err(Error::NotLargeSet("supports do not partition".into()));
        }
        Ok(())
    }
}

/// Group each external large cylinder with its descendants, stopping at
/// cylinders that return to the level; those start new contours below.
pub fn contour_decompose(large: &CylinderSet, k: u32) -> Result<Vec<Contour>> {
    if let Some(c) = large.cylinders.iter().find(|c| c.is_elementary(k)) {
        return Err(Error::NotLargeSet(format!("elementary cylinder with diameter {}", c.base.diameter())));
    }
    let cyl = &large.cylinders;
    let parent = |i: usize| -> Option<usize> {
        (0..cyl.len())
            .filter(|&j| strictly_inside(&cyl[i], &cyl[j]))
            .min_by_key(|&j| cyl[j].base.area())
    };
    let parents: Vec<Option<usize>> = (0..cyl.len()).map(parent).collect();
    // contour root of each cylinder
    let mut root = vec![usize::MAX; cyl.len()];
    let mut order: Vec<usize> = (0..cyl.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(cyl[i].base.area()));
    for &i in &order {
        root[i] = match parents[i] {
            Some(p) if cyl[p].i != large.level => root[p],
            _ => i,
        };
    }
    let mut out = Vec::new();
    for &r in order.iter().filter(|&&i| root[i] == i) {
        if cyl[r].e != large.level {
            return Err(Error::NotLargeSet(format!("contour opens at level {} not {}", cyl[r].e, large.level)));
        }
        let mut mids = Vec::new();
        let mut ints = Vec::new();
        for (i, c) in cyl.iter().enumerate() {
            if i != r && root[i] == r {
                if c.i == large.level {
                    ints.push(c.clone());
                } else {
                    mids.push(c.clone());
                }
            }
        }
        let c = Contour { level: large.level, ext: cyl[r].clone(), mids, ints };
        c.check()?;
        out.push(c);
    }
    out.sort_by(|a, b| a.ext.cmp(&b.ext));
    Ok(out)
}

/// A region with the cylinders bounding it from outside and inside.
#[derive(Clone, Debug)]
pub struct Region {
    pub sites: Vec<Site>,
    pub level: u32,
    pub outer: Cylinder,
    pub inner: Vec<Cylinder>,
}

/// Catalogs by level for `Z*` evaluations.
pub struct ZStar {
    pub k: u32,
    pub n_max: u32,
    pub region_cap: usize,
    exec: Exec,
    catalogs: Mutex<BTreeMap<u32, std::sync::Arc<Catalog>>>,
}

impl ZStar {
    pub fn new(k: u32, n_max: u32, region_cap: usize, exec: Exec) -> Self {
        ZStar { k, n_max, region_cap, exec, catalogs: Mutex::new(BTreeMap::new()) }
    }

    fn catalog(&self, level: u32) -> Result<std::sync::Arc<Catalog>> {
        if let Some(c) = self.catalogs.lock().unwrap().get(&level) {
            return Ok(c.clone());
        }
        let c = std::sync::Arc::new(Catalog::build(CatalogKey::new(self.k, level, self.n_max), self.exec)?);
        self.catalogs.lock().unwrap().insert(level, c.clone());
        Ok(c)
    }

    /// Perturbations placed inside the region obeying the sign condition
    /// against the bounding cylinders they touch.
    pub fn placements(&self, r: &Region) -> Result<Vec<Perturbation>> {
        if r.sites.len() > self.region_cap {
            return Err(Error::RegionTooLarge { sites: r.sites.len(), cap: self.region_cap });
        }
        let cat = self.catalog(r.level)?;
        let inside = geom::to_set(&r.sites);
        let mut out = Vec::new();
        for p in cat.perturbations.iter().filter(|p| p.order <= self.n_max) {
            for &anchor in &r.sites {
                let q = p.translate(geom::sub(anchor, p.sites[0]));
                if !q.sites.iter().all(|s| inside.contains(s)) {
                    continue;
                }
                let s = q.sign as i32;
                let outer_ok = r.outer.sign() == s || !geom::perimeters_intersect(&q.sites, r.outer.base.sites());
                let inner_ok = r
                    .inner
                    .iter()
                    .all(|c| c.sign() == -s || !geom::perimeters_intersect(&q.sites, c.base.sites()));
                if outer_ok && inner_ok {
                    out.push(q);
                }
            }
        }
        Ok(out)
    }

    /// Sum over compatible families of total order at most `n_max`.
    pub fn value(&self, r: &Region, params: &ModelParams) -> Result<f64> {
        let mut places = self.placements(r)?;
        places.sort_by_key(|p| p.order);
        let (lt, u) = (params.t().ln(), params.u());
        let w: Vec<f64> = places.iter().map(|p| (p.order as f64 * lt + p.wall as f64 * u).exp()).collect();
        let mut chosen: Vec<usize> = Vec::new();
        Ok(families(&places, &w, 0, 0, self.n_max, &mut chosen))
    }

    /// `e^{u delta(n') |region|} Z*`.
    pub fn tilde(&self, r: &Region, params: &ModelParams) -> Result<f64> {
        Ok((params.u() * delta(r.level) as f64 * r.sites.len() as f64).exp() * self.value(r, params)?)
    }
}

fn families(places: &[Perturbation], w: &[f64], from: usize, order: u32, n_max: u32, chosen: &mut Vec<usize>) -> f64 {
    let mut total = 1.0;
    for i in from..places.len() {
        let p = &places[i];
        if order + p.order > n_max {
            break;
        }
        if chosen.iter().all(|&j| crate::catalog::perturbations_compatible(&places[j], p)) {
            chosen.push(i);
            total += w[i] * families(places, w, i + 1, order + p.order, n_max, chosen);
            chosen.pop();
        }
    }
    total
}

#[derive(Clone, Copy, Debug)]
pub struct ContourWeights {
    /// Cylinder weights times the ratio of `Z*`.
    pub direct: f64,
    /// `t^{|Gamma|}` times the ratio of `Z~`.
    pub via_tilde: f64,
}

impl ContourWeights {
    pub fn rel_diff(&self) -> f64 {
        (self.direct - self.via_tilde).abs() / self.direct.abs().max(self.via_tilde.abs())
    }
}

/// Regions of a contour: `(Supp^ext, Supp^i..., Supp)`.
pub fn regions(c: &Contour) -> (Region, Vec<Region>, Region) {
    let ext = Region {
        sites: c.support_ext(),
        level: c.ext.i,
        outer: c.ext.clone(),
        inner: c.children(&c.ext).into_iter().cloned().collect(),
    };
    let mids = (0..c.mids.len())
        .map(|i| Region {
            sites: c.support_mid(i),
            level: c.mids[i].i,
            outer: c.mids[i].clone(),
            inner: c.children(&c.mids[i]).into_iter().cloned().collect(),
        })
        .collect();
    let whole = Region { sites: c.support(), level: c.level, outer: c.ext.clone(), inner: c.ints.clone() };
    (ext, mids, whole)
}

pub fn contour_weight(c: &Contour, params: &ModelParams, z: &ZStar) -> Result<ContourWeights> {
    c.check()?;
    let (ext, mids, whole) = regions(c);
    let lt = params.t().ln();
    let log_phi: f64 = c
        .cylinders()
        .map(|g| {
            let (two_p, q) = g.monomial();
            0.5 * two_p as f64 * lt + q as f64 * params.u()
        })
        .sum();
    let mut num = z.value(&ext, params)?;
    let mut num_t = z.tilde(&ext, params)?;
    for r in &mids {
        num *= z.value(r, params)?;
        num_t *= z.tilde(r, params)?;
    }
    let direct = log_phi.exp() * num / z.value(&whole, params)?;
    let via_tilde = (0.5 * c.norm2() as f64 * lt).exp() * num_t / z.tilde(&whole, params)?;
    Ok(ContourWeights { direct, via_tilde })
}
