//! Elementary perturbations at a fixed external level, enumerated up to an
//! order cap, with footprints (support plus external sign) for the cluster layer.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rustc_hash::{FxHashMap, FxHashSet};
use sha2::{Digest, Sha256};

use crate::cylinder::{self, Cylinder, CylinderSet};
use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::geom::{self, Site};
use crate::shapes;

/// Largest order the enumerator accepts.
pub const MAX_ORDER: u32 = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CatalogKey {
    pub k: u32,
    pub h: u32,
    pub n_max: u32,
}

impl CatalogKey {
    pub fn new(k: u32, h: u32, n_max: u32) -> Self {
        CatalogKey { k, h, n_max }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Perturbation {
    pub order: u32,
    pub sign: i8,
    pub level: u32,
    /// Support, sorted, least site at the origin in canonical position.
    pub sites: Vec<Site>,
    /// Height of each support site.
    pub heights: Vec<u32>,
    pub wall: i32,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Classification {
    pub touching: bool,
    pub multi_touching: bool,
    pub small_touching: usize,
    pub big_touching: usize,
    pub simple: bool,
}

impl Perturbation {
    /// Build from heights on a support; `None` unless the support is exactly
    /// the interior of a unique external cylinder.
    pub fn from_field(level: u32, field: &[(Site, u32)]) -> Option<Perturbation> {
        let mut cells: Vec<(Site, u32)> = field.to_vec();
        cells.sort_unstable();
        let sites: Vec<Site> = cells.iter().map(|c| c.0).collect();
        let set = geom::to_set(&sites);
        let rim = geom::rim(&set);
        let hmap: FxHashMap<Site, u32> = cells.iter().copied().collect();
        let sign = match hmap[&rim[0]].cmp(&level) {
            std::cmp::Ordering::Greater => 1i8,
            std::cmp::Ordering::Less => -1,
            std::cmp::Ordering::Equal => return None,
        };
        let same = |v: u32| if sign > 0 { v > level } else { v < level };
        if !rim.iter().all(|s| same(hmap[s])) {
            return None;
        }
        let side: Vec<Site> = sites.iter().copied().filter(|s| same(hmap[s])).collect();
        let comp = geom::components6(&side).into_iter().find(|c| c.binary_search(&rim[0]).is_ok())?;
        if !rim.iter().all(|s| comp.binary_search(s).is_ok()) {
            return None;
        }
        let mut grad = 0u64;
        let mut zeros = 0i32;
        for &(s, v) in &cells {
            if v == 0 {
                zeros += 1;
            }
            for d in geom::N4 {
                let n = geom::add(s, d);
                match hmap.get(&n) {
                    Some(&w) => {
                        if n > s {
                            grad += v.abs_diff(w) as u64;
                        }
                    }
                    None => grad += v.abs_diff(level) as u64,
                }
            }
        }
        let origin = sites[0];
        Some(Perturbation {
            order: (grad / 2) as u32,
            sign,
            level,
            sites: sites.iter().map(|&s| geom::sub(s, origin)).collect(),
            heights: cells.iter().map(|c| c.1).collect(),
            wall: zeros - cylinder::delta(level) as i32 * sites.len() as i32,
        })
    }

    pub fn height_map(&self) -> FxHashMap<Site, u32> {
        self.sites.iter().copied().zip(self.heights.iter().copied()).collect()
    }

    pub fn cylinders(&self) -> CylinderSet {
        cylinder::decompose_field(&self.height_map(), self.level)
    }

    pub fn external(&self) -> Cylinder {
        self.cylinders().cylinders[0].clone()
    }

    pub fn translate(&self, d: Site) -> Perturbation {
        let mut p = self.clone();
        p.sites = p.sites.iter().map(|&s| geom::add(s, d)).collect();
        p
    }

    /// `sum L |perimeter| / 2` over the cylinders.
    pub fn norm_from_cylinders(&self) -> u32 {
        self.cylinders().cylinders.iter().map(|c| c.monomial().0).sum::<u32>() / 2
    }

    pub fn wall_from_cylinders(&self) -> i32 {
        self.cylinders().cylinders.iter().map(|c| c.monomial().1 as i32).sum()
    }

    pub fn diameter(&self) -> u32 {
        geom::diameter(&self.sites)
    }

    pub fn classify(&self) -> Classification {
        let cyl = self.cylinders();
        let touching: Vec<&Cylinder> = cyl.cylinders.iter().filter(|c| c.i == 0).collect();
        let small = touching.iter().filter(|c| c.base.perimeter() <= 6).count();
        Classification {
            touching: !touching.is_empty(),
            multi_touching: touching.len() >= 2,
            small_touching: small,
            big_touching: touching.len() - small,
            simple: cyl.len() == 1 && cyl.cylinders[0].sign() < 0 && cyl.cylinders[0].length() == 1,
        }
    }

    pub fn height_at(&self, s: Site) -> Option<u32> {
        self.sites.binary_search(&s).ok().map(|i| self.heights[i])
    }
}

/// Supports overlap, or same external sign with meeting perimeters.
pub fn perturbations_compatible(a: &Perturbation, b: &Perturbation) -> bool {
    let sb = geom::to_set(&b.sites);
    if a.sites.iter().any(|s| sb.contains(s)) {
        return false;
    }
    a.sign != b.sign || !geom::perimeters_intersect(&a.sites, &b.sites)
}

/// Split a cylinder set into perturbations, one per external cylinder.
pub fn decompose_into_perturbations(set: &CylinderSet, k: u32) -> Result<Vec<CylinderSet>> {
    for c in &set.cylinders {
        if !c.is_elementary(k) {
            return Err(Error::NonElementaryCylinder { diam: c.base.diameter(), bound: 3 * k + 3 });
        }
    }
    let ext = set.external();
    let mut out = Vec::new();
    for &e in &ext {
        let outer = &set.cylinders[e];
        let members: Vec<Cylinder> = set
            .cylinders
            .iter()
            .filter(|c| c.base.subset_of(&outer.base))
            .cloned()
            .collect();
        out.push(CylinderSet::new(set.level, members));
    }
    let total: usize = out.iter().map(|p| p.len()).sum();
    assert_eq!(total, set.len(), "perturbation decomposition must partition the set");
    Ok(out)
}

/// Support together with the external sign; all perturbations sharing one
/// footprint conflict with exactly the same placements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Footprint {
    pub sign: i8,
    pub sites: Vec<Site>,
    pub min_order: u32,
    /// `(order, wall) -> count` over the perturbations with this footprint.
    pub poly: BTreeMap<(u32, i32), i64>,
}

#[derive(Clone, Debug)]
pub struct Catalog {
    pub key: CatalogKey,
    pub perturbations: Vec<Perturbation>,
    pub footprints: Vec<Footprint>,
}

impl Catalog {
    pub fn build(key: CatalogKey, exec: Exec) -> Result<Catalog> {
        if key.n_max > MAX_ORDER {
            return Err(Error::OrderTooLarge(format!("order cap {} exceeds {}", key.n_max, MAX_ORDER)));
        }
        let shapes = shapes::shapes_up_to(2 * key.n_max, exec);
        let bound = 3 * key.k + 3;
        let lists = exec::map(exec, &shapes, |s| {
            if geom::diameter(s) > bound {
                return Vec::new();
            }
            let mut v = heights_on_shape(s, key.h, key.n_max, 1);
            if key.h > 0 {
                v.extend(heights_on_shape(s, key.h, key.n_max, -1));
            }
            v
        });
        let mut perturbations: Vec<Perturbation> = lists.into_iter().flatten().collect();
        perturbations.sort_unstable();
        Ok(Catalog::from_perturbations(key, perturbations))
    }

    pub fn from_perturbations(key: CatalogKey, perturbations: Vec<Perturbation>) -> Catalog {
        let mut groups: BTreeMap<(Vec<Site>, i8), BTreeMap<(u32, i32), i64>> = BTreeMap::new();
        for p in &perturbations {
            *groups.entry((p.sites.clone(), p.sign)).or_default().entry((p.order, p.wall)).or_default() += 1;
        }
        let mut footprints: Vec<Footprint> = groups
            .into_iter()
            .map(|((sites, sign), poly)| Footprint {
                sign,
                min_order: poly.keys().map(|k| k.0).min().unwrap(),
                sites,
                poly,
            })
            .collect();
        footprints.sort_by(|a, b| {
            (a.min_order, a.sites.len(), &a.sites, a.sign).cmp(&(b.min_order, b.sites.len(), &b.sites, b.sign))
        });
        Catalog { key, perturbations, footprints }
    }

    pub fn len(&self) -> usize {
        self.perturbations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perturbations.is_empty()
    }

    /// Per-site count of perturbations with a given `(order, wall)`.
    pub fn count(&self, order: u32, wall: i32) -> i64 {
        self.perturbations.iter().filter(|p| p.order == order && p.wall == wall).count() as i64
    }

    pub fn count_where<F: Fn(&Perturbation) -> bool>(&self, f: F) -> i64 {
        self.perturbations.iter().filter(|p| f(p)).count() as i64
    }

    /// Text body used for the cache file and its hash.
    pub fn body(&self) -> String {
        let mut s = String::new();
        for p in &self.perturbations {
            let _ = write!(s, "{} {} {} {}", p.sign, p.order, p.wall, p.sites.len());
            for (site, h) in p.sites.iter().zip(&p.heights) {
                let _ = write!(s, " {},{},{}", site.0, site.1, h);
            }
            s.push('\n');
        }
        s
    }

    pub fn content_hash(&self) -> String {
        let d = Sha256::digest(self.body().as_bytes());
        d.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn cache_path(dir: &Path, key: CatalogKey) -> PathBuf {
        dir.join(format!("catalog-k{}-h{}-n{}.txt", key.k, key.h, key.n_max))
    }

    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = Self::cache_path(dir, self.key);
        let text = format!(
            "sos-catalog 1\nkey {} {} {}\nhash {}\ncount {}\n{}",
            self.key.k,
            self.key.h,
            self.key.n_max,
            self.content_hash(),
            self.perturbations.len(),
            self.body()
        );
        std::fs::write(&path, text)?;
        Ok(path)
    }

    pub fn load(dir: &Path, key: CatalogKey) -> Result<Catalog> {
        let path = Self::cache_path(dir, key);
        let text = std::fs::read_to_string(&path)?;
        let mut lines = text.lines();
        let bad = |m: &str| Error::Cache(format!("{}: {m}", path.display()));
        if lines.next() != Some("sos-catalog 1") {
            return Err(bad("unknown header"));
        }
        let want_key = format!("key {} {} {}", key.k, key.h, key.n_max);
        if lines.next() != Some(want_key.as_str()) {
            return Err(bad("key mismatch"));
        }
        let hash = lines.next().and_then(|l| l.strip_prefix("hash ")).ok_or_else(|| bad("no hash"))?.to_string();
        let count: usize = lines
            .next()
            .and_then(|l| l.strip_prefix("count "))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("no count"))?;
        let mut perts = Vec::with_capacity(count);
        for line in lines {
            let mut it = line.split_whitespace();
            let mut num = || it.next().ok_or_else(|| bad("short line"));
            let sign: i8 = num()?.parse().map_err(|_| bad("sign"))?;
            let order: u32 = num()?.parse().map_err(|_| bad("order"))?;
            let wall: i32 = num()?.parse().map_err(|_| bad("wall"))?;
            let n: usize = num()?.parse().map_err(|_| bad("size"))?;
            let mut sites = Vec::with_capacity(n);
            let mut heights = Vec::with_capacity(n);
            for _ in 0..n {
                let tok = num()?;
                let v: Vec<i64> = tok.split(',').filter_map(|x| x.parse().ok()).collect();
                if v.len() != 3 {
                    return Err(bad("cell"));
                }
                sites.push((v[0] as i32, v[1] as i32));
                heights.push(v[2] as u32);
            }
            perts.push(Perturbation { order, sign, level: key.h, sites, heights, wall });
        }
        if perts.len() != count {
            return Err(bad("count mismatch"));
        }
        let cat = Catalog::from_perturbations(key, perts);
        if cat.content_hash() != hash {
            return Err(bad("content hash mismatch"));
        }
        Ok(cat)
    }

    /// Load from `dir` if a valid cache exists, else build and store.
    pub fn load_or_build(dir: &Path, key: CatalogKey, exec: Exec) -> Result<Catalog> {
        if let Ok(c) = Self::load(dir, key) {
            return Ok(c);
        }
        let c = Self::build(key, exec)?;
        c.save(dir)?;
        Ok(c)
    }
}

struct SiteInfo {
    outside: u32,
    rim: bool,
    left: Option<usize>,
    below: Option<usize>,
}

/// All height assignments on `shape` with the given external sign whose
/// cost stays within `2 * n_max` and which form a single perturbation.
pub fn heights_on_shape(shape: &[Site], level: u32, n_max: u32, sign: i8) -> Vec<Perturbation> {
    let mut order: Vec<Site> = shape.to_vec();
    order.sort_unstable_by_key(|&(x, y)| (y, x));
    let set = geom::to_set(shape);
    let pos: FxHashMap<Site, usize> = order.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let rimset: FxHashSet<Site> = geom::rim(&set).into_iter().collect();
    let info: Vec<SiteInfo> = order
        .iter()
        .map(|&s| SiteInfo {
            outside: geom::N4.iter().filter(|&&d| !set.contains(&geom::add(s, d))).count() as u32,
            rim: rimset.contains(&s),
            left: pos.get(&(s.0 - 1, s.1)).copied(),
            below: pos.get(&(s.0, s.1 - 1)).copied(),
        })
        .collect();
    let mut rest_lb = vec![0u32; order.len() + 1];
    for i in (0..order.len()).rev() {
        rest_lb[i] = rest_lb[i + 1] + info[i].outside;
    }
    let budget = 2 * n_max;
    if rest_lb[0] > budget {
        return Vec::new();
    }
    let reach = n_max / 2;
    let lo = level.saturating_sub(reach);
    let hi = level + reach;
    let mut cur = vec![0u32; order.len()];
    let mut out = Vec::new();
    let ctx = Ctx { info: &info, rest_lb: &rest_lb, budget, level, sign, lo, hi, order: &order };
    dfs(&ctx, 0, 0, &mut cur, &mut out);
    out
}

struct Ctx<'a> {
    info: &'a [SiteInfo],
    rest_lb: &'a [u32],
    budget: u32,
    level: u32,
    sign: i8,
    lo: u32,
    hi: u32,
    order: &'a [Site],
}

fn dfs(c: &Ctx, i: usize, cost: u32, cur: &mut [u32], out: &mut Vec<Perturbation>) {
    if i == cur.len() {
        let field: Vec<(Site, u32)> = c.order.iter().copied().zip(cur.iter().copied()).collect();
        if let Some(p) = Perturbation::from_field(c.level, &field) {
            debug_assert_eq!(p.order * 2, cost);
            out.push(p);
        }
        return;
    }
    let inf = &c.info[i];
    let (lo, hi) = if inf.rim {
        if c.sign > 0 {
            (c.level + 1, c.hi)
        } else {
            (c.lo, c.level - 1)
        }
    } else {
        (c.lo, c.hi)
    };
    for v in lo..=hi {
        let mut add = inf.outside * v.abs_diff(c.level);
        if let Some(j) = inf.left {
            add += v.abs_diff(cur[j]);
        }
        if let Some(j) = inf.below {
            add += v.abs_diff(cur[j]);
        }
        if cost + add + c.rest_lb[i + 1] > c.budget {
            continue;
        }
        cur[i] = v;
        dfs(c, i + 1, cost + add, cur, out);
    }
}

/// Innermost-first chain of nested cylinders above a wall site.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tornado {
    pub level: u32,
    pub chain: Vec<Cylinder>,
}

impl Tornado {
    pub fn is_chain(&self) -> bool {
        let c = &self.chain;
        !c.is_empty()
            && c[0].i == 0
            && c.windows(2).all(|w| w[0].base.subset_of(&w[1].base) && w[0].base != w[1].base && w[0].e == w[1].i)
            && c.last().unwrap().e == self.level
    }
    pub fn semi_monotone(&self) -> bool {
        self.chain.windows(2).all(|w| w[1].i > w[0].i)
    }
    pub fn fully_monotone(&self) -> bool {
        self.semi_monotone() && self.chain.last().is_some_and(|c| self.level > c.i)
    }
}

pub fn tornado_at(p: &Perturbation, x: Site) -> Result<Tornado> {
    if p.height_at(x) != Some(0) {
        return Err(Error::SiteNotAtZero(x));
    }
    let cyl = p.cylinders();
    let mut chain: Vec<Cylinder> = cyl.cylinders.into_iter().filter(|c| c.base.contains_site(&x)).collect();
    chain.sort_by_key(|c| c.base.area());
    let t = Tornado { level: p.level, chain };
    debug_assert!(t.is_chain());
    Ok(t)
}

/// Keep the cylinders lying below every larger one, truncating their tops.
pub fn monotonize(a: &Tornado) -> Tornado {
    let c = &a.chain;
    let r = c.len();
    let mut idx = Vec::new();
    for i in 0..r {
        let min_above = c[i + 1..].iter().map(|g| g.i).min();
        if i == r - 1 || min_above.is_some_and(|m| c[i].i < m) {
            idx.push(i);
        }
    }
    let mut chain = Vec::with_capacity(idx.len());
    for (l, &i) in idx.iter().enumerate() {
        if l + 1 < idx.len() {
            let top = c[idx[l + 1]].i;
            chain.push(Cylinder { base: c[i].base.clone(), e: top, i: c[i].i });
        } else {
            chain.push(c[i].clone());
        }
    }
    Tornado { level: a.level, chain }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_bump_and_column() {
        let up = Perturbation::from_field(2, &[((0, 0), 3)]).unwrap();
        assert_eq!((up.order, up.wall, up.sign), (2, 0, 1));
        let col = Perturbation::from_field(2, &[((5, 5), 0)]).unwrap();
        assert_eq!((col.order, col.wall, col.sign), (4, 1, -1));
        assert_eq!(col.sites, vec![(0, 0)]);
        assert_eq!(col.norm_from_cylinders(), 4);
        // A support site back at the level on the rim is not a perturbation.
        assert!(Perturbation::from_field(2, &[((0, 0), 3), ((1, 0), 2)]).is_none());
        // Two separated bumps are not one perturbation.
        assert!(Perturbation::from_field(2, &[((0, 0), 3), ((1, 1), 3)]).is_none());
        assert!(Perturbation::from_field(2, &[((0, 1), 3), ((1, 0), 3)]).is_some());
    }

    #[test]
    fn monotonize_hand_trace() {
        let sq = |w: i32| -> Vec<Site> { (0..w).flat_map(|x| (0..w).map(move |y| (x, y))).collect() };
        let g1 = Cylinder::new(sq(1), 5, 0);
        let g2 = Cylinder::new(sq(2), 3, 5);
        let g3 = Cylinder::new(sq(3), 6, 3);
        let a = Tornado { level: 6, chain: vec![g1.clone(), g2, g3.clone()] };
        assert!(a.is_chain());
        let m = monotonize(&a);
        assert_eq!(m.chain, vec![Cylinder::new(sq(1), 3, 0), g3]);
        assert!(m.semi_monotone());
        assert_eq!(monotonize(&m), m);
    }
}
