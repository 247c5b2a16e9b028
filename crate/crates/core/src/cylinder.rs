//! Cylinders `(base, E, I)` and the bijection between height fields and
//! compatible cylinder sets.

use std::fmt;

use rustc_hash::{FxHashMap, FxHashSet};

use crate::error::{Error, Result};
use crate::geom::{self, Site, Vertex};
use crate::lattice::{HeightConfig, SiteBox};
use crate::params::ModelParams;

/// A hole-free, six-connected interior and its derived boundary data.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Base {
    sites: Vec<Site>,
}

impl Base {
    pub fn new(sites: Vec<Site>) -> Self {
        Base { sites: geom::canon(sites) }
    }
    pub fn sites(&self) -> &[Site] {
        &self.sites
    }
    pub fn area(&self) -> usize {
        self.sites.len()
    }
    pub fn perimeter(&self) -> u32 {
        geom::perimeter(&self.sites)
    }
    pub fn diameter(&self) -> u32 {
        geom::diameter(&self.sites)
    }
    /// Closed counter-clockwise dual path from its least vertex.
    pub fn path(&self) -> Option<Vec<Vertex>> {
        geom::trace_boundary(&self.sites)
    }
    pub fn contains_site(&self, s: &Site) -> bool {
        self.sites.binary_search(s).is_ok()
    }
    /// Proper or improper inclusion.
    pub fn subset_of(&self, other: &Base) -> bool {
        self.sites.len() <= other.sites.len() && self.sites.iter().all(|s| other.contains_site(s))
    }
    pub fn disjoint(&self, other: &Base) -> bool {
        let (a, b) = if self.sites.len() <= other.sites.len() { (self, other) } else { (other, self) };
        a.sites.iter().all(|s| !b.contains_site(s))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cylinder {
    pub base: Base,
    pub e: u32,
    pub i: u32,
}

impl Cylinder {
    pub fn new(sites: Vec<Site>, e: u32, i: u32) -> Self {
        assert_ne!(e, i, "a cylinder needs E != I");
        Cylinder { base: Base::new(sites), e, i }
    }
    pub fn sign(&self) -> i32 {
        if self.i > self.e {
            1
        } else {
            -1
        }
    }
    pub fn length(&self) -> u32 {
        self.e.abs_diff(self.i)
    }
    pub fn is_elementary(&self, k: u32) -> bool {
        self.base.diameter() <= 3 * k + 3
    }
    /// `(2 * t-power, e^u-power)` of the weight.
    pub fn monomial(&self) -> (u32, i64) {
        let two_p = self.length() * self.base.perimeter();
        let q = self.base.area() as i64 * (delta(self.i) - delta(self.e));
        (two_p, q)
    }
    pub fn weight(&self, params: &ModelParams) -> f64 {
        let (two_p, q) = self.monomial();
        (0.5 * two_p as f64 * params.t().ln() + q as f64 * params.u()).exp()
    }
    pub fn translate(&self, d: Site) -> Cylinder {
        Cylinder {
            base: Base::new(self.base.sites.iter().map(|&s| geom::add(s, d)).collect()),
            e: self.e,
            i: self.i,
        }
    }
}

pub fn delta(h: u32) -> i64 {
    (h == 0) as i64
}

/// The compatibility predicate for a pair of cylinders.
pub fn compatible(a: &Cylinder, b: &Cylinder) -> bool {
    if a.base == b.base {
        return false;
    }
    let disjoint = a.base.disjoint(&b.base);
    let a_in_b = a.base.subset_of(&b.base);
    let b_in_a = b.base.subset_of(&a.base);
    if !(disjoint || a_in_b || b_in_a) {
        return false;
    }
    let touch = || geom::perimeters_intersect(a.base.sites(), b.base.sites());
    let shape_ok = if a.sign() == b.sign() {
        if disjoint {
            !touch()
        } else {
            true
        }
    } else if disjoint {
        true
    } else {
        !touch()
    };
    if !shape_ok {
        return false;
    }
    if disjoint {
        a.e == b.e
    } else if a_in_b {
        a.e == b.i
    } else {
        a.i == b.e
    }
}

/// Whether `a` and `b` are separated by `c`.
pub fn separated(a: &Cylinder, b: &Cylinder, by: &Cylinder) -> bool {
    if a.base == by.base || b.base == by.base {
        return false;
    }
    let (a, b, c) = (&a.base, &b.base, &by.base);
    let strictly_in = |x: &Base, y: &Base| x.subset_of(y) && x != y;
    (strictly_in(a, c) && strictly_in(c, b))
        || (strictly_in(b, c) && strictly_in(c, a))
        || (strictly_in(a, c) && b.disjoint(c))
        || (strictly_in(b, c) && a.disjoint(c))
}

/// A cylinder set with its external level, in canonical order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CylinderSet {
    pub level: u32,
    pub cylinders: Vec<Cylinder>,
}

impl CylinderSet {
    pub fn new(level: u32, mut cylinders: Vec<Cylinder>) -> Self {
        canonical_sort(&mut cylinders);
        CylinderSet { level, cylinders }
    }
    pub fn is_empty(&self) -> bool {
        self.cylinders.is_empty()
    }
    pub fn len(&self) -> usize {
        self.cylinders.len()
    }
    /// Indices of cylinders not contained in another one.
    pub fn external(&self) -> Vec<usize> {
        (0..self.cylinders.len())
            .filter(|&i| {
                !self.cylinders.iter().enumerate().any(|(j, c)| {
                    j != i && self.cylinders[i].base.subset_of(&c.base) && self.cylinders[i].base != c.base
                })
            })
            .collect()
    }
    /// Pairwise compatibility with the separation exemption; returns the first offending pair.
    pub fn first_conflict(&self) -> Option<(usize, usize)> {
        let c = &self.cylinders;
        for i in 0..c.len() {
            for j in i + 1..c.len() {
                if compatible(&c[i], &c[j]) {
                    continue;
                }
                let sep = (0..c.len()).any(|k| k != i && k != j && separated(&c[i], &c[j], &c[k]));
                if !sep {
                    return Some((i, j));
                }
            }
        }
        None
    }
    pub fn is_compatible(&self) -> bool {
        self.first_conflict().is_none() && self.external().iter().all(|&i| self.cylinders[i].e == self.level)
    }
    /// Line format: `E I x,y x,y ...` per cylinder.
    pub fn debug_lines(&self) -> String {
        let mut s = String::new();
        for c in &self.cylinders {
            s.push_str(&format!("{} {}", c.e, c.i));
            for (x, y) in c.base.sites() {
                s.push_str(&format!(" {x},{y}"));
            }
            s.push('\n');
        }
        s
    }
    pub fn parse_debug(level: u32, text: &str) -> Result<CylinderSet> {
        let mut cyl = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let mut it = line.split_whitespace();
            let bad = || Error::Io(format!("bad cylinder line: {line}"));
            let e: u32 = it.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
            let i: u32 = it.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
            let mut sites = Vec::new();
            for tok in it {
                let (x, y) = tok.split_once(',').ok_or_else(bad)?;
                sites.push((x.parse().map_err(|_| bad())?, y.parse().map_err(|_| bad())?));
            }
            if e == i || sites.is_empty() {
                return Err(bad());
            }
            cyl.push(Cylinder::new(sites, e, i));
        }
        Ok(CylinderSet::new(level, cyl))
    }
}

impl fmt::Display for CylinderSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.debug_lines())
    }
}

/// Larger interiors first, then lexicographic.
pub fn canonical_sort(c: &mut [Cylinder]) {
    c.sort_by(|a, b| {
        b.base
            .area()
            .cmp(&a.base.area())
            .then_with(|| a.base.cmp(&b.base))
            .then_with(|| (a.e, a.i).cmp(&(b.e, b.i)))
    });
}

/// Level-set decomposition of a finitely supported height field: `heights`
/// lists every site that may differ from `level`; everything else sits at `level`.
pub fn decompose_field(heights: &FxHashMap<Site, u32>, level: u32) -> CylinderSet {
    let mut out = Vec::new();
    let region: Vec<Site> = heights.keys().copied().collect();
    decompose_region(heights, &region, level, &mut out);
    CylinderSet::new(level, out)
}

fn decompose_region(heights: &FxHashMap<Site, u32>, region: &[Site], level: u32, out: &mut Vec<Cylinder>) {
    let up: Vec<Site> = region.iter().copied().filter(|s| heights[s] > level).collect();
    let down: Vec<Site> = region.iter().copied().filter(|s| heights[s] < level).collect();
    let mut pieces: Vec<(Vec<Site>, Vec<Site>, bool)> = Vec::new();
    for (set, is_up) in [(up, true), (down, false)] {
        for comp in geom::components6(&set) {
            let f = geom::fill(&comp);
            pieces.push((comp, f, is_up));
        }
    }
    // Keep pieces whose fill is not inside another piece's fill.
    let fills: Vec<FxHashSet<Site>> = pieces.iter().map(|p| geom::to_set(&p.1)).collect();
    for (idx, (comp, f, is_up)) in pieces.iter().enumerate() {
        let nested = fills
            .iter()
            .enumerate()
            .any(|(j, g)| j != idx && g.len() > f.len() && g.contains(&f[0]));
        if nested {
            continue;
        }
        let fset = &fills[idx];
        let rim: Vec<Site> = comp
            .iter()
            .copied()
            .filter(|&s| geom::N6.iter().any(|&d| !fset.contains(&geom::add(s, d))))
            .collect();
        let vals = rim.iter().map(|s| heights[s]);
        let inner = if *is_up { vals.min().unwrap() } else { vals.max().unwrap() };
        out.push(Cylinder::new(f.clone(), level, inner));
        decompose_region(heights, f, inner, out);
    }
}

pub fn decompose(config: &HeightConfig) -> CylinderSet {
    let map: FxHashMap<Site, u32> = config.bx.sites().zip(config.heights.iter().copied()).collect();
    decompose_field(&map, config.bx.boundary)
}

/// Heights on the union of interiors implied by a cylinder set, without checks.
pub fn heights_of(set: &CylinderSet) -> Result<FxHashMap<Site, u32>> {
    let mut h: FxHashMap<Site, i64> = FxHashMap::default();
    for c in &set.cylinders {
        for &s in c.base.sites() {
            *h.entry(s).or_insert(set.level as i64) += c.i as i64 - c.e as i64;
        }
    }
    let mut out = FxHashMap::default();
    let mut keys: Vec<_> = h.keys().copied().collect();
    keys.sort_unstable();
    for s in keys {
        let v = h[&s];
        if v < 0 {
            return Err(Error::NegativeHeight(s));
        }
        out.insert(s, v as u32);
    }
    Ok(out)
}

pub fn reconstruct(set: &CylinderSet, bx: &SiteBox) -> Result<HeightConfig> {
    if set.level != bx.boundary {
        return Err(Error::IncompatibleSet(format!(
            "external level {} differs from boundary {}",
            set.level, bx.boundary
        )));
    }
    if let Some((i, j)) = set.first_conflict() {
        return Err(Error::IncompatibleSet(format!("cylinders {i} and {j}")));
    }
    if !set.is_compatible() {
        return Err(Error::IncompatibleSet("external level mismatch".into()));
    }
    let h = heights_of(set)?;
    let mut cfg = HeightConfig::flat(*bx, bx.boundary);
    for (s, v) in h {
        let i = bx
            .index(s)
            .ok_or_else(|| Error::IncompatibleSet(format!("site {s:?} outside the box")))?;
        cfg.heights[i] = v;
    }
    Ok(cfg)
}

/// `e^{u delta(n) |box|} * prod phi(gamma)`.
pub fn total_weight(set: &CylinderSet, bx: &SiteBox, params: &ModelParams) -> f64 {
    let mut log = params.u() * (delta(set.level) as f64) * bx.len() as f64;
    for c in &set.cylinders {
        let (two_p, q) = c.monomial();
        log += 0.5 * two_p as f64 * params.t().ln() + q as f64 * params.u();
    }
    log.exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(x0: i32, y0: i32, w: i32, h: i32) -> Vec<Site> {
        (x0..x0 + w).flat_map(|x| (y0..y0 + h).map(move |y| (x, y))).collect()
    }

    #[test]
    fn weights() {
        let u1 = Cylinder::new(vec![(0, 0)], 2, 3);
        assert_eq!(u1.monomial(), (4, 0));
        let wall = Cylinder::new(vec![(0, 0)], 3, 0);
        assert_eq!(wall.monomial(), (12, 1));
        let dom = Cylinder::new(vec![(0, 0), (1, 0)], 4, 0);
        assert_eq!(dom.monomial(), (24, 2));
    }

    #[test]
    fn figure_five_pairs() {
        // Notched plateau with a pit meeting the notch at a single corner.
        let notched: Vec<Site> = square(0, 0, 4, 4).into_iter().filter(|&s| s != (0, 0)).collect();
        let g1 = Cylinder::new(notched, 1, 2);
        let g2 = Cylinder::new(vec![(1, 1)], 2, 0);
        assert!(compatible(&g1, &g2));
        // The mirrored notch sits on the joined diagonal, so the curves meet.
        let mirrored: Vec<Site> = square(0, 0, 4, 4).into_iter().filter(|&s| s != (0, 2)).collect();
        assert!(!compatible(&Cylinder::new(mirrored, 1, 2), &g2));
        let a = Cylinder::new(vec![(0, 0)], 1, 2);
        let b = Cylinder::new(vec![(3, 0)], 1, 2);
        assert!(compatible(&a, &b));
        assert!(!compatible(&a, &Cylinder::new(vec![(0, 0)], 1, 3)));
    }

    #[test]
    fn separation_cases() {
        let big = Cylinder::new(square(0, 0, 5, 5), 1, 2);
        let mid = Cylinder::new(square(1, 1, 3, 3), 2, 3);
        let small = Cylinder::new(vec![(2, 2)], 3, 4);
        assert!(separated(&small, &big, &mid));
        assert!(!separated(&mid, &big, &mid));
        let out = Cylinder::new(vec![(9, 9)], 1, 2);
        assert!(separated(&small, &out, &mid));
    }

    #[test]
    fn single_bump() {
        let bx = SiteBox::new(3, 3, 1);
        let mut c = HeightConfig::flat(bx, 1);
        c.heights[4] = 2;
        let s = decompose(&c);
        assert_eq!(s.cylinders, vec![Cylinder::new(vec![(1, 1)], 1, 2)]);
        assert_eq!(reconstruct(&s, &bx).unwrap(), c);
        assert!(decompose(&HeightConfig::flat(bx, 1)).is_empty());
    }

    #[test]
    fn disjoint_pits_under_plateau() {
        let bx = SiteBox::new(7, 5, 1);
        let mut c = HeightConfig::flat(bx, 1);
        for x in 1..6 {
            for y in 1..4 {
                c.heights[bx.index((x, y)).unwrap()] = 2;
            }
        }
        c.heights[bx.index((2, 2)).unwrap()] = 0;
        c.heights[bx.index((4, 2)).unwrap()] = 0;
        let s = decompose(&c);
        assert_eq!(s.len(), 3);
        let pits: Vec<_> = s.cylinders.iter().filter(|x| x.i == 0).collect();
        assert_eq!(pits.len(), 2);
        assert!(pits.iter().all(|p| p.e == 2));
        assert!(pits[0].base.disjoint(&pits[1].base));
        assert!(s.is_compatible());
        assert_eq!(reconstruct(&s, &bx).unwrap(), c);
    }
}
