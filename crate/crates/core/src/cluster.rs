//! Clusters over the perturbation catalog: truncated functions, cluster
//! enumeration and the truncated free energy of the restricted ensembles.

use std::cell::RefCell;

use num_bigint::BigInt;
use num_rational::BigRational;
use rustc_hash::{FxHashMap, FxHashSet};

use crate::catalog::{self, Catalog, CatalogKey, Footprint, Perturbation};
use crate::cylinder::delta;
use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::geom::{self, Site};
use crate::series::LaurentSeries;

/// `sum (-1)^{|E|}` over spanning connected subgraphs of the graph with
/// adjacency rows `adj` (bit j of row i set iff i~j, no loops).
pub fn connected_subgraph_sum(adj: &[u32]) -> i128 {
    let m = adj.len();
    assert!(m <= 20);
    if m == 0 {
        return 0;
    }
    let full = (1u32 << m) - 1;
    // independent[s]: no edge inside s
    let mut independent = vec![false; 1 << m];
    independent[0] = true;
    for s in 1..=full {
        let i = s.trailing_zeros() as usize;
        let rest = s & (s - 1);
        independent[s as usize] = independent[rest as usize] && adj[i] & rest == 0;
    }
    let mut c = vec![0i128; 1 << m];
    for s in 1..=full {
        let low = s & s.wrapping_neg();
        let others = s ^ low;
        let mut acc = independent[s as usize] as i128;
        // proper subsets b of s containing the lowest vertex
        let mut sub = others;
        loop {
            let b = sub | low;
            if b != s && independent[(s ^ b) as usize] {
                acc -= c[b as usize];
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & others;
        }
        c[s as usize] = acc;
    }
    c[full as usize]
}

/// Rows of the graph where vertex `i` of `adj` is replaced by `mult[i]`
/// mutually adjacent copies.
pub fn expand_graph(adj: &[u32], mult: &[u32]) -> Vec<u32> {
    let mut start = Vec::with_capacity(mult.len());
    let mut m = 0u32;
    for &n in mult {
        start.push(m);
        m += n;
    }
    let block = |i: usize| ((1u32 << mult[i]) - 1) << start[i];
    let mut rows = Vec::with_capacity(m as usize);
    for i in 0..mult.len() {
        let mut r = block(i);
        for j in 0..mult.len() {
            if j != i && adj[i] >> j & 1 == 1 {
                r |= block(j);
            }
        }
        for c in 0..mult[i] {
            rows.push(r & !(1u32 << (start[i] + c)));
        }
    }
    rows
}

fn factorial(n: u32) -> i128 {
    (1..=n as i128).product()
}

/// A cluster: placed perturbations with multiplicities.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Cluster {
    pub members: Vec<(Perturbation, u32)>,
}

impl Cluster {
    pub fn order(&self) -> u32 {
        self.members.iter().map(|(p, n)| p.order * n).sum()
    }

    pub fn wall(&self) -> i32 {
        self.members.iter().map(|(p, n)| p.wall * *n as i32).sum()
    }

    pub fn support(&self) -> Vec<Site> {
        let mut s: Vec<Site> = self.members.iter().flat_map(|(p, _)| p.sites.iter().copied()).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    /// Incompatibility graph on the distinct members.
    pub fn graph(&self) -> Vec<u32> {
        let k = self.members.len();
        let mut adj = vec![0u32; k];
        for i in 0..k {
            for j in i + 1..k {
                if !catalog::perturbations_compatible(&self.members[i].0, &self.members[j].0) {
                    adj[i] |= 1 << j;
                    adj[j] |= 1 << i;
                }
            }
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        let adj = self.graph();
        if adj.is_empty() {
            return false;
        }
        let mut seen = 1u32;
        let mut frontier = 1u32;
        while frontier != 0 {
            let i = frontier.trailing_zeros() as usize;
            frontier &= frontier - 1;
            let new = adj[i] & !seen;
            seen |= new;
            frontier |= new;
        }
        seen.count_ones() as usize == adj.len()
    }

    pub fn canonical(mut self) -> Cluster {
        self.members.sort();
        self
    }
}

/// The truncated function of a cluster.
pub fn truncated_factor(x: &Cluster) -> Result<BigRational> {
    if !x.is_connected() {
        return Err(Error::Disconnected);
    }
    let mult: Vec<u32> = x.members.iter().map(|m| m.1).collect();
    let c = connected_subgraph_sum(&expand_graph(&x.graph(), &mult));
    let d: i128 = mult.iter().map(|&n| factorial(n)).product();
    Ok(BigRational::new(BigInt::from(c), BigInt::from(d)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Placed {
    fp: u32,
    pos: Site,
}

struct Net<'a> {
    fps: &'a [Footprint],
    sets: Vec<FxHashSet<Site>>,
    halos: Vec<Vec<Site>>,
    /// `prefix[o]`: number of footprints with `min_order <= o`.
    prefix: Vec<usize>,
    n_max: u32,
}

impl<'a> Net<'a> {
    fn new(fps: &'a [Footprint], n_max: u32) -> Self {
        assert!(fps.windows(2).all(|w| w[0].min_order <= w[1].min_order));
        let sets = fps.iter().map(|f| geom::to_set(&f.sites)).collect();
        let halos = fps
            .iter()
            .map(|f| {
                let mut h: Vec<Site> = f.sites.iter().flat_map(|&s| geom::N6.iter().map(move |&d| geom::add(s, d))).collect();
                h.extend(f.sites.iter().copied());
                h.sort_unstable();
                h.dedup();
                h
            })
            .collect();
        let prefix = (0..=n_max as usize).map(|o| fps.iter().take_while(|f| f.min_order as usize <= o).count()).collect();
        Net { fps, sets, halos, prefix, n_max }
    }

    fn conflict(&self, a: Placed, b: Placed) -> bool {
        let (fa, fb) = (&self.fps[a.fp as usize], &self.fps[b.fp as usize]);
        let d = geom::sub(b.pos, a.pos);
        let set = &self.sets[a.fp as usize];
        if fa.sign != fb.sign {
            fb.sites.iter().any(|&s| set.contains(&geom::add(s, d)))
        } else {
            fb.sites.iter().any(|&s| {
                let x = geom::add(s, d);
                set.contains(&x) || geom::N6.iter().any(|&e| set.contains(&geom::add(x, e)))
            })
        }
    }

    /// Placements conflicting with `a` whose footprint has `min_order <= max`.
    fn neighbours(&self, a: Placed, max: u32, out: &mut Vec<Placed>) {
        out.clear();
        let fa = &self.fps[a.fp as usize];
        let lim = self.prefix[(max.min(self.n_max)) as usize];
        let mut seen: FxHashSet<Placed> = FxHashSet::default();
        for (g, fg) in self.fps[..lim].iter().enumerate() {
            let cells: &[Site] = if fg.sign == fa.sign { &self.halos[a.fp as usize] } else { &fa.sites };
            for &c in cells {
                let c = geom::add(c, a.pos);
                for &s in &fg.sites {
                    let p = Placed { fp: g as u32, pos: geom::sub(c, s) };
                    if seen.insert(p) {
                        out.push(p);
                    }
                }
            }
        }
    }

    fn min_order(&self, p: Placed) -> u32 {
        self.fps[p.fp as usize].min_order
    }

    /// Connected vertex sets with `sum min_order <= n_max` whose least
    /// element is `root` placed at the origin.
    fn esu<F: FnMut(&[Placed])>(&self, root: u32, visit: &mut F) {
        let r = Placed { fp: root, pos: (0, 0) };
        let used = self.min_order(r);
        if used > self.n_max {
            return;
        }
        let allowed = |p: &Placed| (p.fp, p.pos) > (r.fp, r.pos);
        let mut nb = Vec::new();
        self.neighbours(r, self.n_max - used, &mut nb);
        let ext: Vec<Placed> = nb.iter().copied().filter(|p| allowed(p)).collect();
        let mut sub = vec![r];
        self.extend(&mut sub, ext, used, &allowed, visit);
    }

    fn extend<F: FnMut(&[Placed]), A: Fn(&Placed) -> bool>(
        &self,
        sub: &mut Vec<Placed>,
        mut ext: Vec<Placed>,
        used: u32,
        allowed: &A,
        visit: &mut F,
    ) {
        visit(sub);
        let mut nb = Vec::new();
        while let Some(w) = ext.pop() {
            let u2 = used + self.min_order(w);
            if u2 > self.n_max {
                continue;
            }
            let mut ext2 = ext.clone();
            let rem = self.n_max - u2;
            if rem >= self.fps.first().map_or(u32::MAX, |f| f.min_order) {
                self.neighbours(w, rem, &mut nb);
                for &v in &nb {
                    if v != w && allowed(&v) && !sub.contains(&v) && !sub.iter().any(|&s| self.conflict(s, v)) {
                        ext2.push(v);
                    }
                }
            }
            sub.push(w);
            self.extend(sub, ext2, u2, allowed, visit);
            sub.pop();
        }
    }
}

type Poly = Vec<((u32, i32), i128)>;

fn poly_mul(a: &Poly, b: &Poly, n_max: u32) -> Poly {
    let mut m: FxHashMap<(u32, i32), i128> = FxHashMap::default();
    for &(ka, ca) in a {
        for &(kb, cb) in b {
            let o = ka.0 + kb.0;
            if o <= n_max {
                *m.entry((o, ka.1 + kb.1)).or_default() += ca * cb;
            }
        }
    }
    m.into_iter().filter(|e| e.1 != 0).collect()
}

thread_local! {
    static C_MEMO: RefCell<FxHashMap<Vec<u32>, i128>> = RefCell::new(FxHashMap::default());
}

fn memo_c(rows: Vec<u32>) -> i128 {
    C_MEMO.with(|m| {
        if let Some(&v) = m.borrow().get(&rows) {
            return v;
        }
        let v = connected_subgraph_sum(&rows);
        m.borrow_mut().insert(rows, v);
        v
    })
}

/// `sum over translation classes of clusters of a^T t^{|X|} e^{u m(X)}` for
/// polymers given as footprints, truncated at order `n_max`.
pub fn cluster_sum(fps: &[Footprint], n_max: u32, exec: Exec) -> Result<LaurentSeries> {
    if n_max > catalog::MAX_ORDER {
        return Err(Error::OrderTooLarge(format!("series order {n_max}")));
    }
    let mut fps = fps.to_vec();
    fps.retain(|f| f.min_order <= n_max && f.min_order > 0);
    fps.sort_by_key(|f| f.min_order);
    let net = Net::new(&fps, n_max);
    let scale = factorial(n_max / fps.first().map_or(1, |f| f.min_order).max(1));
    let powers: Vec<Vec<Poly>> = fps
        .iter()
        .map(|f| {
            let base: Poly = f
                .poly
                .iter()
                .filter(|(k, _)| k.0 <= n_max)
                .map(|(&k, &c)| (k, c as i128))
                .collect();
            let mut v = vec![vec![((0u32, 0i32), 1i128)]];
            for n in 1..=n_max / f.min_order {
                let next = poly_mul(&v[n as usize - 1], &base, n_max);
                v.push(next);
            }
            v
        })
        .collect();
    let roots: Vec<u32> = (0..fps.len() as u32).collect();
    let parts = exec::map(exec, &roots, |&root| {
        let mut acc: FxHashMap<(u32, i32), i128> = FxHashMap::default();
        net.esu(root, &mut |sub| {
            let k = sub.len();
            let mut adj = vec![0u32; k];
            for i in 0..k {
                for j in i + 1..k {
                    if net.conflict(sub[i], sub[j]) {
                        adj[i] |= 1 << j;
                        adj[j] |= 1 << i;
                    }
                }
            }
            let mins: Vec<u32> = sub.iter().map(|&p| net.min_order(p)).collect();
            let mut mult = vec![1u32; k];
            loop {
                let rows = expand_graph(&adj, &mult);
                let c = memo_c(rows);
                if c != 0 {
                    let mut poly: Poly = vec![((0, 0), c * scale / mult.iter().map(|&n| factorial(n)).product::<i128>())];
                    for (i, p) in sub.iter().enumerate() {
                        poly = poly_mul(&poly, &powers[p.fp as usize][mult[i] as usize], n_max);
                        if poly.is_empty() {
                            break;
                        }
                    }
                    for (key, v) in poly {
                        *acc.entry(key).or_default() += v;
                    }
                }
                // next multiplicity vector within budget
                let mut i = 0;
                loop {
                    if i == k {
                        return;
                    }
                    mult[i] += 1;
                    let cost: u32 = mult.iter().zip(&mins).map(|(n, m)| n * m).sum();
                    if cost <= n_max {
                        break;
                    }
                    mult[i] = 1;
                    i += 1;
                }
            }
        });
        acc
    });
    let mut total: FxHashMap<(u32, i32), i128> = FxHashMap::default();
    for part in parts {
        for (k, v) in part {
            *total.entry(k).or_default() += v;
        }
    }
    let mut s = LaurentSeries::zero(n_max);
    let d = BigInt::from(scale);
    for ((p, q), v) in total {
        s.add_term(p, q, BigRational::new(BigInt::from(v), d.clone()));
    }
    Ok(s)
}

/// Polymers with one perturbation each.
pub fn singleton_footprints(cat: &Catalog) -> Vec<Footprint> {
    let mut v: Vec<Footprint> = cat
        .perturbations
        .iter()
        .map(|p| Footprint {
            sign: p.sign,
            sites: p.sites.clone(),
            min_order: p.order,
            poly: [((p.order, p.wall), 1i64)].into_iter().collect(),
        })
        .collect();
    v.sort_by_key(|f| f.min_order);
    v
}

/// Clusters of order at most `n_max` whose support contains `anchor`, in
/// canonical order.
pub fn enumerate_clusters(cat: &Catalog, anchor: Site, n_max: u32, exec: Exec) -> Result<Vec<Cluster>> {
    if n_max > cat.key.n_max {
        return Err(Error::OrderTooLarge(format!("cluster order {n_max} above catalog order {}", cat.key.n_max)));
    }
    let mut perts: Vec<&Perturbation> = cat.perturbations.iter().filter(|p| p.order <= n_max).collect();
    perts.sort_by_key(|p| p.order);
    let fps: Vec<Footprint> = perts
        .iter()
        .map(|p| Footprint { sign: p.sign, sites: p.sites.clone(), min_order: p.order, poly: Default::default() })
        .collect();
    let net = Net::new(&fps, n_max);
    let roots: Vec<u32> = (0..fps.len() as u32).collect();
    let parts = exec::map(exec, &roots, |&root| {
        let mut out = Vec::new();
        net.esu(root, &mut |sub| {
            let k = sub.len();
            let mins: Vec<u32> = sub.iter().map(|&p| net.min_order(p)).collect();
            let mut mult = vec![1u32; k];
            loop {
                let members: Vec<(Perturbation, u32)> =
                    sub.iter().zip(&mult).map(|(p, &n)| (perts[p.fp as usize].translate(p.pos), n)).collect();
                let x = Cluster { members };
                for s in x.support() {
                    let d = geom::sub(anchor, s);
                    let members = x.members.iter().map(|(p, n)| (p.translate(d), *n)).collect();
                    out.push(Cluster { members }.canonical());
                }
                let mut i = 0;
                loop {
                    if i == k {
                        return;
                    }
                    mult[i] += 1;
                    if mult.iter().zip(&mins).map(|(n, m)| n * m).sum::<u32>() <= n_max {
                        break;
                    }
                    mult[i] = 1;
                    i += 1;
                }
            }
        });
        out
    });
    let mut all: Vec<Cluster> = parts.into_iter().flatten().collect();
    all.sort();
    Ok(all)
}

/// `-u delta(h) - sum over translation classes`, from a built catalog.
pub fn free_energy_from(cat: &Catalog, exec: Exec) -> Result<LaurentSeries> {
    let s = cluster_sum(&cat.footprints, cat.key.n_max, exec)?;
    let mut f = s.neg();
    f.add_linear_u(BigRational::from_integer(BigInt::from(-delta(cat.key.h))));
    Ok(f)
}

pub fn free_energy(h: u32, k: u32, n_max: u32, exec: Exec) -> Result<LaurentSeries> {
    let cat = Catalog::build(CatalogKey::new(k, h, n_max), exec)?;
    free_energy_from(&cat, exec)
}

/// `f(h+1) - f(h)`.
pub fn free_energy_difference(h: u32, k: u32, n_max: u32, exec: Exec) -> Result<LaurentSeries> {
    Ok(free_energy(h + 1, k, n_max, exec)?.sub(&free_energy(h, k, n_max, exec)?))
}

/// Number of placements of `g` that conflict with `f` at the origin.
pub fn conflicting_offsets(f: &Footprint, g: &Footprint) -> usize {
    let cells: Vec<Site> = if f.sign == g.sign {
        let mut h: Vec<Site> = f.sites.iter().flat_map(|&s| geom::N6.iter().map(move |&d| geom::add(s, d))).collect();
        h.extend(f.sites.iter().copied());
        h
    } else {
        f.sites.clone()
    };
    let mut offs: FxHashSet<Site> = FxHashSet::default();
    for c in cells {
        for &s in &g.sites {
            offs.insert(geom::sub(c, s));
        }
    }
    offs.len()
}

/// Per-perturbation slack in the convergence condition with the weight
/// `mu = s^{|omega|}`.
#[derive(Clone, Debug)]
pub struct ConvergenceEntry {
    pub index: usize,
    pub order: u32,
    pub wall: i32,
    pub area: usize,
    /// `sum of mu over perturbations incompatible with this one`
    pub incompatible_mu: f64,
    /// `s^{1/2} |support|`
    pub mu_bound: f64,
    /// `|phi| / (mu e^{-incompatible_mu})`
    pub ratio: f64,
}

#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub t: f64,
    pub u: f64,
    pub s: f64,
    pub entries: Vec<ConvergenceEntry>,
}

impl ConvergenceReport {
    pub fn worst_ratio(&self) -> f64 {
        self.entries.iter().map(|e| e.ratio).fold(0.0, f64::max)
    }
    pub fn violations(&self) -> usize {
        self.entries.iter().filter(|e| e.ratio > 1.0 || e.incompatible_mu > e.mu_bound).count()
    }
    pub fn phi_below_mu(&self) -> bool {
        self.entries.iter().all(|e| e.order as f64 * (self.t.ln() - self.s.ln()) + self.u * e.wall as f64 <= 0.0)
    }
}

pub fn convergence_check(cat: &Catalog, params: &crate::ModelParams, exec: Exec) -> ConvergenceReport {
    let (t, u) = (params.t(), params.u());
    let s = params.s();
    let mu_fp: Vec<f64> = cat.footprints.iter().map(|f| f.poly.iter().map(|(k, &c)| c as f64 * s.powi(k.0 as i32)).sum()).collect();
    let index: FxHashMap<(&[Site], i8), usize> =
        cat.footprints.iter().enumerate().map(|(i, f)| ((f.sites.as_slice(), f.sign), i)).collect();
    let ids: Vec<usize> = (0..cat.perturbations.len()).collect();
    let entries = exec::map(exec, &ids, |&i| {
        let p = &cat.perturbations[i];
        let f = &cat.footprints[index[&(p.sites.as_slice(), p.sign)]];
        let sum: f64 = cat.footprints.iter().zip(&mu_fp).map(|(g, m)| conflicting_offsets(f, g) as f64 * m).sum();
        let ln_phi = p.order as f64 * t.ln() + u * p.wall as f64;
        let ln_mu = p.order as f64 * s.ln();
        ConvergenceEntry {
            index: i,
            order: p.order,
            wall: p.wall,
            area: p.sites.len(),
            incompatible_mu: sum,
            mu_bound: s.sqrt() * p.sites.len() as f64,
            ratio: (ln_phi - ln_mu + sum).exp(),
        }
    });
    ConvergenceReport { t, u, s, entries }
}
