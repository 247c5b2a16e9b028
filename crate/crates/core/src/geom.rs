//! Planar site-set geometry on Z². Sites are `(x, y)` with `y` pointing up;
//! site `(x, y)` occupies the unit square with corners `(x, y)..(x+1, y+1)`.
//!
//! The corner-rounding convention joins the south and west arms and the north
//! and east arms at a dual vertex where four boundary bonds meet. Two sites that
//! touch only at a corner are therefore joined when they sit NW–SE of each
//! other, and the same holds for the complement, so interiors and complements
//! both use the six-neighbourhood below.

use rustc_hash::{FxHashMap, FxHashSet};

pub type Site = (i32, i32);
/// Dual-lattice vertex, the lower-left corner convention of the site with the same coordinates.
pub type Vertex = (i32, i32);

pub const N4: [Site; 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];
pub const N6: [Site; 6] = [(1, 0), (0, 1), (-1, 0), (0, -1), (-1, 1), (1, -1)];

pub const ARM_N: u8 = 1;
pub const ARM_E: u8 = 2;
pub const ARM_S: u8 = 4;
pub const ARM_W: u8 = 8;

#[inline]
pub fn add(a: Site, b: Site) -> Site {
    (a.0 + b.0, a.1 + b.1)
}
#[inline]
pub fn sub(a: Site, b: Site) -> Site {
    (a.0 - b.0, a.1 - b.1)
}

pub fn to_set(sites: &[Site]) -> FxHashSet<Site> {
    sites.iter().copied().collect()
}

/// Sort and dedup.
pub fn canon(mut sites: Vec<Site>) -> Vec<Site> {
    sites.sort_unstable();
    sites.dedup();
    sites
}

/// Six-connected components of a finite site set, each sorted.
pub fn components6(sites: &[Site]) -> Vec<Vec<Site>> {
    let set = to_set(sites);
    let mut seen: FxHashSet<Site> = FxHashSet::default();
    let mut out = Vec::new();
    let mut order: Vec<Site> = sites.to_vec();
    order.sort_unstable();
    for &s in &order {
        if !seen.insert(s) {
            continue;
        }
        let mut comp = vec![s];
        let mut stack = vec![s];
        while let Some(x) = stack.pop() {
            for d in N6 {
                let y = add(x, d);
                if set.contains(&y) && seen.insert(y) {
                    comp.push(y);
                    stack.push(y);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

pub fn is_connected6(sites: &[Site]) -> bool {
    !sites.is_empty() && components6(sites).len() == 1
}

pub fn bbox(sites: &[Site]) -> (i32, i32, i32, i32) {
    let mut b = (i32::MAX, i32::MAX, i32::MIN, i32::MIN);
    for &(x, y) in sites {
        b.0 = b.0.min(x);
        b.1 = b.1.min(y);
        b.2 = b.2.max(x);
        b.3 = b.3.max(y);
    }
    b
}

/// The set together with every complement site not six-connected to infinity.
pub fn fill(sites: &[Site]) -> Vec<Site> {
    if sites.is_empty() {
        return Vec::new();
    }
    let set = to_set(sites);
    let (x0, y0, x1, y1) = bbox(sites);
    let (x0, y0, x1, y1) = (x0 - 1, y0 - 1, x1 + 1, y1 + 1);
    let mut outside: FxHashSet<Site> = FxHashSet::default();
    let mut stack = vec![(x0, y0)];
    outside.insert((x0, y0));
    while let Some(p) = stack.pop() {
        for d in N6 {
            let q = add(p, d);
            if q.0 < x0 || q.0 > x1 || q.1 < y0 || q.1 > y1 {
                continue;
            }
            if !set.contains(&q) && outside.insert(q) {
                stack.push(q);
            }
        }
    }
    let mut out = Vec::new();
    for x in x0 + 1..x1 {
        for y in y0 + 1..y1 {
            if !outside.contains(&(x, y)) {
                out.push((x, y));
            }
        }
    }
    out.sort_unstable();
    out
}

pub fn is_hole_free(sites: &[Site]) -> bool {
    fill(sites).len() == canon(sites.to_vec()).len()
}

/// Number of nearest-neighbour bonds joining the set to its complement.
pub fn perimeter(sites: &[Site]) -> u32 {
    let set = to_set(sites);
    let mut p = 0;
    for &s in sites {
        for d in N4 {
            if !set.contains(&add(s, d)) {
                p += 1;
            }
        }
    }
    p
}

/// Boundary bonds as arms at dual vertices.
pub fn arms(sites: &[Site]) -> FxHashMap<Vertex, u8> {
    let set = to_set(sites);
    let mut m: FxHashMap<Vertex, u8> = FxHashMap::default();
    for &(x, y) in sites {
        if !set.contains(&(x + 1, y)) {
            *m.entry((x + 1, y)).or_default() |= ARM_N;
            *m.entry((x + 1, y + 1)).or_default() |= ARM_S;
        }
        if !set.contains(&(x - 1, y)) {
            *m.entry((x, y)).or_default() |= ARM_N;
            *m.entry((x, y + 1)).or_default() |= ARM_S;
        }
        if !set.contains(&(x, y + 1)) {
            *m.entry((x, y + 1)).or_default() |= ARM_E;
            *m.entry((x + 1, y + 1)).or_default() |= ARM_W;
        }
        if !set.contains(&(x, y - 1)) {
            *m.entry((x, y)).or_default() |= ARM_E;
            *m.entry((x + 1, y)).or_default() |= ARM_W;
        }
    }
    m
}

/// ℓ¹ diameter of the boundary vertices.
pub fn diameter(sites: &[Site]) -> u32 {
    let a = arms(sites);
    if a.is_empty() {
        return 0;
    }
    let (mut smin, mut smax, mut dmin, mut dmax) = (i32::MAX, i32::MIN, i32::MAX, i32::MIN);
    for &(x, y) in a.keys() {
        smin = smin.min(x + y);
        smax = smax.max(x + y);
        dmin = dmin.min(x - y);
        dmax = dmax.max(x - y);
    }
    (smax - smin).max(dmax - dmin) as u32
}

/// Whether the rounded boundary curves of two sets meet.
pub fn arms_intersect(a: &FxHashMap<Vertex, u8>, b: &FxHashMap<Vertex, u8>) -> bool {
    let (small, big) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    for (v, &x) in small {
        if let Some(&y) = big.get(v) {
            if x & y != 0 {
                return true;
            }
            let sw = ARM_S | ARM_W;
            let ne = ARM_N | ARM_E;
            let resolved = (x == sw && y == ne) || (x == ne && y == sw);
            if !resolved {
                return true;
            }
        }
    }
    false
}

pub fn perimeters_intersect(a: &[Site], b: &[Site]) -> bool {
    arms_intersect(&arms(a), &arms(b))
}

/// Directed boundary edges with the interior on the left, keyed by start vertex.
fn directed_edges(sites: &[Site]) -> FxHashMap<Vertex, Vec<(Vertex, u8)>> {
    let set = to_set(sites);
    let mut m: FxHashMap<Vertex, Vec<(Vertex, u8)>> = FxHashMap::default();
    let mut push = |from: Vertex, to: Vertex, arm: u8| m.entry(from).or_default().push((to, arm));
    for &(x, y) in sites {
        if !set.contains(&(x + 1, y)) {
            push((x + 1, y), (x + 1, y + 1), ARM_N);
        }
        if !set.contains(&(x - 1, y)) {
            push((x, y + 1), (x, y), ARM_S);
        }
        if !set.contains(&(x, y + 1)) {
            push((x + 1, y + 1), (x, y + 1), ARM_W);
        }
        if !set.contains(&(x, y - 1)) {
            push((x, y), (x + 1, y), ARM_E);
        }
    }
    m
}

fn opposite(arm: u8) -> u8 {
    match arm {
        ARM_N => ARM_S,
        ARM_S => ARM_N,
        ARM_E => ARM_W,
        _ => ARM_E,
    }
}

fn rounding_partner(arm: u8) -> u8 {
    match arm {
        ARM_S => ARM_W,
        ARM_W => ARM_S,
        ARM_N => ARM_E,
        _ => ARM_N,
    }
}

/// Trace the boundary counter-clockwise from the least vertex, resolving
/// four-arm vertices by the rounding rule. Returns the closed vertex cycle
/// (first vertex not repeated at the end) or `None` if the boundary is not a
/// single curve.
pub fn trace_boundary(sites: &[Site]) -> Option<Vec<Vertex>> {
    let edges = directed_edges(sites);
    let total: usize = edges.values().map(|v| v.len()).sum();
    if total == 0 {
        return None;
    }
    let start = *edges.keys().min()?;
    let mut used: FxHashSet<(Vertex, Vertex)> = FxHashSet::default();
    let mut path = Vec::with_capacity(total);
    let mut v = start;
    let mut arrived: Option<u8> = None;
    loop {
        let outs = edges.get(&v)?;
        let choice = if outs.len() == 1 {
            outs[0]
        } else {
            let want = rounding_partner(arrived?);
            *outs.iter().find(|e| e.1 == want)?
        };
        if !used.insert((v, choice.0)) {
            return None;
        }
        path.push(v);
        arrived = Some(opposite(choice.1));
        v = choice.0;
        if v == start && used.len() == total {
            return Some(path);
        }
        if used.len() > total {
            return None;
        }
    }
}

/// Shift so that the least site sits at the origin.
pub fn normalize(sites: &[Site]) -> (Vec<Site>, Site) {
    let c = canon(sites.to_vec());
    let o = c[0];
    (c.iter().map(|&s| sub(s, o)).collect(), o)
}

/// Sites of `a` that are six-adjacent to a site outside `a`.
pub fn rim(a: &FxHashSet<Site>) -> Vec<Site> {
    let mut r: Vec<Site> = a
        .iter()
        .copied()
        .filter(|&s| N6.iter().any(|&d| !a.contains(&add(s, d))))
        .collect();
    r.sort_unstable();
    r
}
