//! Translation classes of six-connected, hole-free site sets with bounded
//! perimeter, generated row by row inside each bounding box.

use crate::exec::{self, Exec};
use crate::geom::{self, Site};

/// All shapes with `perimeter <= max_perimeter`, anchored with their least site at the origin,
/// in canonical (sorted) order.
pub fn shapes_up_to(max_perimeter: u32, exec: Exec) -> Vec<Vec<Site>> {
    let half = (max_perimeter / 2) as usize;
    let mut boxes = Vec::new();
    for w in 1..half {
        for h in 1..half {
            if w + h <= half && w <= 24 {
                boxes.push((w, h));
            }
        }
    }
    let per_box = exec::map(exec, &boxes, |&(w, h)| shapes_in_box(w, h, max_perimeter));
    let mut out: Vec<Vec<Site>> = per_box.into_iter().flatten().collect();
    out.sort_unstable_by(|a, b| {
        geom::perimeter(a).cmp(&geom::perimeter(b)).then_with(|| a.len().cmp(&b.len())).then_with(|| a.cmp(b))
    });
    out
}

fn runs(mask: u32) -> u32 {
    (mask & !(mask << 1)).count_ones()
}

/// Shapes whose bounding box is exactly `w x h`.
pub fn shapes_in_box(w: usize, h: usize, max_perimeter: u32) -> Vec<Vec<Site>> {
    let mut rows = vec![0u32; h];
    let mut out = Vec::new();
    rec(w, h, 0, 0, max_perimeter, &mut rows, &mut out);
    out
}

fn rec(w: usize, h: usize, r: usize, partial: u32, cap: u32, rows: &mut [u32], out: &mut Vec<Vec<Site>>) {
    if r == h {
        let p = partial + rows[h - 1].count_ones();
        if p > cap {
            return;
        }
        let used = rows.iter().fold(0, |a, &m| a | m);
        if used & 1 == 0 || used & (1 << (w - 1)) == 0 {
            return;
        }
        let rows: &[u32] = rows;
        let sites: Vec<Site> = (0..h)
            .flat_map(|y| (0..w).filter(move |&x| rows[y] >> x & 1 == 1).map(move |x| (x as i32, y as i32)))
            .collect();
        if geom::is_connected6(&sites) && geom::is_hole_free(&sites) {
            debug_assert_eq!(geom::perimeter(&sites), p);
            out.push(geom::normalize(&sites).0);
        }
        return;
    }
    let prev = if r == 0 { 0 } else { rows[r - 1] };
    let rest = (h - r - 1) as u32 * 2 + 1;
    for mask in 1..(1u32 << w) {
        let add = 2 * runs(mask) + (mask ^ prev).count_ones();
        if partial + add + rest > cap {
            continue;
        }
        rows[r] = mask;
        rec(w, h, r + 1, partial + add, cap, rows, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_counts() {
        // Perimeter 4: the unit. Perimeter 6: two dominoes. Perimeter 8 adds
        // the six-connected diagonal pair, trominoes and the 2x2 block.
        let s4 = shapes_up_to(4, Exec::Sequential);
        assert_eq!(s4, vec![vec![(0, 0)]]);
        let s6 = shapes_up_to(6, Exec::Sequential);
        assert_eq!(s6.len(), 3);
        let s8 = shapes_up_to(8, Exec::Sequential);
        let p8: Vec<_> = s8.iter().filter(|s| geom::perimeter(s) == 8).collect();
        // straight x2, L x4, 2x2, diagonal pair, and the three-site diagonal-joined shapes
        assert!(p8.contains(&&vec![(0, 0), (0, 1), (1, 0), (1, 1)]));
        assert!(p8.contains(&&vec![(0, 0), (1, -1)]));
        assert!(!p8.iter().any(|s| s == &&vec![(0, 0), (1, 1)]));
    }

    #[test]
    fn matches_naive_growth() {
        // Independent generator: grow six-connected sets site by site, keep hole-free ones.
        use std::collections::BTreeSet;
        let cap = 12;
        let mut seen: BTreeSet<Vec<Site>> = BTreeSet::new();
        let mut frontier: Vec<Vec<Site>> = vec![vec![(0, 0)]];
        seen.insert(vec![(0, 0)]);
        while let Some(s) = frontier.pop() {
            let (x0, y0, x1, y1) = geom::bbox(&s);
            if ((x1 - x0 + 1) + (y1 - y0 + 1)) as u32 * 2 > cap {
                continue;
            }
            for &c in &s {
                for d in geom::N6 {
                    let n = geom::add(c, d);
                    if s.contains(&n) {
                        continue;
                    }
                    let mut t = s.clone();
                    t.push(n);
                    let t = geom::normalize(&t).0;
                    if seen.insert(t.clone()) {
                        frontier.push(t);
                    }
                }
            }
        }
        let naive: BTreeSet<Vec<Site>> = seen
            .into_iter()
            .filter(|s| geom::is_hole_free(s) && geom::perimeter(s) <= cap)
            .collect();
        let fast: BTreeSet<Vec<Site>> = shapes_up_to(cap, Exec::Auto).into_iter().collect();
        assert_eq!(naive, fast);
    }
}
