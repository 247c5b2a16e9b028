//! Restricted partition function on a small periodic box: catalog
//! perturbations placed on an `L x L` torus, summed over compatible families
//! as an exact truncated series.

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::catalog::Catalog;
use crate::error::{Error, Result};
use crate::geom::{self, Site};
use crate::series::LaurentSeries;

#[derive(Clone, Debug)]
struct Placement {
    order: u32,
    wall: i32,
    sign: i8,
    cells: Vec<usize>,
}

fn wrap(s: Site, l: i32) -> usize {
    (s.0.rem_euclid(l) * l + s.1.rem_euclid(l)) as usize
}

/// Sum over families of pairwise compatible placed perturbations, each
/// placement fitting the torus without overlapping itself. Family weights
/// are `t^{sum order} e^{u sum wall}`; families above `n_max` are dropped.
pub fn family_sum(cat: &Catalog, l: usize, n_max: u32) -> Result<LaurentSeries> {
    if l < 2 || l > 16 {
        return Err(Error::RegionTooLarge { sites: l * l, cap: 256 });
    }
    let li = l as i32;
    let mut places = Vec::new();
    for p in cat.perturbations.iter().filter(|p| p.order <= n_max) {
        for x in 0..li {
            for y in 0..li {
                let mut cells: Vec<usize> = p.sites.iter().map(|&s| wrap(geom::add(s, (x, y)), li)).collect();
                cells.sort_unstable();
                let before = cells.len();
                cells.dedup();
                if cells.len() != before {
                    continue;
                }
                places.push(Placement { order: p.order, wall: p.wall, sign: p.sign, cells });
            }
        }
    }
    places.sort_by_key(|p| p.order);
    let n = l * l;
    // halo[c]: cell c with its six neighbours, on the torus
    let halo: Vec<Vec<usize>> = (0..n)
        .map(|c| {
            let s = ((c / l) as i32, (c % l) as i32);
            let mut v: Vec<usize> = geom::N6.iter().map(|&d| wrap(geom::add(s, d), li)).collect();
            v.push(c);
            v
        })
        .collect();
    let mut acc: std::collections::BTreeMap<(u32, i32), i64> = Default::default();
    let mut occ = vec![0u8; n];
    let mut near = vec![[0u16; 2]; n];
    rec(&places, &halo, 0, 0, 0, n_max, &mut occ, &mut near, &mut acc);
    let mut s = LaurentSeries::zero(n_max);
    for ((p, q), c) in acc {
        s.add_term(p, q, BigRational::from_integer(BigInt::from(c)));
    }
    Ok(s)
}

#[allow(clippy::too_many_arguments)]
fn rec(
    places: &[Placement],
    halo: &[Vec<usize>],
    from: usize,
    order: u32,
    wall: i32,
    n_max: u32,
    occ: &mut [u8],
    near: &mut [[u16; 2]],
    acc: &mut std::collections::BTreeMap<(u32, i32), i64>,
) {
    *acc.entry((order, wall)).or_default() += 1;
    for i in from..places.len() {
        let p = &places[i];
        if order + p.order > n_max {
            break;
        }
        let side = (p.sign > 0) as usize;
        if p.cells.iter().any(|&c| occ[c] != 0 || near[c][side] != 0) {
            continue;
        }
        for &c in &p.cells {
            occ[c] = 1;
            for &h in &halo[c] {
                near[h][side] += 1;
            }
        }
        rec(places, halo, i + 1, order + p.order, wall + p.wall, n_max, occ, near, acc);
        for &c in &p.cells {
            occ[c] = 0;
            for &h in &halo[c] {
                near[h][side] -= 1;
            }
        }
    }
}

/// `log(family sum) / L^2` as a truncated series.
pub fn log_density(cat: &Catalog, l: usize, n_max: u32) -> Result<LaurentSeries> {
    let z = family_sum(cat, l, n_max)?;
    let lz = z.ln()?;
    Ok(lz.scale(&BigRational::new(BigInt::from(1), BigInt::from((l * l) as i64))))
}
