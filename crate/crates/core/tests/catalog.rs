use sos_wall::catalog::{Catalog, CatalogKey, Perturbation};
use sos_wall::exec::Exec;
use rustc_hash::FxHashMap;
use sos_wall::geom::Site;

fn cat(k: u32, h: u32, n: u32) -> Catalog {
    Catalog::build(CatalogKey::new(k, h, n), Exec::Auto).unwrap()
}

fn nontouching_ext(p: &Perturbation) -> bool {
    p.external().i > 0
}

#[test]
fn low_order_counts_at_level_two() {
    let c = cat(2, 2, 7);
    assert_eq!(c.count(4, 1), 1);
    assert_eq!(c.count(6, 2), 2);
    assert_eq!(c.count_where(|p| p.order == 5 && p.wall == 1 && nontouching_ext(p)), 4);
    assert_eq!(c.count(2, 0), 2);
    assert_eq!(c.count(3, 0), 4);
}

#[test]
fn domino_plus_step_count() {
    let c = cat(2, 2, 7);
    assert_eq!(c.count_where(|p| p.order == 7 && p.wall == 2 && nontouching_ext(p)), 16);
}

#[test]
fn level_one_has_no_step_columns() {
    let c = cat(2, 1, 4);
    assert_eq!(c.count_where(|p| p.order == 3 && p.wall == 1 && nontouching_ext(p)), 0);
    assert_eq!(c.count_where(|p| p.order == 4 && p.wall == 2 && nontouching_ext(p)), 0);
}

#[test]
fn norms_agree_with_cylinders() {
    for h in 0..3 {
        let c = cat(2, h, 6);
        for p in &c.perturbations {
            assert_eq!(p.order, p.norm_from_cylinders(), "{p:?}");
            assert_eq!(p.wall, p.wall_from_cylinders(), "{p:?}");
            assert_eq!(p.cylinders().external().len(), 1);
        }
    }
}

/// Independent oracle: every field with a few off-level sites near the
/// origin, decomposed into cylinders, kept when it has one external cylinder
/// whose least base site is the origin.
fn brute(h: u32, n: u32) -> Vec<(u32, i32, i8, usize)> {
    // Bounding boxes satisfy w + h <= n, so with the least site at the
    // origin everything fits in x < n - 1, |y| < n - 1.
    let reach = n as i32 - 1;
    let cells: Vec<Site> = (0..reach).flat_map(|x| (1 - reach..reach).map(move |y| (x, y))).collect();
    let vals: Vec<u32> = (h.saturating_sub(n / 2)..=h + n / 2).filter(|&v| v != h).collect();
    let mut out = Vec::new();
    let max_sites = n as usize;
    let mut chosen: Vec<usize> = Vec::new();
    fn subsets(start: usize, max: usize, total: usize, chosen: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if !chosen.is_empty() {
            f(chosen);
        }
        if chosen.len() == max {
            return;
        }
        for i in start..total {
            chosen.push(i);
            subsets(i + 1, max, total, chosen, f);
            chosen.pop();
        }
    }
    subsets(0, max_sites, cells.len(), &mut chosen, &mut |pick| {
        let mut idx = vec![0usize; pick.len()];
        loop {
            let field: FxHashMap<Site, u32> = pick.iter().zip(&idx).map(|(&c, &v)| (cells[c], vals[v])).collect();
            let set = sos_wall::cylinder::decompose_field(&field, h);
            let ext = set.external();
            if ext.len() == 1 {
                let outer = &set.cylinders[ext[0]];
                if outer.base.sites()[0] == (0, 0) {
                    let order: u32 = set.cylinders.iter().map(|c| c.monomial().0).sum::<u32>() / 2;
                    let wall: i32 = set.cylinders.iter().map(|c| c.monomial().1 as i32).sum();
                    if order <= n {
                        out.push((order, wall, outer.sign() as i8, outer.base.area()));
                    }
                }
            }
            let mut j = 0;
            loop {
                if j == idx.len() {
                    return;
                }
                idx[j] += 1;
                if idx[j] < vals.len() {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
        }
    });
    out.sort_unstable();
    out
}

#[test]
fn catalog_matches_field_brute_force() {
    for h in [0u32, 1, 2] {
        let n = 4;
        let mut mine: Vec<(u32, i32, i8, usize)> =
            cat(2, h, n).perturbations.iter().map(|p| (p.order, p.wall, p.sign, p.sites.len())).collect();
        mine.sort_unstable();
        assert_eq!(mine, brute(h, n), "level {h}");
    }
}

#[test]
fn cache_round_trip_is_bit_identical() {
    let dir = tempdir();
    let key = CatalogKey::new(1, 1, 5);
    let a = Catalog::load_or_build(&dir, key, Exec::Auto).unwrap();
    let bytes1 = std::fs::read(Catalog::cache_path(&dir, key)).unwrap();
    let b = Catalog::load_or_build(&dir, key, Exec::Sequential).unwrap();
    assert_eq!(a.perturbations, b.perturbations);
    assert_eq!(a.content_hash(), b.content_hash());
    b.save(&dir).unwrap();
    assert_eq!(bytes1, std::fs::read(Catalog::cache_path(&dir, key)).unwrap());
    let c = Catalog::build(key, Exec::Sequential).unwrap();
    assert_eq!(c.content_hash(), a.content_hash());
    // A corrupted file is rejected.
    let path = Catalog::cache_path(&dir, key);
    let text = std::fs::read_to_string(&path).unwrap().replacen("\n1 2 0", "\n1 3 0", 1);
    std::fs::write(&path, text).unwrap();
    assert!(Catalog::load(&dir, key).is_err());
    let _ = std::fs::remove_dir_all(&dir);
}

fn tempdir() -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("sos-cat-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}
