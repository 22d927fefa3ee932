use std::collections::HashMap;

use crate::error::{invalid, Error, Result};
use crate::oracle::{Domain, Vec3};

/// Neighbor lists: `j` is in list `i` iff `i != j` and `dist(i, j) <= r_cut`.
/// Lists are sorted ascending. Periodic domains use the minimum image.
pub fn neighbor_search(positions: &[Vec3], r_cut: f64, domain: &Domain) -> Result<Vec<Vec<usize>>> {
    if !(r_cut.is_finite() && r_cut > 0.0) {
        return Err(invalid("r_cut", format!("must be positive, got {r_cut}")));
    }
    domain.validate()?;
    match *domain {
        Domain::Unbounded => Ok(cell_list_unbounded(positions, r_cut, domain)),
        Domain::Periodic { edge } => {
            if r_cut > 0.5 * edge {
                return Err(Error::AmbiguousImage { r_cut, edge });
            }
            let cells = (edge / r_cut).floor() as usize;
            if cells < 3 {
                Ok(brute_force(positions, r_cut, domain))
            } else {
                Ok(cell_list_periodic(positions, r_cut, edge, cells, domain))
            }
        }
    }
}

/// O(N^2) reference scan.
pub fn brute_force(positions: &[Vec3], r_cut: f64, domain: &Domain) -> Vec<Vec<usize>> {
    let n = positions.len();
    let mut lists = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if domain.distance(&positions[i], &positions[j]) <= r_cut {
                lists[i].push(j);
                lists[j].push(i);
            }
        }
    }
    for l in &mut lists {
        l.sort_unstable();
    }
    lists
}

fn cell_list_unbounded(positions: &[Vec3], r_cut: f64, domain: &Domain) -> Vec<Vec<usize>> {
    if positions.is_empty() {
        return Vec::new();
    }
    let lo = positions.iter().fold(positions[0], |m, p| m.inf(p));
    // slightly oversized cells keep boundary pairs in adjacent cells despite rounding
    let size = r_cut * (1.0 + 1e-12);
    let key = |p: &Vec3| -> [i64; 3] {
        let c = (p - lo) / size;
        [c.x.floor() as i64, c.y.floor() as i64, c.z.floor() as i64]
    };
    let mut cells: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    for (i, p) in positions.iter().enumerate() {
        cells.entry(key(p)).or_default().push(i);
    }
    let mut lists = vec![Vec::new(); positions.len()];
    for (i, p) in positions.iter().enumerate() {
        let [cx, cy, cz] = key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(members) = cells.get(&[cx + dx, cy + dy, cz + dz]) {
                        for &j in members {
                            if j != i && domain.distance(p, &positions[j]) <= r_cut {
                                lists[i].push(j);
                            }
                        }
                    }
                }
            }
        }
        lists[i].sort_unstable();
    }
    lists
}

fn cell_list_periodic(positions: &[Vec3], r_cut: f64, edge: f64, cells: usize, domain: &Domain) -> Vec<Vec<usize>> {
    let n = cells as i64;
    let size = edge / cells as f64;
    let key = |p: &Vec3| -> [i64; 3] {
        let w = domain.wrap(p);
        let c = w / size;
        [
            (c.x.floor() as i64).rem_euclid(n),
            (c.y.floor() as i64).rem_euclid(n),
            (c.z.floor() as i64).rem_euclid(n),
        ]
    };
    let index = |k: [i64; 3]| (k[0] * n * n + k[1] * n + k[2]) as usize;
    let mut grid: Vec<Vec<usize>> = vec![Vec::new(); cells * cells * cells];
    for (i, p) in positions.iter().enumerate() {
        grid[index(key(p))].push(i);
    }
    let mut lists = vec![Vec::new(); positions.len()];
    for (i, p) in positions.iter().enumerate() {
        let [cx, cy, cz] = key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let k = [(cx + dx).rem_euclid(n), (cy + dy).rem_euclid(n), (cz + dz).rem_euclid(n)];
                    for &j in &grid[index(k)] {
                        if j != i && domain.distance(p, &positions[j]) <= r_cut {
                            lists[i].push(j);
                        }
                    }
                }
            }
        }
        lists[i].sort_unstable();
    }
    lists
}
