use std::ops::Range;

use super::neighbor::neighbor_search;
use crate::error::{invalid, Result};
use crate::oracle::{Domain, Vec3};

/// Directed three-body hyperedge: the velocity of `target` induced by the force
/// on `source`, mediated by `passing`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Face {
    pub target: usize,
    pub passing: usize,
    pub source: usize,
}

/// Vertices, all-to-all directed edges and cutoff-limited directed faces.
///
/// A graph covers a contiguous range of target vertices; the full graph covers
/// every vertex, partitions cover disjoint slices. Edges are complete, so they
/// are enumerated on demand rather than stored.
#[derive(Debug, Clone, PartialEq)]
pub struct HiGraph {
    vertex_count: usize,
    targets: Range<usize>,
    faces: Vec<Face>,
    /// `faces[face_offsets[t]..face_offsets[t + 1]]` target vertex `targets.start + t`.
    face_offsets: Vec<usize>,
    r_cut: f64,
    domain: Domain,
}

impl HiGraph {
    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn targets(&self) -> Range<usize> {
        self.targets.clone()
    }

    pub fn r_cut(&self) -> f64 {
        self.r_cut
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() * self.vertex_count.saturating_sub(1)
    }

    /// `(target, source)` pairs sorted by target, then source.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.vertex_count;
        self.targets
            .clone()
            .flat_map(move |i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    /// Faces whose target is `target` (empty if `target` is outside this graph's range).
    pub fn faces_of(&self, target: usize) -> &[Face] {
        if !self.targets.contains(&target) {
            return &[];
        }
        let t = target - self.targets.start;
        &self.faces[self.face_offsets[t]..self.face_offsets[t + 1]]
    }

    /// Restriction to a sub-range of this graph's targets.
    pub(crate) fn restrict(&self, range: Range<usize>) -> HiGraph {
        debug_assert!(range.start >= self.targets.start && range.end <= self.targets.end);
        let lo = range.start - self.targets.start;
        let hi = range.end - self.targets.start;
        let base = self.face_offsets[lo];
        HiGraph {
            vertex_count: self.vertex_count,
            faces: self.faces[base..self.face_offsets[hi]].to_vec(),
            face_offsets: self.face_offsets[lo..=hi].iter().map(|o| o - base).collect(),
            targets: range,
            r_cut: self.r_cut,
            domain: self.domain,
        }
    }
}

/// Builds the graph of a configuration: `N(N-1)` edges and every face `(i, k, j)`
/// with `i != j` and both `i` and `j` within `r_cut` of `k`.
pub fn build_graph(positions: &[Vec3], domain: &Domain, r_cut: f64) -> Result<HiGraph> {
    if !(r_cut.is_finite() && r_cut > 0.0) {
        return Err(invalid("r_cut", format!("must be positive, got {r_cut}")));
    }
    let n = positions.len();
    let nbrs = neighbor_search(positions, r_cut, domain)?;
    let mut faces = Vec::new();
    let mut face_offsets = Vec::with_capacity(n + 1);
    face_offsets.push(0);
    for (i, list) in nbrs.iter().enumerate() {
        for &k in list {
            for &j in &nbrs[k] {
                if j != i {
                    faces.push(Face { target: i, passing: k, source: j });
                }
            }
        }
        face_offsets.push(faces.len());
    }
    Ok(HiGraph {
        vertex_count: n,
        targets: 0..n,
        faces,
        face_offsets,
        r_cut,
        domain: *domain,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_faces(p: &[Vec3], d: &Domain, r: f64) -> Vec<Face> {
        let n = p.len();
        let mut out = Vec::new();
        for i in 0..n {
            for k in 0..n {
                for j in 0..n {
                    if i != j && k != i && k != j && d.distance(&p[i], &p[k]) <= r && d.distance(&p[j], &p[k]) <= r {
                        out.push(Face { target: i, passing: k, source: j });
                    }
                }
            }
        }
        out
    }

    #[test]
    fn small_graph_counts() {
        let d = Domain::Unbounded;
        let g = build_graph(&[Vec3::zeros()], &d, 5.0).unwrap();
        assert_eq!((g.edge_count(), g.face_count()), (0, 0));
        assert_eq!(g.edges().count(), 0);

        let four: Vec<Vec3> = (0..4).map(|i| Vec3::new(3.0 * i as f64, 0.0, 0.0)).collect();
        assert_eq!(build_graph(&four, &d, 5.0).unwrap().edges().count(), 12);

        let close = vec![Vec3::zeros(), Vec3::new(2.5, 0.0, 0.0), Vec3::new(0.0, 2.5, 0.0)];
        let g = build_graph(&close, &d, 5.0).unwrap();
        assert_eq!(g.face_count(), 6);
        assert_eq!(g.faces(), brute_faces(&close, &d, 5.0).as_slice());

        let far = vec![Vec3::zeros(), Vec3::new(10.0, 0.0, 0.0), Vec3::new(0.0, 10.0, 0.0)];
        let g = build_graph(&far, &d, 5.0).unwrap();
        assert_eq!((g.edge_count(), g.face_count()), (6, 0));
    }

    #[test]
    fn chain_faces_need_a_shared_passing_vertex() {
        // 0 - 1 - 2 spaced 3 apart, cutoff 4: only k = 1 connects 0 and 2
        let p: Vec<Vec3> = (0..3).map(|i| Vec3::new(3.0 * i as f64, 0.0, 0.0)).collect();
        let g = build_graph(&p, &Domain::Unbounded, 4.0).unwrap();
        let expect = vec![Face { target: 0, passing: 1, source: 2 }, Face { target: 2, passing: 1, source: 0 }];
        assert_eq!(g.faces(), expect.as_slice());
        assert_eq!(g.faces_of(1), &[]);
        assert_eq!(g.faces_of(2), &expect[1..]);
    }

    #[test]
    fn edges_are_sorted_and_complete() {
        let p: Vec<Vec3> = (0..5).map(|i| Vec3::new(3.0 * i as f64, 0.0, 0.0)).collect();
        let g = build_graph(&p, &Domain::Unbounded, 4.0).unwrap();
        let e: Vec<_> = g.edges().collect();
        let mut sorted = e.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(e, sorted);
        assert_eq!(e.len(), 20);
        assert!(e.iter().all(|(t, s)| t != s));
    }

    #[test]
    fn periodic_faces_use_minimum_image() {
        let d = Domain::Periodic { edge: 20.0 };
        let p = vec![Vec3::new(1.0, 1.0, 1.0), Vec3::new(19.0, 1.0, 1.0), Vec3::new(1.0, 19.5, 1.0)];
        let g = build_graph(&p, &d, 5.0).unwrap();
        assert_eq!(g.faces(), brute_faces(&p, &d, 5.0).as_slice());
        assert_eq!(g.face_count(), 6);
    }
}
