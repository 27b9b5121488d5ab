//! Planarity testing, plus the constrained variant "planar with a prescribed
//! vertex set on the outer face in a prescribed cyclic order".
//!
//! The constrained test reduces to the unconstrained one by augmentation: add
//! a cycle through the boundary in the prescribed order and one apex vertex
//! adjacent to every boundary vertex. The augmented graph is planar exactly
//! when the original admits an embedding with the boundary on the outer face
//! in that cyclic order (up to rotation and reflection; re-embedding with the
//! reversed orientation is always possible).

use rustworkx_core::petgraph::graph::UnGraph;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PlanarityError {
    #[error("unknown vertex id `{0}`")]
    UnknownId(String),
    #[error("duplicate boundary id `{0}`")]
    DuplicateBoundaryId(String),
}

/// An ordered list of distinct vertex ids, interpreted cyclically.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct CyclicBoundary {
    order: Vec<String>,
}

impl CyclicBoundary {
    pub fn new(order: Vec<String>) -> Result<Self, PlanarityError> {
        let mut seen = std::collections::BTreeSet::new();
        for id in &order {
            if !seen.insert(id.clone()) {
                return Err(PlanarityError::DuplicateBoundaryId(id.clone()));
            }
        }
        Ok(CyclicBoundary { order })
    }

    pub fn empty() -> Self {
        CyclicBoundary { order: Vec::new() }
    }

    pub fn order(&self) -> &[String] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn rotated(&self, by: usize) -> Self {
        if self.order.is_empty() {
            return self.clone();
        }
        let mut order = self.order.clone();
        let len = order.len();
        order.rotate_left(by % len);
        CyclicBoundary { order }
    }

    pub fn reversed(&self) -> Self {
        let mut order = self.order.clone();
        order.reverse();
        CyclicBoundary { order }
    }
}

impl<'de> Deserialize<'de> for CyclicBoundary {
    fn deserialize<D>(deserializer: D) -> Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        let order = Vec::<String>::deserialize(deserializer)?;
        CyclicBoundary::new(order).map_err(serde::de::Error::custom)
    }
}

/// Exact planarity test.
pub fn is_planar(g: &Graph) -> bool {
    let adj = g.adjacency();
    let edges: Vec<(u32, u32)> = g
        .edges()
        .map(|(a, b)| (adj.index[a] as u32, adj.index[b] as u32))
        .collect();
    planar_indexed(adj.n(), &edges)
}

/// True when `g` embeds in the plane with all of `b` on the outer face,
/// appearing in the cyclic order of `b` (either orientation accepted).
pub fn planar_with_boundary(g: &Graph, b: &CyclicBoundary) -> Result<bool, PlanarityError> {
    let adj = g.adjacency();
    let mut boundary = Vec::with_capacity(b.len());
    for id in b.order() {
        match adj.index_of(id) {
            Some(i) => boundary.push(i as u32),
            None => return Err(PlanarityError::UnknownId(id.clone())),
        }
    }
    let edges: Vec<(u32, u32)> = g
        .edges()
        .map(|(x, y)| (adj.index[x] as u32, adj.index[y] as u32))
        .collect();
    Ok(planar_with_boundary_indexed(adj.n(), &edges, &boundary))
}

/// Index-level core of `is_planar`, shared with the realizer search hot loop.
pub(crate) fn planar_indexed(n: usize, edges: &[(u32, u32)]) -> bool {
    if n <= 4 {
        return true;
    }
    if edges.len() > 3 * n - 6 {
        return false;
    }
    let mut g = UnGraph::<(), ()>::with_capacity(n, edges.len());
    for _ in 0..n {
        g.add_node(());
    }
    for &(a, b) in edges {
        g.add_edge(a.into(), b.into(), ());
    }
    rustworkx_core::planar::is_planar(&g)
}

/// Index-level core of `planar_with_boundary`: augment with the boundary
/// cycle and an apex, then test planarity.
pub(crate) fn planar_with_boundary_indexed(n: usize, edges: &[(u32, u32)], boundary: &[u32]) -> bool {
    if boundary.is_empty() {
        return planar_indexed(n, edges);
    }
    let mut aug: Vec<(u32, u32)> = edges.to_vec();
    let b = boundary.len();
    if b >= 3 {
        for i in 0..b {
            let (x, y) = (boundary[i], boundary[(i + 1) % b]);
            if !edges.iter().any(|&(a, c)| (a, c) == (x, y) || (a, c) == (y, x)) {
                aug.push((x, y));
            }
        }
    }
    let apex = n as u32;
    for &x in boundary {
        aug.push((apex, x));
    }
    planar_indexed(n + 1, &aug)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Graph, Vertex};

    fn graph(n: usize, edges: &[(usize, usize)]) -> Graph {
        let vertices = (0..n)
            .map(|i| Vertex::internal(format!("v{i:02}")))
            .collect();
        let edges = edges
            .iter()
            .map(|(a, b)| (format!("v{a:02}"), format!("v{b:02}")))
            .collect::<Vec<_>>();
        Graph::build("g", vertices, edges).unwrap()
    }

    fn boundary(ids: &[usize]) -> CyclicBoundary {
        CyclicBoundary::new(ids.iter().map(|i| format!("v{i:02}")).collect()).unwrap()
    }

    fn k(n: usize) -> Graph {
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .collect();
        graph(n, &edges)
    }

    #[test]
    fn kuratowski_cases() {
        assert!(is_planar(&k(4)));
        assert!(!is_planar(&k(5)));
        let k33 = graph(
            6,
            &[(0, 3), (0, 4), (0, 5), (1, 3), (1, 4), (1, 5), (2, 3), (2, 4), (2, 5)],
        );
        assert!(!is_planar(&k33));
    }

    #[test]
    fn four_cycle_boundary_orders() {
        let c4 = graph(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        assert!(planar_with_boundary(&c4, &boundary(&[0, 1, 2, 3])).unwrap());
        // Crossing order forces crossing chords.
        assert!(!planar_with_boundary(&c4, &boundary(&[0, 2, 1, 3])).unwrap());
    }

    #[test]
    fn k4_is_not_outerplanar() {
        assert!(!planar_with_boundary(&k(4), &boundary(&[0, 1, 2, 3])).unwrap());
        // But any three of its vertices can share the outer face.
        assert!(planar_with_boundary(&k(4), &boundary(&[0, 1, 2])).unwrap());
    }

    #[test]
    fn empty_boundary_is_plain_planarity() {
        let g = graph(5, &[(0, 1), (2, 3)]);
        assert_eq!(planar_with_boundary(&g, &CyclicBoundary::empty()).unwrap(), is_planar(&g));
        assert_eq!(planar_with_boundary(&k(5), &CyclicBoundary::empty()).unwrap(), false);
    }

    #[test]
    fn rotation_and_reflection_invariance() {
        let g = graph(5, &[(0, 1), (1, 2), (2, 3), (3, 0), (0, 4), (4, 2)]);
        let b = boundary(&[0, 1, 2, 3]);
        let base = planar_with_boundary(&g, &b).unwrap();
        for by in 1..4 {
            assert_eq!(planar_with_boundary(&g, &b.rotated(by)).unwrap(), base);
        }
        assert_eq!(planar_with_boundary(&g, &b.reversed()).unwrap(), base);
    }

    #[test]
    fn unknown_boundary_id() {
        let g = graph(2, &[(0, 1)]);
        let b = CyclicBoundary::new(vec!["missing".into()]).unwrap();
        assert_eq!(
            planar_with_boundary(&g, &b),
            Err(PlanarityError::UnknownId("missing".into()))
        );
    }

    #[test]
    fn duplicate_boundary_id_rejected() {
        assert_eq!(
            CyclicBoundary::new(vec!["a".into(), "a".into()]),
            Err(PlanarityError::DuplicateBoundaryId("a".into()))
        );
    }

    #[test]
    fn agrees_with_the_forbidden_minor_characterization() {
        // Planar iff neither K5 nor K3,3 is a minor; the minor search is a
        // fully independent code path.
        use crate::minor::{find_model, RootConstraint, SearchBudget};
        use rand::{Rng, SeedableRng};
        use rand_chacha::ChaCha8Rng;

        let k33_pattern = graph(
            6,
            &[(0, 3), (0, 4), (0, 5), (1, 3), (1, 4), (1, 5), (2, 3), (2, 4), (2, 5)],
        );
        let k5_pattern = k(5);
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let mut planar_seen = 0;
        let mut nonplanar_seen = 0;
        for trial in 0..40 {
            let n = 5 + trial % 4;
            let mut edges = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if rng.random_bool(0.55) {
                        edges.push((i, j));
                    }
                }
            }
            let g = graph(n, &edges);
            let has_k5 = find_model(&g, &k5_pattern, &RootConstraint::Unrooted, SearchBudget::default())
                .unwrap()
                .is_some();
            let has_k33 = find_model(&g, &k33_pattern, &RootConstraint::Unrooted, SearchBudget::default())
                .unwrap()
                .is_some();
            let planar = is_planar(&g);
            assert_eq!(planar, !has_k5 && !has_k33, "trial {trial}: {edges:?}");
            if planar {
                planar_seen += 1;
            } else {
                nonplanar_seen += 1;
            }
        }
        assert!(planar_seen > 0 && nonplanar_seen > 0, "corpus covers both answers");
    }

    #[test]
    fn two_vertices_must_share_a_face() {
        // Octahedron: every face is a triangle and antipodal vertices are
        // non-adjacent, so no embedding puts an antipodal pair on one face.
        let octa = graph(
            6,
            &[
                (0, 2), (0, 3), (0, 4), (0, 5),
                (1, 2), (1, 3), (1, 4), (1, 5),
                (2, 4), (4, 3), (3, 5), (5, 2),
            ],
        );
        assert!(is_planar(&octa));
        assert!(!planar_with_boundary(&octa, &boundary(&[0, 1])).unwrap());
        assert!(planar_with_boundary(&octa, &boundary(&[0, 2])).unwrap());
    }
}
