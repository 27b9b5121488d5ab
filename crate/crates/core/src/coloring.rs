//! Partial-coloring extension testing, boundary traces, and permutation-closed
//! coloring families.
//!
//! `extends` is the workhorse: exhaustive backtracking over the uncolored
//! vertices, most-constrained-vertex first, with forward pruning of available
//! color sets. Instances are small but very numerous, so the solver keeps its
//! scratch state allocated between queries.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::document::{from_json_str, to_json_string, DocumentError};
use crate::graph::Graph;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ColoringError {
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("color {color} out of range 1..={k}")]
    ColorOutOfRange { color: u8, k: u8 },
    #[error("duplicate boundary id `{0}`")]
    DuplicateBoundaryId(String),
    #[error("tuple has {got} entries, domain has {expected}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("palette size must be at least 1")]
    InvalidPalette,
    #[error("families must share domain and palette")]
    FamilyMismatch,
}

/// A partial assignment of colors `1..=k` to vertex ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialColoring {
    k: u8,
    assignment: BTreeMap<String, u8>,
}

impl PartialColoring {
    pub fn new(k: u8) -> Result<Self, ColoringError> {
        if k == 0 {
            return Err(ColoringError::InvalidPalette);
        }
        Ok(PartialColoring {
            k,
            assignment: BTreeMap::new(),
        })
    }

    pub fn from_pairs<I, S>(k: u8, pairs: I) -> Result<Self, ColoringError>
    where
        I: IntoIterator<Item = (S, u8)>,
        S: Into<String>,
    {
        let mut pc = PartialColoring::new(k)?;
        for (id, color) in pairs {
            pc.assign(id, color)?;
        }
        Ok(pc)
    }

    pub fn assign(&mut self, id: impl Into<String>, color: u8) -> Result<(), ColoringError> {
        if color == 0 || color > self.k {
            return Err(ColoringError::ColorOutOfRange { color, k: self.k });
        }
        self.assignment.insert(id.into(), color);
        Ok(())
    }

    pub fn k(&self) -> u8 {
        self.k
    }

    pub fn get(&self, id: &str) -> Option<u8> {
        self.assignment.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u8)> {
        self.assignment.iter().map(|(id, c)| (id.as_str(), *c))
    }
}

/// A set of total colorings over an ordered domain with palette size `k`.
/// Members are kept in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColoringFamily {
    domain: Vec<String>,
    k: u8,
    members: BTreeSet<Vec<u8>>,
}

impl ColoringFamily {
    pub fn new(domain: Vec<String>, k: u8) -> Result<Self, ColoringError> {
        if k == 0 {
            return Err(ColoringError::InvalidPalette);
        }
        let mut seen = BTreeSet::new();
        for id in &domain {
            if !seen.insert(id.clone()) {
                return Err(ColoringError::DuplicateBoundaryId(id.clone()));
            }
        }
        Ok(ColoringFamily {
            domain,
            k,
            members: BTreeSet::new(),
        })
    }

    pub fn with_members<I>(domain: Vec<String>, k: u8, members: I) -> Result<Self, ColoringError>
    where
        I: IntoIterator<Item = Vec<u8>>,
    {
        let mut fam = ColoringFamily::new(domain, k)?;
        for m in members {
            fam.insert(m)?;
        }
        Ok(fam)
    }

    /// All `k^|domain|` tuples.
    pub fn full(domain: Vec<String>, k: u8) -> Result<Self, ColoringError> {
        let mut fam = ColoringFamily::new(domain, k)?;
        let n = fam.domain.len();
        let mut tuple = vec![1u8; n];
        loop {
            fam.members.insert(tuple.clone());
            if !next_tuple(&mut tuple, k) {
                break;
            }
        }
        Ok(fam)
    }

    pub fn insert(&mut self, member: Vec<u8>) -> Result<bool, ColoringError> {
        if member.len() != self.domain.len() {
            return Err(ColoringError::ArityMismatch {
                expected: self.domain.len(),
                got: member.len(),
            });
        }
        for &c in &member {
            if c == 0 || c > self.k {
                return Err(ColoringError::ColorOutOfRange { color: c, k: self.k });
            }
        }
        Ok(self.members.insert(member))
    }

    pub fn domain(&self) -> &[String] {
        &self.domain
    }

    pub fn k(&self) -> u8 {
        self.k
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, tuple: &[u8]) -> bool {
        self.members.contains(tuple)
    }

    /// Members in lexicographic order.
    pub fn members(&self) -> impl Iterator<Item = &[u8]> {
        self.members.iter().map(|m| m.as_slice())
    }

    pub fn member_as_partial(&self, tuple: &[u8]) -> Result<PartialColoring, ColoringError> {
        if tuple.len() != self.domain.len() {
            return Err(ColoringError::ArityMismatch {
                expected: self.domain.len(),
                got: tuple.len(),
            });
        }
        PartialColoring::from_pairs(
            self.k,
            self.domain.iter().cloned().zip(tuple.iter().copied()),
        )
    }

    pub fn union(&self, other: &ColoringFamily) -> Result<ColoringFamily, ColoringError> {
        if self.domain != other.domain || self.k != other.k {
            return Err(ColoringError::FamilyMismatch);
        }
        let mut out = self.clone();
        out.members.extend(other.members.iter().cloned());
        Ok(out)
    }

    /// Smallest superset closed under all `k!` color permutations.
    pub fn close_under_permutations(&self) -> ColoringFamily {
        let mut out = self.clone();
        for perm in color_permutations(self.k) {
            for member in &self.members {
                out.members
                    .insert(member.iter().map(|&c| perm[(c - 1) as usize]).collect());
            }
        }
        out
    }

    pub fn is_closed(&self) -> bool {
        for perm in color_permutations(self.k) {
            for member in &self.members {
                let mapped: Vec<u8> = member.iter().map(|&c| perm[(c - 1) as usize]).collect();
                if !self.members.contains(&mapped) {
                    return false;
                }
            }
        }
        true
    }

    pub fn to_document(&self) -> String {
        let doc = FamilyDoc {
            domain: self.domain.clone(),
            k: self.k,
            members: self.members.iter().cloned().collect(),
        };
        to_json_string(&doc)
    }

    pub fn from_document(text: &str) -> Result<Self, DocumentError> {
        let doc: FamilyDoc = from_json_str(text)?;
        ColoringFamily::with_members(doc.domain, doc.k, doc.members)
            .map_err(|e| DocumentError::schema(e.to_string()))
    }
}

#[derive(Serialize, Deserialize)]
struct FamilyDoc {
    domain: Vec<String>,
    k: u8,
    members: Vec<Vec<u8>>,
}

/// All permutations of `1..=k`, as lookup tables indexed by `color - 1`.
pub fn color_permutations(k: u8) -> Vec<Vec<u8>> {
    let mut base: Vec<u8> = (1..=k).collect();
    let mut out = Vec::new();
    heap_permute(&mut base, k as usize, &mut out);
    out.sort();
    out
}

fn heap_permute(arr: &mut Vec<u8>, n: usize, out: &mut Vec<Vec<u8>>) {
    if n <= 1 {
        out.push(arr.clone());
        return;
    }
    for i in 0..n {
        heap_permute(arr, n - 1, out);
        if n % 2 == 0 {
            arr.swap(i, n - 1);
        } else {
            arr.swap(0, n - 1);
        }
    }
}

/// Advances `tuple` to its lexicographic successor over colors `1..=k`;
/// returns false after the last tuple.
pub fn next_tuple(tuple: &mut [u8], k: u8) -> bool {
    for slot in tuple.iter_mut().rev() {
        if *slot < k {
            *slot += 1;
            return true;
        }
        *slot = 1;
    }
    false
}

/// True iff some proper k-coloring of all of `g` agrees with `partial`.
pub fn extends(g: &Graph, partial: &PartialColoring) -> Result<bool, ColoringError> {
    let adj = g.adjacency();
    let mut assignment = Vec::with_capacity(partial.len());
    for (id, color) in partial.iter() {
        match adj.index_of(id) {
            Some(i) => assignment.push((i, color)),
            None => return Err(ColoringError::UnknownVertex(id.to_owned())),
        }
    }
    let mut solver = Solver::new(adj.adj.clone(), partial.k());
    Ok(solver.extends(&assignment))
}

/// The exact set of boundary colorings that extend to a proper k-coloring of
/// `g`, in canonical (lexicographic) member order.
pub fn boundary_trace(
    g: &Graph,
    boundary: &[String],
    k: u8,
) -> Result<ColoringFamily, ColoringError> {
    let adj = g.adjacency();
    let mut indices = Vec::with_capacity(boundary.len());
    for id in boundary {
        match adj.index_of(id) {
            Some(i) => indices.push(i),
            None => return Err(ColoringError::UnknownVertex(id.clone())),
        }
    }
    let mut family = ColoringFamily::new(boundary.to_vec(), k)?;
    let mut solver = Solver::new(adj.adj.clone(), k);
    let mut tuple = vec![1u8; boundary.len()];
    let mut assignment = Vec::with_capacity(boundary.len());
    loop {
        assignment.clear();
        assignment.extend(indices.iter().copied().zip(tuple.iter().copied()));
        if solver.extends(&assignment) {
            family.members.insert(tuple.clone());
        }
        if !next_tuple(&mut tuple, k) {
            break;
        }
    }
    Ok(family)
}

/// Backtracking extension solver over an indexed graph.
pub(crate) struct Solver {
    k: u8,
    full: u32,
    adj: Vec<Vec<usize>>,
    color: Vec<u8>,
    avail: Vec<u32>,
    trail: Vec<(usize, u32)>,
}

impl Solver {
    pub(crate) fn new(adj: Vec<Vec<usize>>, k: u8) -> Self {
        let n = adj.len();
        debug_assert!(k >= 1 && k <= 30);
        Solver {
            k,
            full: (1u32 << k) - 1,
            adj,
            color: vec![0; n],
            avail: vec![0; n],
            trail: Vec::with_capacity(n * k as usize),
        }
    }

    /// `assignment` maps vertex indices to colors in `1..=k`. Duplicate
    /// entries must agree.
    pub(crate) fn extends(&mut self, assignment: &[(usize, u8)]) -> bool {
        let n = self.adj.len();
        self.color.iter_mut().for_each(|c| *c = 0);
        self.avail.iter_mut().for_each(|a| *a = self.full);
        self.trail.clear();
        for &(v, c) in assignment {
            debug_assert!(c >= 1 && c <= self.k);
            if self.color[v] != 0 && self.color[v] != c {
                return false;
            }
            self.color[v] = c;
        }
        let mut remaining = 0;
        for v in 0..n {
            if self.color[v] == 0 {
                remaining += 1;
            }
        }
        // Conflicts among assigned vertices, then forward-prune their
        // neighborhoods.
        for v in 0..n {
            let c = self.color[v];
            if c == 0 {
                continue;
            }
            let bit = 1u32 << (c - 1);
            for i in 0..self.adj[v].len() {
                let u = self.adj[v][i];
                if self.color[u] == c {
                    return false;
                }
                if self.color[u] == 0 {
                    self.avail[u] &= !bit;
                }
            }
        }
        // With no assignment at all the first branching vertex can be fixed
        // to color 1: permuting colors maps solutions onto solutions.
        let lock_first = assignment.is_empty();
        self.dfs(remaining, lock_first)
    }

    fn dfs(&mut self, remaining: usize, lock_first: bool) -> bool {
        if remaining == 0 {
            return true;
        }
        // Most-constrained vertex, ties by index.
        let mut best = usize::MAX;
        let mut best_count = u32::MAX;
        for v in 0..self.color.len() {
            if self.color[v] != 0 {
                continue;
            }
            let count = self.avail[v].count_ones();
            if count < best_count {
                best_count = count;
                best = v;
                if count <= 1 {
                    break;
                }
            }
        }
        if best_count == 0 {
            return false;
        }
        let mut candidates = self.avail[best];
        if lock_first {
            candidates &= 1;
        }
        while candidates != 0 {
            let bit = candidates & candidates.wrapping_neg();
            candidates &= candidates - 1;
            let c = bit.trailing_zeros() as u8 + 1;
            self.color[best] = c;
            let checkpoint = self.trail.len();
            let mut dead = false;
            for i in 0..self.adj[best].len() {
                let u = self.adj[best][i];
                if self.color[u] == 0 && self.avail[u] & bit != 0 {
                    self.avail[u] &= !bit;
                    self.trail.push((u, bit));
                    if self.avail[u] == 0 {
                        dead = true;
                        break;
                    }
                }
            }
            if !dead && self.dfs(remaining - 1, false) {
                return true;
            }
            while self.trail.len() > checkpoint {
                let (u, b) = self.trail.pop().unwrap();
                self.avail[u] |= b;
            }
            self.color[best] = 0;
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Graph, Vertex};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

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

    fn k_n(n: usize) -> Graph {
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .collect();
        graph(n, &edges)
    }

    fn cycle(n: usize) -> Graph {
        let edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        graph(n, &edges)
    }

    /// Independent oracle: enumerate all k^n total colorings.
    fn brute_force_extends(g: &Graph, partial: &PartialColoring) -> bool {
        let adj = g.adjacency();
        let n = adj.n();
        let k = partial.k();
        if n == 0 {
            return true;
        }
        let mut tuple = vec![1u8; n];
        loop {
            let agrees = partial
                .iter()
                .all(|(id, c)| tuple[adj.index_of(id).unwrap()] == c);
            if agrees {
                let proper = (0..n).all(|v| adj.adj[v].iter().all(|&u| tuple[v] != tuple[u]));
                if proper {
                    return true;
                }
            }
            if !next_tuple(&mut tuple, k) {
                return false;
            }
        }
    }

    fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Graph {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(p) {
                    edges.push((i, j));
                }
            }
        }
        graph(n, &edges)
    }

    #[test]
    fn k4_needs_four_colors() {
        let empty3 = PartialColoring::new(3).unwrap();
        assert!(!extends(&k_n(4), &empty3).unwrap());
        let empty4 = PartialColoring::new(4).unwrap();
        assert!(extends(&k_n(4), &empty4).unwrap());
    }

    #[test]
    fn five_cycle_with_one_fixed_vertex() {
        let g = cycle(5);
        let partial = PartialColoring::from_pairs(3, [("v00", 1u8)]).unwrap();
        assert!(extends(&g, &partial).unwrap());
        assert!(brute_force_extends(&g, &partial));
    }

    #[test]
    fn unknown_vertex_in_partial() {
        let partial = PartialColoring::from_pairs(3, [("ghost", 1u8)]).unwrap();
        assert_eq!(
            extends(&k_n(3), &partial),
            Err(ColoringError::UnknownVertex("ghost".into()))
        );
    }

    #[test]
    fn color_out_of_range() {
        assert_eq!(
            PartialColoring::from_pairs(3, [("a", 4u8)]),
            Err(ColoringError::ColorOutOfRange { color: 4, k: 3 })
        );
    }

    #[test]
    fn trace_of_single_edge() {
        let g = graph(2, &[(0, 1)]);
        let fam = boundary_trace(&g, &["v00".into(), "v01".into()], 3).unwrap();
        assert_eq!(fam.len(), 6);
        assert!(fam.members().all(|m| m[0] != m[1]));
    }

    #[test]
    fn trace_of_edgeless_pair() {
        let g = graph(2, &[]);
        let fam = boundary_trace(&g, &["v00".into(), "v01".into()], 3).unwrap();
        assert_eq!(fam.len(), 9);
    }

    #[test]
    fn trace_duplicate_boundary() {
        let g = graph(2, &[(0, 1)]);
        assert_eq!(
            boundary_trace(&g, &["v00".into(), "v00".into()], 3),
            Err(ColoringError::DuplicateBoundaryId("v00".into()))
        );
    }

    #[test]
    fn closure_examples() {
        let constant =
            ColoringFamily::with_members(vec!["a".into(), "b".into()], 3, [vec![1, 1]]).unwrap();
        let closed = constant.close_under_permutations();
        assert_eq!(
            closed.members().collect::<Vec<_>>(),
            vec![&[1u8, 1][..], &[2, 2], &[3, 3]]
        );

        let empty = ColoringFamily::new(vec!["a".into()], 4).unwrap();
        assert!(empty.close_under_permutations().is_empty());

        let pair =
            ColoringFamily::with_members(vec!["a".into(), "b".into()], 3, [vec![1, 2]]).unwrap();
        let unequal = pair.close_under_permutations();
        assert_eq!(unequal.len(), 6);
        assert!(unequal.members().all(|m| m[0] != m[1]));
        // Idempotent.
        assert_eq!(unequal.close_under_permutations(), unequal);
    }

    #[test]
    fn is_closed_examples() {
        let full = ColoringFamily::full(vec!["a".into(), "b".into()], 3).unwrap();
        assert!(full.is_closed());
        let constant =
            ColoringFamily::with_members(vec!["a".into(), "b".into()], 3, [vec![1, 1]]).unwrap();
        assert!(!constant.is_closed());
        assert!(constant.close_under_permutations().is_closed());
    }

    #[test]
    fn family_document_round_trip() {
        let fam = ColoringFamily::with_members(
            vec!["z1_3".into(), "z1_4".into()],
            3,
            [vec![1, 2], vec![2, 1], vec![1, 1]],
        )
        .unwrap();
        let doc = fam.to_document();
        assert_eq!(ColoringFamily::from_document(&doc).unwrap(), fam);
    }

    #[test]
    fn family_document_rejects_bad_colors() {
        let text = r#"{"domain":["a"],"k":3,"members":[[7]]}"#;
        assert!(matches!(
            ColoringFamily::from_document(text),
            Err(DocumentError::Schema { .. })
        ));
    }

    #[test]
    fn extends_agrees_with_brute_force_on_random_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..60 {
            let n = 2 + (trial % 6);
            let g = random_graph(&mut rng, n, 0.45);
            let k = 2 + (trial % 3) as u8;
            let mut partial = PartialColoring::new(k).unwrap();
            for v in 0..n {
                if rng.random_bool(0.3) {
                    partial
                        .assign(format!("v{v:02}"), rng.random_range(1..=k))
                        .unwrap();
                }
            }
            assert_eq!(
                extends(&g, &partial).unwrap(),
                brute_force_extends(&g, &partial),
                "disagreement on trial {trial}"
            );
        }
    }

    #[test]
    fn extends_is_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let n = 3 + (rng.random_range(0..4));
            let g = random_graph(&mut rng, n, 0.4);
            let k = 3u8;
            let mut partial = PartialColoring::new(k).unwrap();
            for v in 0..n {
                if rng.random_bool(0.4) {
                    partial
                        .assign(format!("v{v:02}"), rng.random_range(1..=k))
                        .unwrap();
                }
            }
            let base = extends(&g, &partial).unwrap();
            for perm in color_permutations(k) {
                let mapped = PartialColoring::from_pairs(
                    k,
                    partial.iter().map(|(id, c)| (id, perm[(c - 1) as usize])),
                )
                .unwrap();
                assert_eq!(extends(&g, &mapped).unwrap(), base);
            }
        }
    }

    #[test]
    fn boundary_trace_is_permutation_closed_and_sound() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..25 {
            let n = 4 + rng.random_range(0..3);
            let g = random_graph(&mut rng, n, 0.45);
            let boundary: Vec<String> = vec!["v00".into(), "v01".into(), "v02".into()];
            let fam = boundary_trace(&g, &boundary, 3).unwrap();
            assert!(fam.is_closed());
            // Subset soundness: every member, fed back as a partial coloring,
            // extends.
            for member in fam.members() {
                let partial = fam.member_as_partial(member).unwrap();
                assert!(extends(&g, &partial).unwrap());
            }
        }
    }

    #[test]
    fn adding_an_edge_shrinks_the_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..25 {
            let n = 5;
            let g = random_graph(&mut rng, n, 0.35);
            let mut missing = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if !g.has_edge(&format!("v{i:02}"), &format!("v{j:02}")) {
                        missing.push((i, j));
                    }
                }
            }
            if missing.is_empty() {
                continue;
            }
            let (a, b) = missing[rng.random_range(0..missing.len())];
            let bigger = g
                .glue(&graph(n, &[(a, b)]))
                .unwrap();
            let boundary: Vec<String> = vec!["v00".into(), "v01".into()];
            let before = boundary_trace(&g, &boundary, 3).unwrap();
            let after = boundary_trace(&bigger, &boundary, 3).unwrap();
            for member in after.members() {
                assert!(before.contains(member));
            }
        }
    }
}
