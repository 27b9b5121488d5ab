//! Immutable simple graphs with role-tagged, string-identified vertices.
//!
//! Vertex identity doubles as the gluing mechanism: composing two graphs
//! merges vertices that share an id, so gadget instantiation namespaces its
//! internal vertices while terminals keep caller-supplied ids. All operations
//! are pure; every constructor canonicalizes (vertices sorted by id, edges as
//! sorted pairs) so serialization is byte-stable.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::document::{from_json_str, to_json_string, DocumentError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum VertexRole {
    X,
    Y,
    Z,
    #[serde(rename = "internal")]
    Internal,
}

impl std::fmt::Display for VertexRole {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VertexRole::X => write!(f, "X"),
            VertexRole::Y => write!(f, "Y"),
            VertexRole::Z => write!(f, "Z"),
            VertexRole::Internal => write!(f, "internal"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: String,
    pub role: VertexRole,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<String>,
}

impl Vertex {
    pub fn new(id: impl Into<String>, role: VertexRole) -> Self {
        Vertex {
            id: id.into(),
            role,
            tags: Vec::new(),
        }
    }

    pub fn internal(id: impl Into<String>) -> Self {
        Vertex::new(id, VertexRole::Internal)
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tags.push(tag.into());
        self
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("duplicate vertex id `{0}`")]
    DuplicateId(String),
    #[error("edge ({0}, {1}) refers to undeclared vertex `{1}`")]
    UnknownEndpoint(String, String),
    #[error("loop edge at `{0}`")]
    LoopEdge(String),
    #[error("vertex `{id}` declared with conflicting roles {left} and {right}")]
    RoleConflict {
        id: String,
        left: VertexRole,
        right: VertexRole,
    },
    #[error("new vertex id `{0}` already present")]
    IdCollision(String),
    #[error("unknown target vertex `{0}`")]
    UnknownTarget(String),
    #[error("unknown vertex id `{0}`")]
    UnknownId(String),
    #[error("operation requires a non-empty vertex selection")]
    EmptySelection,
}

/// A finite simple undirected graph. No loops, no parallel edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    name: String,
    vertices: Vec<Vertex>,
    edges: BTreeSet<(String, String)>,
}

fn norm_edge(a: String, b: String) -> Result<(String, String), GraphError> {
    match a.cmp(&b) {
        std::cmp::Ordering::Less => Ok((a, b)),
        std::cmp::Ordering::Greater => Ok((b, a)),
        std::cmp::Ordering::Equal => Err(GraphError::LoopEdge(a)),
    }
}

impl Graph {
    /// Builds a graph from vertex descriptors and an edge list. Edges are
    /// deduplicated into a set; vertices and edges are stored canonically.
    pub fn build(
        name: impl Into<String>,
        vertices: Vec<Vertex>,
        edges: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Graph, GraphError> {
        let mut seen: BTreeMap<String, Vertex> = BTreeMap::new();
        for mut v in vertices {
            if seen.contains_key(&v.id) {
                return Err(GraphError::DuplicateId(v.id));
            }
            v.tags.sort();
            v.tags.dedup();
            seen.insert(v.id.clone(), v);
        }
        let mut edge_set = BTreeSet::new();
        for (a, b) in edges {
            for end in [&a, &b] {
                if !seen.contains_key(end) {
                    return Err(GraphError::UnknownEndpoint(a.clone(), end.clone()));
                }
            }
            edge_set.insert(norm_edge(a, b)?);
        }
        Ok(Graph {
            name: name.into(),
            vertices: seen.into_values().collect(),
            edges: edge_set,
        })
    }

    pub fn empty(name: impl Into<String>) -> Graph {
        Graph {
            name: name.into(),
            vertices: Vec::new(),
            edges: BTreeSet::new(),
        }
    }

    /// Complete graph on `t` vertices named `{prefix}1..{prefix}t`.
    pub fn complete(name: impl Into<String>, prefix: &str, t: usize) -> Graph {
        let ids: Vec<String> = (1..=t).map(|i| format!("{prefix}{i}")).collect();
        let vertices = ids.iter().map(|id| Vertex::internal(id.clone())).collect();
        let mut edges = Vec::new();
        for i in 0..t {
            for j in i + 1..t {
                edges.push((ids[i].clone(), ids[j].clone()));
            }
        }
        Graph::build(name, vertices, edges).expect("complete graph construction")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Graph {
        self.name = name.into();
        self
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Vertices in canonical (id-sorted) order.
    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.vertices.iter().map(|v| v.id.as_str())
    }

    pub fn id_set(&self) -> BTreeSet<String> {
        self.ids().map(str::to_owned).collect()
    }

    pub fn vertex(&self, id: &str) -> Option<&Vertex> {
        self.vertices
            .binary_search_by(|v| v.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.vertices[i])
    }

    pub fn has_vertex(&self, id: &str) -> bool {
        self.vertex(id).is_some()
    }

    pub fn has_edge(&self, a: &str, b: &str) -> bool {
        let (x, y) = if a <= b { (a, b) } else { (b, a) };
        self.edges.contains(&(x.to_owned(), y.to_owned()))
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> {
        self.edges.iter().map(|(a, b)| (a.as_str(), b.as_str()))
    }

    pub fn ids_with_role(&self, role: VertexRole) -> Vec<String> {
        self.vertices
            .iter()
            .filter(|v| v.role == role)
            .map(|v| v.id.clone())
            .collect()
    }

    /// Union by vertex id: shared ids must carry the same role; their tags are
    /// merged. Edge sets union, so would-be parallel edges collapse.
    pub fn glue(&self, other: &Graph) -> Result<Graph, GraphError> {
        let mut merged: BTreeMap<String, Vertex> = BTreeMap::new();
        for v in self.vertices.iter().chain(other.vertices.iter()) {
            match merged.get_mut(&v.id) {
                None => {
                    merged.insert(v.id.clone(), v.clone());
                }
                Some(existing) => {
                    if existing.role != v.role {
                        return Err(GraphError::RoleConflict {
                            id: v.id.clone(),
                            left: existing.role,
                            right: v.role,
                        });
                    }
                    existing.tags.extend(v.tags.iter().cloned());
                    existing.tags.sort();
                    existing.tags.dedup();
                }
            }
        }
        let edges = self.edges.union(&other.edges).cloned().collect();
        Ok(Graph {
            name: self.name.clone(),
            vertices: merged.into_values().collect(),
            edges,
        })
    }

    /// Adds each new vertex with edges to every target. The new vertices are
    /// not made adjacent to each other; a later `clique_on` can do that.
    pub fn add_universal_vertices(
        &self,
        new: &[Vertex],
        targets: &BTreeSet<String>,
    ) -> Result<Graph, GraphError> {
        for t in targets {
            if !self.has_vertex(t) {
                return Err(GraphError::UnknownTarget(t.clone()));
            }
        }
        let mut result = self.clone();
        for v in new {
            if result.has_vertex(&v.id) {
                return Err(GraphError::IdCollision(v.id.clone()));
            }
            let mut v = v.clone();
            v.tags.sort();
            v.tags.dedup();
            for t in targets {
                result.edges.insert(norm_edge(v.id.clone(), t.clone())?);
            }
            result.vertices.push(v);
        }
        result.vertices.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(result)
    }

    /// Adds every missing edge among `ids`.
    pub fn clique_on(&self, ids: &BTreeSet<String>) -> Result<Graph, GraphError> {
        if ids.is_empty() {
            return Err(GraphError::EmptySelection);
        }
        for id in ids {
            if !self.has_vertex(id) {
                return Err(GraphError::UnknownId(id.clone()));
            }
        }
        let mut result = self.clone();
        let ids: Vec<&String> = ids.iter().collect();
        for i in 0..ids.len() {
            for j in i + 1..ids.len() {
                result
                    .edges
                    .insert(norm_edge(ids[i].clone(), ids[j].clone())?);
            }
        }
        Ok(result)
    }

    pub fn induces_clique(&self, ids: &BTreeSet<String>) -> bool {
        let ids: Vec<&String> = ids.iter().collect();
        for i in 0..ids.len() {
            if !self.has_vertex(ids[i]) {
                return false;
            }
            for j in i + 1..ids.len() {
                if !self.has_edge(ids[i], ids[j]) {
                    return false;
                }
            }
        }
        true
    }

    /// Same vertex ids and roles and the same edge set; name and tags ignored.
    pub fn same_structure(&self, other: &Graph) -> bool {
        self.vertices.len() == other.vertices.len()
            && self
                .vertices
                .iter()
                .zip(other.vertices.iter())
                .all(|(a, b)| a.id == b.id && a.role == b.role)
            && self.edges == other.edges
    }

    /// True when both graphs have the same vertex ids and every edge of
    /// `self` is an edge of `other`.
    pub fn is_spanning_subgraph_of(&self, other: &Graph) -> bool {
        self.vertices.len() == other.vertices.len()
            && self
                .vertices
                .iter()
                .zip(other.vertices.iter())
                .all(|(a, b)| a.id == b.id)
            && self.edges.is_subset(&other.edges)
    }

    pub fn with_role_overrides(
        &self,
        overrides: &BTreeMap<String, VertexRole>,
    ) -> Result<Graph, GraphError> {
        for id in overrides.keys() {
            if !self.has_vertex(id) {
                return Err(GraphError::UnknownId(id.clone()));
            }
        }
        let mut result = self.clone();
        for v in &mut result.vertices {
            if let Some(role) = overrides.get(&v.id) {
                v.role = *role;
            }
        }
        Ok(result)
    }

    /// Index-based adjacency view for search algorithms. Vertex order matches
    /// `vertices()` (canonical id order).
    pub fn adjacency(&self) -> Adjacency {
        let ids: Vec<String> = self.ids().map(str::to_owned).collect();
        let index: BTreeMap<String, usize> = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();
        let mut adj = vec![Vec::new(); ids.len()];
        for (a, b) in &self.edges {
            let (i, j) = (index[a], index[b]);
            adj[i].push(j);
            adj[j].push(i);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Adjacency { ids, index, adj }
    }

    pub fn to_dot(&self) -> String {
        fn quote(s: &str) -> String {
            format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
        }
        let mut out = String::new();
        let _ = writeln!(out, "graph {} {{", quote(&self.name));
        for v in &self.vertices {
            let _ = writeln!(out, "  {} [role={}];", quote(&v.id), quote(&v.role.to_string()));
        }
        for (a, b) in &self.edges {
            let _ = writeln!(out, "  {} -- {};", quote(a), quote(b));
        }
        out.push_str("}\n");
        out
    }

    /// Canonical text document; byte-stable for structurally equal graphs.
    pub fn to_document(&self) -> String {
        to_json_string(&GraphDoc::from(self))
    }

    pub fn from_document(text: &str) -> Result<Graph, DocumentError> {
        from_json_str(text)
    }
}

#[derive(Serialize, Deserialize)]
struct GraphDoc {
    name: String,
    vertices: Vec<Vertex>,
    edges: Vec<[String; 2]>,
}

impl From<&Graph> for GraphDoc {
    fn from(g: &Graph) -> Self {
        GraphDoc {
            name: g.name.clone(),
            vertices: g.vertices.clone(),
            edges: g.edges.iter().map(|(a, b)| [a.clone(), b.clone()]).collect(),
        }
    }
}

impl Serialize for Graph {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        GraphDoc::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Graph {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let doc = GraphDoc::deserialize(deserializer)?;
        Graph::build(
            doc.name,
            doc.vertices,
            doc.edges.into_iter().map(|[a, b]| (a, b)),
        )
        .map_err(serde::de::Error::custom)
    }
}

/// Adjacency lists over `0..n`, with the id mapping kept alongside.
pub struct Adjacency {
    pub ids: Vec<String>,
    pub index: BTreeMap<String, usize>,
    pub adj: Vec<Vec<usize>>,
}

impl Adjacency {
    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[&str]) -> Vec<Vertex> {
        v.iter().map(|id| Vertex::internal(*id)).collect()
    }

    fn e(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect()
    }

    fn triangle(a: &str, b: &str, c: &str) -> Graph {
        Graph::build("t", ids(&[a, b, c]), e(&[(a, b), (b, c), (a, c)])).unwrap()
    }

    #[test]
    fn build_triangle() {
        let g = triangle("a", "b", "c");
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(g.edge_count(), 3);
        assert!(g.has_edge("a", "b"));
        assert!(g.has_edge("b", "a"));
    }

    #[test]
    fn build_single_vertex() {
        let g = Graph::build("one", ids(&["a"]), e(&[])).unwrap();
        assert_eq!(g.vertex_count(), 1);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn build_diamond_is_k4_minus_edge() {
        // K_4 minus (u, v): 4 vertices, 5 edges.
        let g = Graph::build(
            "diamond",
            ids(&["u", "v", "p", "q"]),
            e(&[("u", "p"), ("u", "q"), ("v", "p"), ("v", "q"), ("p", "q")]),
        )
        .unwrap();
        assert_eq!(g.vertex_count(), 4);
        assert_eq!(g.edge_count(), 5);
        assert!(!g.has_edge("u", "v"));
    }

    #[test]
    fn build_rejects_bad_input() {
        assert_eq!(
            Graph::build("g", ids(&["a", "a"]), e(&[])),
            Err(GraphError::DuplicateId("a".into()))
        );
        assert_eq!(
            Graph::build("g", ids(&["a"]), e(&[("a", "b")])),
            Err(GraphError::UnknownEndpoint("a".into(), "b".into()))
        );
        assert_eq!(
            Graph::build("g", ids(&["a"]), e(&[("a", "a")])),
            Err(GraphError::LoopEdge("a".into()))
        );
    }

    #[test]
    fn edges_deduplicate() {
        let g = Graph::build("g", ids(&["a", "b"]), e(&[("a", "b"), ("b", "a")])).unwrap();
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn glue_shares_edges() {
        let g = triangle("a", "b", "c").glue(&triangle("a", "c", "d")).unwrap();
        assert_eq!(g.vertex_count(), 4);
        assert_eq!(g.edge_count(), 5); // edge ac not duplicated
    }

    #[test]
    fn glue_with_empty_is_identity() {
        let g = triangle("a", "b", "c");
        let glued = g.glue(&Graph::empty("nothing")).unwrap();
        assert_eq!(glued, g);
    }

    #[test]
    fn glue_commutative_up_to_structure() {
        let g1 = triangle("a", "b", "c");
        let g2 = Graph::build("h", ids(&["b", "d"]), e(&[("b", "d")])).unwrap();
        let left = g1.glue(&g2).unwrap();
        let right = g2.glue(&g1).unwrap();
        assert!(left.same_structure(&right));
    }

    #[test]
    fn glue_role_conflict() {
        let g1 = Graph::build("g", vec![Vertex::new("a", VertexRole::X)], e(&[])).unwrap();
        let g2 = Graph::build("h", vec![Vertex::new("a", VertexRole::Z)], e(&[])).unwrap();
        assert!(matches!(
            g1.glue(&g2),
            Err(GraphError::RoleConflict { .. })
        ));
    }

    #[test]
    fn universal_vertex_over_triangle_is_k4() {
        let g = triangle("a", "b", "c")
            .add_universal_vertices(&[Vertex::internal("d")], &triangle("a", "b", "c").id_set())
            .unwrap();
        assert_eq!(g.edge_count(), 6);
        assert!(g.induces_clique(&g.id_set()));
    }

    #[test]
    fn universal_vertices_not_mutually_adjacent() {
        let base = Graph::build("g", ids(&["v"]), e(&[])).unwrap();
        let g = base
            .add_universal_vertices(
                &[Vertex::internal("y4"), Vertex::internal("y5")],
                &base.id_set(),
            )
            .unwrap();
        assert_eq!(g.edge_count(), 2);
        assert!(!g.has_edge("y4", "y5"));
    }

    #[test]
    fn universal_vertex_errors() {
        let base = triangle("a", "b", "c");
        assert_eq!(
            base.add_universal_vertices(&[Vertex::internal("a")], &base.id_set()),
            Err(GraphError::IdCollision("a".into()))
        );
        let mut bad = BTreeSet::new();
        bad.insert("zz".to_string());
        assert_eq!(
            base.add_universal_vertices(&[Vertex::internal("d")], &bad),
            Err(GraphError::UnknownTarget("zz".into()))
        );
    }

    #[test]
    fn clique_on_completes_and_is_idempotent() {
        let g = Graph::build("g", ids(&["a", "b", "c"]), e(&[])).unwrap();
        let k3 = g.clique_on(&g.id_set()).unwrap();
        assert_eq!(k3.edge_count(), 3);
        let again = k3.clique_on(&k3.id_set()).unwrap();
        assert_eq!(again, k3);
    }

    #[test]
    fn clique_on_unknown_id() {
        let g = triangle("a", "b", "c");
        let mut sel = BTreeSet::new();
        sel.insert("nope".to_string());
        assert_eq!(g.clique_on(&sel), Err(GraphError::UnknownId("nope".into())));
    }

    #[test]
    fn clique_edge_count_formula() {
        // |E(clique_on(g, S))| = |E(g)| + C(|S|,2) - (edges already inside S)
        let g = Graph::build(
            "g",
            ids(&["a", "b", "c", "d", "e"]),
            e(&[("a", "b"), ("c", "d"), ("a", "e")]),
        )
        .unwrap();
        let sel: BTreeSet<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        let inside = g
            .edges()
            .filter(|(x, y)| sel.contains(*x) && sel.contains(*y))
            .count();
        let done = g.clique_on(&sel).unwrap();
        assert_eq!(done.edge_count(), g.edge_count() + 6 - inside);
    }

    #[test]
    fn document_round_trip() {
        let g = Graph::build(
            "mixed",
            vec![
                Vertex::new("x1", VertexRole::X).with_tag("root"),
                Vertex::new("z1_3", VertexRole::Z),
                Vertex::internal("p1"),
            ],
            e(&[("x1", "z1_3"), ("p1", "z1_3")]),
        )
        .unwrap();
        let doc = g.to_document();
        let back = Graph::from_document(&doc).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn document_canonical_bytes() {
        let g1 = Graph::build("g", ids(&["a", "b", "c"]), e(&[("a", "b"), ("b", "c")])).unwrap();
        let g2 = Graph::build("g", ids(&["c", "a", "b"]), e(&[("c", "b"), ("b", "a")])).unwrap();
        assert_eq!(g1.to_document(), g2.to_document());
    }

    #[test]
    fn document_unknown_role_is_schema_violation() {
        let text = r#"{"name":"g","vertices":[{"id":"a","role":"W"}],"edges":[]}"#;
        match Graph::from_document(text) {
            Err(DocumentError::Schema { .. }) => {}
            other => panic!("expected schema violation, got {other:?}"),
        }
    }

    #[test]
    fn document_bad_json_is_parse_error() {
        match Graph::from_document("{not json") {
            Err(DocumentError::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn dot_output() {
        let single = Graph::build("g", ids(&["a", "b"]), e(&[("a", "b")])).unwrap();
        let dot = single.to_dot();
        assert!(dot.contains("\"a\" -- \"b\";"));
        assert!(dot.starts_with("graph \"g\" {"));

        let empty = Graph::empty("none");
        assert_eq!(empty.to_dot(), "graph \"none\" {\n}\n");
    }

    #[test]
    fn role_overrides() {
        let g = triangle("a", "b", "c");
        let mut m = BTreeMap::new();
        m.insert("a".to_string(), VertexRole::X);
        let g2 = g.with_role_overrides(&m).unwrap();
        assert_eq!(g2.vertex("a").unwrap().role, VertexRole::X);
        assert!(g.same_structure(&g) && !g.same_structure(&g2));
    }
}
