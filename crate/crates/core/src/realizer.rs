//! Producing and verifying plane graphs that realize a permutation-closed set
//! of 3-colorings of a cyclically ordered boundary.
//!
//! Any graph at all can realize such a family as long as it embeds with the
//! boundary on the outer face in the prescribed order; this module treats the
//! existence result as a black box and supplies a bounded exhaustive search
//! plus a load-and-verify escape hatch for instances beyond the search
//! limits. Certificates only come out of `verify_realizer`, so a certificate
//! in hand always means both conditions were checked.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coloring::{boundary_trace, next_tuple, ColoringError, ColoringFamily, Solver};
use crate::document::{from_json_str, to_json_string, DocumentError};
use crate::graph::{Graph, Vertex};
use crate::planarity::{planar_with_boundary, planar_with_boundary_indexed, CyclicBoundary, PlanarityError};

#[derive(Debug, Error)]
pub enum RealizerError {
    #[error("family is not closed under color permutations")]
    NotClosed,
    #[error("family domain must equal the boundary order")]
    DomainMismatch,
    #[error("realization uses palette size 3, got {0}")]
    WrongPalette(u8),
    #[error("unknown vertex id `{0}`")]
    UnknownId(String),
    #[error("graph does not realize the family: {0}")]
    Failed(FailureReport),
    #[error("no graph within limits realizes the family (searched up to {max_internal} internal vertices)")]
    Exhausted { max_internal: usize },
    #[error("search budget exhausted after {elapsed:.1?}")]
    Timeout { elapsed: Duration },
    #[error(transparent)]
    Document(#[from] DocumentError),
    #[error(transparent)]
    Coloring(#[from] ColoringError),
    #[error(transparent)]
    Planarity(#[from] PlanarityError),
}

/// Which of the two certificate conditions failed, with witnesses for the
/// trace condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FailureReport {
    /// Did the graph embed with the boundary on the outer face in order?
    pub planar: bool,
    /// Family members that do not extend.
    pub missing: Vec<Vec<u8>>,
    /// Extending boundary colorings outside the family.
    pub extra: Vec<Vec<u8>>,
}

impl std::fmt::Display for FailureReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if !self.planar {
            write!(f, "no planar embedding with the boundary on the outer face in order")?;
            if !self.missing.is_empty() || !self.extra.is_empty() {
                write!(f, "; ")?;
            }
        }
        if !self.missing.is_empty() {
            write!(f, "members that do not extend: {:?}", self.missing)?;
            if !self.extra.is_empty() {
                write!(f, "; ")?;
            }
        }
        if !self.extra.is_empty() {
            write!(f, "extending non-members: {:?}", self.extra)?;
        }
        Ok(())
    }
}

/// A permutation-closed set of 3-colorings of a cyclically ordered boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizationProblem {
    boundary: CyclicBoundary,
    family: ColoringFamily,
}

impl RealizationProblem {
    pub fn new(boundary: CyclicBoundary, family: ColoringFamily) -> Result<Self, RealizerError> {
        if family.k() != 3 {
            return Err(RealizerError::WrongPalette(family.k()));
        }
        if family.domain() != boundary.order() {
            return Err(RealizerError::DomainMismatch);
        }
        Ok(RealizationProblem { boundary, family })
    }

    pub fn boundary(&self) -> &CyclicBoundary {
        &self.boundary
    }

    pub fn family(&self) -> &ColoringFamily {
        &self.family
    }

    pub fn to_document(&self) -> String {
        let doc = ProblemDoc {
            boundary: self.boundary.order().to_vec(),
            family: FamilyFields {
                domain: self.family.domain().to_vec(),
                k: self.family.k(),
                members: self.family.members().map(|m| m.to_vec()).collect(),
            },
        };
        to_json_string(&doc)
    }

    pub fn from_document(text: &str) -> Result<Self, RealizerError> {
        let doc: ProblemDoc = from_json_str(text)?;
        let family = ColoringFamily::with_members(doc.family.domain, doc.family.k, doc.family.members)
            .map_err(|e| DocumentError::schema(e.to_string()))?;
        let boundary = CyclicBoundary::new(doc.boundary)
            .map_err(|e| DocumentError::schema(e.to_string()))?;
        RealizationProblem::new(boundary, family)
    }
}

#[derive(Serialize, Deserialize)]
struct ProblemDoc {
    boundary: Vec<String>,
    family: FamilyFields,
}

#[derive(Serialize, Deserialize)]
struct FamilyFields {
    domain: Vec<String>,
    k: u8,
    members: Vec<Vec<u8>>,
}

/// A graph that passed both certificate conditions for its problem. Only
/// `verify_realizer` constructs these.
#[derive(Debug, Clone)]
pub struct RealizerCertificate {
    graph: Graph,
    boundary: CyclicBoundary,
}

impl RealizerCertificate {
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn boundary(&self) -> &CyclicBoundary {
        &self.boundary
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchLimits {
    pub max_internal: usize,
    pub max_edges: Option<usize>,
    pub budget: Duration,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            max_internal: 3,
            max_edges: None,
            budget: Duration::from_secs(300),
        }
    }
}

/// Certifies that `g` realizes the problem: (a) planar with the boundary on
/// the outer face in order, and (b) the boundary trace at k = 3 equals the
/// family. On failure the report names the failed condition and carries
/// witness tuples for (b).
pub fn verify_realizer(
    g: &Graph,
    problem: &RealizationProblem,
) -> Result<RealizerCertificate, RealizerError> {
    for id in problem.boundary.order() {
        if !g.has_vertex(id) {
            return Err(RealizerError::UnknownId(id.clone()));
        }
    }
    let planar = planar_with_boundary(g, &problem.boundary)?;
    let trace = boundary_trace(g, problem.boundary.order(), 3)?;
    let missing: Vec<Vec<u8>> = problem
        .family
        .members()
        .filter(|m| !trace.contains(m))
        .map(|m| m.to_vec())
        .collect();
    let extra: Vec<Vec<u8>> = trace
        .members()
        .filter(|m| !problem.family.contains(m))
        .map(|m| m.to_vec())
        .collect();
    if planar && missing.is_empty() && extra.is_empty() {
        Ok(RealizerCertificate {
            graph: g.clone(),
            boundary: problem.boundary.clone(),
        })
    } else {
        Err(RealizerError::Failed(FailureReport { planar, missing, extra }))
    }
}

/// Parses a graph document and certifies it against the problem. Input is
/// never trusted without verification.
pub fn load_realizer(
    document: &str,
    problem: &RealizationProblem,
) -> Result<RealizerCertificate, RealizerError> {
    let graph = Graph::from_document(document)?;
    verify_realizer(&graph, problem)
}

/// Exhaustive bounded search: internal-vertex counts ascending, edge sets by
/// size then lexicographic rank. The first candidate passing planarity and
/// trace equality is returned, so identical problems and limits yield an
/// identical certificate. `Exhausted` means no graph within the limits
/// realizes the family.
pub fn search_realizer(
    problem: &RealizationProblem,
    limits: &SearchLimits,
) -> Result<RealizerCertificate, RealizerError> {
    if !problem.family.is_closed() {
        return Err(RealizerError::NotClosed);
    }
    let b = problem.boundary.len();
    let start = Instant::now();
    let deadline = start.checked_add(limits.budget);
    let members: Vec<Vec<u8>> = problem.family.members().map(|m| m.to_vec()).collect();

    // Internal vertex names must not collide with boundary ids.
    let prefix = {
        let mut p = "p".to_string();
        while (1..=limits.max_internal)
            .any(|i| problem.boundary.order().contains(&format!("{p}{i}")))
        {
            p.insert(0, '_');
        }
        p
    };

    let mut ticker: u32 = 0;
    for n_internal in 0..=limits.max_internal {
        let n = b + n_internal;
        let pairs: Vec<(u32, u32)> = (0..n as u32)
            .flat_map(|i| (i + 1..n as u32).map(move |j| (i, j)))
            .collect();
        let max_edges = limits.max_edges.unwrap_or(pairs.len()).min(pairs.len());
        let mut degree = vec![0u32; n];
        let mut chosen: Vec<(u32, u32)> = Vec::with_capacity(max_edges);

        for size in 0..=max_edges {
            let mut combo: Vec<usize> = (0..size).collect();
            loop {
                ticker = ticker.wrapping_add(1);
                if ticker & 0x3ff == 1 {
                    if let Some(d) = deadline {
                        if Instant::now() >= d {
                            return Err(RealizerError::Timeout {
                                elapsed: start.elapsed(),
                            });
                        }
                    }
                }
                chosen.clear();
                degree.iter_mut().for_each(|d| *d = 0);
                for &idx in &combo {
                    let (i, j) = pairs[idx];
                    chosen.push((i, j));
                    degree[i as usize] += 1;
                    degree[j as usize] += 1;
                }
                // A realizer with an isolated internal vertex would already
                // have been found with fewer internals.
                let wasteful = (b..n).any(|v| degree[v] == 0);
                if !wasteful && candidate_realizes(n, b, &chosen, &members) {
                    let graph = candidate_graph(problem, n_internal, &prefix, &chosen);
                    return verify_realizer(&graph, problem);
                }
                if !next_combination(&mut combo, pairs.len()) {
                    break;
                }
            }
        }
    }
    Err(RealizerError::Exhausted {
        max_internal: limits.max_internal,
    })
}

/// Planarity first (cheap), then a streaming comparison of the boundary
/// trace against the family, aborting at the first disagreement in either
/// direction.
fn candidate_realizes(n: usize, b: usize, edges: &[(u32, u32)], members: &[Vec<u8>]) -> bool {
    let boundary: Vec<u32> = (0..b as u32).collect();
    if !planar_with_boundary_indexed(n, edges, &boundary) {
        return false;
    }
    let mut adj = vec![Vec::new(); n];
    for &(i, j) in edges {
        adj[i as usize].push(j as usize);
        adj[j as usize].push(i as usize);
    }
    let mut solver = Solver::new(adj, 3);
    let mut tuple = vec![1u8; b];
    let mut assignment: Vec<(usize, u8)> = Vec::with_capacity(b);
    let mut member_iter = members.iter();
    let mut next_member = member_iter.next();
    loop {
        assignment.clear();
        assignment.extend((0..b).zip(tuple.iter().copied()));
        let ext = solver.extends(&assignment);
        let in_family = next_member.map(|m| m[..] == tuple[..]).unwrap_or(false);
        if ext != in_family {
            return false;
        }
        if in_family {
            next_member = member_iter.next();
        }
        if !next_tuple(&mut tuple, 3) {
            break;
        }
    }
    next_member.is_none()
}

fn candidate_graph(
    problem: &RealizationProblem,
    n_internal: usize,
    prefix: &str,
    edges: &[(u32, u32)],
) -> Graph {
    let mut ids: Vec<String> = problem.boundary.order().to_vec();
    for i in 1..=n_internal {
        ids.push(format!("{prefix}{i}"));
    }
    let vertices: Vec<Vertex> = ids.iter().map(|id| Vertex::internal(id.clone())).collect();
    let edge_list: Vec<(String, String)> = edges
        .iter()
        .map(|&(i, j)| (ids[i as usize].clone(), ids[j as usize].clone()))
        .collect();
    Graph::build("realizer", vertices, edge_list).expect("candidate graphs are well formed")
}

/// Next k-combination of indices in lexicographic order; false when done.
fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    if k == 0 {
        return false;
    }
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < n - (k - i) {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn boundary2() -> CyclicBoundary {
        CyclicBoundary::new(vec!["a".into(), "b".into()]).unwrap()
    }

    fn equality_family() -> ColoringFamily {
        ColoringFamily::with_members(
            vec!["a".into(), "b".into()],
            3,
            (1..=3).map(|c| vec![c, c]),
        )
        .unwrap()
    }

    fn diamond() -> Graph {
        Graph::build(
            "diamond",
            ["a", "b", "p", "q"].map(Vertex::internal).to_vec(),
            [("a", "p"), ("a", "q"), ("b", "p"), ("b", "q"), ("p", "q")]
                .map(|(x, y)| (x.to_string(), y.to_string()))
                .to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn verify_edgeless_against_full_family() {
        let family = ColoringFamily::full(vec!["a".into(), "b".into()], 3).unwrap();
        let problem = RealizationProblem::new(boundary2(), family).unwrap();
        let g = Graph::build(
            "free",
            ["a", "b"].map(Vertex::internal).to_vec(),
            Vec::new(),
        )
        .unwrap();
        assert!(verify_realizer(&g, &problem).is_ok());
    }

    #[test]
    fn verify_diamond_against_equality() {
        let problem = RealizationProblem::new(boundary2(), equality_family()).unwrap();
        let cert = verify_realizer(&diamond(), &problem).unwrap();
        assert_eq!(cert.graph().vertex_count(), 4);
    }

    #[test]
    fn verify_edge_against_equality_reports_witnesses() {
        let problem = RealizationProblem::new(boundary2(), equality_family()).unwrap();
        let g = Graph::build(
            "edge",
            ["a", "b"].map(Vertex::internal).to_vec(),
            vec![("a".to_string(), "b".to_string())],
        )
        .unwrap();
        match verify_realizer(&g, &problem) {
            Err(RealizerError::Failed(report)) => {
                assert!(report.planar);
                assert!(report.extra.contains(&vec![1, 2]));
                assert!(report.missing.contains(&vec![1, 1]));
            }
            other => panic!("expected failure report, got {other:?}"),
        }
    }

    #[test]
    fn verify_nonplanar_fixture_names_planarity() {
        // K5 with one boundary vertex attached; the empty family makes the
        // trace condition hold, so only planarity fails.
        let mut vertices = vec![Vertex::internal("a")];
        vertices.extend((1..=5).map(|i| Vertex::internal(format!("q{i}"))));
        let mut edges = vec![("a".to_string(), "q1".to_string())];
        for i in 1..=5 {
            for j in i + 1..=5 {
                edges.push((format!("q{i}"), format!("q{j}")));
            }
        }
        let g = Graph::build("bad", vertices, edges).unwrap();
        let family = ColoringFamily::new(vec!["a".into()], 3).unwrap();
        let problem =
            RealizationProblem::new(CyclicBoundary::new(vec!["a".into()]).unwrap(), family)
                .unwrap();
        match verify_realizer(&g, &problem) {
            Err(RealizerError::Failed(report)) => {
                assert!(!report.planar);
                assert!(report.missing.is_empty() && report.extra.is_empty());
            }
            other => panic!("expected planarity failure, got {other:?}"),
        }
    }

    #[test]
    fn search_full_family_returns_edgeless() {
        let family = ColoringFamily::full(vec!["a".into(), "b".into()], 3).unwrap();
        let problem = RealizationProblem::new(boundary2(), family).unwrap();
        let cert = search_realizer(&problem, &SearchLimits::default()).unwrap();
        assert_eq!(cert.graph().vertex_count(), 2);
        assert_eq!(cert.graph().edge_count(), 0);
    }

    #[test]
    fn search_equality_family_finds_diamond() {
        let problem = RealizationProblem::new(boundary2(), equality_family()).unwrap();
        let limits = SearchLimits {
            max_internal: 2,
            ..Default::default()
        };
        let cert = search_realizer(&problem, &limits).unwrap();
        assert_eq!(cert.graph().vertex_count(), 4);
        assert_eq!(cert.graph().edge_count(), 5);
        assert!(!cert.graph().has_edge("a", "b"));
        // Re-verify from scratch.
        assert!(verify_realizer(cert.graph(), &problem).is_ok());
    }

    #[test]
    fn search_empty_family_needs_uncolorable_part() {
        let family = ColoringFamily::new(vec!["a".into(), "b".into()], 3).unwrap();
        let problem = RealizationProblem::new(boundary2(), family).unwrap();
        let cert = search_realizer(&problem, &SearchLimits::default()).unwrap();
        assert!(verify_realizer(cert.graph(), &problem).is_ok());

        // Within zero internal vertices the family is unreachable.
        let tight = SearchLimits {
            max_internal: 1,
            ..Default::default()
        };
        assert!(matches!(
            search_realizer(&problem, &tight),
            Err(RealizerError::Exhausted { max_internal: 1 })
        ));
    }

    #[test]
    fn search_is_deterministic() {
        let problem = RealizationProblem::new(boundary2(), equality_family()).unwrap();
        let a = search_realizer(&problem, &SearchLimits::default()).unwrap();
        let b = search_realizer(&problem, &SearchLimits::default()).unwrap();
        assert_eq!(a.graph(), b.graph());
    }

    #[test]
    fn search_rejects_non_closed_family() {
        let family = ColoringFamily::with_members(
            vec!["a".into(), "b".into()],
            3,
            [vec![1u8, 1]],
        )
        .unwrap();
        let problem = RealizationProblem::new(boundary2(), family).unwrap();
        assert!(matches!(
            search_realizer(&problem, &SearchLimits::default()),
            Err(RealizerError::NotClosed)
        ));
    }

    #[test]
    fn search_zero_budget_times_out() {
        let problem = RealizationProblem::new(boundary2(), equality_family()).unwrap();
        let limits = SearchLimits {
            budget: Duration::ZERO,
            ..Default::default()
        };
        assert!(matches!(
            search_realizer(&problem, &limits),
            Err(RealizerError::Timeout { .. })
        ));
    }

    #[test]
    fn load_realizer_round_trip_and_negative() {
        let problem = RealizationProblem::new(boundary2(), equality_family()).unwrap();
        let doc = diamond().to_document();
        assert!(load_realizer(&doc, &problem).is_ok());

        // Remove one edge: the trace widens and verification fails.
        let broken = Graph::build(
            "broken",
            ["a", "b", "p", "q"].map(Vertex::internal).to_vec(),
            [("a", "p"), ("a", "q"), ("b", "p"), ("b", "q")]
                .map(|(x, y)| (x.to_string(), y.to_string()))
                .to_vec(),
        )
        .unwrap();
        assert!(matches!(
            load_realizer(&broken.to_document(), &problem),
            Err(RealizerError::Failed(_))
        ));

        assert!(matches!(
            load_realizer("{oops", &problem),
            Err(RealizerError::Document(DocumentError::Parse { .. }))
        ));
    }

    #[test]
    fn problem_document_round_trip() {
        let problem = RealizationProblem::new(boundary2(), equality_family()).unwrap();
        let doc = problem.to_document();
        let back = RealizationProblem::from_document(&doc).unwrap();
        assert_eq!(back, problem);
    }

    #[test]
    fn problem_validation() {
        let family = ColoringFamily::full(vec!["a".into(), "b".into()], 3).unwrap();
        let wrong_boundary = CyclicBoundary::new(vec!["b".into(), "a".into()]).unwrap();
        assert!(matches!(
            RealizationProblem::new(wrong_boundary, family.clone()),
            Err(RealizerError::DomainMismatch)
        ));
        let four = ColoringFamily::full(vec!["a".into(), "b".into()], 4).unwrap();
        assert!(matches!(
            RealizationProblem::new(boundary2(), four),
            Err(RealizerError::WrongPalette(4))
        ));
    }

    #[test]
    fn certificates_realize_permutation_closed_families() {
        // The boundary trace of any graph is permutation-closed, so a
        // certificate's family always is; check on a searched certificate.
        let problem = RealizationProblem::new(boundary2(), equality_family()).unwrap();
        let cert = search_realizer(&problem, &SearchLimits::default()).unwrap();
        let trace = boundary_trace(cert.graph(), problem.boundary().order(), 3).unwrap();
        assert!(trace.is_closed());
    }

    #[test]
    fn unknown_boundary_vertex() {
        let problem = RealizationProblem::new(boundary2(), equality_family()).unwrap();
        let g = Graph::build("tiny", vec![Vertex::internal("a")], Vec::new()).unwrap();
        assert!(matches!(
            verify_realizer(&g, &problem),
            Err(RealizerError::UnknownId(id)) if id == "b"
        ));
    }
}
