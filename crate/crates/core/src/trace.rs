//! Replayable construction traces: a record of how a graph was assembled from
//! plane pieces, universal-vertex additions, and clique-sum joins. The audit
//! machinery replays a trace and checks each step's premises instead of
//! trusting the assembly.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::document::{from_json_str, to_json_string, DocumentError};
use crate::graph::{Graph, GraphError, Vertex};
use crate::planarity::CyclicBoundary;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum TraceStep {
    /// A plane piece with a prescribed outer-face boundary (possibly empty).
    BasePlanePiece {
        graph: Graph,
        boundary: CyclicBoundary,
    },
    /// New vertices, each adjacent to every target. The new vertices are not
    /// adjacent to each other; a following `AddCliqueEdges` completes them.
    AddUniversalVertices {
        vertices: Vec<Vertex>,
        targets: BTreeSet<String>,
    },
    /// Glue a summand along a shared set that must induce a clique on both
    /// sides.
    CliqueSumJoin {
        summand: Graph,
        shared: BTreeSet<String>,
    },
    AddCliqueEdges { ids: BTreeSet<String> },
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("step {step}: shared set is not a clique in the {side} graph")]
    SharedNotClique { step: usize, side: &'static str },
    #[error("step {step}: shared set is empty")]
    SharedEmpty { step: usize },
    #[error("step {step}: shared id `{id}` missing from the {side} graph")]
    SharedMissing {
        step: usize,
        side: &'static str,
        id: String,
    },
    #[error("step {step}: {source}")]
    Graph {
        step: usize,
        #[source]
        source: GraphError,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstructionTrace {
    pub steps: Vec<TraceStep>,
}

impl ConstructionTrace {
    pub fn new(steps: Vec<TraceStep>) -> Self {
        ConstructionTrace { steps }
    }

    /// Rebuilds the traced graph step by step, validating clique-sum joins.
    pub fn replay(&self) -> Result<Graph, TraceError> {
        let mut acc = Graph::empty("replay");
        for (i, step) in self.steps.iter().enumerate() {
            acc = self.apply(acc, i, step)?;
        }
        Ok(acc)
    }

    /// The graph accumulated by the first `upto` steps.
    pub fn replay_prefix(&self, upto: usize) -> Result<Graph, TraceError> {
        let mut acc = Graph::empty("replay");
        for (i, step) in self.steps.iter().take(upto).enumerate() {
            acc = self.apply(acc, i, step)?;
        }
        Ok(acc)
    }

    fn apply(&self, acc: Graph, i: usize, step: &TraceStep) -> Result<Graph, TraceError> {
        let wrap = |source| TraceError::Graph { step: i, source };
        match step {
            TraceStep::BasePlanePiece { graph, .. } => acc.glue(graph).map_err(wrap),
            TraceStep::AddUniversalVertices { vertices, targets } => acc
                .add_universal_vertices(vertices, targets)
                .map_err(wrap),
            TraceStep::CliqueSumJoin { summand, shared } => {
                if shared.is_empty() {
                    return Err(TraceError::SharedEmpty { step: i });
                }
                for id in shared {
                    if !acc.has_vertex(id) {
                        return Err(TraceError::SharedMissing {
                            step: i,
                            side: "accumulated",
                            id: id.clone(),
                        });
                    }
                    if !summand.has_vertex(id) {
                        return Err(TraceError::SharedMissing {
                            step: i,
                            side: "summand",
                            id: id.clone(),
                        });
                    }
                }
                if !acc.induces_clique(shared) {
                    return Err(TraceError::SharedNotClique {
                        step: i,
                        side: "accumulated",
                    });
                }
                if !summand.induces_clique(shared) {
                    return Err(TraceError::SharedNotClique {
                        step: i,
                        side: "summand",
                    });
                }
                acc.glue(summand).map_err(wrap)
            }
            TraceStep::AddCliqueEdges { ids } => acc.clique_on(ids).map_err(wrap),
        }
    }

    pub fn to_document(&self) -> String {
        to_json_string(self)
    }

    pub fn from_document(text: &str) -> Result<Self, DocumentError> {
        from_json_str(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::VertexRole;

    fn triangle(name: &str, a: &str, b: &str, c: &str) -> Graph {
        Graph::build(
            name,
            vec![Vertex::internal(a), Vertex::internal(b), Vertex::internal(c)],
            vec![
                (a.to_string(), b.to_string()),
                (b.to_string(), c.to_string()),
                (a.to_string(), c.to_string()),
            ],
        )
        .unwrap()
    }

    fn shared(ids: &[&str]) -> BTreeSet<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn replay_matches_manual_assembly() {
        let base = triangle("base", "a", "b", "c");
        let trace = ConstructionTrace::new(vec![
            TraceStep::BasePlanePiece {
                graph: base.clone(),
                boundary: CyclicBoundary::empty(),
            },
            TraceStep::AddUniversalVertices {
                vertices: vec![Vertex::new("y4", VertexRole::Y), Vertex::new("y5", VertexRole::Y)],
                targets: base.id_set(),
            },
            TraceStep::AddCliqueEdges { ids: shared(&["y4", "y5"]) },
            TraceStep::CliqueSumJoin {
                summand: triangle("side", "a", "b", "d"),
                shared: shared(&["a", "b"]),
            },
        ]);
        let replayed = trace.replay().unwrap();
        let manual = base
            .add_universal_vertices(
                &[Vertex::new("y4", VertexRole::Y), Vertex::new("y5", VertexRole::Y)],
                &base.id_set(),
            )
            .unwrap()
            .clique_on(&shared(&["y4", "y5"]))
            .unwrap()
            .glue(&triangle("side", "a", "b", "d"))
            .unwrap();
        assert!(replayed.same_structure(&manual));
        assert!(replayed.has_edge("y4", "y5"));
        assert!(!replayed.has_edge("y4", "d"));
    }

    #[test]
    fn join_requires_clique_on_both_sides() {
        let path = Graph::build(
            "path",
            vec![Vertex::internal("a"), Vertex::internal("b"), Vertex::internal("c")],
            vec![("a".to_string(), "b".to_string()), ("b".to_string(), "c".to_string())],
        )
        .unwrap();
        let trace = ConstructionTrace::new(vec![
            TraceStep::BasePlanePiece {
                graph: path,
                boundary: CyclicBoundary::empty(),
            },
            TraceStep::CliqueSumJoin {
                summand: triangle("t", "a", "c", "d"),
                shared: shared(&["a", "c"]),
            },
        ]);
        match trace.replay() {
            Err(TraceError::SharedNotClique { step: 1, side: "accumulated" }) => {}
            other => panic!("expected accumulated-side clique failure, got {other:?}"),
        }
    }

    #[test]
    fn document_round_trip() {
        let trace = ConstructionTrace::new(vec![
            TraceStep::BasePlanePiece {
                graph: triangle("base", "a", "b", "c"),
                boundary: CyclicBoundary::new(vec!["a".into(), "b".into()]).unwrap(),
            },
            TraceStep::CliqueSumJoin {
                summand: triangle("t", "a", "b", "d"),
                shared: shared(&["a", "b"]),
            },
        ]);
        let doc = trace.to_document();
        let back = ConstructionTrace::from_document(&doc).unwrap();
        assert_eq!(back, trace);
    }
}
