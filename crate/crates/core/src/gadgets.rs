//! The copy and encoder gadgets, their pieces, and independent predicate
//! oracles for their intended boundary behavior.
//!
//! The copy gadget on terminals (u, v) is a (k+1)-clique with the edge uv
//! deleted: a boundary assignment extends iff f(u) = f(v). The encoder gadget
//! on terminals A = {u, v, w, y_4..y_k} is glued from pieces so that, under a
//! rainbow assignment of the y's (y_i gets color i), the color of u is
//! encoded into the pair (v, w): low colors of u copy themselves onto v and
//! w, color s forces v and w to differ, and the other high colors force v and
//! w to agree on some low color.
//!
//! The predicates (`copy_spec`, `enc_spec`, per-piece specs) are evaluated
//! without any graph search; conformance enumerations compare them against
//! `extends` on the constructed gadgets, exhaustively.

use std::collections::BTreeSet;

use rayon::prelude::*;
use thiserror::Error;

use crate::coloring::{extends, PartialColoring};
use crate::graph::{Graph, GraphError, Vertex, VertexRole};
use crate::planarity::CyclicBoundary;
use crate::trace::{ConstructionTrace, TraceStep};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GadgetError {
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("assignment is not rainbow: `{id}` should get color {expected}, got {got}")]
    NotRainbow { id: String, expected: u8, got: u8 },
    #[error("assignment misses terminal `{0}`")]
    MissingTerminal(String),
    #[error("color {color} out of range 1..={k}")]
    ColorOutOfRange { color: u8, k: u8 },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TerminalSpec {
    pub id: String,
    pub role: VertexRole,
}

impl TerminalSpec {
    pub fn new(id: impl Into<String>, role: VertexRole) -> Self {
        TerminalSpec {
            id: id.into(),
            role,
        }
    }

    pub fn internal(id: impl Into<String>) -> Self {
        TerminalSpec::new(id, VertexRole::Internal)
    }

    fn vertex(&self, tag: String) -> Vertex {
        Vertex::new(self.id.clone(), self.role).with_tag(tag)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CopyTerminals {
    pub u: TerminalSpec,
    pub v: TerminalSpec,
}

impl CopyTerminals {
    pub fn new(u: TerminalSpec, v: TerminalSpec) -> Self {
        CopyTerminals { u, v }
    }

    pub fn default_ids() -> Self {
        CopyTerminals::new(TerminalSpec::internal("u"), TerminalSpec::internal("v"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncoderTerminals {
    pub u: TerminalSpec,
    pub v: TerminalSpec,
    pub w: TerminalSpec,
    /// `ys[i]` is the terminal receiving rainbow color `4 + i`.
    pub ys: Vec<TerminalSpec>,
}

impl EncoderTerminals {
    pub fn new(u: TerminalSpec, v: TerminalSpec, w: TerminalSpec, ys: Vec<TerminalSpec>) -> Self {
        EncoderTerminals { u, v, w, ys }
    }

    /// Terminals u, v, w plus y4..yk (role Y).
    pub fn default_ids(k: u8) -> Self {
        EncoderTerminals {
            u: TerminalSpec::internal("u"),
            v: TerminalSpec::internal("v"),
            w: TerminalSpec::internal("w"),
            ys: (4..=k)
                .map(|j| TerminalSpec::new(format!("y{j}"), VertexRole::Y))
                .collect(),
        }
    }

    pub fn y_color(&self, index: usize) -> u8 {
        4 + index as u8
    }

    fn validate(&self, k: u8) -> Result<(), GadgetError> {
        if self.ys.len() != (k as usize).saturating_sub(3) {
            return Err(GadgetError::BadParameter(format!(
                "expected {} apex terminals for k={k}, got {}",
                k - 3,
                self.ys.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for t in self.all() {
            if !seen.insert(t.id.clone()) {
                return Err(GadgetError::BadParameter(format!(
                    "terminal id `{}` repeated",
                    t.id
                )));
            }
        }
        Ok(())
    }

    fn all(&self) -> impl Iterator<Item = &TerminalSpec> {
        [&self.u, &self.v, &self.w].into_iter().chain(self.ys.iter())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Terminals {
    Copy(CopyTerminals),
    Encoder(EncoderTerminals),
}

#[derive(Debug, Clone)]
pub struct GadgetInstance {
    pub graph: Graph,
    pub k: u8,
    pub s: Option<u8>,
    pub terminals: Terminals,
    pub namespace: String,
}

impl GadgetInstance {
    pub fn terminal_ids(&self) -> BTreeSet<String> {
        match &self.terminals {
            Terminals::Copy(t) => BTreeSet::from([t.u.id.clone(), t.v.id.clone()]),
            Terminals::Encoder(t) => t.all().map(|s| s.id.clone()).collect(),
        }
    }

    /// The gadget plus the clique on its terminal set. For the copy gadget
    /// this restores the deleted edge, giving the full (k+1)-clique.
    pub fn completed(&self) -> Graph {
        self.graph
            .clique_on(&self.terminal_ids())
            .expect("terminals are present in the gadget graph")
            .renamed(format!("{}+", self.graph.name()))
    }

    /// How `completed()` arises from planar pieces: the skeletons (each with
    /// the uvw triangle added) are clique-summed on {u, v, w}, then each apex
    /// y_j is added adjacent to everything built so far except the one u'
    /// vertex its piece skips. Replaying this trace reproduces `completed()`
    /// exactly. Copy gadgets need no decomposition (their completion is a
    /// clique on fewer than k+2 vertices), so this returns None for them.
    pub fn completion_decomposition(&self) -> Option<ConstructionTrace> {
        let terminals = match &self.terminals {
            Terminals::Copy(_) => return None,
            Terminals::Encoder(t) => t,
        };
        let s = self.s.expect("encoder instances carry s");
        let k = self.k;
        let ns = &self.namespace;
        let uvw: BTreeSet<String> = [&terminals.u, &terminals.v, &terminals.w]
            .iter()
            .map(|t| t.id.clone())
            .collect();
        let with_uvw = |g: Graph| -> Graph {
            g.clique_on(&uvw).expect("u, v, w are in every skeleton")
        };

        let mut steps = vec![TraceStep::BasePlanePiece {
            graph: with_uvw(f1_skeleton(terminals, ns)),
            boundary: CyclicBoundary::empty(),
        }];
        steps.push(TraceStep::CliqueSumJoin {
            summand: with_uvw(fs_skeleton(terminals, ns, s)),
            shared: uvw.clone(),
        });
        for r in (4..=k).filter(|&r| r != s) {
            steps.push(TraceStep::CliqueSumJoin {
                summand: with_uvw(fr_skeleton(terminals, ns, r)),
                shared: uvw.clone(),
            });
        }
        // Vertices accumulated before any apex is added.
        let mut prior: BTreeSet<String> = uvw.clone();
        prior.extend(skeleton_internal_ids(terminals, ns, k, s));
        for (i, y) in terminals.ys.iter().enumerate() {
            let j = terminals.y_color(i);
            let skipped = piece_u_prime_id(ns, j);
            let targets: BTreeSet<String> =
                prior.iter().filter(|id| **id != skipped).cloned().collect();
            steps.push(TraceStep::AddUniversalVertices {
                vertices: vec![y.vertex(format!("{ns}:y{j}"))],
                targets,
            });
            prior.insert(y.id.clone());
        }
        Some(ConstructionTrace::new(steps))
    }
}

fn internal(ns: &str, rest: String) -> Vertex {
    Vertex::internal(format!("{ns}/{rest}"))
}

fn piece_u_prime_id(ns: &str, piece: u8) -> String {
    format!("{ns}/F{piece}/up")
}

fn skeleton_internal_ids(t: &EncoderTerminals, ns: &str, k: u8, s: u8) -> Vec<String> {
    let mut ids = vec![
        format!("{ns}/F1/v1"),
        format!("{ns}/F1/v2"),
        format!("{ns}/F1/w1"),
        format!("{ns}/F1/w2"),
        piece_u_prime_id(ns, s),
        format!("{ns}/F{s}/w1"),
        format!("{ns}/F{s}/w2"),
    ];
    for r in (4..=k).filter(|&r| r != s) {
        ids.push(piece_u_prime_id(ns, r));
        ids.push(format!("{ns}/F{r}/v1"));
        ids.push(format!("{ns}/F{r}/v2"));
        ids.push(format!("{ns}/F{r}/w1"));
        ids.push(format!("{ns}/F{r}/w2"));
    }
    let _ = t;
    ids
}

/// Copy gadget: the clique on k+1 vertices with the edge uv deleted.
pub fn f_copy(k: u8, terminals: CopyTerminals, namespace: &str) -> Result<GadgetInstance, GadgetError> {
    if k < 3 {
        return Err(GadgetError::BadParameter(format!(
            "copy gadget needs k >= 3, got {k}"
        )));
    }
    if terminals.u.id == terminals.v.id {
        return Err(GadgetError::BadParameter(
            "copy terminals must be distinct".into(),
        ));
    }
    let mut vertices = vec![
        terminals.u.vertex(format!("{namespace}:u")),
        terminals.v.vertex(format!("{namespace}:v")),
    ];
    for i in 1..k {
        vertices.push(internal(namespace, format!("c{i}")));
    }
    let ids: Vec<String> = vertices.iter().map(|v| v.id.clone()).collect();
    let mut edges = Vec::new();
    for i in 0..ids.len() {
        for j in i + 1..ids.len() {
            if (i, j) == (0, 1) {
                continue; // the deleted edge uv
            }
            edges.push((ids[i].clone(), ids[j].clone()));
        }
    }
    let graph = Graph::build(namespace.to_owned(), vertices, edges)?;
    Ok(GadgetInstance {
        graph,
        k,
        s: None,
        terminals: Terminals::Copy(terminals),
        namespace: namespace.to_owned(),
    })
}

/// The clique of size k+1 (the copy gadget with uv restored).
pub fn f_copy_plus(k: u8) -> Result<Graph, GadgetError> {
    Ok(f_copy(k, CopyTerminals::default_ids(), "copy")?.completed())
}

fn f1_skeleton(t: &EncoderTerminals, ns: &str) -> Graph {
    let u = &t.u.id;
    let v = &t.v.id;
    let w = &t.w.id;
    let v1 = format!("{ns}/F1/v1");
    let v2 = format!("{ns}/F1/v2");
    let w1 = format!("{ns}/F1/w1");
    let w2 = format!("{ns}/F1/w2");
    let vertices = vec![
        t.u.vertex(format!("{ns}:u")),
        t.v.vertex(format!("{ns}:v")),
        t.w.vertex(format!("{ns}:w")),
        Vertex::internal(v1.clone()),
        Vertex::internal(v2.clone()),
        Vertex::internal(w1.clone()),
        Vertex::internal(w2.clone()),
    ];
    let edges = vec![
        (u.clone(), v1.clone()),
        (v1.clone(), v.clone()),
        (u.clone(), v2.clone()),
        (v2.clone(), v.clone()),
        (u.clone(), w1.clone()),
        (w1.clone(), w.clone()),
        (u.clone(), w2.clone()),
        (w2.clone(), w.clone()),
        (v1, v2),
        (w1, w2),
    ];
    Graph::build(format!("{ns}/F1"), vertices, edges).expect("piece skeleton is well formed")
}

fn fs_skeleton(t: &EncoderTerminals, ns: &str, s: u8) -> Graph {
    let u = &t.u.id;
    let v = &t.v.id;
    let w = &t.w.id;
    let up = piece_u_prime_id(ns, s);
    let w1 = format!("{ns}/F{s}/w1");
    let w2 = format!("{ns}/F{s}/w2");
    let vertices = vec![
        t.u.vertex(format!("{ns}:u")),
        t.v.vertex(format!("{ns}:v")),
        t.w.vertex(format!("{ns}:w")),
        Vertex::internal(up.clone()),
        Vertex::internal(w1.clone()),
        Vertex::internal(w2.clone()),
    ];
    let edges = vec![
        (up.clone(), w1.clone()),
        (w1.clone(), w.clone()),
        (up.clone(), w2.clone()),
        (w2.clone(), w.clone()),
        (u.clone(), up.clone()),
        (w1, w2),
        (up, v.clone()),
    ];
    Graph::build(format!("{ns}/F{s}"), vertices, edges).expect("piece skeleton is well formed")
}

fn fr_skeleton(t: &EncoderTerminals, ns: &str, r: u8) -> Graph {
    let u = &t.u.id;
    let v = &t.v.id;
    let w = &t.w.id;
    let up = piece_u_prime_id(ns, r);
    let v1 = format!("{ns}/F{r}/v1");
    let v2 = format!("{ns}/F{r}/v2");
    let w1 = format!("{ns}/F{r}/w1");
    let w2 = format!("{ns}/F{r}/w2");
    let vertices = vec![
        t.u.vertex(format!("{ns}:u")),
        t.v.vertex(format!("{ns}:v")),
        t.w.vertex(format!("{ns}:w")),
        Vertex::internal(up.clone()),
        Vertex::internal(v1.clone()),
        Vertex::internal(v2.clone()),
        Vertex::internal(w1.clone()),
        Vertex::internal(w2.clone()),
    ];
    let edges = vec![
        (up.clone(), v1.clone()),
        (v1.clone(), v.clone()),
        (up.clone(), v2.clone()),
        (v2.clone(), v.clone()),
        (up.clone(), w1.clone()),
        (w1.clone(), w.clone()),
        (up.clone(), w2.clone()),
        (w2.clone(), w.clone()),
        (u.clone(), up.clone()),
        (v1, v2),
        (w1, w2),
    ];
    Graph::build(format!("{ns}/F{r}"), vertices, edges).expect("piece skeleton is well formed")
}

/// Adds the apex terminals y4..yk, each adjacent to every skeleton vertex
/// except `u`, then removes the single edge (skip_up, y_skip) if requested.
fn apexed(
    skeleton: Graph,
    t: &EncoderTerminals,
    ns: &str,
    skip: Option<(String, u8)>,
) -> Result<Graph, GadgetError> {
    let targets: BTreeSet<String> = skeleton
        .ids()
        .filter(|id| *id != t.u.id)
        .map(str::to_owned)
        .collect();
    let ys: Vec<Vertex> = t
        .ys
        .iter()
        .enumerate()
        .map(|(i, y)| y.vertex(format!("{ns}:y{}", t.y_color(i))))
        .collect();
    let with_apexes = skeleton.add_universal_vertices(&ys, &targets)?;
    match skip {
        None => Ok(with_apexes),
        Some((up_id, y_color)) => {
            let y_index = (y_color - 4) as usize;
            let y_id = &t.ys[y_index].id;
            let edges: Vec<(String, String)> = with_apexes
                .edges()
                .filter(|(a, b)| {
                    !((*a == up_id.as_str() && *b == y_id.as_str())
                        || (*a == y_id.as_str() && *b == up_id.as_str()))
                })
                .map(|(a, b)| (a.to_owned(), b.to_owned()))
                .collect();
            Ok(Graph::build(
                with_apexes.name().to_owned(),
                with_apexes.vertices().to_vec(),
                edges,
            )?)
        }
    }
}

/// Piece with two parallel u--v paths and two parallel u--w paths, apexed
/// over everything but u.
pub fn piece_f1(
    k: u8,
    terminals: EncoderTerminals,
    namespace: &str,
) -> Result<GadgetInstance, GadgetError> {
    if k < 4 {
        return Err(GadgetError::BadParameter(format!(
            "encoder pieces need k >= 4, got {k}"
        )));
    }
    terminals.validate(k)?;
    let graph = apexed(f1_skeleton(&terminals, namespace), &terminals, namespace, None)?;
    Ok(GadgetInstance {
        graph,
        k,
        s: None,
        terminals: Terminals::Encoder(terminals),
        namespace: namespace.to_owned(),
    })
}

/// Piece that forbids f(v) = f(w) exactly when f(u) = s: apexed over
/// everything but u, minus the single edge u'y_s.
pub fn piece_fs(
    k: u8,
    s: u8,
    terminals: EncoderTerminals,
    namespace: &str,
) -> Result<GadgetInstance, GadgetError> {
    if k < 4 {
        return Err(GadgetError::BadParameter(format!(
            "encoder pieces need k >= 4, got {k}"
        )));
    }
    if s < 4 || s > k {
        return Err(GadgetError::BadParameter(format!(
            "s must lie in 4..={k}, got {s}"
        )));
    }
    terminals.validate(k)?;
    let up = piece_u_prime_id(namespace, s);
    let graph = apexed(
        fs_skeleton(&terminals, namespace, s),
        &terminals,
        namespace,
        Some((up, s)),
    )?;
    Ok(GadgetInstance {
        graph,
        k,
        s: Some(s),
        terminals: Terminals::Encoder(terminals),
        namespace: namespace.to_owned(),
    })
}

/// Piece that forces f(v) = f(w) exactly when f(u) = r: apexed over
/// everything but u, minus the single edge u'y_r.
pub fn piece_fr(
    k: u8,
    s: u8,
    r: u8,
    terminals: EncoderTerminals,
    namespace: &str,
) -> Result<GadgetInstance, GadgetError> {
    if k < 5 {
        return Err(GadgetError::BadParameter(format!(
            "piece F_r needs k >= 5, got {k}"
        )));
    }
    if s < 4 || s > k {
        return Err(GadgetError::BadParameter(format!(
            "s must lie in 4..={k}, got {s}"
        )));
    }
    if r < 4 || r > k || r == s {
        return Err(GadgetError::BadParameter(format!(
            "r must lie in 4..={k} and differ from s={s}, got {r}"
        )));
    }
    terminals.validate(k)?;
    let up = piece_u_prime_id(namespace, r);
    let graph = apexed(
        fr_skeleton(&terminals, namespace, r),
        &terminals,
        namespace,
        Some((up, r)),
    )?;
    Ok(GadgetInstance {
        graph,
        k,
        s: Some(s),
        terminals: Terminals::Encoder(terminals),
        namespace: namespace.to_owned(),
    })
}

/// Encoder gadget: pieces F_1, F_4, ..., F_k glued on the shared terminal
/// set A = {u, v, w, y4..yk}.
pub fn f_enc(
    k: u8,
    s: u8,
    terminals: EncoderTerminals,
    namespace: &str,
) -> Result<GadgetInstance, GadgetError> {
    if k < 4 {
        return Err(GadgetError::BadParameter(format!(
            "encoder gadget needs k >= 4, got {k}"
        )));
    }
    if s < 4 || s > k {
        return Err(GadgetError::BadParameter(format!(
            "s must lie in 4..={k}, got {s}"
        )));
    }
    terminals.validate(k)?;
    let mut graph = piece_f1(k, terminals.clone(), namespace)?.graph;
    graph = graph.glue(&piece_fs(k, s, terminals.clone(), namespace)?.graph)?;
    for r in (4..=k).filter(|&r| r != s) {
        graph = graph.glue(&piece_fr(k, s, r, terminals.clone(), namespace)?.graph)?;
    }
    let graph = graph.renamed(namespace.to_owned());
    Ok(GadgetInstance {
        graph,
        k,
        s: Some(s),
        terminals: Terminals::Encoder(terminals),
        namespace: namespace.to_owned(),
    })
}

/// The encoder gadget plus the clique on its terminal set A.
pub fn f_enc_plus(k: u8, s: u8) -> Result<Graph, GadgetError> {
    Ok(f_enc(k, s, EncoderTerminals::default_ids(k), "enc")?.completed())
}

fn check_color(color: u8, k: u8) -> Result<(), GadgetError> {
    if color == 0 || color > k {
        return Err(GadgetError::ColorOutOfRange { color, k });
    }
    Ok(())
}

/// The copy gadget's intended behavior, evaluated without graph search.
pub fn copy_spec(k: u8, f_u: u8, f_v: u8) -> Result<bool, GadgetError> {
    if k < 3 {
        return Err(GadgetError::BadParameter(format!(
            "copy gadget needs k >= 3, got {k}"
        )));
    }
    check_color(f_u, k)?;
    check_color(f_v, k)?;
    Ok(f_u == f_v)
}

/// The encoder's intended behavior under a rainbow assignment: one of
///   - f(u) in {1,2,3} and f(u) = f(v) = f(w),
///   - f(u) = s, f(v), f(w) in {1,2,3}, and f(v) != f(w),
///   - f(u) in {4..k} \ {s} and f(v) = f(w) in {1,2,3}.
pub fn enc_spec(k: u8, s: u8, f_u: u8, f_v: u8, f_w: u8) -> Result<bool, GadgetError> {
    if k < 4 {
        return Err(GadgetError::BadParameter(format!(
            "encoder gadget needs k >= 4, got {k}"
        )));
    }
    if s < 4 || s > k {
        return Err(GadgetError::BadParameter(format!(
            "s must lie in 4..={k}, got {s}"
        )));
    }
    for c in [f_u, f_v, f_w] {
        check_color(c, k)?;
    }
    let low = |c: u8| c <= 3;
    Ok((low(f_u) && f_u == f_v && f_v == f_w)
        || (f_u == s && low(f_v) && low(f_w) && f_v != f_w)
        || (f_u >= 4 && f_u != s && f_v == f_w && low(f_v)))
}

/// Piece behavior under a rainbow assignment.
pub fn piece_f1_spec(k: u8, f_u: u8, f_v: u8, f_w: u8) -> Result<bool, GadgetError> {
    for c in [f_u, f_v, f_w] {
        check_color(c, k)?;
    }
    let low = |c: u8| c <= 3;
    Ok((f_u >= 4 && low(f_v) && low(f_w)) || (low(f_u) && f_u == f_v && f_v == f_w))
}

pub fn piece_fs_spec(k: u8, s: u8, f_u: u8, f_v: u8, f_w: u8) -> Result<bool, GadgetError> {
    for c in [f_u, f_v, f_w] {
        check_color(c, k)?;
    }
    let low = |c: u8| c <= 3;
    Ok(low(f_v) && low(f_w) && (f_u != s || f_v != f_w))
}

pub fn piece_fr_spec(k: u8, r: u8, f_u: u8, f_v: u8, f_w: u8) -> Result<bool, GadgetError> {
    for c in [f_u, f_v, f_w] {
        check_color(c, k)?;
    }
    let low = |c: u8| c <= 3;
    Ok(low(f_v) && low(f_w) && (f_u != r || f_v == f_w))
}

/// Evaluates `copy_spec` on a named assignment of the copy terminals.
pub fn copy_spec_assignment(
    k: u8,
    f: &PartialColoring,
    terminals: &CopyTerminals,
) -> Result<bool, GadgetError> {
    let get = |t: &TerminalSpec| {
        f.get(&t.id)
            .ok_or_else(|| GadgetError::MissingTerminal(t.id.clone()))
    };
    copy_spec(k, get(&terminals.u)?, get(&terminals.v)?)
}

/// Evaluates `enc_spec` on a named assignment of A. The assignment must be
/// rainbow on the y terminals; anything else is rejected rather than
/// answered.
pub fn enc_spec_assignment(
    k: u8,
    s: u8,
    f: &PartialColoring,
    terminals: &EncoderTerminals,
) -> Result<bool, GadgetError> {
    let get = |t: &TerminalSpec| {
        f.get(&t.id)
            .ok_or_else(|| GadgetError::MissingTerminal(t.id.clone()))
    };
    for (i, y) in terminals.ys.iter().enumerate() {
        let expected = terminals.y_color(i);
        let got = get(y)?;
        if got != expected {
            return Err(GadgetError::NotRainbow {
                id: y.id.clone(),
                expected,
                got,
            });
        }
    }
    enc_spec(k, s, get(&terminals.u)?, get(&terminals.v)?, get(&terminals.w)?)
}

/// One row of a conformance table: an assignment where the constructed
/// gadget and the predicate oracle disagree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConformanceMismatch {
    pub assignment: Vec<(String, u8)>,
    pub extends: bool,
    pub specified: bool,
}

/// Compares `extends` on the constructed copy gadget against `copy_spec` for
/// all k^2 terminal assignments. Empty result means full conformance.
pub fn copy_conformance(k: u8) -> Result<Vec<ConformanceMismatch>, GadgetError> {
    let instance = f_copy(k, CopyTerminals::default_ids(), "copy")?;
    let grid: Vec<(u8, u8)> = (1..=k).flat_map(|a| (1..=k).map(move |b| (a, b))).collect();
    let results: Vec<Option<ConformanceMismatch>> = grid
        .par_iter()
        .map(|&(f_u, f_v)| {
            let f = PartialColoring::from_pairs(k, [("u", f_u), ("v", f_v)])
                .expect("colors in range");
            let ext = extends(&instance.graph, &f).expect("terminals exist");
            let spec = copy_spec(k, f_u, f_v).expect("colors in range");
            (ext != spec).then(|| ConformanceMismatch {
                assignment: vec![("u".into(), f_u), ("v".into(), f_v)],
                extends: ext,
                specified: spec,
            })
        })
        .collect();
    Ok(results.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncoderPart {
    Whole,
    PieceF1,
    PieceFs,
    PieceFr(u8),
}

/// Compares `extends` on a constructed encoder (or one of its pieces)
/// against the matching predicate for all k^3 rainbow assignments.
pub fn encoder_conformance(
    k: u8,
    s: u8,
    part: EncoderPart,
) -> Result<Vec<ConformanceMismatch>, GadgetError> {
    let terminals = EncoderTerminals::default_ids(k);
    let (graph, spec): (Graph, Box<dyn Fn(u8, u8, u8) -> Result<bool, GadgetError> + Sync>) =
        match part {
            EncoderPart::Whole => (
                f_enc(k, s, terminals.clone(), "enc")?.graph,
                Box::new(move |u, v, w| enc_spec(k, s, u, v, w)),
            ),
            EncoderPart::PieceF1 => (
                piece_f1(k, terminals.clone(), "enc")?.graph,
                Box::new(move |u, v, w| piece_f1_spec(k, u, v, w)),
            ),
            EncoderPart::PieceFs => (
                piece_fs(k, s, terminals.clone(), "enc")?.graph,
                Box::new(move |u, v, w| piece_fs_spec(k, s, u, v, w)),
            ),
            EncoderPart::PieceFr(r) => (
                piece_fr(k, s, r, terminals.clone(), "enc")?.graph,
                Box::new(move |u, v, w| piece_fr_spec(k, r, u, v, w)),
            ),
        };
    let rainbow: Vec<(String, u8)> = terminals
        .ys
        .iter()
        .enumerate()
        .map(|(i, y)| (y.id.clone(), terminals.y_color(i)))
        .collect();
    let grid: Vec<(u8, u8, u8)> = (1..=k)
        .flat_map(|u| (1..=k).flat_map(move |v| (1..=k).map(move |w| (u, v, w))))
        .collect();
    let results: Vec<Option<ConformanceMismatch>> = grid
        .par_iter()
        .map(|&(f_u, f_v, f_w)| {
            let mut pairs = vec![
                ("u".to_string(), f_u),
                ("v".to_string(), f_v),
                ("w".to_string(), f_w),
            ];
            pairs.extend(rainbow.iter().cloned());
            let f = PartialColoring::from_pairs(k, pairs.clone()).expect("colors in range");
            let ext = extends(&graph, &f).expect("terminals exist");
            let spec = spec(f_u, f_v, f_w).expect("colors in range");
            (ext != spec).then_some(ConformanceMismatch {
                assignment: pairs,
                extends: ext,
                specified: spec,
            })
        })
        .collect();
    Ok(results.into_iter().flatten().collect())
}
