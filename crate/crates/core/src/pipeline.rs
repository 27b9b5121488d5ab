//! The end-to-end construction: encode a k-coloring family over X into a
//! 3-coloring family over Z, realize that family with a plane graph, attach
//! copy and encoder gadgets, and audit the result.
//!
//! Assembly follows fixed id conventions: `x{i}` for the boundary vertices,
//! `x{i}_{j}` for the copy targets, `y{j}` for the apex palette vertices, and
//! `z{i}_{j}` for the encoded boundary. The construction trace records a
//! supergraph of the assembled G: the base plane piece already carries the
//! skeleton triangles and x-edges, the apexes are recorded universal over the
//! whole base, and gadgets join as their clique completions. Replaying the
//! trace therefore yields G plus clique-completion edges; minor-freeness of
//! that supergraph carries over to G.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coloring::{
    extends, next_tuple, ColoringError, ColoringFamily, PartialColoring,
};
use crate::document::{from_json_str, to_json_string, DocumentError};
use crate::gadgets::{
    f_copy, f_enc, CopyTerminals, EncoderTerminals, GadgetError, GadgetInstance, TerminalSpec,
};
use crate::graph::{Graph, GraphError, Vertex, VertexRole};
use crate::minor::{
    complete_pattern, find_model, is_minor_free, MinorError, MinorModel, RootConstraint,
    SearchBudget,
};
use crate::planarity::{is_planar, planar_with_boundary, CyclicBoundary, PlanarityError};
use crate::realizer::{
    load_realizer, search_realizer, verify_realizer, RealizationProblem, RealizerCertificate,
    RealizerError, SearchLimits,
};
use crate::trace::{ConstructionTrace, TraceError, TraceStep};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("family is not closed under color permutations; close it before realizing")]
    NotClosed,
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("no realizer available: {0}")]
    RealizerUnavailable(String),
    #[error("construction trace does not reproduce the assembled graph: {0}")]
    ReplayMismatch(String),
    #[error("vertex id `{0}` collides with construction ids")]
    IdCollision(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Coloring(#[from] ColoringError),
    #[error(transparent)]
    Gadget(#[from] GadgetError),
    #[error(transparent)]
    Realizer(#[from] RealizerError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Minor(#[from] MinorError),
    #[error(transparent)]
    Planarity(#[from] PlanarityError),
    #[error(transparent)]
    Document(#[from] DocumentError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn x_id(i: usize) -> String {
    format!("x{i}")
}

pub fn x_mid_id(i: usize, j: u8) -> String {
    format!("x{i}_{j}")
}

pub fn y_id(j: u8) -> String {
    format!("y{j}")
}

pub fn z_id(i: usize, j: u8) -> String {
    format!("z{i}_{j}")
}

pub fn x_ids(m: usize) -> Vec<String> {
    (1..=m).map(x_id).collect()
}

pub fn y_ids(k: u8) -> Vec<String> {
    (4..=k).map(y_id).collect()
}

/// z vertices in boundary order: z1_3..z1_k, z2_3..z2_k, ...
pub fn z_ids(m: usize, k: u8) -> Vec<String> {
    (1..=m)
        .flat_map(|i| (3..=k).map(move |j| z_id(i, j)))
        .collect()
}

/// The coloring family over X to realize, with its palette size.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceSpec {
    pub m: usize,
    pub k: u8,
    pub family: ColoringFamily,
}

impl InstanceSpec {
    pub fn new(m: usize, k: u8, family: ColoringFamily) -> Result<Self, PipelineError> {
        if m < 1 {
            return Err(PipelineError::BadParameter("m must be at least 1".into()));
        }
        if k < 3 {
            return Err(PipelineError::BadParameter(format!(
                "palette size must be at least 3, got {k}"
            )));
        }
        if family.k() != k {
            return Err(PipelineError::BadParameter(format!(
                "family palette {} does not match k = {k}",
                family.k()
            )));
        }
        if family.domain() != x_ids(m) {
            return Err(PipelineError::BadParameter(format!(
                "family domain must be x1..x{m} in order"
            )));
        }
        if !family.is_closed() {
            return Err(PipelineError::NotClosed);
        }
        Ok(InstanceSpec { m, k, family })
    }

    pub fn to_document(&self) -> String {
        let doc = SpecDoc {
            m: self.m,
            k: self.k,
            family: FamilyFields::from(&self.family),
        };
        to_json_string(&doc)
    }

    pub fn from_document(text: &str) -> Result<Self, PipelineError> {
        let doc: SpecDoc = from_json_str(text)?;
        let family = doc.family.into_family()?;
        InstanceSpec::new(doc.m, doc.k, family)
    }
}

#[derive(Serialize, Deserialize)]
struct SpecDoc {
    m: usize,
    k: u8,
    family: FamilyFields,
}

#[derive(Serialize, Deserialize)]
struct FamilyFields {
    domain: Vec<String>,
    k: u8,
    members: Vec<Vec<u8>>,
}

impl From<&ColoringFamily> for FamilyFields {
    fn from(f: &ColoringFamily) -> Self {
        FamilyFields {
            domain: f.domain().to_vec(),
            k: f.k(),
            members: f.members().map(|m| m.to_vec()).collect(),
        }
    }
}

impl FamilyFields {
    fn into_family(self) -> Result<ColoringFamily, PipelineError> {
        ColoringFamily::with_members(self.domain, self.k, self.members)
            .map_err(PipelineError::from)
    }
}

/// The per-boundary-vertex encoding of one X-coloring into 3-colorings of Z:
/// a low color is copied along the whole z-row; color s >= 4 splits the row
/// into two constant runs, differing, with the break before z_{i,s}.
pub fn compute_cf(f: &PartialColoring, m: usize, k: u8) -> Result<ColoringFamily, PipelineError> {
    if k < 4 {
        return Err(PipelineError::BadParameter(format!(
            "the z-encoding needs k >= 4, got {k}"
        )));
    }
    if f.k() != k {
        return Err(PipelineError::BadParameter(format!(
            "assignment palette {} does not match k = {k}",
            f.k()
        )));
    }
    let row_len = (k - 2) as usize;
    let mut per_row: Vec<Vec<Vec<u8>>> = Vec::with_capacity(m);
    for i in 1..=m {
        let color = f
            .get(&x_id(i))
            .ok_or_else(|| PipelineError::BadParameter(format!("assignment misses x{i}")))?;
        let mut options = Vec::new();
        if color <= 3 {
            options.push(vec![color; row_len]);
        } else {
            let s = color;
            for alpha in 1u8..=3 {
                for beta in 1u8..=3 {
                    if alpha == beta {
                        continue;
                    }
                    let row: Vec<u8> = (3..=k).map(|j| if j < s { alpha } else { beta }).collect();
                    options.push(row);
                }
            }
        }
        per_row.push(options);
    }
    let mut family = ColoringFamily::new(z_ids(m, k), 3)?;
    let mut picks = vec![0usize; m];
    loop {
        let mut tuple = Vec::with_capacity(m * row_len);
        for (i, &p) in picks.iter().enumerate() {
            tuple.extend_from_slice(&per_row[i][p]);
        }
        family.insert(tuple)?;
        let mut i = 0;
        loop {
            if i == m {
                return Ok(family);
            }
            picks[i] += 1;
            if picks[i] < per_row[i].len() {
                break;
            }
            picks[i] = 0;
            i += 1;
        }
    }
}

/// Union of the z-encodings over every family member; always closed over the
/// 3-color palette.
pub fn compute_cprime(spec: &InstanceSpec) -> Result<ColoringFamily, PipelineError> {
    if !spec.family.is_closed() {
        return Err(PipelineError::NotClosed);
    }
    let mut out = ColoringFamily::new(z_ids(spec.m, spec.k), 3)?;
    for member in spec.family.members() {
        let f = spec.family.member_as_partial(member)?;
        let cf = compute_cf(&f, spec.m, spec.k)?;
        out = out.union(&cf)?;
    }
    debug_assert!(out.is_closed());
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GadgetKind {
    Copy { i: usize, j: u8 },
    Encoder { i: usize, s: u8 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GadgetDescriptor {
    #[serde(flatten)]
    pub kind: GadgetKind,
    pub namespace: String,
}

fn copy_descriptor(i: usize, j: u8) -> GadgetDescriptor {
    GadgetDescriptor {
        kind: GadgetKind::Copy { i, j },
        namespace: format!("copy_{i}_{j}"),
    }
}

fn encoder_descriptor(i: usize, s: u8) -> GadgetDescriptor {
    GadgetDescriptor {
        kind: GadgetKind::Encoder { i, s },
        namespace: format!("enc_{i}_{s}"),
    }
}

/// Instantiates the gadget a descriptor denotes, with the conventional
/// terminal ids and roles.
pub fn rebuild_gadget(desc: &GadgetDescriptor, k: u8) -> Result<GadgetInstance, PipelineError> {
    match desc.kind {
        GadgetKind::Copy { i, j } => Ok(f_copy(
            k,
            CopyTerminals::new(
                TerminalSpec::new(x_id(i), VertexRole::X),
                TerminalSpec::new(x_mid_id(i, j), VertexRole::Internal),
            ),
            &desc.namespace,
        )?),
        GadgetKind::Encoder { i, s } => Ok(f_enc(
            k,
            s,
            EncoderTerminals::new(
                TerminalSpec::new(x_mid_id(i, s), VertexRole::Internal),
                TerminalSpec::new(z_id(i, s - 1), VertexRole::Z),
                TerminalSpec::new(z_id(i, s), VertexRole::Z),
                (4..=k)
                    .map(|j| TerminalSpec::new(y_id(j), VertexRole::Y))
                    .collect(),
            ),
            &desc.namespace,
        )?),
    }
}

/// The gadget side of the construction: for each boundary vertex x_i and
/// each high color j, a copy gadget from x_i to x_{i,j}; for each high color
/// s, an encoder from x_{i,s} into (z_{i,s-1}, z_{i,s}).
pub fn build_g1(m: usize, k: u8) -> Result<(Graph, Vec<GadgetInstance>), PipelineError> {
    if k < 4 {
        return Err(PipelineError::BadParameter(format!(
            "gadget construction needs k >= 4, got {k}"
        )));
    }
    if m < 1 {
        return Err(PipelineError::BadParameter("m must be at least 1".into()));
    }
    let mut vertices: Vec<Vertex> = Vec::new();
    for i in 1..=m {
        vertices.push(Vertex::new(x_id(i), VertexRole::X));
        for j in 4..=k {
            vertices.push(Vertex::internal(x_mid_id(i, j)));
        }
        for j in 3..=k {
            vertices.push(Vertex::new(z_id(i, j), VertexRole::Z));
        }
    }
    for j in 4..=k {
        vertices.push(Vertex::new(y_id(j), VertexRole::Y));
    }
    let mut graph = Graph::build("g1", vertices, Vec::new())?;
    let mut instances = Vec::new();
    for i in 1..=m {
        for j in 4..=k {
            let desc = copy_descriptor(i, j);
            let gadget = rebuild_gadget(&desc, k)?;
            graph = graph.glue(&gadget.graph)?;
            instances.push(gadget);
        }
        for s in 4..=k {
            let desc = encoder_descriptor(i, s);
            let gadget = rebuild_gadget(&desc, k)?;
            graph = graph.glue(&gadget.graph)?;
            instances.push(gadget);
        }
    }
    Ok((graph, instances))
}

/// The realizer side: the certified plane graph plus the apex vertices
/// y4..yk, each adjacent to all of it, completed into a clique on Y.
pub fn build_g2(cert: &RealizerCertificate, k: u8) -> Result<Graph, PipelineError> {
    if k < 4 {
        return Err(PipelineError::BadParameter(format!(
            "apex construction needs k >= 4, got {k}"
        )));
    }
    let base = cert.graph();
    let ys: Vec<Vertex> = (4..=k)
        .map(|j| Vertex::new(y_id(j), VertexRole::Y))
        .collect();
    let mut g2 = base.add_universal_vertices(&ys, &base.id_set())?;
    if k >= 5 {
        g2 = g2.clique_on(&y_ids(k).into_iter().collect())?;
    }
    Ok(g2.renamed("g2"))
}

/// Where the realizer for the encoded family comes from: a bounded search,
/// or a pre-built graph document that will be verified before use.
#[derive(Debug, Clone)]
pub enum RealizerSource {
    Search(SearchLimits),
    Document(String),
}

impl RealizerSource {
    fn obtain(&self, problem: &RealizationProblem) -> Result<RealizerCertificate, PipelineError> {
        match self {
            RealizerSource::Search(limits) => match search_realizer(problem, limits) {
                Ok(cert) => Ok(cert),
                Err(e @ (RealizerError::Exhausted { .. } | RealizerError::Timeout { .. })) => {
                    Err(PipelineError::RealizerUnavailable(e.to_string()))
                }
                Err(e) => Err(e.into()),
            },
            RealizerSource::Document(text) => Ok(load_realizer(text, problem)?),
        }
    }
}

/// The assembled realization: the graph G, the replayable construction
/// trace of its audited supergraph, and the artifacts needed to recheck
/// everything from scratch.
#[derive(Debug, Clone)]
pub struct AssembledInstance {
    pub m: usize,
    pub k: u8,
    pub family: ColoringFamily,
    pub graph: Graph,
    pub trace: ConstructionTrace,
    pub realizer_problem: RealizationProblem,
    pub realizer_graph: Graph,
    pub gadgets: Vec<GadgetDescriptor>,
}

pub fn assemble(
    spec: &InstanceSpec,
    source: &RealizerSource,
) -> Result<AssembledInstance, PipelineError> {
    let m = spec.m;
    let k = spec.k;
    if k == 3 {
        return assemble_direct(spec, source);
    }

    let cprime = compute_cprime(spec)?;
    let boundary = CyclicBoundary::new(z_ids(m, k)).map_err(PipelineError::Planarity)?;
    let problem = RealizationProblem::new(boundary.clone(), cprime)?;
    let cert = source.obtain(&problem)?;

    // Canonical roles inside the assembly: boundary vertices are Z,
    // everything else in the realizer is internal. Re-verify after
    // re-tagging; roles do not affect either certificate condition.
    let z_set: BTreeSet<String> = z_ids(m, k).into_iter().collect();
    let overrides: BTreeMap<String, VertexRole> = cert
        .graph()
        .ids()
        .map(|id| {
            let role = if z_set.contains(id) {
                VertexRole::Z
            } else {
                VertexRole::Internal
            };
            (id.to_owned(), role)
        })
        .collect();
    let retagged = cert.graph().with_role_overrides(&overrides)?.renamed("g2_prime");
    let cert = verify_realizer(&retagged, &problem)?;

    let (g1, instances) = build_g1(m, k)?;
    // The realizer's internal vertices must not collide with construction
    // ids.
    for id in cert.graph().ids() {
        if !z_set.contains(id) && g1.has_vertex(id) {
            return Err(PipelineError::IdCollision(id.to_owned()));
        }
    }
    let g2 = build_g2(&cert, k)?;
    let graph = g1
        .glue(&g2)?
        .renamed(format!("realization_m{m}_k{k}"));

    // Base plane piece: the realizer plus the skeleton of triangles
    // x_{i,j} z_{i,j-1} z_{i,j} and the edges x_i x_{i,j}.
    let g0 = cert
        .graph()
        .glue(&skeleton(m, k)?)?
        .renamed("g0");
    let x_boundary =
        CyclicBoundary::new(x_ids(m)).map_err(PipelineError::Planarity)?;
    let mut steps = vec![TraceStep::BasePlanePiece {
        graph: g0.clone(),
        boundary: x_boundary,
    }];
    steps.push(TraceStep::AddUniversalVertices {
        vertices: (4..=k).map(|j| Vertex::new(y_id(j), VertexRole::Y)).collect(),
        targets: g0.id_set(),
    });
    if k >= 5 {
        steps.push(TraceStep::AddCliqueEdges {
            ids: y_ids(k).into_iter().collect(),
        });
    }
    let mut descriptors = Vec::new();
    for instance in &instances {
        let shared = instance.terminal_ids();
        steps.push(TraceStep::CliqueSumJoin {
            summand: instance.completed(),
            shared,
        });
    }
    for i in 1..=m {
        for j in 4..=k {
            descriptors.push(copy_descriptor(i, j));
        }
        for s in 4..=k {
            descriptors.push(encoder_descriptor(i, s));
        }
    }
    let trace = ConstructionTrace::new(steps);

    // The replayed supergraph must contain G; anything else is a bug in the
    // assembly itself.
    let replayed = trace.replay()?;
    if !graph.is_spanning_subgraph_of(&replayed) {
        return Err(PipelineError::ReplayMismatch(
            "assembled graph is not contained in the trace replay".into(),
        ));
    }

    Ok(AssembledInstance {
        m,
        k,
        family: spec.family.clone(),
        graph,
        trace,
        realizer_problem: problem,
        realizer_graph: cert.graph().clone(),
        gadgets: descriptors,
    })
}

/// k = 3 needs no gadgets: realize the family directly over X.
fn assemble_direct(
    spec: &InstanceSpec,
    source: &RealizerSource,
) -> Result<AssembledInstance, PipelineError> {
    let boundary =
        CyclicBoundary::new(x_ids(spec.m)).map_err(PipelineError::Planarity)?;
    let problem = RealizationProblem::new(boundary.clone(), spec.family.clone())?;
    let cert = source.obtain(&problem)?;
    let x_set: BTreeSet<String> = x_ids(spec.m).into_iter().collect();
    let overrides: BTreeMap<String, VertexRole> = cert
        .graph()
        .ids()
        .map(|id| {
            let role = if x_set.contains(id) {
                VertexRole::X
            } else {
                VertexRole::Internal
            };
            (id.to_owned(), role)
        })
        .collect();
    let retagged = cert.graph().with_role_overrides(&overrides)?;
    let cert = verify_realizer(&retagged, &problem)?;
    let graph = cert
        .graph()
        .clone()
        .renamed(format!("realization_m{}_k3", spec.m));
    let trace = ConstructionTrace::new(vec![TraceStep::BasePlanePiece {
        graph: graph.clone(),
        boundary,
    }]);
    Ok(AssembledInstance {
        m: spec.m,
        k: 3,
        family: spec.family.clone(),
        graph,
        trace,
        realizer_problem: problem,
        realizer_graph: cert.graph().clone(),
        gadgets: Vec::new(),
    })
}

/// Triangles x_{i,j} z_{i,j-1} z_{i,j} plus the edges x_i x_{i,j}.
fn skeleton(m: usize, k: u8) -> Result<Graph, PipelineError> {
    let mut vertices = Vec::new();
    let mut edges = Vec::new();
    for i in 1..=m {
        vertices.push(Vertex::new(x_id(i), VertexRole::X));
        for j in 3..=k {
            vertices.push(Vertex::new(z_id(i, j), VertexRole::Z));
        }
        for j in 4..=k {
            let mid = x_mid_id(i, j);
            vertices.push(Vertex::internal(mid.clone()));
            edges.push((x_id(i), mid.clone()));
            edges.push((mid.clone(), z_id(i, j - 1)));
            edges.push((mid.clone(), z_id(i, j)));
            edges.push((z_id(i, j - 1), z_id(i, j)));
        }
    }
    Ok(Graph::build("skeleton", vertices, edges)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RealizesRow {
    pub assignment: Vec<u8>,
    pub in_family: bool,
    pub extends: bool,
}

/// One row per function X -> [k]: does it extend to G, and is it in the
/// family? The verdict is PASS exactly when the two columns agree everywhere.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RealizesReport {
    pub rows: Vec<RealizesRow>,
}

impl RealizesReport {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.in_family == r.extends)
    }

    pub fn counterexamples(&self) -> impl Iterator<Item = &RealizesRow> {
        self.rows.iter().filter(|r| r.in_family != r.extends)
    }

    pub fn to_document(&self) -> String {
        to_json_string(self)
    }
}

impl std::fmt::Display for RealizesReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let extending = self.rows.iter().filter(|r| r.extends).count();
        if self.pass() {
            writeln!(
                f,
                "PASS: all {} assignments agree ({} extend)",
                self.rows.len(),
                extending
            )?;
        } else {
            writeln!(
                f,
                "FAIL: {} of {} assignments disagree",
                self.counterexamples().count(),
                self.rows.len()
            )?;
            for row in self.counterexamples() {
                writeln!(
                    f,
                    "  {:?}: in family = {}, extends = {}",
                    row.assignment, row.in_family, row.extends
                )?;
            }
        }
        Ok(())
    }
}

/// Enumerates all k^m functions on X and compares extension against family
/// membership.
pub fn verify_realizes(
    inst: &AssembledInstance,
    spec: &InstanceSpec,
) -> Result<RealizesReport, PipelineError> {
    if spec.m != inst.m || spec.k != inst.k {
        return Err(PipelineError::BadParameter(
            "instance and spec disagree on m or k".into(),
        ));
    }
    let xs = x_ids(spec.m);
    let mut tuples = Vec::new();
    let mut tuple = vec![1u8; spec.m];
    loop {
        tuples.push(tuple.clone());
        if !next_tuple(&mut tuple, spec.k) {
            break;
        }
    }
    let rows: Vec<RealizesRow> = tuples
        .par_iter()
        .map(|t| {
            let partial = PartialColoring::from_pairs(
                spec.k,
                xs.iter().cloned().zip(t.iter().copied()),
            )
            .expect("colors in range");
            let ext = extends(&inst.graph, &partial).expect("x vertices exist");
            RealizesRow {
                assignment: t.clone(),
                in_family: spec.family.contains(t),
                extends: ext,
            }
        })
        .collect();
    Ok(RealizesReport { rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckOutcome {
    Pass,
    Fail,
    Timeout,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditCheck {
    pub name: String,
    pub outcome: CheckOutcome,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub checks: Vec<AuditCheck>,
}

impl AuditReport {
    pub fn verdict(&self) -> CheckOutcome {
        if self.checks.iter().any(|c| c.outcome == CheckOutcome::Fail) {
            CheckOutcome::Fail
        } else if self.checks.iter().any(|c| c.outcome == CheckOutcome::Timeout) {
            CheckOutcome::Timeout
        } else {
            CheckOutcome::Pass
        }
    }

    pub fn to_document(&self) -> String {
        to_json_string(self)
    }

    fn push(&mut self, name: &str, outcome: CheckOutcome, detail: impl Into<String>) {
        self.checks.push(AuditCheck {
            name: name.to_owned(),
            outcome,
            detail: detail.into(),
        });
    }
}

impl std::fmt::Display for AuditReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for check in &self.checks {
            let tag = match check.outcome {
                CheckOutcome::Pass => "PASS",
                CheckOutcome::Fail => "FAIL",
                CheckOutcome::Timeout => "TIMEOUT",
            };
            writeln!(f, "{tag} {}: {}", check.name, check.detail)?;
        }
        Ok(())
    }
}

/// Structural audit of the construction trace:
/// 1. the trace replays, and the assembled graph is contained in the replay;
/// 2. the base piece is planar with all X on the outer face as prescribed;
/// 3. the apex additions add exactly the Y vertices, universal over
///    everything built before them;
/// 4. every clique-sum join shares a clique on both sides;
/// 5. every joined summand is minor-free for the (k+2)-clique: trivially by
///    size, directly by search when small, or through its recorded
///    piece decomposition.
pub fn audit_minor_freeness(
    inst: &AssembledInstance,
    budget: SearchBudget,
) -> Result<AuditReport, PipelineError> {
    let mut report = AuditReport { checks: Vec::new() };
    let k = inst.k;
    let target = complete_pattern(k as usize + 2);

    // Check 1: replay и containment.
    let replayed = match inst.trace.replay() {
        Ok(g) => {
            if inst.graph.is_spanning_subgraph_of(&g) {
                report.push(
                    "replay",
                    CheckOutcome::Pass,
                    format!(
                        "trace rebuilds {} vertices / {} edges containing the assembled graph",
                        g.vertex_count(),
                        g.edge_count()
                    ),
                );
            } else {
                report.push(
                    "replay",
                    CheckOutcome::Fail,
                    "assembled graph is not a spanning subgraph of the replay",
                );
            }
            Some(g)
        }
        Err(
            e @ (TraceError::SharedNotClique { .. }
            | TraceError::SharedMissing { .. }
            | TraceError::SharedEmpty { .. }),
        ) => {
            report.push("replay", CheckOutcome::Fail, format!("replay aborted: {e}"));
            None
        }
        Err(e) => {
            report.push("replay", CheckOutcome::Fail, format!("replay failed: {e}"));
            None
        }
    };

    // Check 2: base plane piece with X on the prescribed outer boundary.
    match inst.trace.steps.first() {
        Some(TraceStep::BasePlanePiece { graph, boundary }) => {
            let x_in_graph: BTreeSet<String> =
                inst.graph.ids_with_role(VertexRole::X).into_iter().collect();
            let boundary_set: BTreeSet<String> =
                boundary.order().iter().cloned().collect();
            let missing_x: Vec<&String> =
                x_in_graph.iter().filter(|x| !graph.has_vertex(x)).collect();
            if boundary_set != x_in_graph {
                report.push(
                    "base_boundary",
                    CheckOutcome::Fail,
                    "prescribed boundary does not equal the X vertex set",
                );
            } else if !missing_x.is_empty() {
                report.push(
                    "base_boundary",
                    CheckOutcome::Fail,
                    format!("X vertices missing from the base piece: {missing_x:?}"),
                );
            } else {
                match planar_with_boundary(graph, boundary) {
                    Ok(true) => report.push(
                        "base_boundary",
                        CheckOutcome::Pass,
                        format!(
                            "base piece ({} vertices) is planar with X on the outer face in order",
                            graph.vertex_count()
                        ),
                    ),
                    Ok(false) => report.push(
                        "base_boundary",
                        CheckOutcome::Fail,
                        "base piece admits no embedding with X on the outer face in order",
                    ),
                    Err(e) => report.push("base_boundary", CheckOutcome::Fail, e.to_string()),
                }
            }
        }
        _ => report.push(
            "base_boundary",
            CheckOutcome::Fail,
            "trace does not start with a base plane piece",
        ),
    }

    // Check 3: apex additions.
    {
        let y_set: BTreeSet<String> =
            inst.graph.ids_with_role(VertexRole::Y).into_iter().collect();
        let mut added: BTreeSet<String> = BTreeSet::new();
        let mut ok = true;
        let mut detail = String::new();
        for (idx, step) in inst.trace.steps.iter().enumerate() {
            match step {
                TraceStep::AddUniversalVertices { vertices, targets } => {
                    match inst.trace.replay_prefix(idx) {
                        Ok(before) => {
                            if targets != &before.id_set() {
                                ok = false;
                                detail = format!(
                                    "step {idx}: universal targets differ from the accumulated vertex set"
                                );
                                break;
                            }
                        }
                        Err(_) => {
                            ok = false;
                            detail = format!("step {idx}: prefix replay failed");
                            break;
                        }
                    }
                    for v in vertices {
                        added.insert(v.id.clone());
                        if v.role != VertexRole::Y {
                            ok = false;
                            detail = format!("step {idx}: universal vertex `{}` is not role Y", v.id);
                        }
                    }
                }
                TraceStep::AddCliqueEdges { ids } => {
                    if !ids.iter().all(|id| added.contains(id)) {
                        ok = false;
                        detail = format!(
                            "step {idx}: clique edges touch vertices outside the apex additions"
                        );
                        break;
                    }
                }
                _ => {}
            }
        }
        let expected = (k as usize).saturating_sub(3);
        if ok && added != y_set {
            ok = false;
            detail = "universal additions do not match the Y vertex set".into();
        }
        if ok && added.len() != expected {
            ok = false;
            detail = format!("expected {expected} apex vertices, found {}", added.len());
        }
        if ok {
            report.push(
                "universal_apexes",
                CheckOutcome::Pass,
                format!("{expected} apex vertices, each universal over the accumulated graph"),
            );
        } else {
            report.push("universal_apexes", CheckOutcome::Fail, detail);
        }
    }

    // Check 4: clique-sum joins.
    {
        let mut ok = true;
        let mut detail = format!(
            "{} joins, each on a shared clique present on both sides",
            inst.trace
                .steps
                .iter()
                .filter(|s| matches!(s, TraceStep::CliqueSumJoin { .. }))
                .count()
        );
        for (idx, step) in inst.trace.steps.iter().enumerate() {
            if let TraceStep::CliqueSumJoin { summand, shared } = step {
                if shared.is_empty() {
                    ok = false;
                    detail = format!("step {idx}: empty shared set");
                    break;
                }
                if !summand.induces_clique(shared) {
                    ok = false;
                    detail = format!("step {idx}: shared set is not a clique in the summand");
                    break;
                }
                match inst.trace.replay_prefix(idx) {
                    Ok(before) => {
                        if !before.induces_clique(shared) {
                            ok = false;
                            detail = format!(
                                "step {idx}: shared set is not a clique in the accumulated graph"
                            );
                            break;
                        }
                    }
                    Err(e) => {
                        ok = false;
                        detail = format!("step {idx}: prefix replay failed: {e}");
                        break;
                    }
                }
            }
        }
        report.push(
            "clique_joins",
            if ok { CheckOutcome::Pass } else { CheckOutcome::Fail },
            detail,
        );
    }

    // Check 5: summand minor-freeness.
    {
        let joins: Vec<&Graph> = inst
            .trace
            .steps
            .iter()
            .filter_map(|s| match s {
                TraceStep::CliqueSumJoin { summand, .. } => Some(summand),
                _ => None,
            })
            .collect();
        let outcomes: Vec<(CheckOutcome, String)> = joins
            .par_iter()
            .map(|summand| summand_outcome(summand, inst, &target, k, budget))
            .collect();
        if outcomes.is_empty() {
            report.push("summands_minor_free", CheckOutcome::Pass, "no joined summands");
        } else {
            for (i, (outcome, detail)) in outcomes.iter().enumerate() {
                report.push(
                    &format!("summand_{i}_minor_free"),
                    *outcome,
                    detail.clone(),
                );
            }
        }
    }

    let _ = replayed;
    Ok(report)
}

fn summand_outcome(
    summand: &Graph,
    inst: &AssembledInstance,
    target: &Graph,
    k: u8,
    budget: SearchBudget,
) -> (CheckOutcome, String) {
    let name = summand.name().to_owned();
    if summand.vertex_count() < k as usize + 2 {
        return (
            CheckOutcome::Pass,
            format!("{name}: only {} vertices, K{} needs more", summand.vertex_count(), k + 2),
        );
    }
    if summand.vertex_count() <= 15 {
        return match is_minor_free(summand, target, &RootConstraint::Unrooted, budget) {
            Ok(true) => (
                CheckOutcome::Pass,
                format!("{name}: exhaustive search found no K{} model", k + 2),
            ),
            Ok(false) => (
                CheckOutcome::Fail,
                format!("{name}: a K{} model exists", k + 2),
            ),
            Err(MinorError::Timeout { elapsed }) => (
                CheckOutcome::Timeout,
                format!("{name}: direct search timed out after {elapsed:.1?}"),
            ),
            Err(e) => (CheckOutcome::Fail, format!("{name}: {e}")),
        };
    }
    // Large summands: check through the recorded piece decomposition of the
    // matching gadget.
    let matching = inst.gadgets.iter().find_map(|desc| {
        let gadget = rebuild_gadget(desc, k).ok()?;
        gadget
            .completed()
            .same_structure(summand)
            .then_some(gadget)
    });
    let Some(gadget) = matching else {
        return (
            CheckOutcome::Fail,
            format!("{name}: too large for direct search and no matching gadget decomposition"),
        );
    };
    let Some(decomposition) = gadget.completion_decomposition() else {
        return (
            CheckOutcome::Fail,
            format!("{name}: matching gadget has no decomposition"),
        );
    };
    match decomposition_bound(summand, &decomposition) {
        Ok(bound) if bound <= k as u32 + 2 => (
            CheckOutcome::Pass,
            format!("{name}: planar pieces + {} apexes bound the clique-minor order by {bound}", bound - 5),
        ),
        Ok(bound) => (
            CheckOutcome::Fail,
            format!("{name}: decomposition only bounds the clique-minor order by {bound}"),
        ),
        Err(e) => (CheckOutcome::Fail, format!("{name}: {e}")),
    }
}

/// Smallest q such that the decomposition proves the graph K_q-minor-free:
/// planar pieces clique-summed are K_5-minor-free, and every added vertex
/// raises the bound by one. Fails if the trace does not replay to the
/// summand or contains steps outside that argument.
fn decomposition_bound(summand: &Graph, trace: &ConstructionTrace) -> Result<u32, String> {
    let replayed = trace.replay().map_err(|e| e.to_string())?;
    if !replayed.same_structure(summand) {
        return Err("decomposition does not replay to the summand".into());
    }
    let mut bound = 0u32;
    for (idx, step) in trace.steps.iter().enumerate() {
        match step {
            TraceStep::BasePlanePiece { graph, .. } => {
                if !is_planar(graph) {
                    return Err(format!("step {idx}: piece is not planar"));
                }
                bound = bound.max(5);
            }
            TraceStep::CliqueSumJoin { summand: piece, .. } => {
                if !is_planar(piece) {
                    return Err(format!("step {idx}: joined piece is not planar"));
                }
                bound = bound.max(5);
            }
            TraceStep::AddUniversalVertices { vertices, .. } => {
                bound += vertices.len() as u32;
            }
            TraceStep::AddCliqueEdges { .. } => {
                return Err(format!(
                    "step {idx}: edge additions are outside the decomposition argument"
                ));
            }
        }
    }
    Ok(bound)
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case", tag = "outcome")]
pub enum RootedOutcome {
    MinorFree,
    ModelFound {
        branch_sets: BTreeMap<String, Vec<String>>,
    },
    Timeout { elapsed_secs: f64 },
}

/// Result of the rooted clique-minor check on the assembled graph.
#[derive(Debug, Clone, Serialize)]
pub struct RootedReport {
    /// Fewer X vertices than pattern vertices makes the answer immediate:
    /// every branch set needs its own root.
    pub trivial: bool,
    pub pattern: String,
    #[serde(flatten)]
    pub outcome: RootedOutcome,
}

impl RootedReport {
    pub fn verdict(&self) -> CheckOutcome {
        match self.outcome {
            RootedOutcome::MinorFree { .. } => CheckOutcome::Pass,
            RootedOutcome::ModelFound { .. } => CheckOutcome::Fail,
            RootedOutcome::Timeout { .. } => CheckOutcome::Timeout,
        }
    }

    pub fn to_document(&self) -> String {
        to_json_string(self)
    }
}

impl std::fmt::Display for RootedReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.outcome {
            RootedOutcome::MinorFree => {
                if self.trivial {
                    writeln!(
                        f,
                        "PASS (trivial): fewer roots than {} requires, so no rooted model can exist",
                        self.pattern
                    )
                } else {
                    writeln!(f, "PASS: no X-rooted {} model", self.pattern)
                }
            }
            RootedOutcome::ModelFound { branch_sets } => {
                writeln!(f, "FAIL: X-rooted {} model found: {branch_sets:?}", self.pattern)
            }
            RootedOutcome::Timeout { elapsed_secs } => {
                writeln!(
                    f,
                    "TIMEOUT after {elapsed_secs:.1}s: rooted {} check unresolved (not a PASS)",
                    self.pattern
                )
            }
        }
    }
}

/// Searches for an X-rooted K_{k+1} model in the assembled graph. A timeout
/// is reported as such, never as minor-freeness.
pub fn verify_rooted_freeness(
    inst: &AssembledInstance,
    budget: SearchBudget,
) -> Result<RootedReport, PipelineError> {
    let roots: BTreeSet<String> = inst
        .graph
        .ids_with_role(VertexRole::X)
        .into_iter()
        .collect();
    let t = inst.k as usize + 1;
    let pattern = complete_pattern(t);
    let trivial = roots.len() < t;
    let rc = RootConstraint::Rooted { roots };
    let outcome = match find_model(&inst.graph, &pattern, &rc, budget) {
        Ok(None) => RootedOutcome::MinorFree,
        Ok(Some(model)) => RootedOutcome::ModelFound {
            branch_sets: model
                .branch_sets
                .iter()
                .map(|(k, v)| (k.clone(), v.iter().cloned().collect()))
                .collect(),
        },
        Err(MinorError::Timeout { elapsed }) => RootedOutcome::Timeout {
            elapsed_secs: elapsed.as_secs_f64(),
        },
        Err(e) => return Err(e.into()),
    };
    Ok(RootedReport {
        trivial,
        pattern: format!("K{t}"),
        outcome,
    })
}

/// Convenience wrapper for the whole-graph unrooted check used as direct
/// cross-validation of the audit.
pub fn direct_minor_check(
    inst: &AssembledInstance,
    budget: SearchBudget,
) -> Result<Option<MinorModel>, MinorError> {
    let pattern = complete_pattern(inst.k as usize + 2);
    find_model(&inst.graph, &pattern, &RootConstraint::Unrooted, budget)
}

#[derive(Serialize, Deserialize)]
struct InstanceDoc {
    m: usize,
    k: u8,
    family: FamilyFields,
    gadgets: Vec<GadgetDescriptor>,
    graph_file: String,
    trace_file: String,
    realizer_file: String,
}

#[derive(Serialize, Deserialize)]
struct RealizerDoc {
    problem: ProblemFields,
    graph: Graph,
}

#[derive(Serialize, Deserialize)]
struct ProblemFields {
    boundary: Vec<String>,
    family: FamilyFields,
}

impl AssembledInstance {
    /// Writes `instance.json`, `graph.json`, `trace.json`, `realizer.json`.
    pub fn write_artifacts(&self, dir: &Path) -> Result<(), PipelineError> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("graph.json"), self.graph.to_document())?;
        std::fs::write(dir.join("trace.json"), self.trace.to_document())?;
        let realizer = RealizerDoc {
            problem: ProblemFields {
                boundary: self.realizer_problem.boundary().order().to_vec(),
                family: FamilyFields::from(self.realizer_problem.family()),
            },
            graph: self.realizer_graph.clone(),
        };
        std::fs::write(dir.join("realizer.json"), to_json_string(&realizer))?;
        let doc = InstanceDoc {
            m: self.m,
            k: self.k,
            family: FamilyFields::from(&self.family),
            gadgets: self.gadgets.clone(),
            graph_file: "graph.json".into(),
            trace_file: "trace.json".into(),
            realizer_file: "realizer.json".into(),
        };
        std::fs::write(dir.join("instance.json"), to_json_string(&doc))?;
        Ok(())
    }

    /// Reads artifacts back. The embedded realizer is re-verified against its
    /// recorded problem; nothing else is trusted either, but the heavier
    /// checks live in the audit operations.
    pub fn load_artifacts(dir: &Path) -> Result<AssembledInstance, PipelineError> {
        let doc: InstanceDoc = from_json_str(&std::fs::read_to_string(dir.join("instance.json"))?)?;
        let graph = Graph::from_document(&std::fs::read_to_string(dir.join(&doc.graph_file))?)?;
        let trace =
            ConstructionTrace::from_document(&std::fs::read_to_string(dir.join(&doc.trace_file))?)?;
        let realizer: RealizerDoc =
            from_json_str(&std::fs::read_to_string(dir.join(&doc.realizer_file))?)?;
        let boundary = CyclicBoundary::new(realizer.problem.boundary)
            .map_err(|e| DocumentError::schema(e.to_string()))?;
        let problem = RealizationProblem::new(boundary, realizer.problem.family.into_family()?)?;
        let cert = verify_realizer(&realizer.graph, &problem)?;
        Ok(AssembledInstance {
            m: doc.m,
            k: doc.k,
            family: doc.family.into_family()?,
            graph,
            trace,
            realizer_problem: problem,
            realizer_graph: cert.graph().clone(),
            gadgets: doc.gadgets,
        })
    }
}

/// Default search limits used by `assemble` callers; a thin re-export point
/// so the CLI and tests agree on defaults.
pub fn default_realizer_limits() -> SearchLimits {
    SearchLimits {
        max_internal: 3,
        max_edges: None,
        budget: Duration::from_secs(300),
    }
}
