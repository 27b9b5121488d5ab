//! Command-line surface: build gadgets, assemble realizations, and verify
//! every claim about them at desk scale.
//!
//! Exit codes: 0 success, 1 verification FAIL, 2 usage or input error,
//! 3 timeout or exhausted search.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use minor_gadgets::coloring::{boundary_trace, ColoringFamily};
use minor_gadgets::gadgets::{
    copy_conformance, encoder_conformance, f_copy, f_enc, ConformanceMismatch, CopyTerminals,
    EncoderPart, EncoderTerminals, GadgetError,
};
use minor_gadgets::graph::Graph;
use minor_gadgets::minor::{
    complete_pattern, find_model, MinorError, RootConstraint, SearchBudget,
};
use minor_gadgets::pipeline::{
    assemble, audit_minor_freeness, direct_minor_check, verify_realizes, verify_rooted_freeness,
    AssembledInstance, CheckOutcome, InstanceSpec, PipelineError, RealizerSource,
};
use minor_gadgets::planarity::{is_planar, planar_with_boundary, CyclicBoundary};
use minor_gadgets::realizer::{RealizerError, SearchLimits};

const EXIT_OK: u8 = 0;
const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_TIMEOUT: u8 = 3;

#[derive(Parser)]
#[command(name = "mingad", version, about = "Build and audit minor-free coloring-family realizations")]
struct Cli {
    /// Worker threads for parallel verification steps (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Construct or conformance-check the coloring gadgets.
    Gadget {
        #[command(subcommand)]
        action: GadgetAction,
    },
    /// Assemble a realization of a coloring family from a spec document.
    Realize(RealizeArgs),
    /// Re-verify an assembled instance from its artifacts.
    Verify(VerifyArgs),
    /// Search for a clique minor model, exactly.
    Minor(MinorArgs),
    /// Planarity, optionally with a prescribed outer-face boundary.
    Planar(PlanarArgs),
    /// Boundary trace: the exact family of boundary colorings that extend.
    Trace3(TraceArgs),
    /// Export a graph document as DOT.
    Export(ExportArgs),
}

#[derive(Subcommand)]
enum GadgetAction {
    Build(GadgetBuildArgs),
    Verify(GadgetVerifyArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GadgetKindArg {
    Copy,
    Enc,
    F1,
    Fs,
    Fr,
}

#[derive(Args)]
struct GadgetBuildArgs {
    #[arg(long, value_enum)]
    kind: GadgetKindArg,
    #[arg(long)]
    k: u8,
    #[arg(long)]
    s: Option<u8>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GadgetVerifyArgs {
    #[arg(long, value_enum)]
    kind: GadgetKindArg,
    #[arg(long)]
    k: u8,
    #[arg(long)]
    s: Option<u8>,
    #[arg(long)]
    r: Option<u8>,
}

#[derive(Args)]
struct RealizeArgs {
    /// Instance spec document (m, k, family).
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// Load the realizer from this graph document instead of searching.
    #[arg(long)]
    from_file: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    max_internal: usize,
    #[arg(long)]
    max_edges: Option<usize>,
    #[arg(long, default_value_t = 300)]
    budget_secs: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CheckName {
    Realizes,
    Audit,
    Rooted,
    DirectMinor,
}

#[derive(Args)]
struct VerifyArgs {
    /// Directory holding instance.json, graph.json, trace.json, realizer.json.
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [CheckName::Realizes, CheckName::Audit, CheckName::Rooted])]
    checks: Vec<CheckName>,
    #[arg(long, default_value_t = 120)]
    budget_secs: u64,
    /// Write a machine-readable report document here.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct MinorArgs {
    #[arg(long)]
    host: PathBuf,
    #[arg(long, conflicts_with = "complete")]
    pattern: Option<PathBuf>,
    /// Use the complete graph K_t as the pattern.
    #[arg(long)]
    complete: Option<usize>,
    /// Root vertex ids; every branch set must meet them.
    #[arg(long, value_delimiter = ',')]
    roots: Vec<String>,
    #[arg(long, default_value_t = 120)]
    budget_secs: u64,
    /// Write a witness model document here when one is found.
    #[arg(long)]
    witness: Option<PathBuf>,
}

#[derive(Args)]
struct PlanarArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Cyclic outer-face boundary order.
    #[arg(long, value_delimiter = ',')]
    boundary: Vec<String>,
}

#[derive(Args)]
struct TraceArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    boundary: Vec<String>,
    #[arg(long, default_value_t = 3)]
    k: u8,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    let outcome = match cli.command {
        Command::Gadget { action } => match action {
            GadgetAction::Build(args) => gadget_build(args),
            GadgetAction::Verify(args) => gadget_verify(args),
        },
        Command::Realize(args) => realize(args),
        Command::Verify(args) => verify(args),
        Command::Minor(args) => minor(args),
        Command::Planar(args) => planar(args),
        Command::Trace3(args) => trace3(args),
        Command::Export(args) => export(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(classify(&err))
        }
    }
}

/// Timeouts and exhausted searches get their own exit code; everything else
/// that errors out is an input or usage problem.
fn classify(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<MinorError>() {
            if matches!(e, MinorError::Timeout { .. }) {
                return EXIT_TIMEOUT;
            }
        }
        if let Some(e) = cause.downcast_ref::<RealizerError>() {
            if matches!(e, RealizerError::Timeout { .. } | RealizerError::Exhausted { .. }) {
                return EXIT_TIMEOUT;
            }
        }
        if let Some(e) = cause.downcast_ref::<PipelineError>() {
            if matches!(e, PipelineError::RealizerUnavailable(_)) {
                return EXIT_TIMEOUT;
            }
        }
    }
    EXIT_USAGE
}

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_graph(path: &Path) -> Result<Graph> {
    Ok(Graph::from_document(&read_to_string(path)?)?)
}

fn write_or_print(output: Option<&Path>, content: &str) -> Result<()> {
    match output {
        Some(path) => {
            std::fs::write(path, content).with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {}", path.display());
        }
        None => print!("{content}"),
    }
    Ok(())
}

fn require_s(k: u8, s: Option<u8>) -> Result<u8> {
    s.ok_or_else(|| anyhow!(GadgetError::BadParameter(format!("--s is required (4..={k})"))))
}

fn gadget_build(args: GadgetBuildArgs) -> Result<u8> {
    let graph = match args.kind {
        GadgetKindArg::Copy => f_copy(args.k, CopyTerminals::default_ids(), "copy")?.graph,
        GadgetKindArg::Enc => {
            let s = require_s(args.k, args.s)?;
            f_enc(args.k, s, EncoderTerminals::default_ids(args.k), "enc")?.graph
        }
        _ => {
            return Err(anyhow!(GadgetError::BadParameter(
                "build supports --kind copy and --kind enc".into()
            )))
        }
    };
    println!(
        "built {}: {} vertices, {} edges",
        graph.name(),
        graph.vertex_count(),
        graph.edge_count()
    );
    write_or_print(args.output.as_deref(), &graph.to_document())?;
    Ok(EXIT_OK)
}

fn print_mismatches(mismatches: &[ConformanceMismatch]) {
    println!("{:<40} {:>8} {:>8}", "assignment", "extends", "spec");
    for m in mismatches {
        let assignment = m
            .assignment
            .iter()
            .map(|(id, c)| format!("{id}={c}"))
            .collect::<Vec<_>>()
            .join(" ");
        println!("{assignment:<40} {:>8} {:>8}", m.extends, m.specified);
    }
}

fn gadget_verify(args: GadgetVerifyArgs) -> Result<u8> {
    let k = args.k;
    let (mismatches, checked) = match args.kind {
        GadgetKindArg::Copy => (copy_conformance(k)?, (k as usize).pow(2)),
        GadgetKindArg::Enc => {
            let s = require_s(k, args.s)?;
            (encoder_conformance(k, s, EncoderPart::Whole)?, (k as usize).pow(3))
        }
        GadgetKindArg::F1 => (
            encoder_conformance(k, args.s.unwrap_or(4), EncoderPart::PieceF1)?,
            (k as usize).pow(3),
        ),
        GadgetKindArg::Fs => {
            let s = require_s(k, args.s)?;
            (encoder_conformance(k, s, EncoderPart::PieceFs)?, (k as usize).pow(3))
        }
        GadgetKindArg::Fr => {
            let s = require_s(k, args.s)?;
            let r = args.r.ok_or_else(|| {
                anyhow!(GadgetError::BadParameter("--r is required for --kind fr".into()))
            })?;
            (
                encoder_conformance(k, s, EncoderPart::PieceFr(r))?,
                (k as usize).pow(3),
            )
        }
    };
    if mismatches.is_empty() {
        println!("PASS: {checked} assignments checked, no mismatches");
        Ok(EXIT_OK)
    } else {
        println!("FAIL: {} mismatches of {checked} assignments", mismatches.len());
        print_mismatches(&mismatches);
        Ok(EXIT_FAIL)
    }
}

fn realize(args: RealizeArgs) -> Result<u8> {
    let spec = InstanceSpec::from_document(&read_to_string(&args.spec)?)?;
    let source = match &args.from_file {
        Some(path) => RealizerSource::Document(read_to_string(path)?),
        None => RealizerSource::Search(SearchLimits {
            max_internal: args.max_internal,
            max_edges: args.max_edges,
            budget: Duration::from_secs(args.budget_secs),
        }),
    };
    let instance = assemble(&spec, &source)?;
    instance.write_artifacts(&args.out_dir)?;
    println!(
        "assembled m={} k={}: G has {} vertices / {} edges",
        instance.m,
        instance.k,
        instance.graph.vertex_count(),
        instance.graph.edge_count()
    );
    println!(
        "  realizer part: {} vertices / {} edges, boundary {:?}",
        instance.realizer_graph.vertex_count(),
        instance.realizer_graph.edge_count(),
        instance.realizer_problem.boundary().order()
    );
    println!("  gadgets: {}", instance.gadgets.len());
    println!("  artifacts written to {}", args.out_dir.display());
    Ok(EXIT_OK)
}

fn verify(args: VerifyArgs) -> Result<u8> {
    let instance = AssembledInstance::load_artifacts(&args.instance)?;
    let spec = InstanceSpec::new(instance.m, instance.k, instance.family.clone())?;

    // Artifacts must replay before any check runs.
    let replayed = instance
        .trace
        .replay()
        .map_err(|e| anyhow!("artifacts do not replay: {e}"))?;
    if !instance.graph.is_spanning_subgraph_of(&replayed) {
        return Err(anyhow!(
            "artifacts do not replay: the graph is not contained in the trace replay"
        ));
    }

    let budget = SearchBudget::new(Duration::from_secs(args.budget_secs));
    let mut failed = false;
    let mut timed_out = false;
    let mut report_parts: Vec<(String, serde_json::Value)> = Vec::new();

    for check in &args.checks {
        match check {
            CheckName::Realizes => {
                let report = verify_realizes(&instance, &spec)?;
                print!("realizes: {report}");
                failed |= !report.pass();
                report_parts.push(("realizes".into(), serde_json::to_value(&report)?));
            }
            CheckName::Audit => {
                let report = audit_minor_freeness(&instance, budget)?;
                println!("audit:");
                print!("{report}");
                match report.verdict() {
                    CheckOutcome::Pass => {}
                    CheckOutcome::Fail => failed = true,
                    CheckOutcome::Timeout => timed_out = true,
                }
                report_parts.push(("audit".into(), serde_json::to_value(&report)?));
            }
            CheckName::Rooted => {
                let report = verify_rooted_freeness(&instance, budget)?;
                print!("rooted: {report}");
                match report.verdict() {
                    CheckOutcome::Pass => {}
                    CheckOutcome::Fail => failed = true,
                    CheckOutcome::Timeout => timed_out = true,
                }
                report_parts.push(("rooted".into(), serde_json::to_value(&report)?));
            }
            CheckName::DirectMinor => {
                let t = instance.k as usize + 2;
                match direct_minor_check(&instance, budget) {
                    Ok(None) => {
                        println!("direct-minor: PASS: G is K{t}-minor-free by direct search");
                        report_parts
                            .push(("direct_minor".into(), serde_json::json!({"minor_free": true})));
                    }
                    Ok(Some(model)) => {
                        println!("direct-minor: FAIL: K{t} model found");
                        println!("{}", model.to_witness_document());
                        failed = true;
                        report_parts.push((
                            "direct_minor".into(),
                            serde_json::json!({"minor_free": false}),
                        ));
                    }
                    Err(MinorError::Timeout { elapsed }) => {
                        println!("direct-minor: TIMEOUT after {elapsed:.1?} (not a PASS)");
                        timed_out = true;
                        report_parts
                            .push(("direct_minor".into(), serde_json::json!({"timeout": true})));
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        }
    }

    if let Some(path) = &args.report {
        let combined: serde_json::Map<String, serde_json::Value> =
            report_parts.into_iter().collect();
        std::fs::write(path, serde_json::to_string_pretty(&combined)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
        println!("report written to {}", path.display());
    }

    Ok(if failed {
        EXIT_FAIL
    } else if timed_out {
        EXIT_TIMEOUT
    } else {
        EXIT_OK
    })
}

fn minor(args: MinorArgs) -> Result<u8> {
    let host = load_graph(&args.host)?;
    let pattern = match (&args.pattern, args.complete) {
        (Some(path), None) => load_graph(path)?,
        (None, Some(t)) => complete_pattern(t),
        _ => return Err(anyhow!("provide exactly one of --pattern or --complete")),
    };
    let rc = if args.roots.is_empty() {
        RootConstraint::Unrooted
    } else {
        RootConstraint::Rooted {
            roots: args.roots.iter().cloned().collect::<BTreeSet<_>>(),
        }
    };
    let budget = SearchBudget::new(Duration::from_secs(args.budget_secs));
    match find_model(&host, &pattern, &rc, budget)? {
        Some(model) => {
            println!("model found: {} is a minor of {}", pattern.name(), host.name());
            match args.witness.as_deref() {
                Some(path) => write_or_print(Some(path), &model.to_witness_document())?,
                None => print!("{}", model.to_witness_document()),
            }
        }
        None => println!("minor-free: no model of {} in {}", pattern.name(), host.name()),
    }
    Ok(EXIT_OK)
}

fn planar(args: PlanarArgs) -> Result<u8> {
    let graph = load_graph(&args.graph)?;
    if args.boundary.is_empty() {
        println!("planar: {}", is_planar(&graph));
    } else {
        let boundary = CyclicBoundary::new(args.boundary.clone())?;
        println!(
            "planar with boundary {:?}: {}",
            boundary.order(),
            planar_with_boundary(&graph, &boundary)?
        );
    }
    Ok(EXIT_OK)
}

fn trace3(args: TraceArgs) -> Result<u8> {
    let graph = load_graph(&args.graph)?;
    let family: ColoringFamily = boundary_trace(&graph, &args.boundary, args.k)?;
    eprintln!(
        "{} of {} boundary colorings extend",
        family.len(),
        (args.k as usize).pow(args.boundary.len() as u32)
    );
    write_or_print(args.output.as_deref(), &family.to_document())?;
    Ok(EXIT_OK)
}

fn export(args: ExportArgs) -> Result<u8> {
    let graph = load_graph(&args.graph)?;
    write_or_print(args.output.as_deref(), &graph.to_dot())?;
    Ok(EXIT_OK)
}
