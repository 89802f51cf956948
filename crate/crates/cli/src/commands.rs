use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use serde::Serialize;
use symfun::bounds::{interval_bounds, threshold_complexity};
use symfun::graphnet::{min_symmetric_cut_rate, star_mix_rate, two_opt_check};
use symfun::harness::{exhaustive_verify, random_verify};
use symfun::treenet::{edge_complexity, edge_components};
use symfun::twonode::{LinkScheme, NodeId};
use symfun::{BoundReport, Codebook, Error, FunctionSpec, Graph, NetworkFile, Scenario, SizeConvention, TreeNetwork};

use crate::{BoundsArgs, CodebookArgs, Format, GraphArgs, OutputArgs, SimulateArgs};

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Resource(_) => 3,
            Error::Protocol(_) => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

type Outcome = Result<ExitCode, Failure>;

fn load_network(path: &Path) -> Result<NetworkFile, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    NetworkFile::from_json(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::usage(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn emit<T: Serialize>(
    out: &OutputArgs,
    value: &T,
    csv: impl FnOnce() -> Result<String, Failure>,
) -> Result<(), Failure> {
    let text = match out.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(value).map_err(Error::from)?;
            s.push('\n');
            s
        }
        Format::Csv => csv()?,
    };
    match &out.out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn edge_label((u, v): (NodeId, NodeId)) -> String {
    format!("{u}-{v}")
}

#[derive(Serialize)]
struct BoundsRow {
    edge: String,
    /// Largest sums on the two sides of the link.
    m1: u32,
    m2: u32,
    #[serde(flatten)]
    report: BoundReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    lower_bits: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    upper_bits: Option<u64>,
}

fn link_bounds(spec: &FunctionSpec, m1: u32, m2: u32) -> Result<BoundReport, Failure> {
    match *spec {
        FunctionSpec::Threshold { theta } => Ok(threshold_complexity(theta, m1, m2)),
        FunctionSpec::Interval { a, b } => Ok(interval_bounds(a, b, m1, m2)?),
        FunctionSpec::General { .. } => Err(Failure::usage(
            "bounds are tabulated for --threshold and --interval only",
        )),
    }
}

pub fn bounds(args: &BoundsArgs) -> Outcome {
    let mut links = Vec::new();
    if let Some(path) = &args.tree {
        let tree = TreeNetwork::from_file(&load_network(path)?, args.root)?;
        let spec = args.function.spec()?;
        let g = tree.graph();
        for e in 0..g.edge_count() {
            let edge = g.edge_ids(e);
            let (side, _) = edge_components(&tree, edge)?;
            let mut inside = 0;
            for id in side {
                inside += g.max_value(g.index_of(id)?);
            }
            let report = edge_complexity(&tree, &spec, edge)?;
            links.push((edge, inside, g.total_max_sum() - inside, report));
        }
    } else {
        let spec = args.function.spec()?;
        let (m1, m2) = args.two.maxima()?;
        links.push(((1, 2), m1, m2, link_bounds(&spec, m1, m2)?));
    }
    if args.block_length == Some(0) {
        return Err(Failure::usage("block length must be at least 1"));
    }

    let rows: Vec<BoundsRow> = links
        .into_iter()
        .map(|(edge, m1, m2, report)| BoundsRow {
            edge: edge_label(edge),
            m1,
            m2,
            lower_bits: args.block_length.map(|b| report.lower_block_bits(b)),
            upper_bits: args.block_length.map(|b| report.upper_block_bits(b)),
            report,
        })
        .collect();
    emit(&args.output, &rows, || {
        csv_text(
            &[
                "edge",
                "m1",
                "m2",
                "case",
                "fooling_size",
                "lower",
                "upper",
                "valid",
                "lower_bits",
                "upper_bits",
            ],
            rows.iter().map(|r| {
                vec![
                    r.edge.clone(),
                    r.m1.to_string(),
                    r.m2.to_string(),
                    serde_json::to_value(r.report.case)
                        .unwrap()
                        .as_str()
                        .unwrap()
                        .to_string(),
                    opt(r.report.fooling_size),
                    r.report.lower.to_string(),
                    r.report.upper.to_string(),
                    r.report.valid.to_string(),
                    opt(r.lower_bits),
                    opt(r.upper_bits),
                ]
            }),
        )
    })?;
    Ok(ExitCode::SUCCESS)
}

fn parse_edges(text: &str) -> Result<Vec<(NodeId, NodeId)>, Failure> {
    text.split(',')
        .map(|pair| {
            let (u, v) = pair
                .trim()
                .split_once('-')
                .ok_or_else(|| Failure::usage(format!("edge `{pair}` is not of the form u-v")))?;
            let id = |s: &str| {
                s.trim()
                    .parse::<NodeId>()
                    .map_err(|e| Failure::usage(format!("edge `{pair}`: {e}")))
            };
            Ok((id(u)?, id(v)?))
        })
        .collect()
}

pub fn simulate(args: &SimulateArgs) -> Outcome {
    let scenario = if let Some(path) = &args.tree {
        let tree = TreeNetwork::from_file(&load_network(path)?, args.root)?;
        Scenario::Tree {
            tree,
            spec: args.function.spec()?,
        }
    } else if let Some(path) = &args.graph {
        let graph = Graph::from_file(&load_network(path)?)?;
        let tree_edges = parse_edges(args.spanning.as_deref().unwrap_or_default())?;
        Scenario::SubtreeScheme {
            graph,
            tree_edges,
            spec: args.function.spec()?,
        }
    } else if args.two_node || args.two.m1.is_some() || args.two.m2.is_some() {
        let (m1, m2) = args.two.maxima()?;
        Scenario::TwoNode {
            m1,
            m2,
            spec: args.function.spec()?,
            starter: args.two.starter(),
        }
    } else {
        return Err(Failure::usage("choose a topology with --two-node, --tree or --graph"));
    };

    let report = if args.random {
        log::info!("random sweep: {} trials, seed {}", args.trials, args.seed);
        random_verify::<f64>(&scenario, args.block_length, args.trials, args.seed)?
    } else {
        exhaustive_verify::<f64>(&scenario, args.block_length)?
    };
    log::info!(
        "{} assignments, {} decode errors, worst {} bits",
        report.instances_checked,
        report.decode_errors,
        report.worst_total()
    );
    emit(&args.output, &report, || Ok(report.to_csv()?))?;
    if report.passed() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!(
            "property violation: {} decode errors, {} causality violations, {} edges out of bounds",
            report.decode_errors,
            report.causality_violations,
            report.edges.iter().filter(|e| !e.within_bounds).count()
        );
        Ok(ExitCode::from(2))
    }
}

#[derive(Serialize)]
struct EdgeRate {
    edge: String,
    rate: f64,
}

#[derive(Serialize)]
struct ConventionReport {
    convention: SizeConvention,
    r_cut: f64,
    cut_side: Vec<NodeId>,
    crossing_edges: usize,
    r_ach: Option<f64>,
    ratio: Option<f64>,
    bound: Option<f64>,
    holds: Option<bool>,
    tight: Option<bool>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    rates: Vec<EdgeRate>,
}

#[derive(Serialize)]
struct GraphReport {
    nodes: usize,
    edges: usize,
    complete: bool,
    spec: FunctionSpec,
    conventions: Vec<ConventionReport>,
}

pub fn graph(args: &GraphArgs) -> Outcome {
    let net = Graph::from_file(&load_network(&args.network)?)?;
    let spec = args.function.spec()?;
    let complete = net.is_complete();
    if args.star_mix && !complete {
        return Err(Failure::usage("--star-mix needs a complete network"));
    }
    let mut conventions = Vec::new();
    for conv in args.convention.list() {
        let cut = min_symmetric_cut_rate::<f64>(&net, &spec, conv)?;
        let mut report = ConventionReport {
            convention: conv,
            r_cut: cut.rate,
            cut_side: cut.side,
            crossing_edges: cut.crossing_edges,
            r_ach: None,
            ratio: None,
            bound: None,
            holds: None,
            tight: None,
            rates: Vec::new(),
        };
        if complete {
            let mix = star_mix_rate::<f64>(&net, &spec, conv)?;
            let check = two_opt_check::<f64>(&net, &spec, conv)?;
            report.r_ach = Some(check.r_ach);
            report.ratio = Some(check.ratio);
            report.bound = Some(check.bound);
            report.holds = Some(check.holds);
            report.tight = Some(check.tight);
            report.rates = mix
                .rates
                .edges
                .iter()
                .zip(&mix.rates.rates)
                .map(|(&e, &rate)| EdgeRate {
                    edge: edge_label(e),
                    rate,
                })
                .collect();
        }
        conventions.push(report);
    }
    let violated = conventions.iter().any(|c| c.holds == Some(false));
    let report = GraphReport {
        nodes: net.node_count(),
        edges: net.edge_count(),
        complete,
        spec,
        conventions,
    };
    emit(&args.output, &report, || {
        csv_text(
            &["convention", "r_cut", "r_ach", "ratio", "bound", "holds", "tight"],
            report.conventions.iter().map(|c| {
                vec![
                    serde_json::to_value(c.convention)
                        .unwrap()
                        .as_str()
                        .unwrap()
                        .to_string(),
                    c.r_cut.to_string(),
                    opt(c.r_ach),
                    opt(c.ratio),
                    opt(c.bound),
                    opt(c.holds),
                    opt(c.tight),
                ]
            }),
        )
    })?;
    if violated {
        eprintln!("property violation: star-mixing ratio exceeds 2(1 - 1/n)");
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct CodeEntry {
    block: Vec<u32>,
    codeword: String,
}

#[derive(Serialize)]
struct CodebookDump {
    letters: Vec<u32>,
    reply_widths: Vec<u32>,
    block_length: usize,
    total_budget: u32,
    kraft_sum: String,
    words: Vec<CodeEntry>,
}

pub fn codebook(args: &CodebookArgs) -> Outcome {
    let cb = match args.letters {
        Some(k) => Codebook::build(k, args.ambiguous, args.block_length)?,
        None => {
            let spec = args.function.spec()?;
            let (m1, m2) = args.two.maxima()?;
            let (own, other) = if args.two.starter == 1 { (m1, m2) } else { (m2, m1) };
            LinkScheme::new(&spec, own, other, args.block_length)?
                .codebook()
                .clone()
        }
    };
    let words = (0..cb.block_count())
        .map(|rank| CodeEntry {
            block: cb.indices_of_rank(rank).into_iter().map(|i| cb.alphabet()[i]).collect(),
            codeword: cb.word(rank).to_bits().to_string(),
        })
        .collect();
    let dump = CodebookDump {
        letters: cb.alphabet().to_vec(),
        reply_widths: cb.reply_widths().to_vec(),
        block_length: cb.block_length(),
        total_budget: cb.total_budget(),
        kraft_sum: cb.kraft_sum().to_string(),
        words,
    };
    emit(&args.output, &dump, || {
        let mut buf = Vec::new();
        cb.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    })?;
    Ok(ExitCode::SUCCESS)
}
