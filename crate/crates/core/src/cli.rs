//! The `mglab` command line.
//!
//! Exit codes: 0 success, 1 invalid arguments or unreadable input, 2
//! validation failure, 3 oracle enumeration cap exceeded.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::continuum::{
    sample_icrg_capped, sample_icrg_weighted, sample_icrt, sampled_distance_matrix, CapDiagnostic,
    ContinuumError, Horizon, MetricTree,
};
use crate::discrete_trees::{enumerate_d_trees, sample_p_tree_prefix, DTreeSampler, TreeError};
use crate::experiments::{
    bias_tail_experiment, converge_experiment, render_table, sha256_hex, ConvergeConfig,
    ExperimentError, ExperimentManifest, Model, ParamFileHash,
};
use crate::graph_samplers::{
    cm_conditioned_oracle, cm_matching_law, pk_law_oracle, sample_configuration_model,
    sample_coupled_multiplicative, sample_multiplicative_graph, sample_multiplicative_multigraph,
    DkSampler, MultiplicativeParams, PkSampler, SamplerError,
};
use crate::multigraph::{rational_to_f64, GraphError, Multigraph};
use crate::params::{DegreeSequence, PVector, ParamError, SequenceKind, ThetaVector};
use crate::rng::{block_stream, stream};
use crate::rtree::{
    check_four_point, core_measure_from_matrix, read_matrix_csv, reconstruct, write_matrix_csv,
    RtreeError,
};

#[derive(Debug, Parser)]
#[command(name = "mglab", version, about = "Samplers and oracles for multigraphs with fixed degrees and surplus")]
struct Cli {
    /// Master seed for all random streams.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Parameter file (JSON, or CSV for matrices).
    #[arg(long, global = true)]
    params: Option<PathBuf>,
    /// Output directory; a manifest is written next to the output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Number of repetitions.
    #[arg(long, global = true, default_value_t = 1)]
    reps: usize,
    /// Output format; JSON lines for samples, CSV for statistic tables.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MultKind {
    Simple,
    Multi,
    Coupled,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// D-tree (degree-sequence file) or P-tree prefix (probability file).
    SampleTree {
        /// Steps of the P-tree construction.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// (D,k)-graph, or (P,k)-graph prefix with --k and --steps.
    SampleGraph {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Configuration model on a half-edge sequence.
    SampleCm,
    /// Multiplicative graph or multigraph.
    SampleMult {
        #[arg(long, value_enum, default_value_t = MultKind::Simple)]
        kind: MultKind,
    },
    /// ICRT point process and its stick-breaking tree.
    SampleIcrt {
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        ymax: Option<f64>,
    },
    /// Weighted (Theta,k)-ICRG with a distance matrix of cut points.
    SampleIcrg {
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 3)]
        points: usize,
        /// Capped-rejection mode with this envelope.
        #[arg(long)]
        cap: Option<f64>,
    },
    /// Rebuilds an R-tree from a distance matrix CSV.
    Reconstruct,
    /// Core measure of a 2c x 2c distance matrix CSV.
    CoreMeasure,
    Experiment {
        #[command(subcommand)]
        which: ExperimentCommand,
    },
    Oracle {
        #[command(subcommand)]
        which: OracleCommand,
    },
    /// Re-runs the command recorded in a manifest.
    Replay { manifest: PathBuf },
}

#[derive(Debug, Subcommand)]
enum ExperimentCommand {
    /// Discrepancy of a parameter family to a limit object.
    Converge {
        /// Family member parameter files, in ladder order.
        #[arg(long = "family", required = true)]
        family: Vec<PathBuf>,
        /// Target parameter file (probability vector or Theta).
        #[arg(long)]
        target: PathBuf,
        #[arg(long, default_value_t = 0)]
        k: usize,
        #[arg(long, default_value_t = 3)]
        points: usize,
        /// Steps for probability-vector models.
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        /// Target repetitions (defaults to --reps).
        #[arg(long)]
        target_reps: Option<usize>,
        #[arg(long, default_value_t = 199)]
        perm: usize,
        #[arg(long, default_value_t = 1000)]
        perm_reps: usize,
    },
    /// Tail of the rescaled bias over uniform trees.
    BiasTail {
        #[arg(long)]
        k: usize,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 10.0, 50.0])]
        m: Vec<f64>,
    },
}

#[derive(Debug, Subcommand)]
enum OracleCommand {
    EnumerateTrees {
        #[arg(long, default_value_t = 100_000)]
        cap: u64,
    },
    /// Configuration-model law; conditioned on surplus k when given.
    CmLaw {
        #[arg(long)]
        k: Option<usize>,
    },
    PkLaw {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1_000_000)]
        cap: u64,
    },
}

#[derive(Debug)]
enum CliError {
    Args(String),
    Validation(String),
    Cap(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Args(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Cap(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Args(m) | CliError::Validation(m) | CliError::Cap(m) => m,
        }
    }
}

impl From<ParamError> for CliError {
    fn from(e: ParamError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<TreeError> for CliError {
    fn from(e: TreeError) -> Self {
        match e {
            TreeError::TooLarge { .. } => CliError::Cap(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::Tree(t) => t.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<SamplerError> for CliError {
    fn from(e: SamplerError) -> Self {
        match e {
            SamplerError::TooLarge { .. } => CliError::Cap(e.to_string()),
            SamplerError::Tree(t) => t.into(),
            SamplerError::Graph(g) => g.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<ContinuumError> for CliError {
    fn from(e: ContinuumError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<RtreeError> for CliError {
    fn from(e: RtreeError) -> Self {
        match e {
            RtreeError::Csv(m) => CliError::Args(format!("cannot read matrix: {m}")),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Sampler(s) => s.into(),
            ExperimentError::Graph(g) => g.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// A parsed parameter file.
enum Params {
    Degrees(DegreeSequence),
    P(PVector),
    Theta(ThetaVector),
    Mult(MultiplicativeParams),
}

struct Loaded {
    hash: ParamFileHash,
    bytes: Vec<u8>,
}

fn load(path: &Path) -> CliResult<Loaded> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::Args(format!("cannot read {}: {e}", path.display())))?;
    Ok(Loaded {
        hash: ParamFileHash {
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        },
        bytes,
    })
}

fn parse_params(loaded: &Loaded) -> CliResult<Params> {
    let value: Value = serde_json::from_slice(&loaded.bytes)
        .map_err(|e| CliError::Args(format!("{}: not JSON: {e}", loaded.hash.path)))?;
    let has = |key: &str| value.get(key).is_some();
    let invalid = |e: serde_json::Error| CliError::Validation(format!("{}: {e}", loaded.hash.path));
    if has("degrees") {
        Ok(Params::Degrees(serde_json::from_value(value).map_err(invalid)?))
    } else if has("lambda") {
        let m: MultiplicativeParams = serde_json::from_value(value).map_err(invalid)?;
        m.validate()?;
        Ok(Params::Mult(m))
    } else if has("p") || has("p_inf") {
        Ok(Params::P(serde_json::from_value(value).map_err(invalid)?))
    } else if has("theta0") || has("theta") {
        Ok(Params::Theta(serde_json::from_value(value).map_err(invalid)?))
    } else {
        Err(CliError::Validation(format!(
            "{}: expected degrees, p, theta or lambda",
            loaded.hash.path
        )))
    }
}

struct Run {
    cli: Cli,
    format: Format,
    manifest: ExperimentManifest,
}

impl Run {
    fn params_file(&mut self) -> CliResult<Loaded> {
        let path = self
            .cli
            .params
            .clone()
            .ok_or_else(|| CliError::Args("--params is required".into()))?;
        let loaded = load(&path)?;
        self.manifest.params.push(loaded.hash.clone());
        Ok(loaded)
    }

    fn params(&mut self) -> CliResult<Params> {
        let loaded = self.params_file()?;
        parse_params(&loaded)
    }

    fn csv_only_json(&self, what: &str) -> CliResult<()> {
        if self.format == Format::Csv {
            return Err(CliError::Args(format!("{what} has no CSV form; use --format json")));
        }
        Ok(())
    }

    /// Runs `f` for each repetition on its own stream, in parallel,
    /// returning outputs in repetition order.
    fn per_rep<T: Send>(
        &mut self,
        f: impl Fn(usize, &mut crate::rng::StreamRng) -> CliResult<T> + Sync,
    ) -> CliResult<Vec<T>> {
        let seed = self.cli.seed;
        self.manifest.streams.push((0, "one stream per repetition".into()));
        (0..self.cli.reps)
            .into_par_iter()
            .map(|rep| {
                let mut rng = stream(seed, block_stream(0, rep as u64));
                f(rep, &mut rng)
            })
            .collect()
    }
}

fn edge_rows(rep: usize, g: &Multigraph) -> String {
    let mut out = String::new();
    for ((u, v), m) in g.edges() {
        let _ = writeln!(out, "{rep},{u},{v},{m}");
    }
    out
}

fn tree_json(t: &MetricTree) -> Value {
    let segments: Vec<Value> = t.segments().map(|(a, b, l)| json!([a, b, l])).collect();
    json!({"nodes": t.node_count(), "segments": segments, "marks": t.marks()})
}

fn matrix_rows(rep: usize, weight: f64, m: &[Vec<f64>]) -> String {
    let n = m.len();
    let entries: Vec<String> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| format!("{:?}", m[i][j]))
        .collect();
    let mut row = format!("{rep},{weight:?}");
    for e in entries {
        row.push(',');
        row.push_str(&e);
    }
    row.push('\n');
    row
}

fn sample_tree(run: &mut Run, steps: Option<usize>) -> CliResult<String> {
    let format = run.format;
    match run.params()? {
        Params::Degrees(d) => {
            if d.kind() != SequenceKind::Tree {
                return Err(CliError::Validation(format!("sample-tree needs a tree sequence, got {}", d.kind())));
            }
            DTreeSampler::new(&d)?;
            let lines = run.per_rep(|rep, rng| {
                let mut sampler = DTreeSampler::new(&d)?;
                let t = sampler.sample(rng).to_labeled();
                Ok(match format {
                    Format::Json => t.to_json() + "\n",
                    Format::Csv => edge_rows(rep, &Multigraph::from_tree(&t)),
                })
            })?;
            Ok(header(format, "rep,u,v,mult") + &lines.concat())
        }
        Params::P(p) => {
            let steps = steps.ok_or_else(|| CliError::Args("--steps is required for a P-tree".into()))?;
            let lines = run.per_rep(|rep, rng| {
                let (t, tuple) = sample_p_tree_prefix(&p, steps, rng);
                Ok(match format {
                    Format::Json => {
                        let tuple: Vec<String> = tuple.iter().map(|v| v.to_string()).collect();
                        let tree: Value = serde_json::from_str(&t.to_json()).expect("valid json");
                        json!({"tree": tree, "tuple": tuple}).to_string() + "\n"
                    }
                    Format::Csv => edge_rows(rep, &Multigraph::from_tree(&t)),
                })
            })?;
            Ok(header(format, "rep,u,v,mult") + &lines.concat())
        }
        _ => Err(CliError::Validation("sample-tree needs a degree sequence or probability vector".into())),
    }
}

fn header(format: Format, csv: &str) -> String {
    match format {
        Format::Json => String::new(),
        Format::Csv => format!("{csv}\n"),
    }
}

fn graph_out(format: Format, rep: usize, g: &Multigraph) -> String {
    match format {
        Format::Json => g.to_json() + "\n",
        Format::Csv => edge_rows(rep, g),
    }
}

fn sample_graph(run: &mut Run, k: Option<usize>, steps: Option<usize>) -> CliResult<String> {
    let format = run.format;
    let lines = match run.params()? {
        Params::Degrees(d) => {
            let k = match (d.kind(), k) {
                (SequenceKind::Surplus { k }, None) => k,
                (_, Some(k)) => k,
                (kind, None) => return Err(CliError::Args(format!("--k is required for a {kind} sequence"))),
            };
            DkSampler::new(&d, k)?;
            run.per_rep(|rep, rng| {
                let g = DkSampler::new(&d, k)?.sample(rng)?;
                Ok(graph_out(format, rep, &g))
            })?
        }
        Params::P(p) => {
            let k = k.ok_or_else(|| CliError::Args("--k is required for a (P,k)-graph".into()))?;
            let steps = steps.ok_or_else(|| CliError::Args("--steps is required for a (P,k)-graph".into()))?;
            PkSampler::new(&p, k)?;
            run.per_rep(|rep, rng| {
                let g = PkSampler::new(&p, k)?.sample(steps, rng)?;
                Ok(graph_out(format, rep, &g))
            })?
        }
        _ => return Err(CliError::Validation("sample-graph needs a degree sequence or probability vector".into())),
    };
    Ok(header(format, "rep,u,v,mult") + &lines.concat())
}

fn sample_cm(run: &mut Run) -> CliResult<String> {
    let format = run.format;
    let Params::Degrees(d) = run.params()? else {
        return Err(CliError::Validation("sample-cm needs a half-edge sequence".into()));
    };
    let lines = run.per_rep(|rep, rng| {
        let g = sample_configuration_model(&d, rng)?;
        Ok(graph_out(format, rep, &g))
    })?;
    Ok(header(format, "rep,u,v,mult") + &lines.concat())
}

fn sample_mult(run: &mut Run, kind: MultKind) -> CliResult<String> {
    let format = run.format;
    let Params::Mult(w) = run.params()? else {
        return Err(CliError::Validation("sample-mult needs {\"lambda\", \"weights\"}".into()));
    };
    if kind == MultKind::Coupled {
        run.csv_only_json("coupled sampling")?;
    }
    let lines = run.per_rep(|rep, rng| {
        Ok(match kind {
            MultKind::Simple => graph_out(format, rep, &sample_multiplicative_graph(&w, rng)?),
            MultKind::Multi => graph_out(format, rep, &sample_multiplicative_multigraph(&w, rng)?),
            MultKind::Coupled => {
                let (simple, multi) = sample_coupled_multiplicative(&w, rng)?;
                let simple: Value = serde_json::from_str(&simple.to_json()).expect("valid json");
                let multi: Value = serde_json::from_str(&multi.to_json()).expect("valid json");
                json!({"simple": simple, "multi": multi}).to_string() + "\n"
            }
        })
    })?;
    Ok(header(format, "rep,u,v,mult") + &lines.concat())
}

fn theta_params(run: &mut Run) -> CliResult<ThetaVector> {
    match run.params()? {
        Params::Theta(t) => Ok(t),
        _ => Err(CliError::Validation("expected {\"theta0\", \"theta\"}".into())),
    }
}

fn sample_icrt_cmd(run: &mut Run, points: Option<usize>, ymax: Option<f64>) -> CliResult<String> {
    let format = run.format;
    let theta = theta_params(run)?;
    let horizon = match (points, ymax) {
        (Some(_), Some(_)) => return Err(CliError::Args("give --points or --ymax, not both".into())),
        (_, Some(y)) if !(y >= 0.0 && y.is_finite()) => {
            return Err(CliError::Args("--ymax must be a non-negative number".into()))
        }
        (_, Some(y)) => Horizon::YMax(y),
        (n, None) => Horizon::Points(n.unwrap_or(10)),
    };
    let lines = run.per_rep(|rep, rng| {
        let (real, _) = sample_icrt(&theta, horizon, rng);
        Ok(match format {
            Format::Json => real.to_json() + "\n",
            Format::Csv => {
                let mut out = String::new();
                for (i, (y, z)) in real.cuts.iter().zip(&real.anchors).enumerate() {
                    let _ = writeln!(out, "{rep},{},{y:?},{z:?}", i + 1);
                }
                out
            }
        })
    })?;
    Ok(header(format, "rep,index,y,z") + &lines.concat())
}

fn sample_icrg_cmd(run: &mut Run, k: usize, points: usize, cap: Option<f64>) -> CliResult<String> {
    let format = run.format;
    let theta = theta_params(run)?;
    if points == 0 {
        return Err(CliError::Args("--points must be positive".into()));
    }
    let lines = run.per_rep(|rep, rng| {
        let horizon = Horizon::Points(2 * k + points);
        let mut diag = CapDiagnostic::default();
        let s = match cap {
            Some(c) => sample_icrg_capped(&theta, k, horizon, c, &mut diag, rng)?,
            None => sample_icrg_weighted(&theta, k, horizon, rng)?,
        };
        let marks: Vec<usize> = (2 * k..2 * k + points).collect();
        let m = sampled_distance_matrix(&s.space, &marks)?;
        Ok(match format {
            Format::Json => {
                let mut v = json!({
                    "weight": s.weight,
                    "squares": s.squares,
                    "cuts": s.realization.cuts,
                    "anchors": s.realization.anchors,
                    "matrix": m,
                });
                if cap.is_some() {
                    v["attempts"] = json!(diag.attempts);
                    v["truncated"] = json!(diag.truncated);
                }
                v.to_string() + "\n"
            }
            Format::Csv => matrix_rows(rep, s.weight, &m),
        })
    })?;
    Ok(header(format, "rep,weight,upper_entries...") + &lines.concat())
}

fn read_matrix(run: &mut Run) -> CliResult<(Vec<String>, Vec<Vec<f64>>)> {
    let loaded = run.params_file()?;
    Ok(read_matrix_csv(loaded.bytes.as_slice())?)
}

fn reconstruct_cmd(run: &mut Run) -> CliResult<String> {
    let (names, m) = read_matrix(run)?;
    if let Ok(report) = check_four_point(&m) {
        if let Some((quad, gap)) = report.witness {
            let q: Vec<&str> = quad.iter().map(|&i| names.get(i).map_or("?", |s| s.as_str())).collect();
            return Err(CliError::Validation(format!(
                "not a tree metric: four-point condition fails on {q:?} (indices {quad:?}, gap {gap})"
            )));
        }
    }
    let tree = reconstruct(&m)?;
    match run.format {
        Format::Json => {
            let mut v = tree_json(&tree);
            v["names"] = json!(names);
            Ok(v.to_string() + "\n")
        }
        Format::Csv => {
            let mut buf = Vec::new();
            write_matrix_csv(&mut buf, &names, &tree.mark_distance_matrix())?;
            Ok(String::from_utf8(buf).expect("utf8 csv"))
        }
    }
}

fn core_measure_cmd(run: &mut Run) -> CliResult<String> {
    let (_, m) = read_matrix(run)?;
    let value = core_measure_from_matrix(&m)?;
    Ok(match run.format {
        Format::Json => json!({"pairs": m.len() / 2, "core_measure": value}).to_string() + "\n",
        Format::Csv => format!("pairs,core_measure\n{},{value:?}\n", m.len() / 2),
    })
}

fn model_from(params: Params, k: usize, steps: usize) -> CliResult<Model> {
    Ok(match params {
        Params::Degrees(d) if k == 0 && d.kind() == SequenceKind::Tree => Model::DTree(d),
        Params::Degrees(d) => Model::DkGraph { d, k },
        Params::P(p) if k == 0 => Model::PTree { p, n_steps: steps },
        Params::P(p) => Model::PkGraph { p, k, n_steps: steps },
        Params::Theta(t) if k == 0 => Model::Icrt(t),
        Params::Theta(theta) => Model::Icrg { theta, k },
        Params::Mult(_) => {
            return Err(CliError::Validation("multiplicative parameters are not an experiment model".into()))
        }
    })
}

#[allow(clippy::too_many_arguments)]
fn converge_cmd(
    run: &mut Run,
    family: &[PathBuf],
    target: &Path,
    k: usize,
    points: usize,
    steps: usize,
    target_reps: Option<usize>,
    perm: usize,
    perm_reps: usize,
) -> CliResult<String> {
    let mut models = Vec::with_capacity(family.len());
    for path in family {
        let loaded = load(path)?;
        run.manifest.params.push(loaded.hash.clone());
        models.push(model_from(parse_params(&loaded)?, k, steps)?);
    }
    let loaded = load(target)?;
    run.manifest.params.push(loaded.hash.clone());
    let target_model = model_from(parse_params(&loaded)?, k, steps)?;
    let cfg = ConvergeConfig {
        family: models,
        target: target_model,
        n_points: points,
        n_reps: run.cli.reps,
        target_reps: target_reps.unwrap_or(run.cli.reps),
        seed: run.cli.seed,
        n_perm: perm,
        perm_reps,
    };
    run.manifest.streams.push((0, "target".into()));
    for i in 0..family.len() {
        run.manifest.streams.push((i as u64 + 1, format!("family member {}", i + 1)));
    }
    run.manifest.streams.push((u64::from(u32::MAX), "permutation test".into()));
    let report = converge_experiment(&cfg)?;
    if run.format == Format::Json {
        return Ok(serde_json::to_string_pretty(&report).expect("report serialises") + "\n");
    }
    let meta = [
        ("experiment", "converge".to_string()),
        ("statistic", "energy distance (V-statistic) on upper-triangle entries; per-entry weighted KS".to_string()),
        ("measure", "uniform i.i.d. free stars (discrete), cut points (continuum)".to_string()),
        ("caveat", "cut points stand in for the vanishing-measure regime".to_string()),
        ("k", k.to_string()),
        ("points", points.to_string()),
        ("target_mean_entry", format!("{:?}", report.target_mean_entry)),
        ("target_ess", format!("{:?}", report.target_ess)),
        ("strictly_decreasing", report.strictly_decreasing.to_string()),
        ("perm_statistic", format!("{:?}", report.perm_statistic)),
        ("perm_p_value", format!("{:?}", report.perm_p_value)),
    ];
    let dims = points * (points - 1) / 2;
    let mut header: Vec<String> = ["model", "size", "scaling", "energy", "mean_entry"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..dims).map(|e| format!("ks_{e}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            let mut row = vec![
                r.model.clone(),
                r.size.to_string(),
                format!("{:?}", r.scaling),
                format!("{:?}", r.energy),
                format!("{:?}", r.mean_entry),
            ];
            row.extend(r.ks.iter().map(|x| format!("{x:?}")));
            row
        })
        .collect();
    Ok(render_table(&meta, &header, &rows))
}

fn bias_tail_cmd(run: &mut Run, k: usize, m: &[f64]) -> CliResult<String> {
    let Params::Degrees(d) = run.params()? else {
        return Err(CliError::Validation("bias-tail needs a degree sequence".into()));
    };
    run.manifest.streams.push((0, "chunks of 1024 trees, one stream each".into()));
    let rows = bias_tail_experiment(&d, k, m, run.cli.reps, run.cli.seed)?;
    if run.format == Format::Json {
        return Ok(serde_json::to_string_pretty(&rows).expect("rows serialise") + "\n");
    }
    let meta = [
        ("experiment", "bias-tail".to_string()),
        ("statistic", "E[h_m(bias / lambda^k)] over uniform trees".to_string()),
        ("k", k.to_string()),
        ("s", d.s().to_string()),
        ("lambda", format!("{:?}", d.stats().lambda)),
    ];
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![format!("{:?}", r.m), format!("{:?}", r.mean), format!("{:?}", r.se)])
        .collect();
    Ok(render_table(&meta, &["m", "mean", "se"], &rows))
}

fn enumerate_trees_cmd(run: &mut Run, cap: u64) -> CliResult<String> {
    let Params::Degrees(d) = run.params()? else {
        return Err(CliError::Validation("enumerate-trees needs a tree sequence".into()));
    };
    let mut out = header(run.format, "index,tree");
    for (i, t) in enumerate_d_trees(&d, cap)?.enumerate() {
        match run.format {
            Format::Json => out.push_str(&(t.to_json() + "\n")),
            Format::Csv => {
                let _ = writeln!(out, "{i},\"{}\"", t.to_json().replace('"', "\"\""));
            }
        }
    }
    Ok(out)
}

fn law_lines(format: Format, law: impl Iterator<Item = (Multigraph, String, f64)>) -> String {
    let mut out = header(format, "graph,p,p_float");
    for (g, exact, p) in law {
        match format {
            Format::Json => {
                let graph: Value = serde_json::from_str(&g.to_json()).expect("valid json");
                out.push_str(&(json!({"graph": graph, "p": exact, "p_float": p}).to_string() + "\n"));
            }
            Format::Csv => {
                let _ = writeln!(out, "\"{}\",{exact},{p:?}", g.to_json().replace('"', "\"\""));
            }
        }
    }
    out
}

fn cm_law_cmd(run: &mut Run, k: Option<usize>) -> CliResult<String> {
    let Params::Degrees(d) = run.params()? else {
        return Err(CliError::Validation("cm-law needs a half-edge sequence".into()));
    };
    let law = match k {
        Some(k) => cm_conditioned_oracle(&d, k)?,
        None => cm_matching_law(&d)?,
    };
    Ok(law_lines(
        run.format,
        law.into_iter().map(|(g, p)| {
            let f = rational_to_f64(&p);
            (g, p.to_string(), f)
        }),
    ))
}

fn pk_law_cmd(run: &mut Run, k: usize, cap: u64) -> CliResult<String> {
    let Params::P(p) = run.params()? else {
        return Err(CliError::Validation("pk-law needs a probability vector".into()));
    };
    let law = pk_law_oracle(&p, k, cap)?;
    Ok(law_lines(
        run.format,
        law.into_iter().map(|(g, p)| (g, format!("{p:?}"), p)),
    ))
}

/// Arguments without `--out` and its value.
fn strip_out(args: &[String]) -> Vec<String> {
    let mut kept = Vec::with_capacity(args.len());
    let mut skip = false;
    for a in args {
        if skip {
            skip = false;
        } else if a == "--out" {
            skip = true;
        } else if !a.starts_with("--out=") {
            kept.push(a.clone());
        }
    }
    kept
}

fn output_name(cli: &Cli, format: Format) -> &'static str {
    let table = matches!(cli.command, Command::Experiment { .. });
    match (format, table) {
        (Format::Csv, _) => "output.csv",
        (Format::Json, true) => "output.json",
        (Format::Json, false) => "output.jsonl",
    }
}

fn execute(cli: Cli, args: Vec<String>) -> CliResult<()> {
    if cli.reps == 0 {
        return Err(CliError::Args("--reps must be positive".into()));
    }
    let experiment = match &cli.command {
        Command::SampleTree { .. } => "sample-tree",
        Command::SampleGraph { .. } => "sample-graph",
        Command::SampleCm => "sample-cm",
        Command::SampleMult { .. } => "sample-mult",
        Command::SampleIcrt { .. } => "sample-icrt",
        Command::SampleIcrg { .. } => "sample-icrg",
        Command::Reconstruct => "reconstruct",
        Command::CoreMeasure => "core-measure",
        Command::Experiment { which: ExperimentCommand::Converge { .. } } => "experiment converge",
        Command::Experiment { which: ExperimentCommand::BiasTail { .. } } => "experiment bias-tail",
        Command::Oracle { which: OracleCommand::EnumerateTrees { .. } } => "oracle enumerate-trees",
        Command::Oracle { which: OracleCommand::CmLaw { .. } } => "oracle cm-law",
        Command::Oracle { which: OracleCommand::PkLaw { .. } } => "oracle pk-law",
        Command::Replay { .. } => "replay",
    };
    if let Command::Replay { manifest } = &cli.command {
        return replay(manifest, cli.out.clone());
    }
    let mut manifest = ExperimentManifest::new(experiment, cli.seed, cli.reps);
    manifest.args = strip_out(&args);
    let format = cli.format.unwrap_or(match cli.command {
        Command::Experiment { .. } => Format::Csv,
        _ => Format::Json,
    });
    let mut run = Run { cli, format, manifest };
    let command = std::mem::replace(&mut run.cli.command, Command::SampleCm);
    let output = match &command {
        Command::SampleTree { steps } => sample_tree(&mut run, *steps)?,
        Command::SampleGraph { k, steps } => sample_graph(&mut run, *k, *steps)?,
        Command::SampleCm => sample_cm(&mut run)?,
        Command::SampleMult { kind } => sample_mult(&mut run, *kind)?,
        Command::SampleIcrt { points, ymax } => sample_icrt_cmd(&mut run, *points, *ymax)?,
        Command::SampleIcrg { k, points, cap } => sample_icrg_cmd(&mut run, *k, *points, *cap)?,
        Command::Reconstruct => reconstruct_cmd(&mut run)?,
        Command::CoreMeasure => core_measure_cmd(&mut run)?,
        Command::Experiment { which } => match which {
            ExperimentCommand::Converge {
                family,
                target,
                k,
                points,
                steps,
                target_reps,
                perm,
                perm_reps,
            } => converge_cmd(&mut run, family, target, *k, *points, *steps, *target_reps, *perm, *perm_reps)?,
            ExperimentCommand::BiasTail { k, m } => bias_tail_cmd(&mut run, *k, m)?,
        },
        Command::Oracle { which } => match which {
            OracleCommand::EnumerateTrees { cap } => enumerate_trees_cmd(&mut run, *cap)?,
            OracleCommand::CmLaw { k } => cm_law_cmd(&mut run, *k)?,
            OracleCommand::PkLaw { k, cap } => pk_law_cmd(&mut run, *k, *cap)?,
        },
        Command::Replay { .. } => unreachable!("handled above"),
    };
    run.cli.command = command;
    match &run.cli.out {
        None => {
            print!("{output}");
            Ok(())
        }
        Some(dir) => {
            let io = |e: std::io::Error| CliError::Args(format!("cannot write to {}: {e}", dir.display()));
            fs::create_dir_all(dir).map_err(io)?;
            let name = output_name(&run.cli, run.format);
            fs::write(dir.join(name), &output).map_err(io)?;
            run.manifest.outputs.push(ParamFileHash {
                path: name.to_string(),
                sha256: sha256_hex(output.as_bytes()),
            });
            fs::write(dir.join("manifest.json"), run.manifest.to_json() + "\n").map_err(io)?;
            Ok(())
        }
    }
}

fn replay(path: &Path, out: Option<PathBuf>) -> CliResult<()> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Args(format!("cannot read {}: {e}", path.display())))?;
    let manifest: ExperimentManifest = serde_json::from_str(&text)
        .map_err(|e| CliError::Args(format!("{}: not a manifest: {e}", path.display())))?;
    for p in &manifest.params {
        let loaded = load(Path::new(&p.path))?;
        if loaded.hash.sha256 != p.sha256 {
            return Err(CliError::Validation(format!("{} changed since the manifest was written", p.path)));
        }
    }
    let mut args = vec!["mglab".to_string()];
    args.extend(manifest.args.iter().cloned());
    if let Some(dir) = out {
        args.push("--out".into());
        args.push(dir.display().to_string());
    }
    let cli = Cli::try_parse_from(&args).map_err(|e| CliError::Args(e.to_string()))?;
    if matches!(cli.command, Command::Replay { .. }) {
        return Err(CliError::Args("a manifest cannot replay another manifest".into()));
    }
    execute(cli, args[1..].to_vec())
}

/// Runs the command line and returns the process exit code.
pub fn run<I: IntoIterator<Item = OsString>>(args: I) -> i32 {
    let args: Vec<OsString> = args.into_iter().collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let strings: Vec<String> = args
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match execute(cli, strings) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("mglab: {}", e.message());
            e.code()
        }
    }
}
