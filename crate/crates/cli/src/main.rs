use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use conformflow::alignment::Alignment;
use conformflow::astar::{HeuristicKind, SearchConfig};
use conformflow::bench::{
    bucket_table, deviation_buckets, discover_corpus, length_buckets, run_corpus, run_log, summarize, trace_fitness,
    variant_summaries, write_corpus, write_csv, BenchmarkRecord, RunConfig, RunMethod,
};
use conformflow::eventlog::{EventLog, Trace};
use conformflow::generate::{
    activity_names, block_to_net, noisy_log, parse_block_spec, random_block, simulate_log, BlockShape,
};
use conformflow::io::{read_log, read_model, ModelIoError, NoiseSpec};
use conformflow::petri::{build_trace_model, PetriNet};
use conformflow::rational::{format_rational, parse_rational, Rational};
use conformflow::reach::{build_reachability_graph, check_tu_column_structure, node_arc_incidence, LimitOverrides};
use conformflow::selector::{hybrid_align, run_astar, run_lp, RunOutcome, SelectionThresholds};
use conformflow::sync::{build_sync_product, CostConfig, MoveKind, SynchronousProduct};

const EXIT_PARSE: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_TIMEOUT: u8 = 4;
const EXIT_INTERNAL: u8 = 5;

#[derive(Parser)]
#[command(name = "conformflow", version, about = "Exact alignment-based conformance checking")]
struct Cli {
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Align a single trace against a model.
    Align(AlignArgs),
    /// Align every trace of a log and write one CSV row per trace.
    Conformance(ConformanceArgs),
    /// Run a corpus of (model, log) pairs and report bucketed statistics.
    Bench(BenchArgs),
    /// Generate a block-structured model with clean and noisy logs.
    Gen(GenArgs),
    /// Print product, reachability graph and matrix structure for one trace.
    Inspect(InspectArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Astar,
    Lp,
    Hybrid,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum HeuristicArg {
    Zero,
    MarkingEq,
}

fn rational_arg(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

#[derive(Args, Clone)]
struct LimitArgs {
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    max_nodes: Option<usize>,
    #[arg(long)]
    max_edges: Option<usize>,
    /// Token bound per place, shared by graph construction and search.
    #[arg(long)]
    token_cap: Option<u32>,
}

impl LimitArgs {
    fn overrides(&self) -> LimitOverrides {
        LimitOverrides {
            max_depth: self.max_depth,
            max_nodes: self.max_nodes,
            max_edges: self.max_edges,
            token_cap: self.token_cap,
        }
    }
}

#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Cost of a silent model move.
    #[arg(long, value_parser = rational_arg, default_value = "1/1000000")]
    epsilon: Rational,
    #[arg(long, value_parser = rational_arg, default_value = "1")]
    deviation_cost: Rational,
    #[command(flatten)]
    limits: LimitArgs,
    /// Per-instance search timeout.
    #[arg(long, default_value_t = 60_000)]
    timeout_ms: u64,
    #[arg(long, value_enum, default_value = "marking-eq")]
    heuristic: HeuristicArg,
    #[arg(long, default_value_t = 20)]
    length_threshold: usize,
    #[arg(long, value_parser = rational_arg, default_value = "3/2")]
    dev_threshold: Rational,
    /// Worker threads for log-level runs.
    #[arg(long, default_value_t = 1)]
    parallel: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

impl RunArgs {
    fn config(&self, default_method: RunMethod) -> Result<RunConfig, CliError> {
        let method = match self.method {
            None => default_method,
            Some(MethodArg::Astar) => RunMethod::Astar,
            Some(MethodArg::Lp) => RunMethod::Lp,
            Some(MethodArg::Hybrid) => RunMethod::Hybrid,
            Some(MethodArg::Both) => RunMethod::Both,
        };
        let cost = CostConfig::new(self.epsilon, self.deviation_cost).map_err(|e| CliError::Usage(e.to_string()))?;
        let mut search = SearchConfig {
            heuristic: match self.heuristic {
                HeuristicArg::Zero => HeuristicKind::Zero,
                HeuristicArg::MarkingEq => HeuristicKind::MarkingEquation,
            },
            timeout: Duration::from_millis(self.timeout_ms),
            ..SearchConfig::default()
        };
        if let Some(cap) = self.limits.token_cap {
            search.token_cap = cap;
        }
        let cfg = RunConfig {
            method,
            cost,
            limits: self.limits.overrides(),
            search,
            thresholds: SelectionThresholds {
                length_threshold: self.length_threshold,
                deviation_threshold: self.dev_threshold,
            },
            parallelism: self.parallel,
            seed: self.seed,
        };
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct AlignArgs {
    #[arg(long)]
    model: PathBuf,
    /// Comma-separated activities; the empty string is the empty trace.
    #[arg(long, allow_hyphen_values = true)]
    trace: String,
    /// Write the alignment(s) as JSON to this file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct ConformanceArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    log: PathBuf,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct GenArgs {
    /// Block spec such as "seq(a, and(b, c), e)".
    #[arg(long, conflicts_with = "activities")]
    spec: Option<String>,
    /// Draw a random block model over this many activities instead.
    #[arg(long)]
    activities: Option<usize>,
    #[arg(long, default_value_t = 100)]
    traces: usize,
    #[arg(long, default_value_t = 0.0)]
    insert_prob: f64,
    #[arg(long, default_value_t = 0.0)]
    delete_prob: f64,
    #[arg(long, default_value_t = 0.0)]
    swap_prob: f64,
    /// Firing bound for one simulated run.
    #[arg(long, default_value_t = 1000)]
    max_steps: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value = "", allow_hyphen_values = true)]
    trace: String,
    #[arg(long, value_parser = rational_arg, default_value = "1/1000000")]
    epsilon: Rational,
    #[arg(long, value_parser = rational_arg, default_value = "1")]
    deviation_cost: Rational,
    #[command(flatten)]
    limits: LimitArgs,
}

#[derive(Debug)]
enum CliError {
    /// Unreadable input or bad argument values.
    Usage(String),
    Failed(u8, String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_PARSE,
            CliError::Failed(c, _) => *c,
        }
    }
}

fn outcome_code(o: RunOutcome) -> u8 {
    match o {
        RunOutcome::Optimal => 0,
        RunOutcome::Infeasible => EXIT_INFEASIBLE,
        RunOutcome::Timeout | RunOutcome::Truncated => EXIT_TIMEOUT,
        RunOutcome::Error => EXIT_INTERNAL,
    }
}

fn io_err(path: &Path, e: io::Error) -> CliError {
    CliError::Failed(EXIT_INTERNAL, format!("{}: {e}", path.display()))
}

fn input_err(path: &Path, e: ModelIoError) -> CliError {
    match e {
        ModelIoError::Io { .. } => CliError::Usage(e.to_string()),
        _ => CliError::Usage(format!("{}: {e}", path.display())),
    }
}

fn load_model(path: &Path) -> Result<PetriNet, CliError> {
    read_model(path).map_err(|e| input_err(path, e))
}

fn load_log(path: &Path) -> Result<EventLog, CliError> {
    read_log(path).map_err(|e| input_err(path, e))
}

fn product(net: &PetriNet, trace: &Trace, cost: &CostConfig) -> Result<SynchronousProduct, CliError> {
    build_sync_product(net, &build_trace_model(trace), cost).map_err(|e| CliError::Usage(e.to_string()))
}

fn us(d: Duration) -> u128 {
    d.as_micros()
}

fn print_alignment(out: &mut impl Write, al: &Alignment) -> io::Result<()> {
    writeln!(out, "method: {}", al.method)?;
    write!(out, "{}", al.to_move_table())
}

fn cmd_align(args: &AlignArgs) -> Result<u8, CliError> {
    let cfg = args.run.config(RunMethod::Hybrid)?;
    let net = load_model(&args.model)?;
    let trace = Trace::from_csv_spec("cli", &args.trace);
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let w = |e: io::Error| CliError::Failed(EXIT_INTERNAL, e.to_string());
    let t0 = Instant::now();
    let sp = product(&net, &trace, &cfg.cost)?;
    let product_time = t0.elapsed();
    let mut json = Vec::new();

    let code = match cfg.method {
        RunMethod::Hybrid => {
            let fitness = trace_fitness(&net, &trace);
            let h = hybrid_align(&net, &trace, &fitness, &as_hybrid(&cfg)).map_err(|e| CliError::Usage(e.to_string()))?;
            writeln!(
                out,
                "selection: L={} F={} expected deviations={} chosen={} used={}{}",
                h.inputs.trace_len,
                format_rational(&h.inputs.fitness),
                format_rational(&h.inputs.expected_deviations),
                h.method_chosen,
                h.method_used,
                if h.fallback { " (fallback)" } else { "" }
            )
            .map_err(w)?;
            if let Some(al) = &h.alignment {
                print_alignment(&mut out, al).map_err(w)?;
                json.push(al.to_json(&sp));
            }
            writeln!(out, "outcome: {}", h.outcome.as_str()).map_err(w)?;
            writeln!(
                out,
                "timings: product {} us, rg_build {} us, lp_solve {} us, search {} us",
                us(h.timings.product),
                us(h.timings.rg_build),
                us(h.timings.lp_solve),
                us(h.timings.search)
            )
            .map_err(w)?;
            outcome_code(h.outcome)
        }
        method => {
            let mut codes = Vec::new();
            let mut costs = Vec::new();
            if matches!(method, RunMethod::Astar | RunMethod::Both) {
                let run = run_astar(&sp, &cfg.search);
                if let Some(al) = &run.alignment {
                    print_alignment(&mut out, al).map_err(w)?;
                    json.push(al.to_json(&sp));
                    costs.push(al.total_cost);
                }
                writeln!(out, "A* outcome: {}", run.outcome.as_str()).map_err(w)?;
                writeln!(
                    out,
                    "timings: product {} us, search {} us; expansions {}, heuristic solves {}",
                    us(product_time),
                    us(run.stats.wall_time),
                    run.stats.expansions,
                    run.stats.heuristic_calls
                )
                .map_err(w)?;
                codes.push(outcome_code(run.outcome));
            }
            if matches!(method, RunMethod::Lp | RunMethod::Both) {
                let run = run_lp(&sp, &cfg.limits.resolve(&sp));
                if let Some(al) = &run.alignment {
                    print_alignment(&mut out, al).map_err(w)?;
                    json.push(al.to_json(&sp));
                    costs.push(al.total_cost);
                }
                writeln!(out, "LP outcome: {}", run.outcome.as_str()).map_err(w)?;
                if let Some(e) = &run.error {
                    writeln!(out, "LP note: {e}").map_err(w)?;
                }
                writeln!(
                    out,
                    "timings: product {} us, rg_build {} us, lp_solve {} us; RG {} nodes, {} edges",
                    us(product_time),
                    us(run.rg_build),
                    us(run.lp_solve),
                    run.rg_nodes,
                    run.rg_edges
                )
                .map_err(w)?;
                codes.push(outcome_code(run.outcome));
            }
            let mut code = codes.iter().copied().max().unwrap_or(0);
            if method == RunMethod::Both && costs.len() == 2 {
                let agree = costs[0] == costs[1];
                writeln!(
                    out,
                    "A* cost {} / LP cost {}: {}",
                    format_rational(&costs[0]),
                    format_rational(&costs[1]),
                    if agree { "AGREE" } else { "DISAGREE" }
                )
                .map_err(w)?;
                if !agree {
                    code = EXIT_INTERNAL;
                }
            }
            code
        }
    };
    if let Some(path) = &args.out {
        let body = serde_json::to_string_pretty(&json).map_err(|e| CliError::Failed(EXIT_INTERNAL, e.to_string()))?;
        std::fs::write(path, body).map_err(|e| io_err(path, e))?;
    }
    Ok(code)
}

fn as_hybrid(cfg: &RunConfig) -> conformflow::selector::HybridConfig {
    conformflow::selector::HybridConfig {
        thresholds: cfg.thresholds.clone(),
        cost: cfg.cost.clone(),
        limits: cfg.limits,
        search: cfg.search,
    }
}

fn emit_records(records: &[BenchmarkRecord], out: Option<&Path>) -> Result<(), CliError> {
    let fail = |e: conformflow::bench::BenchError| CliError::Failed(EXIT_INTERNAL, e.to_string());
    match out {
        Some(path) => {
            let f = File::create(path).map_err(|e| io_err(path, e))?;
            write_csv(BufWriter::new(f), records).map_err(fail)
        }
        None => write_csv(io::stdout().lock(), records).map_err(fail),
    }
}

/// Summary goes to stdout when the CSV went to a file, else to stderr.
fn report(text: &str, csv_to_file: bool) {
    if csv_to_file {
        println!("{text}");
    } else {
        eprintln!("{text}");
    }
}

fn disagreement_code(records: &[BenchmarkRecord]) -> u8 {
    if records.iter().any(|r| r.both_optimal() && !r.costs_agree) {
        EXIT_INTERNAL
    } else {
        0
    }
}

fn cmd_conformance(args: &ConformanceArgs) -> Result<u8, CliError> {
    let cfg = args.run.config(RunMethod::Both)?;
    let net = load_model(&args.model)?;
    let log = load_log(&args.log)?;
    let model_id = args.model.file_stem().map(|s| s.to_string_lossy().to_string()).unwrap_or_default();
    let records = run_log(&net, &model_id, &log, &cfg).map_err(|e| CliError::Usage(e.to_string()))?;
    emit_records(&records, args.out.as_deref())?;
    report(&summarize(&records).to_string(), args.out.is_some());
    Ok(disagreement_code(&records))
}

fn cmd_bench(args: &BenchArgs) -> Result<u8, CliError> {
    let cfg = args.run.config(RunMethod::Both)?;
    let entries = discover_corpus(&args.corpus).map_err(|e| CliError::Usage(e.to_string()))?;
    let records = run_corpus(&entries, &cfg).map_err(|e| CliError::Failed(EXIT_INTERNAL, e.to_string()))?;
    emit_records(&records, args.out.as_deref())?;
    let mut text = format!("corpus: {} (model, log) pairs\n{}\n\n", entries.len(), summarize(&records));
    text.push_str(&bucket_table("by trace length", &length_buckets(&records)));
    text.push('\n');
    text.push_str(&bucket_table("by deviations", &deviation_buckets(&records)));
    text.push('\n');
    text.push_str(&bucket_table("by model/log", &variant_summaries(&records)));
    report(text.trim_end(), args.out.is_some());
    Ok(disagreement_code(&records))
}

fn cmd_gen(args: &GenArgs) -> Result<u8, CliError> {
    let usage = |e: conformflow::generate::GenError| CliError::Usage(e.to_string());
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let block = match (&args.spec, args.activities) {
        (Some(spec), _) => parse_block_spec(spec).map_err(usage)?,
        (None, Some(n)) => random_block(&activity_names(n), &BlockShape::default(), &mut rng).map_err(usage)?,
        (None, None) => return Err(CliError::Usage("one of --spec or --activities is required".into())),
    };
    let net = block_to_net(&block).map_err(usage)?;
    let clean = simulate_log(&net, args.traces, args.max_steps, &mut rng).map_err(usage)?;
    let noise = NoiseSpec {
        insert_prob: args.insert_prob,
        delete_prob: args.delete_prob,
        swap_prob: args.swap_prob,
        alphabet: block.alphabet(),
        seed: args.seed,
    };
    let noisy = noisy_log(&clean, &noise).map_err(usage)?;
    write_corpus(&args.out, &net, &clean, &noisy).map_err(|e| CliError::Failed(EXIT_INTERNAL, e.to_string()))?;
    println!("model: {block}");
    println!(
        "wrote {} ({} places, {} transitions) with {} clean and {} noisy traces",
        args.out.display(),
        net.num_places(),
        net.num_transitions(),
        clean.len(),
        noisy.len()
    );
    Ok(0)
}

fn cmd_inspect(args: &InspectArgs) -> Result<u8, CliError> {
    let cost = CostConfig::new(args.epsilon, args.deviation_cost).map_err(|e| CliError::Usage(e.to_string()))?;
    let overrides = args.limits.overrides();
    overrides.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let net = load_model(&args.model)?;
    let trace = Trace::from_csv_spec("cli", &args.trace);
    let sp = product(&net, &trace, &cost)?;
    println!(
        "model: {} places, {} transitions; trace length {}",
        net.num_places(),
        net.num_transitions(),
        trace.len()
    );
    println!(
        "product: {} places, {} transitions ({} SYNC, {} MODEL, {} MODEL_TAU, {} LOG)",
        sp.net.num_places(),
        sp.net.num_transitions(),
        sp.count(MoveKind::Sync),
        sp.count(MoveKind::Model),
        sp.count(MoveKind::ModelTau),
        sp.count(MoveKind::Log)
    );
    let limits = overrides.resolve(&sp);
    let rg = build_reachability_graph(&sp, &limits).map_err(|e| CliError::Usage(e.to_string()))?;
    let tu = check_tu_column_structure(&node_arc_incidence(&rg));
    println!(
        "RG: {} nodes, {} edges; TU column structure: {}",
        rg.num_nodes(),
        rg.num_edges(),
        if tu { "OK" } else { "VIOLATED" }
    );
    println!(
        "limits: depth {}, nodes {}, edges {}, token cap {}",
        limits.max_depth, limits.max_nodes, limits.max_edges, limits.token_cap
    );
    println!(
        "exploration: depth reached {}, self-loops pruned {}, cap prunes {}, final marking {}",
        rg.stats.depth_reached,
        rg.stats.edges_pruned_self_loops,
        rg.stats.cap_prunes,
        if rg.final_index.is_some() { "reached" } else { "not reached" }
    );
    println!("truncated: {}", if rg.stats.truncated { "yes" } else { "no" });
    Ok(if tu { 0 } else { EXIT_INTERNAL })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match &cli.command {
        Command::Align(a) => cmd_align(a),
        Command::Conformance(a) => cmd_conformance(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Inspect(a) => cmd_inspect(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let msg = match &e {
                CliError::Usage(m) | CliError::Failed(_, m) => m,
            };
            eprintln!("error: {msg}");
            ExitCode::from(e.code())
        }
    }
}
