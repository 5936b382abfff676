use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use covgen_core::goals::GoalEvaluator;
use covgen_core::harness::{
    gen_corpus, run_experiment, write_report, CellKey, CorpusSpec, ExperimentPlan, FeatureWeights, HarnessError, RUNS_FILE,
};
use covgen_core::lang::{parse, FrontendError};
use covgen_core::mutation::SubsumptionTable;
use covgen_core::search::{events_to_jsonl, run_search, Algorithm, SearchConfig, SearchError};
use covgen_core::selection::{goal_set, Mode, SelectionConfig, SelectionError, DEFAULT_LINE_THRESHOLD};

const SEED_ENV: &str = "COVGEN_SEED";

#[derive(Parser)]
#[command(name = "covgen", version, about = "Search-based unit test generation for MiniLang")]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a synthetic corpus of .mini classes.
    GenCorpus(GenCorpusArgs),
    /// Run the experiment matrix over a corpus.
    Run(RunArgs),
    /// Summarize a run database.
    Report(ReportArgs),
    /// Show the goal set a mode selects for one class.
    Goals(GoalsArgs),
    /// Regenerate the mutant subsumption table and compare it with the golden file.
    Subsumption(SubsumptionArgs),
    /// Generate tests for one class and print its coverage report.
    Search(SearchArgs),
}

#[derive(Args)]
struct GenCorpusArgs {
    #[arg(long, default_value = "corpus")]
    out: PathBuf,
    #[arg(long, default_value_t = 30)]
    small: usize,
    #[arg(long, default_value_t = 10)]
    big: usize,
    #[arg(long, default_value_t = 30)]
    small_predicates: usize,
    #[arg(long, default_value_t = 110)]
    big_predicates: usize,
    #[arg(long)]
    throw_weight: Option<f64>,
    #[arg(long)]
    loop_weight: Option<f64>,
    #[arg(long)]
    long_block_weight: Option<f64>,
    /// Defaults to $COVGEN_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SelectionArgs {
    /// smart, original or single:<criterion>
    #[arg(long, default_value = "smart")]
    mode: String,
    #[arg(long, default_value_t = DEFAULT_LINE_THRESHOLD)]
    line_threshold: usize,
}

#[derive(Args)]
struct RunArgs {
    /// Corpus directories or .mini files.
    #[arg(long, required = true, num_args = 1..)]
    corpus: Vec<PathBuf>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Modes to compare; repeat or separate with commas.
    #[arg(long, value_delimiter = ',', default_values_t = ["smart".to_string(), "original".to_string()])]
    mode: Vec<String>,
    #[arg(long, default_value_t = 10)]
    rounds: u32,
    /// Test executions per run.
    #[arg(long, default_value_t = 30_000)]
    budget_evals: u64,
    #[arg(long, default_value = "WS")]
    algorithm: String,
    #[arg(long, default_value_t = DEFAULT_LINE_THRESHOLD)]
    line_threshold: usize,
    #[arg(long, default_value_t = 50)]
    population: usize,
    /// Defaults to $COVGEN_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Write the execution trace of every final test as JSON.
    #[arg(long)]
    dump_traces: bool,
    /// Skip the per-run JSONL event logs.
    #[arg(long)]
    no_events: bool,
    #[arg(long, hide = true)]
    inject_panic: Option<String>,
}

#[derive(Args)]
struct ReportArgs {
    /// A run database (runs.csv) or the directory holding it.
    db: PathBuf,
    /// Defaults to the database directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GoalsArgs {
    class: PathBuf,
    #[command(flatten)]
    sel: SelectionArgs,
    /// Print the goal set as JSON.
    #[arg(long)]
    dump: bool,
    /// Write the dump here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SubsumptionArgs {
    /// Recompute the table from the kill-set oracle.
    #[arg(long)]
    regen: bool,
    #[arg(long, default_value = "data/subsumption.tbl")]
    golden: PathBuf,
    /// Overwrite the golden file with the regenerated table.
    #[arg(long)]
    write: bool,
}

#[derive(Args)]
struct SearchArgs {
    class: PathBuf,
    #[command(flatten)]
    sel: SelectionArgs,
    #[arg(long, default_value = "WS")]
    algorithm: String,
    #[arg(long, default_value_t = 30_000)]
    budget_evals: u64,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the coverage report as JSON here.
    #[arg(long)]
    report_json: Option<PathBuf>,
    /// Write the coverage report as a CSV row here.
    #[arg(long)]
    report_csv: Option<PathBuf>,
    /// Write the search event log (JSONL) here.
    #[arg(long)]
    events: Option<PathBuf>,
    /// Write execution traces of the final suite as JSON here.
    #[arg(long)]
    dump_traces: Option<PathBuf>,
    /// Print the generated tests.
    #[arg(long)]
    show_tests: bool,
}

fn base_seed(flag: Option<u64>) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| HarnessError::Plan(format!("{SEED_ENV}={v} is not an unsigned integer")).into()),
        Err(_) => Ok(0),
    }
}

fn parse_mode(s: &str) -> Result<Mode> {
    Ok(s.parse::<Mode>()?)
}

fn parse_algorithm(s: &str) -> Result<Algorithm> {
    Ok(s.parse::<Algorithm>()?)
}

fn load_class(path: &Path) -> Result<covgen_core::lang::SourceUnit> {
    let src = fs::read_to_string(path).map_err(|e| HarnessError::Corpus { path: path.into(), msg: e.to_string() })?;
    parse(&src).with_context(|| format!("parsing {}", path.display()))
}

fn write_out(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn gen_corpus_cmd(a: GenCorpusArgs) -> Result<()> {
    let d = FeatureWeights::default();
    let spec = CorpusSpec {
        small_classes: a.small,
        big_classes: a.big,
        small_predicates: a.small_predicates,
        big_predicates: a.big_predicates,
        weights: FeatureWeights {
            throws: a.throw_weight.unwrap_or(d.throws),
            loops: a.loop_weight.unwrap_or(d.loops),
            long_blocks: a.long_block_weight.unwrap_or(d.long_blocks),
            ..d
        },
    };
    let seed = base_seed(a.seed)?;
    let paths = gen_corpus(&spec, seed, &a.out)?;
    println!("wrote {} classes to {} (seed {seed})", paths.len(), a.out.display());
    Ok(())
}

fn run_cmd(a: RunArgs) -> Result<()> {
    let modes = a.mode.iter().map(|m| parse_mode(m)).collect::<Result<Vec<_>>>()?;
    let inject_panic = match &a.inject_panic {
        Some(s) => {
            let parts: Vec<&str> = s.split('/').collect();
            let [class, mode, round] = parts[..] else { bail!(HarnessError::Plan("--inject-panic wants CLASS/MODE/ROUND".into())) };
            Some(CellKey::new(class, parse_mode(mode)?, round.parse().context("round")?))
        }
        None => None,
    };
    let plan = ExperimentPlan {
        corpus: a.corpus,
        modes,
        rounds: a.rounds,
        budget: a.budget_evals,
        base_seed: base_seed(a.seed)?,
        parallelism: a.jobs,
        algorithm: parse_algorithm(&a.algorithm)?,
        line_threshold: a.line_threshold,
        population_size: a.population,
        out_dir: a.out,
        write_events: !a.no_events,
        dump_traces: a.dump_traces,
        inject_panic,
    };
    let s = run_experiment(&plan)?;
    println!(
        "{} cells: {} run, {} already done, {} failed; database {}",
        s.planned,
        s.completed,
        s.skipped,
        s.failed.len(),
        plan.out_dir.join(RUNS_FILE).display()
    );
    for (k, msg) in &s.failed {
        eprintln!("failed: {} {} round {}: {msg}", k.class, k.mode, k.round);
    }
    if !s.failed.is_empty() {
        bail!("{} cells failed; rerun the same command to retry them", s.failed.len());
    }
    Ok(())
}

fn report_cmd(a: ReportArgs) -> Result<()> {
    let runs = if a.db.is_dir() { a.db.join(RUNS_FILE) } else { a.db.clone() };
    let out = a.out.unwrap_or_else(|| runs.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf));
    let (rep, files) = write_report(&runs, &out)?;
    print!("{}", rep.digest());
    for f in files {
        eprintln!("wrote {}", f.display());
    }
    Ok(())
}

fn goals_cmd(a: GoalsArgs) -> Result<()> {
    let unit = load_class(&a.class)?;
    let mode = parse_mode(&a.sel.mode)?;
    let cfg = SelectionConfig { mode, line_threshold: a.sel.line_threshold, ..SelectionConfig::default() };
    let sel = goal_set(&unit, &cfg, &SubsumptionTable::builtin())?;
    let dump = sel.dump(&unit, mode, a.sel.line_threshold);
    if a.dump {
        let text = serde_json::to_string_pretty(&dump)? + "\n";
        match &a.out {
            Some(p) => write_out(p, &text)?,
            None => print!("{text}"),
        }
    } else {
        println!("{} {mode}: {} goals", dump.class, dump.total);
        for (c, n) in &dump.counts {
            println!("  {c:<5} {n}");
        }
    }
    Ok(())
}

fn subsumption_cmd(a: SubsumptionArgs) -> Result<()> {
    let golden = fs::read_to_string(&a.golden).unwrap_or_else(|_| SubsumptionTable::golden_text().to_string());
    if !a.regen {
        print!("{golden}");
        return Ok(());
    }
    let fresh = SubsumptionTable::compute_default().to_text();
    if fresh == golden {
        println!("subsumption table matches {}", a.golden.display());
        return Ok(());
    }
    let old: Vec<&str> = golden.lines().collect();
    let new: Vec<&str> = fresh.lines().collect();
    for l in old.iter().filter(|l| !new.contains(l)) {
        println!("- {l}");
    }
    for l in new.iter().filter(|l| !old.contains(l)) {
        println!("+ {l}");
    }
    if a.write {
        write_out(&a.golden, &fresh)?;
        println!("rewrote {}", a.golden.display());
        return Ok(());
    }
    bail!("regenerated table differs from {}", a.golden.display())
}

fn search_cmd(a: SearchArgs) -> Result<()> {
    let unit = Arc::new(load_class(&a.class)?);
    let mode = parse_mode(&a.sel.mode)?;
    let cfg = SelectionConfig { mode, line_threshold: a.sel.line_threshold, ..SelectionConfig::default() };
    let sel = goal_set(&unit, &cfg, &SubsumptionTable::builtin())?;
    let ev = GoalEvaluator::new(unit.clone(), sel.goals, &sel.mutants)?;
    let scfg = SearchConfig {
        algorithm: parse_algorithm(&a.algorithm)?,
        max_evaluations: a.budget_evals,
        seed: base_seed(a.seed)?,
        ..SearchConfig::default()
    };
    let r = run_search(&ev, &scfg)?;
    println!(
        "{} {mode} {}: {}/{} goals, {} tests, {} evaluations, {:.2?}",
        unit.name,
        r.algorithm,
        r.covered.len(),
        ev.len(),
        r.suite.tests.len(),
        r.evaluations,
        r.elapsed
    );
    for c in &r.report.criteria {
        if c.total > 0 {
            println!("  {:<5} {:>5}/{:<5} {:.3}", c.criterion.name(), c.covered, c.total, c.ratio);
        }
    }
    if a.show_tests {
        for (i, t) in r.suite.tests.iter().enumerate() {
            println!("// test {i}\n{}", t.render(&unit));
        }
    }
    if let Some(p) = &a.report_json {
        write_out(p, &(r.report.to_json() + "\n"))?;
    }
    if let Some(p) = &a.report_csv {
        write_out(p, &r.report.to_csv())?;
    }
    if let Some(p) = &a.events {
        write_out(p, &events_to_jsonl(&r.events))?;
    }
    if let Some(p) = &a.dump_traces {
        let dumps: Vec<_> = r
            .suite
            .tests
            .iter()
            .map(|t| ev.run(t).map(|tr| tr.dump(&unit, t, Some(ev.schema()))))
            .collect::<Result<_, _>>()?;
        write_out(p, &(serde_json::to_string_pretty(&dumps)? + "\n"))?;
    }
    Ok(())
}

/// 3 for corpus problems, 2 for plan problems, 1 otherwise.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(h) = cause.downcast_ref::<HarnessError>() {
            if h.is_corpus_error() {
                return 3;
            }
            if h.is_plan_error() {
                return 2;
            }
        }
        if cause.is::<FrontendError>() {
            return 3;
        }
        if cause.is::<SelectionError>() || cause.is::<SearchError>() {
            return 2;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.cmd {
        Cmd::GenCorpus(a) => gen_corpus_cmd(a),
        Cmd::Run(a) => run_cmd(a),
        Cmd::Report(a) => report_cmd(a),
        Cmd::Goals(a) => goals_cmd(a),
        Cmd::Subsumption(a) => subsumption_cmd(a),
        Cmd::Search(a) => search_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
