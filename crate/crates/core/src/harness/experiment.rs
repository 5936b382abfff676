//! The (class × mode × round) run matrix.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::HarnessError;
use crate::goals::{Criterion, GoalEvaluator};
use crate::lang::{parse, SourceUnit};
use crate::mutation::SubsumptionTable;
use crate::runtime::TraceDump;
use crate::search::{events_to_jsonl, run_search, Algorithm, SearchConfig};
use crate::selection::{goal_set, original_goal_set, Mode, SelectionConfig, DEFAULT_LINE_THRESHOLD};

pub const RUNS_FILE: &str = "runs.csv";
pub const TIMINGS_FILE: &str = "timings.csv";
pub const PLAN_FILE: &str = "plan.json";
pub const FAILURES_FILE: &str = "failures.log";
pub const EVENTS_DIR: &str = "events";
pub const TRACES_DIR: &str = "traces";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    /// `.mini` files or directories holding them.
    pub corpus: Vec<PathBuf>,
    pub modes: Vec<Mode>,
    pub rounds: u32,
    /// Test executions per run.
    pub budget: u64,
    pub base_seed: u64,
    pub parallelism: usize,
    pub algorithm: Algorithm,
    pub line_threshold: usize,
    pub population_size: usize,
    pub out_dir: PathBuf,
    pub write_events: bool,
    pub dump_traces: bool,
    /// Test hook: panic inside this cell.
    #[doc(hidden)]
    #[serde(skip)]
    pub inject_panic: Option<CellKey>,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        ExperimentPlan {
            corpus: Vec::new(),
            modes: vec![Mode::Smart, Mode::Original],
            rounds: 10,
            budget: SearchConfig::default().max_evaluations,
            base_seed: 0,
            parallelism: 1,
            algorithm: Algorithm::Ws,
            line_threshold: DEFAULT_LINE_THRESHOLD,
            population_size: SearchConfig::default().population_size,
            out_dir: PathBuf::from("results"),
            write_events: true,
            dump_traces: false,
            inject_panic: None,
        }
    }
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Plan(m.to_string()));
        if self.rounds == 0 {
            return bad("rounds must be at least 1");
        }
        if self.modes.is_empty() {
            return bad("no modes to run");
        }
        if self.modes.iter().collect::<std::collections::HashSet<_>>().len() != self.modes.len() {
            return bad("modes must be distinct");
        }
        if self.budget == 0 {
            return bad("budget must be positive");
        }
        if self.parallelism == 0 {
            return bad("parallelism must be at least 1");
        }
        if self.line_threshold == 0 {
            return bad("line threshold must be at least 1");
        }
        if self.corpus.is_empty() {
            return bad("no corpus given");
        }
        self.search_config(0).validate()?;
        Ok(())
    }

    fn search_config(&self, seed: u64) -> SearchConfig {
        SearchConfig {
            algorithm: self.algorithm,
            seed,
            max_evaluations: self.budget,
            population_size: self.population_size,
            ..SearchConfig::default()
        }
    }

    /// Fields that change results. Output rows of a different fingerprint cannot be resumed.
    fn fingerprint(&self) -> serde_json::Value {
        serde_json::json!({
            "modes": self.modes.iter().map(|m| m.to_string()).collect::<Vec<_>>(),
            "budget": self.budget,
            "base_seed": self.base_seed,
            "algorithm": self.algorithm,
            "line_threshold": self.line_threshold,
            "population_size": self.population_size,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub class: String,
    pub mode: String,
    pub round: u32,
}

impl CellKey {
    pub fn new(class: &str, mode: Mode, round: u32) -> CellKey {
        CellKey { class: class.to_string(), mode: mode.to_string(), round }
    }

    fn slug(&self) -> String {
        format!("{}__{}__r{:03}", self.class, self.mode.replace(':', "-"), self.round)
    }
}

/// Stable per-cell seed, independent of scheduling order.
pub fn cell_seed(base: u64, class: &str, mode: Mode, round: u32) -> u64 {
    let mut h = Sha256::new();
    h.update(b"covgen-cell\0");
    h.update(base.to_le_bytes());
    h.update(class.as_bytes());
    h.update(b"\0");
    h.update(mode.to_string().as_bytes());
    h.update(b"\0");
    h.update(round.to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

/// One row of the run database.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub class: String,
    pub branches: usize,
    pub mode: String,
    pub round: u32,
    pub seed: u64,
    pub bc: f64,
    pub dbc: f64,
    pub lc: f64,
    pub wm: f64,
    pub tmc: f64,
    pub ntmc: f64,
    pub ec: f64,
    pub oc: f64,
    pub ec_count: usize,
    pub theta_hat: Option<f64>,
    pub suite_size: usize,
    pub suite_length: usize,
    pub goals: usize,
    pub covered_goals: usize,
    pub evaluations: u64,
    pub generations: u32,
}

impl RunRow {
    pub fn key(&self) -> CellKey {
        CellKey { class: self.class.clone(), mode: self.mode.clone(), round: self.round }
    }

    pub fn criterion(&self, c: Criterion) -> f64 {
        match c {
            Criterion::Bc => self.bc,
            Criterion::Dbc => self.dbc,
            Criterion::Lc => self.lc,
            Criterion::Wm => self.wm,
            Criterion::Tmc => self.tmc,
            Criterion::Ntmc => self.ntmc,
            Criterion::Ec => self.ec,
            Criterion::Oc => self.oc,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub class: String,
    pub mode: String,
    pub round: u32,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub planned: usize,
    pub skipped: usize,
    pub completed: usize,
    pub failed: Vec<(CellKey, String)>,
}

#[derive(Debug, Clone)]
pub struct CorpusClass {
    pub path: PathBuf,
    pub unit: Arc<SourceUnit>,
}

/// Parses every `.mini` file named directly or found in a named directory.
pub fn load_corpus(paths: &[PathBuf]) -> Result<Vec<CorpusClass>, HarnessError> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let rd = fs::read_dir(p).map_err(|e| HarnessError::Corpus { path: p.clone(), msg: e.to_string() })?;
            for entry in rd {
                let entry = entry.map_err(|e| HarnessError::io(p, e))?;
                let f = entry.path();
                if f.extension().is_some_and(|x| x == "mini") {
                    files.push(f);
                }
            }
        } else if p.is_file() {
            files.push(p.clone());
        } else {
            return Err(HarnessError::Corpus { path: p.clone(), msg: "no such file or directory".into() });
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(HarnessError::Corpus { path: paths[0].clone(), msg: "no .mini files".into() });
    }
    let mut out: Vec<CorpusClass> = Vec::with_capacity(files.len());
    for f in files {
        let src = fs::read_to_string(&f).map_err(|e| HarnessError::Corpus { path: f.clone(), msg: e.to_string() })?;
        let unit = parse(&src).map_err(|e| HarnessError::Corpus { path: f.clone(), msg: e.to_string() })?;
        if let Some(prev) = out.iter().find(|c| c.unit.name == unit.name) {
            return Err(HarnessError::Corpus {
                path: f.clone(),
                msg: format!("class {} already defined in {}", unit.name, prev.path.display()),
            });
        }
        out.push(CorpusClass { path: f, unit: Arc::new(unit) });
    }
    Ok(out)
}

pub fn read_runs(path: &Path) -> Result<Vec<RunRow>, HarnessError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| HarnessError::db(path, e))?;
    rdr.deserialize().map(|r| r.map_err(|e| HarnessError::db(path, e))).collect()
}

fn read_timings(path: &Path) -> Result<Vec<TimingRow>, HarnessError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| HarnessError::db(path, e))?;
    rdr.deserialize().map(|r| r.map_err(|e| HarnessError::db(path, e))).collect()
}

/// Appends whole rows to a CSV file, writing the header when the file is new.
struct Appender {
    path: PathBuf,
    file: Mutex<File>,
}

impl Appender {
    fn open<T: Serialize + Default>(path: PathBuf, header_of: T) -> Result<Appender, HarnessError> {
        let fresh = !path.exists() || fs::metadata(&path).map(|m| m.len() == 0).unwrap_or(true);
        let mut file = OpenOptions::new().create(true).append(true).open(&path).map_err(|e| HarnessError::io(&path, e))?;
        if fresh {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.serialize(header_of).map_err(|e| HarnessError::db(&path, e))?;
            let bytes = w.into_inner().map_err(|e| HarnessError::db(&path, e.to_string()))?;
            // keep only the header line
            let end = bytes.iter().position(|b| *b == b'\n').map_or(bytes.len(), |i| i + 1);
            file.write_all(&bytes[..end]).map_err(|e| HarnessError::io(&path, e))?;
        }
        Ok(Appender { path, file: Mutex::new(file) })
    }

    fn append<T: Serialize>(&self, row: &T) -> Result<(), HarnessError> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        w.serialize(row).map_err(|e| HarnessError::db(&self.path, e))?;
        let bytes = w.into_inner().map_err(|e| HarnessError::db(&self.path, e.to_string()))?;
        let mut f = self.file.lock().unwrap_or_else(|e| e.into_inner());
        f.write_all(&bytes).and_then(|_| f.flush()).map_err(|e| HarnessError::io(&self.path, e))
    }
}

impl Default for RunRow {
    fn default() -> Self {
        RunRow {
            class: String::new(),
            branches: 0,
            mode: String::new(),
            round: 0,
            seed: 0,
            bc: 0.0,
            dbc: 0.0,
            lc: 0.0,
            wm: 0.0,
            tmc: 0.0,
            ntmc: 0.0,
            ec: 0.0,
            oc: 0.0,
            ec_count: 0,
            theta_hat: None,
            suite_size: 0,
            suite_length: 0,
            goals: 0,
            covered_goals: 0,
            evaluations: 0,
            generations: 0,
        }
    }
}

impl Default for TimingRow {
    fn default() -> Self {
        TimingRow { class: String::new(), mode: String::new(), round: 0, elapsed_ms: 0.0 }
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| HarnessError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| HarnessError::io(path, e))
}

/// Rewrites a CSV table sorted by key, dropping duplicate keys.
fn rewrite_sorted<T, K>(path: &Path, mut rows: Vec<T>, key: impl Fn(&T) -> K) -> Result<(), HarnessError>
where
    T: Serialize,
    K: Ord,
{
    rows.sort_by_key(&key);
    rows.dedup_by(|a, b| key(a) == key(b));
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r).map_err(|e| HarnessError::db(path, e))?;
    }
    if rows.is_empty() {
        return Ok(());
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::db(path, e.to_string()))?;
    write_atomic(path, &bytes)
}

struct Prepared {
    unit: Arc<SourceUnit>,
    /// All eight criteria; the suite is measured against this.
    full: GoalEvaluator,
    searched: BTreeMap<String, GoalEvaluator>,
}

fn prepare(classes: &[CorpusClass], plan: &ExperimentPlan) -> Result<BTreeMap<String, Prepared>, HarnessError> {
    let table = SubsumptionTable::builtin();
    let mut out = BTreeMap::new();
    for c in classes {
        let unit = c.unit.clone();
        let base = SelectionConfig { line_threshold: plan.line_threshold, ..SelectionConfig::default() };
        let orig = original_goal_set(&unit, &base);
        let full = GoalEvaluator::new(unit.clone(), orig.goals, &orig.mutants)
            .map_err(|e| HarnessError::Corpus { path: c.path.clone(), msg: e.to_string() })?;
        let mut searched = BTreeMap::new();
        for &mode in &plan.modes {
            let cfg = SelectionConfig { mode, ..base.clone() };
            let sel = goal_set(&unit, &cfg, &table)?;
            let ev = GoalEvaluator::new(unit.clone(), sel.goals, &sel.mutants)
                .map_err(|e| HarnessError::Corpus { path: c.path.clone(), msg: e.to_string() })?;
            searched.insert(mode.to_string(), ev);
        }
        out.insert(unit.name.clone(), Prepared { unit, full, searched });
    }
    Ok(out)
}

struct CellOutput {
    row: RunRow,
    elapsed_ms: f64,
    events: Option<String>,
    traces: Option<Vec<TraceDump>>,
}

fn run_cell(p: &Prepared, key: &CellKey, mode: Mode, plan: &ExperimentPlan) -> Result<CellOutput, HarnessError> {
    if plan.inject_panic.as_ref() == Some(key) {
        panic!("injected failure in {}", key.slug());
    }
    let seed = cell_seed(plan.base_seed, &key.class, mode, key.round);
    let ev = &p.searched[&key.mode];
    if ev.is_empty() {
        return Err(HarnessError::Plan(format!("mode {mode} selects no goals for {}", key.class)));
    }
    let started = Instant::now();
    let result = run_search(ev, &plan.search_config(seed))?;
    let traces: Vec<_> = result.suite.tests.iter().map(|t| p.full.run_valid(t)).collect();
    let report = p.full.report(&traces);
    let elapsed_ms = started.elapsed().as_secs_f64() * 1e3;
    let ratio = |c: Criterion| report.criteria.iter().find(|x| x.criterion == c).map_or(0.0, |x| x.ratio);
    let row = RunRow {
        class: key.class.clone(),
        branches: p.unit.count_branches(),
        mode: key.mode.clone(),
        round: key.round,
        seed,
        bc: ratio(Criterion::Bc),
        dbc: ratio(Criterion::Dbc),
        lc: ratio(Criterion::Lc),
        wm: ratio(Criterion::Wm),
        tmc: ratio(Criterion::Tmc),
        ntmc: ratio(Criterion::Ntmc),
        ec: ratio(Criterion::Ec),
        oc: ratio(Criterion::Oc),
        ec_count: report.ec_count,
        theta_hat: report.theta_hat,
        suite_size: result.suite.tests.len(),
        suite_length: result.suite.total_statements(),
        goals: ev.len(),
        covered_goals: result.covered.len(),
        evaluations: result.evaluations,
        generations: result.generations,
    };
    let events = plan.write_events.then(|| events_to_jsonl(&result.events));
    let traces = plan.dump_traces.then(|| {
        result.suite.tests.iter().zip(&traces).map(|(t, tr)| tr.dump(&p.unit, t, Some(p.full.schema()))).collect()
    });
    Ok(CellOutput { row, elapsed_ms, events, traces })
}

fn panic_message(e: &(dyn std::any::Any + Send)) -> String {
    e.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| e.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "panic".to_string())
}

/// Runs every missing cell of the plan. Cells already in the run database
/// are skipped, so an interrupted run resumes where it stopped.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<ExperimentSummary, HarnessError> {
    plan.validate()?;
    let classes = load_corpus(&plan.corpus)?;
    let out = &plan.out_dir;
    fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;

    let plan_path = out.join(PLAN_FILE);
    if plan_path.exists() {
        let text = fs::read_to_string(&plan_path).map_err(|e| HarnessError::io(&plan_path, e))?;
        let old: serde_json::Value = serde_json::from_str(&text).map_err(|e| HarnessError::db(&plan_path, e))?;
        if old.get("fingerprint") != Some(&plan.fingerprint()) {
            return Err(HarnessError::Plan(format!(
                "{} holds results of a different plan; use a fresh output directory",
                out.display()
            )));
        }
    } else {
        let doc = serde_json::json!({ "fingerprint": plan.fingerprint(), "plan": plan });
        let text = serde_json::to_string_pretty(&doc).map_err(|e| HarnessError::db(&plan_path, e))?;
        write_atomic(&plan_path, text.as_bytes())?;
    }

    let runs_path = out.join(RUNS_FILE);
    let done: BTreeSet<CellKey> =
        if runs_path.exists() { read_runs(&runs_path)?.iter().map(RunRow::key).collect() } else { BTreeSet::new() };

    let prepared = prepare(&classes, plan)?;
    let mut cells = Vec::new();
    for c in &classes {
        for &mode in &plan.modes {
            for round in 0..plan.rounds {
                cells.push((CellKey::new(&c.unit.name, mode, round), mode));
            }
        }
    }
    let planned = cells.len();
    cells.retain(|(k, _)| !done.contains(k));
    let skipped = planned - cells.len();
    log::info!("{planned} cells planned, {skipped} already done");

    if plan.write_events {
        let d = out.join(EVENTS_DIR);
        fs::create_dir_all(&d).map_err(|e| HarnessError::io(&d, e))?;
    }
    if plan.dump_traces {
        let d = out.join(TRACES_DIR);
        fs::create_dir_all(&d).map_err(|e| HarnessError::io(&d, e))?;
    }
    let runs = Appender::open(runs_path.clone(), RunRow::default())?;
    let timings_path = out.join(TIMINGS_FILE);
    let timings = Appender::open(timings_path.clone(), TimingRow::default())?;
    let failures: Mutex<Vec<(CellKey, String)>> = Mutex::new(Vec::new());

    let work = |(key, mode): &(CellKey, Mode)| {
        let outcome = panic::catch_unwind(AssertUnwindSafe(|| -> Result<(), HarnessError> {
            let o = run_cell(&prepared[&key.class], key, *mode, plan)?;
            if let Some(ev) = o.events {
                let p = out.join(EVENTS_DIR).join(format!("{}.jsonl", key.slug()));
                write_atomic(&p, ev.as_bytes())?;
            }
            if let Some(tr) = o.traces {
                let p = out.join(TRACES_DIR).join(format!("{}.json", key.slug()));
                let text = serde_json::to_string_pretty(&tr).map_err(|e| HarnessError::db(&p, e))?;
                write_atomic(&p, text.as_bytes())?;
            }
            timings.append(&TimingRow {
                class: key.class.clone(),
                mode: key.mode.clone(),
                round: key.round,
                elapsed_ms: o.elapsed_ms,
            })?;
            // the run row goes last: its presence marks the cell complete
            runs.append(&o.row)
        }));
        let msg = match outcome {
            Ok(Ok(())) => return,
            Ok(Err(e)) => e.to_string(),
            Err(p) => format!("panicked: {}", panic_message(&*p)),
        };
        log::error!("cell {} failed: {msg}", key.slug());
        failures.lock().unwrap_or_else(|e| e.into_inner()).push((key.clone(), msg));
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.parallelism)
        .build()
        .map_err(|e| HarnessError::Plan(format!("thread pool: {e}")))?;
    pool.install(|| cells.par_iter().for_each(work));
    drop(runs);
    drop(timings);

    let mut failed = failures.into_inner().unwrap_or_else(|e| e.into_inner());
    failed.sort();
    if !failed.is_empty() {
        let p = out.join(FAILURES_FILE);
        let mut f = OpenOptions::new().create(true).append(true).open(&p).map_err(|e| HarnessError::io(&p, e))?;
        for (k, m) in &failed {
            writeln!(f, "{}\t{}\t{}\t{m}", k.class, k.mode, k.round).map_err(|e| HarnessError::io(&p, e))?;
        }
    }

    let rows = read_runs(&runs_path)?;
    rewrite_sorted(&runs_path, rows, RunRow::key)?;
    let trows = read_timings(&timings_path)?;
    rewrite_sorted(&timings_path, trows, |t: &TimingRow| (t.class.clone(), t.mode.clone(), t.round))?;

    Ok(ExperimentSummary { planned, skipped, completed: planned - skipped - failed.len(), failed })
}
