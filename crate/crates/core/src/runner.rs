//! End-to-end optimization loop: initial design, warm-start iterations,
//! Pareto-set-model iterations, metric records, logs and checkpoints.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::archive::{EvaluationArchive, Stage};
use crate::config::{Mode, RunConfig};
use crate::error::{Error, Result};
use crate::gp::{KernelParams, SurrogateModel, SurrogateSet};
use crate::metrics::{default_med_count, lhd_from_hv, med, true_hypervolume};
use crate::problems::{true_front, ProblemSpec};
use crate::psm::{propose_batch, train, PsmArchitecture, PsmParams};
use crate::sampling::{derive_seed, sobol_design};
use crate::scalarization::ideal_point;
use crate::warmstart::warmstart_step;

pub const CHECKPOINT_VERSION: u32 = 1;

const TAG_INITIAL: u64 = 1;
const TAG_WARMSTART: u64 = 2;
const TAG_GP: u64 = 3;
const TAG_PSM_INIT: u64 = 4;
const TAG_TRAIN: u64 = 5;
const TAG_PROPOSE: u64 = 6;

/// One row of the run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub iteration: usize,
    pub stage: Stage,
    pub evaluations: usize,
    pub hv: f64,
    pub lhd: f64,
    pub med: Option<f64>,
    pub wallclock_s: f64,
    pub flags: Vec<String>,
    /// MED from true objective values at the mapped designs.
    pub true_med: Option<f64>,
    pub ideal_point: Option<Vec<f64>>,
    pub train_loss: Option<(f64, f64)>,
    pub sigma_skips: usize,
}

/// Everything needed to continue a run exactly where it stopped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunState {
    pub version: u32,
    pub config: RunConfig,
    pub archive: EvaluationArchive,
    pub gp_params: Option<Vec<KernelParams>>,
    pub psm: Option<PsmParams>,
    pub ideal_point: Option<Vec<f64>>,
    pub warmstart_done: usize,
    pub psl_done: usize,
    pub evaluations: usize,
    pub records: Vec<MetricRecord>,
}

impl RunState {
    pub fn new(config: RunConfig) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            config,
            archive: EvaluationArchive::default(),
            gp_params: None,
            psm: None,
            ideal_point: None,
            warmstart_done: 0,
            psl_done: 0,
            evaluations: 0,
            records: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("state serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::CorruptCheckpoint(e.to_string()))?;
        let found = value
            .get("version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::CorruptCheckpoint("missing version".into()))?;
        if found != u64::from(CHECKPOINT_VERSION) {
            return Err(Error::CheckpointVersion {
                found: found as u32,
                expected: CHECKPOINT_VERSION,
            });
        }
        let state: Self = serde_json::from_value(value).map_err(|e| Error::CorruptCheckpoint(e.to_string()))?;
        state.config.validate()?;
        if state.evaluations != state.archive.len() {
            return Err(Error::CorruptCheckpoint(format!(
                "evaluation counter {} disagrees with archive size {}",
                state.evaluations,
                state.archive.len()
            )));
        }
        Ok(state)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_json())
    }
}

fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Wraps the objective function with an evaluation counter and a hard budget.
#[derive(Debug, Clone)]
pub struct CountingEvaluator {
    problem: ProblemSpec,
    count: usize,
    budget: usize,
}

impl CountingEvaluator {
    pub fn new(problem: ProblemSpec, budget: usize, already: usize) -> Self {
        Self {
            problem,
            count: already,
            budget,
        }
    }

    pub fn evaluate(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        if self.count >= self.budget {
            return Err(Error::BudgetExhausted { budget: self.budget });
        }
        let y = self.problem.evaluate(x)?;
        self.count += 1;
        Ok(y)
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn remaining(&self) -> usize {
        self.budget.saturating_sub(self.count)
    }

    pub fn set_budget(&mut self, budget: usize) {
        self.budget = budget;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Action {
    Initial,
    Warmstart,
    Psl,
}

/// A live run: configuration, problem, true front, archive and models.
#[derive(Debug, Clone)]
pub struct Runner {
    state: RunState,
    problem: ProblemSpec,
    evaluator: CountingEvaluator,
    front: Vec<Vec<f64>>,
    truth_hv: f64,
    surrogates: Option<SurrogateSet>,
    out_dir: Option<PathBuf>,
}

impl Runner {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        Self::from_state(RunState::new(config))
    }

    pub fn from_state(state: RunState) -> Result<Self> {
        let config = &state.config;
        let problem = ProblemSpec::new(config.problem).with_dtlz2_distance(config.dtlz2_distance);
        let density = if config.front_density == 0 {
            problem.default_front_density()
        } else {
            config.front_density
        };
        let front = true_front(&problem, density, &config.resolved_data_dir())?.points;
        let truth_hv = true_hypervolume(&problem, &front)?;
        let evaluator = CountingEvaluator::new(problem.clone(), config.budget(), state.evaluations);
        let mut runner = Self {
            state,
            problem,
            evaluator,
            front,
            truth_hv,
            surrogates: None,
            out_dir: None,
        };
        runner.surrogates = runner.rebuild_surrogates()?;
        Ok(runner)
    }

    pub fn from_checkpoint(path: &Path) -> Result<Self> {
        Self::from_state(RunState::load(path)?)
    }

    /// Writes config, logs and checkpoint into `dir` after every iteration.
    pub fn with_output(mut self, dir: impl Into<PathBuf>) -> Self {
        self.out_dir = Some(dir.into());
        self
    }

    pub fn state(&self) -> &RunState {
        &self.state
    }

    pub fn config(&self) -> &RunConfig {
        &self.state.config
    }

    pub fn problem(&self) -> &ProblemSpec {
        &self.problem
    }

    pub fn front(&self) -> &[Vec<f64>] {
        &self.front
    }

    pub fn truth_hv(&self) -> f64 {
        self.truth_hv
    }

    pub fn records(&self) -> &[MetricRecord] {
        &self.state.records
    }

    pub fn archive(&self) -> &EvaluationArchive {
        &self.state.archive
    }

    pub fn surrogates(&self) -> Option<&SurrogateSet> {
        self.surrogates.as_ref()
    }

    pub fn psm(&self) -> Option<&PsmParams> {
        self.state.psm.as_ref()
    }

    pub fn evaluations(&self) -> usize {
        self.evaluator.count()
    }

    pub fn budget(&self) -> usize {
        self.evaluator.budget()
    }

    pub fn remaining_budget(&self) -> usize {
        self.evaluator.remaining()
    }

    pub fn set_budget(&mut self, budget: usize) {
        self.evaluator.set_budget(budget);
    }

    /// Surrogates on the whole archive at the stored hyperparameters.
    fn rebuild_surrogates(&self) -> Result<Option<SurrogateSet>> {
        let Some(params) = &self.state.gp_params else {
            return Ok(None);
        };
        let x = self.state.archive.designs();
        let ys = self.state.archive.objectives();
        let models = params
            .iter()
            .enumerate()
            .map(|(j, p)| {
                let column: Vec<f64> = ys.iter().map(|y| y[j]).collect();
                SurrogateModel::with_params(&x, &column, p.clone())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Some(SurrogateSet { models }))
    }

    fn next_action(&self) -> Option<Action> {
        let c = &self.state.config;
        if self.state.archive.is_empty() {
            Some(Action::Initial)
        } else if self.state.warmstart_done < c.warmstart_iterations() {
            Some(Action::Warmstart)
        } else if self.state.psl_done < c.psl_iterations() {
            Some(Action::Psl)
        } else {
            None
        }
    }

    pub fn is_finished(&self) -> bool {
        self.next_action().is_none() || (!self.state.archive.is_empty() && self.evaluator.remaining() == 0)
    }

    /// Runs the next scheduled iteration; `None` once the schedule or the
    /// budget is exhausted.
    pub fn step(&mut self) -> Result<Option<MetricRecord>> {
        let Some(action) = self.next_action() else {
            return Ok(None);
        };
        if action != Action::Initial && self.evaluator.remaining() == 0 {
            return Ok(None);
        }
        let outcome = match action {
            Action::Initial => self.initial(),
            Action::Warmstart => self.warmstart(),
            Action::Psl => self.psl(),
        };
        self.finish_iteration(outcome).map(Some)
    }

    /// One model-based iteration regardless of the schedule.
    pub fn step_psl(&mut self) -> Result<MetricRecord> {
        if self.state.archive.is_empty() {
            return Err(Error::InvalidArgument("run has no initial design yet".into()));
        }
        if self.evaluator.remaining() == 0 {
            return Err(Error::BudgetExhausted {
                budget: self.evaluator.budget(),
            });
        }
        let outcome = self.psl();
        self.finish_iteration(outcome)
    }

    fn finish_iteration(&mut self, outcome: Result<MetricRecord>) -> Result<MetricRecord> {
        match outcome {
            Ok(record) => {
                self.state.records.push(record.clone());
                self.state.evaluations = self.evaluator.count();
                self.persist()?;
                Ok(record)
            }
            Err(e) => {
                // flush what we have before reporting
                let _ = self.write_logs();
                Err(e)
            }
        }
    }

    /// Runs until the schedule or budget ends, or `stop_after` records exist.
    pub fn run(&mut self, stop_after: Option<usize>) -> Result<()> {
        while stop_after.is_none_or(|n| self.state.records.len() < n) {
            if self.step()?.is_none() {
                break;
            }
        }
        Ok(())
    }

    /// Truly evaluates `x` and appends it to the archive. Models are not refit.
    pub fn evaluate_manual(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        self.problem.check_point(x)?;
        let y = self.evaluator.evaluate(x)?;
        let iteration = self.state.records.last().map_or(0, |r| r.iteration);
        self.state.archive.push(x.to_vec(), y.clone(), iteration, Stage::Manual);
        self.state.evaluations = self.evaluator.count();
        self.persist()?;
        Ok(y)
    }

    fn seed(&self, tag: u64, index: usize) -> u64 {
        derive_seed(self.state.config.seed, &[tag, index as u64])
    }

    fn evaluate_batch(&mut self, designs: Vec<Vec<f64>>, iteration: usize, stage: Stage, flags: &mut Vec<String>) -> Result<()> {
        let room = self.evaluator.remaining();
        if designs.len() > room {
            flags.push("budget_truncated".into());
        }
        for x in designs.into_iter().take(room) {
            let y = self.evaluator.evaluate(&x)?;
            self.state.archive.push(x, y, iteration, stage);
        }
        Ok(())
    }

    fn base_record(&self, iteration: usize, stage: Stage, started: Instant, flags: Vec<String>) -> Result<MetricRecord> {
        let hv = self.state.archive.front(&self.problem.reference_point).hypervolume()?;
        let lhd = lhd_from_hv(self.truth_hv, hv);
        let mut flags = flags;
        if lhd.clamped {
            flags.push("lhd_clamped".into());
        }
        Ok(MetricRecord {
            iteration,
            stage,
            evaluations: self.evaluator.count(),
            hv,
            lhd: lhd.value,
            med: None,
            wallclock_s: started.elapsed().as_secs_f64(),
            flags,
            true_med: None,
            ideal_point: None,
            train_loss: None,
            sigma_skips: 0,
        })
    }

    fn initial(&mut self) -> Result<MetricRecord> {
        let started = Instant::now();
        let c = &self.state.config;
        let (lo, hi) = self.problem.bounds();
        let designs: Vec<Vec<f64>> = sobol_design(c.initial_evals, lo, hi, self.seed(TAG_INITIAL, 0))
            .iter()
            .map(|x| self.problem.snap(x))
            .collect();
        let mut flags = Vec::new();
        self.evaluate_batch(designs, 0, Stage::Initial, &mut flags)?;
        self.base_record(0, Stage::Initial, started, flags)
    }

    fn previous_params(&self) -> Option<Vec<KernelParams>> {
        if self.state.config.gp.inject_previous {
            self.state.gp_params.clone()
        } else {
            None
        }
    }

    fn warmstart(&mut self) -> Result<MetricRecord> {
        let started = Instant::now();
        let i = self.state.warmstart_done;
        let iteration = 1 + i;
        let c = self.state.config.clone();
        let previous = self.previous_params();
        let out = warmstart_step(
            &self.state.archive,
            &self.problem,
            c.b1,
            &c.nsga2,
            &c.gp,
            previous.as_deref(),
            self.seed(TAG_WARMSTART, i),
        )?;
        let mut flags = Vec::new();
        if out.shortfall {
            flags.push("shortfall".into());
        }
        if out.degenerate {
            flags.push("degenerate_pool".into());
        }
        if out.surrogates.models.iter().any(|m| m.jitter > 0.0) {
            flags.push("jitter".into());
        }
        self.state.gp_params = Some(out.surrogates.params());
        self.surrogates = Some(out.surrogates);
        self.evaluate_batch(out.designs, iteration, Stage::Warmstart, &mut flags)?;
        self.state.warmstart_done += 1;
        self.base_record(iteration, Stage::Warmstart, started, flags)
    }

    fn architecture(&self) -> PsmArchitecture {
        PsmArchitecture::new(self.problem.m, self.state.config.hidden.clone(), self.problem.n)
    }

    /// Model parameters at the start of model-based iteration `i`.
    fn starting_params(&self, i: usize) -> Result<PsmParams> {
        let arch = self.architecture();
        let fresh = |k: usize| PsmParams::init(&arch, self.seed(TAG_PSM_INIT, k));
        let c = &self.state.config;
        match (c.mode, &self.state.psm) {
            (Mode::CoPsl, Some(prev)) if i > 0 => prev.reinit(c.beta_schedule.beta(i), self.seed(TAG_PSM_INIT, i)),
            (Mode::PslMoboPersist, Some(prev)) => Ok(prev.clone()),
            (Mode::PslMobo | Mode::PslMoboWarm, _) => fresh(i),
            _ => fresh(0),
        }
    }

    fn psl(&mut self) -> Result<MetricRecord> {
        let started = Instant::now();
        let i = self.state.psl_done;
        let iteration = 1 + self.state.warmstart_done + i;
        let c = self.state.config.clone();
        let previous = self.previous_params();
        let surrogates = SurrogateSet::fit(
            &self.state.archive.designs(),
            &self.state.archive.objectives(),
            self.seed(TAG_GP, iteration),
            &c.gp,
            previous.as_deref(),
        )?;
        let mut flags = Vec::new();
        if surrogates.models.iter().any(|m| m.jitter > 0.0) {
            flags.push("jitter".into());
        }
        let z = ideal_point(&self.state.archive.objectives())?;
        let start = self.starting_params(i)?;
        let (params, report) = train(&start, &surrogates, &self.problem, &z, &c.train, self.seed(TAG_TRAIN, i))?;
        if report.sigma_skips > 0 {
            flags.push("sigma_skipped".into());
        }
        let existing = self.state.archive.front(&self.problem.reference_point);
        let proposal = propose_batch(
            &params,
            &surrogates,
            &self.problem,
            &existing,
            &self.state.archive.designs(),
            c.b2,
            &c.train,
            self.seed(TAG_PROPOSE, i),
        )?;
        if proposal.shortfall {
            flags.push("shortfall".into());
        }
        let med_report = if self.problem.id.is_synthetic() {
            let k = if c.med_count == 0 {
                default_med_count(self.problem.m)
            } else {
                c.med_count
            };
            Some(med(&params, &surrogates, &self.problem, k, &self.front, &z)?)
        } else {
            None
        };

        self.state.gp_params = Some(surrogates.params());
        self.surrogates = Some(surrogates);
        self.state.psm = Some(params);
        self.state.ideal_point = Some(z.clone());
        self.evaluate_batch(proposal.designs, iteration, Stage::Psl, &mut flags)?;
        self.state.psl_done += 1;

        let mut record = self.base_record(iteration, Stage::Psl, started, flags)?;
        record.med = med_report.map(|r| r.med);
        record.true_med = med_report.and_then(|r| r.true_med);
        record.ideal_point = Some(z);
        record.train_loss = match (report.losses.first(), report.losses.last()) {
            (Some(&a), Some(&b)) => Some((a, b)),
            _ => None,
        };
        record.sigma_skips = report.sigma_skips;
        Ok(record)
    }

    fn persist(&self) -> Result<()> {
        let Some(dir) = &self.out_dir else {
            return Ok(());
        };
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let config_path = dir.join("config.toml");
        if !config_path.exists() {
            write_atomic(&config_path, &self.state.config.to_toml())?;
        }
        self.write_logs()?;
        self.state.save(&dir.join("checkpoint.json"))
    }

    fn write_logs(&self) -> Result<()> {
        let Some(dir) = &self.out_dir else {
            return Ok(());
        };
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_atomic(&dir.join("log.csv"), &log_csv(&self.state.records))?;
        write_atomic(&dir.join("diagnostics.csv"), &diagnostics_csv(&self.state.records))
    }
}

pub const LOG_HEADER: &str = "iteration,stage,evaluations,hv,lhd,med,wallclock_s,flags";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn log_csv(records: &[MetricRecord]) -> String {
    let mut out = String::from(LOG_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.iteration,
            r.stage.name(),
            r.evaluations,
            r.hv,
            r.lhd,
            opt(r.med),
            r.wallclock_s,
            r.flags.join(";")
        );
    }
    out
}

pub fn diagnostics_csv(records: &[MetricRecord]) -> String {
    let mut out = String::from("iteration,true_med,ideal_point,train_loss_first,train_loss_last,sigma_skips\n");
    for r in records {
        let ideal = r
            .ideal_point
            .as_ref()
            .map(|z| z.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.iteration,
            opt(r.true_med),
            ideal,
            opt(r.train_loss.map(|l| l.0)),
            opt(r.train_loss.map(|l| l.1)),
            r.sigma_skips
        );
    }
    out
}

/// A parsed row of a run log.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub iteration: usize,
    pub stage: String,
    pub evaluations: usize,
    pub hv: f64,
    pub lhd: f64,
    pub med: Option<f64>,
    pub wallclock_s: f64,
    pub flags: String,
}

pub fn parse_log(text: &str) -> Result<Vec<LogRow>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(LOG_HEADER) {
        return Err(Error::InvalidArgument("run log header mismatch".into()));
    }
    let bad = |row: usize, what: &str| Error::InvalidArgument(format!("run log row {row}: bad {what}"));
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(row, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 8 {
                return Err(bad(row, "column count"));
            }
            Ok(LogRow {
                iteration: f[0].parse().map_err(|_| bad(row, "iteration"))?,
                stage: f[1].to_string(),
                evaluations: f[2].parse().map_err(|_| bad(row, "evaluations"))?,
                hv: f[3].parse().map_err(|_| bad(row, "hv"))?,
                lhd: f[4].parse().map_err(|_| bad(row, "lhd"))?,
                med: if f[5].is_empty() {
                    None
                } else {
                    Some(f[5].parse().map_err(|_| bad(row, "med"))?)
                },
                wallclock_s: f[6].parse().map_err(|_| bad(row, "wallclock_s"))?,
                flags: f[7].to_string(),
            })
        })
        .collect()
}

/// Runs `config` to completion, writing into its run directory.
pub fn run(config: RunConfig) -> Result<Runner> {
    let dir = config.run_dir();
    let mut runner = Runner::new(config)?.with_output(dir);
    runner.run(None)?;
    Ok(runner)
}
