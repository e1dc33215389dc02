//! Run configuration, read from TOML with every field required.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::GpConfig;
use crate::problems::{Dtlz2Distance, ProblemId};
use crate::psm::{BetaSchedule, TrainConfig};
use crate::warmstart::Nsga2Config;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Warm start, then the β-blended Pareto set model.
    CoPsl,
    /// No warm start; the model is re-initialized fresh every iteration.
    #[serde(alias = "psl_mobo_fresh")]
    PslMobo,
    /// No warm start; the model carries over between iterations unchanged.
    PslMoboPersist,
    /// Warm start, then a fresh model every iteration.
    PslMoboWarm,
    WarmstartOnly,
}

impl Mode {
    pub const ALL: [Mode; 5] = [
        Mode::CoPsl,
        Mode::PslMobo,
        Mode::PslMoboPersist,
        Mode::PslMoboWarm,
        Mode::WarmstartOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::CoPsl => "co_psl",
            Mode::PslMobo => "psl_mobo",
            Mode::PslMoboPersist => "psl_mobo_persist",
            Mode::PslMoboWarm => "psl_mobo_warm",
            Mode::WarmstartOnly => "warmstart_only",
        }
    }

    pub fn has_warmstart(self) -> bool {
        matches!(self, Mode::CoPsl | Mode::PslMoboWarm | Mode::WarmstartOnly)
    }

    pub fn has_psl(self) -> bool {
        self != Mode::WarmstartOnly
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "psl_mobo_fresh" {
            return Ok(Mode::PslMobo);
        }
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown mode '{s}'")))
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemId,
    pub seed: u64,
    pub mode: Mode,
    pub initial_evals: usize,
    pub n1: usize,
    pub n2: usize,
    pub b1: usize,
    pub b2: usize,
    /// Hard cap on expensive evaluations; 0 derives it from the schedule.
    pub eval_budget: usize,
    /// Preferences in the MED grid; 0 picks 200 (m = 2) or 300 (m = 3).
    pub med_count: usize,
    /// Points in the sampled true front; 0 picks the problem default.
    pub front_density: usize,
    pub dtlz2_distance: Dtlz2Distance,
    pub output_dir: PathBuf,
    /// Directory of the RE front files; empty uses the bundled data.
    pub data_dir: PathBuf,
    /// Hidden layer widths of the Pareto set model.
    pub hidden: Vec<usize>,
    pub beta_schedule: BetaSchedule,
    pub train: TrainConfig,
    pub gp: GpConfig,
    pub nsga2: Nsga2Config,
}

impl RunConfig {
    pub fn default_for(problem: ProblemId) -> Self {
        Self {
            problem,
            seed: 0,
            mode: Mode::CoPsl,
            initial_evals: 20,
            n1: 20,
            n2: if problem == ProblemId::Re36 { 10 } else { 20 },
            b1: 10,
            b2: 10,
            eval_budget: 0,
            med_count: 0,
            front_density: 0,
            dtlz2_distance: Dtlz2Distance::Standard,
            output_dir: PathBuf::from("runs"),
            data_dir: PathBuf::new(),
            hidden: vec![128, 128],
            beta_schedule: BetaSchedule::default(),
            train: TrainConfig::default(),
            gp: GpConfig::default(),
            nsga2: Nsga2Config::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.initial_evals == 0 {
            return fail("initial_evals must be at least 1");
        }
        if self.mode.has_warmstart() && self.n1 > 0 && self.b1 == 0 {
            return fail("b1 must be at least 1");
        }
        if self.mode.has_psl() && self.psl_iterations() > 0 {
            if self.b2 == 0 {
                return fail("b2 must be at least 1");
            }
            if self.train.candidates < self.b2 {
                return fail("train.candidates must be at least b2");
            }
            if self.train.prefs_per_step == 0 {
                return fail("train.prefs_per_step must be at least 1");
            }
        }
        if self.hidden.contains(&0) {
            return fail("hidden layer widths must be positive");
        }
        if !(self.train.eta >= 0.0) || !(self.train.lambda >= 0.0) {
            return fail("train.eta and train.lambda must be non-negative");
        }
        if self.nsga2.population == 0 || self.nsga2.generations == 0 {
            return fail("nsga2.population and nsga2.generations must be positive");
        }
        self.beta_schedule.validate()?;
        if self.eval_budget != 0 && self.eval_budget < self.initial_evals {
            return fail("eval_budget is below initial_evals");
        }
        Ok(())
    }

    /// Number of warm-start iterations in this mode.
    pub fn warmstart_iterations(&self) -> usize {
        if self.mode.has_warmstart() {
            self.n1
        } else {
            0
        }
    }

    /// Number of model-based iterations in this mode.
    pub fn psl_iterations(&self) -> usize {
        match self.mode {
            Mode::CoPsl | Mode::PslMoboWarm => self.n2,
            Mode::PslMobo | Mode::PslMoboPersist => self.n1 + self.n2,
            Mode::WarmstartOnly => 0,
        }
    }

    /// Evaluations the schedule consumes.
    pub fn scheduled_evaluations(&self) -> usize {
        self.initial_evals + self.warmstart_iterations() * self.b1 + self.psl_iterations() * self.b2
    }

    pub fn budget(&self) -> usize {
        if self.eval_budget == 0 {
            self.scheduled_evaluations()
        } else {
            self.eval_budget
        }
    }

    /// Directory name of this run under `output_dir`.
    pub fn run_name(&self) -> String {
        format!("{}-{}-s{}", self.problem, self.mode, self.seed)
    }

    pub fn run_dir(&self) -> PathBuf {
        self.output_dir.join(self.run_name())
    }

    pub fn resolved_data_dir(&self) -> PathBuf {
        if self.data_dir.as_os_str().is_empty() {
            crate::problems::bundled_data_dir()
        } else {
            self.data_dir.clone()
        }
    }
}
