//! Aggregates run logs across seeds into per-(problem, mode) plot data.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::runner::{parse_log, LogRow};

/// One run's log together with the configuration it was produced under.
#[derive(Debug, Clone)]
pub struct RunLog {
    pub config: RunConfig,
    pub rows: Vec<LogRow>,
}

impl RunLog {
    /// Reads `config.toml` and `log.csv` from a run directory.
    pub fn load(dir: &Path) -> Result<Self> {
        let config = RunConfig::load(&dir.join("config.toml"))?;
        let path = dir.join("log.csv");
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(Self {
            config,
            rows: parse_log(&text)?,
        })
    }
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotRow {
    pub evaluations: usize,
    pub mean_lhd: f64,
    pub std_lhd: f64,
    pub mean_med: Option<f64>,
    pub std_med: Option<f64>,
}

/// Aggregates logs that share an evaluation grid.
pub fn aggregate(logs: &[&RunLog]) -> Result<Vec<PlotRow>> {
    let first = logs
        .first()
        .ok_or_else(|| Error::Alignment("no runs to aggregate".into()))?;
    let grid: Vec<usize> = first.rows.iter().map(|r| r.evaluations).collect();
    for log in logs {
        let other: Vec<usize> = log.rows.iter().map(|r| r.evaluations).collect();
        if other != grid {
            return Err(Error::Alignment(format!(
                "seed {} has evaluation grid {:?}, expected {:?}",
                log.config.seed, other, grid
            )));
        }
    }
    Ok((0..grid.len())
        .map(|k| {
            let lhd: Vec<f64> = logs.iter().map(|l| l.rows[k].lhd).collect();
            let med: Option<Vec<f64>> = logs.iter().map(|l| l.rows[k].med).collect();
            let (mean_lhd, std_lhd) = mean_std(&lhd);
            let med_stats = med.map(|m| mean_std(&m));
            PlotRow {
                evaluations: grid[k],
                mean_lhd,
                std_lhd,
                mean_med: med_stats.map(|s| s.0),
                std_med: med_stats.map(|s| s.1),
            }
        })
        .collect())
}

pub const PLOT_HEADER: &str = "evaluations,mean_lhd,std_lhd,mean_med,std_med";

pub fn plot_csv(rows: &[PlotRow]) -> String {
    let mut out = String::from(PLOT_HEADER);
    out.push('\n');
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.evaluations,
            r.mean_lhd,
            r.std_lhd,
            opt(r.mean_med),
            opt(r.std_med)
        );
    }
    out
}

/// Groups logs by (problem, mode) and writes `<problem>_<mode>.csv` into
/// `out`. Returns the written paths.
pub fn export_plot_data(logs: &[RunLog], out: &Path) -> Result<Vec<PathBuf>> {
    let mut groups: BTreeMap<(String, String), Vec<&RunLog>> = BTreeMap::new();
    for log in logs {
        groups
            .entry((log.config.problem.to_string(), log.config.mode.to_string()))
            .or_default()
            .push(log);
    }
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut written = Vec::new();
    for ((problem, mode), mut group) in groups {
        group.sort_by_key(|l| l.config.seed);
        let rows = aggregate(&group)?;
        let path = out.join(format!("{problem}_{mode}.csv"));
        std::fs::write(&path, plot_csv(&rows)).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

/// Loads every run directory directly under `runs` that holds a log.
pub fn load_runs(runs: &Path) -> Result<Vec<RunLog>> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(runs)
        .map_err(|e| Error::io(runs, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("log.csv").is_file() && p.join("config.toml").is_file())
        .collect();
    dirs.sort();
    dirs.iter().map(|d| RunLog::load(d)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::ProblemId;

    fn log(seed: u64, lhd: &[f64], med: &[Option<f64>]) -> RunLog {
        let mut config = RunConfig::default_for(ProblemId::Dtlz2);
        config.seed = seed;
        RunLog {
            config,
            rows: lhd
                .iter()
                .zip(med)
                .enumerate()
                .map(|(i, (&l, &m))| LogRow {
                    iteration: i,
                    stage: "psl".into(),
                    evaluations: 20 + 10 * i,
                    hv: 0.0,
                    lhd: l,
                    med: m,
                    wallclock_s: 0.0,
                    flags: String::new(),
                })
                .collect(),
        }
    }

    #[test]
    fn single_run_has_zero_std() {
        let a = log(0, &[-1.0, -2.0], &[None, Some(0.5)]);
        let rows = aggregate(&[&a]).unwrap();
        assert!(rows.iter().all(|r| r.std_lhd == 0.0));
        assert_eq!(rows[1].std_med, Some(0.0));
        assert_eq!(rows[0].mean_med, None);
    }

    #[test]
    fn identical_runs_and_pair() {
        let runs: Vec<RunLog> = (0..5).map(|s| log(s, &[-1.5], &[Some(0.2)])).collect();
        let refs: Vec<&RunLog> = runs.iter().collect();
        let rows = aggregate(&refs).unwrap();
        assert_eq!((rows[0].mean_lhd, rows[0].std_lhd), (-1.5, 0.0));
        let a = log(0, &[-1.0], &[Some(1.0)]);
        let b = log(1, &[-3.0], &[Some(3.0)]);
        let rows = aggregate(&[&a, &b]).unwrap();
        assert_eq!((rows[0].mean_lhd, rows[0].std_lhd), (-2.0, 1.0));
        assert_eq!((rows[0].mean_med, rows[0].std_med), (Some(2.0), Some(1.0)));
    }

    #[test]
    fn misaligned_grids_rejected() {
        let a = log(0, &[-1.0, -2.0], &[None, None]);
        let b = log(1, &[-1.0], &[None]);
        assert!(matches!(aggregate(&[&a, &b]), Err(Error::Alignment(_))));
    }

    #[test]
    fn writes_grouped_files() {
        let dir = tempfile::tempdir().unwrap();
        let runs = vec![log(0, &[-1.0], &[None]), log(1, &[-3.0], &[None])];
        let paths = export_plot_data(&runs, dir.path()).unwrap();
        assert_eq!(paths.len(), 1);
        let text = std::fs::read_to_string(&paths[0]).unwrap();
        assert_eq!(text, format!("{PLOT_HEADER}\n20,-2,1,,\n"));
        assert!(paths[0].ends_with("dtlz2_co_psl.csv"));
    }
}
