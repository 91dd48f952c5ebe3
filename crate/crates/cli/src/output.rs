use std::fs;
use std::path::{Path, PathBuf};

use popcd::{BiasVarianceReport, TrainLogRow};

use crate::error::CliError;

pub const TRAIN_HEADER: [&str; 5] = ["iteration", "neg_log_likelihood_per_sample", "ess_mean", "log_weight_max", "wall_clock_ms"];
pub const TABLE1_HEADER: [&str; 6] = ["problem", "k", "hidden", "estimator", "variance", "bias"];

pub const INCOMPLETE: &str = "INCOMPLETE";

fn cell(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

pub fn train_csv(rows: &[TrainLogRow]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRAIN_HEADER).map_err(CliError::runtime)?;
    for r in rows {
        w.write_record([
            r.iteration.to_string(),
            cell(r.neg_log_likelihood),
            cell(r.ess),
            cell(r.log_weight_max),
            cell(r.wall_clock_ms),
        ])
        .map_err(CliError::runtime)?;
    }
    w.into_inner().map_err(CliError::runtime)
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let mut sum = 0.0;
    let mut count = 0;
    for v in values {
        sum += v?;
        count += 1;
    }
    (count > 0).then(|| sum / count as f64)
}

/// Row-wise means across trials; a cell is empty if any trial left it empty.
pub fn aggregate(trials: &[Vec<TrainLogRow>]) -> Vec<TrainLogRow> {
    let rows = trials.iter().map(Vec::len).min().unwrap_or(0);
    (0..rows)
        .map(|t| TrainLogRow {
            iteration: trials[0][t].iteration,
            neg_log_likelihood: mean_of(trials.iter().map(|l| l[t].neg_log_likelihood)),
            ess: mean_of(trials.iter().map(|l| l[t].ess)),
            log_weight_max: mean_of(trials.iter().map(|l| l[t].log_weight_max)),
            wall_clock_ms: mean_of(trials.iter().map(|l| l[t].wall_clock_ms)),
        })
        .collect()
}

pub struct Table1Row<'a> {
    pub problem: &'a str,
    pub hidden: usize,
    pub report: &'a BiasVarianceReport,
}

pub fn table1_csv(rows: &[Table1Row<'_>]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TABLE1_HEADER).map_err(CliError::runtime)?;
    for r in rows {
        w.write_record([
            r.problem.to_string(),
            r.report.k.to_string(),
            r.hidden.to_string(),
            r.report.estimator.to_string(),
            r.report.variance_per_param.to_string(),
            r.report.bias_per_param.to_string(),
        ])
        .map_err(CliError::runtime)?;
    }
    w.into_inner().map_err(CliError::runtime)
}

/// An output directory whose `INCOMPLETE` marker exists until
/// [`OutputDir::finish`] is called.
pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: &Path, command: &str) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::Runtime(format!("{}: {e}", root.display())))?;
        let dir = Self { root: root.to_path_buf() };
        dir.write(INCOMPLETE, format!("{command} started and has not finished\n").as_bytes())?;
        Ok(dir)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        fs::write(&path, bytes).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        Ok(path)
    }

    pub fn fail(&self, err: &CliError) {
        let _ = fs::write(self.path(INCOMPLETE), format!("{err}\n"));
    }

    pub fn finish(self) -> Result<(), CliError> {
        fs::remove_file(self.path(INCOMPLETE)).map_err(CliError::runtime)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(iteration: usize, nll: Option<f64>, ess: Option<f64>) -> TrainLogRow {
        TrainLogRow {
            iteration,
            neg_log_likelihood: nll,
            ess,
            log_weight_max: None,
            wall_clock_ms: None,
        }
    }

    #[test]
    fn csv_layout() {
        let bytes = train_csv(&[row(0, Some(11.5), None), row(100, Some(0.1 + 0.2), Some(32.0))]).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert_eq!(
            text,
            "iteration,neg_log_likelihood_per_sample,ess_mean,log_weight_max,wall_clock_ms\n0,11.5,,,\n100,0.30000000000000004,32,,\n"
        );
    }

    #[test]
    fn aggregate_means_rows() {
        let a = vec![row(0, Some(1.0), None), row(10, Some(2.0), Some(4.0))];
        let b = vec![row(0, Some(3.0), None), row(10, Some(5.0), Some(8.0))];
        let agg = aggregate(&[a, b]);
        assert_eq!(agg[0], row(0, Some(2.0), None));
        assert_eq!(agg[1], row(10, Some(3.5), Some(6.0)));
    }
}
