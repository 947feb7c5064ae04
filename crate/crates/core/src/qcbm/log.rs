//! Training logs and their CSV formats.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub mmd_train: f64,
    pub mmd_test: f64,
    pub wall_ms: f64,
}

/// Per-iteration loss values plus the final parameter vector of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainLog {
    pub records: Vec<IterationRecord>,
    pub final_params: Vec<f64>,
}

impl TrainLog {
    /// Raw per-iteration CSV; no smoothing is ever applied here.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,mmd_train,mmd_test,wall_ms\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.iteration, r.mmd_train, r.mmd_test, r.wall_ms
            ));
        }
        out
    }

    pub fn final_train_mmd(&self) -> Option<f64> {
        self.records.last().map(|r| r.mmd_train)
    }
}

/// Trailing moving average with a window of up to `window` entries.
fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for i in 0..values.len() {
        acc += values[i];
        if i >= window {
            acc -= values[i - window];
        }
        let len = (i + 1).min(window);
        out.push(acc / len as f64);
    }
    out
}

/// Cross-seed aggregate: per iteration, the mean and standard deviation of
/// the smoothed train/test MMD over all runs (moving-average window applied
/// per run before aggregating). All logs must have equal length.
pub fn write_aggregate_csv(logs: &[&TrainLog], window: usize) -> Result<String> {
    if logs.is_empty() {
        return Err(Error::validation("no logs to aggregate"));
    }
    let len = logs[0].records.len();
    if logs.iter().any(|l| l.records.len() != len) {
        return Err(Error::validation("logs have different lengths"));
    }
    let smooth_train: Vec<Vec<f64>> = logs
        .iter()
        .map(|l| {
            moving_average(
                &l.records.iter().map(|r| r.mmd_train).collect::<Vec<_>>(),
                window,
            )
        })
        .collect();
    let smooth_test: Vec<Vec<f64>> = logs
        .iter()
        .map(|l| {
            moving_average(
                &l.records.iter().map(|r| r.mmd_test).collect::<Vec<_>>(),
                window,
            )
        })
        .collect();

    let stats = |series: &[Vec<f64>], i: usize| -> (f64, f64) {
        let n = series.len() as f64;
        let mean = series.iter().map(|s| s[i]).sum::<f64>() / n;
        let var = series.iter().map(|s| (s[i] - mean).powi(2)).sum::<f64>() / n;
        (mean, var.sqrt())
    };

    let mut out = String::from(
        "iteration,mmd_train_mean,mmd_train_std,mmd_test_mean,mmd_test_std\n",
    );
    for i in 0..len {
        let (tm, ts) = stats(&smooth_train, i);
        let (em, es) = stats(&smooth_test, i);
        out.push_str(&format!(
            "{},{tm},{ts},{em},{es}\n",
            logs[0].records[i].iteration
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_from(values: &[f64]) -> TrainLog {
        TrainLog {
            records: values
                .iter()
                .enumerate()
                .map(|(i, &v)| IterationRecord {
                    iteration: i,
                    mmd_train: v,
                    mmd_test: v * 2.0,
                    wall_ms: 1.0,
                })
                .collect(),
            final_params: vec![],
        }
    }

    #[test]
    fn moving_average_uses_partial_windows_at_the_start() {
        let ma = moving_average(&[1.0, 2.0, 3.0, 4.0], 2);
        assert_eq!(ma, vec![1.0, 1.5, 2.5, 3.5]);
        let identity = moving_average(&[5.0, 7.0], 1);
        assert_eq!(identity, vec![5.0, 7.0]);
    }

    #[test]
    fn csv_has_the_documented_columns() {
        let log = log_from(&[0.5, 0.4]);
        let csv = log.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "iteration,mmd_train,mmd_test,wall_ms");
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn aggregate_mean_and_std_are_correct() {
        let a = log_from(&[1.0, 1.0]);
        let b = log_from(&[3.0, 3.0]);
        let csv = write_aggregate_csv(&[&a, &b], 1).unwrap();
        let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
        let mean: f64 = row[1].parse().unwrap();
        let std: f64 = row[2].parse().unwrap();
        assert!((mean - 2.0).abs() < 1e-12);
        assert!((std - 1.0).abs() < 1e-12);
    }

    #[test]
    fn aggregate_rejects_mismatched_lengths() {
        let a = log_from(&[1.0]);
        let b = log_from(&[1.0, 2.0]);
        assert!(write_aggregate_csv(&[&a, &b], 1).is_err());
    }
}
