use rayon::prelude::*;

use crate::config::SimConfig;
use crate::error::SimResult;
use crate::trial::{run_trial, RoundMetrics, TrialOutput};

/// Metric columns after `round`, in CSV order.
pub const METRIC_COLUMNS: [&str; 7] = [
    "avg_trust",
    "avg_trust_pct",
    "bytes_sync",
    "bytes_total",
    "attest_attempted",
    "attest_succeeded",
    "wallclock_s",
];

impl RoundMetrics {
    pub fn values(&self) -> [f64; 7] {
        [
            self.avg_trust,
            self.avg_trust_pct,
            self.bytes_sync as f64,
            self.bytes_total as f64,
            self.attest_attempted as f64,
            self.attest_succeeded as f64,
            self.wallclock_s,
        ]
    }
}

/// Cross-trial statistic for one round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateRow {
    pub round: u64,
    pub values: [f64; 7],
}

impl AggregateRow {
    pub fn get(&self, column: &str) -> f64 {
        let i = METRIC_COLUMNS
            .iter()
            .position(|c| *c == column)
            .unwrap_or_else(|| panic!("unknown metric column {column}"));
        self.values[i]
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: SimConfig,
    pub trials: Vec<TrialOutput>,
    pub mean: Vec<AggregateRow>,
    /// Sample standard deviation (n - 1 denominator); 0 for a single trial.
    pub std: Vec<AggregateRow>,
}

impl ExperimentResult {
    pub fn final_mean(&self, column: &str) -> f64 {
        self.mean.last().expect("at least one round").get(column)
    }

    /// Mean of `column` over all rounds of the mean series.
    pub fn round_average(&self, column: &str) -> f64 {
        self.mean.iter().map(|r| r.get(column)).sum::<f64>() / self.mean.len() as f64
    }
}

pub fn aggregate(trials: &[TrialOutput]) -> (Vec<AggregateRow>, Vec<AggregateRow>) {
    let rounds = trials.first().map_or(0, |t| t.metrics.len());
    let k = trials.len() as f64;
    let mut mean = Vec::with_capacity(rounds);
    let mut std = Vec::with_capacity(rounds);
    for r in 0..rounds {
        let round = trials[0].metrics[r].round;
        let mut mu = [0.0; 7];
        for t in trials {
            for (acc, v) in mu.iter_mut().zip(t.metrics[r].values()) {
                *acc += v;
            }
        }
        mu.iter_mut().for_each(|x| *x /= k);
        let mut sd = [0.0; 7];
        if trials.len() > 1 {
            for t in trials {
                for ((acc, v), m) in sd.iter_mut().zip(t.metrics[r].values()).zip(mu) {
                    *acc += (v - m) * (v - m);
                }
            }
            sd.iter_mut().for_each(|x| *x = (*x / (k - 1.0)).sqrt());
        }
        mean.push(AggregateRow { round, values: mu });
        std.push(AggregateRow { round, values: sd });
    }
    (mean, std)
}

fn collect(config: &SimConfig, trials: Vec<TrialOutput>) -> ExperimentResult {
    let (mean, std) = aggregate(&trials);
    ExperimentResult {
        config: config.clone(),
        trials,
        mean,
        std,
    }
}

/// Runs `config.trials` trials with seeds `seed, seed + 1, ...` in parallel.
pub fn run_experiment(config: &SimConfig) -> SimResult<ExperimentResult> {
    config.validate()?;
    let trials = (0..config.trials as u64)
        .into_par_iter()
        .map(|i| run_trial(config, config.seed.wrapping_add(i)))
        .collect::<SimResult<Vec<_>>>()?;
    Ok(collect(config, trials))
}

/// Same as [`run_experiment`] on the calling thread only.
pub fn run_experiment_serial(config: &SimConfig) -> SimResult<ExperimentResult> {
    config.validate()?;
    let trials = (0..config.trials as u64)
        .map(|i| run_trial(config, config.seed.wrapping_add(i)))
        .collect::<SimResult<Vec<_>>>()?;
    Ok(collect(config, trials))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(trials: usize) -> SimConfig {
        SimConfig {
            n: 15,
            rounds: 30,
            interactions_per_round: 10,
            trials,
            seed: 40,
            ..SimConfig::default()
        }
    }

    #[test]
    fn single_trial_aggregate_is_the_trial() {
        let r = run_experiment(&config(1)).unwrap();
        assert_eq!(r.trials.len(), 1);
        for (row, m) in r.mean.iter().zip(&r.trials[0].metrics) {
            assert_eq!(row.values, m.values());
            assert_eq!(row.round, m.round);
        }
        assert!(r.std.iter().all(|s| s.values == [0.0; 7]));
    }

    #[test]
    fn mean_within_trial_range_and_parallel_matches_serial() {
        let c = config(4);
        let par = run_experiment(&c).unwrap();
        let ser = run_experiment_serial(&c).unwrap();
        assert_eq!(par.trials.len(), 4);
        for (i, row) in par.mean.iter().enumerate() {
            for col in 0..6 {
                let vals: Vec<f64> = par
                    .trials
                    .iter()
                    .map(|t| t.metrics[i].values()[col])
                    .collect();
                let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                assert!(row.values[col] >= lo - 1e-9 && row.values[col] <= hi + 1e-9);
                assert_eq!(row.values[col], ser.mean[i].values[col]);
            }
        }
        let seeds: Vec<u64> = par.trials.iter().map(|t| t.seed).collect();
        assert_eq!(seeds, vec![40, 41, 42, 43]);
    }

    #[test]
    fn std_matches_hand_computation() {
        let r = run_experiment(&config(3)).unwrap();
        let last = r.trials[0].metrics.len() - 1;
        let xs: Vec<f64> = r.trials.iter().map(|t| t.metrics[last].avg_trust).collect();
        let mu = xs.iter().sum::<f64>() / 3.0;
        let var = xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / 2.0;
        assert!((r.std[last].get("avg_trust") - var.sqrt()).abs() < 1e-12);
    }
}
