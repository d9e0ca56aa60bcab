use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use crate::error::SimResult;
use crate::experiment::{AggregateRow, ExperimentResult, METRIC_COLUMNS};
use crate::trial::{RoundDetail, RoundMetrics};

pub const CSV_HEADER: &str =
    "round,avg_trust,avg_trust_pct,bytes_sync,bytes_total,attest_attempted,attest_succeeded,wallclock_s";

const DETAIL_HEADER: [&str; 10] = [
    "round",
    "bytes_hello",
    "bytes_attest",
    "bytes_extension",
    "bundle_overhead",
    "sync_bytes_per_interaction",
    "entries_sent",
    "entries_rejected",
    "interactions_completed",
    "interactions_terminated",
];

/// `printf("%g")` with 6 significant digits.
pub fn format_g(x: f64) -> String {
    const P: i32 = 6;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..P).contains(&exp) {
        let mantissa = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        trim_fraction(&format!("{:.*}", (P - 1 - exp) as usize, x)).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn trial_row(m: &RoundMetrics) -> [String; 8] {
    [
        m.round.to_string(),
        format_g(m.avg_trust),
        format_g(m.avg_trust_pct),
        m.bytes_sync.to_string(),
        m.bytes_total.to_string(),
        m.attest_attempted.to_string(),
        m.attest_succeeded.to_string(),
        format_g(m.wallclock_s),
    ]
}

fn aggregate_row(r: &AggregateRow) -> Vec<String> {
    std::iter::once(r.round.to_string())
        .chain(r.values.iter().map(|&v| format_g(v)))
        .collect()
}

fn detail_row(d: &RoundDetail) -> [String; 10] {
    [
        d.round.to_string(),
        d.bytes_hello.to_string(),
        d.bytes_attest.to_string(),
        d.bytes_extension.to_string(),
        d.bundle_overhead.to_string(),
        format_g(d.sync_bytes_per_interaction),
        d.entries_sent.to_string(),
        d.entries_rejected.to_string(),
        d.interactions_completed.to_string(),
        d.interactions_terminated.to_string(),
    ]
}

fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> SimResult<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn trial_file_name(index: usize) -> String {
    format!("metrics_t{index}.csv")
}

pub const MEAN_FILE_NAME: &str = "metrics_mean.csv";

/// Writes per-trial metrics, the `_mean` file and `config.txt` into `dir`;
/// standard deviations, per-round breakdowns and optional edge lists go to
/// `dir/detail/`. Returns the paths of the headline CSV files.
pub fn emit_csv(
    result: &ExperimentResult,
    dir: &Path,
    edge_lists: bool,
) -> SimResult<Vec<PathBuf>> {
    let detail = dir.join("detail");
    fs::create_dir_all(&detail)?;
    let header: Vec<&str> = CSV_HEADER.split(',').collect();
    let mut written = Vec::new();

    for (i, trial) in result.trials.iter().enumerate() {
        let path = dir.join(trial_file_name(i));
        write_csv(&path, &header, trial.metrics.iter().map(trial_row))?;
        written.push(path);
        write_csv(
            &detail.join(format!("detail_t{i}.csv")),
            &DETAIL_HEADER,
            trial.details.iter().map(detail_row),
        )?;
        if edge_lists {
            trial.graph.write_edge_list(BufWriter::new(File::create(
                detail.join(format!("graph_t{i}.edges")),
            )?))?;
        }
    }
    let mean_path = dir.join(MEAN_FILE_NAME);
    write_csv(&mean_path, &header, result.mean.iter().map(aggregate_row))?;
    written.push(mean_path);
    write_csv(
        &detail.join("metrics_std.csv"),
        &header,
        result.std.iter().map(aggregate_row),
    )?;

    let mut echo = result.config.echo();
    echo.push_str(&format!("trial_seeds={}\n", seeds(result)));
    echo.push_str(&format!("metric_columns={}\n", METRIC_COLUMNS.join(",")));
    fs::write(dir.join("config.txt"), echo)?;
    Ok(written)
}

fn seeds(result: &ExperimentResult) -> String {
    let s: Vec<String> = result.trials.iter().map(|t| t.seed.to_string()).collect();
    s.join(",")
}
