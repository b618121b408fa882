use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::args::OutputFormat;
use super::CliError;
use crate::experiment::AggregateResult;

/// A record that `emit_results` can write. Rows that carry a capped count
/// trigger a censoring warning.
pub trait ResultRow: Serialize {
    fn capped(&self) -> u64 {
        0
    }
}

impl ResultRow for AggregateResult {
    fn capped(&self) -> u64 {
        self.capped
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftRow {
    pub n: usize,
    pub r: u64,
    pub algorithm: String,
    pub operator: String,
    pub metric: String,
    pub potential: String,
    pub level: String,
    #[serde(with = "crate::numfmt")]
    pub mean_drop: f64,
    #[serde(with = "crate::numfmt")]
    pub ci_halfwidth: f64,
    pub samples: u64,
}

impl ResultRow for DriftRow {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenRow {
    pub r: u64,
    pub law: String,
    #[serde(with = "crate::numfmt")]
    pub mean: f64,
    #[serde(with = "crate::numfmt")]
    pub std_error: f64,
    /// Exact expectation; NaN when `r` is too large for the oracle.
    #[serde(with = "crate::numfmt")]
    pub exact: f64,
    pub runs: u64,
    pub capped: u64,
}

impl ResultRow for TokenRow {
    fn capped(&self) -> u64 {
        self.capped
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub model: String,
    pub term: String,
    #[serde(with = "crate::numfmt")]
    pub coefficient: f64,
    #[serde(with = "crate::numfmt")]
    pub r_squared: f64,
}

impl ResultRow for FitRow {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmfRow {
    pub j: u64,
    #[serde(with = "crate::numfmt")]
    pub probability: f64,
}

impl ResultRow for PmfRow {}

/// Renders `rows` as CSV (header plus one line per row) or as a pretty JSON
/// array, always ending in a newline.
pub fn render<T: ResultRow>(rows: &[T], format: OutputFormat) -> Result<Vec<u8>, CliError> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in rows {
                w.serialize(row)
                    .map_err(|e| CliError::Failed(format!("csv encoding: {e}")))?;
            }
            w.into_inner()
                .map_err(|e| CliError::Failed(format!("csv encoding: {e}")))
        }
        OutputFormat::Json => {
            let mut out = serde_json::to_vec_pretty(rows)
                .map_err(|e| CliError::Failed(format!("json encoding: {e}")))?;
            out.push(b'\n');
            Ok(out)
        }
    }
}

/// Writes `rows` to `dest` (standard output when `None`).
pub fn emit_results<T: ResultRow>(
    rows: &[T],
    format: OutputFormat,
    dest: Option<&Path>,
) -> Result<(), CliError> {
    if rows.is_empty() {
        return Err(CliError::Failed("no results to write".into()));
    }
    let censored = rows.iter().filter(|r| r.capped() > 0).count();
    if censored > 0 {
        eprintln!(
            "warning: {censored} result(s) right-censored by the iteration cap; means cover uncapped runs only"
        );
    }
    let bytes = render(rows, format)?;
    let io_err = |e: io::Error| {
        let place = dest.map_or("standard output".to_string(), |p| p.display().to_string());
        CliError::Io(format!("cannot write {place}: {e}"))
    };
    match dest {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
            w.write_all(&bytes).map_err(io_err)?;
            w.flush().map_err(io_err)
        }
        None => {
            let mut out = io::stdout().lock();
            out.write_all(&bytes).map_err(io_err)?;
            out.flush().map_err(io_err)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithm::AlgorithmKind;
    use crate::space::MetricKind;
    use crate::step::StepOperatorKind;

    fn aggregate() -> AggregateResult {
        AggregateResult {
            n: 20,
            r: 4,
            algorithm: AlgorithmKind::Rls,
            operator: StepOperatorKind::Uniform,
            metric: MetricKind::Interval,
            mean: 215.864379428571,
            std_error: 2.0 / 3.0,
            median: 207.0,
            replicates: 2000,
            capped: 0,
        }
    }

    #[test]
    fn single_aggregate_csv() {
        let out = String::from_utf8(render(&[aggregate()], OutputFormat::Csv).unwrap()).unwrap();
        assert_eq!(
            out,
            "n,r,algorithm,operator,metric,mean,std_error,median,replicates,capped\n\
             20,4,rls,uniform,interval,215.8643794,0.6666666667,207.0,2000,0\n"
        );
    }

    #[test]
    fn json_keys_in_order() {
        let out = String::from_utf8(render(&[aggregate()], OutputFormat::Json).unwrap()).unwrap();
        assert!(out.ends_with("]\n"));
        let keys: Vec<usize> = [
            "\"n\"",
            "\"r\"",
            "\"algorithm\"",
            "\"operator\"",
            "\"metric\"",
            "\"mean\"",
            "\"std_error\"",
            "\"median\"",
            "\"replicates\"",
            "\"capped\"",
        ]
        .iter()
        .map(|k| out.find(k).unwrap())
        .collect();
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn unwritable_destination() {
        let dir = tempfile::tempdir().unwrap();
        let bad = dir.path().join("no/such/dir/out.csv");
        assert!(matches!(
            emit_results(&[aggregate()], OutputFormat::Csv, Some(&bad)),
            Err(CliError::Io(_))
        ));
        assert!(emit_results::<PmfRow>(&[], OutputFormat::Csv, None).is_err());
    }
}
