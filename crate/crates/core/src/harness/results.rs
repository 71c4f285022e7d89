use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResultSource {
    MonteCarlo,
    DetEquivTheorem,
    DetEquivCorollary,
}

/// One tidy output row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scheme: String,
    pub antennas: usize,
    /// 1-based class index.
    pub class: usize,
    /// Global user index, empty for class-level aggregates.
    pub user: Option<usize>,
    pub detector: String,
    pub metric: String,
    pub value: f64,
    /// Monte Carlo standard error, empty for deterministic values.
    pub std_err: Option<f64>,
    pub source: ResultSource,
    /// Class-2 target rate of a capacity search, empty elsewhere.
    pub target_rate: Option<f64>,
}

/// Writes rows as CSV in the order given.
pub fn write_results<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::EmptyRows);
    }
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn export_results(rows: &[ResultRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::EmptyRows);
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_results(rows, std::fs::File::create(path)?)
}

pub fn read_results<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut rd = csv::Reader::from_reader(input);
    rd.deserialize().map(|r| r.map_err(Error::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(metric: &str, user: Option<usize>) -> ResultRow {
        ResultRow {
            scheme: "moma".into(),
            antennas: 16,
            class: 1,
            user,
            detector: "mmse".into(),
            metric: metric.into(),
            value: 1.0 / 3.0,
            std_err: user.map(|_| 0.01),
            source: ResultSource::MonteCarlo,
            target_rate: None,
        }
    }

    #[test]
    fn empty_export_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(export_results(&[], &dir.path().join("x.csv")), Err(Error::EmptyRows)));
    }

    #[test]
    fn round_trip_preserves_rows_and_order() {
        let rows = vec![row("rate", Some(3)), row("class_rate_min", None), row("sinr_mean", Some(0))];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/out.csv");
        export_results(&rows, &path).unwrap();
        let back = read_results(std::fs::File::open(&path).unwrap()).unwrap();
        assert_eq!(back, rows);
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "scheme,antennas,class,user,detector,metric,value,std_err,source,target_rate"
        );
    }

    #[test]
    fn identical_rows_give_identical_bytes() {
        let rows = vec![row("rate", Some(1)), row("rate", Some(2))];
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_results(&rows, &mut a).unwrap();
        write_results(&rows, &mut b).unwrap();
        assert_eq!(a, b);
    }
}
