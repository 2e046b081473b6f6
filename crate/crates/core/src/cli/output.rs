//! Tabular output: comma-separated, header row, time (or abscissa) first,
//! every value printed with 17 significant digits.

use std::io::{Read, Write};
use std::path::Path;

use crate::model::Trajectory;

use super::CliError;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Table { path: path.display().to_string(), message: e.to_string() }
}

/// Writes `rows` under `header` to any sink.
pub fn write_table_to<W: Write>(sink: W, header: &[String], rows: &[Vec<f64>]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| format!("{v:.16e}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_table(path: &Path, header: &[String], rows: &[Vec<f64>]) -> Result<(), CliError> {
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    write_table_to(std::io::BufWriter::new(file), header, rows).map_err(csv_err(path))
}

/// Writes a trajectory with a leading `t` column.
pub fn write_trajectory(path: &Path, labels: &[String], traj: &Trajectory) -> Result<(), CliError> {
    let mut header = vec!["t".to_string()];
    header.extend_from_slice(labels);
    let rows: Vec<Vec<f64>> = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(t, y)| std::iter::once(*t).chain(y.iter().copied()).collect())
        .collect();
    write_table(path, &header, &rows)
}

/// Parses a trajectory table from text. The first column must be named
/// `t`; every row must have the header's width.
pub fn parse_trajectory<R: Read>(source: R) -> Result<(Vec<String>, Trajectory), String> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(source);
    let header: Vec<String> = r.headers().map_err(|e| e.to_string())?.iter().map(str::to_string).collect();
    if header.first().map(String::as_str) != Some("t") {
        return Err("first column must be `t`".into());
    }
    let mut traj = Trajectory::default();
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let vals = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| format!("row {}: {e}", k + 1))?;
        traj.push(vals[0], &vals[1..]);
    }
    Ok((header[1..].to_vec(), traj))
}

pub fn read_trajectory(path: &Path) -> Result<(Vec<String>, Trajectory), CliError> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    parse_trajectory(std::io::BufReader::new(file))
        .map_err(|message| CliError::Table { path: path.display().to_string(), message })
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Table {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    std::fs::write(path, text + "\n").map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let mut traj = Trajectory::default();
        traj.push(0.0, &[1.0 / 3.0, -2.5e-300, 6.02214076e23]);
        traj.push(0.1, &[f64::MIN_POSITIVE, 1.0 - f64::EPSILON, -0.0]);
        let labels = vec!["a".to_string(), "b".into(), "c".into()];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_trajectory(&path, &labels, &traj).unwrap();
        let (got_labels, got) = read_trajectory(&path).unwrap();
        assert_eq!(got_labels, labels);
        assert_eq!(got.times, traj.times);
        for (a, b) in got.states.iter().zip(&traj.states) {
            for (x, y) in a.iter().zip(b) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_trajectory("x,a\n1,2\n".as_bytes()).is_err());
        assert!(parse_trajectory("t,a\n1,2,3\n".as_bytes()).is_err());
        assert!(parse_trajectory("t,a\n1,zz\n".as_bytes()).is_err());
        assert!(parse_trajectory("t,a\n".as_bytes()).unwrap().1.is_empty());
    }
}
