//! Text formats for speeds, distances, graphs, normalization statistics and
//! metric reports.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use tgcn_core::dtw::DistanceMatrix;
use tgcn_core::graph::{Adjacency, GraphKind};
use tgcn_core::metrics::MetricReport;
use tgcn_core::series::{NormStats, SpeedMatrix};
use tgcn_core::DenseArray;

use crate::error::{CliError, CliResult};

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn data_err(path: &Path, line: u64, msg: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}:{line}: {msg}", path.display()))
}

/// Reads a comma-separated numeric grid, returning its rows. `header` skips
/// the first line.
pub fn read_grid(path: &Path, header: bool) -> CliResult<Vec<Vec<f64>>> {
    let text = read_text(path)?;
    parse_grid(&text, header).map_err(|(line, msg)| data_err(path, line, msg))
}

fn parse_grid(text: &str, header: bool) -> Result<Vec<Vec<f64>>, (u64, String)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            match e.kind() {
                csv::ErrorKind::UnequalLengths {
                    expected_len, len, ..
                } => (line, format!("ragged row: {len} fields, expected {expected_len}")),
                _ => (line, e.to_string()),
            }
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let row = record
            .iter()
            .map(|cell| match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err((line, format!("not a finite number: `{cell}`"))),
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err((0, "no data rows".into()));
    }
    Ok(rows)
}

pub fn load_speed_csv(path: &Path, steps_per_day: usize, header: bool) -> CliResult<SpeedMatrix> {
    let rows = read_grid(path, header)?;
    let s = SpeedMatrix::from_rows(&rows, steps_per_day)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    log::info!("loaded {}: T={} n={}", path.display(), s.n_steps(), s.n_roads());
    Ok(s)
}

fn grid_text<'a>(rows: impl Iterator<Item = &'a [f64]>) -> String {
    let mut out = String::new();
    for row in rows {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn write_speed_csv(path: &Path, s: &SpeedMatrix) -> CliResult<()> {
    write_text(path, &grid_text((0..s.n_steps()).map(|t| s.row(t))))
}

/// A full square matrix, e.g. road distances for the spatial graph.
pub fn read_square(path: &Path) -> CliResult<DenseArray> {
    let rows = read_grid(path, false)?;
    let n = rows.len();
    if let Some(i) = rows.iter().position(|r| r.len() != n) {
        return Err(data_err(path, i as u64 + 1, format!("matrix is not {n}×{n}")));
    }
    Ok(DenseArray::from_vec(&[n, n], rows.concat())?)
}

pub fn read_distance_matrix(path: &Path) -> CliResult<DistanceMatrix> {
    let a = read_square(path)?;
    DistanceMatrix::from_vec(a.dim(0), a.into_vec())
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn write_distance_matrix(path: &Path, d: &DistanceMatrix) -> CliResult<()> {
    write_text(path, &grid_text((0..d.n()).map(|i| d.row(i))))
}

pub fn edge_list_text(a: &Adjacency) -> String {
    let mut out = format!("# n={} kind={}\n", a.n(), a.kind());
    for (i, j, w) in a.edges() {
        writeln!(out, "{i},{j},{w}").unwrap();
    }
    out
}

pub fn write_edge_list(path: &Path, a: &Adjacency) -> CliResult<()> {
    write_text(path, &edge_list_text(a))
}

/// Parses an edge list; returns the graph and the raw file bytes' text for
/// fingerprinting.
pub fn read_edge_list(path: &Path) -> CliResult<(Adjacency, String)> {
    let text = read_text(path)?;
    let adj = parse_edge_list(&text).map_err(|(line, msg)| data_err(path, line, msg))?;
    Ok((adj, text))
}

fn parse_edge_list(text: &str) -> Result<Adjacency, (u64, String)> {
    let mut lines = text.lines();
    let head = lines.next().ok_or((1, "empty edge list".to_string()))?;
    let mut n = None;
    let mut kind = None;
    for field in head.trim_start_matches('#').split_whitespace() {
        match field.split_once('=') {
            Some(("n", v)) => n = v.parse::<usize>().ok(),
            Some(("kind", v)) => kind = v.parse::<GraphKind>().ok(),
            _ => return Err((1, format!("unexpected header field `{field}`"))),
        }
    }
    let (Some(n), Some(kind)) = (n, kind) else {
        return Err((1, "header must read `# n=<n> kind=<temporal|spatial>`".into()));
    };
    let mut edges = Vec::new();
    for (k, line) in lines.enumerate() {
        let line_no = k as u64 + 2;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = || (line_no, format!("expected `i,j,weight`, found `{line}`"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let i = parts[0].parse::<usize>().map_err(|_| bad())?;
        let j = parts[1].parse::<usize>().map_err(|_| bad())?;
        let w = parts[2].parse::<f64>().map_err(|_| bad())?;
        if i >= j {
            return Err((line_no, format!("edge {i},{j} must have i<j")));
        }
        edges.push((i, j, w));
    }
    Adjacency::from_edges(n, kind, &edges).map_err(|e| (0, e.to_string()))
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// `mean=<v>\nstd=<v>`; per-road statistics list one value per road.
pub fn norm_stats_text(stats: &NormStats) -> String {
    format!("mean={}\nstd={}\n", join(&stats.mean), join(&stats.std))
}

pub fn parse_norm_stats(text: &str) -> Result<NormStats, String> {
    let mut mean = None;
    let mut std = None;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("expected key=value, found `{line}`"))?;
        let vals = v
            .split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|_| format!("bad number `{x}`")))
            .collect::<Result<Vec<_>, _>>()?;
        match k.trim() {
            "mean" => mean = Some(vals),
            "std" => std = Some(vals),
            other => return Err(format!("unknown key `{other}`")),
        }
    }
    match (mean, std) {
        (Some(mean), Some(std)) if mean.len() == std.len() => {
            if std.iter().any(|&s| !(s > 0.0)) {
                return Err("std must be positive".into());
            }
            Ok(NormStats { mean, std })
        }
        _ => Err("need `mean` and `std` with the same number of values".into()),
    }
}

pub fn write_norm_stats(path: &Path, stats: &NormStats) -> CliResult<()> {
    write_text(path, &norm_stats_text(stats))
}

pub fn read_norm_stats(path: &Path) -> CliResult<NormStats> {
    parse_norm_stats(&read_text(path)?).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub const METRIC_CSV_HEADER: &str = "mode,horizon_minutes,mae,mape,rmse,n_samples,masked";

/// Metric CSV: a header and one line per report.
pub fn metrics_csv(mode: &str, reports: &[MetricReport]) -> String {
    let mut out = format!("{METRIC_CSV_HEADER}\n");
    for r in reports {
        writeln!(out, "{mode},{}", r.csv_row()).unwrap();
    }
    out
}

/// Aligned table for the terminal.
pub fn metrics_table(title: &str, reports: &[MetricReport]) -> String {
    let mut out = format!("{title}\n{:>8}  {:>9}  {:>9}  {:>9}  {:>8}\n", "horizon", "MAE", "MAPE(%)", "RMSE", "samples");
    for r in reports {
        let mape = r.mape.map_or_else(|| "n/a".to_string(), |m| format!("{m:.3}"));
        writeln!(
            out,
            "{:>5} min  {:>9.4}  {:>9}  {:>9.4}  {:>8}",
            r.horizon_minutes, r.mae, mape, r.rmse, r.n_samples
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_grid() {
        let rows = parse_grid("1,2\n3,4\n5,6\n", false).unwrap();
        assert_eq!(rows, vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]);
        let with_header = parse_grid("a,b\n1,2\n", true).unwrap();
        assert_eq!(with_header, vec![vec![1.0, 2.0]]);
    }

    #[test]
    fn ragged_row_names_its_line() {
        let (line, msg) = parse_grid("1,2\n3,4,5\n", false).unwrap_err();
        assert_eq!(line, 2);
        assert!(msg.contains("ragged"), "{msg}");
    }

    #[test]
    fn non_numeric_and_empty() {
        let (line, msg) = parse_grid("1,2\n3,x\n", false).unwrap_err();
        assert_eq!(line, 2);
        assert!(msg.contains("`x`"));
        assert!(parse_grid("", false).is_err());
        assert!(parse_grid("1,NaN\n", false).is_err());
    }

    #[test]
    fn edge_list_round_trip() {
        let a = Adjacency::from_edges(4, GraphKind::Spatial, &[(0, 1, 0.5), (2, 3, 0.25)]).unwrap();
        let text = edge_list_text(&a);
        assert_eq!(text, "# n=4 kind=spatial\n0,1,0.5\n2,3,0.25\n");
        assert_eq!(parse_edge_list(&text).unwrap(), a);
    }

    #[test]
    fn edge_list_errors() {
        assert_eq!(parse_edge_list("# n=3 kind=temporal\n1,0,1\n").unwrap_err().0, 2);
        assert_eq!(parse_edge_list("# n=3\n").unwrap_err().0, 1);
        assert_eq!(parse_edge_list("# n=3 kind=temporal\n0,1\n").unwrap_err().0, 2);
        assert!(parse_edge_list("# n=3 kind=temporal\n0,5,1\n").is_err());
    }

    #[test]
    fn norm_stats_round_trip() {
        let g = NormStats::global(1.5, 0.25);
        assert_eq!(norm_stats_text(&g), "mean=1.5\nstd=0.25\n");
        assert_eq!(parse_norm_stats(&norm_stats_text(&g)).unwrap(), g);
        let per = NormStats {
            mean: vec![1.0, 2.0],
            std: vec![0.1, 0.3],
        };
        assert_eq!(parse_norm_stats(&norm_stats_text(&per)).unwrap(), per);
        assert!(parse_norm_stats("mean=1\nstd=0\n").is_err());
        assert!(parse_norm_stats("mean=1\n").is_err());
    }

    #[test]
    fn metric_outputs() {
        let r = MetricReport {
            mae: 1.5,
            mape: Some(100.0),
            rmse: 2.5f64.sqrt(),
            horizon_minutes: 15,
            n_samples: 1,
            masked: 0,
        };
        let csv = metrics_csv("direct", &[r]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[1].starts_with("direct,15,1.5,100,"));
        assert!(metrics_table("test", &[r]).contains("15 min"));
    }
}
