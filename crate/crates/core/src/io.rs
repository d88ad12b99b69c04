//! CSV interchange formats and atomic file output.
//!
//! Numbers are written with Rust's shortest round-trip formatting and parsed
//! back with `str::parse`, so export/import cycles are bit-exact.

use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::ExperimentReport;
use crate::simkit::{PathRecord, SamplingTimes};

/// Writes `contents` to `path` atomically: a temp file in the same directory
/// is persisted via rename.
pub fn atomic_write(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let tmp_path = dir.join(format!(
        ".tmp-{}-{}",
        std::process::id(),
        path.file_name().and_then(|n| n.to_str()).unwrap_or("out")
    ));
    std::fs::write(&tmp_path, contents)?;
    std::fs::rename(&tmp_path, path)?;
    Ok(())
}

/// Path export: one row per grid point, columns (time, x, xc, sigma).
pub fn path_csv(path: &PathRecord) -> String {
    let mut out = String::from("time,x,xc,sigma\n");
    for i in 0..path.grid.len() {
        out.push_str(&format!("{},{},{},{}\n", path.grid[i], path.x[i], path.xc[i], path.sigma[i]));
    }
    out
}

/// Jump-ledger export: columns (time, size, sigma_minus, sigma_plus).
pub fn jumps_csv(path: &PathRecord) -> String {
    let mut out = String::from("time,size,sigma_minus,sigma_plus\n");
    for j in &path.jumps {
        out.push_str(&format!("{},{},{},{}\n", j.time, j.size, j.sigma_minus, j.sigma_plus));
    }
    out
}

/// Observation-time export: columns (time, g).
pub fn times_csv(times: &SamplingTimes) -> String {
    let mut out = String::from("time,g\n");
    for (t, g) in times.times.iter().zip(times.g_process.iter()) {
        out.push_str(&format!("{t},{g}\n"));
    }
    out
}

/// Series export: columns (time, price).
pub fn series_csv(times: &[f64], values: &[f64]) -> String {
    let mut out = String::from("time,price\n");
    for (t, v) in times.iter().zip(values.iter()) {
        out.push_str(&format!("{t},{v}\n"));
    }
    out
}

/// Reads a two-column (time, price) CSV with a mandatory header row.
pub fn read_series_csv(reader: impl std::io::Read) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() < 2 {
        return Err(Error::Csv(format!("expected two columns, found {}", headers.len())));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let t: f64 = parse_field(record.get(0), "time")?;
        let v: f64 = parse_field(record.get(1), "price")?;
        times.push(t);
        values.push(v);
    }
    if times.is_empty() {
        return Err(Error::Csv("series file has no data rows".into()));
    }
    Ok((times, values))
}

fn parse_field(field: Option<&str>, name: &str) -> Result<f64> {
    field
        .ok_or_else(|| Error::Csv(format!("missing {name} column")))?
        .trim()
        .parse()
        .map_err(|e| Error::Csv(format!("bad {name} value: {e}")))
}

/// Reads a path export plus its jump ledger back into a [`PathRecord`]. The
/// oracles are recomputed from the grid and ledger by trapezoid re-walk.
pub fn read_path_csv(
    path_reader: impl std::io::Read,
    jumps_reader: impl std::io::Read,
    horizon: f64,
) -> Result<PathRecord> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(path_reader);
    let mut grid = Vec::new();
    let mut x = Vec::new();
    let mut xc = Vec::new();
    let mut sigma = Vec::new();
    for record in rdr.records() {
        let record = record?;
        if record.len() < 4 {
            return Err(Error::Csv("path export needs columns time,x,xc,sigma".into()));
        }
        grid.push(parse_field(record.get(0), "time")?);
        x.push(parse_field(record.get(1), "x")?);
        xc.push(parse_field(record.get(2), "xc")?);
        sigma.push(parse_field(record.get(3), "sigma")?);
    }
    if grid.len() < 2 {
        return Err(Error::Csv("path export has fewer than two grid points".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Csv("path grid must be strictly increasing".into()));
    }

    let mut jrdr = csv::ReaderBuilder::new().has_headers(true).from_reader(jumps_reader);
    let mut jumps = Vec::new();
    for record in jrdr.records() {
        let record = record?;
        if record.len() < 4 {
            return Err(Error::Csv("jump ledger needs columns time,size,sigma_minus,sigma_plus".into()));
        }
        jumps.push(crate::simkit::JumpEvent {
            time: parse_field(record.get(0), "time")?,
            size: parse_field(record.get(1), "size")?,
            sigma_minus: parse_field(record.get(2), "sigma_minus")?,
            sigma_plus: parse_field(record.get(3), "sigma_plus")?,
        });
    }

    let mut record = PathRecord {
        grid,
        x,
        xc,
        sigma,
        jumps,
        oracles: crate::simkit::PathOracles {
            integrated_variance: 0.0,
            qv: 0.0,
            iq: 0.0,
            abs_cubic_sigma: 0.0,
            squared_jump_sum: 0.0,
            cubic_jump_sum: 0.0,
            quartic_jump_sum: 0.0,
        },
        horizon,
    };
    record.oracles = record.recompute_oracles(None);
    Ok(record)
}

/// Builds sampling times from raw tick times (external ingestion): validates
/// monotonicity and computes the mesh statistics.
pub fn sampling_times_from_raw(times: Vec<f64>, delta_n: f64, horizon: f64) -> Result<SamplingTimes> {
    if times.len() < 2 {
        return Err(Error::Domain("need at least two observation times".into()));
    }
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::Domain("observation times must be finite and nonnegative".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("observation times must be strictly increasing".into()));
    }
    let mut mesh = 0.0f64;
    let mut n_count = 0usize;
    let mut prev = 0.0f64;
    for (i, &t) in times.iter().enumerate() {
        mesh = mesh.max(t.min(horizon) - prev.min(horizon));
        if t <= horizon && i > 0 {
            n_count = i;
        }
        prev = t;
    }
    let g_process = vec![1.0; times.len()];
    Ok(SamplingTimes { times, n_count, mesh, g_process, delta_n, horizon })
}

/// Long-form per-replication CSV of an experiment report.
pub fn report_long_csv(report: &ExperimentReport) -> String {
    let mut out = String::from(
        "delta_n,rep,status,rv,cubic_pv,abs_cubic_pv,rdskew_scaled,prv,pcv,noisy_skew,oracle_qv,oracle_cubic,oracle_estimand\n",
    );
    for block in &report.blocks {
        for r in &block.replications {
            let noisy = r.estimates.noisy_skew.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},ok,{},{},{},{},{},{},{},{},{},{}\n",
                block.delta_n,
                r.rep,
                r.estimates.rv,
                r.estimates.cubic_pv,
                r.estimates.abs_cubic_pv,
                r.estimates.rdskew_scaled,
                r.estimates.prv,
                r.estimates.pcv,
                noisy,
                r.oracle_qv,
                r.oracle_cubic,
                r.oracle_estimand,
            ));
        }
        for (rep, _) in &block.degenerate {
            out.push_str(&format!("{},{rep},degenerate,,,,,,,,,,\n", block.delta_n));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simkit::{simulate_path, JumpModel, ModelSpec};

    #[test]
    fn series_csv_round_trips_bit_exactly() {
        let times = vec![0.0, 0.1, 0.30000000000000004, 1.0 / 3.0];
        let values = vec![1.5, -2.25e-300, std::f64::consts::PI, 42.0];
        let text = series_csv(&times, &values);
        let (t2, v2) = read_series_csv(text.as_bytes()).unwrap();
        assert_eq!(times, t2);
        assert_eq!(values, v2);
    }

    #[test]
    fn path_csv_has_one_row_per_grid_point() {
        let model = ModelSpec::constant_vol(0.3, 1.0)
            .with_jumps(JumpModel::Deterministic { jumps: vec![(0.5, 1.0)] });
        let path = simulate_path(&model, 0.01, 3).unwrap();
        let text = path_csv(&path);
        assert_eq!(text.lines().count(), path.grid.len() + 1);
        let jumps = jumps_csv(&path);
        assert_eq!(jumps.lines().count(), 2);
    }

    #[test]
    fn raw_times_validation() {
        assert!(sampling_times_from_raw(vec![0.0, 0.1, 0.1], 0.1, 1.0).is_err());
        assert!(sampling_times_from_raw(vec![0.0], 0.1, 1.0).is_err());
        let st = sampling_times_from_raw(vec![0.0, 0.1, 0.7, 1.2], 0.1, 1.0).unwrap();
        assert_eq!(st.n_count, 2);
        assert!((st.mesh - 0.6).abs() < 1e-15);
    }

    #[test]
    fn missing_header_or_columns_rejected() {
        assert!(read_series_csv("time\n0.0\n".as_bytes()).is_err());
        assert!(read_series_csv("time,price\n".as_bytes()).is_err());
        assert!(read_series_csv("time,price\n0.0,abc\n".as_bytes()).is_err());
    }

    #[test]
    fn atomic_write_creates_file() {
        let dir = tempfile::tempdir().unwrap();
        let target = dir.path().join("out.csv");
        atomic_write(&target, b"a,b\n1,2\n").unwrap();
        assert_eq!(std::fs::read(&target).unwrap(), b"a,b\n1,2\n");
        // Overwrite goes through the same rename path.
        atomic_write(&target, b"x\n").unwrap();
        assert_eq!(std::fs::read(&target).unwrap(), b"x\n");
    }
}
