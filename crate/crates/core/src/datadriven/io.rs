use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{NoiseSpec, Trajectory, TrajectoryData};
use crate::{Error, Result};

/// Lists trajectory CSV files (relative to the manifest's directory) and the
/// noise bounds they were recorded under.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub trajectories: Vec<PathBuf>,
    pub noise: NoiseSpec,
}

/// Writes `t, u_1..u_m, y_1..y_n`; the final row (t = T) leaves the input
/// fields empty.
pub fn write_trajectory_csv(path: &Path, tr: &Trajectory) -> Result<()> {
    let (m, n, t) = (tr.input_dim(), tr.output_dim(), tr.len());
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["t".to_string()];
    header.extend((1..=m).map(|i| format!("u_{i}")));
    header.extend((1..=n).map(|i| format!("y_{i}")));
    w.write_record(&header)?;
    for k in 0..=t {
        let mut rec = vec![k.to_string()];
        for i in 0..m {
            rec.push(if k < t {
                tr.inputs[(i, k)].to_string()
            } else {
                String::new()
            });
        }
        for i in 0..n {
            rec.push(tr.outputs[(i, k)].to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_trajectory_csv(path: &Path) -> Result<Trajectory> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    let m = header.iter().filter(|h| h.starts_with("u_")).count();
    let n = header.iter().filter(|h| h.starts_with("y_")).count();
    if header.len() != 1 + m + n || header.get(0) != Some("t") {
        return Err(Error::Config(format!(
            "{}: unexpected header {:?}",
            path.display(),
            header
        )));
    }
    let bad =
        |row: usize, what: &str| Error::Config(format!("{}: row {row}: {what}", path.display()));
    let mut inputs: Vec<f64> = Vec::new();
    let mut outputs: Vec<f64> = Vec::new();
    let mut rows = 0usize;
    let mut ended = false;
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        if ended {
            return Err(bad(row, "rows after the final sample"));
        }
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| bad(row, "unparsable number"))
        };
        let u_fields: Vec<&str> = (1..=m).map(|i| rec.get(i).unwrap_or("")).collect();
        if u_fields.iter().all(|s| s.trim().is_empty()) {
            ended = true;
        } else {
            for s in u_fields {
                inputs.push(parse(s)?);
            }
        }
        for i in 0..n {
            outputs.push(parse(rec.get(1 + m + i).unwrap_or(""))?);
        }
        rows += 1;
    }
    if !ended || rows == 0 {
        return Err(bad(rows, "missing final output-only row"));
    }
    let t = rows - 1;
    Trajectory::new(
        DMatrix::from_column_slice(m, t, &inputs),
        DMatrix::from_column_slice(n, t + 1, &outputs),
    )
}

/// Writes one CSV per trajectory plus `manifest.json` into `dir`; returns the
/// manifest path.
pub fn save_manifest(dir: &Path, data: &TrajectoryData, noise: &NoiseSpec) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for (i, tr) in data.trajectories.iter().enumerate() {
        let name = PathBuf::from(format!("trajectory_{i:03}.csv"));
        write_trajectory_csv(&dir.join(&name), tr)?;
        files.push(name);
    }
    let manifest = Manifest {
        trajectories: files,
        noise: noise.clone(),
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest)?;
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn load_manifest(path: &Path) -> Result<(TrajectoryData, NoiseSpec)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let trajectories = manifest
        .trajectories
        .iter()
        .map(|f| read_trajectory_csv(&base.join(f)))
        .collect::<Result<Vec<_>>>()?;
    Ok((TrajectoryData::new(trajectories)?, manifest.noise))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let tr = Trajectory::new(
            DMatrix::from_row_slice(1, 2, &[0.1, 1.0 / 3.0]),
            DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, -0.5, 1e-17, 7.25]),
        )
        .unwrap();
        let p = dir.path().join("t.csv");
        write_trajectory_csv(&p, &tr).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("t,u_1,y_1,y_2\n0,0.1,1,-0.5\n"), "{text}");
        assert_eq!(read_trajectory_csv(&p).unwrap(), tr);
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let tr = Trajectory::new(
            DMatrix::from_element(1, 1, 2.0),
            DMatrix::from_element(1, 2, 1.0),
        )
        .unwrap();
        let data = TrajectoryData::new(vec![tr.clone(), tr]).unwrap();
        let noise = NoiseSpec::zero(1);
        let path = save_manifest(dir.path(), &data, &noise).unwrap();
        let (d2, n2) = load_manifest(&path).unwrap();
        assert_eq!(d2, data);
        assert_eq!(n2, noise);
    }
}
