//! Pseudotrajectory CSV + JSON sidecar, and verdict JSON.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pseudotraj::{Provenance, Pseudotrajectory};
use crate::scalar::{parse_scalar, Scalar};
use crate::shadowcheck::VerdictRecord;
use crate::spaces::{Point, Space};
use crate::systems::exact_string;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub system: String,
    pub d: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: Option<u64>,
    pub trial: Option<u64>,
    pub provenance: Provenance,
}

/// Sidecar path: `traj.csv` -> `traj.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

pub fn trajectory_csv<S: Scalar>(traj: &Pseudotrajectory<S>) -> String {
    let dim = traj.points.first().map_or(1, Point::dim);
    let mut out = String::from("n");
    for k in 0..dim {
        out.push_str(&format!(",coord{k}"));
    }
    out.push('\n');
    for (n, p) in traj.points.iter().enumerate() {
        out.push_str(&n.to_string());
        for c in &p.coords {
            out.push(',');
            out.push_str(&c.to_string());
        }
        out.push('\n');
    }
    out
}

pub fn parse_trajectory_csv<S: Scalar>(space: &Space<S>, text: &str) -> Result<Vec<Point<S>>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty trajectory file".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let expected: Vec<String> = std::iter::once("n".to_string())
        .chain((0..space.dim()).map(|k| format!("coord{k}")))
        .collect();
    if cols != expected {
        return Err(Error::Parse(format!("expected header {}, got {header}", expected.join(","))));
    }
    let mut points = Vec::new();
    for (row, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != cols.len() {
            return Err(Error::Parse(format!("row {row}: expected {} fields", cols.len())));
        }
        let n: usize = fields[0]
            .parse()
            .map_err(|_| Error::Parse(format!("row {row}: bad index {}", fields[0])))?;
        if n != row {
            return Err(Error::Parse(format!("row {row}: index {n} out of sequence")));
        }
        let coords = fields[1..].iter().map(|f| parse_scalar(f)).collect::<Result<Vec<S>>>()?;
        points.push(space.point(coords)?);
    }
    if points.is_empty() {
        return Err(Error::Parse("trajectory has no points".into()));
    }
    Ok(points)
}

pub fn trajectory_meta<S: Scalar>(system: &str, traj: &Pseudotrajectory<S>) -> TrajectoryMeta {
    let (seed, trial) = match traj.provenance {
        Provenance::Random { seed, trial } => (Some(seed), Some(trial)),
        _ => (None, None),
    };
    TrajectoryMeta {
        system: system.to_string(),
        d: exact_string(&traj.d),
        n: traj.horizon(),
        seed,
        trial,
        provenance: traj.provenance.clone(),
    }
}

/// Writes `path` (CSV) and its JSON sidecar.
pub fn write_trajectory<S: Scalar>(path: &Path, system: &str, traj: &Pseudotrajectory<S>) -> Result<()> {
    write_text(path, &trajectory_csv(traj))?;
    let meta = serde_json::to_string_pretty(&trajectory_meta(system, traj))?;
    write_text(&sidecar_path(path), &(meta + "\n"))
}

/// Reads a CSV and its sidecar back. The sidecar supplies `d` and
/// provenance; `space` must match the system it names.
pub fn read_trajectory<S: Scalar>(path: &Path, space: &Space<S>) -> Result<(TrajectoryMeta, Pseudotrajectory<S>)> {
    let points = parse_trajectory_csv(space, &read_text(path)?)?;
    let meta: TrajectoryMeta = serde_json::from_str(&read_text(&sidecar_path(path))?)?;
    if meta.n + 1 != points.len() {
        return Err(Error::Parse(format!(
            "sidecar says N = {} but the file has {} points",
            meta.n,
            points.len()
        )));
    }
    let traj = Pseudotrajectory {
        points,
        d: parse_scalar(&meta.d)?,
        provenance: meta.provenance.clone(),
    };
    Ok((meta, traj))
}

pub fn verdict_json(record: &VerdictRecord) -> Result<String> {
    Ok(serde_json::to_string_pretty(record)? + "\n")
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pseudotraj::generate_trial;
    use crate::systems::MapSystem;
    use num_rational::BigRational;

    type Q = BigRational;

    #[test]
    fn csv_round_trip_is_exact() {
        let sys = MapSystem::<Q>::rotation(Q::from_ratio(610, 987));
        let traj = generate_trial(&sys, &Point::scalar(Q::from_ratio(0, 1)), &Q::from_ratio(1, 50), 25, 42, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_trajectory(&path, sys.spec(), &traj).unwrap();
        let (meta, back) = read_trajectory(&path, sys.space()).unwrap();
        assert_eq!(back, traj);
        assert_eq!(meta.n, 25);
        assert_eq!(meta.seed, Some(42));
        assert!(read_text(&path).unwrap().starts_with("n,coord0\n0,0\n"));
    }

    #[test]
    fn annulus_header_and_errors() {
        let sys = MapSystem::<f64>::annulus_spiral(0.5, 0.25, 0.5).unwrap();
        let traj = generate_trial(&sys, &Point::polar(1.4, 0.0), &0.01, 3, 1, 0).unwrap();
        let text = trajectory_csv(&traj);
        assert!(text.starts_with("n,coord0,coord1\n"));
        assert_eq!(parse_trajectory_csv(sys.space(), &text).unwrap(), traj.points);
        assert!(parse_trajectory_csv(sys.space(), "n,coord0\n0,1\n").is_err());
        assert!(parse_trajectory_csv(sys.space(), "n,coord0,coord1\n1,1,0\n").is_err());
        assert!(parse_trajectory_csv(sys.space(), "").is_err());
        let missing = read_text(Path::new("/nonexistent/x.csv")).unwrap_err();
        assert!(missing.to_string().contains("/nonexistent/x.csv"));
    }
}
