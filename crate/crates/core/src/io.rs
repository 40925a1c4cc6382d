//! Persistence of trajectories, reports and run manifests.
//!
//! Layout of a run directory:
//!
//! | file | content |
//! |------|---------|
//! | `config.toml` | normalized configuration of the run |
//! | `densities.csv` | `t, x, rho1, rho2`, one row per snapshot and cell |
//! | `energies.csv` | `t, F_tilde, diffusion, self1, self2, cross1, cross2, entropy, m2_total, w2_step_sq` |
//! | `steps.csv` | solver record of each step |
//! | `diagnostics.json` | model audit and diagnostics report |
//! | `MANIFEST.json` | completeness flag, error, file sizes and SHA-256 digests |
//!
//! Floats are written with 17 significant digits, which round-trips exactly.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{parse_config, ConfigError, RunConfig};
use crate::grid::{entropy, second_moment, Density, SpeciesPair};
use crate::jko::Trajectory;
use crate::model::relative_energy;
use crate::transport::product_w2_sq;

pub const CONFIG_FILE: &str = "config.toml";
pub const DENSITIES_FILE: &str = "densities.csv";
pub const ENERGIES_FILE: &str = "energies.csv";
pub const STEPS_FILE: &str = "steps.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.json";
pub const MANIFEST_FILE: &str = "MANIFEST.json";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    Config { path: PathBuf, source: ConfigError },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] crate::Error),
}

pub type IoResult<T> = std::result::Result<T, IoError>;

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> IoError + '_ {
    move |source| IoError::Csv { path: path.to_path_buf(), source }
}

fn write_csv(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> IoResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(header).map_err(csv_err(path))?;
    for row in rows {
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_densities(path: &Path, traj: &Trajectory) -> IoResult<()> {
    let xs = traj.grid.centers();
    let rows = traj.snapshots.iter().enumerate().flat_map(|(n, s)| {
        let t = fmt_f64(traj.time(n));
        let xs = &xs;
        (0..xs.len()).map(move |j| {
            vec![t.clone(), fmt_f64(xs[j]), fmt_f64(s.rho1.values()[j]), fmt_f64(s.rho2.values()[j])]
        })
    });
    write_csv(path, &["t", "x", "rho1", "rho2"], rows)
}

pub const ENERGY_COLUMNS: [&str; 10] =
    ["t", "F_tilde", "diffusion", "self1", "self2", "cross1", "cross2", "entropy", "m2_total", "w2_step_sq"];

/// Energy terms per snapshot; cross terms and the step distance are taken
/// against the previous snapshot (against itself for the first).
pub fn energy_rows(traj: &Trajectory) -> IoResult<Vec<[f64; 10]>> {
    let mut rows = Vec::with_capacity(traj.snapshots.len());
    for (n, s) in traj.snapshots.iter().enumerate() {
        let prev = &traj.snapshots[n.saturating_sub(1)];
        let e = relative_energy(s, prev, &traj.model)?;
        rows.push([
            traj.time(n),
            e.f_tilde(),
            e.diffusion,
            e.self1,
            e.self2,
            e.cross1,
            e.cross2,
            entropy(s),
            second_moment(&s.rho1) + second_moment(&s.rho2),
            if n == 0 { 0.0 } else { product_w2_sq(prev, s) },
        ]);
    }
    Ok(rows)
}

pub fn write_energies(path: &Path, traj: &Trajectory) -> IoResult<()> {
    let rows = energy_rows(traj)?;
    write_csv(path, &ENERGY_COLUMNS, rows.into_iter().map(|r| r.iter().map(|&v| fmt_f64(v)).collect()))
}

pub fn write_steps(path: &Path, traj: &Trajectory) -> IoResult<()> {
    let header = [
        "step",
        "w2_sq",
        "w2_sq_sampled",
        "energy_prev",
        "energy_next",
        "inner_iters",
        "sweeps",
        "stationarity",
        "converged",
    ];
    let rows = traj.records.iter().map(|r| {
        vec![
            r.step.to_string(),
            fmt_f64(r.w2_sq),
            fmt_f64(r.w2_sq_sampled),
            fmt_f64(r.energy_prev.total()),
            fmt_f64(r.energy_next.total()),
            r.inner_iters.to_string(),
            r.sweeps.to_string(),
            fmt_f64(r.stationarity),
            r.converged.to_string(),
        ]
    });
    write_csv(path, &header, rows)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> IoResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|source| IoError::Json { path: path.to_path_buf(), source })?;
    fs::write(path, text + "\n").map_err(io_err(path))
}

pub fn write_config(path: &Path, config: &RunConfig) -> IoResult<()> {
    fs::write(path, config.to_toml()).map_err(io_err(path))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// False when the run stopped early; the files then hold the completed part.
    pub complete: bool,
    pub error: Option<String>,
    pub steps_completed: usize,
    pub steps_planned: usize,
    pub config: String,
    pub files: Vec<FileEntry>,
}

impl Manifest {
    pub fn new(command: &str, steps_planned: usize) -> Self {
        Self {
            tool: "jkoflow".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            complete: true,
            error: None,
            steps_completed: 0,
            steps_planned,
            config: CONFIG_FILE.into(),
            files: Vec::new(),
        }
    }

    /// Records size and digest of `dir/name`.
    pub fn add_file(&mut self, dir: &Path, name: &str) -> IoResult<()> {
        let path = dir.join(name);
        let data = fs::read(&path).map_err(io_err(&path))?;
        let digest = Sha256::digest(&data);
        self.files.push(FileEntry { name: name.into(), bytes: data.len() as u64, sha256: format!("{digest:x}") });
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> IoResult<()> {
        write_json(&dir.join(MANIFEST_FILE), self)
    }
}

pub fn read_config(path: &Path) -> IoResult<RunConfig> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_config(&text).map_err(|source| IoError::Config { path: path.to_path_buf(), source })
}

/// Rebuilds the snapshots of a run directory. Step records are not restored.
pub fn read_trajectory(dir: &Path) -> IoResult<(RunConfig, Trajectory)> {
    let config = read_config(&dir.join(CONFIG_FILE))?;
    let grid = config.build_grid().map_err(|source| IoError::Config { path: dir.join(CONFIG_FILE), source })?;
    let model = config.build_model().map_err(|source| IoError::Config { path: dir.join(CONFIG_FILE), source })?;
    let path = dir.join(DENSITIES_FILE);
    let bad = |message: String| IoError::Format { path: path.clone(), message };
    let mut reader = csv::Reader::from_path(&path).map_err(csv_err(&path))?;
    let n = grid.n_cells;
    let (mut times, mut r1, mut r2) = (Vec::new(), Vec::new(), Vec::new());
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.map_err(csv_err(&path))?;
        if rec.len() != 4 {
            return Err(bad(format!("row {} has {} fields", k + 2, rec.len())));
        }
        let f = |i: usize| rec[i].trim().parse::<f64>().map_err(|e| bad(format!("row {}: {e}", k + 2)));
        if k % n == 0 {
            times.push(f(0)?);
        }
        r1.push(f(2)?);
        r2.push(f(3)?);
    }
    if r1.is_empty() || r1.len() % n != 0 {
        return Err(bad(format!("{} rows is not a multiple of {n} cells", r1.len())));
    }
    let mut snapshots = Vec::with_capacity(times.len());
    for s in 0..times.len() {
        let d1 = Density::new(grid, r1[s * n..(s + 1) * n].to_vec())?;
        let d2 = Density::new(grid, r2[s * n..(s + 1) * n].to_vec())?;
        snapshots.push(SpeciesPair::new(d1, d2)?);
    }
    let mut jko = config.jko_config();
    if times.len() >= 2 && times[1] > 0.0 {
        jko.tau = times[1] - times[0];
    }
    let traj = Trajectory { grid, model, config: jko, snapshots, records: Vec::new() };
    Ok((config, traj))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use crate::jko::run_scheme;

    const CONFIG: &str = r#"
[grid]
x_min = -2.0
x_max = 2.0
n_cells = 32

[time]
tau = 0.01
horizon = 0.03

[model]
preset = "coupled_gaussian"

[initial]
kind = "bumps"
species1 = [{ center = -0.3, width = 0.6 }]
species2 = [{ center = 0.4, width = 0.5 }]
"#;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, 2.5e-300, -7.0e22, std::f64::consts::PI] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn trajectory_round_trips_through_disk() {
        let config = parse_config(CONFIG).unwrap();
        let model = config.build_model().unwrap();
        let init = config.build_initial(&model).unwrap();
        let traj = run_scheme(&init, config.time.horizon, &model, &config.jko_config()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_config(&dir.path().join(CONFIG_FILE), &config).unwrap();
        write_densities(&dir.path().join(DENSITIES_FILE), &traj).unwrap();
        write_energies(&dir.path().join(ENERGIES_FILE), &traj).unwrap();
        let (c2, t2) = read_trajectory(dir.path()).unwrap();
        assert_eq!(c2, config);
        assert_eq!(t2.snapshots, traj.snapshots);
        assert_eq!(t2.tau(), traj.tau());
        let energies = fs::read_to_string(dir.path().join(ENERGIES_FILE)).unwrap();
        assert!(energies.starts_with("t,F_tilde,diffusion,self1,self2,cross1,cross2,entropy,m2_total,w2_step_sq\n"));
        assert_eq!(energies.lines().count(), traj.snapshots.len() + 1);
    }

    #[test]
    fn manifest_records_digests() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.txt"), "abc").unwrap();
        let mut m = Manifest::new("run", 3);
        m.add_file(dir.path(), "a.txt").unwrap();
        assert_eq!(m.files[0].bytes, 3);
        assert_eq!(m.files[0].sha256, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        m.write(dir.path()).unwrap();
        let back: Manifest = serde_json::from_str(&fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
