//! CSV and JSON writers. Floats are printed with 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use quadfold::dynamics::Trajectory;
use quadfold::experiments::{ScalingRow, ScanRow, StateDeviation};
use serde::Serialize;
use serde_json::{Map, Value};

use crate::CliError;

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Column name for a basis label: `P3` or, for two-ion labels, `P_2_1_3_2`.
pub fn column(label: &str) -> String {
    if label.contains(' ') {
        format!("P_{}", label.replace(' ', "_"))
    } else {
        format!("P{label}")
    }
}

/// Short name for a two-ion label: `2_1 3_2` -> `P23`.
fn short_name(label: &str) -> Option<String> {
    let levels: Vec<&str> = label
        .split(' ')
        .map(|part| part.split('_').next().unwrap_or(part))
        .collect();
    (levels.len() == 2).then(|| format!("P{}{}", levels[0], levels[1]))
}

pub fn trajectory_csv(labels: &[String], tr: &Trajectory) -> String {
    let mut out = String::from("t_us");
    for l in labels {
        out.push(',');
        out.push_str(&column(l));
    }
    out.push('\n');
    for (t, p) in tr.times.iter().zip(&tr.populations) {
        out.push_str(&num(*t));
        for x in p {
            out.push(',');
            out.push_str(&num(*x));
        }
        out.push('\n');
    }
    out
}

pub fn scan_csv(rows: &[ScanRow]) -> String {
    let mut out = String::from("nu_delta2_mhz,P1_exact,P1_eff,P1_rwa,P3_exact,P3_eff\n");
    for r in rows {
        let cells = [
            r.nu_delta2,
            r.p1_exact,
            r.p1_eff,
            r.p1_rwa,
            r.p3_exact,
            r.p3_eff,
        ]
        .map(num);
        writeln!(out, "{}", cells.join(",")).unwrap();
    }
    out
}

pub fn scaling_csv(rows: &[ScalingRow]) -> String {
    let mut out = String::from("nu_trap_mhz,deviation\n");
    for r in rows {
        writeln!(out, "{},{}", num(r.nu_trap), num(r.deviation)).unwrap();
    }
    out
}

/// Gated deviation per monitored state, keyed by column name and, for the
/// two-ion model, also by the short `Pab` name.
pub fn deviation_map(devs: &[StateDeviation]) -> Map<String, Value> {
    let mut map = Map::new();
    for d in devs {
        map.insert(column(&d.label), d.gated().into());
        if let Some(short) = d
            .label
            .contains(' ')
            .then(|| short_name(&d.label))
            .flatten()
        {
            map.insert(short, d.gated().into());
        }
    }
    map
}

pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("summary serializes");
    s.push('\n');
    s
}

/// Writes all files once the computation has finished.
pub fn write_all(dir: &Path, files: &[(&str, String)]) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    files
        .iter()
        .map(|(name, content)| {
            let path = dir.join(name);
            fs::write(&path, content).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            Ok(path)
        })
        .collect()
}
