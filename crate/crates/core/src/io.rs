//! Run-directory layout, CSV series and the manifest.
//!
//! CSV numbers print through Rust's shortest round-trip formatting, so
//! identical runs produce byte-identical files and reloading is lossless.

use crate::dist::{Distribution, Moments};
use crate::error::{Error, Result};
use crate::solver::RunHistory;
use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

pub fn write_series_csv(path: &Path, header: &str, rows: &[(f64, f64)]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{header}")?;
    for (t, v) in rows {
        writeln!(w, "{t},{v}")?;
    }
    Ok(())
}

pub fn read_series_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let f = fs::File::open(path)?;
    let mut rows = Vec::new();
    for (i, line) in std::io::BufReader::new(f).lines().enumerate() {
        let line = line?;
        if i == 0 {
            continue;
        }
        let mut parts = line.split(',');
        let t: f64 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Serde(format!("bad csv row: {line}")))?;
        let v: f64 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Serde(format!("bad csv row: {line}")))?;
        rows.push((t, v));
    }
    Ok(rows)
}

/// Series files, snapshot binaries and an index for one run.
pub fn save_history(dir: &Path, hist: &RunHistory) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (label, series) in &hist.norm_series {
        let rows: Vec<(f64, f64)> = hist.times.iter().cloned().zip(series.iter().cloned()).collect();
        write_series_csv(&dir.join(format!("norm_{}.csv", sanitize(label))), "t,value", &rows)?;
    }
    {
        let mut w = BufWriter::new(fs::File::create(dir.join("moments.csv"))?);
        writeln!(w, "t,mass,px,py,pz,energy")?;
        for (t, m) in hist.times.iter().zip(hist.moment_series.iter()) {
            writeln!(
                w,
                "{t},{},{},{},{},{}",
                m.mass, m.momentum[0], m.momentum[1], m.momentum[2], m.energy
            )?;
        }
    }
    let entropy: Vec<(f64, f64)> = hist
        .times
        .iter()
        .cloned()
        .zip(hist.entropy_series.iter().cloned())
        .collect();
    write_series_csv(&dir.join("entropy.csv"), "t,entropy", &entropy)?;
    if !hist.picard_contraction.is_empty() {
        let rows: Vec<(f64, f64)> = hist
            .picard_contraction
            .iter()
            .enumerate()
            .map(|(i, c)| (i as f64, *c))
            .collect();
        write_series_csv(&dir.join("contraction.csv"), "sweep,factor", &rows)?;
    }
    let snapdir = dir.join("snapshots");
    fs::create_dir_all(&snapdir)?;
    let mut index = Vec::new();
    for (i, (t, snap)) in hist.snapshots.iter().enumerate() {
        let name = format!("snap_{i:04}.bin");
        let mut w = BufWriter::new(fs::File::create(snapdir.join(&name))?);
        let mut tagged = snap.clone();
        tagged.time_tag = *t;
        tagged.write_binary(&mut w)?;
        index.push(serde_json::json!({ "t": t, "file": name }));
    }
    let norm_files: BTreeMap<String, String> = hist
        .norm_series
        .keys()
        .map(|label| (format!("norm_{}.csv", sanitize(label)), label.clone()))
        .collect();
    let meta = serde_json::json!({
        "times": hist.times,
        "eps_tag": hist.eps_tag,
        "snapshots": index,
        "norm_series": norm_files,
        "l_x": hist.snapshots.first().and_then(|(_, s)| s.spatial.as_ref().map(|a| a.l_x)),
    });
    fs::write(dir.join("history.json"), serde_json::to_string_pretty(&meta).map_err(|e| Error::Serde(e.to_string()))?)?;
    Ok(())
}

pub fn load_history(dir: &Path) -> Result<RunHistory> {
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("history.json"))?)
        .map_err(|e| Error::Serde(e.to_string()))?;
    let times: Vec<f64> = serde_json::from_value(meta["times"].clone()).map_err(|e| Error::Serde(e.to_string()))?;
    let eps_tag: Option<f64> = serde_json::from_value(meta["eps_tag"].clone()).unwrap_or(None);
    let l_x: Option<f64> = serde_json::from_value(meta["l_x"].clone()).unwrap_or(None);

    let mut norm_series = BTreeMap::new();
    if let Some(map) = meta["norm_series"].as_object() {
        for (file, label) in map {
            let rows = read_series_csv(&dir.join(file))?;
            norm_series.insert(
                label.as_str().unwrap_or(file).to_string(),
                rows.into_iter().map(|(_, v)| v).collect(),
            );
        }
    }
    let mut moment_series = Vec::new();
    {
        let f = fs::File::open(dir.join("moments.csv"))?;
        for (i, line) in std::io::BufReader::new(f).lines().enumerate() {
            let line = line?;
            if i == 0 {
                continue;
            }
            let vals: Vec<f64> = line.split(',').filter_map(|s| s.parse().ok()).collect();
            if vals.len() != 6 {
                return Err(Error::Serde(format!("bad moments row: {line}")));
            }
            moment_series.push(Moments {
                mass: vals[1],
                momentum: [vals[2], vals[3], vals[4]],
                energy: vals[5],
            });
        }
    }
    let entropy_series = read_series_csv(&dir.join("entropy.csv"))?
        .into_iter()
        .map(|(_, v)| v)
        .collect();
    let picard_contraction = match read_series_csv(&dir.join("contraction.csv")) {
        Ok(rows) => rows.into_iter().map(|(_, v)| v).collect(),
        Err(_) => Vec::new(),
    };
    let mut snapshots = Vec::new();
    if let Some(items) = meta["snapshots"].as_array() {
        for item in items {
            let t = item["t"].as_f64().unwrap_or(0.0);
            let file = item["file"].as_str().unwrap_or_default();
            let mut r = std::io::BufReader::new(fs::File::open(dir.join("snapshots").join(file))?);
            let snap = Distribution::read_binary(&mut r, l_x)?;
            snapshots.push((t, snap));
        }
    }
    let hist = RunHistory {
        times,
        snapshots,
        norm_series,
        moment_series,
        entropy_series,
        picard_contraction,
        eps_tag,
    };
    hist.validate()?;
    Ok(hist)
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect()
}

/// Two-column plot-data export with named headers.
pub fn write_plot_data(path: &Path, x_name: &str, y_name: &str, rows: &[(f64, f64)]) -> Result<()> {
    write_series_csv(path, &format!("{x_name},{y_name}"), rows)
}

pub fn ensure_dir(dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    Ok(dir.to_path_buf())
}
