//! Run-directory artifacts: CSV/JSON records and gnuplot-compatible
//! two-column data files. Every file is self-describing: it embeds the
//! schema version and the hash of the resolved manifest, and the manifest
//! itself is written beside the outputs.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;
use crate::manifest::{Manifest, MANIFEST_SCHEMA};
use crate::nls::LwpTable;
use crate::probe::{KhintchineTable, LpImprovementReport, TScalingReport, TailCurve, TailFit};

#[derive(Debug, Serialize)]
pub struct Record<T: Serialize> {
    pub schema: u32,
    pub manifest_hash: String,
    #[serde(flatten)]
    pub payload: T,
}

impl<T: Serialize> Record<T> {
    pub fn new(manifest: &Manifest, payload: T) -> Self {
        Record {
            schema: MANIFEST_SCHEMA,
            manifest_hash: format!("{:016x}", manifest.hash()),
            payload,
        }
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

pub fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<()> {
    ensure_dir(dir)?;
    std::fs::write(dir.join("manifest.cfg"), manifest.to_flat())?;
    Ok(())
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, manifest: &Manifest, payload: T) -> Result<PathBuf> {
    ensure_dir(dir)?;
    let path = dir.join(name);
    let record = Record::new(manifest, payload);
    std::fs::write(&path, serde_json::to_string_pretty(&record)?)?;
    Ok(path)
}

fn file_header(manifest: &Manifest, columns: &str) -> String {
    format!(
        "# schema {MANIFEST_SCHEMA}\n# manifest {:016x}\n# {columns}\n",
        manifest.hash()
    )
}

/// Tail curve as CSV (λ, p̂, CI bounds) plus a two-column .dat curve.
pub fn write_tail_curve(dir: &Path, manifest: &Manifest, curve: &TailCurve) -> Result<()> {
    ensure_dir(dir)?;
    let mut csv = file_header(manifest, "lambda,p_hat,ci_lo,ci_hi");
    csv.push_str("lambda,p_hat,ci_lo,ci_hi\n");
    let mut dat = file_header(manifest, "lambda p_hat");
    for i in 0..curve.lambda.len() {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            curve.lambda[i], curve.p_hat[i], curve.ci_lo[i], curve.ci_hi[i]
        ));
        dat.push_str(&format!("{} {}\n", curve.lambda[i], curve.p_hat[i]));
    }
    std::fs::write(dir.join("tail.csv"), csv)?;
    std::fs::write(dir.join("tail.dat"), dat)?;

    #[derive(Serialize)]
    struct FitRecord<'a> {
        n_trials: usize,
        fit: &'a Option<TailFit>,
    }
    write_json(
        dir,
        "fit.json",
        manifest,
        FitRecord { n_trials: curve.n_trials, fit: &curve.fit },
    )?;
    Ok(())
}

pub fn write_khintchine(dir: &Path, manifest: &Manifest, table: &KhintchineTable) -> Result<()> {
    let mut dat = file_header(manifest, "p ratio");
    for row in &table.rows {
        dat.push_str(&format!("{} {}\n", row.p, row.ratio));
    }
    ensure_dir(dir)?;
    std::fs::write(dir.join("khintchine.dat"), dat)?;
    write_json(dir, "khintchine.json", manifest, table)?;
    Ok(())
}

pub fn write_tscaling(dir: &Path, manifest: &Manifest, report: &TScalingReport) -> Result<()> {
    let mut dat = file_header(manifest, "t c_hat");
    for (t, fit) in &report.per_t {
        dat.push_str(&format!("{} {}\n", t, fit.c_small));
    }
    ensure_dir(dir)?;
    std::fs::write(dir.join("tscaling.dat"), dat)?;
    write_json(dir, "tscaling.json", manifest, report)?;
    Ok(())
}

pub fn write_lp_demo(dir: &Path, manifest: &Manifest, report: &LpImprovementReport) -> Result<()> {
    let mut dat = file_header(manifest, "m deterministic randomized_median");
    for row in &report.rows {
        dat.push_str(&format!(
            "{} {} {}\n",
            row.m, row.deterministic, row.randomized_median
        ));
    }
    ensure_dir(dir)?;
    std::fs::write(dir.join("lp_demo.dat"), dat)?;
    write_json(dir, "lp_demo.json", manifest, report)?;
    Ok(())
}

pub fn write_sweep(dir: &Path, manifest: &Manifest, table: &LwpTable) -> Result<()> {
    let mut dat = file_header(manifest, "t success_fraction");
    for row in &table.rows {
        dat.push_str(&format!("{} {}\n", row.t, row.success_fraction));
    }
    ensure_dir(dir)?;
    std::fs::write(dir.join("sweep.dat"), dat)?;
    write_json(dir, "sweep.json", manifest, table)?;
    Ok(())
}

/// Aggregated summary of a completed run directory.
#[derive(Debug, Default, Serialize)]
pub struct Summary {
    pub artifacts: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_fit: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tscaling: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub khintchine: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lp_demo: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub picard: Option<serde_json::Value>,
    pub partial: Vec<String>,
}

/// Scan a run directory and aggregate its JSON artifacts; missing pieces
/// are flagged as partial, not fatal. Returns the summary and a
/// human-readable table.
pub fn summarize(dir: &Path) -> Result<(Summary, String)> {
    let mut summary = Summary::default();
    let mut table = String::new();
    let mut found_any = false;
    let read = |name: &str| -> Option<serde_json::Value> {
        std::fs::read_to_string(dir.join(name))
            .ok()
            .and_then(|s| serde_json::from_str(&s).ok())
    };
    if !dir.join("manifest.cfg").exists() {
        summary.partial.push("manifest.cfg missing".into());
    }
    if let Some(v) = read("fit.json") {
        found_any = true;
        summary.artifacts.push("fit.json".into());
        if let Some(fit) = v.get("fit").and_then(|f| f.as_object()) {
            table.push_str(&format!(
                "tail fit: C = {:.4}, c = {:.4}, r2 = {:.4}\n",
                fit.get("c_big").and_then(|x| x.as_f64()).unwrap_or(f64::NAN),
                fit.get("c_small").and_then(|x| x.as_f64()).unwrap_or(f64::NAN),
                fit.get("r2").and_then(|x| x.as_f64()).unwrap_or(f64::NAN),
            ));
        } else {
            summary.partial.push("fit.json has no fit (band underpopulated)".into());
        }
        summary.tail_fit = Some(v);
    }
    if let Some(v) = read("tscaling.json") {
        found_any = true;
        summary.artifacts.push("tscaling.json".into());
        table.push_str(&format!(
            "T-scaling: slope = {:.4} (expected {:.4})\n",
            v.get("slope").and_then(|x| x.as_f64()).unwrap_or(f64::NAN),
            v.get("expected").and_then(|x| x.as_f64()).unwrap_or(f64::NAN),
        ));
        summary.tscaling = Some(v);
    }
    if let Some(v) = read("khintchine.json") {
        found_any = true;
        summary.artifacts.push("khintchine.json".into());
        table.push_str(&format!(
            "khintchine: alpha = {:.4}\n",
            v.get("alpha").and_then(|x| x.as_f64()).unwrap_or(f64::NAN)
        ));
        summary.khintchine = Some(v);
    }
    if let Some(v) = read("lp_demo.json") {
        found_any = true;
        summary.artifacts.push("lp_demo.json".into());
        table.push_str(&format!(
            "lp improvement: det exponent = {:.4}, randomized = {:.4}\n",
            v.get("det_power_exponent").and_then(|x| x.as_f64()).unwrap_or(f64::NAN),
            v.get("rand_power_exponent").and_then(|x| x.as_f64()).unwrap_or(f64::NAN),
        ));
        summary.lp_demo = Some(v);
    }
    if let Some(v) = read("sweep.json") {
        found_any = true;
        summary.artifacts.push("sweep.json".into());
        if let Some(rows) = v.get("rows").and_then(|r| r.as_array()) {
            table.push_str("lwp sweep:\n");
            for row in rows {
                table.push_str(&format!(
                    "  T = {:<8} success {:.3} ({}/{})\n",
                    row.get("t").and_then(|x| x.as_f64()).unwrap_or(f64::NAN),
                    row.get("success_fraction").and_then(|x| x.as_f64()).unwrap_or(f64::NAN),
                    row.get("converged").and_then(|x| x.as_u64()).unwrap_or(0),
                    row.get("seeds").and_then(|x| x.as_u64()).unwrap_or(0),
                ));
            }
        }
        summary.sweep = Some(v);
    }
    if let Some(v) = read("picard.json") {
        found_any = true;
        summary.artifacts.push("picard.json".into());
        table.push_str(&format!(
            "picard: converged = {}, iterations = {}, residual = {:.3e}\n",
            v.get("converged").and_then(|x| x.as_bool()).unwrap_or(false),
            v.get("iterations").and_then(|x| x.as_u64()).unwrap_or(0),
            v.get("residual").and_then(|x| x.as_f64()).unwrap_or(f64::NAN),
        ));
        summary.picard = Some(v);
    }
    if !found_any {
        return Err(crate::error::Error::validation(
            "report.dir",
            format!("no runs found in {}", dir.display()),
        ));
    }
    Ok((summary, table))
}
