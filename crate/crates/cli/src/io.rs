//! Output files. Every writer renders into memory and then writes a
//! sibling temporary file that is renamed over the target, so a failed run
//! never leaves a partial file behind.

use anyhow::{Context, Result};
use cmcface_core::geometry::{HollowBallPoint, Mesh};
use cmcface_core::period::{PeriodSolution, ScanRecord};
use cmcface_core::IntegratorConfig;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

pub const SCHEMA_VERSION: &str = "1";

/// Shortest decimal that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        ryu::Buffer::new().format_finite(x).to_string()
    } else {
        format!("{x}")
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().context("output path has no file name")?.to_string_lossy();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let res = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if res.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    res.with_context(|| format!("writing {}", path.display()))
}

pub fn scan_csv(records: &[ScanRecord]) -> String {
    let mut out = String::from("c,f1,f2,admissible_hint\n");
    for r in records {
        let _ = writeln!(out, "{},{},{},{}", num(r.c), num(r.f1), num(r.f2), r.admissible_hint);
    }
    out
}

#[cfg(test)]
fn parse_scan_csv(text: &str) -> Result<Vec<ScanRecord>> {
    let mut lines = text.lines();
    anyhow::ensure!(lines.next() == Some("c,f1,f2,admissible_hint"), "bad scan header");
    lines
        .map(|l| {
            let v: Vec<&str> = l.split(',').collect();
            anyhow::ensure!(v.len() == 4, "bad scan row {l:?}");
            Ok(ScanRecord { c: v[0].parse()?, f1: v[1].parse()?, f2: v[2].parse()?, admissible_hint: v[3].parse()? })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexRecord {
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timestamps {
    /// Seconds since the Unix epoch; `SOURCE_DATE_EPOCH` when set.
    pub created: u64,
}

impl Timestamps {
    pub fn now() -> Self {
        let created = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.parse().ok()).unwrap_or_else(|| {
            std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
        });
        Self { created }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorRecord {
    pub rel_tol: f64,
    pub abs_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub schema_version: String,
    pub a: f64,
    pub c: f64,
    pub f: f64,
    pub epsilon: i8,
    pub alpha: f64,
    pub beta: f64,
    pub su11_residual: f64,
    pub end_type: String,
    pub m: ComplexRecord,
    pub eigenvalue_mismatch: Option<f64>,
    pub timestamps: Timestamps,
    pub integrator: IntegratorRecord,
}

impl SolutionRecord {
    pub fn new(sol: &PeriodSolution, cfg: &IntegratorConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.into(),
            a: sol.a,
            c: sol.c,
            f: sol.f,
            epsilon: sol.epsilon,
            alpha: sol.alpha,
            beta: sol.beta,
            su11_residual: sol.su11_residual,
            end_type: sol.ends.end_type.to_string(),
            m: ComplexRecord { re: sol.ends.m.re, im: sol.ends.m.im },
            eigenvalue_mismatch: sol.ends.eigenvalue_mismatch,
            timestamps: Timestamps::now(),
            integrator: IntegratorRecord { rel_tol: cfg.rel_tol, abs_tol: cfg.abs_tol },
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("record serializes");
        s.push('\n');
        s
    }
}

/// `v y1 y2 y3` for every sample, `f i j k` (1-based) for the faces clear
/// of the singular set.
pub fn mesh_obj(mesh: &Mesh) -> String {
    let mut out = String::new();
    for s in &mesh.samples {
        let _ = writeln!(out, "v {} {} {}", num(s.y.y1), num(s.y.y2), num(s.y.y3));
    }
    for t in &mesh.triangles {
        let _ = writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    out
}

pub fn mesh_csv(mesh: &Mesh) -> String {
    let mut out = String::from("z_re,z_im,w_re,w_im,x0,x1,x2,x3,y1,y2,y3,g_abs,singular\n");
    for s in &mesh.samples {
        let (p, x, y) = (&s.param, &s.x, &s.y);
        let row = [p.z.re, p.z.im, p.w.re, p.w.im, x.x0, x.x1, x.x2, x.x3, y.y1, y.y2, y.y3, s.g_abs];
        let cells: Vec<String> = row.iter().map(|v| num(*v)).collect();
        let _ = writeln!(out, "{},{}", cells.join(","), s.singular);
    }
    out
}

pub fn curves_csv(curves: &[Vec<HollowBallPoint>]) -> String {
    let mut out = String::from("curve_id,y1,y2,y3\n");
    for (id, c) in curves.iter().enumerate() {
        for p in c {
            let _ = writeln!(out, "{id},{},{},{}", num(p.y1), num(p.y2), num(p.y3));
        }
    }
    out
}
