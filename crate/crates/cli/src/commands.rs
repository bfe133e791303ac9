use crate::io::{self, num, SolutionRecord};
use crate::{Failure, Usage};
use anyhow::Result;
use cmcface_core::curve::{canonical_paths, rational_rhs, validate_a};
use cmcface_core::ends::{classify_end, end_loop_check};
use cmcface_core::geometry::{build_mesh, schwarzian_check, small_formula_check, symmetry_curves};
use cmcface_core::linalg2c::Mat2;
use cmcface_core::monodromy::{
    assemble_monodromies, det_deviation, direct_monodromies, half_path_frames, structure_deviation, triple_distance,
};
use cmcface_core::period::{locate_sign_change, scan_c, sign_changes, solve, solve_near, SignChangeKind};
use cmcface_core::scalar::{lit, to_f64};
use cmcface_core::transport::{DormandPrince, TaylorSeries};
use cmcface_core::{CurvePoint, Dd, IntegratorConfig};
use num_complex::Complex64;
use rayon::prelude::*;
use std::path::PathBuf;

fn check_a(a: f64) -> Result<()> {
    validate_a(a).map_err(|e| Usage(e.to_string()).into())
}

fn check_c(c: f64) -> Result<()> {
    if c == 0.0 || !c.is_finite() {
        return Err(Usage(format!("c must be finite and nonzero, got {c}")).into());
    }
    Ok(())
}

pub fn scan(a: f64, c_min: f64, c_max: f64, steps: usize, out: Option<PathBuf>, cfg: &IntegratorConfig) -> Result<()> {
    check_a(a)?;
    if steps < 2 || !(c_min < c_max) {
        return Err(Usage(format!("need steps >= 2 and c_min < c_max, got {steps}, [{c_min}, {c_max}]")).into());
    }
    let records = scan_c(a, c_min, c_max, steps, cfg)?;
    if let Some(path) = out {
        io::write_atomic(&path, io::scan_csv(&records).as_bytes())?;
    }
    let brackets = sign_changes(&records);
    let located: Vec<_> =
        brackets.par_iter().map(|b| locate_sign_change(a, (b.lo.c, b.hi.c), 1e-10, cfg).ok()).collect();
    let crossings = located.iter().flatten().filter(|s| s.kind == SignChangeKind::Crossing).count();
    println!("{} sign changes of f1 - f2 ({crossings} crossings)", brackets.len());
    for (b, s) in brackets.iter().zip(&located) {
        let hint = if b.admissible_hint() { "admissible" } else { "not admissible" };
        match s {
            Some(s) if s.kind == SignChangeKind::Crossing => {
                println!("[{}, {}] {hint}: crossing at c = {}, f = {}", num(b.lo.c), num(b.hi.c), num(s.c), num(s.f()))
            }
            Some(s) => println!("[{}, {}] {hint}: pole at c = {}", num(b.lo.c), num(b.hi.c), num(s.c)),
            None => println!("[{}, {}] {hint}: refinement failed", num(b.lo.c), num(b.hi.c)),
        }
    }
    Ok(())
}

pub fn solve_cmd(a: f64, c0: f64, c1: f64, tol_c: f64, json: Option<PathBuf>, cfg: &IntegratorConfig) -> Result<()> {
    check_a(a)?;
    check_c(c0)?;
    check_c(c1)?;
    if !(tol_c > 0.0) || c0 == c1 || (c0 < 0.0) != (c1 < 0.0) {
        return Err(Usage(format!("need a bracket on one side of 0 and tol_c > 0, got [{c0}, {c1}], {tol_c}")).into());
    }
    let sol = solve(a, (c0.min(c1), c0.max(c1)), tol_c, cfg)?;
    let text = SolutionRecord::new(&sol, cfg).to_json();
    match json {
        Some(path) => {
            io::write_atomic(&path, text.as_bytes())?;
            println!(
                "c = {}, f = {}, {} ends, su11 residual {:.3e}",
                num(sol.c),
                num(sol.f),
                sol.ends.end_type,
                sol.su11_residual
            );
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn fmt_c(z: Complex64) -> String {
    format!("{} {} {}i", num(z.re), if z.im < 0.0 { "-" } else { "+" }, num(z.im.abs()))
}

pub fn classify(a: f64, c: f64, json: bool) -> Result<()> {
    check_a(a)?;
    check_c(c)?;
    classify_end(a, c)?;
    let e = end_loop_check(&TaylorSeries::for_type::<Dd>(), a, lit::<Dd>(c), 1)?;
    let (p, m) = (e.predicted_eigenvalues, e.measured_eigenvalues.unwrap_or_default());
    if json {
        let v = serde_json::json!({
            "a": a,
            "c": c,
            "m": {"re": e.m.re, "im": e.m.im},
            "end_type": e.end_type.to_string(),
            "predicted": [[p.0.re, p.0.im], [p.1.re, p.1.im]],
            "measured": [[m.0.re, m.0.im], [m.1.re, m.1.im]],
            "eigenvalue_mismatch": e.eigenvalue_mismatch,
        });
        println!("{}", serde_json::to_string_pretty(&v)?);
    } else {
        println!("m = {}", fmt_c(e.m));
        println!("type: {}", e.end_type);
        println!("predicted eigenvalues: {}, {}", fmt_c(p.0), fmt_c(p.1));
        println!("measured eigenvalues: {}, {}", fmt_c(m.0), fmt_c(m.1));
        println!("mismatch: {:.3e}", e.eigenvalue_mismatch.unwrap_or(f64::NAN));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum MeshFormat {
    Obj,
    Csv,
}

pub struct MeshArgs {
    pub a: f64,
    pub c: f64,
    pub nu: usize,
    pub nv: usize,
    pub out: PathBuf,
    pub format: MeshFormat,
    pub curves: Option<PathBuf>,
}

pub fn mesh(args: MeshArgs, cfg: &IntegratorConfig) -> Result<()> {
    check_a(args.a)?;
    check_c(args.c)?;
    if args.nu < 2 || args.nv < 4 || args.nv % 2 == 1 {
        return Err(Usage(format!("need nu >= 2 and even nv >= 4, got {} x {}", args.nu, args.nv)).into());
    }
    let sol = solve_near(args.a, args.c, cfg)?;
    let mesh = build_mesh(&sol, args.nu, args.nv)?;
    let body = match args.format {
        MeshFormat::Obj => io::mesh_obj(&mesh),
        MeshFormat::Csv => io::mesh_csv(&mesh),
    };
    io::write_atomic(&args.out, body.as_bytes())?;
    let mut note = String::new();
    if let Some(path) = args.curves {
        let curves = symmetry_curves(&mesh);
        io::write_atomic(&path, io::curves_csv(&curves).as_bytes())?;
        note = format!(", {} symmetry curves", curves.len());
    }
    println!(
        "c = {}: {} samples, {} faces, {} holes{note}",
        num(sol.c),
        mesh.samples.len(),
        mesh.triangles.len(),
        mesh.holes
    );
    Ok(())
}

struct Check {
    name: &'static str,
    value: Option<f64>,
    limit: f64,
    note: String,
}

impl Check {
    fn new(name: &'static str, limit: f64, value: std::result::Result<f64, String>) -> Self {
        match value {
            Ok(v) => Self { name, value: Some(v), limit, note: String::new() },
            Err(note) => Self { name, value: None, limit, note },
        }
    }

    fn passed(&self) -> bool {
        self.value.is_some_and(|v| v < self.limit)
    }
}

fn point(a: f64, re: f64, im: f64, sheet: f64) -> Result<CurvePoint> {
    let z = Complex64::new(re, im);
    Ok(CurvePoint::new(z, rational_rhs(z, a)?.sqrt() * sheet))
}

pub fn verify(a: f64, c: f64, deep: bool, cfg: &IntegratorConfig) -> Result<()> {
    check_a(a)?;
    check_c(c)?;
    let ts = TaylorSeries::for_type::<Dd>();
    let paths = canonical_paths(a)?;
    let cd: Dd = lit(c);
    let mut checks = Vec::new();
    let e = |err: cmcface_core::Error| err.to_string();
    match half_path_frames(&ts, &paths, cd) {
        Ok(h) => {
            let m = assemble_monodromies(&h);
            checks.push(Check::new("det preservation", 1e-9, Ok(to_f64(det_deviation(&m)))));
            checks.push(Check::new("structure lemmas", 1e-7, Ok(to_f64(structure_deviation(&m)))));
            let direct = direct_monodromies(&ts, &paths, cd).map(|d| to_f64(triple_distance(&m, &d)));
            checks.push(Check::new("symmetry vs direct holonomy", 1e-6, direct.map_err(e)));
            if deep {
                // fixed-step reference at ten times the adaptive step count
                let dp = DormandPrince::new(*cfg);
                let deep_dev = [(&paths.c1, h.f_c1), (&paths.c2, h.f_c2)].iter().try_fold(0.0f64, |acc, (p, f)| {
                    let r = dp.reference_frame(p, c, Mat2::identity(), 10)?;
                    let f = f.to_f64();
                    Ok::<f64, cmcface_core::Error>(acc.max(r.f.dist(&f) / f.max_abs().max(1.0)))
                });
                checks.push(Check::new("10x reference integration", 1e-6, deep_dev.map_err(e)));
            }
        }
        Err(err) => checks.push(Check::new("half-path integration", 1e-9, Err(err.to_string()))),
    }
    let ends = end_loop_check(&ts, a, cd, 1);
    let mismatch = match &ends {
        Ok(r) => Ok(r.eigenvalue_mismatch.unwrap_or(f64::NAN)),
        Err(cmcface_core::Error::EigenvalueMismatch { mismatch }) => Ok(*mismatch),
        Err(err) => Err(err.to_string()),
    };
    checks.push(Check::new("end eigenvalues", 1e-6, mismatch));
    match solve_near(a, c, cfg) {
        Ok(sol) => {
            checks.push(Check::new("gauge identity (SU(1,1))", 1e-6, Ok(sol.su11_residual)));
            let p = point(a, 0.0, 0.2, 1.0)?;
            checks.push(Check::new("Schwarzian", 1e-4, schwarzian_check(&sol, &p, 1e-3).map_err(e)));
            checks.push(Check::new("Small formula", 1e-5, small_formula_check(&sol, &p).map_err(e)));
        }
        Err(err) => {
            checks.push(Check::new("gauge identity (SU(1,1))", 1e-6, Err(err.to_string())));
            for (name, limit) in [("Schwarzian", 1e-4), ("Small formula", 1e-5)] {
                checks.push(Check::new(name, limit, Err("needs a verified solution".into())));
            }
        }
    }
    println!("{:<28} {:>12} {:>8}  result", "check", "value", "limit");
    for ch in &checks {
        let value = ch.value.map_or("-".to_string(), |v| format!("{v:.3e}"));
        let status = if ch.passed() { "pass" } else { "FAIL" };
        let note = if ch.note.is_empty() { String::new() } else { format!("  ({})", ch.note) };
        println!("{:<28} {:>12} {:>8.0e}  {status}{note}", ch.name, value, ch.limit);
    }
    let failed = checks.iter().filter(|c| !c.passed()).count();
    if failed > 0 {
        return Err(Failure(format!("{failed} of {} checks failed", checks.len())).into());
    }
    println!("all {} checks passed", checks.len());
    Ok(())
}

pub fn load_config(path: Option<&PathBuf>) -> Result<IntegratorConfig> {
    let Some(p) = path else { return Ok(IntegratorConfig::default()) };
    crate::config::load(p).map_err(|e| Usage(format!("loading config: {e:#}")).into())
}
