//! Run-configuration ingestion and result emission for the `effham` binary.
//!
//! Configurations are strict TOML (unknown keys rejected). Commands write
//! machine-readable CSV/JSON with full-precision floats; files are written
//! atomically (temp file + rename) and runs are bit-reproducible.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{Operator, SpaceSpec};
use crate::perturb::{compute_cz_orders, PerturbativeDecomposition};
use crate::propagate::{exact_propagate_block, level_population};
use crate::raman::{LaserPair, RamanConfig};
use crate::trigpoly::TrigPolyDoc;

// ---------------------------------------------------------------------------
// Config schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigDoc {
    pub space: SpaceDoc,
    pub ion: IonDoc,
    pub schemes: Vec<SchemeDoc>,
    pub run: RunDoc,
    pub output: OutputDoc,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceDoc {
    pub modes: usize,
    pub fock_cutoff: usize,
    pub buffer: usize,
    pub n_phys: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IonDoc {
    pub omega1: f64,
    pub omega2: f64,
    pub omega3: f64,
    pub nu: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeDoc {
    pub g13_re: f64,
    pub g13_im: f64,
    pub g23_re: f64,
    pub g23_im: f64,
    pub eta13: Vec<f64>,
    pub eta23: Vec<f64>,
    pub detuning: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunDoc {
    pub t_final: f64,
    pub dt: f64,
    /// Number of output rows (evenly spaced over [0, t_final], both ends
    /// included).
    pub samples: usize,
    /// Optional reparametrization of the perturbative bookkeeping; the
    /// physical Hamiltonian λ·H̃₁ is unchanged.
    #[serde(default)]
    pub lambda_override: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputDoc {
    pub directory: String,
    pub formats: Vec<String>,
}

/// Everything a command needs, extracted from a validated config document.
#[derive(Debug, Clone)]
pub struct RunSetup {
    pub cfg: RamanConfig,
    pub n_phys: usize,
    pub t_final: f64,
    pub dt: f64,
    pub samples: usize,
    pub lambda_override: Option<f64>,
    pub out_dir: PathBuf,
}

pub fn load_config(path: &Path) -> Result<RunConfigDoc> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let doc: RunConfigDoc = toml::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    Ok(doc)
}

impl RunConfigDoc {
    pub fn to_setup(&self, out_override: Option<&Path>) -> Result<RunSetup> {
        let space = SpaceSpec::new(3, self.space.modes, self.space.fock_cutoff, self.space.buffer)
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.space.n_phys > self.space.fock_cutoff {
            return Err(Error::Config(format!(
                "space.n_phys = {} exceeds space.fock_cutoff = {}",
                self.space.n_phys, self.space.fock_cutoff
            )));
        }
        if !(self.run.t_final > 0.0) || !(self.run.dt > 0.0) {
            return Err(Error::Config("run.t_final and run.dt must be positive".into()));
        }
        if self.run.samples < 2 {
            return Err(Error::Config("run.samples must be at least 2".into()));
        }
        if let Some(l) = self.run.lambda_override {
            if !(l != 0.0 && l.is_finite()) {
                return Err(Error::Config("run.lambda_override must be finite and nonzero".into()));
            }
        }
        if self.output.formats.is_empty() {
            return Err(Error::Config("output.formats must not be empty".into()));
        }
        for f in &self.output.formats {
            if f != "csv" && f != "json" {
                return Err(Error::Config(format!(
                    "output.formats entry `{f}` is not one of csv, json"
                )));
            }
        }
        let schemes = self
            .schemes
            .iter()
            .map(|s| LaserPair {
                g13: C64::new(s.g13_re, s.g13_im),
                g23: C64::new(s.g23_re, s.g23_im),
                eta13: s.eta13.clone(),
                eta23: s.eta23.clone(),
                detuning: s.detuning,
            })
            .collect();
        let cfg = RamanConfig {
            level_freqs: [self.ion.omega1, self.ion.omega2, self.ion.omega3],
            trap_freq: self.ion.nu,
            schemes,
            space,
        };
        let out_dir = out_override
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from(&self.output.directory));
        Ok(RunSetup {
            cfg,
            n_phys: self.space.n_phys,
            t_final: self.run.t_final,
            dt: self.run.dt,
            samples: self.run.samples,
            lambda_override: self.run.lambda_override,
            out_dir,
        })
    }
}

// ---------------------------------------------------------------------------
// Output documents
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixDoc {
    fn from_operator(op: &Operator) -> Self {
        MatrixDoc {
            re: op.matrix.rows().into_iter().map(|r| r.iter().map(|z| z.re).collect()).collect(),
            im: op.matrix.rows().into_iter().map(|r| r.iter().map(|z| z.im).collect()).collect(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct COperatorsDoc {
    pub lambda: f64,
    pub space: SpaceSpec,
    pub c1: MatrixDoc,
    pub c2: MatrixDoc,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ZPolysDoc {
    pub z1: TrigPolyDoc,
    pub z2: TrigPolyDoc,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ShiftsDoc {
    pub omega1: f64,
    pub omega2: f64,
    pub omega3: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SchemeSummaryDoc {
    pub detuning: f64,
    pub g12_re: f64,
    pub g12_im: f64,
    pub eta12: Vec<f64>,
    pub omega12: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SweepSummaryDoc {
    pub lambdas: Vec<f64>,
    pub interior_errors: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SummaryDoc {
    pub lambda: f64,
    pub detunings: Vec<f64>,
    pub shifts: ShiftsDoc,
    pub schemes: Vec<SchemeSummaryDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSummaryDoc>,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::NumericError(format!("json serialization: {e}")))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Full-precision float for CSV cells: 17 significant digits, round-trips
/// exactly.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn linspace(t_final: f64, samples: usize) -> Vec<f64> {
    (0..samples)
        .map(|k| t_final * k as f64 / (samples - 1) as f64)
        .collect()
}

/// Apply an optional λ reparametrization: rescales H̃₁ so λ·H̃₁ is unchanged.
fn decompose_with_override(
    cfg: &RamanConfig,
    lambda_override: Option<f64>,
) -> Result<(f64, PerturbativeDecomposition)> {
    let mut orders = cfg.interaction_orders()?;
    if let Some(l) = lambda_override {
        let ratio = orders.lambda / l;
        orders.orders = orders
            .orders
            .iter()
            .map(|o| o.scaled(C64::new(ratio, 0.0)))
            .collect();
        orders.lambda = l;
    }
    for w in orders.warnings() {
        eprintln!("warning: {w}");
    }
    let lambda = orders.lambda;
    let d = compute_cz_orders(&orders, 2)?;
    Ok((lambda, d))
}

fn summary_for(cfg: &RamanConfig, lambda: f64, sweep: Option<SweepSummaryDoc>) -> Result<SummaryDoc> {
    let model = cfg.analytic_effective_model()?;
    Ok(SummaryDoc {
        lambda,
        detunings: cfg.schemes.iter().map(|s| s.detuning).collect(),
        shifts: ShiftsDoc {
            omega1: model.shifts[0],
            omega2: model.shifts[1],
            omega3: model.shifts[2],
        },
        schemes: model
            .couplings
            .iter()
            .zip(&cfg.schemes)
            .map(|(cc, s)| SchemeSummaryDoc {
                detuning: s.detuning,
                g12_re: cc.g12.re,
                g12_im: cc.g12.im,
                eta12: cc.eta12.clone(),
                omega12: cc.omega12,
            })
            .collect(),
        sweep,
    })
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

/// Compute the decomposition and write c_operators.json, z_polys.json and
/// summary.json.
pub fn cmd_decompose(config_path: &Path, out_override: Option<&Path>) -> Result<()> {
    let setup = load_config(config_path)?.to_setup(out_override)?;
    for w in setup.cfg.validate()? {
        eprintln!("warning: {w}");
    }
    let (lambda, d) = decompose_with_override(&setup.cfg, setup.lambda_override)?;

    let c_doc = COperatorsDoc {
        lambda,
        space: setup.cfg.space,
        c1: MatrixDoc::from_operator(&d.c[0]),
        c2: MatrixDoc::from_operator(&d.c[1]),
    };
    write_json(&setup.out_dir.join("c_operators.json"), &c_doc)?;

    let z_doc = ZPolysDoc { z1: d.z[0].to_document(), z2: d.z[1].to_document() };
    write_json(&setup.out_dir.join("z_polys.json"), &z_doc)?;

    let summary = summary_for(&setup.cfg, lambda, None)?;
    write_json(&setup.out_dir.join("summary.json"), &summary)?;
    Ok(())
}

/// Run the exact benchmark against the dressed and effective evolutors and
/// write compare.csv.
pub fn cmd_compare(config_path: &Path, out_override: Option<&Path>) -> Result<()> {
    let setup = load_config(config_path)?.to_setup(out_override)?;
    for w in setup.cfg.validate()? {
        eprintln!("warning: {w}");
    }
    let (_, d) = decompose_with_override(&setup.cfg, setup.lambda_override)?;
    let cfg = &setup.cfg;
    let space = cfg.space;
    let n = space.total_dim();
    let interior = space.interior_indices(setup.n_phys);
    let drive = cfg.drive_terms()?;

    // Block of interior basis columns; column 0 is |1, n=0⟩ (basis index 0).
    let mut block = Array2::zeros((n, interior.len()));
    for (pos, &j) in interior.iter().enumerate() {
        block[[j, pos]] = C64::new(1.0, 0.0);
    }

    let times = linspace(setup.t_final, setup.samples);
    let mut csv = String::from(
        "t,fid_exact_vs_dressed,fid_exact_vs_effective,P1,P2,P3,P1_eff,P2_eff\n",
    );
    let mut failure: Option<Error> = None;
    exact_propagate_block(
        |t, out: &mut Array2<C64>| drive.eval_into(t, out),
        space,
        cfg.max_frequency(),
        setup.t_final,
        setup.dt,
        &times,
        &block,
        |_, t, u_block| {
            if failure.is_some() {
                return;
            }
            let step = || -> Result<String> {
                let dressed = d.full_evolutor(t)?;
                let effective = d.effective_evolutor(t)?;
                let fid_d = block_fidelity(u_block, &dressed.matrix, &interior);
                let fid_e = block_fidelity(u_block, &effective.matrix, &interior);
                let psi = u_block.column(0).to_owned();
                let p1 = level_population(space, &psi, 1);
                let p2 = level_population(space, &psi, 2);
                let p3 = level_population(space, &psi, 3);
                let psi_eff = effective.matrix.column(0).to_owned();
                let p1_eff = level_population(space, &psi_eff, 1);
                let p2_eff = level_population(space, &psi_eff, 2);
                Ok(format!(
                    "{},{},{},{},{},{},{},{}\n",
                    fmt_f64(t),
                    fmt_f64(fid_d),
                    fmt_f64(fid_e),
                    fmt_f64(p1),
                    fmt_f64(p2),
                    fmt_f64(p3),
                    fmt_f64(p1_eff),
                    fmt_f64(p2_eff)
                ))
            };
            match step() {
                Ok(row) => csv.push_str(&row),
                Err(e) => failure = Some(e),
            }
        },
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    write_atomic(&setup.out_dir.join("compare.csv"), csv.as_bytes())?;
    Ok(())
}

/// |tr(P U† V P)|/tr(P) where U is stored as interior columns and V is a
/// full matrix.
fn block_fidelity(u_block: &Array2<C64>, v: &Array2<C64>, interior: &[usize]) -> f64 {
    let mut tr = C64::new(0.0, 0.0);
    for (pos, &j) in interior.iter().enumerate() {
        let mut dot = C64::new(0.0, 0.0);
        for i in 0..u_block.nrows() {
            dot += u_block[[i, pos]].conj() * v[[i, j]];
        }
        tr += dot;
    }
    tr.norm() / interior.len() as f64
}

/// λ sweep at fixed dimensionless time Δ·t = 20: detunings are rescaled at
/// fixed laser strengths so the dimensionless shape is preserved. Writes
/// sweep.csv and summary.json (with the fitted log-log slope when the list
/// has at least two points).
pub fn cmd_sweep(config_path: &Path, out_override: Option<&Path>, lambdas: &[f64]) -> Result<()> {
    if lambdas.is_empty() {
        return Err(Error::Config("sweep needs a non-empty --lambdas list".into()));
    }
    if lambdas.iter().any(|l| !(l.is_finite() && *l != 0.0)) {
        return Err(Error::Config("sweep lambdas must be finite and nonzero".into()));
    }
    let setup = load_config(config_path)?.to_setup(out_override)?;
    for w in setup.cfg.validate()? {
        eprintln!("warning: {w}");
    }
    let base_cfg = &setup.cfg;
    let lambda_base = base_cfg.lambda();

    let mut errors = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let scale = lambda_base / lambda;
        let mut cfg = base_cfg.clone();
        for s in &mut cfg.schemes {
            s.detuning *= scale;
        }
        errors.push(sweep_point_error(&cfg, setup.n_phys, setup.dt / scale.abs())?);
    }

    let mut csv = String::from("lambda,interior_error\n");
    for (l, e) in lambdas.iter().zip(&errors) {
        let _ = writeln!(csv, "{},{}", fmt_f64(*l), fmt_f64(*e));
    }
    write_atomic(&setup.out_dir.join("sweep.csv"), csv.as_bytes())?;

    let slope = if lambdas.len() >= 2 { Some(loglog_slope(lambdas, &errors)) } else { None };
    let sweep_doc = SweepSummaryDoc {
        lambdas: lambdas.to_vec(),
        interior_errors: errors,
        slope,
    };
    let summary = summary_for(base_cfg, lambda_base, Some(sweep_doc))?;
    write_json(&setup.out_dir.join("summary.json"), &summary)?;
    Ok(())
}

/// ‖P(U_exact − U_dressed)P‖_F at Δ·t = 20 for one sweep configuration.
pub fn sweep_point_error(cfg: &RamanConfig, n_phys: usize, dt: f64) -> Result<f64> {
    let orders = cfg.interaction_orders()?;
    let d = compute_cz_orders(&orders, 2)?;
    let t_final = 20.0 / cfg.reference_detuning().abs();
    let space = cfg.space;
    let n = space.total_dim();
    let interior = space.interior_indices(n_phys);
    let mut block = Array2::zeros((n, interior.len()));
    for (pos, &j) in interior.iter().enumerate() {
        block[[j, pos]] = C64::new(1.0, 0.0);
    }
    let drive = cfg.drive_terms()?;
    let mut final_block: Option<Array2<C64>> = None;
    exact_propagate_block(
        |t, out: &mut Array2<C64>| drive.eval_into(t, out),
        space,
        cfg.max_frequency(),
        t_final,
        dt,
        &[t_final],
        &block,
        |_, _, u| final_block = Some(u.clone()),
    )?;
    let u_exact = final_block.expect("one sample requested");
    let u_dressed = d.full_evolutor(t_final)?;
    let mut sum = 0.0;
    for (pos, &j) in interior.iter().enumerate() {
        for &i in &interior {
            sum += (u_exact[[i, pos]] - u_dressed.matrix[[i, j]]).norm_sqr();
        }
    }
    Ok(sum.sqrt())
}

/// Least-squares slope of ln(err) against ln(λ).
pub fn loglog_slope(lambdas: &[f64], errors: &[f64]) -> f64 {
    let n = lambdas.len() as f64;
    let xs: Vec<f64> = lambdas.iter().map(|l| l.abs().ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let den: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    const GOOD: &str = r#"
[space]
modes = 0
fock_cutoff = 1
buffer = 0
n_phys = 0

[ion]
omega1 = 0.0
omega2 = 0.5
omega3 = 1.5
nu = 1.0

[[schemes]]
g13_re = 1.0
g13_im = 0.0
g23_re = 1.0
g23_im = 0.0
eta13 = []
eta23 = []
detuning = 100.0

[run]
t_final = 0.5
dt = 4e-4
samples = 3

[output]
directory = "out"
formats = ["csv", "json"]
"#;

    fn write_tmp(name: &str, text: &str) -> PathBuf {
        let path = std::env::temp_dir().join(name);
        let mut f = fs::File::create(&path).unwrap();
        f.write_all(text.as_bytes()).unwrap();
        path
    }

    #[test]
    fn good_config_parses() {
        let p = write_tmp("effham_cli_good.toml", GOOD);
        let doc = load_config(&p).unwrap();
        let setup = doc.to_setup(None).unwrap();
        assert_eq!(setup.cfg.lambda(), 0.01);
        assert_eq!(setup.samples, 3);
    }

    #[test]
    fn unknown_key_is_named_in_the_error() {
        let bad = GOOD.replace("detuning = 100.0", "detunign = 100.0");
        let p = write_tmp("effham_cli_unknown.toml", &bad);
        match load_config(&p) {
            Err(Error::Config(msg)) => assert!(msg.contains("detunign"), "{msg}"),
            other => panic!("expected Config error, got {other:?}"),
        }
    }

    #[test]
    fn n_phys_above_cutoff_is_rejected() {
        let bad = GOOD.replace("n_phys = 0", "n_phys = 5");
        let p = write_tmp("effham_cli_nphys.toml", &bad);
        let doc = load_config(&p).unwrap();
        assert!(matches!(doc.to_setup(None), Err(Error::Config(_))));
    }

    #[test]
    fn bad_format_entry_is_rejected() {
        let bad = GOOD.replace("\"csv\", \"json\"", "\"xml\"");
        let p = write_tmp("effham_cli_fmt.toml", &bad);
        let doc = load_config(&p).unwrap();
        assert!(matches!(doc.to_setup(None), Err(Error::Config(_))));
    }

    #[test]
    fn slope_of_pure_cubic_is_three() {
        let lambdas = [0.02f64, 0.01, 0.005, 0.0025];
        let errors: Vec<f64> = lambdas.iter().map(|&l| 7.0 * l.powi(3)).collect();
        assert!((loglog_slope(&lambdas, &errors) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn full_precision_floats_roundtrip() {
        for &x in &[0.1, 1.0 / 3.0, 6.02e23, -2.5e-17] {
            let s = fmt_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, x, "{s}");
        }
    }

    #[test]
    fn linspace_includes_both_ends() {
        let ts = linspace(2.0, 5);
        assert_eq!(ts[0], 0.0);
        assert_eq!(ts[4], 2.0);
        assert_eq!(ts.len(), 5);
    }
}
