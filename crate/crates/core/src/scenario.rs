//! Figure-reproduction scenarios: named presets that build a model, run the
//! relevant engines, and write a deterministic file bundle (manifest, CSVs,
//! metrics JSON, SVGs).
//!
//! Every parameter that affects output lives in a flat key-value map, is
//! echoed into `manifest.json`, and can be overridden (unknown keys are
//! rejected). Full-scale presets carry the reference parameters; the desk
//! scale shrinks lattices to 30x30 / N = 400 while rescaling B to keep the
//! working bandwidths B*L/2 and B*N/2 unchanged.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::analytics::{self, energy_bounds, fit_lattice_clm_2d, sample_lattice_clm_2d};
use crate::dynamics::{
    closed_form_gaussian, gaussian_moments_predicted, integrate_rk4, track_moments, ContinuumFdOp,
    Geometry, LinearOp, StencilOrder, WavepacketSpec,
};
use crate::error::{CoreError, Result};
use crate::grid::{Grid1d, Grid2d};
use crate::lattice::{HamiltonianMatrix, MassProfile, ModelSpec};
use crate::linalg::{self, C64};
use crate::output::{
    self, fmt_f64, scatter_svg, sweep_heatmap_svg, ScatterSpec, SvgPlot,
};
use crate::response::{frequency_sweep, omega_grid, sweep_metrics};
use crate::rng;
use crate::spectral::{self, eig, interior_filter, linear_trend, StatField};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioName {
    Fig2b,
    Fig2c,
    Fig2d,
    Fig2ef,
    Fig3bc,
    Fig3ef,
    FigS1a,
    FigS1b,
    FigS2c,
    FigS2f,
    ContinuumChecks,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 11] = [
        ScenarioName::Fig2b,
        ScenarioName::Fig2c,
        ScenarioName::Fig2d,
        ScenarioName::Fig2ef,
        ScenarioName::Fig3bc,
        ScenarioName::Fig3ef,
        ScenarioName::FigS1a,
        ScenarioName::FigS1b,
        ScenarioName::FigS2c,
        ScenarioName::FigS2f,
        ScenarioName::ContinuumChecks,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioName::Fig2b => "fig2b",
            ScenarioName::Fig2c => "fig2c",
            ScenarioName::Fig2d => "fig2d",
            ScenarioName::Fig2ef => "fig2ef",
            ScenarioName::Fig3bc => "fig3bc",
            ScenarioName::Fig3ef => "fig3ef",
            ScenarioName::FigS1a => "figS1a",
            ScenarioName::FigS1b => "figS1b",
            ScenarioName::FigS2c => "figS2c",
            ScenarioName::FigS2f => "figS2f",
            ScenarioName::ContinuumChecks => "continuum-checks",
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioName::ALL
            .iter()
            .find(|n| n.as_str().eq_ignore_ascii_case(s))
            .copied()
            .ok_or_else(|| CoreError::InvalidValue {
                key: "scenario".into(),
                message: format!(
                    "unknown scenario `{s}`; expected one of {}",
                    ScenarioName::ALL.map(|n| n.as_str()).join(", ")
                ),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scale {
    #[default]
    Full,
    Desk,
}

impl Scale {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scale::Full => "full",
            Scale::Desk => "desk",
        }
    }
}

impl FromStr for Scale {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(Scale::Full),
            "desk" => Ok(Scale::Desk),
            other => Err(CoreError::InvalidValue {
                key: "scale".into(),
                message: format!("unknown scale `{other}`; expected full or desk"),
            }),
        }
    }
}

/// A scenario invocation: preset name, scale, seed, output directory, and
/// overrides for any preset parameter.
#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    pub name: ScenarioName,
    pub scale: Scale,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub overrides: BTreeMap<String, Value>,
}

/// Flat resolved parameter map; values are JSON scalars.
#[derive(Debug, Clone)]
pub struct Params(BTreeMap<String, Value>);

impl Params {
    fn from_defaults(defaults: &[(&str, Value)]) -> Self {
        Params(
            defaults
                .iter()
                .map(|(k, v)| (k.to_string(), v.clone()))
                .collect(),
        )
    }

    fn apply_overrides(&mut self, overrides: &BTreeMap<String, Value>) -> Result<()> {
        for (k, v) in overrides {
            let slot = self
                .0
                .get_mut(k)
                .ok_or_else(|| CoreError::UnknownKey(k.clone()))?;
            let compatible = matches!(
                (&slot, &v),
                (Value::Number(_), Value::Number(_)) | (Value::String(_), Value::String(_))
            );
            if !compatible {
                return Err(CoreError::InvalidValue {
                    key: k.clone(),
                    message: format!("expected a value like {slot}, got {v}"),
                });
            }
            *slot = v.clone();
        }
        Ok(())
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        self.0
            .get(key)
            .and_then(Value::as_f64)
            .ok_or_else(|| CoreError::InvalidValue {
                key: key.into(),
                message: "expected a number".into(),
            })
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        let x = self.f64(key)?;
        if x < 0.0 || x.fract() != 0.0 {
            return Err(CoreError::InvalidValue {
                key: key.into(),
                message: format!("expected a non-negative integer, got {x}"),
            });
        }
        Ok(x as usize)
    }

    pub fn str(&self, key: &str) -> Result<&str> {
        self.0
            .get(key)
            .and_then(Value::as_str)
            .ok_or_else(|| CoreError::InvalidValue {
                key: key.into(),
                message: "expected a string".into(),
            })
    }

    pub fn as_json(&self) -> Value {
        Value::Object(self.0.clone().into_iter().collect())
    }
}

/// Preset defaults for a scenario at a scale.
pub fn preset(name: ScenarioName, scale: Scale, seed: u64) -> Params {
    use ScenarioName::*;
    let full = scale == Scale::Full;
    let mut defaults: Vec<(&str, Value)> = Vec::new();
    match name {
        Fig2b | Fig2c | Fig2d | Fig2ef => {
            let l = if full { 60 } else { 30 };
            // B rescaled so B*L/2 matches the reference bands
            let b_ref = if name == Fig2b { 0.03 } else { 0.3 };
            let b = if full { b_ref } else { b_ref * 2.0 };
            defaults.extend([
                ("lx", json!(l)),
                ("ly", json!(l)),
                ("tx", json!(1.0)),
                ("ty", json!(1.0)),
                ("b", json!(b)),
            ]);
            if name == Fig2ef {
                defaults.push(("n_states", json!(2)));
            }
        }
        Fig3bc | FigS2c => {
            let (n, b) = if full { (2000, 0.01) } else { (400, 0.05) };
            let band = 0.8 * b * n as f64 / 2.0;
            defaults.extend([
                ("n", json!(n)),
                ("t", json!(1.0)),
                ("b", json!(b)),
                ("gamma", json!(1.9)),
                ("kappa", json!(0.2)),
                ("omega_min", json!(-band)),
                ("omega_max", json!(band)),
                ("omega_steps", json!(21)),
                (
                    "mass_kind",
                    json!(if name == FigS2c { "random-uniform" } else { "linear" }),
                ),
            ]);
        }
        Fig3ef | FigS2f => {
            let (n, b) = if full { (2000, 0.01) } else { (400, 0.05) };
            defaults.extend([
                ("n", json!(n)),
                ("t", json!(1.0)),
                ("b", json!(b)),
                ("gamma", json!(9.9)),
                ("kappa", json!(0.2)),
                ("omega_min", json!(-1.6)),
                ("omega_max", json!(1.6)),
                ("omega_steps", json!(21)),
                (
                    "mass_kind",
                    json!(if name == FigS2f { "random-uniform" } else { "linear" }),
                ),
                ("window_fraction", json!(0.05)),
            ]);
        }
        FigS1a | FigS1b => {
            let (alpha, beta, x0, q_y, grid_x0) = if name == FigS1a {
                (-0.005, -0.0037, -50.0, -0.025, -120.0)
            } else {
                (-0.0017, -0.0013, 50.0, -0.26, -60.0)
            };
            defaults.extend([
                ("alpha", json!(alpha)),
                ("beta", json!(beta)),
                ("x0", json!(x0)),
                ("y0", json!(0.0)),
                ("q_x", json!(0.0)),
                ("q_y", json!(q_y)),
                ("b", json!(-0.005)),
                ("grid_x0", json!(grid_x0)),
                ("grid_y0", json!(-100.0)),
                ("grid_nx", json!(200)),
                ("grid_ny", json!(200)),
                ("grid_h", json!(1.0)),
                ("dt", json!(0.04)),
                ("t_final", json!(if full { 40.0 } else { 16.0 })),
                ("record_every", json!(50)),
                ("stencil_order", json!(6)),
            ]);
        }
        ContinuumChecks => {
            defaults.extend([("b", json!(0.5)), ("h", json!(0.1))]);
        }
    }
    defaults.push(("seed", json!(seed)));
    Params::from_defaults(&defaults)
}

/// Runs a scenario, writing its bundle under `spec.out_dir`. Returns the
/// manifest value that was written.
pub fn run_scenario(spec: &ScenarioSpec) -> Result<Value> {
    let mut params = preset(spec.name, spec.scale, spec.seed);
    params.apply_overrides(&spec.overrides)?;
    let seed = params.usize("seed")? as u64;
    fs::create_dir_all(&spec.out_dir)?;
    let outputs = match spec.name {
        ScenarioName::Fig2b | ScenarioName::Fig2c => run_spectrum_2d(spec, &params)?,
        ScenarioName::Fig2d => run_trends_2d(spec, &params)?,
        ScenarioName::Fig2ef => run_states_2d(spec, &params, seed)?,
        ScenarioName::Fig3bc | ScenarioName::FigS2c => run_sweep_1d(spec, &params, seed, false)?,
        ScenarioName::Fig3ef | ScenarioName::FigS2f => run_sweep_1d(spec, &params, seed, true)?,
        ScenarioName::FigS1a | ScenarioName::FigS1b => run_dynamics(spec, &params)?,
        ScenarioName::ContinuumChecks => run_continuum_checks(spec, &params)?,
    };
    let manifest = json!({
        "schema_version": SCHEMA_VERSION,
        "scenario": spec.name.as_str(),
        "scale": spec.scale.as_str(),
        "seed": seed,
        "params": params.as_json(),
        "outputs": outputs,
    });
    write_file(
        &spec.out_dir.join("manifest.json"),
        &format!("{}\n", serde_json::to_string_pretty(&manifest)?),
    )?;
    Ok(manifest)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents)?;
    Ok(())
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    write_file(path, &format!("{}\n", serde_json::to_string_pretty(value)?))
}

fn model_2d(params: &Params) -> Result<ModelSpec> {
    Ok(ModelSpec::Clm2d {
        lx: params.usize("lx")?,
        ly: params.usize("ly")?,
        tx: params.f64("tx")?,
        ty: params.f64("ty")?,
        b: params.f64("b")?,
    })
}

fn spectrum_with_stats(
    h: &HamiltonianMatrix,
) -> Result<(spectral::EigenDecomposition, Vec<spectral::StateStats>)> {
    let decomp = eig(h.matrix(), spectral::DEFAULT_TOL)?;
    let table = spectral::spectrum_table(h, &decomp)?;
    Ok((decomp, table))
}

/// Max ansatz participation ratio over the zone: pi/sqrt(tau_x tau_y) with
/// both decay constants at their minimum B/(4t).
fn pr_max_ansatz(tx: f64, ty: f64, b: f64) -> f64 {
    std::f64::consts::PI / ((b.abs() / (4.0 * tx.abs())) * (b.abs() / (4.0 * ty.abs()))).sqrt()
}

fn run_spectrum_2d(spec: &ScenarioSpec, params: &Params) -> Result<Vec<String>> {
    let model = model_2d(params)?;
    let h = model.build()?;
    let (_, table) = spectrum_with_stats(&h)?;
    let bounds = energy_bounds(&model);

    let mut csv = Vec::new();
    output::write_spectrum_csv(&mut csv, &table)?;
    write_file(
        &spec.out_dir.join("spectrum.csv"),
        &String::from_utf8(csv).expect("ascii csv"),
    )?;

    let points: Vec<(f64, f64, f64)> = table.iter().map(|s| (s.e.re, s.e.im, s.pr)).collect();
    let svg = scatter_svg(&ScatterSpec {
        points: &points,
        title: &format!("complex spectrum, {}", h.model_tag()),
        x_label: "Re E",
        y_label: "Im E",
        bounds: Some(bounds),
        trend: None,
    });
    write_file(&spec.out_dir.join("spectrum.svg"), &svg)?;

    let inside = table
        .iter()
        .filter(|s| s.e.re.abs() <= bounds.re_max && s.e.im.abs() <= bounds.im_max)
        .count();
    let pr_max = table.iter().map(|s| s.pr).fold(0.0, f64::max);
    let argmax = table
        .iter()
        .max_by(|a, b| a.pr.total_cmp(&b.pr))
        .expect("nonempty spectrum");
    let metrics = json!({
        "schema_version": SCHEMA_VERSION,
        "bound_re": bounds.re_max,
        "bound_im": bounds.im_max,
        "n_states": table.len(),
        "n_inside_box": inside,
        "pr_max": pr_max,
        "pr_max_ansatz": pr_max_ansatz(params.f64("tx")?, params.f64("ty")?, params.f64("b")?),
        "pr_argmax_e": [argmax.e.re, argmax.e.im],
        "max_residual": table.iter().map(|s| s.residual).fold(0.0, f64::max),
    });
    write_json(&spec.out_dir.join("metrics.json"), &metrics)?;
    Ok(vec![
        "spectrum.csv".into(),
        "spectrum.svg".into(),
        "metrics.json".into(),
    ])
}

/// Margin (in sites) below which a state counts as boundary-affected: three
/// widths of the widest existing ansatz.
fn interior_margin_2d(tx: f64, b: f64) -> f64 {
    3.0 * (2.0 * tx.abs() / b.abs()).sqrt()
}

fn run_trends_2d(spec: &ScenarioSpec, params: &Params) -> Result<Vec<String>> {
    let model = model_2d(params)?;
    let b = params.f64("b")?;
    let h = model.build()?;
    let (_, table) = spectrum_with_stats(&h)?;
    let margin = interior_margin_2d(params.f64("tx")?, b);
    let filt = interior_filter(&h, margin);
    let fit_re = linear_trend(&table, StatField::MeanY, StatField::ReE, &filt)?;
    let fit_im = linear_trend(&table, StatField::MeanX, StatField::ImE, &filt)?;

    let mut csv = Vec::new();
    output::write_spectrum_csv(&mut csv, &table)?;
    write_file(
        &spec.out_dir.join("spectrum.csv"),
        &String::from_utf8(csv).expect("ascii csv"),
    )?;

    let pts_re: Vec<(f64, f64, f64)> = table
        .iter()
        .filter(|s| filt(s))
        .map(|s| (s.mean_y, s.e.re, s.pr))
        .collect();
    let svg_re = scatter_svg(&ScatterSpec {
        points: &pts_re,
        title: "Re E vs mean y (interior states)",
        x_label: "mean y",
        y_label: "Re E",
        bounds: None,
        trend: Some((fit_re.slope, fit_re.intercept)),
    });
    write_file(&spec.out_dir.join("trend_re_vs_y.svg"), &svg_re)?;

    let pts_im: Vec<(f64, f64, f64)> = table
        .iter()
        .filter(|s| filt(s))
        .map(|s| (s.mean_x, s.e.im, s.pr))
        .collect();
    let svg_im = scatter_svg(&ScatterSpec {
        points: &pts_im,
        title: "Im E vs mean x (interior states)",
        x_label: "mean x",
        y_label: "Im E",
        bounds: None,
        trend: Some((fit_im.slope, fit_im.intercept)),
    });
    write_file(&spec.out_dir.join("trend_im_vs_x.svg"), &svg_im)?;

    let metrics = json!({
        "schema_version": SCHEMA_VERSION,
        "interior_margin_sites": margin,
        "n_interior": fit_re.n_used,
        "slope_re_vs_y": fit_re.slope,
        "slope_re_expected": b,
        "r2_re_vs_y": fit_re.r_squared,
        "slope_im_vs_x": fit_im.slope,
        "slope_im_expected": -b,
        "r2_im_vs_x": fit_im.r_squared,
    });
    write_json(&spec.out_dir.join("metrics.json"), &metrics)?;
    Ok(vec![
        "spectrum.csv".into(),
        "trend_re_vs_y.svg".into(),
        "trend_im_vs_x.svg".into(),
        "metrics.json".into(),
    ])
}

/// Seeded choice of `count` interior eigenstates.
pub fn pick_interior_states(
    table: &[spectral::StateStats],
    margin: f64,
    half_extent: (f64, f64),
    count: usize,
    seed: u64,
) -> Vec<usize> {
    let interior: Vec<usize> = table
        .iter()
        .enumerate()
        .filter(|(_, s)| {
            s.mean_x.abs() <= half_extent.0 - margin && s.mean_y.abs() <= half_extent.1 - margin
        })
        .map(|(i, _)| i)
        .collect();
    let mut r = rng::seeded(seed);
    let mut picked = Vec::new();
    let mut pool = interior;
    for _ in 0..count.min(pool.len()) {
        let at = rng::uniform(&mut r, 0.0, pool.len() as f64) as usize;
        picked.push(pool.swap_remove(at.min(pool.len() - 1)));
    }
    picked.sort_unstable();
    picked
}

fn run_states_2d(spec: &ScenarioSpec, params: &Params, seed: u64) -> Result<Vec<String>> {
    let model = model_2d(params)?;
    let (tx, ty, b) = (params.f64("tx")?, params.f64("ty")?, params.f64("b")?);
    let h = model.build()?;
    let (decomp, table) = spectrum_with_stats(&h)?;
    let margin = interior_margin_2d(tx, b);
    let picked = pick_interior_states(
        &table,
        margin,
        h.indexer().half_extent(),
        params.usize("n_states")?,
        seed,
    );

    let mut outputs = Vec::new();
    let mut state_metrics = Vec::new();
    for (slot, &idx) in picked.iter().enumerate() {
        let v = &decomp.vectors[idx];
        let fit = fit_lattice_clm_2d(tx, ty, b, decomp.values[idx], v, h.indexer())?;
        let (ansatz, _) = sample_lattice_clm_2d(&fit, h.indexer())?;

        // cuts through the center along x and y
        let (cx, cy) = (fit.r0[0], fit.r0[1]);
        let indexer = h.indexer();
        let mut csv = String::from("axis,coord,abs_psi,abs_ansatz\n");
        let mut pts_x = Vec::new();
        let mut pts_ax = Vec::new();
        for i in 0..h.n() {
            let (x, y) = indexer.centered(i);
            if (y - cy).abs() < 0.51 {
                csv.push_str(&format!(
                    "x,{},{},{}\n",
                    fmt_f64(x),
                    fmt_f64(v[i].norm()),
                    fmt_f64(ansatz[i].norm())
                ));
                pts_x.push((x, v[i].norm(), 0.5));
                pts_ax.push((x, ansatz[i].norm()));
            }
        }
        for i in 0..h.n() {
            let (x, y) = indexer.centered(i);
            if (x - cx).abs() < 0.51 {
                csv.push_str(&format!(
                    "y,{},{},{}\n",
                    fmt_f64(y),
                    fmt_f64(v[i].norm()),
                    fmt_f64(ansatz[i].norm())
                ));
            }
        }
        let csv_name = format!("state_{slot}_cuts.csv");
        write_file(&spec.out_dir.join(&csv_name), &csv)?;
        outputs.push(csv_name);

        let mut plot = SvgPlot::new(
            (
                pts_x.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
                pts_x.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max),
            ),
            (
                0.0,
                pts_x.iter().map(|p| p.1).fold(0.0, f64::max) * 1.1,
            ),
            &format!("eigenstate {idx} x-cut vs ansatz"),
            "x",
            "|psi|",
        );
        pts_ax.sort_by(|a, b| a.0.total_cmp(&b.0));
        plot.polyline(&pts_ax, "#d95f02");
        for (x, a, _) in &pts_x {
            plot.circle(*x, *a, 2.5, "#1b9e77");
        }
        let svg_name = format!("state_{slot}.svg");
        write_file(&spec.out_dir.join(&svg_name), &plot.finish())?;
        outputs.push(svg_name);

        // pointwise agreement inside two widths of the center
        let (worst, n_window) = ansatz_agreement(v, &ansatz, indexer, &fit);
        state_metrics.push(json!({
            "index": idx,
            "e": [decomp.values[idx].re, decomp.values[idx].im],
            "center": [fit.r0[0], fit.r0[1]],
            "tau": [fit.tau_x, fit.tau_y],
            "k": [fit.k[0], fit.k[1]],
            "window_sites": n_window,
            "worst_rel_err": worst,
        }));
    }
    let metrics = json!({
        "schema_version": SCHEMA_VERSION,
        "interior_margin_sites": margin,
        "selected": picked,
        "states": state_metrics,
        "max_eig_residual": decomp.max_residual(),
        "residual_bar": 1e-8 * h.matrix().frobenius_norm(),
    });
    write_json(&spec.out_dir.join("metrics.json"), &metrics)?;
    outputs.push("metrics.json".into());
    Ok(outputs)
}

/// Worst pointwise relative |psi| error over sites within two widths of the
/// fitted center, comparing a unit eigenvector against a unit ansatz.
pub fn ansatz_agreement(
    v: &[C64],
    ansatz: &[C64],
    indexer: &crate::lattice::SiteIndexer,
    fit: &analytics::LatticeClm2d,
) -> (f64, usize) {
    let wx = 1.0 / (2.0 * fit.tau_x).sqrt();
    let wy = 1.0 / (2.0 * fit.tau_y).sqrt();
    let mut worst = 0.0f64;
    let mut count = 0usize;
    for i in 0..v.len() {
        let (x, y) = indexer.centered(i);
        if (x - fit.r0[0]).abs() <= 2.0 * wx && (y - fit.r0[1]).abs() <= 2.0 * wy {
            let rel = (v[i].norm() - ansatz[i].norm()).abs() / ansatz[i].norm();
            worst = worst.max(rel);
            count += 1;
        }
    }
    (worst, count)
}

fn model_1d(params: &Params, gainloss: bool, seed: u64) -> Result<ModelSpec> {
    let n = params.usize("n")?;
    let t = params.f64("t")?;
    let b = params.f64("b")?;
    let random = params.str("mass_kind")? == "random-uniform";
    let mass = match (gainloss, random) {
        (false, false) => MassProfile::linear_real(b),
        (false, true) => MassProfile::random_real(b, seed),
        (true, false) => MassProfile::linear_imaginary(b),
        (true, true) => MassProfile::random_imaginary(b, seed),
    };
    Ok(if gainloss {
        ModelSpec::GainLoss1d { n, t, mass }
    } else {
        ModelSpec::Nonreciprocal1d { n, t, mass }
    })
}

fn run_sweep_1d(
    spec: &ScenarioSpec,
    params: &Params,
    seed: u64,
    gainloss: bool,
) -> Result<Vec<String>> {
    let model = model_1d(params, gainloss, seed)?;
    let h = model.build()?;
    let n = h.n();
    let b = params.f64("b")?;
    let (_, table) = spectrum_with_stats(&h)?;
    let bounds = energy_bounds(&model);

    let mut csv = Vec::new();
    output::write_spectrum_csv(&mut csv, &table)?;
    write_file(
        &spec.out_dir.join("spectrum.csv"),
        &String::from_utf8(csv).expect("ascii csv"),
    )?;
    let points: Vec<(f64, f64, f64)> = table
        .iter()
        .map(|s| (s.e.re, s.e.im, s.mean_x))
        .collect();
    write_file(
        &spec.out_dir.join("spectrum.svg"),
        &scatter_svg(&ScatterSpec {
            points: &points,
            title: &format!("complex spectrum, {}", h.model_tag()),
            x_label: "Re E",
            y_label: "Im E",
            bounds: Some(bounds),
            trend: None,
        }),
    )?;

    let omegas = omega_grid(
        params.f64("omega_min")?,
        params.f64("omega_max")?,
        params.usize("omega_steps")?,
    );
    let sweep = frequency_sweep(&h, &omegas, params.f64("kappa")?, params.f64("gamma")?, seed)?;
    let mut csv = Vec::new();
    output::write_sweep_csv(&mut csv, &sweep)?;
    write_file(
        &spec.out_dir.join("sweep.csv"),
        &String::from_utf8(csv).expect("ascii csv"),
    )?;
    write_file(
        &spec.out_dir.join("sweep.svg"),
        &sweep_heatmap_svg(&sweep, &format!("steady-state response, {}", h.model_tag())),
    )?;

    let window_fraction = if gainloss {
        params.f64("window_fraction")?
    } else {
        0.05
    };
    let metrics = sweep_metrics(&sweep, n, window_fraction)?;
    let metrics_json = json!({
        "schema_version": SCHEMA_VERSION,
        "slope": metrics.rainbow_slope,
        "slope_expected": 1.0 / b,
        "r2": metrics.rainbow_r2,
        "funnel_fraction": metrics.funnel_fraction,
        "correlation": metrics.peak_omega_correlation,
        "window_fraction": window_fraction,
        "seed": seed,
        "params": params.as_json(),
    });
    write_json(&spec.out_dir.join("metrics.json"), &metrics_json)?;
    Ok(vec![
        "spectrum.csv".into(),
        "spectrum.svg".into(),
        "sweep.csv".into(),
        "sweep.svg".into(),
        "metrics.json".into(),
    ])
}

fn stencil_from(params: &Params) -> Result<StencilOrder> {
    Ok(match params.usize("stencil_order")? {
        2 => StencilOrder::Second,
        4 => StencilOrder::Fourth,
        6 => StencilOrder::Sixth,
        other => {
            return Err(CoreError::InvalidValue {
                key: "stencil_order".into(),
                message: format!("expected 2, 4, or 6, got {other}"),
            })
        }
    })
}

fn run_dynamics(spec: &ScenarioSpec, params: &Params) -> Result<Vec<String>> {
    let wp = WavepacketSpec::new(
        params.f64("alpha")?,
        params.f64("beta")?,
        params.f64("x0")?,
        params.f64("y0")?,
        params.f64("q_x")?,
        params.f64("q_y")?,
    )?;
    let b = params.f64("b")?;
    let grid = Grid2d::new(
        params.f64("grid_x0")?,
        params.f64("grid_y0")?,
        params.usize("grid_nx")?,
        params.usize("grid_ny")?,
        params.f64("grid_h")?,
    );
    let op = ContinuumFdOp::new(grid, b, stencil_from(params)?);
    let dt = params.f64("dt")?;
    let t_final = params.f64("t_final")?;
    let record_every = params.usize("record_every")?.max(1);
    let geom = Geometry::from_grid(&grid);
    let psi0 = closed_form_gaussian(&wp, b, 0.0, &grid)?;
    let evo = integrate_rk4(&op, &psi0, &geom, dt, t_final, record_every, true)?;

    let mut csv = Vec::new();
    output::write_evolution_csv(&mut csv, &evo)?;
    write_file(
        &spec.out_dir.join("evolution.csv"),
        &String::from_utf8(csv).expect("ascii csv"),
    )?;

    // closed form on the same grid and time samples, plus the deviation
    let mut cf_rows = crate::dynamics::EvolutionResult {
        times: Vec::new(),
        center: Vec::new(),
        width: Vec::new(),
        log_norm: Vec::new(),
        snapshots: None,
    };
    let mut deviations = Vec::new();
    let snapshots = evo.snapshots.as_ref().expect("snapshots recorded");
    for (i, &t) in evo.times.iter().enumerate() {
        let field = closed_form_gaussian(&wp, b, t, &grid)?;
        let m = track_moments(&field, &geom)?;
        cf_rows.times.push(t);
        cf_rows.center.push((m.center_x, m.center_y));
        cf_rows.width.push((m.width_x, m.width_y));
        cf_rows.log_norm.push(m.log_norm);
        let num: f64 = snapshots[i]
            .iter()
            .zip(&field)
            .map(|(a, c)| (a - c).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let den = linalg::norm2(&field);
        deviations.push(num / den);
    }
    let mut csv = Vec::new();
    output::write_evolution_csv(&mut csv, &cf_rows)?;
    write_file(
        &spec.out_dir.join("closed_form.csv"),
        &String::from_utf8(csv).expect("ascii csv"),
    )?;

    // center and width tracks
    let mut plot = SvgPlot::new(
        (0.0, t_final),
        (
            evo.center.iter().map(|c| c.0).fold(f64::INFINITY, f64::min) - 5.0,
            evo.center.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max) + 5.0,
        ),
        "wavepacket center and width vs time",
        "t",
        "x",
    );
    let center_pts: Vec<(f64, f64)> = evo
        .times
        .iter()
        .zip(&evo.center)
        .map(|(&t, c)| (t, c.0))
        .collect();
    plot.polyline(&center_pts, "#1b9e77");
    let width_pts: Vec<(f64, f64)> = evo
        .times
        .iter()
        .zip(&evo.width)
        .map(|(&t, w)| (t, w.0))
        .collect();
    plot.polyline(&width_pts, "#d95f02");
    write_file(&spec.out_dir.join("evolution.svg"), &plot.finish())?;

    // velocity from a least-squares fit of the recorded centers
    let vel_fit = spectral::fit_line(&center_pts, center_pts.len());
    let pred = gaussian_moments_predicted(&wp, b, t_final);
    let width0 = evo.width[0].0;
    let max_width_drift = evo
        .width
        .iter()
        .map(|w| (w.0 - width0).abs() / width0)
        .fold(0.0, f64::max);
    let max_dev = deviations.iter().cloned().fold(0.0, f64::max);
    let metrics = json!({
        "schema_version": SCHEMA_VERSION,
        "gershgorin_bound": op.gershgorin_bound(),
        "velocity_measured": vel_fit.slope,
        "velocity_predicted": 1.0 - b / (2.0 * wp.alpha),
        "width_x_initial": width0,
        "max_width_drift_rel": max_width_drift,
        "log_norm_growth_measured": evo.log_norm.last().unwrap() - evo.log_norm[0],
        "log_norm_growth_closed_form": cf_rows.log_norm.last().unwrap() - cf_rows.log_norm[0],
        "log_amp_expanded": pred.log_amp,
        "log_amp_printed_variant": pred.log_amp_printed,
        "rel_l2_deviation_by_time": evo.times.iter().zip(&deviations)
            .map(|(&t, &d)| json!([t, d])).collect::<Vec<_>>(),
        "max_rel_l2_deviation": max_dev,
    });
    write_json(&spec.out_dir.join("metrics.json"), &metrics)?;
    Ok(vec![
        "evolution.csv".into(),
        "closed_form.csv".into(),
        "evolution.svg".into(),
        "metrics.json".into(),
    ])
}

fn run_continuum_checks(spec: &ScenarioSpec, params: &Params) -> Result<Vec<String>> {
    let b = params.f64("b")?;
    let h = params.f64("h")?;
    let mut rows: Vec<(String, f64, f64)> = Vec::new(); // (check, h, residual)

    let p = analytics::ContinuumParams::new(analytics::Sign::Plus, analytics::Sign::Minus, b);
    for hh in [h, h / 2.0] {
        let clm = analytics::continuum_clm(p, Complex64::new(0.0, 0.0), [0.0, 0.0])?;
        let r = analytics::continuum_residual(p, clm.e, clm.q, &clm.default_grid(hh))?;
        rows.push(("clm".into(), hh, r));
    }
    for hh in [h, h / 2.0] {
        let e = Complex64::new(1.0, 0.5);
        let grid = analytics::continuum::dirac_default_grid(e, b, [0.0, 0.0], hh)?;
        let r = analytics::dirac_zero_mode_residual(e, b, [0.0, 0.0], &grid)?;
        rows.push(("dirac-0ll".into(), hh, r));
    }
    for n_pow in [1u32, 3, 5] {
        for hh in [h / 2.0, h / 4.0] {
            let half = (30.0 * f64::from(n_pow + 1) / b.abs())
                .powf(1.0 / f64::from(n_pow + 1))
                + 0.5;
            let grid = Grid1d::centered(0.0, half, hh);
            let r = analytics::generalized_mode_residual(n_pow, b, 0.0, &grid)?;
            rows.push((format!("by^{n_pow}"), hh, r));
        }
    }

    let mut csv = String::from("check,h,residual,ratio\n");
    let mut ratios = Vec::new();
    let mut points = Vec::new();
    for pair in rows.chunks(2) {
        let ratio = pair[0].2 / pair[1].2;
        ratios.push(json!({ "check": pair[0].0, "ratio": ratio }));
        // ratio lives on the coarse-h row
        csv.push_str(&format!(
            "{},{},{},{}\n",
            pair[0].0,
            fmt_f64(pair[0].1),
            fmt_f64(pair[0].2),
            fmt_f64(ratio)
        ));
        csv.push_str(&format!(
            "{},{},{},\n",
            pair[1].0,
            fmt_f64(pair[1].1),
            fmt_f64(pair[1].2)
        ));
        for (_, hh, r) in pair {
            points.push((hh.ln(), r.ln(), 0.5));
        }
    }
    write_file(&spec.out_dir.join("residuals.csv"), &csv)?;
    write_file(
        &spec.out_dir.join("residuals.svg"),
        &scatter_svg(&ScatterSpec {
            points: &points,
            title: "FD residual convergence (log-log)",
            x_label: "ln h",
            y_label: "ln residual",
            bounds: None,
            trend: None,
        }),
    )?;
    let metrics = json!({
        "schema_version": SCHEMA_VERSION,
        "b": b,
        "h": h,
        "ratios": ratios,
        "expected_ratio_window": [3.5, 4.5],
    });
    write_json(&spec.out_dir.join("metrics.json"), &metrics)?;
    Ok(vec![
        "residuals.csv".into(),
        "residuals.svg".into(),
        "metrics.json".into(),
    ])
}
