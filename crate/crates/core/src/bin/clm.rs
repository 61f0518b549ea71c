//! Command-line front end: model builds, spectra, ansatz descriptors,
//! driven response, time evolution, and figure scenarios.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::Value;

use clm_core::analytics::{self, lattice_clm_1d, lattice_clm_2d, Model1dKind};
use clm_core::dynamics::{
    closed_form_gaussian, integrate_rk4, ContinuumFdOp, Geometry, LatticeOp, StencilOrder,
    WavepacketSpec,
};
use clm_core::error::CoreError;
use clm_core::grid::Grid2d;
use clm_core::lattice::{HamiltonianMatrix, MassProfile, ModelSpec};
use clm_core::output::{
    descriptor_record_1d, descriptor_record_2d, scatter_svg, sweep_heatmap_svg, ScatterSpec,
};
use clm_core::response::{frequency_sweep, omega_grid, sweep_metrics};
use clm_core::scenario::{run_scenario, Scale, ScenarioName, ScenarioSpec};
use clm_core::spectral::{eig, spectrum_table, DEFAULT_TOL};

#[derive(Parser)]
#[command(
    name = "clm",
    version,
    about = "Non-Hermitian lattice simulations: bound-state continua, rainbow trapping, funneling, wavepacket dynamics"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelKind {
    Clm2d,
    Nonreciprocal1d,
    Gainloss1d,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MassKindArg {
    Linear,
    RandomUniform,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Args)]
struct ModelArgs {
    /// Which lattice to build
    #[arg(long, value_enum)]
    model: ModelKind,
    /// 2D lattice width
    #[arg(long = "Lx", default_value_t = 30)]
    lx: usize,
    /// 2D lattice height
    #[arg(long = "Ly", default_value_t = 30)]
    ly: usize,
    /// 1D chain length
    #[arg(long = "N", default_value_t = 400)]
    n: usize,
    /// 2D hopping along x
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    tx: f64,
    /// 2D hopping along y
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    ty: f64,
    /// 1D hopping
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    t: f64,
    /// Mass gradient strength
    #[arg(long = "B", default_value_t = 0.05, allow_hyphen_values = true)]
    b: f64,
    /// Onsite mass profile
    #[arg(long, value_enum, default_value_t = MassKindArg::Linear)]
    mass: MassKindArg,
    /// Seed for random masses and drives (CLM_SEED is the fallback)
    #[arg(long, env = "CLM_SEED", default_value_t = 0)]
    seed: u64,
}

impl ModelArgs {
    fn spec(&self) -> Result<ModelSpec, CoreError> {
        Ok(match self.model {
            ModelKind::Clm2d => ModelSpec::Clm2d {
                lx: self.lx,
                ly: self.ly,
                tx: self.tx,
                ty: self.ty,
                b: self.b,
            },
            ModelKind::Nonreciprocal1d => ModelSpec::Nonreciprocal1d {
                n: self.n,
                t: self.t,
                mass: match self.mass {
                    MassKindArg::Linear => MassProfile::linear_real(self.b),
                    MassKindArg::RandomUniform => MassProfile::random_real(self.b, self.seed),
                },
            },
            ModelKind::Gainloss1d => ModelSpec::GainLoss1d {
                n: self.n,
                t: self.t,
                mass: match self.mass {
                    MassKindArg::Linear => MassProfile::linear_imaginary(self.b),
                    MassKindArg::RandomUniform => {
                        MassProfile::random_imaginary(self.b, self.seed)
                    }
                },
            },
        })
    }

    fn build(&self) -> Result<HamiltonianMatrix, CoreError> {
        self.spec()?.build()
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a Hamiltonian and export it as `row col re im` text
    Build {
        #[command(flatten)]
        model: ModelArgs,
        /// Output file (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Diagonalize a lattice and write the per-state spectrum table
    Spectrum {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// csv writes the table, svg a colored scatter with the energy box
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Print envelope-ansatz descriptors for given momentum and energy
    Ansatz {
        #[command(flatten)]
        model: ModelArgs,
        /// Carrier momentum (x component for 2D)
        #[arg(long, default_value_t = -std::f64::consts::FRAC_PI_2, allow_hyphen_values = true)]
        kx: f64,
        /// Carrier momentum y component (2D only)
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        ky: f64,
        /// Envelope momentum (x component for 2D)
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        qx: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        qy: f64,
        /// Energy, real part
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        e_re: f64,
        /// Energy, imaginary part
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        e_im: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Steady-state response over a frequency grid
    Drive {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = -8.0, allow_hyphen_values = true)]
        omega_min: f64,
        #[arg(long, default_value_t = 8.0, allow_hyphen_values = true)]
        omega_max: f64,
        #[arg(long, default_value_t = 21)]
        omega_steps: usize,
        #[arg(long, default_value_t = 1.9)]
        gamma: f64,
        #[arg(long, default_value_t = 0.2)]
        kappa: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// csv writes the sweep, json the trapping metrics, svg a heatmap
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// RK4 time evolution of a lattice state or a continuum gaussian
    Evolve {
        #[command(flatten)]
        model: ModelArgs,
        /// Evolve the continuum operator instead of the lattice
        #[arg(long, default_value_t = false)]
        continuum: bool,
        #[arg(long, default_value_t = 0.04)]
        dt: f64,
        /// Final time
        #[arg(long = "T", default_value_t = 16.0)]
        t_final: f64,
        #[arg(long, default_value_t = 50)]
        record_every: usize,
        /// Gaussian curvature along x
        #[arg(long, default_value_t = -0.005, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, default_value_t = -0.0037, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long, default_value_t = -50.0, allow_hyphen_values = true)]
        x0: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        y0: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        qx: f64,
        #[arg(long, default_value_t = -0.025, allow_hyphen_values = true)]
        qy: f64,
        #[arg(long, default_value_t = -120.0, allow_hyphen_values = true)]
        grid_x0: f64,
        #[arg(long, default_value_t = -100.0, allow_hyphen_values = true)]
        grid_y0: f64,
        #[arg(long, default_value_t = 200)]
        grid_nx: usize,
        #[arg(long, default_value_t = 200)]
        grid_ny: usize,
        #[arg(long, default_value_t = 1.0)]
        grid_h: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a named figure scenario, writing a manifest and data bundle
    Scenario {
        /// fig2b..fig3ef, figS1a.., figS2c.., continuum-checks
        name: Option<String>,
        #[arg(long, default_value = "full")]
        scale: String,
        #[arg(long, env = "CLM_SEED", default_value_t = 0)]
        seed: u64,
        /// Output directory
        #[arg(long, default_value = "clm-out")]
        out: PathBuf,
        /// JSON file with parameter overrides (a previous manifest works)
        #[arg(long)]
        config: Option<PathBuf>,
        /// Inline override, key=value; repeatable
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                CoreError::UnknownKey(_) | CoreError::InvalidValue { .. } => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn emit(out: Option<&PathBuf>, contents: &str) -> Result<(), CoreError> {
    match out {
        Some(path) => fs::write(path, contents)?,
        None => std::io::stdout().write_all(contents.as_bytes())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CoreError> {
    match cli.cmd {
        Cmd::Build { model, out } => {
            let h = model.build()?;
            let mut buf = Vec::new();
            h.export_text(&mut buf)?;
            emit(out.as_ref(), &String::from_utf8(buf).expect("ascii export"))
        }
        Cmd::Spectrum { model, out, format } => {
            let h = model.build()?;
            let decomp = eig(h.matrix(), DEFAULT_TOL)?;
            let table = spectrum_table(&h, &decomp)?;
            match format {
                Format::Csv | Format::Json => {
                    let mut buf = Vec::new();
                    if format == Format::Csv {
                        clm_core::output::write_spectrum_csv(&mut buf, &table)?;
                    } else {
                        serde_json::to_writer_pretty(&mut buf, &table)?;
                        buf.push(b'\n');
                    }
                    emit(out.as_ref(), &String::from_utf8(buf).expect("ascii"))
                }
                Format::Svg => {
                    let bounds = analytics::energy_bounds(h.model());
                    let color_positions = matches!(
                        h.model(),
                        ModelSpec::Nonreciprocal1d { .. } | ModelSpec::GainLoss1d { .. }
                    );
                    let points: Vec<(f64, f64, f64)> = table
                        .iter()
                        .map(|s| {
                            let c = if color_positions { s.mean_x } else { s.pr };
                            (s.e.re, s.e.im, c)
                        })
                        .collect();
                    let svg = scatter_svg(&ScatterSpec {
                        points: &points,
                        title: &format!("complex spectrum, {}", h.model_tag()),
                        x_label: "Re E",
                        y_label: "Im E",
                        bounds: Some(bounds),
                        trend: None,
                    });
                    emit(out.as_ref(), &svg)
                }
            }
        }
        Cmd::Ansatz {
            model,
            kx,
            ky,
            qx,
            qy,
            e_re,
            e_im,
            out,
        } => {
            let e = Complex64::new(e_re, e_im);
            let record = match model.model {
                ModelKind::Clm2d => {
                    let clm =
                        lattice_clm_2d(model.tx, model.ty, model.b, [kx, ky], [qx, qy], e)?;
                    descriptor_record_2d(&clm)
                }
                ModelKind::Nonreciprocal1d => {
                    let clm =
                        lattice_clm_1d(Model1dKind::Nonreciprocal, model.t, model.b, kx, qx, e)?;
                    descriptor_record_1d(&clm)
                }
                ModelKind::Gainloss1d => {
                    let clm = lattice_clm_1d(Model1dKind::GainLoss, model.t, model.b, kx, qx, e)?;
                    descriptor_record_1d(&clm)
                }
            };
            emit(out.as_ref(), &record)
        }
        Cmd::Drive {
            model,
            omega_min,
            omega_max,
            omega_steps,
            gamma,
            kappa,
            out,
            format,
        } => {
            let h = model.build()?;
            let omegas = omega_grid(omega_min, omega_max, omega_steps);
            let sweep = frequency_sweep(&h, &omegas, kappa, gamma, model.seed)?;
            match format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    clm_core::output::write_sweep_csv(&mut buf, &sweep)?;
                    emit(out.as_ref(), &String::from_utf8(buf).expect("ascii"))
                }
                Format::Json => {
                    let m = sweep_metrics(&sweep, h.n(), 0.05)?;
                    let payload = serde_json::json!({
                        "schema_version": clm_core::scenario::SCHEMA_VERSION,
                        "slope": m.rainbow_slope,
                        "r2": m.rainbow_r2,
                        "funnel_fraction": m.funnel_fraction,
                        "correlation": m.peak_omega_correlation,
                        "seed": model.seed,
                        "params": {
                            "model": h.model_tag(),
                            "gamma": gamma,
                            "kappa": kappa,
                            "omega_min": omega_min,
                            "omega_max": omega_max,
                            "omega_steps": omega_steps,
                        },
                    });
                    emit(
                        out.as_ref(),
                        &format!("{}\n", serde_json::to_string_pretty(&payload)?),
                    )
                }
                Format::Svg => {
                    let svg =
                        sweep_heatmap_svg(&sweep, &format!("steady-state, {}", h.model_tag()));
                    emit(out.as_ref(), &svg)
                }
            }
        }
        Cmd::Evolve {
            model,
            continuum,
            dt,
            t_final,
            record_every,
            alpha,
            beta,
            x0,
            y0,
            qx,
            qy,
            grid_x0,
            grid_y0,
            grid_nx,
            grid_ny,
            grid_h,
            out,
        } => {
            let evo = if continuum {
                let wp = WavepacketSpec::new(alpha, beta, x0, y0, qx, qy)?;
                let grid = Grid2d::new(grid_x0, grid_y0, grid_nx, grid_ny, grid_h);
                let op = ContinuumFdOp::new(grid, model.b, StencilOrder::Sixth);
                let psi0 = closed_form_gaussian(&wp, model.b, 0.0, &grid)?;
                let geom = Geometry::from_grid(&grid);
                integrate_rk4(&op, &psi0, &geom, dt, t_final, record_every, false)?
            } else {
                let spec = model.spec()?;
                let op = LatticeOp::new(spec);
                let indexer = spec.indexer();
                let geom = Geometry::from_indexer(&indexer);
                // gaussian initial state about the lattice center
                let n = spec.dim();
                let mut psi0 = vec![Complex64::new(0.0, 0.0); n];
                for (i, slot) in psi0.iter_mut().enumerate() {
                    let (x, y) = indexer.centered(i);
                    *slot = Complex64::new((alpha * x * x + beta * y * y).exp(), 0.0);
                }
                integrate_rk4(&op, &psi0, &geom, dt, t_final, record_every, false)?
            };
            let mut buf = Vec::new();
            clm_core::output::write_evolution_csv(&mut buf, &evo)?;
            emit(out.as_ref(), &String::from_utf8(buf).expect("ascii"))
        }
        Cmd::Scenario {
            name,
            scale,
            seed,
            out,
            config,
            sets,
        } => {
            let mut overrides: BTreeMap<String, Value> = BTreeMap::new();
            let mut cfg_name = None;
            let mut cfg_scale = None;
            let mut cfg_seed = None;
            if let Some(path) = &config {
                let text = fs::read_to_string(path)?;
                let parsed: Value = serde_json::from_str(&text)?;
                let obj = parsed.as_object().ok_or_else(|| CoreError::InvalidValue {
                    key: "config".into(),
                    message: "config file must hold a JSON object".into(),
                })?;
                // a manifest carries its params under "params"; a plain
                // config is the flat map itself
                if let Some(Value::Object(params)) = obj.get("params") {
                    for (k, v) in params {
                        overrides.insert(k.clone(), v.clone());
                    }
                    cfg_name = obj
                        .get("scenario")
                        .and_then(Value::as_str)
                        .map(str::to_string);
                    cfg_scale = obj
                        .get("scale")
                        .and_then(Value::as_str)
                        .map(str::to_string);
                    cfg_seed = obj.get("seed").and_then(Value::as_u64);
                } else {
                    for (k, v) in obj {
                        overrides.insert(k.clone(), v.clone());
                    }
                }
            }
            for kv in &sets {
                let (k, v) = kv.split_once('=').ok_or_else(|| CoreError::InvalidValue {
                    key: kv.clone(),
                    message: "expected KEY=VALUE".into(),
                })?;
                let value = serde_json::from_str::<Value>(v)
                    .unwrap_or_else(|_| Value::String(v.to_string()));
                overrides.insert(k.to_string(), value);
            }
            let name = name
                .or(cfg_name)
                .ok_or_else(|| CoreError::InvalidValue {
                    key: "name".into(),
                    message: "scenario name required (argument or config)".into(),
                })?
                .parse::<ScenarioName>()?;
            let scale = match cfg_scale {
                Some(from_cfg) if scale == "full" => from_cfg.parse::<Scale>()?,
                _ => scale.parse::<Scale>()?,
            };
            let seed = if seed == 0 { cfg_seed.unwrap_or(0) } else { seed };
            // the seed flag (or manifest seed) wins over a stale copy in the
            // params map
            overrides.insert("seed".into(), serde_json::json!(seed));
            let manifest = run_scenario(&ScenarioSpec {
                name,
                scale,
                seed,
                out_dir: out.clone(),
                overrides,
            })?;
            println!(
                "wrote {} ({} files) to {}",
                name,
                manifest["outputs"].as_array().map_or(0, Vec::len) + 1,
                out.display()
            );
            Ok(())
        }
    }
}
