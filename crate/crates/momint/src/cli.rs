//! Command-line front end: subcommand dispatch, CSV/JSON emission.
//!
//! One JSON config file describes the problem; flags override it. Every
//! output file is written atomically (temp file, then rename) with fixed
//! number formatting, so identical configurations produce byte-identical
//! artifacts. Failures print a machine-readable JSON object on standard
//! error; exit code 2 marks invalid input, 3 a numerical failure.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use crate::boundary::MatrixJson;
use crate::config::{FunctionSpec, RunConfig};
use crate::error::{Error, ErrorKind, Result};
use crate::evolution::{
    evolve_ray_function, evolve_spectral, frame_to_csv, EigenBasisTruncation, EvalOnOmega,
    Propagator, RayParams,
};
use crate::funcspace::{
    parseval_defect, sampled_from_csv, sampled_to_csv, L2Ref, PiecewiseExp, QuadGrid,
    SampledFunction, SmoothBump, TraceSidecar, DEFAULT_QUAD_ORDER,
};
use crate::geometry::{tiles_by, IntervalUnion, TilingDefect};
use crate::spectral::{
    find_spectrum, resolvent_apply, spectrum_to_csv, spectrum_to_json, SpectrumParams,
};
use crate::spectraset::{build_boundary_matrix, fuglede_harness, gram_matrix, is_spectral_matrix};

#[derive(Debug, Parser)]
#[command(
    name = "momint",
    about = "Momentum-operator extensions on interval unions: spectra, evolution, spectral-set experiments",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Frequency window, overrides the config.
    #[arg(long, global = true, num_args = 2, value_names = ["A", "B"], allow_negative_numbers = true)]
    pub window: Option<Vec<f64>>,

    /// Phase tolerance for root refinement.
    #[arg(long, global = true)]
    pub tol: Option<f64>,

    /// Gauss-Legendre order per interval.
    #[arg(long = "quad-order", global = true)]
    pub quad_order: Option<usize>,

    /// Propagator for `evolve`.
    #[arg(long, global = true, value_enum)]
    pub propagator: Option<PropagatorArg>,

    /// Worker threads for the spectrum scan.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PropagatorArg {
    Spectral,
    Ray,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Find the spectrum over the window and export it.
    Spectrum,
    /// Tabulate eigenfunctions on the quadrature grid.
    Eigfun,
    /// Apply the resolvent to the configured right-hand side.
    Resolvent,
    /// Evolve the configured function and dump frames.
    Evolve,
    /// Gram matrix of the candidate exponentials.
    Gram,
    /// Build the boundary matrix from the lambda set.
    BuildB,
    /// Test whether the boundary matrix is spectral over the window.
    CheckB,
    /// Exact translation-tiling check.
    Tile,
    /// Parseval defect sweep for the configured function.
    Parseval,
    /// Full spectral-vs-tiling comparison.
    Harness,
}

/// Run a parsed command line; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            let (module, operation) = e.provenance();
            let kind = match e.kind() {
                ErrorKind::Validation => "validation",
                ErrorKind::Numerical => "numerical",
            };
            let report = serde_json::json!({
                "module": module,
                "operation": operation,
                "kind": kind,
                "message": e.to_string(),
            });
            eprintln!("{report}");
            match e.kind() {
                ErrorKind::Validation => 2,
                ErrorKind::Numerical => 3,
            }
        }
    }
}

struct Ctx {
    config: RunConfig,
    out_dir: PathBuf,
    quad_order: usize,
    params: SpectrumParams,
    propagator: Propagator,
}

fn dispatch(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    // flags win
    if let Some(w) = &cli.window {
        config.window = Some([w[0], w[1]]);
    }
    if let Some(tol) = cli.tol {
        config.tol = Some(tol);
    }
    if let Some(q) = cli.quad_order {
        config.quad_order = Some(q);
    }
    if let Some(t) = cli.threads {
        config.threads = Some(t);
    }
    if let Some(out) = &cli.out {
        config.out_dir = Some(out.clone());
    }
    if let Some(p) = cli.propagator {
        config.propagator = Some(
            match p {
                PropagatorArg::Spectral => "spectral",
                PropagatorArg::Ray => "ray",
            }
            .to_string(),
        );
    }

    let params = SpectrumParams {
        tol_phase: config.tol.unwrap_or(1e-12),
        threads: config.threads.unwrap_or(1),
        ..Default::default()
    };
    let propagator = match config.propagator.as_deref() {
        None | Some("ray") => Propagator::Ray,
        Some("spectral") => Propagator::Spectral,
        Some(other) => {
            return Err(Error::Config(format!(
                "unknown propagator {other:?}; expected \"spectral\" or \"ray\""
            )))
        }
    };
    let ctx = Ctx {
        out_dir: config
            .out_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("out")),
        quad_order: config.quad_order.unwrap_or(DEFAULT_QUAD_ORDER),
        params,
        propagator,
        config,
    };
    std::fs::create_dir_all(&ctx.out_dir)?;

    match cli.command {
        Command::Spectrum => cmd_spectrum(&ctx),
        Command::Eigfun => cmd_eigfun(&ctx),
        Command::Resolvent => cmd_resolvent(&ctx),
        Command::Evolve => cmd_evolve(&ctx),
        Command::Gram => cmd_gram(&ctx),
        Command::BuildB => cmd_build_b(&ctx),
        Command::CheckB => cmd_check_b(&ctx),
        Command::Tile => cmd_tile(&ctx),
        Command::Parseval => cmd_parseval(&ctx),
        Command::Harness => cmd_harness(&ctx),
    }
}

/// Write bytes to `dir/name` through a temporary sibling and a rename.
fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let target = dir.join(name);
    let tmp = dir.join(format!("{name}.tmp"));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, &target)?;
    Ok(())
}

/// Materialize the configured function: quadrature samples plus an exact
/// pointwise evaluator for the ray propagator where one exists.
fn build_function(
    ctx: &Ctx,
    omega: &IntervalUnion,
    grid: &std::sync::Arc<QuadGrid>,
) -> Result<(SampledFunction, Box<dyn EvalOnOmega>)> {
    let spec = ctx
        .config
        .function
        .as_ref()
        .ok_or_else(|| Error::Config("config needs a \"function\" entry".into()))?;
    match spec {
        FunctionSpec::Bump { interval, frac } => {
            if *interval >= omega.n() {
                return Err(Error::Config(format!(
                    "bump interval {interval} out of range (n = {})",
                    omega.n()
                )));
            }
            let bump = SmoothBump::centered(omega, *interval, *frac);
            Ok((bump.sample_on(grid), Box::new(bump)))
        }
        FunctionSpec::Indicator { interval } => {
            if *interval >= omega.n() {
                return Err(Error::Config(format!(
                    "indicator interval {interval} out of range (n = {})",
                    omega.n()
                )));
            }
            let chi = PiecewiseExp::indicator(*interval, omega.n());
            Ok((chi.sample_on(grid), Box::new(chi)))
        }
        FunctionSpec::Exp { lambda } => {
            let e = PiecewiseExp::exponential(*lambda, omega.n());
            Ok((e.sample_on(grid), Box::new(e)))
        }
        FunctionSpec::Csv { path, traces } => {
            let traces = match traces {
                Some(tpath) => {
                    let text = std::fs::read_to_string(tpath)?;
                    let sidecar: TraceSidecar = serde_json::from_str(&text)?;
                    sidecar.to_traces(omega.n())?
                }
                None => None,
            };
            let file = std::fs::File::open(path)?;
            let f = sampled_from_csv(grid, file, traces)?;
            Ok((f.clone(), Box::new(f)))
        }
    }
}

fn cmd_spectrum(ctx: &Ctx) -> Result<()> {
    let omega = ctx.config.omega()?;
    let b = ctx.config.matrix(&omega)?;
    let window = ctx.config.window()?;
    let win = find_spectrum(&omega, &b, window, &ctx.params)?;
    let mut csv_bytes = Vec::new();
    spectrum_to_csv(&win, omega.n(), &mut csv_bytes)?;
    write_atomic(&ctx.out_dir, "spectrum.csv", &csv_bytes)?;
    write_atomic(
        &ctx.out_dir,
        "spectrum.json",
        spectrum_to_json(&win).as_bytes(),
    )?;
    println!(
        "spectrum: {} eigenvalues (with multiplicity) in [{}, {}]",
        win.count, window.0, window.1
    );
    Ok(())
}

fn cmd_eigfun(ctx: &Ctx) -> Result<()> {
    let omega = ctx.config.omega()?;
    let b = ctx.config.matrix(&omega)?;
    let window = ctx.config.window()?;
    let win = find_spectrum(&omega, &b, window, &ctx.params)?;
    let grid = QuadGrid::new(omega.clone(), ctx.quad_order);
    let mut manifest = Vec::new();
    for (k, ep) in win.eigenpairs.iter().enumerate() {
        for j in 0..ep.multiplicity() {
            let eps = crate::spectral::eigenfunction(ep, j)?;
            let sampled = eps.sample_on(&grid);
            let name = format!("eigfun_{k}_{j}.csv");
            let mut bytes = Vec::new();
            frame_to_csv(&sampled, &mut bytes)?;
            write_atomic(&ctx.out_dir, &name, &bytes)?;
            manifest.push(serde_json::json!({
                "file": name,
                "lambda": ep.lambda,
                "multiplicity": ep.multiplicity(),
                "basis_index": j,
            }));
        }
    }
    let manifest =
        serde_json::to_string_pretty(&serde_json::json!({ "eigenfunctions": manifest }))?;
    write_atomic(&ctx.out_dir, "eigfun_manifest.json", manifest.as_bytes())?;
    println!("eigfun: wrote {} eigenfunction tables", win.count);
    Ok(())
}

fn cmd_resolvent(ctx: &Ctx) -> Result<()> {
    let omega = ctx.config.omega()?;
    let b = ctx.config.matrix(&omega)?;
    let lam = ctx
        .config
        .resolvent_lambda
        .ok_or_else(|| Error::Config("config needs a \"resolvent_lambda\" entry".into()))?;
    let lambda = Complex64::new(lam[0], lam[1]);
    let grid = QuadGrid::new(omega.clone(), ctx.quad_order);
    let (g, _) = build_function(ctx, &omega, &grid)?;
    let f = resolvent_apply(&omega, &b, lambda, &g)?;
    let mut bytes = Vec::new();
    sampled_to_csv(&f, &mut bytes)?;
    write_atomic(&ctx.out_dir, "resolvent.csv", &bytes)?;
    let sidecar = serde_json::to_string_pretty(&TraceSidecar::from_traces(&f.traces))?;
    write_atomic(&ctx.out_dir, "resolvent_traces.json", sidecar.as_bytes())?;
    println!(
        "resolvent: applied at lambda = {}+{}i, output norm {}",
        lam[0],
        lam[1],
        f.norm()
    );
    Ok(())
}

fn cmd_evolve(ctx: &Ctx) -> Result<()> {
    let omega = ctx.config.omega()?;
    let b = ctx.config.matrix(&omega)?;
    let times = ctx
        .config
        .times
        .clone()
        .ok_or_else(|| Error::Config("config needs a \"times\" entry".into()))?;
    if times.is_empty() {
        return Err(Error::Config("\"times\" must not be empty".into()));
    }
    let grid = QuadGrid::new(omega.clone(), ctx.quad_order);
    let (sampled, exact) = build_function(ctx, &omega, &grid)?;

    let basis = match ctx.propagator {
        Propagator::Spectral => {
            let bound = match ctx.config.basis_bound {
                Some(bound) => bound,
                None => {
                    let w = ctx.config.window()?;
                    w.0.abs().max(w.1.abs())
                }
            };
            let win = find_spectrum(&omega, &b, (-bound, bound), &ctx.params)?;
            Some(EigenBasisTruncation::from_window(&win, &omega, bound)?)
        }
        Propagator::Ray => None,
    };

    let ray_params = RayParams::default();
    let mut norms = Vec::with_capacity(times.len());
    for (index, &t) in times.iter().enumerate() {
        let frame = match ctx.propagator {
            Propagator::Ray => {
                evolve_ray_function(&omega, &b, exact.as_ref(), t, &grid, &ray_params)?
            }
            Propagator::Spectral => {
                evolve_spectral(&omega, &sampled, t, basis.as_ref().expect("built above"))?
            }
        };
        norms.push(frame.norm());
        let mut bytes = Vec::new();
        frame_to_csv(&frame, &mut bytes)?;
        write_atomic(&ctx.out_dir, &format!("frame_{index}.csv"), &bytes)?;
    }
    let manifest = serde_json::to_string_pretty(&serde_json::json!({
        "times": times,
        "norms": norms,
        "propagator": match ctx.propagator {
            Propagator::Ray => "ray",
            Propagator::Spectral => "spectral",
        },
    }))?;
    write_atomic(&ctx.out_dir, "frames_manifest.json", manifest.as_bytes())?;
    println!("evolve: wrote {} frames", times.len());
    Ok(())
}

fn cmd_gram(ctx: &Ctx) -> Result<()> {
    let omega = ctx.config.omega()?;
    let lambda = ctx.config.lambda()?;
    let window = ctx.config.window()?;
    let realized = lambda.realize(window);
    let gram = gram_matrix(&omega, &realized);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["i", "j", "lambda_i", "lambda_j", "re", "im"])?;
    for i in 0..realized.len() {
        for j in 0..realized.len() {
            w.write_record([
                i.to_string(),
                j.to_string(),
                crate::fmt::f64_full(realized[i]),
                crate::fmt::f64_full(realized[j]),
                crate::fmt::f64_full(gram.matrix[(i, j)].re),
                crate::fmt::f64_full(gram.matrix[(i, j)].im),
            ])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    write_atomic(&ctx.out_dir, "gram.csv", &bytes)?;
    let json = serde_json::to_string_pretty(&serde_json::json!({
        "count": realized.len(),
        "max_offdiag": gram.max_offdiag,
    }))?;
    write_atomic(&ctx.out_dir, "gram.json", json.as_bytes())?;
    println!(
        "gram: {} frequencies, max off-diagonal {:.3e}",
        realized.len(),
        gram.max_offdiag
    );
    Ok(())
}

fn cmd_build_b(ctx: &Ctx) -> Result<()> {
    let omega = ctx.config.omega()?;
    let lambda = ctx.config.lambda()?;
    let window = ctx.config.window()?;
    let report = build_boundary_matrix(&omega, &lambda, window)?;
    let matrix_json = serde_json::to_string_pretty(&MatrixJson::save(&report.matrix))?;
    write_atomic(&ctx.out_dir, "matrix.json", matrix_json.as_bytes())?;
    let build_json = serde_json::to_string_pretty(&serde_json::json!({
        "spanning": report.spanning,
        "residual_max": report.residual_max,
        "raw_unitarity_defect": report.raw_unitarity_defect,
        "rank_growth": report.rank_growth,
    }))?;
    write_atomic(&ctx.out_dir, "build_report.json", build_json.as_bytes())?;
    println!(
        "build-b: solved on {:?}, max residual {:.3e}",
        report.spanning, report.residual_max
    );
    Ok(())
}

fn cmd_check_b(ctx: &Ctx) -> Result<()> {
    let omega = ctx.config.omega()?;
    let b = ctx.config.matrix(&omega)?;
    let window = ctx.config.window()?;
    let verdict = is_spectral_matrix(&omega, &b, window, &ctx.params)?;
    let json = serde_json::to_string_pretty(&verdict)?;
    write_atomic(&ctx.out_dir, "verdict.json", json.as_bytes())?;
    println!(
        "check-b: {} ({} eigenvalues in window)",
        match &verdict.classification {
            crate::spectraset::Classification::SpectralEvidence => "spectral evidence",
            crate::spectraset::Classification::NotSpectral { .. } => "not spectral",
            crate::spectraset::Classification::Inconclusive { .. } => "inconclusive",
        },
        verdict.eigenvalue_count
    );
    Ok(())
}

fn cmd_tile(ctx: &Ctx) -> Result<()> {
    let omega = ctx.config.omega()?;
    let gamma = ctx.config.gamma()?;
    let report = tiles_by(&omega, &gamma);
    let defects: Vec<serde_json::Value> = report
        .defects
        .iter()
        .map(|d| match d {
            TilingDefect::MeasureMismatch { covered, period } => serde_json::json!({
                "kind": "measure_mismatch",
                "covered": covered.to_string(),
                "period": period.to_string(),
            }),
            TilingDefect::Coverage {
                lo,
                hi,
                multiplicity,
            } => serde_json::json!({
                "kind": "coverage",
                "lo": lo.to_string(),
                "hi": hi.to_string(),
                "multiplicity": multiplicity,
            }),
        })
        .collect();
    let json = serde_json::to_string_pretty(&serde_json::json!({
        "tiles": report.tiles,
        "defects": defects,
    }))?;
    write_atomic(&ctx.out_dir, "tiling.json", json.as_bytes())?;
    println!(
        "tile: {}",
        if report.tiles {
            "tiles".to_string()
        } else {
            format!("does not tile ({} defects)", report.defects.len())
        }
    );
    Ok(())
}

fn cmd_parseval(ctx: &Ctx) -> Result<()> {
    let omega = ctx.config.omega()?;
    let lambda = ctx.config.lambda()?;
    let window = ctx.config.window()?;
    let grid = QuadGrid::new(omega.clone(), ctx.quad_order);
    let (f, _) = build_function(ctx, &omega, &grid)?;

    // defect sweep over nested sub-windows
    let bound = window.0.abs().max(window.1.abs());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["bound", "frequencies", "defect"])?;
    let mut last_defect = f64::NAN;
    for k in 1..=8 {
        let sub = bound * k as f64 / 8.0;
        let realized = lambda.realize((-sub, sub));
        let defect = parseval_defect(&omega, L2Ref::Sampled(&f), &realized)?;
        w.write_record([
            crate::fmt::f64_full(sub),
            realized.len().to_string(),
            crate::fmt::f64_full(defect),
        ])?;
        last_defect = defect;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    write_atomic(&ctx.out_dir, "parseval.csv", &bytes)?;
    let json = serde_json::to_string_pretty(&serde_json::json!({
        "window": [window.0, window.1],
        "defect": last_defect,
    }))?;
    write_atomic(&ctx.out_dir, "parseval.json", json.as_bytes())?;
    println!("parseval: defect {last_defect:.6e} over the full window");
    Ok(())
}

fn cmd_harness(ctx: &Ctx) -> Result<()> {
    let omega = ctx.config.omega()?;
    let lambda = ctx.config.lambda()?;
    let gamma = ctx.config.gamma()?;
    let window = ctx.config.window()?;
    let report = fuglede_harness(&omega, &lambda, &gamma, window, ctx.quad_order, &ctx.params)?;
    let json = serde_json::to_string_pretty(&report)?;
    write_atomic(&ctx.out_dir, "harness.json", json.as_bytes())?;
    print!("{}", report.summary());
    Ok(())
}
