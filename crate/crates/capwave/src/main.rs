//! Command-line front end: laminar-flow tables, dispersion scans,
//! bifurcation-point search, branch continuation, and revalidation of stored
//! solution files.
//!
//! Configuration comes from an optional JSON file; command-line flags
//! override config keys. Data files are byte-deterministic for a given
//! config and version; run metadata goes to a `.meta.json` sidecar. Exit
//! codes: 0 success, 2 invalid input, 3 empty result, 4 numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use capwave::continuation::{run_branch, ContinuationConfig};
use capwave::dispersion::{dispersion_from_flow, find_bifurcation_points, pruefer_slope};
use capwave::error::Error;
use capwave::flows::{is_unidirectional, laminar_flow, VorticitySpec};
use capwave::grid::GridSpec;
use capwave::io::{
    bifurcation_points_csv, branch_summary_csv, branch_to_ndjson, dispersion_csv, laminar_csv,
    parse_branch_file, validate_record, DispersionRow, LaminarRow, ValidationThresholds,
};
use capwave::operator::WaveProblem;
use capwave::Physics;

#[derive(Parser)]
#[command(
    name = "capwave",
    version,
    about = "Steady periodic capillary-gravity water waves with vorticity: \
             dispersion analysis and branch continuation"
)]
struct Cli {
    /// JSON config file; flags override config keys
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (CAPWAVE_OUT overrides this)
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    #[command(flatten)]
    physical: PhysicalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct PhysicalArgs {
    /// Wave period L [default: 2 pi]
    #[arg(long, global = true)]
    period: Option<f64>,
    /// Conformal mean depth h [default: 1]
    #[arg(long, global = true)]
    depth: Option<f64>,
    /// Gravitational constant g [default: 9.81]
    #[arg(long, global = true)]
    gravity: Option<f64>,
    /// Surface tension coefficient sigma [default: 0.074]
    #[arg(long, global = true)]
    sigma: Option<f64>,
    /// Vorticity family: "constant:G", "affine:A,B", or "poly:c0,c1,..."
    /// [default: constant:0]
    #[arg(long, global = true)]
    vorticity: Option<String>,
    /// Number of retained cosine modes N [default: 64]
    #[arg(long, global = true)]
    n_modes: Option<usize>,
    /// Number of vertical intervals M [default: 200]
    #[arg(long, global = true)]
    m_levels: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate laminar flows over a lambda grid (CSV: lambda, m, psi_min,
    /// unidirectional)
    Trivial {
        #[arg(long, allow_negative_numbers = true)]
        lambda_min: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        lambda_max: Option<f64>,
        /// Number of lambda samples
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Tabulate the dispersion relation over wavenumbers and a lambda window
    Dispersion {
        #[arg(long, allow_negative_numbers = true)]
        lambda_min: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        lambda_max: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        /// Largest wavenumber index k in the table
        #[arg(long)]
        k_max: Option<usize>,
    },
    /// Locate roots of the dispersion relation at a fixed wavenumber
    BifurcationPoints {
        #[arg(long)]
        k0: Option<usize>,
        #[arg(long, allow_negative_numbers = true)]
        lambda_min: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        lambda_max: Option<f64>,
    },
    /// Switch onto a branch at a bifurcation point and trace it
    Continue {
        #[arg(long)]
        k0: Option<usize>,
        #[arg(long, allow_negative_numbers = true)]
        lambda_min: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        lambda_max: Option<f64>,
        /// Signed amplitude of the first point (sign picks the half-branch)
        #[arg(long, allow_negative_numbers = true)]
        s0: Option<f64>,
        /// Which root in the window to use when several are found
        #[arg(long)]
        root_index: Option<usize>,
        #[arg(long)]
        max_steps: Option<usize>,
        #[arg(long)]
        ds0: Option<f64>,
    },
    /// Recompute residuals of stored solution records
    Validate {
        /// Solution or branch file (line-delimited records)
        file: PathBuf,
        #[arg(long)]
        f_tol: Option<f64>,
        #[arg(long)]
        bernoulli_tol: Option<f64>,
        #[arg(long)]
        harmonicity_tol: Option<f64>,
    },
}

/// Config-file schema; every field optional so flags and defaults can fill
/// the gaps.
#[derive(Debug, Clone, Default, serde::Deserialize, serde::Serialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    physical: Option<PhysicalConfig>,
    vorticity: Option<String>,
    grid: Option<GridConfig>,
    tolerances: Option<ToleranceConfig>,
    lambda_window: Option<(f64, f64)>,
    lambda_samples: Option<usize>,
    k0: Option<usize>,
    k_max: Option<usize>,
    continuation: Option<ContinuationFileConfig>,
    output_dir: Option<String>,
}

#[derive(Debug, Clone, Default, serde::Deserialize, serde::Serialize)]
#[serde(deny_unknown_fields)]
struct PhysicalConfig {
    #[serde(rename = "L")]
    period: Option<f64>,
    h: Option<f64>,
    g: Option<f64>,
    sigma: Option<f64>,
}

#[derive(Debug, Clone, Default, serde::Deserialize, serde::Serialize)]
#[serde(deny_unknown_fields)]
struct GridConfig {
    #[serde(rename = "N")]
    n_modes: Option<usize>,
    #[serde(rename = "M")]
    m_levels: Option<usize>,
}

#[derive(Debug, Clone, Default, serde::Deserialize, serde::Serialize)]
#[serde(deny_unknown_fields)]
struct ToleranceConfig {
    ode: Option<f64>,
    newton: Option<f64>,
}

#[derive(Debug, Clone, Default, serde::Deserialize, serde::Serialize)]
#[serde(deny_unknown_fields)]
struct ContinuationFileConfig {
    ds0: Option<f64>,
    ds_min: Option<f64>,
    ds_max: Option<f64>,
    max_steps: Option<usize>,
    s0: Option<f64>,
    min_k2_stop: Option<f64>,
    min_depth_stop_frac: Option<f64>,
    max_curvature_stop: Option<f64>,
    lambda_bound: Option<f64>,
    amplitude_stop: Option<f64>,
    vorticity_lp_stop: Option<f64>,
}

/// Fully resolved run parameters.
struct Resolved {
    problem: WaveProblem,
    lambda_window: (f64, f64),
    lambda_samples: usize,
    k0: usize,
    k_max: usize,
    continuation: ContinuationConfig,
    s0: f64,
    out_dir: PathBuf,
    config_echo: String,
}

fn resolve(cli: &Cli) -> Result<Resolved, Error> {
    let file: FileConfig = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Parse { line: e.line(), message: e.to_string() })?
        }
        None => FileConfig::default(),
    };
    let phys_file = file.physical.clone().unwrap_or_default();
    let grid_file = file.grid.clone().unwrap_or_default();
    let tol_file = file.tolerances.clone().unwrap_or_default();
    let cont_file = file.continuation.clone().unwrap_or_default();

    let period = cli.physical.period.or(phys_file.period).unwrap_or(2.0 * std::f64::consts::PI);
    let depth = cli.physical.depth.or(phys_file.h).unwrap_or(1.0);
    let gravity = cli.physical.gravity.or(phys_file.g).unwrap_or(9.81);
    let sigma = cli.physical.sigma.or(phys_file.sigma).unwrap_or(0.074);
    let n_modes = cli.physical.n_modes.or(grid_file.n_modes).unwrap_or(64);
    let m_levels = cli.physical.m_levels.or(grid_file.m_levels).unwrap_or(200);
    let vorticity_text = cli
        .physical
        .vorticity
        .clone()
        .or(file.vorticity.clone())
        .unwrap_or_else(|| "constant:0".to_string());

    let grid = GridSpec::new(period, depth, n_modes, m_levels)?;
    let phys = Physics::new(gravity, sigma)?;
    let vorticity = VorticitySpec::parse(&vorticity_text)?;
    if !vorticity.has_bounded_slope() {
        eprintln!(
            "warning: vorticity '{vorticity_text}' has unbounded slope; runs are valid only \
             while the laminar profile reaches the bed"
        );
    }
    let mut problem = WaveProblem::new(grid, phys, vorticity);
    if let Some(t) = tol_file.ode {
        problem.ode_tol = t;
    }

    let mut continuation = ContinuationConfig {
        ds0: cont_file.ds0.unwrap_or(0.01),
        ds_min: cont_file.ds_min.unwrap_or(1e-6),
        ds_max: cont_file.ds_max.unwrap_or(0.1),
        max_steps: cont_file.max_steps.unwrap_or(40),
        ..Default::default()
    };
    if let Some(t) = tol_file.newton {
        continuation.newton_tol = t;
    }
    if let Some(v) = cont_file.min_k2_stop {
        continuation.min_k2_stop = v;
    }
    if let Some(v) = cont_file.min_depth_stop_frac {
        continuation.min_depth_stop_frac = v;
    }
    if let Some(v) = cont_file.max_curvature_stop {
        continuation.max_curvature_stop = v;
    }
    if let Some(v) = cont_file.lambda_bound {
        continuation.lambda_bound = v;
    }
    if let Some(v) = cont_file.amplitude_stop {
        continuation.amplitude_stop = v;
    }
    if let Some(v) = cont_file.vorticity_lp_stop {
        continuation.vorticity_lp_stop = v;
    }

    let out_dir = std::env::var_os("CAPWAVE_OUT")
        .map(PathBuf::from)
        .or_else(|| cli.out_dir.clone())
        .or_else(|| file.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));

    let config_echo = serde_json::to_string_pretty(&serde_json::json!({
        "physical": {"L": period, "h": depth, "g": gravity, "sigma": sigma},
        "vorticity": vorticity_text,
        "grid": {"N": n_modes, "M": m_levels},
        "tolerances": {"ode": problem.ode_tol, "newton": continuation.newton_tol},
    }))
    .expect("config echo serialises");

    Ok(Resolved {
        problem,
        lambda_window: file.lambda_window.unwrap_or((0.5, 5.0)),
        lambda_samples: file.lambda_samples.unwrap_or(101),
        k0: file.k0.unwrap_or(1),
        k_max: file.k_max.unwrap_or(8),
        continuation,
        s0: cont_file.s0.unwrap_or(0.01),
        out_dir,
        config_echo,
    })
}

fn write_output(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, Error> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, contents)?;
    Ok(path)
}

fn write_sidecar(dir: &Path, name: &str, command: &str, echo: &str) -> Result<(), Error> {
    let body = format!(
        "{{\n  \"command\": \"{command}\",\n  \"version\": \"{}\",\n  \"config\": {echo}\n}}\n",
        env!("CARGO_PKG_VERSION")
    );
    write_output(dir, name, &body)?;
    Ok(())
}

fn lambda_grid(window: (f64, f64), samples: usize) -> Vec<f64> {
    let n = samples.max(2);
    (0..n).map(|i| window.0 + (window.1 - window.0) * i as f64 / (n - 1) as f64).collect()
}

fn require_window_excludes_zero(window: (f64, f64)) -> Result<(), Error> {
    if window.0 <= 0.0 && window.1 >= 0.0 {
        return Err(Error::InvalidInput(format!(
            "lambda window ({}, {}) must exclude 0",
            window.0, window.1
        )));
    }
    Ok(())
}

fn cmd_trivial(r: &Resolved, window: (f64, f64), samples: usize) -> Result<ExitCode, Error> {
    let mut rows = Vec::new();
    for lambda in lambda_grid(window, samples) {
        let flow = laminar_flow(lambda, &r.problem.vorticity, r.problem.grid, r.problem.ode_tol)?;
        let psi_min = flow.psi.iter().fold(f64::INFINITY, |m, v| m.min(*v));
        rows.push(LaminarRow {
            lambda,
            m: flow.m,
            psi_min,
            unidirectional: is_unidirectional(&flow),
        });
    }
    let path = write_output(&r.out_dir, "trivial.csv", &laminar_csv(&rows))?;
    write_sidecar(&r.out_dir, "trivial.meta.json", "trivial", &r.config_echo)?;
    println!("wrote {} ({} rows)", path.display(), rows.len());
    Ok(ExitCode::SUCCESS)
}

fn cmd_dispersion(
    r: &Resolved,
    window: (f64, f64),
    samples: usize,
    k_max: usize,
) -> Result<ExitCode, Error> {
    require_window_excludes_zero(window)?;
    let mut rows = Vec::new();
    for lambda in lambda_grid(window, samples) {
        let flow = laminar_flow(lambda, &r.problem.vorticity, r.problem.grid, r.problem.ode_tol)?;
        for k in 1..=k_max {
            let mu = -(k as f64 * r.problem.grid.nu()).powi(2);
            let d = dispersion_from_flow(mu, &flow, &r.problem.phys, r.problem.ode_tol)?;
            let pruefer = pruefer_slope(mu, &flow, r.problem.ode_tol)?;
            rows.push(DispersionRow { k, lambda, d_value: d, branch_index: pruefer.branch_index });
        }
    }
    let path = write_output(&r.out_dir, "dispersion.csv", &dispersion_csv(&rows))?;
    write_sidecar(&r.out_dir, "dispersion.meta.json", "dispersion", &r.config_echo)?;
    println!("wrote {} ({} rows)", path.display(), rows.len());
    Ok(ExitCode::SUCCESS)
}

fn cmd_bifurcation_points(r: &Resolved, k0: usize, window: (f64, f64)) -> Result<ExitCode, Error> {
    require_window_excludes_zero(window)?;
    let points = find_bifurcation_points(
        k0,
        &r.problem.vorticity,
        r.problem.grid,
        &r.problem.phys,
        window,
        r.problem.ode_tol,
    )?;
    let path =
        write_output(&r.out_dir, "bifurcation_points.csv", &bifurcation_points_csv(&points))?;
    write_sidecar(
        &r.out_dir,
        "bifurcation_points.meta.json",
        "bifurcation-points",
        &r.config_echo,
    )?;
    println!("wrote {} ({} roots)", path.display(), points.len());
    if points.is_empty() {
        eprintln!("error: 3: no dispersion roots in the window");
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_continue(
    r: &Resolved,
    k0: usize,
    window: (f64, f64),
    s0: f64,
    root_index: usize,
) -> Result<ExitCode, Error> {
    require_window_excludes_zero(window)?;
    let points = find_bifurcation_points(
        k0,
        &r.problem.vorticity,
        r.problem.grid,
        &r.problem.phys,
        window,
        r.problem.ode_tol,
    )?;
    if points.is_empty() {
        eprintln!("error: 3: no dispersion roots in the window");
        return Ok(ExitCode::from(3));
    }
    let bp = points.get(root_index).ok_or_else(|| {
        Error::InvalidInput(format!(
            "root index {root_index} out of range ({} roots found)",
            points.len()
        ))
    })?;
    let branch = run_branch(&r.problem, bp, s0, &r.continuation)?;
    let worst_tail = branch
        .points
        .iter()
        .map(|pt| capwave::spectral::spectrum_tail(&pt.state.w))
        .fold(0.0_f64, f64::max);
    if worst_tail > capwave::spectral::SPECTRUM_DROP_TOL {
        eprintln!(
            "warning: surface spectrum tail reached {worst_tail:.1e} (drop tolerance \
             {:.0e}); raise N to keep products alias-free",
            capwave::spectral::SPECTRUM_DROP_TOL
        );
    }
    let ndjson = branch_to_ndjson(&r.problem, &branch);
    let path = write_output(&r.out_dir, "branch.ndjson", &ndjson)?;
    let csv_path = write_output(&r.out_dir, "branch_summary.csv", &branch_summary_csv(&branch))?;
    write_sidecar(&r.out_dir, "branch.meta.json", "continue", &r.config_echo)?;
    println!(
        "wrote {} and {} ({} points, termination {:?})",
        path.display(),
        csv_path.display(),
        branch.points.len(),
        branch.termination
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(file: &Path, thresholds: &ValidationThresholds) -> Result<ExitCode, Error> {
    let text = std::fs::read_to_string(file)?;
    let (records, termination) = parse_branch_file(&text)?;
    if records.is_empty() {
        eprintln!("error: 3: no records in {}", file.display());
        return Ok(ExitCode::from(3));
    }
    let mut all_pass = true;
    for (i, rec) in records.iter().enumerate() {
        let report = validate_record(&rec.record, thresholds)?;
        all_pass &= report.pass;
        println!(
            "record {i}: step={} F={:.3e} bernoulli={:.3e} harmonicity={:.3e} min_K2={:.3e} \
             self_intersecting={} pass={}",
            rec.step,
            report.f_residual,
            report.bernoulli_residual,
            report.harmonicity_residual,
            report.diagnostics.min_k2,
            report.diagnostics.self_intersecting,
            report.pass
        );
    }
    if let Some(t) = termination {
        println!("termination: {t:?}");
    }
    println!("validated {} records: {}", records.len(), if all_pass { "PASS" } else { "FAIL" });
    if all_pass {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("error: 4: validation failed");
        Ok(ExitCode::from(4))
    }
}

fn run(cli: &Cli) -> Result<ExitCode, Error> {
    let r = resolve(cli)?;
    match &cli.command {
        Command::Trivial { lambda_min, lambda_max, samples } => {
            let window =
                (lambda_min.unwrap_or(r.lambda_window.0), lambda_max.unwrap_or(r.lambda_window.1));
            cmd_trivial(&r, window, samples.unwrap_or(r.lambda_samples))
        }
        Command::Dispersion { lambda_min, lambda_max, samples, k_max } => {
            let window =
                (lambda_min.unwrap_or(r.lambda_window.0), lambda_max.unwrap_or(r.lambda_window.1));
            cmd_dispersion(
                &r,
                window,
                samples.unwrap_or(r.lambda_samples),
                k_max.unwrap_or(r.k_max),
            )
        }
        Command::BifurcationPoints { k0, lambda_min, lambda_max } => {
            let window =
                (lambda_min.unwrap_or(r.lambda_window.0), lambda_max.unwrap_or(r.lambda_window.1));
            cmd_bifurcation_points(&r, k0.unwrap_or(r.k0), window)
        }
        Command::Continue { k0, lambda_min, lambda_max, s0, root_index, max_steps, ds0 } => {
            let window =
                (lambda_min.unwrap_or(r.lambda_window.0), lambda_max.unwrap_or(r.lambda_window.1));
            let mut resolved = r;
            if let Some(n) = max_steps {
                resolved.continuation.max_steps = *n;
            }
            if let Some(d) = ds0 {
                resolved.continuation.ds0 = *d;
                resolved.continuation.ds_max = resolved.continuation.ds_max.max(*d);
            }
            let s0 = s0.unwrap_or(resolved.s0);
            cmd_continue(&resolved, k0.unwrap_or(resolved.k0), window, s0, root_index.unwrap_or(0))
        }
        Command::Validate { file, f_tol, bernoulli_tol, harmonicity_tol } => {
            let defaults = ValidationThresholds::default();
            let thresholds = ValidationThresholds {
                f_residual: f_tol.unwrap_or(defaults.f_residual),
                bernoulli_residual: bernoulli_tol.unwrap_or(defaults.bernoulli_residual),
                harmonicity_residual: harmonicity_tol.unwrap_or(defaults.harmonicity_residual),
            };
            cmd_validate(file, &thresholds)
        }
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::InvalidInput(_) | Error::Parse { .. } | Error::NonzeroMean { .. } | Error::Io(_) => {
            2
        }
        Error::Integration(_)
        | Error::NewtonFailure { .. }
        | Error::ConformalityLoss { .. }
        | Error::DirichletSpectrum { .. }
        | Error::Internal(_) => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            let code = exit_code_for(&e);
            eprintln!("error: {code}: {e}");
            ExitCode::from(code)
        }
    }
}
