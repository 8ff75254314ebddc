//! Command-line front end: pipeline runs, seminorm reports, the
//! counterexample growth table and the verification suites.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use vbmo::config::{self, RunConfig};
use vbmo::counterexample::ce_growth_demo;
use vbmo::decompose::{
    boundary_normal_sup, helmholtz_decompose, interior_divergence, l2_oracle,
};
use vbmo::error::{Error, FreezingError, NeumannError};
use vbmo::fields::io as field_io;
use vbmo::fields::seminorm::vbmo_norm;
use vbmo::verify;

#[derive(Parser)]
#[command(name = "vbmo", about = "Helmholtz decomposition with oscillation-seminorm diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full decomposition pipeline described by a config file.
    Decompose {
        #[arg(long)]
        config: PathBuf,
        /// Add a constant to the repair-stage flux data, breaking Neumann
        /// compatibility on purpose.
        #[arg(long, default_value_t = 0.0)]
        force_trace: f64,
    },
    /// Seminorm report for a stored vector field on a domain.
    Seminorm {
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        domain: PathBuf,
        #[arg(long, default_value_t = config::DEFAULT_MU)]
        mu: f64,
        #[arg(long, default_value_t = config::DEFAULT_NU)]
        nu: f64,
    },
    /// Tangential growth table for the half-space counterexample.
    Counterexample {
        /// Derivative orders to tabulate (at least 1).
        #[arg(long)]
        levels: u32,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a verification suite: gauss, poisson or parity.
    Verify { suite: String },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("FAILED stage={} error={e}", stage_name(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}

fn stage_name(e: &Error) -> &'static str {
    match e {
        Error::Config(_) => "config",
        Error::Geometry(_) => "geometry",
        Error::Field(_) => "fields",
        Error::Singular(_) => "singular",
        Error::Freezing(_) => "freezing",
        Error::Neumann(_) => "neumann",
        Error::Extension(_) => "extension",
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::Geometry(_) => 3,
        Error::Field(_) => 4,
        Error::Singular(_) => 5,
        Error::Freezing(_) => 6,
        Error::Neumann(NeumannError::CompatibilityViolation(..)) => 7,
        Error::Neumann(_) => 8,
        Error::Extension(_) => 9,
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Decompose { config, force_trace } => cmd_decompose(&config, force_trace),
        Command::Seminorm { field, domain, mu, nu } => cmd_seminorm(&field, &domain, mu, nu),
        Command::Counterexample { levels, out } => cmd_counterexample(levels, &out),
        Command::Verify { suite } => cmd_verify(&suite),
    }
}

fn cmd_decompose(config_path: &std::path::Path, force_trace: f64) -> Result<ExitCode, Error> {
    let cfg = RunConfig::load(config_path)?;
    let domain = cfg.load_domain()?;
    let v = cfg.load_field()?;
    let mut params = cfg.decompose_params(domain.rho);
    params.force_trace = force_trace;

    let dec = helmholtz_decompose(&domain, &v, &params)?;

    // Series health gate: the worst frozen-series residual must clear the
    // configured tolerance, otherwise the run fails at the freezing stage.
    let worst_residual = dec
        .charts
        .iter()
        .map(|c| c.residual_rel)
        .fold(0.0f64, f64::max);
    if worst_residual > cfg.series_tol() {
        return Err(FreezingError::ConvergenceFailure(worst_residual, 0).into());
    }
    let max_ratio = dec.charts.iter().map(|c| c.max_ratio).fold(0.0f64, f64::max);

    // Independent oracle run and the logged ratios.
    let (_, v0_ref) = l2_oracle(&domain, &v, &params)?;
    let dist = domain.distance_field(v.grid);
    let margin = 2.0 * v.grid.h();
    // Interior rms of the input field, the scale for the relative entries.
    let (mut acc, mut den, mut num, mut cnt) = (0.0, 0.0, 0.0, 0usize);
    for k in 0..v.grid.len() {
        if dist.data[k] >= 0.0 {
            acc += v.x[k] * v.x[k] + v.y[k] * v.y[k];
            cnt += 1;
        }
        if dist.data[k] >= margin {
            num += (dec.v0.x[k] - v0_ref.x[k]).powi(2) + (dec.v0.y[k] - v0_ref.y[k]).powi(2);
            den += v.x[k] * v.x[k] + v.y[k] * v.y[k];
        }
    }
    let field_rms = (acc / cnt.max(1) as f64).sqrt();
    // Deviation from the oracle, relative to the input field.
    let oracle_l2_dev = (num / den.max(1e-300)).sqrt();
    let div_v0 = interior_divergence(&domain, &dec.v0, 3.0 * v.grid.h());
    let normal_sup = boundary_normal_sup(&domain, &dec.v0, 512);

    let collar = domain.collar_field(v.grid, 0.95);
    let v_report = vbmo_norm(&v, &domain, &collar, cfg.mu(), cfg.nu())?;
    let v0_report = vbmo_norm(&dec.v0, &domain, &collar, cfg.mu(), cfg.nu())?;

    std::fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", cfg.out_dir.display())))?;
    field_io::save_vector(&cfg.out_dir.join("v0.field"), &dec.v0)?;
    field_io::save_vector(&cfg.out_dir.join("grad_q.field"), &dec.grad_q)?;
    field_io::save_scalar(&cfg.out_dir.join("q1.field"), &dec.q1)?;
    field_io::save_scalar(&cfg.out_dir.join("q2.field"), &dec.q2)?;

    let mut diag: BTreeMap<&'static str, Value> = BTreeMap::new();
    diag.insert("charts", json!(dec.charts.len()));
    diag.insert("max_contraction_ratio", json!(max_ratio));
    diag.insert("worst_series_residual", json!(worst_residual));
    diag.insert("neumann_iterations", json!(dec.neumann_iterations));
    diag.insert("neumann_residual", json!(dec.neumann_residual));
    diag.insert("oracle_l2_dev", json!(oracle_l2_dev));
    diag.insert("div_v0", json!(div_v0));
    diag.insert("div_v0_rel", json!(div_v0 / field_rms.max(1e-300)));
    diag.insert("normal_trace_sup", json!(normal_sup));
    diag.insert("normal_trace_rel", json!(normal_sup / v_report.total.max(1e-300)));
    diag.insert("field_rms", json!(field_rms));
    diag.insert("input_bmo", json!(v_report.bmo));
    diag.insert("input_bnu", json!(v_report.bnu));
    diag.insert("input_vbmo", json!(v_report.total));
    diag.insert("v0_bmo", json!(v0_report.bmo));
    diag.insert("v0_bnu", json!(v0_report.bnu));
    diag.insert("v0_vbmo", json!(v0_report.total));
    diag.insert(
        "vbmo_ratio",
        json!(v0_report.total / v_report.total.max(1e-300)),
    );
    let text = serde_json::to_string_pretty(&diag)
        .map_err(|e| Error::Config(format!("diagnostics serialization: {e}")))?;
    std::fs::write(cfg.out_dir.join("diagnostics.json"), text)
        .map_err(|e| Error::Config(format!("cannot write diagnostics: {e}")))?;

    println!(
        "decompose ok: oracle_l2_dev={oracle_l2_dev:.3e} div_v0={div_v0:.3e} \
         normal_sup={normal_sup:.3e} ratio={max_ratio:.3} residual={worst_residual:.3e}"
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_seminorm(
    field: &std::path::Path,
    domain_path: &std::path::Path,
    mu: f64,
    nu: f64,
) -> Result<ExitCode, Error> {
    if !(mu > 0.0) || !(nu > 0.0) {
        return Err(Error::Config(format!("mu = {mu}, nu = {nu} must be positive")));
    }
    let v = field_io::load_vector(field)?;
    let domain = config::load_domain(domain_path, None)?;
    let collar = domain.collar_field(v.grid, 0.95);
    let report = vbmo_norm(&v, &domain, &collar, mu, nu)?;
    let text = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::Config(format!("report serialization: {e}")))?;
    println!("{text}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_counterexample(levels: u32, out: &std::path::Path) -> Result<ExitCode, Error> {
    if levels == 0 {
        return Err(Error::Config("levels must be at least 1".into()));
    }
    let rows = ce_growth_demo(levels);
    let mut csv = String::from("level,scale,tangential,normal,normal_sup\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{:.6e},{:.6e},{:.6e},{:.6e}\n",
            r.level, r.scale, r.tangential, r.normal, r.normal_sup
        ));
    }
    std::fs::write(out, csv)
        .map_err(|e| Error::Config(format!("cannot write {}: {e}", out.display())))?;
    let increasing = rows.windows(2).all(|w| w[1].tangential > w[0].tangential);
    let normal_ok = rows
        .iter()
        .all(|r| r.normal <= 0.5 && r.normal_sup <= 0.5 + 1e-10);
    let span = rows.last().map(|r| r.tangential).unwrap_or(0.0)
        / rows.first().map(|r| r.tangential.max(1e-300)).unwrap_or(1.0);
    println!(
        "counterexample: tangential {} (span {span:.3}), normal bound {}",
        if increasing { "strictly increasing" } else { "NOT monotone" },
        if normal_ok { "holds" } else { "VIOLATED" }
    );
    Ok(if increasing && normal_ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn cmd_verify(suite: &str) -> Result<ExitCode, Error> {
    let report = match suite {
        "gauss" => verify::gauss_identity(50, 7)?,
        "poisson" => verify::poisson_bound(20, 11)?,
        "parity" => verify::parity_suite()?,
        other => {
            return Err(Error::Config(format!(
                "unknown suite '{other}' (expected gauss, poisson or parity)"
            )))
        }
    };
    let text = serde_json::to_string(&report)
        .map_err(|e| Error::Config(format!("report serialization: {e}")))?;
    println!("{text}");
    Ok(if report.pass { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
