use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{debug, info};

use riskbound::error::{AppError, AppResult};
use riskbound::experiments::{
    run_clt, run_stability, with_threads, write_clt_outputs, write_stability_outputs, CltConfig,
    StabilityConfig,
};
use riskbound::formats::{read_json, write_json, InstanceJson, SolutionJson};
use riskbound::mps::write_mps;
use riskbound::sigma::{parse_sigma_spec, SigmaJson};
use riskbound_core::bounds::{build_mes_lp, build_msp_lp};
use riskbound_core::lp::LinearProgram;
use riskbound_core::{
    brute_force_mes, discretize_spectrum, solve_mes, solve_msp, verify_duality, Coupling, Instance,
};

/// Worst-case spectral risk of L(X, Y) given only the marginals.
#[derive(Parser)]
#[command(name = "riskbound", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Maximum expected shortfall over all couplings.
    Mes {
        instance: PathBuf,
        /// Level; defaults to the instance's `es` sigma.
        #[arg(long)]
        alpha: Option<f64>,
        /// Solution JSON path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the LP in fixed MPS format.
        #[arg(long)]
        dump_mps: Option<PathBuf>,
    },
    /// Maximum spectral risk over all couplings.
    Msp {
        instance: PathBuf,
        /// es:A, flat, power-sqrt, pc:B1,../L1,.. or table:U:S,..
        #[arg(long)]
        sigma_spec: Option<String>,
        /// Grid size for spectra without an exact grid.
        #[arg(long, default_value_t = 64)]
        levels: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        dump_mps: Option<PathBuf>,
    },
    /// Sampling distribution of the optimal value.
    Clt {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Value changes under perturbed marginals.
    Stability {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Independent threshold-scan value of the maximum expected shortfall.
    Oracle {
        instance: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
        /// Threshold grid points.
        #[arg(long, default_value_t = 256)]
        grid: usize,
    },
}

fn init_logging() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RISKBOUND_LOG", "warn"))
        .format_timestamp(None)
        .init();
}

fn load_instance(path: &Path) -> AppResult<(InstanceJson, Instance)> {
    let json: InstanceJson = read_json(path)?;
    let instance = json.to_instance()?;
    Ok((json, instance))
}

fn pick_alpha(flag: Option<f64>, json: &InstanceJson) -> AppResult<f64> {
    match (flag, &json.sigma) {
        (Some(a), _) => Ok(a),
        (None, Some(SigmaJson::Es { alpha })) => Ok(*alpha),
        _ => Err(AppError::Config("no --alpha and the instance has no es sigma".into())),
    }
}

fn dump(lp: &LinearProgram, name: &str, path: &Path) -> AppResult<()> {
    let file = fs::File::create(path).map_err(|e| AppError::io(path, e))?;
    write_mps(lp, name, &mut BufWriter::new(file)).map_err(|e| AppError::io(path, e))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn print_coupling(c: &Coupling) {
    let m = c.cols();
    let cells: Vec<String> = c
        .matrix()
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 1e-10)
        .map(|(k, p)| format!("({}, {}) {p:.6}", k / m, k % m))
        .collect();
    println!("nonzero cells: {}", cells.len());
    for cell in cells {
        println!("  {cell}");
    }
}

fn save_solution(sol: &SolutionJson, instance: &Instance, out: Option<&Path>) -> AppResult<()> {
    if let Some(path) = out {
        write_json(path, sol)?;
        // What was written must check out on its own.
        let back: SolutionJson = read_json(path)?;
        back.verify(instance)?;
        info!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_mes(path: &Path, alpha: Option<f64>, out: Option<&Path>, mps: Option<&Path>) -> AppResult<()> {
    let (json, inst) = load_instance(path)?;
    let alpha = pick_alpha(alpha, &json)?;
    if let Some(p) = mps {
        dump(&build_mes_lp(&inst.mu, &inst.nu, &inst.loss, alpha)?, "MES", p)?;
    }
    let sol = solve_mes(&inst.mu, &inst.nu, &inst.loss, alpha)?;
    let report = verify_duality(&sol, &inst.mu, &inst.nu, &inst.loss)?;
    println!("value: {:.12}", sol.value);
    println!("gap: {:.3e}", report.gap);
    println!("iterations: {}", sol.iterations);
    print_coupling(&sol.coupling);
    save_solution(&SolutionJson::from_mes(&sol), &inst, out)
}

fn cmd_msp(
    path: &Path,
    spec: Option<&str>,
    levels: usize,
    out: Option<&Path>,
    mps: Option<&Path>,
) -> AppResult<()> {
    let (json, inst) = load_instance(path)?;
    let sigma = match (spec, &json.sigma) {
        (Some(s), _) => parse_sigma_spec(s)?,
        (None, Some(s)) => s.clone(),
        (None, None) => return Err(AppError::Config("no --sigma-spec and no sigma in the instance".into())),
    };
    let grid = discretize_spectrum(&sigma.to_function()?, levels)?;
    debug!("grid: z0 = {}, {} levels", grid.z0(), grid.len());
    if let Some(p) = mps {
        dump(&build_msp_lp(&inst.mu, &inst.nu, &inst.loss, &grid)?, "MSP", p)?;
    }
    let sol = solve_msp(&inst.mu, &inst.nu, &inst.loss, &grid)?;
    let report = verify_duality(&sol, &inst.mu, &inst.nu, &inst.loss)?;
    println!("value: {:.12}", sol.value);
    println!("gap: {:.3e}", report.gap);
    println!("grid levels: {}", grid.len());
    println!("iterations: {}", sol.iterations);
    print_coupling(&sol.coupling);
    save_solution(&SolutionJson::from_msp(&sol), &inst, out)
}

fn config_base(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn cmd_clt(path: &Path, seed: Option<u64>, threads: Option<usize>, out: Option<PathBuf>) -> AppResult<()> {
    let mut config: CltConfig = read_json(path)?;
    if let Some(s) = seed {
        config.seed = s;
    }
    if threads.is_some() {
        config.threads = threads;
    }
    let base = config_base(path);
    let dir = out
        .or_else(|| config.out.as_ref().map(|o| base.join(o)))
        .unwrap_or_else(|| PathBuf::from("clt-out"));
    let outcome = with_threads(config.threads, || run_clt(&config, &base))??;
    write_clt_outputs(&outcome, config.bins, &dir)?;
    let s = &outcome.summary;
    println!("{} {}: R = {}, seed = {}", s.model, s.statistic, s.replications, s.seed);
    println!("mean {:.6} sd {:.6}", s.mean, s.sd);
    match s.normality {
        Some(t) => println!(
            "Anderson-Darling A* = {:.4}, p = {:.4}, {}",
            t.statistic,
            t.p_value,
            if t.reject_at_5pct { "normality rejected at 5%" } else { "normality not rejected at 5%" }
        ),
        None => println!("too few replications for a normality test"),
    }
    if let Some(g) = s.gev {
        println!("GEV fit: location {:.4} scale {:.4} shape {:.4}", g.location, g.scale, g.shape);
    }
    println!("outputs in {}", dir.display());
    Ok(())
}

fn cmd_stability(path: &Path, seed: Option<u64>, out: Option<PathBuf>) -> AppResult<()> {
    let mut config: StabilityConfig = read_json(path)?;
    if let Some(s) = seed {
        config.seed = s;
    }
    let base = config_base(path);
    let dir = out
        .or_else(|| config.out.as_ref().map(|o| base.join(o)))
        .unwrap_or_else(|| PathBuf::from("stability-out"));
    let report = run_stability(&config, &base)?;
    let summary = write_stability_outputs(&report, &dir)?;
    println!("{:>12} {:>14} {:>14}", "epsilon", "|dV|", "bound");
    for r in &report.rows {
        println!("{:>12.6e} {:>14.6e} {:>14.6e}", r.epsilon, r.delta_value, r.bound);
    }
    match summary.slope {
        Some(s) => println!("log-log slope: {s:.4}"),
        None => println!("log-log slope: none (value did not move)"),
    }
    println!("outputs in {}", dir.display());
    if !summary.bounds_hold {
        return Err(AppError::Check("a perturbation exceeded its bound".into()));
    }
    if !summary.converging {
        return Err(AppError::Check("value change does not shrink with epsilon".into()));
    }
    Ok(())
}

fn cmd_oracle(path: &Path, alpha: Option<f64>, grid: usize) -> AppResult<()> {
    let (json, inst) = load_instance(path)?;
    let alpha = pick_alpha(alpha, &json)?;
    let v = brute_force_mes(&inst.mu, &inst.nu, &inst.loss, alpha, grid)?;
    println!("value: {v:.12}");
    Ok(())
}

fn run(cli: Cli) -> AppResult<()> {
    match cli.command {
        Command::Mes {
            instance,
            alpha,
            out,
            dump_mps,
        } => cmd_mes(&instance, alpha, out.as_deref(), dump_mps.as_deref()),
        Command::Msp {
            instance,
            sigma_spec,
            levels,
            out,
            dump_mps,
        } => cmd_msp(&instance, sigma_spec.as_deref(), levels, out.as_deref(), dump_mps.as_deref()),
        Command::Clt {
            config,
            seed,
            threads,
            out,
        } => cmd_clt(&config, seed, threads, out),
        Command::Stability { config, seed, out } => cmd_stability(&config, seed, out),
        Command::Oracle {
            instance,
            alpha,
            grid,
        } => cmd_oracle(&instance, alpha, grid),
    }
}

fn main() -> ExitCode {
    init_logging();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
