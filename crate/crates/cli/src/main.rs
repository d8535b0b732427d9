//! `mildrep`: batch front-end for the interaction-energy library.
//!
//! Exit codes: 0 success, 2 argument or domain error, 3 internal invariant
//! violation, 4 optimization failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mildrep::thresholds::Regime;
use mildrep::*;
use serde::Serialize;
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "mildrep",
    version,
    about = "Interaction energies, simplex thresholds and particle flows"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate a kernel profile and its derivative on [0, rmax].
    Potential(PotentialArgs),
    /// Bracket the three simplex thresholds over a grid of beta.
    Thresholds(ThresholdArgs),
    /// Multistart particle gradient flow.
    Flow(FlowArgs),
    /// Tabulate f_n and its large-n limit.
    Fgrid(FgridArgs),
    /// Energy of a measure read from JSON.
    Energy(EnergyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum KernelKind {
    Powerlaw,
    Rescaled,
    Loglimit,
    Pure,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Clone, Debug, Serialize)]
struct KernelArgs {
    #[arg(long, value_enum, default_value = "powerlaw")]
    kind: KernelKind,
    #[arg(long)]
    alpha: f64,
    /// Repulsive exponent; required for powerlaw and rescaled, at least 2.
    #[arg(long)]
    beta: Option<f64>,
}

#[derive(Args, Clone, Debug, Serialize)]
struct OutArgs {
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct PotentialArgs {
    #[command(flatten)]
    #[serde(flatten)]
    kernel: KernelArgs,
    #[arg(long, default_value_t = 2.0)]
    rmax: f64,
    /// Number of grid points, endpoints included.
    #[arg(long, default_value_t = 201)]
    steps: usize,
    #[command(flatten)]
    #[serde(skip)]
    output: OutArgs,
}

#[derive(Args, Debug, Serialize)]
struct ThresholdArgs {
    #[arg(long)]
    n: usize,
    /// Comma-separated beta values.
    #[arg(long, value_delimiter = ',')]
    beta: Vec<f64>,
    /// Evenly spaced grid START,END,COUNT appended to --beta.
    #[arg(long, value_delimiter = ',')]
    beta_range: Option<Vec<f64>>,
    /// Tolerance of the two explicit bounds.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Target width of the Euler-Lagrange bracket.
    #[arg(long, default_value_t = 1e-3)]
    alpha_tol: f64,
    #[arg(long, default_value_t = 1e-7)]
    el_tol: f64,
    #[arg(long, default_value_t = 64)]
    starts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    output: OutArgs,
}

#[derive(Args, Debug, Serialize)]
struct FlowArgs {
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    #[serde(flatten)]
    kernel: KernelArgs,
    #[arg(long, default_value_t = 30)]
    particles: usize,
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20_000)]
    max_steps: usize,
    #[arg(long, default_value_t = 1e-10)]
    grad_tol: f64,
    #[arg(long)]
    init_radius: Option<f64>,
    #[arg(long, default_value_t = 1e-3)]
    classify_tol: f64,
    /// Also write the energy trace of the best restart as CSV.
    #[arg(long)]
    #[serde(skip)]
    trace: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct FgridArgs {
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,5,10,100")]
    n: Vec<usize>,
    #[arg(long, default_value_t = 0.5)]
    t_min: f64,
    #[arg(long, default_value_t = 6.0)]
    t_max: f64,
    #[arg(long, default_value_t = 111)]
    t_steps: usize,
    #[command(flatten)]
    #[serde(skip)]
    output: OutArgs,
}

#[derive(Args, Debug, Serialize)]
struct EnergyArgs {
    /// Measure as {"dim", "points", "weights"}.
    #[arg(long)]
    measure: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    kernel: KernelArgs,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Invariant(String),
    Optimization(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Invariant(_) => 3,
            Failure::Optimization(_) => 4,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Invariant(_) | Error::Bracket(_) => Failure::Invariant(e.to_string()),
            Error::NoConvergence(_) => Failure::Optimization(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn build_kernel(k: &KernelArgs) -> std::result::Result<Kernel, Failure> {
    let need_beta = || {
        k.beta
            .ok_or_else(|| Failure::Usage(format!("--beta is required for --kind {:?}", k.kind)))
    };
    let kernel = match k.kind {
        KernelKind::Powerlaw | KernelKind::Rescaled => {
            let beta = need_beta()?;
            if !(beta >= 2.0) {
                return Err(Failure::Usage(format!("beta must be at least 2, got {beta}")));
            }
            if k.kind == KernelKind::Powerlaw {
                Kernel::power_law(k.alpha, beta)?
            } else {
                Kernel::rescaled(k.alpha, beta)?
            }
        }
        KernelKind::Loglimit => {
            if !(k.alpha >= 2.0) {
                return Err(Failure::Usage(format!("alpha must be at least 2, got {}", k.alpha)));
            }
            Kernel::log_limit(k.alpha)?
        }
        KernelKind::Pure => Kernel::pure_attractive(k.alpha)?,
    };
    Ok(kernel)
}

fn emit(out: &Option<PathBuf>, text: &str) -> CmdResult {
    match out {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

/// `# key=value` lines echoing the resolved configuration.
fn preamble<T: Serialize>(command: &str, config: &T) -> String {
    let mut s = format!("# command={command}\n");
    if let serde_json::Value::Object(map) = serde_json::to_value(config).expect("serializable config") {
        for (k, v) in map {
            let v = match v {
                serde_json::Value::String(s) => s,
                other => other.to_string(),
            };
            s.push_str(&format!("# {k}={v}\n"));
        }
    }
    s
}

fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        1 => vec![lo],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

fn cmd_potential(args: &PotentialArgs) -> CmdResult {
    let kernel = build_kernel(&args.kernel)?;
    if args.steps == 0 {
        return Err(Failure::Usage("--steps must be positive".into()));
    }
    if !(args.rmax > 0.0) || !args.rmax.is_finite() {
        return Err(Failure::Usage(format!("--rmax must be positive, got {}", args.rmax)));
    }
    let mut rows = Vec::with_capacity(args.steps);
    for r in linspace(0.0, args.rmax, args.steps) {
        rows.push((r, eval_radial(&kernel, r)?, eval_radial_derivative(&kernel, r)?));
    }
    let text = match args.output.format {
        Format::Csv => {
            let mut s = preamble("potential", args);
            s.push_str("r,w,dw\n");
            for (r, w, dw) in &rows {
                s.push_str(&format!("{},{},{}\n", num(*r), num(*w), num(*dw)));
            }
            s
        }
        Format::Json => {
            let rows: Vec<_> = rows
                .iter()
                .map(|(r, w, dw)| json!({"r": r, "w": w, "dw": dw}))
                .collect();
            to_json(&json!({"config": args, "kernel": kernel, "rows": rows}))
        }
    };
    emit(&args.output.out, &text)
}

fn beta_grid(args: &ThresholdArgs) -> std::result::Result<Vec<f64>, Failure> {
    let mut grid = args.beta.clone();
    if let Some(r) = &args.beta_range {
        if r.len() != 3 {
            return Err(Failure::Usage("--beta-range takes START,END,COUNT".into()));
        }
        let count = r[2];
        if !(count >= 1.0 && count.fract() == 0.0) {
            return Err(Failure::Usage(format!(
                "--beta-range count must be a positive integer, got {count}"
            )));
        }
        grid.extend(linspace(r[0], r[1], count as usize));
    }
    if grid.is_empty() {
        return Err(Failure::Usage("no beta values given".into()));
    }
    Ok(grid)
}

fn cmd_thresholds(args: &ThresholdArgs) -> CmdResult {
    if args.n == 0 {
        return Err(Failure::Usage("--n must be positive".into()));
    }
    let grid = beta_grid(args)?;
    let opts = SweepOptions {
        tol: args.tol,
        el: ElOptions {
            starts: args.starts,
            seed: args.seed,
            el_tol: args.el_tol,
            alpha_tol: args.alpha_tol,
        },
    };
    let reports = phase_sweep(args.n, &grid, &opts)?;
    let text = match args.output.format {
        Format::Csv => {
            let mut s = preamble("thresholds", args);
            s.push_str("n,beta,underline_alpha,alpha_plus_lo,alpha_plus_hi,alpha_star\n");
            for r in &reports {
                s.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    r.n,
                    num(r.beta),
                    num(r.underline_alpha),
                    num(r.alpha_plus.lo),
                    num(r.alpha_plus.hi),
                    num(r.alpha_star)
                ));
            }
            s
        }
        Format::Json => to_json(&json!({"config": args, "reports": reports})),
    };
    emit(&args.output.out, &text)
}

fn cmd_flow(args: &FlowArgs) -> CmdResult {
    let kernel = build_kernel(&args.kernel)?;
    let config = FlowConfig {
        seed: args.seed,
        restarts: args.restarts,
        max_steps: args.max_steps,
        grad_tol: args.grad_tol,
        init_radius: args.init_radius,
        classify_tol: args.classify_tol,
        ..FlowConfig::new(args.n, args.particles)
    };
    let result = multistart(&config, &kernel)?;
    let radii: Vec<f64> = result
        .final_measure
        .points()
        .iter()
        .map(|x| x.iter().map(|c| c * c).sum::<f64>().sqrt())
        .collect();
    let radius = radii.iter().copied().fold(0.0, f64::max);
    let min_radius = radii.iter().copied().fold(f64::INFINITY, f64::min);
    let occupancy: Vec<f64> = result
        .final_measure
        .clusters(args.classify_tol)
        .iter()
        .map(|c| c.0)
        .collect();
    let summary = json!({
        "config": args,
        "kernel": kernel,
        "flow_config": config,
        "result": result,
        "radius": radius,
        "min_radius": min_radius,
        "occupancy": occupancy,
        "simplex_energy": simplex_energy(args.n, 1.0, &kernel)?,
        "verify_min42": verify_min42(&result.final_measure, 1e-3),
    });
    if let Some(path) = &args.trace {
        let mut s = preamble("flow", args);
        s.push_str("step,energy\n");
        for (i, e) in result.energy_trace.iter().enumerate() {
            s.push_str(&format!("{i},{}\n", num(*e)));
        }
        fs::write(path, s)?;
    }
    emit(&args.out, &to_json(&summary))
}

fn cmd_fgrid(args: &FgridArgs) -> CmdResult {
    if !(args.t_min > 0.0) || !(args.t_max >= args.t_min) || !args.t_max.is_finite() {
        return Err(Failure::Usage(format!(
            "t grid must satisfy 0 < t_min <= t_max, got [{}, {}]",
            args.t_min, args.t_max
        )));
    }
    if args.t_steps == 0 || args.n.is_empty() || args.n.contains(&0) {
        return Err(Failure::Usage("need a positive t count and n values >= 1".into()));
    }
    let ts = linspace(args.t_min, args.t_max, args.t_steps);
    let mut rows = Vec::new();
    for &n in &args.n {
        for &t in &ts {
            rows.push((n, t, f_n(n, t), f_inf(t, Regime::of(n))));
        }
    }
    // Comparison among the listed n >= 2 at grid points with 2 <= t <= 4, up to
    // rounding at the common zeros t = 2 and t = 4.
    let mut dims: Vec<usize> = args.n.iter().copied().filter(|&n| n >= 2).collect();
    dims.sort_unstable();
    dims.dedup();
    let monotone = ts.iter().filter(|t| (2.0..=4.0).contains(*t)).all(|&t| {
        dims.windows(2)
            .all(|w| f_n(w[1], t) >= f_n(w[0], t) - 1e-15 * w[1] as f64)
    });
    let text = match args.output.format {
        Format::Csv => {
            let mut s = preamble("fgrid", args);
            s.push_str("n,t,f_n,f_inf\n");
            for (n, t, f, fi) in &rows {
                s.push_str(&format!("{n},{},{},{}\n", num(*t), num(*f), num(*fi)));
            }
            s.push_str(&format!("# monotone_in_n_on_2_4={monotone}\n"));
            s
        }
        Format::Json => {
            let rows: Vec<_> = rows
                .iter()
                .map(|(n, t, f, fi)| json!({"n": n, "t": t, "f_n": f, "f_inf": fi}))
                .collect();
            to_json(&json!({"config": args, "rows": rows, "monotone_in_n_on_2_4": monotone}))
        }
    };
    emit(&args.output.out, &text)
}

fn cmd_energy(args: &EnergyArgs) -> CmdResult {
    let kernel = build_kernel(&args.kernel)?;
    let text = fs::read_to_string(&args.measure)?;
    let mu: DiscreteMeasure = serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("bad measure: {e}")))?;
    let breakdown = energy_breakdown(&mu, &kernel);
    let out = json!({
        "config": args,
        "kernel": kernel,
        "energy": breakdown,
        "classification": mu.classify(1e-3),
        "verify_min42": verify_min42(&mu, 1e-9),
    });
    emit(&args.out, &to_json(&out))
}

fn configure_threads() -> std::result::Result<(), Failure> {
    if let Ok(v) = std::env::var("MILDREP_THREADS") {
        let threads: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|t| *t > 0)
            .ok_or_else(|| Failure::Usage(format!("MILDREP_THREADS must be a positive integer, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| match &cli.command {
        Command::Potential(a) => cmd_potential(a),
        Command::Thresholds(a) => cmd_thresholds(a),
        Command::Flow(a) => cmd_flow(a),
        Command::Fgrid(a) => cmd_fgrid(a),
        Command::Energy(a) => cmd_energy(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let msg = match &f {
                Failure::Usage(m) | Failure::Invariant(m) | Failure::Optimization(m) => m,
            };
            eprintln!("mildrep: {msg}");
            ExitCode::from(f.code())
        }
    }
}
