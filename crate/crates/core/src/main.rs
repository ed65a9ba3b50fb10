use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cnl_mcp::cuts::Aggregation;
use cnl_mcp::drivers::{
    self, bc_solve, cp_solve, doa_solve, exhaustive_solve, greedy_solve, SolveParams, SolveReport,
    Termination,
};
use cnl_mcp::gen::{self, GenConfig};
use cnl_mcp::instance::{CnlInstance, NestConfig, SolutionVector};
use cnl_mcp::master::EXHAUSTIVE_CEILING;
use cnl_mcp::report::{append_csv, append_json_lines, row_from_report, ReportRow};
use cnl_mcp::special::{mnl_t1_solve, nl_t1_solve};
use cnl_mcp::{io, par, Error, Result};

#[derive(Parser)]
#[command(name = "cnl-mcp", version, about = "Competitive facility location under the cross-nested logit choice model")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve one instance with one method and report bounds.
    Solve(SolveArgs),
    /// Generate a seeded synthetic instance file.
    Generate(GenArgs),
    /// Percent-loss study: exact CNL vs MNL/NL-simplified solutions.
    Compare(CompareArgs),
    /// Sensitivity sweep over the sigma mean or the overlap rate.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Cp,
    Bc,
    Doa,
    Greedy,
    Exhaustive,
    MnlT1,
    NlT1,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    JsonLines,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum)]
    method: Method,
    /// Override the instance's cardinality budget.
    #[arg(long)]
    r: Option<usize>,
    /// Absolute gap tolerance; default 1e-6 times total demand.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, default_value_t = drivers::DEFAULT_ITER_CAP)]
    iter_limit: usize,
    #[arg(long, default_value_t = drivers::DEFAULT_TIME_CAP)]
    time_limit: f64,
    /// Recorded in report rows.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// per-type | group:K | single
    #[arg(long, default_value = "per-type")]
    aggregation: String,
    /// Report sink; rows are appended.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10)]
    m: usize,
    #[arg(long, default_value_t = 2)]
    t: usize,
    #[arg(long, default_value_t = 5)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    r: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.05)]
    beta: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha_comp: f64,
    #[arg(long, default_value_t = 1.2)]
    gamma: f64,
    #[arg(long, default_value_t = 0.5)]
    sigma_mean: f64,
    #[arg(long, default_value_t = 0.2)]
    sigma_std: f64,
    /// sharing | separated
    #[arg(long, default_value = "sharing")]
    config: String,
    /// Cost matrix CSV (header `type,site_1..site_k`) instead of uniform costs.
    #[arg(long)]
    cost_csv: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    cost_lo: f64,
    #[arg(long, default_value_t = 100.0)]
    cost_hi: f64,
    /// Comma-separated demands per type; default unit.
    #[arg(long)]
    demands: Option<String>,
}

#[derive(Args)]
struct CompareArgs {
    /// Instance files to compare.
    #[arg(required = true)]
    instances: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    eps: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepParam {
    SigmaMean,
    Gamma,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum)]
    param: SweepParam,
    /// Comma-separated grid; defaults depend on the parameter.
    #[arg(long)]
    values: Option<String>,
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    #[arg(long, default_value_t = 20)]
    m: usize,
    #[arg(long, default_value_t = 20)]
    t: usize,
    #[arg(long, default_value_t = 5)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    r: usize,
    #[arg(long, default_value_t = 0)]
    base_seed: u64,
    #[arg(long, default_value = "sweep.csv")]
    out: PathBuf,
    #[arg(long, default_value_t = drivers::DEFAULT_TIME_CAP)]
    time_limit: f64,
}

fn parse_aggregation(s: &str) -> Result<Aggregation> {
    match s {
        "per-type" => Ok(Aggregation::PerType),
        "single" => Ok(Aggregation::Single),
        _ => {
            if let Some(k) = s.strip_prefix("group:") {
                let k: usize = k
                    .parse()
                    .map_err(|_| Error::Config(format!("bad aggregation group size in {s:?}")))?;
                if k == 0 {
                    return Err(Error::Config("aggregation group size must be positive".into()));
                }
                Ok(Aggregation::Grouped(k))
            } else {
                Err(Error::Config(format!(
                    "unknown aggregation {s:?}; expected per-type, group:K or single"
                )))
            }
        }
    }
}

fn parse_config(s: &str) -> Result<NestConfig> {
    match s {
        "sharing" => Ok(NestConfig::Sharing),
        "separated" => Ok(NestConfig::Separated),
        _ => Err(Error::Config(format!("unknown config {s:?}"))),
    }
}

/// Wrap a closed-form solution as a converged report.
fn report_from_solution(method: &str, inst: &CnlInstance, sol: SolutionVector, started: Instant) -> SolveReport {
    let open = sol.open_indices();
    let value = sol.value.unwrap_or_else(|| drivers::objective_of_open(inst, &open));
    SolveReport {
        method: method.into(),
        incumbent: sol.x.clone(),
        lb: value,
        ub: value,
        optimal: true,
        iterations: 1,
        cuts_oa: 0,
        cuts_sc: 0,
        time_s: started.elapsed().as_secs_f64(),
        termination: Termination::Converged,
        history: vec![(value, value)],
        candidates: vec![sol.x],
    }
}

fn write_rows(out: Option<&Path>, format: Format, rows: &[ReportRow]) -> Result<()> {
    if let Some(path) = out {
        match format {
            Format::Csv => append_csv(path, rows)?,
            Format::JsonLines => append_json_lines(path, rows)?,
        }
    }
    Ok(())
}

fn run_solve(args: &SolveArgs) -> Result<u8> {
    let mut inst = io::load_instance(&args.instance)?;
    if let Some(r) = args.r {
        inst = inst.with_r(r)?;
    }
    let params = SolveParams {
        eps: args.eps,
        iter_cap: args.iter_limit,
        time_cap: args.time_limit,
        aggregation: parse_aggregation(&args.aggregation)?,
    };
    let started = Instant::now();
    let rep = match args.method {
        Method::Cp => cp_solve(&inst, &params)?,
        Method::Bc => bc_solve(&inst, &params)?,
        Method::Doa => doa_solve(&inst, &params)?,
        Method::Greedy => greedy_solve(&inst, true)?,
        Method::Exhaustive => exhaustive_solve(&inst)?,
        Method::MnlT1 => report_from_solution("mnl-t1", &inst, mnl_t1_solve(&inst)?, started),
        Method::NlT1 => report_from_solution("nl-t1", &inst, nl_t1_solve(&inst, args.eps)?, started),
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&rep).map_err(|e| Error::Parse(e.to_string()))?
    );
    let name = args.instance.display().to_string();
    let row = row_from_report(&name, &inst, &rep, args.seed);
    write_rows(args.out.as_deref(), args.format, &[row])?;
    Ok(match rep.termination {
        Termination::Converged => 0,
        Termination::IterationCap | Termination::TimeCap => 2,
    })
}

fn run_generate(args: &GenArgs) -> Result<u8> {
    let costs = match &args.cost_csv {
        Some(path) => Some(io::load_cost_csv(path)?),
        None => None,
    };
    let demands = match &args.demands {
        Some(s) => Some(
            s.split(',')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Config(format!("bad demand value {x:?}")))
                })
                .collect::<Result<Vec<f64>>>()?,
        ),
        None => None,
    };
    let cfg = GenConfig {
        m: args.m,
        num_types: args.t,
        num_nests: args.n,
        r: args.r,
        seed: args.seed,
        beta: args.beta,
        alpha_comp: args.alpha_comp,
        gamma: args.gamma,
        sigma_mean: args.sigma_mean,
        sigma_std: args.sigma_std,
        config: parse_config(&args.config)?,
        cost_range: (args.cost_lo, args.cost_hi),
        costs,
        demands,
    };
    let inst = gen::generate(&cfg)?;
    let meta = serde_json::json!({
        "tool": "cnl-mcp",
        "version": env!("CARGO_PKG_VERSION"),
        "generator": cfg,
    });
    io::save_instance(&args.out, &inst, meta)?;
    println!("seed {}", args.seed);
    println!("checksum {}", io::checksum(&args.out)?);
    Ok(0)
}

/// Exact solve: exhaustive at desk scale, cutting plane beyond it.
fn solve_exact(inst: &CnlInstance, eps: Option<f64>) -> Result<Vec<bool>> {
    if par::binomial(inst.m(), inst.r()) <= EXHAUSTIVE_CEILING {
        Ok(exhaustive_solve(inst)?.incumbent)
    } else {
        let params = SolveParams { eps, ..Default::default() };
        Ok(cp_solve(inst, &params)?.incumbent)
    }
}

fn run_compare(args: &CompareArgs) -> Result<u8> {
    let mut out: Vec<String> = vec!["instance,mnl_loss,nl_loss".into()];
    let mut mnl_sum = 0.0;
    let mut nl_sum = 0.0;
    for path in &args.instances {
        let inst = io::load_instance(path)?;
        let mnl = gen::simplify_to_mnl(&inst)?;
        let nl = gen::simplify_to_nl(&inst)?;
        let mnl_loss = gen::percent_loss(
            &inst,
            &mnl,
            |i| solve_exact(i, args.eps),
            |i| solve_exact(i, args.eps),
        )?;
        let nl_loss = gen::percent_loss(
            &inst,
            &nl,
            |i| solve_exact(i, args.eps),
            |i| solve_exact(i, args.eps),
        )?;
        mnl_sum += mnl_loss;
        nl_sum += nl_loss;
        out.push(format!("{},{mnl_loss:.6},{nl_loss:.6}", path.display()));
    }
    let k = args.instances.len() as f64;
    let body = out.join("\n") + "\n";
    match &args.out {
        Some(path) => std::fs::write(path, &body)?,
        None => print!("{body}"),
    }
    println!("mean_mnl_loss {:.6}", mnl_sum / k);
    println!("mean_nl_loss {:.6}", nl_sum / k);
    Ok(0)
}

/// Spearman rank correlation; ties get their first-seen rank (grids here are
/// strictly monotone, so this is exact for our use).
fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    let rank = |v: &[f64]| -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        for (pos, &i) in idx.iter().enumerate() {
            r[i] = pos as f64;
        }
        r
    };
    let rx = rank(xs);
    let ry = rank(ys);
    let n = xs.len() as f64;
    let mean = (n - 1.0) / 2.0;
    let mut num = 0.0;
    let mut dx = 0.0;
    let mut dy = 0.0;
    for i in 0..xs.len() {
        num += (rx[i] - mean) * (ry[i] - mean);
        dx += (rx[i] - mean).powi(2);
        dy += (ry[i] - mean).powi(2);
    }
    if dx == 0.0 || dy == 0.0 {
        0.0
    } else {
        num / (dx * dy).sqrt()
    }
}

fn run_sweep(args: &SweepArgs) -> Result<u8> {
    let defaults = match args.param {
        SweepParam::SigmaMean => "0.1,0.3,0.5,0.7,0.9",
        SweepParam::Gamma => "1.1,1.2,1.3,1.4,1.5",
    };
    let values: Vec<f64> = args
        .values
        .as_deref()
        .unwrap_or(defaults)
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad sweep value {s:?}")))
        })
        .collect::<Result<_>>()?;
    let mut point_means_time = Vec::new();
    let mut point_means_iters = Vec::new();
    for &value in &values {
        let mut rows = Vec::new();
        let mut time_sum = 0.0;
        let mut iter_sum = 0.0;
        for s in 0..args.seeds {
            let mut cfg = GenConfig {
                m: args.m,
                num_types: args.t,
                num_nests: args.n,
                r: args.r,
                seed: args.base_seed + s,
                ..Default::default()
            };
            match args.param {
                SweepParam::SigmaMean => cfg.sigma_mean = value,
                SweepParam::Gamma => cfg.gamma = value,
            }
            let inst = gen::generate(&cfg)?;
            let params = SolveParams { time_cap: args.time_limit, ..Default::default() };
            let rep = cp_solve(&inst, &params)?;
            time_sum += rep.time_s;
            iter_sum += rep.iterations as f64;
            let label = match args.param {
                SweepParam::SigmaMean => format!("sweep-mu{value}-s{s}"),
                SweepParam::Gamma => format!("sweep-gamma{value}-s{s}"),
            };
            rows.push(row_from_report(&label, &inst, &rep, cfg.seed));
        }
        append_csv(&args.out, &rows)?;
        point_means_time.push(time_sum / args.seeds as f64);
        point_means_iters.push(iter_sum / args.seeds as f64);
    }
    let rho_t = spearman(&values, &point_means_time);
    let rho_i = spearman(&values, &point_means_iters);
    println!("spearman_time {rho_t:.3}");
    println!("spearman_iters {rho_i:.3}");
    println!(
        "trend time {} iterations {}",
        if rho_t >= 0.0 { "increasing" } else { "decreasing" },
        if rho_i >= 0.0 { "increasing" } else { "decreasing" }
    );
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = match &cli.cmd {
        Cmd::Solve(a) => run_solve(a),
        Cmd::Generate(a) => run_generate(a),
        Cmd::Compare(a) => run_compare(a),
        Cmd::Sweep(a) => run_sweep(a),
    };
    match out {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
