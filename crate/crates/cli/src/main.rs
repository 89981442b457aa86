//! Command-line surface for the edge-statistics library: gap probabilities,
//! joint extremal-eigenvalue densities, dual-route validation tables, matrix
//! sampling, and the discrete identity self-test.

mod output;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use janossy::conditioning::sine_k1_check;
use janossy::distributions::{
    self, counting_probs, gap_probability, joint_p12_row, EdgeFamily, NumericParams, Route,
};
use janossy::dppcheck::selftest_suite;
use janossy::fredholm::{fredholm_det, nystrom_spectrum};
use janossy::sampler;
use output::{Format, Table};
use rayon::prelude::*;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "janossy", version, about = "Edge statistics of random-matrix kernels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for grid sweeps (default: JANOSSY_THREADS or all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Airy,
    Bessel,
}

#[derive(Clone, Copy, ValueEnum)]
enum RouteArg {
    Tw,
    Nystrom,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum EnsembleArg {
    Gue,
    Wishart,
}

#[derive(Args)]
struct NumericArgs {
    /// Quadrature order of the Nystrom discretization.
    #[arg(long, default_value_t = 200)]
    m: usize,
    /// Imaginary regularization of conditioned loci.
    #[arg(long, default_value_t = 1e-10)]
    epsilon: f64,
    /// Soft-edge upper cutoff standing in for +infinity.
    #[arg(long, default_value_t = 10.0)]
    lambda: f64,
    /// Hard-edge lower cutoff of determinant intervals.
    #[arg(long, default_value_t = 1e-12)]
    mu: f64,
}

impl NumericArgs {
    fn params(&self) -> NumericParams {
        NumericParams {
            m: self.m,
            epsilon: self.epsilon,
            lambda: self.lambda,
            mu_det: self.mu,
            ..NumericParams::default()
        }
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Output format.
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Output path (standard output when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Gap and counting probabilities on a grid of interval endpoints.
    Gap {
        #[arg(long, value_enum)]
        family: FamilyArg,
        /// Bessel order (required for --family bessel).
        #[arg(long)]
        nu: Option<f64>,
        /// Endpoint grid start:stop:step.
        #[arg(long, allow_hyphen_values = true)]
        s: String,
        /// Also emit E_1..E_p columns.
        #[arg(long)]
        p: Option<usize>,
        #[command(flatten)]
        numeric: NumericArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Joint density of the two extremal eigenvalues over a (t, s) grid.
    Joint {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long)]
        nu: Option<f64>,
        /// Conditioned locus: a single value or a grid start:stop:step.
        #[arg(long, allow_hyphen_values = true)]
        t: String,
        /// Second-eigenvalue grid start:stop:step.
        #[arg(long, allow_hyphen_values = true)]
        s: String,
        #[arg(long, value_enum, default_value_t = RouteArg::Tw)]
        route: RouteArg,
        /// Emit singular-value coordinates (hard edge only).
        #[arg(long)]
        singular: bool,
        #[command(flatten)]
        numeric: NumericArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Cross-validate the endpoint-ODE route against the quadrature route.
    Validate {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long)]
        nu: Option<f64>,
        /// Conditioned locus.
        #[arg(long, allow_hyphen_values = true)]
        t: f64,
        /// Endpoint grid start:stop:step.
        #[arg(long, allow_hyphen_values = true)]
        s: String,
        /// Acceptable relative deviation.
        #[arg(long, default_value_t = 1e-6)]
        threshold: f64,
        #[command(flatten)]
        numeric: NumericArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Sample extremal eigenvalue/singular value pairs of Gaussian ensembles.
    Sample {
        #[arg(long, value_enum)]
        ensemble: EnsembleArg,
        /// Matrix rank.
        #[arg(long)]
        n: usize,
        /// Rectangular offset for the wishart ensemble.
        #[arg(long, default_value_t = 0)]
        nu: u32,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the discrete identity suite and the conditioned-sine closed form.
    Selftest {
        #[arg(long, default_value_t = 2026)]
        seed: u64,
    },
}

fn parse_grid(spec: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.len() {
        1 => {
            let v: f64 = parts[0].parse().context("bad numeric value")?;
            Ok(vec![v])
        }
        3 => {
            let start: f64 = parts[0].parse().context("bad grid start")?;
            let stop: f64 = parts[1].parse().context("bad grid stop")?;
            let step: f64 = parts[2].parse().context("bad grid step")?;
            if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
                bail!("grid must satisfy start <= stop with step > 0");
            }
            let n = ((stop - start) / step + 0.5).floor() as usize;
            let grid: Vec<f64> = (0..=n).map(|i| start + step * i as f64).collect();
            if grid.is_empty() {
                bail!("empty grid");
            }
            Ok(grid)
        }
        _ => bail!("grid spec must be a value or start:stop:step"),
    }
}

fn family_of(arg: FamilyArg, nu: Option<f64>) -> anyhow::Result<EdgeFamily> {
    match arg {
        FamilyArg::Airy => Ok(EdgeFamily::Airy),
        FamilyArg::Bessel => {
            let nu = nu.ok_or_else(|| anyhow!("--nu is required for the bessel family"))?;
            if nu <= -1.0 || !nu.is_finite() {
                bail!("bessel order must satisfy nu > -1, got {nu}");
            }
            Ok(EdgeFamily::Bessel { nu })
        }
    }
}

fn emit(table: &Table, format: FormatArg, out: &Option<PathBuf>) -> anyhow::Result<()> {
    let rendered = table.render(match format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    });
    match out {
        Some(path) => std::fs::write(path, rendered).with_context(|| format!("writing {path:?}"))?,
        None => print!("{rendered}"),
    }
    Ok(())
}

fn family_meta(table: &mut Table, family: EdgeFamily, p: &NumericParams) {
    match family {
        EdgeFamily::Airy => table.meta_str("family", "airy"),
        EdgeFamily::Bessel { nu } => {
            table.meta_str("family", "bessel");
            table.meta_num("nu", nu);
        }
    }
    table.meta_int("m", p.m as u64);
    table.meta_num("epsilon", p.epsilon);
    table.meta_num("lambda", p.lambda);
    table.meta_num("mu", p.mu_det);
}

fn run_gap(
    family: EdgeFamily,
    grid: &[f64],
    p_count: Option<usize>,
    params: &NumericParams,
    output: &OutputArgs,
) -> anyhow::Result<()> {
    let pmax = p_count.unwrap_or(0);
    let mut cols: Vec<String> = vec!["s".into(), "E0".into()];
    for j in 1..=pmax {
        cols.push(format!("E{j}"));
    }
    let col_refs: Vec<&str> = cols.iter().map(|s| s.as_str()).collect();
    let mut table = Table::new(&col_refs);
    family_meta(&mut table, family, params);
    table.meta_str("command", "gap");
    eprintln!("computing {} gap rows", grid.len());
    let rows: Vec<anyhow::Result<Vec<f64>>> = grid
        .par_iter()
        .map(|&s| {
            let mut row = vec![s];
            if pmax == 0 {
                row.push(gap_probability(family, s, Route::Nystrom, params)?);
            } else {
                row.extend(counting_probs(family, s, pmax, params)?);
            }
            Ok(row)
        })
        .collect();
    for row in rows {
        table.push(row?);
    }
    emit(&table, output.format, &output.out)
}

fn run_joint(
    family: EdgeFamily,
    t_grid: &[f64],
    s_grid: &[f64],
    route: Route,
    singular: bool,
    params: &NumericParams,
    output: &OutputArgs,
) -> anyhow::Result<()> {
    if singular && matches!(family, EdgeFamily::Airy) {
        bail!("--singular applies to the hard edge only");
    }
    let mut table = Table::new(&["t", "s", "P12"]);
    family_meta(&mut table, family, params);
    table.meta_str("command", "joint");
    table.meta_str("route", if route == Route::Tw { "tw" } else { "nystrom" });
    table.meta_str("coordinates", if singular { "singular-value" } else { "eigenvalue" });
    eprintln!("computing {} joint rows", t_grid.len());
    let rows: Vec<anyhow::Result<Vec<Vec<f64>>>> = t_grid
        .par_iter()
        .map(|&t| {
            let (t_eval, s_eval): (f64, Vec<f64>) = if singular {
                (t * t, s_grid.iter().map(|&s| s * s).collect())
            } else {
                (t, s_grid.to_vec())
            };
            let values = joint_p12_row(family, t_eval, &s_eval, route, params)?;
            Ok(s_grid
                .iter()
                .zip(values.iter())
                .map(|(&s, &v)| {
                    let p = if singular {
                        distributions::to_singular_values(t, s, v)
                    } else {
                        v
                    };
                    vec![t, s, p]
                })
                .collect())
        })
        .collect();
    for block in rows {
        for row in block? {
            table.push(row);
        }
    }
    emit(&table, output.format, &output.out)
}

fn run_validate(
    family: EdgeFamily,
    t: f64,
    s_grid: &[f64],
    threshold: f64,
    params: &NumericParams,
    output: &OutputArgs,
) -> anyhow::Result<i32> {
    let ck = distributions::conditioned_kernel(family, t, params)?;
    let far = match family {
        EdgeFamily::Airy => s_grid.iter().cloned().fold(f64::INFINITY, f64::min),
        EdgeFamily::Bessel { .. } => s_grid.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    };
    let sol = distributions::tw_solution(family, t, far, params)?;
    eprintln!("validating {} endpoints", s_grid.len());
    let rows: Vec<anyhow::Result<Vec<f64>>> = s_grid
        .par_iter()
        .map(|&s| {
            let tw_logdet = sol.eval(s)?.logdet;
            let (lo, hi) = match family {
                EdgeFamily::Airy => (s, params.lambda),
                EdgeFamily::Bessel { .. } => (params.mu_det, s),
            };
            let ny_logdet = fredholm_det(&nystrom_spectrum(&ck, lo, hi, params.m)?, 1.0).ln();
            // integral of R versus -log Det
            let rel = (tw_logdet - ny_logdet).abs() / ny_logdet.abs();
            Ok(vec![s, -tw_logdet, -ny_logdet, rel])
        })
        .collect();
    let mut table = Table::new(&["s", "intR_tw", "neg_log_det_nystrom", "rel_dev"]);
    family_meta(&mut table, family, params);
    table.meta_str("command", "validate");
    table.meta_num("t", t);
    table.meta_num("threshold", threshold);
    let mut worst: f64 = 0.0;
    for row in rows {
        let row = row?;
        worst = worst.max(row[3]);
        table.push(row);
    }
    table.meta_num("worst_rel_dev", worst);
    emit(&table, output.format, &output.out)?;
    eprintln!("worst relative deviation {worst:.3e} (threshold {threshold:.1e})");
    Ok(if worst <= threshold { 0 } else { 1 })
}

fn run_sample(
    ensemble: EnsembleArg,
    n: usize,
    nu: u32,
    count: usize,
    seed: u64,
    out: &Option<PathBuf>,
) -> anyhow::Result<()> {
    let batch = match ensemble {
        EnsembleArg::Gue => sampler::sample_gue_edge(n, count, seed)?,
        EnsembleArg::Wishart => sampler::sample_wishart_hard_edge(n, nu, count, seed)?,
    };
    match out {
        Some(path) => {
            let f = std::fs::File::create(path).with_context(|| format!("creating {path:?}"))?;
            batch.write_csv(std::io::BufWriter::new(f))?;
        }
        None => {
            let stdout = std::io::stdout();
            batch.write_csv(stdout.lock())?;
        }
    }
    Ok(())
}

fn run_selftest(seed: u64) -> anyhow::Result<i32> {
    let mut all_pass = true;
    let lines = selftest_suite(100, seed)?;
    for l in &lines {
        println!(
            "{} {} (worst {:.2e}, tolerance {:.0e})",
            if l.pass { "PASS" } else { "FAIL" },
            l.name,
            l.worst,
            l.tolerance
        );
        all_pass &= l.pass;
    }
    // conditioned sine kernel against its closed form
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        for j in 0..50 {
            let x = 0.1 + 9.9 * i as f64 / 49.0;
            let y = 0.1 + 9.9 * j as f64 / 49.0;
            let (ours, closed) = sine_k1_check(x, y)?;
            worst = worst.max((ours - closed).norm());
        }
    }
    let pass = worst <= 1e-12;
    println!("{} conditioned sine kernel closed form (worst {worst:.2e}, tolerance 1e-12)", if pass { "PASS" } else { "FAIL" });
    all_pass &= pass;
    Ok(if all_pass { 0 } else { 1 })
}

fn main() {
    let cli = Cli::parse();
    let threads = cli
        .threads
        .or_else(|| std::env::var("JANOSSY_THREADS").ok().and_then(|v| v.parse().ok()));
    if let Some(t) = threads {
        if rayon::ThreadPoolBuilder::new().num_threads(t).build_global().is_err() {
            eprintln!("warning: thread pool already initialized");
        }
    }
    let code = match run(cli) {
        Ok(code) => code,
        Err(err) => {
            // numerical failures exit 1; config failures exit 2
            let msg = format!("{err:#}");
            eprintln!("error: {msg}");
            if err.downcast_ref::<janossy::Error>().is_some() {
                1
            } else {
                2
            }
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Gap { family, nu, s, p, numeric, output } => {
            let fam = family_of(family, nu)?;
            let grid = parse_grid(&s)?;
            validate_grid(fam, &grid, &numeric)?;
            run_gap(fam, &grid, p, &numeric.params(), &output)?;
            Ok(0)
        }
        Command::Joint { family, nu, t, s, route, singular, numeric, output } => {
            let fam = family_of(family, nu)?;
            let t_grid = parse_grid(&t)?;
            let s_grid = parse_grid(&s)?;
            let route = match route {
                RouteArg::Tw => Route::Tw,
                RouteArg::Nystrom => Route::Nystrom,
            };
            run_joint(fam, &t_grid, &s_grid, route, singular, &numeric.params(), &output)?;
            Ok(0)
        }
        Command::Validate { family, nu, t, s, threshold, numeric, output } => {
            let fam = family_of(family, nu)?;
            let grid = parse_grid(&s)?;
            validate_grid(fam, &grid, &numeric)?;
            run_validate(fam, t, &grid, threshold, &numeric.params(), &output)
        }
        Command::Sample { ensemble, n, nu, count, seed, out } => {
            run_sample(ensemble, n, nu, count, seed, &out)?;
            Ok(0)
        }
        Command::Selftest { seed } => run_selftest(seed),
    }
}

fn validate_grid(family: EdgeFamily, grid: &[f64], numeric: &NumericArgs) -> anyhow::Result<()> {
    for &s in grid {
        match family {
            EdgeFamily::Airy => {
                if s > numeric.lambda {
                    bail!("grid point {s} above the soft-edge cutoff {}", numeric.lambda);
                }
            }
            EdgeFamily::Bessel { .. } => {
                if s <= numeric.mu {
                    bail!("grid point {s} at or below the hard-edge cutoff {}", numeric.mu);
                }
            }
        }
    }
    Ok(())
}
