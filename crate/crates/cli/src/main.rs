use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use geotrans::bench::{self, BenchConfig};
use geotrans::format::{parse_instance, parse_plan, write_instance, write_plan};
use geotrans::{costs_agree, run_solver, Algo, CliError, SolveConfig};
use geotrans_core::gen::{generate, Distribution};
use geotrans_core::{instance_stats, plan_cost, verify_plan, Metric, TransportInstance};

/// Geometric transportation: generate, solve, verify and benchmark.
#[derive(Parser, Debug)]
#[command(name = "geotrans", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a random balanced instance.
    Gen {
        /// Total number of points, reds plus blues.
        #[arg(short, long)]
        n: usize,
        /// Largest mass of a single point.
        #[arg(short = 'U', long = "max-mass", default_value_t = 1)]
        max_mass: u64,
        #[arg(long, default_value = "uniform", value_parser = parse_dist)]
        dist: Distribution,
        #[arg(long, default_value = "l2", value_parser = parse_metric)]
        metric: Metric,
        #[arg(long, env = "EMD_SEED")]
        seed: Option<u64>,
        /// Output file; stdout when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Print spread and diameter to stderr.
        #[arg(long)]
        stats: bool,
    },
    /// Solve an instance file and write the plan.
    Solve {
        #[arg(long, value_enum)]
        algo: Algo,
        input: PathBuf,
        /// Plan file; the plan goes to stdout ahead of the summary when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, env = "EMD_SEED")]
        seed: Option<u64>,
        /// Override the metric named in the instance file.
        #[arg(long, value_parser = parse_metric)]
        metric: Option<Metric>,
        #[arg(long)]
        assume_bounded_spread: bool,
        /// Run the solver's internal consistency checks (slow).
        #[arg(long)]
        check_invariants: bool,
        /// Write the flow network the solver used as `v`/`a` lines.
        #[arg(long)]
        dump_graph: Option<PathBuf>,
    },
    /// Check a plan against an instance.
    Verify { input: PathBuf, plan: PathBuf },
    /// Run a matrix of (algo, n, seed) cells and write CSV.
    Bench {
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Algo::Grid, Algo::Wspd, Algo::Oracle])]
        algos: Vec<Algo>,
        #[arg(long, value_delimiter = ',', default_values_t = [100usize, 1000])]
        sizes: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [1u64, 2, 3])]
        seeds: Vec<u64>,
        #[arg(short = 'U', long = "max-mass", default_value_t = 10)]
        max_mass: u64,
        #[arg(long, default_value = "uniform", value_parser = parse_dist)]
        dist: Distribution,
        #[arg(long, default_value = "l2", value_parser = parse_metric)]
        metric: Metric,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[arg(long)]
        assume_bounded_spread: bool,
        /// Skip the quadratic oracle above this n.
        #[arg(long, default_value_t = 2000)]
        oracle_limit: usize,
        /// Worker threads; more than one distorts wall times.
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// CSV file; stdout when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Log-log SVG plot of wall time against n.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
}

fn parse_dist(s: &str) -> Result<Distribution, String> {
    Distribution::parse(s).ok_or_else(|| format!("unknown distribution `{s}` (uniform, clustered, high-spread)"))
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    Metric::parse(s).ok_or_else(|| format!("unknown metric `{s}` (l1, l2, linf)"))
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p.display().to_string(), e)),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::io("stdout", e)),
    }
}

fn load_instance(path: &Path) -> Result<TransportInstance, CliError> {
    parse_instance(&read(path)?).map_err(|e| e.in_file(path))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Command::Gen { n, max_mass, dist, metric, seed, output, stats } => {
            let seed = seed.ok_or_else(|| CliError::Usage("gen needs --seed or EMD_SEED".into()))?;
            let inst = generate(n, max_mass, dist, metric, seed)?;
            let header = format!("# geotrans gen n={n} U={max_mass} dist={} seed={seed}\n", dist.name());
            write_out(output.as_deref(), &(header + &write_instance(&inst)))?;
            if stats {
                let s = instance_stats(&inst)?;
                eprintln!("spread={} diameter={} total_mass={}", s.spread, s.diameter, s.total_mass);
            }
        }
        Command::Solve { algo, input, output, eps, seed, metric, assume_bounded_spread, check_invariants, dump_graph } => {
            let mut inst = load_instance(&input)?;
            if let Some(m) = metric {
                inst = TransportInstance::new(inst.reds().to_vec(), inst.blues().to_vec(), m)?;
            }
            let cfg = SolveConfig {
                eps,
                seed,
                bounded_spread: assume_bounded_spread,
                check_invariants,
                dump_graph: dump_graph.is_some(),
            };
            let out = run_solver(&inst, algo, &cfg)?;
            if let (Some(path), Some(g)) = (&dump_graph, &out.graph) {
                write_out(Some(path), g)?;
            }
            write_out(output.as_deref(), &write_plan(&out.plan, out.cost))?;
            println!("algo={} n={} cost={} time_ms={:.3}", algo.name(), inst.len(), out.cost, out.wall_ms);
        }
        Command::Verify { input, plan } => {
            let inst = load_instance(&input)?;
            let (p, recorded) = parse_plan(&read(&plan)?).map_err(|e| e.in_file(&plan))?;
            let report = verify_plan(&inst, &p);
            if !report.is_ok() {
                for v in &report.violations {
                    eprintln!("violation: {v}");
                }
                return Err(CliError::Infeasible(format!("{} violation(s)", report.violations.len())));
            }
            let cost = plan_cost(&inst, &p)?;
            if let Some(c) = recorded.filter(|&c| !costs_agree(c, cost)) {
                return Err(CliError::Infeasible(format!("recorded cost {c} but plan costs {cost}")));
            }
            println!("ok cost={cost}");
        }
        Command::Bench {
            algos,
            sizes,
            seeds,
            max_mass,
            dist,
            metric,
            eps,
            assume_bounded_spread,
            oracle_limit,
            threads,
            output,
            plot,
        } => {
            let cfg = BenchConfig {
                algos,
                sizes,
                seeds,
                max_mass,
                dist,
                metric,
                eps,
                bounded_spread: assume_bounded_spread,
                oracle_limit,
                threads,
            };
            let records = bench::run(&cfg)?;
            write_out(output.as_deref(), &bench::to_csv(&records))?;
            let failed = records.iter().filter(|r| !r.is_ok()).count();
            if failed > 0 {
                eprintln!("{failed} of {} cells failed", records.len());
            }
            for &a in &cfg.algos {
                if let Some(s) = bench::loglog_slope(&bench::timing_series(&records, a)) {
                    eprintln!("{}: log-log slope {s:.3}", a.name());
                }
            }
            if let Some(path) = plot {
                if let Err(e) = bench::plot(&records, &path) {
                    eprintln!("warning: plot not written: {e}");
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
