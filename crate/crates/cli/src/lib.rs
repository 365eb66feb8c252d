//! Plumbing behind the `geotrans` binary: file formats, solver dispatch and
//! the benchmark runner.

pub mod bench;
pub mod format;

use std::time::Instant;

use geotrans_core::exact::{self, ExactOptions};
use geotrans_core::grid::{self, GridOptions};
use geotrans_core::mcf;
use geotrans_core::{plan_cost, wspd, Error, TransportInstance, TransportPlan};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Usage(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {inner}")]
    InFile { path: String, inner: Box<CliError> },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Usage(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Invariant(_) => 4,
            CliError::Io { .. } => 1,
            CliError::InFile { inner, .. } => inner.exit_code(),
        }
    }

    pub fn in_file(self, path: &std::path::Path) -> Self {
        CliError::InFile { path: path.display().to_string(), inner: Box::new(self) }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(m) => CliError::Usage(m),
            Error::Invariant(m) => CliError::Invariant(m),
            other => CliError::Infeasible(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, clap::ValueEnum)]
pub enum Algo {
    Exact,
    Grid,
    Wspd,
    Oracle,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Exact => "exact",
            Algo::Grid => "grid",
            Algo::Wspd => "wspd",
            Algo::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SolveConfig {
    pub eps: Option<f64>,
    pub seed: Option<u64>,
    pub bounded_spread: bool,
    pub check_invariants: bool,
    pub dump_graph: bool,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub plan: TransportPlan,
    pub cost: f64,
    pub wall_ms: f64,
    /// Text dump of the flow network the solver worked on, when requested.
    pub graph: Option<String>,
}

fn need_eps(algo: Algo, cfg: &SolveConfig) -> Result<f64, CliError> {
    match cfg.eps {
        Some(e) if e > 0.0 && e.is_finite() => Ok(e),
        Some(e) => Err(CliError::Usage(format!("--eps must be positive, got {e}"))),
        None => Err(CliError::Usage(format!("--eps is required for --algo {}", algo.name()))),
    }
}

pub fn run_solver(inst: &TransportInstance, algo: Algo, cfg: &SolveConfig) -> Result<Outcome, CliError> {
    let eps = match algo {
        Algo::Grid | Algo::Wspd => need_eps(algo, cfg)?,
        _ => 0.0,
    };
    let seed = match (algo, cfg.seed) {
        (Algo::Grid, None) => return Err(CliError::Usage("--seed (or EMD_SEED) is required for --algo grid".into())),
        (_, s) => s.unwrap_or(0),
    };
    if cfg.dump_graph && algo == Algo::Grid {
        return Err(CliError::Usage("--dump-graph is not available for --algo grid".into()));
    }
    let start = Instant::now();
    let (plan, graph) = match algo {
        Algo::Oracle => {
            let (plan, _) = mcf::solve_transport(inst)?;
            let graph = cfg.dump_graph.then(|| mcf::transport_network(inst).map(|n| format::write_network(&n))).transpose()?;
            (plan, graph)
        }
        Algo::Wspd => {
            let sol = wspd::solve(inst, eps)?;
            let graph = cfg.dump_graph.then(|| format::write_network(&sol.decomposition.graph.network));
            (sol.plan, graph)
        }
        Algo::Exact => {
            let opts = ExactOptions { check_invariants: cfg.check_invariants };
            let sol = exact::solve_with(inst, opts, |_| {})?;
            if cfg.check_invariants {
                let net = exact::add_dummies(inst)?;
                let flow = sol.network_flow(inst);
                if !mcf::check_optimality(&net, &flow, &sol.potentials, 1e-6).is_certified() {
                    return Err(CliError::Invariant("final flow is not certified optimal".into()));
                }
            }
            let graph = cfg.dump_graph.then(|| exact::add_dummies(inst).map(|n| format::write_network(&n))).transpose()?;
            (sol.plan, graph)
        }
        Algo::Grid => {
            let opts = GridOptions { eps, bounded_spread: cfg.bounded_spread, instrument: cfg.check_invariants };
            let sol = grid::solve_seeded(inst, opts, seed)?;
            if let Some(bad) = sol.stats.redistributions.iter().find(|r| !r.holds()) {
                return Err(CliError::Invariant(format!("redistribution bound exceeded: {bad:?}")));
            }
            (sol.plan, None)
        }
    };
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let report = geotrans_core::verify_plan(inst, &plan);
    if !report.is_ok() {
        return Err(CliError::Invariant(format!("{} produced an infeasible plan: {}", algo.name(), report.violations[0])));
    }
    let cost = plan_cost(inst, &plan)?;
    Ok(Outcome { plan, cost, wall_ms, graph })
}

/// Relative agreement used when comparing a recorded cost with a recomputed one.
pub fn costs_agree(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}
