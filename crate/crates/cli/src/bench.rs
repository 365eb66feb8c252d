//! Benchmark matrix runner.
//!
//! CSV layout (version 1): `algo,n,U,eps,seed,wall_ms,cost,oracle_cost,ratio,status`.
//! `oracle_cost` and `ratio` are empty when the oracle was skipped or
//! failed; `status` is `ok` or `error: <message>`.

use std::fmt::Write as _;
use std::path::Path;

use geotrans_core::gen::{generate, Distribution};
use geotrans_core::{mcf, plan_cost, Metric, TransportInstance};
use rayon::prelude::*;

use crate::{run_solver, Algo, CliError, SolveConfig};

pub const CSV_HEADER: &str = "algo,n,U,eps,seed,wall_ms,cost,oracle_cost,ratio,status";

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub algos: Vec<Algo>,
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub max_mass: u64,
    pub dist: Distribution,
    pub metric: Metric,
    pub eps: f64,
    pub bounded_spread: bool,
    /// Largest n for which the quadratic oracle is run.
    pub oracle_limit: usize,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub algo: Algo,
    pub n: usize,
    pub max_mass: u64,
    pub eps: f64,
    pub seed: u64,
    pub wall_ms: f64,
    pub cost: Option<f64>,
    pub oracle_cost: Option<f64>,
    pub status: String,
}

impl BenchRecord {
    pub fn ratio(&self) -> Option<f64> {
        match (self.cost, self.oracle_cost) {
            (Some(c), Some(o)) if o > 0.0 => Some(c / o),
            (Some(c), Some(_)) => Some(if c == 0.0 { 1.0 } else { f64::INFINITY }),
            _ => None,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

struct Prepared {
    n: usize,
    seed: u64,
    inst: Result<TransportInstance, String>,
    oracle: Option<f64>,
}

fn prepare(cfg: &BenchConfig, n: usize, seed: u64) -> Prepared {
    let inst = generate(n, cfg.max_mass, cfg.dist, cfg.metric, seed).map_err(|e| e.to_string());
    let oracle = match &inst {
        Ok(i) if n <= cfg.oracle_limit => mcf::solve_transport(i).ok().and_then(|(p, _)| plan_cost(i, &p).ok()),
        _ => None,
    };
    Prepared { n, seed, inst, oracle }
}

fn run_cell(cfg: &BenchConfig, algo: Algo, prep: &Prepared) -> BenchRecord {
    let mut rec = BenchRecord {
        algo,
        n: prep.n,
        max_mass: cfg.max_mass,
        eps: cfg.eps,
        seed: prep.seed,
        wall_ms: 0.0,
        cost: None,
        oracle_cost: prep.oracle,
        status: "ok".into(),
    };
    let inst = match &prep.inst {
        Ok(i) => i,
        Err(e) => {
            rec.status = format!("error: {e}");
            return rec;
        }
    };
    let solve_cfg = SolveConfig { eps: Some(cfg.eps), seed: Some(prep.seed), bounded_spread: cfg.bounded_spread, ..Default::default() };
    match run_solver(inst, algo, &solve_cfg) {
        Ok(out) => {
            rec.wall_ms = out.wall_ms;
            rec.cost = Some(out.cost);
        }
        Err(e) => rec.status = format!("error: {e}"),
    }
    rec
}

/// Runs every `(algo, n, seed)` cell. Records come back in matrix order
/// regardless of how many threads ran them.
pub fn run(cfg: &BenchConfig) -> Result<Vec<BenchRecord>, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.max(1))
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} worker threads: {e}", cfg.threads)))?;
    pool.install(|| {
        let grid: Vec<(usize, u64)> = cfg.sizes.iter().flat_map(|&n| cfg.seeds.iter().map(move |&s| (n, s))).collect();
        let prepared: Vec<Prepared> = grid.par_iter().map(|&(n, s)| prepare(cfg, n, s)).collect();
        let cells: Vec<(Algo, &Prepared)> =
            cfg.algos.iter().flat_map(|&a| prepared.iter().map(move |p| (a, p))).collect();
        Ok(cells.par_iter().map(|&(a, p)| run_cell(cfg, a, p)).collect())
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn to_csv(records: &[BenchRecord]) -> String {
    let mut out = String::new();
    writeln!(out, "{CSV_HEADER}").unwrap();
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{:.3},{},{},{},{}",
            r.algo.name(),
            r.n,
            r.max_mass,
            r.eps,
            r.seed,
            r.wall_ms,
            opt(r.cost),
            opt(r.oracle_cost),
            opt(r.ratio()),
            csv_field(&r.status)
        )
        .unwrap();
    }
    out
}

/// Median wall time per `n` for `algo`, over successful cells.
pub fn timing_series(records: &[BenchRecord], algo: Algo) -> Vec<(usize, f64)> {
    let mut by_n: std::collections::BTreeMap<usize, Vec<f64>> = Default::default();
    for r in records.iter().filter(|r| r.algo == algo && r.is_ok()) {
        by_n.entry(r.n).or_default().push(r.wall_ms);
    }
    by_n.into_iter()
        .map(|(n, mut t)| {
            t.sort_by(f64::total_cmp);
            (n, t[t.len() / 2])
        })
        .collect()
}

/// Least-squares slope of `log t` against `log n`.
pub fn loglog_slope(series: &[(usize, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        series.iter().filter(|&&(n, t)| n > 0 && t > 0.0).map(|&(n, t)| ((n as f64).ln(), t.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Log-log plot of median wall time against n, one series per algorithm.
pub fn plot(records: &[BenchRecord], path: &Path) -> Result<(), String> {
    use plotters::prelude::*;

    let mut algos: Vec<Algo> = records.iter().map(|r| r.algo).collect();
    algos.sort();
    algos.dedup();
    let series: Vec<(Algo, Vec<(usize, f64)>)> = algos
        .into_iter()
        .map(|a| (a, timing_series(records, a).into_iter().filter(|&(_, t)| t > 0.0).collect::<Vec<_>>()))
        .filter(|(_, s)| !s.is_empty())
        .collect();
    if series.is_empty() {
        return Err("no successful cells to plot".into());
    }
    let all = series.iter().flat_map(|(_, s)| s.iter());
    let (mut n0, mut n1, mut t0, mut t1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(n, t) in all {
        n0 = n0.min(n as f64);
        n1 = n1.max(n as f64);
        t0 = t0.min(t);
        t1 = t1.max(t);
    }
    let (n0, n1) = (n0 / 1.5, n1 * 1.5);
    let (t0, t1) = (t0 / 2.0, t1 * 2.0);

    let root = SVGBackend::new(path, (800, 600)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| e.to_string())?;
    let mut chart = ChartBuilder::on(&root)
        .caption("wall time vs n", ("sans-serif", 24))
        .margin(15)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d((n0..n1).log_scale(), (t0..t1).log_scale())
        .map_err(|e| e.to_string())?;
    chart
        .configure_mesh()
        .x_desc("n")
        .y_desc("wall ms")
        .draw()
        .map_err(|e| e.to_string())?;
    for (i, (algo, s)) in series.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        let pts: Vec<(f64, f64)> = s.iter().map(|&(n, t)| (n as f64, t)).collect();
        chart
            .draw_series(LineSeries::new(pts.clone(), color.stroke_width(2)))
            .map_err(|e| e.to_string())?
            .label(algo.name())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color));
        chart
            .draw_series(pts.into_iter().map(|p| Circle::new(p, 3, color.filled())))
            .map_err(|e| e.to_string())?;
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(|e| e.to_string())?;
    root.present().map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(algo: Algo, n: usize, wall_ms: f64) -> BenchRecord {
        BenchRecord {
            algo,
            n,
            max_mass: 1,
            eps: 0.5,
            seed: 0,
            wall_ms,
            cost: Some(2.0),
            oracle_cost: Some(2.0),
            status: "ok".into(),
        }
    }

    #[test]
    fn slope_of_a_power_law() {
        let s: Vec<(usize, f64)> = [10usize, 100, 1000].iter().map(|&n| (n, 3.0 * (n as f64).powf(1.5))).collect();
        assert!((loglog_slope(&s).unwrap() - 1.5).abs() < 1e-12);
        assert_eq!(loglog_slope(&s[..1]), None);
    }

    #[test]
    fn median_ignores_failed_cells() {
        let mut bad = record(Algo::Grid, 10, 1000.0);
        bad.status = "error: boom".into();
        let recs = [record(Algo::Grid, 10, 1.0), record(Algo::Grid, 10, 3.0), record(Algo::Grid, 10, 2.0), bad];
        assert_eq!(timing_series(&recs, Algo::Grid), vec![(10, 2.0)]);
    }

    #[test]
    fn csv_escapes_status() {
        let mut r = record(Algo::Wspd, 4, 1.25);
        r.oracle_cost = None;
        r.status = "error: a, b".into();
        let csv = to_csv(&[r]);
        assert_eq!(csv, format!("{CSV_HEADER}\nwspd,4,1,0.5,0,1.250,2,,,\"error: a, b\"\n"));
    }

    #[test]
    fn zero_cost_ratio_is_one() {
        let mut r = record(Algo::Exact, 2, 0.0);
        r.cost = Some(0.0);
        r.oracle_cost = Some(0.0);
        assert_eq!(r.ratio(), Some(1.0));
    }
}
