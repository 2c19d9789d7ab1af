//! Executes planned runs and writes traces, rate reports and the summary.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use gppa_core::admm::{admm_init_from_z, extract_primal_dual, DouglasRachfordOperator};
use gppa_core::engine::distance_floor;
use gppa_core::rates::{rate_from_distances, Comparison, FactorSource, RateExpectation, RateReport};
use gppa_core::{
    estimate_empirical_rate, kkt_residual, make_dual_alm_operator, run_generalized_admm, run_generalized_alm,
    run_gppa, superlinear_probe, theoretical_exact_rate, theoretical_inexact_factor, verify_admm_dr_correspondence,
    verify_alm_ppa_equivalence, AdmmConfig, AdmmTrace, AffineOperator, AlmConfig, AlmTrace, CSchedule, DeltaSchedule,
    GppaConfig, LinearlyConstrainedQp, MonotoneOperator, OperatorHandle, RotationOperator, Sampler, SeparableQp,
    Termination,
};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{plan_runs, EquivalenceTarget, ExperimentConfig, Issue, Kind, ProblemSource, RunSpec};
use crate::output::{fmt_num, fmt_opt, CsvTable};
use crate::problem::{load_problem_file, Problem};
use crate::CliError;

/// Comparison slack for empirical ratios against theoretical factors.
pub const RATE_SLACK: f64 = 1e-6;

#[derive(Debug, Clone)]
pub enum ResolvedProblem {
    Rotation(RotationOperator<f64>),
    Affine(AffineOperator<f64>),
    Qp(LinearlyConstrainedQp<f64>),
    Separable(SeparableQp<f64>),
}

impl ResolvedProblem {
    fn dim(&self) -> usize {
        match self {
            ResolvedProblem::Rotation(_) => 2,
            ResolvedProblem::Affine(op) => op.dim(),
            ResolvedProblem::Qp(p) => p.m(),
            ResolvedProblem::Separable(p) => p.m(),
        }
    }
}

/// A validated config with its problem materialized and its runs planned.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: ExperimentConfig,
    pub problem: ResolvedProblem,
    pub z0: DVector<f64>,
    pub runs: Vec<RunSpec>,
}

fn issue(field: &str, message: impl Into<String>) -> Issue {
    Issue {
        field: field.to_string(),
        message: message.into(),
    }
}

/// Random monotone affine map: SPD plus skew part.
pub fn random_affine(dim: usize, seed: u64) -> gppa_core::Result<AffineOperator<f64>> {
    let mut s = Sampler::new(seed);
    let spd = s.spd_matrix::<f64>(dim, 0.05);
    let b = s.uniform_matrix::<f64>(dim, dim, -1.0, 1.0);
    let h = s.uniform_vector::<f64>(dim, -1.0, 1.0);
    AffineOperator::new(spd + (&b - b.transpose()), h)
}

fn resolve(cfg: &ExperimentConfig) -> Result<ResolvedProblem, Issue> {
    let core = |field: &str, e: gppa_core::Error| issue(field, e.to_string());
    let resolved = match &cfg.problem {
        ProblemSource::Rotation { a } => {
            ResolvedProblem::Rotation(RotationOperator::new(*a).map_err(|e| core("problem.a", e))?)
        }
        ProblemSource::Affine { g, h } => {
            let n = g.len();
            let flat: Vec<f64> = g.iter().flatten().copied().collect();
            let op = AffineOperator::new(DMatrix::from_row_slice(n, n, &flat), DVector::from_vec(h.clone()))
                .map_err(|e| core("problem.g", e))?;
            ResolvedProblem::Affine(op)
        }
        ProblemSource::RandomAffine { dim, seed } => {
            ResolvedProblem::Affine(random_affine(*dim, *seed).map_err(|e| core("problem", e))?)
        }
        ProblemSource::RandomQp { n, m, seed } => {
            ResolvedProblem::Qp(LinearlyConstrainedQp::random(*n, *m, *seed).map_err(|e| core("problem", e))?)
        }
        ProblemSource::RandomSeparableQp { n, m, lambda, seed } => ResolvedProblem::Separable(
            SeparableQp::random(*n, *m, *lambda, *seed).map_err(|e| core("problem", e))?,
        ),
        ProblemSource::File { path } => match load_problem_file(path) {
            Ok(Problem::Qp(p)) => ResolvedProblem::Qp(p),
            Ok(Problem::Separable(p)) => ResolvedProblem::Separable(p),
            Err(e) => return Err(issue("problem.path", format!("{}: {e}", path.display()))),
        },
    };
    let wants_separable = cfg.kind == Kind::Admm
        || (cfg.kind == Kind::Equivalence && cfg.target == Some(EquivalenceTarget::Admm));
    let is_separable = matches!(resolved, ResolvedProblem::Separable(_));
    if wants_separable != is_separable {
        let need = if wants_separable { "a separable QP" } else { "a linearly constrained QP or operator" };
        return Err(issue("problem", format!("this experiment needs {need}")));
    }
    Ok(resolved)
}

/// Materializes the problem and checks everything that depends on it.
pub fn prepare(config: ExperimentConfig) -> Result<Prepared, Vec<Issue>> {
    let problem = resolve(&config).map_err(|i| vec![i])?;
    let dim = problem.dim();
    let z0 = match &config.z0 {
        Some(z) => {
            if z.len() != dim {
                return Err(vec![issue("z0", format!("expected {dim} entries, got {}", z.len()))]);
            }
            DVector::from_vec(z.clone())
        }
        None => match &problem {
            ResolvedProblem::Rotation(_) => DVector::from_vec(vec![1.0, 0.0]),
            ResolvedProblem::Affine(_) => DVector::from_element(dim, 1.0),
            ResolvedProblem::Qp(_) | ResolvedProblem::Separable(_) => DVector::zeros(dim),
        },
    };
    if config.kind == Kind::SuperlinearProbe && z0.norm() == 0.0 {
        return Err(vec![issue("z0", "superlinear_probe needs a nonzero starting point")]);
    }
    let runs = plan_runs(&config);
    Ok(Prepared {
        config,
        problem,
        z0,
        runs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub run: usize,
    pub kind: &'static str,
    pub gamma: f64,
    pub c: Option<f64>,
    pub delta0: Option<f64>,
    pub theoretical_factor: Option<f64>,
    pub empirical_tail_max: Option<f64>,
    pub empirical_geo_mean: Option<f64>,
    pub tight: Option<bool>,
    pub final_metric: Option<f64>,
    pub iterations: usize,
    pub status: String,
}

impl SummaryRow {
    pub const HEADER: [&'static str; 12] = [
        "run",
        "kind",
        "gamma",
        "c",
        "delta0",
        "theoretical_factor",
        "empirical_tail_max",
        "empirical_geo_mean",
        "tight",
        "final_metric",
        "iterations",
        "status",
    ];

    fn cells(&self) -> Vec<String> {
        vec![
            self.run.to_string(),
            self.kind.to_string(),
            fmt_num(self.gamma),
            fmt_opt(self.c),
            fmt_opt(self.delta0),
            fmt_opt(self.theoretical_factor),
            fmt_opt(self.empirical_tail_max),
            fmt_opt(self.empirical_geo_mean),
            self.tight.map(|t| t.to_string()).unwrap_or_default(),
            fmt_opt(self.final_metric),
            self.iterations.to_string(),
            self.status.clone(),
        ]
    }

    pub fn failed(&self) -> bool {
        self.status != "ok"
    }
}

struct Artifacts {
    csv: String,
    report: Value,
    row: SummaryRow,
}

fn schedule(c: f64, growth: Option<f64>) -> CSchedule<f64> {
    match growth {
        Some(ratio) if ratio != 1.0 => CSchedule::Geometric { c0: c, ratio },
        _ => CSchedule::Constant(c),
    }
}

fn base_row(cfg: &ExperimentConfig, spec: &RunSpec, c: Option<f64>) -> SummaryRow {
    SummaryRow {
        run: spec.index,
        kind: cfg.kind.name(),
        gamma: spec.gamma,
        c,
        delta0: spec.delta0,
        theoretical_factor: None,
        empirical_tail_max: None,
        empirical_geo_mean: None,
        tight: None,
        final_metric: None,
        iterations: 0,
        status: "ok".into(),
    }
}

fn apply_rate(row: &mut SummaryRow, rate: &Result<RateReport<f64>, gppa_core::Error>) -> Value {
    match rate {
        Ok(r) => {
            row.theoretical_factor = r.theoretical_factor;
            row.empirical_tail_max = Some(r.empirical_tail_ratio_max);
            row.empirical_geo_mean = Some(r.empirical_geometric_mean);
            row.tight = Some(r.tight);
            serde_json::to_value(r).expect("rate reports serialize")
        }
        Err(e) => json!({ "unavailable": e.to_string() }),
    }
}

fn operator(problem: &ResolvedProblem) -> gppa_core::Result<OperatorHandle<f64>> {
    Ok(match problem {
        ResolvedProblem::Rotation(op) => Arc::new(op.clone()),
        ResolvedProblem::Affine(op) => Arc::new(op.clone()),
        ResolvedProblem::Qp(p) => Arc::new(make_dual_alm_operator(p)?),
        ResolvedProblem::Separable(p) => Arc::new(DouglasRachfordOperator::new(p)?),
    })
}

fn run_gppa_kind(p: &Prepared, spec: &RunSpec) -> gppa_core::Result<Artifacts> {
    let cfg = &p.config;
    let op = operator(&p.problem)?;
    let mut gcfg = GppaConfig::new(spec.gamma, schedule(spec.c, cfg.c_growth))
        .with_max_iter(cfg.max_iter)
        .with_residual_tol(cfg.residual_tol)
        .with_seed(cfg.seed);
    if let Some(d) = spec.delta0 {
        gcfg = gcfg.with_delta(DeltaSchedule::new(d, cfg.delta_decay)?);
    }
    let trace = run_gppa(&op, &gcfg, &p.z0)?;

    let mut csv = CsvTable::new(&[
        "k",
        "c_k",
        "delta_k",
        "residual",
        "dist_to_zero",
        "step_ratio",
        "z_norm",
        "step_length",
        "inexact_error",
    ]);
    for r in &trace.records {
        csv.row(vec![
            r.k.to_string(),
            fmt_num(r.c_k),
            fmt_opt(r.delta_k),
            fmt_num(r.residual),
            fmt_opt(r.dist_to_zero),
            fmt_opt(r.step_ratio),
            fmt_num(r.z_norm),
            fmt_num(r.step_length),
            fmt_opt(r.inexact_error),
        ]);
    }

    let mut row = base_row(cfg, spec, Some(spec.c));
    row.iterations = trace.records.len();
    row.final_metric = trace.final_dist;
    let modulus = op.inverse_lipschitz_modulus();
    let equality = matches!(p.problem, ResolvedProblem::Rotation(_))
        && spec.gamma == 1.0
        && spec.delta0.is_none()
        && cfg.c_growth.is_none_or(|g| g == 1.0);
    let rate_json = match op.known_zero() {
        Some(z_star) => {
            let expectation = modulus.map(|a| RateExpectation {
                factor: FactorSource::Modulus(a),
                comparison: if equality {
                    Comparison::Equality(RATE_SLACK)
                } else {
                    Comparison::Bound(RATE_SLACK)
                },
            });
            apply_rate(
                &mut row,
                &estimate_empirical_rate(&trace, z_star, cfg.window_fraction, expectation),
            )
        }
        None => json!({ "unavailable": "operator has no known zero" }),
    };
    let (sqrt_rho, theta0) = match modulus {
        Some(a) => (
            Some(theoretical_exact_rate(spec.gamma, spec.c, a)?.sqrt()),
            match spec.delta0 {
                Some(d) => theoretical_inexact_factor(spec.gamma, spec.c, a, d)?,
                None => None,
            },
        ),
        None => (None, None),
    };
    let termination = match &trace.termination {
        Termination::Converged => "converged".to_string(),
        Termination::MaxIter => "max_iter".to_string(),
        Termination::NumericalFailure(msg) => {
            row.status = format!("numerical_failure: {msg}");
            "numerical_failure".to_string()
        }
    };
    let report = json!({
        "run": spec.index,
        "kind": cfg.kind.name(),
        "gamma": spec.gamma,
        "c": spec.c,
        "delta0": spec.delta0,
        "modulus": modulus,
        "sqrt_rho": sqrt_rho,
        "theta_0": theta0,
        "termination": termination,
        "iterations": trace.records.len(),
        "final_dist": trace.final_dist,
        "rate": rate_json,
    });
    Ok(Artifacts {
        csv: csv.finish(),
        report,
        row,
    })
}

fn alm_csv(trace: &AlmTrace<f64>) -> String {
    let floor = trace.dual_optimum.as_ref().map(distance_floor);
    let dists = trace.dual_distances();
    let mut csv = CsvTable::new(&[
        "k",
        "c_k",
        "delta_k",
        "residual",
        "dist_to_zero",
        "step_ratio",
        "x_norm",
        "p_norm",
    ]);
    for (i, r) in trace.records.iter().enumerate() {
        let ratio = match (&dists, floor) {
            (Some(d), Some(f)) if d[i] > f => Some(d[i + 1] / d[i]),
            _ => None,
        };
        csv.row(vec![
            r.k.to_string(),
            fmt_num(r.c_k),
            String::new(),
            fmt_num(r.primal_residual),
            fmt_opt(r.dual_distance),
            fmt_opt(ratio),
            fmt_num(r.x_next.norm()),
            fmt_num(r.p.norm()),
        ]);
    }
    csv.finish()
}

fn admm_csv(trace: &AdmmTrace<f64>, z_star: &DVector<f64>) -> String {
    let zs = trace.z_sequence();
    let dists: Vec<f64> = zs.iter().map(|z| (z - z_star).norm()).collect();
    let floor = distance_floor(z_star);
    let mut csv = CsvTable::new(&[
        "k",
        "c_k",
        "delta_k",
        "residual",
        "dist_to_zero",
        "step_ratio",
        "x_norm",
        "w_norm",
        "p_norm",
    ]);
    for (i, r) in trace.records.iter().enumerate() {
        let ratio = (dists[i] > floor).then(|| dists[i + 1] / dists[i]);
        csv.row(vec![
            r.k.to_string(),
            fmt_num(1.0),
            String::new(),
            fmt_num(r.constraint_residual),
            fmt_num(dists[i]),
            fmt_opt(ratio),
            fmt_num(r.x_next.norm()),
            fmt_num(r.w.norm()),
            fmt_num(r.p.norm()),
        ]);
    }
    csv.finish()
}

fn run_alm_kind(p: &Prepared, spec: &RunSpec, prob: &LinearlyConstrainedQp<f64>) -> gppa_core::Result<Artifacts> {
    let cfg = &p.config;
    let sched = schedule(spec.c, cfg.c_growth);
    let acfg = AlmConfig::new(spec.gamma, sched.clone(), cfg.max_iter).with_primal_tol(cfg.residual_tol);
    let trace = run_generalized_alm(prob, &acfg, &p.z0)?;
    let a = prob.gradient_lipschitz() / prob.aat_min_eigenvalue();
    let mut row = base_row(cfg, spec, Some(spec.c));
    row.iterations = trace.records.len();
    let dists = trace.dual_distances().unwrap_or_default();
    row.final_metric = dists.last().copied();
    let floor = trace.dual_optimum.as_ref().map(distance_floor).unwrap_or(0.0);
    let factor_at = |k: usize| theoretical_exact_rate(spec.gamma, sched.at(k), a).ok().map(f64::sqrt);
    let rate = rate_from_distances(
        &dists,
        floor,
        cfg.window_fraction,
        factor_at,
        Some(Comparison::Bound(RATE_SLACK)),
    );
    let rate_json = apply_rate(&mut row, &rate);
    let last = trace.records.last().expect("max_iter >= 1");
    let kkt = kkt_residual(prob, &last.x_next, &last.p_next)?;
    let report = json!({
        "run": spec.index,
        "kind": cfg.kind.name(),
        "gamma": spec.gamma,
        "c": spec.c,
        "modulus": a,
        "sqrt_rho": theoretical_exact_rate(spec.gamma, spec.c, a)?.sqrt(),
        "converged": trace.converged,
        "iterations": trace.records.len(),
        "final_primal_residual": last.primal_residual,
        "final_kkt_residual": kkt,
        "rate": rate_json,
    });
    Ok(Artifacts {
        csv: alm_csv(&trace),
        report,
        row,
    })
}

fn run_admm_kind(p: &Prepared, spec: &RunSpec, prob: &SeparableQp<f64>) -> gppa_core::Result<Artifacts> {
    let cfg = &p.config;
    let (w0, p0) = admm_init_from_z(prob, &p.z0)?;
    let acfg = AdmmConfig::new(spec.gamma, cfg.max_iter).with_residual_tol(cfg.residual_tol);
    let trace = run_generalized_admm(prob, &acfg, &w0, &p0)?;
    let op = DouglasRachfordOperator::new(prob)?;
    let z_star = prob.dr_fixed_point()?;
    let lip = op.contraction_bound();
    // Lipschitz constant of (1 - γ)I + γG
    let factor = (1.0 - spec.gamma).abs() + spec.gamma * lip;
    let dists: Vec<f64> = trace.z_sequence().iter().map(|z| (z - &z_star).norm()).collect();
    let mut row = base_row(cfg, spec, None);
    row.iterations = trace.records.len();
    row.final_metric = dists.last().copied();
    let rate = rate_from_distances(
        &dists,
        distance_floor(&z_star),
        cfg.window_fraction,
        |_| Some(factor),
        Some(Comparison::Bound(RATE_SLACK)),
    );
    let rate_json = apply_rate(&mut row, &rate);
    let estimate = extract_primal_dual(&trace, prob)?;
    let report = json!({
        "run": spec.index,
        "kind": cfg.kind.name(),
        "gamma": spec.gamma,
        "lambda": prob.lambda(),
        "alpha": prob.alpha(),
        "beta": prob.beta(),
        "g_lipschitz_bound": lip,
        "relaxed_factor": factor,
        "converged": trace.converged,
        "iterations": trace.records.len(),
        "final_constraint_residual": trace.records.last().map(|r| r.constraint_residual),
        "tail_ratio_max": {
            "p": estimate.p_ratios.tail_max,
            "w": estimate.w_ratios.tail_max,
            "mx": estimate.mx_ratios.tail_max,
            "x": estimate.x_ratios.as_ref().and_then(|r| r.tail_max),
        },
        "notice": estimate.notice,
        "rate": rate_json,
    });
    Ok(Artifacts {
        csv: admm_csv(&trace, &z_star),
        report,
        row,
    })
}

fn run_probe_kind(p: &Prepared, spec: &RunSpec, a: f64) -> gppa_core::Result<Artifacts> {
    let cfg = &p.config;
    let growth = cfg.c_growth.unwrap_or(1.0);
    let probe = superlinear_probe(a, spec.gamma, spec.c, growth, cfg.max_iter, &p.z0)?;
    let mut csv = CsvTable::new(&[
        "k",
        "c_k",
        "delta_k",
        "residual",
        "dist_to_zero",
        "step_ratio",
        "predicted_ratio",
    ]);
    let mut norm = p.z0.norm();
    for (k, ((c, r), pr)) in probe
        .c_values
        .iter()
        .zip(&probe.ratios)
        .zip(&probe.predicted_ratios)
        .enumerate()
    {
        csv.row(vec![
            k.to_string(),
            fmt_num(*c),
            String::new(),
            String::new(),
            fmt_num(norm),
            fmt_num(*r),
            fmt_num(*pr),
        ]);
        norm *= r;
    }
    let mut row = base_row(cfg, spec, Some(spec.c));
    row.iterations = probe.ratios.len();
    row.theoretical_factor = Some(probe.expected_limit);
    row.final_metric = Some(probe.final_ratio);
    let report = serde_json::to_value(&probe).expect("probe reports serialize");
    Ok(Artifacts {
        csv: csv.finish(),
        report,
        row,
    })
}

fn run_equivalence_kind(p: &Prepared, spec: &RunSpec) -> gppa_core::Result<Artifacts> {
    let cfg = &p.config;
    let (rep, csv, c) = match &p.problem {
        ResolvedProblem::Qp(prob) => {
            let sched = schedule(spec.c, cfg.c_growth);
            let rep = verify_alm_ppa_equivalence(prob, spec.gamma, &sched, &p.z0, cfg.max_iter)?;
            let trace = run_generalized_alm(prob, &AlmConfig::new(spec.gamma, sched, cfg.max_iter), &p.z0)?;
            (rep, alm_csv(&trace), Some(spec.c))
        }
        ResolvedProblem::Separable(prob) => {
            let rep = verify_admm_dr_correspondence(prob, spec.gamma, &p.z0, cfg.max_iter)?;
            let (w0, p0) = admm_init_from_z(prob, &p.z0)?;
            let trace = run_generalized_admm(prob, &AdmmConfig::new(spec.gamma, cfg.max_iter), &w0, &p0)?;
            (rep, admm_csv(&trace, &prob.dr_fixed_point()?), None)
        }
        _ => return Err(gppa_core::Error::Config("equivalence needs a QP problem".into())),
    };
    let mut row = base_row(cfg, spec, c);
    row.iterations = rep.iterations_compared;
    row.final_metric = Some(rep.max_deviation.max(rep.max_secondary_deviation));
    row.tight = Some(rep.passed);
    if !rep.passed {
        row.status = format!(
            "equivalence_failed: deviation {:e} above tolerance {:e}",
            rep.max_deviation.max(rep.max_secondary_deviation),
            rep.tolerance
        );
    }
    let mut report = serde_json::to_value(&rep).expect("equivalence reports serialize");
    report["run"] = json!(spec.index);
    report["target"] = json!(cfg.target);
    report["gamma"] = json!(spec.gamma);
    Ok(Artifacts { csv, report, row })
}

fn run_one(p: &Prepared, spec: &RunSpec) -> Artifacts {
    let result = match (p.config.kind, &p.problem) {
        (Kind::GppaExact | Kind::GppaInexact | Kind::RateSweep, _) => run_gppa_kind(p, spec),
        (Kind::Alm, ResolvedProblem::Qp(prob)) => run_alm_kind(p, spec, prob),
        (Kind::Admm, ResolvedProblem::Separable(prob)) => run_admm_kind(p, spec, prob),
        (Kind::SuperlinearProbe, ResolvedProblem::Rotation(op)) => run_probe_kind(p, spec, op.a()),
        (Kind::Equivalence, _) => run_equivalence_kind(p, spec),
        _ => Err(gppa_core::Error::Config("problem does not fit the experiment kind".into())),
    };
    result.unwrap_or_else(|e| {
        let mut row = base_row(&p.config, spec, Some(spec.c));
        row.status = format!("numerical_failure: {e}");
        Artifacts {
            csv: String::new(),
            report: json!({ "run": spec.index, "error": e.to_string() }),
            row,
        }
    })
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Runs every planned grid point on up to `workers` threads, writes
/// `run_NNN.csv`, `run_NNN.json` and `summary.csv` into `out_dir`, and
/// returns the summary rows in run order.
pub fn run_experiment(prepared: &Prepared, out_dir: &Path, workers: usize) -> Result<Vec<SummaryRow>, CliError> {
    fs::create_dir_all(out_dir).map_err(|source| CliError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Numerical(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<SummaryRow, CliError>> = pool.install(|| {
        prepared
            .runs
            .par_iter()
            .map(|spec| {
                let art = run_one(prepared, spec);
                let stem = format!("run_{:03}", spec.index);
                write(&out_dir.join(format!("{stem}.csv")), &art.csv)?;
                let mut report = serde_json::to_string_pretty(&art.report).expect("reports serialize");
                report.push('\n');
                write(&out_dir.join(format!("{stem}.json")), &report)?;
                Ok(art.row)
            })
            .collect()
    });
    let rows = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut summary = CsvTable::new(&SummaryRow::HEADER);
    for r in &rows {
        summary.row(r.cells());
    }
    write(&out_dir.join("summary.csv"), &summary.finish())?;

    let failures: Vec<String> = rows
        .iter()
        .filter(|r| r.failed())
        .map(|r| format!("run {}: {}", r.run, r.status))
        .collect();
    if failures.is_empty() {
        Ok(rows)
    } else {
        Err(CliError::Numerical(failures.join("; ")))
    }
}
