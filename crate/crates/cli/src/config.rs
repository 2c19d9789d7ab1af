//! Experiment configuration.
//!
//! Configs are JSON objects. Parsing walks the whole document and collects
//! every problem it finds, so a rejected config lists all of its errors.
//!
//! ```json
//! {
//!   "kind": "gppa_exact",
//!   "problem": { "type": "rotation", "a": 1.0 },
//!   "gamma": 1.0,
//!   "c": 1.0,
//!   "max_iter": 50,
//!   "z0": [1.0, 0.0]
//! }
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Issue {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    GppaExact,
    GppaInexact,
    Alm,
    Admm,
    RateSweep,
    SuperlinearProbe,
    Equivalence,
}

impl Kind {
    const ALL: [(&'static str, Kind); 7] = [
        ("gppa_exact", Kind::GppaExact),
        ("gppa_inexact", Kind::GppaInexact),
        ("alm", Kind::Alm),
        ("admm", Kind::Admm),
        ("rate_sweep", Kind::RateSweep),
        ("superlinear_probe", Kind::SuperlinearProbe),
        ("equivalence", Kind::Equivalence),
    ];

    pub fn name(self) -> &'static str {
        Self::ALL.iter().find(|(_, k)| *k == self).map(|(n, _)| *n).unwrap()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EquivalenceTarget {
    Alm,
    Admm,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ProblemSource {
    Rotation { a: f64 },
    Affine { g: Vec<Vec<f64>>, h: Vec<f64> },
    RandomAffine { dim: usize, seed: u64 },
    RandomQp { n: usize, m: usize, seed: u64 },
    RandomSeparableQp { n: usize, m: usize, lambda: f64, seed: u64 },
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub problem: ProblemSource,
    /// Grid values; a scalar entry becomes a one-element grid.
    pub gamma: Vec<f64>,
    pub c: Vec<f64>,
    pub delta0: Vec<f64>,
    pub c_growth: Option<f64>,
    pub delta_decay: f64,
    pub max_iter: usize,
    pub residual_tol: f64,
    pub z0: Option<Vec<f64>>,
    pub seed: u64,
    pub window_fraction: f64,
    pub target: Option<EquivalenceTarget>,
    pub out_dir: Option<PathBuf>,
    pub has_grid: bool,
}

/// One point of the `γ × c × δ0` grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunSpec {
    pub index: usize,
    pub gamma: f64,
    pub c: f64,
    pub delta0: Option<f64>,
}

pub const DEFAULT_MAX_ITER: usize = 200;
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-10;
pub const DEFAULT_DELTA_DECAY: f64 = 0.9;
pub const DEFAULT_WINDOW_FRACTION: f64 = 0.5;

const TOP_KEYS: &[&str] = &[
    "kind",
    "problem",
    "gamma",
    "c",
    "c_growth",
    "delta0",
    "delta_decay",
    "max_iter",
    "residual_tol",
    "z0",
    "seed",
    "window_fraction",
    "target",
    "out_dir",
    "grid",
];

struct Walker {
    issues: Vec<Issue>,
}

impl Walker {
    fn push(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.issues.push(Issue {
            field: field.into(),
            message: message.into(),
        });
    }

    fn unknown_keys(&mut self, obj: &Map<String, Value>, allowed: &[&str], prefix: &str) {
        for key in obj.keys() {
            if !allowed.contains(&key.as_str()) {
                self.push(format!("{prefix}{key}"), "unknown key");
            }
        }
    }

    fn number(&mut self, field: &str, v: &Value) -> Option<f64> {
        match v.as_f64() {
            Some(x) if x.is_finite() => Some(x),
            _ => {
                self.push(field, format!("expected a finite number, got {v}"));
                None
            }
        }
    }

    fn count(&mut self, field: &str, v: &Value) -> Option<u64> {
        match v.as_u64() {
            Some(x) => Some(x),
            None => {
                self.push(field, format!("expected a non-negative integer, got {v}"));
                None
            }
        }
    }

    fn numbers(&mut self, field: &str, v: &Value) -> Option<Vec<f64>> {
        let Some(items) = v.as_array() else {
            self.push(field, format!("expected an array of numbers, got {v}"));
            return None;
        };
        let mut out = Vec::with_capacity(items.len());
        let mut ok = true;
        for (i, item) in items.iter().enumerate() {
            match self.number(&format!("{field}[{i}]"), item) {
                Some(x) => out.push(x),
                None => ok = false,
            }
        }
        ok.then_some(out)
    }

    fn scalar_or_list(&mut self, field: &str, v: &Value) -> Option<Vec<f64>> {
        if v.is_array() {
            self.numbers(field, v)
        } else {
            self.number(field, v).map(|x| vec![x])
        }
    }

    fn check_gamma(&mut self, field: &str, values: &[f64]) {
        for &g in values {
            if !(g > 0.0 && g < 2.0) {
                self.push(field, format!("gamma must lie in the open interval (0, 2), got {g}"));
            }
        }
    }

    fn check_positive(&mut self, field: &str, values: &[f64]) {
        for &x in values {
            if x <= 0.0 {
                self.push(field, format!("must be > 0, got {x}"));
            }
        }
    }

    fn check_non_negative(&mut self, field: &str, values: &[f64]) {
        for &x in values {
            if x < 0.0 {
                self.push(field, format!("must be >= 0, got {x}"));
            }
        }
    }

    fn problem(&mut self, v: &Value) -> Option<ProblemSource> {
        let Some(obj) = v.as_object() else {
            self.push("problem", "expected an object");
            return None;
        };
        let Some(ty) = obj.get("type").and_then(Value::as_str) else {
            self.push("problem.type", "missing or not a string");
            return None;
        };
        let keys: &[&str] = match ty {
            "rotation" => &["type", "a"],
            "affine" => &["type", "g", "h"],
            "random_affine" => &["type", "dim", "seed"],
            "random_qp" => &["type", "n", "m", "seed"],
            "random_separable_qp" => &["type", "n", "m", "lambda", "seed"],
            "file" => &["type", "path"],
            other => {
                self.push(
                    "problem.type",
                    format!(
                        "unknown problem type `{other}`; expected one of rotation, affine, \
                         random_affine, random_qp, random_separable_qp, file"
                    ),
                );
                return None;
            }
        };
        self.unknown_keys(obj, keys, "problem.");
        let mut missing = false;
        for key in &keys[1..] {
            if *key != "seed" && !obj.contains_key(*key) {
                self.push(format!("problem.{key}"), "required key missing");
                missing = true;
            }
        }
        if missing {
            return None;
        }
        let seed = match obj.get("seed") {
            Some(s) => self.count("problem.seed", s)?,
            None => 0,
        };
        let dim = |w: &mut Self, key: &str| -> Option<usize> {
            let field = format!("problem.{key}");
            let n = w.count(&field, &obj[key])? as usize;
            if n == 0 {
                w.push(field, "must be at least 1");
                return None;
            }
            Some(n)
        };
        match ty {
            "rotation" => {
                let a = self.number("problem.a", &obj["a"])?;
                if a <= 0.0 {
                    self.push("problem.a", format!("must be > 0, got {a}"));
                    return None;
                }
                Some(ProblemSource::Rotation { a })
            }
            "affine" => {
                let rows = obj["g"].as_array();
                let Some(rows) = rows else {
                    self.push("problem.g", "expected an array of rows");
                    return None;
                };
                let mut g = Vec::new();
                for (i, r) in rows.iter().enumerate() {
                    g.push(self.numbers(&format!("problem.g[{i}]"), r)?);
                }
                let h = self.numbers("problem.h", &obj["h"])?;
                if g.is_empty() || g.iter().any(|r| r.len() != g.len()) || h.len() != g.len() {
                    self.push("problem", "g must be a non-empty square matrix and h must match its size");
                    return None;
                }
                Some(ProblemSource::Affine { g, h })
            }
            "random_affine" => Some(ProblemSource::RandomAffine {
                dim: dim(self, "dim")?,
                seed,
            }),
            "random_qp" => {
                let (n, m) = (dim(self, "n"), dim(self, "m"));
                let (n, m) = (n?, m?);
                if m > n {
                    self.push("problem.m", format!("at most n = {n} constraints allowed, got {m}"));
                    return None;
                }
                Some(ProblemSource::RandomQp { n, m, seed })
            }
            "random_separable_qp" => {
                let (n, m) = (dim(self, "n"), dim(self, "m"));
                let lambda = self.number("problem.lambda", &obj["lambda"]);
                let (n, m, lambda) = (n?, m?, lambda?);
                if lambda <= 0.0 {
                    self.push("problem.lambda", format!("must be > 0, got {lambda}"));
                    return None;
                }
                Some(ProblemSource::RandomSeparableQp { n, m, lambda, seed })
            }
            "file" => match obj["path"].as_str() {
                Some(p) => Some(ProblemSource::File { path: PathBuf::from(p) }),
                None => {
                    self.push("problem.path", "expected a string");
                    None
                }
            },
            _ => unreachable!(),
        }
    }
}

/// Parses and validates a config document, returning every issue found.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, Vec<Issue>> {
    let root: Value = serde_json::from_str(text).map_err(|e| {
        vec![Issue {
            field: format!("line {}, column {}", e.line(), e.column()),
            message: e.to_string(),
        }]
    })?;
    let Some(obj) = root.as_object() else {
        return Err(vec![Issue {
            field: "config".into(),
            message: "expected a JSON object".into(),
        }]);
    };
    let mut w = Walker { issues: Vec::new() };
    w.unknown_keys(obj, TOP_KEYS, "");

    let kind = match obj.get("kind") {
        None => {
            w.push("kind", "required key missing");
            None
        }
        Some(v) => match v.as_str().and_then(|s| Kind::ALL.iter().find(|(n, _)| *n == s)) {
            Some((_, k)) => Some(*k),
            None => {
                let names: Vec<_> = Kind::ALL.iter().map(|(n, _)| *n).collect();
                w.push("kind", format!("expected one of {}, got {v}", names.join(", ")));
                None
            }
        },
    };
    let problem = match obj.get("problem") {
        Some(v) => w.problem(v),
        None => {
            w.push("problem", "required key missing");
            None
        }
    };

    let grid = match obj.get("grid") {
        None => None,
        Some(Value::Object(g)) => {
            w.unknown_keys(g, &["gamma", "c", "delta0"], "grid.");
            if g.is_empty() {
                w.push("grid", "grid must list at least one of gamma, c, delta0");
            }
            Some(g.clone())
        }
        Some(_) => {
            w.push("grid", "expected an object");
            None
        }
    };
    let axis = |w: &mut Walker, key: &str| -> Option<Vec<f64>> {
        let in_grid = grid.as_ref().and_then(|g| g.get(key));
        let top = obj.get(key);
        if in_grid.is_some() && top.is_some() {
            w.push(key, format!("given both at top level and in grid.{key}"));
        }
        let values = match (in_grid, top) {
            (Some(v), _) => {
                let field = format!("grid.{key}");
                let vals = w.numbers(&field, v)?;
                if vals.is_empty() {
                    w.push(field, "grid values must be non-empty");
                    return None;
                }
                vals
            }
            (None, Some(v)) => w.scalar_or_list(key, v)?,
            (None, None) => Vec::new(),
        };
        Some(values)
    };
    let gamma = axis(&mut w, "gamma");
    let c = axis(&mut w, "c");
    let delta0 = axis(&mut w, "delta0");
    if let Some(g) = &gamma {
        w.check_gamma("gamma", g);
    }
    if let Some(c) = &c {
        w.check_positive("c", c);
    }
    if let Some(d) = &delta0 {
        w.check_non_negative("delta0", d);
    }

    let opt_number = |w: &mut Walker, key: &str| obj.get(key).and_then(|v| w.number(key, v));
    let c_growth = opt_number(&mut w, "c_growth");
    if let Some(r) = c_growth {
        if r < 1.0 {
            w.push("c_growth", format!("must be >= 1, got {r}"));
        }
    }
    let delta_decay = opt_number(&mut w, "delta_decay").unwrap_or(DEFAULT_DELTA_DECAY);
    if !(delta_decay > 0.0 && delta_decay < 1.0) {
        w.push("delta_decay", format!("must lie in the open interval (0, 1), got {delta_decay}"));
    }
    let residual_tol = opt_number(&mut w, "residual_tol").unwrap_or(DEFAULT_RESIDUAL_TOL);
    w.check_positive("residual_tol", &[residual_tol]);
    let window_fraction = opt_number(&mut w, "window_fraction").unwrap_or(DEFAULT_WINDOW_FRACTION);
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        w.push("window_fraction", format!("must lie in (0, 1], got {window_fraction}"));
    }
    let max_iter = match obj.get("max_iter") {
        Some(v) => w.count("max_iter", v).unwrap_or(1) as usize,
        None => DEFAULT_MAX_ITER,
    };
    if max_iter == 0 {
        w.push("max_iter", "must be at least 1");
    }
    let seed = match obj.get("seed") {
        Some(v) => w.count("seed", v).unwrap_or(0),
        None => 0,
    };
    let z0 = obj.get("z0").and_then(|v| w.numbers("z0", v));
    let target = match obj.get("target") {
        None => None,
        Some(v) => match v.as_str() {
            Some("alm") => Some(EquivalenceTarget::Alm),
            Some("admm") => Some(EquivalenceTarget::Admm),
            _ => {
                w.push("target", format!("expected \"alm\" or \"admm\", got {v}"));
                None
            }
        },
    };
    let out_dir = match obj.get("out_dir") {
        None => None,
        Some(Value::String(s)) => Some(PathBuf::from(s)),
        Some(v) => {
            w.push("out_dir", format!("expected a string, got {v}"));
            None
        }
    };

    let (Some(kind), Some(problem), Some(gamma), Some(c), Some(delta0)) = (kind, problem, gamma, c, delta0) else {
        return Err(w.issues);
    };
    let config = ExperimentConfig {
        kind,
        problem,
        gamma,
        c,
        delta0,
        c_growth,
        delta_decay,
        max_iter,
        residual_tol,
        z0,
        seed,
        window_fraction,
        target,
        out_dir,
        has_grid: grid.is_some(),
    };
    check_kind_rules(&config, &mut w);
    if w.issues.is_empty() {
        Ok(config)
    } else {
        Err(w.issues)
    }
}

fn check_kind_rules(cfg: &ExperimentConfig, w: &mut Walker) {
    use Kind::*;
    use ProblemSource as P;
    if cfg.gamma.is_empty() {
        w.push("gamma", "required key missing");
    }
    let c_used = !matches!(cfg.kind, Admm) && !(cfg.kind == Equivalence && cfg.target == Some(EquivalenceTarget::Admm));
    if c_used && cfg.c.is_empty() {
        w.push("c", "required key missing");
    }
    if !c_used && !cfg.c.is_empty() {
        w.push("c", "not used by this experiment; the penalty is the problem's lambda");
    }
    let operator_problem = matches!(
        cfg.problem,
        P::Rotation { .. } | P::Affine { .. } | P::RandomAffine { .. } | P::RandomQp { .. } | P::File { .. }
    );
    let qp_problem = matches!(cfg.problem, P::RandomQp { .. } | P::File { .. });
    let separable_problem = matches!(cfg.problem, P::RandomSeparableQp { .. } | P::File { .. });
    match cfg.kind {
        GppaExact | GppaInexact | RateSweep => {
            if !operator_problem {
                w.push("problem.type", "gppa experiments need rotation, affine, random_affine, random_qp or file");
            }
        }
        Alm => {
            if !qp_problem {
                w.push("problem.type", "alm needs random_qp or a problem file");
            }
        }
        Admm => {
            if !separable_problem {
                w.push("problem.type", "admm needs random_separable_qp or a problem file");
            }
        }
        SuperlinearProbe => {
            if !matches!(cfg.problem, P::Rotation { .. }) {
                w.push("problem.type", "superlinear_probe runs on the rotation operator");
            }
            if cfg.c_growth.is_none() {
                w.push("c_growth", "required key missing");
            }
            if cfg.max_iter < 10 {
                w.push("max_iter", format!("superlinear_probe needs at least 10 iterations, got {}", cfg.max_iter));
            }
        }
        Equivalence => match cfg.target {
            None => w.push("target", "required key missing"),
            Some(EquivalenceTarget::Alm) if !qp_problem => {
                w.push("problem.type", "ALM equivalence needs random_qp or a problem file")
            }
            Some(EquivalenceTarget::Admm) if !separable_problem => {
                w.push("problem.type", "ADMM equivalence needs random_separable_qp or a problem file")
            }
            _ => {}
        },
    }
    if cfg.c_growth.is_some() && !matches!(cfg.kind, SuperlinearProbe | GppaExact | GppaInexact | RateSweep | Alm) {
        w.push("c_growth", "not used by this experiment");
    }
    match cfg.kind {
        GppaInexact if cfg.delta0.is_empty() => w.push("delta0", "required key missing"),
        GppaExact | Alm | Admm | SuperlinearProbe | Equivalence if !cfg.delta0.is_empty() => {
            w.push("delta0", "only gppa_inexact and rate_sweep use an inexactness schedule")
        }
        RateSweep if !cfg.has_grid => w.push("grid", "rate_sweep requires a grid"),
        _ => {}
    }
    if cfg.target.is_some() && cfg.kind != Equivalence {
        w.push("target", "only used by equivalence experiments");
    }
}

/// Reads a config file. Relative problem-file paths resolve against the
/// config's directory.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, Vec<Issue>> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        vec![Issue {
            field: path.display().to_string(),
            message: e.to_string(),
        }]
    })?;
    let mut cfg = parse_config(&text)?;
    if let ProblemSource::File { path: p } = &mut cfg.problem {
        if p.is_relative() {
            if let Some(dir) = path.parent() {
                *p = dir.join(&*p);
            }
        }
    }
    Ok(cfg)
}

/// Runs in row-major order over `γ × c × δ0`.
pub fn plan_runs(cfg: &ExperimentConfig) -> Vec<RunSpec> {
    let cs: Vec<f64> = if cfg.c.is_empty() { vec![1.0] } else { cfg.c.clone() };
    let deltas: Vec<Option<f64>> = if cfg.delta0.is_empty() {
        vec![None]
    } else {
        cfg.delta0.iter().copied().map(Some).collect()
    };
    let mut runs = Vec::with_capacity(cfg.gamma.len() * cs.len() * deltas.len());
    for &gamma in &cfg.gamma {
        for &c in &cs {
            for &delta0 in &deltas {
                runs.push(RunSpec {
                    index: runs.len(),
                    gamma,
                    c,
                    delta0,
                });
            }
        }
    }
    runs
}
