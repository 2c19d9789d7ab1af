//! JSON problem files with dense row-major matrices.
//!
//! ```json
//! {
//!   "type": "linearly_constrained_qp",
//!   "Q": { "rows": 1, "cols": 1, "data": [2.0] },
//!   "q": [-2.0],
//!   "A": { "rows": 1, "cols": 1, "data": [1.0] },
//!   "b": [1.0]
//! }
//! ```
//!
//! Floats are written in shortest round-trip form, so `load(emit(P))`
//! reproduces every entry bit for bit.

use std::fs;
use std::path::{Path, PathBuf};

use gppa_core::{LinearlyConstrainedQp, SeparableQp};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            data.extend(m.row(i).iter().copied());
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }

    pub fn to_matrix(&self, field: &str) -> Result<DMatrix<f64>, ProblemError> {
        if self.rows.checked_mul(self.cols) != Some(self.data.len()) {
            return Err(field_error(
                field,
                format!(
                    "{} entries given for a {}x{} matrix",
                    self.data.len(),
                    self.rows,
                    self.cols
                ),
            ));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum ProblemDocument {
    LinearlyConstrainedQp {
        #[serde(rename = "Q")]
        q_mat: DenseMatrix,
        q: Vec<f64>,
        #[serde(rename = "A")]
        a: DenseMatrix,
        b: Vec<f64>,
    },
    SeparableQp {
        #[serde(rename = "Q_f")]
        qf: DenseMatrix,
        q_f: Vec<f64>,
        #[serde(rename = "Q_g")]
        qg: DenseMatrix,
        q_g: Vec<f64>,
        #[serde(rename = "M")]
        m: DenseMatrix,
        lambda: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    Qp(LinearlyConstrainedQp<f64>),
    Separable(SeparableQp<f64>),
}

impl Problem {
    pub fn describe(&self) -> String {
        match self {
            Problem::Qp(p) => format!("linearly constrained QP, n = {}, m = {}", p.n(), p.m()),
            Problem::Separable(p) => format!(
                "separable QP, n = {}, m = {}, lambda = {}",
                p.n(),
                p.m(),
                p.lambda()
            ),
        }
    }
}

fn field_error(field: &str, message: impl Into<String>) -> ProblemError {
    ProblemError::Field {
        field: field.to_string(),
        message: message.into(),
    }
}

fn core_error(field: &str, e: gppa_core::Error) -> ProblemError {
    field_error(field, e.to_string())
}

pub fn problem_to_json(problem: &Problem) -> String {
    let doc = match problem {
        Problem::Qp(p) => ProblemDocument::LinearlyConstrainedQp {
            q_mat: DenseMatrix::from_matrix(p.hessian()),
            q: p.linear().iter().copied().collect(),
            a: DenseMatrix::from_matrix(p.a()),
            b: p.b().iter().copied().collect(),
        },
        Problem::Separable(p) => ProblemDocument::SeparableQp {
            qf: DenseMatrix::from_matrix(p.f_hessian()),
            q_f: p.f_linear().iter().copied().collect(),
            qg: DenseMatrix::from_matrix(p.g_hessian()),
            q_g: p.g_linear().iter().copied().collect(),
            m: DenseMatrix::from_matrix(p.coupling()),
            lambda: p.lambda(),
        },
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("problem documents always serialize");
    text.push('\n');
    text
}

pub fn parse_problem(text: &str) -> Result<Problem, ProblemError> {
    let doc: ProblemDocument = serde_json::from_str(text).map_err(|e| ProblemError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let vector = |v: Vec<f64>| DVector::from_vec(v);
    match doc {
        ProblemDocument::LinearlyConstrainedQp { q_mat, q, a, b } => {
            let q_mat = q_mat.to_matrix("Q")?;
            let a = a.to_matrix("A")?;
            LinearlyConstrainedQp::new(q_mat, vector(q), a, vector(b))
                .map(Problem::Qp)
                .map_err(|e| core_error("Q/q/A/b", e))
        }
        ProblemDocument::SeparableQp {
            qf,
            q_f,
            qg,
            q_g,
            m,
            lambda,
        } => {
            let qf = qf.to_matrix("Q_f")?;
            let qg = qg.to_matrix("Q_g")?;
            let m = m.to_matrix("M")?;
            SeparableQp::new(qf, vector(q_f), qg, vector(q_g), m, lambda)
                .map(Problem::Separable)
                .map_err(|e| core_error("Q_f/q_f/Q_g/q_g/M/lambda", e))
        }
    }
}

pub fn emit_problem_file(problem: &Problem, path: &Path) -> Result<(), ProblemError> {
    fs::write(path, problem_to_json(problem)).map_err(|source| ProblemError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_problem_file(path: &Path) -> Result<Problem, ProblemError> {
    let text = fs::read_to_string(path).map_err(|source| ProblemError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_problem(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let p = Problem::Qp(LinearlyConstrainedQp::random(6, 3, 1).unwrap());
        let back = parse_problem(&problem_to_json(&p)).unwrap();
        let (Problem::Qp(a), Problem::Qp(b)) = (&p, &back) else {
            panic!("kind changed")
        };
        for (x, y) in a.hessian().iter().zip(b.hessian().iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        assert_eq!(p, back);

        let s = Problem::Separable(SeparableQp::random(5, 4, 0.7, 2).unwrap());
        assert_eq!(parse_problem(&problem_to_json(&s)).unwrap(), s);
    }

    #[test]
    fn truncated_file_reports_position() {
        let text = problem_to_json(&Problem::Qp(LinearlyConstrainedQp::random(3, 1, 1).unwrap()));
        let cut = &text[..text.len() / 2];
        match parse_problem(cut) {
            Err(ProblemError::Parse { line, .. }) => assert!(line > 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_entry_count_names_field() {
        let text = r#"{"type":"linearly_constrained_qp","Q":{"rows":2,"cols":2,"data":[1,0,0]},
            "q":[0,0],"A":{"rows":1,"cols":2,"data":[1,1]},"b":[0]}"#;
        match parse_problem(text) {
            Err(ProblemError::Field { field, .. }) => assert_eq!(field, "Q"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_key_rejected() {
        let text = r#"{"type":"linearly_constrained_qp","Q":{"rows":1,"cols":1,"data":[1]},
            "q":[0],"A":{"rows":1,"cols":1,"data":[1]},"b":[0],"extra":1}"#;
        assert!(matches!(parse_problem(text), Err(ProblemError::Parse { .. })));
    }
}
