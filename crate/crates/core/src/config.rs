//! JSON scenario documents.
//!
//! ```json
//! {
//!   "name": "S1",
//!   "kind": "first_order",
//!   "m": 1, "T": 1.0,
//!   "j": [["1i"]], "b": [["0"]],
//!   "boundary": { "w_path": [["1"], ["exp(2*pi*1i*s)"]] },
//!   "numerics": { "steps": 2048 },
//!   "expected": { "sf": 1, "mas": 1, "provenance": "closed-form branches" }
//! }
//! ```
//!
//! Coefficients are matrices of expression strings, or
//! `{"samples": {"s": [..], "t": [..], "values": [[matrix, ..], ..]}}` with
//! entries `x` or `[re, im]`, interpolated bilinearly and clamped at the edges.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::ExprMatrix;
use crate::harness::{Expected, Scenario, ScenarioKind, ScenarioProblem};
use crate::linalg::{c, CMat, C64};
use crate::maslov::{PairPath, PairSample};
use crate::odebvp::{w_of_r, BoundaryPath, BvpFamily, BvpOptions, Coefficient, FirstOrderFamily, SecondOrderFamily};
use crate::symplectic::{make_space, Subspace};

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    #[serde(default)]
    pub name: Option<String>,
    pub kind: String,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(rename = "T", default)]
    pub t: Option<f64>,
    #[serde(default)]
    pub j: Option<CoefficientSpec>,
    #[serde(default)]
    pub b: Option<CoefficientSpec>,
    #[serde(default)]
    pub p: Option<CoefficientSpec>,
    #[serde(default)]
    pub q: Option<CoefficientSpec>,
    #[serde(default)]
    pub r: Option<CoefficientSpec>,
    #[serde(default)]
    pub boundary: Option<BoundarySpec>,
    #[serde(default)]
    pub form: Option<Vec<Vec<String>>>,
    #[serde(default)]
    pub lambda: Option<Vec<Vec<String>>>,
    #[serde(default)]
    pub mu: Option<Vec<Vec<String>>>,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub expected: Option<Expected>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
pub enum CoefficientSpec {
    Expressions(Vec<Vec<String>>),
    Sampled { samples: SampleGrid },
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SampleGrid {
    pub s: Vec<f64>,
    pub t: Vec<f64>,
    /// Indexed `[s][t][row][col]`.
    pub values: Vec<Vec<Vec<Vec<Number>>>>,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(untagged)]
pub enum Number {
    Real(f64),
    Complex([f64; 2]),
}

impl Number {
    fn value(self) -> C64 {
        match self {
            Number::Real(x) => c(x, 0.0),
            Number::Complex([a, b]) => c(a, b),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    /// Frame of `W_s`, expressions in `s`.
    #[serde(default)]
    pub w_path: Option<Vec<Vec<String>>>,
    /// Constant frame of `R ⊆ ℂ^{2m}`; `[]` is `{0}`.
    #[serde(default)]
    pub r_subspace: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    pub steps: Option<usize>,
    pub initial_segments: Option<usize>,
    pub max_depth: Option<usize>,
    pub lambda_window: Option<f64>,
    pub lambda_grid: Option<usize>,
}

impl Numerics {
    fn options(&self) -> Result<BvpOptions> {
        let mut o = BvpOptions::default();
        if let Some(v) = self.steps {
            o.steps = v;
        }
        if let Some(v) = self.initial_segments {
            o.flow.initial_segments = v;
        }
        if let Some(v) = self.max_depth {
            o.flow.max_depth = v;
        }
        if let Some(v) = self.lambda_window {
            o.lambda_window = v;
        }
        if let Some(v) = self.lambda_grid {
            o.lambda_grid = v;
        }
        if o.steps == 0 || o.flow.initial_segments == 0 || o.lambda_grid < 3 {
            return Err(Error::Config("numerics: steps and initial_segments must be positive, lambda_grid ≥ 3".into()));
        }
        if !(o.lambda_window.is_finite() && o.lambda_window > 0.0) {
            return Err(Error::Config("numerics: lambda_window must be positive".into()));
        }
        Ok(o)
    }
}

fn sampled(grid: &SampleGrid, rows: usize, cols: usize) -> Result<Coefficient> {
    let (ns, nt) = (grid.s.len(), grid.t.len());
    let sorted = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]);
    if ns == 0 || nt == 0 || !sorted(&grid.s) || !sorted(&grid.t) {
        return Err(Error::Config("samples: s and t must be nonempty and increasing".into()));
    }
    if grid.values.len() != ns || grid.values.iter().any(|row| row.len() != nt) {
        return Err(Error::Config("samples: values must be indexed [s][t]".into()));
    }
    let mut mats = Vec::with_capacity(ns * nt);
    for m in grid.values.iter().flatten() {
        if m.len() != rows || m.iter().any(|r| r.len() != cols) {
            return Err(Error::Config(format!("samples: expected {rows}×{cols} matrices")));
        }
        mats.push(CMat::from_fn(rows, cols, |i, j| m[i][j].value()));
    }
    let (sg, tg) = (grid.s.clone(), grid.t.clone());
    let locate = |g: &[f64], x: f64| -> (usize, usize, f64) {
        if g.len() == 1 || x <= g[0] {
            return (0, 0, 0.0);
        }
        if x >= g[g.len() - 1] {
            let k = g.len() - 1;
            return (k, k, 0.0);
        }
        let k = g.partition_point(|&v| v <= x) - 1;
        (k, k + 1, (x - g[k]) / (g[k + 1] - g[k]))
    };
    Ok(Arc::new(move |s, t| {
        let (i0, i1, a) = locate(&sg, s);
        let (j0, j1, b) = locate(&tg, t);
        let at = |i: usize, j: usize| &mats[i * nt + j];
        at(i0, j0) * c((1.0 - a) * (1.0 - b), 0.0)
            + at(i1, j0) * c(a * (1.0 - b), 0.0)
            + at(i0, j1) * c((1.0 - a) * b, 0.0)
            + at(i1, j1) * c(a * b, 0.0)
    }))
}

fn coefficient(spec: Option<&CoefficientSpec>, key: &str, m: usize) -> Result<Coefficient> {
    match spec {
        None => Err(Error::Config(format!("missing coefficient '{key}'"))),
        Some(CoefficientSpec::Expressions(rows)) => {
            let e = ExprMatrix::parse(rows)?;
            if e.shape() != (m, m) {
                return Err(Error::Config(format!("'{key}' must be {m}×{m}, found {:?}", e.shape())));
            }
            Ok(Arc::new(move |s, t| e.eval(s, t)))
        }
        Some(CoefficientSpec::Sampled { samples }) => sampled(samples, m, m),
    }
}

fn frame_path(rows: &[Vec<String>], n: usize, k: Option<usize>, key: &str) -> Result<ExprMatrix> {
    let e = ExprMatrix::parse(rows)?;
    let (r, cols) = e.shape();
    if r != n || k.is_some_and(|k| cols != k) {
        return Err(Error::Config(format!("'{key}' must have {n} rows{}", k.map_or(String::new(), |k| format!(" and {k} columns")))));
    }
    Ok(e)
}

fn finite_positive(x: Option<f64>, key: &str) -> Result<f64> {
    match x {
        Some(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(Error::Config(format!("'{key}' must be a positive number"))),
    }
}

/// Builds a scenario from a parsed document.
pub fn scenario_from_document(doc: ConfigDocument, default_name: &str) -> Result<Scenario> {
    let opts = doc.numerics.options()?;
    let name = doc.name.clone().unwrap_or_else(|| default_name.to_string());
    let kind = match doc.kind.as_str() {
        "first_order" => ScenarioKind::FirstOrder,
        "second_order" => ScenarioKind::SecondOrder,
        "pair_path" => ScenarioKind::PairPathOnly,
        other => return Err(Error::Config(format!("unknown kind '{other}'"))),
    };
    let problem = match kind {
        ScenarioKind::PairPathOnly => {
            let form = doc.form.as_ref().ok_or_else(|| Error::Config("missing 'form'".into()))?;
            let form = ExprMatrix::parse(form)?;
            let n = form.shape().0;
            if form.shape() != (n, n) || n == 0 {
                return Err(Error::Config("'form' must be square".into()));
            }
            let lam = frame_path(doc.lambda.as_deref().ok_or_else(|| Error::Config("missing 'lambda'".into()))?, n, None, "lambda")?;
            let mu = frame_path(doc.mu.as_deref().ok_or_else(|| Error::Config("missing 'mu'".into()))?, n, None, "mu")?;
            let path = PairPath::new(
                move |s| {
                    Ok(PairSample {
                        space: make_space(form.eval(s, 0.0))?,
                        lambda: Subspace::span(&lam.eval(s, 0.0)),
                        mu: Subspace::span(&mu.eval(s, 0.0)),
                    })
                },
                (0.0, 1.0),
            );
            ScenarioProblem::Pair(path)
        }
        ScenarioKind::FirstOrder | ScenarioKind::SecondOrder => {
            let m = doc.m.filter(|&m| m > 0).ok_or_else(|| Error::Config("'m' must be a positive integer".into()))?;
            let t_len = finite_positive(doc.t, "T")?;
            let second = kind == ScenarioKind::SecondOrder;
            let family: BvpFamily = if second {
                SecondOrderFamily {
                    m,
                    t_len,
                    p: coefficient(doc.p.as_ref(), "p", m)?,
                    q: coefficient(doc.q.as_ref(), "q", m)?,
                    r: coefficient(doc.r.as_ref(), "r", m)?,
                }
                .into()
            } else {
                FirstOrderFamily {
                    m,
                    t_len,
                    j: coefficient(doc.j.as_ref(), "j", m)?,
                    jdot: None,
                    b: coefficient(doc.b.as_ref(), "b", m)?,
                }
                .into()
            };
            for s in [0.0, 0.5, 1.0] {
                family.validate(s, 64).map_err(|e| Error::Config(format!("invalid coefficients: {e}")))?;
            }
            let n = 2 * family.state_dim();
            let spec = doc.boundary.as_ref().ok_or_else(|| Error::Config("missing 'boundary'".into()))?;
            let boundary = match (&spec.w_path, &spec.r_subspace) {
                (Some(w), None) => {
                    let frame = frame_path(w, n, Some(n / 2), "boundary.w_path")?;
                    BoundaryPath::new(move |s| Subspace::span(&frame.eval(s, 0.0)))
                }
                (None, Some(r)) if second => {
                    let rs = if r.is_empty() {
                        Subspace::zero(2 * m)
                    } else {
                        Subspace::span(&frame_path(r, 2 * m, None, "boundary.r_subspace")?.eval(0.0, 0.0))
                    };
                    BoundaryPath::constant(w_of_r(&rs))
                }
                (None, Some(_)) => return Err(Error::Config("'r_subspace' requires kind second_order".into())),
                _ => return Err(Error::Config("'boundary' needs exactly one of w_path, r_subspace".into())),
            };
            ScenarioProblem::Bvp { family, boundary }
        }
    };
    Ok(Scenario { name, kind, problem, opts, expected: doc.expected })
}

/// Parses a scenario from JSON text.
pub fn parse_config(text: &str, default_name: &str) -> Result<Scenario> {
    let doc: ConfigDocument = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    scenario_from_document(doc, default_name)
}

/// Reads and parses a scenario file.
pub fn load_config(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
    parse_config(&text, stem)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_documents() {
        let bad = [
            r#"{"kind": "zeroth_order"}"#,
            r#"{"kind": "first_order", "m": 1, "T": 1, "j": [["1i"]], "b": [["0"]]}"#,
            r#"{"kind": "first_order", "m": 2, "T": 1, "j": [["1i"]], "b": [["0"]], "boundary": {"w_path": [["1"],["1"]]}}"#,
            r#"{"kind": "first_order", "m": 1, "T": 1, "j": [["1"]], "b": [["0"]], "boundary": {"w_path": [["1"],["1"]]}}"#,
            r#"{"kind": "first_order", "m": 1, "T": 1, "j": [["1i"]], "b": [["0"]], "boundary": {"r_subspace": []}}"#,
            r#"{"kind": "first_order", "m": 1, "T": 1, "j": [["1i"]], "b": [["0"]], "boundary": {"w_path": [["1"],["1"]]}, "extra": 1}"#,
            r#"not json"#,
        ];
        for text in bad {
            let e = parse_config(text, "x").err().expect(text);
            assert!(e.is_config(), "{text}: {e:?}");
        }
        let syntax = r#"{"kind": "first_order", "m": 1, "T": 1, "j": [["1i +* s"]], "b": [["0"]], "boundary": {"w_path": [["1"],["1"]]}}"#;
        assert!(matches!(parse_config(syntax, "x"), Err(Error::Syntax { offset: 4, .. })));
    }

    #[test]
    fn samples_interpolate() {
        let grid = SampleGrid {
            s: vec![0.0, 1.0],
            t: vec![0.0, 2.0],
            values: vec![
                vec![vec![vec![Number::Real(0.0)]], vec![vec![Number::Real(2.0)]]],
                vec![vec![vec![Number::Real(1.0)]], vec![vec![Number::Complex([3.0, 1.0])]]],
            ],
        };
        let f = sampled(&grid, 1, 1).unwrap();
        assert!((f(0.5, 1.0)[(0, 0)] - c(1.5, 0.25)).norm() < 1e-15);
        assert!((f(-1.0, 5.0)[(0, 0)] - c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn dirichlet_shorthand() {
        let text = r#"{"kind": "second_order", "m": 1, "T": 3.14159, "p": [["1"]], "q": [["0"]], "r": [["0"]], "boundary": {"r_subspace": []}}"#;
        let sc = parse_config(text, "d").unwrap();
        match sc.problem {
            ScenarioProblem::Bvp { boundary, .. } => assert_eq!(boundary.at(0.0).dim(), 2),
            _ => panic!("expected a boundary-value problem"),
        }
    }
}
