use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{eval_expression, expand_bc, BcShorthand, BoundaryMatrix, Interval, ModelError, PdeSystem};
use crate::polymat::{Monomial, PolyMatrix, Polynomial, Var, VarSet};
use crate::scalar::Scalar;

/// A number or an arithmetic expression over the document parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coefficient {
    Number(f64),
    Expr(String),
}

impl Coefficient {
    pub fn eval<S: Scalar>(&self, params: &BTreeMap<String, S>) -> Result<S, ModelError> {
        match self {
            Coefficient::Number(v) if v.is_finite() => Ok(S::from_f64(*v)),
            Coefficient::Number(v) => Err(ModelError::Schema(format!("non-finite coefficient {}", v))),
            Coefficient::Expr(e) => eval_expression(e, params),
        }
    }

    /// Shortest faithful encoding: a JSON number when `f64` holds the value exactly.
    pub fn encode<S: Scalar>(v: &S) -> Self {
        let f = v.to_f64();
        if f.is_finite() && S::from_f64(f) == *v {
            Coefficient::Number(f)
        } else {
            Coefficient::Expr(v.to_string())
        }
    }
}

impl From<f64> for Coefficient {
    fn from(v: f64) -> Self {
        Coefficient::Number(v)
    }
}

impl From<&str> for Coefficient {
    fn from(v: &str) -> Self {
        Coefficient::Expr(v.to_string())
    }
}

/// Boundary specification: a shorthand name or explicit rows of length `4n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BcSpec {
    Named(String),
    Rows(Vec<Vec<Coefficient>>),
}

/// `n x n` grid of ascending coefficient arrays.
pub type CoefficientGrid = Vec<Vec<Vec<Coefficient>>>;

/// The on-disk model format. See `docs/model-format.md`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub n: usize,
    pub a: Coefficient,
    pub b: Coefficient,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    #[serde(rename = "A")]
    pub diffusion: CoefficientGrid,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<CoefficientGrid>,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub reaction: Option<CoefficientGrid>,
    pub bc: BcSpec,
}

impl ModelDocument {
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        serde_json::from_str(text).map_err(|e| ModelError::Schema(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model documents serialize");
        s.push('\n');
        s
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    /// Evaluates every entry and validates the result.
    pub fn to_system<S: Scalar>(&self) -> Result<PdeSystem<S>, ModelError> {
        let params: BTreeMap<String, S> = self.params.iter().map(|(k, v)| (k.clone(), S::from_f64(*v))).collect();
        let n = self.n;
        if n == 0 {
            return Err(ModelError::ZeroDimension);
        }
        let a = self.a.eval(&params)?;
        let b = self.b.eval(&params)?;
        let diffusion = grid_to_matrix(&self.diffusion, n, "A", &params)?;
        let drift = match &self.drift {
            Some(g) => grid_to_matrix(g, n, "B", &params)?,
            None => PolyMatrix::zeros(n, n, VarSet::X),
        };
        let reaction = match &self.reaction {
            Some(g) => grid_to_matrix(g, n, "C", &params)?,
            None => PolyMatrix::zeros(n, n, VarSet::X),
        };
        let bc = match &self.bc {
            BcSpec::Named(s) => BcShorthand::from_name(s)
                .ok_or_else(|| ModelError::Schema(format!("unknown boundary shorthand {:?}", s)))?,
            BcSpec::Rows(rows) => BcShorthand::Custom(
                rows.iter()
                    .map(|r| r.iter().map(|c| c.eval(&params)).collect::<Result<Vec<S>, _>>())
                    .collect::<Result<_, _>>()?,
            ),
        };
        let boundary = expand_bc(&bc, n)?;
        PdeSystem::new(Interval::new(a, b), diffusion, drift, reaction, boundary)
    }

    /// Numeric document describing `sys` (no parameters).
    pub fn from_system<S: Scalar>(sys: &PdeSystem<S>) -> Self {
        let grid = |m: &PolyMatrix<S>| -> CoefficientGrid {
            (0..sys.n).map(|i| (0..sys.n).map(|j| poly_coefficients(m.get(i, j))).collect()).collect()
        };
        let bc = named_bc(&sys.boundary).map(|s| BcSpec::Named(s.to_string())).unwrap_or_else(|| {
            BcSpec::Rows(sys.boundary.rows().iter().map(|r| r.iter().map(Coefficient::encode).collect()).collect())
        });
        Self {
            name: None,
            description: None,
            n: sys.n,
            a: Coefficient::encode(&sys.interval.lo),
            b: Coefficient::encode(&sys.interval.hi),
            params: BTreeMap::new(),
            diffusion: grid(&sys.diffusion),
            drift: Some(grid(&sys.drift)),
            reaction: Some(grid(&sys.reaction)),
            bc,
        }
    }
}

fn grid_to_matrix<S: Scalar>(
    grid: &CoefficientGrid,
    n: usize,
    name: &'static str,
    params: &BTreeMap<String, S>,
) -> Result<PolyMatrix<S>, ModelError> {
    if grid.len() != n || grid.iter().any(|row| row.len() != n) {
        return Err(ModelError::NotSquare { name, n });
    }
    let mut polys = Vec::with_capacity(n * n);
    for row in grid {
        for entry in row {
            let coeffs = entry.iter().map(|c| c.eval(params)).collect::<Result<Vec<S>, _>>()?;
            polys.push(Polynomial::univariate(Var::X, &coeffs));
        }
    }
    Ok(PolyMatrix::from_polys(n, n, polys))
}

fn poly_coefficients<S: Scalar>(p: &Polynomial<S>) -> Vec<Coefficient> {
    let deg = if p.is_zero() { 0 } else { p.degree() };
    (0..=deg)
        .map(|k| {
            let c = p.coeff(&Monomial::of(Var::X, k as u16)).map(|e| e.constant_part().clone());
            Coefficient::encode(&c.unwrap_or_else(S::zero))
        })
        .collect()
}

fn named_bc<S: Scalar>(d: &BoundaryMatrix<S>) -> Option<&'static str> {
    let n = d.side() / 4;
    [
        BcShorthand::<S>::Dirichlet,
        BcShorthand::Neumann,
        BcShorthand::MixedNeumannDirichlet,
        BcShorthand::MixedDirichletNeumann,
    ]
    .into_iter()
    .find(|s| expand_bc(s, n).as_ref() == Ok(d))
    .and_then(|s| s.name())
}

/// Parses and validates a model document.
pub fn load_model<S: Scalar>(text: &str) -> Result<PdeSystem<S>, ModelError> {
    ModelDocument::from_json(text)?.to_system()
}

/// Serializes a system as a numeric model document.
pub fn save_model<S: Scalar>(sys: &PdeSystem<S>) -> String {
    ModelDocument::from_system(sys).to_json()
}

/// A model document with one parameter left free.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelFamily {
    pub document: ModelDocument,
    pub param: String,
}

impl ModelFamily {
    pub fn new(document: ModelDocument, param: impl Into<String>) -> Self {
        Self { document, param: param.into() }
    }

    pub fn instantiate<S: Scalar>(&self, value: f64) -> Result<PdeSystem<S>, ModelError> {
        self.document.clone().with_param(&self.param, value).to_system()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    const EX1: &str = r#"{
        "n": 2, "a": 0, "b": 1,
        "params": {"lambda": 5},
        "A": [[[1], [0]], [[0], [1]]],
        "B": [[[0], [0]], [[0], [0]]],
        "C": [[["lambda"], [0]], [[0], ["lambda"]]],
        "bc": "dirichlet"
    }"#;

    #[test]
    fn loads_example_document() {
        let sys: PdeSystem<f64> = load_model(EX1).unwrap();
        assert_eq!(sys.n, 2);
        assert_eq!(sys.reaction.eval_numeric(&[0.3, 0.0, 0.0])[(0, 0)], 5.0);
        assert_eq!(sys.reaction.eval_numeric(&[0.3, 0.0, 0.0])[(0, 1)], 0.0);
        assert_eq!(sys.boundary, expand_bc(&BcShorthand::Dirichlet, 2).unwrap());
    }

    #[test]
    fn rejects_bad_documents() {
        let swapped = EX1.replace(r#""a": 0, "b": 1"#, r#""a": 1, "b": 0"#);
        assert!(matches!(load_model::<f64>(&swapped), Err(ModelError::Interval { .. })));
        let missing = EX1.replace(r#""params": {"lambda": 5},"#, "");
        assert!(matches!(load_model::<f64>(&missing), Err(ModelError::MissingParameter(_))));
        let short = EX1.replace(r#""A": [[[1], [0]], [[0], [1]]]"#, r#""A": [[[1], [0]]]"#);
        assert!(matches!(load_model::<f64>(&short), Err(ModelError::NotSquare { name: "A", .. })));
        let bad_bc = EX1.replace(r#""dirichlet""#, r#"[[1, 0, 0]]"#);
        assert!(matches!(load_model::<f64>(&bad_bc), Err(ModelError::BoundaryShape { .. })));
        assert!(matches!(load_model::<f64>("{\"n\": 1}"), Err(ModelError::Schema(_))));
        let extra = EX1.replace(r#""n": 2,"#, r#""n": 2, "m": 3,"#);
        assert!(matches!(load_model::<f64>(&extra), Err(ModelError::Schema(_))));
    }

    #[test]
    fn rational_roundtrip_is_exact() {
        let doc = EX1.replace(r#"["lambda"], [0]], [[0]"#, r#"["1/3", "2/7"], [0]], [[0]"#);
        let sys: PdeSystem<Rational> = load_model(&doc).unwrap();
        let text = save_model(&sys);
        assert!(text.contains("\"1/3\""));
        let back: PdeSystem<Rational> = load_model(&text).unwrap();
        assert_eq!(back, sys);
    }

    #[test]
    fn custom_boundary_roundtrip() {
        let doc = EX1.replace(r#""dirichlet""#, r#"[[1, 0, 0, 0, 0, 0, 0, 0], [0, 0, 0, 0, 0, 0, 2, -1]]"#);
        let sys: PdeSystem<f64> = load_model(&doc).unwrap();
        assert_eq!(sys.boundary.side(), 8);
        let back: PdeSystem<f64> = load_model(&save_model(&sys)).unwrap();
        assert_eq!(back, sys);
    }

    #[test]
    fn family_overrides_parameter() {
        let fam = ModelFamily::new(ModelDocument::from_json(EX1).unwrap(), "lambda");
        let sys: PdeSystem<f64> = fam.instantiate(7.5).unwrap();
        assert_eq!(sys.reaction.eval_numeric(&[0.0, 0.0, 0.0])[(1, 1)], 7.5);
    }
}
