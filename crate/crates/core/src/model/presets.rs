//! Built-in example systems.

use std::collections::BTreeMap;

use super::document::{BcSpec, Coefficient, CoefficientGrid, ModelDocument};
use super::{ModelError, PdeSystem};
use crate::scalar::Scalar;

pub const PRESET_NAMES: [&str; 6] = ["schrodinger", "example1", "example2", "example3", "example4", "acoustic"];

fn c(v: impl Into<Coefficient>) -> Coefficient {
    v.into()
}

fn constant_grid(entries: [[Coefficient; 2]; 2]) -> CoefficientGrid {
    entries.into_iter().map(|row| row.into_iter().map(|e| vec![e]).collect()).collect()
}

fn poly_grid(entries: [[Vec<f64>; 2]; 2]) -> CoefficientGrid {
    entries.into_iter().map(|row| row.into_iter().map(|e| e.into_iter().map(c).collect()).collect()).collect()
}

fn identity2() -> CoefficientGrid {
    constant_grid([[c(1.0), c(0.0)], [c(0.0), c(1.0)]])
}

fn zero2() -> CoefficientGrid {
    constant_grid([[c(0.0), c(0.0)], [c(0.0), c(0.0)]])
}

fn base(name: &str, description: &str, a: f64, b: f64, bc: &str) -> ModelDocument {
    ModelDocument {
        name: Some(name.to_string()),
        description: Some(description.to_string()),
        n: 2,
        a: c(a),
        b: c(b),
        params: BTreeMap::new(),
        diffusion: identity2(),
        drift: Some(zero2()),
        reaction: Some(zero2()),
        bc: BcSpec::Named(bc.to_string()),
    }
}

fn required_params(name: &str) -> Result<&'static [&'static str], ModelError> {
    Ok(match name {
        "schrodinger" => &["hbar", "m", "V"],
        "example1" | "example2" | "example3" => &["lambda"],
        "example4" => &[],
        "acoustic" => &["c", "r0", "R"],
        _ => return Err(ModelError::UnknownPreset(name.to_string())),
    })
}

/// The preset as a document with `params` attached. Every required parameter must be supplied.
pub fn preset_document(name: &str, params: &BTreeMap<String, f64>) -> Result<ModelDocument, ModelError> {
    for p in required_params(name)? {
        if !params.contains_key(*p) {
            return Err(ModelError::MissingParameter(p.to_string()));
        }
    }
    let mut doc = match name {
        "schrodinger" => {
            // real/imaginary split of i hbar psi_t = -(hbar^2/m) psi_xx + V psi
            let mut d = base(
                "schrodinger",
                "Schrodinger equation split into real and imaginary parts, constant potential V",
                0.0,
                1.0,
                "dirichlet",
            );
            d.diffusion = constant_grid([[c(0.0), c("-hbar/m")], [c("hbar/m"), c(0.0)]]);
            d.reaction = Some(constant_grid([[c(0.0), c("V/hbar")], [c("-V/hbar"), c(0.0)]]));
            d
        }
        "example1" => {
            let mut d = base("example1", "decoupled heat equations with reaction lambda", 0.0, 1.0, "dirichlet");
            d.reaction = Some(constant_grid([[c("lambda"), c(0.0)], [c(0.0), c("lambda")]]));
            d
        }
        "example2" => {
            let mut d =
                base("example2", "coupled heat equations, C = [[lambda, 1], [1, lambda]]", 0.0, 1.0, "dirichlet");
            d.reaction = Some(constant_grid([[c("lambda"), c(1.0)], [c(1.0), c("lambda")]]));
            d
        }
        "example3" => {
            let mut d = base(
                "example3",
                "coupled heat equations, C = lambda * ones, Neumann at a and Dirichlet at b",
                0.0,
                1.0,
                "mixed_na_db",
            );
            d.reaction = Some(constant_grid([[c("lambda"), c("lambda")], [c("lambda"), c("lambda")]]));
            d
        }
        "example4" => {
            let mut d = base("example4", "coupled system with spatially varying coefficients", 0.0, 1.0, "dirichlet");
            d.diffusion = poly_grid([[vec![4.0, 0.0, 5.0], vec![0.0]], [vec![0.0, 7.0, 2.0], vec![6.0, 0.0, 7.0]]]);
            d.drift = Some(poly_grid([[vec![1.0], vec![0.0, -4.0]], [vec![0.0, 0.0, -3.5], vec![0.0]]]));
            d.reaction = Some(poly_grid([[vec![0.0, 0.0, -1.0], vec![-3.0]], [vec![0.0, -2.0], vec![0.0, 0.0, -3.0]]]));
            d
        }
        "acoustic" => {
            // 1/r is replaced by its cubic Taylor polynomial about m = (r0 + R)/2:
            // 1/r ~ 4/m - 6r/m^2 + 4r^2/m^3 - r^3/m^4, error (1 - r/m)^4 / r.
            let mut d = base(
                "acoustic",
                "acoustic wave in first-order form on [r0, R], 1/r replaced by a cubic Taylor polynomial",
                0.0,
                1.0,
                "dirichlet",
            );
            d.a = c("r0");
            d.b = c("R");
            d.diffusion = constant_grid([[c(0.0), c("c^2")], [c(0.0), c(0.0)]]);
            let m = "((r0 + R)/2)";
            let b12 = vec![
                c(format!("8*c^2/{}", m).as_str()),
                c(format!("-12*c^2/{}^2", m).as_str()),
                c(format!("8*c^2/{}^3", m).as_str()),
                c(format!("-2*c^2/{}^4", m).as_str()),
            ];
            d.drift = Some(vec![vec![vec![c(0.0)], b12], vec![vec![c(0.0)], vec![c(0.0)]]]);
            d.reaction = Some(constant_grid([[c(0.0), c(0.0)], [c(1.0), c(0.0)]]));
            d
        }
        _ => unreachable!("checked by required_params"),
    };
    doc.params = params.clone();
    Ok(doc)
}

/// The acoustic model with its literal `2c^2/r` drift; loading it fails with a non-polynomial error.
pub fn acoustic_raw_document(c_value: f64, r_max: f64) -> ModelDocument {
    let mut d = base("acoustic_raw", "acoustic wave with the literal 2c^2/r drift", 0.0, r_max, "dirichlet");
    d.diffusion = constant_grid([[c(0.0), c("c^2")], [c(0.0), c(0.0)]]);
    d.drift = Some(constant_grid([[c(0.0), c("2*c^2/r")], [c(0.0), c(0.0)]]));
    d.reaction = Some(constant_grid([[c(0.0), c(0.0)], [c(1.0), c(0.0)]]));
    d.params.insert("c".to_string(), c_value);
    d
}

/// Instantiates a preset system.
pub fn preset<S: Scalar>(name: &str, params: &BTreeMap<String, f64>) -> Result<PdeSystem<S>, ModelError> {
    preset_document(name, params)?.to_system()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{load_model, save_model, ModelError};

    fn lam(v: f64) -> BTreeMap<String, f64> {
        [("lambda".to_string(), v)].into_iter().collect()
    }

    #[test]
    fn example2_reaction() {
        let sys: PdeSystem<f64> = preset("example2", &lam(4.0)).unwrap();
        let c = sys.reaction.eval_numeric(&[0.5, 0.0, 0.0]);
        assert_eq!(c.as_slice(), &[4.0, 1.0, 1.0, 4.0]);
    }

    #[test]
    fn example4_coefficients() {
        let sys: PdeSystem<f64> = preset("example4", &BTreeMap::new()).unwrap();
        let x = 0.3;
        let a = sys.diffusion.eval_numeric(&[x, 0.0, 0.0]);
        assert!((a[(0, 0)] - (5.0 * x * x + 4.0)).abs() < 1e-15);
        assert!((a[(1, 0)] - (2.0 * x * x + 7.0 * x)).abs() < 1e-15);
        let b = sys.drift.eval_numeric(&[x, 0.0, 0.0]);
        assert!((b[(1, 0)] + 3.5 * x * x).abs() < 1e-15);
        let cm = sys.reaction.eval_numeric(&[x, 0.0, 0.0]);
        assert!((cm[(0, 1)] + 3.0).abs() < 1e-15);
        assert_eq!(sys.max_degree(), 2);
    }

    #[test]
    fn example1_zero_is_heat_pair() {
        let sys: PdeSystem<f64> = preset("example1", &lam(0.0)).unwrap();
        assert!(sys.reaction.is_zero());
        assert!(sys.drift.is_zero());
    }

    #[test]
    fn unknown_and_missing() {
        assert!(matches!(preset::<f64>("example9", &lam(1.0)), Err(ModelError::UnknownPreset(_))));
        assert!(matches!(preset::<f64>("example1", &BTreeMap::new()), Err(ModelError::MissingParameter(_))));
    }

    #[test]
    fn acoustic_raw_is_rejected_and_substitute_loads() {
        let raw = acoustic_raw_document(1.0, 1.0);
        assert!(matches!(raw.to_system::<f64>(), Err(ModelError::NonPolynomial(_))));
        let p: BTreeMap<String, f64> =
            [("c".to_string(), 1.5), ("r0".to_string(), 0.5), ("R".to_string(), 1.5)].into_iter().collect();
        let sys: PdeSystem<f64> = preset("acoustic", &p).unwrap();
        assert_eq!(sys.n, 2);
        for r in [0.6, 1.0, 1.4] {
            let b = sys.drift.eval_numeric(&[r, 0.0, 0.0])[(0, 1)];
            let exact = 2.0 * 1.5 * 1.5 / r;
            let bound = 2.0 * 1.5 * 1.5 * (1.0 - r).powi(4) / r;
            assert!((b - exact).abs() <= bound + 1e-12);
        }
    }

    #[test]
    fn presets_roundtrip_through_documents() {
        let params: BTreeMap<String, f64> =
            [("lambda", 5.0), ("hbar", 1.0), ("m", 2.0), ("V", 0.5), ("c", 1.0), ("r0", 0.5), ("R", 1.5)]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect();
        for name in PRESET_NAMES {
            let sys: PdeSystem<f64> = preset(name, &params).unwrap();
            let back: PdeSystem<f64> = load_model(&save_model(&sys)).unwrap();
            assert_eq!(back, sys, "{}", name);
        }
    }
}
