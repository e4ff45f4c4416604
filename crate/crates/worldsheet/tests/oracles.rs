use std::collections::BTreeMap;

use worldsheet::background::catalog_background;
use worldsheet::embedding::{catalog_embedding, Embedding};
use worldsheet::gaugeform::euler_characteristic;
use worldsheet::grid::gl_rule;

fn embedding(bg: &str, name: &str, params: &[(&str, f64)]) -> Embedding {
    let b = catalog_background(bg, &|_| None).unwrap();
    let p: BTreeMap<String, f64> = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    catalog_embedding(name, &p, b, None).unwrap()
}

#[test]
fn euler_numbers_of_closed_surfaces() {
    let sphere = embedding("euclidean3", "sphere", &[("a", 1.7)]);
    let chi = euler_characteristic(&sphere, 64, 64).unwrap().euler_number;
    assert!((chi - 2.0).abs() < 1e-6, "{chi}");
    let torus = embedding("euclidean3", "torus", &[("c", 2.5), ("a", 1.0)]);
    let chi = euler_characteristic(&torus, 64, 64).unwrap().euler_number;
    assert!(chi.abs() < 1e-8, "{chi}");
}

#[test]
fn euler_rejects_open_surfaces() {
    assert!(euler_characteristic(&embedding("minkowski4", "cylinder", &[]), 32, 32).is_err());
}

#[test]
fn gauss_legendre_is_exact_for_polynomials() {
    let (x, w) = gl_rule(8);
    for p in 0..16 {
        let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum();
        let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
        assert!((q - exact).abs() < 1e-13, "degree {p}");
    }
}
