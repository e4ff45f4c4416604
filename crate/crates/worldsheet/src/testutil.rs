use std::collections::BTreeMap;

use crate::background::catalog_background;
use crate::embedding::{catalog_embedding, Surface};

/// Catalog surface on its default chart at resolution n × n.
pub fn surface(bg: &str, emb: &str, params: &[(&str, f64)], n: usize) -> Surface {
    let b = catalog_background(bg, &|_| None).unwrap();
    let p: BTreeMap<String, f64> = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    let e = catalog_embedding(emb, &p, b, None).unwrap();
    Surface::build(&e, e.chart(n, n).unwrap()).unwrap()
}
