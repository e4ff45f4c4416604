//! Index contraction over grid fields, written like `"lna,ma->lmn"`.

use crate::grid::{Field, Slot};

struct Plan {
    nin: usize,
    /// Per assignment of all letters: component offset in each input, then
    /// in the output.
    offsets: Vec<usize>,
}

fn plan(spec: &str, ranks: &[usize], dim: usize) -> (Plan, usize) {
    let (lhs, out) = spec.split_once("->").expect("einsum spec needs '->'");
    let ins: Vec<&str> = lhs.split(',').collect();
    assert_eq!(ins.len(), ranks.len(), "einsum '{spec}': wrong number of inputs");
    let mut letters: Vec<char> = Vec::new();
    for s in ins.iter().chain(std::iter::once(&out)) {
        for c in s.chars() {
            if !letters.contains(&c) {
                letters.push(c);
            }
        }
    }
    for (s, &r) in ins.iter().zip(ranks) {
        assert_eq!(s.chars().count(), r, "einsum '{spec}': rank mismatch for '{s}'");
    }
    for c in out.chars() {
        assert!(lhs.contains(c), "einsum '{spec}': output letter '{c}' not in inputs");
    }
    let pos = |c: char| letters.iter().position(|&l| l == c).unwrap();
    let idx: Vec<Vec<usize>> =
        ins.iter().chain(std::iter::once(&out)).map(|s| s.chars().map(pos).collect()).collect();
    let nl = letters.len();
    let total = dim.pow(nl as u32);
    let mut offsets = Vec::with_capacity(total * idx.len());
    let mut a = vec![0usize; nl];
    for _ in 0..total {
        for term in &idx {
            offsets.push(term.iter().fold(0, |acc, &p| acc * dim + a[p]));
        }
        for k in (0..nl).rev() {
            a[k] += 1;
            if a[k] < dim {
                break;
            }
            a[k] = 0;
        }
    }
    (Plan { nin: ins.len(), offsets }, out.chars().count())
}

/// Contract `inputs` per `spec`; the output carries `slots`.
pub fn ein(spec: &str, inputs: &[&Field], slots: &[Slot]) -> Field {
    let first = inputs[0];
    let dim = first.dim;
    for f in inputs {
        assert_eq!(f.chart.shape(), first.chart.shape(), "einsum '{spec}': chart mismatch");
        assert_eq!(f.dim, dim, "einsum '{spec}': dimension mismatch");
    }
    let ranks: Vec<usize> = inputs.iter().map(|f| f.rank()).collect();
    let (p, rout) = plan(spec, &ranks, dim);
    assert_eq!(rout, slots.len(), "einsum '{spec}': output slots mismatch");
    let stride = p.nin + 1;
    Field::from_fn(first.chart, dim, slots, |k, o| {
        let vals: Vec<&[f64]> = inputs.iter().map(|f| f.at(k)).collect();
        for row in p.offsets.chunks_exact(stride) {
            let mut prod = 1.0;
            for (v, &off) in vals.iter().zip(row) {
                prod *= v[off];
            }
            o[row[p.nin]] += prod;
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Axis, Chart};

    fn chart() -> Chart {
        Chart::new(Axis::periodic(0.0, 1.0, 8), Axis::periodic(0.0, 1.0, 8), 0.0).unwrap()
    }

    #[test]
    fn matrix_product_and_trace() {
        let c = chart();
        let a = Field::from_fn(c, 3, &[Slot::Up, Slot::Down], |k, o| {
            for (i, v) in o.iter_mut().enumerate() {
                *v = (i + k) as f64;
            }
        });
        let b = Field::from_fn(c, 3, &[Slot::Up, Slot::Down], |_, o| {
            for (i, v) in o.iter_mut().enumerate() {
                *v = (i * i) as f64 - 2.0;
            }
        });
        let ab = ein("ij,jk->ik", &[&a, &b], &[Slot::Up, Slot::Down]);
        let (x, y) = (a.at(5), b.at(5));
        let want: f64 = (0..3).map(|j| x[3 + j] * y[j * 3 + 2]).sum();
        assert_eq!(ab.at(5)[5], want);
        let tr = ein("ii->", &[&a], &[]);
        assert_eq!(tr.value(0), 0.0 + 4.0 + 8.0);
    }

    #[test]
    fn transpose_via_output_order() {
        let c = chart();
        let a = Field::from_fn(c, 4, &[Slot::Down, Slot::Down], |_, o| {
            for (i, v) in o.iter_mut().enumerate() {
                *v = i as f64;
            }
        });
        let t = ein("ij->ji", &[&a], &[Slot::Down, Slot::Down]);
        assert_eq!(t.at(0)[1], a.at(0)[4]);
    }
}
