//! Parameter charts, grid-sampled tensor fields, 4th-order differentiation
//! and quadrature over the worldsheet and its constant-σ⁰ slices.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Smallest resolution accepted on any axis; the 5-point stencils need it.
pub const MIN_NODES: usize = 8;

/// One coordinate direction of a chart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub len: usize,
    pub periodic: bool,
}

impl Axis {
    pub fn periodic(lo: f64, hi: f64, len: usize) -> Self {
        Axis { lo, hi, len, periodic: true }
    }

    pub fn open(lo: f64, hi: f64, len: usize) -> Self {
        Axis { lo, hi, len, periodic: false }
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / self.len as f64
    }

    /// Node coordinate. Periodic axes start at `lo`; open axes are
    /// cell-centred so no node ever sits on an endpoint.
    pub fn coord(&self, i: usize) -> f64 {
        let h = self.step();
        if self.periodic {
            self.lo + h * i as f64
        } else {
            self.lo + h * (i as f64 + 0.5)
        }
    }

    fn refined(&self) -> Self {
        Axis { len: self.len * 2, ..*self }
    }
}

/// Rule used by [`Chart::surface_integral`] along axis 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Quadrature {
    /// Rectangle rule (periodic) or midpoint rule (open, cell-centred).
    Uniform,
    /// Gauss–Legendre nodes in cos σ⁰ over σ⁰ ∈ (0, π); axis 0 nodes are
    /// placed at the arccos of the Legendre roots.
    GaussLegendreCos,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Chart {
    pub axes: [Axis; 2],
    /// Fraction of each open axis excluded near both ends when residuals are
    /// measured.
    pub margin: f64,
    pub quadrature: Quadrature,
}

impl Chart {
    pub fn new(a0: Axis, a1: Axis, margin: f64) -> Result<Self> {
        for (k, a) in [a0, a1].iter().enumerate() {
            if a.len < MIN_NODES {
                return Err(Error::Config(format!(
                    "axis {k} has {} nodes, stencils need at least {MIN_NODES}",
                    a.len
                )));
            }
            if !(a.hi > a.lo) {
                return Err(Error::Config(format!("axis {k} has an empty extent")));
            }
        }
        if !(0.0..0.5).contains(&margin) {
            return Err(Error::Config(format!("margin {margin} outside [0, 0.5)")));
        }
        Ok(Chart { axes: [a0, a1], margin, quadrature: Quadrature::Uniform })
    }

    /// Chart whose axis 0 carries `len0` Gauss–Legendre nodes in cos σ⁰ on
    /// (0, π) and whose axis 1 is periodic.
    pub fn gauss_legendre_polar(len0: usize, a1: Axis) -> Result<Self> {
        let mut c = Chart::new(Axis::open(0.0, std::f64::consts::PI, len0), a1, 0.0)?;
        c.quadrature = Quadrature::GaussLegendreCos;
        Ok(c)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.axes[0].len, self.axes[1].len)
    }

    pub fn len(&self) -> usize {
        self.axes[0].len * self.axes[1].len
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn node(&self, i0: usize, i1: usize) -> usize {
        i0 * self.axes[1].len + i1
    }

    pub fn split(&self, node: usize) -> (usize, usize) {
        (node / self.axes[1].len, node % self.axes[1].len)
    }

    pub fn coords(&self, node: usize) -> (f64, f64) {
        let (i0, i1) = self.split(node);
        (self.coord0(i0), self.axes[1].coord(i1))
    }

    fn coord0(&self, i0: usize) -> f64 {
        match self.quadrature {
            Quadrature::Uniform => self.axes[0].coord(i0),
            Quadrature::GaussLegendreCos => gl_rule(self.axes[0].len).0[i0].acos(),
        }
    }

    pub fn step(&self, axis: usize) -> f64 {
        self.axes[axis].step()
    }

    /// Whether a node counts towards residual norms.
    pub fn retained(&self, node: usize) -> bool {
        let (i0, i1) = self.split(node);
        [i0, i1].iter().zip(self.axes.iter()).all(|(&i, a)| {
            if a.periodic || self.margin == 0.0 {
                return true;
            }
            let x = a.coord(i);
            let cut = self.margin * (a.hi - a.lo);
            x >= a.lo + cut && x <= a.hi - cut
        })
    }

    /// Same extents with both resolutions doubled.
    pub fn refined(&self) -> Self {
        Chart { axes: [self.axes[0].refined(), self.axes[1].refined()], ..*self }
    }

    pub fn with_resolution(&self, n0: usize, n1: usize) -> Result<Self> {
        let mut a = self.axes;
        a[0].len = n0;
        a[1].len = n1;
        let mut c = Chart::new(a[0], a[1], self.margin)?;
        c.quadrature = self.quadrature;
        Ok(c)
    }

    /// ∫ density dσ⁰ dσ¹. For a Gauss–Legendre chart the density must be
    /// expressed per unit cos σ⁰, i.e. already divided by sin σ⁰.
    pub fn surface_integral(&self, density: &Field) -> f64 {
        assert!(density.slots.is_empty(), "surface_integral needs a scalar field");
        let (n0, n1) = self.shape();
        let w1 = self.step(1);
        let w0: Vec<f64> = match self.quadrature {
            Quadrature::Uniform => vec![self.step(0); n0],
            Quadrature::GaussLegendreCos => gl_rule(n0).1,
        };
        let mut total = 0.0;
        for (i0, w) in w0.iter().enumerate() {
            let row: f64 = (0..n1).map(|i1| density.data[self.node(i0, i1)]).sum();
            total += w * w1 * row;
        }
        total
    }

    /// Periodic trapezoid rule along the σ¹ line through axis-0 index `i0`.
    pub fn slice_integral(&self, values: &[f64]) -> Result<f64> {
        if !self.axes[1].periodic {
            return Err(Error::Config("slice integrals need a periodic σ¹ axis".into()));
        }
        if values.len() != self.axes[1].len {
            return Err(Error::Config("slice integrand length differs from σ¹ resolution".into()));
        }
        Ok(self.step(1) * values.iter().sum::<f64>())
    }

    /// Axis-0 index of the grid line at `s0`, if there is one.
    pub fn slice_index(&self, s0: f64) -> Result<usize> {
        let a = &self.axes[0];
        let tol = 1e-9 * a.step();
        (0..a.len)
            .find(|&i| (self.coord0(i) - s0).abs() < tol)
            .ok_or_else(|| Error::Config(format!("slice σ⁰ = {s0} does not lie on a grid line")))
    }
}

/// Legendre roots and weights on [-1, 1], ordered by decreasing root so the
/// matching arccos nodes increase.
pub fn gl_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for k in 0..n {
        // Tricomi initial guess, then Newton on P_n
        let mut z = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[k] = z;
        w[k] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Slot {
    Up,
    Down,
}

/// Tensor components over an n-dimensional background, sampled per node.
/// Components of a node are stored contiguously, first slot slowest.
#[derive(Clone, Debug)]
pub struct Field {
    pub chart: Chart,
    pub dim: usize,
    pub slots: Vec<Slot>,
    pub data: Vec<f64>,
}

impl Field {
    pub fn zeros(chart: Chart, dim: usize, slots: &[Slot]) -> Self {
        let nc = dim.pow(slots.len() as u32);
        Field { chart, dim, slots: slots.to_vec(), data: vec![0.0; nc * chart.len()] }
    }

    /// Fill node by node (in parallel); `f` receives the node index and the
    /// node's component buffer.
    pub fn from_fn<F>(chart: Chart, dim: usize, slots: &[Slot], f: F) -> Self
    where
        F: Fn(usize, &mut [f64]) + Sync,
    {
        let mut out = Field::zeros(chart, dim, slots);
        let nc = out.ncomp();
        out.data.par_chunks_mut(nc).enumerate().for_each(|(k, buf)| f(k, buf));
        out
    }

    pub fn scalar_fn<F>(chart: Chart, dim: usize, f: F) -> Self
    where
        F: Fn(usize) -> f64 + Sync,
    {
        Field::from_fn(chart, dim, &[], |k, o| o[0] = f(k))
    }

    pub fn rank(&self) -> usize {
        self.slots.len()
    }

    pub fn ncomp(&self) -> usize {
        self.dim.pow(self.slots.len() as u32)
    }

    pub fn at(&self, node: usize) -> &[f64] {
        let nc = self.ncomp();
        &self.data[node * nc..(node + 1) * nc]
    }

    pub fn value(&self, node: usize) -> f64 {
        self.at(node)[0]
    }

    fn same_layout(&self, other: &Field) {
        assert_eq!(self.chart.shape(), other.chart.shape(), "chart mismatch");
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        assert_eq!(self.slots.len(), other.slots.len(), "rank mismatch");
    }

    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        self.same_layout(other);
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Field { data, ..self.clone() }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field { data: self.data.iter().map(|&a| f(a)).collect(), ..self.clone() }
    }

    pub fn add(&self, other: &Field) -> Field {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> Field {
        self.map(|a| c * a)
    }

    /// Max over retained nodes of the largest absolute component.
    pub fn max_abs(&self) -> f64 {
        let nc = self.ncomp();
        (0..self.chart.len())
            .filter(|&k| self.chart.retained(k))
            .map(|k| self.data[k * nc..(k + 1) * nc].iter().fold(0.0_f64, |m, v| m.max(v.abs())))
            .fold(0.0, f64::max)
    }

    /// Max over all nodes, margins included.
    pub fn max_abs_all(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Reorder slots: output slot `k` takes input slot `perm[k]`.
    pub fn permute(&self, perm: &[usize]) -> Field {
        let r = self.rank();
        assert_eq!(perm.len(), r);
        let n = self.dim;
        let slots: Vec<Slot> = perm.iter().map(|&p| self.slots[p]).collect();
        let nc = self.ncomp();
        let map: Vec<usize> = (0..nc)
            .map(|c| {
                let idx = unflatten(c, n, r);
                let mut src = vec![0; r];
                for k in 0..r {
                    src[perm[k]] = idx[k];
                }
                flatten(&src, n)
            })
            .collect();
        Field::from_fn(self.chart, n, &slots, |k, o| {
            let s = self.at(k);
            for (c, v) in o.iter_mut().enumerate() {
                *v = s[map[c]];
            }
        })
    }

    /// ∂f/∂σ^axis for every component.
    pub fn partial(&self, axis: usize) -> Field {
        let a = self.chart.axes[axis];
        let h = a.step();
        let n1 = self.chart.axes[1].len;
        let nc = self.ncomp();
        let len = a.len;
        let stride = if axis == 0 { n1 * nc } else { nc };
        let chart = self.chart;
        let src = &self.data;
        Field::from_fn(chart, self.dim, &self.slots, |k, o| {
            let (i0, i1) = (k / n1, k % n1);
            let i = if axis == 0 { i0 } else { i1 };
            let base = k * nc - i * stride;
            let at = |j: usize, c: usize| src[base + j * stride + c];
            if a.periodic {
                let m1 = (i + len - 1) % len;
                let m2 = (i + len - 2) % len;
                let p1 = (i + 1) % len;
                let p2 = (i + 2) % len;
                for (c, v) in o.iter_mut().enumerate() {
                    *v = (at(m2, c) - 8.0 * at(m1, c) + 8.0 * at(p1, c) - at(p2, c)) / (12.0 * h);
                }
            } else {
                let (w, j0): ([f64; 5], usize) = if i >= 2 && i + 2 < len {
                    ([1.0, -8.0, 0.0, 8.0, -1.0], i - 2)
                } else if i == 0 {
                    ([-25.0, 48.0, -36.0, 16.0, -3.0], 0)
                } else if i == 1 {
                    ([-3.0, -10.0, 18.0, -6.0, 1.0], 0)
                } else if i == len - 1 {
                    ([3.0, -16.0, 36.0, -48.0, 25.0], len - 5)
                } else {
                    ([-1.0, 6.0, -18.0, 10.0, 3.0], len - 5)
                };
                for (c, v) in o.iter_mut().enumerate() {
                    let s: f64 = (0..5).map(|q| w[q] * at(j0 + q, c)).sum();
                    *v = s / (12.0 * h);
                }
            }
        })
    }
}

pub fn flatten(idx: &[usize], n: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * n + i)
}

pub fn unflatten(mut c: usize, n: usize, rank: usize) -> Vec<usize> {
    let mut out = vec![0; rank];
    for k in (0..rank).rev() {
        out[k] = c % n;
        c /= n;
    }
    out
}

/// Order estimate log2(coarse/fine) for a resolution doubling.
/// Pairs already at the roundoff floor count as exact (infinite order).
pub fn convergence_order(coarse: f64, fine: f64, floor: f64) -> f64 {
    if coarse <= floor && fine <= floor {
        return f64::INFINITY;
    }
    if fine <= 0.0 {
        return f64::INFINITY;
    }
    (coarse / fine).log2()
}
