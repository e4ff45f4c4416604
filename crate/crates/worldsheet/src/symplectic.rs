//! The symplectic two-form on pairs of deformations: slice fluxes of the
//! bilinear current and of the gauge-form kernel, slice independence,
//! field-space gauge shifts and gauge equivalence of (ℰ, ρ) pairs.

use serde::Serialize;

use crate::deformation::{projected_divergence, DeformationField, SelfAdjointness, Variation};
use crate::einsum::ein;
use crate::embedding::Surface;
use crate::error::{Error, Result};
use crate::extrinsic::Extrinsic;
use crate::gaugeform::GaugeForm;
use crate::grid::{Field, Slot};
use crate::internal::Internal;

use Slot::{Down, Up};

/// A σ⁰ = const grid line with its unit covector and line element.
#[derive(Clone, Debug)]
pub struct Slice {
    pub position: f64,
    pub index: usize,
    /// m_μ = ∂_μσ⁰ / √|γ^{00}| per σ¹ node, so m(i₀) > 0.
    pub m: Vec<Vec<f64>>,
    /// √|γ₁₁| per σ¹ node.
    pub sqrt_h: Vec<f64>,
}

impl Slice {
    pub fn new(s: &Surface, position: f64) -> Result<Slice> {
        let index = s.chart.slice_index(position)?;
        let n = s.dim;
        let n1 = s.chart.axes[1].len;
        let mut m = Vec::with_capacity(n1);
        let mut sqrt_h = Vec::with_capacity(n1);
        for i1 in 0..n1 {
            let k = s.chart.node(index, i1);
            let (gi, g) = (s.gamma_inv.at(k), s.g.at(k));
            let norm = gi[0].abs().sqrt();
            // ∂_μσ⁰ = g_{μν} γ^{0B} i^ν_B
            let v: Vec<f64> = (0..n).map(|q| (gi[0] * s.legs[0].at(k)[q] + gi[1] * s.legs[1].at(k)[q]) / norm).collect();
            m.push((0..n).map(|mu| (0..n).map(|q| g[mu * n + q] * v[q]).sum()).collect());
            sqrt_h.push(s.gamma.at(k)[3].abs().sqrt());
        }
        Ok(Slice { position, index, m, sqrt_h })
    }

    /// max |g^{μν}m_μm_ν ∓ 1| and max |m_μ i^μ_1|.
    pub fn frame_residuals(&self, s: &Surface) -> (f64, f64) {
        let n = s.dim;
        let sign = if s.gamma.at(0)[0] < 0.0 { -1.0 } else { 1.0 };
        let (mut a, mut b) = (0.0_f64, 0.0_f64);
        for (i1, m) in self.m.iter().enumerate() {
            let k = s.chart.node(self.index, i1);
            let gi = s.g_inv.at(k);
            let nrm: f64 = (0..n).map(|p| (0..n).map(|q| m[p] * gi[p * n + q] * m[q]).sum::<f64>()).sum();
            a = a.max((nrm - sign).abs());
            b = b.max((0..n).map(|p| m[p] * s.legs[1].at(k)[p]).sum::<f64>().abs());
        }
        (a, b)
    }

    /// ∮ v^μ m_μ √|h| dσ¹ for a vector field v.
    pub fn flux(&self, s: &Surface, v: &Field) -> Result<f64> {
        let vals = self.normal_components(s, v);
        let w: Vec<f64> = vals.iter().zip(&self.sqrt_h).map(|(a, b)| a * b).collect();
        s.chart.slice_integral(&w)
    }

    /// v^μ m_μ at each slice node.
    pub fn normal_components(&self, s: &Surface, v: &Field) -> Vec<f64> {
        self.m
            .iter()
            .enumerate()
            .map(|(i1, m)| {
                let x = v.at(s.chart.node(self.index, i1));
                m.iter().zip(x).map(|(a, b)| a * b).sum()
            })
            .collect()
    }
}

/// Everything about a deformation pair (ξ′, ξ) that the slice functionals
/// need.
#[derive(Clone, Debug)]
pub struct PairKernels {
    pub labels: (String, String),
    /// J̄^μ(ξ′, ξ).
    pub current: Field,
    /// ξ′·(𝒪ξ) − (𝒪ξ′)·ξ.
    pub lhs: Field,
    /// ∇̄_μ J̄^μ.
    pub divergence: Field,
    /// δ_{ξ′}(√|γ|ℰ^{μν}) and δ_ξ(√|γ|ℰ^{μν}).
    pub density: (Field, Field),
    /// δ_{ξ′}ρ_ν and δ_ξρ_ν.
    pub rho: (Field, Field),
    /// W^μ = δ_{ξ′}(√|γ|ℰ^{μν}) δ_ξρ_ν − δ_ξ(√|γ|ℰ^{μν}) δ_{ξ′}ρ_ν.
    pub w: Field,
}

impl PairKernels {
    pub fn new(
        s: &Surface,
        ex: &Extrinsic,
        ig: &Internal,
        gf: &GaugeForm,
        a: &DeformationField,
        b: &DeformationField,
        sigma1: f64,
    ) -> PairKernels {
        let va = Variation::new(s, ex, &a.xi);
        let vb = Variation::new(s, ex, &b.xi);
        PairKernels::from_variations(s, ex, ig, gf, (&a.label, &va), (&b.label, &vb), sigma1)
    }

    /// Same kernels from variations the caller already holds.
    pub fn from_variations(
        s: &Surface,
        ex: &Extrinsic,
        ig: &Internal,
        gf: &GaugeForm,
        (la, va): (&str, &Variation),
        (lb, vb): (&str, &Variation),
        sigma1: f64,
    ) -> PairKernels {
        let sa = SelfAdjointness::new(s, ex, ig, va, vb, sigma1);
        let da = va.delta_density_e(s, gf.orientation);
        let db = vb.delta_density_e(s, gf.orientation);
        let ra = ein("lab,ab->l", &[&va.delta_rho_b, &gf.e_mix], &[Down]);
        let rb = ein("lab,ab->l", &[&vb.delta_rho_b, &gf.e_mix], &[Down]);
        let w = gauge_kernel(&da, &rb, &db, &ra);
        PairKernels {
            labels: (la.to_string(), lb.to_string()),
            current: sa.current,
            lhs: sa.lhs,
            divergence: sa.divergence,
            density: (da, db),
            rho: (ra, rb),
            w,
        }
    }

    /// ω from the bilinear current: ∮ J̄^μ m_μ √|h| dσ¹, which equals
    /// ∮ √|γ| J̄^μ ∂_μσ⁰ dσ¹.
    pub fn omega_current(&self, s: &Surface, sl: &Slice) -> Result<f64> {
        sl.flux(s, &self.current)
    }

    /// ω from the gauge-form kernel, a density: ∮ W^μ ∂_μσ⁰ dσ¹.
    pub fn omega_gauge(&self, s: &Surface, sl: &Slice) -> Result<f64> {
        sl.flux(s, &undensitize(s, &self.w))
    }

    /// W·m / (√|γ| J̄·m) at every slice node.
    pub fn kernel_ratios(&self, s: &Surface, sl: &Slice) -> Vec<f64> {
        let w = sl.normal_components(s, &self.w);
        let j = sl.normal_components(s, &self.current);
        (0..w.len())
            .map(|i1| {
                let k = s.chart.node(sl.index, i1);
                w[i1] / (s.sqrt_gamma.value(k) * j[i1])
            })
            .collect()
    }
}

fn gauge_kernel(da: &Field, rb: &Field, db: &Field, ra: &Field) -> Field {
    let a = ein("mn,n->m", &[da, rb], &[Up]);
    a.sub(&ein("mn,n->m", &[db, ra], &[Up]))
}

fn undensitize(s: &Surface, v: &Field) -> Field {
    Field::from_fn(s.chart, s.dim, &v.slots, |k, o| {
        let q = s.sqrt_gamma.value(k);
        for (x, y) in o.iter_mut().zip(v.at(k)) {
            *x = y / q;
        }
    })
}

/// Mean and relative spread (standard deviation over |mean|) of a sample.
pub fn spread(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt() / mean.abs())
}

/// ∫ √|γ| f dσ⁰ dσ¹ over the band between grid lines i₀ < i₁, with the
/// end-corrected trapezoid rule in σ⁰ (fourth order).
pub fn band_integral(s: &Surface, f: &Field, i0: usize, i1: usize) -> Result<f64> {
    if i1 < i0 + 5 {
        return Err(Error::Config(format!("band between σ⁰ lines {i0} and {i1} is narrower than 5 steps")));
    }
    const END: [f64; 3] = [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0];
    let (h0, h1) = (s.chart.step(0), s.chart.step(1));
    let n1 = s.chart.axes[1].len;
    let mut total = 0.0;
    for i in i0..=i1 {
        let from_end = (i - i0).min(i1 - i);
        let w = if from_end < 3 { END[from_end] } else { 1.0 };
        let row: f64 = (0..n1)
            .map(|j| {
                let k = s.chart.node(i, j);
                s.sqrt_gamma.value(k) * f.value(k)
            })
            .sum();
        total += w * row;
    }
    Ok(total * h0 * h1)
}

#[derive(Clone, Debug, Serialize)]
pub struct StokesCheck {
    pub from: f64,
    pub to: f64,
    /// ω(Σ₂) − ω(Σ₁).
    pub delta_omega: f64,
    /// Band integral of ξ′·(𝒪ξ) − (𝒪ξ′)·ξ.
    pub band_lhs: f64,
    /// Band integral of ∇̄_μ J̄^μ.
    pub band_divergence: f64,
}

/// ω differences between adjacent slices against their band integrals.
pub fn slice_independence(s: &Surface, k: &PairKernels, slices: &[Slice]) -> Result<Vec<StokesCheck>> {
    if slices.len() < 2 {
        return Err(Error::Config("slice independence needs at least two slices".into()));
    }
    let mut order: Vec<&Slice> = slices.iter().collect();
    order.sort_by_key(|sl| sl.index);
    order
        .windows(2)
        .map(|p| {
            let (a, b) = (p[0], p[1]);
            Ok(StokesCheck {
                from: a.position,
                to: b.position,
                delta_omega: k.omega_current(s, b)? - k.omega_current(s, a)?,
                band_lhs: band_integral(s, &k.lhs, a.index, b.index)?,
                band_divergence: band_integral(s, &k.divergence, a.index, b.index)?,
            })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct GaugeShift {
    /// max |n^ν_ρ ∇̄_μ δ_{ξ′}(√|γ|ℰ^{μρ})|.
    pub divergence_residual: f64,
    /// ω′ − ω for δ_ξρ_ν → δ_ξρ_ν + ∇̄_νφ.
    pub delta_omega: f64,
    /// ∮ ∇̄_ν[φ δ_{ξ′}(√|γ|ℰ^{μν})] dΣ_μ.
    pub total_derivative: f64,
    /// −∮ φ ∇̄_ν δ_{ξ′}(√|γ|ℰ^{μν}) dΣ_μ.
    pub bulk: f64,
    /// Boundary of the slice; zero for a closed σ¹ loop.
    pub boundary: f64,
}

pub fn fieldspace_gauge_shift(s: &Surface, k: &PairKernels, phi: &Field, sl: &Slice) -> Result<GaugeShift> {
    let y = &k.density.0;
    let dphi = s.nabla(phi);
    let shift = ein("mn,n->m", &[y, &dphi], &[Up]);
    let phi_y = Field::from_fn(s.chart, s.dim, &y.slots, |n, o| {
        let p = phi.value(n);
        for (a, b) in o.iter_mut().zip(y.at(n)) {
            *a = p * b;
        }
    });
    let total = ein("nmn->m", &[&s.nabla(&phi_y)], &[Up]);
    let div_y = ein("nmn->m", &[&s.nabla(y)], &[Up]);
    let bulk = Field::from_fn(s.chart, s.dim, &[Up], |n, o| {
        let p = phi.value(n);
        for (a, b) in o.iter_mut().zip(div_y.at(n)) {
            *a = -p * b;
        }
    });
    Ok(GaugeShift {
        divergence_residual: projected_divergence(s, y).max_abs(),
        delta_omega: sl.flux(s, &undensitize(s, &shift))?,
        total_derivative: sl.flux(s, &undensitize(s, &total))?,
        bulk: sl.flux(s, &undensitize(s, &bulk))?,
        boundary: 0.0,
    })
}

/// W^μ with δ_ξρ shifted by ∇̄φ, for recomputing ω directly.
pub fn shifted_kernel(s: &Surface, k: &PairKernels, phi: &Field) -> Field {
    let rb = k.rho.1.add(&s.nabla(phi));
    gauge_kernel(&k.density.0, &rb, &k.density.1, &k.rho.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct Equivalence {
    pub equivalent: bool,
    /// Largest of the ℰ mismatch, the exterior derivative of Δρ and the
    /// holonomies of Δρ around periodic chart loops.
    pub residual: f64,
    pub holonomies: Vec<f64>,
}

/// Whether (ℰ_a, ρ_a) and (ℰ_b, ρ_b) differ by a worldsheet gauge
/// transformation ρ → ρ + ∇̄φ.
pub fn gauge_equivalent(s: &Surface, a: (&Field, &Field), b: (&Field, &Field), tol: f64) -> Result<Equivalence> {
    for f in [a.0, a.1, b.0, b.1] {
        if f.chart.shape() != s.chart.shape() || f.dim != s.dim {
            return Err(Error::Contract("gauge equivalence needs both configurations on the surface chart".into()));
        }
    }
    let de = a.0.sub(b.0).max_abs();
    let drho = a.1.sub(b.1);
    let closed = GaugeForm::exterior(s, &drho).max_abs();
    let pulled = s.pullback(&drho);
    let (n0, n1) = s.chart.shape();
    let mut holonomies = Vec::new();
    if s.chart.axes[1].periodic {
        let v: Vec<f64> = (0..n1).map(|j| pulled.at(s.chart.node(0, j))[1]).collect();
        holonomies.push(s.chart.step(1) * v.iter().sum::<f64>());
    }
    if s.chart.axes[0].periodic {
        let v: Vec<f64> = (0..n0).map(|i| pulled.at(s.chart.node(i, 0))[0]).collect();
        holonomies.push(s.chart.step(0) * v.iter().sum::<f64>());
    }
    let residual = holonomies.iter().fold(de.max(closed), |m, h| m.max(h.abs()));
    Ok(Equivalence { equivalent: residual < tol, residual, holonomies })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deformation::{make_deformation, seeded_pairs, DeformationRecipe};
    use crate::gaugeform::GaugeField;
    use crate::testutil::surface;
    use std::f64::consts::PI;

    struct Setup {
        s: Surface,
        k: PairKernels,
        kt: PairKernels,
    }

    fn setup(bg: &str, emb: &str, n: usize) -> Setup {
        let s = surface(bg, emb, &[], n);
        let (ex, ig) = (Extrinsic::new(&s), Internal::new(&s));
        let gf = GaugeForm::new(&s, &ig, 1.0);
        let p = seeded_pairs(5, 1, s.normals.len()).remove(0);
        let (a, b) = (make_deformation(&p.0, &s).unwrap(), make_deformation(&p.1, &s).unwrap());
        let k = PairKernels::new(&s, &ex, &ig, &gf, &a, &b, 1.0);
        let kt = PairKernels::new(&s, &ex, &ig, &gf, &b, &a, 1.0);
        Setup { s, k, kt }
    }

    #[test]
    fn slice_covector_is_unit_and_orthogonal() {
        for (bg, emb) in [("minkowski4", "wavy_cylinder"), ("euclidean3", "torus")] {
            let s = surface(bg, emb, &[], 16);
            let sl = Slice::new(&s, PI / 2.0).unwrap();
            let (a, b) = sl.frame_residuals(&s);
            assert!(a < 1e-12 && b < 1e-12, "{emb}: {a} {b}");
        }
    }

    #[test]
    fn slice_must_lie_on_grid_line() {
        let s = surface("euclidean3", "torus", &[], 16);
        assert!(Slice::new(&s, 0.1).is_err());
    }

    #[test]
    fn omega_is_antisymmetric() {
        let st = setup("minkowski4", "wavy_cylinder", 16);
        let sl = Slice::new(&st.s, PI / 2.0).unwrap();
        let (a, b) = (st.k.omega_current(&st.s, &sl).unwrap(), st.kt.omega_current(&st.s, &sl).unwrap());
        assert_eq!(a, -b);
        let (a, b) = (st.k.omega_gauge(&st.s, &sl).unwrap(), st.kt.omega_gauge(&st.s, &sl).unwrap());
        assert_eq!(a, -b);
    }

    #[test]
    fn plane_omega_vanishes() {
        let st = setup("minkowski4", "plane", 16);
        let sl = Slice::new(&st.s, PI).unwrap();
        assert!(st.k.omega_current(&st.s, &sl).unwrap().abs() < 1e-12);
        assert!(st.k.omega_gauge(&st.s, &sl).unwrap().abs() < 1e-12);
    }

    #[test]
    fn omega_is_bilinear() {
        let s = surface("euclidean3", "torus", &[], 16);
        let (ex, ig) = (Extrinsic::new(&s), Internal::new(&s));
        let gf = GaugeForm::new(&s, &ig, 1.0);
        let r = |m: [f64; 4]| DeformationRecipe { label: String::new(), legs: vec![vec![m]] };
        let (p, q, x) = (r([1.0, 1.0, 2.0, 0.3]), r([0.6, 2.0, 1.0, 0.0]), r([0.9, 0.0, 1.0, 1.0]));
        let mut sum = p.clone();
        sum.legs[0].push([2.0 * 0.6, 2.0, 1.0, 0.0]);
        let d = |r: &DeformationRecipe| make_deformation(r, &s).unwrap();
        let sl = Slice::new(&s, PI).unwrap();
        let om = |a: &DeformationRecipe| {
            let k = PairKernels::new(&s, &ex, &ig, &gf, &d(a), &d(&x), 1.0);
            (k.omega_current(&s, &sl).unwrap(), k.omega_gauge(&s, &sl).unwrap())
        };
        let (wp, wq, ws) = (om(&p), om(&q), om(&sum));
        assert!((ws.0 - wp.0 - 2.0 * wq.0).abs() <= 1e-9 * ws.0.abs().max(1e-12));
        assert!((ws.1 - wp.1 - 2.0 * wq.1).abs() <= 1e-9 * ws.1.abs().max(1e-12));
    }

    #[test]
    fn band_rule_is_fourth_order() {
        // ∫ sin σ⁰ over [0, π/2] × [0, 2π) on a unit-density chart
        let errs: Vec<f64> = [32, 64]
            .iter()
            .map(|&n| {
                let s = surface("minkowski4", "plane", &[], n);
                let f = Field::scalar_fn(s.chart, s.dim, |k| s.chart.coords(k).0.sin() / s.sqrt_gamma.value(k));
                let i = s.chart.slice_index(PI / 2.0).unwrap();
                (band_integral(&s, &f, 0, i).unwrap() - 2.0 * PI).abs()
            })
            .collect();
        assert!(errs[1] < errs[0] / 14.0 && errs[1] < 1e-4, "{errs:?}");
    }

    #[test]
    fn zero_gauge_field_leaves_omega() {
        let st = setup("euclidean3", "torus", 16);
        let sl = Slice::new(&st.s, PI).unwrap();
        let phi = Field::zeros(st.s.chart, st.s.dim, &[]);
        let g = fieldspace_gauge_shift(&st.s, &st.k, &phi, &sl).unwrap();
        assert_eq!(g.delta_omega, 0.0);
        let w = shifted_kernel(&st.s, &st.k, &phi);
        assert_eq!(w.sub(&st.k.w).max_abs_all(), 0.0);
    }

    #[test]
    fn equivalence_predicate() {
        let s = surface("euclidean3", "torus", &[], 32);
        let ig = Internal::new(&s);
        let gf = GaugeForm::new(&s, &ig, 1.0);
        let same = gauge_equivalent(&s, (&gf.e_up, &gf.rho1), (&gf.e_up, &gf.rho1), 1e-6).unwrap();
        assert!(same.equivalent && same.residual == 0.0);
        let phi = GaugeField::Fourier { modes: vec![[0.4, 1.0, 2.0, 0.2]] }.sample(&s);
        let shifted = crate::gaugeform::gauge_shift(&s, &gf.rho1, &phi);
        let g = gauge_equivalent(&s, (&gf.e_up, &gf.rho1), (&gf.e_up, &shifted), 1e-2).unwrap();
        assert!(g.equivalent, "{g:?}");
        // Δρ = c dσ¹ is closed with holonomy 2πc around the σ¹ loop
        let c = 0.3;
        let dsigma1 = Field::from_fn(s.chart, s.dim, &[Down], |k, o| {
            // the covector with i^μ_A ω_μ = (0, c)
            let (gi, l0, l1, g) = (s.gamma_inv.at(k), s.legs[0].at(k), s.legs[1].at(k), s.g.at(k));
            let n = s.dim;
            for m in 0..n {
                o[m] = c * (0..n).map(|q| g[m * n + q] * (gi[2] * l0[q] + gi[3] * l1[q])).sum::<f64>();
            }
        });
        let g = gauge_equivalent(&s, (&gf.e_up, &gf.rho1), (&gf.e_up, &gf.rho1.add(&dsigma1)), 1e-3).unwrap();
        assert!(!g.equivalent);
        assert!((g.holonomies[0] + 2.0 * PI * c).abs() < 1e-9, "{:?}", g.holonomies);
    }
}
