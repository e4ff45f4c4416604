//! The area bivector ℰ, the ρ one-form, the Euler characteristic and the
//! worldsheet gauge transformation ρ → ρ + ∇̄φ.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::einsum::ein;
use crate::embedding::{Embedding, Shape, Surface};
use crate::error::{Error, Result};
use crate::extrinsic::Extrinsic;
use crate::grid::{Axis, Chart, Field, Slot};
use crate::internal::Internal;

use Slot::{Down, Up};

/// Patch half-width in nodes and step used for pointwise curvature in the
/// Euler integral.
const PATCH_NODES: usize = 9;
const PATCH_STEP: f64 = 4e-3;
/// Gauss–Legendre nodes in cos θ for closed polar charts.
pub const EULER_GL_NODES: usize = 64;
/// Nodes with |cos θ| above this are evaluated in the tilted polar chart.
const TILT_COS: f64 = 0.6;

#[derive(Clone, Debug)]
pub struct GaugeForm {
    /// +1 or −1; flips ℰ and with it the ρ one-form.
    pub orientation: f64,
    /// ℰ^{μν} = ε^{AB} i^μ_A i^ν_B / √|γ|.
    pub e_up: Field,
    pub e_low: Field,
    /// ℰ_α^β.
    pub e_mix: Field,
    /// ρ_μ = ρ_μ^α_β ℰ_α^β.
    pub rho1: Field,
}

impl GaugeForm {
    pub fn new(s: &Surface, ig: &Internal, orientation: f64) -> GaugeForm {
        let n = s.dim;
        let e_up = Field::from_fn(s.chart, n, &[Up, Up], |k, o| {
            let (a, b, sq) = (s.legs[0].at(k), s.legs[1].at(k), s.sqrt_gamma.value(k));
            for m in 0..n {
                for q in 0..n {
                    o[m * n + q] = orientation * (a[m] * b[q] - b[m] * a[q]) / sq;
                }
            }
        });
        let e_mix = ein("ga,gb->ab", &[&s.g, &e_up], &[Down, Up]);
        let e_low = ein("ab,bn->an", &[&e_mix, &s.g], &[Down, Down]);
        let rho1 = ein("lab,ab->l", &[&ig.rho, &e_mix], &[Down]);
        GaugeForm { orientation, e_up, e_low, e_mix, rho1 }
    }

    /// ½ ℰ^{μν} ℰ_{μν}: −1 on Lorentzian sheets, +1 on Euclidean ones.
    pub fn half_norm(&self) -> Field {
        ein("mn,mn->", &[&self.e_up, &self.e_low], &[]).scale(0.5)
    }

    /// Sign κ with R = κ ∇̄_μ(ℰ^{μν} ρ_ν), read off the first node.
    pub fn kappa(&self) -> f64 {
        self.half_norm().value(0).signum()
    }

    /// ∇̄_σ ℰ^{μν} − (K_{στ}^ν ℰ^{μτ} − K_{στ}^μ ℰ^{ντ}).
    pub fn derivative_residual(&self, s: &Surface, ex: &Extrinsic) -> Field {
        let de = s.nabla(&self.e_up);
        let a = ein("stn,mt->smn", &[&ex.k, &self.e_up], &[Down, Up, Up]);
        de.sub(&a).add(&a.permute(&[0, 2, 1]))
    }

    /// ∇̄_μ ℰ^{μν}.
    pub fn divergence(&self, s: &Surface) -> Field {
        ein("mmn->n", &[&s.nabla(&self.e_up)], &[Up])
    }

    /// 2 n_[λ^σ ∇̄_κ] ρ_σ as a (κ, λ) two-form.
    pub fn exterior(s: &Surface, rho1: &Field) -> Field {
        let d = s.nabla(rho1);
        let t = ein("sl,ks->kl", &[&s.n_mix, &d], &[Down, Down]);
        t.sub(&t.permute(&[1, 0]))
    }

    /// R ℰ_{κλ} − 2 n_[λ^σ ∇̄_κ] ρ_σ.
    pub fn curvature_residual(&self, s: &Surface, ig: &Internal) -> Field {
        self.r_e(s, ig).sub(&GaugeForm::exterior(s, &self.rho1))
    }

    /// R ℰ_{κλ}.
    pub fn r_e(&self, s: &Surface, ig: &Internal) -> Field {
        Field::from_fn(s.chart, s.dim, &[Down, Down], |k, o| {
            let (e, r) = (self.e_low.at(k), ig.scalar.value(k));
            for (c, v) in o.iter_mut().enumerate() {
                *v = r * e[c];
            }
        })
    }

    /// ∇̄_μ(ℰ^{μν} ρ_ν) for a given one-form.
    pub fn divergence_density(&self, s: &Surface, rho1: &Field) -> Field {
        let v = ein("mn,n->m", &[&self.e_up, rho1], &[Up]);
        ein("mm->", &[&s.nabla(&v)], &[])
    }

    /// R − κ ∇̄_μ(ℰ^{μν} ρ_ν).
    pub fn integrand_residual(&self, s: &Surface, ig: &Internal) -> Field {
        ig.scalar.sub(&self.divergence_density(s, &self.rho1).scale(self.kappa()))
    }

    /// ℰ^{μν} K_{αβν}, which must vanish.
    pub fn e_k_residual(&self, ex: &Extrinsic) -> Field {
        ein("mn,abn->mab", &[&self.e_up, &ex.k_low], &[Up, Down, Down])
    }
}

/// Worldsheet scalar φ for gauge shifts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GaugeField {
    /// Σ amp cos(k₀σ⁰ + k₁σ¹ + phase).
    Fourier { modes: Vec<[f64; 4]> },
    /// amp · exp(1 − 1/(1 − r²/R²)) inside the chart-coordinate disc of
    /// radius R about `center` (periodic axes wrap), zero outside.
    Bump { center: [f64; 2], radius: f64, amp: f64 },
}

impl GaugeField {
    pub fn validate(&self) -> Result<()> {
        match self {
            GaugeField::Bump { radius, .. } if !(*radius > 0.0) => {
                Err(Error::Config(format!("gauge bump radius must be positive, got {radius}")))
            }
            _ => Ok(()),
        }
    }

    pub fn is_compact(&self) -> bool {
        matches!(self, GaugeField::Bump { .. })
    }

    pub fn value(&self, chart: &Chart, s0: f64, s1: f64) -> f64 {
        match self {
            GaugeField::Fourier { modes } => modes.iter().map(|m| m[0] * (m[1] * s0 + m[2] * s1 + m[3]).cos()).sum(),
            GaugeField::Bump { center, radius, amp } => {
                let wrap = |d: f64, a: &Axis| {
                    if a.periodic {
                        let l = a.hi - a.lo;
                        d - l * (d / l).round()
                    } else {
                        d
                    }
                };
                let d0 = wrap(s0 - center[0], &chart.axes[0]);
                let d1 = wrap(s1 - center[1], &chart.axes[1]);
                let q = (d0 * d0 + d1 * d1) / (radius * radius);
                if q < 1.0 {
                    amp * (1.0 - 1.0 / (1.0 - q)).exp()
                } else {
                    0.0
                }
            }
        }
    }

    pub fn sample(&self, s: &Surface) -> Field {
        Field::scalar_fn(s.chart, s.dim, |k| {
            let (a, b) = s.chart.coords(k);
            self.value(&s.chart, a, b)
        })
    }
}

/// ρ_ν + ∇̄_ν φ.
pub fn gauge_shift(s: &Surface, rho1: &Field, phi: &Field) -> Field {
    rho1.add(&s.nabla(phi))
}

/// ∇̄_[μ ∇̄_ν] φ − K_[μ^σ_ν] ∇̄_σ φ (antisymmetrized with weight ½).
pub fn commutator_residual(s: &Surface, ex: &Extrinsic, phi: &Field) -> Field {
    let d = s.nabla(phi);
    let dd = s.nabla(&d);
    let kd = ein("msn,s->mn", &[&ex.k_mix, &d], &[Down, Down]);
    let t = dd.sub(&kd);
    t.sub(&t.permute(&[1, 0])).scale(0.5)
}

#[derive(Clone, Debug, Serialize)]
pub struct EulerResult {
    pub raw_integral: f64,
    pub euler_number: f64,
    pub nodes: usize,
}

/// ∫√|γ| R d²σ over a closed Euclidean surface, with R at each quadrature
/// node from a small local patch so no stencil crosses a pole. Polar charts
/// use Gauss–Legendre in cos θ, periodic ones the rectangle rule.
pub fn euler_characteristic(emb: &Embedding, n0: usize, n1: usize) -> Result<EulerResult> {
    if !emb.closed_euclidean() {
        return Err(Error::Contract(format!("Euler number needs a closed Euclidean surface, got {}", emb.name)));
    }
    let chart = match emb.shape {
        Shape::Sphere { .. } => Chart::gauss_legendre_polar(EULER_GL_NODES, Axis::periodic(0.0, 2.0 * PI, n1))?,
        _ => emb.chart(n0, n1)?,
    };
    let polar = matches!(emb.shape, Shape::Sphere { .. });
    let density: Vec<f64> = (0..chart.len())
        .map(|k| {
            let (s0, s1) = chart.coords(k);
            if !polar {
                let (r, sq) = patch_curvature(emb, s0, s1)?;
                return Ok(sq * r);
            }
            let (r, _) = match emb.shape {
                Shape::Sphere { a, .. } if s0.cos().abs() > TILT_COS => {
                    // same point in the chart polar about the x axis
                    let (st, ct) = s0.sin_cos();
                    let u = (st * s1.cos()).acos();
                    let v = ct.atan2(st * s1.sin());
                    let tilted = Embedding { shape: Shape::Sphere { a, tilted: true }, ..emb.clone() };
                    patch_curvature(&tilted, u, v)?
                }
                _ => patch_curvature(emb, s0, s1)?,
            };
            // √|γ| / sin θ in the original chart, where the weights live
            Ok(area_element(emb, s0, s1) * r / s0.sin())
        })
        .collect::<Result<_>>()?;
    let field = Field { chart, dim: emb.dim(), slots: vec![], data: density };
    let raw = chart.surface_integral(&field);
    Ok(EulerResult { raw_integral: raw, euler_number: raw / (4.0 * PI), nodes: chart.len() })
}

/// √|γ| from the closed-form legs at one chart point.
pub fn area_element(emb: &Embedding, s0: f64, s1: f64) -> f64 {
    let n = emb.dim();
    let (mut x, mut a, mut b) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    emb.eval(s0, s1, &mut x, &mut a, &mut b);
    let mut g = vec![0.0; n * n];
    emb.background.metric(&x, &mut g);
    let dot = |p: &[f64], q: &[f64]| -> f64 { (0..n).map(|m| (0..n).map(|r| p[m] * g[m * n + r] * q[r]).sum::<f64>()).sum() };
    let (aa, ab, bb) = (dot(&a, &a), dot(&a, &b), dot(&b, &b));
    (aa * bb - ab * ab).abs().sqrt()
}

/// (R, √|γ|) at (s0, s1) from a 9 × 9 open patch centred there.
pub fn patch_curvature(emb: &Embedding, s0: f64, s1: f64) -> Result<(f64, f64)> {
    let half = PATCH_STEP * PATCH_NODES as f64 / 2.0;
    let chart = Chart::new(
        Axis::open(s0 - half, s0 + half, PATCH_NODES),
        Axis::open(s1 - half, s1 + half, PATCH_NODES),
        0.0,
    )?;
    let s = Surface::build(emb, chart)?;
    let ig = Internal::new(&s);
    let c = chart.node(PATCH_NODES / 2, PATCH_NODES / 2);
    Ok((ig.scalar.value(c), s.sqrt_gamma.value(c)))
}

/// ∫√|γ| f d²σ on a periodic chart by the rectangle rule.
pub fn area_integral(s: &Surface, f: &Field) -> f64 {
    let prod = f.zip_with(&s.sqrt_gamma, |a, b| a * b);
    s.chart.surface_integral(&prod)
}
