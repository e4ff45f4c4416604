//! Ambient metrics with closed-form Christoffel symbols and Riemann tensor.
//!
//! Index layouts: Γ^m_{ab} at `m*n*n + a*n + b`; R^a_{bcd} at
//! `((a*n + b)*n + c)*n + d` with
//! R^a_{bcd} = ∂_c Γ^a_{db} − ∂_d Γ^a_{cb} + Γ^a_{ce} Γ^e_{db} − Γ^a_{de} Γ^e_{cb}.
//! The background Riemann tensor of the embedding identities is
//! B_{ρσ}^γ_τ = R^γ_{τρσ}.

use std::fmt::Debug;
use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Signature {
    Lorentzian,
    Euclidean,
}

pub trait Background: Send + Sync + Debug {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn signature(&self) -> Signature;
    fn metric(&self, x: &[f64], out: &mut [f64]);
    fn christoffel(&self, x: &[f64], out: &mut [f64]);
    fn riemann(&self, x: &[f64], out: &mut [f64]);
}

#[derive(Debug, Clone)]
pub struct Flat {
    name: &'static str,
    dim: usize,
    lorentzian: bool,
}

impl Flat {
    pub fn minkowski4() -> Self {
        Flat { name: "minkowski4", dim: 4, lorentzian: true }
    }
    pub fn euclidean3() -> Self {
        Flat { name: "euclidean3", dim: 3, lorentzian: false }
    }
    pub fn euclidean4() -> Self {
        Flat { name: "euclidean4", dim: 4, lorentzian: false }
    }
}

impl Background for Flat {
    fn name(&self) -> &str {
        self.name
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn signature(&self) -> Signature {
        if self.lorentzian {
            Signature::Lorentzian
        } else {
            Signature::Euclidean
        }
    }
    fn metric(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for a in 0..self.dim {
            out[a * self.dim + a] = 1.0;
        }
        if self.lorentzian {
            out[0] = -1.0;
        }
    }
    fn christoffel(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
    fn riemann(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
}

/// Round 3-sphere of radius ℓ in hyperspherical coordinates (χ, θ, φ):
/// g = ℓ² (dχ² + sin²χ dθ² + sin²χ sin²θ dφ²).
#[derive(Debug, Clone)]
pub struct RoundS3 {
    pub radius: f64,
}

impl Background for RoundS3 {
    fn name(&self) -> &str {
        "round_s3"
    }
    fn dim(&self) -> usize {
        3
    }
    fn signature(&self) -> Signature {
        Signature::Euclidean
    }
    fn metric(&self, x: &[f64], out: &mut [f64]) {
        let l2 = self.radius * self.radius;
        let (sc, st) = (x[0].sin(), x[1].sin());
        out.fill(0.0);
        out[0] = l2;
        out[4] = l2 * sc * sc;
        out[8] = l2 * sc * sc * st * st;
    }
    fn christoffel(&self, x: &[f64], out: &mut [f64]) {
        let (c, t) = (x[0], x[1]);
        let g = |m: usize, a: usize, b: usize| m * 9 + a * 3 + b;
        out.fill(0.0);
        out[g(0, 1, 1)] = -c.sin() * c.cos();
        out[g(0, 2, 2)] = -c.sin() * c.cos() * t.sin().powi(2);
        out[g(1, 0, 1)] = c.cos() / c.sin();
        out[g(1, 1, 0)] = c.cos() / c.sin();
        out[g(1, 2, 2)] = -t.sin() * t.cos();
        out[g(2, 0, 2)] = c.cos() / c.sin();
        out[g(2, 2, 0)] = c.cos() / c.sin();
        out[g(2, 1, 2)] = t.cos() / t.sin();
        out[g(2, 2, 1)] = t.cos() / t.sin();
    }
    fn riemann(&self, x: &[f64], out: &mut [f64]) {
        // R^a_{bcd} = (δ^a_c g_{bd} − δ^a_d g_{bc}) / ℓ²
        let mut gm = [0.0; 9];
        self.metric(x, &mut gm);
        let l2 = self.radius * self.radius;
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    for d in 0..3 {
                        let dac = if a == c { 1.0 } else { 0.0 };
                        let dad = if a == d { 1.0 } else { 0.0 };
                        out[((a * 3 + b) * 3 + c) * 3 + d] = (dac * gm[b * 3 + d] - dad * gm[b * 3 + c]) / l2;
                    }
                }
            }
        }
    }
}

/// Conformally flat 3-metric g = e^{2f} δ with
/// f = a₀ sin x⁰ + a₁ sin x¹ + a₂ (x²)². Its curvature is not constant, so
/// mixed tangential/normal projections of the Riemann tensor survive.
#[derive(Debug, Clone)]
pub struct ConformalFlat3 {
    pub amp: [f64; 3],
}

impl ConformalFlat3 {
    fn grad_hess(&self, x: &[f64]) -> (f64, [f64; 3], [f64; 3]) {
        let [a0, a1, a2] = self.amp;
        let f = a0 * x[0].sin() + a1 * x[1].sin() + a2 * x[2] * x[2];
        let df = [a0 * x[0].cos(), a1 * x[1].cos(), 2.0 * a2 * x[2]];
        let hd = [-a0 * x[0].sin(), -a1 * x[1].sin(), 2.0 * a2];
        (f, df, hd)
    }

    fn gamma_and_derivative(&self, x: &[f64]) -> ([f64; 27], [f64; 81]) {
        let (_, df, hd) = self.grad_hess(x);
        let d = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
        let mut gam = [0.0; 27];
        let mut dgam = [0.0; 81];
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    gam[a * 9 + b * 3 + c] = d(a, b) * df[c] + d(a, c) * df[b] - d(b, c) * df[a];
                    for e in 0..3 {
                        // ∂_e Γ^a_{bc}; the Hessian of f is diagonal
                        let h = |i: usize, j: usize| if i == j { hd[i] } else { 0.0 };
                        dgam[((a * 3 + b) * 3 + c) * 3 + e] =
                            d(a, b) * h(c, e) + d(a, c) * h(b, e) - d(b, c) * h(a, e);
                    }
                }
            }
        }
        (gam, dgam)
    }
}

impl Background for ConformalFlat3 {
    fn name(&self) -> &str {
        "conformal_flat3"
    }
    fn dim(&self) -> usize {
        3
    }
    fn signature(&self) -> Signature {
        Signature::Euclidean
    }
    fn metric(&self, x: &[f64], out: &mut [f64]) {
        let (f, _, _) = self.grad_hess(x);
        out.fill(0.0);
        for a in 0..3 {
            out[a * 4] = (2.0 * f).exp();
        }
    }
    fn christoffel(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.gamma_and_derivative(x).0);
    }
    fn riemann(&self, x: &[f64], out: &mut [f64]) {
        let (gm, dg) = self.gamma_and_derivative(x);
        riemann_from(3, &gm, &dg, out);
    }
}

/// R^a_{bcd} from Γ and its derivatives dΓ[((a*n+b)*n+c)*n+e] = ∂_e Γ^a_{bc}.
fn riemann_from(n: usize, gm: &[f64], dg: &[f64], out: &mut [f64]) {
    let g = |a: usize, b: usize, c: usize| gm[(a * n + b) * n + c];
    let d = |a: usize, b: usize, c: usize, e: usize| dg[((a * n + b) * n + c) * n + e];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for dd in 0..n {
                    let mut v = d(a, dd, b, c) - d(a, c, b, dd);
                    for e in 0..n {
                        v += g(a, c, e) * g(e, dd, b) - g(a, dd, e) * g(e, c, b);
                    }
                    out[((a * n + b) * n + c) * n + dd] = v;
                }
            }
        }
    }
}

/// Finite-difference cross-check: Γ and Riemann obtained by differentiating
/// another background's metric with 4th-order central differences.
#[derive(Debug, Clone)]
pub struct NumericBackground {
    pub inner: Arc<dyn Background>,
    pub h: f64,
}

impl NumericBackground {
    fn diff<F: Fn(&[f64], &mut [f64])>(&self, x: &[f64], len: usize, f: F) -> Vec<f64> {
        // out[k*n + e] = ∂_e of component k
        let n = x.len();
        let mut out = vec![0.0; len * n];
        let mut buf = vec![0.0; len];
        for e in 0..n {
            for (w, s) in [(1.0, -2.0), (-8.0, -1.0), (8.0, 1.0), (-1.0, 2.0)] {
                let mut y = x.to_vec();
                y[e] += s * self.h;
                f(&y, &mut buf);
                for k in 0..len {
                    out[k * n + e] += w * buf[k] / (12.0 * self.h);
                }
            }
        }
        out
    }

    fn gamma(&self, x: &[f64]) -> Vec<f64> {
        let n = self.inner.dim();
        let mut g = vec![0.0; n * n];
        self.inner.metric(x, &mut g);
        let gi = invert(&g, n);
        let dg = self.diff(x, n * n, |y, o| self.inner.metric(y, o));
        let d = |a: usize, b: usize, c: usize| dg[(a * n + b) * n + c];
        let mut out = vec![0.0; n * n * n];
        for m in 0..n {
            for a in 0..n {
                for b in 0..n {
                    out[(m * n + a) * n + b] = 0.5
                        * (0..n).map(|r| gi[m * n + r] * (d(r, b, a) + d(r, a, b) - d(a, b, r))).sum::<f64>();
                }
            }
        }
        out
    }
}

impl Background for NumericBackground {
    fn name(&self) -> &str {
        self.inner.name()
    }
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn signature(&self) -> Signature {
        self.inner.signature()
    }
    fn metric(&self, x: &[f64], out: &mut [f64]) {
        self.inner.metric(x, out)
    }
    fn christoffel(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.gamma(x));
    }
    fn riemann(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim();
        let gm = self.gamma(x);
        let dg = self.diff(x, n * n * n, |y, o| o.copy_from_slice(&self.gamma(y)));
        riemann_from(n, &gm, &dg, out);
    }
}

/// Dense inverse of a small matrix by Gauss–Jordan elimination with partial
/// pivoting.
pub fn invert(m: &[f64], n: usize) -> Vec<f64> {
    let mut a = m.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i * n + col].abs().partial_cmp(&a[j * n + col].abs()).unwrap()).unwrap();
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
                inv.swap(col * n + k, piv * n + k);
            }
        }
        let p = a[col * n + col];
        for k in 0..n {
            a[col * n + k] /= p;
            inv[col * n + k] /= p;
        }
        for r in 0..n {
            if r != col {
                let f = a[r * n + col];
                if f != 0.0 {
                    for k in 0..n {
                        a[r * n + k] -= f * a[col * n + k];
                        inv[r * n + k] -= f * inv[col * n + k];
                    }
                }
            }
        }
    }
    inv
}

/// Build a catalog background. Recognised names: minkowski4, euclidean3,
/// euclidean4, round_s3 (param `radius`), conformal_flat3 (params `a0`,
/// `a1`, `a2`).
pub fn catalog_background(name: &str, param: &dyn Fn(&str) -> Option<f64>) -> Result<Arc<dyn Background>> {
    Ok(match name {
        "minkowski4" => Arc::new(Flat::minkowski4()),
        "euclidean3" => Arc::new(Flat::euclidean3()),
        "euclidean4" => Arc::new(Flat::euclidean4()),
        "round_s3" => {
            let radius = param("radius").unwrap_or(1.0);
            if !(radius > 0.0) {
                return Err(Error::Config(format!("round_s3 radius must be positive, got {radius}")));
            }
            Arc::new(RoundS3 { radius })
        }
        "conformal_flat3" => Arc::new(ConformalFlat3 {
            amp: [param("a0").unwrap_or(0.3), param("a1").unwrap_or(0.2), param("a2").unwrap_or(0.1)],
        }),
        _ => return Err(Error::UnknownName { kind: "background", name: name.to_string() }),
    })
}

pub const BACKGROUND_NAMES: [&str; 5] = ["minkowski4", "euclidean3", "euclidean4", "round_s3", "conformal_flat3"];
