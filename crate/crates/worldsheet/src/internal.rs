//! Internal frame connection ρ, the internal curvature tensor and its
//! contractions, and the hyper-Cauchy tensor.

use crate::einsum::ein;
use crate::embedding::Surface;
use crate::extrinsic::Extrinsic;
use crate::grid::{Field, Slot};

use Slot::{Down, Up};

/// p for worldsheets.
pub const P: f64 = 2.0;

#[derive(Clone, Debug)]
pub struct Internal {
    /// ρ_λ^μ_ν = Σ_A η_A n^μ_α (∇̄_λ e^α_A) e_{Aν}; depends on the frame gauge.
    pub rho: Field,
    /// R_{κλ}^μ_ν.
    pub riemann: Field,
    /// R_{μν} = R_{μσν}^σ.
    pub ricci: Field,
    /// R = n^{μν} R_{μν}.
    pub scalar: Field,
    /// R_{μν} − R n_{μν} / p.
    pub adjusted: Field,
}

impl Internal {
    pub fn new(s: &Surface) -> Internal {
        let rho = connection(s);
        let drho = s.nabla(&rho);
        let s4 = [Down, Down, Up, Down];
        let t = ein("ms,kpst->kpmt", &[&s.n_mix, &drho], &s4);
        let t = ein("tn,kpmt->kpmn", &[&s.n_mix, &t], &s4);
        let t1 = ein("pl,kpmn->klmn", &[&s.n_mix, &t], &s4);
        let q = ein("kmp,lpn->klmn", &[&rho, &rho], &s4);
        let riemann = t1.sub(&t1.permute(&[1, 0, 2, 3])).add(&q).sub(&q.permute(&[1, 0, 2, 3]));
        let r = ein("msab,bs->ma", &[&riemann, &s.g_inv], &[Down, Up]);
        let ricci = ein("ma,an->mn", &[&r, &s.g], &[Down, Down]);
        let scalar = ein("mn,mn->", &[&s.n_up, &ricci], &[]);
        let adjusted = Field::from_fn(s.chart, s.dim, &[Down, Down], |k, o| {
            let (rc, nl, r) = (ricci.at(k), s.n_low.at(k), scalar.value(k));
            for (c, v) in o.iter_mut().enumerate() {
                *v = rc[c] - r * nl[c] / P;
            }
        });
        Internal { rho, riemann, ricci, scalar, adjusted }
    }

    /// ρ_{λμν} + ρ_{λνμ}, which must vanish.
    pub fn antisymmetry_residual(&self, s: &Surface) -> Field {
        let low = ein("lmn,ma->lan", &[&self.rho, &s.g], &[Down, Down, Down]);
        low.add(&low.permute(&[0, 2, 1]))
    }

    /// ⊥^σ_β R_{σμ}.
    pub fn ricci_orthogonality(&self, s: &Surface) -> Field {
        ein("sb,sm->bm", &[&s.perp, &self.ricci], &[Down, Down])
    }

    /// 2R^{μν} − R n^{μν}.
    pub fn einstein_like(&self, s: &Surface) -> Field {
        let up = ein("ma,ab->mb", &[&s.g_inv, &self.ricci], &[Up, Down]);
        let up = ein("mb,bn->mn", &[&up, &s.g_inv], &[Up, Up]);
        Field::from_fn(s.chart, s.dim, &[Up, Up], |k, o| {
            let (u, nu, r) = (up.at(k), s.n_up.at(k), self.scalar.value(k));
            for (c, v) in o.iter_mut().enumerate() {
                *v = 2.0 * u[c] - r * nu[c];
            }
        })
    }

    /// Contracted Bianchi identity:
    /// ∇̄_μ(2R^{μν} − R n^{μν}) − (2R^{σρ} − R n^{σρ}) K_{σρ}^ν.
    pub fn contracted_bianchi(&self, s: &Surface, ex: &Extrinsic) -> Field {
        let gm = self.einstein_like(s);
        let div = ein("mmn->n", &[&s.nabla(&gm)], &[Up]);
        div.sub(&ein("sr,srn->n", &[&gm, &ex.k], &[Up]))
    }

    /// Worldsheet equation of motion σ₁(2R^{σρ} − R n^{σρ}) K_{σρν}.
    pub fn equation_of_motion(&self, s: &Surface, ex: &Extrinsic, sigma1: f64) -> Field {
        ein("sr,srn->n", &[&self.einstein_like(s), &ex.k_low], &[Down]).scale(sigma1)
    }
}

/// Tangential rotation coefficients of the orthonormal tangent frame.
pub fn connection(s: &Surface) -> Field {
    let mut rho = Field::zeros(s.chart, s.dim, &[Down, Up, Down]);
    for a in 0..2 {
        let de = s.nabla(&s.frame[a]);
        let term = ein("ma,la,n->lmn", &[&s.n_mix, &de, &s.frame_low[a]], &[Down, Up, Down]);
        rho = rho.add(&term.scale(s.eta[a]));
    }
    rho
}

/// C̄^{μνσρ} = ½(n^{σμ}n^{νρ} + n^{σν}n^{μρ}) − ½ n^{μν}n^{σρ}.
pub fn hyper_cauchy(s: &Surface) -> Field {
    let n = s.dim;
    Field::from_fn(s.chart, n, &[Up, Up, Up, Up], |k, o| {
        let nu = s.n_up.at(k);
        let at = |a: usize, b: usize| nu[a * n + b];
        for m in 0..n {
            for v in 0..n {
                for sg in 0..n {
                    for r in 0..n {
                        o[((m * n + v) * n + sg) * n + r] =
                            0.5 * (at(sg, m) * at(v, r) + at(sg, v) * at(m, r)) - 0.5 * at(m, v) * at(sg, r);
                    }
                }
            }
        }
    })
}
