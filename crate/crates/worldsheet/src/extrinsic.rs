//! Second and third fundamental tensors and the identities relating them.

use crate::einsum::ein;
use crate::embedding::Surface;
use crate::grid::{Field, Slot};

use Slot::{Down, Up};

#[derive(Clone, Debug)]
pub struct Extrinsic {
    /// K_{λμ}^ν = n^σ_μ ∇̄_λ n^ν_σ.
    pub k: Field,
    /// K_{λμν}.
    pub k_low: Field,
    /// K_λ^σ_μ.
    pub k_mix: Field,
    /// K^{λμν}.
    pub k_up: Field,
    /// Curvature vector K^ρ = K_ν^{νρ}.
    pub kvec: Field,
    /// ∇̄_κ K_{λμ}^ν.
    pub dk: Field,
    /// Θ_{κλμ}^ν = n^ρ_λ n^σ_μ ⊥^ν_τ ∇̄_κ K_{ρσ}^τ.
    pub theta: Field,
}

impl Extrinsic {
    pub fn new(s: &Surface) -> Extrinsic {
        let dn = s.nabla(&s.n_mix);
        let k = ein("sm,lns->lmn", &[&s.n_mix, &dn], &[Down, Down, Up]);
        let k_low = ein("lmn,nr->lmr", &[&k, &s.g], &[Down, Down, Down]);
        let k_mix = ein("sa,kab->ksb", &[&s.g_inv, &k_low], &[Down, Up, Down]);
        let k_up = ein("la,asn->lsn", &[&s.g_inv, &k], &[Up, Down, Up]);
        let k_up = ein("lsn,sb->lbn", &[&k_up, &s.g_inv], &[Up, Up, Up]);
        let kvec = ein("lm,lmr->r", &[&s.g_inv, &k], &[Up]);
        let dk = s.nabla(&k);
        let t = ein("nt,krst->krsn", &[&s.perp, &dk], &[Down, Down, Down, Up]);
        let t = ein("sm,krsn->krmn", &[&s.n_mix, &t], &[Down, Down, Down, Up]);
        let theta = ein("rl,krmn->klmn", &[&s.n_mix, &t], &[Down, Down, Down, Up]);
        Extrinsic { k, k_low, k_mix, k_up, kvec, dk, theta }
    }

    /// Curvature vector with its index lowered.
    pub fn kvec_low(&self, s: &Surface) -> Field {
        crate::embedding::lower(&s.g, &self.kvec)
    }

    /// K_{λμ}^ν − K_{μλ}^ν.
    pub fn symmetry_residual(&self) -> Field {
        self.k.sub(&self.k.permute(&[1, 0, 2]))
    }

    /// Tangentiality of the first slot, orthogonality of the last, and
    /// n^μ_ρ K^ρ, stacked as one rank-3 residual plus the vector part.
    pub fn projection_residuals(&self, s: &Surface) -> (Field, Field, Field) {
        let first = ein("la,lmn->amn", &[&s.perp, &self.k], &[Down, Down, Up]);
        let last = ein("an,lmn->lma", &[&s.n_mix, &self.k], &[Down, Down, Up]);
        let kv = ein("mr,r->m", &[&s.n_mix, &self.kvec], &[Up]);
        (first, last, kv)
    }

    /// K_ν^{ρν} = g^{ρa} K_{νa}^ν, which must vanish.
    pub fn trace_residual(&self, s: &Surface) -> Field {
        ein("ra,nan->r", &[&s.g_inv, &self.k], &[Up])
    }

    /// ∇̄_λ n_{μν} − 2K_{λ(μν)}.
    pub fn projector_derivative_residual(&self, s: &Surface) -> Field {
        let dn = s.nabla(&s.n_low);
        dn.sub(&self.k_low).sub(&self.k_low.permute(&[0, 2, 1]))
    }

    /// First line of the Θ decomposition:
    /// ∇̄_κ K_{λμ}^ν − Θ − 2K_κ^σ_(λ K_μ)σ^ν + K_κ^ν_σ K_{λμ}^σ.
    pub fn decomposition_residual(&self) -> Field {
        let s3 = [Down, Down, Down, Up];
        let q1 = ein("ksl,msn->klmn", &[&self.k_mix, &self.k], &s3);
        let q2 = q1.permute(&[0, 2, 1, 3]);
        let q3 = ein("kns,lms->klmn", &[&self.k_mix, &self.k], &s3);
        self.dk.sub(&self.theta).sub(&q1).sub(&q2).add(&q3)
    }

    /// 2Θ_[κλ]μ^ν and the projected background curvature
    /// n_κ^ρ n_λ^σ n_μ^τ ⊥_γ^ν B_{ρσ}^γ_τ, returned separately.
    pub fn antisymmetric_theta(&self, s: &Surface) -> (Field, Field) {
        let lhs = self.theta.sub(&self.theta.permute(&[1, 0, 2, 3]));
        let s4 = [Down, Down, Down, Up];
        // B_{ρσ}^γ_τ = R^γ_{τρσ}
        let b = ein("ng,gtrs->rstn", &[&s.perp, &s.riemann], &s4);
        let b = ein("tm,rstn->rsmn", &[&s.n_mix, &b], &s4);
        let b = ein("sl,rsmn->rlmn", &[&s.n_mix, &b], &s4);
        let b = ein("rk,rlmn->klmn", &[&s.n_mix, &b], &s4);
        (lhs, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::surface;

    #[test]
    fn plane_is_totally_geodesic() {
        let s = surface("minkowski4", "plane", &[], 16);
        let e = Extrinsic::new(&s);
        assert!(e.k.max_abs() < 1e-14);
        assert!(e.theta.max_abs() < 1e-14);
    }

    #[test]
    fn cylinder_curvature_vector() {
        // a = 2: K^ρ = −x̂/a radially inward, g(K, K) = 1/a²
        let s = surface("minkowski4", "cylinder", &[("a", 2.0)], 64);
        let e = Extrinsic::new(&s);
        let kl = e.kvec_low(&s);
        for k in (0..s.chart.len()).step_by(29) {
            let (v, l) = (e.kvec.at(k), kl.at(k));
            let nrm: f64 = (0..4).map(|m| v[m] * l[m]).sum();
            assert!((nrm - 0.25).abs() < 1e-4, "{nrm}");
            let x = s.x.at(k);
            let radial = (v[1] * x[1] + v[2] * x[2]) / 2.0;
            assert!((radial + 0.5).abs() < 1e-4);
        }
    }

    #[test]
    fn algebraic_properties_on_torus() {
        // K comes from a stencil derivative of n, so symmetry, orthogonality
        // and the trace identity hold to truncation error; the tangential
        // first slot is exact by construction of ∇̄.
        let res: Vec<[f64; 5]> = [16, 32]
            .iter()
            .map(|&n| {
                let s = surface("euclidean3", "torus", &[], n);
                let e = Extrinsic::new(&s);
                let (a, b, c) = e.projection_residuals(&s);
                [e.symmetry_residual().max_abs(), a.max_abs(), b.max_abs(), c.max_abs(), e.trace_residual(&s).max_abs()]
            })
            .collect();
        assert!(res[1][1] < 1e-13);
        for q in [0, 2, 3, 4] {
            assert!(res[1][q] < res[0][q] / 12.0, "{q}: {res:?}");
        }
    }

    #[test]
    fn equatorial_s3_sphere_is_totally_geodesic() {
        let errs: Vec<f64> = [16, 32]
            .iter()
            .map(|&n| Extrinsic::new(&surface("round_s3", "s3_sphere", &[], n)).k.max_abs())
            .collect();
        assert!(errs[1] < 1e-12 || (errs[1] < 1e-4 && errs[1] < errs[0] / 10.0), "{errs:?}");
    }

    #[test]
    fn projector_derivative_relation() {
        let errs: Vec<f64> = [16, 32]
            .iter()
            .map(|&n| {
                let s = surface("minkowski4", "wavy_cylinder", &[], n);
                Extrinsic::new(&s).projector_derivative_residual(&s).max_abs()
            })
            .collect();
        assert!(errs[1] < errs[0] / 10.0, "{errs:?}");
    }
}
