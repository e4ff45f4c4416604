//! Worldsheet maps X(σ), their frames and projectors, and the tangential
//! covariant derivative ∇̄.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::background::{invert, Background, Signature};
use crate::error::{Error, Result};
use crate::grid::{Axis, Chart, Field, Slot};

use Slot::{Down, Up};

/// Polar extent of open θ charts; the poles themselves are never sampled.
pub const POLAR_CUT: f64 = 0.2;
/// Residual margin on open axes (fraction of the extent at each end).
pub const OPEN_MARGIN: f64 = 0.1;

/// One Fourier mode `c cos(k₀σ⁰ + k₁σ¹) + s sin(k₀σ⁰ + k₁σ¹)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub k: [f64; 2],
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

/// One ambient coordinate of a custom map: `offset + linear·σ + Σ modes`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FourierComponent {
    #[serde(default)]
    pub offset: f64,
    #[serde(default)]
    pub linear: [f64; 2],
    #[serde(default)]
    pub modes: Vec<Mode>,
}

impl FourierComponent {
    fn eval(&self, s: [f64; 2]) -> (f64, [f64; 2]) {
        let mut v = self.offset + self.linear[0] * s[0] + self.linear[1] * s[1];
        let mut d = self.linear;
        for m in &self.modes {
            let ph = m.k[0] * s[0] + m.k[1] * s[1];
            let (sn, cs) = ph.sin_cos();
            v += m.cos * cs + m.sin * sn;
            let dp = -m.cos * sn + m.sin * cs;
            d[0] += m.k[0] * dp;
            d[1] += m.k[1] * dp;
        }
        (v, d)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    /// X = (σ⁰, σ¹, 0, …).
    Plane,
    /// X = (τ, r cos σ, r sin σ, ε sin(wσ − τ)), r = a + ε cos(wσ − τ).
    /// The plain cylinder is ε = 0.
    WavyCylinder { a: f64, eps: f64, w: f64 },
    /// Polar chart about the z axis, or about the x axis when `tilted`:
    /// X = a(cos u, sin u cos v, sin u sin v).
    Sphere { a: f64, tilted: bool },
    Torus { c: f64, a: f64 },
    /// The 2-sphere χ = χ₀ in hyperspherical coordinates (χ, θ, φ).
    S3Sphere { chi0: f64 },
    /// Graph x² = amp · sin σ⁰ cos σ¹ over the (x⁰, x¹) plane.
    GraphPatch { amp: f64 },
    Fourier(Vec<FourierComponent>),
}

#[derive(Clone, Debug)]
pub struct Embedding {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    pub shape: Shape,
    pub background: Arc<dyn Background>,
}

pub const EMBEDDING_NAMES: [&str; 8] =
    ["plane", "cylinder", "wavy_cylinder", "sphere", "torus", "s3_sphere", "graph_patch", "fourier"];

fn positive(name: &str, key: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Config(format!("{name}: parameter {key} must be positive, got {v}")))
    }
}

/// Build a catalog embedding into `background`. `fourier` takes its map from
/// `components` (one entry per ambient coordinate).
pub fn catalog_embedding(
    name: &str,
    params: &BTreeMap<String, f64>,
    background: Arc<dyn Background>,
    components: Option<Vec<FourierComponent>>,
) -> Result<Embedding> {
    let p = |k: &str, d: f64| params.get(k).copied().unwrap_or(d);
    let n = background.dim();
    let bg = background.name().to_string();
    let need = |ok: bool, what: &str| {
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("embedding {name} needs {what}, background is {bg}")))
        }
    };
    let shape = match name {
        "plane" => Shape::Plane,
        "cylinder" | "wavy_cylinder" => {
            need(bg == "minkowski4", "minkowski4")?;
            let a = positive(name, "a", p("a", 1.0))?;
            let (eps, w) = if name == "cylinder" { (0.0, 1.0) } else { (p("eps", 0.1), p("w", 2.0)) };
            if w.fract() != 0.0 {
                return Err(Error::Config(format!("wavy_cylinder: w must be an integer, got {w}")));
            }
            if eps.abs() >= a {
                return Err(Error::Config("wavy_cylinder: |eps| must be below a".into()));
            }
            Shape::WavyCylinder { a, eps, w }
        }
        "sphere" => {
            need(n == 3 && background.signature() == Signature::Euclidean, "a flat 3-dimensional background")?;
            Shape::Sphere { a: positive(name, "a", p("a", 1.0))?, tilted: false }
        }
        "torus" => {
            need(n == 3 && background.signature() == Signature::Euclidean, "a flat 3-dimensional background")?;
            let c = positive(name, "c", p("c", 2.0))?;
            let a = positive(name, "a", p("a", 0.5))?;
            if a >= c {
                return Err(Error::Config("torus: a must be below c".into()));
            }
            Shape::Torus { c, a }
        }
        "s3_sphere" => {
            need(bg == "round_s3", "round_s3")?;
            let chi0 = p("chi0", PI / 2.0);
            if !(chi0 > 0.0 && chi0 < PI) {
                return Err(Error::Config(format!("s3_sphere: chi0 must lie in (0, π), got {chi0}")));
            }
            Shape::S3Sphere { chi0 }
        }
        "graph_patch" => {
            need(n == 3, "a 3-dimensional background")?;
            Shape::GraphPatch { amp: p("amp", 0.3) }
        }
        "fourier" => {
            let comps =
                components.ok_or_else(|| Error::Config("fourier embedding needs per-coordinate components".into()))?;
            if comps.len() != n {
                return Err(Error::Config(format!("fourier embedding has {} components, background dimension {n}", comps.len())));
            }
            Shape::Fourier(comps)
        }
        _ => return Err(Error::UnknownName { kind: "embedding", name: name.to_string() }),
    };
    Ok(Embedding { name: name.to_string(), params: params.clone(), shape, background })
}

impl Embedding {
    pub fn dim(&self) -> usize {
        self.background.dim()
    }

    /// Default chart at resolution (n0, n1).
    pub fn chart(&self, n0: usize, n1: usize) -> Result<Chart> {
        let full = |len| Axis::periodic(0.0, 2.0 * PI, len);
        match self.shape {
            Shape::Sphere { .. } | Shape::S3Sphere { .. } => {
                Chart::new(Axis::open(POLAR_CUT, PI - POLAR_CUT, n0), full(n1), OPEN_MARGIN)
            }
            _ => Chart::new(full(n0), full(n1), 0.0),
        }
    }

    /// Whether the surface is closed and Euclidean, so an Euler number
    /// is meaningful.
    pub fn closed_euclidean(&self) -> bool {
        matches!(self.shape, Shape::Sphere { .. } | Shape::Torus { .. })
    }

    /// Point X(σ) and the closed-form tangent legs ∂_A X.
    pub fn eval(&self, s0: f64, s1: f64, x: &mut [f64], i0: &mut [f64], i1: &mut [f64]) {
        x.fill(0.0);
        i0.fill(0.0);
        i1.fill(0.0);
        match &self.shape {
            Shape::Plane => {
                x[0] = s0;
                x[1] = s1;
                i0[0] = 1.0;
                i1[1] = 1.0;
            }
            &Shape::WavyCylinder { a, eps, w } => {
                let (sp, cp) = (w * s1 - s0).sin_cos();
                let (ss, cs) = s1.sin_cos();
                let r = a + eps * cp;
                let (rt, rs) = (eps * sp, -eps * w * sp);
                x.copy_from_slice(&[s0, r * cs, r * ss, eps * sp]);
                i0.copy_from_slice(&[1.0, rt * cs, rt * ss, -eps * cp]);
                i1.copy_from_slice(&[0.0, rs * cs - r * ss, rs * ss + r * cs, eps * w * cp]);
            }
            &Shape::Sphere { a, tilted } => {
                let (st, ct) = s0.sin_cos();
                let (sp, cp) = s1.sin_cos();
                if tilted {
                    x.copy_from_slice(&[a * ct, a * st * cp, a * st * sp]);
                    i0.copy_from_slice(&[-a * st, a * ct * cp, a * ct * sp]);
                    i1.copy_from_slice(&[0.0, -a * st * sp, a * st * cp]);
                } else {
                    x.copy_from_slice(&[a * st * cp, a * st * sp, a * ct]);
                    i0.copy_from_slice(&[a * ct * cp, a * ct * sp, -a * st]);
                    i1.copy_from_slice(&[-a * st * sp, a * st * cp, 0.0]);
                }
            }
            &Shape::Torus { c, a } => {
                let (st, ct) = s0.sin_cos();
                let (sp, cp) = s1.sin_cos();
                let r = c + a * ct;
                x.copy_from_slice(&[r * cp, r * sp, a * st]);
                i0.copy_from_slice(&[-a * st * cp, -a * st * sp, a * ct]);
                i1.copy_from_slice(&[-r * sp, r * cp, 0.0]);
            }
            &Shape::S3Sphere { chi0 } => {
                x.copy_from_slice(&[chi0, s0, s1]);
                i0[1] = 1.0;
                i1[2] = 1.0;
            }
            &Shape::GraphPatch { amp } => {
                let (su, cu) = s0.sin_cos();
                let (sv, cv) = s1.sin_cos();
                x.copy_from_slice(&[s0, s1, amp * su * cv]);
                i0.copy_from_slice(&[1.0, 0.0, amp * cu * cv]);
                i1.copy_from_slice(&[0.0, 1.0, -amp * su * sv]);
            }
            Shape::Fourier(comps) => {
                for (m, c) in comps.iter().enumerate() {
                    let (v, d) = c.eval([s0, s1]);
                    x[m] = v;
                    i0[m] = d[0];
                    i1[m] = d[1];
                }
            }
        }
    }

    /// Smooth seed vectors for the normal frame, or `None` to fall back to
    /// ambient coordinate axes.
    fn seeds(&self, s0: f64, s1: f64) -> Option<Vec<Vec<f64>>> {
        match self.shape {
            Shape::Plane => Some((2..self.dim()).map(|k| axis_vec(self.dim(), k)).collect()),
            Shape::WavyCylinder { .. } => Some(vec![vec![0.0, s1.cos(), s1.sin(), 0.0], axis_vec(4, 3)]),
            Shape::Sphere { tilted, .. } => {
                let (st, ct) = s0.sin_cos();
                let (sp, cp) = s1.sin_cos();
                Some(vec![if tilted { vec![ct, st * cp, st * sp] } else { vec![st * cp, st * sp, ct] }])
            }
            Shape::Torus { .. } => {
                let (st, ct) = s0.sin_cos();
                Some(vec![vec![ct * s1.cos(), ct * s1.sin(), st]])
            }
            Shape::S3Sphere { .. } => Some(vec![axis_vec(3, 0)]),
            Shape::GraphPatch { .. } => Some(vec![axis_vec(3, 2)]),
            Shape::Fourier(_) => None,
        }
    }
}

fn axis_vec(n: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[k] = 1.0;
    v
}

/// A sampled worldsheet: tangent legs, induced metric, projectors,
/// orthonormal frames and background data at every node.
#[derive(Clone, Debug)]
pub struct Surface {
    pub name: String,
    pub background: Arc<dyn Background>,
    pub chart: Chart,
    pub dim: usize,
    /// Point coordinates X^μ (stored in an Up slot; not a tensor).
    pub x: Field,
    /// Coordinate tangent legs i^μ_A.
    pub legs: [Field; 2],
    /// Normal-frame seed vectors, kept so a deformed copy uses the same ones.
    pub seeds: Vec<Field>,
    pub g: Field,
    pub g_inv: Field,
    pub christoffel: Field,
    /// R^a_{bcd}.
    pub riemann: Field,
    /// γ_AB, two-dimensional slots.
    pub gamma: Field,
    pub gamma_inv: Field,
    pub sqrt_gamma: Field,
    /// n^{μν}.
    pub n_up: Field,
    /// n^μ_ν.
    pub n_mix: Field,
    pub n_low: Field,
    /// ⊥^μ_ν.
    pub perp: Field,
    pub eta: [f64; 2],
    /// Orthonormal tangent frame e^μ_A and its lowered form e_{Aμ}.
    pub frame: [Field; 2],
    pub frame_low: [Field; 2],
    /// Orthonormal normal frame N^μ_r.
    pub normals: Vec<Field>,
    /// Γ^ν_{σρ} i^σ_B as an (Up, Down) field per leg.
    conn: [Field; 2],
    /// i_{Aλ} γ^{AB} per leg B.
    raise: [Field; 2],
}

impl Surface {
    /// Sample `emb` on `chart` and build all frames.
    pub fn build(emb: &Embedding, chart: Chart) -> Result<Surface> {
        let n = emb.dim();
        let mut x = Field::zeros(chart, n, &[Up]);
        let mut l0 = Field::zeros(chart, n, &[Up]);
        let mut l1 = Field::zeros(chart, n, &[Up]);
        for k in 0..chart.len() {
            let (s0, s1) = chart.coords(k);
            let r = k * n..(k + 1) * n;
            emb.eval(s0, s1, &mut x.data[r.clone()], &mut l0.data[r.clone()], &mut l1.data[r]);
        }
        let seeds = match emb.seeds(chart.coords(0).0, chart.coords(0).1) {
            Some(first) => (0..first.len())
                .map(|q| {
                    Field::from_fn(chart, n, &[Up], |k, o| {
                        let (s0, s1) = chart.coords(k);
                        o.copy_from_slice(&emb.seeds(s0, s1).unwrap()[q]);
                    })
                })
                .collect(),
            None => ambient_seeds(&*emb.background, &x, &l0, &l1)?,
        };
        Surface::assemble(&emb.name, emb.background.clone(), x, [l0, l1], seeds, None)
    }

    /// Build from sampled points, legs and normal seeds. `eta` fixes the
    /// tangent-frame signature; `None` reads it off the first node.
    pub fn assemble(
        name: &str,
        background: Arc<dyn Background>,
        x: Field,
        legs: [Field; 2],
        seeds: Vec<Field>,
        eta: Option<[f64; 2]>,
    ) -> Result<Surface> {
        let chart = x.chart;
        let n = background.dim();
        let bgf = |slots: &[Slot], f: &(dyn Fn(&[f64], &mut [f64]) + Sync)| {
            Field::from_fn(chart, n, slots, |k, o| f(x.at(k), o))
        };
        let g = bgf(&[Down, Down], &|p, o| background.metric(p, o));
        let g_inv = Field::from_fn(chart, n, &[Up, Up], |k, o| o.copy_from_slice(&invert(g.at(k), n)));
        let christoffel = bgf(&[Up, Down, Down], &|p, o| background.christoffel(p, o));
        let riemann = bgf(&[Up, Down, Down, Down], &|p, o| background.riemann(p, o));

        let dot = |k: usize, a: &[f64], b: &[f64]| -> f64 {
            let gk = g.at(k);
            (0..n).map(|m| (0..n).map(|q| a[m] * gk[m * n + q] * b[q]).sum::<f64>()).sum()
        };
        let gamma = Field::from_fn(chart, 2, &[Down, Down], |k, o| {
            let (a, b) = (legs[0].at(k), legs[1].at(k));
            o[0] = dot(k, a, a);
            o[1] = dot(k, a, b);
            o[2] = o[1];
            o[3] = dot(k, b, b);
        });
        for k in 0..chart.len() {
            let m = gamma.at(k);
            let det = m[0] * m[3] - m[1] * m[2];
            let scale = m.iter().map(|v| v * v).sum::<f64>();
            if !(det.abs() > 1e-12 * scale) {
                let (i0, i1) = chart.split(k);
                return Err(Error::Degenerate { i0, i1, det });
            }
        }
        let gamma_inv = Field::from_fn(chart, 2, &[Up, Up], |k, o| {
            let m = gamma.at(k);
            let det = m[0] * m[3] - m[1] * m[2];
            o.copy_from_slice(&[m[3] / det, -m[1] / det, -m[2] / det, m[0] / det]);
        });
        let sqrt_gamma = Field::scalar_fn(chart, n, |k| {
            let m = gamma.at(k);
            (m[0] * m[3] - m[1] * m[2]).abs().sqrt()
        });
        let n_up = Field::from_fn(chart, n, &[Up, Up], |k, o| {
            let gi = gamma_inv.at(k);
            let l = [legs[0].at(k), legs[1].at(k)];
            for m in 0..n {
                for q in 0..n {
                    o[m * n + q] = (0..2).map(|a| (0..2).map(|b| gi[a * 2 + b] * l[a][m] * l[b][q]).sum::<f64>()).sum();
                }
            }
        });
        let n_mix = matmul(&n_up, &g, [Up, Down]);
        let n_low = matmul(&g, &n_mix, [Down, Down]);
        let perp = Field::from_fn(chart, n, &[Up, Down], |k, o| {
            let nm = n_mix.at(k);
            for m in 0..n {
                for q in 0..n {
                    o[m * n + q] = if m == q { 1.0 } else { 0.0 } - nm[m * n + q];
                }
            }
        });

        let eta = eta.unwrap_or_else(|| {
            let l = legs[0].at(0);
            [dot(0, l, l).signum(), 1.0]
        });
        let mut e0 = Field::zeros(chart, n, &[Up]);
        let mut e1 = Field::zeros(chart, n, &[Up]);
        for k in 0..chart.len() {
            let a = legs[0].at(k);
            let na = dot(k, a, a).abs().sqrt();
            let u: Vec<f64> = a.iter().map(|v| v / na).collect();
            let b = legs[1].at(k);
            let c = eta[0] * dot(k, b, &u);
            let mut w: Vec<f64> = b.iter().zip(&u).map(|(bv, uv)| bv - c * uv).collect();
            let nw = dot(k, &w, &w).abs().sqrt();
            w.iter_mut().for_each(|v| *v /= nw);
            e0.data[k * n..(k + 1) * n].copy_from_slice(&u);
            e1.data[k * n..(k + 1) * n].copy_from_slice(&w);
        }
        let frame_low = [lower(&g, &e0), lower(&g, &e1)];

        let mut normals: Vec<Field> = Vec::new();
        for seed in &seeds {
            let mut v = Field::from_fn(chart, n, &[Up], |k, o| {
                let (p, s) = (perp.at(k), seed.at(k));
                for m in 0..n {
                    o[m] = (0..n).map(|q| p[m * n + q] * s[q]).sum();
                }
            });
            for k in 0..chart.len() {
                let r = k * n..(k + 1) * n;
                for prev in &normals {
                    let pv = prev.at(k);
                    let c = dot(k, &v.data[r.clone()], pv) / dot(k, pv, pv);
                    for (vm, pm) in v.data[r.clone()].iter_mut().zip(pv) {
                        *vm -= c * pm;
                    }
                }
                let nv = dot(k, &v.data[r.clone()], &v.data[r.clone()]).abs().sqrt();
                if !(nv > 1e-10) {
                    let (i0, i1) = chart.split(k);
                    return Err(Error::Degenerate { i0, i1, det: nv });
                }
                v.data[r].iter_mut().for_each(|c| *c /= nv);
            }
            normals.push(v);
        }

        let conn_of = |leg: &Field| {
            Field::from_fn(chart, n, &[Up, Down], |k, o| {
                let (gm, l) = (christoffel.at(k), leg.at(k));
                for m in 0..n {
                    for b in 0..n {
                        o[m * n + b] = (0..n).map(|a| gm[(m * n + a) * n + b] * l[a]).sum();
                    }
                }
            })
        };
        let conn = [conn_of(&legs[0]), conn_of(&legs[1])];
        let low = [lower(&g, &legs[0]), lower(&g, &legs[1])];
        let raise_of = |b: usize| {
            Field::from_fn(chart, n, &[Down], |k, o| {
                let gi = gamma_inv.at(k);
                for l in 0..n {
                    o[l] = (0..2).map(|a| low[a].at(k)[l] * gi[a * 2 + b]).sum();
                }
            })
        };
        let raise = [raise_of(0), raise_of(1)];

        Ok(Surface {
            name: name.to_string(),
            background,
            chart,
            dim: n,
            x,
            legs,
            seeds,
            g,
            g_inv,
            christoffel,
            riemann,
            gamma,
            gamma_inv,
            sqrt_gamma,
            n_up,
            n_mix,
            n_low,
            perp,
            eta,
            frame: [e0, e1],
            frame_low,
            normals,
            conn,
            raise,
        })
    }

    /// The same surface displaced to X + ε ξ, with legs i + ε ∂ξ from the
    /// grid stencils. Frames are rebuilt from the same seeds and signature.
    pub fn displaced(&self, xi: &Field, eps: f64) -> Result<Surface> {
        let x = self.x.add(&xi.scale(eps));
        let legs = [self.legs[0].add(&xi.partial(0).scale(eps)), self.legs[1].add(&xi.partial(1).scale(eps))];
        Surface::assemble(&self.name, self.background.clone(), x, legs, self.seeds.clone(), Some(self.eta))
    }

    /// D_A f = ∂_A f + Γ corrections per slot, along chart axis A.
    pub fn directional(&self, f: &Field, axis: usize) -> Field {
        assert_eq!(f.dim, self.dim, "field dimension differs from the background");
        let n = self.dim;
        let r = f.rank();
        let nc = f.ncomp();
        let part = f.partial(axis);
        let conn = &self.conn[axis];
        let strides: Vec<usize> = (0..r).map(|k| n.pow((r - 1 - k) as u32)).collect();
        Field::from_fn(f.chart, n, &f.slots, |k, o| {
            let (src, gi, p) = (f.at(k), conn.at(k), part.at(k));
            o.copy_from_slice(p);
            for (c, v) in o.iter_mut().enumerate() {
                for (s, &st) in strides.iter().enumerate() {
                    let d = (c / st) % n;
                    let base = c - d * st;
                    match f.slots[s] {
                        Up => {
                            for z in 0..n {
                                *v += gi[d * n + z] * src[base + z * st];
                            }
                        }
                        Down => {
                            for z in 0..n {
                                *v -= gi[z * n + d] * src[base + z * st];
                            }
                        }
                    }
                }
            }
            debug_assert_eq!(o.len(), nc);
        })
    }

    /// ∇̄_λ f = i_{Aλ} γ^{AB} D_B f; the new lowered slot comes first.
    pub fn nabla(&self, f: &Field) -> Field {
        let d = [self.directional(f, 0), self.directional(f, 1)];
        let n = self.dim;
        let nc = f.ncomp();
        let mut slots = vec![Down];
        slots.extend_from_slice(&f.slots);
        Field::from_fn(f.chart, n, &slots, |k, o| {
            let (w0, w1) = (self.raise[0].at(k), self.raise[1].at(k));
            let (d0, d1) = (d[0].at(k), d[1].at(k));
            for l in 0..n {
                for c in 0..nc {
                    o[l * nc + c] = w0[l] * d0[c] + w1[l] * d1[c];
                }
            }
        })
    }

    /// Pull back the lowered background slots of a fully covariant rank-1
    /// or rank-2 field to the worldsheet: v_A = i^μ_A v_μ.
    pub fn pullback(&self, f: &Field) -> Field {
        let n = self.dim;
        match f.rank() {
            1 => Field::from_fn(self.chart, 2, &[Down], |k, o| {
                for a in 0..2 {
                    o[a] = (0..n).map(|m| self.legs[a].at(k)[m] * f.at(k)[m]).sum();
                }
            }),
            2 => Field::from_fn(self.chart, 2, &[Down, Down], |k, o| {
                let v = f.at(k);
                for a in 0..2 {
                    for b in 0..2 {
                        let (la, lb) = (self.legs[a].at(k), self.legs[b].at(k));
                        o[a * 2 + b] = (0..n).map(|m| (0..n).map(|q| la[m] * lb[q] * v[m * n + q]).sum::<f64>()).sum();
                    }
                }
            }),
            r => panic!("pullback of rank {r} not supported"),
        }
    }
}

/// Rank the ambient axes by the norm of their normal projection at the first
/// node and keep the n − 2 strongest, in increasing index order.
fn ambient_seeds(bg: &dyn Background, x: &Field, l0: &Field, l1: &Field) -> Result<Vec<Field>> {
    let n = bg.dim();
    let mut g = vec![0.0; n * n];
    bg.metric(x.at(0), &mut g);
    let dot = |a: &[f64], b: &[f64]| -> f64 {
        (0..n).map(|m| (0..n).map(|q| a[m] * g[m * n + q] * b[q]).sum::<f64>()).sum()
    };
    let (a, b) = (l0.at(0), l1.at(0));
    let gm = [dot(a, a), dot(a, b), dot(b, b)];
    let det = gm[0] * gm[2] - gm[1] * gm[1];
    if det.abs() < 1e-14 {
        return Err(Error::Degenerate { i0: 0, i1: 0, det });
    }
    let mut score: Vec<(usize, f64)> = (0..n)
        .map(|k| {
            let e = axis_vec(n, k);
            let (pa, pb) = (dot(&e, a), dot(&e, b));
            // |⊥e|² = e·e − γ^{AB}(e·i_A)(e·i_B)
            let tang = (gm[2] * pa * pa - 2.0 * gm[1] * pa * pb + gm[0] * pb * pb) / det;
            (k, dot(&e, &e) - tang)
        })
        .collect();
    score.sort_by(|p, q| q.1.partial_cmp(&p.1).unwrap().then(p.0.cmp(&q.0)));
    let mut keep: Vec<usize> = score[..n - 2].iter().map(|p| p.0).collect();
    keep.sort_unstable();
    Ok(keep.into_iter().map(|k| Field::from_fn(x.chart, n, &[Up], |_, o| o[k] = 1.0)).collect())
}

fn matmul(a: &Field, b: &Field, slots: [Slot; 2]) -> Field {
    let n = a.dim;
    Field::from_fn(a.chart, n, &slots, |k, o| {
        let (p, q) = (a.at(k), b.at(k));
        for i in 0..n {
            for j in 0..n {
                o[i * n + j] = (0..n).map(|z| p[i * n + z] * q[z * n + j]).sum();
            }
        }
    })
}

/// v_μ = g_{μν} v^ν.
pub fn lower(g: &Field, v: &Field) -> Field {
    let n = g.dim;
    Field::from_fn(g.chart, n, &[Down], |k, o| {
        let (gk, vk) = (g.at(k), v.at(k));
        for m in 0..n {
            o[m] = (0..n).map(|q| gk[m * n + q] * vk[q]).sum();
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::catalog_background;
    use crate::testutil::surface;


    fn trace(f: &Field, k: usize) -> f64 {
        let n = f.dim;
        (0..n).map(|m| f.at(k)[m * n + m]).sum()
    }

    #[test]
    fn plane_projectors() {
        let s = surface("minkowski4", "plane", &[], 16);
        assert_eq!(&s.gamma.at(3), &[-1.0, 0.0, 0.0, 1.0]);
        let nm = s.n_mix.at(7);
        for m in 0..4 {
            for q in 0..4 {
                let want = if m == q && m < 2 { 1.0 } else { 0.0 };
                assert!((nm[m * 4 + q] - want).abs() < 1e-15);
            }
        }
        assert_eq!(s.eta, [-1.0, 1.0]);
    }

    #[test]
    fn cylinder_area_element_and_ranks() {
        let s = surface("minkowski4", "cylinder", &[("a", 1.0)], 16);
        for k in 0..s.chart.len() {
            assert!((s.sqrt_gamma.value(k) - 1.0).abs() < 1e-14);
            assert!((trace(&s.n_mix, k) - 2.0).abs() < 1e-13);
            assert!((trace(&s.perp, k) - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn sphere_frames_are_orthonormal_and_complete() {
        let s = surface("euclidean3", "sphere", &[("a", 1.0)], 16);
        for k in 0..s.chart.len() {
            assert!((trace(&s.n_mix, k) - 2.0).abs() < 1e-13);
            assert!((trace(&s.perp, k) - 1.0).abs() < 1e-13);
            let nm = s.n_mix.at(k);
            for m in 0..3 {
                for q in 0..3 {
                    let nn: f64 = (0..3).map(|z| nm[m * 3 + z] * nm[z * 3 + q]).sum();
                    assert!((nn - nm[m * 3 + q]).abs() < 1e-13);
                }
            }
            let e = [s.frame[0].at(k), s.frame[1].at(k)];
            let el = [s.frame_low[0].at(k), s.frame_low[1].at(k)];
            let nl = lower(&s.g, &s.normals[0]);
            for a in 0..2 {
                for b in 0..2 {
                    let v: f64 = (0..3).map(|m| e[a][m] * el[b][m]).sum();
                    assert!((v - if a == b { 1.0 } else { 0.0 }).abs() < 1e-13);
                }
                let v: f64 = (0..3).map(|m| e[a][m] * nl.at(k)[m]).sum();
                assert!(v.abs() < 1e-13);
            }
        }
    }

    #[test]
    fn degenerate_map_names_the_node() {
        let b = catalog_background("euclidean3", &|_| None).unwrap();
        let comps = vec![
            FourierComponent { linear: [1.0, 0.0], ..Default::default() },
            FourierComponent { linear: [1.0, 0.0], ..Default::default() },
            FourierComponent::default(),
        ];
        let e = catalog_embedding("fourier", &BTreeMap::new(), b, Some(comps)).unwrap();
        match Surface::build(&e, e.chart(8, 8).unwrap()) {
            Err(Error::Degenerate { i0: 0, i1: 0, .. }) => {}
            other => panic!("expected degeneracy, got {other:?}"),
        }
    }

    #[test]
    fn catalog_rejects_bad_input() {
        let b = catalog_background("euclidean3", &|_| None).unwrap();
        let none = BTreeMap::new();
        assert!(catalog_embedding("klein_bottle", &none, b.clone(), None).is_err());
        assert!(catalog_embedding("wavy_cylinder", &none, b.clone(), None).is_err());
        let neg: BTreeMap<String, f64> = [("a".to_string(), -1.0)].into();
        assert!(catalog_embedding("sphere", &neg, b, None).is_err());
    }

    #[test]
    fn metricity_along_the_sheet() {
        for (bg, emb) in [("round_s3", "s3_sphere"), ("conformal_flat3", "graph_patch")] {
            let errs: Vec<f64> = [16, 32]
                .iter()
                .map(|&n| {
                    let s = surface(bg, emb, &[("chi0", 1.1)], n);
                    s.nabla(&s.g).max_abs()
                })
                .collect();
            assert!(errs[1] < errs[0] / 12.0, "{emb}: {errs:?}");
        }
    }

    #[test]
    fn flat_directional_is_partial() {
        let s = surface("euclidean3", "torus", &[], 16);
        let d = s.directional(&s.normals[0], 1);
        let p = s.normals[0].partial(1);
        assert_eq!(d.data, p.data);
    }

    #[test]
    fn s3_directional_matches_hand_christoffel() {
        // constant v = ∂_φ: D_θ v^φ = Γ^φ_{θφ} = cot θ, D_θ v^χ = 0
        let s = surface("round_s3", "s3_sphere", &[("chi0", 1.0)], 16);
        let v = Field::from_fn(s.chart, 3, &[Up], |_, o| o[2] = 1.0);
        let d = s.directional(&v, 0);
        let k = s.chart.node(5, 3);
        let th = s.chart.coords(k).0;
        assert!((d.at(k)[2] - th.cos() / th.sin()).abs() < 1e-14);
        assert!(d.at(k)[0].abs() < 1e-15);
    }

    #[test]
    fn nabla_is_tangential() {
        let s = surface("minkowski4", "wavy_cylinder", &[], 16);
        let dn = s.nabla(&s.n_mix);
        let n = 4;
        for k in 0..s.chart.len() {
            let p = s.perp.at(k);
            for a in 0..n {
                for c in 0..16 {
                    let v: f64 = (0..n).map(|l| p[l * n + a] * dn.at(k)[l * 16 + c]).sum();
                    assert!(v.abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn cylinder_scalar_gradient() {
        // f = sin σ¹ on a = 2: ∇̄f·∇̄f = cos² σ¹ / a²
        let s = surface("minkowski4", "cylinder", &[("a", 2.0)], 64);
        let f = Field::scalar_fn(s.chart, 4, |k| s.chart.coords(k).1.sin());
        let df = s.nabla(&f);
        for k in (0..s.chart.len()).step_by(37) {
            let gi = s.g_inv.at(k);
            let d = df.at(k);
            let nrm: f64 = (0..4).map(|m| (0..4).map(|q| gi[m * 4 + q] * d[m] * d[q]).sum::<f64>()).sum();
            let want = s.chart.coords(k).1.cos().powi(2) / 4.0;
            assert!((nrm - want).abs() < 1e-5, "{nrm} {want}");
        }
    }
}
