//! Acceptance battery: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_FAILURES` are reported but do not fail the test
//! run; every other criterion must pass. Runs without the libtest harness so
//! the lines always reach stdout.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::Command;

use worldsheet::gaugeform::euler_characteristic;
use worldsheet_cli::config::{Format, RunConfig};
use worldsheet_cli::report::{IdentityReport, Report};
use worldsheet_cli::suite;

const EULER_SPHERE_TOL: f64 = 1e-6;
const EULER_TORUS_TOL: f64 = 1e-8;
const REQUIRED_ORDER: f64 = 3.5;
const REBUILD_REL_TOL: f64 = 1e-6;
const RATIO_SPREAD_TOL: f64 = 1e-6;
/// Residuals below this count as exact.
const EXACT_TOL: f64 = 1e-12;
const MIN_PAIRS: usize = 3;

/// Criteria the engine reports as FAIL at present.
const KNOWN_FAILURES: &[usize] = &[4, 7, 8];

const GEOMETRIES: &[&str] = &["sphere", "torus", "wavy_cylinder", "cylinder", "s3_equator"];

fn config(name: &str) -> RunConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.json"));
    RunConfig::load(&path).unwrap()
}

struct Runs(BTreeMap<&'static str, Report>);

impl Runs {
    fn get(&self, geometry: &str, id: &str) -> Option<&IdentityReport> {
        self.0[geometry].identities.iter().find(|r| r.id == id)
    }

    /// Required identity on a geometry; absence is a failure with a reason.
    fn check(&self, geometry: &str, id: &str, ok: impl Fn(&IdentityReport) -> bool) -> Result<(), String> {
        match self.get(geometry, id) {
            None => Err(format!("{id} not reported on {geometry}")),
            Some(r) if ok(r) => Ok(()),
            Some(r) => Err(format!("{id} on {geometry}: residuals {:?}, order {:?}", r.residuals, r.convergence_order)),
        }
    }
}

/// Residual at the coarser level under C·h⁴ there, and order ≥ 3.5 to the
/// finer level (or both at round-off).
fn fourth_order(r: &IdentityReport) -> bool {
    if r.residuals.len() < 2 {
        return false;
    }
    let n = r.residuals.len();
    let coarse_tol = r.tolerance * 16.0;
    let order_ok = r.below_floor || r.convergence_order.is_some_and(|p| p >= REQUIRED_ORDER);
    r.residuals[n - 2] < coarse_tol && r.residuals[n - 1] < r.tolerance && order_ok
}

fn all(checks: impl IntoIterator<Item = Result<(), String>>) -> Result<(), String> {
    let errs: Vec<String> = checks.into_iter().filter_map(Result::err).collect();
    if errs.is_empty() { Ok(()) } else { Err(errs.join("; ")) }
}

fn gauss_bonnet() -> Result<(), String> {
    let chi = |name: &str| {
        let cfg = config(name);
        let [n0, n1] = cfg.resolution;
        euler_characteristic(&cfg.embedding().unwrap(), n0, n1).unwrap().euler_number
    };
    let (s, t) = (chi("sphere"), chi("torus"));
    let mut errs = Vec::new();
    if (s - 2.0).abs() >= EULER_SPHERE_TOL {
        errs.push(format!("sphere χ = {s}"));
    }
    if t.abs() >= EULER_TORUS_TOL {
        errs.push(format!("torus χ = {t}"));
    }
    if errs.is_empty() { Ok(()) } else { Err(errs.join("; ")) }
}

fn adjusted_ricci(runs: &Runs) -> Result<(), String> {
    all(["sphere", "torus", "wavy_cylinder"].map(|g| runs.check(g, "eq08_adjusted_ricci", fourth_order)))
}

fn gauge_divergence(runs: &Runs) -> Result<(), String> {
    all(GEOMETRIES.iter().flat_map(|g| ["eq44_div_E", "eq46_curvature_rho"].map(|id| runs.check(g, id, fourth_order))))
}

fn rebuilds(runs: &Runs) -> Result<(), String> {
    let rebuilt = |r: &IdentityReport| {
        r.max_residual < REBUILD_REL_TOL || r.convergence_order.is_some_and(|p| p >= REQUIRED_ORDER)
    };
    let mut checks = Vec::new();
    for g in ["wavy_cylinder", "s3_equator"] {
        checks.push(runs.check(g, "eq28_rho_forms", fourth_order));
        for id in ["eq15_rebuild_sqrt_gamma", "eq27_rebuild_frame", "eq28_rebuild_curl", "eq29_rebuild_ricci", "eq29_rebuild_trace"] {
            checks.push(runs.check(g, id, rebuilt));
        }
    }
    all(checks)
}

fn self_adjoint(runs: &Runs) -> Result<(), String> {
    let mut checks = Vec::new();
    for g in GEOMETRIES {
        let cfg = config(g);
        if cfg.random_pairs + cfg.deformations.len() / 2 < MIN_PAIRS {
            checks.push(Err(format!("fewer than {MIN_PAIRS} pairs on {g}")));
        }
        checks.push(runs.check(g, "eq33_self_adjoint", fourth_order));
        checks.push(runs.check(g, "eq35_current_antisymmetric", |r| r.max_residual <= EXACT_TOL));
    }
    all(checks)
}

fn stokes(runs: &Runs) -> Result<(), String> {
    all([
        runs.check("wavy_cylinder", "eq38_stokes", fourth_order),
        runs.check("wavy_cylinder", "eq36_slice_independence", fourth_order),
        runs.check("cylinder", "eq36_slice_independence", |r| r.pass),
    ])
}

fn gauge_chain(runs: &Runs) -> Result<(), String> {
    let mut checks = Vec::new();
    for g in ["torus", "wavy_cylinder", "cylinder"] {
        checks.push(runs.check(g, "eq53_chi_invariance", |r| r.pass));
    }
    for g in GEOMETRIES {
        checks.push(runs.check(g, "eq55_re_invariant", fourth_order));
        checks.push(runs.check(g, "eq62_div_deltaE", fourth_order));
    }
    for g in ["torus", "wavy_cylinder", "cylinder"] {
        checks.push(runs.check(g, "eq63_compact_shift", fourth_order));
    }
    all(checks)
}

fn kernel_ratio(runs: &Runs) -> Result<(), String> {
    all(["wavy_cylinder", "torus"].map(|g| runs.check(g, "eq49_kernel_ratio", |r| r.max_residual < RATIO_SPREAD_TOL)))
}

fn codazzi(runs: &Runs) -> Result<(), String> {
    let ids = ["eq13_decomposition", "eq13_antisymmetric_theta", "eq14_contracted_bianchi", "eq14_projector_derivative"];
    let mut checks: Vec<_> = GEOMETRIES.iter().flat_map(|g| ids.map(|id| runs.check(g, id, fourth_order))).collect();
    checks.push(runs.check("s3_equator", "eq09_totally_geodesic", |r| r.max_residual <= EXACT_TOL));
    all(checks)
}

fn determinism_and_exit() -> Result<(), String> {
    let mut cfg = config("wavy_cylinder");
    cfg.refinement_levels = 1;
    cfg.resolution = [32, 32];
    cfg.slices.clear();
    let first = suite::run_verify(&cfg).unwrap().render(Format::Structured);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let second = pool.install(|| suite::run_verify(&cfg).unwrap().render(Format::Structured));
    let mut errs = Vec::new();
    if first != second {
        errs.push("reports differ between thread counts".to_string());
    }
    let status = |cfg: &str, extra: &[&str]| {
        let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(cfg);
        Command::new(env!("CARGO_BIN_EXE_worldsheet"))
            .args(["verify", "--config", path.to_str().unwrap()])
            .args(extra)
            .output()
            .unwrap()
            .status
            .code()
    };
    if status("plane.json", &[]) != Some(0) {
        errs.push("all-pass run did not exit 0".into());
    }
    if status("sphere.json", &["--resolution", "16x16", "--levels", "1"]) != Some(1) {
        errs.push("failing run did not exit 1".into());
    }
    if errs.is_empty() { Ok(()) } else { Err(errs.join("; ")) }
}

fn main() {
    let runs = Runs(GEOMETRIES.iter().map(|g| (*g, suite::run_verify(&config(g)).unwrap())).collect());
    let results: [(&str, Result<(), String>); 10] = [
        ("Gauss-Bonnet Euler numbers", gauss_bonnet()),
        ("adjusted Ricci identity at fourth order", adjusted_ricci(&runs)),
        ("gauge form divergence and curvature", gauge_divergence(&runs)),
        ("rho dual form and perturb-and-rebuild", rebuilds(&runs)),
        ("self-adjointness over seeded pairs", self_adjoint(&runs)),
        ("Stokes and slice independence", stokes(&runs)),
        ("gauge transformation chain", gauge_chain(&runs)),
        ("kernel ratio spread", kernel_ratio(&runs)),
        ("Codazzi decomposition and contracted Bianchi", codazzi(&runs)),
        ("determinism and exit status", determinism_and_exit()),
    ];
    let mut unexpected = Vec::new();
    for (i, (name, r)) in results.iter().enumerate() {
        let n = i + 1;
        match r {
            Ok(()) => println!("PASS {n:2} {name}"),
            Err(why) => println!("FAIL {n:2} {name}: {why}"),
        }
        if r.is_err() != KNOWN_FAILURES.contains(&n) {
            unexpected.push(n);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("criteria with unexpected outcome: {unexpected:?}");
        std::process::exit(1);
    }
}
