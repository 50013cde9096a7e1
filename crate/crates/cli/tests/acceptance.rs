//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit status if
//! any criterion fails. Run with `cargo test -p calabi-cli --test acceptance`.

use std::f64::consts::TAU;
use std::panic::{self, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::sync::OnceLock;
use std::time::Instant;

use calabi_core::flow::{self, FlowEvent};
use calabi_core::geometry::{self, CurvatureForm, HessianComparison};
use calabi_core::jet::TrigPotential;
use calabi_core::legendre::{self, KahlerPotential};
use calabi_core::linalg::{self, Mat};
use calabi_core::potential::CosineMode;
use calabi_core::{FlowConfig, FlowState, GridSpec, PeriodicField, SymplecticPotential, Termination};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn biharmonic_rate() -> f64 {
    TAU.powi(4)
}

fn cos_1d(points: usize, eps: f64) -> SymplecticPotential {
    let spec = GridSpec::unit(1, points).unwrap();
    let psi = PeriodicField::sample(spec, |x| eps * (TAU * x[0]).cos()).unwrap();
    SymplecticPotential::new(1.0, psi).unwrap()
}

fn product_2d(points: usize, eps: f64) -> SymplecticPotential {
    let spec = GridSpec::unit(2, points).unwrap();
    let psi = PeriodicField::sample(spec, |x| eps * ((TAU * x[0]).cos() + (TAU * x[1]).cos())).unwrap();
    SymplecticPotential::new(1.0, psi).unwrap()
}

// ---- 1 ----

fn flat_fixed_point() -> Verdict {
    let spec = GridSpec::unit(2, 64).unwrap();
    let mut state = FlowState {
        t: 0.0,
        u: SymplecticPotential::flat(spec),
    };
    let dt = flow::stable_dt(&state.u, FlowConfig::default().sigma);
    let start = Instant::now();
    for _ in 0..10_000 {
        state = flow::step(&state, dt).unwrap();
    }
    let secs = start.elapsed().as_secs_f64();
    let sup = state.u.psi().sup_norm();
    let ca = geometry::energies(&state.u).ca;
    verdict(
        sup < 1e-12 && ca < 1e-24 && secs < 30.0,
        format!("10^4 steps at n=2, N=64: sup|psi| = {sup:e}, Ca = {ca:e}, {secs:.1} s"),
    )
}

// ---- 2 ----

/// `S = -(1/g)''` with `g = u'' = 1 - eps w^2 cos(w x)`, differentiated by hand.
fn exact_s(x: f64, eps: f64) -> f64 {
    let w = TAU;
    let g = 1.0 - eps * w * w * (w * x).cos();
    let g1 = eps * w.powi(3) * (w * x).sin();
    let g2 = eps * w.powi(4) * (w * x).cos();
    g2 / (g * g) - 2.0 * g1 * g1 / g.powi(3)
}

fn exact_reduction_1d() -> Verdict {
    let eps = 1e-4;
    let err = |points: usize, form: CurvatureForm| {
        let u = cos_1d(points, eps);
        let spec = *u.spec();
        let exact = PeriodicField::sample(spec, |x| exact_s(x[0], eps)).unwrap();
        let s = geometry::scalar_curvature(&u, form);
        s.zip_map(&exact, |a, b| a - b).sup_norm() / exact.sup_norm()
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for form in [CurvatureForm::Direct, CurvatureForm::Cofactor] {
        let (e64, e128, e256) = (err(64, form), err(128, form), err(256, form));
        let ratio = e64 / e128;
        pass &= e128 < 1e-4 && ratio >= 12.0;
        parts.push(format!(
            "{form:?}: err(128) = {e128:.2e}, ratio 64->128 = {ratio:.1} (128->256: {:.1})",
            e128 / e256
        ));
    }
    verdict(pass, parts.join("; "))
}

// ---- 3 ----

fn linearized_decay_rate() -> Verdict {
    let start = Instant::now();
    let u = cos_1d(64, 1e-4);
    let cfg = FlowConfig {
        t_end: 1e-3,
        sigma: 0.08,
        diagnostics_every: 500,
        record_every: 1_000_000,
        ..FlowConfig::default()
    };
    let mut modes = vec![(0.0, u.psi().fourier_mode(&[1]).unwrap().norm())];
    let mut count = 0usize;
    let trace = flow::run_with(&u, &cfg, |ev| {
        if let FlowEvent::Accepted(s) = ev {
            count += 1;
            if count.is_multiple_of(500) {
                modes.push((s.t, s.u.psi().fourier_mode(&[1]).unwrap().norm()));
            }
        }
    })
    .unwrap();
    let mode_fit = flow::fit_log_linear(&modes).unwrap();
    let ca_fit = flow::fit_decay_rate(&trace, 0.5).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let e_mode = mode_fit.rate / biharmonic_rate() - 1.0;
    let e_ca = ca_fit.rate / (2.0 * biharmonic_rate()) - 1.0;
    verdict(
        e_mode.abs() < 1e-2 && e_ca.abs() < 1e-2 && secs < 60.0,
        format!(
            "mode rate {:.3} (rel err {e_mode:.1e}), Ca rate {:.3} (rel err {e_ca:.1e}), {secs:.1} s",
            mode_fit.rate, ca_fit.rate
        ),
    )
}

// ---- 4, 6, 11: the seeded n = 2 family ----

const FAMILY_SEEDS: u64 = 10;
const FAMILY_POINTS: usize = 16;
const FAMILY_AMPLITUDE: f64 = 0.006;

struct FamilyRun {
    seed: u64,
    eig_min0: f64,
    records: usize,
    monotone_violations: usize,
    psi_mean_drift: f64,
    worst_pairing: f64,
    termination: Termination,
    /// Smallest `Ca / Ca(0)` seen on a record strictly before `t_end`.
    best_ratio: f64,
    fit: Result<flow::DecayFit, String>,
    m_ratio: f64,
}

fn family_potential(seed: u64, points: usize) -> SymplecticPotential {
    SymplecticPotential::random_bandlimited(GridSpec::unit(2, points).unwrap(), 3, FAMILY_AMPLITUDE, seed).unwrap()
}

fn family_run(seed: u64) -> FamilyRun {
    let u = family_potential(seed, FAMILY_POINTS);
    let ca0 = geometry::energies(&u).ca;
    let cfg = FlowConfig {
        t_end: 0.05,
        sigma: 0.03,
        ca_stop: Some(1e-11 * ca0),
        record_every: 1_000_000,
        seed,
        ..FlowConfig::default()
    };
    let mut worst_pairing = f64::NEG_INFINITY;
    let trace = flow::run_with(&u, &cfg, |ev| {
        if let FlowEvent::Accepted(s) = ev {
            worst_pairing = worst_pairing.max(geometry::trace_pairing(&s.u).max());
        }
    })
    .unwrap();
    let slack = |v: f64| 1e-10 * v.abs() + 1e-14;
    let monotone_violations = trace
        .records
        .windows(2)
        .filter(|w| {
            let (a, b) = (&w[0], &w[1]);
            !(b.t > a.t && b.ca <= a.ca + slack(a.ca) && b.ma <= a.ma + slack(a.ma) && b.l2 <= a.l2 + slack(a.l2))
        })
        .count();
    let m0 = trace.records[0].psi_mean;
    let psi_mean_drift = trace.records.iter().map(|r| (r.psi_mean - m0).abs()).fold(0.0, f64::max);
    let best_ratio = trace
        .records
        .iter()
        .filter(|r| r.t < cfg.t_end)
        .map(|r| r.ca / ca0)
        .fold(f64::INFINITY, f64::min);
    let m_init = trace.records[0].m_estimate;
    let m_ratio = trace.records.iter().map(|r| r.m_estimate).fold(0.0, f64::max) / m_init;
    FamilyRun {
        seed,
        eig_min0: u.hessian_data().eig_min.min(),
        records: trace.records.len(),
        monotone_violations,
        psi_mean_drift,
        worst_pairing,
        termination: trace.termination,
        best_ratio,
        fit: flow::fit_decay_rate(&trace, 0.5).map_err(|e| e.to_string()),
        m_ratio,
    }
}

fn family() -> &'static [FamilyRun] {
    static RUNS: OnceLock<Vec<FamilyRun>> = OnceLock::new();
    RUNS.get_or_init(|| (0..FAMILY_SEEDS).map(family_run).collect())
}

fn monotonicity_suite() -> Verdict {
    let runs = family();
    let violations: usize = runs.iter().map(|r| r.monotone_violations).sum();
    let drift = runs.iter().map(|r| r.psi_mean_drift).fold(0.0, f64::max);
    let eig = runs.iter().map(|r| r.eig_min0).fold(f64::INFINITY, f64::min);
    let records: usize = runs.iter().map(|r| r.records).sum();
    verdict(
        violations == 0 && drift < 1e-10 && eig >= 0.2,
        format!(
            "{} runs, {records} records, {violations} monotonicity violations, psi_mean drift {drift:.1e}, min eig_min(0) {eig:.3}",
            runs.len()
        ),
    )
}

fn trace_inequality() -> Verdict {
    let worst = family().iter().map(|r| r.worst_pairing).fold(f64::NEG_INFINITY, f64::max);
    verdict(worst <= 1e-12, format!("max trace pairing over all accepted states {worst:.3e}"))
}

fn exponential_convergence() -> Verdict {
    let mut pass = true;
    let mut worst_ratio: f64 = 0.0;
    let mut min_rate = f64::INFINITY;
    let mut min_r2 = f64::INFINITY;
    let mut max_m: f64 = 0.0;
    let mut notes = Vec::new();
    for r in family() {
        worst_ratio = worst_ratio.max(r.best_ratio);
        max_m = max_m.max(r.m_ratio);
        let ok_ratio = r.best_ratio < 1e-10 && r.termination == Termination::CaStop;
        match &r.fit {
            Ok(f) => {
                min_rate = min_rate.min(f.rate);
                min_r2 = min_r2.min(f.r_squared);
                if !(ok_ratio && f.rate > 0.0 && f.r_squared > 0.99 && r.m_ratio <= 1.5) {
                    pass = false;
                    notes.push(format!("seed {} fails", r.seed));
                }
            }
            Err(e) => {
                pass = false;
                notes.push(format!("seed {}: {e}", r.seed));
            }
        }
    }
    let mut detail = format!(
        "worst final Ca/Ca(0) {worst_ratio:.1e}, min tail rate {min_rate:.1}, min r^2 {min_r2:.6}, max M/M(0) {max_m:.4}"
    );
    if !notes.is_empty() {
        detail.push_str(&format!(" [{}]", notes.join(", ")));
    }
    verdict(pass, detail)
}

// ---- 5, 7 ----

struct IdentityCase {
    label: &'static str,
    u: SymplecticPotential,
    sigma: f64,
    steps: usize,
    every: usize,
}

fn identity_cases() -> Vec<IdentityCase> {
    vec![
        IdentityCase {
            label: "n=1 N=64 linear",
            u: cos_1d(64, 1e-4),
            sigma: 0.08,
            steps: 400,
            every: 20,
        },
        IdentityCase {
            label: "n=2 N=32 product",
            u: product_2d(32, 1e-4),
            sigma: 0.03,
            steps: 60,
            every: 10,
        },
        IdentityCase {
            label: "n=2 N=16 band-limited",
            u: family_potential(0, 16),
            sigma: 0.003,
            steps: 6,
            every: 1,
        },
    ]
}

fn dissipation_reports() -> &'static [(String, flow::DissipationReport)] {
    static REPORTS: OnceLock<Vec<(String, flow::DissipationReport)>> = OnceLock::new();
    REPORTS.get_or_init(|| {
        identity_cases()
            .into_iter()
            .map(|c| {
                let cfg = FlowConfig {
                    t_end: c.steps as f64 * flow::stable_dt(&c.u, c.sigma),
                    sigma: c.sigma,
                    record_every: c.every,
                    diagnostics_every: c.every,
                    ..FlowConfig::default()
                };
                let trace = flow::run(&c.u, &cfg).unwrap();
                (
                    format!("{} (sigma {})", c.label, c.sigma),
                    flow::dissipation_checks(&trace).unwrap(),
                )
            })
            .collect()
    })
}

fn dissipation_identities() -> Verdict {
    let mut pass = true;
    let parts: Vec<String> = dissipation_reports()
        .iter()
        .map(|(label, r)| {
            pass &= r.ca_rel_err < 1e-3 && r.ma_rel_err < 1e-3;
            format!("{label}: Ca {:.1e}, Ma {:.1e}", r.ca_rel_err, r.ma_rel_err)
        })
        .collect();
    verdict(pass, parts.join("; "))
}

fn rotation(theta: f64) -> Mat {
    let mut r = linalg::ZERO;
    r[0] = [theta.cos(), theta.sin(), 0.0];
    r[1] = [-theta.sin(), theta.cos(), 0.0];
    r
}

fn analytic_2d() -> TrigPotential {
    let mode = |k: &[i64], amplitude: f64, phase: f64| CosineMode {
        k: k.to_vec(),
        amplitude,
        phase,
    };
    TrigPotential::new(
        2,
        1.0,
        1.0,
        vec![mode(&[1, 0], 4e-3, 0.0), mode(&[1, 1], 2e-3, 0.7), mode(&[0, 2], -1e-3, 0.0)],
    )
}

fn second_time_derivative() -> Verdict {
    let mut pass = true;
    let mut parts: Vec<String> = dissipation_reports()
        .iter()
        .filter(|(label, _)| !label.contains("band-limited"))
        .map(|(label, r)| {
            pass &= r.star_rel_err < 1e-3;
            format!("{label}: {:.1e}", r.star_rel_err)
        })
        .collect();
    let a = analytic_2d();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let r = rotation(rng.gen_range(0.0..TAU));
        let x = [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)];
        let (p, q) = geometry::star_rotation_invariance(&a, &r, &x).unwrap();
        worst = worst.max((p - q).abs() / p.abs());
    }
    pass &= worst < 1e-6;
    parts.push(format!("rotation invariance {worst:.1e}"));
    verdict(pass, parts.join("; "))
}

// ---- 8 ----

fn legendre_round_trip() -> Verdict {
    let spec = GridSpec::unit(2, 64).unwrap();
    let phi = PeriodicField::sample(spec, |x| {
        2e-3 * (TAU * (x[0] + x[1])).cos() + 1e-3 * (TAU * x[0]).sin() * (TAU * x[1]).cos()
    })
    .unwrap();
    let v = KahlerPotential::new(phi).unwrap();
    let back = legendre::to_kahler(&legendre::to_symplectic(&v).unwrap()).unwrap();
    let round = back.phi().zip_map(v.phi(), |a, b| a - b).sup_norm();

    let u = cos_1d(64, 1e-4);
    let t = legendre::phi_third_derivatives(&u).unwrap();
    let direct = calabi_core::interp::Interpolator::new(
        &legendre::to_kahler(&u).unwrap().phi().derivative(&[0, 0, 0]).unwrap(),
    );
    let third = t
        .dual_points
        .iter()
        .enumerate()
        .map(|(k, xi)| (t.get(k, 0, 0, 0) - direct.value(&xi[..1])).abs())
        .fold(0.0, f64::max);
    verdict(
        round < 1e-8 && third < 1e-4,
        format!("round trip {round:.1e}, third derivatives {third:.1e}"),
    )
}

// ---- 9 ----

fn hessian_comparison() -> Verdict {
    let u = family_potential(0, 32);
    let cfg = FlowConfig {
        t_end: 50.0 * flow::stable_dt(&u, 0.03),
        sigma: 0.03,
        record_every: 25,
        ..FlowConfig::default()
    };
    let trace = flow::run(&u, &cfg).unwrap();
    let t = trace.snapshots[1].t;
    let b = flow::blowup_extract(&trace, t).unwrap();
    let hc = match HessianComparison::new(&b) {
        Ok(hc) => hc,
        Err(e) => return verdict(false, e.to_string()),
    };
    let spec = *b.spec();
    let half = 0.5 * spec.scale();
    let h = spec.spacing();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut point = || [rng.gen_range(-half..half), rng.gen_range(-half..half)];
    let mut far = f64::INFINITY;
    let mut near = f64::INFINITY;
    for i in 0..100 {
        let x = point();
        // half the pairs anywhere, half within two cells of each other
        let y = if i % 2 == 0 {
            point()
        } else {
            let d = point();
            [x[0] + 4.0 * h * d[0] / spec.scale(), x[1] + 4.0 * h * d[1] / spec.scale()]
        };
        let m = hc.margin(&x, &y);
        if i % 2 == 0 {
            far = far.min(m);
        } else {
            near = near.min(m);
        }
    }
    verdict(
        far.min(near) >= -1e-6,
        format!(
            "max|Rm| {:.12}, worst margin {:.3e} (distant pairs) / {:.3e} (nearby pairs)",
            hc.max_rm(),
            far,
            near
        ),
    )
}

// ---- 10 ----

fn rescaling_law() -> Verdict {
    let u = family_potential(1, 32);
    let b = flow::blowup_potential(&u).unwrap();
    let rm = geometry::riemann_norm(&b.potential).unwrap();
    let origin = b.potential.spec().nearest_node(&[0.0, 0.0]);
    let at_origin = rm.values()[origin];
    let base = geometry::riemann_norm(&u).unwrap().max();
    let center = u.spec().point(u.spec().len() / 3);
    let mut worst: f64 = 0.0;
    for lam in [2.0, 4.0] {
        let scaled = geometry::riemann_norm(&u.rescale(lam, &center).unwrap()).unwrap().max();
        worst = worst.max((scaled * lam / base - 1.0).abs());
    }
    verdict(
        (at_origin - 1.0).abs() < 1e-3 && worst < 1e-2,
        format!("|Rm|(0) = {at_origin:.12}, 1/lam law rel err {worst:.1e}"),
    )
}

// ---- 12 ----

fn determinism() -> Verdict {
    let dir = tempfile::TempDir::new().unwrap();
    let cfg = r#"{"n":2,"N":16,"ic":{"family":"random_bandlimited","max_k":3,"amplitude":0.006,"seed":4},
        "t_end":1e-4,"sigma":0.03,"record_every":50,"seed":4}"#;
    std::fs::write(dir.path().join("cfg.json"), cfg).unwrap();
    let mut outputs = Vec::new();
    for out in ["a", "b"] {
        let run = Command::new(env!("CARGO_BIN_EXE_calabi"))
            .args(["run", "cfg.json", "--out", out])
            .current_dir(dir.path())
            .output()
            .unwrap();
        if !run.status.success() {
            return verdict(false, format!("run exited with {}", run.status));
        }
        outputs.push(std::fs::read(dir.path().join(out).join("run.csv")).unwrap());
    }
    let rows = outputs[0].iter().filter(|&&b| b == b'\n').count();
    verdict(
        outputs[0] == outputs[1],
        format!("two runs, {rows} CSV lines each, {} bytes, identical: {}", outputs[0].len(), outputs[0] == outputs[1]),
    )
}

type Criterion = (u32, &'static str, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        (1, "flat fixed point", flat_fixed_point),
        (2, "1-D exact reduction", exact_reduction_1d),
        (3, "linearized decay rate", linearized_decay_rate),
        (4, "monotonicity suite", monotonicity_suite),
        (5, "dissipation identities", dissipation_identities),
        (6, "trace inequality", trace_inequality),
        (7, "second time derivative", second_time_derivative),
        (8, "Legendre round trip", legendre_round_trip),
        (9, "Hessian comparison", hessian_comparison),
        (10, "rescaling law", rescaling_law),
        (11, "exponential convergence", exponential_convergence),
        (12, "determinism", determinism),
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, check) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let v = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        let tag = if v.pass { "PASS" } else { "FAIL" };
        if !v.pass {
            failed += 1;
        }
        println!(
            "{tag} criterion {id:>2} ({name}): {} [{:.1} s]",
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
