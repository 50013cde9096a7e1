use super::star::jet_inverse;
use super::*;
use crate::field::GridSpec;
use crate::jet::{JetSpace, Scalar, TrigPotential};
use crate::linalg::identity;
use crate::potential::CosineMode;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, TAU};

fn mode(k: &[i64], amplitude: f64) -> CosineMode {
    CosineMode {
        k: k.to_vec(),
        amplitude,
        phase: 0.0,
    }
}

fn cos_1d(points: usize, eps: f64) -> SymplecticPotential {
    let spec = GridSpec::unit(1, points).unwrap();
    SymplecticPotential::cosine_modes(spec, 1.0, &[mode(&[1], eps)]).unwrap()
}

/// `S = -(1/u'')''` for `u = x^2/2 + eps cos(2 pi x)`, by hand.
fn exact_s_1d(x: f64, eps: f64) -> f64 {
    let w = TAU;
    let g = 1.0 - eps * w * w * (w * x).cos();
    let g1 = eps * w.powi(3) * (w * x).sin();
    let g2 = eps * w.powi(4) * (w * x).cos();
    g2 / (g * g) - 2.0 * g1 * g1 / g.powi(3)
}

fn rel_sup(a: &PeriodicField, b: &PeriodicField) -> f64 {
    a.zip_map(b, |x, y| x - y).sup_norm() / b.sup_norm()
}

fn analytic_2d() -> TrigPotential {
    TrigPotential::new(
        2,
        1.0,
        1.0,
        vec![
            mode(&[1, 0], 4e-3),
            CosineMode {
                k: vec![1, 1],
                amplitude: 2e-3,
                phase: 0.7,
            },
            mode(&[0, 2], -1e-3),
        ],
    )
}

fn grid_of(u: &TrigPotential, points: usize) -> SymplecticPotential {
    let spec = GridSpec::unit(u.dim, points).unwrap();
    SymplecticPotential::cosine_modes(spec, u.c, &u.modes).unwrap()
}

fn rotation(theta: f64) -> Mat {
    let mut r = linalg::ZERO;
    r[0] = [theta.cos(), theta.sin(), 0.0];
    r[1] = [-theta.sin(), theta.cos(), 0.0];
    r
}

// ---- scalar curvature ----

#[test]
fn flat_has_zero_curvature() {
    for n in 1..=3 {
        let u = SymplecticPotential::flat(GridSpec::unit(n, 16).unwrap());
        for form in [CurvatureForm::Direct, CurvatureForm::Cofactor] {
            assert_eq!(scalar_curvature(&u, form).sup_norm(), 0.0);
        }
        assert_eq!(riemann_norm(&u).unwrap().sup_norm(), 0.0);
        let e = energies(&u);
        assert_eq!((e.ca, e.ma, e.l2, e.psi_mean), (0.0, 0.0, 0.0, 0.0));
    }
}

#[test]
fn mabuchi_of_scaled_quadratic() {
    let spec = GridSpec::new(2, 16, 2.0).unwrap();
    let u = SymplecticPotential::new(3.0, PeriodicField::zeros(spec)).unwrap();
    let e = energies(&u);
    assert!((e.ma + 4.0 * 9f64.ln()).abs() < 1e-12);
    assert!(e.ca < 1e-24);
}

#[test]
fn one_dimensional_closed_form() {
    let eps = 1e-4;
    let mut errs = Vec::new();
    // N = 256 sits on the round-off floor of the nested second differences.
    for points in [64, 128] {
        let u = cos_1d(points, eps);
        let exact = PeriodicField::sample(*u.spec(), |x| exact_s_1d(x[0], eps)).unwrap();
        let mut per_form = Vec::new();
        for form in [CurvatureForm::Direct, CurvatureForm::Cofactor] {
            per_form.push(rel_sup(&scalar_curvature(&u, form), &exact));
        }
        errs.push(per_form);
    }
    assert!(errs[1][0] < 1e-4 && errs[1][1] < 1e-4, "{errs:?}");
    for f in 0..2 {
        assert!(errs[0][f] / errs[1][f] >= 12.0, "{errs:?}");
    }
}

#[test]
fn product_potential_is_additive() {
    let (e1, e2) = (2e-3, -1.5e-3);
    let spec = GridSpec::unit(2, 64).unwrap();
    let u = SymplecticPotential::cosine_modes(spec, 1.0, &[mode(&[1, 0], e1), mode(&[0, 1], e2)]).unwrap();
    let exact = PeriodicField::sample(spec, |x| exact_s_1d(x[0], e1) + exact_s_1d(x[1], e2)).unwrap();
    let s = scalar_curvature(&u, CurvatureForm::Direct);
    assert!(rel_sup(&s, &exact) < 1e-3);
}

#[test]
fn curvature_matches_jets_in_two_dimensions() {
    let a = analytic_2d();
    let u = grid_of(&a, 64);
    let s = scalar_curvature(&u, CurvatureForm::Direct);
    let spec = *u.spec();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for flat in (0..spec.len()).step_by(37) {
        let x = spec.point(flat);
        let exact = scalar_curvature_jet(&a, &x, 0).value();
        worst = worst.max((s.values()[flat] - exact).abs());
        scale = scale.max(exact.abs());
    }
    assert!(worst / scale < 1e-3, "{worst} / {scale}");
}

#[test]
fn forms_agree_at_fourth_order() {
    let a = analytic_2d();
    let diffs: Vec<f64> = [32, 64]
        .iter()
        .map(|&p| {
            let u = grid_of(&a, p);
            let d = scalar_curvature(&u, CurvatureForm::Direct);
            let c = scalar_curvature(&u, CurvatureForm::Cofactor);
            d.zip_map(&c, |x, y| x - y).sup_norm()
        })
        .collect();
    assert!(diffs[0] / diffs[1] >= 12.0, "{diffs:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn curvature_has_zero_mean(seed in 0u64..10_000, amp in 1e-4f64..4e-3, n in 1usize..=2) {
        let spec = GridSpec::unit(n, 32).unwrap();
        let u = SymplecticPotential::random_bandlimited(spec, 3, amp, seed).unwrap();
        let s = scalar_curvature(&u, CurvatureForm::Direct);
        let ca = energies(&u).ca;
        prop_assert!(s.integrate().abs() <= 1e-10 * (1.0 + ca));
    }

    #[test]
    fn trace_pairing_is_nonpositive(seed in 0u64..10_000, amp in 1e-4f64..4e-3, c in 0.5f64..2.0) {
        let spec = GridSpec::unit(2, 16).unwrap();
        let modes = crate::potential::bandlimited_modes(2, 2, amp, seed);
        let u = SymplecticPotential::cosine_modes(spec, c, &modes).unwrap();
        prop_assert!(trace_pairing(&u).max() <= 1e-12);
    }

    #[test]
    fn first_covariant_norm_matches_hessian_data(seed in 0u64..10_000) {
        let spec = GridSpec::unit(2, 16).unwrap();
        let u = SymplecticPotential::random_bandlimited(spec, 2, 3e-3, seed).unwrap();
        let f = PeriodicField::sample(spec, |x| (TAU * x[0]).sin() * (TAU * x[1] + 0.3).cos()).unwrap();
        let got = covariant_norm(&f, &u, 1).unwrap();
        let g = [f.derivative(&[0]).unwrap(), f.derivative(&[1]).unwrap()];
        let inv = &u.hessian_data().inv;
        for flat in 0..spec.len() {
            let a = inv.at(flat);
            let mut expect = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    expect += a[i][j] * g[i].values()[flat] * g[j].values()[flat];
                }
            }
            prop_assert!((got.values()[flat] - expect).abs() <= 1e-12);
        }
    }

    #[test]
    fn riemann_norm_scales_inversely(seed in 0u64..10_000, lam in prop::sample::select(vec![2.0, 4.0])) {
        let spec = GridSpec::unit(2, 32).unwrap();
        let u = SymplecticPotential::random_bandlimited(spec, 2, 3e-3, seed).unwrap();
        let p = spec.point(spec.flat_index(&[3, 11]));
        let before = riemann_norm(&u).unwrap().max();
        let after = riemann_norm(&u.rescale(lam, &p).unwrap()).unwrap().max();
        prop_assert!((after * lam / before - 1.0).abs() < 0.01);
    }
}

// ---- |Rm| ----

#[test]
fn riemann_norm_matches_jets() {
    let a = analytic_2d();
    let u = grid_of(&a, 64);
    let rm2 = riemann_norm_squared(&u);
    let spec = *u.spec();
    let space = JetSpace::new(2, 4);
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for flat in (0..spec.len()).step_by(53) {
        let x = spec.point(flat);
        let v = crate::jet::jet_of_rotated(&a, &space, &x, &identity(2));
        let hess: Vec<Vec<_>> = (0..2)
            .map(|i| (0..2).map(|j| v.partial(i).partial(j)).collect())
            .collect();
        let inv = jet_inverse(&hess, 2);
        let mut exact = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        exact += inv[i][j].derivative_axes(&[k, l]) * inv[k][l].derivative_axes(&[i, j]);
                    }
                }
            }
        }
        worst = worst.max((rm2.values()[flat] - exact).abs());
        scale = scale.max(exact.abs());
    }
    assert!(worst / scale < 1e-3, "{worst} / {scale}");
}

#[test]
fn riemann_norm_in_one_dimension() {
    // |Rm| = |(1/u'')''| = |S| in one dimension
    let u = cos_1d(128, 1e-3);
    let rm = riemann_norm(&u).unwrap();
    let s = scalar_curvature(&u, CurvatureForm::Direct).map(f64::abs);
    assert!(rm.zip_map(&s, |a, b| a - b).sup_norm() < 1e-12 * s.sup_norm().max(1.0));
}

#[test]
fn total_energy_is_scale_invariant() {
    let spec = GridSpec::unit(2, 32).unwrap();
    let u = SymplecticPotential::random_bandlimited(spec, 2, 3e-3, 5).unwrap();
    let p = spec.point(0);
    let e0 = total_energy(&riemann_norm(&u).unwrap());
    let e1 = total_energy(&riemann_norm(&u.rescale(2.0, &p).unwrap()).unwrap());
    assert!((e1 / e0 - 1.0).abs() < 1e-8, "{e0} {e1}");
}

// ---- covariant norms ----

#[test]
fn covariant_norm_examples() {
    let spec = GridSpec::unit(2, 32).unwrap();
    let f = PeriodicField::sample(spec, |x| (TAU * x[0]).cos()).unwrap();
    let flat = SymplecticPotential::flat(spec);
    let g = covariant_norm(&f, &flat, 1).unwrap();
    let fx = f.derivative(&[0]).unwrap();
    assert_eq!(g, fx.map(|v| v * v));

    let fine = GridSpec::unit(2, 64).unwrap();
    let f2 = PeriodicField::sample(fine, |x| (TAU * x[0]).cos()).unwrap();
    let u2 = SymplecticPotential::new(2.0, PeriodicField::zeros(fine)).unwrap();
    let g2 = covariant_norm(&f2, &u2, 1).unwrap();
    let exact = PeriodicField::sample(fine, |x| 0.5 * TAU * TAU * (TAU * x[0]).sin().powi(2)).unwrap();
    assert!(g2.zip_map(&exact, |a, b| a - b).sup_norm() < 1e-3);

    assert!(matches!(covariant_norm(&f, &flat, 4), Err(Error::InvalidArgument(_))));
    assert!(matches!(covariant_norm(&f, &flat, 0), Err(Error::InvalidArgument(_))));
}

#[test]
fn higher_covariant_norms_on_flat_metric() {
    // identity metric: |d^k f|^2 is the sum of squares of all k-th partials
    let spec = GridSpec::unit(2, 16).unwrap();
    let f = PeriodicField::sample(spec, |x| (TAU * x[0]).sin() * (TAU * x[1]).cos()).unwrap();
    let flat = SymplecticPotential::flat(spec);
    for k in 2..=3 {
        let got = covariant_norm(&f, &flat, k).unwrap();
        let mut expect = PeriodicField::zeros(spec);
        for full in 0..(1usize << k) {
            let axes: Vec<usize> = (0..k).map(|b| (full >> b) & 1).collect();
            let d = f.derivative(&axes).unwrap();
            expect = expect.zip_map(&d, |e, v| e + v * v);
        }
        assert!(got.zip_map(&expect, |a, b| a - b).sup_norm() < 1e-9);
    }
}

// ---- dissipation integrands ----

#[test]
fn calabi_dissipation_is_nonnegative() {
    let spec = GridSpec::unit(2, 16).unwrap();
    for seed in 0..5 {
        let u = SymplecticPotential::random_bandlimited(spec, 2, 3e-3, seed).unwrap();
        let s = scalar_curvature(&u, CurvatureForm::Direct);
        assert!(calabi_dissipation(&u, &s) >= 0.0);
    }
    let flat = SymplecticPotential::flat(spec);
    let s = scalar_curvature(&flat, CurvatureForm::Direct);
    assert_eq!(calabi_dissipation(&flat, &s), 0.0);
}

#[test]
fn trace_pairing_formula() {
    // eigenvalues 2 and 1/2 with c = 1: (1/2 - 1)(2 - 1) + (2 - 1)(1/2 - 1) = -1
    let mut h = linalg::ZERO;
    h[0][0] = 2.0;
    h[1][1] = 0.5;
    let inv = linalg::inverse(&h, 2);
    assert!((trace_pairing_at(&h, &inv, 2, 1.0) + 1.0).abs() < 1e-15);
}

// ---- distance and Hessian comparison ----

#[test]
fn flat_distance() {
    let spec = GridSpec::unit(2, 32).unwrap();
    let u = SymplecticPotential::flat(spec);
    let d = riemannian_distance(&u, &[0.0, 0.0], &[0.25, 0.0]);
    assert!((d / 0.25 - 1.0).abs() < 0.02, "{d}");
    assert_eq!(riemannian_distance(&u, &[0.1, 0.2], &[0.1, 0.2]), 0.0);
    // off-grid endpoints and a diagonal
    let d = riemannian_distance(&u, &[0.013, -0.04], &[0.2, 0.147]);
    let euclid = (0.187f64.powi(2) + 0.187f64.powi(2)).sqrt();
    assert!(d >= euclid - 1e-12 && d < 1.02 * euclid, "{d} {euclid}");
    // the short way round the torus
    let d = riemannian_distance(&u, &[-0.45, 0.0], &[0.45, 0.0]);
    assert!((d - 0.1).abs() < 2e-3, "{d}");
}

#[test]
fn scaled_distance() {
    let spec = GridSpec::unit(1, 32).unwrap();
    let u = SymplecticPotential::new(4.0, PeriodicField::zeros(spec)).unwrap();
    let d = riemannian_distance(&u, &[0.0], &[0.25]);
    assert!((d / 0.5 - 1.0).abs() < 0.02, "{d}");
}

#[test]
fn one_dimensional_distance_is_arc_length() {
    // d = int sqrt(u'') dx along the segment
    let eps = 2e-3;
    let u = cos_1d(64, eps);
    let d = riemannian_distance(&u, &[-0.2], &[0.3]);
    let m = 20_000;
    let exact: f64 = (0..m)
        .map(|i| {
            let x = -0.2 + (i as f64 + 0.5) * 0.5 / m as f64;
            (1.0 - eps * TAU * TAU * (TAU * x).cos()).sqrt() * 0.5 / m as f64
        })
        .sum();
    assert!((d / exact - 1.0).abs() < 1e-5, "{d} {exact}");
}

#[test]
fn flat_comparison_margin() {
    let spec = GridSpec::unit(2, 16).unwrap();
    let u = SymplecticPotential::flat(spec);
    let cmp = HessianComparison::new(&u).unwrap();
    let (x, y) = ([0.0, 0.0], [0.125, 0.0625]);
    let d = riemannian_distance(&u, &x, &y);
    assert!((cmp.margin(&x, &y) - (1.0 - (-2.0 * d).exp())).abs() < 1e-14);
    assert_eq!(cmp.margin(&x, &x), 0.0);
}

#[test]
fn comparison_requires_unit_curvature() {
    let u = cos_1d(64, 1e-2);
    assert!(riemann_norm(&u).unwrap().max() > 1.0);
    assert!(matches!(HessianComparison::new(&u), Err(Error::Precondition(_))));
}

#[test]
fn comparison_holds_after_normalization() {
    let u = cos_1d(64, 1e-2);
    let rm = riemann_norm(&u).unwrap();
    let at = rm.argmax();
    let lam = rm.values()[at];
    let r = u.rescale(lam, &u.spec().point(at)).unwrap();
    let cmp = HessianComparison::new(&r).unwrap();
    let half = 0.5 * r.spec().scale();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let x = [rng.gen_range(-half..half)];
        let y = [rng.gen_range(-half..half)];
        assert!(cmp.margin(&x, &y) >= -1e-6);
    }
}

// ---- second time derivative ----

#[test]
fn star_vanishes_on_flat() {
    let u = SymplecticPotential::flat(GridSpec::unit(2, 16).unwrap());
    assert_eq!(d2u_dt2_star(&u).sup_norm(), 0.0);
}

#[test]
fn star_linearization() {
    // psi_t = -psi'''' at first order, so psi_tt = psi'''''''' = eps (2 pi)^8 cos.
    // The second harmonic enters at relative size ~40 eps (2 pi)^2, so the
    // amplitude must be small for the linear picture to hold to 1%.
    let eps = 1e-6;
    let u = cos_1d(64, eps);
    let star = d2u_dt2_star(&u);
    let lin = u.psi().map(|v| TAU.powi(8) * v);
    assert!(rel_sup(&star, &lin) < 0.01, "{}", rel_sup(&star, &lin));
}

#[test]
fn star_matches_exact_one_dimensional_reduction() {
    // u_tt = ((u^11)^2 S'')'' evaluated exactly by jets at every node
    let eps = 1e-4;
    let a = TrigPotential::new(1, 1.0, 1.0, vec![mode(&[1], eps)]);
    let space = JetSpace::new(1, 8);
    // finer grids lose digits: eight nested difference levels amplify round-off
    for (points, tol) in [(32, 1e-3), (64, 1e-4)] {
        let u = cos_1d(points, eps);
        let star = d2u_dt2_star(&u);
        let exact = PeriodicField::sample(*u.spec(), |x| {
            let v = crate::jet::jet_of_rotated(&a, &space, x, &identity(1));
            let inv = v.partial(0).partial(0).recip();
            let s = -inv.partial(0).partial(0);
            (&(&inv * &inv) * &s.partial(0).partial(0)).partial(0).partial(0).value()
        })
        .unwrap();
        let err = rel_sup(&star, &exact);
        assert!(err < tol, "N={points}: {err}");
    }
}

#[test]
fn star_on_grid_matches_jets() {
    let a = analytic_2d();
    let u = grid_of(&a, 64);
    let star = d2u_dt2_star(&u);
    let spec = *u.spec();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for flat in (0..spec.len()).step_by(97) {
        let x = spec.point(flat);
        let exact = star_at_jet(&a, &x, &identity(2));
        worst = worst.max((star.values()[flat] - exact).abs());
        scale = scale.max(exact.abs());
    }
    assert!(worst / scale < 1e-2, "{worst} / {scale}");
}

#[test]
fn star_in_one_dimension_matches_direct_expansion() {
    // In 1-D, d/dt u^11 = -(u^11)^2 (u_t)'' = (u^11)^2 S'', so
    // u_tt = ((u^11)^2 S'')'' with S = -(u^11)''; all by jets.
    let a = TrigPotential::new(1, 1.0, 1.0, vec![mode(&[1], 1e-3)]);
    let x0 = [0.1];
    let got = star_at_jet(&a, &x0, &identity(1));
    let space = JetSpace::new(1, 8);
    let u = crate::jet::jet_of_rotated(&a, &space, &x0, &identity(1));
    let inv = u.partial(0).partial(0).recip();
    let s = -inv.partial(0).partial(0);
    let du11 = &(&inv * &inv) * &s.partial(0).partial(0);
    let expect = du11.partial(0).partial(0).value();
    assert!((got - expect).abs() < 1e-9 * expect.abs().max(1.0), "{got} {expect}");
}

#[test]
fn rotation_invariance() {
    let a = analytic_2d();
    let x = [0.0, 0.0];
    let (p, q) = star_rotation_invariance(&a, &identity(2), &x).unwrap();
    assert_eq!(p.to_bits(), q.to_bits());

    let (p, q) = star_rotation_invariance(&a, &rotation(PI / 6.0), &x).unwrap();
    assert!((p - q).abs() <= 1e-6 * p.abs(), "{p} {q}");

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..5 {
        let r = rotation(rng.gen_range(0.0..TAU));
        let x = [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)];
        let (p, q) = star_rotation_invariance(&a, &r, &x).unwrap();
        assert!((p - q).abs() <= 1e-6 * p.abs(), "{p} {q}");
    }
}

#[test]
fn rotation_invariance_examples() {
    let product = TrigPotential::new(2, 1.0, 1.0, vec![CosineMode {
        k: vec![1, 1],
        amplitude: 5e-4,
        phase: 0.0,
    }, CosineMode {
        k: vec![1, -1],
        amplitude: 5e-4,
        phase: 0.0,
    }]);
    // 1e-3 cos(2 pi x1) cos(2 pi x2) written as two modes
    let (p, q) = star_rotation_invariance(&product, &rotation(PI / 6.0), &[0.0, 0.0]).unwrap();
    assert!((p - q).abs() <= 1e-6 * p.abs(), "{p} {q}");

    let flat = TrigPotential::new(2, 1.0, 1.0, vec![]);
    assert_eq!(star_rotation_invariance(&flat, &rotation(0.4), &[0.1, 0.2]).unwrap(), (0.0, 0.0));

    let mut skew = identity(2);
    skew[0][1] = 1e-3;
    assert!(matches!(
        star_rotation_invariance(&flat, &skew, &[0.0, 0.0]),
        Err(Error::InvalidArgument(_))
    ));
}
