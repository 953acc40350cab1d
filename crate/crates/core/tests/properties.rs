//! Property tests for the documented invariants.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use proptest::prelude::*;

use focklab::approximation::{exp_series_check, y_z_build, y_z_norm_bound, D0Spec, YzSpec};
use focklab::fock::{
    inner_h2, kernel_coeffs, kernel_tail_norm, norm_star, BasisSpec, ComplexPoint, FockVector, MultiIndex, C64,
};
use focklab::lab::{Check, CheckStatus, LabConfig};
use focklab::lattice::{frame_operator, gaussian_lattice_sum, lattice_window, schur_bound, DoubleSum, LatticeKernel};
use focklab::localization::{sl_tail_bound, sl_tail_numeric, wl_profile, SLCertificate};
use focklab::operators::{
    berezin, op_norm, toeplitz_matrix, toeplitz_refinement_gap, weyl_translate, OperatorMatrix, SymbolSpec,
};
use focklab::quadrature::{build_rule, integrate, RegionSpec};
use focklab::tolerances::{ASSEMBLY_ROUNDING, KERNEL_ROUNDING, WEYL_ROUNDING};

fn point(radius: f64) -> impl Strategy<Value = ComplexPoint> {
    (0.0..radius, 0.0..(2.0 * PI)).prop_map(|(r, t)| ComplexPoint::new(&[C64::from_polar(r, t)]).unwrap())
}

fn complex(bound: f64) -> impl Strategy<Value = C64> {
    (-bound..bound, -bound..bound).prop_map(|(a, b)| C64::new(a, b))
}

fn vector(basis: BasisSpec) -> impl Strategy<Value = FockVector> {
    let size = basis.size();
    prop::collection::vec(complex(1.0), size)
        .prop_map(move |c| FockVector::new(basis.clone(), nalgebra::DVector::from_vec(c)).unwrap())
}

fn matrix(basis: BasisSpec) -> impl Strategy<Value = OperatorMatrix> {
    let size = basis.size();
    prop::collection::vec(complex(1.0), size * size)
        .prop_map(move |c| OperatorMatrix::new(basis.clone(), DMatrix::from_vec(size, size, c)).unwrap())
}

fn double_factorial(k: i64) -> f64 {
    (1..=k).rev().step_by(2).map(|v| v as f64).product()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn reproducing_identity(z in point(3.0), a in 0u32..=20) {
        let basis = BasisSpec::new(1, 20).unwrap();
        let alpha = MultiIndex::new(&[a]).unwrap();
        let k = kernel_coeffs(&z, &basis).unwrap().vector;
        let e = FockVector::basis_vector(&basis, &alpha).unwrap();
        let lhs = inner_h2(&e, &k).unwrap();
        prop_assert!((lhs - k.coeffs()[a as usize].conj()).norm() <= 1e-12);
    }

    #[test]
    fn kernel_gram_law(z in point(3.0), w in point(3.0)) {
        let basis = BasisSpec::new(1, 40).unwrap();
        let kz = kernel_coeffs(&z, &basis).unwrap();
        let kw = kernel_coeffs(&w, &basis).unwrap();
        let g = inner_h2(&kz.vector, &kw.vector).unwrap().norm();
        let expected = (-0.5 * z.distance(&w).powi(2)).exp();
        prop_assert!((g - expected).abs() <= kz.tail_norm() + kw.tail_norm() + KERNEL_ROUNDING);
    }

    #[test]
    fn parseval(f in vector(BasisSpec::new(2, 6).unwrap())) {
        let direct: f64 = f.coeffs().iter().map(|c| c.norm_sqr()).sum();
        prop_assert!((inner_h2(&f, &f).unwrap().re - direct).abs() <= 1e-13 * direct.max(1.0));
        prop_assert_eq!(f.norm_sqr(), direct);
    }

    #[test]
    fn star_norm_closed_form_against_quadrature(f in vector(BasisSpec::new(1, 10).unwrap())) {
        let rule = build_rule(RegionSpec::GaussianPlane { n: 1, scale: 0.5 }, 16).unwrap();
        let basis = f.basis().clone();
        let sq = integrate(&rule, |p| {
            let v = focklab::fock::eval_at(&f, p).unwrap();
            C64::new(v.norm_sqr() * (-0.5 * p.norm_sqr()).exp(), 0.0)
        })
        .unwrap()
        .re;
        let closed = norm_star(&f);
        prop_assert!((sq.sqrt() - closed).abs() <= 1e-8 * closed.max(1.0), "{} vs {closed}", sq.sqrt());
        prop_assert_eq!(basis.size(), 11);
    }

    #[test]
    fn basis_positions_follow_ordering(n in 1usize..=2, d in 0u32..=12) {
        let basis = BasisSpec::new(n, d).unwrap();
        let expected = if n == 1 { d as usize + 1 } else { (d as usize + 1) * (d as usize + 2) / 2 };
        prop_assert_eq!(basis.size(), expected);
        for (i, a) in basis.indices().iter().enumerate() {
            prop_assert_eq!(basis.position(a), Some(i));
        }
    }

    #[test]
    fn cube_rule_exactness(order in 2usize..=10, a in 0i32..20, b in 0i32..20) {
        prop_assume!(a < 2 * order as i32 && b < 2 * order as i32);
        let rule = build_rule(RegionSpec::CubeS { n: 1 }, order).unwrap();
        let v = integrate(&rule, |p| C64::new(p.coords()[0].re.powi(a) * p.coords()[0].im.powi(b), 0.0)).unwrap();
        let exact = 1.0 / ((a + 1) * (b + 1)) as f64;
        prop_assert!((v.re - exact).abs() <= 1e-12 * exact);
    }

    #[test]
    fn ball_rule_exactness(order in 2usize..=10, a in 0i64..10, b in 0i64..10, radius in 0.2f64..3.0) {
        prop_assume!(((a + b) as usize) < 2 * order);
        let rule = build_rule(RegionSpec::Ball { center: ComplexPoint::planar(0.0, 0.0), radius }, order).unwrap();
        let v = integrate(&rule, |p| {
            let c = p.coords()[0];
            C64::new(c.re.powi(a as i32) * c.im.powi(b as i32), 0.0)
        })
        .unwrap()
        .re;
        let exact = if a % 2 == 0 && b % 2 == 0 {
            let angular = 2.0 * PI * double_factorial(a - 1) * double_factorial(b - 1) / double_factorial(a + b);
            angular * radius.powi((a + b + 2) as i32) / (a + b + 2) as f64
        } else {
            0.0
        };
        prop_assert!((v - exact).abs() <= 1e-12 * exact.abs().max(radius.powi((a + b + 2) as i32)));
    }

    #[test]
    fn rule_weights_positive_and_sum_to_measure(order in 2usize..=12, radius in 0.1f64..4.0, n in 1usize..=2) {
        for region in [RegionSpec::CubeS { n }, RegionSpec::Ball { center: ComplexPoint::origin(n).unwrap(), radius }] {
            let rule = build_rule(region.clone(), order).unwrap();
            prop_assert!(rule.weights().iter().all(|w| *w > 0.0));
            let total: f64 = rule.weights().iter().sum();
            let m = region.measure().unwrap();
            prop_assert!((total - m).abs() <= 1e-12 * m);
            let again = build_rule(region, order).unwrap();
            prop_assert_eq!(rule.weights(), again.weights());
        }
    }

    #[test]
    fn berezin_bounded_by_norm(b in matrix(BasisSpec::new(1, 12).unwrap()), z in point(2.0)) {
        let v = berezin(&b, &z).unwrap();
        prop_assert!(v.value.norm() <= b.op_norm().value * (1.0 + 1e-12));
    }

    #[test]
    fn weyl_covariance_on_lattice(ux in -2i32..=2, uy in -2i32..=2, z in point(2.0)) {
        let basis = BasisSpec::new(1, 30).unwrap();
        let u = ComplexPoint::planar(ux as f64, uy as f64);
        let weyl = weyl_translate(&u, &basis).unwrap();
        let kz = kernel_coeffs(&z, &basis).unwrap();
        let lhs = weyl.matrix.apply(&kz.vector).unwrap();
        let phase = C64::new(0.0, u.inner(&z).im).exp();
        let rhs = kernel_coeffs(&(u - z), &basis).unwrap().vector.scale(phase);
        let dev = (lhs.coeffs() - rhs.coeffs()).norm();
        prop_assert!(dev <= kz.tail_norm() + kernel_tail_norm(&(u - z), 30) + WEYL_ROUNDING);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn weyl_involution(z in point(2.0)) {
        let basis = BasisSpec::new(1, 30).unwrap();
        let w = weyl_translate(&z, &basis).unwrap();
        let dev = op_norm(&(w.square().entries() - DMatrix::<C64>::identity(31, 31))).value;
        prop_assert!(dev <= w.square_budget() + WEYL_ROUNDING, "{dev} vs {}", w.square_budget());
    }

    #[test]
    fn indicator_ball_toeplitz_properties(
        coeffs in prop::collection::vec(0.0f64..2.0, 9),
        radius in 0.05f64..0.45,
    ) {
        let window = lattice_window(1, 1).unwrap();
        let symbol = SymbolSpec::IndicatorBalls {
            centers: window.points().to_vec(),
            radius,
            coeffs: coeffs.iter().map(|c| C64::new(*c, 0.0)).collect(),
        };
        let basis = BasisSpec::new(1, 15).unwrap();
        let rule = build_rule(symbol.natural_region(1).unwrap(), 8).unwrap();
        let t = toeplitz_matrix(&symbol, &basis, &rule).unwrap();
        let gap = toeplitz_refinement_gap(&symbol, &basis, &rule).unwrap();
        prop_assert!(t.hermitian_deviation() <= 1e-12);
        prop_assert!(t.min_eigenvalue_hermitian_part() >= -1e-10);
        prop_assert!(t.op_norm().value <= symbol.sup_norm() + gap + ASSEMBLY_ROUNDING);
    }

    #[test]
    fn frame_operator_psd_and_bounded(x in 0.0f64..=1.0, y in 0.0f64..=1.0) {
        let basis = BasisSpec::new(1, 20).unwrap();
        let window = lattice_window(1, 4).unwrap();
        let z = ComplexPoint::planar(x, y);
        let f = frame_operator(&z, &window, &basis).unwrap();
        prop_assert!((f.factor.adjoint() * &f.factor - f.matrix.entries()).camax() <= 1e-12);
        prop_assert!(f.matrix.min_eigenvalue_hermitian_part() >= -1e-12);
        let kernel = LatticeKernel::from_fn(&window, |u, v| (-0.5 * u.distance(v).powi(2)).exp()).unwrap();
        let s = schur_bound(&kernel, &vec![1.0; window.len()]).unwrap();
        prop_assert!(f.matrix.op_norm().value <= s.bound / PI + f.window_budget + ASSEMBLY_ROUNDING);
    }

    #[test]
    fn splitting_is_exact_and_tails_monotone(b in matrix(BasisSpec::new(1, 10).unwrap()), z in point(1.0), w in point(1.0)) {
        let window = lattice_window(1, 2).unwrap();
        let sum = DoubleSum::new(&b, &z, &w, &window).unwrap();
        let whole = sum.assembled().unwrap();
        let mut prev = f64::INFINITY;
        for r in [0.5, 1.0, 1.5, 2.0, 3.0, 4.0] {
            let s = sum.split(r).unwrap();
            let recon = s.near.checked_add(&s.far).unwrap();
            prop_assert!(op_norm(&(whole.entries() - recon.entries())).value <= 1e-10);
            let t = sum.tail_sup(r);
            prop_assert!(t <= prev);
            prev = t;
        }
    }

    #[test]
    fn lattice_window_shape(n in 1usize..=2, radius in 1u32..=3) {
        let w = lattice_window(n, radius).unwrap();
        prop_assert_eq!(w.len(), (2 * radius as usize + 1).pow(2 * n as u32));
        let p = w.points();
        for i in 0..p.len() {
            for j in (i + 1)..p.len() {
                prop_assert!(p[i].distance(&p[j]) >= 1.0);
            }
        }
    }

    #[test]
    fn sl_bound_dominates(beta in 2.1f64..10.0, r in 0.5f64..8.0, c in 0.1f64..5.0) {
        let cert = SLCertificate::new(c, beta, 1).unwrap();
        let numeric = sl_tail_numeric(&cert, 1, r, 32).unwrap();
        prop_assert!(numeric <= sl_tail_bound(&cert, 1, r).unwrap());
    }

    #[test]
    fn y_norm_within_schur_bound(coeffs in prop::collection::vec(complex(2.0), 25), z in point(1.0)) {
        let basis = BasisSpec::new(1, 20).unwrap();
        let window = lattice_window(1, 2).unwrap();
        let spec = YzSpec::new(coeffs, z).unwrap();
        let y = y_z_build(&spec, &window, &basis).unwrap();
        prop_assert!(y.op_norm().value <= y_z_norm_bound(&spec, 1) + ASSEMBLY_ROUNDING);
        prop_assert!(y_z_norm_bound(&spec, 1) <= spec.sup_coeff() * gaussian_lattice_sum(0.5, 2) * (1.0 + 1e-15));
    }

    #[test]
    fn series_dominated_by_closed_form(w in point(1.5)) {
        let basis = BasisSpec::new(1, 30).unwrap();
        let rep = exp_series_check(&w, 8, &basis).unwrap();
        for (e, c) in rep.report.errors.iter().zip(&rep.closed_form) {
            prop_assert!(*e >= 0.0);
            prop_assert!(*e <= c * (1.0 + 1e-12) + 1e-15);
        }
    }

    #[test]
    fn displacement_bound_enforced(wx in -2.0f64..2.0, wy in -2.0f64..2.0, slack in 0.01f64..1.0) {
        let window = lattice_window(1, 1).unwrap();
        let w = ComplexPoint::planar(wx, wy);
        let targets: Vec<_> = window.points().iter().map(|u| *u - w).collect();
        let ones = vec![C64::new(1.0, 0.0); window.len()];
        prop_assert!(D0Spec::new(ones.clone(), targets.clone(), w.norm() + 1e-12, &window).is_ok());
        prop_assert!(D0Spec::new(ones, targets, (w.norm() - slack).max(0.0) * 0.999, &window).is_err() || w.norm() < 1e-9);
    }

    #[test]
    fn config_round_trips(n in 1usize..=2, degree in 1u32..60, window in 1u32..8, seed in any::<u64>()) {
        let mut c = LabConfig { n, degree, window, ..LabConfig::default() };
        c.samples.seed = seed;
        let back = LabConfig::from_json(&c.to_json_pretty()).unwrap();
        prop_assert_eq!(back, c);
    }

    #[test]
    fn check_status_consistent(value in -1.0f64..3.0, threshold in 0.0f64..1.0, budget in 0.0f64..1.0) {
        let c = Check::upper("x", value, threshold, budget);
        let expected = if value <= threshold {
            CheckStatus::Pass
        } else if value <= threshold + budget {
            CheckStatus::PassWithinBudget
        } else {
            CheckStatus::Fail
        };
        prop_assert_eq!(c.status, expected);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn profiles_monotone_and_symmetric(radius in 0.5f64..2.0) {
        let basis = BasisSpec::new(1, 20).unwrap();
        let symbol = SymbolSpec::Radial { profile: focklab::operators::RadialProfile::Indicator { radius } };
        let rule = build_rule(symbol.natural_region(1).unwrap(), 4).unwrap();
        let t = toeplitz_matrix(&symbol, &basis, &rule).unwrap();
        let grid = [ComplexPoint::planar(0.0, 0.0), ComplexPoint::planar(0.5, 0.5)];
        let rep = wl_profile(&t, &grid, &[0.5, 1.0, 2.0, 4.0], 16).unwrap();
        for side in [&rep.operator, &rep.adjoint] {
            let mut prev = side.total;
            for row in &side.tails {
                prop_assert!(row.tail <= prev);
                prev = row.tail;
            }
        }
        prop_assert!((rep.operator.total - rep.adjoint.total).abs() <= 1e-8);
        for (a, b) in rep.operator.tails.iter().zip(&rep.adjoint.tails) {
            prop_assert!((a.tail - b.tail).abs() <= 1e-8);
        }
    }
}
