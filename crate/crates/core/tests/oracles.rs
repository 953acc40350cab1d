//! Cross-checks against independent computations: a third-party quadrature
//! library, direct quadrature of defining integrals, and closed forms derived
//! by hand.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use approx::assert_abs_diff_eq;
use gauss_quad::{GaussHermite, GaussLegendre};

use focklab::fock::{kernel_gram, normalized_monomial, BasisSpec, ComplexPoint, MultiIndex, C64};
use focklab::operators::{berezin, toeplitz_matrix, weyl_block, PolyTerm, RadialProfile, SymbolSpec};
use focklab::quadrature::{build_rule, gauss_hermite, gauss_legendre, integrate, RegionSpec};

fn sorted_pairs(pairs: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut v = pairs.to_vec();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    v
}

#[test]
fn legendre_rule_matches_library() {
    for order in [1usize, 2, 5, 16, 33, 64] {
        let (x, w) = gauss_legendre(order);
        let lib = GaussLegendre::new(NonZeroUsize::new(order).unwrap());
        let reference = sorted_pairs(lib.as_node_weight_pairs());
        for ((xi, wi), (rx, rw)) in x.iter().zip(&w).zip(&reference) {
            assert_abs_diff_eq!(xi, rx, epsilon = 1e-13);
            assert_abs_diff_eq!(wi, rw, epsilon = 1e-13);
        }
    }
}

#[test]
fn hermite_rule_matches_library() {
    for order in [1usize, 2, 7, 20] {
        let (x, w) = gauss_hermite(order);
        let lib = GaussHermite::new(NonZeroUsize::new(order).unwrap());
        let reference = sorted_pairs(lib.as_node_weight_pairs());
        for ((xi, wi), (rx, rw)) in x.iter().zip(&w).zip(&reference) {
            assert_abs_diff_eq!(xi, rx, epsilon = 1e-11);
            assert!((wi - rw).abs() <= 1e-11 * rw.max(1e-300) + 1e-15, "order {order}: {wi} vs {rw}");
        }
    }
}

fn gaussian_rule(n: usize, scale: f64, order: usize) -> focklab::quadrature::QuadratureRule {
    build_rule(RegionSpec::GaussianPlane { n, scale }, order).unwrap()
}

/// k_z(ζ) = e^{⟨ζ,z⟩ − |z|²/2}.
fn kernel_fn(z: ComplexPoint) -> impl Fn(&ComplexPoint) -> C64 {
    move |p| (p.inner(&z) - C64::new(0.5 * z.norm_sqr(), 0.0)).exp()
}

#[test]
fn gram_closed_form_against_defining_integral() {
    let rule = gaussian_rule(1, 1.0, 48);
    for (z, w) in [
        (ComplexPoint::planar(0.3, -0.4), ComplexPoint::planar(-0.5, 0.2)),
        (ComplexPoint::planar(1.0, 0.5), ComplexPoint::planar(0.8, 0.9)),
    ] {
        let (kz, kw) = (kernel_fn(z), kernel_fn(w));
        let integral = integrate(&rule, |p| kz(p) * kw(p).conj() * (-p.norm_sqr()).exp() / PI).unwrap();
        let closed = kernel_gram(&z, &w);
        assert!((integral - closed).norm() < 1e-12, "{integral} vs {closed}");
    }
}

#[test]
fn weyl_block_against_defining_integral() {
    // (U_z f)(ζ) = f(z − ζ) k_z(ζ), so ⟨U_z e_β, e_α⟩ = π^{−1}∫ e_β(z−ζ) k_z(ζ) conj(e_α(ζ)) e^{−|ζ|²} dV.
    let basis = BasisSpec::new(1, 6).unwrap();
    let z = ComplexPoint::planar(0.7, -0.4);
    let block = weyl_block(&z, &basis, &basis).unwrap();
    let rule = gaussian_rule(1, 1.0, 60);
    let kz = kernel_fn(z);
    for (i, alpha) in basis.indices().iter().enumerate() {
        for (j, beta) in basis.indices().iter().enumerate() {
            let v = integrate(&rule, |p| {
                normalized_monomial(&(z - *p), beta) * kz(p) * normalized_monomial(p, alpha).conj() * (-p.norm_sqr()).exp()
                    / PI
            })
            .unwrap();
            assert!((block[(i, j)] - v).norm() < 1e-11, "({i},{j}): {} vs {v}", block[(i, j)]);
        }
    }
}

#[test]
fn poly_gaussian_toeplitz_against_moments() {
    // f = c ζ^p conj(ζ)^q e^{−a|ζ|²}: ⟨T_f e_β, e_α⟩ = c (β+p)!/((1+a)^{β+p+1}√(α!β!)) when β+p = α+q.
    let (p, q, a) = (2u32, 1u32, 0.5);
    let c = C64::new(0.3, -0.7);
    let symbol = SymbolSpec::PolyGaussian {
        terms: vec![PolyTerm {
            coeff: c,
            z_pow: MultiIndex::new(&[p]).unwrap(),
            zbar_pow: MultiIndex::new(&[q]).unwrap(),
        }],
        decay: a,
    };
    let basis = BasisSpec::new(1, 10).unwrap();
    let rule = build_rule(symbol.natural_region(1).unwrap(), 24).unwrap();
    let t = toeplitz_matrix(&symbol, &basis, &rule).unwrap();
    let fact = |k: u32| (1..=k).map(f64::from).product::<f64>();
    for alpha in 0..=10u32 {
        for beta in 0..=10u32 {
            let expected = if beta + p == alpha + q {
                c * fact(beta + p) / ((1.0 + a).powi((beta + p + 1) as i32) * (fact(alpha) * fact(beta)).sqrt())
            } else {
                C64::new(0.0, 0.0)
            };
            let got = t.entries()[(alpha as usize, beta as usize)];
            assert!((got - expected).norm() < 1e-12, "({alpha},{beta}): {got} vs {expected}");
        }
    }
}

#[test]
fn disk_closed_form_against_ball_quadrature() {
    let basis = BasisSpec::new(1, 12).unwrap();
    let radius = 1.3;
    let closed = toeplitz_matrix(
        &SymbolSpec::Radial {
            profile: RadialProfile::Indicator { radius },
        },
        &basis,
        &build_rule(RegionSpec::CubeS { n: 1 }, 2).unwrap(),
    )
    .unwrap();
    let balls = SymbolSpec::IndicatorBalls {
        centers: vec![ComplexPoint::planar(0.0, 0.0)],
        radius,
        coeffs: vec![C64::new(1.0, 0.0)],
    };
    let rule = build_rule(
        RegionSpec::Ball {
            center: ComplexPoint::planar(0.0, 0.0),
            radius,
        },
        24,
    )
    .unwrap();
    let quad = toeplitz_matrix(&balls, &basis, &rule).unwrap();
    assert!((closed.entries() - quad.entries()).camax() < 1e-12);
}

#[test]
fn berezin_of_gaussian_symbol_is_heat_transform() {
    // π^{−1}∫ e^{−a|ζ|²} e^{−|ζ−z|²} dV = e^{−a|z|²/(1+a)}/(1+a).
    let a = 0.7;
    let basis = BasisSpec::new(1, 40).unwrap();
    let symbol = SymbolSpec::Radial {
        profile: RadialProfile::Gaussian { rate: a },
    };
    let t = toeplitz_matrix(&symbol, &basis, &build_rule(RegionSpec::CubeS { n: 1 }, 2).unwrap()).unwrap();
    for z in [ComplexPoint::planar(0.0, 0.0), ComplexPoint::planar(1.0, -0.5), ComplexPoint::planar(-1.2, 0.9)] {
        let b = berezin(&t, &z).unwrap();
        let expected = (-a * z.norm_sqr() / (1.0 + a)).exp() / (1.0 + a);
        assert!((b.value.re - expected).abs() <= b.budget + 1e-13, "{} vs {expected}", b.value);
        assert!(b.value.im.abs() < 1e-14);
    }
}

#[test]
fn two_dimensional_gram_against_defining_integral() {
    let rule = gaussian_rule(2, 1.0, 32);
    let z = ComplexPoint::new(&[C64::new(0.4, 0.1), C64::new(-0.3, 0.5)]).unwrap();
    let w = ComplexPoint::new(&[C64::new(-0.2, 0.3), C64::new(0.6, -0.1)]).unwrap();
    let (kz, kw) = (kernel_fn(z), kernel_fn(w));
    let integral = integrate(&rule, |p| kz(p) * kw(p).conj() * (-p.norm_sqr()).exp() / (PI * PI)).unwrap();
    assert!((integral - kernel_gram(&z, &w)).norm() < 1e-12);
}
