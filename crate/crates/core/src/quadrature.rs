//! Deterministic tensor and polar quadrature over the plane, the unit cube,
//! balls and annular tails.
//!
//! `integrate(rule, f)` always approximates ∫ f dV. For the Gaussian plane the
//! Hermite weight is folded back into the weights, so the rule is exact for
//! e^{−s|ζ|²}·polynomial integrands of bounded degree.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{check_dim, ComplexPoint, C64};
use crate::special::factorial;

/// Extra radius beyond max(r, |c|) at which annular tails are cut.
pub const ANNULUS_REACH: f64 = 8.0;

const NEWTON_TOL: f64 = 1e-15;
const NEWTON_MAX_ITER: usize = 100;

/// Gauss–Legendre nodes and weights on [−1, 1], ascending.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; order];
    let mut w = vec![0.0; order];
    let m = order.div_ceil(2);
    let nf = order as f64;
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let legendre = |z: f64| {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..order {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            (p1, nf * (z * p1 - p2) / (z * z - 1.0))
        };
        for _ in 0..NEWTON_MAX_ITER {
            let (p, dp) = legendre(z);
            let z1 = z;
            z = z1 - p / dp;
            if (z - z1).abs() <= NEWTON_TOL {
                break;
            }
        }
        let pp = legendre(z).1;
        x[i] = -z;
        x[order - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[order - 1 - i] = w[i];
    }
    if order % 2 == 1 {
        x[order / 2] = 0.0;
    }
    (x, w)
}

/// Gauss–Hermite nodes and weights for the weight e^{−x²} on ℝ, ascending.
pub fn gauss_hermite(order: usize) -> (Vec<f64>, Vec<f64>) {
    let pim4 = PI.powf(-0.25);
    let nf = order as f64;
    let mut x = vec![0.0; order];
    let mut w = vec![0.0; order];
    let m = order.div_ceil(2);
    let mut roots: Vec<f64> = Vec::with_capacity(m);
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * roots[0],
            3 => 1.91 * z - 0.91 * roots[1],
            _ => 2.0 * z - roots[i - 2],
        };
        // orthonormal Hermite recurrence: (h_n, h_n')
        let hermite = |z: f64| {
            let (mut p1, mut p2) = (pim4, 0.0);
            for j in 0..order {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            (p1, (2.0 * nf).sqrt() * p2)
        };
        for _ in 0..NEWTON_MAX_ITER {
            let (p, dp) = hermite(z);
            let z1 = z;
            z = z1 - p / dp;
            if (z - z1).abs() <= NEWTON_TOL * z.abs().max(1.0) {
                break;
            }
        }
        let pp = hermite(z).1;
        roots.push(z);
        x[order - 1 - i] = z;
        x[i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[order - 1 - i] = w[i];
    }
    if order % 2 == 1 {
        x[order / 2] = 0.0;
    }
    (x, w)
}

/// Gauss–Legendre rule mapped to [a, b].
fn legendre_on(a: f64, b: f64, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(order);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (
        x.iter().map(|t| mid + half * t).collect(),
        w.iter().map(|v| half * v).collect(),
    )
}

/// Integration regions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RegionSpec {
    /// All of ℂⁿ; the rule is exact for e^{−s|ζ|²}·polynomial.
    GaussianPlane { n: usize, scale: f64 },
    /// The cube [0,1)^{2n}.
    CubeS { n: usize },
    Ball { center: ComplexPoint, radius: f64 },
    /// The shell inner ≤ |ζ − center| ≤ outer.
    AnnulusTail {
        center: ComplexPoint,
        inner: f64,
        outer: f64,
    },
}

impl RegionSpec {
    /// Annular tail {|ζ − c| ≥ r} cut at max(r, |c|) + 8.
    pub fn annulus_tail(center: ComplexPoint, inner: f64) -> Self {
        let outer = inner.max(center.norm()) + ANNULUS_REACH;
        RegionSpec::AnnulusTail {
            center,
            inner,
            outer,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            RegionSpec::GaussianPlane { n, .. } | RegionSpec::CubeS { n } => *n,
            RegionSpec::Ball { center, .. } | RegionSpec::AnnulusTail { center, .. } => {
                center.dim()
            }
        }
    }

    /// Lebesgue measure for bounded regions.
    pub fn measure(&self) -> Option<f64> {
        let n = self.n() as i32;
        let ball = |r: f64| PI.powi(n) * r.powi(2 * n) / factorial(n as u32);
        match self {
            RegionSpec::GaussianPlane { .. } => None,
            RegionSpec::CubeS { .. } => Some(1.0),
            RegionSpec::Ball { radius, .. } => Some(ball(*radius)),
            RegionSpec::AnnulusTail { inner, outer, .. } => Some(ball(*outer) - ball(*inner)),
        }
    }

    fn validate(&self) -> Result<()> {
        check_dim(self.n())?;
        let bad = |m: String| Err(Error::InvalidRegion(m));
        match self {
            RegionSpec::GaussianPlane { scale, .. } if !(*scale > 0.0 && scale.is_finite()) => {
                bad(format!("gaussian-plane scale must be positive, got {scale}"))
            }
            RegionSpec::Ball { radius, center } if !(*radius > 0.0 && radius.is_finite()) || !center.is_finite() => {
                bad(format!("ball radius must be positive, got {radius}"))
            }
            RegionSpec::AnnulusTail { inner, outer, center }
                if !(*inner >= 0.0 && inner < outer && outer.is_finite()) || !center.is_finite() =>
            {
                bad(format!("annulus needs 0 ≤ r < R_max, got r={inner}, R_max={outer}"))
            }
            _ => Ok(()),
        }
    }
}

/// Nodes and positive weights for one region.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    region: RegionSpec,
    order: usize,
    nodes: Vec<ComplexPoint>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn region(&self) -> &RegionSpec {
        &self.region
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nodes(&self) -> &[ComplexPoint] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// The same rule moved to a new center (balls and annuli only).
    pub fn recentered(&self, center: ComplexPoint) -> Result<Self> {
        let old = match &self.region {
            RegionSpec::Ball { center, .. } | RegionSpec::AnnulusTail { center, .. } => *center,
            other => {
                return Err(Error::InvalidRegion(format!(
                    "cannot recenter {other:?}"
                )))
            }
        };
        center.ensure_dim(old.dim())?;
        let shift = center - old;
        let mut region = self.region.clone();
        match &mut region {
            RegionSpec::Ball { center: c, .. } | RegionSpec::AnnulusTail { center: c, .. } => {
                *c = center
            }
            _ => unreachable!(),
        }
        Ok(Self {
            region,
            order: self.order,
            nodes: self.nodes.iter().map(|p| *p + shift).collect(),
            weights: self.weights.clone(),
        })
    }
}

fn tensor_real(n: usize, axis: &[(f64, f64)]) -> (Vec<ComplexPoint>, Vec<f64>) {
    let dims = 2 * n;
    let q = axis.len();
    let total = q.pow(dims as u32);
    let mut nodes = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    let mut coords = vec![0.0; dims];
    for flat in 0..total {
        let mut rest = flat;
        let mut w = 1.0;
        // last real coordinate varies fastest
        for k in (0..dims).rev() {
            let (x, wk) = axis[rest % q];
            rest /= q;
            coords[k] = x;
            w *= wk;
        }
        nodes.push(ComplexPoint::from_real(&coords).expect("even length"));
        weights.push(w);
    }
    (nodes, weights)
}

/// Polar rule on inner ≤ |ζ − c| ≤ outer: Gauss–Legendre in t = |ζ−c|², uniform
/// angles (2·order of them); Hopf coordinates for n = 2.
fn polar(center: &ComplexPoint, inner: f64, outer: f64, order: usize) -> (Vec<ComplexPoint>, Vec<f64>) {
    let (ts, wt) = legendre_on(inner * inner, outer * outer, order);
    let m = 2 * order;
    let dtheta = 2.0 * PI / m as f64;
    let angles: Vec<C64> = (0..m)
        .map(|k| C64::from_polar(1.0, k as f64 * dtheta))
        .collect();
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    match center.dim() {
        1 => {
            for (t, w) in ts.iter().zip(&wt) {
                let r = t.sqrt();
                for a in &angles {
                    nodes.push(*center + ComplexPoint::planar(r * a.re, r * a.im));
                    weights.push(0.5 * w * dtheta);
                }
            }
        }
        _ => {
            let (us, wu) = legendre_on(0.0, 1.0, order);
            for (s, ws) in ts.iter().zip(&wt) {
                for (u, wuu) in us.iter().zip(&wu) {
                    let r1 = (s * u).sqrt();
                    let r2 = (s * (1.0 - u)).sqrt();
                    for a1 in &angles {
                        for a2 in &angles {
                            let off = ComplexPoint::new(&[a1 * r1, a2 * r2]).expect("n=2");
                            nodes.push(*center + off);
                            weights.push(0.25 * s * ws * wuu * dtheta * dtheta);
                        }
                    }
                }
            }
        }
    }
    (nodes, weights)
}

/// Builds the rule of the given order for a region.
pub fn build_rule(region: RegionSpec, order: usize) -> Result<QuadratureRule> {
    if order < 2 {
        return Err(Error::InvalidOrder(order));
    }
    region.validate()?;
    let (nodes, weights) = match &region {
        RegionSpec::GaussianPlane { n, scale } => {
            let (x, w) = gauss_hermite(order);
            let root = scale.sqrt();
            let axis: Vec<(f64, f64)> = x
                .iter()
                .zip(&w)
                .map(|(t, wt)| (t / root, (wt.ln() + t * t).exp() / root))
                .collect();
            tensor_real(*n, &axis)
        }
        RegionSpec::CubeS { n } => {
            let (x, w) = legendre_on(0.0, 1.0, order);
            let axis: Vec<(f64, f64)> = x.into_iter().zip(w).collect();
            tensor_real(*n, &axis)
        }
        RegionSpec::Ball { center, radius } => polar(center, 0.0, *radius, order),
        RegionSpec::AnnulusTail {
            center,
            inner,
            outer,
        } => polar(center, *inner, *outer, order),
    };
    Ok(QuadratureRule {
        region,
        order,
        nodes,
        weights,
    })
}

/// Neumaier-compensated sum in slice order.
pub(crate) fn compensated_sum(values: impl IntoIterator<Item = C64>) -> C64 {
    let mut re = Neumaier::default();
    let mut im = Neumaier::default();
    for v in values {
        re.add(v.re);
        im.add(v.im);
    }
    C64::new(re.total(), im.total())
}

#[derive(Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

fn check_finite(values: &[C64], rule: &QuadratureRule) -> Result<()> {
    match values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
        Some(index) => Err(Error::NonFiniteIntegrand {
            index,
            point: rule.nodes[index],
        }),
        None => Ok(()),
    }
}

/// Σ wᵢ f(nodeᵢ), summed in node order.
pub fn integrate<F>(rule: &QuadratureRule, integrand: F) -> Result<C64>
where
    F: Fn(&ComplexPoint) -> C64,
{
    let values: Vec<C64> = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(p, w)| integrand(p) * *w)
        .collect();
    check_finite(&values, rule)?;
    Ok(compensated_sum(values))
}

/// Parallel evaluation with the same node-order reduction as [`integrate`].
pub fn integrate_par<F>(rule: &QuadratureRule, integrand: F) -> Result<C64>
where
    F: Fn(&ComplexPoint) -> C64 + Sync,
{
    let values: Vec<C64> = rule
        .nodes
        .par_iter()
        .zip(rule.weights.par_iter())
        .map(|(p, w)| integrand(p) * *w)
        .collect();
    check_finite(&values, rule)?;
    Ok(compensated_sum(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn one(_: &ComplexPoint) -> C64 {
        C64::new(1.0, 0.0)
    }

    #[test]
    fn legendre_and_hermite_basic_moments() {
        let (x, w) = gauss_legendre(7);
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
        let m6: f64 = x.iter().zip(&w).map(|(t, v)| t.powi(6) * v).sum();
        assert_abs_diff_eq!(m6, 2.0 / 7.0, epsilon = 1e-14);
        let (x, w) = gauss_hermite(12);
        assert_abs_diff_eq!(w.iter().sum::<f64>(), PI.sqrt(), epsilon = 1e-14);
        let m4: f64 = x.iter().zip(&w).map(|(t, v)| t.powi(4) * v).sum();
        assert_abs_diff_eq!(m4, 0.75 * PI.sqrt(), epsilon = 1e-13);
    }

    #[test]
    fn gaussian_plane_integral() {
        let r = build_rule(RegionSpec::GaussianPlane { n: 1, scale: 1.0 }, 20).unwrap();
        let v = integrate(&r, |p| C64::new((-p.norm_sqr()).exp(), 0.0)).unwrap();
        assert_abs_diff_eq!(v.re, PI, epsilon = 1e-12);
        let r = build_rule(RegionSpec::GaussianPlane { n: 1, scale: 0.125 }, 20).unwrap();
        let v = integrate(&r, |p| C64::new((-p.norm_sqr() / 8.0).exp(), 0.0)).unwrap();
        assert_abs_diff_eq!(v.re, 8.0 * PI, epsilon = 1e-11);
    }

    #[test]
    fn cube_and_ball_volumes() {
        let r = build_rule(RegionSpec::CubeS { n: 1 }, 4).unwrap();
        assert_eq!(r.len(), 16);
        assert_abs_diff_eq!(integrate(&r, one).unwrap().re, 1.0, epsilon = 1e-14);
        let r = build_rule(RegionSpec::CubeS { n: 2 }, 3).unwrap();
        assert_eq!(r.len(), 81);
        assert_abs_diff_eq!(integrate(&r, one).unwrap().re, 1.0, epsilon = 1e-14);

        let ball = RegionSpec::Ball {
            center: ComplexPoint::planar(0.0, 0.0),
            radius: 1.0,
        };
        let r = build_rule(ball, 16).unwrap();
        let v = integrate(&r, |p| C64::new((-p.norm_sqr()).exp(), 0.0)).unwrap();
        assert_abs_diff_eq!(v.re, PI * (1.0 - (-1f64).exp()), epsilon = 1e-10);
    }

    #[test]
    fn hopf_ball_volume() {
        let ball = RegionSpec::Ball {
            center: ComplexPoint::origin(2).unwrap(),
            radius: 1.5,
        };
        let r = build_rule(ball.clone(), 4).unwrap();
        assert_abs_diff_eq!(
            integrate(&r, one).unwrap().re,
            ball.measure().unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn annulus_tail_of_gaussian() {
        let region = RegionSpec::annulus_tail(ComplexPoint::planar(0.0, 0.0), 2.0);
        let r = build_rule(region, 40).unwrap();
        let v = integrate(&r, |p| C64::new((-p.norm_sqr() / 2.0).exp(), 0.0)).unwrap();
        assert_abs_diff_eq!(v.re, 2.0 * PI * (-2f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn invalid_inputs() {
        assert!(matches!(
            build_rule(RegionSpec::CubeS { n: 1 }, 1),
            Err(Error::InvalidOrder(1))
        ));
        assert!(build_rule(RegionSpec::CubeS { n: 3 }, 4).is_err());
        assert!(build_rule(
            RegionSpec::Ball {
                center: ComplexPoint::planar(0.0, 0.0),
                radius: 0.0
            },
            4
        )
        .is_err());
        assert!(build_rule(RegionSpec::GaussianPlane { n: 1, scale: -1.0 }, 4).is_err());
    }

    #[test]
    fn non_finite_integrand_names_the_node() {
        let r = build_rule(RegionSpec::CubeS { n: 1 }, 2).unwrap();
        let err = integrate(&r, |p| {
            if p.coords()[0].re > 0.5 && p.coords()[0].im > 0.5 {
                C64::new(f64::NAN, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .unwrap_err();
        assert!(matches!(err, Error::NonFiniteIntegrand { index: 3, .. }));
    }

    #[test]
    fn recentering_moves_nodes() {
        let r = build_rule(
            RegionSpec::Ball {
                center: ComplexPoint::planar(0.0, 0.0),
                radius: 0.5,
            },
            6,
        )
        .unwrap();
        let c = ComplexPoint::planar(2.0, -1.0);
        let s = r.recentered(c).unwrap();
        let mean = integrate(&s, |p| p.coords()[0]).unwrap() / s.weights().iter().sum::<f64>();
        assert!((mean - c.coords()[0]).norm() < 1e-14);
        let cube = build_rule(RegionSpec::CubeS { n: 1 }, 2).unwrap();
        assert!(cube.recentered(c).is_err());
    }
}
