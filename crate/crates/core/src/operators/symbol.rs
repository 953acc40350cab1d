//! Bounded symbols and their Toeplitz matrices.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{kernel_matrix, BasisSpec, ComplexPoint, MultiIndex, C64};
use crate::quadrature::{build_rule, QuadratureRule, RegionSpec};
use crate::special::poisson_upper_tail;

use super::{op_norm, OperatorMatrix};

/// Nodes per block when summing node contributions.
const NODE_BLOCK: usize = 512;
const SHAPE_TOL: f64 = 1e-12;

/// Radial profiles g(|ζ|²) with closed-form Toeplitz diagonals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "kebab-case")]
pub enum RadialProfile {
    Constant { value: f64 },
    /// Indicator of the ball |ζ| < radius.
    Indicator { radius: f64 },
    /// e^{−rate·|ζ|²}.
    Gaussian { rate: f64 },
}

/// coeff · ζ^{z_pow} · conj(ζ)^{zbar_pow}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyTerm {
    pub coeff: C64,
    pub z_pow: MultiIndex,
    pub zbar_pow: MultiIndex,
}

impl PolyTerm {
    fn eval(&self, p: &ComplexPoint) -> C64 {
        let mut v = self.coeff;
        for ((c, &a), &b) in p.coords().iter().zip(self.z_pow.entries()).zip(self.zbar_pow.entries()) {
            v *= c.powu(a) * c.conj().powu(b);
        }
        v
    }

    fn degree(&self) -> u32 {
        self.z_pow.order() + self.zbar_pow.order()
    }
}

/// A grid-sampled symbol on ℂ, bilinear between grid nodes and zero outside
/// the grid rectangle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledSymbol {
    pub x0: f64,
    pub y0: f64,
    pub step: f64,
    pub nx: usize,
    pub ny: usize,
    /// Row-major in y: value (ix, iy) sits at index iy·nx + ix.
    pub values: Vec<C64>,
}

impl SampledSymbol {
    pub fn from_fn<F: Fn(f64, f64) -> C64>(
        x0: f64,
        y0: f64,
        step: f64,
        nx: usize,
        ny: usize,
        f: F,
    ) -> Self {
        let mut values = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            for ix in 0..nx {
                values.push(f(x0 + ix as f64 * step, y0 + iy as f64 * step));
            }
        }
        Self {
            x0,
            y0,
            step,
            nx,
            ny,
            values,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.ny < 2 || !(self.step > 0.0) || self.values.len() != self.nx * self.ny {
            return Err(Error::InvalidSymbol(format!(
                "sampled grid needs nx, ny ≥ 2, step > 0 and nx·ny values (nx={}, ny={}, step={}, {} values)",
                self.nx,
                self.ny,
                self.step,
                self.values.len()
            )));
        }
        Ok(())
    }

    pub fn value(&self, x: f64, y: f64) -> C64 {
        let fx = (x - self.x0) / self.step;
        let fy = (y - self.y0) / self.step;
        let (mx, my) = ((self.nx - 1) as f64, (self.ny - 1) as f64);
        if !(0.0..=mx).contains(&fx) || !(0.0..=my).contains(&fy) {
            return C64::new(0.0, 0.0);
        }
        let ix = (fx.floor() as usize).min(self.nx - 2);
        let iy = (fy.floor() as usize).min(self.ny - 2);
        let (tx, ty) = (fx - ix as f64, fy - iy as f64);
        let at = |i: usize, j: usize| self.values[j * self.nx + i];
        at(ix, iy) * (1.0 - tx) * (1.0 - ty)
            + at(ix + 1, iy) * tx * (1.0 - ty)
            + at(ix, iy + 1) * (1.0 - tx) * ty
            + at(ix + 1, iy + 1) * tx * ty
    }
}

/// Bounded symbols f on ℂⁿ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SymbolSpec {
    Radial { profile: RadialProfile },
    /// Σ c_u χ_{B(u, radius)} over pairwise disjoint balls.
    IndicatorBalls {
        centers: Vec<ComplexPoint>,
        radius: f64,
        coeffs: Vec<C64>,
    },
    /// e^{−decay·|ζ|²} Σ terms.
    PolyGaussian { terms: Vec<PolyTerm>, decay: f64 },
    /// Grid samples on ℂ (n = 1 only).
    Sampled(SampledSymbol),
}

impl SymbolSpec {
    /// Checks internal consistency for dimension n.
    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSymbol(m));
        match self {
            SymbolSpec::Radial { profile } => match profile {
                RadialProfile::Constant { value } if !value.is_finite() => bad("non-finite constant".into()),
                RadialProfile::Indicator { radius } if !(*radius > 0.0 && radius.is_finite()) => {
                    bad(format!("indicator radius must be positive, got {radius}"))
                }
                RadialProfile::Gaussian { rate } if !(*rate >= 0.0 && rate.is_finite()) => {
                    bad(format!("gaussian rate must be non-negative, got {rate}"))
                }
                _ => Ok(()),
            },
            SymbolSpec::IndicatorBalls {
                centers,
                radius,
                coeffs,
            } => {
                if centers.len() != coeffs.len() {
                    return bad(format!("{} centers but {} coefficients", centers.len(), coeffs.len()));
                }
                if !(*radius > 0.0 && radius.is_finite()) {
                    return bad(format!("ball radius must be positive, got {radius}"));
                }
                for c in centers {
                    c.ensure_dim(n)?;
                }
                for (i, a) in centers.iter().enumerate() {
                    for b in &centers[i + 1..] {
                        if a.distance(b) < 2.0 * radius {
                            return bad(format!("balls at {a} and {b} overlap"));
                        }
                    }
                }
                Ok(())
            }
            SymbolSpec::PolyGaussian { terms, decay } => {
                if !(*decay >= 0.0 && decay.is_finite()) {
                    return bad(format!("decay must be non-negative, got {decay}"));
                }
                for t in terms {
                    if t.z_pow.dim() != n || t.zbar_pow.dim() != n {
                        return bad("polynomial term dimension differs from the basis".into());
                    }
                    if *decay == 0.0 && t.degree() > 0 {
                        return bad("unbounded polynomial symbol (decay 0)".into());
                    }
                }
                Ok(())
            }
            SymbolSpec::Sampled(s) => {
                if n != 1 {
                    return bad("sampled symbols are defined on ℂ only".into());
                }
                s.validate()
            }
        }
    }

    /// An upper bound for sup |f|.
    pub fn sup_norm(&self) -> f64 {
        match self {
            SymbolSpec::Radial { profile } => match profile {
                RadialProfile::Constant { value } => value.abs(),
                RadialProfile::Indicator { .. } | RadialProfile::Gaussian { .. } => 1.0,
            },
            SymbolSpec::IndicatorBalls { coeffs, .. } => {
                coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
            }
            SymbolSpec::PolyGaussian { terms, decay } => terms
                .iter()
                .map(|t| {
                    // sup_r r^m e^{−a r²} = (m/(2a))^{m/2} e^{−m/2}, per coordinate
                    let per: f64 = t
                        .z_pow
                        .entries()
                        .iter()
                        .zip(t.zbar_pow.entries())
                        .map(|(&p, &q)| {
                            let m = (p + q) as f64;
                            if m == 0.0 {
                                1.0
                            } else {
                                (m / (2.0 * decay)).powf(m / 2.0) * (-m / 2.0).exp()
                            }
                        })
                        .product();
                    t.coeff.norm() * per
                })
                .sum(),
            SymbolSpec::Sampled(s) => s.values.iter().map(|c| c.norm()).fold(0.0, f64::max),
        }
    }

    /// Pointwise value f(ζ).
    pub fn value(&self, p: &ComplexPoint) -> C64 {
        match self {
            SymbolSpec::Radial { profile } => {
                let t = p.norm_sqr();
                C64::new(
                    match profile {
                        RadialProfile::Constant { value } => *value,
                        RadialProfile::Indicator { radius } => {
                            if t < radius * radius {
                                1.0
                            } else {
                                0.0
                            }
                        }
                        RadialProfile::Gaussian { rate } => (-rate * t).exp(),
                    },
                    0.0,
                )
            }
            SymbolSpec::IndicatorBalls {
                centers,
                radius,
                coeffs,
            } => centers
                .iter()
                .zip(coeffs)
                .find(|(c, _)| c.distance(p) < *radius)
                .map(|(_, v)| *v)
                .unwrap_or(C64::new(0.0, 0.0)),
            SymbolSpec::PolyGaussian { terms, decay } => {
                let g = (-decay * p.norm_sqr()).exp();
                terms.iter().map(|t| t.eval(p)).sum::<C64>() * g
            }
            SymbolSpec::Sampled(s) => {
                let c = p.coords()[0];
                s.value(c.re, c.im)
            }
        }
    }

    /// The quadrature region a Toeplitz build of this symbol expects.
    pub fn natural_region(&self, n: usize) -> Result<RegionSpec> {
        Ok(match self {
            SymbolSpec::Radial { .. } | SymbolSpec::Sampled(_) => RegionSpec::CubeS { n },
            SymbolSpec::IndicatorBalls { radius, .. } => RegionSpec::Ball {
                center: ComplexPoint::origin(n)?,
                radius: *radius,
            },
            SymbolSpec::PolyGaussian { decay, .. } => RegionSpec::GaussianPlane {
                n,
                scale: 1.0 + decay,
            },
        })
    }
}

/// Σ_j a_j P_D k_{p_j} ⊗ P_D k_{p_j}, summed block by block in a fixed order.
pub(crate) fn weighted_kernel_sum(
    basis: &BasisSpec,
    points: &[ComplexPoint],
    coeffs: &[C64],
) -> Result<DMatrix<C64>> {
    let blocks: Vec<Result<DMatrix<C64>>> = points
        .par_chunks(NODE_BLOCK)
        .zip(coeffs.par_chunks(NODE_BLOCK))
        .map(|(ps, cs)| {
            let k = kernel_matrix(ps, basis)?;
            let mut scaled = k.clone();
            for (j, c) in cs.iter().enumerate() {
                let col = scaled.column(j) * *c;
                scaled.set_column(j, &col);
            }
            Ok(scaled * k.adjoint())
        })
        .collect();
    let mut acc = DMatrix::zeros(basis.size(), basis.size());
    for b in blocks {
        acc += b?;
    }
    Ok(acc)
}

fn radial_diagonal(profile: &RadialProfile, basis: &BasisSpec) -> DMatrix<C64> {
    let n = basis.n() as u32;
    let diag = basis.indices().iter().map(|a| {
        let m = a.order() + n - 1;
        C64::new(
            match profile {
                RadialProfile::Constant { value } => *value,
                RadialProfile::Indicator { radius } => poisson_upper_tail(radius * radius, m),
                RadialProfile::Gaussian { rate } => (1.0 + rate).powi(-((m + 1) as i32)),
            },
            0.0,
        )
    });
    DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(basis.size(), diag))
}

fn incompatible(symbol: &str, rule: &QuadratureRule) -> Error {
    Error::IncompatibleRule(format!("{symbol} symbol cannot use a {:?} rule", rule.region()))
}

/// Toeplitz matrix of a bounded symbol. Radial profiles use closed forms and
/// ignore the rule; indicator balls need a ball rule of the same radius
/// (re-centred on every ball); polynomial-Gaussian symbols need the Gaussian
/// plane with scale 1 + decay; sampled symbols need the cube rule, mapped onto
/// each grid cell.
pub fn toeplitz_matrix(
    symbol: &SymbolSpec,
    basis: &BasisSpec,
    rule: &QuadratureRule,
) -> Result<OperatorMatrix> {
    let n = basis.n();
    symbol.validate(n)?;
    if rule.region().n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: rule.region().n(),
        });
    }
    let norm = PI.powi(-(n as i32));
    let entries = match symbol {
        SymbolSpec::Radial { profile } => radial_diagonal(profile, basis),
        SymbolSpec::IndicatorBalls {
            centers,
            radius,
            coeffs,
        } => {
            let r = match rule.region() {
                RegionSpec::Ball { radius: r, .. } => *r,
                _ => return Err(incompatible("indicator-ball", rule)),
            };
            if (r - radius).abs() > SHAPE_TOL * radius {
                return Err(Error::IncompatibleRule(format!(
                    "ball rule radius {r} differs from symbol radius {radius}"
                )));
            }
            let parts: Vec<Result<DMatrix<C64>>> = centers
                .par_iter()
                .zip(coeffs.par_iter())
                .map(|(c, v)| {
                    if *v == C64::new(0.0, 0.0) {
                        return Ok(DMatrix::zeros(basis.size(), basis.size()));
                    }
                    let local = rule.recentered(*c)?;
                    let a: Vec<C64> = local.weights().iter().map(|w| *v * (w * norm)).collect();
                    weighted_kernel_sum(basis, local.nodes(), &a)
                })
                .collect();
            let mut acc = DMatrix::zeros(basis.size(), basis.size());
            for p in parts {
                acc += p?;
            }
            acc
        }
        SymbolSpec::PolyGaussian { decay, .. } => {
            let s = match rule.region() {
                RegionSpec::GaussianPlane { scale, .. } => *scale,
                _ => return Err(incompatible("poly-gaussian", rule)),
            };
            if (s - (1.0 + decay)).abs() > SHAPE_TOL * (1.0 + decay) {
                return Err(Error::IncompatibleRule(format!(
                    "gaussian-plane scale {s} must equal 1 + decay = {}",
                    1.0 + decay
                )));
            }
            let a: Vec<C64> = rule
                .nodes()
                .iter()
                .zip(rule.weights())
                .map(|(p, w)| symbol.value(p) * (w * norm))
                .collect();
            weighted_kernel_sum(basis, rule.nodes(), &a)?
        }
        SymbolSpec::Sampled(grid) => {
            if !matches!(rule.region(), RegionSpec::CubeS { .. }) {
                return Err(incompatible("sampled", rule));
            }
            let h = grid.step;
            let mut points = Vec::new();
            let mut a = Vec::new();
            for iy in 0..grid.ny - 1 {
                for ix in 0..grid.nx - 1 {
                    let (cx, cy) = (grid.x0 + ix as f64 * h, grid.y0 + iy as f64 * h);
                    for (p, w) in rule.nodes().iter().zip(rule.weights()) {
                        let c = p.coords()[0];
                        let q = ComplexPoint::planar(cx + h * c.re, cy + h * c.im);
                        points.push(q);
                        a.push(symbol.value(&q) * (w * h * h * norm));
                    }
                }
            }
            weighted_kernel_sum(basis, &points, &a)?
        }
    };
    OperatorMatrix::new(basis.clone(), entries)
}

/// ‖T(rule) − T(refined rule)‖ where the refined rule has half again the
/// order; zero for closed-form radial symbols.
pub fn toeplitz_refinement_gap(
    symbol: &SymbolSpec,
    basis: &BasisSpec,
    rule: &QuadratureRule,
) -> Result<f64> {
    if matches!(symbol, SymbolSpec::Radial { .. }) {
        return Ok(0.0);
    }
    let coarse = toeplitz_matrix(symbol, basis, rule)?;
    let order = rule.order() + (rule.order() / 2).max(2);
    let fine_rule = build_rule(rule.region().clone(), order)?;
    let fine = toeplitz_matrix(symbol, basis, &fine_rule)?;
    Ok(op_norm(&(coarse.entries() - fine.entries())).value)
}
