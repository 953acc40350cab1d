//! Localization diagnostics: kernel-coefficient integrals over the plane and
//! over annular tails, the Gaussian off-diagonal bound of Toeplitz operators,
//! and power-law tail bounds.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{kernel_coeffs, kernel_matrix, kernel_tail_norm, BasisSpec, ComplexPoint, C64};
use crate::operators::{toeplitz_matrix, toeplitz_refinement_gap, KernelProbe, OperatorMatrix, SymbolSpec};
use crate::quadrature::{build_rule, gauss_legendre, RegionSpec, ANNULUS_REACH};
use crate::special::factorial;
use crate::tolerances::KERNEL_ROUNDING;

/// Length of the radial interval used to bound the integrand beyond R_max.
const ENVELOPE_REACH: f64 = 40.0;
const ENVELOPE_PANELS: usize = 80;
const ENVELOPE_ORDER: usize = 8;

/// Area of the unit sphere in ℝ^{2n}: dV = c_n ρ^{2n−1} dρ dσ.
pub fn sphere_constant(n: usize) -> f64 {
    2.0 * PI.powi(n as i32) / factorial(n as u32 - 1)
}

/// One row of a tail profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub r: f64,
    pub tail: f64,
    pub budget: f64,
}

/// Grid-sup integrals for one of B, B*.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SideProfile {
    /// max over the grid of ∫ |⟨B k_z, k_w⟩| dV(w).
    pub total: f64,
    pub total_budget: f64,
    /// Grid point attaining the total.
    pub argmax: ComplexPoint,
    pub tails: Vec<ProfileRow>,
}

/// The four weak-localization integrals with sup over z replaced by a max over
/// a finite grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationReport {
    pub grid: Vec<ComplexPoint>,
    pub radii: Vec<f64>,
    pub order: usize,
    pub operator: SideProfile,
    pub adjoint: SideProfile,
}

/// Rigorous bound for ∫_{|w| ≥ ρ₀} |⟨a, P_D k_w⟩| dV(w), using
/// |c_α(k_w)| ≤ e^{−|w|²/2}|w|^{|α|}/√(α!).
fn envelope_tail(a: &DVector<C64>, basis: &BasisSpec, rho0: f64) -> f64 {
    let n = basis.n();
    let weights: Vec<(u32, f64)> = basis
        .indices()
        .iter()
        .zip(a.iter())
        .map(|(al, c)| (al.order(), c.norm() * (-0.5 * al.ln_factorial()).exp()))
        .collect();
    let (x, w) = gauss_legendre(ENVELOPE_ORDER);
    let h = ENVELOPE_REACH / ENVELOPE_PANELS as f64;
    let mut total = 0.0;
    for p in 0..ENVELOPE_PANELS {
        let lo = rho0 + p as f64 * h;
        for (t, wt) in x.iter().zip(&w) {
            let rho: f64 = lo + 0.5 * h * (t + 1.0);
            let env: f64 = weights
                .iter()
                .map(|(m, c)| c * (*m as f64 * rho.ln() - 0.5 * rho * rho).exp())
                .sum();
            total += 0.5 * h * wt * rho.powi(2 * n as i32 - 1) * env;
        }
    }
    sphere_constant(n) * total
}

struct PointProfile {
    total: f64,
    total_budget: f64,
    tails: Vec<(f64, f64)>,
}

fn profile_at(
    b: &OperatorMatrix,
    norm: f64,
    z: &ComplexPoint,
    radii: &[f64],
    order: usize,
) -> Result<PointProfile> {
    let basis = b.basis();
    let kz = kernel_coeffs(z, basis)?;
    let a = b.entries() * kz.vector.coeffs();
    let tz = kz.tail_norm();
    let r_max = radii.last().copied().unwrap_or(0.0).max(z.norm()) + ANNULUS_REACH;
    let mut breaks = vec![0.0];
    breaks.extend_from_slice(radii);
    breaks.push(r_max);
    // piece k covers [breaks[k], breaks[k+1]]
    let mut pieces = Vec::with_capacity(breaks.len() - 1);
    for k in 0..breaks.len() - 1 {
        if breaks[k + 1] <= breaks[k] {
            pieces.push((0.0, 0.0));
            continue;
        }
        let region = RegionSpec::AnnulusTail {
            center: *z,
            inner: breaks[k],
            outer: breaks[k + 1],
        };
        let rule = build_rule(region, order)?;
        let km = kernel_matrix(rule.nodes(), basis)?;
        let coeffs = km.adjoint() * &a;
        let mut value = 0.0;
        let mut budget = 0.0;
        for ((c, w), p) in coeffs.iter().zip(rule.weights()).zip(rule.nodes()) {
            value += w * c.norm();
            budget += w * norm * (tz + kernel_tail_norm(p, basis.degree()));
        }
        pieces.push((value, budget));
    }
    let outside = envelope_tail(&a, basis, r_max - z.norm());
    let mut tails = vec![(0.0, 0.0); breaks.len() - 1];
    let (mut v, mut bud) = (0.0, outside);
    for k in (0..pieces.len()).rev() {
        v += pieces[k].0;
        bud += pieces[k].1;
        tails[k] = (v, bud);
    }
    Ok(PointProfile {
        total: tails[0].0,
        total_budget: tails[0].1,
        tails: tails[1..].to_vec(),
    })
}

fn side(b: &OperatorMatrix, grid: &[ComplexPoint], radii: &[f64], order: usize) -> Result<SideProfile> {
    let norm = b.op_norm().value;
    let per: Vec<Result<PointProfile>> = grid
        .par_iter()
        .map(|z| profile_at(b, norm, z, radii, order))
        .collect();
    let mut total = f64::NEG_INFINITY;
    let mut total_budget = 0.0f64;
    let mut argmax = grid[0];
    let mut tails: Vec<ProfileRow> = radii
        .iter()
        .map(|&r| ProfileRow {
            r,
            tail: 0.0,
            budget: 0.0,
        })
        .collect();
    for (z, p) in grid.iter().zip(per) {
        let p = p?;
        if p.total > total {
            total = p.total;
            argmax = *z;
        }
        total_budget = total_budget.max(p.total_budget);
        for (row, (t, bud)) in tails.iter_mut().zip(p.tails) {
            row.tail = row.tail.max(t);
            row.budget = row.budget.max(bud);
        }
    }
    Ok(SideProfile {
        total,
        total_budget,
        argmax,
        tails,
    })
}

/// Grid-sup of ∫|⟨B k_z, k_w⟩| dV(w) over ℂⁿ and over {|w − z| ≥ r}, for B
/// and B*. The w-integral is cut at R_max = max(r_last, |z|) + 8 and the
/// discarded part is bounded analytically.
pub fn wl_profile(
    b: &OperatorMatrix,
    grid: &[ComplexPoint],
    radii: &[f64],
    order: usize,
) -> Result<LocalizationReport> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty z-grid".into()));
    }
    for z in grid {
        z.ensure_dim(b.basis().n())?;
    }
    if radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) || radii.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::InvalidParameter(
            "radii must be positive and strictly ascending".into(),
        ));
    }
    Ok(LocalizationReport {
        grid: grid.to_vec(),
        radii: radii.to_vec(),
        order,
        operator: side(b, grid, radii, order)?,
        adjoint: side(&b.adjoint(), grid, radii, order)?,
    })
}

/// Deterministic pairs (z, w) drawn uniformly from the ball of the given
/// radius in ℂⁿ.
pub fn sample_pairs(n: usize, count: usize, radius: f64, seed: u64) -> Result<Vec<(ComplexPoint, ComplexPoint)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> Result<ComplexPoint> {
        loop {
            let real: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(-radius..=radius)).collect();
            let p = ComplexPoint::from_real(&real)?;
            if p.norm() <= radius {
                return Ok(p);
            }
        }
    };
    (0..count).map(|_| Ok((draw()?, draw()?))).collect()
}

/// One evaluation of the Gaussian off-diagonal bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundSample {
    pub z: ComplexPoint,
    pub w: ComplexPoint,
    pub value: f64,
    pub bound: f64,
    pub budget: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianBoundReport {
    pub sup_norm: f64,
    pub quadrature_gap: f64,
    pub samples: Vec<BoundSample>,
    /// Indices of samples with value > bound + budget.
    pub violations: Vec<usize>,
    /// min over samples of bound + budget − value.
    pub worst_margin: f64,
    /// min over samples of bound − value.
    pub worst_raw_margin: f64,
}

impl GaussianBoundReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks |⟨T_f k_z, k_w⟩| ≤ (√2)ⁿ‖f‖_∞ e^{−|z−w|²/8} + budget on samples.
pub fn gaussian_bound_check(
    symbol: &SymbolSpec,
    basis: &BasisSpec,
    order: usize,
    samples: &[(ComplexPoint, ComplexPoint)],
) -> Result<GaussianBoundReport> {
    let n = basis.n();
    let rule = build_rule(symbol.natural_region(n)?, order)?;
    let t = toeplitz_matrix(symbol, basis, &rule)?;
    let gap = toeplitz_refinement_gap(symbol, basis, &rule)?;
    let sup = symbol.sup_norm();
    let probe = KernelProbe::new(&t);
    let scale = SQRT_2.powi(n as i32) * sup;
    let mut out = Vec::with_capacity(samples.len());
    let mut violations = Vec::new();
    let mut worst = f64::INFINITY;
    let mut worst_raw = f64::INFINITY;
    for (i, (z, w)) in samples.iter().enumerate() {
        let c = probe.at(z, w)?;
        let s = BoundSample {
            z: *z,
            w: *w,
            value: c.value.norm(),
            bound: scale * (-(*z - *w).norm_sqr() / 8.0).exp(),
            budget: c.budget + gap + KERNEL_ROUNDING,
        };
        if s.value > s.bound + s.budget {
            violations.push(i);
        }
        worst = worst.min(s.bound + s.budget - s.value);
        worst_raw = worst_raw.min(s.bound - s.value);
        out.push(s);
    }
    Ok(GaussianBoundReport {
        sup_norm: sup,
        quadrature_gap: gap,
        samples: out,
        violations,
        worst_margin: worst,
        worst_raw_margin: worst_raw,
    })
}

/// Constants of a power-law coefficient bound |⟨Bk_z,k_w⟩| ≤ C(1+|z−w|)^{−β}.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SLCertificate {
    constant: f64,
    exponent: f64,
}

impl SLCertificate {
    /// Requires C > 0 and β > 2n.
    pub fn new(constant: f64, exponent: f64, n: usize) -> Result<Self> {
        if !(constant > 0.0 && constant.is_finite()) {
            return Err(Error::InvalidParameter(format!("constant must be positive, got {constant}")));
        }
        if !(exponent > 2.0 * n as f64 && exponent.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "exponent {exponent} must exceed 2n = {}; the tail integral diverges",
                2 * n
            )));
        }
        Ok(Self { constant, exponent })
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    fn check(&self, n: usize, r: f64) -> Result<()> {
        if !(self.exponent > 2.0 * n as f64) {
            return Err(Error::InvalidParameter(format!(
                "certificate exponent {} does not exceed 2n = {}",
                self.exponent,
                2 * n
            )));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidParameter(format!("radius must be positive, got {r}")));
        }
        Ok(())
    }
}

/// C·c_n/(β−2n)·r^{−(β−2n)}, an upper bound for ∫_{|ζ|≥r} C(1+|ζ|)^{−β} dV.
pub fn sl_tail_bound(cert: &SLCertificate, n: usize, r: f64) -> Result<f64> {
    cert.check(n, r)?;
    let p = cert.exponent - 2.0 * n as f64;
    Ok(cert.constant * sphere_constant(n) / p * r.powf(-p))
}

/// ∫_{|ζ|≥r} C(1+|ζ|)^{−β} dV computed numerically. With x = 1/(1+ρ) the
/// integral is C c_n ∫_0^{1/(1+r)} (1−x)^{2n−1} x^{β−2n−1} dx, evaluated by
/// Gauss–Legendre on panels graded geometrically toward 0.
pub fn sl_tail_numeric(cert: &SLCertificate, n: usize, r: f64, order: usize) -> Result<f64> {
    cert.check(n, r)?;
    if order < 2 {
        return Err(Error::InvalidOrder(order));
    }
    let (x, w) = gauss_legendre(order);
    let top = 1.0 / (1.0 + r);
    let power = cert.exponent - 2.0 * n as f64 - 1.0;
    let f = |t: f64| (1.0 - t).powi(2 * n as i32 - 1) * t.powf(power);
    let mut total = 0.0;
    let mut hi = top;
    for _ in 0..200 {
        let lo = 0.5 * hi;
        let piece: f64 = x
            .iter()
            .zip(&w)
            .map(|(t, wt)| 0.5 * (hi - lo) * wt * f(lo + 0.5 * (hi - lo) * (t + 1.0)))
            .sum();
        total += piece;
        hi = lo;
        if piece.abs() < 1e-18 * total.abs() {
            break;
        }
    }
    Ok(cert.constant * sphere_constant(n) * total)
}
