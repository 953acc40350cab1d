//! Truncated Fock space: multi-indices, the graded monomial basis, coefficient
//! vectors, kernels and the half-weight norm.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{ln_factorial, poisson_upper_tail};

pub type C64 = Complex64;

/// Largest supported complex dimension.
pub const MAX_DIM: usize = 2;

pub(crate) fn check_dim(n: usize) -> Result<()> {
    if (1..=MAX_DIM).contains(&n) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(n))
    }
}

/// A point of ℂⁿ. Inner product is linear in the first slot.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<[f64; 2]>", try_from = "Vec<[f64; 2]>")]
pub struct ComplexPoint {
    coords: [C64; MAX_DIM],
    dim: usize,
}

impl ComplexPoint {
    pub fn new(coords: &[C64]) -> Result<Self> {
        check_dim(coords.len())?;
        let mut c = [C64::new(0.0, 0.0); MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Ok(Self {
            coords: c,
            dim: coords.len(),
        })
    }

    /// The point x + iy of ℂ.
    pub fn planar(x: f64, y: f64) -> Self {
        Self::new(&[C64::new(x, y)]).expect("dimension 1 is supported")
    }

    pub fn origin(n: usize) -> Result<Self> {
        Self::new(&vec![C64::new(0.0, 0.0); n])
    }

    /// Builds a point from 2n real coordinates (x₁, y₁, x₂, y₂, ...).
    pub fn from_real(real: &[f64]) -> Result<Self> {
        if !real.len().is_multiple_of(2) {
            return Err(Error::DimensionMismatch {
                expected: 2 * (real.len() / 2 + 1),
                got: real.len(),
            });
        }
        let coords: Vec<C64> = real.chunks(2).map(|p| C64::new(p[0], p[1])).collect();
        Self::new(&coords)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[C64] {
        &self.coords[..self.dim]
    }

    pub fn real_coords(&self) -> Vec<f64> {
        self.coords().iter().flat_map(|c| [c.re, c.im]).collect()
    }

    /// ⟨self, other⟩ = Σ selfⱼ·conj(otherⱼ).
    pub fn inner(&self, other: &ComplexPoint) -> C64 {
        self.coords()
            .iter()
            .zip(other.coords())
            .map(|(a, b)| a * b.conj())
            .sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coords().iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn distance(&self, other: &ComplexPoint) -> f64 {
        (*self - *other).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.coords().iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub(crate) fn ensure_dim(&self, n: usize) -> Result<()> {
        if self.dim == n {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: n,
                got: self.dim,
            })
        }
    }
}

impl fmt::Debug for ComplexPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for ComplexPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (j, c) in self.coords().iter().enumerate() {
            if j > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}{:+}i", c.re, c.im)?;
        }
        write!(f, ")")
    }
}

impl From<ComplexPoint> for Vec<[f64; 2]> {
    fn from(p: ComplexPoint) -> Self {
        p.coords().iter().map(|c| [c.re, c.im]).collect()
    }
}

impl TryFrom<Vec<[f64; 2]>> for ComplexPoint {
    type Error = Error;
    fn try_from(v: Vec<[f64; 2]>) -> Result<Self> {
        let coords: Vec<C64> = v.iter().map(|p| C64::new(p[0], p[1])).collect();
        ComplexPoint::new(&coords)
    }
}

impl Add for ComplexPoint {
    type Output = ComplexPoint;
    fn add(self, rhs: ComplexPoint) -> ComplexPoint {
        assert_eq!(self.dim, rhs.dim, "point dimensions differ");
        let mut out = self;
        for j in 0..self.dim {
            out.coords[j] += rhs.coords[j];
        }
        out
    }
}

impl Sub for ComplexPoint {
    type Output = ComplexPoint;
    fn sub(self, rhs: ComplexPoint) -> ComplexPoint {
        self + (-rhs)
    }
}

impl Neg for ComplexPoint {
    type Output = ComplexPoint;
    fn neg(self) -> ComplexPoint {
        let mut out = self;
        for c in out.coords.iter_mut() {
            *c = -*c;
        }
        out
    }
}

impl Mul<f64> for ComplexPoint {
    type Output = ComplexPoint;
    fn mul(self, s: f64) -> ComplexPoint {
        let mut out = self;
        for c in out.coords.iter_mut() {
            *c *= s;
        }
        out
    }
}

impl Mul<C64> for ComplexPoint {
    type Output = ComplexPoint;
    fn mul(self, s: C64) -> ComplexPoint {
        let mut out = self;
        for c in out.coords.iter_mut() {
            *c *= s;
        }
        out
    }
}

/// A multi-index α ∈ ℕⁿ.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "Vec<u32>", try_from = "Vec<u32>")]
pub struct MultiIndex {
    entries: [u32; MAX_DIM],
    dim: usize,
}

impl MultiIndex {
    pub fn new(entries: &[u32]) -> Result<Self> {
        check_dim(entries.len())?;
        let mut e = [0; MAX_DIM];
        e[..entries.len()].copy_from_slice(entries);
        Ok(Self {
            entries: e,
            dim: entries.len(),
        })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(&vec![0; n])
    }

    /// The j-th unit multi-index.
    pub fn unit(n: usize, j: usize) -> Result<Self> {
        let mut e = vec![0; n];
        if j >= n {
            return Err(Error::InvalidParameter(format!(
                "unit index {j} out of range for n={n}"
            )));
        }
        e[j] = 1;
        Self::new(&e)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries[..self.dim]
    }

    /// |α| = Σ αⱼ.
    pub fn order(&self) -> u32 {
        self.entries().iter().sum()
    }

    /// ln(α!).
    pub fn ln_factorial(&self) -> f64 {
        self.entries().iter().map(|&a| ln_factorial(a)).sum()
    }

    pub fn checked_add(&self, other: &MultiIndex) -> Result<MultiIndex> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let mut out = *self;
        for j in 0..self.dim {
            out.entries[j] += other.entries[j];
        }
        Ok(out)
    }

    /// α − β when β ≤ α componentwise.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        if self.dim != other.dim {
            return None;
        }
        let mut out = *self;
        for j in 0..self.dim {
            out.entries[j] = self.entries[j].checked_sub(other.entries[j])?;
        }
        Some(out)
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.entries())
    }
}

impl From<MultiIndex> for Vec<u32> {
    fn from(a: MultiIndex) -> Self {
        a.entries().to_vec()
    }
}

impl TryFrom<Vec<u32>> for MultiIndex {
    type Error = Error;
    fn try_from(v: Vec<u32>) -> Result<Self> {
        MultiIndex::new(&v)
    }
}

/// ζ^α / √(α!) evaluated at a point.
pub fn normalized_monomial(zeta: &ComplexPoint, alpha: &MultiIndex) -> C64 {
    let mut value = C64::new((-0.5 * alpha.ln_factorial()).exp(), 0.0);
    for (z, &a) in zeta.coords().iter().zip(alpha.entries()) {
        value *= z.powu(a);
    }
    value
}

#[derive(Debug)]
struct BasisInner {
    n: usize,
    degree: u32,
    indices: Vec<MultiIndex>,
}

/// The normalized monomials e_α = ζ^α/√(α!) with |α| ≤ D in graded order:
/// by total degree, then by decreasing first exponent.
#[derive(Clone, Debug)]
pub struct BasisSpec(Arc<BasisInner>);

impl PartialEq for BasisSpec {
    fn eq(&self, other: &Self) -> bool {
        self.0.n == other.0.n && self.0.degree == other.0.degree
    }
}

impl BasisSpec {
    pub fn new(n: usize, degree: u32) -> Result<Self> {
        check_dim(n)?;
        let mut indices = Vec::new();
        for d in 0..=degree {
            match n {
                1 => indices.push(MultiIndex::new(&[d])?),
                _ => {
                    for a in (0..=d).rev() {
                        indices.push(MultiIndex::new(&[a, d - a])?);
                    }
                }
            }
        }
        Ok(Self(Arc::new(BasisInner {
            n,
            degree,
            indices,
        })))
    }

    pub fn n(&self) -> usize {
        self.0.n
    }

    pub fn degree(&self) -> u32 {
        self.0.degree
    }

    pub fn size(&self) -> usize {
        self.0.indices.len()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.0.indices
    }

    /// Number of basis elements with |α| ≤ m.
    pub fn prefix_len(&self, m: u32) -> usize {
        let m = m.min(self.degree()) as usize;
        match self.n() {
            1 => m + 1,
            _ => (m + 1) * (m + 2) / 2,
        }
    }

    /// Position of α in the ordering, if present.
    pub fn position(&self, alpha: &MultiIndex) -> Option<usize> {
        if alpha.dim() != self.n() || alpha.order() > self.degree() {
            return None;
        }
        let d = alpha.order() as usize;
        Some(match self.n() {
            1 => d,
            _ => d * (d + 1) / 2 + alpha.entries()[1] as usize,
        })
    }

    pub(crate) fn ensure_same(&self, other: &BasisSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::BasisMismatch {
                left_n: self.n(),
                left_degree: self.degree(),
                right_n: other.n(),
                right_degree: other.degree(),
            })
        }
    }
}

/// Coefficients of an entire function over the truncated basis.
#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    basis: BasisSpec,
    coeffs: DVector<C64>,
}

impl FockVector {
    pub fn new(basis: BasisSpec, coeffs: DVector<C64>) -> Result<Self> {
        if coeffs.len() != basis.size() {
            return Err(Error::DimensionMismatch {
                expected: basis.size(),
                got: coeffs.len(),
            });
        }
        Ok(Self { basis, coeffs })
    }

    pub fn zeros(basis: &BasisSpec) -> Self {
        Self {
            coeffs: DVector::zeros(basis.size()),
            basis: basis.clone(),
        }
    }

    /// The basis vector e_α.
    pub fn basis_vector(basis: &BasisSpec, alpha: &MultiIndex) -> Result<Self> {
        let pos = basis.position(alpha).ok_or(Error::DegreeOverflow {
            what: "basis vector",
            needed: alpha.order(),
            available: basis.degree(),
        })?;
        let mut v = Self::zeros(basis);
        v.coeffs[pos] = C64::new(1.0, 0.0);
        Ok(v)
    }

    pub fn basis(&self) -> &BasisSpec {
        &self.basis
    }

    pub fn coeffs(&self) -> &DVector<C64> {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> DVector<C64> {
        self.coeffs
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            basis: self.basis.clone(),
            coeffs: &self.coeffs * s,
        }
    }

    pub fn checked_add(&self, other: &FockVector) -> Result<Self> {
        self.basis.ensure_same(&other.basis)?;
        Ok(Self {
            basis: self.basis.clone(),
            coeffs: &self.coeffs + &other.coeffs,
        })
    }

    pub fn checked_sub(&self, other: &FockVector) -> Result<Self> {
        self.basis.ensure_same(&other.basis)?;
        Ok(Self {
            basis: self.basis.clone(),
            coeffs: &self.coeffs - &other.coeffs,
        })
    }
}

/// ⟨f, g⟩ = Σ c_α(f)·conj(c_α(g)).
pub fn inner_h2(f: &FockVector, g: &FockVector) -> Result<C64> {
    f.basis.ensure_same(&g.basis)?;
    Ok(f.coeffs
        .iter()
        .zip(g.coeffs.iter())
        .map(|(a, b)| a * b.conj())
        .sum())
}

/// The half-weight norm (∫|f|² e^{−|ζ|²/2} dV)^{1/2}, from coefficients.
pub fn norm_star(f: &FockVector) -> f64 {
    let n = f.basis.n() as i32;
    let sum: f64 = f
        .basis
        .indices()
        .iter()
        .zip(f.coeffs.iter())
        .map(|(a, c)| c.norm_sqr() * 2f64.powi(n + a.order() as i32))
        .sum();
    (PI.powi(n) * sum).sqrt()
}

/// Σ c_α ζ^α/√(α!).
pub fn eval_at(f: &FockVector, zeta: &ComplexPoint) -> Result<C64> {
    zeta.ensure_dim(f.basis.n())?;
    Ok(f.basis
        .indices()
        .iter()
        .zip(f.coeffs.iter())
        .map(|(a, c)| c * normalized_monomial(zeta, a))
        .sum())
}

/// ⟨k_z, k_w⟩ = e^{⟨w,z⟩ − (|z|²+|w|²)/2} for the untruncated kernels.
pub fn kernel_gram(z: &ComplexPoint, w: &ComplexPoint) -> C64 {
    (w.inner(z) - C64::new(0.5 * (z.norm_sqr() + w.norm_sqr()), 0.0)).exp()
}

/// ‖k_z‖_* = (2π)^{n/2} e^{|z|²/2} for the untruncated kernel.
pub fn kernel_norm_star(z: &ComplexPoint) -> f64 {
    (2.0 * PI).powf(z.dim() as f64 / 2.0) * (0.5 * z.norm_sqr()).exp()
}

/// Coefficients e^{−|c|²/2} conj(c)^d/√(d!) of the one-variable normalized
/// kernel, d = 0..=degree, built by a log-magnitude recurrence.
fn kernel_factor(c: C64, degree: u32) -> Vec<C64> {
    let mut out = Vec::with_capacity(degree as usize + 1);
    let r2 = c.norm_sqr();
    if r2 == 0.0 {
        out.push(C64::new(1.0, 0.0));
        out.resize(degree as usize + 1, C64::new(0.0, 0.0));
        return out;
    }
    let ln_r = 0.5 * r2.ln();
    let phase_step = c.conj() / r2.sqrt();
    let mut ln_mag = -0.5 * r2;
    let mut phase = C64::new(1.0, 0.0);
    out.push(C64::new(ln_mag.exp(), 0.0));
    for d in 1..=degree {
        ln_mag += ln_r - 0.5 * (d as f64).ln();
        phase *= phase_step;
        out.push(phase * ln_mag.exp());
    }
    out
}

/// Coefficient vector of P_D k_z as a plain column.
pub(crate) fn kernel_column(z: &ComplexPoint, basis: &BasisSpec) -> DVector<C64> {
    let factors: Vec<Vec<C64>> = z
        .coords()
        .iter()
        .map(|&c| kernel_factor(c, basis.degree()))
        .collect();
    DVector::from_iterator(
        basis.size(),
        basis.indices().iter().map(|a| {
            a.entries()
                .iter()
                .zip(&factors)
                .map(|(&e, f)| f[e as usize])
                .product::<C64>()
        }),
    )
}

/// Tail mass 1 − ‖P_D k_z‖² = P(Poisson(|z|²) > D).
pub fn kernel_tail_mass(z: &ComplexPoint, degree: u32) -> f64 {
    poisson_upper_tail(z.norm_sqr(), degree)
}

/// ‖(I − P_D) k_z‖.
pub fn kernel_tail_norm(z: &ComplexPoint, degree: u32) -> f64 {
    kernel_tail_mass(z, degree).max(0.0).sqrt()
}

/// A truncated normalized kernel together with its discarded mass.
#[derive(Clone, Debug)]
pub struct KernelVector {
    pub vector: FockVector,
    /// 1 − ‖P_D k_z‖², computed from the Poisson tail.
    pub tail_mass: f64,
}

impl KernelVector {
    pub fn tail_norm(&self) -> f64 {
        self.tail_mass.max(0.0).sqrt()
    }
}

/// P_D k_z with c_α = e^{−|z|²/2} conj(z)^α/√(α!).
pub fn kernel_coeffs(z: &ComplexPoint, basis: &BasisSpec) -> Result<KernelVector> {
    z.ensure_dim(basis.n())?;
    Ok(KernelVector {
        vector: FockVector::new(basis.clone(), kernel_column(z, basis))?,
        tail_mass: kernel_tail_mass(z, basis.degree()),
    })
}

/// Matrix whose columns are P_D k_p for the given points.
pub fn kernel_matrix(points: &[ComplexPoint], basis: &BasisSpec) -> Result<DMatrix<C64>> {
    let mut m = DMatrix::zeros(basis.size(), points.len());
    for (j, p) in points.iter().enumerate() {
        p.ensure_dim(basis.n())?;
        m.set_column(j, &kernel_column(p, basis));
    }
    Ok(m)
}

/// Truncated ζ^α K_z together with the norm of the discarded part.
#[derive(Clone, Debug)]
pub struct ShiftedKernel {
    pub vector: FockVector,
    /// ‖(I − P_D) ζ^α K_z‖ in the Fock norm.
    pub tail_norm: f64,
    /// The same tail in the half-weight norm of [`norm_star`].
    pub tail_norm_star: f64,
    /// True when |α| > D, so even the leading term is cut off.
    pub degree_overflow: bool,
}

impl ShiftedKernel {
    /// True when any mass was discarded.
    pub fn is_truncated(&self) -> bool {
        self.degree_overflow || self.tail_norm > 0.0
    }
}

/// ln of |coefficient of ζ^α K_z on e_γ|² = γ!|z^{γ−α}|²/((γ−α)!)², or None
/// when it vanishes.
fn shifted_ln_mag_sqr(z: &ComplexPoint, alpha: &MultiIndex, gamma: &MultiIndex) -> Option<f64> {
    let diff = gamma.checked_sub(alpha)?;
    let mut ln = gamma.ln_factorial() - 2.0 * diff.ln_factorial();
    for (c, &e) in z.coords().iter().zip(diff.entries()) {
        if e > 0 {
            if c.norm_sqr() == 0.0 {
                return None;
            }
            ln += e as f64 * c.norm_sqr().ln();
        }
    }
    Some(ln)
}

fn multi_indices_of_order(n: usize, s: u32) -> Vec<MultiIndex> {
    match n {
        1 => vec![MultiIndex::new(&[s]).expect("n=1")],
        _ => (0..=s)
            .rev()
            .map(|a| MultiIndex::new(&[a, s - a]).expect("n=2"))
            .collect(),
    }
}

/// P_D(ζ^α K_z): coefficient on e_γ is √(γ!) conj(z)^{γ−α}/(γ−α)!.
pub fn kernel_shifted_coeffs(
    z: &ComplexPoint,
    alpha: &MultiIndex,
    basis: &BasisSpec,
) -> Result<ShiftedKernel> {
    z.ensure_dim(basis.n())?;
    if alpha.dim() != basis.n() {
        return Err(Error::DimensionMismatch {
            expected: basis.n(),
            got: alpha.dim(),
        });
    }
    let zc: Vec<C64> = z.coords().iter().map(|c| c.conj()).collect();
    let coeffs = DVector::from_iterator(
        basis.size(),
        basis.indices().iter().map(|g| match g.checked_sub(alpha) {
            None => C64::new(0.0, 0.0),
            Some(diff) => {
                let mag = (0.5 * g.ln_factorial() - diff.ln_factorial()).exp();
                let mut v = C64::new(mag, 0.0);
                for (c, &e) in zc.iter().zip(diff.entries()) {
                    v *= c.powu(e);
                }
                v
            }
        }),
    );
    let head: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();

    // sum the discarded shells until they stop contributing
    let mut tail = 0.0;
    let mut tail_star = 0.0;
    let n = basis.n() as i32;
    let start = basis.degree().max(alpha.order().saturating_sub(1)) + 1;
    let settle = alpha.order() as f64 + 2.0 * z.norm_sqr() + 10.0;
    let mut s = start;
    loop {
        let shell: f64 = multi_indices_of_order(basis.n(), s)
            .iter()
            .filter_map(|g| shifted_ln_mag_sqr(z, alpha, g))
            .map(f64::exp)
            .sum();
        tail += shell;
        let star_shell = if shell == 0.0 {
            0.0
        } else {
            shell * PI.powi(n) * 2f64.powi(n + s as i32)
        };
        tail_star += star_shell;
        let total = head + tail;
        let settled = shell <= 1e-18 * total && star_shell <= 1e-18 * tail_star.max(f64::MIN_POSITIVE);
        if (s as f64 > settle && settled) || s > start + 4000 {
            break;
        }
        if total == 0.0 && s as f64 > settle {
            break;
        }
        s += 1;
    }
    Ok(ShiftedKernel {
        vector: FockVector::new(basis.clone(), coeffs)?,
        tail_norm: tail.sqrt(),
        tail_norm_star: tail_star.sqrt(),
        degree_overflow: alpha.order() > basis.degree(),
    })
}
