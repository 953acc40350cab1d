//! Operators on the truncated space: dense matrices, norms, kernel
//! coefficients, the Berezin transform, Toeplitz matrices and Weyl
//! translations.

mod symbol;
mod weyl;

pub(crate) use symbol::weighted_kernel_sum;
pub use symbol::{
    toeplitz_matrix, toeplitz_refinement_gap, PolyTerm, RadialProfile, SampledSymbol, SymbolSpec,
};
pub use weyl::{weyl_block, weyl_translate, WeylTranslation};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    inner_h2, kernel_coeffs, kernel_tail_mass, BasisSpec, ComplexPoint, FockVector, C64,
};

/// Largest dimension handled by a full singular value decomposition.
pub const SVD_MAX_DIM: usize = 400;
pub const POWER_TOL: f64 = 1e-10;
pub const POWER_MAX_ITER: usize = 5000;

/// Least retained kernel mass ‖P_D k_z‖² accepted by [`berezin`].
pub const BEREZIN_MIN_MASS: f64 = 0.5;

/// Dense matrix of an operator; entry (α, β) = ⟨B e_β, e_α⟩.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    basis: BasisSpec,
    entries: DMatrix<C64>,
}

impl OperatorMatrix {
    pub fn new(basis: BasisSpec, entries: DMatrix<C64>) -> Result<Self> {
        let d = basis.size();
        if entries.nrows() != d || entries.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: entries.nrows().max(entries.ncols()),
            });
        }
        if entries.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::InvalidParameter("operator has non-finite entries".into()));
        }
        Ok(Self { basis, entries })
    }

    pub fn identity(basis: &BasisSpec) -> Self {
        Self {
            entries: DMatrix::identity(basis.size(), basis.size()),
            basis: basis.clone(),
        }
    }

    pub fn zeros(basis: &BasisSpec) -> Self {
        Self {
            entries: DMatrix::zeros(basis.size(), basis.size()),
            basis: basis.clone(),
        }
    }

    pub fn basis(&self) -> &BasisSpec {
        &self.basis
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<C64> {
        self.entries
    }

    pub fn adjoint(&self) -> Self {
        Self {
            basis: self.basis.clone(),
            entries: self.entries.adjoint(),
        }
    }

    /// self ∘ other.
    pub fn compose(&self, other: &OperatorMatrix) -> Result<Self> {
        self.basis.ensure_same(&other.basis)?;
        Ok(Self {
            basis: self.basis.clone(),
            entries: &self.entries * &other.entries,
        })
    }

    pub fn checked_add(&self, other: &OperatorMatrix) -> Result<Self> {
        self.basis.ensure_same(&other.basis)?;
        Ok(Self {
            basis: self.basis.clone(),
            entries: &self.entries + &other.entries,
        })
    }

    pub fn checked_sub(&self, other: &OperatorMatrix) -> Result<Self> {
        self.basis.ensure_same(&other.basis)?;
        Ok(Self {
            basis: self.basis.clone(),
            entries: &self.entries - &other.entries,
        })
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            basis: self.basis.clone(),
            entries: &self.entries * s,
        }
    }

    pub fn apply(&self, f: &FockVector) -> Result<FockVector> {
        self.basis.ensure_same(f.basis())?;
        FockVector::new(self.basis.clone(), &self.entries * f.coeffs())
    }

    pub fn op_norm(&self) -> NormEstimate {
        op_norm(&self.entries)
    }

    /// Largest |B − B*| entry.
    pub fn hermitian_deviation(&self) -> f64 {
        (&self.entries - self.entries.adjoint()).camax()
    }

    /// Smallest eigenvalue of (B + B*)/2.
    pub fn min_eigenvalue_hermitian_part(&self) -> f64 {
        let h = (&self.entries + self.entries.adjoint()) * C64::new(0.5, 0.0);
        h.symmetric_eigenvalues().min()
    }

    /// Leading block on the sub-basis |α| ≤ m.
    pub fn restricted(&self, m: u32) -> DMatrix<C64> {
        let k = self.basis.prefix_len(m);
        self.entries.view((0, 0), (k, k)).into_owned()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormMethod {
    Svd,
    PowerIteration,
}

/// Largest singular value with its provenance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
    pub method: NormMethod,
}

/// Operator norm of any dense matrix (rectangular allowed).
pub fn op_norm(m: &DMatrix<C64>) -> NormEstimate {
    if m.nrows() == 0 || m.ncols() == 0 {
        return NormEstimate {
            value: 0.0,
            converged: true,
            iterations: 0,
            method: NormMethod::Svd,
        };
    }
    if m.nrows().min(m.ncols()) <= SVD_MAX_DIM {
        let s = m.clone().singular_values();
        NormEstimate {
            value: s.max(),
            converged: true,
            iterations: 0,
            method: NormMethod::Svd,
        }
    } else {
        power_iteration_norm(m, POWER_TOL, POWER_MAX_ITER)
    }
}

/// Power iteration on M*M from e₀ plus a fixed perturbation.
pub fn power_iteration_norm(m: &DMatrix<C64>, tol: f64, max_iter: usize) -> NormEstimate {
    let n = m.ncols();
    let mut v = DVector::from_fn(n, |k, _| {
        let p = 1e-2 * ((k + 1) as f64).cos();
        C64::new(if k == 0 { 1.0 + p } else { p }, 0.0)
    });
    v /= C64::new(v.norm(), 0.0);
    let mut sigma = 0.0;
    for it in 1..=max_iter {
        let mv = m * &v;
        let next = mv.norm();
        if next == 0.0 {
            return NormEstimate {
                value: 0.0,
                converged: true,
                iterations: it,
                method: NormMethod::PowerIteration,
            };
        }
        let w = m.adjoint() * mv;
        let wn = w.norm();
        v = w / C64::new(wn, 0.0);
        if (next - sigma).abs() <= tol * next {
            return NormEstimate {
                value: next,
                converged: true,
                iterations: it,
                method: NormMethod::PowerIteration,
            };
        }
        sigma = next;
    }
    NormEstimate {
        value: sigma,
        converged: false,
        iterations: max_iter,
        method: NormMethod::PowerIteration,
    }
}

/// (f ⊗ g) h = ⟨h, g⟩ f.
pub fn rank_one(f: &FockVector, g: &FockVector) -> Result<OperatorMatrix> {
    f.basis().ensure_same(g.basis())?;
    Ok(OperatorMatrix {
        basis: f.basis().clone(),
        entries: f.coeffs() * g.coeffs().adjoint(),
    })
}

/// A computed ⟨B k_z, k_w⟩ and the bound on its truncation error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelCoefficient {
    pub value: C64,
    pub budget: f64,
}

/// Evaluates ⟨B P_D k_z, P_D k_w⟩ repeatedly with one norm computation.
#[derive(Clone, Debug)]
pub struct KernelProbe<'a> {
    op: &'a OperatorMatrix,
    norm: f64,
}

impl<'a> KernelProbe<'a> {
    pub fn new(op: &'a OperatorMatrix) -> Self {
        Self {
            norm: op.op_norm().value,
            op,
        }
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn at(&self, z: &ComplexPoint, w: &ComplexPoint) -> Result<KernelCoefficient> {
        let basis = self.op.basis();
        let kz = kernel_coeffs(z, basis)?;
        let kw = kernel_coeffs(w, basis)?;
        let value = inner_h2(&self.op.apply(&kz.vector)?, &kw.vector)?;
        Ok(KernelCoefficient {
            value,
            budget: self.norm * (kz.tail_norm() + kw.tail_norm()),
        })
    }
}

/// ⟨B P_D k_z, P_D k_w⟩ with budget ‖B‖(tail(z) + tail(w)).
pub fn coeff_kernel(b: &OperatorMatrix, z: &ComplexPoint, w: &ComplexPoint) -> Result<KernelCoefficient> {
    KernelProbe::new(b).at(z, w)
}

/// Berezin value and its truncation budget ‖B‖(2√τ + 2τ), τ the tail mass.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BerezinValue {
    pub value: C64,
    pub budget: f64,
}

fn berezin_with_norm(b: &OperatorMatrix, z: &ComplexPoint, norm: f64) -> Result<BerezinValue> {
    let basis = b.basis();
    let k = kernel_coeffs(z, basis)?;
    let mass = k.vector.norm_sqr();
    if mass < BEREZIN_MIN_MASS {
        return Err(Error::KernelUnderflow {
            point: *z,
            retained: mass,
            degree: basis.degree(),
        });
    }
    let value = inner_h2(&b.apply(&k.vector)?, &k.vector)? / mass;
    let tau = kernel_tail_mass(z, basis.degree());
    Ok(BerezinValue {
        value,
        budget: norm * (2.0 * tau.sqrt() + 2.0 * tau),
    })
}

/// ⟨B v, v⟩/⟨v, v⟩ with v = P_D k_z.
pub fn berezin(b: &OperatorMatrix, z: &ComplexPoint) -> Result<BerezinValue> {
    berezin_with_norm(b, z, b.op_norm().value)
}

/// Berezin transform sampled on a list of points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BerezinProfile {
    pub points: Vec<ComplexPoint>,
    pub values: Vec<C64>,
    pub budgets: Vec<f64>,
}

pub fn berezin_profile(b: &OperatorMatrix, points: &[ComplexPoint]) -> Result<BerezinProfile> {
    let norm = b.op_norm().value;
    let results: Vec<Result<BerezinValue>> = points
        .par_iter()
        .map(|z| berezin_with_norm(b, z, norm))
        .collect();
    let mut values = Vec::with_capacity(points.len());
    let mut budgets = Vec::with_capacity(points.len());
    for r in results {
        let v = r?;
        values.push(v.value);
        budgets.push(v.budget);
    }
    Ok(BerezinProfile {
        points: points.to_vec(),
        values,
        budgets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::kernel_gram;
    use approx::assert_abs_diff_eq;

    fn basis() -> BasisSpec {
        BasisSpec::new(1, 30).unwrap()
    }

    #[test]
    fn identity_norm_and_berezin() {
        let id = OperatorMatrix::identity(&basis());
        assert_abs_diff_eq!(id.op_norm().value, 1.0, epsilon = 1e-14);
        for z in [ComplexPoint::planar(0.0, 0.0), ComplexPoint::planar(2.0, -1.0)] {
            let b = berezin(&id, &z).unwrap();
            assert_abs_diff_eq!(b.value.re, 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(b.value.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn berezin_refuses_far_points() {
        let id = OperatorMatrix::identity(&BasisSpec::new(1, 4).unwrap());
        let err = berezin(&id, &ComplexPoint::planar(4.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::KernelUnderflow { .. }));
    }

    #[test]
    fn rank_one_action_and_norm() {
        let b = basis();
        let z = ComplexPoint::planar(0.7, 0.2);
        let w = ComplexPoint::planar(-0.3, 1.1);
        let kz = kernel_coeffs(&z, &b).unwrap().vector;
        let kw = kernel_coeffs(&w, &b).unwrap().vector;
        let r = rank_one(&kz, &kz).unwrap();
        let out = r.apply(&kz).unwrap();
        let want = kz.scale(C64::new(kz.norm_sqr(), 0.0));
        assert!((out.coeffs() - want.coeffs()).norm() < 1e-14);
        let rzw = rank_one(&kz, &kw).unwrap();
        assert_abs_diff_eq!(rzw.op_norm().value, kz.norm() * kw.norm(), epsilon = 1e-13);
    }

    #[test]
    fn coefficient_of_identity_is_gram() {
        let id = OperatorMatrix::identity(&basis());
        let z = ComplexPoint::planar(1.0, 0.0);
        let w = ComplexPoint::planar(0.0, 0.0);
        let c = coeff_kernel(&id, &z, &w).unwrap();
        assert!((c.value - kernel_gram(&z, &w)).norm() <= c.budget + 1e-14);
        assert_abs_diff_eq!(c.value.re, (-0.5f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn power_iteration_agrees_with_svd() {
        let m = DMatrix::from_fn(40, 30, |i, j| {
            C64::new(((i * 7 + j * 3) % 11) as f64 - 5.0, ((i + 2 * j) % 5) as f64)
        });
        let svd = op_norm(&m);
        let pow = power_iteration_norm(&m, 1e-12, 10_000);
        assert!(pow.converged);
        assert_abs_diff_eq!(svd.value, pow.value, epsilon = 1e-8 * svd.value);
        let z = DMatrix::<C64>::zeros(5, 5);
        assert_eq!(power_iteration_norm(&z, 1e-10, 10).value, 0.0);
    }

    #[test]
    fn non_convergence_is_flagged() {
        // two nearly equal singular values stall the iteration
        let mut m = DMatrix::<C64>::zeros(3, 3);
        m[(0, 0)] = C64::new(1.0, 0.0);
        m[(1, 1)] = C64::new(1.0 - 1e-9, 0.0);
        m[(2, 2)] = C64::new(0.5, 0.0);
        let est = power_iteration_norm(&m, 1e-16, 3);
        assert!(!est.converged);
        assert_eq!(est.iterations, 3);
    }
}
