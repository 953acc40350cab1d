//! Lattice windows, frame operators, the discrete Schur test and the
//! double-sum expansion of E_w B E_z.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{check_dim, kernel_matrix, BasisSpec, ComplexPoint, C64};
use crate::operators::OperatorMatrix;
use crate::special::poisson_cdf;

/// Stop summing a lattice series once a shell adds less than this.
const SHELL_FLOOR: f64 = 1e-20;
const MAX_EXTRA_SHELLS: i32 = 400;

/// The points u ∈ ℤ^{2n} with |u|_∞ ≤ W, as points of ℂⁿ. Real coordinates
/// are enumerated lexicographically (x₁, y₁, x₂, y₂), last varying fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeWindow {
    n: usize,
    radius: u32,
    points: Vec<ComplexPoint>,
}

fn integer_box(dims: usize, lo: i32, hi: i32) -> Vec<Vec<i32>> {
    let side = (hi - lo + 1) as usize;
    let total = side.pow(dims as u32);
    (0..total)
        .map(|flat| {
            let mut rest = flat;
            let mut c = vec![0; dims];
            for k in (0..dims).rev() {
                c[k] = lo + (rest % side) as i32;
                rest /= side;
            }
            c
        })
        .collect()
}

fn to_point(c: &[i32]) -> ComplexPoint {
    let real: Vec<f64> = c.iter().map(|&v| v as f64).collect();
    ComplexPoint::from_real(&real).expect("even length")
}

pub fn lattice_window(n: usize, radius: u32) -> Result<LatticeWindow> {
    check_dim(n)?;
    let r = radius as i32;
    let points = integer_box(2 * n, -r, r).iter().map(|c| to_point(c)).collect();
    Ok(LatticeWindow { n, radius, points })
}

impl LatticeWindow {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn points(&self) -> &[ComplexPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Largest distance between two window points, 2W√(2n).
    pub fn diameter(&self) -> f64 {
        2.0 * self.radius as f64 * ((2 * self.n) as f64).sqrt()
    }

    /// Position of the origin in the enumeration.
    pub fn origin_index(&self) -> usize {
        self.len() / 2
    }
}

/// Σ over the lattice points with |u|_∞ > W of term(u), shell by shell.
/// Terms must eventually decrease with the shell index.
fn sum_outside<F: Fn(&ComplexPoint) -> f64>(n: usize, radius: u32, term: F, settle: f64) -> f64 {
    let dims = 2 * n;
    let mut total = 0.0;
    for s in (radius as i32 + 1)..=(radius as i32 + MAX_EXTRA_SHELLS) {
        let shell: f64 = integer_box(dims, -s, s)
            .iter()
            .filter(|c| c.iter().any(|v| v.abs() == s))
            .map(|c| term(&to_point(c)))
            .sum();
        total += shell;
        if s as f64 > settle && shell < SHELL_FLOOR {
            break;
        }
    }
    total
}

/// π^{−n} Σ_{u ∉ window} ‖P_m k_{u−z}‖², the part of a frame sum lost to the
/// window on the span of degrees ≤ m.
pub fn window_budget(z: &ComplexPoint, window: &LatticeWindow, cap_degree: u32) -> f64 {
    let settle = z.coords().iter().map(|c| c.re.abs().max(c.im.abs())).fold(0.0, f64::max)
        + (cap_degree as f64).sqrt()
        + 2.0;
    let n = window.n;
    PI.powi(-(n as i32))
        * sum_outside(
            n,
            window.radius,
            |u| poisson_cdf((*u - *z).norm_sqr(), cap_degree),
            settle,
        )
}

/// (Σ_{m∈ℤ} e^{−rate·m²})^{dims}.
pub fn gaussian_lattice_sum(rate: f64, dims: usize) -> f64 {
    let mut s = 1.0;
    let mut m = 1.0f64;
    loop {
        let t = (-rate * m * m).exp();
        s += 2.0 * t;
        if t < 1e-18 {
            break;
        }
        m += 1.0;
    }
    s.powi(dims as i32)
}

/// Columns P_D k_{u−z} for the window points u.
pub fn window_kernels(z: &ComplexPoint, window: &LatticeWindow, basis: &BasisSpec) -> Result<DMatrix<C64>> {
    z.ensure_dim(window.n)?;
    let shifted: Vec<ComplexPoint> = window.points.iter().map(|u| *u - *z).collect();
    kernel_matrix(&shifted, basis)
}

/// E_z = π^{−n} Σ_u P_D k_{u−z} ⊗ P_D k_{u−z} and its factor F_z.
#[derive(Clone, Debug)]
pub struct FrameOperator {
    pub z: ComplexPoint,
    /// Whether z lies in the closed unit cube [0,1]^{2n}.
    pub in_closed_cube: bool,
    pub matrix: OperatorMatrix,
    /// Rows indexed by window points: row u is π^{−n/2} (P_D k_{u−z})*.
    pub factor: DMatrix<C64>,
    /// Bound on the norm of the terms dropped by the window.
    pub window_budget: f64,
}

pub fn frame_operator(z: &ComplexPoint, window: &LatticeWindow, basis: &BasisSpec) -> Result<FrameOperator> {
    let k = window_kernels(z, window, basis)?;
    let n = window.n as i32;
    let factor = k.adjoint() * C64::new(PI.powf(-0.5 * n as f64), 0.0);
    let matrix = OperatorMatrix::new(basis.clone(), factor.adjoint() * &factor)?;
    let in_closed_cube = z
        .real_coords()
        .iter()
        .all(|x| (0.0..=1.0).contains(x));
    Ok(FrameOperator {
        z: *z,
        in_closed_cube,
        matrix,
        factor,
        window_budget: window_budget(z, window, basis.degree()),
    })
}

/// Non-negative kernel on window pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeKernel {
    values: DMatrix<f64>,
}

impl LatticeKernel {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() != values.ncols() {
            return Err(Error::DimensionMismatch {
                expected: values.nrows(),
                got: values.ncols(),
            });
        }
        for ((row, col), v) in values.iter().enumerate().map(|(i, v)| ((i % values.nrows(), i / values.nrows()), v)) {
            if !(*v >= 0.0) {
                return Err(Error::NegativeKernel { row, col, value: *v });
            }
        }
        Ok(Self { values })
    }

    pub fn from_fn<F>(window: &LatticeWindow, f: F) -> Result<Self>
    where
        F: Fn(&ComplexPoint, &ComplexPoint) -> f64,
    {
        let p = window.points();
        Self::new(DMatrix::from_fn(p.len(), p.len(), |i, j| f(&p[i], &p[j])))
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }
}

/// Constants of the discrete Schur test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchurBound {
    pub c1: f64,
    pub c2: f64,
    /// (C₁C₂)^{1/2}.
    pub bound: f64,
}

/// C₁ = max_u Σ_v A(u,v)h(v)/h(u), C₂ = max_u Σ_v A(v,u)h(v)/h(u).
pub fn schur_bound(kernel: &LatticeKernel, weights: &[f64]) -> Result<SchurBound> {
    let a = &kernel.values;
    if weights.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: weights.len(),
        });
    }
    if let Some((index, &value)) = weights.iter().enumerate().find(|(_, h)| !(**h > 0.0)) {
        return Err(Error::NonPositiveWeight { index, value });
    }
    let n = weights.len();
    let mut c1 = 0.0f64;
    let mut c2 = 0.0f64;
    for u in 0..n {
        let mut r = 0.0;
        let mut c = 0.0;
        for v in 0..n {
            r += a[(u, v)] * weights[v];
            c += a[(v, u)] * weights[v];
        }
        c1 = c1.max(r / weights[u]);
        c2 = c2.max(c / weights[u]);
    }
    Ok(SchurBound {
        c1,
        c2,
        bound: (c1 * c2).sqrt(),
    })
}

/// The coefficient table G[v,u] = ⟨B P_D k_{u−z}, P_D k_{v−w}⟩ behind
/// E_w B E_z = π^{−2n} Σ G[v,u] k_{v−w} ⊗ k_{u−z}.
#[derive(Clone, Debug)]
pub struct DoubleSum {
    basis: BasisSpec,
    kz: DMatrix<C64>,
    kw: DMatrix<C64>,
    coefficients: DMatrix<C64>,
    distances: DMatrix<f64>,
    scale: f64,
}

/// V_R (pairs with |u − v| ≤ R) and W_R (the rest).
#[derive(Clone, Debug)]
pub struct TailSplit {
    pub radius: f64,
    pub near: OperatorMatrix,
    pub far: OperatorMatrix,
}

const RADIUS_SLACK: f64 = 1e-9;

impl DoubleSum {
    pub fn new(
        b: &OperatorMatrix,
        z: &ComplexPoint,
        w: &ComplexPoint,
        window: &LatticeWindow,
    ) -> Result<Self> {
        let basis = b.basis().clone();
        let kz = window_kernels(z, window, &basis)?;
        let kw = window_kernels(w, window, &basis)?;
        let coefficients = kw.adjoint() * b.entries() * &kz;
        let p = window.points();
        let distances = DMatrix::from_fn(p.len(), p.len(), |v, u| p[u].distance(&p[v]));
        Ok(Self {
            basis,
            kz,
            kw,
            coefficients,
            distances,
            scale: PI.powi(-2 * window.n as i32),
        })
    }

    /// G[v, u].
    pub fn coefficients(&self) -> &DMatrix<C64> {
        &self.coefficients
    }

    fn masked(&self, keep: impl Fn(f64) -> bool) -> Result<OperatorMatrix> {
        let g = DMatrix::from_fn(self.coefficients.nrows(), self.coefficients.ncols(), |v, u| {
            if keep(self.distances[(v, u)]) {
                self.coefficients[(v, u)]
            } else {
                C64::new(0.0, 0.0)
            }
        });
        OperatorMatrix::new(
            self.basis.clone(),
            (&self.kw * g * self.kz.adjoint()) * C64::new(self.scale, 0.0),
        )
    }

    /// E_w B E_z from all pairs.
    pub fn assembled(&self) -> Result<OperatorMatrix> {
        self.masked(|_| true)
    }

    pub fn split(&self, radius: f64) -> Result<TailSplit> {
        if !(radius >= 0.0) {
            return Err(Error::InvalidParameter(format!("split radius must be ≥ 0, got {radius}")));
        }
        Ok(TailSplit {
            radius,
            near: self.masked(|d| d <= radius + RADIUS_SLACK)?,
            far: self.masked(|d| d > radius + RADIUS_SLACK)?,
        })
    }

    /// max_u Σ_{v: |u−v| > R} |G[v,u]|.
    pub fn tail_sup(&self, radius: f64) -> f64 {
        (0..self.coefficients.ncols())
            .map(|u| {
                (0..self.coefficients.nrows())
                    .filter(|&v| self.distances[(v, u)] > radius + RADIUS_SLACK)
                    .map(|v| self.coefficients[(v, u)].norm())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// max_v Σ_{u: |u−v| > R} |G[v,u]|.
    pub fn tail_sup_rows(&self, radius: f64) -> f64 {
        (0..self.coefficients.nrows())
            .map(|v| {
                (0..self.coefficients.ncols())
                    .filter(|&u| self.distances[(v, u)] > radius + RADIUS_SLACK)
                    .map(|u| self.coefficients[(v, u)].norm())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

/// V_R + W_R = E_w B E_z split at radius R.
pub fn ewbez_expand(
    b: &OperatorMatrix,
    z: &ComplexPoint,
    w: &ComplexPoint,
    window: &LatticeWindow,
    radius: f64,
) -> Result<TailSplit> {
    DoubleSum::new(b, z, w, window)?.split(radius)
}

/// max over window u of Σ_{|u−v|>R} |⟨B k_{u−z}, k_{v−w}⟩|.
pub fn tail_sup(
    b: &OperatorMatrix,
    z: &ComplexPoint,
    w: &ComplexPoint,
    window: &LatticeWindow,
    radius: f64,
) -> Result<f64> {
    Ok(DoubleSum::new(b, z, w, window)?.tail_sup(radius))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::kernel_coeffs;
    use crate::operators::{op_norm, rank_one};
    use approx::assert_abs_diff_eq;

    #[test]
    fn window_sizes_and_spacing() {
        assert_eq!(lattice_window(1, 1).unwrap().len(), 9);
        assert_eq!(lattice_window(1, 2).unwrap().len(), 25);
        assert_eq!(lattice_window(2, 1).unwrap().len(), 81);
        let w = lattice_window(1, 2).unwrap();
        let p = w.points();
        for i in 0..p.len() {
            for j in 0..i {
                assert!(p[i].distance(&p[j]) >= 1.0);
            }
        }
        assert_eq!(p[w.origin_index()], ComplexPoint::planar(0.0, 0.0));
    }

    #[test]
    fn single_point_frame() {
        let basis = BasisSpec::new(1, 10).unwrap();
        let w = lattice_window(1, 0).unwrap();
        let z = ComplexPoint::planar(0.0, 0.0);
        let e = frame_operator(&z, &w, &basis).unwrap();
        let k0 = kernel_coeffs(&z, &basis).unwrap().vector;
        let want = rank_one(&k0, &k0).unwrap().scale(C64::new(1.0 / PI, 0.0));
        assert!((e.matrix.entries() - want.entries()).camax() < 1e-15);
        assert!(e.in_closed_cube);
    }

    #[test]
    fn lattice_sums() {
        // theta-function values from a 25-digit series evaluation
        assert_abs_diff_eq!(gaussian_lattice_sum(0.5, 1), 2.506_628_288_042_905_5, epsilon = 1e-14);
        assert_abs_diff_eq!(gaussian_lattice_sum(0.5, 2) / PI, 2.000_000_021_402_304, epsilon = 1e-14);
        assert_abs_diff_eq!(gaussian_lattice_sum(0.125, 2), 25.132_741_228_718_345, epsilon = 1e-12);
    }

    #[test]
    fn schur_identity_and_errors() {
        let w = lattice_window(1, 1).unwrap();
        let id = LatticeKernel::from_fn(&w, |u, v| if u == v { 1.0 } else { 0.0 }).unwrap();
        let s = schur_bound(&id, &[1.0; 9]).unwrap();
        assert_eq!(s.bound, 1.0);
        let mut h = vec![1.0; 9];
        h[4] = 0.0;
        assert!(matches!(
            schur_bound(&id, &h),
            Err(Error::NonPositiveWeight { index: 4, .. })
        ));
        assert!(LatticeKernel::new(DMatrix::from_element(2, 2, -1.0)).is_err());
    }

    #[test]
    fn split_is_exact_and_tail_monotone() {
        let basis = BasisSpec::new(1, 12).unwrap();
        let w = lattice_window(1, 2).unwrap();
        let z = ComplexPoint::planar(0.25, 0.5);
        let b = OperatorMatrix::identity(&basis);
        let ds = DoubleSum::new(&b, &z, &z, &w).unwrap();
        let full = ds.assembled().unwrap();
        let ez = frame_operator(&z, &w, &basis).unwrap().matrix;
        assert!(op_norm(&(full.entries() - ez.compose(&ez).unwrap().entries())).value < 1e-12);
        let mut prev = f64::INFINITY;
        for r in 0..6 {
            let s = ds.split(r as f64).unwrap();
            let sum = s.near.checked_add(&s.far).unwrap();
            assert!(op_norm(&(sum.entries() - full.entries())).value < 1e-12);
            let t = ds.tail_sup(r as f64);
            assert!(t <= prev);
            prev = t;
        }
        let big = ds.split(w.diameter()).unwrap();
        assert_eq!(big.far.entries().camax(), 0.0);
    }
}
