//! Constructive approximation by Toeplitz-type operators: Y_z sums and their
//! averaged symbols, D₀ sums, translated families, exponential series,
//! difference quotients of shifted kernels and Riemann-sum reconstruction.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    kernel_matrix, kernel_shifted_coeffs, kernel_tail_norm, norm_star, BasisSpec, ComplexPoint,
    FockVector, MultiIndex, C64,
};
use crate::lattice::{frame_operator, gaussian_lattice_sum, window_budget, LatticeWindow};
use crate::operators::{
    op_norm, toeplitz_matrix, toeplitz_refinement_gap, weighted_kernel_sum, weyl_block,
    OperatorMatrix, SymbolSpec,
};
use crate::quadrature::{build_rule, RegionSpec};

fn check_window(window: &LatticeWindow, basis: &BasisSpec, len: usize) -> Result<()> {
    if window.n() != basis.n() {
        return Err(Error::DimensionMismatch {
            expected: basis.n(),
            got: window.n(),
        });
    }
    if len != window.len() {
        return Err(Error::DimensionMismatch {
            expected: window.len(),
            got: len,
        });
    }
    Ok(())
}

/// Coefficients c_u over the window and the offset z of Σ c_u k_{u−z} ⊗ k_{u−z}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct YzSpec {
    pub coeffs: Vec<C64>,
    pub z: ComplexPoint,
}

impl YzSpec {
    pub fn new(coeffs: Vec<C64>, z: ComplexPoint) -> Result<Self> {
        if coeffs.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::InvalidParameter("non-finite Y_z coefficient".into()));
        }
        Ok(Self { coeffs, z })
    }

    pub fn sup_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Σ c_u P_D k_{u−z} ⊗ P_D k_{u−z}.
pub fn y_z_build(spec: &YzSpec, window: &LatticeWindow, basis: &BasisSpec) -> Result<OperatorMatrix> {
    check_window(window, basis, spec.coeffs.len())?;
    spec.z.ensure_dim(basis.n())?;
    let points: Vec<ComplexPoint> = window.points().iter().map(|u| *u - spec.z).collect();
    OperatorMatrix::new(basis.clone(), weighted_kernel_sum(basis, &points, &spec.coeffs)?)
}

/// Schur bound sup|c_u| · Σ_{v∈ℤ^{2n}} e^{−|v|²/2} for ‖Y_z‖, from the Gram
/// matrix |⟨k_u, k_v⟩| = e^{−|u−v|²/2}.
pub fn y_z_norm_bound(spec: &YzSpec, n: usize) -> f64 {
    spec.sup_coeff() * gaussian_lattice_sum(0.5, 2 * n)
}

/// Estimate of how much truncating the kernels to degree D moves
/// Σ c_u k_{p_u} ⊗ k_{p_u}: 2 sup|c| (Σ_v e^{−|v|²/2})^{1/2} (Σ_u tail(p_u)²)^{1/2}.
fn truncation_estimate(sup: f64, tails: impl Iterator<Item = f64>, n: usize) -> f64 {
    let frob: f64 = tails.map(|t| t * t).sum::<f64>().sqrt();
    2.0 * sup * gaussian_lattice_sum(0.5, 2 * n).sqrt() * frob
}

/// Indicator-ball symbol f_ε, its Toeplitz matrix and the distance to Y₀.
#[derive(Clone, Debug)]
pub struct AveragedSymbol {
    pub epsilon: f64,
    pub symbol: SymbolSpec,
    pub toeplitz: OperatorMatrix,
    /// ‖Y₀ − T_{f_ε}‖ on the truncated space.
    pub error: f64,
    /// Change of T_{f_ε} under a finer ball rule.
    pub quadrature_gap: f64,
    /// Estimated effect of kernel truncation on Y₀ and T_{f_ε} together.
    pub truncation_estimate: f64,
}

/// f_ε = (πⁿ/|B(0,ε)|) Σ c_u χ_{B(u,ε)}, built with per-ball polar rules.
pub fn average_to_toeplitz(
    spec: &YzSpec,
    epsilon: f64,
    window: &LatticeWindow,
    basis: &BasisSpec,
    ball_order: usize,
) -> Result<AveragedSymbol> {
    let n = basis.n();
    if spec.z != ComplexPoint::origin(n)? {
        return Err(Error::InvalidParameter(format!(
            "averaging needs the offset z = 0, got {}",
            spec.z
        )));
    }
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1/2) so the balls are disjoint, got {epsilon}"
        )));
    }
    check_window(window, basis, spec.coeffs.len())?;
    let ball = RegionSpec::Ball {
        center: ComplexPoint::origin(n)?,
        radius: epsilon,
    };
    let volume = ball.measure().expect("bounded");
    let scale = PI.powi(n as i32) / volume;
    let symbol = SymbolSpec::IndicatorBalls {
        centers: window.points().to_vec(),
        radius: epsilon,
        coeffs: spec.coeffs.iter().map(|c| c * scale).collect(),
    };
    let rule = build_rule(ball, ball_order)?;
    let toeplitz = toeplitz_matrix(&symbol, basis, &rule)?;
    let quadrature_gap = toeplitz_refinement_gap(&symbol, basis, &rule)?;
    let y = y_z_build(spec, window, basis)?;
    let error = op_norm(&(y.entries() - toeplitz.entries())).value;
    let d = basis.degree();
    let sup = spec.sup_coeff();
    let tails_y = window.points().iter().map(|u| kernel_tail_norm(u, d));
    let tails_a = window
        .points()
        .iter()
        .map(|u| kernel_tail_norm(&(*u * ((u.norm() + epsilon) / u.norm().max(1e-300))), d));
    let truncation = truncation_estimate(sup, tails_y, n) + truncation_estimate(sup, tails_a, n);
    Ok(AveragedSymbol {
        epsilon,
        symbol,
        toeplitz,
        error,
        quadrature_gap,
        truncation_estimate: truncation,
    })
}

/// Coefficients c_u and targets γ(u) of Σ c_u k_u ⊗ k_{γ(u)}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct D0Spec {
    pub coeffs: Vec<C64>,
    pub targets: Vec<ComplexPoint>,
    pub bound: f64,
}

impl D0Spec {
    /// Checks |u − γ(u)| ≤ bound over the window.
    pub fn new(coeffs: Vec<C64>, targets: Vec<ComplexPoint>, bound: f64, window: &LatticeWindow) -> Result<Self> {
        if coeffs.len() != window.len() || targets.len() != window.len() {
            return Err(Error::DimensionMismatch {
                expected: window.len(),
                got: coeffs.len().min(targets.len()),
            });
        }
        for (index, (u, g)) in window.points().iter().zip(&targets).enumerate() {
            g.ensure_dim(window.n())?;
            let distance = u.distance(g);
            if distance > bound {
                return Err(Error::DisplacementViolation {
                    index,
                    distance,
                    bound,
                });
            }
        }
        Ok(Self {
            coeffs,
            targets,
            bound,
        })
    }

    /// γ(u) = u − w for a fixed w.
    pub fn translation(coeffs: Vec<C64>, w: &ComplexPoint, window: &LatticeWindow) -> Result<Self> {
        let targets = window.points().iter().map(|u| *u - *w).collect();
        Self::new(coeffs, targets, w.norm(), window)
    }
}

/// Σ c_u P_D k_u ⊗ P_D k_{γ(u)}.
pub fn d0_build(spec: &D0Spec, window: &LatticeWindow, basis: &BasisSpec) -> Result<OperatorMatrix> {
    let spec = D0Spec::new(spec.coeffs.clone(), spec.targets.clone(), spec.bound, window)?;
    check_window(window, basis, spec.coeffs.len())?;
    let ku = kernel_matrix(window.points(), basis)?;
    let kg = kernel_matrix(&spec.targets, basis)?;
    let mut scaled = ku;
    for (j, c) in spec.coeffs.iter().enumerate() {
        let col = scaled.column(j) * *c;
        scaled.set_column(j, &col);
    }
    OperatorMatrix::new(basis.clone(), scaled * kg.adjoint())
}

/// The family Σ (U_u h_u) ⊗ e_u and its norm bound.
#[derive(Clone, Debug)]
pub struct TranslatedFamily {
    /// Column u is P_D U_u h_u.
    pub matrix: DMatrix<C64>,
    pub norm: f64,
    pub sup_norm_star: f64,
    /// (π^{−n} Σ_{v∈ℤ^{2n}} e^{−|v|²/8})^{1/2} · sup‖h_u‖_*.
    pub bound: f64,
}

/// Assembles Σ (U_u h_u) ⊗ e_u over the window. Since each h_u lies in the
/// truncated space, the columns are exact compressions and the computed norm
/// cannot exceed the untruncated one.
pub fn translated_family_bound(
    h: &[FockVector],
    window: &LatticeWindow,
    basis: &BasisSpec,
) -> Result<TranslatedFamily> {
    check_window(window, basis, h.len())?;
    let mut matrix = DMatrix::zeros(basis.size(), h.len());
    let mut sup = 0.0f64;
    for (j, (u, hu)) in window.points().iter().zip(h).enumerate() {
        basis.ensure_same(hu.basis())?;
        sup = sup.max(norm_star(hu));
        let col = weyl_block(u, basis, basis)? * hu.coeffs();
        matrix.set_column(j, &col);
    }
    let n = basis.n();
    let c = (gaussian_lattice_sum(0.125, 2 * n) / PI.powi(n as i32)).sqrt();
    Ok(TranslatedFamily {
        norm: op_norm(&matrix).value,
        sup_norm_star: sup,
        bound: c * sup,
        matrix,
    })
}

/// Closed form ⟨k_a, k_b⟩_* = (2π)ⁿ e^{2⟨b,a⟩ − (|a|²+|b|²)/2}.
pub fn kernel_inner_star(a: &ComplexPoint, b: &ComplexPoint) -> C64 {
    let n = a.dim() as f64;
    let e = C64::new(2.0, 0.0) * b.inner(a) - C64::new(0.5 * (a.norm_sqr() + b.norm_sqr()), 0.0);
    e.exp() * (2.0 * PI).powf(n)
}

/// ‖k_a − k_b‖_* from the closed form.
pub fn kernel_distance_star(a: &ComplexPoint, b: &ComplexPoint) -> f64 {
    let sq = kernel_inner_star(a, a).re + kernel_inner_star(b, b).re - 2.0 * kernel_inner_star(a, b).re;
    sq.max(0.0).sqrt()
}

/// A cell of a finite partition: window indices sharing one anchor point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionCell {
    pub anchor: ComplexPoint,
    pub members: Vec<usize>,
}

/// Comparison of Σ (U_u k_{ψ(u)}) ⊗ e_u with its cell-wise replacement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionDiagnostic {
    /// ‖B − (B₁ + ⋯ + B_m)‖ on the truncated space.
    pub difference: f64,
    /// C · max_i sup_{u∈Γ_i} ‖k_{ψ(u)} − k_{z_i}‖_*.
    pub bound: f64,
}

/// ψ(u) = u − γ(u); U_u k_a is evaluated as e^{i Im⟨u,a⟩} k_{u−a}.
pub fn partition_diagnostic(
    spec: &D0Spec,
    cells: &[PartitionCell],
    window: &LatticeWindow,
    basis: &BasisSpec,
) -> Result<PartitionDiagnostic> {
    let spec = D0Spec::new(spec.coeffs.clone(), spec.targets.clone(), spec.bound, window)?;
    let mut seen = vec![false; window.len()];
    let mut anchor_of = vec![None; window.len()];
    for cell in cells {
        for &m in &cell.members {
            if m >= window.len() || seen[m] {
                return Err(Error::InvalidParameter(format!(
                    "partition member {m} is out of range or repeated"
                )));
            }
            seen[m] = true;
            anchor_of[m] = Some(cell.anchor);
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::InvalidParameter("partition does not cover the window".into()));
    }
    let translate = |u: &ComplexPoint, a: &ComplexPoint| -> Result<nalgebra::DVector<C64>> {
        let phase = C64::new(0.0, u.inner(a).im).exp();
        Ok(kernel_matrix(&[*u - *a], basis)?.column(0) * phase)
    };
    let mut diff = DMatrix::zeros(basis.size(), window.len());
    let mut worst = 0.0f64;
    for (j, (u, g)) in window.points().iter().zip(&spec.targets).enumerate() {
        let psi = *u - *g;
        let anchor = anchor_of[j].expect("covered");
        let col = translate(u, &psi)? - translate(u, &anchor)?;
        diff.set_column(j, &col);
        worst = worst.max(kernel_distance_star(&psi, &anchor));
    }
    let n = basis.n();
    let c = (gaussian_lattice_sum(0.125, 2 * n) / PI.powi(n as i32)).sqrt();
    Ok(PartitionDiagnostic {
        difference: op_norm(&diff).value,
        bound: c * worst,
    })
}

/// e_α ↦ ζ_j e_α = √(α_j + 1) e_{α+1_j}; fails if the degree leaves the basis.
fn multiply_by_coordinate(f: &FockVector, j: usize) -> Result<FockVector> {
    let basis = f.basis();
    let unit = MultiIndex::unit(basis.n(), j)?;
    let mut out = FockVector::zeros(basis).into_coeffs();
    for (a, c) in basis.indices().iter().zip(f.coeffs().iter()) {
        if *c == C64::new(0.0, 0.0) {
            continue;
        }
        let next = a.checked_add(&unit)?;
        let pos = basis.position(&next).ok_or(Error::DegreeOverflow {
            what: "polynomial product",
            needed: next.order(),
            available: basis.degree(),
        })?;
        out[pos] += c * ((a.entries()[j] + 1) as f64).sqrt();
    }
    FockVector::new(basis.clone(), out)
}

/// Errors of a sequence of approximations indexed by a parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxReport {
    pub parameters: Vec<f64>,
    pub errors: Vec<f64>,
    pub budgets: Vec<f64>,
}

/// Partial sums of K_w = Σ_j g_w^j/j! with g_w(ζ) = ⟨ζ, w⟩.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesReport {
    /// errors[k] = ‖P_D K_w − Σ_{j≤k} g_w^j/j!‖_*, computed from coefficients.
    pub report: ApproxReport,
    /// (πⁿ2ⁿ Σ_{k<j≤D} (2|w|²)^j/j!)^{1/2}: the same quantity in closed form.
    pub closed_form_truncated: Vec<f64>,
    /// (πⁿ2ⁿ Σ_{j>k} (2|w|²)^j/j!)^{1/2}: the untruncated error.
    pub closed_form: Vec<f64>,
}

pub fn exp_series_check(w: &ComplexPoint, k_max: u32, basis: &BasisSpec) -> Result<SeriesReport> {
    w.ensure_dim(basis.n())?;
    let d = basis.degree();
    if k_max > d {
        return Err(Error::DegreeOverflow {
            what: "exponential partial sum",
            needed: k_max,
            available: d,
        });
    }
    let n = basis.n();
    let kw = kernel_shifted_coeffs(w, &MultiIndex::zeros(n)?, basis)?;
    let mut term = FockVector::basis_vector(basis, &MultiIndex::zeros(n)?)?;
    let mut partial = term.clone();
    let mut errors = Vec::new();
    for k in 0..=k_max {
        if k > 0 {
            let mut next = FockVector::zeros(basis);
            for (j, wj) in w.coords().iter().enumerate() {
                if *wj != C64::new(0.0, 0.0) {
                    next = next.checked_add(&multiply_by_coordinate(&term, j)?.scale(wj.conj()))?;
                }
            }
            term = next.scale(C64::new(1.0 / k as f64, 0.0));
            partial = partial.checked_add(&term)?;
        }
        errors.push(norm_star(&kw.vector.checked_sub(&partial)?));
    }
    let x = 2.0 * w.norm_sqr();
    let pre = PI.powi(n as i32) * 2f64.powi(n as i32);
    // shell j of ‖K_w‖_*² is πⁿ2ⁿ(2|w|²)^j/j!
    let shell = |j: u32| -> f64 {
        if x == 0.0 {
            if j == 0 { pre } else { 0.0 }
        } else {
            pre * (j as f64 * x.ln() - crate::special::ln_factorial(j)).exp()
        }
    };
    let mut closed_trunc = Vec::new();
    let mut closed = Vec::new();
    for k in 0..=k_max {
        let within: f64 = (k + 1..=d).map(shell).sum();
        let mut beyond = 0.0;
        let mut j = d + 1;
        loop {
            let s = shell(j);
            beyond += s;
            if (j as f64 > x && s <= 1e-18 * (within + beyond)) || s == 0.0 || j > d + 4000 {
                break;
            }
            j += 1;
        }
        closed_trunc.push(within.sqrt());
        closed.push((within + beyond).sqrt());
    }
    Ok(SeriesReport {
        report: ApproxReport {
            parameters: (0..=k_max).map(|k| k as f64).collect(),
            errors,
            budgets: vec![kw.tail_norm_star; k_max as usize + 1],
        },
        closed_form_truncated: closed_trunc,
        closed_form: closed,
    })
}

/// Direction of the step z → z + s·b.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepKind {
    /// s = t; the quotient tends to K_{z;a+b}.
    Real,
    /// s = it; the quotient tends to −K_{z;a+b}.
    Imaginary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuotientReport {
    /// errors[i] = ‖(K_{z+s b;a} − K_{z;a})/s − L‖_* at t = parameters[i].
    pub report: ApproxReport,
    /// Least-squares slope of ln(error) against ln(t) over the last three t.
    pub slope: f64,
    /// ‖P_D K_{z+tb}‖_* for each t.
    pub kernel_norms: Vec<f64>,
    /// (2π)^{n/2} e^{|z|²}, the limit of the kernel norms.
    pub kernel_norm_limit: f64,
}

fn loglog_slope(ts: &[f64], es: &[f64]) -> f64 {
    let k = ts.len().min(3);
    let xs: Vec<f64> = ts[ts.len() - k..].iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = es[es.len() - k..].iter().map(|e| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / k as f64;
    let my = ys.iter().sum::<f64>() / k as f64;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

pub fn diff_quotient_check(
    z: &ComplexPoint,
    a: &MultiIndex,
    b: &MultiIndex,
    ts: &[f64],
    basis: &BasisSpec,
    step: StepKind,
) -> Result<QuotientReport> {
    if b.order() != 1 {
        return Err(Error::InvalidParameter(format!("direction {b:?} is not a unit multi-index")));
    }
    if ts.len() < 2 || ts.iter().any(|t| !(*t > 0.0)) || ts.windows(2).any(|p| p[1] >= p[0]) {
        return Err(Error::InvalidParameter(
            "t-values must be positive and strictly decreasing (at least two)".into(),
        ));
    }
    let n = basis.n();
    let j = b.entries().iter().position(|&e| e == 1).expect("unit index");
    let ab = a.checked_add(b)?;
    let base = kernel_shifted_coeffs(z, a, basis)?;
    let limit = kernel_shifted_coeffs(z, &ab, basis)?;
    let sign = match step {
        StepKind::Real => 1.0,
        StepKind::Imaginary => -1.0,
    };
    let target = limit.vector.scale(C64::new(sign, 0.0));
    let mut errors = Vec::new();
    let mut budgets = Vec::new();
    let mut norms = Vec::new();
    for &t in ts {
        let s = match step {
            StepKind::Real => C64::new(t, 0.0),
            StepKind::Imaginary => C64::new(0.0, t),
        };
        let mut coords = z.coords().to_vec();
        coords[j] += s;
        let zt = ComplexPoint::new(&coords)?;
        let moved = kernel_shifted_coeffs(&zt, a, basis)?;
        let q = moved.vector.checked_sub(&base.vector)?.scale(C64::new(1.0, 0.0) / s);
        errors.push(norm_star(&q.checked_sub(&target)?));
        budgets.push((moved.tail_norm_star + base.tail_norm_star) / t + limit.tail_norm_star);
        norms.push(norm_star(&kernel_shifted_coeffs(&zt, &MultiIndex::zeros(n)?, basis)?.vector));
    }
    Ok(QuotientReport {
        slope: loglog_slope(ts, &errors),
        report: ApproxReport {
            parameters: ts.to_vec(),
            errors,
            budgets,
        },
        kernel_norms: norms,
        kernel_norm_limit: (2.0 * PI).powf(n as f64 / 2.0) * z.norm_sqr().exp(),
    })
}

/// Σᵢ wᵢ E_{zᵢ} over the cube rule of the given order, with the largest
/// window budget over the nodes for components of degree ≤ cap_degree.
pub fn averaged_frame(
    order: usize,
    window: &LatticeWindow,
    basis: &BasisSpec,
    cap_degree: u32,
) -> Result<(OperatorMatrix, f64)> {
    let rule = build_rule(RegionSpec::CubeS { n: basis.n() }, order)?;
    let mut acc = DMatrix::zeros(basis.size(), basis.size());
    let mut budget = 0.0f64;
    for (z, w) in rule.nodes().iter().zip(rule.weights()) {
        let e = frame_operator(z, window, basis)?;
        acc += e.matrix.entries() * C64::new(*w, 0.0);
        budget = budget.max(window_budget(z, window, cap_degree));
    }
    Ok((OperatorMatrix::new(basis.clone(), acc)?, budget))
}

/// ‖B − Σᵢⱼ wᵢwⱼ E_{wᵢ} B E_{zⱼ}‖ for each cube-rule order. The double sum
/// factorizes as Ē B Ē with Ē = Σ wᵢ E_{zᵢ}. The budget ‖B‖(2δ + δ²) uses the
/// largest window budget δ over the nodes.
pub fn riemann_reconstruct(
    b: &OperatorMatrix,
    orders: &[usize],
    window: &LatticeWindow,
) -> Result<ApproxReport> {
    let basis = b.basis();
    let norm = b.op_norm().value;
    let mut report = ApproxReport {
        parameters: Vec::new(),
        errors: Vec::new(),
        budgets: Vec::new(),
    };
    for &m in orders {
        if m < 1 {
            return Err(Error::InvalidOrder(m));
        }
        let (e, delta) = averaged_frame(m, window, basis, basis.degree())?;
        let recon = e.compose(b)?.compose(&e)?;
        report.parameters.push(m as f64);
        report.errors.push(op_norm(&(b.entries() - recon.entries())).value);
        report.budgets.push(norm * (2.0 * delta + delta * delta));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::lattice_window;
    use approx::assert_abs_diff_eq;

    fn b1() -> BasisSpec {
        BasisSpec::new(1, 30).unwrap()
    }

    #[test]
    fn unit_coefficients_give_scaled_frame() {
        let basis = b1();
        let w = lattice_window(1, 2).unwrap();
        let z = ComplexPoint::planar(0.3, 0.6);
        let y = y_z_build(&YzSpec::new(vec![C64::new(1.0, 0.0); w.len()], z).unwrap(), &w, &basis).unwrap();
        let e = frame_operator(&z, &w, &basis).unwrap().matrix.scale(C64::new(PI, 0.0));
        assert!((y.entries() - e.entries()).camax() < 1e-13);
    }

    #[test]
    fn identity_displacement_matches_y0() {
        let basis = b1();
        let w = lattice_window(1, 1).unwrap();
        let c: Vec<C64> = (0..w.len()).map(|i| C64::new(i as f64 * 0.1, -0.2)).collect();
        let d = D0Spec::new(c.clone(), w.points().to_vec(), 0.0, &w).unwrap();
        let y = y_z_build(&YzSpec::new(c, ComplexPoint::planar(0.0, 0.0)).unwrap(), &w, &basis).unwrap();
        assert!((d0_build(&d, &w, &basis).unwrap().entries() - y.entries()).camax() < 1e-14);
    }

    #[test]
    fn displacement_violation() {
        let w = lattice_window(1, 1).unwrap();
        let far = ComplexPoint::planar(3.0, 0.0);
        let err = D0Spec::translation(vec![C64::new(1.0, 0.0); 9], &far, &w)
            .and_then(|s| D0Spec::new(s.coeffs, s.targets, 1.0, &w))
            .unwrap_err();
        assert!(matches!(err, Error::DisplacementViolation { .. }));
    }

    #[test]
    fn averaging_rejects_large_epsilon() {
        let w = lattice_window(1, 1).unwrap();
        let spec = YzSpec::new(vec![C64::new(1.0, 0.0); 9], ComplexPoint::planar(0.0, 0.0)).unwrap();
        assert!(average_to_toeplitz(&spec, 0.5, &w, &b1(), 8).is_err());
    }

    #[test]
    fn series_matches_closed_form() {
        let basis = b1();
        let rep = exp_series_check(&ComplexPoint::planar(1.0, 0.0), 6, &basis).unwrap();
        for (e, c) in rep.report.errors.iter().zip(&rep.closed_form_truncated) {
            assert_abs_diff_eq!(e, c, epsilon = 1e-12 * c);
        }
        let zero = exp_series_check(&ComplexPoint::planar(0.0, 0.0), 3, &basis).unwrap();
        assert_eq!(zero.report.errors[0], 0.0);
        assert!(exp_series_check(&ComplexPoint::planar(1.0, 0.0), 31, &basis).is_err());
    }

    #[test]
    fn kernel_star_distance_closed_form() {
        let a = ComplexPoint::planar(0.4, -0.2);
        let b = ComplexPoint::planar(-0.1, 0.3);
        let basis = BasisSpec::new(1, 60).unwrap();
        let ka = crate::fock::kernel_coeffs(&a, &basis).unwrap().vector;
        let kb = crate::fock::kernel_coeffs(&b, &basis).unwrap().vector;
        let numeric = norm_star(&ka.checked_sub(&kb).unwrap());
        assert_abs_diff_eq!(numeric, kernel_distance_star(&a, &b), epsilon = 1e-12);
    }

    #[test]
    fn quotient_converges_at_first_order() {
        let basis = b1();
        let a = MultiIndex::new(&[1]).unwrap();
        let b = MultiIndex::unit(1, 0).unwrap();
        let z = ComplexPoint::planar(1.0, 0.0);
        for step in [StepKind::Real, StepKind::Imaginary] {
            let rep = diff_quotient_check(&z, &a, &b, &[0.1, 0.05, 0.025], &basis, step).unwrap();
            assert!((rep.slope - 1.0).abs() < 0.2, "{step:?} slope {}", rep.slope);
        }
    }
}
