//! The Weyl translation U_z f(w) = f(z − w) k_z(w).

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fock::{BasisSpec, ComplexPoint, C64};
use crate::special::ln_factorial;

use super::{op_norm, OperatorMatrix};

/// Extra degrees kept when measuring what U_z pushes out of the basis.
const LEAK_REACH: u32 = 30;

/// One-variable block: entry (g, a) is the coefficient of e_g in
/// ((c − w)^a/√(a!)) k_c(w).
fn weyl_factor(c: C64, rows: u32, cols: u32) -> DMatrix<C64> {
    let r2 = c.norm_sqr();
    let mut m = DMatrix::zeros(rows as usize + 1, cols as usize + 1);
    if r2 == 0.0 {
        for a in 0..=rows.min(cols) {
            m[(a as usize, a as usize)] = C64::new(if a % 2 == 0 { 1.0 } else { -1.0 }, 0.0);
        }
        return m;
    }
    let ln_r = 0.5 * r2.ln();
    let unit = c / r2.sqrt();
    // Entry (g, a) is (−1)^j sqrt(j!/(j+k)!) r^k e^{−r²/2} L_j^{(k)}(r²) times a phase,
    // with j = min(a, g), k = |g − a|. The forward Laguerre recurrence avoids the
    // cancellation of the explicit alternating sum.
    for k in 0..=rows.max(cols) {
        let lower = rows.checked_sub(k).map(|top| top.min(cols));
        let upper = cols.checked_sub(k).map(|top| top.min(rows));
        if lower.is_none() && upper.is_none() {
            break;
        }
        let j_max = lower.unwrap_or(0).max(upper.unwrap_or(0));
        let order = k as f64;
        let (mut prev, mut cur) = (0.0, 1.0);
        for j in 0..=j_max {
            if j > 0 {
                let jf = (j - 1) as f64;
                let next = ((2.0 * jf + 1.0 + order - r2) * cur - (jf + order) * prev) / (jf + 1.0);
                prev = cur;
                cur = next;
            }
            let magnitude = if cur == 0.0 {
                0.0
            } else {
                let ln_pref = 0.5 * (ln_factorial(j) - ln_factorial(j + k)) + order * ln_r - 0.5 * r2;
                (ln_pref + cur.abs().ln()).exp()
            };
            let negative = (cur < 0.0) != (j % 2 == 1);
            let value = if negative { -magnitude } else { magnitude };
            if lower.is_some_and(|top| j <= top) {
                // g = j + k, a = j
                m[((j + k) as usize, j as usize)] = unit.conj().powu(k) * value;
            }
            if k > 0 && upper.is_some_and(|top| j <= top) {
                // g = j, a = j + k
                m[(j as usize, (j + k) as usize)] = unit.powu(k) * value;
            }
        }
    }
    m
}

/// P_range U_z P_domain as a rectangular matrix.
pub fn weyl_block(z: &ComplexPoint, domain: &BasisSpec, range: &BasisSpec) -> Result<DMatrix<C64>> {
    z.ensure_dim(domain.n())?;
    if domain.n() != range.n() {
        return Err(Error::DimensionMismatch {
            expected: domain.n(),
            got: range.n(),
        });
    }
    let factors: Vec<DMatrix<C64>> = z
        .coords()
        .iter()
        .map(|&c| weyl_factor(c, range.degree(), domain.degree()))
        .collect();
    Ok(DMatrix::from_fn(range.size(), domain.size(), |i, j| {
        let g = &range.indices()[i];
        let a = &domain.indices()[j];
        g.entries()
            .iter()
            .zip(a.entries())
            .zip(&factors)
            .map(|((&gi, &ai), f)| f[(gi as usize, ai as usize)])
            .product()
    }))
}

/// Truncated U_z with diagnostics of the mass it sends past degree D.
#[derive(Clone, Debug)]
pub struct WeylTranslation {
    /// P_D U_z P_D.
    pub matrix: OperatorMatrix,
    /// ‖(I − P_D) U_z e_α‖ for each basis column.
    pub column_leak: Vec<f64>,
    /// Degree of the intermediate space used by [`WeylTranslation::square`].
    pub guard_degree: u32,
    /// ‖(I − P_G) U_z P_D‖ for the guard degree G.
    pub guard_leak: f64,
    lift: DMatrix<C64>,
    descent: DMatrix<C64>,
}

impl WeylTranslation {
    /// P_D U_z P_G U_z P_D: the square composed through the guard space.
    pub fn square(&self) -> OperatorMatrix {
        OperatorMatrix::new(self.matrix.basis().clone(), &self.descent * &self.lift)
            .expect("square of a finite block")
    }

    /// Bound on ‖square() − I‖ from the mass beyond the guard degree: since
    /// U_z is a self-adjoint involution, the defect is B*B with
    /// B = (I − P_G) U_z P_D.
    pub fn square_budget(&self) -> f64 {
        self.guard_leak * self.guard_leak
    }
}

/// Builds P_D U_z P_D, per-column leak and the guard-degree lift P_G U_z P_D
/// with G = max(2D, D + 20).
pub fn weyl_translate(z: &ComplexPoint, basis: &BasisSpec) -> Result<WeylTranslation> {
    let d = basis.degree();
    let guard_degree = (2 * d).max(d + 20);
    let far = BasisSpec::new(basis.n(), guard_degree + LEAK_REACH)?;
    let full = weyl_block(z, basis, &far)?;
    let k = basis.size();
    let g = basis.n();
    let guard_rows = BasisSpec::new(g, guard_degree)?.size();
    let column_leak = (0..k)
        .map(|j| full.view((k, j), (full.nrows() - k, 1)).norm())
        .collect();
    let beyond = full.view((guard_rows, 0), (full.nrows() - guard_rows, k)).into_owned();
    let guard_leak = op_norm(&beyond).value;
    let matrix = OperatorMatrix::new(basis.clone(), full.view((0, 0), (k, k)).into_owned())?;
    let descent = weyl_block(z, &BasisSpec::new(g, guard_degree)?, basis)?;
    Ok(WeylTranslation {
        matrix,
        column_leak,
        guard_degree,
        guard_leak,
        lift: full.view((0, 0), (guard_rows, k)).into_owned(),
        descent,
    })
}
