use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{Experiment, GridSpec, LabConfig};
use super::report::{Check, CheckStatus, ExperimentReport, Table};
use crate::approximation::{
    average_to_toeplitz, averaged_frame, d0_build, diff_quotient_check, exp_series_check, partition_diagnostic,
    riemann_reconstruct, translated_family_bound, y_z_build, y_z_norm_bound, D0Spec, PartitionCell, StepKind,
    YzSpec,
};
use crate::error::Result;
use crate::fock::{kernel_coeffs, kernel_gram, kernel_matrix, kernel_tail_norm, ComplexPoint, FockVector, MultiIndex, C64};
use crate::lattice::{frame_operator, gaussian_lattice_sum, lattice_window, schur_bound, DoubleSum, LatticeKernel, LatticeWindow};
use crate::localization::{gaussian_bound_check, sample_pairs, sl_tail_bound, sl_tail_numeric, wl_profile, SLCertificate, SideProfile};
use crate::operators::{
    berezin_profile, op_norm, toeplitz_matrix, weyl_translate, OperatorMatrix, RadialProfile, SymbolSpec,
};
use crate::quadrature::build_rule;
use crate::tolerances::{ASSEMBLY_ROUNDING, KERNEL_ROUNDING, WEYL_ROUNDING};

pub(super) fn run(experiment: Experiment, cfg: &LabConfig, report: &mut ExperimentReport) -> Result<()> {
    match experiment {
        Experiment::KernelIdentities => kernel_identities(cfg, report),
        Experiment::GaussianBound => gaussian_bound(cfg, report),
        Experiment::SlImpliesWl => sl_implies_wl(cfg, report),
        Experiment::FrameNorm => frame_norm(cfg, report),
        Experiment::ResolutionIdentity => resolution_identity(cfg, report),
        Experiment::SchurConstants => schur_constants(cfg, report),
        Experiment::YzAveraging => yz_averaging(cfg, report),
        Experiment::D0Series => d0_series(cfg, report),
        Experiment::DiffQuotient => diff_quotient(cfg, report),
        Experiment::VrWrTails => vr_wr_tails(cfg, report),
        Experiment::RiemannReconstruct => riemann(cfg, report),
        Experiment::BerezinScan => berezin_scan(cfg, report),
    }
}

fn window(cfg: &LabConfig) -> Result<LatticeWindow> {
    lattice_window(cfg.n, cfg.window)
}

/// First coordinate as (re, im), which is where grids and scans live.
fn lead(p: &ComplexPoint) -> [f64; 2] {
    let c = p.coords()[0];
    [c.re, c.im]
}

fn point_on_axis(n: usize, c: C64) -> Result<ComplexPoint> {
    let mut coords = vec![C64::new(0.0, 0.0); n];
    coords[0] = c;
    ComplexPoint::new(&coords)
}

fn disc_indicator() -> SymbolSpec {
    SymbolSpec::Radial {
        profile: RadialProfile::Indicator { radius: 1.0 },
    }
}

fn toeplitz(cfg: &LabConfig, symbol: &SymbolSpec) -> Result<OperatorMatrix> {
    let rule = build_rule(symbol.natural_region(cfg.n)?, cfg.orders.toeplitz)?;
    toeplitz_matrix(symbol, &cfg.basis()?, &rule)
}

fn symbol_label(i: usize, s: &SymbolSpec) -> String {
    let kind = match s {
        SymbolSpec::Radial {
            profile: RadialProfile::Constant { .. },
        } => "constant",
        SymbolSpec::Radial {
            profile: RadialProfile::Indicator { .. },
        } => "indicator",
        SymbolSpec::Radial {
            profile: RadialProfile::Gaussian { .. },
        } => "gaussian",
        SymbolSpec::IndicatorBalls { .. } => "balls",
        SymbolSpec::PolyGaussian { .. } => "poly-gaussian",
        SymbolSpec::Sampled(_) => "sampled",
    };
    format!("{i}-{kind}")
}

/// Among items (value, allowance), the one closest to or furthest past its
/// allowance. NaN values win so that they surface as failures.
fn worst_by_excess(items: impl Iterator<Item = (f64, f64)>) -> (f64, f64) {
    items
        .fold(None, |acc: Option<(f64, f64)>, (v, a)| match acc {
            Some((av, aa)) if av.is_nan() || !(v - a > av - aa || v.is_nan()) => Some((av, aa)),
            _ => Some((v, a)),
        })
        .unwrap_or((0.0, 0.0))
}

fn monotone_non_increasing(values: &[f64], slack: f64) -> bool {
    values.windows(2).all(|p| p[1] <= p[0] + slack)
}

fn kernel_identities(cfg: &LabConfig, report: &mut ExperimentReport) -> Result<()> {
    let basis = cfg.basis()?;
    let d = basis.degree();
    let pts = cfg.grid.points(cfg.n)?;
    let k = kernel_matrix(&pts, &basis)?;
    let gram = k.adjoint() * &k;
    let tails: Vec<f64> = pts.iter().map(|p| kernel_tail_norm(p, d)).collect();
    let mut table = Table::new("gram", &["z_re", "z_im", "w_re", "w_im", "deviation", "budget"]);
    let mut rows = Vec::new();
    for (i, z) in pts.iter().enumerate() {
        for (j, w) in pts.iter().enumerate() {
            // gram[(j, i)] = ⟨P k_z, P k_w⟩
            let dev = (gram[(j, i)] - kernel_gram(z, w)).norm();
            let budget = tails[i] * tails[j] + KERNEL_ROUNDING;
            let [zr, zi] = lead(z);
            let [wr, wi] = lead(w);
            table.push(vec![zr, zi, wr, wi, dev, budget]);
            rows.push((dev, budget));
        }
    }
    let max_dev = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let (dev, budget) = worst_by_excess(rows.into_iter());
    report.checks.push(Check::upper("gram-within-tail-budget", dev, 0.0, budget));
    report
        .checks
        .push(Check::upper("gram-absolute", max_dev, cfg.tolerances.kernel, 0.0));
    report.tables.push(table);

    let n = cfg.n;
    let shifts = [
        C64::new(0.0, 0.0),
        C64::new(1.0, 0.0),
        C64::new(0.0, 1.0),
        C64::new(1.0, 1.0),
    ];
    let cell = GridSpec::unit_cell(cfg.cell_points).points(n)?;
    let mut cov = Table::new("weyl-covariance", &["u_re", "u_im", "z_re", "z_im", "deviation", "budget"]);
    let mut cov_rows = Vec::new();
    let mut squares = Table::new("weyl-square", &["u_re", "u_im", "deviation", "budget"]);
    for s in shifts {
        let u = point_on_axis(n, s)?;
        let weyl = weyl_translate(&u, &basis)?;
        for z in &cell {
            let kz = kernel_coeffs(z, &basis)?;
            let lhs = weyl.matrix.apply(&kz.vector)?;
            let phase = C64::new(0.0, u.inner(z).im).exp();
            let rhs = kernel_coeffs(&(u - *z), &basis)?.vector.scale(phase);
            let dev = (lhs.coeffs() - rhs.coeffs()).norm();
            let tails = kz.tail_norm() + kernel_tail_norm(&(u - *z), d) + KERNEL_ROUNDING;
            let [zr, zi] = lead(z);
            cov.push(vec![s.re, s.im, zr, zi, dev, tails]);
            cov_rows.push((dev, cfg.tolerances.covariance_factor * tails));
        }
        let sq = op_norm(&(weyl.square().entries() - DMatrix::<C64>::identity(basis.size(), basis.size())));
        if !sq.converged {
            report.notes.push(format!("norm of U_u² − I for u = {u} did not converge"));
        }
        let sq_budget = weyl.square_budget() + WEYL_ROUNDING;
        squares.push(vec![s.re, s.im, sq.value, sq_budget]);
        report.checks.push(Check::upper(
            format!("weyl-square-u={}", fmt_c(s)),
            sq.value,
            cfg.tolerances.weyl_square,
            sq_budget,
        ));
    }
    let (dev, allowed) = worst_by_excess(cov_rows.into_iter());
    report.checks.push(Check::upper("weyl-covariance", dev, allowed, 0.0));
    report.tables.push(cov);
    report.tables.push(squares);
    Ok(())
}

fn fmt_c(c: C64) -> String {
    format!("{}{:+}i", c.re, c.im)
}

fn gaussian_bound(cfg: &LabConfig, report: &mut ExperimentReport) -> Result<()> {
    let basis = cfg.basis()?;
    let s = &cfg.samples;
    let pairs = sample_pairs(cfg.n, s.count, s.radius, s.seed)?;
    for (i, symbol) in cfg.gaussian_symbols().iter().enumerate() {
        let label = symbol_label(i, symbol);
        let r = gaussian_bound_check(symbol, &basis, cfg.orders.toeplitz, &pairs)?;
        let mut table = Table::new(
            format!("gaussian-bound-{label}"),
            &["z_re", "z_im", "w_re", "w_im", "value", "bound", "budget"],
        );
        for b in &r.samples {
            let [zr, zi] = lead(&b.z);
            let [wr, wi] = lead(&b.w);
            table.push(vec![zr, zi, wr, wi, b.value, b.bound, b.budget]);
        }
        report.tables.push(table);
        let status = if r.worst_raw_margin >= 0.0 {
            CheckStatus::Pass
        } else if r.passed() {
            CheckStatus::PassWithinBudget
        } else {
            CheckStatus::Fail
        };
        report.checks.push(Check {
            name: format!("gaussian-bound-{label}"),
            status,
            value: r.violations.len() as f64,
            threshold: 0.0,
            budget: r.worst_margin - r.worst_raw_margin,
        });
        report.budgets.push((format!("quadrature-gap-{label}"), r.quadrature_gap));
        report.budgets.push((format!("worst-margin-{label}"), r.worst_margin));
    }
    Ok(())
}

fn profile_table(name: &str, side: &SideProfile) -> Table {
    let mut t = Table::new(name, &["r", "tail", "budget"]);
    for row in &side.tails {
        t.push(vec![row.r, row.tail, row.budget]);
    }
    t
}

fn sl_implies_wl(cfg: &LabConfig, report: &mut ExperimentReport) -> Result<()> {
    let n = cfg.n;
    let mut table = Table::new("sl-tails", &["beta", "r", "numeric", "bound"]);
    for &beta in &cfg.sl.exponents {
        let cert = SLCertificate::new(cfg.sl.constant, beta, n)?;
        for &r in &cfg.sl.radii {
            let numeric = sl_tail_numeric(&cert, n, r, cfg.orders.sl)?;
            let bound = sl_tail_bound(&cert, n, r)?;
            table.push(vec![beta, r, numeric, bound]);
            report.checks.push(Check::upper(
                format!("sl-tail-beta={beta}-r={r}"),
                numeric,
                bound,
                1e-12 * bound,
            ));
        }
    }
    report.tables.push(table);

    // Tail profile of T_χ for χ the unit-disc indicator over the unit cell grid.
    let b = toeplitz(cfg, &disc_indicator())?;
    let grid = GridSpec::unit_cell(cfg.cell_points).points(n)?;
    let profile = wl_profile(&b, &grid, &cfg.radii, cfg.orders.profile)?;
    for (name, side) in [("profile-operator", &profile.operator), ("profile-adjoint", &profile.adjoint)] {
        let tails: Vec<f64> = side.tails.iter().map(|r| r.tail).collect();
        report
            .checks
            .push(Check::holds(format!("{name}-non-increasing"), monotone_non_increasing(&tails, 0.0)));
        report.checks.push(Check::holds(
            format!("{name}-finite-total"),
            side.total.is_finite() && side.total_budget.is_finite(),
        ));
        report.budgets.push((format!("{name}-total"), side.total));
        report.budgets.push((format!("{name}-total-budget"), side.total_budget));
        report.tables.push(profile_table(name, side));
    }
    Ok(())
}

fn frame_norm(cfg: &LabConfig, report: &mut ExperimentReport) -> Result<()> {
    let basis = cfg.basis()?;
    let win = window(cfg)?;
    let bound = gaussian_lattice_sum(0.5, 2 * cfg.n) / PI.powi(cfg.n as i32);
    let mut table = Table::new("frame-norm", &["z_re", "z_im", "norm", "bound", "budget"]);
    let mut rows = Vec::new();
    for z in GridSpec::unit_cell(cfg.cell_points).points(cfg.n)? {
        let f = frame_operator(&z, &win, &basis)?;
        let norm = f.matrix.op_norm();
        if !norm.converged {
            report.notes.push(format!("norm of E_z at {z} did not converge"));
        }
        let budget = f.window_budget + ASSEMBLY_ROUNDING;
        let [zr, zi] = lead(&z);
        table.push(vec![zr, zi, norm.value, bound, budget]);
        rows.push((norm.value, budget));
    }
    let (value, budget) = worst_by_excess(rows.into_iter().map(|(v, b)| (v, bound + b)));
    report
        .checks
        .push(Check::upper("frame-norm", value, bound, budget - bound));
    report.budgets.push(("lattice-bound".into(), bound));
    report.tables.push(table);
    Ok(())
}

fn resolution_identity(cfg: &LabConfig, report: &mut ExperimentReport) -> Result<()> {
    let basis = cfg.basis()?;
    let win = window(cfg)?;
    let m = basis.prefix_len(cfg.sub_degree);
    let identity = DMatrix::<C64>::identity(m, m);
    let mut params = Vec::new();
    let mut errors = Vec::new();
    let mut budgets = Vec::new();
    for &order in &cfg.orders.resolution {
        let (avg, delta) = averaged_frame(order, &win, &basis, cfg.sub_degree)?;
        let err = op_norm(&(avg.restricted(cfg.sub_degree) - &identity)).value;
        params.push(order as f64);
        errors.push(err);
        budgets.push(delta + ASSEMBLY_ROUNDING);
    }
    report.checks.push(Check::upper(
        format!("sub-basis-error-order-{}", cfg.orders.resolution[0]),
        errors[0],
        cfg.tolerances.resolution,
        budgets[0],
    ));
    report.checks.push(Check::holds(
        "refinement-decreases",
        errors.windows(2).all(|p| p[1] < p[0]),
    ));
    report.tables.push(Table::convergence("resolution", &params, &errors, &budgets));
    Ok(())
}

fn schur_constants(cfg: &LabConfig, report: &mut ExperimentReport) -> Result<()> {
    let basis = cfg.basis()?;
    let win = window(cfg)?;
    let n = cfg.n;
    let kernel = LatticeKernel::from_fn(&win, |u, v| (-0.5 * u.distance(v).powi(2)).exp())?;
    let complex = kernel.values().map(|v| C64::new(v, 0.0));
    let norm = op_norm(&complex).value;
    let full = gaussian_lattice_sum(0.5, 2 * n);
    let mut table = Table::new("schur", &["weights", "c1", "c2", "bound", "norm"]);
    let weight_sets: [(&str, Vec<f64>); 2] = [
        ("constant", vec![1.0; win.len()]),
        ("gaussian", win.points().iter().map(|u| (-u.norm_sqr() / 16.0).exp()).collect()),
    ];
    for (i, (label, weights)) in weight_sets.iter().enumerate() {
        let s = schur_bound(&kernel, weights)?;
        table.push(vec![i as f64, s.c1, s.c2, s.bound, norm]);
        report.checks.push(Check::upper(
            format!("schur-dominates-norm-{label}-weights"),
            norm,
            s.bound,
            ASSEMBLY_ROUNDING,
        ));
        if i == 0 {
            report
                .checks
                .push(Check::upper("constant-weights-below-lattice-sum", s.bound, full, ASSEMBLY_ROUNDING));
            let frame = frame_operator(&ComplexPoint::origin(n)?, &win, &basis)?;
            let scaled = frame.matrix.op_norm().value * PI.powi(n as i32);
            report
                .checks
                .push(Check::upper("frame-gram-below-schur", scaled, s.bound, ASSEMBLY_ROUNDING));
        }
    }
    report.budgets.push(("lattice-sum".into(), full));
    report.tables.push(table);
    Ok(())
}

/// Deterministic ±1 coefficients.
fn sign_pattern(len: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| C64::new(if rng.gen::<bool>() { 1.0 } else { -1.0 }, 0.0))
        .collect()
}

fn yz_averaging(cfg: &LabConfig, report: &mut ExperimentReport) -> Result<()> {
    let basis = cfg.basis()?;
    let win = window(cfg)?;
    let origin = ComplexPoint::origin(cfg.n)?;
    let tol = &cfg.tolerances;
    let patterns = [
        ("ones", vec![C64::new(1.0, 0.0); win.len()]),
        ("signs", sign_pattern(win.len(), cfg.samples.seed)),
    ];
    for (label, coeffs) in patterns {
        let spec = YzSpec::new(coeffs, origin)?;
        let y = y_z_build(&spec, &win, &basis)?;
        report.checks.push(Check::upper(
            format!("{label}-y-norm-bound"),
            y.op_norm().value,
            y_z_norm_bound(&spec, cfg.n),
            ASSEMBLY_ROUNDING,
        ));
        let mut errors = Vec::new();
        let mut budgets = Vec::new();
        for &eps in &cfg.epsilons {
            let avg = average_to_toeplitz(&spec, eps, &win, &basis, cfg.orders.ball)?;
            errors.push(avg.error);
            budgets.push(avg.quadrature_gap + avg.truncation_estimate);
        }
        let last = errors.len() - 1;
        report.checks.push(Check::upper(
            format!("{label}-error-ratio"),
            errors[last] / errors[0],
            tol.averaging_ratio,
            0.0,
        ));
        report.checks.push(Check::upper(
            format!("{label}-error-within-budget"),
            errors[last],
            tol.budget_factor * budgets[last],
            0.0,
        ));
        let decreasing = errors.windows(2).zip(budgets.iter().skip(1)).all(|(p, b)| p[1] <= p[0] + b);
        report.checks.push(Check::holds(format!("{label}-decreasing"), decreasing));
        report
            .tables
            .push(Table::convergence(format!("yz-{label}"), &cfg.epsilons, &errors, &budgets));
    }
    Ok(())
}

fn d0_series(cfg: &LabConfig, report: &mut ExperimentReport) -> Result<()> {
    let basis = cfg.basis()?;
    let win = window(cfg)?;
    let n = cfg.n;
    let w = cfg.series_point()?;
    let ones = vec![C64::new(1.0, 0.0); win.len()];

    let d0 = D0Spec::translation(ones.clone(), &w, &win)?;
    let op = d0_build(&d0, &win, &basis)?;
    report.checks.push(Check::upper(
        "d0-norm-bound",
        op.op_norm().value,
        gaussian_lattice_sum(0.5, 2 * n),
        ASSEMBLY_ROUNDING,
    ));

    let kernel = kernel_coeffs(&w, &basis)?.vector;
    let vacuum = FockVector::basis_vector(&basis, &MultiIndex::zeros(n)?)?;
    let mut fam = Table::new("translated-family", &["family", "norm", "bound", "sup_norm_star"]);
    for (i, (label, h)) in [("kernel", kernel), ("vacuum", vacuum)].into_iter().enumerate() {
        let family = translated_family_bound(&vec![h; win.len()], &win, &basis)?;
        fam.push(vec![i as f64, family.norm, family.bound, family.sup_norm_star]);
        report.checks.push(Check::upper(
            format!("translated-family-{label}"),
            family.norm,
            family.bound,
            ASSEMBLY_ROUNDING,
        ));
    }
    report.tables.push(fam);

    // ψ(u) = w + 0.1·Re(u₁)/W, with cells split by the sign of Re(u₁).
    let shift = |u: &ComplexPoint| -> Result<ComplexPoint> {
        Ok(w + point_on_axis(n, C64::new(0.1 * u.coords()[0].re / cfg.window as f64, 0.0))?)
    };
    let mut targets = Vec::with_capacity(win.len());
    let mut left = Vec::new();
    let mut right = Vec::new();
    for (j, u) in win.points().iter().enumerate() {
        targets.push(*u - shift(u)?);
        if u.coords()[0].re < 0.0 {
            left.push(j);
        } else {
            right.push(j);
        }
    }
    let bound = targets
        .iter()
        .zip(win.points())
        .map(|(g, u)| u.distance(g))
        .fold(0.0, f64::max);
    let spec = D0Spec::new(ones, targets, bound, &win)?;
    let cells = [
        PartitionCell {
            anchor: w + point_on_axis(n, C64::new(-0.05, 0.0))?,
            members: left,
        },
        PartitionCell {
            anchor: w + point_on_axis(n, C64::new(0.05, 0.0))?,
            members: right,
        },
    ];
    let diag = partition_diagnostic(&spec, &cells, &win, &basis)?;
    report.checks.push(Check::upper(
        "partition-difference",
        diag.difference,
        diag.bound,
        ASSEMBLY_ROUNDING,
    ));

    let series = exp_series_check(&w, cfg.series.k_max, &basis)?;
    let e = &series.report.errors;
    report.checks.push(Check::holds(
        "series-strictly-decreasing",
        e.windows(2).all(|p| p[1] < p[0]),
    ));
    if e.len() >= 2 {
        let k = e.len() - 1;
        report.checks.push(Check::upper(
            "series-last-ratio",
            e[k] / e[k - 1],
            cfg.tolerances.series_ratio,
            0.0,
        ));
    }
    let (excess, allowed) = worst_by_excess(
        e.iter()
            .zip(&series.closed_form)
            .map(|(err, c)| (*err, c + KERNEL_ROUNDING * c.max(1.0))),
    );
    report
        .checks
        .push(Check::upper("series-dominated-by-closed-form", excess, allowed, 0.0));
    let r = &series.report;
    report
        .tables
        .push(Table::convergence("series", &r.parameters, &r.errors, &r.budgets));
    let mut closed = Table::new("series-closed-form", &["k", "truncated", "untruncated"]);
    for ((k, t), c) in r.parameters.iter().zip(&series.closed_form_truncated).zip(&series.closed_form) {
        closed.push(vec![*k, *t, *c]);
    }
    report.tables.push(closed);
    Ok(())
}

fn diff_quotient(cfg: &LabConfig, report: &mut ExperimentReport) -> Result<()> {
    let basis = cfg.basis()?;
    let z = cfg.quotient_point()?;
    let (a, b) = cfg.quotient_indices()?;
    let ts = &cfg.quotient.t;
    let tol = cfg.tolerances.slope;
    let mut norms = Table::new("kernel-norms", &["t", "norm", "limit"]);
    for (label, step) in [("real", StepKind::Real), ("imaginary", StepKind::Imaginary)] {
        let q = diff_quotient_check(&z, &a, &b, ts, &basis, step)?;
        report.checks.push(Check::upper(
            format!("{label}-slope"),
            (q.slope - 1.0).abs(),
            tol,
            0.0,
        ));
        let e = &q.report.errors;
        let ratio = e[e.len() - 1] / e[e.len() - 2];
        let halving = (ts[ts.len() - 1] / ts[ts.len() - 2] - 0.5).abs() < 1e-12;
        if halving {
            report.checks.push(Check::holds(
                format!("{label}-halving-ratio-in-[0.4,0.6]"),
                (0.4..=0.6).contains(&ratio),
            ));
        }
        if step == StepKind::Real {
            let dist: Vec<f64> = q.kernel_norms.iter().map(|v| (v - q.kernel_norm_limit).abs()).collect();
            report
                .checks
                .push(Check::holds("kernel-norms-approach-limit", dist.windows(2).all(|p| p[1] < p[0])));
            for (t, v) in ts.iter().zip(&q.kernel_norms) {
                norms.push(vec![*t, *v, q.kernel_norm_limit]);
            }
        }
        let r = &q.report;
        report
            .tables
            .push(Table::convergence(format!("quotient-{label}"), &r.parameters, &r.errors, &r.budgets));
    }
    report.tables.push(norms);
    Ok(())
}

fn vr_wr_tails(cfg: &LabConfig, report: &mut ExperimentReport) -> Result<()> {
    let win = window(cfg)?;
    let n = cfg.n;
    let b = toeplitz(cfg, &disc_indicator())?;
    let origin = ComplexPoint::origin(n)?;
    let sum = DoubleSum::new(&b, &origin, &origin, &win)?;
    let whole = sum.assembled()?;
    let delta = crate::lattice::window_budget(&origin, &win, cfg.degree);
    let budget = b.op_norm().value * (2.0 * delta + delta * delta) + ASSEMBLY_ROUNDING;
    let mut far_norms = Vec::new();
    let mut split_err = 0.0f64;
    let mut tails = Table::new("tail-sup", &["r", "tail", "budget"]);
    for &r in &cfg.radii {
        let split = sum.split(r)?;
        far_norms.push(split.far.op_norm().value);
        let recon = split.near.checked_add(&split.far)?;
        split_err = split_err.max(op_norm(&(whole.entries() - recon.entries())).value);
        tails.push(vec![r, sum.tail_sup(r), budget]);
    }
    report.checks.push(Check::holds(
        "far-part-non-increasing",
        monotone_non_increasing(&far_norms, ASSEMBLY_ROUNDING),
    ));
    report.checks.push(Check::upper(
        format!("far-part-at-r={}", cfg.radii[cfg.radii.len() - 1]),
        far_norms[far_norms.len() - 1],
        cfg.tolerances.far_tail,
        budget,
    ));
    report
        .checks
        .push(Check::upper("near-plus-far-reproduces", split_err, cfg.tolerances.split, 0.0));
    report.tables.push(Table::convergence(
        "vr-wr",
        &cfg.radii,
        &far_norms,
        &vec![budget; far_norms.len()],
    ));
    report.tables.push(tails);
    Ok(())
}

fn riemann(cfg: &LabConfig, report: &mut ExperimentReport) -> Result<()> {
    let basis = cfg.basis()?;
    let win = window(cfg)?;
    let tol = &cfg.tolerances;
    let ops = [
        ("identity", OperatorMatrix::identity(&basis)),
        ("indicator", toeplitz(cfg, &disc_indicator())?),
    ];
    for (label, b) in ops {
        let r = riemann_reconstruct(&b, &cfg.orders.riemann, &win)?;
        let last = r.errors.len() - 1;
        let budgets: Vec<f64> = r.budgets.iter().map(|v| v + ASSEMBLY_ROUNDING).collect();
        report.checks.push(Check::upper(
            format!("{label}-refinement-ratio"),
            r.errors[last] / r.errors[0],
            tol.riemann_ratio,
            0.0,
        ));
        report.checks.push(Check::upper(
            format!("{label}-error-within-budget"),
            r.errors[last],
            tol.budget_factor * budgets[last],
            0.0,
        ));
        report
            .tables
            .push(Table::convergence(format!("riemann-{label}"), &r.parameters, &r.errors, &budgets));
    }
    Ok(())
}

fn berezin_table(name: &str, points: &[ComplexPoint], values: &[C64], budgets: &[f64]) -> Table {
    let mut t = Table::new(name, &["z_re", "z_im", "berezin_re", "berezin_im", "budget"]);
    for ((p, v), b) in points.iter().zip(values).zip(budgets) {
        let [re, im] = lead(p);
        t.push(vec![re, im, v.re, v.im, *b]);
    }
    t
}

fn berezin_scan(cfg: &LabConfig, report: &mut ExperimentReport) -> Result<()> {
    let basis = cfg.basis()?;
    let n = cfg.n;
    let grid = cfg.grid.points(n)?;
    let id = berezin_profile(&OperatorMatrix::identity(&basis), &grid)?;
    let dev = id.values.iter().map(|v| (v - C64::new(1.0, 0.0)).norm()).fold(0.0, f64::max);
    report
        .checks
        .push(Check::upper("identity-equals-one", dev, cfg.tolerances.berezin_identity, 0.0));
    report
        .tables
        .push(berezin_table("berezin-identity", &id.points, &id.values, &id.budgets));

    let b = toeplitz(cfg, &disc_indicator())?;
    let dirs = cfg.berezin.directions;
    let mut pts = Vec::new();
    for &r in &cfg.berezin.radii {
        for k in 0..dirs {
            pts.push(point_on_axis(n, C64::from_polar(r, 2.0 * PI * k as f64 / dirs as f64))?);
        }
    }
    let prof = berezin_profile(&b, &pts)?;
    let rows = prof.points.iter().zip(&prof.values).zip(&prof.budgets).map(|((p, v), bud)| {
        let bound = (-(p.norm() - 1.0).powi(2)).exp();
        (v.re - bound, *bud + KERNEL_ROUNDING)
    });
    let (excess, budget) = worst_by_excess(rows);
    report
        .checks
        .push(Check::upper("indicator-below-gaussian-envelope", excess, 0.0, budget));
    let imag = prof.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    let imag_budget = prof.budgets.iter().cloned().fold(0.0, f64::max) + KERNEL_ROUNDING;
    report.checks.push(Check::upper("indicator-real", imag, 0.0, imag_budget));
    report
        .tables
        .push(berezin_table("berezin-indicator", &prof.points, &prof.values, &prof.budgets));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn excess_picks_worst() {
        let (v, a) = worst_by_excess([(1.0, 2.0), (3.0, 2.5), (0.1, 0.0)].into_iter());
        assert_eq!((v, a), (3.0, 2.5));
        assert_eq!(worst_by_excess([(1.0, 3.0), (1.0, 2.0)].into_iter()), (1.0, 2.0));
        assert!(worst_by_excess([(1.0, 3.0), (f64::NAN, 2.0), (9.0, 0.0)].into_iter()).0.is_nan());
    }

    #[test]
    fn sign_pattern_is_deterministic() {
        let a = sign_pattern(50, 3);
        assert_eq!(a, sign_pattern(50, 3));
        assert!(a.iter().all(|c| c.norm() == 1.0));
        assert!(a.iter().any(|c| c.re < 0.0) && a.iter().any(|c| c.re > 0.0));
    }
}
