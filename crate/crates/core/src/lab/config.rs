use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{check_dim, BasisSpec, ComplexPoint, MultiIndex, C64};
use crate::operators::{SampledSymbol, SymbolSpec};

/// The named experiments, in the order `focklab list` prints them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    KernelIdentities,
    GaussianBound,
    SlImpliesWl,
    FrameNorm,
    ResolutionIdentity,
    SchurConstants,
    YzAveraging,
    D0Series,
    DiffQuotient,
    VrWrTails,
    RiemannReconstruct,
    BerezinScan,
}

impl Experiment {
    pub const ALL: [Experiment; 12] = [
        Experiment::KernelIdentities,
        Experiment::GaussianBound,
        Experiment::SlImpliesWl,
        Experiment::FrameNorm,
        Experiment::ResolutionIdentity,
        Experiment::SchurConstants,
        Experiment::YzAveraging,
        Experiment::D0Series,
        Experiment::DiffQuotient,
        Experiment::VrWrTails,
        Experiment::RiemannReconstruct,
        Experiment::BerezinScan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::KernelIdentities => "kernel-identities",
            Experiment::GaussianBound => "gaussian-bound",
            Experiment::SlImpliesWl => "sl-implies-wl",
            Experiment::FrameNorm => "frame-norm",
            Experiment::ResolutionIdentity => "resolution-identity",
            Experiment::SchurConstants => "schur-constants",
            Experiment::YzAveraging => "yz-averaging",
            Experiment::D0Series => "d0-series",
            Experiment::DiffQuotient => "diff-quotient",
            Experiment::VrWrTails => "vr-wr-tails",
            Experiment::RiemannReconstruct => "riemann-reconstruct",
            Experiment::BerezinScan => "berezin-scan",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            Experiment::KernelIdentities => "truncated kernel Gram values and Weyl translation identities",
            Experiment::GaussianBound => "off-diagonal Gaussian decay of Toeplitz kernel coefficients",
            Experiment::SlImpliesWl => "power-law coefficient bounds give integrable tails",
            Experiment::FrameNorm => "uniform norm bound for the lattice frame operators",
            Experiment::ResolutionIdentity => "cube average of frame operators against the identity",
            Experiment::SchurConstants => "discrete Schur test for the lattice Gram kernel",
            Experiment::YzAveraging => "lattice sums Y_0 approximated by indicator-ball Toeplitz operators",
            Experiment::D0Series => "translated lattice sums, translated families and exponential series",
            Experiment::DiffQuotient => "difference quotients of shifted kernels",
            Experiment::VrWrTails => "near/far splitting of E_w B E_z",
            Experiment::RiemannReconstruct => "reconstruction of B from cube sums of E_w B E_z",
            Experiment::BerezinScan => "Berezin transforms far from the origin",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::UnknownExperiment(s.to_string()))
    }
}

/// Quadrature orders used by the experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureOrders {
    /// Natural-region rule for Toeplitz symbols.
    pub toeplitz: usize,
    /// Per-ball polar rule for indicator-ball symbols.
    pub ball: usize,
    /// Cube rule orders for the resolution of identity: the first is judged
    /// against the tolerance, the rest must improve on it.
    pub resolution: Vec<usize>,
    /// Cube rule orders for Riemann reconstruction: the last is compared
    /// with the first.
    pub riemann: Vec<usize>,
    /// Annular rule for tail profiles.
    pub profile: usize,
    /// Panel order for power-law tail integrals.
    pub sl: usize,
}

impl Default for QuadratureOrders {
    fn default() -> Self {
        Self {
            toeplitz: 8,
            ball: 8,
            resolution: vec![8, 12],
            riemann: vec![2, 4, 8],
            profile: 24,
            sl: 32,
        }
    }
}

/// A square grid [lo, hi]² placed in the first coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            lo: -2.0,
            hi: 2.0,
            points: 7,
        }
    }
}

impl GridSpec {
    pub fn unit_cell(points: usize) -> Self {
        Self { lo: 0.0, hi: 1.0, points }
    }

    /// Points x + iy in the first coordinate, other coordinates zero; x runs
    /// fastest.
    pub fn points(&self, n: usize) -> Result<Vec<ComplexPoint>> {
        let ticks = self.ticks();
        let mut out = Vec::with_capacity(ticks.len() * ticks.len());
        for &y in &ticks {
            for &x in &ticks {
                let mut coords = vec![C64::new(0.0, 0.0); n];
                coords[0] = C64::new(x, y);
                out.push(ComplexPoint::new(&coords)?);
            }
        }
        Ok(out)
    }

    fn ticks(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.lo];
        }
        let h = (self.hi - self.lo) / (self.points - 1) as f64;
        (0..self.points).map(|i| self.lo + i as f64 * h).collect()
    }
}

/// Thresholds applied by the checks. A value at or below the threshold
/// passes; within threshold + budget it passes within budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub kernel: f64,
    pub weyl_square: f64,
    /// Multiple of the combined kernel tails allowed for Weyl covariance.
    pub covariance_factor: f64,
    pub resolution: f64,
    pub averaging_ratio: f64,
    /// Multiple of a combined budget allowed for converged errors.
    pub budget_factor: f64,
    pub far_tail: f64,
    pub split: f64,
    pub series_ratio: f64,
    pub slope: f64,
    pub riemann_ratio: f64,
    pub berezin_identity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            kernel: 1e-8,
            weyl_square: 1e-5,
            covariance_factor: 10.0,
            resolution: 1e-3,
            averaging_ratio: 0.25,
            budget_factor: 10.0,
            far_tail: 1e-3,
            split: 1e-10,
            series_ratio: 0.2,
            slope: 0.2,
            riemann_ratio: 0.5,
            berezin_identity: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleSpec {
    pub count: usize,
    pub radius: f64,
    pub seed: u64,
}

impl Default for SampleSpec {
    fn default() -> Self {
        Self {
            count: 100,
            radius: 3.0,
            seed: 20_240_601,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeriesSpec {
    /// Defaults to (1, 0, …).
    pub w: Option<ComplexPoint>,
    pub k_max: u32,
}

impl Default for SeriesSpec {
    fn default() -> Self {
        Self { w: None, k_max: 6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuotientSpec {
    /// Defaults to (1, 0, …).
    pub z: Option<ComplexPoint>,
    /// Defaults to (1, 0, …).
    pub a: Option<MultiIndex>,
    /// Defaults to the first unit index.
    pub b: Option<MultiIndex>,
    pub t: Vec<f64>,
}

impl Default for QuotientSpec {
    fn default() -> Self {
        Self {
            z: None,
            a: None,
            b: None,
            t: vec![0.1, 0.05, 0.025],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SlSpec {
    pub constant: f64,
    pub exponents: Vec<f64>,
    pub radii: Vec<f64>,
}

impl Default for SlSpec {
    fn default() -> Self {
        Self {
            constant: 1.0,
            exponents: vec![3.0, 4.0, 6.0],
            radii: vec![1.0, 2.0, 4.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BerezinSpec {
    /// Moduli |z| probed for the indicator symbol.
    pub radii: Vec<f64>,
    /// Equally spaced arguments per modulus.
    pub directions: usize,
}

impl Default for BerezinSpec {
    fn default() -> Self {
        Self {
            radii: vec![2.0, 3.0, 4.0],
            directions: 8,
        }
    }
}

/// Everything an experiment reads. Missing JSON fields take their defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabConfig {
    pub experiment: Option<Experiment>,
    pub n: usize,
    pub degree: u32,
    pub window: u32,
    pub orders: QuadratureOrders,
    /// Plane grid for kernel identities and localization profiles.
    pub grid: GridSpec,
    /// Points per axis of the grid in the unit cell.
    pub cell_points: usize,
    /// Radii for tail profiles and near/far splitting, ascending.
    pub radii: Vec<f64>,
    pub tolerances: Tolerances,
    pub out: Option<PathBuf>,
    pub samples: SampleSpec,
    /// Symbols for the Gaussian bound; defaults depend on n.
    pub symbols: Option<Vec<SymbolSpec>>,
    /// Ball radii for Y_0 averaging, in decreasing order.
    pub epsilons: Vec<f64>,
    /// Degree of the sub-basis on which the resolution of identity is judged.
    pub sub_degree: u32,
    pub series: SeriesSpec,
    pub quotient: QuotientSpec,
    pub sl: SlSpec,
    pub berezin: BerezinSpec,
}

impl Default for LabConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            n: 1,
            degree: 30,
            window: 5,
            orders: QuadratureOrders::default(),
            grid: GridSpec::default(),
            cell_points: 5,
            radii: vec![1.0, 2.0, 3.0, 4.0],
            tolerances: Tolerances::default(),
            out: None,
            samples: SampleSpec::default(),
            symbols: None,
            epsilons: vec![0.4, 0.2, 0.1, 0.05],
            sub_degree: 15,
            series: SeriesSpec::default(),
            quotient: QuotientSpec::default(),
            sl: SlSpec::default(),
            berezin: BerezinSpec::default(),
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

fn first_axis(n: usize) -> Result<ComplexPoint> {
    let mut coords = vec![C64::new(0.0, 0.0); n];
    coords[0] = C64::new(1.0, 0.0);
    ComplexPoint::new(&coords)
}

/// Smooth compactly supported bump e^{1 − 1/(1 − r²)} on the unit disc,
/// sampled on a 41 × 41 grid over [−1, 1]².
pub fn default_bump() -> SymbolSpec {
    SymbolSpec::Sampled(SampledSymbol::from_fn(-1.0, -1.0, 0.05, 41, 41, |x, y| {
        let r2 = x * x + y * y;
        if r2 < 1.0 {
            C64::new((1.0 - 1.0 / (1.0 - r2)).exp(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    }))
}

impl LabConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| invalid(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn basis(&self) -> Result<BasisSpec> {
        BasisSpec::new(self.n, self.degree)
    }

    pub fn series_point(&self) -> Result<ComplexPoint> {
        self.series.w.map_or_else(|| first_axis(self.n), Ok)
    }

    pub fn quotient_point(&self) -> Result<ComplexPoint> {
        self.quotient.z.map_or_else(|| first_axis(self.n), Ok)
    }

    pub fn quotient_indices(&self) -> Result<(MultiIndex, MultiIndex)> {
        let a = match self.quotient.a {
            Some(a) => a,
            None => MultiIndex::unit(self.n, 0)?,
        };
        let b = match self.quotient.b {
            Some(b) => b,
            None => MultiIndex::unit(self.n, 0)?,
        };
        Ok((a, b))
    }

    /// Symbols for the Gaussian bound: 1, χ_{B(0,1)} and, for n = 1, a
    /// sampled bump.
    pub fn gaussian_symbols(&self) -> Vec<SymbolSpec> {
        use crate::operators::RadialProfile;
        if let Some(s) = &self.symbols {
            return s.clone();
        }
        let mut out = vec![
            SymbolSpec::Radial {
                profile: RadialProfile::Constant { value: 1.0 },
            },
            SymbolSpec::Radial {
                profile: RadialProfile::Indicator { radius: 1.0 },
            },
        ];
        if self.n == 1 {
            out.push(default_bump());
        }
        out
    }

    /// Checks every field against the preconditions of the operations it
    /// feeds, before anything is computed.
    pub fn validate(&self) -> Result<()> {
        check_dim(self.n).map_err(|e| invalid(e.to_string()))?;
        if self.degree == 0 {
            return Err(invalid("degree must be at least 1"));
        }
        if self.window == 0 {
            return Err(invalid("window must be at least 1"));
        }
        let o = &self.orders;
        for (name, v) in [("toeplitz", o.toeplitz), ("ball", o.ball), ("profile", o.profile)] {
            if v == 0 {
                return Err(invalid(format!("orders.{name} must be at least 1")));
            }
        }
        if o.sl < 2 {
            return Err(invalid("orders.sl must be at least 2"));
        }
        for (name, list) in [("resolution", &o.resolution), ("riemann", &o.riemann)] {
            if list.len() < 2 || list.contains(&0) || list.windows(2).any(|p| p[0] >= p[1]) {
                return Err(invalid(format!(
                    "orders.{name} needs at least two positive, strictly increasing orders"
                )));
            }
        }
        let g = &self.grid;
        if g.points == 0 || !(g.lo.is_finite() && g.hi.is_finite()) || (g.points > 1 && !(g.lo < g.hi)) {
            return Err(invalid("grid needs points ≥ 1 and finite lo < hi"));
        }
        if self.cell_points == 0 {
            return Err(invalid("cell_points must be at least 1"));
        }
        ascending_positive("radii", &self.radii)?;
        ascending_positive("sl.radii", &self.sl.radii)?;
        ascending_positive("berezin.radii", &self.berezin.radii)?;
        if self.berezin.directions == 0 {
            return Err(invalid("berezin.directions must be at least 1"));
        }
        if self.epsilons.is_empty()
            || self.epsilons.iter().any(|e| !(*e > 0.0 && *e < 0.5))
            || self.epsilons.windows(2).any(|p| p[0] <= p[1])
        {
            return Err(invalid("epsilons must lie in (0, 1/2) and strictly decrease"));
        }
        if self.sub_degree > self.degree {
            return Err(invalid(format!(
                "sub_degree {} exceeds degree {}",
                self.sub_degree, self.degree
            )));
        }
        let s = &self.samples;
        if s.count == 0 || !(s.radius > 0.0 && s.radius.is_finite()) {
            return Err(invalid("samples need count ≥ 1 and a positive radius"));
        }
        for sym in self.gaussian_symbols() {
            sym.validate(self.n).map_err(|e| invalid(e.to_string()))?;
        }
        let w = self.series_point()?;
        if w.dim() != self.n {
            return Err(invalid(format!("series.w has dimension {}, expected {}", w.dim(), self.n)));
        }
        if self.series.k_max > self.degree {
            return Err(invalid(format!(
                "series.k_max {} exceeds degree {}",
                self.series.k_max, self.degree
            )));
        }
        let z = self.quotient_point()?;
        let (a, b) = self.quotient_indices()?;
        if z.dim() != self.n || a.dim() != self.n || b.dim() != self.n {
            return Err(invalid(format!("quotient point and indices must have dimension {}", self.n)));
        }
        if b.order() != 1 {
            return Err(invalid("quotient.b must be a unit multi-index"));
        }
        if a.order() + 1 > self.degree {
            return Err(invalid("quotient.a + b exceeds the degree"));
        }
        let t = &self.quotient.t;
        if t.len() < 2 || t.iter().any(|v| !(*v > 0.0)) || t.windows(2).any(|p| p[0] <= p[1]) {
            return Err(invalid("quotient.t needs at least two positive, strictly decreasing values"));
        }
        if !(self.sl.constant > 0.0) || self.sl.exponents.iter().any(|b| !(*b > 2.0 * self.n as f64)) {
            return Err(invalid("sl needs a positive constant and exponents above 2n"));
        }
        let tol = &self.tolerances;
        let all = [
            tol.kernel,
            tol.weyl_square,
            tol.covariance_factor,
            tol.resolution,
            tol.averaging_ratio,
            tol.budget_factor,
            tol.far_tail,
            tol.split,
            tol.series_ratio,
            tol.slope,
            tol.riemann_ratio,
            tol.berezin_identity,
        ];
        if all.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(invalid("tolerances must be finite and non-negative"));
        }
        Ok(())
    }
}

fn ascending_positive(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() || v.iter().any(|r| !(*r > 0.0 && r.is_finite())) || v.windows(2).any(|p| p[0] >= p[1]) {
        return Err(invalid(format!("{name} must be non-empty, positive and strictly ascending")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = LabConfig::default();
        c.validate().unwrap();
        assert_eq!(LabConfig::from_json(&c.to_json_pretty()).unwrap(), c);
        assert_eq!(LabConfig::from_json("{}").unwrap(), c);
    }

    #[test]
    fn experiment_names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
            assert_eq!(serde_json::to_string(&e).unwrap(), format!("\"{}\"", e.name()));
        }
        assert!(matches!("nope".parse::<Experiment>(), Err(Error::UnknownExperiment(_))));
    }

    #[test]
    fn rejects_bad_fields() {
        assert!(LabConfig::from_json(r#"{"colour": 1}"#).is_err());
        let bad = [
            LabConfig { n: 3, ..Default::default() },
            LabConfig { epsilons: vec![0.5], ..Default::default() },
            LabConfig { sub_degree: 31, ..Default::default() },
            LabConfig { radii: vec![2.0, 1.0], ..Default::default() },
        ];
        for c in bad {
            assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))), "{c:?}");
        }
    }

    #[test]
    fn grid_layout() {
        let p = GridSpec::unit_cell(3).points(2).unwrap();
        assert_eq!(p.len(), 9);
        assert_eq!(p[1].coords()[0], C64::new(0.5, 0.0));
        assert_eq!(p[3].coords()[0], C64::new(0.0, 0.5));
        assert_eq!(p[4].coords()[1], C64::new(0.0, 0.0));
    }
}
