//! Physical measure: constant-hazard default times, recovery densities on
//! `[0, 1]` and a seeded scenario sampler.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{invalid, Error, Result};
use crate::market::DefaultScenario;

/// Points in the tabulated inverse recovery CDF.
pub const INVERSE_CDF_POINTS: usize = 4096;

/// `h = -ln(1 - PD_1)`.
pub fn hazard_from_pd1(pd1: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&pd1) {
        return invalid(format!("one-year default probability must lie in [0, 1), got {pd1}"));
    }
    Ok(-(-pd1).ln_1p())
}

/// Recovery-rate law on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum RecoveryDensitySpec {
    /// Normal density with the given location and scale, renormalized on `[0, 1]`.
    TruncatedNormal { location: f64, scale: f64 },
    /// Point masses at `low` and `high`; has no density.
    TwoPoint { low: f64, high: f64, weight_low: f64 },
    /// Piecewise-linear density through `(grid, values)`; `grid` runs from 0
    /// to 1. Values are normalized on construction.
    Tabulated { grid: Vec<f64>, values: Vec<f64> },
}

impl RecoveryDensitySpec {
    pub fn truncated_normal(location: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite() && location.is_finite()) {
            return invalid("truncated normal needs a finite location and positive scale");
        }
        Ok(Self::TruncatedNormal { location, scale })
    }

    /// Location 0.15, scale 0.16 (mean close to 20%).
    pub fn gamma_a() -> Self {
        Self::TruncatedNormal { location: 0.15, scale: 0.16 }
    }

    /// Location 0.224, scale 0.16 (mean close to 25%).
    pub fn gamma_b() -> Self {
        Self::TruncatedNormal { location: 0.224, scale: 0.16 }
    }

    /// Location 0.396, scale 0.16 (mean close to 40%).
    pub fn gamma_c() -> Self {
        Self::TruncatedNormal { location: 0.396, scale: 0.16 }
    }

    pub fn two_point(low: f64, high: f64, weight_low: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&low) || !(0.0..=1.0).contains(&high) || low > high {
            return invalid("two-point recovery needs 0 <= low <= high <= 1");
        }
        if !(0.0..=1.0).contains(&weight_low) {
            return invalid("two-point weight must lie in [0, 1]");
        }
        Ok(Self::TwoPoint { low, high, weight_low })
    }

    /// Two-point law with the given mean, putting mass on `low` and `high`.
    pub fn two_point_with_mean(low: f64, high: f64, mean: f64) -> Result<Self> {
        if !(low < high) || !(low..=high).contains(&mean) {
            return invalid("mean must lie between distinct support points");
        }
        Self::two_point(low, high, (high - mean) / (high - low))
    }

    pub fn tabulated(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() {
            return invalid("tabulated recovery needs at least two matching grid/value points");
        }
        if grid[0] != 0.0 || grid[grid.len() - 1] != 1.0 || grid.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("tabulated recovery grid must increase strictly from 0 to 1");
        }
        if values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return invalid("tabulated recovery values must be finite and >= 0");
        }
        let mass: f64 = segments(&grid, &values).map(|(x0, x1, f0, f1)| 0.5 * (x1 - x0) * (f0 + f1)).sum();
        if !(mass > 0.0) {
            return invalid("tabulated recovery density has zero mass");
        }
        let values = values.into_iter().map(|v| v / mass).collect();
        Ok(Self::Tabulated { grid, values })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::TruncatedNormal { location, scale } => Self::truncated_normal(*location, *scale).map(drop),
            Self::TwoPoint { low, high, weight_low } => Self::two_point(*low, *high, *weight_low).map(drop),
            Self::Tabulated { grid, values } => Self::tabulated(grid.clone(), values.clone()).map(drop),
        }
    }

    /// `γ(ρ)`.
    pub fn density(&self, rho: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&rho) {
            return invalid(format!("recovery must lie in [0, 1], got {rho}"));
        }
        match self {
            Self::TruncatedNormal { location, scale } => {
                let n = std_normal();
                Ok(n.pdf((rho - location) / scale) / (scale * truncation_mass(*location, *scale)))
            }
            Self::TwoPoint { .. } => Err(Error::NoDensity("two-point recovery")),
            Self::Tabulated { grid, values } => Ok(interpolate(grid, values, rho)),
        }
    }

    /// `P(ρ' <= ρ)`.
    pub fn cdf(&self, rho: f64) -> f64 {
        let rho = rho.clamp(0.0, 1.0);
        match self {
            Self::TruncatedNormal { location, scale } => {
                let n = std_normal();
                (n.cdf((rho - location) / scale) - n.cdf(-location / scale)) / truncation_mass(*location, *scale)
            }
            Self::TwoPoint { low, high, weight_low } => {
                (if rho >= *low { *weight_low } else { 0.0 }) + if rho >= *high { 1.0 - weight_low } else { 0.0 }
            }
            Self::Tabulated { grid, values } => {
                let mut acc = 0.0;
                for (x0, x1, f0, f1) in segments(grid, values) {
                    if rho >= x1 {
                        acc += 0.5 * (x1 - x0) * (f0 + f1);
                    } else {
                        if rho > x0 {
                            let fr = f0 + (f1 - f0) * (rho - x0) / (x1 - x0);
                            acc += 0.5 * (rho - x0) * (f0 + fr);
                        }
                        break;
                    }
                }
                acc.min(1.0)
            }
        }
    }

    /// Mean recovery `ρ̄`.
    pub fn mean(&self) -> f64 {
        match self {
            Self::TruncatedNormal { location, scale } => {
                let n = std_normal();
                let (a, b) = (-location / scale, (1.0 - location) / scale);
                location + scale * (n.pdf(a) - n.pdf(b)) / truncation_mass(*location, *scale)
            }
            Self::TwoPoint { low, high, weight_low } => weight_low * low + (1.0 - weight_low) * high,
            Self::Tabulated { grid, values } => segments(grid, values)
                .map(|(x0, x1, f0, f1)| (x1 - x0) * (f0 * (2.0 * x0 + x1) + f1 * (x0 + 2.0 * x1)) / 6.0)
                .sum(),
        }
    }
}

fn std_normal() -> Normal {
    Normal::standard()
}

fn truncation_mass(location: f64, scale: f64) -> f64 {
    let n = std_normal();
    n.cdf((1.0 - location) / scale) - n.cdf(-location / scale)
}

fn segments<'a>(grid: &'a [f64], values: &'a [f64]) -> impl Iterator<Item = (f64, f64, f64, f64)> + 'a {
    grid.windows(2).zip(values.windows(2)).map(|(x, f)| (x[0], x[1], f[0], f[1]))
}

fn interpolate(grid: &[f64], values: &[f64], x: f64) -> f64 {
    let k = grid.partition_point(|&g| g <= x).clamp(1, grid.len() - 1);
    let (x0, x1) = (grid[k - 1], grid[k]);
    values[k - 1] + (values[k] - values[k - 1]) * (x - x0) / (x1 - x0)
}

/// `γ(ρ)` as a free function.
pub fn recovery_density(spec: &RecoveryDensitySpec, rho: f64) -> Result<f64> {
    spec.density(rho)
}

/// Exponential default times with hazard `h`, observed up to `T_N`, and an
/// independent recovery law.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalMeasure {
    pub hazard: f64,
    pub horizon: f64,
    pub recovery: RecoveryDensitySpec,
}

impl PhysicalMeasure {
    pub fn new(hazard: f64, horizon: f64, recovery: RecoveryDensitySpec) -> Result<Self> {
        if !(hazard >= 0.0 && hazard.is_finite()) {
            return invalid(format!("hazard rate must be >= 0, got {hazard}"));
        }
        if !(horizon > 0.0) {
            return invalid(format!("horizon must be positive, got {horizon}"));
        }
        recovery.validate()?;
        Ok(Self { hazard, horizon, recovery })
    }

    pub fn from_pd1(pd1: f64, horizon: f64, recovery: RecoveryDensitySpec) -> Result<Self> {
        Self::new(hazard_from_pd1(pd1)?, horizon, recovery)
    }

    /// Default-time density `Υ(τ) = h e^{-hτ}`.
    pub fn default_density(&self, tau: f64) -> f64 {
        self.hazard * (-self.hazard * tau).exp()
    }

    /// `P(τ <= t)`.
    pub fn default_probability(&self, t: f64) -> f64 {
        -(-self.hazard * t).exp_m1()
    }

    /// `Υ_0 = e^{-h T_N}`.
    pub fn survival_mass(&self) -> f64 {
        (-self.hazard * self.horizon).exp()
    }

    pub fn with_recovery(&self, recovery: RecoveryDensitySpec) -> Self {
        Self { recovery, ..self.clone() }
    }
}

/// `Υ_0` as a free function.
pub fn survival_mass(measure: &PhysicalMeasure) -> f64 {
    measure.survival_mass()
}

/// Recovery quantile function.
#[derive(Debug, Clone, PartialEq)]
enum Quantile {
    /// Inverse of a continuous CDF tabulated on a uniform `ρ` grid.
    Table {
        cdf: Vec<f64>,
    },
    TwoPoint {
        low: f64,
        high: f64,
        weight_low: f64,
    },
}

impl Quantile {
    fn new(spec: &RecoveryDensitySpec) -> Self {
        match *spec {
            RecoveryDensitySpec::TwoPoint { low, high, weight_low } => Self::TwoPoint { low, high, weight_low },
            _ => {
                let last = (INVERSE_CDF_POINTS - 1) as f64;
                let mut cdf: Vec<f64> = (0..INVERSE_CDF_POINTS).map(|k| spec.cdf(k as f64 / last)).collect();
                cdf[0] = 0.0;
                cdf[INVERSE_CDF_POINTS - 1] = 1.0;
                Self::Table { cdf }
            }
        }
    }

    fn eval(&self, u: f64) -> f64 {
        match self {
            Self::TwoPoint { low, high, weight_low } => {
                if u < *weight_low {
                    *low
                } else {
                    *high
                }
            }
            Self::Table { cdf } => {
                let k = cdf.partition_point(|&c| c <= u).clamp(1, cdf.len() - 1);
                let (c0, c1) = (cdf[k - 1], cdf[k]);
                let step = 1.0 / (cdf.len() - 1) as f64;
                let frac = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.0 };
                ((k - 1) as f64 + frac) * step
            }
        }
    }
}

/// Draws default scenarios. Each draw consumes exactly two uniforms, so
/// output is reproducible from `(seed, stream, draw count)`.
#[derive(Debug, Clone)]
pub struct ScenarioSampler {
    rng: ChaCha8Rng,
    hazard: f64,
    horizon: f64,
    quantile: Quantile,
}

impl ScenarioSampler {
    /// One sampler per worker: pass the worker index as `stream`.
    pub fn new(measure: &PhysicalMeasure, seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, hazard: measure.hazard, horizon: measure.horizon, quantile: Quantile::new(&measure.recovery) }
    }

    pub fn sample(&mut self) -> DefaultScenario {
        let u_tau: f64 = self.rng.random();
        let u_rho: f64 = self.rng.random();
        if self.hazard == 0.0 {
            return DefaultScenario::Survived;
        }
        let tau = -(1.0 - u_tau).ln() / self.hazard;
        if tau > self.horizon || tau <= 0.0 {
            return DefaultScenario::Survived;
        }
        DefaultScenario::Defaulted { tau, rho: self.quantile.eval(u_rho) }
    }
}

/// One draw from `sampler`.
pub fn sample_scenario(sampler: &mut ScenarioSampler) -> DefaultScenario {
    sampler.sample()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::Rule;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hazard_examples() {
        assert_eq!(hazard_from_pd1(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(hazard_from_pd1(0.30).unwrap(), 0.3566749439387324, epsilon = 1e-15);
        assert_abs_diff_eq!(hazard_from_pd1(1.0 - (-1.0f64).exp()).unwrap(), 1.0, epsilon = 1e-15);
        assert!(hazard_from_pd1(1.0).is_err());
        assert!(hazard_from_pd1(-0.1).is_err());
    }

    #[test]
    fn survival_examples() {
        let m = PhysicalMeasure::from_pd1(0.30, 5.0, RecoveryDensitySpec::gamma_a()).unwrap();
        assert_abs_diff_eq!(survival_mass(&m), 0.7f64.powi(5), epsilon = 1e-15);
        assert_abs_diff_eq!(survival_mass(&m), 0.16807, epsilon = 1e-5);
        let flat = PhysicalMeasure::new(0.0, 5.0, RecoveryDensitySpec::gamma_a()).unwrap();
        assert_eq!(flat.survival_mass(), 1.0);
        let far = PhysicalMeasure::new(0.3, 1e4, RecoveryDensitySpec::gamma_a()).unwrap();
        assert!(far.survival_mass() < 1e-300);
    }

    #[test]
    fn default_density_plus_atom_is_one() {
        let m = PhysicalMeasure::from_pd1(0.30, 5.0, RecoveryDensitySpec::gamma_a()).unwrap();
        let rule = Rule::new(32);
        let mass: f64 =
            (0..20).map(|i| rule.integrate(0.25 * i as f64, 0.25 * (i + 1) as f64, |t| m.default_density(t))).sum();
        assert_abs_diff_eq!(mass + m.survival_mass(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn truncated_normal_fixtures() {
        let rule = Rule::new(64);
        for spec in [RecoveryDensitySpec::gamma_a(), RecoveryDensitySpec::gamma_b(), RecoveryDensitySpec::gamma_c()] {
            assert_abs_diff_eq!(rule.integrate(0.0, 1.0, |r| spec.density(r).unwrap()), 1.0, epsilon = 1e-10);
            let mean = rule.integrate(0.0, 1.0, |r| r * spec.density(r).unwrap());
            assert_abs_diff_eq!(mean, spec.mean(), epsilon = 1e-10);
        }
        // Means from an independent adaptive quadrature of the renormalized normal.
        assert_abs_diff_eq!(RecoveryDensitySpec::gamma_a().mean(), 0.19981146332812463, epsilon = 1e-9);
        assert_abs_diff_eq!(RecoveryDensitySpec::gamma_b().mean(), 0.250060469060323, epsilon = 1e-9);
        assert_abs_diff_eq!(RecoveryDensitySpec::gamma_c().mean(), 0.3989530299071148, epsilon = 1e-9);
        // Printed means are 20%, 25% and 40%.
        assert_abs_diff_eq!(RecoveryDensitySpec::gamma_a().mean(), 0.20, epsilon = 1e-3);
        assert_abs_diff_eq!(RecoveryDensitySpec::gamma_b().mean(), 0.25, epsilon = 1e-3);
        assert_abs_diff_eq!(RecoveryDensitySpec::gamma_c().mean(), 0.40, epsilon = 5e-3);
    }

    #[test]
    fn density_arguments() {
        let a = RecoveryDensitySpec::gamma_a();
        assert!(a.density(-0.01).is_err());
        assert!(a.density(1.01).is_err());
        let two = RecoveryDensitySpec::two_point(0.1, 0.3, 0.5).unwrap();
        assert_eq!(two.density(0.2), Err(Error::NoDensity("two-point recovery")));
        assert_abs_diff_eq!(two.mean(), 0.2, epsilon = 1e-15);
        let same = RecoveryDensitySpec::two_point_with_mean(0.0, 0.5, 0.2).unwrap();
        assert_abs_diff_eq!(same.mean(), 0.2, epsilon = 1e-15);
    }

    #[test]
    fn tabulated_is_normalized() {
        let spec = RecoveryDensitySpec::tabulated(vec![0.0, 0.5, 1.0], vec![0.0, 4.0, 0.0]).unwrap();
        let rule = Rule::new(8);
        let mass = rule.integrate(0.0, 0.5, |r| spec.density(r).unwrap())
            + rule.integrate(0.5, 1.0, |r| spec.density(r).unwrap());
        assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(spec.mean(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(spec.cdf(0.5), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(spec.cdf(0.25), 0.125, epsilon = 1e-15);
        assert!(RecoveryDensitySpec::tabulated(vec![0.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(RecoveryDensitySpec::tabulated(vec![0.1, 1.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn zero_hazard_always_survives() {
        let m = PhysicalMeasure::new(0.0, 5.0, RecoveryDensitySpec::gamma_a()).unwrap();
        let mut s = ScenarioSampler::new(&m, 7, 0);
        assert!((0..1000).all(|_| s.sample() == DefaultScenario::Survived));
    }

    #[test]
    fn sampler_is_reproducible() {
        let m = PhysicalMeasure::from_pd1(0.3, 5.0, RecoveryDensitySpec::gamma_a()).unwrap();
        let draw = |stream| {
            let mut s = ScenarioSampler::new(&m, 42, stream);
            (0..100).map(|_| s.sample()).collect::<Vec<_>>()
        };
        assert_eq!(draw(0), draw(0));
        assert_ne!(draw(0), draw(1));
    }

    #[test]
    fn sampler_statistics() {
        let m = PhysicalMeasure::from_pd1(0.3, 5.0, RecoveryDensitySpec::gamma_a()).unwrap();
        let mut s = ScenarioSampler::new(&m, 2024, 0);
        let n = 1_000_000;
        let mut survived = 0usize;
        let mut rhos = Vec::with_capacity(n);
        for _ in 0..n {
            match s.sample() {
                DefaultScenario::Survived => survived += 1,
                DefaultScenario::Defaulted { rho, .. } => rhos.push(rho),
            }
        }
        assert_abs_diff_eq!(survived as f64 / n as f64, 0.168, epsilon = 0.002);
        let mean = rhos.iter().sum::<f64>() / rhos.len() as f64;
        assert_abs_diff_eq!(mean, 0.20, epsilon = 0.002);

        let mut s = ScenarioSampler::new(&m, 99, 3);
        let mut rhos: Vec<f64> = Vec::with_capacity(n);
        while rhos.len() < n {
            if let DefaultScenario::Defaulted { rho, .. } = s.sample() {
                rhos.push(rho);
            }
        }
        rhos.sort_by(f64::total_cmp);
        let ks = rhos
            .iter()
            .enumerate()
            .map(|(i, &r)| {
                let f = m.recovery.cdf(r);
                (f - i as f64 / n as f64).abs().max((f - (i + 1) as f64 / n as f64).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks <= 0.002, "KS {ks}");
    }
}
