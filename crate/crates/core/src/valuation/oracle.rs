//! Monte Carlo oracle for the payoff distribution.
//!
//! Scenarios come from [`ScenarioSampler`] and are valued with the exact
//! [`Position::pv`], independently of the closed forms used elsewhere in this
//! module.

use std::thread;

use super::{check_horizon, density::padded_grid, Atom, DensityCurve};
use crate::error::{invalid, Result};
use crate::market::{DefaultScenario, Position, TenorGrid};
use crate::measure::{PhysicalMeasure, ScenarioSampler};

/// Fixed worker count, so output does not depend on the machine.
const WORKERS: usize = 8;

/// Realized PVs of simulated defaults plus the survival count.
#[derive(Debug, Clone, PartialEq)]
pub struct McSamples {
    /// Sorted PVs of paths that default before `T_N`.
    pub defaulted: Vec<f64>,
    pub survived: usize,
    pub n: usize,
}

impl McSamples {
    pub fn survival_fraction(&self) -> f64 {
        self.survived as f64 / self.n as f64
    }
}

/// Draws `n` scenarios split over fixed per-worker streams of `seed`.
pub fn mc_samples(
    grid: &TenorGrid,
    position: &Position,
    measure: &PhysicalMeasure,
    n: usize,
    seed: u64,
) -> Result<McSamples> {
    if n == 0 {
        return invalid("Monte Carlo needs at least one sample");
    }
    check_horizon(grid, measure)?;
    for leg in &position.legs {
        leg.validate(grid)?;
    }
    let per = n / WORKERS;
    let parts: Vec<(Vec<f64>, usize)> = thread::scope(|s| {
        let handles: Vec<_> = (0..WORKERS)
            .map(|w| {
                let count = per + usize::from(w < n % WORKERS);
                s.spawn(move || {
                    let mut sampler = ScenarioSampler::new(measure, seed, w as u64);
                    let mut values = Vec::with_capacity(count);
                    let mut survived = 0;
                    for _ in 0..count {
                        match sampler.sample() {
                            DefaultScenario::Survived => survived += 1,
                            s => values.push(position.pv(grid, s)),
                        }
                    }
                    (values, survived)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sampler worker panicked")).collect()
    });
    let survived = parts.iter().map(|p| p.1).sum();
    let mut defaulted: Vec<f64> = parts.into_iter().flat_map(|p| p.0).collect();
    defaulted.sort_by(f64::total_cmp);
    Ok(McSamples { defaulted, survived, n })
}

/// Histogram density with `bins` equal bins over the padded sample range;
/// survived paths go straight to the atom.
pub fn density_mc_oracle(
    grid: &TenorGrid,
    position: &Position,
    measure: &PhysicalMeasure,
    n: usize,
    seed: u64,
    bins: usize,
) -> Result<DensityCurve> {
    if bins == 0 {
        return invalid("histogram needs at least one bin");
    }
    let samples = mc_samples(grid, position, measure, n, seed)?;
    histogram(&samples, position.survived_pv(grid), bins)
}

/// Histogram density of drawn samples; `survived_pv` locates the atom.
pub fn histogram(samples: &McSamples, survived_pv: f64, bins: usize) -> Result<DensityCurve> {
    if bins == 0 {
        return invalid("histogram needs at least one bin");
    }
    let survival = Atom { location: survived_pv, mass: samples.survival_fraction() };
    let (lo, hi) = match (samples.defaulted.first(), samples.defaulted.last()) {
        (Some(&a), Some(&b)) => (a.min(survival.location), b.max(survival.location)),
        _ => (survival.location, survival.location),
    };
    let edges = padded_grid((lo, hi), bins + 1);
    let width = edges[1] - edges[0];
    let mut counts = vec![0usize; bins];
    for &x in &samples.defaulted {
        let k = (((x - edges[0]) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let scale = 1.0 / (samples.n as f64 * width);
    Ok(DensityCurve {
        grid: edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect(),
        values: counts.iter().map(|&c| c as f64 * scale).collect(),
        atoms: if survival.mass > 0.0 { vec![survival] } else { Vec::new() },
        survival,
        coarse_grid: false,
    })
}

/// Kolmogorov–Smirnov distance between the empirical CDF of sorted
/// `samples` and `cdf`.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::CdsSpec;
    use crate::measure::RecoveryDensitySpec;
    use approx::assert_abs_diff_eq;

    fn grid() -> TenorGrid {
        TenorGrid::new(0.25, 20, 0.02).unwrap()
    }

    fn measure() -> PhysicalMeasure {
        PhysicalMeasure::from_pd1(0.30, 5.0, RecoveryDensitySpec::gamma_a()).unwrap()
    }

    #[test]
    fn deposit_only_mass_sits_at_deposit() {
        let c = density_mc_oracle(&grid(), &Position::deposit_only(0.3), &measure(), 20_000, 1, 50).unwrap();
        let total: f64 = c.values.iter().sum::<f64>() * (c.grid[1] - c.grid[0]) + c.survival.mass;
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        let peak = c.values.iter().cloned().fold(0.0, f64::max);
        let k = c.values.iter().position(|&v| v == peak).unwrap();
        assert!((c.grid[k] - 0.3).abs() <= c.grid[1] - c.grid[0]);
        assert_eq!(c.survival.location, 0.3);
    }

    #[test]
    fn deterministic_for_seed() {
        let pos = Position { deposit: 0.0, legs: vec![CdsSpec::new(20, 0.05, 1.0)] };
        let a = mc_samples(&grid(), &pos, &measure(), 10_001, 9).unwrap();
        let b = mc_samples(&grid(), &pos, &measure(), 10_001, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.defaulted.len() + a.survived, 10_001);
        let c = mc_samples(&grid(), &pos, &measure(), 10_001, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn ks_of_exact_uniform() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        assert_abs_diff_eq!(ks_distance(&xs, |x| x), 0.0005, epsilon = 1e-12);
    }
}
