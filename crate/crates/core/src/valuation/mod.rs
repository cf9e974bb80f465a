//! Mean hedged PV, payoff densities with atoms, and loss measures.
//!
//! On each quarterly interval `(T_{i-1}, T_i]` the realized PV of any
//! [`Position`] has the closed form
//!
//! ```text
//! Δ(τ, ρ) = base_i + e^{-rτ} ((1 - ρ) a_i - S_i (τ - T_{i-1}))
//! ```
//!
//! with `a_i` the net live notional and `S_i` the net live spread rate.
//! [`PayoffProfile`] stores these coefficients and is what every routine in
//! this module evaluates.

mod density;
mod oracle;

pub use density::{default_cdf, density, density_at, support};
pub use oracle::{density_mc_oracle, histogram, ks_distance, mc_samples, McSamples};

use crate::error::{invalid, Result};
use crate::market::{DefaultScenario, Position, TenorGrid};
use crate::measure::{PhysicalMeasure, RecoveryDensitySpec};
use crate::quadrature::Rule;

/// Closed-form payoff on one interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalForm {
    pub start: f64,
    pub end: f64,
    pub base: f64,
    pub loss_notional: f64,
    pub spread_rate: f64,
}

impl IntervalForm {
    /// `Δ(τ, ρ)` for `τ` in this interval.
    pub fn value(&self, rate: f64, tau: f64, rho: f64) -> f64 {
        self.curve(rho).value(rate, tau)
    }

    /// Payoff at fixed recovery as a function of `τ`.
    pub(crate) fn curve(&self, rho: f64) -> Curve {
        Curve {
            start: self.start,
            base: self.base,
            loss: (1.0 - rho) * self.loss_notional,
            spread_rate: self.spread_rate,
        }
    }
}

/// `τ ↦ base + e^{-rτ}(loss - S (τ - start))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Curve {
    pub start: f64,
    pub base: f64,
    pub loss: f64,
    pub spread_rate: f64,
}

impl Curve {
    pub fn value(&self, rate: f64, tau: f64) -> f64 {
        self.base + (-rate * tau).exp() * (self.loss - self.spread_rate * (tau - self.start))
    }

    /// Exact `dΔ/dτ`.
    pub fn derivative(&self, rate: f64, tau: f64) -> f64 {
        let s = tau - self.start;
        -(-rate * tau).exp() * (self.spread_rate + rate * (self.loss - self.spread_rate * s))
    }

    /// Stationary point in `τ`, if any.
    pub fn critical(&self, rate: f64) -> Option<f64> {
        if rate == 0.0 || self.spread_rate == 0.0 {
            return None;
        }
        Some(self.start + (self.spread_rate + rate * self.loss) / (rate * self.spread_rate))
    }

    pub fn is_constant(&self, rate: f64) -> bool {
        self.spread_rate == 0.0 && (self.loss == 0.0 || rate == 0.0)
    }
}

/// Per-interval coefficients of a position's realized PV.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffProfile {
    pub rate: f64,
    pub intervals: Vec<IntervalForm>,
    /// `Δ_0`, the value on survival past `T_N`.
    pub survived: f64,
}

impl PayoffProfile {
    pub fn new(grid: &TenorGrid, position: &Position) -> Result<Self> {
        for leg in &position.legs {
            leg.validate(grid)?;
        }
        let q = grid.quarter_length();
        let mut paid = 0.0;
        let mut intervals = Vec::with_capacity(grid.len());
        for i in 1..=grid.len() {
            intervals.push(IntervalForm {
                start: grid.time(i - 1),
                end: grid.time(i),
                base: position.deposit - paid,
                loss_notional: position.loss_notional(i),
                spread_rate: position.spread_rate(i),
            });
            paid += position.spread_rate(i) * q * grid.discount_at(i);
        }
        Ok(Self { rate: grid.risk_free_rate(), intervals, survived: position.deposit - paid })
    }

    pub fn horizon(&self) -> f64 {
        self.intervals.last().map_or(0.0, |f| f.end)
    }

    /// Realized PV; agrees with [`Position::pv`].
    pub fn value(&self, scenario: DefaultScenario) -> f64 {
        match scenario {
            DefaultScenario::Defaulted { tau, rho } if tau <= self.horizon() * (1.0 + 1e-12) => {
                let q = self.intervals[0].end - self.intervals[0].start;
                let mut i = ((tau / q).ceil() as usize).clamp(1, self.intervals.len());
                // Closed-right intervals: snap payment dates onto the interval they close.
                if i > 1 && tau <= self.intervals[i - 2].end * (1.0 + 1e-12) {
                    i -= 1;
                }
                self.intervals[i - 1].value(self.rate, tau, rho)
            }
            _ => self.survived,
        }
    }
}

fn check_horizon(grid: &TenorGrid, measure: &PhysicalMeasure) -> Result<()> {
    if (grid.horizon() - measure.horizon).abs() > 1e-9 * grid.horizon() {
        return invalid(format!("measure horizon {} differs from grid horizon {}", measure.horizon, grid.horizon()));
    }
    Ok(())
}

/// Quadrature used for `Δ̄`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MeanMethod {
    /// 16 `τ`-nodes per interval with `ρ` replaced by `ρ̄`.
    #[default]
    Collapsed,
    /// 16 × 16 tensor rule over `(τ, ρ)`; point masses are summed exactly.
    Tensor,
}

/// `Δ̄ = E[Δ]` under the physical measure.
pub fn mean_pv(grid: &TenorGrid, position: &Position, measure: &PhysicalMeasure) -> Result<f64> {
    mean_pv_with(grid, position, measure, MeanMethod::Collapsed)
}

pub fn mean_pv_with(
    grid: &TenorGrid,
    position: &Position,
    measure: &PhysicalMeasure,
    method: MeanMethod,
) -> Result<f64> {
    check_horizon(grid, measure)?;
    let profile = PayoffProfile::new(grid, position)?;
    Ok(profile_mean(&profile, measure, method))
}

pub(crate) fn profile_mean(profile: &PayoffProfile, measure: &PhysicalMeasure, method: MeanMethod) -> f64 {
    let rule = Rule::new(16);
    let r = profile.rate;
    let rho_bar = measure.recovery.mean();
    let mut total = 0.0;
    for f in &profile.intervals {
        total += match method {
            MeanMethod::Collapsed => {
                rule.integrate(f.start, f.end, |t| f.value(r, t, rho_bar) * measure.default_density(t))
            }
            MeanMethod::Tensor => match &measure.recovery {
                RecoveryDensitySpec::TwoPoint { low, high, weight_low } => rule.integrate(f.start, f.end, |t| {
                    let v = weight_low * f.value(r, t, *low) + (1.0 - weight_low) * f.value(r, t, *high);
                    v * measure.default_density(t)
                }),
                spec => rule.integrate_2d((f.start, f.end), (0.0, 1.0), |t, rho| {
                    f.value(r, t, rho) * measure.default_density(t) * spec.density(rho).unwrap_or(0.0)
                }),
            },
        };
    }
    total + measure.survival_mass() * profile.survived
}

/// A point mass of the payoff distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// Payoff distribution: continuous density on a uniform grid plus atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// All point masses, merged by location and sorted.
    pub atoms: Vec<Atom>,
    /// The survival atom on its own (already included in `atoms`).
    pub survival: Atom,
    /// Set when some interval's support is narrower than the grid spacing.
    pub coarse_grid: bool,
}

impl DensityCurve {
    /// `∫ Γ_1` by the trapezoid rule.
    pub fn continuous_mass(&self) -> f64 {
        self.cumulative().last().copied().unwrap_or(0.0)
    }

    pub fn atom_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.continuous_mass() + self.atom_mass()
    }

    /// `∫ Δ Γ(dΔ)`.
    pub fn mean(&self) -> f64 {
        let cont: f64 = self
            .grid
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, f)| (x[1] - x[0]) * (f[0] * (2.0 * x[0] + x[1]) + f[1] * (x[0] + 2.0 * x[1])) / 6.0)
            .sum();
        cont + self.atoms.iter().map(|a| a.location * a.mass).sum::<f64>()
    }

    /// Running trapezoid integral of the continuous part at each grid point.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.grid.len());
        out.push(0.0);
        for (x, f) in self.grid.windows(2).zip(self.values.windows(2)) {
            acc += 0.5 * (x[1] - x[0]) * (f[0] + f[1]);
            out.push(acc);
        }
        out
    }

    /// Continuous-part mass below `x`, exact for the piecewise-linear
    /// interpolant.
    pub fn continuous_cdf_with(&self, cumulative: &[f64], x: f64) -> f64 {
        let n = self.grid.len();
        if n < 2 || x <= self.grid[0] {
            return 0.0;
        }
        if x >= self.grid[n - 1] {
            return cumulative[n - 1];
        }
        let k = self.grid.partition_point(|&g| g <= x).clamp(1, n - 1);
        let (x0, x1) = (self.grid[k - 1], self.grid[k]);
        let (f0, f1) = (self.values[k - 1], self.values[k]);
        let fx = f0 + (f1 - f0) * (x - x0) / (x1 - x0);
        cumulative[k - 1] + 0.5 * (x - x0) * (f0 + fx)
    }

    /// CDF conditioned on default before `T_N`: the survival atom is removed
    /// and the rest renormalized.
    pub fn default_conditioned_cdf(&self) -> impl Fn(f64) -> f64 + '_ {
        let cumulative = self.cumulative();
        let default_atoms: Vec<Atom> = self
            .atoms
            .iter()
            .map(|a| {
                let mut a = *a;
                if a.location == self.survival.location {
                    a.mass = (a.mass - self.survival.mass).max(0.0);
                }
                a
            })
            .filter(|a| a.mass > 0.0)
            .collect();
        let total = cumulative.last().copied().unwrap_or(0.0) + default_atoms.iter().map(|a| a.mass).sum::<f64>();
        move |x| {
            if total <= 0.0 {
                return 0.0;
            }
            let atoms: f64 = default_atoms.iter().filter(|a| a.location <= x).map(|a| a.mass).sum();
            (self.continuous_cdf_with(&cumulative, x) + atoms) / total
        }
    }

    /// `x` at which the continuous part reaches fraction `p` of its mass.
    pub fn continuous_quantile(&self, p: f64) -> Option<f64> {
        let cumulative = self.cumulative();
        let total = *cumulative.last()?;
        if !(total > 0.0) {
            return None;
        }
        let target = p.clamp(0.0, 1.0) * total;
        let k = cumulative.partition_point(|&c| c < target).clamp(1, cumulative.len() - 1);
        let (c0, c1) = (cumulative[k - 1], cumulative[k]);
        let frac = if c1 > c0 { (target - c0) / (c1 - c0) } else { 0.0 };
        Some(self.grid[k - 1] + frac * (self.grid[k] - self.grid[k - 1]))
    }

    /// Width of the 1%–99% inter-quantile range of the continuous part.
    pub fn significant_spread(&self) -> Option<f64> {
        Some(self.continuous_quantile(0.99)? - self.continuous_quantile(0.01)?)
    }
}

pub(crate) fn merge_atoms(mut atoms: Vec<Atom>) -> Vec<Atom> {
    atoms.sort_by(|a, b| a.location.total_cmp(&b.location));
    let mut out: Vec<Atom> = Vec::with_capacity(atoms.len());
    for a in atoms {
        match out.last_mut() {
            Some(last) if (a.location - last.location).abs() <= 1e-12 * a.location.abs().max(1.0) => {
                last.mass += a.mass;
            }
            _ => out.push(a),
        }
    }
    out
}

/// Density of the scaled family at `W / f` from the density at `W`.
pub fn scale_density(curve: &DensityCurve, f: f64) -> Result<DensityCurve> {
    if !(f > 0.0 && f.is_finite()) {
        return invalid(format!("scale factor must be positive, got {f}"));
    }
    let shift = |a: &Atom| Atom { location: a.location / f, mass: a.mass };
    Ok(DensityCurve {
        grid: curve.grid.iter().map(|x| x / f).collect(),
        values: curve.values.iter().map(|v| v * f).collect(),
        atoms: curve.atoms.iter().map(shift).collect(),
        survival: shift(&curve.survival),
        coarse_grid: curve.coarse_grid,
    })
}

/// Density of the realized loss `L = λΔ̄ - Δ`.
pub fn loss_density(curve: &DensityCurve, lambda: f64, mean_pv: f64) -> Result<DensityCurve> {
    check_lambda(lambda)?;
    let shift = lambda * mean_pv;
    let flip = |a: &Atom| Atom { location: shift - a.location, mass: a.mass };
    let mut atoms: Vec<Atom> = curve.atoms.iter().map(flip).collect();
    atoms.sort_by(|a, b| a.location.total_cmp(&b.location));
    Ok(DensityCurve {
        grid: curve.grid.iter().rev().map(|x| shift - x).collect(),
        values: curve.values.iter().rev().copied().collect(),
        atoms,
        survival: flip(&curve.survival),
        coarse_grid: curve.coarse_grid,
    })
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return invalid(format!("rebate fraction must lie in [0, 1], got {lambda}"));
    }
    Ok(())
}

/// Scalar loss measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskSummary {
    pub mean_pv: f64,
    /// `L_Max = λΔ̄`.
    pub max_loss: f64,
    /// `E(L | L > 0)`; `None` when losses have zero probability.
    pub cond_loss: Option<f64>,
    /// `P(L > 0)`.
    pub loss_prob: f64,
}

/// Losses at or below this size count as zero.
const LOSS_TOL: f64 = 1e-12;

pub fn risk_summary(curve: &DensityCurve, lambda: f64, mean_pv: f64) -> Result<RiskSummary> {
    let loss = loss_density(curve, lambda, mean_pv)?;
    let mut prob = 0.0;
    let mut first = 0.0;
    for (x, f) in loss.grid.windows(2).zip(loss.values.windows(2)) {
        let (mut x0, x1, mut f0, f1) = (x[0], x[1], f[0], f[1]);
        if x1 <= LOSS_TOL {
            continue;
        }
        if x0 < LOSS_TOL {
            f0 += (f1 - f0) * (LOSS_TOL - x0) / (x1 - x0);
            x0 = LOSS_TOL;
        }
        let h = x1 - x0;
        prob += 0.5 * h * (f0 + f1);
        first += h * (f0 * (2.0 * x0 + x1) + f1 * (x0 + 2.0 * x1)) / 6.0;
    }
    for a in loss.atoms.iter().filter(|a| a.location > LOSS_TOL) {
        prob += a.mass;
        first += a.mass * a.location;
    }
    let cond_loss = (prob > 0.0).then(|| first / prob);
    Ok(RiskSummary { mean_pv, max_loss: lambda * mean_pv, cond_loss, loss_prob: prob })
}
