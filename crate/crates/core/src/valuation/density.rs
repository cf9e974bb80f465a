//! Semi-analytic payoff density and CDF.
//!
//! Per interval, a continuous recovery law with non-zero live notional
//! spreads probability over the band between the curves `ρ = 0` and
//! `ρ = 1`; the density at `Δ` is a `τ`-integral of `Υ γ(ρ(τ,Δ)) e^{rτ}/|a|`.
//! With zero live notional, or a discrete recovery law, probability lies on
//! curves `τ ↦ Δ(τ, ρ_j)` and the density is `Υ(τ*) / |∂_τ Δ(τ*)|` at the
//! roots. Constant curves become atoms.

use std::thread;

use super::{check_horizon, merge_atoms, Atom, Curve, DensityCurve, IntervalForm, PayoffProfile};
use crate::error::{invalid, Result};
use crate::market::{Position, TenorGrid};
use crate::measure::{PhysicalMeasure, RecoveryDensitySpec};
use crate::quadrature::Rule;

const ROOT_TOL: f64 = 1e-12;
const LOSS_EPS: f64 = 1e-12;
const GRID_MARGIN: f64 = 0.01;

#[derive(Debug, Clone)]
enum Plan {
    /// Continuous recovery over a band; `splits` bound sub-intervals on which
    /// both edge curves are monotone.
    Band {
        form: IntervalForm,
        splits: Vec<f64>,
    },
    /// Mass `weight` spread along a monotone-by-piece curve.
    Line {
        curve: Curve,
        weight: f64,
        splits: Vec<f64>,
    },
    Point(Atom),
}

struct Model<'a> {
    rate: f64,
    measure: &'a PhysicalMeasure,
    plans: Vec<Plan>,
    survival: Atom,
    rule: Rule,
}

fn discrete_support(spec: &RecoveryDensitySpec) -> Option<Vec<(f64, f64)>> {
    match *spec {
        RecoveryDensitySpec::TwoPoint { low, high, weight_low } => {
            Some([(low, weight_low), (high, 1.0 - weight_low)].into_iter().filter(|p| p.1 > 0.0).collect())
        }
        _ => None,
    }
}

fn splits(start: f64, end: f64, curves: &[Curve], rate: f64) -> Vec<f64> {
    let mut out = vec![start, end];
    for c in curves {
        if let Some(t) = c.critical(rate) {
            if t > start && t < end {
                out.push(t);
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

fn default_mass(measure: &PhysicalMeasure, a: f64, b: f64) -> f64 {
    measure.default_probability(b) - measure.default_probability(a)
}

impl<'a> Model<'a> {
    fn new(grid: &TenorGrid, position: &Position, measure: &'a PhysicalMeasure) -> Result<Self> {
        check_horizon(grid, measure)?;
        let profile = PayoffProfile::new(grid, position)?;
        let rate = profile.rate;
        let discrete = discrete_support(&measure.recovery);
        let mut plans = Vec::new();
        for form in &profile.intervals {
            let band = discrete.is_none() && form.loss_notional.abs() > LOSS_EPS;
            if band {
                let edges = [form.curve(0.0), form.curve(1.0)];
                plans.push(Plan::Band { form: *form, splits: splits(form.start, form.end, &edges, rate) });
                continue;
            }
            let lines = match &discrete {
                Some(points) => points.clone(),
                None => vec![(1.0, 1.0)],
            };
            for (rho, weight) in lines {
                let mut curve = form.curve(rho);
                if form.loss_notional.abs() <= LOSS_EPS {
                    curve.loss = 0.0;
                }
                if curve.is_constant(rate) {
                    let mass = weight * default_mass(measure, form.start, form.end);
                    plans.push(Plan::Point(Atom { location: curve.value(rate, form.end), mass }));
                } else {
                    let s = splits(form.start, form.end, &[curve], rate);
                    plans.push(Plan::Line { curve, weight, splits: s });
                }
            }
        }
        let survival = Atom { location: profile.survived, mass: measure.survival_mass() };
        Ok(Self { rate, measure, plans, survival, rule: Rule::new(32) })
    }

    fn atoms(&self) -> Vec<Atom> {
        let mut atoms: Vec<Atom> = self
            .plans
            .iter()
            .filter_map(|p| match p {
                Plan::Point(a) if a.mass > 0.0 => Some(*a),
                _ => None,
            })
            .collect();
        if self.survival.mass > 0.0 {
            atoms.push(self.survival);
        }
        merge_atoms(atoms)
    }

    /// Value range of each plan with continuous mass.
    fn continuous_ranges(&self) -> Vec<(f64, f64)> {
        let r = self.rate;
        let range_of = |curves: &[Curve], splits: &[f64]| {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for c in curves {
                for &t in splits {
                    let v = c.value(r, t);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            (lo, hi)
        };
        self.plans
            .iter()
            .filter_map(|p| match p {
                Plan::Band { form, splits } => Some(range_of(&[form.curve(0.0), form.curve(1.0)], splits)),
                Plan::Line { curve, splits, .. } => Some(range_of(&[*curve], splits)),
                Plan::Point(_) => None,
            })
            .collect()
    }

    fn support(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (a, b) in self.continuous_ranges() {
            lo = lo.min(a);
            hi = hi.max(b);
        }
        for a in self.atoms() {
            lo = lo.min(a.location);
            hi = hi.max(a.location);
        }
        (lo, hi)
    }

    fn upsilon(&self, tau: f64) -> f64 {
        self.measure.default_density(tau)
    }

    /// Roots of `curve = x` on each monotone piece, merged into `splits`.
    fn breakpoints(&self, curves: &[Curve], splits: &[f64], x: f64) -> Vec<f64> {
        let r = self.rate;
        let mut out = splits.to_vec();
        for w in splits.windows(2) {
            for c in curves {
                if let Some(t) = root(|t| c.value(r, t) - x, w[0], w[1]) {
                    out.push(t);
                }
            }
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    fn density(&self, x: f64) -> f64 {
        let r = self.rate;
        let mut total = 0.0;
        for plan in &self.plans {
            match plan {
                Plan::Band { form, splits } => {
                    let spec = &self.measure.recovery;
                    let a = form.loss_notional;
                    let d1 = form.curve(1.0);
                    let rho_at = |t: f64| 1.0 - (x - d1.value(r, t)) * (r * t).exp() / a;
                    let cuts = self.breakpoints(&[form.curve(0.0), d1], splits, x);
                    for w in cuts.windows(2) {
                        let rho_mid = rho_at(0.5 * (w[0] + w[1]));
                        if !(0.0..=1.0).contains(&rho_mid) {
                            continue;
                        }
                        total += self.rule.integrate(w[0], w[1], |t| {
                            let rho = rho_at(t).clamp(0.0, 1.0);
                            self.upsilon(t) * spec.density(rho).unwrap_or(0.0) * (r * t).exp() / a.abs()
                        });
                    }
                }
                Plan::Line { curve, weight, splits } => {
                    for w in splits.windows(2) {
                        if let Some(t) = root(|t| curve.value(r, t) - x, w[0], w[1]) {
                            let slope = curve.derivative(r, t).abs();
                            if slope > 0.0 {
                                total += weight * self.upsilon(t) / slope;
                            }
                        }
                    }
                }
                Plan::Point(_) => {}
            }
        }
        total
    }

    /// `P(Δ <= x, τ <= T_N)`.
    fn default_cdf(&self, x: f64) -> f64 {
        let r = self.rate;
        let mut total = 0.0;
        for plan in &self.plans {
            match plan {
                Plan::Band { form, splits } => {
                    let spec = &self.measure.recovery;
                    let a = form.loss_notional;
                    let d1 = form.curve(1.0);
                    let below = |t: f64| {
                        let rho = (1.0 - (x - d1.value(r, t)) * (r * t).exp() / a).clamp(0.0, 1.0);
                        if a > 0.0 {
                            1.0 - spec.cdf(rho)
                        } else {
                            spec.cdf(rho)
                        }
                    };
                    let cuts = self.breakpoints(&[form.curve(0.0), d1], splits, x);
                    for w in cuts.windows(2) {
                        total += self.rule.integrate(w[0], w[1], |t| self.upsilon(t) * below(t));
                    }
                }
                Plan::Line { curve, weight, splits } => {
                    for w in self.breakpoints(&[*curve], splits, x).windows(2) {
                        if curve.value(r, 0.5 * (w[0] + w[1])) <= x {
                            total += weight * default_mass(self.measure, w[0], w[1]);
                        }
                    }
                }
                Plan::Point(a) => {
                    if a.location <= x {
                        total += a.mass;
                    }
                }
            }
        }
        total
    }

    fn curve_on(&self, abscissae: Vec<f64>) -> DensityCurve {
        let values = parallel_map(&abscissae, |x| self.density(x));
        let spacing = abscissae.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        let coarse_grid = self.continuous_ranges().iter().any(|(lo, hi)| hi - lo > 0.0 && hi - lo < spacing);
        DensityCurve { grid: abscissae, values, atoms: self.atoms(), survival: self.survival, coarse_grid }
    }
}

/// Root of a monotone `f` on `[lo, hi]` by bisection, if it changes sign.
fn root(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Option<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 && f_hi == 0.0 || (f_lo < 0.0) == (f_hi < 0.0) {
        return None;
    }
    for _ in 0..200 {
        if hi - lo <= ROOT_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Order-preserving map over contiguous chunks on scoped threads. Each output
/// depends only on its input, so results do not depend on the thread count.
fn parallel_map(xs: &[f64], f: impl Fn(f64) -> f64 + Sync) -> Vec<f64> {
    let workers = thread::available_parallelism().map_or(1, |n| n.get()).min(16);
    if workers <= 1 || xs.len() < 64 {
        return xs.iter().map(|&x| f(x)).collect();
    }
    let chunk = xs.len().div_ceil(workers);
    thread::scope(|s| {
        let handles: Vec<_> = xs
            .chunks(chunk)
            .map(|part| {
                let f = &f;
                s.spawn(move || part.iter().map(|&x| f(x)).collect::<Vec<f64>>())
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("density worker panicked")).collect()
    })
}

/// Range of the payoff: continuous support and atoms.
pub fn support(grid: &TenorGrid, position: &Position, measure: &PhysicalMeasure) -> Result<(f64, f64)> {
    Ok(Model::new(grid, position, measure)?.support())
}

pub(crate) fn padded_grid((lo, hi): (f64, f64), points: usize) -> Vec<f64> {
    let width = hi - lo;
    let margin = if width > 0.0 { GRID_MARGIN * width } else { GRID_MARGIN * lo.abs().max(1.0) };
    let (a, b) = (lo - margin, hi + margin);
    let last = (points - 1) as f64;
    (0..points).map(|k| a + (b - a) * k as f64 / last).collect()
}

/// Payoff density on `points` uniform abscissae spanning the support plus a
/// 1% margin on each side.
pub fn density(
    grid: &TenorGrid,
    position: &Position,
    measure: &PhysicalMeasure,
    points: usize,
) -> Result<DensityCurve> {
    if points < 2 {
        return invalid("density grid needs at least two points");
    }
    let model = Model::new(grid, position, measure)?;
    Ok(model.curve_on(padded_grid(model.support(), points)))
}

/// Payoff density at caller-chosen increasing abscissae.
pub fn density_at(
    grid: &TenorGrid,
    position: &Position,
    measure: &PhysicalMeasure,
    abscissae: &[f64],
) -> Result<DensityCurve> {
    if abscissae.len() < 2 || abscissae.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("abscissae must be strictly increasing with at least two points");
    }
    Ok(Model::new(grid, position, measure)?.curve_on(abscissae.to_vec()))
}

/// `P(Δ <= x, τ <= T_N)` computed directly, without a density grid.
pub fn default_cdf(grid: &TenorGrid, position: &Position, measure: &PhysicalMeasure, x: f64) -> Result<f64> {
    Ok(Model::new(grid, position, measure)?.default_cdf(x))
}
