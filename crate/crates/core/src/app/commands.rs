//! One function per CLI command. Each returns the tables it produced.

use crate::gooddeal::{evaluate_price, price_from_sharpe, quote_at_rt, sweep_with_bounds, Rate};
use crate::hedging::{multi_cds_bounds, plain_vanilla_bounds, reduce_to_scaled, solve_side, spread_sweep, NoArbBounds};
use crate::lp::{certificate, uniqueness_probe, ProbeSettings, Uniqueness};
use crate::market::{CdsSpec, HedgePortfolio, MarketQuote, Position, Side};
use crate::valuation::{density, density_at, histogram, ks_distance, mc_samples, mean_pv, risk_summary, scale_density};

use super::config::Inputs;
use super::table::{Cell, Table};
use super::AppError;

const SIDES: [Side; 2] = [Side::Ask, Side::Bid];

fn check(ok: bool, what: impl FnOnce() -> String) -> Result<(), AppError> {
    if ok {
        Ok(())
    } else {
        Err(AppError::SelfCheck(what()))
    }
}

/// A position with every amount multiplied by `notional`.
fn scaled(mut position: Position, notional: f64) -> Position {
    position.deposit *= notional;
    for leg in &mut position.legs {
        leg.notional *= notional;
    }
    position
}

fn unit_illiquid(inputs: &Inputs) -> CdsSpec {
    CdsSpec::unit(inputs.illiquid.maturity_index, inputs.illiquid.spread)
}

/// A hedge choice with its bounds and the quotes it trades.
struct Hedge {
    name: &'static str,
    bounds: NoArbBounds,
    quotes: Vec<MarketQuote>,
}

impl Hedge {
    fn position(&self, inputs: &Inputs, side: Side) -> Result<Position, AppError> {
        let p = Position::hedged(&unit_illiquid(inputs), &self.quotes, self.bounds.hedge(side))?;
        Ok(scaled(p, inputs.illiquid.notional))
    }

    fn value(&self, inputs: &Inputs, side: Side) -> f64 {
        self.bounds.value(side) * inputs.illiquid.notional
    }
}

fn hedges(inputs: &Inputs) -> Result<Vec<Hedge>, AppError> {
    let ill = unit_illiquid(inputs);
    let mut out = vec![Hedge {
        name: "multi",
        bounds: multi_cds_bounds(&inputs.grid, &ill, &inputs.quotes)?,
        quotes: inputs.quotes.clone(),
    }];
    if let Some(q) = inputs.matched_quote() {
        out.push(Hedge {
            name: "plain_vanilla",
            bounds: plain_vanilla_bounds(&inputs.grid, &ill, &q)?,
            quotes: vec![q],
        });
    }
    Ok(out)
}

pub fn bounds(inputs: &Inputs) -> Result<Vec<(String, Table)>, AppError> {
    let spreads = inputs.config.bounds.spreads_bp()?;
    let rates: Vec<f64> = spreads.iter().map(|w| w * 1e-4).collect();
    let rows = spread_sweep(&inputs.grid, inputs.illiquid.maturity_index, &inputs.quotes, &rates)?;
    let k = inputs.illiquid.notional;
    let mut t = Table::new(&[
        "w_old_bp",
        "v_lub",
        "v_glb",
        "vanilla_lub",
        "vanilla_glb",
        "plain_vanilla_lub",
        "plain_vanilla_glb",
        "max_gap",
    ]);
    for (bp, r) in spreads.iter().zip(&rows) {
        let ill = CdsSpec::unit(inputs.illiquid.maturity_index, r.illiquid_spread);
        let mut gap = 0.0f64;
        for side in SIDES {
            let s = solve_side(&inputs.grid, &ill, &inputs.quotes, side)?;
            let c = certificate(&s.system, &s.solution)?;
            check(c.holds(), || format!("duality certificate fails at w_old = {bp} bp ({side:?}): {c:?}"))?;
            gap = gap.max(c.gap).max(c.complementary_slackness);
        }
        check(r.v_glb <= r.v_lub + 1e-9, || format!("bid bound above ask bound at w_old = {bp} bp"))?;
        t.push(vec![
            Cell::from(*bp),
            Cell::from(k * r.v_lub),
            Cell::from(k * r.v_glb),
            Cell::from(k * r.vanilla_lub),
            Cell::from(k * r.vanilla_glb),
            Cell::from(k * r.plain_lub),
            Cell::from(k * r.plain_glb),
            Cell::from(gap),
        ]);
    }
    Ok(vec![("bounds.csv".into(), t)])
}

pub fn hedge(inputs: &Inputs, seed: u64) -> Result<Vec<(String, Table)>, AppError> {
    let ill = unit_illiquid(inputs);
    let k = inputs.illiquid.notional;
    let mut solved = Vec::new();
    let mut u = Table::new(&[
        "side",
        "value",
        "uniqueness",
        "trials",
        "scale",
        "gap",
        "complementary_slackness",
        "primal_residual",
        "dual_residual",
    ]);
    let settings = ProbeSettings { seed, ..ProbeSettings::default() };
    for side in SIDES {
        let s = solve_side(&inputs.grid, &ill, &inputs.quotes, side)?;
        let c = certificate(&s.system, &s.solution)?;
        check(c.holds(), || format!("duality certificate fails ({side:?}): {c:?}"))?;
        let probe = uniqueness_probe(&s.system, &s.solution, settings)?;
        u.push(vec![
            Cell::from(side.label()),
            Cell::from(k * s.solution.objective),
            Cell::from(match probe {
                Uniqueness::Unique => "unique",
                Uniqueness::NonUnique => "non_unique",
            }),
            Cell::from(settings.trials),
            Cell::from(settings.scale),
            Cell::from(c.gap),
            Cell::from(c.complementary_slackness),
            Cell::from(c.primal_residual),
            Cell::from(c.dual_residual),
        ]);
        solved.push(HedgePortfolio::from_lp_vector(side, s.solution.variables.as_slice())?);
    }
    let mut h = Table::new(&["instrument", "maturity_years", "ask", "bid"]);
    let q = inputs.grid.quarter_length();
    let (ask, bid) = (solved[0].lp_vector(), solved[1].lp_vector());
    for (p, quote) in inputs.quotes.iter().enumerate() {
        h.push(vec![
            Cell::from("cds"),
            Cell::from(quote.maturity_index as f64 * q),
            Cell::from(k * ask[p]),
            Cell::from(k * bid[p]),
        ]);
    }
    let last = ask.len() - 1;
    h.push(vec![Cell::from("deposit"), Cell::from(f64::NAN), Cell::from(k * ask[last]), Cell::from(k * bid[last])]);
    h.push(vec![
        Cell::from("total_cds"),
        Cell::from(f64::NAN),
        Cell::from(k * solved[0].total_notional()),
        Cell::from(k * solved[1].total_notional()),
    ]);
    Ok(vec![("hedge.csv".into(), h), ("uniqueness.csv".into(), u)])
}

pub fn density_tables(inputs: &Inputs, seed: u64) -> Result<Vec<(String, Table)>, AppError> {
    let g = &inputs.grid;
    let m = &inputs.measure;
    let run = &inputs.config.run;
    let mut positions = vec![(
        "single".to_string(),
        scaled(Position { deposit: 0.0, legs: vec![unit_illiquid(inputs)] }, inputs.illiquid.notional),
    )];
    for h in hedges(inputs)? {
        for side in SIDES {
            positions.push((format!("{}_{}", h.name, side.label()), h.position(inputs, side)?));
        }
    }
    let mut analytic = Table::new(&["position", "delta", "density"]);
    let mut atoms = Table::new(&["position", "location", "mass", "survival"]);
    let mut mc = Table::new(&["position", "delta", "density"]);
    let mut summary = Table::new(&[
        "position",
        "mean_pv",
        "grid_mean",
        "total_mass",
        "survival_location",
        "survival_mass",
        "mc_survival_mass",
        "mc_mean",
        "ks_default",
        "significant_spread",
        "coarse_grid",
    ]);
    for (stream, (name, pos)) in positions.iter().enumerate() {
        let curve = density(g, pos, m, run.delta_grid)?;
        for (x, f) in curve.grid.iter().zip(&curve.values) {
            analytic.push(vec![Cell::from(name.as_str()), Cell::from(*x), Cell::from(*f)]);
        }
        for a in &curve.atoms {
            let is_survival = a.location == curve.survival.location;
            atoms.push(vec![
                Cell::from(name.as_str()),
                Cell::from(a.location),
                Cell::from(a.mass),
                Cell::from(is_survival),
            ]);
        }
        let samples = mc_samples(g, pos, m, run.mc_samples, seed.wrapping_add(stream as u64))?;
        let hist = histogram(&samples, curve.survival.location, run.mc_bins)?;
        for (x, f) in hist.grid.iter().zip(&hist.values) {
            mc.push(vec![Cell::from(name.as_str()), Cell::from(*x), Cell::from(*f)]);
        }
        let mean = mean_pv(g, pos, m)?;
        let mc_mean = (samples.defaulted.iter().sum::<f64>() + samples.survived as f64 * curve.survival.location)
            / samples.n as f64;
        let cdf = curve.default_conditioned_cdf();
        let ks = ks_distance(&samples.defaulted, cdf);
        let n_def = samples.defaulted.len().max(1) as f64;
        let ks_limit = 0.01f64.max(1.63 / n_def.sqrt());
        check(ks <= ks_limit, || format!("{name}: KS distance {ks} exceeds {ks_limit}"))?;
        // Trapezoid error is O(h · peak) at the density's jumps.
        let h = curve.grid[1] - curve.grid[0];
        let peak = curve.values.iter().copied().fold(0.0, f64::max);
        let mass_tol = 1e-3 + h * peak;
        check((curve.total_mass() - 1.0).abs() <= mass_tol, || {
            format!("{name}: density mass {} differs from 1", curve.total_mass())
        })?;
        summary.push(vec![
            Cell::from(name.as_str()),
            Cell::from(mean),
            Cell::from(curve.mean()),
            Cell::from(curve.total_mass()),
            Cell::from(curve.survival.location),
            Cell::from(curve.survival.mass),
            Cell::from(samples.survival_fraction()),
            Cell::from(mc_mean),
            Cell::from(ks),
            Cell::from(curve.significant_spread().unwrap_or(f64::NAN)),
            Cell::from(curve.coarse_grid),
        ]);
    }
    Ok(vec![
        ("density_analytic.csv".into(), analytic),
        ("density_atoms.csv".into(), atoms),
        ("density_mc.csv".into(), mc),
        ("density_summary.csv".into(), summary),
    ])
}

fn rate_cell(r: Rate) -> Cell {
    Cell::from(r.value())
}

pub fn gooddeal(inputs: &Inputs) -> Result<Vec<(String, Table)>, AppError> {
    let g = &inputs.grid;
    let cfg = &inputs.config.gooddeal;
    let run = &inputs.config.run;
    let mut curves =
        Table::new(&["hedge", "r_t", "bid", "ask", "spread", "l_max_bid", "l_max_ask", "s_r_bid", "s_r_ask"]);
    let mut quotes = Table::new(&[
        "hedge",
        "side",
        "criterion",
        "v_bound",
        "mean_pv",
        "u_min",
        "u_max",
        "lambda",
        "r_t",
        "price",
        "l_max",
        "s_r",
        "loss_prob",
        "cond_loss",
    ]);
    let rts: Vec<f64> = (0..cfg.rt_points).map(|i| cfg.rt_max * i as f64 / (cfg.rt_points - 1) as f64).collect();
    for h in hedges(inputs)? {
        let mut means = [0.0; 2];
        let mut values = [0.0; 2];
        let mut positions = Vec::new();
        for (j, side) in SIDES.into_iter().enumerate() {
            let pos = h.position(inputs, side)?;
            means[j] = mean_pv(g, &pos, &inputs.measure)?.max(0.0);
            values[j] = h.value(inputs, side);
            positions.push(pos);
        }
        for &r in &rts {
            let ask = quote_at_rt(Side::Ask, values[0], means[0], r)?;
            let bid = quote_at_rt(Side::Bid, values[1], means[1], r)?;
            curves.push(vec![
                Cell::from(h.name),
                Cell::from(r),
                Cell::from(bid.price),
                Cell::from(ask.price),
                Cell::from(ask.price - bid.price),
                Cell::from(bid.l_max),
                Cell::from(ask.l_max),
                rate_cell(bid.s_r),
                rate_cell(ask.s_r),
            ]);
        }
        for (j, side) in SIDES.into_iter().enumerate() {
            let (criterion, result) = match cfg.s_r {
                Some(s) => {
                    let p = price_from_sharpe(side, values[j], means[j], s)?;
                    ("s_r", evaluate_price(side, values[j], means[j], p)?)
                }
                None => ("r_t", quote_at_rt(side, values[j], means[j], cfg.r_t)?),
            };
            let curve = density(g, &positions[j], &inputs.measure, run.delta_grid)?;
            let risk = risk_summary(&curve, result.lambda, means[j])?;
            check((result.u_min..=result.u_max).contains(&result.price), || {
                format!("{} {side:?} quote {} outside its acceptable range", h.name, result.price)
            })?;
            quotes.push(vec![
                Cell::from(h.name),
                Cell::from(side.label()),
                Cell::from(criterion),
                Cell::from(result.v_bound),
                Cell::from(result.mean_pv),
                Cell::from(result.u_min),
                Cell::from(result.u_max),
                Cell::from(result.lambda),
                rate_cell(result.r_t),
                Cell::from(result.price),
                Cell::from(result.l_max),
                rate_cell(result.s_r),
                Cell::from(risk.loss_prob),
                Cell::from(risk.cond_loss.unwrap_or(f64::NAN)),
            ]);
        }
    }

    // Good-deal bounds against the illiquid spread, multi-CDS hedge.
    let mut vs_spread = Table::new(&["w_old_bp", "v_lub", "ask", "bid", "v_glb", "mean_pv_ask", "mean_pv_bid"]);
    for bp in inputs.config.bounds.spreads_bp()? {
        let ill = CdsSpec::unit(inputs.illiquid.maturity_index, bp * 1e-4);
        let b = multi_cds_bounds(g, &ill, &inputs.quotes)?;
        let k = inputs.illiquid.notional;
        let mut row = vec![Cell::from(bp), Cell::from(k * b.v_lub)];
        let mut means = Vec::new();
        let mut prices = Vec::new();
        for side in SIDES {
            let pos = scaled(Position::hedged(&ill, &inputs.quotes, b.hedge(side))?, k);
            let d = mean_pv(g, &pos, &inputs.measure)?.max(0.0);
            let v = k * b.value(side);
            let price = match cfg.s_r {
                Some(s) => price_from_sharpe(side, v, d, s)?,
                None => quote_at_rt(side, v, d, cfg.r_t)?.price,
            };
            means.push(d);
            prices.push(price);
        }
        row.extend([Cell::from(prices[0]), Cell::from(prices[1]), Cell::from(k * b.v_glb)]);
        row.extend(means.into_iter().map(Cell::from));
        vs_spread.push(row);
    }
    Ok(vec![
        ("gooddeal_curves.csv".into(), curves),
        ("gooddeal_quotes.csv".into(), quotes),
        ("gooddeal_vs_spread.csv".into(), vs_spread),
    ])
}

pub fn sweep(inputs: &Inputs) -> Result<Vec<(String, Table)>, AppError> {
    let ill = unit_illiquid(inputs);
    let bounds = multi_cds_bounds(&inputs.grid, &ill, &inputs.quotes)?;
    let mut specs = Vec::new();
    for name in &inputs.config.sweep.recoveries {
        specs.push((name.clone(), inputs.recovery_by_name(name)?));
    }
    let rows = sweep_with_bounds(
        &inputs.grid,
        &ill,
        &inputs.quotes,
        &bounds,
        &inputs.config.sweep.pd1,
        &specs,
        inputs.config.gooddeal.r_t,
    )?;
    let k = inputs.illiquid.notional;
    let mut t = Table::new(&["pd1", "recovery", "mean_recovery", "mean_pv_ask", "mean_pv_bid", "bid", "ask"]);
    for r in rows {
        check(r.bid.is_finite() && r.ask.is_finite() && r.ask > r.bid, || {
            format!("non-finite or crossed quote at pd1 = {} ({})", r.pd1, r.recovery)
        })?;
        t.push(vec![
            Cell::from(r.pd1),
            Cell::from(r.recovery),
            Cell::from(r.mean_recovery),
            Cell::from(k * r.mean_pv_ask),
            Cell::from(k * r.mean_pv_bid),
            Cell::from(k * r.bid),
            Cell::from(k * r.ask),
        ]);
    }
    Ok(vec![("sweep.csv".into(), t)])
}

/// Invariance of the reduced hedge, linearity of the mean and the density
/// scaling relation across spread gaps `W`.
pub fn scalecheck(inputs: &Inputs) -> Result<Vec<(String, Table)>, AppError> {
    let g = &inputs.grid;
    let Some(matched) = inputs.matched_quote() else {
        return Err(AppError::Config(super::config::ConfigError::Invalid(
            "scalecheck needs a market quote at the illiquid maturity".into(),
        )));
    };
    let ws = &inputs.config.scalecheck.w_bp;
    let mut t = Table::new(&[
        "side",
        "mu",
        "w_bp",
        "reduced_value",
        "v_prime_diff",
        "price_reduced",
        "price_lp",
        "price_diff",
        "mean_pv",
        "mean_pv_per_w",
        "mean_linearity_diff",
        "density_scaling_diff",
    ]);
    for side in SIDES {
        for mu in [1.0, -1.0] {
            let mut reference: Option<(Vec<f64>, f64, f64, crate::valuation::DensityCurve)> = None;
            for &w_bp in ws {
                let w = w_bp * 1e-4;
                let ill = CdsSpec::unit(inputs.illiquid.maturity_index, matched.spread - mu * w);
                if ill.spread < 0.0 {
                    continue;
                }
                let red = reduce_to_scaled(g, &ill, &inputs.quotes, side)?;
                let lp = solve_side(g, &ill, &inputs.quotes, side)?;
                let price_lp = lp.solution.objective;
                let price_reduced = red.price(red.w_diff);
                let hedge = red.hedge(red.w_diff)?;
                let pos = Position::hedged(&ill, &inputs.quotes, &hedge)?;
                let mean = mean_pv(g, &pos, &inputs.measure)?;
                let vp: Vec<f64> = red.v_prime.iter().copied().collect();
                let (v_diff, lin_diff, dens_diff) = match &reference {
                    None => {
                        let curve = density(g, &pos, &inputs.measure, inputs.config.run.delta_grid)?;
                        reference = Some((vp.clone(), w, mean, curve));
                        (0.0, 0.0, 0.0)
                    }
                    Some((v0, w0, m0, c0)) => {
                        let vd = v0.iter().zip(&vp).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                        let scaled_curve = scale_density(c0, w0 / w)?;
                        let direct = density_at(g, &pos, &inputs.measure, &scaled_curve.grid)?;
                        let dd = scaled_curve
                            .values
                            .iter()
                            .zip(&direct.values)
                            .map(|(a, b)| (a - b).abs())
                            .fold(0.0, f64::max);
                        (vd, (mean - m0 * w / w0).abs(), dd)
                    }
                };
                check(v_diff <= 1e-8 && lin_diff <= 1e-10 && dens_diff <= 1e-8, || {
                    format!("scaling breach at W = {w_bp} bp ({side:?}, mu = {mu}): {v_diff} {lin_diff} {dens_diff}")
                })?;
                check((price_reduced - price_lp).abs() <= 1e-8, || {
                    format!("reduced price {price_reduced} differs from LP price {price_lp} at W = {w_bp} bp")
                })?;
                t.push(vec![
                    Cell::from(side.label()),
                    Cell::from(mu),
                    Cell::from(w_bp),
                    Cell::from(red.reduced_value),
                    Cell::from(v_diff),
                    Cell::from(price_reduced),
                    Cell::from(price_lp),
                    Cell::from(price_reduced - price_lp),
                    Cell::from(mean),
                    Cell::from(mean / w),
                    Cell::from(lin_diff),
                    Cell::from(dens_diff),
                ]);
            }
        }
    }
    Ok(vec![("scalecheck.csv".into(), t)])
}
