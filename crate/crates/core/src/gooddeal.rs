//! Good-deal bid/ask prices from no-arbitrage bounds and mean hedged PVs.
//!
//! A dealer who quotes `u = V - σλΔ̄` rebates the fraction `λ` of the hedged
//! position's expected payoff. The expected return on capital at risk is
//! `R_T = (1 - λ)/λ` and the effective Sharpe ratio is `S_R = R_T / L_Max`
//! with `L_Max = λΔ̄`.

use crate::error::{invalid, Error, Result};
use crate::hedging::{multi_cds_bounds, NoArbBounds};
use crate::market::{CdsSpec, MarketQuote, Position, Side, TenorGrid};
use crate::measure::{PhysicalMeasure, RecoveryDensitySpec};
use crate::valuation::mean_pv;

/// A non-negative rate that may be unbounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rate {
    Finite(f64),
    Infinite,
}

impl Rate {
    pub fn value(self) -> f64 {
        match self {
            Rate::Finite(x) => x,
            Rate::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Rate::Finite(_))
    }
}

fn check_mean(mean_pv: f64) -> Result<()> {
    if !(mean_pv >= 0.0 && mean_pv.is_finite()) {
        return invalid(format!("mean hedged PV must be finite and >= 0, got {mean_pv}"));
    }
    Ok(())
}

/// `(u_min, u_max)`: ask `[V - Δ̄, V]`, bid `[V, V + Δ̄]`.
pub fn price_range(side: Side, v_bound: f64, mean_pv: f64) -> (f64, f64) {
    match side {
        Side::Ask => (v_bound - mean_pv, v_bound),
        Side::Bid => (v_bound, v_bound + mean_pv),
    }
}

/// `u = V - σλΔ̄`.
pub fn price_from_lambda(side: Side, v_bound: f64, mean_pv: f64, lambda: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&lambda) {
        return invalid(format!("rebate fraction must lie in [0, 1], got {lambda}"));
    }
    Ok(v_bound - side.sign() * lambda * mean_pv)
}

/// `R_T = (1 - λ)/λ`; `λ = 0` is the unbounded return at the no-arbitrage
/// bound.
pub fn lambda_to_rt(lambda: f64) -> Result<Rate> {
    if !(0.0..=1.0).contains(&lambda) {
        return invalid(format!("rebate fraction must lie in [0, 1], got {lambda}"));
    }
    Ok(if lambda == 0.0 { Rate::Infinite } else { Rate::Finite((1.0 - lambda) / lambda) })
}

/// `λ = 1/(1 + R_T)`.
pub fn rt_to_lambda(r_t: Rate) -> Result<f64> {
    match r_t {
        Rate::Infinite => Ok(0.0),
        Rate::Finite(r) if r >= 0.0 && r.is_finite() => Ok(1.0 / (1.0 + r)),
        Rate::Finite(r) => invalid(format!("expected return must be >= 0, got {r}")),
    }
}

/// Price at which the expected return on capital at risk equals `r_t`.
pub fn price_from_rt(side: Side, v_bound: f64, mean_pv: f64, r_t: f64) -> Result<f64> {
    check_mean(mean_pv)?;
    if !(r_t >= 0.0) {
        return invalid(format!("expected return must be >= 0, got {r_t}"));
    }
    let (u_min, u_max) = price_range(side, v_bound, mean_pv);
    if r_t.is_infinite() {
        return Ok(v_bound);
    }
    Ok(match side {
        Side::Ask => u_min + (u_max - u_min) * r_t / (1.0 + r_t),
        Side::Bid => u_min + (u_max - u_min) / (1.0 + r_t),
    })
}

/// Inverse of [`price_from_rt`]. The no-arbitrage bound maps to
/// [`Rate::Infinite`], the zero-profit price to `0`, and prices outside the
/// acceptable range are an error.
pub fn rt_from_price(side: Side, v_bound: f64, mean_pv: f64, price: f64) -> Result<Rate> {
    check_mean(mean_pv)?;
    let (u_min, u_max) = price_range(side, v_bound, mean_pv);
    if price == v_bound {
        return Ok(Rate::Infinite);
    }
    if !(u_min..=u_max).contains(&price) {
        return Err(Error::PriceOutOfRange { price, u_min, u_max });
    }
    Ok(Rate::Finite(match side {
        Side::Ask => (price - u_min) / (u_max - price),
        Side::Bid => (u_max - price) / (price - u_min),
    }))
}

/// `L_Max` from the effective Sharpe ratio: the positive root of
/// `S_R L² + L - Δ̄ = 0`, with the limit `Δ̄` at `S_R = 0`.
pub fn lmax_from_sharpe(s_r: f64, mean_pv: f64) -> Result<f64> {
    check_mean(mean_pv)?;
    if !(s_r >= 0.0 && s_r.is_finite()) {
        return invalid(format!("Sharpe ratio must be finite and >= 0, got {s_r}"));
    }
    if s_r == 0.0 {
        return Ok(mean_pv);
    }
    // Rationalized root, stable for small s_r.
    Ok(2.0 * mean_pv / (1.0 + (1.0 + 4.0 * s_r * mean_pv).sqrt()))
}

/// Price at which the effective Sharpe ratio equals `s_r`.
pub fn price_from_sharpe(side: Side, v_bound: f64, mean_pv: f64, s_r: f64) -> Result<f64> {
    let l_max = lmax_from_sharpe(s_r, mean_pv)?;
    let lambda = if mean_pv > 0.0 { l_max / mean_pv } else { 0.0 };
    price_from_lambda(side, v_bound, mean_pv, lambda)
}

/// Everything about one side's quote.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoodDealResult {
    pub side: Side,
    pub v_bound: f64,
    pub mean_pv: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub lambda: f64,
    pub r_t: Rate,
    pub price: f64,
    /// Capital at risk `λΔ̄`.
    pub l_max: f64,
    pub s_r: Rate,
}

/// Full diagnostics for a given quote.
pub fn evaluate_price(side: Side, v_bound: f64, mean_pv: f64, price: f64) -> Result<GoodDealResult> {
    let r_t = rt_from_price(side, v_bound, mean_pv, price)?;
    let lambda = rt_to_lambda(r_t)?;
    let l_max = lambda * mean_pv;
    let s_r = match r_t {
        Rate::Finite(r) if l_max > 0.0 => Rate::Finite(r / l_max),
        Rate::Finite(_) => Rate::Infinite,
        Rate::Infinite => Rate::Infinite,
    };
    let (u_min, u_max) = price_range(side, v_bound, mean_pv);
    Ok(GoodDealResult { side, v_bound, mean_pv, u_min, u_max, lambda, r_t, price, l_max, s_r })
}

/// Quote meeting a target expected return on capital at risk.
pub fn quote_at_rt(side: Side, v_bound: f64, mean_pv: f64, r_t: f64) -> Result<GoodDealResult> {
    let price = price_from_rt(side, v_bound, mean_pv, r_t)?;
    let lambda = rt_to_lambda(Rate::Finite(r_t))?;
    let mut result = evaluate_price(side, v_bound, mean_pv, price)?;
    // Keep the requested rate exactly rather than its round trip.
    result.r_t = Rate::Finite(r_t);
    result.lambda = lambda;
    result.l_max = lambda * mean_pv;
    result.s_r = if result.l_max > 0.0 { Rate::Finite(r_t / result.l_max) } else { Rate::Infinite };
    Ok(result)
}

/// `(R_T, L_Max, S_R)` at a quoted price.
pub fn sharpe_curves(side: Side, v_bound: f64, mean_pv: f64, price: f64) -> Result<(Rate, f64, Rate)> {
    let r = evaluate_price(side, v_bound, mean_pv, price)?;
    Ok((r.r_t, r.l_max, r.s_r))
}

/// Minimum requirements a dealer may combine.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Criteria {
    pub min_rt: Option<f64>,
    pub min_sharpe: Option<f64>,
    pub min_spread: Option<f64>,
}

impl Criteria {
    /// Return-based criteria on one side.
    pub fn accepts(&self, result: &GoodDealResult) -> bool {
        self.min_rt.is_none_or(|m| result.r_t.value() >= m) && self.min_sharpe.is_none_or(|m| result.s_r.value() >= m)
    }

    /// All criteria on a bid/ask pair, including the minimum spread.
    pub fn accepts_quote(&self, bid: &GoodDealResult, ask: &GoodDealResult) -> bool {
        self.accepts(bid) && self.accepts(ask) && self.min_spread.is_none_or(|m| ask.price - bid.price >= m)
    }
}

/// One cell of a robustness sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub pd1: f64,
    pub recovery: String,
    pub mean_recovery: f64,
    pub mean_pv_ask: f64,
    pub mean_pv_bid: f64,
    pub bid: f64,
    pub ask: f64,
}

/// Bid/ask across default probabilities and recovery laws, with the hedges
/// held fixed (they depend only on market prices).
pub fn robustness_sweep(
    grid: &TenorGrid,
    illiquid: &CdsSpec,
    quotes: &[MarketQuote],
    pd1_grid: &[f64],
    recovery_specs: &[(String, RecoveryDensitySpec)],
    r_t: f64,
) -> Result<Vec<SweepRow>> {
    let bounds = multi_cds_bounds(grid, illiquid, quotes)?;
    sweep_with_bounds(grid, illiquid, quotes, &bounds, pd1_grid, recovery_specs, r_t)
}

pub fn sweep_with_bounds(
    grid: &TenorGrid,
    illiquid: &CdsSpec,
    quotes: &[MarketQuote],
    bounds: &NoArbBounds,
    pd1_grid: &[f64],
    recovery_specs: &[(String, RecoveryDensitySpec)],
    r_t: f64,
) -> Result<Vec<SweepRow>> {
    let ask_pos = Position::hedged(illiquid, quotes, &bounds.hedge_lub)?;
    let bid_pos = Position::hedged(illiquid, quotes, &bounds.hedge_glb)?;
    let mut rows = Vec::with_capacity(pd1_grid.len() * recovery_specs.len());
    for &pd1 in pd1_grid {
        for (label, spec) in recovery_specs {
            let measure = PhysicalMeasure::from_pd1(pd1, grid.horizon(), spec.clone())?;
            let mean_ask = mean_pv(grid, &ask_pos, &measure)?.max(0.0);
            let mean_bid = mean_pv(grid, &bid_pos, &measure)?.max(0.0);
            rows.push(SweepRow {
                pd1,
                recovery: label.clone(),
                mean_recovery: spec.mean(),
                mean_pv_ask: mean_ask,
                mean_pv_bid: mean_bid,
                bid: price_from_rt(Side::Bid, bounds.v_glb, mean_bid, r_t)?,
                ask: price_from_rt(Side::Ask, bounds.v_lub, mean_ask, r_t)?,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hedging::plain_vanilla_bounds;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    // Bounds and means from the standard inputs.
    const V_ASK: f64 = 0.39152418726373694;
    const V_BID: f64 = 0.2571051631519402;
    const D_ASK: f64 = 0.03001108949650542;
    const D_BID: f64 = 0.06060011059013349;

    #[test]
    fn lambda_examples() {
        assert_eq!(price_from_lambda(Side::Ask, V_ASK, D_ASK, 0.0).unwrap(), V_ASK);
        assert_abs_diff_eq!(price_from_lambda(Side::Ask, V_ASK, D_ASK, 1.0).unwrap(), V_ASK - D_ASK, epsilon = 1e-15);
        assert_abs_diff_eq!(price_from_lambda(Side::Bid, 0.2571, 0.0606, 0.8).unwrap(), 0.30558, epsilon = 1e-12);
        assert!(price_from_lambda(Side::Bid, 0.2571, 0.0606, 1.2).is_err());
    }

    #[test]
    fn conversions() {
        assert_abs_diff_eq!(lambda_to_rt(0.8).unwrap().value(), 0.25, epsilon = 1e-15);
        assert_eq!(rt_to_lambda(Rate::Finite(0.0)).unwrap(), 1.0);
        assert_eq!(lambda_to_rt(0.0).unwrap(), Rate::Infinite);
        assert_eq!(rt_to_lambda(Rate::Infinite).unwrap(), 0.0);
        assert!(rt_to_lambda(Rate::Finite(-0.1)).is_err());
        for k in 1..100 {
            let l = k as f64 / 100.0;
            let back = rt_to_lambda(lambda_to_rt(l).unwrap()).unwrap();
            assert_abs_diff_eq!(back, l, epsilon = 1e-15);
        }
    }

    #[test]
    fn rt_pricing_examples() {
        assert_eq!(price_from_rt(Side::Ask, V_ASK, D_ASK, f64::INFINITY).unwrap(), V_ASK);
        assert_abs_diff_eq!(price_from_rt(Side::Ask, V_ASK, D_ASK, 1e12).unwrap(), V_ASK, epsilon = 1e-12);
        assert_abs_diff_eq!(price_from_rt(Side::Ask, 0.3914, 0.3914 - 0.3606, 0.25).unwrap(), 0.3668, epsilon = 1e-4);
        assert_abs_diff_eq!(price_from_rt(Side::Bid, 0.2571, 0.3177 - 0.2571, 0.25).unwrap(), 0.3056, epsilon = 1e-4);
        assert_abs_diff_eq!(price_from_rt(Side::Ask, V_ASK, D_ASK, 0.0).unwrap(), 0.3606, epsilon = 2.5e-3);
        assert_abs_diff_eq!(price_from_rt(Side::Ask, V_ASK, D_ASK, 0.25).unwrap(), 0.367515, epsilon = 1e-6);
        assert_abs_diff_eq!(price_from_rt(Side::Bid, V_BID, D_BID, 0.25).unwrap(), 0.305585, epsilon = 1e-6);
    }

    #[test]
    fn inverse_pricing_examples() {
        let mid = V_ASK - 0.5 * D_ASK;
        assert_abs_diff_eq!(rt_from_price(Side::Ask, V_ASK, D_ASK, mid).unwrap().value(), 1.0, epsilon = 1e-12);
        let r = rt_from_price(Side::Ask, V_ASK, D_ASK, 0.367515).unwrap().value();
        assert_abs_diff_eq!(r, 0.25, epsilon = 1e-4);
        assert_eq!(rt_from_price(Side::Ask, V_ASK, D_ASK, V_ASK).unwrap(), Rate::Infinite);
        assert_eq!(rt_from_price(Side::Bid, V_BID, D_BID, V_BID).unwrap(), Rate::Infinite);
        assert_eq!(rt_from_price(Side::Ask, V_ASK, D_ASK, V_ASK - D_ASK).unwrap(), Rate::Finite(0.0));
        assert!(matches!(rt_from_price(Side::Ask, V_ASK, D_ASK, 0.35), Err(Error::PriceOutOfRange { .. })));
        assert!(matches!(rt_from_price(Side::Bid, V_BID, D_BID, 0.25), Err(Error::PriceOutOfRange { .. })));
    }

    #[test]
    fn sharpe_examples() {
        let (r, l, s) = sharpe_curves(Side::Ask, V_ASK, D_ASK, V_ASK - D_ASK).unwrap();
        assert_eq!((r, s), (Rate::Finite(0.0), Rate::Finite(0.0)));
        assert_abs_diff_eq!(l, D_ASK, epsilon = 1e-15);
        assert_abs_diff_eq!(lmax_from_sharpe(1e-12, 0.5).unwrap(), 0.5, epsilon = 1e-12);
        assert_eq!(lmax_from_sharpe(0.0, 0.5).unwrap(), 0.5);
        assert_eq!(lmax_from_sharpe(3.0, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(lmax_from_sharpe(1.0, 2.0).unwrap(), 1.0, epsilon = 1e-15);
        // Closure: s_r = 1, Δ̄ = 2 gives λ = 0.5 and r_t = 1.
        let p = price_from_sharpe(Side::Ask, 3.0, 2.0, 1.0).unwrap();
        let g = evaluate_price(Side::Ask, 3.0, 2.0, p).unwrap();
        assert_abs_diff_eq!(g.lambda, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(g.r_t.value(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.s_r.value(), 1.0, epsilon = 1e-15);
        let mut prev = 0.0;
        for k in 1..200 {
            let l = lmax_from_sharpe(2.0, k as f64 * 0.01).unwrap();
            assert!(l > prev);
            prev = l;
        }
    }

    #[test]
    fn zero_return_spread() {
        let ask = price_from_rt(Side::Ask, V_ASK, D_ASK, 0.0).unwrap();
        let bid = price_from_rt(Side::Bid, V_BID, D_BID, 0.0).unwrap();
        assert_abs_diff_eq!(ask - bid, 0.0429, epsilon = 3e-3);
        assert_abs_diff_eq!(bid, 0.3177, epsilon = 2.5e-3);
    }

    #[test]
    fn criteria_filter() {
        let ask = quote_at_rt(Side::Ask, V_ASK, D_ASK, 0.25).unwrap();
        let bid = quote_at_rt(Side::Bid, V_BID, D_BID, 0.25).unwrap();
        let c = Criteria { min_rt: Some(0.2), min_sharpe: None, min_spread: Some(0.05) };
        assert!(c.accepts_quote(&bid, &ask));
        let strict = Criteria { min_spread: Some(0.07), ..c };
        assert!(!strict.accepts_quote(&bid, &ask));
        let demanding = Criteria { min_rt: Some(0.3), ..Default::default() };
        assert!(!demanding.accepts(&ask));
        assert!(Criteria::default().accepts(&ask));
    }

    fn grid() -> TenorGrid {
        TenorGrid::new(0.25, 20, 0.02).unwrap()
    }

    fn quotes() -> Vec<MarketQuote> {
        [(4, 0.0525), (8, 0.1247), (12, 0.1808), (16, 0.2156), (20, 0.2405)]
            .iter()
            .map(|&(m, u)| MarketQuote::new(m, u, 0.05))
            .collect()
    }

    fn laws() -> Vec<(String, RecoveryDensitySpec)> {
        vec![
            ("A".into(), RecoveryDensitySpec::gamma_a()),
            ("B".into(), RecoveryDensitySpec::gamma_b()),
            ("C".into(), RecoveryDensitySpec::gamma_c()),
        ]
    }

    #[test]
    fn robustness_shifts() {
        let ill = CdsSpec::unit(20, 0.01);
        let rows = robustness_sweep(&grid(), &ill, &quotes(), &[0.30], &laws(), 0.25).unwrap();
        let spread = rows[0].ask - rows[0].bid;
        assert_abs_diff_eq!(rows[0].ask, 0.367515, epsilon = 1e-5);
        assert_abs_diff_eq!(rows[0].bid, 0.305585, epsilon = 1e-5);
        let ask_b = (rows[1].ask - rows[0].ask).abs() / spread;
        let ask_c = (rows[2].ask - rows[0].ask).abs() / spread;
        assert!((0.02..=0.06).contains(&ask_b), "{ask_b}");
        assert!((0.15..=0.25).contains(&ask_c), "{ask_c}");
        let ratio = (rows[2].bid - rows[0].bid).abs() / (rows[2].ask - rows[0].ask).abs();
        assert!((0.3..=0.7).contains(&ratio), "{ratio}");
    }

    #[test]
    fn equal_mean_two_point_recovery_matches() {
        let ill = CdsSpec::unit(20, 0.01);
        let a = RecoveryDensitySpec::gamma_a();
        let two = RecoveryDensitySpec::two_point_with_mean(0.0, 0.6, a.mean()).unwrap();
        let laws = vec![("A".to_string(), a), ("two".to_string(), two)];
        let rows = robustness_sweep(&grid(), &ill, &quotes(), &[0.30], &laws, 0.25).unwrap();
        assert_abs_diff_eq!(rows[0].bid, rows[1].bid, epsilon = 1e-9);
        assert_abs_diff_eq!(rows[0].ask, rows[1].ask, epsilon = 1e-9);
    }

    #[test]
    fn plain_vanilla_has_more_capital_at_risk() {
        let g = grid();
        let ill = CdsSpec::unit(20, 0.01);
        let q = quotes();
        let m = PhysicalMeasure::from_pd1(0.30, 5.0, RecoveryDensitySpec::gamma_a()).unwrap();
        let pv = plain_vanilla_bounds(&g, &ill, &q[4]).unwrap();
        let pos = Position::hedged(&ill, &q[4..], &pv.hedge_lub).unwrap();
        let d = mean_pv(&g, &pos, &m).unwrap();
        assert_abs_diff_eq!(d, 0.100028, epsilon = 1e-5);
        let zero = price_from_rt(Side::Ask, pv.v_lub, d, 0.0).unwrap();
        assert_abs_diff_eq!(zero, 0.3303, epsilon = 1e-3);
        let multi = quote_at_rt(Side::Ask, V_ASK, D_ASK, 0.25).unwrap();
        let plain = quote_at_rt(Side::Ask, pv.v_lub, d, 0.25).unwrap();
        assert!(multi.l_max < plain.l_max);
    }

    proptest! {
        #[test]
        fn rt_round_trip(r in 1e-6f64..1e3, ask in any::<bool>()) {
            let side = if ask { Side::Ask } else { Side::Bid };
            let (v, d) = if ask { (V_ASK, D_ASK) } else { (V_BID, D_BID) };
            let p = price_from_rt(side, v, d, r).unwrap();
            let back = rt_from_price(side, v, d, p).unwrap().value();
            prop_assert!((back - r).abs() <= 1e-12 * r.max(1.0) * (1.0 + r));
        }

        #[test]
        fn quotes_are_monotone_and_ordered(r0 in 0.0f64..5.0, dr in 1e-6f64..1.0) {
            let a0 = price_from_rt(Side::Ask, V_ASK, D_ASK, r0).unwrap();
            let a1 = price_from_rt(Side::Ask, V_ASK, D_ASK, r0 + dr).unwrap();
            let b0 = price_from_rt(Side::Bid, V_BID, D_BID, r0).unwrap();
            let b1 = price_from_rt(Side::Bid, V_BID, D_BID, r0 + dr).unwrap();
            prop_assert!(a1 > a0 && b1 < b0);
            prop_assert!(a0 - b0 > 0.0);
        }
    }
}
