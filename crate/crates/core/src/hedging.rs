//! Hedge construction: multi-CDS and single-CDS LP hedges, the analytic
//! plain-vanilla hedge, and the spread-difference scaling reduction.

use nalgebra::DVector;

use crate::error::{invalid, Error, Result};
use crate::lattice::{build_system, discretized_annuity, scenarios, ConstraintSystem};
use crate::lp::{solve_bound, solve_lub, LpSolution};
use crate::market::{annuity, CdsSpec, HedgePortfolio, MarketQuote, Side, TenorGrid};

/// Arbitrage-free price bounds and the hedges that enforce them.
#[derive(Debug, Clone, PartialEq)]
pub struct NoArbBounds {
    pub v_lub: f64,
    pub v_glb: f64,
    pub hedge_lub: HedgePortfolio,
    pub hedge_glb: HedgePortfolio,
}

impl NoArbBounds {
    pub fn value(&self, side: Side) -> f64 {
        match side {
            Side::Ask => self.v_lub,
            Side::Bid => self.v_glb,
        }
    }

    pub fn hedge(&self, side: Side) -> &HedgePortfolio {
        match side {
            Side::Ask => &self.hedge_lub,
            Side::Bid => &self.hedge_glb,
        }
    }
}

/// One side of a bound computation, kept for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SideSolve {
    pub system: ConstraintSystem,
    pub solution: LpSolution,
}

/// Builds and solves the LP for one side; non-optimal statuses become errors.
pub fn solve_side(grid: &TenorGrid, illiquid: &CdsSpec, quotes: &[MarketQuote], side: Side) -> Result<SideSolve> {
    let system = build_system(grid, &CdsSpec::unit(illiquid.maturity_index, illiquid.spread), quotes, side)?;
    let solution = solve_bound(&system).require_optimal()?;
    Ok(SideSolve { system, solution })
}

fn bounds_from(ask: &SideSolve, bid: &SideSolve) -> Result<NoArbBounds> {
    Ok(NoArbBounds {
        v_lub: ask.solution.objective,
        v_glb: bid.solution.objective,
        hedge_lub: HedgePortfolio::from_lp_vector(Side::Ask, ask.solution.variables.as_slice())?,
        hedge_glb: HedgePortfolio::from_lp_vector(Side::Bid, bid.solution.variables.as_slice())?,
    })
}

/// Both LP bounds using every quoted contract.
pub fn multi_cds_bounds(grid: &TenorGrid, illiquid: &CdsSpec, quotes: &[MarketQuote]) -> Result<NoArbBounds> {
    let ask = solve_side(grid, illiquid, quotes, Side::Ask)?;
    let bid = solve_side(grid, illiquid, quotes, Side::Bid)?;
    bounds_from(&ask, &bid)
}

fn require_same_maturity(illiquid: &CdsSpec, quote: &MarketQuote) -> Result<()> {
    if quote.maturity_index != illiquid.maturity_index {
        return invalid(format!(
            "quote maturity index {} differs from illiquid maturity index {}",
            quote.maturity_index, illiquid.maturity_index
        ));
    }
    Ok(())
}

/// LP bounds hedging with the single market contract of the same maturity.
pub fn vanilla_bounds(grid: &TenorGrid, illiquid: &CdsSpec, quote: &MarketQuote) -> Result<NoArbBounds> {
    require_same_maturity(illiquid, quote)?;
    multi_cds_bounds(grid, illiquid, std::slice::from_ref(quote))
}

/// Closed-form bounds with a unit offsetting market contract plus the
/// smallest deposit that keeps every exact payoff non-negative.
pub fn plain_vanilla_bounds(grid: &TenorGrid, illiquid: &CdsSpec, quote: &MarketQuote) -> Result<NoArbBounds> {
    require_same_maturity(illiquid, quote)?;
    illiquid.validate(grid)?;
    let (w_diff, mu) = spread_gap(quote.spread, illiquid.spread);
    let full = annuity(grid, illiquid.maturity_index, None)?;
    let beta_prime = |sigma_mu: f64| if sigma_mu > 0.0 { full } else { 0.0 };
    let make = |side: Side| {
        let s = side.sign();
        let deposit = w_diff * beta_prime(s * mu);
        let value = s * w_diff * beta_prime(s * mu) + quote.upfront;
        (value, HedgePortfolio::new(vec![s], deposit, side))
    };
    let (v_lub, hedge_lub) = make(Side::Ask);
    let (v_glb, hedge_glb) = make(Side::Bid);
    Ok(NoArbBounds { v_lub, v_glb, hedge_lub, hedge_glb })
}

/// `W = |w_pM - w_old|` and `μ = sign(w_pM - w_old)`, with `μ = +1` at
/// `W = 0`.
pub fn spread_gap(market_spread: f64, illiquid_spread: f64) -> (f64, f64) {
    let d = market_spread - illiquid_spread;
    (d.abs(), if d >= 0.0 { 1.0 } else { -1.0 })
}

/// Solution of the `W`-free reduced problem
/// `min c'v' s.t. B v' >= σμ 𝒯`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledSolution {
    pub v_prime: DVector<f64>,
    pub side: Side,
    pub sigma_mu: f64,
    pub w_diff: f64,
    pub mu: f64,
    /// Position of the same-maturity contract in the quote set.
    pub matched: usize,
    pub matched_upfront: f64,
    /// `c' v'`.
    pub reduced_value: f64,
}

impl ScaledSolution {
    /// `V(W) = σ W c'v' + u_pM`.
    pub fn price(&self, w_diff: f64) -> f64 {
        self.side.sign() * w_diff * self.reduced_value + self.matched_upfront
    }

    /// `dV/dw_old = -σμ c'v'`, a function of σμ alone.
    pub fn slope_in_illiquid_spread(&self) -> f64 {
        -self.sigma_mu * self.reduced_value
    }

    /// Full hedge at spread gap `W`: LP vector `e_pM + σ W v'`.
    pub fn hedge(&self, w_diff: f64) -> Result<HedgePortfolio> {
        let s = self.side.sign();
        let mut v = &self.v_prime * (s * w_diff);
        v[self.matched] += 1.0;
        HedgePortfolio::from_lp_vector(self.side, v.as_slice())
    }
}

/// Solves the reduced problem for the given side.
pub fn reduce_to_scaled(
    grid: &TenorGrid,
    illiquid: &CdsSpec,
    quotes: &[MarketQuote],
    side: Side,
) -> Result<ScaledSolution> {
    let Some(matched) = quotes.iter().position(|q| q.maturity_index == illiquid.maturity_index) else {
        return Err(Error::Unsupported(format!(
            "no market quote matures at the illiquid maturity index {}",
            illiquid.maturity_index
        )));
    };
    let quote = quotes[matched];
    let (w_diff, mu) = spread_gap(quote.spread, illiquid.spread);
    let sigma_mu = side.sign() * mu;
    let base = build_system(grid, &CdsSpec::unit(illiquid.maturity_index, illiquid.spread), quotes, Side::Ask)?;
    let rhs = DVector::from_iterator(
        base.rows(),
        scenarios(grid).into_iter().map(|s| sigma_mu * discretized_annuity(grid, illiquid.maturity_index, s)),
    );
    let solution = solve_lub(&base.with_rhs(rhs)?)?.require_optimal()?;
    Ok(ScaledSolution {
        reduced_value: solution.objective,
        v_prime: solution.variables,
        side,
        sigma_mu,
        w_diff,
        mu,
        matched,
        matched_upfront: quote.upfront,
    })
}

/// One row of the bound-versus-illiquid-spread table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpreadSweepRow {
    pub illiquid_spread: f64,
    pub v_lub: f64,
    pub v_glb: f64,
    pub vanilla_lub: f64,
    pub vanilla_glb: f64,
    pub plain_lub: f64,
    pub plain_glb: f64,
}

/// Multi-CDS, vanilla and plain-vanilla bounds across illiquid spreads.
/// Vanilla columns are NaN when no quote shares the illiquid maturity.
pub fn spread_sweep(
    grid: &TenorGrid,
    maturity_index: usize,
    quotes: &[MarketQuote],
    spreads: &[f64],
) -> Result<Vec<SpreadSweepRow>> {
    let matched = quotes.iter().find(|q| q.maturity_index == maturity_index);
    spreads
        .iter()
        .map(|&w| {
            let ill = CdsSpec::unit(maturity_index, w);
            let multi = multi_cds_bounds(grid, &ill, quotes)?;
            let (vanilla, plain) = match matched {
                Some(q) => {
                    let v = vanilla_bounds(grid, &ill, q)?;
                    let p = plain_vanilla_bounds(grid, &ill, q)?;
                    ((v.v_lub, v.v_glb), (p.v_lub, p.v_glb))
                }
                None => ((f64::NAN, f64::NAN), (f64::NAN, f64::NAN)),
            };
            Ok(SpreadSweepRow {
                illiquid_spread: w,
                v_lub: multi.v_lub,
                v_glb: multi.v_glb,
                vanilla_lub: vanilla.0,
                vanilla_glb: vanilla.1,
                plain_lub: plain.0,
                plain_glb: plain.1,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{DefaultScenario, Position};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn grid() -> TenorGrid {
        TenorGrid::new(0.25, 20, 0.02).unwrap()
    }

    fn quotes() -> Vec<MarketQuote> {
        [(4, 0.0525), (8, 0.1247), (12, 0.1808), (16, 0.2156), (20, 0.2405)]
            .iter()
            .map(|&(m, u)| MarketQuote::new(m, u, 0.05))
            .collect()
    }

    const T0: f64 = 4.746243688221339;

    #[test]
    fn table_three_totals() {
        let b = multi_cds_bounds(&grid(), &CdsSpec::unit(20, 0.01), &quotes()).unwrap();
        assert_abs_diff_eq!(b.hedge_lub.total_notional(), 0.8576, epsilon = 2e-3);
        assert_abs_diff_eq!(b.hedge_glb.total_notional(), 1.0, epsilon = 2e-3);
        assert_abs_diff_eq!(b.hedge_glb.deposit, 0.0, epsilon = 1e-9);
        assert!(b.v_glb <= b.v_lub + 1e-9);
        // Dot product of the tabulated ask row with the upfronts.
        let table = [-0.0319, -0.0342, -0.0368, -0.0395, 1.0];
        let dot: f64 = table.iter().zip(quotes()).map(|(a, q)| a * q.upfront).sum::<f64>() + 0.1720;
        assert_abs_diff_eq!(b.v_lub, dot, epsilon = 5e-4);
    }

    #[test]
    fn bounds_coincide_at_market_spread() {
        let b = multi_cds_bounds(&grid(), &CdsSpec::unit(20, 0.05), &quotes()).unwrap();
        assert_abs_diff_eq!(b.v_lub, 0.2405, epsilon = 1e-10);
        assert_abs_diff_eq!(b.v_glb, 0.2405, epsilon = 1e-10);
    }

    #[test]
    fn vanilla_and_plain_vanilla() {
        let g = grid();
        let ill = CdsSpec::unit(20, 0.01);
        let q = quotes()[4];
        let v = vanilla_bounds(&g, &ill, &q).unwrap();
        assert_abs_diff_eq!(v.hedge_lub.alphas[0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(v.hedge_glb.alphas[0], -1.0, epsilon = 1e-9);
        let p = plain_vanilla_bounds(&g, &ill, &q).unwrap();
        assert_abs_diff_eq!(p.v_lub, 0.2405 + 0.04 * T0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.v_lub, 0.43035, epsilon = 5e-6);
        assert_abs_diff_eq!(p.v_glb, 0.2405, epsilon = 1e-15);
        // The LP sees the last accrual discounted at mid-interval.
        let mid_gap = 0.04 * 0.25 * (g.discount(4.875) - g.discount(5.0));
        assert_abs_diff_eq!(v.v_lub, p.v_lub, epsilon = mid_gap + 1e-12);
        assert_abs_diff_eq!(v.v_glb, p.v_glb, epsilon = 1e-9);
        let m = multi_cds_bounds(&g, &ill, &quotes()).unwrap();
        assert!(v.v_glb <= m.v_glb && m.v_lub <= v.v_lub);
        assert!(p.v_glb <= m.v_glb && m.v_glb <= m.v_lub && m.v_lub <= p.v_lub);
        assert!(vanilla_bounds(&g, &ill, &quotes()[3]).is_err());
    }

    #[test]
    fn plain_vanilla_four_cases() {
        let g = grid();
        let q = MarketQuote::new(20, 0.2405, 0.05);
        let above = plain_vanilla_bounds(&g, &CdsSpec::unit(20, 0.09), &q).unwrap();
        assert_abs_diff_eq!(above.v_lub, 0.2405, epsilon = 1e-15);
        assert_abs_diff_eq!(above.v_glb, 0.2405 - 0.04 * T0, epsilon = 1e-12);
        assert_abs_diff_eq!(above.v_glb, 0.05065, epsilon = 5e-6);
        let equal = plain_vanilla_bounds(&g, &CdsSpec::unit(20, 0.05), &q).unwrap();
        assert_eq!((equal.v_lub, equal.v_glb), (0.2405, 0.2405));
        // Survived PV of the bid hedge is W·𝒯_{M,0}.
        let below = plain_vanilla_bounds(&g, &CdsSpec::unit(20, 0.01), &q).unwrap();
        let pos = Position::hedged(&CdsSpec::unit(20, 0.01), &[q], &below.hedge_glb).unwrap();
        assert_abs_diff_eq!(pos.pv(&g, DefaultScenario::Survived), 0.04 * T0, epsilon = 1e-12);
        assert_abs_diff_eq!(0.04 * T0, 0.18985, epsilon = 1e-5);
    }

    #[test]
    fn multi_cds_bid_survival_value() {
        let g = grid();
        let ill = CdsSpec::unit(20, 0.01);
        let b = multi_cds_bounds(&g, &ill, &quotes()).unwrap();
        let pos = Position::hedged(&ill, &quotes(), &b.hedge_glb).unwrap();
        assert_abs_diff_eq!(pos.pv(&g, DefaultScenario::Survived), 0.210, epsilon = 5e-4);
    }

    #[test]
    fn reduction_reconstructs_full_bounds() {
        let g = grid();
        let ill = CdsSpec::unit(20, 0.01);
        let full = multi_cds_bounds(&g, &ill, &quotes()).unwrap();
        for side in [Side::Ask, Side::Bid] {
            let s = reduce_to_scaled(&g, &ill, &quotes(), side).unwrap();
            assert_abs_diff_eq!(s.price(s.w_diff), full.value(side), epsilon = 1e-8);
            let h = s.hedge(s.w_diff).unwrap();
            for (a, b) in h.lp_vector().iter().zip(full.hedge(side).lp_vector()) {
                assert_abs_diff_eq!(*a, b, epsilon = 1e-8);
            }
        }
        let short = [quotes()[0]];
        assert!(matches!(reduce_to_scaled(&g, &ill, &short, Side::Ask), Err(Error::Unsupported(_))));
    }

    #[test]
    fn reduced_portfolio_is_independent_of_gap() {
        let g = grid();
        for side in [Side::Ask, Side::Bid] {
            let extract = |w_old: f64| {
                let ill = CdsSpec::unit(20, w_old);
                let b = multi_cds_bounds(&g, &ill, &quotes()).unwrap();
                let (w_diff, _) = spread_gap(0.05, w_old);
                let mut v = DVector::from_vec(b.hedge(side).lp_vector());
                v[4] -= 1.0;
                v / (side.sign() * w_diff)
            };
            let (a, b) = (extract(0.03), extract(0.01));
            assert!((a - b).amax() < 1e-8);
        }
    }

    #[test]
    fn slope_depends_only_on_sigma_mu() {
        let g = grid();
        let diff = |w0: f64, w1: f64, side| {
            let at = |w| multi_cds_bounds(&g, &CdsSpec::unit(20, w), &quotes()).unwrap().value(side);
            (at(w1) - at(w0)) / (w1 - w0)
        };
        let below: Vec<f64> = (1..9).map(|k| k as f64 * 0.005).collect();
        let above: Vec<f64> = (11..18).map(|k| k as f64 * 0.005).collect();
        for side in [Side::Ask, Side::Bid] {
            let s_below = diff(below[0], below[7], side);
            let s_above = diff(above[0], above[6], side);
            for w in below.windows(2) {
                assert_abs_diff_eq!(diff(w[0], w[1], side), s_below, epsilon = 1e-8);
            }
            for w in above.windows(2) {
                assert_abs_diff_eq!(diff(w[0], w[1], side), s_above, epsilon = 1e-8);
            }
        }
        // Ask below the market spread pairs with bid above it (σμ = +).
        assert_abs_diff_eq!(diff(0.01, 0.02, Side::Ask), diff(0.07, 0.08, Side::Bid), epsilon = 1e-8);
        assert_abs_diff_eq!(diff(0.01, 0.02, Side::Bid), diff(0.07, 0.08, Side::Ask), epsilon = 1e-8);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn hedges_are_nonnegative_up_to_discretization(
            w_bp in 20.0f64..900.0,
            draws in proptest::collection::vec((1e-6f64..5.0, 0.0f64..=1.0), 600),
        ) {
            let g = grid();
            let ill = CdsSpec::unit(20, w_bp * 1e-4);
            let b = multi_cds_bounds(&g, &ill, &quotes()).unwrap();
            for side in [Side::Ask, Side::Bid] {
                let pos = Position::hedged(&ill, &quotes(), b.hedge(side)).unwrap();
                for &(tau, rho) in &draws {
                    let v = pos.pv(&g, DefaultScenario::Defaulted { tau, rho });
                    prop_assert!(v >= -0.5 * 0.02 * 0.25, "{v} at ({tau}, {rho})");
                }
                prop_assert!(pos.pv(&g, DefaultScenario::Survived) >= -1e-9);
            }
        }
    }
}
