//! Corner-state discretization of the hedged-position constraint.
//!
//! Under mid-interval discounting the payoff of any portfolio is affine in
//! `(τ, ρ)` on each rectangle `(T_{i-1}, T_i] × [0, 1]`, so non-negativity on
//! the four corners implies non-negativity on the whole rectangle. One extra
//! row covers survival past `T_N`.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};
use crate::market::{CdsSpec, DefaultScenario, MarketQuote, Side, TenorGrid};

/// Corner states per quarterly interval.
pub const CORNERS: usize = 4;

/// Offset realizing the open left edge `T_{i-1} + 0⁺`.
pub const EPSILON_TAU: f64 = 1e-9;

/// The four corner scenarios of interval `i`, ordered `j = 1..4`.
pub fn corner_states(grid: &TenorGrid, i: usize) -> Result<[DefaultScenario; CORNERS]> {
    if i == 0 || i > grid.len() {
        return invalid(format!("interval index {i} outside 1..={}", grid.len()));
    }
    let left = grid.time(i - 1) + EPSILON_TAU;
    let right = grid.time(i);
    let at = |tau, rho| DefaultScenario::Defaulted { tau, rho };
    Ok([at(left, 0.0), at(right, 0.0), at(left, 1.0), at(right, 1.0)])
}

/// 1-based row index `k = J(i-1) + j`.
pub fn row_index(i: usize, j: usize) -> usize {
    CORNERS * (i - 1) + j
}

/// Inverse of [`row_index`] on `1..=N·J`.
pub fn row_position(k: usize) -> (usize, usize) {
    ((k - 1) / CORNERS + 1, (k - 1) % CORNERS + 1)
}

/// Per-unit PV of `cds` with the default-time discount replaced by its value
/// at the interval midpoint. Premium payments keep exact discounting.
pub fn discretized_pv(grid: &TenorGrid, cds: &CdsSpec, scenario: DefaultScenario) -> f64 {
    let m = cds.maturity_index;
    let premium = |upto: usize| -> f64 {
        (1..=upto.min(m)).map(|k| cds.spread * grid.quarter_length() * grid.discount_at(k)).sum()
    };
    match scenario {
        DefaultScenario::Defaulted { tau, rho } => match grid.interval_of(tau) {
            Some(i) if i <= m => {
                let mid = grid.discount(0.5 * (grid.time(i - 1) + grid.time(i)));
                (1.0 - rho - cds.spread * (tau - grid.time(i - 1))) * mid - premium(i - 1)
            }
            _ => -premium(m),
        },
        DefaultScenario::Survived => -premium(m),
    }
}

/// Discretized annuity `𝒯_M` in a scenario, consistent with
/// [`discretized_pv`]: `discretized_pv(unit, τ, 1) = -w · discretized_annuity`.
pub fn discretized_annuity(grid: &TenorGrid, maturity_index: usize, scenario: DefaultScenario) -> f64 {
    let unit = CdsSpec::unit(maturity_index, 1.0);
    let full_recovery = match scenario {
        DefaultScenario::Defaulted { tau, .. } => DefaultScenario::Defaulted { tau, rho: 1.0 },
        survived => survived,
    };
    -discretized_pv(grid, &unit, full_recovery)
}

/// Every constraint scenario in row order: `N·J` corners, then survival.
pub fn scenarios(grid: &TenorGrid) -> Vec<DefaultScenario> {
    let mut out = Vec::with_capacity(grid.len() * CORNERS + 1);
    for i in 1..=grid.len() {
        out.extend(corner_states(grid, i).expect("index in range"));
    }
    out.push(DefaultScenario::Survived);
    out
}

/// The finite constraint system `(B, b, c)`.
///
/// For [`Side::Ask`] the hedge satisfies `B v ≥ b`, for [`Side::Bid`]
/// `B ṽ ≤ b`. `b` is the PV of a unit long illiquid contract.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSystem {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub cost: DVector<f64>,
    pub side: Side,
    pub n: usize,
    pub k: usize,
}

impl ConstraintSystem {
    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    /// Same matrix and costs with a different right-hand side.
    pub fn with_rhs(&self, rhs: DVector<f64>) -> Result<Self> {
        if rhs.len() != self.rows() {
            return invalid(format!("rhs has {} entries, system has {} rows", rhs.len(), self.rows()));
        }
        Ok(Self { rhs, ..self.clone() })
    }

    /// Same system with a different cost vector.
    pub fn with_cost(&self, cost: DVector<f64>) -> Result<Self> {
        if cost.len() != self.cols() {
            return invalid(format!("cost has {} entries, system has {} columns", cost.len(), self.cols()));
        }
        Ok(Self { cost, ..self.clone() })
    }

    /// Signed slack `σ(Bv - b)`, non-negative when `v` is feasible.
    pub fn slack(&self, v: &DVector<f64>) -> DVector<f64> {
        (&self.matrix * v - &self.rhs) * self.side.sign()
    }
}

/// Builds the corner-state system for a unit illiquid contract hedged with
/// the quoted market contracts.
pub fn build_system(
    grid: &TenorGrid,
    illiquid: &CdsSpec,
    quotes: &[MarketQuote],
    side: Side,
) -> Result<ConstraintSystem> {
    if (illiquid.notional.abs() - 1.0).abs() > 1e-12 {
        return invalid("illiquid contract must have unit notional");
    }
    crate::market::validate_quotes(quotes)?;
    illiquid.validate(grid)?;
    for q in quotes {
        q.contract().validate(grid)?;
    }
    let states = scenarios(grid);
    let k = quotes.len();
    let unit_illiquid = CdsSpec::unit(illiquid.maturity_index, illiquid.spread);
    let matrix = DMatrix::from_fn(states.len(), k + 1, |row, col| {
        if col == k {
            1.0
        } else {
            discretized_pv(grid, &quotes[col].contract(), states[row])
        }
    });
    let rhs = DVector::from_iterator(states.len(), states.iter().map(|&s| discretized_pv(grid, &unit_illiquid, s)));
    let cost = DVector::from_iterator(k + 1, quotes.iter().map(|q| q.upfront).chain([1.0]));
    Ok(ConstraintSystem { matrix, rhs, cost, side, n: grid.len(), k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::pathwise_pv;
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

    #[test]
    fn corner_order() {
        let g = grid();
        let c = corner_states(&g, 1).unwrap();
        let expect = [(EPSILON_TAU, 0.0), (0.25, 0.0), (EPSILON_TAU, 1.0), (0.25, 1.0)];
        for (s, (t, r)) in c.iter().zip(expect) {
            assert_eq!(*s, DefaultScenario::Defaulted { tau: t, rho: r });
        }
        for i in 1..=20 {
            match corner_states(&g, i).unwrap()[2] {
                DefaultScenario::Defaulted { rho, .. } => assert_eq!(rho, 1.0),
                _ => unreachable!(),
            }
        }
        assert!(corner_states(&g, 0).is_err());
        assert!(corner_states(&g, 21).is_err());
    }

    #[test]
    fn row_index_bijection() {
        let mut seen = [false; 80];
        for i in 1..=20 {
            for j in 1..=4 {
                let k = row_index(i, j);
                assert!(!seen[k - 1]);
                seen[k - 1] = true;
                assert_eq!(row_position(k), (i, j));
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn standard_system_shape() {
        let g = grid();
        let s = build_system(&g, &CdsSpec::unit(20, 0.01), &quotes(), Side::Ask).unwrap();
        assert_eq!((s.rows(), s.cols()), (81, 6));
        assert!(s.matrix.column(5).iter().all(|&x| x == 1.0));
        assert_eq!(s.cost.as_slice(), &[0.0525, 0.1247, 0.1808, 0.2156, 0.2405, 1.0]);
        for (p, q) in quotes().iter().enumerate() {
            let survived: f64 = -(1..=q.maturity_index).map(|k| 0.05 * 0.25 * g.discount_at(k)).sum::<f64>();
            assert!((s.matrix[(80, p)] - survived).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_quotes_beyond_grid() {
        let g = TenorGrid::new(0.25, 16, 0.02).unwrap();
        assert!(build_system(&g, &CdsSpec::unit(16, 0.01), &quotes(), Side::Ask).is_err());
    }

    fn row_at(g: &TenorGrid, scenario: DefaultScenario) -> (Vec<f64>, f64) {
        let mut row: Vec<f64> = quotes().iter().map(|q| discretized_pv(g, &q.contract(), scenario)).collect();
        row.push(1.0);
        (row, discretized_pv(g, &CdsSpec::unit(20, 0.01), scenario))
    }

    proptest! {
        #[test]
        fn rectangle_interior_dominated_by_corners(
            v in proptest::collection::vec(-2.0f64..2.0, 6),
            i in 1usize..=20,
            draws in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 50),
        ) {
            let g = grid();
            let value = |s| {
                let (row, b) = row_at(&g, s);
                row.iter().zip(&v).map(|(a, x)| a * x).sum::<f64>() - b
            };
            let corner_min = corner_states(&g, i).unwrap().iter().map(|&s| value(s)).fold(f64::INFINITY, f64::min);
            for (a, rho) in draws {
                let tau = g.time(i - 1) + EPSILON_TAU + a * (0.25 - EPSILON_TAU);
                let inside = value(DefaultScenario::Defaulted { tau, rho });
                prop_assert!(inside >= corner_min - 1e-12);
            }
        }

        #[test]
        fn mid_interval_error_bound(tau in 1e-6f64..5.0, rho in 0.0f64..=1.0, w in 0.0f64..0.1) {
            let g = grid();
            let cds = CdsSpec::unit(20, w);
            let s = DefaultScenario::defaulted(tau, rho).unwrap();
            let i = g.interval_of(tau).unwrap();
            let loss = (1.0 - rho - w * (tau - g.time(i - 1))).abs();
            let err = (pathwise_pv(&g, &cds, s).unwrap() - discretized_pv(&g, &cds, s)).abs();
            prop_assert!(err <= 0.5 * 0.02 * 0.25 * loss + 1e-15);
        }
    }

    #[test]
    fn discretized_annuity_matches_rho_one() {
        let g = grid();
        let w = 0.037;
        for tau in [0.1, 1.0, 2.3, 4.99] {
            let s = DefaultScenario::Defaulted { tau, rho: 1.0 };
            let pv = discretized_pv(&g, &CdsSpec::unit(20, w), s);
            assert!((pv + w * discretized_annuity(&g, 20, s)).abs() < 1e-15);
        }
        let full = discretized_annuity(&g, 20, DefaultScenario::Survived);
        assert!((full - 4.746243688221339).abs() < 1e-12);
    }
}
