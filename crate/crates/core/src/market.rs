//! Contracts, the quarterly tenor grid and exact pathwise present values.
//!
//! All present values are fractions of unit notional. Discounting is
//! continuous at the flat risk-free rate `r_F`; the accrued premium at default
//! is the plain year fraction since the previous payment date.

use crate::error::{invalid, Result};

/// Tolerance used to snap a default time onto a payment date.
const DATE_SNAP: f64 = 1e-12;

/// Quarterly payment dates `T_1..T_N` with `T_0 = 0` implicit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TenorGrid {
    quarter_length: f64,
    n: usize,
    risk_free_rate: f64,
}

impl TenorGrid {
    pub fn new(quarter_length: f64, n: usize, risk_free_rate: f64) -> Result<Self> {
        if !(quarter_length > 0.0 && quarter_length.is_finite()) {
            return invalid(format!("quarter length must be positive, got {quarter_length}"));
        }
        if n == 0 {
            return invalid("tenor grid needs at least one payment date");
        }
        if !(risk_free_rate >= 0.0 && risk_free_rate.is_finite()) {
            return invalid(format!("risk-free rate must be >= 0, got {risk_free_rate}"));
        }
        Ok(Self { quarter_length, n, risk_free_rate })
    }

    /// Grid long enough for every instrument: `N = max(n(K), M)`.
    pub fn covering<'a>(
        quarter_length: f64,
        risk_free_rate: f64,
        maturities: impl IntoIterator<Item = &'a usize>,
    ) -> Result<Self> {
        let n = maturities.into_iter().copied().max().unwrap_or(0);
        Self::new(quarter_length, n, risk_free_rate)
    }

    pub fn quarter_length(&self) -> f64 {
        self.quarter_length
    }

    pub fn risk_free_rate(&self) -> f64 {
        self.risk_free_rate
    }

    /// Number of payment dates `N`.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `T_i`, for `0 <= i <= N`.
    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.quarter_length
    }

    /// `T_N`.
    pub fn horizon(&self) -> f64 {
        self.time(self.n)
    }

    pub fn payment_times(&self) -> impl Iterator<Item = f64> + '_ {
        (1..=self.n).map(|i| self.time(i))
    }

    pub fn discount(&self, t: f64) -> f64 {
        (-self.risk_free_rate * t).exp()
    }

    /// `d_i = exp(-r_F T_i)`.
    pub fn discount_at(&self, i: usize) -> f64 {
        self.discount(self.time(i))
    }

    /// Index `i` of the interval `(T_{i-1}, T_i]` holding `tau`, or `None` if
    /// `tau > T_N`. A default exactly on a payment date belongs to the
    /// interval that date closes.
    pub fn interval_of(&self, tau: f64) -> Option<usize> {
        debug_assert!(tau > 0.0);
        let x = tau / self.quarter_length;
        let nearest = x.round();
        let i = if (tau - nearest * self.quarter_length).abs() <= DATE_SNAP * tau.max(1.0) {
            nearest as usize
        } else {
            x.ceil() as usize
        };
        let i = i.max(1);
        (i <= self.n).then_some(i)
    }

    /// `sum_{k=1}^{m} (T_k - T_{k-1}) d_k`, the discounted premium year count
    /// of the first `m` payments.
    pub fn premium_annuity(&self, m: usize) -> f64 {
        (1..=m).map(|k| self.quarter_length * self.discount_at(k)).sum()
    }
}

/// A CDS contract: maturity in quarters, running spread per year and a signed
/// notional (`> 0` long protection).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdsSpec {
    pub maturity_index: usize,
    pub spread: f64,
    pub notional: f64,
}

impl CdsSpec {
    pub fn new(maturity_index: usize, spread: f64, notional: f64) -> Self {
        Self { maturity_index, spread, notional }
    }

    /// Unit long-protection contract.
    pub fn unit(maturity_index: usize, spread: f64) -> Self {
        Self::new(maturity_index, spread, 1.0)
    }

    pub fn validate(&self, grid: &TenorGrid) -> Result<()> {
        if self.maturity_index == 0 || self.maturity_index > grid.len() {
            return invalid(format!("maturity index {} outside 1..={}", self.maturity_index, grid.len()));
        }
        if !(self.spread >= 0.0 && self.spread.is_finite()) {
            return invalid(format!("spread must be >= 0, got {}", self.spread));
        }
        if !self.notional.is_finite() {
            return invalid("notional must be finite");
        }
        Ok(())
    }
}

/// A liquid-market quote: upfront price of unit long protection plus the
/// standardized running spread.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketQuote {
    pub maturity_index: usize,
    pub upfront: f64,
    pub spread: f64,
}

impl MarketQuote {
    pub fn new(maturity_index: usize, upfront: f64, spread: f64) -> Self {
        Self { maturity_index, upfront, spread }
    }

    pub fn contract(&self) -> CdsSpec {
        CdsSpec::unit(self.maturity_index, self.spread)
    }
}

/// Checks that a quote set is non-empty and strictly increasing in maturity.
pub fn validate_quotes(quotes: &[MarketQuote]) -> Result<()> {
    if quotes.is_empty() {
        return invalid("quote set is empty");
    }
    for pair in quotes.windows(2) {
        if pair[1].maturity_index <= pair[0].maturity_index {
            return invalid("quote maturities must be strictly increasing");
        }
    }
    for q in quotes {
        if !(q.upfront.is_finite() && q.spread.is_finite() && q.spread >= 0.0) {
            return invalid(format!("bad quote at maturity index {}", q.maturity_index));
        }
    }
    Ok(())
}

/// Realized default path: default at `tau` with recovery `rho`, or survival
/// past every maturity of interest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DefaultScenario {
    Defaulted { tau: f64, rho: f64 },
    Survived,
}

impl DefaultScenario {
    pub fn defaulted(tau: f64, rho: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return invalid(format!("default time must be > 0, got {tau}"));
        }
        if !(0.0..=1.0).contains(&rho) {
            return invalid(format!("recovery must lie in [0, 1], got {rho}"));
        }
        Ok(Self::Defaulted { tau, rho })
    }
}

/// Which illiquid position a hedge protects.
///
/// `Ask` (σ = +): the dealer takes over a short-protection illiquid CDS and
/// buys the least-upper-bound portfolio. `Bid` (σ = −): the dealer takes over a
/// long-protection illiquid CDS and shorts the greatest-lower-bound portfolio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Ask,
    Bid,
}

impl Side {
    /// σ as ±1.
    pub fn sign(self) -> f64 {
        match self {
            Side::Ask => 1.0,
            Side::Bid => -1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Side::Ask => "ask",
            Side::Bid => "bid",
        }
    }
}

/// Market-CDS notionals plus a cash deposit.
///
/// `alphas` and `deposit` are the notionals actually held in the hedged
/// position. For the bid side the LP reports the shorted portfolio
/// `ṽ = -v`; use [`HedgePortfolio::from_lp_vector`] and
/// [`HedgePortfolio::lp_vector`] to move between the two conventions.
#[derive(Debug, Clone, PartialEq)]
pub struct HedgePortfolio {
    pub alphas: Vec<f64>,
    pub deposit: f64,
    pub side: Side,
}

impl HedgePortfolio {
    pub fn new(alphas: Vec<f64>, deposit: f64, side: Side) -> Self {
        Self { alphas, deposit, side }
    }

    /// Builds a portfolio from an LP solution `[α_1..α_K, β]` (or `ṽ` on the
    /// bid side).
    pub fn from_lp_vector(side: Side, v: &[f64]) -> Result<Self> {
        let Some((&beta, alphas)) = v.split_last() else {
            return invalid("LP vector is empty");
        };
        let s = side.sign();
        Ok(Self { alphas: alphas.iter().map(|a| s * a).collect(), deposit: s * beta, side })
    }

    /// The LP-convention vector `[α_1..α_K, β]`, sign-flipped on the bid side.
    pub fn lp_vector(&self) -> Vec<f64> {
        let s = self.side.sign();
        self.alphas.iter().map(|a| s * a).chain(std::iter::once(s * self.deposit)).collect()
    }

    /// `Σ α_p` in LP convention, as tabulated for hedge reports.
    pub fn total_notional(&self) -> f64 {
        self.side.sign() * self.alphas.iter().sum::<f64>()
    }
}

/// A cash deposit plus any number of CDS legs with signed notionals.
///
/// Its realized PV is `Δ(τ,ρ) = β + Σ_l α_l Δ_l(τ,ρ)`. Within one quarterly
/// interval `i` this splits as `Δ(τ,ρ) = Δ(τ,1) + (1-ρ) e^{-r_F τ} A_i` where
/// `A_i` is the net notional of legs still alive in that interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Position {
    pub deposit: f64,
    pub legs: Vec<CdsSpec>,
}

impl Position {
    pub fn deposit_only(deposit: f64) -> Self {
        Self { deposit, legs: Vec::new() }
    }

    /// The dealer's hedged position: a unit illiquid contract of notional
    /// `-σ` plus the hedge portfolio.
    pub fn hedged(illiquid: &CdsSpec, quotes: &[MarketQuote], hedge: &HedgePortfolio) -> Result<Self> {
        if hedge.alphas.len() != quotes.len() {
            return invalid(format!("hedge has {} notionals for {} quotes", hedge.alphas.len(), quotes.len()));
        }
        let mut legs = Vec::with_capacity(quotes.len() + 1);
        legs.push(CdsSpec::new(illiquid.maturity_index, illiquid.spread, -hedge.side.sign()));
        legs.extend(quotes.iter().zip(&hedge.alphas).map(|(q, &a)| CdsSpec::new(q.maturity_index, q.spread, a)));
        Ok(Self { deposit: hedge.deposit, legs })
    }

    /// Last maturity index over all legs (0 for a pure deposit).
    pub fn last_maturity(&self) -> usize {
        self.legs.iter().map(|l| l.maturity_index).max().unwrap_or(0)
    }

    /// Exact realized PV.
    pub fn pv(&self, grid: &TenorGrid, scenario: DefaultScenario) -> f64 {
        self.deposit + self.legs.iter().map(|leg| pathwise_pv_unchecked(grid, leg, scenario)).sum::<f64>()
    }

    /// Net notional `A_i` of legs alive in interval `i`.
    pub fn loss_notional(&self, i: usize) -> f64 {
        self.legs.iter().filter(|l| i <= l.maturity_index).map(|l| l.notional).sum()
    }

    /// Net spread rate `Σ α_l w_l` of legs alive in interval `i`.
    pub fn spread_rate(&self, i: usize) -> f64 {
        self.legs.iter().filter(|l| i <= l.maturity_index).map(|l| l.notional * l.spread).sum()
    }

    /// Premium-leg value `Δ(τ, ρ=1)`; continuous in `τ`.
    pub fn premium_pv(&self, grid: &TenorGrid, tau: f64) -> f64 {
        self.deposit
            - self.legs.iter().map(|l| l.notional * l.spread * annuity_at(grid, l.maturity_index, tau)).sum::<f64>()
    }

    /// Value on survival past every leg's maturity.
    pub fn survived_pv(&self, grid: &TenorGrid) -> f64 {
        self.pv(grid, DefaultScenario::Survived)
    }
}

/// Present value of the spread payment at `T_i`, per unit notional.
pub fn premium_payment(grid: &TenorGrid, cds: &CdsSpec, i: usize) -> Result<f64> {
    if i == 0 || i > grid.len() {
        return invalid(format!("payment index {i} outside 1..={}", grid.len()));
    }
    Ok(premium_unchecked(grid, cds, i))
}

fn premium_unchecked(grid: &TenorGrid, cds: &CdsSpec, i: usize) -> f64 {
    if i > cds.maturity_index {
        return 0.0;
    }
    cds.spread * (grid.time(i) - grid.time(i - 1)) * grid.discount_at(i)
}

/// Loss payment minus accrued spread on default at `tau`, per unit notional,
/// with exact discounting.
pub fn default_payment(grid: &TenorGrid, cds: &CdsSpec, tau: f64, rho: f64) -> Result<f64> {
    DefaultScenario::defaulted(tau, rho)?;
    let Some(i) = grid.interval_of(tau) else {
        return invalid(format!("default time {tau} beyond the grid horizon {}", grid.horizon()));
    };
    Ok(default_unchecked(grid, cds, i, tau, rho, grid.discount(tau)))
}

pub(crate) fn default_unchecked(grid: &TenorGrid, cds: &CdsSpec, i: usize, tau: f64, rho: f64, discount: f64) -> f64 {
    if i > cds.maturity_index {
        return 0.0;
    }
    (1.0 - rho - cds.spread * (tau - grid.time(i - 1))) * discount
}

/// Realized PV of one contract, scaled by its notional.
pub fn pathwise_pv(grid: &TenorGrid, cds: &CdsSpec, scenario: DefaultScenario) -> Result<f64> {
    cds.validate(grid)?;
    if let DefaultScenario::Defaulted { tau, rho } = scenario {
        DefaultScenario::defaulted(tau, rho)?;
    }
    Ok(pathwise_pv_unchecked(grid, cds, scenario))
}

fn pathwise_pv_unchecked(grid: &TenorGrid, cds: &CdsSpec, scenario: DefaultScenario) -> f64 {
    let unit = match scenario {
        DefaultScenario::Defaulted { tau, rho } if tau <= cds_end(grid, cds) => {
            let i = grid.interval_of(tau).unwrap_or(grid.len());
            let paid: f64 = (1..i).map(|k| premium_unchecked(grid, cds, k)).sum();
            default_unchecked(grid, cds, i, tau, rho, grid.discount(tau)) - paid
        }
        _ => -(1..=cds.maturity_index).map(|k| premium_unchecked(grid, cds, k)).sum::<f64>(),
    };
    cds.notional * unit
}

/// Maturity time of a contract, tolerant of payment-date round-off.
fn cds_end(grid: &TenorGrid, cds: &CdsSpec) -> f64 {
    let t = grid.time(cds.maturity_index);
    t + DATE_SNAP * t.max(1.0)
}

/// Realized PV of an illiquid contract hedged with `hedge`:
/// `β + α^Old Δ^Old + Σ_p α_p Δ_p`.
pub fn portfolio_pv(
    grid: &TenorGrid,
    illiquid: &CdsSpec,
    quotes: &[MarketQuote],
    hedge: &HedgePortfolio,
    scenario: DefaultScenario,
) -> Result<f64> {
    if hedge.alphas.len() != quotes.len() {
        return invalid(format!("hedge has {} notionals for {} quotes", hedge.alphas.len(), quotes.len()));
    }
    illiquid.validate(grid)?;
    let mut legs = Vec::with_capacity(quotes.len() + 1);
    legs.push(*illiquid);
    legs.extend(quotes.iter().zip(&hedge.alphas).map(|(q, &a)| CdsSpec::new(q.maturity_index, q.spread, a)));
    for leg in &legs {
        leg.validate(grid)?;
    }
    if let DefaultScenario::Defaulted { tau, rho } = scenario {
        DefaultScenario::defaulted(tau, rho)?;
    }
    Ok(Position { deposit: hedge.deposit, legs }.pv(grid, scenario))
}

/// Discounted accrual year count `𝒯_M(τ)`; `None` means survival, giving
/// `𝒯_{M,0}`.
pub fn annuity(grid: &TenorGrid, maturity_index: usize, tau: Option<f64>) -> Result<f64> {
    if maturity_index > grid.len() {
        return invalid(format!("maturity index {maturity_index} beyond grid N = {}", grid.len()));
    }
    match tau {
        Some(t) if !(t > 0.0) => invalid(format!("default time must be > 0, got {t}")),
        Some(t) => Ok(annuity_at(grid, maturity_index, t)),
        None => Ok(grid.premium_annuity(maturity_index)),
    }
}

pub(crate) fn annuity_at(grid: &TenorGrid, maturity_index: usize, tau: f64) -> f64 {
    if tau > grid.time(maturity_index) + DATE_SNAP * tau.max(1.0) {
        return grid.premium_annuity(maturity_index);
    }
    let i = grid.interval_of(tau).unwrap_or(grid.len()).min(maturity_index.max(1));
    grid.premium_annuity(i - 1) + (tau - grid.time(i - 1)) * grid.discount(tau)
}
