//! Static no-arbitrage hedging, payoff-distribution analytics and good-deal
//! bid/ask pricing for illiquid credit default swaps.
//!
//! The pipeline runs bottom-up:
//!
//! * [`market`] holds contracts, the quarterly tenor grid and exact pathwise
//!   present values of CDS payoff streams.
//! * [`lattice`] discretizes the non-negativity constraint on the hedged
//!   position into a finite corner-state system `(B, b, c)`.
//! * [`lp`] solves the primal/dual pair with a two-phase simplex and probes
//!   the optimum for uniqueness under cost perturbations.
//! * [`hedging`] orchestrates multi-CDS, vanilla and plain-vanilla hedges and
//!   the spread-difference scaling reduction.
//! * [`measure`] is the physical measure: constant hazard rate and recovery
//!   densities, plus a seeded scenario sampler.
//! * [`valuation`] computes the mean hedged PV, the payoff density with its
//!   survival atom, the Monte Carlo oracle and loss/risk measures.
//! * [`gooddeal`] turns bounds and means into bid/ask quotes under the
//!   expected-return and effective-Sharpe criteria.
//! * [`app`] is the command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod app;
pub mod error;
pub mod gooddeal;
pub mod hedging;
pub mod lattice;
pub mod lp;
pub mod market;
pub mod measure;
pub mod quadrature;
pub mod valuation;

pub use error::{Error, Result};
pub use market::{CdsSpec, DefaultScenario, HedgePortfolio, MarketQuote, Position, Side, TenorGrid};
