//! Run configuration: TOML with one table per concern. Every key has a
//! default taken from the standard parameter set, so an empty file is a
//! valid configuration.
//!
//! ```toml
//! [illiquid]
//! maturity_years = 5.0
//! spread_bp = 100.0
//! notional = 1.0
//!
//! [market]
//! quotes_file = "quotes.csv"    # relative to this file; bundled quotes if absent
//! maturities = [1, 2, 3, 4, 5]  # quote rows to use
//!
//! [grid]
//! quarter_years = 0.25
//! r_f = 0.02
//!
//! [measure]
//! pd1 = 0.30
//! recovery_kind = "truncated_normal"  # or two_point, gamma_a, gamma_b, gamma_c, two_point_a
//! recovery_location = 0.15
//! recovery_scale = 0.16
//!
//! [gooddeal]
//! r_t = 0.25            # or s_r = ... for the Sharpe criterion
//!
//! [run]
//! seed = 20080320
//! mc_samples = 1000000
//! delta_grid = 2001
//! ```

use std::path::Path;

use serde::Deserialize;

use crate::market::{CdsSpec, MarketQuote, TenorGrid};
use crate::measure::{PhysicalMeasure, RecoveryDensitySpec};

/// Quotes bundled with the binary.
pub const BUNDLED_QUOTES: &str = include_str!("../../fixtures/gm_2008_03_20.csv");

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("malformed quote file: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Invalid(String),
}

fn bad<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub illiquid: IlliquidConfig,
    pub market: MarketConfig,
    pub grid: GridConfig,
    pub measure: MeasureConfig,
    pub gooddeal: GoodDealConfig,
    pub run: RunSettings,
    pub bounds: BoundsConfig,
    pub sweep: SweepConfig,
    pub scalecheck: ScaleCheckConfig,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IlliquidConfig {
    pub maturity_years: f64,
    pub spread_bp: f64,
    pub notional: f64,
}

impl Default for IlliquidConfig {
    fn default() -> Self {
        Self { maturity_years: 5.0, spread_bp: 100.0, notional: 1.0 }
    }
}

/// One quote row, as in the quote CSV.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuoteRow {
    pub maturity_years: f64,
    pub upfront_pct: f64,
    pub spread_bp: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarketConfig {
    pub quotes_file: Option<String>,
    pub quotes: Option<Vec<QuoteRow>>,
    /// Maturities (years) to select; all rows when absent.
    pub maturities: Option<Vec<f64>>,
}

impl Default for MarketConfig {
    fn default() -> Self {
        Self { quotes_file: None, quotes: None, maturities: Some(vec![1.0, 2.0, 3.0, 4.0, 5.0]) }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub quarter_years: f64,
    pub r_f: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { quarter_years: 0.25, r_f: 0.02 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasureConfig {
    pub pd1: f64,
    pub recovery_kind: String,
    pub recovery_location: f64,
    pub recovery_scale: f64,
    pub recovery_low: f64,
    pub recovery_high: f64,
    /// Mean of a two-point law; overrides `recovery_weight_low`.
    pub recovery_mean: Option<f64>,
    pub recovery_weight_low: f64,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        Self {
            pd1: 0.30,
            recovery_kind: "truncated_normal".into(),
            recovery_location: 0.15,
            recovery_scale: 0.16,
            recovery_low: 0.0,
            recovery_high: 0.6,
            recovery_mean: None,
            recovery_weight_low: 0.5,
        }
    }
}

/// Named recovery laws usable in `recovery_kind` and sweeps.
pub fn recovery_preset(name: &str) -> Option<RecoveryDensitySpec> {
    match name {
        "gamma_a" => Some(RecoveryDensitySpec::gamma_a()),
        "gamma_b" => Some(RecoveryDensitySpec::gamma_b()),
        "gamma_c" => Some(RecoveryDensitySpec::gamma_c()),
        "two_point_a" => RecoveryDensitySpec::two_point_with_mean(0.0, 0.6, RecoveryDensitySpec::gamma_a().mean()).ok(),
        _ => None,
    }
}

impl MeasureConfig {
    pub fn recovery(&self) -> Result<RecoveryDensitySpec, ConfigError> {
        let spec = match self.recovery_kind.as_str() {
            "truncated_normal" => RecoveryDensitySpec::truncated_normal(self.recovery_location, self.recovery_scale),
            "two_point" => match self.recovery_mean {
                Some(m) => RecoveryDensitySpec::two_point_with_mean(self.recovery_low, self.recovery_high, m),
                None => RecoveryDensitySpec::two_point(self.recovery_low, self.recovery_high, self.recovery_weight_low),
            },
            other => match recovery_preset(other) {
                Some(s) => Ok(s),
                None => return bad(format!("unknown recovery_kind {other:?}")),
            },
        };
        spec.map_err(|e| ConfigError::Invalid(format!("measure: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GoodDealConfig {
    pub r_t: f64,
    /// When set, point quotes use the effective-Sharpe criterion instead.
    pub s_r: Option<f64>,
    pub rt_max: f64,
    pub rt_points: usize,
}

impl Default for GoodDealConfig {
    fn default() -> Self {
        Self { r_t: 0.25, s_r: None, rt_max: 2.0, rt_points: 201 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSettings {
    pub seed: u64,
    pub mc_samples: usize,
    pub delta_grid: usize,
    pub mc_bins: usize,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self { seed: 20080320, mc_samples: 1_000_000, delta_grid: 2001, mc_bins: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsConfig {
    pub w_old_bp_min: f64,
    pub w_old_bp_max: f64,
    pub w_old_bp_step: f64,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self { w_old_bp_min: 25.0, w_old_bp_max: 1000.0, w_old_bp_step: 25.0 }
    }
}

impl BoundsConfig {
    pub fn spreads_bp(&self) -> Result<Vec<f64>, ConfigError> {
        let (lo, hi, step) = (self.w_old_bp_min, self.w_old_bp_max, self.w_old_bp_step);
        if !(lo >= 0.0 && hi >= lo && step > 0.0 && hi.is_finite()) {
            return bad("bounds: need 0 <= w_old_bp_min <= w_old_bp_max and w_old_bp_step > 0");
        }
        let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|k| lo + step * k as f64).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub pd1: Vec<f64>,
    pub recoveries: Vec<String>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            pd1: (0..=8).map(|k| 0.20 + 0.05 * k as f64).collect(),
            recoveries: vec!["gamma_a".into(), "gamma_b".into(), "gamma_c".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScaleCheckConfig {
    /// Spread gaps `W` in basis points.
    pub w_bp: Vec<f64>,
}

impl Default for ScaleCheckConfig {
    fn default() -> Self {
        Self { w_bp: vec![100.0, 200.0, 400.0] }
    }
}

/// A validated configuration turned into library inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Inputs {
    pub config: RunConfig,
    pub grid: TenorGrid,
    pub illiquid: CdsSpec,
    pub quotes: Vec<MarketQuote>,
    pub measure: PhysicalMeasure,
}

impl Inputs {
    /// The market quote maturing with the illiquid contract, if any.
    pub fn matched_quote(&self) -> Option<MarketQuote> {
        self.quotes.iter().copied().find(|q| q.maturity_index == self.illiquid.maturity_index)
    }

    pub fn recovery_by_name(&self, name: &str) -> Result<RecoveryDensitySpec, ConfigError> {
        match recovery_preset(name) {
            Some(s) => Ok(s),
            None if name == "config" => self.config.measure.recovery(),
            None => bad(format!("unknown recovery preset {name:?}")),
        }
    }
}

pub fn parse_quotes(text: &str) -> Result<Vec<QuoteRow>, ConfigError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["maturity_years", "upfront_pct", "spread_bp"] {
        return bad("quote file header must be maturity_years,upfront_pct,spread_bp");
    }
    Ok(reader.deserialize().collect::<Result<Vec<QuoteRow>, _>>()?)
}

fn quarters(years: f64, quarter: f64, what: &str) -> Result<usize, ConfigError> {
    let q = years / quarter;
    let n = q.round();
    if !(years > 0.0) || (q - n).abs() > 1e-9 * q.max(1.0) {
        return bad(format!("{what}: maturity {years} is not a positive whole number of periods"));
    }
    Ok(n as usize)
}

pub fn load(path: &Path) -> Result<Inputs, ConfigError> {
    let text =
        std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    let config: RunConfig = toml::from_str(&text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    resolve(config, base)
}

/// Validates `config`, reading any quote file relative to `base`.
pub fn resolve(config: RunConfig, base: &Path) -> Result<Inputs, ConfigError> {
    let g = &config.grid;
    if !(g.quarter_years > 0.0 && g.quarter_years.is_finite() && g.r_f.is_finite()) {
        return bad("grid: quarter_years must be positive and r_f finite");
    }
    let rows = match (&config.market.quotes, &config.market.quotes_file) {
        (Some(_), Some(_)) => return bad("market: give either quotes or quotes_file, not both"),
        (Some(rows), None) => rows.clone(),
        (None, Some(file)) => {
            let p = base.join(file);
            let text = std::fs::read_to_string(&p)
                .map_err(|source| ConfigError::Io { path: p.display().to_string(), source })?;
            parse_quotes(&text)?
        }
        (None, None) => parse_quotes(BUNDLED_QUOTES)?,
    };
    let selected: Vec<QuoteRow> = match &config.market.maturities {
        None => rows,
        Some(want) => {
            let mut out = Vec::with_capacity(want.len());
            for &m in want {
                match rows.iter().find(|r| (r.maturity_years - m).abs() < 1e-9) {
                    Some(r) => out.push(*r),
                    None => return bad(format!("market: no quote with maturity {m} years")),
                }
            }
            out
        }
    };
    if selected.is_empty() {
        return bad("market: no quotes selected");
    }
    let mut quotes = Vec::with_capacity(selected.len());
    for r in &selected {
        let m = quarters(r.maturity_years, g.quarter_years, "market")?;
        quotes.push(MarketQuote::new(m, r.upfront_pct / 100.0, r.spread_bp * 1e-4));
    }
    crate::market::validate_quotes(&quotes).map_err(|e| ConfigError::Invalid(format!("market: {e}")))?;

    let il = &config.illiquid;
    let m = quarters(il.maturity_years, g.quarter_years, "illiquid")?;
    if !(il.notional > 0.0 && il.notional.is_finite()) {
        return bad("illiquid: notional must be positive");
    }
    let illiquid = CdsSpec::new(m, il.spread_bp * 1e-4, il.notional);

    let maturities: Vec<usize> = quotes.iter().map(|q| q.maturity_index).chain([m]).collect();
    let grid = TenorGrid::covering(g.quarter_years, g.r_f, &maturities)
        .map_err(|e| ConfigError::Invalid(format!("grid: {e}")))?;
    illiquid.validate(&grid).map_err(|e| ConfigError::Invalid(format!("illiquid: {e}")))?;

    let recovery = config.measure.recovery()?;
    let measure = PhysicalMeasure::from_pd1(config.measure.pd1, grid.horizon(), recovery)
        .map_err(|e| ConfigError::Invalid(format!("measure: {e}")))?;

    let r = &config.run;
    if r.mc_samples == 0 || r.delta_grid < 2 || r.mc_bins == 0 {
        return bad("run: mc_samples and mc_bins must be positive and delta_grid at least 2");
    }
    let gd = &config.gooddeal;
    if !(gd.r_t >= 0.0 && gd.r_t.is_finite()) || gd.s_r.is_some_and(|s| !(s >= 0.0 && s.is_finite())) {
        return bad("gooddeal: r_t and s_r must be finite and >= 0");
    }
    if !(gd.rt_max > 0.0 && gd.rt_max.is_finite()) || gd.rt_points < 2 {
        return bad("gooddeal: rt_max must be positive and rt_points at least 2");
    }
    if config.sweep.pd1.iter().any(|p| !(0.0..1.0).contains(p)) {
        return bad("sweep: pd1 values must lie in [0, 1)");
    }
    if config.scalecheck.w_bp.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
        return bad("scalecheck: w_bp values must be positive");
    }
    config.bounds.spreads_bp()?;

    Ok(Inputs { config, grid, illiquid, quotes, measure })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_quotes_match_the_published_row() {
        let rows = parse_quotes(BUNDLED_QUOTES).unwrap();
        let got: Vec<(f64, f64, f64)> = rows.iter().map(|r| (r.maturity_years, r.upfront_pct, r.spread_bp)).collect();
        assert_eq!(
            got,
            vec![
                (1.0, 5.25, 500.0),
                (2.0, 12.47, 500.0),
                (3.0, 18.08, 500.0),
                (4.0, 21.56, 500.0),
                (5.0, 24.05, 500.0),
                (7.0, 27.00, 500.0),
            ]
        );
    }

    #[test]
    fn empty_config_gives_standard_inputs() {
        let cfg: RunConfig = toml::from_str("").unwrap();
        let inputs = resolve(cfg, Path::new(".")).unwrap();
        assert_eq!(inputs.grid.len(), 20);
        assert_eq!(inputs.illiquid, CdsSpec::new(20, 0.01, 1.0));
        let m: Vec<usize> = inputs.quotes.iter().map(|q| q.maturity_index).collect();
        assert_eq!(m, vec![4, 8, 12, 16, 20]);
        assert!((inputs.quotes[4].upfront - 0.2405).abs() < 1e-15);
        assert!((inputs.measure.survival_mass() - 0.16807).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        let parse = |s: &str| {
            toml::from_str::<RunConfig>(s).map_err(ConfigError::from).and_then(|c| resolve(c, Path::new(".")))
        };
        assert!(matches!(parse("[illiquid]\nmaturty_years = 5"), Err(ConfigError::Toml(_))));
        assert!(parse("[illiquid]\nmaturity_years = 5.1").is_err());
        assert!(parse("[market]\nmaturities = [6]").is_err());
        assert!(parse("[measure]\nrecovery_kind = \"beta\"").is_err());
        assert!(parse("[measure]\npd1 = 1.0").is_err());
        assert!(parse("[market]\nquotes_file = \"missing.csv\"").is_err());
        assert!(parse_quotes("a,b,c\n1,2,3\n").is_err());
    }

    #[test]
    fn inline_quotes_and_presets() {
        let text = r#"
            [market]
            maturities = [5]
            quotes = [{ maturity_years = 5, upfront_pct = 24.05, spread_bp = 500 }]
            [measure]
            recovery_kind = "two_point"
            recovery_mean = 0.2
        "#;
        let inputs = resolve(toml::from_str(text).unwrap(), Path::new(".")).unwrap();
        assert_eq!(inputs.quotes.len(), 1);
        assert!((inputs.measure.recovery.mean() - 0.2).abs() < 1e-15);
        assert!(inputs.matched_quote().is_some());
    }

    #[test]
    fn bundled_sample_config_matches_defaults() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("config/standard.toml");
        let loaded = load(&path).unwrap();
        let default = resolve(RunConfig::default(), Path::new(".")).unwrap();
        assert_eq!(loaded.grid, default.grid);
        assert_eq!(loaded.illiquid, default.illiquid);
        assert_eq!(loaded.quotes, default.quotes);
        assert_eq!(loaded.measure, default.measure);
        assert_eq!(loaded.config.run, default.config.run);
        assert_eq!(loaded.config.gooddeal, default.config.gooddeal);
    }
}
