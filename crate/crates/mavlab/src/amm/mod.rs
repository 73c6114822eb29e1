//! Pool state, spot-price decoding, swap execution, and price-impact math
//! for constant-product (CPMM) and concentrated-liquidity (CLMM) pools.
//!
//! All prices are quoted as quote-token per base-token (e.g. USDC per
//! WETH). Trade directions are explicit enum values, never sign
//! conventions. Pool values are immutable; a swap returns a new pool.

mod clmm;
mod cpmm;
mod sqrt_price;

pub use clmm::{
    price_to_tick, tick_price, tick_sqrt_price, ClmmPool, ClmmSwap, SwapAmount, TickRange,
    MAX_TICK, MIN_TICK,
};
pub use cpmm::{CpmmPool, SwapOutcome};
pub use sqrt_price::{decode_spot_price, decode_sqrt_price, DecodedPrice};

use serde::{Deserialize, Serialize};

use crate::{MavError, Result};

/// Token metadata needed for decimal adjustment and venue labeling.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenMeta {
    pub symbol: String,
    pub decimals: u8,
    /// `true` for bridged variants (e.g. USDC.e), `false` for native.
    #[serde(default)]
    pub bridged: bool,
}

impl TokenMeta {
    pub fn new(symbol: impl Into<String>, decimals: u8, bridged: bool) -> Result<Self> {
        if decimals > 30 {
            return Err(MavError::InvalidInput(format!(
                "token decimals {decimals} exceed 30"
            )));
        }
        Ok(Self {
            symbol: symbol.into(),
            decimals,
            bridged,
        })
    }
}

/// Fee context for a venue pair: AMM LP fee `f`, CEX taker fee `g`, and a
/// flat gas cost in quote-token units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeeParams {
    /// LP fee fraction, in [0, 1). Typical tiers are 1 to 50 bps.
    pub lp_fee: f64,
    /// CEX fee fraction, in [0, 1).
    pub cex_fee: f64,
    /// Gas cost of one arbitrage execution, in quote-token units.
    pub gas_fee: f64,
}

impl FeeParams {
    pub fn new(lp_fee: f64, cex_fee: f64, gas_fee: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&lp_fee) || !lp_fee.is_finite() {
            return Err(MavError::InvalidInput(format!(
                "lp_fee {lp_fee} must be in [0, 1)"
            )));
        }
        if !(0.0..1.0).contains(&cex_fee) || !cex_fee.is_finite() {
            return Err(MavError::InvalidInput(format!(
                "cex_fee {cex_fee} must be in [0, 1)"
            )));
        }
        if gas_fee < 0.0 || !gas_fee.is_finite() {
            return Err(MavError::InvalidInput(format!(
                "gas_fee {gas_fee} must be nonnegative"
            )));
        }
        Ok(Self {
            lp_fee,
            cex_fee,
            gas_fee,
        })
    }

    /// Fee-free parameters.
    pub fn zero() -> Self {
        Self {
            lp_fee: 0.0,
            cex_fee: 0.0,
            gas_fee: 0.0,
        }
    }

    /// The no-arbitrage wedge factor `(1 - f)(1 - g)`.
    pub fn wedge(&self) -> f64 {
        (1.0 - self.lp_fee) * (1.0 - self.cex_fee)
    }
}

/// A decoded per-block spot observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpotQuote {
    /// Quote-token per base-token, decimal-adjusted.
    pub price: f64,
    pub block_number: u64,
    pub timestamp_sec: i64,
}

/// Direction of a swap relative to the pool's base-token reserve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SwapDirection {
    /// Trader takes base out of the pool; the pool price rises.
    ExtractBase,
    /// Trader puts base into the pool; the pool price falls.
    DepositBase,
}

/// How the LP fee applies to a swap.
///
/// Under `Exclusive` the fee is charged on the trader's output leg and
/// held outside the reserves, so the reserve product is conserved
/// exactly. `None` ignores fees (used by fee-free derivations).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeeApplication {
    Exclusive,
    None,
}

/// A per-block pool snapshot as consumed by the episode pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PoolSnapshot {
    Cpmm(CpmmPool),
    Clmm(ClmmPool),
}

impl PoolSnapshot {
    pub fn spot_price(&self) -> f64 {
        match self {
            PoolSnapshot::Cpmm(p) => p.spot_price(),
            PoolSnapshot::Clmm(p) => p.spot_price(),
        }
    }

    /// Liquidity depth at the current price: `sqrt(x * y)` for a CPMM,
    /// the active range's liquidity for a CLMM.
    pub fn current_liquidity(&self) -> f64 {
        match self {
            PoolSnapshot::Cpmm(p) => (p.reserve_x() * p.reserve_y()).sqrt(),
            PoolSnapshot::Clmm(p) => p.current_liquidity(),
        }
    }

    pub fn fee(&self) -> &FeeParams {
        match self {
            PoolSnapshot::Cpmm(p) => p.fee(),
            PoolSnapshot::Clmm(p) => p.fee(),
        }
    }
}
