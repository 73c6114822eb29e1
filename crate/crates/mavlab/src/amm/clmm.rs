//! Concentrated-liquidity pool math.
//!
//! Liquidity lives in tick-bounded ranges. Within one range the pool
//! behaves exactly like a constant-product pool on the virtual reserves
//! `(L/s, L*s)` where `s` is the square root of the price, so swaps walk
//! range by range: trade within the active range until its boundary, then
//! cross into the next initialized range.
//!
//! All prices here are decimal-adjusted (quote per base) and all internal
//! movement happens in square-root-price space, where range capacities
//! are linear in `s`: extracting base moves `s` up by `dy = L * ds`,
//! depositing base moves it down.

use serde::{Deserialize, Serialize};

use super::{FeeApplication, FeeParams, SwapDirection, TokenMeta};
use crate::{MavError, Result};

/// Tick indices supported by the price grid `p(i) = 1.0001^i`.
pub const MIN_TICK: i32 = -887_272;
pub const MAX_TICK: i32 = 887_272;

/// Price at tick `i`: `1.0001^i`.
pub fn tick_price(i: i32) -> f64 {
    1.0001f64.powi(i)
}

/// Square root of the price at tick `i`.
pub fn tick_sqrt_price(i: i32) -> f64 {
    tick_price(i).sqrt()
}

/// Tick index whose bounds contain `price`: largest `i` with
/// `1.0001^i <= price`.
pub fn price_to_tick(price: f64) -> i32 {
    let i = (price.ln() / 1.0001f64.ln()).floor() as i32;
    // Float log can land one off right at a boundary; nudge into place.
    if tick_price(i + 1) <= price {
        i + 1
    } else if tick_price(i) > price {
        i - 1
    } else {
        i
    }
}

/// One liquidity range `[p(lower_tick), p(upper_tick))` with constant
/// in-range liquidity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TickRange {
    pub lower_tick: i32,
    pub upper_tick: i32,
    pub liquidity: f64,
}

impl TickRange {
    pub fn new(lower_tick: i32, upper_tick: i32, liquidity: f64) -> Result<Self> {
        if lower_tick >= upper_tick {
            return Err(MavError::InvalidInput(format!(
                "tick range [{lower_tick}, {upper_tick}) is empty"
            )));
        }
        if !(MIN_TICK..=MAX_TICK).contains(&lower_tick)
            || !(MIN_TICK..=MAX_TICK).contains(&upper_tick)
        {
            return Err(MavError::InvalidInput(format!(
                "tick range [{lower_tick}, {upper_tick}) outside supported grid"
            )));
        }
        if !liquidity.is_finite() || liquidity < 0.0 {
            return Err(MavError::InvalidInput(format!(
                "range liquidity {liquidity} must be nonnegative and finite"
            )));
        }
        Ok(Self {
            lower_tick,
            upper_tick,
            liquidity,
        })
    }

    pub fn sqrt_lower(&self) -> f64 {
        tick_sqrt_price(self.lower_tick)
    }

    pub fn sqrt_upper(&self) -> f64 {
        tick_sqrt_price(self.upper_tick)
    }
}

/// A concentrated-liquidity pool: ordered liquidity ranges plus the
/// current square-root price.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClmmPool {
    ranges: Vec<TickRange>,
    sqrt_price: f64,
    current_tick: i32,
    fee: FeeParams,
    token_x: TokenMeta,
    token_y: TokenMeta,
}

/// Result of executing a swap against a [`ClmmPool`].
#[derive(Debug, Clone, PartialEq)]
pub struct ClmmSwap {
    /// Gross base-token leg (out of the pool for `ExtractBase`, into it
    /// for `DepositBase`).
    pub base_amount: f64,
    /// Gross quote-token leg (into the pool for `ExtractBase`, out of it
    /// for `DepositBase`).
    pub quote_amount: f64,
    /// LP fee withheld from the trader's output leg.
    pub lp_fee: f64,
    /// Number of range boundaries crossed.
    pub ranges_crossed: usize,
    /// Post-trade pool state.
    pub pool: ClmmPool,
}

/// Amount parameterization for a CLMM swap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SwapAmount {
    Base(f64),
    Quote(f64),
}

impl ClmmPool {
    pub fn new(
        ranges: Vec<TickRange>,
        sqrt_price: f64,
        fee: FeeParams,
        token_x: TokenMeta,
        token_y: TokenMeta,
    ) -> Result<Self> {
        if ranges.is_empty() {
            return Err(MavError::InvalidInput("pool has no liquidity ranges".into()));
        }
        for pair in ranges.windows(2) {
            if pair[1].lower_tick < pair[0].upper_tick {
                return Err(MavError::InvalidInput(format!(
                    "ranges overlap or are unsorted at tick {}",
                    pair[1].lower_tick
                )));
            }
        }
        if !sqrt_price.is_finite() || sqrt_price <= 0.0 {
            return Err(MavError::InvalidPrice(format!(
                "sqrt price {sqrt_price} must be positive"
            )));
        }
        let lo = ranges.first().unwrap().sqrt_lower();
        let hi = ranges.last().unwrap().sqrt_upper();
        if sqrt_price < lo || sqrt_price > hi {
            return Err(MavError::InvalidInput(format!(
                "sqrt price {sqrt_price} outside pool span [{lo}, {hi}]"
            )));
        }
        let current_tick = price_to_tick(sqrt_price * sqrt_price);
        Ok(Self {
            ranges,
            sqrt_price,
            current_tick,
            fee,
            token_x,
            token_y,
        })
    }

    /// Builds a pool from a liquidity-per-initialized-tick map, as
    /// reconstructed from event logs: each entry `(tick, liquidity)`
    /// opens a range that extends to the next entry, the last one to
    /// `end_tick`.
    pub fn from_tick_liquidity(
        ticks: &[(i32, f64)],
        end_tick: i32,
        sqrt_price: f64,
        fee: FeeParams,
        token_x: TokenMeta,
        token_y: TokenMeta,
    ) -> Result<Self> {
        if ticks.is_empty() {
            return Err(MavError::InvalidInput("empty tick liquidity map".into()));
        }
        let mut ranges = Vec::with_capacity(ticks.len());
        for (i, &(lower, liquidity)) in ticks.iter().enumerate() {
            let upper = if i + 1 < ticks.len() {
                ticks[i + 1].0
            } else {
                end_tick
            };
            ranges.push(TickRange::new(lower, upper, liquidity)?);
        }
        Self::new(ranges, sqrt_price, fee, token_x, token_y)
    }

    /// A synthetic pool with unnamed 18-decimal tokens.
    pub fn synthetic(ranges: Vec<TickRange>, sqrt_price: f64, fee: FeeParams) -> Result<Self> {
        Self::new(
            ranges,
            sqrt_price,
            fee,
            TokenMeta::new("BASE", 18, false)?,
            TokenMeta::new("QUOTE", 18, false)?,
        )
    }

    pub fn ranges(&self) -> &[TickRange] {
        &self.ranges
    }

    pub fn sqrt_price(&self) -> f64 {
        self.sqrt_price
    }

    pub fn current_tick(&self) -> i32 {
        self.current_tick
    }

    pub fn fee(&self) -> &FeeParams {
        &self.fee
    }

    pub fn token_x(&self) -> &TokenMeta {
        &self.token_x
    }

    pub fn token_y(&self) -> &TokenMeta {
        &self.token_y
    }

    /// Spot price, quote per base.
    pub fn spot_price(&self) -> f64 {
        self.sqrt_price * self.sqrt_price
    }

    /// Liquidity of the range containing the current price, zero if the
    /// price sits in a gap between initialized ranges.
    pub fn current_liquidity(&self) -> f64 {
        self.locate_range()
            .map(|i| self.ranges[i].liquidity)
            .unwrap_or(0.0)
    }

    /// Virtual constant-product reserves `(L/s, L*s)` of the active
    /// range, if the current price sits inside one.
    pub fn virtual_reserves(&self) -> Option<(f64, f64)> {
        self.locate_range().map(|i| {
            let l = self.ranges[i].liquidity;
            (l / self.sqrt_price, l * self.sqrt_price)
        })
    }

    /// Index of the range containing the current sqrt price. A price
    /// sitting exactly on a shared boundary belongs to the upper range.
    fn locate_range(&self) -> Option<usize> {
        let s = self.sqrt_price;
        let mut containing = None;
        for (i, r) in self.ranges.iter().enumerate() {
            if s >= r.sqrt_lower() && s < r.sqrt_upper() {
                containing = Some(i);
                break;
            }
        }
        // The very top of the last range still counts as inside.
        if containing.is_none() && s == self.ranges.last().unwrap().sqrt_upper() {
            containing = Some(self.ranges.len() - 1);
        }
        containing
    }

    /// First range index at or above the current price when walking up,
    /// at or below when walking down.
    fn entry_range(&self, direction: SwapDirection) -> Option<usize> {
        if let Some(i) = self.locate_range() {
            return Some(i);
        }
        let s = self.sqrt_price;
        match direction {
            SwapDirection::ExtractBase => self.ranges.iter().position(|r| r.sqrt_lower() >= s),
            SwapDirection::DepositBase => self
                .ranges
                .iter()
                .rposition(|r| r.sqrt_upper() <= s),
        }
    }

    /// Executes a swap, walking tick ranges as needed.
    ///
    /// Fails with [`MavError::PartialFill`] carrying the filled portion
    /// when liquidity runs out before the requested amount completes.
    pub fn swap(
        &self,
        amount: SwapAmount,
        direction: SwapDirection,
        fee: FeeApplication,
    ) -> Result<ClmmSwap> {
        let requested = match amount {
            SwapAmount::Base(v) | SwapAmount::Quote(v) => v,
        };
        if !requested.is_finite() || requested < 0.0 {
            return Err(MavError::InvalidInput(format!(
                "swap amount {requested} must be nonnegative and finite"
            )));
        }
        let f = match fee {
            FeeApplication::Exclusive => self.fee.lp_fee,
            FeeApplication::None => 0.0,
        };
        if requested == 0.0 {
            return Ok(ClmmSwap {
                base_amount: 0.0,
                quote_amount: 0.0,
                lp_fee: 0.0,
                ranges_crossed: 0,
                pool: self.clone(),
            });
        }

        let mut remaining = requested;
        let mut base_total = 0.0;
        let mut quote_total = 0.0;
        let mut crossed = 0usize;
        let mut s = self.sqrt_price;
        let mut idx = self.entry_range(direction);

        loop {
            let Some(i) = idx.filter(|&i| i < self.ranges.len()) else {
                return Err(MavError::PartialFill {
                    filled_base: base_total,
                    filled_quote: quote_total,
                });
            };
            let range = &self.ranges[i];
            let (sa, sb) = (range.sqrt_lower(), range.sqrt_upper());
            // Entering across a gap snaps the price to the range edge.
            s = s.clamp(sa, sb);
            let l = range.liquidity;

            let boundary = match direction {
                SwapDirection::ExtractBase => sb,
                SwapDirection::DepositBase => sa,
            };
            if l > 0.0 {
                let cap = match (direction, amount) {
                    (SwapDirection::ExtractBase, SwapAmount::Base(_)) => l * (1.0 / s - 1.0 / sb),
                    (SwapDirection::ExtractBase, SwapAmount::Quote(_)) => l * (sb - s),
                    (SwapDirection::DepositBase, SwapAmount::Base(_)) => l * (1.0 / sa - 1.0 / s),
                    (SwapDirection::DepositBase, SwapAmount::Quote(_)) => l * (s - sa),
                };
                if remaining <= cap * (1.0 + 1e-12) {
                    let s_new = match (direction, amount) {
                        (SwapDirection::ExtractBase, SwapAmount::Base(_)) => {
                            (1.0 / (1.0 / s - remaining / l)).min(sb)
                        }
                        (SwapDirection::ExtractBase, SwapAmount::Quote(_)) => {
                            (s + remaining / l).min(sb)
                        }
                        (SwapDirection::DepositBase, SwapAmount::Base(_)) => {
                            (1.0 / (1.0 / s + remaining / l)).max(sa)
                        }
                        (SwapDirection::DepositBase, SwapAmount::Quote(_)) => {
                            (s - remaining / l).max(sa)
                        }
                    };
                    base_total += l * (1.0 / s.min(s_new) - 1.0 / s.max(s_new));
                    quote_total += l * (s.max(s_new) - s.min(s_new));
                    s = s_new;
                    break;
                }
                // Consume the whole range and cross the boundary.
                base_total += l * (1.0 / s.min(boundary) - 1.0 / s.max(boundary));
                quote_total += l * (s.max(boundary) - s.min(boundary));
                remaining -= cap;
            }
            s = boundary;
            crossed += 1;
            idx = match direction {
                SwapDirection::ExtractBase => Some(i + 1),
                SwapDirection::DepositBase => i.checked_sub(1),
            };
        }

        let lp_fee = match direction {
            SwapDirection::ExtractBase => f * base_total,
            SwapDirection::DepositBase => f * quote_total,
        };
        let mut pool = self.clone();
        pool.sqrt_price = s;
        pool.current_tick = price_to_tick(s * s);
        Ok(ClmmSwap {
            base_amount: base_total,
            quote_amount: quote_total,
            lp_fee,
            ranges_crossed: crossed,
            pool,
        })
    }
}
