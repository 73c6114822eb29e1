//! Constant-product pool math.
//!
//! Swaps are fee-exclusive: the invariant update always uses the gross
//! trade amounts, so the reserve product is conserved exactly, and the LP
//! fee is carved out of the trader's output leg and held outside the
//! reserves. This matches pools whose fee accounting is separate from the
//! pricing curve.

use serde::{Deserialize, Serialize};

use super::{FeeApplication, FeeParams, SwapDirection, TokenMeta};
use crate::{MavError, Result};

/// A constant-product pool `x * y = k` with decimal-adjusted reserves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpmmPool {
    reserve_x: f64,
    reserve_y: f64,
    fee: FeeParams,
    token_x: TokenMeta,
    token_y: TokenMeta,
}

/// Result of executing a swap against a [`CpmmPool`].
#[derive(Debug, Clone, PartialEq)]
pub struct SwapOutcome {
    /// Gross quote-token leg: paid into the pool for `ExtractBase`, taken
    /// out of the reserves for `DepositBase`.
    pub quote_amount: f64,
    /// LP fee withheld from the trader's output leg, denominated in that
    /// leg's token (base for `ExtractBase`, quote for `DepositBase`).
    pub lp_fee: f64,
    /// Post-trade pool state.
    pub pool: CpmmPool,
}

impl CpmmPool {
    pub fn new(
        reserve_x: f64,
        reserve_y: f64,
        fee: FeeParams,
        token_x: TokenMeta,
        token_y: TokenMeta,
    ) -> Result<Self> {
        if !reserve_x.is_finite() || reserve_x <= 0.0 {
            return Err(MavError::InvalidInput(format!(
                "reserve_x {reserve_x} must be positive and finite"
            )));
        }
        if !reserve_y.is_finite() || reserve_y <= 0.0 {
            return Err(MavError::InvalidInput(format!(
                "reserve_y {reserve_y} must be positive and finite"
            )));
        }
        Ok(Self {
            reserve_x,
            reserve_y,
            fee,
            token_x,
            token_y,
        })
    }

    /// A pool with unnamed tokens, convenient for synthetic fixtures.
    pub fn synthetic(reserve_x: f64, reserve_y: f64, fee: FeeParams) -> Result<Self> {
        Self::new(
            reserve_x,
            reserve_y,
            fee,
            TokenMeta::new("BASE", 18, false)?,
            TokenMeta::new("QUOTE", 18, false)?,
        )
    }

    pub fn reserve_x(&self) -> f64 {
        self.reserve_x
    }

    pub fn reserve_y(&self) -> f64 {
        self.reserve_y
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
        self.reserve_y / self.reserve_x
    }

    /// Executes a swap of `dx` base tokens in the given direction.
    ///
    /// `ExtractBase` removes `dx` base from the reserves against a quote
    /// payment of `y*dx/(x-dx)`; `DepositBase` adds `dx` base and releases
    /// `y*dx/(x+dx)` quote. Under [`FeeApplication::Exclusive`] the pool's
    /// LP fee is charged on the trader's output leg; the reserve update is
    /// identical in both modes, so the product `x*y` is always conserved.
    pub fn swap(
        &self,
        dx: f64,
        direction: SwapDirection,
        fee: FeeApplication,
    ) -> Result<SwapOutcome> {
        if !dx.is_finite() || dx < 0.0 {
            return Err(MavError::InvalidInput(format!(
                "swap amount {dx} must be nonnegative and finite"
            )));
        }
        let f = match fee {
            FeeApplication::Exclusive => self.fee.lp_fee,
            FeeApplication::None => 0.0,
        };
        match direction {
            SwapDirection::ExtractBase => {
                if dx >= self.reserve_x {
                    return Err(MavError::ReserveDepletion {
                        requested: dx,
                        reserve: self.reserve_x,
                    });
                }
                let dy = self.reserve_y * dx / (self.reserve_x - dx);
                let pool = Self {
                    reserve_x: self.reserve_x - dx,
                    reserve_y: self.reserve_y + dy,
                    ..self.clone()
                };
                Ok(SwapOutcome {
                    quote_amount: dy,
                    lp_fee: f * dx,
                    pool,
                })
            }
            SwapDirection::DepositBase => {
                let dy = self.reserve_y * dx / (self.reserve_x + dx);
                let pool = Self {
                    reserve_x: self.reserve_x + dx,
                    reserve_y: self.reserve_y - dy,
                    ..self.clone()
                };
                Ok(SwapOutcome {
                    quote_amount: dy,
                    lp_fee: f * dy,
                    pool,
                })
            }
        }
    }

    /// Percentage price impact of extracting `dx` base tokens.
    ///
    /// Returns `dx / (x - dx)`, which equals the relative quote-reserve
    /// change `dy / y` through the identity `1 + dy/y = 1/(1 - dx/x)`.
    pub fn price_impact(&self, dx: f64) -> Result<f64> {
        if !dx.is_finite() || dx < 0.0 {
            return Err(MavError::InvalidInput(format!(
                "impact amount {dx} must be nonnegative and finite"
            )));
        }
        if dx >= self.reserve_x {
            return Err(MavError::ReserveDepletion {
                requested: dx,
                reserve: self.reserve_x,
            });
        }
        Ok(dx / (self.reserve_x - dx))
    }

    /// Base amount that moves the spot price to `target`, paired with the
    /// direction that accomplishes it. Fee-free pricing-curve geometry.
    pub fn trade_to_price(&self, target: f64) -> Result<(f64, SwapDirection)> {
        if !target.is_finite() || target <= 0.0 {
            return Err(MavError::InvalidPrice(format!(
                "target price {target} must be positive"
            )));
        }
        let p = self.spot_price();
        if target >= p {
            // price rises by extracting base: p' = p * x^2 / (x - dx)^2
            let dx = self.reserve_x * (1.0 - (p / target).sqrt());
            Ok((dx, SwapDirection::ExtractBase))
        } else {
            // price falls by depositing base: p' = p * x^2 / (x + dx)^2
            let dx = self.reserve_x * ((p / target).sqrt() - 1.0);
            Ok((dx, SwapDirection::DepositBase))
        }
    }
}
