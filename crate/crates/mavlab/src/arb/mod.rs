//! Optimal arbitrage sizing and value.
//!
//! The maximal arbitrage value (MAV) is the profit of the single trade
//! that re-aligns an AMM with a reference price, net of LP and CEX fees
//! but gross of gas (gas enters only [`expected_payoff`]). Closed forms
//! cover CPMM-vs-CEX (both directions) and the fee-free two-CPMM case;
//! concentrated liquidity walks tick ranges and sums per-range optima;
//! [`numeric_mav`] provides the independent golden-section route used to
//! verify every closed form and to size fee-aware or mixed-pool trades.
//!
//! Direction conventions: `dx_max` counts base tokens extracted from the
//! pool when buying at the AMM, and base tokens bought at the CEX
//! (pre-fee) when selling at the AMM. A trade is only reported when the
//! price gap clears the fee wedge `(1-f)(1-g)`; inside the wedge the
//! opportunity is zero.

mod numeric;

pub use numeric::{numeric_mav, DX_REL_TOL};

use serde::{Deserialize, Serialize};

use crate::amm::{
    ClmmPool, CpmmPool, FeeApplication, FeeParams, PoolSnapshot, SwapAmount, SwapDirection,
    TickRange,
};
use crate::{MavError, Result};

/// Which side of the gap the arbitrageur buys on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// AMM price below CEX: buy base at the AMM, sell at the CEX.
    BuyAmmSellCex,
    /// AMM price above CEX: buy base at the CEX, sell at the AMM.
    BuyCexSellAmm,
    /// Two-pool trade: buy at the cheaper pool, sell at the dearer.
    CrossPool,
}

/// The profit-maximizing arbitrage trade against one venue pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArbOpportunity {
    pub direction: Direction,
    /// Optimal base-token trade size; zero when no opportunity exists.
    pub dx_max: f64,
    /// Value of the optimal trade in quote tokens, gross of gas.
    pub mav: f64,
    /// AMM spot price after executing `dx_max`.
    pub post_trade_amm_price: f64,
    /// Signed relative gap: `p_cex = p_amm * (1 + epsilon)`.
    pub epsilon: f64,
}

impl ArbOpportunity {
    fn none(direction: Direction, price: f64, epsilon: f64) -> Self {
        Self {
            direction,
            dx_max: 0.0,
            mav: 0.0,
            post_trade_amm_price: price,
            epsilon,
        }
    }
}

fn validate_price(label: &str, value: f64) -> Result<()> {
    if !value.is_finite() || value <= 0.0 {
        return Err(MavError::InvalidPrice(format!(
            "{label} {value} must be positive and finite"
        )));
    }
    Ok(())
}

/// Simulated arbitrage profit of trading `dx` base tokens against a CPMM
/// with a CEX reference, following the same fee conventions as the
/// closed forms: buying at the AMM pays the gross quote amount and nets
/// `(1-f) dx` base to sell at `(1-g) p_cex`; selling at the AMM deposits
/// the `(1-g) dx` base bought at the CEX for `dx * p_cex` and nets
/// `(1-f)` of the quote received.
pub fn cex_trade_profit(
    pool: &CpmmPool,
    p_cex: f64,
    fees: &FeeParams,
    dx: f64,
    direction: Direction,
) -> Result<f64> {
    match direction {
        Direction::BuyAmmSellCex => {
            let out = pool.swap(dx, SwapDirection::ExtractBase, FeeApplication::None)?;
            let net_base = dx * (1.0 - fees.lp_fee);
            Ok(net_base * (1.0 - fees.cex_fee) * p_cex - out.quote_amount)
        }
        Direction::BuyCexSellAmm => {
            let deposited = dx * (1.0 - fees.cex_fee);
            let out = pool.swap(deposited, SwapDirection::DepositBase, FeeApplication::None)?;
            Ok(out.quote_amount * (1.0 - fees.lp_fee) - dx * p_cex)
        }
        Direction::CrossPool => Err(MavError::InvalidInput(
            "cross-pool profit needs two pools".into(),
        )),
    }
}

/// Closed-form optimal trade between a CPMM and a CEX reference price.
///
/// Inside the fee wedge (`(1-f)(1-g) * p_high <= p_low`) the result is a
/// zero opportunity. Otherwise the trade re-aligns the pool exactly onto
/// the fee-adjusted CEX price.
pub fn cpmm_cex_mav(pool: &CpmmPool, p_cex: f64, fees: &FeeParams) -> Result<ArbOpportunity> {
    validate_price("CEX price", p_cex)?;
    let p = pool.spot_price();
    validate_price("AMM price", p)?;
    let x = pool.reserve_x();
    let wedge = fees.wedge();
    let epsilon = p_cex / p - 1.0;

    if p < p_cex && wedge * p_cex > p {
        // Buy base at the AMM, sell at the CEX. The optimum lands the
        // pool on the fee-adjusted CEX price `a`.
        let a = wedge * p_cex;
        let dx_max = x * (1.0 - (p / a).sqrt());
        let mav = x * (a.sqrt() - p.sqrt()).powi(2);
        Ok(ArbOpportunity {
            direction: Direction::BuyAmmSellCex,
            dx_max,
            mav,
            post_trade_amm_price: a,
            epsilon,
        })
    } else if p > p_cex && wedge * p > p_cex {
        // Buy base at the CEX, sell at the AMM. `dx_max` is the pre-fee
        // CEX purchase; the pool receives `(1-g) dx_max`.
        let ratio = (wedge * p / p_cex).sqrt();
        let dx_max = x / (1.0 - fees.cex_fee) * (ratio - 1.0);
        let mav = x
            * (((1.0 - fees.lp_fee) * p).sqrt() - (p_cex / (1.0 - fees.cex_fee)).sqrt()).powi(2);
        Ok(ArbOpportunity {
            direction: Direction::BuyCexSellAmm,
            dx_max,
            mav,
            post_trade_amm_price: p_cex / wedge,
            epsilon,
        })
    } else {
        let direction = if p_cex >= p {
            Direction::BuyAmmSellCex
        } else {
            Direction::BuyCexSellAmm
        };
        Ok(ArbOpportunity::none(direction, p, epsilon))
    }
}

/// Optimal fee-free trade between two CPMMs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossPoolArb {
    /// Base tokens bought at the cheaper pool and sold at the dearer.
    pub dx_max: f64,
    /// Quote profit of the round trip.
    pub mav: f64,
    /// Common spot price of both pools after the trade.
    pub aligned_price: f64,
    /// `true` when the first argument pool is the cheaper (buy) side.
    pub buy_at_first: bool,
    /// Signed relative gap: `p_second = p_first * (1 + epsilon)`.
    pub epsilon: f64,
}

impl CrossPoolArb {
    pub fn opportunity(&self) -> ArbOpportunity {
        ArbOpportunity {
            direction: Direction::CrossPool,
            dx_max: self.dx_max,
            mav: self.mav,
            post_trade_amm_price: self.aligned_price,
            epsilon: self.epsilon,
        }
    }
}

/// Fee-free price-equalizing trade between two CPMMs: buy `dx_max` base
/// at the cheaper pool, sell it at the dearer pool, leaving both spot
/// prices equal. Fee-aware two-pool sizing goes through [`numeric_mav`]
/// over the composed simulated profit instead.
pub fn cpmm_cpmm_mav(first: &CpmmPool, second: &CpmmPool) -> Result<CrossPoolArb> {
    let p1 = first.spot_price();
    let p2 = second.spot_price();
    validate_price("first pool price", p1)?;
    validate_price("second pool price", p2)?;
    let epsilon = p2 / p1 - 1.0;

    if p1 == p2 {
        return Ok(CrossPoolArb {
            dx_max: 0.0,
            mav: 0.0,
            aligned_price: p1,
            buy_at_first: true,
            epsilon,
        });
    }
    let buy_at_first = p1 < p2;
    let (cheap, dear) = if buy_at_first {
        (first, second)
    } else {
        (second, first)
    };
    let (pc, pd) = (cheap.spot_price(), dear.spot_price());
    let (xc, xd) = (cheap.reserve_x(), dear.reserve_x());

    // Price equalization: buying dx at the cheap pool raises it to
    // pc*xc^2/(xc-dx)^2 while selling dx at the dear pool lowers it to
    // pd*xd^2/(xd+dx)^2; both meet at one dx, which also maximizes the
    // round-trip profit (the marginal prices cross there).
    let dx_max = xc * xd * (pd.sqrt() - pc.sqrt()) / (pd.sqrt() * xd + pc.sqrt() * xc);

    let buy = cheap.swap(dx_max, SwapDirection::ExtractBase, FeeApplication::None)?;
    let sell = dear.swap(dx_max, SwapDirection::DepositBase, FeeApplication::None)?;
    Ok(CrossPoolArb {
        dx_max,
        mav: sell.quote_amount - buy.quote_amount,
        aligned_price: sell.pool.spot_price(),
        buy_at_first,
        epsilon,
    })
}

/// One range's contribution to a concentrated-liquidity arbitrage walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TickLeg {
    pub lower_tick: i32,
    pub upper_tick: i32,
    pub liquidity: f64,
    /// Base tokens traded within this range.
    pub base_amount: f64,
    /// Quote tokens traded within this range.
    pub quote_amount: f64,
    /// Profit contributed by this range.
    pub mav: f64,
    pub sqrt_price_start: f64,
    pub sqrt_price_end: f64,
}

/// Tick-walk arbitrage result with the per-range breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClmmArb {
    pub opportunity: ArbOpportunity,
    pub legs: Vec<TickLeg>,
    /// Initialized liquidity ran out before the alignment price.
    pub exhausted: bool,
}

/// Optimal trade between a concentrated-liquidity pool and a CEX
/// reference, walking tick ranges toward the fee-adjusted CEX price.
///
/// Each range contributes its capped per-range optimum; the walk stops at
/// the alignment price or when liquidity runs out (`exhausted`). The sum
/// of the per-range values equals the value of the single optimal trade.
pub fn clmm_cex_mav(pool: &ClmmPool, p_cex: f64, fees: &FeeParams) -> Result<ClmmArb> {
    validate_price("CEX price", p_cex)?;
    let p = pool.spot_price();
    let wedge = fees.wedge();
    let epsilon = p_cex / p - 1.0;

    let up = p < p_cex && wedge * p_cex > p;
    let down = p > p_cex && wedge * p > p_cex;
    if !up && !down {
        let direction = if p_cex >= p {
            Direction::BuyAmmSellCex
        } else {
            Direction::BuyCexSellAmm
        };
        return Ok(ClmmArb {
            opportunity: ArbOpportunity::none(direction, p, epsilon),
            legs: Vec::new(),
            exhausted: false,
        });
    }

    let target_price = if up { wedge * p_cex } else { p_cex / wedge };
    let s_target = target_price.sqrt();
    // The walk frontier only moves along traded legs; gaps and empty
    // ranges are crossed without advancing it past tradable liquidity.
    let mut frontier = pool.sqrt_price();
    let mut aligned = false;
    let mut legs = Vec::new();
    let mut base_total = 0.0;
    let mut mav_total = 0.0;

    let ranges: Vec<&TickRange> = if up {
        pool.ranges().iter().collect()
    } else {
        pool.ranges().iter().rev().collect()
    };
    for range in ranges {
        let (sa, sb) = (range.sqrt_lower(), range.sqrt_upper());
        if up {
            if sb <= frontier {
                continue;
            }
            if sa >= s_target {
                break;
            }
        } else {
            if sa >= frontier {
                continue;
            }
            if sb <= s_target {
                break;
            }
        }
        let l = range.liquidity;
        if l <= 0.0 {
            continue;
        }
        let from = frontier.clamp(sa, sb);
        let to = s_target.clamp(sa, sb);
        if to == s_target {
            aligned = true;
        }
        frontier = to;
        if from == to {
            continue;
        }
        let (lo, hi) = (from.min(to), from.max(to));
        let base = l * (1.0 / lo - 1.0 / hi);
        let quote = l * (hi - lo);
        let mav = if up {
            // Sell the extracted base at the CEX net of both fees; the
            // fee-adjusted revenue per base token is exactly the target.
            target_price * base - quote
        } else {
            // Net quote from the pool minus the CEX cost of the base.
            (1.0 - fees.lp_fee) * quote - base * p_cex / (1.0 - fees.cex_fee)
        };
        base_total += base;
        mav_total += mav;
        legs.push(TickLeg {
            lower_tick: range.lower_tick,
            upper_tick: range.upper_tick,
            liquidity: l,
            base_amount: base,
            quote_amount: quote,
            mav,
            sqrt_price_start: from,
            sqrt_price_end: to,
        });
        if aligned {
            break;
        }
    }

    let exhausted = !aligned;
    let s = frontier;
    let dx_max = if up {
        base_total
    } else {
        base_total / (1.0 - fees.cex_fee)
    };
    let direction = if up {
        Direction::BuyAmmSellCex
    } else {
        Direction::BuyCexSellAmm
    };
    Ok(ClmmArb {
        opportunity: ArbOpportunity {
            direction,
            dx_max,
            mav: mav_total,
            post_trade_amm_price: s * s,
            epsilon,
        },
        legs,
        exhausted,
    })
}

/// Dispatches the per-block MAV computation on a pool snapshot.
pub fn snapshot_mav(
    snapshot: &PoolSnapshot,
    p_cex: f64,
    fees: &FeeParams,
) -> Result<ArbOpportunity> {
    match snapshot {
        PoolSnapshot::Cpmm(pool) => cpmm_cex_mav(pool, p_cex, fees),
        PoolSnapshot::Clmm(pool) => Ok(clmm_cex_mav(pool, p_cex, fees)?.opportunity),
    }
}

/// Fee-free optimal trade value between two pool snapshots of any kind.
///
/// CPMM pairs use the closed form; pairs involving concentrated
/// liquidity are sized by golden-section search over the composed
/// two-leg simulated profit.
pub fn pair_mav(first: &PoolSnapshot, second: &PoolSnapshot) -> Result<f64> {
    if let (PoolSnapshot::Cpmm(a), PoolSnapshot::Cpmm(b)) = (first, second) {
        return Ok(cpmm_cpmm_mav(a, b)?.mav);
    }
    let p1 = first.spot_price();
    let p2 = second.spot_price();
    if p1 == p2 {
        return Ok(0.0);
    }
    let (cheap, dear) = if p1 < p2 {
        (first, second)
    } else {
        (second, first)
    };
    let cap = extractable_base(cheap);
    if cap <= 0.0 {
        return Ok(0.0);
    }
    let profit = |dx: f64| -> f64 {
        let buy = match buy_base(cheap, dx) {
            Some(v) => v,
            None => return f64::NEG_INFINITY,
        };
        let sell = match sell_base(dear, dx) {
            Some(v) => v,
            None => return f64::NEG_INFINITY,
        };
        sell - buy
    };
    let (_, mav) = numeric_mav(profit, (0.0, cap * (1.0 - 1e-9)))?;
    Ok(mav.max(0.0))
}

fn extractable_base(snapshot: &PoolSnapshot) -> f64 {
    match snapshot {
        PoolSnapshot::Cpmm(p) => p.reserve_x(),
        PoolSnapshot::Clmm(p) => {
            let s = p.sqrt_price();
            p.ranges()
                .iter()
                .filter(|r| r.sqrt_upper() > s)
                .map(|r| r.liquidity * (1.0 / r.sqrt_lower().max(s) - 1.0 / r.sqrt_upper()))
                .sum()
        }
    }
}

fn buy_base(snapshot: &PoolSnapshot, dx: f64) -> Option<f64> {
    match snapshot {
        PoolSnapshot::Cpmm(p) => p
            .swap(dx, SwapDirection::ExtractBase, FeeApplication::None)
            .ok()
            .map(|o| o.quote_amount),
        PoolSnapshot::Clmm(p) => p
            .swap(
                SwapAmount::Base(dx),
                SwapDirection::ExtractBase,
                FeeApplication::None,
            )
            .ok()
            .map(|o| o.quote_amount),
    }
}

fn sell_base(snapshot: &PoolSnapshot, dx: f64) -> Option<f64> {
    match snapshot {
        PoolSnapshot::Cpmm(p) => p
            .swap(dx, SwapDirection::DepositBase, FeeApplication::None)
            .ok()
            .map(|o| o.quote_amount),
        PoolSnapshot::Clmm(p) => p
            .swap(
                SwapAmount::Base(dx),
                SwapDirection::DepositBase,
                FeeApplication::None,
            )
            .ok()
            .map(|o| o.quote_amount),
    }
}

/// Probability that an arbitrage of a given size and gap executes.
pub trait SuccessModel {
    fn probability(&self, dx: f64, epsilon: f64) -> f64;
}

impl<F: Fn(f64, f64) -> f64> SuccessModel for F {
    fn probability(&self, dx: f64, epsilon: f64) -> f64 {
        self(dx, epsilon)
    }
}

/// The default model: execution always succeeds.
#[derive(Debug, Clone, Copy, Default)]
pub struct CertainSuccess;

impl SuccessModel for CertainSuccess {
    fn probability(&self, _dx: f64, _epsilon: f64) -> f64 {
        1.0
    }
}

/// Expected arbitrageur payoff: gross value weighted by the success
/// probability, net of gas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoffResult {
    /// `mav * probability - gas_fee`; negative marks the opportunity
    /// unprofitable net of gas.
    pub expected_payoff: f64,
    pub gross_mav: f64,
    pub probability: f64,
    pub gas_fee: f64,
}

/// Applies a success model and gas cost to a sized opportunity.
pub fn expected_payoff(
    opp: &ArbOpportunity,
    model: &impl SuccessModel,
    gas_fee: f64,
) -> Result<PayoffResult> {
    if gas_fee < 0.0 || !gas_fee.is_finite() {
        return Err(MavError::InvalidInput(format!(
            "gas fee {gas_fee} must be nonnegative"
        )));
    }
    let probability = model.probability(opp.dx_max, opp.epsilon);
    if !(0.0..=1.0).contains(&probability) || !probability.is_finite() {
        return Err(MavError::ModelContract(probability));
    }
    Ok(PayoffResult {
        expected_payoff: opp.mav * probability - gas_fee,
        gross_mav: opp.mav,
        probability,
        gas_fee,
    })
}
