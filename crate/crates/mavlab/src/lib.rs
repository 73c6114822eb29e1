//! Analytics for non-atomic arbitrage between AMM pools and a reference
//! centralized exchange, and between AMM pools on different chains.
//!
//! The crate is organized around the lifecycle of a backtest:
//!
//! * [`amm`] — pool state for constant-product and concentrated-liquidity
//!   pools, spot-price decoding from `sqrtPriceX96`, swap execution, and
//!   price-impact math.
//! * [`arb`] — closed-form optimal arbitrage sizing (maximal arbitrage
//!   value) for pool-vs-CEX and pool-vs-pool, the concentrated-liquidity
//!   tick walk, and the success-probability payoff.
//! * [`episodes`] — the empirical pipeline: align per-block AMM prices
//!   with per-second CEX closes, derive an outlier threshold, detect
//!   misalignment episodes, measure decay times, and accumulate per-block
//!   net LVR.
//! * [`ingest`] — file-based ingestion of swap-event logs and CEX price
//!   series with per-block pool snapshot reconstruction.
//! * [`sim`] — a seeded synthetic market generator that produces fixture
//!   files together with a ground-truth episode manifest.
//! * [`costs`] — per-swap cost decomposition (gas, LP fee, block
//!   slippage, price impact) and aggregate fee tables.
//! * [`report`] — serializable venue reports, episode tables, and
//!   cross-venue matrices.
//!
//! All analysis types are immutable values and all operations are pure
//! functions returning new states, so everything here is safe to use from
//! multiple threads without synchronization.

pub mod amm;
pub mod arb;
pub mod costs;
pub mod episodes;
mod error;
pub mod ingest;
pub mod report;
pub mod sim;

pub use error::MavError;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, MavError>;
