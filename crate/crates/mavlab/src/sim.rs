//! Seeded synthetic market generator.
//!
//! Produces a CEX price path (geometric random walk at one-second
//! resolution), a swap-event log for an AMM that noise-trades around
//! parity, and a ground-truth manifest of injected misalignment
//! episodes. During a gap window the AMM is re-pinned every block to the
//! configured relative offset from the live CEX price, and the first
//! block after the window executes a re-aligning trade, so each injected
//! episode has an exact block extent for pipeline verification.
//!
//! Runs are fully deterministic for a given seed.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_bigint::BigUint;
use num_traits::FromPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::amm::{price_to_tick, CpmmPool, FeeApplication, SwapDirection};
use crate::arb::cpmm_cex_mav;
use crate::ingest::{write_cex_csv, write_swaps_csv, CexTick, SwapEventRecord, VenueConfig};
use crate::{MavError, Result};

/// One injected misalignment window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapSpec {
    /// First block of the window (1-based block numbering).
    pub start_block: u64,
    /// Relative AMM offset from the CEX price while pinned.
    pub epsilon: f64,
    /// Number of blocks the gap persists.
    pub persistence_blocks: u32,
}

/// Generator parameters. Seeded runs are fully deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub seed: u64,
    pub duration_sec: u32,
    /// CEX log-volatility per square-root second.
    pub volatility_per_sqrt_sec: f64,
    /// Probability that a block outside gap windows carries a noise
    /// trade; quiet blocks exercise the carry-forward path.
    pub trade_intensity: f64,
    /// Maximum relative offset of a noise trade from the CEX price.
    pub noise_amplitude: f64,
    #[serde(default)]
    pub gaps: Vec<GapSpec>,
    pub initial_base_reserve: f64,
    pub initial_quote_reserve: f64,
}

impl SimSpec {
    fn validate(&self, venue: &VenueConfig) -> Result<()> {
        let fail = |msg: String| Err(MavError::InvalidSpec(msg));
        if self.duration_sec < 2 {
            return fail(format!("duration_sec {} too short", self.duration_sec));
        }
        if !self.volatility_per_sqrt_sec.is_finite() || self.volatility_per_sqrt_sec < 0.0 {
            return fail(format!(
                "volatility {} must be nonnegative",
                self.volatility_per_sqrt_sec
            ));
        }
        if !(0.0..=1.0).contains(&self.trade_intensity) {
            return fail(format!(
                "trade_intensity {} must be in [0, 1]",
                self.trade_intensity
            ));
        }
        if !self.noise_amplitude.is_finite() || self.noise_amplitude < 0.0 {
            return fail(format!(
                "noise_amplitude {} must be nonnegative",
                self.noise_amplitude
            ));
        }
        if !self.initial_base_reserve.is_finite()
            || self.initial_base_reserve <= 0.0
            || !self.initial_quote_reserve.is_finite()
            || self.initial_quote_reserve <= 0.0
        {
            return fail("initial reserves must be positive".into());
        }
        let n_blocks = (f64::from(self.duration_sec) / venue.block_time_sec).floor() as u64;
        if n_blocks < 2 {
            return fail("duration covers fewer than two blocks".into());
        }
        let mut windows: Vec<(u64, u64)> = Vec::new();
        for gap in &self.gaps {
            if gap.persistence_blocks == 0 {
                return fail("gap persistence must be at least one block".into());
            }
            if !gap.epsilon.is_finite() || gap.epsilon <= -0.9 || gap.epsilon == 0.0 {
                return fail(format!("gap epsilon {} out of range", gap.epsilon));
            }
            if gap.start_block == 0 {
                return fail("gap windows start at block 1".into());
            }
            let end = gap.start_block + u64::from(gap.persistence_blocks);
            // The re-aligning block after the window must exist.
            if end >= n_blocks {
                return fail(format!(
                    "gap window [{}, {end}) exceeds the {} generated blocks",
                    gap.start_block, n_blocks
                ));
            }
            windows.push((gap.start_block, end));
        }
        windows.sort_unstable();
        for pair in windows.windows(2) {
            if pair[1].0 <= pair[0].1 {
                return fail("gap windows overlap or touch".into());
            }
        }
        Ok(())
    }
}

/// Ground-truth record of one injected episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub start_block: u64,
    pub epsilon: f64,
    pub persistence_blocks: u32,
    /// MAV implied by the pool reserves at injection, sized against the
    /// venue fee parameters.
    pub implied_mav: f64,
}

/// In-memory generator output.
#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub swaps: Vec<SwapEventRecord>,
    pub cex: Vec<CexTick>,
    pub manifest: Vec<ManifestEntry>,
}

/// Paths of a written fixture.
#[derive(Debug, Clone, PartialEq)]
pub struct FixturePaths {
    pub swaps: PathBuf,
    pub cex: PathBuf,
    pub manifest: PathBuf,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn synthetic_tx_hash(seed: u64, block: u64) -> String {
    let mut state = seed ^ block.wrapping_mul(0xA076_1D64_78BD_642F);
    let mut hash = String::with_capacity(66);
    hash.push_str("0x");
    for _ in 0..4 {
        write!(hash, "{:016x}", splitmix64(&mut state)).expect("string write");
    }
    hash
}

/// Generates the market in memory.
pub fn simulate_market(spec: &SimSpec, venue: &VenueConfig) -> Result<SimOutput> {
    spec.validate(venue)?;
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);

    // CEX path first so block draws do not perturb it.
    let c0 = spec.initial_quote_reserve / spec.initial_base_reserve;
    let sigma = spec.volatility_per_sqrt_sec;
    let mut cex = Vec::with_capacity(spec.duration_sec as usize + 1);
    let mut price = c0;
    cex.push(CexTick {
        timestamp_sec: 0,
        close: price,
    });
    for t in 1..=i64::from(spec.duration_sec) {
        let z: f64 = rng.sample(StandardNormal);
        price *= (sigma * z - 0.5 * sigma * sigma).exp();
        cex.push(CexTick {
            timestamp_sec: t,
            close: price,
        });
    }

    let d0 = i32::from(venue.token0.decimals);
    let d1 = i32::from(venue.token1.decimals);
    let n_blocks = (f64::from(spec.duration_sec) / venue.block_time_sec).floor() as u64;
    let realign_blocks: Vec<u64> = spec
        .gaps
        .iter()
        .map(|g| g.start_block + u64::from(g.persistence_blocks))
        .collect();

    let mut pool = CpmmPool::new(
        spec.initial_base_reserve,
        spec.initial_quote_reserve,
        venue.fee,
        venue.token0.clone(),
        venue.token1.clone(),
    )?;
    let mut swaps = Vec::new();
    let mut manifest = Vec::new();

    for block in 1..=n_blocks {
        let t = (block as f64 * venue.block_time_sec).floor() as i64;
        let close = cex[t as usize].close;
        let window = spec.gaps.iter().find(|g| {
            block >= g.start_block && block < g.start_block + u64::from(g.persistence_blocks)
        });

        let target = if let Some(gap) = window {
            close * (1.0 + gap.epsilon)
        } else if realign_blocks.contains(&block) || rng.gen::<f64>() < spec.trade_intensity {
            let eta = if spec.noise_amplitude > 0.0 {
                rng.gen_range(-spec.noise_amplitude..=spec.noise_amplitude)
            } else {
                0.0
            };
            close * (1.0 + eta)
        } else {
            continue;
        };

        let (dx, direction) = pool.trade_to_price(target)?;
        if dx == 0.0 && window.is_none() {
            continue;
        }
        let out = pool.swap(dx, direction, FeeApplication::None)?;
        pool = out.pool;

        let (amount0, amount1) = match direction {
            SwapDirection::ExtractBase => (
                -((dx * f64::powi(10.0, d0)).round() as i128),
                (out.quote_amount * f64::powi(10.0, d1)).round() as i128,
            ),
            SwapDirection::DepositBase => (
                (dx * f64::powi(10.0, d0)).round() as i128,
                -((out.quote_amount * f64::powi(10.0, d1)).round() as i128),
            ),
        };
        let spot = pool.spot_price();
        let raw_price = spot * f64::powi(10.0, d1 - d0);
        let sqrt_price_x96 = BigUint::from_f64((raw_price.sqrt() * 2f64.powi(96)).round())
            .ok_or_else(|| MavError::InvalidSpec("price escaped representable range".into()))?;
        let liquidity = (pool.reserve_x()
            * f64::powi(10.0, d0)
            * pool.reserve_y()
            * f64::powi(10.0, d1))
        .sqrt()
        .round() as u128;

        swaps.push(SwapEventRecord {
            block_number: block,
            timestamp_sec: t,
            tx_hash: synthetic_tx_hash(spec.seed, block),
            log_index: 0,
            amount0,
            amount1,
            sqrt_price_x96,
            liquidity,
            tick: price_to_tick(raw_price),
            l1_fee_usd: None,
            l2_fee_usd: None,
        });

        if let Some(gap) = window {
            if block == gap.start_block {
                let implied = cpmm_cex_mav(&pool, close, &venue.fee)?;
                manifest.push(ManifestEntry {
                    start_block: gap.start_block,
                    epsilon: gap.epsilon,
                    persistence_blocks: gap.persistence_blocks,
                    implied_mav: implied.mav,
                });
            }
        }
    }

    Ok(SimOutput {
        swaps,
        cex,
        manifest,
    })
}

/// Generates the market and writes `swaps.csv`, `cex.csv`, and
/// `manifest.json` under `dir`.
pub fn write_fixture(dir: &Path, spec: &SimSpec, venue: &VenueConfig) -> Result<FixturePaths> {
    let output = simulate_market(spec, venue)?;
    fs::create_dir_all(dir)?;
    let paths = FixturePaths {
        swaps: dir.join("swaps.csv"),
        cex: dir.join("cex.csv"),
        manifest: dir.join("manifest.json"),
    };
    write_swaps_csv(&paths.swaps, &output.swaps)?;
    write_cex_csv(&paths.cex, &output.cex)?;
    let mut manifest_json = serde_json::to_string_pretty(&output.manifest)?;
    manifest_json.push('\n');
    fs::write(&paths.manifest, manifest_json)?;
    Ok(paths)
}
