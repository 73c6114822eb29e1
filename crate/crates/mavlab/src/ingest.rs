//! File-based ingestion of swap-event logs and CEX price series, with
//! per-block pool snapshot reconstruction.
//!
//! Raw integer amounts are preserved through ingestion; decimal
//! adjustment happens only when snapshots and quotes are built, so a
//! loaded dataset can be written back losslessly.
//!
//! Swap CSV header (exact, ordered):
//! `block_number,timestamp_sec,tx_hash,log_index,amount0,amount1,sqrtPriceX96,liquidity,tick`
//! optionally followed by `l1_fee_usd,l2_fee_usd`. The JSONL format
//! mirrors the field names, with the unbounded integers carried as
//! strings. CEX CSV header: `timestamp_sec,close`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::amm::{
    decode_spot_price, price_to_tick, ClmmPool, CpmmPool, FeeParams, PoolSnapshot, TickRange,
    TokenMeta, MAX_TICK, MIN_TICK,
};
use crate::{MavError, Result};

/// Venue identity carried through the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VenueMeta {
    pub chain: String,
    pub block_time_sec: f64,
}

/// Pool pricing model of a venue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolKind {
    Cpmm,
    Clmm,
}

/// Static description of one venue: chain, pool model, fee context, and
/// token metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VenueConfig {
    pub chain: String,
    pub block_time_sec: f64,
    pub pool_kind: PoolKind,
    pub fee: FeeParams,
    pub token0: TokenMeta,
    pub token1: TokenMeta,
}

impl VenueConfig {
    /// Default block times for the studied chains, in seconds.
    pub fn default_block_time(chain: &str) -> Option<f64> {
        match chain.to_ascii_lowercase().as_str() {
            "ethereum" => Some(12.12),
            "arbitrum" => Some(0.25),
            "base" => Some(2.00),
            "optimism" => Some(2.00),
            "zksync" | "zksync era" | "zksync-era" => Some(1.05),
            _ => None,
        }
    }

    pub fn meta(&self) -> VenueMeta {
        VenueMeta {
            chain: self.chain.clone(),
            block_time_sec: self.block_time_sec,
        }
    }
}

/// One decoded swap event, in raw integer units.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapEventRecord {
    pub block_number: u64,
    pub timestamp_sec: i64,
    pub tx_hash: String,
    pub log_index: u32,
    /// Signed pool-centric token0 delta (positive into the pool).
    pub amount0: i128,
    /// Signed pool-centric token1 delta (positive into the pool).
    pub amount1: i128,
    /// Q64.96 square-root price after the swap; at most 160 bits.
    pub sqrt_price_x96: BigUint,
    /// In-range liquidity after the swap.
    pub liquidity: u128,
    /// Tick index after the swap, in raw price space.
    pub tick: i32,
    /// Optional ingested gas costs in USD.
    pub l1_fee_usd: Option<f64>,
    pub l2_fee_usd: Option<f64>,
}

/// Pool state after the last swap of a block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockState {
    pub block_number: u64,
    pub timestamp_sec: i64,
    /// Decimal-adjusted spot price decoded from the last event.
    pub spot_price: f64,
    pub snapshot: PoolSnapshot,
}

/// A loaded swap file: ordered events, per-block snapshots, and the
/// total quote-side volume.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapDataset {
    pub venue: VenueConfig,
    pub records: Vec<SwapEventRecord>,
    pub blocks: Vec<BlockState>,
    /// Sum of |amount1| over all events, decimal-adjusted.
    pub volume_quote: f64,
}

/// On-disk serialization format for swap events.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwapFormat {
    Csv,
    Jsonl,
}

impl SwapFormat {
    /// Picks the format from a file extension (`.jsonl`/`.json` versus
    /// anything else).
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => SwapFormat::Jsonl,
            _ => SwapFormat::Csv,
        }
    }
}

const SWAP_HEADER: [&str; 9] = [
    "block_number",
    "timestamp_sec",
    "tx_hash",
    "log_index",
    "amount0",
    "amount1",
    "sqrtPriceX96",
    "liquidity",
    "tick",
];
const GAS_HEADER: [&str; 2] = ["l1_fee_usd", "l2_fee_usd"];

fn schema(line: u64, message: impl Into<String>) -> MavError {
    MavError::Schema {
        line,
        message: message.into(),
    }
}

fn integrity(line: u64, message: impl Into<String>) -> MavError {
    MavError::Integrity {
        line,
        message: message.into(),
    }
}

fn parse_field<T: FromStr>(line: u64, name: &str, raw: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    raw.trim()
        .parse()
        .map_err(|e| schema(line, format!("bad {name} {raw:?}: {e}")))
}

fn parse_optional_f64(line: u64, name: &str, raw: Option<&str>) -> Result<Option<f64>> {
    match raw.map(str::trim) {
        None | Some("") => Ok(None),
        Some(v) => Ok(Some(parse_field(line, name, v)?)),
    }
}

/// JSONL row shape; unbounded integers travel as strings.
#[derive(Serialize, Deserialize)]
struct JsonlRow {
    block_number: u64,
    timestamp_sec: i64,
    tx_hash: String,
    log_index: u32,
    amount0: String,
    amount1: String,
    #[serde(rename = "sqrtPriceX96")]
    sqrt_price_x96: String,
    liquidity: String,
    tick: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    l1_fee_usd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    l2_fee_usd: Option<f64>,
}

/// Loads swap events and reconstructs per-block pool snapshots.
///
/// Events must arrive strictly ordered by `(block_number, log_index)`;
/// violations are integrity errors with the offending line. Each block's
/// snapshot reflects the state after its last swap.
pub fn load_swaps(path: &Path, format: SwapFormat, venue: &VenueConfig) -> Result<SwapDataset> {
    let records = match format {
        SwapFormat::Csv => read_swaps_csv(path)?,
        SwapFormat::Jsonl => read_swaps_jsonl(path)?,
    };
    dataset_from_records(records, venue)
}

fn read_swaps_csv(path: &Path) -> Result<Vec<SwapEventRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    let fields: Vec<&str> = headers.iter().map(str::trim).collect();
    let with_gas = fields.len() == SWAP_HEADER.len() + GAS_HEADER.len();
    let expected: Vec<&str> = if with_gas {
        SWAP_HEADER.iter().chain(GAS_HEADER.iter()).copied().collect()
    } else {
        SWAP_HEADER.to_vec()
    };
    if fields != expected {
        return Err(schema(
            1,
            format!("swap header mismatch: expected {expected:?}, found {fields:?}"),
        ));
    }

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() != expected.len() {
            return Err(schema(
                line,
                format!("expected {} columns, found {}", expected.len(), row.len()),
            ));
        }
        let sqrt_price_x96: BigUint = parse_field(line, "sqrtPriceX96", &row[6])?;
        if sqrt_price_x96.is_zero() {
            return Err(integrity(line, "sqrtPriceX96 must be positive"));
        }
        records.push(SwapEventRecord {
            block_number: parse_field(line, "block_number", &row[0])?,
            timestamp_sec: parse_field(line, "timestamp_sec", &row[1])?,
            tx_hash: row[2].trim().to_string(),
            log_index: parse_field(line, "log_index", &row[3])?,
            amount0: parse_field(line, "amount0", &row[4])?,
            amount1: parse_field(line, "amount1", &row[5])?,
            sqrt_price_x96,
            liquidity: parse_field(line, "liquidity", &row[7])?,
            tick: parse_field(line, "tick", &row[8])?,
            l1_fee_usd: parse_optional_f64(line, "l1_fee_usd", row.get(9))?,
            l2_fee_usd: parse_optional_f64(line, "l2_fee_usd", row.get(10))?,
        });
    }
    Ok(records)
}

fn read_swaps_jsonl(path: &Path) -> Result<Vec<SwapEventRecord>> {
    let text = fs::read_to_string(path)?;
    let mut records = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx as u64 + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let row: JsonlRow = serde_json::from_str(raw)
            .map_err(|e| schema(line, format!("bad JSONL row: {e}")))?;
        let sqrt_price_x96: BigUint = parse_field(line, "sqrtPriceX96", &row.sqrt_price_x96)?;
        if sqrt_price_x96.is_zero() {
            return Err(integrity(line, "sqrtPriceX96 must be positive"));
        }
        records.push(SwapEventRecord {
            block_number: row.block_number,
            timestamp_sec: row.timestamp_sec,
            tx_hash: row.tx_hash,
            log_index: row.log_index,
            amount0: parse_field(line, "amount0", &row.amount0)?,
            amount1: parse_field(line, "amount1", &row.amount1)?,
            sqrt_price_x96,
            liquidity: parse_field(line, "liquidity", &row.liquidity)?,
            tick: row.tick,
            l1_fee_usd: row.l1_fee_usd,
            l2_fee_usd: row.l2_fee_usd,
        });
    }
    Ok(records)
}

/// Validates ordering and builds snapshots from already-parsed records.
pub fn dataset_from_records(
    records: Vec<SwapEventRecord>,
    venue: &VenueConfig,
) -> Result<SwapDataset> {
    for (i, pair) in records.windows(2).enumerate() {
        let (a, b) = (&pair[0], &pair[1]);
        if (b.block_number, b.log_index) <= (a.block_number, a.log_index) {
            return Err(integrity(
                i as u64 + 3,
                format!(
                    "events out of order or duplicated at block {} log {}",
                    b.block_number, b.log_index
                ),
            ));
        }
        if b.timestamp_sec < a.timestamp_sec {
            return Err(integrity(
                i as u64 + 3,
                format!("timestamp regression at block {}", b.block_number),
            ));
        }
    }

    let d1 = f64::powi(10.0, i32::from(venue.token1.decimals));
    let mut volume_quote = 0.0;
    for r in &records {
        volume_quote += (r.amount1.unsigned_abs() as f64) / d1;
    }

    let mut blocks: Vec<BlockState> = Vec::new();
    for record in &records {
        let state = block_state(record, venue)?;
        match blocks.last_mut() {
            Some(last) if last.block_number == record.block_number => *last = state,
            _ => blocks.push(state),
        }
    }

    Ok(SwapDataset {
        venue: venue.clone(),
        records,
        blocks,
        volume_quote,
    })
}

/// Builds the analysis snapshot implied by one event.
///
/// The event carries only the in-range liquidity, so the snapshot
/// represents the depth actually known at the current price: a CPMM
/// venue gets the virtual reserves directly, a CLMM venue gets a single
/// wide range (10000 ticks each way) holding that liquidity.
fn block_state(record: &SwapEventRecord, venue: &VenueConfig) -> Result<BlockState> {
    let spot_price = decode_spot_price(&record.sqrt_price_x96, &venue.token0, &venue.token1)?;
    if record.liquidity == 0 {
        return Err(integrity(
            0,
            format!("zero liquidity at block {}", record.block_number),
        ));
    }
    let d0 = i32::from(venue.token0.decimals);
    let d1 = i32::from(venue.token1.decimals);
    let s_raw = record.sqrt_price_x96.to_f64().unwrap_or(f64::INFINITY) / 2f64.powi(96);
    let liquidity = record.liquidity as f64;
    let reserve_x = liquidity / s_raw / f64::powi(10.0, d0);
    let reserve_y = liquidity * s_raw / f64::powi(10.0, d1);

    let snapshot = match venue.pool_kind {
        PoolKind::Cpmm => PoolSnapshot::Cpmm(CpmmPool::new(
            reserve_x,
            reserve_y,
            venue.fee,
            venue.token0.clone(),
            venue.token1.clone(),
        )?),
        PoolKind::Clmm => {
            let adjusted_tick = price_to_tick(spot_price);
            let lower = (adjusted_tick - 10_000).max(MIN_TICK);
            let upper = (adjusted_tick + 10_000).min(MAX_TICK);
            let adjusted_liquidity = (reserve_x * reserve_y).sqrt();
            let range = TickRange::new(lower, upper, adjusted_liquidity)?;
            PoolSnapshot::Clmm(ClmmPool::new(
                vec![range],
                spot_price.sqrt(),
                venue.fee,
                venue.token0.clone(),
                venue.token1.clone(),
            )?)
        }
    };
    Ok(BlockState {
        block_number: record.block_number,
        timestamp_sec: record.timestamp_sec,
        spot_price,
        snapshot,
    })
}

/// Writes swap events in the documented CSV schema. Gas columns are
/// included when any record carries them.
pub fn write_swaps_csv(path: &Path, records: &[SwapEventRecord]) -> Result<()> {
    let with_gas = records
        .iter()
        .any(|r| r.l1_fee_usd.is_some() || r.l2_fee_usd.is_some());
    let mut out = String::new();
    out.push_str(&SWAP_HEADER.join(","));
    if with_gas {
        out.push(',');
        out.push_str(&GAS_HEADER.join(","));
    }
    out.push('\n');
    for r in records {
        write!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.block_number,
            r.timestamp_sec,
            r.tx_hash,
            r.log_index,
            r.amount0,
            r.amount1,
            r.sqrt_price_x96,
            r.liquidity,
            r.tick
        )
        .expect("string write");
        if with_gas {
            out.push(',');
            if let Some(v) = r.l1_fee_usd {
                write!(out, "{v}").expect("string write");
            }
            out.push(',');
            if let Some(v) = r.l2_fee_usd {
                write!(out, "{v}").expect("string write");
            }
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes swap events as JSONL mirroring the CSV field names.
pub fn write_swaps_jsonl(path: &Path, records: &[SwapEventRecord]) -> Result<()> {
    let mut out = String::new();
    for r in records {
        let row = JsonlRow {
            block_number: r.block_number,
            timestamp_sec: r.timestamp_sec,
            tx_hash: r.tx_hash.clone(),
            log_index: r.log_index,
            amount0: r.amount0.to_string(),
            amount1: r.amount1.to_string(),
            sqrt_price_x96: r.sqrt_price_x96.to_string(),
            liquidity: r.liquidity.to_string(),
            tick: r.tick,
            l1_fee_usd: r.l1_fee_usd,
            l2_fee_usd: r.l2_fee_usd,
        };
        out.push_str(&serde_json::to_string(&row)?);
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// One CEX closing price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CexTick {
    pub timestamp_sec: i64,
    pub close: f64,
}

/// A loaded CEX price series.
#[derive(Debug, Clone, PartialEq)]
pub struct CexSeries {
    pub ticks: Vec<CexTick>,
    /// Seconds missing from the covered span (gaps are allowed).
    pub gap_seconds: u64,
}

/// Loads per-second CEX closes from `timestamp_sec,close` CSV.
///
/// Timestamps must be strictly increasing; duplicates are integrity
/// errors. Gaps are tolerated and counted.
pub fn load_cex(path: &Path) -> Result<CexSeries> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = reader.headers()?.clone();
    let fields: Vec<&str> = headers.iter().map(str::trim).collect();
    if fields != ["timestamp_sec", "close"] {
        return Err(schema(
            1,
            format!("CEX header mismatch: expected [timestamp_sec, close], found {fields:?}"),
        ));
    }
    let mut ticks: Vec<CexTick> = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let timestamp_sec: i64 = parse_field(line, "timestamp_sec", &row[0])?;
        let close: f64 = parse_field(line, "close", &row[1])?;
        if !close.is_finite() || close <= 0.0 {
            return Err(integrity(line, format!("close {close} must be positive")));
        }
        if let Some(last) = ticks.last() {
            if timestamp_sec <= last.timestamp_sec {
                return Err(integrity(
                    line,
                    format!(
                        "timestamps must be strictly increasing ({} after {})",
                        timestamp_sec, last.timestamp_sec
                    ),
                ));
            }
        }
        ticks.push(CexTick {
            timestamp_sec,
            close,
        });
    }
    let gap_seconds = if ticks.len() >= 2 {
        let span = (ticks.last().unwrap().timestamp_sec - ticks[0].timestamp_sec + 1) as u64;
        span - ticks.len() as u64
    } else {
        0
    };
    Ok(CexSeries { ticks, gap_seconds })
}

/// Writes a CEX series in the documented CSV schema.
pub fn write_cex_csv(path: &Path, ticks: &[CexTick]) -> Result<()> {
    let mut out = String::from("timestamp_sec,close\n");
    for t in ticks {
        writeln!(out, "{},{}", t.timestamp_sec, t.close).expect("string write");
    }
    fs::write(path, out)?;
    Ok(())
}
