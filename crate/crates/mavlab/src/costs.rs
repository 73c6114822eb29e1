//! Per-swap cost decomposition and aggregate fee tables.
//!
//! Total swap cost splits into gas (L1 + L2), the explicit LP fee, and
//! the implicit components: block slippage (execution-price movement
//! caused by earlier swaps in the same block) and price impact (movement
//! caused by the swap itself). Both implicit components are valued on
//! the base leg against spot prices: price impact as
//! `|dx| * |p_post - p_pre|` and block slippage as
//! `|dx| * |p_pre - p_block_start|`, which makes the slippage of a swap
//! equal to the accumulated impact of its same-block predecessors and
//! exactly zero for the first swap of a block.

use serde::{Deserialize, Serialize};

use crate::amm::decode_spot_price;
use crate::ingest::{SwapEventRecord, VenueConfig};
use crate::{MavError, Result};

/// One swap's cost decomposition, in quote-token USD and in basis points
/// of the swap volume.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeeBreakdown {
    pub block_number: u64,
    pub timestamp_sec: i64,
    /// Quote-side swap volume, decimal-adjusted.
    pub volume: f64,
    pub l1_fee: f64,
    pub l2_fee: f64,
    pub lp_fee: f64,
    pub block_slippage: f64,
    pub price_impact: f64,
    /// Sum of all five components.
    pub total: f64,
    pub l1_fee_bps: f64,
    pub l2_fee_bps: f64,
    pub lp_fee_bps: f64,
    pub block_slippage_bps: f64,
    pub price_impact_bps: f64,
    pub total_bps: f64,
    /// Gas columns were absent from the ingested record.
    pub gas_missing: bool,
}

/// Decomposes one swap given the block-start and immediately-pre-trade
/// spot prices. Missing gas fields count as zero and set `gas_missing`.
pub fn decompose_swap(
    record: &SwapEventRecord,
    block_start_price: f64,
    pre_trade_price: f64,
    venue: &VenueConfig,
) -> Result<FeeBreakdown> {
    let post_price = decode_spot_price(&record.sqrt_price_x96, &venue.token0, &venue.token1)?;
    let d0 = f64::powi(10.0, i32::from(venue.token0.decimals));
    let d1 = f64::powi(10.0, i32::from(venue.token1.decimals));
    let dx = record.amount0.unsigned_abs() as f64 / d0;
    let volume = record.amount1.unsigned_abs() as f64 / d1;

    let gas_missing = record.l1_fee_usd.is_none() && record.l2_fee_usd.is_none();
    let l1_fee = record.l1_fee_usd.unwrap_or(0.0);
    let l2_fee = record.l2_fee_usd.unwrap_or(0.0);
    let lp_fee = venue.fee.lp_fee * volume;
    let price_impact = dx * (post_price - pre_trade_price).abs();
    let block_slippage = dx * (pre_trade_price - block_start_price).abs();
    let total = l1_fee + l2_fee + lp_fee + block_slippage + price_impact;

    let bps = |usd: f64| if volume > 0.0 { usd / volume * 1e4 } else { 0.0 };
    Ok(FeeBreakdown {
        block_number: record.block_number,
        timestamp_sec: record.timestamp_sec,
        volume,
        l1_fee,
        l2_fee,
        lp_fee,
        block_slippage,
        price_impact,
        total,
        l1_fee_bps: bps(l1_fee),
        l2_fee_bps: bps(l2_fee),
        lp_fee_bps: bps(lp_fee),
        block_slippage_bps: bps(block_slippage),
        price_impact_bps: bps(price_impact),
        total_bps: bps(total),
        gas_missing,
    })
}

/// Decomposes a whole ordered event log, reconstructing per-swap
/// reference prices: the immediately-pre-trade price is the previous
/// event's post price, the block-start price is the post price of the
/// previous block's last event. The first event of the dataset has no
/// observable prior state, so its implicit components are zero.
pub fn decompose_dataset(
    records: &[SwapEventRecord],
    venue: &VenueConfig,
) -> Result<Vec<FeeBreakdown>> {
    let mut out = Vec::with_capacity(records.len());
    let mut prev_post: Option<f64> = None;
    let mut prev_block: Option<u64> = None;
    let mut block_start: Option<f64> = None;

    for record in records {
        let post = decode_spot_price(&record.sqrt_price_x96, &venue.token0, &venue.token1)?;
        let pre = prev_post.unwrap_or(post);
        if prev_block != Some(record.block_number) {
            block_start = Some(pre);
        }
        out.push(decompose_swap(
            record,
            block_start.unwrap_or(pre),
            pre,
            venue,
        )?);
        prev_post = Some(post);
        prev_block = Some(record.block_number);
    }
    Ok(out)
}

/// Mean values of each cost component, plus the grouped gas and implicit
/// sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentSet {
    pub l1_fee: f64,
    pub l2_fee: f64,
    pub gas_fee: f64,
    pub lp_fee: f64,
    pub block_slippage: f64,
    pub price_impact: f64,
    pub slippage_plus_impact: f64,
    pub total: f64,
}

/// Aggregates over one segment of the record set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentAggregates {
    pub count: usize,
    pub volume_total: f64,
    pub mean_usd: ComponentSet,
    /// Mean of per-swap bps values.
    pub mean_bps: ComponentSet,
    /// Total USD over total volume, in bps.
    pub volume_weighted_bps: ComponentSet,
}

/// Fee table over the whole record set and the pre/post cutoff segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostTable {
    pub cutoff_timestamp: Option<i64>,
    pub whole: SegmentAggregates,
    /// `None` when the segment is empty or no cutoff was given.
    pub pre_cutoff: Option<SegmentAggregates>,
    pub post_cutoff: Option<SegmentAggregates>,
}

fn aggregate(breakdowns: &[&FeeBreakdown]) -> Option<SegmentAggregates> {
    if breakdowns.is_empty() {
        return None;
    }
    let n = breakdowns.len() as f64;
    let volume_total: f64 = breakdowns.iter().map(|b| b.volume).sum();
    let sum = |f: fn(&FeeBreakdown) -> f64| breakdowns.iter().map(|b| f(b)).sum::<f64>();

    let usd = ComponentSet {
        l1_fee: sum(|b| b.l1_fee),
        l2_fee: sum(|b| b.l2_fee),
        gas_fee: sum(|b| b.l1_fee + b.l2_fee),
        lp_fee: sum(|b| b.lp_fee),
        block_slippage: sum(|b| b.block_slippage),
        price_impact: sum(|b| b.price_impact),
        slippage_plus_impact: sum(|b| b.block_slippage + b.price_impact),
        total: sum(|b| b.total),
    };
    let mean_usd = ComponentSet {
        l1_fee: usd.l1_fee / n,
        l2_fee: usd.l2_fee / n,
        gas_fee: usd.gas_fee / n,
        lp_fee: usd.lp_fee / n,
        block_slippage: usd.block_slippage / n,
        price_impact: usd.price_impact / n,
        slippage_plus_impact: usd.slippage_plus_impact / n,
        total: usd.total / n,
    };
    let mean_bps = ComponentSet {
        l1_fee: sum(|b| b.l1_fee_bps) / n,
        l2_fee: sum(|b| b.l2_fee_bps) / n,
        gas_fee: sum(|b| b.l1_fee_bps + b.l2_fee_bps) / n,
        lp_fee: sum(|b| b.lp_fee_bps) / n,
        block_slippage: sum(|b| b.block_slippage_bps) / n,
        price_impact: sum(|b| b.price_impact_bps) / n,
        slippage_plus_impact: sum(|b| b.block_slippage_bps + b.price_impact_bps) / n,
        total: sum(|b| b.total_bps) / n,
    };
    let vw = |total_usd: f64| {
        if volume_total > 0.0 {
            total_usd / volume_total * 1e4
        } else {
            0.0
        }
    };
    let volume_weighted_bps = ComponentSet {
        l1_fee: vw(usd.l1_fee),
        l2_fee: vw(usd.l2_fee),
        gas_fee: vw(usd.gas_fee),
        lp_fee: vw(usd.lp_fee),
        block_slippage: vw(usd.block_slippage),
        price_impact: vw(usd.price_impact),
        slippage_plus_impact: vw(usd.slippage_plus_impact),
        total: vw(usd.total),
    };
    Some(SegmentAggregates {
        count: breakdowns.len(),
        volume_total,
        mean_usd,
        mean_bps,
        volume_weighted_bps,
    })
}

/// Builds the fee table, segmenting at `cutoff_timestamp` when given
/// (records strictly before the cutoff are "pre").
pub fn cost_table(breakdowns: &[FeeBreakdown], cutoff_timestamp: Option<i64>) -> Result<CostTable> {
    if breakdowns.is_empty() {
        return Err(MavError::InsufficientData(
            "cost table needs at least one breakdown".into(),
        ));
    }
    let all: Vec<&FeeBreakdown> = breakdowns.iter().collect();
    let whole = aggregate(&all).expect("nonempty by construction");
    let (pre_cutoff, post_cutoff) = match cutoff_timestamp {
        None => (None, None),
        Some(cutoff) => {
            let pre: Vec<&FeeBreakdown> = breakdowns
                .iter()
                .filter(|b| b.timestamp_sec < cutoff)
                .collect();
            let post: Vec<&FeeBreakdown> = breakdowns
                .iter()
                .filter(|b| b.timestamp_sec >= cutoff)
                .collect();
            (aggregate(&pre), aggregate(&post))
        }
    };
    Ok(CostTable {
        cutoff_timestamp,
        whole,
        pre_cutoff,
        post_cutoff,
    })
}

const COMPONENT_NAMES: [&str; 8] = [
    "l1_fee",
    "l2_fee",
    "gas_fee",
    "lp_fee",
    "block_slippage",
    "price_impact",
    "slippage_plus_impact",
    "total",
];

fn component(set: &ComponentSet, name: &str) -> f64 {
    match name {
        "l1_fee" => set.l1_fee,
        "l2_fee" => set.l2_fee,
        "gas_fee" => set.gas_fee,
        "lp_fee" => set.lp_fee,
        "block_slippage" => set.block_slippage,
        "price_impact" => set.price_impact,
        "slippage_plus_impact" => set.slippage_plus_impact,
        "total" => set.total,
        _ => unreachable!("unknown component {name}"),
    }
}

impl CostTable {
    /// Renders `segment,component,mean_usd,mean_bps,volume_weighted_bps`
    /// rows. Segments with no records emit empty value cells.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("segment,component,mean_usd,mean_bps,volume_weighted_bps\n");
        let mut emit = |segment: &str, agg: &Option<SegmentAggregates>| {
            for name in COMPONENT_NAMES {
                match agg {
                    Some(a) => out.push_str(&format!(
                        "{segment},{name},{},{},{}\n",
                        component(&a.mean_usd, name),
                        component(&a.mean_bps, name),
                        component(&a.volume_weighted_bps, name),
                    )),
                    None => out.push_str(&format!("{segment},{name},,,\n")),
                }
            }
        };
        emit("whole", &Some(self.whole));
        if self.cutoff_timestamp.is_some() {
            emit("pre_cutoff", &self.pre_cutoff);
            emit("post_cutoff", &self.post_cutoff);
        }
        out
    }
}
