//! The empirical misalignment pipeline: align per-block AMM prices with
//! per-second CEX closes, derive the re-alignment threshold from the
//! distribution of price gaps, detect contiguous misalignment episodes,
//! record one peak MAV per episode, measure decay times, and accumulate
//! per-block net LVR for comparison.
//!
//! Relative gaps are `d_b = |p_amm - p_cex| / p_cex`. An episode opens at
//! the first block with `d_b` strictly above the threshold and closes
//! before the first later block at or below it, so a constant series
//! yields zero episodes. Blocks without trades carry the last AMM price
//! and pool snapshot forward and keep episodes alive.

use serde::{Deserialize, Serialize};

use crate::amm::{FeeParams, PoolSnapshot};
use crate::arb::{pair_mav, snapshot_mav, ArbOpportunity};
use crate::ingest::{BlockState, CexTick, VenueMeta};
use crate::{MavError, Result};

/// One retained block paired with the CEX close at or before it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignedRecord {
    pub block_number: u64,
    pub timestamp_sec: i64,
    pub amm_price: f64,
    pub cex_price: f64,
    /// Index into [`AlignedSeries::snapshots`]; carried-forward blocks
    /// share their predecessor's snapshot.
    pub snapshot: usize,
    /// `false` when the block had no swap and carries the prior price.
    pub traded: bool,
}

impl AlignedRecord {
    /// Relative gap `|p_amm - p_cex| / p_cex`.
    pub fn gap(&self) -> f64 {
        (self.amm_price - self.cex_price).abs() / self.cex_price
    }
}

/// Per-block AMM and CEX prices on a common clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedSeries {
    pub venue: VenueMeta,
    pub records: Vec<AlignedRecord>,
    pub snapshots: Vec<PoolSnapshot>,
    /// Blocks dropped because no CEX close existed at or before them.
    pub dropped_records: usize,
}

/// Aligns per-block pool states with per-second CEX closes.
///
/// For chains producing several blocks per second only the last block of
/// each second is retained. Gaps in the retained block sequence are
/// filled with carry-forward records (`traded = false`) whose timestamps
/// interpolate linearly between the surrounding observed blocks, so that
/// quiet blocks keep episodes alive. Blocks before the first CEX close
/// are dropped and counted.
pub fn align(blocks: &[BlockState], cex: &[CexTick], venue: &VenueMeta) -> Result<AlignedSeries> {
    if blocks.is_empty() {
        return Err(MavError::EmptySeries("no pool blocks to align".into()));
    }
    if cex.is_empty() {
        return Err(MavError::EmptySeries("no CEX ticks to align".into()));
    }

    // Sub-second chains: keep the last block of each second.
    let sub_second = venue.block_time_sec < 1.0;
    let mut retained: Vec<&BlockState> = Vec::with_capacity(blocks.len());
    for block in blocks {
        if sub_second {
            if let Some(last) = retained.last() {
                if last.timestamp_sec == block.timestamp_sec {
                    retained.pop();
                }
            }
        }
        retained.push(block);
    }

    let mut records: Vec<AlignedRecord> = Vec::with_capacity(retained.len());
    let mut snapshots: Vec<PoolSnapshot> = Vec::with_capacity(retained.len());
    let mut dropped = 0usize;
    let mut cex_idx = 0usize;
    let mut prev: Option<(u64, i64)> = None; // (block_number, timestamp)

    for block in retained {
        // Latest CEX close at or before the block timestamp.
        while cex_idx + 1 < cex.len() && cex[cex_idx + 1].timestamp_sec <= block.timestamp_sec {
            cex_idx += 1;
        }
        if cex[cex_idx].timestamp_sec > block.timestamp_sec {
            dropped += 1;
            continue;
        }

        // Fill the block gap since the previous observed block with
        // carry-forward records on interpolated timestamps.
        if let Some((prev_block, prev_ts)) = prev {
            let span = block.block_number - prev_block;
            if span > 1 && !sub_second {
                let prev_snapshot = snapshots.len() - 1;
                let prev_record: AlignedRecord = *records.last().unwrap();
                for missing in (prev_block + 1)..block.block_number {
                    let frac = (missing - prev_block) as f64 / span as f64;
                    let ts =
                        prev_ts + ((block.timestamp_sec - prev_ts) as f64 * frac).round() as i64;
                    let mut cex_at = cex_idx;
                    while cex[cex_at].timestamp_sec > ts && cex_at > 0 {
                        cex_at -= 1;
                    }
                    records.push(AlignedRecord {
                        block_number: missing,
                        timestamp_sec: ts,
                        amm_price: prev_record.amm_price,
                        cex_price: cex[cex_at].close,
                        snapshot: prev_snapshot,
                        traded: false,
                    });
                }
            }
        }

        snapshots.push(block.snapshot.clone());
        records.push(AlignedRecord {
            block_number: block.block_number,
            timestamp_sec: block.timestamp_sec,
            amm_price: block.spot_price,
            cex_price: cex[cex_idx].close,
            snapshot: snapshots.len() - 1,
            traded: true,
        });
        prev = Some((block.block_number, block.timestamp_sec));
    }

    if records.is_empty() {
        return Err(MavError::EmptySeries(
            "no overlap between pool blocks and CEX ticks".into(),
        ));
    }
    Ok(AlignedSeries {
        venue: venue.clone(),
        records,
        snapshots,
        dropped_records: dropped,
    })
}

/// How the re-alignment threshold is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ThresholdConfig {
    /// Upper-outlier bound of the gap distribution:
    /// `Q3 + multiplier * (Q3 - Q1)` over absolute relative gaps.
    IqrOutlier { multiplier: f64 },
    /// A fixed gap threshold, for experiments.
    Fixed { value: f64 },
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        ThresholdConfig::IqrOutlier { multiplier: 1.5 }
    }
}

impl std::fmt::Display for ThresholdConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ThresholdConfig::IqrOutlier { multiplier } => write!(f, "iqr:{multiplier}"),
            ThresholdConfig::Fixed { value } => write!(f, "fixed:{value}"),
        }
    }
}

/// Linear-interpolation quantile (the R-7 rule): with `h = (n-1) q`, the
/// result interpolates between the order statistics at `floor(h)` and
/// `floor(h) + 1`. This rule is part of the report contract.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    debug_assert!(n > 0);
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo])
}

/// Derives the episode threshold from a series per the configured rule.
///
/// The IQR rule needs at least four records; a fixed threshold applies
/// regardless of the data.
pub fn derive_threshold(series: &AlignedSeries, cfg: &ThresholdConfig) -> Result<f64> {
    match cfg {
        ThresholdConfig::Fixed { value } => {
            if !value.is_finite() || *value <= 0.0 {
                return Err(MavError::InvalidInput(format!(
                    "fixed threshold {value} must be positive"
                )));
            }
            Ok(*value)
        }
        ThresholdConfig::IqrOutlier { multiplier } => {
            if !multiplier.is_finite() || *multiplier <= 0.0 {
                return Err(MavError::InvalidInput(format!(
                    "IQR multiplier {multiplier} must be positive"
                )));
            }
            if series.records.len() < 4 {
                return Err(MavError::InsufficientData(format!(
                    "IQR threshold needs at least 4 records, got {}",
                    series.records.len()
                )));
            }
            let mut gaps: Vec<f64> = series.records.iter().map(AlignedRecord::gap).collect();
            gaps.sort_by(|a, b| a.total_cmp(b));
            let q1 = quantile(&gaps, 0.25);
            let q3 = quantile(&gaps, 0.75);
            Ok(q3 + multiplier * (q3 - q1))
        }
    }
}

/// A maximal run of blocks whose gap strictly exceeds the threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub start_block: u64,
    /// First block back at or below the threshold (exclusive bound);
    /// `None` when the series ended mid-episode (censored).
    pub end_block: Option<u64>,
    pub peak_block: u64,
    /// The sized opportunity at the peak block.
    pub peak: ArbOpportunity,
    /// Gap at the peak block.
    pub peak_gap: f64,
    pub start_timestamp: i64,
    pub peak_timestamp: i64,
    pub end_timestamp: Option<i64>,
    /// Seconds from the peak block until re-alignment.
    pub decay_seconds_from_peak: Option<i64>,
    /// Seconds from the episode start until re-alignment.
    pub decay_seconds_from_start: Option<i64>,
    /// Number of in-episode blocks.
    pub block_count: usize,
}

impl Episode {
    pub fn censored(&self) -> bool {
        self.end_block.is_none()
    }
}

/// Runs the episode automaton over an aligned series.
///
/// Per-block MAV inside an episode is sized against that block's pool
/// snapshot; exactly the peak is recorded per episode. Episodes are
/// disjoint and ordered; an episode still open at the end of the series
/// is kept but marked censored.
pub fn detect_episodes(
    series: &AlignedSeries,
    threshold: f64,
    fees: &FeeParams,
) -> Result<Vec<Episode>> {
    if !threshold.is_finite() || threshold <= 0.0 {
        return Err(MavError::InvalidInput(format!(
            "threshold {threshold} must be positive"
        )));
    }
    struct Open {
        start_block: u64,
        start_timestamp: i64,
        peak_block: u64,
        peak_timestamp: i64,
        peak: ArbOpportunity,
        peak_gap: f64,
        blocks: usize,
    }
    let mut episodes = Vec::new();
    let mut open: Option<Open> = None;

    for record in &series.records {
        let gap = record.gap();
        if gap > threshold {
            let opp = snapshot_mav(&series.snapshots[record.snapshot], record.cex_price, fees)?;
            match open.as_mut() {
                None => {
                    open = Some(Open {
                        start_block: record.block_number,
                        start_timestamp: record.timestamp_sec,
                        peak_block: record.block_number,
                        peak_timestamp: record.timestamp_sec,
                        peak: opp,
                        peak_gap: gap,
                        blocks: 1,
                    });
                }
                Some(state) => {
                    state.blocks += 1;
                    if opp.mav > state.peak.mav {
                        state.peak = opp;
                        state.peak_block = record.block_number;
                        state.peak_timestamp = record.timestamp_sec;
                        state.peak_gap = gap;
                    }
                }
            }
        } else if let Some(state) = open.take() {
            episodes.push(Episode {
                start_block: state.start_block,
                end_block: Some(record.block_number),
                peak_block: state.peak_block,
                peak: state.peak,
                peak_gap: state.peak_gap,
                start_timestamp: state.start_timestamp,
                peak_timestamp: state.peak_timestamp,
                end_timestamp: Some(record.timestamp_sec),
                decay_seconds_from_peak: Some(record.timestamp_sec - state.peak_timestamp),
                decay_seconds_from_start: Some(record.timestamp_sec - state.start_timestamp),
                block_count: state.blocks,
            });
        }
    }
    if let Some(state) = open.take() {
        episodes.push(Episode {
            start_block: state.start_block,
            end_block: None,
            peak_block: state.peak_block,
            peak: state.peak,
            peak_gap: state.peak_gap,
            start_timestamp: state.start_timestamp,
            peak_timestamp: state.peak_timestamp,
            end_timestamp: None,
            decay_seconds_from_peak: None,
            decay_seconds_from_start: None,
            block_count: state.blocks,
        });
    }
    Ok(episodes)
}

/// Per-episode re-alignment durations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayTimes {
    /// From the peak block to the first re-aligned block; the headline
    /// metric.
    pub from_peak: Option<i64>,
    /// From the episode's first block to the first re-aligned block.
    pub from_start: Option<i64>,
    pub censored: bool,
}

/// Recomputes decay durations for episodes against their series.
///
/// Censored episodes (no re-aligned block before the series ended) get
/// `None` durations and are excluded from averages downstream.
pub fn decay_times(episodes: &[Episode], series: &AlignedSeries) -> Vec<DecayTimes> {
    episodes
        .iter()
        .map(|e| match e.end_block {
            None => DecayTimes {
                from_peak: None,
                from_start: None,
                censored: true,
            },
            Some(end_block) => {
                let end_ts = series
                    .records
                    .iter()
                    .find(|r| r.block_number == end_block)
                    .map(|r| r.timestamp_sec)
                    .or(e.end_timestamp)
                    .unwrap_or(e.peak_timestamp);
                DecayTimes {
                    from_peak: Some(end_ts - e.peak_timestamp),
                    from_start: Some(end_ts - e.start_timestamp),
                    censored: false,
                }
            }
        })
        .collect()
}

/// Per-block MAV summed over every block with no episode filtering: the
/// net-LVR comparator, which double-counts persistent gaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LvrAccumulator {
    pub total_net_lvr: f64,
    /// `(block_number, per-block MAV)` contributions.
    pub per_block: Vec<(u64, f64)>,
}

/// Accumulates per-block MAV over the whole series.
pub fn accumulate_lvr(series: &AlignedSeries, fees: &FeeParams) -> Result<LvrAccumulator> {
    if series.records.is_empty() {
        return Err(MavError::EmptySeries(
            "cannot accumulate over empty series".into(),
        ));
    }
    let mut per_block = Vec::with_capacity(series.records.len());
    let mut total = 0.0;
    for record in &series.records {
        let opp = snapshot_mav(&series.snapshots[record.snapshot], record.cex_price, fees)?;
        total += opp.mav;
        per_block.push((record.block_number, opp.mav));
    }
    Ok(LvrAccumulator {
        total_net_lvr: total,
        per_block,
    })
}

/// Pairwise price-gap and MAV matrices across venues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossMatrices {
    pub venues: Vec<String>,
    /// Mean relative price difference per pair, `None` when the pair had
    /// no overlapping seconds. Symmetric with zero diagonal.
    pub gap: Vec<Vec<Option<f64>>>,
    /// Episode-filtered pairwise MAV totals, symmetric with zero
    /// diagonal.
    pub mav: Vec<Vec<Option<f64>>>,
    /// Pairs excluded for having no common time window.
    pub warnings: Vec<String>,
}

/// Per-second view of one venue within a common window.
struct SecondGrid<'a> {
    seconds: Vec<i64>,
    records: Vec<&'a AlignedRecord>,
    snapshots: &'a [PoolSnapshot],
}

fn resample_to_seconds<'a>(series: &'a AlignedSeries, from: i64, to: i64) -> Option<SecondGrid<'a>> {
    if from > to {
        return None;
    }
    let mut seconds = Vec::new();
    let mut records = Vec::new();
    let mut idx = 0usize;
    for t in from..=to {
        while idx + 1 < series.records.len() && series.records[idx + 1].timestamp_sec <= t {
            idx += 1;
        }
        if series.records[idx].timestamp_sec > t {
            continue;
        }
        seconds.push(t);
        records.push(&series.records[idx]);
    }
    if seconds.is_empty() {
        None
    } else {
        Some(SecondGrid {
            seconds,
            records,
            snapshots: &series.snapshots,
        })
    }
}

/// Builds the cross-venue comparison: for each venue pair, the mean
/// per-second relative price gap (symmetric midpoint denominator) and
/// the episode-filtered pairwise MAV total under the same threshold
/// methodology, sized fee-free between the two pools.
pub fn cross_matrix(series: &[AlignedSeries], cfg: &ThresholdConfig) -> Result<CrossMatrices> {
    if series.len() < 2 {
        return Err(MavError::InvalidInput(format!(
            "cross matrix needs at least 2 venues, got {}",
            series.len()
        )));
    }
    let n = series.len();
    let venues: Vec<String> = series.iter().map(|s| s.venue.chain.clone()).collect();
    let mut gap = vec![vec![None; n]; n];
    let mut mav = vec![vec![None; n]; n];
    let mut warnings = Vec::new();
    for i in 0..n {
        gap[i][i] = Some(0.0);
        mav[i][i] = Some(0.0);
    }

    for i in 0..n {
        for j in (i + 1)..n {
            let a = &series[i];
            let b = &series[j];
            let from = a.records[0].timestamp_sec.max(b.records[0].timestamp_sec);
            let to = a
                .records
                .last()
                .unwrap()
                .timestamp_sec
                .min(b.records.last().unwrap().timestamp_sec);
            let (Some(ga), Some(gb)) =
                (resample_to_seconds(a, from, to), resample_to_seconds(b, from, to))
            else {
                warnings.push(format!(
                    "venues {} and {} share no time window",
                    venues[i], venues[j]
                ));
                continue;
            };
            // Intersect the two second grids.
            let mut pairs: Vec<(&AlignedRecord, &AlignedRecord)> = Vec::new();
            let mut bi = 0usize;
            for (ai, &t) in ga.seconds.iter().enumerate() {
                while bi < gb.seconds.len() && gb.seconds[bi] < t {
                    bi += 1;
                }
                if bi < gb.seconds.len() && gb.seconds[bi] == t {
                    pairs.push((ga.records[ai], gb.records[bi]));
                }
            }
            if pairs.is_empty() {
                warnings.push(format!(
                    "venues {} and {} share no time window",
                    venues[i], venues[j]
                ));
                continue;
            }

            let gaps: Vec<f64> = pairs
                .iter()
                .map(|(ra, rb)| {
                    let mid = 0.5 * (ra.amm_price + rb.amm_price);
                    (ra.amm_price - rb.amm_price).abs() / mid
                })
                .collect();
            let mean_gap = gaps.iter().sum::<f64>() / gaps.len() as f64;
            gap[i][j] = Some(mean_gap);
            gap[j][i] = Some(mean_gap);

            let threshold = match cfg {
                ThresholdConfig::Fixed { value } => *value,
                ThresholdConfig::IqrOutlier { multiplier } => {
                    if gaps.len() < 4 {
                        warnings.push(format!(
                            "pair {}/{} too short for IQR threshold",
                            venues[i], venues[j]
                        ));
                        continue;
                    }
                    let mut sorted = gaps.clone();
                    sorted.sort_by(|x, y| x.total_cmp(y));
                    let q1 = quantile(&sorted, 0.25);
                    let q3 = quantile(&sorted, 0.75);
                    q3 + multiplier * (q3 - q1)
                }
            };

            // Episode automaton over seconds; one peak MAV per episode.
            let mut total = 0.0;
            let mut open_peak: Option<f64> = None;
            for (idx, (ra, rb)) in pairs.iter().enumerate() {
                if gaps[idx] > threshold {
                    let value = pair_mav(&ga.snapshots[ra.snapshot], &gb.snapshots[rb.snapshot])?;
                    open_peak = Some(open_peak.map_or(value, |p: f64| p.max(value)));
                } else if let Some(peak) = open_peak.take() {
                    total += peak;
                }
            }
            if let Some(peak) = open_peak {
                total += peak;
            }
            mav[i][j] = Some(total);
            mav[j][i] = Some(total);
        }
    }
    Ok(CrossMatrices {
        venues,
        gap,
        mav,
        warnings,
    })
}
