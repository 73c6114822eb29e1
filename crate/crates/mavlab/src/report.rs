//! Serializable analysis outputs: the per-venue report, episode tables,
//! per-day series, and cross-venue matrices.
//!
//! All serialization here is deterministic: identical inputs produce
//! byte-identical files.

use std::fmt::Write as _;

use chrono::DateTime;
use serde::{Deserialize, Serialize};

use crate::episodes::{AlignedSeries, CrossMatrices, Episode, LvrAccumulator};
use crate::ingest::VenueMeta;
use crate::Result;

/// Quantile rule used by the IQR threshold; part of the wire contract.
pub const QUANTILE_RULE: &str = "linear-interpolation (R-7)";

/// Aggregate totals of one venue run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VenueTotals {
    /// Sum of per-episode peak MAV (censored episodes included).
    pub mav_total: f64,
    /// Sum of per-block MAV over all blocks.
    pub lvr_total: f64,
    /// Quote-side trading volume of the ingested swaps.
    pub volume_total: f64,
    /// Percent of volume; `null` when the volume is zero.
    pub mav_pct_of_volume: Option<f64>,
    pub lvr_pct_of_volume: Option<f64>,
}

/// Episode statistics of one venue run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VenueCounts {
    pub episodes: usize,
    pub censored_episodes: usize,
    pub avg_mav: Option<f64>,
    pub avg_dx_max: Option<f64>,
    /// Mean peak-to-realignment decay over non-censored episodes.
    pub avg_decay_seconds: Option<f64>,
}

/// One episode as reported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub start_block: u64,
    pub peak_block: u64,
    pub end_block: Option<u64>,
    pub peak_mav: f64,
    pub dx_max: f64,
    pub decay_peak_s: Option<i64>,
    pub decay_start_s: Option<i64>,
    pub peak_gap: f64,
    pub block_count: usize,
    pub censored: bool,
}

impl From<&Episode> for EpisodeRow {
    fn from(e: &Episode) -> Self {
        EpisodeRow {
            start_block: e.start_block,
            peak_block: e.peak_block,
            end_block: e.end_block,
            peak_mav: e.peak.mav,
            dx_max: e.peak.dx_max,
            decay_peak_s: e.decay_seconds_from_peak,
            decay_start_s: e.decay_seconds_from_start,
            peak_gap: e.peak_gap,
            block_count: e.block_count,
            censored: e.censored(),
        }
    }
}

/// The full per-venue analysis report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VenueReport {
    pub venue: VenueMeta,
    pub threshold: f64,
    pub threshold_method: String,
    pub quantile_rule: String,
    pub record_count: usize,
    pub dropped_records: usize,
    pub totals: VenueTotals,
    pub counts: VenueCounts,
    pub episodes: Vec<EpisodeRow>,
}

/// Assembles the report from pipeline outputs.
pub fn build_venue_report(
    series: &AlignedSeries,
    episodes: &[Episode],
    lvr: &LvrAccumulator,
    volume_total: f64,
    threshold: f64,
    threshold_method: &str,
) -> VenueReport {
    let mav_total: f64 = episodes.iter().map(|e| e.peak.mav).sum();
    let pct = |v: f64| {
        if volume_total > 0.0 {
            Some(v / volume_total * 100.0)
        } else {
            None
        }
    };
    let decays: Vec<f64> = episodes
        .iter()
        .filter_map(|e| e.decay_seconds_from_peak)
        .map(|d| d as f64)
        .collect();
    let mean = |values: &[f64]| {
        if values.is_empty() {
            None
        } else {
            Some(values.iter().sum::<f64>() / values.len() as f64)
        }
    };
    let mavs: Vec<f64> = episodes.iter().map(|e| e.peak.mav).collect();
    let dxs: Vec<f64> = episodes.iter().map(|e| e.peak.dx_max).collect();

    VenueReport {
        venue: series.venue.clone(),
        threshold,
        threshold_method: threshold_method.to_string(),
        quantile_rule: QUANTILE_RULE.to_string(),
        record_count: series.records.len(),
        dropped_records: series.dropped_records,
        totals: VenueTotals {
            mav_total,
            lvr_total: lvr.total_net_lvr,
            volume_total,
            mav_pct_of_volume: pct(mav_total),
            lvr_pct_of_volume: pct(lvr.total_net_lvr),
        },
        counts: VenueCounts {
            episodes: episodes.len(),
            censored_episodes: episodes.iter().filter(|e| e.censored()).count(),
            avg_mav: mean(&mavs),
            avg_dx_max: mean(&dxs),
            avg_decay_seconds: mean(&decays),
        },
        episodes: episodes.iter().map(EpisodeRow::from).collect(),
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

fn push_opt<T: std::fmt::Display>(out: &mut String, value: &Option<T>) {
    if let Some(v) = value {
        write!(out, "{v}").expect("string write");
    }
}

/// Episode table CSV: one row per episode, empty cells for censored
/// boundaries.
pub fn episodes_csv(episodes: &[EpisodeRow]) -> String {
    let mut out =
        String::from("start_block,peak_block,end_block,peak_mav,dx_max,decay_peak_s,decay_start_s\n");
    for e in episodes {
        write!(out, "{},{},", e.start_block, e.peak_block).expect("string write");
        push_opt(&mut out, &e.end_block);
        write!(out, ",{},{},", e.peak_mav, e.dx_max).expect("string write");
        push_opt(&mut out, &e.decay_peak_s);
        out.push(',');
        push_opt(&mut out, &e.decay_start_s);
        out.push('\n');
    }
    out
}

/// One per-day summary row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyRow {
    /// UTC calendar date.
    pub date: String,
    /// Sum of peak MAV over episodes peaking that day.
    pub mav_sum: f64,
    /// Largest relative gap observed that day.
    pub max_gap: f64,
    /// Current-price liquidity depth at the day's last block.
    pub end_liquidity: f64,
}

fn utc_date(timestamp_sec: i64) -> String {
    DateTime::from_timestamp(timestamp_sec, 0)
        .map(|dt| dt.date_naive().to_string())
        .unwrap_or_else(|| format!("epoch+{timestamp_sec}s"))
}

/// Builds the per-day series: daily episode-MAV sum, the day's maximum
/// gap, and end-of-day current-price liquidity.
pub fn daily_series(series: &AlignedSeries, episodes: &[Episode]) -> Vec<DailyRow> {
    let mut rows: Vec<DailyRow> = Vec::new();
    for record in &series.records {
        let date = utc_date(record.timestamp_sec);
        let liquidity = series.snapshots[record.snapshot].current_liquidity();
        match rows.last_mut() {
            Some(row) if row.date == date => {
                row.max_gap = row.max_gap.max(record.gap());
                row.end_liquidity = liquidity;
            }
            _ => rows.push(DailyRow {
                date,
                mav_sum: 0.0,
                max_gap: record.gap(),
                end_liquidity: liquidity,
            }),
        }
    }
    for episode in episodes {
        let date = utc_date(episode.peak_timestamp);
        if let Some(row) = rows.iter_mut().find(|r| r.date == date) {
            row.mav_sum += episode.peak.mav;
        }
    }
    rows
}

/// Daily series CSV.
pub fn daily_csv(rows: &[DailyRow]) -> String {
    let mut out = String::from("date,mav_sum,max_gap,end_liquidity\n");
    for r in rows {
        writeln!(out, "{},{},{},{}", r.date, r.mav_sum, r.max_gap, r.end_liquidity)
            .expect("string write");
    }
    out
}

/// Which cross-venue matrix to render.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    Gap,
    Mav,
}

/// Renders one matrix as CSV with venue names on both axes; pairs with
/// no overlap render as empty cells.
pub fn matrix_csv(matrices: &CrossMatrices, kind: MatrixKind) -> String {
    let cells = match kind {
        MatrixKind::Gap => &matrices.gap,
        MatrixKind::Mav => &matrices.mav,
    };
    let mut out = String::from("venue");
    for name in &matrices.venues {
        write!(out, ",{name}").expect("string write");
    }
    out.push('\n');
    for (i, name) in matrices.venues.iter().enumerate() {
        out.push_str(name);
        for cell in &cells[i] {
            out.push(',');
            push_opt(&mut out, cell);
        }
        out.push('\n');
    }
    out
}
