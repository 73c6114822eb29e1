//! Subcommand implementations. Each one reads inputs, runs the pipeline,
//! and writes a deterministic output tree under `--out`.

use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use mavlab::episodes::{
    accumulate_lvr, align, cross_matrix, derive_threshold, detect_episodes, AlignedSeries,
    ThresholdConfig,
};
use mavlab::ingest::{load_cex, load_swaps, SwapFormat, VenueConfig};
use mavlab::report::{
    build_venue_report, daily_csv, daily_series, episodes_csv, matrix_csv, to_json_pretty,
    EpisodeRow, MatrixKind,
};
use mavlab::sim::{write_fixture, SimSpec};
use mavlab::{MavError, Result};

/// Tabular output format; the main report is always JSON.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Json,
}

fn ensure_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn load_aligned(
    swaps: &Path,
    cex_path: &Path,
    venue: &VenueConfig,
) -> Result<(AlignedSeries, f64)> {
    let dataset = load_swaps(swaps, SwapFormat::from_path(swaps), venue)?;
    if dataset.blocks.is_empty() {
        return Err(MavError::EmptySeries(format!(
            "swap file {} holds no events",
            swaps.display()
        )));
    }
    let cex = load_cex(cex_path)?;
    if cex.gap_seconds > 0 {
        info!(
            "CEX series has {} missing seconds; latest prior close is used",
            cex.gap_seconds
        );
    }
    let series = align(&dataset.blocks, &cex.ticks, &venue.meta())?;
    if series.dropped_records > 0 {
        warn!(
            "{} blocks before the first CEX close were dropped",
            series.dropped_records
        );
    }
    Ok((series, dataset.volume_quote))
}

/// `mav`: one venue against the CEX reference; writes the report JSON,
/// the episode table, and the per-day series.
pub fn cmd_mav(
    swaps: &Path,
    cex: &Path,
    venue: &VenueConfig,
    threshold_cfg: &ThresholdConfig,
    out: &Path,
    format: TableFormat,
) -> Result<Vec<PathBuf>> {
    let (series, volume) = load_aligned(swaps, cex, venue)?;
    let threshold = derive_threshold(&series, threshold_cfg)?;
    let episodes = detect_episodes(&series, threshold, &venue.fee)?;
    let lvr = accumulate_lvr(&series, &venue.fee)?;
    let report = build_venue_report(
        &series,
        &episodes,
        &lvr,
        volume,
        threshold,
        &threshold_cfg.to_string(),
    );

    ensure_out(out)?;
    let mut written = Vec::new();
    let report_path = out.join("report.json");
    fs::write(&report_path, to_json_pretty(&report)?)?;
    written.push(report_path);

    let rows: Vec<EpisodeRow> = report.episodes.clone();
    match format {
        TableFormat::Csv => {
            let episodes_path = out.join("episodes.csv");
            fs::write(&episodes_path, episodes_csv(&rows))?;
            written.push(episodes_path);
            let daily_path = out.join("daily.csv");
            fs::write(&daily_path, daily_csv(&daily_series(&series, &episodes)))?;
            written.push(daily_path);
        }
        TableFormat::Json => {
            let episodes_path = out.join("episodes.json");
            fs::write(&episodes_path, to_json_pretty(&rows)?)?;
            written.push(episodes_path);
            let daily_path = out.join("daily.json");
            fs::write(&daily_path, to_json_pretty(&daily_series(&series, &episodes))?)?;
            written.push(daily_path);
        }
    }
    println!(
        "mav: {} episodes, mav_total {}, lvr_total {}, threshold {} -> {}",
        report.counts.episodes,
        report.totals.mav_total,
        report.totals.lvr_total,
        report.threshold,
        out.display()
    );
    Ok(written)
}

/// `cross`: pairwise price-gap and MAV matrices across several venues.
pub fn cmd_cross(
    swaps: &[PathBuf],
    cex: &Path,
    venues: &[VenueConfig],
    threshold_cfg: &ThresholdConfig,
    out: &Path,
    format: TableFormat,
) -> Result<Vec<PathBuf>> {
    if swaps.len() != venues.len() {
        return Err(MavError::InvalidInput(format!(
            "{} swap files given for {} configured venues",
            swaps.len(),
            venues.len()
        )));
    }
    if swaps.len() < 2 {
        return Err(MavError::InvalidInput(
            "cross needs at least two --swaps files".into(),
        ));
    }
    let mut series = Vec::with_capacity(swaps.len());
    for (path, venue) in swaps.iter().zip(venues) {
        let (aligned, _) = load_aligned(path, cex, venue)?;
        series.push(aligned);
    }
    let matrices = cross_matrix(&series, threshold_cfg)?;
    for warning in &matrices.warnings {
        warn!("{warning}");
    }

    ensure_out(out)?;
    let mut written = Vec::new();
    match format {
        TableFormat::Csv => {
            let gap_path = out.join("gap_matrix.csv");
            fs::write(&gap_path, matrix_csv(&matrices, MatrixKind::Gap))?;
            written.push(gap_path);
            let mav_path = out.join("mav_matrix.csv");
            fs::write(&mav_path, matrix_csv(&matrices, MatrixKind::Mav))?;
            written.push(mav_path);
        }
        TableFormat::Json => {
            let path = out.join("matrices.json");
            fs::write(&path, to_json_pretty(&matrices)?)?;
            written.push(path);
        }
    }
    println!(
        "cross: {} venues, {} warnings -> {}",
        matrices.venues.len(),
        matrices.warnings.len(),
        out.display()
    );
    Ok(written)
}

/// `costs`: per-swap decomposition aggregated into the fee table.
pub fn cmd_costs(
    swaps: &Path,
    venue: &VenueConfig,
    cutoff: Option<i64>,
    out: &Path,
    format: TableFormat,
) -> Result<Vec<PathBuf>> {
    let dataset = load_swaps(swaps, SwapFormat::from_path(swaps), venue)?;
    if dataset.records.is_empty() {
        return Err(MavError::EmptySeries(format!(
            "swap file {} holds no events",
            swaps.display()
        )));
    }
    let breakdowns = mavlab::costs::decompose_dataset(&dataset.records, venue)?;
    let missing_gas = breakdowns.iter().filter(|b| b.gas_missing).count();
    if missing_gas > 0 {
        warn!("{missing_gas} swaps had no gas columns; their gas cost is zero");
    }
    let table = mavlab::costs::cost_table(&breakdowns, cutoff)?;

    ensure_out(out)?;
    let mut written = Vec::new();
    match format {
        TableFormat::Csv => {
            let path = out.join("cost_table.csv");
            fs::write(&path, table.to_csv_string())?;
            written.push(path);
        }
        TableFormat::Json => {
            let path = out.join("cost_table.json");
            fs::write(&path, to_json_pretty(&table)?)?;
            written.push(path);
        }
    }
    println!(
        "costs: {} swaps, mean total {} bps -> {}",
        table.whole.count,
        table.whole.mean_bps.total,
        out.display()
    );
    Ok(written)
}

/// `simulate`: writes the synthetic fixture and prints the manifest path.
pub fn cmd_simulate(spec: &SimSpec, venue: &VenueConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let paths = write_fixture(out, spec, venue)?;
    println!("{}", paths.manifest.display());
    Ok(vec![paths.swaps, paths.cex, paths.manifest])
}
