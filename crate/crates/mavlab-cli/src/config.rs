//! Run configuration: a TOML file describing venues (and optionally a
//! simulation), with command-line flags taking precedence.

use std::path::Path;

use mavlab::amm::{FeeParams, TokenMeta};
use mavlab::episodes::ThresholdConfig;
use mavlab::ingest::{PoolKind, VenueConfig};
use mavlab::sim::SimSpec;
use mavlab::MavError;
use serde::Deserialize;

#[derive(Debug, Deserialize)]
pub struct ConfigFile {
    /// Default threshold rule, e.g. `iqr:1.5` or `fixed:0.0005`; the
    /// `--threshold` flag wins.
    pub threshold: Option<String>,
    pub venue: Option<VenueToml>,
    #[serde(default)]
    pub venues: Vec<VenueToml>,
    pub sim: Option<SimSpec>,
}

#[derive(Debug, Deserialize)]
pub struct TokenToml {
    pub symbol: String,
    pub decimals: u8,
    #[serde(default)]
    pub bridged: bool,
}

#[derive(Debug, Deserialize)]
pub struct VenueToml {
    pub chain: String,
    pub block_time_sec: Option<f64>,
    pub pool_kind: PoolKind,
    pub lp_fee: f64,
    #[serde(default)]
    pub cex_fee: f64,
    #[serde(default)]
    pub gas_fee: f64,
    pub token0: TokenToml,
    pub token1: TokenToml,
}

impl VenueToml {
    pub fn build(&self) -> Result<VenueConfig, MavError> {
        let block_time_sec = self
            .block_time_sec
            .or_else(|| VenueConfig::default_block_time(&self.chain))
            .ok_or_else(|| {
                MavError::InvalidInput(format!(
                    "no block_time_sec given and no default for chain {:?}",
                    self.chain
                ))
            })?;
        if block_time_sec <= 0.0 {
            return Err(MavError::InvalidInput(format!(
                "block_time_sec {block_time_sec} must be positive"
            )));
        }
        Ok(VenueConfig {
            chain: self.chain.clone(),
            block_time_sec,
            pool_kind: self.pool_kind,
            fee: FeeParams::new(self.lp_fee, self.cex_fee, self.gas_fee)?,
            token0: TokenMeta::new(&self.token0.symbol, self.token0.decimals, self.token0.bridged)?,
            token1: TokenMeta::new(&self.token1.symbol, self.token1.decimals, self.token1.bridged)?,
        })
    }
}

pub fn load_config(path: &Path) -> Result<ConfigFile, MavError> {
    let text = std::fs::read_to_string(path)?;
    toml::from_str(&text)
        .map_err(|e| MavError::InvalidInput(format!("config {}: {e}", path.display())))
}

/// Parses `iqr:K` or `fixed:V`.
pub fn parse_threshold(spec: &str) -> Result<ThresholdConfig, MavError> {
    let bad = || {
        MavError::InvalidInput(format!(
            "threshold {spec:?} must be iqr:<multiplier> or fixed:<value>"
        ))
    };
    let (kind, value) = spec.split_once(':').ok_or_else(bad)?;
    let value: f64 = value.parse().map_err(|_| bad())?;
    match kind {
        "iqr" => Ok(ThresholdConfig::IqrOutlier { multiplier: value }),
        "fixed" => Ok(ThresholdConfig::Fixed { value }),
        _ => Err(bad()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_threshold_specs() {
        assert_eq!(
            parse_threshold("iqr:1.5").unwrap(),
            ThresholdConfig::IqrOutlier { multiplier: 1.5 }
        );
        assert_eq!(
            parse_threshold("fixed:0.0005").unwrap(),
            ThresholdConfig::Fixed { value: 0.0005 }
        );
        assert!(parse_threshold("median:3").is_err());
        assert!(parse_threshold("iqr").is_err());
    }

    #[test]
    fn builds_venue_with_default_block_time() {
        let toml_text = r#"
            [venue]
            chain = "arbitrum"
            pool_kind = "clmm"
            lp_fee = 0.0005
            cex_fee = 0.001
            [venue.token0]
            symbol = "WETH"
            decimals = 18
            [venue.token1]
            symbol = "USDC"
            decimals = 6
            bridged = true
        "#;
        let cfg: ConfigFile = toml::from_str(toml_text).unwrap();
        let venue = cfg.venue.unwrap().build().unwrap();
        assert_eq!(venue.block_time_sec, 0.25);
        assert_eq!(venue.pool_kind, PoolKind::Clmm);
        assert!(venue.token1.bridged);
    }

    #[test]
    fn rejects_unknown_chain_without_block_time() {
        let toml_text = r#"
            [venue]
            chain = "testnet"
            pool_kind = "cpmm"
            lp_fee = 0.003
            [venue.token0]
            symbol = "A"
            decimals = 18
            [venue.token1]
            symbol = "B"
            decimals = 18
        "#;
        let cfg: ConfigFile = toml::from_str(toml_text).unwrap();
        assert!(cfg.venue.unwrap().build().is_err());
    }
}
