//! Scenario configuration: the declarative description of one experiment.
//!
//! Scenarios are TOML files with nested sections mirroring the runtime types.
//! Channel entries may omit derivable fields (band, SIFS, ...); parsing
//! resolves them against the channel-numbering rules and emits a fully
//! explicit config that reproduces the run bit-for-bit.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::impairments::ImpairmentConfig;
use crate::mac::{ApConfig, Band, ChannelConfig, ChannelId, LossModel};
use crate::time::{millis, SimTime};
use crate::traffic::{AciExperimentConfig, BurstLoadConfig, StreamConfig};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config at {path}: {message}")]
    Invalid { path: String, message: String },
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        path: path.into(),
        message: message.into(),
    }
}

/// A fully resolved, validated experiment description.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    /// Generation horizon in ms; packets are generated in `[0, duration)`.
    pub duration_ms: u64,
    pub channels: Vec<ChannelConfig>,
    pub ap: ApConfig,
    pub impairments: ImpairmentConfig,
    pub streams: Vec<StreamConfig>,
    pub loads: Vec<BurstLoadConfig>,
    pub aci_experiment: Option<AciExperimentConfig>,
}

/// TOML-facing form of a channel: only the number is mandatory.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelEntry {
    channel_number: ChannelId,
    band: Option<Band>,
    bitrate: Option<u32>,
    ack_bitrate: Option<u32>,
    slot: Option<u64>,
    sifs: Option<u64>,
    cw_min: Option<u32>,
    retry_limit: Option<u32>,
    loss_model: Option<LossModel>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    #[serde(default = "default_seed")]
    seed: u64,
    duration_ms: Option<u64>,
    channels: Vec<ChannelEntry>,
    #[serde(default)]
    ap: ApConfig,
    #[serde(default)]
    impairments: ImpairmentConfig,
    #[serde(default)]
    streams: Vec<StreamConfig>,
    #[serde(default)]
    loads: Vec<BurstLoadConfig>,
    aci_experiment: Option<AciExperimentConfig>,
}

fn default_seed() -> u64 {
    1
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Scenario, ScenarioError> {
        let file: ScenarioFile =
            toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        Scenario::resolve(file)
    }

    fn resolve(file: ScenarioFile) -> Result<Scenario, ScenarioError> {
        let mut channels = Vec::new();
        for (i, entry) in file.channels.into_iter().enumerate() {
            let path = format!("channels[{i}]");
            let mut cfg = ChannelConfig::new(entry.channel_number)
                .map_err(|e| invalid(format!("{path}.channel_number"), e.to_string()))?;
            if let Some(band) = entry.band {
                cfg.band = band;
            }
            if let Some(v) = entry.bitrate {
                cfg.bitrate = v;
            }
            if let Some(v) = entry.ack_bitrate {
                cfg.ack_bitrate = v;
            }
            if let Some(v) = entry.slot {
                cfg.slot = v;
            }
            if let Some(v) = entry.sifs {
                cfg.sifs = v;
            }
            if let Some(v) = entry.cw_min {
                cfg.cw_min = v;
            }
            if let Some(v) = entry.retry_limit {
                cfg.retry_limit = v;
            }
            if let Some(v) = entry.loss_model {
                cfg.loss_model = v;
            }
            cfg.validate().map_err(|e| invalid(path, e))?;
            channels.push(cfg);
        }

        let duration_ms = match file.duration_ms {
            Some(d) => d,
            None => {
                // Derive a horizon from packet counts when no duration given.
                let mut horizon_ns: u64 = 0;
                for s in &file.streams {
                    if let Some(c) = s.count {
                        horizon_ns = horizon_ns.max(s.start_phase + (c + 1) * s.tc);
                    }
                }
                if let Some(aci) = &file.aci_experiment {
                    if let Some(c) = aci.count {
                        horizon_ns = horizon_ns.max((c + 2) * aci.tc);
                    }
                }
                if horizon_ns == 0 {
                    return Err(invalid(
                        "duration_ms",
                        "either duration_ms or a packet count is required",
                    ));
                }
                horizon_ns.div_ceil(millis(1))
            }
        };

        let scenario = Scenario {
            name: file.name,
            seed: file.seed,
            duration_ms,
            channels,
            ap: file.ap,
            impairments: file.impairments,
            streams: file.streams,
            loads: file.loads,
            aci_experiment: file.aci_experiment,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.name.is_empty() {
            return Err(invalid("name", "name must not be empty"));
        }
        if self.duration_ms == 0 {
            return Err(invalid("duration_ms", "duration must be positive"));
        }
        if self.channels.is_empty() {
            return Err(invalid("channels", "at least one channel is required"));
        }
        let mut seen = Vec::new();
        for (i, c) in self.channels.iter().enumerate() {
            if seen.contains(&c.channel_number) {
                return Err(invalid(
                    format!("channels[{i}].channel_number"),
                    format!("duplicate channel {}", c.channel_number),
                ));
            }
            seen.push(c.channel_number);
            c.validate()
                .map_err(|e| invalid(format!("channels[{i}]"), e))?;
        }

        self.impairments
            .validate()
            .map_err(|e| invalid("impairments", e))?;

        if self.streams.is_empty() && self.aci_experiment.is_none() {
            return Err(invalid(
                "streams",
                "a measurement stream or an aci_experiment is required",
            ));
        }
        if !self.streams.is_empty() && self.aci_experiment.is_some() {
            return Err(invalid(
                "streams",
                "streams and aci_experiment are mutually exclusive",
            ));
        }
        if self.streams.len() > 1 {
            return Err(invalid(
                "streams",
                "exactly one measurement stream per scenario",
            ));
        }
        for (i, s) in self.streams.iter().enumerate() {
            s.validate()
                .map_err(|e| invalid(format!("streams[{i}]"), e))?;
            for ch in &s.channels {
                if !seen.contains(ch) {
                    return Err(invalid(
                        format!("streams[{i}].channels"),
                        format!("stream references unknown channel {ch}"),
                    ));
                }
            }
        }
        for (i, l) in self.loads.iter().enumerate() {
            l.validate()
                .map_err(|e| invalid(format!("loads[{i}]"), e))?;
            if !seen.contains(&l.channel) {
                return Err(invalid(
                    format!("loads[{i}].channel"),
                    format!("load references unknown channel {}", l.channel),
                ));
            }
        }
        if let Some(aci) = &self.aci_experiment {
            aci.validate().map_err(|e| invalid("aci_experiment", e))?;
            for (field, ch) in [("channel_m", aci.channel_m), ("channel_i", aci.channel_i)] {
                if !seen.contains(&ch) {
                    return Err(invalid(
                        format!("aci_experiment.{field}"),
                        format!("references unknown channel {ch}"),
                    ));
                }
            }
            if aci.channel_m == aci.channel_i {
                return Err(invalid(
                    "aci_experiment.channel_i",
                    "interfering channel must differ from the channel under test",
                ));
            }
        }
        Ok(())
    }

    pub fn duration(&self) -> SimTime {
        SimTime(millis(self.duration_ms))
    }

    pub fn channel(&self, id: ChannelId) -> Option<&ChannelConfig> {
        self.channels.iter().find(|c| c.channel_number == id)
    }

    /// Fully explicit TOML, suitable for bit-exact re-runs.
    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }

    /// Hex SHA-256 of the resolved config text.
    pub fn config_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.to_toml_string().as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traffic::StreamKind;

    const MINIMAL: &str = r#"
        name = "baseline"
        seed = 42
        duration_ms = 1000

        [[channels]]
        channel_number = 1

        [[channels]]
        channel_number = 165

        [[streams]]
        kind = "unicast-up"
        tc = 100000000
        payload = 50
        channels = [1, 165]
    "#;

    #[test]
    fn minimal_config_resolves_with_derived_defaults() {
        let s = Scenario::from_toml_str(MINIMAL).unwrap();
        assert_eq!(s.channels[0].band, Band::Ghz2_4);
        assert_eq!(s.channels[0].sifs, 10_000);
        assert_eq!(s.channels[1].band, Band::Ghz5);
        assert_eq!(s.channels[1].sifs, 16_000);
        assert_eq!(s.channels[1].bitrate, 54);
        assert_eq!(s.streams[0].kind, StreamKind::UnicastUp);
    }

    #[test]
    fn resolved_config_round_trips() {
        let s = Scenario::from_toml_str(MINIMAL).unwrap();
        let text = s.to_toml_string();
        let s2 = Scenario::from_toml_str(&text).unwrap();
        assert_eq!(s, s2);
        assert_eq!(s.config_hash(), s2.config_hash());
    }

    #[test]
    fn unknown_stream_channel_is_named_in_the_error() {
        let bad = MINIMAL.replace("channels = [1, 165]", "channels = [1, 7]");
        let err = Scenario::from_toml_str(&bad).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("streams[0].channels"), "{msg}");
        assert!(msg.contains("unknown channel 7"), "{msg}");
    }

    #[test]
    fn invalid_band_pairing_is_rejected() {
        let bad = r#"
            name = "x"
            duration_ms = 10
            [[channels]]
            channel_number = 165
            band = "2.4GHz"
            [[streams]]
            tc = 1000000
            channels = [165]
        "#;
        let err = Scenario::from_toml_str(bad).unwrap_err();
        assert!(err.to_string().contains("channels[0]"), "{err}");
    }

    #[test]
    fn duration_derived_from_count() {
        let cfg = r#"
            name = "counted"
            [[channels]]
            channel_number = 36
            [[streams]]
            tc = 100000000
            count = 10
            channels = [36]
        "#;
        let s = Scenario::from_toml_str(cfg).unwrap();
        assert!(s.duration_ms >= 1_100);
    }

    #[test]
    fn stream_or_aci_required() {
        let cfg = r#"
            name = "empty"
            duration_ms = 10
            [[channels]]
            channel_number = 36
        "#;
        let err = Scenario::from_toml_str(cfg).unwrap_err();
        assert!(err.to_string().contains("measurement stream"), "{err}");
    }
}
