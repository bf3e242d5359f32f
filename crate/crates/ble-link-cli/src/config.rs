//! JSON scenario configs. Flat keys mirror the scenario builder's raw
//! fields; an optional `sweep` block turns the file into a sweep request.
//! Unknown keys are rejected by name so typos never silently fall back to
//! defaults.

use std::fs;
use std::path::Path;

use ble_link_model::scenario::{DEFAULT_PHY_RATE_BPS, IFS_US, MIN_CONNECTION_INTERVAL_US};
use ble_link_model::sweep::{
    linear_grid, log_grid, FamilySpec, SweepSpec, SweptParameter, BER_GRID_POINTS,
    CI_STEP_US, PAYLOAD_STEP_BYTES,
};
use ble_link_model::RawScenario;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub ber: f64,
    #[serde(default)]
    pub payload_v_bytes: u32,
    #[serde(default)]
    pub payload_d_bytes: Option<u32>,
    #[serde(default = "default_x")]
    pub x: u32,
    #[serde(default)]
    pub n: Option<u32>,
    #[serde(default = "default_ci")]
    pub ci_v_us: f64,
    #[serde(default)]
    pub ci_d_us: Option<f64>,
    #[serde(default = "default_ifs")]
    pub ifs_us: f64,
    #[serde(default = "default_phy")]
    pub phy_rate_bps: f64,
    #[serde(default)]
    pub sweep: Option<SweepBlock>,
}

fn default_x() -> u32 {
    1
}
fn default_ci() -> f64 {
    MIN_CONNECTION_INTERVAL_US
}
fn default_ifs() -> f64 {
    IFS_US
}
fn default_phy() -> f64 {
    DEFAULT_PHY_RATE_BPS
}

/// Grid request for one parameter. Either an explicit `values` list or a
/// `min`/`max` range; `points` applies to the log-spaced ber grid, `step`
/// to the linear payload and interval grids.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub param: String,
    #[serde(default)]
    pub min: Option<f64>,
    #[serde(default)]
    pub max: Option<f64>,
    #[serde(default)]
    pub points: Option<usize>,
    #[serde(default)]
    pub step: Option<f64>,
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    #[serde(default)]
    pub family: Option<FamilyBlock>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyBlock {
    pub param: String,
    pub values: Vec<f64>,
}

impl ConfigFile {
    pub fn raw_scenario(&self) -> RawScenario {
        RawScenario {
            ber: self.ber,
            phy_rate_bps: self.phy_rate_bps,
            payload_v_bytes: self.payload_v_bytes,
            x: self.x,
            ci_v_us: self.ci_v_us,
            payload_d_bytes: self.payload_d_bytes,
            n: self.n,
            ci_d_us: self.ci_d_us,
            ifs_us: self.ifs_us,
        }
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec, CliError> {
        let block = self
            .sweep
            .as_ref()
            .ok_or_else(|| CliError::input("config has no `sweep` block"))?;
        let param = parse_param("sweep.param", &block.param)?;
        let values = block.grid_values(param)?;
        let family = match &block.family {
            None => None,
            Some(f) => Some(FamilySpec {
                param: parse_param("sweep.family.param", &f.param)?,
                values: f.values.clone(),
            }),
        };
        Ok(SweepSpec { base: self.raw_scenario(), param, values, family })
    }
}

impl SweepBlock {
    fn grid_values(&self, param: SweptParameter) -> Result<Vec<f64>, CliError> {
        if let Some(values) = &self.values {
            if self.min.is_some() || self.max.is_some() {
                return Err(CliError::input(
                    "sweep.values and sweep.min/sweep.max are mutually exclusive",
                ));
            }
            return Ok(values.clone());
        }
        let min = self
            .min
            .ok_or_else(|| CliError::input("sweep.min is required when sweep.values is absent"))?;
        let max = self
            .max
            .ok_or_else(|| CliError::input("sweep.max is required when sweep.values is absent"))?;
        match param {
            SweptParameter::Ber => {
                if self.step.is_some() {
                    return Err(CliError::input(
                        "sweep.step does not apply to the ber grid; use sweep.points",
                    ));
                }
                let points = self.points.unwrap_or(BER_GRID_POINTS);
                if !(min > 0.0 && max > min && points >= 2) {
                    return Err(CliError::input(
                        "ber grid needs 0 < sweep.min < sweep.max and sweep.points >= 2",
                    ));
                }
                Ok(log_grid(min, max, points))
            }
            SweptParameter::PayloadV | SweptParameter::CiV => {
                if self.points.is_some() {
                    return Err(CliError::input(
                        "sweep.points applies only to the ber grid; use sweep.step",
                    ));
                }
                let default_step = if param == SweptParameter::PayloadV {
                    PAYLOAD_STEP_BYTES
                } else {
                    CI_STEP_US
                };
                let step = self.step.unwrap_or(default_step);
                if !(step > 0.0 && max >= min) {
                    return Err(CliError::input(
                        "linear grid needs sweep.step > 0 and sweep.max >= sweep.min",
                    ));
                }
                Ok(linear_grid(min, max, step))
            }
        }
    }
}

fn parse_param(key: &str, name: &str) -> Result<SweptParameter, CliError> {
    match name {
        "ber" => Ok(SweptParameter::Ber),
        "payload_v" => Ok(SweptParameter::PayloadV),
        "ci_v" => Ok(SweptParameter::CiV),
        other => Err(CliError::input(format!(
            "{key}: unknown parameter {other:?} (expected ber, payload_v or ci_v)"
        ))),
    }
}

pub fn load_config(path: &Path) -> Result<ConfigFile, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

/// Parses config JSON, reporting the JSON path of whichever key failed.
pub fn parse_config(text: &str) -> Result<ConfigFile, String> {
    let mut de = serde_json::Deserializer::from_str(text);
    let cfg: ConfigFile = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        if path == "." {
            e.inner().to_string()
        } else {
            format!("key `{path}`: {}", e.inner())
        }
    })?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_documented_defaults() {
        let cfg = parse_config(r#"{ "ber": 1e-3, "payload_v_bytes": 50 }"#).unwrap();
        let raw = cfg.raw_scenario();
        assert_eq!(raw.x, 1);
        assert_eq!(raw.ci_v_us, 7500.0);
        assert_eq!(raw.ifs_us, 150.0);
        assert_eq!(raw.phy_rate_bps, 1e6);
        assert_eq!(raw.payload_d_bytes, None);
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let err = parse_config(r#"{ "ber": 1e-3, "tx_power_dbm": 0 }"#).unwrap_err();
        assert!(err.contains("tx_power_dbm"), "error should name the key: {err}");
    }

    #[test]
    fn type_mismatches_name_the_key() {
        let err = parse_config(r#"{ "ber": "high" }"#).unwrap_err();
        assert!(err.contains("ber"), "error should name the key: {err}");
    }

    #[test]
    fn nested_sweep_errors_name_the_path() {
        let err = parse_config(
            r#"{ "ber": 1e-3, "sweep": { "param": "payload_v", "step": "fine" } }"#,
        )
        .unwrap_err();
        assert!(err.contains("sweep.step"), "error should name the path: {err}");
    }

    #[test]
    fn explicit_values_exclude_range_keys() {
        let cfg = parse_config(
            r#"{ "ber": 1e-3, "sweep": { "param": "ci_v", "values": [7500], "max": 45000 } }"#,
        )
        .unwrap();
        let err = cfg.sweep_spec().unwrap_err();
        assert!(err.to_string().contains("mutually exclusive"));
    }

    #[test]
    fn ber_sweep_defaults_to_log_grid() {
        let cfg = parse_config(
            r#"{ "ber": 1e-3, "payload_v_bytes": 50,
                 "sweep": { "param": "ber", "min": 1e-5, "max": 1e-3 } }"#,
        )
        .unwrap();
        let spec = cfg.sweep_spec().unwrap();
        assert_eq!(spec.values.len(), BER_GRID_POINTS);
        assert_eq!(spec.values[0], 1e-5);
        assert_eq!(*spec.values.last().unwrap(), 1e-3);
    }

    #[test]
    fn payload_sweep_defaults_to_one_byte_steps() {
        let cfg = parse_config(
            r#"{ "ber": 5e-4, "sweep": { "param": "payload_v", "min": 0, "max": 251 } }"#,
        )
        .unwrap();
        let spec = cfg.sweep_spec().unwrap();
        assert_eq!(spec.values.len(), 252);
    }

    #[test]
    fn family_block_parses_into_family_spec() {
        let cfg = parse_config(
            r#"{ "ber": 1e-3, "payload_v_bytes": 50,
                 "sweep": { "param": "ci_v", "min": 7500, "max": 45000,
                            "family": { "param": "ber", "values": [2e-4, 5e-4, 8e-4] } } }"#,
        )
        .unwrap();
        let spec = cfg.sweep_spec().unwrap();
        let family = spec.family.unwrap();
        assert_eq!(family.param, SweptParameter::Ber);
        assert_eq!(family.values, vec![2e-4, 5e-4, 8e-4]);
        assert_eq!(spec.values.len(), 16);
    }
}
