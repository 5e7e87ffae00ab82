//! `key = value` configuration text.
//!
//! ```text
//! # 45 nm defaults, leak disabled
//! v_dd_volts = 1.0
//! i_leak_amps = 0
//! c_mem_farads = 50e-15, 100e-15, 150e-15
//! k_weight_amps = 200e-9
//! power_anchors = 0:701.57, 127:543.9, 255:392.1
//! ```
//!
//! Keys left out keep their defaults.

use std::collections::HashSet;

use thiserror::Error;

use crate::model::{Branch, BranchSet, DeviceParams};
use crate::power::PowerModel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: {reason}")]
    ParseError { line: usize, reason: String },
    #[error("invalid configuration: {0}")]
    InvariantViolation(String),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Config {
    pub params: DeviceParams,
    pub branches: BranchSet,
    pub power: PowerModel,
}

fn parse_f64(s: &str, line: usize, key: &str) -> Result<f64, ConfigError> {
    s.trim().parse::<f64>().map_err(|_| ConfigError::ParseError {
        line,
        reason: format!("{key}: cannot parse {:?} as a number", s.trim()),
    })
}

fn parse_list(s: &str, line: usize, key: &str) -> Result<Vec<f64>, ConfigError> {
    s.split(',').map(|item| parse_f64(item, line, key)).collect()
}

fn parse_anchors(s: &str, line: usize) -> Result<Vec<(u8, f64)>, ConfigError> {
    s.split(',')
        .map(|item| {
            let (px, nw) = item.split_once(':').ok_or_else(|| ConfigError::ParseError {
                line,
                reason: format!("power_anchors: expected pixel:nW, found {:?}", item.trim()),
            })?;
            let px = px.trim().parse::<u8>().map_err(|_| ConfigError::ParseError {
                line,
                reason: format!("power_anchors: bad pixel {:?}", px.trim()),
            })?;
            Ok((px, parse_f64(nw, line, "power_anchors")?))
        })
        .collect()
}

pub fn load_config(text: &str) -> Result<Config, ConfigError> {
    let mut params = DeviceParams::default();
    let defaults = BranchSet::default();
    let mut c_mem: Vec<f64> = defaults.branches().iter().map(|b| b.c_mem).collect();
    let mut k_weight: Vec<f64> = vec![defaults.branches()[0].k_weight];
    let mut anchors: Option<Vec<(u8, f64)>> = None;
    let mut seen = HashSet::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::ParseError {
            line,
            reason: format!("expected `key = value`, found {content:?}"),
        })?;
        let key = key.trim();
        let slot = match key {
            "v_dd_volts" => Some(&mut params.v_dd),
            "v_tp_abs_volts" => Some(&mut params.v_tp_abs),
            "slope_s" => Some(&mut params.slope_s),
            "u_t_volts" => Some(&mut params.u_t),
            "v_tm_volts" => Some(&mut params.v_tm),
            "v_leak_volts" => Some(&mut params.v_leak),
            "i_leak_amps" => Some(&mut params.i_leak),
            "t_samp_seconds" => Some(&mut params.t_samp),
            "c_mem_farads" | "k_weight_amps" | "power_anchors" => None,
            _ => {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                })
            }
        };
        if !seen.insert(key.to_string()) {
            return Err(ConfigError::ParseError {
                line,
                reason: format!("duplicate key `{key}`"),
            });
        }
        match (slot, key) {
            (Some(field), _) => *field = parse_f64(value, line, key)?,
            (None, "c_mem_farads") => c_mem = parse_list(value, line, key)?,
            (None, "k_weight_amps") => k_weight = parse_list(value, line, key)?,
            (None, _) => anchors = Some(parse_anchors(value, line)?),
        }
    }

    let violations = params.violations();
    if !violations.is_empty() {
        let msg: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(ConfigError::InvariantViolation(msg.join("; ")));
    }
    let weights = match k_weight.len() {
        1 => vec![k_weight[0]; c_mem.len()],
        n if n == c_mem.len() => k_weight,
        n => {
            return Err(ConfigError::InvariantViolation(format!(
                "k_weight_amps has {n} values for {} branches",
                c_mem.len()
            )))
        }
    };
    let branches = BranchSet::new(c_mem.into_iter().zip(weights).map(|(c, k)| Branch::new(c, k)).collect())
        .map_err(|e| ConfigError::InvariantViolation(e.to_string()))?;
    let power = match anchors {
        Some(a) => PowerModel::new(a).map_err(|e| ConfigError::InvariantViolation(e.to_string()))?,
        None => PowerModel::default(),
    };
    Ok(Config {
        params,
        branches,
        power,
    })
}
