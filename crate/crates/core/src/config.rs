//! Flat `key = value` configuration text.
//!
//! ```text
//! # 256x256 mixed society with feedback
//! dims        = 256x256
//! share_a     = 0.3
//! share_b     = 0.35
//! share_c     = 0.2
//! share_d     = 0.15
//! delta_b_max = 4
//! delta_p_min = 1%
//! ```
//!
//! Blank lines and `#` comments are ignored. Every key may appear at most
//! once; unknown keys are rejected. Fractions accept a `%` suffix. When no
//! `share_*` key is present the society is purely selfish; otherwise
//! missing shares are zero.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::lattice::Dims;
use crate::population::{AgentType, Composition};
use crate::simulation::SimulationConfig;

const KEYS: &[&str] = &[
    "dims",
    "width",
    "height",
    "share_a",
    "share_b",
    "share_c",
    "share_d",
    "init",
    "p_audit",
    "penalty_h",
    "delta_b_max",
    "delta_p_min",
    "feedback",
    "steps",
    "seed",
    "bin_width",
    "write_histogram",
    "write_society",
];

/// Parses a fraction such as `0.05` or `5%`.
pub fn parse_fraction(name: &str, value: &str) -> Result<f64> {
    let v = value.trim();
    let (num, scale) = match v.strip_suffix('%') {
        Some(n) => (n.trim(), 100.0),
        None => (v, 1.0),
    };
    let x: f64 = num
        .parse()
        .map_err(|_| Error::invalid(name, format!("expected a number or percentage, got `{v}`")))?;
    if !x.is_finite() {
        return Err(Error::invalid(name, format!("expected a finite value, got `{v}`")));
    }
    Ok(x / scale)
}

fn parse_num<T: std::str::FromStr>(name: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::invalid(name, format!("cannot parse `{}`", value.trim())))
}

fn parse_bool(name: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        v => Err(Error::invalid(name, format!("expected true/false, got `{v}`"))),
    }
}

pub fn parse_config(text: &str) -> Result<SimulationConfig> {
    let mut cfg = SimulationConfig::default();
    let mut seen = HashSet::new();
    let mut shares: [Option<f64>; 4] = [None; 4];
    let (mut width, mut height) = (None, None);

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Syntax {
            line: line_no,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        if !KEYS.contains(&key) {
            return Err(Error::UnknownKey {
                line: line_no,
                key: key.to_string(),
            });
        }
        if !seen.insert(key.to_string()) {
            return Err(Error::Syntax {
                line: line_no,
                message: format!("duplicate key `{key}`"),
            });
        }
        if value.is_empty() {
            return Err(Error::Syntax {
                line: line_no,
                message: format!("missing value for `{key}`"),
            });
        }
        match key {
            "dims" => cfg.dims = value.parse()?,
            "width" => width = Some(parse_num::<usize>(key, value)?),
            "height" => height = Some(parse_num::<usize>(key, value)?),
            "share_a" => shares[0] = Some(parse_fraction(key, value)?),
            "share_b" => shares[1] = Some(parse_fraction(key, value)?),
            "share_c" => shares[2] = Some(parse_fraction(key, value)?),
            "share_d" => shares[3] = Some(parse_fraction(key, value)?),
            "init" => cfg.init = value.parse()?,
            "p_audit" => cfg.audit_probability = parse_fraction(key, value)?,
            "penalty_h" => cfg.penalty_steps = parse_num(key, value)?,
            "delta_b_max" => cfg.delta_b_max = parse_num(key, value)?,
            "delta_p_min" => cfg.delta_p_min = parse_fraction(key, value)?,
            "feedback" => cfg.feedback = parse_bool(key, value)?,
            "steps" => cfg.steps = parse_num(key, value)?,
            "seed" => cfg.seed = parse_num(key, value)?,
            "bin_width" => cfg.bin_width = parse_num(key, value)?,
            "write_histogram" => cfg.output.histogram = parse_bool(key, value)?,
            "write_society" => cfg.output.society = parse_bool(key, value)?,
            _ => unreachable!("key list and match arms out of sync"),
        }
    }

    if seen.contains("dims") && (width.is_some() || height.is_some()) {
        return Err(Error::invalid("dims", "use either `dims` or `width`/`height`, not both"));
    }
    if width.is_some() || height.is_some() {
        cfg.dims = Dims::new(
            width.unwrap_or(cfg.dims.width),
            height.unwrap_or(cfg.dims.height),
        )?;
    }
    if shares.iter().any(Option::is_some) {
        let s = shares.map(|v| v.unwrap_or(0.0));
        cfg.composition = Composition::new(s[0], s[1], s[2], s[3])?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Renders a config in the format accepted by [`parse_config`].
pub fn render_config(cfg: &SimulationConfig) -> String {
    let mut out = String::new();
    let mut put = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
    put("dims", cfg.dims.to_string());
    for kind in AgentType::ALL {
        put(&format!("share_{}", kind.tag()), format!("{:?}", cfg.composition.share(kind)));
    }
    put("init", cfg.init.to_string());
    put("p_audit", format!("{:?}", cfg.audit_probability));
    put("penalty_h", cfg.penalty_steps.to_string());
    put("delta_b_max", format!("{:?}", cfg.delta_b_max));
    put("delta_p_min", format!("{:?}", cfg.delta_p_min));
    put("feedback", cfg.feedback.to_string());
    put("steps", cfg.steps.to_string());
    put("seed", cfg.seed.to_string());
    put("bin_width", format!("{:?}", cfg.bin_width));
    put("write_histogram", cfg.output.histogram.to_string());
    put("write_society", cfg.output.society.to_string());
    out
}
