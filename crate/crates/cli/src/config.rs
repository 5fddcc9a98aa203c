//! Gains configuration files.
//!
//! ```text
//! # comment
//! controller = dapi
//! ki = 1
//! c = 0.1
//!
//! [power_preset]
//! m = 0.0531
//! d = 0.0265
//! b = 0.3
//! l = 1
//! ```
//!
//! Top-level keys are `controller` plus any of `f, g, f0, g0, ki, c, kd,
//! tau`; keys that do not apply to the chosen controller are rejected.
//! The optional `[power_preset]` section derives `f = b/(l m)`,
//! `g0 = d/m` (and `g = f0 = 0`) from swing-equation parameters; it is
//! available for `p` (droop) and `dapi`, and may not be combined with
//! explicit `f`, `g`, `f0` or `g0`.

use std::collections::BTreeMap;

use coherence_core::{droop_preset, power_preset, ControllerKind, DapiGains, FdpdGains, Gains, PGains};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing key `{0}`")]
    Missing(&'static str),
    #[error("{0}")]
    Invalid(String),
}

pub fn parse_controller(name: &str) -> Option<ControllerKind> {
    match name.trim().to_ascii_lowercase().as_str() {
        "p" => Some(ControllerKind::P),
        "dapi" => Some(ControllerKind::Dapi),
        "fdpd" | "f-dpd" => Some(ControllerKind::Fdpd),
        _ => None,
    }
}

fn allowed_keys(kind: ControllerKind) -> &'static [&'static str] {
    match kind {
        ControllerKind::P => &["f", "g", "f0", "g0"],
        ControllerKind::Dapi => &["f", "g", "g0", "ki", "c"],
        ControllerKind::Fdpd => &["f", "g", "f0", "kd", "tau"],
    }
}

const PRESET_KEYS: [&str; 4] = ["m", "d", "b", "l"];

/// Parses a gains file.
pub fn parse_gains(text: &str) -> Result<Gains, ConfigError> {
    let mut controller: Option<(ControllerKind, usize)> = None;
    let mut values: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    let mut preset: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    let mut in_preset = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let syntax = |message: String| ConfigError::Syntax { line: line_no, message };
        if let Some(section) = line.strip_prefix('[') {
            let name = section.strip_suffix(']').ok_or_else(|| syntax("unterminated section header".into()))?;
            if name.trim() != "power_preset" {
                return Err(syntax(format!("unknown section `{}`", name.trim())));
            }
            in_preset = true;
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| syntax("expected `key = value`".into()))?;
        let (key, value) = (key.trim().to_ascii_lowercase(), value.trim());
        if key == "controller" && !in_preset {
            let kind = parse_controller(value).ok_or_else(|| syntax(format!("unknown controller `{value}`")))?;
            if controller.replace((kind, line_no)).is_some() {
                return Err(syntax("duplicate key `controller`".into()));
            }
            continue;
        }
        let number: f64 = value.parse().map_err(|_| syntax(format!("`{value}` is not a number")))?;
        let target = if in_preset {
            if !PRESET_KEYS.contains(&key.as_str()) {
                return Err(syntax(format!("unknown power_preset key `{key}`")));
            }
            &mut preset
        } else {
            if !["f", "g", "f0", "g0", "ki", "c", "kd", "tau"].contains(&key.as_str()) {
                return Err(syntax(format!("unknown key `{key}`")));
            }
            &mut values
        };
        if target.insert(key.clone(), (number, line_no)).is_some() {
            return Err(syntax(format!("duplicate key `{key}`")));
        }
    }

    let (kind, _) = controller.ok_or(ConfigError::Missing("controller"))?;
    if let Some((key, (_, line))) = values.iter().find(|(k, _)| !allowed_keys(kind).contains(&k.as_str())) {
        return Err(ConfigError::Syntax { line: *line, message: format!("key `{key}` does not apply to {}", kind.name()) });
    }
    let get = |key: &'static str| values.get(key).map(|v| v.0).ok_or(ConfigError::Missing(key));
    let invalid = |e: coherence_core::Error| ConfigError::Invalid(e.to_string());

    if !preset.is_empty() {
        for key in ["f", "g", "f0", "g0"] {
            if let Some((_, line)) = values.get(key) {
                return Err(ConfigError::Syntax {
                    line: *line,
                    message: format!("`{key}` conflicts with [power_preset]"),
                });
            }
        }
        let p = |key: &'static str| preset.get(key).map(|v| v.0).ok_or(ConfigError::Missing(key));
        let (m, d, b, l) = (p("m")?, p("d")?, p("b")?, p("l")?);
        return match kind {
            ControllerKind::P => droop_preset(m, d, b, l).map(Gains::P).map_err(invalid),
            ControllerKind::Dapi => power_preset(m, d, b, l, get("ki")?, get("c")?).map(Gains::Dapi).map_err(invalid),
            ControllerKind::Fdpd => Err(ConfigError::Invalid("[power_preset] is not available for fdpd".into())),
        };
    }

    let gains = match kind {
        ControllerKind::P => PGains::new(get("f")?, get("g")?, get("f0")?, get("g0")?).map(Gains::P),
        ControllerKind::Dapi => {
            DapiGains::new(get("f")?, get("g")?, get("g0")?, get("ki")?, get("c")?).map(Gains::Dapi)
        }
        ControllerKind::Fdpd => {
            FdpdGains::new(get("f")?, get("g")?, get("f0")?, get("kd")?, get("tau")?).map(Gains::Fdpd)
        }
    };
    gains.map_err(invalid)
}

/// Writes gains back in the file format.
pub fn format_gains(gains: &Gains) -> String {
    match gains {
        Gains::P(p) => format!("controller = p\nf = {}\ng = {}\nf0 = {}\ng0 = {}\n", p.f, p.g, p.f0, p.g0),
        Gains::Dapi(d) => {
            format!("controller = dapi\nf = {}\ng = {}\ng0 = {}\nki = {}\nc = {}\n", d.f, d.g, d.g0, d.ki, d.c)
        }
        Gains::Fdpd(d) => {
            format!("controller = fdpd\nf = {}\ng = {}\nf0 = {}\nkd = {}\ntau = {}\n", d.f, d.g, d.f0, d.kd, d.tau)
        }
    }
}
