//! Unit names and the affine conversion registry used by the adapter
//! builtins and the rule-based fallback.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// `to = (from + offset_before) * numerator / denominator + offset_after`.
///
/// Keeping the scale as a ratio lets conversions such as C→F (×9/5) stay
/// exact on values like 18.5 where a rounded `1.8` would not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitConversion {
    pub from: String,
    pub to: String,
    pub numerator: f64,
    pub denominator: f64,
    pub offset_before: f64,
    pub offset_after: f64,
}

impl UnitConversion {
    /// Plain `to = from * scale + offset` form, as written in route configs.
    pub fn affine(from: &str, to: &str, scale: f64, offset: f64) -> Self {
        Self {
            from: canonical_unit(from).unwrap_or(from).to_string(),
            to: canonical_unit(to).unwrap_or(to).to_string(),
            numerator: scale,
            denominator: 1.0,
            offset_before: 0.0,
            offset_after: offset,
        }
    }

    pub fn apply(&self, value: f64) -> f64 {
        (value + self.offset_before) * self.numerator / self.denominator + self.offset_after
    }

    pub fn inverse(&self) -> Self {
        Self {
            from: self.to.clone(),
            to: self.from.clone(),
            numerator: self.denominator,
            denominator: self.numerator,
            offset_before: -self.offset_after,
            offset_after: -self.offset_before,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no conversion from `{from}` to `{to}`")]
pub struct UnknownConversion {
    pub from: String,
    pub to: String,
}

pub const CELSIUS: &str = "celsius";
pub const FAHRENHEIT: &str = "fahrenheit";
pub const KMH: &str = "kmh";
pub const MPH: &str = "mph";
pub const METER: &str = "meter";
pub const FOOT: &str = "foot";
pub const PERCENT: &str = "percent";

pub const MPH_PER_KMH: f64 = 0.621371;
pub const FEET_PER_METER: f64 = 3.28084;

pub fn celsius_to_fahrenheit(c: f64) -> f64 {
    c * 9.0 / 5.0 + 32.0
}

pub fn fahrenheit_to_celsius(f: f64) -> f64 {
    (f - 32.0) * 5.0 / 9.0
}

pub fn kmh_to_mph(v: f64) -> f64 {
    v * MPH_PER_KMH
}

pub fn mph_to_kmh(v: f64) -> f64 {
    v / MPH_PER_KMH
}

pub fn m_to_ft(v: f64) -> f64 {
    v * FEET_PER_METER
}

pub fn ft_to_m(v: f64) -> f64 {
    v / FEET_PER_METER
}

/// Maps an alias (annotation text, name token) to its canonical unit name.
pub fn canonical_unit(name: &str) -> Option<&'static str> {
    let lower = name.trim().to_ascii_lowercase();
    Some(match lower.trim_start_matches('°') {
        "c" | "celsius" | "degc" | "deg_c" | "centigrade" => CELSIUS,
        "f" | "fahrenheit" | "degf" | "deg_f" => FAHRENHEIT,
        "kmh" | "km/h" | "kph" | "kmph" => KMH,
        "mph" | "mi/h" => MPH,
        "m" | "meter" | "meters" | "metre" | "metres" => METER,
        "ft" | "foot" | "feet" => FOOT,
        "percent" | "pct" | "%" => PERCENT,
        _ => return None,
    })
}

/// Finds a unit mentioned in free text such as a schema description.
pub fn unit_in_text(text: &str) -> Option<&'static str> {
    let lower = text.to_ascii_lowercase();
    const WORDS: &[(&str, &str)] = &[
        ("fahrenheit", FAHRENHEIT),
        ("celsius", CELSIUS),
        ("km/h", KMH),
        ("kmh", KMH),
        ("kph", KMH),
        ("mph", MPH),
        ("meters", METER),
        ("metres", METER),
        ("feet", FOOT),
        ("percent", PERCENT),
    ];
    WORDS
        .iter()
        .filter_map(|(word, unit)| lower.find(word).map(|at| (at, *unit)))
        .min_by_key(|(at, _)| *at)
        .map(|(_, unit)| unit)
}

/// Splits a field name into lowercase tokens on `_`, `-`, spaces and
/// camelCase boundaries.
pub fn name_tokens(name: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut prev_lower = false;
    for ch in name.chars() {
        if ch == '_' || ch == '-' || ch == ' ' || ch == '.' {
            if !current.is_empty() {
                tokens.push(core::mem::take(&mut current));
            }
            prev_lower = false;
            continue;
        }
        if ch.is_uppercase() && prev_lower && !current.is_empty() {
            tokens.push(core::mem::take(&mut current));
        }
        prev_lower = ch.is_lowercase() || ch.is_ascii_digit();
        current.extend(ch.to_lowercase());
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Unit implied by a trailing name token, e.g. `wind_speed_kmh`.
pub fn unit_from_name(name: &str) -> Option<&'static str> {
    let tokens = name_tokens(name);
    if tokens.len() < 2 {
        return None;
    }
    canonical_unit(tokens.last()?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitRegistry {
    entries: Vec<UnitConversion>,
}

impl Default for UnitRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl UnitRegistry {
    pub fn empty() -> Self {
        Self { entries: Vec::new() }
    }

    /// C↔F, km/h↔mph, m↔ft.
    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        reg.add(UnitConversion {
            from: CELSIUS.into(),
            to: FAHRENHEIT.into(),
            numerator: 9.0,
            denominator: 5.0,
            offset_before: 0.0,
            offset_after: 32.0,
        });
        reg.add(UnitConversion::affine(KMH, MPH, MPH_PER_KMH, 0.0));
        reg.add(UnitConversion::affine(METER, FOOT, FEET_PER_METER, 0.0));
        reg
    }

    /// Adds `conversion` and its inverse, replacing existing entries for
    /// either direction.
    pub fn add(&mut self, conversion: UnitConversion) {
        let inverse = conversion.inverse();
        for conv in [conversion, inverse] {
            self.entries.retain(|e| !(e.from == conv.from && e.to == conv.to));
            self.entries.push(conv);
        }
    }

    pub fn entries(&self) -> &[UnitConversion] {
        &self.entries
    }

    pub fn find(&self, from: &str, to: &str) -> Option<&UnitConversion> {
        let from = canonical_unit(from).unwrap_or(from);
        let to = canonical_unit(to).unwrap_or(to);
        self.entries.iter().find(|e| e.from == from && e.to == to)
    }

    pub fn convert(&self, value: f64, from: &str, to: &str) -> Result<f64, UnknownConversion> {
        let cf = canonical_unit(from).unwrap_or(from);
        let ct = canonical_unit(to).unwrap_or(to);
        if cf == ct {
            return Ok(value);
        }
        self.find(cf, ct)
            .map(|c| c.apply(value))
            .ok_or_else(|| UnknownConversion { from: from.to_string(), to: to.to_string() })
    }
}

/// Converts with the builtin registry.
pub fn convert_unit(value: f64, from: &str, to: &str) -> Result<f64, UnknownConversion> {
    UnitRegistry::builtin().convert(value, from, to)
}
