//! Unit-suffixed config values such as `"785 nm"` or `"16 TWcm2"`.

use photofrag_core::units::{FS_PER_AU, INTENSITY_AU, NM_PER_BOHR, VELOCITY_AU};

use crate::error::EngineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Length,
    Time,
    Energy,
    Intensity,
    Velocity,
    Momentum,
    /// Any atomic-unit quantity (model parameters).
    Atomic,
}

impl Dimension {
    fn name(self) -> &'static str {
        match self {
            Dimension::Length => "length",
            Dimension::Time => "time",
            Dimension::Energy => "pulse energy",
            Dimension::Intensity => "intensity",
            Dimension::Velocity => "velocity",
            Dimension::Momentum => "momentum",
            Dimension::Atomic => "atomic-unit",
        }
    }

    /// Factor to the canonical unit: m, s, J, W/cm², m/s, a.u.
    fn factor(self, unit: &str) -> Option<f64> {
        let f = match (self, unit) {
            (Dimension::Length, "au" | "bohr") => NM_PER_BOHR * 1e-9,
            (Dimension::Length, "nm") => 1e-9,
            (Dimension::Length, "um") => 1e-6,
            (Dimension::Length, "mm") => 1e-3,
            (Dimension::Length, "cm") => 1e-2,
            (Dimension::Length, "m") => 1.0,
            (Dimension::Time, "au") => FS_PER_AU * 1e-15,
            (Dimension::Time, "fs") => 1e-15,
            (Dimension::Time, "ps") => 1e-12,
            (Dimension::Energy, "uJ") => 1e-6,
            (Dimension::Energy, "mJ") => 1e-3,
            (Dimension::Energy, "J") => 1.0,
            (Dimension::Intensity, "Wcm2") => 1.0,
            (Dimension::Intensity, "GWcm2") => 1e9,
            (Dimension::Intensity, "TWcm2") => 1e12,
            (Dimension::Intensity, "PWcm2") => 1e15,
            (Dimension::Intensity, "au") => INTENSITY_AU,
            (Dimension::Velocity, "m/s") => 1.0,
            (Dimension::Velocity, "km/s") => 1e3,
            (Dimension::Velocity, "au") => VELOCITY_AU,
            (Dimension::Momentum | Dimension::Atomic, "au") => 1.0,
            _ => return None,
        };
        Some(f)
    }

    fn units(self) -> &'static str {
        match self {
            Dimension::Length => "au, bohr, nm, um, mm, cm, m",
            Dimension::Time => "au, fs, ps",
            Dimension::Energy => "uJ, mJ, J",
            Dimension::Intensity => "Wcm2, GWcm2, TWcm2, PWcm2, au",
            Dimension::Velocity => "m/s, km/s, au",
            Dimension::Momentum | Dimension::Atomic => "au",
        }
    }
}

/// Splits `"<number> <unit>"` into the number and its canonical factor.
fn parse(key: &str, text: &str, dim: Dimension) -> Result<(f64, f64), EngineError> {
    let t = text.trim();
    let split = t
        .find(|c: char| c.is_whitespace())
        .or_else(|| t.find(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E'));
    let Some(pos) = split else {
        return Err(EngineError::Config(format!(
            "{key} = \"{text}\": missing unit ({} expects one of {})",
            dim.name(),
            dim.units()
        )));
    };
    let (num, unit) = (t[..pos].trim(), t[pos..].trim());
    let value: f64 = num
        .parse()
        .map_err(|_| EngineError::Config(format!("{key} = \"{text}\": '{num}' is not a number")))?;
    if !value.is_finite() {
        return Err(EngineError::Config(format!("{key} = \"{text}\": value is not finite")));
    }
    let f = dim.factor(unit).ok_or_else(|| {
        EngineError::Config(format!(
            "{key} = \"{text}\": unit '{unit}' is not a {} unit ({})",
            dim.name(),
            dim.units()
        ))
    })?;
    Ok((value, f))
}

/// Value of `text` expressed in `unit` of `dim`; exact when the units match.
pub fn convert(key: &str, text: &str, dim: Dimension, unit: &str) -> Result<f64, EngineError> {
    let target = dim.factor(unit).expect("known target unit");
    let (value, f) = parse(key, text, dim)?;
    Ok(if f == target { value } else { value * (f / target) })
}

pub fn length_au(key: &str, text: &str) -> Result<f64, EngineError> {
    convert(key, text, Dimension::Length, "au")
}

pub fn length_um(key: &str, text: &str) -> Result<f64, EngineError> {
    convert(key, text, Dimension::Length, "um")
}

pub fn length_mm(key: &str, text: &str) -> Result<f64, EngineError> {
    convert(key, text, Dimension::Length, "mm")
}

pub fn length_nm(key: &str, text: &str) -> Result<f64, EngineError> {
    convert(key, text, Dimension::Length, "nm")
}

pub fn length_m(key: &str, text: &str) -> Result<f64, EngineError> {
    convert(key, text, Dimension::Length, "m")
}

pub fn time_fs(key: &str, text: &str) -> Result<f64, EngineError> {
    convert(key, text, Dimension::Time, "fs")
}

pub fn time_au(key: &str, text: &str) -> Result<f64, EngineError> {
    convert(key, text, Dimension::Time, "au")
}

pub fn energy_mj(key: &str, text: &str) -> Result<f64, EngineError> {
    convert(key, text, Dimension::Energy, "mJ")
}

pub fn intensity(key: &str, text: &str) -> Result<f64, EngineError> {
    convert(key, text, Dimension::Intensity, "Wcm2")
}

pub fn velocity(key: &str, text: &str) -> Result<f64, EngineError> {
    convert(key, text, Dimension::Velocity, "m/s")
}

pub fn momentum(key: &str, text: &str) -> Result<f64, EngineError> {
    convert(key, text, Dimension::Momentum, "au")
}

pub fn atomic(key: &str, text: &str) -> Result<f64, EngineError> {
    convert(key, text, Dimension::Atomic, "au")
}
