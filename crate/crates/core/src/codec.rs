//! Keystream comparator, XOR masking, receiver low-pass filter and the
//! threshold decoder.
//!
//! Logic levels are `bool` (`true` = 1). The level-shift chain between the
//! comparator and the gates is an ideal map `±Vsat -> {0, 5} V`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::signals::Trace;

/// TTL logic-high level in volts.
pub const LOGIC_HIGH: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodecParams {
    /// Comparator DC reference.
    pub vo: f64,
    /// Ratio of the output potentiometer; the mask amplitude is `kappa * 5 V`.
    pub kappa: f64,
    pub mask_high: f64,
    pub decode_threshold: f64,
    pub vsat: f64,
}

impl Default for CodecParams {
    fn default() -> Self {
        CodecParams {
            vo: 2.0,
            kappa: 1.0,
            mask_high: LOGIC_HIGH,
            decode_threshold: 2.5,
            vsat: 7.5,
        }
    }
}

impl CodecParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "kappa must lie in (0, 1], got {}",
                self.kappa
            )));
        }
        if !(self.vo.is_finite() && self.decode_threshold.is_finite()) {
            return Err(Error::InvalidParameter(
                "comparator levels must be finite".into(),
            ));
        }
        if !(self.mask_high > 0.0 && self.vsat > 0.0) {
            return Err(Error::InvalidParameter(
                "output levels must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Amplitude `U*` of the masked output.
    pub fn mask_amplitude(&self) -> f64 {
        self.kappa * self.mask_high
    }
}

/// Nominal values of the diode/zener level shifter. Carried for
/// documentation only; the shifter is modelled as an ideal map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelShiftParams {
    pub rd: f64,
    pub zener_clamp: f64,
    pub r1_ratio: f64,
}

impl Default for LevelShiftParams {
    fn default() -> Self {
        LevelShiftParams {
            rd: 1e3,
            zener_clamp: 5.0,
            r1_ratio: 0.5,
        }
    }
}

/// Receiver low-pass filter choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FilterSpec {
    /// 40 Ω, 7 nF.
    Filter1,
    /// 1 kΩ, 2.5 nF.
    Filter2,
    /// 1 kΩ, 7 nF.
    Filter3,
    /// Decode straight from the XOR output.
    None,
}

impl FilterSpec {
    pub const ALL: [FilterSpec; 4] = [
        FilterSpec::None,
        FilterSpec::Filter1,
        FilterSpec::Filter2,
        FilterSpec::Filter3,
    ];

    /// `(Re, Ce)` in ohms and farads.
    pub fn components(&self) -> Option<(f64, f64)> {
        match self {
            FilterSpec::Filter1 => Some((40.0, 7e-9)),
            FilterSpec::Filter2 => Some((1e3, 2.5e-9)),
            FilterSpec::Filter3 => Some((1e3, 7e-9)),
            FilterSpec::None => None,
        }
    }

    pub fn time_constant(&self) -> Option<f64> {
        self.components().map(|(re, ce)| re * ce)
    }

    pub fn cutoff_hz(&self) -> Option<f64> {
        self.time_constant()
            .map(|tau| 1.0 / (2.0 * std::f64::consts::PI * tau))
    }

    /// Steady-state sinusoidal amplitude gain `1/sqrt(1 + (w Re Ce)^2)`.
    pub fn gain_at(&self, frequency: f64) -> f64 {
        match self.time_constant() {
            Some(tau) => {
                let w = 2.0 * std::f64::consts::PI * frequency;
                1.0 / (1.0 + (w * tau).powi(2)).sqrt()
            }
            None => 1.0,
        }
    }
}

impl fmt::Display for FilterSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FilterSpec::Filter1 => "1",
            FilterSpec::Filter2 => "2",
            FilterSpec::Filter3 => "3",
            FilterSpec::None => "none",
        })
    }
}

impl FromStr for FilterSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" | "filter1" => Ok(FilterSpec::Filter1),
            "2" | "filter2" => Ok(FilterSpec::Filter2),
            "3" | "filter3" => Ok(FilterSpec::Filter3),
            "none" => Ok(FilterSpec::None),
            other => Err(Error::Config(format!(
                "unknown filter `{other}` (expected 1, 2, 3 or none)"
            ))),
        }
    }
}

/// Comparator output: 0 above the reference, 1 at or below it.
#[inline]
pub fn comparator_bit(v: f64, vo: f64) -> bool {
    v <= vo
}

/// Masked output `U* * (m XOR h)`.
#[inline]
pub fn xor_mask(m: bool, h: bool, p: &CodecParams) -> f64 {
    if m ^ h {
        p.mask_amplitude()
    } else {
        0.0
    }
}

/// Logic level read off an analog line.
#[inline]
pub fn bit_from_voltage(v: f64, threshold: f64) -> bool {
    v > threshold
}

/// Output gate threshold: 0 V at or below the threshold, 5 V above.
#[inline]
pub fn threshold_decode(vc: f64, p: &CodecParams) -> f64 {
    if vc > p.decode_threshold {
        LOGIC_HIGH
    } else {
        0.0
    }
}

/// One exact step of the RC low-pass `dVc/dt = (vin - Vc)/(Re Ce)` with
/// `vin` held over the step.
pub fn lowpass_step(state: f64, vin: f64, dt: f64, f: &FilterSpec) -> Result<f64> {
    let lp = LowPass::new(f, dt)?;
    Ok(lp.step(state, vin))
}

/// Precomputed RC low-pass for a fixed step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowPass {
    decay: f64,
}

impl LowPass {
    pub fn new(f: &FilterSpec, dt: f64) -> Result<Self> {
        let tau = f
            .time_constant()
            .ok_or_else(|| Error::InvalidParameter("no filter selected".into()))?;
        if !(dt > 0.0 && dt < tau) {
            return Err(Error::InvalidParameter(format!(
                "filter step {dt} s must be positive and below Re*Ce = {tau} s"
            )));
        }
        Ok(LowPass {
            decay: (-dt / tau).exp(),
        })
    }

    #[inline]
    pub fn step(&self, state: f64, vin: f64) -> f64 {
        vin + (state - vin) * self.decay
    }
}

/// Samplewise comparator followed by the level shift: `H = 1 -> 5 V`.
pub fn keystream_trace(chaotic_component: &Trace, vo: f64) -> Result<Trace> {
    chaotic_component.map(|v| {
        if comparator_bit(v, vo) {
            LOGIC_HIGH
        } else {
            0.0
        }
    })
}
