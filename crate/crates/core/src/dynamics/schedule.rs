use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gain sequence `r_n` with divergent sum and summable squares.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StepSchedule {
    /// `r_n = 1 / (m + n + 1)`: an urn that starts with `m` balls.
    Urn { m: u32 },
    /// `r_n = scale / (n + 2)^gamma` with `gamma` in `(1/2, 1]` and `scale` in `(0, 1]`.
    PowerLaw { gamma: f64, scale: f64 },
}

impl Default for StepSchedule {
    fn default() -> Self {
        StepSchedule::Urn { m: 1 }
    }
}

impl StepSchedule {
    pub fn urn(m: u32) -> Result<Self> {
        let s = StepSchedule::Urn { m };
        s.validate()?;
        Ok(s)
    }

    pub fn power_law(gamma: f64, scale: f64) -> Result<Self> {
        let s = StepSchedule::PowerLaw { gamma, scale };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            StepSchedule::Urn { m } if m < 1 => {
                Err(Error::InvalidSchedule("urn needs at least one initial ball (m >= 1)".into()))
            }
            StepSchedule::PowerLaw { gamma, .. } if !(gamma > 0.5 && gamma <= 1.0) => {
                Err(Error::InvalidSchedule(format!("gamma = {gamma} is outside (0.5, 1]")))
            }
            StepSchedule::PowerLaw { scale, .. } if !(scale > 0.0 && scale <= 1.0) => {
                Err(Error::InvalidSchedule(format!("scale = {scale} is outside (0, 1]")))
            }
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn rate(&self, n: u64) -> f64 {
        match *self {
            StepSchedule::Urn { m } => 1.0 / (m as f64 + n as f64 + 1.0),
            StepSchedule::PowerLaw { gamma, scale } => scale / (n as f64 + 2.0).powf(gamma),
        }
    }
}
