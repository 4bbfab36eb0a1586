//! Path loss, fractional power control and log-normal shadowing.
//!
//! All quantities are in dB / dBm. Distances are in km.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, ZETA};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    /// Path-loss intercept at 1 km (dB).
    pub a_db: f64,
    /// Path-loss exponent.
    pub alpha: f64,
    /// Shadowing standard deviation per link (dB).
    pub sigma_shadow_db: f64,
    /// Power-control target (dBm).
    pub p0_dbm: f64,
    /// Fractional compensation factor.
    pub eta: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            a_db: 145.4,
            alpha: 3.75,
            sigma_shadow_db: 10.0,
            p0_dbm: -76.0,
            eta: 0.8,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        let finite = |name, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("must be finite, got {v}")))
            }
        };
        finite("a_db", self.a_db)?;
        finite("alpha", self.alpha)?;
        finite("sigma_shadow_db", self.sigma_shadow_db)?;
        finite("p0_dbm", self.p0_dbm)?;
        finite("eta", self.eta)?;
        if self.alpha <= 0.0 {
            return Err(Error::invalid("alpha", "path-loss exponent must be positive"));
        }
        if self.sigma_shadow_db < 0.0 {
            return Err(Error::invalid("sigma_shadow_db", "must be non-negative"));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::invalid("eta", format!("must lie in (0, 1], got {}", self.eta)));
        }
        Ok(())
    }

    pub fn path_loss_db(&self, d_km: f64) -> Result<f64> {
        if !(d_km > 0.0) || !d_km.is_finite() {
            return Err(Error::Domain {
                function: "path_loss_db",
                value: d_km,
                reason: "distance must be positive and finite",
            });
        }
        Ok(self.a_db + self.alpha * 10.0 * d_km.log10())
    }

    /// Path loss from a squared distance; skips the square root and the
    /// domain check. Used in the sampling loops.
    #[inline]
    pub fn path_loss_db_sq(&self, d2_km: f64) -> f64 {
        self.a_db + self.alpha * 0.5 * ZETA * d2_km.ln()
    }

    /// Transmit power under fractional power control given the own-link
    /// path loss and shadowing.
    pub fn ul_tx_power_dbm(&self, own_path_loss_db: f64, own_shadow_db: f64) -> f64 {
        self.p0_dbm + self.eta * (own_path_loss_db + own_shadow_db)
    }

    /// Mean and variance of `η S_own - S_victim` for independent links.
    pub fn interference_shadow_moments(&self) -> (f64, f64) {
        let s2 = self.sigma_shadow_db * self.sigma_shadow_db;
        (0.0, (1.0 + self.eta * self.eta) * s2)
    }

    /// Mean and variance of `(η - 1) S` on the tagged link.
    pub fn signal_shadow_moments(&self) -> (f64, f64) {
        let s2 = self.sigma_shadow_db * self.sigma_shadow_db;
        let k = 1.0 - self.eta;
        (0.0, k * k * s2)
    }
}
