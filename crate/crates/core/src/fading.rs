//! Multi-path fading gains in dB, `H = 10 log10 |h|²`.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use serde::{Deserialize, Serialize};

use crate::quadrature::{digamma, incomplete_gamma_pq, trigamma};
use crate::{Error, Result, ZETA};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FadingModel {
    /// `|h|² ~ Exp(1)`.
    Rayleigh,
    /// `|h|² ~ Gamma(k, θ)` (shape, scale).
    Nakagami { k: f64, theta: f64 },
    /// Deterministic gain. Not a physical model; lets tests switch fading off.
    Constant { gain_db: f64 },
}

impl FadingModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            FadingModel::Rayleigh => Ok(()),
            FadingModel::Nakagami { k, theta } => {
                if !(k > 0.0 && k.is_finite()) {
                    return Err(Error::invalid("k", format!("Nakagami shape must be positive, got {k}")));
                }
                if !(theta > 0.0 && theta.is_finite()) {
                    return Err(Error::invalid(
                        "theta",
                        format!("Nakagami scale must be positive, got {theta}"),
                    ));
                }
                Ok(())
            }
            FadingModel::Constant { gain_db } => {
                if gain_db.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid("gain_db", "must be finite"))
                }
            }
        }
    }

    /// `P(H ≤ h)`.
    pub fn cdf_db(&self, h: f64) -> f64 {
        match *self {
            FadingModel::Rayleigh => -(-(h / ZETA).exp()).exp_m1(),
            FadingModel::Nakagami { k, theta } => {
                let y = (h / ZETA).exp() / theta;
                if y.is_nan() {
                    return f64::NAN;
                }
                incomplete_gamma_pq(k, y).0
            }
            FadingModel::Constant { gain_db } => {
                if h >= gain_db {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Mean and variance of `H` in dB.
    pub fn moments_db(&self) -> (f64, f64) {
        match *self {
            FadingModel::Rayleigh => (
                -ZETA * EULER_GAMMA,
                ZETA * ZETA * std::f64::consts::PI.powi(2) / 6.0,
            ),
            FadingModel::Nakagami { k, theta } => {
                // Parameters are validated on construction paths; fall back to
                // NaN rather than panic if someone bypassed that.
                let psi = digamma(k).unwrap_or(f64::NAN);
                let psi1 = trigamma(k).unwrap_or(f64::NAN);
                (ZETA * (psi + theta.ln()), ZETA * ZETA * psi1)
            }
            FadingModel::Constant { gain_db } => (gain_db, 0.0),
        }
    }

    /// Draws the linear power gain `|h|²`.
    pub fn sample_linear<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            FadingModel::Rayleigh => Exp1.sample(rng),
            FadingModel::Nakagami { k, theta } => Gamma::new(k, theta)
                .map(|g| g.sample(rng))
                .unwrap_or(f64::NAN),
            FadingModel::Constant { gain_db } => 10f64.powf(gain_db / 10.0),
        }
    }

    pub fn sample_db<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            FadingModel::Constant { gain_db } => gain_db,
            _ => ZETA * self.sample_linear(rng).ln(),
        }
    }

    /// A sampler that builds the Gamma distribution once.
    pub fn sampler(&self) -> FadingSampler {
        match *self {
            FadingModel::Rayleigh => FadingSampler::Exp,
            FadingModel::Nakagami { k, theta } => match Gamma::new(k, theta) {
                Ok(g) => FadingSampler::Gamma(g),
                Err(_) => FadingSampler::Const(f64::NAN),
            },
            FadingModel::Constant { gain_db } => FadingSampler::Const(gain_db),
        }
    }

    pub fn short_name(&self) -> &'static str {
        match self {
            FadingModel::Rayleigh => "rayleigh",
            FadingModel::Nakagami { .. } => "nakagami",
            FadingModel::Constant { .. } => "constant",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum FadingSampler {
    Exp,
    Gamma(Gamma<f64>),
    Const(f64),
}

impl FadingSampler {
    /// One dB-domain gain.
    #[inline]
    pub fn sample_db<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            FadingSampler::Exp => {
                let e: f64 = Exp1.sample(rng);
                ZETA * e.ln()
            }
            FadingSampler::Gamma(g) => ZETA * g.sample(rng).ln(),
            FadingSampler::Const(v) => *v,
        }
    }

    /// One linear power gain `|h|²`.
    #[inline]
    pub fn sample_linear<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            FadingSampler::Exp => Exp1.sample(rng),
            FadingSampler::Gamma(g) => g.sample(rng),
            FadingSampler::Const(v) => (*v / ZETA).exp(),
        }
    }
}
