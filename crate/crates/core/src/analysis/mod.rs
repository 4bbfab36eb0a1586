//! The analytic pipeline: region moments, per-cell Gaussian approximations,
//! the power-lognormal aggregate, and the signal / SIR CDFs.

mod cdf;
mod moments;
mod pipeline;
mod power_lognormal;

use serde::{Deserialize, Serialize};

pub use cdf::{
    outer_order, signal_cdf, sir_cdf, sir_cdf_literal, tabulate, CdfCurve, SignalCdf, SirCdf, TAB_HALF_WIDTH_SD,
};
pub use moments::{
    interference_path_moments, per_cell_interference_gaussian, region_sample_set,
    signal_gaussian, signal_path_moments, RegionSampleSet,
};
pub use pipeline::{analyze_cell, analyze_victims, AnalysisOptions, CellAnalysis, InterfererTerm, VictimModel};
pub use power_lognormal::{
    fit_power_lognormal, fit_power_lognormal_with, FitMethod, FitReport, PowerLognormal, LAMBDA_MAX,
    LAMBDA_MIN,
};

/// A Gaussian in dB, `N(mean, var)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianApprox {
    pub mean: f64,
    pub var: f64,
}

impl GaussianApprox {
    pub fn sd(&self) -> f64 {
        self.var.max(0.0).sqrt()
    }
}

/// Monte Carlo moments of a path-loss functional over a coverage region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionMoments {
    pub mu_l: f64,
    pub var_l: f64,
    /// Standard error of `mu_l`.
    pub std_error: f64,
    pub n_samples: usize,
}
