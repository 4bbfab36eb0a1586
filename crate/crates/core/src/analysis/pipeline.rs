use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::fading::FadingModel;
use crate::quadrature::gauss_hermite;
use crate::scenario::Deployment;
use crate::{Error, Result};

use super::cdf::{tabulate, CdfCurve, SignalCdf, SirCdf};
use super::moments::{per_cell_interference_gaussian, region_sample_set, signal_gaussian};
use super::power_lognormal::{fit_power_lognormal_with, FitMethod, FitReport};
use super::{GaussianApprox, RegionMoments};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisOptions {
    /// Gauss-Hermite order M0.
    pub gh_order: usize,
    /// Region Monte Carlo samples per cell.
    pub n_samples: usize,
    /// Points per tabulated CDF.
    pub grid_points: usize,
    pub seed: u64,
    pub fit_method: FitMethod,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            gh_order: 30,
            n_samples: 100_000,
            grid_points: 801,
            seed: 1,
            fit_method: FitMethod::Laplace,
        }
    }
}

impl AnalysisOptions {
    pub fn validate(&self) -> Result<()> {
        if self.gh_order == 0 || self.gh_order > crate::quadrature::MAX_GH_ORDER {
            return Err(Error::invalid("gh_order", "must be in 1..=100"));
        }
        if self.n_samples < 2 {
            return Err(Error::invalid("n_samples", "must be at least 2"));
        }
        if self.grid_points < 2 {
            return Err(Error::invalid("grid_points", "must be at least 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterfererTerm {
    pub cell: usize,
    pub path: RegionMoments,
    /// `Q_b` in dBm.
    pub q: GaussianApprox,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellAnalysis {
    pub victim: usize,
    pub signal_path: RegionMoments,
    pub g1: GaussianApprox,
    pub interferers: Vec<InterfererTerm>,
    pub fit: FitReport,
    pub signal: CdfCurve,
    pub interference: CdfCurve,
    pub sir: CdfCurve,
}

/// Moments and fit for one victim, without tabulated curves.
#[derive(Debug, Clone, PartialEq)]
pub struct VictimModel {
    pub victim: usize,
    pub g1: GaussianApprox,
    pub fit: FitReport,
}

impl VictimModel {
    /// Mean and standard deviation of the SIR approximation `X̂1 − Q`.
    pub fn sir_moments(&self, fading: &FadingModel) -> (f64, f64) {
        let (mh, vh) = fading.moments_db();
        let (mq, vq) = self.fit.dist.moments_db();
        (self.g1.mean + mh - mq, (self.g1.var + vh + vq).sqrt())
    }
}

fn check_inputs(dep: &Deployment, params: &ChannelParams, fading: &FadingModel, opts: &AnalysisOptions) -> Result<()> {
    params.validate()?;
    fading.validate()?;
    opts.validate()?;
    if dep.len() < 2 {
        return Err(Error::invalid("deployment", "analysis needs at least one interfering cell"));
    }
    Ok(())
}

/// Runs the full analysis for `victim`: region moments, Gaussian
/// approximations, the aggregate fit, and signal / interference / SIR curves.
pub fn analyze_cell(
    dep: &Deployment,
    victim: usize,
    params: &ChannelParams,
    fading: &FadingModel,
    opts: &AnalysisOptions,
) -> Result<CellAnalysis> {
    check_inputs(dep, params, fading, opts)?;
    dep.cell(victim)?;
    let rule = gauss_hermite(opts.gh_order)?;
    let signal_path = region_sample_set(dep, victim, params, opts.n_samples, opts.seed)?.signal_moments(params);
    let g1 = signal_gaussian(&signal_path, params);

    let interferers: Vec<InterfererTerm> = (0..dep.len())
        .into_par_iter()
        .filter(|&b| b != victim)
        .map(|b| {
            let set = region_sample_set(dep, b, params, opts.n_samples, opts.seed)?;
            let path = set.interference_moments(dep, victim, params)?;
            Ok(InterfererTerm {
                cell: b,
                path,
                q: per_cell_interference_gaussian(&path, params, fading),
            })
        })
        .collect::<Result<_>>()?;
    let qs: Vec<GaussianApprox> = interferers.iter().map(|t| t.q).collect();
    let fit = fit_power_lognormal_with(&qs, opts.fit_method)?;
    let model = VictimModel { victim, g1, fit };

    let (mh, vh) = fading.moments_db();
    let sig = SignalCdf::new(&g1, fading, &rule);
    let signal = tabulate(g1.mean + mh, (g1.var + vh).sqrt(), opts.grid_points, |x| sig.eval(x))?;
    let (mq, vq) = fit.dist.moments_db();
    let interference = tabulate(mq, vq.sqrt(), opts.grid_points, |q| fit.dist.cdf_db(q))?;
    let sir_eval = SirCdf::new(&g1, fading, &fit.dist, &rule);
    let (mz, sz) = model.sir_moments(fading);
    let sir = tabulate(mz, sz, opts.grid_points, |z| sir_eval.eval(z))?;

    Ok(CellAnalysis {
        victim,
        signal_path,
        g1,
        interferers,
        fit,
        signal,
        interference,
        sir,
    })
}

/// Moments and fits for several victims of one deployment. Each cell's
/// region is sampled once and reused for every victim; the results equal
/// those of [`analyze_cell`] with the same options.
pub fn analyze_victims(
    dep: &Deployment,
    victims: &[usize],
    params: &ChannelParams,
    fading: &FadingModel,
    opts: &AnalysisOptions,
) -> Result<Vec<VictimModel>> {
    check_inputs(dep, params, fading, opts)?;
    for &v in victims {
        dep.cell(v)?;
    }
    // per_cell[b] = (signal moments of b, interference moments of b toward each victim)
    let per_cell: Vec<(RegionMoments, Vec<Option<RegionMoments>>)> = (0..dep.len())
        .into_par_iter()
        .map(|b| {
            let set = region_sample_set(dep, b, params, opts.n_samples, opts.seed)?;
            let toward = victims
                .iter()
                .map(|&v| {
                    if v == b {
                        Ok(None)
                    } else {
                        set.interference_moments(dep, v, params).map(Some)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((set.signal_moments(params), toward))
        })
        .collect::<Result<_>>()?;

    victims
        .par_iter()
        .enumerate()
        .map(|(vi, &v)| {
            let g1 = signal_gaussian(&per_cell[v].0, params);
            let qs: Vec<GaussianApprox> = per_cell
                .iter()
                .filter_map(|(_, t)| t[vi].as_ref())
                .map(|m| per_cell_interference_gaussian(m, params, fading))
                .collect();
            let fit = fit_power_lognormal_with(&qs, opts.fit_method)?;
            Ok(VictimModel { victim: v, g1, fit })
        })
        .collect()
}
