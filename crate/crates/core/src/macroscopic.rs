//! Deployment-level performance: SIR CDFs averaged over random hotspot
//! deployments, and the hexagonal-lattice upper bound at equal density.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    analyze_cell, analyze_victims, AnalysisOptions, CdfCurve, CellAnalysis, SirCdf,
    TAB_HALF_WIDTH_SD,
};
use crate::channel::ChannelParams;
use crate::fading::FadingModel;
use crate::quadrature::gauss_hermite;
use crate::rng::{derive_seed, tag};
use crate::scenario::{generate_hex_lattice, generate_hotspot, Deployment, HotspotConfig};
use crate::simulator::{simulate, SimConfig, Victim};
use crate::{format_sig, Error, Result};

/// Which cells act as the tagged cell in each random deployment.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VictimPolicy {
    /// Every cell in turn, equally weighted.
    #[default]
    AllCells,
    /// Only the cell nearest the deployment centre.
    Center,
}

/// Monte Carlo validation run alongside the analysis, per deployment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MacroSimOptions {
    pub n_ue_drops: usize,
    pub n_channel_draws: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SemiOptions {
    pub n_deployments: usize,
    pub seed: u64,
    pub victim_policy: VictimPolicy,
    /// Keep each deployment's own averaged curve in the result.
    pub keep_per_deployment: bool,
    /// Resolution of the signal-CDF table used when many victims share a
    /// grid (`AllCells`); the `Center` policy evaluates exactly.
    pub signal_table_points: usize,
}

impl Default for SemiOptions {
    fn default() -> Self {
        SemiOptions {
            n_deployments: 50,
            seed: 1,
            victim_policy: VictimPolicy::AllCells,
            keep_per_deployment: false,
            signal_table_points: 4001,
        }
    }
}

impl SemiOptions {
    pub fn validate(&self) -> Result<()> {
        if self.n_deployments == 0 {
            return Err(Error::invalid("n_deployments", "must be at least 1"));
        }
        if self.signal_table_points < 2 {
            return Err(Error::invalid("signal_table_points", "must be at least 2"));
        }
        Ok(())
    }
}

/// Seeds used for deployment `k` of a semi-analytical run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeploymentSeeds {
    pub deployment: u64,
    pub analysis: u64,
    pub simulation: u64,
}

pub fn deployment_seeds(seed: u64, k: usize) -> DeploymentSeeds {
    DeploymentSeeds {
        deployment: derive_seed(seed, &[tag::DEPLOYMENT, k as u64]),
        analysis: derive_seed(seed, &[tag::ANALYSIS_SEED, k as u64]),
        simulation: derive_seed(seed, &[tag::SIM_SEED, k as u64]),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationStats {
    /// Largest absolute CDF difference over the grid.
    pub max_dev: f64,
    pub mean_dev: f64,
}

impl DeviationStats {
    pub fn between(a: &[f64], b: &[f64]) -> Self {
        let n = a.len().min(b.len()).max(1);
        let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs());
        let (max_dev, sum) = diffs.fold((0.0f64, 0.0), |(m, s), d| (m.max(d), s + d));
        DeviationStats {
            max_dev,
            mean_dev: sum / n as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacroResult {
    /// Averaged analytic SIR CDF.
    pub mean_cdf: CdfCurve,
    pub per_deployment_cdfs: Option<Vec<CdfCurve>>,
    pub n_deployments: usize,
    /// Pooled empirical SIR CDF on the same grid, when simulated.
    pub empirical: Option<CdfCurve>,
    pub deviation: Option<DeviationStats>,
}

impl MacroResult {
    pub fn median_analytic(&self) -> f64 {
        self.mean_cdf.median()
    }

    pub fn median_empirical(&self) -> Option<f64> {
        self.empirical.as_ref().map(CdfCurve::median)
    }

    /// `n_deployments,max_dev,mean_dev,median_analytic_db,median_empirical_db`;
    /// missing values are left empty.
    pub fn summary_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(format_sig).unwrap_or_default();
        let mut s = String::from("n_deployments,max_dev,mean_dev,median_analytic_db,median_empirical_db\n");
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            self.n_deployments,
            opt(self.deviation.map(|d| d.max_dev)),
            opt(self.deviation.map(|d| d.mean_dev)),
            format_sig(self.median_analytic()),
            opt(self.median_empirical()),
        );
        s
    }

    /// Writes `sir_mean_cdf.csv`, `summary.csv`, and when present
    /// `sir_empirical_cdf.csv` and `sir_cdf_deployment_<k>.csv`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.mean_cdf.write_csv(&dir.join("sir_mean_cdf.csv"))?;
        std::fs::write(dir.join("summary.csv"), self.summary_csv())?;
        if let Some(e) = &self.empirical {
            e.write_csv(&dir.join("sir_empirical_cdf.csv"))?;
        }
        if let Some(per) = &self.per_deployment_cdfs {
            for (k, c) in per.iter().enumerate() {
                c.write_csv(&dir.join(format!("sir_cdf_deployment_{k}.csv")))?;
            }
        }
        Ok(())
    }
}

/// Pointwise mean of curves sharing one grid.
pub fn average_curves(curves: &[CdfCurve]) -> Result<CdfCurve> {
    let first = curves.first().ok_or(Error::EmptySamples)?;
    if curves.iter().any(|c| c.grid != first.grid) {
        return Err(Error::invalid("curves", "averaged curves must share one grid"));
    }
    let n = curves.len() as f64;
    let probs: Vec<f64> = (0..first.len())
        .map(|i| curves.iter().map(|c| c.probs[i]).sum::<f64>() / n)
        .collect();
    let mut run: f64 = 0.0;
    let probs = probs
        .into_iter()
        .map(|p| {
            run = run.max(p.clamp(0.0, 1.0));
            run
        })
        .collect();
    CdfCurve::new(first.grid.clone(), probs)
}

struct PerDeployment {
    analytic: CdfCurve,
    empirical: Option<Vec<f64>>,
}

/// Averages the analytic SIR CDF over `semi.n_deployments` hotspot drops.
///
/// Deployment `k` is generated from [`deployment_seeds`]`(semi.seed, k)`. All
/// victims' curves are evaluated on one grid spanning mean ± 8 SD of every
/// victim's SIR approximation, then averaged with equal weight per victim and
/// per deployment. With `sim`, each deployment is also simulated (victims
/// cycled over all cells, or the centre cell) and the pooled empirical CDF
/// is reported on the same grid.
pub fn semi_analytical(
    hotspot: &HotspotConfig,
    params: &ChannelParams,
    fading: &FadingModel,
    opts: &AnalysisOptions,
    semi: &SemiOptions,
    sim: Option<&MacroSimOptions>,
) -> Result<MacroResult> {
    hotspot.validate()?;
    semi.validate()?;
    opts.validate()?;
    let rule = gauss_hermite(opts.gh_order)?;

    let per: Vec<PerDeployment> = (0..semi.n_deployments)
        .into_par_iter()
        .map(|k| {
            let seeds = deployment_seeds(semi.seed, k);
            let dep = generate_hotspot(hotspot, seeds.deployment)?;
            let victims: Vec<usize> = match semi.victim_policy {
                VictimPolicy::AllCells => (0..dep.len()).collect(),
                VictimPolicy::Center => vec![dep.center_cell().ok_or(Error::EmptyRegion {
                    cell: 0,
                    attempts: 0,
                })?],
            };
            let o = AnalysisOptions { seed: seeds.analysis, ..*opts };
            let models = analyze_victims(&dep, &victims, params, fading, &o)?;

            let (lo, hi) = models.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), m| {
                let (mz, sz) = m.sir_moments(fading);
                let half = TAB_HALF_WIDTH_SD * sz.max(1e-6);
                (lo.min(mz - half), hi.max(mz + half))
            });
            let grid = grid_points(lo, hi, opts.grid_points);
            let curves: Vec<Vec<f64>> = models
                .iter()
                .map(|m| {
                    let f = SirCdf::new(&m.g1, fading, &m.fit.dist, &rule);
                    match semi.victim_policy {
                        VictimPolicy::Center => grid.iter().map(|&z| f.eval(z)).collect(),
                        VictimPolicy::AllCells => f.eval_many_tabulated(&grid, semi.signal_table_points),
                    }
                })
                .collect();
            let n = victims.len() as f64;
            let probs = (0..grid.len())
                .map(|i| curves.iter().map(|v| v[i]).sum::<f64>() / n)
                .collect();
            let analytic = monotone_curve(grid, probs)?;

            let empirical = match sim {
                None => None,
                Some(s) => {
                    let cfg = SimConfig {
                        n_ue_drops: s.n_ue_drops,
                        n_channel_draws: s.n_channel_draws,
                        seed: seeds.simulation,
                        victim: match semi.victim_policy {
                            VictimPolicy::AllCells => Victim::AllCells,
                            VictimPolicy::Center => Victim::Cell(victims[0]),
                        },
                    };
                    Some(simulate(&dep, params, fading, &cfg)?.sir.samples().to_vec())
                }
            };
            Ok(PerDeployment { analytic, empirical })
        })
        .collect::<Result<_>>()?;

    // Common grid across deployments.
    let lo = per.iter().map(|p| p.analytic.grid[0]).fold(f64::INFINITY, f64::min);
    let hi = per
        .iter()
        .map(|p| p.analytic.grid[p.analytic.len() - 1])
        .fold(f64::NEG_INFINITY, f64::max);
    let grid = grid_points(lo, hi, opts.grid_points);
    let on_common: Vec<CdfCurve> = per
        .iter()
        .map(|p| monotone_curve(grid.clone(), grid.iter().map(|&z| p.analytic.eval(z)).collect()))
        .collect::<Result<_>>()?;
    let mean_cdf = average_curves(&on_common)?;

    let empirical = if sim.is_some() {
        // Equal sample counts per deployment, so the pooled CDF is the mean
        // of the per-deployment step functions.
        let curves: Vec<CdfCurve> = per
            .iter()
            .filter_map(|p| p.empirical.as_ref())
            .map(|s| monotone_curve(grid.clone(), step_on_grid(s, &grid)))
            .collect::<Result<_>>()?;
        Some(average_curves(&curves)?)
    } else {
        None
    };
    let deviation = empirical.as_ref().map(|e| DeviationStats::between(&mean_cdf.probs, &e.probs));

    Ok(MacroResult {
        mean_cdf,
        per_deployment_cdfs: semi.keep_per_deployment.then_some(on_common),
        n_deployments: semi.n_deployments,
        empirical,
        deviation,
    })
}

fn grid_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn monotone_curve(grid: Vec<f64>, probs: Vec<f64>) -> Result<CdfCurve> {
    let mut run: f64 = 0.0;
    let mut out = Vec::with_capacity(probs.len());
    for p in probs {
        if !p.is_finite() {
            return Err(Error::Numerical(format!("non-finite CDF value {p}")));
        }
        run = run.max(p.clamp(0.0, 1.0));
        out.push(run);
    }
    CdfCurve::new(grid, out)
}

/// Fraction of sorted `samples` at or below each grid point.
fn step_on_grid(samples: &[f64], grid: &[f64]) -> Vec<f64> {
    let n = samples.len() as f64;
    grid.iter().map(|&x| samples.partition_point(|&s| s <= x) as f64 / n).collect()
}

/// Hex lattice with the hotspot deployment's density and cell count.
pub fn equivalent_hex_lattice(hotspot: &HotspotConfig) -> Result<Deployment> {
    hotspot.validate()?;
    generate_hex_lattice(hotspot.density_per_km2(), hotspot.cell_count(), &hotspot.cell)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HexBound {
    pub result: MacroResult,
    /// Full analysis of the centroid cell (holds `G1` and the fitted aggregate).
    pub analysis: CellAnalysis,
}

/// Analyzes the centroid cell of a hexagonal lattice with `density_per_km2`
/// and `count` cells. Its SIR CDF upper-bounds the random-deployment average.
pub fn analytical_hex_bound(
    density_per_km2: f64,
    count: usize,
    template: &crate::scenario::CellTemplate,
    params: &ChannelParams,
    fading: &FadingModel,
    opts: &AnalysisOptions,
) -> Result<HexBound> {
    let dep = generate_hex_lattice(density_per_km2, count, template)?;
    let analysis = analyze_cell(&dep, 0, params, fading, opts)?;
    Ok(HexBound {
        result: MacroResult {
            mean_cdf: analysis.sir.clone(),
            per_deployment_cdfs: None,
            n_deployments: 1,
            empirical: None,
            deviation: None,
        },
        analysis,
    })
}
