//! Seeded Monte Carlo ground truth.
//!
//! Outer loop: UE drops (one UE per cell, drawn jointly). Inner loop: channel
//! draws (every shadow term and fading gain fresh). The SIR is computed
//! exactly, summing interference in mW. Each drop owns its RNG sub-streams,
//! so results do not depend on how drops are scheduled across threads.

use std::fmt::Write as _;
use std::path::Path;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::CdfCurve;
use crate::channel::ChannelParams;
use crate::fading::FadingModel;
use crate::rng::{stream, tag};
use crate::scenario::{Deployment, Point};
use crate::{format_sig, Error, Result, ZETA};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Victim {
    Cell(usize),
    /// Every cell in turn: draw `j` of drop `d` tags cell `(d·draws + j) mod B`.
    AllCells,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_ue_drops: usize,
    pub n_channel_draws: usize,
    pub seed: u64,
    pub victim: Victim,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_ue_drops == 0 {
            return Err(Error::invalid("n_ue_drops", "must be at least 1"));
        }
        if self.n_channel_draws == 0 {
            return Err(Error::invalid("n_channel_draws", "must be at least 1"));
        }
        Ok(())
    }
}

/// Sorted samples.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    samples: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySamples);
        }
        if samples.iter().any(|x| x.is_nan()) {
            return Err(Error::Numerical("NaN in empirical samples".into()));
        }
        samples.sort_by(f64::total_cmp);
        Ok(EmpiricalCdf { samples })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Fraction of samples `≤ x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.samples.partition_point(|&s| s <= x) as f64 / self.samples.len() as f64
    }

    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.samples.len();
        let k = ((p * n as f64).ceil() as usize).clamp(1, n);
        self.samples[k - 1]
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Unbiased sample variance.
    pub fn var(&self) -> f64 {
        let n = self.samples.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        self.samples.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
    }

    /// The step function evaluated on `grid`.
    pub fn on_grid(&self, grid: &[f64]) -> Vec<f64> {
        grid.iter().map(|&x| self.eval(x)).collect()
    }

    /// Single column of sorted samples.
    pub fn to_samples_csv(&self) -> String {
        let mut s = String::from("value_db\n");
        for x in &self.samples {
            let _ = writeln!(s, "{}", format_sig(*x));
        }
        s
    }

    /// Two columns `(value_db, i/n)`, the same shape as a [`CdfCurve`] file.
    pub fn to_cdf_csv(&self) -> String {
        let n = self.samples.len() as f64;
        let mut s = String::from("value_db,cdf\n");
        for (i, x) in self.samples.iter().enumerate() {
            let _ = writeln!(s, "{},{}", format_sig(*x), format_sig((i + 1) as f64 / n));
        }
        s
    }

    pub fn write_cdf_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_cdf_csv())?;
        Ok(())
    }

    /// Reads either export format back. For the two-column form the sample
    /// values are the first column.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        lines.next().ok_or_else(|| Error::Csv("empty file".into()))?;
        let mut xs = Vec::new();
        for (n, line) in lines.enumerate() {
            let v = line.split(',').next().unwrap_or("").trim();
            xs.push(
                v.parse::<f64>()
                    .map_err(|e| Error::Csv(format!("row {}: {e}", n + 2)))?,
            );
        }
        EmpiricalCdf::new(xs).map_err(|e| Error::Csv(e.to_string()))
    }
}

/// Two-sided Kolmogorov-Smirnov distance between the samples and a function
/// CDF, checking both sides of every jump.
pub fn ks_distance_fn(emp: &EmpiricalCdf, f: impl Fn(f64) -> f64) -> f64 {
    let xs = &emp.samples;
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        let mut j = i;
        while j + 1 < xs.len() && xs[j + 1] == xs[i] {
            j += 1;
        }
        let fx = f(xs[i]);
        let below = i as f64 / n;
        let at = (j + 1) as f64 / n;
        d = d.max((fx - below).abs()).max((at - fx).abs());
        i = j + 1;
    }
    d.min(1.0)
}

/// KS distance against a tabulated curve (clamped to its end values outside
/// the grid).
pub fn ks_distance(emp: &EmpiricalCdf, analytic: &CdfCurve) -> f64 {
    ks_distance_fn(emp, |x| analytic.eval(x))
}

/// KS distance between a right-continuous step CDF, given by its jump
/// points `xs` (ascending) and values `ps`, and a function CDF. Equals
/// [`ks_distance_fn`] when `ps[i] = (i + 1)/n`.
pub fn ks_distance_steps(xs: &[f64], ps: &[f64], f: impl Fn(f64) -> f64) -> Result<f64> {
    if xs.is_empty() || xs.len() != ps.len() {
        return Err(Error::EmptySamples);
    }
    if xs.windows(2).any(|w| w[1] < w[0]) || ps.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("steps", "values and probabilities must be nondecreasing"));
    }
    let mut d: f64 = 0.0;
    let mut below = 0.0;
    let mut i = 0;
    while i < xs.len() {
        let mut j = i;
        while j + 1 < xs.len() && xs[j + 1] == xs[i] {
            j += 1;
        }
        let fx = f(xs[i]);
        d = d.max((fx - below).abs()).max((ps[j] - fx).abs());
        below = ps[j];
        i = j + 1;
    }
    Ok(d.min(1.0))
}

/// True when no sample falls inside the curve's grid range.
pub fn supports_disjoint(emp: &EmpiricalCdf, analytic: &CdfCurve) -> bool {
    let lo = analytic.grid[0];
    let hi = analytic.grid[analytic.len() - 1];
    emp.samples.iter().all(|&x| x < lo || x > hi)
}

#[inline]
fn normal<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Output of one simulation: three sample sets from the same draws.
#[derive(Debug, Clone)]
pub struct SimOutput {
    pub sir: EmpiricalCdf,
    /// Aggregate interference `10 log10 Σ_b I_b^mW` (dBm).
    pub interference_db: EmpiricalCdf,
    /// Received signal `X1` (dBm).
    pub signal_db: EmpiricalCdf,
}

pub fn simulate(
    dep: &Deployment,
    params: &ChannelParams,
    fading: &FadingModel,
    cfg: &SimConfig,
) -> Result<SimOutput> {
    params.validate()?;
    fading.validate()?;
    cfg.validate()?;
    let b = dep.len();
    if b < 2 {
        return Err(Error::invalid("deployment", "simulation needs at least one interfering cell"));
    }
    let victims: Vec<usize> = match cfg.victim {
        Victim::Cell(v) => {
            dep.cell(v)?;
            vec![v]
        }
        Victim::AllCells => (0..b).collect(),
    };
    let sampler = fading.sampler();
    let sigma = params.sigma_shadow_db;
    let draws = cfg.n_channel_draws;

    let per_drop: Vec<[Vec<f64>; 3]> = (0..cfg.n_ue_drops)
        .into_par_iter()
        .map(|d| {
            let mut rng = stream(cfg.seed, &[tag::UE_DROP, d as u64]);
            let ues: Vec<Point> = (0..b)
                .map(|c| dep.sample_ue(c, dep.cells[c].ue_distribution, &mut rng))
                .collect::<Result<_>>()?;
            let own: Vec<f64> = (0..b)
                .map(|c| params.path_loss_db_sq(dep.cells[c].bs.dist_sq(&ues[c])))
                .collect();
            // cross[vi][c]: path loss from UE c to victim BS vi.
            let cross: Vec<Vec<f64>> = victims
                .iter()
                .map(|&v| {
                    let bs = dep.cells[v].bs;
                    ues.iter().map(|p| params.path_loss_db_sq(bs.dist_sq(p))).collect()
                })
                .collect();

            let mut rng = stream(cfg.seed, &[tag::CHANNEL_DRAW, d as u64]);
            let mut out = [
                Vec::with_capacity(draws),
                Vec::with_capacity(draws),
                Vec::with_capacity(draws),
            ];
            for j in 0..draws {
                let vi = match cfg.victim {
                    Victim::Cell(_) => 0,
                    Victim::AllCells => (d * draws + j) % b,
                };
                let v = victims[vi];
                let s_vv: f64 = sigma * normal(&mut rng);
                let h_vv = sampler.sample_db(&mut rng);
                let x1 = params.p0_dbm + (params.eta - 1.0) * (own[v] + s_vv) + h_vv;
                let mut sum_mw = 0.0;
                for c in 0..b {
                    if c == v {
                        continue;
                    }
                    let s_own: f64 = sigma * normal(&mut rng);
                    let s_cross: f64 = sigma * normal(&mut rng);
                    let g = sampler.sample_linear(&mut rng);
                    let i_db = params.p0_dbm + params.eta * (own[c] + s_own) - cross[vi][c] - s_cross;
                    sum_mw += (i_db / ZETA).exp() * g;
                }
                let i_agg = ZETA * sum_mw.ln();
                out[0].push(x1 - i_agg);
                out[1].push(i_agg);
                out[2].push(x1);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut sir = Vec::with_capacity(cfg.n_ue_drops * draws);
    let mut itf = Vec::with_capacity(cfg.n_ue_drops * draws);
    let mut sig = Vec::with_capacity(cfg.n_ue_drops * draws);
    for [a, i, s] in per_drop {
        sir.extend(a);
        itf.extend(i);
        sig.extend(s);
    }
    Ok(SimOutput {
        sir: EmpiricalCdf::new(sir)?,
        interference_db: EmpiricalCdf::new(itf)?,
        signal_db: EmpiricalCdf::new(sig)?,
    })
}

pub fn simulate_sir(
    dep: &Deployment,
    params: &ChannelParams,
    fading: &FadingModel,
    cfg: &SimConfig,
) -> Result<EmpiricalCdf> {
    Ok(simulate(dep, params, fading, cfg)?.sir)
}

pub fn simulate_interference_db(
    dep: &Deployment,
    params: &ChannelParams,
    fading: &FadingModel,
    cfg: &SimConfig,
) -> Result<EmpiricalCdf> {
    Ok(simulate(dep, params, fading, cfg)?.interference_db)
}

/// Samples of a single interferer's received power `I_b` at `victim`
/// (dBm), one fresh UE position and channel per sample. With
/// `with_fading = false` the fading term is left out.
pub fn simulate_single_interferer(
    dep: &Deployment,
    victim: usize,
    interferer: usize,
    params: &ChannelParams,
    fading: &FadingModel,
    with_fading: bool,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if victim == interferer {
        return Err(Error::invalid("interferer", "victim and interferer must differ"));
    }
    let vbs = dep.cell(victim)?.bs;
    let cell = dep.cell(interferer)?;
    let sampler = fading.sampler();
    let mut rng = stream(seed, &[tag::UE_DROP, victim as u64, interferer as u64]);
    (0..n)
        .map(|_| {
            let p = dep.sample_ue(interferer, cell.ue_distribution, &mut rng)?;
            let l_own = params.path_loss_db_sq(cell.bs.dist_sq(&p));
            let l_cross = params.path_loss_db_sq(vbs.dist_sq(&p));
            let s_own: f64 = params.sigma_shadow_db * normal(&mut rng);
            let s_cross: f64 = params.sigma_shadow_db * normal(&mut rng);
            let h = if with_fading { sampler.sample_db(&mut rng) } else { 0.0 };
            Ok(params.ul_tx_power_dbm(l_own, s_own) - l_cross - s_cross + h)
        })
        .collect()
}
