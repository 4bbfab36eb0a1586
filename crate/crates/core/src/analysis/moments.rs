use crate::channel::ChannelParams;
use crate::fading::FadingModel;
use crate::rng::{stream, tag};
use crate::scenario::{Deployment, Point};
use crate::{Error, Result};

use super::{GaussianApprox, RegionMoments};

/// UE positions drawn once from a cell's region, together with the own-link
/// path loss at each. Moments for any victim are computed from the same set,
/// so batch and single-victim analyses agree bit for bit.
#[derive(Debug, Clone)]
pub struct RegionSampleSet {
    pub cell: usize,
    pub points: Vec<Point>,
    pub own_path_loss_db: Vec<f64>,
}

pub fn region_sample_set(
    dep: &Deployment,
    cell: usize,
    params: &ChannelParams,
    n_samples: usize,
    seed: u64,
) -> Result<RegionSampleSet> {
    if n_samples < 2 {
        return Err(Error::invalid("n_samples", "need at least two region samples"));
    }
    let c = dep.cell(cell)?;
    let mut rng = stream(seed, &[tag::REGION_SAMPLES, cell as u64]);
    let mut points = Vec::with_capacity(n_samples);
    let mut own = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let p = dep.sample_ue(cell, c.ue_distribution, &mut rng)?;
        own.push(params.path_loss_db_sq(c.bs.dist_sq(&p)));
        points.push(p);
    }
    Ok(RegionSampleSet {
        cell,
        points,
        own_path_loss_db: own,
    })
}

#[derive(Default)]
struct Welford {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    #[inline]
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn finish(&self) -> RegionMoments {
        let var = if self.n > 1 {
            self.m2 / (self.n - 1) as f64
        } else {
            0.0
        };
        RegionMoments {
            mu_l: self.mean,
            var_l: var,
            std_error: (var / self.n as f64).sqrt(),
            n_samples: self.n,
        }
    }
}

impl RegionSampleSet {
    /// Moments of `η L_own − L_victim` over this set.
    pub fn interference_moments(
        &self,
        dep: &Deployment,
        victim: usize,
        params: &ChannelParams,
    ) -> Result<RegionMoments> {
        if victim == self.cell {
            return Err(Error::invalid("victim", "victim and interferer must differ"));
        }
        let bs = dep.cell(victim)?.bs;
        let mut acc = Welford::default();
        for (p, &own) in self.points.iter().zip(&self.own_path_loss_db) {
            acc.push(params.eta * own - params.path_loss_db_sq(bs.dist_sq(p)));
        }
        Ok(acc.finish())
    }

    /// Moments of `(η − 1) L_own` over this set.
    pub fn signal_moments(&self, params: &ChannelParams) -> RegionMoments {
        let mut acc = Welford::default();
        for &own in &self.own_path_loss_db {
            acc.push((params.eta - 1.0) * own);
        }
        acc.finish()
    }
}

/// Moments of `L = η L_bb − L_b1` with the UE of `interferer` drawn over its
/// region; `n_samples` region draws on a sub-stream of `seed`.
pub fn interference_path_moments(
    dep: &Deployment,
    victim: usize,
    interferer: usize,
    params: &ChannelParams,
    n_samples: usize,
    seed: u64,
) -> Result<RegionMoments> {
    if victim == interferer {
        return Err(Error::invalid("interferer", "victim and interferer must differ"));
    }
    dep.cell(victim)?;
    region_sample_set(dep, interferer, params, n_samples, seed)?.interference_moments(dep, victim, params)
}

/// Moments of `(η − 1) L_11` over the region of `cell`.
pub fn signal_path_moments(
    dep: &Deployment,
    cell: usize,
    params: &ChannelParams,
    n_samples: usize,
    seed: u64,
) -> Result<RegionMoments> {
    Ok(region_sample_set(dep, cell, params, n_samples, seed)?.signal_moments(params))
}

/// `Q_b`: the path-loss moments plus the combined shadow term give `G_b`;
/// adding the fading moments gives `Q_b`.
pub fn per_cell_interference_gaussian(
    path: &RegionMoments,
    params: &ChannelParams,
    fading: &FadingModel,
) -> GaussianApprox {
    let (ms, vs) = params.interference_shadow_moments();
    let (mh, vh) = fading.moments_db();
    GaussianApprox {
        mean: params.p0_dbm + path.mu_l + ms + mh,
        var: path.var_l + vs + vh,
    }
}

/// `G_1`, the Gaussian part of the received signal (fading excluded).
pub fn signal_gaussian(path: &RegionMoments, params: &ChannelParams) -> GaussianApprox {
    let (ms, vs) = params.signal_shadow_moments();
    GaussianApprox {
        mean: params.p0_dbm + path.mu_l + ms,
        var: path.var_l + vs,
    }
}
