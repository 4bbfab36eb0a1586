//! Deterministic BS deployments, coverage regions and UE samplers.
//!
//! A cell's coverage region is the annulus `[min_bs_ue_km, coverage_radius_km]`
//! around its BS, minus every point that some other BS covers at a strictly
//! smaller distance (equal distances go to the lower index). Regions are
//! therefore pairwise disjoint and membership is a pure predicate.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::{stream, tag};
use crate::{format_sig, Error, Result};

/// Retry budget for BS drops and UE rejection sampling.
pub const RETRY_BUDGET: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    #[inline]
    pub fn dist_sq(&self, o: &Point) -> f64 {
        let dx = self.x - o.x;
        let dy = self.y - o.y;
        dx * dx + dy * dy
    }

    #[inline]
    pub fn dist(&self, o: &Point) -> f64 {
        self.dist_sq(o).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UeDistribution {
    /// Constant density over the region.
    #[default]
    Uniform,
    /// Density proportional to `1/ρ`, ρ the distance to the own BS.
    InverseRadial,
}

impl UeDistribution {
    pub fn as_str(&self) -> &'static str {
        match self {
            UeDistribution::Uniform => "uniform",
            UeDistribution::InverseRadial => "inverse_radial",
        }
    }
}

/// Per-cell geometry shared by all cells a generator emits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellTemplate {
    pub coverage_radius_km: f64,
    pub min_bs_ue_km: f64,
    #[serde(default)]
    pub ue_distribution: UeDistribution,
}

impl Default for CellTemplate {
    fn default() -> Self {
        CellTemplate {
            coverage_radius_km: 0.04,
            min_bs_ue_km: 0.01,
            ue_distribution: UeDistribution::Uniform,
        }
    }
}

impl CellTemplate {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_bs_ue_km > 0.0 && self.min_bs_ue_km.is_finite()) {
            return Err(Error::invalid("min_bs_ue_km", "must be positive"));
        }
        if !(self.coverage_radius_km > self.min_bs_ue_km && self.coverage_radius_km.is_finite()) {
            return Err(Error::invalid(
                "coverage_radius_km",
                format!(
                    "must exceed min_bs_ue_km ({} km), got {}",
                    self.min_bs_ue_km, self.coverage_radius_km
                ),
            ));
        }
        Ok(())
    }

    fn cell(&self, id: usize, bs: Point) -> Cell {
        Cell {
            id,
            bs,
            coverage_radius_km: self.coverage_radius_km,
            min_bs_ue_km: self.min_bs_ue_km,
            ue_distribution: self.ue_distribution,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub id: usize,
    pub bs: Point,
    pub coverage_radius_km: f64,
    pub min_bs_ue_km: f64,
    pub ue_distribution: UeDistribution,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub min: Point,
    pub max: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    pub cells: Vec<Cell>,
    pub bounds: Bounds,
    /// Seed the deployment was drawn with; 0 for lattices.
    pub seed: u64,
    /// For each cell, the other cells whose coverage disks can overlap it.
    neighbors: Vec<Vec<usize>>,
}

impl Deployment {
    pub fn new(cells: Vec<Cell>, bounds: Bounds, seed: u64) -> Result<Self> {
        for (i, c) in cells.iter().enumerate() {
            if c.id != i {
                return Err(Error::invalid("cells", format!("cell at position {i} has id {}", c.id)));
            }
            CellTemplate {
                coverage_radius_km: c.coverage_radius_km,
                min_bs_ue_km: c.min_bs_ue_km,
                ue_distribution: c.ue_distribution,
            }
            .validate()?;
        }
        let neighbors = cells
            .iter()
            .map(|a| {
                cells
                    .iter()
                    .filter(|b| {
                        let reach = a.coverage_radius_km + b.coverage_radius_km;
                        b.id != a.id && a.bs.dist_sq(&b.bs) < reach * reach
                    })
                    .map(|b| b.id)
                    .collect()
            })
            .collect();
        Ok(Deployment {
            cells,
            bounds,
            seed,
            neighbors,
        })
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cell(&self, id: usize) -> Result<&Cell> {
        self.cells.get(id).ok_or(Error::CellIndex {
            index: id,
            count: self.cells.len(),
        })
    }

    /// Smallest pairwise BS distance (∞ for fewer than two cells).
    pub fn min_pairwise_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.cells.iter().enumerate() {
            for b in &self.cells[i + 1..] {
                best = best.min(a.bs.dist_sq(&b.bs));
            }
        }
        best.sqrt()
    }

    /// Index of the cell whose BS is nearest the BS centroid.
    pub fn center_cell(&self) -> Option<usize> {
        if self.cells.is_empty() {
            return None;
        }
        let n = self.cells.len() as f64;
        let c = Point::new(
            self.cells.iter().map(|c| c.bs.x).sum::<f64>() / n,
            self.cells.iter().map(|c| c.bs.y).sum::<f64>() / n,
        );
        self.cells
            .iter()
            .min_by(|a, b| a.bs.dist_sq(&c).total_cmp(&b.bs.dist_sq(&c)))
            .map(|c| c.id)
    }

    pub fn region_contains(&self, cell_id: usize, p: &Point) -> bool {
        let own = &self.cells[cell_id];
        let d_own = own.bs.dist_sq(p);
        let r_min = own.min_bs_ue_km;
        let r_max = own.coverage_radius_km;
        if d_own < r_min * r_min || d_own > r_max * r_max {
            return false;
        }
        for &j in &self.neighbors[cell_id] {
            let other = &self.cells[j];
            let d = other.bs.dist_sq(p);
            let covers = d <= other.coverage_radius_km * other.coverage_radius_km;
            if covers && (d < d_own || (d == d_own && j < cell_id)) {
                return false;
            }
        }
        true
    }

    /// Draws a UE position in the region of `cell_id` from `dist`.
    pub fn sample_ue<R: Rng + ?Sized>(
        &self,
        cell_id: usize,
        dist: UeDistribution,
        rng: &mut R,
    ) -> Result<Point> {
        let cell = self.cell(cell_id)?;
        let (r1, r2) = (cell.min_bs_ue_km, cell.coverage_radius_km);
        for _ in 0..RETRY_BUDGET {
            let rho = match dist {
                UeDistribution::Uniform => {
                    let u: f64 = rng.random();
                    (r1 * r1 + u * (r2 * r2 - r1 * r1)).sqrt()
                }
                // A 1/ρ density times the 2πρ Jacobian is flat in ρ.
                UeDistribution::InverseRadial => r1 + rng.random::<f64>() * (r2 - r1),
            };
            let phi = rng.random::<f64>() * TAU;
            let p = Point::new(cell.bs.x + rho * phi.cos(), cell.bs.y + rho * phi.sin());
            if self.region_contains(cell_id, &p) {
                return Ok(p);
            }
        }
        Err(Error::EmptyRegion {
            cell: cell_id,
            attempts: RETRY_BUDGET,
        })
    }

    /// Flat CSV, one row per cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,x_km,y_km,radius_km,ue_dist_kind\n");
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                c.id,
                format_sig(c.bs.x),
                format_sig(c.bs.y),
                format_sig(c.coverage_radius_km),
                c.ue_distribution.as_str()
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Free-function form of [`Deployment::region_contains`].
pub fn region_contains(dep: &Deployment, cell_id: usize, p: &Point) -> bool {
    dep.region_contains(cell_id, p)
}

/// Free-function form of [`Deployment::sample_ue`].
pub fn sample_ue<R: Rng + ?Sized>(
    dep: &Deployment,
    cell_id: usize,
    dist: UeDistribution,
    rng: &mut R,
) -> Result<Point> {
    dep.sample_ue(cell_id, dist, rng)
}

fn bounds_of(points: impl Iterator<Item = Point>, pad: f64) -> Bounds {
    let mut min = Point::new(f64::INFINITY, f64::INFINITY);
    let mut max = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        min.x = min.x.min(p.x);
        min.y = min.y.min(p.y);
        max.x = max.x.max(p.x);
        max.y = max.y.max(p.y);
    }
    if !min.x.is_finite() {
        return Bounds {
            min: Point::default(),
            max: Point::default(),
        };
    }
    Bounds {
        min: Point::new(min.x - pad, min.y - pad),
        max: Point::new(max.x + pad, max.y + pad),
    }
}

// ---------------------------------------------------------------------------
// Hotspot drop

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HotspotConfig {
    pub inter_site_distance_km: f64,
    /// Macro sites, taken ring by ring around the origin (19 = two rings).
    pub n_sites: usize,
    /// Small cells dropped in each of the three sectors of a site.
    pub cells_per_macrocell: usize,
    /// Minimum distance between any two small-cell BSs.
    pub min_inter_bs_km: f64,
    #[serde(flatten)]
    pub cell: CellTemplate,
}

impl Default for HotspotConfig {
    fn default() -> Self {
        HotspotConfig {
            inter_site_distance_km: 0.5,
            n_sites: 19,
            cells_per_macrocell: 4,
            min_inter_bs_km: 0.04,
            cell: CellTemplate::default(),
        }
    }
}

pub const SECTORS_PER_SITE: usize = 3;

impl HotspotConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.inter_site_distance_km > 0.0 && self.inter_site_distance_km.is_finite()) {
            return Err(Error::invalid("inter_site_distance_km", "must be positive"));
        }
        if self.n_sites == 0 {
            return Err(Error::invalid("n_sites", "need at least one macro site"));
        }
        if !(self.min_inter_bs_km >= 0.0 && self.min_inter_bs_km.is_finite()) {
            return Err(Error::invalid("min_inter_bs_km", "must be non-negative"));
        }
        self.cell.validate()
    }

    pub fn cell_count(&self) -> usize {
        self.n_sites * SECTORS_PER_SITE * self.cells_per_macrocell
    }

    /// Area covered by the macro-site hexagons.
    pub fn footprint_km2(&self) -> f64 {
        let isd = self.inter_site_distance_km;
        self.n_sites as f64 * 3f64.sqrt() / 2.0 * isd * isd
    }

    /// Small cells per km² over the macro footprint.
    pub fn density_per_km2(&self) -> f64 {
        self.cell_count() as f64 / self.footprint_km2()
    }

    /// Macro-site centres: origin first, then ring by ring, counter-clockwise
    /// from the positive x axis.
    pub fn site_centers(&self) -> Vec<Point> {
        let mut rings = 0i64;
        while 1 + 3 * rings * (rings + 1) < self.n_sites as i64 {
            rings += 1;
        }
        let mut axial = Vec::new();
        for q in -rings..=rings {
            for r in -rings..=rings {
                let ring = q.abs().max(r.abs()).max((q + r).abs());
                if ring <= rings {
                    axial.push((ring, q, r));
                }
            }
        }
        let isd = self.inter_site_distance_km;
        let mut sites: Vec<(i64, f64, Point)> = axial
            .into_iter()
            .map(|(ring, q, r)| {
                let p = Point::new(isd * (q as f64 + r as f64 / 2.0), isd * r as f64 * 3f64.sqrt() / 2.0);
                let ang = p.y.atan2(p.x).rem_euclid(TAU);
                (ring, if ring == 0 { 0.0 } else { ang }, p)
            })
            .collect();
        sites.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        sites.truncate(self.n_sites);
        sites.into_iter().map(|s| s.2).collect()
    }
}

/// Draws a uniform point in sector `s` of the pointy-top hexagon centred at
/// `c` with circumradius `rc`. Each sector is the rhombus spanned by two
/// adjacent vertex vectors, so the three sectors tile the hexagon.
fn sample_sector<R: Rng + ?Sized>(c: Point, rc: f64, s: usize, rng: &mut R) -> Point {
    let a1 = (30.0 + 120.0 * s as f64).to_radians();
    let a2 = a1 + 2.0 * PI / 3.0;
    let (u, v): (f64, f64) = (rng.random(), rng.random());
    Point::new(
        c.x + rc * (u * a1.cos() + v * a2.cos()),
        c.y + rc * (u * a1.sin() + v * a2.sin()),
    )
}

pub fn generate_hotspot(config: &HotspotConfig, seed: u64) -> Result<Deployment> {
    config.validate()?;
    let mut rng = stream(seed, &[tag::HOTSPOT_DROP]);
    let rc = config.inter_site_distance_km / 3f64.sqrt();
    let dmin2 = config.min_inter_bs_km * config.min_inter_bs_km;
    let mut placed: Vec<Point> = Vec::with_capacity(config.cell_count());
    for (site_idx, &c) in config.site_centers().iter().enumerate() {
        for s in 0..SECTORS_PER_SITE {
            let macrocell = site_idx * SECTORS_PER_SITE + s;
            for k in 0..config.cells_per_macrocell {
                let mut ok = None;
                for _ in 0..RETRY_BUDGET {
                    let p = sample_sector(c, rc, s, &mut rng);
                    if placed.iter().all(|q| q.dist_sq(&p) >= dmin2) {
                        ok = Some(p);
                        break;
                    }
                }
                match ok {
                    Some(p) => placed.push(p),
                    None => {
                        return Err(Error::Generation {
                            macrocell,
                            cell: k,
                            attempts: RETRY_BUDGET,
                        })
                    }
                }
            }
        }
    }
    let pad = config.cell.coverage_radius_km;
    let site_pts = config.site_centers();
    let bounds = bounds_of(site_pts.into_iter(), rc + pad);
    let cells = placed
        .into_iter()
        .enumerate()
        .map(|(i, p)| config.cell.cell(i, p))
        .collect();
    Deployment::new(cells, bounds, seed)
}

// ---------------------------------------------------------------------------
// Hexagonal lattice

/// Lattice spacing giving `density_per_km2` points per km².
pub fn hex_spacing(density_per_km2: f64) -> f64 {
    (2.0 / (3f64.sqrt() * density_per_km2)).sqrt()
}

/// The `count` triangular-lattice points nearest the origin. Index 0 is the
/// origin itself, i.e. the tagged cell; the rest follow by distance, then
/// angle.
pub fn generate_hex_lattice(density_per_km2: f64, count: usize, cell: &CellTemplate) -> Result<Deployment> {
    if !(density_per_km2 > 0.0 && density_per_km2.is_finite()) {
        return Err(Error::invalid("density_per_km2", "must be positive"));
    }
    if count == 0 {
        return Err(Error::invalid("count", "must be positive"));
    }
    cell.validate()?;
    let d = hex_spacing(density_per_km2);
    let k = (count as f64).sqrt().ceil() as i64 + 2;
    let mut pts: Vec<(i64, f64, Point)> = Vec::new();
    for i in -k..=k {
        for j in -k..=k {
            let norm = i * i + i * j + j * j;
            let p = Point::new(d * (i as f64 + j as f64 / 2.0), d * j as f64 * 3f64.sqrt() / 2.0);
            let ang = if norm == 0 { 0.0 } else { p.y.atan2(p.x).rem_euclid(TAU) };
            pts.push((norm, ang, p));
        }
    }
    pts.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.truncate(count);
    let bounds = bounds_of(pts.iter().map(|p| p.2), cell.coverage_radius_km);
    let cells = pts
        .into_iter()
        .enumerate()
        .map(|(i, p)| cell.cell(i, p.2))
        .collect();
    Deployment::new(cells, bounds, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn isolated(dist: UeDistribution) -> Deployment {
        let t = CellTemplate {
            ue_distribution: dist,
            ..Default::default()
        };
        generate_hex_lattice(1.0, 1, &t).unwrap()
    }

    #[test]
    fn hotspot_default_has_228_cells() {
        let cfg = HotspotConfig::default();
        let dep = generate_hotspot(&cfg, 1).unwrap();
        assert_eq!(dep.len(), 228);
        assert!(dep.min_pairwise_distance() >= 0.04);
        assert!((cfg.density_per_km2() - 55.43).abs() < 0.01);
    }

    #[test]
    fn hotspot_seeds_differ_but_keep_invariants() {
        let cfg = HotspotConfig::default();
        let a = generate_hotspot(&cfg, 1).unwrap();
        let b = generate_hotspot(&cfg, 2).unwrap();
        let again = generate_hotspot(&cfg, 1).unwrap();
        assert_eq!(a, again);
        assert_ne!(a.cells[0].bs, b.cells[0].bs);
        assert_eq!(a.len(), b.len());
        for dep in [&a, &b] {
            for i in 0..dep.len() {
                for j in i + 1..dep.len() {
                    assert!(dep.cells[i].bs.dist(&dep.cells[j].bs) >= 0.04);
                }
            }
        }
    }

    #[test]
    fn hotspot_cells_stay_inside_their_sector() {
        let cfg = HotspotConfig::default();
        let dep = generate_hotspot(&cfg, 5).unwrap();
        let sites = cfg.site_centers();
        let rc = cfg.inter_site_distance_km / 3f64.sqrt();
        for (i, c) in dep.cells.iter().enumerate() {
            let site = sites[i / 12];
            let sector = (i / 4) % 3;
            // Sector centre direction is the rhombus diagonal.
            let mid = (90.0 + 120.0 * sector as f64).to_radians();
            let v = Point::new(c.bs.x - site.x, c.bs.y - site.y);
            assert!(v.x.hypot(v.y) <= rc + 1e-12);
            assert!(v.x * mid.cos() + v.y * mid.sin() >= -1e-12);
        }
    }

    #[test]
    fn degenerate_hotspot_is_empty() {
        let cfg = HotspotConfig {
            n_sites: 1,
            cells_per_macrocell: 0,
            ..Default::default()
        };
        assert!(generate_hotspot(&cfg, 3).unwrap().is_empty());
    }

    #[test]
    fn infeasible_hotspot_reports_macrocell() {
        let cfg = HotspotConfig {
            n_sites: 1,
            cells_per_macrocell: 50,
            min_inter_bs_km: 0.2,
            ..Default::default()
        };
        match generate_hotspot(&cfg, 1) {
            Err(Error::Generation { macrocell, .. }) => assert_eq!(macrocell, 0),
            other => panic!("expected generation error, got {other:?}"),
        }
    }

    #[test]
    fn hex_lattice_geometry() {
        let dep = generate_hex_lattice(55.43, 228, &CellTemplate::default()).unwrap();
        let d = hex_spacing(55.43);
        assert!((d - 0.144_334).abs() < 1e-5);
        assert_eq!(dep.len(), 228);
        assert_eq!(dep.cells[0].bs, Point::new(0.0, 0.0));
        assert_eq!(dep.center_cell(), Some(0));
        // Every cell with all six neighbours present sits at exactly d from them.
        let mut interior = 0;
        for a in &dep.cells {
            let near: Vec<f64> = dep
                .cells
                .iter()
                .filter(|b| b.id != a.id)
                .map(|b| a.bs.dist(&b.bs))
                .filter(|&r| r < 1.5 * d)
                .collect();
            if near.len() == 6 {
                interior += 1;
                for r in near {
                    assert!(((r - d) / d).abs() < 1e-12);
                }
            }
        }
        assert!(interior > 150);
        let one = generate_hex_lattice(1.0, 1, &CellTemplate::default()).unwrap();
        assert_eq!(one.cells[0].bs, Point::new(0.0, 0.0));
        assert!(generate_hex_lattice(0.0, 5, &CellTemplate::default()).is_err());
    }

    #[test]
    fn region_predicate_examples() {
        let dep = isolated(UeDistribution::Uniform);
        assert!(dep.region_contains(0, &Point::new(0.02, 0.0)));
        assert!(!dep.region_contains(0, &Point::new(0.005, 0.0)));
        assert!(!dep.region_contains(0, &Point::new(0.041, 0.0)));

        let t = CellTemplate::default();
        let cells = vec![
            t.cell(0, Point::new(0.0, 0.0)),
            t.cell(1, Point::new(0.05, 0.0)),
        ];
        let b = bounds_of(cells.iter().map(|c| c.bs), 0.04);
        let two = Deployment::new(cells, b, 0).unwrap();
        let p = Point::new(0.03, 0.0);
        assert!(!two.region_contains(0, &p));
        assert!(two.region_contains(1, &p));
        // Equidistant point goes to the lower index.
        let mid = Point::new(0.025, 0.01);
        assert!(two.region_contains(0, &mid));
        assert!(!two.region_contains(1, &mid));
    }

    #[test]
    fn annulus_sampling_moments() {
        let n = 1_000_000;
        let (r1, r2): (f64, f64) = (0.01, 0.04);
        for (dist, expect) in [
            (
                UeDistribution::Uniform,
                2.0 / 3.0 * (r2.powi(3) - r1.powi(3)) / (r2 * r2 - r1 * r1),
            ),
            (UeDistribution::InverseRadial, 0.025),
        ] {
            let dep = isolated(dist);
            let mut rng = stream(42, &[dist as u64]);
            let rs: Vec<f64> = (0..n)
                .map(|_| dep.sample_ue(0, dist, &mut rng).unwrap().dist(&Point::default()))
                .collect();
            let mean = rs.iter().sum::<f64>() / n as f64;
            let var = rs.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let se = (var / n as f64).sqrt();
            assert!((mean - expect).abs() < 3.0 * se, "{dist:?}: {mean} vs {expect}");
        }
    }

    #[test]
    fn samples_respect_regions_in_dense_deployment() {
        let dep = generate_hotspot(&HotspotConfig::default(), 9).unwrap();
        let mut rng = stream(1, &[2]);
        for k in 0..100_000 {
            let cell = k % dep.len();
            let p = dep.sample_ue(cell, UeDistribution::InverseRadial, &mut rng).unwrap();
            assert!(dep.region_contains(cell, &p));
            // Disjointness: no other region claims the point.
            for j in 0..dep.len() {
                if j != cell {
                    assert!(!dep.region_contains(j, &p));
                }
            }
        }
    }

    #[test]
    fn csv_shape() {
        let dep = generate_hex_lattice(55.43, 3, &CellTemplate::default()).unwrap();
        let csv = dep.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "id,x_km,y_km,radius_km,ue_dist_kind");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1], "0,0,0,0.04,uniform");
    }
}
