//! The run configuration file (TOML).
//!
//! Every section maps onto library types; validation reports the failing key
//! as `section.key`.

use std::path::Path;

use dnaga::analysis::{AnalysisOptions, FitMethod};
use dnaga::channel::ChannelParams;
use dnaga::fading::FadingModel;
use dnaga::macroscopic::{MacroSimOptions, SemiOptions, VictimPolicy};
use dnaga::scenario::{CellTemplate, HotspotConfig, UeDistribution};
use dnaga::simulator::SimConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Hex,
    Hotspot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub kind: ScenarioKind,
    pub inter_site_distance_km: f64,
    pub n_sites: usize,
    pub cells_per_macrocell: usize,
    pub min_inter_bs_km: f64,
    pub coverage_radius_km: f64,
    pub min_bs_ue_km: f64,
    pub ue_distribution: UeDistribution,
    /// Lattice density for `kind = "hex"`; defaults to the hotspot density.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hex_density_per_km2: Option<f64>,
    /// Lattice size for `kind = "hex"`; defaults to the hotspot cell count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hex_count: Option<usize>,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        let h = HotspotConfig::default();
        ScenarioSection {
            kind: ScenarioKind::Hex,
            inter_site_distance_km: h.inter_site_distance_km,
            n_sites: h.n_sites,
            cells_per_macrocell: h.cells_per_macrocell,
            min_inter_bs_km: h.min_inter_bs_km,
            coverage_radius_km: h.cell.coverage_radius_km,
            min_bs_ue_km: h.cell.min_bs_ue_km,
            ue_distribution: h.cell.ue_distribution,
            hex_density_per_km2: None,
            hex_count: None,
        }
    }
}

impl ScenarioSection {
    pub fn template(&self) -> CellTemplate {
        CellTemplate {
            coverage_radius_km: self.coverage_radius_km,
            min_bs_ue_km: self.min_bs_ue_km,
            ue_distribution: self.ue_distribution,
        }
    }

    pub fn hotspot(&self) -> HotspotConfig {
        HotspotConfig {
            inter_site_distance_km: self.inter_site_distance_km,
            n_sites: self.n_sites,
            cells_per_macrocell: self.cells_per_macrocell,
            min_inter_bs_km: self.min_inter_bs_km,
            cell: self.template(),
        }
    }

    pub fn hex_density(&self) -> f64 {
        self.hex_density_per_km2.unwrap_or_else(|| self.hotspot().density_per_km2())
    }

    pub fn hex_cell_count(&self) -> usize {
        self.hex_count.unwrap_or_else(|| self.hotspot().cell_count())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    pub gh_order: usize,
    pub n_samples: usize,
    pub grid_points: usize,
    #[serde(default)]
    pub fit_method: FitMethod,
    /// Tagged cell; defaults to the cell nearest the deployment centre.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub victim: Option<usize>,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        let o = AnalysisOptions::default();
        AnalysisSection {
            gh_order: o.gh_order,
            n_samples: o.n_samples,
            grid_points: o.grid_points,
            fit_method: o.fit_method,
            victim: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimVictim {
    /// The analysis victim.
    Tagged,
    /// Every cell in turn.
    AllCells,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub n_ue_drops: usize,
    pub n_channel_draws: usize,
    #[serde(default = "tagged")]
    pub victim: SimVictim,
}

fn tagged() -> SimVictim {
    SimVictim::Tagged
}

impl Default for SimulationSection {
    fn default() -> Self {
        SimulationSection {
            n_ue_drops: 1000,
            n_channel_draws: 1000,
            victim: SimVictim::Tagged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MacroSection {
    pub n_deployments: usize,
    #[serde(default)]
    pub victim_policy: VictimPolicy,
    /// Region samples per cell in semi-analytical runs (each deployment
    /// integrates every region towards every victim).
    pub n_samples: usize,
    #[serde(default)]
    pub keep_per_deployment: bool,
    #[serde(default = "table_points")]
    pub signal_table_points: usize,
    /// Also simulate every deployment with the `[simulation]` counts.
    #[serde(default)]
    pub simulate: bool,
}

fn table_points() -> usize {
    SemiOptions::default().signal_table_points
}

impl Default for MacroSection {
    fn default() -> Self {
        MacroSection {
            n_deployments: 50,
            victim_policy: VictimPolicy::AllCells,
            n_samples: 2000,
            keep_per_deployment: false,
            signal_table_points: table_points(),
            simulate: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed: hotspot drop, region sampling, simulation.
    pub seed: u64,
    pub scenario: ScenarioSection,
    pub channel: ChannelParams,
    pub fading: FadingModel,
    pub analysis: AnalysisSection,
    pub simulation: SimulationSection,
    #[serde(rename = "macro")]
    pub macroscopic: MacroSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            scenario: ScenarioSection::default(),
            channel: ChannelParams::default(),
            fading: FadingModel::Rayleigh,
            analysis: AnalysisSection::default(),
            simulation: SimulationSection::default(),
            macroscopic: MacroSection::default(),
        }
    }
}

fn in_section(section: &str, e: dnaga::Error) -> CliError {
    match e {
        dnaga::Error::InvalidParameter { name, reason } => CliError::Config(format!("{section}.{name}: {reason}")),
        other => CliError::Config(format!("{section}: {other}")),
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let s = &self.scenario;
        s.hotspot().validate().map_err(|e| in_section("scenario", e))?;
        if s.kind == ScenarioKind::Hex {
            if !(s.hex_density() > 0.0 && s.hex_density().is_finite()) {
                return Err(CliError::Config("scenario.hex_density_per_km2: must be positive".into()));
            }
            if s.hex_cell_count() == 0 {
                return Err(CliError::Config("scenario.hex_count: must be at least 1".into()));
            }
        }
        self.channel.validate().map_err(|e| in_section("channel", e))?;
        self.fading.validate().map_err(|e| in_section("fading", e))?;
        self.analysis_options().validate().map_err(|e| in_section("analysis", e))?;
        self.sim_config(0).validate().map_err(|e| in_section("simulation", e))?;
        self.semi_options().validate().map_err(|e| in_section("macro", e))?;
        if self.macroscopic.n_samples < 2 {
            return Err(CliError::Config("macro.n_samples: must be at least 2".into()));
        }
        Ok(())
    }

    pub fn analysis_options(&self) -> AnalysisOptions {
        let a = &self.analysis;
        AnalysisOptions {
            gh_order: a.gh_order,
            n_samples: a.n_samples,
            grid_points: a.grid_points,
            seed: self.seed,
            fit_method: a.fit_method,
        }
    }

    /// Simulation settings with the tagged cell resolved to `victim`.
    pub fn sim_config(&self, victim: usize) -> SimConfig {
        let s = &self.simulation;
        SimConfig {
            n_ue_drops: s.n_ue_drops,
            n_channel_draws: s.n_channel_draws,
            seed: self.seed,
            victim: match s.victim {
                SimVictim::Tagged => dnaga::simulator::Victim::Cell(victim),
                SimVictim::AllCells => dnaga::simulator::Victim::AllCells,
            },
        }
    }

    pub fn semi_options(&self) -> SemiOptions {
        let m = &self.macroscopic;
        SemiOptions {
            n_deployments: m.n_deployments,
            seed: self.seed,
            victim_policy: m.victim_policy,
            keep_per_deployment: m.keep_per_deployment,
            signal_table_points: m.signal_table_points,
        }
    }

    pub fn macro_sim(&self) -> Option<MacroSimOptions> {
        self.macroscopic.simulate.then_some(MacroSimOptions {
            n_ue_drops: self.simulation.n_ue_drops,
            n_channel_draws: self.simulation.n_channel_draws,
        })
    }

    /// Applies `--seed` and `--grid-points` overrides and revalidates.
    pub fn with_overrides(mut self, seed: Option<u64>, grid_points: Option<usize>) -> Result<Self, CliError> {
        if let Some(s) = seed {
            self.seed = s;
        }
        if let Some(g) = grid_points {
            self.analysis.grid_points = g;
        }
        self.validate()?;
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let c = RunConfig::default();
        let back = RunConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn eta_zero_names_the_field() {
        let mut c = RunConfig::default();
        c.channel.eta = 0.0;
        let e = RunConfig::from_toml(&c.to_toml()).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("channel.eta") && msg.contains("(0, 1]"), "{msg}");
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = RunConfig::default().to_toml().replace("[channel]", "[channel]\nbogus = 1");
        let e = RunConfig::from_toml(&text).unwrap_err();
        assert!(e.to_string().contains("bogus"), "{e}");
    }

    #[test]
    fn nakagami_parameters_are_checked() {
        let mut c = RunConfig::default();
        c.fading = FadingModel::Nakagami { k: -1.0, theta: 0.1 };
        assert!(RunConfig::from_toml(&c.to_toml()).unwrap_err().to_string().contains("fading.k"));
    }
}
