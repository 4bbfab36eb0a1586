//! Bit-identical reruns and independence from the worker-thread count.

use dnaga::analysis::{analyze_cell, AnalysisOptions};
use dnaga::channel::ChannelParams;
use dnaga::fading::FadingModel;
use dnaga::macroscopic::{semi_analytical, MacroSimOptions, SemiOptions};
use dnaga::scenario::{generate_hex_lattice, generate_hotspot, CellTemplate, HotspotConfig, UeDistribution};
use dnaga::simulator::{simulate, SimConfig, Victim};

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

fn opts() -> AnalysisOptions {
    AnalysisOptions { n_samples: 5000, grid_points: 301, ..Default::default() }
}

#[test]
fn analysis_is_identical_across_runs_and_thread_counts() {
    let dep = generate_hex_lattice(55.43, 61, &CellTemplate::default()).unwrap();
    let ch = ChannelParams::default();
    let f = FadingModel::Nakagami { k: 10.0, theta: 0.1 };
    let run = || analyze_cell(&dep, 0, &ch, &f, &opts()).unwrap();
    let a = in_pool(1, run);
    let b = in_pool(4, run);
    let c = in_pool(4, run);
    assert_eq!(a, b);
    assert_eq!(b, c);
    assert_eq!(a.sir.to_csv(), c.sir.to_csv());
}

#[test]
fn simulation_is_identical_across_runs_and_thread_counts() {
    let template = CellTemplate { ue_distribution: UeDistribution::InverseRadial, ..Default::default() };
    let dep = generate_hex_lattice(55.43, 37, &template).unwrap();
    let ch = ChannelParams::default();
    for victim in [Victim::Cell(0), Victim::AllCells] {
        let cfg = SimConfig { n_ue_drops: 40, n_channel_draws: 25, seed: 3, victim };
        let run = || simulate(&dep, &ch, &FadingModel::Rayleigh, &cfg).unwrap();
        let a = in_pool(1, run);
        let b = in_pool(3, run);
        assert_eq!(a.sir.samples(), b.sir.samples());
        assert_eq!(a.interference_db.samples(), b.interference_db.samples());
        assert_eq!(a.signal_db.samples(), b.signal_db.samples());
    }
}

#[test]
fn hotspot_generation_is_reproducible() {
    let cfg = HotspotConfig::default();
    let a = generate_hotspot(&cfg, 17).unwrap();
    let b = in_pool(2, || generate_hotspot(&cfg, 17).unwrap());
    assert_eq!(a.to_csv(), b.to_csv());
}

#[test]
fn semi_analytical_is_identical_across_thread_counts() {
    let cfg = HotspotConfig { n_sites: 1, cells_per_macrocell: 3, ..Default::default() };
    let semi = SemiOptions { n_deployments: 3, seed: 5, ..Default::default() };
    let sim = MacroSimOptions { n_ue_drops: 10, n_channel_draws: 20 };
    let run = || {
        semi_analytical(&cfg, &ChannelParams::default(), &FadingModel::Rayleigh, &opts(), &semi, Some(&sim)).unwrap()
    };
    let a = in_pool(1, run);
    let b = in_pool(3, run);
    assert_eq!(a, b);
}
