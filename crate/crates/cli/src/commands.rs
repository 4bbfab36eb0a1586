use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use dnaga::analysis::{analyze_cell, CdfCurve, CellAnalysis};
use dnaga::format_sig;
use dnaga::macroscopic::{analytical_hex_bound, semi_analytical, MacroResult};
use dnaga::scenario::{generate_hex_lattice, generate_hotspot, Deployment};
use dnaga::simulator::{ks_distance_steps, simulate, EmpiricalCdf};

use crate::config::{RunConfig, ScenarioKind};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MacroMode {
    /// Average over random hotspot deployments.
    Semi,
    /// Hexagonal lattice at the equivalent density.
    Hex,
}

/// The configured deployment.
pub fn build_deployment(cfg: &RunConfig) -> Result<Deployment, CliError> {
    let s = &cfg.scenario;
    let dep = match s.kind {
        ScenarioKind::Hex => generate_hex_lattice(s.hex_density(), s.hex_cell_count(), &s.template())?,
        ScenarioKind::Hotspot => generate_hotspot(&s.hotspot(), cfg.seed)?,
    };
    Ok(dep)
}

/// The configured victim, or the cell nearest the deployment centre.
pub fn resolve_victim(cfg: &RunConfig, dep: &Deployment) -> Result<usize, CliError> {
    match cfg.analysis.victim {
        Some(v) => {
            dep.cell(v).map_err(|e| CliError::Config(format!("analysis.victim: {e}")))?;
            Ok(v)
        }
        None => dep
            .center_cell()
            .ok_or_else(|| CliError::Config("scenario: deployment has no cells".into())),
    }
}

fn out_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn cmd_generate(cfg: &RunConfig, out: &Path) -> Result<String, CliError> {
    let dep = build_deployment(cfg)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        out_dir(parent)?;
    }
    write(out, &dep.to_csv())?;
    Ok(format!(
        "wrote {} cells to {} (min BS distance {} km)\n",
        dep.len(),
        out.display(),
        format_sig(dep.min_pairwise_distance())
    ))
}

/// `name,value` rows for the tagged cell's approximations and the fit.
pub fn parameters_csv(a: &CellAnalysis) -> String {
    let f = &a.fit;
    let rows: [(&str, String); 12] = [
        ("victim", a.victim.to_string()),
        ("mu_g1_dbm", format_sig(a.g1.mean)),
        ("var_g1_db2", format_sig(a.g1.var)),
        ("mu_l11_db", format_sig(a.signal_path.mu_l)),
        ("var_l11_db2", format_sig(a.signal_path.var_l)),
        ("lambda", format_sig(f.dist.lambda)),
        ("mu_q_dbm", format_sig(f.dist.mu_q)),
        ("sigma_q_db", format_sig(f.dist.sigma_q)),
        ("var_q_db2", format_sig(f.dist.var_q())),
        ("fit_method", format!("{:?}", f.method).to_lowercase()),
        ("fit_residual", format_sig(f.residual)),
        ("lambda_at_bound", f.lambda_at_bound.to_string()),
    ];
    let mut s = String::from("name,value\n");
    for (k, v) in rows {
        let _ = writeln!(s, "{k},{v}");
    }
    s
}

/// One row per interfering cell: path-loss moments and `Q_b`.
pub fn interferers_csv(a: &CellAnalysis) -> String {
    let mut s = String::from("cell,mu_l_db,var_l_db2,std_error_db,mu_qb_dbm,var_qb_db2\n");
    for t in &a.interferers {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            t.cell,
            format_sig(t.path.mu_l),
            format_sig(t.path.var_l),
            format_sig(t.path.std_error),
            format_sig(t.q.mean),
            format_sig(t.q.var)
        );
    }
    s
}

fn write_analysis(a: &CellAnalysis, dep: &Deployment, dir: &Path) -> Result<(), CliError> {
    out_dir(dir)?;
    write(&dir.join("deployment.csv"), &dep.to_csv())?;
    write(&dir.join("parameters.csv"), &parameters_csv(a))?;
    write(&dir.join("interferers.csv"), &interferers_csv(a))?;
    write(&dir.join("signal_cdf.csv"), &a.signal.to_csv())?;
    write(&dir.join("interference_cdf.csv"), &a.interference.to_csv())?;
    write(&dir.join("sir_cdf.csv"), &a.sir.to_csv())?;
    Ok(())
}

fn analysis_summary(a: &CellAnalysis) -> String {
    format!(
        "victim {}: mu_G1 = {:.3} dBm, var_G1 = {:.3} dB^2; lambda = {}, mu_Q = {:.3} dBm, var_Q = {:.3} dB^2{}; median SIR {:.3} dB\n",
        a.victim,
        a.g1.mean,
        a.g1.var,
        format_sig(a.fit.dist.lambda),
        a.fit.dist.mu_q,
        a.fit.dist.var_q(),
        if a.fit.lambda_at_bound { " (lambda at bound)" } else { "" },
        a.sir.median()
    )
}

pub fn cmd_analyze(cfg: &RunConfig, dir: &Path) -> Result<String, CliError> {
    let dep = build_deployment(cfg)?;
    let victim = resolve_victim(cfg, &dep)?;
    let a = analyze_cell(&dep, victim, &cfg.channel, &cfg.fading, &cfg.analysis_options())?;
    write_analysis(&a, &dep, dir)?;
    Ok(analysis_summary(&a))
}

pub fn cmd_simulate(cfg: &RunConfig, dir: &Path) -> Result<String, CliError> {
    let dep = build_deployment(cfg)?;
    let victim = resolve_victim(cfg, &dep)?;
    let out = simulate(&dep, &cfg.channel, &cfg.fading, &cfg.sim_config(victim))?;
    out_dir(dir)?;
    write(&dir.join("sir_empirical_cdf.csv"), &out.sir.to_cdf_csv())?;
    write(&dir.join("interference_empirical_cdf.csv"), &out.interference_db.to_cdf_csv())?;
    write(&dir.join("signal_empirical_cdf.csv"), &out.signal_db.to_cdf_csv())?;
    Ok(format!(
        "{} samples; median SIR {:.3} dB, median interference {:.3} dBm, median signal {:.3} dBm\n",
        out.sir.len(),
        out.sir.median(),
        out.interference_db.median(),
        out.signal_db.median()
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub ks: f64,
    /// KS distance expressed in percentile points.
    pub max_percentile_deviation: f64,
    pub n_points: usize,
    pub disjoint: bool,
}

impl Comparison {
    pub fn to_csv(&self) -> String {
        format!(
            "ks,max_percentile_deviation,n_points,disjoint\n{},{},{},{}\n",
            format_sig(self.ks),
            format_sig(self.max_percentile_deviation),
            self.n_points,
            self.disjoint
        )
    }
}

/// Reads an empirical file: one column of samples, or `(value, cdf)` steps.
fn read_steps(text: &str) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let header = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    match header.split(',').count() {
        1 => {
            let e = EmpiricalCdf::from_csv(text)?;
            let n = e.len() as f64;
            let ps = (0..e.len()).map(|i| (i + 1) as f64 / n).collect();
            Ok((e.samples().to_vec(), ps))
        }
        2 => {
            let c = CdfCurve::from_csv(text).map_err(|e| CliError::Config(format!("empirical CSV: {e}")))?;
            Ok((c.grid, c.probs))
        }
        _ => Err(CliError::Config(format!("empirical CSV: unexpected header `{header}`"))),
    }
}

pub fn compare(analytic: &CdfCurve, xs: &[f64], ps: &[f64]) -> Result<Comparison, CliError> {
    let lo = analytic.grid[0];
    let hi = analytic.grid[analytic.len() - 1];
    let disjoint = xs.iter().all(|&x| x < lo || x > hi);
    let ks = if disjoint {
        1.0
    } else {
        ks_distance_steps(xs, ps, |x| analytic.eval(x)).map_err(|e| CliError::Config(format!("empirical CSV: {e}")))?
    };
    Ok(Comparison {
        ks,
        max_percentile_deviation: 100.0 * ks,
        n_points: xs.len(),
        disjoint,
    })
}

pub fn cmd_compare(analytic_csv: &Path, empirical_csv: &Path, out: Option<&Path>) -> Result<String, CliError> {
    let read = |p: &Path| {
        fs::read_to_string(p).map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))
    };
    let analytic = CdfCurve::from_csv(&read(analytic_csv)?)
        .map_err(|e| CliError::Config(format!("{}: {e}", analytic_csv.display())))?;
    let (xs, ps) = read_steps(&read(empirical_csv)?)
        .map_err(|e| CliError::Config(format!("{}: {e}", empirical_csv.display())))?;
    let c = compare(&analytic, &xs, &ps)?;
    if let Some(o) = out {
        if let Some(parent) = o.parent().filter(|p| !p.as_os_str().is_empty()) {
            out_dir(parent)?;
        }
        write(o, &c.to_csv())?;
    }
    let mut s = String::new();
    if c.disjoint {
        s.push_str("warning: empirical samples lie entirely outside the analytic grid\n");
    }
    let _ = writeln!(
        s,
        "ks = {}  max_percentile_deviation = {}  n_points = {}",
        format_sig(c.ks),
        format_sig(c.max_percentile_deviation),
        c.n_points
    );
    Ok(s)
}

fn macro_summary(r: &MacroResult) -> String {
    let mut s = format!(
        "{} deployment(s); median analytic SIR {:.3} dB",
        r.n_deployments,
        r.median_analytic()
    );
    if let (Some(d), Some(m)) = (r.deviation, r.median_empirical()) {
        let _ = write!(s, "; median simulated SIR {m:.3} dB; max deviation {:.4}, mean {:.4}", d.max_dev, d.mean_dev);
    }
    s.push('\n');
    s
}

pub fn cmd_macro(cfg: &RunConfig, dir: &Path, mode: MacroMode) -> Result<String, CliError> {
    match mode {
        MacroMode::Semi => {
            let opts = dnaga::analysis::AnalysisOptions {
                n_samples: cfg.macroscopic.n_samples,
                ..cfg.analysis_options()
            };
            let r = semi_analytical(
                &cfg.scenario.hotspot(),
                &cfg.channel,
                &cfg.fading,
                &opts,
                &cfg.semi_options(),
                cfg.macro_sim().as_ref(),
            )?;
            r.write_dir(dir)?;
            Ok(macro_summary(&r))
        }
        MacroMode::Hex => {
            let s = &cfg.scenario;
            let h = analytical_hex_bound(
                s.hex_density(),
                s.hex_cell_count(),
                &s.template(),
                &cfg.channel,
                &cfg.fading,
                &cfg.analysis_options(),
            )?;
            let dep = generate_hex_lattice(s.hex_density(), s.hex_cell_count(), &s.template())?;
            write_analysis(&h.analysis, &dep, dir)?;
            h.result.write_dir(dir)?;
            Ok(analysis_summary(&h.analysis) + &macro_summary(&h.result))
        }
    }
}
