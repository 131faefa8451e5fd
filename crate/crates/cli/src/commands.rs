//! One function per subcommand. Each writes its artifacts into the output
//! directory and reports whether the result is complete.

use std::fmt::Write as _;

use serde::Serialize;

use stickybm::ensemble::Estimate;
use stickybm::feynman_kac::{fk_heat, fk_poisson, FkParams, FkRecord};
use stickybm::reference::{self, MolConfig};
use stickybm::sem::{self, SemConfig};
use stickybm::srw::{self, SegmentGenerator, SrwGenerator};
use stickybm::stats;
use stickybm::Error;

use crate::config::*;
use crate::output::OutputDir;

/// Why a run did not finish normally.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numeric(Error),
    Incomplete(String),
    Io(std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. } | Error::UnsupportedBoundary => Failure::Config(e.to_string()),
            Error::InsufficientData(_) | Error::Censored { .. } => Failure::Incomplete(e.to_string()),
            e => Failure::Numeric(e),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

/// `Err(Incomplete)` after outputs are written signals exit code 4.
pub type Outcome = Result<(), Failure>;

fn csv_bytes<W: FnOnce(&mut Vec<u8>) -> stickybm::Result<()>>(f: W) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn grid_index(h: f64, x: f64) -> Result<u32, Failure> {
    Ok(srw::Grid::new(h)?.index_of(x)?)
}

#[derive(Serialize)]
struct SrwSummary {
    kappa: f64,
    file: String,
    events: usize,
    occupation_at_zero: f64,
    state_at_t_final: u32,
}

/// Trajectories for every κ from one uniform stream: the path is simulated
/// at the smallest κ and the origin holding times are rescaled for the rest.
pub fn srw_sim(cfg: &SrwSimConfig, seed: u64, out: &mut OutputDir) -> Outcome {
    if cfg.kappas.is_empty() {
        return Err(Failure::Config("`kappas` must not be empty".into()));
    }
    let x0 = grid_index(cfg.h, cfg.x0)?;
    let base_kappa = cfg.kappas.iter().cloned().fold(f64::INFINITY, f64::min);
    let base = SrwGenerator::new(cfg.h, base_kappa)?;
    let path = srw::simulate(&base, x0, cfg.t_final, seed)?;
    let mut summary = Vec::new();
    for (i, &kappa) in cfg.kappas.iter().enumerate() {
        let traj = srw::rescale_kappa(&path, &base, kappa)?;
        let (file, bytes) = match cfg.format {
            TrajectoryFormat::Csv => (format!("trajectory_{i}.csv"), csv_bytes(|b| traj.write_csv(b))?),
            TrajectoryFormat::Binary => (format!("trajectory_{i}.bin"), csv_bytes(|b| traj.write_binary(b))?),
        };
        out.write(&file, &bytes)?;
        summary.push(SrwSummary {
            kappa,
            file,
            events: traj.len(),
            occupation_at_zero: traj.occupation(0, cfg.t_final),
            state_at_t_final: traj.state_at(cfg.t_final),
        });
    }
    out.write_json("summary.json", &summary)?;
    Ok(())
}

#[derive(Serialize)]
struct SemSummary {
    potential: stickybm::potentials::PotentialSpec,
    dt: f64,
    t_final: f64,
    n_samples: u64,
    threshold: f64,
    stats: stats::MeanAndTail,
    near_zero_mass: Option<f64>,
}

pub fn sem_sim(cfg: &SemSimConfig, seed: u64, out: &mut OutputDir) -> Outcome {
    let potential = cfg.potential.build()?;
    let mut sc = SemConfig::new(potential, cfg.dt, cfg.t_final, cfg.x0, seed);
    sc.stride = cfg.stride;
    sc.validate()?;
    match cfg.refine {
        Some(r) => {
            let (coarse, fine) = sem::sem_refined_pair(&sc, r)?;
            out.write("path.csv", &csv_bytes(|b| fine.write_csv(b))?)?;
            out.write("path_coarse.csv", &csv_bytes(|b| coarse.write_csv(b))?)?;
        }
        None => {
            let path = sem::sem_trajectory(&sc)?;
            out.write("path.csv", &csv_bytes(|b| path.write_csv(b))?)?;
        }
    }
    let xs = sem::sem_terminal_positions(&sc, cfg.n_samples)?;
    let density = stats::empirical_distribution_sem(&xs, cfg.binning)?;
    out.write("density.csv", &csv_bytes(|b| density.write_csv(b))?)?;
    let summary = SemSummary {
        potential,
        dt: cfg.dt,
        t_final: cfg.t_final,
        n_samples: cfg.n_samples,
        threshold: cfg.threshold,
        stats: stats::mean_and_tail(&xs, cfg.threshold)?,
        near_zero_mass: density.near_zero,
    };
    out.write_json("summary.json", &summary)?;
    Ok(())
}

#[derive(Serialize)]
struct ExitRow {
    method: &'static str,
    kappa: f64,
    x0: f64,
    ell: f64,
    step: f64,
    sticky_limit: f64,
    semi_analytic: Option<f64>,
    estimate: f64,
    std_error: f64,
    n_samples: u64,
    censored: u64,
}

const EXIT_HEADER: &str =
    "method,kappa,x0,ell,step,sticky_limit,semi_analytic,estimate,std_error,n_samples,censored\n";

fn exit_rows_csv(rows: &[ExitRow]) -> String {
    let mut s = String::from(EXIT_HEADER);
    for r in rows {
        let semi = r.semi_analytic.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{semi},{},{},{},{}",
            r.method, r.kappa, r.x0, r.ell, r.step, r.sticky_limit, r.estimate, r.std_error, r.n_samples, r.censored
        );
    }
    s
}

fn srw_exit_row(h: f64, kappa: f64, x0: f64, ell: f64, n: u64, seed: u64) -> Result<ExitRow, Failure> {
    let gen = SrwGenerator::new(h, kappa)?;
    let e = stats::empirical_mfpt(&gen, x0, ell, n, seed)?;
    Ok(ExitRow {
        method: "srw",
        kappa,
        x0,
        ell,
        step: h,
        sticky_limit: reference::mfpt_sbm(x0, kappa, ell)?,
        semi_analytic: None,
        estimate: e.estimate,
        std_error: e.std_error,
        n_samples: e.n_samples,
        censored: 0,
    })
}

fn sem_exit_row(
    potential: &PotentialConfig,
    dt: f64,
    ell: f64,
    n: u64,
    horizon: Option<f64>,
    seed: u64,
    semi: f64,
) -> Result<ExitRow, Failure> {
    let spec = potential.build()?;
    let horizon = horizon.unwrap_or_else(|| sem::default_exit_horizon(spec.kappa, ell));
    let sc = SemConfig::new(spec, dt, horizon, 0.0, seed);
    sc.validate()?;
    let m = sem::sem_exit_ensemble(&sc, ell, horizon, n)?;
    let e = m.observed.estimate();
    Ok(ExitRow {
        method: "sem",
        kappa: spec.kappa,
        x0: 0.0,
        ell,
        step: dt,
        sticky_limit: reference::mfpt_sbm(0.0, spec.kappa, ell)?,
        semi_analytic: Some(semi),
        estimate: e.estimate,
        std_error: e.std_error,
        n_samples: m.observed.count(),
        censored: m.censored,
    })
}

fn finish_exit_rows(rows: &[ExitRow], stem: &str, out: &mut OutputDir) -> Outcome {
    out.write(&format!("{stem}.csv"), exit_rows_csv(rows).as_bytes())?;
    out.write_json(&format!("{stem}.json"), &rows)?;
    let censored: u64 = rows.iter().map(|r| r.censored).sum();
    if censored > 0 {
        return Err(Failure::Incomplete(format!("{censored} exit-time samples were censored")));
    }
    Ok(())
}

/// Empirical versus analytic mean exit times from `[0, ℓ]`.
pub fn mfpt(cfg: &MfptConfig, seed: u64, out: &mut OutputDir) -> Outcome {
    let mut rows = Vec::new();
    for &kappa in &cfg.kappas {
        for &x0 in &cfg.x0s {
            rows.push(srw_exit_row(cfg.h, kappa, x0, cfg.ell, cfg.n_samples, seed)?);
        }
    }
    if let Some(s) = &cfg.sem {
        let semi = reference::mfpt_semi_analytic(&s.potential.build()?, 0.0, cfg.ell)?;
        rows.push(sem_exit_row(&s.potential, s.dt, cfg.ell, s.n_samples, s.horizon, seed, semi)?);
    }
    finish_exit_rows(&rows, "mfpt", out)
}

/// Mean exit time of SEM over a sweep of time steps, beside the sticky
/// random walk and both deterministic references.
pub fn compare(cfg: &CompareConfig, seed: u64, out: &mut OutputDir) -> Outcome {
    let spec = cfg.potential.build()?;
    let semi = reference::mfpt_semi_analytic(&spec, 0.0, cfg.ell)?;
    let mut rows = Vec::new();
    if let Some(s) = &cfg.srw {
        let mut row = srw_exit_row(s.h, spec.kappa, 0.0, cfg.ell, s.n_samples, seed)?;
        row.semi_analytic = Some(semi);
        rows.push(row);
    }
    for &dt in &cfg.dts {
        rows.push(sem_exit_row(&cfg.potential, dt, cfg.ell, cfg.n_samples, cfg.horizon, seed, semi)?);
    }
    finish_exit_rows(&rows, "compare", out)
}

fn fk_record(h: f64, cfg_bc: stickybm::feynman_kac::FellerBc, x0: f64, seed: u64, e: Estimate) -> FkRecord {
    FkRecord {
        x0,
        t: None,
        ell: None,
        estimate: e.estimate,
        std_error: e.std_error,
        n_samples: e.n_samples,
        censored: None,
        h,
        p1: cfg_bc.p1,
        p2: cfg_bc.p2,
        p3: cfg_bc.p3,
        seed,
    }
}

pub fn fk_heat_cmd(cfg: &FkHeatConfig, seed: u64, out: &mut OutputDir) -> Outcome {
    let params = FkParams::new(cfg.bc, cfg.h)?;
    let x0 = grid_index(cfg.h, cfg.x0)?;
    let phi = cfg.phi;
    let e = fk_heat(x0, cfg.t, |x| phi.eval(x), &params, cfg.n_samples, seed)?;
    let mut rec = fk_record(cfg.h, cfg.bc, cfg.x0, seed, e);
    rec.t = Some(cfg.t);
    out.write_json("fk_heat.json", &rec)?;
    Ok(())
}

pub fn fk_poisson_cmd(cfg: &FkPoissonConfig, seed: u64, out: &mut OutputDir) -> Outcome {
    let params = FkParams::new(cfg.bc, cfg.h)?;
    let x0 = grid_index(cfg.h, cfg.x0)?;
    let phi = cfg.phi;
    let r = fk_poisson(x0, |x| phi.eval(x), cfg.ell, &params, cfg.n_samples, seed, cfg.horizon)?;
    let mut rec = fk_record(cfg.h, cfg.bc, cfg.x0, seed, r.estimate);
    rec.ell = Some(cfg.ell);
    rec.censored = Some(r.censored);
    out.write_json("fk_poisson.json", &rec)?;
    if r.censored > 0 {
        return Err(Failure::Incomplete(format!("{} samples were censored", r.censored)));
    }
    Ok(())
}

#[derive(Serialize)]
struct PdeSummary {
    h: f64,
    dt: f64,
    t_final: f64,
    u_at_origin: f64,
    discrete_mass: f64,
}

pub fn pde_ref(cfg: &PdeRefConfig, _seed: u64, out: &mut OutputDir) -> Outcome {
    let mut mc = MolConfig::new(cfg.h, cfg.x_max, cfg.t_final, cfg.bc);
    if let Some(dt) = cfg.dt {
        mc.dt = dt;
    }
    let phi = cfg.phi;
    let u = reference::mol_heat(&mc, |x| phi.eval(x))?;
    let kappa = FkParams::new(cfg.bc, cfg.h)?.kappa();
    out.write("solution.csv", &csv_bytes(|b| u.write_csv(b))?)?;
    out.write_json(
        "summary.json",
        &PdeSummary {
            h: cfg.h,
            dt: mc.dt,
            t_final: cfg.t_final,
            u_at_origin: u.at_origin(),
            discrete_mass: reference::discrete_mass(&u, kappa),
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct TptReport {
    analytic: reference::TptResult,
    empirical: stats::TptEstimate,
}

pub fn tpt(cfg: &TptConfig, seed: u64, out: &mut OutputDir) -> Outcome {
    let gen = SegmentGenerator::new(cfg.h, cfg.kappa_left, cfg.kappa_right, cfg.length)?;
    let exact = reference::tpt_segment(cfg.kappa_left, cfg.kappa_right, cfg.length)?;
    let emp = stats::empirical_tpt_rates(&gen, 0, cfg.t_total, seed)?;
    let mut csv = String::from("quantity,analytic,estimate,std_error\n");
    for (name, a, e) in [
        ("k_ab", exact.k_ab, emp.k_ab),
        ("k_ba", exact.k_ba, emp.k_ba),
        ("nu", exact.nu, emp.nu),
        ("rho_a", exact.rho_a, emp.rho_a),
        ("rho_b", exact.rho_b, emp.rho_b),
    ] {
        let _ = writeln!(csv, "{name},{a},{},{}", e.estimate, e.std_error);
    }
    out.write("tpt.csv", csv.as_bytes())?;
    out.write_json("tpt.json", &TptReport { analytic: exact, empirical: emp })?;
    Ok(())
}

#[derive(Serialize)]
struct ConvergenceRow {
    h: f64,
    estimate: f64,
    std_error: f64,
    oracle: f64,
    error: f64,
}

#[derive(Serialize)]
struct ConvergenceReport {
    oracle_h: f64,
    oracle: f64,
    rows: Vec<ConvergenceRow>,
    slope: f64,
}

/// Feynman–Kac heat estimates at `x0` for each `h`, against the
/// method-of-lines solution on a fine mesh.
pub fn convergence(cfg: &ConvergenceConfig, seed: u64, out: &mut OutputDir) -> Outcome {
    let phi = cfg.phi;
    let oracle_grid = reference::mol_heat(
        &MolConfig::new(cfg.oracle_h, cfg.x_max, cfg.t, cfg.bc),
        |x| phi.eval(x),
    )?;
    let oracle = oracle_grid.values[grid_index(cfg.oracle_h, cfg.x0)? as usize];
    let mut rows = Vec::new();
    for &h in &cfg.hs {
        let params = FkParams::new(cfg.bc, h)?;
        let e = fk_heat(grid_index(h, cfg.x0)?, cfg.t, |x| phi.eval(x), &params, cfg.n_samples, seed)?;
        rows.push(ConvergenceRow {
            h,
            estimate: e.estimate,
            std_error: e.std_error,
            oracle,
            error: (e.estimate - oracle).abs(),
        });
    }
    let mut csv = String::from("h,estimate,std_error,oracle,error\n");
    for r in &rows {
        let _ = writeln!(csv, "{},{},{},{},{}", r.h, r.estimate, r.std_error, r.oracle, r.error);
    }
    out.write("convergence.csv", csv.as_bytes())?;
    let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.h, r.error)).collect();
    let slope = stats::convergence_order(&pairs)?;
    out.write_json("convergence.json", &ConvergenceReport { oracle_h: cfg.oracle_h, oracle, rows, slope })?;
    Ok(())
}
