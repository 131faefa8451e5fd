//! Symmetrized Euler–Maruyama for the reflecting SDE
//! `dX = -U'(X) dt + √2 dW` on `[0, ∞)`:
//!
//! ```text
//! X_{k+1} = | X_k - U'(X_k) δt + √2 ΔW_k |
//! ```
//!
//! Gaussian increments come from the per-trajectory stream `(seed, id)`,
//! one standard normal per fine step.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::ensemble::{accumulate, CensoredMoments};
use crate::error::{non_negative, positive, Error, Result};
use crate::potentials::PotentialSpec;
use crate::rng::{stream, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemConfig {
    pub potential: PotentialSpec,
    pub dt: f64,
    pub t_final: f64,
    pub x0: f64,
    pub seed: u64,
    /// Keep every `stride`-th point of the path.
    #[serde(default = "one")]
    pub stride: usize,
}

fn one() -> usize {
    1
}

impl SemConfig {
    pub fn new(potential: PotentialSpec, dt: f64, t_final: f64, x0: f64, seed: u64) -> Self {
        SemConfig { potential, dt, t_final, x0, seed, stride: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        self.potential.validate()?;
        positive("dt", self.dt)?;
        positive("t_final", self.t_final)?;
        non_negative("x0", self.x0)?;
        if self.dt > self.t_final {
            return Err(Error::param("dt", "must not exceed t_final"));
        }
        if self.stride == 0 {
            return Err(Error::param("stride", "must be at least 1"));
        }
        Ok(())
    }

    /// Number of steps, `⌈t_final/dt⌉`.
    pub fn steps(&self) -> u64 {
        (self.t_final / self.dt - 1e-9).ceil() as u64
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SemPath {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
}

impl SemPath {
    fn push(&mut self, t: f64, x: f64) {
        self.times.push(t);
        self.positions.push(x);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// CSV with header `time,position`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "time,position")?;
        for (t, x) in self.times.iter().zip(&self.positions) {
            writeln!(w, "{t},{x}")?;
        }
        Ok(())
    }
}

/// One reflected step; `dw` is the Brownian increment over `dt`.
#[inline]
pub fn sem_step(x: f64, dw: f64, dt: f64, potential: &PotentialSpec) -> Result<f64> {
    let next = (x + potential.force(x)? * dt + std::f64::consts::SQRT_2 * dw).abs();
    if !next.is_finite() {
        return Err(Error::NonFinite { x, what: "Euler-Maruyama update" });
    }
    Ok(next)
}

/// Brownian increments `√dt · Z` for one trajectory.
struct Increments {
    rng: StreamRng,
    scale: f64,
}

impl Increments {
    fn new(seed: u64, id: u64, dt: f64) -> Self {
        Increments { rng: stream(seed, id), scale: dt.sqrt() }
    }

    #[inline]
    fn next(&mut self) -> f64 {
        let z: f64 = StandardNormal.sample(&mut self.rng);
        self.scale * z
    }
}

/// Path driven by stream `(config.seed, 0)`; `⌈t_final/dt⌉ + 1` points
/// before striding.
pub fn sem_trajectory(config: &SemConfig) -> Result<SemPath> {
    sem_trajectory_with_id(config, 0)
}

pub fn sem_trajectory_with_id(config: &SemConfig, id: u64) -> Result<SemPath> {
    config.validate()?;
    let mut dw = Increments::new(config.seed, id, config.dt);
    let n = config.steps();
    let mut path = SemPath::default();
    let mut x = config.x0;
    path.push(0.0, x);
    for k in 1..=n {
        x = sem_step(x, dw.next(), config.dt, &config.potential)?;
        if k % config.stride as u64 == 0 || k == n {
            path.push(k as f64 * config.dt, x);
        }
    }
    Ok(path)
}

/// Fine path at `config.dt` and coarse path at `refine · dt`, both driven by
/// the same Brownian motion (coarse increments are block sums of `refine`
/// fine increments). A trailing partial block is dropped from the coarse path.
pub fn sem_refined_pair(config: &SemConfig, refine: usize) -> Result<(SemPath, SemPath)> {
    sem_refined_pair_with_id(config, refine, 0)
}

pub fn sem_refined_pair_with_id(
    config: &SemConfig,
    refine: usize,
    id: u64,
) -> Result<(SemPath, SemPath)> {
    config.validate()?;
    if refine == 0 {
        return Err(Error::param("refine", "must be at least 1"));
    }
    let mut dw = Increments::new(config.seed, id, config.dt);
    let n = config.steps();
    let coarse_dt = config.dt * refine as f64;
    let mut fine = SemPath::default();
    let mut coarse = SemPath::default();
    let (mut xf, mut xc) = (config.x0, config.x0);
    fine.push(0.0, xf);
    coarse.push(0.0, xc);
    let mut block = 0.0;
    for k in 1..=n {
        let inc = dw.next();
        xf = sem_step(xf, inc, config.dt, &config.potential)?;
        if k % config.stride as u64 == 0 || k == n {
            fine.push(k as f64 * config.dt, xf);
        }
        block += inc;
        if k % refine as u64 == 0 {
            xc = sem_step(xc, block, coarse_dt, &config.potential)?;
            coarse.push(k as f64 * config.dt, xc);
            block = 0.0;
        }
    }
    Ok((coarse, fine))
}

/// First grid time with position `>= level`, or `None` if it is not reached
/// by `horizon`.
pub fn sem_exit_time(config: &SemConfig, level: f64, horizon: f64) -> Result<Option<f64>> {
    sem_exit_time_with_id(config, level, horizon, 0)
}

pub fn sem_exit_time_with_id(
    config: &SemConfig,
    level: f64,
    horizon: f64,
    id: u64,
) -> Result<Option<f64>> {
    positive("dt", config.dt)?;
    positive("level", level)?;
    if !(config.x0 >= 0.0 && config.x0 <= level) {
        return Err(Error::param("x0", format!("must lie in [0, {level}]")));
    }
    let mut x = config.x0;
    if x >= level {
        return Ok(Some(0.0));
    }
    let mut dw = Increments::new(config.seed, id, config.dt);
    let max_steps = (horizon / config.dt).floor() as u64;
    for k in 1..=max_steps {
        x = sem_step(x, dw.next(), config.dt, &config.potential)?;
        if x >= level {
            return Ok(Some(k as f64 * config.dt));
        }
    }
    Ok(None)
}

/// Default censoring horizon `100 (κℓ + ℓ²/2)`.
pub fn default_exit_horizon(kappa: f64, level: f64) -> f64 {
    100.0 * (kappa * level + 0.5 * level * level)
}

/// Exit times of `n` independent trajectories (stream ids `0..n`).
pub fn sem_exit_ensemble(
    config: &SemConfig,
    level: f64,
    horizon: f64,
    n: u64,
) -> Result<CensoredMoments> {
    accumulate(n, |i| sem_exit_time_with_id(config, level, horizon, i))
}

/// Position at `t_final` of `n` independent trajectories, in id order.
pub fn sem_terminal_positions(config: &SemConfig, n: u64) -> Result<Vec<f64>> {
    use rayon::prelude::*;
    config.validate()?;
    let steps = config.steps();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut dw = Increments::new(config.seed, i, config.dt);
            let mut x = config.x0;
            for _ in 0..steps {
                x = sem_step(x, dw.next(), config.dt, &config.potential)?;
            }
            Ok(x)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::Family;

    fn flat_config(seed: u64) -> SemConfig {
        SemConfig::new(PotentialSpec::flat(), 1e-3, 0.5, 0.2, seed)
    }

    #[test]
    fn step_examples() {
        let flat = PotentialSpec::flat();
        assert_eq!(sem_step(3.0, 0.0, 0.7, &flat).unwrap(), 3.0);
        let v = sem_step(0.1, -0.2, 1e-6, &flat).unwrap();
        assert!((v - (0.1 - 0.2 * 2f64.sqrt()).abs()).abs() < 1e-15);
        let morse = PotentialSpec::sticky(Family::Morse, 1.0, 5.0).unwrap();
        assert_eq!(sem_step(morse.offset, 0.0, 1e-5, &morse).unwrap(), morse.offset);
    }

    #[test]
    fn non_finite_step_is_reported() {
        let lj = PotentialSpec::new(Family::LennardJones, 5.0, 1e4, 0.5, 1.0, 0.1).unwrap();
        assert!(sem_step(0.0, 0.0, 1e-3, &lj).is_err());
    }

    #[test]
    fn flat_path_is_reflected_gaussian_walk() {
        let cfg = flat_config(4);
        let path = sem_trajectory(&cfg).unwrap();
        assert_eq!(path.len() as u64, cfg.steps() + 1);
        let mut dw = Increments::new(4, 0, cfg.dt);
        let mut x = cfg.x0;
        for k in 1..path.len() {
            x = (x + 2f64.sqrt() * dw.next()).abs();
            assert_eq!(path.positions[k], x);
            assert!((path.times[k] - k as f64 * cfg.dt).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_and_non_negative() {
        let morse = PotentialSpec::sticky(Family::Morse, 1.0, 5.0).unwrap();
        let cfg = SemConfig::new(morse, 1e-5, 0.05, 0.01, 77);
        let a = sem_trajectory(&cfg).unwrap();
        assert_eq!(a, sem_trajectory(&cfg).unwrap());
        assert!(a.positions.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn stride_keeps_endpoints() {
        let mut cfg = flat_config(1);
        let full = sem_trajectory(&cfg).unwrap();
        cfg.stride = 7;
        let thin = sem_trajectory(&cfg).unwrap();
        assert_eq!(thin.positions[1], full.positions[7]);
        assert_eq!(thin.positions.last(), full.positions.last());
    }

    #[test]
    fn refined_pair_with_unit_factor_is_identical() {
        let (c, f) = sem_refined_pair(&flat_config(2), 1).unwrap();
        assert_eq!(c, f);
    }

    #[test]
    fn refined_pair_flat_coarse_uses_block_sums() {
        let cfg = flat_config(3);
        let r = 16;
        let (coarse, fine) = sem_refined_pair(&cfg, r).unwrap();
        assert_eq!(fine, sem_trajectory(&cfg).unwrap());
        let mut dw = Increments::new(3, 0, cfg.dt);
        let mut x = cfg.x0;
        for j in 1..coarse.len() {
            let block: f64 = (0..r).map(|_| dw.next()).sum();
            x = (x + 2f64.sqrt() * block).abs();
            assert!((coarse.positions[j] - x).abs() < 1e-15);
        }
        assert_eq!(coarse.len() as u64, cfg.steps() / r as u64 + 1);
    }

    #[test]
    fn exit_time_from_the_level_is_zero() {
        let cfg = SemConfig::new(PotentialSpec::flat(), 1e-3, 1.0, 1.0, 0);
        assert_eq!(sem_exit_time(&cfg, 1.0, 10.0).unwrap(), Some(0.0));
        let cfg = SemConfig::new(PotentialSpec::flat(), 1e-3, 1.0, 0.0, 0);
        assert_eq!(sem_exit_time(&cfg, 1.0, 1e-3).unwrap(), None);
    }

    #[test]
    fn flat_exit_time_is_half_level_squared() {
        // Reflecting BM with generator ∂ₓₓ: E τ = ℓ²/2 from the origin.
        // Grid-time detection biases the mean up by O(√dt).
        let cfg = SemConfig::new(PotentialSpec::flat(), 1e-5, 1.0, 0.0, 10);
        let m = sem_exit_ensemble(&cfg, 1.0, 50.0, 4_000).unwrap();
        assert_eq!(m.censored, 0);
        let e = m.observed.estimate();
        assert!(e.z_score(0.5) < 3.0, "{e:?}");
    }
}
