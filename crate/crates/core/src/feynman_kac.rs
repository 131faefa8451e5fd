//! Feynman–Kac Monte Carlo for the heat equation `∂ₜu = ∂ₓₓu` on the
//! half-line with Feller boundary data `p1 u - p2 u' + p3 u'' = 0` at 0.
//!
//! With `κ = p3/p2` and `c = -2 p1 / (h p2 + 2 p3)`, the sticky random walk
//! `Y` with parameter κ gives
//!
//! ```text
//! u_i(t) = E_{x_i}[ φ(Y_t) exp(c ∫₀ᵗ 1{Y_s = 0} ds) ]
//! ```
//!
//! and, for the Dirichlet–Poisson problem stopped at `τ = inf{t : Y_t = ℓ}`,
//!
//! ```text
//! v_i = E_{x_i}[ ∫₀^τ φ(Y_t) exp(c ∫₀ᵗ 1{Y_s = 0} ds) dt ].
//! ```
//!
//! Every time integral is evaluated in closed form per holding interval.

use serde::{Deserialize, Serialize};

use crate::ensemble::{accumulate, CensoredMoments, Estimate, Moments};
use crate::error::{non_negative, positive, Error, Result};
use crate::rng::stream;
use crate::srw::{JumpGenerator, JumpTrajectory, SrwGenerator, Walker};

/// Boundary coefficients with `p1 + p2 + p3 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FellerBc {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
}

impl FellerBc {
    pub fn new(p1: f64, p2: f64, p3: f64) -> Result<Self> {
        let bc = FellerBc { p1, p2, p3 };
        bc.validate()?;
        Ok(bc)
    }

    pub fn validate(&self) -> Result<()> {
        non_negative("p1", self.p1)?;
        non_negative("p2", self.p2)?;
        non_negative("p3", self.p3)?;
        let sum = self.p1 + self.p2 + self.p3;
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::param("p1 + p2 + p3", format!("must equal 1, got {sum}")));
        }
        Ok(())
    }

    pub fn neumann() -> Self {
        FellerBc { p1: 0.0, p2: 1.0, p3: 0.0 }
    }

    /// Pure sticky condition `κ u'' = u'`, normalized.
    pub fn sticky(kappa: f64) -> Result<Self> {
        non_negative("kappa", kappa)?;
        Self::new(0.0, 1.0 / (1.0 + kappa), kappa / (1.0 + kappa))
    }
}

/// Boundary data on a grid of spacing `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FkParams {
    bc: FellerBc,
    h: f64,
}

impl FkParams {
    /// Rejects `p2 = 0`, which would need an absorbing rather than sticky walk.
    pub fn new(bc: FellerBc, h: f64) -> Result<Self> {
        bc.validate()?;
        positive("h", h)?;
        if bc.p2 <= 0.0 {
            return Err(Error::UnsupportedBoundary);
        }
        Ok(FkParams { bc, h })
    }

    pub fn bc(&self) -> FellerBc {
        self.bc
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn kappa(&self) -> f64 {
        self.bc.p3 / self.bc.p2
    }

    /// Killing rate `c ≤ 0` applied while the walk sits at the origin.
    pub fn killing(&self) -> f64 {
        if self.bc.p1 == 0.0 {
            return 0.0;
        }
        -2.0 * self.bc.p1 / (self.h * self.bc.p2 + 2.0 * self.bc.p3)
    }

    pub fn generator(&self) -> Result<SrwGenerator> {
        SrwGenerator::new(self.h, self.kappa())
    }
}

/// Serializable result record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FkRecord {
    pub x0: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<f64>,
    pub estimate: f64,
    pub std_error: f64,
    pub n_samples: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub censored: Option<u64>,
    pub h: f64,
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub seed: u64,
}

/// Time spent at state 0 during `[0, t]`.
pub fn occupation_at_zero(traj: &JumpTrajectory, t: f64) -> f64 {
    traj.occupation(0, t)
}

fn payoff<F: Fn(f64) -> f64>(phi: &F, h: f64, k: u32) -> Result<f64> {
    let x = k as f64 * h;
    let v = phi(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinitePayoff { state: k, x })
    }
}

/// One sample of `φ(Y_t) exp(c A_t)` with stream `(seed, id)`.
pub fn fk_heat_sample<F: Fn(f64) -> f64>(
    gen: &SrwGenerator,
    killing: f64,
    x0: u32,
    t: f64,
    phi: &F,
    seed: u64,
    id: u64,
) -> Result<f64> {
    let mut w = Walker::new(gen, x0, stream(seed, id))?;
    let mut at_zero = 0.0;
    loop {
        let (k, start) = (w.state(), w.time());
        let (hold, _) = w.step()?;
        if k == 0 {
            at_zero += hold.min(t - start);
        }
        if w.time() > t {
            let weight = if killing == 0.0 { 1.0 } else { (killing * at_zero).exp() };
            return Ok(payoff(phi, gen.grid().h(), k)? * weight);
        }
    }
}

/// Monte Carlo estimate of `u(x0·h, t)`.
pub fn fk_heat<F: Fn(f64) -> f64 + Sync>(
    x0: u32,
    t: f64,
    phi: F,
    params: &FkParams,
    n_samples: u64,
    seed: u64,
) -> Result<Estimate> {
    positive("t", t)?;
    if n_samples < 2 {
        return Err(Error::param("n_samples", "need at least 2 samples"));
    }
    let gen = params.generator()?;
    let c = params.killing();
    let m: Moments = accumulate(n_samples, |i| fk_heat_sample(&gen, c, x0, t, &phi, seed, i))?;
    Ok(m.estimate())
}

/// `∫ e^{c s} ds` over a holding interval of length `d` at the origin.
#[inline]
fn killed_duration(c: f64, d: f64) -> f64 {
    if (c * d).abs() < 1e-12 {
        d
    } else {
        (c * d).exp_m1() / c
    }
}

/// One sample of the stopped path integral, `None` when `ℓ` is not hit
/// before `horizon`.
#[allow(clippy::too_many_arguments)]
pub fn fk_poisson_sample<F: Fn(f64) -> f64>(
    gen: &SrwGenerator,
    killing: f64,
    x0: u32,
    target: u32,
    phi: &F,
    horizon: f64,
    seed: u64,
    id: u64,
) -> Result<Option<f64>> {
    let h = gen.grid().h();
    let mut w = Walker::new(gen, x0, stream(seed, id))?;
    let mut total = 0.0;
    let mut at_zero = 0.0;
    while w.state() != target {
        if w.time() > horizon {
            return Ok(None);
        }
        let k = w.state();
        let (d, _) = w.step()?;
        let f = payoff(phi, h, k)?;
        if f == 0.0 {
            if k == 0 {
                at_zero += d;
            }
            continue;
        }
        let weight = if killing == 0.0 { 1.0 } else { (killing * at_zero).exp() };
        if k == 0 {
            total += f * weight * killed_duration(killing, d);
            at_zero += d;
        } else {
            total += f * weight * d;
        }
    }
    Ok(Some(total))
}

/// Result of [`fk_poisson`] with the censoring count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonEstimate {
    pub estimate: Estimate,
    pub censored: u64,
}

/// Monte Carlo estimate of the Dirichlet–Poisson solution at `x0·h` on `[0, ℓ]`.
#[allow(clippy::too_many_arguments)]
pub fn fk_poisson<F: Fn(f64) -> f64 + Sync>(
    x0: u32,
    phi: F,
    ell: f64,
    params: &FkParams,
    n_samples: u64,
    seed: u64,
    horizon: Option<f64>,
) -> Result<PoissonEstimate> {
    let gen = params.generator()?;
    let target = gen.grid().index_of(ell)?;
    if x0 > target {
        return Err(Error::param("x0", format!("must not exceed ℓ/h = {target}")));
    }
    if n_samples < 2 {
        return Err(Error::param("n_samples", "need at least 2 samples"));
    }
    let horizon = horizon.unwrap_or_else(|| crate::sem::default_exit_horizon(params.kappa(), ell));
    let c = params.killing();
    let m: CensoredMoments = accumulate(n_samples, |i| {
        fk_poisson_sample(&gen, c, x0, target, &phi, horizon, seed, i)
    })?;
    if m.observed.count() == 0 {
        return Err(Error::Censored { censored: m.censored, horizon });
    }
    Ok(PoissonEstimate { estimate: m.observed.estimate(), censored: m.censored })
}
