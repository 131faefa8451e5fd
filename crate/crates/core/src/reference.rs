//! Deterministic and closed-form oracles.

use serde::{Deserialize, Serialize};

use crate::error::{non_negative, positive, Error, Result};
use crate::feynman_kac::{FellerBc, FkParams};
use crate::potentials::PotentialSpec;
use crate::quadrature::{integrate, Tolerance};
use crate::tridiag;

/// Method-of-lines setup for `∂ₜu = ∂ₓₓu` with Feller data at 0 and a
/// zero-flux closure at `x_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MolConfig {
    pub h: f64,
    pub x_max: f64,
    pub t_final: f64,
    pub dt: f64,
    pub bc: FellerBc,
}

impl MolConfig {
    /// Trapezoidal step equal to the mesh width.
    pub fn new(h: f64, x_max: f64, t_final: f64, bc: FellerBc) -> Self {
        MolConfig { h, x_max, t_final, dt: h, bc }
    }
}

/// Nodal values `u_k ≈ u(k h)` for `k = 0..=x_max/h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub h: f64,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn at_origin(&self) -> f64 {
        self.values[0]
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,u")?;
        for (k, u) in self.values.iter().enumerate() {
            writeln!(w, "{},{u}", k as f64 * self.h)?;
        }
        Ok(())
    }
}

/// Tridiagonal semi-discrete operator: `lower[k]`, `diag[k]`, `upper[k]`.
struct Operator {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

fn mol_operator(h: f64, n: usize, kappa: f64, c: f64) -> Operator {
    let inv = 1.0 / (h * h);
    let mut lower = vec![inv; n + 1];
    let mut diag = vec![-2.0 * inv; n + 1];
    let mut upper = vec![inv; n + 1];
    let b = 2.0 / (h * h + 2.0 * h * kappa);
    lower[0] = 0.0;
    diag[0] = -b + c;
    upper[0] = b;
    // Ghost-point reflection at x_max.
    lower[n] = 2.0 * inv;
    upper[n] = 0.0;
    Operator { lower, diag, upper }
}

/// Crank–Nicolson integration of the semi-discrete system
///
/// ```text
/// u̇_0 = (2u_1 - 2u_0)/(h² + 2hκ) + c u_0,   u̇_k = (u_{k+1} - 2u_k + u_{k-1})/h²
/// ```
///
/// with `κ = p3/p2`, `c = -2p1/(hp2 + 2p3)`.
pub fn mol_heat<F: Fn(f64) -> f64>(config: &MolConfig, phi: F) -> Result<GridFunction> {
    let h = positive("h", config.h)?;
    positive("x_max", config.x_max)?;
    non_negative("t_final", config.t_final)?;
    positive("dt", config.dt)?;
    let params = FkParams::new(config.bc, h)?;
    let n = crate::srw::Grid::new(h)?.index_of(config.x_max)? as usize;
    if n < 2 {
        return Err(Error::param("x_max", "need at least two cells"));
    }
    let op = mol_operator(h, n, params.kappa(), params.killing());
    let mut u: Vec<f64> = (0..=n).map(|k| phi(k as f64 * h)).collect();
    if let Some(k) = u.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { x: k as f64 * h, what: "initial condition" });
    }
    let steps = (config.t_final / config.dt).ceil() as usize;
    if steps == 0 {
        return Ok(GridFunction { h, values: u });
    }
    let tau = config.t_final / steps as f64;
    let half = 0.5 * tau;
    let lhs_lower: Vec<f64> = op.lower.iter().map(|a| -half * a).collect();
    let lhs_diag: Vec<f64> = op.diag.iter().map(|a| 1.0 - half * a).collect();
    let lhs_upper: Vec<f64> = op.upper.iter().map(|a| -half * a).collect();
    let mut rhs = vec![0.0; n + 1];
    for _ in 0..steps {
        for k in 0..=n {
            let mut au = op.diag[k] * u[k];
            if k > 0 {
                au += op.lower[k] * u[k - 1];
            }
            if k < n {
                au += op.upper[k] * u[k + 1];
            }
            rhs[k] = u[k] + half * au;
        }
        u = tridiag::solve(&lhs_lower, &lhs_diag, &lhs_upper, &rhs);
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { x: 0.0, what: "method-of-lines solution" });
    }
    Ok(GridFunction { h, values: u })
}

/// Weighted sum `(κ + h/2) u_0 + h Σ u_k + (h/2) u_N`, conserved by
/// [`mol_heat`] when `p1 = 0`.
pub fn discrete_mass(u: &GridFunction, kappa: f64) -> f64 {
    let n = u.values.len() - 1;
    let h = u.h;
    let interior: f64 = u.values[1..n].iter().sum();
    (kappa + 0.5 * h) * u.values[0] + h * interior + 0.5 * h * u.values[n]
}

/// Mean exit time of sticky BM from `[0, ℓ]`:
/// `τ(x) = -κx - x²/2 + κℓ + ℓ²/2`. Exact for the sticky random walk on
/// any grid containing `x` and `ℓ`.
pub fn mfpt_sbm(x: f64, kappa: f64, ell: f64) -> Result<f64> {
    non_negative("kappa", kappa)?;
    positive("ell", ell)?;
    if !(0.0..=ell).contains(&x) {
        return Err(Error::param("x", format!("must lie in [0, {ell}]")));
    }
    Ok(-kappa * x - 0.5 * x * x + kappa * ell + 0.5 * ell * ell)
}

/// `τ(x) = ∫_x^ℓ e^{U(r)} ∫_0^r e^{-U(s)} ds dr` by nested adaptive
/// quadrature (relative tolerance 1e-6).
pub fn mfpt_semi_analytic(potential: &PotentialSpec, x: f64, ell: f64) -> Result<f64> {
    positive("ell", ell)?;
    if !(0.0..=ell).contains(&x) {
        return Err(Error::param("x", format!("must lie in [0, {ell}]")));
    }
    potential.validate()?;
    let energy = |y: f64| potential.energy(y);
    // Any domain error surfaces as NaN and fails the quadrature.
    let u = |y: f64| energy(y).unwrap_or(f64::NAN);
    let mut breaks = vec![];
    if potential.family != crate::potentials::Family::Flat {
        let w = 1.0 / potential.range;
        breaks.extend([potential.offset, potential.offset + 5.0 * w, potential.offset + 30.0 * w]);
    }
    let inner_breaks = breaks.clone();
    let inner = |r: f64| -> f64 {
        integrate(|s| (-u(s)).exp(), 0.0, r, &inner_breaks, Tolerance { abs: 0.0, rel: 1e-9, max_panels: 5000 })
            .map(|(v, _)| v)
            .unwrap_or(f64::NAN)
    };
    let (v, _) = integrate(
        |r| u(r).exp() * inner(r),
        x,
        ell,
        &breaks,
        Tolerance { abs: 0.0, rel: 1e-6, max_panels: 5000 },
    )?;
    Ok(v)
}

/// Stationary law of the two-sided sticky segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentStationary {
    pub mass_at_0: f64,
    pub mass_at_l: f64,
    pub interior_density: f64,
}

pub fn stationary_segment(kappa_left: f64, kappa_right: f64, length: f64) -> Result<SegmentStationary> {
    non_negative("kappa_left", kappa_left)?;
    non_negative("kappa_right", kappa_right)?;
    positive("length", length)?;
    let z = length + kappa_left + kappa_right;
    Ok(SegmentStationary {
        mass_at_0: kappa_left / z,
        mass_at_l: kappa_right / z,
        interior_density: 1.0 / z,
    })
}

/// Transition-path quantities between `A = {0}` and `B = {L}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TptResult {
    pub length: f64,
    pub nu: f64,
    pub rho_a: f64,
    pub rho_b: f64,
    pub k_ab: f64,
    pub k_ba: f64,
}

impl TptResult {
    /// Probability of reaching `L` before 0 from `x`.
    pub fn committor(&self, x: f64) -> f64 {
        (x / self.length).clamp(0.0, 1.0)
    }
}

pub fn tpt_segment(kappa_left: f64, kappa_right: f64, length: f64) -> Result<TptResult> {
    non_negative("kappa_left", kappa_left)?;
    non_negative("kappa_right", kappa_right)?;
    let l = positive("length", length)?;
    let z = l + kappa_left + kappa_right;
    Ok(TptResult {
        length: l,
        nu: 1.0 / (l * z),
        rho_a: (kappa_left + 0.5 * l) / z,
        rho_b: (kappa_right + 0.5 * l) / z,
        k_ab: 1.0 / (kappa_left * l + 0.5 * l * l),
        k_ba: 1.0 / (kappa_right * l + 0.5 * l * l),
    })
}
