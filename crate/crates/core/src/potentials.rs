//! Short-ranged attractive potentials with a sticky limit.
//!
//! Two families are provided, Morse and Lennard-Jones(2m, m), each with a
//! well of depth `D_e` centred at `x0`. A family is *sticky-consistent* with
//! parameter κ when the Laplace estimate of the boundary-layer integral
//! `∫₀^ε e^{-U}` equals κ:
//!
//! ```text
//! e^{D_e} √π / (range √D_e) = κ
//! ```
//!
//! where `range` is `a` for Morse and `m` for Lennard-Jones.

use serde::{Deserialize, Serialize};

use crate::error::{non_negative, positive, Error, Result};
use crate::quadrature::{integrate, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Morse,
    LennardJones,
    /// `U ≡ 0`; the pure reflecting limit.
    Flat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub family: Family,
    /// Well depth `D_e` (in units of kT).
    pub depth: f64,
    /// `a` for Morse, `m` for Lennard-Jones.
    pub range: f64,
    /// Location `x0` of the minimum.
    pub offset: f64,
    /// Sticky parameter κ the spec is meant to approximate.
    pub kappa: f64,
    /// Width ε of the boundary layer.
    pub boundary_layer: f64,
}

/// Closed-form range parameter `√π e^{D_e} / (κ √D_e)`.
pub fn solve_range_from_kappa(kappa: f64, depth: f64) -> Result<f64> {
    if kappa == 0.0 {
        return Err(Error::param("kappa", "κ = 0 corresponds to an infinite range"));
    }
    positive("kappa", kappa)?;
    positive("depth", depth)?;
    Ok(std::f64::consts::PI.sqrt() * depth.exp() / (kappa * depth.sqrt()))
}

/// Inverts `e^{D} √π / (range √D) = κ` for the deep-well root `D > 1/2`.
pub fn solve_depth_from_range(kappa: f64, range: f64) -> Result<f64> {
    positive("kappa", kappa)?;
    positive("range", range)?;
    // g(D) = D - ln(D)/2 is increasing for D > 1/2.
    let target = kappa.ln() + range.ln() - 0.5 * std::f64::consts::PI.ln();
    let g = |d: f64| d - 0.5 * d.ln();
    if target < g(0.5) {
        return Err(Error::param(
            "range",
            format!("no well depth reaches κ = {kappa} at range {range}"),
        ));
    }
    let mut d = target.max(1.0);
    for _ in 0..100 {
        let step = (g(d) - target) / (1.0 - 0.5 / d);
        let next = (d - step).max(0.5);
        if (next - d).abs() <= 1e-15 * d {
            return Ok(next);
        }
        d = next;
    }
    Ok(d)
}

impl PotentialSpec {
    pub fn flat() -> Self {
        PotentialSpec {
            family: Family::Flat,
            depth: 0.0,
            range: 1.0,
            offset: 0.0,
            kappa: 0.0,
            boundary_layer: 1.0,
        }
    }

    pub fn new(
        family: Family,
        depth: f64,
        range: f64,
        offset: f64,
        kappa: f64,
        boundary_layer: f64,
    ) -> Result<Self> {
        let spec = PotentialSpec { family, depth, range, offset, kappa, boundary_layer };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.family == Family::Flat {
            return Ok(());
        }
        positive("depth", self.depth)?;
        positive("range", self.range)?;
        non_negative("offset", self.offset)?;
        non_negative("kappa", self.kappa)?;
        positive("boundary_layer", self.boundary_layer)?;
        Ok(())
    }

    /// Sticky-consistent spec from `(κ, D_e)` with `x0 = 1/range` and
    /// `ε = 1/√range`.
    pub fn sticky(family: Family, kappa: f64, depth: f64) -> Result<Self> {
        if family == Family::Flat {
            return Ok(Self::flat());
        }
        let range = solve_range_from_kappa(kappa, depth)?;
        Self::new(family, depth, range, 1.0 / range, kappa, 1.0 / range.sqrt())
    }

    /// Member of the ε-family with `range = 1/ε²`, `x0 = ε²` and depth
    /// solved from κ.
    pub fn family_member(family: Family, kappa: f64, eps: f64) -> Result<Self> {
        positive("eps", eps)?;
        let range = 1.0 / (eps * eps);
        let depth = solve_depth_from_range(kappa, range)?;
        Self::new(family, depth, range, eps * eps, kappa, eps)
    }

    /// Relative mismatch between the Laplace estimate and κ.
    pub fn sticky_mismatch(&self) -> f64 {
        let laplace =
            self.depth.exp() * std::f64::consts::PI.sqrt() / (self.range * self.depth.sqrt());
        (laplace - self.kappa).abs() / self.kappa
    }

    pub fn energy(&self, x: f64) -> Result<f64> {
        match self.family {
            Family::Morse => Ok(morse_energy(self, x)),
            Family::LennardJones => lj_energy(self, x),
            Family::Flat => Ok(0.0),
        }
    }

    /// `-dU/dx`.
    pub fn force(&self, x: f64) -> Result<f64> {
        match self.family {
            Family::Morse => Ok(morse_force(self, x)),
            Family::LennardJones => lj_force(self, x),
            Family::Flat => Ok(0.0),
        }
    }
}

pub fn morse_energy(spec: &PotentialSpec, x: f64) -> f64 {
    let e = (-spec.range * (x - spec.offset)).exp();
    spec.depth * (1.0 - e) * (1.0 - e) - spec.depth
}

pub fn morse_force(spec: &PotentialSpec, x: f64) -> f64 {
    let e = (-spec.range * (x - spec.offset)).exp();
    -2.0 * spec.depth * spec.range * e * (1.0 - e)
}

/// `(1/s)^m` with `s = x - x0 + 1`, computed in log space.
fn lj_power(spec: &PotentialSpec, x: f64) -> Result<(f64, f64)> {
    let s = x - spec.offset + 1.0;
    if !(s > 0.0) {
        return Err(Error::Domain { x });
    }
    let p = (-spec.range * s.ln()).exp();
    if !p.is_finite() || !(p * p).is_finite() {
        return Err(Error::NonFinite { x, what: "Lennard-Jones power overflow" });
    }
    Ok((s, p))
}

pub fn lj_energy(spec: &PotentialSpec, x: f64) -> Result<f64> {
    let (_, p) = lj_power(spec, x)?;
    Ok(spec.depth * (p * p - 2.0 * p))
}

pub fn lj_force(spec: &PotentialSpec, x: f64) -> Result<f64> {
    let (s, p) = lj_power(spec, x)?;
    Ok(2.0 * spec.range * spec.depth / s * (p * p - p))
}

/// `∫₀^ε e^{-U(x)} dx` to absolute tolerance 1e-10.
pub fn sticky_integral(spec: &PotentialSpec, eps: f64) -> Result<f64> {
    positive("eps", eps)?;
    spec.validate()?;
    let domain_error = std::cell::Cell::new(None);
    let integrand = |x: f64| match spec.energy(x) {
        Ok(u) => (-u).exp(),
        Err(e) => {
            domain_error.set(Some(e));
            f64::NAN
        }
    };
    let breaks = [spec.offset, spec.offset + 5.0 / spec.range];
    let res = integrate(integrand, 0.0, eps, &breaks, Tolerance::absolute(1e-10));
    if let Some(e) = domain_error.take() {
        return Err(e);
    }
    res.map(|(v, _)| v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn morse_k1() -> PotentialSpec {
        PotentialSpec::sticky(Family::Morse, 1.0, 5.0).unwrap()
    }

    fn centered_difference(spec: &PotentialSpec, x: f64, h: f64) -> f64 {
        -(spec.energy(x + h).unwrap() - spec.energy(x - h).unwrap()) / (2.0 * h)
    }

    #[test]
    fn morse_minimum_and_decay() {
        let s = morse_k1();
        assert!((morse_energy(&s, s.offset) + 5.0).abs() < 1e-14);
        // Tail is -2 D_e e^{-a(x - x0)} to leading order.
        let tail = morse_energy(&s, s.offset + 20.0 / s.range);
        assert!((tail + 10.0 * (-20.0f64).exp()).abs() < 1e-15);
        assert!(morse_energy(&s, s.offset + 22.0 / s.range).abs() < 1e-8);
        assert_eq!(morse_force(&s, s.offset), 0.0);
        assert!(morse_force(&s, s.offset + 40.0 / s.range).abs() < 1e-8);
    }

    #[test]
    fn range_from_kappa_matches_reported_values() {
        assert!((solve_range_from_kappa(1.0, 5.0).unwrap() - 118.0).abs() < 0.5);
        assert!((solve_range_from_kappa(1.0, 3.5).unwrap() - 31.4).abs() < 0.05);
        assert!((solve_range_from_kappa(30.0, 7.22).unwrap() - 30.0).abs() < 0.1);
        assert!((solve_range_from_kappa(30.0, 8.5).unwrap() - 100.0).abs() < 0.5);
        assert!(solve_range_from_kappa(0.0, 5.0).is_err());
    }

    #[test]
    fn depth_inverts_range() {
        for &(k, d) in &[(1.0, 5.0), (30.0, 8.5), (0.3, 2.0)] {
            let a = solve_range_from_kappa(k, d).unwrap();
            assert!((solve_depth_from_range(k, a).unwrap() - d).abs() < 1e-10);
        }
        assert!(solve_depth_from_range(1e-3, 1.0).is_err());
    }

    #[test]
    fn sticky_constructor_is_consistent() {
        let s = morse_k1();
        assert!(s.sticky_mismatch() < 1e-10);
        assert!((s.offset * s.range - 1.0).abs() < 1e-15);
        let lj = PotentialSpec::family_member(Family::LennardJones, 2.0, 0.05).unwrap();
        assert!(lj.sticky_mismatch() < 1e-10);
    }

    #[test]
    fn morse_force_matches_finite_difference_near_minimum() {
        let s = morse_k1();
        let x = s.offset + 1e-3;
        let fd = centered_difference(&s, x, 1e-7);
        assert!((morse_force(&s, x) - fd).abs() <= 1e-5 * fd.abs());
    }

    #[test]
    fn lennard_jones_basics() {
        let s = PotentialSpec::new(Family::LennardJones, 4.0, 100.0, 0.01, 1.0, 0.1).unwrap();
        assert!((lj_energy(&s, s.offset).unwrap() + 4.0).abs() < 1e-14);
        assert_eq!(lj_force(&s, s.offset).unwrap(), 0.0);
        let x = s.offset + 0.01;
        let fd = centered_difference(&s, x, 1e-7);
        assert!((lj_force(&s, x).unwrap() - fd).abs() <= 1e-4 * fd.abs());
        assert!(matches!(lj_energy(&s, s.offset - 1.0), Err(Error::Domain { .. })));
        assert!(lj_energy(&s, s.offset - 2.0).is_err());
    }

    #[test]
    fn large_m_does_not_overflow_in_the_domain() {
        let s = PotentialSpec::new(Family::LennardJones, 9.0, 1.0e4, 1e-4, 1.0, 0.01).unwrap();
        assert!(lj_energy(&s, 0.0).unwrap().is_finite());
        assert!(lj_energy(&s, 10.0).unwrap().abs() < 1e-300);
    }

    #[test]
    fn sticky_integral_values() {
        // Frozen from the adaptive quadrature; the anharmonic Morse well makes
        // the finite-ε value 21% above the κ = 1 Laplace estimate.
        let v = sticky_integral(&morse_k1(), 0.09).unwrap();
        assert!((v - 1.213_689_576_6).abs() < 1e-8, "{v}");

        assert!((sticky_integral(&PotentialSpec::flat(), 0.1).unwrap() - 0.1).abs() < 1e-14);

        let dna = PotentialSpec::sticky(Family::Morse, 30.0, 8.5).unwrap();
        let v = sticky_integral(&dna, dna.boundary_layer).unwrap();
        assert!((v / 30.0 - 1.0).abs() < 0.10, "{v}");
    }

    #[test]
    fn sticky_integral_approaches_kappa_along_family() {
        for family in [Family::Morse, Family::LennardJones] {
            let gaps: Vec<f64> = [0.1, 0.05, 0.025]
                .iter()
                .map(|&eps| {
                    let s = PotentialSpec::family_member(family, 1.0, eps).unwrap();
                    (sticky_integral(&s, eps).unwrap() - 1.0).abs()
                })
                .collect();
            assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{family:?}: {gaps:?}");
        }
    }

    #[test]
    fn minimum_is_global_on_grid() {
        for family in [Family::Morse, Family::LennardJones] {
            let s = PotentialSpec::family_member(family, 1.0, 0.1).unwrap();
            let n = 100_000;
            let lowest = (0..=n)
                .map(|i| s.energy(10.0 * s.boundary_layer * i as f64 / n as f64).unwrap())
                .fold(f64::INFINITY, f64::min);
            assert!(lowest >= -s.depth - 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn force_is_minus_energy_gradient(
            u in 0.0f64..1.0,
            lj in any::<bool>(),
            kappa in 0.2f64..30.0,
        ) {
            let family = if lj { Family::LennardJones } else { Family::Morse };
            let s = PotentialSpec::family_member(family, kappa, 0.1).unwrap();
            let x = 10.0 * s.boundary_layer * u;
            let f = s.force(x).unwrap();
            let fd = centered_difference(&s, x, 1e-6 / s.range);
            // Relative 1e-5 with an absolute floor where the force vanishes.
            let floor = 1e-8 * s.depth * s.range;
            prop_assert!((f - fd).abs() <= 1e-5 * f.abs() + floor, "x={x} f={f} fd={fd}");
        }
    }
}
