//! Modified-Donsker construction: a reflected simple random walk with
//! `Δx = 2^{-n}`, `Δt = 2^{-2n}` that waits `√Δt` (instead of `Δt`) at
//! every visit to the origin.
//!
//! Holding times here are deterministic, not exponential, even though the
//! path is stored in a [`JumpTrajectory`].

use super::JumpTrajectory;
use crate::error::{positive, Error, Result};
use crate::rng::{stream, CoinFlips, StreamRng};

pub const AMIR_MAX_LEVEL: u32 = 24;

fn check_level(n: u32) -> Result<()> {
    if n == 0 || n > AMIR_MAX_LEVEL {
        return Err(Error::param("n", format!("level must be in 1..={AMIR_MAX_LEVEL}, got {n}")));
    }
    Ok(())
}

/// Walk state with time counted in integer multiples of `Δt`.
struct AmirState {
    level: u32,
    state: u32,
    ticks: u64,
    coins: CoinFlips,
    rng: StreamRng,
}

impl AmirState {
    /// Ticks spent in the current state before the next move.
    fn hold_ticks(&self) -> u64 {
        if self.state == 0 {
            1 << self.level
        } else {
            1
        }
    }

    fn advance(&mut self) -> u64 {
        let hold = self.hold_ticks();
        self.ticks += hold;
        self.state = if self.state == 0 || self.coins.flip(&mut self.rng) {
            self.state + 1
        } else {
            self.state - 1
        };
        hold
    }
}

fn dt(level: u32) -> f64 {
    (-2.0 * level as f64).exp2()
}

/// `|S*|` on grid `h = 2^{-n}` from the origin, recorded until the first
/// jump beyond `t_final`.
pub fn amir_walk(n: u32, t_final: f64, seed: u64) -> Result<JumpTrajectory> {
    check_level(n)?;
    positive("t_final", t_final)?;
    let dt = dt(n);
    let mut w = AmirState { level: n, state: 0, ticks: 0, coins: CoinFlips::new(), rng: stream(seed, 0) };
    let mut times = vec![0.0];
    let mut states = vec![0];
    while w.ticks as f64 * dt <= t_final {
        w.advance();
        times.push(w.ticks as f64 * dt);
        states.push(w.state);
    }
    Ok(JumpTrajectory::from_parts_unchecked(times, states, t_final))
}

/// Fraction of `[0, t_final]` spent at the origin, without storing the path.
pub fn amir_occupation_fraction(n: u32, t_final: f64, stream_rng: StreamRng) -> Result<f64> {
    check_level(n)?;
    positive("t_final", t_final)?;
    let horizon = (t_final / dt(n)).floor() as u64;
    let mut w = AmirState { level: n, state: 0, ticks: 0, coins: CoinFlips::new(), rng: stream_rng };
    let mut at_zero = 0u64;
    while w.ticks < horizon {
        let start = w.ticks;
        let was_zero = w.state == 0;
        w.advance();
        if was_zero {
            at_zero += w.ticks.min(horizon) - start;
        }
    }
    Ok(at_zero as f64 / horizon as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_one_by_hand() {
        // h = 1/2, Δt = 1/4, wait 1/2 at the origin.
        let traj = amir_walk(1, 1.5, 42).unwrap();
        let mut rng = stream(42, 0);
        let mut coins = CoinFlips::new();
        let mut expect_t = vec![0.0];
        let mut expect_s = vec![0u32];
        let (mut t, mut s) = (0.0, 0u32);
        while t <= 1.5 {
            t += if s == 0 { 0.5 } else { 0.25 };
            s = if s == 0 || coins.flip(&mut rng) { s + 1 } else { s - 1 };
            expect_t.push(t);
            expect_s.push(s);
        }
        assert_eq!(traj.jump_times(), &expect_t[..]);
        assert_eq!(traj.states(), &expect_s[..]);
        assert_eq!(traj.states()[1], 1);
        assert_eq!(traj.jump_times()[1], 0.5);
    }

    #[test]
    fn holding_times_follow_construction() {
        let n = 4;
        let traj = amir_walk(n, 2.0, 1).unwrap();
        for (_, k, d) in traj.visits().take(traj.len() - 1) {
            let want = if k == 0 { 2f64.powi(-(n as i32)) } else { 2f64.powi(-2 * n as i32) };
            assert_eq!(d, want);
        }
    }

    #[test]
    fn level_bounds() {
        assert!(amir_walk(0, 1.0, 0).is_err());
        assert!(amir_walk(AMIR_MAX_LEVEL + 1, 1.0, 0).is_err());
    }

    #[test]
    fn streaming_occupation_matches_recorded_path() {
        let n = 5;
        let traj = amir_walk(n, 3.0, 8).unwrap();
        let f = amir_occupation_fraction(n, 3.0, stream(8, 0)).unwrap();
        assert!((f - traj.occupation(0, 3.0) / 3.0).abs() < 1e-12);
    }
}
