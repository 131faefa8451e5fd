use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};

/// Piecewise-constant, right-continuous path of a grid jump process.
///
/// `jump_times[i]` is the time the path enters `states[i]`. The first entry
/// is `(0, x0)`. The final recorded jump may lie beyond `t_final`; every
/// time functional clips at `t_final`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpTrajectory {
    jump_times: Vec<f64>,
    states: Vec<u32>,
    t_final: f64,
}

const BINARY_MAGIC: &[u8; 4] = b"SRWJ";
const BINARY_VERSION: u32 = 1;

impl JumpTrajectory {
    pub fn new(jump_times: Vec<f64>, states: Vec<u32>, t_final: f64) -> Result<Self> {
        if jump_times.len() != states.len() || jump_times.is_empty() {
            return Err(Error::param("states", "need one state per jump time, at least one"));
        }
        if jump_times[0] != 0.0 {
            return Err(Error::param("jump_times", "must start at 0"));
        }
        if jump_times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::param("jump_times", "must be strictly increasing"));
        }
        if !(t_final >= 0.0) {
            return Err(Error::param("t_final", "must be non-negative"));
        }
        Ok(JumpTrajectory { jump_times, states, t_final })
    }

    pub(crate) fn from_parts_unchecked(jump_times: Vec<f64>, states: Vec<u32>, t_final: f64) -> Self {
        JumpTrajectory { jump_times, states, t_final }
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn states(&self) -> &[u32] {
        &self.states
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// `(entry time, state, holding duration)` for every recorded visit;
    /// the last visit has infinite duration.
    pub fn visits(&self) -> impl Iterator<Item = (f64, u32, f64)> + '_ {
        (0..self.states.len()).map(move |i| {
            let t0 = self.jump_times[i];
            let t1 = self.jump_times.get(i + 1).copied().unwrap_or(f64::INFINITY);
            (t0, self.states[i], t1 - t0)
        })
    }

    /// State occupied at time `t` (right-continuous).
    pub fn state_at(&self, t: f64) -> u32 {
        let i = self.jump_times.partition_point(|&s| s <= t);
        self.states[i.saturating_sub(1)]
    }

    /// Lebesgue time spent in `state` during `[0, t]`.
    pub fn occupation(&self, state: u32, t: f64) -> f64 {
        let mut total = 0.0;
        for (t0, k, d) in self.visits() {
            if t0 >= t {
                break;
            }
            if k == state {
                total += d.min(t - t0);
            }
        }
        total
    }

    /// Copy with every holding interval spent in `state` multiplied by
    /// `factor`, truncated after the first jump beyond `t_final`. When the
    /// stretched path no longer reaches `t_final`, `t_final` shrinks to its
    /// last jump time.
    pub(crate) fn scale_holding(&self, state: u32, factor: f64) -> JumpTrajectory {
        let mut times = Vec::with_capacity(self.len());
        let mut states = Vec::with_capacity(self.len());
        times.push(0.0);
        states.push(self.states[0]);
        // New jump time = old jump time + (factor - 1) * time spent in `state`
        // so far; intervals in other states are not re-rounded.
        let mut occupied = 0.0;
        let mut t = 0.0;
        for i in 1..self.len() {
            if self.states[i - 1] == state {
                occupied += self.jump_times[i] - self.jump_times[i - 1];
            }
            t = self.jump_times[i] + (factor - 1.0) * occupied;
            times.push(t);
            states.push(self.states[i]);
            if t > self.t_final {
                return JumpTrajectory::from_parts_unchecked(times, states, self.t_final);
            }
        }
        let t_final = self.t_final.min(t);
        JumpTrajectory::from_parts_unchecked(times, states, t_final)
    }

    /// CSV with header `jump_time,state_index`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "jump_time,state_index")?;
        for (t, k) in self.jump_times.iter().zip(&self.states) {
            writeln!(w, "{t},{k}")?;
        }
        Ok(())
    }

    /// Parses [`write_csv`](Self::write_csv) output.
    pub fn read_csv<R: BufRead>(r: R, t_final: f64) -> Result<Self> {
        let mut times = Vec::new();
        let mut states = Vec::new();
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            if n == 0 || line.trim().is_empty() {
                continue;
            }
            let (t, k) = line
                .split_once(',')
                .ok_or_else(|| Error::Io(format!("line {}: expected two columns", n + 1)))?;
            times.push(t.trim().parse().map_err(|e| Error::Io(format!("line {}: {e}", n + 1)))?);
            states.push(k.trim().parse().map_err(|e| Error::Io(format!("line {}: {e}", n + 1)))?);
        }
        Self::new(times, states, t_final)
    }

    /// Binary framing: `b"SRWJ"`, `u32` version, `f64` t_final, `u64`
    /// record count, then per record an `f64` time and a `u32` state. All
    /// little-endian.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&BINARY_VERSION.to_le_bytes())?;
        w.write_all(&self.t_final.to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        for (t, k) in self.jump_times.iter().zip(&self.states) {
            w.write_all(&t.to_le_bytes())?;
            w.write_all(&k.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != BINARY_MAGIC {
            return Err(Error::Io("bad magic".into()));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)?;
        if u32::from_le_bytes(b4) != BINARY_VERSION {
            return Err(Error::Io("unsupported version".into()));
        }
        r.read_exact(&mut b8)?;
        let t_final = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8) as usize;
        let mut times = Vec::with_capacity(n);
        let mut states = Vec::with_capacity(n);
        for _ in 0..n {
            r.read_exact(&mut b8)?;
            r.read_exact(&mut b4)?;
            times.push(f64::from_le_bytes(b8));
            states.push(u32::from_le_bytes(b4));
        }
        Self::new(times, states, t_final)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> JumpTrajectory {
        JumpTrajectory::new(vec![0.0, 0.5, 0.75, 2.0], vec![1, 0, 1, 2], 1.5).unwrap()
    }

    #[test]
    fn state_lookup_is_right_continuous() {
        let t = sample();
        assert_eq!(t.state_at(0.0), 1);
        assert_eq!(t.state_at(0.5), 0);
        assert_eq!(t.state_at(0.74), 0);
        assert_eq!(t.state_at(0.75), 1);
        assert_eq!(t.state_at(10.0), 2);
    }

    #[test]
    fn occupation_clips_at_horizon() {
        let t = sample();
        assert!((t.occupation(0, 1.5) - 0.25).abs() < 1e-15);
        assert!((t.occupation(0, 0.6) - 0.1).abs() < 1e-15);
        assert!((t.occupation(1, 1.5) - 1.25).abs() < 1e-15);
        assert_eq!(t.occupation(5, 1.5), 0.0);
    }

    #[test]
    fn rejects_malformed() {
        assert!(JumpTrajectory::new(vec![0.0, 0.0], vec![1, 2], 1.0).is_err());
        assert!(JumpTrajectory::new(vec![0.1], vec![1], 1.0).is_err());
        assert!(JumpTrajectory::new(vec![0.0], vec![], 1.0).is_err());
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        sample().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "jump_time,state_index\n0,1\n0.5,0\n0.75,1\n2,2\n");
    }

    #[test]
    fn binary_layout() {
        let mut buf = Vec::new();
        sample().write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 4 + 4 + 8 + 8 + 4 * 12);
        assert_eq!(&buf[..4], b"SRWJ");
        assert_eq!(&buf[24..32], &0.0f64.to_le_bytes());
        assert_eq!(&buf[32..36], &1u32.to_le_bytes());
    }

    proptest! {
        #[test]
        fn serialization_round_trips(
            gaps in proptest::collection::vec(1e-9f64..10.0, 0..50),
            start in 0u32..100,
        ) {
            let mut times = vec![0.0];
            let mut states = vec![start];
            for (i, g) in gaps.iter().enumerate() {
                times.push(times[i] + g);
                states.push(start + (i as u32 % 2));
            }
            let traj = JumpTrajectory::new(times, states, 3.0).unwrap();
            let mut bin = Vec::new();
            traj.write_binary(&mut bin).unwrap();
            prop_assert_eq!(&JumpTrajectory::read_binary(&bin[..]).unwrap(), &traj);
            let mut csv = Vec::new();
            traj.write_csv(&mut csv).unwrap();
            prop_assert_eq!(&JumpTrajectory::read_csv(&csv[..], 3.0).unwrap(), &traj);
        }
    }
}
