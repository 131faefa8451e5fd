//! Ensemble and time-average estimators over simulated paths.

use serde::{Deserialize, Serialize};

use crate::ensemble::{accumulate, Accumulator, CompensatedSum, Estimate, Moments, MomentsN};
use crate::error::{positive, Error, Result};
use crate::rng::stream;
use crate::srw::{JumpGenerator, JumpTrajectory, SegmentGenerator, Walker};

/// Number of batches used for long-path standard errors.
pub const TPT_BATCHES: usize = 20;

/// Minimum number of completed `A → B` transitions for a rate estimate.
pub const MIN_TRANSITIONS: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// Point masses plus a piecewise-constant density.
///
/// For sampled SEM positions there are no atoms; `near_zero` reports the
/// mass of the first bin instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicDensity {
    pub atoms: Vec<Atom>,
    pub bin_edges: Vec<f64>,
    pub bin_densities: Vec<f64>,
    pub near_zero: Option<f64>,
}

impl AtomicDensity {
    pub fn atom_at(&self, location: f64) -> f64 {
        self.atoms.iter().filter(|a| a.location == location).map(|a| a.mass).sum()
    }

    /// Atom masses plus the integral of the density.
    pub fn total_mass(&self) -> f64 {
        let mut s = CompensatedSum::default();
        for a in &self.atoms {
            s.add(a.mass);
        }
        for (w, d) in self.bin_edges.windows(2).zip(&self.bin_densities) {
            s.add((w[1] - w[0]) * d);
        }
        s.value()
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "kind,left,right,value")?;
        for a in &self.atoms {
            writeln!(w, "atom,{},{},{}", a.location, a.location, a.mass)?;
        }
        for (e, d) in self.bin_edges.windows(2).zip(&self.bin_densities) {
            writeln!(w, "density,{},{},{d}", e[0], e[1])?;
        }
        Ok(())
    }
}

/// How the point mass at a sticky state is separated from the nearby
/// continuous mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomEstimator {
    /// The whole probability of the boundary state.
    Raw,
    /// Boundary-state probability minus the half cell `[0, h/2]` of
    /// continuous mass, estimated from the neighbouring state.
    #[default]
    HalfCell,
}

/// Converts probabilities of grid states `0..masses.len()` to an
/// [`AtomicDensity`].
///
/// State `k` owns the cell `[kh - h/2, kh + h/2]` clipped to the domain.
/// Whatever is not assigned to an atom is spread uniformly over that cell
/// and then binned with width `bin_width`. With `segment_end = Some(L)` the
/// last state is a second sticky boundary at `L`.
pub fn density_from_grid_masses(
    h: f64,
    masses: &[f64],
    bin_width: f64,
    segment_end: Option<f64>,
    estimator: AtomEstimator,
) -> Result<AtomicDensity> {
    positive("h", h)?;
    positive("bin_width", bin_width)?;
    if masses.len() < 2 {
        return Err(Error::param("masses", "need at least two grid states"));
    }
    let last = masses.len() - 1;
    let atom_mass = |edge: usize, inner: usize| match estimator {
        AtomEstimator::Raw => masses[edge],
        AtomEstimator::HalfCell => (masses[edge] - 0.5 * masses[inner]).max(0.0),
    };
    let mut atoms = vec![Atom { location: 0.0, mass: atom_mass(0, 1) }];
    let upper = match segment_end {
        Some(l) => {
            atoms.push(Atom { location: l, mass: atom_mass(last, last - 1) });
            l
        }
        None => (last as f64 + 0.5) * h,
    };
    let n_bins = ((upper / bin_width).ceil() as usize).max(1);
    let bin_edges: Vec<f64> = (0..=n_bins).map(|i| (i as f64 * bin_width).min(upper)).collect();
    let mut bin_mass = vec![CompensatedSum::default(); n_bins];
    for (k, &m) in masses.iter().enumerate() {
        let mut rest = m;
        if k == 0 {
            rest -= atoms[0].mass;
        } else if k == last && segment_end.is_some() {
            rest -= atoms[1].mass;
        }
        if rest <= 0.0 {
            continue;
        }
        let lo = ((k as f64 - 0.5) * h).max(0.0);
        let hi = ((k as f64 + 0.5) * h).min(upper);
        let rho = rest / (hi - lo);
        let first = ((lo / bin_width).floor() as usize).min(n_bins - 1);
        for (b, acc) in bin_mass.iter_mut().enumerate().skip(first) {
            let (a, c) = (bin_edges[b], bin_edges[b + 1]);
            if a >= hi {
                break;
            }
            let overlap = c.min(hi) - a.max(lo);
            if overlap > 0.0 {
                acc.add(rho * overlap);
            }
        }
    }
    let bin_densities = bin_mass
        .iter()
        .zip(bin_edges.windows(2))
        .map(|(m, e)| m.value() / (e[1] - e[0]))
        .collect();
    Ok(AtomicDensity { atoms, bin_edges, bin_densities, near_zero: None })
}

/// Fraction of paths in each grid state at time `t`.
pub fn state_fractions(trajs: &[JumpTrajectory], t: f64) -> Result<Vec<f64>> {
    if trajs.is_empty() {
        return Err(Error::InsufficientData("empty ensemble".into()));
    }
    let mut counts: Vec<u64> = Vec::new();
    for traj in trajs {
        if t > traj.t_final() {
            return Err(Error::param("t", format!("exceeds a path horizon {}", traj.t_final())));
        }
        let k = traj.state_at(t) as usize;
        if k >= counts.len() {
            counts.resize(k + 1, 0);
        }
        counts[k] += 1;
    }
    counts.resize(counts.len().max(2), 0);
    let n = trajs.len() as f64;
    Ok(counts.into_iter().map(|c| c as f64 / n).collect())
}

/// Empirical law of `Y_t` over an ensemble of jump paths.
pub fn empirical_distribution(
    trajs: &[JumpTrajectory],
    t: f64,
    h: f64,
    bin_width: f64,
    segment_end: Option<f64>,
    estimator: AtomEstimator,
) -> Result<AtomicDensity> {
    let mut masses = state_fractions(trajs, t)?;
    if let Some(l) = segment_end {
        let n = crate::srw::Grid::new(h)?.index_of(l)? as usize;
        if masses.len() > n + 1 {
            return Err(Error::StateOutOfRange { state: masses.len() as u64 - 1, range: format!("0..={n}") });
        }
        masses.resize(n + 1, 0.0);
    }
    density_from_grid_masses(h, &masses, bin_width, segment_end, estimator)
}

/// Histogram layout for continuous samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Binning {
    Uniform { width: f64 },
    /// First bin `[0, min)`, then `count` geometric bins up to `max`.
    LogSpaced { min: f64, max: f64, count: usize },
}

/// Histogram of SEM positions. No atoms; the first bin is reported as
/// `near_zero`. Samples beyond the last edge stretch the final bin.
pub fn empirical_distribution_sem(positions: &[f64], binning: Binning) -> Result<AtomicDensity> {
    if positions.is_empty() {
        return Err(Error::InsufficientData("empty ensemble".into()));
    }
    if let Some(&x) = positions.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(Error::Domain { x });
    }
    let top = positions.iter().cloned().fold(0.0, f64::max);
    let mut edges = match binning {
        Binning::Uniform { width } => {
            positive("width", width)?;
            let n = ((top / width).floor() as usize + 1).max(1);
            (0..=n).map(|i| i as f64 * width).collect::<Vec<_>>()
        }
        Binning::LogSpaced { min, max, count } => {
            positive("min", min)?;
            if !(max > min) || count == 0 {
                return Err(Error::param("binning", "need max > min and count ≥ 1"));
            }
            let r = (max / min).powf(1.0 / count as f64);
            let mut e = vec![0.0];
            e.extend((0..=count).map(|i| min * r.powi(i as i32)));
            e
        }
    };
    let last = edges.len() - 1;
    if edges[last] <= top {
        edges[last] = top * (1.0 + 1e-12) + f64::MIN_POSITIVE;
    }
    let mut counts = vec![0u64; last];
    for &x in positions {
        let b = edges.partition_point(|&e| e <= x).saturating_sub(1).min(last - 1);
        counts[b] += 1;
    }
    let n = positions.len() as f64;
    let bin_densities = counts
        .iter()
        .zip(edges.windows(2))
        .map(|(&c, e)| c as f64 / n / (e[1] - e[0]))
        .collect();
    Ok(AtomicDensity {
        atoms: vec![],
        near_zero: Some(counts[0] as f64 / n),
        bin_edges: edges,
        bin_densities,
    })
}

/// Sample mean and `P(X < threshold)` with standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanAndTail {
    pub mean: Estimate,
    pub prob_below: Estimate,
}

pub fn mean_and_tail(positions: &[f64], threshold: f64) -> Result<MeanAndTail> {
    if positions.len() < 2 {
        return Err(Error::InsufficientData("need at least two samples".into()));
    }
    let mut m = MomentsN::<2>::default();
    for &x in positions {
        m.push([x, if x < threshold { 1.0 } else { 0.0 }]);
    }
    Ok(MeanAndTail { mean: m.0[0].estimate(), prob_below: m.0[1].estimate() })
}

/// Positions `h · Y_t` of every path.
pub fn positions_at(trajs: &[JumpTrajectory], t: f64, h: f64) -> Result<Vec<f64>> {
    trajs
        .iter()
        .map(|traj| {
            if t > traj.t_final() {
                Err(Error::param("t", format!("exceeds a path horizon {}", traj.t_final())))
            } else {
                Ok(traj.state_at(t) as f64 * h)
            }
        })
        .collect()
}

/// Mean first time the walk started at `x0` reaches `ell`; sample `i`
/// uses stream `(seed, i)`.
pub fn empirical_mfpt<G: JumpGenerator + ?Sized>(
    gen: &G,
    x0: f64,
    ell: f64,
    n_samples: u64,
    seed: u64,
) -> Result<Estimate> {
    let grid = gen.grid();
    let start = grid.index_of(x0)?;
    let target = grid.index_of(ell)?;
    if start > target {
        return Err(Error::param("x0", format!("must not exceed ell = {ell}")));
    }
    if n_samples < 2 {
        return Err(Error::param("n_samples", "need at least 2 samples"));
    }
    let m: Moments = accumulate(n_samples, |i| {
        let mut w = Walker::new(gen, start, stream(seed, i))?;
        while w.state() != target {
            w.step()?;
        }
        Ok(w.time())
    })?;
    Ok(m.estimate())
}

/// Time spent in each state of a bounded generator during `[0, t_total]`,
/// divided by `t_total`. Streams a single path from stream `(seed, 0)`.
pub fn occupation_fractions<G: JumpGenerator + ?Sized>(
    gen: &G,
    x0: u32,
    t_total: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    positive("t_total", t_total)?;
    let n = gen.max_state().ok_or(Error::param("gen", "needs a bounded state space"))? as usize;
    let mut acc = vec![CompensatedSum::default(); n + 1];
    let mut w = Walker::new(gen, x0, stream(seed, 0))?;
    while w.time() < t_total {
        let (k, start) = (w.state() as usize, w.time());
        let (hold, _) = w.step()?;
        acc[k].add(hold.min(t_total - start));
    }
    Ok(acc.iter().map(|s| s.value() / t_total).collect())
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct BatchTally {
    t_a: CompensatedSum,
    t_b: CompensatedSum,
    n_ab: u64,
    n_ba: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    A,
    B,
}

/// Streaming transition-path counter for `A = {0}`, `B = {L}`.
///
/// Time is attributed to the set hit most recently; the stretch before the
/// first boundary hit is excluded. Statistics are also tallied over
/// [`TPT_BATCHES`] equal time windows for batch-means standard errors.
#[derive(Debug, Clone)]
pub struct TptCounter {
    end_state: u32,
    horizon: f64,
    batches: Vec<BatchTally>,
    last: Option<Side>,
    first_hit: Option<f64>,
}

impl TptCounter {
    pub fn new(end_state: u32, horizon: f64) -> Result<Self> {
        positive("horizon", horizon)?;
        if end_state == 0 {
            return Err(Error::param("end_state", "must be positive"));
        }
        Ok(TptCounter {
            end_state,
            horizon,
            batches: vec![BatchTally::default(); TPT_BATCHES],
            last: None,
            first_hit: None,
        })
    }

    fn batch_of(&self, t: f64) -> usize {
        ((t / self.horizon * TPT_BATCHES as f64) as usize).min(TPT_BATCHES - 1)
    }

    /// Feeds one holding interval `[t0, t0 + duration)` in `state`.
    pub fn visit(&mut self, t0: f64, state: u32, duration: f64) {
        if t0 >= self.horizon {
            return;
        }
        let side = if state == 0 {
            Some(Side::A)
        } else if state == self.end_state {
            Some(Side::B)
        } else {
            None
        };
        if let Some(s) = side {
            let b = self.batch_of(t0);
            match (self.last, s) {
                (Some(Side::A), Side::B) => self.batches[b].n_ab += 1,
                (Some(Side::B), Side::A) => self.batches[b].n_ba += 1,
                _ => {}
            }
            self.first_hit.get_or_insert(t0);
            self.last = Some(s);
        }
        let Some(owner) = self.last else { return };
        let width = self.horizon / TPT_BATCHES as f64;
        let end = (t0 + duration).min(self.horizon);
        let mut t = t0;
        while t < end {
            let b = self.batch_of(t);
            let stop = if b + 1 == TPT_BATCHES { end } else { end.min((b + 1) as f64 * width) };
            // Guard against a boundary that rounds onto `t`.
            let stop = if stop <= t { end } else { stop };
            let tally = &mut self.batches[b];
            match owner {
                Side::A => tally.t_a.add(stop - t),
                Side::B => tally.t_b.add(stop - t),
            }
            t = stop;
        }
    }

    pub fn finish(&self) -> Result<TptEstimate> {
        let first = self.first_hit.ok_or_else(|| {
            Error::InsufficientData("no boundary was hit; increase the horizon".into())
        })?;
        let mut total = BatchTally::default();
        for b in &self.batches {
            total.t_a.merge(b.t_a);
            total.t_b.merge(b.t_b);
            total.n_ab += b.n_ab;
            total.n_ba += b.n_ba;
        }
        if total.n_ab < MIN_TRANSITIONS {
            return Err(Error::InsufficientData(format!(
                "only {} A→B transitions (need {MIN_TRANSITIONS}); use a longer horizon",
                total.n_ab
            )));
        }
        let width = self.horizon / TPT_BATCHES as f64;
        let effective = |i: usize| {
            let lo = i as f64 * width;
            ((i + 1) as f64 * width - lo.max(first)).max(0.0)
        };
        let span = self.horizon - first;
        let (t_a, t_b) = (total.t_a.value(), total.t_b.value());
        let whole = [
            total.n_ab as f64 / t_a,
            total.n_ba as f64 / t_b,
            total.n_ab as f64 / span,
            t_a / span,
            t_b / span,
        ];
        let mut batch = MomentsN::<5>::default();
        for (i, b) in self.batches.iter().enumerate() {
            let (ta, tb, len) = (b.t_a.value(), b.t_b.value(), effective(i));
            if ta > 0.0 && tb > 0.0 && len > 0.0 {
                batch.push([
                    b.n_ab as f64 / ta,
                    b.n_ba as f64 / tb,
                    b.n_ab as f64 / len,
                    ta / len,
                    tb / len,
                ]);
            }
        }
        let est = |j: usize| Estimate {
            estimate: whole[j],
            std_error: batch.0[j].std_error(),
            n_samples: batch.0[j].count(),
        };
        Ok(TptEstimate {
            k_ab: est(0),
            k_ba: est(1),
            nu: est(2),
            rho_a: est(3),
            rho_b: est(4),
            n_ab: total.n_ab,
            n_ba: total.n_ba,
            time_a: t_a,
            time_b: t_b,
            excluded: first,
        })
    }
}

/// Transition-path statistics with batch-means standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TptEstimate {
    pub k_ab: Estimate,
    pub k_ba: Estimate,
    pub nu: Estimate,
    pub rho_a: Estimate,
    pub rho_b: Estimate,
    pub n_ab: u64,
    pub n_ba: u64,
    pub time_a: f64,
    pub time_b: f64,
    /// Initial stretch before the first boundary hit.
    pub excluded: f64,
}

/// Rates from a recorded segment path over `[0, traj.t_final()]`.
pub fn tpt_rates_from_trajectory(traj: &JumpTrajectory, end_state: u32) -> Result<TptEstimate> {
    let mut c = TptCounter::new(end_state, traj.t_final())?;
    for (t0, k, d) in traj.visits() {
        c.visit(t0, k, d);
    }
    c.finish()
}

/// Rates from one streamed segment path of length `t_total`, never stored.
pub fn empirical_tpt_rates(
    gen: &SegmentGenerator,
    x0: u32,
    t_total: f64,
    seed: u64,
) -> Result<TptEstimate> {
    let mut c = TptCounter::new(gen.cells(), t_total)?;
    let mut w = Walker::new(gen, x0, stream(seed, 0))?;
    while w.time() < t_total {
        let (k, start) = (w.state(), w.time());
        let (hold, _) = w.step()?;
        c.visit(start, k, hold);
    }
    c.finish()
}

/// Least-squares slope of `ln error` against `ln h`.
pub fn convergence_order(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.len() < 3 {
        return Err(Error::InsufficientData("need at least three (h, error) pairs".into()));
    }
    if pairs.windows(2).any(|w| !(w[1].0 < w[0].0)) {
        return Err(Error::param("h", "must be strictly decreasing"));
    }
    if let Some(&(h, e)) = pairs.iter().find(|(h, e)| !(*h > 0.0 && *e > 0.0)) {
        return Err(Error::param("pairs", format!("h and error must be positive, got ({h}, {e})")));
    }
    let n = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}
