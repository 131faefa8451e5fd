//! Deterministic parallel reductions over independent samples.
//!
//! Samples are grouped into fixed blocks of [`BLOCK`] consecutive indices.
//! Each block is reduced serially, and block results are merged in index
//! order, so the floating-point result is the same for any worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const BLOCK: u64 = 1024;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Reduction target for [`accumulate`].
pub trait Accumulator: Default + Send {
    type Item;
    fn push(&mut self, item: Self::Item);
    fn merge(&mut self, other: Self);
}

/// Runs `sample(i)` for `i in 0..n` on the current rayon pool and reduces
/// the results into `A`.
pub fn accumulate<A, F>(n: u64, sample: F) -> Result<A>
where
    A: Accumulator,
    F: Fn(u64) -> Result<A::Item> + Sync,
{
    let blocks = n.div_ceil(BLOCK);
    let partials: Vec<A> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut acc = A::default();
            for i in b * BLOCK..((b + 1) * BLOCK).min(n) {
                acc.push(sample(i)?);
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = A::default();
    for p in partials {
        total.merge(p);
    }
    Ok(total)
}

/// Runs `f` on a dedicated pool with `workers` threads (`None` = rayon default).
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("failed to build worker pool")
            .install(f),
        None => f(),
    }
}

/// Sample count, mean and variance of a scalar.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    n: u64,
    sum: CompensatedSum,
    sum_sq: CompensatedSum,
}

impl Moments {
    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.sum.value() / self.n as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return f64::NAN;
        }
        let n = self.n as f64;
        let m = self.mean();
        ((self.sum_sq.value() - n * m * m) / (n - 1.0)).max(0.0)
    }

    pub fn std_error(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }

    pub fn estimate(&self) -> Estimate {
        Estimate {
            estimate: self.mean(),
            std_error: self.std_error(),
            n_samples: self.n,
        }
    }
}

impl Accumulator for Moments {
    type Item = f64;

    #[inline]
    fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum.add(x);
        self.sum_sq.add(x * x);
    }

    fn merge(&mut self, other: Self) {
        self.n += other.n;
        self.sum.merge(other.sum);
        self.sum_sq.merge(other.sum_sq);
    }
}

/// Independent moments of `N` statistics gathered from the same samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentsN<const N: usize>(pub [Moments; N]);

impl<const N: usize> Default for MomentsN<N> {
    fn default() -> Self {
        MomentsN([Moments::default(); N])
    }
}

impl<const N: usize> Accumulator for MomentsN<N> {
    type Item = [f64; N];

    fn push(&mut self, item: [f64; N]) {
        for (m, x) in self.0.iter_mut().zip(item) {
            m.push(x);
        }
    }

    fn merge(&mut self, other: Self) {
        for (m, o) in self.0.iter_mut().zip(other.0) {
            m.merge(o);
        }
    }
}

/// Moments of samples that may be censored (`None`).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CensoredMoments {
    pub observed: Moments,
    pub censored: u64,
}

impl Accumulator for CensoredMoments {
    type Item = Option<f64>;

    fn push(&mut self, item: Option<f64>) {
        match item {
            Some(x) => self.observed.push(x),
            None => self.censored += 1,
        }
    }

    fn merge(&mut self, other: Self) {
        self.observed.merge(other.observed);
        self.censored += other.censored;
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimate: f64,
    pub std_error: f64,
    pub n_samples: u64,
}

impl Estimate {
    /// `|estimate - target|` in units of the standard error.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.estimate - target).abs() / self.std_error
    }
}
