//! U-statistic engines, prefix trajectories and the Hodges-Lehmann machinery.
//!
//! All pair sums share one accumulation order: for `j = 1, 2, ...` the column
//! sum `Σ_{i<j} h(X_i, X_j)` is accumulated with [`CompensatedSum`] over
//! ascending `i`, and each column sum is then added, compensated, to the
//! running total. The prefix recurrence `S_n = S_{n-1} + Σ_{i<n} h(X_i, X_n)`
//! is this same order, so a trajectory's final sum and the direct U-statistic
//! agree bitwise.

mod hl;

use crate::error::{domain, require_len, Error, Result};
use crate::kernels::{with_pair_fn, HoeffdingParts, Kernel, PartsMode};
use crate::processes::SamplePath;
use crate::stats::CompensatedSum;

pub use hl::{
    bahadur_remainder, empirical_u_df, empirical_u_quantile, hodges_lehmann, local_fluctuation,
    HlMethod, PairwiseMeanQuery,
};

/// `n(n-1)/2` as a float.
pub fn pair_count(n: usize) -> f64 {
    let n = n as u64;
    (n * n.saturating_sub(1) / 2) as f64
}

/// What is summed over pairs.
#[derive(Debug, Clone, Copy)]
pub enum PairSource<'a> {
    /// The kernel itself: `T_n = Σ_{i<j} h(X_i, X_j)`.
    Kernel(&'a Kernel),
    /// The degenerate component: `Q_n = Σ_{i<j} h2(X_i, X_j)`. Requires
    /// analytic parts.
    Degenerate(&'a HoeffdingParts),
}

impl PairSource<'_> {
    fn label(&self) -> String {
        match self {
            PairSource::Kernel(k) => format!("T[{}]", k.name()),
            PairSource::Degenerate(p) => format!("Q[{}]", p.kernel().name()),
        }
    }
}

/// Statistic values at increasing sample sizes along one path.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub statistic: String,
    pub seed: u64,
    pub checkpoints: Vec<usize>,
    pub values: Vec<f64>,
}

impl Trajectory {
    pub fn new(
        statistic: impl Into<String>,
        seed: u64,
        checkpoints: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if checkpoints.len() != values.len() {
            return Err(domain(format!(
                "trajectory has {} checkpoints but {} values",
                checkpoints.len(),
                values.len()
            )));
        }
        if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(domain("trajectory checkpoints must be strictly increasing"));
        }
        Ok(Self {
            statistic: statistic.into(),
            seed,
            checkpoints,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn last(&self) -> Option<(usize, f64)> {
        Some((*self.checkpoints.last()?, *self.values.last()?))
    }

    /// Applies `f(n, value)` pointwise.
    pub fn map(&self, statistic: impl Into<String>, f: impl Fn(usize, f64) -> f64) -> Self {
        Self {
            statistic: statistic.into(),
            seed: self.seed,
            checkpoints: self.checkpoints.clone(),
            values: self
                .checkpoints
                .iter()
                .zip(&self.values)
                .map(|(&n, &v)| f(n, v))
                .collect(),
        }
    }
}

/// Powers of two in `[min_n, n_max]`, plus `n_max` itself.
pub fn dyadic_checkpoints(n_max: usize, min_n: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (0..usize::BITS)
        .map(|j| 1usize << j)
        .take_while(|&n| n <= n_max)
        .filter(|&n| n >= min_n)
        .collect();
    if n_max >= min_n && out.last() != Some(&n_max) {
        out.push(n_max);
    }
    out
}

fn check_checkpoints(checkpoints: &[usize], n: usize) -> Result<()> {
    require_len("checkpoint list", 1, checkpoints.len())?;
    if checkpoints[0] == 0 || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(domain(
            "checkpoints must be positive and strictly increasing",
        ));
    }
    let last = *checkpoints.last().unwrap();
    if last > n {
        return Err(domain(format!("checkpoint {last} exceeds path length {n}")));
    }
    Ok(())
}

/// Runs the column recurrence and records the running total at each checkpoint.
#[inline]
fn running_sums<C: FnMut(usize) -> f64>(checkpoints: &[usize], mut column: C) -> Vec<f64> {
    let mut total = CompensatedSum::new();
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut m = 1;
    for &cp in checkpoints {
        while m < cp {
            total.add(column(m));
            m += 1;
        }
        out.push(total.value());
    }
    out
}

fn kernel_sums(k: &Kernel, xs: &[f64], checkpoints: &[usize]) -> Vec<f64> {
    with_pair_fn!(&k.form, |h| {
        running_sums(checkpoints, |j| {
            let xj = xs[j];
            let mut c = CompensatedSum::new();
            for &xi in &xs[..j] {
                c.add(h(xi, xj));
            }
            c.value()
        })
    })
}

fn degenerate_sums(parts: &HoeffdingParts, xs: &[f64], checkpoints: &[usize]) -> Vec<f64> {
    if parts.h2_is_zero() {
        return vec![0.0; checkpoints.len()];
    }
    let scale = parts.scale();
    if let Some(f) = parts.h2_override() {
        return running_sums(checkpoints, |j| {
            let xj = xs[j];
            let mut c = CompensatedSum::new();
            for &xi in &xs[..j] {
                c.add(scale * f(xi, xj));
            }
            c.value()
        });
    }
    let theta = parts.base_theta();
    let h1: Vec<f64> = xs.iter().map(|&x| parts.base_h1(x)).collect();
    if theta == 0.0 && scale == 1.0 && h1.iter().all(|&v| v == 0.0) {
        // subtracting zeros and scaling by one are exact: same bits, less work
        return with_pair_fn!(parts.base_form(), |h| {
            running_sums(checkpoints, |j| {
                let xj = xs[j];
                let mut c = CompensatedSum::new();
                for &xi in &xs[..j] {
                    c.add(h(xi, xj));
                }
                c.value()
            })
        });
    }
    with_pair_fn!(parts.base_form(), |h| {
        running_sums(checkpoints, |j| {
            let (xj, h1j) = (xs[j], h1[j]);
            let mut c = CompensatedSum::new();
            for (&xi, &h1i) in xs[..j].iter().zip(&h1[..j]) {
                c.add(scale * (h(xi, xj) - theta - h1i - h1j));
            }
            c.value()
        })
    })
}

/// Pair sums `Σ_{i<j<=n}` of `source` at each checkpoint `n`.
pub fn prefix_sums(source: PairSource<'_>, xs: &[f64], checkpoints: &[usize]) -> Result<Vec<f64>> {
    check_checkpoints(checkpoints, xs.len())?;
    match source {
        PairSource::Kernel(k) => Ok(kernel_sums(k, xs, checkpoints)),
        PairSource::Degenerate(p) => {
            if p.mode() == PartsMode::Empirical {
                return Err(Error::EmpiricalParts("a degenerate-part trajectory"));
            }
            Ok(degenerate_sums(p, xs, checkpoints))
        }
    }
}

/// Pair-sum trajectory of `source` along `path`, in one `O(n_max²)` pass.
pub fn prefix_trajectory(
    source: PairSource<'_>,
    path: &SamplePath,
    checkpoints: &[usize],
) -> Result<Trajectory> {
    let values = prefix_sums(source, &path.values, checkpoints)?;
    Trajectory::new(source.label(), path.seed, checkpoints.to_vec(), values)
}

/// `U_n(h) = Σ_{i<j} h(X_i, X_j) / C(n, 2)`.
pub fn u_statistic(k: &Kernel, xs: &[f64]) -> Result<f64> {
    require_len("U-statistic sample", 2, xs.len())?;
    let s = kernel_sums(k, xs, &[xs.len()])[0];
    Ok(s / pair_count(xs.len()))
}
