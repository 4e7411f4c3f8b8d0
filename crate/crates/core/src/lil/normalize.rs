use crate::error::{domain, require_len, Error, Result};
use crate::stats::{loglog, CompensatedSum, Spread};
use crate::ustat::Trajectory;

/// Source of `Var(T_n)` used for normalization.
#[derive(Debug, Clone, Copy)]
pub enum VarianceMode<'a> {
    /// Plug-in `V_n = (n-1)² n σ∞²`.
    Plugin { sigma2: f64 },
    /// One externally supplied variance per checkpoint.
    External(&'a [f64]),
}

/// `T_n / sqrt(2 V_n log log V_n)` at the admissible checkpoints (`V_n > e`).
/// Inadmissible checkpoints are dropped and counted, never filled.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedTrajectory {
    pub seed: u64,
    pub checkpoints: Vec<usize>,
    pub values: Vec<f64>,
    pub plugin: bool,
    pub dropped: usize,
}

pub fn lil_normalize(traj: &Trajectory, mode: VarianceMode<'_>) -> Result<NormalizedTrajectory> {
    let variance: Box<dyn Fn(usize, usize) -> f64> = match mode {
        VarianceMode::Plugin { sigma2 } => {
            if !(sigma2 > 0.0 && sigma2.is_finite()) {
                return Err(domain(format!(
                    "plug-in long-run variance must be positive, got {sigma2}"
                )));
            }
            Box::new(move |_, n| {
                let n = n as f64;
                (n - 1.0) * (n - 1.0) * n * sigma2
            })
        }
        VarianceMode::External(v) => {
            if v.len() != traj.len() {
                return Err(domain(format!(
                    "{} external variances for {} checkpoints",
                    v.len(),
                    traj.len()
                )));
            }
            Box::new(move |i, _| v[i])
        }
    };
    let mut out = NormalizedTrajectory {
        seed: traj.seed,
        checkpoints: Vec::with_capacity(traj.len()),
        values: Vec::with_capacity(traj.len()),
        plugin: matches!(mode, VarianceMode::Plugin { .. }),
        dropped: 0,
    };
    for (i, (&n, &t)) in traj.checkpoints.iter().zip(&traj.values).enumerate() {
        let v = variance(i, n);
        match loglog(v) {
            Some(ll) if v.is_finite() => {
                out.checkpoints.push(n);
                out.values.push(t / (2.0 * v * ll).sqrt());
            }
            _ => out.dropped += 1,
        }
    }
    Ok(out)
}

/// Partial sums `Σ_{i<=n} x_i` at the checkpoints, for linear statistics.
pub fn partial_sum_trajectory(
    values: &[f64],
    checkpoints: &[usize],
    seed: u64,
) -> Result<Trajectory> {
    if checkpoints.last().is_some_and(|&n| n > values.len()) {
        return Err(domain("checkpoint beyond the end of the series"));
    }
    let mut acc = CompensatedSum::new();
    let mut m = 0;
    let mut sums = Vec::with_capacity(checkpoints.len());
    for &cp in checkpoints {
        while m < cp {
            acc.add(values[m]);
            m += 1;
        }
        sums.push(acc.value());
    }
    Trajectory::new("partial_sum", seed, checkpoints.to_vec(), sums)
}

/// Finite-window surrogate of limsup/liminf for one replicate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicateSummary {
    pub seed: u64,
    pub sup: f64,
    pub inf: f64,
    /// Value at the last checkpoint (not necessarily inside `[inf, sup]`'s window).
    pub final_value: f64,
    pub n_range: (usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimsupSummary {
    pub replicates: Vec<ReplicateSummary>,
    pub sup: Spread,
    pub inf: Spread,
}

/// Per-replicate sup and inf over checkpoints `>= n0`, with their spread
/// across replicates.
pub fn limsup_estimate(normalized: &[NormalizedTrajectory], n0: usize) -> Result<LimsupSummary> {
    require_len("limsup replicate list", 1, normalized.len())?;
    let mut replicates = Vec::with_capacity(normalized.len());
    for t in normalized {
        let window: Vec<(usize, f64)> = t
            .checkpoints
            .iter()
            .zip(&t.values)
            .filter(|(&n, _)| n >= n0)
            .map(|(&n, &v)| (n, v))
            .collect();
        if window.is_empty() {
            return Err(Error::Size {
                what: "limsup window (checkpoints >= n0)",
                min: 1,
                got: 0,
            });
        }
        replicates.push(ReplicateSummary {
            seed: t.seed,
            sup: window.iter().map(|w| w.1).fold(f64::NEG_INFINITY, f64::max),
            inf: window.iter().map(|w| w.1).fold(f64::INFINITY, f64::min),
            final_value: *t.values.last().unwrap(),
            n_range: (window[0].0, window[window.len() - 1].0),
        });
    }
    let sups: Vec<f64> = replicates.iter().map(|r| r.sup).collect();
    let infs: Vec<f64> = replicates.iter().map(|r| r.inf).collect();
    Ok(LimsupSummary {
        sup: Spread::of(&sups),
        inf: Spread::of(&infs),
        replicates,
    })
}
