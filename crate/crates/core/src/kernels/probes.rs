//! Monte-Carlo probes of the moment and continuity conditions.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use rand::Rng;

use super::Kernel;
use crate::error::{domain, require_len, Result};
use crate::processes::{generate_path, ProcessModel};
use crate::rng::{replicate_seed, stream};

/// Joint law of the pair `(X, Y)` fed to a probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coupling {
    /// Independent copies with the marginal of `X_1`.
    Independent,
    /// `(X_1, X_{1+k})` from one path.
    Lag(usize),
}

/// Draws pairs from a process model under a coupling.
#[derive(Debug, Clone)]
pub struct PairSampler {
    pub model: ProcessModel,
    pub coupling: Coupling,
}

impl PairSampler {
    pub fn new(model: ProcessModel, coupling: Coupling) -> Self {
        Self { model, coupling }
    }

    /// The pair for trial `trial` under `seed`.
    pub fn draw(&self, seed: u64, trial: u64) -> Result<(f64, f64)> {
        let s = replicate_seed(seed, trial);
        match self.coupling {
            Coupling::Independent => {
                let x = generate_path(&self.model, 1, s)?.values[0];
                let y = generate_path(&self.model, 1, replicate_seed(s, 1))?.values[0];
                Ok((x, y))
            }
            Coupling::Lag(k) => {
                let p = generate_path(&self.model, k + 1, s)?;
                Ok((p.values[0], p.values[k]))
            }
        }
    }
}

/// Which continuity condition is probed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModulusKind {
    /// `E[|h(X,Y) - h(X',Y)| 1{|X - X'| <= ε}] <= L ε`.
    PLipschitz,
    /// `E[sup over the ε-ball around (X,Y) of |h(x,y) - h(x',y')|] <= L ε`.
    Variation,
}

/// Sampled estimate of a continuity constant `L`.
///
/// The estimate never exceeds the true constant in expectation: sampled
/// suprema underestimate true suprema.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulusEstimate {
    pub kind: ModulusKind,
    pub epsilon: f64,
    pub estimate: f64,
    pub trials: usize,
    pub is_lower_bound: bool,
}

/// Estimates the continuity constant of `k` at scale `epsilon`.
///
/// For the variation kind the inner supremum is taken over the centre, the
/// four axis points `(±ε, 0), (0, ±ε)`, the four diagonal points
/// `(±ε/√2, ±ε/√2)` and `directions` uniform draws from the disc. For the
/// P-Lipschitz kind the first argument is moved to `X' = X + ε V` with `V`
/// uniform on `[-1, 1]`; `directions` is unused.
pub fn continuity_modulus(
    k: &Kernel,
    kind: ModulusKind,
    sampler: &PairSampler,
    epsilon: f64,
    trials: usize,
    directions: usize,
    seed: u64,
) -> Result<ModulusEstimate> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(domain(format!("epsilon must be positive, got {epsilon}")));
    }
    require_len("modulus trials", 1, trials)?;
    let d = epsilon * FRAC_1_SQRT_2;
    let corners = [
        (epsilon, 0.0),
        (-epsilon, 0.0),
        (0.0, epsilon),
        (0.0, -epsilon),
        (d, d),
        (d, -d),
        (-d, d),
        (-d, -d),
    ];
    let mut rng = stream(replicate_seed(seed, u64::MAX));
    let mut total = 0.0;
    for t in 0..trials {
        let (x, y) = sampler.draw(seed, t as u64)?;
        total += match kind {
            ModulusKind::Variation => {
                let centre = k.value(x, y);
                let (mut lo, mut hi) = (centre, centre);
                let mut visit = |dx: f64, dy: f64| {
                    let v = k.value(x + dx, y + dy);
                    lo = lo.min(v);
                    hi = hi.max(v);
                };
                for &(dx, dy) in &corners {
                    visit(dx, dy);
                }
                for _ in 0..directions {
                    let r = epsilon * rng.random::<f64>().sqrt();
                    let a = TAU * rng.random::<f64>();
                    visit(r * a.cos(), r * a.sin());
                }
                hi - lo
            }
            ModulusKind::PLipschitz => {
                let x2 = x + epsilon * (2.0 * rng.random::<f64>() - 1.0);
                if (x - x2).abs() <= epsilon {
                    (k.value(x, y) - k.value(x2, y)).abs()
                } else {
                    0.0
                }
            }
        };
    }
    Ok(ModulusEstimate {
        kind,
        epsilon,
        estimate: total / trials as f64 / epsilon,
        trials,
        is_lower_bound: true,
    })
}

/// Estimates of `E|h|^m` under the product law and along lags `0..=k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentProbe {
    pub m: f64,
    pub k_max: usize,
    pub independent_moment: f64,
    /// Entry `k` is the estimate of `E|h(X_1, X_{1+k})|^m`.
    pub lagged_moments: Vec<f64>,
    /// Largest of all entries; an estimate of the uniform moment bound `M`.
    pub bound_estimate: f64,
}

/// Estimates the uniform `m`-th moments of `k` under `model` from `reps`
/// simulated paths of length `k_max + 1`. Path `r` uses replicate seed `r`;
/// its independent partner is path `r + reps`.
pub fn uniform_moment_probe(
    k: &Kernel,
    model: &ProcessModel,
    m: f64,
    k_max: usize,
    reps: usize,
    seed: u64,
) -> Result<MomentProbe> {
    if !(m >= 1.0 && m.is_finite()) {
        return Err(domain(format!("moment exponent must be >= 1, got {m}")));
    }
    require_len("moment probe replicates", 1, reps)?;
    let mut independent = 0.0;
    let mut lagged = vec![0.0; k_max + 1];
    for r in 0..reps {
        let path = generate_path(model, k_max + 1, replicate_seed(seed, r as u64))?;
        let partner = generate_path(model, 1, replicate_seed(seed, (r + reps) as u64))?;
        let x1 = path.values[0];
        independent += k.value(x1, partner.values[0]).abs().powf(m);
        for (lag, acc) in lagged.iter_mut().enumerate() {
            *acc += k.value(x1, path.values[lag]).abs().powf(m);
        }
    }
    let independent_moment = independent / reps as f64;
    lagged.iter_mut().for_each(|v| *v /= reps as f64);
    let bound_estimate = lagged.iter().copied().fold(independent_moment, f64::max);
    Ok(MomentProbe {
        m,
        k_max,
        independent_moment,
        lagged_moments: lagged,
        bound_estimate,
    })
}
