//! Seeded generators of stationary sequences with known dependence structure.
//!
//! Four families are built in:
//!
//! * `iid` draws from a fixed marginal (uniform on `[0,1)` or standard normal);
//! * `ar1` is the Gaussian autoregression `X_t = φ X_{t-1} + σ ε_t`, started
//!   from its stationary law;
//! * `ma` is an `m`-dependent moving average `Y_t = Σ_{j=0..m} w_j Z_{t+j}` of
//!   standard normals, normalized to unit variance and mapped through the
//!   normal CDF so the emitted marginal is exactly uniform on `[0,1]`;
//! * `doubling` is the binary-expansion functional
//!   `X_n = Σ_{k<depth} 2^{-(k+1)} Z_{n+k}` of fair coin flips, whose orbit
//!   follows `x -> 2x mod 1` up to the truncation error `2^-depth`.
//!
//! Each model carries a [`MixingProfile`] holding the dependence metadata the
//! rate diagnostics consume.

use std::fmt;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::error::{domain, require_len, Result};
use crate::rng;
use crate::stats::ols_slope;

/// Default truncation depth of the doubling model.
pub const DEFAULT_DOUBLING_DEPTH: u32 = 40;

/// Marginal law of an iid model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IidMarginal {
    Uniform01,
    StandardNormal,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelId {
    Iid(IidMarginal),
    Ar1 { phi: f64, noise_sd: f64 },
    Ma { weights: Vec<f64> },
    Doubling { depth: u32 },
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelId::Iid(IidMarginal::Uniform01) => write!(f, "iid_uniform"),
            ModelId::Iid(IidMarginal::StandardNormal) => write!(f, "iid_normal"),
            ModelId::Ar1 { phi, noise_sd } => write!(f, "ar1({phi},{noise_sd})"),
            ModelId::Ma { weights } => {
                write!(f, "ma({}", weights.len() - 1)?;
                if weights.iter().any(|&w| w != 1.0) {
                    let ws: Vec<String> = weights.iter().map(|w| w.to_string()).collect();
                    write!(f, ";{}", ws.join(","))?;
                }
                write!(f, ")")
            }
            ModelId::Doubling { depth } => write!(f, "doubling({depth})"),
        }
    }
}

/// Decay law of a dependence coefficient as a function of the lag.
#[derive(Debug, Clone, PartialEq)]
pub enum DecayLaw {
    /// Zero at every positive lag.
    Zero,
    /// Trivial bound 1 up to lag `m`, zero beyond (m-dependence).
    MDependent(usize),
    /// `min(1, c · rho^k)`.
    Geometric { c: f64, rho: f64 },
    /// The same value at every positive lag.
    Constant(f64),
    /// Explicit values for lags `1, 2, ...`; the last entry repeats.
    Table(Vec<f64>),
}

impl DecayLaw {
    /// Value at lag `k`. Lag 0 is bounded by 1 for every law.
    pub fn at(&self, k: usize) -> f64 {
        if k == 0 {
            return 1.0;
        }
        match self {
            DecayLaw::Zero => 0.0,
            DecayLaw::MDependent(m) => {
                if k <= *m {
                    1.0
                } else {
                    0.0
                }
            }
            DecayLaw::Geometric { c, rho } => {
                (c * rho.powi(k.min(i32::MAX as usize) as i32)).min(1.0)
            }
            DecayLaw::Constant(v) => *v,
            DecayLaw::Table(v) => v.get(k - 1).or(v.last()).copied().unwrap_or(0.0),
        }
    }
}

/// Dependence metadata of a process model.
///
/// `beta` bounds the absolute-regularity coefficients, `alpha` the strong
/// mixing coefficients (of the underlying process for functionals), and
/// `approx` the approximation constants `a_l` of a one-sided functional. For
/// the built-in AR(1) model `beta` is a geometric envelope, not the exact
/// coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingProfile {
    pub beta: DecayLaw,
    pub alpha: Option<DecayLaw>,
    pub approx: DecayLaw,
    pub delta: f64,
    /// Moment exponent of `X_1`; `None` when every moment is finite.
    pub gamma: Option<f64>,
    pub tau: f64,
}

impl MixingProfile {
    /// Profile with only a `beta` law; `alpha = min(beta, 1/4)`, `a_l ≡ 0`,
    /// `δ = 1` and `τ` fitted from `beta`.
    pub fn from_beta(beta: DecayLaw) -> Self {
        let mut p = Self {
            beta,
            alpha: None,
            approx: DecayLaw::Zero,
            delta: 1.0,
            gamma: None,
            tau: 0.0,
        };
        p.tau = tau_exponent(&p, p.delta, 1 << 16).unwrap_or(0.0);
        p
    }

    pub fn beta(&self, k: usize) -> f64 {
        self.beta.at(k)
    }

    /// Strong mixing coefficient bound; never exceeds `beta(k)` nor `1/4`.
    pub fn alpha(&self, k: usize) -> f64 {
        let a = match &self.alpha {
            Some(law) => law.at(k),
            None => self.beta.at(k),
        };
        a.min(self.beta.at(k)).min(0.25)
    }

    /// Approximation constant `a_l`.
    pub fn approx_constant(&self, l: usize) -> f64 {
        if l == 0 {
            return match &self.approx {
                DecayLaw::Zero => 0.0,
                DecayLaw::Geometric { c, .. } => *c,
                other => other.at(1),
            };
        }
        self.approx.at(l)
    }

    /// `sqrt(2 Σ_{i>=L} a_i)`, the coupling rate of a functional process.
    /// Computed in closed form for geometric constants, otherwise summed over
    /// the first 4096 terms.
    pub fn approx_alpha(&self, big_l: usize) -> f64 {
        let tail = match &self.approx {
            DecayLaw::Zero => 0.0,
            DecayLaw::Geometric { c, rho } if *rho < 1.0 => {
                c * rho.powi(big_l as i32) / (1.0 - rho)
            }
            _ => (big_l..big_l + 4096).map(|i| self.approx_constant(i)).sum(),
        };
        (2.0 * tail).sqrt()
    }
}

/// A stationary process model together with its dependence profile.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessModel {
    id: ModelId,
    profile: MixingProfile,
}

impl fmt::Display for ProcessModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.id.fmt(f)
    }
}

impl ProcessModel {
    pub fn iid(marginal: IidMarginal) -> Self {
        Self::with_id(ModelId::Iid(marginal))
    }

    pub fn iid_uniform() -> Self {
        Self::iid(IidMarginal::Uniform01)
    }

    pub fn ar1(phi: f64, noise_sd: f64) -> Result<Self> {
        if !(phi.abs() < 1.0) {
            return Err(domain(format!(
                "ar1 coefficient must satisfy |phi| < 1, got {phi}"
            )));
        }
        if !(noise_sd > 0.0 && noise_sd.is_finite()) {
            return Err(domain(format!(
                "ar1 noise sd must be positive, got {noise_sd}"
            )));
        }
        Ok(Self::with_id(ModelId::Ar1 { phi, noise_sd }))
    }

    /// Moving average of order `weights.len() - 1`.
    pub fn ma(weights: Vec<f64>) -> Result<Self> {
        require_len("moving-average weights", 1, weights.len())?;
        if weights.iter().any(|w| !w.is_finite()) || weights.iter().all(|&w| w == 0.0) {
            return Err(domain(
                "moving-average weights must be finite and not all zero",
            ));
        }
        Ok(Self::with_id(ModelId::Ma { weights }))
    }

    /// Equal-weight moving average of order `order`.
    pub fn ma_equal(order: usize) -> Self {
        Self::with_id(ModelId::Ma {
            weights: vec![1.0; order + 1],
        })
    }

    /// Doubling-map functional truncated at `depth` binary digits (1..=53).
    pub fn doubling(depth: u32) -> Result<Self> {
        if !(1..=53).contains(&depth) {
            return Err(domain(format!(
                "doubling depth must lie in 1..=53, got {depth}"
            )));
        }
        Ok(Self::with_id(ModelId::Doubling { depth }))
    }

    fn with_id(id: ModelId) -> Self {
        let profile = mixing_profile_of(&id);
        Self { id, profile }
    }

    pub fn id(&self) -> &ModelId {
        &self.id
    }

    pub fn profile(&self) -> &MixingProfile {
        &self.profile
    }

    /// True when the emitted marginal is uniform on `[0,1]`.
    pub fn has_uniform_marginal(&self) -> bool {
        matches!(
            self.id,
            ModelId::Iid(IidMarginal::Uniform01) | ModelId::Ma { .. } | ModelId::Doubling { .. }
        )
    }

    /// Marginal variance of `X_t`, when it has a closed form.
    pub fn marginal_variance(&self) -> f64 {
        match &self.id {
            ModelId::Iid(IidMarginal::StandardNormal) => 1.0,
            ModelId::Ar1 { phi, noise_sd } => noise_sd * noise_sd / (1.0 - phi * phi),
            _ => 1.0 / 12.0,
        }
    }
}

/// Dependence profile of a built-in model.
pub fn mixing_profile(model: &ProcessModel) -> MixingProfile {
    model.profile.clone()
}

fn mixing_profile_of(id: &ModelId) -> MixingProfile {
    let base = |beta| MixingProfile {
        beta,
        alpha: None,
        approx: DecayLaw::Zero,
        delta: 1.0,
        gamma: None,
        tau: 0.0,
    };
    match id {
        ModelId::Iid(_) => base(DecayLaw::Zero),
        ModelId::Ar1 { phi, .. } => {
            if *phi == 0.0 {
                base(DecayLaw::Zero)
            } else {
                // Envelope: beta(k) <= |phi|^k / sqrt(1 - phi^2).
                base(DecayLaw::Geometric {
                    c: 1.0 / (1.0 - phi * phi).sqrt(),
                    rho: phi.abs(),
                })
            }
        }
        ModelId::Ma { weights } => base(DecayLaw::MDependent(weights.len() - 1)),
        ModelId::Doubling { .. } => MixingProfile {
            approx: DecayLaw::Geometric { c: 1.0, rho: 0.5 },
            ..base(DecayLaw::Zero)
        },
    }
}

/// A realized path of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub model: ProcessModel,
    pub seed: u64,
    pub values: Vec<f64>,
}

impl SamplePath {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl AsRef<[f64]> for SamplePath {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// Generates `n` values of `model` from the stream keyed by `seed`.
pub fn generate_path(model: &ProcessModel, n: usize, seed: u64) -> Result<SamplePath> {
    require_len("path length", 1, n)?;
    let mut rng = rng::stream(seed);
    let values = match &model.id {
        ModelId::Iid(IidMarginal::Uniform01) => (0..n).map(|_| rng.random::<f64>()).collect(),
        ModelId::Iid(IidMarginal::StandardNormal) => (0..n)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect(),
        ModelId::Ar1 { phi, noise_sd } => {
            let mut out = Vec::with_capacity(n);
            let mut x = noise_sd / (1.0 - phi * phi).sqrt() * rng.sample::<f64, _>(StandardNormal);
            out.push(x);
            for _ in 1..n {
                x = phi * x + noise_sd * rng.sample::<f64, _>(StandardNormal);
                out.push(x);
            }
            out
        }
        ModelId::Ma { weights } => {
            let m = weights.len() - 1;
            let z: Vec<f64> = (0..n + m)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            let norm = weights.iter().map(|w| w * w).sum::<f64>().sqrt();
            (0..n)
                .map(|t| {
                    let y: f64 =
                        weights.iter().zip(&z[t..]).map(|(w, z)| w * z).sum::<f64>() / norm;
                    standard_normal_cdf(y)
                })
                .collect()
        }
        ModelId::Doubling { depth } => doubling_values(&mut rng, *depth, n),
    };
    Ok(SamplePath {
        model: model.clone(),
        seed,
        values,
    })
}

pub(crate) fn standard_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Coin flips are consumed least-significant bit first, 64 per draw.
struct Coins<'a, R: RngCore> {
    rng: &'a mut R,
    word: u64,
    left: u32,
}

impl<R: RngCore> Coins<'_, R> {
    fn flip(&mut self) -> u64 {
        if self.left == 0 {
            self.word = self.rng.next_u64();
            self.left = 64;
        }
        let b = self.word & 1;
        self.word >>= 1;
        self.left -= 1;
        b
    }
}

fn doubling_values<R: RngCore>(rng: &mut R, depth: u32, n: usize) -> Vec<f64> {
    let mut coins = Coins {
        rng,
        word: 0,
        left: 0,
    };
    let mask = if depth == 64 {
        u64::MAX
    } else {
        (1u64 << depth) - 1
    };
    let scale = (-(depth as f64)).exp2();
    // The window holds Z_n .. Z_{n+depth-1}, most significant first.
    let mut window = 0u64;
    for _ in 0..depth {
        window = (window << 1) | coins.flip();
    }
    let mut out = Vec::with_capacity(n);
    out.push(window as f64 * scale);
    for _ in 1..n {
        window = ((window << 1) & mask) | coins.flip();
        out.push(window as f64 * scale);
    }
    out
}

/// Monte-Carlo estimate of `E|X_1 - E(X_1 | Z_1, ..., Z_{1+l})|` for the
/// doubling model.
///
/// Conditioning on the first `l + 1` digits replaces the remaining digits by
/// their mean 1/2, so the residual is `Σ_{k=l+1}^{depth-1} 2^{-(k+1)}(Z_{1+k} - 1/2)`,
/// evaluated exactly in integer arithmetic. Compare against `a_l = 2^-l`.
pub fn approximation_defect(model: &ProcessModel, l: usize, reps: usize, seed: u64) -> Result<f64> {
    let ModelId::Doubling { depth } = model.id else {
        return Err(domain(format!(
            "approximation defect needs the doubling model, got {model}"
        )));
    };
    if l >= depth as usize {
        return Err(domain(format!(
            "conditioning depth l = {l} must be below depth {depth}"
        )));
    }
    require_len("approximation defect replicates", 1, reps)?;
    let tail_bits = depth - 1 - l as u32;
    if tail_bits == 0 {
        return Ok(0.0);
    }
    let mut rng = rng::stream(seed);
    let mut coins = Coins {
        rng: &mut rng,
        word: 0,
        left: 0,
    };
    // Residual = (T - (2^b - 1)/2) / 2^depth with T the integer tail.
    let centre = ((1u64 << tail_bits) - 1) as f64 / 2.0;
    let scale = (-(depth as f64)).exp2();
    let mut acc = 0.0;
    for _ in 0..reps {
        let mut tail = 0u64;
        for _ in 0..tail_bits {
            tail = (tail << 1) | coins.flip();
        }
        acc += (tail as f64 - centre).abs() * scale;
    }
    Ok(acc / reps as f64)
}

/// Fitted growth exponent `τ` of `S(n) = Σ_{k<=n} k β(k)^{δ/(2+δ)}`.
///
/// `S` is evaluated on the dyadic grid `n = 2^j <= n_max`; the slope of
/// `log S` against `log n` is fitted by least squares over the upper half of
/// the grid (where the asymptotic regime dominates) and clamped to `[0, 2]`.
/// Identically zero sums give 0.
pub fn tau_exponent(profile: &MixingProfile, delta: f64, n_max: usize) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(domain(format!("delta must be positive, got {delta}")));
    }
    require_len("tau fit range n_max", 4, n_max)?;
    let expo = delta / (2.0 + delta);
    let top = usize::BITS - 1 - n_max.leading_zeros();
    let first = top.div_ceil(2).max(1);
    let mut s = 0.0;
    let mut next_j = 1u32;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for k in 1..=(1usize << top) {
        s += k as f64 * profile.beta(k).powf(expo);
        if k == 1usize << next_j {
            if next_j >= first && s > 0.0 {
                xs.push((k as f64).ln());
                ys.push(s.ln());
            }
            next_j += 1;
        }
    }
    Ok(ols_slope(&xs, &ys).map_or(0.0, |b| b.clamp(0.0, 2.0)))
}
