use std::fmt;
use std::sync::Arc;

use super::{midpoints, Form, Kernel, KernelId, Marginal, PairFn};
use crate::error::{require_len, Error, Result};
use crate::stats::CompensatedSum;

type LinearFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Whether a decomposition holds at population level or is a plug-in
/// estimate computed from one sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartsMode {
    Analytic,
    Empirical,
}

#[derive(Clone)]
enum Linear {
    Zero,
    GiniUniform,
    HlUniform {
        two_t: f64,
        theta: f64,
    },
    Empirical {
        sample: Arc<[f64]>,
        at_sample: Arc<[f64]>,
        theta: f64,
    },
    Custom(LinearFn),
}

/// Hoeffding decomposition `h(x,y) = θ + h1(x) + h1(y) + h2(x,y)`.
///
/// `h2` is always evaluated as the residual `h - θ - h1(x) - h1(y)` (in that
/// order) unless a replacement was installed with
/// [`HoeffdingParts::with_h2`]. A scale factor lets the parts of `c·h` share
/// the evaluation path of `h`, so scaling by a power of two is exact.
#[derive(Clone)]
pub struct HoeffdingParts {
    kernel: Kernel,
    theta: f64,
    linear: Linear,
    h2_override: Option<PairFn>,
    scale: f64,
    mode: PartsMode,
    marginal: String,
}

impl fmt::Debug for HoeffdingParts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HoeffdingParts")
            .field("kernel", &self.kernel.name())
            .field("theta", &self.theta())
            .field("scale", &self.scale)
            .field("mode", &self.mode)
            .field("marginal", &self.marginal)
            .finish()
    }
}

impl HoeffdingParts {
    /// Builds parts from user-supplied components. `h2 = None` means the
    /// residual definition. The result is tagged analytic.
    pub fn from_components<F>(
        kernel: Kernel,
        theta: f64,
        h1: F,
        h2: Option<PairFn>,
        marginal: impl Into<String>,
    ) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            kernel,
            theta,
            linear: Linear::Custom(Arc::new(h1)),
            h2_override: h2,
            scale: 1.0,
            mode: PartsMode::Analytic,
            marginal: marginal.into(),
        }
    }

    /// Replaces the degenerate component by `f`.
    pub fn with_h2<F>(mut self, f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        self.h2_override = Some(Arc::new(f));
        self
    }

    /// Parts of the kernel `c·h`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.scale *= c;
        out
    }

    /// The kernel these parts decompose (including any scale factor).
    pub fn kernel(&self) -> Kernel {
        if self.scale == 1.0 {
            self.kernel.clone()
        } else {
            self.kernel.scaled(self.scale)
        }
    }

    /// `h2` wrapped as a standalone kernel.
    pub fn degenerate_kernel(&self) -> Kernel {
        let parts = self.clone();
        Kernel::custom(
            format!("h2[{}]", self.kernel().name()),
            move |x, y| parts.h2(x, y),
            true,
            None,
        )
    }

    pub fn mode(&self) -> PartsMode {
        self.mode
    }

    pub fn marginal(&self) -> &str {
        &self.marginal
    }

    pub fn theta(&self) -> f64 {
        self.scale * self.theta
    }

    pub fn h1(&self, x: f64) -> f64 {
        self.scale * self.base_h1(x)
    }

    pub fn h2(&self, x: f64, y: f64) -> f64 {
        match &self.h2_override {
            Some(f) => self.scale * f(x, y),
            None => {
                self.scale
                    * (self.kernel.value(x, y) - self.theta - self.base_h1(x) - self.base_h1(y))
            }
        }
    }

    /// Leave-self-out `ĥ1(X_i)` for empirical parts.
    pub fn h1_at_sample(&self, i: usize) -> Option<f64> {
        match &self.linear {
            Linear::Empirical { at_sample, .. } => at_sample.get(i).map(|v| self.scale * v),
            _ => None,
        }
    }

    /// `ĥ2(X_i, X_j)` on sample points, consistent with [`Self::h1_at_sample`].
    pub fn h2_at_sample(&self, i: usize, j: usize) -> Option<f64> {
        match &self.linear {
            Linear::Empirical {
                sample, at_sample, ..
            } => {
                let (xi, xj) = (*sample.get(i)?, *sample.get(j)?);
                let h = self.kernel.value(xi, xj);
                Some(self.scale * (h - self.theta - at_sample[i] - at_sample[j]))
            }
            _ => None,
        }
    }

    pub(crate) fn scale(&self) -> f64 {
        self.scale
    }

    pub(crate) fn base_theta(&self) -> f64 {
        self.theta
    }

    pub(crate) fn base_form(&self) -> &Form {
        &self.kernel.form
    }

    pub(crate) fn h2_override(&self) -> Option<&PairFn> {
        self.h2_override.as_ref()
    }

    /// True when `h2` vanishes identically by construction.
    pub(crate) fn h2_is_zero(&self) -> bool {
        self.h2_override.is_none()
            && matches!(self.linear, Linear::Zero)
            && self.kernel.is_constant() == Some(self.theta)
    }

    #[inline]
    pub(crate) fn base_h1(&self, x: f64) -> f64 {
        match &self.linear {
            Linear::Zero => 0.0,
            Linear::GiniUniform => {
                let m = if x < 0.0 {
                    0.5 - x
                } else if x > 1.0 {
                    x - 0.5
                } else {
                    x * x - x + 0.5
                };
                m - 1.0 / 3.0
            }
            Linear::HlUniform { two_t, theta } => (two_t - x).clamp(0.0, 1.0) - theta,
            Linear::Empirical { sample, theta, .. } => {
                let s: CompensatedSum = sample.iter().map(|&y| self.kernel.value(x, y)).collect();
                s.value() / sample.len() as f64 - theta
            }
            Linear::Custom(f) => f(x),
        }
    }
}

/// CDF of `(X + Y)/2` for independent uniforms on `[0,1]` (triangular law).
pub fn uniform_pair_mean_cdf(t: f64) -> f64 {
    let s = 2.0 * t;
    if s <= 0.0 {
        0.0
    } else if s <= 1.0 {
        s * s / 2.0
    } else if s < 2.0 {
        1.0 - (2.0 - s) * (2.0 - s) / 2.0
    } else {
        1.0
    }
}

/// Density of `(X + Y)/2` for independent uniforms on `[0,1]`.
pub fn uniform_pair_mean_density(t: f64) -> f64 {
    let s = 2.0 * t;
    if (0.0..=1.0).contains(&s) {
        2.0 * s
    } else if s > 1.0 && s <= 2.0 {
        2.0 * (2.0 - s)
    } else {
        0.0
    }
}

/// Population Hoeffding parts of a built-in kernel.
///
/// Only the uniform marginal on `[0,1]` is supported; any other pair is an
/// [`Error::Unsupported`].
pub fn analytic_parts(id: KernelId, marginal: Marginal) -> Result<HoeffdingParts> {
    let Marginal::Uniform01 = marginal;
    let (theta, linear) = match id {
        KernelId::Gini => (1.0 / 3.0, Linear::GiniUniform),
        KernelId::Cvm => (0.0, Linear::Zero),
        KernelId::HlIndicator(t) => {
            if !t.is_finite() {
                return Err(Error::Unsupported {
                    kernel: id.to_string(),
                    marginal: marginal.to_string(),
                });
            }
            let theta = uniform_pair_mean_cdf(t);
            (
                theta,
                Linear::HlUniform {
                    two_t: 2.0 * t,
                    theta,
                },
            )
        }
    };
    Ok(HoeffdingParts {
        kernel: Kernel::builtin(id),
        theta,
        linear,
        h2_override: None,
        scale: 1.0,
        mode: PartsMode::Analytic,
        marginal: marginal.to_string(),
    })
}

impl Kernel {
    /// Analytic parts of this kernel under `marginal`.
    ///
    /// Constant kernels decompose trivially under any marginal; otherwise the
    /// kernel must be a built-in.
    pub fn analytic_parts(&self, marginal: Marginal) -> Result<HoeffdingParts> {
        if let Some(c) = self.is_constant() {
            return Ok(HoeffdingParts {
                kernel: self.clone(),
                theta: c,
                linear: Linear::Zero,
                h2_override: None,
                scale: 1.0,
                mode: PartsMode::Analytic,
                marginal: marginal.to_string(),
            });
        }
        match (self.builtin_id(), &self.form) {
            (Some(id), _) => analytic_parts(id, marginal),
            (None, Form::Scaled(c, inner)) => {
                let inner = Kernel {
                    name: self.name().to_string(),
                    form: (**inner).clone(),
                    is_symmetric: self.is_symmetric(),
                    bound: None,
                    builtin: builtin_of(inner),
                };
                Ok(inner.analytic_parts(marginal)?.scaled(*c))
            }
            _ => Err(Error::Unsupported {
                kernel: self.name().to_string(),
                marginal: marginal.to_string(),
            }),
        }
    }
}

fn builtin_of(form: &Form) -> Option<KernelId> {
    match form {
        Form::Gini => Some(KernelId::Gini),
        Form::Cvm => Some(KernelId::Cvm),
        Form::HlIndicator(t) => Some(KernelId::HlIndicator(*t)),
        _ => None,
    }
}

/// Plug-in decomposition on a sample.
///
/// `θ̂` is the U-statistic of the sample. On sample points, `ĥ1(X_i)` is the
/// leave-self-out mean `Σ_{j≠i} h(X_i, X_j)/(n-1) - θ̂`, which centers
/// `ĥ1` exactly on the sample and makes `Σ_{i<j} ĥ2(X_i, X_j)` vanish. Away
/// from the sample, `ĥ1(x) = Σ_j h(x, X_j)/n - θ̂`.
pub fn empirical_parts(k: &Kernel, sample: &[f64]) -> Result<HoeffdingParts> {
    let n = sample.len();
    require_len("empirical Hoeffding parts (sample length)", 2, n)?;
    let mut rows = vec![CompensatedSum::new(); n];
    for j in 1..n {
        for i in 0..j {
            let h = k.value(sample[i], sample[j]);
            rows[i].add(h);
            rows[j].add(h);
        }
    }
    let theta = crate::ustat::u_statistic(k, sample)?;
    let at_sample: Vec<f64> = rows
        .iter()
        .map(|r| r.value() / (n - 1) as f64 - theta)
        .collect();
    Ok(HoeffdingParts {
        kernel: k.clone(),
        theta,
        linear: Linear::Empirical {
            sample: sample.into(),
            at_sample: at_sample.into(),
            theta,
        },
        h2_override: None,
        scale: 1.0,
        mode: PartsMode::Empirical,
        marginal: "empirical".to_string(),
    })
}

/// How `∫ h2(x, y) dF(y)` is approximated.
#[derive(Debug, Clone, Copy)]
pub enum DefectIntegrator<'a> {
    /// Composite midpoint rule on `[0,1]` (uniform marginal).
    Quadrature { nodes: usize },
    /// Monte-Carlo mean over draws from the marginal.
    Sample(&'a [f64]),
}

impl Default for DefectIntegrator<'_> {
    fn default() -> Self {
        DefectIntegrator::Quadrature { nodes: 10_000 }
    }
}

/// `max_x |∫ h2(x, y) dF(y)|` over the probe points.
pub fn degeneracy_defect(
    parts: &HoeffdingParts,
    probe_xs: &[f64],
    integrator: DefectIntegrator<'_>,
) -> Result<f64> {
    require_len("degeneracy probe set", 1, probe_xs.len())?;
    let mean_over = |x: f64, ys: &mut dyn Iterator<Item = f64>, count: usize| {
        let s: CompensatedSum = ys.map(|y| parts.h2(x, y)).collect();
        (s.value() / count as f64).abs()
    };
    let mut worst = 0.0f64;
    match integrator {
        DefectIntegrator::Quadrature { nodes } => {
            require_len("quadrature nodes", 2, nodes)?;
            for &x in probe_xs {
                worst = worst.max(mean_over(x, &mut midpoints(nodes), nodes));
            }
        }
        DefectIntegrator::Sample(draws) => {
            require_len("Monte-Carlo draws", 2, draws.len())?;
            for &x in probe_xs {
                worst = worst.max(mean_over(x, &mut draws.iter().copied(), draws.len()));
            }
        }
    }
    Ok(worst)
}
