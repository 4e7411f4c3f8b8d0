//! Symmetric bivariate kernels, their Hoeffding decompositions, and Monte-Carlo
//! probes for the moment and continuity conditions used by the rate results.

mod hoeffding;
mod probes;
mod spectrum;

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::error::{domain, Result};

pub use hoeffding::{
    analytic_parts, degeneracy_defect, empirical_parts, uniform_pair_mean_cdf,
    uniform_pair_mean_density, DefectIntegrator, HoeffdingParts, PartsMode,
};
pub use probes::{
    continuity_modulus, uniform_moment_probe, Coupling, ModulusEstimate, ModulusKind, MomentProbe,
    PairSampler,
};
pub use spectrum::kernel_spectrum;

pub(crate) type PairFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Identifier of a built-in kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelId {
    /// `|x - y|`, Gini's mean difference.
    Gini,
    /// The Cramér-von Mises kernel `∫ (1{x<=t} - t)(1{y<=t} - t) dt` on `[0,1]`.
    Cvm,
    /// `1{(x + y)/2 <= t}`, the Hodges-Lehmann indicator at level `t`.
    HlIndicator(f64),
}

impl fmt::Display for KernelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelId::Gini => write!(f, "gini"),
            KernelId::Cvm => write!(f, "cvm"),
            KernelId::HlIndicator(t) => write!(f, "hl_indicator({t})"),
        }
    }
}

/// Marginal law of the observations, used for population-level integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Marginal {
    Uniform01,
}

impl fmt::Display for Marginal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Marginal::Uniform01 => write!(f, "uniform01"),
        }
    }
}

#[derive(Clone)]
pub(crate) enum Form {
    Gini,
    Cvm,
    HlIndicator(f64),
    Constant(f64),
    Scaled(f64, Box<Form>),
    Custom(PairFn),
}

impl Form {
    #[inline]
    pub(crate) fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Form::Gini => gini(x, y),
            Form::Cvm => cvm(x, y),
            Form::HlIndicator(t) => hl_indicator(*t, x, y),
            Form::Constant(c) => *c,
            Form::Scaled(c, inner) => c * inner.eval(x, y),
            Form::Custom(f) => f(x, y),
        }
    }
}

/// Expands `$body` with `$h` bound to a monomorphic closure for the kernel
/// form, so hot pair loops avoid dynamic dispatch for the built-ins.
macro_rules! with_pair_fn {
    ($form:expr, |$h:ident| $body:expr) => {
        match $form {
            $crate::kernels::Form::Gini => {
                let $h = $crate::kernels::gini;
                $body
            }
            $crate::kernels::Form::Cvm => {
                let $h = $crate::kernels::cvm;
                $body
            }
            $crate::kernels::Form::HlIndicator(t) => {
                let t = *t;
                let $h = move |x: f64, y: f64| $crate::kernels::hl_indicator(t, x, y);
                $body
            }
            other => {
                let $h = |x: f64, y: f64| other.eval(x, y);
                $body
            }
        }
    };
}
pub(crate) use with_pair_fn;

#[inline(always)]
pub(crate) fn gini(x: f64, y: f64) -> f64 {
    (x - y).abs()
}

static CVM_CLAMPED: AtomicU64 = AtomicU64::new(0);

/// Number of Cramér-von Mises evaluations (process-wide) whose arguments fell
/// outside `[0,1]` and were clamped.
pub fn cvm_clamp_count() -> u64 {
    CVM_CLAMPED.load(Ordering::Relaxed)
}

/// Closed form of the Cramér-von Mises kernel on the unit square:
/// `(x² + y²)/2 - max(x, y) + 1/3`.
#[inline(always)]
pub(crate) fn cvm(x: f64, y: f64) -> f64 {
    let (x, y) = if (0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y) {
        (x, y)
    } else {
        CVM_CLAMPED.fetch_add(1, Ordering::Relaxed);
        (x.clamp(0.0, 1.0), y.clamp(0.0, 1.0))
    };
    let m = if x > y { x } else { y };
    (x * x + y * y) / 2.0 - m + 1.0 / 3.0
}

#[inline(always)]
pub(crate) fn hl_indicator(t: f64, x: f64, y: f64) -> f64 {
    if (x + y) / 2.0 <= t {
        1.0
    } else {
        0.0
    }
}

/// A symmetric bivariate kernel with its metadata.
///
/// Kernels are immutable and cheap to clone; they can be shared across
/// threads.
#[derive(Clone)]
pub struct Kernel {
    name: String,
    pub(crate) form: Form,
    is_symmetric: bool,
    bound: Option<f64>,
    builtin: Option<KernelId>,
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Kernel")
            .field("name", &self.name)
            .field("is_symmetric", &self.is_symmetric)
            .field("bound", &self.bound)
            .finish()
    }
}

impl Kernel {
    pub fn builtin(id: KernelId) -> Self {
        builtin_kernel(id)
    }

    /// The kernel `h ≡ c`.
    pub fn constant(c: f64) -> Self {
        Self {
            name: format!("constant({c})"),
            form: Form::Constant(c),
            is_symmetric: true,
            bound: Some(c.abs()),
            builtin: None,
        }
    }

    /// Wraps an arbitrary function. `is_symmetric` is trusted, not checked.
    pub fn custom<F>(name: impl Into<String>, f: F, is_symmetric: bool, bound: Option<f64>) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            form: Form::Custom(Arc::new(f)),
            is_symmetric,
            bound,
            builtin: None,
        }
    }

    /// The kernel `c · h`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            name: format!("{c}*{}", self.name),
            form: Form::Scaled(c, Box::new(self.form.clone())),
            is_symmetric: self.is_symmetric,
            bound: self.bound.map(|b| b * c.abs()),
            builtin: None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_symmetric
    }

    /// Uniform bound on `|h|`, when known.
    pub fn bound(&self) -> Option<f64> {
        self.bound
    }

    pub fn builtin_id(&self) -> Option<KernelId> {
        self.builtin
    }

    /// Evaluates `h(x, y)` without input validation.
    #[inline]
    pub fn value(&self, x: f64, y: f64) -> f64 {
        self.form.eval(x, y)
    }

    /// Evaluates `h(x, y)`, rejecting non-finite arguments.
    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        eval_kernel(self, x, y)
    }

    pub(crate) fn is_constant(&self) -> Option<f64> {
        match self.form {
            Form::Constant(c) => Some(c),
            _ => None,
        }
    }
}

/// Evaluates `k` at `(x, y)`; non-finite inputs are a domain error.
pub fn eval_kernel(k: &Kernel, x: f64, y: f64) -> Result<f64> {
    if !x.is_finite() || !y.is_finite() {
        return Err(domain(format!(
            "kernel `{}` evaluated at non-finite point ({x}, {y})",
            k.name
        )));
    }
    Ok(k.value(x, y))
}

pub fn builtin_kernel(id: KernelId) -> Kernel {
    let (form, bound) = match id {
        KernelId::Gini => (Form::Gini, None),
        KernelId::Cvm => (Form::Cvm, Some(1.0 / 3.0)),
        KernelId::HlIndicator(t) => (Form::HlIndicator(t), Some(1.0)),
    };
    Kernel {
        name: id.to_string(),
        form,
        is_symmetric: true,
        bound,
        builtin: Some(id),
    }
}

/// Midpoints of `n` equal cells of `[0, 1]`.
pub(crate) fn midpoints(n: usize) -> impl Iterator<Item = f64> + Clone {
    let h = 1.0 / n as f64;
    (0..n).map(move |i| (i as f64 + 0.5) * h)
}
