//! Finite-sample surrogates for the almost-sure rate results.
//!
//! None of these verify an almost-sure statement. Each computes a statistic
//! whose decay (or level) the asymptotic results predict, so that Monte-Carlo
//! runs can be checked against wide, fixed bands.

use crate::error::{domain, require_len, Error, Result};
use crate::kernels::{degeneracy_defect, DefectIntegrator, HoeffdingParts, Marginal, PartsMode};
use crate::mc::replicates;
use crate::processes::{generate_path, ProcessModel};
use crate::stats::{mean, median, ols_slope, variance, CompensatedSum};
use crate::ustat::{dyadic_checkpoints, pair_count, prefix_sums, PairSource, Trajectory};

/// Largest accepted `max_x |∫ h2(x,y) dy|` for parts driving rate diagnostics.
pub const DEGENERACY_TOLERANCE: f64 = 1e-6;

/// Smallest `n` with a comfortably positive `log log n`.
const MIN_LOGLOG_N: usize = 16;

/// Rejects empirical parts and parts whose `h2` is not degenerate under the
/// uniform marginal, and checks the model emits the marginal the parts assume.
fn require_population_parts(
    parts: &HoeffdingParts,
    model: &ProcessModel,
    what: &'static str,
) -> Result<()> {
    if parts.mode() == PartsMode::Empirical {
        return Err(Error::EmpiricalParts(what));
    }
    if parts.marginal() == Marginal::Uniform01.to_string() {
        if !model.has_uniform_marginal() {
            return Err(domain(format!(
                "parts assume a uniform01 marginal but model {model} does not emit one"
            )));
        }
        let probes: Vec<f64> = (0..17).map(|i| i as f64 / 16.0).collect();
        let defect = degeneracy_defect(parts, &probes, DefectIntegrator::default())?;
        if defect > DEGENERACY_TOLERANCE {
            return Err(Error::NotDegenerate(defect));
        }
    }
    Ok(())
}

/// Trajectory of `r_n = n^{1-τ/2} U_n(h2) / (log^{3/2} n · log log n)` at the
/// dyadic checkpoints `16 <= n <= n_max` (plus `n_max`), with `τ` taken from
/// the model's profile.
pub fn theorem1_rate(
    parts: &HoeffdingParts,
    model: &ProcessModel,
    n_max: usize,
    seed: u64,
) -> Result<Trajectory> {
    require_population_parts(parts, model, "the rate diagnostic")?;
    require_len("rate diagnostic n_max", MIN_LOGLOG_N, n_max)?;
    let tau = model.profile().tau;
    let path = generate_path(model, n_max, seed)?;
    let cps = dyadic_checkpoints(n_max, MIN_LOGLOG_N);
    let q = prefix_sums(PairSource::Degenerate(parts), &path.values, &cps)?;
    let values = cps
        .iter()
        .zip(&q)
        .map(|(&n, &qn)| {
            let nf = n as f64;
            let u = qn / pair_count(n);
            nf.powf(1.0 - tau / 2.0) * u / (nf.ln().powf(1.5) * nf.ln().ln())
        })
        .collect();
    Trajectory::new(format!("r_n[{}]", parts.kernel().name()), seed, cps, values)
}

/// Per-replicate `sup_n Q_n / (n log log n)` over dyadic `n` in `[n_lo, n_hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DdpSummary {
    pub n_range: (usize, usize),
    pub sups: Vec<f64>,
    pub median: f64,
}

/// Compare the median against the leading eigenvalue from
/// [`crate::kernels::kernel_spectrum`].
pub fn ddp_limsup_diagnostic(
    parts: &HoeffdingParts,
    model: &ProcessModel,
    n_range: (usize, usize),
    reps: usize,
    base_seed: u64,
) -> Result<DdpSummary> {
    let (lo, hi) = n_range;
    require_len("limsup diagnostic lower end", MIN_LOGLOG_N, lo)?;
    if hi < lo {
        return Err(domain(format!("empty range [{lo}, {hi}]")));
    }
    require_len("limsup diagnostic replicates", 1, reps)?;
    require_population_parts(parts, model, "the limsup diagnostic")?;
    let cps = dyadic_checkpoints(hi, lo);
    let sups = replicates(base_seed, reps, |_, seed| {
        let path = generate_path(model, hi, seed)?;
        let q = prefix_sums(PairSource::Degenerate(parts), &path.values, &cps)?;
        Ok(cps
            .iter()
            .zip(&q)
            .map(|(&n, &qn)| qn / (n as f64 * (n as f64).ln().ln()))
            .fold(f64::NEG_INFINITY, f64::max))
    })?;
    Ok(DdpSummary {
        n_range,
        median: median(&sups),
        sups,
    })
}

/// Monte-Carlo `E[Q_n²]` on a grid of sample sizes and its fitted growth
/// exponent. `flagged` marks a degenerate fit (some mean square is zero).
#[derive(Debug, Clone, PartialEq)]
pub struct MomentScaling {
    pub n_grid: Vec<usize>,
    pub mean_square: Vec<f64>,
    pub slope: Option<f64>,
    pub flagged: bool,
}

pub fn second_moment_scaling(
    parts: &HoeffdingParts,
    model: &ProcessModel,
    n_grid: &[usize],
    reps: usize,
    base_seed: u64,
) -> Result<MomentScaling> {
    require_len("second-moment replicates", 30, reps)?;
    require_len("second-moment grid", 2, n_grid.len())?;
    if parts.mode() == PartsMode::Empirical {
        return Err(Error::EmpiricalParts("the second-moment scaling"));
    }
    let n_max = *n_grid.last().unwrap();
    let per_rep = replicates(base_seed, reps, |_, seed| {
        let path = generate_path(model, n_max, seed)?;
        prefix_sums(PairSource::Degenerate(parts), &path.values, n_grid)
    })?;
    let mean_square: Vec<f64> = (0..n_grid.len())
        .map(|g| {
            let s: CompensatedSum = per_rep.iter().map(|q| q[g] * q[g]).collect();
            s.value() / reps as f64
        })
        .collect();
    let flagged = mean_square.iter().any(|&m| !(m > 0.0));
    let slope = if flagged {
        None
    } else {
        let xs: Vec<f64> = n_grid.iter().map(|&n| (n as f64).ln()).collect();
        let ys: Vec<f64> = mean_square.iter().map(|m| m.ln()).collect();
        ols_slope(&xs, &ys)
    };
    Ok(MomentScaling {
        n_grid: n_grid.to_vec(),
        mean_square,
        slope,
        flagged,
    })
}

/// One point of the covariance decay diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceEstimate {
    pub m: usize,
    pub gap: usize,
    /// `|mean of h2(X_1, X_{1+m}) h2(X_{1+m+gap}, X_{2+m+gap})|`.
    pub estimate: f64,
    /// Standard error of the (signed) mean.
    pub std_error: f64,
}

/// Estimates `|E[h2(X_1, X_{1+m}) h2(X_{1+m+gap}, X_{1+m+gap+1})]|` for each
/// `m`, with `gap = m` unless given. The index layout is fixed so that the
/// largest separation between the two pairs is `m`.
pub fn covariance_decay(
    parts: &HoeffdingParts,
    model: &ProcessModel,
    m_grid: &[usize],
    gap: Option<usize>,
    reps: usize,
    base_seed: u64,
) -> Result<Vec<CovarianceEstimate>> {
    require_len("covariance replicates", 100, reps)?;
    if parts.mode() == PartsMode::Empirical {
        return Err(Error::EmpiricalParts("the covariance decay"));
    }
    let mut out = Vec::with_capacity(m_grid.len());
    for &m in m_grid {
        require_len("covariance lag m", 1, m)?;
        let g = gap.unwrap_or(m);
        require_len("covariance gap", 1, g)?;
        let len = m + g + 2;
        let products = replicates(base_seed, reps, |_, seed| {
            let x = generate_path(model, len, seed)?.values;
            Ok(parts.h2(x[0], x[m]) * parts.h2(x[m + g], x[m + g + 1]))
        })?;
        out.push(CovarianceEstimate {
            m,
            gap: g,
            estimate: mean(&products).abs(),
            std_error: (variance(&products) / reps as f64).sqrt(),
        });
    }
    Ok(out)
}

/// `Var[Σ_{i<j}(h - θ)] / Var[(n-1) Σ_i h1(X_i)]` across replicates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceRatio {
    pub n: usize,
    pub reps: usize,
    pub var_total: f64,
    pub var_linear: f64,
    /// `None` when the linear part has zero variance (flagged).
    pub ratio: Option<f64>,
    pub flagged: bool,
}

pub fn variance_ratio(
    parts: &HoeffdingParts,
    model: &ProcessModel,
    n: usize,
    reps: usize,
    base_seed: u64,
) -> Result<VarianceRatio> {
    require_len("variance ratio replicates", 1000, reps)?;
    require_len("variance ratio sample size", 2, n)?;
    if parts.mode() == PartsMode::Empirical {
        return Err(Error::EmpiricalParts("the variance ratio"));
    }
    let kernel = parts.kernel();
    let theta_total = parts.theta() * pair_count(n);
    let pairs = replicates(base_seed, reps, |_, seed| {
        let path = generate_path(model, n, seed)?;
        let s = prefix_sums(PairSource::Kernel(&kernel), &path.values, &[n])?[0];
        let lin: CompensatedSum = path.values.iter().map(|&x| parts.h1(x)).collect();
        Ok((s - theta_total, (n - 1) as f64 * lin.value()))
    })?;
    let (t, l): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let var_total = variance(&t);
    let var_linear = variance(&l);
    let flagged = !(var_linear > 0.0);
    Ok(VarianceRatio {
        n,
        reps,
        var_total,
        var_linear,
        ratio: (!flagged).then(|| var_total / var_linear),
        flagged,
    })
}

/// Maximum of `|a_n Q_n - a_{2^{l-1}} Q_{2^{l-1}}|` over `2^{l-1} <= n < 2^l`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockMax {
    pub l: u32,
    pub max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DyadicMaxima {
    pub blocks: Vec<BlockMax>,
    /// Blocks skipped because they hold fewer than two checkpoints, lack
    /// their left endpoint, or start below 16.
    pub skipped: Vec<u32>,
}

/// Block maxima of the chaining differences with
/// `a_n = 1 / (n^{1+τ/2} log^{3/2} n log log n)`.
pub fn dyadic_max_diagnostic(q: &Trajectory, tau: f64) -> DyadicMaxima {
    let weight = |n: usize| {
        let nf = n as f64;
        1.0 / (nf.powf(1.0 + tau / 2.0) * nf.ln().powf(1.5) * nf.ln().ln())
    };
    let mut out = DyadicMaxima {
        blocks: Vec::new(),
        skipped: Vec::new(),
    };
    let Some(&last) = q.checkpoints.last() else {
        return out;
    };
    let top = usize::BITS - last.leading_zeros();
    for l in 1..=top {
        let start = 1usize << (l - 1);
        let end = start << 1;
        let block: Vec<(usize, f64)> = q
            .checkpoints
            .iter()
            .zip(&q.values)
            .filter(|(&n, _)| n >= start && n < end)
            .map(|(&n, &v)| (n, v))
            .collect();
        if block.is_empty() {
            continue;
        }
        if block.len() < 2 || block[0].0 != start || start < MIN_LOGLOG_N {
            out.skipped.push(l);
            continue;
        }
        let anchor = weight(start) * block[0].1;
        let max = block
            .iter()
            .map(|&(n, v)| (weight(n) * v - anchor).abs())
            .fold(0.0, f64::max);
        out.blocks.push(BlockMax {
            l,
            max,
            points: block.len(),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{analytic_parts, Kernel, KernelId};

    fn cvm() -> HoeffdingParts {
        analytic_parts(KernelId::Cvm, Marginal::Uniform01).unwrap()
    }

    fn zero() -> HoeffdingParts {
        Kernel::constant(0.0)
            .analytic_parts(Marginal::Uniform01)
            .unwrap()
    }

    #[test]
    fn rate_checkpoints_and_zero_kernel() {
        let t = theorem1_rate(&zero(), &ProcessModel::iid_uniform(), 1 << 10, 3).unwrap();
        assert_eq!(t.checkpoints, vec![16, 32, 64, 128, 256, 512, 1024]);
        assert!(t.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rate_rejects_bad_inputs() {
        let k = crate::kernels::builtin_kernel(KernelId::Cvm);
        let emp = crate::kernels::empirical_parts(&k, &[0.1, 0.4, 0.8]).unwrap();
        assert!(matches!(
            theorem1_rate(&emp, &ProcessModel::iid_uniform(), 64, 1),
            Err(Error::EmpiricalParts(_))
        ));
        let h1 = cvm();
        let broken = cvm().with_h2(move |x, _| h1.kernel().value(x, 0.0) + 0.1);
        assert!(matches!(
            theorem1_rate(&broken, &ProcessModel::iid_uniform(), 64, 1),
            Err(Error::NotDegenerate(_))
        ));
        assert!(theorem1_rate(&cvm(), &ProcessModel::ar1(0.5, 1.0).unwrap(), 64, 1).is_err());
        assert!(theorem1_rate(&cvm(), &ProcessModel::iid_uniform(), 8, 1).is_err());
    }

    #[test]
    fn rate_is_homogeneous() {
        let m = ProcessModel::iid_uniform();
        let a = theorem1_rate(&cvm(), &m, 512, 5).unwrap();
        for c in [2.0, -1.0, 0.5] {
            let b = theorem1_rate(&cvm().scaled(c), &m, 512, 5).unwrap();
            for (x, y) in a.values.iter().zip(&b.values) {
                assert_eq!(c * x, *y);
            }
        }
        let c = 3.7;
        let b = theorem1_rate(&cvm().scaled(c), &m, 512, 5).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((c * x - y).abs() <= 1e-12 * y.abs().max(1e-300));
        }
    }

    #[test]
    fn ddp_homogeneous_and_zero() {
        let m = ProcessModel::iid_uniform();
        let a = ddp_limsup_diagnostic(&cvm(), &m, (16, 256), 6, 1).unwrap();
        let b = ddp_limsup_diagnostic(&cvm().scaled(2.0), &m, (16, 256), 6, 1).unwrap();
        assert_eq!(b.median, 2.0 * a.median);
        let z = ddp_limsup_diagnostic(&zero(), &m, (16, 256), 3, 1).unwrap();
        assert_eq!(z.median, 0.0);
    }

    #[test]
    fn moment_scaling_zero_kernel_flagged() {
        let s = second_moment_scaling(&zero(), &ProcessModel::iid_uniform(), &[16, 32, 64], 30, 1)
            .unwrap();
        assert!(s.flagged && s.slope.is_none());
        assert!(s.mean_square.iter().all(|&v| v == 0.0));
        assert!(
            second_moment_scaling(&cvm(), &ProcessModel::iid_uniform(), &[16, 32], 29, 1).is_err()
        );
    }

    #[test]
    fn moment_scaling_ma3_slope() {
        let s = second_moment_scaling(
            &cvm(),
            &ProcessModel::ma_equal(3),
            &[64, 128, 256, 512, 1024],
            200,
            2,
        )
        .unwrap();
        let slope = s.slope.unwrap();
        assert!((1.6..=2.4).contains(&slope), "{slope}");
    }

    #[test]
    fn covariance_iid_and_m_dependent() {
        let iid = covariance_decay(
            &cvm(),
            &ProcessModel::iid_uniform(),
            &[1, 5],
            None,
            20_000,
            3,
        )
        .unwrap();
        for c in &iid {
            assert!(c.estimate <= 4.0 * c.std_error + 1e-12, "{c:?}");
        }
        let ma = covariance_decay(
            &cvm(),
            &ProcessModel::ma_equal(3),
            &[1, 10],
            None,
            20_000,
            4,
        )
        .unwrap();
        assert!(ma[1].estimate <= 4.0 * ma[1].std_error, "{:?}", ma[1]);
        assert!(ma[0].estimate >= ma[1].estimate - 4.0 * (ma[0].std_error + ma[1].std_error));
        assert!(
            covariance_decay(&cvm(), &ProcessModel::iid_uniform(), &[0], None, 100, 1).is_err()
        );
        assert!(covariance_decay(&cvm(), &ProcessModel::iid_uniform(), &[1], None, 99, 1).is_err());
    }

    #[test]
    fn variance_ratio_flags_degenerate_kernel() {
        let r = variance_ratio(&cvm(), &ProcessModel::iid_uniform(), 20, 1000, 1).unwrap();
        assert!(r.flagged && r.ratio.is_none());
        assert!(variance_ratio(&cvm(), &ProcessModel::iid_uniform(), 20, 999, 1).is_err());
    }

    #[test]
    fn variance_ratio_gini_ma2() {
        let gini = analytic_parts(KernelId::Gini, Marginal::Uniform01).unwrap();
        let r = variance_ratio(&gini, &ProcessModel::ma_equal(2), 500, 2000, 8).unwrap();
        let ratio = r.ratio.unwrap();
        assert!((0.85..=1.15).contains(&ratio), "{ratio}");
    }

    #[test]
    fn dyadic_blocks() {
        let cps: Vec<usize> = (1..=64).collect();
        let zero = Trajectory::new("Q", 0, cps.clone(), vec![0.0; 64]).unwrap();
        let d = dyadic_max_diagnostic(&zero, 0.0);
        assert_eq!(d.blocks.iter().map(|b| b.l).collect::<Vec<_>>(), vec![5, 6]);
        assert!(d.blocks.iter().all(|b| b.max == 0.0));
        // l = 7 holds only n = 64: a single point, skipped.
        assert!(d.skipped.contains(&7));
        assert!(d.skipped.contains(&1) && d.skipped.contains(&4));
    }
}
