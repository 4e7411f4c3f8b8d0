use crate::error::{require_len, Result};
use crate::stats::CompensatedSum;

/// Bartlett-weighted long-run variance estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LongRunVariance {
    pub estimate: f64,
    pub bandwidth: usize,
    pub n: usize,
}

/// `γ̂_0 + 2 Σ_{k=1..b} (1 - k/(b+1)) γ̂_k` with mean-centred autocovariances
/// over denominator `n`. The default bandwidth is `floor(n^{1/3})`; it is
/// capped at `n - 1`.
pub fn long_run_variance(values: &[f64], bandwidth: Option<usize>) -> Result<LongRunVariance> {
    let n = values.len();
    require_len("long-run variance input", 2, n)?;
    let b = bandwidth
        .unwrap_or_else(|| (n as f64).cbrt().floor() as usize)
        .min(n - 1);
    let mean = values.iter().copied().collect::<CompensatedSum>().value() / n as f64;
    let centred: Vec<f64> = values.iter().map(|x| x - mean).collect();
    let autocov = |k: usize| {
        let s: CompensatedSum = centred[..n - k]
            .iter()
            .zip(&centred[k..])
            .map(|(a, b)| a * b)
            .collect();
        s.value() / n as f64
    };
    let mut est = autocov(0);
    for k in 1..=b {
        est += 2.0 * (1.0 - k as f64 / (b + 1) as f64) * autocov(k);
    }
    Ok(LongRunVariance {
        estimate: est.max(0.0),
        bandwidth: b,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::{generate_path, IidMarginal, ProcessModel};

    #[test]
    fn iid_normal_near_one() {
        let p = generate_path(&ProcessModel::iid(IidMarginal::StandardNormal), 100_000, 1).unwrap();
        let v = long_run_variance(&p.values, None).unwrap();
        assert_eq!(v.bandwidth, 46);
        assert!((v.estimate - 1.0).abs() < 0.1, "{}", v.estimate);
    }

    #[test]
    fn ar1_near_four() {
        let p = generate_path(&ProcessModel::ar1(0.5, 1.0).unwrap(), 100_000, 2).unwrap();
        let v = long_run_variance(&p.values, None).unwrap();
        assert!((v.estimate / 4.0 - 1.0).abs() < 0.1, "{}", v.estimate);
    }

    #[test]
    fn constant_and_zero_bandwidth() {
        assert_eq!(long_run_variance(&[2.5; 50], None).unwrap().estimate, 0.0);
        let xs = [1.0, 2.0, 4.0, 8.0];
        let plain = crate::stats::variance(&xs) * 3.0 / 4.0;
        let v = long_run_variance(&xs, Some(0)).unwrap().estimate;
        assert!((v - plain).abs() < 1e-12);
        assert!(long_run_variance(&[1.0], None).is_err());
    }
}
