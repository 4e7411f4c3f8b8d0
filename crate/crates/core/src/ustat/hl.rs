//! Pairwise means: the empirical U-distribution function, its generalized
//! inverse, and the Hodges-Lehmann estimator.
//!
//! Pairwise means are handled through pairwise sums `s = fl(X_i + X_j)`: since
//! halving is exact, `fl(s)/2 <= t` iff `s <= 2t`, and the order of the means
//! is the order of the sums. Counting sums below a level is a two-pointer
//! sweep over the sorted sample.

use crate::error::{domain, require_len, Result};

/// Hodges-Lehmann evaluation strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HlMethod {
    /// Materialize all `n(n-1)/2` means and sort them.
    Naive,
    /// Value bisection with `O(n)` counting, then exact selection among the
    /// few candidates left in the final bracket.
    Fast,
}

/// Sorted copy of a sample supporting `C(t) = #{i<j : (X_i + X_j)/2 <= t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseMeanQuery {
    sorted: Vec<f64>,
}

impl PairwiseMeanQuery {
    pub fn new(sample: &[f64]) -> Result<Self> {
        require_len("pairwise-mean sample", 2, sample.len())?;
        if sample.iter().any(|x| !x.is_finite()) {
            return Err(domain("pairwise-mean sample contains a non-finite value"));
        }
        let mut sorted = sample.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// `n(n-1)/2`.
    pub fn pair_total(&self) -> u64 {
        let n = self.sorted.len() as u64;
        n * (n - 1) / 2
    }

    /// `C(t)`, the number of pairwise means `<= t`.
    pub fn count_le(&self, t: f64) -> u64 {
        self.count_sums_le(2.0 * t)
    }

    /// Number of pairs with `fl(a_i + a_j) <= s`.
    fn count_sums_le(&self, s: f64) -> u64 {
        let a = &self.sorted;
        let n = a.len();
        // Partners of i are i+1 .. j-1; the bound only moves down as i grows.
        let mut j = n;
        let mut count = 0u64;
        for i in 0..n {
            while j > i + 1 && !(a[i] + a[j - 1] <= s) {
                j -= 1;
            }
            if j <= i + 1 {
                break;
            }
            count += (j - 1 - i) as u64;
        }
        count
    }

    /// The `k`-th smallest pairwise sum (1-based).
    fn select_sum(&self, k: u64) -> f64 {
        let a = &self.sorted;
        let n = a.len();
        debug_assert!(k >= 1 && k <= self.pair_total());
        // Invariant: count(lo) < k <= count(hi).
        let mut lo = (a[0] + a[1]).next_down();
        let mut hi = a[n - 2] + a[n - 1];
        let (mut c_lo, mut c_hi) = (0u64, self.pair_total());
        let cap = 2 * n as u64;
        while c_hi - c_lo > cap {
            let mut mid = lo + (hi - lo) / 2.0;
            if !mid.is_finite() {
                mid = lo / 2.0 + hi / 2.0;
            }
            if !(mid > lo && mid < hi) {
                // lo and hi are adjacent floats: every sum in (lo, hi] equals hi.
                return hi;
            }
            let c = self.count_sums_le(mid);
            if c >= k {
                hi = mid;
                c_hi = c;
            } else {
                lo = mid;
                c_lo = c;
            }
        }
        let mut candidates = Vec::with_capacity((c_hi - c_lo) as usize);
        for i in 0..n - 1 {
            let rest = &a[i + 1..];
            let start = rest.partition_point(|&y| a[i] + y <= lo);
            let end = rest.partition_point(|&y| a[i] + y <= hi);
            candidates.extend(rest[start..end].iter().map(|&y| a[i] + y));
        }
        debug_assert_eq!(candidates.len() as u64, c_hi - c_lo);
        let r = (k - c_lo - 1) as usize;
        *candidates.select_nth_unstable_by(r, f64::total_cmp).1
    }

    /// The `k`-th smallest pairwise mean (1-based), exactly.
    pub fn select_mean(&self, k: u64) -> Result<f64> {
        if k == 0 || k > self.pair_total() {
            return Err(domain(format!(
                "rank {k} outside 1..={}",
                self.pair_total()
            )));
        }
        Ok(self.select_sum(k) / 2.0)
    }

    /// Median of the pairwise means; an even count averages the two central
    /// order statistics.
    fn median_mean(&self) -> f64 {
        let total = self.pair_total();
        if total % 2 == 1 {
            self.select_sum(total / 2 + 1) / 2.0
        } else {
            let a = self.select_sum(total / 2) / 2.0;
            let b = self.select_sum(total / 2 + 1) / 2.0;
            (a + b) / 2.0
        }
    }
}

/// Hodges-Lehmann estimate: median of `(X_i + X_j)/2` over `i < j`.
///
/// With an even number of pairs the two central means are averaged. This can
/// differ by one order statistic from [`empirical_u_quantile`] at `p = 1/2`,
/// which is the rank-ceiling inverse. Both methods return identical bits.
pub fn hodges_lehmann(sample: &[f64], method: HlMethod) -> Result<f64> {
    match method {
        HlMethod::Fast => Ok(PairwiseMeanQuery::new(sample)?.median_mean()),
        HlMethod::Naive => {
            require_len("Hodges-Lehmann sample", 2, sample.len())?;
            let n = sample.len();
            let mut means = Vec::with_capacity(n * (n - 1) / 2);
            for i in 0..n {
                for j in i + 1..n {
                    means.push((sample[i] + sample[j]) / 2.0);
                }
            }
            means.sort_by(f64::total_cmp);
            let m = means.len();
            Ok(if m % 2 == 1 {
                means[m / 2]
            } else {
                (means[m / 2 - 1] + means[m / 2]) / 2.0
            })
        }
    }
}

/// `U_n(t) = C(t) / C(n, 2)`.
pub fn empirical_u_df(q: &PairwiseMeanQuery, t: f64) -> f64 {
    q.count_le(t) as f64 / q.pair_total() as f64
}

/// Generalized inverse `inf{t : U_n(t) >= p}`: the pairwise mean whose rank
/// is the smallest `k` with `k / C(n,2) >= p` (evaluated in floating point,
/// matching [`empirical_u_df`]).
pub fn empirical_u_quantile(q: &PairwiseMeanQuery, p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(domain(format!(
            "quantile level must lie in (0, 1], got {p}"
        )));
    }
    let total = q.pair_total();
    let nf = total as f64;
    let mut k = ((p * nf).ceil() as u64).clamp(1, total);
    while k > 1 && (k - 1) as f64 / nf >= p {
        k -= 1;
    }
    while k < total && (k as f64) / nf < p {
        k += 1;
    }
    q.select_mean(k)
}

/// `R_n = H_n - t0 + (U_n(t0) - U(t0)) / U'(t0)` with `H_n` the rank-ceiling
/// median `U_n^{-1}(1/2)`.
pub fn bahadur_remainder(
    q: &PairwiseMeanQuery,
    t0: f64,
    u_t0: f64,
    u_prime_t0: f64,
) -> Result<f64> {
    if !(u_prime_t0 > 0.0 && u_prime_t0.is_finite()) {
        return Err(domain(format!("U'(t0) must be positive, got {u_prime_t0}")));
    }
    let h = empirical_u_quantile(q, 0.5)?;
    Ok(h - t0 + (empirical_u_df(q, t0) - u_t0) / u_prime_t0)
}

/// `max |U_n(t0+s) - U_n(t0) - U(t0+s) + U(t0)|` over `grid` equally spaced
/// offsets `s` in `[-radius, radius]`.
pub fn local_fluctuation(
    q: &PairwiseMeanQuery,
    t0: f64,
    cdf: impl Fn(f64) -> f64,
    radius: f64,
    grid: usize,
) -> Result<f64> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(domain(format!(
            "fluctuation radius must be positive, got {radius}"
        )));
    }
    require_len("fluctuation grid", 2, grid)?;
    let base_n = empirical_u_df(q, t0);
    let base = cdf(t0);
    let step = 2.0 * radius / (grid - 1) as f64;
    Ok((0..grid)
        .map(|g| {
            let t = t0 + (-radius + g as f64 * step);
            (empirical_u_df(q, t) - base_n - cdf(t) + base).abs()
        })
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::uniform_pair_mean_cdf as triangular;

    fn q(xs: &[f64]) -> PairwiseMeanQuery {
        PairwiseMeanQuery::new(xs).unwrap()
    }

    #[test]
    fn hl_examples() {
        for m in [HlMethod::Naive, HlMethod::Fast] {
            assert_eq!(hodges_lehmann(&[1.0, 2.0, 3.0], m).unwrap(), 2.0);
            assert_eq!(hodges_lehmann(&[4.5; 7], m).unwrap(), 4.5);
            assert_eq!(hodges_lehmann(&[1.0, 2.0, 3.0, 10.0], m).unwrap(), 4.0);
            assert!(hodges_lehmann(&[1.0], m).is_err());
        }
    }

    #[test]
    fn df_examples() {
        let q2 = q(&[0.0, 1.0]);
        assert_eq!(empirical_u_df(&q2, 0.5), 1.0);
        assert_eq!(empirical_u_df(&q2, 0.4), 0.0);
        assert_eq!(empirical_u_df(&q(&[3.0, -1.0, 7.0]), f64::INFINITY), 1.0);
        assert_eq!(
            empirical_u_df(&q(&[3.0, -1.0, 7.0]), f64::NEG_INFINITY),
            0.0
        );
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(
            empirical_u_quantile(&q(&[1.0, 2.0, 3.0]), 0.5).unwrap(),
            2.0
        );
        assert_eq!(
            empirical_u_quantile(&q(&[1.0, 2.0, 3.0, 10.0]), 1.0).unwrap(),
            6.5
        );
        assert_eq!(empirical_u_quantile(&q(&[0.0, 1.0]), 0.3).unwrap(), 0.5);
        assert!(empirical_u_quantile(&q(&[0.0, 1.0]), 0.0).is_err());
        assert!(empirical_u_quantile(&q(&[0.0, 1.0]), 1.5).is_err());
    }

    #[test]
    fn bahadur_examples() {
        assert_eq!(
            bahadur_remainder(&q(&[0.0, 1.0]), 0.5, 0.5, 2.0).unwrap(),
            0.25
        );
        // H_n = t0 and U_n(t0) = U(t0): means {1.5, 2, 2.5}, U_3(2) = 2/3.
        assert_eq!(
            bahadur_remainder(&q(&[1.0, 2.0, 3.0]), 2.0, 2.0 / 3.0, 1.0).unwrap(),
            0.0
        );
        assert!(bahadur_remainder(&q(&[0.0, 1.0]), 0.5, 0.5, 0.0).is_err());
    }

    #[test]
    fn fluctuation_hand_enumeration() {
        // Offsets -0.2..0.2 step 0.1; the worst is s = -0.1:
        // |0 - 1 - U(0.4) + U(0.5)| = |-1 - 0.32 + 0.5| = 0.82.
        let v = local_fluctuation(&q(&[0.0, 1.0]), 0.5, triangular, 0.2, 5).unwrap();
        assert!((v - 0.82).abs() < 1e-12, "{v}");
    }

    #[test]
    fn fluctuation_vanishes_inside_a_gap() {
        // No pairwise mean in [0.49, 0.51] and a flat reference CDF.
        let v = local_fluctuation(&q(&[0.0, 1.0, 3.0]), 1.0, |_| 0.5, 1e-3, 9).unwrap();
        assert_eq!(v, 0.0);
        assert!(local_fluctuation(&q(&[0.0, 1.0]), 0.5, triangular, 0.0, 5).is_err());
        assert!(local_fluctuation(&q(&[0.0, 1.0]), 0.5, triangular, 0.1, 1).is_err());
    }

    #[test]
    fn heavy_ties_select_exactly() {
        let mut xs = vec![1.0; 300];
        xs.extend(std::iter::repeat_n(2.0, 200));
        for m in [HlMethod::Naive, HlMethod::Fast] {
            assert_eq!(hodges_lehmann(&xs, m).unwrap(), 1.5);
        }
        let q = q(&xs);
        assert_eq!(q.count_le(1.0), 300 * 299 / 2);
        assert_eq!(q.select_mean(q.pair_total()).unwrap(), 2.0);
    }
}
