use nalgebra::{DMatrix, SymmetricEigen};

use super::{midpoints, HoeffdingParts, Marginal};
use crate::error::{require_len, Error, Result};

/// Eigenvalues (descending) of the integral operator with kernel `h2` under
/// the uniform marginal, by Nyström discretization on the `grid` midpoints of
/// `[0,1]` with weights `1/grid`.
pub fn kernel_spectrum(parts: &HoeffdingParts, grid: usize) -> Result<Vec<f64>> {
    require_len("Nystrom grid", 8, grid)?;
    if parts.marginal() != Marginal::Uniform01.to_string() {
        return Err(Error::Unsupported {
            kernel: parts.kernel().name().to_string(),
            marginal: parts.marginal().to_string(),
        });
    }
    let nodes: Vec<f64> = midpoints(grid).collect();
    let w = 1.0 / grid as f64;
    let a = DMatrix::from_fn(grid, grid, |i, j| parts.h2(nodes[i], nodes[j]) * w);
    let mut defect = 0.0f64;
    for i in 0..grid {
        for j in 0..i {
            defect = defect.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    if defect > 1e-9 {
        return Err(Error::Asymmetric(defect));
    }
    let mut eig: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
    eig.sort_by(|x, y| y.total_cmp(x));
    Ok(eig)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{analytic_parts, Kernel, KernelId};
    use std::f64::consts::PI;

    #[test]
    fn cvm_leading_eigenvalues() {
        let p = analytic_parts(KernelId::Cvm, Marginal::Uniform01).unwrap();
        let eig = kernel_spectrum(&p, 512).unwrap();
        for (k, &lambda) in eig.iter().take(4).enumerate() {
            let want = 1.0 / ((k + 1) as f64 * PI).powi(2);
            assert!((lambda - want).abs() < 1e-3, "k={k}: {lambda} vs {want}");
        }
        assert!(eig.iter().all(|&v| v >= -1e-10));
        // trace = ∫ h2(x,x) dx = 1/6
        let sum: f64 = eig.iter().sum();
        assert!((sum - 1.0 / 6.0).abs() < 1e-3);
    }

    #[test]
    fn zero_kernel_spectrum() {
        let p = Kernel::constant(0.0)
            .analytic_parts(Marginal::Uniform01)
            .unwrap();
        assert!(kernel_spectrum(&p, 16).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn asymmetric_discretization_rejected() {
        let p = Kernel::constant(0.0)
            .analytic_parts(Marginal::Uniform01)
            .unwrap()
            .with_h2(|x, y| x - y);
        assert!(matches!(kernel_spectrum(&p, 16), Err(Error::Asymmetric(_))));
        assert!(kernel_spectrum(&p, 4).is_err());
    }
}
