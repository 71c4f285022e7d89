//! Dense complex linear algebra helpers shared by every module.
//!
//! Factorizations (Cholesky, Hermitian eigendecomposition) are delegated to
//! LAPACK through `ndarray-linalg`; this module only adds the handful of
//! compositions the simulator needs (PSD square roots with clipping, trace of
//! products, Kronecker products, error metrics).

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis, ShapeBuilder};
use ndarray_linalg::{Eigh, FactorizeC, InverseC, SolveC, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = Array2<C64>;
pub type CVec = Array1<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Conjugate transpose.
pub fn adjoint(a: &ArrayView2<C64>) -> CMat {
    a.t().mapv(|z| z.conj())
}

pub fn eye(n: usize) -> CMat {
    Array2::eye(n)
}

pub fn trace(a: &ArrayView2<C64>) -> C64 {
    a.diag().sum()
}

/// `tr(A B)` without forming the product.
pub fn trace_product(a: &ArrayView2<C64>, b: &ArrayView2<C64>) -> C64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = ZERO;
    for (i, row) in a.outer_iter().enumerate() {
        let col = b.column(i);
        for (x, y) in row.iter().zip(col.iter()) {
            acc += x * y;
        }
    }
    acc
}

/// Largest entrywise deviation from Hermitian symmetry.
pub fn hermitian_deviation(a: &ArrayView2<C64>) -> f64 {
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[[i, j]] - a[[j, i]].conj()).norm());
        }
    }
    worst
}

/// `(A + A^H)/2`.
pub fn hermitize(a: &ArrayView2<C64>) -> CMat {
    let ah = adjoint(a);
    (a.to_owned() + ah).mapv(|z| z * 0.5)
}

pub fn frobenius_norm(a: &ArrayView2<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖est − truth‖_F / ‖truth‖_F`.
pub fn relative_frobenius_error(est: &ArrayView2<C64>, truth: &ArrayView2<C64>) -> f64 {
    let diff = est.to_owned() - truth;
    frobenius_norm(&diff.view()) / frobenius_norm(truth)
}

pub fn vec_norm_sqr(v: &ArrayView1<C64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// `a^H b`.
pub fn inner(a: &ArrayView1<C64>, b: &ArrayView1<C64>) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn kron(a: &ArrayView2<C64>, b: &ArrayView2<C64>) -> CMat {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = CMat::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            out.slice_mut(s![i * br..(i + 1) * br, j * bc..(j + 1) * bc])
                .assign(&b.mapv(|z| z * aij));
        }
    }
    out
}

/// `diag(d) A diag(d)^H` for a diagonal operator stored as its diagonal.
pub fn congruence_diag(d: &ArrayView1<C64>, a: &ArrayView2<C64>) -> CMat {
    let mut out = a.to_owned();
    for ((i, j), z) in out.indexed_iter_mut() {
        *z = d[i] * *z * d[j].conj();
    }
    out
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub fn eigh(a: &ArrayView2<C64>) -> Result<(Array1<f64>, CMat)> {
    // The LAPACK wrapper returns conjugated eigenvectors for row-major
    // complex input, so hand it a column-major copy.
    let mut owned = CMat::zeros(a.raw_dim().f());
    owned.assign(&hermitize(a));
    owned
        .eigh(UPLO::Lower)
        .map_err(|e| Error::Numerical(format!("eigendecomposition failed: {e}")))
}

pub fn min_eigenvalue(a: &ArrayView2<C64>) -> Result<f64> {
    let (vals, _) = eigh(a)?;
    Ok(vals[0])
}

/// Largest absolute eigenvalue of a Hermitian matrix.
pub fn spectral_norm_hermitian(a: &ArrayView2<C64>) -> Result<f64> {
    let (vals, _) = eigh(a)?;
    Ok(vals.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
}

/// Hermitian square root of a PSD matrix.
///
/// Negative eigenvalues no larger in magnitude than `clip_rel · λ_max` are
/// clipped to zero; anything more negative is reported as not PSD.
pub fn psd_sqrt(a: &ArrayView2<C64>, clip_rel: f64) -> Result<CMat> {
    let n = a.nrows();
    if n == 0 {
        return Ok(CMat::zeros((0, 0)));
    }
    let (vals, vecs) = eigh(a)?;
    let lmax = vals.iter().fold(0.0_f64, |m, v| m.max(*v));
    let floor = -clip_rel * lmax.max(f64::MIN_POSITIVE);
    if vals[0] < floor {
        return Err(Error::CovarianceNotPsd {
            min_eigenvalue: vals[0],
            max_eigenvalue: lmax,
        });
    }
    let mut scaled = vecs.clone();
    for (j, mut col) in scaled.axis_iter_mut(Axis(1)).enumerate() {
        let root = vals[j].max(0.0).sqrt();
        col.mapv_inplace(|z| z * root);
    }
    Ok(scaled.dot(&adjoint(&vecs.view())))
}

/// Inverse of a Hermitian positive-definite matrix via Cholesky.
pub fn hpd_inverse(a: &ArrayView2<C64>) -> Result<CMat> {
    let owned = hermitize(a);
    let inv = owned.invc().map_err(|_| Error::SingularMatrix)?;
    Ok(hermitize(&inv.view()))
}

/// Solves `A X = B` for Hermitian positive-definite `A`, one Cholesky factor
/// shared across all right-hand sides.
pub fn hpd_solve(a: &ArrayView2<C64>, b: &ArrayView2<C64>) -> Result<CMat> {
    let owned = hermitize(a);
    let factor = owned
        .factorizec(UPLO::Lower)
        .map_err(|_| Error::SingularMatrix)?;
    let mut out = CMat::zeros(b.dim());
    for (j, col) in b.axis_iter(Axis(1)).enumerate() {
        let x = factor
            .solvec(&col.to_owned())
            .map_err(|_| Error::SingularMatrix)?;
        out.column_mut(j).assign(&x);
    }
    Ok(out)
}

/// Solves a general (small) square system with partial-pivot LU.
pub fn solve_general(a: &ArrayView2<C64>, b: &ArrayView1<C64>) -> Result<CVec> {
    use ndarray_linalg::Solve;
    a.to_owned()
        .solve(&b.to_owned())
        .map_err(|_| Error::SingularMatrix)
}

/// 2-norm condition number of a general square matrix.
pub fn condition_number(a: &ArrayView2<C64>) -> Result<f64> {
    use ndarray_linalg::SVD;
    let (_, sv, _) = a
        .to_owned()
        .svd(false, false)
        .map_err(|e| Error::Numerical(format!("svd failed: {e}")))?;
    let max = sv.iter().cloned().fold(0.0_f64, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(if min == 0.0 { f64::INFINITY } else { max / min })
}

/// 2-norm condition number of a real square matrix.
pub fn condition_number_real(a: &ndarray::Array2<f64>) -> Result<f64> {
    use ndarray_linalg::SVD;
    let (_, sv, _) = a
        .svd(false, false)
        .map_err(|e| Error::Numerical(format!("svd failed: {e}")))?;
    let max = sv.iter().cloned().fold(0.0_f64, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(if min == 0.0 { f64::INFINITY } else { max / min })
}

/// Matrix product helper so call sites read left to right.
pub fn mul(a: &ArrayView2<C64>, b: &ArrayView2<C64>) -> CMat {
    a.dot(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CMat {
        ndarray::array![
            [c(2.0, 0.0), c(0.5, -0.25)],
            [c(0.5, 0.25), c(1.0, 0.0)]
        ]
    }

    #[test]
    fn trace_product_matches_explicit_product() {
        let a = sample();
        let b = ndarray::array![[c(1.0, 1.0), c(0.0, 2.0)], [c(-1.0, 0.0), c(3.0, -1.0)]];
        let explicit = trace(&a.dot(&b).view());
        assert!((trace_product(&a.view(), &b.view()) - explicit).norm() < 1e-14);
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let a = sample();
        let r = psd_sqrt(&a.view(), 1e-10).unwrap();
        let back = r.dot(&r);
        assert!(relative_frobenius_error(&back.view(), &a.view()) < 1e-12);
    }

    #[test]
    fn psd_sqrt_rejects_indefinite() {
        let a = ndarray::array![[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-0.5, 0.0)]];
        assert!(matches!(
            psd_sqrt(&a.view(), 1e-10),
            Err(Error::CovarianceNotPsd { .. })
        ));
    }

    #[test]
    fn psd_sqrt_clips_roundoff_negatives() {
        // rank-one matrix: second eigenvalue is zero up to roundoff
        let v = ndarray::array![c(1.0, 0.0), c(0.0, 1.0)];
        let mut a = CMat::zeros((2, 2));
        for i in 0..2 {
            for j in 0..2 {
                a[[i, j]] = v[i] * v[j].conj();
            }
        }
        a[[1, 1]] -= c(1e-14, 0.0);
        assert!(psd_sqrt(&a.view(), 1e-10).is_ok());
    }

    #[test]
    fn hpd_solve_and_inverse_agree() {
        let a = sample();
        let b = ndarray::array![[c(1.0, 0.0)], [c(0.0, 1.0)]];
        let x = hpd_solve(&a.view(), &b.view()).unwrap();
        let inv = hpd_inverse(&a.view()).unwrap();
        let y = inv.dot(&b);
        assert!(relative_frobenius_error(&x.view(), &y.view()) < 1e-13);
        let resid = a.dot(&x) - &b;
        assert!(frobenius_norm(&resid.view()) < 1e-12);
    }

    #[test]
    fn kron_with_identity_is_block_diagonal() {
        let a = sample();
        let k = kron(&eye(2).view(), &a.view());
        assert_eq!(k.dim(), (4, 4));
        assert_eq!(k[[2, 3]], a[[0, 1]]);
        assert_eq!(k[[0, 2]], ZERO);
    }
}
