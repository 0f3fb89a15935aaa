//! Thin FFI bindings to the system BLAS/LAPACK (OpenBLAS).
//!
//! Row-major `ndarray` data is handed to the Fortran routines either via the
//! usual transpose-swap trick (gemm/gemv, no copies) or via an explicit
//! transposed copy (eigensolvers, O(n²) against an O(n³) solve).
//!
//! Conventions for the wrappers:
//! - `eigh_*` return eigenvalues ascending and a matrix whose **columns** are
//!   the corresponding orthonormal eigenvectors.
//! - `eig_complex` is for small general matrices (symmetry blocks, loop
//!   operators projected into a ground space).

use ndarray::prelude::*;
use num_complex::Complex64;
use std::os::raw::c_char;

#[allow(clippy::too_many_arguments)]
extern "C" {
    fn dsyevd_(
        jobz: *const c_char,
        uplo: *const c_char,
        n: *const i32,
        a: *mut f64,
        lda: *const i32,
        w: *mut f64,
        work: *mut f64,
        lwork: *const i32,
        iwork: *mut i32,
        liwork: *const i32,
        info: *mut i32,
    );
    fn zheevd_(
        jobz: *const c_char,
        uplo: *const c_char,
        n: *const i32,
        a: *mut Complex64,
        lda: *const i32,
        w: *mut f64,
        work: *mut Complex64,
        lwork: *const i32,
        rwork: *mut f64,
        lrwork: *const i32,
        iwork: *mut i32,
        liwork: *const i32,
        info: *mut i32,
    );
    fn zgeev_(
        jobvl: *const c_char,
        jobvr: *const c_char,
        n: *const i32,
        a: *mut Complex64,
        lda: *const i32,
        w: *mut Complex64,
        vl: *mut Complex64,
        ldvl: *const i32,
        vr: *mut Complex64,
        ldvr: *const i32,
        work: *mut Complex64,
        lwork: *const i32,
        rwork: *mut f64,
        info: *mut i32,
    );
    fn dgemm_(
        transa: *const c_char,
        transb: *const c_char,
        m: *const i32,
        n: *const i32,
        k: *const i32,
        alpha: *const f64,
        a: *const f64,
        lda: *const i32,
        b: *const f64,
        ldb: *const i32,
        beta: *const f64,
        c: *mut f64,
        ldc: *const i32,
    );
    fn zgemm_(
        transa: *const c_char,
        transb: *const c_char,
        m: *const i32,
        n: *const i32,
        k: *const i32,
        alpha: *const Complex64,
        a: *const Complex64,
        lda: *const i32,
        b: *const Complex64,
        ldb: *const i32,
        beta: *const Complex64,
        c: *mut Complex64,
        ldc: *const i32,
    );
    fn dgemv_(
        trans: *const c_char,
        m: *const i32,
        n: *const i32,
        alpha: *const f64,
        a: *const f64,
        lda: *const i32,
        x: *const f64,
        incx: *const i32,
        beta: *const f64,
        y: *mut f64,
        incy: *const i32,
    );
    fn zgemv_(
        trans: *const c_char,
        m: *const i32,
        n: *const i32,
        alpha: *const Complex64,
        a: *const Complex64,
        lda: *const i32,
        x: *const Complex64,
        incx: *const i32,
        beta: *const Complex64,
        y: *mut Complex64,
        incy: *const i32,
    );
}

const JOB_V: c_char = b'V' as c_char;
const JOB_N: c_char = b'N' as c_char;
const UPLO_L: c_char = b'L' as c_char;
const TRANS_N: c_char = b'N' as c_char;
const TRANS_T: c_char = b'T' as c_char;

fn as_slice<'a, T>(a: &ArrayView2<'a, T>) -> &'a [T] {
    a.to_slice()
        .expect("matrix must be contiguous standard-layout")
}

/// Eigendecomposition of a real symmetric matrix (LAPACK dsyevd).
pub fn eigh_real(a: &ArrayView2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "eigh_real: square matrix required");
    // Symmetric input: the row-major buffer doubles as the Fortran image.
    let mut buf: Vec<f64> = as_slice(a).to_vec();
    let mut w = vec![0f64; n];
    let ni = n as i32;
    let mut info = 0i32;

    let (mut wkopt, mut iwkopt) = (0f64, 0i32);
    let query = -1i32;
    unsafe {
        dsyevd_(
            &JOB_V, &UPLO_L, &ni, buf.as_mut_ptr(), &ni, w.as_mut_ptr(), &mut wkopt, &query,
            &mut iwkopt, &query, &mut info,
        );
    }
    let lwork = wkopt as i32;
    let liwork = iwkopt;
    let mut work = vec![0f64; lwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    unsafe {
        dsyevd_(
            &JOB_V, &UPLO_L, &ni, buf.as_mut_ptr(), &ni, w.as_mut_ptr(), work.as_mut_ptr(),
            &lwork, iwork.as_mut_ptr(), &liwork, &mut info,
        );
    }
    assert_eq!(info, 0, "dsyevd failed with info={info}");

    // Column-major output: buf[j*n + i] = v_j[i]; repack with columns = vectors.
    let mut vecs = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        for i in 0..n {
            vecs[[i, j]] = buf[j * n + i];
        }
    }
    (w, vecs)
}

/// Eigendecomposition of a complex Hermitian matrix (LAPACK zheevd).
pub fn eigh_complex(a: &ArrayView2<Complex64>) -> (Vec<f64>, Array2<Complex64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "eigh_complex: square matrix required");
    // Transposed copy so the Fortran routine sees exactly `a`.
    let mut buf = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            buf[j * n + i] = a[[i, j]];
        }
    }
    let mut w = vec![0f64; n];
    let ni = n as i32;
    let mut info = 0i32;

    let mut wkopt = Complex64::new(0.0, 0.0);
    let (mut rwkopt, mut iwkopt) = (0f64, 0i32);
    let query = -1i32;
    unsafe {
        zheevd_(
            &JOB_V, &UPLO_L, &ni, buf.as_mut_ptr(), &ni, w.as_mut_ptr(), &mut wkopt, &query,
            &mut rwkopt, &query, &mut iwkopt, &query, &mut info,
        );
    }
    let lwork = wkopt.re as i32;
    let lrwork = rwkopt as i32;
    let liwork = iwkopt;
    let mut work = vec![Complex64::new(0.0, 0.0); lwork.max(1) as usize];
    let mut rwork = vec![0f64; lrwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    unsafe {
        zheevd_(
            &JOB_V, &UPLO_L, &ni, buf.as_mut_ptr(), &ni, w.as_mut_ptr(), work.as_mut_ptr(),
            &lwork, rwork.as_mut_ptr(), &lrwork, iwork.as_mut_ptr(), &liwork, &mut info,
        );
    }
    assert_eq!(info, 0, "zheevd failed with info={info}");

    let mut vecs = Array2::<Complex64>::zeros((n, n));
    for j in 0..n {
        for i in 0..n {
            vecs[[i, j]] = buf[j * n + i];
        }
    }
    (w, vecs)
}

/// Right eigenpairs of a small general complex matrix (LAPACK zgeev).
///
/// Used on k×k ground-space blocks (k ≤ a few), not on full Hilbert spaces.
pub fn eig_complex(a: &ArrayView2<Complex64>) -> (Vec<Complex64>, Array2<Complex64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "eig_complex: square matrix required");
    let mut buf = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            buf[j * n + i] = a[[i, j]];
        }
    }
    let ni = n as i32;
    let mut w = vec![Complex64::new(0.0, 0.0); n];
    let mut vr = vec![Complex64::new(0.0, 0.0); n * n];
    let mut vl = [Complex64::new(0.0, 0.0)];
    let one = 1i32;
    let mut rwork = vec![0f64; 2 * n];
    let mut info = 0i32;

    let mut wkopt = Complex64::new(0.0, 0.0);
    let query = -1i32;
    unsafe {
        zgeev_(
            &JOB_N, &JOB_V, &ni, buf.as_mut_ptr(), &ni, w.as_mut_ptr(), vl.as_mut_ptr(), &one,
            vr.as_mut_ptr(), &ni, &mut wkopt, &query, rwork.as_mut_ptr(), &mut info,
        );
    }
    let lwork = wkopt.re as i32;
    let mut work = vec![Complex64::new(0.0, 0.0); lwork.max(1) as usize];
    unsafe {
        zgeev_(
            &JOB_N, &JOB_V, &ni, buf.as_mut_ptr(), &ni, w.as_mut_ptr(), vl.as_mut_ptr(), &one,
            vr.as_mut_ptr(), &ni, work.as_mut_ptr(), &lwork, rwork.as_mut_ptr(), &mut info,
        );
    }
    assert_eq!(info, 0, "zgeev failed with info={info}");

    let mut vecs = Array2::<Complex64>::zeros((n, n));
    for j in 0..n {
        for i in 0..n {
            vecs[[i, j]] = vr[j * n + i];
        }
    }
    (w, vecs)
}

/// Dense complex matrix product C = A·B (BLAS zgemm).
pub fn gemm(a: &ArrayView2<Complex64>, b: &ArrayView2<Complex64>) -> Array2<Complex64> {
    let (r, k) = (a.nrows(), a.ncols());
    let (k2, c) = (b.nrows(), b.ncols());
    assert_eq!(k, k2, "gemm: inner dimensions mismatch");
    let mut out = vec![Complex64::new(0.0, 0.0); r * c];
    let alpha = Complex64::new(1.0, 0.0);
    let beta = Complex64::new(0.0, 0.0);
    // Row-major trick: C^T = B^T · A^T in Fortran's column-major view.
    let (mi, nni, ki) = (c as i32, r as i32, k as i32);
    unsafe {
        zgemm_(
            &TRANS_N,
            &TRANS_N,
            &mi,
            &nni,
            &ki,
            &alpha,
            as_slice(b).as_ptr(),
            &mi,
            as_slice(a).as_ptr(),
            &ki,
            &beta,
            out.as_mut_ptr(),
            &mi,
        );
    }
    Array2::from_shape_vec((r, c), out).unwrap()
}

/// Dense real matrix product C = A·B (BLAS dgemm).
pub fn gemm_real(a: &ArrayView2<f64>, b: &ArrayView2<f64>) -> Array2<f64> {
    let (r, k) = (a.nrows(), a.ncols());
    let (k2, c) = (b.nrows(), b.ncols());
    assert_eq!(k, k2, "gemm_real: inner dimensions mismatch");
    let mut out = vec![0f64; r * c];
    let (alpha, beta) = (1f64, 0f64);
    let (mi, nni, ki) = (c as i32, r as i32, k as i32);
    unsafe {
        dgemm_(
            &TRANS_N,
            &TRANS_N,
            &mi,
            &nni,
            &ki,
            &alpha,
            as_slice(b).as_ptr(),
            &mi,
            as_slice(a).as_ptr(),
            &ki,
            &beta,
            out.as_mut_ptr(),
            &mi,
        );
    }
    Array2::from_shape_vec((r, c), out).unwrap()
}

/// y = A·x or Aᵀ·x for real A (BLAS dgemv).
pub fn gemv_real(a: &ArrayView2<f64>, x: &[f64], transpose: bool) -> Vec<f64> {
    let (r, c) = (a.nrows(), a.ncols());
    let (mi, nni) = (c as i32, r as i32);
    let (alpha, beta) = (1f64, 0f64);
    let one = 1i32;
    let out_len = if transpose { c } else { r };
    assert_eq!(x.len(), if transpose { r } else { c });
    let mut y = vec![0f64; out_len];
    // Fortran sees the row-major buffer as Aᵀ, so the flags swap.
    let t = if transpose { TRANS_N } else { TRANS_T };
    unsafe {
        dgemv_(
            &t,
            &mi,
            &nni,
            &alpha,
            as_slice(a).as_ptr(),
            &mi,
            x.as_ptr(),
            &one,
            &beta,
            y.as_mut_ptr(),
            &one,
        );
    }
    y
}

/// y = A·x or Aᵀ·x for complex A (BLAS zgemv; note: plain transpose, no conjugation).
pub fn gemv_complex(a: &ArrayView2<Complex64>, x: &[Complex64], transpose: bool) -> Vec<Complex64> {
    let (r, c) = (a.nrows(), a.ncols());
    let (mi, nni) = (c as i32, r as i32);
    let alpha = Complex64::new(1.0, 0.0);
    let beta = Complex64::new(0.0, 0.0);
    let one = 1i32;
    let out_len = if transpose { c } else { r };
    assert_eq!(x.len(), if transpose { r } else { c });
    let mut y = vec![Complex64::new(0.0, 0.0); out_len];
    let t = if transpose { TRANS_N } else { TRANS_T };
    unsafe {
        zgemv_(
            &t,
            &mi,
            &nni,
            &alpha,
            as_slice(a).as_ptr(),
            &mi,
            x.as_ptr(),
            &one,
            &beta,
            y.as_mut_ptr(),
            &one,
        );
    }
    y
}

/// Complex vector through a real matrix: two dgemv calls on the parts.
pub fn gemv_real_cplx(a: &ArrayView2<f64>, x: &[Complex64], transpose: bool) -> Vec<Complex64> {
    let xre: Vec<f64> = x.iter().map(|z| z.re).collect();
    let xim: Vec<f64> = x.iter().map(|z| z.im).collect();
    let yre = gemv_real(a, &xre, transpose);
    let yim = gemv_real(a, &xim, transpose);
    yre.into_iter()
        .zip(yim)
        .map(|(re, im)| Complex64::new(re, im))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn test_eigh_real_2x2() {
        let a = array![[2.0, 1.0], [1.0, 2.0]];
        let (w, v) = eigh_real(&a.view());
        assert!((w[0] - 1.0).abs() < 1e-12);
        assert!((w[1] - 3.0).abs() < 1e-12);
        // A v = w v for each column.
        for j in 0..2 {
            let col = v.column(j);
            let av = a.dot(&col);
            for i in 0..2 {
                assert!((av[i] - w[j] * col[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn test_eigh_complex_pauli_y() {
        // σ_y has eigenvalues ±1.
        let a = array![[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]];
        let (w, v) = eigh_complex(&a.view());
        assert!((w[0] + 1.0).abs() < 1e-12);
        assert!((w[1] - 1.0).abs() < 1e-12);
        for j in 0..2 {
            let col = v.column(j);
            let av = a.dot(&col);
            for i in 0..2 {
                assert!((av[i] - w[j] * col[i]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn test_eig_complex_rotation() {
        // A 2D rotation by π/2 has eigenvalues ±i.
        let a = array![[c(0.0, 0.0), c(-1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]];
        let (w, v) = eig_complex(&a.view());
        let mut ims: Vec<f64> = w.iter().map(|z| z.im).collect();
        ims.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert!((ims[0] + 1.0).abs() < 1e-12 && (ims[1] - 1.0).abs() < 1e-12);
        for j in 0..2 {
            let col = v.column(j);
            let av = a.dot(&col);
            for i in 0..2 {
                assert!((av[i] - w[j] * col[i]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn test_gemm_matches_naive() {
        let a = array![
            [c(1.0, 2.0), c(0.0, -1.0), c(3.0, 0.0)],
            [c(0.5, 0.0), c(2.0, 2.0), c(0.0, 0.0)]
        ];
        let b = array![
            [c(1.0, 0.0), c(0.0, 1.0)],
            [c(2.0, -1.0), c(1.0, 1.0)],
            [c(0.0, 0.0), c(4.0, 0.0)]
        ];
        let fast = gemm(&a.view(), &b.view());
        let naive = a.dot(&b);
        for i in 0..2 {
            for j in 0..2 {
                assert!((fast[[i, j]] - naive[[i, j]]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn test_gemv_real_rect() {
        let a = array![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]];
        let y = gemv_real(&a.view(), &[1.0, 1.0, 1.0], false);
        assert_eq!(y, vec![6.0, 15.0]);
        let yt = gemv_real(&a.view(), &[1.0, 1.0], true);
        assert_eq!(yt, vec![5.0, 7.0, 9.0]);
    }

    #[test]
    fn test_gemv_complex_matches_dot() {
        let a = array![[c(1.0, 1.0), c(2.0, 0.0)], [c(0.0, -1.0), c(1.0, 0.0)]];
        let x = [c(1.0, 0.0), c(0.0, 1.0)];
        let y = gemv_complex(&a.view(), &x, false);
        let expect = a.dot(&arr1(&x));
        for i in 0..2 {
            assert!((y[i] - expect[i]).norm() < 1e-14);
        }
    }

    #[test]
    fn test_gemv_real_cplx_parts() {
        let a = array![[1.0, 2.0], [3.0, 4.0]];
        let x = [c(1.0, 1.0), c(0.0, -2.0)];
        let y = gemv_real_cplx(&a.view(), &x, false);
        assert!((y[0] - c(1.0, -3.0)).norm() < 1e-14);
        assert!((y[1] - c(3.0, -5.0)).norm() < 1e-14);
    }
}
