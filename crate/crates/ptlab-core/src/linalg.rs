//! Thin FFI layer over the system LAPACK/BLAS for the few dense kernels that
//! dominate runtime: Hermitian eigendecomposition and matrix-vector products.
//!
//! All public helpers take the usual row-major `ndarray` types. LAPACK is
//! column-major, so a row-major buffer is seen as the transpose; for a
//! Hermitian matrix the transpose equals the complex conjugate, which lets us
//! diagonalize in place and conjugate the returned eigenvectors instead of
//! repacking the input.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use std::os::raw::c_char;

use crate::error::CoreError;

#[allow(clippy::too_many_arguments)]
extern "C" {
    fn zheevd_(
        jobz: *const c_char,
        uplo: *const c_char,
        n: *const i32,
        a: *mut C64,
        lda: *const i32,
        w: *mut f64,
        work: *mut C64,
        lwork: *const i32,
        rwork: *mut f64,
        lrwork: *const i32,
        iwork: *mut i32,
        liwork: *const i32,
        info: *mut i32,
    );
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
    fn zgemv_(
        trans: *const c_char,
        m: *const i32,
        n: *const i32,
        alpha: *const C64,
        a: *const C64,
        lda: *const i32,
        x: *const C64,
        incx: *const i32,
        beta: *const C64,
        y: *mut C64,
        incy: *const i32,
    );
    fn zgemm_(
        transa: *const c_char,
        transb: *const c_char,
        m: *const i32,
        n: *const i32,
        k: *const i32,
        alpha: *const C64,
        a: *const C64,
        lda: *const i32,
        b: *const C64,
        ldb: *const i32,
        beta: *const C64,
        c: *mut C64,
        ldc: *const i32,
    );
}

const ONE: C64 = C64::new(1.0, 0.0);
const ZERO: C64 = C64::new(0.0, 0.0);

fn as_contiguous(a: &Array2<C64>) -> Vec<C64> {
    match a.as_slice() {
        Some(s) => s.to_vec(),
        None => a.iter().copied().collect(),
    }
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a complex Hermitian
/// matrix via `zheevd`.
pub fn eigh(h: &Array2<C64>) -> Result<(Array1<f64>, Array2<C64>), CoreError> {
    let n = h.nrows();
    if n == 0 || h.ncols() != n {
        return Err(CoreError::DimensionMismatch {
            context: "eigh expects a square nonempty matrix".into(),
        });
    }
    let mut a = as_contiguous(h);
    let mut w = vec![0.0f64; n];
    let (jobz, uplo) = (b'V' as c_char, b'L' as c_char);
    let nn = n as i32;
    let mut info = 0i32;
    let m1 = -1i32;
    let (mut wq, mut rq, mut iq) = ([ZERO], [0.0f64], [0i32]);
    unsafe {
        zheevd_(
            &jobz, &uplo, &nn, a.as_mut_ptr(), &nn, w.as_mut_ptr(),
            wq.as_mut_ptr(), &m1, rq.as_mut_ptr(), &m1, iq.as_mut_ptr(), &m1, &mut info,
        );
    }
    if info != 0 {
        return Err(CoreError::Eigensolver { info, dim: n });
    }
    let lwork = wq[0].re.ceil() as i32;
    let lrwork = rq[0].ceil() as i32;
    let liwork = iq[0];
    let mut work = vec![ZERO; lwork.max(1) as usize];
    let mut rwork = vec![0.0f64; lrwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    unsafe {
        zheevd_(
            &jobz, &uplo, &nn, a.as_mut_ptr(), &nn, w.as_mut_ptr(),
            work.as_mut_ptr(), &lwork, rwork.as_mut_ptr(), &lrwork,
            iwork.as_mut_ptr(), &liwork, &mut info,
        );
    }
    if info != 0 {
        return Err(CoreError::Eigensolver { info, dim: n });
    }
    // Buffer holds eigenvectors of conj(h) column-major; conjugating yields
    // eigenvectors of h itself.
    let mut u = Array2::<C64>::zeros((n, n));
    for j in 0..n {
        let col = &a[j * n..(j + 1) * n];
        for i in 0..n {
            u[[i, j]] = col[i].conj();
        }
    }
    Ok((Array1::from(w), u))
}

/// Real-symmetric eigendecomposition via `dsyevd`; roughly 4x faster than the
/// complex path for matrices with no imaginary part.
pub fn eigh_real(h: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>), CoreError> {
    let n = h.nrows();
    if n == 0 || h.ncols() != n {
        return Err(CoreError::DimensionMismatch {
            context: "eigh_real expects a square nonempty matrix".into(),
        });
    }
    let mut a: Vec<f64> = match h.as_slice() {
        Some(s) => s.to_vec(),
        None => h.iter().copied().collect(),
    };
    let mut w = vec![0.0f64; n];
    let (jobz, uplo) = (b'V' as c_char, b'L' as c_char);
    let nn = n as i32;
    let mut info = 0i32;
    let m1 = -1i32;
    let (mut wq, mut iq) = ([0.0f64], [0i32]);
    unsafe {
        dsyevd_(
            &jobz, &uplo, &nn, a.as_mut_ptr(), &nn, w.as_mut_ptr(),
            wq.as_mut_ptr(), &m1, iq.as_mut_ptr(), &m1, &mut info,
        );
    }
    if info != 0 {
        return Err(CoreError::Eigensolver { info, dim: n });
    }
    let lwork = wq[0].ceil() as i32;
    let liwork = iq[0];
    let mut work = vec![0.0f64; lwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    unsafe {
        dsyevd_(
            &jobz, &uplo, &nn, a.as_mut_ptr(), &nn, w.as_mut_ptr(),
            work.as_mut_ptr(), &lwork, iwork.as_mut_ptr(), &liwork, &mut info,
        );
    }
    if info != 0 {
        return Err(CoreError::Eigensolver { info, dim: n });
    }
    // A real symmetric matrix equals its transpose, so no conjugation step.
    let mut u = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let col = &a[j * n..(j + 1) * n];
        for i in 0..n {
            u[[i, j]] = col[i];
        }
    }
    Ok((Array1::from(w), u))
}

/// y = A x for a row-major matrix A.
pub fn mat_vec(a: &Array2<C64>, x: &[C64]) -> Vec<C64> {
    let (m, n) = (a.nrows(), a.ncols());
    assert_eq!(n, x.len(), "mat_vec dimension mismatch");
    let buf = as_contiguous(a);
    let mut y = vec![ZERO; m];
    // LAPACK sees the row-major buffer as the n x m transpose; 'T' undoes it.
    let t = b'T' as c_char;
    let (mm, nn, inc) = (n as i32, m as i32, 1i32);
    unsafe {
        zgemv_(
            &t, &mm, &nn, &ONE, buf.as_ptr(), &mm, x.as_ptr(), &inc, &ZERO,
            y.as_mut_ptr(), &inc,
        );
    }
    y
}

/// y = A^dagger x for a row-major matrix A, as conj(A^T conj(x)).
pub fn mat_vec_adjoint(a: &Array2<C64>, x: &[C64]) -> Vec<C64> {
    let (m, n) = (a.nrows(), a.ncols());
    assert_eq!(m, x.len(), "mat_vec_adjoint dimension mismatch");
    let buf = as_contiguous(a);
    let xc: Vec<C64> = x.iter().map(|v| v.conj()).collect();
    let mut y = vec![ZERO; n];
    let t = b'N' as c_char;
    let (mm, nn, inc) = (n as i32, m as i32, 1i32);
    unsafe {
        zgemv_(
            &t, &mm, &nn, &ONE, buf.as_ptr(), &mm, xc.as_ptr(), &inc, &ZERO,
            y.as_mut_ptr(), &inc,
        );
    }
    for v in &mut y {
        *v = v.conj();
    }
    y
}

/// C = A B for row-major matrices.
pub fn mat_mul(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (m, k) = (a.nrows(), a.ncols());
    let (k2, n) = (b.nrows(), b.ncols());
    assert_eq!(k, k2, "mat_mul dimension mismatch");
    let abuf = as_contiguous(a);
    let bbuf = as_contiguous(b);
    let mut c = vec![ZERO; m * n];
    // (AB)^T = B^T A^T: multiply the transposed views LAPACK already sees.
    let t = b'N' as c_char;
    let (mm, nn, kk) = (n as i32, m as i32, k as i32);
    unsafe {
        zgemm_(
            &t, &t, &mm, &nn, &kk, &ONE, bbuf.as_ptr(), &mm, abuf.as_ptr(), &kk,
            &ZERO, c.as_mut_ptr(), &mm,
        );
    }
    Array2::from_shape_vec((m, n), c).expect("gemm output shape")
}

/// Gram-style product V W V^dagger where W is a real diagonal weight applied
/// to the r columns of the row-major N x r matrix V. Returns an N x N
/// Hermitian matrix.
pub fn weighted_outer(v: &Array2<C64>, weights: &[f64]) -> Array2<C64> {
    let (n, r) = (v.nrows(), v.ncols());
    assert_eq!(r, weights.len(), "weighted_outer weight count mismatch");
    let mut scaled = v.clone();
    for (j, w) in weights.iter().enumerate() {
        let s = w.sqrt();
        scaled.column_mut(j).mapv_inplace(|z| z * s);
    }
    let sbuf = as_contiguous(&scaled);
    let mut c = vec![ZERO; n * n];
    // Column-major view of the buffer is the r x N matrix V^T. With opA='C'
    // and opB='N' LAPACK forms conj(V) V^T, whose row-major reinterpretation
    // is exactly V V^dagger.
    let (ta, tb) = (b'C' as c_char, b'N' as c_char);
    let (mm, nn, kk) = (n as i32, n as i32, r as i32);
    unsafe {
        zgemm_(
            &ta, &tb, &mm, &nn, &kk, &ONE, sbuf.as_ptr(), &kk, sbuf.as_ptr(), &kk,
            &ZERO, c.as_mut_ptr(), &mm,
        );
    }
    Array2::from_shape_vec((n, n), c).expect("gemm output shape")
}

/// Largest deviation from Hermitian symmetry, max_ij |h_ij - conj(h_ji)|.
pub fn hermiticity_defect(h: &Array2<C64>) -> f64 {
    let n = h.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            let d = (h[[i, j]] - h[[j, i]].conj()).norm();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Frobenius norm.
pub fn fro_norm(h: &Array2<C64>) -> f64 {
    h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
