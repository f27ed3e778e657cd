//! Dense complex linear algebra used across the crate.
//!
//! Hermitian eigenproblems go through `ndarray-linalg`; the unitary
//! eigenproblem uses LAPACK `zgees` directly because the Schur vectors of a
//! normal matrix are an orthonormal eigenbasis.

use ndarray::prelude::*;
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub(crate) const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: C64 = C64 { re: 1.0, im: 0.0 };

pub fn dagger(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

/// Largest entry modulus, the norm used for every residual in the crate.
pub fn max_abs(a: &Array2<C64>) -> f64 {
    a.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn identity(n: usize) -> Array2<C64> {
    Array2::from_diag_elem(n, ONE)
}

pub fn hermiticity_residual(a: &Array2<C64>) -> f64 {
    let n = a.nrows();
    let mut r = 0.0f64;
    for i in 0..n {
        for j in i..n {
            r = r.max((a[[i, j]] - a[[j, i]].conj()).norm());
        }
    }
    r
}

/// ‖A†A − I‖_max
pub fn unitarity_residual(a: &Array2<C64>) -> f64 {
    let p = dagger(a).dot(a);
    max_abs_diff(&p, &identity(a.nrows()))
}

pub fn commutator(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    a.dot(b) - b.dot(a)
}

pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for ((i, j), &x) in a.indexed_iter() {
        if x == ZERO {
            continue;
        }
        out.slice_mut(s![i * br..(i + 1) * br, j * bc..(j + 1) * bc])
            .assign(&b.mapv(|y| x * y));
    }
    out
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eigh(h: &Array2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    // ndarray-linalg hands a row-major buffer to LAPACK as the transpose,
    // which for complex Hermitian input is the conjugate matrix.
    let mut col_major = Array2::zeros(h.dim().f());
    col_major.assign(h);
    let (values, vectors) = col_major.eigh(UPLO::Upper).map_err(|_| Error::Lapack {
        routine: "zheev",
        info: -1,
    })?;
    Ok((values, vectors.as_standard_layout().into_owned()))
}

/// Rebuild `V · diag(phases) · V†`.
pub fn reassemble(v: &Array2<C64>, phases: &Array1<C64>) -> Array2<C64> {
    let scaled = v * &phases.view().insert_axis(Axis(0));
    scaled.dot(&dagger(v))
}

/// Complex Schur decomposition `A = Z T Z†` via LAPACK `zgees`.
///
/// Returns the diagonal of `T` and the unitary Schur vectors `Z`, plus the
/// largest strictly-upper-triangular entry of `T` (zero for an exactly normal
/// input).
pub fn schur(a: &Array2<C64>) -> Result<(Array1<C64>, Array2<C64>, f64)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "schur needs a square matrix, got {:?}",
            a.dim()
        )));
    }
    if n == 0 {
        return Ok((Array1::zeros(0), Array2::zeros((0, 0)), 0.0));
    }
    // LAPACK is column-major: the row-major buffer of Aᵀ is A in column-major.
    let mut t: Vec<C64> = a.t().iter().copied().collect();
    let nn = n as i32;
    let mut sdim = 0i32;
    let mut w = vec![ZERO; n];
    let mut vs = vec![ZERO; n * n];
    let mut rwork = vec![0.0f64; n];
    let mut info = 0i32;
    let mut work = vec![ZERO; 1];
    let jobvs = b'V' as std::os::raw::c_char;
    let sort = b'N' as std::os::raw::c_char;

    for query in [true, false] {
        let lwork: i32 = if query { -1 } else { work.len() as i32 };
        // SAFETY: all buffers are sized per the zgees contract (n×n matrices,
        // length-n eigenvalue and rwork arrays, lwork from the workspace
        // query); SELECT and BWORK are unused with SORT = 'N'.
        unsafe {
            lapack_sys::zgees_(
                &jobvs,
                &sort,
                None,
                &nn,
                t.as_mut_ptr() as *mut _,
                &nn,
                &mut sdim,
                w.as_mut_ptr() as *mut _,
                vs.as_mut_ptr() as *mut _,
                &nn,
                work.as_mut_ptr() as *mut _,
                &lwork,
                rwork.as_mut_ptr(),
                std::ptr::null_mut(),
                &mut info,
            );
        }
        if info != 0 {
            return Err(Error::Lapack {
                routine: "zgees",
                info,
            });
        }
        if query {
            work = vec![ZERO; (work[0].re as usize).max(1)];
        }
    }

    let z = Array2::from_shape_vec((n, n).f(), vs).expect("zgees output shape");
    let t = Array2::from_shape_vec((n, n).f(), t).expect("zgees output shape");
    let mut off = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            off = off.max(t[[i, j]].norm());
        }
    }
    Ok((Array1::from(w), z.as_standard_layout().to_owned(), off))
}

/// Modified Gram-Schmidt on the given columns of `v`, in place.
pub(crate) fn orthonormalize_columns(v: &mut Array2<C64>, cols: &[usize]) {
    for (a, &ca) in cols.iter().enumerate() {
        for &cb in &cols[..a] {
            let proj: C64 = v
                .column(cb)
                .iter()
                .zip(v.column(ca).iter())
                .map(|(x, y)| x.conj() * y)
                .sum();
            let colb = v.column(cb).to_owned();
            v.column_mut(ca).zip_mut_with(&colb, |y, x| *y -= proj * x);
        }
        let norm = v.column(ca).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.column_mut(ca).mapv_inplace(|z| z / norm);
    }
}
