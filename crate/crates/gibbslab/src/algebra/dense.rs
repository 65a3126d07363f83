//! Dense kernels on row-major complex matrices.
//!
//! LAPACK sees a row-major buffer as the transpose of the matrix. For a
//! Hermitian input that is the complex conjugate, so eigenvectors come back
//! conjugated; for SVD the roles of U and Vᴴ swap.

use lapack_sys::__BindgenComplex as LapackComplex;
use ndarray::{Array1, Array2, ShapeBuilder};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Mat = Array2<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> Mat {
    Array2::from_diag_elem(n, ONE)
}

pub fn adjoint(m: &Mat) -> Mat {
    m.t().mapv(|z| z.conj())
}

pub fn trace(m: &Mat) -> C64 {
    m.diag().sum()
}

pub fn frobenius(m: &Mat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// ‖A − A†‖_F / ‖A‖_F, zero for the zero matrix.
pub fn hermitian_deviation(m: &Mat) -> f64 {
    let n = m.nrows();
    let mut diff = 0.0;
    let mut norm = 0.0;
    for i in 0..n {
        for j in 0..n {
            let a = m[[i, j]];
            norm += a.norm_sqr();
            diff += (a - m[[j, i]].conj()).norm_sqr();
        }
    }
    if norm == 0.0 {
        0.0
    } else {
        (diff / norm).sqrt()
    }
}

pub fn hermitize(m: &Mat) -> Mat {
    (m + &adjoint(m)) * c(0.5, 0.0)
}

pub fn is_real(m: &Mat) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

pub fn kron(a: &Mat, b: &Mat) -> Mat {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Mat::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let x = a[[i, j]];
            if x == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[[i * br + k, j * bc + l]] = x * b[[k, l]];
                }
            }
        }
    }
    out
}

fn check_square(m: &Mat) -> Result<usize> {
    let (r, c) = m.dim();
    if r != c {
        return Err(Error::Shape(format!(
            "expected a square matrix, got {r}x{c}"
        )));
    }
    Ok(r)
}

fn lapack_int(n: usize) -> Result<i32> {
    i32::try_from(n).map_err(|_| Error::Shape(format!("dimension {n} too large for LAPACK")))
}

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns) of a
/// Hermitian matrix. Only the lower triangle is read.
pub fn eigh(m: &Mat) -> Result<(Array1<f64>, Mat)> {
    let n = check_square(m)?;
    if n == 0 {
        return Ok((Array1::zeros(0), Mat::zeros((0, 0))));
    }
    if is_real(m) {
        let buf: Vec<f64> = m.iter().map(|z| z.re).collect();
        let (w, z) = dsyevd(n, buf, true)?;
        let v = Array2::from_shape_vec((n, n).f(), z)
            .expect("shape")
            .mapv(|x| C64::new(x, 0.0));
        return Ok((Array1::from(w), v));
    }
    let buf: Vec<C64> = m.iter().copied().collect();
    let (w, z) = zheevd(n, buf, true)?;
    let v = Array2::from_shape_vec((n, n).f(), z)
        .expect("shape")
        .mapv(|x| x.conj());
    Ok((Array1::from(w), v))
}

/// Real symmetric eigensolver. Only the lower triangle is read.
pub fn eigh_real(m: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let (n, k) = m.dim();
    if n != k {
        return Err(Error::Shape(format!(
            "expected a square matrix, got {n}x{k}"
        )));
    }
    if n == 0 {
        return Ok((Array1::zeros(0), Array2::zeros((0, 0))));
    }
    let buf: Vec<f64> = m.iter().copied().collect();
    let (w, z) = dsyevd(n, buf, true)?;
    Ok((
        Array1::from(w),
        Array2::from_shape_vec((n, n).f(), z).expect("shape"),
    ))
}

pub fn eigvalsh(m: &Mat) -> Result<Array1<f64>> {
    let n = check_square(m)?;
    if n == 0 {
        return Ok(Array1::zeros(0));
    }
    if is_real(m) {
        let buf: Vec<f64> = m.iter().map(|z| z.re).collect();
        return Ok(Array1::from(dsyevd(n, buf, false)?.0));
    }
    let buf: Vec<C64> = m.iter().copied().collect();
    Ok(Array1::from(zheevd(n, buf, false)?.0))
}

fn zheevd(n: usize, mut a: Vec<C64>, vectors: bool) -> Result<(Vec<f64>, Vec<C64>)> {
    let ni = lapack_int(n)?;
    let jobz = if vectors { b'V' } else { b'N' };
    let uplo = b'U'; // upper of the transpose is the lower of the matrix
    let mut w = vec![0.0; n];
    let mut info = 0;
    let mut wq = LapackComplex { re: 0.0, im: 0.0 };
    let mut rq = 0.0;
    let mut iq = 0;
    unsafe {
        lapack_sys::zheevd_(
            &(jobz as _),
            &(uplo as _),
            &ni,
            a.as_mut_ptr() as *mut LapackComplex<f64>,
            &ni,
            w.as_mut_ptr(),
            &mut wq,
            &-1,
            &mut rq,
            &-1,
            &mut iq,
            &-1,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack {
            routine: "zheevd",
            info,
        });
    }
    let lw = wq.re as i32;
    let lr = rq as i32;
    let li = iq;
    let mut work = vec![LapackComplex { re: 0.0, im: 0.0 }; lw.max(1) as usize];
    let mut rwork = vec![0.0; lr.max(1) as usize];
    let mut iwork = vec![0; li.max(1) as usize];
    unsafe {
        lapack_sys::zheevd_(
            &(jobz as _),
            &(uplo as _),
            &ni,
            a.as_mut_ptr() as *mut LapackComplex<f64>,
            &ni,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lw,
            rwork.as_mut_ptr(),
            &lr,
            iwork.as_mut_ptr(),
            &li,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack {
            routine: "zheevd",
            info,
        });
    }
    Ok((w, a))
}

fn dsyevd(n: usize, mut a: Vec<f64>, vectors: bool) -> Result<(Vec<f64>, Vec<f64>)> {
    let ni = lapack_int(n)?;
    let jobz = if vectors { b'V' } else { b'N' };
    let uplo = b'U';
    let mut w = vec![0.0; n];
    let mut info = 0;
    let mut wq = 0.0;
    let mut iq = 0;
    unsafe {
        lapack_sys::dsyevd_(
            &(jobz as _),
            &(uplo as _),
            &ni,
            a.as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            &mut wq,
            &-1,
            &mut iq,
            &-1,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack {
            routine: "dsyevd",
            info,
        });
    }
    let lw = wq as i32;
    let li = iq;
    let mut work = vec![0.0; lw.max(1) as usize];
    let mut iwork = vec![0; li.max(1) as usize];
    unsafe {
        lapack_sys::dsyevd_(
            &(jobz as _),
            &(uplo as _),
            &ni,
            a.as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lw,
            iwork.as_mut_ptr(),
            &li,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack {
            routine: "dsyevd",
            info,
        });
    }
    Ok((w, a))
}

/// Singular value decomposition of a square matrix: `m = u · diag(s) · vh`,
/// singular values descending.
pub fn svd(m: &Mat) -> Result<(Mat, Array1<f64>, Mat)> {
    let n = check_square(m)?;
    if n == 0 {
        return Ok((Mat::zeros((0, 0)), Array1::zeros(0), Mat::zeros((0, 0))));
    }
    let (s, u_buf, vt_buf) = zgesdd(n, m.iter().copied().collect(), true)?;
    // The buffers hold the SVD of the transpose; read back row-major.
    let u = Array2::from_shape_vec((n, n), vt_buf).expect("shape");
    let vh = Array2::from_shape_vec((n, n), u_buf).expect("shape");
    Ok((u, Array1::from(s), vh))
}

pub fn singular_values(m: &Mat) -> Result<Array1<f64>> {
    let n = check_square(m)?;
    if n == 0 {
        return Ok(Array1::zeros(0));
    }
    Ok(Array1::from(
        zgesdd(n, m.iter().copied().collect(), false)?.0,
    ))
}

fn zgesdd(n: usize, mut a: Vec<C64>, vectors: bool) -> Result<(Vec<f64>, Vec<C64>, Vec<C64>)> {
    let ni = lapack_int(n)?;
    let jobz = if vectors { b'A' } else { b'N' };
    let ldu = if vectors { n } else { 1 };
    let mut s = vec![0.0; n];
    let mut u = vec![ZERO; ldu * ldu];
    let mut vt = vec![ZERO; ldu * ldu];
    let ldu_i = lapack_int(ldu)?;
    let lrwork = if vectors { n * (5 * n + 7) } else { 7 * n };
    let mut rwork = vec![0.0; lrwork.max(1)];
    let mut iwork = vec![0; 8 * n];
    let mut info = 0;
    let mut wq = LapackComplex { re: 0.0, im: 0.0 };
    unsafe {
        lapack_sys::zgesdd_(
            &(jobz as _),
            &ni,
            &ni,
            a.as_mut_ptr() as *mut LapackComplex<f64>,
            &ni,
            s.as_mut_ptr(),
            u.as_mut_ptr() as *mut LapackComplex<f64>,
            &ldu_i,
            vt.as_mut_ptr() as *mut LapackComplex<f64>,
            &ldu_i,
            &mut wq,
            &-1,
            rwork.as_mut_ptr(),
            iwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack {
            routine: "zgesdd",
            info,
        });
    }
    let lw = wq.re as i32;
    let mut work = vec![LapackComplex { re: 0.0, im: 0.0 }; lw.max(1) as usize];
    unsafe {
        lapack_sys::zgesdd_(
            &(jobz as _),
            &ni,
            &ni,
            a.as_mut_ptr() as *mut LapackComplex<f64>,
            &ni,
            s.as_mut_ptr(),
            u.as_mut_ptr() as *mut LapackComplex<f64>,
            &ldu_i,
            vt.as_mut_ptr() as *mut LapackComplex<f64>,
            &ldu_i,
            work.as_mut_ptr(),
            &lw,
            rwork.as_mut_ptr(),
            iwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack {
            routine: "zgesdd",
            info,
        });
    }
    Ok((s, u, vt))
}

/// Unitary factor W of the polar decomposition m = W·P.
pub fn polar_unitary(m: &Mat) -> Result<Mat> {
    let (u, _, vh) = svd(m)?;
    Ok(u.dot(&vh))
}

/// Largest singular value. Hermitian and anti-Hermitian inputs go through
/// the cheaper eigenvalue route.
pub fn op_norm(m: &Mat) -> Result<f64> {
    check_square(m)?;
    if m.is_empty() {
        return Ok(0.0);
    }
    if hermitian_deviation(m) <= 1e-13 {
        let w = eigvalsh(&hermitize(m))?;
        return Ok(w.iter().fold(0.0_f64, |a, &x| a.max(x.abs())));
    }
    let im = m.mapv(|z| z * c(0.0, 1.0));
    if hermitian_deviation(&im) <= 1e-13 {
        let w = eigvalsh(&hermitize(&im))?;
        return Ok(w.iter().fold(0.0_f64, |a, &x| a.max(x.abs())));
    }
    Ok(singular_values(m)?.iter().fold(0.0_f64, |a, &x| a.max(x)))
}

/// Sum of singular values.
pub fn trace_norm(m: &Mat) -> Result<f64> {
    check_square(m)?;
    if m.is_empty() {
        return Ok(0.0);
    }
    if hermitian_deviation(m) <= 1e-13 {
        let w = eigvalsh(&hermitize(m))?;
        return Ok(w.iter().map(|x| x.abs()).sum());
    }
    Ok(singular_values(m)?.sum())
}

/// U · diag(f(λ)) · U†.
pub fn spectral_apply(values: &Array1<f64>, vectors: &Mat, f: impl Fn(f64) -> C64) -> Mat {
    let fv: Vec<C64> = values.iter().map(|&x| f(x)).collect();
    if fv.iter().all(|z| z.im == 0.0) && is_real(vectors) {
        // real gemm is four times cheaper
        let u = vectors.mapv(|z| z.re);
        let mut scaled = u.clone();
        for (j, z) in fv.iter().enumerate() {
            scaled.column_mut(j).mapv_inplace(|x| x * z.re);
        }
        return scaled.dot(&u.t()).mapv(|x| C64::new(x, 0.0));
    }
    let mut scaled = vectors.clone();
    for (j, &fj) in fv.iter().enumerate() {
        scaled.column_mut(j).mapv_inplace(|z| z * fj);
    }
    scaled.dot(&adjoint(vectors))
}

/// exp(A) by scaling and squaring of a truncated Taylor series; used only
/// for non-normal input.
pub fn expm_general(a: &Mat) -> Mat {
    let n = a.nrows();
    let norm1 = (0..n)
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let s = if norm1 > 0.5 {
        (norm1 / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let b = a * c(0.5_f64.powi(s), 0.0);
    let mut sum = identity(n);
    let mut term = identity(n);
    for k in 1..40 {
        term = term.dot(&b) * c(1.0 / k as f64, 0.0);
        sum += &term;
        if frobenius(&term) <= 1e-18 * frobenius(&sum) {
            break;
        }
    }
    for _ in 0..s {
        sum = sum.dot(&sum);
    }
    sum
}
