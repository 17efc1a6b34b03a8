//! Dense complex products routed through real `f64` GEMM.
//!
//! nalgebra multiplies `f64` matrices with a blocked SIMD kernel but falls back
//! to a generic loop for `Complex<f64>`. Splitting into real and imaginary
//! planes keeps the 512² grid products well under a second.

use nalgebra::DMatrix;
use num_complex::Complex64;

fn split(m: &DMatrix<Complex64>) -> (DMatrix<f64>, DMatrix<f64>) {
    (m.map(|z| z.re), m.map(|z| z.im))
}

fn join(re: DMatrix<f64>, im: DMatrix<f64>) -> DMatrix<Complex64> {
    re.zip_map(&im, Complex64::new)
}

/// `a * b`
pub fn mul(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    assert_eq!(a.ncols(), b.nrows(), "inner dimensions must agree");
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    join(re, im)
}

/// `a^† * b`
pub fn adjoint_mul(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    assert_eq!(a.nrows(), b.nrows(), "row counts must agree");
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    let (art, ait) = (ar.transpose(), ai.transpose());
    let re = &art * &br + &ait * &bi;
    let im = &art * &bi - &ait * &br;
    join(re, im)
}
