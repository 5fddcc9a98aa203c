//! Small numeric helpers shared across modules.

use nalgebra::{Complex, DMatrix};

/// Neumaier compensated summation.
pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if libm::fabs(sum) >= libm::fabs(v) {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Modulus of a complex number.
pub(crate) fn cabs(z: Complex<f64>) -> f64 {
    libm::hypot(z.re, z.im)
}

type CMatrix = DMatrix<Complex<f64>>;

/// Complex Schur form `A = U T Uᴴ` of a real matrix, returned as `(U, T)`.
///
/// nalgebra's QR iteration has no exceptional shifts and can stall when the
/// deflation tolerance sits at the rounding floor, so a short ladder of
/// tolerances is tried, each with a modest iteration budget.
pub(crate) fn complex_schur(a: &DMatrix<f64>) -> crate::error::Result<(CMatrix, CMatrix)> {
    let ac = a.map(|x| Complex::new(x, 0.0));
    let budget = 100 * a.nrows().max(4);
    [1e-14, 1e-12, 1e-10]
        .iter()
        .find_map(|&eps| nalgebra::Schur::try_new(ac.clone(), eps, budget))
        .map(|s| s.unpack())
        .ok_or(crate::error::Error::Numerical("Schur decomposition did not converge"))
}
