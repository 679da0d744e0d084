//! Small helpers for symmetric 2x2 blocks.

use nalgebra::Matrix2;

/// Eigenvalues of a symmetric 2x2 matrix as `(min, max)`, by the closed
/// form for the characteristic polynomial.
pub fn symmetric_eigenvalues(m: &Matrix2<f64>) -> (f64, f64) {
    let mean = (m[(0, 0)] + m[(1, 1)]) / 2.0;
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let disc = (mean * mean - det).max(0.0).sqrt();
    (mean - disc, mean + disc)
}

pub fn symmetrize(m: &Matrix2<f64>) -> Matrix2<f64> {
    (m + m.transpose()) / 2.0
}

/// Largest absolute off-diagonal asymmetry.
pub fn asymmetry(m: &Matrix2<f64>) -> f64 {
    (m[(0, 1)] - m[(1, 0)]).abs()
}

pub fn frobenius(m: &Matrix2<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn eigenvalues_of_diagonal() {
        let (lo, hi) = symmetric_eigenvalues(&Matrix2::new(3.0, 0.0, 0.0, -1.0));
        assert_relative_eq!(lo, -1.0);
        assert_relative_eq!(hi, 3.0);
    }

    #[test]
    fn eigenvalues_match_nalgebra() {
        let m = Matrix2::new(2.0, 0.7, 0.7, 1.1);
        let (lo, hi) = symmetric_eigenvalues(&m);
        let sym = m.symmetric_eigenvalues();
        let (a, b) = (sym[0].min(sym[1]), sym[0].max(sym[1]));
        assert_relative_eq!(lo, a, epsilon = 1e-12);
        assert_relative_eq!(hi, b, epsilon = 1e-12);
    }
}
