//! Small dense complex-matrix helpers for the Fock-space engine.
//!
//! Operator matrices here are tiny (at most a few hundred rows), so plain
//! `ndarray` loops are fast enough and keep the dependency tree small.

use ndarray::Array2;
use num_complex::Complex64;

/// 1-norm (maximum absolute column sum) of a complex matrix.
pub fn norm_1(m: &Array2<Complex64>) -> f64 {
    let (rows, cols) = m.dim();
    let mut max = 0.0f64;
    for c in 0..cols {
        let mut sum = 0.0;
        for r in 0..rows {
            sum += m[(r, c)].norm();
        }
        max = max.max(sum);
    }
    max
}

/// Matrix exponential by scaling-and-squaring with a Taylor series.
///
/// Adequate for the well-conditioned anti-Hermitian generators built from
/// truncated mode operators; the scaled norm is kept below 0.5 so the series
/// converges to machine precision in ~20 terms.
pub fn expm(m: &Array2<Complex64>) -> Array2<Complex64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "expm requires a square matrix");

    let norm = norm_1(m);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scale = 2.0f64.powi(squarings as i32);
    let scaled = m.mapv(|v| v / scale);

    let mut result = Array2::<Complex64>::eye(n);
    let mut term = Array2::<Complex64>::eye(n);
    for k in 1..=24 {
        term = term.dot(&scaled) / Complex64::new(k as f64, 0.0);
        result = result + &term;
        if norm_1(&term) < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}

/// Maximum elementwise deviation from Hermiticity, `max |m - m^dagger|`.
pub fn hermiticity_defect(m: &Array2<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for r in 0..n {
        for c in r..n {
            let diff = (m[(r, c)] - m[(c, r)].conj()).norm();
            worst = worst.max(diff);
        }
    }
    worst
}

/// Smallest eigenvalue of a Hermitian matrix, via cyclic Jacobi rotations.
///
/// Used only in debug/test positivity checks on density operators, so an
/// O(n^3)-per-sweep method is acceptable.
pub fn min_eigenvalue_hermitian(m: &Array2<Complex64>) -> f64 {
    let n = m.nrows();
    let mut a = m.clone();
    // Jacobi sweeps on the complex Hermitian matrix.
    for _sweep in 0..30 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() < 1e-12 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.norm() < 1e-300 {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // Phase to make the pivot real, then a real Jacobi rotation.
                let phase = apq / apq.norm();
                let g = apq.norm();
                let theta = 0.5 * (2.0 * g).atan2(aqq - app);
                let c = theta.cos();
                let s = theta.sin();
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c - akq * phase.conj() * s;
                    a[(k, q)] = akq * c + akp * phase * s;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c - aqk * phase * s;
                    a[(q, k)] = aqk * c + apk * phase.conj() * s;
                }
            }
        }
    }
    (0..n).map(|i| a[(i, i)].re).fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn expm_of_zero_is_identity() {
        let z = Array2::<Complex64>::zeros((4, 4));
        let e = expm(&z);
        for r in 0..4 {
            for c in 0..4 {
                let want = if r == c { 1.0 } else { 0.0 };
                assert!((e[(r, c)] - Complex64::new(want, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn expm_matches_scalar_exponential_on_diagonal() {
        let m = array![
            [Complex64::new(0.3, 0.0), Complex64::new(0.0, 0.0)],
            [Complex64::new(0.0, 0.0), Complex64::new(0.0, -1.2)],
        ];
        let e = expm(&m);
        assert!((e[(0, 0)].re - 0.3f64.exp()).abs() < 1e-12);
        assert!((e[(1, 1)] - Complex64::from_polar(1.0, -1.2)).norm() < 1e-12);
    }

    #[test]
    fn expm_rotation_generator() {
        // exp(theta * [[0,-1],[1,0]]) is a rotation by theta.
        let theta = 0.7f64;
        let g = array![
            [Complex64::new(0.0, 0.0), Complex64::new(-theta, 0.0)],
            [Complex64::new(theta, 0.0), Complex64::new(0.0, 0.0)],
        ];
        let e = expm(&g);
        assert!((e[(0, 0)].re - theta.cos()).abs() < 1e-12);
        assert!((e[(1, 0)].re - theta.sin()).abs() < 1e-12);
    }

    #[test]
    fn min_eigenvalue_of_known_hermitian() {
        // Eigenvalues of [[2,1],[1,2]] are 1 and 3.
        let m = array![
            [Complex64::new(2.0, 0.0), Complex64::new(1.0, 0.0)],
            [Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0)],
        ];
        assert!((min_eigenvalue_hermitian(&m) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn min_eigenvalue_complex_offdiagonal() {
        // [[1, i],[-i, 1]] has eigenvalues 0 and 2.
        let m = array![
            [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)],
            [Complex64::new(0.0, -1.0), Complex64::new(1.0, 0.0)],
        ];
        assert!(min_eigenvalue_hermitian(&m).abs() < 1e-9);
    }
}
