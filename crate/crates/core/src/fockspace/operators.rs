//! Truncated mode-operator matrices and the unitaries built from them.
//!
//! Generators are assembled from truncated creation/annihilation matrices at
//! a padded cutoff, exponentiated, and then projected down to the working
//! cutoff. The projected operator is sub-unitary exactly where amplitude
//! would have escaped past the cutoff, so the trace deficit after applying
//! it is a direct measure of truncation leakage.

use ndarray::Array2;
use num_complex::Complex64;

use crate::linalg::expm;

/// Extra Fock levels used while building unitaries, trimmed after expm.
pub const CUTOFF_PAD: usize = 4;

/// Annihilation operator on a `dim`-level truncated mode.
pub fn annihilation(dim: usize) -> Array2<Complex64> {
    let mut a = Array2::<Complex64>::zeros((dim, dim));
    for n in 1..dim {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// Creation operator on a `dim`-level truncated mode.
pub fn creation(dim: usize) -> Array2<Complex64> {
    let mut at = Array2::<Complex64>::zeros((dim, dim));
    for n in 1..dim {
        at[(n, n - 1)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    at
}

fn kron(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Array2<Complex64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::<Complex64>::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij.norm_sqr() == 0.0 {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Project a two-mode operator built at padded dimension down to `dim` levels
/// per mode. Row/column index convention is `n1 * dim + n2`.
fn project_two_mode(u: &Array2<Complex64>, dim_padded: usize, dim: usize) -> Array2<Complex64> {
    let d2 = dim * dim;
    let mut out = Array2::<Complex64>::zeros((d2, d2));
    for i1 in 0..dim {
        for i2 in 0..dim {
            for j1 in 0..dim {
                for j2 in 0..dim {
                    out[(i1 * dim + i2, j1 * dim + j2)] =
                        u[(i1 * dim_padded + i2, j1 * dim_padded + j2)];
                }
            }
        }
    }
    out
}

fn project_one_mode(u: &Array2<Complex64>, dim: usize) -> Array2<Complex64> {
    let mut out = Array2::<Complex64>::zeros((dim, dim));
    for i in 0..dim {
        for j in 0..dim {
            out[(i, j)] = u[(i, j)];
        }
    }
    out
}

/// Two-mode squeezing unitary `exp(eps (a1+ a2+ - a1 a2))`, projected to
/// `dim` levels per mode. `eps` may be negative to flip the pair phase.
pub fn two_mode_squeezer(dim: usize, eps: f64) -> Array2<Complex64> {
    let dp = dim + CUTOFF_PAD;
    let a = annihilation(dp);
    let at = creation(dp);
    let gen = (kron(&at, &at) - kron(&a, &a)).mapv(|v| v * eps);
    project_two_mode(&expm(&gen), dp, dim)
}

/// Beamsplitter unitary with intensity transmissivity `t` on two modes:
/// `exp(theta (a1+ a2 - a1 a2+))` with `cos(theta) = sqrt(t)`.
pub fn beamsplitter(dim: usize, transmissivity: f64) -> Array2<Complex64> {
    let theta = transmissivity.sqrt().clamp(0.0, 1.0).acos();
    mode_rotation(dim, theta)
}

/// Polarization/mode rotation by `theta` on an (H, V) mode pair.
///
/// Acts as `a_H -> cos(theta) a_H + sin(theta) a_V`.
pub fn mode_rotation(dim: usize, theta: f64) -> Array2<Complex64> {
    let dp = dim + CUTOFF_PAD;
    let a = annihilation(dp);
    let at = creation(dp);
    let gen = (kron(&at, &a) - kron(&a, &at)).mapv(|v| v * theta);
    project_two_mode(&expm(&gen), dp, dim)
}

/// Displacement unitary `exp(alpha a+ - alpha* a)` projected to `dim` levels.
pub fn displacement(dim: usize, alpha: Complex64) -> Array2<Complex64> {
    let dp = dim + CUTOFF_PAD;
    let a = annihilation(dp);
    let at = creation(dp);
    let gen = at.mapv(|v| v * alpha) - a.mapv(|v| v * alpha.conj());
    project_one_mode(&expm(&gen), dp)
}

/// Single-mode phase shift `exp(i phi n)` as a diagonal unitary.
pub fn phase_shift(dim: usize, phi: f64) -> Array2<Complex64> {
    let mut u = Array2::<Complex64>::zeros((dim, dim));
    for n in 0..dim {
        u[(n, n)] = Complex64::from_polar(1.0, phi * n as f64);
    }
    u
}

/// Kraus family of the photon-loss (amplitude damping) channel with
/// transmissivity `t`: `E_k = sum_n sqrt(C(n,k) t^(n-k) (1-t)^k) |n-k><n|`.
///
/// The family is exactly trace-preserving on the truncated space.
pub fn loss_kraus(dim: usize, transmissivity: f64) -> Vec<Array2<Complex64>> {
    let t = transmissivity;
    let mut family = Vec::with_capacity(dim);
    for k in 0..dim {
        let mut e = Array2::<Complex64>::zeros((dim, dim));
        for n in k..dim {
            let coeff = (binomial(n, k) * t.powi((n - k) as i32) * (1.0 - t).powi(k as i32)).sqrt();
            e[(n - k, n)] = Complex64::new(coeff, 0.0);
        }
        family.push(e);
    }
    family
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut acc = 1.0f64;
    for i in 0..k {
        acc *= (n - i) as f64 / (k - i) as f64;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn annihilation_matrix_elements() {
        let a = annihilation(4);
        assert!((a[(0, 1)].re - 1.0).abs() < 1e-15);
        assert!((a[(1, 2)].re - 2.0f64.sqrt()).abs() < 1e-15);
        assert!((a[(2, 3)].re - 3.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn squeezer_vacuum_pair_amplitudes() {
        // S(eps)|0,0> = sech(eps) sum tanh(eps)^n |n,n>
        let dim = 7;
        let eps = 0.22;
        let u = two_mode_squeezer(dim, eps);
        let sech = 1.0 / eps.cosh();
        let tanh = eps.tanh();
        for n in 0..4 {
            let amp = u[(n * dim + n, 0)];
            let want = sech * tanh.powi(n as i32);
            assert!(
                (amp.re - want).abs() < 1e-9,
                "pair amplitude n={n}: {} vs {want}",
                amp.re
            );
        }
        // No unpaired creation.
        assert!(u[(1 * dim + 0, 0)].norm() < 1e-12);
    }

    #[test]
    fn displacement_gives_poisson_vacuum_amplitudes() {
        let dim = 9;
        let alpha = Complex64::new(0.5f64.sqrt(), 0.0);
        let u = displacement(dim, alpha);
        let mu = alpha.norm_sqr();
        for n in 0..5usize {
            let p = u[(n, 0)].norm_sqr();
            let fact: f64 = (1..=n).map(|i| i as f64).product();
            let want = (-mu).exp() * mu.powi(n as i32) / fact;
            assert!((p - want).abs() < 1e-10, "poisson weight n={n}");
        }
    }

    #[test]
    fn beamsplitter_splits_single_photon() {
        let dim = 3;
        let u = beamsplitter(dim, 0.5);
        // |1,0> -> sqrt(t)|1,0> - ... : probability t in mode 1.
        let p_keep = u[(1 * dim + 0, 1 * dim + 0)].norm_sqr();
        let p_swap = u[(0 * dim + 1, 1 * dim + 0)].norm_sqr();
        assert!((p_keep - 0.5).abs() < 1e-12);
        assert!((p_swap - 0.5).abs() < 1e-12);
    }

    #[test]
    fn loss_kraus_is_trace_preserving() {
        let fam = loss_kraus(7, 0.37);
        let mut sum = Array2::<Complex64>::zeros((7, 7));
        for e in &fam {
            let et = e.t().mapv(|v| v.conj());
            sum = sum + et.dot(e);
        }
        for i in 0..7 {
            for j in 0..7 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((sum[(i, j)].re - want).abs() < 1e-12);
                assert!(sum[(i, j)].im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hong_ou_mandel_dip() {
        // 50:50 beamsplitter on |1,1>: no coincident singles at the outputs.
        let dim = 4;
        let u = beamsplitter(dim, 0.5);
        let amp_11 = u[(1 * dim + 1, 1 * dim + 1)];
        assert!(amp_11.norm() < 1e-12, "HOM coincidence should vanish");
        let p_20 = u[(2 * dim + 0, 1 * dim + 1)].norm_sqr();
        let p_02 = u[(0 * dim + 2, 1 * dim + 1)].norm_sqr();
        assert!((p_20 - 0.5).abs() < 1e-12);
        assert!((p_02 - 0.5).abs() < 1e-12);
    }
}
