//! Dense complex linear algebra for small matrices (N ≤ 8 in practice).
//!
//! Everything here works on row-major `&[Complex64]` slices of length n·n so the
//! public matrix types can stay thin. Three workhorses live here:
//!
//! * a cyclic complex Jacobi eigensolver for Hermitian matrices (ascending
//!   eigenvalues, orthonormal eigenvectors),
//! * a Cholesky-based positive-semidefiniteness probe used as the fast path of
//!   the density-matrix projection,
//! * a general complex eigensolver (Faddeev–LeVerrier characteristic polynomial
//!   + Durand–Kerner roots + inverse iteration) for the non-Hermitian
//!   reachability matrix A = −iG − F_z² + κF_z.
//!
//! Hand-rolled on purpose: the dimensions are tiny and fixed, the crate is
//! `no_std`, and the solvers are pinned by oracle tests against known spectra.

use crate::fm;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[inline]
fn idx(n: usize, i: usize, j: usize) -> usize {
    i * n + j
}

/// Frobenius norm of the strict off-diagonal part.
fn off_diag_norm_sqr(a: &[Complex64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[idx(n, i, j)].norm_sqr();
            }
        }
    }
    s
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching orthonormal
/// eigenvectors as the columns of the returned matrix. The strict lower
/// triangle of the input is trusted to mirror the upper one (callers hold
/// Hermitian data); asymmetry below ~1e-12 is absorbed by the averaging in the
/// rotation setup.
pub fn hermitian_eig(a: &[Complex64], n: usize) -> (Vec<f64>, Vec<Complex64>) {
    debug_assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut v = vec![ZERO; n * n];
    for i in 0..n {
        v[idx(n, i, i)] = ONE;
    }
    let scale: f64 = m.iter().map(|z| z.norm_sqr()).sum::<f64>().max(1e-300);
    let tol = 1e-30 * scale;

    for _sweep in 0..64 {
        if off_diag_norm_sqr(&m, n) <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                // Hermitian average of the (p,q)/(q,p) pair guards round-off.
                let apq = 0.5 * (m[idx(n, p, q)] + m[idx(n, q, p)].conj());
                let abs_apq = fm::cabs(apq);
                if abs_apq * abs_apq <= tol / (n * n) as f64 {
                    continue;
                }
                let app = m[idx(n, p, p)].re;
                let aqq = m[idx(n, q, q)].re;
                let phase = apq / abs_apq; // e^{iφ}
                let theta = (aqq - app) / (2.0 * abs_apq);
                let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                let t = -sign / (theta.abs() + fm::sqrt(theta * theta + 1.0));
                let c = 1.0 / fm::sqrt(t * t + 1.0);
                let s = t * c;
                let s_phase = phase * s; // s·e^{iφ}
                let s_phase_c = s_phase.conj();

                // Columns: B = A·J with J_pp = c, J_pq = −s e^{iφ}, J_qp = s e^{−iφ}, J_qq = c.
                for i in 0..n {
                    let aip = m[idx(n, i, p)];
                    let aiq = m[idx(n, i, q)];
                    m[idx(n, i, p)] = aip * c + aiq * s_phase_c;
                    m[idx(n, i, q)] = aiq * c - aip * s_phase;
                }
                // Rows: A' = J†·B.
                for j in 0..n {
                    let apj = m[idx(n, p, j)];
                    let aqj = m[idx(n, q, j)];
                    m[idx(n, p, j)] = apj * c + aqj * s_phase;
                    m[idx(n, q, j)] = aqj * c - apj * s_phase_c;
                }
                // Accumulate eigenvectors: V ← V·J.
                for i in 0..n {
                    let vip = v[idx(n, i, p)];
                    let viq = v[idx(n, i, q)];
                    v[idx(n, i, p)] = vip * c + viq * s_phase_c;
                    v[idx(n, i, q)] = viq * c - vip * s_phase;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let eig: Vec<f64> = (0..n).map(|i| m[idx(n, i, i)].re).collect();
    order.sort_by(|&i, &j| eig[i].partial_cmp(&eig[j]).expect("finite eigenvalues"));
    let vals: Vec<f64> = order.iter().map(|&i| eig[i]).collect();
    let mut vecs = vec![ZERO; n * n];
    for (new_col, &old_col) in order.iter().enumerate() {
        for i in 0..n {
            vecs[idx(n, i, new_col)] = v[idx(n, i, old_col)];
        }
    }
    (vals, vecs)
}

/// True iff the Hermitian matrix `a` satisfies min eig > −tol, decided by
/// attempting a Cholesky factorization of a + tol·I into `scratch`.
///
/// This is the O(N³/3) fast path that lets the projection skip a full
/// eigendecomposition on the (vast majority of) steps that stay inside the
/// PSD cone. `scratch` must have length n·n.
pub fn psd_within(a: &[Complex64], n: usize, tol: f64, scratch: &mut [Complex64]) -> bool {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(scratch.len(), n * n);
    scratch.copy_from_slice(a);
    for i in 0..n {
        scratch[idx(n, i, i)] += Complex64::new(tol, 0.0);
    }
    for j in 0..n {
        let mut d = scratch[idx(n, j, j)].re;
        for k in 0..j {
            d -= scratch[idx(n, j, k)].norm_sqr();
        }
        if !(d > 0.0) {
            return false; // also catches NaN
        }
        let ljj = fm::sqrt(d);
        scratch[idx(n, j, j)] = Complex64::new(ljj, 0.0);
        for i in (j + 1)..n {
            let mut s = scratch[idx(n, i, j)];
            for k in 0..j {
                s -= scratch[idx(n, i, k)] * scratch[idx(n, j, k)].conj();
            }
            scratch[idx(n, i, j)] = s / ljj;
        }
    }
    true
}

/// Solves the dense complex system `a·x = b` by Gaussian elimination with
/// partial pivoting; `a` and `b` are clobbered, the solution lands in `b`.
/// Returns false on a (numerically) singular pivot.
pub fn solve_in_place(a: &mut [Complex64], b: &mut [Complex64], n: usize) -> bool {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    for col in 0..n {
        let mut piv = col;
        let mut best = a[idx(n, col, col)].norm_sqr();
        for r in (col + 1)..n {
            let m = a[idx(n, r, col)].norm_sqr();
            if m > best {
                best = m;
                piv = r;
            }
        }
        if best < 1e-280 {
            return false;
        }
        if piv != col {
            for j in 0..n {
                a.swap(idx(n, col, j), idx(n, piv, j));
            }
            b.swap(col, piv);
        }
        let d = a[idx(n, col, col)];
        for r in (col + 1)..n {
            let f = a[idx(n, r, col)] / d;
            if f == ZERO {
                continue;
            }
            for j in col..n {
                let v = a[idx(n, col, j)];
                a[idx(n, r, j)] -= f * v;
            }
            let bv = b[col];
            b[r] -= f * bv;
        }
    }
    for col in (0..n).rev() {
        let mut s = b[col];
        for j in (col + 1)..n {
            s -= a[idx(n, col, j)] * b[j];
        }
        b[col] = s / a[idx(n, col, col)];
    }
    true
}

/// Coefficients of the characteristic polynomial det(λI − A), monic, returned
/// as `c` with p(λ) = λⁿ + c[n−1]λⁿ⁻¹ + … + c[0], via Faddeev–LeVerrier.
fn char_poly(a: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut c = vec![ZERO; n];
    let mut m = vec![ZERO; n * n]; // M_0 = 0 so that M_1 = A after the first multiply-add
    let mut am = vec![ZERO; n * n];
    for i in 0..n {
        m[idx(n, i, i)] = ONE;
    }
    for k in 1..=n {
        // am = A·M_{k−1}
        for i in 0..n {
            for j in 0..n {
                let mut s = ZERO;
                for l in 0..n {
                    s += a[idx(n, i, l)] * m[idx(n, l, j)];
                }
                am[idx(n, i, j)] = s;
            }
        }
        let tr: Complex64 = (0..n).map(|i| am[idx(n, i, i)]).sum();
        let coeff = -tr / k as f64;
        c[n - k] = coeff;
        m.copy_from_slice(&am);
        for i in 0..n {
            m[idx(n, i, i)] += coeff;
        }
    }
    c
}

/// All roots of the monic polynomial λⁿ + c[n−1]λⁿ⁻¹ + … + c[0] by
/// Durand–Kerner iteration.
fn poly_roots(c: &[Complex64]) -> Vec<Complex64> {
    let n = c.len();
    let radius = 1.0 + c.iter().map(|z| fm::cabs(*z)).fold(0.0, f64::max);
    let seed = Complex64::new(0.4, 0.9); // standard non-real, non-unit-modulus seed
    let mut z: Vec<Complex64> = Vec::with_capacity(n);
    let mut p = ONE;
    for _ in 0..n {
        p *= seed;
        z.push(p * radius);
    }
    let eval = |x: Complex64| -> Complex64 {
        let mut v = ONE; // monic leading term
        for k in (0..n).rev() {
            v = v * x + c[k];
        }
        v
    };
    for _ in 0..600 {
        let mut moved = 0.0f64;
        for k in 0..n {
            let zk = z[k];
            let mut denom = ONE;
            for (j, &zj) in z.iter().enumerate() {
                if j != k {
                    denom *= zk - zj;
                }
            }
            if denom == ZERO {
                // coincident iterates: nudge deterministically
                z[k] += Complex64::new(1e-8 * radius, 1e-8 * radius);
                moved = f64::MAX;
                continue;
            }
            let delta = eval(zk) / denom;
            z[k] = zk - delta;
            moved = moved.max(fm::cabs(delta) / (1.0 + fm::cabs(z[k])));
        }
        if moved < 1e-14 {
            break;
        }
    }
    z
}

/// Eigendecomposition of a general complex matrix: eigenvalues via the
/// characteristic polynomial, eigenvectors via inverse iteration. Returns
/// (eigenvalues, eigenvectors as unit-norm columns). Intended for the N ≤ 8
/// reachability matrices; accuracy degrades near defective spectra, which the
/// caller surfaces through the eigenvalue-gap diagnostic rather than here.
pub fn general_eig(a: &[Complex64], n: usize) -> (Vec<Complex64>, Vec<Complex64>) {
    debug_assert_eq!(a.len(), n * n);
    let mut vals = poly_roots(&char_poly(a, n));
    // Deterministic order: by real part, then imaginary part.
    vals.sort_by(|x, y| {
        (x.re, x.im)
            .partial_cmp(&(y.re, y.im))
            .expect("finite eigenvalues")
    });
    let scale: f64 = fm::sqrt(a.iter().map(|z| z.norm_sqr()).sum::<f64>()).max(1e-300);
    let mut vecs = vec![ZERO; n * n];
    let mut shifted = vec![ZERO; n * n];
    let mut x = vec![ZERO; n];
    for (k, &lambda) in vals.iter().enumerate() {
        // Fixed, mildly irregular start vector; deterministic across runs.
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = Complex64::new(1.0 + 0.17 * i as f64, 0.39 - 0.11 * i as f64);
        }
        let mut ok = false;
        let mut eps = 1e-12 * scale;
        for _attempt in 0..4 {
            // Shift slightly off the eigenvalue so the solve stays nonsingular.
            let shift = lambda + Complex64::new(eps, eps);
            let mut converged = false;
            for _ in 0..8 {
                shifted.copy_from_slice(a);
                for i in 0..n {
                    shifted[idx(n, i, i)] -= shift;
                }
                if !solve_in_place(&mut shifted, &mut x, n) {
                    break;
                }
                let norm = fm::sqrt(x.iter().map(|z| z.norm_sqr()).sum::<f64>());
                if !(norm > 0.0) || !norm.is_finite() {
                    break;
                }
                for xi in x.iter_mut() {
                    *xi /= norm;
                }
                // Residual ‖Ax − λx‖ relative to the matrix scale.
                let mut res = 0.0;
                for i in 0..n {
                    let mut s = ZERO;
                    for j in 0..n {
                        s += a[idx(n, i, j)] * x[j];
                    }
                    res += (s - lambda * x[i]).norm_sqr();
                }
                if fm::sqrt(res) <= 1e-10 * scale {
                    converged = true;
                    break;
                }
            }
            if converged {
                ok = true;
                break;
            }
            eps *= 10.0;
        }
        if !ok {
            // Near-defective direction: keep the last iterate (normalized if
            // possible); diagnostics built on gaps will flag this case.
            let norm = fm::sqrt(x.iter().map(|z| z.norm_sqr()).sum::<f64>());
            if norm > 0.0 && norm.is_finite() {
                for xi in x.iter_mut() {
                    *xi /= norm;
                }
            }
        }
        for i in 0..n {
            vecs[idx(n, i, k)] = x[i];
        }
    }
    (vals, vecs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn jacobi_diagonal_passthrough() {
        let a = [c(3.0, 0.0), ZERO, ZERO, c(-1.0, 0.0)];
        let (vals, _) = hermitian_eig(&a, 2);
        assert!((vals[0] + 1.0).abs() < 1e-14);
        assert!((vals[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn jacobi_sigma_y_spectrum() {
        // σ_y = [[0, −i], [i, 0]] has eigenvalues ∓1.
        let a = [ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO];
        let (vals, vecs) = hermitian_eig(&a, 2);
        assert!((vals[0] + 1.0).abs() < 1e-13);
        assert!((vals[1] - 1.0).abs() < 1e-13);
        // Residual check ‖Av − λv‖.
        for k in 0..2 {
            for i in 0..2 {
                let av = a[idx(2, i, 0)] * vecs[idx(2, 0, k)] + a[idx(2, i, 1)] * vecs[idx(2, 1, k)];
                let lv = vecs[idx(2, i, k)] * vals[k];
                assert!((av - lv).norm_sqr() < 1e-24);
            }
        }
    }

    #[test]
    fn jacobi_known_3x3() {
        // Real symmetric [[2,1,0],[1,3,1],[0,1,4]]; eigenvalues are 3 and 3 ± √3.
        let a = [
            c(2.0, 0.0),
            c(1.0, 0.0),
            ZERO,
            c(1.0, 0.0),
            c(3.0, 0.0),
            c(1.0, 0.0),
            ZERO,
            c(1.0, 0.0),
            c(4.0, 0.0),
        ];
        let (vals, _) = hermitian_eig(&a, 3);
        let s3 = 3.0f64.sqrt();
        assert!((vals[0] - (3.0 - s3)).abs() < 1e-12);
        assert!((vals[1] - 3.0).abs() < 1e-12);
        assert!((vals[2] - (3.0 + s3)).abs() < 1e-12);
    }

    #[test]
    fn jacobi_random_hermitian_residuals() {
        // Deterministic pseudo-random Hermitian 6×6; checks residuals and
        // orthonormality rather than frozen values.
        let n = 6;
        let mut a = vec![ZERO; n * n];
        let mut s = 0x243F6A8885A308D3u64; // splitmix64 walk
        let mut rnd = || {
            s = s.wrapping_add(0x9E3779B97F4A7C15);
            let mut z = s;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
            ((z ^ (z >> 31)) as f64 / u64::MAX as f64) - 0.5
        };
        for i in 0..n {
            for j in i..n {
                let v = if i == j {
                    c(rnd(), 0.0)
                } else {
                    c(rnd(), rnd())
                };
                a[idx(n, i, j)] = v;
                a[idx(n, j, i)] = v.conj();
            }
        }
        let (vals, vecs) = hermitian_eig(&a, n);
        for k in 0..n {
            let mut res = 0.0;
            for i in 0..n {
                let mut av = ZERO;
                for j in 0..n {
                    av += a[idx(n, i, j)] * vecs[idx(n, j, k)];
                }
                res += (av - vecs[idx(n, i, k)] * vals[k]).norm_sqr();
            }
            assert!(res < 1e-22, "residual {res} for eigenpair {k}");
        }
        for k1 in 0..n {
            for k2 in 0..n {
                let mut dot = ZERO;
                for i in 0..n {
                    dot += vecs[idx(n, i, k1)].conj() * vecs[idx(n, i, k2)];
                }
                let expect = if k1 == k2 { 1.0 } else { 0.0 };
                assert!((dot - c(expect, 0.0)).norm_sqr() < 1e-22);
            }
        }
        for k in 1..n {
            assert!(vals[k] >= vals[k - 1]);
        }
    }

    #[test]
    fn cholesky_probe_accepts_and_rejects() {
        let mut scratch = vec![ZERO; 4];
        let psd = [c(0.6, 0.0), c(0.2, 0.1), c(0.2, -0.1), c(0.4, 0.0)];
        assert!(psd_within(&psd, 2, 1e-12, &mut scratch));
        // diag(0.5, −0.1) is indefinite well beyond any tolerance here.
        let indef = [c(0.5, 0.0), ZERO, ZERO, c(-0.1, 0.0)];
        assert!(!psd_within(&indef, 2, 1e-8, &mut scratch));
        // …but passes once the tolerance exceeds the negative part.
        assert!(psd_within(&indef, 2, 0.11, &mut scratch));
        let nan = [c(f64::NAN, 0.0), ZERO, ZERO, ONE];
        assert!(!psd_within(&nan, 2, 1e-8, &mut scratch));
    }

    #[test]
    fn solve_oracle() {
        // [[2, i],[−i, 3]]·x = [1, 1−i]; solved by hand:
        // x₂ = (6−4i)/10·... validated instead by residual.
        let mut a = [c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(3.0, 0.0)];
        let a0 = a;
        let mut b = [c(1.0, 0.0), c(1.0, -1.0)];
        let b0 = b;
        assert!(solve_in_place(&mut a, &mut b, 2));
        for i in 0..2 {
            let r = a0[idx(2, i, 0)] * b[0] + a0[idx(2, i, 1)] * b[1] - b0[i];
            assert!(r.norm_sqr() < 1e-26);
        }
    }

    #[test]
    fn char_poly_companion_oracle() {
        // A = diag(1, 2, −3): p(λ) = λ³ − 0·λ²... expand (λ−1)(λ−2)(λ+3)
        // = λ³ + 0λ² − 7λ + 6 → c = [6, −7, 0].
        let a = [
            ONE,
            ZERO,
            ZERO,
            ZERO,
            c(2.0, 0.0),
            ZERO,
            ZERO,
            ZERO,
            c(-3.0, 0.0),
        ];
        let co = char_poly(&a, 3);
        assert!((co[0] - c(6.0, 0.0)).norm_sqr() < 1e-24);
        assert!((co[1] - c(-7.0, 0.0)).norm_sqr() < 1e-24);
        assert!(co[2].norm_sqr() < 1e-24);
    }

    #[test]
    fn roots_of_known_cubic() {
        // (λ−1)(λ−2i)(λ+3) = λ³ + (2−2i)λ² + (−3−4i)λ + 6i
        let coeffs = [c(0.0, 6.0), c(-3.0, -4.0), c(2.0, -2.0)];
        let mut roots = poly_roots(&coeffs);
        roots.sort_by(|x, y| (x.re, x.im).partial_cmp(&(y.re, y.im)).unwrap());
        assert!((roots[0] - c(-3.0, 0.0)).norm_sqr() < 1e-20);
        assert!((roots[1] - c(0.0, 2.0)).norm_sqr() < 1e-20);
        assert!((roots[2] - c(1.0, 0.0)).norm_sqr() < 1e-20);
    }

    #[test]
    fn general_eig_matches_jacobi_on_hermitian() {
        let a = [
            c(1.0, 0.0),
            c(0.3, 0.4),
            c(0.3, -0.4),
            c(-2.0, 0.0),
        ];
        let (gv, _) = general_eig(&a, 2);
        let (hv, _) = hermitian_eig(&a, 2);
        assert!((gv[0].re - hv[0]).abs() < 1e-10 && gv[0].im.abs() < 1e-10);
        assert!((gv[1].re - hv[1]).abs() < 1e-10 && gv[1].im.abs() < 1e-10);
    }

    #[test]
    fn general_eig_residuals_nonnormal() {
        // Non-normal upper-triangular-ish matrix with distinct spectrum.
        let a = [
            c(1.0, 0.0),
            c(5.0, 1.0),
            ZERO,
            ZERO,
            c(0.0, 2.0),
            c(-1.0, 3.0),
            ZERO,
            ZERO,
            c(-4.0, 0.0),
        ];
        let (vals, vecs) = general_eig(&a, 3);
        let scale = 8.0;
        for k in 0..3 {
            let mut res = 0.0;
            for i in 0..3 {
                let mut av = ZERO;
                for j in 0..3 {
                    av += a[idx(3, i, j)] * vecs[idx(3, j, k)];
                }
                res += (av - vals[k] * vecs[idx(3, i, k)]).norm_sqr();
            }
            assert!(res.sqrt() < 1e-9 * scale, "residual {} for λ={}", res.sqrt(), vals[k]);
        }
    }
}
