//! Fixed operators: spin-J angular momentum matrices, Pauli matrices, tensor
//! products, collective two-qubit operators, and the pure target states.
//!
//! Conventions (used everywhere downstream): the spin basis is ψ_0..ψ_2J with
//! F_z ψ_k = (k−J) ψ_k; the two-qubit basis is ordered (ψ_↑↑, ψ_↑↓, ψ_↓↑, ψ_↓↓)
//! with the first tensor factor belonging to qubit 1. The coupling constants
//! are fixed to β = γ = 1; rescale time externally if other values are needed.

use crate::fm;
use crate::qstate::{ComplexMatrix, DensityMatrix, Error};
use alloc::vec::Vec;
use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Spin magnitude, stored as 2J so half-integer spins stay exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpinParams {
    two_j: u32,
}

impl SpinParams {
    /// Requires 2J ≥ 1.
    pub fn new(two_j: u32) -> Result<Self, Error> {
        if two_j == 0 {
            return Err(Error::InvalidParam("two_j must be at least 1"));
        }
        Ok(SpinParams { two_j })
    }

    /// 2J.
    pub fn two_j(&self) -> u32 {
        self.two_j
    }

    /// J as a float.
    pub fn j(&self) -> f64 {
        self.two_j as f64 / 2.0
    }

    /// Hilbert-space dimension N = 2J + 1.
    pub fn dim(&self) -> usize {
        self.two_j as usize + 1
    }
}

/// Spin angular momentum operators (F_y, F_z) for the given J.
///
/// F_z ψ_k = (k − J) ψ_k and F_y ψ_k = i c_{k−J} ψ_{k+1} − i c_{J−k} ψ_{k−1}
/// with c_m = ½√((J−m)(J+m+1)). Both are Hermitian; F_y is tridiagonal with
/// nonzero super/sub-diagonal and F_z has unit-gap nondegenerate spectrum.
pub fn angular_momentum_ops(p: &SpinParams) -> (ComplexMatrix, ComplexMatrix) {
    let two_j = p.two_j as usize;
    let n = p.dim();
    let mut fy = ComplexMatrix::zeros(n);
    let mut fz = ComplexMatrix::zeros(n);
    for k in 0..n {
        fz[(k, k)] = Complex64::new((2 * k as i64 - two_j as i64) as f64 / 2.0, 0.0);
        // c_{k−J} = ½√((2J−k)(k+1)) — raising amplitude onto ψ_{k+1}.
        if k + 1 < n {
            let c = 0.5 * fm::sqrt(((two_j - k) * (k + 1)) as f64);
            fy[(k + 1, k)] = I * c;
        }
        // c_{J−k} = ½√(k(2J−k+1)) — lowering amplitude onto ψ_{k−1}.
        if k >= 1 {
            let c = 0.5 * fm::sqrt((k * (two_j - k + 1)) as f64);
            fy[(k - 1, k)] = -I * c;
        }
    }
    (fy, fz)
}

/// The Pauli matrices (σ_x, σ_y, σ_z) in the (ψ_↑, ψ_↓) basis.
pub fn pauli() -> (ComplexMatrix, ComplexMatrix, ComplexMatrix) {
    let sx = ComplexMatrix::new(2, alloc::vec![ZERO, ONE, ONE, ZERO]).expect("finite");
    let sy = ComplexMatrix::new(2, alloc::vec![ZERO, -I, I, ZERO]).expect("finite");
    let sz = ComplexMatrix::new(2, alloc::vec![ONE, ZERO, ZERO, -ONE]).expect("finite");
    (sx, sy, sz)
}

/// The single-qubit basis vectors (ψ_↑, ψ_↓): σ_z ψ_↑ = +ψ_↑.
pub fn qubit_basis() -> ([Complex64; 2], [Complex64; 2]) {
    ([ONE, ZERO], [ZERO, ONE])
}

/// Tensor (Kronecker) product A ⊗ B.
///
/// Row/column indices split as i = i_A·dim_B + i_B, which realizes the
/// two-qubit basis ordering (ψ_↑↑, ψ_↑↓, ψ_↓↑, ψ_↓↓) when A acts on qubit 1.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (na, nb) = (a.dim(), b.dim());
    ComplexMatrix::from_fn(na * nb, |i, j| {
        a[(i / nb, j / nb)] * b[(i % nb, j % nb)]
    })
}

/// The collective two-qubit operators.
#[derive(Debug, Clone)]
pub struct TwoQubitOps {
    /// σ_y¹ = σ_y ⊗ 𝕀.
    pub sy1: ComplexMatrix,
    /// σ_y² = 𝕀 ⊗ σ_y.
    pub sy2: ComplexMatrix,
    /// F_y = σ_y¹ + σ_y².
    pub fy: ComplexMatrix,
    /// F_z = σ_z¹ + σ_z² = diag(2, 0, 0, −2).
    pub fz: ComplexMatrix,
}

/// Builds σ_y¹, σ_y², F_y, F_z on ℂ²⊗ℂ².
pub fn two_qubit_ops() -> TwoQubitOps {
    let (_, sy, sz) = pauli();
    let id = ComplexMatrix::identity(2);
    let sy1 = kron(&sy, &id);
    let sy2 = kron(&id, &sy);
    let fy = sy1.add(&sy2);
    let fz = kron(&sz, &id).add(&kron(&id, &sz));
    TwoQubitOps { sy1, sy2, fy, fz }
}

/// Which pure state the feedback laws drive toward.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    /// Spin F_z eigenstate ψ_m (basis index m ∈ {0..2J}), eigenvalue m − J.
    SpinEigenstate(usize),
    /// Two-qubit symmetric Bell-type state ½(ψ_↑↓+ψ_↓↑)(ψ_↑↓+ψ_↓↑)†.
    TwoQubitSymmetric,
    /// Two-qubit antisymmetric (singlet) state ½(ψ_↑↓−ψ_↓↑)(ψ_↑↓−ψ_↓↑)†.
    TwoQubitAntisymmetric,
}

/// A pure target ρ_f = v_f v_f† together with the bookkeeping the analysis
/// layer needs: λ_f is the F_z eigenvalue at v_f (0 for the two-qubit Bell
/// states, which live in the F_z kernel).
#[derive(Debug, Clone)]
pub struct TargetSpec {
    rho_f: DensityMatrix,
    lambda_f: f64,
    kind: TargetKind,
    v_f: Vec<Complex64>,
}

impl TargetSpec {
    /// Target state ρ_f.
    pub fn rho_f(&self) -> &DensityMatrix {
        &self.rho_f
    }

    /// F_z eigenvalue at v_f.
    pub fn lambda_f(&self) -> f64 {
        self.lambda_f
    }

    /// Which target this is.
    pub fn kind(&self) -> TargetKind {
        self.kind
    }

    /// The defining unit vector v_f.
    pub fn v_f(&self) -> &[Complex64] {
        &self.v_f
    }
}

/// Constructs the target for `kind`. Spin eigenstates need `spin` for the
/// dimension (and validation of m); the two-qubit targets ignore it.
pub fn target_state(kind: TargetKind, spin: Option<&SpinParams>) -> Result<TargetSpec, Error> {
    match kind {
        TargetKind::SpinEigenstate(m) => {
            let p = spin.ok_or(Error::InvalidParam(
                "spin eigenstate target requires spin parameters",
            ))?;
            if m >= p.dim() {
                return Err(Error::InvalidParam("eigenstate index m must lie in 0..=2J"));
            }
            let mut v_f = alloc::vec![ZERO; p.dim()];
            v_f[m] = ONE;
            Ok(TargetSpec {
                rho_f: DensityMatrix::eigenstate(p.dim(), m),
                lambda_f: (2 * m as i64 - p.two_j as i64) as f64 / 2.0,
                kind,
                v_f,
            })
        }
        TargetKind::TwoQubitSymmetric | TargetKind::TwoQubitAntisymmetric => {
            let s = 1.0 / fm::sqrt(2.0);
            let sign = if kind == TargetKind::TwoQubitSymmetric {
                s
            } else {
                -s
            };
            // v = (ψ_↑↓ ± ψ_↓↑)/√2 in the (↑↑, ↑↓, ↓↑, ↓↓) ordering.
            let v_f = alloc::vec![ZERO, Complex64::new(s, 0.0), Complex64::new(sign, 0.0), ZERO];
            let rho_f = DensityMatrix::pure_from_vector(&v_f)?;
            Ok(TargetSpec {
                rho_f,
                lambda_f: 0.0,
                kind,
                v_f,
            })
        }
    }
}
