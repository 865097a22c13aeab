//! Dense complex matrices and the density-matrix state type.
//!
//! A [`DensityMatrix`] is Hermitian, unit-trace and positive semidefinite
//! within explicit [`Tolerances`]; every integrator step re-establishes those
//! invariants through [`project_to_density`]. Dimension mismatches between
//! operands are caller bugs and panic; numerical failures (non-positive trace,
//! lost positivity) are reported as [`Error`] values.

use crate::fm;
use crate::linalg;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Index, IndexMut};
use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Numerical failure while manipulating states.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Trace was zero or negative where a positive trace is required.
    NonPositiveTrace(f64),
    /// Matrix failed the Hermiticity tolerance; payload is ‖M − M†‖_F.
    NotHermitian(f64),
    /// Trace deviated from 1 beyond tolerance; payload is Tr M.
    OffTrace(f64),
    /// Matrix failed the PSD tolerance; payload is the minimum eigenvalue.
    NotPsd(f64),
    /// A non-finite entry (NaN/∞) appeared — integrator blow-up.
    NonFinite,
    /// Invalid parameter for the requested operation.
    InvalidParam(&'static str),
    /// Failure with step context, reported by the integrators.
    Step {
        /// What failed, wrapped.
        source: alloc::boxed::Box<Error>,
        /// Human-readable context (step index, time).
        context: String,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NonPositiveTrace(t) => write!(f, "non-positive trace {t:e}"),
            Error::NotHermitian(d) => write!(f, "not Hermitian within tolerance: ‖M − M†‖ = {d:e}"),
            Error::OffTrace(t) => write!(f, "trace {t} deviates from 1 beyond tolerance"),
            Error::NotPsd(e) => write!(f, "not positive semidefinite: min eigenvalue {e:e}"),
            Error::NonFinite => write!(f, "non-finite matrix entry (integrator blow-up)"),
            Error::InvalidParam(what) => write!(f, "invalid parameter: {what}"),
            Error::Step { source, context } => write!(f, "{source} ({context})"),
        }
    }
}

impl core::error::Error for Error {}

/// Acceptance tolerances for the density-matrix invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Bound on ‖ρ − ρ†‖_F.
    pub herm: f64,
    /// Bound on |Tr ρ − 1|.
    pub trace: f64,
    /// Bound on how negative the minimum eigenvalue may be.
    pub psd: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            herm: 1e-9,
            trace: 1e-9,
            psd: 1e-8,
        }
    }
}

/// Dense complex N×N matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Zero matrix of dimension `dim` (≥ 2).
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 2, "matrix dimension must be at least 2");
        ComplexMatrix {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    /// Identity matrix.
    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Builds from row-major data; validates length and finiteness.
    pub fn new(dim: usize, data: Vec<Complex64>) -> Result<Self, Error> {
        assert!(dim >= 2, "matrix dimension must be at least 2");
        assert_eq!(data.len(), dim * dim, "row-major data length must be dim²");
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(ComplexMatrix { dim, data })
    }

    /// Builds entry-wise from a closure over (row, column).
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Diagonal matrix with the given real entries.
    pub fn from_real_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    /// Matrix dimension N.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    /// Mutable row-major entries.
    pub(crate) fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Conjugate transpose M†.
    pub fn adjoint(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    /// Matrix sum.
    pub fn add(&self, other: &ComplexMatrix) -> ComplexMatrix {
        self.zip(other, |a, b| a + b)
    }

    /// Matrix difference.
    pub fn sub(&self, other: &ComplexMatrix) -> ComplexMatrix {
        self.zip(other, |a, b| a - b)
    }

    fn zip(&self, other: &ComplexMatrix, f: impl Fn(Complex64, Complex64) -> Complex64) -> ComplexMatrix {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        ComplexMatrix {
            dim: self.dim,
            data,
        }
    }

    /// Scalar multiple zM.
    pub fn scale(&self, z: Complex64) -> ComplexMatrix {
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().map(|&a| a * z).collect(),
        }
    }

    /// Matrix product AB.
    pub fn mul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let mut out = ComplexMatrix::zeros(self.dim);
        mul_into(self, other, &mut out);
        out
    }

    /// Matrix–vector product Av.
    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim, "dimension mismatch");
        let n = self.dim;
        let mut out = vec![ZERO; n];
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            let mut s = ZERO;
            for (a, x) in row.iter().zip(v) {
                s += a * x;
            }
            out[i] = s;
        }
        out
    }

    /// Trace Σᵢ Mᵢᵢ.
    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    /// In-place Hermitian symmetrization M ← (M + M†)/2.
    pub fn hermitize_in_place(&mut self) {
        let n = self.dim;
        for i in 0..n {
            self.data[i * n + i] = Complex64::new(self.data[i * n + i].re, 0.0);
            for j in (i + 1)..n {
                let avg = 0.5 * (self.data[i * n + j] + self.data[j * n + i].conj());
                self.data[i * n + j] = avg;
                self.data[j * n + i] = avg.conj();
            }
        }
    }

    /// True iff all entries are finite.
    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Eigendecomposition assuming Hermiticity: ascending eigenvalues and the
    /// matching orthonormal eigenvectors as columns.
    pub fn hermitian_eig(&self) -> (Vec<f64>, ComplexMatrix) {
        let (vals, vecs) = linalg::hermitian_eig(&self.data, self.dim);
        (
            vals,
            ComplexMatrix {
                dim: self.dim,
                data: vecs,
            },
        )
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

/// out ← AB, reusing the output buffer.
pub(crate) fn mul_into(a: &ComplexMatrix, b: &ComplexMatrix, out: &mut ComplexMatrix) {
    let n = a.dim;
    debug_assert_eq!(b.dim, n);
    debug_assert_eq!(out.dim, n);
    let ad = &a.data;
    let bd = &b.data;
    let od = &mut out.data;
    for i in 0..n {
        let arow = &ad[i * n..(i + 1) * n];
        let orow = &mut od[i * n..(i + 1) * n];
        orow.fill(ZERO);
        for (k, &aik) in arow.iter().enumerate() {
            let brow = &bd[k * n..(k + 1) * n];
            for (o, &bkj) in orow.iter_mut().zip(brow) {
                *o += aik * bkj;
            }
        }
    }
}

/// Commutator [A, B] = AB − BA.
pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.mul(b).sub(&b.mul(a))
}

/// Lindblad dissipator 𝒟[c]ρ = cρc† − ½(c†cρ + ρc†c).
///
/// `rho` may be any matrix of matching dimension (the Zakai propagation feeds
/// unnormalized states through here); on Hermitian input the result is
/// Hermitian and traceless.
pub fn lindblad_dissipator(c: &ComplexMatrix, rho: &ComplexMatrix) -> ComplexMatrix {
    assert_eq!(c.dim(), rho.dim(), "dimension mismatch");
    let c_adj = c.adjoint();
    let cc = c_adj.mul(c);
    let sandwich = c.mul(rho).mul(&c_adj);
    let anti = cc.mul(rho).add(&rho.mul(&cc));
    sandwich.sub(&anti.scale(Complex64::new(0.5, 0.0)))
}

/// Measurement back-action √η (cρ + ρc† − Tr[(c+c†)ρ] ρ), the diffusion
/// coefficient of the filtering equation. Hermitian and traceless on valid ρ.
pub fn measurement_superop(c: &ComplexMatrix, rho: &ComplexMatrix, eta: f64) -> ComplexMatrix {
    assert_eq!(c.dim(), rho.dim(), "dimension mismatch");
    assert!(
        eta > 0.0 && eta <= 1.0,
        "detector efficiency must lie in (0, 1]"
    );
    let c_adj = c.adjoint();
    let m = c.mul(rho).add(&rho.mul(&c_adj));
    let tr = c.add(&c_adj).mul(rho).trace().re;
    let out = m.sub(&rho.scale(Complex64::new(tr, 0.0)));
    out.scale(Complex64::new(fm::sqrt(eta), 0.0))
}

/// Hilbert–Schmidt inner product (A, B) = Tr[A†B].
pub fn trace_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    assert_eq!(a.dim(), b.dim(), "dimension mismatch");
    let mut s = ZERO;
    for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
        s += x.conj() * y;
    }
    s
}

/// Frobenius norm ‖A‖ = √Tr[A†A].
pub fn frobenius_norm(a: &ComplexMatrix) -> f64 {
    fm::sqrt(a.as_slice().iter().map(|z| z.norm_sqr()).sum())
}

/// Hermitian, unit-trace, positive-semidefinite state ρ.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates all three structural invariants against `tol`.
    pub fn new(m: ComplexMatrix, tol: &Tolerances) -> Result<Self, Error> {
        if !m.is_finite() {
            return Err(Error::NonFinite);
        }
        let herm_dev = frobenius_norm(&m.sub(&m.adjoint()));
        if herm_dev > tol.herm {
            return Err(Error::NotHermitian(herm_dev));
        }
        let tr = m.trace().re;
        if (tr - 1.0).abs() > tol.trace {
            return Err(Error::OffTrace(tr));
        }
        let n = m.dim();
        let mut scratch = vec![ZERO; n * n];
        if !linalg::psd_within(m.as_slice(), n, tol.psd, &mut scratch) {
            // Marginal cases: decide by the actual spectrum.
            let (vals, _) = m.hermitian_eig();
            if vals[0] < -tol.psd {
                return Err(Error::NotPsd(vals[0]));
            }
        }
        Ok(DensityMatrix { m })
    }

    /// Wraps without validation; used where the invariants hold by
    /// construction (e.g. right after projection).
    pub(crate) fn new_unchecked(m: ComplexMatrix) -> Self {
        #[cfg(debug_assertions)]
        {
            let herm_dev = frobenius_norm(&m.sub(&m.adjoint()));
            debug_assert!(herm_dev <= 1e-7, "unchecked density not Hermitian: {herm_dev}");
            debug_assert!((m.trace().re - 1.0).abs() <= 1e-7);
        }
        DensityMatrix { m }
    }

    /// ρ = I/N.
    pub fn maximally_mixed(dim: usize) -> Self {
        let mut m = ComplexMatrix::zeros(dim);
        let p = Complex64::new(1.0 / dim as f64, 0.0);
        for i in 0..dim {
            m[(i, i)] = p;
        }
        DensityMatrix { m }
    }

    /// Pure state ψψ† from a (not necessarily normalized) state vector.
    pub fn pure_from_vector(psi: &[Complex64]) -> Result<Self, Error> {
        let norm_sqr: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if !(norm_sqr > 0.0) || !norm_sqr.is_finite() {
            return Err(Error::InvalidParam("state vector must be nonzero and finite"));
        }
        let dim = psi.len();
        let m = ComplexMatrix::from_fn(dim, |i, j| psi[i] * psi[j].conj() / norm_sqr);
        Ok(DensityMatrix { m })
    }

    /// Basis eigenstate ψ_k ψ_k†.
    pub fn eigenstate(dim: usize, k: usize) -> Self {
        assert!(k < dim, "eigenstate index out of range");
        let mut m = ComplexMatrix::zeros(dim);
        m[(k, k)] = ONE;
        DensityMatrix { m }
    }

    /// The underlying matrix.
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.m
    }

    /// Mutable access for the integrators, which re-establish the invariants
    /// (by projection) before handing the state back out.
    pub(crate) fn matrix_mut(&mut self) -> &mut ComplexMatrix {
        &mut self.m
    }

    /// Consumes into the underlying matrix.
    pub fn into_matrix(self) -> ComplexMatrix {
        self.m
    }

    /// Dimension N.
    pub fn dim(&self) -> usize {
        self.m.dim()
    }

    /// Minimum eigenvalue (full Hermitian eigendecomposition).
    pub fn min_eigenvalue(&self) -> f64 {
        self.m.hermitian_eig().0[0]
    }
}

/// Reusable buffers for [`project_in_place`].
pub(crate) struct ProjectionScratch {
    chol: Vec<Complex64>,
}

impl ProjectionScratch {
    pub(crate) fn new(dim: usize) -> Self {
        ProjectionScratch {
            chol: vec![ZERO; dim * dim],
        }
    }
}

/// In-place projection core: Hermitize, restore positivity if violated beyond
/// `tol.psd` (by eigenvalue clipping), renormalize the trace to exactly 1.
pub(crate) fn project_in_place(
    m: &mut ComplexMatrix,
    tol: &Tolerances,
    scratch: &mut ProjectionScratch,
) -> Result<(), Error> {
    m.hermitize_in_place();
    let tr = m.trace().re;
    if !tr.is_finite() {
        return Err(Error::NonFinite);
    }
    if tr <= 0.0 {
        return Err(Error::NonPositiveTrace(tr));
    }
    // Fast path: already PSD within tolerance (relative to the state's scale) —
    // renormalizing the trace is all that is needed.
    let n = m.dim();
    if linalg::psd_within(m.as_slice(), n, tol.psd * tr, &mut scratch.chol) {
        let inv = Complex64::new(1.0 / tr, 0.0);
        for z in m.as_mut_slice() {
            *z *= inv;
        }
        return Ok(());
    }
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    // Slow path: clip negative eigenvalues to zero and rebuild.
    let (vals, vecs) = m.hermitian_eig();
    let clipped: Vec<f64> = vals.iter().map(|&l| l.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if !(total > 0.0) {
        return Err(Error::NonPositiveTrace(total));
    }
    for i in 0..n {
        for j in 0..n {
            let mut s = ZERO;
            for (k, &lk) in clipped.iter().enumerate() {
                if lk > 0.0 {
                    s += vecs[(i, k)] * vecs[(j, k)].conj() * (lk / total);
                }
            }
            m[(i, j)] = s;
        }
    }
    m.hermitize_in_place();
    Ok(())
}

/// Maps an arbitrary matrix to the closest-in-spirit valid density matrix:
/// Hermitize via (M + M†)/2, clip negative eigenvalues to 0 (when positivity
/// is violated beyond `tol.psd`), renormalize the trace to 1.
///
/// Acts as the identity (within tolerance) on inputs already in the state
/// space. Errors signal integrator blow-up: non-finite entries or a
/// non-positive trace after clipping.
pub fn project_to_density(m: &ComplexMatrix, tol: &Tolerances) -> Result<DensityMatrix, Error> {
    let mut work = m.clone();
    let mut scratch = ProjectionScratch::new(m.dim());
    project_in_place(&mut work, tol, &mut scratch)?;
    Ok(DensityMatrix::new_unchecked(work))
}

/// Tr[ρ ρ_f] for a pure target ρ_f — the fidelity-like overlap the feedback
/// laws monitor. Real part of the trace inner product; the imaginary part is
/// checked to be numerical noise in debug builds.
pub fn fidelity_to_target(rho: &DensityMatrix, target: &DensityMatrix) -> f64 {
    let ip = trace_inner(rho.matrix(), target.matrix());
    debug_assert!(ip.im.abs() < 1e-7, "fidelity should be real, got {ip}");
    ip.re
}

/// Haar-random pure state ψψ† (normalized complex Gaussian vector).
pub fn sample_pure<R: rand::Rng>(dim: usize, rng: &mut R) -> DensityMatrix {
    use rand::RngExt;
    let psi: Vec<Complex64> = (0..dim)
        .map(|_| {
            Complex64::new(
                rng.sample(rand_distr::StandardNormal),
                rng.sample(rand_distr::StandardNormal),
            )
        })
        .collect();
    DensityMatrix::pure_from_vector(&psi).expect("Gaussian vector is nonzero a.s.")
}

/// Random full-rank mixed state ρ = MM†/Tr[MM†] with complex Gaussian M.
pub fn sample_mixed<R: rand::Rng>(dim: usize, rng: &mut R) -> DensityMatrix {
    use rand::RngExt;
    let m = ComplexMatrix::from_fn(dim, |_, _| {
        Complex64::new(
            rng.sample(rand_distr::StandardNormal),
            rng.sample(rand_distr::StandardNormal),
        )
    });
    let w = m.mul(&m.adjoint());
    let tr = w.trace().re;
    DensityMatrix::new_unchecked(w.scale(Complex64::new(1.0 / tr, 0.0)))
}

/// Random state drawing from the three families the stability arguments care
/// about: interior (mixed), boundary (pure), and basis eigenstates.
pub fn sample_state<R: rand::Rng>(dim: usize, rng: &mut R) -> DensityMatrix {
    use rand::RngExt;
    match rng.random_range(0..3u8) {
        0 => sample_mixed(dim, rng),
        1 => sample_pure(dim, rng),
        _ => DensityMatrix::eigenstate(dim, rng.random_range(0..dim)),
    }
}
