//! Integration of the controlled filtering equation and its linear
//! (unnormalized) counterpart.
//!
//! The nonlinear filter evolves as
//!
//! dρ = −i[F + Σᵢ uᵢGᵢ, ρ] dt + (cρc† − ½(c†cρ + ρc†c)) dt
//!      + √η (cρ + ρc† − Tr[(c+c†)ρ] ρ) dW,
//!
//! and the linear form replaces the last term by √η (cρ̃ + ρ̃c†) dy with the
//! observation increment dy = dW + √η Tr[(c+c†)ρ] dt. The scheme is
//! Euler–Maruyama with a per-step projection back onto the state space, which
//! restores the positivity the raw discretization violates at O(dt).
//!
//! Simulations are driven by synthesized innovations: dW is drawn directly
//! from a per-trajectory PRNG stream ([`trajectory_rng`]) and dy is derived
//! for logging; no separate "true system" is simulated, since the filter is
//! assumed correctly initialized.

use crate::operators::{angular_momentum_ops, two_qubit_ops, SpinParams};
use crate::qstate::{
    self, frobenius_norm, lindblad_dissipator, measurement_superop, mul_into, ComplexMatrix,
    DensityMatrix, Error, ProjectionScratch, Tolerances,
};
use alloc::format;
use alloc::vec::Vec;
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// The fixed data of a controlled filtering problem: drift Hamiltonian F,
/// control Hamiltonians Gᵢ, coupling operator c and detector efficiency η.
#[derive(Debug, Clone)]
pub struct SystemSpec {
    f: ComplexMatrix,
    controls: Vec<ComplexMatrix>,
    c: ComplexMatrix,
    eta: f64,
    sqrt_eta: f64,
    f_is_zero: bool,
    // Real diagonal of c when c is real-diagonal (true for c = F_z in both
    // applications); enables the allocation-free fast path in `Stepper`.
    c_diag: Option<Vec<f64>>,
    c_adj: ComplexMatrix,
    c_plus_adj: ComplexMatrix,
}

fn hermitian_deviation(m: &ComplexMatrix) -> f64 {
    frobenius_norm(&m.sub(&m.adjoint()))
}

impl SystemSpec {
    /// Validates Hermiticity of F and the Gᵢ, dimensional consistency and
    /// 0 < η ≤ 1. The coupling c may be any operator.
    pub fn new(
        f: ComplexMatrix,
        controls: Vec<ComplexMatrix>,
        c: ComplexMatrix,
        eta: f64,
    ) -> Result<Self, Error> {
        let n = c.dim();
        if f.dim() != n || controls.iter().any(|g| g.dim() != n) {
            return Err(Error::InvalidParam("operator dimensions must all agree"));
        }
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::InvalidParam("detector efficiency must lie in (0, 1]"));
        }
        let scale = 1.0 + frobenius_norm(&f);
        if hermitian_deviation(&f) > 1e-12 * scale {
            return Err(Error::InvalidParam("drift Hamiltonian F must be Hermitian"));
        }
        for g in &controls {
            if hermitian_deviation(g) > 1e-12 * (1.0 + frobenius_norm(g)) {
                return Err(Error::InvalidParam(
                    "control Hamiltonians G_i must be Hermitian",
                ));
            }
        }
        if !f.is_finite() || !c.is_finite() || controls.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite);
        }
        let f_is_zero = f.as_slice().iter().all(|&z| z == ZERO);
        let mut c_diag = Some(Vec::with_capacity(n));
        'probe: for i in 0..n {
            for j in 0..n {
                let z = c[(i, j)];
                if i == j {
                    if z.im != 0.0 {
                        c_diag = None;
                        break 'probe;
                    }
                    c_diag.as_mut().unwrap().push(z.re);
                } else if z != ZERO {
                    c_diag = None;
                    break 'probe;
                }
            }
        }
        let c_adj = c.adjoint();
        let c_plus_adj = c.add(&c_adj);
        Ok(SystemSpec {
            f,
            controls,
            c,
            eta,
            sqrt_eta: crate::fm::sqrt(eta),
            f_is_zero,
            c_diag,
            c_adj,
            c_plus_adj,
        })
    }

    /// Spin-J system: F = 0, a single control G = F_y, coupling c = F_z.
    pub fn spin(p: &SpinParams, eta: f64) -> Result<Self, Error> {
        let (fy, fz) = angular_momentum_ops(p);
        Self::new(ComplexMatrix::zeros(p.dim()), alloc::vec![fy], fz, eta)
    }

    /// Two-qubit system: F = 0, controls (σ_y¹, σ_y²), coupling c = F_z.
    pub fn two_qubit(eta: f64) -> Result<Self, Error> {
        let ops = two_qubit_ops();
        Self::new(
            ComplexMatrix::zeros(4),
            alloc::vec![ops.sy1, ops.sy2],
            ops.fz,
            eta,
        )
    }

    /// Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.c.dim()
    }

    /// Drift Hamiltonian F.
    pub fn f(&self) -> &ComplexMatrix {
        &self.f
    }

    /// Control Hamiltonians Gᵢ.
    pub fn controls(&self) -> &[ComplexMatrix] {
        &self.controls
    }

    /// Coupling operator c.
    pub fn c(&self) -> &ComplexMatrix {
        &self.c
    }

    /// Detector efficiency η.
    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Tr[(c + c†) ρ], the observation drift coefficient (real).
    pub fn measurement_trace(&self, rho: &ComplexMatrix) -> f64 {
        if let Some(d) = &self.c_diag {
            let mut s = 0.0;
            for (i, di) in d.iter().enumerate() {
                s += 2.0 * di * rho[(i, i)].re;
            }
            s
        } else {
            self.c_plus_adj.mul(rho).trace().re
        }
    }

    fn assert_channels(&self, u: &[f64]) {
        assert_eq!(
            u.len(),
            self.controls.len(),
            "one control value per control channel"
        );
    }
}

/// Inputs for one Euler–Maruyama step.
#[derive(Debug, Clone, Copy)]
pub struct StepInput<'a> {
    /// Current state.
    pub rho: &'a DensityMatrix,
    /// Control values, one per channel.
    pub u: &'a [f64],
    /// Wiener increment (units of √time).
    pub dw: f64,
    /// Time increment, > 0.
    pub dt: f64,
}

/// Observation increment dy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservationIncrement {
    /// dy = dW + √η Tr[(c+c†)ρ] dt.
    pub dy: f64,
}

/// Deterministic drift of the filter: −i[F + Σᵢ uᵢGᵢ, ρ] + 𝒟[c]ρ.
/// Hermitian and traceless on valid input.
pub fn filter_drift(spec: &SystemSpec, rho: &DensityMatrix, u: &[f64]) -> ComplexMatrix {
    spec.assert_channels(u);
    let mut h = spec.f.clone();
    for (ui, g) in u.iter().zip(&spec.controls) {
        h = h.add(&g.scale(Complex64::new(*ui, 0.0)));
    }
    let comm = qstate::commutator(&h, rho.matrix());
    let diss = lindblad_dissipator(&spec.c, rho.matrix());
    comm.scale(Complex64::new(0.0, -1.0)).add(&diss)
}

/// Diffusion coefficient of the filter: √η (cρ + ρc† − Tr[(c+c†)ρ] ρ).
pub fn filter_diffusion(spec: &SystemSpec, rho: &DensityMatrix) -> ComplexMatrix {
    measurement_superop(&spec.c, rho.matrix(), spec.eta)
}

/// One Euler–Maruyama step of the nonlinear filter followed by projection
/// back onto the state space.
pub fn filter_step(
    spec: &SystemSpec,
    s: StepInput<'_>,
    tol: &Tolerances,
) -> Result<DensityMatrix, Error> {
    if !(s.dt > 0.0) || !s.dt.is_finite() {
        return Err(Error::InvalidParam("dt must be positive and finite"));
    }
    if !s.dw.is_finite() || s.u.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParam("controls and dW must be finite"));
    }
    let drift = filter_drift(spec, s.rho, s.u);
    let diff = filter_diffusion(spec, s.rho);
    let next = s
        .rho
        .matrix()
        .add(&drift.scale(Complex64::new(s.dt, 0.0)))
        .add(&diff.scale(Complex64::new(s.dw, 0.0)));
    qstate::project_to_density(&next, tol)
}

/// One Euler–Maruyama step of the linear (unnormalized) equation driven by
/// the observation increment dy:
/// ρ̃' = ρ̃ + (−i[H,ρ̃] + 𝒟[c]ρ̃) dt + √η (cρ̃ + ρ̃c†) dy.
///
/// Linear in ρ̃; an error is returned if the discretization ever drives the
/// trace nonpositive.
pub fn zakai_step(
    spec: &SystemSpec,
    rho_tilde: &ComplexMatrix,
    u: &[f64],
    dy: f64,
    dt: f64,
) -> Result<ComplexMatrix, Error> {
    spec.assert_channels(u);
    assert_eq!(rho_tilde.dim(), spec.dim(), "dimension mismatch");
    if !dy.is_finite() || !dt.is_finite() || dt < 0.0 {
        return Err(Error::InvalidParam("dy must be finite and dt nonnegative"));
    }
    let mut h = spec.f.clone();
    for (ui, g) in u.iter().zip(&spec.controls) {
        h = h.add(&g.scale(Complex64::new(*ui, 0.0)));
    }
    let comm = qstate::commutator(&h, rho_tilde).scale(Complex64::new(0.0, -1.0));
    let diss = lindblad_dissipator(&spec.c, rho_tilde);
    let meas = spec
        .c
        .mul(rho_tilde)
        .add(&rho_tilde.mul(&spec.c_adj))
        .scale(Complex64::new(spec.sqrt_eta, 0.0));
    let next = rho_tilde
        .add(&comm.add(&diss).scale(Complex64::new(dt, 0.0)))
        .add(&meas.scale(Complex64::new(dy, 0.0)));
    let tr = next.trace().re;
    if !tr.is_finite() {
        return Err(Error::NonFinite);
    }
    if tr <= 0.0 {
        return Err(Error::NonPositiveTrace(tr));
    }
    Ok(next)
}

/// Converts an innovation increment to the observation increment:
/// dy = dW + √η Tr[(c+c†)ρ] dt.
pub fn innovation_to_observation(
    spec: &SystemSpec,
    rho: &DensityMatrix,
    dw: f64,
    dt: f64,
) -> ObservationIncrement {
    ObservationIncrement {
        dy: dw + spec.sqrt_eta * spec.measurement_trace(rho.matrix()) * dt,
    }
}

/// PRNG stream for one trajectory: ChaCha8 keyed by the master seed with the
/// trajectory index as the stream number. Streams for distinct indices are
/// statistically independent, and the mapping is stable under any ensemble
/// scheduling order.
pub fn trajectory_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// −i[H, m]·w accumulated into `delta`, exploiting Hermiticity of both H and
/// m: [H, m] = Hm − (Hm)†. `work` receives Hm.
fn accumulate_commutator(
    h: &ComplexMatrix,
    m: &ComplexMatrix,
    work: &mut ComplexMatrix,
    delta: &mut ComplexMatrix,
    w: f64,
) {
    let n = m.dim();
    mul_into(h, m, work);
    let wz = Complex64::new(0.0, -w);
    for i in 0..n {
        for j in 0..n {
            let hm = work[(i, j)];
            let hm_dag = work[(j, i)].conj();
            delta[(i, j)] += wz * (hm - hm_dag);
        }
    }
}

/// Reusable integrator holding preallocated scratch. Semantically identical
/// to [`filter_step`]/[`zakai_step`] (asserted by tests) but allocation-free
/// per step when c is real-diagonal, as it is for both built-in systems.
pub struct Stepper {
    spec: SystemSpec,
    tol: Tolerances,
    h: ComplexMatrix,
    work: ComplexMatrix,
    delta: ComplexMatrix,
    proj: ProjectionScratch,
}

impl Stepper {
    /// Builds an integrator for `spec` with projection tolerances `tol`.
    pub fn new(spec: SystemSpec, tol: Tolerances) -> Self {
        let n = spec.dim();
        Stepper {
            spec,
            tol,
            h: ComplexMatrix::zeros(n),
            work: ComplexMatrix::zeros(n),
            delta: ComplexMatrix::zeros(n),
            proj: ProjectionScratch::new(n),
        }
    }

    /// The system being integrated.
    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    /// Assembles H = F + Σᵢ uᵢGᵢ into the scratch Hamiltonian; returns false
    /// if H = 0 (the commutator can then be skipped entirely).
    fn load_hamiltonian(&mut self, u: &[f64]) -> bool {
        let mut any = false;
        self.h.as_mut_slice().fill(ZERO);
        if !self.spec.f_is_zero {
            self.h
                .as_mut_slice()
                .copy_from_slice(self.spec.f.as_slice());
            any = true;
        }
        for (ui, g) in u.iter().zip(&self.spec.controls) {
            if *ui != 0.0 {
                let z = Complex64::new(*ui, 0.0);
                for (h, gij) in self.h.as_mut_slice().iter_mut().zip(g.as_slice()) {
                    *h += z * gij;
                }
                any = true;
            }
        }
        any
    }

    /// One filter step in place: ρ ← Π(ρ + drift·dt + diffusion·dW). On error
    /// the state is left in an unspecified (possibly invalid) condition and
    /// must be discarded.
    pub fn step_in_place(
        &mut self,
        rho: &mut DensityMatrix,
        u: &[f64],
        dw: f64,
        dt: f64,
    ) -> Result<(), Error> {
        self.spec.assert_channels(u);
        if !(dt > 0.0) || !dt.is_finite() || !dw.is_finite() || u.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParam(
                "dt, dW and controls must be finite, dt > 0",
            ));
        }
        let n = self.spec.dim();
        self.delta.as_mut_slice().fill(ZERO);
        if self.load_hamiltonian(u) {
            accumulate_commutator(&self.h, rho.matrix(), &mut self.work, &mut self.delta, dt);
        }
        if let Some(d) = &self.spec.c_diag {
            // Fast path: dissipator and diffusion are entrywise masks.
            let mut tr = 0.0;
            for (i, di) in d.iter().enumerate() {
                tr += 2.0 * di * rho.matrix()[(i, i)].re;
            }
            let se = self.spec.sqrt_eta;
            for i in 0..n {
                for j in 0..n {
                    let rij = rho.matrix()[(i, j)];
                    let gap = d[i] - d[j];
                    let mask = -0.5 * gap * gap * dt + se * (d[i] + d[j] - tr) * dw;
                    self.delta[(i, j)] += rij * mask;
                }
            }
        } else {
            let drift = lindblad_dissipator(&self.spec.c, rho.matrix());
            let diff = measurement_superop(&self.spec.c, rho.matrix(), self.spec.eta);
            for ((dl, dr), df) in self
                .delta
                .as_mut_slice()
                .iter_mut()
                .zip(drift.as_slice())
                .zip(diff.as_slice())
            {
                *dl += dr * dt + df * dw;
            }
        }
        let m = rho.matrix_mut();
        for (x, dx) in m.as_mut_slice().iter_mut().zip(self.delta.as_slice()) {
            *x += dx;
        }
        qstate::project_in_place(m, &self.tol, &mut self.proj)
    }

    /// One linear (Zakai) step in place on a Hermitian unnormalized state.
    pub fn zakai_step_in_place(
        &mut self,
        rho_tilde: &mut ComplexMatrix,
        u: &[f64],
        dy: f64,
        dt: f64,
    ) -> Result<(), Error> {
        self.spec.assert_channels(u);
        if !dy.is_finite() || !dt.is_finite() || dt < 0.0 {
            return Err(Error::InvalidParam("dy must be finite and dt nonnegative"));
        }
        let n = self.spec.dim();
        self.delta.as_mut_slice().fill(ZERO);
        if self.load_hamiltonian(u) {
            accumulate_commutator(&self.h, rho_tilde, &mut self.work, &mut self.delta, dt);
        }
        if let Some(d) = &self.spec.c_diag {
            let se = self.spec.sqrt_eta;
            for i in 0..n {
                for j in 0..n {
                    let rij = rho_tilde[(i, j)];
                    let gap = d[i] - d[j];
                    let mask = -0.5 * gap * gap * dt + se * (d[i] + d[j]) * dy;
                    self.delta[(i, j)] += rij * mask;
                }
            }
        } else {
            let diss = lindblad_dissipator(&self.spec.c, rho_tilde);
            let meas = self
                .spec
                .c
                .mul(rho_tilde)
                .add(&rho_tilde.mul(&self.spec.c_adj))
                .scale(Complex64::new(self.spec.sqrt_eta, 0.0));
            for ((dl, ds), dm) in self
                .delta
                .as_mut_slice()
                .iter_mut()
                .zip(diss.as_slice())
                .zip(meas.as_slice())
            {
                *dl += ds * dt + dm * dy;
            }
        }
        for (x, dx) in rho_tilde
            .as_mut_slice()
            .iter_mut()
            .zip(self.delta.as_slice())
        {
            *x += dx;
        }
        let tr = rho_tilde.trace().re;
        if !tr.is_finite() {
            return Err(Error::NonFinite);
        }
        if tr <= 0.0 {
            return Err(Error::NonPositiveTrace(tr));
        }
        Ok(())
    }

    /// Runs `steps` filter steps under constant control with increments drawn
    /// from `rng`, wrapping any failure with the step index.
    pub fn run<R: rand::Rng>(
        &mut self,
        rho: &mut DensityMatrix,
        u: &[f64],
        dt: f64,
        steps: usize,
        rng: &mut R,
    ) -> Result<(), Error> {
        let sqrt_dt = crate::fm::sqrt(dt);
        for step in 0..steps {
            let z: f64 = rng.sample(rand_distr::StandardNormal);
            let dw = z * sqrt_dt;
            self.step_in_place(rho, u, dw, dt).map_err(|e| Error::Step {
                source: alloc::boxed::Box::new(e),
                context: format!("step {step} of {steps}, t = {:.6}", step as f64 * dt),
            })?;
        }
        Ok(())
    }
}
