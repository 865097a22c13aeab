//! Feedback laws: the fidelity-based feedback controls, the constant drive,
//! and the three-branch hysteresis switching between them.
//!
//! The switching law has three branches, keyed to the target overlap
//! Tr[ρρ_f]: feedback when the overlap is at least γ, constant drive when it
//! is at most γ/2, and inside the band (γ/2, γ) whichever law was active when
//! the band was last entered. The hysteresis guarantees every
//! feedback-to-drive switch passes through the bottom of the band, which is
//! what makes the switch count almost surely finite.

use crate::operators::{TargetKind, TargetSpec};
use crate::qstate::{commutator, fidelity_to_target, trace_inner, ComplexMatrix, DensityMatrix, Error};
use alloc::vec::Vec;
use num_complex::Complex64;

/// Which law the switching controller is currently applying.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Fidelity-based feedback (branch 1 / branch 3 from above).
    Feedback,
    /// Constant drive away from the bad attractors (branch 2 / branch 3 from below).
    Drive,
}

/// How the hysteresis band (γ/2, γ) was last entered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LastEntry {
    /// Entered through the upper boundary (fidelity = γ).
    FromAbove,
    /// Entered through the lower boundary (fidelity = γ/2).
    FromBelow,
    /// Currently outside the band.
    NotInBand,
}

/// Hysteresis controller state.
///
/// Invariant (re-established by [`hysteresis_transition`] on every step):
/// `regime == Feedback` iff the fidelity is ≥ γ, or it lies in the band and
/// `last_entry == FromAbove`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SwitchingState {
    /// Active branch.
    pub regime: Regime,
    /// Band entry direction.
    pub last_entry: LastEntry,
}

impl Default for SwitchingState {
    /// Drive with no band history: the conservative start, so a trajectory
    /// that begins inside the band drives until it reaches γ.
    fn default() -> Self {
        SwitchingState {
            regime: Regime::Drive,
            last_entry: LastEntry::NotInBand,
        }
    }
}

/// Switching-law parameters: hysteresis level γ ∈ (0, 1) and the target.
#[derive(Debug, Clone)]
pub struct ControlParams {
    gamma: f64,
    target: TargetSpec,
}

impl ControlParams {
    /// Requires 0 < γ < 1 so the band [γ/2, γ] is nonempty.
    pub fn new(gamma: f64, target: TargetSpec) -> Result<Self, Error> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidParam("gamma must lie strictly in (0, 1)"));
        }
        Ok(ControlParams { gamma, target })
    }

    /// Hysteresis level γ.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// The target state.
    pub fn target(&self) -> &TargetSpec {
        &self.target
    }
}

/// Advances the hysteresis state for an observed fidelity.
///
/// Boundary values are classified with the inequalities as stated (fidelity
/// ≥ γ is branch 1, ≤ γ/2 is branch 2); band membership is therefore the open
/// interval (γ/2, γ). Crossings are detected at step granularity.
pub fn hysteresis_transition(fidelity: f64, state: SwitchingState, gamma: f64) -> SwitchingState {
    if fidelity >= gamma {
        SwitchingState {
            regime: Regime::Feedback,
            last_entry: LastEntry::NotInBand,
        }
    } else if fidelity <= gamma / 2.0 {
        SwitchingState {
            regime: Regime::Drive,
            last_entry: LastEntry::NotInBand,
        }
    } else {
        // In the band: keep the stored entry direction, or derive it from the
        // regime that was active when the band was entered.
        let entry = match state.last_entry {
            LastEntry::NotInBand => match state.regime {
                Regime::Feedback => LastEntry::FromAbove,
                Regime::Drive => LastEntry::FromBelow,
            },
            e => e,
        };
        let regime = match entry {
            LastEntry::FromAbove => Regime::Feedback,
            // `entry` was just derived from a band observation, so NotInBand
            // cannot occur; treat it as Drive defensively.
            LastEntry::FromBelow | LastEntry::NotInBand => Regime::Drive,
        };
        SwitchingState {
            regime,
            last_entry: entry,
        }
    }
}

/// The spin feedback law u = −Tr(i[F_y, ρ] ρ_f).
pub fn u_feedback_spin(fy: &ComplexMatrix, rho: &DensityMatrix, target: &TargetSpec) -> f64 {
    let c = commutator(fy, rho.matrix()).scale(Complex64::new(0.0, 1.0));
    let u = -trace_inner(&c.adjoint(), target.rho_f().matrix());
    debug_assert!(u.im.abs() < 1e-9, "feedback control should be real");
    u.re
}

/// One evaluation of the spin switching law: advances the hysteresis state on
/// the current fidelity, then applies the branch law (feedback value or the
/// constant drive u = 1).
pub fn switching_control(
    fy: &ComplexMatrix,
    rho: &DensityMatrix,
    state: SwitchingState,
    params: &ControlParams,
) -> (f64, SwitchingState) {
    let fid = fidelity_to_target(rho, params.target().rho_f());
    let next = hysteresis_transition(fid, state, params.gamma());
    let u = match next.regime {
        Regime::Feedback => u_feedback_spin(fy, rho, params.target()),
        Regime::Drive => 1.0,
    };
    (u, next)
}

/// Tr(i[a, ρ] ρ_f), the feedback-correction term of the two-qubit laws.
fn correction_term(a: &ComplexMatrix, rho: &DensityMatrix, target: &TargetSpec) -> f64 {
    let c = commutator(a, rho.matrix()).scale(Complex64::new(0.0, 1.0));
    let t = trace_inner(&c.adjoint(), target.rho_f().matrix());
    debug_assert!(t.im.abs() < 1e-9);
    t.re
}

/// One evaluation of the two-qubit switching law.
///
/// Feedback branch: u₁ = 1 − Tr(i[σ_y¹,ρ]ρ_f) and u₂ = ±1 − Tr(i[σ_y²,ρ]ρ_f),
/// with +1 for the antisymmetric target and −1 for the symmetric one. Drive
/// branch: (u₁, u₂) = (1, 0).
pub fn two_qubit_control(
    sy1: &ComplexMatrix,
    sy2: &ComplexMatrix,
    rho: &DensityMatrix,
    state: SwitchingState,
    params: &ControlParams,
) -> ([f64; 2], SwitchingState) {
    assert_eq!(rho.dim(), 4, "two-qubit law needs a 4-dimensional state");
    let offset = match params.target().kind() {
        TargetKind::TwoQubitAntisymmetric => 1.0,
        TargetKind::TwoQubitSymmetric => -1.0,
        TargetKind::SpinEigenstate(_) => {
            panic!("two-qubit law requires a two-qubit target")
        }
    };
    let fid = fidelity_to_target(rho, params.target().rho_f());
    let next = hysteresis_transition(fid, state, params.gamma());
    let u = match next.regime {
        Regime::Feedback => [
            1.0 - correction_term(sy1, rho, params.target()),
            offset - correction_term(sy2, rho, params.target()),
        ],
        Regime::Drive => [1.0, 0.0],
    };
    (u, next)
}

/// The trivial control u = 0.
pub fn zero_control() -> f64 {
    0.0
}

/// The constant control u = k.
pub fn constant_control(k: f64) -> f64 {
    k
}

/// A complete control policy, as selected by configuration.
#[derive(Debug, Clone)]
pub enum ControlLaw {
    /// u ≡ 0 on every channel (free evolution / collapse experiments).
    Zero,
    /// Constant values, one per channel.
    Constant(Vec<f64>),
    /// Spin feedback law applied unconditionally (no hysteresis).
    FeedbackSpin(TargetSpec),
    /// Spin three-branch switching law.
    SwitchingSpin(ControlParams),
    /// Two-qubit feedback-branch laws applied unconditionally.
    FeedbackTwoQubit(TargetSpec),
    /// Two-qubit three-branch switching law.
    SwitchingTwoQubit(ControlParams),
}

impl ControlLaw {
    /// Number of control channels the law drives.
    pub fn channels(&self) -> usize {
        match self {
            ControlLaw::Zero => 0, // adapts to the system's channel count
            ControlLaw::Constant(u) => u.len(),
            ControlLaw::FeedbackSpin(_) | ControlLaw::SwitchingSpin(_) => 1,
            ControlLaw::FeedbackTwoQubit(_) | ControlLaw::SwitchingTwoQubit(_) => 2,
        }
    }

    /// The target the law steers toward, if it has one.
    pub fn target(&self) -> Option<&TargetSpec> {
        match self {
            ControlLaw::Zero | ControlLaw::Constant(_) => None,
            ControlLaw::FeedbackSpin(t) | ControlLaw::FeedbackTwoQubit(t) => Some(t),
            ControlLaw::SwitchingSpin(p) | ControlLaw::SwitchingTwoQubit(p) => Some(p.target()),
        }
    }
}

/// Stateful, allocation-free evaluator for a [`ControlLaw`] against a fixed
/// system. Produces the same values as the public law functions (asserted by
/// tests) but reuses scratch buffers and precomputed target contractions.
pub struct Controller {
    law: ControlLaw,
    state: SwitchingState,
    u: Vec<f64>,
    // v_f and the precomputed G_i v_f for the fast path
    // u_fb = ±1·offset − Tr(i[G,ρ]ρ_f), with Tr(i[G,ρ]v_fv_f†) = −2 Im(v_f†Gρv_f).
    v: Vec<Complex64>,
    gv: Vec<Vec<Complex64>>,
    w: Vec<Complex64>,
}

impl Controller {
    /// Validates the law against the system shape (channel count, dimension,
    /// target kind) and precomputes the per-channel contractions.
    pub fn new(
        law: ControlLaw,
        controls: &[ComplexMatrix],
        dim: usize,
    ) -> Result<Self, Error> {
        let channels = controls.len();
        match &law {
            ControlLaw::Zero => {}
            ControlLaw::Constant(u) => {
                if u.len() != channels {
                    return Err(Error::InvalidParam(
                        "constant control needs one value per channel",
                    ));
                }
                if u.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidParam("constant control must be finite"));
                }
            }
            ControlLaw::FeedbackSpin(_) | ControlLaw::SwitchingSpin(_) => {
                let target = law.target().expect("spin laws carry a target");
                if !matches!(target.kind(), TargetKind::SpinEigenstate(_)) {
                    return Err(Error::InvalidParam(
                        "spin law requires a spin eigenstate target",
                    ));
                }
                if channels != 1 {
                    return Err(Error::InvalidParam("spin law drives exactly one channel"));
                }
                if target.rho_f().dim() != dim {
                    return Err(Error::InvalidParam("target dimension must match system"));
                }
            }
            ControlLaw::FeedbackTwoQubit(_) | ControlLaw::SwitchingTwoQubit(_) => {
                if channels != 2 || dim != 4 {
                    return Err(Error::InvalidParam(
                        "two-qubit law needs two channels in dimension 4",
                    ));
                }
                match law.target().map(|t| t.kind()) {
                    Some(TargetKind::TwoQubitAntisymmetric)
                    | Some(TargetKind::TwoQubitSymmetric) => {}
                    _ => {
                        return Err(Error::InvalidParam(
                            "two-qubit law requires a two-qubit target",
                        ))
                    }
                }
            }
        }
        let v: Vec<Complex64> = law
            .target()
            .map(|t| t.v_f().to_vec())
            .unwrap_or_default();
        let gv = if v.is_empty() {
            Vec::new()
        } else {
            controls.iter().map(|g| g.matvec(&v)).collect()
        };
        Ok(Controller {
            law,
            state: SwitchingState::default(),
            u: alloc::vec![0.0; channels],
            v,
            gv,
            w: alloc::vec![Complex64::new(0.0, 0.0); dim],
        })
    }

    /// The law being evaluated.
    pub fn law(&self) -> &ControlLaw {
        &self.law
    }

    /// Current hysteresis state (meaningful for the switching laws).
    pub fn state(&self) -> SwitchingState {
        self.state
    }

    /// Active regime; the non-hysteretic laws always report Feedback.
    pub fn regime(&self) -> Regime {
        match self.law {
            ControlLaw::SwitchingSpin(_) | ControlLaw::SwitchingTwoQubit(_) => self.state.regime,
            _ => Regime::Feedback,
        }
    }

    /// Resets the hysteresis state (for reuse across trajectories).
    pub fn reset(&mut self) {
        self.state = SwitchingState::default();
    }

    /// w ← ρ v_f. Everything the laws need is a contraction against w:
    /// fidelity Tr[ρρ_f] = v_f†w, correction Tr(i[G,ρ]ρ_f) = −2 Im((Gv_f)†w).
    fn load_w(&mut self, rho: &DensityMatrix) {
        let m = rho.matrix();
        for (i, wi) in self.w.iter_mut().enumerate() {
            let mut s = Complex64::new(0.0, 0.0);
            for (j, vj) in self.v.iter().enumerate() {
                s += m[(i, j)] * vj;
            }
            *wi = s;
        }
    }

    /// Tr(i[G_channel, ρ] ρ_f) from the loaded w.
    fn correction(&self, channel: usize) -> f64 {
        let mut ip = Complex64::new(0.0, 0.0);
        for (g, w) in self.gv[channel].iter().zip(&self.w) {
            ip += g.conj() * w;
        }
        -2.0 * ip.im
    }

    /// Tr[ρρ_f] from the loaded w.
    fn fidelity(&self) -> f64 {
        let mut s = Complex64::new(0.0, 0.0);
        for (vi, wi) in self.v.iter().zip(&self.w) {
            s += vi.conj() * wi;
        }
        s.re
    }

    /// Computes the control vector for the current state and advances the
    /// hysteresis; returns the per-channel values.
    pub fn update(&mut self, rho: &DensityMatrix) -> &[f64] {
        match &self.law {
            ControlLaw::Zero => {
                for u in self.u.iter_mut() {
                    *u = 0.0;
                }
            }
            ControlLaw::Constant(k) => {
                self.u.copy_from_slice(k);
            }
            ControlLaw::FeedbackSpin(_) => {
                self.load_w(rho);
                self.u[0] = -self.correction(0);
            }
            ControlLaw::SwitchingSpin(p) => {
                let gamma = p.gamma();
                self.load_w(rho);
                self.state = hysteresis_transition(self.fidelity(), self.state, gamma);
                self.u[0] = match self.state.regime {
                    Regime::Feedback => -self.correction(0),
                    Regime::Drive => 1.0,
                };
            }
            ControlLaw::FeedbackTwoQubit(t) => {
                let offset = match t.kind() {
                    TargetKind::TwoQubitAntisymmetric => 1.0,
                    _ => -1.0,
                };
                self.load_w(rho);
                self.u[0] = 1.0 - self.correction(0);
                self.u[1] = offset - self.correction(1);
            }
            ControlLaw::SwitchingTwoQubit(p) => {
                let gamma = p.gamma();
                let offset = match p.target().kind() {
                    TargetKind::TwoQubitAntisymmetric => 1.0,
                    _ => -1.0,
                };
                self.load_w(rho);
                self.state = hysteresis_transition(self.fidelity(), self.state, gamma);
                match self.state.regime {
                    Regime::Feedback => {
                        self.u[0] = 1.0 - self.correction(0);
                        self.u[1] = offset - self.correction(1);
                    }
                    Regime::Drive => {
                        self.u[0] = 1.0;
                        self.u[1] = 0.0;
                    }
                }
            }
        }
        &self.u
    }

    /// The control vector from the most recent [`update`](Self::update).
    pub fn u(&self) -> &[f64] {
        &self.u
    }
}
