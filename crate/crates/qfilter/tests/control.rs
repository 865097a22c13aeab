//! Control-law oracles: hand-evaluated feedback values, three-branch
//! switching behavior at constructed fidelity levels (including the closed
//! boundaries of the hysteresis band), magnitude bounds, and equivalence of
//! the stateful `Controller` with the pure law functions.

use num_complex::Complex64;
use qfilter::control::{
    constant_control, switching_control, two_qubit_control, u_feedback_spin, zero_control,
    ControlLaw, ControlParams, Controller, LastEntry, Regime, SwitchingState,
};
use qfilter::dynamics::trajectory_rng;
use qfilter::operators::{
    angular_momentum_ops, target_state, two_qubit_ops, SpinParams, TargetKind, TargetSpec,
};
use qfilter::qstate::{
    commutator, frobenius_norm, sample_state, trace_inner, ComplexMatrix, DensityMatrix,
    Tolerances,
};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn spin_target(two_j: u32, m: usize) -> TargetSpec {
    target_state(
        TargetKind::SpinEigenstate(m),
        Some(&SpinParams::new(two_j).unwrap()),
    )
    .unwrap()
}

/// diag state with fidelity exactly `f` to the spin-1 target m = 2.
fn spin1_state_with_fidelity(f: f64) -> DensityMatrix {
    let m = ComplexMatrix::from_real_diag(&[1.0 - f, 0.0, f]);
    DensityMatrix::new(m, &Tolerances::default()).unwrap()
}

/// Hand evaluation of Tr(i[a, ρ] ρ_f) with the generic matrix ops.
fn correction_oracle(a: &ComplexMatrix, rho: &DensityMatrix, target: &TargetSpec) -> f64 {
    let k = commutator(a, rho.matrix()).scale(c(0.0, 1.0));
    trace_inner(&k.adjoint(), target.rho_f().matrix()).re
}

#[test]
fn feedback_vanishes_at_stationary_states() {
    let p = SpinParams::new(2).unwrap();
    let (fy, _) = angular_momentum_ops(&p);
    let target = spin_target(2, 2);
    assert_eq!(u_feedback_spin(&fy, target.rho_f(), &target), 0.0);
    let mixed = DensityMatrix::maximally_mixed(3);
    assert!(u_feedback_spin(&fy, &mixed, &target).abs() <= 1e-15);
    let orthogonal = DensityMatrix::eigenstate(3, 0);
    assert!(u_feedback_spin(&fy, &orthogonal, &target).abs() <= 1e-15);
}

#[test]
fn feedback_hand_value_spin_half() {
    // J = 1/2, target ψ_0 (ρ_f = diag(1,0)), ρ = ψψ† with ψ = (1,1)/√2:
    // i[F_y, ρ] = diag(1/2, −1/2), so u = −Tr(i[F_y,ρ]ρ_f) = −1/2.
    let p = SpinParams::new(1).unwrap();
    let (fy, _) = angular_momentum_ops(&p);
    let target = spin_target(1, 0);
    let psi = [c(1.0 / 2f64.sqrt(), 0.0), c(1.0 / 2f64.sqrt(), 0.0)];
    let rho = DensityMatrix::pure_from_vector(&psi).unwrap();
    assert!((u_feedback_spin(&fy, &rho, &target) - (-0.5)).abs() <= 1e-15);
}

#[test]
fn switching_branches_spin() {
    let p = SpinParams::new(2).unwrap();
    let (fy, _) = angular_momentum_ops(&p);
    let params = ControlParams::new(0.4, spin_target(2, 2)).unwrap();

    // Fidelity above γ: feedback branch, band flag cleared.
    let high = spin1_state_with_fidelity(0.93);
    let (u, s) = switching_control(&fy, &high, SwitchingState::default(), &params);
    assert_eq!(u, u_feedback_spin(&fy, &high, params.target()));
    assert_eq!(s.regime, Regime::Feedback);
    assert_eq!(s.last_entry, LastEntry::NotInBand);

    // Fidelity below γ/2: constant drive.
    let low = DensityMatrix::eigenstate(3, 0);
    let (u, s) = switching_control(&fy, &low, SwitchingState::default(), &params);
    assert_eq!(u, 1.0);
    assert_eq!(s.regime, Regime::Drive);

    // In the band the previous branch is kept, on both entry directions.
    let band = spin1_state_with_fidelity(0.3);
    let from_feedback = SwitchingState {
        regime: Regime::Feedback,
        last_entry: LastEntry::NotInBand,
    };
    let (u, s) = switching_control(&fy, &band, from_feedback, &params);
    assert_eq!(s.regime, Regime::Feedback);
    assert_eq!(s.last_entry, LastEntry::FromAbove);
    assert_eq!(u, u_feedback_spin(&fy, &band, params.target()));
    let (u, s) = switching_control(&fy, &band, SwitchingState::default(), &params);
    assert_eq!(s.regime, Regime::Drive);
    assert_eq!(s.last_entry, LastEntry::FromBelow);
    assert_eq!(u, 1.0);
}

#[test]
fn band_boundaries_are_closed() {
    // fid = γ exactly switches to feedback; fid = γ/2 exactly switches to
    // drive (both thresholds are inclusive; the open band is (γ/2, γ)).
    let p = SpinParams::new(2).unwrap();
    let (fy, _) = angular_momentum_ops(&p);
    let params = ControlParams::new(0.4, spin_target(2, 2)).unwrap();
    let at_gamma = spin1_state_with_fidelity(0.4);
    let from_drive = SwitchingState::default();
    let (_, s) = switching_control(&fy, &at_gamma, from_drive, &params);
    assert_eq!(s.regime, Regime::Feedback);
    let at_half = spin1_state_with_fidelity(0.2);
    let from_feedback = SwitchingState {
        regime: Regime::Feedback,
        last_entry: LastEntry::NotInBand,
    };
    let (u, s) = switching_control(&fy, &at_half, from_feedback, &params);
    assert_eq!(s.regime, Regime::Drive);
    assert_eq!(u, 1.0);
}

#[test]
fn two_qubit_branches() {
    let ops = two_qubit_ops();
    let anti = target_state(TargetKind::TwoQubitAntisymmetric, None).unwrap();
    let sym = target_state(TargetKind::TwoQubitSymmetric, None).unwrap();

    // At the antisymmetric target the corrections vanish: u = (1, 1).
    let params = ControlParams::new(0.4, anti.clone()).unwrap();
    let (u, s) = two_qubit_control(
        &ops.sy1,
        &ops.sy2,
        anti.rho_f(),
        SwitchingState::default(),
        &params,
    );
    assert!((u[0] - 1.0).abs() <= 1e-15 && (u[1] - 1.0).abs() <= 1e-15);
    assert_eq!(s.regime, Regime::Feedback);

    // At the symmetric target the offset flips: u = (1, −1).
    let params_sym = ControlParams::new(0.4, sym.clone()).unwrap();
    let (u, _) = two_qubit_control(
        &ops.sy1,
        &ops.sy2,
        sym.rho_f(),
        SwitchingState::default(),
        &params_sym,
    );
    assert!((u[0] - 1.0).abs() <= 1e-15 && (u[1] + 1.0).abs() <= 1e-15);

    // Orthogonal product state: fidelity 0 → drive branch (1, 0).
    let up_up = DensityMatrix::eigenstate(4, 0);
    let (u, s) = two_qubit_control(
        &ops.sy1,
        &ops.sy2,
        &up_up,
        SwitchingState::default(),
        &params,
    );
    assert_eq!(u, [1.0, 0.0]);
    assert_eq!(s.regime, Regime::Drive);

    // Band entered from below keeps the drive law.
    let mut m = anti.rho_f().matrix().scale(c(0.3, 0.0));
    m[(0, 0)] += c(0.7, 0.0);
    let band = DensityMatrix::new(m, &Tolerances::default()).unwrap();
    let (u, s) = two_qubit_control(
        &ops.sy1,
        &ops.sy2,
        &band,
        SwitchingState::default(),
        &params,
    );
    assert_eq!(u, [1.0, 0.0]);
    assert_eq!(s.regime, Regime::Drive);
    assert_eq!(s.last_entry, LastEntry::FromBelow);
}

#[test]
fn feedback_magnitude_is_bounded() {
    // |Tr(i[G,ρ]ρ_f)| ≤ ‖[G,ρ]‖_F ≤ 2‖G‖_F on density matrices.
    let p = SpinParams::new(2).unwrap();
    let (fy, _) = angular_momentum_ops(&p);
    let bound = 2.0 * frobenius_norm(&fy);
    let target = spin_target(2, 1);
    let mut rng = trajectory_rng(0xB0B, 0);
    for _ in 0..200 {
        let rho = sample_state(3, &mut rng);
        assert!(u_feedback_spin(&fy, &rho, &target).abs() <= bound + 1e-12);
    }
    let ops = two_qubit_ops();
    let anti = target_state(TargetKind::TwoQubitAntisymmetric, None).unwrap();
    let params = ControlParams::new(0.4, anti).unwrap();
    let u_bound = 1.0 + 2.0 * frobenius_norm(&ops.sy1);
    for _ in 0..200 {
        let rho = sample_state(4, &mut rng);
        let (u, _) = two_qubit_control(
            &ops.sy1,
            &ops.sy2,
            &rho,
            SwitchingState {
                regime: Regime::Feedback,
                last_entry: LastEntry::NotInBand,
            },
            &params,
        );
        assert!(u[0].abs() <= u_bound + 1e-12 && u[1].abs() <= u_bound + 1e-12);
    }
}

#[test]
fn controller_matches_pure_spin_law() {
    let p = SpinParams::new(2).unwrap();
    let (fy, _) = angular_momentum_ops(&p);
    let params = ControlParams::new(0.4, spin_target(2, 1)).unwrap();
    let mut ctl = Controller::new(
        ControlLaw::SwitchingSpin(params.clone()),
        core::slice::from_ref(&fy),
        3,
    )
    .unwrap();
    let mut state = SwitchingState::default();
    let mut rng = trajectory_rng(77, 0);
    for _ in 0..100 {
        let rho = sample_state(3, &mut rng);
        let (u_ref, next) = switching_control(&fy, &rho, state, &params);
        state = next;
        let u = ctl.update(&rho)[0];
        assert!((u - u_ref).abs() <= 1e-12, "controller drifted: {u} vs {u_ref}");
        assert_eq!(ctl.state(), state);
    }
}

#[test]
fn controller_matches_pure_two_qubit_law() {
    let ops = two_qubit_ops();
    let controls = [ops.sy1.clone(), ops.sy2.clone()];
    for kind in [TargetKind::TwoQubitAntisymmetric, TargetKind::TwoQubitSymmetric] {
        let params = ControlParams::new(0.4, target_state(kind, None).unwrap()).unwrap();
        let mut ctl =
            Controller::new(ControlLaw::SwitchingTwoQubit(params.clone()), &controls, 4).unwrap();
        let mut state = SwitchingState::default();
        let mut rng = trajectory_rng(78, 1);
        for _ in 0..100 {
            let rho = sample_state(4, &mut rng);
            let (u_ref, next) = two_qubit_control(&ops.sy1, &ops.sy2, &rho, state, &params);
            state = next;
            let u = ctl.update(&rho);
            assert!((u[0] - u_ref[0]).abs() <= 1e-12 && (u[1] - u_ref[1]).abs() <= 1e-12);
            assert_eq!(ctl.state(), state);
        }
    }
}

#[test]
fn unconditional_feedback_laws_match_oracles() {
    // FeedbackSpin ≡ u_feedback_spin; FeedbackTwoQubit ≡ offset − correction,
    // both applied regardless of fidelity.
    let p = SpinParams::new(2).unwrap();
    let (fy, _) = angular_momentum_ops(&p);
    let target = spin_target(2, 0);
    let mut ctl = Controller::new(
        ControlLaw::FeedbackSpin(target.clone()),
        core::slice::from_ref(&fy),
        3,
    )
    .unwrap();
    let ops = two_qubit_ops();
    let controls = [ops.sy1.clone(), ops.sy2.clone()];
    let sym = target_state(TargetKind::TwoQubitSymmetric, None).unwrap();
    let mut ctl2 =
        Controller::new(ControlLaw::FeedbackTwoQubit(sym.clone()), &controls, 4).unwrap();
    let mut rng = trajectory_rng(79, 2);
    for _ in 0..100 {
        let rho = sample_state(3, &mut rng);
        let u = ctl.update(&rho)[0];
        assert!((u - u_feedback_spin(&fy, &rho, &target)).abs() <= 1e-12);
        assert_eq!(ctl.regime(), Regime::Feedback);

        let rho4 = sample_state(4, &mut rng);
        let u = ctl2.update(&rho4);
        let expect = [
            1.0 - correction_oracle(&ops.sy1, &rho4, &sym),
            -1.0 - correction_oracle(&ops.sy2, &rho4, &sym),
        ];
        assert!((u[0] - expect[0]).abs() <= 1e-12 && (u[1] - expect[1]).abs() <= 1e-12);
    }
}

#[test]
fn zero_and_constant_laws() {
    assert_eq!(zero_control(), 0.0);
    assert_eq!(constant_control(-2.5), -2.5);
    let p = SpinParams::new(2).unwrap();
    let (fy, _) = angular_momentum_ops(&p);
    let rho = DensityMatrix::maximally_mixed(3);
    let mut z = Controller::new(ControlLaw::Zero, core::slice::from_ref(&fy), 3).unwrap();
    assert_eq!(z.update(&rho), &[0.0]);
    let ops = two_qubit_ops();
    let controls = [ops.sy1.clone(), ops.sy2.clone()];
    let mut k = Controller::new(ControlLaw::Constant(vec![0.3, -0.7]), &controls, 4).unwrap();
    assert_eq!(k.update(&DensityMatrix::maximally_mixed(4)), &[0.3, -0.7]);
}

#[test]
fn controller_rejects_mismatched_laws() {
    let p = SpinParams::new(2).unwrap();
    let (fy, _) = angular_momentum_ops(&p);
    let spin_controls = [fy.clone()];
    let ops = two_qubit_ops();
    let controls2 = [ops.sy1.clone(), ops.sy2.clone()];
    let anti = target_state(TargetKind::TwoQubitAntisymmetric, None).unwrap();

    // Spin law with a two-qubit target.
    assert!(Controller::new(ControlLaw::FeedbackSpin(anti.clone()), &controls2, 4).is_err());
    // Two-qubit law on a one-channel spin system.
    let params = ControlParams::new(0.4, anti).unwrap();
    assert!(Controller::new(ControlLaw::SwitchingTwoQubit(params), &spin_controls, 3).is_err());
    // Two-qubit law with a spin target.
    let params_spin = ControlParams::new(0.4, spin_target(3, 0)).unwrap();
    assert!(Controller::new(ControlLaw::SwitchingTwoQubit(params_spin), &controls2, 4).is_err());
    // Constant law arity and finiteness.
    assert!(Controller::new(ControlLaw::Constant(vec![1.0]), &controls2, 4).is_err());
    assert!(Controller::new(ControlLaw::Constant(vec![f64::NAN]), &spin_controls, 3).is_err());
    // Target dimension mismatch (spin-1 target on a spin-3/2 system).
    let p32 = SpinParams::new(3).unwrap();
    let (fy32, _) = angular_momentum_ops(&p32);
    assert!(Controller::new(
        ControlLaw::FeedbackSpin(spin_target(2, 0)),
        core::slice::from_ref(&fy32),
        4
    )
    .is_err());
    // γ outside (0, 1).
    assert!(ControlParams::new(0.0, spin_target(2, 0)).is_err());
    assert!(ControlParams::new(1.0, spin_target(2, 0)).is_err());
}

#[test]
fn hysteresis_path_through_the_band() {
    // Fidelity path 0.1 → 0.3 → 0.45 → 0.3 → 0.15 visits: drive, drive
    // (band from below), feedback, feedback (band from above), drive.
    let p = SpinParams::new(2).unwrap();
    let (fy, _) = angular_momentum_ops(&p);
    let params = ControlParams::new(0.4, spin_target(2, 2)).unwrap();
    let mut ctl = Controller::new(
        ControlLaw::SwitchingSpin(params),
        core::slice::from_ref(&fy),
        3,
    )
    .unwrap();
    let path = [0.1, 0.3, 0.45, 0.3, 0.15];
    let expected = [
        Regime::Drive,
        Regime::Drive,
        Regime::Feedback,
        Regime::Feedback,
        Regime::Drive,
    ];
    for (f, want) in path.iter().zip(expected) {
        ctl.update(&spin1_state_with_fidelity(*f));
        assert_eq!(ctl.regime(), want, "at fidelity {f}");
    }
    ctl.reset();
    assert_eq!(ctl.state(), SwitchingState::default());
}
