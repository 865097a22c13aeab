//! Operator-construction oracles: ladder coefficients, Pauli algebra, tensor
//! ordering and target states, all against hand-evaluated matrices.

use num_complex::Complex64;
use qfilter::operators::{
    angular_momentum_ops, kron, pauli, qubit_basis, target_state, two_qubit_ops, SpinParams,
    TargetKind,
};
use qfilter::qstate::{commutator, frobenius_norm, trace_inner, ComplexMatrix};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn assert_close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) {
    let dev = frobenius_norm(&a.sub(b));
    assert!(dev <= tol, "matrices differ by {dev:e}");
}

#[test]
fn spin_half_operators_are_half_paulis() {
    let p = SpinParams::new(1).unwrap();
    let (fy, fz) = angular_momentum_ops(&p);
    assert_close(&fz, &ComplexMatrix::from_real_diag(&[-0.5, 0.5]), 0.0);
    let (_, sy, _) = pauli();
    assert_close(&fy, &sy.scale(c(0.5, 0.0)), 1e-16);
}

#[test]
fn spin_one_fz_diagonal() {
    let p = SpinParams::new(2).unwrap();
    let (_, fz) = angular_momentum_ops(&p);
    assert_close(&fz, &ComplexMatrix::from_real_diag(&[-1.0, 0.0, 1.0]), 0.0);
}

#[test]
fn fy_structure_for_all_j() {
    for two_j in 1..=8u32 {
        let p = SpinParams::new(two_j).unwrap();
        let (fy, fz) = angular_momentum_ops(&p);
        let n = p.dim();
        // Hermitian, traceless.
        assert!(frobenius_norm(&fy.sub(&fy.adjoint())) == 0.0);
        assert!(fy.trace().norm() == 0.0);
        assert!(frobenius_norm(&fz.sub(&fz.adjoint())) == 0.0);
        // Tridiagonal with nonzero super/sub-diagonal.
        for i in 0..n {
            for j in 0..n {
                let z = fy[(i, j)];
                if i.abs_diff(j) == 1 {
                    assert!(z.norm() > 0.0, "2J={two_j}: F_y[{i},{j}] should be nonzero");
                    assert!(z.re == 0.0, "F_y entries are purely imaginary");
                } else {
                    assert!(z == c(0.0, 0.0), "2J={two_j}: F_y[{i},{j}] should be zero");
                }
            }
        }
        // F_z spectrum: exact unit gaps.
        for k in 0..n - 1 {
            let gap = fz[(k + 1, k + 1)].re - fz[(k, k)].re;
            assert!(gap == 1.0, "2J={two_j}: eigenvalue gap must be exactly 1");
        }
    }
}

#[test]
fn spin_operators_satisfy_su2_commutation() {
    // [F_y, F_z] = iF_x must itself satisfy [F_x, F_y] = iF_z; check the
    // closure for a couple of J values.
    for two_j in [1u32, 4] {
        let p = SpinParams::new(two_j).unwrap();
        let (fy, fz) = angular_momentum_ops(&p);
        // F_x = −i[F_y, F_z]
        let fx = commutator(&fy, &fz).scale(c(0.0, -1.0));
        let lhs = commutator(&fx, &fy);
        let rhs = fz.scale(c(0.0, 1.0));
        assert_close(&lhs, &rhs, 1e-14);
    }
}

#[test]
fn pauli_matrices_as_printed() {
    let (sx, sy, sz) = pauli();
    assert_eq!(sx[(0, 1)], c(1.0, 0.0));
    assert_eq!(sx[(1, 0)], c(1.0, 0.0));
    assert_eq!(sy[(0, 1)], c(0.0, -1.0));
    assert_eq!(sy[(1, 0)], c(0.0, 1.0));
    assert_eq!(sz[(0, 0)], c(1.0, 0.0));
    assert_eq!(sz[(1, 1)], c(-1.0, 0.0));
    // σ_z ψ_↑ = ψ_↑ and σ_x² = I.
    let (up, _) = qubit_basis();
    let zup = sz.matvec(&up);
    assert_eq!(zup, up.to_vec());
    assert_close(&sx.mul(&sx), &ComplexMatrix::identity(2), 0.0);
}

#[test]
fn kron_identity_and_ordering() {
    let id = ComplexMatrix::identity(2);
    assert_close(&kron(&id, &id), &ComplexMatrix::identity(4), 0.0);
    let (_, _, sz) = pauli();
    // σ_z¹ = σ_z ⊗ I = diag(1, 1, −1, −1) in the (↑↑, ↑↓, ↓↑, ↓↓) order.
    let sz1 = kron(&sz, &id);
    assert_close(&sz1, &ComplexMatrix::from_real_diag(&[1.0, 1.0, -1.0, -1.0]), 0.0);
    // F_z = σ_z¹ + σ_z² = diag(2, 0, 0, −2).
    let fz = sz1.add(&kron(&id, &sz));
    assert_close(&fz, &ComplexMatrix::from_real_diag(&[2.0, 0.0, 0.0, -2.0]), 0.0);
}

#[test]
fn two_qubit_ops_structure() {
    let ops = two_qubit_ops();
    assert_close(
        &ops.fz,
        &ComplexMatrix::from_real_diag(&[2.0, 0.0, 0.0, -2.0]),
        0.0,
    );
    // σ_y¹σ_y¹ = I.
    assert_close(&ops.sy1.mul(&ops.sy1), &ComplexMatrix::identity(4), 0.0);
    // All Hermitian.
    for m in [&ops.sy1, &ops.sy2, &ops.fy, &ops.fz] {
        assert!(frobenius_norm(&m.sub(&m.adjoint())) == 0.0);
    }
    // F_z ψ_↑↓ = 0.
    let psi_ud = [c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
    let out = ops.fz.matvec(&psi_ud);
    assert!(out.iter().all(|z| z.norm() == 0.0));
}

#[test]
fn antisymmetric_state_is_rotation_invariant() {
    let ops = two_qubit_ops();
    let t = target_state(TargetKind::TwoQubitAntisymmetric, None).unwrap();
    let comm = commutator(&ops.fy, t.rho_f().matrix());
    assert!(frobenius_norm(&comm) <= 1e-15, "[F_y, ρ_a] must vanish");
}

#[test]
fn spin_target_top_eigenstate() {
    let p = SpinParams::new(2).unwrap();
    let t = target_state(TargetKind::SpinEigenstate(2), Some(&p)).unwrap();
    assert_close(
        t.rho_f().matrix(),
        &ComplexMatrix::from_real_diag(&[0.0, 0.0, 1.0]),
        0.0,
    );
    assert!(t.lambda_f() == 1.0);
    // λ_f for the bottom and middle states too.
    let b = target_state(TargetKind::SpinEigenstate(0), Some(&p)).unwrap();
    assert!(b.lambda_f() == -1.0);
    let m = target_state(TargetKind::SpinEigenstate(1), Some(&p)).unwrap();
    assert!(m.lambda_f() == 0.0);
}

#[test]
fn two_qubit_targets_orthogonal_pure_kernel_supported() {
    let a = target_state(TargetKind::TwoQubitAntisymmetric, None).unwrap();
    let s = target_state(TargetKind::TwoQubitSymmetric, None).unwrap();
    // Pure: Tr ρ² = 1.
    for t in [&a, &s] {
        let sq = t.rho_f().matrix().mul(t.rho_f().matrix());
        assert!((sq.trace().re - 1.0).abs() < 1e-15);
        assert!(t.lambda_f() == 0.0);
    }
    // Orthogonal to each other.
    let overlap = trace_inner(a.rho_f().matrix(), s.rho_f().matrix());
    assert!(overlap.norm() < 1e-15);
    // Supported in the F_z kernel: Tr[ρ_a F_z] = 0.
    let ops = two_qubit_ops();
    let tr = ops.fz.mul(a.rho_f().matrix()).trace();
    assert!(tr.norm() < 1e-15);
}

#[test]
fn spin_eigenstate_target_satisfies_eigen_relation() {
    // F_z v_f = λ_f v_f for every m.
    let p = SpinParams::new(3).unwrap();
    let (_, fz) = angular_momentum_ops(&p);
    for m in 0..4 {
        let t = target_state(TargetKind::SpinEigenstate(m), Some(&p)).unwrap();
        let fv = fz.matvec(t.v_f());
        for (a, b) in fv.iter().zip(t.v_f()) {
            assert!((a - b * c(t.lambda_f(), 0.0)).norm() < 1e-15);
        }
    }
}
