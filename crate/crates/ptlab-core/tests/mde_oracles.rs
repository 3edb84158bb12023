//! Quadrature and regularity checks for the self-consistent resolvent.

mod common;

use num_complex::Complex64 as C64;
use ptlab_core::mde::{solve_mde, stieltjes_representation_check, DEFAULT_MAX_ITER, DEFAULT_TOL};
use ptlab_core::models::{build_nnn_hamiltonian, nnn_dos};
use ptlab_core::spectra::eigendecompose;

#[test]
fn representation_check_free_case() {
    let (h, _) = build_nnn_hamiltonian(512).unwrap();
    let eig = eigendecompose(&h).unwrap();
    // hull [0, 4] padded by 2 -> length 8; spacing 0.004 needs 2001 points
    let disc = stieltjes_representation_check(&eig, 0.0, C64::new(2.0, 1.0), 0.01, 2001).unwrap();
    assert!(disc <= 1e-3, "free-case discrepancy {disc}");
}

#[test]
fn representation_check_coupled_case() {
    let (h, _) = build_nnn_hamiltonian(512).unwrap();
    let eig = eigendecompose(&h).unwrap();
    let disc = stieltjes_representation_check(&eig, 0.1, C64::new(2.0, 1.0), 0.01, 2001).unwrap();
    assert!(disc <= 5e-3, "coupled discrepancy {disc}");
}

#[test]
fn local_regularity_surrogate() {
    // For admissible E0 = 2 and spectral parameters near it, the solved
    // Im m stays above half the limiting value pi rho0(E0) = 1/2. The
    // Im z -> 0 boundary is probed at the documented floor 0.01.
    let (h, _) = build_nnn_hamiltonian(1024).unwrap();
    let eig = eigendecompose(&h).unwrap();
    let floor = 0.5 * std::f64::consts::PI * nnn_dos(2.0);
    for &lambda in &[0.05, 0.1] {
        for &im in &[0.01, 0.05, 0.1] {
            let mut re = 1.25;
            while re <= 2.75 + 1e-9 {
                let sol =
                    solve_mde(&eig, C64::new(re, im), lambda, DEFAULT_TOL, DEFAULT_MAX_ITER)
                        .unwrap();
                assert!(
                    sol.m.im >= floor,
                    "lambda={lambda} z={re}+{im}i: Im m = {} < {floor}",
                    sol.m.im
                );
                re += 0.25;
            }
        }
    }
}

#[test]
fn herglotz_across_grid() {
    let (h, _) = build_nnn_hamiltonian(256).unwrap();
    let eig = eigendecompose(&h).unwrap();
    for &lambda in &[0.0, 0.05, 0.2] {
        for &re in &[0.5, 1.5, 2.5, 3.5] {
            for &im in &[0.02, 0.2, 2.0, -0.02, -2.0] {
                let sol = solve_mde(&eig, C64::new(re, im), lambda, 1e-12, DEFAULT_MAX_ITER)
                    .unwrap();
                assert!(sol.m.im * im > 0.0);
            }
        }
    }
}
