use proptest::prelude::*;

use wqed_core::analytics::{dispersion_k, energy_from_k, lambert_w0};
use wqed_core::lattice::build_pair_hamiltonian;
use wqed_core::observables::{photon_distance, TwoExcitationState};
use wqed_core::spectral::{decompose_symmetric, eig_dense, fourier2d, inverse_fourier2d, relative_error, EigOptions};
use wqed_core::{ArrayConfig, ComplexMatrix, PairBasis, PairSpectrum, C64};

fn complex() -> impl Strategy<Value = C64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| C64::new(a, b))
}

fn symmetric_matrix(max: usize) -> impl Strategy<Value = ComplexMatrix> {
    (2..=max).prop_flat_map(|n| {
        prop::collection::vec(complex(), n * n).prop_map(move |v| {
            ComplexMatrix::from_fn(n, n, |i, j| {
                let (a, b) = if i <= j { (i, j) } else { (j, i) };
                v[a * n + b]
            })
        })
    })
}

fn square_matrix(max: usize) -> impl Strategy<Value = ComplexMatrix> {
    (1..=max).prop_flat_map(|n| {
        prop::collection::vec(complex(), n * n).prop_map(move |v| ComplexMatrix::from_row_major(n, n, v).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn dispersion_round_trip(
        re in -30.0f64..30.0,
        im in -60.0f64..10.0,
        phi in prop::sample::select(vec![0.5, 1.0, 2.0]),
    ) {
        let eps = C64::new(re, im);
        prop_assume!(eps.norm() > 1e-3);
        let k = dispersion_k(eps, phi).unwrap();
        prop_assert!(k.im >= 0.0);
        let back = energy_from_k(k, phi).unwrap();
        prop_assert!((back - eps).norm() <= 1e-10 * eps.norm().max(1.0));
    }

    #[test]
    fn lambert_defining_identity(e in -6.0f64..6.0) {
        let x = 10f64.powf(e);
        let w = lambert_w0(x).unwrap();
        prop_assert!(w > 0.0);
        prop_assert!((w * w.exp() - x).abs() <= 1e-12 * x.max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn decomposition_reconstructs(psi in symmetric_matrix(50)) {
        let dec = decompose_symmetric(&psi).unwrap();
        prop_assume!(dec.unresolved.is_empty() && dec.near_defective.is_empty());
        prop_assert_eq!(dec.len(), psi.rows());
        prop_assert!(relative_error(&psi, &dec.reconstruct().unwrap()).unwrap() <= 1e-8);
        let l = dec.lambdas();
        prop_assert!(l.windows(2).all(|w| w[0].norm() >= w[1].norm()));
    }

    #[test]
    fn fourier_is_invertible_and_linear(a in square_matrix(24), s in complex()) {
        let fa = fourier2d(&a).unwrap();
        let back = inverse_fourier2d(&fa).unwrap();
        prop_assert!(back.sub(&a).unwrap().max_abs() <= 1e-10);

        let scaled = fourier2d(&a.scale(s)).unwrap();
        prop_assert!(scaled.sub(&fa.scale(s)).unwrap().max_abs() <= 1e-10 * (1.0 + fa.max_abs()));
    }

    #[test]
    fn distance_ignores_phase_and_mirror(
        n in 2usize..=12,
        seed in prop::collection::vec(complex(), 66),
        theta in 0.0f64..std::f64::consts::TAU,
    ) {
        let basis = PairBasis::new(n);
        let c = &seed[..basis.dim()];
        prop_assume!(c.iter().any(|z| z.norm() > 1e-3));
        let energy = C64::new(0.0, -1.0);
        let base = TwoExcitationState::from_pair_vector(&basis, energy, c, 0).unwrap();
        let phased: Vec<C64> = c.iter().map(|z| z * C64::from_polar(1.0, theta)).collect();
        let rotated = TwoExcitationState::from_pair_vector(&basis, energy, &phased, 0).unwrap();
        let mirrored: Vec<C64> = (0..basis.dim()).map(|k| c[basis.mirror_index(k)]).collect();
        let flipped = TwoExcitationState::from_pair_vector(&basis, energy, &mirrored, 0).unwrap();
        let rho = photon_distance(&base);
        prop_assert!((photon_distance(&rotated) - rho).abs() <= 1e-12 * (1.0 + rho));
        prop_assert!((photon_distance(&flipped) - rho).abs() <= 1e-12 * (1.0 + rho));
        prop_assert!(rho >= 1.0 - 1e-12 && rho <= (n - 1) as f64 + 1e-12);
    }
}

#[test]
fn eigenvalue_sum_is_trace() {
    for (n, phi) in [(6, 0.4), (11, 1.0), (15, 2.3)] {
        let chi: Vec<f64> = (0..n - 1).map(|k| (k as f64 * 0.7).sin()).collect();
        let h = build_pair_hamiltonian(&ArrayConfig::new(n, phi).with_disorder(chi), &PairBasis::new(n)).unwrap();
        let eig = eig_dense(&h, &EigOptions::default()).unwrap();
        let sum: C64 = eig.values.iter().sum();
        assert!((sum - h.trace()).norm() <= 1e-8 * h.frobenius_norm());
        assert!(eig.max_residual() <= 1e-9 * h.frobenius_norm());
    }
}

#[test]
fn clean_eigenvectors_are_unconjugated_orthogonal() {
    let s = PairSpectrum::solve(&ArrayConfig::new(10, 1.0), &EigOptions::default()).unwrap();
    let vs: Vec<Vec<C64>> = (0..s.len())
        .map(|k| {
            let v = s.eig.vector(k);
            let norm: C64 = v.iter().map(|z| z * z).sum::<C64>().sqrt();
            v.iter().map(|z| z / norm).collect()
        })
        .collect();
    let mut worst: f64 = 0.0;
    for i in 0..vs.len() {
        for j in 0..i {
            let dot: C64 = vs[i].iter().zip(&vs[j]).map(|(a, b)| a * b).sum();
            worst = worst.max(dot.norm());
        }
    }
    assert!(worst <= 1e-8, "{worst}");
}
