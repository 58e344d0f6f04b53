mod common;

use common::*;
use proptest::prelude::*;
use qubit_decoherence::channels::*;
use qubit_decoherence::collisions::*;
use qubit_decoherence::entanglement::*;
use qubit_decoherence::lindblad::*;
use qubit_decoherence::smallmat::*;
use rand::Rng;
use std::f64::consts::TAU;

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig::with_cases(cases)
}

proptest! {
    #![proptest_config(cfg(48))]

    #[test]
    fn kron_associative_and_bilinear(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random_matrix(2, &mut r);
        let b = random_matrix(3, &mut r);
        let cm = random_matrix(2, &mut r);
        let left = kron(&kron(&a, &b), &cm);
        let right = kron(&a, &kron(&b, &cm));
        prop_assert!(left.approx_eq(&right, 1e-12));

        let a2 = random_matrix(2, &mut r);
        let s = random_complex(&mut r);
        let lin = kron(&(&a + &a2.scale(s)), &b);
        let split = &kron(&a, &b) + &kron(&a2, &b).scale(s);
        prop_assert!(lin.approx_eq(&split, 1e-12));
    }

    #[test]
    fn partial_trace_of_product(seed in any::<u64>(), qa in 1usize..3, qb in 1usize..3) {
        let mut r = rng(seed);
        let a = random_matrix(1 << qa, &mut r);
        let b = random_matrix(1 << qb, &mut r);
        let keep: Vec<usize> = (0..qa).collect();
        let pt = partial_trace(&kron(&a, &b), QubitRegisterShape::new(qa + qb), &keep).unwrap();
        prop_assert!(pt.approx_eq(&a.scale(b.trace()), 1e-12));
    }

    #[test]
    fn partial_trace_preserves_trace(seed in any::<u64>(), mask in 0u32..16) {
        let mut r = rng(seed);
        let m = random_matrix(16, &mut r);
        let keep: Vec<usize> = (0..4).filter(|q| mask & (1 << q) != 0).collect();
        let pt = partial_trace(&m, QubitRegisterShape::new(4), &keep).unwrap();
        prop_assert!((pt.trace() - m.trace()).norm() < 1e-12);
    }

    #[test]
    fn herm_eig_reconstructs(seed in any::<u64>(), n in 1usize..=16) {
        let mut r = rng(seed);
        let h = random_hermitian(n, &mut r);
        let eig = herm_eig(&h, DEFAULT_TOL).unwrap();
        prop_assert!(eig.reconstruct().approx_eq(&h, 1e-9));
        prop_assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn psd_sqrt_squares_back(seed in any::<u64>(), n in 1usize..=8) {
        let mut r = rng(seed);
        let g = random_matrix(n, &mut r);
        let p = g.matmul(&g.adjoint());
        let s = psd_sqrt(&p, DEFAULT_TOL).unwrap();
        prop_assert!(s.matmul(&s).approx_eq(&p, 1e-9));
    }
}

fn random_params(r: &mut rand::rngs::StdRng) -> DecoherenceParams {
    DecoherenceParams::new(r.gen_range(0.01..0.99), r.gen_range(0.0..TAU)).unwrap()
}

proptest! {
    #![proptest_config(cfg(64))]

    #[test]
    fn decoherence_preserves_diagonals_and_contracts(seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = random_params(&mut r);
        let basis = random_basis(&mut r);
        let rho = random_qubit_state(&mut r);
        let out = apply(&make_decoherence_channel(&p), &rho, &basis).unwrap();
        for k in 0..2 {
            prop_assert!((out.element_in(&basis, k, k) - rho.element_in(&basis, k, k)).norm() < 1e-12);
        }
        let before = rho.element_in(&basis, 0, 1).norm();
        let after = out.element_in(&basis, 0, 1).norm();
        prop_assert!(after < before);
        prop_assert!((after - p.lambda() * before).abs() < 1e-12);

        let e = make_decoherence_channel(&p);
        prop_assert_eq!(e.apply_vector(&[1.0, 0.0, 0.0, 0.0]), [1.0, 0.0, 0.0, 0.0]);
        let mixed = apply(&e, &DensityMatrix::maximally_mixed(), &DecoherenceBasis::computational()).unwrap();
        prop_assert_eq!(mixed.max_abs_diff(&DensityMatrix::maximally_mixed()), 0.0);
    }

    #[test]
    fn interpolation_is_a_semigroup(seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = random_params(&mut r);
        let tau = r.gen_range(0.2..3.0);
        let (t, s) = (r.gen_range(0.0..5.0), r.gen_range(0.0..5.0));
        let lhs = compose(&interpolate(&p, t, tau).unwrap(), &interpolate(&p, s, tau).unwrap());
        prop_assert!(lhs.approx_eq(&interpolate(&p, t + s, tau).unwrap(), 1e-10));
    }

    #[test]
    fn power_is_repeated_composition(seed in any::<u64>(), n in 0u32..=64) {
        let mut r = rng(seed);
        let p = random_params(&mut r);
        let e = make_decoherence_channel(&p);
        let folded = (0..n).fold(TransferMatrix::identity(), |acc, _| compose(&acc, &e));
        prop_assert!(power(&p, n).approx_eq(&folded, 1e-12));
    }

    #[test]
    fn classification_round_trip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = random_params(&mut r);
        let basis = random_basis(&mut r);
        let pauli_frame = make_decoherence_channel(&p).to_pauli_frame(&basis);
        let ch = classify_decoherence(&pauli_frame, 1e-9).unwrap();
        prop_assert!(same_channel(&ch, basis.axis(), p.lambda(), p.phi(), 1e-9));
    }

    #[test]
    fn same_basis_composition_closes(seed in any::<u64>()) {
        let mut r = rng(seed);
        let p1 = random_params(&mut r);
        let p2 = random_params(&mut r);
        let basis = random_basis(&mut r);
        let e = compose(&make_decoherence_channel(&p1), &make_decoherence_channel(&p2));
        let ch = classify_decoherence(&e.to_pauli_frame(&basis), 1e-9).unwrap();
        prop_assert!(same_channel(&ch, basis.axis(), p1.lambda() * p2.lambda(), p1.phi() + p2.phi(), 1e-9));
    }

    #[test]
    fn collisions_keep_diagonals_and_damp_coherence(seed in any::<u64>(), n in 1usize..=10) {
        let mut r = rng(seed);
        let spec = random_spec(&mut r, false);
        let rho = random_qubit_state(&mut r);
        let basis = spec.basis().clone();
        let lambda = x_operator(&spec).lambda();
        let states = simulate_collisions(&spec, &rho, n);
        let d0 = system_diagonal(&rho, &basis);
        let c0 = rho.element_in(&basis, 0, 1).norm();
        for (k, s) in states.iter().enumerate() {
            let d = system_diagonal(s, &basis);
            prop_assert!((d[0] - d0[0]).abs() < 1e-14 && (d[1] - d0[1]).abs() < 1e-14);
            let ck = s.element_in(&basis, 0, 1).norm();
            prop_assert!((ck - c0 * lambda.powi(k as i32)).abs() < 1e-12);
        }
    }

    #[test]
    fn induced_channel_is_cp(seed in any::<u64>()) {
        let mut r = rng(seed);
        let spec = random_spec(&mut r, false);
        let v = is_completely_positive(&induced_channel(&spec), spec.basis(), 1e-9).unwrap();
        prop_assert!(v.completely_positive);
    }

    #[test]
    fn eigenstate_reservoir_does_not_decohere(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (v0, v1) = (random_unitary(2, &mut r), random_unitary(2, &mut r));
        let x = v1.adjoint().matmul(&v0);
        // X is unitary, hence normal: eigenvectors of its Hermitian part are eigenvectors of X
        let eig = herm_eig(&(&x + &x.adjoint()).scale_real(0.5), 1e-9).unwrap();
        let v = eig.vector(0);
        let xi = DensityMatrix::pure([v[0], v[1]]).unwrap();
        let spec = CollisionSpec::new(v0, v1, xi, random_basis(&mut r), 1e-10).unwrap();
        prop_assert!((x_operator(&spec).lambda() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn design_inverts_induced_channel(seed in any::<u64>()) {
        let mut r = rng(seed);
        let spec = random_spec(&mut r, false);
        let target = x_operator(&spec).params();
        let designed = design_collision_in(&target, spec.basis().clone());
        let back = x_operator(&designed).params();
        prop_assert!((back.lambda() - target.lambda()).abs() < 1e-10);
        prop_assert!(angle_distance(back.phi(), target.phi()) < 1e-10);
        prop_assert!(induced_channel(&designed).approx_eq(&induced_channel(&spec), 1e-10));
    }
}

proptest! {
    #![proptest_config(cfg(48))]

    #[test]
    fn generator_exponential_is_closed_form(seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = random_params(&mut r);
        let tau = r.gen_range(0.2..3.0);
        let g = generator_from_params(&p, tau).unwrap();
        let t = r.gen_range(0.0..10.0 * tau);
        prop_assert!(g.exp(t).approx_eq(&interpolate(&p, t, tau).unwrap(), 1e-10));
    }

    #[test]
    fn trajectories_conserve_trace_and_s3(seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = random_params(&mut r);
        let basis = random_basis(&mut r);
        let g = generator_from_params(&p, 1.0).unwrap();
        let rho0 = random_qubit_state(&mut r);
        let z0 = to_bloch(&rho0, &basis).0[2];
        let grid = time_grid(0.0, 5.0, 50).unwrap();
        for traj in [
            evolve(&g, &rho0, &grid, &basis).unwrap(),
            evolve_numerical(&g, &rho0, &grid, &basis, 0.01).unwrap(),
        ] {
            let mut last = f64::INFINITY;
            for rho in &traj {
                prop_assert!((rho.matrix().trace().re - 1.0).abs() < 1e-12);
                prop_assert!((to_bloch(rho, &basis).0[2] - z0).abs() < 1e-12);
                let purity = rho.purity();
                prop_assert!(purity <= last + 1e-15);
                last = purity;
            }
        }
    }

    #[test]
    fn evolution_is_markovian(seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = random_params(&mut r);
        let basis = random_basis(&mut r);
        let g = generator_from_params(&p, r.gen_range(0.2..3.0)).unwrap();
        let rho0 = random_qubit_state(&mut r);
        let (t, s) = (r.gen_range(0.0..4.0), r.gen_range(0.0..4.0));
        let mid = evolve(&g, &rho0, &[t], &basis).unwrap().remove(0);
        let two_step = evolve(&g, &mid, &[s], &basis).unwrap().remove(0);
        let direct = evolve(&g, &rho0, &[t + s], &basis).unwrap().remove(0);
        prop_assert!(two_step.max_abs_diff(&direct) < 1e-10);
    }

    #[test]
    fn lindblad_form_reproduces_generator(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mut m = [[0.0; 4]; 4];
        for row in m.iter_mut().skip(1) {
            for v in row.iter_mut() {
                *v = r.gen_range(-1.0..1.0);
            }
        }
        let g = Generator::new(m);
        let basis = random_basis(&mut r);
        let back = generator_to_lindblad(&g).to_generator(&basis);
        prop_assert!(back.max_abs_diff(&g) < 1e-12);
    }

    #[test]
    fn coefficient_matrix_positivity_matches_validation(seed in any::<u64>(), kind in 0u8..5) {
        let mut r = rng(seed);
        let a: f64 = -r.gen_range(0.01..2.0);
        let b: f64 = r.gen_range(-2.0..2.0);
        let eps = r.gen_range(1e-6..0.5) * if r.gen::<bool>() { 1.0 } else { -1.0 };
        let g = match kind {
            0 => Generator::from_block(a, b, -b, a),
            1 => Generator::from_block(-a, b, -b, -a),
            2 => Generator::from_block(a, b, -b, a + eps),
            3 => Generator::from_block(a, b, -b + eps, a),
            _ => Generator::from_block(a + eps, b + eps, eps - b, a),
        };
        let eig = generator_to_lindblad(&g).coefficient_eigenvalues();
        let psd_and_dissipative = eig[2] >= -1e-9 && eig[0] > 1e-9;
        prop_assert_eq!(validate_decoherence_generator(&g, 1e-9).valid, psd_and_dissipative);
    }
}

proptest! {
    #![proptest_config(cfg(20))]

    #[test]
    fn analytic_reduced_states_match_statevector(seed in any::<u64>(), total in 1usize..=8, pick in any::<u32>()) {
        let mut r = rng(seed);
        let spec = random_spec(&mut r, true);
        let (alpha, beta) = random_amplitudes(&mut r);
        let n = 1 + pick as usize % total;
        let state = evolve_network(&spec, alpha, beta, total, n).unwrap();
        let direct = network_state_closed_form(&spec, alpha, beta, total, n).unwrap();
        prop_assert!(state.max_abs_diff(&direct) < 1e-10);

        let a = analytic_reduced_states(&spec, alpha, beta, n).unwrap();
        let k = 1 + pick as usize % n;
        prop_assert!(a.rho0.approx_eq(&state.reduced_density(&[0]).unwrap(), 1e-10));
        prop_assert!(a.rhok.approx_eq(&state.reduced_density(&[k]).unwrap(), 1e-10));
        prop_assert!(a.rho0k.approx_eq(&state.reduced_density(&[0, k]).unwrap(), 1e-10));
        if let Some(rhojk) = a.rhojk {
            let j = if k == 1 { 2 } else { 1 };
            prop_assert!(rhojk.approx_eq(&state.reduced_density(&[j.min(k), j.max(k)]).unwrap(), 1e-10));
        }

        let overlap = reservoir_overlap(&spec).unwrap().norm().min(1.0);
        prop_assert!((overlap - x_operator(&spec).lambda()).abs() < 1e-12);
        let analytic = analytic_tangles(overlap, alpha, beta, n).unwrap();
        let numeric = ckw_check(&state).unwrap();
        prop_assert!((analytic.tau0 - numeric.tau0).abs() < 1e-10);
        prop_assert!((analytic.tauk - numeric.tangles[k]).abs() < 1e-10);
        prop_assert!((analytic.tau0k[0] - numeric.pair_tangles[0][k]).abs() < 1e-10);
        prop_assert!(numeric.taujk < 1e-10);
        prop_assert!(numeric.min_raw_delta() >= -1e-8);
    }

    #[test]
    fn tangle_curves_are_monotone_and_geometric(overlap in 0.0f64..0.999, seed in any::<u64>()) {
        let mut r = rng(seed);
        let (alpha, beta) = random_amplitudes(&mut r);
        let weight = 4.0 * alpha.norm_sqr() * beta.norm_sqr();
        let reports: Vec<_> = (1..=40).map(|n| analytic_tangles(overlap, alpha, beta, n).unwrap()).collect();
        for w in reports.windows(2) {
            prop_assert!(w[1].tau0 >= w[0].tau0);
            prop_assert!(w[1].tau0k[0] <= w[0].tau0k[0]);
            if w[0].tau0k[0] > 1e-200 {
                prop_assert!((w[1].tau0k[0] / w[0].tau0k[0] - overlap * overlap).abs() < 1e-12);
            }
            let gap = weight - w[0].tau0;
            if gap > 1e-8 {
                prop_assert!(((weight - w[1].tau0) / gap - overlap * overlap).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn concurrence_matches_characteristic_polynomial(seed in any::<u64>()) {
        let mut r = rng(seed);
        let p: f64 = r.gen_range(0.0..1.0);
        let u = kron(&random_unitary(2, &mut r), &random_unitary(2, &mut r));
        let bell = u.matmul(&bell_projector()).matmul(&u.adjoint());
        let rho = &bell.scale_real(p) + &random_density(4, &mut r).scale_real(1.0 - p);
        let fast = concurrence(&rho, 1e-9).unwrap();
        prop_assert!((fast - concurrence_oracle(&rho)).abs() < 1e-8);
        prop_assert!((0.0..=1.0).contains(&fast));
    }
}
