//! Randomized invariant checks.

use otoc_sim::ensemble::{
    sample_circuit_with_seed, sample_haar_two_qubit_gate, Circuit, EnsembleSpec,
    GateDistribution, GridGeometry,
};
use otoc_sim::otoc::{otoc_moment, CorrelatorSpec};
use otoc_sim::pauli::{PauliLetter, PauliString};
use otoc_sim::rng::Xoshiro256StarStar;
use otoc_sim::statevector::{Direction, StateVector};
use proptest::prelude::*;

fn letter(i: u8) -> PauliLetter {
    match i % 3 {
        0 => PauliLetter::X,
        1 => PauliLetter::Y,
        _ => PauliLetter::Z,
    }
}

fn random_circuit(rows: usize, cols: usize, depth: usize, seed: u64) -> Circuit {
    let geometry = GridGeometry::new(rows, cols).unwrap();
    let n = geometry.n_qubits();
    let spec = EnsembleSpec::new(
        geometry,
        depth,
        GateDistribution::HaarTwoQubit,
        PauliString::single(n - 1, PauliLetter::X),
        PauliString::single(0, PauliLetter::Z),
        seed,
    )
    .unwrap();
    sample_circuit_with_seed(&spec, seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pauli_string_squares_to_identity(
        seed in any::<u64>(),
        x in 0u64..16,
        raw in proptest::collection::btree_map(0usize..4, 0u8..3, 1..=4),
    ) {
        let _ = seed;
        let p = PauliString::from_terms(
            raw.into_iter().map(|(q, l)| (q, letter(l))),
        ).unwrap();
        let original = StateVector::basis_state(4, x).unwrap();
        let mut state = original.clone();
        state.apply_pauli_string(&p).unwrap();
        state.apply_pauli_string(&p).unwrap();
        let overlap = original.inner_product(&state).unwrap();
        prop_assert!((overlap.re - 1.0).abs() < 1e-12);
        prop_assert!(overlap.im.abs() < 1e-12);
    }

    #[test]
    fn circuits_preserve_norm(seed in any::<u64>(), depth in 0usize..8) {
        let circuit = random_circuit(2, 3, depth, seed);
        let mut state = StateVector::zero_state(6).unwrap();
        state.apply_circuit(&circuit, Direction::Forward).unwrap();
        prop_assert!((state.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_undoes_forward(seed in any::<u64>(), depth in 1usize..6, x in 0u64..64) {
        let circuit = random_circuit(2, 3, depth, seed);
        let original = StateVector::basis_state(6, x).unwrap();
        let mut state = original.clone();
        state.apply_circuit(&circuit, Direction::Forward).unwrap();
        state.apply_circuit(&circuit, Direction::Inverse).unwrap();
        let overlap = original.inner_product(&state).unwrap();
        prop_assert!((overlap.re - 1.0).abs() < 1e-10);
        prop_assert!(overlap.im.abs() < 1e-10);
    }

    #[test]
    fn haar_samples_are_unitary(seed in any::<u64>()) {
        let mut rng = Xoshiro256StarStar::from_seed(seed);
        let u = sample_haar_two_qubit_gate(&mut rng);
        prop_assert!(u.unitarity_residual() < 1e-12);
    }

    #[test]
    fn moments_are_real_and_bounded(seed in any::<u64>(), k in 1usize..3) {
        let circuit = random_circuit(2, 2, 3, seed);
        let b = PauliString::single(3, PauliLetter::X);
        let m = PauliString::single(0, PauliLetter::Z);
        let spec = CorrelatorSpec::new(&circuit, b, m, k).unwrap();
        let value = otoc_moment(&spec).unwrap();
        prop_assert!((-1.0..=1.0).contains(&value));
    }

    #[test]
    fn circuit_json_round_trips(seed in any::<u64>()) {
        let circuit = random_circuit(2, 2, 4, seed);
        let text = circuit.to_json().unwrap();
        let back = Circuit::from_json(&text).unwrap();
        prop_assert_eq!(back.to_json().unwrap(), text);
    }
}
