mod common;

use proptest::prelude::*;

fn run(check: common::Check) -> Result<(), TestCaseError> {
    check.map_err(TestCaseError::fail)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_then_reconstruct(seed in any::<u64>()) {
        run(common::split_reconstruct(seed))?;
    }

    #[test]
    fn chsh_square_form(seed in any::<u64>()) {
        run(common::chsh_square(seed))?;
    }

    #[test]
    fn mermin_square_form(n in 1usize..=5, seed in any::<u64>()) {
        run(common::mermin_square(n, seed))?;
    }

    #[test]
    fn svetlichny_square_form(seed in any::<u64>()) {
        run(common::svetlichny_square(seed))?;
    }

    #[test]
    fn antihermitian_square_identity(seed in any::<u64>()) {
        run(common::cglmp_antihermitian_square(seed))?;
    }

    #[test]
    fn ccdagger_structure(seed in any::<u64>()) {
        run(common::ccdagger_structure(seed))?;
    }

    #[test]
    fn quantum_value_is_local_unitary_invariant(seed in any::<u64>()) {
        run(common::local_unitary_invariance(seed))?;
    }

    #[test]
    fn enumeration_is_chunk_independent(seed in any::<u64>()) {
        run(common::chunk_determinism(seed))?;
    }

    #[test]
    fn enumeration_matches_integer_oracle(seed in any::<u64>()) {
        run(common::classical_exactness(seed))?;
    }

    #[test]
    fn cglmp_operator_and_probability_forms_agree(seed in any::<u64>()) {
        run(common::cglmp_operator_probability_agreement(seed))?;
    }

    #[test]
    fn assembly_matches_kronecker_sum_with_powers(seed in any::<u64>()) {
        run(common::assembly_with_powers(seed))?;
    }
}
