use dforge::derivation::{replay_derivation, Derivation};
use dforge::presentation::build_presentation;
use dforge::witness::{
    assemble_witness, w_len_formula, z_counts_matrix, z_unreduced_counts_streaming, Mode, WitnessBundle,
    WitnessContext,
};
use dforge::words::{GenKind, Letter, Word};
use dforge::Error;
use num_bigint::BigUint;
use proptest::prelude::*;

fn choose(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

#[test]
fn counting_identities_against_binomials() {
    for (p, q) in [(2, 1), (3, 1), (3, 2), (4, 3)] {
        let pres = build_presentation(p, q, 1).unwrap();
        let ctx = WitnessContext::new(&pres).unwrap();
        for n in 1..=12 {
            let b = assemble_witness(&ctx, n, Mode::Counting).unwrap();
            assert_eq!(b.v_a1, n);
            assert_eq!(b.v_a2, choose(n, q as u64));
            assert_eq!(b.ub0_len(), (0..=p as u64).map(|i| choose(n, i)).sum::<u64>());
            assert_eq!(b.w_len(), 2 * choose(n, q as u64) + 4 * n + 3);
            for i in 0..=p {
                assert_eq!(b.ub0.count(pres.alphabet.b(i)), choose(n, i as u64));
            }
        }
    }
}

#[test]
fn small_length_examples() {
    assert_eq!(w_len_formula(1, 1), BigUint::from(9u32));
    assert_eq!(w_len_formula(5, 1), BigUint::from(33u32));
    assert_eq!(w_len_formula(5, 2), BigUint::from(43u32));
}

#[test]
fn skeleton_a2_counts_per_block() {
    // one a1 a2^{C(j-1, q-1)} block for each j = 1..n
    let pres = build_presentation(3, 2, 1).unwrap();
    let ctx = WitnessContext::new(&pres).unwrap();
    let b = assemble_witness(&ctx, 5, Mode::Counting).unwrap();
    assert_eq!(b.tau_a2, vec![0, 1, 2, 3, 4]);
    assert_eq!(b.vhat.to_text(&pres.alphabet), "a1^2 a2 a1 a2^2 a1 a2^3 a1 a2^4");
}

#[test]
fn ub0_letter_counts_p3_n4() {
    let pres = build_presentation(3, 1, 1).unwrap();
    let ctx = WitnessContext::new(&pres).unwrap();
    let ub0 = ctx.ub0(4).unwrap();
    let counts: Vec<u64> = (0..=3).map(|i| ub0.count(pres.alphabet.b(i))).collect();
    assert_eq!(counts, vec![1, 4, 6, 4]);
}

#[test]
fn csv_row_shape() {
    let pres = build_presentation(2, 1, 1).unwrap();
    let ctx = WitnessContext::new(&pres).unwrap();
    let b = assemble_witness(&ctx, 2, Mode::Counting).unwrap();
    assert_eq!(WitnessBundle::CSV_HEADER.split(',').count(), 5);
    assert!(b.csv_row().starts_with("2,15,4,2,"), "{}", b.csv_row());
}

#[test]
fn n_zero_is_a_parameter_error() {
    let pres = build_presentation(2, 1, 1).unwrap();
    let ctx = WitnessContext::new(&pres).unwrap();
    assert!(matches!(assemble_witness(&ctx, 0, Mode::Counting), Err(Error::Param(_))));
}

#[test]
fn explicit_mode_respects_the_budget() {
    let pres = build_presentation(2, 1, 1).unwrap();
    let ctx = WitnessContext::with_budget(&pres, 1_000).unwrap();
    assert!(matches!(assemble_witness(&ctx, 1, Mode::Explicit), Err(Error::Budget { .. })));
    let ctx = WitnessContext::new(&pres).unwrap();
    assert!(matches!(assemble_witness(&ctx, 2, Mode::Explicit), Err(Error::Budget { .. })));
}

#[test]
fn explicit_n1_replays_for_several_groups() {
    for (p, q) in [(2, 1), (3, 1), (3, 2)] {
        let pres = build_presentation(p, q, 1).unwrap();
        let ctx = WitnessContext::new(&pres).unwrap();
        let b = assemble_witness(&ctx, 1, Mode::Explicit).unwrap();
        let e = b.explicit.as_ref().unwrap();
        assert_eq!(e.derivation.start, b.w);
        assert_eq!(e.derivation.end, e.chi);
        replay_derivation(ctx.table(), &e.derivation).unwrap();
        let alpha = &pres.alphabet;
        let allowed = [alpha.t(), alpha.y(1), alpha.y(2)];
        assert!(e.chi.support().iter().all(|g| allowed.contains(g)));
        assert!(e.chi.is_freely_reduced());
    }
}

#[test]
fn derivation_text_round_trip_and_tamper() {
    let pres = build_presentation(2, 1, 1).unwrap();
    let ctx = WitnessContext::new(&pres).unwrap();
    let b = assemble_witness(&ctx, 1, Mode::Explicit).unwrap();
    let d = &b.explicit.as_ref().unwrap().derivation;
    let back = Derivation::parse(&pres.alphabet, &d.to_text(&pres.alphabet)).unwrap();
    assert_eq!(&back, d);
    let mut short = d.clone();
    short.steps.pop();
    assert!(matches!(replay_derivation(ctx.table(), &short), Err(Error::StepMismatch { .. })));
    let mut moved = d.clone();
    moved.start = moved.start.concat(&Word::letter(Letter::pos(pres.alphabet.a1())));
    assert!(replay_derivation(ctx.table(), &moved).is_err());
}

/// Unreduced `Z` built by plain layered substitution.
fn z_by_raw_substitution(ctx: &WitnessContext, ub0: &Word) -> Word {
    let alpha = ctx.alphabet();
    let mut z = Word::letter(Letter::pos(alpha.x(1)));
    for l in ub0.letters() {
        let GenKind::B(j) = alpha.kind(l.id()) else { panic!("not a b-letter") };
        z = z.apply_substitution(&ctx.conj_b[j as usize]).unwrap();
    }
    z
}

#[test]
fn unreduced_z_n1_three_ways() {
    let pres = build_presentation(2, 1, 1).unwrap();
    let ctx = WitnessContext::new(&pres).unwrap();
    let ub0 = ctx.ub0(1).unwrap();
    let z = z_by_raw_substitution(&ctx, &ub0);
    let alpha = &pres.alphabet;
    let by_kind = [
        z.count(alpha.t()),
        z.count(alpha.x(1)) + z.count(alpha.y(1)),
        z.count(alpha.x(2)) + z.count(alpha.y(2)),
    ];
    let streamed = z_unreduced_counts_streaming(&ctx, &ub0, u64::MAX).unwrap();
    let matrix = z_counts_matrix(&ctx, &ub0).unwrap();
    assert_eq!(streamed, by_kind);
    for k in 0..3 {
        assert_eq!(matrix[k], BigUint::from(by_kind[k]));
    }
    assert_eq!(z.len_u64(), 37_493);
}

#[test]
fn streaming_enumeration_stops_at_its_limit() {
    let pres = build_presentation(2, 1, 1).unwrap();
    let ctx = WitnessContext::new(&pres).unwrap();
    let ub0 = ctx.ub0(2).unwrap();
    assert!(matches!(
        z_unreduced_counts_streaming(&ctx, &ub0, 1_000),
        Err(Error::Budget { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn grammar_and_matrix_agree(pq in 0usize..4, n in 1u64..7) {
        let (p, q) = [(2, 1), (3, 1), (3, 2), (4, 2)][pq];
        let pres = build_presentation(p, q, 1).unwrap();
        let ctx = WitnessContext::new(&pres).unwrap();
        let ub0 = ctx.ub0(n).unwrap();
        prop_assert_eq!(ctx.z_len_grammar(&ub0).unwrap(), ctx.z_len_matrix(&ub0).unwrap());
    }

    #[test]
    fn counting_is_scale_free(n in 1u64..30, scale in 1u32..300) {
        let a = build_presentation(3, 2, 1).unwrap();
        let b = build_presentation(3, 2, scale).unwrap();
        let wa = assemble_witness(&WitnessContext::new(&a).unwrap(), n, Mode::Counting).unwrap();
        let wb = assemble_witness(&WitnessContext::new(&b).unwrap(), n, Mode::Counting).unwrap();
        prop_assert_eq!(wa.w, wb.w);
        prop_assert_eq!(wa.ub0, wb.ub0);
    }
}
