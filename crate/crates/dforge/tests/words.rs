use dforge::words::{
    are_conjugate, least_rotation, primitive_period, Alphabet, Letter, Run, Substitution, Word,
};
use proptest::prelude::*;

fn alpha() -> Alphabet {
    Alphabet::new(2).unwrap()
}

/// Letters drawn from a1, a2, t and x1 with either sign.
fn letter() -> impl Strategy<Value = Letter> {
    let a = alpha();
    let ids = [a.a1(), a.a2(), a.t(), a.x(1)];
    (0..ids.len(), any::<bool>()).prop_map(move |(i, inv)| Letter::new(ids[i], inv))
}

fn letters(max: usize) -> impl Strategy<Value = Vec<Letter>> {
    prop::collection::vec(letter(), 0..max)
}

/// Runs long enough that some of them cross the run-length threshold.
fn runs() -> impl Strategy<Value = Vec<Run>> {
    prop::collection::vec((letter(), 1u64..200), 0..12)
        .prop_map(|v| v.into_iter().map(|(l, n)| Run::new(l, n)).collect())
}

fn naive_reduce(v: &[Letter]) -> Vec<Letter> {
    let mut out: Vec<Letter> = Vec::new();
    for &l in v {
        if out.last() == Some(&l.inv()) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}

fn expand(runs: &[Run]) -> Vec<Letter> {
    runs.iter()
        .flat_map(|r| std::iter::repeat_n(r.letter, r.len as usize))
        .collect()
}

proptest! {
    #[test]
    fn free_reduce_matches_stack(v in letters(40)) {
        let w = Word::from_letters(v.clone()).free_reduce();
        prop_assert_eq!(w.to_vec(), naive_reduce(&v));
        prop_assert!(w.is_freely_reduced());
        prop_assert_eq!(w.free_reduce(), w);
    }

    #[test]
    fn inverse_cancels(v in letters(40)) {
        let w = Word::from_letters(v);
        prop_assert_eq!(w.inverse().inverse(), w.clone());
        prop_assert!(w.concat(&w.inverse()).free_reduce().is_empty());
    }

    #[test]
    fn runs_agree_with_plain_letters(r in runs()) {
        let plain = expand(&r);
        let w = Word::from_runs(r);
        prop_assert_eq!(w.len_u64(), plain.len() as u64);
        prop_assert_eq!(w.to_vec(), plain.clone());
        prop_assert_eq!(w.free_reduce().to_vec(), naive_reduce(&plain));
    }

    #[test]
    fn split_then_concat(r in runs(), frac in 0.0f64..1.0) {
        let w = Word::from_runs(r);
        let k = (w.len_u64() as f64 * frac) as u64;
        let (a, b) = w.split_at(k);
        prop_assert_eq!(a.len_u64(), k);
        prop_assert_eq!(a.concat(&b), w);
    }

    #[test]
    fn least_rotation_is_minimal(v in letters(16)) {
        prop_assume!(!v.is_empty());
        let i = least_rotation(&v);
        let rot = |k: usize| -> Vec<Letter> { v[k..].iter().chain(&v[..k]).copied().collect() };
        let best = (0..v.len()).map(rot).min().unwrap();
        prop_assert_eq!(rot(i), best);
    }

    #[test]
    fn period_divides_and_fixes(v in letters(12), reps in 1usize..4) {
        prop_assume!(!v.is_empty());
        let s: Vec<Letter> = v.iter().cycle().take(v.len() * reps).copied().collect();
        let d = primitive_period(&s);
        prop_assert_eq!(s.len() % d, 0);
        prop_assert!(d <= v.len());
        for i in 0..s.len() {
            prop_assert_eq!(s[i], s[(i + d) % s.len()]);
        }
    }

    #[test]
    fn rotations_and_conjugates_are_conjugate(v in letters(20), k in 0u64..20, c in letters(6)) {
        let w = Word::from_letters(v).free_reduce();
        prop_assume!(w.is_cyclically_reduced() && !w.is_empty());
        let r = w.rotate(k % w.len_u64());
        prop_assert!(are_conjugate(&w, &r));
        let cw = Word::from_letters(c);
        let conj = cw.inverse().concat(&w).concat(&cw).free_reduce();
        prop_assert!(are_conjugate(&w, &conj));
    }

    #[test]
    fn text_round_trip(r in runs()) {
        let a = alpha();
        let w = Word::from_runs(r).free_reduce();
        prop_assert_eq!(Word::parse(&a, &w.to_text(&a)).unwrap(), w);
    }

    #[test]
    fn substitution_is_a_homomorphism(u in letters(15), v in letters(15)) {
        let a = alpha();
        let mut s = Substitution::new();
        s.set(a.a1(), Word::parse(&a, "a1 a2").unwrap());
        s.set(a.a2(), Word::parse(&a, "a2").unwrap());
        s.set(a.t(), Word::parse(&a, "x1^-1 t x1").unwrap());
        s.set(a.x(1), Word::parse(&a, "x1^3").unwrap());
        let (u, v) = (Word::from_letters(u), Word::from_letters(v));
        let whole = u.concat(&v).apply_substitution(&s).unwrap();
        let parts = u.apply_substitution(&s).unwrap().concat(&v.apply_substitution(&s).unwrap());
        prop_assert_eq!(whole, parts);
    }
}

#[test]
fn non_conjugate_words() {
    let a = alpha();
    let w = Word::parse(&a, "a1 a2").unwrap();
    let z = Word::parse(&a, "a1 a2^-1").unwrap();
    assert!(!are_conjugate(&w, &z));
    assert!(!are_conjugate(&w, &w.inverse()));
}

#[test]
fn missing_image_is_an_error() {
    let a = alpha();
    let s = Substitution::new();
    assert!(Word::parse(&a, "a1").unwrap().apply_substitution(&s).is_err());
}

#[test]
fn bad_token_reports_position() {
    let a = alpha();
    let err = Word::parse(&a, "a1 q7").unwrap_err().to_string();
    assert!(err.contains("column"), "{err}");
}
