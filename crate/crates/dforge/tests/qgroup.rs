use dforge::qgroup::{
    binom, binom_u64, binomial_inequalities, fence_normalize, q_normal_form, qpq_constant, qpq_oracle,
    random_fence_triple, Direction, Phi, QElement,
};
use dforge::words::{Alphabet, Letter};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn phi(p: u32) -> Phi {
    Phi::new(Alphabet::new(p).unwrap())
}

fn b_letters(p: u32, max: usize) -> impl Strategy<Value = Vec<Letter>> {
    let a = Alphabet::new(p).unwrap();
    prop::collection::vec((0..=p, any::<bool>()), 0..max)
        .prop_map(move |v| v.into_iter().map(|(i, inv)| Letter::new(a.b(i), inv)).collect())
}

fn q_letters(p: u32, max: usize) -> impl Strategy<Value = Vec<Letter>> {
    let a = Alphabet::new(p).unwrap();
    prop::collection::vec((0..=p + 1, any::<bool>()), 0..max).prop_map(move |v| {
        v.into_iter()
            .map(|(i, inv)| {
                let g = if i == p + 1 { a.a1() } else { a.b(i) };
                Letter::new(g, inv)
            })
            .collect()
    })
}

fn reduce(v: &[Letter]) -> Vec<Letter> {
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

/// `phi^-1(b_p) = b_p` and `phi^-1(b_j) = phi^-1(b_{j+1})^-1 b_j`, unrolled.
fn inverse_image_closed_form(a: &Alphabet, j: u32) -> Vec<Letter> {
    let p = a.p();
    let mut img = vec![Letter::pos(a.b(p))];
    for k in (j..p).rev() {
        let mut next: Vec<Letter> = img.iter().rev().map(|l| l.inv()).collect();
        next.push(Letter::pos(a.b(k)));
        img = reduce(&next);
    }
    img
}

#[test]
fn letter_images() {
    for p in 2..=4 {
        let f = phi(p);
        let a = *f.alphabet();
        for j in 0..p {
            assert_eq!(f.image(j, Direction::Forward), &[Letter::pos(a.b(j + 1)), Letter::pos(a.b(j))]);
        }
        assert_eq!(f.image(p, Direction::Forward), &[Letter::pos(a.b(p))]);
        for j in 0..=p {
            assert_eq!(f.image(j, Direction::Inverse), inverse_image_closed_form(&a, j).as_slice(), "p={p} j={j}");
        }
    }
}

#[test]
fn binom_small_values() {
    assert_eq!(binom_u64(10, 3), 120);
    assert_eq!(binom_u64(3, 5), 0);
    assert_eq!(binom(60, 30).to_string(), "118264581564861424");
}

#[test]
fn conjugating_b_by_a1_powers() {
    // a1^-n b_i a1^n normalises to phi^n(b_i)
    let f = phi(3);
    let a = *f.alphabet();
    let a1 = Letter::pos(a.a1());
    for n in 0..8usize {
        for i in 0..=3 {
            let mut w = vec![a1.inv(); n];
            w.push(Letter::pos(a.b(i)));
            w.extend(std::iter::repeat_n(a1, n));
            let nf = q_normal_form(&f, &w).unwrap();
            assert_eq!(nf.k, 0);
            assert_eq!(nf.w, f.power(&[Letter::pos(a.b(i))], n as i64).unwrap());
        }
    }
}

#[test]
fn qpq_small_sweep_holds() {
    assert_eq!(qpq_constant(2).to_string(), "196608");
    let r = qpq_oracle(2, 1, 3, 4, u64::MAX).unwrap();
    assert!(r.holds);
    assert!(!r.instances.is_empty());
    assert!(qpq_oracle(2, 2, 3, 4, u64::MAX).is_err());
}

#[test]
fn binomial_inequalities_hold() {
    for p in 2..=4 {
        let r = binomial_inequalities(p, 60);
        assert!(r.failures.is_empty(), "{:?}", r.failures);
        assert!(r.checked > 0);
    }
}

proptest! {
    #[test]
    fn phi_round_trip(v in b_letters(3, 20)) {
        let f = phi(3);
        let there = f.apply(&v, Direction::Forward).unwrap();
        prop_assert_eq!(f.apply(&there, Direction::Inverse).unwrap(), reduce(&v));
        prop_assert_eq!(f.power(&f.power(&v, 4).unwrap(), -4).unwrap(), reduce(&v));
    }

    #[test]
    fn phi_is_multiplicative(u in b_letters(2, 12), v in b_letters(2, 12)) {
        let f = phi(2);
        let mut uv = u.clone();
        uv.extend_from_slice(&v);
        let mut split = f.apply(&u, Direction::Forward).unwrap();
        split.extend(f.apply(&v, Direction::Forward).unwrap());
        prop_assert_eq!(f.apply(&uv, Direction::Forward).unwrap(), reduce(&split));
    }

    #[test]
    fn normal_form_is_a_homomorphism(u in q_letters(2, 10), v in q_letters(2, 10)) {
        let f = phi(2);
        let mut uv = u.clone();
        uv.extend_from_slice(&v);
        let lhs = q_normal_form(&f, &uv).unwrap();
        let rhs = q_normal_form(&f, &u).unwrap().mul(&q_normal_form(&f, &v).unwrap(), &f).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn word_times_inverse_is_identity(u in q_letters(3, 12)) {
        let f = phi(3);
        let mut w = u.clone();
        w.extend(u.iter().rev().map(|l| l.inv()));
        prop_assert_eq!(q_normal_form(&f, &w).unwrap(), QElement::identity());
    }

    #[test]
    fn fence_normalisation_ends_positive(seed in any::<u64>(), l in 1usize..6) {
        let f = phi(3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_fence_triple(&f, &mut rng, l, 3).unwrap();
        let (nf, moves) = fence_normalize(&f, &t).unwrap();
        nf.validate(&f).unwrap();
        prop_assert!(nf.eps.iter().all(|&e| e == 1));
        prop_assert!(nf.total_u_len() <= t.total_u_len());
        prop_assert!(nf.len() + moves.len() <= t.len());
    }
}
