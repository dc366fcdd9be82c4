use dforge::presentation::{build_presentation, build_rips_table, derive_hnn_data, Presentation};
use dforge::words::{are_conjugate, Word};
use dforge::Error;

const PQ: [(u32, u32); 6] = [(2, 1), (3, 1), (3, 2), (4, 1), (4, 2), (4, 3)];

/// Length of the i-th Rips word (1-based): `m` single letters plus runs
/// `e, e+1, .., e+m-1` with `m = scale·p` and `e = m·i`.
fn rips_len(p: u32, scale: u32, i: u64) -> u64 {
    let m = (scale * p) as u64;
    m + m * m * i + m * (m - 1) / 2
}

#[test]
fn rips_lengths_follow_the_run_pattern() {
    for (p, q) in [(2, 1), (4, 3)] {
        for scale in [1, 3, 200] {
            let t = build_rips_table(p, q, scale).unwrap();
            assert_eq!(t.x_words.len(), 14 * p as usize);
            assert_eq!(t.y_words.len(), 30);
            for (i, w) in t.x_words.iter().enumerate() {
                assert_eq!(w.len_u64(), rips_len(p, scale, i as u64 + 1));
            }
            for (i, w) in t.y_words.iter().enumerate() {
                assert_eq!(w.len_u64(), rips_len(p, scale, i as u64 + 1));
            }
        }
    }
    assert_eq!(rips_len(2, 200, 1), 240_200);
}

#[test]
fn census_counts_for_every_parameter_pair() {
    for (p, q) in PQ {
        let c = build_presentation(p, q, 2).unwrap().census().unwrap();
        assert_eq!(c.relators, 5 * p as usize + 11);
        assert_eq!((c.x_used, c.y_used), (14 * p as usize, 30));
    }
}

#[test]
fn census_rejects_a_reused_rips_word() {
    let mut pres = build_presentation(3, 1, 1).unwrap();
    pres.inject_duplicate_rips();
    assert!(pres.census().is_err());
}

#[test]
fn serialize_parse_round_trip() {
    for (p, q) in PQ {
        let pres = build_presentation(p, q, 1).unwrap();
        let back = Presentation::parse(&pres.serialize()).unwrap();
        assert_eq!(back.relator_words(), pres.relator_words());
        for (a, b) in back.relators.iter().zip(&pres.relators) {
            assert_eq!(a.id, b.id);
            assert_eq!(a.noise, b.noise);
        }
        back.census().unwrap();
    }
}

#[test]
fn parse_rejects_garbage() {
    let err = Presentation::parse("not a presentation").unwrap_err();
    assert!(matches!(err, Error::Parse { .. }), "{err}");
}

#[test]
fn t_form_rebuilds_the_relator() {
    let pres = build_presentation(3, 2, 1).unwrap();
    let t = Word::letter(dforge::words::Letter::pos(pres.alphabet.t()));
    for r in &pres.relators {
        let (u, v) = r.t_form(&pres.alphabet).unwrap();
        let rebuilt = t.inverse().concat(&u).concat(&t).concat(&v.inverse());
        assert!(are_conjugate(&rebuilt, &r.cyclic()), "relator {}", r.id);
    }
}

#[test]
fn bad_parameters_are_rejected() {
    for (p, q, s) in [(1, 0, 1), (2, 2, 1), (3, 0, 1), (2, 1, 0)] {
        assert!(matches!(build_presentation(p, q, s), Err(Error::Param(_))));
    }
}

#[test]
fn hnn_data_sizes() {
    for (p, q) in [(2, 1), (3, 2)] {
        let pres = build_presentation(p, q, 1).unwrap();
        let d = derive_hnn_data(&pres).unwrap();
        let r = 5 * p as usize + 11;
        assert_eq!(d.pairs.len(), r);
        assert_eq!(d.u_set.len(), 2 * r);
        assert_eq!(d.s_set.len(), r);
        assert_eq!(d.k_sets.len(), p as usize + 1);
    }
}
