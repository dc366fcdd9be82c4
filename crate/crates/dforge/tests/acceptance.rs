//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Exact integer values are checked against oracles written here (Pascal's
//! triangle, direct recounts) rather than against the library's own helpers.
//! Criteria 8 and 9 contain parts that cannot be run within the letter
//! budget; those parts are reported as FAIL with the reason, and the process
//! exit code only turns red when a part that *can* run fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use dforge::curve::{distortion_curve, predict_iterated};
use dforge::derivation::replay_derivation;
use dforge::hnn::{fold, verify_free_basis, Hnn};
use dforge::presentation::{build_presentation, derive_hnn_data, Presentation};
use dforge::qgroup::{
    binomial_counts, check_phi_inverse_properties, qpq_constant, qpq_oracle, sample_phi_inverse_properties, Phi,
};
use dforge::sc::{analytic_rips_margins, brute_report};
use dforge::witness::{
    assemble_witness, z_counts_matrix, z_reduced_len_streaming, z_unreduced_counts_streaming, Mode,
    WitnessContext,
};
use dforge::words::{Alphabet, CountMode};
use dforge::Error;
use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const PQ: [(u32, u32); 6] = [(2, 1), (3, 1), (3, 2), (4, 1), (4, 2), (4, 3)];

/// Pascal's triangle up to row `n`, as u128.
fn pascal(n: usize) -> Vec<Vec<u128>> {
    let mut rows: Vec<Vec<u128>> = vec![vec![1]];
    for r in 1..=n {
        let prev = &rows[r - 1];
        let mut row = vec![1u128; r + 1];
        for k in 1..r {
            row[k] = prev[k - 1] + prev[k];
        }
        rows.push(row);
    }
    rows
}

fn c(tri: &[Vec<u128>], n: u64, k: u64) -> u128 {
    if k > n {
        0
    } else {
        tri[n as usize][k as usize]
    }
}

struct Outcome {
    pass: bool,
    /// A FAIL that comes only from parts documented as out of reach.
    known_gap: bool,
    detail: String,
}

impl Outcome {
    fn ok(pass: bool, detail: String) -> Self {
        Outcome { pass, known_gap: false, detail }
    }
}

type Check = fn() -> Result<Outcome, Error>;

fn criterion_1() -> Result<Outcome, Error> {
    let start = Instant::now();
    let mut lines = Vec::new();
    for (p, q) in PQ {
        let pres = build_presentation(p, q, 200)?;
        let census = pres.census()?;
        let t = pres.alphabet.t();
        let balanced = pres.relators.iter().all(|r| {
            let w = r.cyclic();
            w.letter_count(t, CountMode::ExponentSum) == 0 && w.count(t) == 2
        });
        let ok = census.relators == 5 * p as usize + 11
            && census.x_used == 14 * p as usize
            && census.y_used == 30
            && balanced;
        if !ok {
            return Ok(Outcome::ok(false, format!("p={p} q={q}: {census:?} balanced={balanced}")));
        }
        lines.push(format!("{p}/{q}:{}", census.relators));
    }
    let el = start.elapsed();
    Ok(Outcome::ok(
        el < Duration::from_secs(5),
        format!("relators {} at scale 200, {:.2?}", lines.join(" "), el),
    ))
}

fn criterion_2() -> Result<Outcome, Error> {
    let start = Instant::now();
    let mut parts = Vec::new();
    let mut pass = true;
    for (p, q) in PQ {
        let pres = build_presentation(p, q, 200)?;
        let rep = analytic_rips_margins(&pres)?;
        let b = rep.relator_bound.clone().expect("analytic bound");
        let margin = 6 * b.piece_ub < b.min_word;
        let length = b.min_word > 80_000 * (p as u64).pow(2);
        pass &= margin && length && rep.all_hold();
        if q == 1 {
            parts.push(format!(
                "p={p}: 6*{}<{} quoted_piece={}",
                b.piece_ub, b.min_word, rep.quoted_piece_figure
            ));
        }
    }
    let el = start.elapsed();
    pass &= el < Duration::from_secs(10);
    Ok(Outcome::ok(pass, format!("{}; {:.2?}", parts.join("; "), el)))
}

fn criterion_3() -> Result<Outcome, Error> {
    let start = Instant::now();
    let mut tested = 0;
    let mut worst = String::new();
    for (p, q) in PQ {
        for scale in 1.. {
            let pres = build_presentation(p, q, scale)?;
            if pres.total_letters() > 100_000 {
                break;
            }
            let brute = brute_report(&pres, u64::MAX)?;
            let analytic = analytic_rips_margins(&pres)?;
            let ub = analytic.relator_bound.as_ref().expect("bound").piece_ub;
            let bp = brute.conditions[0].max_piece;
            let agree = brute.conditions[0].holds == analytic.conditions[0].holds;
            if bp > ub || !agree {
                return Ok(Outcome::ok(
                    false,
                    format!("p={p} q={q} scale={scale}: brute={bp} ub={ub} agree={agree}"),
                ));
            }
            tested += 1;
            worst = format!("last p={p} q={q} scale={scale} brute={bp}<=ub={ub}");
        }
    }
    let el = start.elapsed();
    Ok(Outcome::ok(
        tested >= 5 && el < Duration::from_secs(120),
        format!("{tested} toy presentations, {worst}, {:.2?}", el),
    ))
}

fn criterion_4() -> Result<Outcome, Error> {
    let start = Instant::now();
    let tri = pascal(25);
    let mut entries = 0u64;
    for p in 2..=4u32 {
        let phi = Phi::new(Alphabet::new(p)?);
        for n in 0..=25u64 {
            for i in 0..=p {
                let counts = binomial_counts(&phi, n, i)?;
                for (j, &v) in counts.iter().enumerate() {
                    let j = j as u64;
                    let want = if j < i as u64 { 0 } else { c(&tri, n, j - i as u64) };
                    if v as u128 != want {
                        return Ok(Outcome::ok(false, format!("p={p} n={n} i={i} j={j}: {v} != {want}")));
                    }
                    entries += 1;
                }
            }
        }
    }
    let el = start.elapsed();
    Ok(Outcome::ok(el < Duration::from_secs(60), format!("{entries} counts exact, {:.2?}", el)))
}

fn criterion_5() -> Result<Outcome, Error> {
    let phi2 = Phi::new(Alphabet::new(2)?);
    let ex = check_phi_inverse_properties(&phi2, 8)?;
    let mut detail = format!("p=2 exhaustive pairs={} positive_images={}", ex.pairs_checked, ex.positive_images);
    let mut pass = ex.ok();
    for p in [3u32, 4] {
        let phi = Phi::new(Alphabet::new(p)?);
        let mut rng = ChaCha8Rng::seed_from_u64(p as u64);
        let r = sample_phi_inverse_properties(&phi, 8, 10_000, &mut rng)?;
        pass &= r.ok() && r.pairs_checked == 10_000;
        detail.push_str(&format!(
            "; p={p} sampled={} failures={}",
            r.pairs_checked,
            r.junction_failures + r.suffix_failures + r.length_failures
        ));
    }
    Ok(Outcome::ok(pass, detail))
}

fn criterion_6() -> Result<Outcome, Error> {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for (p, q) in [(2u32, 1u32), (3, 2)] {
        let r = qpq_oracle(p, q, 6, 8, u64::MAX)?;
        let c0 = qpq_constant(p);
        // oracle: C0 = (p+1)(2p)^(2p^2) recomputed here
        let want = BigUint::from(p + 1) * BigUint::from(2 * p).pow(2 * p * p);
        let below = r.max_ratio <= c0.to_f64().unwrap_or(f64::INFINITY);
        pass &= c0 == want && r.holds && below;
        parts.push(format!(
            "({p},{q}) instances={} max_ratio={:.6}",
            r.instances.len(),
            r.max_ratio
        ));
    }
    let el = start.elapsed();
    pass &= el < Duration::from_secs(600);
    Ok(Outcome::ok(pass, format!("{}; {:.2?}", parts.join("; "), el)))
}

fn criterion_7() -> Result<Outcome, Error> {
    let tri = pascal(26);
    let mut checked = 0;
    let mut worst_ratio = 0f64;
    for (p, q) in PQ {
        let pres = build_presentation(p, q, 2)?;
        let ctx = WitnessContext::new(&pres)?;
        let constant = (q as u128 + 1) * (0..=q as u64).map(|i| c(&tri, q as u64, i)).max().unwrap();
        let mut prev: Option<u128> = None;
        for n in 1..=25u64 {
            let b = assemble_witness(&ctx, n, Mode::Counting)?;
            let ub0: u128 = (0..=p as u64).map(|i| c(&tri, n, i)).sum();
            let w_len = 2 * c(&tri, n, q as u64) + 2 * n as u128 + (2 * n as u128 + 3);
            let ok = b.v_a1 == n
                && b.v_a2 as u128 == c(&tri, n, q as u64)
                && b.ub0_len() as u128 == ub0
                && b.w_len() as u128 == w_len;
            if !ok {
                return Ok(Outcome::ok(false, format!("p={p} q={q} n={n}: identity mismatch")));
            }
            if let Some(pw) = prev {
                let ratio = w_len as f64 / pw as f64;
                worst_ratio = worst_ratio.max(ratio / constant as f64);
                if w_len > constant * pw {
                    return Ok(Outcome::ok(false, format!("p={p} q={q} n={n}: sparsity ratio {ratio}")));
                }
            }
            prev = Some(w_len);
            checked += 1;
        }
    }
    Ok(Outcome::ok(
        true,
        format!("{checked} witnesses exact; max ratio/constant={worst_ratio:.4}"),
    ))
}

fn replay_and_britton(pres: &Presentation, hnn: &Hnn, n: u64) -> Result<String, Error> {
    let ctx = WitnessContext::new(pres)?;
    let b = assemble_witness(&ctx, n, Mode::Explicit)?;
    let e = b.explicit.as_ref().expect("explicit parts");
    replay_derivation(ctx.table(), &e.derivation)?;
    let replay_ok = e.derivation.start == b.w && e.derivation.end.free_reduce() == e.chi.free_reduce();
    let br = hnn.britton_reduce(&b.w.concat(&e.chi.inverse()));
    if !replay_ok || !br.trivial {
        return Err(Error::Verification(format!(
            "n={n}: replay_ok={replay_ok} britton_trivial={}",
            br.trivial
        )));
    }
    Ok(format!("n={n} ok ({} steps, {} pinches)", e.derivation.steps.len(), br.pinches))
}

fn criterion_8() -> Result<Outcome, Error> {
    let start = Instant::now();
    let mut parts = Vec::new();
    let mut feasible_ok = true;
    let mut gaps = 0;
    for scale in [2u32, 4] {
        let pres = build_presentation(2, 1, scale)?;
        let hnn = Hnn::new(&pres, &derive_hnn_data(&pres)?)?;
        for n in 1..=3u64 {
            match replay_and_britton(&pres, &hnn, n) {
                Ok(s) => parts.push(format!("scale={scale} {s}")),
                Err(Error::Budget { needed, .. }) => {
                    gaps += 1;
                    parts.push(format!("scale={scale} n={n} out of budget (needs {needed})"));
                }
                Err(e) => {
                    feasible_ok = false;
                    parts.push(format!("scale={scale} n={n} error: {e}"));
                }
            }
        }
    }
    let el = start.elapsed();
    feasible_ok &= el < Duration::from_secs(300);
    Ok(Outcome {
        pass: feasible_ok && gaps == 0,
        known_gap: feasible_ok && gaps > 0,
        detail: format!("{}; {:.2?}", parts.join("; "), el),
    })
}

fn criterion_9() -> Result<Outcome, Error> {
    let pres = build_presentation(2, 1, 1)?;
    let ctx = WitnessContext::new(&pres)?;
    let k1 = ctx.k1();
    let mut parts = Vec::new();
    let mut feasible_ok = true;
    let mut gap = false;
    for n in 1..=3u64 {
        let ub0 = ctx.ub0(n)?;
        let matrix: BigUint = z_counts_matrix(&ctx, &ub0)?.iter().sum();
        let grammar = ctx.z_len_grammar(&ub0)?;
        feasible_ok &= matrix == grammar;
        let limit = 10_000_000_000u64;
        match z_unreduced_counts_streaming(&ctx, &ub0, limit) {
            Ok(counts) => {
                let explicit: u64 = counts.iter().sum();
                feasible_ok &= BigUint::from(explicit) == matrix;
                parts.push(format!("n={n} unreduced explicit={explicit} matrix={matrix}"));
            }
            Err(Error::Budget { .. }) => {
                gap = true;
                parts.push(format!("n={n} unreduced matrix={matrix} (grammar only, not enumerable)"));
            }
            Err(e) => return Err(e),
        }
        if n <= 2 {
            let reduced = z_reduced_len_streaming(&ctx, &ub0)?;
            if n == 1 {
                // cross-check the streaming count against a materialised word
                let direct = ctx.z_explicit(&ub0)?.len_u64();
                feasible_ok &= direct == reduced;
            }
            let bound = BigUint::from(k1).pow(ub0.len_u64() as u32);
            feasible_ok &= BigUint::from(reduced) >= bound;
            parts.push(format!("n={n} reduced={reduced}>={bound}"));
        }
    }
    Ok(Outcome {
        pass: feasible_ok && !gap,
        known_gap: feasible_ok && gap,
        detail: parts.join("; "),
    })
}

fn criterion_10() -> Result<Outcome, Error> {
    let mut parts = Vec::new();
    let mut pass = true;
    for (p, q) in PQ {
        let mut chosen = None;
        for scale in 1..=4 {
            let pres = build_presentation(p, q, scale)?;
            let rep = brute_report(&pres, u64::MAX)?;
            if rep.conditions[1].holds && rep.conditions[3].holds {
                chosen = Some((scale, pres));
                break;
            }
        }
        let Some((scale, pres)) = chosen else {
            return Ok(Outcome::ok(false, format!("p={p} q={q}: C(3)/C(5) never certified")));
        };
        let d = derive_hnn_data(&pres)?;
        let rs = fold(&d.s_set)?.rank();
        let ru = fold(&d.u_set)?.rank();
        let s1 = verify_free_basis(&d.s1)?.is_basis;
        let s2 = verify_free_basis(&d.s2)?.is_basis;
        let ok = rs == d.s_set.len() as i64 && ru == 2 * (5 * p as i64 + 11) && s1 && s2;
        pass &= ok;
        parts.push(format!("({p},{q}) scale={scale} rank S={rs} U={ru}"));
    }
    Ok(Outcome::ok(pass, parts.join("; ")))
}

fn criterion_11() -> Result<Outcome, Error> {
    let mut parts = Vec::new();
    let mut pass = true;
    for (p, q) in [(2u32, 1u32), (3, 1), (3, 2)] {
        let a = distortion_curve(p, q, 4, 60)?;
        let b = distortion_curve(p, q, 200, 60)?;
        let target = p as f64 / q as f64;
        let rel = (a.slope - target).abs() / target;
        let drift = (a.slope - b.slope).abs() / a.slope.abs();
        pass &= rel < 0.2 && drift < 0.01 && a.fit_window == (30, 60);
        parts.push(format!("({p},{q}) slope={:.4} rel_err={:.4} drift={:.2e}", a.slope, rel, drift));
    }
    Ok(Outcome::ok(pass, parts.join("; ")))
}

fn within_ulps(a: f64, b: f64, ulps: f64) -> bool {
    a == b || (a - b).abs() <= ulps * f64::EPSILON * a.abs().max(b.abs())
}

fn criterion_12() -> Result<Outcome, Error> {
    let curve = distortion_curve(2, 1, 1, 4)?;
    let k1 = curve.k1 as f64;
    let mut pass = true;
    for (n, v) in predict_iterated(&curve, 1)? {
        let len = curve.points[n as usize - 1].ub0_len.to_u64().expect("small") as i32;
        pass &= v.value() == Some(k1.powi(len));
    }
    let mut compared = 0;
    for k in [2u32, 3] {
        for (n, v) in predict_iterated(&curve, k)?.into_iter().filter(|(n, _)| *n <= 3) {
            let len = curve.points[n as usize - 1].ub0_len.to_u64().expect("small") as i32;
            // direct arithmetic: f = K1^len, then k-1 exponentials
            let mut direct = vec![k1.powi(len)];
            for _ in 1..k {
                direct.push(direct.last().unwrap().exp());
            }
            for (lvl, want) in direct.iter().enumerate() {
                let m = k - 1 - lvl as u32;
                match v.log_at(m) {
                    Some(got) => {
                        pass &= within_ulps(got, *want, 4.0);
                        compared += 1;
                    }
                    None => pass &= !want.is_finite(),
                }
            }
        }
    }
    Ok(Outcome::ok(pass, format!("k=1 exact; {compared} nested values within 4 ulp")))
}

fn main() -> ExitCode {
    let checks: [(u32, &str, Check); 12] = [
        (1, "structural census", criterion_1),
        (2, "small cancellation at scale 200", criterion_2),
        (3, "brute/analytic agreement", criterion_3),
        (4, "binomial letter counts", criterion_4),
        (5, "phi^-1 junction and length properties", criterion_5),
        (6, "qpq oracle sweep", criterion_6),
        (7, "witness identities and sparsity", criterion_7),
        (8, "derivation replay and Britton reduction", criterion_8),
        (9, "Z length accounting", criterion_9),
        (10, "free bases by folding", criterion_10),
        (11, "distortion slope", criterion_11),
        (12, "iterated prediction arithmetic", criterion_12),
    ];
    let mut unexpected = 0;
    for (id, name, check) in checks {
        let t = Instant::now();
        let out = check().unwrap_or_else(|e| Outcome::ok(false, format!("error: {e}")));
        let verdict = if out.pass { "PASS" } else { "FAIL" };
        let note = if out.known_gap { " [out of reach, see notes]" } else { "" };
        println!(
            "criterion {id:>2} {verdict} {name}{note} ({:.2?}): {}",
            t.elapsed(),
            out.detail
        );
        if !out.pass && !out.known_gap {
            unexpected += 1;
        }
    }
    if unexpected > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
