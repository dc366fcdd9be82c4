//! Computation in the free-by-cyclic quotient
//! `Q = <a1, b0..bp | a1^-1 b_i a1 = phi(b_i)>`.
//!
//! Words over `b0..bp` are handled as plain letter vectors; `a1` is the only
//! other generator `Q` knows about.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::words::{reduce_letters, Alphabet, GenKind, Letter, Word};

/// `C(n, k)` as a big integer, zero when `k > n`.
pub fn binom(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

pub fn binom_u64(n: u64, k: u64) -> u64 {
    binom(n, k).to_u64().expect("binomial exceeds u64")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Letter images of `phi` and `phi^-1` on `b0..bp`.
#[derive(Clone, Debug)]
pub struct Phi {
    alpha: Alphabet,
    fwd: Vec<Vec<Letter>>,
    inv: Vec<Vec<Letter>>,
}

impl Phi {
    pub fn new(alpha: Alphabet) -> Self {
        let p = alpha.p();
        let b = |i: u32| Letter::pos(alpha.b(i));
        let mut fwd = Vec::new();
        for j in 0..=p {
            if j < p {
                fwd.push(vec![b(j + 1), b(j)]);
            } else {
                fwd.push(vec![b(p)]);
            }
        }
        // phi^-1(b_j) = phi^-1(b_{j+1})^-1 b_j, starting from phi^-1(b_p) = b_p
        let mut inv = vec![Vec::new(); p as usize + 1];
        inv[p as usize] = vec![b(p)];
        for j in (0..p).rev() {
            let mut w: Vec<Letter> = inv[j as usize + 1].iter().rev().map(|l| l.inv()).collect();
            w.push(b(j));
            reduce_letters(&mut w);
            inv[j as usize] = w;
        }
        Phi { alpha, fwd, inv }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alpha
    }

    fn b_index(&self, l: Letter) -> Result<usize> {
        match self.alpha.kind(l.id()) {
            GenKind::B(i) => Ok(i as usize),
            _ => Err(Error::Alphabet(format!(
                "phi is only defined on b-letters, got {}",
                self.alpha.name(l.id())
            ))),
        }
    }

    /// Letterwise image followed by free reduction.
    pub fn apply(&self, v: &[Letter], dir: Direction) -> Result<Vec<Letter>> {
        let table = match dir {
            Direction::Forward => &self.fwd,
            Direction::Inverse => &self.inv,
        };
        let mut out = Vec::with_capacity(v.len() * 2);
        for &l in v {
            let img = &table[self.b_index(l)?];
            if l.is_inverse() {
                out.extend(img.iter().rev().map(|x| x.inv()));
            } else {
                out.extend_from_slice(img);
            }
        }
        reduce_letters(&mut out);
        Ok(out)
    }

    pub fn apply_word(&self, w: &Word, dir: Direction) -> Result<Word> {
        Ok(Word::from_letters(self.apply(&w.to_vec(), dir)?))
    }

    /// `phi^k` for any integer `k`.
    pub fn power(&self, v: &[Letter], k: i64) -> Result<Vec<Letter>> {
        let dir = if k >= 0 {
            Direction::Forward
        } else {
            Direction::Inverse
        };
        let mut cur = v.to_vec();
        reduce_letters(&mut cur);
        for _ in 0..k.unsigned_abs() {
            cur = self.apply(&cur, dir)?;
        }
        Ok(cur)
    }

    pub fn image(&self, j: u32, dir: Direction) -> &[Letter] {
        match dir {
            Direction::Forward => &self.fwd[j as usize],
            Direction::Inverse => &self.inv[j as usize],
        }
    }
}

/// Normal form `a1^k · w` of an element of `Q`, `w` freely reduced over the
/// b-letters.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QElement {
    pub k: i64,
    pub w: Vec<Letter>,
}

impl QElement {
    pub fn identity() -> Self {
        QElement { k: 0, w: Vec::new() }
    }

    /// `(a1^k w)(a1^k' w') = a1^{k+k'} phi^{k'}(w) w'`.
    pub fn mul(&self, other: &QElement, phi: &Phi) -> Result<QElement> {
        let mut w = phi.power(&self.w, other.k)?;
        w.extend_from_slice(&other.w);
        reduce_letters(&mut w);
        Ok(QElement {
            k: self.k + other.k,
            w,
        })
    }

    pub fn word(&self) -> Word {
        Word::from_slice(&self.w)
    }
}

/// Pushes every `a1^{±1}` to the left using `b a1 = a1 phi(b)` and
/// `b a1^-1 = a1^-1 phi^-1(b)`.
pub fn q_normal_form(phi: &Phi, letters: &[Letter]) -> Result<QElement> {
    let alpha = *phi.alphabet();
    let a1 = alpha.a1();
    let mut k = 0i64;
    let mut w: Vec<Letter> = Vec::new();
    for &l in letters {
        if l.id() == a1 {
            let dir = if l.is_inverse() {
                k -= 1;
                Direction::Inverse
            } else {
                k += 1;
                Direction::Forward
            };
            w = phi.apply(&w, dir)?;
        } else {
            match alpha.kind(l.id()) {
                GenKind::B(_) => {
                    if w.last() == Some(&l.inv()) {
                        w.pop();
                    } else {
                        w.push(l);
                    }
                }
                _ => {
                    return Err(Error::Alphabet(format!(
                        "letter {} is not a generator of Q",
                        alpha.name(l.id())
                    )))
                }
            }
        }
    }
    Ok(QElement { k, w })
}

pub fn q_normal_form_word(phi: &Phi, w: &Word) -> Result<QElement> {
    q_normal_form(phi, &w.to_vec())
}

/// Occurrence counts of `b0..bp` in `phi^n(b_i)`, checked against
/// `C(n, j)` for `b_{i+j}`.
pub fn binomial_counts(phi: &Phi, n: u64, i: u32) -> Result<Vec<u64>> {
    let alpha = *phi.alphabet();
    let p = alpha.p();
    if i > p {
        return Err(Error::Param(format!("index {i} exceeds p = {p}")));
    }
    let a1 = Letter::pos(alpha.a1());
    let mut word = vec![a1.inv(); n as usize];
    word.push(Letter::pos(alpha.b(i)));
    word.extend(std::iter::repeat_n(a1, n as usize));
    let nf = q_normal_form(phi, &word)?;
    if nf.k != 0 {
        return Err(Error::Assertion(format!("a1-exponent {} after conjugation", nf.k)));
    }
    let mut counts = vec![0u64; p as usize + 1];
    for l in &nf.w {
        if l.is_inverse() {
            return Err(Error::Assertion("conjugate of b_i is not positive".into()));
        }
        if let GenKind::B(j) = alpha.kind(l.id()) {
            counts[j as usize] += 1;
        }
    }
    for (j, &c) in counts.iter().enumerate() {
        let j = j as u32;
        let want = if j < i { 0 } else { binom_u64(n, (j - i) as u64) };
        if c != want {
            return Err(Error::Assertion(format!(
                "n={n} i={i}: b{j} occurs {c} times, expected {want}"
            )));
        }
    }
    Ok(counts)
}

/// Outcome of [`check_phi_inverse_properties`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PhiInverseReport {
    pub u_checked: u64,
    pub pairs_checked: u64,
    pub junction_failures: u64,
    pub suffix_failures: u64,
    pub length_failures: u64,
    pub positive_images: u64,
}

impl PhiInverseReport {
    pub fn ok(&self) -> bool {
        self.junction_failures == 0 && self.suffix_failures == 0 && self.length_failures == 0
    }
}

/// All positive words over `b0..bp` with length in `1..=max_len`.
pub fn positive_words(alpha: &Alphabet, max_len: usize) -> Vec<Vec<Letter>> {
    let letters: Vec<Letter> = (0..=alpha.p()).map(|i| Letter::pos(alpha.b(i))).collect();
    let mut out = Vec::new();
    let mut layer: Vec<Vec<Letter>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(layer.len() * letters.len());
        for w in &layer {
            for &l in &letters {
                let mut w2 = w.clone();
                w2.push(l);
                next.push(w2);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

fn check_pair(phi_u: &[Letter], v: &[Letter], rep: &mut PhiInverseReport) {
    rep.pairs_checked += 1;
    let cancels = matches!((phi_u.last(), v.first()), (Some(&a), Some(&b)) if a == b.inv());
    if cancels {
        rep.junction_failures += 1;
        return;
    }
    let mut joined = phi_u.to_vec();
    joined.extend_from_slice(v);
    if joined.iter().all(|l| !l.is_inverse()) && !joined.ends_with(v) {
        rep.suffix_failures += 1;
    }
}

fn check_length(u: &[Letter], phi_u: &[Letter], rep: &mut PhiInverseReport) {
    rep.u_checked += 1;
    if phi_u.iter().all(|l| !l.is_inverse()) {
        rep.positive_images += 1;
        if phi_u.len() > u.len() {
            rep.length_failures += 1;
        }
    }
}

/// Checks, over every pair of positive words `u, v` with `|u|, |v| <= max_len`:
/// `phi^-1(u) v` has no cancellation at the junction, `v` is a suffix of
/// the product whenever it is positive, and `|phi^-1(u)| <= |u|` whenever
/// `phi^-1(u)` is positive.
pub fn check_phi_inverse_properties(phi: &Phi, max_len: usize) -> Result<PhiInverseReport> {
    let words = positive_words(phi.alphabet(), max_len);
    let parts: Vec<PhiInverseReport> = words
        .par_iter()
        .map(|u| -> Result<PhiInverseReport> {
            let mut rep = PhiInverseReport::default();
            let phi_u = phi.apply(u, Direction::Inverse)?;
            check_length(u, &phi_u, &mut rep);
            for v in &words {
                check_pair(&phi_u, v, &mut rep);
            }
            Ok(rep)
        })
        .collect::<Result<_>>()?;
    Ok(merge_reports(parts))
}

/// Random-sample variant of [`check_phi_inverse_properties`].
pub fn sample_phi_inverse_properties<R: Rng>(
    phi: &Phi,
    max_len: usize,
    samples: usize,
    rng: &mut R,
) -> Result<PhiInverseReport> {
    let p = phi.alphabet().p();
    let mut rep = PhiInverseReport::default();
    let rand_word = |rng: &mut R| -> Vec<Letter> {
        let len = rng.gen_range(1..=max_len);
        (0..len)
            .map(|_| Letter::pos(phi.alphabet().b(rng.gen_range(0..=p))))
            .collect()
    };
    for _ in 0..samples {
        let u = rand_word(rng);
        let v = rand_word(rng);
        let phi_u = phi.apply(&u, Direction::Inverse)?;
        check_length(&u, &phi_u, &mut rep);
        check_pair(&phi_u, &v, &mut rep);
    }
    Ok(rep)
}

fn merge_reports(parts: Vec<PhiInverseReport>) -> PhiInverseReport {
    parts
        .into_iter()
        .fold(PhiInverseReport::default(), |mut a, b| {
            a.u_checked += b.u_checked;
            a.pairs_checked += b.pairs_checked;
            a.junction_failures += b.junction_failures;
            a.suffix_failures += b.suffix_failures;
            a.length_failures += b.length_failures;
            a.positive_images += b.positive_images;
            a
        })
}

/// Data `(lambda, u, eps)` describing a stack of `a1`-corridors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FenceTriple {
    pub lambdas: Vec<Vec<Letter>>,
    pub us: Vec<Vec<Letter>>,
    pub eps: Vec<i8>,
}

/// Which simplification [`fence_normalize`] applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FenceMove {
    /// Absorbs index 0 when `eps_1 = -1`.
    I,
    /// Collapses indices `j-2, j-1, j` when `(eps_{j-1}, eps_j) = (1, -1)`.
    II(usize),
}

fn is_positive_b(alpha: &Alphabet, v: &[Letter], allow_b0: bool) -> bool {
    v.iter().all(|l| {
        !l.is_inverse()
            && matches!(alpha.kind(l.id()), GenKind::B(i) if allow_b0 || i > 0)
    })
}

impl FenceTriple {
    pub fn len(&self) -> usize {
        self.eps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps.is_empty()
    }

    pub fn total_u_len(&self) -> usize {
        self.us.iter().map(|u| u.len()).sum()
    }

    /// The word `u_j a1^{-eps_j} ... u_1 a1^{-eps_1} u_0 b0 a1^{eps_1} ... a1^{eps_j}`.
    pub fn corridor_word(&self, alpha: &Alphabet, j: usize) -> Vec<Letter> {
        let a1 = Letter::pos(alpha.a1());
        let mut out = Vec::new();
        for i in (1..=j).rev() {
            out.extend_from_slice(&self.us[i]);
            out.push(if self.eps[i - 1] > 0 { a1.inv() } else { a1 });
        }
        out.extend_from_slice(&self.us[0]);
        out.push(Letter::pos(alpha.b(0)));
        for i in 1..=j {
            out.push(if self.eps[i - 1] > 0 { a1 } else { a1.inv() });
        }
        out
    }

    /// Checks the shape constraints and the corridor equation for every `j`.
    pub fn validate(&self, phi: &Phi) -> Result<()> {
        let alpha = *phi.alphabet();
        let l = self.eps.len();
        if self.lambdas.len() != l + 1 || self.us.len() != l + 1 {
            return Err(Error::Precondition("sequence lengths disagree".into()));
        }
        if self.us[0] != self.lambdas[0] {
            return Err(Error::Precondition("u_0 must equal lambda_0".into()));
        }
        if self.eps.iter().any(|&e| e != 1 && e != -1) {
            return Err(Error::Precondition("eps entries must be +1 or -1".into()));
        }
        let b0 = Letter::pos(alpha.b(0));
        for j in 0..=l {
            if !is_positive_b(&alpha, &self.lambdas[j], false) {
                return Err(Error::Precondition(format!(
                    "lambda_{j} is not a positive word on b1..bp"
                )));
            }
            if !self.lambdas[j].starts_with(&self.us[j]) {
                return Err(Error::Precondition(format!("u_{j} is not a prefix of lambda_{j}")));
            }
            let nf = q_normal_form(phi, &self.corridor_word(&alpha, j))?;
            let mut want = self.lambdas[j].clone();
            want.push(b0);
            if nf.k != 0 || nf.w != want {
                return Err(Error::Precondition(format!(
                    "corridor equation fails at j = {j}"
                )));
            }
        }
        Ok(())
    }

    /// `mu = u_l a1^{-eps_l} ... u_1 a1^{-eps_1} u_0`.
    pub fn mu(&self, alpha: &Alphabet) -> Vec<Letter> {
        let a1 = Letter::pos(alpha.a1());
        let mut out = Vec::new();
        for i in (1..=self.len()).rev() {
            out.extend_from_slice(&self.us[i]);
            out.push(if self.eps[i - 1] > 0 { a1.inv() } else { a1 });
        }
        out.extend_from_slice(&self.us[0]);
        out
    }
}

/// `phi^-1(w b0)` with its final `b0` removed; `None` if the image is not
/// a positive word ending in `b0`.
fn strip_b0_after_inverse(phi: &Phi, w: &[Letter]) -> Result<Option<Vec<Letter>>> {
    let alpha = *phi.alphabet();
    let b0 = Letter::pos(alpha.b(0));
    let mut x = w.to_vec();
    x.push(b0);
    let mut img = phi.apply(&x, Direction::Inverse)?;
    if img.last() != Some(&b0) {
        return Ok(None);
    }
    img.pop();
    Ok(is_positive_b(&alpha, &img, false).then_some(img))
}

/// Applies moves I and II until every `eps` is `+1`. The corridor equation
/// is re-verified after each move and `sum |u_j|` must never grow.
pub fn fence_normalize(phi: &Phi, t: &FenceTriple) -> Result<(FenceTriple, Vec<FenceMove>)> {
    t.validate(phi)?;
    let mut cur = t.clone();
    let mut moves = Vec::new();
    loop {
        let before = cur.total_u_len();
        let mv = if cur.eps.first() == Some(&-1) {
            let tilde = strip_b0_after_inverse(phi, &cur.us[0])?.ok_or_else(|| {
                Error::Precondition("move I: phi^-1(u_0 b0) is not positive".into())
            })?;
            let mut u1 = cur.us[1].clone();
            u1.extend_from_slice(&tilde);
            cur.lambdas.remove(0);
            cur.us.remove(0);
            cur.us[0] = u1;
            cur.eps.remove(0);
            FenceMove::I
        } else if let Some(j) = (2..=cur.len()).find(|&j| cur.eps[j - 2] == 1 && cur.eps[j - 1] == -1) {
            let phi_inv = phi.apply(&cur.us[j - 1], Direction::Inverse)?;
            let mut nu = cur.us[j].clone();
            nu.extend_from_slice(&phi_inv);
            nu.extend_from_slice(&cur.us[j - 2]);
            reduce_letters(&mut nu);
            // indices j-2 and j-1 collapse into j, which keeps eps_{j-2}
            cur.us[j] = nu;
            cur.us.drain(j - 2..j);
            cur.lambdas.drain(j - 2..j);
            cur.eps.drain(j - 2..j);
            FenceMove::II(j)
        } else {
            break;
        };
        cur.validate(phi).map_err(|e| match e {
            Error::Precondition(m) => Error::Precondition(format!("after move {mv:?}: {m}")),
            other => other,
        })?;
        if cur.total_u_len() > before {
            return Err(Error::Assertion(format!(
                "move {mv:?} increased total prefix length from {before} to {}",
                cur.total_u_len()
            )));
        }
        moves.push(mv);
    }
    Ok((cur, moves))
}

/// Builds a valid triple by running the corridor recurrence forward with
/// random prefixes; `eps = -1` is only chosen where it keeps things positive.
pub fn random_fence_triple<R: Rng>(phi: &Phi, rng: &mut R, l: usize, max_u: usize) -> Result<FenceTriple> {
    let alpha = *phi.alphabet();
    let p = alpha.p();
    let rand_pos = |rng: &mut R, min: usize| -> Vec<Letter> {
        let len = rng.gen_range(min..=max_u.max(min));
        (0..len)
            .map(|_| Letter::pos(alpha.b(rng.gen_range(1..=p))))
            .collect()
    };
    let lam0 = rand_pos(rng, 1);
    let mut t = FenceTriple {
        lambdas: vec![lam0.clone()],
        us: vec![lam0],
        eps: Vec::new(),
    };
    let b0 = Letter::pos(alpha.b(0));
    for _ in 0..l {
        let prev = t.lambdas.last().unwrap().clone();
        let back = if rng.gen_bool(0.5) {
            strip_b0_after_inverse(phi, &prev)?
        } else {
            None
        };
        let (eps, tail) = match back {
            Some(x) => (-1, x),
            None => {
                let mut x = prev.clone();
                x.push(b0);
                let mut img = phi.apply(&x, Direction::Forward)?;
                img.pop();
                (1, img)
            }
        };
        let u = rand_pos(rng, 0);
        let mut lam = u.clone();
        lam.extend_from_slice(&tail);
        t.eps.push(eps);
        t.us.push(u);
        t.lambdas.push(lam);
    }
    Ok(t)
}

/// One qualifying instance `mu b0 a1^l = lambda b0` of the oracle sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct QpqInstance {
    pub mu: Vec<Letter>,
    pub l: u32,
    pub lambda_len: u64,
    pub lambda_q: u64,
    pub ratio: f64,
}

#[derive(Clone, Debug)]
pub struct QpqReport {
    pub p: u32,
    pub q: u32,
    pub mu_max: usize,
    pub l_max: u32,
    pub words_swept: u64,
    pub instances: Vec<QpqInstance>,
    pub max_ratio: f64,
    pub argmax: Option<usize>,
    pub c0: BigUint,
    /// Exact check of `|lambda|^q <= C0^q (|mu| + |lambda|_q)^p` on every instance.
    pub holds: bool,
}

/// `C0 = (p+1)(2p)^{2p^2}`.
pub fn qpq_constant(p: u32) -> BigUint {
    BigUint::from(p + 1) * BigUint::from(2 * p).pow(2 * p * p)
}

/// Exhaustive sweep over words `mu` on `a1^-1, b1..bp` with `|mu| <= mu_max`
/// and `1 <= l <= l_max`, keeping those where `mu b0 a1^l` equals
/// `lambda b0` in `Q` with `lambda` positive on `b1..bp`.
pub fn qpq_oracle(p: u32, q: u32, mu_max: usize, l_max: u32, budget: u64) -> Result<QpqReport> {
    if p < 2 || q < 1 || q >= p {
        return Err(Error::Param(format!("need p > q >= 1 and p >= 2, got p={p} q={q}")));
    }
    let alpha = Alphabet::new(p)?;
    let phi = Phi::new(alpha);
    let a1 = Letter::pos(alpha.a1());
    let b0 = Letter::pos(alpha.b(0));
    let mut letters = vec![a1.inv()];
    letters.extend((1..=p).map(|i| Letter::pos(alpha.b(i))));
    let k = letters.len() as u64;
    let total: u64 = (1..=mu_max as u32).map(|n| k.pow(n)).sum();
    if total.saturating_mul(l_max as u64) > budget {
        return Err(Error::Budget {
            needed: (total * l_max as u64).to_string(),
            budget,
        });
    }
    let c0 = qpq_constant(p);
    let mut words: Vec<Vec<Letter>> = Vec::new();
    let mut layer: Vec<Vec<Letter>> = vec![Vec::new()];
    for _ in 0..mu_max {
        let mut next = Vec::new();
        for w in &layer {
            for &l in &letters {
                let mut w2 = w.clone();
                w2.push(l);
                next.push(w2);
            }
        }
        words.extend(next.iter().cloned());
        layer = next;
    }
    let found: Vec<(QpqInstance, bool)> = words
        .par_iter()
        .map(|mu| -> Result<Vec<(QpqInstance, bool)>> {
            let mut out = Vec::new();
            for l in 1..=l_max {
                let mut w = mu.clone();
                w.push(b0);
                w.extend(std::iter::repeat_n(a1, l as usize));
                let nf = q_normal_form(&phi, &w)?;
                if nf.k != 0 || nf.w.last() != Some(&b0) {
                    continue;
                }
                let lambda = &nf.w[..nf.w.len() - 1];
                if !is_positive_b(&alpha, lambda, false) {
                    continue;
                }
                let lambda_len = lambda.len() as u64;
                let lambda_q = lambda.iter().filter(|x| x.id() == alpha.b(q)).count() as u64;
                let base = mu.len() as u64 + lambda_q;
                let ratio = lambda_len as f64 / (base as f64).powf(p as f64 / q as f64);
                let lhs = BigUint::from(lambda_len).pow(q);
                let rhs = c0.pow(q) * BigUint::from(base).pow(p);
                out.push((
                    QpqInstance {
                        mu: mu.clone(),
                        l,
                        lambda_len,
                        lambda_q,
                        ratio,
                    },
                    lhs <= rhs,
                ));
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let holds = found.iter().all(|(_, ok)| *ok);
    let instances: Vec<QpqInstance> = found.into_iter().map(|(i, _)| i).collect();
    let argmax = instances
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.ratio.total_cmp(&b.1.ratio))
        .map(|(i, _)| i);
    let max_ratio = argmax.map_or(0.0, |i| instances[i].ratio);
    Ok(QpqReport {
        p,
        q,
        mu_max,
        l_max,
        words_swept: words.len() as u64,
        instances,
        max_ratio,
        argmax,
        c0,
        holds,
    })
}

impl QpqReport {
    pub fn lines(&self, alpha: &Alphabet) -> Vec<String> {
        let mut out: Vec<String> = self
            .instances
            .iter()
            .map(|i| {
                format!(
                    "mu={} l={} lambda_len={} lambda_q={} ratio={:.6}",
                    Word::from_slice(&i.mu).to_text(alpha).replace(' ', "."),
                    i.l,
                    i.lambda_len,
                    i.lambda_q,
                    i.ratio
                )
            })
            .collect();
        out.push(self.summary());
        out
    }

    pub fn summary(&self) -> String {
        format!(
            "summary p={} q={} mu_max={} l_max={} swept={} instances={} max_ratio={:.6} C0={} verdict={}",
            self.p,
            self.q,
            self.mu_max,
            self.l_max,
            self.words_swept,
            self.instances.len(),
            self.max_ratio,
            self.c0,
            if self.holds { "holds" } else { "fails" }
        )
    }
}

#[derive(Clone, Debug, Default)]
pub struct BinomialInequalityReport {
    pub checked: u64,
    pub failures: Vec<String>,
}

/// For `m` in `(2p, m_max]` and `1 <= k, l <= p`, checks
/// `C(m,k)^l <= K^l C(m,l)^k` and, for `l < k`, `C(m,k) <= K C(m,l) C(m,k-l)`
/// with `K = (2p)^{p^2}`.
pub fn binomial_inequalities(p: u32, m_max: u64) -> BinomialInequalityReport {
    let kk = BigUint::from(2 * p).pow(p * p);
    let mut rep = BinomialInequalityReport::default();
    for m in (2 * p as u64 + 1)..=m_max {
        let c: Vec<BigUint> = (0..=p as u64).map(|j| binom(m, j)).collect();
        for k in 1..=p as usize {
            for l in 1..=p as usize {
                rep.checked += 1;
                let lhs = c[k].pow(l as u32);
                let rhs = kk.pow(l as u32) * c[l].pow(k as u32);
                if lhs > rhs {
                    rep.failures.push(format!("m={m} k={k} l={l}: power form"));
                }
                if l < k && c[k] > &kk * &c[l] * &c[k - l] {
                    rep.failures.push(format!("m={m} k={k} l={l}: product form"));
                }
            }
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(p: u32) -> (Alphabet, Phi) {
        let a = Alphabet::new(p).unwrap();
        (a, Phi::new(a))
    }

    fn w(a: &Alphabet, s: &str) -> Vec<Letter> {
        Word::parse(a, s).unwrap().to_vec()
    }

    #[test]
    fn phi_examples() {
        let (a, phi) = setup(2);
        assert_eq!(phi.apply(&w(&a, "b2"), Direction::Forward).unwrap(), w(&a, "b2"));
        assert_eq!(phi.power(&w(&a, "b0"), 2).unwrap(), w(&a, "b2 b1 b1 b0"));
        assert_eq!(phi.apply(&w(&a, "b1"), Direction::Inverse).unwrap(), w(&a, "b2^-1 b1"));
        assert_eq!(phi.apply(&w(&a, "b0"), Direction::Inverse).unwrap(), w(&a, "b1^-1 b2 b0"));
    }

    #[test]
    fn normal_form_examples() {
        let (a, phi) = setup(2);
        let nf = q_normal_form(&phi, &w(&a, "a1^-2 b0 a1^2")).unwrap();
        assert_eq!(nf, QElement { k: 0, w: w(&a, "b2 b1 b1 b0") });
        let nf = q_normal_form(&phi, &w(&a, "a1^-1 b2 a1")).unwrap();
        assert_eq!(nf, QElement { k: 0, w: w(&a, "b2") });
        let nf = q_normal_form(&phi, &w(&a, "b0 b0^-1 a1")).unwrap();
        assert_eq!(nf, QElement { k: 1, w: vec![] });
        assert!(matches!(
            q_normal_form(&phi, &w(&a, "a2")),
            Err(Error::Alphabet(_))
        ));
    }

    #[test]
    fn binomial_examples() {
        let (_, phi) = setup(3);
        assert_eq!(binomial_counts(&phi, 5, 0).unwrap(), vec![1, 5, 10, 10]);
        assert_eq!(binomial_counts(&phi, 0, 2).unwrap(), vec![0, 0, 1, 0]);
        assert_eq!(binomial_counts(&phi, 7, 3).unwrap(), vec![0, 0, 0, 1]);
    }

    #[test]
    fn binom_small() {
        assert_eq!(binom(5, 2), BigUint::from(10u32));
        assert_eq!(binom(3, 5), BigUint::zero());
        assert_eq!(binom_u64(60, 30), 118264581564861424);
    }

    #[test]
    fn qpq_constant_p2() {
        assert_eq!(qpq_constant(2), BigUint::from(196_608u32));
    }

    #[test]
    fn binomial_inequality_example() {
        let rep = binomial_inequalities(2, 30);
        assert!(rep.failures.is_empty(), "{:?}", rep.failures);
    }

    #[test]
    fn fence_move_one_minimal() {
        let (a, phi) = setup(2);
        let t = FenceTriple {
            lambdas: vec![w(&a, "b1"), w(&a, "b2")],
            us: vec![w(&a, "b1"), w(&a, "b2")],
            eps: vec![-1],
        };
        let (out, moves) = fence_normalize(&phi, &t).unwrap();
        assert_eq!(moves, vec![FenceMove::I]);
        assert_eq!(out.lambdas, vec![w(&a, "b2")]);
        assert!(out.eps.is_empty());
    }

    #[test]
    fn fence_rejects_nonpositive_instance() {
        let (a, phi) = setup(2);
        // phi^-1(b2 b0) = b2 b1^-1 b2 b0 is not positive, so lambda_1 cannot be
        // a positive word here
        let t = FenceTriple {
            lambdas: vec![w(&a, "b2"), w(&a, "b2")],
            us: vec![w(&a, "b2"), vec![]],
            eps: vec![-1],
        };
        assert!(matches!(fence_normalize(&phi, &t), Err(Error::Precondition(_))));
    }
}
