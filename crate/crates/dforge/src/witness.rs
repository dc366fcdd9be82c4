//! Distortion witnesses: the words `u_n`, `tau_j`, `v_n`, `v̂_n`, `mu_n`,
//! `Z_n`, `w_n`, `chi_n`, with derivation certificates in explicit mode and
//! exact letter accounting in counting mode.

use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::derivation::{Derivation, Machine, Orient, RelatorTable, Step};
use crate::error::{Error, Result};
use crate::presentation::{Presentation, RelatorId};
use crate::qgroup::{binom, binom_u64, Phi};
use crate::words::{Alphabet, GenKind, Letter, Substitution, Word};

/// Default cap on explicit word sizes, overridable via `DFORGE_LETTER_BUDGET`.
pub const DEFAULT_LETTER_BUDGET: u64 = 50_000_000;
pub const BUDGET_ENV: &str = "DFORGE_LETTER_BUDGET";

pub fn letter_budget() -> u64 {
    std::env::var(BUDGET_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_LETTER_BUDGET)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Explicit,
    Counting,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Explicit => "explicit",
            Mode::Counting => "counting",
        })
    }
}

/// How a letter is carried across a `b`- or `a`-letter: `g c = c · image`.
#[derive(Clone, Copy, Debug)]
struct PushRule {
    id: RelatorId,
    orient: Orient,
    rot: u64,
}

/// Everything derived once per presentation.
pub struct WitnessContext<'a> {
    pub pres: &'a Presentation,
    pub phi: Phi,
    table: OnceLock<RelatorTable>,
    /// `conj_b[j]`: `g ↦ b_j^-1 g b_j` on `a2, t, x1, x2`.
    pub conj_b: Vec<Substitution>,
    /// `conj_a[i-1]`: `g ↦ a_i^-1 g a_i` on `t, y1, y2`.
    pub conj_a: Vec<Substitution>,
    /// `sigma[j]`: the part of `r1_j`'s left side after `a1^-1 b_j a1`.
    pub sigma: Vec<Word>,
    rules: OnceLock<Rules>,
    budget: u64,
}

/// Located push rules; only explicit mode needs them.
struct Rules {
    across: HashMap<(Letter, Letter), PushRule>,
    a1: Vec<PushRule>,
}

impl<'a> WitnessContext<'a> {
    pub fn new(pres: &'a Presentation) -> Result<Self> {
        Self::with_budget(pres, letter_budget())
    }

    pub fn with_budget(pres: &'a Presentation, budget: u64) -> Result<Self> {
        let alpha = &pres.alphabet;
        let p = alpha.p();
        let noise = |id| pres.relator(id).noise.clone();
        let mut conj_b = Vec::new();
        for j in 0..=p {
            let mut s = Substitution::new();
            s.set(alpha.t(), noise(RelatorId::R3(j)));
            s.set(alpha.x(1), noise(RelatorId::R3J(j, 1)));
            s.set(alpha.x(2), noise(RelatorId::R3J(j, 2)));
            s.set(
                alpha.a2(),
                Word::letter(Letter::pos(alpha.a2())).concat(&noise(RelatorId::R2(j))),
            );
            conj_b.push(s);
        }
        let mut conj_a = Vec::new();
        for i in 1..=2u8 {
            let mut s = Substitution::new();
            s.set(alpha.t(), noise(RelatorId::R4(i)));
            s.set(alpha.y(1), noise(RelatorId::R4J(i, 1)));
            s.set(alpha.y(2), noise(RelatorId::R4J(i, 2)));
            conj_a.push(s);
        }
        let sigma: Vec<Word> = (0..=p)
            .map(|j| {
                let l = &pres.relator(RelatorId::R1(j)).lhs;
                l.subword(3, l.len_u64())
            })
            .collect();

        let phi = Phi::new(*alpha);
        Ok(WitnessContext {
            pres,
            phi,
            table: OnceLock::new(),
            conj_b,
            conj_a,
            sigma,
            rules: OnceLock::new(),
            budget,
        })
    }

    /// The relator table, built on first use.
    pub fn table(&self) -> &RelatorTable {
        self.table.get_or_init(|| RelatorTable::new(self.pres))
    }

    fn rules(&self) -> Result<&Rules> {
        if let Some(r) = self.rules.get() {
            return Ok(r);
        }
        let r = self.build_rules()?;
        Ok(self.rules.get_or_init(|| r))
    }

    fn build_rules(&self) -> Result<Rules> {
        let alpha = self.alphabet();
        let p = alpha.p();
        let table = self.table();
        let (conj_b, conj_a, sigma, phi) = (&self.conj_b, &self.conj_a, &self.sigma, &self.phi);
        let mut rules = HashMap::new();
        let mut add_rule = |g: Letter, c: Letter, id: RelatorId, img: &Word| -> Result<()> {
            let s = [g, c];
            let mut t = vec![c];
            t.extend(img.letters());
            let (orient, rot) = table.locate(id, &s, &t)?;
            rules.insert(
                (g, c),
                PushRule { id, orient, rot },
            );
            Ok(())
        };
        for j in 0..=p {
            let c = Letter::pos(alpha.b(j));
            let gens = [
                (alpha.t(), RelatorId::R3(j)),
                (alpha.x(1), RelatorId::R3J(j, 1)),
                (alpha.x(2), RelatorId::R3J(j, 2)),
                (alpha.a2(), RelatorId::R2(j)),
            ];
            for (g, id) in gens {
                for l in [Letter::pos(g), Letter::neg(g)] {
                    add_rule(l, c, id, &conj_b[j as usize].image(l)?)?;
                }
            }
        }
        for i in 1..=2u8 {
            let c = Letter::pos(alpha.a(i));
            let gens = [
                (alpha.t(), RelatorId::R4(i)),
                (alpha.y(1), RelatorId::R4J(i, 1)),
                (alpha.y(2), RelatorId::R4J(i, 2)),
            ];
            for (g, id) in gens {
                for l in [Letter::pos(g), Letter::neg(g)] {
                    add_rule(l, c, id, &conj_a[i as usize - 1].image(l)?)?;
                }
            }
        }
        let a1inv = Letter::neg(alpha.a1());
        let mut a1_rules = Vec::new();
        for j in 0..=p {
            // a1^-1 b_j -> phi(b_j) sigma_j^-1 a1^-1
            let s = [a1inv, Letter::pos(alpha.b(j))];
            let mut t: Vec<Letter> = phi.image(j, crate::qgroup::Direction::Forward).to_vec();
            t.extend(sigma[j as usize].inverse().letters());
            t.push(a1inv);
            let (orient, rot) = table.locate(RelatorId::R1(j), &s, &t)?;
            a1_rules.push(PushRule {
                id: RelatorId::R1(j),
                orient,
                rot,
            });
        }
        Ok(Rules {
            across: rules,
            a1: a1_rules,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.pres.alphabet
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    fn b_index(&self, l: Letter) -> Result<u32> {
        match self.alphabet().kind(l.id()) {
            GenKind::B(j) if !l.is_inverse() => Ok(j),
            _ => Err(Error::Assertion(format!(
                "expected a positive b-letter, found {}",
                Word::letter(l).to_text(self.alphabet())
            ))),
        }
    }

    /// `K1 = floor(min Rips length / 2)`.
    pub fn k1(&self) -> u64 {
        self.pres.rips.min_len() / 2
    }

    /// `u_n b0 = phi^n(b0)` as a positive word.
    pub fn ub0(&self, n: u64) -> Result<Word> {
        let b0 = Letter::pos(self.alphabet().b(0));
        Ok(Word::from_letters(self.phi.power(&[b0], n as i64)?))
    }

    /// Moves the block `[start, start+len)` rightward across the single
    /// letter that follows it, one letter at a time, then reduces the block.
    /// Returns the new block length; the crossed letter ends up at `start`.
    fn pass_block(&self, m: &mut Machine, start: u64, len: u64) -> Result<u64> {
        let c = m.get(start + len);
        let before = m.len();
        for k in (0..len).rev() {
            let g = m.get(start + k);
            let rule = self.rules()?.across.get(&(g, c)).ok_or_else(|| {
                Error::Assertion(format!(
                    "no push rule for {} across {}",
                    Word::letter(g).to_text(self.alphabet()),
                    Word::letter(c).to_text(self.alphabet())
                ))
            })?;
            m.apply(Step::Relator {
                id: rule.id,
                pos: start + k,
                orient: rule.orient,
                rot: rule.rot,
                len: 2,
            })?;
            if m.len() > self.budget {
                return Err(Error::Budget {
                    needed: m.len().to_string(),
                    budget: self.budget,
                });
            }
        }
        let grown = len + (m.len() - before);
        m.reduce_range(start + 1, grown)
    }

    /// One round of the `a1^-1` sweep on a machine whose word is
    /// `a1^-k W rest` with `W` positive of length `wlen`. Leaves
    /// `a1^-(k-1) phi(W) tau^-1 a1^-1 rest` and returns `(|phi(W)|, |tau|)`.
    fn sweep_a1(&self, m: &mut Machine, k: u64, wlen: u64) -> Result<(u64, u64)> {
        let pos0 = k - 1;
        let mut cur = pos0;
        let mut parts: Vec<(u64, u64)> = Vec::new();
        for _ in 0..wlen {
            let j = self.b_index(m.get(cur + 1))?;
            let rule = self.rules()?.a1[j as usize];
            m.apply(Step::Relator {
                id: rule.id,
                pos: cur,
                orient: rule.orient,
                rot: rule.rot,
                len: 2,
            })?;
            let phi_len = if j == self.alphabet().p() { 1 } else { 2 };
            let sig_len = self.sigma[j as usize].len_u64();
            parts.push((phi_len, sig_len));
            cur += phi_len + sig_len;
        }
        let l = parts.len();
        let mut starts = Vec::with_capacity(l);
        let mut acc = pos0;
        for &(ph, sg) in &parts {
            starts.push(acc + ph);
            acc += ph + sg;
        }
        let mut tail_len = parts[l - 1].1;
        for i in (0..l.saturating_sub(1)).rev() {
            let cross: u64 = parts[i + 1..].iter().map(|x| x.0).sum();
            let mut bl = parts[i].1;
            for s in starts[i]..starts[i] + cross {
                bl = self.pass_block(m, s, bl)?;
            }
            tail_len += bl;
        }
        let phi_total: u64 = parts.iter().map(|x| x.0).sum();
        let tau_start = pos0 + phi_total;
        let tau_len = m.reduce_range(tau_start, tail_len)?;
        Ok((phi_total, tau_len))
    }

    /// `a1^-1 (u b0) = phi(u b0) tau^-1 a1^-1`, with its derivation.
    pub fn build_tau(&self, u: &Word) -> Result<(Word, Derivation)> {
        let alpha = self.alphabet();
        for l in u.letters() {
            match alpha.kind(l.id()) {
                GenKind::B(j) if j >= 1 && !l.is_inverse() => {}
                _ => {
                    return Err(Error::Precondition(
                        "u must be a positive word over b1..bp".into(),
                    ))
                }
            }
        }
        let b0 = Word::letter(Letter::pos(alpha.b(0)));
        let a1inv = Word::letter(Letter::neg(alpha.a1()));
        let start = Word::concat_all([&a1inv, u, &b0]);
        let mut m = Machine::new(self.table(), &start);
        let wlen = u.len_u64() + 1;
        let (phi_len, tau_len) = self.sweep_a1(&mut m, 1, wlen)?;
        let tau = Word::from_letters(m.range(phi_len, tau_len)).inverse();
        let d = Derivation {
            start,
            steps: m.steps.clone(),
            end: m.word(),
        };
        self.check_tau(u, &tau)?;
        Ok((tau, d))
    }

    /// Structural facts about a single `tau`.
    fn check_tau(&self, u: &Word, tau: &Word) -> Result<()> {
        let alpha = self.alphabet();
        if !tau.is_freely_reduced() {
            return Err(Error::Assertion("tau is not freely reduced".into()));
        }
        for l in tau.letters() {
            let ok = match alpha.kind(l.id()) {
                GenKind::A(2) => !l.is_inverse(),
                GenKind::T | GenKind::Y(_) => true,
                _ => false,
            };
            if !ok {
                return Err(Error::Assertion(format!(
                    "tau contains the letter {}",
                    Word::letter(l).to_text(alpha)
                )));
            }
        }
        let q = self.pres.q();
        let ub0 = u.concat(&Word::letter(Letter::pos(alpha.b(0))));
        let phi_ub0 = self.phi.apply_word(&ub0, crate::qgroup::Direction::Forward)?;
        let bq = alpha.b(q);
        let want = phi_ub0.count(bq) - ub0.count(bq);
        if tau.count(alpha.a2()) != want {
            return Err(Error::Assertion(format!(
                "tau has {} a2-letters, expected {want}",
                tau.count(alpha.a2())
            )));
        }
        // long suffix of a single Y-word
        let tv = tau.to_vec();
        let long_suffix = self.pres.rips.y_words.iter().any(|y| {
            let yv = y.to_vec();
            let need = (3 * yv.len()).div_ceil(4);
            tv.len() >= need && tv[tv.len() - need..] == yv[yv.len() - need..]
        });
        if !long_suffix {
            return Err(Error::Assertion(
                "tau does not end in three quarters of a Y-word".into(),
            ));
        }
        Ok(())
    }

    /// `a1^-n b0 -> u_n b0 v_n^-1` on its own machine.
    fn phase_right(&self, n: u64) -> Result<(Machine<'_>, u64)> {
        let alpha = self.alphabet();
        let mut parts: Vec<Word> = vec![Word::letter(Letter::neg(alpha.a1())); n as usize];
        parts.push(Word::letter(Letter::pos(alpha.b(0))));
        let start = Word::concat_all(parts.iter());
        let mut m = Machine::new(self.table(), &start);
        let mut wlen = 1u64;
        for k in (1..=n).rev() {
            let (phi_len, _) = self.sweep_a1(&mut m, k, wlen)?;
            wlen = phi_len;
        }
        Ok((m, wlen))
    }

    /// `v -> v̂ mu` by carrying noise rightward across every a-letter.
    fn phase_shuffle<'m>(&'m self, v: &Word) -> Result<(Machine<'m>, u64)> {
        let alpha = self.alphabet();
        let mut m = Machine::new(self.table(), v);
        let mut front = 0u64;
        let mut blen = 0u64;
        while front + blen < m.len() {
            let g = m.get(front + blen);
            match alpha.kind(g.id()) {
                GenKind::A(_) => {
                    if g.is_inverse() {
                        return Err(Error::Assertion("v_n contains an inverse a-letter".into()));
                    }
                    if blen > 0 {
                        blen = self.pass_block(&mut m, front, blen)?;
                    }
                    front += 1;
                }
                _ => blen += 1,
            }
        }
        Ok((m, front))
    }

    fn mirror(&self, s: Step, word_len: u64) -> Result<Step> {
        let rel_len = match s {
            Step::Relator { id, .. } => self.table().rel_len(id)?,
            _ => 1,
        };
        Ok(s.mirrored(word_len, rel_len))
    }

    /// Explicit `Z` by layered substitution, reducing after each layer.
    pub fn z_explicit(&self, ub0: &Word) -> Result<Word> {
        let mut z = Word::letter(Letter::pos(self.alphabet().x(1)));
        for l in ub0.letters() {
            let j = self.b_index(l)?;
            z = z.apply_substitution(&self.conj_b[j as usize])?.free_reduce();
            if z.len_u64() > self.budget {
                return Err(Error::Budget {
                    needed: z.len_u64().to_string(),
                    budget: self.budget,
                });
            }
        }
        Ok(z)
    }

    /// `tau` for `u b0` by substitution, without a derivation.
    pub fn tau_by_substitution(&self, ub0: &Word) -> Result<Word> {
        let letters = ub0.to_vec();
        let mut out: Vec<Word> = Vec::new();
        for (k, &l) in letters.iter().enumerate() {
            let j = self.b_index(l)?;
            let mut blk = self.sigma[j as usize].inverse();
            for &later in &letters[k + 1..] {
                let jl = self.b_index(later)?;
                for &img in self.phi.image(jl, crate::qgroup::Direction::Forward) {
                    let jb = self.b_index(img)?;
                    blk = blk.apply_substitution(&self.conj_b[jb as usize])?.free_reduce();
                    if blk.len_u64() > self.budget {
                        return Err(Error::Budget {
                            needed: blk.len_u64().to_string(),
                            budget: self.budget,
                        });
                    }
                }
            }
            out.push(blk);
        }
        Ok(Word::concat_all(out.iter()).free_reduce().inverse())
    }

    /// `mu` for `v` by substitution: noise carried across each later a-letter.
    pub fn mu_by_substitution(&self, v: &Word) -> Result<(Word, Word)> {
        let alpha = self.alphabet();
        let mut acc = Word::empty();
        let mut hat: Vec<Letter> = Vec::new();
        for l in v.letters() {
            match alpha.kind(l.id()) {
                GenKind::A(i) => {
                    acc = acc.apply_substitution(&self.conj_a[i as usize - 1])?.free_reduce();
                    hat.push(l);
                }
                _ => acc = acc.concat(&Word::letter(l)),
            }
        }
        Ok((Word::from_letters(hat), acc.free_reduce()))
    }

    /// `v̂_n` from the a-letter skeleton: block `j` is `a1 a2^c` with `c` the
    /// number of `b_{q-1}` letters in `u_{j-1} b0`.
    pub fn vhat_counting(&self, n: u64) -> Result<(Word, Vec<u64>)> {
        let alpha = self.alphabet();
        let q = self.pres.q();
        let a1 = Letter::pos(alpha.a1());
        let a2 = Letter::pos(alpha.a2());
        let mut letters = Vec::new();
        let mut counts = Vec::new();
        let mut w = self.ub0(0)?;
        for _ in 1..=n {
            let c = w.count(alpha.b(q - 1));
            letters.push(a1);
            letters.extend(std::iter::repeat_n(a2, c as usize));
            counts.push(c);
            w = self.phi.apply_word(&w, crate::qgroup::Direction::Forward)?;
        }
        Ok((Word::from_letters(letters), counts))
    }

    /// `w_n = v̂^-1 b0^-1 a1^n x1 a1^-n b0 v̂`.
    pub fn w_word(&self, n: u64, vhat: &Word) -> Word {
        let alpha = self.alphabet();
        let b0 = Word::letter(Letter::pos(alpha.b(0)));
        let a1n = Word::from_letters(vec![Letter::pos(alpha.a1()); n as usize]);
        let x1 = Word::letter(Letter::pos(alpha.x(1)));
        Word::concat_all([
            &vhat.inverse(),
            &b0.inverse(),
            &a1n,
            &x1,
            &a1n.inverse(),
            &b0,
            vhat,
        ])
    }

    /// 3x3 letter-count matrix of `conj_b[j]` on `(t, n1, n2)`, where `n` is
    /// `x` on input and `x` or `y` on output.
    pub fn noise_matrix(&self, j: u32) -> [[u64; 3]; 3] {
        let alpha = self.alphabet();
        let ins = [alpha.t(), alpha.x(1), alpha.x(2)];
        let outs = if j == 0 {
            [alpha.t(), alpha.y(1), alpha.y(2)]
        } else {
            [alpha.t(), alpha.x(1), alpha.x(2)]
        };
        let mut m = [[0u64; 3]; 3];
        for (r, &g) in ins.iter().enumerate() {
            let img = self.conj_b[j as usize].get(g).expect("noise image");
            for (c, &h) in outs.iter().enumerate() {
                m[r][c] = img.count(h);
            }
        }
        m
    }

    /// Unreduced `|Z|` for `ub0` from the product of noise matrices.
    pub fn z_len_matrix(&self, ub0: &Word) -> Result<BigUint> {
        Ok(z_counts_matrix(self, ub0)?.iter().sum())
    }

    /// Unreduced `|Z|` from a straight-line grammar whose rules are the
    /// image words themselves, evaluated bottom-up.
    pub fn z_len_grammar(&self, ub0: &Word) -> Result<BigUint> {
        let alpha = self.alphabet();
        let layers: Vec<u32> = ub0.letters().map(|l| self.b_index(l)).collect::<Result<_>>()?;
        // len[g] after all later layers; indexed by generator id
        let mut len: HashMap<u32, BigUint> = HashMap::new();
        for g in [alpha.t(), alpha.y(1), alpha.y(2), alpha.x(1), alpha.x(2)] {
            len.insert(g, BigUint::one());
        }
        for &j in layers.iter().rev() {
            let mut next = len.clone();
            for g in [alpha.t(), alpha.x(1), alpha.x(2)] {
                let img = self.conj_b[j as usize].get(g).expect("noise image");
                let mut total = BigUint::zero();
                for r in img.runs_iter() {
                    total += &len[&r.letter.id()] * r.len;
                }
                next.insert(g, total);
            }
            len = next;
        }
        Ok(len[&alpha.x(1)].clone())
    }

    /// Rough size of the explicit witness, used to refuse early.
    pub fn predicted_explicit_size(&self, n: u64) -> Result<f64> {
        let ub0 = self.ub0(n)?;
        let z = self.z_len_matrix(&ub0)?.to_f64().unwrap_or(f64::INFINITY);
        // tau blocks: sigma_j crosses the b-letters of phi(later letters)
        let mut tau_total = 0f64;
        let mut w = self.ub0(0)?;
        for _ in 1..=n {
            let letters = w.to_vec();
            let imgs: Vec<Vec<u32>> = letters
                .iter()
                .map(|&l| {
                    let j = self.b_index(l).unwrap_or(0);
                    self.phi
                        .image(j, crate::qgroup::Direction::Forward)
                        .iter()
                        .map(|&x| self.b_index(x).unwrap_or(0))
                        .collect()
                })
                .collect();
            for k in 0..letters.len() {
                let mut size = self.sigma[self.b_index(letters[k])? as usize].len_u64() as f64;
                'outer: for img in &imgs[k + 1..] {
                    for &jb in img {
                        size *= self.mean_growth(jb);
                        if size > self.budget as f64 {
                            break 'outer;
                        }
                    }
                }
                tau_total += size;
                if tau_total > self.budget as f64 {
                    return Ok(tau_total.max(z));
                }
            }
            w = self.phi.apply_word(&w, crate::qgroup::Direction::Forward)?;
        }
        Ok(z.max(tau_total))
    }

    fn mean_growth(&self, j: u32) -> f64 {
        let m = self.noise_matrix(j);
        let rows: Vec<f64> = m.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
        rows.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Explicit words and the full certificate.
#[derive(Clone, Debug)]
pub struct ExplicitParts {
    pub taus: Vec<Word>,
    pub v: Word,
    pub mu: Word,
    pub z: Word,
    pub chi: Word,
    /// `w_n -> chi_n`.
    pub derivation: Derivation,
}

#[derive(Clone, Debug)]
pub struct WitnessBundle {
    pub n: u64,
    pub mode: Mode,
    pub ub0: Word,
    pub vhat: Word,
    pub w: Word,
    /// `|v_n|_{a1}` and `|v_n|_{a2}`.
    pub v_a1: u64,
    pub v_a2: u64,
    /// `a2`-count of each `tau_j`.
    pub tau_a2: Vec<u64>,
    pub k1: u64,
    /// `|u_n b0| · ln K1`.
    pub chi_lb_log: f64,
    /// Unreduced `|Z_n|` when the matrix product is small enough to form.
    pub z_unreduced: Option<BigUint>,
    pub explicit: Option<ExplicitParts>,
}

impl WitnessBundle {
    pub fn w_len(&self) -> u64 {
        self.w.len_u64()
    }

    pub fn ub0_len(&self) -> u64 {
        self.ub0.len_u64()
    }

    pub const CSV_HEADER: &'static str = "n,w_len,ub0_len,a2_count,chi_lower_bound_log";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:.6}",
            self.n,
            self.w_len(),
            self.ub0_len(),
            self.v_a2,
            self.chi_lb_log
        )
    }
}

/// `|w_n| = 2 C(n,q) + 2n + (2n+3)`.
pub fn w_len_formula(n: u64, q: u32) -> BigUint {
    binom(n, q as u64) * 2u32 + BigUint::from(4 * n + 3)
}

/// Sparsity constant `(q+1) · max_i C(q,i)`.
pub fn sparsity_constant(q: u32) -> u64 {
    let m = (0..=q as u64).map(|i| binom_u64(q as u64, i)).max().unwrap_or(1);
    (q as u64 + 1) * m
}

/// Checks the exact identities that hold in both modes.
pub fn check_identities(ctx: &WitnessContext, b: &WitnessBundle) -> Result<()> {
    let alpha = ctx.alphabet();
    let q = ctx.pres.q();
    let p = ctx.pres.p();
    let n = b.n;
    let fail = |msg: String| Err(Error::Assertion(format!("n={n}: {msg}")));
    if b.v_a1 != n {
        return fail(format!("|v_n|_a1 = {} != n", b.v_a1));
    }
    if BigUint::from(b.v_a2) != binom(n, q as u64) {
        return fail(format!("|v_n|_a2 = {} != C(n,q)", b.v_a2));
    }
    for (j, &c) in b.tau_a2.iter().enumerate() {
        if BigUint::from(c) != binom(j as u64, q as u64 - 1) {
            return fail(format!("tau_{} has {c} a2-letters", j + 1));
        }
    }
    for i in 0..=p {
        let c = b.ub0.count(alpha.b(i));
        if BigUint::from(c) != binom(n, i as u64) {
            return fail(format!("|u_n b0|_b{i} = {c} != C(n,{i})"));
        }
    }
    let total: BigUint = (0..=p as u64).map(|i| binom(n, i)).sum();
    if BigUint::from(b.ub0_len()) != total {
        return fail("|u_n b0| differs from the binomial sum".into());
    }
    if BigUint::from(b.w_len()) != w_len_formula(n, q) {
        return fail(format!("|w_n| = {} differs from 2C(n,q)+4n+3", b.w_len()));
    }
    let hat_a1 = b.vhat.count(alpha.a1());
    let hat_a2 = b.vhat.count(alpha.a2());
    if hat_a1 != b.v_a1 || hat_a2 != b.v_a2 || b.vhat.len_u64() != hat_a1 + hat_a2 {
        return fail("v̂_n is not the a-skeleton of v_n".into());
    }
    Ok(())
}

/// Builds the witness for `n` in the requested mode.
pub fn assemble_witness(ctx: &WitnessContext, n: u64, mode: Mode) -> Result<WitnessBundle> {
    if n == 0 {
        return Err(Error::Param("n must be at least 1".into()));
    }
    let alpha = ctx.alphabet();
    let ub0 = ctx.ub0(n)?;
    let k1 = ctx.k1();
    let chi_lb_log = ub0.len_u64() as f64 * (k1 as f64).ln();
    let z_unreduced = if ub0.len_u64() <= 4096 {
        Some(ctx.z_len_matrix(&ub0)?)
    } else {
        None
    };
    let (vhat_c, tau_a2) = ctx.vhat_counting(n)?;
    match mode {
        Mode::Counting => {
            let w = ctx.w_word(n, &vhat_c);
            let b = WitnessBundle {
                n,
                mode,
                v_a1: vhat_c.count(alpha.a1()),
                v_a2: vhat_c.count(alpha.a2()),
                ub0,
                vhat: vhat_c,
                w,
                tau_a2,
                k1,
                chi_lb_log,
                z_unreduced,
                explicit: None,
            };
            check_identities(ctx, &b)?;
            Ok(b)
        }
        Mode::Explicit => {
            let predicted = ctx.predicted_explicit_size(n)?;
            if predicted > ctx.budget as f64 {
                return Err(Error::Budget {
                    needed: format!("{predicted:.3e}"),
                    budget: ctx.budget,
                });
            }
            let b = assemble_explicit(ctx, n, ub0, k1, chi_lb_log, z_unreduced)?;
            if b.vhat != vhat_c {
                return Err(Error::Assertion("explicit v̂_n differs from its skeleton".into()));
            }
            check_identities(ctx, &b)?;
            Ok(b)
        }
    }
}

fn assemble_explicit(
    ctx: &WitnessContext,
    n: u64,
    ub0: Word,
    k1: u64,
    chi_lb_log: f64,
    z_unreduced: Option<BigUint>,
) -> Result<WitnessBundle> {
    let alpha = ctx.alphabet();
    let a1 = Letter::pos(alpha.a1());

    // right segment a1^-n b0 -> u_n b0 v_n^-1
    let (seg, u_len) = ctx.phase_right(n)?;
    let seg_word = seg.word();
    let (got_ub0, vinv) = seg_word.split_at(u_len);
    if got_ub0 != ub0 {
        return Err(Error::Assertion("sweep did not produce phi^n(b0)".into()));
    }
    let v = vinv.inverse();
    // tau_j are the stretches between a1-letters of v_n
    let mut taus: Vec<Word> = Vec::new();
    let mut cur: Vec<Letter> = Vec::new();
    let mut seen_a1 = 0;
    for l in v.letters() {
        if l == a1 {
            if seen_a1 > 0 {
                taus.push(Word::from_letters(std::mem::take(&mut cur)));
            }
            seen_a1 += 1;
        } else {
            cur.push(l);
        }
    }
    taus.push(Word::from_letters(cur));

    let (shuffle, hat_len) = ctx.phase_shuffle(&v)?;
    let shuffled = shuffle.word();
    let (vhat, mu) = shuffled.split_at(hat_len);
    if let Some(last) = mu.last() {
        if last.is_inverse() {
            return Err(Error::Assertion("mu_n ends in an inverse letter".into()));
        }
    }

    // main certificate
    let w = ctx.w_word(n, &vhat);
    let mut m = Machine::new(ctx.table(), &w);
    let hat = vhat.len_u64();
    let off_left = hat;
    let off_right = hat + n + 2;
    for s in &seg.steps {
        m.apply(s.shifted(off_right))?;
    }
    for (s, &l) in seg.steps.iter().zip(&seg.lens) {
        m.apply(ctx.mirror(*s, l)?.shifted(off_left))?;
    }
    let big_v = v.len_u64();
    let u = ub0.len_u64();
    // x1 across u_n b0
    let mut zl = 1;
    for s in hat + big_v + u..hat + big_v + 2 * u {
        zl = ctx.pass_block(&mut m, s, zl)?;
    }
    m.reduce_range(hat + big_v, 2 * u)?;
    // v_n^-1 on the right first, then v_n on the left
    let right_v = hat + big_v + zl;
    for (s, &l) in shuffle.steps.iter().zip(&shuffle.lens) {
        m.apply(ctx.mirror(*s, l)?.shifted(right_v))?;
    }
    for s in &shuffle.steps {
        m.apply(s.shifted(off_left))?;
    }
    m.apply(Step::Reduce)?;
    let end = m.word();

    // independent construction of chi
    let z = ctx.z_explicit(&ub0)?;
    let chi = Word::concat_all([&mu, &z, &mu.inverse()]).free_reduce();
    if end != chi {
        return Err(Error::Verification(
            "derivation end differs from mu Z mu^-1".into(),
        ));
    }
    check_z(ctx, &ub0, &z)?;
    let mz = mu.concat(&z);
    if mz.free_reduce().len_u64() != mz.len_u64() {
        return Err(Error::Assertion("mu_n and Z_n cancel".into()));
    }
    if chi.len_u64() < z.len_u64() {
        return Err(Error::Assertion("reduced chi_n is shorter than Z_n".into()));
    }
    let tau_a2: Vec<u64> = taus.iter().map(|t| t.count(alpha.a2())).collect();
    let derivation = Derivation {
        start: w.clone(),
        steps: m.steps.clone(),
        end,
    };
    Ok(WitnessBundle {
        n,
        mode: Mode::Explicit,
        v_a1: v.count(alpha.a1()),
        v_a2: v.count(alpha.a2()),
        ub0,
        vhat,
        w,
        tau_a2,
        k1,
        chi_lb_log,
        z_unreduced,
        explicit: Some(ExplicitParts {
            taus,
            v,
            mu,
            z,
            chi,
            derivation,
        }),
    })
}

/// `Z` is reduced, over `t, y1, y2`, starts with a positive letter, and is at
/// least `K1^{|u b0|}` long.
pub fn check_z(ctx: &WitnessContext, ub0: &Word, z: &Word) -> Result<()> {
    let alpha = ctx.alphabet();
    if !z.is_freely_reduced() {
        return Err(Error::Assertion("Z is not freely reduced".into()));
    }
    if z
        .runs_iter()
        .any(|r| !matches!(alpha.kind(r.letter.id()), GenKind::T | GenKind::Y(_)))
    {
        return Err(Error::Assertion("Z contains letters outside t, y1, y2".into()));
    }
    if z.first().is_none_or(|l| l.is_inverse()) {
        return Err(Error::Assertion("Z does not start with a positive letter".into()));
    }
    let bound = BigUint::from(ctx.k1()).pow(ub0.len_u64() as u32);
    if BigUint::from(z.len_u64()) < bound {
        return Err(Error::Assertion(format!(
            "|Z| = {} is below K1^|u b0| = {bound}",
            z.len_u64()
        )));
    }
    Ok(())
}

/// Reduced `|Z|` without materialising the last layer: the penultimate
/// word is built explicitly, and the last substitution is applied as a
/// stream of image segments whose junctions cancel against a stack.
pub fn z_reduced_len_streaming(ctx: &WitnessContext, ub0: &Word) -> Result<u64> {
    let letters = ub0.to_vec();
    let (last, init) = letters
        .split_last()
        .ok_or_else(|| Error::Precondition("empty u b0".into()))?;
    let pen = ctx.z_explicit(&Word::from_slice(init))?;
    let j = ctx.b_index(*last)?;
    let sub = &ctx.conj_b[j as usize];
    let mut images: HashMap<Letter, Vec<Letter>> = HashMap::new();
    for r in pen.runs_iter() {
        images
            .entry(r.letter)
            .or_insert_with(|| sub.image(r.letter).map(|w| w.to_vec()).unwrap_or_default());
    }
    // segment = (letter, lo, hi): images[letter][lo..hi]
    let mut stack: Vec<(Letter, u32, u32)> = Vec::new();
    let mut total: u64 = 0;
    for l in pen.letters() {
        let img = &images[&l];
        if img.is_empty() {
            return Err(Error::MissingGenerator(format!("{l:?}")));
        }
        let (mut lo, hi) = (0u32, img.len() as u32);
        while lo < hi {
            let Some(top) = stack.last_mut() else { break };
            let tl = images[&top.0][top.2 as usize - 1];
            if tl == img[lo as usize].inv() {
                top.2 -= 1;
                lo += 1;
                total -= 1;
                if top.1 == top.2 {
                    stack.pop();
                }
            } else {
                break;
            }
        }
        if lo < hi {
            stack.push((l, lo, hi));
            total += (hi - lo) as u64;
        }
    }
    Ok(total)
}

/// Enumerates every letter of the unreduced `Z` depth-first, never storing
/// more than one path, and tallies them by kind `(t, n1, n2)`.
pub fn z_unreduced_counts_streaming(
    ctx: &WitnessContext,
    ub0: &Word,
    limit: u64,
) -> Result<[u64; 3]> {
    let alpha = ctx.alphabet();
    let slot = |g: u32| -> u8 {
        if g == alpha.t() {
            0
        } else if g == alpha.x(1) || g == alpha.y(1) {
            1
        } else {
            2
        }
    };
    let layers: Vec<u32> = ub0.letters().map(|l| ctx.b_index(l)).collect::<Result<_>>()?;
    let images: Vec<[Vec<u8>; 3]> = layers
        .iter()
        .map(|&j| {
            [alpha.t(), alpha.x(1), alpha.x(2)].map(|g| {
                let img = ctx.conj_b[j as usize].get(g).expect("noise image");
                img.letters().map(|l| slot(l.id())).collect()
            })
        })
        .collect();
    let depth = images.len();
    let mut counts = [0u64; 3];
    if depth == 0 {
        return Ok([0, 1, 0]);
    }
    let leaf = &images[depth - 1];
    // stack of (layer, slot, next index into its image)
    let mut stack: Vec<(usize, u8, usize)> = vec![(0, 1, 0)];
    while let Some(top) = stack.last_mut() {
        let (layer, g, idx) = *top;
        let img = &images[layer][g as usize];
        if idx == img.len() {
            stack.pop();
            continue;
        }
        top.2 += 1;
        let h = img[idx];
        if layer + 1 == depth {
            counts[h as usize] += 1;
        } else if layer + 2 == depth {
            for &k in &leaf[h as usize] {
                counts[k as usize] += 1;
            }
            if counts.iter().sum::<u64>() > limit {
                return Err(Error::Budget {
                    needed: format!(">{limit}"),
                    budget: limit,
                });
            }
        } else {
            stack.push((layer + 1, h, 0));
        }
    }
    Ok(counts)
}

/// Letter counts of the unreduced `Z` on `(t, n1, n2)` from the matrices.
pub fn z_counts_matrix(ctx: &WitnessContext, ub0: &Word) -> Result<[BigUint; 3]> {
    let mut v: [BigUint; 3] = [BigUint::zero(), BigUint::one(), BigUint::zero()];
    for l in ub0.letters() {
        let m = ctx.noise_matrix(ctx.b_index(l)?);
        let mut nv: [BigUint; 3] = [BigUint::zero(), BigUint::zero(), BigUint::zero()];
        for r in 0..3 {
            for c in 0..3 {
                nv[c] += &v[r] * m[r][c];
            }
        }
        v = nv;
    }
    Ok(v)
}
