//! The presentation of G(p,q): Rips words, the 5p+11 relators and the
//! generating sets derived from them.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::words::{are_conjugate, Alphabet, GenKind, Letter, Run, Word};

/// Words shorter than this mark a toy-scale table.
pub const SHORT_RIPS_WARNING: u64 = 100;

/// Which family a Rips word belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RipsSide {
    X,
    Y,
}

/// A Rips word reference: side and 1-based index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RipsRef {
    pub side: RipsSide,
    pub index: u32,
}

impl fmt::Display for RipsRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.side {
            RipsSide::X => write!(f, "X{}", self.index),
            RipsSide::Y => write!(f, "Y{}", self.index),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RipsTable {
    pub p: u32,
    pub q: u32,
    pub scale: u32,
    pub x_words: Vec<Word>,
    pub y_words: Vec<Word>,
    /// Set when some word is shorter than [`SHORT_RIPS_WARNING`].
    pub short_words: bool,
}

pub fn check_params(p: u32, q: u32, scale: u32) -> Result<()> {
    if p < 2 {
        return Err(Error::Param(format!("p must be at least 2, got {p}")));
    }
    if q < 1 || q >= p {
        return Err(Error::Param(format!("need 1 <= q < p, got p={p} q={q}")));
    }
    if scale < 1 {
        return Err(Error::Param("scale must be at least 1".into()));
    }
    Ok(())
}

/// `g1 g2^{e} g1 g2^{e+1} ... g1 g2^{e+m-1}` with `e = scale·i·p` and
/// `m = scale·p`.
fn rips_word(g1: Letter, g2: Letter, scale: u32, p: u32, i: u32) -> Word {
    let m = scale as u64 * p as u64;
    let e0 = m * i as u64;
    let mut runs = Vec::with_capacity(2 * m as usize);
    for k in 0..m {
        runs.push(Run::new(g1, 1));
        runs.push(Run::new(g2, e0 + k));
    }
    Word::from_runs(runs)
}

pub fn build_rips_table(p: u32, q: u32, scale: u32) -> Result<RipsTable> {
    check_params(p, q, scale)?;
    let alpha = Alphabet::new(p)?;
    let (x1, x2) = (Letter::pos(alpha.x(1)), Letter::pos(alpha.x(2)));
    let (y1, y2) = (Letter::pos(alpha.y(1)), Letter::pos(alpha.y(2)));
    let x_words: Vec<Word> = (1..=14 * p).map(|i| rips_word(x1, x2, scale, p, i)).collect();
    let y_words: Vec<Word> = (1..=30).map(|i| rips_word(y1, y2, scale, p, i)).collect();
    let short_words = x_words
        .iter()
        .chain(&y_words)
        .any(|w| w.len_u64() < SHORT_RIPS_WARNING);
    Ok(RipsTable {
        p,
        q,
        scale,
        x_words,
        y_words,
        short_words,
    })
}

impl RipsTable {
    pub fn word(&self, r: RipsRef) -> &Word {
        match r.side {
            RipsSide::X => &self.x_words[r.index as usize - 1],
            RipsSide::Y => &self.y_words[r.index as usize - 1],
        }
    }

    pub fn min_len(&self) -> u64 {
        self.x_words
            .iter()
            .chain(&self.y_words)
            .map(|w| w.len_u64())
            .min()
            .unwrap_or(0)
    }

    /// Largest `x2` exponent over the X-words.
    pub fn x_alpha_max(&self) -> u64 {
        let m = self.scale as u64 * self.p as u64;
        m * (14 * self.p as u64) + m - 1
    }

    /// Largest `y2` exponent over the Y-words.
    pub fn y_alpha_max(&self) -> u64 {
        let m = self.scale as u64 * self.p as u64;
        m * 30 + m - 1
    }

    /// Map from every Rips word to its reference.
    pub fn index(&self) -> HashMap<Word, RipsRef> {
        let mut m = HashMap::new();
        for (i, w) in self.x_words.iter().enumerate() {
            m.insert(
                w.clone(),
                RipsRef {
                    side: RipsSide::X,
                    index: i as u32 + 1,
                },
            );
        }
        for (i, w) in self.y_words.iter().enumerate() {
            m.insert(
                w.clone(),
                RipsRef {
                    side: RipsSide::Y,
                    index: i as u32 + 1,
                },
            );
        }
        m
    }
}

/// Relator names. Indices follow the templates: `R1(i)` is r_{1,i} and so on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RelatorId {
    R1(u32),
    R2(u32),
    R3(u32),
    R3J(u32, u8),
    R4J(u8, u8),
    R4(u8),
}

impl fmt::Display for RelatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RelatorId::R1(i) => write!(f, "r1_{i}"),
            RelatorId::R2(i) => write!(f, "r2_{i}"),
            RelatorId::R3(i) => write!(f, "r3_{i}"),
            RelatorId::R3J(i, j) => write!(f, "r3_{i}_{j}"),
            RelatorId::R4J(i, j) => write!(f, "r4_{i}_{j}"),
            RelatorId::R4(i) => write!(f, "r4_{i}"),
        }
    }
}

impl std::str::FromStr for RelatorId {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let bad = || format!("bad relator id '{s}'");
        let parts: Vec<&str> = s.split('_').collect();
        let num = |k: usize| -> std::result::Result<u32, String> {
            parts.get(k).ok_or_else(bad)?.parse::<u32>().map_err(|_| bad())
        };
        let small = |k: usize| -> std::result::Result<u8, String> {
            let v = num(k)?;
            if v == 1 || v == 2 {
                Ok(v as u8)
            } else {
                Err(bad())
            }
        };
        match (parts.first().copied(), parts.len()) {
            (Some("r1"), 2) => Ok(RelatorId::R1(num(1)?)),
            (Some("r2"), 2) => Ok(RelatorId::R2(num(1)?)),
            (Some("r3"), 2) => Ok(RelatorId::R3(num(1)?)),
            (Some("r3"), 3) => Ok(RelatorId::R3J(num(1)?, small(2)?)),
            (Some("r4"), 3) => Ok(RelatorId::R4J(small(1)?, small(2)?)),
            (Some("r4"), 2) => Ok(RelatorId::R4(small(1)?)),
            _ => Err(bad()),
        }
    }
}

/// One defining relation `lhs = rhs`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relator {
    pub id: RelatorId,
    pub lhs: Word,
    pub rhs: Word,
    /// Rips words in the order they were placed.
    pub rips: Vec<RipsRef>,
    /// The `N2`/`N3` block (`W_a t W_b` or `W_a t^-1 W_b t W_c`).
    pub noise: Word,
}

impl Relator {
    /// The relator word `lhs · rhs^-1`, freely reduced.
    pub fn cyclic(&self) -> Word {
        self.lhs.concat(&self.rhs.inverse()).free_reduce()
    }

    /// `(u, v)` with the relator a rotation of `t^-1 u t v^-1`.
    pub fn t_form(&self, alpha: &Alphabet) -> Result<(Word, Word)> {
        t_form(&self.cyclic(), alpha).ok_or_else(|| {
            Error::TemplateMismatch(format!(
                "relator {} does not have exactly one t and one t^-1",
                self.id
            ))
        })
    }
}

/// Rotates `r` to `t^-1 u t v^-1` and returns `(u, v)`.
pub fn t_form(r: &Word, alpha: &Alphabet) -> Option<(Word, Word)> {
    let t = alpha.t();
    let mut offsets = Vec::new();
    let mut acc = 0u64;
    for run in r.runs_iter() {
        if run.letter.id() == t {
            for k in 0..run.len.min(3) {
                offsets.push((acc + k, run.letter.is_inverse()));
            }
        }
        acc += run.len;
    }
    let neg = match offsets.as_slice() {
        [(i, true), (_, false)] | [(_, false), (i, true)] => *i,
        _ => return None,
    };
    // rot = t^-1 u t v^-1
    let rot = r.rotate(neg);
    let body = rot.subword(1, acc);
    let tp = body.runs_iter().scan(0u64, |pos, run| {
        let here = *pos;
        *pos += run.len;
        Some((here, run))
    });
    let mut split = None;
    for (here, run) in tp {
        if run.letter.id() == t {
            split = Some(here);
        }
    }
    let split = split?;
    let u = body.subword(0, split);
    let vinv = body.subword(split + 1, acc - 1);
    Some((u, vinv.inverse()))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Presentation {
    pub alphabet: Alphabet,
    pub rips: RipsTable,
    pub relators: Vec<Relator>,
}

/// Hands out Rips words in ascending index.
struct Allocator<'a> {
    table: &'a RipsTable,
    next_x: u32,
    next_y: u32,
}

impl Allocator<'_> {
    fn take(&mut self, side: RipsSide) -> Result<RipsRef> {
        let (next, limit) = match side {
            RipsSide::X => (&mut self.next_x, self.table.x_words.len() as u32),
            RipsSide::Y => (&mut self.next_y, self.table.y_words.len() as u32),
        };
        if *next > limit {
            return Err(Error::Allocation(format!("ran out of {side:?}-words")));
        }
        let r = RipsRef { side, index: *next };
        *next += 1;
        Ok(r)
    }
}

pub fn build_presentation(p: u32, q: u32, scale: u32) -> Result<Presentation> {
    let rips = build_rips_table(p, q, scale)?;
    let alpha = Alphabet::new(p)?;
    let mut alloc = Allocator {
        table: &rips,
        next_x: 1,
        next_y: 1,
    };
    let mut relators = Vec::with_capacity(5 * p as usize + 11);
    for id in relator_order(p, q) {
        relators.push(make_relator(&alpha, &rips, &mut alloc, id, q)?);
    }
    if alloc.next_x != 14 * p + 1 || alloc.next_y != 31 {
        return Err(Error::Allocation(format!(
            "consumed {} X-words and {} Y-words",
            alloc.next_x - 1,
            alloc.next_y - 1
        )));
    }
    Ok(Presentation {
        alphabet: alpha,
        rips,
        relators,
    })
}

/// The enumeration order of the relators, which fixes Rips allocation.
pub fn relator_order(p: u32, q: u32) -> Vec<RelatorId> {
    let mut ids = Vec::new();
    for i in 1..p {
        if i != q - 1 {
            ids.push(RelatorId::R1(i));
        }
    }
    if q > 1 {
        ids.push(RelatorId::R1(q - 1));
    }
    ids.push(RelatorId::R1(p));
    ids.push(RelatorId::R1(0));
    ids.extend((1..=p).map(RelatorId::R2));
    ids.push(RelatorId::R2(0));
    ids.extend((1..=p).map(RelatorId::R3));
    ids.push(RelatorId::R3(0));
    for i in 1..=p {
        for j in 1..=2 {
            ids.push(RelatorId::R3J(i, j));
        }
    }
    for j in 1..=2 {
        ids.push(RelatorId::R3J(0, j));
    }
    for i in 1..=2 {
        for j in 1..=2 {
            ids.push(RelatorId::R4J(i, j));
        }
    }
    ids.push(RelatorId::R4(1));
    ids.push(RelatorId::R4(2));
    ids
}

fn make_relator(
    alpha: &Alphabet,
    rips: &RipsTable,
    alloc: &mut Allocator,
    id: RelatorId,
    q: u32,
) -> Result<Relator> {
    let p = alpha.p();
    let l = |g| Word::letter(Letter::pos(g));
    let li = |g| Word::letter(Letter::neg(g));
    let t = Letter::pos(alpha.t());
    let side_of = |i: u32| if i == 0 { RipsSide::Y } else { RipsSide::X };

    let n3 = |alloc: &mut Allocator, side| -> Result<(Word, Vec<RipsRef>)> {
        let refs = vec![alloc.take(side)?, alloc.take(side)?, alloc.take(side)?];
        let w = Word::concat_all([
            rips.word(refs[0]),
            &Word::letter(t.inv()),
            rips.word(refs[1]),
            &Word::letter(t),
            rips.word(refs[2]),
        ]);
        Ok((w, refs))
    };
    let n2 = |alloc: &mut Allocator, side| -> Result<(Word, Vec<RipsRef>)> {
        let refs = vec![alloc.take(side)?, alloc.take(side)?];
        let w = Word::concat_all([rips.word(refs[0]), &Word::letter(t), rips.word(refs[1])]);
        Ok((w, refs))
    };

    let (lhs, rhs, noise, refs) = match id {
        RelatorId::R1(i) => {
            let (a1, bi) = (alpha.a1(), alpha.b(i));
            let with_a2 = (q > 1 && i == q - 1) || (q == 1 && i == 0);
            let (nw, refs) = n3(alloc, side_of(i))?;
            let mut parts = vec![li(a1), l(bi), l(a1)];
            if with_a2 {
                parts.push(l(alpha.a2()));
            }
            parts.push(nw.clone());
            let rhs = if i == p {
                l(bi)
            } else {
                Word::concat_all([&l(alpha.b(i + 1)), &l(bi)])
            };
            (Word::concat_all(parts.iter()), rhs, nw, refs)
        }
        RelatorId::R2(i) => {
            let (a2, bi) = (alpha.a2(), alpha.b(i));
            let (nw, refs) = n3(alloc, side_of(i))?;
            (
                Word::concat_all([&li(a2), &l(bi), &l(a2), &nw]),
                l(bi),
                nw,
                refs,
            )
        }
        RelatorId::R3(i) => {
            let bi = alpha.b(i);
            let (nw, refs) = n2(alloc, side_of(i))?;
            (
                Word::concat_all([&li(bi), &l(alpha.t()), &l(bi)]),
                nw.clone(),
                nw,
                refs,
            )
        }
        RelatorId::R3J(i, j) => {
            let bi = alpha.b(i);
            let (nw, refs) = n3(alloc, side_of(i))?;
            (
                Word::concat_all([&li(bi), &l(alpha.x(j)), &l(bi)]),
                nw.clone(),
                nw,
                refs,
            )
        }
        RelatorId::R4J(i, j) => {
            let ai = alpha.a(i);
            let (nw, refs) = n3(alloc, RipsSide::Y)?;
            (
                Word::concat_all([&li(ai), &l(alpha.y(j)), &l(ai)]),
                nw.clone(),
                nw,
                refs,
            )
        }
        RelatorId::R4(i) => {
            let ai = alpha.a(i);
            let (nw, refs) = n2(alloc, RipsSide::Y)?;
            (
                Word::concat_all([&li(ai), &l(alpha.t()), &l(ai)]),
                nw.clone(),
                nw,
                refs,
            )
        }
    };
    Ok(Relator {
        id,
        lhs,
        rhs,
        rips: refs,
        noise,
    })
}

/// Splits a word into maximal stretches of x-letters or of y-letters, each
/// reported as `(start letter index, stretch)`.
pub fn noise_stretches(w: &Word, alpha: &Alphabet) -> Vec<(u64, RipsSide, Word)> {
    let mut out = Vec::new();
    let mut cur: Vec<Run> = Vec::new();
    let mut cur_side: Option<RipsSide> = None;
    let mut cur_start = 0u64;
    let mut pos = 0u64;
    let side_of = |l: Letter| match alpha.kind(l.id()) {
        GenKind::X(_) => Some(RipsSide::X),
        GenKind::Y(_) => Some(RipsSide::Y),
        _ => None,
    };
    for r in w.runs_iter() {
        let s = side_of(r.letter);
        if s != cur_side || s.is_none() {
            if let Some(cs) = cur_side {
                out.push((cur_start, cs, Word::from_runs(cur.drain(..))));
            }
            cur_side = s;
            cur_start = pos;
        }
        if s.is_some() {
            cur.push(r);
        }
        pos += r.len;
    }
    if let Some(cs) = cur_side {
        out.push((cur_start, cs, Word::from_runs(cur)));
    }
    out
}

/// Noise stretches of one side of a relator, leaving out the conjugated
/// generator of a left side `c^-1 g c`.
fn frame_free_stretches(w: &Word, lhs: bool, alpha: &Alphabet) -> Vec<(u64, RipsSide, Word)> {
    noise_stretches(w, alpha)
        .into_iter()
        .filter(|(pos, _, s)| !(lhs && *pos == 1 && s.len_u64() == 1))
        .collect()
}

/// Counts produced by [`Presentation::census`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Census {
    pub relators: usize,
    pub x_used: usize,
    pub y_used: usize,
}

impl Presentation {
    pub fn relator(&self, id: RelatorId) -> &Relator {
        self.relators
            .iter()
            .find(|r| r.id == id)
            .unwrap_or_else(|| panic!("no relator {id}"))
    }

    pub fn p(&self) -> u32 {
        self.alphabet.p()
    }

    pub fn q(&self) -> u32 {
        self.rips.q
    }

    pub fn scale(&self) -> u32 {
        self.rips.scale
    }

    /// Structural census: relator count, each Rips word used once, and every
    /// relator balanced in `t` with the `t^-1 u t v^-1` shape.
    pub fn census(&self) -> Result<Census> {
        let p = self.p();
        if self.relators.len() != 5 * p as usize + 11 {
            return Err(Error::Assertion(format!(
                "expected {} relators, found {}",
                5 * p + 11,
                self.relators.len()
            )));
        }
        let index = self.rips.index();
        let mut seen: HashMap<RipsRef, RelatorId> = HashMap::new();
        for r in &self.relators {
            let cyc = r.cyclic();
            if !cyc.is_cyclically_reduced() {
                return Err(Error::Assertion(format!("relator {} not cyclically reduced", r.id)));
            }
            let t = self.alphabet.t();
            if cyc.count(t) != 2
                || cyc.letter_count(t, crate::words::CountMode::ExponentSum) != 0
            {
                return Err(Error::Assertion(format!("relator {} is not t-balanced", r.id)));
            }
            let (u, v) = r.t_form(&self.alphabet)?;
            if u.is_empty() || v.is_empty() || u.count(t) > 0 || v.count(t) > 0 {
                return Err(Error::Assertion(format!("relator {} has a bad t-form", r.id)));
            }
            let stretches = frame_free_stretches(&r.lhs, true, &self.alphabet)
                .into_iter()
                .chain(frame_free_stretches(&r.rhs, false, &self.alphabet));
            for (_, _, stretch) in stretches {
                let key = if stretch.first().is_some_and(|l| l.is_inverse()) {
                    stretch.inverse()
                } else {
                    stretch.clone()
                };
                let rr = index.get(&key).ok_or_else(|| {
                    Error::Assertion(format!("relator {} contains a non-Rips noise stretch", r.id))
                })?;
                if let Some(prev) = seen.insert(*rr, r.id) {
                    return Err(Error::Assertion(format!(
                        "Rips word {rr} used by both {prev} and {}",
                        r.id
                    )));
                }
            }
        }
        let x_used = seen.keys().filter(|r| r.side == RipsSide::X).count();
        let y_used = seen.keys().filter(|r| r.side == RipsSide::Y).count();
        if x_used != 14 * p as usize || y_used != 30 {
            return Err(Error::Assertion(format!(
                "consumed {x_used} X-words and {y_used} Y-words"
            )));
        }
        Ok(Census {
            relators: self.relators.len(),
            x_used,
            y_used,
        })
    }

    /// Relator words `lhs · rhs^-1` for every relator.
    pub fn relator_words(&self) -> Vec<Word> {
        self.relators.iter().map(|r| r.cyclic()).collect()
    }

    pub fn min_relator_len(&self) -> u64 {
        self.relator_words()
            .iter()
            .map(|w| w.len_u64())
            .min()
            .unwrap_or(0)
    }

    /// Total letters over all relator words.
    pub fn total_letters(&self) -> u64 {
        self.relator_words().iter().map(|w| w.len_u64()).sum()
    }

    pub fn serialize(&self) -> String {
        let mut out = format!("P {} {} {}\n", self.p(), self.q(), self.scale());
        for r in &self.relators {
            out.push_str(&format!(
                "{} : {} = {}\n",
                r.id,
                r.lhs.to_text(&self.alphabet),
                r.rhs.to_text(&self.alphabet)
            ));
        }
        out
    }

    /// Parses the text form. The Rips table is rebuilt from the header and
    /// every noise stretch must be one of its words, used exactly once.
    pub fn parse(text: &str) -> Result<Presentation> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (hl, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, 1, "empty presentation file"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 || fields[0] != "P" {
            return Err(Error::parse(hl + 1, 1, "expected header 'P p q scale'"));
        }
        let num = |k: usize| -> Result<u32> {
            fields[k]
                .parse()
                .map_err(|_| Error::parse(hl + 1, 1, format!("bad header field '{}'", fields[k])))
        };
        let (p, q, scale) = (num(1)?, num(2)?, num(3)?);
        let rips = build_rips_table(p, q, scale)?;
        let alpha = Alphabet::new(p)?;
        let index = rips.index();
        let mut used: HashMap<RipsRef, usize> = HashMap::new();
        let mut relators = Vec::new();
        for (ln, line) in lines {
            let line_no = ln + 1;
            let (id_part, rest) = line
                .split_once(':')
                .ok_or_else(|| Error::parse(line_no, 1, "expected 'id : lhs = rhs'"))?;
            let id: RelatorId = id_part
                .trim()
                .parse()
                .map_err(|e: String| Error::parse(line_no, 1, e))?;
            let colon = id_part.len() + 1;
            let (lhs_txt, rhs_txt) = rest
                .split_once('=')
                .ok_or_else(|| Error::parse(line_no, colon + 1, "missing '='"))?;
            let lhs = Word::parse_at(&alpha, lhs_txt, line_no, colon + 1)?;
            let rhs = Word::parse_at(&alpha, rhs_txt, line_no, colon + lhs_txt.len() + 2)?;
            let mut refs = Vec::new();
            let mut noise_parts: Vec<Word> = Vec::new();
            for (k, side_word) in [&lhs, &rhs].into_iter().enumerate() {
                let mut in_block = false;
                for (_, _, stretch) in frame_free_stretches(side_word, k == 0, &alpha) {
                    let rr = index.get(&stretch).ok_or_else(|| {
                        Error::parse(line_no, 1, "noise stretch is not a Rips word of this table")
                    })?;
                    if let Some(prev) = used.insert(*rr, line_no) {
                        return Err(Error::parse(
                            line_no,
                            1,
                            format!("Rips word {rr} already used on line {prev}"),
                        ));
                    }
                    refs.push(*rr);
                    in_block = true;
                }
                if in_block {
                    // the noise block runs from the first Rips word to the end
                    let start = side_word
                        .runs_iter()
                        .take_while(|r| !matches!(alpha.kind(r.letter.id()), GenKind::X(_) | GenKind::Y(_)))
                        .map(|r| r.len)
                        .sum::<u64>();
                    noise_parts.push(side_word.subword(start, side_word.len_u64()));
                }
            }
            let noise = noise_parts.into_iter().next().unwrap_or_default();
            relators.push(Relator {
                id,
                lhs,
                rhs,
                rips: refs,
                noise,
            });
        }
        Ok(Presentation {
            alphabet: alpha,
            rips,
            relators,
        })
    }

    /// Replaces the second Rips word of the first relator with the first
    /// one, producing a presentation that fails [`Presentation::census`].
    #[doc(hidden)]
    pub fn inject_duplicate_rips(&mut self) {
        let r = &mut self.relators[0];
        let dup = self.rips.word(r.rips[0]).clone();
        let old = self.rips.word(r.rips[1]).clone();
        let v = r.lhs.runs();
        let old_runs = old.runs();
        let mut out: Vec<Run> = Vec::new();
        let mut i = 0;
        while i < v.len() {
            if v[i..].starts_with(&old_runs) {
                out.extend(dup.runs());
                i += old_runs.len();
            } else {
                out.push(v[i]);
                i += 1;
            }
        }
        r.lhs = Word::from_runs(out);
        r.rips[1] = r.rips[0];
    }
}

/// Table-1 word shape: Rips words collapse to `X_*` / `Y_*`.
pub fn shape(w: &Word, alpha: &Alphabet, rips: &RipsTable) -> String {
    let index = rips.index();
    let mut toks: Vec<String> = Vec::new();
    let mut noise: Vec<Run> = Vec::new();
    let flush = |noise: &mut Vec<Run>, toks: &mut Vec<String>| {
        if noise.is_empty() {
            return;
        }
        let s = Word::from_runs(noise.drain(..));
        let tok = match index.get(&s) {
            Some(r) if r.side == RipsSide::X => "X_*".to_string(),
            Some(_) => "Y_*".to_string(),
            None => match index.get(&s.inverse()) {
                Some(r) if r.side == RipsSide::X => "X_*^-1".to_string(),
                Some(_) => "Y_*^-1".to_string(),
                None => "?".to_string(),
            },
        };
        toks.push(tok);
    };
    for r in w.runs_iter() {
        match alpha.kind(r.letter.id()) {
            GenKind::X(_) | GenKind::Y(_) => noise.push(r),
            _ => {
                flush(&mut noise, &mut toks);
                let name = alpha.name(r.letter.id());
                for _ in 0..r.len {
                    toks.push(if r.letter.is_inverse() {
                        format!("{name}^-1")
                    } else {
                        name.clone()
                    });
                }
            }
        }
    }
    flush(&mut noise, &mut toks);
    toks.join(" ")
}

/// A stable letter with its initial and terminal generators.
#[derive(Clone, Debug)]
pub struct TerminalSet {
    /// Name of the stable letter, e.g. `a1` or `b2`.
    pub stable: String,
    /// Row label: `G_-1` or `G_i` and the vertex name `L_i`.
    pub label: String,
    pub initial: Vec<Word>,
    pub terminal: Vec<Word>,
    /// The relator each pair comes from.
    pub sources: Vec<RelatorId>,
}

/// The data derived from a presentation for the HNN viewpoint.
#[derive(Clone, Debug)]
pub struct HnnData {
    /// `(u_r, v_r)` per relator, in relator order.
    pub pairs: Vec<(RelatorId, Word, Word)>,
    /// All `u` and `v` words.
    pub u_set: Vec<Word>,
    pub terminal_sets: Vec<TerminalSet>,
    /// Union of all terminal sets.
    pub s_set: Vec<Word>,
    pub s1: Vec<Word>,
    pub s2: Vec<Word>,
    /// Initial vertex groups `K_0 .. K_p`.
    pub k_sets: Vec<Vec<Word>>,
}

/// Shapes of the five terminal words for stable letter `b_j`.
fn expected_b_shapes(j: u32, q: u32) -> Vec<String> {
    let n = if j == 0 { "Y_*" } else { "X_*" };
    let n3 = format!("{n} t^-1 {n} t {n}");
    let n2 = format!("{n} t {n}");
    let first = if (q > 1 && j == q - 1) || (q == 1 && j == 0) {
        format!("a1 a2 {n3}")
    } else {
        format!("a1 {n3}")
    };
    vec![first, format!("a2 {n3}"), n2, n3.clone(), n3]
}

pub fn derive_hnn_data(pres: &Presentation) -> Result<HnnData> {
    let alpha = &pres.alphabet;
    let (p, q) = (pres.p(), pres.q());
    let mut pairs = Vec::new();
    let mut u_set = Vec::new();
    for r in &pres.relators {
        let (u, v) = r.t_form(alpha)?;
        u_set.push(u.clone());
        u_set.push(v.clone());
        pairs.push((r.id, u, v));
    }
    let l = |g| Word::letter(Letter::pos(g));
    let conj_check = |stable: Letter, g: &Word, term: &Word, id: RelatorId| -> Result<()> {
        // stable^-1 g stable term^-1 must be a cyclic conjugate of the relator
        let w = Word::concat_all([
            &Word::letter(stable.inv()),
            g,
            &Word::letter(stable),
            &term.inverse(),
        ]);
        let target = pres.relator(id).cyclic();
        if are_conjugate(&w, &target) || are_conjugate(&w.inverse(), &target) {
            Ok(())
        } else {
            Err(Error::TemplateMismatch(format!(
                "conjugation by {} does not rearrange relator {id}",
                alpha.name(stable.id())
            )))
        }
    };

    let mut terminal_sets = Vec::new();
    // G_-1: stable letters a1, a2 acting on <t, y1, y2>
    for i in 1..=2u8 {
        let ai = Letter::pos(alpha.a(i));
        let initial = vec![l(alpha.t()), l(alpha.y(1)), l(alpha.y(2))];
        let sources = vec![RelatorId::R4(i), RelatorId::R4J(i, 1), RelatorId::R4J(i, 2)];
        let terminal: Vec<Word> = sources.iter().map(|&id| pres.relator(id).noise.clone()).collect();
        for k in 0..3 {
            conj_check(ai, &initial[k], &terminal[k], sources[k])?;
        }
        let shapes: Vec<String> = terminal.iter().map(|w| shape(w, alpha, &pres.rips)).collect();
        let want = ["Y_* t Y_*", "Y_* t^-1 Y_* t Y_*", "Y_* t^-1 Y_* t Y_*"];
        if shapes != want {
            return Err(Error::TemplateMismatch(format!(
                "G_-1 terminal set for a{i} has shapes {shapes:?}"
            )));
        }
        terminal_sets.push(TerminalSet {
            stable: format!("a{i}"),
            label: "G_-1".into(),
            initial,
            terminal,
            sources,
        });
    }
    // G_i rows: stable letter b_{p-i}
    let mut k_sets = Vec::new();
    for i in 0..=p {
        let j = p - i;
        let bj = Letter::pos(alpha.b(j));
        let first_initial = if j == p {
            l(alpha.a1())
        } else {
            Word::concat_all([&l(alpha.a1()), &l(alpha.b(j + 1))])
        };
        let initial = vec![
            first_initial,
            l(alpha.a2()),
            l(alpha.t()),
            l(alpha.x(1)),
            l(alpha.x(2)),
        ];
        let sources = vec![
            RelatorId::R1(j),
            RelatorId::R2(j),
            RelatorId::R3(j),
            RelatorId::R3J(j, 1),
            RelatorId::R3J(j, 2),
        ];
        let r1 = pres.relator(RelatorId::R1(j));
        // a1^-1 b_j a1 sigma = phi(b_j)  gives  b_j^-1 (a1 b_{j+1}) b_j = a1 sigma
        let sigma = r1.lhs.subword(3, r1.lhs.len_u64());
        let terminal = vec![
            l(alpha.a1()).concat(&sigma),
            l(alpha.a2()).concat(&pres.relator(RelatorId::R2(j)).noise),
            pres.relator(RelatorId::R3(j)).noise.clone(),
            pres.relator(RelatorId::R3J(j, 1)).noise.clone(),
            pres.relator(RelatorId::R3J(j, 2)).noise.clone(),
        ];
        for k in 0..5 {
            conj_check(bj, &initial[k], &terminal[k], sources[k])?;
        }
        let shapes: Vec<String> = terminal.iter().map(|w| shape(w, alpha, &pres.rips)).collect();
        let want = expected_b_shapes(j, q);
        if shapes != want {
            return Err(Error::TemplateMismatch(format!(
                "terminal set L_{i} (stable letter b{j}) has shapes {shapes:?}, expected {want:?}"
            )));
        }
        k_sets.push(initial.clone());
        terminal_sets.push(TerminalSet {
            stable: format!("b{j}"),
            label: format!("G_{i} / L_{i}"),
            initial,
            terminal,
            sources,
        });
    }
    let s_set: Vec<Word> = terminal_sets
        .iter()
        .flat_map(|ts| ts.terminal.iter().cloned())
        .collect();
    let z: Vec<Word> = terminal_sets[0].terminal.clone();
    let z_prime: Vec<Word> = terminal_sets[1].terminal.clone();
    let zp: Vec<Word> = vec![
        pres.relator(RelatorId::R1(0)).noise.clone(),
        pres.relator(RelatorId::R2(0)).noise.clone(),
        pres.relator(RelatorId::R3(0)).noise.clone(),
        pres.relator(RelatorId::R3J(0, 1)).noise.clone(),
        pres.relator(RelatorId::R3J(0, 2)).noise.clone(),
    ];
    let mut s1 = vec![l(alpha.t()), l(alpha.x(1)), l(alpha.x(2))];
    s1.extend(z.iter().cloned());
    s1.extend(z_prime.iter().cloned());
    let mut s2: Vec<Word> = z.iter().chain(&z_prime).cloned().collect();
    s2.extend(zp);
    Ok(HnnData {
        pairs,
        u_set,
        terminal_sets,
        s_set,
        s1,
        s2,
        k_sets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::CyclicWord;

    #[test]
    fn rips_lengths() {
        let t = build_rips_table(2, 1, 200).unwrap();
        assert_eq!(t.x_words[0].len_u64(), 240_200);
        assert_eq!(t.x_words.len(), 28);
        assert_eq!(t.y_words.len(), 30);
        assert!(!t.short_words);
        let toy = build_rips_table(2, 1, 1).unwrap();
        // two blocks with exponents 2 and 3
        assert_eq!(toy.x_words[0].len_u64(), 7);
        assert!(toy.short_words);
    }

    #[test]
    fn bad_params() {
        assert!(matches!(build_rips_table(1, 1, 1), Err(Error::Param(_))));
        assert!(matches!(build_rips_table(3, 3, 1), Err(Error::Param(_))));
        assert!(matches!(build_rips_table(3, 0, 1), Err(Error::Param(_))));
        assert!(matches!(build_rips_table(3, 1, 0), Err(Error::Param(_))));
    }

    #[test]
    fn relator_ids_round_trip() {
        for id in relator_order(4, 2) {
            let s = id.to_string();
            assert_eq!(s.parse::<RelatorId>().unwrap(), id);
        }
        assert!("r5_1".parse::<RelatorId>().is_err());
        assert!("r4_3_1".parse::<RelatorId>().is_err());
    }

    #[test]
    fn order_has_census_length() {
        for p in 2..6 {
            for q in 1..p {
                assert_eq!(relator_order(p, q).len(), 5 * p as usize + 11);
            }
        }
    }

    #[test]
    fn t_form_of_r3() {
        let pres = build_presentation(2, 1, 1).unwrap();
        let r = pres.relator(RelatorId::R3(0));
        let (u, v) = r.t_form(&pres.alphabet).unwrap();
        // t^-1 u t = v in the free product sense: rebuild the relator
        let t = Word::letter(Letter::pos(pres.alphabet.t()));
        let rebuilt = Word::concat_all([&t.inverse(), &u, &t, &v.inverse()]);
        assert_eq!(
            CyclicWord::new(&rebuilt).canonical(),
            CyclicWord::new(&r.cyclic()).canonical()
        );
    }
}
