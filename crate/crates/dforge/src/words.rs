//! Alphabets, signed letters and words over the generators of G(p,q).
//!
//! A [`Word`] is stored either as a plain letter vector or as a vector of
//! runs. The representation is a function of the content: a word is kept
//! run-length encoded exactly when one of its maximal runs is longer than
//! [`RLE_THRESHOLD`] letters.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Runs longer than this force the run-length representation.
pub const RLE_THRESHOLD: u64 = 64;

pub type GenId = u32;

/// What a generator id stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GenKind {
    A(u8),
    B(u32),
    T,
    X(u8),
    Y(u8),
}

/// The generator table `a1 a2 b0 .. bp t x1 x2 y1 y2`.
///
/// Ids are dense: `a1 = 0`, `a2 = 1`, `b_i = 2 + i`, `t = p + 3`,
/// `x1, x2 = p + 4, p + 5` and `y1, y2 = p + 6, p + 7`, so there are
/// `p + 8` generators in total.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Alphabet {
    p: u32,
}

impl Alphabet {
    pub fn new(p: u32) -> Result<Self> {
        if p == 0 {
            return Err(Error::Param("p must be positive".into()));
        }
        Ok(Alphabet { p })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn size(&self) -> usize {
        self.p as usize + 8
    }

    pub fn a1(&self) -> GenId {
        0
    }

    pub fn a2(&self) -> GenId {
        1
    }

    /// `a_i` for `i` in `{1, 2}`.
    pub fn a(&self, i: u8) -> GenId {
        debug_assert!(i == 1 || i == 2);
        i as GenId - 1
    }

    pub fn b(&self, i: u32) -> GenId {
        debug_assert!(i <= self.p);
        2 + i
    }

    pub fn t(&self) -> GenId {
        self.p + 3
    }

    pub fn x(&self, j: u8) -> GenId {
        debug_assert!(j == 1 || j == 2);
        self.p + 3 + j as GenId
    }

    pub fn y(&self, j: u8) -> GenId {
        debug_assert!(j == 1 || j == 2);
        self.p + 5 + j as GenId
    }

    pub fn kind(&self, id: GenId) -> GenKind {
        let p = self.p;
        match id {
            0 => GenKind::A(1),
            1 => GenKind::A(2),
            i if i >= 2 && i <= p + 2 => GenKind::B(i - 2),
            i if i == p + 3 => GenKind::T,
            i if i == p + 4 => GenKind::X(1),
            i if i == p + 5 => GenKind::X(2),
            i if i == p + 6 => GenKind::Y(1),
            i if i == p + 7 => GenKind::Y(2),
            _ => panic!("generator id {id} out of range for p = {p}"),
        }
    }

    pub fn contains(&self, id: GenId) -> bool {
        (id as usize) < self.size()
    }

    pub fn name(&self, id: GenId) -> String {
        match self.kind(id) {
            GenKind::A(i) => format!("a{i}"),
            GenKind::B(i) => format!("b{i}"),
            GenKind::T => "t".to_string(),
            GenKind::X(j) => format!("x{j}"),
            GenKind::Y(j) => format!("y{j}"),
        }
    }

    pub fn lookup(&self, name: &str) -> Option<GenId> {
        match name {
            "a1" => Some(0),
            "a2" => Some(1),
            "t" => Some(self.t()),
            "x1" => Some(self.x(1)),
            "x2" => Some(self.x(2)),
            "y1" => Some(self.y(1)),
            "y2" => Some(self.y(2)),
            _ => {
                let digits = name.strip_prefix('b')?;
                if digits.is_empty() || (digits.len() > 1 && digits.starts_with('0')) {
                    return None;
                }
                let i: u32 = digits.parse().ok()?;
                (i <= self.p).then(|| self.b(i))
            }
        }
    }

    pub fn letter(&self, name: &str) -> Letter {
        Letter::pos(self.lookup(name).unwrap_or_else(|| panic!("unknown generator {name}")))
    }

    /// True for `t, x1, x2, y1, y2`.
    pub fn is_noise_or_t(&self, id: GenId) -> bool {
        matches!(self.kind(id), GenKind::T | GenKind::X(_) | GenKind::Y(_))
    }
}

/// A generator or its inverse, packed as `±(id + 1)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Letter(i32);

impl Letter {
    /// Placeholder value that is never a valid letter.
    pub(crate) const FILL: Letter = Letter(0);

    pub fn new(id: GenId, inverse: bool) -> Self {
        let c = id as i32 + 1;
        Letter(if inverse { -c } else { c })
    }

    pub fn pos(id: GenId) -> Self {
        Letter::new(id, false)
    }

    pub fn neg(id: GenId) -> Self {
        Letter::new(id, true)
    }

    pub fn id(self) -> GenId {
        (self.0.unsigned_abs() - 1) as GenId
    }

    pub fn is_inverse(self) -> bool {
        self.0 < 0
    }

    pub fn sign(self) -> i32 {
        self.0.signum()
    }

    #[must_use]
    pub fn inv(self) -> Self {
        Letter(-self.0)
    }

    pub fn code(self) -> i32 {
        self.0
    }

    pub fn from_code(code: i32) -> Self {
        assert!(code != 0, "letter code 0 is invalid");
        Letter(code)
    }

    /// Order key: generators by id, a generator before its inverse.
    pub fn key(self) -> u32 {
        (self.id() << 1) | self.is_inverse() as u32
    }
}

impl PartialOrd for Letter {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Letter {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key().cmp(&other.key())
    }
}

impl fmt::Debug for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_inverse() {
            write!(f, "g{}^-1", self.id())
        } else {
            write!(f, "g{}", self.id())
        }
    }
}

/// A maximal block `letter^len`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Run {
    pub letter: Letter,
    pub len: u64,
}

impl Run {
    pub fn new(letter: Letter, len: u64) -> Self {
        Run { letter, len }
    }
}

#[derive(Clone, Debug)]
enum Repr {
    Plain(Vec<Letter>),
    Rle(Vec<Run>),
}

/// Counting modes for [`Word::letter_count`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CountMode {
    /// Occurrences of `g` and of `g^-1` together.
    OccurrencesSigned,
    /// Occurrences of `g` only.
    OccurrencesOfPositive,
    /// Occurrences of `g` minus occurrences of `g^-1`.
    ExponentSum,
}

/// A word in signed letters. Immutable once built.
#[derive(Clone)]
pub struct Word {
    repr: Repr,
    len: BigUint,
}

impl Default for Word {
    fn default() -> Self {
        Word::empty()
    }
}

impl PartialEq for Word {
    fn eq(&self, other: &Self) -> bool {
        if self.len != other.len {
            return false;
        }
        match (&self.repr, &other.repr) {
            (Repr::Plain(a), Repr::Plain(b)) => a == b,
            (Repr::Rle(a), Repr::Rle(b)) => a == b,
            // Representation is canonical, so mixed forms never agree.
            _ => false,
        }
    }
}

impl Eq for Word {}

impl std::hash::Hash for Word {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        for r in self.runs_iter() {
            r.hash(state);
        }
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word[")?;
        for (i, r) in self.runs_iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            if r.len == 1 {
                write!(f, "{:?}", r.letter)?;
            } else {
                write!(f, "{:?}*{}", r.letter, r.len)?;
            }
        }
        write!(f, "]")
    }
}

fn runs_of(letters: &[Letter]) -> Vec<Run> {
    let mut out: Vec<Run> = Vec::new();
    for &l in letters {
        match out.last_mut() {
            Some(r) if r.letter == l => r.len += 1,
            _ => out.push(Run::new(l, 1)),
        }
    }
    out
}

impl Word {
    pub fn empty() -> Self {
        Word {
            repr: Repr::Plain(Vec::new()),
            len: BigUint::zero(),
        }
    }

    pub fn from_letters(letters: Vec<Letter>) -> Self {
        let mut longest = 0u64;
        let mut cur = 0u64;
        for (i, &l) in letters.iter().enumerate() {
            if i > 0 && letters[i - 1] == l {
                cur += 1;
            } else {
                cur = 1;
            }
            longest = longest.max(cur);
        }
        if longest > RLE_THRESHOLD {
            let runs = runs_of(&letters);
            Word::from_merged_runs(runs)
        } else {
            let len = BigUint::from(letters.len());
            Word {
                repr: Repr::Plain(letters),
                len,
            }
        }
    }

    pub fn from_slice(letters: &[Letter]) -> Self {
        Word::from_letters(letters.to_vec())
    }

    pub fn letter(l: Letter) -> Self {
        Word::from_letters(vec![l])
    }

    /// Builds a word from runs, merging neighbours with equal letters. No
    /// cancellation takes place.
    pub fn from_runs<I: IntoIterator<Item = Run>>(runs: I) -> Self {
        let mut merged: Vec<Run> = Vec::new();
        for r in runs {
            if r.len == 0 {
                continue;
            }
            match merged.last_mut() {
                Some(top) if top.letter == r.letter => top.len += r.len,
                _ => merged.push(r),
            }
        }
        Word::from_merged_runs(merged)
    }

    fn from_merged_runs(runs: Vec<Run>) -> Self {
        let mut len = BigUint::zero();
        let mut total: u128 = 0;
        let mut longest = 0;
        for r in &runs {
            total += r.len as u128;
            longest = longest.max(r.len);
        }
        len += total;
        if longest > RLE_THRESHOLD {
            Word {
                repr: Repr::Rle(runs),
                len,
            }
        } else {
            let mut v = Vec::with_capacity(total as usize);
            for r in &runs {
                v.extend(std::iter::repeat_n(r.letter, r.len as usize));
            }
            Word {
                repr: Repr::Plain(v),
                len,
            }
        }
    }

    pub fn is_rle(&self) -> bool {
        matches!(self.repr, Repr::Rle(_))
    }

    pub fn is_empty(&self) -> bool {
        self.len.is_zero()
    }

    pub fn len(&self) -> &BigUint {
        &self.len
    }

    /// Length as a machine integer. Panics beyond `u64::MAX`, which no
    /// materialised word can reach.
    pub fn len_u64(&self) -> u64 {
        self.len.to_u64().expect("word length exceeds u64")
    }

    pub fn runs(&self) -> Vec<Run> {
        match &self.repr {
            Repr::Plain(v) => runs_of(v),
            Repr::Rle(r) => r.clone(),
        }
    }

    pub fn runs_iter(&self) -> Box<dyn Iterator<Item = Run> + '_> {
        match &self.repr {
            Repr::Plain(v) => Box::new(PlainRuns { v, i: 0 }),
            Repr::Rle(r) => Box::new(r.iter().copied()),
        }
    }

    pub fn letters(&self) -> Box<dyn Iterator<Item = Letter> + '_> {
        match &self.repr {
            Repr::Plain(v) => Box::new(v.iter().copied()),
            Repr::Rle(r) => Box::new(
                r.iter()
                    .flat_map(|run| std::iter::repeat_n(run.letter, run.len as usize)),
            ),
        }
    }

    pub fn to_vec(&self) -> Vec<Letter> {
        match &self.repr {
            Repr::Plain(v) => v.clone(),
            Repr::Rle(_) => self.letters().collect(),
        }
    }

    /// Borrow the letters when the word is stored plainly.
    pub fn as_plain(&self) -> Option<&[Letter]> {
        match &self.repr {
            Repr::Plain(v) => Some(v),
            Repr::Rle(_) => None,
        }
    }

    pub fn first(&self) -> Option<Letter> {
        self.runs_iter().next().map(|r| r.letter)
    }

    pub fn last(&self) -> Option<Letter> {
        match &self.repr {
            Repr::Plain(v) => v.last().copied(),
            Repr::Rle(r) => r.last().map(|r| r.letter),
        }
    }

    #[must_use]
    pub fn inverse(&self) -> Word {
        match &self.repr {
            Repr::Plain(v) => Word {
                repr: Repr::Plain(v.iter().rev().map(|l| l.inv()).collect()),
                len: self.len.clone(),
            },
            Repr::Rle(r) => Word {
                repr: Repr::Rle(
                    r.iter()
                        .rev()
                        .map(|run| Run::new(run.letter.inv(), run.len))
                        .collect(),
                ),
                len: self.len.clone(),
            },
        }
    }

    /// Concatenation without any cancellation.
    #[must_use]
    pub fn concat(&self, other: &Word) -> Word {
        if self.is_empty() {
            return other.clone();
        }
        if other.is_empty() {
            return self.clone();
        }
        if let (Repr::Plain(a), Repr::Plain(b)) = (&self.repr, &other.repr) {
            let mut v = Vec::with_capacity(a.len() + b.len());
            v.extend_from_slice(a);
            v.extend_from_slice(b);
            return Word::from_letters(v);
        }
        Word::from_runs(self.runs_iter().chain(other.runs_iter()))
    }

    pub fn concat_all<'a, I: IntoIterator<Item = &'a Word>>(parts: I) -> Word {
        let mut runs: Vec<Run> = Vec::new();
        for w in parts {
            runs.extend(w.runs_iter());
        }
        Word::from_runs(runs)
    }

    /// The unique freely reduced word equal to `self` in the free group.
    /// Cancellation happens run against run, so the cost is linear in the
    /// number of runs.
    #[must_use]
    pub fn free_reduce(&self) -> Word {
        Word::from_merged_runs(reduce_runs(self.runs_iter()))
    }

    pub fn is_freely_reduced(&self) -> bool {
        let mut prev: Option<Letter> = None;
        for r in self.runs_iter() {
            if let Some(p) = prev {
                if p == r.letter.inv() {
                    return false;
                }
            }
            prev = Some(r.letter);
        }
        true
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        if !self.is_freely_reduced() {
            return false;
        }
        match (self.first(), self.last()) {
            (Some(f), Some(l)) => self.len_u64() <= 1 || f != l.inv(),
            _ => true,
        }
    }

    /// Splits a freely reduced word as `c · core · c^-1` with `core`
    /// cyclically reduced and returns `(c, core)`.
    pub fn cyclic_core(&self) -> (Word, Word) {
        let mut runs = self.free_reduce().runs();
        let mut conj: Vec<Run> = Vec::new();
        while runs.len() >= 2 {
            let (f, l) = (runs[0], runs[runs.len() - 1]);
            if f.letter != l.letter.inv() {
                break;
            }
            let k = f.len.min(l.len);
            conj.push(Run::new(f.letter, k));
            let last = runs.len() - 1;
            runs[last].len -= k;
            runs[0].len -= k;
            if runs[last].len == 0 {
                runs.pop();
            }
            if runs[0].len == 0 {
                runs.remove(0);
            }
        }
        (Word::from_runs(conj), Word::from_runs(runs))
    }

    pub fn is_positive(&self) -> bool {
        self.runs_iter().all(|r| !r.letter.is_inverse())
    }

    pub fn letter_count(&self, g: GenId, mode: CountMode) -> i64 {
        let mut pos = 0i64;
        let mut neg = 0i64;
        for r in self.runs_iter() {
            if r.letter.id() == g {
                if r.letter.is_inverse() {
                    neg += r.len as i64;
                } else {
                    pos += r.len as i64;
                }
            }
        }
        match mode {
            CountMode::OccurrencesSigned => pos + neg,
            CountMode::OccurrencesOfPositive => pos,
            CountMode::ExponentSum => pos - neg,
        }
    }

    /// Occurrences of `g^{±1}`.
    pub fn count(&self, g: GenId) -> u64 {
        self.letter_count(g, CountMode::OccurrencesSigned) as u64
    }

    pub fn support(&self) -> BTreeSet<GenId> {
        self.runs_iter().map(|r| r.letter.id()).collect()
    }

    /// Rotation moving the first `k` letters to the end.
    #[must_use]
    pub fn rotate(&self, k: u64) -> Word {
        let n = self.len_u64();
        if n == 0 {
            return self.clone();
        }
        let k = k % n;
        let (a, b) = self.split_at(k);
        b.concat(&a)
    }

    /// `(prefix of length k, rest)`.
    pub fn split_at(&self, k: u64) -> (Word, Word) {
        match &self.repr {
            Repr::Plain(v) => {
                let k = k as usize;
                (Word::from_slice(&v[..k]), Word::from_slice(&v[k..]))
            }
            Repr::Rle(runs) => {
                let mut left = Vec::new();
                let mut right = Vec::new();
                let mut acc = 0u64;
                for r in runs {
                    if acc >= k {
                        right.push(*r);
                    } else if acc + r.len <= k {
                        left.push(*r);
                    } else {
                        let take = k - acc;
                        left.push(Run::new(r.letter, take));
                        right.push(Run::new(r.letter, r.len - take));
                    }
                    acc += r.len;
                }
                (Word::from_runs(left), Word::from_runs(right))
            }
        }
    }

    /// Subword `[start, end)`.
    pub fn subword(&self, start: u64, end: u64) -> Word {
        let (_, tail) = self.split_at(start);
        tail.split_at(end - start).0
    }

    /// Homomorphic image under `sigma`, without free reduction.
    pub fn apply_substitution(&self, sigma: &Substitution) -> Result<Word> {
        let mut runs: Vec<Run> = Vec::new();
        for r in self.runs_iter() {
            let img = sigma.image(r.letter)?;
            let img_runs = img.runs();
            for _ in 0..r.len {
                runs.extend_from_slice(&img_runs);
            }
        }
        Ok(Word::from_runs(runs))
    }

    /// Text form: whitespace separated tokens, `^-1` for inverses and
    /// `g^k` for runs. The empty word prints as `1`.
    pub fn to_text(&self, alpha: &Alphabet) -> String {
        if self.is_empty() {
            return "1".to_string();
        }
        let mut out = String::new();
        for (i, r) in self.runs_iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&alpha.name(r.letter.id()));
            match (r.len, r.letter.is_inverse()) {
                (1, false) => {}
                (1, true) => out.push_str("^-1"),
                (k, false) => out.push_str(&format!("^{k}")),
                (k, true) => out.push_str(&format!("^-{k}")),
            }
        }
        out
    }

    pub fn parse(alpha: &Alphabet, text: &str) -> Result<Word> {
        Word::parse_at(alpha, text, 1, 1)
    }

    /// Parses `text`, reporting errors relative to `(line, col)`.
    pub fn parse_at(alpha: &Alphabet, text: &str, line: usize, col: usize) -> Result<Word> {
        let mut runs = Vec::new();
        let mut saw_one = false;
        let mut count = 0usize;
        for (off, tok) in tokens(text) {
            count += 1;
            let c = col + off;
            if tok == "1" {
                saw_one = true;
                continue;
            }
            let (name, exp) = match tok.split_once('^') {
                Some((n, e)) => {
                    let e: i64 = e
                        .parse()
                        .map_err(|_| Error::parse(line, c, format!("bad exponent in '{tok}'")))?;
                    if e == 0 {
                        return Err(Error::parse(line, c, format!("zero exponent in '{tok}'")));
                    }
                    (n, e)
                }
                None => (tok, 1),
            };
            let id = alpha
                .lookup(name)
                .ok_or_else(|| Error::parse(line, c, format!("unknown generator '{name}'")))?;
            runs.push(Run::new(Letter::new(id, exp < 0), exp.unsigned_abs()));
        }
        if saw_one && count > 1 {
            return Err(Error::parse(line, col, "'1' must stand alone"));
        }
        Ok(Word::from_runs(runs))
    }

    /// Minimal rotation under the letter order (Booth's algorithm).
    pub fn least_rotation_index(&self) -> u64 {
        least_rotation(&self.to_vec()) as u64
    }
}

/// Whitespace separated tokens paired with their 0-based char offset.
fn tokens(text: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, ch) in text.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s, &text[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s, &text[s..]));
    }
    out.into_iter()
}

struct PlainRuns<'a> {
    v: &'a [Letter],
    i: usize,
}

impl Iterator for PlainRuns<'_> {
    type Item = Run;
    fn next(&mut self) -> Option<Run> {
        let l = *self.v.get(self.i)?;
        let mut j = self.i + 1;
        while j < self.v.len() && self.v[j] == l {
            j += 1;
        }
        let r = Run::new(l, (j - self.i) as u64);
        self.i = j;
        Some(r)
    }
}

/// Stack-based free reduction at run granularity.
pub fn reduce_runs<I: Iterator<Item = Run>>(runs: I) -> Vec<Run> {
    let mut st: Vec<Run> = Vec::new();
    for mut r in runs {
        while r.len > 0 {
            match st.last_mut() {
                Some(top) if top.letter == r.letter => {
                    top.len += r.len;
                    r.len = 0;
                }
                Some(top) if top.letter == r.letter.inv() => {
                    let m = top.len.min(r.len);
                    top.len -= m;
                    r.len -= m;
                    if top.len == 0 {
                        st.pop();
                    }
                }
                _ => {
                    st.push(r);
                    r.len = 0;
                }
            }
        }
    }
    st
}

/// In-place free reduction of a plain letter vector.
pub fn reduce_letters(v: &mut Vec<Letter>) {
    let mut top = 0usize;
    for i in 0..v.len() {
        let l = v[i];
        if top > 0 && v[top - 1] == l.inv() {
            top -= 1;
        } else {
            v[top] = l;
            top += 1;
        }
    }
    v.truncate(top);
}

/// Index of the lexicographically least rotation (Booth).
pub fn least_rotation(s: &[Letter]) -> usize {
    let n = s.len();
    if n == 0 {
        return 0;
    }
    let key = |i: usize| s[i % n].key();
    let mut f: Vec<isize> = vec![-1; 2 * n];
    let mut k = 0usize;
    for j in 1..2 * n {
        let sj = key(j);
        let mut i = f[j - k - 1];
        while i != -1 && sj != key(k + i as usize + 1) {
            if sj < key(k + i as usize + 1) {
                k = j - i as usize - 1;
            }
            i = f[i as usize];
        }
        if i == -1 && sj != key(k) {
            if sj < key(k) {
                k = j;
            }
            f[j - k] = -1;
        } else {
            f[j - k] = i + 1;
        }
    }
    k
}

/// Smallest period `d` dividing `n` with `s` invariant under rotation by `d`.
pub fn primitive_period(s: &[Letter]) -> usize {
    let n = s.len();
    if n == 0 {
        return 0;
    }
    // prefix function of s
    let mut pi = vec![0usize; n];
    for i in 1..n {
        let mut k = pi[i - 1];
        while k > 0 && s[i] != s[k] {
            k = pi[k - 1];
        }
        if s[i] == s[k] {
            k += 1;
        }
        pi[i] = k;
    }
    let d = n - pi[n - 1];
    if n.is_multiple_of(d) {
        d
    } else {
        n
    }
}

/// A word up to rotation, stored freely and cyclically reduced.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CyclicWord {
    word: Word,
    canonical_index: u64,
}

impl CyclicWord {
    /// Reduces `w` freely and cyclically and records its least rotation.
    pub fn new(w: &Word) -> Self {
        let (_, core) = w.cyclic_core();
        let canonical_index = core.least_rotation_index();
        CyclicWord {
            word: core,
            canonical_index,
        }
    }

    pub fn word(&self) -> &Word {
        &self.word
    }

    pub fn canonical_index(&self) -> u64 {
        self.canonical_index
    }

    pub fn canonical(&self) -> Word {
        self.word.rotate(self.canonical_index)
    }

    pub fn len_u64(&self) -> u64 {
        self.word.len_u64()
    }
}

/// Runs of `w` read cyclically: when the first and last run share a letter
/// the last is folded into the first.
pub fn cyclic_runs(w: &Word) -> Vec<Run> {
    let mut runs = w.runs();
    if runs.len() >= 2 && runs[0].letter == runs[runs.len() - 1].letter {
        let last = runs.pop().unwrap();
        runs[0].len += last.len;
    }
    runs
}

/// Whether `a` and `b` are conjugate in the free group, decided on runs.
pub fn are_conjugate(a: &Word, b: &Word) -> bool {
    let (ca, cb) = (a.cyclic_core().1, b.cyclic_core().1);
    if ca.len() != cb.len() {
        return false;
    }
    let (ra, rb) = (cyclic_runs(&ca), cyclic_runs(&cb));
    if ra.len() != rb.len() {
        return false;
    }
    if ra.len() <= 1 {
        return ra == rb;
    }
    // KMP search of ra inside rb rb
    let n = ra.len();
    let mut fail = vec![0usize; n];
    for i in 1..n {
        let mut k = fail[i - 1];
        while k > 0 && ra[i] != ra[k] {
            k = fail[k - 1];
        }
        if ra[i] == ra[k] {
            k += 1;
        }
        fail[i] = k;
    }
    let mut k = 0;
    for i in 0..2 * n {
        let c = rb[i % n];
        while k > 0 && c != ra[k] {
            k = fail[k - 1];
        }
        if c == ra[k] {
            k += 1;
        }
        if k == n {
            return true;
        }
    }
    false
}

/// All rotations of `w` and of `w^-1`, deduplicated and sorted.
pub fn cyclic_rotations(w: &Word) -> Vec<Word> {
    if w.is_empty() {
        return vec![Word::empty()];
    }
    let mut set: BTreeSet<Vec<Letter>> = BTreeSet::new();
    for base in [w.to_vec(), w.inverse().to_vec()] {
        let n = base.len();
        for k in 0..n {
            let mut r = Vec::with_capacity(n);
            r.extend_from_slice(&base[k..]);
            r.extend_from_slice(&base[..k]);
            set.insert(r);
        }
    }
    set.into_iter().map(Word::from_letters).collect()
}

/// A map from generators to words, extended to inverses by inversion.
#[derive(Clone, Debug, Default)]
pub struct Substitution {
    images: Vec<Option<Word>>,
    names: Vec<String>,
}

impl Substitution {
    pub fn new() -> Self {
        Substitution::default()
    }

    pub fn set(&mut self, g: GenId, image: Word) {
        let g = g as usize;
        if self.images.len() <= g {
            self.images.resize(g + 1, None);
        }
        self.images[g] = Some(image);
    }

    /// Name used in error messages for generator `g`.
    pub fn set_name(&mut self, g: GenId, name: &str) {
        let g = g as usize;
        if self.names.len() <= g {
            self.names.resize(g + 1, String::new());
        }
        self.names[g] = name.to_string();
    }

    pub fn get(&self, g: GenId) -> Option<&Word> {
        self.images.get(g as usize).and_then(|o| o.as_ref())
    }

    pub fn image(&self, l: Letter) -> Result<Word> {
        let w = self.get(l.id()).ok_or_else(|| {
            let name = self
                .names
                .get(l.id() as usize)
                .filter(|s| !s.is_empty())
                .cloned()
                .unwrap_or_else(|| format!("#{}", l.id()));
            Error::MissingGenerator(name)
        })?;
        Ok(if l.is_inverse() { w.inverse() } else { w.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn al() -> Alphabet {
        Alphabet::new(2).unwrap()
    }

    fn w(s: &str) -> Word {
        Word::parse(&al(), s).unwrap()
    }

    #[test]
    fn ids_are_dense() {
        let a = Alphabet::new(3).unwrap();
        let names: Vec<String> = (0..a.size() as u32).map(|i| a.name(i)).collect();
        assert_eq!(
            names,
            ["a1", "a2", "b0", "b1", "b2", "b3", "t", "x1", "x2", "y1", "y2"]
        );
        for (i, n) in names.iter().enumerate() {
            assert_eq!(a.lookup(n), Some(i as u32));
        }
        assert_eq!(a.lookup("b4"), None);
        assert_eq!(a.lookup("b01"), None);
    }

    #[test]
    fn reduce_examples() {
        assert!(w("x1 x1^-1").free_reduce().is_empty());
        assert_eq!(w("b1 b2 b2^-1 b1").free_reduce(), w("b1^2"));
        assert_eq!(w("b2^-1 b2 b1").free_reduce(), w("b1"));
    }

    #[test]
    fn rle_switch() {
        let short = w("x2^64");
        assert!(!short.is_rle());
        let long = w("x1 x2^65");
        assert!(long.is_rle());
        assert_eq!(long.len_u64(), 66);
        assert_eq!(long.to_text(&al()), "x1 x2^65");
    }

    #[test]
    fn counts() {
        let g = al();
        assert_eq!(
            w("a1 a2 a1^-1").letter_count(g.a1(), CountMode::ExponentSum),
            0
        );
        assert_eq!(
            w("b1 b0").letter_count(g.b(1), CountMode::OccurrencesOfPositive),
            1
        );
    }

    #[test]
    fn rotations() {
        assert_eq!(cyclic_rotations(&Word::empty()), vec![Word::empty()]);
        assert_eq!(cyclic_rotations(&w("x1 x2")).len(), 4);
        assert_eq!(cyclic_rotations(&w("x1 x1")).len(), 2);
    }

    #[test]
    fn substitution_lengths() {
        let g = al();
        let mut s = Substitution::new();
        s.set(g.t(), w("y1 t y2"));
        assert_eq!(w("t").apply_substitution(&s).unwrap(), w("y1 t y2"));
        assert_eq!(
            w("t^-1").apply_substitution(&s).unwrap(),
            w("y2^-1 t^-1 y1^-1")
        );
        assert!(matches!(
            w("x1").apply_substitution(&s),
            Err(Error::MissingGenerator(_))
        ));
    }

    #[test]
    fn text_errors_carry_columns() {
        match Word::parse(&al(), "x1 q7") {
            Err(Error::Parse { line: 1, col: 4, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(Word::parse(&al(), "x1^0").is_err());
        assert!(Word::parse(&al(), "b3").is_err());
    }

    #[test]
    fn booth() {
        let g = al();
        let v = w("x2 x1 x2 x1 x1").to_vec();
        let k = least_rotation(&v);
        let mut best = v.clone();
        for i in 0..v.len() {
            let mut r = v[i..].to_vec();
            r.extend_from_slice(&v[..i]);
            best = best.min(r);
        }
        let mut got = v[k..].to_vec();
        got.extend_from_slice(&v[..k]);
        assert_eq!(got, best);
        let _ = g;
    }

    #[test]
    fn period() {
        let v = w("x1 x2 x1 x2").to_vec();
        assert_eq!(primitive_period(&v), 2);
        assert_eq!(primitive_period(&w("x1 x2 x1").to_vec()), 3);
    }

    #[test]
    fn cyclic_core_splits() {
        let (c, core) = w("x1 x2 t x2^-1 x1^-1").cyclic_core();
        assert_eq!(c, w("x1 x2"));
        assert_eq!(core, w("t"));
        let cw = CyclicWord::new(&w("y1 x2 x1"));
        assert_eq!(cw.canonical(), w("x1 y1 x2"));
    }
}
