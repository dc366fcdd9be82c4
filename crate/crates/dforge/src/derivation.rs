//! Replayable equality certificates: sequences of relator applications and
//! free reductions, checked syntactically against the relator table.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::presentation::{Presentation, RelatorId};
use crate::words::{reduce_letters, Alphabet, Letter, Word};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Orient {
    /// The relator word `lhs · rhs^-1` as stored.
    Fwd,
    /// Its inverse.
    Rev,
}

impl Orient {
    pub fn flip(self) -> Orient {
        match self {
            Orient::Fwd => Orient::Rev,
            Orient::Rev => Orient::Fwd,
        }
    }
}

impl fmt::Display for Orient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Orient::Fwd => "fwd",
            Orient::Rev => "rev",
        })
    }
}

/// One derivation step.
///
/// A relator step takes the oriented relator, rotates it left by `rot`, and
/// splits it as `S · T^-1` with `|S| = len`; the subword `S` found at `pos`
/// is replaced by `T`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    Relator {
        id: RelatorId,
        pos: u64,
        orient: Orient,
        rot: u64,
        len: u64,
    },
    /// Free reduction of the whole word.
    Reduce,
    /// Free reduction of the subword `[pos, pos + len)`.
    ReduceRange { pos: u64, len: u64 },
}

impl Step {
    pub fn shifted(self, off: u64) -> Step {
        match self {
            Step::Relator {
                id,
                pos,
                orient,
                rot,
                len,
            } => Step::Relator {
                id,
                pos: pos + off,
                orient,
                rot,
                len,
            },
            Step::Reduce => Step::Reduce,
            Step::ReduceRange { pos, len } => Step::ReduceRange { pos: pos + off, len },
        }
    }

    /// The same step acting on the inverse of a word of length `word_len`,
    /// for a relator of length `rel_len`.
    pub fn mirrored(self, word_len: u64, rel_len: u64) -> Step {
        match self {
            Step::Relator {
                id,
                pos,
                orient,
                rot,
                len,
            } => Step::Relator {
                id,
                pos: word_len - pos - len,
                orient: orient.flip(),
                rot: (2 * rel_len - rot - len) % rel_len,
                len,
            },
            Step::Reduce => Step::Reduce,
            Step::ReduceRange { pos, len } => Step::ReduceRange {
                pos: word_len - pos - len,
                len,
            },
        }
    }

    fn text(&self, idx: usize) -> String {
        match self {
            Step::Relator {
                id,
                pos,
                orient,
                rot,
                len,
            } => format!("step {idx} relator {id} pos {pos} orient {orient} rot {rot} len {len}"),
            Step::Reduce => format!("step {idx} reduce"),
            Step::ReduceRange { pos, len } => format!("step {idx} reduce pos {pos} len {len}"),
        }
    }
}

/// Start word, steps, and claimed end word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Derivation {
    pub start: Word,
    pub steps: Vec<Step>,
    pub end: Word,
}

impl Derivation {
    pub fn empty(w: Word) -> Derivation {
        Derivation {
            start: w.clone(),
            steps: Vec::new(),
            end: w,
        }
    }

    /// `self` followed by `other`; the end of `self` must be the start of
    /// `other`.
    pub fn compose(&self, other: &Derivation) -> Result<Derivation> {
        if self.end != other.start {
            return Err(Error::Precondition(
                "derivations do not meet: end and start differ".into(),
            ));
        }
        let mut steps = self.steps.clone();
        steps.extend_from_slice(&other.steps);
        Ok(Derivation {
            start: self.start.clone(),
            steps,
            end: other.end.clone(),
        })
    }

    pub fn to_text(&self, alpha: &Alphabet) -> String {
        let mut out = String::new();
        out.push_str(&format!("start {}\n", self.start.to_text(alpha)));
        for (i, s) in self.steps.iter().enumerate() {
            out.push_str(&s.text(i));
            out.push('\n');
        }
        out.push_str(&format!("end {}\n", self.end.to_text(alpha)));
        out
    }

    pub fn parse(alpha: &Alphabet, text: &str) -> Result<Derivation> {
        let mut start = None;
        let mut end = None;
        let mut steps = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line_no = ln + 1;
            let line = line.trim_end();
            if line.trim().is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("start") {
                start = Some(Word::parse_at(alpha, rest, line_no, 6)?);
                continue;
            }
            if let Some(rest) = line.strip_prefix("end") {
                end = Some(Word::parse_at(alpha, rest, line_no, 4)?);
                continue;
            }
            let tok: Vec<&str> = line.split_whitespace().collect();
            if tok.len() < 3 || tok[0] != "step" {
                return Err(Error::parse(line_no, 1, "expected 'step', 'start' or 'end'"));
            }
            let idx: usize = tok[1]
                .parse()
                .map_err(|_| Error::parse(line_no, 6, "bad step index"))?;
            if idx != steps.len() {
                return Err(Error::parse(line_no, 6, format!("step index {idx} out of order")));
            }
            let num = |k: usize| -> Result<u64> {
                tok.get(k)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::parse(line_no, 1, format!("missing number in field {k}")))
            };
            let key = |k: usize, want: &str| -> Result<()> {
                if tok.get(k) == Some(&want) {
                    Ok(())
                } else {
                    Err(Error::parse(line_no, 1, format!("expected '{want}'")))
                }
            };
            let step = match tok[2] {
                "reduce" if tok.len() == 3 => Step::Reduce,
                "reduce" => {
                    key(3, "pos")?;
                    key(5, "len")?;
                    Step::ReduceRange {
                        pos: num(4)?,
                        len: num(6)?,
                    }
                }
                "relator" => {
                    let id: RelatorId = tok
                        .get(3)
                        .ok_or_else(|| Error::parse(line_no, 1, "missing relator id"))?
                        .parse()
                        .map_err(|e: String| Error::parse(line_no, 14, e))?;
                    key(4, "pos")?;
                    key(6, "orient")?;
                    key(8, "rot")?;
                    key(10, "len")?;
                    let orient = match tok.get(7) {
                        Some(&"fwd") => Orient::Fwd,
                        Some(&"rev") => Orient::Rev,
                        _ => return Err(Error::parse(line_no, 1, "orient must be fwd or rev")),
                    };
                    Step::Relator {
                        id,
                        pos: num(5)?,
                        orient,
                        rot: num(9)?,
                        len: num(11)?,
                    }
                }
                other => return Err(Error::parse(line_no, 1, format!("unknown step kind '{other}'"))),
            };
            steps.push(step);
        }
        Ok(Derivation {
            start: start.ok_or_else(|| Error::parse(1, 1, "missing start line"))?,
            steps,
            end: end.ok_or_else(|| Error::parse(1, 1, "missing end line"))?,
        })
    }
}

/// A letter buffer with a movable gap, so that edits near the previous edit
/// are cheap.
#[derive(Clone, Debug)]
pub struct GapBuffer {
    buf: Vec<Letter>,
    gap_start: usize,
    gap_end: usize,
}

const FILL: Letter = Letter::FILL;

impl GapBuffer {
    pub fn new(letters: Vec<Letter>) -> Self {
        let n = letters.len();
        let mut buf = letters;
        let extra = 1024.max(n / 8);
        buf.resize(n + extra, FILL);
        GapBuffer {
            buf,
            gap_start: n,
            gap_end: n + extra,
        }
    }

    pub fn len(&self) -> usize {
        self.buf.len() - (self.gap_end - self.gap_start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn gap(&self) -> usize {
        self.gap_end - self.gap_start
    }

    fn move_gap(&mut self, pos: usize) {
        if pos < self.gap_start {
            let k = self.gap_start - pos;
            self.buf.copy_within(pos..self.gap_start, self.gap_end - k);
            self.gap_start = pos;
            self.gap_end -= k;
        } else if pos > self.gap_start {
            let k = pos - self.gap_start;
            self.buf.copy_within(self.gap_end..self.gap_end + k, self.gap_start);
            self.gap_start += k;
            self.gap_end += k;
        }
    }

    fn ensure_gap(&mut self, need: usize) {
        if self.gap() >= need {
            return;
        }
        let grow = need.max(self.buf.len() / 2) + 1024;
        let tail = self.buf.len() - self.gap_end;
        let old_len = self.buf.len();
        self.buf.resize(old_len + grow, FILL);
        self.buf.copy_within(self.gap_end..old_len, self.gap_end + grow);
        self.gap_end += grow;
        debug_assert_eq!(self.buf.len() - self.gap_end, tail);
    }

    pub fn get(&self, i: usize) -> Letter {
        if i < self.gap_start {
            self.buf[i]
        } else {
            self.buf[i + self.gap()]
        }
    }

    pub fn range(&self, pos: usize, len: usize) -> Vec<Letter> {
        (pos..pos + len).map(|i| self.get(i)).collect()
    }

    pub fn matches(&self, pos: usize, s: &[Letter]) -> bool {
        pos + s.len() <= self.len() && s.iter().enumerate().all(|(k, &l)| self.get(pos + k) == l)
    }

    /// Replaces `[pos, pos + len)` with `t`.
    pub fn replace(&mut self, pos: usize, len: usize, t: &[Letter]) {
        self.move_gap(pos + len);
        self.gap_start = pos;
        self.ensure_gap(t.len());
        self.buf[self.gap_start..self.gap_start + t.len()].copy_from_slice(t);
        self.gap_start += t.len();
    }

    pub fn to_vec(&self) -> Vec<Letter> {
        let mut v = Vec::with_capacity(self.len());
        v.extend_from_slice(&self.buf[..self.gap_start]);
        v.extend_from_slice(&self.buf[self.gap_end..]);
        v
    }
}

/// Relator words in both orientations, as plain letters.
#[derive(Clone, Debug)]
pub struct RelatorTable {
    words: HashMap<(RelatorId, Orient), Vec<Letter>>,
}

impl RelatorTable {
    pub fn new(pres: &Presentation) -> Self {
        let mut words = HashMap::new();
        for r in &pres.relators {
            let c = r.cyclic();
            words.insert((r.id, Orient::Fwd), c.to_vec());
            words.insert((r.id, Orient::Rev), c.inverse().to_vec());
        }
        RelatorTable { words }
    }

    pub fn word(&self, id: RelatorId, orient: Orient) -> Result<&[Letter]> {
        self.words
            .get(&(id, orient))
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::Precondition(format!("relator {id} not in presentation")))
    }

    pub fn rel_len(&self, id: RelatorId) -> Result<u64> {
        Ok(self.word(id, Orient::Fwd)?.len() as u64)
    }

    /// `(S, T)` for a relator step.
    pub fn sides(&self, id: RelatorId, orient: Orient, rot: u64, len: u64) -> Result<(Vec<Letter>, Vec<Letter>)> {
        let w = self.word(id, orient)?;
        let n = w.len();
        if rot as usize >= n || len as usize > n {
            return Err(Error::Precondition(format!(
                "rotation {rot} or length {len} out of range for relator {id} of length {n}"
            )));
        }
        let rotated = (0..n).map(|i| w[(rot as usize + i) % n]);
        let all: Vec<Letter> = rotated.collect();
        let s = all[..len as usize].to_vec();
        let t: Vec<Letter> = all[len as usize..].iter().rev().map(|l| l.inv()).collect();
        Ok((s, t))
    }

    /// Finds `(orient, rot)` with `rotate(orient(R), rot) = s · t^-1`.
    pub fn locate(&self, id: RelatorId, s: &[Letter], t: &[Letter]) -> Result<(Orient, u64)> {
        let mut target: Vec<Letter> = s.to_vec();
        target.extend(t.iter().rev().map(|l| l.inv()));
        for orient in [Orient::Fwd, Orient::Rev] {
            let w = self.word(id, orient)?;
            let n = w.len();
            if n != target.len() {
                continue;
            }
            for rot in 0..n {
                if w[rot] == target[0] && (0..n).all(|i| w[(rot + i) % n] == target[i]) {
                    return Ok((orient, rot as u64));
                }
            }
        }
        Err(Error::TemplateMismatch(format!(
            "no rotation of relator {id} splits as the requested rewrite"
        )))
    }
}

/// A word under rewriting, recording every step it accepts.
pub struct Machine<'a> {
    table: &'a RelatorTable,
    buf: GapBuffer,
    pub steps: Vec<Step>,
    /// Word length before each recorded step.
    pub lens: Vec<u64>,
}

impl<'a> Machine<'a> {
    pub fn new(table: &'a RelatorTable, start: &Word) -> Self {
        Machine {
            table,
            buf: GapBuffer::new(start.to_vec()),
            steps: Vec::new(),
            lens: Vec::new(),
        }
    }

    pub fn len(&self) -> u64 {
        self.buf.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn word(&self) -> Word {
        Word::from_letters(self.buf.to_vec())
    }

    pub fn letters(&self) -> Vec<Letter> {
        self.buf.to_vec()
    }

    pub fn get(&self, i: u64) -> Letter {
        self.buf.get(i as usize)
    }

    pub fn range(&self, pos: u64, len: u64) -> Vec<Letter> {
        self.buf.range(pos as usize, len as usize)
    }

    /// Applies and records `step`; `idx` only labels errors.
    pub fn apply(&mut self, step: Step) -> Result<()> {
        let idx = self.steps.len();
        let before = self.len();
        apply_to_buffer(self.table, &mut self.buf, step, idx)?;
        self.steps.push(step);
        self.lens.push(before);
        Ok(())
    }

    /// Relator step located from the rewrite `s -> t` at `pos`.
    pub fn rewrite(&mut self, id: RelatorId, pos: u64, s: &[Letter], t: &[Letter]) -> Result<()> {
        let (orient, rot) = self.table.locate(id, s, t)?;
        self.apply(Step::Relator {
            id,
            pos,
            orient,
            rot,
            len: s.len() as u64,
        })
    }

    /// Reduces `[pos, pos + len)` and returns the new length of that range.
    pub fn reduce_range(&mut self, pos: u64, len: u64) -> Result<u64> {
        let before = self.len();
        self.apply(Step::ReduceRange { pos, len })?;
        Ok(len - (before - self.len()))
    }
}

fn apply_to_buffer(table: &RelatorTable, buf: &mut GapBuffer, step: Step, idx: usize) -> Result<()> {
    let mismatch = |msg: String| Error::StepMismatch { step: idx, msg };
    match step {
        Step::Relator {
            id,
            pos,
            orient,
            rot,
            len,
        } => {
            let (s, t) = table
                .sides(id, orient, rot, len)
                .map_err(|e| mismatch(e.to_string()))?;
            if !buf.matches(pos as usize, &s) {
                return Err(mismatch(format!(
                    "relator {id} side of length {len} does not occur at position {pos}"
                )));
            }
            buf.replace(pos as usize, s.len(), &t);
        }
        Step::Reduce => {
            let mut v = buf.to_vec();
            reduce_letters(&mut v);
            *buf = GapBuffer::new(v);
        }
        Step::ReduceRange { pos, len } => {
            if (pos + len) as usize > buf.len() {
                return Err(mismatch(format!("reduce range {pos}+{len} exceeds word length")));
            }
            let mut v = buf.range(pos as usize, len as usize);
            reduce_letters(&mut v);
            buf.replace(pos as usize, len as usize, &v);
        }
    }
    Ok(())
}

/// Replays `d` from its start word; succeeds iff every step matches and the
/// end word is reached exactly.
pub fn replay_derivation(table: &RelatorTable, d: &Derivation) -> Result<()> {
    let mut buf = GapBuffer::new(d.start.to_vec());
    for (i, &s) in d.steps.iter().enumerate() {
        apply_to_buffer(table, &mut buf, s, i)?;
    }
    if buf.to_vec() != d.end.to_vec() {
        return Err(Error::StepMismatch {
            step: d.steps.len(),
            msg: "replay finished on a word different from the claimed end".into(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presentation::build_presentation;

    #[test]
    fn gap_buffer_edits() {
        let a = Alphabet::new(2).unwrap();
        let w = Word::parse(&a, "a1 a2 b0 b1 b2").unwrap().to_vec();
        let mut g = GapBuffer::new(w.clone());
        g.replace(1, 2, &[w[4], w[4], w[4]]);
        assert_eq!(Word::from_letters(g.to_vec()).to_text(&a), "a1 b2^3 b1 b2");
        g.replace(0, 1, &[]);
        assert_eq!(g.len(), 5);
        assert!(g.matches(3, &[w[3], w[4]]));
    }

    #[test]
    fn single_r3_step() {
        let pres = build_presentation(2, 1, 1).unwrap();
        let table = RelatorTable::new(&pres);
        let a = &pres.alphabet;
        let start = Word::parse(a, "b0^-1 t b0").unwrap();
        let r = pres.relator(RelatorId::R3(0));
        let mut m = Machine::new(&table, &start);
        m.rewrite(RelatorId::R3(0), 0, &start.to_vec(), &r.rhs.to_vec()).unwrap();
        assert_eq!(m.word(), r.rhs);
        let d = Derivation {
            start,
            steps: m.steps.clone(),
            end: m.word(),
        };
        replay_derivation(&table, &d).unwrap();
        let text = d.to_text(a);
        assert_eq!(Derivation::parse(a, &text).unwrap(), d);
    }
}
