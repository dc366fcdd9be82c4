//! Small-cancellation checks: exact piece enumeration over a suffix array
//! of all cyclic conjugates, and an analytic bound for run-length encoded
//! word sets whose long runs are pairwise distinct.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::presentation::{derive_hnn_data, Presentation};
use crate::words::{cyclic_runs, primitive_period, CyclicWord, Letter, Run, Word};

/// Default letter budget for brute-force enumeration.
pub const DEFAULT_BRUTE_BUDGET: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Brute,
    Analytic,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Brute => "brute",
            Mode::Analytic => "analytic",
        })
    }
}

/// A conjugate: rotation `rot` of class `class`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConjRef {
    pub class: usize,
    pub rot: usize,
}

/// One distinct cyclic word of `S ∪ S^-1`.
#[derive(Clone, Debug)]
pub struct ClassInfo {
    /// Index of the input word it came from.
    pub source: usize,
    pub inverted: bool,
    pub letters: Vec<Letter>,
    pub period: usize,
}

#[derive(Clone, Debug)]
pub struct PieceIndex {
    pub classes: Vec<ClassInfo>,
    /// `reach[c][r]`: longest piece that is a prefix of rotation `r` of class `c`.
    pub reach: Vec<Vec<u32>>,
    pub max_piece: u64,
    pub witness: Option<(ConjRef, ConjRef)>,
    pub min_word: u64,
}

/// Suffix array by prefix doubling with counting sorts.
pub fn suffix_array(s: &[u32]) -> Vec<u32> {
    let n = s.len();
    if n == 0 {
        return Vec::new();
    }
    let mut sa: Vec<u32> = (0..n as u32).collect();
    sa.sort_unstable_by_key(|&i| s[i as usize]);
    let mut rank = vec![0u32; n];
    for i in 1..n {
        let (a, b) = (sa[i - 1] as usize, sa[i] as usize);
        rank[b] = rank[a] + (s[a] != s[b]) as u32;
    }
    let mut tmp = vec![0u32; n];
    let mut sa2 = vec![0u32; n];
    let mut cnt = vec![0u32; n + 1];
    let mut k = 1usize;
    while (rank[sa[n - 1] as usize] as usize) < n - 1 {
        let mut p = 0;
        for i in n.saturating_sub(k)..n {
            sa2[p] = i as u32;
            p += 1;
        }
        for &i in &sa {
            if i as usize >= k {
                sa2[p] = i - k as u32;
                p += 1;
            }
        }
        cnt.iter_mut().for_each(|c| *c = 0);
        for &r in &rank {
            cnt[r as usize + 1] += 1;
        }
        for i in 1..=n {
            cnt[i] += cnt[i - 1];
        }
        for &x in &sa2 {
            let r = rank[x as usize] as usize;
            sa[cnt[r] as usize] = x;
            cnt[r] += 1;
        }
        let second = |i: usize| -> i64 {
            if i + k < n {
                rank[i + k] as i64
            } else {
                -1
            }
        };
        tmp[sa[0] as usize] = 0;
        for i in 1..n {
            let (a, b) = (sa[i - 1] as usize, sa[i] as usize);
            let same = rank[a] == rank[b] && second(a) == second(b);
            tmp[b] = tmp[a] + (!same) as u32;
        }
        std::mem::swap(&mut rank, &mut tmp);
        k *= 2;
    }
    sa
}

/// Kasai: `lcp[i]` is the common prefix of suffixes `sa[i-1]` and `sa[i]`.
pub fn lcp_array(s: &[u32], sa: &[u32]) -> Vec<u32> {
    let n = s.len();
    let mut rank = vec![0u32; n];
    for (i, &x) in sa.iter().enumerate() {
        rank[x as usize] = i as u32;
    }
    let mut lcp = vec![0u32; n];
    let mut h = 0usize;
    for i in 0..n {
        let r = rank[i] as usize;
        if r > 0 {
            let j = sa[r - 1] as usize;
            while i + h < n && j + h < n && s[i + h] == s[j + h] {
                h += 1;
            }
            lcp[r] = h as u32;
            h = h.saturating_sub(1);
        } else {
            h = 0;
        }
    }
    lcp
}

fn check_cyclically_reduced(words: &[Word]) -> Result<()> {
    for (i, w) in words.iter().enumerate() {
        if w.is_empty() || !w.is_cyclically_reduced() {
            return Err(Error::Precondition(format!(
                "word {i} is empty or not cyclically reduced"
            )));
        }
    }
    Ok(())
}

fn total_letters(words: &[Word]) -> u64 {
    words.iter().map(|w| w.len_u64()).sum()
}

impl PieceIndex {
    /// Exact longest-piece table for the cyclic conjugates of `words` and
    /// their inverses.
    pub fn build(words: &[Word], budget: u64) -> Result<PieceIndex> {
        check_cyclically_reduced(words)?;
        let total = total_letters(words);
        if total > budget {
            return Err(Error::Budget {
                needed: total.to_string(),
                budget,
            });
        }
        let mut seen: HashMap<Word, usize> = HashMap::new();
        let mut classes = Vec::new();
        for (i, w) in words.iter().enumerate() {
            for inverted in [false, true] {
                let base = if inverted { w.inverse() } else { w.clone() };
                let canon = CyclicWord::new(&base).canonical();
                if seen.contains_key(&canon) {
                    continue;
                }
                seen.insert(canon.clone(), classes.len());
                let letters = canon.to_vec();
                let period = primitive_period(&letters);
                classes.push(ClassInfo {
                    source: i,
                    inverted,
                    letters,
                    period,
                });
            }
        }
        // text: c c 0 for every class
        let mut text: Vec<u32> = Vec::new();
        let mut owner: Vec<u32> = Vec::new();
        let mut rot_of: Vec<u32> = Vec::new();
        for (ci, c) in classes.iter().enumerate() {
            for copy in 0..2 {
                for (r, l) in c.letters.iter().enumerate() {
                    text.push(l.key() + 1);
                    let valid = copy == 0 && r < c.period;
                    owner.push(if valid { ci as u32 } else { u32::MAX });
                    rot_of.push(r as u32);
                }
            }
            text.push(0);
            owner.push(u32::MAX);
            rot_of.push(0);
        }
        let sa = suffix_array(&text);
        let lcp = lcp_array(&text, &sa);
        let lens: Vec<u32> = classes.iter().map(|c| c.letters.len() as u32).collect();
        let mut reach: Vec<Vec<u32>> = classes.iter().map(|c| vec![0u32; c.period]).collect();
        let mut partner: Vec<Vec<u32>> = classes.iter().map(|c| vec![u32::MAX; c.period]).collect();
        let n = sa.len();
        for i in 0..n {
            let me = sa[i] as usize;
            let c = owner[me];
            if c == u32::MAX {
                continue;
            }
            let my_len = lens[c as usize];
            let mut best = 0u32;
            let mut best_pos = u32::MAX;
            // upward
            let mut run = u32::MAX;
            let mut j = i;
            while j > 0 {
                run = run.min(lcp[j]);
                j -= 1;
                if run <= best {
                    break;
                }
                let other = sa[j] as usize;
                let oc = owner[other];
                if oc != u32::MAX {
                    let cand = run.min(my_len).min(lens[oc as usize]);
                    if cand > best {
                        best = cand;
                        best_pos = other as u32;
                    }
                }
            }
            run = u32::MAX;
            j = i;
            while j + 1 < n {
                j += 1;
                run = run.min(lcp[j]);
                if run <= best {
                    break;
                }
                let other = sa[j] as usize;
                let oc = owner[other];
                if oc != u32::MAX {
                    let cand = run.min(my_len).min(lens[oc as usize]);
                    if cand > best {
                        best = cand;
                        best_pos = other as u32;
                    }
                }
            }
            let r = rot_of[me] as usize;
            reach[c as usize][r] = best;
            partner[c as usize][r] = best_pos;
        }
        let mut max_piece = 0u64;
        let mut witness = None;
        for (ci, rs) in reach.iter().enumerate() {
            for (r, &v) in rs.iter().enumerate() {
                if v as u64 > max_piece {
                    max_piece = v as u64;
                    let pos = partner[ci][r] as usize;
                    witness = Some((
                        ConjRef { class: ci, rot: r },
                        ConjRef {
                            class: owner[pos] as usize,
                            rot: rot_of[pos] as usize,
                        },
                    ));
                }
            }
        }
        let min_word = words.iter().map(|w| w.len_u64()).min().unwrap_or(0);
        Ok(PieceIndex {
            classes,
            reach,
            max_piece,
            witness,
            min_word,
        })
    }

    /// Letters of a conjugate.
    pub fn conjugate(&self, r: ConjRef) -> Vec<Letter> {
        let c = &self.classes[r.class].letters;
        c[r.rot..].iter().chain(&c[..r.rot]).copied().collect()
    }

    /// Re-checks the witness pair: distinct conjugates sharing a prefix of
    /// length `max_piece`.
    pub fn verify_witness(&self) -> bool {
        match self.witness {
            None => self.max_piece == 0,
            Some((a, b)) => {
                let (x, y) = (self.conjugate(a), self.conjugate(b));
                let m = self.max_piece as usize;
                x != y && x.len() >= m && y.len() >= m && x[..m] == y[..m]
            }
        }
    }

    pub fn reach_at(&self, class: usize, rot: usize) -> u32 {
        let c = &self.reach[class];
        c[rot % c.len()]
    }

    /// Minimum over all conjugates of the number of pieces needed to spell
    /// it; `None` stands for infinity.
    pub fn min_piece_decomposition(&self) -> Option<u64> {
        let mut best: Option<u64> = None;
        for ci in 0..self.classes.len() {
            match self.class_min_pieces(ci) {
                None => {}
                Some(v) => best = Some(best.map_or(v, |b| b.min(v))),
            }
        }
        best
    }

    /// Per-class minimum over starting rotations; `None` if some letter lies
    /// in no piece.
    pub fn class_min_pieces(&self, ci: usize) -> Option<u64> {
        let l = self.classes[ci].letters.len();
        if (0..self.reach[ci].len()).any(|r| self.reach[ci][r] == 0) {
            return None;
        }
        // next[i] = i + reach(i) over positions 0..2l, clamped at 2l
        let size = 2 * l + 1;
        let mut levels: Vec<Vec<u32>> = Vec::new();
        let base: Vec<u32> = (0..size)
            .map(|i| {
                if i >= 2 * l {
                    (2 * l) as u32
                } else {
                    (i + self.reach_at(ci, i % l) as usize).min(2 * l) as u32
                }
            })
            .collect();
        levels.push(base);
        while (1usize << levels.len()) <= l {
            let prev = levels.last().unwrap();
            let next: Vec<u32> = (0..size).map(|i| prev[prev[i] as usize]).collect();
            levels.push(next);
        }
        let mut best = u64::MAX;
        for start in 0..self.classes[ci].period {
            let target = start + l;
            let mut pos = start;
            let mut steps = 0u64;
            for lv in (0..levels.len()).rev() {
                let nxt = levels[lv][pos] as usize;
                if nxt < target {
                    pos = nxt;
                    steps += 1 << lv;
                }
            }
            steps += 1;
            best = best.min(steps);
        }
        Some(best)
    }

    /// Every conjugate `E` satisfies `den · maxpiece(E) < num · |E|`.
    fn nonuniform_holds(&self, num: u64, den: u64) -> bool {
        self.classes.iter().enumerate().all(|(ci, c)| {
            let len = c.letters.len() as u64;
            self.reach[ci].iter().all(|&r| den * (r as u64) < num * len)
        })
    }
}

/// Verdict of one small-cancellation condition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConditionReport {
    pub name: String,
    pub holds: bool,
    /// Exact maximum piece (brute) or certified upper bound (analytic).
    pub max_piece: u64,
    pub min_word: u64,
    /// Minimum number of pieces per conjugate, for `C(k)` conditions.
    pub min_pieces: Option<Option<u64>>,
    pub mode: Mode,
}

impl ConditionReport {
    pub fn line(&self) -> String {
        let mut s = format!(
            "condition={} verdict={} max_piece={} min_word={} mode={}",
            self.name,
            if self.holds { "holds" } else { "fails" },
            self.max_piece,
            self.min_word,
            self.mode
        );
        if let Some(mp) = self.min_pieces {
            match mp {
                Some(v) => s.push_str(&format!(" min_pieces={v}")),
                None => s.push_str(" min_pieces=inf"),
            }
        }
        s
    }
}

/// `C'(num/den)`: uniform compares against the shortest word, otherwise each
/// conjugate against its own length.
pub fn check_c_prime(index: &PieceIndex, num: u64, den: u64, uniform: bool, name: &str) -> ConditionReport {
    let holds = if uniform {
        den * index.max_piece < num * index.min_word
    } else {
        index.nonuniform_holds(num, den)
    };
    ConditionReport {
        name: name.to_string(),
        holds,
        max_piece: index.max_piece,
        min_word: index.min_word,
        min_pieces: None,
        mode: Mode::Brute,
    }
}

/// `C(k)`: every conjugate needs at least `k` pieces.
pub fn check_c_k(index: &PieceIndex, k: u64, name: &str) -> ConditionReport {
    let mp = index.min_piece_decomposition();
    ConditionReport {
        name: name.to_string(),
        holds: mp.is_none_or(|v| v >= k),
        max_piece: index.max_piece,
        min_word: index.min_word,
        min_pieces: Some(mp),
        mode: Mode::Brute,
    }
}

/// Run-structure data behind the analytic piece bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnalyticBound {
    /// Longest run of length at least two.
    pub alpha_max: u64,
    /// Longest maximal stretch between long runs that occurs at least twice
    /// in `S ∪ S^-1`.
    pub m_rep: u64,
    /// Longest such stretch overall.
    pub m_all: u64,
    /// Certified upper bound on piece length.
    pub piece_ub: u64,
    pub min_word: u64,
}

/// Maximal stretches of short runs between long runs, as letter vectors.
fn segments(runs: &[Run]) -> Vec<Vec<Letter>> {
    let n = runs.len();
    let first_long = match runs.iter().position(|r| r.len >= 2) {
        Some(i) => i,
        None => {
            let all: Vec<Letter> = runs.iter().map(|r| r.letter).collect();
            return vec![all];
        }
    };
    let mut out = Vec::new();
    let mut cur: Vec<Letter> = Vec::new();
    for k in 1..=n {
        let r = runs[(first_long + k) % n];
        if r.len >= 2 {
            out.push(std::mem::take(&mut cur));
        } else {
            cur.push(r.letter);
        }
    }
    out
}

/// Analytic piece bound for a set whose long runs are pairwise distinct as
/// `(letter, length)` across the whole set.
pub fn analytic_piece_bound(words: &[Word]) -> Result<AnalyticBound> {
    check_cyclically_reduced(words)?;
    let mut long_runs: HashMap<(Letter, u64), usize> = HashMap::new();
    let mut seg_count: HashMap<Vec<Letter>, u32> = HashMap::new();
    let mut alpha_max = 0u64;
    let mut m_all = 0u64;
    for (i, w) in words.iter().enumerate() {
        let runs = cyclic_runs(w);
        for r in &runs {
            if r.len >= 2 {
                if let Some(prev) = long_runs.insert((r.letter, r.len), i) {
                    return Err(Error::Precondition(format!(
                        "run of length {} repeated in words {prev} and {i}",
                        r.len
                    )));
                }
                alpha_max = alpha_max.max(r.len);
            }
        }
        for s in segments(&runs) {
            m_all = m_all.max(s.len() as u64);
            let inv: Vec<Letter> = s.iter().rev().map(|l| l.inv()).collect();
            *seg_count.entry(s).or_default() += 1;
            *seg_count.entry(inv).or_default() += 1;
        }
    }
    let m_rep = seg_count
        .iter()
        .filter(|(_, &c)| c >= 2)
        .map(|(s, _)| s.len() as u64)
        .max()
        .unwrap_or(0);
    let a = alpha_max;
    let piece_ub = [
        2 * a + 2,
        (2 * a.saturating_sub(1)) + m_rep,
        a + m_all,
        m_all + 2,
    ]
    .into_iter()
    .max()
    .unwrap();
    Ok(AnalyticBound {
        alpha_max,
        m_rep,
        m_all,
        piece_ub,
        min_word: words.iter().map(|w| w.len_u64()).min().unwrap_or(0),
    })
}

/// Per-word analytic `C'(num/den)`: a piece inside a conjugate of `w` spans
/// at most two partial long runs of `w` and one stretch between them.
pub fn analytic_c_prime_nonuniform(words: &[Word], num: u64, den: u64, name: &str) -> Result<ConditionReport> {
    let global = analytic_piece_bound(words)?;
    let mut holds = true;
    let mut worst = 0u64;
    for w in words {
        let runs = cyclic_runs(w);
        let e_max = runs.iter().filter(|r| r.len >= 2).map(|r| r.len).max().unwrap_or(0);
        let seg = segments(&runs).iter().map(|s| s.len() as u64).max().unwrap_or(0);
        let ub = 2 * e_max + seg.max(2);
        worst = worst.max(ub);
        if den * ub >= num * w.len_u64() {
            holds = false;
        }
    }
    Ok(ConditionReport {
        name: name.to_string(),
        holds,
        max_piece: worst,
        min_word: global.min_word,
        min_pieces: None,
        mode: Mode::Analytic,
    })
}

pub fn analytic_c_prime_uniform(words: &[Word], num: u64, den: u64, name: &str) -> Result<ConditionReport> {
    let b = analytic_piece_bound(words)?;
    Ok(ConditionReport {
        name: name.to_string(),
        holds: den * b.piece_ub < num * b.min_word,
        max_piece: b.piece_ub,
        min_word: b.min_word,
        min_pieces: None,
        mode: Mode::Analytic,
    })
}

/// `C(k)` is certified when even `k-1` maximal pieces are shorter than the
/// shortest word.
pub fn analytic_c_k(words: &[Word], k: u64, name: &str) -> Result<ConditionReport> {
    let b = analytic_piece_bound(words)?;
    let holds = b.min_word > (k - 1) * b.piece_ub;
    Ok(ConditionReport {
        name: name.to_string(),
        holds,
        max_piece: b.piece_ub,
        min_word: b.min_word,
        min_pieces: Some(if b.piece_ub == 0 {
            None
        } else {
            Some(b.min_word.div_ceil(b.piece_ub))
        }),
        mode: Mode::Analytic,
    })
}

/// Names of the four conditions in report lines.
pub const COND_R: &str = "C'(1/6):R";
pub const COND_S: &str = "C(3):S";
pub const COND_XY: &str = "C'(1/4):XY";
pub const COND_U: &str = "C(5):U";

/// The four word sets the conditions are stated for.
pub struct ConditionSets {
    pub relators: Vec<Word>,
    pub s_set: Vec<Word>,
    pub rips: Vec<Word>,
    pub u_set: Vec<Word>,
}

pub fn condition_sets(pres: &Presentation) -> Result<ConditionSets> {
    let hnn = derive_hnn_data(pres)?;
    let rips: Vec<Word> = pres
        .rips
        .x_words
        .iter()
        .chain(&pres.rips.y_words)
        .cloned()
        .collect();
    Ok(ConditionSets {
        relators: pres.relator_words(),
        s_set: hnn.s_set.iter().map(|w| w.cyclic_core().1).collect(),
        rips,
        u_set: hnn.u_set.iter().map(|w| w.cyclic_core().1).collect(),
    })
}

/// Full report for one presentation.
#[derive(Clone, Debug)]
pub struct ScReport {
    pub conditions: Vec<ConditionReport>,
    /// Analytic mode extras: bound on the relators and the quoted reference figures.
    pub relator_bound: Option<AnalyticBound>,
    pub x_side_bound: Option<u64>,
    pub y_side_bound: Option<u64>,
    pub quoted_piece_figure: u64,
    pub quoted_length_figure: u64,
}

impl ScReport {
    pub fn all_hold(&self) -> bool {
        self.conditions.iter().all(|c| c.holds)
    }

    pub fn lines(&self) -> Vec<String> {
        let mut out: Vec<String> = self.conditions.iter().map(|c| c.line()).collect();
        if let Some(b) = &self.relator_bound {
            out.push(format!(
                "analytic alpha_max={} piece_ub={} x_side_2a+2={} y_side_2a+2={} min_relator={} quoted_piece_figure={} quoted_min_relator_figure={}",
                b.alpha_max,
                b.piece_ub,
                self.x_side_bound.unwrap_or(0),
                self.y_side_bound.unwrap_or(0),
                b.min_word,
                self.quoted_piece_figure,
                self.quoted_length_figure
            ));
        }
        out
    }
}

fn quoted_figures(p: u32) -> (u64, u64) {
    (12_400 * p as u64, 80_000 * (p as u64) * (p as u64))
}

/// All four conditions by exact enumeration.
pub fn brute_report(pres: &Presentation, budget: u64) -> Result<ScReport> {
    let sets = condition_sets(pres)?;
    let ir = PieceIndex::build(&sets.relators, budget)?;
    let is = PieceIndex::build(&sets.s_set, budget)?;
    let ix = PieceIndex::build(&sets.rips, budget)?;
    let iu = PieceIndex::build(&sets.u_set, budget)?;
    let (pf, lf) = quoted_figures(pres.p());
    Ok(ScReport {
        conditions: vec![
            check_c_prime(&ir, 1, 6, true, COND_R),
            check_c_k(&is, 3, COND_S),
            check_c_prime(&ix, 1, 4, false, COND_XY),
            check_c_k(&iu, 5, COND_U),
        ],
        relator_bound: None,
        x_side_bound: None,
        y_side_bound: None,
        quoted_piece_figure: pf,
        quoted_length_figure: lf,
    })
}

/// All four conditions from the run structure alone.
pub fn analytic_rips_margins(pres: &Presentation) -> Result<ScReport> {
    let sets = condition_sets(pres)?;
    let rb = analytic_piece_bound(&sets.relators)?;
    let (pf, lf) = quoted_figures(pres.p());
    Ok(ScReport {
        conditions: vec![
            analytic_c_prime_uniform(&sets.relators, 1, 6, COND_R)?,
            analytic_c_k(&sets.s_set, 3, COND_S)?,
            analytic_c_prime_nonuniform(&sets.rips, 1, 4, COND_XY)?,
            analytic_c_k(&sets.u_set, 5, COND_U)?,
        ],
        relator_bound: Some(rb),
        x_side_bound: Some(2 * pres.rips.x_alpha_max() + 2),
        y_side_bound: Some(2 * pres.rips.y_alpha_max() + 2),
        quoted_piece_figure: pf,
        quoted_length_figure: lf,
    })
}
