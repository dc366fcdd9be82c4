//! Stallings folding with generator readback, and Britton reduction for the
//! HNN structure `t^-1 u_r t = v_r`.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::presentation::{HnnData, Presentation};
use crate::words::{reduce_letters, Alphabet, GenId, Letter, Word};

/// A word in the subgroup generators: `±(index+1)` per letter.
pub type GenWord = Vec<i32>;

fn push_reduced(w: &mut GenWord, g: i32) {
    if w.last() == Some(&-g) {
        w.pop();
    } else {
        w.push(g);
    }
}

fn gen_mul(a: &[i32], b: &[i32]) -> GenWord {
    let mut out = a.to_vec();
    for &g in b {
        push_reduced(&mut out, g);
    }
    out
}

fn gen_inv(a: &[i32]) -> GenWord {
    a.iter().rev().map(|g| -g).collect()
}

#[derive(Clone, Debug)]
struct Edge {
    from: u32,
    to: u32,
    letter: Letter,
    label: GenWord,
    alive: bool,
}

/// A folded graph of a finitely generated subgroup of the free group.
///
/// Every edge carries a subgroup-generator label such that reading a closed
/// path at the base multiplies out to the element read, which is what lets
/// membership queries return an expression in the generators.
#[derive(Clone, Debug)]
pub struct SubgroupGraph {
    pub generators: Vec<Word>,
    pub states: u32,
    pub base: u32,
    edges: Vec<Edge>,
    /// Parallel same-letter edges with different labels met while folding.
    pub conflicts: usize,
    index: HashMap<(u32, i32), (u32, usize, bool)>,
}

impl SubgroupGraph {
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// `E - V + 1`.
    pub fn rank(&self) -> i64 {
        self.edges.len() as i64 - self.states as i64 + 1
    }

    /// One `state state label` line per edge.
    pub fn edge_list(&self, alpha: &Alphabet) -> String {
        let mut s = String::new();
        for e in &self.edges {
            let _ = writeln!(s, "{} {} {}", e.from, e.to, alpha.name(e.letter.id()));
        }
        s
    }

    /// Edges as `(from, to, letter code)`, sorted.
    pub fn shape(&self) -> Vec<(u32, u32, i32)> {
        let mut v: Vec<_> = self.edges.iter().map(|e| (e.from, e.to, e.letter.code())).collect();
        v.sort_unstable();
        v
    }

    fn step(&self, v: u32, l: Letter) -> Option<(u32, &GenWord, bool)> {
        self.index
            .get(&(v, l.code()))
            .map(|&(to, e, fwd)| (to, &self.edges[e].label, fwd))
    }

    /// Expresses `w` in the generators, or `None` if `w` is not in the subgroup.
    pub fn membership_express(&self, w: &[Letter]) -> Option<GenWord> {
        let mut v = self.base;
        let mut acc: GenWord = Vec::new();
        for &l in w {
            let (to, label, fwd) = self.step(v, l)?;
            if fwd {
                for &g in label {
                    push_reduced(&mut acc, g);
                }
            } else {
                for &g in label.iter().rev() {
                    push_reduced(&mut acc, -g);
                }
            }
            v = to;
        }
        (v == self.base).then_some(acc)
    }

    /// Multiplies out a generator word.
    pub fn evaluate(&self, e: &[i32]) -> Word {
        evaluate(&self.generators, e)
    }
}

pub fn evaluate(gens: &[Word], e: &[i32]) -> Word {
    let mut out: Vec<Letter> = Vec::new();
    for &g in e {
        let w = &gens[g.unsigned_abs() as usize - 1];
        if g > 0 {
            out.extend(w.letters());
        } else {
            out.extend(w.inverse().letters());
        }
        reduce_letters(&mut out);
    }
    Word::from_letters(out)
}

/// Folds the petal graph of `generators`.
pub fn fold(generators: &[Word]) -> Result<SubgroupGraph> {
    fold_ordered(generators, None)
}

/// Folds with the worklist visited in a seeded random order.
pub fn fold_ordered(generators: &[Word], seed: Option<u64>) -> Result<SubgroupGraph> {
    if generators.is_empty() {
        return Err(Error::Precondition("fold needs at least one generator".into()));
    }
    let mut edges: Vec<Edge> = Vec::new();
    let mut states: u32 = 1;
    for (i, g) in generators.iter().enumerate() {
        if !g.is_freely_reduced() {
            return Err(Error::Precondition(format!("generator {} is not freely reduced", i + 1)));
        }
        let letters = g.to_vec();
        if letters.is_empty() {
            return Err(Error::Precondition(format!("generator {} is empty", i + 1)));
        }
        let k = letters.len();
        let mut prev = 0u32;
        for (pos, &l) in letters.iter().enumerate() {
            let last = pos + 1 == k;
            let to = if last {
                0
            } else {
                states += 1;
                states - 1
            };
            edges.push(Edge {
                from: prev,
                to,
                letter: l,
                label: if last { vec![i as i32 + 1] } else { Vec::new() },
                alive: true,
            });
            prev = to;
        }
    }
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); states as usize];
    for (i, e) in edges.iter().enumerate() {
        incident[e.from as usize].push(i);
        if e.to != e.from {
            incident[e.to as usize].push(i);
        }
    }
    let mut merged = vec![false; states as usize];
    let mut work: Vec<u32> = (0..states).collect();
    let mut rng = seed.map(ChaCha8Rng::seed_from_u64);
    if let Some(r) = rng.as_mut() {
        work.shuffle(r);
    }
    let mut conflicts = 0usize;
    let base = 0u32;

    while let Some(v) = work.pop() {
        if merged[v as usize] {
            continue;
        }
        let inc = &mut incident[v as usize];
        inc.retain(|&e| edges[e].alive);
        inc.sort_unstable();
        inc.dedup();
        let mut seen: HashMap<i32, (u32, usize, bool)> = HashMap::new();
        let mut hit = None;
        'scan: for &ei in &incident[v as usize] {
            let e = &edges[ei];
            let mut halves = Vec::with_capacity(2);
            if e.from == v {
                halves.push((e.letter, e.to, true));
            }
            if e.to == v {
                halves.push((e.letter.inv(), e.from, false));
            }
            for (l, to, fwd) in halves {
                if let Some(&prev) = seen.get(&l.code()) {
                    hit = Some((prev, (to, ei, fwd)));
                    break 'scan;
                }
                seen.insert(l.code(), (to, ei, fwd));
            }
        }
        let Some(((x, e1, f1), (y, e2, f2))) = hit else { continue };
        let half_label = |e: &Edge, fwd: bool| if fwd { e.label.clone() } else { gen_inv(&e.label) };
        let m1 = half_label(&edges[e1], f1);
        let m2 = half_label(&edges[e2], f2);
        edges[e2].alive = false;
        if x == y {
            if m1 != m2 {
                conflicts += 1;
            }
        } else {
            // s(y) = g s(x) with g = m2^-1 m1
            let g = gen_mul(&gen_inv(&m2), &m1);
            let (keep, gone, g) = {
                let prefer_y = y == base
                    || (x != base && incident[y as usize].len() > incident[x as usize].len());
                if prefer_y {
                    (y, x, gen_inv(&g))
                } else {
                    (x, y, g)
                }
            };
            let ginv = gen_inv(&g);
            let moved = std::mem::take(&mut incident[gone as usize]);
            for &ei in &moved {
                let e = &mut edges[ei];
                if !e.alive {
                    continue;
                }
                if e.to == gone {
                    e.label = gen_mul(&e.label, &g);
                    e.to = keep;
                }
                if e.from == gone {
                    e.label = gen_mul(&ginv, &e.label);
                    e.from = keep;
                }
            }
            incident[keep as usize].extend(moved);
            merged[gone as usize] = true;
            work.push(keep);
        }
        work.push(v);
    }

    let mut renum: Vec<u32> = vec![u32::MAX; states as usize];
    let mut next = 0u32;
    renum[base as usize] = 0;
    next += 1;
    for s in 0..states {
        if !merged[s as usize] && s != base {
            renum[s as usize] = next;
            next += 1;
        }
    }
    let mut out_edges: Vec<Edge> = edges
        .into_iter()
        .filter(|e| e.alive)
        .map(|mut e| {
            e.from = renum[e.from as usize];
            e.to = renum[e.to as usize];
            e
        })
        .collect();
    out_edges.sort_by_key(|e| (e.from, e.to, e.letter.code()));
    let mut index = HashMap::new();
    for (i, e) in out_edges.iter().enumerate() {
        index.insert((e.from, e.letter.code()), (e.to, i, true));
        index.insert((e.to, e.letter.inv().code()), (e.from, i, false));
    }
    Ok(SubgroupGraph {
        generators: generators.to_vec(),
        states: next,
        base: 0,
        edges: out_edges,
        conflicts,
        index,
    })
}

/// Canonical state numbering by breadth-first search from the base, so that
/// graphs folded in different orders can be compared.
pub fn canonical_shape(g: &SubgroupGraph) -> Vec<(u32, u32, i32)> {
    let mut order: HashMap<u32, u32> = HashMap::new();
    order.insert(g.base, 0);
    let mut queue = std::collections::VecDeque::from([g.base]);
    let mut adj: HashMap<u32, Vec<(i32, u32)>> = HashMap::new();
    for (&(v, code), &(to, _, _)) in &g.index {
        adj.entry(v).or_default().push((code, to));
    }
    for list in adj.values_mut() {
        list.sort_unstable();
    }
    while let Some(v) = queue.pop_front() {
        for &(_, to) in adj.get(&v).map(|l| l.as_slice()).unwrap_or(&[]) {
            if !order.contains_key(&to) {
                let k = order.len() as u32;
                order.insert(to, k);
                queue.push_back(to);
            }
        }
    }
    let mut v: Vec<_> = g
        .edges
        .iter()
        .map(|e| (order[&e.from], order[&e.to], e.letter.code()))
        .collect();
    v.sort_unstable();
    v
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasisVerdict {
    pub generators: usize,
    pub rank: i64,
    pub conflicts: usize,
    pub is_basis: bool,
}

pub fn verify_free_basis(generators: &[Word]) -> Result<BasisVerdict> {
    let g = fold(generators)?;
    Ok(basis_verdict(&g))
}

pub fn basis_verdict(g: &SubgroupGraph) -> BasisVerdict {
    let n = g.generators.len();
    let rank = g.rank();
    BasisVerdict {
        generators: n,
        rank,
        conflicts: g.conflicts,
        is_basis: rank == n as i64 && g.conflicts == 0,
    }
}

/// `g0 t^e1 g1 ... t^ek gk`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BrittonWord {
    pub segments: Vec<Vec<Letter>>,
    pub signs: Vec<bool>,
}

impl BrittonWord {
    pub fn t_count(&self) -> usize {
        self.signs.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.signs.is_empty() && self.segments.iter().all(|s| s.is_empty())
    }

    pub fn to_word(&self, t: GenId) -> Word {
        let mut out = self.segments[0].clone();
        for (k, &inv) in self.signs.iter().enumerate() {
            out.push(Letter::new(t, inv));
            out.extend(&self.segments[k + 1]);
        }
        Word::from_letters(out)
    }
}

#[derive(Clone, Debug)]
pub struct BrittonReport {
    pub normal_form: BrittonWord,
    pub pinches: u64,
    pub trivial: bool,
}

/// The HNN structure: `F * <t>` with `t^-1 u_r t = v_r`.
pub struct Hnn {
    pub t: GenId,
    pub u_graph: SubgroupGraph,
    pub v_graph: SubgroupGraph,
}

impl Hnn {
    /// Folds both sides and refuses unless each is freely generated by its
    /// listed words.
    pub fn new(pres: &Presentation, data: &HnnData) -> Result<Self> {
        let us: Vec<Word> = data.pairs.iter().map(|(_, u, _)| u.clone()).collect();
        let vs: Vec<Word> = data.pairs.iter().map(|(_, _, v)| v.clone()).collect();
        let u_graph = fold(&us)?;
        let v_graph = fold(&vs)?;
        for (side, g) in [("u", &u_graph), ("v", &v_graph)] {
            let b = basis_verdict(g);
            if !b.is_basis {
                return Err(Error::NotFree(format!(
                    "{side}-side: {} generators fold to rank {} with {} conflicts",
                    b.generators, b.rank, b.conflicts
                )));
            }
        }
        Ok(Hnn {
            t: pres.alphabet.t(),
            u_graph,
            v_graph,
        })
    }

    /// Leftmost-innermost pinching with a stack of segments.
    pub fn britton_reduce(&self, w: &Word) -> BrittonReport {
        let mut segs: Vec<Vec<Letter>> = vec![Vec::new()];
        let mut signs: Vec<bool> = Vec::new();
        let mut pinches = 0u64;
        let push_all = |seg: &mut Vec<Letter>, it: &mut dyn Iterator<Item = Letter>| {
            for l in it {
                if seg.last() == Some(&l.inv()) {
                    seg.pop();
                } else {
                    seg.push(l);
                }
            }
        };
        for l in w.letters() {
            if l.id() != self.t {
                push_all(segs.last_mut().expect("segment"), &mut std::iter::once(l));
                continue;
            }
            let inv = l.is_inverse();
            // t^-1 g t with g in <u>, or t g t^-1 with g in <v>
            let pinch = match signs.last() {
                Some(&prev) if prev != inv => {
                    let (from, to) = if prev {
                        (&self.u_graph, &self.v_graph)
                    } else {
                        (&self.v_graph, &self.u_graph)
                    };
                    let g = segs.last().expect("segment");
                    from.membership_express(g).map(|e| to.evaluate(&e))
                }
                _ => None,
            };
            match pinch {
                Some(img) => {
                    segs.pop();
                    signs.pop();
                    pinches += 1;
                    push_all(segs.last_mut().expect("segment"), &mut img.letters());
                }
                None => {
                    signs.push(inv);
                    segs.push(Vec::new());
                }
            }
        }
        let normal_form = BrittonWord { segments: segs, signs };
        let trivial = normal_form.is_trivial();
        BrittonReport {
            normal_form,
            pinches,
            trivial,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presentation::{build_presentation, derive_hnn_data};

    fn words(alpha: &Alphabet, list: &[&str]) -> Vec<Word> {
        list.iter().map(|s| Word::parse(alpha, s).unwrap()).collect()
    }

    #[test]
    fn small_ranks() {
        let a = Alphabet::new(2).unwrap();
        assert_eq!(fold(&words(&a, &["x1"])).unwrap().rank(), 1);
        let g = fold(&words(&a, &["x1 x2", "x2 x1"])).unwrap();
        assert_eq!(g.rank(), 2);
        assert!(basis_verdict(&g).is_basis);
        let v = verify_free_basis(&words(&a, &["x1", "x1 x2", "x2"])).unwrap();
        assert_eq!(v.rank, 2);
        assert!(!v.is_basis);
    }

    #[test]
    fn readback_spells_the_element() {
        let a = Alphabet::new(2).unwrap();
        let gens = words(&a, &["x1 x2 x1^-1", "x1 y1", "y2 x2^-1"]);
        let g = fold(&gens).unwrap();
        let w = Word::concat_all([&gens[0], &gens[2].inverse(), &gens[1]]).free_reduce();
        let e = g.membership_express(&w.to_vec()).unwrap();
        assert_eq!(g.evaluate(&e), w);
        assert_eq!(e, vec![1, -3, 2]);
        assert!(g.membership_express(&[a.letter("x1")]).is_none());
    }

    #[test]
    fn relators_reduce_to_trivial() {
        let pres = build_presentation(2, 1, 3).unwrap();
        let data = derive_hnn_data(&pres).unwrap();
        let hnn = Hnn::new(&pres, &data).unwrap();
        for r in &pres.relators {
            let rep = hnn.britton_reduce(&r.cyclic());
            assert!(rep.trivial, "relator {} did not reduce", r.id);
        }
        let t = Word::letter(Letter::pos(pres.alphabet.t()));
        let x1 = Word::letter(pres.alphabet.letter("x1"));
        let rep = hnn.britton_reduce(&Word::concat_all([&t, &x1, &t.inverse()]));
        assert!(!rep.trivial);
        assert_eq!(rep.normal_form.t_count(), 2);
    }
}
