// SPDX-License-Identifier: Apache-2.0

//! Finite labelled Markov chains: partition refinement and candidate
//! (bi)simulation checking.

use std::collections::HashMap;
use std::hash::Hash;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::BisimError;
use crate::semantics::Probability;

/// States and labels are dense indices; `rows[s]` lists the labelled
/// subdistributions leaving `s`, sorted by label.
#[derive(Debug, Clone)]
pub struct FiniteLmc<L, P> {
    names: Vec<String>,
    labels: Vec<L>,
    label_ids: HashMap<L, usize>,
    rows: Vec<Vec<(usize, Vec<(usize, P)>)>>,
}

impl<L: Clone + Eq + Hash, P: Probability> Default for FiniteLmc<L, P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<L: Clone + Eq + Hash, P: Probability> FiniteLmc<L, P> {
    pub fn new() -> Self {
        FiniteLmc { names: Vec::new(), labels: Vec::new(), label_ids: HashMap::new(), rows: Vec::new() }
    }

    pub fn add_state(&mut self, name: String) -> usize {
        self.names.push(name);
        self.rows.push(Vec::new());
        self.names.len() - 1
    }

    pub fn label_id(&mut self, label: &L) -> usize {
        if let Some(&i) = self.label_ids.get(label) {
            return i;
        }
        self.labels.push(label.clone());
        self.label_ids.insert(label.clone(), self.labels.len() - 1);
        self.labels.len() - 1
    }

    pub fn find_label(&self, label: &L) -> Option<usize> {
        self.label_ids.get(label).copied()
    }

    /// Replaces the `label` row of `state`. Repeated targets are summed and
    /// negligible weights dropped.
    pub fn set_row(&mut self, state: usize, label: usize, succ: Vec<(usize, P)>) {
        let mut merged: Vec<(usize, P)> = Vec::new();
        for (t, p) in succ {
            match merged.iter_mut().find(|(u, _)| *u == t) {
                Some((_, q)) => *q = q.add(&p),
                None => merged.push((t, p)),
            }
        }
        merged.retain(|(_, p)| !p.is_negligible());
        let row = &mut self.rows[state];
        match row.binary_search_by_key(&label, |(l, _)| *l) {
            Ok(i) => row[i].1 = merged,
            Err(i) => row.insert(i, (label, merged)),
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, s: usize) -> &str {
        &self.names[s]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn label(&self, l: usize) -> &L {
        &self.labels[l]
    }

    pub fn labels(&self) -> &[L] {
        &self.labels
    }

    pub fn row(&self, s: usize) -> &[(usize, Vec<(usize, P)>)] {
        &self.rows[s]
    }

    pub fn successors(&self, s: usize, l: usize) -> &[(usize, P)] {
        match self.rows[s].binary_search_by_key(&l, |(m, _)| *m) {
            Ok(i) => &self.rows[s][i].1,
            Err(_) => &[],
        }
    }

    /// `P(s, l, X)` for `X = { t | inside(t) }`.
    pub fn prob_into(&self, s: usize, l: usize, inside: impl Fn(usize) -> bool) -> P {
        self.successors(s, l).iter().filter(|(t, _)| inside(*t)).fold(P::zero(), |acc, (_, p)| acc.add(p))
    }

    /// Rejects rows of mass above one.
    pub fn validate(&self, tol: f64) -> Result<(), BisimError>
    where
        L: std::fmt::Display,
    {
        for s in 0..self.len() {
            for (l, succ) in &self.rows[s] {
                let mass = succ.iter().fold(P::zero(), |acc, (_, p)| acc.add(p));
                if !mass.approx_le(&P::one(), tol) {
                    return Err(BisimError::BadRow {
                        state: self.names[s].clone(),
                        label: self.labels[*l].to_string(),
                        mass: mass.to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Entries `(label, block, P(s, label, block))`, sorted, zero blocks omitted.
    pub(crate) fn signature(&self, s: usize, block_of: &[usize]) -> Vec<(usize, usize, P)> {
        let mut sig: Vec<(usize, usize, P)> = Vec::new();
        for (l, succ) in &self.rows[s] {
            for (t, p) in succ {
                let b = block_of[*t];
                match sig.iter_mut().find(|(m, c, _)| m == l && *c == b) {
                    Some(e) => e.2 = e.2.add(p),
                    None => sig.push((*l, b, p.clone())),
                }
            }
        }
        sig.retain(|(_, _, p)| !p.is_negligible());
        sig.sort_by_key(|e| (e.0, e.1));
        sig
    }
}

/// First `(label, block)` where two signatures disagree.
pub(crate) fn first_mismatch<P: Probability>(
    a: &[(usize, usize, P)],
    b: &[(usize, usize, P)],
    tol: f64,
) -> Option<(usize, usize, P, P)> {
    let (mut i, mut j) = (0, 0);
    loop {
        match (a.get(i), b.get(j)) {
            (None, None) => return None,
            (Some(x), Some(y)) if (x.0, x.1) == (y.0, y.1) => {
                if !x.2.approx_eq(&y.2, tol) {
                    return Some((x.0, x.1, x.2.clone(), y.2.clone()));
                }
                i += 1;
                j += 1;
            }
            (Some(x), y) if y.is_none_or(|y| (x.0, x.1) < (y.0, y.1)) => return Some((x.0, x.1, x.2.clone(), P::zero())),
            (_, Some(y)) => return Some((y.0, y.1, P::zero(), y.2.clone())),
            (Some(_), None) => unreachable!(),
        }
    }
}

/// One refinement round: states stay together iff they were together and
/// have matching signatures. New block ids follow first occurrence.
pub(crate) fn refine_once<L: Clone + Eq + Hash, P: Probability>(
    lmc: &FiniteLmc<L, P>,
    block_of: &[usize],
    tol: f64,
) -> Vec<usize> {
    let sigs: Vec<_> = (0..lmc.len()).map(|s| lmc.signature(s, block_of)).collect();
    let mut reps: Vec<usize> = Vec::new();
    let mut out = vec![0; lmc.len()];
    for s in 0..lmc.len() {
        let found = reps
            .iter()
            .position(|&r| block_of[r] == block_of[s] && first_mismatch(&sigs[r], &sigs[s], tol).is_none());
        out[s] = match found {
            Some(b) => b,
            None => {
                reps.push(s);
                reps.len() - 1
            }
        };
    }
    out
}

fn blocks_of(block_of: &[usize]) -> Vec<Vec<usize>> {
    let n = block_of.iter().copied().max().map_or(0, |m| m + 1);
    let mut blocks = vec![Vec::new(); n];
    for (s, &b) in block_of.iter().enumerate() {
        blocks[b].push(s);
    }
    blocks.retain(|b| !b.is_empty());
    blocks
}

/// Coarsest partition in which related states give equal probability to
/// every label and block: bisimilarity on the finite chain. Blocks are
/// sorted by their least state.
pub fn partition_refine<L: Clone + Eq + Hash, P: Probability>(lmc: &FiniteLmc<L, P>, tol: f64) -> Vec<Vec<usize>> {
    let mut block_of = vec![0; lmc.len()];
    loop {
        let next = refine_once(lmc, &block_of, tol);
        let (before, after) = (blocks_of(&block_of).len(), blocks_of(&next).len());
        block_of = next;
        if before == after {
            return blocks_of(&block_of);
        }
    }
}

/// A failed transfer condition: `P(left, label, class)` and
/// `P(right, label, image)` violate equality (bisimulation) or `<=` (simulation).
#[derive(Debug, Clone, PartialEq)]
pub struct Witness<P> {
    pub left: usize,
    pub right: usize,
    pub label: usize,
    pub class: Vec<usize>,
    pub image: Vec<usize>,
    pub p_left: P,
    pub p_right: P,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict<P> {
    /// `relation_size` counts ordered pairs of the closed relation.
    Holds { relation_size: usize, state_count: usize },
    Fails(Witness<P>),
}

impl<P> Verdict<P> {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds { .. })
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        let p = self.0[x];
        if p == x {
            return x;
        }
        let r = self.find(p);
        self.0[x] = r;
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.0[a.max(b)] = a.min(b);
        }
    }
}

/// Checks that the equivalence closure of `pairs` is a bisimulation.
pub fn check_bisimulation<L: Clone + Eq + Hash, P: Probability>(
    lmc: &FiniteLmc<L, P>,
    pairs: &[(usize, usize)],
    tol: f64,
) -> Verdict<P> {
    let mut uf = UnionFind((0..lmc.len()).collect());
    for &(a, b) in pairs {
        uf.union(a, b);
    }
    let roots: Vec<usize> = (0..lmc.len()).map(|s| uf.find(s)).collect();
    let mut ids = HashMap::new();
    let block_of: Vec<usize> = roots
        .iter()
        .map(|r| {
            let n = ids.len();
            *ids.entry(*r).or_insert(n)
        })
        .collect();
    let blocks = blocks_of(&block_of);
    for block in &blocks {
        let rep = block[0];
        let rep_sig = lmc.signature(rep, &block_of);
        for &s in &block[1..] {
            if let Some((label, b, p_left, p_right)) = first_mismatch(&lmc.signature(s, &block_of), &rep_sig, tol) {
                let class: Vec<usize> = (0..lmc.len()).filter(|&t| block_of[t] == b).collect();
                return Verdict::Fails(Witness { left: s, right: rep, label, image: class.clone(), class, p_left, p_right });
            }
        }
    }
    Verdict::Holds { relation_size: blocks.iter().map(|b| b.len() * b.len()).sum(), state_count: lmc.len() }
}

/// Largest successor support handled by subset enumeration.
pub const MAX_SUBSET_SUPPORT: usize = 20;

/// Transfer condition `P(s, l, X) <= P(t, l, R(X))` for every label and
/// every subset `X` of the support of `s`'s successors.
fn simulation_step<L: Clone + Eq + Hash, P: Probability>(
    lmc: &FiniteLmc<L, P>,
    rel: &[Vec<bool>],
    s: usize,
    t: usize,
    tol: f64,
) -> Result<Option<Witness<P>>, BisimError> {
    for (l, succ) in lmc.row(s) {
        let k = succ.len();
        if k > MAX_SUBSET_SUPPORT {
            return Err(BisimError::SupportTooLarge(k));
        }
        let theirs = lmc.successors(t, *l);
        // Bit i of masks[j] says succ[i] is related to theirs[j].
        let masks: Vec<u32> = theirs
            .iter()
            .map(|(u, _)| (0..k).filter(|&i| rel[succ[i].0][*u]).fold(0, |m, i| m | (1 << i)))
            .collect();
        for x in 1u32..(1 << k) {
            let mine = (0..k).filter(|i| x & (1 << i) != 0).fold(P::zero(), |acc, i| acc.add(&succ[i].1));
            let image = masks
                .iter()
                .zip(theirs)
                .filter(|(m, _)| *m & x != 0)
                .fold(P::zero(), |acc, (_, (_, p))| acc.add(p));
            if !mine.approx_le(&image, tol) {
                let class = (0..k).filter(|i| x & (1 << i) != 0).map(|i| succ[i].0).collect::<Vec<_>>();
                let image_states =
                    (0..lmc.len()).filter(|&u| class.iter().any(|&c| rel[c][u])).collect::<Vec<_>>();
                return Ok(Some(Witness {
                    left: s,
                    right: t,
                    label: *l,
                    class,
                    image: image_states,
                    p_left: mine,
                    p_right: image,
                }));
            }
        }
    }
    Ok(None)
}

fn preorder_closure(n: usize, pairs: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut rel = vec![vec![false; n]; n];
    for (i, row) in rel.iter_mut().enumerate() {
        row[i] = true;
    }
    for &(a, b) in pairs {
        rel[a][b] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if rel[i][k] {
                for j in 0..n {
                    if rel[k][j] {
                        rel[i][j] = true;
                    }
                }
            }
        }
    }
    rel
}

/// Checks that the preorder closure of the ordered `pairs` is a simulation.
pub fn check_simulation<L: Clone + Eq + Hash, P: Probability>(
    lmc: &FiniteLmc<L, P>,
    pairs: &[(usize, usize)],
    tol: f64,
) -> Result<Verdict<P>, BisimError> {
    let rel = preorder_closure(lmc.len(), pairs);
    for s in 0..lmc.len() {
        for t in 0..lmc.len() {
            if s != t && rel[s][t] {
                if let Some(w) = simulation_step(lmc, &rel, s, t, tol)? {
                    return Ok(Verdict::Fails(w));
                }
            }
        }
    }
    let relation_size = rel.iter().map(|r| r.iter().filter(|&&b| b).count()).sum();
    Ok(Verdict::Holds { relation_size, state_count: lmc.len() })
}

/// Similarity as a matrix: `sim[s][t]` iff `t` simulates `s`. Greatest
/// fixpoint, by deleting pairs until the transfer condition holds.
pub fn largest_simulation<L: Clone + Eq + Hash, P: Probability>(
    lmc: &FiniteLmc<L, P>,
    tol: f64,
) -> Result<Vec<Vec<bool>>, BisimError> {
    let n = lmc.len();
    let mut rel = vec![vec![true; n]; n];
    loop {
        let mut changed = false;
        for s in 0..n {
            for t in 0..n {
                if s != t && rel[s][t] && simulation_step(lmc, &rel, s, t, tol)?.is_some() {
                    rel[s][t] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            return Ok(rel);
        }
    }
}

/// Explicit chain file: `{states, labels, matrix: [{from, label, to, p}]}`.
/// Probabilities are numbers or `"a/b"` strings, read exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LmcFile {
    pub states: Vec<String>,
    pub labels: Vec<String>,
    pub matrix: Vec<LmcEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LmcEntry {
    pub from: String,
    pub label: String,
    pub to: String,
    pub p: serde_json::Value,
}

impl LmcFile {
    pub fn from_lmc(lmc: &FiniteLmc<String, BigRational>) -> Self {
        let mut matrix = Vec::new();
        for s in 0..lmc.len() {
            for (l, succ) in lmc.row(s) {
                for (t, p) in succ {
                    matrix.push(LmcEntry {
                        from: lmc.name(s).to_string(),
                        label: lmc.label(*l).clone(),
                        to: lmc.name(*t).to_string(),
                        p: serde_json::Value::String(p.to_string()),
                    });
                }
            }
        }
        LmcFile { states: lmc.names().to_vec(), labels: lmc.labels().to_vec(), matrix }
    }

    pub fn to_lmc(&self) -> Result<FiniteLmc<String, BigRational>, BisimError> {
        let mut lmc = FiniteLmc::new();
        let mut index = HashMap::new();
        for s in &self.states {
            index.insert(s.clone(), lmc.add_state(s.clone()));
        }
        for l in &self.labels {
            lmc.label_id(l);
        }
        let mut rows: HashMap<(usize, usize), Vec<(usize, BigRational)>> = HashMap::new();
        let mut order = Vec::new();
        for e in &self.matrix {
            let state = |name: &String| index.get(name).copied().ok_or_else(|| BisimError::UnknownState(name.clone()));
            let (from, to) = (state(&e.from)?, state(&e.to)?);
            let label = lmc.find_label(&e.label).ok_or_else(|| BisimError::UnknownLabel(e.label.clone()))?;
            let text = match &e.p {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Number(n) => n.to_string(),
                other => return Err(BisimError::BadProbability(other.to_string())),
            };
            let p = <BigRational as Probability>::parse(&text).ok_or(BisimError::BadProbability(text))?;
            if !rows.contains_key(&(from, label)) {
                order.push((from, label));
            }
            rows.entry((from, label)).or_default().push((to, p));
        }
        for key in order {
            let succ = rows.remove(&key).unwrap_or_default();
            lmc.set_row(key.0, key.1, succ);
        }
        lmc.validate(0.0)?;
        Ok(lmc)
    }
}

pub fn lmc_from_json(text: &str) -> Result<FiniteLmc<String, BigRational>, BisimError> {
    serde_json::from_str::<LmcFile>(text)?.to_lmc()
}
