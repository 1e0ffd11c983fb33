//! Exhaustive enumeration of absorbing-set candidates: connected set systems
//! of block size `k` with pairwise block intersections of at most one point,
//! `k`-colourable, and with every block containing at most `(k-1)/2` points
//! of odd degree.

use crate::setsystem::{is_k_colourable, SetSystem};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, HashSet};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassifyError {
    #[error("block size k={0} outside the supported range 3..=5")]
    BlockSize(usize),
    #[error("at most {max} blocks supported, got {0}", max = MAX_BLOCKS)]
    TooManyBlocks(usize),
}

pub const MAX_BLOCKS: usize = 8;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub k: usize,
    pub system: SetSystem,
    /// Number of blocks.
    pub a: usize,
    /// Number of odd-degree points.
    pub b: usize,
    /// `(a,b)` or `(a,b){i}` when several candidates share the size.
    pub label: String,
    pub canonical: String,
}

impl Candidate {
    /// Incidence matrix (points by blocks) that is lexicographically greatest
    /// over all block orders, rows sorted in descending order.
    pub fn matrix(&self) -> Vec<Vec<u8>> {
        candidate_matrix(&self.system)
    }

    pub fn render(&self) -> String {
        let mut s = format!("{}\n", self.label);
        for row in self.matrix() {
            let line: Vec<&str> = row.iter().map(|&x| if x == 1 { "1" } else { "." }).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }
}

pub fn candidate_matrix(s: &SetSystem) -> Vec<Vec<u8>> {
    let inc = s.incidence_matrix();
    let nb = s.size();
    let mut order: Vec<usize> = (0..nb).collect();
    let mut best: Option<Vec<Vec<u8>>> = None;
    permute(&mut order, 0, &mut |ord| {
        let mut rows: Vec<Vec<u8>> = inc.iter().map(|r| ord.iter().map(|&j| r[j]).collect()).collect();
        rows.sort_unstable_by(|a, b| b.cmp(a));
        if best.as_ref().is_none_or(|b| rows > *b) {
            best = Some(rows);
        }
    });
    best.unwrap_or_default()
}

fn permute(v: &mut Vec<usize>, i: usize, f: &mut dyn FnMut(&[usize])) {
    if i == v.len() {
        f(v);
        return;
    }
    for j in i..v.len() {
        v.swap(i, j);
        permute(v, i + 1, f);
        v.swap(i, j);
    }
}

pub fn extension_relation(bigger: &Candidate, smaller: &Candidate) -> bool {
    bigger.system.embeds(&smaller.system)
}

/// Conditions (A), (B), (D) and connectivity; (C) is checked separately.
pub fn satisfies_abd(s: &SetSystem, k: usize) -> (bool, bool) {
    let blocks_ok = s.blocks().iter().all(|b| b.len() == k);
    let mut pair_ok = true;
    'outer: for (i, b) in s.blocks().iter().enumerate() {
        for c in &s.blocks()[i + 1..] {
            if b.iter().filter(|p| c.binary_search(p).is_ok()).count() > 1 {
                pair_ok = false;
                break 'outer;
            }
        }
    }
    let odd: HashSet<usize> = s.odd_points().into_iter().collect();
    let d_ok = s.blocks().iter().all(|b| b.iter().filter(|p| odd.contains(p)).count() <= (k - 1) / 2);
    (blocks_ok && pair_ok && s.is_connected(), d_ok)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateCatalog {
    pub k: usize,
    pub t: usize,
    pub candidates: Vec<Candidate>,
}

impl CandidateCatalog {
    pub fn counts(&self) -> BTreeMap<(usize, usize), usize> {
        let mut m = BTreeMap::new();
        for c in &self.candidates {
            *m.entry((c.a, c.b)).or_insert(0) += 1;
        }
        m
    }

    pub fn get(&self, label: &str) -> Option<&Candidate> {
        self.candidates.iter().find(|c| c.label == label)
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

pub fn classify(k: usize, t: usize) -> Result<CandidateCatalog, ClassifyError> {
    classify_inner(k, t, None)
}

/// Same result as [`classify`]; parents are visited in a shuffled order.
pub fn classify_with_seed(k: usize, t: usize, seed: u64) -> Result<CandidateCatalog, ClassifyError> {
    classify_inner(k, t, Some(seed))
}

fn classify_inner(k: usize, t: usize, seed: Option<u64>) -> Result<CandidateCatalog, ClassifyError> {
    if !(3..=5).contains(&k) {
        return Err(ClassifyError::BlockSize(k));
    }
    if t > MAX_BLOCKS {
        return Err(ClassifyError::TooManyBlocks(t));
    }
    let mut found: Vec<(String, SetSystem)> = Vec::new();
    if t == 0 {
        return Ok(label_catalog(k, t, found));
    }
    let first = SetSystem::new(k, vec![(0..k).collect()]).expect("single block");
    let mut level: Vec<(String, SetSystem)> = vec![(first.canonical_form(), first)];
    let mut rng = seed.map(ChaCha8Rng::seed_from_u64);
    for a in 1..=t {
        for (cf, s) in &level {
            if satisfies_abd(s, k).1 {
                found.push((cf.clone(), s.clone()));
            }
        }
        if a == t {
            break;
        }
        if let Some(r) = rng.as_mut() {
            level.shuffle(r);
        }
        let children: Vec<Vec<(String, SetSystem)>> = level.par_iter().map(|(_, s)| extensions(s, k)).collect();
        let mut next: BTreeMap<String, SetSystem> = BTreeMap::new();
        for group in children {
            for (cf, s) in group {
                next.entry(cf).or_insert(s);
            }
        }
        let kept: Vec<(String, SetSystem)> = next.into_iter().collect();
        level = kept.into_par_iter().filter(|(_, s)| is_k_colourable(s, k)).collect();
    }
    Ok(label_catalog(k, t, found))
}

/// One-block extensions satisfying (A) and (B); each new block meets a set of
/// existing points, pairwise not sharing a block, plus fresh points.
fn extensions(s: &SetSystem, k: usize) -> Vec<(String, SetSystem)> {
    let n = s.num_points();
    let pb = s.point_blocks();
    let co_block = |p: usize, q: usize| pb[p].iter().any(|b| pb[q].contains(b));
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut chosen: Vec<usize> = Vec::new();
    fn rec(
        start: usize,
        n: usize,
        k: usize,
        chosen: &mut Vec<usize>,
        co: &dyn Fn(usize, usize) -> bool,
        f: &mut dyn FnMut(&[usize]),
    ) {
        if !chosen.is_empty() {
            f(chosen);
        }
        if chosen.len() == k {
            return;
        }
        for p in start..n {
            if chosen.iter().all(|&c| !co(c, p)) {
                chosen.push(p);
                rec(p + 1, n, k, chosen, co, f);
                chosen.pop();
            }
        }
    }
    rec(0, n, k, &mut chosen, &co_block, &mut |t: &[usize]| {
        let fresh = k - t.len();
        let mut block: Vec<usize> = t.to_vec();
        block.extend(n..n + fresh);
        let mut blocks = s.blocks().to_vec();
        blocks.push(block);
        let child = SetSystem::new(n + fresh, blocks).expect("valid extension");
        let cf = child.canonical_form();
        if seen.insert(cf.clone()) {
            out.push((cf, child));
        }
    });
    out
}

fn label_catalog(k: usize, t: usize, found: Vec<(String, SetSystem)>) -> CandidateCatalog {
    let refs = reference_forms(k);
    let mut entries: Vec<(usize, usize, usize, String, SetSystem, Option<String>)> = found
        .into_iter()
        .map(|(cf, s)| {
            let a = s.size();
            let b = s.odd_points().len();
            let r = refs.get(&cf).cloned();
            let idx = r.as_ref().map_or(usize::MAX, |(i, _)| *i);
            (a, b, idx, cf, s, r.map(|(_, l)| l))
        })
        .collect();
    entries.sort_by(|x, y| (x.0, x.1, x.2, &x.3).cmp(&(y.0, y.1, y.2, &y.3)));
    let mut per_size: HashMap<(usize, usize), usize> = HashMap::new();
    for e in &entries {
        *per_size.entry((e.0, e.1)).or_insert(0) += 1;
    }
    let mut counter: HashMap<(usize, usize), usize> = HashMap::new();
    let candidates = entries
        .into_iter()
        .map(|(a, b, _, cf, s, rl)| {
            let i = counter.entry((a, b)).or_insert(0);
            *i += 1;
            let label = rl.unwrap_or_else(|| {
                if per_size[&(a, b)] > 1 {
                    format!("({a},{b}){{{i}}}")
                } else {
                    format!("({a},{b})")
                }
            });
            Candidate { k, system: s, a, b, label, canonical: cf }
        })
        .collect();
    CandidateCatalog { k, t, candidates }
}

/// Canonical forms of the reference presentations, with their labels and
/// position in the reference order.
fn reference_forms(k: usize) -> HashMap<String, (usize, String)> {
    reference_catalog(k).into_iter().enumerate().map(|(i, (label, s))| (s.canonical_form(), (i, label))).collect()
}

/// The customary presentations and labels of the small candidates.
pub fn reference_catalog(k: usize) -> Vec<(String, SetSystem)> {
    let table: &[(&str, &[&[usize]])] = match k {
        3 => REF_K3,
        4 => REF_K4,
        _ => &[],
    };
    table
        .iter()
        .map(|(l, blocks)| (l.to_string(), SetSystem::from_one_based(blocks).expect("reference data")))
        .collect()
}

type RefTable = [(&'static str, &'static [&'static [usize]])];

const REF_K3: &RefTable = &[
    ("(3,3)", &[&[1, 2, 3], &[1, 4, 5], &[2, 4, 6]]),
    ("(4,0)", &[&[1, 2, 3], &[1, 4, 5], &[2, 4, 6], &[3, 5, 6]]),
    ("(4,2)", &[&[1, 2, 3], &[1, 4, 5], &[2, 4, 6], &[3, 5, 7]]),
    ("(4,4)", &[&[1, 2, 3], &[1, 4, 5], &[2, 6, 7], &[4, 6, 8]]),
    ("(5,3){1}", &[&[1, 2, 3], &[1, 4, 5], &[2, 4, 6], &[3, 7, 8], &[5, 7, 9]]),
    ("(5,3){2}", &[&[1, 2, 3], &[1, 4, 5], &[2, 6, 7], &[3, 8, 9], &[4, 6, 8]]),
    ("(5,5)", &[&[1, 2, 3], &[1, 4, 5], &[2, 6, 7], &[4, 8, 9], &[6, 8, 10]]),
    ("(6,0){1}", &[&[1, 2, 3], &[1, 4, 5], &[2, 4, 6], &[3, 7, 8], &[5, 7, 9], &[6, 8, 9]]),
    ("(6,0){2}", &[&[1, 2, 3], &[1, 4, 5], &[2, 6, 7], &[3, 8, 9], &[4, 6, 8], &[5, 7, 9]]),
    ("(6,2){1}", &[&[1, 2, 3], &[1, 4, 5], &[1, 6, 7], &[2, 4, 8], &[3, 6, 8], &[5, 7, 8]]),
    ("(6,2){2}", &[&[1, 2, 3], &[1, 4, 5], &[1, 6, 7], &[2, 4, 8], &[3, 6, 8], &[5, 7, 9]]),
    ("(6,2){3}", &[&[1, 2, 3], &[1, 4, 5], &[2, 4, 6], &[3, 5, 7], &[6, 8, 9], &[7, 8, 10]]),
    ("(6,2){4}", &[&[1, 2, 3], &[1, 4, 5], &[2, 4, 6], &[3, 7, 8], &[5, 7, 9], &[6, 8, 10]]),
    ("(6,2){5}", &[&[1, 2, 3], &[1, 4, 5], &[2, 4, 6], &[3, 7, 8], &[5, 7, 9], &[8, 9, 10]]),
    ("(6,2){6}", &[&[1, 2, 3], &[1, 4, 5], &[2, 6, 7], &[3, 8, 9], &[4, 6, 8], &[5, 7, 10]]),
    ("(6,4){1}", &[&[1, 2, 3], &[1, 4, 5], &[1, 6, 7], &[1, 8, 9], &[2, 4, 10], &[6, 8, 10]]),
    ("(6,4){2}", &[&[1, 2, 3], &[1, 4, 5], &[1, 6, 7], &[2, 4, 8], &[3, 6, 9], &[5, 7, 10]]),
    ("(6,4){3}", &[&[1, 2, 3], &[1, 4, 5], &[2, 4, 6], &[3, 7, 8], &[5, 9, 10], &[7, 9, 11]]),
    ("(6,4){4}", &[&[1, 2, 3], &[1, 4, 5], &[2, 4, 6], &[3, 7, 8], &[7, 9, 10], &[8, 9, 11]]),
    ("(6,4){5}", &[&[1, 2, 3], &[1, 4, 5], &[2, 6, 7], &[3, 8, 9], &[4, 6, 10], &[5, 8, 11]]),
    ("(6,4){6}", &[&[1, 2, 3], &[1, 4, 5], &[2, 6, 7], &[3, 8, 9], &[4, 6, 10], &[8, 10, 11]]),
    ("(6,6){1}", &[&[1, 2, 3], &[1, 4, 5], &[1, 6, 7], &[1, 8, 9], &[2, 4, 10], &[6, 8, 11]]),
    ("(6,6){2}", &[&[1, 2, 3], &[1, 4, 5], &[2, 6, 7], &[4, 8, 9], &[6, 10, 11], &[8, 10, 12]]),
];

const REF_K4: &RefTable = &[
    ("(4,4)", &[&[1, 2, 3, 4], &[1, 5, 6, 7], &[2, 5, 8, 9], &[3, 6, 8, 10]]),
    ("(5,4)", &[&[1, 2, 3, 4], &[1, 5, 6, 7], &[2, 5, 8, 9], &[3, 6, 10, 11], &[4, 8, 10, 12]]),
    ("(6,0)", &[&[1, 2, 3, 4], &[1, 5, 6, 7], &[2, 5, 8, 9], &[3, 6, 10, 11], &[4, 8, 10, 12], &[7, 9, 11, 12]]),
    ("(6,2){1}", &[&[1, 2, 3, 4], &[1, 5, 6, 7], &[1, 8, 9, 10], &[2, 5, 8, 11], &[3, 6, 9, 11], &[4, 7, 10, 11]]),
    ("(6,2){2}", &[&[1, 2, 3, 4], &[1, 5, 6, 7], &[1, 8, 9, 10], &[2, 5, 8, 11], &[3, 6, 9, 11], &[4, 7, 10, 12]]),
    ("(6,2){3}", &[&[1, 2, 3, 4], &[1, 5, 6, 7], &[2, 5, 8, 9], &[3, 6, 8, 10], &[4, 7, 11, 12], &[9, 10, 11, 13]]),
    ("(6,2){4}", &[&[1, 2, 3, 4], &[1, 5, 6, 7], &[2, 5, 8, 9], &[3, 6, 10, 11], &[4, 8, 10, 12], &[7, 9, 11, 13]]),
    ("(6,4){1}", &[&[1, 2, 3, 4], &[1, 5, 6, 7], &[1, 8, 9, 10], &[2, 5, 8, 11], &[3, 6, 9, 12], &[4, 7, 10, 13]]),
    ("(6,4){2}", &[&[1, 2, 3, 4], &[1, 5, 6, 7], &[2, 5, 8, 9], &[3, 6, 10, 11], &[4, 8, 12, 13], &[7, 10, 12, 14]]),
    ("(6,4){3}", &[&[1, 2, 3, 4], &[1, 5, 6, 7], &[2, 5, 8, 9], &[3, 6, 10, 11], &[8, 10, 12, 13], &[9, 11, 12, 14]]),
    ("(6,4){4}", &[&[1, 2, 3, 4], &[1, 5, 6, 7], &[2, 5, 8, 9], &[3, 6, 10, 11], &[4, 7, 12, 13], &[8, 10, 12, 14]]),
    ("(6,6){1}", &[&[1, 2, 3, 4], &[1, 5, 6, 7], &[2, 5, 8, 9], &[3, 10, 11, 12], &[6, 10, 13, 14], &[8, 11, 13, 15]]),
    ("(6,6){2}", &[&[1, 2, 3, 4], &[1, 5, 6, 7], &[2, 8, 9, 10], &[3, 11, 12, 13], &[5, 8, 11, 14], &[6, 9, 12, 15]]),
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_catalogs() {
        assert!(classify(3, 2).unwrap().is_empty());
        let c = classify(3, 3).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.candidates[0].label, "(3,3)");
        assert!(classify(2, 3).is_err());
        assert!(classify(3, 9).is_err());
    }

    #[test]
    fn matrix_presentation() {
        let c = classify(3, 3).unwrap();
        let m = c.candidates[0].matrix();
        let want: Vec<Vec<u8>> =
            ["110", "101", "100", "011", "010", "001"].iter().map(|r| r.bytes().map(|b| b - b'0').collect()).collect();
        assert_eq!(m, want);
        let single = SetSystem::from_one_based(&[&[1, 2, 3, 4]]).unwrap();
        assert_eq!(candidate_matrix(&single), vec![vec![1u8]; 4]);
    }
}
