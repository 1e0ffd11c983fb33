//! Concrete absorbing sets of a given type in a code, found through the
//! linear system over the field, plus an exhaustive subgraph search and the
//! table of closed-form elimination constraints.

use crate::code::ParityCheckMatrix;
use crate::gf::PrimeField;
use crate::mols::MolsSet;
use crate::setsystem::{colour_to_group_mappings, ColourToGroupMapping, Colouring, SetSystem};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExistenceError {
    #[error("block size {k} needs {need} squares, the set has {m}")]
    Arity { k: usize, need: usize, m: usize },
    #[error("colouring uses {0} colours, expected {1}")]
    ColourCount(usize, usize),
    #[error("mapping has {0} entries, expected {1}")]
    MappingSize(usize, usize),
    #[error("a mapping is required to build a single linear system")]
    MappingRequired,
    #[error("the square set must be in reduced form")]
    NotReduced,
    #[error("code carries no construction data")]
    NoOrigin,
    #[error("solution space of dimension {0} exceeds the enumeration cap {MAX_QUOTIENT_DIM}")]
    NullityTooLarge(usize),
    #[error("exhaustive search limited to a <= 6 and q <= 13 (got a={0}, q={1})")]
    SearchTooLarge(usize, u32),
    #[error("empty bit set")]
    EmptySet,
}

pub const MAX_QUOTIENT_DIM: usize = 4;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbsorbingSetType {
    pub system: SetSystem,
    pub colouring: Colouring,
    /// `None` stands for every mapping.
    pub mapping: Option<ColourToGroupMapping>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AbsorbingInstance {
    /// Column indices of H, sorted.
    pub bits: Vec<usize>,
    /// Field value of each candidate point.
    pub values: Vec<u32>,
    /// Short notation of the mapping that produced the instance.
    pub mapping: Vec<u8>,
}

/// Rows of E: one equation per block and square, unknowns are the point values.
pub fn build_linear_system(ty: &AbsorbingSetType, m: &MolsSet) -> Result<Vec<Vec<u32>>, ExistenceError> {
    let mapping = ty.mapping.as_ref().ok_or(ExistenceError::MappingRequired)?;
    check_arity(ty, m)?;
    if mapping.short().len() != m.m() + 2 {
        return Err(ExistenceError::MappingSize(mapping.short().len(), m.m() + 2));
    }
    let f = m.field();
    let alphas = m.alphas();
    let n = ty.system.num_points();
    let mut rows = Vec::new();
    for block in ty.system.blocks() {
        let at = block_by_group(block, &ty.colouring, mapping);
        for (i, &a) in alphas.iter().enumerate() {
            let mut row = vec![0u32; n];
            row[at[0]] = f.add(row[at[0]], a);
            row[at[1]] = f.add(row[at[1]], 1);
            row[at[i + 2]] = f.sub(row[at[i + 2]], 1);
            rows.push(row);
        }
    }
    Ok(rows)
}

fn check_arity(ty: &AbsorbingSetType, m: &MolsSet) -> Result<(), ExistenceError> {
    let k = ty.system.blocks().first().map_or(0, Vec::len);
    if k != m.m() + 2 {
        return Err(ExistenceError::Arity { k, need: k.saturating_sub(2), m: m.m() });
    }
    if ty.colouring.num_colours() != k {
        return Err(ExistenceError::ColourCount(ty.colouring.num_colours(), k));
    }
    if !m.is_reduced() {
        return Err(ExistenceError::NotReduced);
    }
    Ok(())
}

/// Point of `block` sent to each group.
fn block_by_group(block: &[usize], phi: &Colouring, pi: &ColourToGroupMapping) -> Vec<usize> {
    let mut at = vec![usize::MAX; block.len()];
    for &x in block {
        at[pi.group_of_colour(phi.colour(x))] = x;
    }
    at
}

pub fn find_instances(
    code: &ParityCheckMatrix,
    ty: &AbsorbingSetType,
) -> Result<Vec<AbsorbingInstance>, ExistenceError> {
    let m = code.origin().ok_or(ExistenceError::NoOrigin)?;
    check_arity(ty, m)?;
    let k = m.m() + 2;
    let mappings = match &ty.mapping {
        Some(p) => vec![p.clone()],
        None => colour_to_group_mappings(k),
    };
    let per: Vec<Result<Vec<AbsorbingInstance>, ExistenceError>> =
        mappings.par_iter().map(|p| instances_for_mapping(m, ty, p)).collect();
    let mut all: BTreeMap<Vec<usize>, AbsorbingInstance> = BTreeMap::new();
    for r in per {
        for inst in r? {
            all.entry(inst.bits.clone()).or_insert(inst);
        }
    }
    Ok(all.into_values().collect())
}

fn instances_for_mapping(
    m: &MolsSet,
    ty: &AbsorbingSetType,
    pi: &ColourToGroupMapping,
) -> Result<Vec<AbsorbingInstance>, ExistenceError> {
    let f = m.field();
    let q = f.order();
    let single =
        AbsorbingSetType { system: ty.system.clone(), colouring: ty.colouring.clone(), mapping: Some(pi.clone()) };
    let mut e = build_linear_system(&single, m)?;
    let n = ty.system.num_points();
    let group: Vec<usize> = (0..n).map(|x| pi.group_of_colour(ty.colouring.colour(x))).collect();
    // Pin the two coordinates of the first block; translations restore them.
    let first = block_by_group(&ty.system.blocks()[0], &ty.colouring, pi);
    for &x in &first[..2] {
        let mut row = vec![0u32; n];
        row[x] = 1;
        e.push(row);
    }
    let basis = f.solve_nullspace(&e, n);
    if basis.len() > MAX_QUOTIENT_DIM {
        return Err(ExistenceError::NullityTooLarge(basis.len()));
    }
    let classes = ty.colouring.classes();
    let alphas = m.alphas();
    let shift = |x: usize, a: u32, b: u32| -> u32 {
        match group[x] {
            0 => a,
            1 => b,
            g => f.add(f.mul(alphas[g - 2], a), b),
        }
    };
    let mut out = Vec::new();
    let total = (q as usize).pow(basis.len() as u32);
    let mut coeffs = vec![0u32; basis.len()];
    for idx in 0..total {
        let mut r = idx;
        for c in coeffs.iter_mut() {
            *c = (r % q as usize) as u32;
            r /= q as usize;
        }
        let mut v = vec![0u32; n];
        for (c, b) in coeffs.iter().zip(&basis) {
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi = f.add(*vi, f.mul(*c, *bi));
            }
        }
        if !classes.iter().all(|cls| distinct(cls.iter().map(|&x| v[x]))) {
            continue;
        }
        for a in 0..q {
            for b in 0..q {
                let values: Vec<u32> = (0..n).map(|x| f.add(v[x], shift(x, a, b))).collect();
                let mut bits: Vec<usize> = ty
                    .system
                    .blocks()
                    .iter()
                    .map(|blk| {
                        let at = block_by_group(blk, &ty.colouring, pi);
                        (values[at[0]] * q + values[at[1]]) as usize
                    })
                    .collect();
                bits.sort_unstable();
                out.push(AbsorbingInstance { bits, values, mapping: pi.short() });
            }
        }
    }
    Ok(out)
}

fn distinct(it: impl Iterator<Item = u32>) -> bool {
    let mut seen = BTreeSet::new();
    it.into_iter().all(|v| seen.insert(v))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceClass {
    pub a: usize,
    pub b: usize,
    pub is_absorbing: bool,
    pub is_fully: bool,
    pub is_elementary: bool,
}

/// Exact flags of a bit set per the absorbing, fully and elementary definitions.
pub fn classify_instance(code: &ParityCheckMatrix, bits: &[usize]) -> Result<InstanceClass, ExistenceError> {
    if bits.is_empty() {
        return Err(ExistenceError::EmptySet);
    }
    let mut deg: BTreeMap<usize, usize> = BTreeMap::new();
    for &v in bits {
        for &r in code.col(v) {
            *deg.entry(r).or_insert(0) += 1;
        }
    }
    let odd: BTreeSet<usize> = deg.iter().filter(|(_, &d)| d % 2 == 1).map(|(&r, _)| r).collect();
    let is_absorbing = bits.iter().all(|&v| {
        let o = code.col(v).iter().filter(|r| odd.contains(r)).count();
        2 * o < code.col(v).len()
    });
    let inside: BTreeSet<usize> = bits.iter().copied().collect();
    let mut hits: BTreeMap<usize, usize> = BTreeMap::new();
    for &r in &odd {
        for &v in code.row(r) {
            if !inside.contains(&v) {
                *hits.entry(v).or_insert(0) += 1;
            }
        }
    }
    let outside_ok = hits.iter().all(|(&v, &h)| 2 * h < code.col(v).len());
    Ok(InstanceClass {
        a: inside.len(),
        b: odd.len(),
        is_absorbing,
        is_fully: is_absorbing && outside_ok,
        is_elementary: deg.values().all(|&d| d <= 2),
    })
}

/// Set system formed by the bit nodes (blocks) over their neighbouring checks
/// (points), and the group of each point.
pub fn induced_system(code: &ParityCheckMatrix, bits: &[usize]) -> (SetSystem, Vec<u8>) {
    let q = code.origin().map_or(1, |m| m.field().order() as usize);
    let rows: BTreeSet<usize> = bits.iter().flat_map(|&v| code.col(v).iter().copied()).collect();
    let rows: Vec<usize> = rows.into_iter().collect();
    let blocks = bits.iter().map(|&v| code.col(v).iter().map(|r| rows.binary_search(r).unwrap()).collect()).collect();
    let groups = rows.iter().map(|r| (r / q) as u8).collect();
    (SetSystem::new(rows.len(), blocks).expect("bit set induces a set system"), groups)
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FoundSet {
    pub bits: Vec<usize>,
    pub a: usize,
    pub b: usize,
}

/// All absorbing sets of size at most `a_max`, found by walking connected
/// bit-node subsets.
pub fn brute_force_search(code: &ParityCheckMatrix, a_max: usize) -> Result<Vec<FoundSet>, ExistenceError> {
    let q = code.origin().map_or(0, |m| m.field().order());
    if a_max > 6 || q > 13 || code.cols() > 169 {
        return Err(ExistenceError::SearchTooLarge(a_max, q));
    }
    let n = code.cols();
    let girth_ok = code.max_column_overlap() <= 1;
    let nbrs: Vec<Vec<usize>> = (0..n)
        .map(|v| {
            let mut s: Vec<usize> =
                code.col(v).iter().flat_map(|&r| code.row(r).iter().copied()).filter(|&u| u != v).collect();
            s.sort_unstable();
            s.dedup();
            s
        })
        .collect();
    let per_root: Vec<Vec<FoundSet>> = (0..n)
        .into_par_iter()
        .map(|v| {
            let mut st = Esu {
                code,
                nbrs: &nbrs,
                a_max,
                root: v,
                sub: vec![v],
                near: vec![0u16; n],
                check_deg: vec![0u8; code.rows()],
                out: Vec::new(),
                prune: girth_ok,
            };
            st.add(v);
            let ext: Vec<usize> = nbrs[v].iter().copied().filter(|&u| u > v).collect();
            st.record();
            st.extend(ext);
            st.out
        })
        .collect();
    let mut all: Vec<FoundSet> = per_root.into_iter().flatten().collect();
    all.sort();
    Ok(all)
}

struct Esu<'a> {
    code: &'a ParityCheckMatrix,
    nbrs: &'a [Vec<usize>],
    a_max: usize,
    root: usize,
    sub: Vec<usize>,
    /// How many members of `sub` are equal or adjacent to each bit.
    near: Vec<u16>,
    check_deg: Vec<u8>,
    out: Vec<FoundSet>,
    prune: bool,
}

impl Esu<'_> {
    fn add(&mut self, v: usize) {
        self.near[v] += 1;
        for &u in &self.nbrs[v] {
            self.near[u] += 1;
        }
        for &r in self.code.col(v) {
            self.check_deg[r] += 1;
        }
    }

    fn remove(&mut self, v: usize) {
        self.near[v] -= 1;
        for &u in &self.nbrs[v] {
            self.near[u] -= 1;
        }
        for &r in self.code.col(v) {
            self.check_deg[r] -= 1;
        }
    }

    fn record(&mut self) {
        let absorbing = self.sub.iter().all(|&v| {
            let col = self.code.col(v);
            let odd = col.iter().filter(|&&r| self.check_deg[r] % 2 == 1).count();
            2 * odd < col.len()
        });
        if absorbing {
            let mut rows: Vec<usize> = self.sub.iter().flat_map(|&v| self.code.col(v).iter().copied()).collect();
            rows.sort_unstable();
            rows.dedup();
            let b = rows.iter().filter(|&&r| self.check_deg[r] % 2 == 1).count();
            let mut bits = self.sub.clone();
            bits.sort_unstable();
            self.out.push(FoundSet { a: bits.len(), bits, b });
        }
    }

    /// Without 4-cycles every further bit touches at most one check of a
    /// member, so a member with too many odd checks can never recover.
    fn hopeless(&self) -> bool {
        let left = self.a_max - self.sub.len();
        self.prune
            && self.sub.iter().any(|&v| {
                let col = self.code.col(v);
                let odd = col.iter().filter(|&&r| self.check_deg[r] % 2 == 1).count();
                2 * odd.saturating_sub(left) >= col.len()
            })
    }

    fn extend(&mut self, mut ext: Vec<usize>) {
        if self.sub.len() == self.a_max || self.hopeless() {
            return;
        }
        while let Some(w) = ext.pop() {
            let mut next = ext.clone();
            for &u in &self.nbrs[w] {
                if u > self.root && self.near[u] == 0 {
                    next.push(u);
                }
            }
            self.sub.push(w);
            self.add(w);
            self.record();
            self.extend(next);
            self.remove(w);
            self.sub.pop();
        }
    }
}

/// One row of the constraint table: `poly(alpha1, alpha2) != 0` or `char != p`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintPredicate {
    /// Terms `(coefficient, exponent of alpha1, exponent of alpha2)`.
    NonZero(Vec<(i64, u32, u32)>),
    CharNot(u32),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintLabel {
    pub id: u8,
    pub predicate: ConstraintPredicate,
}

impl ConstraintLabel {
    pub fn name(&self) -> String {
        format!("C{}", self.id)
    }

    /// True when the constraint holds.
    pub fn holds(&self, q: u32, a1: u32, a2: u32) -> bool {
        match &self.predicate {
            ConstraintPredicate::CharNot(p) => q != *p,
            ConstraintPredicate::NonZero(terms) => {
                let f = PrimeField::new(q as u64).expect("prime order");
                let v = terms.iter().fold(0u32, |acc, &(c, e1, e2)| {
                    let t = f.mul(f.mul(f.reduce(c), f.pow(a1, e1 as u64)), f.pow(a2, e2 as u64));
                    f.add(acc, t)
                });
                v != 0
            }
        }
    }

    pub fn describe(&self) -> String {
        match &self.predicate {
            ConstraintPredicate::CharNot(p) => format!("char != {p}"),
            ConstraintPredicate::NonZero(terms) => format!("{} != 0", render_terms(terms)),
        }
    }
}

pub(crate) fn render_terms(terms: &[(i64, u32, u32)]) -> String {
    let mut s = String::new();
    for (i, &(c, e1, e2)) in terms.iter().enumerate() {
        let mut mono = String::new();
        for (name, e) in [("a1", e1), ("a2", e2)] {
            if e > 0 {
                if !mono.is_empty() {
                    mono.push('*');
                }
                mono.push_str(name);
                if e > 1 {
                    mono.push_str(&format!("^{e}"));
                }
            }
        }
        let mag = c.unsigned_abs();
        let body = match (mag, mono.is_empty()) {
            (_, true) => mag.to_string(),
            (1, false) => mono,
            (_, false) => format!("{mag}*{mono}"),
        };
        if i == 0 {
            if c < 0 {
                s.push('-');
            }
        } else {
            s.push_str(if c < 0 { " - " } else { " + " });
        }
        s.push_str(&body);
    }
    if s.is_empty() {
        s.push('0');
    }
    s
}

/// The constraints C1 to C28 for two squares.
pub fn constraint_table() -> Vec<ConstraintLabel> {
    use ConstraintPredicate::*;
    let lin = |a: i64, b: i64| NonZero(vec![(a, 1, 0), (b, 0, 1)]);
    let quad = |a: i64, b: i64, c: i64| NonZero(vec![(a, 2, 0), (b, 1, 1), (c, 0, 2)]);
    let preds = vec![
        lin(1, 1),
        lin(2, -1),
        lin(1, -2),
        CharNot(2),
        quad(1, 1, -1),
        quad(-1, 1, 1),
        quad(1, -3, 1),
        quad(1, -1, 1),
        CharNot(3),
        lin(3, -2),
        lin(2, -3),
        lin(1, 2),
        lin(2, 1),
        lin(1, -3),
        lin(3, -1),
        quad(1, 1, 1),
        CharNot(5),
        quad(3, -3, 1),
        quad(1, -3, 3),
        lin(3, -4),
        lin(4, -3),
        lin(1, -4),
        lin(4, -1),
        lin(1, 3),
        lin(3, 1),
        quad(1, 0, 1),
        quad(2, -2, 1),
        quad(1, -2, 2),
    ];
    preds.into_iter().enumerate().map(|(i, predicate)| ConstraintLabel { id: i as u8 + 1, predicate }).collect()
}

/// Ids of the constraints that fail for `(q, a1, a2)`.
pub fn eval_constraints(q: u32, a1: u32, a2: u32) -> Vec<u8> {
    constraint_table().iter().filter(|c| !c.holds(q, a1, a2)).map(|c| c.id).collect()
}

/// Constraints whose joint satisfaction is recommended when picking two squares.
pub fn is_recommended(q: u32, a1: u32, a2: u32) -> bool {
    eval_constraints(q, a1, a2).iter().all(|&c| c == 17 || c > 25)
}

/// CSV of all constraint evaluations over ordered pairs of distinct nonzero scale factors.
pub fn constraint_grid_csv(q: u32) -> String {
    let table = constraint_table();
    let mut s = String::from("alpha1,alpha2");
    for c in &table {
        s.push_str(&format!(",{}", c.name()));
    }
    s.push('\n');
    for a1 in 1..q {
        for a2 in 1..q {
            if a1 == a2 {
                continue;
            }
            s.push_str(&format!("{a1},{a2}"));
            for c in &table {
                s.push_str(if c.holds(q, a1, a2) { ",1" } else { ",0" });
            }
            s.push('\n');
        }
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Eliminated,
    Present,
}

/// Elimination verdicts for the block-size-3 candidates with up to six blocks,
/// which depend only on the characteristic.
pub fn expected_spectrum_k3(q: u32) -> BTreeMap<String, Verdict> {
    let rule = |label: &str| -> bool {
        match label {
            "(4,0)" | "(6,0){1}" => q != 2,
            "(4,2)" | "(6,2){3}" | "(6,2){4}" | "(6,2){5}" => q == 2,
            "(6,2){1}" => q != 3,
            "(6,2){2}" => q == 2 || q == 3,
            "(6,2){6}" => true,
            _ => false,
        }
    };
    const LABELS: [&str; 23] = [
        "(3,3)", "(4,0)", "(4,2)", "(4,4)", "(5,3){1}", "(5,3){2}", "(5,5)", "(6,0){1}", "(6,0){2}", "(6,2){1}",
        "(6,2){2}", "(6,2){3}", "(6,2){4}", "(6,2){5}", "(6,2){6}", "(6,4){1}", "(6,4){2}", "(6,4){3}", "(6,4){4}",
        "(6,4){5}", "(6,4){6}", "(6,6){1}", "(6,6){2}",
    ];
    LABELS.iter().map(|&l| (l.to_string(), if rule(l) { Verdict::Eliminated } else { Verdict::Present })).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::code_from_mols;

    fn code(q: u64, a: &[i64]) -> ParityCheckMatrix {
        code_from_mols(&MolsSet::reduced(PrimeField::new(q).unwrap(), a).unwrap())
    }

    fn fig2() -> SetSystem {
        SetSystem::from_one_based(&[&[1, 2, 3, 4], &[1, 5, 6, 7], &[2, 5, 8, 9], &[3, 6, 8, 10]]).unwrap()
    }

    #[test]
    fn violations_from_the_table() {
        assert_eq!(eval_constraints(13, 1, 2), vec![2]);
        assert_eq!(eval_constraints(13, 1, 4), vec![8, 20, 23, 24]);
        assert_eq!(eval_constraints(13, 1, 12), vec![1]);
    }

    #[test]
    fn linear_system_shape() {
        let s = fig2();
        let phi = Colouring::from_classes(&s, &[&[1, 8], &[2, 6], &[3, 7, 9], &[4, 5, 10]]).unwrap();
        let pi = ColourToGroupMapping::from_short(&[1, 4, 2, 3]).unwrap();
        let m = MolsSet::reduced(PrimeField::new(13).unwrap(), &[1, 2]).unwrap();
        let ty = AbsorbingSetType { system: s, colouring: phi, mapping: Some(pi) };
        let e = build_linear_system(&ty, &m).unwrap();
        assert_eq!(e.len(), 8);
        // alpha_1 p1 + p4 - p2 = 0
        assert_eq!((e[0][0], e[0][3], e[0][1]), (1, 1, 12));
        assert_eq!((e[1][0], e[1][3], e[1][2]), (2, 1, 12));
        let one = SetSystem::from_one_based(&[&[1, 2, 3]]).unwrap();
        let phi = Colouring::from_classes(&one, &[&[1], &[2], &[3]]).unwrap();
        let ty = AbsorbingSetType {
            system: one,
            colouring: phi,
            mapping: Some(ColourToGroupMapping::from_short(&[1, 2, 3]).unwrap()),
        };
        let m1 = MolsSet::reduced(PrimeField::new(5).unwrap(), &[3]).unwrap();
        assert_eq!(build_linear_system(&ty, &m1).unwrap(), vec![vec![3, 1, 4]]);
    }

    #[test]
    fn instance_flags() {
        let h = code(13, &[1, 2]);
        let s = fig2();
        let phi = Colouring::from_classes(&s, &[&[1, 8], &[2, 6], &[3, 7, 9], &[4, 5, 10]]).unwrap();
        let ty = AbsorbingSetType { system: s, colouring: phi, mapping: None };
        let found = find_instances(&h, &ty).unwrap();
        assert!(!found.is_empty());
        for inst in found.iter().take(20) {
            let c = classify_instance(&h, &inst.bits).unwrap();
            assert_eq!((c.a, c.b, c.is_absorbing), (4, 4, true));
        }
        assert!(classify_instance(&h, &[]).is_err());
    }

    #[test]
    fn k3_spectrum_rows() {
        let s13 = expected_spectrum_k3(13);
        assert_eq!(s13["(4,0)"], Verdict::Eliminated);
        assert_eq!(s13["(4,2)"], Verdict::Present);
        assert_eq!(expected_spectrum_k3(2)["(4,2)"], Verdict::Eliminated);
        assert_eq!(expected_spectrum_k3(7)["(6,2){1}"], Verdict::Eliminated);
    }
}
