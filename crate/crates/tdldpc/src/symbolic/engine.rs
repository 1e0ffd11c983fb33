//! Case-splitting elimination over the symbolic system E.

use super::context::{Atom, Ctx, Status};
use super::formula::{simplify_dnf, Formula, Lit};
use super::poly::{SymPoly, UniPoly};
use crate::setsystem::{colour_to_group_mappings, enumerate_colourings, ColourToGroupMapping, Colouring, SetSystem};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

pub const MAX_CASE_DEPTH: usize = 12;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SymbolicError {
    #[error("symbolic elimination supports one or two squares, got {0}")]
    TooManySquares(usize),
    #[error("colouring uses {0} colours but k = {1}")]
    ColourCount(usize, usize),
    #[error("mapping has {0} entries, expected {1}")]
    MappingSize(usize, usize),
    #[error("blocks must have exactly k = {0} points")]
    BlockSize(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    Root,
    /// Branch taken on an undetermined atom.
    Case(Lit),
    /// Assumption adopted without branching; the other side was an elimination.
    Assume(Lit),
    /// The type cannot occur once the literal (if any) holds on this path.
    Elim(Option<Lit>),
    /// Branch given up at the depth bound; counted as not eliminated.
    Aborted,
    /// No elimination on this path; `quotient_dim` is the solution dimension
    /// left after removing translations.
    Leaf {
        quotient_dim: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeNode {
    pub parent: Option<usize>,
    pub kind: NodeKind,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseTree {
    pub nodes: Vec<TreeNode>,
}

impl CaseTree {
    fn push(&mut self, parent: usize, kind: NodeKind) -> usize {
        self.nodes.push(TreeNode { parent: Some(parent), kind });
        self.nodes.len() - 1
    }

    pub fn children(&self, i: usize) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&j| self.nodes[j].parent == Some(i)).collect()
    }

    /// Case and assumption literals from the root down to `i`.
    pub fn path(&self, mut i: usize) -> Vec<Lit> {
        let mut out = Vec::new();
        while let Some(p) = self.nodes[i].parent {
            if let NodeKind::Case(l) | NodeKind::Assume(l) = &self.nodes[i].kind {
                out.push(l.clone());
            }
            i = p;
        }
        out.reverse();
        out
    }

    /// One conjunction per elimination node.
    pub fn dnf(&self) -> Vec<Vec<Lit>> {
        let mut out = Vec::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if let NodeKind::Elim(l) = &n.kind {
                let mut c = self.path(i);
                c.extend(l.iter().cloned());
                out.push(c);
            }
        }
        out
    }

    pub fn count(&self, f: impl Fn(&NodeKind) -> bool) -> usize {
        self.nodes.iter().filter(|n| f(&n.kind)).count()
    }

    /// Indented listing, one node per line.
    pub fn render(&self) -> String {
        let mut s = String::new();
        self.render_rec(0, 0, &mut s);
        s
    }

    fn render_rec(&self, i: usize, depth: usize, s: &mut String) {
        let label = match &self.nodes[i].kind {
            NodeKind::Root => "root".to_string(),
            NodeKind::Case(l) => format!("case {}", super::formula::render_lit(l)),
            NodeKind::Assume(l) => format!("assume {}", super::formula::render_lit(l)),
            NodeKind::Elim(None) => "eliminated".to_string(),
            NodeKind::Elim(Some(l)) => format!("eliminated if {}", super::formula::render_lit(l)),
            NodeKind::Aborted => "aborted".to_string(),
            NodeKind::Leaf { quotient_dim } => format!("survives (free dim {quotient_dim})"),
        };
        s.push_str(&format!("{}{}\n", "  ".repeat(depth), label));
        for c in self.children(i) {
            self.render_rec(c, depth + 1, s);
        }
    }
}

/// Result for one colouring and one mapping.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Derivation {
    pub mapping: Vec<u8>,
    pub tree: CaseTree,
    /// Conditions, in disjunctive normal form, under which the type is absent.
    pub dnf: Vec<Vec<Lit>>,
    pub formula: Formula,
    pub aborted: bool,
    /// Surviving leaves whose solution space has dimension two or more beyond
    /// translations. On tiny fields such a leaf may still be empty.
    pub wide_leaves: usize,
}

/// Result for one colouring over all mappings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColouringConstraint {
    pub colouring: Colouring,
    pub derivations: Vec<Derivation>,
    /// Conjunction over the mappings: the type is absent from the code.
    pub formula: Formula,
}

impl ColouringConstraint {
    /// Mappings grouped by their rendered formula, in order of first appearance.
    pub fn grouped(&self) -> Vec<(String, Vec<Vec<u8>>)> {
        let mut out: Vec<(String, Vec<Vec<u8>>)> = Vec::new();
        for d in &self.derivations {
            let r = d.formula.render();
            match out.iter_mut().find(|(s, _)| *s == r) {
                Some((_, v)) => v.push(d.mapping.clone()),
                None => out.push((r, vec![d.mapping.clone()])),
            }
        }
        out
    }

    pub fn eval(&self, q: u64, alphas: &[u64]) -> bool {
        self.formula.eval(q, alphas)
    }
}

fn check(system: &SetSystem, colouring: &Colouring, k: usize) -> Result<usize, SymbolicError> {
    let m =
        k.checked_sub(2).filter(|m| (1..=2).contains(m)).ok_or(SymbolicError::TooManySquares(k.saturating_sub(2)))?;
    if colouring.num_colours() > k {
        return Err(SymbolicError::ColourCount(colouring.num_colours(), k));
    }
    if system.blocks().iter().any(|b| b.len() != k) {
        return Err(SymbolicError::BlockSize(k));
    }
    Ok(m)
}

/// Rows of E with the scale factors kept symbolic.
pub fn symbolic_matrix(
    system: &SetSystem,
    colouring: &Colouring,
    mapping: &ColourToGroupMapping,
) -> Result<Vec<Vec<SymPoly>>, SymbolicError> {
    let k = mapping.short().len();
    let m = check(system, colouring, k)?;
    let n = system.num_points();
    let mut rows = Vec::new();
    for block in system.blocks() {
        let mut at = vec![0; k];
        for &x in block {
            at[mapping.group_of_colour(colouring.colour(x))] = x;
        }
        for i in 0..m {
            let mut row = vec![SymPoly::zero(m); n];
            row[at[0]] = row[at[0]].add(&SymPoly::var(m, i));
            row[at[1]] = row[at[1]].add(&SymPoly::constant(m, 1));
            row[at[i + 2]] = row[at[i + 2]].sub(&SymPoly::constant(m, 1));
            rows.push(row);
        }
    }
    Ok(rows)
}

#[derive(Clone)]
struct State {
    rows: Vec<Vec<UniPoly>>,
    pivots: Vec<usize>,
    ctx: Ctx,
    depth: usize,
}

struct Run<'a> {
    colours: &'a [u8],
    tree: CaseTree,
    aborted: bool,
    wide_leaves: usize,
}

enum Step4 {
    Always,
    Single(Atom),
    Split(Atom),
}

pub fn find_elimination_constraint(
    system: &SetSystem,
    colouring: &Colouring,
    mapping: &ColourToGroupMapping,
) -> Result<Derivation, SymbolicError> {
    let k = mapping.short().len();
    let m = check(system, colouring, k)?;
    let rows: Vec<Vec<UniPoly>> = symbolic_matrix(system, colouring, mapping)?
        .into_iter()
        .map(|r| r.into_iter().map(|e| e.dehomogenize().expect("at most two squares")).collect())
        .collect();
    let mut run = Run {
        colours: colouring.colours(),
        tree: CaseTree { nodes: vec![TreeNode { parent: None, kind: NodeKind::Root }] },
        aborted: false,
        wide_leaves: 0,
    };
    run.process(State { rows, pivots: Vec::new(), ctx: Ctx::new(m), depth: 0 }, 0);
    let dnf = simplify_dnf(run.tree.dnf(), m);
    Ok(Derivation {
        mapping: mapping.short(),
        formula: Formula::from_dnf(&dnf),
        dnf,
        tree: run.tree,
        aborted: run.aborted,
        wide_leaves: run.wide_leaves,
    })
}

/// Elimination constraints for every colouring of `system` with at most `k`
/// colours, over all mappings.
pub fn elimination_process(system: &SetSystem, k: usize) -> Result<Vec<ColouringConstraint>, SymbolicError> {
    if !(3..=4).contains(&k) {
        return Err(SymbolicError::TooManySquares(k.saturating_sub(2)));
    }
    let mappings = colour_to_group_mappings(k);
    enumerate_colourings(system, k).into_iter().map(|c| colouring_constraint(system, &c, &mappings)).collect()
}

pub fn colouring_constraint(
    system: &SetSystem,
    colouring: &Colouring,
    mappings: &[ColourToGroupMapping],
) -> Result<ColouringConstraint, SymbolicError> {
    let derivations: Vec<Derivation> =
        mappings.par_iter().map(|p| find_elimination_constraint(system, colouring, p)).collect::<Result<_, _>>()?;
    let formula = Formula::and(derivations.iter().map(|d| d.formula.clone()).collect());
    Ok(ColouringConstraint { colouring: colouring.clone(), derivations, formula })
}

fn atom_of(s: &Status) -> Option<Atom> {
    match s {
        Status::Open(a) => a.first().cloned(),
        Status::Split(a) => Some(a.clone()),
        _ => None,
    }
}

impl Run<'_> {
    fn branch(&mut self, st: State, node: usize, atom: Atom) {
        if st.depth >= MAX_CASE_DEPTH {
            self.aborted = true;
            self.tree.push(node, NodeKind::Aborted);
            return;
        }
        for nonzero in [false, true] {
            let mut child = st.clone();
            child.depth += 1;
            child.ctx.assume(&atom, nonzero);
            let id = self.tree.push(node, NodeKind::Case(Lit { atom: atom.clone(), nonzero }));
            if child.ctx.feasible() {
                self.process(child, id);
            }
        }
    }

    fn process(&mut self, mut st: State, mut node: usize) {
        loop {
            if !normalise(&mut st) {
                return;
            }
            match step4(&st, self.colours) {
                Some(Step4::Always) => {
                    self.tree.push(node, NodeKind::Elim(None));
                    return;
                }
                Some(Step4::Single(a)) => {
                    self.tree.push(node, NodeKind::Elim(Some(Lit { atom: a.clone(), nonzero: true })));
                    node = self.tree.push(node, NodeKind::Assume(Lit { atom: a.clone(), nonzero: false }));
                    st.ctx.assume(&a, false);
                    if !st.ctx.feasible() {
                        return;
                    }
                    continue;
                }
                Some(Step4::Split(a)) => return self.branch(st, node, a),
                None => {}
            }
            let eta = st.pivots.len();
            if eta == st.rows.len() {
                return self.leaf(st, node);
            }
            let n = st.rows[0].len();
            let free: Vec<usize> = (0..n).filter(|c| !st.pivots.contains(c)).collect();
            let pivot_col = free.iter().copied().find(|&c| {
                let mut any = false;
                for r in &st.rows[eta..] {
                    if r[c].is_zero() {
                        continue;
                    }
                    if st.ctx.classify(&r[c]) != Status::NonZero {
                        return false;
                    }
                    any = true;
                }
                any
            });
            match pivot_col {
                Some(c) => pivot(&mut st, c),
                None => {
                    let mut best: Option<(usize, UniPoly, Atom)> = None;
                    for &c in &free {
                        let open: Vec<(UniPoly, Atom)> = st.rows[eta..]
                            .iter()
                            .filter(|r| !r[c].is_zero())
                            .filter_map(|r| atom_of(&st.ctx.classify(&r[c])).map(|a| (r[c].clone(), a)))
                            .collect();
                        if let Some((e, a)) = open.iter().min_by(|x, y| x.0.cmp(&y.0)).cloned() {
                            if best.as_ref().is_none_or(|b| open.len() < b.0) {
                                best = Some((open.len(), e, a));
                            }
                        }
                    }
                    let (_, _, atom) = best.expect("nonzero row without a pivot candidate");
                    return self.branch(st, node, atom);
                }
            }
        }
    }

    fn leaf(&mut self, mut st: State, mut node: usize) {
        back_substitute(&mut st);
        let n = st.rows.first().map_or(0, |r| r.len());
        let free: Vec<usize> = (0..n).filter(|c| !st.pivots.contains(c)).collect();
        loop {
            let mut todo: Option<Result<BTreeSet<Atom>, Atom>> = None;
            'pairs: for x in 0..n {
                for y in x + 1..n {
                    if self.colours[x] != self.colours[y] {
                        continue;
                    }
                    let nums = difference(&st, &free, x, y);
                    let Some(nums) = nums else { continue };
                    let stats: Vec<Status> = nums.iter().map(|e| st.ctx.classify(e)).collect();
                    if stats.contains(&Status::Infeasible) {
                        return;
                    }
                    if stats.contains(&Status::NonZero) {
                        continue;
                    }
                    if stats.iter().all(|s| *s == Status::Zero) {
                        self.tree.push(node, NodeKind::Elim(None));
                        return;
                    }
                    let mut common: Option<BTreeSet<Atom>> = None;
                    for s in &stats {
                        match s {
                            Status::Zero => {}
                            Status::Split(a) => {
                                todo = Some(Err(a.clone()));
                                break 'pairs;
                            }
                            Status::Open(a) => {
                                let set: BTreeSet<Atom> = a.iter().cloned().collect();
                                common = Some(match common {
                                    None => set,
                                    Some(c) => c.intersection(&set).cloned().collect(),
                                });
                            }
                            _ => unreachable!(),
                        }
                    }
                    let common = common.unwrap_or_default();
                    todo = Some(if common.is_empty() {
                        Err(stats.iter().find_map(atom_of).expect("open entry"))
                    } else {
                        Ok(common)
                    });
                    break 'pairs;
                }
            }
            match todo {
                None => {
                    let dim = free.len().saturating_sub(2);
                    if dim >= 2 {
                        self.wide_leaves += 1;
                    }
                    self.tree.push(node, NodeKind::Leaf { quotient_dim: dim });
                    return;
                }
                Some(Ok(atoms)) => {
                    for a in atoms {
                        self.tree.push(node, NodeKind::Elim(Some(Lit { atom: a.clone(), nonzero: false })));
                        node = self.tree.push(node, NodeKind::Assume(Lit { atom: a.clone(), nonzero: true }));
                        st.ctx.assume(&a, true);
                    }
                    if !st.ctx.feasible() {
                        return;
                    }
                }
                Some(Err(a)) => return self.branch(st, node, a),
            }
        }
    }
}

/// Looks for a row `l * (p_x - p_y)` with `x`, `y` of the same colour.
fn step4(st: &State, colours: &[u8]) -> Option<Step4> {
    let mut found: Option<Step4> = None;
    for row in &st.rows {
        let nz: Vec<usize> = (0..row.len()).filter(|&c| !row[c].is_zero()).collect();
        if nz.len() != 2 || colours[nz[0]] != colours[nz[1]] || row[nz[0]] != row[nz[1]].neg() {
            continue;
        }
        let step = match st.ctx.classify(&row[nz[0]]) {
            Status::NonZero => return Some(Step4::Always),
            Status::Open(a) if a.len() == 1 => Step4::Single(a[0].clone()),
            Status::Open(a) => Step4::Split(a[0].clone()),
            Status::Split(a) => Step4::Split(a),
            Status::Zero | Status::Infeasible => continue,
        };
        found = match (found, step) {
            (None, s) => Some(s),
            (Some(Step4::Split(_)), s @ Step4::Single(_)) => Some(s),
            (f, _) => f,
        };
    }
    found
}

/// Zeroes determined entries, divides out units, drops empty non-pivot rows.
fn normalise(st: &mut State) -> bool {
    let eta = st.pivots.len();
    for row in st.rows.iter_mut() {
        for e in row.iter_mut() {
            if e.is_zero() {
                continue;
            }
            match st.ctx.classify(e) {
                Status::Zero => *e = UniPoly::zero(),
                Status::Infeasible => return false,
                _ => {}
            }
        }
        divide_row(row, &st.ctx);
    }
    let mut i = eta;
    while i < st.rows.len() {
        if st.rows[i].iter().all(|e| e.is_zero()) {
            st.rows.remove(i);
        } else {
            i += 1;
        }
    }
    true
}

fn divide_row(row: &mut [UniPoly], ctx: &Ctx) {
    if row.iter().all(|e| e.is_zero()) {
        return;
    }
    if let Some(p) = ctx.char_fixed() {
        for e in row.iter_mut() {
            *e = e.reduce_mod(p);
        }
    }
    for f in ctx.unit_polys() {
        while row.iter().all(|e| e.div_exact(f).is_some()) && row.iter().any(|e| !e.is_zero()) {
            for e in row.iter_mut() {
                *e = e.div_exact(f).unwrap();
            }
        }
    }
    let g = row.iter().fold(0i128, |g, e| super::poly::gcd(g, e.content()));
    for r in super::poly::prime_factors(g) {
        if !ctx.unit_integer(r as i128) {
            continue;
        }
        while row.iter().all(|e| e.content() % r as i128 == 0) {
            for e in row.iter_mut() {
                *e = UniPoly::new(e.coeffs().iter().map(|c| c / r as i128).collect());
            }
        }
    }
    if let Some(p) = ctx.char_fixed() {
        // Scale so the leading entry has leading coefficient 1 mod p.
        let lead = row.iter().find(|e| !e.is_zero()).unwrap().lc().rem_euclid(p as i128) as u64;
        let inv = (1..p).find(|i| i * lead % p == 1).unwrap_or(1) as i128;
        for e in row.iter_mut() {
            *e = e.scale(inv).reduce_mod(p);
        }
    } else if row.iter().find(|e| !e.is_zero()).is_some_and(|e| e.lc() < 0) {
        for e in row.iter_mut() {
            *e = e.neg();
        }
    }
}

/// Records the pivot's factors as nonzero so later rows can be divided by them.
fn remember_pivot(st: &mut State, e: &UniPoly) {
    for (f, _) in e.factor().1 {
        if !st.ctx.unit_polys().contains(&f) {
            st.ctx.assume(&Atom::Poly(f), true);
        }
    }
}

fn pivot(st: &mut State, c: usize) {
    let eta = st.pivots.len();
    let r = (eta..st.rows.len()).find(|&r| !st.rows[r][c].is_zero()).expect("pivot row");
    st.rows.swap(eta, r);
    let p = st.rows[eta][c].clone();
    remember_pivot(st, &p);
    let prow = st.rows[eta].clone();
    for r in eta + 1..st.rows.len() {
        let e = st.rows[r][c].clone();
        if e.is_zero() {
            continue;
        }
        let new: Vec<UniPoly> = st.rows[r].iter().zip(&prow).map(|(a, b)| a.mul(&p).sub(&b.mul(&e))).collect();
        st.rows[r] = new;
        divide_row(&mut st.rows[r], &st.ctx);
    }
    st.pivots.push(c);
}

fn back_substitute(st: &mut State) {
    for i in (0..st.pivots.len()).rev() {
        let c = st.pivots[i];
        let p = st.rows[i][c].clone();
        let prow = st.rows[i].clone();
        for r in 0..i {
            let e = st.rows[r][c].clone();
            if e.is_zero() {
                continue;
            }
            let new: Vec<UniPoly> = st.rows[r].iter().zip(&prow).map(|(a, b)| a.mul(&p).sub(&b.mul(&e))).collect();
            st.rows[r] = new;
            for e in st.rows[r].iter_mut() {
                if !e.is_zero() && st.ctx.classify(e) == Status::Zero {
                    *e = UniPoly::zero();
                }
            }
            divide_row(&mut st.rows[r], &st.ctx);
        }
    }
}

/// Numerators of `p_x - p_y` in terms of the free unknowns; `None` when the
/// difference is a nonzero constant combination of free unknowns.
fn difference(st: &State, free: &[usize], x: usize, y: usize) -> Option<Vec<UniPoly>> {
    let row_of = |v: usize| st.pivots.iter().position(|&c| c == v);
    let delta = |f: usize, v: usize, e: &UniPoly| if f == v { e.clone() } else { UniPoly::zero() };
    Some(match (row_of(x), row_of(y)) {
        (None, None) => return None,
        (Some(i), Some(j)) => {
            let (pi, pj) = (&st.rows[i][x], &st.rows[j][y]);
            free.iter().map(|&f| st.rows[j][f].mul(pi).sub(&st.rows[i][f].mul(pj))).collect()
        }
        (Some(i), None) => {
            let pi = &st.rows[i][x];
            free.iter().map(|&f| st.rows[i][f].add(&delta(f, y, pi))).collect()
        }
        (None, Some(j)) => {
            let pj = &st.rows[j][y];
            free.iter().map(|&f| st.rows[j][f].add(&delta(f, x, pj))).collect()
        }
    })
}
