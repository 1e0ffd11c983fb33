use super::context::{Atom, Ctx, Status};
use super::poly::{modp, SymPoly, UniPoly};
use crate::existence::{constraint_table, ConstraintPredicate};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// `atom != 0` when `nonzero`, otherwise `atom == 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Lit {
    pub atom: Atom,
    pub nonzero: bool,
}

impl Lit {
    pub fn negated(&self) -> Lit {
        Lit { atom: self.atom.clone(), nonzero: !self.nonzero }
    }

    pub fn eval(&self, q: u64, alphas: &[u64]) -> bool {
        (self.atom.eval(q, alphas) != 0) == self.nonzero
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Formula {
    True,
    False,
    Lit(Lit),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

impl Formula {
    pub fn from_dnf(dnf: &[Vec<Lit>]) -> Formula {
        let conj = |c: &Vec<Lit>| match c.len() {
            0 => Formula::True,
            1 => Formula::Lit(c[0].clone()),
            _ => Formula::And(c.iter().cloned().map(Formula::Lit).collect()),
        };
        match dnf.len() {
            0 => Formula::False,
            1 => conj(&dnf[0]),
            _ => {
                if dnf.iter().any(|c| c.is_empty()) {
                    Formula::True
                } else {
                    Formula::Or(dnf.iter().map(conj).collect())
                }
            }
        }
    }

    /// Conjunction with the trivial parts dropped.
    pub fn and(parts: Vec<Formula>) -> Formula {
        let mut out: Vec<Formula> = Vec::new();
        for p in parts {
            match p {
                Formula::True => {}
                Formula::False => return Formula::False,
                Formula::And(v) => out.extend(v),
                other => {
                    if !out.contains(&other) {
                        out.push(other)
                    }
                }
            }
        }
        match out.len() {
            0 => Formula::True,
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }

    pub fn eval(&self, q: u64, alphas: &[u64]) -> bool {
        match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Lit(l) => l.eval(q, alphas),
            Formula::And(v) => v.iter().all(|f| f.eval(q, alphas)),
            Formula::Or(v) => v.iter().any(|f| f.eval(q, alphas)),
        }
    }

    /// Infix form; atoms matching a tabulated constraint use its label.
    pub fn render(&self) -> String {
        self.render_inner(true, true)
    }

    /// Infix form with every atom written out.
    pub fn render_plain(&self) -> String {
        self.render_inner(true, false)
    }

    fn render_inner(&self, top: bool, labels: bool) -> String {
        match self {
            Formula::True => "true".into(),
            Formula::False => "false".into(),
            Formula::Lit(l) if labels => render_lit(l),
            Formula::Lit(l) => render_lit_plain(l),
            Formula::And(v) => v.iter().map(|f| f.render_inner(false, labels)).collect::<Vec<_>>().join(" ∧ "),
            Formula::Or(v) => {
                let s = v
                    .iter()
                    .map(|f| match f {
                        Formula::And(_) if v.len() > 1 => format!("({})", f.render_inner(false, labels)),
                        _ => f.render_inner(false, labels),
                    })
                    .collect::<Vec<_>>()
                    .join(" ∨ ");
                if top {
                    s
                } else {
                    format!("({s})")
                }
            }
        }
    }
}

/// Atom for each tabulated constraint, keyed by its label.
pub fn constraint_atoms() -> Vec<(String, Atom)> {
    constraint_table()
        .into_iter()
        .map(|c| {
            let atom = match &c.predicate {
                ConstraintPredicate::CharNot(p) => Atom::Char(*p as u64),
                ConstraintPredicate::NonZero(terms) => {
                    let deg = terms.iter().map(|t| t.2 as usize).max().unwrap_or(0);
                    let mut v = vec![0i128; deg + 1];
                    for &(c, _, e2) in terms {
                        v[e2 as usize] += c as i128;
                    }
                    Atom::Poly(UniPoly::new(v).primitive())
                }
            };
            (c.name(), atom)
        })
        .collect()
}

pub fn render_lit(l: &Lit) -> String {
    thread_local! {
        static TABLE: Vec<(String, Atom)> = constraint_atoms();
    }
    let label = TABLE.with(|t| t.iter().find(|(_, a)| *a == l.atom).map(|(n, _)| n.clone()));
    match (label, &l.atom) {
        (Some(n), _) => {
            if l.nonzero {
                n
            } else {
                format!("¬{n}")
            }
        }
        (None, _) => render_lit_plain(l),
    }
}

pub fn render_lit_plain(l: &Lit) -> String {
    let op = if l.nonzero { "!=" } else { "=" };
    match &l.atom {
        Atom::Char(p) => format!("char {op} {p}"),
        Atom::Poly(u) => format!("{} {op} 0", SymPoly::homogenize(u, 2)),
    }
}

type Conj = BTreeSet<Lit>;

fn atom_poly(a: &Atom) -> UniPoly {
    match a {
        Atom::Char(p) => UniPoly::constant(*p as i128),
        Atom::Poly(u) => u.clone(),
    }
}

/// Context holding every literal of `c`; `None` if they contradict.
fn context_of(c: &Conj, m: usize) -> Option<Ctx> {
    let mut ctx = Ctx::new(m);
    // Characteristic first so the polynomial literals are read in it.
    let mut lits: Vec<&Lit> = c.iter().collect();
    lits.sort_by_key(|l| !matches!(l.atom, Atom::Char(_)));
    for l in lits {
        if implied(&ctx, &l.negated()) {
            return None;
        }
        ctx.assume(&l.atom, l.nonzero);
        if !ctx.feasible() {
            return None;
        }
    }
    Some(ctx)
}

fn implied(ctx: &Ctx, l: &Lit) -> bool {
    match ctx.classify(&atom_poly(&l.atom)) {
        Status::NonZero => l.nonzero,
        Status::Zero => !l.nonzero,
        Status::Infeasible => true,
        _ => {
            let mut other = ctx.clone();
            other.assume(&l.atom, !l.nonzero);
            !other.feasible()
        }
    }
}

/// True when every model of `b` satisfies `a`.
fn entails(b: &Ctx, a: &Conj) -> bool {
    a.iter().all(|l| implied(b, l))
}

/// Drops literals implied by the rest of the conjunction.
fn tidy(c: Conj, m: usize) -> Conj {
    let mut c = c;
    loop {
        let redundant = c.iter().find(|l| {
            let mut rest = c.clone();
            rest.remove(*l);
            context_of(&rest, m).is_some_and(|ctx| implied(&ctx, l))
        });
        match redundant.cloned() {
            Some(l) => {
                c.remove(&l);
            }
            None => return c,
        }
    }
}

/// Removes contradictions, entailed terms and resolvable pairs. `m` is the
/// number of scale factors.
pub fn simplify_dnf(dnf: Vec<Vec<Lit>>, m: usize) -> Vec<Vec<Lit>> {
    let terms: Vec<Conj> = dnf
        .into_iter()
        .map(|c| c.into_iter().collect::<Conj>())
        .filter(|c| context_of(c, m).is_some())
        .map(|c| tidy(c, m))
        .collect();
    let terms = reduce(relabel_in_char(reduce(terms, m), m), m);
    let terms = reduce(strengthen(terms, m), m);
    terms.into_iter().map(|c| c.into_iter().collect()).collect()
}

/// Drops a literal from a term whenever the rest of the term already forces
/// the whole disjunction.
fn strengthen(mut terms: Vec<Conj>, m: usize) -> Vec<Conj> {
    if valid_under(&Ctx::new(m), &BTreeSet::new(), &terms, 0) {
        return vec![Conj::new()];
    }
    for i in 0..terms.len() {
        loop {
            let drop = terms[i].iter().find(|l| {
                let mut rest = terms[i].clone();
                rest.remove(*l);
                context_of(&rest, m).is_some_and(|ctx| valid_under(&ctx, &rest, &terms, 0))
            });
            match drop.cloned() {
                Some(l) => {
                    terms[i].remove(&l);
                }
                None => break,
            }
        }
    }
    terms
}

const MAX_SPLIT_DEPTH: usize = 12;

/// True when every model of `ctx` satisfies one of `terms`, by splitting on
/// undecided literals. `known` holds the literals already assumed.
fn valid_under(ctx: &Ctx, known: &Conj, terms: &[Conj], depth: usize) -> bool {
    let holds = |l: &Lit| known.contains(l) || implied(ctx, l);
    let mut open: Vec<&Conj> = Vec::new();
    for t in terms {
        if t.iter().all(holds) {
            return true;
        }
        if !t.iter().any(|l| holds(&l.negated())) {
            open.push(t);
        }
    }
    let Some(l) = open.first().and_then(|t| t.iter().find(|l| !holds(l))) else {
        return false;
    };
    if depth >= MAX_SPLIT_DEPTH {
        return false;
    }
    [l.clone(), l.negated()].into_iter().all(|b| {
        let mut c = ctx.clone();
        c.assume(&b.atom, b.nonzero);
        let mut k = known.clone();
        k.insert(b);
        !c.feasible() || valid_under(&c, &k, terms, depth + 1)
    })
}

fn reduce(mut terms: Vec<Conj>, m: usize) -> Vec<Conj> {
    terms.retain(|c| context_of(c, m).is_some());
    loop {
        terms.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
        terms.dedup();
        let ctxs: Vec<Ctx> = terms.iter().map(|t| context_of(t, m).expect("consistent")).collect();
        let mut alive = vec![true; terms.len()];
        for i in 0..terms.len() {
            if (0..terms.len()).any(|j| j != i && alive[j] && entails(&ctxs[i], &terms[j])) {
                alive[i] = false;
            }
        }
        terms = terms.into_iter().zip(alive).filter(|(_, a)| *a).map(|(t, _)| t).collect();
        let mut changed = false;
        'outer: for i in 0..terms.len() {
            for j in 0..terms.len() {
                if i == j {
                    continue;
                }
                // (A ∧ x) ∨ (B ∧ ¬x) with B ⊨ A gives (A ∧ x) ∨ B.
                for x in terms[i].iter() {
                    let nx = x.negated();
                    if !terms[j].contains(&nx) {
                        continue;
                    }
                    let mut a = terms[i].clone();
                    a.remove(x);
                    let mut b = terms[j].clone();
                    b.remove(&nx);
                    if context_of(&b, m).is_some_and(|ctx| entails(&ctx, &a)) {
                        terms[j] = tidy(b, m);
                        changed = true;
                        break 'outer;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    terms.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    terms
}

/// Within a term that fixes the characteristic, replaces each polynomial atom
/// by the lowest-numbered tabulated atom with the same zeros there. A lone
/// `char != p` term lets the other terms be read in characteristic `p`.
fn relabel_in_char(terms: Vec<Conj>, m: usize) -> Vec<Conj> {
    let lone: Vec<u64> = terms
        .iter()
        .filter(|t| t.len() == 1)
        .filter_map(|t| match t.iter().next() {
            Some(Lit { atom: Atom::Char(p), nonzero: true }) => Some(*p),
            _ => None,
        })
        .collect();
    let table = constraint_atoms();
    let mut out: Vec<Conj> = Vec::new();
    for t in terms {
        let fixed = t.iter().find_map(|l| match l.atom {
            Atom::Char(p) if !l.nonzero => Some(p),
            _ => None,
        });
        let (p, borrowed) = match (fixed, lone.as_slice()) {
            (Some(p), _) => (p, false),
            (None, [p]) if !(t.len() == 1 && t.contains(&Lit { atom: Atom::Char(*p), nonzero: true })) => (*p, true),
            _ => {
                out.push(t);
                continue;
            }
        };
        let units = if m == 2 { modp::mul(&[0, 1], &[p - 1, 1], p) } else { vec![1] };
        let zeros = |u: &UniPoly| modp::radical(&modp::strip(u.to_modp(p), &units, p), p);
        let canon = |u: &UniPoly| -> UniPoly {
            let red = zeros(u);
            table
                .iter()
                .filter_map(|(_, a)| match a {
                    Atom::Poly(v) if zeros(v) == red => Some(v.clone()),
                    _ => None,
                })
                .next()
                .unwrap_or_else(|| u.clone())
        };
        let mut nt: Conj = t
            .iter()
            .map(|l| match &l.atom {
                Atom::Poly(u) => Lit { atom: Atom::Poly(canon(u)), nonzero: l.nonzero },
                _ => l.clone(),
            })
            .collect();
        if !borrowed {
            nt = tidy(nt, m);
        }
        out.push(nt);
    }
    out.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lit(a: i128, b: i128, nz: bool) -> Lit {
        Lit { atom: Atom::Poly(UniPoly::linear(b, a).primitive()), nonzero: nz }
    }

    #[test]
    fn resolution_and_absorption() {
        let x = lit(1, 1, true);
        let y = lit(2, -1, true);
        let dnf = vec![vec![x.clone(), y.clone()], vec![x.negated(), y.clone()], vec![y.clone(), lit(3, 1, true)]];
        assert_eq!(simplify_dnf(dnf, 2), vec![vec![y]]);
        let contra = vec![vec![x.clone(), x.negated()]];
        assert!(simplify_dnf(contra, 2).is_empty());
        // In characteristic 2 the constraint 2a1 - a2 != 0 always holds.
        let c2 = Lit { atom: Atom::Poly(UniPoly::linear(1, -2)), nonzero: true };
        let char2 = Lit { atom: Atom::Char(2), nonzero: false };
        assert_eq!(simplify_dnf(vec![vec![c2.clone()], vec![char2]], 2), vec![vec![c2]]);
    }

    #[test]
    fn labels() {
        let l = Lit { atom: Atom::Poly(UniPoly::linear(1, -2)), nonzero: true };
        assert_eq!(render_lit(&l), "C2");
        assert_eq!(render_lit(&Lit { atom: Atom::Char(2), nonzero: false }), "¬C4");
        assert_eq!(render_lit(&Lit { atom: Atom::Char(7), nonzero: true }), "char != 7");
    }
}
