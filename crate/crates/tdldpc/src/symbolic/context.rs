//! Deciding whether an entry is zero, nonzero or undetermined under a set of
//! assumptions about the scale factors and the field characteristic.

use super::poly::{is_prime_power, modp, prime_factors, SymPoly, UniPoly};
use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap};
use std::fmt;

/// Either a primitive irreducible polynomial in `s` or a prime `p`; the prime
/// stands for the statement "p vanishes in the field", i.e. char = p.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Atom {
    Poly(UniPoly),
    Char(u64),
}

impl Atom {
    /// Value of the homogenized atom at `(a1, a2)` over F_q.
    pub fn eval(&self, q: u64, alphas: &[u64]) -> u64 {
        match self {
            Atom::Char(p) => {
                if q == *p {
                    0
                } else {
                    (*p % q).max(1)
                }
            }
            Atom::Poly(f) => SymPoly::homogenize(f, alphas.len().max(1)).eval_mod(q, alphas),
        }
    }

    pub fn homogenized(&self, m: usize) -> SymPoly {
        match self {
            Atom::Char(p) => SymPoly::constant(m, *p as i128),
            Atom::Poly(f) => SymPoly::homogenize(f, m),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Char(p) => write!(f, "{p}"),
            Atom::Poly(u) => write!(f, "{}", SymPoly::homogenize(u, 2)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    Zero,
    NonZero,
    /// Zero exactly when one of the atoms vanishes.
    Open(Vec<Atom>),
    /// Undecidable before the atom is settled.
    Split(Atom),
    /// The assumptions admit no field element.
    Infeasible,
}

#[derive(Clone, Debug)]
pub struct Ctx {
    char_fixed: Option<u64>,
    excluded: BTreeSet<u64>,
    zeros: Vec<UniPoly>,
    nonzeros: Vec<UniPoly>,
    cache: RefCell<HashMap<UniPoly, Status>>,
}

impl Ctx {
    pub fn new(m: usize) -> Self {
        let nonzeros = if m == 2 { vec![UniPoly::s(), UniPoly::linear(1, -1)] } else { Vec::new() };
        Self { char_fixed: None, excluded: BTreeSet::new(), zeros: Vec::new(), nonzeros, cache: RefCell::default() }
    }

    pub fn assume(&mut self, atom: &Atom, nonzero: bool) {
        self.cache.borrow_mut().clear();
        match (atom, nonzero) {
            (Atom::Char(p), true) => {
                self.excluded.insert(*p);
            }
            (Atom::Char(p), false) => self.char_fixed = Some(*p),
            (Atom::Poly(f), true) => self.nonzeros.push(f.clone()),
            (Atom::Poly(f), false) => {
                self.zeros.push(f.clone());
                self.zeros.sort();
            }
        }
    }

    /// Polynomials an equation may be divided by.
    pub fn unit_polys(&self) -> &[UniPoly] {
        &self.nonzeros
    }

    pub fn char_fixed(&self) -> Option<u64> {
        self.char_fixed
    }

    /// True when the integer `n` is invertible under the assumptions.
    pub fn unit_integer(&self, n: i128) -> bool {
        if n == 0 {
            return false;
        }
        match self.char_fixed {
            Some(p) => n % p as i128 != 0,
            None => prime_factors(n).iter().all(|p| self.excluded.contains(p)),
        }
    }

    pub fn feasible(&self) -> bool {
        match self.char_fixed {
            Some(p) => {
                if self.excluded.contains(&p) {
                    return false;
                }
                match self.effective_zero_poly(p) {
                    Some(z) => z.len() > 1,
                    None => true,
                }
            }
            None => self.feasible_free(),
        }
    }

    // With a linear zero every other assumption is decided by an integer
    // norm; nonzero norms pin the characteristic to their common primes.
    fn feasible_free(&self) -> bool {
        let Some(f) = self.zeros.first().filter(|f| f.degree() == Some(1)) else {
            return true;
        };
        let c = f.coeffs();
        let norm = |g: &UniPoly| g.eval_scaled(-c[0], c[1]);
        let mut primes: Option<BTreeSet<u64>> = None;
        for g in &self.zeros[1..] {
            let n = norm(g);
            if n != 0 {
                let ps: BTreeSet<u64> = prime_factors(n).into_iter().filter(|p| !self.excluded.contains(p)).collect();
                primes = Some(match primes {
                    Some(old) => old.intersection(&ps).copied().collect(),
                    None => ps,
                });
            }
        }
        match primes {
            None => self.nonzeros.iter().all(|h| norm(h) != 0),
            Some(ps) => ps.into_iter().any(|p| {
                let mut sub = self.clone();
                sub.char_fixed = Some(p);
                sub.feasible()
            }),
        }
    }

    pub fn classify(&self, g: &UniPoly) -> Status {
        if let Some(s) = self.cache.borrow().get(g) {
            return s.clone();
        }
        let s = self.classify_uncached(g);
        self.cache.borrow_mut().insert(g.clone(), s.clone());
        s
    }

    fn classify_uncached(&self, g: &UniPoly) -> Status {
        if g.is_zero() {
            return Status::Zero;
        }
        if let Some(p) = self.char_fixed {
            return self.classify_char(g, p);
        }
        if self.zeros.is_empty() {
            return self.classify_free(g);
        }
        let (c, factors) = g.factor();
        let mut atoms = self.char_atoms(c);
        for (f, _) in factors {
            if self.nonzeros.contains(&f) {
                continue;
            }
            match self.classify_factor(&f) {
                Status::Zero => return Status::Zero,
                Status::Open(a) => atoms.extend(a),
                Status::NonZero => {}
                other => return other,
            }
        }
        atoms.sort();
        atoms.dedup();
        self.open_or_nonzero(atoms)
    }

    /// One irreducible factor against the lowest-degree zero assumption.
    fn classify_factor(&self, g: &UniPoly) -> Status {
        let f = &self.zeros[0];
        if f.degree() == Some(1) {
            let c = f.coeffs();
            let n = g.eval_scaled(-c[0], c[1]);
            if n == 0 {
                return Status::Zero;
            }
            return self.open_or_nonzero(self.char_atoms(n));
        }
        if let Some(p) = self.char_atoms(f.lc()).into_iter().next() {
            return Status::Split(p);
        }
        let (primes, r) = g.prem_parts(f);
        if r.is_zero() {
            return Status::Zero;
        }
        match self.classify_free(&r) {
            Status::NonZero => self.open_or_nonzero(self.char_atoms_of(&primes)),
            Status::Open(mut a) => {
                a.extend(self.char_atoms_of(&primes));
                self.open_or_nonzero(a)
            }
            other => other,
        }
    }

    fn char_atoms(&self, n: i128) -> Vec<Atom> {
        prime_factors(n).into_iter().filter(|p| !self.excluded.contains(p)).map(Atom::Char).collect()
    }

    fn char_atoms_of(&self, primes: &[u64]) -> Vec<Atom> {
        primes.iter().filter(|p| !self.excluded.contains(p)).map(|&p| Atom::Char(p)).collect()
    }

    fn open_or_nonzero(&self, atoms: Vec<Atom>) -> Status {
        if atoms.is_empty() {
            Status::NonZero
        } else {
            Status::Open(atoms)
        }
    }

    /// Factor-wise decision ignoring zero assumptions.
    fn classify_free(&self, g: &UniPoly) -> Status {
        let (c, factors) = g.factor();
        let mut atoms: Vec<Atom> =
            factors.into_iter().map(|(f, _)| f).filter(|f| !self.nonzeros.contains(f)).map(Atom::Poly).collect();
        atoms.extend(self.char_atoms(c));
        self.open_or_nonzero(atoms)
    }

    /// Product of the nonzero assumptions over F_p.
    fn unit_product(&self, p: u64) -> Vec<u64> {
        self.nonzeros.iter().fold(vec![1], |acc, f| modp::mul(&acc, &f.to_modp(p), p))
    }

    /// Gcd of the zero assumptions over F_p with forbidden roots removed.
    fn effective_zero_poly(&self, p: u64) -> Option<Vec<u64>> {
        let first = self.zeros.first()?;
        let z = self.zeros.iter().fold(first.to_modp(p), |acc, f| modp::gcd(&acc, &f.to_modp(p), p));
        Some(modp::strip(z, &self.unit_product(p), p))
    }

    fn classify_char(&self, g: &UniPoly, p: u64) -> Status {
        if self.excluded.contains(&p) {
            return Status::Infeasible;
        }
        let gp = g.to_modp(p);
        if gp.is_empty() {
            return Status::Zero;
        }
        let units = self.unit_product(p);
        if let Some(z) = self.effective_zero_poly(p) {
            if z.len() <= 1 {
                return Status::Infeasible;
            }
            let h = modp::gcd(&gp, &z, p);
            if h.len() <= 1 {
                return Status::NonZero;
            }
            // Roots of z that are not roots of g.
            let mut rest = z.clone();
            loop {
                let c = modp::gcd(&rest, &gp, p);
                if c.len() <= 1 {
                    break;
                }
                rest = modp::exact_div(&rest, &c, p);
            }
            if rest.len() <= 1 {
                return Status::Zero;
            }
            return Status::Open(vec![Atom::Poly(UniPoly::from_modp(&h, p).primitive())]);
        }
        if gp.len() == 1 {
            return Status::NonZero;
        }
        let (_, factors) = g.factor();
        let atoms: Vec<Atom> = factors
            .into_iter()
            .map(|(f, _)| f)
            .filter(|f| {
                let fp = f.to_modp(p);
                fp.len() > 1 && modp::strip(fp, &units, p).len() > 1
            })
            .map(Atom::Poly)
            .collect();
        self.open_or_nonzero(atoms)
    }
}

/// Three-way split of polynomials in the scale factors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LambdaClass {
    Zero,
    NonZero,
    Undetermined,
}

/// Explicit zero and nonzero sets with the closure rules used when reading a
/// derivation by hand.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LambdaSets {
    pub zero: Vec<SymPoly>,
    pub nonzero: Vec<SymPoly>,
    /// Integer constants that are not prime powers count as nonzero. This
    /// matches the hand derivations but is wrong in characteristics dividing
    /// the constant, so it is off by default.
    pub composite_constants_nonzero: bool,
}

impl LambdaSets {
    pub fn classify(&self, p: &SymPoly) -> LambdaClass {
        if p.is_zero() {
            return LambdaClass::Zero;
        }
        let n = p.normalized();
        if self.zero.iter().any(|z| z.normalized() == n) {
            return LambdaClass::Zero;
        }
        let Some(u) = p.dehomogenize() else {
            return LambdaClass::Undetermined;
        };
        let (c, factors) = u.factor();
        let known: Vec<UniPoly> = self.nonzero.iter().filter_map(|z| z.dehomogenize()).map(|z| z.primitive()).collect();
        let unit_poly =
            |f: &UniPoly| *f == UniPoly::s() || (p.m == 2 && *f == UniPoly::linear(1, -1)) || known.contains(f);
        let unit_const = c.abs() == 1
            || (self.composite_constants_nonzero && !is_prime_power(c))
            || prime_factors(c).iter().all(|q| known.contains(&UniPoly::constant(*q as i128)));
        if unit_const && factors.iter().all(|(f, _)| unit_poly(f)) {
            LambdaClass::NonZero
        } else {
            LambdaClass::Undetermined
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_zero_context() {
        let mut c = Ctx::new(2);
        c.assume(&Atom::Poly(UniPoly::linear(1, -2)), false);
        assert_eq!(c.classify(&UniPoly::linear(1, -2).scale(3)), Status::Zero);
        assert_eq!(c.classify(&UniPoly::linear(1, 1)), Status::Open(vec![Atom::Char(3)]));
        c.assume(&Atom::Char(3), true);
        assert_eq!(c.classify(&UniPoly::linear(1, 1)), Status::NonZero);
    }

    #[test]
    fn char_context() {
        let mut c = Ctx::new(2);
        c.assume(&Atom::Char(2), false);
        assert_eq!(c.classify(&UniPoly::linear(2, 0)), Status::Zero);
        assert_eq!(c.classify(&UniPoly::linear(1, 1)), Status::NonZero);
        assert!(matches!(c.classify(&UniPoly::new(vec![1, 1, 1])), Status::Open(_)));
        c.assume(&Atom::Poly(UniPoly::new(vec![1, 1, 1])), false);
        assert!(c.feasible());
        assert_eq!(c.classify(&UniPoly::new(vec![1, 0, 0, 1])), Status::Zero);
        let mut d = Ctx::new(2);
        d.assume(&Atom::Char(2), false);
        d.assume(&Atom::Poly(UniPoly::linear(1, 1)), false);
        assert!(!d.feasible());
    }

    #[test]
    fn lambda_rules() {
        let a1 = SymPoly::var(2, 0);
        let a2 = SymPoly::var(2, 1);
        let p =
            SymPoly::constant(2, 6).mul(&a1.mul(&a1)).mul(&a2.mul(&a2).mul(&a2)).mul(&a1.sub(&a2).mul(&a1.sub(&a2)));
        let strict = LambdaSets::default();
        assert_eq!(strict.classify(&p), LambdaClass::Undetermined);
        let loose = LambdaSets { composite_constants_nonzero: true, ..Default::default() };
        assert_eq!(loose.classify(&p), LambdaClass::NonZero);
        assert_eq!(loose.classify(&SymPoly::constant(2, 4)), LambdaClass::Undetermined);
        assert_eq!(strict.classify(&SymPoly::zero(2)), LambdaClass::Zero);
    }
}
