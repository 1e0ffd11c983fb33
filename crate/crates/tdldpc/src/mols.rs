//! Cyclic Latin squares `L[x, y] = alpha*x + beta*y` and ordered sets of them.

use crate::gf::{FieldError, PrimeField};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MolsError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("scale factor must be nonzero in F_{q}, got ({alpha}, {beta})")]
    ZeroScale { q: u32, alpha: u32, beta: u32 },
    #[error("squares {i} and {j} are not orthogonal")]
    NotOrthogonal { i: usize, j: usize },
    #[error("a set of cyclic MOLS needs 1..=q-1 squares, got {0}")]
    BadCount(usize),
    #[error("squares from different fields")]
    FieldMismatch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CyclicLatinSquare {
    field: PrimeField,
    alpha: u32,
    beta: u32,
}

impl CyclicLatinSquare {
    pub fn new(field: PrimeField, alpha: i64, beta: i64) -> Result<Self, MolsError> {
        let (a, b) = (field.reduce(alpha), field.reduce(beta));
        if a == 0 || b == 0 {
            return Err(MolsError::ZeroScale { q: field.order(), alpha: a, beta: b });
        }
        Ok(Self { field, alpha: a, beta: b })
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn alpha(&self) -> u32 {
        self.alpha
    }

    pub fn beta(&self) -> u32 {
        self.beta
    }

    pub fn entry(&self, x: u32, y: u32) -> u32 {
        let f = self.field;
        f.add(f.mul(self.alpha, x), f.mul(self.beta, y))
    }

    /// Canonical representative `(alpha / beta, 1)` of the scaling class.
    pub fn class_representative(&self) -> CyclicLatinSquare {
        let f = self.field;
        let a = f.div(self.alpha, self.beta).expect("beta is nonzero");
        CyclicLatinSquare { field: f, alpha: a, beta: 1 }
    }

    /// q lines of q space-separated symbols, row x then column y.
    pub fn to_text(&self) -> String {
        let q = self.field.order();
        let mut s = String::new();
        for x in 0..q {
            let row: Vec<String> = (0..q).map(|y| self.entry(x, y).to_string()).collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
        s
    }
}

pub fn is_orthogonal(l1: &CyclicLatinSquare, l2: &CyclicLatinSquare) -> bool {
    let f = l1.field;
    f.mul(l1.alpha, l2.beta) != f.mul(l2.alpha, l1.beta)
}

/// Checks orthogonality directly: all q^2 superimposed symbol pairs distinct.
pub fn is_orthogonal_by_definition(l1: &CyclicLatinSquare, l2: &CyclicLatinSquare) -> bool {
    colliding_cells(l1, l2).is_none()
}

/// Two distinct cells carrying the same ordered symbol pair, if any.
pub fn colliding_cells(l1: &CyclicLatinSquare, l2: &CyclicLatinSquare) -> Option<((u32, u32), (u32, u32))> {
    let q = l1.field.order() as usize;
    let mut seen: Vec<Option<(u32, u32)>> = vec![None; q * q];
    for x in 0..q as u32 {
        for y in 0..q as u32 {
            let key = l1.entry(x, y) as usize * q + l2.entry(x, y) as usize;
            if let Some(prev) = seen[key] {
                return Some((prev, (x, y)));
            }
            seen[key] = Some((x, y));
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MolsSet {
    field: PrimeField,
    squares: Vec<CyclicLatinSquare>,
}

impl MolsSet {
    pub fn new(field: PrimeField, pairs: &[(i64, i64)]) -> Result<Self, MolsError> {
        let squares = pairs.iter().map(|&(a, b)| CyclicLatinSquare::new(field, a, b)).collect::<Result<Vec<_>, _>>()?;
        Self::from_squares(squares)
    }

    /// Reduced-form set `{L^(a_1, 1), ..., L^(a_m, 1)}`.
    pub fn reduced(field: PrimeField, alphas: &[i64]) -> Result<Self, MolsError> {
        let pairs: Vec<_> = alphas.iter().map(|&a| (a, 1)).collect();
        Self::new(field, &pairs)
    }

    pub fn from_squares(squares: Vec<CyclicLatinSquare>) -> Result<Self, MolsError> {
        let Some(first) = squares.first() else {
            return Err(MolsError::BadCount(0));
        };
        let field = first.field;
        if squares.iter().any(|s| s.field != field) {
            return Err(MolsError::FieldMismatch);
        }
        if squares.len() > field.order() as usize - 1 {
            return Err(MolsError::BadCount(squares.len()));
        }
        for i in 0..squares.len() {
            for j in i + 1..squares.len() {
                if !is_orthogonal(&squares[i], &squares[j]) {
                    return Err(MolsError::NotOrthogonal { i, j });
                }
            }
        }
        Ok(Self { field, squares })
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn m(&self) -> usize {
        self.squares.len()
    }

    pub fn squares(&self) -> &[CyclicLatinSquare] {
        &self.squares
    }

    pub fn alphas(&self) -> Vec<u32> {
        self.squares.iter().map(|s| s.alpha).collect()
    }

    pub fn betas(&self) -> Vec<u32> {
        self.squares.iter().map(|s| s.beta).collect()
    }

    pub fn is_reduced(&self) -> bool {
        self.squares.iter().all(|s| s.beta == 1)
    }

    pub fn reduced_form(&self) -> MolsSet {
        MolsSet { field: self.field, squares: self.squares.iter().map(|s| s.class_representative()).collect() }
    }

    /// Multiplies every alpha by `l`; `self` must be reduced.
    pub fn scaled_set(&self, l: u32) -> Result<MolsSet, MolsError> {
        let f = self.field;
        let squares = self
            .squares
            .iter()
            .map(|s| CyclicLatinSquare::new(f, f.mul(l, s.alpha) as i64, s.beta as i64))
            .collect::<Result<Vec<_>, _>>()?;
        MolsSet::from_squares(squares)
    }
}

/// All ordered pairs `(a_1, a_2)` of distinct nonzero scale factors.
pub fn reduced_pairs(field: PrimeField) -> Vec<(u32, u32)> {
    let q = field.order();
    let mut out = Vec::new();
    for a in 1..q {
        for b in 1..q {
            if a != b {
                out.push((a, b));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(q: u64) -> PrimeField {
        PrimeField::new(q).unwrap()
    }

    #[test]
    fn entries_match_small_squares() {
        let l11 = CyclicLatinSquare::new(f(5), 1, 1).unwrap();
        let l21 = CyclicLatinSquare::new(f(5), 2, 1).unwrap();
        assert_eq!(l11.entry(1, 2), 3);
        assert_eq!(l21.entry(4, 0), 3);
        assert_eq!(l21.entry(0, 0), 0);
        assert_eq!(l21.to_text().lines().nth(1).unwrap(), "2 3 4 0 1");
    }

    #[test]
    fn orthogonality() {
        let sq = |a, b| CyclicLatinSquare::new(f(5), a, b).unwrap();
        assert!(is_orthogonal(&sq(1, 1), &sq(2, 1)));
        assert!(!is_orthogonal(&sq(1, 1), &sq(2, 2)));
        assert!(!is_orthogonal(&sq(2, 1), &sq(4, 2)));
        for q in [5u64, 7] {
            for a1 in 1..q as i64 {
                for b1 in 1..q as i64 {
                    for a2 in 1..q as i64 {
                        for b2 in 1..q as i64 {
                            let l1 = CyclicLatinSquare::new(f(q), a1, b1).unwrap();
                            let l2 = CyclicLatinSquare::new(f(q), a2, b2).unwrap();
                            assert_eq!(is_orthogonal(&l1, &l2), is_orthogonal_by_definition(&l1, &l2));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn collisions_exist_exactly_for_proportional_pairs() {
        let fl = f(7);
        for (a1, b1, a2, b2) in [(1, 1, 2, 2), (3, 2, 5, 1), (1, 2, 3, 4)] {
            let l1 = CyclicLatinSquare::new(fl, a1, b1).unwrap();
            let l2 = CyclicLatinSquare::new(fl, a2, b2).unwrap();
            let hit = colliding_cells(&l1, &l2);
            assert_eq!(hit.is_some(), !is_orthogonal(&l1, &l2));
            if let Some(((_, y1), (_, y2))) = hit {
                let det = (a1 * b2 - a2 * b1).rem_euclid(7);
                assert_eq!(((y1 as i64 - y2 as i64) * det).rem_euclid(7), 0);
            }
        }
    }

    #[test]
    fn class_representatives() {
        let rep = |a, b| CyclicLatinSquare::new(f(5), a, b).unwrap().class_representative();
        assert_eq!((rep(2, 2).alpha(), rep(2, 2).beta()), (1, 1));
        assert_eq!(rep(4, 2).alpha(), 2);
        assert_eq!(rep(3, 1).alpha(), 3);
    }

    #[test]
    fn reduction_and_scaling() {
        let m = MolsSet::new(f(5), &[(2, 2), (4, 2)]).unwrap();
        assert_eq!(m.reduced_form().alphas(), vec![1, 2]);
        assert!(m.reduced_form().is_reduced());
        assert_eq!(m.reduced_form().reduced_form(), m.reduced_form());
        assert_eq!(MolsSet::new(f(5), &[(3, 4)]).unwrap().reduced_form().alphas(), vec![2]);
        let r = MolsSet::reduced(f(5), &[1, 2]).unwrap();
        assert_eq!(r.scaled_set(2).unwrap().alphas(), vec![2, 4]);
        assert_eq!(r.scaled_set(3).unwrap().alphas(), vec![3, 1]);
        assert_eq!(r.scaled_set(1).unwrap(), r);
        let r13 = MolsSet::reduced(f(13), &[1, 4]).unwrap();
        assert_eq!(r13.reduced_form(), r13);
    }

    #[test]
    fn full_representative_system_is_mols() {
        let all: Vec<i64> = (1..5).collect();
        assert_eq!(MolsSet::reduced(f(5), &all).unwrap().m(), 4);
        assert!(matches!(MolsSet::reduced(f(13), &[1, 1]), Err(MolsError::NotOrthogonal { i: 0, j: 1 })));
        assert!(MolsSet::reduced(f(13), &[0, 1]).is_err());
    }
}
