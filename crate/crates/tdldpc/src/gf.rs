//! Arithmetic in prime fields and dense linear algebra over them.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

pub const MAX_ORDER: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("field order {0} is below 2")]
    TooSmall(u64),
    #[error("field order {0} is not prime (extension fields unsupported)")]
    NotPrime(u64),
    #[error("field order {0} exceeds the supported maximum {MAX_ORDER}")]
    TooLarge(u64),
    #[error("division by zero in F_{0}")]
    DivisionByZero(u32),
    #[error("operands belong to different fields (F_{0} and F_{1})")]
    Mismatch(u32, u32),
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PrimeField {
    q: u32,
}

impl PrimeField {
    pub fn new(q: u64) -> Result<Self, FieldError> {
        if q < 2 {
            return Err(FieldError::TooSmall(q));
        }
        if q > MAX_ORDER {
            return Err(FieldError::TooLarge(q));
        }
        if !is_prime(q) {
            return Err(FieldError::NotPrime(q));
        }
        Ok(Self { q: q as u32 })
    }

    pub fn order(&self) -> u32 {
        self.q
    }

    /// Always equal to the order, since only prime fields are supported.
    pub fn characteristic(&self) -> u32 {
        self.q
    }

    pub fn elem(&self, v: i64) -> FieldElement {
        FieldElement { value: self.reduce(v), q: self.q }
    }

    pub fn zero(&self) -> FieldElement {
        self.elem(0)
    }

    pub fn one(&self) -> FieldElement {
        self.elem(1)
    }

    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (0..self.q).map(move |v| FieldElement { value: v, q: self.q })
    }

    pub fn reduce(&self, v: i64) -> u32 {
        v.rem_euclid(self.q as i64) as u32
    }

    // Raw-value helpers used by the hot loops elsewhere in the crate.

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        let s = a + b;
        if s >= self.q {
            s - self.q
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        if a >= b {
            a - b
        } else {
            a + self.q - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.q - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.q as u64) as u32
    }

    pub fn pow(&self, a: u32, mut e: u64) -> u32 {
        let mut base = a % self.q;
        let mut acc = 1 % self.q;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    pub fn inv(&self, a: u32) -> Option<u32> {
        if a.is_multiple_of(self.q) {
            None
        } else {
            Some(self.pow(a, self.q as u64 - 2))
        }
    }

    pub fn div(&self, a: u32, b: u32) -> Result<u32, FieldError> {
        let inv = self.inv(b).ok_or(FieldError::DivisionByZero(self.q))?;
        Ok(self.mul(a, inv))
    }

    /// Reduced row echelon form in place; returns the pivot columns.
    pub fn rref(&self, m: &mut [Vec<u32>], ncols: usize) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..ncols {
            if r == m.len() {
                break;
            }
            let Some(p) = (r..m.len()).find(|&i| m[i][c] != 0) else {
                continue;
            };
            m.swap(r, p);
            let inv = self.inv(m[r][c]).expect("nonzero pivot");
            for v in m[r].iter_mut() {
                *v = self.mul(*v, inv);
            }
            let prow = m[r].clone();
            for (i, row) in m.iter_mut().enumerate() {
                if i != r && row[c] != 0 {
                    let f = row[c];
                    for (x, &pv) in row.iter_mut().zip(&prow).take(ncols) {
                        *x = self.sub(*x, self.mul(f, pv));
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self, m: &[Vec<u32>], ncols: usize) -> usize {
        let mut work = m.to_vec();
        self.rref(&mut work, ncols).len()
    }

    /// Basis of `{p : M p = 0}`; one vector per free column.
    pub fn solve_nullspace(&self, m: &[Vec<u32>], ncols: usize) -> Vec<Vec<u32>> {
        let mut work = m.to_vec();
        let pivots = self.rref(&mut work, ncols);
        let mut is_pivot = vec![false; ncols];
        for &c in &pivots {
            is_pivot[c] = true;
        }
        let mut basis = Vec::new();
        for f in (0..ncols).filter(|&c| !is_pivot[c]) {
            let mut v = vec![0u32; ncols];
            v[f] = 1;
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = self.neg(work[row][f]);
            }
            basis.push(v);
        }
        basis
    }
}

impl fmt::Display for PrimeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}", self.q)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FieldElement {
    value: u32,
    q: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
}

impl FieldElement {
    pub fn value(&self) -> u32 {
        self.value
    }

    pub fn field(&self) -> PrimeField {
        PrimeField { q: self.q }
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    pub fn inv(&self) -> Result<FieldElement, FieldError> {
        let f = self.field();
        let v = f.inv(self.value).ok_or(FieldError::DivisionByZero(self.q))?;
        Ok(FieldElement { value: v, q: self.q })
    }

    pub fn arith(self, rhs: FieldElement, op: Op) -> Result<FieldElement, FieldError> {
        if self.q != rhs.q {
            return Err(FieldError::Mismatch(self.q, rhs.q));
        }
        let f = self.field();
        let value = match op {
            Op::Add => f.add(self.value, rhs.value),
            Op::Sub => f.sub(self.value, rhs.value),
            Op::Mul => f.mul(self.value, rhs.value),
            Op::Div => f.div(self.value, rhs.value)?,
        };
        Ok(FieldElement { value, q: self.q })
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

macro_rules! field_op {
    ($tr:ident, $m:ident, $op:expr) => {
        impl std::ops::$tr for FieldElement {
            type Output = FieldElement;
            fn $m(self, rhs: FieldElement) -> FieldElement {
                self.arith(rhs, $op).expect("field operands must share a modulus")
            }
        }
    };
}

field_op!(Add, add, Op::Add);
field_op!(Sub, sub, Op::Sub);
field_op!(Mul, mul, Op::Mul);

impl std::ops::Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        FieldElement { value: self.field().neg(self.value), q: self.q }
    }
}
