//! Integer polynomials in one indeterminate `s` (the ratio of the second scale
//! factor to the first) and in the scale factors themselves.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

/// Dense coefficients, lowest degree first, no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub struct UniPoly(Vec<i128>);

impl Ord for UniPoly {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.iter().rev().cmp(other.0.iter().rev()))
    }
}

impl PartialOrd for UniPoly {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl UniPoly {
    pub fn new(mut c: Vec<i128>) -> Self {
        while c.last() == Some(&0) {
            c.pop();
        }
        Self(c)
    }

    pub fn zero() -> Self {
        Self(Vec::new())
    }

    pub fn constant(c: i128) -> Self {
        Self::new(vec![c])
    }

    pub fn s() -> Self {
        Self(vec![0, 1])
    }

    /// `a*s + b`.
    pub fn linear(a: i128, b: i128) -> Self {
        Self::new(vec![b, a])
    }

    pub fn coeffs(&self) -> &[i128] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn is_constant(&self) -> bool {
        self.0.len() <= 1
    }

    pub fn constant_value(&self) -> Option<i128> {
        match self.0.len() {
            0 => Some(0),
            1 => Some(self.0[0]),
            _ => None,
        }
    }

    pub fn lc(&self) -> i128 {
        self.0.last().copied().unwrap_or(0)
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.0.len().max(o.0.len());
        Self::new((0..n).map(|i| self.0.get(i).unwrap_or(&0) + o.0.get(i).unwrap_or(&0)).collect())
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        Self(self.0.iter().map(|c| -c).collect())
    }

    pub fn scale(&self, k: i128) -> Self {
        Self::new(self.0.iter().map(|c| c * k).collect())
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero();
        }
        let mut c = vec![0i128; self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                c[i + j] += a.checked_mul(*b).expect("coefficient overflow");
            }
        }
        Self::new(c)
    }

    pub fn pow(&self, e: u32) -> Self {
        (0..e).fold(Self::constant(1), |acc, _| acc.mul(self))
    }

    /// `a_d * s^d + ... + a_0` at `s = num/den`, multiplied by `den^deg`.
    pub fn eval_scaled(&self, num: i128, den: i128) -> i128 {
        let d = self.0.len().saturating_sub(1) as u32;
        self.0.iter().enumerate().map(|(i, c)| c * num.pow(i as u32) * den.pow(d - i as u32)).sum()
    }

    pub fn eval_mod(&self, s: u64, p: u64) -> u64 {
        let mut acc = 0u64;
        for c in self.0.iter().rev() {
            acc = (acc * s + c.rem_euclid(p as i128) as u64) % p;
        }
        acc
    }

    pub fn content(&self) -> i128 {
        self.0.iter().fold(0i128, |g, &c| gcd(g, c.abs()))
    }

    /// Content divided out and leading coefficient made positive.
    pub fn primitive(&self) -> Self {
        let c = self.content();
        if c == 0 {
            return Self::zero();
        }
        let c = if self.lc() < 0 { -c } else { c };
        Self(self.0.iter().map(|x| x / c).collect())
    }

    /// Exact quotient in Z[s], if any.
    pub fn div_exact(&self, d: &Self) -> Option<Self> {
        let dd = d.degree()?;
        if self.is_zero() {
            return Some(Self::zero());
        }
        let mut r = self.0.clone();
        let n = r.len() - 1;
        if n < dd {
            return None;
        }
        let mut q = vec![0i128; n - dd + 1];
        for i in (0..=n - dd).rev() {
            let top = r[i + dd];
            if top % d.lc() != 0 {
                return None;
            }
            let f = top / d.lc();
            q[i] = f;
            // a genuine quotient stays small; blowing past i128 means no division
            for (j, c) in d.0.iter().enumerate() {
                r[i + j] = f.checked_mul(*c).and_then(|x| r[i + j].checked_sub(x))?;
            }
        }
        if r.iter().any(|&c| c != 0) {
            return None;
        }
        Some(Self::new(q))
    }

    /// Pseudo-remainder `lc(d)^(deg self - deg d + 1) * self mod d`, with each
    /// integer factor shared by all coefficients kept only to the first power.
    pub fn prem(&self, d: &Self) -> Self {
        let (primes, r) = self.prem_parts(d);
        primes.iter().fold(r, |r, &p| r.scale(p as i128))
    }

    /// Pseudo-remainder with the common integer factors taken out as it goes,
    /// together with the primes removed. The true remainder vanishes exactly
    /// where the returned one does or the characteristic is a removed prime.
    pub fn prem_parts(&self, d: &Self) -> (Vec<u64>, Self) {
        let dd = d.degree().expect("nonzero divisor");
        let mut r = self.clone();
        let mut primes = Vec::new();
        while let Some(rd) = r.degree() {
            if rd < dd {
                break;
            }
            let shift = Self::new({
                let mut v = vec![0i128; rd - dd];
                v.push(r.lc());
                v
            });
            r = r.scale(d.lc()).sub(&shift.mul(d));
            let c = r.content();
            if c > 1 {
                primes.extend(prime_factors(c));
                r = Self(r.0.iter().map(|x| x / c).collect());
            }
        }
        let c = r.content();
        if c > 1 {
            primes.extend(prime_factors(c));
            r = Self(r.0.iter().map(|x| x / c).collect());
        }
        primes.sort();
        primes.dedup();
        (primes, r)
    }

    /// Coefficients reduced into the symmetric range modulo `p`.
    pub fn reduce_mod(&self, p: u64) -> Self {
        let p = p as i128;
        Self::new(
            self.0
                .iter()
                .map(|c| {
                    let r = c.rem_euclid(p);
                    if 2 * r > p {
                        r - p
                    } else {
                        r
                    }
                })
                .collect(),
        )
    }

    /// `content * prod(factor^mult)` with primitive factors of positive leading
    /// coefficient; the content carries the sign.
    pub fn factor(&self) -> (i128, Vec<(UniPoly, u32)>) {
        if self.is_zero() {
            return (0, Vec::new());
        }
        let c = self.content() * self.lc().signum();
        let mut rest = self.primitive();
        let mut out: BTreeMap<UniPoly, u32> = BTreeMap::new();
        let push = |f: UniPoly, out: &mut BTreeMap<UniPoly, u32>| *out.entry(f).or_insert(0) += 1;
        while rest.degree().unwrap_or(0) > 0 && rest.0[0] == 0 {
            rest = Self(rest.0[1..].to_vec());
            push(Self::s(), &mut out);
        }
        'linear: loop {
            if rest.degree().unwrap_or(0) < 1 {
                break;
            }
            for v in divisors(rest.lc()) {
                for u in divisors(rest.0[0]) {
                    for u in [u, -u] {
                        if gcd(u, v) != 1 {
                            continue;
                        }
                        if rest.eval_scaled(u, v) == 0 {
                            let f = Self::linear(v, -u);
                            rest = rest.div_exact(&f).expect("root divides");
                            push(f, &mut out);
                            continue 'linear;
                        }
                    }
                }
            }
            break;
        }
        loop {
            match rest.degree() {
                Some(d) if d >= 4 => match quadratic_factor(&rest) {
                    Some(f) => {
                        rest = rest.div_exact(&f).expect("factor divides");
                        push(f.primitive(), &mut out);
                    }
                    None => break,
                },
                _ => break,
            }
        }
        if rest.degree().unwrap_or(0) > 0 {
            push(rest, &mut out);
        }
        (c, out.into_iter().collect())
    }
}

/// Quadratic factor by interpolation through divisors of the values at 0, 1, -1.
fn quadratic_factor(f: &UniPoly) -> Option<UniPoly> {
    let v0 = f.eval_scaled(0, 1);
    let v1 = f.eval_scaled(1, 1);
    let v2 = f.eval_scaled(-1, 1);
    if v0 == 0 || v1 == 0 || v2 == 0 {
        return None;
    }
    let signed = |v: i128| divisors(v).into_iter().flat_map(|d| [d, -d]).collect::<Vec<_>>();
    for d0 in divisors(v0) {
        for d1 in signed(v1) {
            for d2 in signed(v2) {
                let two_a = d1 + d2 - 2 * d0;
                let two_b = d1 - d2;
                if two_a == 0 || two_a % 2 != 0 || two_b % 2 != 0 {
                    continue;
                }
                let g = UniPoly::new(vec![d0, two_b / 2, two_a / 2]);
                if f.div_exact(&g).is_some() {
                    return Some(g);
                }
            }
        }
    }
    None
}

pub fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn divisors(n: i128) -> Vec<i128> {
    let n = n.abs();
    if n == 0 {
        return vec![1];
    }
    let mut d = Vec::new();
    let mut i = 1i128;
    while i * i <= n {
        if n % i == 0 {
            d.push(i);
            if i * i != n {
                d.push(n / i);
            }
        }
        i += 1;
    }
    d.sort_unstable();
    d
}

pub fn prime_factors(n: i128) -> Vec<u64> {
    let mut n = n.unsigned_abs();
    let mut out = Vec::new();
    let mut p = 2u128;
    while p * p <= n {
        if n.is_multiple_of(p) {
            out.push(p as u64);
            while n.is_multiple_of(p) {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n as u64);
    }
    out
}

pub fn is_prime_power(n: i128) -> bool {
    n.unsigned_abs() > 1 && prime_factors(n).len() == 1
}

/// Polynomials over F_p, lowest degree first, canonical residues.
pub(crate) mod modp {
    pub fn norm(mut a: Vec<u64>) -> Vec<u64> {
        while a.last() == Some(&0) {
            a.pop();
        }
        a
    }

    fn inv(a: u64, p: u64) -> u64 {
        let mut r = 1u64;
        let mut b = a % p;
        let mut e = p - 2;
        while e > 0 {
            if e & 1 == 1 {
                r = r * b % p;
            }
            b = b * b % p;
            e >>= 1;
        }
        r
    }

    pub fn monic(a: Vec<u64>, p: u64) -> Vec<u64> {
        let a = norm(a);
        match a.last() {
            None => a,
            Some(&l) => {
                let i = inv(l, p);
                a.iter().map(|c| c * i % p).collect()
            }
        }
    }

    pub fn rem(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let b = monic(b.to_vec(), p);
        let mut r = norm(a.to_vec());
        while r.len() >= b.len() && !r.is_empty() {
            let f = *r.last().unwrap();
            let sh = r.len() - b.len();
            for (j, c) in b.iter().enumerate() {
                r[sh + j] = (r[sh + j] + p - f * c % p) % p;
            }
            r = norm(r);
        }
        r
    }

    pub fn gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let (mut a, mut b) = (norm(a.to_vec()), norm(b.to_vec()));
        while !b.is_empty() {
            let r = rem(&a, &b, p);
            a = b;
            b = r;
        }
        monic(a, p)
    }

    pub fn exact_div(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let b = monic(b.to_vec(), p);
        let mut r = norm(a.to_vec());
        if r.len() < b.len() {
            return r;
        }
        let mut q = vec![0u64; r.len() - b.len() + 1];
        while r.len() >= b.len() && !r.is_empty() {
            let f = *r.last().unwrap();
            let sh = r.len() - b.len();
            q[sh] = f;
            for (j, c) in b.iter().enumerate() {
                r[sh + j] = (r[sh + j] + p - f * c % p) % p;
            }
            r = norm(r);
        }
        norm(q)
    }

    /// Strips from `z` every root shared with `units`; the result is monic.
    pub fn strip(z: Vec<u64>, units: &[u64], p: u64) -> Vec<u64> {
        let mut z = monic(z, p);
        loop {
            let g = gcd(&z, units, p);
            if g.len() <= 1 {
                return z;
            }
            z = exact_div(&z, &g, p);
        }
    }

    /// Monic product of the distinct irreducible factors.
    pub fn radical(a: &[u64], p: u64) -> Vec<u64> {
        let a = monic(a.to_vec(), p);
        if a.len() <= 1 {
            return a;
        }
        let d = norm(a.iter().enumerate().skip(1).map(|(i, c)| c * (i as u64 % p) % p).collect());
        if d.is_empty() {
            // A p-th power: take the p-th root of the coefficients' positions.
            let root: Vec<u64> = a.iter().step_by(p as usize).copied().collect();
            return radical(&root, p);
        }
        let g = gcd(&a, &d, p);
        let r = exact_div(&a, &g, p);
        // Factors of multiplicity divisible by p survive in g only.
        let rest = exact_div(&g, &gcd(&g, &r, p), p);
        if rest.len() <= 1 {
            monic(r, p)
        } else {
            let extra = radical(&rest, p);
            let l = gcd(&r, &extra, p);
            monic(mul(&r, &exact_div(&extra, &l, p), p), p)
        }
    }

    pub fn mul(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut c = vec![0u64; a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                c[i + j] = (c[i + j] + x * y) % p;
            }
        }
        norm(c)
    }
}

impl UniPoly {
    pub(crate) fn to_modp(&self, p: u64) -> Vec<u64> {
        modp::norm(self.0.iter().map(|c| c.rem_euclid(p as i128) as u64).collect())
    }

    pub(crate) fn from_modp(a: &[u64], p: u64) -> Self {
        Self::new(a.iter().map(|&c| c as i128).collect()).reduce_mod(p)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
/// Polynomial in the scale factors `a1..am`; keys are exponent vectors.
pub struct SymPoly {
    pub m: usize,
    terms: BTreeMap<Vec<u32>, i128>,
}

impl SymPoly {
    pub fn zero(m: usize) -> Self {
        Self { m, terms: BTreeMap::new() }
    }

    pub fn constant(m: usize, c: i128) -> Self {
        Self::monomial(m, c, vec![0; m])
    }

    pub fn var(m: usize, i: usize) -> Self {
        let mut e = vec![0; m];
        e[i] = 1;
        Self::monomial(m, 1, e)
    }

    pub fn monomial(m: usize, c: i128, e: Vec<u32>) -> Self {
        let mut terms = BTreeMap::new();
        if c != 0 {
            terms.insert(e, c);
        }
        Self { m, terms }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &i128)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut t = self.terms.clone();
        for (e, c) in &o.terms {
            let v = t.entry(e.clone()).or_insert(0);
            *v += c;
            if *v == 0 {
                t.remove(e);
            }
        }
        Self { m: self.m, terms: t }
    }

    pub fn neg(&self) -> Self {
        Self { m: self.m, terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect() }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out = Self::zero(self.m);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &o.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out = out.add(&Self::monomial(self.m, c1 * c2, e));
            }
        }
        out
    }

    /// Content removed and the leading term (in term order) made positive.
    pub fn normalized(&self) -> Self {
        let g = self.terms.values().fold(0i128, |g, &c| gcd(g, c));
        if g == 0 {
            return self.clone();
        }
        let sign = self.terms.values().next_back().map_or(1, |c| c.signum());
        Self { m: self.m, terms: self.terms.iter().map(|(e, c)| (e.clone(), c / (g * sign))).collect() }
    }

    pub fn eval_mod(&self, q: u64, vals: &[u64]) -> u64 {
        let mut acc = 0u64;
        for (e, c) in &self.terms {
            let mut t = c.rem_euclid(q as i128) as u64;
            for (v, &k) in vals.iter().zip(e) {
                for _ in 0..k {
                    t = t * (v % q) % q;
                }
            }
            acc = (acc + t) % q;
        }
        acc
    }

    /// Sets the first scale factor to 1; `None` when `m > 2`.
    pub fn dehomogenize(&self) -> Option<UniPoly> {
        match self.m {
            0 | 1 => Some(UniPoly::constant(self.terms.values().sum())),
            2 => {
                let deg = self.terms.keys().map(|e| e[1] as usize).max().unwrap_or(0);
                let mut c = vec![0i128; deg + 1];
                for (e, v) in &self.terms {
                    c[e[1] as usize] += v;
                }
                Some(UniPoly::new(c))
            }
            _ => None,
        }
    }

    /// Homogeneous polynomial whose dehomogenization is `u`.
    pub fn homogenize(u: &UniPoly, m: usize) -> Self {
        match m {
            2 => {
                let d = u.degree().unwrap_or(0) as u32;
                let mut out = Self::zero(2);
                for (i, &c) in u.coeffs().iter().enumerate() {
                    out = out.add(&Self::monomial(2, c, vec![d - i as u32, i as u32]));
                }
                out
            }
            _ => Self::constant(m, u.constant_value().unwrap_or(0)),
        }
    }
}

impl fmt::Display for SymPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Highest powers of a1 first, matching the usual way of writing these.
        let mut terms: Vec<(i64, u32, u32)> = Vec::new();
        for (e, c) in self.terms.iter().rev() {
            let e1 = e.first().copied().unwrap_or(0);
            let e2 = e.get(1).copied().unwrap_or(0);
            terms.push((*c as i64, e1, e2));
        }
        terms.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
        write!(f, "{}", crate::existence::render_terms(&terms))
    }
}

impl fmt::Display for UniPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, &c) in self.0.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            let mag = c.abs();
            if first {
                if c < 0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if c < 0 { " - " } else { " + " })?;
            }
            first = false;
            match (i, mag) {
                (0, _) => write!(f, "{mag}")?,
                (1, 1) => write!(f, "s")?,
                (1, _) => write!(f, "{mag}s")?,
                (_, 1) => write!(f, "s^{i}")?,
                _ => write!(f, "{mag}s^{i}")?,
            }
        }
        Ok(())
    }
}
