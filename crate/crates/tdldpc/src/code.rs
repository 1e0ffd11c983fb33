//! Parity-check matrices of TD LDPC codes and their structural checks.

use crate::design::build_td;
use crate::mols::MolsSet;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeError {
    #[error("alist parse error on line {line}: {msg}")]
    Alist { line: usize, msg: String },
    #[error("tile (group {group}, class {class}) is not circulant")]
    NotCirculant { group: usize, class: usize },
    #[error("circulant layout needs a code built from MOLS")]
    NoOrigin,
    #[error("no admissible diagonal slope for this MOLS set")]
    NoSlope,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParityCheckMatrix {
    rows: usize,
    cols: usize,
    col_adj: Vec<Vec<usize>>,
    row_adj: Vec<Vec<usize>>,
    origin: Option<MolsSet>,
}

pub fn code_from_mols(m: &MolsSet) -> ParityCheckMatrix {
    let d = build_td(m);
    let mut h = ParityCheckMatrix::from_columns(d.num_points(), d.incidence_matrix());
    h.origin = Some(m.clone());
    h
}

impl ParityCheckMatrix {
    pub fn from_columns(rows: usize, col_adj: Vec<Vec<usize>>) -> Self {
        let mut row_adj = vec![Vec::new(); rows];
        let mut col_adj = col_adj;
        for (c, col) in col_adj.iter_mut().enumerate() {
            col.sort_unstable();
            col.dedup();
            for &r in col.iter() {
                row_adj[r].push(c);
            }
        }
        Self { rows, cols: col_adj.len(), col_adj, row_adj, origin: None }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn col(&self, c: usize) -> &[usize] {
        &self.col_adj[c]
    }

    pub fn row(&self, r: usize) -> &[usize] {
        &self.row_adj[r]
    }

    pub fn origin(&self) -> Option<&MolsSet> {
        self.origin.as_ref()
    }

    pub fn column_weights(&self) -> Vec<usize> {
        self.col_adj.iter().map(Vec::len).collect()
    }

    pub fn row_weights(&self) -> Vec<usize> {
        self.row_adj.iter().map(Vec::len).collect()
    }

    pub fn edges(&self) -> usize {
        self.col_adj.iter().map(Vec::len).sum()
    }

    /// Largest number of rows shared by two distinct columns.
    pub fn max_column_overlap(&self) -> usize {
        let mut best = 0;
        let mut count = vec![0usize; self.cols];
        for c in 0..self.cols {
            for &r in &self.col_adj[c] {
                for &d in &self.row_adj[r] {
                    if d > c {
                        count[d] += 1;
                        best = best.max(count[d]);
                    }
                }
            }
            for &r in &self.col_adj[c] {
                for &d in &self.row_adj[r] {
                    count[d] = 0;
                }
            }
        }
        best
    }

    /// Shortest cycle in the factor graph, `None` if acyclic.
    pub fn girth(&self) -> Option<usize> {
        // Vertices: bits 0..cols, checks cols..cols+rows.
        let n = self.cols + self.rows;
        let nbrs = |v: usize| -> &[usize] {
            if v < self.cols {
                &self.col_adj[v]
            } else {
                &self.row_adj[v - self.cols]
            }
        };
        let to_vertex = |v: usize, u: usize| if v < self.cols { u + self.cols } else { u };
        let mut best: Option<usize> = None;
        let mut dist = vec![usize::MAX; n];
        let mut parent = vec![usize::MAX; n];
        for s in 0..n {
            let mut touched = vec![s];
            dist[s] = 0;
            let mut queue = VecDeque::from([s]);
            'bfs: while let Some(v) = queue.pop_front() {
                if let Some(b) = best {
                    if 2 * dist[v] + 1 >= b {
                        break;
                    }
                }
                for &u in nbrs(v) {
                    let w = to_vertex(v, u);
                    if dist[w] == usize::MAX {
                        dist[w] = dist[v] + 1;
                        parent[w] = v;
                        touched.push(w);
                        queue.push_back(w);
                    } else if parent[v] != w {
                        let len = dist[v] + dist[w] + 1;
                        if best.is_none_or(|b| len < b) {
                            best = Some(len);
                        }
                        if len <= 4 {
                            break 'bfs;
                        }
                    }
                }
            }
            for t in touched {
                dist[t] = usize::MAX;
                parent[t] = usize::MAX;
            }
        }
        best
    }

    /// Exact GF(2) rank, dimension and rate.
    pub fn rank_and_rate(&self) -> RankRate {
        let words = self.cols.div_ceil(64);
        let mut m: Vec<Vec<u64>> = self
            .row_adj
            .iter()
            .map(|r| {
                let mut v = vec![0u64; words];
                for &c in r {
                    v[c / 64] |= 1 << (c % 64);
                }
                v
            })
            .collect();
        let mut rank = 0;
        for c in 0..self.cols {
            let (w, bit) = (c / 64, 1u64 << (c % 64));
            let Some(p) = (rank..m.len()).find(|&i| m[i][w] & bit != 0) else {
                continue;
            };
            m.swap(rank, p);
            let pivot = m[rank].clone();
            for (i, row) in m.iter_mut().enumerate() {
                if i != rank && row[w] & bit != 0 {
                    for (a, b) in row.iter_mut().zip(&pivot) {
                        *a ^= b;
                    }
                }
            }
            rank += 1;
        }
        let dimension = self.cols - rank;
        RankRate { rank, dimension, rate: dimension as f64 / self.cols as f64 }
    }

    pub fn syndrome_is_zero(&self, bits: &[u8]) -> bool {
        self.row_adj.iter().all(|r| r.iter().fold(0u8, |acc, &c| acc ^ bits[c]) == 0)
    }

    pub fn to_alist(&self) -> String {
        let mut s = String::new();
        let cw = self.column_weights();
        let rw = self.row_weights();
        let join = |v: &mut dyn Iterator<Item = usize>| v.map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        let _ = writeln!(s, "{} {}", self.cols, self.rows);
        let _ = writeln!(s, "{} {}", cw.iter().max().unwrap_or(&0), rw.iter().max().unwrap_or(&0));
        let _ = writeln!(s, "{}", join(&mut cw.iter().copied()));
        let _ = writeln!(s, "{}", join(&mut rw.iter().copied()));
        for col in &self.col_adj {
            let _ = writeln!(s, "{}", join(&mut col.iter().map(|r| r + 1)));
        }
        for row in &self.row_adj {
            let _ = writeln!(s, "{}", join(&mut row.iter().map(|c| c + 1)));
        }
        s
    }

    /// Parses the alist layout written by [`Self::to_alist`]; zero padding is skipped.
    pub fn from_alist(text: &str) -> Result<Self, CodeError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let mut next = |what: &str| -> Result<(usize, Vec<usize>), CodeError> {
            let (i, l) = lines.next().ok_or(CodeError::Alist { line: 0, msg: format!("missing {what}") })?;
            let nums = l
                .split_whitespace()
                .map(|t| t.parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CodeError::Alist { line: i + 1, msg: e.to_string() })?;
            Ok((i + 1, nums))
        };
        let bad = |line: usize, msg: &str| CodeError::Alist { line, msg: msg.to_string() };
        let (l, dims) = next("dimensions")?;
        if dims.len() != 2 {
            return Err(bad(l, "expected two dimensions"));
        }
        let (n, m) = (dims[0], dims[1]);
        next("max degrees")?;
        let (l, cw) = next("column degrees")?;
        if cw.len() != n {
            return Err(bad(l, "column degree count mismatch"));
        }
        let (l, rw) = next("row degrees")?;
        if rw.len() != m {
            return Err(bad(l, "row degree count mismatch"));
        }
        let mut cols = Vec::with_capacity(n);
        for &w in &cw {
            let (l, v) = next("column list")?;
            let v: Vec<usize> = v.into_iter().filter(|&x| x != 0).collect();
            if v.len() != w || v.iter().any(|&r| r > m) {
                return Err(bad(l, "column list inconsistent"));
            }
            cols.push(v.into_iter().map(|r| r - 1).collect());
        }
        let h = Self::from_columns(m, cols);
        for (r, &w) in rw.iter().enumerate() {
            let (l, v) = next("row list")?;
            let mut v: Vec<usize> = v.into_iter().filter(|&x| x != 0).map(|c| c - 1).collect();
            v.sort_unstable();
            if v.len() != w || v != h.row_adj[r] {
                return Err(bad(l, "row list disagrees with column lists"));
            }
        }
        Ok(h)
    }

    pub fn descriptor(&self) -> CodeDescriptor {
        let rr = self.rank_and_rate();
        let (q, m, alphas, betas) = match &self.origin {
            Some(o) => (o.field().order(), o.m(), o.alphas(), o.betas()),
            None => (0, 0, vec![], vec![]),
        };
        CodeDescriptor {
            q,
            m,
            alphas,
            betas,
            n: self.cols,
            k: self.column_weights().first().copied().unwrap_or(0),
            rank: rr.rank,
            rate: rr.rate,
        }
    }

    /// Quasi-cyclic layout: tries row-major tiles, column-major tiles, then
    /// diagonal column classes `y = gamma*x + c` with rows of each group
    /// listed along a scaled progression.
    pub fn circulant_grid(&self) -> Result<CirculantGrid, CodeError> {
        let origin = self.origin.as_ref().ok_or(CodeError::NoOrigin)?;
        let f = origin.field();
        let q = f.order() as usize;
        let k = origin.m() + 2;
        let natural_rows: Vec<usize> = (0..k * q).collect();

        let row_major: Vec<usize> = (0..q * q).collect();
        if let Ok(shifts) = self.check_tiles(k, q, &natural_rows, &row_major) {
            return Ok(CirculantGrid {
                layout: GridLayout::RowMajor,
                row_order: natural_rows,
                column_order: row_major,
                shifts,
            });
        }
        let col_major: Vec<usize> = (0..q * q).map(|i| (i % q) * q + i / q).collect();
        if let Ok(shifts) = self.check_tiles(k, q, &natural_rows, &col_major) {
            return Ok(CirculantGrid {
                layout: GridLayout::ColumnMajor,
                row_order: natural_rows,
                column_order: col_major,
                shifts,
            });
        }

        let gamma = (1..q as u32)
            .find(|&g| origin.squares().iter().all(|s| f.add(s.alpha(), f.mul(s.beta(), g)) != 0))
            .ok_or(CodeError::NoSlope)?;
        let mut scales = vec![1u32, gamma];
        scales.extend(origin.squares().iter().map(|s| f.add(s.alpha(), f.mul(s.beta(), gamma))));
        let mut row_order = Vec::with_capacity(k * q);
        for (g, &lam) in scales.iter().enumerate() {
            for u in 0..q as u32 {
                row_order.push(g * q + f.mul(lam, u) as usize);
            }
        }
        let mut column_order = Vec::with_capacity(q * q);
        for c in 0..q as u32 {
            for x in 0..q as u32 {
                let y = f.add(f.mul(gamma, x), c);
                column_order.push((x * q as u32 + y) as usize);
            }
        }
        let shifts = self
            .check_tiles(k, q, &row_order, &column_order)
            .map_err(|(group, class)| CodeError::NotCirculant { group, class })?;
        Ok(CirculantGrid {
            layout: GridLayout::Diagonal { gamma, row_scales: scales },
            row_order,
            column_order,
            shifts,
        })
    }

    /// Returns per-tile offsets `s` with `H'[u][x] = 1` iff `x = u + s (mod q)`.
    fn check_tiles(
        &self,
        k: usize,
        q: usize,
        row_order: &[usize],
        column_order: &[usize],
    ) -> Result<Vec<Vec<usize>>, (usize, usize)> {
        let mut row_pos = vec![usize::MAX; self.rows];
        for (i, &r) in row_order.iter().enumerate() {
            row_pos[r] = i;
        }
        let mut shifts = vec![vec![0; q]; k];
        for g in 0..k {
            for t in 0..q {
                let mut offset = None;
                for u in 0..q {
                    let r = row_order[g * q + u];
                    let hits: Vec<usize> =
                        (0..q).filter(|&x| self.col_adj[column_order[t * q + x]].binary_search(&r).is_ok()).collect();
                    if hits.len() != 1 {
                        return Err((g + 1, t));
                    }
                    let s = (hits[0] + q - u) % q;
                    if *offset.get_or_insert(s) != s {
                        return Err((g + 1, t));
                    }
                }
                shifts[g][t] = offset.unwrap_or(0);
            }
        }
        debug_assert!(row_pos.iter().all(|&p| p != usize::MAX));
        Ok(shifts)
    }
}

/// True iff the rows of `h1` are a permutation of the rows of `h2`.
pub fn equal_up_to_row_perm(h1: &ParityCheckMatrix, h2: &ParityCheckMatrix) -> bool {
    if h1.rows != h2.rows || h1.cols != h2.cols {
        return false;
    }
    let mut a = h1.row_adj.clone();
    let mut b = h2.row_adj.clone();
    a.sort();
    b.sort();
    a == b
}

/// Same as [`equal_up_to_row_perm`] after sending column `j` of `h1` to `col_map[j]`.
pub fn equal_up_to_row_perm_relabelled(h1: &ParityCheckMatrix, h2: &ParityCheckMatrix, col_map: &[usize]) -> bool {
    let cols: Vec<Vec<usize>> = {
        let mut c = vec![Vec::new(); h1.cols];
        for (j, col) in h1.col_adj.iter().enumerate() {
            c[col_map[j]] = col.clone();
        }
        c
    };
    equal_up_to_row_perm(&ParityCheckMatrix::from_columns(h1.rows, cols), h2)
}

/// Block relabelling `(x, y) -> (l*x, y)` carrying the code of `M_l` onto that of `M`.
pub fn scaling_column_map(q: u32, l: u32) -> Vec<usize> {
    let f = crate::gf::PrimeField::new(q as u64).expect("prime order");
    (0..q * q)
        .map(|j| {
            let (x, y) = (j / q, j % q);
            (f.mul(l, x) * q + y) as usize
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankRate {
    pub rank: usize,
    pub dimension: usize,
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeDescriptor {
    pub q: u32,
    pub m: usize,
    pub alphas: Vec<u32>,
    pub betas: Vec<u32>,
    #[serde(rename = "N")]
    pub n: usize,
    pub k: usize,
    pub rank: usize,
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridLayout {
    RowMajor,
    ColumnMajor,
    Diagonal { gamma: u32, row_scales: Vec<u32> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CirculantGrid {
    pub layout: GridLayout,
    pub row_order: Vec<usize>,
    pub column_order: Vec<usize>,
    /// `shifts[g][c]` for group g and column class c.
    pub shifts: Vec<Vec<usize>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::PrimeField;

    fn code(q: u64, alphas: &[i64]) -> ParityCheckMatrix {
        code_from_mols(&MolsSet::reduced(PrimeField::new(q).unwrap(), alphas).unwrap())
    }

    #[test]
    fn dimensions_and_weights() {
        let h = code(13, &[1, 2]);
        assert_eq!((h.rows(), h.cols()), (52, 169));
        assert!(h.column_weights().iter().all(|&w| w == 4));
        assert!(h.row_weights().iter().all(|&w| w == 13));
        let h = code(3, &[1]);
        assert_eq!((h.rows(), h.cols()), (9, 9));
    }

    #[test]
    fn girth_small_cases() {
        assert_eq!(code(5, &[1, 2]).girth(), Some(6));
        let h = ParityCheckMatrix::from_columns(2, vec![vec![0, 1], vec![0, 1]]);
        assert_eq!(h.girth(), Some(4));
        let h = ParityCheckMatrix::from_columns(1, vec![vec![0]]);
        assert_eq!(h.girth(), None);
    }

    #[test]
    fn rate_bound() {
        let rr = code(13, &[1, 4]).rank_and_rate();
        assert!(rr.rate >= 9.0 / 13.0 - 1e-12);
        assert!(code(5, &[1, 2]).rank_and_rate().rate >= 0.2);
    }

    #[test]
    fn alist_roundtrip() {
        let h = code(5, &[1, 2]);
        let text = h.to_alist();
        assert!(text.starts_with("25 20\n4 5\n"));
        let back = ParityCheckMatrix::from_alist(&text).unwrap();
        assert!(equal_up_to_row_perm(&h, &back));
        assert!(ParityCheckMatrix::from_alist("3 2\n").is_err());
    }

    #[test]
    fn circulants() {
        for (q, a) in [(5u64, vec![1i64, 2]), (13, vec![1, 4]), (7, vec![1, 6])] {
            let g = code(q, &a).circulant_grid().unwrap();
            assert_eq!(g.shifts.len(), a.len() + 2);
        }
        let mut h = code(5, &[1, 2]);
        h.row_adj.swap(0, 7);
        let cols: Vec<Vec<usize>> = {
            let mut c = vec![Vec::new(); h.cols];
            for (r, row) in h.row_adj.iter().enumerate() {
                for &j in row {
                    c[j].push(r);
                }
            }
            c
        };
        let mut shuffled = ParityCheckMatrix::from_columns(h.rows, cols);
        shuffled.origin = h.origin.clone();
        assert!(matches!(shuffled.circulant_grid(), Err(CodeError::NotCirculant { .. })));
    }

    #[test]
    fn row_permutation_equality() {
        let f5 = PrimeField::new(5).unwrap();
        let a = code_from_mols(&MolsSet::new(f5, &[(2, 2), (4, 2)]).unwrap());
        let b = code(5, &[1, 2]);
        assert!(equal_up_to_row_perm(&a, &b));
        let scaled = code(5, &[2, 4]);
        assert!(equal_up_to_row_perm_relabelled(&scaled, &b, &scaling_column_map(5, 2)));
        assert!(!equal_up_to_row_perm(&code(13, &[1, 2]), &code(13, &[1, 3])));
    }
}
