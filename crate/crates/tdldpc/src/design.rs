//! Transversal designs TD(m+2, q) built from a set of cyclic MOLS.

use crate::mols::MolsSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A point `(value, group)`; groups are numbered from 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TdPoint {
    pub value: u32,
    pub group: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TdViolation {
    #[error("point {0:?} lies outside the k*q point set")]
    PointOutOfRange(TdPoint),
    #[error("block {block} has {size} points, expected {k}")]
    BlockSize { block: usize, size: usize, k: usize },
    #[error("block {block} contains two points of group {group}")]
    GroupRepeated { block: usize, group: usize },
    #[error("expected {expected} blocks, found {found}")]
    BlockCount { expected: usize, found: usize },
    #[error("points {0:?} and {1:?} are covered {2} times")]
    PairCoverage(TdPoint, TdPoint, usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransversalDesign {
    pub k: usize,
    pub q: u32,
    pub blocks: Vec<Vec<TdPoint>>,
}

/// Block `(x, y)` is stored at index `x*q + y`.
pub fn build_td(m: &MolsSet) -> TransversalDesign {
    let q = m.field().order();
    let k = m.m() + 2;
    let mut blocks = Vec::with_capacity((q * q) as usize);
    for x in 0..q {
        for y in 0..q {
            let mut b = Vec::with_capacity(k);
            b.push(TdPoint { value: x, group: 1 });
            b.push(TdPoint { value: y, group: 2 });
            for (i, sq) in m.squares().iter().enumerate() {
                b.push(TdPoint { value: sq.entry(x, y), group: i + 3 });
            }
            blocks.push(b);
        }
    }
    TransversalDesign { k, q, blocks }
}

impl TransversalDesign {
    pub fn num_points(&self) -> usize {
        self.k * self.q as usize
    }

    /// Row index of a point: groups in order, values in field order.
    pub fn point_index(&self, p: TdPoint) -> usize {
        (p.group - 1) * self.q as usize + p.value as usize
    }

    pub fn point_at(&self, idx: usize) -> TdPoint {
        let q = self.q as usize;
        TdPoint { value: (idx % q) as u32, group: idx / q + 1 }
    }

    /// Column-wise sparse incidence: for each block, its sorted row indices.
    pub fn incidence_matrix(&self) -> Vec<Vec<usize>> {
        self.blocks
            .iter()
            .map(|b| {
                let mut rows: Vec<usize> = b.iter().map(|&p| self.point_index(p)).collect();
                rows.sort_unstable();
                rows
            })
            .collect()
    }
}

/// Checks the four axioms directly and reports the first violation.
pub fn validate_td(d: &TransversalDesign) -> Result<(), TdViolation> {
    let q = d.q as usize;
    let n = d.num_points();
    for (bi, b) in d.blocks.iter().enumerate() {
        if b.len() != d.k {
            return Err(TdViolation::BlockSize { block: bi, size: b.len(), k: d.k });
        }
        let mut seen = vec![false; d.k + 1];
        for &p in b {
            if p.group == 0 || p.group > d.k || p.value as usize >= q {
                return Err(TdViolation::PointOutOfRange(p));
            }
            if seen[p.group] {
                return Err(TdViolation::GroupRepeated { block: bi, group: p.group });
            }
            seen[p.group] = true;
        }
    }
    let mut cover = vec![0usize; n * n];
    for b in &d.blocks {
        for (i, &p) in b.iter().enumerate() {
            for &r in &b[i + 1..] {
                let (a, c) = (d.point_index(p), d.point_index(r));
                cover[a.min(c) * n + a.max(c)] += 1;
            }
        }
    }
    for a in 0..n {
        for c in a + 1..n {
            let same_group = a / q == c / q;
            let want = usize::from(!same_group);
            if cover[a * n + c] != want {
                return Err(TdViolation::PairCoverage(d.point_at(a), d.point_at(c), cover[a * n + c]));
            }
        }
    }
    if d.blocks.len() != q * q {
        return Err(TdViolation::BlockCount { expected: q * q, found: d.blocks.len() });
    }
    Ok(())
}
