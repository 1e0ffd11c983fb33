//! Finite set systems, their colourings, and an isomorphism-invariant
//! canonical form.

use crate::design::{TdPoint, TransversalDesign};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SetSystemError {
    #[error("point {0} is not covered by any block")]
    Uncovered(usize),
    #[error("block {0} references point {1} outside 0..{2}")]
    OutOfRange(usize, usize, usize),
    #[error("block {0} repeats a point")]
    Repeated(usize),
    #[error("colouring covers {0} points, system has {1}")]
    ColouringLength(usize, usize),
}

/// Points are `0..num_points`; blocks are kept sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SetSystem {
    num_points: usize,
    blocks: Vec<Vec<usize>>,
}

impl SetSystem {
    pub fn new(num_points: usize, blocks: Vec<Vec<usize>>) -> Result<Self, SetSystemError> {
        let mut covered = vec![false; num_points];
        let mut blocks = blocks;
        for (i, b) in blocks.iter_mut().enumerate() {
            b.sort_unstable();
            if b.windows(2).any(|w| w[0] == w[1]) {
                return Err(SetSystemError::Repeated(i));
            }
            for &p in b.iter() {
                if p >= num_points {
                    return Err(SetSystemError::OutOfRange(i, p, num_points));
                }
                covered[p] = true;
            }
        }
        if let Some(p) = covered.iter().position(|&c| !c) {
            return Err(SetSystemError::Uncovered(p));
        }
        Ok(Self { num_points, blocks })
    }

    /// Builds a system from 1-based blocks; the point count is the largest label.
    pub fn from_one_based(blocks: &[&[usize]]) -> Result<Self, SetSystemError> {
        let n = blocks.iter().flat_map(|b| b.iter()).copied().max().unwrap_or(0);
        Self::new(n, blocks.iter().map(|b| b.iter().map(|&p| p - 1).collect()).collect())
    }

    pub fn num_points(&self) -> usize {
        self.num_points
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Number of blocks.
    pub fn size(&self) -> usize {
        self.blocks.len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.num_points];
        for b in &self.blocks {
            for &p in b {
                d[p] += 1;
            }
        }
        d
    }

    pub fn odd_points(&self) -> Vec<usize> {
        self.degrees().iter().enumerate().filter(|(_, &d)| d % 2 == 1).map(|(p, _)| p).collect()
    }

    /// Blocks containing each point.
    pub fn point_blocks(&self) -> Vec<Vec<usize>> {
        let mut pb = vec![Vec::new(); self.num_points];
        for (i, b) in self.blocks.iter().enumerate() {
            for &p in b {
                pb[p].push(i);
            }
        }
        pb
    }

    pub fn is_connected(&self) -> bool {
        if self.blocks.is_empty() {
            return self.num_points == 0;
        }
        let pb = self.point_blocks();
        let mut seen = vec![false; self.blocks.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(b) = stack.pop() {
            for &p in &self.blocks[b] {
                for &c in &pb[p] {
                    if !seen[c] {
                        seen[c] = true;
                        stack.push(c);
                    }
                }
            }
        }
        seen.iter().all(|&s| s)
    }

    /// Rows are points, columns are blocks.
    pub fn incidence_matrix(&self) -> Vec<Vec<u8>> {
        let mut m = vec![vec![0u8; self.blocks.len()]; self.num_points];
        for (j, b) in self.blocks.iter().enumerate() {
            for &p in b {
                m[p][j] = 1;
            }
        }
        m
    }

    /// Renames point `p` to `perm[p]`.
    pub fn relabel(&self, perm: &[usize]) -> SetSystem {
        let blocks = self.blocks.iter().map(|b| b.iter().map(|&p| perm[p]).collect()).collect();
        SetSystem::new(self.num_points, blocks).expect("relabelling preserves validity")
    }

    pub fn canonical_form(&self) -> String {
        encode(&canonical_code(self, None))
    }

    /// Canonical form of the system together with an unlabelled partition of its points.
    pub fn coloured_canonical_form(&self, c: &Colouring) -> String {
        encode(&canonical_code(self, Some(&c.colours)))
    }

    /// Block permutation and point map embedding `other` into `self`, if one exists.
    pub fn embeds(&self, other: &SetSystem) -> bool {
        if other.blocks.len() > self.blocks.len() || other.num_points > self.num_points {
            return false;
        }
        let mut pmap = vec![usize::MAX; other.num_points];
        let mut used_pts = vec![false; self.num_points];
        let mut used_blocks = vec![false; self.blocks.len()];
        embed_rec(self, other, 0, &mut pmap, &mut used_pts, &mut used_blocks)
    }
}

fn embed_rec(
    host: &SetSystem,
    guest: &SetSystem,
    bi: usize,
    pmap: &mut Vec<usize>,
    used_pts: &mut Vec<bool>,
    used_blocks: &mut Vec<bool>,
) -> bool {
    if bi == guest.blocks.len() {
        return true;
    }
    let gb = &guest.blocks[bi];
    for hb in 0..host.blocks.len() {
        if used_blocks[hb] || host.blocks[hb].len() != gb.len() {
            continue;
        }
        let target = &host.blocks[hb];
        // Already-mapped guest points must land inside the host block.
        if gb.iter().any(|&p| pmap[p] != usize::MAX && target.binary_search(&pmap[p]).is_err()) {
            continue;
        }
        used_blocks[hb] = true;
        let fresh: Vec<usize> = gb.iter().copied().filter(|&p| pmap[p] == usize::MAX).collect();
        let free: Vec<usize> =
            target.iter().copied().filter(|&h| !used_pts[h] && !gb.iter().any(|&p| pmap[p] == h)).collect();
        if assign_fresh(host, guest, bi, &fresh, &free, 0, pmap, used_pts, used_blocks) {
            return true;
        }
        used_blocks[hb] = false;
    }
    false
}

#[allow(clippy::too_many_arguments)]
fn assign_fresh(
    host: &SetSystem,
    guest: &SetSystem,
    bi: usize,
    fresh: &[usize],
    free: &[usize],
    i: usize,
    pmap: &mut Vec<usize>,
    used_pts: &mut Vec<bool>,
    used_blocks: &mut Vec<bool>,
) -> bool {
    if i == fresh.len() {
        return embed_rec(host, guest, bi + 1, pmap, used_pts, used_blocks);
    }
    for &h in free {
        if used_pts[h] {
            continue;
        }
        used_pts[h] = true;
        pmap[fresh[i]] = h;
        if assign_fresh(host, guest, bi, fresh, free, i + 1, pmap, used_pts, used_blocks) {
            return true;
        }
        pmap[fresh[i]] = usize::MAX;
        used_pts[h] = false;
    }
    false
}

fn encode(code: &[u32]) -> String {
    code.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(".")
}

/// Vertices: twin classes of points, then blocks, then colour classes.
fn canonical_code(s: &SetSystem, colours: Option<&[u8]>) -> Vec<u32> {
    let pb = s.point_blocks();
    let mut twin: BTreeMap<(Vec<usize>, u8), u32> = BTreeMap::new();
    for p in 0..s.num_points {
        let c = colours.map_or(0, |c| c[p]);
        *twin.entry((pb[p].clone(), c)).or_insert(0) += 1;
    }
    let nb = s.blocks.len();
    let mut label: Vec<u32> = Vec::new();
    let mut adj: Vec<Vec<usize>> = Vec::new();
    for _ in 0..nb {
        label.push(1 << 16);
        adj.push(Vec::new());
    }
    let ncol = colours.map_or(0, |c| c.iter().map(|&x| x as usize + 1).max().unwrap_or(0));
    for _ in 0..ncol {
        label.push(2 << 16);
        adj.push(Vec::new());
    }
    for ((blocks, c), mult) in twin {
        let v = label.len();
        label.push(mult);
        adj.push(Vec::new());
        for b in blocks {
            adj[v].push(b);
            adj[b].push(v);
        }
        if colours.is_some() {
            let cv = nb + c as usize;
            adj[v].push(cv);
            adj[cv].push(v);
        }
    }
    let initial = ranks(&label.iter().map(|&l| vec![l]).collect::<Vec<_>>());
    search(&label, &adj, initial)
}

fn ranks<T: Ord + Clone>(sigs: &[T]) -> Vec<u32> {
    let mut sorted: Vec<T> = sigs.to_vec();
    sorted.sort();
    sorted.dedup();
    sigs.iter().map(|s| sorted.binary_search(s).unwrap() as u32).collect()
}

fn refine(adj: &[Vec<usize>], mut colours: Vec<u32>) -> Vec<u32> {
    let mut cells = colours.iter().collect::<HashSet<_>>().len();
    loop {
        let sigs: Vec<(u32, Vec<u32>)> = (0..adj.len())
            .map(|v| {
                let mut n: Vec<u32> = adj[v].iter().map(|&u| colours[u]).collect();
                n.sort_unstable();
                (colours[v], n)
            })
            .collect();
        let next = ranks(&sigs);
        let count = next.iter().collect::<HashSet<_>>().len();
        colours = next;
        if count == cells {
            return colours;
        }
        cells = count;
    }
}

fn search(label: &[u32], adj: &[Vec<usize>], colours: Vec<u32>) -> Vec<u32> {
    let colours = refine(adj, colours);
    let n = colours.len();
    let mut count = vec![0usize; n];
    for &c in &colours {
        count[c as usize] += 1;
    }
    let Some(cell) = (0..n).find(|&c| count[c] > 1) else {
        let mut order = vec![0usize; n];
        for v in 0..n {
            order[colours[v] as usize] = v;
        }
        let mut code = Vec::new();
        for &v in &order {
            let mut nb: Vec<u32> = adj[v].iter().map(|&u| colours[u]).collect();
            nb.sort_unstable();
            code.push(label[v]);
            code.push(nb.len() as u32);
            code.extend(nb);
        }
        return code;
    };
    let mut best: Option<Vec<u32>> = None;
    for v in (0..n).filter(|&v| colours[v] as usize == cell) {
        let ind: Vec<u32> = (0..n).map(|u| 2 * colours[u] + u32::from(colours[u] as usize == cell && u != v)).collect();
        let code = search(label, adj, ind);
        if best.as_ref().is_none_or(|b| code < *b) {
            best = Some(code);
        }
    }
    best.expect("nonempty cell")
}

/// Colour of each point, numbered from 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Colouring {
    colours: Vec<u8>,
}

impl Colouring {
    pub fn new(s: &SetSystem, colours: Vec<u8>) -> Result<Self, SetSystemError> {
        if colours.len() != s.num_points {
            return Err(SetSystemError::ColouringLength(colours.len(), s.num_points));
        }
        Ok(Self { colours })
    }

    /// From colour classes given with 1-based points, as in `({1,8},{2,6},...)`.
    pub fn from_classes(s: &SetSystem, classes: &[&[usize]]) -> Result<Self, SetSystemError> {
        let mut colours = vec![u8::MAX; s.num_points];
        for (c, cls) in classes.iter().enumerate() {
            for &p in cls.iter() {
                if p == 0 || p > s.num_points {
                    return Err(SetSystemError::OutOfRange(c, p, s.num_points));
                }
                colours[p - 1] = c as u8;
            }
        }
        if let Some(p) = colours.iter().position(|&c| c == u8::MAX) {
            return Err(SetSystemError::Uncovered(p));
        }
        Ok(Self { colours })
    }

    pub fn colour(&self, p: usize) -> u8 {
        self.colours[p]
    }

    pub fn colours(&self) -> &[u8] {
        &self.colours
    }

    pub fn num_colours(&self) -> usize {
        self.colours.iter().map(|&c| c as usize + 1).max().unwrap_or(0)
    }

    pub fn classes(&self) -> Vec<Vec<usize>> {
        let mut cls = vec![Vec::new(); self.num_colours()];
        for (p, &c) in self.colours.iter().enumerate() {
            cls[c as usize].push(p);
        }
        cls
    }

    pub fn is_proper(&self, s: &SetSystem) -> bool {
        s.blocks.iter().all(|b| {
            let mut seen = 0u64;
            b.iter().all(|&p| {
                let bit = 1u64 << self.colours[p];
                let fresh = seen & bit == 0;
                seen |= bit;
                fresh
            })
        })
    }

    /// Short notation with 1-based points, e.g. `({1,8},{2,6},{3,7,9},{4,5,10})`.
    pub fn short(&self) -> String {
        let parts: Vec<String> = self
            .classes()
            .iter()
            .map(|c| format!("{{{}}}", c.iter().map(|p| (p + 1).to_string()).collect::<Vec<_>>().join(",")))
            .collect();
        format!("({})", parts.join(","))
    }
}

/// Every proper colouring with colours `0..t`, normalised so colours first
/// appear in increasing order.
pub fn raw_colourings(s: &SetSystem, t: usize) -> Vec<Colouring> {
    let pb = s.point_blocks();
    let mut out = Vec::new();
    let mut cur = vec![u8::MAX; s.num_points];
    colour_rec(s, &pb, t, 0, 0, &mut cur, &mut out);
    out
}

fn colour_rec(
    s: &SetSystem,
    pb: &[Vec<usize>],
    t: usize,
    p: usize,
    used: usize,
    cur: &mut Vec<u8>,
    out: &mut Vec<Colouring>,
) {
    if p == s.num_points {
        out.push(Colouring { colours: cur.clone() });
        return;
    }
    for c in 0..t.min(used + 1) {
        let clash = pb[p].iter().any(|&b| s.blocks[b].iter().any(|&o| o != p && cur[o] == c as u8));
        if clash {
            continue;
        }
        cur[p] = c as u8;
        colour_rec(s, pb, t, p + 1, used.max(c + 1), cur, out);
        cur[p] = u8::MAX;
    }
}

/// Non-isomorphic `t`-colourings, each represented by its first normalised
/// colouring in lexicographic order.
pub fn enumerate_colourings(s: &SetSystem, t: usize) -> Vec<Colouring> {
    let mut seen = HashSet::new();
    raw_colourings(s, t).into_iter().filter(|c| seen.insert(s.coloured_canonical_form(c))).collect()
}

pub fn is_k_colourable(s: &SetSystem, k: usize) -> bool {
    let pb = s.point_blocks();
    let mut cur = vec![u8::MAX; s.num_points];
    first_colouring(s, &pb, k, 0, 0, &mut cur)
}

fn first_colouring(s: &SetSystem, pb: &[Vec<usize>], t: usize, p: usize, used: usize, cur: &mut Vec<u8>) -> bool {
    if p == s.num_points {
        return true;
    }
    for c in 0..t.min(used + 1) {
        if pb[p].iter().any(|&b| s.blocks[b].iter().any(|&o| o != p && cur[o] == c as u8)) {
            continue;
        }
        cur[p] = c as u8;
        if first_colouring(s, pb, t, p + 1, used.max(c + 1), cur) {
            return true;
        }
    }
    cur[p] = u8::MAX;
    false
}

/// `colour_of_group[g]` is the colour sent to group `g` (both 0-based).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ColourToGroupMapping {
    colour_of_group: Vec<u8>,
}

impl ColourToGroupMapping {
    pub fn from_short(short: &[u8]) -> Option<Self> {
        let mut seen = vec![false; short.len()];
        for &c in short {
            let i = (c as usize).checked_sub(1)?;
            if i >= short.len() || seen[i] {
                return None;
            }
            seen[i] = true;
        }
        Some(Self { colour_of_group: short.iter().map(|c| c - 1).collect() })
    }

    pub fn colour_of_group(&self, g: usize) -> u8 {
        self.colour_of_group[g]
    }

    pub fn group_of_colour(&self, c: u8) -> usize {
        self.colour_of_group.iter().position(|&x| x == c).expect("bijection")
    }

    /// 1-based short notation.
    pub fn short(&self) -> Vec<u8> {
        self.colour_of_group.iter().map(|c| c + 1).collect()
    }
}

pub const MAX_MAPPING_K: usize = 6;

/// All `k!` mappings in lexicographic order of their short notation.
pub fn colour_to_group_mappings(k: usize) -> Vec<ColourToGroupMapping> {
    assert!((1..=MAX_MAPPING_K).contains(&k), "mapping table limited to k <= {MAX_MAPPING_K}");
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    perm_rec(k, &mut cur, &mut out);
    out
}

fn perm_rec(k: usize, cur: &mut Vec<u8>, out: &mut Vec<ColourToGroupMapping>) {
    if cur.len() == k {
        out.push(ColourToGroupMapping { colour_of_group: cur.clone() });
        return;
    }
    for c in 0..k as u8 {
        if !cur.contains(&c) {
            cur.push(c);
            perm_rec(k, cur, out);
            cur.pop();
        }
    }
}

/// True iff every block of the system, mapped through `points`, is a block of `d`.
pub fn is_configuration(s: &SetSystem, points: &[TdPoint], d: &TransversalDesign) -> bool {
    if points.len() != s.num_points || points.iter().any(|p| p.group == 0 || p.group > d.k || p.value >= d.q) {
        return false;
    }
    let mut design_blocks: HashSet<Vec<TdPoint>> = HashSet::new();
    for b in &d.blocks {
        let mut b = b.clone();
        b.sort();
        design_blocks.insert(b);
    }
    s.blocks.iter().all(|b| {
        let mut img: Vec<TdPoint> = b.iter().map(|&p| points[p]).collect();
        img.sort();
        design_blocks.contains(&img)
    })
}
