//! Exact shattering dimensions of finite concept classes.
//!
//! The central quantity is the depth of the deepest perfect mistake tree a
//! version space shatters: internal nodes carry a point and two distinct
//! edge labels, and every root-to-leaf path must be realizable. The empty
//! space has dimension `-1`; a non-empty space with no point realizing two
//! distinct labels has dimension `0`; otherwise the dimension is
//! `max over (x, y0 != y1) of min(dim(V|x=y0), dim(V|x=y1)) + 1`.
//!
//! [`DimSolver`] computes this by memoized recursion with sound pruning
//! (candidate labels restricted to labels actually realized at the point,
//! size-based upper bounds from the halving argument). The pruning never
//! changes the result, only the work. [`littlestone_dim_bruteforce`]
//! recomputes the same quantity by exhaustive search over explicit tree
//! assignments with no memoization and no candidate restriction; it exists
//! to cross-check the solver and only accepts tiny classes.

use std::collections::HashMap;

use crate::caps::Caps;
use crate::concept::{is_realizable, loss_class, ClassRef, LabeledSequence, MemberSet, VersionSpace};
use crate::error::{Error, Result};

fn floor_log2(n: usize) -> i32 {
    debug_assert!(n > 0);
    (usize::BITS - 1 - n.leading_zeros()) as i32
}

/// Memoized dimension solver bound to one concept class.
///
/// The memo cache is keyed on the canonical member bit-pattern. It is
/// bounded: when it outgrows the configured capacity, the least-recently
/// used half of the entries is evicted. One solver serves one class; for
/// concurrent work, give each task its own solver.
pub struct DimSolver {
    class: ClassRef,
    cache: HashMap<Vec<u64>, (i32, u64)>,
    tick: u64,
    nodes_opened: u64,
    node_budget: u64,
    cache_cap: usize,
}

impl DimSolver {
    /// New solver for `class` with budgets from `caps`.
    pub fn new(class: &ClassRef, caps: &Caps) -> DimSolver {
        DimSolver {
            class: ClassRef::clone(class),
            cache: HashMap::new(),
            tick: 0,
            nodes_opened: 0,
            node_budget: caps.dim_node_budget,
            cache_cap: caps.dim_cache_entries.max(2),
        }
    }

    /// The class this solver is bound to.
    pub fn class(&self) -> &ClassRef {
        &self.class
    }

    /// Dimension of the version space with the given members.
    pub fn dim(&mut self, members: &MemberSet) -> Result<i32> {
        self.dim_rec(members)
    }

    /// Dimension of the full class.
    pub fn dim_full(&mut self) -> Result<i32> {
        let full = MemberSet::full(self.class.n_hypotheses());
        self.dim_rec(&full)
    }

    fn cache_get(&mut self, key: &[u64]) -> Option<i32> {
        self.tick += 1;
        let tick = self.tick;
        self.cache.get_mut(key).map(|entry| {
            entry.1 = tick;
            entry.0
        })
    }

    fn cache_put(&mut self, key: Vec<u64>, value: i32) {
        if self.cache.len() >= self.cache_cap {
            // Evict the least-recently-used half in one sweep.
            let mut ticks: Vec<u64> = self.cache.values().map(|&(_, t)| t).collect();
            ticks.sort_unstable();
            let cutoff = ticks[ticks.len() / 2];
            self.cache.retain(|_, &mut (_, t)| t >= cutoff);
        }
        self.tick += 1;
        self.cache.insert(key, (value, self.tick));
    }

    fn restrict_members(&self, members: &MemberSet, x: usize, y: usize) -> MemberSet {
        let mut out = MemberSet::empty(self.class.n_hypotheses());
        for h in members.iter() {
            if self.class.eval(h, x) == y {
                out.insert(h);
            }
        }
        out
    }

    fn dim_rec(&mut self, members: &MemberSet) -> Result<i32> {
        if members.is_empty() {
            return Ok(-1);
        }
        if let Some(v) = self.cache_get(members.key()) {
            return Ok(v);
        }
        self.nodes_opened += 1;
        if self.nodes_opened > self.node_budget {
            return Err(Error::Resource(format!(
                "dimension recursion exceeded its node budget of {}",
                self.node_budget
            )));
        }

        let size_bound = floor_log2(members.len());
        let mut best = 0;
        let nx = self.class.n_points();
        let ny = self.class.n_labels();
        let mut counts = vec![0usize; ny];

        'points: for x in 0..nx {
            if best == size_bound {
                break;
            }
            counts.iter_mut().for_each(|c| *c = 0);
            for h in members.iter() {
                counts[self.class.eval(h, x)] += 1;
            }
            let realized: Vec<usize> = (0..ny).filter(|&y| counts[y] > 0).collect();
            if realized.len() < 2 {
                continue;
            }
            for i in 0..realized.len() {
                for j in i + 1..realized.len() {
                    // Unrealized labels give the empty subspace and cannot
                    // attain the max, so only realized pairs are candidates.
                    let (mut ya, mut yb) = (realized[i], realized[j]);
                    if counts[ya] > counts[yb] {
                        std::mem::swap(&mut ya, &mut yb);
                    }
                    let ub = floor_log2(counts[ya]).min(floor_log2(counts[yb])) + 1;
                    if ub <= best {
                        continue;
                    }
                    let va = self.restrict_members(members, x, ya);
                    let la = self.dim_rec(&va)?;
                    if la < best {
                        continue;
                    }
                    // The other side is non-empty, so its dimension is >= 0
                    // and min(la, lb) + 1 = 1 whenever la == 0.
                    let cand = if la == 0 {
                        1
                    } else {
                        let vb = self.restrict_members(members, x, yb);
                        let lb = self.dim_rec(&vb)?;
                        la.min(lb) + 1
                    };
                    if cand > best {
                        best = cand;
                        if best == size_bound {
                            continue 'points;
                        }
                    }
                }
            }
        }

        self.cache_put(members.key().to_vec(), best);
        Ok(best)
    }

    /// Builds a shattered tree of depth `d` under `members`, or reports that
    /// none exists. Construction is deterministic: the first admissible
    /// point and label pair in index order is chosen at every node.
    pub fn witness(&mut self, members: &MemberSet, d: usize) -> Result<Option<ShatteredTree>> {
        if (self.dim_rec(members)? as i64) < d as i64 {
            return Ok(None);
        }
        let mut nodes = vec![(0usize, 0usize, 0usize); (1usize << d) - 1];
        self.fill_witness(members, d, 0, 0, &mut nodes)?;
        Ok(Some(ShatteredTree { depth: d, nodes }))
    }

    fn fill_witness(
        &mut self,
        members: &MemberSet,
        d: usize,
        level: usize,
        addr: usize,
        nodes: &mut [(usize, usize, usize)],
    ) -> Result<()> {
        if level == d {
            return Ok(());
        }
        let need = (d - level - 1) as i32;
        let nx = self.class.n_points();
        let ny = self.class.n_labels();
        let mut counts = vec![0usize; ny];
        for x in 0..nx {
            counts.iter_mut().for_each(|c| *c = 0);
            for h in members.iter() {
                counts[self.class.eval(h, x)] += 1;
            }
            let realized: Vec<usize> = (0..ny).filter(|&y| counts[y] > 0).collect();
            for i in 0..realized.len() {
                for j in i + 1..realized.len() {
                    let (y0, y1) = (realized[i], realized[j]);
                    let v0 = self.restrict_members(members, x, y0);
                    if self.dim_rec(&v0)? < need {
                        continue;
                    }
                    let v1 = self.restrict_members(members, x, y1);
                    if self.dim_rec(&v1)? < need {
                        continue;
                    }
                    nodes[(1 << level) - 1 + addr] = (x, y0, y1);
                    self.fill_witness(&v0, d, level + 1, addr * 2, nodes)?;
                    self.fill_witness(&v1, d, level + 1, addr * 2 + 1, nodes)?;
                    return Ok(());
                }
            }
        }
        Err(Error::Internal(format!(
            "no shattering candidate at depth {level} despite dimension >= {}",
            d - level
        )))
    }
}

/// Dimension of a version space.
pub fn littlestone_dim(v: &VersionSpace, caps: &Caps) -> Result<i32> {
    DimSolver::new(v.class(), caps).dim(v.members())
}

/// Exhaustive-search oracle for the dimension.
///
/// Finds the largest `n <= dmax` admitting an explicit shattered tree by
/// backtracking over all node points and all label pairs, testing branch
/// feasibility with direct table scans. No memoization, no candidate
/// restriction, no size pruning; intended solely to cross-check
/// [`littlestone_dim`] on tiny classes. Accepts at most
/// [`Caps::bruteforce_max_points`] points and
/// [`Caps::bruteforce_max_hypotheses`] hypotheses.
pub fn littlestone_dim_bruteforce(v: &VersionSpace, dmax: usize, caps: &Caps) -> Result<i32> {
    let class = v.class();
    if class.n_points() > caps.bruteforce_max_points {
        return Err(Error::Resource(format!(
            "brute-force oracle accepts at most {} points, class has {}",
            caps.bruteforce_max_points,
            class.n_points()
        )));
    }
    if v.len() > caps.bruteforce_max_hypotheses {
        return Err(Error::Resource(format!(
            "brute-force oracle accepts at most {} hypotheses, space has {}",
            caps.bruteforce_max_hypotheses,
            v.len()
        )));
    }

    fn exists(class: &ClassRef, members: &[usize], depth: usize) -> bool {
        if depth == 0 {
            return !members.is_empty();
        }
        let nx = class.n_points();
        let ny = class.n_labels();
        for x in 0..nx {
            for y0 in 0..ny {
                for y1 in y0 + 1..ny {
                    let s0: Vec<usize> =
                        members.iter().copied().filter(|&h| class.eval(h, x) == y0).collect();
                    if s0.is_empty() {
                        continue;
                    }
                    let s1: Vec<usize> =
                        members.iter().copied().filter(|&h| class.eval(h, x) == y1).collect();
                    if s1.is_empty() {
                        continue;
                    }
                    if exists(class, &s0, depth - 1) && exists(class, &s1, depth - 1) {
                        return true;
                    }
                }
            }
        }
        false
    }

    let members = v.member_indices();
    let mut d: i32 = -1;
    while d < dmax as i32 && exists(class, &members, (d + 1) as usize) {
        d += 1;
    }
    Ok(d)
}

/// Dimension of the binary disagreement-loss class of `class`.
pub fn sequential_graph_dim(class: &ClassRef, caps: &Caps) -> Result<i32> {
    let loss = loss_class(class, caps)?;
    littlestone_dim(&VersionSpace::full(&loss), caps)
}

/// A perfect mistake tree witnessing a shattering of some depth.
///
/// The node for the branch address `b` (a bit string of length `t < depth`,
/// most significant bit first) sits at index `2^t - 1 + b` and carries a
/// point together with two distinct edge labels; edge `0` carries the first
/// label, edge `1` the second.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShatteredTree {
    depth: usize,
    nodes: Vec<(usize, usize, usize)>,
}

impl ShatteredTree {
    /// Depth of the tree (number of edges on every root-to-leaf path).
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Node `(point, label0, label1)` at the given level and in-level index.
    pub fn node(&self, level: usize, addr: usize) -> (usize, usize, usize) {
        self.nodes[(1 << level) - 1 + addr]
    }

    /// All `2^depth` root-to-leaf paths as labeled sequences, in leaf order.
    pub fn paths(&self) -> Vec<LabeledSequence> {
        let mut out = Vec::with_capacity(1 << self.depth);
        for leaf in 0..1usize << self.depth {
            let mut entries = Vec::with_capacity(self.depth);
            let mut addr = 0usize;
            for level in 0..self.depth {
                let bit = leaf >> (self.depth - 1 - level) & 1;
                let (x, y0, y1) = self.node(level, addr);
                entries.push((x, if bit == 0 { y0 } else { y1 }));
                addr = addr * 2 + bit;
            }
            out.push(LabeledSequence::new(entries));
        }
        out
    }

    /// Checks the witness against a version space: perfect shape, distinct
    /// edge labels at every node, and a realizable hypothesis behind every
    /// root-to-leaf path.
    pub fn validate(&self, v: &VersionSpace) -> Result<()> {
        if self.nodes.len() != (1usize << self.depth) - 1 {
            return Err(Error::InvalidInput(format!(
                "tree of depth {} must have {} nodes, found {}",
                self.depth,
                (1usize << self.depth) - 1,
                self.nodes.len()
            )));
        }
        for &(x, y0, y1) in &self.nodes {
            v.class().check_example(x, y0)?;
            v.class().check_example(x, y1)?;
            if y0 == y1 {
                return Err(Error::InvalidInput(format!(
                    "node at point {x} repeats edge label {y0}"
                )));
            }
        }
        for (leaf, path) in self.paths().into_iter().enumerate() {
            if !is_realizable(v, &path)? {
                return Err(Error::InvalidInput(format!(
                    "path to leaf {leaf} is not realizable"
                )));
            }
        }
        Ok(())
    }
}

/// A shattered tree of depth `d` under `v`, or `None` when `d` exceeds the
/// dimension. The returned witness always passes [`ShatteredTree::validate`].
pub fn shattered_tree(v: &VersionSpace, d: usize, caps: &Caps) -> Result<Option<ShatteredTree>> {
    DimSolver::new(v.class(), caps).witness(v.members(), d)
}
