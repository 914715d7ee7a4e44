//! Directed graphs, single-arc moves, and the two acyclicity strategies.
//!
//! Node ids are dense `0..n`. Parent and child sets are [`NodeSet`] bitsets and
//! are kept mutually consistent by every mutating method.

use std::collections::VecDeque;
use std::fmt;

use crate::error::{Error, Result};
use crate::nodeset::NodeSet;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dag {
    n: usize,
    parents: Vec<NodeSet>,
    children: Vec<NodeSet>,
    arc_count: usize,
}

impl Dag {
    pub fn empty(n: usize) -> Self {
        Dag {
            n,
            parents: vec![NodeSet::empty(n); n],
            children: vec![NodeSet::empty(n); n],
            arc_count: 0,
        }
    }

    /// Builds a graph from `(tail, head)` pairs, rejecting cycles, self loops
    /// and out-of-range ids.
    pub fn from_arcs(n: usize, arcs: &[(usize, usize)]) -> Result<Self> {
        let mut g = Dag::empty(n);
        for &(u, v) in arcs {
            if u >= n || v >= n || u == v {
                return Err(Error::InvalidInput(format!("bad arc {u} -> {v} for n = {n}")));
            }
            if !g.has_arc(u, v) {
                g.insert_arc(u, v);
            }
        }
        if !g.is_acyclic() {
            return Err(Error::InvalidInput("arc list contains a directed cycle".into()));
        }
        Ok(g)
    }

    /// Builds a graph from per-node parent sets.
    pub fn from_parent_sets(parents: Vec<NodeSet>) -> Result<Self> {
        let n = parents.len();
        let mut g = Dag::empty(n);
        for (v, ps) in parents.iter().enumerate() {
            if ps.contains(v) {
                return Err(Error::InvalidInput(format!("node {v} is its own parent")));
            }
            g.set_parents(v, ps.clone());
        }
        if !g.is_acyclic() {
            return Err(Error::InvalidInput("parent sets contain a directed cycle".into()));
        }
        Ok(g)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn arc_count(&self) -> usize {
        self.arc_count
    }

    #[inline]
    pub fn parents(&self, v: usize) -> &NodeSet {
        &self.parents[v]
    }

    #[inline]
    pub fn children(&self, v: usize) -> &NodeSet {
        &self.children[v]
    }

    pub fn parent_sets(&self) -> &[NodeSet] {
        &self.parents
    }

    #[inline]
    pub fn has_arc(&self, u: usize, v: usize) -> bool {
        self.parents[v].contains(u)
    }

    /// Raw insertion; does not check acyclicity.
    pub(crate) fn insert_arc(&mut self, u: usize, v: usize) {
        debug_assert!(!self.has_arc(u, v));
        self.parents[v].insert(u);
        self.children[u].insert(v);
        self.arc_count += 1;
    }

    pub(crate) fn delete_arc(&mut self, u: usize, v: usize) {
        debug_assert!(self.has_arc(u, v));
        self.parents[v].remove(u);
        self.children[u].remove(v);
        self.arc_count -= 1;
    }

    /// Replaces the parent set of `v` wholesale; does not check acyclicity.
    pub(crate) fn set_parents(&mut self, v: usize, new: NodeSet) {
        for u in self.parents[v].iter() {
            self.children[u].remove(v);
        }
        self.arc_count -= self.parents[v].len();
        for u in new.iter() {
            self.children[u].insert(v);
        }
        self.arc_count += new.len();
        self.parents[v] = new;
    }

    /// All arcs sorted by (tail, head).
    pub fn arcs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.arc_count);
        for u in 0..self.n {
            for v in self.children[u].iter() {
                out.push((u, v));
            }
        }
        out
    }

    /// Kahn's algorithm; `None` if the graph has a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let mut indeg: Vec<usize> = self.parents.iter().map(NodeSet::len).collect();
        let mut queue: VecDeque<usize> = (0..self.n).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(self.n);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for v in self.children[u].iter() {
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    queue.push_back(v);
                }
            }
        }
        (order.len() == self.n).then_some(order)
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_some()
    }

    /// Is there a directed path `from ⇝ to` of length ≥ 1, ignoring the
    /// single arc `skip` if given?
    pub fn has_path(&self, from: usize, to: usize, skip: Option<(usize, usize)>) -> bool {
        let mut seen = NodeSet::empty(self.n);
        let mut stack = vec![from];
        seen.insert(from);
        while let Some(u) = stack.pop() {
            for v in self.children[u].iter() {
                if skip == Some((u, v)) {
                    continue;
                }
                if v == to {
                    return true;
                }
                if !seen.contains(v) {
                    seen.insert(v);
                    stack.push(v);
                }
            }
        }
        false
    }

    /// Strict descendants of `v`.
    pub fn descendants(&self, v: usize) -> NodeSet {
        let mut seen = NodeSet::empty(self.n);
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            for c in self.children[u].iter() {
                if !seen.contains(c) {
                    seen.insert(c);
                    stack.push(c);
                }
            }
        }
        seen
    }

    /// `{u ≠ v : no directed path v ⇝ u}`.
    pub fn non_descendants(&self, v: usize) -> NodeSet {
        let mut out = NodeSet::full(self.n);
        out.difference_with(&self.descendants(v));
        out.remove(v);
        out
    }

    /// One `"i j"` line per arc, sorted, 0-based.
    pub fn to_arc_list(&self) -> String {
        let mut s = String::new();
        for (u, v) in self.arcs() {
            s.push_str(&format!("{u} {v}\n"));
        }
        s
    }

    pub fn parse_arc_list(n: usize, text: &str) -> Result<Self> {
        let mut arcs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let mut next = || -> Result<usize> {
                it.next()
                    .ok_or_else(|| Error::parse(lineno + 1, "expected two node ids"))?
                    .parse()
                    .map_err(|_| Error::parse(lineno + 1, "node id is not an integer"))
            };
            let u = next()?;
            let v = next()?;
            arcs.push((u, v));
        }
        Dag::from_arcs(n, &arcs)
    }
}

impl fmt::Debug for Dag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dag(n={}, arcs={:?})", self.n, self.arcs())
    }
}

/// `desc[u]` holds every strict descendant of `u`, i.e. `bits[u][v]` is
/// "u is an ancestor of v".
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AncestorMatrix {
    desc: Vec<NodeSet>,
}

impl AncestorMatrix {
    /// Full transitive closure by reverse topological sweep.
    pub fn from_dag(dag: &Dag) -> Self {
        let n = dag.n();
        let order = dag
            .topological_order()
            .expect("AncestorMatrix::from_dag requires an acyclic graph");
        let mut desc = vec![NodeSet::empty(n); n];
        for &u in order.iter().rev() {
            let mut row = NodeSet::empty(n);
            for c in dag.children(u).iter() {
                row.insert(c);
                row.union_with(&desc[c]);
            }
            desc[u] = row;
        }
        AncestorMatrix { desc }
    }

    #[inline]
    pub fn is_ancestor(&self, u: usize, v: usize) -> bool {
        self.desc[u].contains(v)
    }

    pub fn descendants(&self, u: usize) -> &NodeSet {
        &self.desc[u]
    }

    /// Update after inserting `u -> v` into the graph.
    fn on_add(&mut self, u: usize, v: usize) {
        let mut gained = self.desc[v].clone();
        gained.insert(v);
        let n = self.desc.len();
        for a in 0..n {
            if a == u || self.desc[a].contains(u) {
                self.desc[a].union_with(&gained);
            }
        }
    }

    /// Update after deleting `u -> v`: only `u` and its ancestors can lose
    /// descendants, and each of those rows is recomputed by a graph search.
    fn on_remove(&mut self, dag: &Dag, u: usize) {
        let n = self.desc.len();
        for a in 0..n {
            if a == u || self.desc[a].contains(u) {
                self.desc[a] = dag.descendants(a);
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoveKind {
    Add,
    Delete,
    Reverse,
}

/// A single-arc move. For `Add` and `Delete`, `(tail, head)` is the arc being
/// added or removed. For `Reverse`, it is the existing arc, which becomes
/// `head -> tail`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Move {
    pub kind: MoveKind,
    pub tail: usize,
    pub head: usize,
}

impl Move {
    pub fn add(tail: usize, head: usize) -> Self {
        Move { kind: MoveKind::Add, tail, head }
    }
    pub fn delete(tail: usize, head: usize) -> Self {
        Move { kind: MoveKind::Delete, tail, head }
    }
    pub fn reverse(tail: usize, head: usize) -> Self {
        Move { kind: MoveKind::Reverse, tail, head }
    }

    /// The move that undoes `self`.
    pub fn inverse(&self) -> Move {
        match self.kind {
            MoveKind::Add => Move::delete(self.tail, self.head),
            MoveKind::Delete => Move::add(self.tail, self.head),
            MoveKind::Reverse => Move::reverse(self.head, self.tail),
        }
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match self.kind {
            MoveKind::Add => "add",
            MoveKind::Delete => "delete",
            MoveKind::Reverse => "reverse",
        };
        write!(f, "{k}({}->{})", self.tail, self.head)
    }
}

/// The move `G^{ij}` for the ordered pair `(i, j)`: delete `i -> j` if
/// present, reverse `j -> i` if present, otherwise add `i -> j`.
#[inline]
pub fn classify_pair(dag: &Dag, i: usize, j: usize) -> Move {
    debug_assert_ne!(i, j);
    if dag.has_arc(i, j) {
        Move::delete(i, j)
    } else if dag.has_arc(j, i) {
        Move::reverse(j, i)
    } else {
        Move::add(i, j)
    }
}

/// Which acyclicity test the samplers use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Acyclicity {
    /// Maintain the ancestor matrix: O(1) add checks, O(ℓ_i) reversal checks.
    #[default]
    Ancestor,
    /// Depth-first search on demand; nothing maintained.
    Path,
}

pub fn would_be_acyclic_path(dag: &Dag, mv: Move) -> bool {
    match mv.kind {
        MoveKind::Delete => true,
        MoveKind::Add => !dag.has_path(mv.head, mv.tail, None),
        MoveKind::Reverse => !dag.has_path(mv.tail, mv.head, Some((mv.tail, mv.head))),
    }
}

pub fn would_be_acyclic_matrix(am: &AncestorMatrix, dag: &Dag, mv: Move) -> bool {
    match mv.kind {
        MoveKind::Delete => true,
        MoveKind::Add => !am.is_ancestor(mv.head, mv.tail),
        // A path tail ⇝ head avoiding the arc itself must enter `head` through
        // another parent p, with tail an ancestor of p.
        MoveKind::Reverse => !dag
            .parents(mv.head)
            .iter()
            .any(|p| p != mv.tail && am.is_ancestor(mv.tail, p)),
    }
}

fn check_consistent(dag: &Dag, mv: Move) -> Result<()> {
    let ok = mv.tail != mv.head
        && mv.tail < dag.n()
        && mv.head < dag.n()
        && match mv.kind {
            MoveKind::Add => !dag.has_arc(mv.tail, mv.head) && !dag.has_arc(mv.head, mv.tail),
            MoveKind::Delete | MoveKind::Reverse => dag.has_arc(mv.tail, mv.head),
        };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("move {mv} is inconsistent with the graph")))
    }
}

/// Applies a move, keeping an attached ancestor matrix in sync.
///
/// Fails without touching anything if the move does not match the graph or
/// would close a cycle.
pub fn apply_move(dag: &mut Dag, am: Option<&mut AncestorMatrix>, mv: Move) -> Result<()> {
    check_consistent(dag, mv)?;
    if !would_be_acyclic_path(dag, mv) {
        return Err(Error::WouldCreateCycle(mv.to_string()));
    }
    apply_move_unchecked(dag, am, mv);
    Ok(())
}

/// [`apply_move`] without the consistency and cycle checks.
pub(crate) fn apply_move_unchecked(dag: &mut Dag, mut am: Option<&mut AncestorMatrix>, mv: Move) {
    match mv.kind {
        MoveKind::Add => {
            dag.insert_arc(mv.tail, mv.head);
            if let Some(am) = am {
                am.on_add(mv.tail, mv.head);
            }
        }
        MoveKind::Delete => {
            dag.delete_arc(mv.tail, mv.head);
            if let Some(am) = am {
                am.on_remove(dag, mv.tail);
            }
        }
        MoveKind::Reverse => {
            dag.delete_arc(mv.tail, mv.head);
            if let Some(am) = am.as_deref_mut() {
                am.on_remove(dag, mv.tail);
            }
            dag.insert_arc(mv.head, mv.tail);
            if let Some(am) = am {
                am.on_add(mv.head, mv.tail);
            }
        }
    }
}

pub fn non_descendants(dag: &Dag, i: usize) -> NodeSet {
    dag.non_descendants(i)
}
