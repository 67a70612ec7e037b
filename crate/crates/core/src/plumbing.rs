//! Weighted-tree plumbing graphs with arrowheads: blow-up/blow-down
//! calculus, Morrow-configuration recognition and reduction, and the
//! intersection-matrix invariants (determinant, multiplicities, linking).

use crate::arith::{int, IntMatrix, Rat};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

pub type VertexId = u32;

/// Which curve of the divisor at infinity a vertex models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    LInfty,
    E,
    OneOne,
    OneZero(u32),
    Chain,
    Tail,
    Plain,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vertex {
    pub weight: i64,
    pub arrows: u32,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlumbingError {
    #[error("unknown site: {0}")]
    UnknownSite(String),
    #[error("illegal blow-down at {vertex}: {reason}")]
    IllegalBlowDown { vertex: VertexId, reason: String },
    #[error("graph is not a tree")]
    NotATree,
    #[error("intersection matrix is not unimodular (det = {0})")]
    NotUnimodular(String),
}

/// Dual graph of the divisor at infinity: a weighted tree whose vertices
/// may carry arrowheads marking horizontal curves.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PlumbingGraph {
    vertices: BTreeMap<VertexId, Vertex>,
    adj: BTreeMap<VertexId, BTreeSet<VertexId>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Site {
    Vertex(VertexId),
    Edge(VertexId, VertexId),
}

impl PlumbingGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, id: VertexId, weight: i64, arrows: u32, role: Role) {
        assert!(
            self.vertices
                .insert(id, Vertex { weight, arrows, role })
                .is_none(),
            "duplicate vertex id {id}"
        );
        self.adj.entry(id).or_default();
    }

    pub fn add_edge(&mut self, a: VertexId, b: VertexId) {
        assert!(a != b && self.vertices.contains_key(&a) && self.vertices.contains_key(&b));
        self.adj.get_mut(&a).unwrap().insert(b);
        self.adj.get_mut(&b).unwrap().insert(a);
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.values().map(|s| s.len()).sum::<usize>() / 2
    }

    pub fn vertex(&self, id: VertexId) -> Option<&Vertex> {
        self.vertices.get(&id)
    }

    pub fn vertex_ids(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices.keys().copied()
    }

    pub fn neighbors(&self, id: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        self.adj[&id].iter().copied()
    }

    pub fn valency(&self, id: VertexId) -> usize {
        self.adj[&id].len()
    }

    pub fn has_edge(&self, a: VertexId, b: VertexId) -> bool {
        self.adj.get(&a).map_or(false, |s| s.contains(&b))
    }

    pub fn edges(&self) -> Vec<(VertexId, VertexId)> {
        let mut out = Vec::new();
        for (&a, nbrs) in &self.adj {
            for &b in nbrs {
                if a < b {
                    out.push((a, b));
                }
            }
        }
        out
    }

    pub fn is_tree(&self) -> bool {
        if self.vertices.is_empty() {
            return false;
        }
        if self.edge_count() != self.vertex_count() - 1 {
            return false;
        }
        // connectivity
        let start = *self.vertices.keys().next().unwrap();
        let mut seen = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for w in self.neighbors(v) {
                if seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        seen.len() == self.vertex_count()
    }

    fn next_id(&self) -> VertexId {
        self.vertices.keys().next_back().map_or(0, |m| m + 1)
    }

    /// Blow up at a vertex (a generic point of the curve) or at an edge
    /// (the intersection point of two curves).  Returns the new graph and
    /// the id of the exceptional vertex.
    pub fn blow_up(&self, site: Site) -> Result<(PlumbingGraph, VertexId), PlumbingError> {
        let mut g = self.clone();
        let e = g.next_id();
        match site {
            Site::Vertex(v) => {
                let vert = g
                    .vertices
                    .get_mut(&v)
                    .ok_or_else(|| PlumbingError::UnknownSite(format!("vertex {v}")))?;
                vert.weight -= 1;
                g.add_vertex(e, -1, 0, Role::Plain);
                g.add_edge(v, e);
            }
            Site::Edge(u, v) => {
                if !self.has_edge(u, v) {
                    return Err(PlumbingError::UnknownSite(format!("edge {u}-{v}")));
                }
                g.vertices.get_mut(&u).unwrap().weight -= 1;
                g.vertices.get_mut(&v).unwrap().weight -= 1;
                g.adj.get_mut(&u).unwrap().remove(&v);
                g.adj.get_mut(&v).unwrap().remove(&u);
                g.add_vertex(e, -1, 0, Role::Plain);
                g.add_edge(u, e);
                g.add_edge(v, e);
            }
        }
        Ok((g, e))
    }

    /// Blow down a (-1) vertex of valency <= 2 that carries no arrow.
    pub fn blow_down(&self, v: VertexId) -> Result<PlumbingGraph, PlumbingError> {
        let vert = self
            .vertices
            .get(&v)
            .ok_or_else(|| PlumbingError::UnknownSite(format!("vertex {v}")))?;
        if vert.weight != -1 {
            return Err(PlumbingError::IllegalBlowDown {
                vertex: v,
                reason: format!("weight is {}, not -1", vert.weight),
            });
        }
        if vert.arrows != 0 {
            return Err(PlumbingError::IllegalBlowDown {
                vertex: v,
                reason: "vertex carries an arrow".into(),
            });
        }
        let nbrs: Vec<VertexId> = self.neighbors(v).collect();
        if nbrs.len() > 2 {
            return Err(PlumbingError::IllegalBlowDown {
                vertex: v,
                reason: format!("valency {} > 2", nbrs.len()),
            });
        }
        let mut g = self.clone();
        g.vertices.remove(&v);
        g.adj.remove(&v);
        for &n in &nbrs {
            g.adj.get_mut(&n).unwrap().remove(&v);
            g.vertices.get_mut(&n).unwrap().weight += 1;
        }
        if let [a, b] = nbrs[..] {
            g.add_edge(a, b);
        }
        Ok(g)
    }

    pub fn strip_arrows(&self) -> PlumbingGraph {
        let mut g = self.clone();
        for v in g.vertices.values_mut() {
            v.arrows = 0;
        }
        g
    }

    /// Vertices in the fixed order used by all matrix-valued invariants.
    pub fn vertex_order(&self) -> Vec<VertexId> {
        self.vertices.keys().copied().collect()
    }

    /// Symmetric matrix with the weights on the diagonal and 1 for each
    /// edge.
    pub fn intersection_matrix(&self) -> IntMatrix {
        let order = self.vertex_order();
        let idx: BTreeMap<VertexId, usize> =
            order.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut m = IntMatrix::zero(order.len());
        for (&v, vert) in &self.vertices {
            m[(idx[&v], idx[&v])] = int(vert.weight);
        }
        for (a, b) in self.edges() {
            m[(idx[&a], idx[&b])] = int(1);
            m[(idx[&b], idx[&a])] = int(1);
        }
        m
    }

    /// det(-A) restricted to a vertex subset; the empty subset gives 1.
    pub fn neg_det_of(&self, set: &BTreeSet<VertexId>) -> BigInt {
        if set.is_empty() {
            return BigInt::one();
        }
        let order: Vec<VertexId> = set.iter().copied().collect();
        let idx: BTreeMap<VertexId, usize> =
            order.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut m = IntMatrix::zero(order.len());
        for &v in &order {
            m[(idx[&v], idx[&v])] = int(-self.vertices[&v].weight);
            for w in self.neighbors(v) {
                if set.contains(&w) {
                    m[(idx[&v], idx[&w])] = int(-1);
                }
            }
        }
        m.det()
    }

    /// The connected component of `g - v` containing `through`.
    pub fn branch(&self, v: VertexId, through: VertexId) -> BTreeSet<VertexId> {
        let mut seen = BTreeSet::from([through]);
        let mut stack = vec![through];
        while let Some(x) = stack.pop() {
            for y in self.neighbors(x) {
                if y != v && seen.insert(y) {
                    stack.push(y);
                }
            }
        }
        seen
    }

    fn check_unimodular(&self) -> Result<IntMatrix, PlumbingError> {
        let a = self.intersection_matrix();
        let d = a.det();
        if d.abs() != BigInt::one() {
            return Err(PlumbingError::NotUnimodular(d.to_string()));
        }
        Ok(a)
    }

    /// Multiplicities m = -A^{-1} a of the divisor components in the fibre
    /// of f - c for generic c, where a is the arrow-count vector.  Ordered
    /// by `vertex_order`.
    pub fn fiber_multiplicities(&self) -> Result<Vec<Rat>, PlumbingError> {
        let a = self.check_unimodular()?;
        let order = self.vertex_order();
        let rhs: Vec<Rat> = order
            .iter()
            .map(|v| -Rat::from(int(self.vertices[v].arrows as i64)))
            .collect();
        Ok(a.solve(&rhs).expect("unimodular matrix is nonsingular"))
    }

    /// All arrowheads, ordered by vertex id (an arrowed vertex with k
    /// arrows contributes k entries).
    pub fn arrows(&self) -> Vec<VertexId> {
        let mut out = Vec::new();
        for (&v, vert) in &self.vertices {
            for _ in 0..vert.arrows {
                out.push(v);
            }
        }
        out
    }

    /// Pairwise linking numbers of the link-at-infinity components: the
    /// entry for arrows attached at v, w is -(A^{-1})_{v,w}.
    pub fn arrow_linking_matrix(&self) -> Result<Vec<Vec<Rat>>, PlumbingError> {
        let a = self.check_unimodular()?;
        let order = self.vertex_order();
        let idx: BTreeMap<VertexId, usize> =
            order.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let arrows = self.arrows();
        // one exact solve per distinct arrowed vertex
        let mut cols: BTreeMap<VertexId, Vec<Rat>> = BTreeMap::new();
        for &v in arrows.iter() {
            if cols.contains_key(&v) {
                continue;
            }
            let mut e = vec![Rat::zero(); order.len()];
            e[idx[&v]] = Rat::one();
            cols.insert(v, a.solve(&e).expect("unimodular"));
        }
        Ok(arrows
            .iter()
            .map(|&v| arrows.iter().map(|&w| -cols[&v][idx[&w]].clone()).collect())
            .collect())
    }

    /// Canonical string for tree isomorphism (weights and arrow counts).
    pub fn canonical_key(&self) -> String {
        assert!(self.is_tree());
        // find the 1- or 2-vertex center by trimming leaves
        let mut deg: BTreeMap<VertexId, usize> =
            self.vertex_ids().map(|v| (v, self.valency(v))).collect();
        let mut alive: BTreeSet<VertexId> = self.vertex_ids().collect();
        while alive.len() > 2 {
            let leaves: Vec<VertexId> =
                alive.iter().copied().filter(|v| deg[v] <= 1).collect();
            for l in leaves {
                alive.remove(&l);
                for n in self.neighbors(l) {
                    if alive.contains(&n) {
                        *deg.get_mut(&n).unwrap() -= 1;
                    }
                }
            }
        }
        alive
            .iter()
            .map(|&c| self.rooted_key(c, None))
            .min()
            .unwrap()
    }

    fn rooted_key(&self, v: VertexId, parent: Option<VertexId>) -> String {
        let vert = &self.vertices[&v];
        let mut kids: Vec<String> = self
            .neighbors(v)
            .filter(|&w| Some(w) != parent)
            .map(|w| self.rooted_key(w, Some(v)))
            .collect();
        kids.sort();
        format!("(w{};a{}{})", vert.weight, vert.arrows, kids.concat())
    }

    /// If the graph is a path, its weights in path order (one of the two
    /// orientations).
    pub fn chain_weights(&self) -> Option<Vec<i64>> {
        if !self.is_tree() {
            return None;
        }
        if self.vertex_count() == 1 {
            let v = self.vertex_ids().next().unwrap();
            return Some(vec![self.vertices[&v].weight]);
        }
        if self.vertex_ids().any(|v| self.valency(v) > 2) {
            return None;
        }
        let start = self.vertex_ids().find(|&v| self.valency(v) == 1).unwrap();
        let mut order = vec![start];
        let mut prev = None;
        let mut cur = start;
        loop {
            let next = self.neighbors(cur).find(|&w| Some(w) != prev);
            match next {
                Some(n) => {
                    order.push(n);
                    prev = Some(cur);
                    cur = n;
                }
                None => break,
            }
        }
        Some(order.iter().map(|v| self.vertices[v].weight).collect())
    }
}

/// The three Morrow configurations of Lemma on divisor shapes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MorrowForm {
    SinglePlusOne,
    ZeroL { l: i64 },
    Balanced { ls: Vec<i64>, n: i64, ts: Vec<i64> },
}

/// Blow a chain of weights down as far as possible, exploring all orders;
/// returns true iff some order reaches a single vertex of weight `target`.
fn chain_blows_down_to(weights: &[i64], target: i64) -> bool {
    fn go(w: Vec<i64>, target: i64, seen: &mut BTreeSet<Vec<i64>>) -> bool {
        if w.len() == 1 {
            return w[0] == target;
        }
        if !seen.insert(w.clone()) {
            return false;
        }
        for i in 0..w.len() {
            if w[i] != -1 {
                continue;
            }
            let mut next = w.clone();
            next.remove(i);
            if i > 0 {
                next[i - 1] += 1;
            }
            if i < next.len() {
                next[i] += 1;
            }
            if go(next, target, seen) {
                return true;
            }
        }
        false
    }
    go(weights.to_vec(), target, &mut BTreeSet::new())
}

/// Test the three Morrow shapes literally.  The Balanced replacement rule
/// substitutes the central (n, 0, -n-1) by a single (-1) vertex; the
/// result must blow down to a single vertex of the determinant-compatible
/// weight.  Arrows are ignored.
pub fn is_morrow(g: &PlumbingGraph) -> Option<MorrowForm> {
    let w = g.chain_weights()?;
    match w.len() {
        1 => (w[0] == 1).then_some(MorrowForm::SinglePlusOne),
        2 => {
            if w[0] == 0 {
                Some(MorrowForm::ZeroL { l: w[1] })
            } else if w[1] == 0 {
                Some(MorrowForm::ZeroL { l: w[0] })
            } else {
                None
            }
        }
        _ => {
            for flip in [false, true] {
                let mut w = w.clone();
                if flip {
                    w.reverse();
                }
                for i in 1..w.len() - 1 {
                    // central triple (n, 0, -n-1)
                    if w[i] != 0 || w[i - 1] + w[i + 1] != -1 {
                        continue;
                    }
                    let n = w[i - 1];
                    let ls: Vec<i64> = w[..i - 1].to_vec();
                    let ts: Vec<i64> = w[i + 2..].to_vec();
                    let mut replaced = ls.clone();
                    replaced.push(-1);
                    replaced.extend_from_slice(&ts);
                    if chain_blows_down_to(&replaced, -1) {
                        return Some(MorrowForm::Balanced { ls, n, ts });
                    }
                }
            }
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionStep {
    pub vertex: VertexId,
    pub valency: usize,
}

/// Witness of a successful reduction: replaying the steps on the
/// arrow-stripped input reproduces the final configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionTrace {
    pub steps: Vec<ReductionStep>,
    pub final_form: MorrowForm,
    pub final_weights: Vec<i64>,
}

/// Report for graphs that cannot reach a Morrow configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StuckReport {
    pub states_explored: usize,
    pub stuck_states: Vec<String>,
}

/// Reduce to a Morrow configuration by blow-downs, with depth-first
/// backtracking over the choice of (-1) vertex.  Arrows are stripped
/// first; blow-downs never remove arrowed vertices otherwise.
pub fn reduce_to_morrow(g: &PlumbingGraph) -> Result<ReductionTrace, StuckReport> {
    let g = g.strip_arrows();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut stuck: Vec<String> = Vec::new();
    let mut explored = 0usize;

    fn go(
        g: &PlumbingGraph,
        steps: &mut Vec<ReductionStep>,
        seen: &mut BTreeSet<String>,
        stuck: &mut Vec<String>,
        explored: &mut usize,
    ) -> Option<(MorrowForm, Vec<i64>)> {
        if !seen.insert(g.canonical_key()) {
            return None;
        }
        *explored += 1;
        let moves: Vec<VertexId> = g
            .vertex_ids()
            .filter(|&v| g.vertex(v).unwrap().weight == -1 && g.valency(v) <= 2)
            .collect();
        if moves.is_empty() {
            if let Some(form) = is_morrow(g) {
                return Some((form, g.chain_weights().unwrap_or_default()));
            }
            if stuck.len() < 4 {
                stuck.push(g.canonical_key());
            }
            return None;
        }
        // leaves first keeps the search shallow
        let mut moves = moves;
        moves.sort_by_key(|&v| (g.valency(v), v));
        for v in moves {
            let valency = g.valency(v);
            let next = g.blow_down(v).expect("move was legal");
            steps.push(ReductionStep { vertex: v, valency });
            if let Some(done) = go(&next, steps, seen, stuck, explored) {
                return Some(done);
            }
            steps.pop();
        }
        None
    }

    let mut steps = Vec::new();
    match go(&g, &mut steps, &mut seen, &mut stuck, &mut explored) {
        Some((final_form, final_weights)) => Ok(ReductionTrace {
            steps,
            final_form,
            final_weights,
        }),
        None => Err(StuckReport {
            states_explored: explored,
            stuck_states: stuck,
        }),
    }
}

// flat serde representation
#[derive(Serialize, Deserialize)]
struct FlatVertex {
    id: VertexId,
    weight: i64,
    arrows: u32,
    role: Role,
}

#[derive(Serialize, Deserialize)]
struct FlatGraph {
    vertices: Vec<FlatVertex>,
    edges: Vec<(VertexId, VertexId)>,
}

impl Serialize for PlumbingGraph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let flat = FlatGraph {
            vertices: self
                .vertices
                .iter()
                .map(|(&id, v)| FlatVertex {
                    id,
                    weight: v.weight,
                    arrows: v.arrows,
                    role: v.role,
                })
                .collect(),
            edges: self.edges(),
        };
        flat.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PlumbingGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let flat = FlatGraph::deserialize(d)?;
        let mut g = PlumbingGraph::new();
        for v in flat.vertices {
            g.add_vertex(v.id, v.weight, v.arrows, v.role);
        }
        for (a, b) in flat.edges {
            g.add_edge(a, b);
        }
        Ok(g)
    }
}

/// Build a path graph from weights, ids 0..n-1 in order.
pub fn chain(weights: &[i64]) -> PlumbingGraph {
    let mut g = PlumbingGraph::new();
    for (i, &w) in weights.iter().enumerate() {
        g.add_vertex(i as VertexId, w, 0, Role::Plain);
        if i > 0 {
            g.add_edge(i as VertexId - 1, i as VertexId);
        }
    }
    g
}
