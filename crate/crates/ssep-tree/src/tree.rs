//! Geometry of the (d+1)-regular tree.
//!
//! Vertices are addressed by reduced path words from a fixed root: the first
//! letter picks one of the root's `d+1` neighbors, every later letter one of
//! the `d` non-backtracking continuations. Two vertices are adjacent exactly
//! when one word extends the other by a single trailing letter, so the graph
//! is the (d+1)-regular tree.
//!
//! Simulations run on a finite ball of radius `R` around the root. Edges that
//! would leave the ball simply do not exist, so boundary vertices have reduced
//! degree; all finite-graph identities stay exact and only quantities defined
//! on the infinite tree pick up truncation error, which the radius policy in
//! [`truncation_radius`] controls.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// Hard ceiling on materialized ball sizes unless the caller overrides it.
pub const DEFAULT_VERTEX_CAP: u64 = 4_000_000;

/// A vertex of the tree, as a reduced path word from the root.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexAddr {
    word: Vec<u8>,
}

impl VertexAddr {
    pub fn root() -> Self {
        VertexAddr { word: Vec::new() }
    }

    /// Validates the word against degree `d`: first letter in `0..=d`, later
    /// letters in `0..d`.
    pub fn new(word: Vec<u8>, d: u8) -> Result<Self> {
        for (i, &letter) in word.iter().enumerate() {
            let limit = if i == 0 { d } else { d - 1 };
            if letter > limit {
                return Err(Error::MalformedWord(format!(
                    "letter {letter} at position {i} exceeds {limit} (degree parameter d={d})"
                )));
            }
        }
        Ok(VertexAddr { word })
    }

    pub fn word(&self) -> &[u8] {
        &self.word
    }

    pub fn is_root(&self) -> bool {
        self.word.is_empty()
    }

    /// Distance from the root.
    pub fn depth(&self) -> usize {
        self.word.len()
    }

    /// The neighbor one step toward the root; `None` for the root itself.
    pub fn father(&self) -> Option<VertexAddr> {
        if self.word.is_empty() {
            None
        } else {
            Some(VertexAddr { word: self.word[..self.word.len() - 1].to_vec() })
        }
    }

    /// The child obtained by appending `letter` (caller ensures validity).
    pub fn child(&self, letter: u8) -> VertexAddr {
        let mut word = self.word.clone();
        word.push(letter);
        VertexAddr { word }
    }

    /// In-place move to the child with the given letter.
    pub(crate) fn push_letter(&mut self, letter: u8) {
        self.word.push(letter);
    }

    /// In-place move to the father; no-op at the root.
    pub(crate) fn pop_letter(&mut self) {
        self.word.pop();
    }

    /// Dotted-word form used in all CSV output and config files: "" for the
    /// root, "0.1.0" for the word [0,1,0].
    pub fn to_dotted(&self) -> String {
        self.word.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(".")
    }

    pub fn parse_dotted(s: &str, d: u8) -> Result<Self> {
        if s.is_empty() {
            return Ok(VertexAddr::root());
        }
        let mut word = Vec::new();
        for part in s.split('.') {
            let letter: u8 = part
                .parse()
                .map_err(|_| Error::MalformedWord(format!("bad letter {part:?} in {s:?}")))?;
            word.push(letter);
        }
        VertexAddr::new(word, d)
    }
}

impl fmt::Display for VertexAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_dotted())
    }
}

/// An edge, canonically addressed by its deeper endpoint: the child is
/// `parent.word + letter`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EdgeAddr {
    pub parent: VertexAddr,
    pub letter: u8,
}

impl EdgeAddr {
    pub fn child(&self) -> VertexAddr {
        self.parent.child(self.letter)
    }
}

/// All neighbors of `v` in the infinite tree: father (if any) plus children;
/// always `d + 1` vertices.
pub fn neighbors(v: &VertexAddr, d: u8) -> Vec<VertexAddr> {
    let mut out = Vec::with_capacity(d as usize + 1);
    if let Some(f) = v.father() {
        out.push(f);
    }
    let letters = if v.is_root() { d + 1 } else { d };
    for letter in 0..letters {
        out.push(v.child(letter));
    }
    out
}

/// Graph distance: length of the unique self-avoiding path,
/// `|u| + |v| - 2 * lcp(u, v)`.
pub fn distance(u: &VertexAddr, v: &VertexAddr) -> usize {
    let lcp = u
        .word
        .iter()
        .zip(v.word.iter())
        .take_while(|(a, b)| a == b)
        .count();
    u.word.len() + v.word.len() - 2 * lcp
}

/// Finite ball of radius `R` around the root, with breadth-first
/// lexicographic vertex order (deterministic, so every matrix builder and CSV
/// emitter downstream is deterministic too).
#[derive(Debug, Clone)]
pub struct Ball {
    degree: u8,
    radius: u32,
    vertices: Vec<VertexAddr>,
    /// Edge i connects `edges[i].0` (parent) and `edges[i].1` (child); edge i
    /// is the father edge of vertex i + 1.
    edges: Vec<(u32, u32)>,
    vertex_index: HashMap<Vec<u8>, u32>,
    /// Indices of edges incident to each vertex.
    incident: Vec<Vec<u32>>,
}

/// Vertex count of the ball: 1 + (d+1)(d^R - 1)/(d - 1).
pub fn ball_vertex_count(d: u8, radius: u32) -> u128 {
    let d = d as u128;
    let mut pow = 1u128;
    for _ in 0..radius {
        pow = pow.saturating_mul(d);
    }
    1 + (d + 1) * (pow - 1) / (d - 1)
}

/// Builds the ball, guarding against runaway sizes with the default cap.
pub fn build_ball(d: u8, radius: u32) -> Result<Ball> {
    build_ball_capped(d, radius, DEFAULT_VERTEX_CAP)
}

pub fn build_ball_capped(d: u8, radius: u32, vertex_cap: u64) -> Result<Ball> {
    if d < 2 {
        return Err(Error::OutOfRange { what: "degree", details: format!("d={d}, need d >= 2") });
    }
    if radius < 1 {
        return Err(Error::OutOfRange { what: "radius", details: "R >= 1 required".into() });
    }
    let predicted = ball_vertex_count(d, radius);
    if predicted > vertex_cap as u128 {
        return Err(Error::CapExceeded { needed: predicted, cap: vertex_cap as u128 });
    }

    let mut vertices = vec![VertexAddr::root()];
    let mut edges = Vec::new();
    let mut vertex_index = HashMap::new();
    vertex_index.insert(Vec::new(), 0u32);

    // Breadth-first by construction: each generation is emitted in
    // lexicographic word order because parents are visited in order and
    // children in letter order.
    let mut level_start = 0usize;
    for _ in 0..radius {
        let level_end = vertices.len();
        for parent_idx in level_start..level_end {
            let parent = vertices[parent_idx].clone();
            let letters = if parent.is_root() { d + 1 } else { d };
            for letter in 0..letters {
                let child = parent.child(letter);
                let child_idx = vertices.len() as u32;
                vertex_index.insert(child.word().to_vec(), child_idx);
                edges.push((parent_idx as u32, child_idx));
                vertices.push(child);
            }
        }
        level_start = level_end;
    }

    debug_assert_eq!(vertices.len() as u128, predicted);
    debug_assert_eq!(edges.len(), vertices.len() - 1);

    let mut incident = vec![Vec::new(); vertices.len()];
    for (i, &(a, b)) in edges.iter().enumerate() {
        incident[a as usize].push(i as u32);
        incident[b as usize].push(i as u32);
    }

    Ok(Ball { degree: d, radius, vertices, edges, vertex_index, incident })
}

impl Ball {
    pub fn degree(&self) -> u8 {
        self.degree
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex(&self, idx: u32) -> &VertexAddr {
        &self.vertices[idx as usize]
    }

    pub fn vertices(&self) -> &[VertexAddr] {
        &self.vertices
    }

    pub fn index_of(&self, v: &VertexAddr) -> Option<u32> {
        self.vertex_index.get(v.word()).copied()
    }

    pub fn require_index(&self, v: &VertexAddr) -> Result<u32> {
        self.index_of(v).ok_or_else(|| Error::OutsideBall(v.to_dotted()))
    }

    /// Endpoints of edge `e` as (parent index, child index).
    pub fn edge_endpoints(&self, e: u32) -> (u32, u32) {
        self.edges[e as usize]
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn edge_addr(&self, e: u32) -> EdgeAddr {
        let (_, child) = self.edges[e as usize];
        let child = &self.vertices[child as usize];
        EdgeAddr { parent: child.father().expect("edge child is never the root"), letter: *child.word().last().unwrap() }
    }

    pub fn edge_index(&self, addr: &EdgeAddr) -> Option<u32> {
        let child = addr.child();
        let idx = self.index_of(&child)?;
        if idx == 0 {
            return None;
        }
        Some(idx - 1)
    }

    /// Edge indices incident to a vertex.
    pub fn incident_edges(&self, v: u32) -> &[u32] {
        &self.incident[v as usize]
    }

    /// Vertex indices adjacent to `v` inside the ball.
    pub fn neighbor_indices(&self, v: u32) -> Vec<u32> {
        self.incident[v as usize]
            .iter()
            .map(|&e| {
                let (a, b) = self.edges[e as usize];
                if a == v {
                    b
                } else {
                    a
                }
            })
            .collect()
    }
}

/// Radius policy for statistical experiments on the truncated tree.
///
/// `R = ceil(r0 + (d+1) T + c sqrt((d+1) T))`: a dual walk started in the
/// support of the observable makes about `(d+1) T` jumps over a protection
/// horizon `T`, so within that horizon it reaches the boundary with
/// negligible probability. For long statistical horizons the policy is fed a
/// shorter protection horizon than the full run (a run-length horizon would
/// demand an exponentially large ball); the residual truncation bias decays
/// like `d^{-R}` and is checked empirically by the R vs R+2 comparison in the
/// acceptance suite.
pub fn truncation_radius(d: u8, support_radius: u32, horizon: f64, safety: f64) -> u32 {
    let jumps = (d as f64 + 1.0) * horizon;
    let r = support_radius as f64 + jumps + safety * jumps.sqrt();
    (r.ceil() as u32).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn root_neighbors_d2() {
        let ns = neighbors(&VertexAddr::root(), 2);
        let want: Vec<VertexAddr> = (0..3).map(|l| VertexAddr::new(vec![l], 2).unwrap()).collect();
        assert_eq!(ns, want);
    }

    #[test]
    fn neighbor_count_is_degree_plus_one() {
        for d in [2u8, 3, 4] {
            for word in [vec![], vec![0], vec![1, 0], vec![d, 1, 0]] {
                let v = VertexAddr::new(word, d).unwrap();
                assert_eq!(neighbors(&v, d).len(), d as usize + 1);
            }
        }
    }

    #[test]
    fn neighbors_of_interior_vertex() {
        let v = VertexAddr::new(vec![0, 1], 2).unwrap();
        let ns = neighbors(&v, 2);
        let expect = vec![
            VertexAddr::new(vec![0], 2).unwrap(),
            VertexAddr::new(vec![0, 1, 0], 2).unwrap(),
            VertexAddr::new(vec![0, 1, 1], 2).unwrap(),
        ];
        assert_eq!(ns, expect);
    }

    #[test]
    fn malformed_words_rejected() {
        assert!(VertexAddr::new(vec![3], 2).is_err());
        assert!(VertexAddr::new(vec![0, 2], 2).is_err());
        assert!(VertexAddr::new(vec![2, 1, 1], 2).is_ok());
    }

    #[test]
    fn distance_examples() {
        let root = VertexAddr::root();
        let a = VertexAddr::new(vec![0], 2).unwrap();
        let b = VertexAddr::new(vec![1], 2).unwrap();
        let ab = VertexAddr::new(vec![0, 1], 2).unwrap();
        assert_eq!(distance(&root, &root), 0);
        assert_eq!(distance(&a, &b), 2);
        assert_eq!(distance(&ab, &a), 1);
    }

    #[test]
    fn ball_sizes() {
        for (d, r, nv, ne) in [(2u8, 1u32, 4usize, 3usize), (2, 2, 10, 9), (3, 2, 17, 16)] {
            let ball = build_ball(d, r).unwrap();
            assert_eq!(ball.vertex_count(), nv);
            assert_eq!(ball.edge_count(), ne);
        }
    }

    #[test]
    fn ball_counts_match_closed_form() {
        for d in [2u8, 3, 4] {
            for r in 1..=6u32 {
                if ball_vertex_count(d, r) > 200_000 {
                    continue;
                }
                let ball = build_ball(d, r).unwrap();
                assert_eq!(ball.vertex_count() as u128, ball_vertex_count(d, r));
                assert_eq!(ball.edge_count(), ball.vertex_count() - 1);
            }
        }
    }

    #[test]
    fn interior_vertices_have_full_degree() {
        let ball = build_ball(2, 3).unwrap();
        for v in 0..ball.vertex_count() as u32 {
            let depth = ball.vertex(v).depth() as u32;
            let deg = ball.incident_edges(v).len();
            if depth < ball.radius() {
                assert_eq!(deg, 3, "interior vertex {v} has degree {deg}");
            } else {
                assert_eq!(deg, 1, "boundary vertex {v} has degree {deg}");
            }
        }
    }

    #[test]
    fn cap_guard_fires() {
        match build_ball_capped(2, 40, 1_000_000) {
            Err(Error::CapExceeded { .. }) => {}
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn truncation_radius_examples() {
        assert_eq!(truncation_radius(2, 1, 0.0, 3.0), 1);
        // ceil(2 + 3 + 3*sqrt(3)) = ceil(10.196) = 11
        assert_eq!(truncation_radius(2, 2, 1.0, 3.0), 11);
    }

    #[test]
    fn truncation_radius_monotone_in_horizon() {
        let mut prev = 0;
        for k in 0..20 {
            let r = truncation_radius(2, 1, k as f64 * 0.37, 2.0);
            assert!(r >= prev);
            prev = r;
        }
    }

    #[test]
    fn dotted_roundtrip() {
        let v = VertexAddr::new(vec![2, 0, 1], 2).unwrap();
        assert_eq!(v.to_dotted(), "2.0.1");
        assert_eq!(VertexAddr::parse_dotted("2.0.1", 2).unwrap(), v);
        assert_eq!(VertexAddr::parse_dotted("", 2).unwrap(), VertexAddr::root());
        assert_eq!(VertexAddr::root().to_dotted(), "");
    }

    #[test]
    fn edge_addressing_roundtrip() {
        let ball = build_ball(2, 2).unwrap();
        for e in 0..ball.edge_count() as u32 {
            let addr = ball.edge_addr(e);
            assert_eq!(ball.edge_index(&addr), Some(e));
            let (a, b) = ball.edge_endpoints(e);
            assert_eq!(ball.index_of(&addr.parent), Some(a));
            assert_eq!(ball.index_of(&addr.child()), Some(b));
        }
    }

    fn arb_word(d: u8) -> impl Strategy<Value = VertexAddr> {
        let d_ = d;
        prop::collection::vec(0u8..d, 0..8).prop_map(move |mut w| {
            if !w.is_empty() {
                w[0] %= d_ + 1;
            }
            VertexAddr::new(w, d_).unwrap()
        })
    }

    proptest! {
        #[test]
        fn father_child_adjacency(v in arb_word(2)) {
            if let Some(f) = v.father() {
                prop_assert!(neighbors(&f, 2).contains(&v));
                prop_assert!(neighbors(&v, 2).contains(&f));
            }
        }

        #[test]
        fn distance_is_a_metric(a in arb_word(2), b in arb_word(2), c in arb_word(2)) {
            prop_assert_eq!(distance(&a, &b), distance(&b, &a));
            prop_assert_eq!(distance(&a, &a), 0);
            if a != b {
                prop_assert!(distance(&a, &b) > 0);
            }
            prop_assert!(distance(&a, &c) <= distance(&a, &b) + distance(&b, &c));
        }

        #[test]
        fn neighbors_are_at_distance_one(v in arb_word(3)) {
            for n in neighbors(&v, 3) {
                prop_assert_eq!(distance(&v, &n), 1);
            }
        }
    }
}
