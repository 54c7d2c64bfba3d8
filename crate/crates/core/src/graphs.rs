//! d-regular graphs whose shift is a Hermitian involution on basis labels, and
//! the coined graph G' on which the limiting continuous-time walk lives.
//!
//! Basis labels `(coin, vertex)` are flattened coin-major: `coin * N + vertex`.
//! The graph stores a single map `pairing` on flat labels, sending `(i, v)` to
//! `(j(i, v), v(i))`. Edge-colored graphs keep the coin (`j = i`); the
//! flip-flop torus reverses the direction label instead.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::CoinSpec;
use crate::EXACT_TOL;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VertexId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CoinLabel(pub usize);

/// A `(coin, vertex)` basis label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BasisLabel {
    pub coin: CoinLabel,
    pub vertex: VertexId,
}

impl BasisLabel {
    pub fn new(coin: usize, vertex: usize) -> Self {
        BasisLabel {
            coin: CoinLabel(coin),
            vertex: VertexId(vertex),
        }
    }

    #[inline]
    pub fn flat(self, n: usize) -> usize {
        self.coin.0 * n + self.vertex.0
    }

    #[inline]
    pub fn from_flat(k: usize, n: usize) -> Self {
        BasisLabel::new(k / n, k % n)
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.coin.0, self.vertex.0)
    }
}

/// How the pairing treats the coin label when stepping along an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairingMode {
    /// `j(i, v) = i`: coins are edge colors.
    EdgeColored,
    /// Direction labels are reversed on every move (torus only).
    FlipFlop,
    /// Any adjacency-respecting involution; only the generic invariants apply.
    #[default]
    General,
}

impl std::str::FromStr for PairingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "edge_colored" | "colored" => Ok(PairingMode::EdgeColored),
            "flip_flop" => Ok(PairingMode::FlipFlop),
            "general" => Ok(PairingMode::General),
            other => Err(Error::InvalidParameter(format!(
                "unknown pairing mode '{other}' (expected edge_colored or flip_flop)"
            ))),
        }
    }
}

impl fmt::Display for PairingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PairingMode::EdgeColored => "edge_colored",
            PairingMode::FlipFlop => "flip_flop",
            PairingMode::General => "general",
        })
    }
}

/// A d-regular graph together with the involutive pairing on its basis labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColoredGraph {
    name: String,
    #[serde(rename = "N")]
    n: usize,
    d: usize,
    #[serde(default)]
    mode: PairingMode,
    pairing: Vec<usize>,
}

/// Flip-flop direction order on the torus.
pub const TORUS_DIRECTIONS: [&str; 4] = ["+x", "-x", "+y", "-y"];

impl ColoredGraph {
    /// Wraps a hand-built pairing without checking it; call [`validate`](Self::validate).
    pub fn from_pairing(
        name: impl Into<String>,
        n: usize,
        d: usize,
        mode: PairingMode,
        pairing: Vec<usize>,
    ) -> Self {
        ColoredGraph {
            name: name.into(),
            n,
            d,
            mode,
            pairing,
        }
    }

    /// Builds a graph from a label map `(coin, vertex) -> (coin', vertex')`.
    fn from_fn(
        name: String,
        n: usize,
        d: usize,
        mode: PairingMode,
        f: impl Fn(usize, usize) -> (usize, usize),
    ) -> Self {
        let mut pairing = vec![0; n * d];
        for coin in 0..d {
            for v in 0..n {
                let (c2, w) = f(coin, v);
                pairing[coin * n + v] = c2 * n + w;
            }
        }
        ColoredGraph::from_pairing(name, n, d, mode, pairing)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of vertices N.
    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    pub fn mode(&self) -> PairingMode {
        self.mode
    }

    /// Dimension dN of the coin-position space.
    pub fn dim(&self) -> usize {
        self.n * self.d
    }

    pub fn pairing_flat(&self) -> &[usize] {
        &self.pairing
    }

    pub fn pair(&self, label: BasisLabel) -> BasisLabel {
        BasisLabel::from_flat(self.pairing[label.flat(self.n)], self.n)
    }

    pub fn label(&self, flat: usize) -> BasisLabel {
        BasisLabel::from_flat(flat, self.n)
    }

    /// Neighbours of `v` in coin order (with multiplicity).
    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        (0..self.d)
            .map(|c| self.pairing[c * self.n + v] % self.n)
            .collect()
    }

    /// Undirected edges as `(coin, u, w)` with `u`'s coin, listed once per label pair.
    pub fn edges(&self) -> Vec<(BasisLabel, BasisLabel)> {
        (0..self.dim())
            .filter(|&k| k < self.pairing[k])
            .map(|k| (self.label(k), self.label(self.pairing[k])))
            .collect()
    }

    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let dim = self.dim();
        if self.pairing.len() != dim {
            violations.push(Violation {
                kind: ViolationKind::WrongLength,
                label: None,
                detail: format!("pairing has {} entries, expected d*N = {dim}", self.pairing.len()),
            });
            return ValidationReport {
                graph: self.name.clone(),
                violations,
            };
        }
        let mut incoming = vec![0usize; self.n];
        for k in 0..dim {
            let here = self.label(k);
            let p = self.pairing[k];
            if p >= dim {
                violations.push(Violation {
                    kind: ViolationKind::OutOfRange,
                    label: Some(here),
                    detail: format!("pairing target {p} outside [0, {dim})"),
                });
                continue;
            }
            let there = self.label(p);
            incoming[there.vertex.0] += 1;
            if self.pairing[p] != k {
                violations.push(Violation {
                    kind: ViolationKind::NotInvolution,
                    label: Some(here),
                    detail: format!(
                        "pairing{here} = {there} but pairing{there} = {}",
                        self.label(self.pairing[p].min(dim - 1))
                    ),
                });
            }
            if there.vertex == here.vertex {
                violations.push(Violation {
                    kind: ViolationKind::SelfLoop,
                    label: Some(here),
                    detail: format!("pairing{here} = {there} stays at vertex {}", here.vertex.0),
                });
            }
            if self.mode == PairingMode::EdgeColored && there.coin != here.coin {
                violations.push(Violation {
                    kind: ViolationKind::ColorChanged,
                    label: Some(here),
                    detail: format!("edge-colored pairing changes coin: {here} -> {there}"),
                });
            }
        }
        for (v, &count) in incoming.iter().enumerate() {
            if count != self.d {
                violations.push(Violation {
                    kind: ViolationKind::DegreeMismatch,
                    label: None,
                    detail: format!("vertex {v} receives {count} pairing entries, expected {}", self.d),
                });
            }
        }
        ValidationReport {
            graph: self.name.clone(),
            violations,
        }
    }

    /// Fails with the first violation, if any.
    pub fn ensure_valid(&self) -> Result<()> {
        match self.validate().violations.first() {
            None => Ok(()),
            Some(v) => Err(Error::InvalidGraph(format!("{}: {}", self.name, v.detail))),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("graph serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidParameter(format!("graph json: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    WrongLength,
    OutOfRange,
    NotInvolution,
    SelfLoop,
    ColorChanged,
    DegreeMismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub label: Option<BasisLabel>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub graph: String,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }
}

fn require_even(what: &'static str, value: usize) -> Result<()> {
    if value % 2 != 0 {
        return Err(Error::OddSize { what, value });
    }
    Ok(())
}

/// The `side x side` torus, `v = x + side * y`.
pub fn build_torus(side: usize, mode: PairingMode) -> Result<ColoredGraph> {
    require_even("torus side", side)?;
    if side < 2 {
        return Err(Error::InvalidParameter(format!("torus side must be >= 2, got {side}")));
    }
    let n = side * side;
    let at = |x: usize, y: usize| (x % side) + side * (y % side);
    let name = format!("torus:{side}:{mode}");
    match mode {
        PairingMode::FlipFlop => Ok(ColoredGraph::from_fn(name, n, 4, mode, |c, v| {
            let (x, y) = (v % side, v / side);
            let w = match c {
                0 => at(x + 1, y),
                1 => at(x + side - 1, y),
                2 => at(x, y + 1),
                _ => at(x, y + side - 1),
            };
            (c ^ 1, w)
        })),
        PairingMode::EdgeColored => Ok(ColoredGraph::from_fn(name, n, 4, mode, |c, v| {
            let (x, y) = (v % side, v / side);
            // the x-edge {x, x+1} has color x % 2, the y-edge {y, y+1} color 2 + y % 2
            let w = match c {
                0 | 1 => {
                    if x % 2 == c {
                        at(x + 1, y)
                    } else {
                        at(x + side - 1, y)
                    }
                }
                _ => {
                    if y % 2 == c - 2 {
                        at(x, y + 1)
                    } else {
                        at(x, y + side - 1)
                    }
                }
            };
            (c, w)
        })),
        PairingMode::General => Err(Error::InvalidParameter(
            "torus pairing must be edge_colored or flip_flop".into(),
        )),
    }
}

/// Even cycle with edges `{2k, 2k+1}` colored 0 and `{2k+1, 2k+2}` colored 1.
pub fn build_cycle(n: usize) -> Result<ColoredGraph> {
    require_even("cycle length", n)?;
    if n < 2 {
        return Err(Error::InvalidParameter(format!("cycle length must be >= 2, got {n}")));
    }
    Ok(ColoredGraph::from_fn(
        format!("cycle:{n}"),
        n,
        2,
        PairingMode::EdgeColored,
        |c, v| {
            let w = match (c, v % 2) {
                (0, _) => v ^ 1,
                (_, 1) => (v + 1) % n,
                _ => (v + n - 1) % n,
            };
            (c, w)
        },
    ))
}

/// The `dim`-cube, colored by bit index.
pub fn build_hypercube(dim: usize) -> Result<ColoredGraph> {
    if dim == 0 || dim > 24 {
        return Err(Error::InvalidParameter(format!(
            "hypercube dimension must be in 1..=24, got {dim}"
        )));
    }
    Ok(ColoredGraph::from_fn(
        format!("hypercube:{dim}"),
        1 << dim,
        dim,
        PairingMode::EdgeColored,
        |c, v| (c, v ^ (1 << c)),
    ))
}

/// Graph on the dN basis labels. Node `k` belongs to original vertex `grouping[k]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoinedGraph {
    pub grouping: Vec<usize>,
    /// Sorted, deduplicated `(a, b)` with `a < b`.
    pub edges: Vec<(usize, usize)>,
}

impl CoinedGraph {
    pub fn from_edges(grouping: Vec<usize>, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let set: BTreeSet<(usize, usize)> = edges
            .into_iter()
            .filter(|(a, b)| a != b)
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        CoinedGraph {
            grouping,
            edges: set.into_iter().collect(),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.grouping.len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.num_nodes()];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.binary_search(&(a.min(b), a.max(b))).is_ok()
    }

    pub fn has_self_loop(&self) -> bool {
        self.edges.iter().any(|(a, b)| a == b)
    }
}

/// Coined graph G': shift edges from the pairing plus coin edges wherever an
/// off-diagonal coin entry is nonzero.
pub fn derive_coined_graph(graph: &ColoredGraph, coin: &CoinSpec) -> Result<CoinedGraph> {
    graph.ensure_valid()?;
    let (n, d) = (graph.num_vertices(), graph.degree());
    coin.validate(d)?;
    let base = coin.base_coin(d)?;
    let marked = coin.marked_coin(d)?;
    let mut edges = Vec::new();
    for k in 0..graph.dim() {
        edges.push((k, graph.pairing_flat()[k]));
    }
    for v in 0..n {
        let c = match &marked {
            Some((x, m)) if *x == v => m,
            _ => &base,
        };
        for i in 0..d {
            for j in 0..d {
                if i != j && c[(j, i)].norm() > EXACT_TOL {
                    edges.push((i * n + v, j * n + v));
                }
            }
        }
    }
    let grouping = (0..graph.dim()).map(|k| k % n).collect();
    Ok(CoinedGraph::from_edges(grouping, edges))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;

    fn l(c: usize, v: usize) -> BasisLabel {
        BasisLabel::new(c, v)
    }

    #[test]
    fn flip_flop_torus_side2() {
        let g = build_torus(2, PairingMode::FlipFlop).unwrap();
        // (0,0) is vertex 0, (1,0) is vertex 1; +x is coin 0, -x coin 1
        assert_eq!(g.pair(l(0, 0)), l(1, 1));
        assert!(g.validate().is_valid());
    }

    #[test]
    fn colored_torus_side4() {
        let g = build_torus(4, PairingMode::EdgeColored).unwrap();
        assert_eq!(g.pair(l(0, 0)), l(0, 1));
        assert_eq!(g.pair(l(0, 1)), l(0, 0));
        assert!(g.validate().is_valid());
        assert_eq!(g.num_vertices(), 16);
        assert_eq!(g.degree(), 4);
        for k in 0..g.dim() {
            assert_eq!(g.label(g.pairing_flat()[k]).coin, g.label(k).coin);
        }
    }

    #[test]
    fn odd_torus_rejected() {
        let err = build_torus(3, PairingMode::EdgeColored).unwrap_err();
        assert!(err.to_string().contains("even"), "{err}");
        assert!(build_torus(3, PairingMode::FlipFlop).is_err());
    }

    #[test]
    fn cycle4_neighbors() {
        let g = build_cycle(4).unwrap();
        assert_eq!(g.pair(l(0, 1)).vertex, VertexId(0));
        assert_eq!(g.pair(l(1, 1)).vertex, VertexId(2));
        for k in 0..8 {
            assert_eq!(g.pairing_flat()[g.pairing_flat()[k]], k);
        }
        assert!(build_cycle(5).is_err());
    }

    #[test]
    fn cycle6_enumeration() {
        let g = build_cycle(6).unwrap();
        assert_eq!(g.dim(), 12);
        for k in 0..12 {
            let p = g.pairing_flat()[k];
            let (a, b) = (g.label(k), g.label(p));
            let dist = (a.vertex.0 + 6 - b.vertex.0) % 6;
            assert!(dist == 1 || dist == 5, "{a} -> {b}");
            assert_eq!(a.coin, b.coin);
            assert_eq!(g.pairing_flat()[p], k);
        }
    }

    #[test]
    fn hypercube_bits() {
        let g = build_hypercube(3).unwrap();
        assert_eq!(g.pair(l(1, 0b000)), l(1, 0b010));
        assert_eq!(g.edges().len(), 12);
        let g1 = build_hypercube(1).unwrap();
        assert_eq!(g1.num_vertices(), 2);
        assert_eq!(g1.edges().len(), 1);
        assert!(g1.validate().is_valid());
        assert!(build_hypercube(0).is_err());
    }

    #[test]
    fn validation_catches_self_loop_and_non_involution() {
        // cycle 4 with label (0,0) paired to itself
        let mut p = build_cycle(4).unwrap().pairing_flat().to_vec();
        p[0] = 0;
        let g = ColoredGraph::from_pairing("bad", 4, 2, PairingMode::EdgeColored, p);
        let r = g.validate();
        assert!(r.has(ViolationKind::SelfLoop));
        assert!(r.violations.iter().any(|v| v.label == Some(l(0, 0))));

        let mut p = build_cycle(4).unwrap().pairing_flat().to_vec();
        p[0] = 2; // (0,0) -> (0,2), but (0,2) -> (0,3)
        let g = ColoredGraph::from_pairing("bad2", 4, 2, PairingMode::EdgeColored, p);
        assert!(g.validate().has(ViolationKind::NotInvolution));
    }

    #[test]
    fn json_shape() {
        let g = build_cycle(4).unwrap();
        let v: serde_json::Value = serde_json::from_str(&g.to_json()).unwrap();
        assert_eq!(v["N"], 4);
        assert_eq!(v["d"], 2);
        assert_eq!(v["pairing"].as_array().unwrap().len(), 8);
        assert_eq!(ColoredGraph::from_json(&g.to_json()).unwrap(), g);
    }

    #[test]
    fn coined_square_is_8_cycle() {
        let g = build_cycle(4).unwrap();
        let cg = derive_coined_graph(&g, &CoinSpec::hadamard()).unwrap();
        assert_eq!(cg.num_nodes(), 8);
        assert!(cg.degrees().iter().all(|&d| d == 2));
        assert_eq!(cg.edges.len(), 8);
        // connected: walk the cycle
        let mut seen = vec![false; 8];
        let mut stack = vec![0];
        while let Some(a) = stack.pop() {
            if std::mem::replace(&mut seen[a], true) {
                continue;
            }
            for &(x, y) in &cg.edges {
                if x == a {
                    stack.push(y)
                } else if y == a {
                    stack.push(x)
                }
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn coined_torus_grover_degree4() {
        let g = build_torus(4, PairingMode::EdgeColored).unwrap();
        let cg = derive_coined_graph(&g, &CoinSpec::grover()).unwrap();
        assert!(cg.degrees().iter().all(|&d| d == 4));
        assert!(!cg.has_self_loop());
    }

    #[test]
    fn diagonal_coin_has_no_coin_edges() {
        let g = build_hypercube(2).unwrap();
        let z = DenseMatrix::from_fn(2, 2, |i, j| {
            if i != j {
                0.0.into()
            } else if i == 0 {
                1.0.into()
            } else {
                (-1.0).into()
            }
        });
        let cg = derive_coined_graph(&g, &CoinSpec::custom(z)).unwrap();
        assert_eq!(cg.edges.len(), g.edges().len());
        assert!(cg.edges.iter().all(|&(a, b)| cg.grouping[a] != cg.grouping[b]));
    }
}
