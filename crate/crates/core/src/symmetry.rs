//! Permutation symmetries of a walk and the reduction to orbit states.
//!
//! A permutation `sigma` of basis labels that commutes with `S` and `F` leaves
//! the span of the orbit states `|O> = |O|^{-1/2} sum_{k in O} |k>` invariant,
//! so `S`, `F`, any Hamiltonian built from them and every `U(s)` restrict to
//! small matrices on that span.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::f64::consts::FRAC_PI_2;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{self, Mode};
use crate::graphs::{BasisLabel, CoinedGraph, ColoredGraph};
use crate::linalg::{eigh_matrix, DenseMatrix, Propagator, Backend, StateVector};
use crate::operators::{build_hamiltonian, HamiltonianForm, SparseOperator};
use crate::walks::FamilyStep;
use crate::{C64, EXACT_TOL};

/// Largest group `group_closure` will enumerate.
pub const GROUP_CAP: usize = 1_000_000;
/// Tolerance for a vector to count as inside the orbit span.
pub const SPAN_TOL: f64 = 1e-10;

/// `P|k> = |image[k]>` on flat basis labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Permutation {
    image: Vec<usize>,
}

impl Permutation {
    pub fn new(image: Vec<usize>) -> Result<Self> {
        let dim = image.len();
        let mut seen = vec![false; dim];
        for &k in &image {
            if k >= dim || seen[k] {
                return Err(Error::NotBijective { dim });
            }
            seen[k] = true;
        }
        Ok(Permutation { image })
    }

    pub fn identity(dim: usize) -> Self {
        Permutation {
            image: (0..dim).collect(),
        }
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    pub fn dim(&self) -> usize {
        self.image.len()
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(i, &k)| i == k)
    }

    /// `self` after `other`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        Permutation {
            image: other.image.iter().map(|&k| self.image[k]).collect(),
        }
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.dim()];
        for (i, &k) in self.image.iter().enumerate() {
            inv[k] = i;
        }
        Permutation { image: inv }
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        psi.ensure_dim(self.dim())?;
        let mut out = vec![C64::new(0.0, 0.0); self.dim()];
        for (k, &img) in self.image.iter().enumerate() {
            out[img] = psi[k];
        }
        Ok(StateVector::new(out))
    }

    /// Lifts a vertex automorphism to basis labels: `|c, v>` goes to the coin at
    /// `phi(v)` that points at `phi(w)`, where `w` is the neighbor of `v` along `c`.
    pub fn lift_vertex_map(graph: &ColoredGraph, phi: &[usize]) -> Result<Self> {
        let (n, d) = (graph.num_vertices(), graph.degree());
        if phi.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: phi.len(),
            });
        }
        Permutation::new(phi.to_vec()).map_err(|_| Error::NotBijective { dim: n })?;
        let target = |c: usize, v: usize| graph.pair(BasisLabel::new(c, v)).vertex.0;
        let mut image = vec![0; graph.dim()];
        for v in 0..n {
            for c in 0..d {
                let w = phi[target(c, v)];
                let hits: Vec<usize> = (0..d).filter(|&c2| target(c2, phi[v]) == w).collect();
                match hits[..] {
                    [c2] => image[BasisLabel::new(c, v).flat(n)] = BasisLabel::new(c2, phi[v]).flat(n),
                    [] => {
                        return Err(Error::InvalidGraph(format!(
                            "vertex map is not an automorphism: edge {v}-{} has no image",
                            target(c, v)
                        )))
                    }
                    _ => {
                        return Err(Error::InvalidGraph(format!(
                            "vertex {} has parallel edges, coin image is ambiguous",
                            phi[v]
                        )))
                    }
                }
            }
        }
        Permutation::new(image)
    }
}

/// Named symmetry groups understood for the built-in graph families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NamedGroup {
    Trivial,
    /// All permutations of hypercube bits.
    BitPerms,
    /// `v -> -v` on a cycle, `(x, y) -> (-x, y)` on a torus.
    Reflection,
    /// `(x, y) -> (-y, x)` on a torus, fixing vertex 0.
    Rotation,
}

impl FromStr for NamedGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trivial" => Ok(NamedGroup::Trivial),
            "bit-perms" | "bit_perms" => Ok(NamedGroup::BitPerms),
            "reflection" => Ok(NamedGroup::Reflection),
            "rotation" => Ok(NamedGroup::Rotation),
            other => Err(Error::InvalidParameter(format!(
                "unknown group '{other}' (expected trivial, bit-perms, reflection, rotation)"
            ))),
        }
    }
}

impl NamedGroup {
    /// Generators on the labels of `graph`, whose family is read from its name.
    pub fn generators(self, graph: &ColoredGraph) -> Result<Vec<Permutation>> {
        let n = graph.num_vertices();
        let family = graph.name().split(':').next().unwrap_or("");
        let unsupported = || {
            Err(Error::InvalidParameter(format!(
                "group {self:?} is not defined for graph {}",
                graph.name()
            )))
        };
        let maps: Vec<Vec<usize>> = match (self, family) {
            (NamedGroup::Trivial, _) => Vec::new(),
            (NamedGroup::BitPerms, "hypercube") => {
                let bits = graph.degree();
                (0..bits.saturating_sub(1))
                    .map(|a| (0..n).map(|v| swap_bits(v, a, a + 1)).collect())
                    .collect()
            }
            (NamedGroup::Reflection, "cycle") => vec![(0..n).map(|v| (n - v) % n).collect()],
            (NamedGroup::Reflection, "torus") => {
                let side = (n as f64).sqrt().round() as usize;
                vec![(0..n)
                    .map(|v| (side - v % side) % side + side * (v / side))
                    .collect()]
            }
            (NamedGroup::Rotation, "torus") => {
                let side = (n as f64).sqrt().round() as usize;
                vec![(0..n)
                    .map(|v| {
                        let (x, y) = (v % side, v / side);
                        (side - y) % side + side * x
                    })
                    .collect()]
            }
            _ => return unsupported(),
        };
        maps.iter()
            .map(|phi| Permutation::lift_vertex_map(graph, phi))
            .collect()
    }
}

fn swap_bits(v: usize, a: usize, b: usize) -> usize {
    let (ba, bb) = ((v >> a) & 1, (v >> b) & 1);
    if ba == bb {
        v
    } else {
        v ^ (1 << a) ^ (1 << b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetryReport {
    pub shift_residual: f64,
    pub coin_residual: f64,
    pub walk_residual: f64,
    pub tolerance: f64,
}

impl SymmetryReport {
    pub fn passed(&self) -> bool {
        self.shift_residual <= self.tolerance
            && self.coin_residual <= self.tolerance
            && self.walk_residual <= self.tolerance
    }
}

/// `max |P A P^T - A|` for `A` in `S`, `F` and `SF`.
pub fn check_symmetry(sigma: &Permutation, shift: &SparseOperator, coin_flip: &SparseOperator) -> Result<SymmetryReport> {
    shift.ensure_same_dim(coin_flip)?;
    if sigma.dim() != shift.dim() {
        return Err(Error::DimensionMismatch {
            expected: shift.dim(),
            found: sigma.dim(),
        });
    }
    let residual = |a: &SparseOperator| a.permuted(sigma.image()).max_abs_diff(a);
    let walk = shift.matmul(coin_flip)?;
    Ok(SymmetryReport {
        shift_residual: residual(shift),
        coin_residual: residual(coin_flip),
        walk_residual: residual(&walk),
        tolerance: EXACT_TOL,
    })
}

/// All products of the generators, by breadth-first search from the identity.
pub fn group_closure(generators: &[Permutation], dim: usize, cap: usize) -> Result<Vec<Permutation>> {
    if let Some(g) = generators.iter().find(|g| g.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: g.dim(),
        });
    }
    let id = Permutation::identity(dim);
    let mut seen: HashSet<Permutation> = HashSet::from([id.clone()]);
    let mut queue = VecDeque::from([id.clone()]);
    let mut out = vec![id];
    while let Some(p) = queue.pop_front() {
        for g in generators {
            let q = g.compose(&p);
            if seen.insert(q.clone()) {
                if seen.len() > cap {
                    return Err(Error::InvalidParameter(format!("group has more than {cap} elements")));
                }
                out.push(q.clone());
                queue.push_back(q);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitBasis {
    pub dim: usize,
    pub num_vertices: usize,
    /// Sorted labels of each orbit, orbits ordered by smallest label.
    pub orbits: Vec<Vec<usize>>,
    /// Orbit index of every label.
    pub orbit_of: Vec<usize>,
    /// Quotient vertex of every orbit.
    pub vertex_grouping: Vec<usize>,
}

fn find(parent: &mut [usize], mut k: usize) -> usize {
    while parent[k] != k {
        parent[k] = parent[parent[k]];
        k = parent[k];
    }
    k
}

/// Orbits of the labels `0..dim` under the group generated by `generators`.
/// Orbits sharing the same set of vertices form one quotient vertex.
pub fn build_orbit_basis(generators: &[Permutation], dim: usize, num_vertices: usize) -> Result<OrbitBasis> {
    if num_vertices == 0 || dim % num_vertices != 0 {
        return Err(Error::InvalidParameter(format!(
            "{dim} labels cannot be split over {num_vertices} vertices"
        )));
    }
    let mut parent: Vec<usize> = (0..dim).collect();
    for g in generators {
        if g.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: g.dim(),
            });
        }
        for (k, &img) in g.image().iter().enumerate() {
            let (a, b) = (find(&mut parent, k), find(&mut parent, img));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut orbit_of = vec![usize::MAX; dim];
    let mut orbits: Vec<Vec<usize>> = Vec::new();
    let mut root_index = vec![usize::MAX; dim];
    for k in 0..dim {
        let r = find(&mut parent, k);
        if root_index[r] == usize::MAX {
            root_index[r] = orbits.len();
            orbits.push(Vec::new());
        }
        orbit_of[k] = root_index[r];
        orbits[root_index[r]].push(k);
    }
    let vertex_sets: Vec<BTreeSet<usize>> = orbits
        .iter()
        .map(|o| o.iter().map(|k| k % num_vertices).collect())
        .collect();
    let mut groups: Vec<&BTreeSet<usize>> = Vec::new();
    let vertex_grouping = vertex_sets
        .iter()
        .map(|vs| match groups.iter().position(|g| *g == vs) {
            Some(i) => i,
            None => {
                groups.push(vs);
                groups.len() - 1
            }
        })
        .collect();
    Ok(OrbitBasis {
        dim,
        num_vertices,
        orbits,
        orbit_of,
        vertex_grouping,
    })
}

impl OrbitBasis {
    pub fn len(&self) -> usize {
        self.orbits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orbits.is_empty()
    }

    pub fn num_quotient_vertices(&self) -> usize {
        self.vertex_grouping.iter().copied().max().map_or(0, |m| m + 1)
    }

    /// `|O_j>` in the full space.
    pub fn state(&self, j: usize) -> StateVector {
        let mut amps = vec![C64::new(0.0, 0.0); self.dim];
        let w = 1.0 / (self.orbits[j].len() as f64).sqrt();
        for &k in &self.orbits[j] {
            amps[k] = C64::new(w, 0.0);
        }
        StateVector::new(amps)
    }

    /// Coefficients `<O_j|psi>` and the norm of the part of `psi` outside the span.
    pub fn project_with_residual(&self, psi: &StateVector) -> Result<(Vec<C64>, f64)> {
        psi.ensure_dim(self.dim)?;
        let coeffs: Vec<C64> = self
            .orbits
            .iter()
            .map(|o| o.iter().map(|&k| psi[k]).sum::<C64>() / (o.len() as f64).sqrt())
            .collect();
        let back = self.lift(&coeffs)?;
        Ok((coeffs, back.distance(psi)))
    }

    /// Coefficients of `psi`, which must lie in the orbit span.
    pub fn project(&self, psi: &StateVector) -> Result<Vec<C64>> {
        let (coeffs, residual) = self.project_with_residual(psi)?;
        if residual > SPAN_TOL {
            return Err(Error::OutsideSpan { residual });
        }
        Ok(coeffs)
    }

    /// `sum_j coeffs[j] |O_j>`.
    pub fn lift(&self, coeffs: &[C64]) -> Result<StateVector> {
        if coeffs.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: coeffs.len(),
            });
        }
        let mut amps = vec![C64::new(0.0, 0.0); self.dim];
        for (o, &c) in self.orbits.iter().zip(coeffs) {
            let w = c / (o.len() as f64).sqrt();
            for &k in o {
                amps[k] = w;
            }
        }
        Ok(StateVector::new(amps))
    }
}

/// `<O_i|A|O_j>`, rejected if `A` maps some orbit state out of the span.
pub fn reduce_operator(a: &SparseOperator, basis: &OrbitBasis) -> Result<DenseMatrix> {
    if a.dim() != basis.dim {
        return Err(Error::DimensionMismatch {
            expected: basis.dim,
            found: a.dim(),
        });
    }
    let r = basis.len();
    let mut m = DenseMatrix::zeros(r, r);
    for j in 0..r {
        let image = a.matvec(&basis.state(j))?;
        let (coeffs, residual) = basis.project_with_residual(&image)?;
        if residual > SPAN_TOL {
            return Err(Error::SpanLeak { residual });
        }
        m.set_column(j, &coeffs);
    }
    Ok(m)
}

/// Quotient graph: one node per orbit state, grouped into quotient vertices,
/// edges where the reduced Hamiltonian has a nonzero off-diagonal entry.
pub fn quotient_graph(basis: &OrbitBasis, h_reduced: &DenseMatrix) -> Result<CoinedGraph> {
    let r = basis.len();
    if h_reduced.rows() != r || h_reduced.cols() != r {
        return Err(Error::DimensionMismatch {
            expected: r,
            found: h_reduced.rows(),
        });
    }
    let edges = (0..r)
        .flat_map(|i| (0..r).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && h_reduced[(i, j)].norm() > EXACT_TOL);
    Ok(CoinedGraph::from_edges(basis.vertex_grouping.clone(), edges))
}

/// Reduced `U(s) = a^2 I + ab(S + F) + b^2 SF` with `a = e^{i pi s/2} cos(pi s/2)`,
/// `b = -i e^{i pi s/2} sin(pi s/2)`.
pub fn reduced_family_step(s_red: &DenseMatrix, f_red: &DenseMatrix, s: f64) -> DenseMatrix {
    let (phase, cos, sin) = if s == 1.0 {
        (C64::new(0.0, 1.0), 0.0, 1.0)
    } else {
        let x = FRAC_PI_2 * s;
        (C64::from_polar(1.0, x), x.cos(), x.sin())
    };
    let a = phase * cos;
    let b = C64::new(0.0, -1.0) * phase * sin;
    let r = s_red.rows();
    let sum = s_red.combine(C64::new(1.0, 0.0), f_red, C64::new(1.0, 0.0));
    DenseMatrix::identity(r)
        .scaled(a * a)
        .combine(C64::new(1.0, 0.0), &sum, a * b)
        .combine(C64::new(1.0, 0.0), &s_red.matmul(f_red), b * b)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EquivalenceRow {
    Continuous { t: f64, deviation: f64 },
    Family { s: f64, deviation: f64 },
}

impl EquivalenceRow {
    pub fn deviation(&self) -> f64 {
        match *self {
            EquivalenceRow::Continuous { deviation, .. } | EquivalenceRow::Family { deviation, .. } => deviation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub full_dim: usize,
    pub reduced_dim: usize,
    pub form: HamiltonianForm,
    pub rows: Vec<EquivalenceRow>,
    pub max_deviation: f64,
    pub tolerance: f64,
}

impl EquivalenceReport {
    pub fn passed(&self) -> bool {
        self.max_deviation <= self.tolerance
    }
}

/// Compares full and reduced dynamics from `psi0`: `exp(-iHt)` for each `t` and
/// one application of `U(s)` for each `s`.
pub fn reduction_equivalence_check(
    shift: &SparseOperator,
    coin_flip: &SparseOperator,
    basis: &OrbitBasis,
    psi0: &StateVector,
    t_list: &[f64],
    s_list: &[f64],
    form: HamiltonianForm,
    mode: Mode,
) -> Result<EquivalenceReport> {
    let coeffs = basis.project(psi0)?;
    let h = build_hamiltonian(shift, coin_flip, form)?;
    let h_red = reduce_operator(&h, basis)?;
    let s_red = reduce_operator(shift, basis)?;
    let f_red = reduce_operator(coin_flip, basis)?;
    let sd = eigh_matrix(&h_red)?;
    let full = Propagator::new(&h, 1e-13, Backend::Spectral)?;
    let lifted = basis.lift(&coeffs)?;

    enum Job {
        T(f64),
        S(f64),
    }
    let jobs: Vec<Job> = t_list
        .iter()
        .map(|&t| Job::T(t))
        .chain(s_list.iter().map(|&s| Job::S(s)))
        .collect();
    let rows = exec::map(mode, &jobs, |job| -> Result<EquivalenceRow> {
        match *job {
            Job::T(t) => {
                let c = sd.project(&coeffs);
                let phased: Vec<C64> = c
                    .iter()
                    .zip(&sd.eigenvalues)
                    .map(|(ci, &l)| ci * C64::from_polar(1.0, -l * t))
                    .collect();
                let reduced = basis.lift(&sd.synthesize(&phased))?;
                let direct = full.apply(t, &lifted)?;
                Ok(EquivalenceRow::Continuous {
                    t,
                    deviation: reduced.distance(&direct),
                })
            }
            Job::S(s) => {
                let u_red = reduced_family_step(&s_red, &f_red, s);
                let reduced = basis.lift(&u_red.apply(&coeffs))?;
                let direct = FamilyStep::new(s, shift, coin_flip)?.apply(&lifted)?;
                Ok(EquivalenceRow::Family {
                    s,
                    deviation: reduced.distance(&direct),
                })
            }
        }
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let max_deviation = rows.iter().map(EquivalenceRow::deviation).fold(0.0, f64::max);
    Ok(EquivalenceReport {
        full_dim: basis.dim,
        reduced_dim: basis.len(),
        form,
        rows,
        max_deviation,
        tolerance: 1e-9,
    })
}

/// Reduced matrix in coordinate form, nonzero entries only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CooEntry {
    pub row: usize,
    pub col: usize,
    pub re: f64,
    pub im: f64,
}

pub fn coo_entries(m: &DenseMatrix) -> Vec<CooEntry> {
    let mut out = Vec::new();
    for row in 0..m.rows() {
        for col in 0..m.cols() {
            let v = m[(row, col)];
            if v.norm() > EXACT_TOL {
                out.push(CooEntry {
                    row,
                    col,
                    re: v.re,
                    im: v.im,
                });
            }
        }
    }
    out
}
