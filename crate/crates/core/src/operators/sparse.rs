use std::io::{self, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{self, Mode};
use crate::fmt17;
use crate::linalg::{DenseMatrix, StateVector};
use crate::{C64, EXACT_TOL};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Properties that have been checked numerically at [`EXACT_TOL`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Tags {
    pub hermitian: bool,
    pub unitary: bool,
    pub involution: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TagDeviations {
    pub hermitian: f64,
    pub unitary: f64,
    pub involution: f64,
}

/// Square complex matrix in compressed-row form with strictly increasing
/// column indices in every row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
    tags: Tags,
    spectral_bounds: Option<(f64, f64)>,
}

impl SparseOperator {
    /// Assembles from `(row, col, value)` triplets. Duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(dim: usize, triplets: impl IntoIterator<Item = (usize, usize, C64)>) -> Self {
        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); dim];
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "triplet ({r}, {c}) outside dim {dim}");
            rows[r].push((c, v));
        }
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut iter = row.into_iter().peekable();
            while let Some((c, mut v)) = iter.next() {
                while let Some(&(c2, v2)) = iter.peek() {
                    if c2 != c {
                        break;
                    }
                    v += v2;
                    iter.next();
                }
                if v != ZERO {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        SparseOperator {
            dim,
            row_ptr,
            cols,
            vals,
            tags: Tags::default(),
            spectral_bounds: None,
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut op = SparseOperator::from_triplets(dim, (0..dim).map(|i| (i, i, C64::new(1.0, 0.0))));
        op.tags = Tags {
            hermitian: true,
            unitary: true,
            involution: true,
        };
        op.spectral_bounds = Some((1.0, 1.0));
        op
    }

    pub fn from_dense(m: &DenseMatrix) -> Self {
        assert!(m.is_square());
        let n = m.rows();
        SparseOperator::from_triplets(
            n,
            (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| (i, j, m[(i, j)])),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn tags(&self) -> Tags {
        self.tags
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn row_nnz(&self, r: usize) -> usize {
        self.row_ptr[r + 1] - self.row_ptr[r]
    }

    pub fn max_row_nnz(&self) -> usize {
        (0..self.dim).map(|r| self.row_nnz(r)).max().unwrap_or(0)
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[span.clone()].binary_search(&c) {
            Ok(k) => self.vals[span.start + k],
            Err(_) => ZERO,
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn is_real(&self) -> bool {
        self.vals.iter().all(|v| v.im == 0.0)
    }

    fn row_dot(&self, r: usize, x: &[C64]) -> C64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        let mut acc = ZERO;
        for (c, v) in self.cols[span.clone()].iter().zip(&self.vals[span]) {
            acc += v * x[*c];
        }
        acc
    }

    /// `y = A x`, rows distributed across threads when `mode` is parallel.
    pub fn matvec_into(&self, x: &[C64], y: &mut [C64], mode: Mode) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        if mode.is_parallel() && self.dim >= 4096 {
            exec::fill_indexed(mode, y, |r| self.row_dot(r, x));
        } else {
            for (r, yr) in y.iter_mut().enumerate() {
                *yr = self.row_dot(r, x);
            }
        }
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.dim];
        self.matvec_into(x, &mut y, Mode::Sequential);
        y
    }

    /// Exact sparse product; the state is not renormalized.
    pub fn matvec(&self, psi: &StateVector) -> Result<StateVector> {
        psi.ensure_dim(self.dim)?;
        Ok(StateVector::new(self.apply(psi.as_slice())))
    }

    pub fn adjoint(&self) -> Self {
        let mut out = SparseOperator::from_triplets(self.dim, self.triplets().map(|(r, c, v)| (c, r, v.conj())));
        out.tags = self.tags;
        out.spectral_bounds = self.spectral_bounds;
        out
    }

    pub fn scaled(&self, a: C64) -> Self {
        SparseOperator::from_triplets(self.dim, self.triplets().map(|(r, c, v)| (r, c, a * v)))
    }

    /// `a * self + b * other + shift * I`
    pub fn combine(&self, a: f64, other: &SparseOperator, b: f64, shift: f64) -> Result<Self> {
        self.ensure_same_dim(other)?;
        let ta = self.triplets().map(|(r, c, v)| (r, c, v * a));
        let tb = other.triplets().map(|(r, c, v)| (r, c, v * b));
        let ti = (0..self.dim).map(|i| (i, i, C64::new(shift, 0.0)));
        Ok(SparseOperator::from_triplets(
            self.dim,
            ta.chain(tb).chain(ti).filter(|t| t.2 != ZERO),
        ))
    }

    /// Sparse-sparse product `self * other`.
    pub fn matmul(&self, other: &SparseOperator) -> Result<Self> {
        self.ensure_same_dim(other)?;
        let mut trips = Vec::new();
        for r in 0..self.dim {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    trips.push((r, c, a * b));
                }
            }
        }
        Ok(SparseOperator::from_triplets(self.dim, trips))
    }

    /// `P A P^T` for the permutation `P|k> = |image[k]>`.
    pub fn permuted(&self, image: &[usize]) -> Self {
        assert_eq!(image.len(), self.dim);
        SparseOperator::from_triplets(self.dim, self.triplets().map(|(r, c, v)| (image[r], image[c], v)))
    }

    pub fn max_abs_diff(&self, other: &SparseOperator) -> f64 {
        assert_eq!(self.dim, other.dim);
        let mut dev = 0.0f64;
        for r in 0..self.dim {
            let mut a = self.row(r).peekable();
            let mut b = other.row(r).peekable();
            loop {
                match (a.peek().copied(), b.peek().copied()) {
                    (None, None) => break,
                    (Some((ca, va)), Some((cb, vb))) if ca == cb => {
                        dev = dev.max((va - vb).norm());
                        a.next();
                        b.next();
                    }
                    (Some((ca, va)), Some((cb, _))) if ca < cb => {
                        dev = dev.max(va.norm());
                        a.next();
                    }
                    (Some((_, va)), None) => {
                        dev = dev.max(va.norm());
                        a.next();
                    }
                    (_, Some((_, vb))) => {
                        dev = dev.max(vb.norm());
                        b.next();
                    }
                }
            }
        }
        dev
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn hermitian_deviation(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    /// `max |A^H A - I|`, i.e. column norms and pairwise column inner products.
    pub fn unitary_deviation(&self) -> f64 {
        let gram = self.adjoint().matmul(self).expect("same dim");
        gram.max_abs_diff(&SparseOperator::identity(self.dim))
    }

    pub fn involution_deviation(&self) -> f64 {
        let sq = self.matmul(self).expect("same dim");
        sq.max_abs_diff(&SparseOperator::identity(self.dim))
    }

    pub fn tag_deviations(&self) -> TagDeviations {
        TagDeviations {
            hermitian: self.hermitian_deviation(),
            unitary: self.unitary_deviation(),
            involution: self.involution_deviation(),
        }
    }

    /// Verifies the requested properties and records them as tags.
    pub fn with_verified_tags(mut self, hermitian: bool, unitary: bool, involution: bool) -> Result<Self> {
        if hermitian {
            let deviation = self.hermitian_deviation();
            if deviation > EXACT_TOL {
                return Err(Error::NotHermitian { deviation });
            }
            self.tags.hermitian = true;
        }
        if unitary {
            let deviation = self.unitary_deviation();
            if deviation > EXACT_TOL {
                return Err(Error::InvalidParameter(format!(
                    "operator is not unitary (max |A^H A - I| = {deviation:.3e})"
                )));
            }
            self.tags.unitary = true;
        }
        if involution {
            let deviation = self.involution_deviation();
            if deviation > EXACT_TOL {
                return Err(Error::NotInvolution { deviation });
            }
            self.tags.involution = true;
        }
        Ok(self)
    }

    /// Hermitian check that trusts the tag and otherwise measures.
    pub fn ensure_hermitian(&self) -> Result<()> {
        if self.tags.hermitian {
            return Ok(());
        }
        let deviation = self.hermitian_deviation();
        if deviation > EXACT_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(())
    }

    pub fn with_spectral_bounds(mut self, lo: f64, hi: f64) -> Self {
        self.spectral_bounds = Some((lo, hi));
        self
    }

    /// Gershgorin enclosure of the (real) spectrum of a Hermitian operator.
    pub fn gershgorin_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for r in 0..self.dim {
            let mut center = 0.0;
            let mut radius = 0.0;
            for (c, v) in self.row(r) {
                if c == r {
                    center = v.re;
                } else {
                    radius += v.norm();
                }
            }
            lo = lo.min(center - radius);
            hi = hi.max(center + radius);
        }
        if self.dim == 0 {
            (0.0, 0.0)
        } else {
            (lo, hi)
        }
    }

    /// Known enclosure if one was attached, otherwise Gershgorin.
    pub fn spectral_bounds(&self) -> (f64, f64) {
        self.spectral_bounds.unwrap_or_else(|| self.gershgorin_bounds())
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    /// FNV-1a over the dimension, structure and value bits.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |x: u64| {
            for b in x.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        eat(self.dim as u64);
        for &p in &self.row_ptr {
            eat(p as u64);
        }
        for &c in &self.cols {
            eat(c as u64);
        }
        for v in &self.vals {
            eat(v.re.to_bits());
            eat(v.im.to_bits());
        }
        h
    }

    /// Coordinate text: one `row col re im` line per stored entry.
    pub fn write_coo<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# dim {} nnz {}", self.dim, self.nnz())?;
        for (r, c, v) in self.triplets() {
            writeln!(w, "{r} {c} {} {}", fmt17(v.re), fmt17(v.im))?;
        }
        Ok(())
    }

    pub fn read_coo(text: &str) -> Result<Self> {
        let mut dim = None;
        let mut trips = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if let Some(rest) = line.strip_prefix('#') {
                let mut it = rest.split_whitespace();
                if it.next() == Some("dim") {
                    dim = it.next().and_then(|s| s.parse().ok());
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::InvalidParameter(format!("bad coordinate line '{line}'"));
            if f.len() != 4 {
                return Err(bad());
            }
            let r: usize = f[0].parse().map_err(|_| bad())?;
            let c: usize = f[1].parse().map_err(|_| bad())?;
            let re: f64 = f[2].parse().map_err(|_| bad())?;
            let im: f64 = f[3].parse().map_err(|_| bad())?;
            trips.push((r, c, C64::new(re, im)));
        }
        let dim = dim.ok_or_else(|| Error::InvalidParameter("coordinate text lacks '# dim' header".into()))?;
        if trips.iter().any(|&(r, c, _)| r >= dim || c >= dim) {
            return Err(Error::InvalidParameter("coordinate entry outside dim".into()));
        }
        Ok(SparseOperator::from_triplets(dim, trips))
    }

    pub fn ensure_same_dim(&self, other: &SparseOperator) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }
}
