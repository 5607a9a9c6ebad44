use num_complex::Complex64;

use super::backend::{same_backend, Backend};
use super::spectral::SpectralData;
use crate::error::{Error, Result};
use crate::linalg::{self, c, max_abs, CMat};

/// Finite sum `sum_g c_g g` in the group algebra, indexed like the backend's
/// multiplication table.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    pub coeffs: Vec<Complex64>,
}

impl AlgebraElement {
    pub fn zero(order: usize) -> Self {
        AlgebraElement { coeffs: vec![Complex64::new(0.0, 0.0); order] }
    }

    pub fn scalar(backend: &Backend, z: Complex64) -> Self {
        let mut a = Self::zero(backend.order());
        a.coeffs[backend.identity()] = z;
        a
    }

    pub fn group_element(backend: &Backend, g: usize) -> Self {
        let mut a = Self::zero(backend.order());
        a.coeffs[g] = c(1.0);
        a
    }

    /// Build from `(label, coefficient)` terms; repeated labels add up.
    pub fn from_terms(backend: &Backend, terms: &[(&str, Complex64)]) -> Result<Self> {
        let mut a = Self::zero(backend.order());
        for (label, z) in terms {
            a.coeffs[backend.index_of(label)?] += z;
        }
        Ok(a)
    }

    pub fn mul(&self, other: &Self, backend: &Backend) -> Self {
        let n = backend.order();
        let mut out = Self::zero(n);
        for g in 0..n {
            if self.coeffs[g] == Complex64::new(0.0, 0.0) {
                continue;
            }
            for h in 0..n {
                out.coeffs[backend.mul(g, h)] += self.coeffs[g] * other.coeffs[h];
            }
        }
        out
    }

    /// `a* = sum conj(c_g) g^{-1}`.
    pub fn star(&self, backend: &Backend) -> Self {
        let mut out = Self::zero(backend.order());
        for (g, z) in self.coeffs.iter().enumerate() {
            out.coeffs[backend.inv(g)] = z.conj();
        }
        out
    }

    pub fn trace(&self, backend: &Backend) -> Complex64 {
        self.coeffs[backend.identity()]
    }

    /// Expansion `sum_g c_g r(g)` with `r(g) delta_h = delta_{h g^{-1}}`,
    /// a homomorphism into matrices commuting with left translations.
    pub fn expand(&self, backend: &Backend) -> CMat {
        let n = backend.order();
        let mut m = CMat::zeros(n, n);
        for g in 0..n {
            let z = self.coeffs[g];
            if z == Complex64::new(0.0, 0.0) {
                continue;
            }
            let gi = backend.inv(g);
            for h in 0..n {
                m[(backend.mul(h, gi), h)] += z;
            }
        }
        m
    }

    /// Inverse of [`expand`]: read coefficients off the identity column.
    pub fn contract(block: &CMat, backend: &Backend) -> Self {
        let e = backend.identity();
        let mut out = Self::zero(backend.order());
        for g in 0..backend.order() {
            out.coeffs[g] = block[(backend.inv(g), e)];
        }
        out
    }
}

/// Free Hilbert module `l^2(G)^rank`.
#[derive(Debug, Clone)]
pub struct HilbertModule {
    pub backend: Backend,
    pub rank: usize,
}

impl PartialEq for HilbertModule {
    fn eq(&self, other: &Self) -> bool {
        self.rank == other.rank && same_backend(&self.backend, &other.backend)
    }
}

impl HilbertModule {
    pub fn new(backend: &Backend, rank: usize) -> Self {
        HilbertModule { backend: backend.clone(), rank }
    }
    pub fn order(&self) -> usize {
        self.backend.order()
    }
    /// Size of the expanded complex vector space.
    pub fn expanded_dim(&self) -> usize {
        self.rank * self.order()
    }
    pub fn direct_sum(&self, other: &Self) -> Self {
        HilbertModule { backend: self.backend.clone(), rank: self.rank + other.rank }
    }
}

/// Bounded module map, stored through its expansion. Block `(i, j)` of size
/// `|G| x |G|` is the expansion of the entry from summand `j` of the source to
/// summand `i` of the target.
#[derive(Debug, Clone)]
pub struct EquivariantMap {
    pub source: HilbertModule,
    pub target: HilbertModule,
    matrix: CMat,
}

fn check_same(a: &HilbertModule, b: &HilbertModule, what: &str) -> Result<()> {
    if !same_backend(&a.backend, &b.backend) {
        return Err(Error::Backend(format!("{what}: {} vs {}", a.backend.name(), b.backend.name())));
    }
    if a.rank != b.rank {
        return Err(Error::Shape(format!("{what}: rank {} vs {}", a.rank, b.rank)));
    }
    Ok(())
}

impl EquivariantMap {
    /// Entries row-major: `entries[i][j]` maps source summand `j` to target
    /// summand `i`.
    pub fn from_entries(source: &HilbertModule, target: &HilbertModule, entries: &[Vec<AlgebraElement>]) -> Result<Self> {
        if !same_backend(&source.backend, &target.backend) {
            return Err(Error::Backend("source and target backends differ".into()));
        }
        let b = &source.backend;
        let n = b.order();
        if entries.len() != target.rank || entries.iter().any(|r| r.len() != source.rank) {
            return Err(Error::Shape(format!("entry table is not {}x{}", target.rank, source.rank)));
        }
        let mut m = CMat::zeros(target.expanded_dim(), source.expanded_dim());
        for (i, row) in entries.iter().enumerate() {
            for (j, a) in row.iter().enumerate() {
                if a.coeffs.len() != n {
                    return Err(Error::Backend(format!("element has {} coefficients, group order {n}", a.coeffs.len())));
                }
                m.view_mut((i * n, j * n), (n, n)).copy_from(&a.expand(b));
            }
        }
        Ok(EquivariantMap { source: source.clone(), target: target.clone(), matrix: m })
    }

    /// Wrap an expanded matrix. The caller guarantees it commutes with the
    /// left action; [`commutant_residual`](Self::commutant_residual) checks.
    pub fn from_expanded(source: &HilbertModule, target: &HilbertModule, matrix: CMat) -> Result<Self> {
        if matrix.nrows() != target.expanded_dim() || matrix.ncols() != source.expanded_dim() {
            return Err(Error::Shape(format!(
                "expanded matrix is {}x{}, expected {}x{}",
                matrix.nrows(),
                matrix.ncols(),
                target.expanded_dim(),
                source.expanded_dim()
            )));
        }
        Ok(EquivariantMap { source: source.clone(), target: target.clone(), matrix })
    }

    pub fn identity(m: &HilbertModule) -> Self {
        Self::scalar(m, c(1.0))
    }

    pub fn scalar(m: &HilbertModule, z: Complex64) -> Self {
        let d = m.expanded_dim();
        EquivariantMap { source: m.clone(), target: m.clone(), matrix: CMat::identity(d, d) * z }
    }

    pub fn zero(source: &HilbertModule, target: &HilbertModule) -> Self {
        EquivariantMap {
            source: source.clone(),
            target: target.clone(),
            matrix: CMat::zeros(target.expanded_dim(), source.expanded_dim()),
        }
    }

    /// Diagonal map with the given scalar on each summand.
    pub fn diagonal(m: &HilbertModule, values: &[f64]) -> Result<Self> {
        if values.len() != m.rank {
            return Err(Error::Shape(format!("{} diagonal values for rank {}", values.len(), m.rank)));
        }
        let n = m.order();
        let mut mat = CMat::zeros(m.expanded_dim(), m.expanded_dim());
        for (i, v) in values.iter().enumerate() {
            for k in 0..n {
                mat[(i * n + k, i * n + k)] = c(*v);
            }
        }
        Ok(EquivariantMap { source: m.clone(), target: m.clone(), matrix: mat })
    }

    pub fn backend(&self) -> &Backend {
        &self.source.backend
    }
    pub fn expand(&self) -> &CMat {
        &self.matrix
    }
    pub fn into_expanded(self) -> CMat {
        self.matrix
    }

    pub fn entry(&self, i: usize, j: usize) -> AlgebraElement {
        let n = self.source.order();
        let blk = self.matrix.view((i * n, j * n), (n, n)).into_owned();
        AlgebraElement::contract(&blk, self.backend())
    }

    pub fn entries(&self) -> Vec<Vec<AlgebraElement>> {
        (0..self.target.rank).map(|i| (0..self.source.rank).map(|j| self.entry(i, j)).collect()).collect()
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        check_same(&self.source, &other.target, "compose")?;
        Ok(EquivariantMap {
            source: other.source.clone(),
            target: self.target.clone(),
            matrix: &self.matrix * &other.matrix,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_same(&self.source, &other.source, "add")?;
        check_same(&self.target, &other.target, "add")?;
        Ok(EquivariantMap { source: self.source.clone(), target: self.target.clone(), matrix: &self.matrix + &other.matrix })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(c(-1.0)))
    }

    pub fn scale(&self, z: Complex64) -> Self {
        EquivariantMap { source: self.source.clone(), target: self.target.clone(), matrix: &self.matrix * z }
    }

    /// Hilbert adjoint with respect to the standard inner products.
    pub fn adjoint(&self) -> Self {
        EquivariantMap { source: self.target.clone(), target: self.source.clone(), matrix: self.matrix.adjoint() }
    }

    pub fn inverse(&self) -> Result<Self> {
        Ok(EquivariantMap {
            source: self.target.clone(),
            target: self.source.clone(),
            matrix: linalg::inverse(&self.matrix)?,
        })
    }

    /// `(1/|G|) Tr` of the expansion, equal to the sum of identity
    /// coefficients of the diagonal entries.
    pub fn vn_trace(&self) -> Result<Complex64> {
        if self.source.rank != self.target.rank {
            return Err(Error::Shape("trace of a non-square map".into()));
        }
        Ok(self.matrix.trace() / c(self.source.order() as f64))
    }

    pub fn self_adjoint_residual(&self) -> f64 {
        max_abs(&(&self.matrix - self.matrix.adjoint()))
    }

    /// Largest deviation from commuting with the left regular action.
    pub fn commutant_residual(&self) -> f64 {
        let b = self.backend();
        let n = b.order();
        let mut worst = 0.0f64;
        for g in 0..n {
            // (l(g) M)[g*a, col] = M[a, col]; (M l(g))[row, b] = M[row, g^{-1} b]
            for bi in 0..self.target.rank {
                for bj in 0..self.source.rank {
                    for a in 0..n {
                        for bb in 0..n {
                            let lhs = self.matrix[(bi * n + b.mul(g, a), bj * n + b.mul(g, bb))];
                            let rhs = self.matrix[(bi * n + a, bj * n + bb)];
                            worst = worst.max((lhs - rhs).norm());
                        }
                    }
                }
            }
        }
        worst
    }

    /// Spectrum of `|phi|` on the source.
    pub fn spectral_data(&self) -> SpectralData {
        linalg::abs_spectrum(&self.matrix, 1.0 / self.source.order() as f64)
    }

    pub fn log_vol(&self) -> f64 {
        self.spectral_data().log_vol()
    }

    /// Apply a real function to a self-adjoint map.
    pub fn hermitian_fn<F: Fn(f64) -> f64>(&self, f: F) -> Result<Self> {
        let tol = 1e-10 * max_abs(&self.matrix).max(1.0);
        let r = self.self_adjoint_residual();
        if r > tol || self.source.rank != self.target.rank {
            return Err(Error::NotSelfAdjoint(r));
        }
        Ok(EquivariantMap {
            source: self.source.clone(),
            target: self.target.clone(),
            matrix: linalg::herm_fn(&self.matrix, f),
        })
    }

    /// Check this is a positive definite self-adjoint map.
    pub fn check_positive(&self) -> Result<()> {
        let r = self.self_adjoint_residual();
        if r > 1e-10 * max_abs(&self.matrix).max(1.0) {
            return Err(Error::NotSelfAdjoint(r));
        }
        let (vals, _) = linalg::eigh(&self.matrix);
        let max = vals.last().copied().unwrap_or(1.0);
        match vals.first() {
            Some(&m) if m <= super::zero_tolerance(vals.len()) * max.abs() => {
                Err(Error::NotPositive(format!("smallest eigenvalue {m:e}")))
            }
            _ => Ok(()),
        }
    }

    /// Assemble a block map between direct sums; `None` blocks are zero.
    pub fn block(rows: &[HilbertModule], cols: &[HilbertModule], blocks: &[Vec<Option<&EquivariantMap>>]) -> Result<Self> {
        let backend = rows.first().or(cols.first()).map(|m| m.backend.clone()).ok_or_else(|| Error::Shape("empty block".into()))?;
        for (bi, r) in rows.iter().enumerate() {
            for (bj, cc) in cols.iter().enumerate() {
                if let Some(b) = blocks[bi][bj] {
                    check_same(&b.target, r, "block row")?;
                    check_same(&b.source, cc, "block column")?;
                }
            }
        }
        let mats: Vec<Vec<Option<&CMat>>> = blocks.iter().map(|r| r.iter().map(|b| b.map(|x| &x.matrix)).collect()).collect();
        let rd: Vec<usize> = rows.iter().map(|m| m.expanded_dim()).collect();
        let cd: Vec<usize> = cols.iter().map(|m| m.expanded_dim()).collect();
        let matrix = linalg::block(&rd, &cd, &mats)?;
        let target = HilbertModule::new(&backend, rows.iter().map(|m| m.rank).sum());
        let source = HilbertModule::new(&backend, cols.iter().map(|m| m.rank).sum());
        Ok(EquivariantMap { source, target, matrix })
    }

    /// Sub-block between summand ranges.
    pub fn sub_block(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Self {
        let n = self.source.order();
        let b = self.backend();
        let m = self.matrix.view((rows.start * n, cols.start * n), (rows.len() * n, cols.len() * n)).into_owned();
        EquivariantMap { source: HilbertModule::new(b, cols.len()), target: HilbertModule::new(b, rows.len()), matrix: m }
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.matrix)
    }

    pub fn distance(&self, other: &Self) -> f64 {
        if self.matrix.shape() != other.matrix.shape() {
            return f64::INFINITY;
        }
        max_abs(&(&self.matrix - &other.matrix))
    }
}
