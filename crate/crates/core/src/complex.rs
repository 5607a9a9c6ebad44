//! Cochain complexes of Hilbert modules with metric twists, their Hodge
//! decomposition and torsion.

use crate::error::{Error, Result};
use crate::linalg::{self, c, max_abs, CMat, HodgeBases, MatrixComplex, TorsionReport};
use crate::vna::{same_backend, Backend, EquivariantMap, HilbertModule, SpectralData};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TorsionMode {
    /// Refuse complexes with nonzero reduced cohomology.
    Strict,
    /// Drop the kernel of every Laplacian.
    Lenient,
}

/// `C_0 -> C_1 -> ... -> C_N`. Degree `i` carries the inner product
/// `<G_i x, y>`; with `G_i = Id` it is the standard one.
#[derive(Debug, Clone)]
pub struct CochainComplex {
    backend: Backend,
    modules: Vec<HilbertModule>,
    differentials: Vec<EquivariantMap>,
    metrics: Vec<EquivariantMap>,
}

/// Relative tolerance for `d∘d = 0`.
const SQUARE_TOL: f64 = 1e-9;

impl CochainComplex {
    pub fn new(
        modules: Vec<HilbertModule>,
        differentials: Vec<EquivariantMap>,
        metrics: Option<Vec<EquivariantMap>>,
    ) -> Result<Self> {
        let backend = modules.first().ok_or_else(|| Error::Shape("complex with no modules".into()))?.backend.clone();
        if modules.iter().any(|m| !same_backend(&m.backend, &backend)) {
            return Err(Error::Backend("modules over different algebras".into()));
        }
        if differentials.len() + 1 != modules.len() {
            return Err(Error::Shape(format!("{} differentials for {} modules", differentials.len(), modules.len())));
        }
        for (i, d) in differentials.iter().enumerate() {
            if d.source != modules[i] || d.target != modules[i + 1] {
                return Err(Error::Shape(format!("d_{i} does not map C_{i} to C_{}", i + 1)));
            }
        }
        let metrics = match metrics {
            Some(g) => {
                if g.len() != modules.len() {
                    return Err(Error::Shape("one metric per degree required".into()));
                }
                for (i, gi) in g.iter().enumerate() {
                    if gi.source != modules[i] || gi.target != modules[i] {
                        return Err(Error::Shape(format!("metric {i} has the wrong module")));
                    }
                    gi.check_positive()?;
                }
                g
            }
            None => modules.iter().map(EquivariantMap::identity).collect(),
        };
        let cx = CochainComplex { backend, modules, differentials, metrics };
        for i in 0..cx.differentials.len().saturating_sub(1) {
            let r = cx.differentials[i + 1].compose(&cx.differentials[i])?.max_abs();
            let s = cx.differentials[i].max_abs().max(cx.differentials[i + 1].max_abs()).max(1.0);
            if r > SQUARE_TOL * s * s {
                return Err(Error::NotAComplex { degree: i, residual: r });
            }
        }
        Ok(cx)
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }
    pub fn len(&self) -> usize {
        self.modules.len()
    }
    pub fn is_empty(&self) -> bool {
        self.modules.is_empty()
    }
    pub fn module(&self, i: usize) -> &HilbertModule {
        &self.modules[i]
    }
    pub fn modules(&self) -> &[HilbertModule] {
        &self.modules
    }
    pub fn differential(&self, i: usize) -> &EquivariantMap {
        &self.differentials[i]
    }
    pub fn differentials(&self) -> &[EquivariantMap] {
        &self.differentials
    }
    pub fn metric(&self, i: usize) -> &EquivariantMap {
        &self.metrics[i]
    }
    pub fn metrics(&self) -> &[EquivariantMap] {
        &self.metrics
    }
    pub fn ranks(&self) -> Vec<usize> {
        self.modules.iter().map(|m| m.rank).collect()
    }
    pub fn scale(&self) -> f64 {
        1.0 / self.backend.order() as f64
    }

    /// Replace the metrics, keeping modules and differentials.
    pub fn with_metrics(&self, metrics: Vec<EquivariantMap>) -> Result<Self> {
        Self::new(self.modules.clone(), self.differentials.clone(), Some(metrics))
    }

    pub fn with_differentials(&self, differentials: Vec<EquivariantMap>) -> Result<Self> {
        Self::new(self.modules.clone(), differentials, Some(self.metrics.clone()))
    }

    /// `G_i^{1/2}` in expanded form.
    pub fn metric_sqrt(&self, i: usize) -> CMat {
        linalg::herm_fn(self.metrics[i].expand(), f64::sqrt)
    }
    pub fn metric_inv_sqrt(&self, i: usize) -> CMat {
        linalg::herm_fn(self.metrics[i].expand(), |x| 1.0 / x.sqrt())
    }

    /// The complex in orthonormal coordinates `G^{1/2}`.
    pub fn to_matrix(&self) -> MatrixComplex {
        let sq: Vec<CMat> = (0..self.len()).map(|i| self.metric_sqrt(i)).collect();
        let isq: Vec<CMat> = (0..self.len()).map(|i| self.metric_inv_sqrt(i)).collect();
        let maps = self.differentials.iter().enumerate().map(|(i, d)| &sq[i + 1] * d.expand() * &isq[i]).collect();
        let dims = self.modules.iter().map(|m| m.expanded_dim()).collect();
        MatrixComplex { dims, maps, scale: self.scale() }
    }

    /// Adjoint of `d_i` for the twisted inner products, `G_i^{-1} d_i^* G_{i+1}`.
    pub fn d_adjoint(&self, i: usize) -> Result<EquivariantMap> {
        let gi = self.metrics[i].inverse()?;
        gi.compose(&self.differentials[i].adjoint())?.compose(&self.metrics[i + 1])
    }

    /// `Delta_i = d_i^† d_i + d_{i-1} d_{i-1}^†`.
    pub fn laplacian(&self, i: usize) -> Result<EquivariantMap> {
        if i >= self.len() {
            return Err(Error::Parameter(format!("degree {i} out of range")));
        }
        let mut lap = EquivariantMap::zero(&self.modules[i], &self.modules[i]);
        if i + 1 < self.len() {
            lap = lap.add(&self.d_adjoint(i)?.compose(&self.differentials[i])?)?;
        }
        if i > 0 {
            lap = lap.add(&self.differentials[i - 1].compose(&self.d_adjoint(i - 1)?)?)?;
        }
        Ok(lap)
    }

    pub fn laplacian_spectrum(&self, i: usize) -> SpectralData {
        self.to_matrix().laplacian_spectrum(i)
    }

    /// Von Neumann dimensions of reduced cohomology.
    pub fn betti(&self) -> Vec<f64> {
        self.to_matrix().betti()
    }

    pub fn is_acyclic(&self) -> bool {
        self.betti().iter().all(|&b| b == 0.0)
    }

    pub fn hodge(&self) -> Result<HodgeDecomposition> {
        HodgeDecomposition::new(self)
    }

    pub fn torsion_report(&self) -> TorsionReport {
        self.to_matrix().torsion_report()
    }

    pub fn torsion(&self, mode: TorsionMode) -> Result<f64> {
        self.to_matrix().torsion(mode == TorsionMode::Strict)
    }

    /// `(Sigma C)_i = C_{i-1}`, `(Sigma d)_i = -d_{i-1}`, `(Sigma C)_0 = 0`.
    pub fn suspension(&self) -> Result<Self> {
        let zero = HilbertModule::new(&self.backend, 0);
        let mut modules = vec![zero.clone()];
        modules.extend(self.modules.iter().cloned());
        let mut diffs = vec![EquivariantMap::zero(&zero, &self.modules[0])];
        diffs.extend(self.differentials.iter().map(|d| d.scale(c(-1.0))));
        let mut metrics = vec![EquivariantMap::identity(&zero)];
        metrics.extend(self.metrics.iter().cloned());
        Self::new(modules, diffs, Some(metrics))
    }

    /// `C^#_j = C_{2N+1-j}` with the adjoint differentials, after padding so
    /// the top degree is odd.
    pub fn dual(&self) -> Result<Self> {
        let mut modules = self.modules.clone();
        let mut diffs = self.differentials.clone();
        let mut metrics = self.metrics.clone();
        if modules.len() % 2 == 1 {
            let zero = HilbertModule::new(&self.backend, 0);
            diffs.push(EquivariantMap::zero(modules.last().unwrap(), &zero));
            metrics.push(EquivariantMap::identity(&zero));
            modules.push(zero);
        }
        let padded = CochainComplex { backend: self.backend.clone(), modules, differentials: diffs, metrics };
        let top = padded.len() - 1;
        let modules = (0..=top).map(|j| padded.modules[top - j].clone()).collect();
        let metrics = (0..=top).map(|j| padded.metrics[top - j].clone()).collect();
        let diffs = (0..top).map(|j| padded.d_adjoint(top - 1 - j)).collect::<Result<Vec<_>>>()?;
        Self::new(modules, diffs, Some(metrics))
    }

    /// Replace each restricted differential `xi eta` by `xi (eta + eps)`.
    pub fn acyclic_deformation(&self, eps: f64) -> Result<Self> {
        if eps < 0.0 {
            return Err(Error::Parameter(format!("deformation parameter must be nonnegative, got {eps}")));
        }
        let mc = self.to_matrix();
        let norm = mc.norm();
        let mut diffs = Vec::with_capacity(self.differentials.len());
        for (i, d) in self.differentials.iter().enumerate() {
            let svd = linalg::thin_svd_against(&mc.maps[i], norm);
            let polar = &svd.u * svd.v.adjoint();
            let dt = &mc.maps[i] + polar * c(eps);
            let m = self.metric_inv_sqrt(i + 1) * dt * self.metric_sqrt(i);
            diffs.push(EquivariantMap::from_expanded(&d.source, &d.target, m)?);
        }
        self.with_differentials(diffs)
    }

    /// `sum (-1)^k logdet(Delta_k + Id)` and
    /// `sum (-1)^k logdet(Delta_k + (Id + Delta_k)^sigma)`.
    pub fn unit_shift_identity(&self, sigma: f64) -> Result<(f64, f64)> {
        if sigma >= 0.0 {
            return Err(Error::Parameter(format!("exponent must be negative, got {sigma}")));
        }
        let mc = self.to_matrix();
        let mut plain = 0.0;
        let mut powered = 0.0;
        for k in 0..self.len() {
            let spec = mc.laplacian_spectrum(k);
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            for &(l, m) in spec.pairs() {
                plain += sign * m * (1.0 + l).ln();
                powered += sign * m * (l + (1.0 + l).powf(sigma)).ln();
            }
        }
        Ok((plain, powered))
    }

    /// `sum_q int_{0+}^{1} log lambda dN_q(lambda)` over the Laplacians.
    pub fn det_class_value(&self) -> f64 {
        let mc = self.to_matrix();
        (0..self.len()).map(|q| mc.laplacian_spectrum(q).log_vol_below(1.0)).sum()
    }
}

/// Hodge decomposition `C_i = H_i + C_i^+ + C_i^-` with projectors in the
/// original coordinates and the restricted differentials in orthonormal bases.
#[derive(Debug, Clone)]
pub struct HodgeDecomposition {
    pub harmonic: Vec<EquivariantMap>,
    pub plus: Vec<EquivariantMap>,
    pub minus: Vec<EquivariantMap>,
    /// Orthonormal bases in the coordinates of [`CochainComplex::to_matrix`].
    pub bases: Vec<HodgeBases>,
    /// `d_i` restricted to `C_i^- -> C_{i+1}^+`.
    pub underlined: Vec<CMat>,
    /// Largest entry of `d_i` outside the `(C_{i+1}^+, C_i^-)` block.
    pub block_residual: f64,
}

impl HodgeDecomposition {
    fn new(cx: &CochainComplex) -> Result<Self> {
        let mc = cx.to_matrix();
        let bases = mc.hodge();
        let mut harmonic = Vec::new();
        let mut plus = Vec::new();
        let mut minus = Vec::new();
        for (i, b) in bases.iter().enumerate() {
            let sq = cx.metric_sqrt(i);
            let isq = cx.metric_inv_sqrt(i);
            let lift = |basis: &CMat| -> Result<EquivariantMap> {
                let p = &isq * (basis * basis.adjoint()) * &sq;
                EquivariantMap::from_expanded(cx.module(i), cx.module(i), p)
            };
            harmonic.push(lift(&b.harmonic)?);
            plus.push(lift(&b.plus)?);
            minus.push(lift(&b.minus)?);
        }
        let mut underlined = Vec::new();
        let mut block_residual = 0.0f64;
        for i in 0..mc.maps.len() {
            let (src, tgt) = (&bases[i], &bases[i + 1]);
            let full_src = linalg::hstack(&[&src.harmonic, &src.plus, &src.minus], mc.dims[i]);
            let full_tgt = linalg::hstack(&[&tgt.harmonic, &tgt.plus, &tgt.minus], mc.dims[i + 1]);
            let mut conj = full_tgt.adjoint() * &mc.maps[i] * &full_src;
            let (r0, r1) = (tgt.harmonic.ncols(), tgt.harmonic.ncols() + tgt.plus.ncols());
            let c0 = src.harmonic.ncols() + src.plus.ncols();
            let u = conj.view((r0, c0), (r1 - r0, src.minus.ncols())).into_owned();
            conj.view_mut((r0, c0), (r1 - r0, src.minus.ncols())).fill(c(0.0));
            block_residual = block_residual.max(max_abs(&conj));
            underlined.push(u);
        }
        Ok(HodgeDecomposition { harmonic, plus, minus, bases, underlined, block_residual })
    }

    /// `F_i` of the restricted differential, as the spectrum of
    /// `d_i^* d_i` on `C_i^-`.
    pub fn restricted_spectrum(&self, i: usize, scale: f64) -> SpectralData {
        let u = &self.underlined[i];
        linalg::psd_spectrum(&(u.adjoint() * u), scale)
    }
}
