//! Chain maps, mapping cones and the identities relating cone torsion to
//! torsion of the pieces.

use crate::complex::{CochainComplex, TorsionMode};
use crate::error::{Error, Result};
use crate::linalg::{self, c, max_abs, CMat, MatrixComplex};
use crate::vna::{EquivariantMap, HilbertModule};

const CHAIN_TOL: f64 = 1e-9;

/// Chain map `f: C^1 -> C^2`.
#[derive(Debug, Clone)]
pub struct Morphism {
    pub source: CochainComplex,
    pub target: CochainComplex,
    pub maps: Vec<EquivariantMap>,
}

/// Extend a complex by zero modules up to `len` degrees.
pub fn pad(cx: &CochainComplex, len: usize) -> Result<CochainComplex> {
    if cx.len() >= len {
        return Ok(cx.clone());
    }
    let b = cx.backend();
    let zero = HilbertModule::new(b, 0);
    let mut modules = cx.modules().to_vec();
    let mut diffs = cx.differentials().to_vec();
    let mut metrics = cx.metrics().to_vec();
    while modules.len() < len {
        diffs.push(EquivariantMap::zero(modules.last().unwrap(), &zero));
        metrics.push(EquivariantMap::identity(&zero));
        modules.push(zero.clone());
    }
    CochainComplex::new(modules, diffs, Some(metrics))
}

fn whiten(map: &EquivariantMap, src: &CochainComplex, tgt: &CochainComplex, i: usize) -> CMat {
    tgt.metric_sqrt(i) * map.expand() * src.metric_inv_sqrt(i)
}

impl Morphism {
    pub fn new(source: CochainComplex, target: CochainComplex, maps: Vec<EquivariantMap>) -> Result<Self> {
        let n = source.len().max(target.len());
        let source = pad(&source, n)?;
        let target = pad(&target, n)?;
        let mut maps = maps;
        if maps.len() > n {
            return Err(Error::Shape(format!("{} components for {n} degrees", maps.len())));
        }
        while maps.len() < n {
            let i = maps.len();
            maps.push(EquivariantMap::zero(source.module(i), target.module(i)));
        }
        for (i, f) in maps.iter().enumerate() {
            if f.source != *source.module(i) || f.target != *target.module(i) {
                return Err(Error::Shape(format!("component {i} has the wrong modules")));
            }
        }
        for i in 0..n - 1 {
            let lhs = target.differential(i).compose(&maps[i])?;
            let rhs = maps[i + 1].compose(source.differential(i))?;
            let r = lhs.distance(&rhs);
            let s = maps[i].max_abs().max(maps[i + 1].max_abs()).max(1.0)
                * source.differential(i).max_abs().max(target.differential(i).max_abs()).max(1.0);
            if r > CHAIN_TOL * s {
                return Err(Error::NotChainMap { degree: i, residual: r });
            }
        }
        Ok(Morphism { source, target, maps })
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }
    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn identity(cx: &CochainComplex) -> Result<Self> {
        let maps = cx.modules().iter().map(EquivariantMap::identity).collect();
        Self::new(cx.clone(), cx.clone(), maps)
    }

    pub fn neg(&self) -> Self {
        Morphism {
            source: self.source.clone(),
            target: self.target.clone(),
            maps: self.maps.iter().map(|f| f.scale(c(-1.0))).collect(),
        }
    }

    pub fn scale(&self, t: f64) -> Self {
        Morphism {
            source: self.source.clone(),
            target: self.target.clone(),
            maps: self.maps.iter().map(|f| f.scale(c(t))).collect(),
        }
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &Morphism) -> Result<Morphism> {
        if self.len() != other.len() {
            return Err(Error::Shape("composing chain maps of different lengths".into()));
        }
        for i in 0..self.target.len() {
            if self.target.module(i) != other.source.module(i) {
                return Err(Error::Shape(format!("degree {i}: target and source modules differ")));
            }
            if i + 1 < self.target.len() && self.target.differential(i).distance(other.source.differential(i)) > 1e-9 {
                return Err(Error::Shape(format!("degree {i}: intermediate differentials differ")));
            }
        }
        let maps = self.maps.iter().zip(&other.maps).map(|(f, g)| g.compose(f)).collect::<Result<Vec<_>>>()?;
        Morphism::new(self.source.clone(), other.target.clone(), maps)
    }

    /// Components in orthonormal coordinates.
    pub fn whitened(&self) -> Vec<CMat> {
        (0..self.len()).map(|i| whiten(&self.maps[i], &self.source, &self.target, i)).collect()
    }

    /// Adjoint of `f_i` for the twisted inner products.
    pub fn adjoint(&self, i: usize) -> Result<EquivariantMap> {
        self.source.metric(i).inverse()?.compose(&self.maps[i].adjoint())?.compose(self.target.metric(i))
    }

    /// Whether every component is an isometric isomorphism.
    pub fn isometry_residual(&self) -> f64 {
        self.whitened()
            .iter()
            .map(|w| {
                if w.nrows() != w.ncols() {
                    return f64::INFINITY;
                }
                let id = CMat::identity(w.nrows(), w.ncols());
                max_abs(&(w.adjoint() * w - &id)).max(max_abs(&(w * w.adjoint() - id)))
            })
            .fold(0.0, f64::max)
    }
}

/// `C(f)_i = C^2_{i-1} + C^1_i`, `d(f)_i = [[-d_{2,i-1}, f_i], [0, d_{1,i}]]`.
pub fn cone(f: &Morphism) -> Result<CochainComplex> {
    let n = f.len();
    let b = f.source.backend().clone();
    let zero = HilbertModule::new(&b, 0);
    let tm = |i: isize| if i >= 0 && (i as usize) < n { f.target.module(i as usize).clone() } else { zero.clone() };
    let sm = |i: isize| if i >= 0 && (i as usize) < n { f.source.module(i as usize).clone() } else { zero.clone() };
    let td = |i: isize| -> EquivariantMap {
        if i >= 0 && (i as usize) + 1 < n {
            f.target.differential(i as usize).scale(c(-1.0))
        } else {
            EquivariantMap::zero(&tm(i), &tm(i + 1))
        }
    };
    let sd = |i: isize| -> EquivariantMap {
        if i >= 0 && (i as usize) + 1 < n {
            f.source.differential(i as usize).clone()
        } else {
            EquivariantMap::zero(&sm(i), &sm(i + 1))
        }
    };
    let fm = |i: isize| -> EquivariantMap {
        if i >= 0 && (i as usize) < n { f.maps[i as usize].clone() } else { EquivariantMap::zero(&sm(i), &tm(i)) }
    };
    let metric = |cx: &CochainComplex, m: &HilbertModule, i: isize| {
        if i >= 0 && (i as usize) < n { cx.metric(i as usize).clone() } else { EquivariantMap::identity(m) }
    };
    let mut modules = Vec::with_capacity(n + 1);
    let mut metrics = Vec::with_capacity(n + 1);
    for i in 0..=n as isize {
        let (a, s) = (tm(i - 1), sm(i));
        modules.push(a.direct_sum(&s));
        let ga = metric(&f.target, &a, i - 1);
        let gs = metric(&f.source, &s, i);
        metrics.push(EquivariantMap::block(&[a.clone(), s.clone()], &[a, s], &[vec![Some(&ga), None], vec![None, Some(&gs)]])?);
    }
    let mut diffs = Vec::with_capacity(n);
    for i in 0..n as isize {
        let (dt, fi, ds) = (td(i - 1), fm(i), sd(i));
        diffs.push(EquivariantMap::block(
            &[tm(i), sm(i + 1)],
            &[tm(i - 1), sm(i)],
            &[vec![Some(&dt), Some(&fi)], vec![None, Some(&ds)]],
        )?);
    }
    CochainComplex::new(modules, diffs, Some(metrics))
}

/// Cone in orthonormal coordinates, built directly from the whitened pieces.
pub fn cone_matrix(f: &Morphism) -> Result<MatrixComplex> {
    MatrixComplex::cone(&f.source.to_matrix(), &f.target.to_matrix(), &f.whitened())
}

/// Torsion of the cone; the cone must be acyclic.
pub fn cone_torsion(f: &Morphism) -> Result<f64> {
    cone_matrix(f)?.torsion(true)
}

/// Block formula for the cone Laplacian in degree `i`, compared against the
/// Laplacian of the assembled cone. Returns the largest entry of the
/// difference.
pub fn cone_laplacian_check(f: &Morphism, i: usize) -> Result<f64> {
    let n = f.len();
    if i > n {
        return Err(Error::Parameter(format!("degree {i} out of range")));
    }
    let cf = cone(f)?;
    let direct = cf.laplacian(i)?;
    let b = f.source.backend().clone();
    let zero = HilbertModule::new(&b, 0);
    let ok = |j: isize| j >= 0 && (j as usize) < n;
    let tm = |j: isize| if ok(j) { f.target.module(j as usize).clone() } else { zero.clone() };
    let sm = |j: isize| if ok(j) { f.source.module(j as usize).clone() } else { zero.clone() };
    let z = |a: &HilbertModule, bb: &HilbertModule| EquivariantMap::zero(a, bb);
    // pieces with zero fallbacks
    let d2 = |j: isize| if ok(j) && ok(j + 1) { f.target.differential(j as usize).clone() } else { z(&tm(j), &tm(j + 1)) };
    let d1 = |j: isize| if ok(j) && ok(j + 1) { f.source.differential(j as usize).clone() } else { z(&sm(j), &sm(j + 1)) };
    let d2a = |j: isize| -> Result<EquivariantMap> {
        if ok(j) && ok(j + 1) { f.target.d_adjoint(j as usize) } else { Ok(z(&tm(j + 1), &tm(j))) }
    };
    let d1a = |j: isize| -> Result<EquivariantMap> {
        if ok(j) && ok(j + 1) { f.source.d_adjoint(j as usize) } else { Ok(z(&sm(j + 1), &sm(j))) }
    };
    let fm = |j: isize| if ok(j) { f.maps[j as usize].clone() } else { z(&sm(j), &tm(j)) };
    let fa = |j: isize| -> Result<EquivariantMap> { if ok(j) { f.adjoint(j as usize) } else { Ok(z(&tm(j), &sm(j))) } };
    let lap2 = |j: isize| -> Result<EquivariantMap> { if ok(j) { f.target.laplacian(j as usize) } else { Ok(z(&tm(j), &tm(j))) } };
    let lap1 = |j: isize| -> Result<EquivariantMap> { if ok(j) { f.source.laplacian(j as usize) } else { Ok(z(&sm(j), &sm(j))) } };
    let i = i as isize;
    let a11 = lap2(i - 1)?.add(&fm(i - 1).compose(&fa(i - 1)?)?)?;
    let a12 = d2a(i - 1)?.compose(&fm(i))?.scale(c(-1.0)).add(&fm(i - 1).compose(&d1a(i - 1)?)?)?;
    let a21 = fa(i)?.compose(&d2(i - 1))?.scale(c(-1.0)).add(&d1(i - 1).compose(&fa(i - 1)?)?)?;
    let a22 = lap1(i)?.add(&fa(i)?.compose(&fm(i))?)?;
    let formula = EquivariantMap::block(
        &[tm(i - 1), sm(i)],
        &[tm(i - 1), sm(i)],
        &[vec![Some(&a11), Some(&a12)], vec![Some(&a21), Some(&a22)]],
    )?;
    Ok(direct.distance(&formula))
}

/// `sum_j (-1)^j log vol f_j` for a chain isomorphism.
pub fn morphism_log_vol_sum(f: &Morphism) -> Result<f64> {
    let mut acc = 0.0;
    let scale = f.source.scale();
    for (j, w) in f.whitened().iter().enumerate() {
        if w.nrows() != w.ncols() {
            return Err(Error::Singular(format!("component {j} is not square")));
        }
        let spec = linalg::abs_spectrum(w, scale);
        if spec.kernel_dim() > 0.0 {
            return Err(Error::Singular(format!("component {j} has a kernel of dimension {}", spec.kernel_dim())));
        }
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * spec.log_vol();
    }
    Ok(acc)
}

/// `(T(C(f_2 ∘ f_1)), T(C(f_1)) + T(C(f_2)))`.
pub fn composition_rule(f1: &Morphism, f2: &Morphism) -> Result<(f64, f64)> {
    let comp = f1.then(f2)?;
    Ok((cone_torsion(&comp)?, cone_torsion(f1)? + cone_torsion(f2)?))
}

/// Composes `f` with an isometric isomorphism `w` on whichever side matches
/// and returns `(T(C(f)), T(C(composite)))`.
pub fn isometry_absorption(f: &Morphism, w: &Morphism) -> Result<(f64, f64)> {
    let r = w.isometry_residual();
    if r > 1e-10 {
        return Err(Error::Parameter(format!("not an isometry: residual {r:e}")));
    }
    let comp = w.then(f).or_else(|_| f.then(w))?;
    Ok((cone_torsion(f)?, cone_torsion(&comp)?))
}

/// `0 -> C^1 -> C -> C^3 -> 0` with `C_i = C^1_i + C^3_i` and
/// `d = [[d_1, f], [0, d_3]]`, where `f_i: C^3_i -> C^1_{i+1}` satisfies
/// `f_{i+1} d_{3,i} + d_{1,i+1} f_i = 0`.
#[derive(Debug, Clone)]
pub struct ShortExactSequence {
    pub sub: CochainComplex,
    pub quotient: CochainComplex,
    pub coupling: Vec<EquivariantMap>,
    /// Metrics on the middle complex; block diagonal when absent.
    pub middle_metrics: Option<Vec<EquivariantMap>>,
}

impl ShortExactSequence {
    pub fn new(
        sub: CochainComplex,
        quotient: CochainComplex,
        coupling: Vec<EquivariantMap>,
        middle_metrics: Option<Vec<EquivariantMap>>,
    ) -> Result<Self> {
        let n = sub.len().max(quotient.len());
        let sub = pad(&sub, n)?;
        let quotient = pad(&quotient, n)?;
        let mut coupling = coupling;
        while coupling.len() + 1 < n {
            let i = coupling.len();
            coupling.push(EquivariantMap::zero(quotient.module(i), sub.module(i + 1)));
        }
        if coupling.len() + 1 != n {
            return Err(Error::Shape("coupling has too many components".into()));
        }
        for (i, f) in coupling.iter().enumerate() {
            if f.source != *quotient.module(i) || f.target != *sub.module(i + 1) {
                return Err(Error::Shape(format!("coupling {i} must map C^3_{i} to C^1_{}", i + 1)));
            }
        }
        for i in 0..n.saturating_sub(2) {
            let lhs = coupling[i + 1].compose(quotient.differential(i))?;
            let rhs = sub.differential(i + 1).compose(&coupling[i])?;
            let r = lhs.add(&rhs)?.max_abs();
            let s = (coupling[i].max_abs() + coupling[i + 1].max_abs()).max(1.0)
                * (quotient.differential(i).max_abs() + sub.differential(i + 1).max_abs()).max(1.0);
            if r > CHAIN_TOL * s {
                return Err(Error::NotAComplex { degree: i, residual: r });
            }
        }
        let ses = ShortExactSequence { sub, quotient, coupling, middle_metrics };
        ses.middle()?;
        Ok(ses)
    }

    pub fn len(&self) -> usize {
        self.sub.len()
    }
    pub fn is_empty(&self) -> bool {
        self.sub.is_empty()
    }

    pub fn with_coupling_scaled(&self, t: f64) -> Result<Self> {
        let coupling = self.coupling.iter().map(|f| f.scale(c(t))).collect();
        Self::new(self.sub.clone(), self.quotient.clone(), coupling, self.middle_metrics.clone())
    }

    pub fn middle(&self) -> Result<CochainComplex> {
        let n = self.len();
        let mut modules = Vec::with_capacity(n);
        let mut diffs = Vec::with_capacity(n.saturating_sub(1));
        let mut block_metrics = Vec::with_capacity(n);
        for i in 0..n {
            let (a, b) = (self.sub.module(i).clone(), self.quotient.module(i).clone());
            modules.push(a.direct_sum(&b));
            block_metrics.push(EquivariantMap::block(
                &[a.clone(), b.clone()],
                &[a.clone(), b.clone()],
                &[vec![Some(self.sub.metric(i)), None], vec![None, Some(self.quotient.metric(i))]],
            )?);
            if i + 1 < n {
                let (a1, b1) = (self.sub.module(i + 1).clone(), self.quotient.module(i + 1).clone());
                diffs.push(EquivariantMap::block(
                    &[a1, b1],
                    &[a, b],
                    &[
                        vec![Some(self.sub.differential(i)), Some(&self.coupling[i])],
                        vec![None, Some(self.quotient.differential(i))],
                    ],
                )?);
            }
        }
        let metrics = self.middle_metrics.clone().unwrap_or(block_metrics);
        CochainComplex::new(modules, diffs, Some(metrics))
    }

    fn has_block_metric(&self) -> bool {
        match &self.middle_metrics {
            None => true,
            Some(g) => g.iter().enumerate().all(|(i, gi)| {
                let r1 = self.sub.module(i).rank;
                let r = gi.target.rank;
                gi.sub_block(0..r1, r1..r).max_abs() < 1e-12 && gi.sub_block(r1..r, 0..r1).max_abs() < 1e-12
            }),
        }
    }
}

/// Sides of the torsion identity for a short exact sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct MilnorReport {
    pub middle: f64,
    pub sub: f64,
    pub quotient: f64,
    /// Torsion of the long weakly exact cohomology sequence.
    pub homology: f64,
    /// `sum_i (-1)^i T(0 -> C^1_i -> C_i -> C^3_i -> 0)`.
    pub rows: f64,
}

impl MilnorReport {
    pub fn rhs(&self) -> f64 {
        self.sub + self.quotient + self.homology - self.rows
    }
    pub fn residual(&self) -> f64 {
        (self.middle - self.rhs()).abs()
    }
}

/// Long exact cohomology sequence of a short exact sequence in orthonormal
/// coordinates: degree `3i` is `H^i(C^1)`, `3i+1` is `H^i(C)`, `3i+2` is
/// `H^i(C^3)`, with the maps induced by inclusion, projection and the
/// connecting map, all on harmonic representatives.
pub fn cohomology_sequence(ses: &ShortExactSequence) -> Result<MatrixComplex> {
    let mid = ses.middle()?;
    let n = ses.len();
    let h1 = ses.sub.to_matrix().hodge();
    let hm = mid.to_matrix().hodge();
    let h3 = ses.quotient.to_matrix().hodge();
    let mut dims = Vec::with_capacity(3 * n);
    let mut maps = Vec::with_capacity(3 * n);
    for i in 0..n {
        let (r1, r3) = (ses.sub.module(i).rank, ses.quotient.module(i).rank);
        let k = ses.sub.backend().order();
        let incl = inclusion(r1 * k, r3 * k);
        let proj = incl_complement(r1 * k, r3 * k);
        // whitened inclusion and projection
        let wi = mid.metric_sqrt(i) * &incl * ses.sub.metric_inv_sqrt(i);
        let wp = ses.quotient.metric_sqrt(i) * &proj * mid.metric_inv_sqrt(i);
        dims.push(h1[i].harmonic.ncols());
        dims.push(hm[i].harmonic.ncols());
        dims.push(h3[i].harmonic.ncols());
        maps.push(hm[i].harmonic.adjoint() * wi * &h1[i].harmonic);
        maps.push(h3[i].harmonic.adjoint() * wp * &hm[i].harmonic);
        if i + 1 < n {
            let wf = ses.sub.metric_sqrt(i + 1) * ses.coupling[i].expand() * ses.quotient.metric_inv_sqrt(i);
            maps.push(h1[i + 1].harmonic.adjoint() * wf * &h3[i].harmonic);
        }
    }
    MatrixComplex::new(dims, maps, ses.sub.scale())
}

fn inclusion(a: usize, b: usize) -> CMat {
    let mut m = CMat::zeros(a + b, a);
    for i in 0..a {
        m[(i, i)] = c(1.0);
    }
    m
}

fn incl_complement(a: usize, b: usize) -> CMat {
    let mut m = CMat::zeros(b, a + b);
    for i in 0..b {
        m[(i, a + i)] = c(1.0);
    }
    m
}

/// The row `0 -> C^1_i -> C_i -> C^3_i -> 0` in orthonormal coordinates.
pub fn row_complex(ses: &ShortExactSequence, i: usize) -> Result<MatrixComplex> {
    let mid = ses.middle()?;
    let k = ses.sub.backend().order();
    let (r1, r3) = (ses.sub.module(i).rank * k, ses.quotient.module(i).rank * k);
    let wi = mid.metric_sqrt(i) * inclusion(r1, r3) * ses.sub.metric_inv_sqrt(i);
    let wp = ses.quotient.metric_sqrt(i) * incl_complement(r1, r3) * mid.metric_inv_sqrt(i);
    MatrixComplex::new(vec![r1, r1 + r3, r3], vec![wi, wp], ses.sub.scale())
}

pub fn milnor_identity(ses: &ShortExactSequence) -> Result<MilnorReport> {
    let mid = ses.middle()?;
    let h = cohomology_sequence(ses)?;
    let hb = h.betti();
    if hb.iter().any(|&b| b > 0.0) {
        return Err(Error::NotAcyclic(hb));
    }
    let mut rows = 0.0;
    for i in 0..ses.len() {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        rows += sign * row_complex(ses, i)?.torsion(true)?;
    }
    Ok(MilnorReport {
        middle: mid.torsion(TorsionMode::Lenient)?,
        sub: ses.sub.torsion(TorsionMode::Lenient)?,
        quotient: ses.quotient.torsion(TorsionMode::Lenient)?,
        homology: h.torsion(true)?,
        rows,
    })
}

/// `(T(C), T(C^1) + T(C^3))` for acyclic sub and quotient with orthogonal
/// splitting.
pub fn cmm_additivity(ses: &ShortExactSequence) -> Result<(f64, f64)> {
    if !ses.has_block_metric() {
        return Err(Error::Parameter("middle metric must split orthogonally".into()));
    }
    let t1 = ses.sub.torsion(TorsionMode::Strict)?;
    let t3 = ses.quotient.torsion(TorsionMode::Strict)?;
    Ok((ses.middle()?.torsion(TorsionMode::Strict)?, t1 + t3))
}

/// Diagnostics along `f(t) = t f` at one parameter value.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbePoint {
    pub t: f64,
    pub torsion: f64,
    /// Richardson-extrapolated central difference of `T(t)`.
    pub derivative: f64,
    /// Largest `(C^1-, C^2+)` block of the differentials.
    pub epsilon: f64,
    /// Largest deviation of the `(C^1-, C^2-)` block from
    /// `-d1^{-1} alpha d2`.
    pub gamma: f64,
    /// Largest `(C^2-, C^1+)` block of the pseudo-inverses.
    pub a41: f64,
    /// `sum (-1)^q Tr(D'_q D_q^{-1})`.
    pub trace_sum: f64,
}

fn torsion_at(ses: &ShortExactSequence, t: f64) -> Result<f64> {
    ses.with_coupling_scaled(t)?.middle()?.torsion(TorsionMode::Strict)
}

pub fn cmm_deformation_probe(ses: &ShortExactSequence, grid: &[f64]) -> Result<Vec<ProbePoint>> {
    const H: f64 = 1e-4;
    if !ses.has_block_metric() {
        return Err(Error::Parameter("middle metric must split orthogonally".into()));
    }
    ses.sub.torsion(TorsionMode::Strict)?;
    ses.quotient.torsion(TorsionMode::Strict)?;
    let n = ses.len();
    let m1 = ses.sub.to_matrix();
    let m3 = ses.quotient.to_matrix();
    let h1 = m1.hodge();
    let h3 = m3.hodge();
    // 4-way orthonormal bases [1+, 1-, 2+, 2-] in middle coordinates
    let four: Vec<[CMat; 4]> = (0..n)
        .map(|i| {
            let (a, b) = (m1.dims[i], m3.dims[i]);
            let up = |x: &CMat| {
                let mut m = CMat::zeros(a + b, x.ncols());
                m.view_mut((0, 0), (a, x.ncols())).copy_from(x);
                m
            };
            let down = |x: &CMat| {
                let mut m = CMat::zeros(a + b, x.ncols());
                m.view_mut((a, 0), (b, x.ncols())).copy_from(x);
                m
            };
            [up(&h1[i].plus), up(&h1[i].minus), down(&h3[i].plus), down(&h3[i].minus)]
        })
        .collect();
    let wf: Vec<CMat> = (0..n - 1)
        .map(|i| ses.sub.metric_sqrt(i + 1) * ses.coupling[i].expand() * ses.quotient.metric_inv_sqrt(i))
        .collect();
    let mut out = Vec::with_capacity(grid.len());
    for &t in grid {
        let mid = ses.with_coupling_scaled(t)?.middle()?.to_matrix();
        let torsion = mid.torsion(true)?;
        let fd = |h: f64| -> Result<f64> { Ok((torsion_at(ses, t + h)? - torsion_at(ses, t - h)?) / (2.0 * h)) };
        let derivative = (4.0 * fd(H / 2.0)? - fd(H)?) / 3.0;
        let (mut epsilon, mut gamma, mut a41, mut trace_sum) = (0.0f64, 0.0f64, 0.0f64, c(0.0));
        let blk = |m: &CMat, rows: &CMat, cols: &CMat| rows.adjoint() * m * cols;
        for q in 0..n - 1 {
            let d = &mid.maps[q];
            let (s, tg) = (&four[q], &four[q + 1]);
            epsilon = epsilon.max(max_abs(&blk(d, &tg[1], &s[2])));
            if q + 2 < n {
                let gam = blk(d, &tg[1], &s[3]);
                let d1next = blk(&mid.maps[q + 1], &four[q + 2][0], &tg[1]);
                let alpha_next = blk(&mid.maps[q + 1], &four[q + 2][0], &tg[2]);
                let d2 = blk(d, &tg[2], &s[3]);
                let pred = -(linalg::inverse(&d1next).unwrap_or_else(|_| linalg::pinv(&d1next)) * alpha_next * d2);
                gamma = gamma.max(max_abs(&(gam - pred)));
            } else {
                gamma = gamma.max(max_abs(&blk(d, &tg[1], &s[3])));
            }
            let pinv = linalg::pinv(d);
            a41 = a41.max(max_abs(&(s[3].adjoint() * &pinv * &tg[0])));
            let (a, b) = (m1.dims[q], m3.dims[q]);
            let (a1, b1) = (m1.dims[q + 1], m3.dims[q + 1]);
            let mut ddot = CMat::zeros(a1 + b1, a + b);
            ddot.view_mut((0, a), (a1, b)).copy_from(&wf[q]);
            let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
            trace_sum += (ddot * pinv).trace() * c(sign * mid.scale);
        }
        out.push(ProbePoint { t, torsion, derivative, epsilon, gamma, a41, trace_sum: trace_sum.norm() });
    }
    Ok(out)
}
