//! Witten deformation `d_k(t) = e^{-t h_{k+1}} d_k e^{t h_k}`, the deformed
//! relative torsion `log R(t)` and its split into small and large spectral
//! parts.

use crate::complex::CochainComplex;
use crate::cone::{cone_torsion, Morphism};
use crate::error::{Error, Result};
use crate::linalg::{self, max_abs, CMat, MatrixComplex};
use crate::morse::MorseData;
use crate::vna::{EquivariantMap, HilbertModule};

/// Self-adjoint `h_k` in each degree, commuting with the algebra action.
#[derive(Debug, Clone)]
pub struct HeightOperator {
    pub h: Vec<EquivariantMap>,
}

impl HeightOperator {
    pub fn new(h: Vec<EquivariantMap>) -> Result<Self> {
        for (k, hk) in h.iter().enumerate() {
            if hk.source != hk.target {
                return Err(Error::Shape(format!("height in degree {k} is not an endomorphism")));
            }
            let r = hk.self_adjoint_residual();
            if r > 1e-12 * hk.max_abs().max(1.0) {
                return Err(Error::NotSelfAdjoint(r));
            }
            let r = hk.commutant_residual();
            if r > 1e-12 * hk.max_abs().max(1.0) {
                return Err(Error::Parameter(format!("height in degree {k} does not commute with the action ({r:e})")));
            }
        }
        Ok(HeightOperator { h })
    }

    /// Per-cell heights, one list per degree; each cell spans `rank`
    /// consecutive summands.
    pub fn from_cell_heights(modules: &[HilbertModule], heights: &[Vec<f64>], rank: usize) -> Result<Self> {
        if modules.len() != heights.len() {
            return Err(Error::Shape(format!("{} height lists for {} degrees", heights.len(), modules.len())));
        }
        let h = modules
            .iter()
            .zip(heights)
            .map(|(m, hs)| {
                let vals: Vec<f64> = hs.iter().flat_map(|&x| std::iter::repeat(x).take(rank)).collect();
                EquivariantMap::diagonal(m, &vals)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(h)
    }

    /// `h(x) = index(x)` plus an optional per-cell offset.
    pub fn self_indexing(m: &MorseData, modules: &[HilbertModule], rank: usize, offset: impl Fn(&str) -> f64) -> Result<Self> {
        let heights: Vec<Vec<f64>> =
            m.cells.iter().enumerate().map(|(q, v)| v.iter().map(|x| q as f64 + offset(x)).collect()).collect();
        Self::from_cell_heights(modules, &heights, rank)
    }

    pub fn zero(modules: &[HilbertModule]) -> Self {
        HeightOperator { h: modules.iter().map(|m| EquivariantMap::zero(m, m)).collect() }
    }

    fn check(&self, cx: &CochainComplex) -> Result<()> {
        if self.h.len() != cx.len() || self.h.iter().zip(cx.modules()).any(|(h, m)| h.source != *m) {
            return Err(Error::Shape("height operator does not match the complex".into()));
        }
        Ok(())
    }

    pub fn exp(&self, k: usize, t: f64) -> Result<EquivariantMap> {
        self.h[k].hermitian_fn(|x| (t * x).exp())
    }

    /// `sum_k (-1)^k Tr_N h_k`.
    pub fn alternating_trace(&self) -> Result<f64> {
        let mut s = 0.0;
        for (k, hk) in self.h.iter().enumerate() {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            s += sign * hk.vn_trace()?.re;
        }
        Ok(s)
    }
}

/// The deformed complex; metrics are unchanged.
pub fn deform(cx: &CochainComplex, h: &HeightOperator, t: f64) -> Result<CochainComplex> {
    h.check(cx)?;
    let diffs = (0..cx.len().saturating_sub(1))
        .map(|k| h.exp(k + 1, -t)?.compose(cx.differential(k))?.compose(&h.exp(k, t)?))
        .collect::<Result<Vec<_>>>()?;
    cx.with_differentials(diffs)
}

/// Laplacian of the deformed complex against `e^{-th} Delta' e^{th}`, where
/// `Delta'` is the Laplacian of the undeformed differential with metric
/// `e^{-th} G e^{-th}`. Returns the largest entry of the difference over all
/// degrees.
pub fn conjugation_residual(cx: &CochainComplex, h: &HeightOperator, t: f64) -> Result<f64> {
    let deformed = deform(cx, h, t)?;
    let metrics = (0..cx.len())
        .map(|k| {
            let e = h.exp(k, -t)?;
            e.compose(cx.metric(k))?.compose(&e)
        })
        .collect::<Result<Vec<_>>>()?;
    let rescaled = cx.with_metrics(metrics)?;
    let mut worst = 0.0f64;
    for k in 0..cx.len() {
        let lhs = deformed.laplacian(k)?;
        let rhs = h.exp(k, -t)?.compose(&rescaled.laplacian(k)?)?.compose(&h.exp(k, t)?)?;
        worst = worst.max(lhs.distance(&rhs) / lhs.max_abs().max(1.0));
    }
    Ok(worst)
}

/// `g(t) = Int ∘ e^{th}: (Omega, d(t)) -> C`, with `h` acting on the source.
pub fn deformed_morphism(int: &Morphism, h: &HeightOperator, t: f64) -> Result<Morphism> {
    let src = deform(&int.source, h, t)?;
    let maps = (0..int.len()).map(|k| int.maps[k].compose(&h.exp(k, t)?)).collect::<Result<Vec<_>>>()?;
    Morphism::new(src, int.target.clone(), maps)
}

/// `log R(t) = log T(C(Int ∘ e^{th}))`.
pub fn deformed_relative_torsion(int: &Morphism, h: &HeightOperator, t: f64) -> Result<f64> {
    cone_torsion(&deformed_morphism(int, h, t)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffineReport {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Least-squares slope over the grid.
    pub slope: f64,
    pub intercept: f64,
    /// `sum_k (-1)^k Tr_N h_k`.
    pub expected_slope: f64,
    /// Largest `|f(t_{i-1}) - 2 f(t_i) + f(t_{i+1})|`, generalized to uneven
    /// spacing as twice the deviation from linear interpolation.
    pub max_second_difference: f64,
}

impl AffineReport {
    /// `log R(t) - (intercept + expected_slope t)` at each grid point.
    pub fn slope_residuals(&self) -> Vec<f64> {
        self.grid.iter().zip(&self.values).map(|(t, v)| v - self.values[0] - self.expected_slope * (t - self.grid[0])).collect()
    }
}

pub fn affine_check(int: &Morphism, h: &HeightOperator, grid: &[f64]) -> Result<AffineReport> {
    if grid.len() < 4 {
        return Err(Error::Parameter(format!("affine check needs at least 4 grid points, got {}", grid.len())));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Parameter("grid must be strictly increasing".into()));
    }
    let values = grid.iter().map(|&t| deformed_relative_torsion(int, h, t)).collect::<Result<Vec<_>>>()?;
    let (slope, intercept) = least_squares(grid, &values);
    let max_second_difference = second_differences(grid, &values).into_iter().fold(0.0, f64::max);
    Ok(AffineReport { grid: grid.to_vec(), values, slope, intercept, expected_slope: h.alternating_trace()?, max_second_difference })
}

pub fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

pub fn second_differences(x: &[f64], y: &[f64]) -> Vec<f64> {
    (1..x.len().saturating_sub(1))
        .map(|i| {
            let (a, b) = (x[i] - x[i - 1], x[i + 1] - x[i]);
            let interp = (b * y[i - 1] + a * y[i + 1]) / (a + b);
            2.0 * (interp - y[i]).abs()
        })
        .collect()
}

/// Splitting of a complex by the spectral projectors of its Laplacians onto
/// `[0, threshold]`, in the orthonormal coordinates of
/// [`CochainComplex::to_matrix`].
#[derive(Debug, Clone)]
pub struct SpectralSplit {
    pub threshold: f64,
    /// Whether the threshold moved away from 1.
    pub relocated: bool,
    pub small: Vec<CMat>,
    pub large: Vec<CMat>,
    /// `max_k |Q_{k+1} d_k - d_k Q_k|`.
    pub commutation_residual: f64,
    /// `max_k |Q_k Delta_k - Delta_k Q_k|`.
    pub laplacian_residual: f64,
    pub scale: f64,
}

impl SpectralSplit {
    /// Von Neumann dimension of the small part in each degree.
    pub fn small_dims(&self) -> Vec<f64> {
        self.small.iter().map(|b| b.ncols() as f64 * self.scale).collect()
    }
}

/// Eigenvalues within this distance of the threshold force a relocation.
const GAP_MARGIN: f64 = 1e-6;

pub fn spectral_split(cx: &CochainComplex) -> Result<SpectralSplit> {
    let mc = cx.to_matrix();
    let eig: Vec<(Vec<f64>, CMat)> = (0..mc.len()).map(|q| linalg::eigh(&mc.laplacian(q))).collect();
    let all: Vec<f64> = eig.iter().flat_map(|e| e.0.iter().copied()).collect();
    let mut threshold = 1.0;
    let mut relocated = false;
    if all.iter().any(|l| (l - 1.0).abs() < GAP_MARGIN) {
        let mut pts: Vec<f64> = all.iter().copied().filter(|l| (0.5..=2.0).contains(l)).collect();
        pts.extend([0.5, 2.0]);
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let (lo, hi) = pts.windows(2).map(|w| (w[0], w[1])).max_by(|a, b| (a.1 - a.0).partial_cmp(&(b.1 - b.0)).unwrap()).unwrap();
        if hi - lo <= 2.0 * GAP_MARGIN {
            return Err(Error::NoGap);
        }
        threshold = 0.5 * (lo + hi);
        relocated = true;
    }
    let mut small = Vec::new();
    let mut large = Vec::new();
    for (vals, vecs) in &eig {
        let s: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] <= threshold).collect();
        let l: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > threshold).collect();
        small.push(vecs.select_columns(&s));
        large.push(vecs.select_columns(&l));
    }
    let proj: Vec<CMat> = small.iter().map(|b| b * b.adjoint()).collect();
    let mut commutation_residual = 0.0f64;
    for (k, d) in mc.maps.iter().enumerate() {
        commutation_residual = commutation_residual.max(max_abs(&(&proj[k + 1] * d - d * &proj[k])));
    }
    let mut laplacian_residual = 0.0f64;
    for (k, p) in proj.iter().enumerate() {
        let lap = mc.laplacian(k);
        laplacian_residual = laplacian_residual.max(max_abs(&(p * &lap - &lap * p)));
    }
    Ok(SpectralSplit { threshold, relocated, small, large, commutation_residual, laplacian_residual, scale: mc.scale })
}

#[derive(Debug, Clone)]
pub struct SplitReport {
    pub t: f64,
    pub total: f64,
    pub sm: f64,
    pub la: f64,
    pub split: SpectralSplit,
    /// Reduced cohomology of the large subcomplex.
    pub large_betti: Vec<f64>,
}

impl SplitReport {
    pub fn residual(&self) -> f64 {
        (self.total - self.sm - self.la).abs()
    }
}

/// `log R(t)`, the cone torsion of `g(t)` restricted to the small part, and
/// the torsion of the large part.
pub fn split_additivity(int: &Morphism, h: &HeightOperator, t: f64) -> Result<SplitReport> {
    let g = deformed_morphism(int, h, t)?;
    let total = cone_torsion(&g)?;
    let split = spectral_split(&g.source)?;
    let src = g.source.to_matrix();
    let tgt = g.target.to_matrix();
    let gw = g.whitened();
    let small_cx = src.restrict(&split.small);
    let f_small: Vec<CMat> = gw.iter().zip(&split.small).map(|(f, s)| f * s).collect();
    let sm = MatrixComplex::cone(&small_cx, &tgt, &f_small)?.torsion(true)?;
    let large_cx = src.restrict(&split.large);
    let large_betti = large_cx.betti();
    let la = large_cx.torsion(true)?;
    Ok(SplitReport { t, total, sm, la, split, large_betti })
}

/// `log T(C(S(t)))` for the scaling morphism `S_k(t) = e^{-tk} (pi/t)^{n/4 - k/2}`
/// on a complex with `m_k` cells of fiber rank `rank` in degree `k`, and the
/// expansion that the cone torsion of `Int ∘ e^{th}` approaches for large `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    /// `sum_k (-1)^k log S_k(t) m_k rank`.
    pub cone_sum: f64,
    /// `t`- and `log(pi/t)`-coefficients of `cone_sum`, collected term by term.
    pub cone_t_coefficient: f64,
    pub cone_log_coefficient: f64,
    /// `rank (sum_j (-1)^j j m_j)`.
    pub t_coefficient: f64,
    /// `-rank (sum_j (-1)^j (n/4 - j/2) m_j)`.
    pub log_coefficient: f64,
    /// `t_coefficient t + log_coefficient log(pi/t)`.
    pub expansion: f64,
}

impl ScalingReport {
    /// The expansion equals `-cone_sum` coefficient by coefficient.
    pub fn coefficients_match(&self) -> bool {
        self.t_coefficient == -self.cone_t_coefficient && self.log_coefficient == -self.cone_log_coefficient
    }
}

pub fn scaling_torsion(m: &[usize], rank: usize, n: usize, t: f64) -> Result<ScalingReport> {
    if !(t > 0.0) {
        return Err(Error::Parameter(format!("scaling torsion needs t > 0, got {t}")));
    }
    let r = rank as f64;
    let lp = (std::f64::consts::PI / t).ln();
    let mut cone_sum = 0.0;
    let mut ct = 0.0;
    let mut cl = 0.0;
    let mut tc = 0.0;
    let mut lc = 0.0;
    for (k, &mk) in m.iter().enumerate() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let (kf, mf) = (k as f64, mk as f64);
        let expo = n as f64 / 4.0 - kf / 2.0;
        let log_s = -t * kf + expo * lp;
        cone_sum += sign * log_s * mf * r;
        ct += sign * (-kf) * mf * r;
        cl += sign * expo * mf * r;
        tc += sign * kf * mf;
        lc += sign * expo * mf;
    }
    let t_coefficient = r * tc;
    let log_coefficient = -r * lc + 0.0;
    Ok(ScalingReport {
        cone_sum,
        cone_t_coefficient: ct,
        cone_log_coefficient: cl,
        t_coefficient,
        log_coefficient,
        expansion: t_coefficient * t + log_coefficient * lp,
    })
}

/// `S(t)`: `(C, alpha d) -> (C, d)` with `alpha = e^t (pi/t)^{1/2}`, acting by
/// the scalar `S_k(t)` in degree `k`.
pub fn scaling_morphism(cx: &CochainComplex, n: usize, t: f64) -> Result<Morphism> {
    if !(t > 0.0) {
        return Err(Error::Parameter(format!("scaling morphism needs t > 0, got {t}")));
    }
    let lp = (std::f64::consts::PI / t).ln();
    let alpha = (t + 0.5 * lp).exp();
    let scaled = cx.with_differentials(cx.differentials().iter().map(|d| d.scale(linalg::c(alpha))).collect())?;
    let maps = (0..cx.len())
        .map(|k| {
            let s = (-t * k as f64 + (n as f64 / 4.0 - k as f64 / 2.0) * lp).exp();
            EquivariantMap::scalar(cx.module(k), linalg::c(s))
        })
        .collect();
    Morphism::new(scaled, cx.clone(), maps)
}
