//! Dense complex linear algebra on expanded matrices, and complexes of
//! finite-dimensional inner product spaces written in orthonormal bases.

use faer::Side;
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::vna::{zero_tolerance, SpectralData};

pub type CMat = DMatrix<Complex64>;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn adjoint(m: &CMat) -> CMat {
    m.adjoint()
}

pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()) * c(0.5)
}

// Decompositions go through faer: nalgebra's complex SVD can return
// factors off by 1e-5 when singular values repeat, which group algebras
// with higher-dimensional irreducibles produce routinely.
fn to_faer(m: &CMat) -> faer::Mat<Complex64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, Complex64>) -> CMat {
    CMat::from_fn(m.nrows(), m.ncols(), |i, j| *m.get(i, j))
}

/// Eigenvalues ascending with matching eigenvector columns.
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (vec![], CMat::zeros(0, 0));
    }
    let eig = to_faer(&hermitize(m)).self_adjoint_eigen(Side::Lower).expect("Hermitian eigensolver converges");
    let vals = eig.S().column_vector().iter().map(|z| z.re).collect();
    (vals, from_faer(eig.U()))
}

/// Apply a real function to a Hermitian matrix.
pub fn herm_fn<F: Fn(f64) -> f64>(m: &CMat, f: F) -> CMat {
    let (vals, vecs) = eigh(m);
    let n = vals.len();
    let mut scaled = vecs.clone();
    for j in 0..n {
        let fj = c(f(vals[j]));
        for i in 0..n {
            scaled[(i, j)] *= fj;
        }
    }
    &scaled * vecs.adjoint()
}

pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return vec![];
    }
    to_faer(m).singular_values().expect("SVD converges")
}

/// Singular values padded with zeros to the source dimension.
pub fn source_singular_values(m: &CMat) -> Vec<f64> {
    let mut s = singular_values(m);
    s.resize(m.ncols(), 0.0);
    s
}

/// Spectrum of `|m|` with multiplicities scaled by `scale`.
pub fn abs_spectrum(m: &CMat, scale: f64) -> SpectralData {
    SpectralData::from_values(&source_singular_values(m), scale, m.nrows().max(m.ncols()))
}

/// Spectrum of `|m|`, with values below the zero threshold of `reference`
/// (a larger operator norm) counted as kernel.
pub fn abs_spectrum_against(m: &CMat, scale: f64, reference: f64) -> SpectralData {
    SpectralData::from_values_against(&source_singular_values(m), scale, m.nrows().max(m.ncols()), reference)
}

/// Spectrum of a nonnegative Hermitian matrix.
pub fn psd_spectrum(m: &CMat, scale: f64) -> SpectralData {
    let (vals, _) = eigh(m);
    SpectralData::from_values(&vals, scale, m.nrows())
}

pub fn inverse(m: &CMat) -> Result<CMat> {
    if m.nrows() != m.ncols() {
        return Err(Error::Shape(format!("inverse of {}x{} matrix", m.nrows(), m.ncols())));
    }
    if m.nrows() == 0 {
        return Ok(CMat::zeros(0, 0));
    }
    let s = singular_values(m);
    let max = s.iter().cloned().fold(0.0, f64::max);
    let min = s.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= zero_tolerance(m.nrows()) * max {
        return Err(Error::NotInvertible(format!("smallest singular value {min:e} of {max:e}")));
    }
    m.clone().try_inverse().ok_or_else(|| Error::NotInvertible("LU failed".into()))
}

/// Orthonormal bases of the range (`u`) and coimage (`v`) with the nonzero
/// singular values.
pub struct Svd {
    pub u: CMat,
    pub sigma: Vec<f64>,
    pub v: CMat,
}

pub fn thin_svd(m: &CMat) -> Svd {
    thin_svd_against(m, 0.0)
}

/// [`thin_svd`] with the zero threshold relative to `max(reference, |m|)`.
pub fn thin_svd_against(m: &CMat, reference: f64) -> Svd {
    let (r, cdim) = (m.nrows(), m.ncols());
    if r == 0 || cdim == 0 {
        return Svd { u: CMat::zeros(r, 0), sigma: vec![], v: CMat::zeros(cdim, 0) };
    }
    let svd = to_faer(m).thin_svd().expect("SVD converges");
    let s: Vec<f64> = svd.S().column_vector().iter().map(|z| z.re).collect();
    let max = s.iter().cloned().fold(reference, f64::max);
    let tol = zero_tolerance(r.max(cdim)) * max;
    // sorted nonincreasing, so the kept values form a prefix
    let k = s.iter().take_while(|&&x| x > tol).count();
    let u = from_faer(svd.U().get(.., ..k));
    let v = from_faer(svd.V().get(.., ..k));
    Svd { u, sigma: s[..k].to_vec(), v }
}

/// Moore-Penrose pseudo-inverse.
pub fn pinv(m: &CMat) -> CMat {
    let svd = thin_svd(m);
    let mut vs = svd.v.clone();
    for (j, s) in svd.sigma.iter().enumerate() {
        for i in 0..vs.nrows() {
            vs[(i, j)] /= c(*s);
        }
    }
    vs * svd.u.adjoint()
}

/// Orthonormal basis of the orthogonal complement of the span of `cols`
/// (assumed orthonormal) in `C^n`.
pub fn complement(cols: &CMat, n: usize) -> CMat {
    let p = CMat::identity(n, n) - cols * cols.adjoint();
    let (vals, vecs) = eigh(&p);
    let keep: Vec<usize> = (0..n).filter(|&i| vals[i] > 0.5).collect();
    let mut out = CMat::zeros(n, keep.len());
    for (j, &i) in keep.iter().enumerate() {
        out.set_column(j, &vecs.column(i));
    }
    out
}

pub fn hstack(blocks: &[&CMat], rows: usize) -> CMat {
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut off = 0;
    for b in blocks {
        out.view_mut((0, off), (rows, b.ncols())).copy_from(*b);
        off += b.ncols();
    }
    out
}

/// Assemble a block matrix; `None` blocks are zero.
pub fn block(rows: &[usize], cols: &[usize], blocks: &[Vec<Option<&CMat>>]) -> Result<CMat> {
    let (nr, nc) = (rows.iter().sum(), cols.iter().sum());
    let mut out = CMat::zeros(nr, nc);
    let mut ro = 0;
    for (bi, &r) in rows.iter().enumerate() {
        let mut co = 0;
        for (bj, &cc) in cols.iter().enumerate() {
            if let Some(b) = blocks[bi][bj] {
                if b.nrows() != r || b.ncols() != cc {
                    return Err(Error::Shape(format!(
                        "block ({bi},{bj}) is {}x{}, expected {r}x{cc}",
                        b.nrows(),
                        b.ncols()
                    )));
                }
                out.view_mut((ro, co), (r, cc)).copy_from(b);
            }
            co += cc;
        }
        ro += r;
    }
    Ok(out)
}

/// `sum log sigma` over nonzero singular values, times `scale`.
pub fn log_vol(m: &CMat, scale: f64) -> f64 {
    abs_spectrum(m, scale).log_vol()
}

/// The three torsion formulas for one complex, plus cohomology.
#[derive(Debug, Clone, PartialEq)]
pub struct TorsionReport {
    /// `1/2 sum (-1)^{q+1} q logdet' Delta_q`
    pub weighted: f64,
    /// `1/2 sum (-1)^q logdet d_q^* d_q` on the coimage
    pub via_minus: f64,
    /// `1/2 sum (-1)^{q+1} logdet d_{q-1} d_{q-1}^*` on the image
    pub via_plus: f64,
    pub betti: Vec<f64>,
}

impl TorsionReport {
    pub fn spread(&self) -> f64 {
        let v = [self.weighted, self.via_minus, self.via_plus];
        v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min)
    }
    pub fn is_acyclic(&self) -> bool {
        self.betti.iter().all(|&b| b == 0.0)
    }
}

/// A cochain complex `V_0 -> V_1 -> ... -> V_N` of inner product spaces in
/// orthonormal coordinates. Dimensions are reported in units of `scale`
/// (the reciprocal group order for expanded modules).
#[derive(Debug, Clone)]
pub struct MatrixComplex {
    pub dims: Vec<usize>,
    pub maps: Vec<CMat>,
    pub scale: f64,
}

/// Orthonormal Hodge bases of one degree: harmonic, image of the incoming
/// differential, coimage of the outgoing one.
#[derive(Debug, Clone)]
pub struct HodgeBases {
    pub harmonic: CMat,
    pub plus: CMat,
    pub minus: CMat,
}

impl MatrixComplex {
    pub fn new(dims: Vec<usize>, maps: Vec<CMat>, scale: f64) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Shape("complex with no degrees".into()));
        }
        if maps.len() + 1 != dims.len() {
            return Err(Error::Shape(format!("{} maps for {} degrees", maps.len(), dims.len())));
        }
        for (i, m) in maps.iter().enumerate() {
            if m.nrows() != dims[i + 1] || m.ncols() != dims[i] {
                return Err(Error::Shape(format!(
                    "d_{i} is {}x{}, expected {}x{}",
                    m.nrows(),
                    m.ncols(),
                    dims[i + 1],
                    dims[i]
                )));
            }
        }
        Ok(MatrixComplex { dims, maps, scale })
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }
    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    /// `d_i`, or a zero map when `i` is outside the complex.
    pub fn d(&self, i: isize) -> CMat {
        let n = self.dims.len() as isize;
        if i >= 0 && i + 1 < n {
            self.maps[i as usize].clone()
        } else {
            let rows = if i + 1 >= 0 && i + 1 < n { self.dims[(i + 1) as usize] } else { 0 };
            let cols = if i >= 0 && i < n { self.dims[i as usize] } else { 0 };
            CMat::zeros(rows, cols)
        }
    }

    pub fn square_residual(&self) -> Vec<f64> {
        (0..self.maps.len().saturating_sub(1)).map(|i| max_abs(&(&self.maps[i + 1] * &self.maps[i]))).collect()
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        for (i, r) in self.square_residual().into_iter().enumerate() {
            let scale = max_abs(&self.maps[i]).max(max_abs(&self.maps[i + 1])).max(1.0);
            if r > tol * scale * scale {
                return Err(Error::NotAComplex { degree: i, residual: r });
            }
        }
        Ok(())
    }

    pub fn laplacian(&self, q: usize) -> CMat {
        let q = q as isize;
        let out = self.d(q);
        let inc = self.d(q - 1);
        out.adjoint() * &out + &inc * inc.adjoint()
    }

    /// `[d_q; d_{q-1}^*]`, whose squared singular values are the spectrum of
    /// `Delta_q`.
    pub fn dirac(&self, q: usize) -> CMat {
        let q = q as isize;
        let out = self.d(q);
        let inc = self.d(q - 1).adjoint();
        let n = self.dims[q as usize];
        let mut m = CMat::zeros(out.nrows() + inc.nrows(), n);
        m.view_mut((0, 0), (out.nrows(), n)).copy_from(&out);
        m.view_mut((out.nrows(), 0), (inc.nrows(), n)).copy_from(&inc);
        m
    }

    /// Largest singular value over all differentials. Spectral values are
    /// counted as zero relative to this norm, so a differential that vanishes
    /// up to rounding is treated as zero by every torsion formula alike.
    pub fn norm(&self) -> f64 {
        self.maps.iter().map(|m| singular_values(m).first().copied().unwrap_or(0.0)).fold(0.0, f64::max)
    }

    pub fn laplacian_spectrum(&self, q: usize) -> SpectralData {
        self.laplacian_spectrum_against(q, self.norm())
    }

    fn laplacian_spectrum_against(&self, q: usize, norm: f64) -> SpectralData {
        abs_spectrum_against(&self.dirac(q), self.scale, norm).map_values(|x| x * x)
    }

    /// Spectrum of `d_q^* d_q`, from the singular values of `d_q`.
    pub fn minus_spectrum(&self, q: usize) -> SpectralData {
        self.minus_spectrum_against(q, self.norm())
    }

    fn minus_spectrum_against(&self, q: usize, norm: f64) -> SpectralData {
        abs_spectrum_against(&self.d(q as isize), self.scale, norm).map_values(|x| x * x)
    }

    /// Spectrum of `d_{q-1} d_{q-1}^*`, from the singular values of
    /// `d_{q-1}^*`.
    pub fn plus_spectrum(&self, q: usize) -> SpectralData {
        self.plus_spectrum_against(q, self.norm())
    }

    fn plus_spectrum_against(&self, q: usize, norm: f64) -> SpectralData {
        abs_spectrum_against(&self.d(q as isize - 1).adjoint(), self.scale, norm).map_values(|x| x * x)
    }

    pub fn betti(&self) -> Vec<f64> {
        let norm = self.norm();
        (0..self.len()).map(|q| self.laplacian_spectrum_against(q, norm).kernel_dim()).collect()
    }

    pub fn torsion_report(&self) -> TorsionReport {
        let mut weighted = 0.0;
        let mut via_minus = 0.0;
        let mut via_plus = 0.0;
        let mut betti = Vec::with_capacity(self.len());
        let norm = self.norm();
        for q in 0..self.len() {
            let lap = self.laplacian_spectrum_against(q, norm);
            betti.push(lap.kernel_dim());
            let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
            weighted += -sign * q as f64 * lap.log_vol();
            via_minus += sign * self.minus_spectrum_against(q, norm).log_vol();
            via_plus += -sign * self.plus_spectrum_against(q, norm).log_vol();
        }
        TorsionReport { weighted: 0.5 * weighted, via_minus: 0.5 * via_minus, via_plus: 0.5 * via_plus, betti }
    }

    /// Torsion; in strict mode the complex must be acyclic, otherwise the
    /// kernel is dropped from every determinant.
    pub fn torsion(&self, strict: bool) -> Result<f64> {
        let r = self.torsion_report();
        if strict && !r.is_acyclic() {
            return Err(Error::NotAcyclic(r.betti));
        }
        let scale = r.weighted.abs().max(1.0);
        if r.spread() > 1e-9 * scale {
            return Err(Error::Inconsistent(vec![r.weighted, r.via_minus, r.via_plus]));
        }
        Ok(r.weighted)
    }

    pub fn hodge(&self) -> Vec<HodgeBases> {
        let n = self.len();
        let norm = self.norm();
        let svds: Vec<Svd> = self.maps.iter().map(|m| thin_svd_against(m, norm)).collect();
        (0..n)
            .map(|q| {
                let plus = if q > 0 { svds[q - 1].u.clone() } else { CMat::zeros(self.dims[0], 0) };
                let minus = if q + 1 < n { svds[q].v.clone() } else { CMat::zeros(self.dims[q], 0) };
                let both = hstack(&[&plus, &minus], self.dims[q]);
                let harmonic = complement(&both, self.dims[q]);
                HodgeBases { harmonic, plus, minus }
            })
            .collect()
    }

    /// `Sigma C`: degrees shifted up by one, differentials negated.
    pub fn suspension(&self) -> MatrixComplex {
        let mut dims = vec![0];
        dims.extend_from_slice(&self.dims);
        let mut maps = vec![CMat::zeros(self.dims[0], 0)];
        maps.extend(self.maps.iter().map(|m| -m));
        MatrixComplex { dims, maps, scale: self.scale }
    }

    /// Dual complex with top index padded to be odd.
    pub fn dual(&self) -> MatrixComplex {
        let mut dims = self.dims.clone();
        let mut maps = self.maps.clone();
        if dims.len() % 2 == 1 {
            let last = *dims.last().unwrap();
            dims.push(0);
            maps.push(CMat::zeros(0, last));
        }
        let top = dims.len() - 1;
        let new_dims: Vec<usize> = (0..=top).map(|j| dims[top - j]).collect();
        let new_maps: Vec<CMat> = (0..top).map(|j| maps[top - 1 - j].adjoint()).collect();
        MatrixComplex { dims: new_dims, maps: new_maps, scale: self.scale }
    }

    /// Mapping cone of a chain map `f: src -> tgt`, with
    /// `C(f)_i = tgt_{i-1} + src_i` and `d = [[-d_tgt, f], [0, d_src]]`.
    pub fn cone(src: &MatrixComplex, tgt: &MatrixComplex, f: &[CMat]) -> Result<MatrixComplex> {
        let n = src.len().max(tgt.len());
        let sd = |i: isize| -> usize {
            if i >= 0 && (i as usize) < src.len() { src.dims[i as usize] } else { 0 }
        };
        let td = |i: isize| -> usize {
            if i >= 0 && (i as usize) < tgt.len() { tgt.dims[i as usize] } else { 0 }
        };
        let fm = |i: isize| -> CMat {
            if i >= 0 && (i as usize) < f.len() {
                f[i as usize].clone()
            } else {
                CMat::zeros(td(i), sd(i))
            }
        };
        for (i, fi) in f.iter().enumerate() {
            if fi.nrows() != td(i as isize) || fi.ncols() != sd(i as isize) {
                return Err(Error::Shape(format!("chain map component {i} has wrong shape")));
            }
        }
        let dims: Vec<usize> = (0..=n as isize).map(|i| td(i - 1) + sd(i)).collect();
        let mut maps = Vec::with_capacity(n);
        for i in 0..n as isize {
            let dt = -tgt.d(i - 1);
            let dt = resize(&dt, td(i), td(i - 1));
            let ds = resize(&src.d(i), sd(i + 1), sd(i));
            let fi = fm(i);
            let m = block(
                &[td(i), sd(i + 1)],
                &[td(i - 1), sd(i)],
                &[vec![Some(&dt), Some(&fi)], vec![None, Some(&ds)]],
            )?;
            maps.push(m);
        }
        MatrixComplex::new(dims, maps, src.scale)
    }

    /// Restrict to subspaces given by orthonormal bases, one per degree.
    /// The subspaces must form a subcomplex.
    pub fn restrict(&self, bases: &[CMat]) -> MatrixComplex {
        let dims = bases.iter().map(|b| b.ncols()).collect();
        let maps = (0..self.maps.len()).map(|i| bases[i + 1].adjoint() * &self.maps[i] * &bases[i]).collect();
        MatrixComplex { dims, maps, scale: self.scale }
    }
}

/// Zero-pad or view a matrix to a given shape (only used for the empty
/// boundary maps of a complex).
fn resize(m: &CMat, rows: usize, cols: usize) -> CMat {
    if m.nrows() == rows && m.ncols() == cols {
        m.clone()
    } else {
        CMat::zeros(rows, cols)
    }
}

/// Torsion of a chain map's cone, after checking the map commutes with the
/// differentials.
pub fn chain_map_residual(src: &MatrixComplex, tgt: &MatrixComplex, f: &[CMat]) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..src.len().min(tgt.len()).saturating_sub(1) {
        let lhs = &tgt.maps[i] * &f[i];
        let rhs = &f[i + 1] * &src.maps[i];
        out.push(max_abs(&(lhs - rhs)));
    }
    out
}
