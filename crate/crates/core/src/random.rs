//! Seeded generators for test instances: algebra elements, well-conditioned
//! maps, complexes assembled in Hodge block form, chain maps and short exact
//! sequences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::complex::CochainComplex;
use crate::cone::{Morphism, ShortExactSequence};
use crate::error::Result;
use crate::linalg::{self, c, CMat};
use crate::vna::{AlgebraElement, Backend, EquivariantMap, HilbertModule};
use num_complex::Complex64;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Condition number cap for the restricted differentials.
pub const MAX_CONDITION: f64 = 1e3;

fn coeff(rng: &mut TestRng) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn element(rng: &mut TestRng, backend: &Backend) -> AlgebraElement {
    AlgebraElement { coeffs: (0..backend.order()).map(|_| coeff(rng)).collect() }
}

pub fn map(rng: &mut TestRng, src: &HilbertModule, tgt: &HilbertModule) -> EquivariantMap {
    let entries: Vec<Vec<AlgebraElement>> =
        (0..tgt.rank).map(|_| (0..src.rank).map(|_| element(rng, &src.backend)).collect()).collect();
    EquivariantMap::from_entries(src, tgt, &entries).expect("shapes match")
}

pub fn condition(m: &CMat) -> f64 {
    let s = linalg::singular_values(m);
    if s.is_empty() {
        return 1.0;
    }
    let max = s.iter().cloned().fold(0.0, f64::max);
    let min = s.iter().cloned().fold(f64::INFINITY, f64::min);
    max / min
}

/// Invertible map with condition number at most `max_cond`.
pub fn invertible(rng: &mut TestRng, m: &HilbertModule, max_cond: f64) -> EquivariantMap {
    if m.rank == 0 {
        return EquivariantMap::identity(m);
    }
    let mut shift = 1.0;
    loop {
        let a = map(rng, m, m).add(&EquivariantMap::scalar(m, c(shift))).unwrap();
        if condition(a.expand()) <= max_cond {
            return a;
        }
        shift *= 1.25;
    }
}

pub fn unitary(rng: &mut TestRng, m: &HilbertModule) -> EquivariantMap {
    let a = invertible(rng, m, 1e3);
    let ata = a.adjoint().compose(&a).unwrap();
    let root = ata.hermitian_fn(|x| 1.0 / x.sqrt()).unwrap();
    a.compose(&root).unwrap()
}

/// Positive metric with spectrum inside `[1 - spread, 1 + spread]`.
pub fn metric(rng: &mut TestRng, m: &HilbertModule, spread: f64) -> EquivariantMap {
    if m.rank == 0 {
        return EquivariantMap::identity(m);
    }
    let r = map(rng, m, m);
    let h = r.add(&r.adjoint()).unwrap();
    let norm = linalg::singular_values(h.expand()).into_iter().fold(0.0, f64::max).max(1e-12);
    EquivariantMap::identity(m).add(&h.scale(c(spread / norm))).unwrap()
}

/// Complex built in block form `C_i = H_i + C_i^+ + C_i^-` and then moved by
/// a change of basis `U_i`.
#[derive(Debug, Clone)]
pub struct RandomComplex {
    pub complex: CochainComplex,
    /// Basis change taking the block form to `complex`.
    pub basis: Vec<EquivariantMap>,
    pub harmonic: Vec<usize>,
    pub underlined: Vec<usize>,
}

impl RandomComplex {
    /// Inclusion of the block-form harmonic summand of degree `i`.
    pub fn harmonic_inclusion(&self, i: usize) -> EquivariantMap {
        let m = self.complex.module(i);
        let h = HilbertModule::new(&m.backend, self.harmonic[i]);
        let rest = HilbertModule::new(&m.backend, m.rank - self.harmonic[i]);
        let id = EquivariantMap::identity(&h);
        let inc = EquivariantMap::block(&[h.clone(), rest], &[h], &[vec![Some(&id)], vec![None]]).unwrap();
        self.basis[i].compose(&inc).unwrap()
    }

    /// Projection onto the block-form harmonic summand of degree `i`.
    pub fn harmonic_projection(&self, i: usize) -> EquivariantMap {
        let m = self.complex.module(i);
        let h = HilbertModule::new(&m.backend, self.harmonic[i]);
        let rest = HilbertModule::new(&m.backend, m.rank - self.harmonic[i]);
        let id = EquivariantMap::identity(&h);
        let proj = EquivariantMap::block(&[h.clone()], &[h, rest], &[vec![Some(&id), None]]).unwrap();
        proj.compose(&self.basis[i].inverse().unwrap()).unwrap()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ComplexOptions {
    /// Condition cap of the basis change.
    pub basis_condition: f64,
    /// Metric spread; zero for the standard metric.
    pub metric_spread: f64,
}

impl Default for ComplexOptions {
    fn default() -> Self {
        ComplexOptions { basis_condition: 8.0, metric_spread: 0.5 }
    }
}

/// `harmonic[i]` is the rank of `H_i`, `underlined[i]` the rank of the
/// invertible block `C_i^- -> C_{i+1}^+` (`underlined.len() + 1 == harmonic.len()`).
pub fn complex_with_shape(
    rng: &mut TestRng,
    backend: &Backend,
    harmonic: &[usize],
    underlined: &[usize],
    opts: ComplexOptions,
) -> Result<RandomComplex> {
    let n = harmonic.len();
    assert_eq!(underlined.len() + 1, n, "shape lengths");
    let a = |i: isize| if i >= 0 && (i as usize) < underlined.len() { underlined[i as usize] } else { 0 };
    let modules: Vec<HilbertModule> =
        (0..n).map(|i| HilbertModule::new(backend, harmonic[i] + a(i as isize - 1) + a(i as isize))).collect();
    let basis: Vec<EquivariantMap> = modules.iter().map(|m| invertible(rng, m, opts.basis_condition)).collect();
    let mut diffs = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        let dm = HilbertModule::new(backend, a(i as isize));
        let blockd = invertible(rng, &dm, MAX_CONDITION);
        let (h0, p0, m0) = (harmonic[i], a(i as isize - 1), a(i as isize));
        let (h1, p1, m1) = (harmonic[i + 1], a(i as isize), a(i as isize + 1));
        let sm = |r| HilbertModule::new(backend, r);
        let raw = EquivariantMap::block(
            &[sm(h1), sm(p1), sm(m1)],
            &[sm(h0), sm(p0), sm(m0)],
            &[vec![None, None, None], vec![None, None, Some(&blockd)], vec![None, None, None]],
        )?;
        diffs.push(basis[i + 1].compose(&raw)?.compose(&basis[i].inverse()?)?);
    }
    let metrics = if opts.metric_spread > 0.0 {
        Some(modules.iter().map(|m| metric(rng, m, opts.metric_spread)).collect())
    } else {
        None
    };
    let complex = CochainComplex::new(modules, diffs, metrics)?;
    Ok(RandomComplex { complex, basis, harmonic: harmonic.to_vec(), underlined: underlined.to_vec() })
}

/// Random acyclic complex with `len` degrees and module ranks at most
/// `max_rank`.
pub fn acyclic_complex(rng: &mut TestRng, backend: &Backend, len: usize, max_rank: usize) -> Result<RandomComplex> {
    let n = len.max(2);
    let mut under = vec![0; n - 1];
    for i in 0..n - 1 {
        let prev = if i > 0 { under[i - 1] } else { 0 };
        let room = max_rank.saturating_sub(prev);
        under[i] = if room == 0 { 0 } else { rng.gen_range(1..=room) };
    }
    complex_with_shape(rng, backend, &vec![0; n], &under, ComplexOptions::default())
}

/// Random complex whose cohomology has the given ranks.
pub fn complex_with_cohomology(
    rng: &mut TestRng,
    backend: &Backend,
    harmonic: &[usize],
    max_under: usize,
) -> Result<RandomComplex> {
    let under: Vec<usize> = (0..harmonic.len() - 1).map(|_| rng.gen_range(1..=max_under.max(1))).collect();
    complex_with_shape(rng, backend, harmonic, &under, ComplexOptions::default())
}

/// Chain isomorphism onto a new complex `(f d f^{-1})` with a fresh metric.
pub fn isomorphism(rng: &mut TestRng, source: &CochainComplex) -> Result<Morphism> {
    let maps: Vec<EquivariantMap> = source.modules().iter().map(|m| invertible(rng, m, 20.0)).collect();
    let diffs = (0..source.len() - 1)
        .map(|i| maps[i + 1].compose(source.differential(i))?.compose(&maps[i].inverse()?))
        .collect::<Result<Vec<_>>>()?;
    let metrics = source.modules().iter().map(|m| metric(rng, m, 0.5)).collect();
    let target = CochainComplex::new(source.modules().to_vec(), diffs, Some(metrics))?;
    Morphism::new(source.clone(), target, maps)
}

/// Isometric chain isomorphism onto a new complex.
pub fn isometry(rng: &mut TestRng, source: &CochainComplex) -> Result<Morphism> {
    let metrics: Vec<EquivariantMap> = source.modules().iter().map(|m| metric(rng, m, 0.5)).collect();
    let mut maps = Vec::with_capacity(source.len());
    for i in 0..source.len() {
        let m = source.module(i);
        let w = unitary(rng, m);
        let tgt_isq = metrics[i].hermitian_fn(|x| 1.0 / x.sqrt())?;
        let src_sq = source.metric(i).hermitian_fn(f64::sqrt)?;
        maps.push(tgt_isq.compose(&w)?.compose(&src_sq)?);
    }
    let diffs = (0..source.len() - 1)
        .map(|i| maps[i + 1].compose(source.differential(i))?.compose(&maps[i].inverse()?))
        .collect::<Result<Vec<_>>>()?;
    let target = CochainComplex::new(source.modules().to_vec(), diffs, Some(metrics))?;
    Morphism::new(source.clone(), target, maps)
}

pub fn direct_sum(a: &CochainComplex, b: &CochainComplex) -> Result<CochainComplex> {
    let n = a.len().max(b.len());
    let a = crate::cone::pad(a, n)?;
    let b = crate::cone::pad(b, n)?;
    let modules: Vec<HilbertModule> = (0..n).map(|i| a.module(i).direct_sum(b.module(i))).collect();
    let diag = |x: &EquivariantMap, y: &EquivariantMap| {
        EquivariantMap::block(
            &[x.target.clone(), y.target.clone()],
            &[x.source.clone(), y.source.clone()],
            &[vec![Some(x), None], vec![None, Some(y)]],
        )
    };
    let diffs = (0..n - 1).map(|i| diag(a.differential(i), b.differential(i))).collect::<Result<Vec<_>>>()?;
    let metrics = (0..n).map(|i| diag(a.metric(i), b.metric(i))).collect::<Result<Vec<_>>>()?;
    CochainComplex::new(modules, diffs, Some(metrics))
}

/// `d s + s d` for a random degree `-1` map `s`, between complexes `src` and
/// `tgt` (same length).
fn null_homotopic(
    rng: &mut TestRng,
    src: &CochainComplex,
    tgt: &CochainComplex,
    size: f64,
) -> Result<Vec<EquivariantMap>> {
    let n = src.len();
    let s: Vec<Option<EquivariantMap>> =
        (0..n).map(|i| if i == 0 { None } else { Some(map(rng, src.module(i), tgt.module(i - 1)).scale(c(size))) }).collect();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut k = EquivariantMap::zero(src.module(i), tgt.module(i));
        if i > 0 {
            k = k.add(&tgt.differential(i - 1).compose(s[i].as_ref().unwrap())?)?;
        }
        if i + 1 < n {
            k = k.add(&s[i + 1].as_ref().unwrap().compose(src.differential(i))?)?;
        }
        out.push(k);
    }
    Ok(out)
}

/// Quasi-isomorphism `source -> T`, where `T` is `source` plus a random
/// acyclic summand moved by a chain isomorphism, and the map is homotopic
/// to the inclusion.
pub fn quasi_isomorphism(rng: &mut TestRng, source: &CochainComplex, max_rank: usize) -> Result<Morphism> {
    let extra = acyclic_complex(rng, source.backend(), source.len(), max_rank)?.complex;
    let sum = direct_sum(source, &extra)?;
    let g = null_homotopic(rng, source, source, 0.3)?;
    let k = null_homotopic(rng, source, &extra, 0.5)?;
    let maps: Vec<EquivariantMap> = (0..source.len())
        .map(|i| {
            let gi = EquivariantMap::identity(source.module(i)).add(&g[i])?;
            EquivariantMap::block(
                &[source.module(i).clone(), extra.module(i).clone()],
                &[source.module(i).clone()],
                &[vec![Some(&gi)], vec![Some(&k[i])]],
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let into_sum = Morphism::new(source.clone(), sum.clone(), maps)?;
    let iso = isomorphism(rng, &sum)?;
    into_sum.then(&iso)
}

/// Short exact sequence with acyclic pieces; the coupling is
/// `f_i = d_1 s_i - s_{i+1} d_3`.
pub fn acyclic_ses(rng: &mut TestRng, backend: &Backend, len: usize, max_rank: usize) -> Result<ShortExactSequence> {
    let sub = acyclic_complex(rng, backend, len, max_rank)?.complex;
    let quotient = acyclic_complex(rng, backend, len, max_rank)?.complex;
    let coupling = homotopy_coupling(rng, &sub, &quotient)?;
    ShortExactSequence::new(sub, quotient, coupling, None)
}

fn homotopy_coupling(rng: &mut TestRng, sub: &CochainComplex, quotient: &CochainComplex) -> Result<Vec<EquivariantMap>> {
    let n = sub.len().min(quotient.len());
    let s: Vec<EquivariantMap> = (0..n).map(|i| map(rng, quotient.module(i), sub.module(i)).scale(c(0.5))).collect();
    (0..n - 1)
        .map(|i| sub.differential(i).compose(&s[i])?.sub(&s[i + 1].compose(quotient.differential(i))?))
        .collect()
}

/// Short exact sequence with cohomology in both pieces, a coupling that
/// induces a nonzero connecting map, and optionally a non-split metric on
/// the middle.
pub fn ses_with_cohomology(
    rng: &mut TestRng,
    backend: &Backend,
    sub_h: &[usize],
    quot_h: &[usize],
    twisted_middle: bool,
) -> Result<ShortExactSequence> {
    let sub = complex_with_cohomology(rng, backend, sub_h, 2)?;
    let quot = complex_with_cohomology(rng, backend, quot_h, 2)?;
    let mut coupling = homotopy_coupling(rng, &sub.complex, &quot.complex)?;
    for (i, f) in coupling.iter_mut().enumerate() {
        let (h3, h1) = (quot.harmonic[i], sub.harmonic[i + 1]);
        if h3 == 0 || h1 == 0 {
            continue;
        }
        let core = map(rng, &HilbertModule::new(backend, h3), &HilbertModule::new(backend, h1));
        let extra = sub.harmonic_inclusion(i + 1).compose(&core)?.compose(&quot.harmonic_projection(i))?;
        *f = f.add(&extra)?;
    }
    let middle_metrics = if twisted_middle {
        let n = sub.complex.len();
        Some(
            (0..n)
                .map(|i| metric(rng, &sub.complex.module(i).direct_sum(quot.complex.module(i)), 0.5))
                .collect(),
        )
    } else {
        None
    };
    ShortExactSequence::new(sub.complex, quot.complex, coupling, middle_metrics)
}

/// Helper to promote a raw matrix to the orthonormal coordinates of a
/// module with standard metric (for tests).
pub fn to_map(m: &HilbertModule, mat: CMat) -> EquivariantMap {
    EquivariantMap::from_expanded(m, m, mat).expect("square")
}
