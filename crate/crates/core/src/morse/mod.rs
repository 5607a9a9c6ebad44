//! Cellular cochain complexes of a self-indexing Morse function, twisted by a
//! representation of the fundamental group and a Hermitian structure.
//!
//! Incidences are stored as formal sums `sum n_w w` of words in the
//! generators; a representation turns each word into a module map. Every
//! cell carries a fiber of the same rank.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::complex::CochainComplex;
use crate::error::{Error, Result};
use crate::linalg::{c, CMat};
use crate::vna::{AlgebraElement, Backend, EquivariantMap, HilbertModule};

pub mod anomaly;
pub mod fixtures;

pub use anomaly::*;

/// Word in the generators and their inverses, read left to right. Parsed from
/// space separated letters with optional integer powers: `"a b^-1 a^2"`.
/// `""`, `"1"` and `"e"` denote the empty word.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Word(pub Vec<(String, i32)>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn letter(g: &str) -> Self {
        Word(vec![(g.to_string(), 1)])
    }

    pub fn parse(s: &str) -> Result<Self> {
        let mut out = Vec::new();
        for tok in s.split_whitespace() {
            if tok == "1" || tok == "e" {
                continue;
            }
            let (name, pow) = match tok.split_once('^') {
                Some((n, p)) => {
                    let p: i32 = p.parse().map_err(|_| Error::Parameter(format!("bad power in word letter {tok:?}")))?;
                    (n, p)
                }
                None => (tok, 1),
            };
            if name.is_empty() || !name.chars().all(|ch| ch.is_alphanumeric() || ch == '_' || ch == '.') {
                return Err(Error::Parameter(format!("bad generator name in {tok:?}")));
            }
            if pow != 0 {
                out.push((name.to_string(), pow));
            }
        }
        Ok(Word(out))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        Word(v)
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|(g, p)| (g.clone(), -p)).collect())
    }

    /// The word as a sequence of letters with exponent `+1` or `-1`.
    pub fn letters(&self) -> Vec<(String, i32)> {
        let mut v = Vec::new();
        for (g, p) in &self.0 {
            for _ in 0..p.unsigned_abs() {
                v.push((g.clone(), p.signum()));
            }
        }
        v
    }

    pub fn generators(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|(g, _)| g.as_str())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> =
            self.0.iter().map(|(g, p)| if *p == 1 { g.clone() } else { format!("{g}^{p}") }).collect();
        write!(f, "{}", parts.join(" "))
    }
}

impl Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Word::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Fox derivative `d r / d x` as a list of signed words.
pub fn fox_derivative(r: &Word, x: &str) -> Vec<(i64, Word)> {
    let mut out = Vec::new();
    let mut prefix: Vec<(String, i32)> = Vec::new();
    for (g, e) in r.letters() {
        if g == x {
            if e > 0 {
                out.push((1, Word(prefix.clone())));
            } else {
                let mut w = prefix.clone();
                w.push((g.clone(), -1));
                out.push((-1, Word(w)));
            }
        }
        prefix.push((g, e));
    }
    out
}

/// Homomorphism from the free group on named generators into invertible
/// module maps of a fixed rank.
#[derive(Debug, Clone)]
pub struct Representation {
    backend: Backend,
    rank: usize,
    images: BTreeMap<String, (EquivariantMap, EquivariantMap)>,
}

impl Representation {
    pub fn new(backend: &Backend, rank: usize, images: BTreeMap<String, EquivariantMap>) -> Result<Self> {
        let module = HilbertModule::new(backend, rank);
        let mut out = BTreeMap::new();
        for (g, m) in images {
            if m.source != module || m.target != module {
                return Err(Error::Shape(format!("image of {g} is not an endomorphism of rank {rank}")));
            }
            let inv = m.inverse().map_err(|_| Error::NotInvertible(format!("image of generator {g}")))?;
            out.insert(g, (m, inv));
        }
        Ok(Representation { backend: backend.clone(), rank, images: out })
    }

    /// Each generator acts on every summand by the named group element.
    pub fn from_labels(backend: &Backend, rank: usize, labels: &[(&str, &str)]) -> Result<Self> {
        let module = HilbertModule::new(backend, rank);
        let mut images = BTreeMap::new();
        for (g, label) in labels {
            let el = AlgebraElement::group_element(backend, backend.index_of(label)?);
            images.insert(g.to_string(), diagonal_element(&module, &el)?);
        }
        Self::new(backend, rank, images)
    }

    /// Every generator acts by the identity.
    pub fn trivial(backend: &Backend, rank: usize, generators: &[&str]) -> Result<Self> {
        let module = HilbertModule::new(backend, rank);
        let images = generators.iter().map(|g| (g.to_string(), EquivariantMap::identity(&module))).collect();
        Self::new(backend, rank, images)
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }
    pub fn rank(&self) -> usize {
        self.rank
    }
    pub fn module(&self) -> HilbertModule {
        HilbertModule::new(&self.backend, self.rank)
    }
    pub fn generators(&self) -> impl Iterator<Item = &str> {
        self.images.keys().map(|s| s.as_str())
    }
    pub fn image(&self, g: &str) -> Result<&EquivariantMap> {
        self.images.get(g).map(|p| &p.0).ok_or_else(|| Error::Lookup(format!("generator {g} has no image")))
    }

    /// `rho(w)`, multiplying the letter images left to right.
    pub fn eval(&self, w: &Word) -> Result<EquivariantMap> {
        let mut acc = EquivariantMap::identity(&self.module());
        for (g, e) in w.letters() {
            let (m, inv) = self.images.get(&g).ok_or_else(|| Error::Lookup(format!("generator {g} has no image")))?;
            acc = acc.compose(if e > 0 { m } else { inv })?;
        }
        Ok(acc)
    }

    /// Largest deviation of `rho(r)` from the identity over the relators.
    pub fn relator_residual(&self, relators: &[Word]) -> Result<f64> {
        let id = EquivariantMap::identity(&self.module());
        let mut worst = 0.0f64;
        for r in relators {
            worst = worst.max(self.eval(r)?.distance(&id));
        }
        Ok(worst)
    }

    /// `log vol` of every generator image.
    pub fn log_vols(&self) -> Vec<(String, f64)> {
        self.images.iter().map(|(g, (m, _))| (g.clone(), m.log_vol())).collect()
    }
}

/// `diag(a, ..., a)` on a free module.
pub fn diagonal_element(module: &HilbertModule, a: &AlgebraElement) -> Result<EquivariantMap> {
    let z = AlgebraElement::zero(module.order());
    let entries: Vec<Vec<AlgebraElement>> = (0..module.rank)
        .map(|i| (0..module.rank).map(|j| if i == j { a.clone() } else { z.clone() }).collect())
        .collect();
    EquivariantMap::from_entries(module, module, &entries)
}

/// `nu(upper, lower) = sum n_w w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Incidence {
    pub upper: String,
    pub lower: String,
    pub terms: Vec<(i64, Word)>,
}

/// Critical cells by index, incidence data and the relators the
/// representation must satisfy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorseData {
    pub cells: Vec<Vec<String>>,
    pub incidences: Vec<Incidence>,
    #[serde(default)]
    pub relators: Vec<Word>,
}

impl MorseData {
    pub fn new(cells: Vec<Vec<String>>, incidences: Vec<Incidence>, relators: Vec<Word>) -> Result<Self> {
        let m = MorseData { cells, incidences, relators };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells.is_empty() {
            return Err(Error::Shape("Morse data without cells".into()));
        }
        let mut seen = BTreeMap::new();
        for (q, names) in self.cells.iter().enumerate() {
            for n in names {
                if seen.insert(n.clone(), q).is_some() {
                    return Err(Error::Parameter(format!("cell {n} declared twice")));
                }
            }
        }
        for inc in &self.incidences {
            let up = seen.get(&inc.upper).ok_or_else(|| Error::Lookup(format!("unknown cell {}", inc.upper)))?;
            let lo = seen.get(&inc.lower).ok_or_else(|| Error::Lookup(format!("unknown cell {}", inc.lower)))?;
            if *up != lo + 1 {
                return Err(Error::Parameter(format!(
                    "incidence {} -> {} joins indices {lo} and {up}",
                    inc.lower, inc.upper
                )));
            }
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.cells.len() - 1
    }

    /// `(index, position)` of a cell.
    pub fn locate(&self, name: &str) -> Option<(usize, usize)> {
        self.cells.iter().enumerate().find_map(|(q, v)| v.iter().position(|n| n == name).map(|p| (q, p)))
    }

    pub fn index(&self, name: &str) -> Result<usize> {
        self.locate(name).map(|p| p.0).ok_or_else(|| Error::Lookup(format!("unknown cell {name}")))
    }

    pub fn all_cells(&self) -> impl Iterator<Item = (usize, &str)> {
        self.cells.iter().enumerate().flat_map(|(q, v)| v.iter().map(move |n| (q, n.as_str())))
    }

    pub fn counts(&self) -> Vec<usize> {
        self.cells.iter().map(Vec::len).collect()
    }

    /// Reverse the orientation of one cell: negate every incidence touching it.
    pub fn flip_orientation(&self, cell: &str) -> Result<Self> {
        self.index(cell)?;
        let mut out = self.clone();
        for inc in &mut out.incidences {
            if inc.upper == cell || inc.lower == cell {
                for t in &mut inc.terms {
                    t.0 = -t.0;
                }
            }
        }
        Ok(out)
    }
}

/// Per-cell positive factors `B_x`; the fiber inner product at `x` is
/// `<B_x u, B_x v>`. Cells without an entry use `B_x = Id`.
#[derive(Debug, Clone, Default)]
pub struct HermitianStructure {
    factors: BTreeMap<String, EquivariantMap>,
}

impl HermitianStructure {
    pub fn standard() -> Self {
        HermitianStructure::default()
    }

    pub fn with_factor(mut self, cell: &str, b: EquivariantMap) -> Result<Self> {
        b.check_positive()?;
        self.factors.insert(cell.to_string(), b);
        Ok(self)
    }

    /// Multiply the fiber inner product at `cell` by `s > 0`.
    pub fn scaled(self, cell: &str, s: f64, module: &HilbertModule) -> Result<Self> {
        if !(s > 0.0) {
            return Err(Error::NotPositive(format!("scale {s} at {cell}")));
        }
        let b = self.factor(cell, module).scale(c(s.sqrt()));
        self.with_factor(cell, b)
    }

    pub fn factor(&self, cell: &str, module: &HilbertModule) -> EquivariantMap {
        self.factors.get(cell).cloned().unwrap_or_else(|| EquivariantMap::identity(module))
    }

    pub fn metric(&self, cell: &str, module: &HilbertModule) -> Result<EquivariantMap> {
        let b = self.factor(cell, module);
        b.compose(&b)
    }

    pub fn cells(&self) -> impl Iterator<Item = &str> {
        self.factors.keys().map(|s| s.as_str())
    }

    /// Whether the two structures agree at the given cells.
    pub fn agrees_on<'a>(&self, other: &Self, cells: impl Iterator<Item = &'a str>, module: &HilbertModule) -> bool {
        cells.into_iter().all(|x| self.factor(x, module).distance(&other.factor(x, module)) <= 1e-12)
    }
}

/// Block map from per-cell blocks, each of rank `module.rank`.
pub(crate) fn cell_blocks<F>(module: &HilbertModule, rows: usize, cols: usize, mut f: F) -> Result<EquivariantMap>
where
    F: FnMut(usize, usize) -> Result<Option<EquivariantMap>>,
{
    let b = &module.backend;
    let d = module.expanded_dim();
    let mut m = CMat::zeros(rows * d, cols * d);
    for i in 0..rows {
        for j in 0..cols {
            if let Some(blk) = f(i, j)? {
                m.view_mut((i * d, j * d), (d, d)).copy_from(blk.expand());
            }
        }
    }
    EquivariantMap::from_expanded(
        &HilbertModule::new(b, cols * module.rank),
        &HilbertModule::new(b, rows * module.rank),
        m,
    )
}

/// `sum n_w rho(w)`.
pub fn evaluate_terms(rho: &Representation, terms: &[(i64, Word)]) -> Result<EquivariantMap> {
    let mut acc = EquivariantMap::zero(&rho.module(), &rho.module());
    for (n, w) in terms {
        acc = acc.add(&rho.eval(w)?.scale(c(*n as f64)))?;
    }
    Ok(acc)
}

/// Relators must hold through `rho` to this accuracy.
const RELATOR_TOL: f64 = 1e-10;

/// The cochain complex `C^q = sum_{x in Cr_q} E_x` with
/// `(delta f)(x) = sum_y nu(x, y) f(y)`.
pub fn build_complex(m: &MorseData, rho: &Representation, mu: &HermitianStructure) -> Result<CochainComplex> {
    m.validate()?;
    let r = rho.relator_residual(&m.relators)?;
    if r > RELATOR_TOL {
        return Err(Error::Parameter(format!("representation violates a relator, residual {r:e}")));
    }
    let fiber = rho.module();
    let b = rho.backend();
    let modules: Vec<HilbertModule> = m.cells.iter().map(|v| HilbertModule::new(b, v.len() * rho.rank())).collect();
    let mut entries: Vec<BTreeMap<(usize, usize), EquivariantMap>> = vec![BTreeMap::new(); m.dimension()];
    for inc in &m.incidences {
        let (q, i) = m.locate(&inc.upper).unwrap();
        let (_, j) = m.locate(&inc.lower).unwrap();
        let v = evaluate_terms(rho, &inc.terms)?;
        let slot = entries[q - 1].entry((i, j)).or_insert_with(|| EquivariantMap::zero(&fiber, &fiber));
        *slot = slot.add(&v)?;
    }
    let diffs = (0..m.dimension())
        .map(|q| cell_blocks(&fiber, m.cells[q + 1].len(), m.cells[q].len(), |i, j| Ok(entries[q].get(&(i, j)).cloned())))
        .collect::<Result<Vec<_>>>()?;
    let metrics = m
        .cells
        .iter()
        .map(|names| {
            cell_blocks(&fiber, names.len(), names.len(), |i, j| {
                if i == j {
                    mu.metric(&names[i], &fiber).map(Some)
                } else {
                    Ok(None)
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    CochainComplex::new(modules, diffs, Some(metrics))
}
