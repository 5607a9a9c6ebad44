//! JSON scenario files: named complexes, morphisms, Morse data,
//! representations, Hermitian structures and subdivisions, plus the runs the
//! command-line subcommands perform on them.
//!
//! Loading happens in two stages. [`Scenario::parse`] only checks syntax;
//! [`Scenario::load`] resolves every name and runs each object's validator.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Deserialize;

use crate::complex::CochainComplex;
use crate::cone::Morphism;
use crate::detclass::Family;
use crate::error::{Error, Result};
use crate::morse::fixtures::Surface;
use crate::morse::{HermitianStructure, MorseData, Representation, SubdivisionData};
use crate::vna::{AlgebraBackend, AlgebraElement, Backend, EquivariantMap, HilbertModule};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: Option<String>,
    /// Used when `--seed` is not given.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub backend: BackendSpec,
    #[serde(default)]
    pub complexes: BTreeMap<String, ComplexSpec>,
    #[serde(default)]
    pub morphisms: BTreeMap<String, MorphismSpec>,
    #[serde(default)]
    pub representations: BTreeMap<String, RepresentationSpec>,
    #[serde(default)]
    pub hermitian: BTreeMap<String, HermitianSpec>,
    #[serde(default)]
    pub morse: BTreeMap<String, MorseSpec>,
    #[serde(default)]
    pub subdivisions: BTreeMap<String, SubdivisionSpec>,
    #[serde(default)]
    pub anomaly: Vec<AnomalySpec>,
    #[serde(default)]
    pub witten: Vec<WittenSpec>,
    #[serde(default)]
    pub detclass: Vec<DetclassSpec>,
    #[serde(default)]
    pub random: Option<RandomSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum BackendSpec {
    /// `scalar`, `cyclic:m`, `cyclic2:m`, `symmetric3`, `quaternion8`.
    Named(String),
    /// Multiplication table `table[i][j] = index of labels[i] * labels[j]`.
    Table { name: String, labels: Vec<String>, table: Vec<Vec<usize>> },
}

impl Default for BackendSpec {
    fn default() -> Self {
        BackendSpec::Named("scalar".into())
    }
}

/// A complex number: `1.5` or `[re, im]`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum Number {
    Real(f64),
    Pair([f64; 2]),
}

impl Number {
    fn value(self) -> Complex64 {
        match self {
            Number::Real(x) => Complex64::new(x, 0.0),
            Number::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

/// An algebra element: a number (times the unit) or coefficients by group
/// label, e.g. `{"e": 1, "g": -1}`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ElementSpec {
    Scalar(Number),
    Terms(BTreeMap<String, Number>),
}

impl ElementSpec {
    pub fn resolve(&self, backend: &Backend) -> Result<AlgebraElement> {
        match self {
            ElementSpec::Scalar(z) => Ok(AlgebraElement::scalar(backend, z.value())),
            ElementSpec::Terms(t) => {
                let terms: Vec<(&str, Complex64)> = t.iter().map(|(k, v)| (k.as_str(), v.value())).collect();
                AlgebraElement::from_terms(backend, &terms)
            }
        }
    }
}

/// Rows indexed by target summands, columns by source summands.
pub type MatrixSpec = Vec<Vec<ElementSpec>>;

pub fn resolve_map(spec: &MatrixSpec, source: &HilbertModule, target: &HilbertModule) -> Result<EquivariantMap> {
    let b = &source.backend;
    let entries = spec
        .iter()
        .map(|row| row.iter().map(|e| e.resolve(b)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    EquivariantMap::from_entries(source, target, &entries)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexSpec {
    pub ranks: Vec<usize>,
    pub differentials: Vec<MatrixSpec>,
    #[serde(default)]
    pub metrics: Option<Vec<MatrixSpec>>,
    #[serde(default)]
    pub expect_torsion: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorphismSpec {
    pub source: String,
    pub target: String,
    pub maps: Vec<MatrixSpec>,
    #[serde(default)]
    pub expect_cone_torsion: Option<f64>,
}

/// A generator image: a group label acting on every summand, or a full
/// rank x rank matrix.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ImageSpec {
    Label(String),
    Matrix(MatrixSpec),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepresentationSpec {
    #[serde(default = "one")]
    pub rank: usize,
    pub generators: BTreeMap<String, ImageSpec>,
}

fn one() -> usize {
    1
}

/// Per-cell factors `B_x` for fibers of rank `rank`: `scale` multiplies the
/// inner product by a positive number, `factors` gives `B_x` outright.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HermitianSpec {
    #[serde(default = "one")]
    pub rank: usize,
    #[serde(default)]
    pub scale: BTreeMap<String, f64>,
    #[serde(default)]
    pub factors: BTreeMap<String, MatrixSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorseSpec {
    /// A shipped surface (`circle`, `torus`, `genus2`) ...
    #[serde(default)]
    pub surface: Option<String>,
    /// ... or explicit cells and incidences.
    #[serde(default)]
    pub data: Option<MorseData>,
    pub representation: String,
    #[serde(default)]
    pub hermitian: Option<String>,
    #[serde(default)]
    pub expect_torsion: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubdivisionSpec {
    /// A shipped surface with `extra_vertices` new vertices on its first edge ...
    #[serde(default)]
    pub surface: Option<String>,
    #[serde(default)]
    pub extra_vertices: Option<usize>,
    /// ... or explicit data with carriers listed per cell.
    #[serde(default)]
    pub data: Option<SubdivisionData>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnomalySpec {
    #[serde(default)]
    pub name: Option<String>,
    pub subdivision: String,
    pub representation: String,
    #[serde(default)]
    pub hermitian: Option<String>,
    /// Second structure for the Hermitian anomaly and the `V` identities.
    #[serde(default)]
    pub hermitian2: Option<String>,
    /// Triangulations compared; all of them when empty.
    #[serde(default)]
    pub triangulations: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WittenSpec {
    #[serde(default)]
    pub name: Option<String>,
    pub subdivision: String,
    #[serde(default = "coarse")]
    pub triangulation: String,
    pub representation: String,
    #[serde(default)]
    pub hermitian: Option<String>,
    /// Heights are the cell index plus these offsets (per fine cell).
    #[serde(default)]
    pub offsets: BTreeMap<String, f64>,
    pub grid: Vec<f64>,
    /// Parameter values for the small/large split; the grid when omitted.
    #[serde(default)]
    pub split: Option<Vec<f64>>,
    #[serde(default)]
    pub scaling: Option<ScalingSpec>,
}

fn coarse() -> String {
    "coarse".into()
}

/// Scaling morphism on the triangulation complex, with the manifold
/// dimension `n` and parameter values `t`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSpec {
    pub n: usize,
    pub t: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetclassSpec {
    #[serde(default)]
    pub name: Option<String>,
    /// `circle`, `flat` or `constant:v`.
    pub family: String,
    pub grids: Vec<usize>,
}

/// Sizes of the seeded random suites.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSpec {
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default = "default_length")]
    pub length: usize,
    #[serde(default = "default_max_rank")]
    pub max_rank: usize,
}

fn default_count() -> usize {
    5
}
fn default_length() -> usize {
    4
}
fn default_max_rank() -> usize {
    3
}

impl Default for RandomSpec {
    fn default() -> Self {
        RandomSpec { count: default_count(), length: default_length(), max_rank: default_max_rank() }
    }
}

/// A scenario with every name resolved and every object validated.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub scenario: Scenario,
    pub backend: Backend,
    pub complexes: BTreeMap<String, CochainComplex>,
    pub morphisms: BTreeMap<String, Morphism>,
    pub representations: BTreeMap<String, Representation>,
    pub hermitian: BTreeMap<String, HermitianStructure>,
    pub morse: BTreeMap<String, MorseData>,
    pub subdivisions: BTreeMap<String, SubdivisionData>,
    pub families: Vec<Family>,
}

fn context(what: &str, name: &str) -> impl Fn(Error) -> Error {
    let prefix = format!("{what} {name:?}");
    move |e| Error::Parameter(format!("{prefix}: {e}"))
}

fn lookup<'a, T>(map: &'a BTreeMap<String, T>, what: &str, name: &str) -> Result<&'a T> {
    map.get(name).ok_or_else(|| Error::Lookup(format!("no {what} named {name:?}")))
}

impl Scenario {
    pub fn parse(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn load(self) -> Result<Loaded> {
        let backend = match &self.backend {
            BackendSpec::Named(n) => AlgebraBackend::named(n)?,
            BackendSpec::Table { name, labels, table } => AlgebraBackend::from_table(name, labels.clone(), table.clone())?,
        };
        let mut complexes = BTreeMap::new();
        for (name, spec) in &self.complexes {
            complexes.insert(name.clone(), build_complex(spec, &backend).map_err(context("complex", name))?);
        }
        let mut morphisms = BTreeMap::new();
        for (name, spec) in &self.morphisms {
            let f = build_morphism(spec, &complexes).map_err(context("morphism", name))?;
            morphisms.insert(name.clone(), f);
        }
        let mut representations = BTreeMap::new();
        for (name, spec) in &self.representations {
            let rho = build_representation(spec, &backend).map_err(context("representation", name))?;
            representations.insert(name.clone(), rho);
        }
        let mut hermitian = BTreeMap::new();
        for (name, spec) in &self.hermitian {
            hermitian.insert(name.clone(), build_hermitian(spec, &backend).map_err(context("hermitian", name))?);
        }
        let mut morse = BTreeMap::new();
        for (name, spec) in &self.morse {
            let m = build_morse(spec, &representations, &hermitian).map_err(context("morse", name))?;
            morse.insert(name.clone(), m);
        }
        let mut subdivisions = BTreeMap::new();
        for (name, spec) in &self.subdivisions {
            subdivisions.insert(name.clone(), build_subdivision(spec).map_err(context("subdivision", name))?);
        }
        for (i, a) in self.anomaly.iter().enumerate() {
            let label = a.name.clone().unwrap_or_else(|| i.to_string());
            check_anomaly(a, &subdivisions, &representations, &hermitian).map_err(context("anomaly", &label))?;
        }
        for (i, w) in self.witten.iter().enumerate() {
            let label = w.name.clone().unwrap_or_else(|| i.to_string());
            check_witten(w, &subdivisions, &representations, &hermitian).map_err(context("witten", &label))?;
        }
        let mut families = Vec::new();
        for (i, d) in self.detclass.iter().enumerate() {
            let label = d.name.clone().unwrap_or_else(|| i.to_string());
            let f = Family::parse(&d.family).map_err(context("detclass", &label))?;
            if d.grids.len() < 3 || d.grids.windows(2).any(|w| w[1] <= w[0]) || d.grids[0] < 2 {
                return Err(context("detclass", &label)(Error::Parameter(
                    "grids must be at least three increasing sizes, each at least 2".into(),
                )));
            }
            families.push(f);
        }
        if let Some(r) = &self.random {
            if r.count == 0 || r.length < 2 || r.max_rank == 0 {
                return Err(Error::Parameter("random: count and max_rank must be positive, length at least 2".into()));
            }
        }
        Ok(Loaded { scenario: self, backend, complexes, morphisms, representations, hermitian, morse, subdivisions, families })
    }
}

fn build_complex(spec: &ComplexSpec, backend: &Backend) -> Result<CochainComplex> {
    let modules: Vec<HilbertModule> = spec.ranks.iter().map(|&r| HilbertModule::new(backend, r)).collect();
    if spec.differentials.len() + 1 != modules.len() {
        return Err(Error::Shape(format!("{} differentials for {} ranks", spec.differentials.len(), modules.len())));
    }
    let diffs = spec
        .differentials
        .iter()
        .enumerate()
        .map(|(i, d)| resolve_map(d, &modules[i], &modules[i + 1]))
        .collect::<Result<Vec<_>>>()?;
    let metrics = match &spec.metrics {
        Some(g) => {
            if g.len() != modules.len() {
                return Err(Error::Shape(format!("{} metrics for {} degrees", g.len(), modules.len())));
            }
            Some(g.iter().zip(&modules).map(|(g, m)| resolve_map(g, m, m)).collect::<Result<Vec<_>>>()?)
        }
        None => None,
    };
    CochainComplex::new(modules, diffs, metrics)
}

fn build_morphism(spec: &MorphismSpec, complexes: &BTreeMap<String, CochainComplex>) -> Result<Morphism> {
    let src = lookup(complexes, "complex", &spec.source)?;
    let tgt = lookup(complexes, "complex", &spec.target)?;
    let n = src.len().max(tgt.len());
    if spec.maps.len() > n {
        return Err(Error::Shape(format!("{} maps for {n} degrees", spec.maps.len())));
    }
    let zero = HilbertModule::new(src.backend(), 0);
    let module = |cx: &CochainComplex, i: usize| if i < cx.len() { cx.module(i).clone() } else { zero.clone() };
    let maps = (0..n)
        .map(|i| {
            let (s, t) = (module(src, i), module(tgt, i));
            match spec.maps.get(i) {
                Some(m) => resolve_map(m, &s, &t),
                None => Ok(EquivariantMap::zero(&s, &t)),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Morphism::new(src.clone(), tgt.clone(), maps)
}

fn build_representation(spec: &RepresentationSpec, backend: &Backend) -> Result<Representation> {
    let module = HilbertModule::new(backend, spec.rank);
    let mut images = BTreeMap::new();
    for (g, img) in &spec.generators {
        let m = match img {
            ImageSpec::Label(l) => {
                let el = AlgebraElement::group_element(backend, backend.index_of(l)?);
                crate::morse::diagonal_element(&module, &el)?
            }
            ImageSpec::Matrix(m) => resolve_map(m, &module, &module)?,
        };
        images.insert(g.clone(), m);
    }
    Representation::new(backend, spec.rank, images)
}

fn build_hermitian(spec: &HermitianSpec, backend: &Backend) -> Result<HermitianStructure> {
    let module = HilbertModule::new(backend, spec.rank);
    let mut mu = HermitianStructure::standard();
    for (cell, m) in &spec.factors {
        mu = mu.with_factor(cell, resolve_map(m, &module, &module)?)?;
    }
    for (cell, s) in &spec.scale {
        mu = mu.scaled(cell, *s, &module)?;
    }
    Ok(mu)
}

fn surface_or_data<T: Clone>(surface: &Option<String>, data: &Option<T>, build: impl Fn(&Surface) -> Result<T>) -> Result<T> {
    match (surface, data) {
        (Some(s), None) => build(&Surface::named(s)?),
        (None, Some(d)) => Ok(d.clone()),
        _ => Err(Error::Parameter("give exactly one of `surface` and `data`".into())),
    }
}

fn check_structure(
    rho: &Representation,
    mu: Option<&String>,
    hermitian: &BTreeMap<String, HermitianStructure>,
) -> Result<()> {
    if let Some(h) = mu {
        let mu = lookup(hermitian, "hermitian structure", h)?;
        let fiber = rho.module();
        for x in mu.cells() {
            if mu.factor(x, &fiber).source != fiber {
                return Err(Error::Shape(format!("hermitian structure {h:?} has the wrong fiber rank at {x}")));
            }
        }
    }
    Ok(())
}

fn build_morse(
    spec: &MorseSpec,
    reps: &BTreeMap<String, Representation>,
    hermitian: &BTreeMap<String, HermitianStructure>,
) -> Result<MorseData> {
    let m = surface_or_data(&spec.surface, &spec.data, |s| Ok(s.morse_data()))?;
    m.validate()?;
    let rho = lookup(reps, "representation", &spec.representation)?;
    check_structure(rho, spec.hermitian.as_ref(), hermitian)?;
    let mu = match &spec.hermitian {
        Some(h) => hermitian[h].clone(),
        None => HermitianStructure::standard(),
    };
    crate::morse::build_complex(&m, rho, &mu)?;
    Ok(m)
}

fn build_subdivision(spec: &SubdivisionSpec) -> Result<SubdivisionData> {
    if spec.data.is_some() && spec.extra_vertices.is_some() {
        return Err(Error::Parameter("`extra_vertices` only applies to shipped surfaces".into()));
    }
    let s = surface_or_data(&spec.surface, &spec.data, |s| s.subdivision(spec.extra_vertices.unwrap_or(1)))?;
    s.validate()?;
    Ok(s)
}

fn check_anomaly(
    a: &AnomalySpec,
    subs: &BTreeMap<String, SubdivisionData>,
    reps: &BTreeMap<String, Representation>,
    hermitian: &BTreeMap<String, HermitianStructure>,
) -> Result<()> {
    let s = lookup(subs, "subdivision", &a.subdivision)?;
    let rho = lookup(reps, "representation", &a.representation)?;
    check_structure(rho, a.hermitian.as_ref(), hermitian)?;
    check_structure(rho, a.hermitian2.as_ref(), hermitian)?;
    for t in &a.triangulations {
        s.triangulation(t)?;
    }
    if !a.triangulations.is_empty() && a.triangulations.len() < 2 {
        return Err(Error::Parameter("compare at least two triangulations".into()));
    }
    Ok(())
}

fn check_witten(
    w: &WittenSpec,
    subs: &BTreeMap<String, SubdivisionData>,
    reps: &BTreeMap<String, Representation>,
    hermitian: &BTreeMap<String, HermitianStructure>,
) -> Result<()> {
    let s = lookup(subs, "subdivision", &w.subdivision)?;
    s.triangulation(&w.triangulation)?;
    let rho = lookup(reps, "representation", &w.representation)?;
    check_structure(rho, w.hermitian.as_ref(), hermitian)?;
    for x in w.offsets.keys() {
        s.fine.index(x)?;
    }
    if w.grid.len() < 4 || w.grid.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::Parameter("grid needs at least 4 increasing values".into()));
    }
    if let Some(sc) = &w.scaling {
        if sc.t.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::Parameter("scaling parameters must be positive".into()));
        }
    }
    Ok(())
}

impl Loaded {
    pub fn structure(&self, name: Option<&String>) -> HermitianStructure {
        name.map(|n| self.hermitian[n].clone()).unwrap_or_default()
    }

    pub fn random(&self) -> RandomSpec {
        self.scenario.random.clone().unwrap_or_default()
    }
}
