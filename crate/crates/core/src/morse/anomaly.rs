//! Subdivisions, the transport weight `omega`, relative torsion against a
//! finer complex, and the Hermitian-structure bookkeeping `V` and `theta`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{build_complex, cell_blocks, HermitianStructure, MorseData, Representation, Word};
use crate::complex::TorsionMode;
use crate::cone::{cone_torsion, Morphism};
use crate::error::{Error, Result};
use crate::linalg::c;
use crate::vna::{EquivariantMap, HilbertModule};

/// The cell of a coarser triangulation whose unstable manifold contains a
/// fine cell, with the word of the transport from the fine cell to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Carrier {
    pub cell: String,
    pub word: Word,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Triangulation {
    pub morse: MorseData,
    /// Carrier of every fine cell.
    pub carriers: BTreeMap<String, Carrier>,
}

/// A fine complex together with coarser triangulations it subdivides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubdivisionData {
    pub fine: MorseData,
    pub triangulations: BTreeMap<String, Triangulation>,
}

impl SubdivisionData {
    pub fn new(fine: MorseData, triangulations: BTreeMap<String, Triangulation>) -> Result<Self> {
        let s = SubdivisionData { fine, triangulations };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.fine.validate()?;
        for (name, t) in &self.triangulations {
            t.morse.validate()?;
            for (q, x) in t.morse.all_cells() {
                if self.fine.index(x).ok() != Some(q) {
                    return Err(Error::Parameter(format!("{name}: cell {x} is not a fine cell of index {q}")));
                }
            }
            for (q, y) in self.fine.all_cells() {
                let car = t.carriers.get(y).ok_or_else(|| Error::Lookup(format!("{name}: missing carrier for {y}")))?;
                let cq = t.morse.index(&car.cell).map_err(|_| {
                    Error::Lookup(format!("{name}: carrier {} of {y} is not a cell", car.cell))
                })?;
                if cq < q {
                    return Err(Error::Parameter(format!("{name}: carrier {} of {y} has lower index", car.cell)));
                }
                if t.morse.locate(y).is_some() && (car.cell != y || !car.word.is_empty()) {
                    return Err(Error::Parameter(format!("{name}: cell {y} must carry itself")));
                }
            }
        }
        Ok(())
    }

    pub fn triangulation(&self, name: &str) -> Result<&Triangulation> {
        self.triangulations.get(name).ok_or_else(|| Error::Lookup(format!("no triangulation named {name:?}")))
    }

    fn carrier(&self, tri: &str, x: &str) -> Result<&Carrier> {
        self.triangulation(tri)?.carriers.get(x).ok_or_else(|| Error::Lookup(format!("{tri}: missing carrier for {x}")))
    }
}

/// `A_q(s)(x) = sum_{y carried by x, index y = q} T_{yx} s(y)`, from the fine
/// complex to the complex of `tri`.
pub fn subdivision_map(s: &SubdivisionData, tri: &str, rho: &Representation, mu: &HermitianStructure) -> Result<Morphism> {
    let t = s.triangulation(tri)?;
    let fine = build_complex(&s.fine, rho, mu)?;
    let coarse = build_complex(&t.morse, rho, mu)?;
    let fiber = rho.module();
    let mut maps = Vec::new();
    for q in 0..s.fine.cells.len() {
        let rows = t.morse.cells.get(q).map_or(0, Vec::len);
        let cols = &s.fine.cells[q];
        let a = cell_blocks(&fiber, rows, cols.len(), |i, j| {
            let car = &t.carriers[&cols[j]];
            if car.cell == t.morse.cells[q][i] {
                rho.eval(&car.word).map(Some)
            } else {
                Ok(None)
            }
        })?;
        maps.push(a);
    }
    Morphism::new(fine, coarse, maps)
}

/// `log R = log T(C(Int))`.
pub fn relative_torsion(int: &Morphism) -> Result<f64> {
    cone_torsion(int)
}

/// Relative torsion of a triangulation measured against the fine complex of
/// the subdivision data.
pub fn triangulation_torsion(s: &SubdivisionData, tri: &str, rho: &Representation, mu: &HermitianStructure) -> Result<f64> {
    relative_torsion(&subdivision_map(s, tri, rho, mu)?)
}

/// `log vol_mu` of a transport `E_from -> E_to`: `log vol(B_to T B_from^{-1})`.
pub fn transport_log_vol(t: &EquivariantMap, from: &str, to: &str, mu: &HermitianStructure) -> Result<f64> {
    let b_from = mu.factor(from, &t.source).inverse()?;
    let b_to = mu.factor(to, &t.target);
    Ok(b_to.compose(t)?.compose(&b_from)?.log_vol())
}

/// `w(x) = log vol(T^{t2}_{x,x2} (T^{t1}_{x,x1})^{-1})` for every cell `x` of
/// `t0`, using the fine carriers.
pub fn subdivision_weights(
    s: &SubdivisionData,
    t1: &str,
    t2: &str,
    t0: &str,
    rho: &Representation,
    mu: &HermitianStructure,
) -> Result<Vec<(String, usize, f64)>> {
    let base = s.triangulation(t0)?;
    let mut out = Vec::new();
    for (q, x) in base.morse.all_cells() {
        let c1 = s.carrier(t1, x)?;
        let c2 = s.carrier(t2, x)?;
        let t = rho.eval(&c2.word)?.compose(&rho.eval(&c1.word)?.inverse()?)?;
        out.push((x.to_string(), q, transport_log_vol(&t, &c1.cell, &c2.cell, mu)?));
    }
    Ok(out)
}

/// Triangulations whose cells include the cells of every named one, i.e. the
/// candidates for `t0` in [`subdivision_weight`].
pub fn common_subdivisions(s: &SubdivisionData, names: &[&str]) -> Result<Vec<String>> {
    let tris = names.iter().map(|n| s.triangulation(n)).collect::<Result<Vec<_>>>()?;
    Ok(s.triangulations
        .iter()
        .filter(|(_, t0)| tris.iter().all(|t| t.morse.all_cells().all(|(q, x)| t0.morse.index(x).ok() == Some(q))))
        .map(|(n, _)| n.clone())
        .collect())
}

/// `omega(t1, t2; t0) = sum_x (-1)^{index x} w(x)`, with `t0` a common
/// subdivision of `t1` and `t2`.
pub fn subdivision_weight(
    s: &SubdivisionData,
    t1: &str,
    t2: &str,
    t0: &str,
    rho: &Representation,
    mu: &HermitianStructure,
) -> Result<f64> {
    Ok(subdivision_weights(s, t1, t2, t0, rho, mu)?.iter().map(|(_, q, w)| sign(*q) * w).sum())
}

fn sign(q: usize) -> f64 {
    if q % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `V(x) = log vol(Id: (E_x, mu1) -> (E_x, mu2)) = log vol(B2_x B1_x^{-1})`.
pub fn v_function(
    points: &[String],
    fiber: &HilbertModule,
    mu1: &HermitianStructure,
    mu2: &HermitianStructure,
) -> Result<BTreeMap<String, f64>> {
    points
        .iter()
        .map(|x| {
            let b1 = mu1.factor(x, fiber);
            let b2 = mu2.factor(x, fiber);
            b1.check_positive()?;
            b2.check_positive()?;
            Ok((x.clone(), b2.compose(&b1.inverse()?)?.log_vol()))
        })
        .collect()
}

/// Directed edge of the transport graph with `T = rho(word): E_from -> E_to`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportEdge {
    pub from: String,
    pub to: String,
    pub word: Word,
}

/// Fiber points joined by transports: one edge per incidence term (the
/// coefficient `rho(w)` of `nu(x, y)` carries `E_y` to `E_x`).
#[derive(Debug, Clone, PartialEq)]
pub struct TransportGraph {
    pub points: Vec<String>,
    pub edges: Vec<TransportEdge>,
}

impl TransportGraph {
    pub fn from_morse(m: &MorseData) -> Self {
        let points = m.all_cells().map(|(_, x)| x.to_string()).collect();
        let mut edges = Vec::new();
        for inc in &m.incidences {
            for (n, w) in &inc.terms {
                if *n != 0 {
                    edges.push(TransportEdge { from: inc.lower.clone(), to: inc.upper.clone(), word: w.clone() });
                }
            }
        }
        TransportGraph { points, edges }
    }

    /// Incidence edges of the fine complex plus an edge from every fine cell
    /// to each of its carriers.
    pub fn from_subdivision(s: &SubdivisionData) -> Self {
        let mut g = Self::from_morse(&s.fine);
        for t in s.triangulations.values() {
            for (y, car) in &t.carriers {
                if car.cell != *y {
                    g.edges.push(TransportEdge { from: y.clone(), to: car.cell.clone(), word: car.word.clone() });
                }
            }
        }
        g
    }

    /// `(dV)(x -> y) = V(y) - V(x)`.
    pub fn coboundary(&self, v: &BTreeMap<String, f64>) -> Result<Vec<f64>> {
        self.edges
            .iter()
            .map(|e| {
                let get = |x: &str| v.get(x).copied().ok_or_else(|| Error::Lookup(format!("no value at {x}")));
                Ok(get(&e.to)? - get(&e.from)?)
            })
            .collect()
    }
}

/// `theta(x -> y) = log vol_mu(T_{x -> y})` on every edge.
pub fn theta_cochain(g: &TransportGraph, rho: &Representation, mu: &HermitianStructure) -> Result<Vec<f64>> {
    g.edges.iter().map(|e| transport_log_vol(&rho.eval(&e.word)?, &e.from, &e.to, mu)).collect()
}

const UNIMODULAR_TOL: f64 = 1e-10;

/// Rescale `mu` pointwise by positive scalars so that `theta` vanishes.
pub fn unimodular_normalize(g: &TransportGraph, rho: &Representation, mu: &HermitianStructure) -> Result<HermitianStructure> {
    for (gen, lv) in rho.log_vols() {
        if lv.abs() > UNIMODULAR_TOL {
            return Err(Error::NonUnimodular(format!("log vol of the image of {gen} is {lv}")));
        }
    }
    let fiber = rho.module();
    let rank = rho.rank().max(1) as f64;
    let mut out = HermitianStructure::standard();
    for x in &g.points {
        let b = mu.factor(x, &fiber);
        let f = (-b.log_vol() / rank).exp();
        out = out.with_factor(x, b.scale(c(f)))?;
    }
    let worst = theta_cochain(g, rho, &out)?.iter().fold(0.0f64, |a, t| a.max(t.abs()));
    if worst > UNIMODULAR_TOL {
        return Err(Error::NonUnimodular(format!("normalized theta still {worst:e}")));
    }
    Ok(out)
}

/// The change `log R(mu2) - log R(mu1)` of the relative torsion of `tri`
/// against the fine complex.
#[derive(Debug, Clone, PartialEq)]
pub struct AnomalyReport {
    /// Difference of the two cone torsions.
    pub direct: f64,
    /// `sum_{coarse} (-1)^q V(mu1, mu2) - sum_{fine} (-1)^q V(mu1, mu2)`.
    pub via_volumes: f64,
    pub coarse_term: f64,
    pub fine_term: f64,
}

impl AnomalyReport {
    pub fn residual(&self) -> f64 {
        (self.direct - self.via_volumes).abs()
    }
}

/// With `mode = Strict` the two structures must agree on the cells of `tri`.
pub fn hermitian_anomaly(
    s: &SubdivisionData,
    tri: &str,
    rho: &Representation,
    mu1: &HermitianStructure,
    mu2: &HermitianStructure,
    mode: TorsionMode,
) -> Result<AnomalyReport> {
    let t = s.triangulation(tri)?;
    let fiber = rho.module();
    if mode == TorsionMode::Strict && !mu1.agrees_on(mu2, t.morse.all_cells().map(|p| p.1), &fiber) {
        return Err(Error::Parameter(format!("Hermitian structures differ on critical cells of {tri}")));
    }
    let direct = triangulation_torsion(s, tri, rho, mu2)? - triangulation_torsion(s, tri, rho, mu1)?;
    let alt = |m: &MorseData| -> Result<f64> {
        let pts: Vec<String> = m.all_cells().map(|p| p.1.to_string()).collect();
        let v = v_function(&pts, &fiber, mu1, mu2)?;
        Ok(m.all_cells().map(|(q, x)| sign(q) * v[x]).sum())
    };
    let coarse_term = alt(&t.morse)?;
    let fine_term = alt(&s.fine)?;
    Ok(AnomalyReport { direct, via_volumes: coarse_term - fine_term, coarse_term, fine_term })
}
