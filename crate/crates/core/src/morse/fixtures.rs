//! Closed surfaces (and the circle) from a one-vertex presentation, with
//! subdivisions of the first generator's edge.
//!
//! The coarse complex has one vertex `p`, one edge per generator and, when a
//! relator is present, one face `F`. Subdividing with `k` extra vertices
//! splits the edge of the first generator `g` into `g, g.1, ..., g.k` through
//! vertices `p.1, ..., p.k`. A triangulation in between keeps a subset `S` of
//! the new vertices; its edge pieces are named after their first fine piece,
//! so its cells form a subset of the fine cells.

use std::collections::BTreeMap;

use super::anomaly::{Carrier, SubdivisionData, Triangulation};
use super::{fox_derivative, Incidence, MorseData, Word};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    pub name: String,
    pub generators: Vec<String>,
    pub relator: Option<Word>,
}

impl Surface {
    pub fn new(name: &str, generators: &[&str], relator: Option<&str>) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::Parameter("surface needs at least one generator".into()));
        }
        let relator = relator.map(Word::parse).transpose()?;
        if let Some(r) = &relator {
            if let Some(g) = r.generators().find(|g| !generators.contains(g)) {
                return Err(Error::Lookup(format!("relator uses undeclared generator {g}")));
            }
        }
        Ok(Surface { name: name.into(), generators: generators.iter().map(|s| s.to_string()).collect(), relator })
    }

    /// One vertex, one loop `g`: `nu(g, p) = 1 - g`.
    pub fn circle() -> Self {
        Self::new("circle", &["g"], None).unwrap()
    }

    pub fn torus() -> Self {
        Self::new("torus", &["a", "b"], Some("a b a^-1 b^-1")).unwrap()
    }

    pub fn genus2() -> Self {
        Self::new("genus2", &["a1", "b1", "a2", "b2"], Some("a1 b1 a1^-1 b1^-1 a2 b2 a2^-1 b2^-1")).unwrap()
    }

    pub fn named(name: &str) -> Result<Self> {
        match name {
            "circle" => Ok(Self::circle()),
            "torus" => Ok(Self::torus()),
            "genus2" => Ok(Self::genus2()),
            _ => Err(Error::Lookup(format!("no surface fixture named {name:?}"))),
        }
    }

    pub fn relators(&self) -> Vec<Word> {
        self.relator.iter().cloned().collect()
    }

    fn vertex(i: usize) -> String {
        if i == 0 {
            "p".into()
        } else {
            format!("p.{i}")
        }
    }

    fn piece(&self, i: usize) -> String {
        if i == 0 {
            self.generators[0].clone()
        } else {
            format!("{}.{i}", self.generators[0])
        }
    }

    /// Morse data keeping the extra vertices `kept` (each in `1..=k`).
    pub fn cell_data(&self, kept: &[usize]) -> Result<MorseData> {
        let starts = segment_starts(kept);
        let mut verts: Vec<String> = starts.iter().map(|&s| Self::vertex(s)).collect();
        verts.sort();
        let mut edges: Vec<String> = starts.iter().map(|&s| self.piece(s)).collect();
        edges.extend(self.generators[1..].iter().cloned());
        let mut cells = vec![verts, edges];
        let mut inc = Vec::new();
        let g0 = Word::letter(&self.generators[0]);
        for (j, &s) in starts.iter().enumerate() {
            let (end, hol) = match starts.get(j + 1) {
                Some(&e) => (e, Word::empty()),
                None => (0, g0.clone()),
            };
            let e = self.piece(s);
            inc.push(Incidence { upper: e.clone(), lower: Self::vertex(s), terms: vec![(1, Word::empty())] });
            inc.push(Incidence { upper: e, lower: Self::vertex(end), terms: vec![(-1, hol)] });
        }
        for g in &self.generators[1..] {
            inc.push(Incidence { upper: g.clone(), lower: "p".into(), terms: vec![(1, Word::empty()), (-1, Word::letter(g))] });
        }
        if let Some(r) = &self.relator {
            cells.push(vec!["F".into()]);
            let d0 = fox_derivative(r, &self.generators[0]);
            for &s in &starts {
                inc.push(Incidence { upper: "F".into(), lower: self.piece(s), terms: d0.clone() });
            }
            for g in &self.generators[1..] {
                inc.push(Incidence { upper: "F".into(), lower: g.clone(), terms: fox_derivative(r, g) });
            }
        }
        MorseData::new(cells, inc, self.relators())
    }

    /// Coarse data with no extra vertices.
    pub fn morse_data(&self) -> MorseData {
        self.cell_data(&[]).expect("fixture data is consistent")
    }

    /// Fine data with `k` extra vertices and every intermediate triangulation,
    /// named `coarse`, `fine` and `keep:i,j,...`.
    pub fn subdivision(&self, k: usize) -> Result<SubdivisionData> {
        if k > 6 {
            return Err(Error::Parameter(format!("at most 6 extra vertices, got {k}")));
        }
        let all: Vec<usize> = (1..=k).collect();
        let fine = self.cell_data(&all)?;
        let mut tris = BTreeMap::new();
        for mask in 0..(1usize << k) {
            let kept: Vec<usize> = all.iter().copied().filter(|i| mask & (1 << (i - 1)) != 0).collect();
            tris.insert(triangulation_name(&kept, k), self.triangulation(&kept, k)?);
        }
        SubdivisionData::new(fine, tris)
    }

    fn triangulation(&self, kept: &[usize], k: usize) -> Result<Triangulation> {
        let morse = self.cell_data(kept)?;
        let starts = segment_starts(kept);
        let seg = |i: usize, strict: bool| -> usize {
            *starts.iter().filter(|&&s| if strict { s < i } else { s <= i }).max().unwrap()
        };
        let mut carriers = BTreeMap::new();
        let mut put = |x: String, cell: String| {
            carriers.insert(x, Carrier { cell, word: Word::empty() });
        };
        put("p".into(), "p".into());
        for i in 1..=k {
            if kept.contains(&i) {
                put(Self::vertex(i), Self::vertex(i));
            } else {
                put(Self::vertex(i), self.piece(seg(i, true)));
            }
        }
        for i in 0..=k {
            put(self.piece(i), self.piece(seg(i, false)));
        }
        for g in &self.generators[1..] {
            put(g.clone(), g.clone());
        }
        if self.relator.is_some() {
            put("F".into(), "F".into());
        }
        Ok(Triangulation { morse, carriers })
    }
}

fn segment_starts(kept: &[usize]) -> Vec<usize> {
    let mut s: Vec<usize> = std::iter::once(0).chain(kept.iter().copied()).collect();
    s.sort_unstable();
    s.dedup();
    s
}

pub fn triangulation_name(kept: &[usize], k: usize) -> String {
    if kept.is_empty() {
        "coarse".into()
    } else if kept.len() == k {
        "fine".into()
    } else {
        let v: Vec<String> = kept.iter().map(|i| i.to_string()).collect();
        format!("keep:{}", v.join(","))
    }
}
