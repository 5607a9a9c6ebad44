//! Multiplication operators on refined grids of the circle: empirical
//! spectral measures, the determinant-class integral and a divergence probe.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::complex::TorsionMode;
use crate::error::{Error, Result};
use crate::linalg::{c, CMat, MatrixComplex};
use crate::vna::SpectralData;

/// Samples of `alpha` on a grid of size `n`. `log_abs` holds `log |alpha|`,
/// computed analytically where the family allows so that values far below
/// the smallest double keep their size.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub samples: Vec<Complex64>,
    pub log_abs: Vec<f64>,
}

/// Named function families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    /// `alpha = value`.
    Constant { value: f64 },
    /// `alpha(x) = e^{2 pi i x} - 1`.
    Circle,
    /// `alpha(x) = exp(-1/x^2)`.
    Flat,
}

impl Family {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "circle" => Ok(Family::Circle),
            "flat" => Ok(Family::Flat),
            _ => match s.strip_prefix("constant:") {
                Some(v) => {
                    let value = v.parse().map_err(|_| Error::Parameter(format!("bad constant in {s:?}")))?;
                    Ok(Family::Constant { value })
                }
                None => Err(Error::Parameter(format!("unknown function family {s:?}"))),
            },
        }
    }

    pub fn name(&self) -> String {
        match self {
            Family::Constant { value } => format!("constant:{value}"),
            Family::Circle => "circle".into(),
            Family::Flat => "flat".into(),
        }
    }

    /// Sample at the midpoints `x_j = (j + 1/2)/n`.
    pub fn grid(&self, n: usize) -> Result<GridFunction> {
        if n < 2 {
            return Err(Error::Parameter(format!("grid size must be at least 2, got {n}")));
        }
        let xs = (0..n).map(|j| (j as f64 + 0.5) / n as f64);
        let (samples, log_abs) = match self {
            Family::Constant { value } => {
                if !value.is_finite() {
                    return Err(Error::Parameter(format!("constant {value} is not finite")));
                }
                (vec![c(*value); n], vec![value.abs().ln(); n])
            }
            Family::Circle => xs
                .map(|x| {
                    let z = Complex64::from_polar(1.0, 2.0 * PI * x) - 1.0;
                    (z, (2.0 * (PI * x).sin()).abs().ln())
                })
                .unzip(),
            Family::Flat => xs
                .map(|x| {
                    let l = -1.0 / (x * x);
                    (c(l.exp()), l)
                })
                .unzip(),
        };
        Ok(GridFunction { samples, log_abs })
    }
}

impl GridFunction {
    /// Arbitrary finite samples, e.g. a symbol evaluated at roots of unity.
    pub fn from_samples(samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Parameter(format!("grid size must be at least 2, got {}", samples.len())));
        }
        if samples.iter().any(|z| !z.is_finite()) {
            return Err(Error::Parameter("grid samples must be finite".into()));
        }
        let log_abs = samples.iter().map(|z| z.norm().ln()).collect();
        Ok(GridFunction { samples, log_abs })
    }

    /// `1 - e^{2 pi i j / m}`, `j = 0..m`: the symbol of `1 - g` on `Z/m`.
    pub fn roots_pattern(m: usize) -> Result<Self> {
        Self::from_samples((0..m).map(|j| 1.0 - Complex64::from_polar(1.0, 2.0 * PI * j as f64 / m as f64)).collect())
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }
}

/// `|alpha(x_j)|`, each with multiplicity `1/n`.
pub fn mult_spectrum(f: &GridFunction) -> SpectralData {
    let v: Vec<f64> = f.log_abs.iter().map(|l| l.exp()).collect();
    SpectralData::from_samples(&v).expect("grid values are finite")
}

/// `(1/n) sum_{0 < |alpha_j| <= 1} log |alpha_j|`.
pub fn partial_logdet(f: &GridFunction) -> f64 {
    let s: f64 = f.log_abs.iter().filter(|l| l.is_finite() && **l <= 0.0).sum();
    s / f.n() as f64
}

/// `(1/2)(1/n) sum log |alpha_j|^2`. Strict mode refuses exact zeros; lenient
/// mode drops them, as the off-kernel torsion does.
pub fn circle_torsion(f: &GridFunction, mode: TorsionMode) -> Result<f64> {
    let zeros = f.log_abs.iter().filter(|l| !l.is_finite()).count();
    if zeros > 0 && mode == TorsionMode::Strict {
        return Err(Error::Singular(format!("alpha vanishes at {zeros} grid points; not of determinant class on this grid")));
    }
    let s: f64 = f.log_abs.iter().filter(|l| l.is_finite()).sum();
    Ok(s / f.n() as f64)
}

/// `C^0 -> C^1` with `delta = -M_alpha` and trace `(1/n) tr`.
pub fn circle_complex(f: &GridFunction) -> Result<MatrixComplex> {
    let n = f.n();
    let d = CMat::from_diagonal(&nalgebra::DVector::from_iterator(n, f.samples.iter().map(|z| -z)));
    MatrixComplex::new(vec![n, n], vec![d], 1.0 / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Convergent,
    Divergent,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::Convergent => "CONVERGENT",
            Verdict::Divergent => "DIVERGENT",
            Verdict::Inconclusive => "INCONCLUSIVE",
        };
        write!(f, "{s}")
    }
}

/// Spread allowed among the last three refinements for convergence.
pub const CAUCHY_TOL: f64 = 0.05;
/// Every increment must fall below minus this for divergence.
pub const DIVERGENCE_STEP: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceReport {
    pub grids: Vec<usize>,
    pub partial: Vec<f64>,
    /// Strict circle torsion, `None` where `alpha` vanishes on the grid.
    pub torsion: Vec<Option<f64>>,
    pub verdict: Verdict,
}

pub fn divergence_probe(family: &Family, grids: &[usize]) -> Result<DivergenceReport> {
    if grids.len() < 3 {
        return Err(Error::Parameter(format!("divergence probe needs at least 3 grids, got {}", grids.len())));
    }
    if grids.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Parameter("grid sizes must increase".into()));
    }
    let mut partial = Vec::new();
    let mut torsion = Vec::new();
    for &n in grids {
        let f = family.grid(n)?;
        partial.push(partial_logdet(&f));
        torsion.push(circle_torsion(&f, TorsionMode::Strict).ok());
    }
    Ok(DivergenceReport { grids: grids.to_vec(), verdict: verdict(&partial), partial, torsion })
}

pub fn verdict(partial: &[f64]) -> Verdict {
    let last = &partial[partial.len().saturating_sub(3)..];
    let lo = last.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = last.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= CAUCHY_TOL {
        return Verdict::Convergent;
    }
    let steps: Vec<f64> = partial.windows(2).map(|w| w[1] - w[0]).collect();
    if steps.len() >= 3 && steps.iter().all(|s| *s <= -DIVERGENCE_STEP) {
        return Verdict::Divergent;
    }
    Verdict::Inconclusive
}
