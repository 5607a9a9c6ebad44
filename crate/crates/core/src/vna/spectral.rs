use num_complex::Complex64;

use super::special;
use crate::error::{Error, Result};

/// Relative zero threshold `tau = dim * eps * 64`; a value `x` is zero when
/// `x <= tau * max`.
pub fn zero_tolerance(dim: usize) -> f64 {
    dim.max(1) as f64 * f64::EPSILON * 64.0
}

/// Spectrum of `|phi|` (or of a nonnegative self-adjoint operator) as
/// `(value, von Neumann multiplicity)` pairs, sorted ascending. Zero appears
/// with the kernel dimension when the kernel is nontrivial.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pairs: Vec<(f64, f64)>,
    ambient: f64,
}

impl SpectralData {
    /// Build from raw nonnegative values, each carrying multiplicity `weight`.
    /// Values at or below `tau * max` become exactly zero and values within
    /// `tau * max` of each other are merged.
    pub fn from_values(values: &[f64], weight: f64, dim_hint: usize) -> Self {
        Self::from_values_against(values, weight, dim_hint, 0.0)
    }

    /// As [`SpectralData::from_values`], with the zero threshold taken
    /// relative to `max(reference, largest value)`.
    pub fn from_values_against(values: &[f64], weight: f64, dim_hint: usize, reference: f64) -> Self {
        let mut v: Vec<f64> = values.iter().map(|x| x.max(0.0)).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let max = v.last().copied().unwrap_or(0.0).max(reference);
        let tol = zero_tolerance(dim_hint.max(v.len())) * max;
        let mut pairs: Vec<(f64, f64, f64)> = Vec::new(); // (first, sum, mult)
        for x in v {
            let x = if x <= tol { 0.0 } else { x };
            match pairs.last_mut() {
                Some(last) if (x - last.0) <= tol && (x == 0.0) == (last.0 == 0.0) => {
                    last.1 += x * weight;
                    last.2 += weight;
                }
                _ => pairs.push((x, x * weight, weight)),
            }
        }
        let ambient = pairs.iter().map(|p| p.2).sum();
        let pairs = pairs
            .into_iter()
            .map(|(first, sum, m)| (if first == 0.0 { 0.0 } else { sum / m }, m))
            .collect();
        SpectralData { pairs, ambient }
    }

    pub fn from_pairs(pairs: Vec<(f64, f64)>) -> Result<Self> {
        if pairs.iter().any(|p| p.0 < 0.0 || p.1 < 0.0 || !p.0.is_finite()) {
            return Err(Error::Parameter("spectral pairs must be finite and nonnegative".into()));
        }
        let mut pairs = pairs;
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let ambient = pairs.iter().map(|p| p.1).sum();
        Ok(SpectralData { pairs, ambient })
    }

    /// Empirical measure of `n` samples, each of mass `1/n`; equal values
    /// merge and the total mass is exactly 1.
    pub fn from_samples(values: &[f64]) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(Error::Parameter("samples must be finite, nonnegative and nonempty".into()));
        }
        let n = values.len() as f64;
        let mut v = values.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut counts: Vec<(f64, usize)> = Vec::new();
        for x in v {
            match counts.last_mut() {
                Some(last) if last.0 == x => last.1 += 1,
                _ => counts.push((x, 1)),
            }
        }
        let pairs = counts.into_iter().map(|(x, k)| (x, k as f64 / n)).collect();
        Ok(SpectralData { pairs, ambient: n / n })
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }
    pub fn ambient_dim(&self) -> f64 {
        self.ambient
    }
    pub fn kernel_dim(&self) -> f64 {
        self.pairs.iter().filter(|p| p.0 == 0.0).map(|p| p.1).sum::<f64>() + 0.0
    }
    pub fn positive_dim(&self) -> f64 {
        self.positive().map(|p| p.1).sum::<f64>() + 0.0
    }
    fn positive(&self) -> impl Iterator<Item = &(f64, f64)> {
        self.pairs.iter().filter(|p| p.0 > 0.0)
    }
    pub fn max_value(&self) -> f64 {
        self.pairs.last().map(|p| p.0).unwrap_or(0.0)
    }
    pub fn min_positive(&self) -> Option<f64> {
        self.positive().next().map(|p| p.0)
    }

    /// `F^+(lambda)`: multiplicity of values in `(0, lambda)`.
    pub fn f_plus(&self, lambda: f64) -> f64 {
        self.positive().filter(|p| p.0 < lambda).map(|p| p.1).sum::<f64>() + 0.0
    }
    /// `F(lambda)`: multiplicity of values in `[0, lambda)`.
    pub fn f_total(&self, lambda: f64) -> f64 {
        self.pairs.iter().filter(|p| p.0 < lambda).map(|p| p.1).sum::<f64>() + 0.0
    }

    pub fn heat_trace(&self, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Err(Error::Parameter(format!("heat trace needs t > 0, got {t}")));
        }
        Ok(self.positive().map(|&(l, m)| m * (-t * l).exp()).sum())
    }

    pub fn zeta(&self, s: Complex64) -> Complex64 {
        self.positive().map(|&(l, m)| m * (-s * l.ln()).exp()).sum()
    }

    /// Small-time half: `sum m lambda^{-s} P(s, lambda)`.
    pub fn zeta_first(&self, s: Complex64) -> Complex64 {
        self.positive().map(|&(l, m)| m * special::lower_regularized_scaled(s, l)).sum()
    }

    /// Large-time half: `(1/Gamma(s)) int_1^inf t^{s-1} theta(t) dt`.
    pub fn zeta_second(&self, s: Complex64) -> Complex64 {
        let r = special::rgamma(s);
        if r == Complex64::new(0.0, 0.0) {
            return r;
        }
        r * self.positive().map(|&(l, m)| m * special::upper_tail_integral(s, l)).sum::<Complex64>()
    }

    /// `-zeta'(0)`, assembled from the two halves of the Mellin integral.
    pub fn minus_zeta_prime_at_zero(&self) -> f64 {
        self.positive()
            .map(|&(l, m)| m * (-special::lower_regularized_scaled_ds0(l) - special::exp_integral_e1(l)))
            .sum()
    }

    /// `sum m log lambda` over positive values.
    pub fn log_vol(&self) -> f64 {
        self.positive().map(|&(l, m)| m * l.ln()).sum()
    }

    /// `sum m log lambda` over values in `(0, cut]`.
    pub fn log_vol_below(&self, cut: f64) -> f64 {
        self.positive().filter(|p| p.0 <= cut).map(|&(l, m)| m * l.ln()).sum()
    }

    pub fn trace_norm(&self) -> f64 {
        self.pairs.iter().map(|&(l, m)| m * l).sum()
    }

    /// Map every value through `f` (multiplicities unchanged, then re-merged).
    pub fn map_values<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        let mut pairs: Vec<(f64, f64)> = self.pairs.iter().map(|&(l, m)| (f(l), m)).collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        SpectralData { pairs, ambient: self.ambient }
    }
}
