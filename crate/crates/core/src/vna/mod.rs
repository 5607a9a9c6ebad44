//! Finite von Neumann algebras, Hilbert modules, module maps and their
//! spectral data.

mod backend;
mod map;
pub mod special;
mod spectral;

pub use backend::{same_backend, AlgebraBackend, Backend, BackendKind};
pub use map::{AlgebraElement, EquivariantMap, HilbertModule};
pub use spectral::{zero_tolerance, SpectralData};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// `C^infty` step: 0 on `(-inf, 0]`, 1 on `[1, inf)`, all derivatives vanishing
/// at both ends.
pub fn smooth_step(x: f64) -> f64 {
    let psi = |y: f64| if y <= 0.0 { 0.0 } else { (-1.0 / y).exp() };
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        psi(x) / (psi(x) + psi(1.0 - x))
    }
}

/// The monotone smoothing used by [`spectral_shift`]: `a` below `a`, the
/// identity above `b`, and `a <= g(x) <= x` in between.
pub fn shift_profile(x: f64, a: f64, b: f64) -> f64 {
    if x <= a {
        a
    } else if x >= b {
        x
    } else {
        a + (x - a) * smooth_step((x - a) / (b - a))
    }
}

/// Self-adjoint `f` such that `phi + f` has no spectrum below `a` and agrees
/// with `phi` on the spectral subspace above `b`.
pub fn spectral_shift(phi: &EquivariantMap, a: f64, b: f64) -> Result<EquivariantMap> {
    if !(a > 0.0 && a < b) {
        return Err(Error::Parameter(format!("need 0 < a < b, got a={a}, b={b}")));
    }
    let (vals, _) = crate::linalg::eigh(phi.expand());
    let tol = 1e-10 * phi.max_abs().max(1.0);
    if phi.self_adjoint_residual() > tol {
        return Err(Error::NotSelfAdjoint(phi.self_adjoint_residual()));
    }
    if vals.first().is_some_and(|&v| v < -tol) {
        return Err(Error::NotPositive(format!("eigenvalue {:e}", vals[0])));
    }
    phi.hermitian_fn(|x| shift_profile(x.max(0.0), a, b) - x.max(0.0))
}

/// Two readings of the change in `zeta_I(0)` under `phi -> phi + u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaDifference {
    /// `zeta_I(phi)(0) - zeta_I(phi + u)(0)`, i.e. the change in positive count.
    pub positive_count: f64,
    /// `dim ker phi - dim ker (phi + u)`.
    pub kernel: f64,
}

pub fn zeta_difference_at_zero(phi: &EquivariantMap, u: &EquivariantMap) -> Result<ZetaDifference> {
    let sum = phi.add(u)?;
    for m in [phi, u] {
        let r = m.self_adjoint_residual();
        if r > 1e-10 * m.max_abs().max(1.0) {
            return Err(Error::NotSelfAdjoint(r));
        }
    }
    let s0 = phi.spectral_data();
    let s1 = sum.spectral_data();
    let zero = Complex64::new(0.0, 0.0);
    Ok(ZetaDifference {
        positive_count: (s0.zeta_first(zero) - s1.zeta_first(zero)).re,
        kernel: s0.kernel_dim() - s1.kernel_dim(),
    })
}

/// Small-time profile `f(t) = sum_j a_j t^{alpha_j} + a_m + R(t)` with
/// `alpha_j < 0` and `R(t) = O(t^rho)`, `rho > 0`.
pub struct AsymptoticProfile {
    pub exponents: Vec<f64>,
    pub coefficients: Vec<f64>,
    pub constant: f64,
    pub remainder: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub decay: f64,
}

impl AsymptoticProfile {
    pub fn eval(&self, t: f64) -> f64 {
        self.exponents.iter().zip(&self.coefficients).map(|(al, a)| a * t.powf(*al)).sum::<f64>()
            + self.constant
            + (self.remainder)(t)
    }

    fn check(&self) -> Result<()> {
        if self.exponents.len() != self.coefficients.len() {
            return Err(Error::Parameter("exponent and coefficient counts differ".into()));
        }
        if self.exponents.iter().any(|&a| a >= 0.0) {
            return Err(Error::Parameter("singular exponents must be negative".into()));
        }
        if self.decay <= 0.0 {
            return Err(Error::Parameter("remainder decay rate must be positive".into()));
        }
        // R(t)/t^rho must stay bounded as t -> 0
        let probe = |k: i32| {
            let t = 2f64.powi(-k);
            ((self.remainder)(t) / t.powf(self.decay)).abs()
        };
        let scale = (0..8).map(probe).fold(0.0, f64::max).max(1e-300);
        if (8..60).map(probe).any(|v| !v.is_finite() || v > 1e3 * scale + 1e-12) {
            return Err(Error::Parameter("remainder does not decay at the stated rate".into()));
        }
        Ok(())
    }

    /// `int_0^1 t^{s-1} R(t) dt`, evaluated in `x = -ln t` for `Re s > -rho`.
    fn remainder_integral(&self, s: Complex64) -> Complex64 {
        let x_max = 60.0 / (self.decay + s.re).max(1e-3);
        special::integrate(|x| (self.remainder)((-x).exp()) * (-s * x).exp(), 0.0, x_max.min(745.0), 400)
    }

    /// Analytic continuation of `(1/Gamma(s)) int_0^1 t^{s-1} f(t) dt`.
    pub fn mellin(&self, s: Complex64) -> Result<Complex64> {
        self.check()?;
        let r = special::rgamma(s);
        let mut acc = Complex64::new(0.0, 0.0);
        for (al, a) in self.exponents.iter().zip(&self.coefficients) {
            let denom = s + al;
            if denom.norm() < 1e-14 {
                return Err(Error::Parameter(format!("s = {s} is a pole")));
            }
            acc += r * a / denom;
        }
        // a_m / (s Gamma(s)) = a_m / Gamma(s + 1)
        acc += self.constant * special::rgamma(s + 1.0);
        acc += r * self.remainder_integral(s);
        Ok(acc)
    }
}

/// Value at `s = 0` of the continued Mellin transform, which is the constant
/// term `a_m`.
pub fn mellin_free_term(profile: &AsymptoticProfile) -> Result<f64> {
    Ok(profile.mellin(Complex64::new(0.0, 0.0))?.re)
}
