//! Complex gamma function, incomplete-gamma pieces and a composite
//! Gauss-Legendre rule used by the split zeta functions.

use std::f64::consts::PI;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;
use num_complex::Complex64;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos_sum(z: Complex64) -> Complex64 {
    let mut x = Complex64::new(LANCZOS[0], 0.0);
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    x
}

/// `ln Gamma(z)` for `Re z >= 0.5` (principal branch of the Lanczos form).
pub fn ln_gamma(z: Complex64) -> Complex64 {
    debug_assert!(z.re >= 0.5);
    let z = z - 1.0;
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + lanczos_sum(z).ln()
}

pub fn gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        PI / ((PI * z).sin() * gamma(1.0 - z))
    } else {
        ln_gamma(z).exp()
    }
}

/// `1/Gamma(z)`, entire; exactly zero at `z = 0`.
pub fn rgamma(z: Complex64) -> Complex64 {
    if z == Complex64::new(0.0, 0.0) {
        return Complex64::new(0.0, 0.0);
    }
    if z.re < 0.5 {
        (PI * z).sin() / PI * gamma(1.0 - z)
    } else {
        (-ln_gamma(z)).exp()
    }
}

pub fn ln_factorial(k: usize) -> f64 {
    ln_gamma(Complex64::new(k as f64 + 1.0, 0.0)).re
}

/// Digamma at positive integers, `psi(k+1) = H_k - gamma`.
pub fn digamma_int(k: usize) -> f64 {
    (1..=k).map(|j| 1.0 / j as f64).sum::<f64>() - EULER_GAMMA
}

/// Index window of a Poisson(`lambda`) weight sequence outside of which the
/// weights are below double precision relevance.
fn poisson_window(lambda: f64) -> (usize, usize) {
    let spread = 40.0 * lambda.sqrt() + 40.0;
    let lo = (lambda - spread).max(0.0).floor() as usize;
    let hi = (lambda + spread).ceil() as usize;
    (lo, hi)
}

fn poisson_weight(lambda: f64, k: usize) -> f64 {
    (k as f64 * lambda.ln() - lambda - ln_factorial(k)).exp()
}

/// `lambda^{-s} P(s, lambda)` with `P` the regularized lower incomplete gamma,
/// written as `e^{-lambda} sum_k lambda^k / Gamma(s + k + 1)`.
pub fn lower_regularized_scaled(s: Complex64, lambda: f64) -> Complex64 {
    let (lo, hi) = poisson_window(lambda);
    let mut acc = Complex64::new(0.0, 0.0);
    for k in lo..=hi {
        let w = poisson_weight(lambda, k);
        if w == 0.0 {
            continue;
        }
        let arg = s + (k as f64 + 1.0);
        let ratio = if arg.re >= 0.5 {
            (ln_gamma(Complex64::new(k as f64 + 1.0, 0.0)) - ln_gamma(arg)).exp()
        } else {
            rgamma(arg) * ln_factorial(k).exp()
        };
        acc += w * ratio;
    }
    acc
}

/// Derivative in `s` at `s = 0` of [`lower_regularized_scaled`]:
/// `-e^{-lambda} sum_k lambda^k psi(k+1) / k!`.
pub fn lower_regularized_scaled_ds0(lambda: f64) -> f64 {
    let (lo, hi) = poisson_window(lambda);
    let mut h = (1..=lo).map(|j| 1.0 / j as f64).sum::<f64>();
    let mut acc = 0.0;
    for k in lo..=hi {
        if k > lo {
            h += 1.0 / k as f64;
        }
        acc += poisson_weight(lambda, k) * (h - EULER_GAMMA);
    }
    -acc
}

fn gl_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(24).expect("24-point rule"))
}

/// Composite Gauss-Legendre on `[a, b]` with `panels` equal pieces.
pub fn integrate<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, panels: usize) -> Complex64 {
    let rule = gl_rule();
    let h = (b - a) / panels as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let hi = lo + h;
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        for (x, w) in rule.iter() {
            acc += *w * half * f(mid + half * x);
        }
    }
    acc
}

/// `int_1^inf t^{s-1} e^{-lambda t} dt`, evaluated in `x = ln t`.
pub fn upper_tail_integral(s: Complex64, lambda: f64) -> Complex64 {
    if lambda > 700.0 {
        return Complex64::new(0.0, 0.0);
    }
    // beyond x_max the factor e^{-lambda e^x} is below e^{-800}
    let x_max = ((800.0 + 8.0 * s.re.abs()) / lambda).ln().max(1.0);
    let panels = ((x_max / 0.25).ceil() as usize).max(4);
    integrate(|x| ((s * x) - lambda * x.exp()).exp(), 0.0, x_max, panels)
}

/// Exponential integral `E_1(lambda)`.
pub fn exp_integral_e1(lambda: f64) -> f64 {
    upper_tail_integral(Complex64::new(0.0, 0.0), lambda).re
}
