//! Gamma function on the complex plane via the Lanczos approximation
//! (g = 7, 9 coefficients, the GNU Scientific Library table), with the Euler
//! reflection formula for arguments left of Re(z) = 1/2.
//!
//! Relative accuracy on the domain this crate needs (|z| up to a few tens,
//! away from the poles) is on the order of 1e-13; the unit tests pin
//! Gamma(1/2), Gamma(1) and the recurrence Gamma(z+1) = z Gamma(z) at 1e-12.

use num::complex::Complex64;
use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;

const LANCZOS_COEFFICIENTS: [f64; 9] = [
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
];

/// Gamma at a complex argument. Returns a non-finite value at the poles
/// (non-positive integers).
pub fn gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // Reflection: Gamma(z) = pi / (sin(pi z) Gamma(1 - z)).
        let sin_piz = (PI * z).sin();
        return PI / (sin_piz * gamma(Complex64::new(1.0, 0.0) - z));
    }
    let z = z - 1.0;
    let mut acc = Complex64::new(LANCZOS_COEFFICIENTS[0], 0.0);
    for (i, coefficient) in LANCZOS_COEFFICIENTS.iter().enumerate().skip(1) {
        acc += coefficient / (z + i as f64);
    }
    let w = z + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * w.powc(z + 0.5) * (-w).exp() * acc
}

/// Gamma restricted to the real line.
pub fn gamma_real(x: f64) -> f64 {
    gamma(Complex64::new(x, 0.0)).re
}
