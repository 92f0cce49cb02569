//! Root extraction for monic polynomials with real coefficients: closed
//! forms for degrees one and two, Durand-Kerner simultaneous iteration plus
//! Newton polishing above that. Conjugate pairs are symmetrized so that real
//! roots come out exactly real.

use num::complex::Complex64;

/// Horner evaluation; `coeffs` ascending.
pub fn eval(coeffs: &[f64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

fn eval_derivative(coeffs: &[f64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, c) in coeffs.iter().enumerate().skip(1).rev() {
        acc = acc * z + i as f64 * c;
    }
    acc
}

/// All roots of a monic polynomial given by ascending coefficients
/// (the leading 1 included). Degree must be at least 1.
pub fn monic_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let degree = coeffs.len() - 1;
    assert!(degree >= 1, "constant polynomial has no roots");
    let mut roots = match degree {
        1 => vec![Complex64::new(-coeffs[0], 0.0)],
        2 => quadratic_roots(coeffs[1], coeffs[0]),
        _ => durand_kerner(coeffs),
    };
    for root in roots.iter_mut() {
        *root = polish(coeffs, *root);
    }
    symmetrize_conjugates(&mut roots);
    roots.sort_by(|a, b| {
        b.re.partial_cmp(&a.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
    roots
}

/// Roots of x^2 + p x + q, numerically stable against cancellation.
fn quadratic_roots(p: f64, q: f64) -> Vec<Complex64> {
    let disc = p * p - 4.0 * q;
    if disc >= 0.0 {
        let r = -0.5 * (p + p.signum() * disc.sqrt());
        if r == 0.0 {
            return vec![Complex64::new(0.0, 0.0), Complex64::new(-p, 0.0)];
        }
        vec![Complex64::new(r, 0.0), Complex64::new(q / r, 0.0)]
    } else {
        let im = 0.5 * (-disc).sqrt();
        vec![Complex64::new(-0.5 * p, im), Complex64::new(-0.5 * p, -im)]
    }
}

fn durand_kerner(coeffs: &[f64]) -> Vec<Complex64> {
    let degree = coeffs.len() - 1;
    // Cauchy-style radius; initial points on a slightly irrational spiral so
    // that no starting point is a root or conjugate-symmetric trap.
    let radius = 1.0 + coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..degree)
        .map(|i| seed.powu(i as u32 + 1) / seed.norm().powi(i as i32) * radius * 0.7)
        .collect();
    for _ in 0..400 {
        let mut max_step = 0.0f64;
        for i in 0..degree {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..degree {
                if j != i {
                    denom *= roots[i] - roots[j];
                }
            }
            if denom.norm() == 0.0 {
                // Coincident iterates; nudge apart and retry next sweep.
                roots[i] += Complex64::new(1e-8 * radius, 1e-8 * radius);
                continue;
            }
            let step = eval(coeffs, roots[i]) / denom;
            roots[i] -= step;
            max_step = max_step.max(step.norm());
        }
        if max_step < 1e-14 * radius {
            break;
        }
    }
    roots
}

fn polish(coeffs: &[f64], mut root: Complex64) -> Complex64 {
    for _ in 0..4 {
        let d = eval_derivative(coeffs, root);
        if d.norm() == 0.0 {
            break;
        }
        let step = eval(coeffs, root) / d;
        root -= step;
        if step.norm() <= 1e-16 * (1.0 + root.norm()) {
            break;
        }
    }
    root
}

/// Real coefficients force roots into conjugate pairs; enforce the symmetry
/// exactly and collapse numerically-real roots onto the real axis.
fn symmetrize_conjugates(roots: &mut [Complex64]) {
    for root in roots.iter_mut() {
        if root.im.abs() <= 1e-11 * (1.0 + root.re.abs()) {
            root.im = 0.0;
        }
    }
    let mut paired = vec![false; roots.len()];
    for i in 0..roots.len() {
        if paired[i] || roots[i].im == 0.0 {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for j in (i + 1)..roots.len() {
            if paired[j] || roots[j].im == 0.0 {
                continue;
            }
            let gap = (roots[j].conj() - roots[i]).norm();
            if best.map_or(true, |(_, g)| gap < g) {
                best = Some((j, gap));
            }
        }
        if let Some((j, gap)) = best {
            if gap <= 1e-8 * (1.0 + roots[i].norm()) {
                let z = 0.5 * (roots[i] + roots[j].conj());
                roots[i] = z;
                roots[j] = z.conj();
                paired[i] = true;
                paired[j] = true;
            }
        }
    }
}
