//! Gamma function and a few closed forms built on it.

use std::f64::consts::PI;

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

/// Stirling series correction terms for large arguments.
const STIRLING: [f64; 6] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
];

/// Natural log of |Γ(x)|.
///
/// Lanczos (g = 7) for moderate arguments, the Stirling series above 15,
/// reflection below 1/2.
pub fn ln_gamma(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= 0.0 && x == x.floor() {
        return f64::INFINITY;
    }
    if x < 0.5 {
        let s = (PI * x).sin().abs();
        return PI.ln() - s.ln() - ln_gamma(1.0 - x);
    }
    if x > 15.0 {
        let inv = 1.0 / x;
        let inv2 = inv * inv;
        let mut corr = 0.0;
        let mut pow = inv;
        for c in STIRLING {
            corr += c * pow;
            pow *= inv2;
        }
        return (x - 0.5) * x.ln() - x + 0.5 * (2.0 * PI).ln() + corr;
    }
    let z = x - 1.0;
    let mut a = LANCZOS[0];
    let t = z + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (z + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + a.ln()
}

/// Γ(x) for real x away from the poles.
pub fn gamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return f64::NAN;
    }
    if x > 0.0 && x < 20.0 && x == x.floor() {
        let mut acc = 1.0;
        let mut k = 2.0;
        while k < x {
            acc *= k;
            k += 1.0;
        }
        return acc;
    }
    let sign = if x < 0.0 && ((-x).floor() as i64) % 2 == 0 {
        -1.0
    } else {
        1.0
    };
    sign * ln_gamma(x).exp()
}

pub fn ln_factorial(k: u64) -> f64 {
    ln_gamma(k as f64 + 1.0)
}

pub fn beta(a: f64, b: f64) -> f64 {
    (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp()
}

/// Surface area of the Euclidean unit sphere in ℝⁿ.
pub fn euclidean_sphere_area(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    2.0 * PI.powf(h) / gamma(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_factorials() {
        let mut f = 1.0f64;
        for k in 1..30u64 {
            f *= k as f64;
            let rel = (ln_gamma(k as f64 + 1.0) - f.ln()).abs() / f.ln().max(1.0);
            assert!(rel < 1e-14, "k={k} rel={rel}");
        }
        assert_eq!(gamma(6.0), 120.0);
    }

    #[test]
    fn half_integers() {
        assert!((gamma(0.5) - PI.sqrt()).abs() < 1e-14);
        assert!((gamma(1.5) - PI.sqrt() / 2.0).abs() < 1e-14);
        assert!((gamma(-0.5) + 2.0 * PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn lanczos_stirling_seam() {
        for x in [14.5, 15.0, 15.0 + 1e-9, 16.0, 20.25] {
            let z = x - 1.0;
            let mut a = LANCZOS[0];
            let t = z + LANCZOS_G + 0.5;
            for (i, c) in LANCZOS.iter().enumerate().skip(1) {
                a += c / (z + i as f64);
            }
            let lanczos = 0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + a.ln();
            assert!((lanczos - ln_gamma(x)).abs() < 1e-12 * lanczos.abs());
        }
    }

    #[test]
    fn sphere_areas() {
        assert!((euclidean_sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((euclidean_sphere_area(3) - 4.0 * PI).abs() < 1e-13);
        assert!((euclidean_sphere_area(1) - 2.0).abs() < 1e-14);
    }
}
