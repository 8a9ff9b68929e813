//! Oracles shared by the integration tests.
#![allow(dead_code)]

/// `J₀(x)` and `J₁(x)` from their power series; adequate for `|x| ≲ 10`.
pub fn bessel_j01(x: f64) -> (f64, f64) {
    let q = -(x * x) / 4.0;
    let (mut t0, mut t1) = (1.0, x / 2.0);
    let (mut j0, mut j1) = (t0, t1);
    for k in 1..60 {
        let k = k as f64;
        t0 *= q / (k * k);
        t1 *= q / (k * (k + 1.0));
        j0 += t0;
        j1 += t1;
    }
    (j0, j1)
}

/// First positive zero of `J₀' = −J₁`, by bisection.
pub fn first_neumann_root() -> f64 {
    let (mut lo, mut hi) = (3.0, 4.5);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bessel_j01(mid).1 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
