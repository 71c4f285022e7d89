//! Bessel function of the first kind, order zero.

use std::f64::consts::{FRAC_PI_4, PI};

/// Below this argument the power series is used, above it the Hankel
/// asymptotic expansion. At 12 both stay well under 1e-12 absolute error:
/// the largest series term is ~4e3 (cancellation costs ~4 digits) and the
/// smallest asymptotic term is ~e^{-24}.
const SERIES_LIMIT: f64 = 12.0;

pub fn bessel_j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax < SERIES_LIMIT {
        series(ax)
    } else {
        asymptotic(ax)
    }
}

fn series(x: f64) -> f64 {
    // Σ_k (-1)^k (x²/4)^k / (k!)²
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= -q / (k * k);
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) && k > q.sqrt() {
            break;
        }
        k += 1.0;
        if k > 200.0 {
            break;
        }
    }
    sum
}

fn asymptotic(x: f64) -> f64 {
    // J0(x) ≈ √(2/(πx)) (P cos χ − Q sin χ), χ = x − π/4, with
    // a_k = Π_{j=1..k} (2j−1)² / (k! 8^k) and alternating even/odd parts.
    let mut p = 0.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut prev = f64::INFINITY;
    for k in 0..60 {
        let term = a / x.powi(k);
        if term > prev {
            break;
        }
        prev = term;
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * term;
        } else {
            q += sign * term;
        }
        if term < 1e-17 {
            break;
        }
        let j = (k + 1) as f64;
        a *= (2.0 * j - 1.0).powi(2) / (j * 8.0);
    }
    let chi = x - FRAC_PI_4;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() + q * chi.sin())
}
