use serde::Serialize;

use crate::error::{Error, Result};

/// Relative agreement between successive doublings that counts as converged.
pub const QUADRATURE_RTOL: f64 = 1e-10;
/// Largest subinterval count tried before giving up.
pub const QUADRATURE_MAX_N: usize = 1 << 20;
/// Convergence is not accepted below this many subintervals, which keeps
/// low harmonics from aliasing to a false agreement.
const MIN_ACCEPT_N: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quadrature {
    pub value: f64,
    /// Subintervals used for `value`.
    pub n: usize,
    /// `|Q(n) − Q(n/2)|` at termination.
    pub change: f64,
    pub converged: bool,
}

/// Composite Simpson rule with `n` (even) subintervals.
pub fn simpson<G: Fn(f64) -> f64>(g: &G, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for j in 1..n {
        let v = g(a + j as f64 * h);
        if j % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    h / 3.0 * (g(a) + g(b) + 4.0 * odd + 2.0 * even)
}

/// Composite Simpson from `n` subintervals, doubling until successive values
/// agree to [`QUADRATURE_RTOL`] relative to `∫|g|`, capped at
/// [`QUADRATURE_MAX_N`]. Non-convergence is reported in the result.
pub fn quadrature<G: Fn(f64) -> f64>(g: G, a: f64, b: f64, n: usize) -> Result<Quadrature> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::Precondition(format!(
            "Simpson needs an even subinterval count ≥ 2, got {n}"
        )));
    }
    if !(b > a) {
        return Err(Error::Precondition(format!("need b > a, got [{a}, {b}]")));
    }
    let abs_g = |t: f64| g(t).abs();
    let mut n = n.min(QUADRATURE_MAX_N);
    let mut prev = simpson(&g, a, b, n);
    loop {
        if n >= QUADRATURE_MAX_N {
            return Ok(Quadrature {
                value: prev,
                n,
                change: f64::NAN,
                converged: false,
            });
        }
        let next_n = 2 * n;
        let next = simpson(&g, a, b, next_n);
        let change = (next - prev).abs();
        let scale = next.abs().max(simpson(&abs_g, a, b, next_n));
        if next_n >= MIN_ACCEPT_N && change <= QUADRATURE_RTOL * scale {
            return Ok(Quadrature {
                value: next,
                n: next_n,
                change,
                converged: true,
            });
        }
        if next_n >= QUADRATURE_MAX_N {
            return Ok(Quadrature {
                value: next,
                n: next_n,
                change,
                converged: false,
            });
        }
        prev = next;
        n = next_n;
    }
}
