//! The angular integral family behind every matrix element.
//!
//! All integrals use the normalized Fourier convention
//! `(1/2π) ∫_0^{2π} e^{inθ} f(θ) dθ` with `f` built from `a + cos θ`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{OnceLock, RwLock};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature;

/// Smallest accepted distance of `a` above one.
pub const MIN_EXCESS: f64 = 1e-9;

/// Below this aspect ratio the large-`a` series is outside its regime.
pub const TAYLOR_MIN_A: f64 = 10.0;

/// Truncation order used by [`taylor_log2_integral`] unless asked otherwise.
pub const DEFAULT_TAYLOR_ORDER: usize = 12;

/// Torus aspect ratio `a = R/r`, strictly above one.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct AspectRatio(f64);

impl AspectRatio {
    pub fn new(a: f64) -> Result<Self> {
        if a.is_finite() && a >= 1.0 + MIN_EXCESS {
            Ok(AspectRatio(a))
        } else {
            Err(Error::AspectRatio(a))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    /// `√(a²−1)`.
    #[inline]
    pub fn root(self) -> f64 {
        let a = self.0;
        ((a - 1.0) * (a + 1.0)).sqrt()
    }

    /// `a − √(a²−1)`, the geometric decay ratio of every Fourier tail.
    #[inline]
    pub fn decay(self) -> f64 {
        // 1/(a+s) avoids cancellation for large a.
        1.0 / (self.0 + self.root())
    }
}

/// `sgn` with `sgn(0) = 0`.
#[inline]
pub fn sgn(n: i64) -> f64 {
    match n.cmp(&0) {
        std::cmp::Ordering::Less => -1.0,
        std::cmp::Ordering::Equal => 0.0,
        std::cmp::Ordering::Greater => 1.0,
    }
}

#[inline]
pub(crate) fn delta(n: i64) -> f64 {
    if n == 0 {
        1.0
    } else {
        0.0
    }
}

/// `I_n(a) = (1/2π)∮ e^{inθ}/(a+cosθ) dθ = (−a+√(a²−1))^{|n|}/√(a²−1)`.
pub fn fourier_integral(a: AspectRatio, n: i64) -> f64 {
    let q = -a.decay();
    q.powi(n.unsigned_abs() as i32) / a.root()
}

/// `I^(ln)_n(a) = (1/2π)∮ e^{inθ} ln(a+cosθ) dθ`.
///
/// For `n ≠ 0` this is `(I_{n−1} − I_{n+1})/(2n)`, which collapses to
/// `(−1)^{|n|+1} q^{|n|}/|n|` with `q = a − √(a²−1)`.
pub fn log_integral(a: AspectRatio, n: i64) -> f64 {
    if n == 0 {
        ((a.get() + a.root()) / 2.0).ln()
    } else {
        let k = n.unsigned_abs();
        let q = a.decay();
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        sign * q.powi(k as i32) / k as f64
    }
}

/// `(I_{n−1} − I_{n+1})/(2n)` evaluated literally, `n ≠ 0`.
///
/// Kept alongside [`log_integral`] so the two routes can be compared.
pub fn log_integral_by_recurrence(a: AspectRatio, n: i64) -> f64 {
    assert!(n != 0);
    (fourier_integral(a, n - 1) - fourier_integral(a, n + 1)) / (2.0 * n as f64)
}

type Log2Cache = RwLock<HashMap<(u64, u64), f64>>;

fn log2_cache() -> &'static Log2Cache {
    static CACHE: OnceLock<Log2Cache> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// `I^(ln²)_n(a) = (1/2π)∮ cos(nθ) ln²(a+cosθ) dθ`.
///
/// Evaluated by a refined trapezoid ladder (tolerance 1e−13) and memoized
/// per `(a, |n|)`, keyed on the exact bit pattern of `a`.
pub fn log2_integral(a: AspectRatio, n: i64) -> Result<f64> {
    let k = n.unsigned_abs();
    let key = (a.get().to_bits(), k);
    if let Some(v) = log2_cache().read().expect("cache poisoned").get(&key) {
        return Ok(*v);
    }
    let v = log2_integral_uncached(a, n, quadrature::DEFAULT_TOLERANCE)?;
    log2_cache()
        .write()
        .expect("cache poisoned")
        .insert(key, v);
    Ok(v)
}

/// Uncached quadrature for [`log2_integral`] with an explicit tolerance.
pub fn log2_integral_uncached(a: AspectRatio, n: i64, tol: f64) -> Result<f64> {
    let av = a.get();
    let k = n.unsigned_abs() as f64;
    let start = (2 * n.unsigned_abs() as usize + 32).next_power_of_two();
    quadrature::refine_mean_real(
        |t| {
            let l = (av + t.cos()).ln();
            (k * t).cos() * l * l
        },
        start,
        tol,
    )
}

/// Number of memoized `I^(ln²)` values, mostly for diagnostics.
pub fn log2_cache_len() -> usize {
    log2_cache().read().expect("cache poisoned").len()
}

/// Large-`a` series for `I^(ln²)_n`.
///
/// Expands `ln²(a+cosθ) = ln²a + Σ_p (−1)^p (2/p)(H_{p−1} − ln a) cos^pθ / a^p`
/// and keeps powers `p ≤ order`, projecting each `cos^pθ` onto `e^{inθ}`
/// exactly. Meaningful for `a ≥ TAYLOR_MIN_A`; smaller values are evaluated
/// anyway (see [`in_taylor_regime`]).
pub fn taylor_log2_integral(a: AspectRatio, n: i64, order: usize) -> f64 {
    let av = a.get();
    let ln_a = av.ln();
    let k = n.unsigned_abs() as usize;
    let mut value = if k == 0 { ln_a * ln_a } else { 0.0 };
    let mut harmonic = 0.0; // H_{p-1}
    let mut inv_pow = 1.0;
    for p in 1..=order {
        inv_pow /= av;
        if p > 1 {
            harmonic += 1.0 / (p - 1) as f64;
        }
        let proj = cos_power_coefficient(p, k);
        if proj == 0.0 {
            continue;
        }
        let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
        value += sign * (2.0 / p as f64) * (harmonic - ln_a) * proj * inv_pow;
    }
    value
}

pub fn in_taylor_regime(a: AspectRatio) -> bool {
    a.get() >= TAYLOR_MIN_A
}

/// `(1/2π)∮ e^{ikθ} cos^pθ dθ = 2^{−p} C(p, (p+k)/2)` when `p ≥ k` and `p ≡ k (mod 2)`.
fn cos_power_coefficient(p: usize, k: usize) -> f64 {
    if k > p || !(p - k).is_multiple_of(2) {
        return 0.0;
    }
    let j = (p - k) / 2;
    let mut c = 1.0;
    for i in 0..j {
        c *= (p - i) as f64 / (i + 1) as f64;
    }
    c * 0.5f64.powi(p as i32)
}

/// First kernel of the toroidal-dipole element: five Kronecker deltas.
///
/// Here `n = n_2 − n_1`.
pub fn kernel_k1(n2: i64, n: i64, a: AspectRatio) -> Complex64 {
    let av = a.get();
    let n2f = n2 as f64;
    let a2 = av * av;
    let v = 0.75 * (n2f - 0.5) * delta(n + 2)
        + 0.75 * (n2f + 0.5) * delta(n - 2)
        + (4.0 * n2f * (a2 + 1.0) + a2 - 2.0) / (4.0 * av) * delta(n + 1)
        + (4.0 * n2f * (a2 + 1.0) - a2 + 2.0) / (4.0 * av) * delta(n - 1)
        + 2.5 * n2f * delta(n);
    Complex64::new(0.0, v)
}

/// Second kernel, `−i sgn(n) ((a²−1)/2) (√(a²−1) − a)^{|n|}`.
pub fn kernel_k2(n: i64, a: AspectRatio) -> Complex64 {
    let av = a.get();
    let mag = (av * av - 1.0) / 2.0 * (-a.decay()).powi(n.unsigned_abs() as i32);
    Complex64::new(0.0, -sgn(n) * mag)
}

/// Integrand definitions of the kernels, evaluated by quadrature.
pub mod oracle {
    use super::*;

    const POINTS: usize = 64;

    /// Refines until successive means agree to `1e−14` relative to the
    /// integrand's peak magnitude, which bounds the rounding floor.
    fn refine(f: impl Fn(f64) -> Complex64, k: i64) -> Result<Complex64> {
        let start = (2 * k.unsigned_abs() as usize + POINTS).next_power_of_two();
        let h = 2.0 * PI / start as f64;
        let peak = (0..start).map(|j| f(j as f64 * h).norm()).fold(1.0, f64::max);
        quadrature::refine_mean(f, start, 1e-14 * peak).map(|r| r.value)
    }

    pub fn fourier_integral(a: AspectRatio, n: i64) -> Result<f64> {
        let av = a.get();
        let nf = n as f64;
        refine(|t| Complex64::from_polar(1.0, nf * t) / (av + t.cos()), n).map(|v| v.re)
    }

    pub fn log_integral(a: AspectRatio, n: i64) -> Result<f64> {
        let av = a.get();
        let nf = n as f64;
        refine(|t| Complex64::from_polar(1.0, nf * t) * (av + t.cos()).ln(), n).map(|v| v.re)
    }

    /// `K_1(n_2, n) = (1/4πa)∮ e^{inθ}{i n_2[3a cos2θ + 4(a²+1)cosθ + 5a] + (3a cosθ − a² + 2) sinθ} dθ`.
    pub fn kernel_k1(n2: i64, n: i64, a: AspectRatio) -> Result<Complex64> {
        let av = a.get();
        let nf = n as f64;
        let n2f = n2 as f64;
        let mean = refine(
            |t| {
                let (s, c) = t.sin_cos();
                let g = 3.0 * av * (2.0 * t).cos() + 4.0 * (av * av + 1.0) * c + 5.0 * av;
                let body = Complex64::new((3.0 * av * c - av * av + 2.0) * s, n2f * g);
                Complex64::from_polar(1.0, nf * t) * body
            },
            n,
        )?;
        Ok(mean * (2.0 * PI) / (4.0 * PI * av))
    }

    /// `K_2(n) = ((a²−1)/4π)∮ e^{inθ} sinθ/(a+cosθ) dθ`.
    pub fn kernel_k2(n: i64, a: AspectRatio) -> Result<Complex64> {
        let av = a.get();
        let nf = n as f64;
        let mean = refine(
            |t| Complex64::from_polar(1.0, nf * t) * (t.sin() / (av + t.cos())),
            n,
        )?;
        Ok(mean * (2.0 * PI) * (av * av - 1.0) / (4.0 * PI))
    }
}
