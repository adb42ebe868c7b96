//! Equal-spaced trapezoid quadrature over one period.
//!
//! For a smooth 2π-periodic integrand the trapezoid sum converges
//! geometrically in the number of points, which makes it the reference
//! oracle for every closed form in this crate.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default agreement required between successive refinements.
pub const DEFAULT_TOLERANCE: f64 = 1e-13;
/// Largest grid the refinement ladder will try.
pub const MAX_POINTS: usize = 1 << 18;

/// Plain integral `∫_0^{2π} f(θ) dθ` by the `points`-point trapezoid sum.
///
/// The raw sum returns the unnormalized integral, so `f = 1` gives `2π`.
/// Divide by `2π` (or call [`mean`]) for the Fourier-coefficient convention.
pub fn periodic<F>(f: F, points: usize) -> Complex64
where
    F: Fn(f64) -> Complex64,
{
    assert!(points >= 1);
    let h = 2.0 * PI / points as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 0..points {
        sum += f(k as f64 * h);
    }
    sum * h
}

/// `(1/2π) ∫_0^{2π} f(θ) dθ` by the trapezoid sum.
pub fn mean<F>(f: F, points: usize) -> Complex64
where
    F: Fn(f64) -> Complex64,
{
    periodic(f, points) / (2.0 * PI)
}

/// Outcome of a refinement ladder.
#[derive(Debug, Clone, Copy)]
pub struct Refined {
    pub value: Complex64,
    pub points: usize,
}

/// Doubles the grid, starting from `start` points, until two successive
/// normalized means differ by less than `tol` in absolute value.
pub fn refine_mean<F>(f: F, start: usize, tol: f64) -> Result<Refined>
where
    F: Fn(f64) -> Complex64,
{
    let mut points = start.max(8).next_power_of_two();
    let mut previous = mean(&f, points);
    loop {
        let next_points = points * 2;
        if next_points > MAX_POINTS {
            return Err(Error::QuadratureNonConvergence {
                points,
                previous: previous.re,
                last: previous.re,
            });
        }
        // Reuse the coarse sum: the doubled grid only adds the midpoints.
        let h = 2.0 * PI / next_points as f64;
        let mut mid = Complex64::new(0.0, 0.0);
        for k in 0..points {
            mid += f((2 * k + 1) as f64 * h);
        }
        let next = 0.5 * previous + mid / next_points as f64;
        if (next - previous).norm() < tol {
            return Ok(Refined {
                value: next,
                points: next_points,
            });
        }
        if next_points == MAX_POINTS {
            return Err(Error::QuadratureNonConvergence {
                points: next_points,
                previous: previous.re,
                last: next.re,
            });
        }
        previous = next;
        points = next_points;
    }
}

/// Real-valued convenience wrapper around [`refine_mean`].
pub fn refine_mean_real<F>(f: F, start: usize, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    refine_mean(|t| Complex64::new(f(t), 0.0), start, tol).map(|r| r.value.re)
}
