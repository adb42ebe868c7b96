//! Two-level model of a quasi-degenerate pair `(F_n, F_{−n})` and its
//! large-`a` limit.

use crate::error::{Error, Result};
use crate::geometry::{Current, Geometry};
use crate::integrals::{log2_integral, AspectRatio};
use crate::operators::{free_element, interaction_element, interaction_linear, interaction_quadratic};

/// Solution of `[[1+δ, ε], [ε, 1−δ]] v = α v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelSolution {
    pub alpha_plus: f64,
    pub alpha_minus: f64,
    pub v_plus: [f64; 2],
    pub v_minus: [f64; 2],
    /// `v± = (cos θ±, sin θ±)`, `θ± ∈ [−π/2, π/2]`.
    pub theta_plus: f64,
    pub theta_minus: f64,
    /// Set when `ε = δ = 0`; vectors are then the canonical basis.
    pub degenerate: bool,
}

/// Second component of the `±` eigenvector with the first fixed to one,
/// `(±r − δ)/ε`, written to avoid cancellation when `δ/ε` is large.
fn ratio_component(sign: f64, eps: f64, delta: f64, r: f64) -> f64 {
    if sign * delta > 0.0 {
        sign * eps / (r + sign * delta)
    } else {
        (sign * r - delta) / eps
    }
}

pub fn two_level_solve(eps: f64, delta: f64) -> TwoLevelSolution {
    let r = eps.hypot(delta);
    if r == 0.0 {
        return TwoLevelSolution {
            alpha_plus: 1.0,
            alpha_minus: 1.0,
            v_plus: [1.0, 0.0],
            v_minus: [0.0, 1.0],
            theta_plus: 0.0,
            theta_minus: std::f64::consts::FRAC_PI_2,
            degenerate: true,
        };
    }
    let vector = |sign: f64| -> ([f64; 2], f64) {
        if eps == 0.0 {
            // Diagonal matrix: the larger eigenvalue sits on the sign of δ.
            let first = (sign * delta) > 0.0;
            let theta = if first { 0.0 } else { sign * std::f64::consts::FRAC_PI_2 };
            return (if first { [1.0, 0.0] } else { [0.0, sign] }, theta);
        }
        let y = ratio_component(sign, eps, delta, r);
        let norm = 1.0 / (1.0 + y * y).sqrt();
        ([norm, y * norm], y.atan())
    };
    let (v_plus, theta_plus) = vector(1.0);
    let (v_minus, theta_minus) = vector(-1.0);
    TwoLevelSolution {
        alpha_plus: 1.0 + r,
        alpha_minus: 1.0 - r,
        v_plus,
        v_minus,
        theta_plus,
        theta_minus,
        degenerate: false,
    }
}

/// `A_I [[1+δ_I, ε_I], [ε_I, 1−δ_I]]`, the Hamiltonian restricted to `(F_n, F_{−n})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelParams {
    pub a_i: f64,
    pub delta_i: f64,
    pub eps_i: f64,
}

impl TwoLevelParams {
    pub fn ratio(&self) -> f64 {
        self.delta_i / self.eps_i
    }

    /// `A_I(1 ± √(ε_I² + δ_I²))`, larger first.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let s = two_level_solve(self.eps_i, self.delta_i);
        (self.a_i * s.alpha_plus, self.a_i * s.alpha_minus)
    }

    /// Whether the pair is deep enough in the decoupled regime, `|δ_I/ε_I| ≥ min`.
    pub fn gated(&self, min: f64) -> bool {
        self.ratio().abs() >= min
    }
}

fn require_pair(n: i64) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("two-level model needs n >= 2, got {n}")));
    }
    Ok(())
}

/// Unperturbed `A` and `ε` of the pair.
pub fn free_two_level(a: AspectRatio, n: i64, m: i64) -> (f64, f64) {
    let big_a = free_element(a, m, n, n);
    (big_a, free_element(a, m, -n, n) / big_a)
}

/// Two-level parameters from the exact `2×2` block of `H̃_free + H̃_I(i)`.
pub fn exact_two_level_params(g: &Geometry, n: i64, m: i64, i: Current) -> Result<TwoLevelParams> {
    require_pair(n)?;
    let a = g.a;
    let h_pp = free_element(a, m, n, n) + interaction_element(g, n, 0, i)?.re;
    let h_mm = free_element(a, m, -n, -n) + interaction_element(g, -n, 0, i)?.re;
    let h_mp = free_element(a, m, -n, n) + interaction_element(g, n, 2 * n, i)?.re;
    let a_i = 0.5 * (h_pp + h_mm);
    Ok(TwoLevelParams {
        a_i,
        delta_i: 0.5 * (h_pp - h_mm) / a_i,
        eps_i: h_mp / a_i,
    })
}

/// `A + (i²/8) λ {λ − 2 ln a + I^(ln²)_2 + I^(ln²)_0}`, the closed display of `A_I`.
pub fn a_i_closed(g: &Geometry, n: i64, m: i64, i: Current) -> Result<f64> {
    let a = g.a;
    let lam = g.lambda();
    let x = i.get();
    let extra = lam - 2.0 * a.get().ln() + log2_integral(a, 2)? + log2_integral(a, 0)?;
    Ok(free_element(a, m, n, n) + x * x / 8.0 * lam * extra)
}

/// `a²(n² − ¼) + (i²/8) λ ln(2L/R)`, the large-`a` display of `A_I`.
pub fn a_i_large_a(g: &Geometry, n: i64, i: Current) -> f64 {
    let av = g.a.get();
    let nf = n as f64;
    let x = i.get();
    av * av * (nf * nf - 0.25) + x * x / 8.0 * g.lambda() * (2.0 * g.l_over_r).ln()
}

fn harmonic(k: i64) -> f64 {
    (1..=k).map(|j| 1.0 / j as f64).sum()
}

/// Coefficients of `δ_I/ε_I = k₁x/(1 + k₂x + k₃x²)`, `x = i`, for `a ≫ 1`, `n ≥ 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KCoefficients {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub n: i64,
    pub m: i64,
}

impl KCoefficients {
    pub fn denominator(&self, x: f64) -> f64 {
        1.0 + self.k2 * x + self.k3 * x * x
    }

    pub fn ratio(&self, x: f64) -> f64 {
        self.k1 * x / self.denominator(x)
    }

    /// `k₁(1 − k₃x²)/D(x)²`.
    pub fn ratio_derivative(&self, x: f64) -> f64 {
        let d = self.denominator(x);
        self.k1 * (1.0 - self.k3 * x * x) / (d * d)
    }
}

/// Large-`a` coefficients `k₁, k₂, k₃`. Accuracy degrades for `a < 2`.
pub fn k_coefficients(a: AspectRatio, n: i64, m: i64, l_over_r: f64) -> Result<KCoefficients> {
    require_pair(n)?;
    let av = a.get();
    let nf = n as f64;
    let mm = (m * m) as f64 - 0.25;
    let p = 2f64.powi(2 * n as i32 - 3);
    let k1 = nf * (2.0 * av).powi(2 * n as i32) / (2.0 * (2.0 * nf + 1.0) * mm);
    let k2 = -p * av * av / mm
        * (harmonic(2 * n - 2) + 2.0 * (3.0 * nf - 1.0) / (nf * (2.0 * nf - 1.0)) - 1.0 / (p * (2.0 * nf - 1.0)))
        / (2.0 * nf + 1.0);
    let k3 = p / 4.0 * av * av / mm * ((2.0 + harmonic(2 * n - 3)) * av.ln() + (2.0 * l_over_r).ln() / p)
        / ((2.0 * nf + 1.0) * (nf - 1.0));
    Ok(KCoefficients { k1, k2, k3, n, m })
}

/// Coefficients read off the exact `2×2` block, for which
/// `δ_I/ε_I = k₁x/(1 + k₂x + k₃x²)` holds identically at any `a`:
/// `k₁ = a n q / h`, `k₂ = h₁/h`, `k₃ = h₂/h` with `h` the free off-diagonal
/// and `h₁, h₂` the linear and quadratic parts of the interaction one.
pub fn exact_k_coefficients(g: &Geometry, n: i64, m: i64) -> Result<KCoefficients> {
    require_pair(n)?;
    let off = free_element(g.a, m, -n, n);
    Ok(KCoefficients {
        k1: g.a.get() * n as f64 * g.a.decay() / off,
        k2: interaction_linear(g, n, 2 * n)? / off,
        k3: interaction_quadratic(g, 2 * n)? / off,
        n,
        m,
    })
}

/// Current `x_d > 0` at which `δ_I/ε_I` diverges (`m = 0` pattern, `k₃ < 0`).
pub fn divergence_current(k: &KCoefficients) -> Result<f64> {
    if k.k3 >= 0.0 {
        return Err(Error::SignPattern(format!(
            "divergence needs k3 < 0 (m = 0), got k3 = {}",
            k.k3
        )));
    }
    Ok((-k.k2 - (k.k2 * k.k2 - 4.0 * k.k3).sqrt()) / (2.0 * k.k3))
}

/// `(1/√k₃, k₁/(k₂ + 2√k₃))`: where `δ_I/ε_I` peaks and its value (`m ≠ 0`).
pub fn peak_current_and_ratio(k: &KCoefficients) -> Result<(f64, f64)> {
    if k.k3 <= 0.0 {
        return Err(Error::SignPattern(format!(
            "a peak needs k3 > 0 (m != 0), got k3 = {}",
            k.k3
        )));
    }
    let r = k.k3.sqrt();
    Ok((1.0 / r, k.k1 / (k.k2 + 2.0 * r)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub split: f64,
    /// `(⟨T̃₃⟩` of the upper level `F_n`, of the lower level `F_{−n})`.
    pub t3_pair: (f64, f64),
}

/// Decoupled-limit observables: `ΔẼ_n = n·i`, `⟨T̃₃⟩ = ∓5n/2`.
pub fn predicted_observables(n: i64, i: Current) -> Prediction {
    let nf = n as f64;
    Prediction {
        split: nf * i.get(),
        t3_pair: (-2.5 * nf, 2.5 * nf),
    }
}

/// Large-`a` values of the three `2×2` elements (free plus interaction).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LargeAElements {
    /// `⟨F_n|H̃|F_n⟩`
    pub diag_plus: f64,
    /// `⟨F_{−n}|H̃|F_{−n}⟩`
    pub diag_minus: f64,
    /// `⟨F_{−n}|H̃|F_n⟩`
    pub off_diag: f64,
}

/// Large-`a` elements. Both diagonals use the `i²λ ln(2L/R)/8` correction
/// that also appears in the large-`a` `A_I`.
pub fn approx_large_a_elements(a: AspectRatio, n: i64, m: i64, i: Current, l_over_r: f64) -> Result<LargeAElements> {
    require_pair(n)?;
    let av = a.get();
    let nf = n as f64;
    let x = i.get();
    let mm = (m * m) as f64 - 0.25;
    let lam = (2.0 * av * l_over_r).ln();
    let l2 = (2.0 * l_over_r).ln();
    let p = 2f64.powi(2 * n as i32 - 3);

    let free_diag = av * av * (nf * nf - 0.25);
    let free_off = (2.0 * nf + 1.0) * mm / (2.0 * av).powi(2 * n as i32);
    let quad = x * x / 8.0 * lam * l2;
    let off_i = x / (8.0 * av.powi(2 * n as i32 - 2))
        * (1.0 / (p * (2.0 * nf - 1.0)) - harmonic(2 * n - 2) - 2.0 * (3.0 * nf - 1.0) / (nf * (2.0 * nf - 1.0))
            + x / (4.0 * (nf - 1.0)) * (l2 / p + av.ln() * (2.0 + harmonic(2 * n - 3))));
    Ok(LargeAElements {
        diag_plus: free_diag + nf * x / 2.0 + quad,
        diag_minus: free_diag - nf * x / 2.0 + quad,
        off_diag: free_off + off_i,
    })
}

impl LargeAElements {
    pub fn params(&self) -> TwoLevelParams {
        let a_i = 0.5 * (self.diag_plus + self.diag_minus);
        TwoLevelParams {
            a_i,
            delta_i: 0.5 * (self.diag_plus - self.diag_minus) / a_i,
            eps_i: self.off_diag / a_i,
        }
    }
}

/// Whether pair `n` of an ascending spectrum is isolated: both neighbouring
/// gaps are at least `factor` times the intra-pair gap.
pub fn pair_isolated(energies: &[f64], n: usize, factor: f64) -> bool {
    if n == 0 || 2 * n + 1 >= energies.len() {
        return false;
    }
    let gap = energies[2 * n] - energies[2 * n - 1];
    let below = energies[2 * n - 1] - energies[2 * n - 2];
    let above = energies[2 * n + 1] - energies[2 * n];
    below.min(above) >= factor * gap
}
