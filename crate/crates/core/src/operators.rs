//! Matrix elements and assembled matrices of the free Hamiltonian, the
//! wire interaction and the toroidal dipole `T₃`.
//!
//! Signed-basis elements are written `⟨F_{n₁}|O|F_{n₂}⟩` with `n = n₂ − n₁`.
//! In that basis every element is real, so the assembled operators are
//! stored as real matrices and only promoted to complex on request.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::basis::{BasisKind, BasisSpec, Parity};
use crate::error::{Error, Result};
use crate::geometry::{Current, Geometry};
use crate::integrals::{delta, fourier_integral, log2_integral, log_integral, sgn, AspectRatio};

/// Largest pre-symmetrization residual tolerated before assembly fails.
pub const PRESYM_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorLabel {
    FreeH,
    InteractionH,
    TotalH,
    T3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub basis: BasisSpec,
    pub label: OperatorLabel,
    pub entries: DMatrix<Complex64>,
    /// `max|M − M†|` before symmetrization (zero if never symmetrized).
    pub presym_residual: f64,
}

impl OperatorMatrix {
    pub fn from_real(basis: BasisSpec, label: OperatorLabel, m: &DMatrix<f64>) -> Self {
        OperatorMatrix {
            basis,
            label,
            entries: m.map(|x| Complex64::new(x, 0.0)),
            presym_residual: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn hermiticity_residual(&self) -> f64 {
        hermiticity_residual(&self.entries)
    }

    /// `½(M + M†)`.
    pub fn hermitian_part(&self) -> OperatorMatrix {
        OperatorMatrix {
            entries: (&self.entries + self.entries.adjoint()).map(|z| z * 0.5),
            presym_residual: self.hermiticity_residual(),
            ..self.clone()
        }
    }

    /// Real part of the entries when every imaginary part is exactly zero.
    pub fn as_real(&self) -> Option<DMatrix<f64>> {
        if self.entries.iter().all(|z| z.im == 0.0) {
            Some(self.entries.map(|z| z.re))
        } else {
            None
        }
    }
}

pub fn hermiticity_residual(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut r = 0.0f64;
    for i in 0..n {
        for j in i..n {
            r = r.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    r
}

fn symmetry_residual(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut r = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            r = r.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    r
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Off-diagonal shape factor of the free Hamiltonian,
/// `(k√(a²−1) + a)(√(a²−1) − a)^k / (a²−1)^{3/2}` for `k = |n₁ − n₂|`.
fn free_shape(a: AspectRatio, k: u64) -> f64 {
    let s = a.root();
    (k as f64 * s + a.get()) * (-a.decay()).powi(k as i32) / (s * s * s)
}

/// `⟨F_{n₁}|H̃_free|F_{n₂}⟩ = a²[(n₁² − ¼)δ_{n₁n₂} + shape(|n₁−n₂|)(m² − ¼)]`.
pub fn free_element(a: AspectRatio, m: i64, n1: i64, n2: i64) -> f64 {
    let av = a.get();
    let n1f = n1 as f64;
    let mm = (m * m) as f64 - 0.25;
    av * av * ((n1f * n1f - 0.25) * delta(n1 - n2) + free_shape(a, (n1 - n2).unsigned_abs()) * mm)
}

/// `⟨F^(±)_{n₁}|H̃_free|F^(±)_{n₂}⟩`. Elements between opposite parities vanish
/// and have no entry point.
pub fn free_parity_element(a: AspectRatio, m: i64, parity: Parity, n1: i64, n2: i64) -> Result<f64> {
    let lo = match parity {
        Parity::Even => 0,
        Parity::Odd => 1,
    };
    for n in [n1, n2] {
        if n < lo {
            return Err(Error::IndexOutOfRange {
                index: n,
                kind: if lo == 0 { "even-parity" } else { "odd-parity" },
            });
        }
    }
    let h = |x, y| free_element(a, m, x, y);
    Ok(match (n1, n2) {
        (0, 0) => h(0, 0),
        (0, _) | (_, 0) => std::f64::consts::SQRT_2 * h(n1, n2),
        _ => h(n1, n2) + parity.sign() * h(n1, -n2),
    })
}

/// Coefficient of `i` in `⟨F_{n₂−n}|H̃_I|F_{n₂}⟩`.
///
/// Terms restricted to `n ≠ ±1` are simply left out at those indices.
pub fn interaction_linear(g: &Geometry, n2: i64, n: i64) -> Result<f64> {
    let a = g.a;
    let av = a.get();
    let lam = g.lambda();
    let i = |k| fourier_integral(a, k);
    let ln2 = |k| log2_integral(a, k);
    let l2 = -log_integral(a, 0);
    let n2f = n2 as f64;
    let nf = n as f64;
    let d1 = delta(n + 1) + delta(n - 1);
    let i_pm2 = (i(n + 2) - i(n - 2)) / 8.0;

    let mut guarded = 0.0;
    if n != -1 {
        guarded += (i(n + 2) - i(n)) / (4.0 * (nf + 1.0));
    }
    if n != 1 {
        guarded += (i(n) - i(n - 2)) / (4.0 * (nf - 1.0));
    }

    let body = -lam * (n2f / 2.0 * d1 + i_pm2) - n2f * (l2 / 2.0 * d1 + guarded) + i_pm2
        - ((nf + 1.0) * ln2(n + 1)? + (nf - 1.0) * ln2(n - 1)?) / 8.0
        - av / 4.0 * (lam * (i(n + 1) - i(n - 1)) + nf * ln2(n)?);
    Ok(av * body)
}

/// Coefficient of `i²` in `⟨F_{n₂−n}|H̃_I|F_{n₂}⟩`; it does not depend on `n₂`.
pub fn interaction_quadratic(g: &Geometry, n: i64) -> Result<f64> {
    let a = g.a;
    let lam = g.lambda();
    let i = |k| fourier_integral(a, k);
    let l2 = -log_integral(a, 0);
    let nf = n as f64;
    let band = delta(n + 2) + 2.0 * delta(n) + delta(n - 2);

    let mut guarded = 0.0;
    if n != -2 {
        guarded += (i(n + 3) - i(n + 1)) / (nf + 2.0);
    }
    if n != 0 {
        guarded += 2.0 * (i(n + 1) - i(n - 1)) / nf;
    }
    if n != 2 {
        guarded += (i(n - 1) - i(n - 3)) / (nf - 2.0);
    }
    let ln2 = log2_integral(a, n + 2)? + 2.0 * log2_integral(a, n)? + log2_integral(a, n - 2)?;
    Ok((lam * lam * band + lam * (2.0 * l2 * band + guarded) + ln2) / 16.0)
}

/// `⟨F_{n₂−n}|H̃_I|F_{n₂}⟩` at current `i`. Independent of `m`.
pub fn interaction_element(g: &Geometry, n2: i64, n: i64, i: Current) -> Result<Complex64> {
    let x = i.get();
    if x == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let v = x * interaction_linear(g, n2, n)? + x * x * interaction_quadratic(g, n)?;
    Ok(Complex64::new(v, 0.0))
}

/// Zero-field toroidal dipole `⟨F_{n₂−n}|T̃₃^(j,0)|F_{n₂}⟩`, in units `ħR/(10m_p)`.
pub fn t3_free_element(a: AspectRatio, n2: i64, n: i64) -> f64 {
    let av = a.get();
    let a2 = av * av;
    let n2f = n2 as f64;
    let tail = sgn(n) * (a2 - 1.0) / 2.0 * (-a.decay()).powi(n.unsigned_abs() as i32);
    -(0.75 * (n2f * (delta(n + 2) + delta(n - 2)) - 0.5 * (delta(n + 2) - delta(n - 2)))
        + n2f * (a2 + 1.0) / av * (delta(n + 1) + delta(n - 1))
        + (a2 - 2.0) / (4.0 * av) * (delta(n + 1) - delta(n - 1))
        + 2.5 * n2f * delta(n)
        - tail)
}

/// `⟨F_{n₁}|T̂₃^(θ)|F_{n₂}⟩`: the Hermitian part of the zero-field dipole.
pub fn t3_theta_element(a: AspectRatio, n1: i64, n2: i64) -> f64 {
    let av = a.get();
    let n = n2 - n1;
    let band = 2.5 * av * delta(n)
        + (av * av + 1.0) * (delta(n + 1) + delta(n - 1))
        + 0.75 * av * (delta(n + 2) + delta(n - 2));
    -((n1 + n2) as f64) / (2.0 * av) * band
}

/// Coefficient of `i` in the field part `⟨F_{n₂−n}|T̃₃^(j,I)|F_{n₂}⟩`.
pub fn t3_current_unit(g: &Geometry, n: i64) -> f64 {
    let a = g.a;
    let av = a.get();
    let lam = g.lambda();
    let c = |k: i64| lam * delta(k) - log_integral(a, k);
    let b = 0.75 * av * (c(n + 3) + c(n - 3))
        + (av * av + 1.0) * (c(n + 2) + c(n - 2))
        + 3.25 * av * (c(n + 1) + c(n - 1))
        + 2.0 * (av * av + 1.0) * c(n);
    b / (4.0 * av * av)
}

/// `⟨F_{n₂−n}|T̃₃^(j,I)|F_{n₂}⟩` at current `i`; independent of `n₂`.
pub fn t3_current_element(g: &Geometry, n: i64, i: Current) -> f64 {
    i.get() * t3_current_unit(g, n)
}

/// Real signed-basis blocks of every operator for one `(geometry, m, n_max)`.
///
/// `H(i) = free + i·linear + i²·quadratic` and `T₃(i) = t3_free + i·t3_current`,
/// so a sweep over `i` builds each matrix with a few scaled additions.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    pub geometry: Geometry,
    pub m: i64,
    pub n_max: usize,
    free: DMatrix<f64>,
    linear: DMatrix<f64>,
    quadratic: DMatrix<f64>,
    t3_free: DMatrix<f64>,
    t3_current: DMatrix<f64>,
    parity: ParityBlocks,
}

#[derive(Debug, Clone)]
struct ParityBlocks {
    free: DMatrix<f64>,
    linear: DMatrix<f64>,
    quadratic: DMatrix<f64>,
    t3_free: DMatrix<f64>,
    t3_current: DMatrix<f64>,
}

impl OperatorSet {
    pub fn new(geometry: Geometry, m: i64, n_max: usize) -> Result<Self> {
        let spec = BasisSpec::lambda(m, n_max)?;
        let a = geometry.a;
        let nm = n_max as i64;
        let d = spec.dim();

        // Elements depending on n = n₂ − n₁ alone, tabulated once.
        let width = 2 * nm;
        let quad: Vec<f64> = (-width..=width)
            .map(|n| interaction_quadratic(&geometry, n))
            .collect::<Result<_>>()?;
        let t3c: Vec<f64> = (-width..=width).map(|n| t3_current_unit(&geometry, n)).collect();

        let mut free = DMatrix::zeros(d, d);
        let mut linear = DMatrix::zeros(d, d);
        let mut quadratic = DMatrix::zeros(d, d);
        let mut t3_free = DMatrix::zeros(d, d);
        let mut t3_current = DMatrix::zeros(d, d);
        for r in 0..d {
            let n1 = r as i64 - nm;
            for c in 0..d {
                let n2 = c as i64 - nm;
                let n = n2 - n1;
                let k = (n + width) as usize;
                free[(r, c)] = free_element(a, m, n1, n2);
                linear[(r, c)] = interaction_linear(&geometry, n2, n)?;
                quadratic[(r, c)] = quad[k];
                t3_free[(r, c)] = t3_free_element(a, n2, n);
                t3_current[(r, c)] = t3c[k];
            }
        }

        let mut parity_free = DMatrix::zeros(d, d);
        let pspec = spec.with_kind(BasisKind::Parity);
        for r in 0..d {
            for c in 0..d {
                let (pr, n1) = parity_label(&pspec, r);
                let (pc, n2) = parity_label(&pspec, c);
                if pr == pc {
                    parity_free[(r, c)] = free_parity_element(a, m, pr, n1, n2)?;
                }
            }
        }
        let parity = ParityBlocks {
            free: parity_free,
            linear: pspec.to_parity(&linear),
            quadratic: pspec.to_parity(&quadratic),
            t3_free: pspec.to_parity(&t3_free),
            t3_current: pspec.to_parity(&t3_current),
        };

        Ok(OperatorSet {
            geometry,
            m,
            n_max,
            free,
            linear,
            quadratic,
            t3_free,
            t3_current,
            parity,
        })
    }

    pub fn basis(&self, kind: BasisKind) -> BasisSpec {
        BasisSpec {
            m: self.m,
            n_max: self.n_max,
            kind,
        }
    }

    pub fn dim(&self) -> usize {
        2 * self.n_max + 1
    }

    fn blocks(&self, kind: BasisKind) -> [&DMatrix<f64>; 5] {
        match kind {
            BasisKind::SignedLambda => [&self.free, &self.linear, &self.quadratic, &self.t3_free, &self.t3_current],
            BasisKind::Parity => {
                let p = &self.parity;
                [&p.free, &p.linear, &p.quadratic, &p.t3_free, &p.t3_current]
            }
        }
    }

    /// Unsymmetrized `H̃_free + H̃_I(i)`.
    pub fn raw_hamiltonian(&self, kind: BasisKind, i: Current) -> DMatrix<f64> {
        let [f, l, q, ..] = self.blocks(kind);
        let x = i.get();
        if x == 0.0 {
            return f.clone();
        }
        f + l * x + q * (x * x)
    }

    /// Symmetrized real Hamiltonian and its pre-symmetrization residual.
    pub fn hamiltonian_real(&self, kind: BasisKind, i: Current) -> Result<(DMatrix<f64>, f64)> {
        let mut h = self.raw_hamiltonian(kind, i);
        let residual = symmetry_residual(&h);
        if residual > PRESYM_TOLERANCE {
            return Err(Error::NotHermitian { residual });
        }
        symmetrize(&mut h);
        Ok((h, residual))
    }

    pub fn hamiltonian(&self, kind: BasisKind, i: Current) -> Result<OperatorMatrix> {
        let (h, residual) = self.hamiltonian_real(kind, i)?;
        let mut out = OperatorMatrix::from_real(self.basis(kind), OperatorLabel::TotalH, &h);
        out.presym_residual = residual;
        Ok(out)
    }

    pub fn free_hamiltonian(&self, kind: BasisKind) -> OperatorMatrix {
        OperatorMatrix::from_real(self.basis(kind), OperatorLabel::FreeH, self.blocks(kind)[0])
    }

    pub fn interaction(&self, kind: BasisKind, i: Current) -> OperatorMatrix {
        let [_, l, q, ..] = self.blocks(kind);
        let x = i.get();
        let h = l * x + q * (x * x);
        OperatorMatrix::from_real(self.basis(kind), OperatorLabel::InteractionH, &h)
    }

    /// Full (non-Hermitian) `T̃₃(i)` matrix.
    pub fn t3_raw(&self, kind: BasisKind, i: Current) -> DMatrix<f64> {
        let [.., t0, t1] = self.blocks(kind);
        if i.get() == 0.0 {
            t0.clone()
        } else {
            t0 + t1 * i.get()
        }
    }

    /// `½(T̃₃ + T̃₃†)`, the only part that enters expectation values.
    pub fn t3_hermitian_real(&self, kind: BasisKind, i: Current) -> DMatrix<f64> {
        let mut t = self.t3_raw(kind, i);
        symmetrize(&mut t);
        t
    }

    pub fn t3(&self, kind: BasisKind, i: Current) -> OperatorMatrix {
        OperatorMatrix::from_real(self.basis(kind), OperatorLabel::T3, &self.t3_raw(kind, i))
    }
}

fn parity_label(spec: &BasisSpec, index: usize) -> (Parity, i64) {
    match spec.label(index) {
        crate::basis::BasisLabel::Parity(p, n) => (p, n),
        crate::basis::BasisLabel::Lambda(_) => unreachable!(),
    }
}

/// Total Hamiltonian `H̃_free + H̃_I(i)` in the requested basis, symmetrized.
pub fn assemble_hamiltonian(geometry: &Geometry, basis: &BasisSpec, i: Current) -> Result<OperatorMatrix> {
    OperatorSet::new(*geometry, basis.m, basis.n_max)?.hamiltonian(basis.kind, i)
}

/// `T̃₃ = T̃₃^(j,0) + T̃₃^(j,I)` in the requested basis, unsymmetrized.
pub fn assemble_t3(geometry: &Geometry, basis: &BasisSpec, i: Current) -> Result<OperatorMatrix> {
    Ok(OperatorSet::new(*geometry, basis.m, basis.n_max)?.t3(basis.kind, i))
}

/// Elements obtained by applying each differential operator to `F_{n₂}`
/// analytically in `θ` and projecting on `F_{n₁}` by quadrature.
///
/// With `F_n = e^{inθ}w^{−1/2}`, `w = a + cosθ`, the measure cancels the
/// weights and every element is the Fourier mean of `e^{i(n₂−n₁)θ}·(Oψ)/ψ`.
pub mod oracle {
    use super::*;
    use std::f64::consts::PI;
    use crate::quadrature;

    const TOLERANCE: f64 = 1e-14;

    struct Point {
        w: f64,
        s: f64,
        c: f64,
        /// `ψ'/ψ`
        d1: Complex64,
        /// `ψ''/ψ`
        d2: Complex64,
    }

    fn point(a: f64, n2: i64, t: f64) -> Point {
        let (s, c) = t.sin_cos();
        let w = a + c;
        let d1 = Complex64::new(s / (2.0 * w), n2 as f64);
        let d2 = d1 * d1 + (c * w + s * s) / (2.0 * w * w);
        Point { w, s, c, d1, d2 }
    }

    fn project(n1: i64, n2: i64, f: impl Fn(f64) -> Complex64) -> Result<Complex64> {
        let n = (n2 - n1) as f64;
        let start = (4 * (n1.unsigned_abs() + n2.unsigned_abs()) as usize + 64).next_power_of_two();
        // Tolerance relative to the integrand's peak, the rounding floor.
        let h = 2.0 * PI / start as f64;
        let peak = (0..start).map(|k| f(k as f64 * h).norm()).fold(1.0, f64::max);
        quadrature::refine_mean(|t| Complex64::from_polar(1.0, n * t) * f(t), start, TOLERANCE * peak).map(|r| r.value)
    }

    /// `H̃_free ψ = −a²[ψ'' − (sinθ/w)ψ' − (m² − a²/4)ψ/w²]`.
    pub fn free_element(a: AspectRatio, m: i64, n1: i64, n2: i64) -> Result<f64> {
        let av = a.get();
        let mm = (m * m) as f64;
        project(n1, n2, |t| {
            let p = point(av, n2, t);
            -av * av * (p.d2 - p.s / p.w * p.d1 - (mm - av * av / 4.0) / (p.w * p.w))
        })
        .map(|z| z.re)
    }

    /// `H̃_I = i·i a Λ cosθ ∂_θ + (i·i/2) a (sinθ/w)(cosθ − (a + 2cosθ)Λ) + (i² cos²θ/4)Λ²`
    /// with `Λ = λ − ln w`.
    pub fn interaction_element(g: &Geometry, n1: i64, n2: i64, i: Current) -> Result<Complex64> {
        let av = g.a.get();
        let lam = g.lambda();
        let x = i.get();
        project(n1, n2, |t| {
            let p = point(av, n2, t);
            let l = lam - p.w.ln();
            Complex64::i() * x * av * l * p.c * p.d1
                + Complex64::new(0.0, x / 2.0 * av * p.s / p.w * (p.c - (av + 2.0 * p.c) * l))
                + x * x * p.c * p.c / 4.0 * l * l
        })
    }

    /// Full `⟨F_{n₁}|T̃₃|F_{n₂}⟩` at current `i`:
    /// `T̃₃ = i γ ∂_θ + (γ/a)(i/2)Λ cosθ`, `γ = (3a cos2θ + 4(a²+1)cosθ + 5a)/(2a)`.
    pub fn t3_element(g: &Geometry, n1: i64, n2: i64, i: Current) -> Result<Complex64> {
        let av = g.a.get();
        let lam = g.lambda();
        let x = i.get();
        project(n1, n2, |t| {
            let p = point(av, n2, t);
            let gamma = (3.0 * av * (2.0 * t).cos() + 4.0 * (av * av + 1.0) * p.c + 5.0 * av) / (2.0 * av);
            Complex64::i() * gamma * p.d1 + gamma / av * (x / 2.0) * (lam - p.w.ln()) * p.c
        })
    }
}
