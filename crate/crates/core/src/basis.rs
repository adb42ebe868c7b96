//! Truncated bases: signed momentum states `F_n` and their parity combinations.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_traits::Zero;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisKind {
    /// `F_n` for `n ∈ [−n_max, n_max]`, ordered by ascending `n`.
    SignedLambda,
    /// `F^(+)_n` for `n = 0..=n_max`, then `F^(−)_n` for `n = 1..=n_max`.
    Parity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisLabel {
    Lambda(i64),
    Parity(Parity, i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisSpec {
    pub m: i64,
    pub n_max: usize,
    pub kind: BasisKind,
}

impl BasisSpec {
    pub fn new(m: i64, n_max: usize, kind: BasisKind) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::InvalidParameter("n_max must be positive".into()));
        }
        Ok(BasisSpec { m, n_max, kind })
    }

    pub fn lambda(m: i64, n_max: usize) -> Result<Self> {
        Self::new(m, n_max, BasisKind::SignedLambda)
    }

    pub fn parity(m: i64, n_max: usize) -> Result<Self> {
        Self::new(m, n_max, BasisKind::Parity)
    }

    pub fn with_kind(self, kind: BasisKind) -> Self {
        BasisSpec { kind, ..self }
    }

    pub fn dim(&self) -> usize {
        2 * self.n_max + 1
    }

    pub fn label(&self, index: usize) -> BasisLabel {
        let nm = self.n_max as i64;
        let k = index as i64;
        match self.kind {
            BasisKind::SignedLambda => BasisLabel::Lambda(k - nm),
            BasisKind::Parity if k <= nm => BasisLabel::Parity(Parity::Even, k),
            BasisKind::Parity => BasisLabel::Parity(Parity::Odd, k - nm),
        }
    }

    /// Position of `F_n` in the signed basis.
    pub fn lambda_index(&self, n: i64) -> Result<usize> {
        let nm = self.n_max as i64;
        if n.abs() > nm {
            return Err(Error::IndexOutOfRange {
                index: n,
                kind: "signed",
            });
        }
        Ok((n + nm) as usize)
    }

    /// Position of `F^(±)_n` in the parity basis.
    pub fn parity_index(&self, parity: Parity, n: i64) -> Result<usize> {
        let nm = self.n_max as i64;
        match parity {
            Parity::Even if (0..=nm).contains(&n) => Ok(n as usize),
            Parity::Odd if (1..=nm).contains(&n) => Ok((nm + n) as usize),
            Parity::Even => Err(Error::IndexOutOfRange {
                index: n,
                kind: "even-parity",
            }),
            Parity::Odd => Err(Error::IndexOutOfRange {
                index: n,
                kind: "odd-parity",
            }),
        }
    }

    /// Nonzero entries `(signed index, coefficient)` of row `index` of the
    /// parity transform `U`, where `F^(±)_n = (F_n ± F_{−n})/√2`.
    pub fn parity_row(&self, index: usize) -> Vec<(usize, f64)> {
        let nm = self.n_max as i64;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let at = |n: i64| (n + nm) as usize;
        match self.with_kind(BasisKind::Parity).label(index) {
            BasisLabel::Parity(Parity::Even, 0) => vec![(at(0), 1.0)],
            BasisLabel::Parity(p, n) => vec![(at(n), h), (at(-n), p.sign() * h)],
            BasisLabel::Lambda(_) => unreachable!(),
        }
    }

    /// Dense parity transform `U` (rows: parity states, columns: signed states).
    pub fn parity_transform(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut u = DMatrix::zeros(d, d);
        for r in 0..d {
            for (c, v) in self.parity_row(r) {
                u[(r, c)] = v;
            }
        }
        u
    }

    /// `U M Uᵀ` for a matrix given in the signed basis.
    pub fn to_parity<T>(&self, m: &DMatrix<T>) -> DMatrix<T>
    where
        T: nalgebra::Scalar + Copy + Zero + std::ops::Mul<f64, Output = T>,
    {
        let d = self.dim();
        assert_eq!(m.nrows(), d);
        let rows: Vec<_> = (0..d).map(|r| self.parity_row(r)).collect();
        DMatrix::from_fn(d, d, |r, c| {
            let mut acc = T::zero();
            for &(i, u) in &rows[r] {
                for &(j, v) in &rows[c] {
                    acc = acc + m[(i, j)] * (u * v);
                }
            }
            acc
        })
    }

    /// Expresses a parity-basis vector in the signed basis (`Uᵀ v`).
    pub fn parity_vector_to_lambda(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        let d = self.dim();
        let mut out = DVector::zeros(d);
        for r in 0..d {
            for (c, u) in self.parity_row(r) {
                out[c] += v[r] * u;
            }
        }
        out
    }
}
