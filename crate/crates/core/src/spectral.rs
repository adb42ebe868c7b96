//! Eigendecomposition, level observables and splittings.

use nalgebra::{ComplexField, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::basis::{BasisKind, BasisSpec};
use crate::error::{Error, Result};
use crate::geometry::Current;
use crate::operators::{OperatorMatrix, OperatorSet};

/// Relative Hermiticity defect accepted by [`eigendecompose`].
pub const HERMITIAN_TOLERANCE: f64 = 1e-10;

const MAX_SWEEPS: usize = 10_000;

#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Ascending energies `Ẽ_η`; `η` is the position in this vector.
    pub eigenvalues: Vec<f64>,
    /// Column `η` is the eigenvector of `Ẽ_η` in [`Spectrum::basis`].
    pub vectors: DMatrix<Complex64>,
    pub basis: BasisSpec,
    pub current: Option<Current>,
}

#[derive(Debug, Clone)]
pub struct LevelObservables {
    pub eta: usize,
    pub energy: f64,
    pub t3: f64,
    pub coefficients: Vec<(i64, Complex64)>,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector(&self, eta: usize) -> DVector<Complex64> {
        self.vectors.column(eta).into_owned()
    }

    /// `max_η ‖Hv − Ẽv‖`.
    pub fn max_residual(&self, h: &DMatrix<Complex64>) -> f64 {
        let hv = h * &self.vectors;
        (0..self.dim())
            .map(|k| (hv.column(k) - self.vectors.column(k) * Complex64::from(self.eigenvalues[k])).norm())
            .fold(0.0, f64::max)
    }

    /// `max|V†V − 1|`.
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.vectors.adjoint() * &self.vectors;
        (g - DMatrix::identity(self.dim(), self.dim())).map(|z| z.norm()).max()
    }
}

/// Splits the index set into groups that never couple through a nonzero entry.
fn coupled_blocks<T: ComplexField>(m: &DMatrix<T>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for i in 0..n {
        for j in i + 1..n {
            if !m[(i, j)].is_zero() || !m[(j, i)].is_zero() {
                let (ri, rj) = (root(&mut parent, i), root(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = root(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[slot[r]].push(i);
    }
    blocks
}

/// Diagonalizes each decoupled block separately so exact selection rules
/// (parity at zero current) survive near-degeneracies.
fn solve<T: ComplexField<RealField = f64> + Copy>(m: &DMatrix<T>) -> Result<(Vec<f64>, DMatrix<T>)> {
    let n = m.nrows();
    let mut pairs: Vec<(f64, DVector<T>)> = Vec::with_capacity(n);
    for block in coupled_blocks(m) {
        let k = block.len();
        let sub = DMatrix::from_fn(k, k, |r, c| m[(block[r], block[c])]);
        let eig = SymmetricEigen::try_new(sub, f64::EPSILON, MAX_SWEEPS).ok_or(Error::EigenNonConvergence)?;
        for (j, &e) in eig.eigenvalues.iter().enumerate() {
            let mut v = DVector::zeros(n);
            for (r, &row) in block.iter().enumerate() {
                v[row] = eig.eigenvectors[(r, j)];
            }
            pairs.push((e, v));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let values = pairs.iter().map(|p| p.0).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (j, (_, v)) in pairs.into_iter().enumerate() {
        vectors.set_column(j, &v);
    }
    Ok((values, vectors))
}

/// Rotates `v` so its largest-magnitude entry (first one on ties) is real positive.
pub fn fix_phase(v: &mut DVector<Complex64>) {
    let peak = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return;
    }
    let k = v.iter().position(|z| z.norm() >= peak * (1.0 - 1e-9)).unwrap();
    let phase = v[k].conj() / v[k].norm();
    v.apply(|z| *z *= phase);
}

fn finish(values: Vec<f64>, mut vectors: DMatrix<Complex64>, basis: BasisSpec, current: Option<Current>) -> Spectrum {
    for j in 0..vectors.ncols() {
        let mut v = vectors.column(j).into_owned();
        fix_phase(&mut v);
        vectors.set_column(j, &v);
    }
    Spectrum {
        eigenvalues: values,
        vectors,
        basis,
        current,
    }
}

/// Full spectrum of a Hermitian operator, ascending and deterministic.
pub fn eigendecompose(h: &OperatorMatrix) -> Result<Spectrum> {
    let scale = h.entries.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let residual = h.hermiticity_residual();
    if residual > HERMITIAN_TOLERANCE * scale {
        return Err(Error::NotHermitian { residual });
    }
    let (values, vectors) = match h.as_real() {
        Some(real) => {
            let (v, w) = solve(&real)?;
            (v, w.map(|x| Complex64::new(x, 0.0)))
        }
        None => solve(&h.hermitian_part().entries)?,
    };
    Ok(finish(values, vectors, h.basis, None))
}

/// Spectrum of an already symmetrized real matrix.
pub fn eigendecompose_real(h: &DMatrix<f64>, basis: BasisSpec, current: Option<Current>) -> Result<Spectrum> {
    let (values, vectors) = solve(h)?;
    Ok(finish(values, vectors.map(|x| Complex64::new(x, 0.0)), basis, current))
}

/// `Re(v_η† T̃₃ v_η)`, which equals `v_η† ½(T̃₃ + T̃₃†) v_η`.
pub fn expectation_t3(spectrum: &Spectrum, t3: &OperatorMatrix, eta: usize) -> Result<f64> {
    if t3.basis != spectrum.basis || t3.dim() != spectrum.dim() {
        return Err(Error::BasisMismatch);
    }
    check_level(spectrum, eta)?;
    let v = spectrum.vectors.column(eta);
    Ok((v.adjoint() * &t3.entries * v)[(0, 0)].re)
}

/// Real-matrix variant of [`expectation_t3`] for a symmetric `T̃₃` part.
pub fn expectation_real(spectrum: &Spectrum, t3: &DMatrix<f64>, eta: usize) -> Result<f64> {
    if t3.nrows() != spectrum.dim() {
        return Err(Error::BasisMismatch);
    }
    check_level(spectrum, eta)?;
    let v = spectrum.vectors.column(eta);
    let re = v.map(|z| z.re);
    let im = v.map(|z| z.im);
    Ok((re.transpose() * t3 * &re)[(0, 0)] + (im.transpose() * t3 * &im)[(0, 0)])
}

fn check_level(spectrum: &Spectrum, eta: usize) -> Result<()> {
    if eta >= spectrum.dim() {
        return Err(Error::IndexOutOfRange {
            index: eta as i64,
            kind: "level",
        });
    }
    Ok(())
}

/// `Ẽ_{2n} − Ẽ_{2n−1}`, the gap inside the `n`-th quasi-degenerate pair.
pub fn level_split(spectrum: &Spectrum, n: usize) -> Result<f64> {
    if n == 0 || 2 * n >= spectrum.dim() {
        return Err(Error::IndexOutOfRange {
            index: n as i64,
            kind: "pair",
        });
    }
    Ok(spectrum.eigenvalues[2 * n] - spectrum.eigenvalues[2 * n - 1])
}

/// Eigenvector `η` expressed in the signed basis, phase fixed there.
pub fn lambda_amplitudes(spectrum: &Spectrum, eta: usize) -> Result<DVector<Complex64>> {
    check_level(spectrum, eta)?;
    let v = spectrum.vector(eta);
    let mut out = match spectrum.basis.kind {
        BasisKind::SignedLambda => v,
        BasisKind::Parity => spectrum.basis.parity_vector_to_lambda(&v),
    };
    fix_phase(&mut out);
    Ok(out)
}

/// The `top_k` largest amplitudes `(n, c_n)` of level `η` in the signed basis,
/// by decreasing magnitude (ties by ascending `n`).
pub fn coefficients(spectrum: &Spectrum, eta: usize, top_k: usize) -> Result<Vec<(i64, Complex64)>> {
    let v = lambda_amplitudes(spectrum, eta)?;
    let nm = spectrum.basis.n_max as i64;
    let mut all: Vec<(i64, Complex64)> = v.iter().enumerate().map(|(k, &z)| (k as i64 - nm, z)).collect();
    all.sort_by(|x, y| y.1.norm().total_cmp(&x.1.norm()).then(x.0.cmp(&y.0)));
    all.truncate(top_k);
    Ok(all)
}

pub fn observe(spectrum: &Spectrum, t3: &OperatorMatrix, eta: usize, top_k: usize) -> Result<LevelObservables> {
    Ok(LevelObservables {
        eta,
        energy: spectrum.eigenvalues[eta.min(spectrum.dim().saturating_sub(1))],
        t3: expectation_t3(spectrum, t3, eta)?,
        coefficients: coefficients(spectrum, eta, top_k)?,
    })
}

/// Basis used at a given current: parity at `i = 0`, signed otherwise.
pub fn preferred_basis(i: Current) -> BasisKind {
    if i.get() == 0.0 {
        BasisKind::Parity
    } else {
        BasisKind::SignedLambda
    }
}

/// Energies and dipole expectations of the lowest `levels` states.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelTable {
    pub energies: Vec<f64>,
    pub t3: Vec<f64>,
}

/// Diagonalizes `H̃(i)` from a precomputed operator set and evaluates
/// `⟨T̃₃⟩` for the lowest `levels` states.
pub fn level_table(set: &OperatorSet, i: Current, levels: usize) -> Result<(Spectrum, LevelTable)> {
    let kind = preferred_basis(i);
    let (h, _) = set.hamiltonian_real(kind, i)?;
    let spectrum = eigendecompose_real(&h, set.basis(kind), Some(i))?;
    let t = set.t3_hermitian_real(kind, i);
    let levels = levels.min(spectrum.dim());
    let t3 = (0..levels)
        .map(|eta| expectation_real(&spectrum, &t, eta))
        .collect::<Result<_>>()?;
    let energies = spectrum.eigenvalues[..levels].to_vec();
    Ok((spectrum, LevelTable { energies, t3 }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::OperatorLabel;

    fn op(m: DMatrix<Complex64>) -> OperatorMatrix {
        let n = m.nrows();
        OperatorMatrix {
            basis: BasisSpec {
                m: 0,
                n_max: (n - 1) / 2,
                kind: BasisKind::SignedLambda,
            },
            label: OperatorLabel::TotalH,
            entries: m,
            presym_residual: 0.0,
        }
    }

    #[test]
    fn two_by_two_pair() {
        let eps = 0.3;
        let m = DMatrix::from_row_slice(2, 2, &[1.0, eps, eps, 1.0]).map(Complex64::from);
        let s = eigendecompose(&op(m)).unwrap();
        assert!((s.eigenvalues[0] - (1.0 - eps)).abs() < 1e-15);
        assert!((s.eigenvalues[1] - (1.0 + eps)).abs() < 1e-15);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.vectors[(0, 1)].re - h).abs() < 1e-15 && (s.vectors[(1, 1)].re - h).abs() < 1e-15);
        assert!((s.vectors[(0, 0)].re - h).abs() < 1e-15 && (s.vectors[(1, 0)].re + h).abs() < 1e-15);
    }

    #[test]
    fn identity_spectrum() {
        let s = eigendecompose(&op(DMatrix::identity(5, 5))).unwrap();
        assert!(s.eigenvalues.iter().all(|&e| e == 1.0));
        assert!(s.orthonormality_error() < 1e-15);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]).map(Complex64::from);
        assert!(matches!(eigendecompose(&op(m)), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn split_range() {
        let s = eigendecompose(&op(DMatrix::identity(5, 5))).unwrap();
        assert!(level_split(&s, 0).is_err());
        assert!(level_split(&s, 2).is_ok());
        assert!(level_split(&s, 3).is_err());
    }
}
