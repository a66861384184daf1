//! Truncated Fock spaces and bosonic operators on them.
//!
//! A [`HilbertSpace`] is a tensor product of truncated oscillators. Mode `m`
//! spans occupations `0..d_m`; basis states are ordered lexicographically in
//! their occupation tuples with the last mode running fastest, so the index
//! of `(n_0, …, n_{M-1})` is `Σ n_m · stride_m`.
//!
//! Truncation leaves `[a, a†] = I` intact except on the top level of the
//! mode, where the diagonal entry is `1 − d`. That artifact is kept as is;
//! convergence in the truncation is checked at the experiment level.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use ndarray::{Array1, Array2, Axis};

use crate::{Error, Result, C64};

#[derive(Clone, PartialEq, Eq)]
pub struct HilbertSpace {
    dims: Vec<usize>,
    strides: Vec<usize>,
    total: usize,
}

impl fmt::Debug for HilbertSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HilbertSpace{:?}", self.dims)
    }
}

/// Builds the composite space for the given per-mode truncations.
pub fn make_space(mode_dims: &[usize]) -> Result<HilbertSpace> {
    HilbertSpace::new(mode_dims)
}

impl HilbertSpace {
    pub fn new(mode_dims: &[usize]) -> Result<Self> {
        if mode_dims.is_empty() {
            return Err(Error::InvalidSpace("no modes given".into()));
        }
        if let Some(d) = mode_dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidSpace(format!(
                "every mode needs dimension >= 2, got {d}"
            )));
        }
        let mut strides = vec![1; mode_dims.len()];
        for m in (0..mode_dims.len() - 1).rev() {
            strides[m] = strides[m + 1] * mode_dims[m + 1];
        }
        let total = mode_dims.iter().product();
        Ok(Self {
            dims: mode_dims.to_vec(),
            strides,
            total,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_modes(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.total
    }

    /// Basis index of an occupation tuple.
    pub fn index(&self, occupations: &[usize]) -> usize {
        debug_assert_eq!(occupations.len(), self.dims.len());
        occupations
            .iter()
            .zip(&self.strides)
            .map(|(n, s)| n * s)
            .sum()
    }

    /// Occupation tuple of a basis index.
    pub fn occupations(&self, index: usize) -> Vec<usize> {
        self.dims
            .iter()
            .zip(&self.strides)
            .map(|(d, s)| (index / s) % d)
            .collect()
    }

    pub fn occupation(&self, index: usize, mode: usize) -> usize {
        (index / self.strides[mode]) % self.dims[mode]
    }

    /// Total excitation number of a basis state.
    pub fn excitations(&self, index: usize) -> usize {
        (0..self.dims.len()).map(|m| self.occupation(index, m)).sum()
    }

    pub fn max_excitations(&self) -> usize {
        self.dims.iter().map(|d| d - 1).sum()
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.dims.len() {
            return Err(Error::ModeOutOfRange {
                mode,
                n_modes: self.dims.len(),
            });
        }
        Ok(())
    }
}

/// Basis indices (ascending, hence lexicographic) of all states holding
/// exactly `n_total` excitations.
pub fn excitation_subspace(space: &HilbertSpace, n_total: usize) -> Vec<usize> {
    (0..space.total_dim())
        .filter(|&i| space.excitations(i) == n_total)
        .collect()
}

/// A dense complex matrix acting on a [`HilbertSpace`].
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    space: HilbertSpace,
    matrix: Array2<C64>,
}

impl Operator {
    pub fn from_matrix(space: &HilbertSpace, matrix: Array2<C64>) -> Result<Self> {
        let d = space.total_dim();
        if matrix.dim() != (d, d) {
            return Err(Error::InvalidSpace(format!(
                "matrix shape {:?} does not match space dimension {d}",
                matrix.dim()
            )));
        }
        Ok(Self {
            space: space.clone(),
            matrix,
        })
    }

    pub fn zero(space: &HilbertSpace) -> Self {
        let d = space.total_dim();
        Self {
            space: space.clone(),
            matrix: Array2::zeros((d, d)),
        }
    }

    pub fn identity(space: &HilbertSpace) -> Self {
        Self {
            space: space.clone(),
            matrix: Array2::eye(space.total_dim()),
        }
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.space.total_dim()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            space: self.space.clone(),
            matrix: self.matrix.t().mapv(|z| z.conj()),
        }
    }

    pub fn compose(&self, rhs: &Operator) -> Result<Self> {
        self.same_space(rhs)?;
        Ok(Self {
            space: self.space.clone(),
            matrix: self.matrix.dot(&rhs.matrix),
        })
    }

    pub fn commutator(&self, rhs: &Operator) -> Result<Self> {
        Ok(&self.compose(rhs)? - &rhs.compose(self)?)
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            space: self.space.clone(),
            matrix: self.matrix.mapv(|z| z * factor),
        }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(C64::new(factor, 0.0))
    }

    pub fn apply(&self, ket: &Array1<C64>) -> Array1<C64> {
        self.matrix.dot(ket)
    }

    /// `tr(A ρ)` for a matrix `ρ` on the same space.
    pub fn expectation(&self, rho: &Array2<C64>) -> C64 {
        let d = self.dim();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..d {
            for k in 0..d {
                let a = self.matrix[[i, k]];
                if a != C64::new(0.0, 0.0) {
                    acc += a * rho[[k, i]];
                }
            }
        }
        acc
    }

    /// Restriction to the given basis states (rows and columns).
    pub fn project(&self, indices: &[usize]) -> Array2<C64> {
        self.matrix
            .select(Axis(0), indices)
            .select(Axis(1), indices)
    }

    /// Block `⟨rows| A |cols⟩`.
    pub fn block(&self, rows: &[usize], cols: &[usize]) -> Array2<C64> {
        self.matrix.select(Axis(0), rows).select(Axis(1), cols)
    }

    /// Largest absolute entry of `A − A†`.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.matrix[[i, j]] - self.matrix[[j, i]].conj()).norm());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    fn same_space(&self, other: &Operator) -> Result<()> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch {
                left: self.space.dims().to_vec(),
                right: other.space.dims().to_vec(),
            });
        }
        Ok(())
    }
}

// Arithmetic panics on mismatched spaces; the fallible `compose` is the
// checked entry point for products.
impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.space, rhs.space, "operator spaces differ");
        Operator {
            space: self.space.clone(),
            matrix: &self.matrix + &rhs.matrix,
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.space, rhs.space, "operator spaces differ");
        Operator {
            space: self.space.clone(),
            matrix: &self.matrix - &rhs.matrix,
        }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.compose(rhs).expect("operator spaces differ")
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        self.scale_real(rhs)
    }
}

impl Mul<C64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: C64) -> Operator {
        self.scale(rhs)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale_real(-1.0)
    }
}

/// Annihilation operator of `mode`, identity on the other modes.
pub fn annihilator(space: &HilbertSpace, mode: usize) -> Result<Operator> {
    space.check_mode(mode)?;
    let d = space.total_dim();
    let stride = space.strides[mode];
    let mut m = Array2::zeros((d, d));
    for col in 0..d {
        let n = space.occupation(col, mode);
        if n > 0 {
            m[[col - stride, col]] = C64::new((n as f64).sqrt(), 0.0);
        }
    }
    Ok(Operator {
        space: space.clone(),
        matrix: m,
    })
}

pub fn creator(space: &HilbertSpace, mode: usize) -> Result<Operator> {
    Ok(annihilator(space, mode)?.adjoint())
}

/// `a†a` of `mode`, stored as the exact occupation diagonal (the product
/// of the ladder matrices differs from it by rounding in `√n·√n`).
pub fn number_operator(space: &HilbertSpace, mode: usize) -> Result<Operator> {
    space.check_mode(mode)?;
    let d = space.total_dim();
    let mut m = Array2::zeros((d, d));
    for i in 0..d {
        m[[i, i]] = C64::new(space.occupation(i, mode) as f64, 0.0);
    }
    Ok(Operator {
        space: space.clone(),
        matrix: m,
    })
}
