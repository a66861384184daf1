use ndarray::Array2;
use ndarray_linalg::{EigValsh, UPLO};

use crate::fock::HilbertSpace;
use crate::{Error, Result, C64};

use super::liouvillian::{unvectorize, vectorize};

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    space: HilbertSpace,
    matrix: Array2<C64>,
}

/// Tolerances of a physical state: Hermiticity and trace to `1e-10`,
/// eigenvalues above `−1e-8`.
pub const HERMITICITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-8;

impl DensityMatrix {
    pub fn new(space: &HilbertSpace, matrix: Array2<C64>) -> Result<Self> {
        let d = space.total_dim();
        if matrix.dim() != (d, d) {
            return Err(Error::InvalidSpace(format!(
                "density matrix shape {:?} does not match dimension {d}",
                matrix.dim()
            )));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("density matrix".into()));
        }
        Ok(Self {
            space: space.clone(),
            matrix,
        })
    }

    pub fn vacuum(space: &HilbertSpace) -> Self {
        Self::basis_state(space, 0)
    }

    /// `|i⟩⟨i|` for basis index `i`.
    pub fn basis_state(space: &HilbertSpace, index: usize) -> Self {
        let d = space.total_dim();
        let mut m = Array2::zeros((d, d));
        m[[index, index]] = C64::new(1.0, 0.0);
        Self {
            space: space.clone(),
            matrix: m,
        }
    }

    pub fn from_vec(space: &HilbertSpace, v: &ndarray::Array1<C64>) -> Result<Self> {
        let d = space.total_dim();
        if v.len() != d * d {
            return Err(Error::InvalidSpace(format!("vector length {} is not D² = {}", v.len(), d * d)));
        }
        Self::new(space, unvectorize(v, d))
    }

    pub fn to_vec(&self) -> ndarray::Array1<C64> {
        vectorize(&self.matrix)
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.diag().sum()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.matrix.nrows();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.matrix[[i, j]] - self.matrix[[j, i]].conj()).norm());
            }
        }
        worst
    }

    fn hermitian_part(&self) -> Array2<C64> {
        let adj = self.matrix.t().mapv(|z| z.conj());
        (&self.matrix + &adj).mapv(|z| z * 0.5)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(self.hermitian_part().eigvalsh(UPLO::Lower)?.to_vec())
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.into_iter().fold(f64::INFINITY, f64::min))
    }

    /// `½ ‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        let diff = &self.hermitian_part() - &other.hermitian_part();
        let ev = diff.eigvalsh(UPLO::Lower)?;
        Ok(0.5 * ev.iter().map(|x| x.abs()).sum::<f64>())
    }

    /// Population of basis states whose occupation of some mode is at the
    /// truncation edge.
    pub fn edge_population(&self) -> f64 {
        let dims = self.space.dims().to_vec();
        (0..self.space.total_dim())
            .filter(|&i| {
                self.space
                    .occupations(i)
                    .iter()
                    .zip(&dims)
                    .any(|(n, d)| n + 1 == *d)
            })
            .map(|i| self.matrix[[i, i]].re)
            .sum()
    }

    /// Checks Hermiticity, unit trace and positivity at the module tolerances.
    pub fn check_physical(&self) -> Result<()> {
        let herm = self.hermiticity_defect();
        if herm > HERMITICITY_TOL {
            return Err(Error::Unphysical(format!("state is not Hermitian ({herm:e})")));
        }
        let tr = (self.trace() - C64::new(1.0, 0.0)).norm();
        if tr > TRACE_TOL {
            return Err(Error::Unphysical(format!("state trace deviates by {tr:e}")));
        }
        let min = self.min_eigenvalue()?;
        if min < -POSITIVITY_TOL {
            return Err(Error::Unphysical(format!("state has eigenvalue {min:e}")));
        }
        Ok(())
    }
}
