use ndarray::{Array1, Array2};

use crate::fock::{HilbertSpace, Operator};
use crate::linalg::{nonzeros, push_kron, Conserved, Csr};
use crate::model::SystemOperators;
use crate::{Error, Result, C64};

/// Largest superoperator dimension `D²` stored densely.
pub const DENSE_LIMIT: usize = 4096;

#[derive(Clone, Debug)]
pub enum Storage {
    Dense(Array2<C64>),
    Sparse(Csr),
}

/// Drive-free part of the generator, kept for the sector preconditioner.
#[derive(Clone, Debug)]
pub(crate) struct Parts {
    pub undriven: Operator,
    pub jumps: Vec<Operator>,
}

/// Generator of the master equation acting on column-stacked density
/// matrices: `vec(ρ)[i + jD] = ρ[i, j]`.
#[derive(Clone, Debug)]
pub struct Liouvillian {
    space: HilbertSpace,
    storage: Storage,
    norm: f64,
    pub(crate) parts: Option<Parts>,
}

fn triplets(h: &Operator, jumps: &[&Operator]) -> Vec<(usize, usize, C64)> {
    let d = h.dim();
    let eye = nonzeros(&Array2::eye(d));
    let mut t = Vec::new();
    let minus_i = C64::new(0.0, -1.0);
    let one = C64::new(1.0, 0.0);

    // vec(AρB) = (Bᵀ ⊗ A) vec(ρ)
    push_kron(&mut t, &eye, &nonzeros(h.matrix()), d, minus_i);
    push_kron(&mut t, &nonzeros(&h.matrix().t().to_owned()), &eye, d, -minus_i);
    for j in jumps {
        let jd_j = j.adjoint().compose(j).expect("same space");
        let j_nz = nonzeros(j.matrix());
        let j_conj = nonzeros(&j.matrix().mapv(|z| z.conj()));
        push_kron(&mut t, &j_conj, &j_nz, d, one * 2.0);
        push_kron(&mut t, &eye, &nonzeros(jd_j.matrix()), d, -one);
        push_kron(&mut t, &nonzeros(&jd_j.matrix().t().to_owned()), &eye, d, -one);
    }
    t
}

/// `L ρ = −i[H, ρ] + Σ_k (2 J_k ρ J_k† − J_k†J_k ρ − ρ J_k†J_k)`.
///
/// Stored densely up to [`DENSE_LIMIT`], sparsely above.
pub fn build_liouvillian(sys: &SystemOperators) -> Result<Liouvillian> {
    let dim = sys.space.total_dim();
    let storage = if dim * dim <= DENSE_LIMIT {
        StorageKind::Dense
    } else {
        StorageKind::Sparse
    };
    build_liouvillian_as(sys, storage)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StorageKind {
    Dense,
    Sparse,
}

pub fn build_liouvillian_as(sys: &SystemOperators, kind: StorageKind) -> Result<Liouvillian> {
    let space = &sys.space;
    for op in std::iter::once(&sys.hamiltonian).chain(sys.jumps.iter().map(|j| &j.op)) {
        if op.space() != space {
            return Err(Error::SpaceMismatch {
                left: space.dims().to_vec(),
                right: op.space().dims().to_vec(),
            });
        }
    }
    let jumps: Vec<&Operator> = sys.jumps.iter().map(|j| &j.op).collect();
    let t = triplets(&sys.hamiltonian, &jumps);
    let n = space.total_dim().pow(2);
    let csr = Csr::from_triplets(n, n, t);
    let norm = csr.norm();
    let storage = match kind {
        StorageKind::Dense => Storage::Dense(csr.to_dense()),
        StorageKind::Sparse => Storage::Sparse(csr),
    };
    Ok(Liouvillian {
        space: space.clone(),
        storage,
        norm,
        parts: Some(Parts {
            undriven: sys.undriven_hamiltonian(),
            jumps: sys.jumps.iter().map(|j| j.op.clone()).collect(),
        }),
    })
}

impl Liouvillian {
    /// Wraps an explicit superoperator matrix (no preconditioner data).
    pub fn from_dense(space: &HilbertSpace, matrix: Array2<C64>) -> Result<Self> {
        let n = space.total_dim().pow(2);
        if matrix.dim() != (n, n) {
            return Err(Error::InvalidSpace(format!(
                "superoperator shape {:?} does not match D² = {n}",
                matrix.dim()
            )));
        }
        let norm = matrix.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        Ok(Self {
            space: space.clone(),
            storage: Storage::Dense(matrix),
            norm,
            parts: None,
        })
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    /// `D²`.
    pub fn dim(&self) -> usize {
        self.space.total_dim().pow(2)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn apply(&self, v: &Array1<C64>) -> Array1<C64> {
        match &self.storage {
            Storage::Dense(m) => m.dot(v),
            Storage::Sparse(m) => m.matvec(v),
        }
    }

    pub fn dense(&self) -> Option<&Array2<C64>> {
        match &self.storage {
            Storage::Dense(m) => Some(m),
            Storage::Sparse(_) => None,
        }
    }

    pub fn to_dense(&self) -> Array2<C64> {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            Storage::Sparse(m) => m.to_dense(),
        }
    }

    /// `‖vec(I)† L‖ / ‖L‖`; zero for a trace-preserving generator.
    pub fn trace_defect(&self) -> f64 {
        let d = self.space.total_dim();
        let mut id = Array1::zeros(d * d);
        for i in 0..d {
            id[i + i * d] = C64::new(1.0, 0.0);
        }
        let row = match &self.storage {
            Storage::Dense(m) => id.mapv(|z| z.conj()).dot(m),
            Storage::Sparse(m) => m.left_matvec(&id),
        };
        let n = row.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if self.norm == 0.0 {
            n
        } else {
            n / self.norm
        }
    }
}

/// Column-stacked `vec(ρ)`.
/// `vec(I)`: the left null vector of every trace-preserving generator.
pub fn trace_functional(d: usize) -> Array1<C64> {
    let mut v = Array1::zeros(d * d);
    for i in 0..d {
        v[i + i * d] = C64::new(1.0, 0.0);
    }
    v
}

/// Trace conservation with round-off drift absorbed by the vacuum
/// population, the entry the output moments weigh least.
pub fn trace_conservation(d: usize) -> Conserved {
    Conserved {
        left: trace_functional(d),
        sink: 0,
    }
}

pub fn vectorize(rho: &Array2<C64>) -> Array1<C64> {
    let d = rho.nrows();
    Array1::from_shape_fn(d * d, |k| rho[[k % d, k / d]])
}

pub fn unvectorize(v: &Array1<C64>, d: usize) -> Array2<C64> {
    Array2::from_shape_fn((d, d), |(i, j)| v[i + j * d])
}
