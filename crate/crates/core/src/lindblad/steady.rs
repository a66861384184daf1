//! Stationary states.
//!
//! Dense generators are solved directly with one row replaced by the trace
//! functional. Sparse generators use GMRES preconditioned by the exact
//! inverse of the undriven generator, which is block triangular in the
//! (ket, bra) excitation sectors because the undriven Hamiltonian conserves
//! the excitation number and every jump lowers it by one.

use ndarray::{Array1, Array2, Axis, ShapeBuilder};
use ndarray_linalg::{Eig, FactorizeInto, Inverse, ReciprocalConditionNum, Solve};

use crate::fock::{excitation_subspace, HilbertSpace, Operator};
use crate::linalg::{gmres, GmresOptions};
use crate::{Error, Result, C64};

use super::liouvillian::{unvectorize, Liouvillian, Parts, Storage};
use super::state::DensityMatrix;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteadyOptions {
    /// Bound on `‖L vec(ρ)‖ / ‖L‖`.
    pub tolerance: f64,
    /// Bordered systems with a reciprocal condition number below this are
    /// reported as having no unique steady state.
    pub min_rcond: f64,
    pub gmres: GmresOptions,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            min_rcond: 1e-15,
            gmres: GmresOptions::default(),
        }
    }
}

/// The unique trace-one solution of `L vec(ρ) = 0`.
pub fn steady_state(l: &Liouvillian) -> Result<DensityMatrix> {
    steady_state_with(l, &SteadyOptions::default())
}

pub fn steady_state_with(l: &Liouvillian, opts: &SteadyOptions) -> Result<DensityMatrix> {
    let d = l.space().total_dim();
    let raw = match l.storage() {
        Storage::Dense(m) => dense_solve(m, d, opts)?,
        Storage::Sparse(_) => sector_gmres(l, opts)?,
    };
    let rho = finish(l.space(), raw)?;
    let residual = relative_residual(l, &rho);
    if !(residual <= opts.tolerance) {
        return Err(Error::Residual {
            residual,
            tolerance: opts.tolerance,
        });
    }
    Ok(rho)
}

/// `‖L vec(ρ)‖ / ‖L‖`.
pub fn relative_residual(l: &Liouvillian, rho: &DensityMatrix) -> f64 {
    let r = l.apply(&rho.to_vec());
    let n = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if l.norm() == 0.0 {
        n
    } else {
        n / l.norm()
    }
}

fn finish(space: &HilbertSpace, m: Array2<C64>) -> Result<DensityMatrix> {
    let adj = m.t().mapv(|z| z.conj());
    let herm = (&m + &adj).mapv(|z| z * 0.5);
    let tr = herm.diag().sum().re;
    if !(tr.is_finite() && tr != 0.0) {
        return Err(Error::NonFinite("steady-state trace".into()));
    }
    DensityMatrix::new(space, herm.mapv(|z| z / tr))
}

const MAX_REFINEMENTS: usize = 10;

fn dense_solve(l: &Array2<C64>, d: usize, opts: &SteadyOptions) -> Result<Array2<C64>> {
    let n = d * d;
    let mut a = l.clone();
    a.row_mut(0).fill(C64::new(0.0, 0.0));
    for i in 0..d {
        a[[0, i + i * d]] = C64::new(1.0, 0.0);
    }
    let mut b = Array1::zeros(n);
    b[0] = C64::new(1.0, 0.0);

    let rcond = a.rcond()?;
    if !(rcond >= opts.min_rcond) {
        return Err(Error::SingularSteadyState { rcond });
    }
    // Refine until the componentwise backward error is at round-off. The
    // slow dark-mode sector only feels componentwise-small perturbations;
    // a normwise-small residual can still wreck strongly antibunched moments.
    // Column-major storage makes LAPACK pivot over rows of `a` itself; the
    // transposed factorization used for row-major input does not reach
    // componentwise stability under refinement.
    let mut af = Array2::zeros((n, n).f());
    af.assign(&a);
    let lu = af.factorize_into()?;
    let abs_a = a.mapv(|z| z.norm());
    let mut x = lu.solve(&b)?;
    let mut last = f64::INFINITY;
    for _ in 0..MAX_REFINEMENTS {
        let r = &b - &a.dot(&x);
        let scale = abs_a.dot(&x.mapv(|z| z.norm()));
        let berr = r
            .iter()
            .zip(scale.iter().zip(b.iter()))
            .map(|(ri, (si, bi))| {
                let den = si + bi.norm();
                if den > 0.0 {
                    ri.norm() / den
                } else {
                    ri.norm()
                }
            })
            .fold(0.0, f64::max);
        if berr <= 4.0 * f64::EPSILON || berr >= last {
            break;
        }
        last = berr;
        x = &x + &lu.solve(&r)?;
    }
    Ok(unvectorize(&x, d))
}

struct SectorBlock {
    indices: Vec<usize>,
    values: Array1<C64>,
    vectors: Array2<C64>,
    inverse: Array2<C64>,
}

/// Exact inverse of the undriven generator on traceless matrices.
struct SectorPreconditioner {
    d: usize,
    sectors: Vec<SectorBlock>,
    /// `lowering[k][n]` is `J_k` restricted to sector `n + 1 → n`.
    lowering: Vec<Vec<Array2<C64>>>,
}

impl SectorPreconditioner {
    fn new(space: &HilbertSpace, parts: &Parts) -> Result<Self> {
        let d = space.total_dim();
        let n_max = space.max_excitations();
        let sector_of: Vec<usize> = (0..d).map(|i| space.excitations(i)).collect();

        let h0 = parts.undriven.matrix();
        for ((i, j), v) in h0.indexed_iter() {
            if *v != C64::new(0.0, 0.0) && sector_of[i] != sector_of[j] {
                return Err(Error::NotConserving("the undriven Hamiltonian".into()));
            }
        }
        for (k, jump) in parts.jumps.iter().enumerate() {
            for ((i, j), v) in jump.matrix().indexed_iter() {
                if *v != C64::new(0.0, 0.0) && sector_of[i] + 1 != sector_of[j] {
                    return Err(Error::NotConserving(format!("jump operator {k}")));
                }
            }
        }

        let mut damping = Operator::zero(space);
        for j in &parts.jumps {
            damping = &damping + &j.adjoint().compose(j)?;
        }
        let h_eff = &parts.undriven - &(&damping * C64::new(0.0, 1.0));

        let mut sectors = Vec::with_capacity(n_max + 1);
        for n in 0..=n_max {
            let indices = excitation_subspace(space, n);
            let block = h_eff.project(&indices);
            let (values, vectors) = block.eig()?;
            let inverse = vectors.inv()?;
            sectors.push(SectorBlock {
                indices,
                values,
                vectors,
                inverse,
            });
        }
        let lowering = parts
            .jumps
            .iter()
            .map(|j| {
                (0..n_max)
                    .map(|n| j.block(&sectors[n].indices, &sectors[n + 1].indices))
                    .collect()
            })
            .collect();
        Ok(Self { d, sectors, lowering })
    }

    fn apply(&self, r: &[C64]) -> Vec<C64> {
        let d = self.d;
        let ns = self.sectors.len();
        let rhs_full = Array2::from_shape_fn((d, d), |(i, j)| r[i + j * d]);
        let mut y: Vec<Vec<Array2<C64>>> = self
            .sectors
            .iter()
            .map(|a| {
                self.sectors
                    .iter()
                    .map(|b| Array2::zeros((a.indices.len(), b.indices.len())))
                    .collect()
            })
            .collect();
        let i_unit = C64::new(0.0, 1.0);

        for n in (0..ns).rev() {
            for m in (0..ns).rev() {
                if n == 0 && m == 0 {
                    continue;
                }
                let (sn, sm) = (&self.sectors[n], &self.sectors[m]);
                let mut rhs = rhs_full
                    .select(Axis(0), &sn.indices)
                    .select(Axis(1), &sm.indices);
                if n + 1 < ns && m + 1 < ns {
                    let upper = &y[n + 1][m + 1];
                    for low in &self.lowering {
                        let jn = &low[n];
                        let jm = &low[m];
                        let term = jn.dot(upper).dot(&jm.t().mapv(|z| z.conj()));
                        rhs.zip_mut_with(&term, |a, b| *a -= b * 2.0);
                    }
                }
                // H_n Y − Y H_m† = i·rhs in the eigenbases of both blocks
                let vm_inv_adj = sm.inverse.t().mapv(|z| z.conj());
                let mut z = sn.inverse.dot(&rhs.mapv(|v| v * i_unit)).dot(&vm_inv_adj);
                for ((a, b), v) in z.indexed_iter_mut() {
                    *v /= sn.values[a] - sm.values[b].conj();
                }
                y[n][m] = sn.vectors.dot(&z).dot(&sm.vectors.t().mapv(|c| c.conj()));
            }
        }
        let trace: C64 = (1..ns).map(|n| y[n][n].diag().sum()).sum();
        y[0][0] = Array2::from_elem((1, 1), -trace);

        let mut out = vec![C64::new(0.0, 0.0); d * d];
        for (n, row) in y.iter().enumerate() {
            for (m, block) in row.iter().enumerate() {
                for (a, &i) in self.sectors[n].indices.iter().enumerate() {
                    for (b, &j) in self.sectors[m].indices.iter().enumerate() {
                        out[i + j * d] = block[[a, b]];
                    }
                }
            }
        }
        out
    }
}

fn sector_gmres(l: &Liouvillian, opts: &SteadyOptions) -> Result<Array2<C64>> {
    let parts = l
        .parts
        .as_ref()
        .ok_or_else(|| Error::InvalidParams("sparse steady state needs the generator's operator content".into()))?;
    let space = l.space();
    let d = space.total_dim();
    let pre = SectorPreconditioner::new(space, parts)?;

    // ρ = |0⟩⟨0| + X with traceless X solving L X = −L|0⟩⟨0|
    let rho0 = DensityMatrix::vacuum(space).to_vec();
    let b: Vec<C64> = l.apply(&rho0).iter().map(|z| -z).collect();
    let apply = |x: &[C64], y: &mut [C64]| match l.storage() {
        Storage::Sparse(m) => m.matvec_into(x, y),
        Storage::Dense(m) => {
            let v = m.dot(&ndarray::ArrayView1::from(x));
            y.copy_from_slice(v.as_slice().expect("contiguous"));
        }
    };
    let (x, _) = gmres(apply, |r| Ok(pre.apply(r)), &b, opts.gmres)?;
    let full = &rho0 + &Array1::from(x);
    Ok(unvectorize(&full, d))
}

/// Steady state by the sector-preconditioned iteration regardless of the
/// storage (exposed to cross-check the two solvers).
pub fn steady_state_iterative(l: &Liouvillian, opts: &SteadyOptions) -> Result<DensityMatrix> {
    let rho = finish(l.space(), sector_gmres(l, opts)?)?;
    let residual = relative_residual(l, &rho);
    if !(residual <= opts.tolerance) {
        return Err(Error::Residual {
            residual,
            tolerance: opts.tolerance,
        });
    }
    Ok(rho)
}
