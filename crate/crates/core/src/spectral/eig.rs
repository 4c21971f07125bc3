use std::cmp::Ordering;

use faer::diag::Diag;
use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self, ComputeEigenvectors};
use faer::{Mat, Par};

use crate::error::{Error, Result};
use crate::lattice::MirrorBlocks;
use crate::matrix::{dense_mib, ComplexMatrix, C64};
use crate::observables::Parity;

/// Default cap on the dense dimension (N = 200 in the pair sector is 19 900).
pub const DEFAULT_MAX_DIM: usize = 20_000;

/// Residual bound relative to the Frobenius norm of the input.
pub const RESIDUAL_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug)]
pub struct EigOptions {
    pub max_dim: usize,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self {
            max_dim: DEFAULT_MAX_DIM,
        }
    }
}

/// Right eigenpairs with per-pair residuals `‖Av − λv‖₂`.
///
/// Columns of `vectors` have unit Euclidean norm. Pairs are ordered most
/// radiant first: ascending `Im λ`, then ascending `Re λ`.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<C64>,
    pub vectors: ComplexMatrix,
    pub residuals: Vec<f64>,
    /// Mirror parity of each vector when the solve was symmetry-blocked.
    pub parities: Option<Vec<Parity>>,
}

impl EigenDecomposition {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k)
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Ordering key shared by every spectrum in the crate.
pub fn radiance_order(a: &C64, b: &C64) -> Ordering {
    a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re))
}

fn check_input(a: &ComplexMatrix, opts: &EigOptions) -> Result<()> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition of a {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    if a.rows() > opts.max_dim {
        return Err(Error::DimensionCap {
            dim: a.rows(),
            cap: opts.max_dim,
            mib: estimate_eig_mib(a.rows()),
        });
    }
    a.check_finite()
}

/// Rough peak memory of a dense complex eigensolve with eigenvectors.
pub fn estimate_eig_mib(dim: usize) -> u64 {
    // input, Schur form, Schur vectors, eigenvectors, residual workspace
    5 * dense_mib(dim)
}

/// Raw solve: unsorted eigenvalues and unit-norm eigenvectors.
fn solve_raw(a: &Mat<C64>) -> Result<(Vec<C64>, Mat<C64>)> {
    let n = a.nrows();
    let par = Par::Seq;
    let mut s = Diag::<C64>::zeros(n);
    let mut u = Mat::<C64>::zeros(n, n);
    let scratch = evd::evd_scratch::<C64>(
        n,
        ComputeEigenvectors::No,
        ComputeEigenvectors::Yes,
        par,
        Default::default(),
    );
    let mut mem = MemBuffer::new(scratch);
    evd::evd_cplx(
        a.as_ref(),
        s.as_mut(),
        None,
        Some(u.as_mut()),
        par,
        MemStack::new(&mut mem),
        Default::default(),
    )
    .map_err(|_| Error::NoConvergence)?;

    for j in 0..n {
        let norm = (0..n).map(|i| u[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            for i in 0..n {
                u[(i, j)] /= norm;
            }
        }
    }
    let values = (0..n).map(|k| s[k]).collect();
    Ok((values, u))
}

fn residuals(a: &Mat<C64>, values: &[C64], u: &Mat<C64>) -> Vec<f64> {
    let mut r = a * u;
    for (j, lambda) in values.iter().enumerate() {
        for i in 0..r.nrows() {
            r[(i, j)] -= *lambda * u[(i, j)];
        }
    }
    (0..r.ncols())
        .map(|j| (0..r.nrows()).map(|i| r[(i, j)].norm_sqr()).sum::<f64>().sqrt())
        .collect()
}

fn certify(residuals: &[f64], bound: f64, order: &[usize]) -> Result<()> {
    for (pos, &k) in order.iter().enumerate() {
        let r = residuals[k];
        if !(r <= bound) {
            return Err(Error::Uncertified {
                index: pos,
                residual: r,
                bound,
            });
        }
    }
    Ok(())
}

/// Dense non-Hermitian eigendecomposition with residual certification.
pub fn eig_dense(a: &ComplexMatrix, opts: &EigOptions) -> Result<EigenDecomposition> {
    check_input(a, opts)?;
    let n = a.rows();
    let af = a.to_faer();
    let (values, u) = solve_raw(&af)?;
    let res = residuals(&af, &values, &u);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| radiance_order(&values[i], &values[j]));
    certify(&res, RESIDUAL_TOL * a.frobenius_norm(), &order)?;

    Ok(EigenDecomposition {
        values: order.iter().map(|&k| values[k]).collect(),
        vectors: ComplexMatrix::from_fn(n, n, |i, j| u[(i, order[j])]),
        residuals: order.iter().map(|&k| res[k]).collect(),
        parities: None,
    })
}

/// Eigendecomposition of a mirror-invariant matrix, solved block by block in
/// the even and odd subspaces. Vectors come back in the original basis with
/// exact parity labels.
pub fn eig_mirror_blocked(a: &ComplexMatrix, blocks: &MirrorBlocks, opts: &EigOptions) -> Result<EigenDecomposition> {
    check_input(a, opts)?;
    if blocks.dim() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "mirror blocks of dimension {} for a {}x{} matrix",
            blocks.dim(),
            a.rows(),
            a.cols()
        )));
    }
    let leak = blocks.invariance_defect(a);
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    if leak > 1e-12 * scale {
        return Err(Error::InvalidConfig(format!(
            "matrix is not mirror invariant (defect {leak:e})"
        )));
    }

    let n = a.rows();
    let bound = RESIDUAL_TOL * a.frobenius_norm();
    let mut values = Vec::with_capacity(n);
    let mut vecs: Vec<Vec<C64>> = Vec::with_capacity(n);
    let mut res = Vec::with_capacity(n);
    let mut parities = Vec::with_capacity(n);

    for (block, parity) in [(&blocks.even, Parity::Even), (&blocks.odd, Parity::Odd)] {
        if block.is_empty() {
            continue;
        }
        let b = blocks.project(a, block).to_faer();
        let (vals, u) = solve_raw(&b)?;
        // Q has orthonormal columns and A is block diagonal in its basis, so the
        // block residual equals the full-space residual.
        res.extend(residuals(&b, &vals, &u));
        for j in 0..vals.len() {
            let coords: Vec<C64> = (0..u.nrows()).map(|i| u[(i, j)]).collect();
            vecs.push(blocks.lift(block, &coords));
            parities.push(parity);
        }
        values.extend(vals);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| radiance_order(&values[i], &values[j]));
    certify(&res, bound, &order)?;

    Ok(EigenDecomposition {
        values: order.iter().map(|&k| values[k]).collect(),
        vectors: ComplexMatrix::from_fn(n, n, |i, j| vecs[order[j]][i]),
        residuals: order.iter().map(|&k| res[k]).collect(),
        parities: Some(order.iter().map(|&k| parities[k]).collect()),
    })
}
