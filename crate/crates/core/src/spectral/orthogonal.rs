//! Complex-orthogonal spectral decomposition of a complex symmetric matrix,
//! Ψ = Σ_ν λ_ν ψ^ν (ψ^ν)ᵀ with Σ_n ψ_n^ν ψ_n^μ = δ_νμ (no conjugation).

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::eig::{eig_dense, EigOptions};
use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, C64};
use crate::observables::{parity_of_vector, Parity};

/// |Σ v²| below this fraction of Σ|v|² marks a quasi-null (isotropic) vector.
pub const QUASI_NULL_TOL: f64 = 1e-10;

/// Eigenvalue gaps below this fraction of ‖Ψ‖_F are flagged as near-defective.
pub const DEFECT_GAP_TOL: f64 = 1e-10;

/// Symmetry tolerance required of the input.
pub const INPUT_SYMMETRY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrthogonalTerm {
    pub lambda: C64,
    /// Unconjugated-normalized vector, Σ ψ² = 1.
    pub vector: Vec<C64>,
    pub parity: Parity,
    pub parity_score: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrthogonalSymmetricDecomposition {
    /// Resolved terms sorted by descending |λ|.
    pub terms: Vec<OrthogonalTerm>,
    /// Eigenvalues whose eigenvectors were quasi-null; excluded from `terms`.
    pub unresolved: Vec<C64>,
    /// Pairs of term indices whose eigenvalues are closer than the defect gap.
    pub near_defective: Vec<(usize, usize)>,
}

impl OrthogonalSymmetricDecomposition {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn lambdas(&self) -> Vec<C64> {
        self.terms.iter().map(|t| t.lambda).collect()
    }

    /// Largest |Σ_n ψ_n^ν ψ_n^μ − δ_νμ| over all resolved pairs.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for (i, a) in self.terms.iter().enumerate() {
            for (j, b) in self.terms.iter().enumerate().skip(i) {
                let dot: C64 = a.vector.iter().zip(&b.vector).map(|(x, y)| x * y).sum();
                let target = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                worst = worst.max((dot - target).norm());
            }
        }
        worst
    }

    /// Σ_{ν<k} λ_ν ψ^ν (ψ^ν)ᵀ without renormalization.
    pub fn partial_sum(&self, k: usize) -> Result<ComplexMatrix> {
        if k == 0 || k > self.terms.len() {
            return Err(Error::OutOfRange {
                index: k,
                len: self.terms.len(),
            });
        }
        let n = self.terms[0].vector.len();
        let mut out = ComplexMatrix::zeros(n, n);
        for t in &self.terms[..k] {
            for i in 0..n {
                let li = t.lambda * t.vector[i];
                for j in 0..n {
                    out[(i, j)] += li * t.vector[j];
                }
            }
        }
        Ok(out.flag_symmetric())
    }

    pub fn reconstruct(&self) -> Result<ComplexMatrix> {
        self.partial_sum(self.terms.len())
    }
}

/// Principal square root, then the overall sign chosen so that the
/// largest-magnitude entry has argument in (−π/2, π/2]. Near-ties go to the
/// lowest index so that mirror partners pick the same pivot.
fn unconjugated_normalize(v: &mut [C64], root: C64) {
    for z in v.iter_mut() {
        *z /= root;
    }
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let pivot = v
        .iter()
        .copied()
        .find(|z| z.norm() >= max * (1.0 - 1e-8))
        .unwrap_or_default();
    let arg = pivot.arg();
    if !(arg > -FRAC_PI_2 && arg <= FRAC_PI_2) {
        for z in v.iter_mut() {
            *z = -*z;
        }
    }
}

/// Unconjugated Gram-Schmidt inside one cluster of (numerically) equal eigenvalues.
fn orthogonalize_cluster(vectors: &mut [Vec<C64>]) {
    let dot = |a: &[C64], b: &[C64]| -> C64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };
    for i in 0..vectors.len() {
        for j in 0..i {
            let (head, tail) = vectors.split_at_mut(i);
            let proj = dot(&tail[0], &head[j]);
            for (x, y) in tail[0].iter_mut().zip(&head[j]) {
                *x -= proj * y;
            }
        }
        let s = dot(&vectors[i], &vectors[i]);
        let root = s.sqrt();
        if root.norm() > 0.0 {
            unconjugated_normalize(&mut vectors[i], root);
        }
    }
}

/// Decomposes a complex symmetric Ψ via its eigendecomposition, renormalizing
/// each eigenvector so that vᵀv = 1.
pub fn decompose_symmetric(psi: &ComplexMatrix) -> Result<OrthogonalSymmetricDecomposition> {
    let mut psi_checked = psi.clone();
    psi_checked.check_symmetric(INPUT_SYMMETRY_TOL)?;
    let fro = psi.frobenius_norm();
    let eig = eig_dense(
        psi,
        &EigOptions {
            max_dim: psi.rows().max(1),
        },
    )?;

    let mut order: Vec<usize> = (0..eig.len()).collect();
    order.sort_by(|&i, &j| eig.values[j].norm().total_cmp(&eig.values[i].norm()).then(i.cmp(&j)));

    let mut lambdas = Vec::new();
    let mut vectors: Vec<Vec<C64>> = Vec::new();
    let mut unresolved = Vec::new();
    for &k in &order {
        let mut v = eig.vector(k);
        let s: C64 = v.iter().map(|z| z * z).sum();
        let mag: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if s.norm() < QUASI_NULL_TOL * mag {
            unresolved.push(eig.values[k]);
            continue;
        }
        unconjugated_normalize(&mut v, s.sqrt());
        lambdas.push(eig.values[k]);
        vectors.push(v);
    }

    // Exactly degenerate eigenvalues leave the eigenvectors free inside their
    // eigenspace; make them complex-orthogonal there.
    let gap = DEFECT_GAP_TOL * fro;
    let mut near_defective = Vec::new();
    let mut visited = vec![false; lambdas.len()];
    for i in 0..lambdas.len() {
        if visited[i] {
            continue;
        }
        let cluster: Vec<usize> = (i..lambdas.len())
            .filter(|&j| (lambdas[j] - lambdas[i]).norm() < gap)
            .collect();
        for &j in &cluster {
            visited[j] = true;
        }
        if cluster.len() > 1 {
            for w in cluster.windows(2) {
                near_defective.push((w[0], w[1]));
            }
            let mut group: Vec<Vec<C64>> = cluster.iter().map(|&j| vectors[j].clone()).collect();
            orthogonalize_cluster(&mut group);
            for (&j, v) in cluster.iter().zip(group) {
                vectors[j] = v;
            }
        }
    }

    let terms = lambdas
        .into_iter()
        .zip(vectors)
        .map(|(lambda, vector)| {
            let p = parity_of_vector(&vector).expect("normalized vector is nonzero");
            OrthogonalTerm {
                lambda,
                vector,
                parity: p.label,
                parity_score: p.score,
            }
        })
        .collect();

    Ok(OrthogonalSymmetricDecomposition {
        terms,
        unresolved,
        near_defective,
    })
}

/// Rank-k approximation renormalized to unit Frobenius norm.
pub fn truncate_decomposition(dec: &OrthogonalSymmetricDecomposition, k: usize) -> Result<ComplexMatrix> {
    let partial = dec.partial_sum(k)?;
    let norm = partial.frobenius_norm();
    if norm == 0.0 {
        return Err(Error::Empty("truncation has zero norm".into()));
    }
    Ok(partial.scale(C64::new(1.0 / norm, 0.0)))
}

/// ‖Ψ − approx‖_F / ‖Ψ‖_F.
pub fn relative_error(psi: &ComplexMatrix, approx: &ComplexMatrix) -> Result<f64> {
    Ok(psi.sub(approx)?.frobenius_norm() / psi.frobenius_norm())
}
