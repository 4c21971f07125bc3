//! Waveguide-mediated Hamiltonian of an equidistant atom array.
//!
//! Energies are in units of the single-atom waveguide decay rate γ₁D and are
//! counted from the atomic resonance. The coupling between atoms `n` and `m`
//! is `-i exp(iφ|n-m|)`, including the self term `-i` on the diagonal.
//!
//! Site indices are 0-based in code; file formats and docs that talk about
//! "site 1" mean index 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, C64};

/// Largest array handled by [`oracle_full_space`] (2^N product states).
pub const ORACLE_MAX_ATOMS: usize = 12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayConfig {
    pub n_atoms: usize,
    /// Phase φ = ω₀d/c picked up between neighbouring atoms, in radians.
    pub phase: f64,
    /// Nearest-neighbour interaction χ_n between atoms n and n+1; length N-1.
    pub disorder: Vec<f64>,
}

impl ArrayConfig {
    pub fn new(n_atoms: usize, phase: f64) -> Self {
        Self {
            n_atoms,
            phase,
            disorder: vec![0.0; n_atoms.saturating_sub(1)],
        }
    }

    pub fn with_disorder(mut self, disorder: Vec<f64>) -> Self {
        self.disorder = disorder;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_atoms == 0 {
            return Err(Error::InvalidConfig("n_atoms must be positive".into()));
        }
        if !self.phase.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "phase must be finite, got {}",
                self.phase
            )));
        }
        if self.disorder.len() != self.n_atoms - 1 {
            return Err(Error::InvalidConfig(format!(
                "disorder has {} entries, expected n_atoms - 1 = {}",
                self.disorder.len(),
                self.n_atoms - 1
            )));
        }
        if let Some(x) = self.disorder.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidConfig(format!("non-finite disorder value {x}")));
        }
        Ok(())
    }

    pub fn validate_pair_sector(&self) -> Result<()> {
        self.validate()?;
        if self.n_atoms < 2 {
            return Err(Error::InvalidConfig("two-excitation sector needs n_atoms >= 2".into()));
        }
        Ok(())
    }

    pub fn is_clean(&self) -> bool {
        self.disorder.iter().all(|&x| x == 0.0)
    }

    /// True when the disorder pattern is invariant under n -> N-1-n, so the
    /// pair Hamiltonian commutes with the mirror operation.
    pub fn is_mirror_symmetric(&self) -> bool {
        let k = self.disorder.len();
        (0..k).all(|i| self.disorder[i] == self.disorder[k - 1 - i])
    }

    /// Single-excitation coupling between sites `n` and `m`.
    #[inline]
    pub fn coupling(&self, n: usize, m: usize) -> C64 {
        let d = n.abs_diff(m) as f64;
        C64::new(0.0, -1.0) * C64::from_polar(1.0, self.phase * d)
    }
}

/// Hard-core two-excitation basis: pairs (n, m) with n < m in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairBasis {
    n_atoms: usize,
    pairs: Vec<(usize, usize)>,
}

impl PairBasis {
    pub fn new(n_atoms: usize) -> Self {
        let mut pairs = Vec::with_capacity(n_atoms * n_atoms.saturating_sub(1) / 2);
        for n in 0..n_atoms {
            for m in (n + 1)..n_atoms {
                pairs.push((n, m));
            }
        }
        Self { n_atoms, pairs }
    }

    pub fn for_config(cfg: &ArrayConfig) -> Self {
        Self::new(cfg.n_atoms)
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn dim(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn pair(&self, index: usize) -> (usize, usize) {
        self.pairs[index]
    }

    /// Linear index of the pair {n, m}; order of the arguments does not matter.
    pub fn index_of(&self, n: usize, m: usize) -> Option<usize> {
        let (n, m) = if n < m { (n, m) } else { (m, n) };
        if n == m || m >= self.n_atoms {
            return None;
        }
        Some(n * (2 * self.n_atoms - n - 1) / 2 + (m - n - 1))
    }

    /// Mirror image n -> N-1-n of the pair at `index`, as a linear index.
    pub fn mirror_index(&self, index: usize) -> usize {
        let (n, m) = self.pairs[index];
        let last = self.n_atoms - 1;
        self.index_of(last - m, last - n)
            .expect("mirror of a valid pair is a valid pair")
    }
}

/// Single-excitation Hamiltonian, N x N. Disorder does not act in this sector.
pub fn build_single_hamiltonian(cfg: &ArrayConfig) -> Result<ComplexMatrix> {
    cfg.validate()?;
    let n = cfg.n_atoms;
    Ok(ComplexMatrix::from_fn(n, n, |i, j| cfg.coupling(i, j)).flag_symmetric())
}

/// Two-excitation Hamiltonian in the pair basis. Its eigenvalues are the total
/// energy 2ε of the pair.
///
/// Matrix element between ket (p, q) and bra (a, b):
/// `δ_bq H_ap + δ_aq H_bp + δ_bp H_aq + δ_ap H_bq`, plus χ_p on the diagonal of
/// the nearest-neighbour pair (p, p+1).
pub fn build_pair_hamiltonian(cfg: &ArrayConfig, basis: &PairBasis) -> Result<ComplexMatrix> {
    cfg.validate_pair_sector()?;
    if basis.n_atoms() != cfg.n_atoms {
        return Err(Error::DimensionMismatch(format!(
            "pair basis built for N = {}, config has N = {}",
            basis.n_atoms(),
            cfg.n_atoms
        )));
    }
    let h = build_single_hamiltonian(cfg)?;
    let zero = C64::new(0.0, 0.0);
    let delta = |x: usize, y: usize, v: C64| if x == y { v } else { zero };

    let pairs = basis.pairs();
    let mut m = ComplexMatrix::from_fn(basis.dim(), basis.dim(), |row, col| {
        let (a, b) = pairs[row];
        let (p, q) = pairs[col];
        delta(b, q, h[(a, p)]) + delta(a, q, h[(b, p)]) + delta(b, p, h[(a, q)]) + delta(a, p, h[(b, q)])
    });
    for (p, chi) in cfg.disorder.iter().enumerate() {
        if *chi != 0.0 {
            let k = basis.index_of(p, p + 1).expect("nearest-neighbour pair");
            m[(k, k)] += C64::new(*chi, 0.0);
        }
    }
    Ok(m.flag_symmetric())
}

/// Builds the same Hamiltonian by brute force on the 2^N product space of
/// two-level atoms and projects it onto the two-excitation subspace, in
/// [`PairBasis`] order. Used to validate [`build_pair_hamiltonian`].
pub fn oracle_full_space(cfg: &ArrayConfig) -> Result<ComplexMatrix> {
    cfg.validate_pair_sector()?;
    let n = cfg.n_atoms;
    if n > ORACLE_MAX_ATOMS {
        return Err(Error::OracleCap {
            n,
            cap: ORACLE_MAX_ATOMS,
        });
    }

    // Product state s has atom k excited iff bit k is set.
    let full_dim = 1usize << n;
    let two: Vec<usize> = (0..full_dim).filter(|s| s.count_ones() == 2).collect();
    let mut position = vec![usize::MAX; full_dim];
    // Lexicographic pair order (n, m), n < m; bit-pattern order differs, so sort.
    let mut ordered = two.clone();
    ordered.sort_by_key(|s| {
        let lo = s.trailing_zeros() as usize;
        let hi = (usize::BITS - 1 - s.leading_zeros()) as usize;
        (lo, hi)
    });
    for (k, s) in ordered.iter().enumerate() {
        position[*s] = k;
    }

    let d = ordered.len();
    let mut out = ComplexMatrix::zeros(d, d);
    for &ket in &ordered {
        let col = position[ket];
        for (target, amp) in apply_full_hamiltonian(cfg, ket) {
            if target.count_ones() != 2 {
                return Err(Error::DimensionMismatch(format!(
                    "operator leaked state {ket:b} into {target:b}"
                )));
            }
            out[(position[target], col)] += amp;
        }
    }
    Ok(out)
}

/// H|s⟩ for a product basis state, as a list of (state, amplitude).
/// Σ_{n,m} J_nm σ_n† σ_m with hard-core σ_n† σ_n† = 0, plus χ_n n̂_n n̂_{n+1}.
fn apply_full_hamiltonian(cfg: &ArrayConfig, s: usize) -> Vec<(usize, C64)> {
    let n_atoms = cfg.n_atoms;
    let excited = |state: usize, k: usize| state & (1 << k) != 0;
    let mut out = Vec::new();
    for m in 0..n_atoms {
        if !excited(s, m) {
            continue;
        }
        // σ_m lowers atom m
        let lowered = s & !(1 << m);
        for n in 0..n_atoms {
            if excited(lowered, n) {
                continue;
            }
            // σ_n† raises atom n
            out.push((lowered | (1 << n), cfg.coupling(n, m)));
        }
    }
    for (k, chi) in cfg.disorder.iter().enumerate() {
        if excited(s, k) && excited(s, k + 1) {
            out.push((s, C64::new(*chi, 0.0)));
        }
    }
    out
}

/// Real orthogonal change of basis that splits a mirror-invariant operator into
/// even and odd blocks. Each block column has one or two nonzero entries.
#[derive(Clone, Debug)]
pub struct MirrorBlocks {
    mirror: Vec<usize>,
    pub even: Vec<Vec<(usize, f64)>>,
    pub odd: Vec<Vec<(usize, f64)>>,
}

impl MirrorBlocks {
    /// `mirror` must be an involution on `0..mirror.len()`.
    pub fn from_involution(mirror: &[usize]) -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut even = Vec::new();
        let mut odd = Vec::new();
        for (i, &j) in mirror.iter().enumerate() {
            debug_assert_eq!(mirror[j], i);
            match i.cmp(&j) {
                std::cmp::Ordering::Equal => even.push(vec![(i, 1.0)]),
                std::cmp::Ordering::Less => {
                    even.push(vec![(i, h), (j, h)]);
                    odd.push(vec![(i, h), (j, -h)]);
                }
                std::cmp::Ordering::Greater => {}
            }
        }
        Self {
            mirror: mirror.to_vec(),
            even,
            odd,
        }
    }

    pub fn single(n_atoms: usize) -> Self {
        let mirror: Vec<usize> = (0..n_atoms).map(|i| n_atoms - 1 - i).collect();
        Self::from_involution(&mirror)
    }

    pub fn pairs(basis: &PairBasis) -> Self {
        let mirror: Vec<usize> = (0..basis.dim()).map(|k| basis.mirror_index(k)).collect();
        Self::from_involution(&mirror)
    }

    pub fn dim(&self) -> usize {
        self.mirror.len()
    }

    /// Largest `|A[P(i), P(j)] - A[i, j]|`; zero for a mirror-invariant operator.
    pub fn invariance_defect(&self, a: &ComplexMatrix) -> f64 {
        let p = &self.mirror;
        let mut worst = 0.0_f64;
        for i in 0..p.len() {
            for j in 0..p.len() {
                worst = worst.max((a[(p[i], p[j])] - a[(i, j)]).norm());
            }
        }
        worst
    }

    /// Qᵀ A Q restricted to one block.
    pub fn project(&self, a: &ComplexMatrix, block: &[Vec<(usize, f64)>]) -> ComplexMatrix {
        ComplexMatrix::from_fn(block.len(), block.len(), |i, j| {
            let mut acc = C64::new(0.0, 0.0);
            for &(r, wr) in &block[i] {
                for &(c, wc) in &block[j] {
                    acc += a[(r, c)] * (wr * wc);
                }
            }
            acc
        })
    }

    /// Maps a block-coordinate vector back to the full basis.
    pub fn lift(&self, block: &[Vec<(usize, f64)>], coords: &[C64]) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); self.dim()];
        for (col, &c) in block.iter().zip(coords) {
            for &(r, w) in col {
                v[r] += c * w;
            }
        }
        v
    }
}
