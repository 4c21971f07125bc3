//! Per-state metrics for two-excitation eigenstates and the heuristic state taxonomy.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::PairBasis;
use crate::matrix::{ComplexMatrix, C64};

/// Parity scores below this are labelled [`Parity::Mixed`].
pub const PARITY_THRESHOLD: f64 = 0.99;

/// A two-photon eigenstate: per-excitation energy ε and the symmetric amplitude
/// matrix Ψ_nm, normalized over the full (n, m) grid.
#[derive(Clone, Debug)]
pub struct TwoExcitationState {
    pub energy: C64,
    amplitudes: ComplexMatrix,
    /// Position of the state in its spectrum.
    pub index: usize,
}

impl TwoExcitationState {
    /// Builds Ψ from pair-basis coefficients c_(n<m): Ψ_nm = Ψ_mn = c/√2, so that
    /// Σ_{n,m} |Ψ_nm|² = Σ |c|² = 1. The global phase is fixed by making the
    /// largest coefficient real and positive.
    pub fn from_pair_vector(basis: &PairBasis, energy: C64, coeffs: &[C64], index: usize) -> Result<Self> {
        if coeffs.len() != basis.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for a pair basis of dimension {}",
                coeffs.len(),
                basis.dim()
            )));
        }
        let norm = coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Empty("zero state vector".into()));
        }
        let pivot = coeffs
            .iter()
            .copied()
            .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
            .expect("non-empty");
        let phase = pivot.conj() / pivot.norm();
        let scale = phase / (norm * std::f64::consts::SQRT_2);

        let n = basis.n_atoms();
        let mut psi = ComplexMatrix::zeros(n, n);
        for (&(a, b), c) in basis.pairs().iter().zip(coeffs) {
            let v = c * scale;
            psi[(a, b)] = v;
            psi[(b, a)] = v;
        }
        Ok(Self {
            energy,
            amplitudes: psi.flag_symmetric(),
            index,
        })
    }

    /// Wraps an amplitude matrix directly. It must be square and symmetric with a
    /// zero diagonal; it is renormalized to unit Frobenius norm.
    pub fn from_amplitudes(energy: C64, mut psi: ComplexMatrix, index: usize) -> Result<Self> {
        psi.check_symmetric(1e-12)?;
        if (0..psi.rows()).any(|i| psi[(i, i)] != C64::new(0.0, 0.0)) {
            return Err(Error::InvalidConfig("double occupation amplitude must vanish".into()));
        }
        let norm = psi.frobenius_norm();
        if norm == 0.0 {
            return Err(Error::Empty("zero amplitude matrix".into()));
        }
        Ok(Self {
            energy,
            amplitudes: psi.scale(C64::new(1.0 / norm, 0.0)),
            index,
        })
    }

    pub fn n_atoms(&self) -> usize {
        self.amplitudes.rows()
    }

    pub fn amplitudes(&self) -> &ComplexMatrix {
        &self.amplitudes
    }

    pub fn probability(&self, n: usize, m: usize) -> f64 {
        self.amplitudes[(n, m)].norm_sqr()
    }
}

/// Mean photon-photon separation ρ = Σ_{n,m} |n−m| |Ψ_nm|².
pub fn photon_distance(state: &TwoExcitationState) -> f64 {
    let n = state.n_atoms();
    let mut rho = 0.0;
    for a in 0..n {
        for b in 0..n {
            rho += a.abs_diff(b) as f64 * state.probability(a, b);
        }
    }
    rho
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
    Mixed,
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
            Parity::Mixed => "mixed",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParityScore {
    pub label: Parity,
    pub score: f64,
}

fn score_overlap(overlap: C64, norm_sqr: f64) -> Result<ParityScore> {
    if norm_sqr == 0.0 {
        return Err(Error::Empty("parity of a zero vector".into()));
    }
    let o = overlap / norm_sqr;
    let score = o.norm().min(1.0);
    let label = if score < PARITY_THRESHOLD {
        Parity::Mixed
    } else if o.re >= 0.0 {
        Parity::Even
    } else {
        Parity::Odd
    };
    Ok(ParityScore { label, score })
}

/// Mirror parity of a single-site vector under n -> N+1-n.
///
/// The score is |⟨Pv, v⟩| / ‖v‖², so it does not depend on the overall phase of
/// `v` (or on whether `v` carries unconjugated normalization).
pub fn parity_of_vector(v: &[C64]) -> Result<ParityScore> {
    let n = v.len();
    let overlap: C64 = (0..n).map(|i| v[n - 1 - i].conj() * v[i]).sum();
    let norm_sqr = v.iter().map(|z| z.norm_sqr()).sum();
    score_overlap(overlap, norm_sqr)
}

/// Two-particle mirror parity: the reflection acts on both coordinates.
pub fn parity_of_matrix(psi: &ComplexMatrix) -> Result<ParityScore> {
    if !psi.is_square() {
        return Err(Error::DimensionMismatch(
            "parity needs a square amplitude matrix".into(),
        ));
    }
    let n = psi.rows();
    let mut overlap = C64::new(0.0, 0.0);
    for a in 0..n {
        for b in 0..n {
            overlap += psi[(n - 1 - a, n - 1 - b)].conj() * psi[(a, b)];
        }
    }
    let norm_sqr = psi.as_slice().iter().map(|z| z.norm_sqr()).sum();
    score_overlap(overlap, norm_sqr)
}

pub fn parity_of_state(state: &TwoExcitationState) -> ParityScore {
    parity_of_matrix(state.amplitudes()).expect("normalized state is nonzero")
}

/// Default edge window: max(2, N/10), clamped to the valid range.
pub fn default_edge_width(n_atoms: usize) -> usize {
    (n_atoms / 10).max(2).min(max_edge_width(n_atoms))
}

fn max_edge_width(n_atoms: usize) -> usize {
    (n_atoms / 4).max(1)
}

/// Fraction of |Ψ|² with both photons within `w` sites of either edge.
pub fn edge_mass(state: &TwoExcitationState, w: usize) -> Result<f64> {
    let n = state.n_atoms();
    if w == 0 || w > max_edge_width(n) {
        return Err(Error::OutOfRange {
            index: w,
            len: max_edge_width(n),
        });
    }
    let near_edge = |k: usize| k < w || k >= n - w;
    let mut mass = 0.0;
    for a in (0..n).filter(|&a| near_edge(a)) {
        for b in (0..n).filter(|&b| near_edge(b)) {
            mass += state.probability(a, b);
        }
    }
    Ok(mass)
}

/// Distribution of the center-of-mass coordinate n + m.
pub fn center_of_mass_distribution(state: &TwoExcitationState) -> Vec<f64> {
    let n = state.n_atoms();
    let mut p = vec![0.0; 2 * n - 1];
    for a in 0..n {
        for b in 0..n {
            p[a + b] += state.probability(a, b);
        }
    }
    p
}

/// Inverse participation ratio Σ p² of a probability vector.
pub fn inverse_participation(p: &[f64]) -> f64 {
    p.iter().map(|x| x * x).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateLabel {
    Scattering,
    /// Reserved: no detector is implemented.
    Fermionized,
    BoundPair,
    EdgeBoundPair,
    /// Reserved: no detector is implemented.
    InteractionLocalized,
    DistantBound,
    Unclassified,
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StateLabel::Scattering => "scattering",
            StateLabel::Fermionized => "fermionized",
            StateLabel::BoundPair => "bound-pair",
            StateLabel::EdgeBoundPair => "edge-bound-pair",
            StateLabel::InteractionLocalized => "interaction-localized",
            StateLabel::DistantBound => "distant-bound",
            StateLabel::Unclassified => "unclassified",
        })
    }
}

/// Heuristic thresholds of the state taxonomy. The defaults are engineering
/// choices, not derived quantities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyThresholds {
    /// Distant-bound needs ρ ≥ this fraction of N − 1.
    pub distant_rho_fraction: f64,
    /// Edge-mass threshold for the edge-localized labels.
    pub edge_mass: f64,
    /// Bound pairs have ρ at most this many sites.
    pub bound_rho: f64,
}

impl Default for ClassifyThresholds {
    fn default() -> Self {
        Self {
            distant_rho_fraction: 0.6,
            edge_mass: 0.5,
            bound_rho: 3.0,
        }
    }
}

pub fn classify(rho: f64, edge_mass: f64, n_atoms: usize, thr: &ClassifyThresholds) -> StateLabel {
    if !rho.is_finite() || !edge_mass.is_finite() || n_atoms < 2 {
        return StateLabel::Unclassified;
    }
    let span = (n_atoms - 1) as f64;
    if rho >= thr.distant_rho_fraction * span && edge_mass >= thr.edge_mass {
        StateLabel::DistantBound
    } else if rho <= thr.bound_rho {
        if edge_mass >= thr.edge_mass {
            StateLabel::EdgeBoundPair
        } else {
            StateLabel::BoundPair
        }
    } else {
        StateLabel::Scattering
    }
}

/// One row of a spectrum table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRecord {
    pub index: usize,
    pub energy: C64,
    pub rho: f64,
    pub parity: Parity,
    pub parity_score: f64,
    pub edge_mass: f64,
    pub label: StateLabel,
}

impl SpectrumRecord {
    pub fn from_state(state: &TwoExcitationState, edge_width: usize, thr: &ClassifyThresholds) -> Result<Self> {
        let rho = photon_distance(state);
        let em = edge_mass(state, edge_width)?;
        let parity = parity_of_state(state);
        Ok(Self {
            index: state.index,
            energy: state.energy,
            rho,
            parity: parity.label,
            parity_score: parity.score,
            edge_mass: em,
            label: classify(rho, em, state.n_atoms(), thr),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `counts.len() + 1` bin edges.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn mode_bin(&self) -> usize {
        let mut best = 0;
        for (k, &c) in self.counts.iter().enumerate() {
            if c > self.counts[best] {
                best = k;
            }
        }
        best
    }

    pub fn bin_center(&self, k: usize) -> f64 {
        0.5 * (self.edges[k] + self.edges[k + 1])
    }
}

/// Uniform histogram of ρ values on [0, N − 1]. The last bin is closed.
pub fn distance_histogram(rhos: &[f64], n_atoms: usize, bins: usize) -> Result<Histogram> {
    if rhos.is_empty() {
        return Err(Error::Empty("distance histogram of no states".into()));
    }
    if bins < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 bins, got {bins}")));
    }
    if n_atoms < 2 {
        return Err(Error::InvalidConfig("histogram range needs N >= 2".into()));
    }
    let hi = (n_atoms - 1) as f64;
    let width = hi / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|k| k as f64 * width).collect();
    let mut counts = vec![0u64; bins];
    for &r in rhos {
        let k = ((r / width).floor().max(0.0) as usize).min(bins - 1);
        counts[k] += 1;
    }
    Ok(Histogram { edges, counts })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn corner_state(n: usize) -> TwoExcitationState {
        let basis = PairBasis::new(n);
        let mut v = vec![c(0.0, 0.0); basis.dim()];
        v[basis.index_of(0, n - 1).unwrap()] = c(1.0, 0.0);
        TwoExcitationState::from_pair_vector(&basis, c(0.0, -1.0), &v, 0).unwrap()
    }

    fn uniform_state(n: usize) -> TwoExcitationState {
        let basis = PairBasis::new(n);
        let v = vec![c(1.0, 0.0); basis.dim()];
        TwoExcitationState::from_pair_vector(&basis, c(0.0, -1.0), &v, 0).unwrap()
    }

    #[test]
    fn corner_distance_is_maximal() {
        let s = corner_state(9);
        assert!((s.probability(0, 8) - 0.5).abs() < 1e-15);
        assert!((photon_distance(&s) - 8.0).abs() < 1e-13);
    }

    #[test]
    fn uniform_three_sites() {
        let rho = photon_distance(&uniform_state(3));
        assert!((rho - 4.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn normalization_over_full_grid() {
        let s = uniform_state(6);
        let total: f64 = s.amplitudes().as_slice().iter().map(|z| z.norm_sqr()).sum();
        assert!((total - 1.0).abs() < 1e-12);
        for i in 0..6 {
            assert_eq!(s.amplitudes()[(i, i)], c(0.0, 0.0));
        }
    }

    #[test]
    fn parity_of_edge_vectors() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let even = vec![c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0)];
        let odd = vec![c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-h, 0.0)];
        let p = parity_of_vector(&even).unwrap();
        assert_eq!(p.label, Parity::Even);
        assert!((p.score - 1.0).abs() < 1e-14);
        let p = parity_of_vector(&odd).unwrap();
        assert_eq!(p.label, Parity::Odd);
        assert!((p.score - 1.0).abs() < 1e-14);
        let mixed = vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        assert_eq!(parity_of_vector(&mixed).unwrap().label, Parity::Mixed);
        assert!(parity_of_vector(&[c(0.0, 0.0); 3]).is_err());
    }

    #[test]
    fn parity_phase_invariant() {
        let v = vec![c(0.3, 0.1), c(-0.2, 0.5), c(0.3, 0.1)];
        let base = parity_of_vector(&v).unwrap();
        let rotated: Vec<C64> = v.iter().map(|z| z * C64::from_polar(1.0, 2.1)).collect();
        let p = parity_of_vector(&rotated).unwrap();
        assert_eq!(p.label, base.label);
        assert!((p.score - base.score).abs() < 1e-14);
    }

    #[test]
    fn edge_mass_cases() {
        let s = corner_state(20);
        for w in 1..=5 {
            assert!((edge_mass(&s, w).unwrap() - 1.0).abs() < 1e-14);
        }
        assert!(edge_mass(&s, 0).is_err());
        assert!(edge_mass(&s, 6).is_err());
        assert_eq!(default_edge_width(100), 10);
        assert_eq!(default_edge_width(12), 2);
        assert_eq!(default_edge_width(3), 1);
    }

    #[test]
    fn edge_mass_uniform_by_direct_count() {
        let n = 100;
        let w = 10;
        let s = uniform_state(n);
        // 2w edge sites per axis: (2w)^2 cells minus the 2w diagonal cells,
        // out of N(N-1) off-diagonal cells of equal weight.
        let expect = ((2 * w) * (2 * w) - 2 * w) as f64 / (n * (n - 1)) as f64;
        assert!((edge_mass(&s, w).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn classify_rules() {
        let t = ClassifyThresholds::default();
        assert_eq!(classify(99.0, 1.0, 100, &t), StateLabel::DistantBound);
        assert_eq!(classify(1.2, 0.1, 100, &t), StateLabel::BoundPair);
        assert_eq!(classify(1.2, 0.9, 100, &t), StateLabel::EdgeBoundPair);
        assert_eq!(classify(30.0, 0.9, 100, &t), StateLabel::Scattering);
        assert_eq!(classify(80.0, 0.2, 100, &t), StateLabel::Scattering);
        assert_eq!(classify(f64::NAN, 0.2, 100, &t), StateLabel::Unclassified);
    }

    #[test]
    fn histogram_single_state() {
        let h = distance_histogram(&[5.0], 11, 10).unwrap();
        assert_eq!(h.counts.iter().filter(|&&c| c > 0).count(), 1);
        assert_eq!(h.counts[5], 1);
        assert_eq!(h.edges.len(), 11);
        let h = distance_histogram(&[10.0], 11, 10).unwrap();
        assert_eq!(h.counts[9], 1);
        assert!(distance_histogram(&[], 11, 10).is_err());
        assert!(distance_histogram(&[1.0], 11, 1).is_err());
    }

    #[test]
    fn center_of_mass_ipr_of_corner_state() {
        let s = corner_state(6);
        let p = center_of_mass_distribution(&s);
        // both orderings land on n + m = 5
        assert!((p[5] - 1.0).abs() < 1e-14);
        assert!((inverse_participation(&p) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn from_amplitudes_checks() {
        let mut psi = ComplexMatrix::zeros(3, 3);
        psi[(0, 1)] = c(1.0, 0.0);
        psi[(1, 0)] = c(1.0, 0.0);
        let s = TwoExcitationState::from_amplitudes(c(0.0, -1.0), psi.clone(), 0).unwrap();
        assert!((photon_distance(&s) - 1.0).abs() < 1e-14);
        psi[(2, 2)] = c(0.1, 0.0);
        assert!(TwoExcitationState::from_amplitudes(c(0.0, -1.0), psi, 0).is_err());
    }
}
