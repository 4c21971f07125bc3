//! Build → diagonalize → analyze for the one- and two-excitation sectors.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{build_pair_hamiltonian, build_single_hamiltonian, ArrayConfig, MirrorBlocks, PairBasis};
use crate::matrix::C64;
use crate::observables::{default_edge_width, ClassifyThresholds, SpectrumRecord, TwoExcitationState};
use crate::spectral::{eig_dense, eig_mirror_blocked, estimate_eig_mib, EigOptions, EigenDecomposition};

#[derive(Clone, Debug)]
pub struct SingleSpectrum {
    pub config: ArrayConfig,
    pub eig: EigenDecomposition,
}

impl SingleSpectrum {
    /// The single-excitation Hamiltonian is always mirror invariant, so the
    /// solve is blocked and every mode carries an exact parity label.
    pub fn solve(cfg: &ArrayConfig, opts: &EigOptions) -> Result<Self> {
        let h = build_single_hamiltonian(cfg)?;
        let eig = eig_mirror_blocked(&h, &MirrorBlocks::single(cfg.n_atoms), opts)?;
        Ok(Self {
            config: cfg.clone(),
            eig,
        })
    }

    pub fn energies(&self) -> &[C64] {
        &self.eig.values
    }

    /// Largest −Im ε. Spectra are sorted most radiant first.
    pub fn brightest(&self) -> usize {
        0
    }

    /// Brightest mode among those with the given parity.
    pub fn brightest_with_parity(&self, parity: crate::observables::Parity) -> Option<usize> {
        self.eig
            .parities
            .as_ref()
            .and_then(|p| p.iter().position(|&q| q == parity))
    }

    /// Mode k with the phase fixed so that the first site is real and positive.
    pub fn mode(&self, k: usize) -> Vec<C64> {
        let mut v = self.eig.vector(k);
        let pivot = v
            .iter()
            .copied()
            .find(|z| z.norm() > 1e-300)
            .unwrap_or(C64::new(1.0, 0.0));
        let phase = pivot.conj() / pivot.norm();
        for z in v.iter_mut() {
            *z *= phase;
        }
        v
    }
}

#[derive(Clone, Debug)]
pub struct PairSpectrum {
    pub config: ArrayConfig,
    pub basis: PairBasis,
    /// Eigenvalues here are total energies 2ε.
    pub eig: EigenDecomposition,
}

impl PairSpectrum {
    pub fn solve(cfg: &ArrayConfig, opts: &EigOptions) -> Result<Self> {
        cfg.validate_pair_sector()?;
        let basis = PairBasis::for_config(cfg);
        if basis.dim() > opts.max_dim {
            return Err(Error::DimensionCap {
                dim: basis.dim(),
                cap: opts.max_dim,
                mib: estimate_eig_mib(basis.dim()),
            });
        }
        let m = build_pair_hamiltonian(cfg, &basis)?;
        let eig = if cfg.is_mirror_symmetric() {
            eig_mirror_blocked(&m, &MirrorBlocks::pairs(&basis), opts)?
        } else {
            eig_dense(&m, opts)?
        };
        Ok(Self {
            config: cfg.clone(),
            basis,
            eig,
        })
    }

    pub fn len(&self) -> usize {
        self.eig.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eig.is_empty()
    }

    /// Per-excitation energy ε = (eigenvalue) / 2.
    pub fn energy(&self, k: usize) -> C64 {
        self.eig.values[k] * 0.5
    }

    pub fn energies(&self) -> Vec<C64> {
        (0..self.len()).map(|k| self.energy(k)).collect()
    }

    pub fn state(&self, k: usize) -> Result<TwoExcitationState> {
        if k >= self.len() {
            return Err(Error::OutOfRange {
                index: k,
                len: self.len(),
            });
        }
        TwoExcitationState::from_pair_vector(&self.basis, self.energy(k), &self.eig.vector(k), k)
    }

    /// ρ for every state, computed directly from the pair coefficients.
    pub fn distances(&self) -> Vec<f64> {
        let pairs = self.basis.pairs();
        (0..self.len())
            .into_par_iter()
            .map(|k| {
                let v = self.eig.vectors.column(k);
                let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
                pairs
                    .iter()
                    .zip(&v)
                    .map(|(&(a, b), z)| (b - a) as f64 * z.norm_sqr())
                    .sum::<f64>()
                    / norm
            })
            .collect()
    }

    pub fn most_distant(&self) -> usize {
        let rhos = self.distances();
        let mut best = 0;
        for (k, r) in rhos.iter().enumerate() {
            if *r > rhos[best] {
                best = k;
            }
        }
        best
    }

    pub fn records(&self, edge_width: Option<usize>, thr: &ClassifyThresholds) -> Result<Vec<SpectrumRecord>> {
        let w = edge_width.unwrap_or_else(|| default_edge_width(self.config.n_atoms));
        let mut recs = (0..self.len())
            .into_par_iter()
            .map(|k| {
                let state = self.state(k)?;
                let mut rec = SpectrumRecord::from_state(&state, w, thr)?;
                // exact labels from the blocked solve win over the numerical score
                if let Some(p) = &self.eig.parities {
                    rec.parity = p[k];
                }
                Ok(rec)
            })
            .collect::<Result<Vec<_>>>()?;
        recs.sort_by_key(|r| r.index);
        Ok(recs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::oracle_full_space;
    use crate::observables::{photon_distance, Parity};
    use crate::spectral::eig_dense;

    #[test]
    fn two_atoms_single_state() {
        let s = PairSpectrum::solve(&ArrayConfig::new(2, 1.0), &EigOptions::default()).unwrap();
        assert_eq!(s.len(), 1);
        assert!((s.energy(0) - C64::new(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn three_atoms_match_oracle() {
        let cfg = ArrayConfig::new(3, 1.0);
        let s = PairSpectrum::solve(&cfg, &EigOptions::default()).unwrap();
        let oracle = eig_dense(&oracle_full_space(&cfg).unwrap(), &EigOptions::default()).unwrap();
        for k in 0..3 {
            assert!((s.eig.values[k] - oracle.values[k]).norm() < 1e-10);
        }
    }

    #[test]
    fn distances_agree_with_state_metric() {
        let s = PairSpectrum::solve(&ArrayConfig::new(8, 1.0), &EigOptions::default()).unwrap();
        let rhos = s.distances();
        for k in [0, 5, 17, 27] {
            let st = s.state(k).unwrap();
            assert!((rhos[k] - photon_distance(&st)).abs() < 1e-12);
        }
        assert!(s.state(28).is_err());
    }

    #[test]
    fn blocked_parity_matches_numerical_score() {
        let s = PairSpectrum::solve(&ArrayConfig::new(9, 1.0), &EigOptions::default()).unwrap();
        let recs = s.records(None, &ClassifyThresholds::default()).unwrap();
        let exact = s.eig.parities.as_ref().unwrap();
        for (r, p) in recs.iter().zip(exact) {
            assert_eq!(r.parity, *p);
            assert!(r.parity_score > 0.999999);
        }
    }

    #[test]
    fn single_spectrum_has_even_and_odd_modes() {
        let s = SingleSpectrum::solve(&ArrayConfig::new(10, 1.0), &EigOptions::default()).unwrap();
        assert!(s.brightest_with_parity(Parity::Even).is_some());
        assert!(s.brightest_with_parity(Parity::Odd).is_some());
        let v = s.mode(0);
        assert!(v[0].im.abs() < 1e-15 && v[0].re > 0.0);
    }

    #[test]
    fn cap_checked_before_building() {
        let err = PairSpectrum::solve(&ArrayConfig::new(30, 1.0), &EigOptions { max_dim: 100 }).unwrap_err();
        assert!(matches!(err, Error::DimensionCap { dim: 435, cap: 100, .. }));
    }
}
