//! Closed-form single-polariton theory for the finite array.
//!
//! Eigenmodes are superpositions of two Bloch waves, ψ_n ∝ r e^{iKn} + e^{−iKn},
//! with the internal edge reflection coefficient r. For H_nm = −i e^{iφ|n−m|}
//! (energies in units of γ₁D) the bulk condition is cos K = cos φ + sin φ / ε.
//! Cancelling the edge terms gives r² e^{2iK(N+1)} = 1: even modes have
//! r e^{iK(N+1)} = 1, odd modes −1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::C64;

/// Iteration budget of [`lambert_w0`].
const LAMBERT_MAX_ITER: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispersionPoint {
    pub energy: C64,
    pub wavevector: C64,
    pub reflection: C64,
}

impl DispersionPoint {
    pub fn at(eps: C64, phi: f64) -> Result<Self> {
        let k = dispersion_k(eps, phi)?;
        Ok(Self {
            energy: eps,
            wavevector: k,
            reflection: reflection_r(k, phi)?,
        })
    }

    pub fn fabry_perot_residual(&self, n_atoms: usize) -> f64 {
        let phase = (C64::i() * self.wavevector * (n_atoms as f64 + 1.0)).exp();
        (self.reflection * phase - 1.0).norm()
    }
}

fn check_phase(phi: f64) -> Result<()> {
    if !phi.is_finite() || phi.sin().abs() < 1e-14 {
        return Err(Error::Domain(format!("sin φ must be nonzero, φ = {phi}")));
    }
    Ok(())
}

/// Polariton wave vector K(ε) on the branch Im K ≥ 0 (Re K ∈ [0, π] when Im K = 0).
pub fn dispersion_k(eps: C64, phi: f64) -> Result<C64> {
    check_phase(phi)?;
    if eps.norm() == 0.0 {
        return Err(Error::Singular("dispersion has a pole at ε = 0".into()));
    }
    let z = C64::new(phi.cos(), 0.0) + phi.sin() / eps;
    // principal acos: Re in [0, π]
    let k = z.acos();
    Ok(if k.im < 0.0 { -k } else { k })
}

/// Inverse dispersion ε(K) = sin φ / (cos K − cos φ).
pub fn energy_from_k(k: C64, phi: f64) -> Result<C64> {
    check_phase(phi)?;
    let den = k.cos() - phi.cos();
    if den.norm() == 0.0 {
        return Err(Error::Singular(format!("cos K = cos φ at K = {k}")));
    }
    Ok(phi.sin() / den)
}

/// Internal reflection coefficient r = −(1 − e^{i(φ−K)}) / (1 − e^{i(φ+K)}).
pub fn reflection_r(k: C64, phi: f64) -> Result<C64> {
    let i = C64::i();
    let one = C64::new(1.0, 0.0);
    let den = one - (i * (phi + k)).exp();
    if den.norm() < 1e-14 {
        return Err(Error::Singular(format!(
            "reflection pole at φ + K ≡ 0 (mod 2π), K = {k}"
        )));
    }
    Ok(-(one - (i * (phi - k)).exp()) / den)
}

/// Even-mode Fabry–Perot residual |r(ε) e^{iK(ε)(N+1)} − 1|.
///
/// Since r(−K) = 1/r(K), a root on one branch is a root on the other, so the
/// branch picked by [`dispersion_k`] does not matter at a solution.
pub fn fabry_perot_residual(eps: C64, n_atoms: usize, phi: f64) -> Result<f64> {
    Ok(DispersionPoint::at(eps, phi)?.fabry_perot_residual(n_atoms))
}

/// Principal branch of the Lambert W function for x ≥ 0, by Halley iteration.
pub fn lambert_w0(x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("lambert_w0 needs finite x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let mut w = if x < 1.0 {
        // W(x) = x − x² + ... near zero
        x * (1.0 - x).max(0.5)
    } else {
        let l = x.ln();
        let ll = l.ln().max(0.0);
        (l - ll).max(0.5)
    };
    for _ in 0..LAMBERT_MAX_ITER {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        let step = f / (ew * wp1 - (wp1 + 1.0) * f / (2.0 * wp1));
        let next = w - step;
        if (next - w).abs() <= 4.0 * f64::EPSILON * next.abs().max(f64::MIN_POSITIVE) {
            return Ok(next);
        }
        w = next;
    }
    Ok(w)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayVariant {
    /// N / W(2N sin φ)
    Exact,
    /// N / (log(2N sin φ) − log log(2N sin φ))
    Asymptotic,
}

/// Predicted −Im ε of the brightest single-polariton mode.
pub fn brightest_decay_prediction(n_atoms: usize, phi: f64, variant: DecayVariant) -> Result<f64> {
    if n_atoms < 2 {
        return Err(Error::Domain(format!("need N >= 2, got {n_atoms}")));
    }
    let s = phi.sin();
    if !(s > 0.0) {
        return Err(Error::Domain(format!("need sin φ > 0, got {s}")));
    }
    let n = n_atoms as f64;
    let x = 2.0 * n * s;
    match variant {
        DecayVariant::Exact => Ok(n / lambert_w0(x)?),
        DecayVariant::Asymptotic => {
            let l = x.ln();
            if !(l > 1.0) {
                return Err(Error::Domain(format!(
                    "log log undefined or nonpositive at 2N sin φ = {x}"
                )));
            }
            Ok(n / (l - l.ln()))
        }
    }
}

/// |ψ_{N/2} / ψ_1|² for a site vector (1-based sites, even N).
pub fn edge_center_ratio(v: &[C64]) -> Result<f64> {
    let n = v.len();
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::Domain(format!("edge/center ratio needs even N >= 2, got {n}")));
    }
    let edge = v[0].norm_sqr();
    if edge == 0.0 {
        return Err(Error::Singular("edge amplitude vanishes".into()));
    }
    Ok(v[n / 2 - 1].norm_sqr() / edge)
}

/// Brightest-mode edge-to-center ratio for each N: rows of (N, q, q·N) plus the
/// decay check e^{−(N−1) Im K(ε)} · N sin φ.
pub fn edge_center_scaling(
    n_list: &[usize],
    phi: f64,
    opts: &crate::spectral::EigOptions,
) -> Result<Vec<crate::ensemble::ScalingRow>> {
    n_list
        .iter()
        .map(|&n| {
            if n < 20 || n % 2 != 0 {
                return Err(Error::Domain(format!(
                    "edge/center scaling needs even N >= 20, got {n}"
                )));
            }
            let cfg = crate::lattice::ArrayConfig::new(n, phi);
            crate::ensemble::scaling_row(&crate::pipeline::SingleSpectrum::solve(&cfg, opts)?)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, FRAC_PI_2};

    #[test]
    fn k_quarter_wave() {
        let phi: f64 = 1.0;
        let eps = C64::new(-phi.sin() / phi.cos(), 0.0);
        let k = dispersion_k(eps, phi).unwrap();
        assert!((k - C64::new(FRAC_PI_2, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn k_branch_has_nonnegative_imag() {
        for &(re, im) in &[(0.3, -2.0), (-1.5, -0.1), (4.0, -30.0), (0.0, 1.0)] {
            let k = dispersion_k(C64::new(re, im), 1.0).unwrap();
            assert!(k.im >= 0.0, "{k}");
        }
    }

    #[test]
    fn dispersion_errors() {
        assert!(matches!(dispersion_k(C64::new(0.0, 0.0), 1.0), Err(Error::Singular(_))));
        assert!(matches!(dispersion_k(C64::new(1.0, 0.0), 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn reflection_zero_and_pole() {
        let phi = 1.0;
        let r = reflection_r(C64::new(phi, 0.0), phi).unwrap();
        assert!(r.norm() < 1e-15);
        assert!(matches!(
            reflection_r(C64::new(-phi, 0.0), phi),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn reflection_inverts_under_k_flip() {
        let phi = 0.8;
        let k = C64::new(0.7, 0.2);
        let a = reflection_r(k, phi).unwrap();
        let b = reflection_r(-k, phi).unwrap();
        assert!((a * b - 1.0).norm() < 1e-12);
    }

    #[test]
    fn fabry_perot_zero_on_constructed_point() {
        let k = C64::new(0.9, 0.05);
        let n = 17;
        let point = DispersionPoint {
            energy: energy_from_k(k, 1.0).unwrap(),
            wavevector: k,
            reflection: (-C64::i() * k * (n as f64 + 1.0)).exp(),
        };
        assert!(point.fabry_perot_residual(n) < 1e-14);
    }

    #[test]
    fn lambert_known_values() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
        assert!((lambert_w0(E).unwrap() - 1.0).abs() < 1e-15);
        let x = 2.0 * 200.0 * 1f64.sin();
        let w = lambert_w0(x).unwrap();
        assert!((w * w.exp() - x).abs() <= 1e-12 * x);
        assert!((w - 4.3481).abs() < 1e-3, "{w}");
        assert!(lambert_w0(-1.0).is_err());
    }

    #[test]
    fn decay_predictions() {
        let exact = brightest_decay_prediction(200, 1.0, DecayVariant::Exact).unwrap();
        assert!((exact - 46.0).abs() < 0.05, "{exact}");
        let asym = brightest_decay_prediction(200, 1.0, DecayVariant::Asymptotic).unwrap();
        assert!((asym - 49.3).abs() < 0.1, "{asym}");
        assert!(brightest_decay_prediction(200, -1.0, DecayVariant::Exact).is_err());
        assert!(brightest_decay_prediction(1, 1.0, DecayVariant::Exact).is_err());
    }

    #[test]
    fn exact_modes_quantize_by_parity() {
        use crate::observables::Parity;
        let n = 30;
        for phi in [0.5, 1.0, 2.0] {
            let s = crate::pipeline::SingleSpectrum::solve(
                &crate::lattice::ArrayConfig::new(n, phi),
                &crate::spectral::EigOptions::default(),
            )
            .unwrap();
            let parities = s.eig.parities.clone().unwrap();
            for (eps, p) in s.energies().iter().zip(parities) {
                let point = DispersionPoint::at(*eps, phi).unwrap();
                let fp = point.reflection * (C64::i() * point.wavevector * (n as f64 + 1.0)).exp();
                let target = if p == Parity::Even { 1.0 } else { -1.0 };
                assert!((fp - target).norm() < 1e-6, "φ={phi} ε={eps} {p:?}: {fp}");
            }
        }
    }

    #[test]
    fn plane_wave_ratio_is_one() {
        let v: Vec<C64> = (0..20).map(|n| C64::from_polar(1.0, 0.4 * n as f64)).collect();
        assert!((edge_center_ratio(&v).unwrap() - 1.0).abs() < 1e-14);
        assert!(edge_center_ratio(&v[..5]).is_err());
    }
}
