//! Two-dimensional Fourier map of a two-photon amplitude matrix,
//! ψ(k_x, k_y) = Σ_{m,n} exp(−i k_x m − i k_y n) Ψ_mn with sites m, n = 1..N
//! and k on the grid −π + 2πj/N.

use std::f64::consts::PI;

use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, C64};

pub fn k_grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| -PI + 2.0 * PI * j as f64 / n as f64).collect()
}

/// Applies the 1D shifted transform x -> X_j = Σ_{m=1..N} exp(−i k_j m) x_m in place.
///
/// With m = s + 1 and k_j = −π + 2πj/N this is
/// X_j = exp(−2πij/N) · FFT[(−1)^(s+1) x_s]_j.
fn shifted_forward(buf: &mut [C64], fft: &dyn rustfft::Fft<f64>) {
    let n = buf.len();
    for (s, x) in buf.iter_mut().enumerate() {
        if s.is_multiple_of(2) {
            *x = -*x;
        }
    }
    fft.process(buf);
    for (j, x) in buf.iter_mut().enumerate() {
        *x *= C64::from_polar(1.0, -2.0 * PI * j as f64 / n as f64);
    }
}

/// Inverse of [`shifted_forward`], including the 1/N factor.
fn shifted_inverse(buf: &mut [C64], ifft: &dyn rustfft::Fft<f64>) {
    let n = buf.len();
    for (j, x) in buf.iter_mut().enumerate() {
        *x *= C64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64);
    }
    ifft.process(buf);
    let inv_n = 1.0 / n as f64;
    for (s, x) in buf.iter_mut().enumerate() {
        *x *= if s.is_multiple_of(2) { -inv_n } else { inv_n };
    }
}

fn apply_2d(psi: &ComplexMatrix, inverse: bool) -> Result<ComplexMatrix> {
    if !psi.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "Fourier map of a {}x{} matrix",
            psi.rows(),
            psi.cols()
        )));
    }
    let n = psi.rows();
    let mut planner = FftPlanner::<f64>::new();
    let plan = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    let run = |buf: &mut [C64]| {
        if inverse {
            shifted_inverse(buf, plan.as_ref())
        } else {
            shifted_forward(buf, plan.as_ref())
        }
    };

    let mut out = psi.clone();
    let mut buf = vec![C64::new(0.0, 0.0); n];
    // along n (columns index) for each row m
    for i in 0..n {
        buf.copy_from_slice(out.row(i));
        run(&mut buf);
        for j in 0..n {
            out[(i, j)] = buf[j];
        }
    }
    // along m for each column
    for j in 0..n {
        for i in 0..n {
            buf[i] = out[(i, j)];
        }
        run(&mut buf);
        for i in 0..n {
            out[(i, j)] = buf[i];
        }
    }
    Ok(out)
}

/// Entry (j, l) is ψ(k_j, k_l) on the [`k_grid`].
pub fn fourier2d(psi: &ComplexMatrix) -> Result<ComplexMatrix> {
    apply_2d(psi, false)
}

pub fn inverse_fourier2d(map: &ComplexMatrix) -> Result<ComplexMatrix> {
    apply_2d(map, true)
}

/// Fraction of Σ|ψ(k)|² inside the squares |k_x| ∈ [φ−δ, φ+δ], |k_y| ∈ [φ−δ, φ+δ]
/// around the four points (±φ, ±φ).
pub fn weight_near_phase_points(map: &ComplexMatrix, phase: f64, delta: f64) -> f64 {
    let ks = k_grid(map.rows());
    let near = |k: f64| (k.abs() - phase.abs()).abs() <= delta;
    let mut inside = 0.0;
    let mut total = 0.0;
    for (j, &kx) in ks.iter().enumerate() {
        for (l, &ky) in ks.iter().enumerate() {
            let w = map[(j, l)].norm_sqr();
            total += w;
            if near(kx) && near(ky) {
                inside += w;
            }
        }
    }
    if total == 0.0 {
        0.0
    } else {
        inside / total
    }
}
