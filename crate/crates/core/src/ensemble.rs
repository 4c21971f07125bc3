//! Seeded disorder ensembles and size sweeps.
//!
//! Realization `r` of a sweep draws its nearest-neighbour couplings from a
//! ChaCha8 stream seeded with `derive_seed(master_seed, r)`. The same unit draws
//! are reused at every disorder strength (only the scale changes), so rows at
//! different strengths are paired realizations.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{brightest_decay_prediction, dispersion_k, edge_center_ratio, DecayVariant};
use crate::error::{Error, Result};
use crate::io::{fmt_f64, sha256_hex, write_file};
use crate::lattice::ArrayConfig;
use crate::matrix::C64;
use crate::observables::{
    center_of_mass_distribution, default_edge_width, inverse_participation, ClassifyThresholds, Parity, StateLabel,
};
use crate::pipeline::{PairSpectrum, SingleSpectrum};
use crate::spectral::EigOptions;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DisorderDistribution {
    /// Uniform on [−√3χ, √3χ].
    #[default]
    Uniform,
    /// Normal with standard deviation χ.
    Gaussian,
}

/// SplitMix64 finalizer applied to `master + (stream + 1) * golden`; a
/// counter-based split that needs no shared generator state.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `n` independent zero-mean couplings with variance `strength²`.
pub fn draw_disorder(strength: f64, n: usize, seed: u64, dist: DisorderDistribution) -> Result<Vec<f64>> {
    if !(strength >= 0.0) || !strength.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "disorder strength must be finite and >= 0, got {strength}"
        )));
    }
    if strength == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws = match dist {
        DisorderDistribution::Uniform => {
            let half = 3f64.sqrt();
            let u = Uniform::new_inclusive(-half, half);
            (0..n).map(|_| strength * u.sample(&mut rng)).collect()
        }
        DisorderDistribution::Gaussian => (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                strength * z
            })
            .collect(),
    };
    Ok(draws)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderSweepSpec {
    /// Clean part of the array; its disorder list is ignored.
    pub base: ArrayConfig,
    pub strengths: Vec<f64>,
    pub realizations: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub distribution: DisorderDistribution,
}

impl DisorderSweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.base.validate_pair_sector()?;
        if self.realizations == 0 {
            return Err(Error::InvalidConfig("need at least one realization".into()));
        }
        if self.strengths.is_empty() {
            return Err(Error::InvalidConfig("no disorder strengths given".into()));
        }
        if self.strengths.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::InvalidConfig("strengths must be sorted ascending".into()));
        }
        if self.strengths.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(Error::InvalidConfig("strengths must be finite and >= 0".into()));
        }
        Ok(())
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.realizations as u64)
            .map(|r| derive_seed(self.master_seed, r))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealizationStats {
    /// ρ of every eigenstate, ascending.
    pub sorted_rho: Vec<f64>,
    pub top_decile_rho: f64,
    pub bottom_decile_rho: f64,
    /// Mean IPR of the center-of-mass distribution over the bottom-decile states.
    pub bottom_decile_com_ipr: f64,
    pub max_im_eps: f64,
}

#[derive(Clone, Debug)]
pub struct RealizationRow {
    pub strength_index: usize,
    pub strength: f64,
    pub realization: usize,
    pub seed: u64,
    pub outcome: std::result::Result<RealizationStats, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrengthSummary {
    pub strength: f64,
    pub completed: usize,
    pub failed: usize,
    pub mean_top_decile_rho: f64,
    pub mean_bottom_decile_rho: f64,
    pub mean_bottom_decile_com_ipr: f64,
}

#[derive(Clone, Debug)]
pub struct DisorderSweep {
    pub spec: DisorderSweepSpec,
    /// Strength-major, then realization order.
    pub rows: Vec<RealizationRow>,
    pub summary: Vec<StrengthSummary>,
}

impl DisorderSweep {
    pub fn failure_fraction(&self) -> f64 {
        let failed = self.rows.iter().filter(|r| r.outcome.is_err()).count();
        failed as f64 / self.rows.len().max(1) as f64
    }
}

fn decile(d: usize) -> usize {
    (d / 10).max(1)
}

pub fn realization_stats(spectrum: &PairSpectrum) -> Result<RealizationStats> {
    let rhos = spectrum.distances();
    let mut order: Vec<usize> = (0..rhos.len()).collect();
    order.sort_by(|&a, &b| rhos[a].total_cmp(&rhos[b]).then(a.cmp(&b)));
    let sorted_rho: Vec<f64> = order.iter().map(|&k| rhos[k]).collect();
    let k = decile(sorted_rho.len());
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;

    let mut ipr = 0.0;
    for &idx in &order[..k] {
        let state = spectrum.state(idx)?;
        ipr += inverse_participation(&center_of_mass_distribution(&state));
    }
    let max_im_eps = spectrum
        .energies()
        .iter()
        .map(|e| e.im)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(RealizationStats {
        top_decile_rho: mean(&sorted_rho[sorted_rho.len() - k..]),
        bottom_decile_rho: mean(&sorted_rho[..k]),
        bottom_decile_com_ipr: ipr / k as f64,
        sorted_rho,
        max_im_eps,
    })
}

fn run_one(spec: &DisorderSweepSpec, strength: f64, seed: u64, opts: &EigOptions) -> Result<RealizationStats> {
    let n = spec.base.n_atoms;
    let chi = draw_disorder(strength, n - 1, seed, spec.distribution)?;
    let cfg = ArrayConfig::new(n, spec.base.phase).with_disorder(chi);
    realization_stats(&PairSpectrum::solve(&cfg, opts)?)
}

/// Runs every (strength, realization) cell on up to `workers` threads.
/// Solver failures are recorded per row and never abort the sweep.
pub fn disorder_sweep(spec: &DisorderSweepSpec, opts: &EigOptions, workers: usize) -> Result<DisorderSweep> {
    spec.validate()?;
    let seeds = spec.seeds();
    let cells: Vec<(usize, usize)> = (0..spec.strengths.len())
        .flat_map(|s| (0..spec.realizations).map(move |r| (s, r)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let rows: Vec<RealizationRow> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(s, r)| {
                let strength = spec.strengths[s];
                RealizationRow {
                    strength_index: s,
                    strength,
                    realization: r,
                    seed: seeds[r],
                    outcome: run_one(spec, strength, seeds[r], opts).map_err(|e| e.to_string()),
                }
            })
            .collect()
    });

    let summary = spec
        .strengths
        .iter()
        .enumerate()
        .map(|(s, &strength)| {
            let ok: Vec<&RealizationStats> = rows
                .iter()
                .filter(|row| row.strength_index == s)
                .filter_map(|row| row.outcome.as_ref().ok())
                .collect();
            let failed = spec.realizations - ok.len();
            let mean = |f: fn(&RealizationStats) -> f64| {
                if ok.is_empty() {
                    f64::NAN
                } else {
                    ok.iter().map(|x| f(x)).sum::<f64>() / ok.len() as f64
                }
            };
            StrengthSummary {
                strength,
                completed: ok.len(),
                failed,
                mean_top_decile_rho: mean(|x| x.top_decile_rho),
                mean_bottom_decile_rho: mean(|x| x.bottom_decile_rho),
                mean_bottom_decile_com_ipr: mean(|x| x.bottom_decile_com_ipr),
            }
        })
        .collect();

    Ok(DisorderSweep {
        spec: spec.clone(),
        rows,
        summary,
    })
}

/// One row per realization: strength, realization, seed, status, then the
/// ascending ρ values (empty for failed rows).
pub fn sweep_map_csv(sweep: &DisorderSweep) -> String {
    let dim = sweep.spec.base.n_atoms * (sweep.spec.base.n_atoms - 1) / 2;
    let mut out = String::from("strength,realization,seed,status");
    for k in 0..dim {
        out.push_str(&format!(",rho_{k}"));
    }
    out.push('\n');
    for row in &sweep.rows {
        out.push_str(&format!("{},{},{}", fmt_f64(row.strength), row.realization, row.seed));
        match &row.outcome {
            Ok(stats) => {
                out.push_str(",ok");
                for r in &stats.sorted_rho {
                    out.push(',');
                    out.push_str(&fmt_f64(*r));
                }
            }
            Err(_) => {
                out.push_str(",failed");
                out.push_str(&",".repeat(dim));
            }
        }
        out.push('\n');
    }
    out
}

pub fn sweep_summary_csv(sweep: &DisorderSweep) -> String {
    let mut out = String::from(
        "strength,completed,failed,mean_top_decile_rho,mean_bottom_decile_rho,mean_bottom_decile_com_ipr\n",
    );
    for s in &sweep.summary {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt_f64(s.strength),
            s.completed,
            s.failed,
            fmt_f64(s.mean_top_decile_rho),
            fmt_f64(s.mean_bottom_decile_rho),
            fmt_f64(s.mean_bottom_decile_com_ipr)
        ));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputEntry {
    pub file: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleManifest {
    pub kind: String,
    pub base_config: ArrayConfig,
    pub chi_strengths: Vec<f64>,
    pub distribution: DisorderDistribution,
    pub realizations: usize,
    pub master_seed: u64,
    pub realization_seeds: Vec<u64>,
    pub failed_realizations: Vec<FailedRealization>,
    pub outputs: Vec<OutputEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailedRealization {
    pub strength: f64,
    pub realization: usize,
    pub error: String,
}

impl EnsembleManifest {
    pub fn sweep_spec(&self) -> Result<DisorderSweepSpec> {
        if self.kind != "disorder" {
            return Err(Error::InvalidConfig(format!(
                "manifest kind {:?} is not a disorder sweep",
                self.kind
            )));
        }
        Ok(DisorderSweepSpec {
            base: ArrayConfig::new(self.base_config.n_atoms, self.base_config.phase),
            strengths: self.chi_strengths.clone(),
            realizations: self.realizations,
            master_seed: self.master_seed,
            distribution: self.distribution,
        })
    }
}

pub const MAP_FILE: &str = "map.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes map, summary and manifest into `dir`; returns the manifest.
pub fn write_disorder_outputs(sweep: &DisorderSweep, dir: &Path) -> Result<EnsembleManifest> {
    let outputs = vec![
        OutputEntry {
            file: MAP_FILE.into(),
            sha256: write_file(dir, MAP_FILE, &sweep_map_csv(sweep))?,
        },
        OutputEntry {
            file: SUMMARY_FILE.into(),
            sha256: write_file(dir, SUMMARY_FILE, &sweep_summary_csv(sweep))?,
        },
    ];
    let manifest = EnsembleManifest {
        kind: "disorder".into(),
        base_config: ArrayConfig::new(sweep.spec.base.n_atoms, sweep.spec.base.phase),
        chi_strengths: sweep.spec.strengths.clone(),
        distribution: sweep.spec.distribution,
        realizations: sweep.spec.realizations,
        master_seed: sweep.spec.master_seed,
        realization_seeds: sweep.spec.seeds(),
        failed_realizations: sweep
            .rows
            .iter()
            .filter_map(|r| {
                r.outcome.as_ref().err().map(|e| FailedRealization {
                    strength: r.strength,
                    realization: r.realization,
                    error: e.clone(),
                })
            })
            .collect(),
        outputs,
    };
    write_file(dir, MANIFEST_FILE, &(serde_json::to_string_pretty(&manifest)? + "\n"))?;
    Ok(manifest)
}

/// Re-runs a disorder sweep from its manifest into `dir` and reports whether
/// every recorded digest was reproduced.
pub fn rerun_from_manifest(manifest: &EnsembleManifest, dir: &Path, opts: &EigOptions, workers: usize) -> Result<bool> {
    let sweep = disorder_sweep(&manifest.sweep_spec()?, opts, workers)?;
    let fresh = write_disorder_outputs(&sweep, dir)?;
    Ok(fresh.outputs == manifest.outputs)
}

pub fn file_digest(path: &Path) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeTask {
    Single,
    Pair,
}

/// Brightest-mode scaling data for one array length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n_atoms: usize,
    pub minus_im_eps_numeric: f64,
    pub eq8: f64,
    /// Large-N approximation; NaN when 2N sin φ is too small for log log.
    pub eq9: f64,
    /// Mirror parity of the brightest mode.
    pub parity: Parity,
    /// |ψ_{N/2}/ψ_1|²; NaN for odd N.
    pub q: f64,
    pub q_n: f64,
    /// q·N of the brightest even mode. The brightest mode changes parity with
    /// N, and q differs between the two families by a roughly constant factor.
    pub q_n_even: f64,
    /// e^{−(N−1) Im K(ε)} · N sin φ for the brightest ε.
    pub decay_check: f64,
}

pub fn scaling_row(spectrum: &SingleSpectrum) -> Result<ScalingRow> {
    let n = spectrum.config.n_atoms;
    let phi = spectrum.config.phase;
    let b = spectrum.brightest();
    let eps = spectrum.energies()[b];
    let q_of = |k: usize| -> Result<f64> {
        if n.is_multiple_of(2) {
            edge_center_ratio(&spectrum.mode(k))
        } else {
            Ok(f64::NAN)
        }
    };
    let q = q_of(b)?;
    let q_even = match spectrum.brightest_with_parity(Parity::Even) {
        Some(k) => q_of(k)?,
        None => f64::NAN,
    };
    let parity = spectrum.eig.parities.as_ref().map_or(Parity::Mixed, |p| p[b]);
    let k = dispersion_k(eps, phi)?;
    Ok(ScalingRow {
        n_atoms: n,
        minus_im_eps_numeric: -eps.im,
        eq8: brightest_decay_prediction(n, phi, DecayVariant::Exact)?,
        eq9: brightest_decay_prediction(n, phi, DecayVariant::Asymptotic).unwrap_or(f64::NAN),
        parity,
        q,
        q_n: q * n as f64,
        q_n_even: q_even * n as f64,
        decay_check: (-(n as f64 - 1.0) * k.im).exp() * n as f64 * phi.sin(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairSizeRow {
    pub n_atoms: usize,
    pub dim: usize,
    pub brightest_eps: C64,
    pub max_rho: f64,
    pub distant_bound_count: usize,
}

#[derive(Clone, Debug, Default)]
pub struct SizeSweep {
    pub scaling: Vec<ScalingRow>,
    /// Brightest single-excitation mode per N, phase-fixed.
    pub wavefunctions: Vec<(usize, Vec<C64>)>,
    pub pair_rows: Vec<PairSizeRow>,
}

pub fn size_sweep(n_list: &[usize], phi: f64, tasks: &[SizeTask], opts: &EigOptions) -> Result<SizeSweep> {
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig("N list must be strictly ascending".into()));
    }
    let mut out = SizeSweep::default();
    for &n in n_list {
        let cfg = ArrayConfig::new(n, phi);
        if tasks.contains(&SizeTask::Single) {
            let spectrum = SingleSpectrum::solve(&cfg, opts)?;
            out.scaling.push(scaling_row(&spectrum)?);
            out.wavefunctions.push((n, spectrum.mode(spectrum.brightest())));
        }
        if tasks.contains(&SizeTask::Pair) {
            let spectrum = PairSpectrum::solve(&cfg, opts)?;
            let recs = spectrum.records(Some(default_edge_width(n)), &ClassifyThresholds::default())?;
            out.pair_rows.push(PairSizeRow {
                n_atoms: n,
                dim: spectrum.len(),
                brightest_eps: spectrum.energy(0),
                max_rho: recs.iter().map(|r| r.rho).fold(0.0, f64::max),
                distant_bound_count: recs.iter().filter(|r| r.label == StateLabel::DistantBound).count(),
            });
        }
    }
    Ok(out)
}

pub const SCALING_HEADER: &str = "N,minus_im_eps_numeric,eq8,eq9,q,qN,decay_check,parity,qN_even";

pub fn scaling_csv(rows: &[ScalingRow]) -> String {
    let mut out = String::from(SCALING_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.n_atoms,
            fmt_f64(r.minus_im_eps_numeric),
            fmt_f64(r.eq8),
            fmt_f64(r.eq9),
            fmt_f64(r.q),
            fmt_f64(r.q_n),
            fmt_f64(r.decay_check),
            r.parity,
            fmt_f64(r.q_n_even)
        ));
    }
    out
}

pub fn wavefunctions_csv(waves: &[(usize, Vec<C64>)]) -> String {
    let mut out = String::from("N,site,re_psi,im_psi,abs2_psi\n");
    for (n, v) in waves {
        for (site, z) in v.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                n,
                site + 1,
                fmt_f64(z.re),
                fmt_f64(z.im),
                fmt_f64(z.norm_sqr())
            ));
        }
    }
    out
}

pub fn pair_sizes_csv(rows: &[PairSizeRow]) -> String {
    let mut out = String::from("N,dim,re_eps_brightest,im_eps_brightest,max_rho,distant_bound_count\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.n_atoms,
            r.dim,
            fmt_f64(r.brightest_eps.re),
            fmt_f64(r.brightest_eps.im),
            fmt_f64(r.max_rho),
            r.distant_bound_count
        ));
    }
    out
}
