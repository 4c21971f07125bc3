use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::json;
use wqed_core::ensemble::{
    disorder_sweep, scaling_csv, size_sweep, wavefunctions_csv, write_disorder_outputs, DisorderSweepSpec, SizeTask,
};
use wqed_core::io::{fmt_f64, fourier_csv, histogram_csv, probability_csv, spectrum_csv, write_file};
use wqed_core::observables::{default_edge_width, distance_histogram, ClassifyThresholds, StateLabel};
use wqed_core::spectral::{
    decompose_symmetric, estimate_eig_mib, fourier2d, relative_error, truncate_decomposition, weight_near_phase_points,
    EigOptions,
};
use wqed_core::{ArrayConfig, PairBasis, PairSpectrum, SingleSpectrum, C64};

use crate::config::{Command, Resolved, Sector, Selector, CONFIG_FILE};

/// Half-width of the k-space box around (±φ, ±φ) reported in `svd.json`.
const FOURIER_WINDOW: f64 = 0.3;

pub fn run(r: &Resolved) -> Result<()> {
    let out = r.out();
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    if let Some(w) = r.config.workers {
        if w == 0 {
            bail!("--workers must be at least 1");
        }
        // ignore the error if a pool already exists (tests run several commands)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
    write_file(out, CONFIG_FILE, &r.to_toml()?)?;
    match r.command {
        Command::Spectrum => spectrum(r),
        Command::Wavefunction => wavefunction(r),
        Command::Scaling => scaling(r),
        Command::Disorder => disorder(r),
    }
}

fn opts(r: &Resolved) -> EigOptions {
    EigOptions { max_dim: r.max_dim() }
}

fn announce_pair_solve(n: usize) {
    let d = PairBasis::new(n).dim();
    eprintln!(
        "pair sector: N = {n}, dimension {d}, estimated peak memory {} MiB",
        estimate_eig_mib(d)
    );
}

fn single_csv(s: &SingleSpectrum) -> String {
    let mut out = String::from("index,re_eps,im_eps,parity\n");
    let parities = s.eig.parities.as_ref();
    for (k, e) in s.energies().iter().enumerate() {
        let p = parities.map_or("mixed".to_string(), |p| p[k].to_string());
        let _ = writeln!(out, "{k},{},{},{p}", fmt_f64(e.re), fmt_f64(e.im));
    }
    out
}

fn site_csv(v: &[C64]) -> String {
    let mut out = String::from("site,re_psi,im_psi,abs2_psi\n");
    for (k, z) in v.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            k + 1,
            fmt_f64(z.re),
            fmt_f64(z.im),
            fmt_f64(z.norm_sqr())
        );
    }
    out
}

fn write_json(out: &Path, name: &str, value: &serde_json::Value) -> Result<()> {
    write_file(out, name, &(serde_json::to_string_pretty(value)? + "\n"))?;
    Ok(())
}

fn spectrum(r: &Resolved) -> Result<()> {
    let out = r.out();
    let cfg = ArrayConfig::new(r.atoms(), r.phase());
    let single = SingleSpectrum::solve(&cfg, &opts(r))?;
    if r.config.sector == Some(Sector::One) {
        write_file(out, "spectrum.csv", &single_csv(&single))?;
        write_json(
            out,
            "meta.json",
            &json!({
                "n_atoms": cfg.n_atoms,
                "phase": cfg.phase,
                "sector": "one",
                "dim": single.energies().len(),
                "max_residual": single.eig.max_residual(),
            }),
        )?;
        eprintln!(
            "wrote {} single-excitation modes to {}",
            single.energies().len(),
            out.display()
        );
        return Ok(());
    }

    announce_pair_solve(cfg.n_atoms);
    let pair = PairSpectrum::solve(&cfg, &opts(r))?;
    let w = r.config.edge_width.unwrap_or_else(|| default_edge_width(cfg.n_atoms));
    let records = pair.records(Some(w), &ClassifyThresholds::default())?;
    let rhos: Vec<f64> = records.iter().map(|rec| rec.rho).collect();
    let hist = distance_histogram(&rhos, cfg.n_atoms, r.config.bins.expect("resolved"))?;

    write_file(out, "spectrum.csv", &spectrum_csv(&records))?;
    write_file(out, "single.csv", &single_csv(&single))?;
    write_file(out, "histogram.csv", &histogram_csv(&hist))?;

    let mut labels: BTreeMap<String, usize> = BTreeMap::new();
    for rec in &records {
        *labels.entry(rec.label.to_string()).or_default() += 1;
    }
    write_json(
        out,
        "meta.json",
        &json!({
            "n_atoms": cfg.n_atoms,
            "phase": cfg.phase,
            "sector": "two",
            "dim": pair.len(),
            "edge_width": w,
            "max_residual": pair.eig.max_residual(),
            "max_im_eps": pair.energies().iter().map(|e| e.im).fold(f64::NEG_INFINITY, f64::max),
            "histogram_mode_center": hist.bin_center(hist.mode_bin()),
            "label_counts": labels,
        }),
    )?;
    eprintln!(
        "wrote {} two-excitation records to {} ({} distant-bound)",
        records.len(),
        out.display(),
        labels.get(&StateLabel::DistantBound.to_string()).copied().unwrap_or(0)
    );
    Ok(())
}

fn wavefunction(r: &Resolved) -> Result<()> {
    let out = r.out();
    let cfg = ArrayConfig::new(r.atoms(), r.phase());
    let select = r.config.select.expect("resolved");

    if r.config.sector == Some(Sector::One) {
        let single = SingleSpectrum::solve(&cfg, &opts(r))?;
        let k = match select {
            Selector::Brightest => single.brightest(),
            Selector::Index => r.config.index.expect("resolved"),
            Selector::MostDistant => unreachable!("rejected when resolving"),
        };
        let len = single.energies().len();
        if k >= len {
            bail!("state index {k} out of range for {len} modes");
        }
        let mode = single.mode(k);
        write_file(out, "psi.csv", &site_csv(&mode))?;
        let e = single.energies()[k];
        write_json(
            out,
            "meta.json",
            &json!({
                "sector": "one",
                "index": k,
                "re_eps": e.re,
                "im_eps": e.im,
                "parity": single.eig.parities.as_ref().map(|p| p[k].to_string()),
            }),
        )?;
        return Ok(());
    }

    announce_pair_solve(cfg.n_atoms);
    let pair = PairSpectrum::solve(&cfg, &opts(r))?;
    let k = match select {
        Selector::Brightest => 0,
        Selector::MostDistant => pair.most_distant(),
        Selector::Index => r.config.index.expect("resolved"),
    };
    if k >= pair.len() {
        bail!("state index {k} out of range for {} states", pair.len());
    }
    let state = pair.state(k)?;
    let w = r.config.edge_width.unwrap_or_else(|| default_edge_width(cfg.n_atoms));
    let mut rec = wqed_core::observables::SpectrumRecord::from_state(&state, w, &ClassifyThresholds::default())?;
    if let Some(p) = &pair.eig.parities {
        rec.parity = p[k];
    }
    let psi = state.amplitudes();
    write_file(out, "psi2.csv", &probability_csv(psi))?;
    write_json(
        out,
        "meta.json",
        &json!({
            "sector": "two",
            "index": k,
            "re_eps": rec.energy.re,
            "im_eps": rec.energy.im,
            "rho": rec.rho,
            "parity": rec.parity.to_string(),
            "parity_score": rec.parity_score,
            "edge_width": w,
            "edge_mass": rec.edge_mass,
            "label": rec.label.to_string(),
        }),
    )?;

    if select != Selector::MostDistant {
        return Ok(());
    }
    let trunc = r.config.truncate.expect("resolved");
    let dec = decompose_symmetric(psi)?;
    let truncated = truncate_decomposition(&dec, trunc)?;
    let fourier = fourier2d(psi)?;

    let terms: Vec<_> = dec
        .terms
        .iter()
        .map(|t| {
            json!({
                "re_lambda": t.lambda.re,
                "im_lambda": t.lambda.im,
                "abs_lambda": t.lambda.norm(),
                "parity": t.parity.to_string(),
                "parity_score": t.parity_score,
            })
        })
        .collect();
    write_json(
        out,
        "svd.json",
        &json!({
            "terms": terms,
            "unresolved": dec.unresolved.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
            "near_defective": dec.near_defective,
            "orthonormality_defect": dec.orthonormality_defect(),
            "reconstruction_error": relative_error(psi, &dec.reconstruct()?)?,
            "truncate": trunc,
            "truncation_error": relative_error(psi, &dec.partial_sum(trunc)?)?,
            "renormalized_truncation_error": relative_error(psi, &truncated)?,
            "fourier_window": FOURIER_WINDOW,
            "fourier_weight_near_phase": weight_near_phase_points(&fourier, cfg.phase, FOURIER_WINDOW),
        }),
    )?;
    write_file(out, "truncated.csv", &probability_csv(&truncated))?;

    let mut vectors = String::from("term,site,re_psi,im_psi,abs2_psi\n");
    for (nu, t) in dec.terms.iter().enumerate() {
        for (s, z) in t.vector.iter().enumerate() {
            let _ = writeln!(
                vectors,
                "{nu},{},{},{},{}",
                s + 1,
                fmt_f64(z.re),
                fmt_f64(z.im),
                fmt_f64(z.norm_sqr())
            );
        }
    }
    write_file(out, "vectors.csv", &vectors)?;

    let single = SingleSpectrum::solve(&cfg, &opts(r))?;
    write_file(out, "single_mode.csv", &site_csv(&single.mode(single.brightest())))?;
    write_file(out, "fourier.csv", &fourier_csv(&fourier))?;
    Ok(())
}

fn scaling(r: &Resolved) -> Result<()> {
    let out = r.out();
    let sweep = size_sweep(r.atom_list(), r.phase(), &[SizeTask::Single], &opts(r))?;
    write_file(out, "scaling.csv", &scaling_csv(&sweep.scaling))?;
    write_file(out, "wavefunctions.csv", &wavefunctions_csv(&sweep.wavefunctions))?;
    Ok(())
}

fn disorder(r: &Resolved) -> Result<()> {
    let out = r.out();
    let c = &r.config;
    let spec = DisorderSweepSpec {
        base: ArrayConfig::new(r.atoms(), r.phase()),
        strengths: c.strengths.clone().expect("resolved"),
        realizations: c.realizations.expect("resolved"),
        master_seed: c.seed.expect("resolved"),
        distribution: c.distribution.expect("resolved").into(),
    };
    spec.validate()?;
    announce_pair_solve(spec.base.n_atoms);
    let sweep = disorder_sweep(&spec, &opts(r), c.workers.expect("resolved"))?;
    write_disorder_outputs(&sweep, out)?;
    for s in &sweep.summary {
        eprintln!(
            "chi = {}: {} done, {} failed, top-decile rho {:.3}, bottom-decile com ipr {:.5}",
            s.strength, s.completed, s.failed, s.mean_top_decile_rho, s.mean_bottom_decile_com_ipr
        );
    }
    let frac = sweep.failure_fraction();
    let limit = c.max_failure_fraction.expect("resolved");
    if frac > limit {
        bail!(
            "{:.1}% of realizations failed (limit {:.1}%), see manifest.json",
            100.0 * frac,
            100.0 * limit
        );
    }
    Ok(())
}
