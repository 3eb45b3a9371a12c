//! `simulate`, `cwt`, `theory` and `estimate`.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use anyhow::Context;
use mfbm::estimate::{cross_periodogram, cross_spectrum_from_replicates, fit_power_law, increment_lagged_products, lagged_products, EmpiricalCov, IncrementCov, ScalePair};
use mfbm::io::{read_path_bin, write_field_bin, write_field_csv, write_path_bin, write_path_csv};
use mfbm::par::try_map_range;
use mfbm::rng::derive_seed;
use mfbm::spectral::{coherence, cross_spectral_density, frequency_grid, spectral_density_at, zeta};
use mfbm::synth::{CirculantSampler, SamplePath, SimulationOptions, MAX_DOUBLINGS};
use mfbm::wavelets::{cwt, interior_shifts};
use mfbm::wavstats::{asymptotic_wavelet_cov, scale_law_constant, theoretical_wavelet_cov, theoretical_wavelet_cov_estimate, WaveletCovQuery, H_MIN_FACTOR, QUAD_TOL};
use mfbm::{Execution, MfbmParams};
use num_complex::Complex64;

use crate::config::ExperimentConfig;
use crate::table::{self, num, opt};
use crate::Invalid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum TheoryKind {
    Cov,
    Spectrum,
    Coherence,
    Scaling,
}

fn sampler(config: &ExperimentConfig, params: &MfbmParams) -> anyhow::Result<CirculantSampler> {
    config.check_simulation()?;
    let s = &config.simulation;
    let options = SimulationOptions { max_doublings: MAX_DOUBLINGS, allow_clip: !s.strict_embedding };
    Ok(CirculantSampler::new(params, s.n, s.dt, options)?)
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?))
}

/// Replicate r is generated from `derive_seed(seed, r)`.
pub fn simulate(config: &ExperimentConfig, out: &Path) -> anyhow::Result<()> {
    let params = config.params()?;
    let sampler = sampler(config, &params)?;
    let count = config.simulation.replicates;
    for r in 0..count {
        let path = sampler.sample(derive_seed(config.seed, r as u64));
        let stem = if count == 1 { "path".to_string() } else { format!("path_{r:04}") };
        write_path_csv(&path, create(&out.join(format!("{stem}.csv")))?)?;
        write_path_bin(&path, create(&out.join(format!("{stem}.bin")))?)?;
    }
    let report = sampler.report();
    std::fs::write(out.join("embedding.json"), serde_json::to_string_pretty(report)? + "\n")?;
    println!("simulated {count} path(s) of n = {}: {report}", config.simulation.n);
    Ok(())
}

pub fn transform(config: &ExperimentConfig, out: &Path) -> anyhow::Result<()> {
    let params = config.params()?;
    config.check_transform()?;
    let wavelet = config.wavelet()?;
    let path: SamplePath = match &config.simulation.input {
        Some(input) => {
            let input = config.resolve(input);
            let file = File::open(&input).map_err(|e| Invalid(format!("cannot open {}: {e}", input.display())))?;
            read_path_bin(BufReader::new(file), &params)?
        }
        None => sampler(config, &params)?.sample(derive_seed(config.seed, 0)),
    };
    let scales = &config.transform.scales;
    let shifts = interior_shifts(path.n(), path.dt, scales, wavelet.as_ref(), config.transform.shift_stride);
    if shifts.is_empty() {
        return Err(Invalid(format!("no shift keeps scale {} inside a path of n = {}", scales[scales.len() - 1], path.n())).into());
    }
    let field = cwt(&path, wavelet.as_ref(), scales, &shifts)?;
    write_field_csv(&field, create(&out.join("field.csv"))?)?;
    write_field_bin(&field, create(&out.join("field.bin"))?)?;
    println!("transformed {} components at {} scales over {} shifts", field.p(), scales.len(), shifts.len());
    Ok(())
}

fn positive_grid(config: &ExperimentConfig) -> anyhow::Result<Vec<f64>> {
    config.check_frequencies()?;
    let f = &config.frequencies;
    Ok(frequency_grid(f.lo, f.hi, f.per_decade)?.into_iter().filter(|w| *w > 0.0).collect())
}

pub fn theory(config: &ExperimentConfig, kind: TheoryKind, out: &Path) -> anyhow::Result<()> {
    let params = config.params()?;
    let wavelet = config.wavelet()?;
    let w = wavelet.as_ref();
    let (j, k) = config.components(params.p())?;
    config.check_pair_scales()?;
    let (a1, a2) = (config.pair.a1, config.pair.a2);
    let pair = ScalePair { j, k, a1, a2 };
    match kind {
        TheoryKind::Cov => {
            let base = WaveletCovQuery::new(j, k, a1, a2, 0.0)?;
            let h_min = H_MIN_FACTOR * a1.max(a2);
            let rows = try_map_range(Execution::default(), config.lags.theory.len(), |i| -> mfbm::Result<Vec<String>> {
                let h = config.lags.theory[i];
                let q = base.with_lag(h);
                let est = theoretical_wavelet_cov_estimate(&q, &params, w)?;
                let value = est.within(QUAD_TOL)?;
                let asym = if h.abs() >= h_min { asymptotic_wavelet_cov(&q, &params, w).ok() } else { None };
                Ok(vec![
                    (j + 1).to_string(),
                    (k + 1).to_string(),
                    num(a1),
                    num(a2),
                    num(h),
                    num(value.re),
                    num(value.im),
                    opt(asym.map(|a| a.corrected.re)),
                    opt(asym.map(|a| a.corrected.im)),
                    opt(asym.map(|a| a.corrected.re / value.re)),
                    num(est.error),
                    opt(asym.map(|a| a.literal.re)),
                    opt(asym.map(|a| a.literal.im)),
                ])
            })?;
            let header = ["j", "k", "a1", "a2", "h", "re", "im", "asymptotic_re", "asymptotic_im", "ratio", "quad_error", "stated_asymptotic_re", "stated_asymptotic_im"];
            table::write(&out.join("theory_cov.csv"), &header, &rows)?;
        }
        TheoryKind::Spectrum => {
            config.check_frequencies()?;
            let f = &config.frequencies;
            let grid = cross_spectral_density(&pair, &params, w, &frequency_grid(f.lo, f.hi, f.per_decade)?)?;
            let rows = grid
                .omegas
                .iter()
                .zip(&grid.values)
                .map(|(&o, s)| -> mfbm::Result<Vec<String>> {
                    let z = zeta(j, k, o.signum(), &params)?;
                    Ok(vec![(j + 1).to_string(), (k + 1).to_string(), num(a1), num(a2), num(o), num(s.re), num(s.im), num(s.norm()), num(z.re), num(z.im)])
                })
                .collect::<mfbm::Result<Vec<_>>>()?;
            table::write(&out.join("theory_spectrum.csv"), &["j", "k", "a1", "a2", "omega", "re", "im", "abs", "zeta_re", "zeta_im"], &rows)?;
        }
        TheoryKind::Coherence => {
            let omegas = positive_grid(config)?;
            let c = coherence(&pair, &params, w, &omegas)?;
            let rows: Vec<Vec<String>> = (0..omegas.len())
                .map(|i| vec![num(omegas[i]), num(c.literal[i].re), num(c.literal[i].im), num(c.definition[i]), num(c.discrepancy[i].re), num(c.discrepancy[i].im)])
                .collect();
            table::write(&out.join("theory_coherence.csv"), &["omega", "closed_form_re", "closed_form_im", "definition", "ratio_re", "ratio_im"], &rows)?;
        }
        TheoryKind::Scaling => {
            config.check_transform()?;
            let scales = &config.transform.scales;
            let law = scale_law_constant(j, k, &params, w)?;
            let alpha = params.hurst()[j] + params.hurst()[k];
            let sigma = params.sigma()[j] * params.sigma()[k];
            let covs = try_map_range(Execution::default(), scales.len(), |i| theoretical_wavelet_cov(&WaveletCovQuery::new(j, k, scales[i], scales[i], 0.0)?, &params, w))?;
            let rows: Vec<Vec<String>> = scales
                .iter()
                .zip(&covs)
                .map(|(&a, c)| {
                    let predicted = law.z * sigma * a.powf(alpha + 1.0);
                    vec![num(a), num(c.re), num(c.im), num(predicted.re), num(predicted.im)]
                })
                .collect();
            table::write(&out.join("theory_scaling.csv"), &["a", "cov_re", "cov_im", "predicted_re", "predicted_im"], &rows)?;
            if scales.len() >= 3 {
                let fit = fit_power_law(scales, &covs.iter().map(|c| c.norm()).collect::<Vec<_>>(), None)?;
                println!("log-log slope {:.6} (exponent H_j + H_k + 1 = {:.6})", fit.slope, alpha + 1.0);
            }
        }
    }
    println!("wrote theory {kind:?} for components ({}, {})", j + 1, k + 1);
    Ok(())
}

struct Replicate {
    wavelet: Vec<Complex64>,
    increments: Vec<f64>,
    periodogram: Vec<Complex64>,
}

pub fn estimate(config: &ExperimentConfig, out: &Path) -> anyhow::Result<()> {
    let params = config.params()?;
    let wavelet = config.wavelet()?;
    let w = wavelet.as_ref();
    let (j, k) = config.components(params.p())?;
    config.check_pair_scales()?;
    config.check_transform()?;
    let (a1, a2) = (config.pair.a1, config.pair.a2);
    let pair = ScalePair { j, k, a1, a2 };
    let sampler = sampler(config, &params)?;
    let reps = config.simulation.replicates;
    if reps < mfbm::estimate::MIN_REPLICATES {
        return Err(Invalid(format!("estimate needs at least {} replicates, got {reps}", mfbm::estimate::MIN_REPLICATES)).into());
    }
    let steps = &config.lags.steps;
    if !steps.contains(&0) {
        return Err(Invalid("lags.steps must include 0".into()).into());
    }
    let (n, dt, stride) = (config.simulation.n, config.simulation.dt, config.transform.shift_stride);
    let mut scales = vec![a1.min(a2), a1.max(a2)];
    scales.dedup();
    let shifts = interior_shifts(n, dt, &scales, w, stride);
    let max_step = steps.iter().map(|s| s.unsigned_abs() as usize).max().unwrap_or(0);
    if shifts.len() <= max_step + 1 {
        return Err(Invalid(format!("{} interior shifts cannot support lag {max_step}", shifts.len())).into());
    }
    let spacing = dt * stride as f64;
    let nyquist = std::f64::consts::PI / spacing;
    let omegas: Vec<f64> = positive_grid(config)?.into_iter().filter(|&o| o < nyquist).collect();
    let inc_lags: Vec<i64> = steps.iter().copied().filter(|&l| l >= 0).collect();

    let per = try_map_range(Execution::default(), reps, |r| -> mfbm::Result<Replicate> {
        let path = sampler.sample(derive_seed(config.seed, r as u64));
        let field = cwt(&path, w, &scales, &shifts)?;
        Ok(Replicate {
            wavelet: lagged_products(&field, &pair, steps)?,
            increments: increment_lagged_products(&path, j, k, &inc_lags)?,
            periodogram: cross_periodogram(&field, &pair, &omegas)?,
        })
    })?;

    let wav: Vec<Vec<Complex64>> = per.iter().map(|r| r.wavelet.clone()).collect();
    let est = EmpiricalCov::from_replicate_means(pair, steps, spacing, &wav)?;
    let rows = try_map_range(Execution::default(), steps.len(), |i| -> mfbm::Result<Vec<String>> {
        let theory = theoretical_wavelet_cov(&WaveletCovQuery::new(j, k, a1, a2, est.h[i])?, &params, w).ok();
        Ok(vec![
            steps[i].to_string(),
            num(est.h[i]),
            num(est.mean[i].re),
            num(est.mean[i].im),
            num(est.se_re[i]),
            num(est.se_im[i]),
            opt(theory.map(|t| t.re)),
            opt(theory.map(|t| t.im)),
            opt(theory.map(|t| (est.mean[i].re - t.re) / est.se_re[i])),
        ])
    })?;
    table::write(&out.join("estimate_cov.csv"), &["step", "h", "mean_re", "mean_im", "se_re", "se_im", "theory_re", "theory_im", "z_re"], &rows)?;

    if !inc_lags.is_empty() {
        let kernel = params.cross(j, k)?;
        let inc: Vec<Vec<f64>> = per.iter().map(|r| r.increments.clone()).collect();
        let est = IncrementCov::from_replicate_means(j, k, &inc_lags, &inc)?;
        let rows = inc_lags
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                let theory = kernel.increment_covariance(l as f64, dt);
                vec![l.to_string(), num(est.mean[i]), num(est.se[i]), num(theory), num((est.mean[i] - theory) / est.se[i])]
            })
            .collect::<Vec<_>>();
        table::write(&out.join("estimate_increments.csv"), &["lag", "mean", "se", "theory", "z"], &rows)?;
    }

    if !omegas.is_empty() {
        let pg: Vec<Vec<Complex64>> = per.iter().map(|r| r.periodogram.clone()).collect();
        let est = cross_spectrum_from_replicates(pair, &omegas, &pg)?;
        let rows: Vec<Vec<String>> = omegas
            .iter()
            .enumerate()
            .map(|(i, &o)| {
                let theory = spectral_density_at(&pair, &params, w, o).ok();
                vec![
                    num(o),
                    num(est.mean[i].re),
                    num(est.mean[i].im),
                    num(est.se_re[i]),
                    num(est.se_im[i]),
                    opt(theory.map(|t| t.re)),
                    opt(theory.map(|t| t.im)),
                ]
            })
            .collect();
        table::write(&out.join("estimate_spectrum.csv"), &["omega", "mean_re", "mean_im", "se_re", "se_im", "theory_re", "theory_im"], &rows)?;
    }
    println!("estimated from {reps} replicates of n = {n}");
    Ok(())
}
