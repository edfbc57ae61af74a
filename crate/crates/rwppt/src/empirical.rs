//! Finite-dimension Monte Carlo estimators of the swap acceptance rate,
//! the ESJD, and the distribution of the swap log-ratio B, used to validate
//! convergence to the limiting theory.
//!
//! Stationarity is realized by exact sampling (the product-form target
//! admits it), so estimates carry no burn-in bias. All estimators draw the
//! lower-temperature point from pi_beta and the upper from pi_beta' with
//! beta' = beta + ell/sqrt(d), independently, matching the product
//! invariant law of the tempering chain.
//!
//! Work is split into fixed-size batches; batch b always consumes stream b
//! of a counter-based generator seeded from the experiment seed. Results
//! are merged in batch order, so estimates are bit-identical for any thread
//! count.

use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::pt;
use crate::target::{ModelSpec, TargetModel};
use crate::theory;

const BATCH_SIZE: usize = 8192;

/// A mean with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateWithError {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl EstimateWithError {
    fn from_samples(values: &[f64]) -> Self {
        let n = values.len();
        assert!(n >= 2);
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        EstimateWithError {
            mean,
            stderr: (var / n as f64).sqrt(),
            n,
        }
    }

    /// The same estimate with mean and stderr multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        EstimateWithError {
            mean: self.mean * factor,
            stderr: self.stderr * factor.abs(),
            n: self.n,
        }
    }
}

fn check_pair(model: &TargetModel, beta: f64, ell: f64) -> Result<f64> {
    if !(ell >= 0.0 && ell.is_finite()) {
        return Err(Error::Argument(format!("ell must be >= 0, got {ell}")));
    }
    let beta_hi = beta + ell / (model.dimension() as f64).sqrt();
    if beta_hi > 1.0 {
        return Err(Error::Argument(format!(
            "upper inverse temperature {beta_hi} exceeds 1 (beta = {beta}, ell = {ell}, d = {})",
            model.dimension()
        )));
    }
    Ok(beta_hi)
}

/// One draw of the swap log-ratio and the regions of the two points.
struct BDraw {
    b: f64,
    region_lo: usize,
    region_hi: usize,
}

/// Generate `n_samples` stationary swap draws in deterministic batch order.
/// `stream_hi` salts the ChaCha stream id so independent experiment rows
/// never share a stream.
fn sample_b_draws(
    model: &TargetModel,
    beta: f64,
    ell: f64,
    n_samples: usize,
    seed: u64,
    stream_hi: u64,
    threads: usize,
) -> Result<Vec<BDraw>> {
    let beta_hi = check_pair(model, beta, ell)?;
    let threads = threads.max(1);

    // prime the caches once so workers only read
    let samplers_lo = model.samplers(beta)?;
    let samplers_hi = model.samplers(beta_hi)?;
    model.cumulants(beta)?;
    model.cumulants(beta_hi)?;

    let n_batches = n_samples.div_ceil(BATCH_SIZE);
    let run_batch = |b: usize| -> Result<Vec<BDraw>> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream((stream_hi << 32) | (b as u64 + 1));
        let count = if b + 1 == n_batches {
            n_samples - b * BATCH_SIZE
        } else {
            BATCH_SIZE
        };
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let x_lo = model.sample_stationary_cached(&samplers_lo, &mut rng);
            let y_hi = model.sample_stationary_cached(&samplers_hi, &mut rng);
            let b_val = if ell == 0.0 {
                0.0
            } else {
                pt::log_swap_ratio(model, beta, beta_hi, &x_lo, &y_hi)?
            };
            out.push(BDraw {
                b: b_val,
                region_lo: model.region_of(&x_lo)?.expect("stationary draw in a region"),
                region_hi: model.region_of(&y_hi)?.expect("stationary draw in a region"),
            });
        }
        Ok(out)
    };

    let mut per_batch: Vec<Option<Result<Vec<BDraw>>>> = (0..n_batches).map(|_| None).collect();
    if threads == 1 || n_batches == 1 {
        for (b, slot) in per_batch.iter_mut().enumerate() {
            *slot = Some(run_batch(b));
        }
    } else {
        let next = std::sync::atomic::AtomicUsize::new(0);
        let slots: Vec<Mutex<Option<Result<Vec<BDraw>>>>> =
            (0..n_batches).map(|_| Mutex::new(None)).collect();
        std::thread::scope(|scope| {
            for _ in 0..threads.min(n_batches) {
                scope.spawn(|| loop {
                    let b = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    if b >= n_batches {
                        break;
                    }
                    let r = run_batch(b);
                    *slots[b].lock().unwrap() = Some(r);
                });
            }
        });
        for (b, slot) in slots.into_iter().enumerate() {
            per_batch[b] = slot.into_inner().unwrap();
        }
    }

    let mut draws = Vec::with_capacity(n_samples);
    for slot in per_batch {
        draws.extend(slot.expect("batch executed")?);
    }
    Ok(draws)
}

fn check_n_samples(n_samples: usize) -> Result<()> {
    if n_samples < 1_000 {
        return Err(Error::Argument(format!(
            "estimators need n_samples >= 1000, got {n_samples}"
        )));
    }
    Ok(())
}

/// Monte Carlo estimate of the finite-d swap acceptance rate a(ell, d)
/// between beta and beta + ell/sqrt(d), in stationarity.
pub fn estimate_acceptance(
    model: &TargetModel,
    beta: f64,
    ell: f64,
    n_samples: usize,
    seed: u64,
    threads: usize,
) -> Result<EstimateWithError> {
    check_n_samples(n_samples)?;
    let draws = sample_b_draws(model, beta, ell, n_samples, seed, 0, threads)?;
    let alphas: Vec<f64> = draws.iter().map(|d| d.b.exp().min(1.0)).collect();
    Ok(EstimateWithError::from_samples(&alphas))
}

/// Monte Carlo estimate of the ESJD per swap proposal at spacing
/// eps = ell/sqrt(d): exactly (ell^2/d) times the acceptance estimate on
/// the same random stream.
pub fn estimate_esjd(
    model: &TargetModel,
    beta: f64,
    ell: f64,
    n_samples: usize,
    seed: u64,
    threads: usize,
) -> Result<EstimateWithError> {
    let acc = estimate_acceptance(model, beta, ell, n_samples, seed, threads)?;
    let d = model.dimension() as f64;
    Ok(acc.scaled(ell * ell / d))
}

/// Sample moments of B conditioned on the region pair of the two points.
#[derive(Debug, Clone)]
pub struct BBinMoments {
    /// Region of the lower-temperature draw.
    pub region_lo: usize,
    /// Region of the upper-temperature draw.
    pub region_hi: usize,
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub stderr_mean: f64,
    /// Standard error of the sample variance (fourth-moment based).
    pub stderr_variance: f64,
    /// Bins with fewer than 30 draws are flagged instead of trusted.
    pub sufficient: bool,
}

#[derive(Debug, Clone)]
pub struct BConditionalMoments {
    pub bins: Vec<BBinMoments>,
}

impl BConditionalMoments {
    pub fn bin(&self, region_lo: usize, region_hi: usize) -> Option<&BBinMoments> {
        self.bins
            .iter()
            .find(|b| b.region_lo == region_lo && b.region_hi == region_hi)
    }
}

/// Bin stationary draws of B by (region of lower draw, region of upper
/// draw) and report per-bin sample mean and variance with standard errors.
pub fn b_conditional_moments(
    model: &TargetModel,
    beta: f64,
    ell: f64,
    n_samples: usize,
    seed: u64,
    threads: usize,
) -> Result<BConditionalMoments> {
    check_n_samples(n_samples)?;
    let draws = sample_b_draws(model, beta, ell, n_samples, seed, 1, threads)?;
    let k = model.n_regions();
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); k * k];
    for d in &draws {
        groups[d.region_lo * k + d.region_hi].push(d.b);
    }
    let mut bins = Vec::new();
    for j in 0..k {
        for m in 0..k {
            let vals = &groups[j * k + m];
            let n = vals.len();
            if n < 2 {
                bins.push(BBinMoments {
                    region_lo: j,
                    region_hi: m,
                    n,
                    mean: f64::NAN,
                    variance: f64::NAN,
                    stderr_mean: f64::NAN,
                    stderr_variance: f64::NAN,
                    sufficient: false,
                });
                continue;
            }
            let nf = n as f64;
            let mean = vals.iter().sum::<f64>() / nf;
            let m2 = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / nf;
            let m4 = vals.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / nf;
            let variance = m2 * nf / (nf - 1.0);
            let var_of_var = ((m4 - (nf - 3.0) / (nf - 1.0) * variance * variance) / nf).max(0.0);
            bins.push(BBinMoments {
                region_lo: j,
                region_hi: m,
                n,
                mean,
                variance,
                stderr_mean: (variance / nf).sqrt(),
                stderr_variance: var_of_var.sqrt(),
                sufficient: n >= 30,
            });
        }
    }
    Ok(BConditionalMoments { bins })
}

/// One row of a convergence study.
#[derive(Debug, Clone, Copy)]
pub struct ConvergenceRow {
    pub d: usize,
    pub a_emp: f64,
    pub stderr: f64,
    pub a_limit: f64,
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

/// Estimate a(ell, d) across dimensions and report the gap to the
/// limiting acceptance rate a(ell). Row r uses its own random stream
/// derived from (seed, r).
pub fn convergence_study(
    spec: &ModelSpec,
    beta: f64,
    ell: f64,
    d_list: &[usize],
    n_samples: usize,
    seed: u64,
    threads: usize,
) -> Result<ConvergenceTable> {
    check_n_samples(n_samples)?;
    if d_list.is_empty() {
        return Err(Error::Argument("d_list must be non-empty".into()));
    }
    // admissibility of every d up front
    for &d in d_list {
        if d == 0 {
            return Err(Error::Argument("dimensions must be positive".into()));
        }
        let model = spec.build(d)?;
        check_pair(&model, beta, ell)?;
    }
    let mut rows = Vec::with_capacity(d_list.len());
    for (r, &d) in d_list.iter().enumerate() {
        let model = spec.build(d)?;
        let a_limit = theory::limiting_acceptance(&model, beta, ell)?;
        let draws = sample_b_draws(&model, beta, ell, n_samples, seed, 2 + r as u64, threads)?;
        let alphas: Vec<f64> = draws.iter().map(|x| x.b.exp().min(1.0)).collect();
        let est = EstimateWithError::from_samples(&alphas);
        rows.push(ConvergenceRow {
            d,
            a_emp: est.mean,
            stderr: est.stderr,
            a_limit,
            gap: (est.mean - a_limit).abs(),
        });
    }
    Ok(ConvergenceTable { rows })
}
