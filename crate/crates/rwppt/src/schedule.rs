//! Inverse-temperature ladder construction.
//!
//! Both builders descend from beta_0 = 1 and size each spacing so the pair
//! runs at its optimal scaled spacing ell_hat: the next level solves
//! beta_next = beta / (1 + ell_hat(beta) / (beta sqrt(d))), so that
//! eps = beta - beta_next = beta_next * ell_hat(beta)/beta / sqrt(d),
//! anchoring the pair's ell at the colder member up to the spacing's own
//! second-order error.
//!
//! For exponential-power marginals, Var of the tempered log-density is
//! D / beta^2 with D constant, which makes ell_hat proportional to beta and
//! the descent exactly geometric. `geometric_ladder` exploits that (one
//! ratio for the whole ladder); `optimal_ladder` re-optimizes at every
//! level and works for any model.

use crate::error::{Error, Result};
use crate::marginals::{self, MarginalFamily};
use crate::pt::Ladder;
use crate::target::TargetModel;
use crate::theory;

/// Relative tolerance for the "D is constant" hypothesis check.
const D_CONSTANCY_RTOL: f64 = 1e-3;
/// Hard cap on ladder length (guards runaway descents).
const MAX_RUNGS: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub enum Construction {
    Geometric { ratio: f64 },
    Optimal,
}

/// Per-adjacent-pair plan data. Pair i joins rungs i (warmer than i+1... )
#[derive(Debug, Clone, Copy)]
pub struct PairPlan {
    /// Scaled spacing actually used: (beta_i - beta_{i+1}) * sqrt(d).
    pub ell_used: f64,
    /// Limiting acceptance rate predicted for this pair, anchored at the
    /// pair's lower inverse temperature.
    pub predicted_acceptance: f64,
}

#[derive(Debug, Clone)]
pub struct LadderPlan {
    pub ladder: Ladder,
    pub pairs: Vec<PairPlan>,
    pub construction: Construction,
}

fn check_beta_min(beta_min: f64) -> Result<()> {
    if !(beta_min.is_finite() && beta_min > 0.0 && beta_min < 1.0) {
        return Err(Error::Argument(format!(
            "beta_min must lie in (0, 1), got {beta_min}"
        )));
    }
    if beta_min < marginals::BETA_MIN {
        return Err(Error::Argument(format!(
            "beta_min = {beta_min} below the supported floor {:e}",
            marginals::BETA_MIN
        )));
    }
    Ok(())
}

// Descend from 1 with per-level relative spacing r(beta) = ell_hat(beta)/beta,
// clamping the final rung to exactly beta_min.
fn descend(
    mut rel_spacing: impl FnMut(f64) -> Result<f64>,
    beta_min: f64,
    d: usize,
) -> Result<Vec<f64>> {
    let sqrt_d = (d as f64).sqrt();
    let mut betas = vec![1.0];
    loop {
        let beta = *betas.last().unwrap();
        let r = rel_spacing(beta)?;
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::OptimizerConfig(format!(
                "non-positive relative spacing {r} at beta = {beta}"
            )));
        }
        let next = beta / (1.0 + r / sqrt_d);
        if next <= beta_min {
            betas.push(beta_min);
            break;
        }
        betas.push(next);
        if betas.len() > MAX_RUNGS {
            return Err(Error::OptimizerConfig(format!(
                "ladder exceeded {MAX_RUNGS} rungs before reaching beta_min = {beta_min}"
            )));
        }
    }
    Ok(betas)
}

fn plan_from_betas(
    model: &TargetModel,
    betas: Vec<f64>,
    d: usize,
    construction: Construction,
) -> Result<LadderPlan> {
    let sqrt_d = (d as f64).sqrt();
    let mut pairs = Vec::with_capacity(betas.len() - 1);
    for w in betas.windows(2) {
        let (hi, lo) = (w[0], w[1]);
        let ell = (hi - lo) * sqrt_d;
        pairs.push(PairPlan {
            ell_used: ell,
            predicted_acceptance: theory::limiting_acceptance(model, lo, ell)?,
        });
    }
    Ok(LadderPlan {
        ladder: Ladder::new(betas)?,
        pairs,
        construction,
    })
}

/// Extract and verify the tempering constant D = I(beta) * beta^2 for a
/// Corollary-class model: all regions exponential-power with one shared
/// exponent, D constant over beta and regions, truncation negligible.
fn common_tempering_constant(model: &TargetModel, beta_min: f64) -> Result<f64> {
    let mut z_shared: Option<u32> = None;
    for (k, r) in model.regions().iter().enumerate() {
        match &r.family {
            MarginalFamily::ExpPower { z, sigma } => {
                if *z_shared.get_or_insert(*z) != *z {
                    return Err(Error::ModelMismatch(format!(
                        "region {k} has exponent z = {z}, others use {}",
                        z_shared.unwrap()
                    )));
                }
                let needed = 8.0 * sigma * beta_min.powf(-1.0 / f64::from(*z));
                if r.half_width < needed {
                    return Err(Error::ModelMismatch(format!(
                        "region {k}: half_width {} < {needed} needed for negligible \
                         truncation down to beta_min = {beta_min}",
                        r.half_width
                    )));
                }
            }
            MarginalFamily::Tabulated(_) => {
                return Err(Error::ModelMismatch(format!(
                    "region {k} is tabulated; geometric construction needs \
                     exponential-power marginals"
                )));
            }
        }
    }

    // reference point mid-range in log scale, constancy probed at the ends
    let beta_ref = beta_min.sqrt();
    let d_ref = model.cumulants(beta_ref)?[0].i * beta_ref * beta_ref;
    for &beta in &[1.0, beta_ref, beta_min] {
        let cums = model.cumulants(beta)?;
        for (k, c) in cums.iter().enumerate() {
            let d_here = c.i * beta * beta;
            if (d_here - d_ref).abs() > D_CONSTANCY_RTOL * d_ref {
                return Err(Error::ModelMismatch(format!(
                    "tempering constant varies: region {k} gives I*beta^2 = {d_here} \
                     at beta = {beta}, reference {d_ref} (relative tolerance {D_CONSTANCY_RTOL})"
                )));
            }
        }
    }
    Ok(d_ref)
}

/// Geometric ladder for exponential-power models: ratio
/// 1 / (1 + ell_hat(1)/sqrt(d)) with ell_hat(beta) = 2 m_hat beta / sqrt(2D),
/// predicted pair acceptance 0.234 uniformly (up to the clamped last rung).
pub fn geometric_ladder(model: &TargetModel, beta_min: f64, d: usize) -> Result<LadderPlan> {
    check_beta_min(beta_min)?;
    if d == 0 {
        return Err(Error::Argument("dimension must be positive".into()));
    }
    let big_d = common_tempering_constant(model, beta_min)?;
    let (m_hat, _) = theory::mhat_root();
    let r = 2.0 * m_hat / (2.0 * big_d).sqrt(); // ell_hat(beta)/beta
    let ratio = 1.0 / (1.0 + r / (d as f64).sqrt());
    let betas = descend(|_| Ok(r), beta_min, d)?;
    plan_from_betas(model, betas, d, Construction::Geometric { ratio })
}

/// General optimal ladder: re-optimize ell at each level via the limiting
/// efficiency curve. On exponential-power models this reproduces the
/// geometric ladder (the testable content of the corollary).
pub fn optimal_ladder(model: &TargetModel, beta_min: f64, d: usize) -> Result<LadderPlan> {
    check_beta_min(beta_min)?;
    if d == 0 {
        return Err(Error::Argument("dimension must be positive".into()));
    }
    let betas = descend(
        |beta| {
            let (ell_hat, _) = theory::optimize_ell(model, beta)?;
            Ok(ell_hat / beta)
        },
        beta_min,
        d,
    )?;
    plan_from_betas(model, betas, d, Construction::Optimal)
}
