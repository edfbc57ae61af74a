//! Closed-form limiting objects for temperature-swap tuning.
//!
//! As dimension grows with pair spacing eps = ell / sqrt(d), the swap
//! log-ratio converges to a Gaussian mixture with one component per ordered
//! region pair (j, m), with mean -ell^2 (I_j + I_m)/2 and variance
//! ell^2 (I_j + I_m). The limiting scaled ESJD is
//!
//!   E(ell) = ell^2 * sum_{j,m} w_j w_m * 2 Phi(-ell sigma_jm / 2),
//!
//! with sigma_jm = sqrt(I_j + I_m), and the limiting swap acceptance rate
//! a(ell) is the same double sum without the ell^2 factor. Maximizing E
//! over ell gives the optimal spacing; the induced acceptance rate never
//! exceeds 2 Phi(-m_hat) ~ 0.234, where m_hat solves 2 Phi(-m) = m phi(m).

use crate::error::{Error, Result};
use crate::normal;
use crate::target::TargetModel;

/// Relative search-interval cap: ell_max = 10 / min sigma_jm.
const ELL_MAX_FACTOR: f64 = 10.0;
const GRID_POINTS: usize = 512;
const GOLDEN_TOL: f64 = 1e-8;

/// sigma_jm(beta) = sqrt(I_j(beta) + I_m(beta)); symmetric in (j, m).
pub fn sigma_jm(model: &TargetModel, beta: f64, j: usize, m: usize) -> Result<f64> {
    let k = model.n_regions();
    if j >= k || m >= k {
        return Err(Error::Argument(format!(
            "region pair ({j}, {m}) out of range for {k} regions"
        )));
    }
    let c = model.cumulants(beta)?;
    Ok((c[j].i + c[m].i).sqrt())
}

/// The full sigma matrix (K x K).
pub fn sigma_matrix(model: &TargetModel, beta: f64) -> Result<Vec<Vec<f64>>> {
    let c = model.cumulants(beta)?;
    let k = model.n_regions();
    Ok((0..k)
        .map(|j| (0..k).map(|m| (c[j].i + c[m].i).sqrt()).collect())
        .collect())
}

fn acceptance_from_parts(weights: &[f64], sigmas: &[Vec<f64>], ell: f64) -> f64 {
    let mut acc = 0.0;
    for (j, &wj) in weights.iter().enumerate() {
        for (m, &wm) in weights.iter().enumerate() {
            acc += wj * wm * 2.0 * normal::cdf(-0.5 * ell * sigmas[j][m]);
        }
    }
    acc
}

fn model_parts(model: &TargetModel, beta: f64) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let weights: Vec<f64> = model.regions().iter().map(|r| r.weight).collect();
    let sigmas = sigma_matrix(model, beta)?;
    Ok((weights, sigmas))
}

/// Limiting swap acceptance rate a(ell) at spacing parameter `ell`.
pub fn limiting_acceptance(model: &TargetModel, beta: f64, ell: f64) -> Result<f64> {
    if !(ell >= 0.0) {
        return Err(Error::Argument(format!("ell must be >= 0, got {ell}")));
    }
    let (w, s) = model_parts(model, beta)?;
    Ok(acceptance_from_parts(&w, &s, ell))
}

/// Limiting scaled ESJD, E(ell) = ell^2 * a(ell).
pub fn limiting_esjd(model: &TargetModel, beta: f64, ell: f64) -> Result<f64> {
    Ok(ell * ell * limiting_acceptance(model, beta, ell)?)
}

/// Maximize E(ell) over (0, ell_max]: coarse 512-point grid, then
/// golden-section refinement on the bracketing interval.
///
/// Errors if E is still increasing at ell_max (the optimum is not interior,
/// so the model or beta is outside the theory's working regime) and asserts
/// the theorem's acceptance bound on the result.
pub fn optimize_ell(model: &TargetModel, beta: f64) -> Result<(f64, f64)> {
    let (w, s) = model_parts(model, beta)?;
    let sig_min = s
        .iter()
        .flatten()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if !(sig_min > 0.0 && sig_min.is_finite()) {
        return Err(Error::OptimizerConfig(format!(
            "degenerate sigma matrix: min sigma_jm = {sig_min}"
        )));
    }
    let ell_max = ELL_MAX_FACTOR / sig_min;
    let e = |ell: f64| ell * ell * acceptance_from_parts(&w, &s, ell);

    let mut best_i = 0;
    let mut best_v = f64::NEG_INFINITY;
    let grid: Vec<f64> = (1..=GRID_POINTS)
        .map(|i| ell_max * i as f64 / GRID_POINTS as f64)
        .collect();
    for (i, &l) in grid.iter().enumerate() {
        let v = e(l);
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    if best_i == GRID_POINTS - 1 {
        return Err(Error::OptimizerConfig(format!(
            "E(ell) is still increasing at ell_max = {ell_max}"
        )));
    }
    let lo = if best_i == 0 { 0.0 } else { grid[best_i - 1] };
    let hi = grid[best_i + 1];

    // golden-section maximization on [lo, hi]
    let inv_phi = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (e(c), e(d));
    while b - a > GOLDEN_TOL {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = e(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = e(d);
        }
    }
    let ell_hat = 0.5 * (a + b);
    let a_hat = acceptance_from_parts(&w, &s, ell_hat);
    if !(a_hat > 0.0) {
        return Err(Error::OptimizerConfig(format!(
            "optimizer reached the degenerate acceptance boundary (a_hat = {a_hat})"
        )));
    }
    debug_assert!(a_hat <= 0.234 + 1e-6, "acceptance bound violated: {a_hat}");
    Ok((ell_hat, a_hat))
}

/// Root of 2 Phi(-m) = m phi(m) on [0.5, 3], by bisection.
/// Returns (m_hat, 2 Phi(-m_hat)); the latter is the 0.234 constant.
pub fn mhat_root() -> (f64, f64) {
    let g = |m: f64| 2.0 * normal::cdf(-m) - m * normal::pdf(m);
    let (mut lo, mut hi) = (0.5, 3.0);
    let (glo, ghi) = (g(lo), g(hi));
    assert!(
        glo > 0.0 && ghi < 0.0,
        "root bracket [0.5, 3] lost its sign change: g = ({glo}, {ghi})"
    );
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let m_hat = 0.5 * (lo + hi);
    (m_hat, 2.0 * normal::cdf(-m_hat))
}

/// h(x) = -Phi^{-1}(x) phi(Phi^{-1}(x)), concave on (0, 1).
pub fn h_fun(x: f64) -> Result<f64> {
    let q = normal::quantile(x)?;
    Ok(-q * normal::pdf(q))
}

/// Points of the curve m -> 2 Phi(-m) - m phi(m), whose unique positive
/// root is m_hat.
pub fn figure_curve(m_grid: &[f64]) -> Vec<(f64, f64)> {
    m_grid
        .iter()
        .map(|&m| (m, 2.0 * normal::cdf(-m) - m * normal::pdf(m)))
        .collect()
}

/// One component of the limiting Gaussian mixture of the swap log-ratio.
#[derive(Debug, Clone, Copy)]
pub struct MixtureComponent {
    pub prob: f64,
    pub mean: f64,
    pub variance: f64,
}

/// The limit law of B: for every ordered region pair (j, m), a Gaussian
/// with mean -ell^2 (I_j + I_m)/2 and variance ell^2 (I_j + I_m), weighted
/// by w_j w_m. Variance equals -2 * mean on every component.
#[derive(Debug, Clone)]
pub struct MixtureLimitLaw {
    pub components: Vec<MixtureComponent>,
}

impl MixtureLimitLaw {
    /// E[min(1, e^B)] under the mixture, which reproduces a(ell).
    pub fn acceptance(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.prob * 2.0 * normal::cdf(-0.5 * c.variance.sqrt()))
            .sum()
    }
}

pub fn limit_law(model: &TargetModel, beta: f64, ell: f64) -> Result<MixtureLimitLaw> {
    if !(ell >= 0.0) {
        return Err(Error::Argument(format!("ell must be >= 0, got {ell}")));
    }
    let c = model.cumulants(beta)?;
    let mut components = Vec::with_capacity(model.n_regions() * model.n_regions());
    for j in 0..model.n_regions() {
        for m in 0..model.n_regions() {
            let s2 = ell * ell * (c[j].i + c[m].i);
            components.push(MixtureComponent {
                prob: model.regions()[j].weight * model.regions()[m].weight,
                mean: -0.5 * s2,
                variance: s2,
            });
        }
    }
    Ok(MixtureLimitLaw { components })
}

/// A tabulated efficiency curve together with its optimum.
#[derive(Debug, Clone)]
pub struct EfficiencyCurve {
    pub beta: f64,
    /// (ell, E(ell), a(ell)) per grid point.
    pub points: Vec<(f64, f64, f64)>,
    pub ell_hat: f64,
    pub a_hat: f64,
}

pub fn efficiency_curve(model: &TargetModel, beta: f64, ells: &[f64]) -> Result<EfficiencyCurve> {
    let (w, s) = model_parts(model, beta)?;
    let mut points = Vec::with_capacity(ells.len());
    for &ell in ells {
        if !(ell >= 0.0) {
            return Err(Error::Argument(format!("ell grid must be >= 0, got {ell}")));
        }
        let a = acceptance_from_parts(&w, &s, ell);
        points.push((ell, ell * ell * a, a));
    }
    let (ell_hat, a_hat) = optimize_ell(model, beta)?;
    Ok(EfficiencyCurve {
        beta,
        points,
        ell_hat,
        a_hat,
    })
}
