//! One-dimensional marginal density families and their tempered form.
//!
//! A family describes an unnormalized density f on a compact symmetric
//! support in centered coordinates. Tempering raises it to a power
//! beta in (0, 1]. This module computes the tempered normalizing constant
//! and the first three central cumulants of log f under f^beta (the
//! quantities the spacing theory is built from), and draws exact samples
//! from the tempered, truncated density via an inverse-CDF table.

use rand::Rng;

use crate::error::{Error, Result};
use crate::interp;
use crate::quadrature::{self, DEFAULT_ABS_TOL, DEFAULT_MAX_PANELS};

/// Inverse temperatures below this are rejected: quadrature of f^beta is
/// ill-conditioned as beta -> 0 and the theory requires beta > 0.
pub const BETA_MIN: f64 = 1e-6;

/// Number of abscissae in the inverse-CDF sampling table.
const SAMPLER_NODES: usize = 2048;

/// Validate an inverse temperature.
pub fn check_beta(beta: f64) -> Result<()> {
    if !(beta.is_finite() && (BETA_MIN..=1.0).contains(&beta)) {
        return Err(Error::Argument(format!(
            "inverse temperature must lie in [{BETA_MIN:e}, 1], got {beta}"
        )));
    }
    Ok(())
}

/// A 1-D base density shape in centered coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum MarginalFamily {
    /// log f(x) = -|x/sigma|^z / z, so z = 2 is the N(0, sigma^2) shape
    /// and z = 1 is Laplace with scale sigma.
    ExpPower { z: u32, sigma: f64 },
    /// log f given on a grid over [-h, h], evaluated by monotone-safe
    /// cubic interpolation. Queries outside the grid are domain errors.
    Tabulated(Tabulated),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    grid: Vec<f64>,
    log_values: Vec<f64>,
    slopes: Vec<f64>,
}

impl Tabulated {
    fn eval(&self, x: f64) -> Result<f64> {
        let (lo, hi) = (self.grid[0], *self.grid.last().unwrap());
        if !(lo..=hi).contains(&x) {
            return Err(Error::Domain(format!(
                "x = {x} outside tabulated support [{lo}, {hi}]"
            )));
        }
        Ok(interp::pchip_eval(&self.grid, &self.log_values, &self.slopes, x))
    }

    pub fn half_width(&self) -> f64 {
        *self.grid.last().unwrap()
    }
}

impl MarginalFamily {
    pub fn exp_power(z: u32, sigma: f64) -> Result<Self> {
        if z < 1 {
            return Err(Error::Argument("exp-power exponent z must be >= 1".into()));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::Argument(format!(
                "exp-power scale must be positive, got {sigma}"
            )));
        }
        Ok(MarginalFamily::ExpPower { z, sigma })
    }

    pub fn tabulated(grid: Vec<f64>, log_values: Vec<f64>) -> Result<Self> {
        if grid.len() < 16 {
            return Err(Error::Argument(format!(
                "tabulated family needs at least 16 grid points, got {}",
                grid.len()
            )));
        }
        if grid.len() != log_values.len() {
            return Err(Error::Argument(
                "tabulated grid and log_values lengths differ".into(),
            ));
        }
        if grid.windows(2).any(|w| !(w[0] < w[1])) || grid.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument(
                "tabulated grid must be finite and strictly increasing".into(),
            ));
        }
        if log_values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("tabulated log_values must be finite".into()));
        }
        let h = *grid.last().unwrap();
        if !(h > 0.0) || (grid[0] + h).abs() > 1e-12 * h.max(1.0) {
            return Err(Error::Argument(format!(
                "tabulated grid must span a symmetric interval [-h, h], got [{}, {}]",
                grid[0], h
            )));
        }
        let slopes = interp::pchip_slopes(&grid, &log_values);
        Ok(MarginalFamily::Tabulated(Tabulated {
            grid,
            log_values,
            slopes,
        }))
    }

    /// log f(x) up to the family's fixed additive constant.
    pub fn log_density_unnorm(&self, x: f64) -> Result<f64> {
        match self {
            MarginalFamily::ExpPower { z, sigma } => {
                if !x.is_finite() {
                    return Err(Error::Domain(format!("x must be finite, got {x}")));
                }
                Ok(-(x.abs() / sigma).powi(*z as i32) / f64::from(*z))
            }
            MarginalFamily::Tabulated(t) => t.eval(x),
        }
    }

    /// Supremum of log f over the support (used to stabilize exp).
    fn log_density_sup(&self) -> f64 {
        match self {
            MarginalFamily::ExpPower { .. } => 0.0,
            // Fritsch-Carlson interpolation does not overshoot the data
            // range, so the node maximum is the supremum.
            MarginalFamily::Tabulated(t) => {
                t.log_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            }
        }
    }

    /// For tabulated families the support is intrinsic; exp-power families
    /// take their support from the owning region.
    pub fn intrinsic_half_width(&self) -> Option<f64> {
        match self {
            MarginalFamily::ExpPower { .. } => None,
            MarginalFamily::Tabulated(t) => Some(t.half_width()),
        }
    }

    fn check_support(&self, half_width: f64) -> Result<()> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::Argument(format!(
                "half_width must be positive, got {half_width}"
            )));
        }
        if let Some(h) = self.intrinsic_half_width() {
            if (h - half_width).abs() > 1e-9 * h.max(1.0) {
                return Err(Error::Argument(format!(
                    "tabulated support half-width {h} does not match requested {half_width}"
                )));
            }
        }
        Ok(())
    }
}

/// Normalizing constant and central cumulants of L = log f(X) under the
/// tempered truncated density X ~ f^beta on [-h, h].
#[derive(Debug, Clone, Copy)]
pub struct TemperedCumulants {
    pub beta: f64,
    /// log of C(beta) = integral of f^beta over [-h, h].
    pub log_c: f64,
    /// E[L]  (equals d/dbeta log C).
    pub m: f64,
    /// Var[L] (equals d^2/dbeta^2 log C); nonnegative.
    pub i: f64,
    /// E[(L - M)^3] (equals d^3/dbeta^3 log C).
    pub j: f64,
    /// Conservative bound on the quadrature error in `i`.
    pub quad_error: f64,
}

// Integrate g(x, logf) * exp(beta*(logf(x) - shift)) over [-h, h], split at
// zero so kinks of odd exp-power exponents sit on a panel boundary.
fn tempered_integral<G: Fn(f64, f64) -> f64>(
    family: &MarginalFamily,
    half_width: f64,
    beta: f64,
    shift: f64,
    g: G,
    abs_tol: f64,
) -> Result<quadrature::QuadResult> {
    let f = |x: f64| {
        let lf = match family.log_density_unnorm(x) {
            Ok(v) => v,
            Err(_) => return 0.0, // panel nodes can sit exactly on the support boundary
        };
        let w = (beta * (lf - shift)).exp();
        if w == 0.0 {
            0.0
        } else {
            g(x, lf) * w
        }
    };
    let a = quadrature::integrate(&f, -half_width, 0.0, 0.5 * abs_tol, DEFAULT_MAX_PANELS)?;
    let b = quadrature::integrate(&f, 0.0, half_width, 0.5 * abs_tol, DEFAULT_MAX_PANELS)?;
    Ok(quadrature::QuadResult {
        value: a.value + b.value,
        error_estimate: a.error_estimate + b.error_estimate,
        panels: a.panels + b.panels,
    })
}

/// Compute the tempered cumulants of a family truncated to [-h, h]
/// at inverse temperature `beta`, by adaptive quadrature.
pub fn cumulants(family: &MarginalFamily, half_width: f64, beta: f64) -> Result<TemperedCumulants> {
    cumulants_with_tol(family, half_width, beta, DEFAULT_ABS_TOL)
}

pub fn cumulants_with_tol(
    family: &MarginalFamily,
    half_width: f64,
    beta: f64,
    abs_tol: f64,
) -> Result<TemperedCumulants> {
    check_beta(beta)?;
    family.check_support(half_width)?;
    let s = family.log_density_sup();

    let norm = tempered_integral(family, half_width, beta, s, |_, _| 1.0, abs_tol)?;
    if !(norm.value > 0.0) {
        return Err(Error::Model(format!(
            "tempered density has vanishing mass at beta = {beta}"
        )));
    }
    let n = norm.value;
    let first = tempered_integral(family, half_width, beta, s, |_, lf| lf, abs_tol)?;
    let m = first.value / n;
    let second = tempered_integral(
        family,
        half_width,
        beta,
        s,
        |_, lf| {
            let c = lf - m;
            c * c
        },
        abs_tol,
    )?;
    let mut i = second.value / n;
    let third = tempered_integral(
        family,
        half_width,
        beta,
        s,
        |_, lf| {
            let c = lf - m;
            c * c * c
        },
        abs_tol,
    )?;
    let j = third.value / n;

    let err_i = (second.error_estimate + i.abs() * norm.error_estimate) / n
        + 1e-15 * (1.0 + i.abs());
    if i < -err_i.max(1e-9) {
        return Err(Error::Model(format!(
            "computed log-density variance is negative ({i:e}) beyond tolerance"
        )));
    }
    i = i.max(0.0);

    Ok(TemperedCumulants {
        beta,
        log_c: beta * s + n.ln(),
        m,
        i,
        j,
        quad_error: err_i,
    })
}

/// Exact sampler for the tempered truncated density `f^beta` on [-h, h].
///
/// Construction tabulates the quadrature CDF on a 2048-node grid and builds
/// a monotone piecewise-cubic inverse. If the inverse table degenerates
/// numerically, sampling falls back to bisection against the forward CDF
/// interpolant.
#[derive(Debug, Clone)]
pub struct TemperedSampler {
    xs: Vec<f64>,
    us: Vec<f64>,
    inv_slopes: Vec<f64>,
    fwd_slopes: Vec<f64>,
    use_bisection: bool,
    half_width: f64,
    mean: f64,
    std_dev: f64,
}

impl TemperedSampler {
    pub fn new(family: &MarginalFamily, half_width: f64, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        family.check_support(half_width)?;
        let s = family.log_density_sup();
        let h = half_width;

        let weight = |x: f64| -> f64 {
            match family.log_density_unnorm(x) {
                Ok(lf) => (beta * (lf - s)).exp(),
                Err(_) => 0.0,
            }
        };

        let nodes: Vec<f64> = (0..SAMPLER_NODES)
            .map(|i| -h + 2.0 * h * i as f64 / (SAMPLER_NODES - 1) as f64)
            .collect();
        let mut cum = vec![0.0f64; SAMPLER_NODES];
        for i in 1..SAMPLER_NODES {
            let r = quadrature::integrate(&weight, nodes[i - 1], nodes[i], 1e-14, 4_000)?;
            cum[i] = cum[i - 1] + r.value.max(0.0);
        }
        let total = cum[SAMPLER_NODES - 1];
        if !(total > 0.0) {
            return Err(Error::Model(format!(
                "tempered density has vanishing mass at beta = {beta}"
            )));
        }
        for v in cum.iter_mut() {
            *v /= total;
        }
        cum[SAMPLER_NODES - 1] = 1.0;

        // Drop nodes that add no mass so the inverse map stays a function.
        let mut xs = Vec::with_capacity(SAMPLER_NODES);
        let mut us = Vec::with_capacity(SAMPLER_NODES);
        xs.push(nodes[0]);
        us.push(0.0);
        for i in 1..SAMPLER_NODES {
            if cum[i] > *us.last().unwrap() {
                xs.push(nodes[i]);
                us.push(cum[i]);
            }
        }
        if us.len() < 2 {
            return Err(Error::Model(
                "tempered density mass is confined to a single table cell".into(),
            ));
        }

        // Moments by quadrature, independent of the table resolution.
        let norm = tempered_integral(family, h, beta, s, |_, _| 1.0, DEFAULT_ABS_TOL)?;
        let mean =
            tempered_integral(family, h, beta, s, |x, _| x, DEFAULT_ABS_TOL)?.value / norm.value;
        let var = tempered_integral(
            family,
            h,
            beta,
            s,
            |x, _| {
                let c = x - mean;
                c * c
            },
            DEFAULT_ABS_TOL,
        )?
        .value
            / norm.value;

        let inv_slopes = interp::pchip_slopes(&us, &xs);
        let fwd_slopes = interp::pchip_slopes(&xs, &us);
        let degenerate = inv_slopes.iter().any(|v| !v.is_finite())
            || us.windows(2).any(|w| !(w[1] > w[0]));

        Ok(TemperedSampler {
            xs,
            us,
            inv_slopes,
            fwd_slopes,
            use_bisection: degenerate,
            half_width: h,
            mean,
            std_dev: var.max(0.0).sqrt(),
        })
    }

    /// Mean of the tempered truncated density (by quadrature).
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Standard deviation of the tempered truncated density (by quadrature).
    pub fn std_dev(&self) -> f64 {
        self.std_dev
    }

    /// CDF of the tempered truncated density at `x` (interpolated table).
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.xs[0] {
            return 0.0;
        }
        if x >= *self.xs.last().unwrap() {
            return 1.0;
        }
        interp::pchip_eval(&self.xs, &self.us, &self.fwd_slopes, x).clamp(0.0, 1.0)
    }

    /// One exact draw. The result lies inside [-h, h).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.gen();
        let x = self.invert(u);
        if x >= self.half_width {
            f64::from_bits(self.half_width.to_bits() - 1)
        } else {
            x.max(-self.half_width)
        }
    }

    fn invert(&self, u: f64) -> f64 {
        let i = interp::locate(&self.us, u);
        if self.use_bisection {
            // solve fwd(x) = u on [xs[i], xs[i+1]]
            let (mut lo, mut hi) = (self.xs[i], self.xs[i + 1]);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let v = interp::hermite_eval(&self.xs, &self.us, &self.fwd_slopes, i, mid);
                if v < u {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        } else {
            interp::hermite_eval(&self.us, &self.xs, &self.inv_slopes, i, u)
                .clamp(self.xs[i], self.xs[i + 1])
        }
    }

    #[cfg(test)]
    pub(crate) fn force_bisection(&mut self) {
        self.use_bisection = true;
    }
}
