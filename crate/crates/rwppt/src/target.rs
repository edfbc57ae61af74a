//! Weight-preserving tempered targets on disjoint hypercube regions.
//!
//! A target is a set of K disjoint hypercubes, each carrying a mass weight
//! w_k and an iid product of shifted 1-D marginals. Tempering rescales the
//! density regionally so every region keeps mass w_k at every inverse
//! temperature, which makes the tempered log-density exactly normalized:
//! for x in region k,
//!
//!   log pi_beta(x) = log w_k + sum_i [ beta log f_k(x_i - c_k_i) ] - d log C_k(beta).
//!
//! Region membership uses half-open intervals [c - h, c + h) so the
//! disjoint union is exact in floating point; points in no region have
//! density zero.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use rand::Rng;

use crate::error::{Error, Result};
use crate::marginals::{self, MarginalFamily, TemperedCumulants, TemperedSampler};

/// One hypercube region: center vector, common half-width, mass weight,
/// and the shared 1-D marginal family of its coordinates.
#[derive(Debug, Clone)]
pub struct Region {
    pub center: Vec<f64>,
    pub half_width: f64,
    pub weight: f64,
    pub family: MarginalFamily,
}

impl Region {
    pub fn new(center: Vec<f64>, half_width: f64, weight: f64, family: MarginalFamily) -> Self {
        Region {
            center,
            half_width,
            weight,
            family,
        }
    }

    #[inline]
    fn contains(&self, x: &[f64]) -> bool {
        self.center
            .iter()
            .zip(x)
            .all(|(&c, &xi)| xi >= c - self.half_width && xi < c + self.half_width)
    }
}

/// A validated K-region weight-preserving target in dimension d.
#[derive(Debug)]
pub struct TargetModel {
    dimension: usize,
    regions: Vec<Region>,
    cumulant_cache: RwLock<HashMap<u64, Arc<Vec<TemperedCumulants>>>>,
    sampler_cache: RwLock<HashMap<u64, Arc<Vec<TemperedSampler>>>>,
}

impl TargetModel {
    pub fn new(dimension: usize, regions: Vec<Region>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Model("dimension must be positive".into()));
        }
        if regions.is_empty() {
            return Err(Error::Model("a target needs at least one region".into()));
        }
        let k = regions.len();
        for (idx, r) in regions.iter().enumerate() {
            if r.center.len() != dimension {
                return Err(Error::Model(format!(
                    "region {idx}: center has length {}, expected {dimension}",
                    r.center.len()
                )));
            }
            if !(r.half_width.is_finite() && r.half_width > 0.0) {
                return Err(Error::Model(format!(
                    "region {idx}: half_width must be positive, got {}",
                    r.half_width
                )));
            }
            let w_hi = if k == 1 { 1.0 } else { 1.0 - f64::EPSILON };
            if !(r.weight > 0.0 && r.weight <= w_hi) {
                return Err(Error::Model(format!(
                    "region {idx}: weight must lie in (0, 1), got {}",
                    r.weight
                )));
            }
            if let Some(h) = r.family.intrinsic_half_width() {
                if (h - r.half_width).abs() > 1e-9 * h.max(1.0) {
                    return Err(Error::Model(format!(
                        "region {idx}: tabulated support [{:-}, {h}] does not match half_width {}",
                        -h, r.half_width
                    )));
                }
            }
            if r.center.iter().any(|c| !c.is_finite()) {
                return Err(Error::Model(format!("region {idx}: center must be finite")));
            }
        }
        if ((regions.iter().map(|r| r.weight).sum::<f64>()) - 1.0).abs() > 1e-12 {
            return Err(Error::Model(format!(
                "region weights must sum to 1 within 1e-12, got {}",
                regions.iter().map(|r| r.weight).sum::<f64>()
            )));
        }
        for a in 0..k {
            for b in a + 1..k {
                let (ra, rb) = (&regions[a], &regions[b]);
                let sep = ra
                    .center
                    .iter()
                    .zip(&rb.center)
                    .any(|(&ca, &cb)| (ca - cb).abs() >= ra.half_width + rb.half_width);
                if !sep {
                    return Err(Error::Model(format!(
                        "regions {a} and {b} overlap: no coordinate separates them"
                    )));
                }
            }
        }
        Ok(TargetModel {
            dimension,
            regions,
            cumulant_cache: RwLock::new(HashMap::new()),
            sampler_cache: RwLock::new(HashMap::new()),
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn n_regions(&self) -> usize {
        self.regions.len()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dimension {
            return Err(Error::Argument(format!(
                "point has dimension {}, model expects {}",
                x.len(),
                self.dimension
            )));
        }
        Ok(())
    }

    /// Index of the region containing `x`, if any.
    pub fn region_of(&self, x: &[f64]) -> Result<Option<usize>> {
        self.check_dim(x)?;
        Ok(self.regions.iter().position(|r| r.contains(x)))
    }

    /// Tempered cumulants of every region's marginal at `beta`, cached per
    /// exact bit pattern of `beta`.
    pub fn cumulants(&self, beta: f64) -> Result<Arc<Vec<TemperedCumulants>>> {
        let key = beta.to_bits();
        if let Some(hit) = self.cumulant_cache.read().unwrap().get(&key) {
            return Ok(Arc::clone(hit));
        }
        let computed: Vec<TemperedCumulants> = self
            .regions
            .iter()
            .map(|r| marginals::cumulants(&r.family, r.half_width, beta))
            .collect::<Result<_>>()?;
        let arc = Arc::new(computed);
        self.cumulant_cache
            .write()
            .unwrap()
            .entry(key)
            .or_insert_with(|| Arc::clone(&arc));
        Ok(arc)
    }

    /// Per-region tempered samplers at `beta`, cached like `cumulants`.
    pub fn samplers(&self, beta: f64) -> Result<Arc<Vec<TemperedSampler>>> {
        let key = beta.to_bits();
        if let Some(hit) = self.sampler_cache.read().unwrap().get(&key) {
            return Ok(Arc::clone(hit));
        }
        let built: Vec<TemperedSampler> = self
            .regions
            .iter()
            .map(|r| TemperedSampler::new(&r.family, r.half_width, beta))
            .collect::<Result<_>>()?;
        let arc = Arc::new(built);
        self.sampler_cache
            .write()
            .unwrap()
            .entry(key)
            .or_insert_with(|| Arc::clone(&arc));
        Ok(arc)
    }

    /// Sum of centered marginal log-densities over the coordinates of `x`,
    /// which must lie in region `k`.
    pub(crate) fn coord_log_sum(&self, k: usize, x: &[f64]) -> Result<f64> {
        let r = &self.regions[k];
        let mut s = 0.0;
        for (&xi, &ci) in x.iter().zip(&r.center) {
            s += r.family.log_density_unnorm(xi - ci)?;
        }
        Ok(s)
    }

    /// Normalized log-density of the weight-preserving tempered target.
    /// Returns `-inf` outside every region.
    pub fn log_density(&self, beta: f64, x: &[f64]) -> Result<f64> {
        marginals::check_beta(beta)?;
        let Some(k) = self.region_of(x)? else {
            return Ok(f64::NEG_INFINITY);
        };
        let cums = self.cumulants(beta)?;
        let s = self.coord_log_sum(k, x)?;
        Ok(self.regions[k].weight.ln() + beta * s - self.dimension as f64 * cums[k].log_c)
    }

    /// Exact draw from the tempered target: region chosen by weight, then
    /// each coordinate from the tempered truncated marginal, shifted.
    pub fn sample_stationary<R: Rng + ?Sized>(&self, beta: f64, rng: &mut R) -> Result<Vec<f64>> {
        let samplers = self.samplers(beta)?;
        Ok(self.sample_stationary_cached(&samplers, rng))
    }

    /// Same as `sample_stationary` but reusing an already-fetched sampler
    /// set (hot path for the Monte Carlo estimators).
    pub(crate) fn sample_stationary_cached<R: Rng + ?Sized>(
        &self,
        samplers: &[TemperedSampler],
        rng: &mut R,
    ) -> Vec<f64> {
        let k = self.sample_region_index(rng);
        let r = &self.regions[k];
        let s = &samplers[k];
        r.center.iter().map(|&c| c + s.sample(rng)).collect()
    }

    pub(crate) fn sample_region_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (k, r) in self.regions.iter().enumerate() {
            acc += r.weight;
            if u < acc {
                return k;
            }
        }
        self.regions.len() - 1
    }
}

/// Dimension-independent description of a model: scalar center offsets that
/// are replicated across every coordinate. Lets the same target family be
/// instantiated at any dimension for convergence studies.
#[derive(Debug, Clone)]
pub struct RegionSpec {
    /// Region center is `offset` in every coordinate.
    pub offset: f64,
    pub half_width: f64,
    pub weight: f64,
    pub family: MarginalFamily,
}

#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub regions: Vec<RegionSpec>,
}

impl ModelSpec {
    pub fn build(&self, dimension: usize) -> Result<TargetModel> {
        let regions = self
            .regions
            .iter()
            .map(|rs| {
                Region::new(
                    vec![rs.offset; dimension],
                    rs.half_width,
                    rs.weight,
                    rs.family.clone(),
                )
            })
            .collect();
        TargetModel::new(dimension, regions)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn gauss() -> MarginalFamily {
        MarginalFamily::exp_power(2, 1.0).unwrap()
    }

    fn two_cube_model(d: usize) -> TargetModel {
        TargetModel::new(
            d,
            vec![
                Region::new(vec![0.0; d], 1.0, 0.3, gauss()),
                Region::new(
                    std::iter::once(10.0)
                        .chain(std::iter::repeat(0.0))
                        .take(d)
                        .collect(),
                    1.0,
                    0.7,
                    gauss(),
                ),
            ],
        )
        .unwrap()
    }

    #[test]
    fn region_lookup_examples() {
        let d = 4;
        let one = TargetModel::new(d, vec![Region::new(vec![0.0; d], 1.0, 1.0, gauss())]).unwrap();
        assert_eq!(one.region_of(&vec![0.0; d]).unwrap(), Some(0));

        let two = two_cube_model(d);
        let mut x = vec![0.0; d];
        x[0] = 10.5;
        assert_eq!(two.region_of(&x).unwrap(), Some(1));
        x[0] = 5.0;
        assert_eq!(two.region_of(&x).unwrap(), None);
        assert!(two.region_of(&[0.0; 3]).is_err());
    }

    #[test]
    fn half_open_boundaries_are_deterministic() {
        let m = TargetModel::new(
            1,
            vec![
                Region::new(vec![0.0], 1.0, 0.5, gauss()),
                Region::new(vec![2.0], 1.0, 0.5, gauss()),
            ],
        )
        .unwrap();
        // shared boundary point belongs to the right cube only
        assert_eq!(m.region_of(&[1.0]).unwrap(), Some(1));
        assert_eq!(m.region_of(&[1.0 - 1e-12]).unwrap(), Some(0));
        assert_eq!(m.region_of(&[3.0]).unwrap(), None);
    }

    #[test]
    fn validation_rejects_bad_models() {
        let d = 2;
        // overlapping
        assert!(TargetModel::new(
            d,
            vec![
                Region::new(vec![0.0; d], 1.0, 0.5, gauss()),
                Region::new(vec![1.5, 0.0], 1.0, 0.5, gauss()),
            ],
        )
        .is_err());
        // weights off
        assert!(TargetModel::new(
            d,
            vec![
                Region::new(vec![0.0; d], 1.0, 0.5, gauss()),
                Region::new(vec![5.0, 0.0], 1.0, 0.6, gauss()),
            ],
        )
        .is_err());
        // dimension mismatch in center
        assert!(TargetModel::new(d, vec![Region::new(vec![0.0], 1.0, 1.0, gauss())]).is_err());
        assert!(TargetModel::new(0, vec![]).is_err());
    }

    #[test]
    fn log_density_center_matches_log_c() {
        // K=1, d=1, gaussian h=8, beta=1: value at the center is -log C(1)
        let m = TargetModel::new(1, vec![Region::new(vec![0.0], 8.0, 1.0, gauss())]).unwrap();
        let v = m.log_density(1.0, &[0.0]).unwrap();
        assert!((v + 0.91893853320467149759).abs() < 1e-9, "{v}");
        assert_eq!(m.log_density(1.0, &[9.0]).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn regional_mass_is_preserved_across_temperatures() {
        // d=1: integral of exp(log_density) over each region equals w_k
        let m = TargetModel::new(
            1,
            vec![
                Region::new(vec![-4.0], 2.0, 0.25, gauss()),
                Region::new(vec![1.0], 2.0, 0.35, MarginalFamily::exp_power(1, 0.5).unwrap()),
                Region::new(vec![6.0], 2.0, 0.40, MarginalFamily::exp_power(4, 1.2).unwrap()),
            ],
        )
        .unwrap();
        for &beta in &[1.0, 0.5, 0.1] {
            for (k, r) in m.regions().iter().enumerate() {
                let mass = quadrature::integrate(
                    |x| m.log_density(beta, &[x]).unwrap().exp(),
                    r.center[0] - r.half_width,
                    r.center[0] + r.half_width,
                    1e-13,
                    100_000,
                )
                .unwrap()
                .value;
                assert!(
                    (mass - r.weight).abs() < 1e-8,
                    "beta={beta} region {k}: mass {mass} vs weight {}",
                    r.weight
                );
            }
        }
    }

    #[test]
    fn log_density_is_exchangeable_when_centers_are_constant() {
        let d = 5;
        let m = TargetModel::new(
            d,
            vec![
                Region::new(vec![1.0; d], 1.5, 0.6, gauss()),
                Region::new(vec![8.0; d], 1.5, 0.4, MarginalFamily::exp_power(1, 1.0).unwrap()),
            ],
        )
        .unwrap();
        let x = [1.3, 0.9, 1.1, 0.2, 1.9];
        let mut perms = vec![
            [1.9, 0.9, 1.1, 0.2, 1.3],
            [0.2, 1.3, 1.9, 0.9, 1.1],
        ];
        let v = m.log_density(0.7, &x).unwrap();
        for p in perms.drain(..) {
            assert!((m.log_density(0.7, &p).unwrap() - v).abs() < 1e-12);
        }
    }

    #[test]
    fn stationary_sampling_hits_weights_and_regions() {
        let d = 3;
        let m = two_cube_model(d);
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let n = 200_000;
        let mut counts = [0usize; 2];
        for _ in 0..n {
            let x = m.sample_stationary(1.0, &mut rng).unwrap();
            let k = m.region_of(&x).unwrap().expect("draw must land in a region");
            counts[k] += 1;
        }
        let f0 = counts[0] as f64 / n as f64;
        let se = (0.3f64 * 0.7 / n as f64).sqrt();
        assert!((f0 - 0.3).abs() < 4.0 * se, "freq {f0}");
    }

    #[test]
    fn stationary_coordinate_variance_matches_oracle() {
        // K=1 gaussian, h=8, beta=1: per-coordinate variance ~ 1.0
        let d = 2;
        let m =
            TargetModel::new(d, vec![Region::new(vec![3.0; d], 8.0, 1.0, gauss())]).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let n = 100_000;
        let mut acc = 0.0;
        let mut acc2 = 0.0;
        for _ in 0..n {
            let x = m.sample_stationary(1.0, &mut rng).unwrap();
            let c = x[0] - 3.0;
            acc += c;
            acc2 += c * c;
        }
        let mean = acc / n as f64;
        let var = acc2 / n as f64 - mean * mean;
        assert!((var - 1.0).abs() < 5.0 * (2.0 / n as f64).sqrt());
    }

    #[test]
    fn spec_builds_any_dimension() {
        let spec = ModelSpec {
            regions: vec![
                RegionSpec { offset: 0.0, half_width: 2.0, weight: 0.5, family: gauss() },
                RegionSpec { offset: 10.0, half_width: 2.0, weight: 0.5, family: gauss() },
            ],
        };
        for d in [1, 4, 64] {
            let m = spec.build(d).unwrap();
            assert_eq!(m.dimension(), d);
            assert_eq!(m.regions()[1].center, vec![10.0; d]);
        }
    }
}
