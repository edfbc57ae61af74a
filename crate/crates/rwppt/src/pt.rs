//! The parallel tempering chain on weight-preserving tempered targets:
//! random-walk moves within each temperature level and Metropolis swaps
//! between adjacent levels, with per-pair diagnostics.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::marginals::{self, MarginalFamily};
use crate::target::TargetModel;

/// A decreasing sequence of inverse temperatures, beta_0 = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Ladder {
    betas: Vec<f64>,
}

impl Ladder {
    pub fn new(betas: Vec<f64>) -> Result<Self> {
        if betas.len() < 2 {
            return Err(Error::Argument("a ladder needs at least two levels".into()));
        }
        if betas[0] != 1.0 {
            return Err(Error::Argument(format!(
                "ladder must start at beta_0 = 1, got {}",
                betas[0]
            )));
        }
        if betas.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::Argument("ladder must be strictly decreasing".into()));
        }
        let last = *betas.last().unwrap();
        if !(last >= marginals::BETA_MIN) {
            return Err(Error::Argument(format!(
                "coldest ladder entry must stay above {:e}, got {last}",
                marginals::BETA_MIN
            )));
        }
        Ok(Ladder { betas })
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn len(&self) -> usize {
        self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn n_pairs(&self) -> usize {
        self.betas.len() - 1
    }
}

/// One state vector per temperature level.
#[derive(Debug, Clone)]
pub struct LadderState {
    pub xs: Vec<Vec<f64>>,
}

/// Accumulated counters from a run. The squared inverse-temperature jump
/// per accepted swap is fixed per pair, so the ESJD sum is exactly
/// `accepts * (delta beta)^2` and is exposed as a computed quantity.
#[derive(Debug, Clone)]
pub struct SwapDiagnostics {
    pub pair_beta: Vec<(f64, f64)>,
    pub pair_proposals: Vec<u64>,
    pub pair_accepts: Vec<u64>,
    pub within_proposals: Vec<u64>,
    pub within_accepts: Vec<u64>,
    /// Per level, per region: how many sweeps ended with the level's state
    /// in that region.
    pub occupancy: Vec<Vec<u64>>,
    pub sweeps: u64,
}

impl SwapDiagnostics {
    fn new(ladder: &Ladder, n_regions: usize) -> Self {
        let n = ladder.len();
        SwapDiagnostics {
            pair_beta: ladder
                .betas()
                .windows(2)
                .map(|w| (w[1], w[0]))
                .collect(),
            pair_proposals: vec![0; n - 1],
            pair_accepts: vec![0; n - 1],
            within_proposals: vec![0; n],
            within_accepts: vec![0; n],
            occupancy: vec![vec![0; n_regions]; n],
            sweeps: 0,
        }
    }

    /// Sum of squared inverse-temperature jumps for pair `i`.
    pub fn esjd_sum(&self, i: usize) -> f64 {
        let (lo, hi) = self.pair_beta[i];
        let db = hi - lo;
        self.pair_accepts[i] as f64 * db * db
    }

    /// Empirical swap acceptance rate for pair `i` (0 when nothing proposed).
    pub fn acceptance_rate(&self, i: usize) -> f64 {
        if self.pair_proposals[i] == 0 {
            0.0
        } else {
            self.pair_accepts[i] as f64 / self.pair_proposals[i] as f64
        }
    }

    /// Mean squared jump per proposal for pair `i` (0 when nothing proposed).
    pub fn esjd(&self, i: usize) -> f64 {
        if self.pair_proposals[i] == 0 {
            0.0
        } else {
            self.esjd_sum(i) / self.pair_proposals[i] as f64
        }
    }
}

/// Log acceptance ratio of a swap between adjacent levels.
///
/// `state_lo` is the state currently at the lower inverse temperature
/// `beta_lo`, `state_hi` the one at `beta_hi`. With
/// H(v) = log pi_{beta_hi}(v) - log pi_{beta_lo}(v), the returned value is
/// B = H(state_lo) - H(state_hi), and the swap is accepted with
/// probability min(1, e^B).
pub fn log_swap_ratio(
    model: &TargetModel,
    beta_lo: f64,
    beta_hi: f64,
    state_lo: &[f64],
    state_hi: &[f64],
) -> Result<f64> {
    marginals::check_beta(beta_lo)?;
    marginals::check_beta(beta_hi)?;
    if !(beta_lo < beta_hi) {
        return Err(Error::Argument(format!(
            "swap requires beta_lo < beta_hi, got {beta_lo} and {beta_hi}"
        )));
    }
    let k_lo = model.region_of(state_lo)?.ok_or_else(|| {
        Error::StateCorruption("swap ratio: lower-level state lies outside every region".into())
    })?;
    let k_hi = model.region_of(state_hi)?.ok_or_else(|| {
        Error::StateCorruption("swap ratio: upper-level state lies outside every region".into())
    })?;
    let c_lo = model.cumulants(beta_lo)?;
    let c_hi = model.cumulants(beta_hi)?;
    let d = model.dimension() as f64;
    let dbeta = beta_hi - beta_lo;
    let s_lo = model.coord_log_sum(k_lo, state_lo)?;
    let s_hi = model.coord_log_sum(k_hi, state_hi)?;
    let dlog_c_lo = c_hi[k_lo].log_c - c_lo[k_lo].log_c;
    let dlog_c_hi = c_hi[k_hi].log_c - c_lo[k_hi].log_c;
    Ok(dbeta * (s_lo - s_hi) - d * (dlog_c_lo - dlog_c_hi))
}

/// One Metropolis random-walk update of `x` targeting pi_beta, with an
/// isotropic Gaussian proposal of scale `step_scale` per coordinate.
/// Proposals outside every region have density zero and are rejected.
pub fn rwm_step<R: Rng + ?Sized>(
    model: &TargetModel,
    beta: f64,
    x: &mut [f64],
    step_scale: f64,
    rng: &mut R,
) -> Result<bool> {
    if !(step_scale > 0.0) {
        return Err(Error::Argument(format!(
            "step_scale must be positive, got {step_scale}"
        )));
    }
    let cur = model.log_density(beta, x)?;
    if cur == f64::NEG_INFINITY {
        return Err(Error::StateCorruption(
            "random-walk step from a state outside every region".into(),
        ));
    }
    let prop: Vec<f64> = x
        .iter()
        .map(|&xi| xi + step_scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let new = model.log_density(beta, &prop)?;
    let accept = new > f64::NEG_INFINITY && rng.gen::<f64>().ln() < new - cur;
    if accept {
        x.copy_from_slice(&prop);
    }
    Ok(accept)
}

/// Propose a swap for adjacent pair `i` (levels i and i+1), mutating the
/// state and diagnostics. Returns whether the swap was accepted.
pub fn swap_step<R: Rng + ?Sized>(
    model: &TargetModel,
    ladder: &Ladder,
    state: &mut LadderState,
    diag: &mut SwapDiagnostics,
    i: usize,
    rng: &mut R,
) -> Result<bool> {
    if i + 1 >= ladder.len() {
        return Err(Error::Argument(format!(
            "pair index {i} out of range for a {}-level ladder",
            ladder.len()
        )));
    }
    let beta_hi = ladder.betas()[i];
    let beta_lo = ladder.betas()[i + 1];
    let b = log_swap_ratio(model, beta_lo, beta_hi, &state.xs[i + 1], &state.xs[i])?;
    diag.pair_proposals[i] += 1;
    let accept = b >= 0.0 || rng.gen::<f64>().ln() < b;
    if accept {
        state.xs.swap(i, i + 1);
        diag.pair_accepts[i] += 1;
    }
    Ok(accept)
}

/// Default per-coordinate random-walk scale at level `beta` for a state in
/// the given region: 2.4 / sqrt(d) times the family's tempered length scale.
pub fn default_step_scale(model: &TargetModel, beta: f64, region: usize) -> Result<f64> {
    let r = &model.regions()[region];
    let scale = match &r.family {
        MarginalFamily::ExpPower { z, sigma } => sigma * beta.powf(-1.0 / f64::from(*z)),
        MarginalFamily::Tabulated(_) => model.samplers(beta)?[region].std_dev(),
    };
    Ok(2.4 * scale.min(r.half_width) / (model.dimension() as f64).sqrt())
}

/// A running chain: owns its state, its random source, and its diagnostics.
pub struct PtChain<'m, R: Rng> {
    model: &'m TargetModel,
    ladder: Ladder,
    within_moves: usize,
    state: LadderState,
    diag: SwapDiagnostics,
    step_scales: Vec<Vec<f64>>, // [level][region]
    rng: R,
}

impl<'m, R: Rng> PtChain<'m, R> {
    /// Initialize every level with an exact stationary draw, so the chain
    /// starts (and stays) in equilibrium.
    pub fn new(
        model: &'m TargetModel,
        ladder: Ladder,
        within_moves: usize,
        mut rng: R,
    ) -> Result<Self> {
        let xs = ladder
            .betas()
            .iter()
            .map(|&b| model.sample_stationary(b, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let diag = SwapDiagnostics::new(&ladder, model.n_regions());
        let step_scales = ladder
            .betas()
            .iter()
            .map(|&b| {
                (0..model.n_regions())
                    .map(|k| default_step_scale(model, b, k))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PtChain {
            model,
            ladder,
            within_moves,
            state: LadderState { xs },
            diag,
            step_scales,
            rng,
        })
    }

    pub fn state(&self) -> &LadderState {
        &self.state
    }

    pub fn diagnostics(&self) -> &SwapDiagnostics {
        &self.diag
    }

    /// Within-moves at every level, then one uniformly chosen adjacent swap.
    pub fn sweep(&mut self) -> Result<()> {
        for (level, &beta) in self.ladder.betas().iter().enumerate() {
            for _ in 0..self.within_moves {
                let k = self
                    .model
                    .region_of(&self.state.xs[level])?
                    .ok_or_else(|| {
                        Error::StateCorruption("chain state left every region".into())
                    })?;
                let scale = self.step_scales[level][k];
                let acc = rwm_step(
                    self.model,
                    beta,
                    &mut self.state.xs[level],
                    scale,
                    &mut self.rng,
                )?;
                self.diag.within_proposals[level] += 1;
                if acc {
                    self.diag.within_accepts[level] += 1;
                }
            }
        }
        let pair = self.rng.gen_range(0..self.ladder.n_pairs());
        swap_step(
            self.model,
            &self.ladder,
            &mut self.state,
            &mut self.diag,
            pair,
            &mut self.rng,
        )?;
        for (level, x) in self.state.xs.iter().enumerate() {
            if let Some(k) = self.model.region_of(x)? {
                self.diag.occupancy[level][k] += 1;
            }
        }
        self.diag.sweeps += 1;
        Ok(())
    }

    pub fn run(&mut self, n_sweeps: usize) -> Result<()> {
        for _ in 0..n_sweeps {
            self.sweep()?;
        }
        Ok(())
    }
}

/// Convenience driver: stationary initialization, `n_sweeps` sweeps with
/// `within_moves` random-walk updates per level per sweep.
pub fn run<R: Rng>(
    model: &TargetModel,
    ladder: Ladder,
    n_sweeps: usize,
    within_moves: usize,
    rng: R,
) -> Result<SwapDiagnostics> {
    let mut chain = PtChain::new(model, ladder, within_moves, rng)?;
    chain.run(n_sweeps)?;
    Ok(chain.diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marginals::MarginalFamily;
    use crate::target::Region;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn gauss() -> MarginalFamily {
        MarginalFamily::exp_power(2, 1.0).unwrap()
    }

    fn one_region_model(d: usize, h: f64) -> TargetModel {
        TargetModel::new(d, vec![Region::new(vec![0.0; d], h, 1.0, gauss())]).unwrap()
    }

    #[test]
    fn ladder_validation() {
        assert!(Ladder::new(vec![1.0, 0.5, 0.25]).is_ok());
        assert!(Ladder::new(vec![0.9, 0.5]).is_err());
        assert!(Ladder::new(vec![1.0]).is_err());
        assert!(Ladder::new(vec![1.0, 0.5, 0.5]).is_err());
        assert!(Ladder::new(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn swap_ratio_examples() {
        let m = one_region_model(1, 8.0);
        // identical arguments cancel
        assert_eq!(log_swap_ratio(&m, 0.5, 1.0, &[0.7], &[0.7]).unwrap(), 0.0);
        // equal temperatures rejected
        assert!(log_swap_ratio(&m, 0.5, 0.5, &[0.0], &[1.0]).is_err());
        // hand-checked value: lower state at the mode, upper state in the
        // tail, same region, so the log C terms cancel:
        // B = (1.0 - 0.5) * (logf(0) - logf(1)) = 0.5 * (0 - (-0.5)) = 0.25
        let b = log_swap_ratio(&m, 0.5, 1.0, &[0.0], &[1.0]).unwrap();
        assert!((b - 0.25).abs() < 1e-12, "B = {b}");
        // cross-check against four direct log-density evaluations
        let h = |beta: f64, x: &[f64]| m.log_density(beta, x).unwrap();
        let direct = (h(1.0, &[0.0]) - h(0.5, &[0.0])) - (h(1.0, &[1.0]) - h(0.5, &[1.0]));
        assert!((b - direct).abs() < 1e-12);
    }

    #[test]
    fn swap_ratio_antisymmetry() {
        let m = one_region_model(3, 8.0);
        let x = [0.3, -0.2, 1.4];
        let y = [-1.0, 0.8, 0.1];
        let b1 = log_swap_ratio(&m, 0.4, 0.9, &x, &y).unwrap();
        let b2 = log_swap_ratio(&m, 0.4, 0.9, &y, &x).unwrap();
        assert!((b1 + b2).abs() < 1e-12);
    }

    #[test]
    fn swap_ratio_rejects_out_of_region_states() {
        let m = one_region_model(1, 2.0);
        match log_swap_ratio(&m, 0.5, 1.0, &[5.0], &[0.0]) {
            Err(Error::StateCorruption(_)) => {}
            other => panic!("expected state corruption, got {other:?}"),
        }
    }

    #[test]
    fn swap_step_identical_states_always_accept() {
        let m = one_region_model(2, 8.0);
        let ladder = Ladder::new(vec![1.0, 0.5]).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let mut state = LadderState {
            xs: vec![vec![0.2, 0.2]; 2],
        };
        let mut diag = SwapDiagnostics::new(&ladder, 1);
        for _ in 0..50 {
            assert!(swap_step(&m, &ladder, &mut state, &mut diag, 0, &mut rng).unwrap());
        }
        assert_eq!(diag.pair_accepts[0], 50);
    }

    #[test]
    fn swap_step_bernoulli_rate_matches_ratio() {
        let m = one_region_model(1, 8.0);
        let ladder = Ladder::new(vec![1.0, 0.5]).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        // fixed configuration proposed repeatedly: acceptance must be
        // Bernoulli(min(1, e^B)). Mode point at the cold level makes B < 0.
        let xs = vec![vec![0.1], vec![1.4]];
        let b = log_swap_ratio(&m, 0.5, 1.0, &xs[1], &xs[0]).unwrap();
        let p = b.exp().min(1.0);
        assert!(p < 1.0);
        let n = 200_000;
        let mut acc = 0u64;
        for _ in 0..n {
            let mut state = LadderState { xs: xs.clone() };
            let mut diag = SwapDiagnostics::new(&ladder, 1);
            if swap_step(&m, &ladder, &mut state, &mut diag, 0, &mut rng).unwrap() {
                acc += 1;
                // accepted swap exchanges the two levels
                assert_eq!(state.xs[0], vec![1.4]);
                assert_eq!(state.xs[1], vec![0.1]);
            }
        }
        let rate = acc as f64 / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((rate - p).abs() < 4.0 * se, "rate {rate} vs p {p}");
    }

    #[test]
    fn swap_step_touches_only_the_chosen_pair() {
        let d = 4;
        let m = one_region_model(d, 8.0);
        let ladder = Ladder::new(vec![1.0, 0.7, 0.5, 0.3]).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let mut chain = PtChain::new(&m, ladder.clone(), 0, ChaCha12Rng::seed_from_u64(4)).unwrap();
        let before = chain.state.xs.clone();
        let mut diag = SwapDiagnostics::new(&ladder, 1);
        swap_step(&m, &ladder, &mut chain.state, &mut diag, 1, &mut rng).unwrap();
        for lvl in [0usize, 3] {
            assert_eq!(chain.state.xs[lvl], before[lvl], "level {lvl} must not move");
        }
        let moved: Vec<_> = chain.state.xs[1..3].to_vec();
        assert!(moved == before[1..3].to_vec() || (moved[0] == before[2] && moved[1] == before[1]));
    }

    #[test]
    fn esjd_identity_is_exact() {
        let m = one_region_model(2, 8.0);
        let ladder = Ladder::new(vec![1.0, 0.8, 0.55]).unwrap();
        let mut chain =
            PtChain::new(&m, ladder, 1, ChaCha12Rng::seed_from_u64(9)).unwrap();
        chain.run(2_000).unwrap();
        let diag = chain.diagnostics();
        for i in 0..2 {
            let (lo, hi) = diag.pair_beta[i];
            let db = hi - lo;
            assert_eq!(diag.esjd_sum(i), diag.pair_accepts[i] as f64 * db * db);
        }
        assert_eq!(diag.sweeps, 2_000);
        assert_eq!(
            diag.pair_proposals.iter().sum::<u64>(),
            2_000
        );
    }

    #[test]
    fn rwm_rejects_out_of_support_proposals() {
        // tiny support: most proposals leave it and must be rejected in place
        let m = one_region_model(1, 0.05);
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let mut x = vec![0.0];
        let mut any_reject = false;
        for _ in 0..200 {
            let before = x.clone();
            let acc = rwm_step(&m, 1.0, &mut x, 5.0, &mut rng).unwrap();
            if !acc {
                assert_eq!(x, before);
                any_reject = true;
            } else {
                assert!(x[0].abs() < 0.05);
            }
        }
        assert!(any_reject);
    }

    #[test]
    fn rwm_small_steps_accept_almost_always() {
        let m = one_region_model(1, 8.0);
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        let mut x = vec![0.3];
        let mut acc = 0;
        for _ in 0..2_000 {
            if rwm_step(&m, 1.0, &mut x, 1e-5, &mut rng).unwrap() {
                acc += 1;
            }
        }
        assert!(acc >= 1_995, "acceptance {acc}/2000 at vanishing step");
    }

    #[test]
    fn rwm_long_run_variance_matches_target() {
        // K=1, d=1, gaussian, beta=1, step 2.4: variance ~ 1.0
        let m = one_region_model(1, 8.0);
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        let mut x = vec![0.0];
        let n = 400_000;
        let mut acc = 0.0;
        let mut acc2 = 0.0;
        for _ in 0..n {
            rwm_step(&m, 1.0, &mut x, 2.4, &mut rng).unwrap();
            acc += x[0];
            acc2 += x[0] * x[0];
        }
        let mean = acc / n as f64;
        let var = acc2 / n as f64 - mean * mean;
        // autocorrelated chain: loose 2% band
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn zero_sweeps_gives_zero_counts() {
        let m = one_region_model(2, 8.0);
        let ladder = Ladder::new(vec![1.0, 0.6]).unwrap();
        let diag = run(&m, ladder, 0, 2, ChaCha12Rng::seed_from_u64(0)).unwrap();
        assert_eq!(diag.sweeps, 0);
        assert_eq!(diag.pair_proposals, vec![0]);
        assert_eq!(diag.pair_accepts, vec![0]);
        assert_eq!(diag.within_proposals, vec![0, 0]);
        assert_eq!(diag.esjd_sum(0), 0.0);
    }

    // Detailed-balance smoke test: with exact stationary starts, region
    // occupancy at every level stays multinomial(w) after any number of
    // sweeps. Uses many independent short chains so the chi-square has
    // clean iid counts.
    #[test]
    fn detailed_balance_occupancy_chi_square() {
        let d = 2;
        // adjacent cubes so within-moves can cross regions
        let m = TargetModel::new(
            d,
            vec![
                Region::new(vec![0.0; d], 2.0, 0.4, gauss()),
                Region::new(vec![4.0; d], 2.0, 0.6, gauss()),
            ],
        )
        .unwrap();
        let ladder = Ladder::new(vec![1.0, 0.5]).unwrap();
        let n_chains = 1_500;
        let sweeps = 15;
        let mut counts = [[0u64; 2]; 2]; // [level][region]
        for c in 0..n_chains {
            let mut chain =
                PtChain::new(&m, ladder.clone(), 1, ChaCha12Rng::seed_from_u64(1000 + c)).unwrap();
            chain.run(sweeps).unwrap();
            for level in 0..2 {
                let k = m.region_of(&chain.state().xs[level]).unwrap().unwrap();
                counts[level][k] += 1;
            }
        }
        // chi-square at level 1e-3, dof 1: critical value 10.828
        for level in 0..2 {
            let n = n_chains as f64;
            let mut stat = 0.0;
            for (k, &w) in [0.4, 0.6].iter().enumerate() {
                let e = n * w;
                let o = counts[level][k] as f64;
                stat += (o - e) * (o - e) / e;
            }
            assert!(stat < 10.828, "level {level}: chi2 = {stat}");
        }
    }
}
