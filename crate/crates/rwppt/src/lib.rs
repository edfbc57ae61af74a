//! Regionally weight-preserving parallel tempering, with the limiting
//! theory for choosing its temperature spacings.
//!
//! Power-tempering a multimodal density usually shifts probability mass
//! between modes as the inverse temperature changes. The targets built
//! here avoid that: the state space is a disjoint union of hypercube
//! regions and the tempered density is rescaled per region so each keeps
//! its weight at every temperature. For such targets this crate provides
//!
//! - exact evaluation and exact stationary sampling of the tempered
//!   target at any inverse temperature ([`target`]),
//! - the tempering chain itself: within-temperature random-walk moves and
//!   adjacent-level swap moves with diagnostics ([`pt`]),
//! - the dimension-limit of the swap behaviour: the efficiency curve
//!   E(ell), its maximizer, and the induced acceptance rate, which never
//!   exceeds 0.234 ([`theory`]),
//! - Monte Carlo estimators at finite dimension to check those limits
//!   ([`empirical`]),
//! - ladder builders that space temperatures optimally, geometrically so
//!   for exponential-power marginals ([`schedule`]).
//!
//! ```
//! use rwppt::marginals::MarginalFamily;
//! use rwppt::target::{Region, TargetModel};
//!
//! // two Gaussian cubes, well separated, holding 40% and 60% of the mass
//! let gauss = MarginalFamily::exp_power(2, 1.0).unwrap();
//! let model = TargetModel::new(
//!     2,
//!     vec![
//!         Region::new(vec![0.0, 0.0], 8.0, 0.4, gauss.clone()),
//!         Region::new(vec![20.0, 20.0], 8.0, 0.6, gauss),
//!     ],
//! )
//! .unwrap();
//!
//! // optimal spacing and its acceptance rate at beta = 1
//! let (ell_hat, a_hat) = rwppt::theory::optimize_ell(&model, 1.0).unwrap();
//! assert!((a_hat - 0.2338).abs() < 1e-3);
//! assert!(ell_hat > 0.0);
//! ```
//!
//! The `rwppt` binary drives the same machinery from a TOML experiment
//! config; see the crate README and `examples/`.

pub mod config;
pub mod empirical;
pub mod error;
mod interp;
pub mod marginals;
pub mod normal;
pub mod pt;
pub mod quadrature;
pub mod runner;
pub mod schedule;
pub mod target;
pub mod theory;

pub use error::{Error, Result};
pub use marginals::{cumulants, MarginalFamily, TemperedCumulants, TemperedSampler};
pub use pt::{Ladder, LadderState, PtChain, SwapDiagnostics};
pub use schedule::{LadderPlan, PairPlan};
pub use target::{ModelSpec, Region, RegionSpec, TargetModel};
pub use theory::{EfficiencyCurve, MixtureLimitLaw};
