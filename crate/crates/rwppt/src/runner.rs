//! Config-driven experiment execution behind the command-line interface.
//!
//! Each subcommand reads its section of the experiment config, computes,
//! and writes one output file with a fixed column schema. Files are
//! written atomically (temp file + rename) so a failed run never leaves a
//! partial output behind. Serialization policy: theory-derived values at
//! 12 significant digits, Monte Carlo values as shortest round-trip floats;
//! both make reruns byte-identical.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::config::{linear_grid, ExperimentConfig};
use crate::error::{Error, Result};
use crate::{empirical, pt, schedule, theory};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    TheoryCurve,
    Optimize,
    Ladder,
    Simulate,
    Convergence,
    Figure,
}

impl Subcommand {
    pub fn output_name(self) -> &'static str {
        match self {
            Subcommand::TheoryCurve => "theory_curve.csv",
            Subcommand::Optimize => "optimize.json",
            Subcommand::Ladder => "ladder.csv",
            Subcommand::Simulate => "simulate.csv",
            Subcommand::Convergence => "convergence.csv",
            Subcommand::Figure => "figure.csv",
        }
    }
}

/// 12 significant digits, for theory-derived quantities.
fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

/// Shortest round-trip representation, for Monte Carlo quantities.
fn roundtrip(x: f64) -> String {
    format!("{x}")
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let res = std::fs::write(&tmp, contents)
        .and_then(|()| std::fs::rename(&tmp, path));
    if res.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    res.map_err(Error::from)
}

fn section<'a, T>(opt: &'a Option<T>, name: &str) -> Result<&'a T> {
    opt.as_ref()
        .ok_or_else(|| Error::Config(format!("this subcommand needs a [{name}] section")))
}

/// Execute one subcommand, writing its output under `out_dir`.
/// Returns the path written.
pub fn run_subcommand(
    cmd: Subcommand,
    cfg: &ExperimentConfig,
    out_dir: &Path,
    threads: usize,
) -> Result<PathBuf> {
    std::fs::create_dir_all(out_dir)?;
    let out_path = out_dir.join(cmd.output_name());
    let contents = match cmd {
        Subcommand::TheoryCurve => theory_curve_csv(cfg)?,
        Subcommand::Optimize => optimize_json(cfg)?,
        Subcommand::Ladder => ladder_csv(cfg)?,
        Subcommand::Simulate => simulate_csv(cfg)?,
        Subcommand::Convergence => convergence_csv(cfg, threads)?,
        Subcommand::Figure => figure_csv(cfg)?,
    };
    write_atomic(&out_path, &contents)?;
    Ok(out_path)
}

fn theory_curve_csv(cfg: &ExperimentConfig) -> Result<String> {
    let tc = section(&cfg.theory_curve, "theory_curve")?;
    let model = cfg.build_model()?;
    let ells = linear_grid(tc.ell_start, tc.ell_stop, tc.ell_points)?;
    let curve = theory::efficiency_curve(&model, tc.beta, &ells)?;
    let mut out = String::from("ell,E_ell,a_ell\n");
    for (ell, e, a) in &curve.points {
        writeln!(out, "{},{},{}", sig12(*ell), sig12(*e), sig12(*a)).unwrap();
    }
    Ok(out)
}

fn optimize_json(cfg: &ExperimentConfig) -> Result<String> {
    let oc = section(&cfg.optimize, "optimize")?;
    let model = cfg.build_model()?;
    let (ell_hat, a_hat) = theory::optimize_ell(&model, oc.beta)?;
    let sigma = theory::sigma_matrix(&model, oc.beta)?;
    let doc = serde_json::json!({
        "ell_hat": ell_hat,
        "a_hat": a_hat,
        "sigma": sigma,
    });
    Ok(format!("{}\n", serde_json::to_string_pretty(&doc).unwrap()))
}

fn ladder_csv(cfg: &ExperimentConfig) -> Result<String> {
    let lc = section(&cfg.ladder, "ladder")?;
    let model = cfg.build_model()?;
    let d = model.dimension();
    let plan = match lc.kind.as_str() {
        "geometric" => schedule::geometric_ladder(&model, lc.beta_min, d)?,
        "optimal" => schedule::optimal_ladder(&model, lc.beta_min, d)?,
        other => {
            return Err(Error::Config(format!(
                "ladder kind must be \"geometric\" or \"optimal\", got \"{other}\""
            )))
        }
    };
    let mut out = String::from("index,beta,ell_used,predicted_acceptance\n");
    let betas = plan.ladder.betas();
    for (i, &beta) in betas.iter().enumerate() {
        // pair columns sit on the warmer rung of each pair; the coldest
        // rung has no outgoing pair and leaves them empty
        if i < plan.pairs.len() {
            let p = &plan.pairs[i];
            writeln!(
                out,
                "{i},{},{},{}",
                sig12(beta),
                sig12(p.ell_used),
                sig12(p.predicted_acceptance)
            )
            .unwrap();
        } else {
            writeln!(out, "{i},{},,", sig12(beta)).unwrap();
        }
    }
    Ok(out)
}

fn simulate_csv(cfg: &ExperimentConfig) -> Result<String> {
    let sc = section(&cfg.simulate, "simulate")?;
    let model = cfg.build_model()?;
    let ladder = pt::Ladder::new(sc.betas.clone())?;
    let rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let diag = pt::run(&model, ladder, sc.n_sweeps, sc.within_moves_per_sweep, rng)?;
    let mut out = String::from("pair_index,beta_lo,beta_hi,proposals,accepts,acc_rate,esjd\n");
    for i in 0..diag.pair_beta.len() {
        let (lo, hi) = diag.pair_beta[i];
        writeln!(
            out,
            "{i},{},{},{},{},{},{}",
            sig12(lo),
            sig12(hi),
            diag.pair_proposals[i],
            diag.pair_accepts[i],
            roundtrip(diag.acceptance_rate(i)),
            roundtrip(diag.esjd(i)),
        )
        .unwrap();
    }
    Ok(out)
}

fn convergence_csv(cfg: &ExperimentConfig, threads: usize) -> Result<String> {
    let cc = section(&cfg.convergence, "convergence")?;
    let spec = cfg.model_spec()?;
    let table = empirical::convergence_study(
        &spec,
        cc.beta,
        cc.ell,
        &cc.d_list,
        cc.n_samples,
        cfg.seed,
        threads,
    )?;
    let mut out = String::from("d,a_emp,stderr,a_limit,gap\n");
    for r in &table.rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.d,
            roundtrip(r.a_emp),
            roundtrip(r.stderr),
            sig12(r.a_limit),
            roundtrip(r.gap),
        )
        .unwrap();
    }
    Ok(out)
}

fn figure_csv(cfg: &ExperimentConfig) -> Result<String> {
    let fc = section(&cfg.figure, "figure")?;
    let grid = linear_grid(fc.m_start, fc.m_stop, fc.m_points)?;
    let mut out = String::from("m,value\n");
    for (m, v) in theory::figure_curve(&grid) {
        writeln!(out, "{},{}", sig12(m), sig12(v)).unwrap();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CFG: &str = r#"
seed = 7

[model]
dimension = 2

[[model.regions]]
offset = 0.0
half_width = 8.0
weight = 1.0
family = { kind = "exp_power", z = 2, sigma = 1.0 }

[theory_curve]
beta = 1.0
ell_start = 0.0
ell_stop = 4.0
ell_points = 5

[figure]
m_start = 1.0
m_stop = 2.0
m_points = 3
"#;

    #[test]
    fn theory_curve_rows() {
        let cfg = ExperimentConfig::from_str(CFG).unwrap();
        let csv = theory_curve_csv(&cfg).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "ell,E_ell,a_ell");
        assert_eq!(lines.len(), 6);
        // ell = 0 row: E = 0, a = 1
        let first: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(first[0].parse::<f64>().unwrap(), 0.0);
        assert_eq!(first[1].parse::<f64>().unwrap(), 0.0);
        assert_eq!(first[2].parse::<f64>().unwrap(), 1.0);
        // ell = 2 row: E ~ 8 Phi(-1)
        let row2: Vec<&str> = lines[3].split(',').collect();
        assert!((row2[1].parse::<f64>().unwrap() - 1.2692420314516564).abs() < 1e-6);
    }

    #[test]
    fn byte_identical_reruns() {
        let cfg = ExperimentConfig::from_str(CFG).unwrap();
        assert_eq!(theory_curve_csv(&cfg).unwrap(), theory_curve_csv(&cfg).unwrap());
        assert_eq!(figure_csv(&cfg).unwrap(), figure_csv(&cfg).unwrap());
    }

    #[test]
    fn missing_section_is_config_error() {
        let cfg = ExperimentConfig::from_str(CFG).unwrap();
        assert!(matches!(ladder_csv(&cfg), Err(Error::Config(_))));
        assert!(matches!(optimize_json(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn atomic_write_leaves_no_partials() {
        let dir = std::env::temp_dir().join(format!("rwppt_runner_test_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let cfg = ExperimentConfig::from_str(CFG).unwrap();
        let p = run_subcommand(Subcommand::Figure, &cfg, &dir, 1).unwrap();
        assert!(p.exists());
        assert!(!p.with_extension("tmp").exists());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
