//! Batch experiment orchestration behind the `ssep` binary.
//!
//! Every subcommand resolves its config, fans replicates out over a worker
//! pool, reduces them in replicate order (so the worker count never changes
//! an output byte), writes versioned CSV artifacts plus the resolved config
//! next to them, and returns its asserted checks. Replicate `i` of a run
//! always draws from stream `i` of the run's master seed; multi-run
//! subcommands derive per-run master seeds with the same SplitMix64 mixer the
//! streams use.

use std::path::PathBuf;

use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::decomp::{decompose_path, exp_martingale_check, ExactResolvent};
use crate::engine::{sample_events, sample_nu_p, Configuration, DualTracer};
use crate::error::{Error, Result};
use crate::observable::{BoundFunction, LocalFunction, XiRecord};
use crate::oracle::{build_ssep_generator, build_stirring_generator, semigroup_apply};
use crate::rng::RngStream;
use crate::stats::{
    clt_test, estimate_sigma_duality, required_cutoff, tail_rate, DualityGrid, EstimateCI,
};
use crate::stirring::heat_kernel_mc;
use crate::tree::{build_ball_capped, Ball, VertexAddr};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Simulate,
    Sigma,
    Clt,
    Mdp,
    Decompose,
    Verify,
    Heat,
}

impl Subcommand {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "simulate" => Subcommand::Simulate,
            "sigma" => Subcommand::Sigma,
            "clt" => Subcommand::Clt,
            "mdp" => Subcommand::Mdp,
            "decompose" => Subcommand::Decompose,
            "verify" => Subcommand::Verify,
            "heat" => Subcommand::Heat,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Subcommand::Simulate => "simulate",
            Subcommand::Sigma => "sigma",
            Subcommand::Clt => "clt",
            Subcommand::Mdp => "mdp",
            Subcommand::Decompose => "decompose",
            Subcommand::Verify => "verify",
            Subcommand::Heat => "heat",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Default)]
pub struct RunReport {
    pub checks: Vec<CheckOutcome>,
    pub notes: Vec<String>,
    pub artifacts: Vec<PathBuf>,
}

impl RunReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(CheckOutcome { name: name.to_string(), passed, detail });
    }

    fn note(&mut self, line: String) {
        self.notes.push(line);
    }
}

/// Derives a per-run master seed; the same mixer that expands stream keys.
pub fn mix_seed(base: u64, salt: u64) -> u64 {
    let mut z = base ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn run(sub: Subcommand, cfg: &ExperimentConfig) -> Result<RunReport> {
    let mut report = RunReport::default();
    std::fs::create_dir_all(&cfg.out_dir)?;
    write_text(
        cfg,
        &mut report,
        &format!("{}.resolved.cfg", sub.name()),
        &format!("# resolved config for `{}`\n{}", sub.name(), cfg.to_config_string()),
    )?;
    match sub {
        Subcommand::Simulate => run_simulate(cfg, &mut report)?,
        Subcommand::Sigma => run_sigma(cfg, &mut report)?,
        Subcommand::Clt => run_clt(cfg, &mut report)?,
        Subcommand::Mdp => run_mdp(cfg, &mut report)?,
        Subcommand::Decompose => run_decompose(cfg, &mut report)?,
        Subcommand::Verify => run_verify(cfg, &mut report)?,
        Subcommand::Heat => run_heat(cfg, &mut report)?,
    }
    Ok(report)
}

fn write_text(
    cfg: &ExperimentConfig,
    report: &mut RunReport,
    name: &str,
    contents: &str,
) -> Result<PathBuf> {
    let path = cfg.out_dir.join(name);
    std::fs::write(&path, contents)?;
    report.artifacts.push(path.clone());
    Ok(path)
}

fn thread_pool(cfg: &ExperimentConfig) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::SolverFailure(format!("worker pool: {e}")))
}

fn build_config_ball(cfg: &ExperimentConfig, f: &LocalFunction) -> Result<Ball> {
    let radius = cfg.resolve_radius(f);
    build_ball_capped(cfg.d, radius, cfg.caps.vertices)
}

/// Replicated xi sampling at each checkpoint; outer Vec indexed by replicate.
fn sample_xi_matrix(
    ball: &Ball,
    bound: &BoundFunction,
    p: f64,
    checkpoints: &[f64],
    reps: u64,
    master: u64,
    pool: &rayon::ThreadPool,
) -> Vec<Vec<f64>> {
    pool.install(|| {
        (0..reps)
            .into_par_iter()
            .map(|i| {
                let mut rng = RngStream::new(master, i);
                let eta0 = sample_nu_p(ball, p, &mut rng).expect("validated density");
                crate::observable::sample_xi_path(ball, &eta0, bound, checkpoints, &mut rng)
            })
            .collect()
    })
}

fn xi_records_at(matrix: &[Vec<f64>], cp: usize, t: f64, master: u64) -> Vec<XiRecord> {
    matrix
        .iter()
        .enumerate()
        .map(|(i, row)| XiRecord { path_id: i as u64, t, xi: row[cp], seed: (master, i as u64) })
        .collect()
}

fn run_simulate(cfg: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    let f = cfg.resolve_function()?;
    let ball = build_config_ball(cfg, &f)?;
    let bound = f.bind(&ball)?;
    let pool = thread_pool(cfg)?;
    let matrix =
        sample_xi_matrix(&ball, &bound, cfg.p, &cfg.t_grid, cfg.replicates, cfg.seed, &pool);
    let mut csv = String::from("# schema: xi v1\n");
    csv.push_str(XiRecord::csv_header());
    csv.push('\n');
    for (i, row) in matrix.iter().enumerate() {
        for (k, &t) in cfg.t_grid.iter().enumerate() {
            let rec = XiRecord { path_id: i as u64, t, xi: row[k], seed: (cfg.seed, i as u64) };
            csv.push_str(&rec.to_csv_row());
            csv.push('\n');
        }
    }
    write_text(cfg, report, "xi.csv", &csv)?;
    report.note(format!(
        "simulated {} paths on ball(d={}, R={}) at {} checkpoint(s)",
        cfg.replicates,
        cfg.d,
        ball.radius(),
        cfg.t_grid.len()
    ));
    Ok(())
}

fn run_sigma(cfg: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    let f = cfg.resolve_function()?;
    f.assert_centered(cfg.p)?;
    let ball = build_config_ball(cfg, &f)?;
    let bound = f.bind(&ball)?;
    let pool = thread_pool(cfg)?;
    let t = *cfg.t_grid.last().unwrap();
    let matrix = sample_xi_matrix(&ball, &bound, cfg.p, &[t], cfg.replicates, cfg.seed, &pool);
    let records = xi_records_at(&matrix, 0, t, cfg.seed);
    let empirical = crate::stats::estimate_sigma_empirical(&records)?;

    let needed = required_cutoff(&f, cfg.d, cfg.cutoff_tol);
    let grid = DualityGrid::adaptive(needed + 1.0, 0.05, 1.06);
    let dual_master = mix_seed(cfg.seed, 0xD0A1);
    let duality = estimate_sigma_duality(
        &f,
        cfg.p,
        cfg.d,
        &grid,
        cfg.cutoff_tol,
        cfg.duality_reps,
        dual_master,
    )?;

    let mut csv = String::from("# schema: sigma v1\n");
    csv.push_str(EstimateCI::csv_header());
    csv.push('\n');
    let params = format!("d={};p={};R={};t={}", cfg.d, cfg.p, ball.radius(), t);
    csv.push_str(&empirical.to_csv_row(&params));
    csv.push('\n');
    let dual_params = format!("d={};p={};cutoff={}", cfg.d, cfg.p, grid.cutoff());
    csv.push_str(&duality.to_csv_row(&dual_params));
    csv.push('\n');
    if let Ok(oracle) = cfg.resolve_sigma_sq(&f) {
        csv.push_str(&format!("sigma_oracle,{oracle},0,0,d={};p={}\n", cfg.d, cfg.p));
        report.note(format!(
            "oracle {:.6}: empirical off by {:+.2}%, duality off by {:+.2}%",
            oracle,
            100.0 * (empirical.value - oracle) / oracle,
            100.0 * (duality.value - oracle) / oracle,
        ));
    }
    write_text(cfg, report, "sigma.csv", &csv)?;

    let gap = (empirical.value - duality.value).abs();
    let band = 3.0
        * (empirical.std_error.powi(2) + duality.std_error.powi(2)).sqrt()
        + cfg.cutoff_tol;
    report.check(
        "sigma_estimators_agree",
        gap <= band,
        format!(
            "empirical {:.6}+-{:.6} vs duality {:.6}+-{:.6} (gap {:.6}, band {:.6})",
            empirical.value, empirical.std_error, duality.value, duality.std_error, gap, band
        ),
    );
    Ok(())
}

fn run_clt(cfg: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    let f = cfg.resolve_function()?;
    f.assert_centered(cfg.p)?;
    let sigma_sq = cfg.resolve_sigma_sq(&f)?;
    let ball = build_config_ball(cfg, &f)?;
    let bound = f.bind(&ball)?;
    let pool = thread_pool(cfg)?;
    let t = *cfg.t_grid.last().unwrap();
    let n = cfg.big_n as f64;
    let horizon = t * n;

    let mut csv = String::from("# schema: clt v1\nrun,ks_stat,p_value,reps\n");
    let mut passes = 0u32;
    for run in 0..cfg.clt_runs {
        let master = mix_seed(cfg.seed, run as u64);
        let matrix = sample_xi_matrix(&ball, &bound, cfg.p, &[horizon], cfg.replicates, master, &pool);
        let samples: Vec<f64> = matrix.iter().map(|row| row[0] / n.sqrt()).collect();
        let (d_stat, p_value) = clt_test(&samples, sigma_sq.sqrt(), t)?;
        if p_value > 0.01 {
            passes += 1;
        }
        csv.push_str(&format!("{run},{d_stat},{p_value},{}\n", cfg.replicates));
    }
    write_text(cfg, report, "clt.csv", &csv)?;
    report.note(format!(
        "{} of {} runs with KS p-value > 0.01 (N={}, t={}, sigma^2={:.6})",
        passes, cfg.clt_runs, cfg.big_n, t, sigma_sq
    ));
    if cfg.clt_runs >= 10 {
        let required = (0.9 * cfg.clt_runs as f64).ceil() as u32;
        report.check(
            "clt_runs_pass_rate",
            passes >= required,
            format!("{passes}/{} runs passed (need >= {required})", cfg.clt_runs),
        );
    }
    Ok(())
}

fn run_mdp(cfg: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    let f = cfg.resolve_function()?;
    f.assert_centered(cfg.p)?;
    let sigma_sq = cfg.resolve_sigma_sq(&f)?;
    let ball = build_config_ball(cfg, &f)?;
    let bound = f.bind(&ball)?;
    let pool = thread_pool(cfg)?;

    let mut csv = String::from("# schema: mdp v1\nt,a_t,u,tail_hits,reps,empirical,theoretical,gap\n");
    for (k, &t) in cfg.t_grid.iter().enumerate() {
        let reps = cfg
            .replicates_per_t
            .as_ref()
            .map(|rp| rp[k])
            .unwrap_or(cfg.replicates);
        let master = mix_seed(cfg.seed, 0xF00D + k as u64);
        let matrix = sample_xi_matrix(&ball, &bound, cfg.p, &[t], reps, master, &pool);
        let records = xi_records_at(&matrix, 0, t, master);
        let a_t = t.powf(cfg.gamma);
        let (points, dropped) = tail_rate(&records, a_t, &cfg.u_grid, sigma_sq)?;
        for pt in &points {
            csv.push_str(&format!(
                "{t},{a_t},{},{},{reps},{},{},{}\n",
                pt.u,
                pt.tail_hits,
                pt.empirical,
                pt.theoretical,
                pt.gap()
            ));
        }
        for u in dropped {
            report.note(format!("warning: t={t} u={u}: no tail hits in {reps} paths; point dropped"));
        }
    }
    write_text(cfg, report, "mdp.csv", &csv)?;
    report.note("tail rates are diagnostic; asymptotic agreement is not asserted".into());
    Ok(())
}

fn run_decompose(cfg: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    let f = cfg.resolve_function()?;
    let ball = build_config_ball(cfg, &f)?;
    let pool = thread_pool(cfg)?;
    let t = *cfg.t_grid.last().unwrap();
    let lambda = cfg.resolve_lambda(t, false);
    let provider = ExactResolvent::with_caps(
        &ball,
        &f,
        lambda,
        cfg.caps.config_states,
        cfg.caps.tuple_states,
    )?;

    let records: Vec<crate::decomp::DecompositionRecord> = pool.install(|| {
        (0..cfg.replicates)
            .into_par_iter()
            .map(|i| {
                let mut rng = RngStream::new(cfg.seed, i);
                let eta0 = sample_nu_p(&ball, cfg.p, &mut rng).expect("validated density");
                let log = sample_events(&ball, t, &mut rng).expect("positive horizon");
                let mut rec = decompose_path(&ball, &eta0, &log, &f, t, &provider)
                    .expect("in-range decomposition");
                rec.path_id = i;
                rec
            })
            .collect()
    });

    let mut csv = String::from("# schema: decomposition v1\n");
    csv.push_str(crate::decomp::DecompositionRecord::csv_header());
    csv.push('\n');
    for rec in &records {
        csv.push_str(&rec.to_csv_row());
        csv.push('\n');
    }
    write_text(cfg, report, "decomposition.csv", &csv)?;

    let worst = records.iter().map(|r| r.residual.abs()).fold(0.0, f64::max);
    report.check(
        "decomposition_residual",
        worst < 1e-8,
        format!("max |xi - M + remainder| = {worst:.3e} over {} paths (t={t}, lambda={lambda})", records.len()),
    );

    // Exponential-martingale summary for the configured c values.
    if f.assert_centered(cfg.p).is_ok() {
        let a_t = t.powf(cfg.gamma);
        let reps = cfg.replicates.min(20_000);
        for &c in &cfg.c_grid {
            let master = mix_seed(cfg.seed, c.to_bits());
            match exp_martingale_check(&ball, &f, cfg.p, c, t, a_t, reps, master) {
                Ok((mean, se)) => report.note(format!(
                    "exponential martingale c={c}: mean {mean:.5} +- {se:.5} ({reps} paths)"
                )),
                Err(e) => report.note(format!("exponential martingale c={c}: {e}")),
            }
        }
    }
    Ok(())
}

fn run_verify(cfg: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    // Hermetic: fixed instances and seeds, no wall-clock or network use.
    let ball1 = build_ball_capped(2, 1, cfg.caps.vertices)?;
    let ball2 = build_ball_capped(2, 2, cfg.caps.vertices)?;
    let root = VertexAddr::root();
    let occ = LocalFunction::occupation(root.clone(), 0.5)?;

    // Resolvent identity, exhaustive on the star.
    let configs1 = crate::decomp::exhaustive_configurations(&ball1)?;
    let mut worst = 0.0f64;
    for &lambda in &[0.5, 1.0] {
        worst = worst.max(crate::decomp::verify_generator_identity(&ball1, &occ, lambda, &configs1)?);
    }
    report.check(
        "resolvent_identity_star",
        worst < 1e-10,
        format!("max |LG - lambda G + F| = {worst:.3e} over 16 configs, lambda in {{0.5, 1}}"),
    );

    // Resolvent identity, pair observable on the radius-2 ball.
    let pair = LocalFunction::centered_pair_product(
        root.clone(),
        VertexAddr::new(vec![0], 2)?,
        0.5,
    )?;
    let mut rng = RngStream::new(mix_seed(cfg.seed, 1), 0);
    let etas: Vec<Configuration> =
        (0..100).map(|_| sample_nu_p(&ball2, 0.5, &mut rng).unwrap()).collect();
    let worst = crate::decomp::verify_generator_identity(&ball2, &pair, 0.5, &etas)?;
    report.check(
        "resolvent_identity_pair",
        worst < 1e-10,
        format!("max residual {worst:.3e} over 100 random configs (m=2, lambda=0.5)"),
    );

    // Pathwise decomposition.
    let provider = ExactResolvent::new(&ball1, &occ, 1.0)?;
    let mut worst = 0.0f64;
    for i in 0..100u64 {
        let mut rng = RngStream::new(mix_seed(cfg.seed, 2), i);
        let eta0 = sample_nu_p(&ball1, 0.5, &mut rng)?;
        let log = sample_events(&ball1, 5.0, &mut rng)?;
        let rec = decompose_path(&ball1, &eta0, &log, &occ, 5.0, &provider)?;
        worst = worst.max(rec.residual.abs());
    }
    report.check(
        "pathwise_decomposition",
        worst < 1e-8,
        format!("max |residual| = {worst:.3e} over 100 paths at t=5"),
    );

    // Pathwise duality, bit for bit.
    let mut exact = true;
    for i in 0..30u64 {
        let mut rng = RngStream::new(mix_seed(cfg.seed, 3), i);
        let log = sample_events(&ball2, 2.0, &mut rng)?;
        let eta0 = sample_nu_p(&ball2, 0.5, &mut rng)?;
        let eta_t = crate::engine::evolve(&ball2, &eta0, &log, 2.0)?;
        let tracer = DualTracer::new(&ball2, &log);
        for x in 0..ball2.vertex_count() as u32 {
            if eta_t.get(x) != eta0.get(tracer.trace_idx(x, 2.0, 2.0)?) {
                exact = false;
            }
        }
    }
    report.check(
        "pathwise_duality",
        exact,
        "evolve vs backward trace on 30 logs x 10 vertices, bit-exact".into(),
    );

    // Duality in expectation: exclusion semigroup vs single-walk kernel.
    let ssep = build_ssep_generator(&ball1)?;
    let (_, walk) = build_stirring_generator(&ball1, 1)?;
    let mut worst = 0.0f64;
    for mask in 0..16u64 {
        let eta0 = Configuration::from_mask(&ball1, mask);
        for &t in &[0.3, 1.0] {
            let mut delta = vec![0.0; 16];
            delta[mask as usize] = 1.0;
            let dist = semigroup_apply(&ssep, &delta, t)?;
            for x in 0..4u32 {
                let lhs: f64 = dist
                    .iter()
                    .enumerate()
                    .map(|(s, &w)| w * ((s >> x) & 1) as f64)
                    .sum();
                let mut dx = vec![0.0; 4];
                dx[x as usize] = 1.0;
                let kern = semigroup_apply(&walk, &dx, t)?;
                let rhs: f64 =
                    kern.iter().enumerate().map(|(y, &q)| q * eta0.get(y as u32) as f64).sum();
                worst = worst.max((lhs - rhs).abs());
            }
        }
    }
    report.check(
        "semigroup_duality",
        worst < 1e-8,
        format!("max |E eta_t(x) - sum_y Q_t(x,y) eta_0(y)| = {worst:.3e} over 16 states x 2 times"),
    );

    // Resolvent normalization on assorted instances.
    let mut worst = 0.0f64;
    for (d, r, m, lambda) in [(2u8, 2u32, 1usize, 0.6), (2, 1, 2, 1.1), (3, 1, 1, 0.35)] {
        let ball = build_ball_capped(d, r, cfg.caps.vertices)?;
        let (space, gen) = build_stirring_generator(&ball, m)?;
        let beta = crate::oracle::resolvent_solve(&gen, lambda, space.len() - 1)?;
        let total: f64 = beta.iter().sum();
        worst = worst.max((lambda * total - 1.0).abs());
    }
    report.check(
        "resolvent_normalization",
        worst < 1e-10,
        format!("max |lambda sum(beta) - 1| = {worst:.3e}"),
    );

    // Uniformization keeps probability vectors stochastic.
    let mut delta = vec![0.0; 16];
    delta[5] = 1.0;
    let w = semigroup_apply(&ssep, &delta, 2.5)?;
    let defect = (w.iter().sum::<f64>() - 1.0).abs();
    report.check(
        "uniformization_stochastic",
        defect < 1e-10 && w.iter().all(|&x| x >= -1e-14),
        format!("probability defect {defect:.3e}"),
    );

    // Martingale nullity, quick statistical pass.
    let provider2 = ExactResolvent::new(&ball2, &occ, 1.0)?;
    let reps = 2000u64;
    let (mut sum, mut sumsq) = (0.0, 0.0);
    for i in 0..reps {
        let mut rng = RngStream::new(mix_seed(cfg.seed, 4), i);
        let eta0 = sample_nu_p(&ball2, 0.5, &mut rng)?;
        let log = sample_events(&ball2, 3.0, &mut rng)?;
        let rec = decompose_path(&ball2, &eta0, &log, &occ, 3.0, &provider2)?;
        sum += rec.martingale;
        sumsq += rec.martingale * rec.martingale;
    }
    let mean = sum / reps as f64;
    let se = ((sumsq / reps as f64 - mean * mean).max(0.0) / reps as f64).sqrt();
    report.check(
        "martingale_mean_zero",
        mean.abs() <= 3.0 * se,
        format!("mean(M_t) = {mean:.5} vs 3 SE = {:.5} ({reps} paths)", 3.0 * se),
    );
    Ok(())
}

fn run_heat(cfg: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    let root = VertexAddr::root();
    let mut csv = String::from("# schema: heat v1\nd,u,estimate,std_error,bound\n");
    let mut all_ok = true;
    let mut detail = String::new();
    for (k, &d) in cfg.heat_d_grid.iter().enumerate() {
        for (j, &u) in cfg.heat_u_grid.iter().enumerate() {
            let mut rng =
                RngStream::new(mix_seed(cfg.seed, 0xBEA7 + (k * 97 + j) as u64), 0);
            let (est, se) = heat_kernel_mc(d, &root, &root, u, cfg.heat_reps, &mut rng)?;
            let bound = (-u * ((d as f64).sqrt() - 1.0).powi(2)).exp();
            let ok = est <= bound + 3.0 * se;
            all_ok &= ok;
            if !ok {
                detail.push_str(&format!("d={d} u={u}: {est:.5} > {bound:.5} + 3*{se:.5}; "));
            }
            csv.push_str(&format!("{d},{u},{est},{se},{bound}\n"));
        }
    }
    write_text(cfg, report, "heat.csv", &csv)?;
    if detail.is_empty() {
        detail = format!(
            "Q_u(x,x) <= exp(-u (sqrt d - 1)^2) + 3 SE on all {} cells ({} walks each)",
            cfg.heat_d_grid.len() * cfg.heat_u_grid.len(),
            cfg.heat_reps
        );
    }
    report.check("heat_kernel_bound", all_ok, detail);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp_cfg(text: &str) -> ExperimentConfig {
        let dir = std::env::temp_dir().join(format!("ssep-runner-{}", std::process::id()));
        let mut cfg = ExperimentConfig::parse(text).unwrap();
        cfg.out_dir = dir;
        cfg
    }

    #[test]
    fn simulate_is_deterministic_across_worker_counts() {
        let base = "[experiment]\nd = 2\np = 0.5\nradius = 2\nseed = 77\nreplicates = 40\nt_grid = 0.5,1\n";
        let mut cfg1 = tmp_cfg(base);
        cfg1.workers = 1;
        cfg1.out_dir = cfg1.out_dir.join("w1");
        let mut cfg8 = tmp_cfg(base);
        cfg8.workers = 8;
        cfg8.out_dir = cfg8.out_dir.join("w8");
        run(Subcommand::Simulate, &cfg1).unwrap();
        run(Subcommand::Simulate, &cfg8).unwrap();
        let a = std::fs::read(cfg1.out_dir.join("xi.csv")).unwrap();
        let b = std::fs::read(cfg8.out_dir.join("xi.csv")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn verify_suite_passes_on_defaults() {
        let mut cfg = tmp_cfg("[experiment]\nseed = 5\n");
        cfg.out_dir = cfg.out_dir.join("verify");
        let report = run(Subcommand::Verify, &cfg).unwrap();
        for c in &report.checks {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
        assert!(report.checks.len() >= 7);
    }

    #[test]
    fn sigma_requires_centered_function() {
        let mut cfg = tmp_cfg(
            "[experiment]\nfunction = inline\nfunction_sites = \nfunction_table = 0,1\nt_grid = 1\nreplicates = 40\nradius = 2\n",
        );
        cfg.out_dir = cfg.out_dir.join("sigma-uncentered");
        match run(Subcommand::Sigma, &cfg) {
            Err(Error::NotCentered { .. }) => {}
            other => panic!("expected NotCentered, got {other:?}"),
        }
    }

    #[test]
    fn decompose_reports_tiny_residuals() {
        let mut cfg = tmp_cfg(
            "[experiment]\nd = 2\nradius = 1\nseed = 3\nreplicates = 25\nt_grid = 2\nlambda = 1\nc_grid = 0.25\n",
        );
        cfg.out_dir = cfg.out_dir.join("decomp");
        let report = run(Subcommand::Decompose, &cfg).unwrap();
        assert!(report.all_passed(), "{:?}", report.checks);
    }
}
