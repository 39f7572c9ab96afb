//! Long-run variance of the occupation additive functional, three ways:
//! direct simulation, the duality-route integral, and the closed form
//! 2 p (1-p) d / (d^2 - 1).
//!
//! Run: cargo run --release --example sigma_occupation

use rayon::prelude::*;
use ssep_tree::observable::{LocalFunction, XiRecord};
use ssep_tree::oracle::sigma_occupation_exact;
use ssep_tree::rng::RngStream;
use ssep_tree::stats::{
    estimate_sigma_duality, estimate_sigma_empirical, required_cutoff, DualityGrid,
};
use ssep_tree::tree::{build_ball, truncation_radius, VertexAddr};

fn main() {
    let (d, p, t) = (2u8, 0.5, 40.0);
    let reps = 4000u64;
    let radius = truncation_radius(d, 0, 1.5, 1.5);
    let ball = build_ball(d, radius).unwrap();
    let f = LocalFunction::occupation(VertexAddr::root(), p).unwrap();
    let bound = f.bind(&ball).unwrap();
    println!("occupation observable, d={d}, p={p}, ball radius {radius} ({} vertices)", ball.vertex_count());

    let xis: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(1, i);
            let eta0 = ssep_tree::engine::sample_nu_p(&ball, p, &mut rng).unwrap();
            ssep_tree::observable::sample_xi_path(&ball, &eta0, &bound, &[t], &mut rng)[0]
        })
        .collect();
    let recs: Vec<XiRecord> = xis
        .iter()
        .enumerate()
        .map(|(i, &xi)| XiRecord { path_id: i as u64, t, xi, seed: (1, i as u64) })
        .collect();
    let emp = estimate_sigma_empirical(&recs).unwrap();
    println!("empirical  Var(xi_t)/t at t={t}: {:.5} +- {:.5}  ({reps} paths)", emp.value, emp.std_error);

    let tol = 0.004;
    let grid = DualityGrid::adaptive(required_cutoff(&f, d, tol) + 1.0, 0.05, 1.06);
    let dual = estimate_sigma_duality(&f, p, d, &grid, tol, 20_000, 2).unwrap();
    println!(
        "duality    2 int C(u) du (cutoff {:.1}): {:.5} +- {:.5}  (20000 walks)",
        grid.cutoff(),
        dual.value,
        dual.std_error
    );

    let exact = sigma_occupation_exact(d, p).unwrap();
    println!("closed form 2 p (1-p) d/(d^2-1):       {exact:.5}");
}
