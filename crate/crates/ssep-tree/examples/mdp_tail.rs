//! Moderate-deviation tail diagnostic: empirical tail rates of xi_t/a_t at
//! a_t = t^gamma next to the Gaussian rate u^2/(2 sigma^2). Agreement is
//! asymptotic; at desk scale only the shrinking gap is visible.
//!
//! Run: cargo run --release --example mdp_tail

use rayon::prelude::*;
use ssep_tree::observable::{LocalFunction, XiRecord};
use ssep_tree::rng::RngStream;
use ssep_tree::stats::tail_rate;
use ssep_tree::tree::{build_ball, truncation_radius, VertexAddr};

fn main() {
    let gamma = 0.7;
    let sigma_sq = 1.0 / 3.0;
    let ball = build_ball(2, truncation_radius(2, 0, 1.5, 1.5)).unwrap();
    let f = LocalFunction::occupation(VertexAddr::root(), 0.5).unwrap();
    let bound = f.bind(&ball).unwrap();

    println!("t      u    hits/reps        empirical  theoretical  gap");
    for (t, reps) in [(25.0f64, 40_000u64), (50.0, 40_000), (100.0, 20_000)] {
        let xis: Vec<f64> = (0..reps)
            .into_par_iter()
            .map(|i| {
                let mut rng = RngStream::new(9000 + t as u64, i);
                let eta0 = ssep_tree::engine::sample_nu_p(&ball, 0.5, &mut rng).unwrap();
                ssep_tree::observable::sample_xi_path(&ball, &eta0, &bound, &[t], &mut rng)[0]
            })
            .collect();
        let recs: Vec<XiRecord> = xis
            .iter()
            .enumerate()
            .map(|(i, &xi)| XiRecord { path_id: i as u64, t, xi, seed: (0, i as u64) })
            .collect();
        let a_t = t.powf(gamma);
        let (points, dropped) = tail_rate(&recs, a_t, &[0.25, 0.5], sigma_sq).unwrap();
        for p in points {
            println!(
                "{t:<6} {:<4} {:>7}/{reps:<8} {:+.4}    {:.4}       {:.4}",
                p.u, p.tail_hits, p.empirical, p.theoretical, p.gap()
            );
        }
        for u in dropped {
            println!("{t:<6} {u:<4} dropped (no tail hits)");
        }
    }
}
