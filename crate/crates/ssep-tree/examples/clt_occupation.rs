//! Central-limit behavior of the rescaled additive functional: the marginal
//! of xi_{tN}/sqrt(N) is tested against N(0, sigma^2 t) by Kolmogorov-Smirnov.
//!
//! Run: cargo run --release --example clt_occupation

use rayon::prelude::*;
use ssep_tree::observable::LocalFunction;
use ssep_tree::rng::RngStream;
use ssep_tree::stats::clt_test;
use ssep_tree::tree::{build_ball, VertexAddr};

fn main() {
    let (big_n, t, reps) = (50u64, 1.0f64, 2000u64);
    let sigma_sq: f64 = 1.0 / 3.0; // occupation at d=2, p=1/2
    let ball = build_ball(2, 9).unwrap();
    let f = LocalFunction::occupation(VertexAddr::root(), 0.5).unwrap();
    let bound = f.bind(&ball).unwrap();
    let horizon = t * big_n as f64;

    println!("run  KS-stat   p-value   ({reps} samples of xi_(tN)/sqrt(N), N={big_n}, t={t})");
    for run in 0..5u64 {
        let samples: Vec<f64> = (0..reps)
            .into_par_iter()
            .map(|i| {
                let mut rng = RngStream::new(600 + run, i);
                let eta0 = ssep_tree::engine::sample_nu_p(&ball, 0.5, &mut rng).unwrap();
                let xi =
                    ssep_tree::observable::sample_xi_path(&ball, &eta0, &bound, &[horizon], &mut rng)[0];
                xi / (big_n as f64).sqrt()
            })
            .collect();
        let (d_stat, p) = clt_test(&samples, sigma_sq.sqrt(), t).unwrap();
        println!("{run}    {d_stat:.4}    {p:.4}");
    }
}
