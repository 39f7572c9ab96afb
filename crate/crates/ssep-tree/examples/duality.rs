//! Pathwise duality demo: forward evolution and backward tracing of one
//! realized clock record agree bit for bit, and in expectation the exclusion
//! semigroup matches the single-walk kernel.
//!
//! Run: cargo run --release --example duality

use ssep_tree::engine::{evolve, sample_events, sample_nu_p, Configuration, DualTracer};
use ssep_tree::oracle::{build_ssep_generator, build_stirring_generator, semigroup_apply};
use ssep_tree::rng::RngStream;
use ssep_tree::tree::build_ball;

fn main() {
    let ball = build_ball(2, 2).unwrap();
    println!("ball(d=2, R=2): {} vertices, {} edges", ball.vertex_count(), ball.edge_count());

    // Pathwise: eta_t(x) = eta_0(X_t^{t,x}) for every vertex of every path.
    let mut mismatches = 0usize;
    let paths = 200;
    for seed in 0..paths {
        let mut rng = RngStream::new(7, seed);
        let log = sample_events(&ball, 3.0, &mut rng).unwrap();
        let eta0 = sample_nu_p(&ball, 0.5, &mut rng).unwrap();
        let eta_t = evolve(&ball, &eta0, &log, 3.0).unwrap();
        let tracer = DualTracer::new(&ball, &log);
        for x in 0..ball.vertex_count() as u32 {
            let origin = tracer.trace_idx(x, 3.0, 3.0).unwrap();
            if eta_t.get(x) != eta0.get(origin) {
                mismatches += 1;
            }
        }
    }
    println!(
        "pathwise duality over {paths} logs x {} vertices: {mismatches} mismatches",
        ball.vertex_count()
    );

    // In expectation: E[eta_t(x)] = sum_y Q_t(x,y) eta_0(y), both sides from
    // uniformization of different generators.
    let small = build_ball(2, 1).unwrap();
    let ssep = build_ssep_generator(&small).unwrap();
    let (_, walk) = build_stirring_generator(&small, 1).unwrap();
    let mut worst: f64 = 0.0;
    for mask in 0..16u64 {
        let eta0 = Configuration::from_mask(&small, mask);
        let mut delta = vec![0.0; 16];
        delta[mask as usize] = 1.0;
        let dist = semigroup_apply(&ssep, &delta, 0.7).unwrap();
        for x in 0..4u32 {
            let lhs: f64 = dist.iter().enumerate().map(|(s, &w)| w * ((s >> x) & 1) as f64).sum();
            let mut dx = vec![0.0; 4];
            dx[x as usize] = 1.0;
            let kern = semigroup_apply(&walk, &dx, 0.7).unwrap();
            let rhs: f64 =
                kern.iter().enumerate().map(|(y, &q)| q * eta0.get(y as u32) as f64).sum();
            worst = worst.max((lhs - rhs).abs());
        }
    }
    println!("semigroup duality on ball(2,1), t=0.7: max deviation {worst:.2e}");
}
