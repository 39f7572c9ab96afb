//! Return-probability bound for the tree walk: Monte Carlo estimates of
//! Q_u(x,x) against the bound exp(-u (sqrt d - 1)^2).
//!
//! Run: cargo run --release --example heat_kernel

use ssep_tree::rng::RngStream;
use ssep_tree::stirring::heat_kernel_mc;
use ssep_tree::tree::VertexAddr;

fn main() {
    let reps = 50_000;
    let x = VertexAddr::root();
    println!("d   u     estimate   3*SE      bound");
    for d in [2u8, 3] {
        for u in [0.5f64, 1.0, 2.0, 4.0] {
            let mut rng = RngStream::new(1000 + d as u64, u.to_bits());
            let (est, se) = heat_kernel_mc(d, &x, &x, u, reps, &mut rng).unwrap();
            let bound = (-u * ((d as f64).sqrt() - 1.0).powi(2)).exp();
            let flag = if est <= bound + 3.0 * se { "ok" } else { "VIOLATION" };
            println!("{d}   {u:<4}  {est:.5}    {:.5}   {bound:.5}  {flag}", 3.0 * se);
        }
    }
}
