//! The resolvent of a local observable, exact vs Monte Carlo: the linear
//! solve (lambda I - A) beta = delta gives the table; the unbiased sampler
//! runs the stirring walk for an Exp(lambda) time.
//!
//! Run: cargo run --release --example resolvent

use ssep_tree::engine::Configuration;
use ssep_tree::observable::LocalFunction;
use ssep_tree::rng::RngStream;
use ssep_tree::stirring::{exact_beta, exact_g, resolvent_mc_g, StirringTuple};
use ssep_tree::tree::{build_ball, VertexAddr};

fn main() {
    let ball = build_ball(2, 1).unwrap();
    let root = VertexAddr::root();
    let lambda = 1.0;
    let table = exact_beta(&ball, &StirringTuple::new(vec![root.clone()]).unwrap(), lambda).unwrap();
    println!("beta table on ball(2,1), source = root, lambda = {lambda}:");
    print!("{}", table.to_csv(&ball));
    let total: f64 = table.values().iter().sum();
    println!("normalization lambda * sum(beta) = {:.12}", lambda * total);

    let f = LocalFunction::occupation(root, 0.5).unwrap();
    let mut eta = Configuration::vacant(&ball);
    eta.set(0, 1); // root occupied, leaves vacant
    let exact = exact_g(&ball, &eta, &f, &table).unwrap();
    let mut rng = RngStream::new(42, 0);
    let (mc, se) = resolvent_mc_g(&ball, &eta, &f, lambda, 40_000, &mut rng).unwrap();
    println!("G(eta) exact = {exact:.6}   MC = {mc:.6} +- {se:.6}   (root occupied)");
}
