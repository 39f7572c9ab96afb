//! Stirring walks and the resolvent of the observable.
//!
//! The backward traces of m distinct vertices form the stirring process:
//! independent tree walks, except that a neighboring pair swaps at rate 1
//! instead of colliding. [`simulate_stirring`] runs it forward on the
//! infinite tree in word coordinates (a single walk never needs a ball, so
//! heat-kernel checks carry zero truncation bias); the ball-restricted
//! variant follows exactly the chain of
//! [`crate::oracle::build_stirring_generator`].
//!
//! The resolvent table `beta` is the lambda-Laplace transform of the stirring
//! semigroup started from the observable's sites. It is computed two ways
//! that check each other:
//! * exactly, as the linear system `(lambda I - A_m) beta = delta_source`;
//! * by Monte Carlo, using the exponential-time representation: run the
//!   stirring walk for an Exp(lambda) duration T and average H(eta, X_T)/lambda,
//!   which is unbiased for the resolvent-weighted sum without any quadrature.

use crate::engine::Configuration;
use crate::error::{Error, Result};
use crate::observable::LocalFunction;
use crate::oracle::{
    build_stirring_generator_capped, resolvent_solve, TupleSpace, DEFAULT_TUPLE_STATE_CAP,
};
use crate::rng::RngStream;
use crate::tree::{Ball, VertexAddr};

/// Ordered tuple of distinct walker positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StirringTuple {
    positions: Vec<VertexAddr>,
}

impl StirringTuple {
    pub fn new(positions: Vec<VertexAddr>) -> Result<Self> {
        for (i, p) in positions.iter().enumerate() {
            if positions[..i].contains(p) {
                return Err(Error::DuplicateSites);
            }
        }
        if positions.is_empty() {
            return Err(Error::OutOfRange { what: "tuple", details: "m >= 1".into() });
        }
        Ok(StirringTuple { positions })
    }

    pub fn positions(&self) -> &[VertexAddr] {
        &self.positions
    }

    pub fn arity(&self) -> usize {
        self.positions.len()
    }
}

/// Continuously evolving stirring tuple on the infinite tree.
///
/// Each walker jumps across each incident edge at rate 1; the edge between a
/// neighboring pair is shared and produces a swap. The total jump rate is
/// therefore `m (d+1) - (number of adjacent pairs)`.
pub struct StirringPath {
    d: u8,
    positions: Vec<VertexAddr>,
    time: f64,
    jumps: u64,
}

impl StirringPath {
    pub fn new(start: &StirringTuple, d: u8) -> Self {
        StirringPath { d, positions: start.positions.clone(), time: 0.0, jumps: 0 }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn positions(&self) -> &[VertexAddr] {
        &self.positions
    }

    /// Number of jump events applied so far (a pair swap counts once).
    pub fn jumps(&self) -> u64 {
        self.jumps
    }

    /// Distinct edges incident to the walker set, as (walker set on edge).
    fn incident_edges(&self) -> Vec<(Vec<usize>, VertexAddr, VertexAddr)> {
        let mut edges: Vec<(Vec<usize>, VertexAddr, VertexAddr)> = Vec::new();
        for (i, pos) in self.positions.iter().enumerate() {
            for nbr in crate::tree::neighbors(pos, self.d) {
                // Canonical endpoint order so a shared edge dedupes.
                let (a, b) = if pos.word() <= nbr.word() {
                    (pos.clone(), nbr.clone())
                } else {
                    (nbr.clone(), pos.clone())
                };
                if let Some(entry) = edges.iter_mut().find(|(_, ea, eb)| *ea == a && *eb == b) {
                    entry.0.push(i);
                } else {
                    edges.push((vec![i], a, b));
                }
            }
        }
        edges
    }

    /// Advances the walk to absolute time `target`.
    pub fn advance_to(&mut self, target: f64, rng: &mut RngStream) {
        if self.positions.len() == 1 {
            // Single walker: constant rate d+1, uniform neighbor, no edge
            // enumeration needed (this is the hot path of the duality
            // estimator and the heat-kernel checks).
            let d = self.d;
            let rate = d as f64 + 1.0;
            let pos = &mut self.positions[0];
            loop {
                let dt = rng.exponential(rate);
                if self.time + dt > target {
                    self.time = target;
                    return;
                }
                self.time += dt;
                self.jumps += 1;
                let k = rng.below(d as u32 + 1) as u8;
                if pos.is_root() {
                    pos.push_letter(k);
                } else if k == 0 {
                    pos.pop_letter();
                } else {
                    pos.push_letter(k - 1);
                }
            }
        }
        while self.time < target {
            let edges = self.incident_edges();
            let rate = edges.len() as f64;
            let dt = rng.exponential(rate);
            if self.time + dt > target {
                self.time = target;
                return;
            }
            self.time += dt;
            self.jumps += 1;
            let pick = rng.below(edges.len() as u32) as usize;
            let (_, a, b) = &edges[pick];
            for pos in self.positions.iter_mut() {
                if pos == a {
                    *pos = b.clone();
                } else if pos == b {
                    *pos = a.clone();
                }
            }
        }
    }
}

/// Forward stirring simulation on the infinite tree for a fixed duration.
pub fn simulate_stirring(
    start: &StirringTuple,
    d: u8,
    duration: f64,
    rng: &mut RngStream,
) -> Result<StirringTuple> {
    if duration < 0.0 {
        return Err(Error::OutOfRange { what: "duration", details: format!("{duration}") });
    }
    let mut path = StirringPath::new(start, d);
    path.advance_to(duration, rng);
    StirringTuple::new(path.positions.clone())
}

/// Ball-restricted stirring step semantics, mutating vertex indices in place.
/// Matches the exact tuple chain: walkers only use edges of the ball.
pub fn simulate_stirring_on_ball(
    ball: &Ball,
    positions: &mut [u32],
    duration: f64,
    rng: &mut RngStream,
) {
    let mut t = 0.0;
    let mut edges: Vec<u32> = Vec::with_capacity(positions.len() * 4);
    loop {
        edges.clear();
        for &p in positions.iter() {
            for &e in ball.incident_edges(p) {
                if !edges.contains(&e) {
                    edges.push(e);
                }
            }
        }
        let rate = edges.len() as f64;
        let dt = rng.exponential(rate);
        if t + dt > duration {
            return;
        }
        t += dt;
        let e = edges[rng.below(edges.len() as u32) as usize];
        let (a, b) = ball.edge_endpoints(e);
        for p in positions.iter_mut() {
            if *p == a {
                *p = b;
            } else if *p == b {
                *p = a;
            }
        }
    }
}

/// Total time a single tree walk spends at its starting vertex up to
/// `horizon`; the Monte Carlo side of the Green-function validation.
pub fn walk_occupation_at_start(d: u8, horizon: f64, rng: &mut RngStream) -> f64 {
    let rate = d as f64 + 1.0;
    let mut at_start = true;
    let mut occupation = 0.0;
    let mut t = 0.0;
    // Walk in radial coordinates: distance from start, with the return
    // probability 1/(d+1) toward the start at distance >= 1.
    let mut dist = 0u32;
    loop {
        let dt = rng.exponential(rate);
        if t + dt > horizon {
            if at_start {
                occupation += horizon - t;
            }
            return occupation;
        }
        if at_start {
            occupation += dt;
        }
        t += dt;
        if dist == 0 {
            dist = 1;
        } else {
            // One of d+1 neighbors is closer to the start.
            if rng.below(d as u32 + 1) == 0 {
                dist -= 1;
            } else {
                dist += 1;
            }
        }
        at_start = dist == 0;
    }
}

/// Monte Carlo estimate of the single-walk kernel Q^1_u(x, z) on the infinite
/// tree, with binomial standard error.
pub fn heat_kernel_mc(
    d: u8,
    x: &VertexAddr,
    z: &VertexAddr,
    u: f64,
    reps: u64,
    rng: &mut RngStream,
) -> Result<(f64, f64)> {
    if !(u > 0.0) || reps == 0 {
        return Err(Error::OutOfRange { what: "heat kernel args", details: format!("u={u}, reps={reps}") });
    }
    let start = StirringTuple::new(vec![x.clone()])?;
    let mut hits = 0u64;
    for _ in 0..reps {
        let end = simulate_stirring(&start, d, u, rng)?;
        if end.positions()[0] == *z {
            hits += 1;
        }
    }
    let p = hits as f64 / reps as f64;
    let se = (p * (1.0 - p) / reps as f64).sqrt();
    Ok((p, se))
}

/// The exact resolvent of the stirring chain started from `source`, over the
/// ball's m-tuple space.
#[derive(Debug, Clone)]
pub struct ResolventTable {
    lambda: f64,
    source: Vec<u32>,
    space: TupleSpace,
    values: Vec<f64>,
}

impl ResolventTable {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn source(&self) -> &[u32] {
        &self.source
    }

    pub fn space(&self) -> &TupleSpace {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, tuple: &[u32]) -> Option<f64> {
        self.space.index_of(tuple).map(|i| self.values[i as usize])
    }

    /// CSV export (tuple of dotted words joined by ';', value) for pinning.
    pub fn to_csv(&self, ball: &Ball) -> String {
        let mut out = String::from("# schema: resolvent v1\ntuple,value\n");
        for (i, tuple) in self.space.tuples().iter().enumerate() {
            let words: Vec<String> =
                tuple.iter().map(|&v| ball.vertex(v).to_dotted()).collect();
            out.push_str(&format!("{},{}\n", words.join(";"), self.values[i]));
        }
        out
    }
}

/// Solves `(lambda I - A_m) beta = delta_source` on the ball's tuple space.
pub fn exact_beta(ball: &Ball, source: &StirringTuple, lambda: f64) -> Result<ResolventTable> {
    exact_beta_capped(ball, source, lambda, DEFAULT_TUPLE_STATE_CAP)
}

pub fn exact_beta_capped(
    ball: &Ball,
    source: &StirringTuple,
    lambda: f64,
    cap: u128,
) -> Result<ResolventTable> {
    if !(lambda > 0.0) {
        return Err(Error::OutOfRange { what: "lambda", details: format!("{lambda}") });
    }
    let source_idx: Vec<u32> =
        source.positions().iter().map(|v| ball.require_index(v)).collect::<Result<_>>()?;
    let (space, gen) = build_stirring_generator_capped(ball, source.arity(), cap)?;
    let src = space
        .index_of(&source_idx)
        .expect("source tuple is inside the enumerated space");
    let values = resolvent_solve(&gen, lambda, src as usize)?;
    Ok(ResolventTable { lambda, source: source_idx, space, values })
}

/// Exact resolvent-weighted sum `G(eta) = sum_tuples H(eta at tuple) beta(tuple)`.
pub fn exact_g(
    ball: &Ball,
    eta: &Configuration,
    f: &LocalFunction,
    table: &ResolventTable,
) -> Result<f64> {
    let source_idx: Vec<u32> =
        f.sites().iter().map(|v| ball.require_index(v)).collect::<Result<_>>()?;
    if source_idx != table.source || f.arity() != table.space.arity() {
        return Err(Error::MixedSamples("resolvent table does not match the function's sites"));
    }
    let mut g = 0.0;
    for (i, tuple) in table.space.tuples().iter().enumerate() {
        let mut pattern = 0usize;
        for (j, &v) in tuple.iter().enumerate() {
            pattern |= (eta.get(v) as usize) << j;
        }
        g += f.value_at_pattern(pattern) * table.values[i];
    }
    Ok(g)
}

/// Unbiased Monte Carlo estimate of the same quantity, via the exponential
/// stopping-time representation: T ~ Exp(lambda), sample = H(eta, X_T)/lambda.
/// Every sample is bounded by K_H / lambda.
pub fn resolvent_mc_g(
    ball: &Ball,
    eta: &Configuration,
    f: &LocalFunction,
    lambda: f64,
    reps: u64,
    rng: &mut RngStream,
) -> Result<(f64, f64)> {
    if !(lambda > 0.0) {
        return Err(Error::OutOfRange { what: "lambda", details: format!("{lambda}") });
    }
    if reps == 0 {
        return Err(Error::OutOfRange { what: "reps", details: "need >= 1".into() });
    }
    let start: Vec<u32> =
        f.sites().iter().map(|v| ball.require_index(v)).collect::<Result<_>>()?;
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    let mut positions = start.clone();
    for _ in 0..reps {
        positions.copy_from_slice(&start);
        let duration = rng.exponential(lambda);
        simulate_stirring_on_ball(ball, &mut positions, duration, rng);
        let mut pattern = 0usize;
        for (j, &v) in positions.iter().enumerate() {
            pattern |= (eta.get(v) as usize) << j;
        }
        let sample = f.value_at_pattern(pattern) / lambda;
        sum += sample;
        sumsq += sample * sample;
    }
    let mean = sum / reps as f64;
    let var = (sumsq / reps as f64 - mean * mean).max(0.0);
    Ok((mean, (var / reps as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{build_stirring_generator, semigroup_apply};
    use crate::tree::{build_ball, distance};

    fn root() -> VertexAddr {
        VertexAddr::root()
    }

    #[test]
    fn zero_duration_is_identity() {
        let start = StirringTuple::new(vec![root(), VertexAddr::new(vec![1], 2).unwrap()]).unwrap();
        let mut rng = RngStream::new(1, 1);
        let end = simulate_stirring(&start, 2, 0.0, &mut rng).unwrap();
        assert_eq!(end, start);
    }

    #[test]
    fn single_walk_jump_count() {
        // A lone walker has d+1 incident edges, so its jump rate is d+1 and
        // the mean number of jumps over time s is (d+1) s.
        let d = 2u8;
        let s = 2.0;
        let reps = 3000u64;
        let mut total = 0u64;
        for i in 0..reps {
            let mut rng = RngStream::new(40, i);
            let mut path = StirringPath::new(&StirringTuple::new(vec![root()]).unwrap(), d);
            path.advance_to(s, &mut rng);
            total += path.jumps();
        }
        let mean = total as f64 / reps as f64;
        let se = (6.0f64 / reps as f64).sqrt();
        assert!((mean - 6.0).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn stirring_preserves_distinctness() {
        let start = StirringTuple::new(vec![
            root(),
            VertexAddr::new(vec![0], 2).unwrap(),
            VertexAddr::new(vec![1], 2).unwrap(),
        ])
        .unwrap();
        for seed in 0..30 {
            let mut rng = RngStream::new(90, seed);
            let end = simulate_stirring(&start, 2, 1.5, &mut rng).unwrap();
            let ps = end.positions();
            for i in 0..ps.len() {
                for j in 0..i {
                    assert_ne!(ps[i], ps[j]);
                }
            }
        }
    }

    #[test]
    fn adjacent_pair_rate_reduction() {
        // Two adjacent walkers share one edge: 2(d+1) - 1 distinct edges.
        let a = root();
        let b = VertexAddr::new(vec![0], 2).unwrap();
        let path = StirringPath::new(&StirringTuple::new(vec![a, b]).unwrap(), 2);
        assert_eq!(path.incident_edges().len(), 5);
        // Distant walkers: 2(d+1).
        let far = VertexAddr::new(vec![1, 0, 0], 2).unwrap();
        let path2 = StirringPath::new(&StirringTuple::new(vec![root(), far]).unwrap(), 2);
        assert_eq!(path2.incident_edges().len(), 6);
    }

    #[test]
    fn pair_law_matches_uniformization_on_star() {
        // Empirical m=2 law on ball(2,1) at s=0.5 vs the exact semigroup.
        let ball = build_ball(2, 1).unwrap();
        let (space, gen) = build_stirring_generator(&ball, 2).unwrap();
        let start = [0u32, 1u32];
        let src = space.index_of(&start).unwrap();
        let mut delta = vec![0.0; space.len()];
        delta[src as usize] = 1.0;
        let exact = semigroup_apply(&gen, &delta, 0.5).unwrap();

        let reps = 40_000u64;
        let mut counts = vec![0u64; space.len()];
        for i in 0..reps {
            let mut rng = RngStream::new(512, i);
            let mut pos = start;
            simulate_stirring_on_ball(&ball, &mut pos, 0.5, &mut rng);
            counts[space.index_of(&pos).unwrap() as usize] += 1;
        }
        for s in 0..space.len() {
            let freq = counts[s] as f64 / reps as f64;
            let se = (exact[s] * (1.0 - exact[s]) / reps as f64).sqrt().max(1e-9);
            assert!(
                (freq - exact[s]).abs() < 4.0 * se,
                "state {s}: {freq} vs {} (se {se})",
                exact[s]
            );
        }
    }

    #[test]
    fn infinite_tree_pair_law_matches_ball_interior() {
        // For a short horizon the walkers cannot feel the radius-3 boundary
        // from the center, so the word-coordinate simulation must match the
        // ball-restricted one in distribution. Spot-check the adjacency
        // probability of the pair.
        let ball = build_ball(2, 3).unwrap();
        let reps = 12_000u64;
        let s = 0.4;
        let x1 = root();
        let x2 = VertexAddr::new(vec![0], 2).unwrap();
        let mut adj_tree = 0u64;
        let mut adj_ball = 0u64;
        for i in 0..reps {
            let mut rng = RngStream::new(77, i);
            let end = simulate_stirring(
                &StirringTuple::new(vec![x1.clone(), x2.clone()]).unwrap(),
                2,
                s,
                &mut rng,
            )
            .unwrap();
            if distance(&end.positions()[0], &end.positions()[1]) == 1 {
                adj_tree += 1;
            }
            let mut rng2 = RngStream::new(78, i);
            let mut pos = [0u32, 1u32];
            simulate_stirring_on_ball(&ball, &mut pos, s, &mut rng2);
            if distance(ball.vertex(pos[0]), ball.vertex(pos[1])) == 1 {
                adj_ball += 1;
            }
        }
        let pt = adj_tree as f64 / reps as f64;
        let pb = adj_ball as f64 / reps as f64;
        let se = (2.0 * 0.25 / reps as f64).sqrt();
        assert!((pt - pb).abs() < 4.0 * se, "{pt} vs {pb}");
    }

    #[test]
    fn heat_kernel_short_time_limits() {
        let mut rng = RngStream::new(5, 5);
        let (at_x, _) = heat_kernel_mc(2, &root(), &root(), 1e-3, 4000, &mut rng).unwrap();
        assert!(at_x > 0.99);
        let z = VertexAddr::new(vec![0], 2).unwrap();
        let (at_z, _) = heat_kernel_mc(2, &root(), &z, 1e-3, 4000, &mut rng).unwrap();
        assert!(at_z < 0.01);
    }

    #[test]
    fn heat_kernel_obeys_exponential_bound() {
        // Q^1_u(x,x) <= e^{-u (sqrt d - 1)^2}; at d=2, u=1 the bound is 0.8423.
        let mut rng = RngStream::new(6, 6);
        let (est, se) = heat_kernel_mc(2, &root(), &root(), 1.0, 30_000, &mut rng).unwrap();
        let bound = (-(2.0f64.sqrt() - 1.0).powi(2)).exp();
        assert!((bound - 0.8423).abs() < 1e-4);
        assert!(est <= bound + 3.0 * se, "estimate {est} bound {bound}");
    }

    #[test]
    fn exact_beta_star_values() {
        let ball = build_ball(2, 1).unwrap();
        let table =
            exact_beta(&ball, &StirringTuple::new(vec![root()]).unwrap(), 1.0).unwrap();
        assert!((table.value(&[0]).unwrap() - 0.4).abs() < 1e-12);
        for leaf in 1..4u32 {
            assert!((table.value(&[leaf]).unwrap() - 0.2).abs() < 1e-12);
        }
        assert!(table.values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn exact_g_star_example() {
        // Occupation observable at the root, eta = root occupied, p = 1/2:
        // G = 0.5 * 2/5 + 3 * (-0.5) * 1/5 = -0.1.
        let ball = build_ball(2, 1).unwrap();
        let f = LocalFunction::occupation(root(), 0.5).unwrap();
        let table =
            exact_beta(&ball, &StirringTuple::new(vec![root()]).unwrap(), 1.0).unwrap();
        let mut eta = Configuration::vacant(&ball);
        eta.set(0, 1);
        let g = exact_g(&ball, &eta, &f, &table).unwrap();
        assert!((g + 0.1).abs() < 1e-12);
    }

    #[test]
    fn exact_g_linearity_and_zero() {
        let ball = build_ball(2, 1).unwrap();
        let table =
            exact_beta(&ball, &StirringTuple::new(vec![root()]).unwrap(), 0.7).unwrap();
        let zero = LocalFunction::new(vec![root()], vec![0.0, 0.0]).unwrap();
        let f1 = LocalFunction::new(vec![root()], vec![-1.0, 2.0]).unwrap();
        let f2 = LocalFunction::new(vec![root()], vec![0.5, -0.25]).unwrap();
        // 2*f1 + 3*f2, entrywise.
        let combo = LocalFunction::new(vec![root()], vec![-0.5, 3.25]).unwrap();
        let mut rng = RngStream::new(3, 3);
        let eta = crate::engine::sample_nu_p(&ball, 0.5, &mut rng).unwrap();
        assert_eq!(exact_g(&ball, &eta, &zero, &table).unwrap(), 0.0);
        let g1 = exact_g(&ball, &eta, &f1, &table).unwrap();
        let g2 = exact_g(&ball, &eta, &f2, &table).unwrap();
        let gc = exact_g(&ball, &eta, &combo, &table).unwrap();
        assert!((gc - (2.0 * g1 + 3.0 * g2)).abs() < 1e-12);
    }

    #[test]
    fn mc_resolvent_matches_exact() {
        let ball = build_ball(2, 1).unwrap();
        let f = LocalFunction::occupation(root(), 0.5).unwrap();
        let table =
            exact_beta(&ball, &StirringTuple::new(vec![root()]).unwrap(), 1.0).unwrap();
        let mut eta = Configuration::vacant(&ball);
        eta.set(0, 1);
        let exact = exact_g(&ball, &eta, &f, &table).unwrap();
        let mut rng = RngStream::new(9, 9);
        let (mc, se) = resolvent_mc_g(&ball, &eta, &f, 1.0, 60_000, &mut rng).unwrap();
        assert!((mc - exact).abs() < 3.0 * se, "{mc} vs {exact} (se {se})");
        // Every sample is bounded, so the estimate is too.
        assert!(mc.abs() <= f.sup_norm() / 1.0 + 1e-12);
    }

    #[test]
    fn mc_resolvent_agrees_on_random_cases() {
        let ball = build_ball(2, 1).unwrap();
        let f = LocalFunction::occupation(root(), 0.5).unwrap();
        let mut failures = 0;
        for k in 0..50u64 {
            let lambda = 0.4 + 0.1 * (k % 7) as f64;
            let table =
                exact_beta(&ball, &StirringTuple::new(vec![root()]).unwrap(), lambda).unwrap();
            let mut rng = RngStream::new(1000 + k, 0);
            let eta = crate::engine::sample_nu_p(&ball, 0.5, &mut rng).unwrap();
            let exact = exact_g(&ball, &eta, &f, &table).unwrap();
            let (mc, se) = resolvent_mc_g(&ball, &eta, &f, lambda, 4000, &mut rng).unwrap();
            if (mc - exact).abs() > 3.0 * se.max(1e-12) {
                failures += 1;
            }
        }
        // 3 sigma misses should be rare; allow a couple across 50 cases.
        assert!(failures <= 3, "{failures} of 50 cases outside 3 SE");
    }

    #[test]
    fn table_csv_has_all_tuples() {
        let ball = build_ball(2, 1).unwrap();
        let table =
            exact_beta(&ball, &StirringTuple::new(vec![root()]).unwrap(), 1.0).unwrap();
        let csv = table.to_csv(&ball);
        assert_eq!(csv.lines().count(), 2 + 4);
    }
}
