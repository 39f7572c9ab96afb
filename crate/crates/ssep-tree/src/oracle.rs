//! Brute-force ground truth on small instances.
//!
//! Two generator builders give the exact continuous-time Markov chains behind
//! everything else: the exclusion dynamics on `{0,1}^V` (2^|V| states) and
//! the m-walker stirring chain on ordered distinct tuples. Semigroups are
//! evaluated by uniformization (a Poisson mixture of powers of the
//! discrete-time chain `P = I + A/Lambda`, which only needs sparse
//! matrix-vector products and has a clean truncation bound) and resolvents
//! by conjugate gradients on `(lambda I - A)`, which is symmetric positive
//! definite for every `lambda > 0` because both generators are symmetric.
//!
//! The only closed-form constant shipped here is the expected total time a
//! tree walk spends at its starting vertex, `d/(d^2-1)`; it is cross-checked
//! numerically in the tests (Monte Carlo walk occupation plus a radial
//! birth-death chain) before anything downstream may cite it.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::tree::Ball;

/// Default cap on exclusion state spaces (2^|V| states).
pub const DEFAULT_CONFIG_STATE_CAP: u128 = 1 << 20;
/// Default cap on stirring tuple spaces.
pub const DEFAULT_TUPLE_STATE_CAP: u128 = 200_000;

/// Sparse CTMC generator: off-diagonal rates by row plus the diagonal.
#[derive(Debug, Clone)]
pub struct GeneratorMatrix {
    dim: usize,
    rows: Vec<Vec<(u32, f64)>>,
    diag: Vec<f64>,
}

impl GeneratorMatrix {
    fn from_transitions(dim: usize, transitions: impl IntoIterator<Item = (u32, u32, f64)>) -> Self {
        let mut rows = vec![Vec::new(); dim];
        let mut diag = vec![0.0; dim];
        for (from, to, rate) in transitions {
            rows[from as usize].push((to, rate));
            diag[from as usize] -= rate;
        }
        GeneratorMatrix { dim, rows, diag }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn diagonal(&self, i: usize) -> f64 {
        self.diag[i]
    }

    pub fn row(&self, i: usize) -> &[(u32, f64)] {
        &self.rows[i]
    }

    /// Total outflow rate of state i.
    pub fn exit_rate(&self, i: usize) -> f64 {
        -self.diag[i]
    }

    /// y = A x.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        for i in 0..self.dim {
            let mut acc = self.diag[i] * x[i];
            for &(j, rate) in &self.rows[i] {
                acc += rate * x[j as usize];
            }
            y[i] = acc;
        }
    }

    /// Row sums, which must vanish for a generator.
    pub fn max_row_sum_defect(&self) -> f64 {
        (0..self.dim)
            .map(|i| {
                let s: f64 = self.diag[i] + self.rows[i].iter().map(|&(_, r)| r).sum::<f64>();
                s.abs()
            })
            .fold(0.0, f64::max)
    }

    /// Coordinate-format text export: `row col rate` per off-diagonal entry,
    /// `i i diag` for diagonals.
    pub fn to_coordinate_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# generator dim={}\n", self.dim));
        for i in 0..self.dim {
            out.push_str(&format!("{} {} {}\n", i, i, self.diag[i]));
            for &(j, rate) in &self.rows[i] {
                out.push_str(&format!("{} {} {}\n", i, j, rate));
            }
        }
        out
    }
}

/// Exclusion generator on `{0,1}^V`: for each edge whose endpoint values
/// differ, a rate-1 transition to the swapped state. State index i has bit v
/// equal to the occupancy of ball vertex v.
pub fn build_ssep_generator(ball: &Ball) -> Result<GeneratorMatrix> {
    build_ssep_generator_capped(ball, DEFAULT_CONFIG_STATE_CAP)
}

pub fn build_ssep_generator_capped(ball: &Ball, cap: u128) -> Result<GeneratorMatrix> {
    let nv = ball.vertex_count();
    let states: u128 = 1u128 << nv;
    if states > cap {
        return Err(Error::CapExceeded { needed: states, cap });
    }
    let n = states as usize;
    let mut transitions = Vec::new();
    for state in 0..n as u64 {
        for (e, &(a, b)) in ball.edges().iter().enumerate() {
            let _ = e;
            let va = (state >> a) & 1;
            let vb = (state >> b) & 1;
            if va != vb {
                let to = state ^ (1 << a) ^ (1 << b);
                transitions.push((state as u32, to as u32, 1.0));
            }
        }
    }
    Ok(GeneratorMatrix::from_transitions(n, transitions))
}

/// Enumeration of ordered m-tuples of distinct ball vertices, lexicographic
/// in the ball's vertex order, with an injective tuple -> index pairing.
#[derive(Debug, Clone)]
pub struct TupleSpace {
    m: usize,
    tuples: Vec<Vec<u32>>,
    index: HashMap<u64, u32>,
}

fn tuple_key(tuple: &[u32]) -> u64 {
    debug_assert!(tuple.len() <= 4);
    tuple.iter().fold(0u64, |k, &v| (k << 16) | (v as u64 + 1))
}

impl TupleSpace {
    pub fn new(ball: &Ball, m: usize, cap: u128) -> Result<Self> {
        if m == 0 || m > 4 {
            return Err(Error::OutOfRange { what: "tuple arity", details: format!("m={m}, need 1..=4") });
        }
        let nv = ball.vertex_count() as u128;
        let mut count = 1u128;
        for k in 0..m as u128 {
            count *= nv - k;
        }
        if count > cap {
            return Err(Error::CapExceeded { needed: count, cap });
        }
        let mut tuples = Vec::with_capacity(count as usize);
        let mut cur = Vec::with_capacity(m);
        enumerate_tuples(ball.vertex_count() as u32, m, &mut cur, &mut tuples);
        let index =
            tuples.iter().enumerate().map(|(i, t)| (tuple_key(t), i as u32)).collect();
        Ok(TupleSpace { m, tuples, index })
    }

    pub fn arity(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn tuple(&self, i: u32) -> &[u32] {
        &self.tuples[i as usize]
    }

    pub fn tuples(&self) -> &[Vec<u32>] {
        &self.tuples
    }

    pub fn index_of(&self, tuple: &[u32]) -> Option<u32> {
        self.index.get(&tuple_key(tuple)).copied()
    }
}

fn enumerate_tuples(nv: u32, m: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if cur.len() == m {
        out.push(cur.clone());
        return;
    }
    for v in 0..nv {
        if !cur.contains(&v) {
            cur.push(v);
            enumerate_tuples(nv, m, cur, out);
            cur.pop();
        }
    }
}

/// Stirring generator on ordered distinct m-tuples: a walker jumps to each
/// vacant neighbor at rate 1; a neighboring pair of walkers swaps at rate 1.
/// This is exactly the chain the joint backward traces follow.
pub fn build_stirring_generator(ball: &Ball, m: usize) -> Result<(TupleSpace, GeneratorMatrix)> {
    build_stirring_generator_capped(ball, m, DEFAULT_TUPLE_STATE_CAP)
}

pub fn build_stirring_generator_capped(
    ball: &Ball,
    m: usize,
    cap: u128,
) -> Result<(TupleSpace, GeneratorMatrix)> {
    let space = TupleSpace::new(ball, m, cap)?;
    let mut transitions = Vec::new();
    for (i, tuple) in space.tuples.iter().enumerate() {
        for &(a, b) in ball.edges() {
            let pa = tuple.iter().position(|&v| v == a);
            let pb = tuple.iter().position(|&v| v == b);
            let to = match (pa, pb) {
                (None, None) => continue,
                _ => {
                    let mut next = tuple.clone();
                    if let Some(k) = pa {
                        next[k] = b;
                    }
                    if let Some(k) = pb {
                        next[k] = a;
                    }
                    next
                }
            };
            let j = space.index_of(&to).expect("stirring move stays in the tuple space");
            transitions.push((i as u32, j, 1.0));
        }
    }
    let gen = GeneratorMatrix::from_transitions(space.len(), transitions);
    Ok((space, gen))
}

/// e^{tA} v by uniformization. The horizon is split into chunks with
/// `Lambda dt <= 32` so Poisson weights stay in range; within a chunk the
/// series is truncated once the accumulated Poisson mass exceeds
/// `1 - 1e-14`.
///
/// The generator acts on functions: `result[i] = E_i[v(X_t)]`. For the
/// symmetric generators built in this module that is identical to evolving a
/// distribution, so probability vectors stay probability vectors; for the
/// asymmetric radial chain only the function reading applies (entry 0 of
/// `e^{tA} delta_0` is still the return probability, read either way).
pub fn semigroup_apply(gen: &GeneratorMatrix, v: &[f64], t: f64) -> Result<Vec<f64>> {
    if t < 0.0 {
        return Err(Error::OutOfRange { what: "time", details: format!("t={t}") });
    }
    let mut x = v.to_vec();
    if t == 0.0 {
        return Ok(x);
    }
    let lambda = (0..gen.dim()).map(|i| gen.exit_rate(i)).fold(0.0, f64::max);
    if lambda == 0.0 {
        return Ok(x);
    }
    let chunks = ((lambda * t) / 32.0).ceil().max(1.0);
    let dt = t / chunks;
    let a = lambda * dt;
    let mut term = vec![0.0; gen.dim()];
    let mut scratch = vec![0.0; gen.dim()];
    for _ in 0..chunks as usize {
        // One chunk: sum_k e^{-a} a^k / k! P^k x with P = I + A/Lambda.
        let mut weight = (-a).exp();
        let mut mass = weight;
        term.copy_from_slice(&x);
        let mut acc: Vec<f64> = term.iter().map(|&u| u * weight).collect();
        let mut k = 0u64;
        while 1.0 - mass > 1e-14 {
            k += 1;
            // term <- P term
            gen.apply(&term, &mut scratch);
            for i in 0..gen.dim() {
                term[i] += scratch[i] / lambda;
            }
            weight *= a / k as f64;
            mass += weight;
            for i in 0..gen.dim() {
                acc[i] += weight * term[i];
            }
            if k > 100_000 {
                return Err(Error::SolverFailure("uniformization series did not converge".into()));
            }
        }
        x = acc;
    }
    Ok(x)
}

/// Solves `(lambda I - A) beta = delta_source` by conjugate gradients.
/// The system is symmetric positive definite for `lambda > 0`.
pub fn resolvent_solve(gen: &GeneratorMatrix, lambda: f64, source: usize) -> Result<Vec<f64>> {
    if !(lambda > 0.0) {
        return Err(Error::OutOfRange { what: "lambda", details: format!("lambda={lambda}, need > 0") });
    }
    let n = gen.dim();
    let mut b = vec![0.0; n];
    b[source] = 1.0;
    solve_shifted(gen, lambda, &b)
}

/// CG for `(lambda I - A) x = b`.
pub fn solve_shifted(gen: &GeneratorMatrix, lambda: f64, b: &[f64]) -> Result<Vec<f64>> {
    let n = gen.dim();
    let mul = |x: &[f64], out: &mut [f64]| {
        gen.apply(x, out);
        for i in 0..n {
            out[i] = lambda * x[i] - out[i];
        }
    };
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let norm_b = dot(b, b).sqrt().max(f64::MIN_POSITIVE);
    let mut rs = dot(&r, &r);
    let tol = 1e-14 * norm_b;
    for _iter in 0..10 * n + 100 {
        if rs.sqrt() <= tol {
            return Ok(x);
        }
        mul(&p, &mut ap);
        let alpha = rs / dot(&p, &ap);
        if !alpha.is_finite() {
            return Err(Error::SolverFailure("CG breakdown".into()));
        }
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rs_new = dot(&r, &r);
        let beta = rs_new / rs;
        rs = rs_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    if rs.sqrt() <= 1e-10 * norm_b {
        return Ok(x);
    }
    Err(Error::SolverFailure(format!("CG stalled at residual {}", rs.sqrt())))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Expected total time the tree walk (jump rate d+1) spends at its start:
/// integral of the return probability. Jump-chain return probability 1/d,
/// expected visit count d/(d-1), mean holding time 1/(d+1), giving
/// d/(d^2 - 1). The tests validate this against Monte Carlo occupation and a
/// radial chain before anything is allowed to cite it.
pub fn green_function_srw(d: u8) -> Result<f64> {
    if d < 2 {
        return Err(Error::OutOfRange { what: "degree", details: format!("d={d}") });
    }
    let d = d as f64;
    Ok(d / (d * d - 1.0))
}

/// Long-run variance of the occupation additive functional:
/// 2 p (1-p) * green_function_srw(d).
pub fn sigma_occupation_exact(d: u8, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::OutOfRange { what: "density", details: format!("p={p}") });
    }
    Ok(2.0 * p * (1.0 - p) * green_function_srw(d)?)
}

/// Radial birth-death chain of the distance-from-start of the tree walk:
/// 0 -> 1 at rate d+1, k -> k+1 at rate d and k -> k-1 at rate 1 for
/// 1 <= k < rmax, reflecting at rmax. Entry 0 of the semigroup applied to
/// delta_0 is the walk's exact return probability, which makes this tiny
/// chain an independent oracle for heat-kernel and variance calibration.
pub fn build_distance_chain(d: u8, rmax: usize) -> GeneratorMatrix {
    let df = d as f64;
    let mut transitions = Vec::new();
    transitions.push((0u32, 1u32, df + 1.0));
    for k in 1..rmax {
        transitions.push((k as u32, (k + 1) as u32, df));
        transitions.push((k as u32, (k - 1) as u32, 1.0));
    }
    transitions.push((rmax as u32, (rmax - 1) as u32, 1.0));
    GeneratorMatrix::from_transitions(rmax + 1, transitions)
}

/// Same radial chain but for the walk on the radius-R ball (boundary vertices
/// have only their father edge), i.e. reflecting exactly at R.
pub fn build_ball_distance_chain(d: u8, radius: usize) -> GeneratorMatrix {
    build_distance_chain(d, radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use crate::tree::build_ball;

    #[test]
    fn ssep_generator_shape_on_star() {
        let ball = build_ball(2, 1).unwrap();
        let gen = build_ssep_generator(&ball).unwrap();
        assert_eq!(gen.dim(), 16);
        assert!(gen.max_row_sum_defect() < 1e-12);
        // All-equal configurations are absorbing.
        assert_eq!(gen.exit_rate(0), 0.0);
        assert_eq!(gen.exit_rate(15), 0.0);
        // Root occupied, leaves vacant: all 3 edges active.
        assert_eq!(gen.row(1).len(), 3);
        assert_eq!(gen.exit_rate(1), 3.0);
    }

    #[test]
    fn ssep_sectors_are_invariant() {
        let ball = build_ball(2, 2).unwrap();
        let gen = build_ssep_generator(&ball).unwrap();
        for i in 0..gen.dim() {
            let ones = (i as u64).count_ones();
            for &(j, _) in gen.row(i) {
                assert_eq!((j as u64).count_ones(), ones);
            }
        }
    }

    #[test]
    fn ssep_sector_uniform_is_stationary() {
        // The uniform vector on a fixed-particle-number sector is invariant.
        let ball = build_ball(2, 1).unwrap();
        let gen = build_ssep_generator(&ball).unwrap();
        let sector: Vec<usize> = (0..16).filter(|s: &usize| s.count_ones() == 2).collect();
        let mut v = vec![0.0; 16];
        for &s in &sector {
            v[s] = 1.0 / sector.len() as f64;
        }
        let w = semigroup_apply(&gen, &v, 1.3).unwrap();
        for s in 0..16 {
            assert!((w[s] - v[s]).abs() < 1e-10, "state {s}: {} vs {}", w[s], v[s]);
        }
    }

    #[test]
    fn ssep_generator_is_symmetric() {
        let ball = build_ball(2, 1).unwrap();
        let gen = build_ssep_generator(&ball).unwrap();
        let mut dense = vec![vec![0.0; 16]; 16];
        for i in 0..16 {
            for &(j, r) in gen.row(i) {
                dense[i][j as usize] += r;
            }
        }
        for i in 0..16 {
            for j in 0..16 {
                assert!((dense[i][j] - dense[j][i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn stirring_m1_is_ball_walk() {
        let ball = build_ball(2, 1).unwrap();
        let (space, gen) = build_stirring_generator(&ball, 1).unwrap();
        assert_eq!(space.len(), 4);
        // Root jumps to each leaf at rate 1; leaves only back to the root.
        assert_eq!(gen.exit_rate(0), 3.0);
        for leaf in 1..4 {
            assert_eq!(gen.exit_rate(leaf), 1.0);
        }
    }

    #[test]
    fn stirring_m2_star_counts() {
        let ball = build_ball(2, 1).unwrap();
        let (space, gen) = build_stirring_generator(&ball, 2).unwrap();
        assert_eq!(space.len(), 12);
        assert!(gen.max_row_sum_defect() < 1e-12);
        // (root, leaf0): root can move to leaves 1,2; leaf0 is blocked from
        // the occupied root except via the swap; total rate 3.
        let idx = space.index_of(&[0, 1]).unwrap();
        assert_eq!(gen.exit_rate(idx as usize), 3.0);
        // The swap transition to (leaf0, root) is present.
        let swapped = space.index_of(&[1, 0]).unwrap();
        assert!(gen.row(idx as usize).iter().any(|&(j, r)| j == swapped && r == 1.0));
    }

    #[test]
    fn uniformization_basics() {
        let ball = build_ball(2, 1).unwrap();
        let (_, gen) = build_stirring_generator(&ball, 1).unwrap();
        let v = vec![1.0, 0.0, 0.0, 0.0];
        // t = 0 is the identity.
        assert_eq!(semigroup_apply(&gen, &v, 0.0).unwrap(), v);
        // Probability is preserved.
        let w = semigroup_apply(&gen, &v, 1.7).unwrap();
        let sum: f64 = w.iter().sum();
        assert!((sum - 1.0).abs() < 1e-10);
        assert!(w.iter().all(|&x| x >= 0.0));
        // Uniform distribution is stationary (symmetric generator).
        let u = vec![0.25; 4];
        let wu = semigroup_apply(&gen, &u, 2.3).unwrap();
        for x in wu {
            assert!((x - 0.25).abs() < 1e-10);
        }
    }

    #[test]
    fn uniformization_handles_long_horizons() {
        // Constants are preserved (row sums vanish) even across many chunks,
        // and return probabilities stay inside [0, 1].
        let gen = build_distance_chain(2, 60);
        let ones = vec![1.0; 61];
        let w = semigroup_apply(&gen, &ones, 200.0).unwrap();
        for x in &w {
            assert!((x - 1.0).abs() < 1e-9, "{x}");
        }
        let mut delta = vec![0.0; 61];
        delta[0] = 1.0;
        let q = semigroup_apply(&gen, &delta, 200.0).unwrap();
        assert!(q[0] >= 0.0 && q[0] <= 1.0);
        // Long-horizon check on a symmetric generator: probability vectors
        // stay stochastic.
        let ball = build_ball(2, 1).unwrap();
        let (_, sym) = build_stirring_generator(&ball, 1).unwrap();
        let v = vec![1.0, 0.0, 0.0, 0.0];
        let p = semigroup_apply(&sym, &v, 150.0).unwrap();
        let sum: f64 = p.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9, "sum {sum}");
        for x in &p {
            assert!((x - 0.25).abs() < 1e-9, "mixed to uniform: {x}");
        }
    }

    #[test]
    fn resolvent_star_hand_solve() {
        // (lambda I - A) beta = delta_root on the 4-state star chain with
        // lambda = 1 gives beta = (2/5, 1/5, 1/5, 1/5).
        let ball = build_ball(2, 1).unwrap();
        let (_, gen) = build_stirring_generator(&ball, 1).unwrap();
        let beta = resolvent_solve(&gen, 1.0, 0).unwrap();
        assert!((beta[0] - 0.4).abs() < 1e-12);
        for leaf in 1..4 {
            assert!((beta[leaf] - 0.2).abs() < 1e-12);
        }
        // Normalization lambda * sum(beta) = 1.
        let total: f64 = beta.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn resolvent_normalization_random_instances() {
        for (d, r, m, lambda) in [(2u8, 2u32, 1usize, 0.7), (2, 1, 2, 1.3), (3, 1, 1, 0.25)] {
            let ball = build_ball(d, r).unwrap();
            let (space, gen) = build_stirring_generator(&ball, m).unwrap();
            let beta = resolvent_solve(&gen, lambda, space.len() / 2).unwrap();
            let total: f64 = beta.iter().sum();
            assert!((lambda * total - 1.0).abs() < 1e-10, "d={d} r={r} m={m}");
        }
    }

    #[test]
    fn resolvent_large_lambda_limit() {
        let ball = build_ball(2, 1).unwrap();
        let (_, gen) = build_stirring_generator(&ball, 1).unwrap();
        let lambda = 1e3;
        let beta = resolvent_solve(&gen, lambda, 0).unwrap();
        assert!((lambda * beta[0] - 1.0).abs() < 0.01);
    }

    #[test]
    fn green_function_values() {
        assert!((green_function_srw(2).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((green_function_srw(3).unwrap() - 3.0 / 8.0).abs() < 1e-15);
        assert!(green_function_srw(4).unwrap() < green_function_srw(3).unwrap());
        assert!(green_function_srw(3).unwrap() < green_function_srw(2).unwrap());
        assert!(green_function_srw(1).is_err());
    }

    #[test]
    fn green_function_matches_distance_chain_integral() {
        // Independent numerical validation of d/(d^2-1): integrate the
        // radial chain's return probability by fine trapezoid out to U, then
        // bound the tail by the heat-kernel decay.
        for d in [2u8, 3] {
            let gen = build_distance_chain(d, 240);
            let mut v = vec![0.0; gen.dim()];
            v[0] = 1.0;
            let rate = ((d as f64).sqrt() - 1.0).powi(2);
            let u_max = 5.5 / rate; // e^{-5.5} tail weight
            let steps = 2200usize;
            let h = u_max / steps as f64;
            // March the semigroup forward in equal steps, trapezoid on q(0).
            let mut q_prev = 1.0;
            let mut integral = 0.0;
            let mut state = v;
            for _ in 0..steps {
                state = semigroup_apply(&gen, &state, h).unwrap();
                let q = state[0];
                integral += 0.5 * (q_prev + q) * h;
                q_prev = q;
            }
            let tail_bound = (-u_max * rate).exp() / rate;
            let exact = green_function_srw(d).unwrap();
            assert!(
                (integral - exact).abs() < tail_bound + 2e-4,
                "d={d}: integral {integral} vs {exact} (tail {tail_bound})"
            );
        }
    }

    #[test]
    fn green_function_matches_walk_occupation_mc() {
        // Monte Carlo on the infinite tree: total time at the start vertex up
        // to U, which estimates the integral of the return probability.
        use crate::stirring::walk_occupation_at_start;
        for d in [2u8, 3] {
            let rate = ((d as f64).sqrt() - 1.0).powi(2);
            let u_max = 6.0 / rate;
            let reps = 40_000u64;
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for i in 0..reps {
                let mut rng = RngStream::new(7_000 + d as u64, i);
                let occ = walk_occupation_at_start(d, u_max, &mut rng);
                sum += occ;
                sumsq += occ * occ;
            }
            let mean = sum / reps as f64;
            let var = (sumsq / reps as f64 - mean * mean).max(0.0);
            let se = (var / reps as f64).sqrt();
            let tail = (-u_max * rate).exp() / rate;
            let exact = green_function_srw(d).unwrap();
            assert!(
                (mean - exact).abs() < 3.0 * se + tail,
                "d={d}: occupation {mean} vs {exact} (se {se})"
            );
        }
    }

    #[test]
    fn sigma_occupation_values() {
        assert!((sigma_occupation_exact(2, 0.5).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let a = sigma_occupation_exact(2, 0.2).unwrap();
        let b = sigma_occupation_exact(2, 0.8).unwrap();
        assert!((a - b).abs() < 1e-15);
        assert!(sigma_occupation_exact(2, 1e-12).unwrap() < 1e-11);
    }

    #[test]
    fn coordinate_export_contains_all_entries() {
        let ball = build_ball(2, 1).unwrap();
        let (_, gen) = build_stirring_generator(&ball, 1).unwrap();
        let text = gen.to_coordinate_text();
        let lines: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        let nnz: usize = (0..gen.dim()).map(|i| gen.row(i).len() + 1).sum();
        assert_eq!(lines.len(), nnz);
    }
}
