//! Martingale decomposition of the additive functional.
//!
//! For a centered local observable F with resolvent-weighted sum
//! `G = G_lambda^F`, the generator satisfies `L G = lambda G - F` exactly on
//! the ball (the identity only uses Kolmogorov–Chapman on the chain that
//! generates the stirring semigroup, so truncation does not break it). The
//! additive functional then splits pathwise as
//!
//! ```text
//! xi_t = M_t - ( G(eta_t) - G(eta_0) - lambda * int_0^t G(eta_s) ds )
//! M_t  = G(eta_t) - G(eta_0) - int_0^t L G(eta_s) ds
//! ```
//!
//! an algebraic identity along every realized trajectory, so the residual
//! `xi - M + remainder` doubles as an end-to-end engine test: with an exact
//! resolvent it must vanish to accumulation rounding.
//!
//! Edge-sum convention, fixed here once: the generator's double sum over
//! ordered neighbor pairs counts each unordered edge twice and carries a 1/2,
//! so every generator-type sum in this module runs over unordered edges with
//! prefactor 1:
//!
//! ```text
//! L g (eta)        = sum_edges ( g(eta^e) - g(eta) )
//! carre du champ   = sum_edges ( g(eta^e) - g(eta) )^2    (d<M>/dt for the Dynkin martingale)
//! Feynman-Kac rate = sum_edges ( e^{theta (g(eta^e)-g(eta))} - 1 )
//! ```
//!
//! All three are produced by [`GProvider::edge_deltas`]; the unit tests pin
//! the convention against the resolvent identity and a two-state chain.

use crate::engine::{Configuration, EventStream};
use crate::error::{Error, Result};
use crate::observable::LocalFunction;
use crate::rng::RngStream;
use crate::stirring::{exact_beta_capped, ResolventTable, StirringTuple};
use crate::tree::Ball;

/// Per-path outcome of the decomposition.
#[derive(Debug, Clone, Copy)]
pub struct DecompositionRecord {
    pub path_id: u64,
    pub t: f64,
    pub lambda: f64,
    /// Additive functional xi_t.
    pub xi: f64,
    /// Dynkin martingale M_t.
    pub martingale: f64,
    /// G(eta_t) - G(eta_0) - lambda * int G.
    pub remainder: f64,
    /// Quadratic variation J_t: integral of the carre du champ of G.
    pub quadratic_variation: f64,
    /// xi - M + remainder; zero to rounding when G is exact.
    pub residual: f64,
}

impl DecompositionRecord {
    pub fn csv_header() -> &'static str {
        "path_id,t,lambda,xi,martingale,remainder,quadratic_variation,residual"
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.path_id,
            self.t,
            self.lambda,
            self.xi,
            self.martingale,
            self.remainder,
            self.quadratic_variation,
            self.residual
        )
    }
}

/// Supplier of G and its per-edge increments along a trajectory.
pub trait GProvider {
    fn g(&self, eta: &Configuration) -> f64;

    /// out[e] = G(eta^e) - G(eta) for every ball edge e.
    fn edge_deltas(&self, eta: &Configuration, out: &mut [f64]);

    fn lambda(&self) -> f64;
}

/// Exact provider backed by the resolvent table.
///
/// When the configuration space fits (2^|V| within the cap) G is tabulated
/// over all configurations, making every query O(1); otherwise G is summed
/// over tuples on demand and edge increments touch only the tuples meeting
/// the edge.
pub struct ExactResolvent {
    ball_edges: Vec<(u32, u32)>,
    lambda: f64,
    strategy: Strategy,
}

enum Strategy {
    ConfigTable {
        g: Vec<f64>,
    },
    PerEdge {
        f: LocalFunction,
        table: ResolventTable,
        /// For each edge, indices of tuples containing an endpoint.
        touching: Vec<Vec<u32>>,
    },
}

/// Cap on tabulated configuration spaces (2^|V| entries).
pub const DEFAULT_G_TABLE_CAP: u128 = 1 << 22;

impl ExactResolvent {
    pub fn new(ball: &Ball, f: &LocalFunction, lambda: f64) -> Result<Self> {
        Self::with_caps(ball, f, lambda, DEFAULT_G_TABLE_CAP, crate::oracle::DEFAULT_TUPLE_STATE_CAP)
    }

    pub fn with_caps(
        ball: &Ball,
        f: &LocalFunction,
        lambda: f64,
        table_cap: u128,
        tuple_cap: u128,
    ) -> Result<Self> {
        let source = StirringTuple::new(f.sites().to_vec())?;
        let table = exact_beta_capped(ball, &source, lambda, tuple_cap)?;
        let nv = ball.vertex_count();
        let n_tuples = table.space().len() as u128;
        let configs = 1u128 << nv.min(126);
        let strategy = if nv <= 63 && configs <= table_cap && configs * n_tuples <= 200_000_000 {
            let mut g = vec![0.0; configs as usize];
            for (i, tuple) in table.space().tuples().iter().enumerate() {
                let beta = table.values()[i];
                if beta == 0.0 {
                    continue;
                }
                for (mask, slot) in g.iter_mut().enumerate() {
                    let mut pattern = 0usize;
                    for (j, &v) in tuple.iter().enumerate() {
                        pattern |= ((mask >> v) & 1) << j;
                    }
                    *slot += f.value_at_pattern(pattern) * beta;
                }
            }
            Strategy::ConfigTable { g }
        } else {
            let mut touching = vec![Vec::new(); ball.edge_count()];
            for (e, &(a, b)) in ball.edges().iter().enumerate() {
                for (i, tuple) in table.space().tuples().iter().enumerate() {
                    if tuple.contains(&a) || tuple.contains(&b) {
                        touching[e].push(i as u32);
                    }
                }
            }
            Strategy::PerEdge { f: f.clone(), table, touching }
        };
        Ok(ExactResolvent { ball_edges: ball.edges().to_vec(), lambda, strategy })
    }
}

impl GProvider for ExactResolvent {
    fn g(&self, eta: &Configuration) -> f64 {
        match &self.strategy {
            Strategy::ConfigTable { g } => g[eta.to_mask() as usize],
            Strategy::PerEdge { f, table, .. } => {
                let mut acc = 0.0;
                for (i, tuple) in table.space().tuples().iter().enumerate() {
                    let mut pattern = 0usize;
                    for (j, &v) in tuple.iter().enumerate() {
                        pattern |= (eta.get(v) as usize) << j;
                    }
                    acc += f.value_at_pattern(pattern) * table.values()[i];
                }
                acc
            }
        }
    }

    fn edge_deltas(&self, eta: &Configuration, out: &mut [f64]) {
        match &self.strategy {
            Strategy::ConfigTable { g } => {
                let mask = eta.to_mask() as usize;
                let base = g[mask];
                for (e, &(a, b)) in self.ball_edges.iter().enumerate() {
                    if eta.get(a) == eta.get(b) {
                        out[e] = 0.0;
                    } else {
                        out[e] = g[mask ^ (1 << a) ^ (1 << b)] - base;
                    }
                }
            }
            Strategy::PerEdge { f, table, touching } => {
                for (e, &(a, b)) in self.ball_edges.iter().enumerate() {
                    if eta.get(a) == eta.get(b) {
                        out[e] = 0.0;
                        continue;
                    }
                    let mut acc = 0.0;
                    for &i in &touching[e] {
                        let tuple = table.space().tuple(i);
                        let mut pattern = 0usize;
                        let mut swapped = 0usize;
                        for (j, &v) in tuple.iter().enumerate() {
                            let bit = eta.get(v) as usize;
                            pattern |= bit << j;
                            let sbit = if v == a {
                                eta.get(b) as usize
                            } else if v == b {
                                eta.get(a) as usize
                            } else {
                                bit
                            };
                            swapped |= sbit << j;
                        }
                        acc += (f.value_at_pattern(swapped) - f.value_at_pattern(pattern))
                            * table.values()[i as usize];
                    }
                    out[e] = acc;
                }
            }
        }
    }

    fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// Monte Carlo provider: G sampled by the exponential-time representation.
/// Residual contracts weaken from exact to statistical with this provider.
pub struct McResolvent<'a> {
    ball: &'a Ball,
    f: LocalFunction,
    lambda: f64,
    reps: u64,
    seed: (u64, u64),
}

impl<'a> McResolvent<'a> {
    pub fn new(ball: &'a Ball, f: &LocalFunction, lambda: f64, reps: u64, seed: (u64, u64)) -> Self {
        McResolvent { ball, f: f.clone(), lambda, reps, seed }
    }
}

impl GProvider for McResolvent<'_> {
    fn g(&self, eta: &Configuration) -> f64 {
        // Deterministic per provider: the same sub-stream drives every query,
        // so repeated queries at the same eta agree.
        let mut rng = RngStream::new(self.seed.0, self.seed.1);
        crate::stirring::resolvent_mc_g(self.ball, eta, &self.f, self.lambda, self.reps, &mut rng)
            .map(|(v, _)| v)
            .unwrap_or(f64::NAN)
    }

    fn edge_deltas(&self, eta: &Configuration, out: &mut [f64]) {
        let base = self.g(eta);
        let mut swapped = eta.clone();
        for (e, &(a, b)) in self.ball.edges().iter().enumerate() {
            if eta.get(a) == eta.get(b) {
                out[e] = 0.0;
                continue;
            }
            swapped.swap_edge(a, b);
            out[e] = self.g(&swapped) - base;
            swapped.swap_edge(a, b);
        }
    }

    fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// Generator applied to an arbitrary function of the configuration:
/// `sum over unordered edges of g(eta^e) - g(eta)`.
pub fn apply_generator<Gf>(ball: &Ball, g: Gf, eta: &Configuration) -> f64
where
    Gf: Fn(&Configuration) -> f64,
{
    let base = g(eta);
    let mut scratch = eta.clone();
    let mut acc = 0.0;
    for &(a, b) in ball.edges() {
        if eta.get(a) == eta.get(b) {
            continue;
        }
        scratch.swap_edge(a, b);
        acc += g(&scratch) - base;
        scratch.swap_edge(a, b);
    }
    acc
}

/// Max over the sampled configurations of |L G - lambda G + F|, with G built
/// exactly from the resolvent table. Zero (to solver tolerance) certifies the
/// generator identity on the truncated dynamics.
pub fn verify_generator_identity(
    ball: &Ball,
    f: &LocalFunction,
    lambda: f64,
    etas: &[Configuration],
) -> Result<f64> {
    let provider = ExactResolvent::new(ball, f, lambda)?;
    let bound = f.bind(ball)?;
    let mut deltas = vec![0.0; ball.edge_count()];
    let mut worst: f64 = 0.0;
    for eta in etas {
        provider.edge_deltas(eta, &mut deltas);
        let lg: f64 = deltas.iter().sum();
        let g = provider.g(eta);
        let residual = (lg - lambda * g + bound.eval(eta)).abs();
        worst = worst.max(residual);
    }
    Ok(worst)
}

/// Every configuration of a small ball (2^|V| of them).
pub fn exhaustive_configurations(ball: &Ball) -> Result<Vec<Configuration>> {
    let nv = ball.vertex_count();
    if nv > 20 {
        return Err(Error::CapExceeded { needed: 1u128 << nv, cap: 1 << 20 });
    }
    Ok((0..(1u64 << nv)).map(|mask| Configuration::from_mask(ball, mask)).collect())
}

/// Decomposes one path, integrating every piecewise-constant integrand
/// exactly over the inter-event intervals.
pub fn decompose_path(
    ball: &Ball,
    eta0: &Configuration,
    log: &crate::engine::EventLog,
    f: &LocalFunction,
    t: f64,
    provider: &impl GProvider,
) -> Result<DecompositionRecord> {
    if t > log.horizon() {
        return Err(Error::OutOfRange {
            what: "time",
            details: format!("t={t} beyond horizon {}", log.horizon()),
        });
    }
    let bound = f.bind(ball)?;
    let mut state = PathAccumulator::new(ball, provider, eta0, &bound);
    let mut prev = 0.0;
    for ev in log.events() {
        if ev.time > t {
            break;
        }
        state.advance(ball, provider, &bound, ev.time - prev, ev.edge);
        prev = ev.time;
    }
    state.finish(ball, provider, t - prev);
    Ok(state.into_record(t, provider.lambda()))
}

/// Quadratic variation J_t alone (same exact path integrals).
pub fn quadratic_variation(
    ball: &Ball,
    eta0: &Configuration,
    log: &crate::engine::EventLog,
    f: &LocalFunction,
    t: f64,
    provider: &impl GProvider,
) -> Result<f64> {
    Ok(decompose_path(ball, eta0, log, f, t, provider)?.quadratic_variation)
}

/// Shared per-path integrator for the decomposition quantities.
struct PathAccumulator {
    eta: Configuration,
    g0: f64,
    g: f64,
    f_value: f64,
    xi: f64,
    int_lg: f64,
    int_g: f64,
    j: f64,
    deltas: Vec<f64>,
}

impl PathAccumulator {
    fn new(
        ball: &Ball,
        provider: &impl GProvider,
        eta0: &Configuration,
        bound: &crate::observable::BoundFunction,
    ) -> Self {
        let g0 = provider.g(eta0);
        PathAccumulator {
            eta: eta0.clone(),
            g0,
            g: g0,
            f_value: bound.eval(eta0),
            xi: 0.0,
            int_lg: 0.0,
            int_g: 0.0,
            j: 0.0,
            deltas: vec![0.0; ball.vertex_count() - 1],
        }
    }

    #[inline]
    fn integrate_interval(&mut self, provider: &impl GProvider, dt: f64) {
        provider.edge_deltas(&self.eta, &mut self.deltas);
        let mut lg = 0.0;
        let mut carre = 0.0;
        for &d in &self.deltas {
            lg += d;
            carre += d * d;
        }
        self.xi += self.f_value * dt;
        self.int_lg += lg * dt;
        self.int_g += self.g * dt;
        self.j += carre * dt;
    }

    fn advance(
        &mut self,
        ball: &Ball,
        provider: &impl GProvider,
        bound: &crate::observable::BoundFunction,
        dt: f64,
        edge: u32,
    ) {
        self.integrate_interval(provider, dt);
        // The fired edge's increment was just computed for the pre-swap state.
        self.g += self.deltas[edge as usize];
        let (a, b) = ball.edge_endpoints(edge);
        self.eta.swap_edge(a, b);
        if bound.edge_touches_support(edge) {
            self.f_value = bound.eval(&self.eta);
        }
    }

    fn finish(&mut self, _ball: &Ball, provider: &impl GProvider, dt: f64) {
        self.integrate_interval(provider, dt);
        // Kill any incremental drift in G with one exact evaluation.
        self.g = provider.g(&self.eta);
    }

    fn into_record(self, t: f64, lambda: f64) -> DecompositionRecord {
        let martingale = self.g - self.g0 - self.int_lg;
        let remainder = self.g - self.g0 - lambda * self.int_g;
        DecompositionRecord {
            path_id: 0,
            t,
            lambda,
            xi: self.xi,
            martingale,
            remainder,
            quadratic_variation: self.j,
            residual: self.xi - martingale + remainder,
        }
    }
}

/// Sample-mean check of the Feynman–Kac exponential martingale at time t:
///
/// ```text
/// M = exp{ theta (G(eta_t) - G(eta_0)) - int_0^t sum_edges (e^{theta dG_e(eta_u)} - 1) du }
/// ```
///
/// with `theta = c a_t / t` and `lambda = t^{-1/2}`. Returns (mean, SE); the
/// mean is exactly 1 for every starting configuration, so the estimate must
/// sit within noise of 1.
#[allow(clippy::too_many_arguments)]
pub fn exp_martingale_check(
    ball: &Ball,
    f: &LocalFunction,
    p: f64,
    c: f64,
    t: f64,
    a_t: f64,
    reps: u64,
    master_seed: u64,
) -> Result<(f64, f64)> {
    let lambda = t.powf(-0.5);
    let theta = c * a_t / t;
    // |theta (G(eta_t)-G(eta_0))| <= 2 |theta| K_H / lambda; refuse exponents
    // that could overflow or lose all precision.
    let worst_exponent = 2.0 * theta.abs() * f.sup_norm() / lambda;
    if worst_exponent > 40.0 {
        return Err(Error::OverflowGuard(format!(
            "exponential martingale exponent bound {worst_exponent:.1} > 40; reduce |c| or a_t"
        )));
    }
    let provider = ExactResolvent::new(ball, f, lambda)?;
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for i in 0..reps {
        let mut rng = RngStream::new(master_seed, i);
        let eta0 = crate::engine::sample_nu_p(ball, p, &mut rng)?;
        let mut eta = eta0.clone();
        let g0 = provider.g(&eta0);
        let mut g = g0;
        let mut deltas = vec![0.0; ball.edge_count()];
        let mut exponent = 0.0;
        let mut prev = 0.0;
        let mut stream = EventStream::new(ball, t, &mut rng);
        for ev in &mut stream {
            provider.edge_deltas(&eta, &mut deltas);
            let rate: f64 = deltas.iter().map(|&d| (theta * d).exp() - 1.0).sum();
            exponent -= rate * (ev.time - prev);
            prev = ev.time;
            g += deltas[ev.edge as usize];
            let (a, b) = ball.edge_endpoints(ev.edge);
            eta.swap_edge(a, b);
        }
        provider.edge_deltas(&eta, &mut deltas);
        let rate: f64 = deltas.iter().map(|&d| (theta * d).exp() - 1.0).sum();
        exponent -= rate * (t - prev);
        let m = (theta * (g - g0) + exponent).exp();
        sum += m;
        sumsq += m * m;
    }
    let mean = sum / reps as f64;
    let var = (sumsq / reps as f64 - mean * mean).max(0.0);
    Ok((mean, (var / reps as f64).sqrt()))
}
