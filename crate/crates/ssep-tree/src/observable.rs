//! Local observables and their additive functionals.
//!
//! A [`LocalFunction`] is a finite-support function of the configuration,
//! given by its distinct sites `x_1..x_m` and a full table over the 2^m
//! occupancy patterns. Along a realized trajectory the observable is
//! piecewise constant between clock events, so its time integral (the
//! additive functional) is accumulated exactly: value times interval length,
//! with only events touching the support able to change the value.
//!
//! Estimators downstream (variance, CLT, tail rates) require the observable
//! to be centered under the density-p product measure. Centering is never
//! silent: callers either construct centered functions or call
//! [`LocalFunction::center`] explicitly, and the estimators fail loudly on
//! uncentered input.

use crate::engine::{Configuration, EventStream};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::tree::{Ball, VertexAddr};

/// F(eta) = H(eta(x_1), ..., eta(x_m)) with a total table over {0,1}^m.
///
/// Table indexing: bit j of the index is the occupancy of `sites[j]`
/// (site 0 is the least significant bit).
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFunction {
    sites: Vec<VertexAddr>,
    table: Vec<f64>,
    /// Cached sup norm max |H|.
    sup: f64,
}

impl LocalFunction {
    pub fn new(sites: Vec<VertexAddr>, table: Vec<f64>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::OutOfRange { what: "sites", details: "m >= 1 required".into() });
        }
        for (i, s) in sites.iter().enumerate() {
            if sites[..i].contains(s) {
                return Err(Error::DuplicateSites);
            }
        }
        let m = sites.len();
        if table.len() != 1 << m {
            return Err(Error::OutOfRange {
                what: "table",
                details: format!("need {} entries for m={}, got {}", 1 << m, m, table.len()),
            });
        }
        if table.iter().any(|v| !v.is_finite()) {
            return Err(Error::OutOfRange { what: "table", details: "non-finite entry".into() });
        }
        let sup = table.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        Ok(LocalFunction { sites, table, sup })
    }

    /// The occupation observable F(eta) = eta(x) - p.
    pub fn occupation(x: VertexAddr, p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::OutOfRange { what: "density", details: format!("p={p}") });
        }
        LocalFunction::new(vec![x], vec![-p, 1.0 - p])
    }

    /// Product of two occupation variables, centered under nu_p:
    /// F(eta) = eta(x) eta(y) - p^2.
    pub fn centered_pair_product(x: VertexAddr, y: VertexAddr, p: f64) -> Result<Self> {
        LocalFunction::new(vec![x, y], vec![-p * p, -p * p, -p * p, 1.0 - p * p])
    }

    pub fn sites(&self) -> &[VertexAddr] {
        &self.sites
    }

    pub fn arity(&self) -> usize {
        self.sites.len()
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    /// Sup norm K_H = max |H|.
    pub fn sup_norm(&self) -> f64 {
        self.sup
    }

    pub fn value_at_pattern(&self, pattern: usize) -> f64 {
        self.table[pattern]
    }

    /// Largest distance from the root to a site; the support radius fed to
    /// the truncation-radius policy.
    pub fn support_radius(&self) -> u32 {
        self.sites.iter().map(|s| s.depth() as u32).max().unwrap_or(0)
    }

    /// Exact mean under the density-p product measure:
    /// sum_w H(w) p^{|w|} (1-p)^{m-|w|}.
    pub fn mean_under_nu_p(&self, p: f64) -> f64 {
        let m = self.arity();
        let mut mean = 0.0;
        for w in 0..(1usize << m) {
            let ones = w.count_ones() as i32;
            mean += self.table[w] * p.powi(ones) * (1.0 - p).powi(m as i32 - ones);
        }
        mean
    }

    /// Subtracts the nu_p mean from every table entry; idempotent.
    pub fn center(&self, p: f64) -> LocalFunction {
        let mean = self.mean_under_nu_p(p);
        let table = self.table.iter().map(|v| v - mean).collect();
        LocalFunction::new(self.sites.clone(), table).expect("centering preserves validity")
    }

    pub fn assert_centered(&self, p: f64) -> Result<()> {
        let mean = self.mean_under_nu_p(p);
        if mean.abs() > 1e-12 * self.sup.max(1.0) {
            return Err(Error::NotCentered { mean });
        }
        Ok(())
    }

    /// Table lookup at the occupancies of the sites.
    pub fn eval(&self, ball: &Ball, eta: &Configuration) -> Result<f64> {
        Ok(self.bind(ball)?.eval(eta))
    }

    /// Resolves sites to ball indices once, for hot loops.
    pub fn bind(&self, ball: &Ball) -> Result<BoundFunction> {
        let site_idx: Vec<u32> =
            self.sites.iter().map(|s| ball.require_index(s)).collect::<Result<_>>()?;
        // Per-edge flag: does the edge touch the support?
        let mut touches = vec![false; ball.edge_count()];
        for (e, &(a, b)) in ball.edges().iter().enumerate() {
            if site_idx.contains(&a) || site_idx.contains(&b) {
                touches[e] = true;
            }
        }
        Ok(BoundFunction { site_idx, table: self.table.clone(), sup: self.sup, touches })
    }

    /// File form: a `sites:` header of comma-separated dotted words, then one
    /// `bits,value` line per table entry (bit j of `bits`, left to right,
    /// is the occupancy of site j).
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        let words: Vec<String> = self.sites.iter().map(|s| s.to_dotted()).collect();
        out.push_str(&format!("sites: {}\n", words.join(",")));
        let m = self.arity();
        for w in 0..(1usize << m) {
            let bits: String =
                (0..m).map(|j| if (w >> j) & 1 == 1 { '1' } else { '0' }).collect();
            out.push_str(&format!("{},{}\n", bits, self.table[w]));
        }
        out
    }

    pub fn from_file_string(text: &str, d: u8) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::OutOfRange { what: "function file", details: "empty".into() })?;
        let rest = header.strip_prefix("sites:").ok_or_else(|| Error::OutOfRange {
            what: "function file",
            details: "missing `sites:` header".into(),
        })?;
        let sites: Vec<VertexAddr> = rest
            .trim()
            .split(',')
            .map(|w| VertexAddr::parse_dotted(w.trim(), d))
            .collect::<Result<_>>()?;
        let m = sites.len();
        let mut table = vec![f64::NAN; 1 << m];
        for line in lines {
            let (bits, value) = line.split_once(',').ok_or_else(|| Error::OutOfRange {
                what: "function file",
                details: format!("bad line {line:?}"),
            })?;
            if bits.len() != m {
                return Err(Error::OutOfRange {
                    what: "function file",
                    details: format!("bits {bits:?} arity mismatch"),
                });
            }
            let mut w = 0usize;
            for (j, ch) in bits.chars().enumerate() {
                match ch {
                    '1' => w |= 1 << j,
                    '0' => {}
                    _ => {
                        return Err(Error::OutOfRange {
                            what: "function file",
                            details: format!("bits {bits:?}"),
                        })
                    }
                }
            }
            table[w] = value.trim().parse().map_err(|_| Error::OutOfRange {
                what: "function file",
                details: format!("bad value in {line:?}"),
            })?;
        }
        if table.iter().any(|v| v.is_nan()) {
            return Err(Error::OutOfRange {
                what: "function file",
                details: "table not total: missing bits rows".into(),
            });
        }
        LocalFunction::new(sites, table)
    }
}

/// A local function with its sites resolved to indices of one ball.
#[derive(Debug, Clone)]
pub struct BoundFunction {
    site_idx: Vec<u32>,
    table: Vec<f64>,
    sup: f64,
    touches: Vec<bool>,
}

impl BoundFunction {
    #[inline]
    pub fn eval(&self, eta: &Configuration) -> f64 {
        self.table[self.pattern(eta)]
    }

    #[inline]
    pub fn pattern(&self, eta: &Configuration) -> usize {
        let mut w = 0usize;
        for (j, &s) in self.site_idx.iter().enumerate() {
            w |= (eta.get(s) as usize) << j;
        }
        w
    }

    #[inline]
    pub fn edge_touches_support(&self, edge: u32) -> bool {
        self.touches[edge as usize]
    }

    pub fn site_indices(&self) -> &[u32] {
        &self.site_idx
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup
    }
}

/// One sampled additive functional value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiRecord {
    pub path_id: u64,
    pub t: f64,
    pub xi: f64,
    /// (master seed, stream id) of the path that produced it.
    pub seed: (u64, u64),
}

impl XiRecord {
    pub fn csv_header() -> &'static str {
        "path_id,t,xi,seed"
    }

    pub fn to_csv_row(&self) -> String {
        format!("{},{},{},{}", self.path_id, self.t, self.xi, self.seed.1)
    }
}

/// Exact integral of s -> F(eta_s) over [0, t] along a materialized log.
///
/// The integrand is piecewise constant, so the integral is a finite sum of
/// value * interval length; only events touching supp(F) can change the
/// value, and only those trigger a table lookup.
pub fn accumulate_xi(
    ball: &Ball,
    eta0: &Configuration,
    log: &crate::engine::EventLog,
    f: &LocalFunction,
    t: f64,
) -> Result<XiRecord> {
    if t > log.horizon() {
        return Err(Error::OutOfRange {
            what: "time",
            details: format!("t={t} beyond horizon {}", log.horizon()),
        });
    }
    let bound = f.bind(ball)?;
    let mut eta = eta0.clone();
    let mut value = bound.eval(&eta);
    let mut xi = 0.0;
    let mut prev = 0.0;
    for ev in log.events() {
        if ev.time > t {
            break;
        }
        xi += value * (ev.time - prev);
        prev = ev.time;
        let (a, b) = ball.edge_endpoints(ev.edge);
        eta.swap_edge(a, b);
        if bound.edge_touches_support(ev.edge) {
            value = bound.eval(&eta);
        }
    }
    xi += value * (t - prev);
    Ok(XiRecord { path_id: 0, t, xi, seed: log.provenance() })
}

/// Streaming form of [`accumulate_xi`]: samples its own events, records xi at
/// each checkpoint time (ascending), and never materializes the log.
pub fn sample_xi_path(
    ball: &Ball,
    eta0: &Configuration,
    f: &BoundFunction,
    checkpoints: &[f64],
    rng: &mut RngStream,
) -> Vec<f64> {
    debug_assert!(checkpoints.windows(2).all(|w| w[0] <= w[1]));
    let horizon = *checkpoints.last().expect("at least one checkpoint");
    let mut eta = eta0.clone();
    let mut value = f.eval(&eta);
    let mut xi = 0.0;
    let mut prev = 0.0;
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next_cp = 0usize;
    let mut stream = EventStream::new(ball, horizon, rng);
    for ev in &mut stream {
        while next_cp < checkpoints.len() && checkpoints[next_cp] < ev.time {
            out.push(xi + value * (checkpoints[next_cp] - prev));
            next_cp += 1;
        }
        xi += value * (ev.time - prev);
        prev = ev.time;
        let (a, b) = ball.edge_endpoints(ev.edge);
        eta.swap_edge(a, b);
        if f.edge_touches_support(ev.edge) {
            value = f.eval(&eta);
        }
    }
    while next_cp < checkpoints.len() {
        out.push(xi + value * (checkpoints[next_cp] - prev));
        next_cp += 1;
    }
    out
}
