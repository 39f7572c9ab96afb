//! Estimators and tests for the limit behavior of the additive functional.
//!
//! The long-run variance is estimated two independent ways and the results
//! must agree: the direct route (sample variance of simulated xi_t over t)
//! and the duality route, which integrates the stationary autocovariance
//! `C(u) = E[F(eta_u) F(eta_0)]` written through the stirring semigroup.
//! Per walk sample the product-measure expectation is a small exact sum over
//! the occupancy patterns of the union of sites, so the only noise is the
//! walk itself. The duality route runs on the infinite tree and carries no
//! truncation bias; its cutoff error is bounded by the heat-kernel decay
//! `e^{-u (sqrt d - 1)^2}` and the cutoff is refused if the bound exceeds the
//! requested tolerance.
//!
//! CLT marginals are tested with a one-sample Kolmogorov–Smirnov statistic
//! against the normal law, tail rates at the moderate-deviation scale are
//! reported next to the Gaussian rate u^2 / (2 sigma^2), and the sample-path
//! rate functional integrates a finite-difference derivative. Tail-rate
//! agreement is a diagnostic, never an assertion: the limits involved are
//! asymptotic and a desk-scale run only shows the trend.

use crate::error::{Error, Result};
use crate::observable::{LocalFunction, XiRecord};
use crate::rng::RngStream;
use crate::stirring::{StirringPath, StirringTuple};
use crate::tree::VertexAddr;

/// A point estimate with its standard error.
#[derive(Debug, Clone)]
pub struct EstimateCI {
    pub value: f64,
    pub std_error: f64,
    pub reps: u64,
    pub method: String,
}

impl EstimateCI {
    pub fn csv_header() -> &'static str {
        "method,value,std_error,reps,params"
    }

    pub fn to_csv_row(&self, params: &str) -> String {
        format!("{},{},{},{},{}", self.method, self.value, self.std_error, self.reps, params)
    }
}

/// One row of the moderate-deviation tail table.
#[derive(Debug, Clone, Copy)]
pub struct RatePoint {
    pub u: f64,
    pub tail_hits: u64,
    /// (t / a_t^2) * log of the tail frequency; approaches minus the
    /// theoretical rate as t grows.
    pub empirical: f64,
    /// Gaussian rate u^2 / (2 sigma^2), nonnegative.
    pub theoretical: f64,
}

impl RatePoint {
    /// Distance between the sign-flipped empirical rate and the Gaussian
    /// rate; the quantity whose shrinkage across t is the trend diagnostic.
    pub fn gap(&self) -> f64 {
        (-self.empirical - self.theoretical).abs()
    }
}

/// Sample variance of xi_t over replicates, divided by t, with jackknife SE.
pub fn estimate_sigma_empirical(samples: &[XiRecord]) -> Result<EstimateCI> {
    if samples.len() < 30 {
        return Err(Error::OutOfRange {
            what: "sample count",
            details: format!("{} < 30", samples.len()),
        });
    }
    let t = samples[0].t;
    if samples.iter().any(|r| r.t != t) {
        return Err(Error::MixedSamples("t"));
    }
    let n = samples.len() as f64;
    let (mut s1, mut s2) = (0.0, 0.0);
    for r in samples {
        s1 += r.xi;
        s2 += r.xi * r.xi;
    }
    let mean = s1 / n;
    let var = (s2 - n * mean * mean) / (n - 1.0);
    let value = var / t;

    // Jackknife over leave-one-out variances.
    let mut theta = Vec::with_capacity(samples.len());
    for r in samples {
        let s1i = s1 - r.xi;
        let s2i = s2 - r.xi * r.xi;
        let mi = s1i / (n - 1.0);
        let vi = (s2i - (n - 1.0) * mi * mi) / (n - 2.0);
        theta.push(vi / t);
    }
    let tbar = theta.iter().sum::<f64>() / n;
    let ss: f64 = theta.iter().map(|v| (v - tbar).powi(2)).sum();
    let se = ((n - 1.0) / n * ss).sqrt();
    Ok(EstimateCI { value, std_error: se, reps: samples.len() as u64, method: "sigma_empirical".into() })
}

/// Exact product-measure expectation E[H(eta, xs) H(eta, ys)]: a finite sum
/// over the occupancy patterns of the union of sites.
pub fn exact_pair_expectation(
    f: &LocalFunction,
    xs: &[VertexAddr],
    ys: &[VertexAddr],
    p: f64,
) -> f64 {
    let mut union: Vec<&VertexAddr> = Vec::with_capacity(xs.len() + ys.len());
    for s in xs.iter().chain(ys.iter()) {
        if !union.contains(&s) {
            union.push(s);
        }
    }
    let slot = |site: &VertexAddr| union.iter().position(|u| *u == site).unwrap();
    let x_slots: Vec<usize> = xs.iter().map(slot).collect();
    let y_slots: Vec<usize> = ys.iter().map(slot).collect();
    let n = union.len();
    let mut acc = 0.0;
    for w in 0..(1usize << n) {
        let ones = w.count_ones() as i32;
        let weight = p.powi(ones) * (1.0 - p).powi(n as i32 - ones);
        let px = x_slots.iter().enumerate().fold(0usize, |m, (j, &s)| m | (((w >> s) & 1) << j));
        let py = y_slots.iter().enumerate().fold(0usize, |m, (j, &s)| m | (((w >> s) & 1) << j));
        acc += weight * f.value_at_pattern(px) * f.value_at_pattern(py);
    }
    acc
}

/// Quadrature grid for the autocovariance integral: a fine linear head (the
/// integrand bends fastest near zero) and a geometrically spaced tail (it
/// decays like the heat kernel).
#[derive(Debug, Clone)]
pub struct DualityGrid {
    times: Vec<f64>,
}

impl DualityGrid {
    pub fn adaptive(cutoff: f64, head_step: f64, growth: f64) -> Self {
        let mut times = vec![0.0];
        let mut h = head_step;
        let mut t = 0.0;
        while t < cutoff {
            t = (t + h).min(cutoff);
            times.push(t);
            if t > 2.0 {
                h *= growth;
            }
        }
        DualityGrid { times }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn cutoff(&self) -> f64 {
        *self.times.last().unwrap()
    }
}

/// Smallest cutoff for which the heat-kernel tail bound
/// `2 K_H^2 m^2 e^{-U r} / r` (r = (sqrt d - 1)^2) is below `tolerance`.
pub fn required_cutoff(f: &LocalFunction, d: u8, tolerance: f64) -> f64 {
    let r = ((d as f64).sqrt() - 1.0).powi(2);
    let m = f.arity() as f64;
    let k = f.sup_norm();
    ((2.0 * k * k * m * m) / (r * tolerance)).ln().max(0.0) / r
}

/// Duality-route variance estimate: `2 * integral of C(u) du` up to the grid
/// cutoff, where each stirring-walk sample contributes its exactly computed
/// pattern expectation at every grid time. Jackknife-free: walks are i.i.d.,
/// so the SE is the sample SD of per-walk integrals.
pub fn estimate_sigma_duality(
    f: &LocalFunction,
    p: f64,
    d: u8,
    grid: &DualityGrid,
    tolerance: f64,
    reps: u64,
    master_seed: u64,
) -> Result<EstimateCI> {
    f.assert_centered(p)?;
    let needed = required_cutoff(f, d, tolerance);
    if grid.cutoff() < needed {
        return Err(Error::CutoffTooSmall { given: grid.cutoff(), required: needed });
    }
    let start = StirringTuple::new(f.sites().to_vec())?;
    let times = grid.times();
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for i in 0..reps {
        let mut rng = RngStream::new(master_seed, i);
        let mut path = StirringPath::new(&start, d);
        let mut prev_c = exact_pair_expectation(f, f.sites(), path.positions(), p);
        let mut integral = 0.0;
        for w in times.windows(2) {
            path.advance_to(w[1], &mut rng);
            let c = exact_pair_expectation(f, f.sites(), path.positions(), p);
            integral += 0.5 * (prev_c + c) * (w[1] - w[0]);
            prev_c = c;
        }
        let value = 2.0 * integral;
        sum += value;
        sumsq += value * value;
    }
    let n = reps as f64;
    let mean = sum / n;
    let var = (sumsq / n - mean * mean).max(0.0);
    Ok(EstimateCI {
        value: mean,
        std_error: (var / n).sqrt(),
        reps,
        method: "sigma_duality".into(),
    })
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// One-sample KS distance of the sample against the standard normal after
/// scaling by sigma * sqrt(t), plus the asymptotic p-value.
pub fn clt_test(samples: &[f64], sigma: f64, t: f64) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::OutOfRange { what: "samples", details: "empty".into() });
    }
    if !(sigma > 0.0) {
        if samples.iter().any(|&s| s != 0.0) {
            return Err(Error::OutOfRange { what: "sigma", details: "zero sigma with nonzero samples".into() });
        }
        return Ok((0.0, 1.0));
    }
    let scale = sigma * t.sqrt();
    let mut z: Vec<f64> = samples.iter().map(|&s| s / scale).collect();
    z.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = z.len() as f64;
    let mut d = 0.0f64;
    for (i, &zi) in z.iter().enumerate() {
        let phi = normal_cdf(zi);
        d = d.max((phi - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - phi).abs());
    }
    Ok((d, kolmogorov_sf(n.sqrt() * d)))
}

/// Survival function of the Kolmogorov distribution (asymptotic KS p-value).
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.0 {
        // Theta-function form converges fast for small x.
        let a = std::f64::consts::PI * std::f64::consts::PI / (8.0 * x * x);
        let mut cdf = 0.0;
        for k in 0..20u32 {
            cdf += (-((2 * k + 1) as f64).powi(2) * a).exp();
        }
        cdf *= (2.0 * std::f64::consts::PI).sqrt() / x;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let mut sum = 0.0;
        let mut sign = 1.0;
        for k in 1..=200u32 {
            let term = sign * (-2.0 * (k as f64).powi(2) * x * x).exp();
            sum += term;
            sign = -sign;
            if term.abs() < 1e-17 {
                break;
            }
        }
        (2.0 * sum).clamp(0.0, 1.0)
    }
}

/// Tail-rate table at the moderate-deviation scale. Returns the retained
/// points and the u values dropped for lack of tail hits.
pub fn tail_rate(
    samples: &[XiRecord],
    a_t: f64,
    u_grid: &[f64],
    sigma_sq: f64,
) -> Result<(Vec<RatePoint>, Vec<f64>)> {
    if samples.is_empty() {
        return Err(Error::OutOfRange { what: "samples", details: "empty".into() });
    }
    let t = samples[0].t;
    if samples.iter().any(|r| r.t != t) {
        return Err(Error::MixedSamples("t"));
    }
    // The moderate-deviation window: a_t strictly between sqrt(t) and t.
    if !(a_t > t.sqrt() && a_t < t) {
        return Err(Error::OutOfRange {
            what: "a_t",
            details: format!("a_t={a_t} not in (sqrt(t), t) = ({}, {t})", t.sqrt()),
        });
    }
    let n = samples.len() as f64;
    let mut points = Vec::new();
    let mut dropped = Vec::new();
    for &u in u_grid {
        let hits = samples.iter().filter(|r| r.xi / a_t >= u).count() as u64;
        if hits == 0 {
            dropped.push(u);
            continue;
        }
        let freq = hits as f64 / n;
        points.push(RatePoint {
            u,
            tail_hits: hits,
            empirical: t / (a_t * a_t) * freq.ln(),
            theoretical: u * u / (2.0 * sigma_sq),
        });
    }
    Ok((points, dropped))
}

/// Rate functional of a sampled path on a uniform grid over [0, T]:
/// `1/(2 sigma^2) * integral (f')^2`, with the derivative taken per grid
/// interval (exact for piecewise-linear paths, O(h^2) for smooth ones).
pub fn rate_functional_i(path: &[f64], t_total: f64, sigma: f64) -> Result<f64> {
    if path.len() < 2 {
        return Err(Error::OutOfRange { what: "path", details: "need >= 2 grid points".into() });
    }
    if path[0] != 0.0 {
        return Err(Error::OutOfRange { what: "path", details: format!("f(0) = {} != 0", path[0]) });
    }
    let h = t_total / (path.len() - 1) as f64;
    let energy: f64 = path.windows(2).map(|w| ((w[1] - w[0]) / h).powi(2) * h).sum();
    Ok(energy / (2.0 * sigma * sigma))
}
