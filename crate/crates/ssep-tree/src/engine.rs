//! Graphical construction of the exclusion dynamics.
//!
//! Every edge of the ball carries an independent rate-1 Poisson clock. When a
//! clock rings the two endpoint values are exchanged. One realized clock
//! record (the [`EventLog`]) drives both directions of time:
//!
//! * forward: [`evolve`] applies the swaps in time order to produce the
//!   configuration at time `t`;
//! * backward: [`DualTracer`] follows where the value observed at `(x, t)`
//!   came from, which is a simple random walk with jump rate `d+1`; jointly
//!   traced walkers form the stirring process (independent walks whose
//!   neighboring pairs swap at rate 1).
//!
//! The two views are coupled pathwise: for every realized log,
//! `evolve(eta0, log, t)(x) == eta0(trace(x, t, t))`, bit for bit. That
//! identity is the load-bearing test of the whole engine.
//!
//! Clocks are sampled in superposed form: one global Poisson process of rate
//! `|edges|` whose events are labeled with a uniformly chosen edge. This is
//! distributionally identical to independent per-edge clocks and produces the
//! events already sorted. [`EventStream`] is the windowed form of the same
//! sampler: identical draws, nothing materialized, for horizons where the
//! full log would not fit in memory.

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::tree::{Ball, VertexAddr};

/// One clock ring: an edge index into the ball, at a time in (0, horizon].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonEvent {
    pub time: f64,
    pub edge: u32,
}

/// Realized clock record over a finite horizon, sorted strictly by time.
#[derive(Debug, Clone)]
pub struct EventLog {
    horizon: f64,
    n_edges: u32,
    events: Vec<PoissonEvent>,
    /// (master seed, stream id) that produced the log; 0/0 for imported logs.
    provenance: (u64, u64),
}

/// Streaming variant of the event sampler: yields the same events the
/// materialized log would contain, in order, without storing them.
pub struct EventStream<'r> {
    t: f64,
    horizon: f64,
    n_edges: u32,
    rng: &'r mut RngStream,
}

impl<'r> EventStream<'r> {
    pub fn new(ball: &Ball, horizon: f64, rng: &'r mut RngStream) -> Self {
        EventStream { t: 0.0, horizon, n_edges: ball.edge_count() as u32, rng }
    }
}

impl Iterator for EventStream<'_> {
    type Item = PoissonEvent;

    #[inline]
    fn next(&mut self) -> Option<PoissonEvent> {
        let rate = self.n_edges as f64;
        loop {
            let next = self.t + self.rng.exponential(rate);
            if next > self.horizon {
                return None;
            }
            // Ties are probability zero; at floating-point resolution they
            // would silently reorder the log, so resample.
            if next == self.t {
                continue;
            }
            self.t = next;
            let edge = self.rng.below(self.n_edges);
            return Some(PoissonEvent { time: next, edge });
        }
    }
}

/// Samples the full clock record on (0, T].
pub fn sample_events(ball: &Ball, horizon: f64, rng: &mut RngStream) -> Result<EventLog> {
    if !(horizon > 0.0) {
        return Err(Error::OutOfRange { what: "horizon", details: format!("T={horizon}, need T > 0") });
    }
    let provenance = (rng.master_seed(), rng.stream_id());
    let events: Vec<PoissonEvent> = EventStream::new(ball, horizon, rng).collect();
    Ok(EventLog { horizon, n_edges: ball.edge_count() as u32, events, provenance })
}

impl EventLog {
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn events(&self) -> &[PoissonEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn provenance(&self) -> (u64, u64) {
        self.provenance
    }

    /// CSV export: one `time,edge_parent,edge_letter` row per event, after a
    /// versioned schema comment. Bit-exact roundtrip via shortest f64 display.
    pub fn to_csv(&self, ball: &Ball) -> String {
        let mut out = String::with_capacity(32 * self.events.len() + 64);
        out.push_str("# schema: eventlog v1\n");
        out.push_str(&format!("# horizon={} edges={}\n", self.horizon, self.n_edges));
        out.push_str("time,edge_parent,edge_letter\n");
        for ev in &self.events {
            let addr = ball.edge_addr(ev.edge);
            out.push_str(&format!("{},{},{}\n", ev.time, addr.parent.to_dotted(), addr.letter));
        }
        out
    }

    pub fn from_csv(ball: &Ball, text: &str) -> Result<EventLog> {
        let mut horizon = None;
        let mut events = Vec::new();
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix('#') {
                for token in rest.split_whitespace() {
                    if let Some(h) = token.strip_prefix("horizon=") {
                        horizon = Some(h.parse::<f64>().map_err(|_| {
                            Error::OutOfRange { what: "horizon", details: h.to_string() }
                        })?);
                    }
                }
                continue;
            }
            if line.is_empty() || line.starts_with("time,") {
                continue;
            }
            let mut parts = line.splitn(3, ',');
            let (t, parent, letter) = (
                parts.next().unwrap_or_default(),
                parts.next().unwrap_or_default(),
                parts.next().unwrap_or_default(),
            );
            let time: f64 = t
                .parse()
                .map_err(|_| Error::OutOfRange { what: "event time", details: t.to_string() })?;
            let parent = VertexAddr::parse_dotted(parent, ball.degree())?;
            let letter: u8 = letter
                .parse()
                .map_err(|_| Error::MalformedWord(format!("edge letter {letter:?}")))?;
            let addr = crate::tree::EdgeAddr { parent, letter };
            let edge = ball
                .edge_index(&addr)
                .ok_or_else(|| Error::OutsideBall(addr.child().to_dotted()))?;
            events.push(PoissonEvent { time, edge });
        }
        let horizon = horizon.ok_or_else(|| {
            Error::OutOfRange { what: "horizon", details: "missing horizon comment".into() }
        })?;
        if events.windows(2).any(|w| w[0].time >= w[1].time) {
            return Err(Error::OutOfRange { what: "event order", details: "times not strictly increasing".into() });
        }
        if events.iter().any(|e| e.time <= 0.0 || e.time > horizon) {
            return Err(Error::OutOfRange { what: "event time", details: "outside (0, horizon]".into() });
        }
        Ok(EventLog { horizon, n_edges: ball.edge_count() as u32, events, provenance: (0, 0) })
    }
}

/// Occupancy configuration on the ball: one bit per vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    occ: Vec<u8>,
}

impl Configuration {
    pub fn vacant(ball: &Ball) -> Self {
        Configuration { occ: vec![0; ball.vertex_count()] }
    }

    pub fn from_bits(bits: Vec<u8>) -> Self {
        Configuration { occ: bits }
    }

    /// Occupancy by state index: bit v of `mask` is the value at vertex v.
    /// Only usable for |V| <= 64; used by the exact oracle.
    pub fn from_mask(ball: &Ball, mask: u64) -> Self {
        let occ = (0..ball.vertex_count()).map(|v| ((mask >> v) & 1) as u8).collect();
        Configuration { occ }
    }

    pub fn to_mask(&self) -> u64 {
        debug_assert!(self.occ.len() <= 64);
        self.occ.iter().enumerate().fold(0u64, |m, (i, &b)| m | ((b as u64) << i))
    }

    #[inline]
    pub fn get(&self, v: u32) -> u8 {
        self.occ[v as usize]
    }

    pub fn set(&mut self, v: u32, value: u8) {
        self.occ[v as usize] = value;
    }

    #[inline]
    pub fn swap_edge(&mut self, a: u32, b: u32) {
        self.occ.swap(a as usize, b as usize);
    }

    pub fn len(&self) -> usize {
        self.occ.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occ.is_empty()
    }

    pub fn particle_count(&self) -> usize {
        self.occ.iter().map(|&b| b as usize).sum()
    }

    pub fn bits(&self) -> &[u8] {
        &self.occ
    }
}

/// i.i.d. Bernoulli(p) occupancy: one draw from the product measure.
pub fn sample_nu_p(ball: &Ball, p: f64, rng: &mut RngStream) -> Result<Configuration> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::OutOfRange { what: "density", details: format!("p={p}, need 0 < p < 1") });
    }
    let occ = (0..ball.vertex_count()).map(|_| rng.bernoulli(p) as u8).collect();
    Ok(Configuration { occ })
}

/// Applies every event with time <= t, in order, swapping endpoint values.
pub fn evolve(ball: &Ball, eta0: &Configuration, log: &EventLog, t: f64) -> Result<Configuration> {
    if !(0.0..=log.horizon).contains(&t) {
        return Err(Error::OutOfRange { what: "time", details: format!("t={t} not in [0, {}]", log.horizon) });
    }
    let mut eta = eta0.clone();
    for ev in &log.events {
        if ev.time > t {
            break;
        }
        let (a, b) = ball.edge_endpoints(ev.edge);
        eta.swap_edge(a, b);
    }
    Ok(eta)
}

/// Backward tracer over one event log. Construction builds a per-vertex index
/// of the events touching each vertex, so a trace costs O(events on the
/// walk's own trajectory), not O(all events).
pub struct DualTracer<'a> {
    ball: &'a Ball,
    log: &'a EventLog,
    /// For each vertex, indices into `log.events` touching it, time-ascending.
    per_vertex: Vec<Vec<u32>>,
}

impl<'a> DualTracer<'a> {
    pub fn new(ball: &'a Ball, log: &'a EventLog) -> Self {
        let mut per_vertex = vec![Vec::new(); ball.vertex_count()];
        for (i, ev) in log.events.iter().enumerate() {
            let (a, b) = ball.edge_endpoints(ev.edge);
            per_vertex[a as usize].push(i as u32);
            per_vertex[b as usize].push(i as u32);
        }
        DualTracer { ball, log, per_vertex }
    }

    /// Position `X_s^{t,x}` by vertex index: scan events in decreasing time
    /// from `t` down to `t - s`; every event touching the current position
    /// moves it across the event's edge.
    pub fn trace_idx(&self, x: u32, t: f64, s: f64) -> Result<u32> {
        if !(0.0 <= s && s <= t && t <= self.log.horizon) {
            return Err(Error::OutOfRange {
                what: "trace window",
                details: format!("need 0 <= s <= t <= horizon, got s={s} t={t}"),
            });
        }
        let floor = t - s;
        let mut pos = x;
        // Cursor over event indices: the next event at `pos` strictly below
        // the current cursor time, but > floor.
        let mut cursor = t;
        loop {
            let list = &self.per_vertex[pos as usize];
            // Last event with time <= cursor.
            let k = list.partition_point(|&i| self.log.events[i as usize].time <= cursor);
            if k == 0 {
                return Ok(pos);
            }
            let ev = &self.log.events[list[k - 1] as usize];
            if ev.time <= floor {
                return Ok(pos);
            }
            let (a, b) = self.ball.edge_endpoints(ev.edge);
            pos = if a == pos { b } else { a };
            // Continue strictly below this event.
            cursor = prev_f64(ev.time);
        }
    }

    /// Joint backward trace of m distinct walkers through the shared log;
    /// an event whose edge touches two walkers exchanges them.
    pub fn trace_multi_idx(&self, xs: &[u32], t: f64, s: f64) -> Result<Vec<u32>> {
        if !(0.0 <= s && s <= t && t <= self.log.horizon) {
            return Err(Error::OutOfRange {
                what: "trace window",
                details: format!("need 0 <= s <= t <= horizon, got s={s} t={t}"),
            });
        }
        for (i, a) in xs.iter().enumerate() {
            if xs[..i].contains(a) {
                return Err(Error::DuplicateSites);
            }
        }
        let floor = t - s;
        let mut pos: Vec<u32> = xs.to_vec();
        // Per-walker cursor into its vertex list; rebuilt after each move.
        let mut cursor = t;
        loop {
            // Next (largest-time) event <= cursor touching any walker.
            let mut best: Option<(f64, u32)> = None;
            for &p in &pos {
                let list = &self.per_vertex[p as usize];
                let k = list.partition_point(|&i| self.log.events[i as usize].time <= cursor);
                if k > 0 {
                    let idx = list[k - 1];
                    let time = self.log.events[idx as usize].time;
                    if time > floor && best.is_none_or(|(bt, _)| time > bt) {
                        best = Some((time, idx));
                    }
                }
            }
            let Some((time, idx)) = best else { return Ok(pos) };
            let (a, b) = self.ball.edge_endpoints(self.log.events[idx as usize].edge);
            for p in pos.iter_mut() {
                if *p == a {
                    *p = b;
                } else if *p == b {
                    *p = a;
                }
            }
            cursor = prev_f64(time);
        }
    }
}

/// Largest f64 strictly below `x` (x positive finite here).
fn prev_f64(x: f64) -> f64 {
    f64::from_bits(x.to_bits() - 1)
}

/// `X_s^{t,x}` as a vertex address.
pub fn trace_dual(ball: &Ball, log: &EventLog, x: &VertexAddr, t: f64, s: f64) -> Result<VertexAddr> {
    let idx = ball.require_index(x)?;
    let tracer = DualTracer::new(ball, log);
    Ok(ball.vertex(tracer.trace_idx(idx, t, s)?).clone())
}

/// Componentwise backward trace of distinct starting vertices.
pub fn trace_dual_multi(
    ball: &Ball,
    log: &EventLog,
    xs: &[VertexAddr],
    t: f64,
    s: f64,
) -> Result<Vec<VertexAddr>> {
    let idx: Vec<u32> = xs.iter().map(|x| ball.require_index(x)).collect::<Result<_>>()?;
    let tracer = DualTracer::new(ball, log);
    let out = tracer.trace_multi_idx(&idx, t, s)?;
    Ok(out.into_iter().map(|i| ball.vertex(i).clone()).collect())
}
