use super::log::{CustomerRecord, EventLog, IdleInterval, Outcome};
use super::{Conservation, InitialState, Result, ServiceAssignment, SimConfig, TailScaling};
use crate::distributions::Distribution;
use crate::rng::{Stream, StreamKey};
use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};

const SUB_ARRIVALS: u64 = 0;
const SUB_PATIENCE: u64 = 1;
const SUB_SERVICE: u64 = 2;
const SUB_INITIAL: u64 = 3;
const SUB_SERVER0: u64 = 16;

/// Quantities shared by all replications of one config.
pub(super) struct Plan {
    interarrival: Distribution,
    service: Distribution,
    residual: Distribution,
    window_start: f64,
    window_end: f64,
    batch_len: f64,
    batches: usize,
    wait_levels: Vec<f64>,
    x_levels: Vec<f64>,
    sl_delays: Vec<f64>,
    ea_delays: Vec<f64>,
    pmf_points: Vec<u64>,
}

impl Plan {
    pub(super) fn new(cfg: &SimConfig) -> Result<Self> {
        let spec = &cfg.spec;
        let n = spec.servers as f64;
        let gamma = spec.patience.mean();
        let (wait_levels, x_levels) = if cfg.tail_thresholds_w.is_empty() && cfg.tail_thresholds_x.is_empty() {
            (vec![], vec![])
        } else {
            let rho = spec.traffic_intensity();
            let w = spec.patience.quantile((rho - 1.0) / rho)?;
            let q = spec.arrival_rate * spec.patience.integrated_survival(w);
            let sw = TailScaling::VirtualWait { n, gamma, w };
            let sx = TailScaling::NumberInSystem { n, gamma, q };
            (
                cfg.tail_thresholds_w.iter().map(|&a| sw.level(a)).collect(),
                cfg.tail_thresholds_x.iter().map(|&a| sx.level(a)).collect(),
            )
        };
        Ok(Self {
            interarrival: cfg.interarrival_law()?,
            service: spec.service.clone(),
            residual: spec.service.equilibrium()?,
            window_start: cfg.warmup,
            window_end: cfg.horizon,
            batch_len: (cfg.horizon - cfg.warmup) / cfg.batches as f64,
            batches: cfg.batches,
            wait_levels,
            x_levels,
            sl_delays: cfg.service_level_delays.clone(),
            ea_delays: cfg.effective_abd_delays.clone(),
            pmf_points: cfg.pmf_points.clone(),
        })
    }

    fn batch_of(&self, t: f64) -> Option<usize> {
        if t < self.window_start || t >= self.window_end {
            return None;
        }
        Some((((t - self.window_start) / self.batch_len) as usize).min(self.batches - 1))
    }
}

/// Per-batch sums over customers, indexed by the batch of their arrival.
#[derive(Debug, Clone, Default)]
pub(super) struct CustomerBatches {
    pub count: Vec<f64>,
    pub abandoned: Vec<f64>,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub sojourn: Vec<f64>,
    pub w_tail: Vec<Vec<f64>>,
    pub served_within: Vec<Vec<f64>>,
    pub ea_num: Vec<Vec<f64>>,
    pub ea_den: Vec<Vec<f64>>,
}

impl CustomerBatches {
    pub(super) fn new(b: usize, plan: &Plan) -> Self {
        let z = vec![0.0; b];
        let zs = |k: usize| vec![z.clone(); k];
        Self {
            count: z.clone(),
            abandoned: z.clone(),
            w1: z.clone(),
            w2: z.clone(),
            sojourn: z.clone(),
            w_tail: zs(plan.wait_levels.len()),
            served_within: zs(plan.sl_delays.len()),
            ea_num: zs(plan.ea_delays.len()),
            ea_den: zs(plan.ea_delays.len()),
        }
    }

    pub(super) fn extend(&mut self, o: &Self) {
        self.count.extend(&o.count);
        self.abandoned.extend(&o.abandoned);
        self.w1.extend(&o.w1);
        self.w2.extend(&o.w2);
        self.sojourn.extend(&o.sojourn);
        for (a, b) in [
            (&mut self.w_tail, &o.w_tail),
            (&mut self.served_within, &o.served_within),
            (&mut self.ea_num, &o.ea_num),
            (&mut self.ea_den, &o.ea_den),
        ] {
            for (x, y) in a.iter_mut().zip(b) {
                x.extend(y);
            }
        }
    }
}

/// Per-batch time integrals.
#[derive(Debug, Clone, Default)]
pub(super) struct TimeBatches {
    pub length: Vec<f64>,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
    pub idle: Vec<f64>,
    pub x_tail: Vec<Vec<f64>>,
    pub x_point: Vec<Vec<f64>>,
}

impl TimeBatches {
    pub(super) fn new(b: usize, plan: &Plan) -> Self {
        let z = vec![0.0; b];
        Self {
            length: z.clone(),
            x1: z.clone(),
            x2: z.clone(),
            q1: z.clone(),
            q2: z.clone(),
            idle: z.clone(),
            x_tail: vec![z.clone(); plan.x_levels.len()],
            x_point: vec![z; plan.pmf_points.len()],
        }
    }

    pub(super) fn extend(&mut self, o: &Self) {
        for (a, b) in [
            (&mut self.length, &o.length),
            (&mut self.x1, &o.x1),
            (&mut self.x2, &o.x2),
            (&mut self.q1, &o.q1),
            (&mut self.q2, &o.q2),
            (&mut self.idle, &o.idle),
        ] {
            a.extend(b);
        }
        for (a, b) in [(&mut self.x_tail, &o.x_tail), (&mut self.x_point, &o.x_point)] {
            for (x, y) in a.iter_mut().zip(b) {
                x.extend(y);
            }
        }
    }
}

pub(super) struct Replication {
    pub customers: CustomerBatches,
    pub time: TimeBatches,
    pub inexact_waits: u64,
    pub events: u64,
    pub conservation: Conservation,
}

#[derive(Debug, Clone, Default)]
pub(super) struct Options {
    pub record_log: bool,
    pub infinite_patience: Option<u64>,
}

#[derive(Clone, Copy, PartialEq)]
struct Key(f64, u64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

struct Waiting {
    id: u64,
    arrival: f64,
    patience: f64,
    deadline: f64,
    service: f64,
}

enum Event {
    Completion(u32),
    Abandonment(u64),
    Arrival,
}

struct State<'a> {
    plan: &'a Plan,
    n: u32,
    busy: u32,
    live_queue: u64,
    fifo: VecDeque<Waiting>,
    idle_servers: Vec<u32>,
    completions: BinaryHeap<Reverse<(Key, u32)>>,
    abandonments: BinaryHeap<Reverse<(Key, u64)>>,
    seq: u64,
    clock: f64,
    server_streams: Vec<Stream>,
    customer_service: Stream,
    customers: CustomerBatches,
    time: TimeBatches,
    log: Option<EventLog>,
}

impl State<'_> {
    fn next_seq(&mut self) -> u64 {
        self.seq += 1;
        self.seq
    }

    fn schedule_completion(&mut self, t: f64, server: u32) {
        let s = self.next_seq();
        self.completions.push(Reverse((Key(t, s), server)));
    }

    /// Accumulates time-weighted statistics over `[clock, t)`.
    fn advance(&mut self, t: f64) {
        let plan = self.plan;
        let a = self.clock.max(plan.window_start);
        let end = t.min(plan.window_end);
        self.clock = t;
        if a >= end {
            return;
        }
        let x = (self.busy as u64 + self.live_queue) as f64;
        let q = self.live_queue as f64;
        let idle = if self.busy < self.n { 1.0 } else { 0.0 };
        let first = plan.batch_of(a).expect("inside window");
        for b in first..plan.batches {
            let lo = a.max(plan.window_start + b as f64 * plan.batch_len);
            let boundary = if b + 1 == plan.batches {
                plan.window_end
            } else {
                plan.window_start + (b + 1) as f64 * plan.batch_len
            };
            let hi = end.min(boundary);
            if hi > lo {
                let dt = hi - lo;
                let tb = &mut self.time;
                tb.length[b] += dt;
                tb.x1[b] += x * dt;
                tb.x2[b] += x * x * dt;
                tb.q1[b] += q * dt;
                tb.q2[b] += q * q * dt;
                tb.idle[b] += idle * dt;
                for (v, &lvl) in tb.x_tail.iter_mut().zip(&plan.x_levels) {
                    if x > lvl {
                        v[b] += dt;
                    }
                }
                for (v, &i) in tb.x_point.iter_mut().zip(&plan.pmf_points) {
                    if x == i as f64 {
                        v[b] += dt;
                    }
                }
            }
            if end <= boundary {
                break;
            }
        }
    }

    /// Records a customer whose offered wait is now known.
    fn resolve(&mut self, arrival: f64, offered: f64, patience: f64, served: bool, service: f64) {
        let plan = self.plan;
        let Some(b) = plan.batch_of(arrival) else { return };
        let c = &mut self.customers;
        c.count[b] += 1.0;
        c.w1[b] += offered;
        c.w2[b] += offered * offered;
        if served {
            c.sojourn[b] += offered + service;
        } else {
            c.abandoned[b] += 1.0;
            c.sojourn[b] += patience;
        }
        for (v, &lvl) in c.w_tail.iter_mut().zip(&plan.wait_levels) {
            if offered > lvl {
                v[b] += 1.0;
            }
        }
        for (v, &d) in c.served_within.iter_mut().zip(&plan.sl_delays) {
            if served && offered <= d {
                v[b] += 1.0;
            }
        }
        let actual = if served { offered } else { patience };
        for ((num, den), &d) in c.ea_num.iter_mut().zip(c.ea_den.iter_mut()).zip(&plan.ea_delays) {
            if actual > d {
                den[b] += 1.0;
                if !served {
                    num[b] += 1.0;
                }
            }
        }
    }

    fn draw_service(&mut self, server: u32, own: f64) -> f64 {
        if own.is_nan() {
            self.plan.service.sample(&mut self.server_streams[server as usize])
        } else {
            own
        }
    }

    fn start_service(&mut self, t: f64, server: u32, w: Waiting) {
        let s = self.draw_service(server, w.service);
        self.schedule_completion(t + s, server);
        self.resolve(w.arrival, t - w.arrival, w.patience, true, s);
        if let Some(log) = &mut self.log {
            log.customers[w.id as usize].outcome = Outcome::Served { start: t, end: t + s, server };
        }
    }
}

pub(super) fn run_replication(cfg: &SimConfig, plan: &Plan, rep: u64, opts: &Options) -> (Replication, Option<EventLog>) {
    let n = cfg.spec.servers;
    let key = StreamKey::new(cfg.seed).with_stream(rep);
    let mut arrivals_rng = key.with_substream(SUB_ARRIVALS).rng();
    let mut patience_rng = key.with_substream(SUB_PATIENCE).rng();
    let mut initial_rng = key.with_substream(SUB_INITIAL).rng();
    let per_customer = cfg.assignment == ServiceAssignment::PerCustomer;
    let mut st = State {
        plan,
        n,
        busy: 0,
        live_queue: 0,
        fifo: VecDeque::new(),
        idle_servers: Vec::new(),
        completions: BinaryHeap::with_capacity(n as usize),
        abandonments: BinaryHeap::new(),
        seq: 0,
        clock: 0.0,
        server_streams: if per_customer {
            Vec::new()
        } else {
            (0..n as u64).map(|j| key.with_substream(SUB_SERVER0 + j).rng()).collect()
        },
        customer_service: key.with_substream(SUB_SERVICE).rng(),
        customers: CustomerBatches::new(plan.batches, plan),
        time: TimeBatches::new(plan.batches, plan),
        log: opts.record_log.then(|| EventLog { servers: n, initial: n, completions: Vec::new(), idle: Vec::new(), customers: Vec::new() }),
    };

    let mut idle_since: Vec<f64> = vec![f64::NAN; n as usize];
    let initial = match cfg.initial {
        InitialState::BusyEquilibrium => {
            for j in 0..n {
                let r = if per_customer {
                    plan.residual.sample(&mut initial_rng)
                } else {
                    plan.residual.sample(&mut st.server_streams[j as usize])
                };
                st.schedule_completion(r, j);
            }
            st.busy = n;
            n
        }
        InitialState::Empty => {
            st.idle_servers = (0..n).rev().collect();
            idle_since.fill(0.0);
            0
        }
    };
    if let Some(log) = &mut st.log {
        log.initial = initial;
    }

    let mut next_id: u64 = 0;
    let mut next_arrival = plan.interarrival.sample(&mut arrivals_rng);
    let limit = cfg.arrival_limit.unwrap_or(u64::MAX);
    if next_arrival >= cfg.horizon || limit == 0 {
        next_arrival = f64::INFINITY;
    }
    let mut events: u64 = 0;
    let mut completed: u64 = 0;
    let mut abandoned: u64 = 0;
    let mut conservation = None;

    loop {
        let tc = st.completions.peek().map_or(f64::INFINITY, |Reverse((k, _))| k.0);
        let tb = st.abandonments.peek().map_or(f64::INFINITY, |Reverse((k, _))| k.0);
        let ta = next_arrival;
        // Ties: completion, then abandonment, then arrival.
        let (t, ev) = if tc <= tb && tc <= ta && tc.is_finite() {
            let Reverse((_, j)) = st.completions.pop().expect("peeked");
            (tc, Event::Completion(j))
        } else if tb <= ta && tb.is_finite() {
            let Reverse((_, id)) = st.abandonments.pop().expect("peeked");
            (tb, Event::Abandonment(id))
        } else if ta.is_finite() {
            (ta, Event::Arrival)
        } else {
            break;
        };
        if conservation.is_none() && t >= cfg.horizon {
            st.advance(cfg.horizon);
            conservation = Some(Conservation {
                initial: initial as u64,
                arrivals: next_id,
                completed,
                abandoned,
                in_system: st.busy as u64 + st.live_queue,
            });
        }
        if ta.is_infinite() && st.fifo.is_empty() && st.log.is_none() && t >= cfg.horizon {
            break;
        }
        st.advance(t);
        events += 1;
        match ev {
            Event::Completion(j) => {
                completed += 1;
                if let Some(log) = &mut st.log {
                    log.completions.push((t, j));
                }
                let mut next = None;
                while let Some(front) = st.fifo.pop_front() {
                    if front.deadline < t {
                        st.resolve(front.arrival, t - front.arrival, front.patience, false, 0.0);
                    } else {
                        next = Some(front);
                        break;
                    }
                }
                match next {
                    Some(w) => {
                        st.live_queue -= 1;
                        st.start_service(t, j, w);
                    }
                    None => {
                        st.busy -= 1;
                        st.idle_servers.push(j);
                        idle_since[j as usize] = t;
                    }
                }
            }
            Event::Abandonment(id) => {
                if st.fifo.front().is_some_and(|f| f.id <= id) {
                    st.live_queue -= 1;
                    abandoned += 1;
                    if let Some(log) = &mut st.log {
                        log.customers[id as usize].outcome = Outcome::Abandoned { at: t };
                    }
                }
            }
            Event::Arrival => {
                let id = next_id;
                next_id += 1;
                let mut patience = cfg.spec.patience.sample(&mut patience_rng);
                if opts.infinite_patience == Some(id) {
                    patience = f64::INFINITY;
                }
                let own_service = if per_customer { plan.service.sample(&mut st.customer_service) } else { f64::NAN };
                let gap = plan.interarrival.sample(&mut arrivals_rng);
                next_arrival = t + gap;
                if next_arrival >= cfg.horizon || next_id >= limit {
                    next_arrival = f64::INFINITY;
                }
                if let Some(log) = &mut st.log {
                    log.customers.push(CustomerRecord { id, arrival: t, patience, outcome: Outcome::Pending });
                }
                let w = Waiting { id, arrival: t, patience, deadline: t + patience, service: own_service };
                if let Some(j) = st.idle_servers.pop() {
                    st.busy += 1;
                    if let Some(log) = &mut st.log {
                        log.idle.push(IdleInterval { server: j, start: idle_since[j as usize], end: t });
                    }
                    st.start_service(t, j, w);
                } else {
                    if w.deadline.is_finite() {
                        let s = st.next_seq();
                        st.abandonments.push(Reverse((Key(w.deadline, s), id)));
                    }
                    st.fifo.push_back(w);
                    st.live_queue += 1;
                }
            }
        }
        debug_assert!(st.live_queue == 0 || st.busy == n, "idle server while customers wait");
    }
    if let Some(log) = &mut st.log {
        for &j in &st.idle_servers {
            log.idle.push(IdleInterval { server: j, start: idle_since[j as usize], end: f64::INFINITY });
        }
    }
    if conservation.is_none() {
        st.advance(cfg.horizon);
    }
    let conservation = conservation.unwrap_or(Conservation {
        initial: initial as u64,
        arrivals: next_id,
        completed,
        abandoned,
        in_system: st.busy as u64 + st.live_queue,
    });
    let rep = Replication { customers: st.customers, time: st.time, inexact_waits: 0, events, conservation };
    (rep, st.log)
}
