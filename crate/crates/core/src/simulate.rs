//! Gillespie simulation of the continuous-time chain.
//!
//! Randomness comes from ChaCha8 streams: trajectory `i` of a batch always
//! uses stream `i` of the master seed, so batch results do not depend on how
//! the work is scheduled.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::{ReactionNetwork, State};
use crate::structure::TransitionSequence;

pub const DEFAULT_MAX_EVENTS: u64 = 100_000_000;
pub const DEFAULT_MAX_TIME: f64 = 1e7;

/// Independent random stream `(seed, stream)`.
#[derive(Debug, Clone)]
pub struct StreamRng(ChaCha8Rng);

impl StreamRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        StreamRng(rng)
    }

    /// Uniform on `[0, 1)` with 53 random mantissa bits.
    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn exponential(&mut self, rate: f64) -> f64 {
        -(1.0 - self.uniform()).ln() / rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub seed: u64,
    pub max_events: u64,
    pub max_time: f64,
}

impl SimConfig {
    pub fn new(seed: u64) -> Self {
        SimConfig {
            seed,
            max_events: DEFAULT_MAX_EVENTS,
            max_time: DEFAULT_MAX_TIME,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_events == 0 || !(self.max_time > 0.0) {
            return Err(Error::InvalidArgument("simulation caps must be positive".into()));
        }
        Ok(())
    }
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig::new(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FptKind {
    /// `x_i <= C`
    Coordinate(usize),
    /// `max_i x_i <= C`
    SupNorm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FptQuery {
    pub kind: FptKind,
    pub threshold: u64,
}

impl FptQuery {
    pub fn coordinate(index: usize, threshold: u64) -> Self {
        FptQuery {
            kind: FptKind::Coordinate(index),
            threshold,
        }
    }

    pub fn sup_norm(threshold: u64) -> Self {
        FptQuery {
            kind: FptKind::SupNorm,
            threshold,
        }
    }

    pub fn holds(&self, x: &[u64]) -> bool {
        match self.kind {
            FptKind::Coordinate(i) => x[i] <= self.threshold,
            FptKind::SupNorm => x.iter().all(|&v| v <= self.threshold),
        }
    }

    fn check(&self, dim: usize) -> Result<()> {
        match self.kind {
            FptKind::Coordinate(i) if i >= dim => Err(Error::InvalidArgument(format!(
                "query coordinate {i} out of range for {dim} species"
            ))),
            _ => Ok(()),
        }
    }
}

/// Reusable per-network scratch for drawing events.
struct Engine<'a> {
    net: &'a ReactionNetwork,
    increments: Vec<Vec<i64>>,
    props: Vec<f64>,
}

impl<'a> Engine<'a> {
    fn new(net: &'a ReactionNetwork) -> Self {
        Engine {
            net,
            increments: net.reactions().iter().map(|r| r.increment()).collect(),
            props: vec![0.0; net.reactions().len()],
        }
    }

    /// Returns the total rate after filling `props`.
    fn rates(&mut self, x: &[u64]) -> f64 {
        let mut total = 0.0;
        for (p, r) in self.props.iter_mut().zip(self.net.reactions()) {
            *p = r.propensity(x);
            total += *p;
        }
        total
    }

    fn choose(&self, total: f64, u: f64) -> usize {
        let target = u * total;
        let mut acc = 0.0;
        let mut last = 0;
        for (i, &p) in self.props.iter().enumerate() {
            if p > 0.0 {
                acc += p;
                last = i;
                if target < acc {
                    return i;
                }
            }
        }
        last
    }

    /// One Gillespie step: `(holding time, reaction)`, or `None` if absorbing.
    fn draw(&mut self, x: &[u64], rng: &mut StreamRng) -> Option<(f64, usize)> {
        let total = self.rates(x);
        if total <= 0.0 {
            return None;
        }
        let dt = rng.exponential(total);
        let r = self.choose(total, rng.uniform());
        Some((dt, r))
    }

    /// Embedded-chain step only (no holding time drawn).
    fn draw_jump(&mut self, x: &[u64], rng: &mut StreamRng) -> Option<usize> {
        let total = self.rates(x);
        if total <= 0.0 {
            return None;
        }
        Some(self.choose(total, rng.uniform()))
    }

    fn fire(&self, x: &mut [u64], r: usize) {
        for (xi, &d) in x.iter_mut().zip(&self.increments[r]) {
            *xi = xi
                .checked_add_signed(d)
                .expect("mass-action step left the orthant");
        }
    }
}

/// Draws the holding time at `x` and the reaction that fires next.
pub fn next_event(net: &ReactionNetwork, x: &State, rng: &mut StreamRng) -> Result<(f64, usize)> {
    if x.len() != net.dim() {
        return Err(Error::DimensionMismatch {
            expected: net.dim(),
            got: x.len(),
        });
    }
    Engine::new(net).draw(x, rng).ok_or(Error::AbsorbingState)
}

pub enum StopCondition<'a> {
    Horizon(f64),
    Passage(FptQuery),
    Predicate(&'a (dyn Fn(&[u64]) -> bool + Sync)),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    HorizonReached,
    ConditionMet,
    Absorbed,
    EventCapExceeded,
    TimeCapExceeded,
}

impl Outcome {
    pub fn cap_exceeded(self) -> bool {
        matches!(self, Outcome::EventCapExceeded | Outcome::TimeCapExceeded)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Event {
    pub time: f64,
    pub reaction: usize,
    pub state: State,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub initial: State,
    pub events: Vec<Event>,
    pub outcome: Outcome,
    /// The sample path is known on `[0, end_time]`.
    pub end_time: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &State {
        self.events.last().map_or(&self.initial, |e| &e.state)
    }

    /// Right-continuous lookup of the state at time `t`.
    pub fn state_at(&self, t: f64) -> Result<&State> {
        if !(t >= 0.0) || t > self.end_time {
            return Err(Error::BeyondCoverage {
                t,
                end: self.end_time,
            });
        }
        let k = self.events.partition_point(|e| e.time <= t);
        Ok(if k == 0 {
            &self.initial
        } else {
            &self.events[k - 1].state
        })
    }
}

pub fn state_at(traj: &Trajectory, t: f64) -> Result<&State> {
    traj.state_at(t)
}

fn check_init(net: &ReactionNetwork, init: &State) -> Result<()> {
    if init.len() != net.dim() {
        return Err(Error::DimensionMismatch {
            expected: net.dim(),
            got: init.len(),
        });
    }
    Ok(())
}

/// Simulates trajectory number `stream` of the batch seeded by `config.seed`.
pub fn simulate_stream(
    net: &ReactionNetwork,
    init: &State,
    stop: &StopCondition<'_>,
    config: &SimConfig,
    stream: u64,
) -> Result<Trajectory> {
    check_init(net, init)?;
    config.validate()?;
    if let StopCondition::Passage(q) = stop {
        q.check(net.dim())?;
    }
    let mut engine = Engine::new(net);
    let mut rng = StreamRng::new(config.seed, stream);
    let mut x: Vec<u64> = init.to_vec();
    let mut t = 0.0;
    let mut events = Vec::new();

    let reached = |x: &[u64]| match stop {
        StopCondition::Horizon(_) => false,
        StopCondition::Passage(q) => q.holds(x),
        StopCondition::Predicate(p) => p(x),
    };
    let horizon = match stop {
        StopCondition::Horizon(h) => Some(*h),
        _ => None,
    };
    let finish = |events, outcome, end_time| Trajectory {
        initial: init.clone(),
        events,
        outcome,
        end_time,
    };

    if reached(&x) {
        return Ok(finish(events, Outcome::ConditionMet, 0.0));
    }
    loop {
        if events.len() as u64 >= config.max_events {
            return Ok(finish(events, Outcome::EventCapExceeded, t));
        }
        let Some((dt, r)) = engine.draw(&x, &mut rng) else {
            let end = horizon.unwrap_or(f64::INFINITY);
            return Ok(finish(events, Outcome::Absorbed, end));
        };
        let next = t + dt;
        if let Some(h) = horizon {
            if next > h {
                let outcome = if h > config.max_time {
                    Outcome::TimeCapExceeded
                } else {
                    Outcome::HorizonReached
                };
                return Ok(finish(events, outcome, h.min(config.max_time)));
            }
        }
        if next > config.max_time {
            return Ok(finish(events, Outcome::TimeCapExceeded, config.max_time));
        }
        engine.fire(&mut x, r);
        t = next;
        events.push(Event {
            time: t,
            reaction: r,
            state: State::new(x.clone()),
        });
        if reached(&x) {
            return Ok(finish(events, Outcome::ConditionMet, t));
        }
    }
}

pub fn simulate(
    net: &ReactionNetwork,
    init: &State,
    stop: &StopCondition<'_>,
    config: &SimConfig,
) -> Result<Trajectory> {
    simulate_stream(net, init, stop, config, 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Passage {
    Reached(f64),
    CapExceeded,
    Absorbed,
}

/// First time the query holds, without recording the path.
pub fn first_passage_stream(
    net: &ReactionNetwork,
    init: &State,
    q: &FptQuery,
    config: &SimConfig,
    stream: u64,
) -> Result<Passage> {
    check_init(net, init)?;
    config.validate()?;
    q.check(net.dim())?;
    if q.holds(init) {
        return Ok(Passage::Reached(0.0));
    }
    let mut engine = Engine::new(net);
    let mut rng = StreamRng::new(config.seed, stream);
    let mut x = init.to_vec();
    let mut t = 0.0;
    for _ in 0..config.max_events {
        let Some((dt, r)) = engine.draw(&x, &mut rng) else {
            return Ok(Passage::Absorbed);
        };
        t += dt;
        if t > config.max_time {
            return Ok(Passage::CapExceeded);
        }
        engine.fire(&mut x, r);
        if q.holds(&x) {
            return Ok(Passage::Reached(t));
        }
    }
    Ok(Passage::CapExceeded)
}

pub fn first_passage(
    net: &ReactionNetwork,
    init: &State,
    q: &FptQuery,
    config: &SimConfig,
) -> Result<Passage> {
    first_passage_stream(net, init, q, config, 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FptSummary {
    /// Mean over the trajectories that reached the target.
    pub mean: f64,
    pub stderr: f64,
    pub reached: usize,
    pub capped: usize,
    pub absorbed: usize,
}

/// Sample mean and standard error of `x_1, ..., x_m`.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let m = xs.len();
    if m == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / m as f64;
    if m < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
    (mean, (var / m as f64).sqrt())
}

/// Mean first-passage time over trajectories `0..m` of the batch. Runs on the
/// current rayon pool; the result is independent of its size.
pub fn mean_first_passage(
    net: &ReactionNetwork,
    init: &State,
    q: &FptQuery,
    m: usize,
    config: &SimConfig,
) -> Result<FptSummary> {
    if m < 2 {
        return Err(Error::InvalidArgument("need at least 2 trajectories".into()));
    }
    let runs = (0..m as u64)
        .into_par_iter()
        .map(|i| first_passage_stream(net, init, q, config, i))
        .collect::<Result<Vec<_>>>()?;
    let mut times = Vec::with_capacity(m);
    let (mut capped, mut absorbed) = (0, 0);
    for r in runs {
        match r {
            Passage::Reached(t) => times.push(t),
            Passage::CapExceeded => capped += 1,
            Passage::Absorbed => absorbed += 1,
        }
    }
    let (mean, stderr) = mean_and_stderr(&times);
    Ok(FptSummary {
        mean,
        stderr,
        reached: times.len(),
        capped,
        absorbed,
    })
}

/// Visits to and exits from the face `{x_d = 0}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryStats {
    /// Visit times; starts with `0` when the initial state is on the face.
    pub nu: Vec<f64>,
    /// Exit times.
    pub mu: Vec<f64>,
    /// First `d - 1` coordinates at each visit.
    pub z_sequence: Vec<Vec<u64>>,
    pub initial_on_boundary: bool,
    pub end_time: f64,
}

impl BoundaryStats {
    /// `N(t)`: visits `nu_i <= t` with `i >= 1`.
    pub fn n_of_t(&self, t: f64) -> usize {
        let skip = usize::from(self.initial_on_boundary);
        self.nu.iter().skip(skip).take_while(|&&v| v <= t).count()
    }

    /// Completed boundary sojourns `mu_{i+1} - nu_i`.
    pub fn holding_times(&self) -> Vec<f64> {
        self.nu
            .iter()
            .zip(&self.mu)
            .map(|(v, m)| m - v)
            .collect()
    }
}

pub fn boundary_stats(traj: &Trajectory) -> BoundaryStats {
    let d = traj.initial.len();
    let last = d.saturating_sub(1);
    let on = |x: &[u64]| d > 0 && x[last] == 0;
    let face = |x: &[u64]| x[..last].to_vec();
    let mut inside = on(&traj.initial);
    let mut stats = BoundaryStats {
        nu: Vec::new(),
        mu: Vec::new(),
        z_sequence: Vec::new(),
        initial_on_boundary: inside,
        end_time: traj.end_time,
    };
    if inside {
        stats.nu.push(0.0);
        stats.z_sequence.push(face(&traj.initial));
    }
    for e in &traj.events {
        let now = on(&e.state);
        if now && !inside {
            stats.nu.push(e.time);
            stats.z_sequence.push(face(&e.state));
        } else if !now && inside {
            stats.mu.push(e.time);
        }
        inside = now;
    }
    stats
}

/// Monte-Carlo frequency with which the first `|seq|` jumps of the embedded
/// chain from `start` have the increments of `seq`.
pub fn empirical_path_probability(
    net: &ReactionNetwork,
    start: &State,
    seq: &TransitionSequence,
    m: usize,
    config: &SimConfig,
) -> Result<(f64, f64)> {
    check_init(net, start)?;
    if m < 100 {
        return Err(Error::InvalidArgument("need at least 100 runs".into()));
    }
    if seq.increments.iter().any(|inc| inc.len() != net.dim()) {
        return Err(Error::DimensionMismatch {
            expected: net.dim(),
            got: seq.increments.first().map_or(0, Vec::len),
        });
    }
    let hits: usize = (0..m as u64)
        .into_par_iter()
        .map_init(
            || Engine::new(net),
            |engine, i| {
                let mut rng = StreamRng::new(config.seed, i);
                let mut x = start.to_vec();
                for inc in &seq.increments {
                    match engine.draw_jump(&x, &mut rng) {
                        Some(r) if &engine.increments[r] == inc => engine.fire(&mut x, r),
                        _ => return 0,
                    }
                }
                1
            },
        )
        .sum();
    let p = hits as f64 / m as f64;
    Ok((p, (p * (1.0 - p) / m as f64).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WalkStatus {
    Running,
    Absorbed,
    CapExceeded,
}

/// A trajectory that only remembers its current state. Advancing it to a
/// sequence of times yields the same sample path however the times are chosen.
#[derive(Debug, Clone)]
pub struct Walker {
    state: Vec<u64>,
    time: f64,
    events: u64,
    rng: StreamRng,
    pending: Option<(f64, usize)>,
    status: WalkStatus,
}

impl Walker {
    pub fn new(init: &State, seed: u64, stream: u64) -> Self {
        Walker {
            state: init.to_vec(),
            time: 0.0,
            events: 0,
            rng: StreamRng::new(seed, stream),
            pending: None,
            status: WalkStatus::Running,
        }
    }

    pub fn state(&self) -> &[u64] {
        &self.state
    }

    pub fn status(&self) -> WalkStatus {
        self.status
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    /// Runs all events with time `<= t`.
    pub fn advance_to(&mut self, net: &ReactionNetwork, t: f64, config: &SimConfig) -> WalkStatus {
        let mut engine = Engine::new(net);
        self.advance_with(&mut engine, t, config)
    }

    fn advance_with(&mut self, engine: &mut Engine<'_>, t: f64, config: &SimConfig) -> WalkStatus {
        while self.status == WalkStatus::Running {
            let (at, r) = match self.pending {
                Some(p) => p,
                None => match engine.draw(&self.state, &mut self.rng) {
                    Some((dt, r)) => {
                        let p = (self.time + dt, r);
                        self.pending = Some(p);
                        p
                    }
                    None => {
                        self.status = WalkStatus::Absorbed;
                        break;
                    }
                },
            };
            if at > t {
                break;
            }
            if self.events >= config.max_events || at > config.max_time {
                self.status = WalkStatus::CapExceeded;
                break;
            }
            engine.fire(&mut self.state, r);
            self.time = at;
            self.events += 1;
            self.pending = None;
        }
        self.status
    }
}

/// Advances every walker to time `t` in parallel.
pub fn advance_all(
    net: &ReactionNetwork,
    walkers: &mut [Walker],
    t: f64,
    config: &SimConfig,
) {
    walkers.par_iter_mut().for_each_init(
        || Engine::new(net),
        |engine, w| {
            w.advance_with(engine, t, config);
        },
    );
}

/// CSV `t,reaction,<species...>`, one row per event.
pub fn trajectory_csv(net: &ReactionNetwork, traj: &Trajectory) -> String {
    let mut out = String::from("t,reaction");
    for s in net.species() {
        out.push(',');
        out.push_str(&s.name);
    }
    out.push('\n');
    for e in &traj.events {
        out.push_str(&format!("{},{}", e.time, e.reaction));
        for x in e.state.iter() {
            out.push_str(&format!(",{x}"));
        }
        out.push('\n');
    }
    out
}

/// CSV `i,nu,mu,<first d-1 species...>`; row `i` holds the `i`-th recorded
/// visit, the exit ending it (empty if none) and `Z(i)`.
pub fn boundary_csv(net: &ReactionNetwork, stats: &BoundaryStats) -> String {
    let mut out = String::from("i,nu,mu");
    let d = net.dim();
    for s in &net.species()[..d.saturating_sub(1)] {
        out.push(',');
        out.push_str(&s.name);
    }
    out.push('\n');
    for (i, (nu, z)) in stats.nu.iter().zip(&stats.z_sequence).enumerate() {
        let mu = stats
            .mu
            .get(i)
            .map_or(String::new(), |m| m.to_string());
        out.push_str(&format!("{i},{nu},{mu}"));
        for v in z {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}
