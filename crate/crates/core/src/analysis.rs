//! Stationary distributions, windowed total variation and mixing times.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::{Complex, ReactionNetwork, State};
use crate::simulate::{advance_all, SimConfig, WalkStatus, Walker};

/// Inclusive integer rectangle `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Window {
    pub lower: Vec<u64>,
    pub upper: Vec<u64>,
}

impl Window {
    pub fn new(lower: Vec<u64>, upper: Vec<u64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::InvalidWindow("bounds need equal, non-zero length".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| l > u) {
            return Err(Error::InvalidWindow(format!("lower {lower:?} exceeds upper {upper:?}")));
        }
        Ok(Window { lower, upper })
    }

    /// `[0, side]^dim`
    pub fn square(dim: usize, side: u64) -> Self {
        Window {
            lower: vec![0; dim],
            upper: vec![side; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[u64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| l <= v && v <= u)
    }

    pub fn size(&self) -> u128 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| (u - l + 1) as u128)
            .product()
    }

    /// All states in lexicographic order.
    pub fn states(&self) -> impl Iterator<Item = State> + '_ {
        let mut cur = Some(self.lower.clone());
        std::iter::from_fn(move || {
            let out = cur.clone()?;
            let mut next = out.clone();
            let mut k = self.dim();
            loop {
                if k == 0 {
                    cur = None;
                    break;
                }
                k -= 1;
                if next[k] < self.upper[k] {
                    next[k] += 1;
                    cur = Some(next);
                    break;
                }
                next[k] = self.lower[k];
            }
            Some(State::new(out))
        })
    }
}

impl FromStr for Window {
    type Err = Error;

    /// `"0:100,0:100"`
    fn from_str(s: &str) -> Result<Self> {
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        for part in s.split(',') {
            let (l, u) = part
                .split_once(':')
                .ok_or_else(|| Error::InvalidWindow(format!("expected lo:hi, got `{part}`")))?;
            let parse = |v: &str| {
                v.trim()
                    .parse::<u64>()
                    .map_err(|_| Error::InvalidWindow(format!("bad bound `{v}`")))
            };
            lower.push(parse(l)?);
            upper.push(parse(u)?);
        }
        Window::new(lower, upper)
    }
}

/// Probability mass on a window plus the mass outside it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pmf {
    pub window: Window,
    pub mass: BTreeMap<State, f64>,
    pub tail_mass: f64,
}

impl Pmf {
    pub fn get(&self, x: &State) -> f64 {
        self.mass.get(x).copied().unwrap_or(0.0)
    }

    pub fn window_mass(&self) -> f64 {
        self.mass.values().sum()
    }

    /// Point mass at `x`.
    pub fn point(window: Window, x: &State) -> Self {
        let mut mass = BTreeMap::new();
        let tail_mass = if window.contains(x) {
            mass.insert(x.clone(), 1.0);
            0.0
        } else {
            1.0
        };
        Pmf {
            window,
            mass,
            tail_mass,
        }
    }

    /// Empirical law of a sample.
    pub fn from_samples<'a>(window: Window, samples: impl IntoIterator<Item = &'a [u64]>) -> Self {
        let mut counts: BTreeMap<State, usize> = BTreeMap::new();
        let mut outside = 0usize;
        let mut total = 0usize;
        for x in samples {
            total += 1;
            if window.contains(x) {
                *counts.entry(State::new(x.to_vec())).or_default() += 1;
            } else {
                outside += 1;
            }
        }
        let m = total.max(1) as f64;
        Pmf {
            window,
            mass: counts.into_iter().map(|(x, c)| (x, c as f64 / m)).collect(),
            tail_mass: outside as f64 / m,
        }
    }
}

fn ln_factorial(n: u64) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// `prod_i exp(-c_i) c_i^{x_i} / x_i!`
pub fn poisson_product_pmf(c: &[f64], x: &[u64]) -> f64 {
    c.iter()
        .zip(x)
        .map(|(&ci, &xi)| -ci + xi as f64 * ci.ln() - ln_factorial(xi))
        .sum::<f64>()
        .exp()
}

/// Per-coordinate tables of Poisson masses over the window ranges.
fn poisson_tables(c: &[f64], window: &Window) -> Vec<Vec<f64>> {
    c.iter()
        .zip(window.lower.iter().zip(&window.upper))
        .map(|(&ci, (&lo, &hi))| {
            let mut logf = ln_factorial(lo);
            (lo..=hi)
                .map(|k| {
                    if k > lo {
                        logf += (k as f64).ln();
                    }
                    (-ci + k as f64 * ci.ln() - logf).exp()
                })
                .collect()
        })
        .collect()
}

fn check_c(c: &[f64], dim: usize) -> Result<()> {
    if c.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: c.len(),
        });
    }
    if c.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument("c must be positive".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexBalance {
    pub balanced: bool,
    /// `(complex, outflow - inflow)` under deterministic mass action at `c`.
    pub residuals: Vec<(Complex, f64)>,
}

pub fn verify_complex_balanced(net: &ReactionNetwork, c: &[f64], tol: f64) -> Result<ComplexBalance> {
    check_c(c, net.dim())?;
    let flux = |y: &Complex| -> f64 {
        y.coefficients()
            .iter()
            .zip(c)
            .map(|(&k, &ci)| ci.powi(k as i32))
            .product()
    };
    let mut balanced = true;
    let mut residuals = Vec::new();
    for y in net.complexes() {
        let (mut out, mut inn) = (0.0, 0.0);
        for r in net.reactions() {
            let f = r.rate_constant * flux(&r.reactant);
            if r.reactant == y {
                out += f;
            }
            if r.product == y {
                inn += f;
            }
        }
        let res = out - inn;
        if res.abs() > tol * out.max(inn).max(1.0) {
            balanced = false;
        }
        residuals.push((y, res));
    }
    Ok(ComplexBalance {
        balanced,
        residuals,
    })
}

/// States reachable from `init` through positive-propensity reactions without
/// leaving the window.
pub fn reachable_class(net: &ReactionNetwork, init: &State, window: &Window) -> Result<BTreeSet<State>> {
    if window.dim() != net.dim() {
        return Err(Error::WindowMismatch);
    }
    if !window.contains(init) {
        return Err(Error::InvalidWindow(format!("initial state {init} outside window")));
    }
    let increments: Vec<Vec<i64>> = net.reactions().iter().map(|r| r.increment()).collect();
    let mut seen = BTreeSet::from([init.clone()]);
    let mut queue = VecDeque::from([init.clone()]);
    while let Some(x) = queue.pop_front() {
        for (r, inc) in net.reactions().iter().zip(&increments) {
            if r.propensity(&x) <= 0.0 {
                continue;
            }
            if let Some(y) = x.offset(inc) {
                if window.contains(&y) && seen.insert(y.clone()) {
                    queue.push_back(y);
                }
            }
        }
    }
    Ok(seen)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StationaryMode {
    Full,
    /// Restricted to the class of the given state.
    Class(State),
}

/// Product-form Poisson law with parameter `c` on the window. Class mode keeps
/// only the class of the given state and normalizes by the class mass in the
/// window plus the lattice mass outside it, which is reported as the tail.
///
/// Does not check complex balance; see [`verify_complex_balanced`].
pub fn stationary_pmf(net: &ReactionNetwork, c: &[f64], window: &Window, mode: &StationaryMode) -> Result<Pmf> {
    check_c(c, net.dim())?;
    if window.dim() != net.dim() {
        return Err(Error::WindowMismatch);
    }
    let tables = poisson_tables(c, window);
    let value = |x: &State| -> f64 {
        x.iter()
            .zip(&tables)
            .zip(&window.lower)
            .map(|((&v, t), &lo)| t[(v - lo) as usize])
            .product()
    };
    let full_window_mass: f64 = tables.iter().map(|t| t.iter().sum::<f64>()).product();
    let outside = (1.0 - full_window_mass).max(0.0);
    match mode {
        StationaryMode::Full => {
            let mass: BTreeMap<State, f64> = window.states().map(|x| {
                let v = value(&x);
                (x, v)
            }).collect();
            Ok(Pmf {
                window: window.clone(),
                mass,
                tail_mass: outside,
            })
        }
        StationaryMode::Class(init) => {
            let class = reachable_class(net, init, window)?;
            let raw: BTreeMap<State, f64> = class.into_iter().map(|x| {
                let v = value(&x);
                (x, v)
            }).collect();
            let inside: f64 = raw.values().sum();
            let norm = inside + outside;
            if !(norm > 0.0) {
                return Err(Error::EmptyClass);
            }
            Ok(Pmf {
                window: window.clone(),
                mass: raw.into_iter().map(|(x, v)| (x, v / norm)).collect(),
                tail_mass: outside / norm,
            })
        }
    }
}

/// Empirical law at time `t` of `m` independent runs from `init`, with the
/// number of runs that hit a simulation cap before `t`.
pub fn empirical_distribution(
    net: &ReactionNetwork,
    init: &State,
    t: f64,
    m: usize,
    window: &Window,
    config: &SimConfig,
) -> Result<(Pmf, usize)> {
    if m < 1 {
        return Err(Error::InvalidArgument("need at least one run".into()));
    }
    if init.len() != net.dim() || window.dim() != net.dim() {
        return Err(Error::DimensionMismatch {
            expected: net.dim(),
            got: init.len(),
        });
    }
    config.validate()?;
    let mut walkers: Vec<Walker> = (0..m as u64).map(|i| Walker::new(init, config.seed, i)).collect();
    advance_all(net, &mut walkers, t, config);
    let capped = walkers.iter().filter(|w| w.status() == WalkStatus::CapExceeded).count();
    Ok((Pmf::from_samples(window.clone(), walkers.iter().map(|w| w.state())), capped))
}

fn l1_in_window(p: &Pmf, q: &Pmf) -> Result<f64> {
    if p.window != q.window {
        return Err(Error::WindowMismatch);
    }
    let mut sum = 0.0;
    let mut a = p.mass.iter().peekable();
    let mut b = q.mass.iter().peekable();
    loop {
        match (a.peek(), b.peek()) {
            (Some((xa, va)), Some((xb, vb))) => match xa.cmp(xb) {
                std::cmp::Ordering::Less => {
                    sum += va.abs();
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    sum += vb.abs();
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    sum += (*va - *vb).abs();
                    a.next();
                    b.next();
                }
            },
            (Some((_, va)), None) => {
                sum += va.abs();
                a.next();
            }
            (None, Some((_, vb))) => {
                sum += vb.abs();
                b.next();
            }
            (None, None) => break,
        }
    }
    Ok(sum)
}

/// `1/2 sum_W |p - q| + 1/2 p.tail`. `q` plays the stationary law; its tail is
/// not used, so the distance is not symmetric.
pub fn tv_windowed(p: &Pmf, q: &Pmf) -> Result<f64> {
    Ok((0.5 * l1_in_window(p, q)? + 0.5 * p.tail_mass).clamp(0.0, 1.0))
}

/// `1/2 sum_W |p - q| + 1/2 |p.tail - q.tail|`
pub fn tv_windowed_symmetric(p: &Pmf, q: &Pmf) -> Result<f64> {
    Ok((0.5 * l1_in_window(p, q)? + 0.5 * (p.tail_mass - q.tail_mass).abs()).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixingConfig {
    pub delta: f64,
    pub grid_step: f64,
    pub m: usize,
    pub window: Window,
    pub t_max: f64,
    pub symmetric: bool,
}

impl MixingConfig {
    /// Grid step 100 and `t_max = 1e5 * grid_step`.
    pub fn new(delta: f64, m: usize, window: Window) -> Self {
        MixingConfig {
            delta,
            grid_step: 100.0,
            m,
            window,
            t_max: 1e7,
            symmetric: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidArgument(format!("delta must be in (0,1), got {}", self.delta)));
        }
        if !(self.grid_step > 0.0) || !(self.t_max > 0.0) {
            return Err(Error::InvalidArgument("grid step and t_max must be positive".into()));
        }
        if self.m < 1 {
            return Err(Error::InvalidArgument("need at least one trajectory".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixingEstimate {
    /// First grid time with TV <= delta, `None` if not reached by `t_max`.
    pub t_mix: Option<f64>,
    pub tv_curve: Vec<(f64, f64)>,
    pub config: MixingConfig,
    pub capped: usize,
}

/// First time on the curve with TV at most `delta`.
pub fn first_crossing(curve: &[(f64, f64)], delta: f64) -> Option<f64> {
    curve.iter().find(|&&(_, tv)| tv <= delta).map(|&(t, _)| t)
}

/// Evaluates the TV distance to `reference` at `k * grid_step`, `k = 1, 2, ...`
/// until it drops to `delta` or `t_max` is passed. The same `m` sample paths
/// are used at every grid time.
pub fn estimate_mixing_time(
    net: &ReactionNetwork,
    init: &State,
    reference: &Pmf,
    cfg: &MixingConfig,
    sim: &SimConfig,
) -> Result<MixingEstimate> {
    cfg.validate()?;
    sim.validate()?;
    if reference.window != cfg.window {
        return Err(Error::WindowMismatch);
    }
    if init.len() != net.dim() {
        return Err(Error::DimensionMismatch {
            expected: net.dim(),
            got: init.len(),
        });
    }
    let mut walkers: Vec<Walker> = (0..cfg.m as u64).map(|i| Walker::new(init, sim.seed, i)).collect();
    let mut curve = Vec::new();
    let mut t_mix = None;
    for k in 1u64.. {
        let t = k as f64 * cfg.grid_step;
        if t > cfg.t_max {
            break;
        }
        advance_all(net, &mut walkers, t, sim);
        let p = Pmf::from_samples(cfg.window.clone(), walkers.iter().map(|w| w.state()));
        let tv = if cfg.symmetric {
            tv_windowed_symmetric(&p, reference)?
        } else {
            tv_windowed(&p, reference)?
        };
        curve.push((t, tv));
        if tv <= cfg.delta {
            t_mix = Some(t);
            break;
        }
        if walkers.iter().all(|w| w.status() == WalkStatus::CapExceeded) {
            break;
        }
    }
    let capped = walkers.iter().filter(|w| w.status() == WalkStatus::CapExceeded).count();
    Ok(MixingEstimate {
        t_mix,
        tv_curve: curve,
        config: cfg.clone(),
        capped,
    })
}

/// Largest relative violation of `sum_x pi(x) q(x,y) = pi(y) q(y)` over the
/// interior. Every in-neighbour of an interior state must lie in the pmf
/// window.
pub fn generator_balance_residual(net: &ReactionNetwork, pmf: &Pmf, interior: &Window) -> Result<f64> {
    if pmf.window.size() < 2 {
        return Err(Error::EmptyInterior("pmf window has a single state".into()));
    }
    if interior.dim() != net.dim() || pmf.window.dim() != net.dim() {
        return Err(Error::WindowMismatch);
    }
    let increments: Vec<Vec<i64>> = net.reactions().iter().map(|r| r.increment()).collect();
    let mut worst: f64 = 0.0;
    let mut count = 0usize;
    for y in interior.states() {
        if !pmf.window.contains(&y) {
            return Err(Error::InvalidWindow(format!("interior state {y} outside the pmf window")));
        }
        count += 1;
        let out = pmf.get(&y) * net.total_rate(&y)?;
        let mut inflow = 0.0;
        for (r, inc) in net.reactions().iter().zip(&increments) {
            let neg: Vec<i64> = inc.iter().map(|v| -v).collect();
            let Some(x) = y.offset(&neg) else { continue };
            let rate = r.propensity(&x);
            if rate <= 0.0 {
                continue;
            }
            if !pmf.window.contains(&x) {
                return Err(Error::InvalidWindow(format!(
                    "in-neighbour {x} of {y} outside the pmf window; shrink the interior"
                )));
            }
            inflow += pmf.get(&x) * rate;
        }
        worst = worst.max((inflow - out).abs() / out.max(1e-300));
    }
    if count == 0 {
        return Err(Error::EmptyInterior("no interior states".into()));
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogLogFit {
    pub slope: f64,
    /// Natural log of the prefactor.
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `ln y` on `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<LogLogFit> {
    if points.iter().any(|&(x, y)| !(x > 0.0) || !(y > 0.0)) {
        return Err(Error::DegenerateFit("log-log fit needs positive data".into()));
    }
    let distinct: BTreeSet<u64> = points.iter().map(|p| p.0.to_bits()).collect();
    if distinct.len() < 2 {
        return Err(Error::DegenerateFit("need at least two distinct x values".into()));
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(LogLogFit {
        slope,
        intercept,
        r_squared,
    })
}

/// CSV `x_<species>...,mass` with a closing `TAIL` row.
pub fn pmf_csv(net: &ReactionNetwork, pmf: &Pmf) -> String {
    let mut out = String::new();
    for s in net.species() {
        out.push_str(&format!("x_{},", s.name));
    }
    out.push_str("mass\n");
    for (x, v) in &pmf.mass {
        for c in x.iter() {
            out.push_str(&format!("{c},"));
        }
        out.push_str(&format!("{v:e}\n"));
    }
    out.push_str("TAIL,");
    for _ in 1..net.dim() {
        out.push(',');
    }
    out.push_str(&format!("{:e}\n", pmf.tail_mass));
    out
}

pub fn tv_curve_csv(curve: &[(f64, f64)]) -> String {
    let mut out = String::from("t,tv\n");
    for (t, tv) in curve {
        out.push_str(&format!("{t},{tv}\n"));
    }
    out
}
