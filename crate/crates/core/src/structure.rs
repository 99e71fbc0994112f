//! Structural analysis of the cyclic two-species class
//!
//! ```text
//! 0 -> z1 -> z2 -> ... -> z_{L-1} -> 0,   z_i = alpha_i A + beta_i B
//! ```
//!
//! Covers recognition of the class, the escape exponents `theta1`, `theta2`
//! and `theta`, the dominating boundary cycle `eta0` and the excursions
//! `eta^i`, and exact rational probabilities of the embedded chain following
//! a given sequence of increments.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::analysis::loglog_slope;
use crate::error::{Error, Result};
use crate::network::{Complex, Reaction, ReactionNetwork, Species, State};

/// A network of the cyclic class, indexed from the empty complex.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CyclicSpec {
    /// Number of complexes including the empty one.
    pub len: usize,
    pub alpha: Vec<u64>,
    pub beta: Vec<u64>,
    pub kappa: Vec<f64>,
    /// `reaction_of_step[i]` is the network index of `z_i -> z_{i+1 mod L}`.
    pub reaction_of_step: Vec<usize>,
}

impl CyclicSpec {
    fn z(&self, i: usize) -> [i64; 2] {
        let i = i % self.len;
        [self.alpha[i] as i64, self.beta[i] as i64]
    }

    /// `z_{k+1} - z_k` with indices mod L.
    fn step(&self, k: usize) -> Vec<i64> {
        let (a, b) = (self.z(k), self.z(k + 1));
        vec![b[0] - a[0], b[1] - a[1]]
    }

    fn label(&self, k: usize) -> usize {
        self.reaction_of_step[k % self.len]
    }

    /// Consecutive gaps `alpha_{i-1} - alpha_{i-2}` for `i = 2..=L`, as signed
    /// values so that non-monotone inputs can be reported.
    pub fn alpha_gaps(&self) -> Vec<i64> {
        self.alpha
            .windows(2)
            .map(|w| w[1] as i64 - w[0] as i64)
            .collect()
    }
}

/// Builds the cyclic network `0 -> z1 -> ... -> z_{L-1} -> 0` over species
/// `A`, `B`, where `kappa[i]` is the rate of `z_i -> z_{i+1}`.
pub fn cyclic_network(alpha: &[u64], beta: &[u64], kappa: &[f64]) -> Result<ReactionNetwork> {
    let l = alpha.len();
    if l < 2 || beta.len() != l || kappa.len() != l {
        return Err(Error::InvalidArgument(
            "alpha, beta and kappa need equal length L >= 2".into(),
        ));
    }
    if alpha[0] != 0 || beta[0] != 0 {
        return Err(Error::InvalidArgument("alpha_0 and beta_0 must be 0".into()));
    }
    let z = |i: usize| Complex::new(vec![alpha[i % l], beta[i % l]]);
    let reactions = (0..l)
        .map(|i| Reaction::new(z(i), z(i + 1), kappa[i]))
        .collect::<Result<Vec<_>>>()?;
    let species = vec![
        Species { index: 0, name: "A".into() },
        Species { index: 1, name: "B".into() },
    ];
    ReactionNetwork::new(species, reactions)
}

fn fmt_complex(c: &Complex) -> String {
    format!("{:?}", c.coefficients())
}

/// Recognizes a single directed cycle of complexes through the empty complex.
pub fn recognize_cyclic(net: &ReactionNetwork) -> Result<CyclicSpec> {
    if net.dim() != 2 {
        return Err(Error::NotTwoSpecies(net.dim()));
    }
    let reactions = net.reactions();
    let zero = Complex::zero(2);
    let from = |c: &Complex| -> Vec<usize> {
        reactions
            .iter()
            .enumerate()
            .filter(|(_, r)| &r.reactant == c)
            .map(|(i, _)| i)
            .collect()
    };

    let mut order = Vec::new();
    let mut visited: Vec<Complex> = vec![zero.clone()];
    let mut current = zero.clone();
    loop {
        let out = from(&current);
        let idx = match out.as_slice() {
            [i] => *i,
            [] => {
                return Err(Error::NotCyclic(format!(
                    "no reaction leaves complex {}",
                    fmt_complex(&current)
                )))
            }
            _ => return Err(Error::DuplicatedComplex(fmt_complex(&current))),
        };
        order.push(idx);
        let next = reactions[idx].product.clone();
        if next == zero {
            break;
        }
        if visited.contains(&next) {
            return Err(Error::DuplicatedComplex(fmt_complex(&next)));
        }
        visited.push(next.clone());
        current = next;
        if order.len() > reactions.len() {
            unreachable!("cycle longer than reaction list");
        }
    }
    if order.len() != reactions.len() {
        return Err(Error::NotCyclic(format!(
            "{} reactions but the cycle through 0 uses {}",
            reactions.len(),
            order.len()
        )));
    }
    let len = order.len();
    if len < 2 {
        return Err(Error::NotCyclic("cycle needs at least two complexes".into()));
    }
    let alpha = visited.iter().map(|c| c.coefficients()[0]).collect();
    let beta = visited.iter().map(|c| c.coefficients()[1]).collect();
    let kappa = order.iter().map(|&i| reactions[i].rate_constant).collect();
    Ok(CyclicSpec {
        len,
        alpha,
        beta,
        kappa,
        reaction_of_step: order,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub assumptions_ok: bool,
    pub violations: Vec<String>,
}

/// Checks the stoichiometric conditions under which the excursion analysis
/// applies: strictly increasing alpha, non-vanishing second differences,
/// `alpha_{L-1} - alpha_{L-2} - alpha_1 != 0`, and `beta_i = i`.
pub fn check_cyclic_assumptions(spec: &CyclicSpec) -> AssumptionReport {
    let a: Vec<i64> = spec.alpha.iter().map(|&x| x as i64).collect();
    let l = spec.len;
    let mut violations = Vec::new();
    for i in 1..l {
        if a[i] <= a[i - 1] {
            violations.push(format!(
                "alpha not strictly increasing: alpha_{} = {} <= alpha_{} = {}",
                i,
                a[i],
                i - 1,
                a[i - 1]
            ));
        }
    }
    for i in 1..l.saturating_sub(1) {
        let second = 2 * a[i] - a[i + 1] - a[i - 1];
        if second == 0 {
            violations.push(format!(
                "2*alpha_{i} - alpha_{} - alpha_{} = 0",
                i + 1,
                i - 1
            ));
        }
    }
    let top = a[l - 1] - a[l - 2] - a[1];
    if top == 0 {
        violations.push(format!(
            "alpha_{} - alpha_{} - alpha_1 = 0",
            l - 1,
            l - 2
        ));
    }
    for (i, &b) in spec.beta.iter().enumerate() {
        if b != i as u64 {
            violations.push(format!("beta_{i} = {b}, expected {i}"));
        }
    }
    AssumptionReport {
        assumptions_ok: violations.is_empty(),
        violations,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaBounds {
    pub theta1: u64,
    pub theta2: u64,
    pub theta: u64,
    pub assumptions_ok: bool,
    pub violations: Vec<String>,
}

/// Escape exponents. With the assumptions in force, `theta2` is the smallest
/// gap exceeding `theta1`, capped at `2 * theta1`, and `theta = min(1 + theta1,
/// theta2)`; otherwise only the cycle bound holds and `theta = theta2 = theta1`.
pub fn theta_bounds(spec: &CyclicSpec) -> Result<ThetaBounds> {
    let gaps = spec.alpha_gaps();
    if gaps.iter().any(|&g| g <= 0) {
        return Err(Error::AlphaNotIncreasing(spec.alpha.clone()));
    }
    let theta1 = *gaps.iter().min().unwrap() as u64;
    let report = check_cyclic_assumptions(spec);
    let mut violations = report.violations;
    if !spec.beta.windows(2).all(|w| w[0] <= w[1]) {
        violations.push("beta not increasing: cycle bound theta1 not guaranteed".into());
    }
    let (theta2, theta) = if report.assumptions_ok {
        let theta2 = gaps
            .iter()
            .map(|&g| g as u64)
            .filter(|&g| g > theta1)
            .min()
            .map_or(2 * theta1, |g| g.min(2 * theta1));
        (theta2, (1 + theta1).min(theta2))
    } else {
        (theta1, theta1)
    };
    Ok(ThetaBounds {
        theta1,
        theta2,
        theta,
        assumptions_ok: report.assumptions_ok,
        violations,
    })
}

/// A finite sequence of increments, each tagged with the reaction producing it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransitionSequence {
    pub increments: Vec<Vec<i64>>,
    pub labels: Vec<usize>,
}

impl TransitionSequence {
    pub fn empty() -> Self {
        TransitionSequence {
            increments: Vec::new(),
            labels: Vec::new(),
        }
    }

    /// Sequence of reaction vectors for the given reaction indices.
    pub fn from_labels(net: &ReactionNetwork, labels: &[usize]) -> Result<Self> {
        let increments = labels
            .iter()
            .map(|&i| {
                net.reactions()
                    .get(i)
                    .map(Reaction::increment)
                    .ok_or(Error::ReactionOutOfRange {
                        index: i,
                        count: net.reactions().len(),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TransitionSequence {
            increments,
            labels: labels.to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    /// Sum of all increments (the last vertex of the path from the origin).
    pub fn endpoint(&self, dim: usize) -> Vec<i64> {
        let mut sum = vec![0i64; dim];
        for inc in &self.increments {
            for (s, v) in sum.iter_mut().zip(inc) {
                *s += v;
            }
        }
        sum
    }

    pub fn is_cycle(&self) -> bool {
        let dim = self.increments.first().map_or(0, Vec::len);
        !self.is_empty() && self.endpoint(dim).iter().all(|&v| v == 0)
    }

    fn has_prefix(&self, other: &TransitionSequence) -> bool {
        other.len() <= self.len() && self.increments[..other.len()] == other.increments[..]
    }
}

pub fn is_cycle(seq: &TransitionSequence) -> bool {
    seq.is_cycle()
}

/// The dominating boundary cycle `(z1 - z0, z2 - z1, ..., z0 - z_{L-1})`.
pub fn build_eta0(spec: &CyclicSpec) -> TransitionSequence {
    let increments = (0..spec.len).map(|k| spec.step(k)).collect();
    let labels = (0..spec.len).map(|k| spec.label(k)).collect();
    TransitionSequence { increments, labels }
}

/// Excursion leaving `eta0` at transition `i` (2 <= i <= L-1) by repeating the
/// previous reaction instead of advancing.
pub fn build_eta_mid(spec: &CyclicSpec, i: usize) -> Result<TransitionSequence> {
    let l = spec.len;
    if i < 2 || i + 1 > l {
        return Err(Error::ExcursionIndexOutOfRange {
            index: i,
            max: l.saturating_sub(1),
        });
    }
    let mut seq = build_eta0(spec);
    // transitions are 1-based: the i-th transition is element i - 1
    seq.increments[i - 1] = spec.step(i - 2);
    seq.labels[i - 1] = spec.label(i - 2);
    Ok(seq)
}

/// Excursion leaving `eta0` at its last transition. Length `2L`: the first
/// `L - 1` steps of `eta0`, a repeat of step `L - 1`, the return to `0`, then
/// steps `2..=L` of `eta0`.
///
/// For `L = 2` the construction is degenerate: the result is a cycle.
pub fn build_eta_top(spec: &CyclicSpec) -> TransitionSequence {
    let l = spec.len;
    let mut increments = Vec::with_capacity(2 * l);
    let mut labels = Vec::with_capacity(2 * l);
    let mut push = |k: usize| {
        increments.push(spec.step(k));
        labels.push(spec.label(k));
    };
    for k in 0..l - 1 {
        push(k);
    }
    push(l - 2);
    push(l - 1);
    for k in 1..l {
        push(k);
    }
    TransitionSequence { increments, labels }
}

/// Excursion `eta^i` for `2 <= i <= L`.
pub fn build_excursion(spec: &CyclicSpec, i: usize) -> Result<TransitionSequence> {
    if i == spec.len {
        Ok(build_eta_top(spec))
    } else {
        build_eta_mid(spec, i)
    }
}

/// The excursions whose exit gap equals `theta1`, as `(i, eta^i)`.
pub fn dominating_excursions(spec: &CyclicSpec) -> Result<Vec<(usize, TransitionSequence)>> {
    let gaps = spec.alpha_gaps();
    let theta1 = *gaps.iter().min().ok_or(Error::AlphaNotIncreasing(spec.alpha.clone()))?;
    (2..=spec.len)
        .filter(|&i| gaps[i - 2] == theta1)
        .map(|i| build_excursion(spec, i).map(|s| (i, s)))
        .collect()
}

fn falling_factorial(x: u64, k: u64) -> BigInt {
    let mut acc = BigInt::one();
    for j in 0..k {
        acc *= BigInt::from(x - j);
    }
    acc
}

fn exact_propensity(r: &Reaction, x: &[u64]) -> BigRational {
    let mut num = BigInt::one();
    for (&xi, &yi) in x.iter().zip(r.reactant.coefficients()) {
        if xi < yi {
            return BigRational::zero();
        }
        num *= falling_factorial(xi, yi);
    }
    let kappa = BigRational::from_float(r.rate_constant).expect("finite rate constant");
    kappa * BigRational::from_integer(num)
}

/// States visited by `start + gamma_seq`, checked to stay non-negative.
pub fn path_states(start: &State, seq: &TransitionSequence) -> Result<Vec<State>> {
    let mut states = vec![start.clone()];
    for (k, inc) in seq.increments.iter().enumerate() {
        if inc.len() != start.len() {
            return Err(Error::DimensionMismatch {
                expected: start.len(),
                got: inc.len(),
            });
        }
        let next = states[k]
            .offset(inc)
            .ok_or(Error::InfeasiblePath { step: k + 1 })?;
        states.push(next);
    }
    Ok(states)
}

/// Exact probability that the first `|seq|` jumps of the embedded chain from
/// `start` follow `seq`. A step's probability is the total intensity of the
/// reactions with that increment divided by the total intensity.
pub fn path_probability(
    net: &ReactionNetwork,
    start: &State,
    seq: &TransitionSequence,
) -> Result<BigRational> {
    if start.len() != net.dim() {
        return Err(Error::DimensionMismatch {
            expected: net.dim(),
            got: start.len(),
        });
    }
    let states = path_states(start, seq)?;
    let increments: Vec<Vec<i64>> = net.reactions().iter().map(Reaction::increment).collect();
    let mut prob = BigRational::one();
    for (x, inc) in states.iter().zip(&seq.increments) {
        let mut total = BigRational::zero();
        let mut along = BigRational::zero();
        for (r, r_inc) in net.reactions().iter().zip(&increments) {
            let p = exact_propensity(r, x);
            if r_inc == inc {
                along += &p;
            }
            total += p;
        }
        if along.is_zero() {
            return Ok(BigRational::zero());
        }
        prob *= along / total;
    }
    Ok(prob)
}

/// `1 - P(union of E_eta)`. Paths extending another listed path are dropped,
/// the remaining events are disjoint.
pub fn union_complement(
    net: &ReactionNetwork,
    start: &State,
    paths: &[TransitionSequence],
) -> Result<BigRational> {
    let mut kept: Vec<&TransitionSequence> = Vec::new();
    for p in paths {
        let redundant = paths
            .iter()
            .any(|q| q.len() < p.len() && p.has_prefix(q))
            || kept.iter().any(|q| q.increments == p.increments);
        if !redundant {
            kept.push(p);
        }
    }
    let mut complement = BigRational::one();
    for p in kept {
        complement -= path_probability(net, start, p)?;
    }
    Ok(complement)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EscapeComplement {
    /// `1 - P(E_eta0)`
    pub cycles_only: BigRational,
    /// `1 - P(E_eta0 or any dominating excursion)`
    pub with_excursions: BigRational,
}

fn axis_state(n: u64, dim: usize) -> State {
    let mut v = vec![0; dim];
    v[0] = n;
    State::new(v)
}

/// Escape probabilities from `(n, 0)` for the automatically constructed path
/// sets of a cyclic spec.
pub fn escape_complement_probability(
    net: &ReactionNetwork,
    spec: &CyclicSpec,
    n: u64,
) -> Result<EscapeComplement> {
    let cycles = vec![build_eta0(spec)];
    let excursions: Vec<_> = dominating_excursions(spec)?
        .into_iter()
        .map(|(_, s)| s)
        .collect();
    escape_complement_for_sets(net, &cycles, &excursions, n)
}

pub fn escape_complement_for_sets(
    net: &ReactionNetwork,
    cycles: &[TransitionSequence],
    excursions: &[TransitionSequence],
    n: u64,
) -> Result<EscapeComplement> {
    let start = axis_state(n, net.dim());
    let cycles_only = union_complement(net, &start, cycles)?;
    let all: Vec<TransitionSequence> = cycles.iter().chain(excursions).cloned().collect();
    let with_excursions = union_complement(net, &start, &all)?;
    Ok(EscapeComplement {
        cycles_only,
        with_excursions,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplementFit {
    pub samples: Vec<(u64, BigRational)>,
    /// Slope of `log(complement)` against `log(n)`; tends to `-theta`.
    pub fitted_exponent: f64,
    /// `c` in `complement ~ c * n^exponent`.
    pub fitted_constant: f64,
    /// Smallest grid point from which every complement stays within a
    /// factor 2 of the fitted power law.
    pub n0_suggested: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionFit {
    pub cycles: ComplementFit,
    pub with_excursions: ComplementFit,
}

fn fit_samples(samples: Vec<(u64, BigRational)>) -> Result<ComplementFit> {
    let points: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(_, p)| p > &BigRational::zero())
        .map(|(n, p)| (*n as f64, p.to_f64().unwrap_or(0.0)))
        .filter(|&(_, p)| p > 0.0)
        .collect();
    if points.is_empty() {
        return Err(Error::DegenerateFit("all complement probabilities are zero".into()));
    }
    if points.len() < 2 {
        return Err(Error::DegenerateFit(
            "fewer than two positive complement probabilities".into(),
        ));
    }
    let fit = loglog_slope(&points)?;
    let constant = fit.intercept.exp();
    let within = |n: f64, p: f64| p <= 2.0 * constant * n.powf(fit.slope);
    let mut n0 = samples.last().map_or(0, |s| s.0);
    for (i, (n, _)) in samples.iter().enumerate().rev() {
        let ok = samples[i..].iter().all(|(m, p)| {
            let p = p.to_f64().unwrap_or(0.0);
            within(*m as f64, p)
        });
        if ok {
            n0 = *n;
        } else {
            break;
        }
    }
    Ok(ComplementFit {
        samples,
        fitted_exponent: fit.slope,
        fitted_constant: constant,
        n0_suggested: n0,
    })
}

fn check_grid(n_grid: &[u64]) -> Result<()> {
    if n_grid.len() < 3 {
        return Err(Error::InvalidArgument("n grid needs at least 3 points".into()));
    }
    if !n_grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument("n grid must be strictly ascending".into()));
    }
    Ok(())
}

/// Empirical exponents of the escape complements over `n_grid`.
pub fn fit_assumption(
    net: &ReactionNetwork,
    spec: &CyclicSpec,
    n_grid: &[u64],
) -> Result<AssumptionFit> {
    let cycles = vec![build_eta0(spec)];
    let excursions: Vec<_> = dominating_excursions(spec)?
        .into_iter()
        .map(|(_, s)| s)
        .collect();
    fit_path_sets(net, &cycles, &excursions, n_grid)
}

/// Same as [`fit_assumption`] for caller-supplied path sets.
pub fn fit_path_sets(
    net: &ReactionNetwork,
    cycles: &[TransitionSequence],
    excursions: &[TransitionSequence],
    n_grid: &[u64],
) -> Result<AssumptionFit> {
    check_grid(n_grid)?;
    let mut c = Vec::with_capacity(n_grid.len());
    let mut e = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let esc = escape_complement_for_sets(net, cycles, excursions, n)?;
        c.push((n, esc.cycles_only));
        e.push((n, esc.with_excursions));
    }
    Ok(AssumptionFit {
        cycles: fit_samples(c)?,
        with_excursions: fit_samples(e)?,
    })
}

/// User-supplied path sets: `[cycles]` and `[excursions]` sections, one path
/// per line as comma-separated 0-based reaction indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PathSets {
    pub cycles: Vec<TransitionSequence>,
    pub excursions: Vec<TransitionSequence>,
}

pub fn parse_path_file(net: &ReactionNetwork, text: &str) -> Result<PathSets> {
    let mut sets = PathSets::default();
    let mut section: Option<bool> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        match line {
            "[cycles]" => section = Some(true),
            "[excursions]" => section = Some(false),
            _ => {
                let labels = line
                    .split(',')
                    .map(|t| t.trim().parse::<usize>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| Error::Syntax {
                        line: lineno + 1,
                        column: 1,
                        message: format!("expected comma-separated reaction indices, got `{line}`"),
                    })?;
                let seq = TransitionSequence::from_labels(net, &labels)?;
                match section {
                    Some(true) => sets.cycles.push(seq),
                    Some(false) => sets.excursions.push(seq),
                    None => {
                        return Err(Error::Syntax {
                            line: lineno + 1,
                            column: 1,
                            message: "path before any [cycles]/[excursions] header".into(),
                        })
                    }
                }
            }
        }
    }
    Ok(sets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_network;

    fn ex32(alpha: u64) -> ReactionNetwork {
        cyclic_network(&[0, alpha, 2 * alpha - 1], &[0, 1, 2], &[1.0; 3]).unwrap()
    }

    fn spec_of(alpha: &[u64], beta: &[u64]) -> CyclicSpec {
        let net = cyclic_network(alpha, beta, &vec![1.0; alpha.len()]).unwrap();
        recognize_cyclic(&net).unwrap()
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn recognizes_example_network_from_text() {
        let net =
            parse_network("0 -> 2 A + B @ 1\n2 A + B -> 3 A + 2 B @ 1\n3 A + 2 B -> 0 @ 1").unwrap();
        let spec = recognize_cyclic(&net).unwrap();
        assert_eq!(spec.len, 3);
        assert_eq!(spec.alpha, vec![0, 2, 3]);
        assert_eq!(spec.beta, vec![0, 1, 2]);
        assert_eq!(spec.reaction_of_step, vec![0, 1, 2]);
    }

    #[test]
    fn recognizes_shuffled_reaction_order() {
        let net =
            parse_network("2 A + B -> 3 A + 2 B @ 2\n3 A + 2 B -> 0 @ 3\n0 -> 2 A + B @ 1").unwrap();
        let spec = recognize_cyclic(&net).unwrap();
        assert_eq!(spec.alpha, vec![0, 2, 3]);
        assert_eq!(spec.reaction_of_step, vec![2, 0, 1]);
        assert_eq!(spec.kappa, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn rejects_non_cyclic_networks() {
        let m12 = parse_network("0 <-> A + B @ 1, 1\nB <-> 2 B @ 1, 1").unwrap();
        assert!(matches!(recognize_cyclic(&m12), Err(Error::NotCyclic(_))));
        let one = parse_network("0 -> A @ 1\nA -> 0 @ 1").unwrap();
        assert_eq!(recognize_cyclic(&one), Err(Error::NotTwoSpecies(1)));
        let branch = parse_network("0 -> A @ 1\n0 -> B @ 1\nA -> 0 @ 1\nB -> 0 @ 1").unwrap();
        assert!(matches!(recognize_cyclic(&branch), Err(Error::DuplicatedComplex(_))));
        let revisit = parse_network("0 -> A @ 1\nA -> B @ 1\nB -> A + B @ 1\nA + B -> B + 2 A @1\nB + 2A -> A @ 1").unwrap();
        assert!(recognize_cyclic(&revisit).is_err());
    }

    #[test]
    fn smallest_cycle() {
        let net = cyclic_network(&[0, 1], &[0, 0], &[1.0, 1.0]).unwrap();
        let spec = recognize_cyclic(&net).unwrap();
        assert_eq!(spec.len, 2);
        assert_eq!(spec.alpha, vec![0, 1]);
        assert_eq!(spec.beta, vec![0, 0]);
    }

    #[test]
    fn assumption_checks() {
        assert!(check_cyclic_assumptions(&spec_of(&[0, 2, 3], &[0, 1, 2])).assumptions_ok);
        let r = check_cyclic_assumptions(&spec_of(&[0, 1, 2], &[0, 1, 2]));
        assert!(!r.assumptions_ok);
        assert!(r.violations.iter().any(|v| v.contains("2*alpha_1")));
        assert!(check_cyclic_assumptions(&spec_of(&[0, 2, 5, 9], &[0, 1, 2, 3])).assumptions_ok);
        let r = check_cyclic_assumptions(&spec_of(&[0, 2, 3], &[0, 2, 3]));
        assert!(r.violations.iter().any(|v| v.contains("beta_1")));
    }

    #[test]
    fn theta_examples() {
        let t = theta_bounds(&spec_of(&[0, 2, 3], &[0, 1, 2])).unwrap();
        assert_eq!((t.theta1, t.theta2, t.theta), (1, 2, 2));
        let t = theta_bounds(&spec_of(&[0, 3, 5], &[0, 1, 2])).unwrap();
        assert_eq!((t.theta1, t.theta2, t.theta), (2, 3, 3));
        let t = theta_bounds(&spec_of(&[0, 2, 5, 9], &[0, 1, 2, 3])).unwrap();
        assert_eq!((t.theta1, t.theta2, t.theta), (2, 3, 3));
        // assumption fails: fall back to the cycle bound
        let t = theta_bounds(&spec_of(&[0, 1, 2], &[0, 1, 2])).unwrap();
        assert!(!t.assumptions_ok);
        assert_eq!((t.theta1, t.theta2, t.theta), (1, 1, 1));
        let bad = spec_of(&[0, 3, 2], &[0, 1, 2]);
        assert!(matches!(theta_bounds(&bad), Err(Error::AlphaNotIncreasing(_))));
    }

    #[test]
    fn eta0_examples() {
        let e = build_eta0(&spec_of(&[0, 2, 3], &[0, 1, 2]));
        assert_eq!(e.increments, vec![vec![2, 1], vec![1, 1], vec![-3, -2]]);
        assert!(e.is_cycle());
        let e = build_eta0(&spec_of(&[0, 1], &[0, 1]));
        assert_eq!(e.increments, vec![vec![1, 1], vec![-1, -1]]);
        assert!(is_cycle(&e));
    }

    #[test]
    fn eta_mid_examples() {
        let s = spec_of(&[0, 2, 5, 9], &[0, 1, 2, 3]);
        let e = build_eta_mid(&s, 2).unwrap();
        assert_eq!(e.endpoint(2), vec![-1, 0]);
        let e3 = build_eta_mid(&s, 3).unwrap();
        assert_eq!(e3.endpoint(2), vec![2 * 5 - 2 - 9, 0]);

        let s = spec_of(&[0, 2, 3], &[0, 1, 2]);
        let e = build_eta_mid(&s, 2).unwrap();
        assert_eq!(e.increments, vec![vec![2, 1], vec![2, 1], vec![-3, -2]]);
        assert_eq!(e.labels, vec![0, 0, 2]);
        assert_eq!(e.endpoint(2), vec![1, 0]);
        assert!(matches!(
            build_eta_mid(&s, 3),
            Err(Error::ExcursionIndexOutOfRange { .. })
        ));
        assert!(build_eta_mid(&s, 1).is_err());
    }

    #[test]
    fn eta_top_examples() {
        let s = spec_of(&[0, 2, 3], &[0, 1, 2]);
        let e = build_eta_top(&s);
        assert_eq!(
            e.increments,
            vec![vec![2, 1], vec![1, 1], vec![1, 1], vec![-3, -2], vec![1, 1], vec![-3, -2]]
        );
        assert_eq!(e.endpoint(2), vec![-1, 0]);
        assert!(!e.is_cycle());

        let s = spec_of(&[0, 2, 5, 9], &[0, 1, 2, 3]);
        assert_eq!(build_eta_top(&s).endpoint(2), vec![9 - 5 - 2, 0]);

        // L = 2 degenerates into a cycle
        let s = spec_of(&[0, 1], &[0, 1]);
        let e = build_eta_top(&s);
        assert_eq!(e.len(), 4);
        assert!(e.is_cycle());
    }

    #[test]
    fn is_cycle_single_step() {
        let seq = TransitionSequence {
            increments: vec![vec![0, 1]],
            labels: vec![0],
        };
        assert!(!seq.is_cycle());
    }

    #[test]
    fn model12_path_probabilities() {
        let net = parse_network("0 <-> A + B @ 1, 1\nB <-> 2 B @ 1, 1").unwrap();
        let start = State::new(vec![10, 0]);
        let eta1 = TransitionSequence::from_labels(&net, &[0, 1]).unwrap();
        let eta2 = TransitionSequence::from_labels(&net, &[0, 0, 1, 1]).unwrap();
        let eta3 = TransitionSequence::from_labels(&net, &[0, 2, 1, 1]).unwrap();
        assert_eq!(path_probability(&net, &start, &eta1).unwrap(), rat(11, 13));
        assert_eq!(
            path_probability(&net, &start, &eta2).unwrap(),
            rat(1, 13) * rat(24, 29) * rat(11, 13)
        );
        assert_eq!(
            path_probability(&net, &start, &TransitionSequence::empty()).unwrap(),
            BigRational::one()
        );
        let esc = escape_complement_for_sets(&net, &[eta1, eta2], &[eta3], 10).unwrap();
        assert_eq!(
            esc.with_excursions,
            BigRational::one()
                - rat(11, 13)
                - rat(1, 13) * rat(24, 29) * rat(11, 13)
                - rat(1, 13) * rat(22, 27) * rat(10, 12)
        );
    }

    #[test]
    fn infeasible_start_is_an_error() {
        let net = parse_network("0 <-> A + B @ 1, 1\nB <-> 2 B @ 1, 1").unwrap();
        let eta3 = TransitionSequence::from_labels(&net, &[0, 2, 1, 1]).unwrap();
        assert!(matches!(
            path_probability(&net, &State::new(vec![0, 0]), &eta3),
            Err(Error::InfeasiblePath { step: 4 })
        ));
    }

    #[test]
    fn zero_propensity_step_gives_zero() {
        let net = parse_network("0 <-> A + B @ 1, 1\nB <-> 2 B @ 1, 1").unwrap();
        // B -> 2B cannot fire at (5, 0)
        let seq = TransitionSequence::from_labels(&net, &[2]).unwrap();
        assert!(path_probability(&net, &State::new(vec![5, 0]), &seq)
            .unwrap()
            .is_zero());
    }

    #[test]
    fn prefix_paths_are_not_double_counted() {
        let net = parse_network("0 <-> A + B @ 1, 1\nB <-> 2 B @ 1, 1").unwrap();
        let short = TransitionSequence::from_labels(&net, &[0]).unwrap();
        let long = TransitionSequence::from_labels(&net, &[0, 1]).unwrap();
        let start = State::new(vec![10, 0]);
        let c = union_complement(&net, &start, &[long.clone(), short.clone(), short]).unwrap();
        assert!(c.is_zero());
    }

    #[test]
    fn escape_complement_decays_like_one_over_n() {
        let net = ex32(2);
        let spec = recognize_cyclic(&net).unwrap();
        let esc = escape_complement_probability(&net, &spec, 100).unwrap();
        let c = esc.cycles_only.to_f64().unwrap();
        assert!(c > 0.0 && c <= 2.0 / 100.0, "{c}");
        assert!(esc.with_excursions < esc.cycles_only);
        let ex = dominating_excursions(&spec).unwrap();
        assert_eq!(ex.len(), 1);
        assert_eq!(ex[0].0, 3);
    }

    #[test]
    fn escape_complement_below_feasibility_errors() {
        let net = ex32(2);
        let spec = recognize_cyclic(&net).unwrap();
        assert!(matches!(
            escape_complement_probability(&net, &spec, 0),
            Err(Error::InfeasiblePath { .. })
        ));
    }

    #[test]
    fn fit_recovers_exponents() {
        let net = ex32(2);
        let spec = recognize_cyclic(&net).unwrap();
        let fit = fit_assumption(&net, &spec, &[50, 100, 200, 400, 800]).unwrap();
        assert!((fit.cycles.fitted_exponent + 1.0).abs() < 0.1, "{}", fit.cycles.fitted_exponent);
        assert!(
            (fit.with_excursions.fitted_exponent + 2.0).abs() < 0.2,
            "{}",
            fit.with_excursions.fitted_exponent
        );
        assert!(fit.cycles.samples.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn fit_of_constant_data_is_flat() {
        let samples = (1..=4u64).map(|n| (n * 100, rat(1, 7))).collect();
        let fit = fit_samples(samples).unwrap();
        assert!(fit.fitted_exponent.abs() < 1e-12);
        assert!((fit.fitted_constant - 1.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn fit_of_zero_data_is_degenerate() {
        let samples = (1..=4u64).map(|n| (n, BigRational::zero())).collect();
        assert!(matches!(fit_samples(samples), Err(Error::DegenerateFit(_))));
        let net = ex32(2);
        let spec = recognize_cyclic(&net).unwrap();
        assert!(fit_assumption(&net, &spec, &[50, 100]).is_err());
        assert!(fit_assumption(&net, &spec, &[100, 50, 200]).is_err());
    }

    #[test]
    fn path_file_parsing() {
        let net = parse_network("0 <-> A + B @ 1, 1\nB <-> 2 B @ 1, 1").unwrap();
        let sets = parse_path_file(
            &net,
            "# model paths\n[cycles]\n0,1\n0, 0, 1, 1\n\n[excursions]\n0,2,1,1\n",
        )
        .unwrap();
        assert_eq!(sets.cycles.len(), 2);
        assert_eq!(sets.excursions.len(), 1);
        assert_eq!(sets.excursions[0].increments[1], vec![0, 1]);
        assert!(parse_path_file(&net, "0,1\n").is_err());
        assert!(parse_path_file(&net, "[cycles]\n0,x\n").is_err());
        assert!(parse_path_file(&net, "[cycles]\n0,9\n").is_err());
    }
}
