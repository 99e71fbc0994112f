//! Reaction networks under stochastic mass-action kinetics.
//!
//! A network is a list of species and a list of irreversible reactions
//! `y -> y'`, each with a positive rate constant. Reversible reactions only
//! exist in the text format (see [`crate::dsl`]) and expand to two records.

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Species {
    pub index: usize,
    pub name: String,
}

/// Stoichiometric coefficients of a complex, one entry per species.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Complex(Vec<u64>);

impl Complex {
    pub fn new(coefficients: Vec<u64>) -> Self {
        Complex(coefficients)
    }

    pub fn zero(dim: usize) -> Self {
        Complex(vec![0; dim])
    }

    pub fn coefficients(&self) -> &[u64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }
}

/// Copy-number vector of the chain.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct State(Vec<u64>);

impl State {
    pub fn new(counts: Vec<u64>) -> Self {
        State(counts)
    }

    pub fn counts(&self) -> &[u64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<u64> {
        self.0
    }

    /// `self + delta`, or `None` if any coordinate would become negative.
    pub fn offset(&self, delta: &[i64]) -> Option<State> {
        debug_assert_eq!(self.0.len(), delta.len());
        self.0
            .iter()
            .zip(delta)
            .map(|(&x, &d)| x.checked_add_signed(d))
            .collect::<Option<Vec<_>>>()
            .map(State)
    }

    pub fn sup_norm(&self) -> u64 {
        self.0.iter().copied().max().unwrap_or(0)
    }
}

impl Deref for State {
    type Target = [u64];

    fn deref(&self) -> &[u64] {
        &self.0
    }
}

impl From<Vec<u64>> for State {
    fn from(v: Vec<u64>) -> Self {
        State(v)
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reaction {
    pub reactant: Complex,
    pub product: Complex,
    pub rate_constant: f64,
}

impl Reaction {
    pub fn new(reactant: Complex, product: Complex, rate_constant: f64) -> Result<Self> {
        if reactant.dim() != product.dim() {
            return Err(Error::DimensionMismatch {
                expected: reactant.dim(),
                got: product.dim(),
            });
        }
        if reactant == product {
            return Err(Error::ReactantEqualsProduct { line: 0 });
        }
        if !(rate_constant > 0.0 && rate_constant.is_finite()) {
            return Err(Error::NonPositiveRate {
                line: 0,
                value: rate_constant,
            });
        }
        Ok(Reaction {
            reactant,
            product,
            rate_constant,
        })
    }

    /// Reaction vector `y' - y`.
    pub fn increment(&self) -> Vec<i64> {
        self.product
            .coefficients()
            .iter()
            .zip(self.reactant.coefficients())
            .map(|(&p, &r)| p as i64 - r as i64)
            .collect()
    }

    /// Mass-action intensity `kappa * prod x_i! / (x_i - y_i)!`, zero when
    /// any `x_i < y_i`.
    pub fn propensity(&self, x: &[u64]) -> f64 {
        let mut value = self.rate_constant;
        for (&xi, &yi) in x.iter().zip(self.reactant.coefficients()) {
            if xi < yi {
                return 0.0;
            }
            for k in 0..yi {
                value *= (xi - k) as f64;
            }
        }
        value
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReactionNetwork {
    species: Vec<Species>,
    reactions: Vec<Reaction>,
}

impl ReactionNetwork {
    pub fn new(species: Vec<Species>, reactions: Vec<Reaction>) -> Result<Self> {
        if species.is_empty() || reactions.is_empty() {
            return Err(Error::EmptyNetwork);
        }
        for (i, s) in species.iter().enumerate() {
            if s.index != i {
                return Err(Error::InvalidArgument(format!(
                    "species `{}` has index {} at position {i}",
                    s.name, s.index
                )));
            }
            if species[..i].iter().any(|t| t.name == s.name) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate species name `{}`",
                    s.name
                )));
            }
        }
        let d = species.len();
        for r in &reactions {
            for c in [&r.reactant, &r.product] {
                if c.dim() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: c.dim(),
                    });
                }
            }
        }
        Ok(ReactionNetwork { species, reactions })
    }

    pub fn species(&self) -> &[Species] {
        &self.species
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    pub fn dim(&self) -> usize {
        self.species.len()
    }

    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species.iter().position(|s| s.name == name)
    }

    /// All distinct complexes in first-appearance order.
    pub fn complexes(&self) -> Vec<Complex> {
        let mut out: Vec<Complex> = Vec::new();
        for r in &self.reactions {
            for c in [&r.reactant, &r.product] {
                if !out.contains(c) {
                    out.push(c.clone());
                }
            }
        }
        out
    }

    fn check_dim(&self, x: &[u64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn propensity(&self, reaction: usize, x: &State) -> Result<f64> {
        self.check_dim(x)?;
        let r = self
            .reactions
            .get(reaction)
            .ok_or(Error::ReactionOutOfRange {
                index: reaction,
                count: self.reactions.len(),
            })?;
        Ok(r.propensity(x))
    }

    pub fn total_rate(&self, x: &State) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.reactions.iter().map(|r| r.propensity(x)).sum())
    }

    /// One-step law of the embedded jump chain at `x`.
    pub fn embedded_step_distribution(&self, x: &State) -> Result<StepDistribution> {
        self.check_dim(x)?;
        let props: Vec<f64> = self.reactions.iter().map(|r| r.propensity(x)).collect();
        let total: f64 = props.iter().sum();
        let mut entries = Vec::new();
        if total > 0.0 {
            for (i, (&p, r)) in props.iter().zip(&self.reactions).enumerate() {
                if p > 0.0 {
                    let next = x
                        .offset(&r.increment())
                        .ok_or(Error::NegativeState { coordinate: 0 })?;
                    entries.push(StepEntry {
                        reaction: i,
                        next,
                        probability: p / total,
                    });
                }
            }
        }
        Ok(StepDistribution {
            entries,
            total_rate: total,
        })
    }
}

/// Fires `reaction` at `x`, i.e. returns `x + y' - y`.
pub fn apply_reaction(x: &State, reaction: &Reaction) -> Result<State> {
    if x.len() != reaction.reactant.dim() {
        return Err(Error::DimensionMismatch {
            expected: reaction.reactant.dim(),
            got: x.len(),
        });
    }
    let inc = reaction.increment();
    let mut out = Vec::with_capacity(x.len());
    for (i, (&xi, &d)) in x.iter().zip(&inc).enumerate() {
        match xi.checked_add_signed(d) {
            Some(v) => out.push(v),
            None => return Err(Error::NegativeState { coordinate: i }),
        }
    }
    Ok(State(out))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepEntry {
    pub reaction: usize,
    pub next: State,
    pub probability: f64,
}

/// Entries are empty exactly when `total_rate == 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDistribution {
    pub entries: Vec<StepEntry>,
    pub total_rate: f64,
}

impl StepDistribution {
    pub fn is_absorbing(&self) -> bool {
        self.entries.is_empty()
    }

    /// Probability of landing on `next`, summed over reactions that lead there.
    pub fn probability_of(&self, next: &State) -> f64 {
        self.entries
            .iter()
            .filter(|e| &e.next == next)
            .map(|e| e.probability)
            .sum()
    }
}
