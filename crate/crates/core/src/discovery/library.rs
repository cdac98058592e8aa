use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Highest spatial derivative order in the library.
pub const MAX_ORDER: u32 = 4;

/// Candidate right-hand-side term: a single derivative `∂_x^d u` or the
/// product of two (`d1 ≤ d2`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Term {
    Linear(u32),
    Product(u32, u32),
}

fn derivative_name(order: u32) -> String {
    if order == 0 {
        "u".to_string()
    } else {
        format!("u_{}", "x".repeat(order as usize))
    }
}

fn parse_derivative(s: &str) -> Option<u32> {
    if s == "u" {
        return Some(0);
    }
    let xs = s.strip_prefix("u_")?;
    (!xs.is_empty() && xs.chars().all(|c| c == 'x')).then_some(xs.len() as u32)
}

impl Term {
    /// Largest derivative order the term needs.
    pub fn max_order(&self) -> u32 {
        match *self {
            Term::Linear(d) => d,
            Term::Product(a, b) => a.max(b),
        }
    }

    pub fn name(&self) -> String {
        self.to_string()
    }

    /// Evaluates the term pointwise from `derivs[d] = ∂_x^d u`.
    pub fn evaluate(&self, derivs: &[Vec<f64>]) -> Vec<f64> {
        match *self {
            Term::Linear(d) => derivs[d as usize].clone(),
            Term::Product(a, b) => derivs[a as usize]
                .iter()
                .zip(&derivs[b as usize])
                .map(|(x, y)| x * y)
                .collect(),
        }
    }

    /// Value at a single point.
    #[inline]
    pub fn evaluate_at(&self, derivs: &[Vec<f64>], j: usize) -> f64 {
        match *self {
            Term::Linear(d) => derivs[d as usize][j],
            Term::Product(a, b) => derivs[a as usize][j] * derivs[b as usize][j],
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Term::Linear(d) => write!(f, "{}", derivative_name(d)),
            Term::Product(a, b) if a == b => write!(f, "{}^2", derivative_name(a)),
            Term::Product(a, b) => write!(f, "{}*{}", derivative_name(a), derivative_name(b)),
        }
    }
}

impl FromStr for Term {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::UnknownTerm(s.to_string());
        let term = if let Some(base) = s.strip_suffix("^2") {
            let d = parse_derivative(base).ok_or_else(bad)?;
            Term::Product(d, d)
        } else if let Some((a, b)) = s.split_once('*') {
            let a = parse_derivative(a.trim()).ok_or_else(bad)?;
            let b = parse_derivative(b.trim()).ok_or_else(bad)?;
            Term::Product(a.min(b), a.max(b))
        } else {
            Term::Linear(parse_derivative(s).ok_or_else(bad)?)
        };
        if term.max_order() > MAX_ORDER {
            return Err(bad());
        }
        Ok(term)
    }
}

impl TryFrom<String> for Term {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Term> for String {
    fn from(t: Term) -> String {
        t.to_string()
    }
}

/// Ordered list of candidate terms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TermLibrary {
    terms: Vec<Term>,
}

impl Default for TermLibrary {
    fn default() -> Self {
        Self::standard()
    }
}

impl TermLibrary {
    /// The 20-term library: `u, u_x, …, u_xxxx` followed by all pairwise
    /// products `∂^a u · ∂^b u` with `a ≤ b`.
    pub fn standard() -> Self {
        let mut terms: Vec<Term> = (0..=MAX_ORDER).map(Term::Linear).collect();
        for a in 0..=MAX_ORDER {
            for b in a..=MAX_ORDER {
                terms.push(Term::Product(a, b));
            }
        }
        Self { terms }
    }

    pub fn new(terms: Vec<Term>) -> Result<Self> {
        for (i, t) in terms.iter().enumerate() {
            if terms[..i].contains(t) {
                return Err(Error::InvalidSpec(format!("duplicate term {t}")));
            }
        }
        Ok(Self { terms })
    }

    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        Self::new(names.iter().map(|n| n.as_ref().parse()).collect::<Result<_>>()?)
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.terms.iter().map(Term::name).collect()
    }

    pub fn index_of(&self, term: &Term) -> Option<usize> {
        self.terms.iter().position(|t| t == term)
    }

    pub fn max_order(&self) -> u32 {
        self.terms.iter().map(Term::max_order).max().unwrap_or(0)
    }

    /// Boolean mask selecting `names` (all of which must be in the library).
    pub fn mask<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<bool>> {
        let mut mask = vec![false; self.len()];
        for n in names {
            let t: Term = n.as_ref().parse()?;
            let i = self
                .index_of(&t)
                .ok_or_else(|| Error::UnknownTerm(n.as_ref().to_string()))?;
            mask[i] = true;
        }
        Ok(mask)
    }
}
