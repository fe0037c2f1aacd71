use serde::{Deserialize, Serialize};

use crate::Error;

/// Canonical index of a symbol in its alphabet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Symbol(pub u8);

impl Symbol {
    /// `+1` in the spin alphabet.
    pub const PLUS: Symbol = Symbol(0);
    /// `-1` in the spin alphabet.
    pub const MINUS: Symbol = Symbol(1);

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Spin value under the canonical binary embedding (`0 ↦ +1`, `1 ↦ -1`).
    #[inline]
    pub fn spin(self) -> i64 {
        1 - 2 * self.0 as i64
    }

    #[inline]
    pub fn from_spin(spin: i64) -> Symbol {
        if spin > 0 {
            Symbol::PLUS
        } else {
            Symbol::MINUS
        }
    }
}

/// Finite ordered alphabet with an optional injective numeric embedding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AlphabetRepr", into = "AlphabetRepr")]
pub struct Alphabet {
    labels: Vec<String>,
    embedding: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AlphabetRepr {
    labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    embedding: Option<Vec<f64>>,
}

impl TryFrom<AlphabetRepr> for Alphabet {
    type Error = Error;
    fn try_from(r: AlphabetRepr) -> Result<Self, Error> {
        Alphabet::new(r.labels, r.embedding)
    }
}

impl From<Alphabet> for AlphabetRepr {
    fn from(a: Alphabet) -> Self {
        AlphabetRepr { labels: a.labels, embedding: a.embedding }
    }
}

impl Alphabet {
    pub fn new(labels: Vec<String>, embedding: Option<Vec<f64>>) -> Result<Self, Error> {
        if labels.len() < 2 {
            return Err(Error::InvalidAlphabet("at least two symbols required".into()));
        }
        if labels.len() > u8::MAX as usize + 1 {
            return Err(Error::InvalidAlphabet("at most 256 symbols supported".into()));
        }
        for (i, a) in labels.iter().enumerate() {
            if labels[..i].contains(a) {
                return Err(Error::InvalidAlphabet(format!("duplicate symbol {a:?}")));
            }
        }
        if let Some(e) = &embedding {
            if e.len() != labels.len() {
                return Err(Error::InvalidAlphabet("embedding length differs from alphabet size".into()));
            }
            for (i, v) in e.iter().enumerate() {
                if !v.is_finite() || e[..i].contains(v) {
                    return Err(Error::InvalidAlphabet("embedding must be finite and injective".into()));
                }
            }
        }
        Ok(Self { labels, embedding })
    }

    /// `{+1, -1}` in that canonical order, embedded as `+1.0, -1.0`.
    pub fn spin() -> Self {
        Self { labels: vec!["+1".into(), "-1".into()], embedding: Some(vec![1.0, -1.0]) }
    }

    /// Symbols labelled `0..n`, no embedding.
    pub fn numbered(n: usize) -> Result<Self, Error> {
        Self::new((0..n).map(|i| i.to_string()).collect(), None)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn symbols(&self) -> impl Iterator<Item = Symbol> {
        (0..self.labels.len()).map(|i| Symbol(i as u8))
    }

    pub fn label(&self, s: Symbol) -> &str {
        &self.labels[s.index()]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn embedding(&self) -> Option<&[f64]> {
        self.embedding.as_deref()
    }

    pub fn value(&self, s: Symbol) -> Option<f64> {
        self.embedding.as_ref().map(|e| e[s.index()])
    }

    pub fn parse(&self, label: &str) -> Result<Symbol, Error> {
        self.labels.iter().position(|l| l == label).map(|i| Symbol(i as u8)).ok_or_else(|| Error::InvalidPast(format!("unknown symbol {label:?}")))
    }

    pub fn contains(&self, s: Symbol) -> bool {
        s.index() < self.labels.len()
    }

    /// True for the canonical spin alphabet required by the binary families.
    pub fn is_spin(&self) -> bool {
        self.labels.len() == 2 && self.embedding.as_deref() == Some(&[1.0, -1.0][..])
    }

    /// `|S|^n`, or `None` on overflow.
    pub fn paths(&self, n: usize) -> Option<usize> {
        let mut acc: usize = 1;
        for _ in 0..n {
            acc = acc.checked_mul(self.len())?;
        }
        Some(acc)
    }
}
