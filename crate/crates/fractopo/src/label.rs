use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// An exact nonnegative decimal such as `0.125`, used to index the members
/// of a family by a step length δ.
///
/// Labels are kept as normalized digit strings and ordered numerically, so
/// `0.10` and `0.1` are the same label and `0` is a first-class value.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndexLabel {
    int: String,
    frac: String,
}

impl IndexLabel {
    pub fn is_zero(&self) -> bool {
        self.int == "0" && self.frac.is_empty()
    }

    /// Nearest double, for numerical use only.
    pub fn to_f64(&self) -> f64 {
        self.to_string().parse().expect("normalized decimal")
    }
}

impl FromStr for IndexLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        let digits = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
        if (int.is_empty() && frac.is_empty()) || !digits(int) || !digits(frac) {
            return Err(Error::input(format!("`{s}` is not a nonnegative decimal")));
        }
        let int = int.trim_start_matches('0');
        let frac = frac.trim_end_matches('0');
        Ok(Self {
            int: if int.is_empty() { "0".into() } else { int.into() },
            frac: frac.into(),
        })
    }
}

impl Ord for IndexLabel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.int
            .len()
            .cmp(&other.int.len())
            .then_with(|| self.int.cmp(&other.int))
            .then_with(|| self.frac.cmp(&other.frac))
    }
}

impl PartialOrd for IndexLabel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for IndexLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.frac.is_empty() {
            write!(f, "{}", self.int)
        } else {
            write!(f, "{}.{}", self.int, self.frac)
        }
    }
}
