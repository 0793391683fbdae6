//! Sign strings `σ0σ1…σn` over `{+, −}` and the index sets Λ_n.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest level accepted by [`lambda`].
pub const MAX_LAMBDA_LEVEL: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    /// `+1.0` or `-1.0`.
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn from_char(c: char) -> Option<Sign> {
        match c {
            '+' => Some(Sign::Plus),
            '-' | '−' => Some(Sign::Minus),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

/// A nonempty word over `{+, −}`; a word of length `n + 1` lives at level `n`.
///
/// Stored packed: `σ0` is the most significant of `len` bits, a set bit
/// meaning `−`. Ordering is lexicographic with `+ < −`, shorter prefixes
/// first.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct SignString {
    len: u8,
    bits: u32,
}

impl SignString {
    pub fn new(signs: &[Sign]) -> Result<Self> {
        if signs.is_empty() {
            return Err(Error::input("sign strings are nonempty"));
        }
        if signs.len() > 32 {
            return Err(Error::capacity("sign strings are limited to 32 signs"));
        }
        let bits = signs
            .iter()
            .fold(0u32, |acc, s| (acc << 1) | u32::from(*s == Sign::Minus));
        Ok(Self {
            len: signs.len() as u8,
            bits,
        })
    }

    pub(crate) fn from_bits(len: usize, bits: u32) -> Self {
        debug_assert!((1..=32).contains(&len));
        Self {
            len: len as u8,
            bits,
        }
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `len - 1`.
    pub fn level(&self) -> usize {
        self.len() - 1
    }

    pub fn sign(&self, i: usize) -> Sign {
        assert!(i < self.len(), "sign index out of range");
        if self.bits >> (self.len() - 1 - i) & 1 == 1 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    pub fn signs(&self) -> impl Iterator<Item = Sign> + '_ {
        (0..self.len()).map(|i| self.sign(i))
    }

    pub fn last(&self) -> Sign {
        self.sign(self.len() - 1)
    }

    /// Drops the last sign.
    pub fn parent(&self) -> Result<SignString> {
        if self.len == 1 {
            return Err(Error::domain(format!("{self} is at level 0 and has no parent")));
        }
        Ok(Self {
            len: self.len - 1,
            bits: self.bits >> 1,
        })
    }

    pub fn push(&self, sign: Sign) -> Result<SignString> {
        if self.len == 32 {
            return Err(Error::capacity("sign strings are limited to 32 signs"));
        }
        Ok(Self {
            len: self.len + 1,
            bits: (self.bits << 1) | u32::from(sign == Sign::Minus),
        })
    }

    /// The `+` and `−` extensions, in that order.
    pub fn children(&self) -> Result<(SignString, SignString)> {
        Ok((self.push(Sign::Plus)?, self.push(Sign::Minus)?))
    }

    /// Packed bits, `σ0` most significant.
    pub fn bits(&self) -> u32 {
        self.bits
    }
}

impl Ord for SignString {
    fn cmp(&self, other: &Self) -> Ordering {
        let common = self.len.min(other.len) as usize;
        let a = self.bits >> (self.len() - common);
        let b = other.bits >> (other.len() - common);
        a.cmp(&b).then(self.len.cmp(&other.len))
    }
}

impl PartialOrd for SignString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for SignString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in self.signs() {
            write!(f, "{}", s.as_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for SignString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SignString({self})")
    }
}

impl FromStr for SignString {
    type Err = Error;

    /// Accepts `+`, `-` and `−`.
    fn from_str(s: &str) -> Result<Self> {
        let signs = s
            .trim()
            .chars()
            .map(|c| Sign::from_char(c).ok_or_else(|| Error::input(format!("bad sign `{c}` in `{s}`"))))
            .collect::<Result<Vec<_>>>()?;
        SignString::new(&signs)
    }
}

/// Λ_n: every sign string of length `n + 1`, lexicographic with `+ < −`.
pub fn lambda(n: usize) -> Result<Vec<SignString>> {
    if n > MAX_LAMBDA_LEVEL {
        return Err(Error::capacity(format!(
            "level {n} exceeds the cap {MAX_LAMBDA_LEVEL}"
        )));
    }
    let len = n + 1;
    Ok((0..1u32 << len).map(|bits| SignString::from_bits(len, bits)).collect())
}
