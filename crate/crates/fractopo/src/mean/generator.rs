//! Generator functions: the rough continuous functions the mean hierarchy
//! is built on, plus a few smooth ones used as analytic references.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};

/// Sup-norm bound on the dropped tail of a truncated series.
pub const TAIL_TOLERANCE: f64 = 1e-14;

/// Default Weierstrass parameters (`ab = 6.5 > 1 + 3π/2`).
pub const DEFAULT_WEIERSTRASS: (f64, u64) = (0.5, 13);

/// Default domain of the periodic series generators.
pub const DEFAULT_DOMAIN: (f64, f64) = (-1.0, 2.0);

/// Smallest `K` with `r^{K+1} / (1 - r) < TAIL_TOLERANCE`.
pub fn truncation_order(ratio: f64) -> usize {
    let mut k = 0usize;
    while ratio.powi(k as i32 + 1) / (1.0 - ratio) >= TAIL_TOLERANCE {
        k += 1;
    }
    k
}

/// `(m * t) mod 2` computed exactly for an odd integer multiplier
/// `m = base^power`, returned in `[0, 2)`.
///
/// `m * t` overflows the precision of a double long before the cosine stops
/// mattering, so the product is reduced in integer arithmetic on the exact
/// binary expansion of `t`.
#[derive(Debug, Clone)]
pub(crate) struct OddPower {
    base: u64,
    power: u32,
    low_bits: u128,
}

impl OddPower {
    fn new(base: u64, power: u32) -> Self {
        let low_bits = (0..power).fold(1u128, |acc, _| acc.wrapping_mul(base as u128));
        Self { base, power, low_bits }
    }

    pub(crate) fn as_f64(&self) -> f64 {
        (self.base as f64).powi(self.power as i32)
    }

    /// `(base^power * t) mod 2`, exact up to the final rounding.
    pub(crate) fn half_turns(&self, t: f64) -> f64 {
        let t = t.abs();
        if t == 0.0 || !t.is_finite() {
            return 0.0;
        }
        let bits = t.to_bits();
        let exp_field = ((bits >> 52) & 0x7ff) as i64;
        let (mant, exp) = if exp_field == 0 {
            (bits & ((1 << 52) - 1), -1074)
        } else {
            ((bits & ((1 << 52) - 1)) | (1 << 52), exp_field - 1075)
        };
        // t = mant * 2^exp and base^power is odd
        if exp >= 1 {
            return 0.0;
        }
        if exp == 0 {
            return (mant & 1) as f64;
        }
        let e = (-exp) as u32;
        if e < 128 {
            let mask = u128::MAX >> (127 - e);
            let r = self.low_bits.wrapping_mul(mant as u128) & mask;
            r as f64 * 2f64.powi(-(e as i32))
        } else {
            let modulus = BigUint::from(1u8) << (e + 1);
            let r = (BigUint::from(self.base).pow(self.power) * mant) % modulus;
            // scale down in two steps to stay inside the double range
            let top = r.bits().saturating_sub(64);
            let head = (r >> top).to_f64().unwrap_or(0.0);
            head * 2f64.powi(top as i32 - e as i32)
        }
    }

    /// `cos(π · base^power · t)`.
    pub(crate) fn cos_pi(&self, t: f64) -> f64 {
        (PI * self.half_turns(t)).cos()
    }

    /// `sin(π · base^power · t)`, odd in `t`.
    pub(crate) fn sin_pi(&self, t: f64) -> f64 {
        let s = (PI * self.half_turns(t)).sin();
        if t < 0.0 {
            -s
        } else {
            s
        }
    }
}

/// One term `amplitude · cos(frequency · t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosTerm {
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
}

#[derive(Debug, Clone)]
pub enum GeneratorKind {
    /// `Σ_{k=0}^{K} a^k cos(b^k π t)`.
    Weierstrass {
        a: f64,
        b: u64,
        order: usize,
        #[doc(hidden)]
        powers: Vec<OddPowerHandle>,
    },
    /// `Σ_{k=0}^{K} w^k s(2^k t)`, `s` the distance to the nearest integer.
    Takagi { w: f64, order: usize },
    /// Linear interpolation through `(t, f(t))` samples with increasing `t`.
    Tabulated { samples: Vec<(f64, f64)> },
    /// `Σ c_i t^i`.
    Polynomial { coefficients: Vec<f64> },
    /// A finite cosine sum.
    Cosines { terms: Vec<CosTerm> },
    /// `Σ c_i g_i`.
    Combination { parts: Vec<(f64, Generator)> },
}

/// Opaque wrapper so the exact-reduction tables stay private.
#[derive(Debug, Clone)]
pub struct OddPowerHandle(pub(crate) OddPower);

/// A real function on a closed interval `[lo, hi]`.
#[derive(Debug, Clone)]
pub struct Generator {
    kind: GeneratorKind,
    domain: (f64, f64),
}

fn check_domain(lo: f64, hi: f64) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::input(format!("invalid domain [{lo}, {hi}]")));
    }
    Ok(())
}

impl Generator {
    /// Weierstrass function with the truncation order from the tail rule.
    pub fn weierstrass(a: f64, b: u64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::input(format!("Weierstrass a = {a} must lie in (0, 1)")));
        }
        Self::weierstrass_with_order(a, b, truncation_order(a))
    }

    /// Weierstrass function truncated at `order`, which may not be below the
    /// tail rule.
    pub fn weierstrass_with_order(a: f64, b: u64, order: usize) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::input(format!("Weierstrass a = {a} must lie in (0, 1)")));
        }
        if b % 2 == 0 {
            return Err(Error::input(format!("Weierstrass b = {b} must be odd")));
        }
        if a * b as f64 <= 1.0 + 1.5 * PI {
            return Err(Error::input(format!(
                "Weierstrass needs ab > 1 + 3π/2, got {}",
                a * b as f64
            )));
        }
        if order < truncation_order(a) {
            return Err(Error::input(format!(
                "order {order} leaves a tail above {TAIL_TOLERANCE}"
            )));
        }
        let powers = (0..=order as u32)
            .map(|k| OddPowerHandle(OddPower::new(b, k)))
            .collect();
        Ok(Self {
            kind: GeneratorKind::Weierstrass { a, b, order, powers },
            domain: DEFAULT_DOMAIN,
        })
    }

    pub fn takagi(w: f64) -> Result<Self> {
        if !(w > 0.0 && w < 1.0) {
            return Err(Error::input(format!("Takagi w = {w} must lie in (0, 1)")));
        }
        Ok(Self {
            kind: GeneratorKind::Takagi {
                w,
                order: truncation_order(w),
            },
            domain: DEFAULT_DOMAIN,
        })
    }

    /// The domain is the sample range.
    pub fn tabulated(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::input("tabulated generators need at least two samples"));
        }
        if samples.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            return Err(Error::input("sample abscissae must increase strictly"));
        }
        if samples.iter().any(|(t, y)| !t.is_finite() || !y.is_finite()) {
            return Err(Error::input("samples must be finite"));
        }
        let domain = (samples[0].0, samples[samples.len() - 1].0);
        Ok(Self {
            kind: GeneratorKind::Tabulated { samples },
            domain,
        })
    }

    pub fn polynomial(coefficients: Vec<f64>, lo: f64, hi: f64) -> Result<Self> {
        check_domain(lo, hi)?;
        let coefficients = if coefficients.is_empty() {
            vec![0.0]
        } else {
            coefficients
        };
        Ok(Self {
            kind: GeneratorKind::Polynomial { coefficients },
            domain: (lo, hi),
        })
    }

    pub fn constant(c: f64, lo: f64, hi: f64) -> Result<Self> {
        Self::polynomial(vec![c], lo, hi)
    }

    pub fn cosines(terms: Vec<CosTerm>, lo: f64, hi: f64) -> Result<Self> {
        check_domain(lo, hi)?;
        Ok(Self {
            kind: GeneratorKind::Cosines { terms },
            domain: (lo, hi),
        })
    }

    /// `Σ c_i g_i` on the intersection of the parts' domains.
    pub fn combination(parts: Vec<(f64, Generator)>) -> Result<Self> {
        let lo = parts.iter().map(|(_, g)| g.domain.0).fold(f64::NEG_INFINITY, f64::max);
        let hi = parts.iter().map(|(_, g)| g.domain.1).fold(f64::INFINITY, f64::min);
        if parts.is_empty() {
            return Err(Error::input("a combination needs at least one part"));
        }
        check_domain(lo, hi)?;
        Ok(Self {
            kind: GeneratorKind::Combination { parts },
            domain: (lo, hi),
        })
    }

    /// Restricts or moves the domain.
    pub fn with_domain(mut self, lo: f64, hi: f64) -> Result<Self> {
        check_domain(lo, hi)?;
        if let GeneratorKind::Tabulated { samples } = &self.kind {
            if lo < samples[0].0 || hi > samples[samples.len() - 1].0 {
                return Err(Error::input("tabulated domain cannot exceed the samples"));
            }
        }
        self.domain = (lo, hi);
        Ok(self)
    }

    pub fn kind(&self) -> &GeneratorKind {
        &self.kind
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.domain.0 && t <= self.domain.1
    }

    /// Value at `t`; outside the domain is an error.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !self.contains(t) {
            return Err(Error::domain(format!(
                "t = {t} outside [{}, {}]",
                self.domain.0, self.domain.1
            )));
        }
        Ok(self.value(t))
    }

    /// Value without the domain check.
    pub(crate) fn value(&self, t: f64) -> f64 {
        match &self.kind {
            GeneratorKind::Weierstrass { a, powers, .. } => {
                let mut amp = 1.0;
                let mut sum = 0.0;
                for p in powers {
                    sum += amp * p.0.cos_pi(t);
                    amp *= a;
                }
                sum
            }
            GeneratorKind::Takagi { w, order } => {
                let mut amp = 1.0;
                let mut sum = 0.0;
                for k in 0..=*order {
                    sum += amp * tent(t * 2f64.powi(k as i32));
                    amp *= w;
                }
                sum
            }
            GeneratorKind::Tabulated { samples } => interpolate(samples, t),
            GeneratorKind::Polynomial { coefficients } => horner(coefficients, t),
            GeneratorKind::Cosines { terms } => terms
                .iter()
                .map(|c| c.amplitude * (c.frequency * t + c.phase).cos())
                .sum(),
            GeneratorKind::Combination { parts } => {
                parts.iter().map(|(c, g)| c * g.value(t)).sum()
            }
        }
    }

    /// Short name used in reports.
    pub fn describe(&self) -> String {
        match &self.kind {
            GeneratorKind::Weierstrass { a, b, order, .. } => format!("weierstrass:{a}:{b}:{order}"),
            GeneratorKind::Takagi { w, order } => format!("takagi:{w}:{order}"),
            GeneratorKind::Tabulated { samples } => format!("tabulated({} samples)", samples.len()),
            GeneratorKind::Polynomial { coefficients } => {
                let c: Vec<String> = coefficients.iter().map(|c| c.to_string()).collect();
                format!("poly:{}", c.join(":"))
            }
            GeneratorKind::Cosines { terms } => format!("cosines({} terms)", terms.len()),
            GeneratorKind::Combination { parts } => format!("combination({} parts)", parts.len()),
        }
    }

    /// Whether every piece has an exact mean formula (trigonometric or
    /// polynomial).
    pub fn has_closed_form(&self) -> bool {
        match &self.kind {
            GeneratorKind::Weierstrass { .. }
            | GeneratorKind::Polynomial { .. }
            | GeneratorKind::Cosines { .. } => true,
            GeneratorKind::Takagi { .. } | GeneratorKind::Tabulated { .. } => false,
            GeneratorKind::Combination { parts } => parts.iter().all(|(_, g)| g.has_closed_form()),
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

/// Parses the command-line generator syntax:
/// `weierstrass:a:b[:K]`, `takagi:w`, `poly:c0:c1:..`, `const:c`,
/// `cos:amp:freq[:phase]`.
impl FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.trim().split(':');
        let name = parts.next().unwrap_or_default();
        let nums = parts
            .map(|p| p.parse::<f64>().map_err(|_| Error::input(format!("bad number `{p}` in `{s}`"))))
            .collect::<Result<Vec<_>>>()?;
        let (lo, hi) = DEFAULT_DOMAIN;
        let as_int = |x: f64| -> Result<u64> {
            if x.fract() == 0.0 && x > 0.0 && x < 1e15 {
                Ok(x as u64)
            } else {
                Err(Error::input(format!("`{x}` is not a positive integer")))
            }
        };
        match (name, nums.as_slice()) {
            ("weierstrass", []) => Generator::weierstrass(DEFAULT_WEIERSTRASS.0, DEFAULT_WEIERSTRASS.1),
            ("weierstrass", [a, b]) => Generator::weierstrass(*a, as_int(*b)?),
            ("weierstrass", [a, b, k]) => {
                Generator::weierstrass_with_order(*a, as_int(*b)?, as_int(*k + 1.0)? as usize - 1)
            }
            ("takagi", []) => Generator::takagi(0.5),
            ("takagi", [w]) => Generator::takagi(*w),
            ("poly", c) if !c.is_empty() => Generator::polynomial(c.to_vec(), lo, hi),
            ("const", [c]) => Generator::constant(*c, lo, hi),
            ("cos", [amp, freq]) => Generator::cosines(
                vec![CosTerm { amplitude: *amp, frequency: *freq, phase: 0.0 }],
                lo,
                hi,
            ),
            ("cos", [amp, freq, phase]) => Generator::cosines(
                vec![CosTerm { amplitude: *amp, frequency: *freq, phase: *phase }],
                lo,
                hi,
            ),
            _ => Err(Error::input(format!("unrecognized generator `{s}`"))),
        }
    }
}

/// Distance from `x` to the nearest integer.
pub(crate) fn tent(x: f64) -> f64 {
    let f = x - x.floor();
    f.min(1.0 - f)
}

pub(crate) fn horner(coefficients: &[f64], t: f64) -> f64 {
    coefficients.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

fn interpolate(samples: &[(f64, f64)], t: f64) -> f64 {
    let i = samples.partition_point(|(x, _)| *x <= t);
    if i == 0 {
        return samples[0].1;
    }
    if i == samples.len() {
        return samples[samples.len() - 1].1;
    }
    let (x0, y0) = samples[i - 1];
    let (x1, y1) = samples[i];
    y0 + (y1 - y0) * (t - x0) / (x1 - x0)
}

/// A piece of a generator as seen by the quadrature path: either a
/// periodic term with known period, or an arbitrary function.
pub(crate) enum Component<'a> {
    Periodic {
        /// Bound on the absolute value of the term.
        scale: f64,
        period: f64,
        shape: Box<dyn Fn(f64) -> f64 + Sync + 'a>,
    },
    Aperiodic {
        scale: f64,
        shape: Box<dyn Fn(f64) -> f64 + Sync + 'a>,
    },
}

impl Generator {
    /// Splits the generator into quadrature components, scaled by `weight`.
    pub(crate) fn components(&self, weight: f64) -> Vec<Component<'_>> {
        match &self.kind {
            GeneratorKind::Weierstrass { a, powers, .. } => powers
                .iter()
                .enumerate()
                .map(|(k, p)| {
                    let amp = weight * a.powi(k as i32);
                    Component::Periodic {
                        scale: amp.abs(),
                        period: 2.0 / p.0.as_f64(),
                        shape: Box::new(move |t| amp * p.0.cos_pi(t)),
                    }
                })
                .collect(),
            GeneratorKind::Takagi { w, order } => (0..=*order)
                .map(|k| {
                    let amp = weight * w.powi(k as i32);
                    let scale = 2f64.powi(k as i32);
                    Component::Periodic {
                        scale: 0.5 * amp.abs(),
                        period: 1.0 / scale,
                        shape: Box::new(move |t| amp * tent(t * scale)),
                    }
                })
                .collect(),
            GeneratorKind::Cosines { terms } => terms
                .iter()
                .map(|c| {
                    let c = *c;
                    let shape: Box<dyn Fn(f64) -> f64 + Sync> =
                        Box::new(move |t| weight * c.amplitude * (c.frequency * t + c.phase).cos());
                    if c.frequency == 0.0 {
                        Component::Aperiodic {
                            scale: (weight * c.amplitude).abs(),
                            shape,
                        }
                    } else {
                        Component::Periodic {
                            scale: (weight * c.amplitude).abs(),
                            period: 2.0 * PI / c.frequency.abs(),
                            shape,
                        }
                    }
                })
                .collect(),
            GeneratorKind::Tabulated { samples } => {
                let scale = samples.iter().map(|s| s.1.abs()).fold(0.0, f64::max);
                vec![Component::Aperiodic {
                    scale: (weight * scale).max(f64::MIN_POSITIVE),
                    shape: Box::new(move |t| weight * interpolate(samples, t)),
                }]
            }
            GeneratorKind::Polynomial { coefficients } => {
                let (lo, hi) = self.domain;
                let m = lo.abs().max(hi.abs()).max(1.0);
                let scale: f64 = coefficients
                    .iter()
                    .enumerate()
                    .map(|(i, c)| c.abs() * m.powi(i as i32))
                    .sum();
                vec![Component::Aperiodic {
                    scale: (weight.abs() * scale).max(f64::MIN_POSITIVE),
                    shape: Box::new(move |t| weight * horner(coefficients, t)),
                }]
            }
            GeneratorKind::Combination { parts } => parts
                .iter()
                .flat_map(|(c, g)| g.components(weight * c))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_rule() {
        let k = truncation_order(0.5);
        assert_eq!(k, 47);
        assert!(0.5f64.powi(k as i32 + 1) / 0.5 < TAIL_TOLERANCE);
        assert!(0.5f64.powi(k as i32) / 0.5 >= TAIL_TOLERANCE);
    }

    #[test]
    fn weierstrass_at_zero_and_one() {
        let g = Generator::weierstrass(0.5, 13).unwrap();
        let k = truncation_order(0.5) as i32;
        let geometric = (1.0 - 0.5f64.powi(k + 1)) / 0.5;
        assert!((g.eval(0.0).unwrap() - geometric).abs() < 1e-15);
        // cos(b^k π) = -1 for odd b
        assert!((g.eval(1.0).unwrap() + geometric).abs() < 1e-15);
    }

    #[test]
    fn takagi_at_zero_and_half() {
        let g = Generator::takagi(0.5).unwrap();
        assert_eq!(g.eval(0.0).unwrap(), 0.0);
        // only the k = 0 term is nonzero at 1/2
        assert_eq!(g.eval(0.5).unwrap(), 0.5);
    }

    #[test]
    fn domain_errors() {
        let g = Generator::weierstrass(0.5, 13).unwrap();
        assert!(matches!(g.eval(2.5), Err(Error::Domain(_))));
        assert!(Generator::weierstrass(0.5, 12).is_err());
        assert!(Generator::weierstrass(0.3, 13).is_err());
        assert!(Generator::weierstrass(1.5, 13).is_err());
        assert!(Generator::weierstrass_with_order(0.5, 13, 10).is_err());
    }

    #[test]
    fn exact_reduction_matches_naive_when_representable() {
        let p = OddPower::new(13, 3);
        for &t in &[0.3, 0.1234, 1.75, 1e-3, 0.999] {
            let naive = (2197.0 * t as f64) % 2.0;
            assert!((p.half_turns(t) - naive).abs() < 1e-12, "{t}");
        }
        // large powers of odd bases: dyadic t gives exact half turns
        let big = OddPower::new(13, 40);
        assert_eq!(big.half_turns(0.5), 0.5);
        // 13 ≡ 5 (mod 8) and 5^2 ≡ 1, so 13^40 · 1/4 ≡ 1/4 (mod 2)
        assert_eq!(big.half_turns(0.25), 0.25);
        assert_eq!(big.half_turns(3.0), 1.0);
        // tiny arguments take the wide path and must agree with the u128 path
        let tiny = 2f64.powi(-120) * 1.5;
        let x = big.half_turns(tiny);
        assert!((0.0..2.0).contains(&x));
    }

    #[test]
    fn wide_path_agrees_with_narrow() {
        let p = OddPower::new(13, 20);
        let t = 2f64.powi(-60) * 1.25;
        let narrow = p.half_turns(t);
        let modulus = BigUint::from(1u8) << 63u32;
        let r = (BigUint::from(13u64).pow(20) * BigUint::from(5u64)) % modulus;
        let expected = r.to_f64().unwrap() * 2f64.powi(-62);
        assert!((narrow - expected).abs() < 1e-15);
    }

    #[test]
    fn tabulated_interpolates() {
        let g = Generator::tabulated(vec![(0.0, 0.0), (1.0, 2.0), (2.0, 0.0)]).unwrap();
        assert_eq!(g.eval(0.5).unwrap(), 1.0);
        assert_eq!(g.eval(1.5).unwrap(), 1.0);
        assert_eq!(g.eval(2.0).unwrap(), 0.0);
        assert!(Generator::tabulated(vec![(0.0, 0.0), (0.0, 1.0)]).is_err());
    }

    #[test]
    fn parses_cli_syntax() {
        let g: Generator = "weierstrass:0.5:13".parse().unwrap();
        assert_eq!(g.describe(), "weierstrass:0.5:13:47");
        assert!("poly:0:1".parse::<Generator>().unwrap().has_closed_form());
        assert!(!"takagi:0.5".parse::<Generator>().unwrap().has_closed_form());
        assert!("weierstrass:0.5:12".parse::<Generator>().is_err());
        assert!("nope".parse::<Generator>().is_err());
    }
}
