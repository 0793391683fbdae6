//! Forward and backward means of a generator and their iterates.
//!
//! The level-0 mean is `(σ/δ) ∫_x^{x+σδ} g`. Level `n` averages level
//! `n − 1` the same way with `(σ_n, δ_n)`; a level with `δ = 0` is the
//! identity. Two independent routes compute the same value: a closed form
//! for trigonometric and polynomial generators, and nested adaptive
//! quadrature for everything.

pub mod generator;
pub mod quadrature;
mod sample;

use std::cell::Cell;
use std::fmt;
use std::str::FromStr;

pub use generator::{CosTerm, Generator, GeneratorKind};
pub use sample::{build_nset, sample_generator, sample_graph, GraphSample, NSetSample};

use crate::error::{Error, Result};
use crate::sign::{lambda, Sign, SignString};
use generator::{horner, Component};
use quadrature::{adaptive_simpson, periodic_integral, Integral, DEFAULT_TOLERANCE, MAX_DEPTH};

/// Nested window sizes `δ_0 > δ_1 > … > δ_n` with their bounds `ε_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaVector {
    deltas: Vec<f64>,
    epsilons: Vec<f64>,
}

impl DeltaVector {
    /// Takes `ε_k = δ_k`, or half the previous bound for a trailing zero.
    pub fn new(deltas: Vec<f64>) -> Result<Self> {
        let mut epsilons = Vec::with_capacity(deltas.len());
        for (k, &d) in deltas.iter().enumerate() {
            let eps = if d > 0.0 || k == 0 {
                d
            } else {
                epsilons[k - 1] / 2.0
            };
            epsilons.push(eps);
        }
        Self::with_epsilons(deltas, epsilons)
    }

    pub fn with_epsilons(deltas: Vec<f64>, epsilons: Vec<f64>) -> Result<Self> {
        if deltas.is_empty() {
            return Err(Error::input("at least one delta is required"));
        }
        if deltas.len() != epsilons.len() {
            return Err(Error::input("deltas and epsilons differ in length"));
        }
        if deltas.iter().chain(&epsilons).any(|v| !v.is_finite()) {
            return Err(Error::input("deltas and epsilons must be finite"));
        }
        if !(epsilons[0] < 1.0) || epsilons.iter().any(|e| *e <= 0.0) {
            return Err(Error::input("epsilons must lie in (0, 1)"));
        }
        if epsilons.windows(2).any(|w| !(w[0] > w[1])) {
            return Err(Error::input("epsilons must decrease strictly"));
        }
        if !(deltas[0] > 0.0) {
            return Err(Error::input(format!("δ0 = {} must be positive", deltas[0])));
        }
        if deltas.windows(2).any(|w| !(w[0] > w[1])) {
            return Err(Error::input("deltas must decrease strictly"));
        }
        for (k, (d, e)) in deltas.iter().zip(&epsilons).enumerate() {
            if *d < 0.0 || d > e {
                return Err(Error::input(format!("δ{k} = {d} outside [0, {e}]")));
            }
        }
        Ok(Self { deltas, epsilons })
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn epsilons(&self) -> &[f64] {
        &self.epsilons
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Appends `δ_{n+1}`, which must be below `δ_n`.
    pub fn extended(&self, delta: f64) -> Result<Self> {
        let last = *self.deltas.last().unwrap();
        if !(delta >= 0.0 && delta < last) {
            return Err(Error::input(format!(
                "next delta {delta} must lie in [0, {last})"
            )));
        }
        let mut deltas = self.deltas.clone();
        let mut epsilons = self.epsilons.clone();
        let prev = *epsilons.last().unwrap();
        epsilons.push(if delta > 0.0 { delta } else { prev / 2.0 });
        deltas.push(delta);
        Self::with_epsilons(deltas, epsilons)
    }
}

impl FromStr for DeltaVector {
    type Err = Error;

    /// Comma-separated deltas, `δ0` first.
    fn from_str(s: &str) -> Result<Self> {
        let deltas = s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::input(format!("bad delta `{p}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        DeltaVector::new(deltas)
    }
}

impl fmt::Display for DeltaVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.deltas.iter().map(|d| d.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

/// A generator together with the signs and windows of an iterated mean.
#[derive(Debug, Clone)]
pub struct MeanSpec {
    pub generator: Generator,
    pub signs: SignString,
    pub deltas: DeltaVector,
    /// Which of the three coordinate functions this is, when it matters.
    pub component: Option<u8>,
}

impl MeanSpec {
    pub fn new(generator: Generator, signs: SignString, deltas: DeltaVector) -> Result<Self> {
        if signs.len() != deltas.len() {
            return Err(Error::input(format!(
                "{} signs but {} deltas",
                signs.len(),
                deltas.len()
            )));
        }
        Ok(Self {
            generator,
            signs,
            deltas,
            component: None,
        })
    }

    pub fn with_component(mut self, i: u8) -> Result<Self> {
        if !(1..=3).contains(&i) {
            return Err(Error::input(format!("component index {i} not in 1..=3")));
        }
        self.component = Some(i);
        Ok(self)
    }

    /// Level `n` (number of signs minus one).
    pub fn level(&self) -> usize {
        self.signs.level()
    }

    /// Appends one level.
    pub fn extended(&self, sign: Sign, delta: f64) -> Result<Self> {
        Ok(Self {
            generator: self.generator.clone(),
            signs: self.signs.push(sign)?,
            deltas: self.deltas.extended(delta)?,
            component: self.component,
        })
    }

    /// Signed windows `σ_k δ_k`, identity levels left out.
    pub fn steps(&self) -> Vec<f64> {
        self.signs
            .signs()
            .zip(self.deltas.deltas())
            .filter(|(_, d)| **d > 0.0)
            .map(|(s, d)| s.factor() * d)
            .collect()
    }

    /// Range of generator arguments touched when evaluating at `x`.
    pub fn reach(&self, x: f64) -> (f64, f64) {
        let steps = self.steps();
        let below: f64 = steps.iter().map(|h| h.min(0.0)).sum();
        let above: f64 = steps.iter().map(|h| h.max(0.0)).sum();
        (x + below, x + above)
    }

    /// The `x` for which [`reach`](Self::reach) stays in the domain.
    pub fn evaluable_range(&self) -> Option<(f64, f64)> {
        let steps = self.steps();
        let below: f64 = steps.iter().map(|h| h.min(0.0)).sum();
        let above: f64 = steps.iter().map(|h| h.max(0.0)).sum();
        let (lo, hi) = self.generator.domain();
        let range = (lo - below, hi - above);
        (range.0 <= range.1).then_some(range)
    }

    fn check_reach(&self, x: f64) -> Result<()> {
        let (lo, hi) = self.reach(x);
        if !x.is_finite() || !self.generator.contains(lo) || !self.generator.contains(hi) {
            let (dlo, dhi) = self.generator.domain();
            return Err(Error::domain(format!(
                "evaluation at x = {x} needs [{lo}, {hi}], outside [{dlo}, {dhi}]"
            )));
        }
        Ok(())
    }
}

impl fmt::Display for MeanSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} signs={} deltas={}", self.generator, self.signs, self.deltas)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// Closed form when the generator has one, quadrature otherwise.
    #[default]
    Auto,
    ClosedForm,
    Quadrature,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Auto => "auto",
            Method::ClosedForm => "closed-form",
            Method::Quadrature => "quadrature",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Method::Auto),
            "closed" | "closed-form" => Ok(Method::ClosedForm),
            "quadrature" | "quad" => Ok(Method::Quadrature),
            _ => Err(Error::input(format!("unknown method `{s}`"))),
        }
    }
}

/// A value together with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    /// Never `Auto`.
    pub method: Method,
    /// Generator evaluations spent (0 on the closed-form path).
    pub evaluations: u64,
}

pub fn eval_generator(g: &Generator, t: f64) -> Result<f64> {
    g.eval(t)
}

/// Level-0 mean `(σ/δ) ∫_x^{x+σδ} g`.
pub fn mean(g: &Generator, x: f64, sign: Sign, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::input(format!("δ = {delta} must be positive")));
    }
    if !(delta < 1.0) {
        return Err(Error::input(format!("δ = {delta} must be below 1")));
    }
    let spec = MeanSpec::new(
        g.clone(),
        SignString::new(&[sign])?,
        DeltaVector::new(vec![delta])?,
    )?;
    iterated_mean(&spec, x)
}

pub fn iterated_mean(spec: &MeanSpec, x: f64) -> Result<f64> {
    Ok(iterated_mean_with(spec, x, Method::Auto, DEFAULT_TOLERANCE)?.value)
}

pub fn iterated_mean_closed_form(spec: &MeanSpec, x: f64) -> Result<f64> {
    Ok(iterated_mean_with(spec, x, Method::ClosedForm, DEFAULT_TOLERANCE)?.value)
}

/// Quadrature path; `tol` bounds the error on the mean value.
pub fn iterated_mean_quadrature(spec: &MeanSpec, x: f64, tol: f64) -> Result<Evaluation> {
    iterated_mean_with(spec, x, Method::Quadrature, tol)
}

pub fn iterated_mean_with(spec: &MeanSpec, x: f64, method: Method, tol: f64) -> Result<Evaluation> {
    spec.check_reach(x)?;
    if !(tol > 0.0) {
        return Err(Error::input(format!("tolerance {tol} must be positive")));
    }
    let steps = spec.steps();
    let g = &spec.generator;
    let method = match method {
        Method::Auto if g.has_closed_form() => Method::ClosedForm,
        Method::Auto => Method::Quadrature,
        m => m,
    };
    match method {
        Method::ClosedForm => {
            let value = closed_form(g, &steps, x).ok_or_else(|| {
                Error::Precondition(format!("{} has no closed-form mean", g.describe()))
            })?;
            Ok(Evaluation {
                value,
                method,
                evaluations: 0,
            })
        }
        _ => {
            let (value, evaluations) = quadrature_mean(g, &steps, x, tol);
            Ok(Evaluation {
                value,
                method: Method::Quadrature,
                evaluations,
            })
        }
    }
}

/// `sin(u) / u` with the removable singularity filled in.
fn sinc(u: f64) -> f64 {
    if u.abs() < 1e-8 {
        1.0 - u * u / 6.0
    } else {
        u.sin() / u
    }
}

fn closed_form(g: &Generator, steps: &[f64], x: f64) -> Option<f64> {
    let shift: f64 = steps.iter().map(|h| 0.5 * h).sum();
    match g.kind() {
        GeneratorKind::Weierstrass { a, powers, .. } => {
            let mut amp = 1.0;
            let mut sum = 0.0;
            for p in powers {
                let omega = std::f64::consts::PI * p.0.as_f64();
                let mut factor = amp;
                for h in steps {
                    // sin(ω h / 2) with the argument reduced exactly
                    factor *= p.0.sin_pi(0.5 * h) / (0.5 * omega * h);
                }
                sum += factor * p.0.cos_pi(x + shift);
                amp *= a;
            }
            Some(sum)
        }
        GeneratorKind::Cosines { terms } => Some(
            terms
                .iter()
                .map(|c| {
                    let damp: f64 = steps.iter().map(|h| sinc(0.5 * c.frequency * h)).product();
                    c.amplitude * damp * (c.frequency * (x + shift) + c.phase).cos()
                })
                .sum(),
        ),
        GeneratorKind::Polynomial { coefficients } => {
            // the averaging operators commute, so the outer levels act on the
            // coefficients and level 0 is taken last from an antiderivative
            let mut c = coefficients.clone();
            for h in steps.iter().skip(1) {
                c = average_coefficients(&c, *h);
            }
            match steps.first() {
                None => Some(horner(&c, x)),
                Some(&h0) => {
                    // term by term so that the constant passes through untouched
                    let (mut hi, mut lo) = (x + h0, x);
                    let mut sum = c[0];
                    for (i, ci) in c.iter().enumerate().skip(1) {
                        hi *= x + h0;
                        lo *= x;
                        sum += ci * (hi - lo) / ((i + 1) as f64 * h0);
                    }
                    Some(sum)
                }
            }
        }
        GeneratorKind::Combination { parts } => parts
            .iter()
            .map(|(w, p)| closed_form(p, steps, x).map(|v| w * v))
            .sum(),
        GeneratorKind::Takagi { .. } | GeneratorKind::Tabulated { .. } => None,
    }
}

/// Coefficients of `x ↦ (1/h) ∫_x^{x+h} Q`.
fn average_coefficients(c: &[f64], h: f64) -> Vec<f64> {
    let n = c.len();
    (0..n)
        .map(|i| {
            let mut binom = 1.0;
            let mut hp = 1.0;
            let mut sum = 0.0;
            for j in i..n {
                let m = j - i;
                if m > 0 {
                    binom = binom * j as f64 / m as f64;
                    hp *= h;
                }
                sum += c[j] * binom * hp / (m + 1) as f64;
            }
            sum
        })
        .collect()
}

/// Term-by-term nested quadrature, returning the value and the number of
/// generator evaluations.
fn quadrature_mean(g: &Generator, steps: &[f64], x: f64, tol: f64) -> (f64, u64) {
    let components = g.components(1.0);
    let total: f64 = components.iter().map(scale_of).sum();
    let evals = Cell::new(0u64);
    let mut value = 0.0;
    for c in &components {
        let share = if total > 0.0 { tol * scale_of(c) / total } else { tol };
        let share = share.max(f64::MIN_POSITIVE);
        let full = match c {
            // one full period of the raw term; every averaged version of a
            // periodic term has the same integral over a period
            Component::Periodic { period, shape, .. } => {
                let r = adaptive_simpson(shape, 0.0, *period, 0.25 * share * period, MAX_DEPTH);
                evals.set(evals.get() + r.evaluations);
                r.value
            }
            Component::Aperiodic { .. } => 0.0,
        };
        value += nested(c, full, steps, x, share, &evals);
    }
    (value, evals.get())
}

fn scale_of(c: &Component<'_>) -> f64 {
    match c {
        Component::Periodic { scale, .. } | Component::Aperiodic { scale, .. } => *scale,
    }
}

fn nested(c: &Component<'_>, full: f64, steps: &[f64], x: f64, tol: f64, evals: &Cell<u64>) -> f64 {
    let Some((&h, inner)) = steps.split_last() else {
        evals.set(evals.get() + 1);
        return match c {
            Component::Periodic { shape, .. } | Component::Aperiodic { shape, .. } => shape(x),
        };
    };
    let f = |t: f64| nested(c, full, inner, t, tol, evals);
    let window_tol = tol * h.abs();
    let integral = match c {
        Component::Periodic { period, .. } => periodic_integral(
            f,
            x,
            x + h,
            *period,
            || Integral {
                value: full,
                evaluations: 0,
            },
            window_tol,
        ),
        Component::Aperiodic { .. } => adaptive_simpson(f, x, x + h, window_tol, MAX_DEPTH),
    };
    integral.value / h
}

/// `T_{δ0}`: shifts the abscissa by `δ0`.
pub fn translate(p: (f64, f64), delta0: f64) -> (f64, f64) {
    (p.0 + delta0, p.1)
}

/// `T_{δ0}` applied to each coordinate pair of a triple.
pub fn translate_triple(points: [(f64, f64); 3], delta0: f64) -> [(f64, f64); 3] {
    points.map(|p| translate(p, delta0))
}

/// `|backward mean at x + δ0 − forward mean at x|`: both are the average of
/// `g` over `[x, x + δ0]`.
pub fn translation_residual(g: &Generator, x: f64, delta0: f64, method: Method) -> Result<f64> {
    if !(delta0 > 0.0) {
        return Err(Error::input(format!("δ0 = {delta0} must be positive")));
    }
    let deltas = DeltaVector::new(vec![delta0])?;
    let forward = MeanSpec::new(g.clone(), "+".parse()?, deltas.clone())?;
    let backward = MeanSpec::new(g.clone(), "-".parse()?, deltas)?;
    let f = iterated_mean_with(&forward, x, method, DEFAULT_TOLERANCE)?.value;
    let b = iterated_mean_with(&backward, x + delta0, method, DEFAULT_TOLERANCE)?.value;
    Ok((b - f).abs())
}

/// Distance between a mean and the same mean with one more level
/// `(σ_next, δ_next)` appended; `δ_next = 0` appends the identity.
pub fn identification_residual(
    spec: &MeanSpec,
    x: f64,
    delta_next: f64,
    sign_next: Sign,
    method: Method,
) -> Result<f64> {
    let longer = spec.extended(sign_next, delta_next)?;
    let a = iterated_mean_with(&longer, x, method, DEFAULT_TOLERANCE)?.value;
    let b = iterated_mean_with(spec, x, method, DEFAULT_TOLERANCE)?.value;
    Ok((a - b).abs())
}

/// Number of graphs at level `n` for fixed deltas: one per sign string.
pub fn graph_count(n: usize) -> Result<usize> {
    Ok(lambda(n)?.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(g: &Generator, signs: &str, deltas: &str) -> MeanSpec {
        MeanSpec::new(g.clone(), signs.parse().unwrap(), deltas.parse().unwrap()).unwrap()
    }

    #[test]
    fn delta_vector_rules() {
        assert!(DeltaVector::new(vec![0.1, 0.01]).is_ok());
        assert!(DeltaVector::new(vec![0.1, 0.0]).is_ok());
        assert!(DeltaVector::new(vec![0.0]).is_err());
        assert!(DeltaVector::new(vec![1.0]).is_err());
        assert!(DeltaVector::new(vec![0.1, 0.1]).is_err());
        assert!(DeltaVector::new(vec![0.1, 0.0, 0.0]).is_err());
        assert!(DeltaVector::new(vec![0.1, -0.01]).is_err());
        let d = DeltaVector::new(vec![0.1, 0.01]).unwrap();
        assert!(d.extended(0.01).is_err());
        assert_eq!(d.extended(0.0).unwrap().len(), 3);
        assert!(d.extended(0.0).unwrap().extended(0.0).is_err());
    }

    #[test]
    fn constants_are_preserved() {
        let g = Generator::constant(3.25, -1.0, 2.0).unwrap();
        for (signs, deltas) in [("+", "0.5"), ("-+", "0.3,0.1"), ("+--", "0.25,0.125,0.0625")] {
            let s = spec(&g, signs, deltas);
            assert_eq!(iterated_mean_closed_form(&s, 0.5).unwrap(), 3.25);
            let q = iterated_mean_quadrature(&s, 0.5, 1e-12).unwrap().value;
            assert!((q - 3.25).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_mean_of_t() {
        let g = Generator::polynomial(vec![0.0, 1.0], -1.0, 2.0).unwrap();
        // (1/δ) ∫_0^δ t dt = δ/2
        let v = mean(&g, 0.0, Sign::Plus, 0.1).unwrap();
        assert!((v - 0.05).abs() < 1e-16);
        let v = mean(&g, 0.5, Sign::Minus, 0.25).unwrap();
        assert_eq!(v, 0.375);
    }

    #[test]
    fn cosine_full_window() {
        let g = Generator::cosines(
            vec![CosTerm {
                amplitude: 1.0,
                frequency: std::f64::consts::PI,
                phase: 0.0,
            }],
            -1.0,
            2.0,
        )
        .unwrap();
        // δ = 1 is outside (0, 1), so go through the spec directly
        let s = MeanSpec::new(
            g.clone(),
            "+".parse().unwrap(),
            DeltaVector::with_epsilons(vec![0.999_999_999_999], vec![0.999_999_999_999]).unwrap(),
        )
        .unwrap();
        assert!(iterated_mean(&s, 0.0).unwrap().abs() < 1e-11);
        assert!(iterated_mean_quadrature(&s, 0.0, 1e-12).unwrap().value.abs() < 1e-11);
    }

    #[test]
    fn average_coefficients_of_cubic() {
        // Q(t) = t^3: (1/h)∫_x^{x+h} t^3 = x^3 + 3x^2 h/2 + x h^2 + h^3/4
        let c = average_coefficients(&[0.0, 0.0, 0.0, 1.0], 0.5);
        assert_eq!(c, vec![0.125 / 4.0, 0.25, 0.75, 1.0]);
    }

    #[test]
    fn zero_delta_level_is_identity() {
        let g = Generator::weierstrass(0.5, 13).unwrap();
        let a = spec(&g, "+", "0.1");
        let b = spec(&g, "++", "0.1,0");
        for method in [Method::ClosedForm, Method::Quadrature] {
            let va = iterated_mean_with(&a, 0.3, method, 1e-10).unwrap().value;
            let vb = iterated_mean_with(&b, 0.3, method, 1e-10).unwrap().value;
            assert_eq!(va, vb);
        }
        assert_eq!(identification_residual(&a, 0.3, 0.0, Sign::Minus, Method::Auto).unwrap(), 0.0);
    }

    #[test]
    fn closed_form_and_quadrature_agree_on_weierstrass() {
        let g = Generator::weierstrass(0.5, 13).unwrap();
        let s = spec(&g, "+-", "0.1,0.01");
        let closed = iterated_mean_closed_form(&s, 0.3).unwrap();
        let quad = iterated_mean_quadrature(&s, 0.3, 1e-10).unwrap();
        assert!((closed - quad.value).abs() < 1e-8, "{closed} vs {}", quad.value);
        assert!(quad.evaluations > 0);
    }

    #[test]
    fn domain_and_input_errors() {
        let g = Generator::weierstrass(0.5, 13).unwrap();
        assert!(matches!(mean(&g, 1.95, Sign::Plus, 0.1), Err(Error::Domain(_))));
        assert!(matches!(mean(&g, 0.0, Sign::Plus, 0.0), Err(Error::Input(_))));
        assert!(matches!(mean(&g, 0.0, Sign::Plus, -0.1), Err(Error::Input(_))));
        let t = Generator::takagi(0.5).unwrap();
        let s = spec(&t, "+", "0.1");
        assert!(matches!(iterated_mean_closed_form(&s, 0.0), Err(Error::Precondition(_))));
        assert!(MeanSpec::new(g, "+-".parse().unwrap(), "0.1".parse().unwrap()).is_err());
    }

    #[test]
    fn weierstrass_translation_closed_form() {
        let g = Generator::weierstrass(0.5, 13).unwrap();
        for &(x, d) in &[(0.3, 0.1), (-0.7, 0.37), (1.2, 0.05)] {
            assert!(translation_residual(&g, x, d, Method::ClosedForm).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn graph_counts() {
        assert_eq!([0, 1, 2, 3].map(|n| graph_count(n).unwrap()), [2, 4, 8, 16]);
    }
}
