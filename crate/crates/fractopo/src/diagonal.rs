//! Diagonal topologies over finite indexed families.
//!
//! A family assigns a finite space `E_ε` to every label ε. A diagonal open is
//! a choice of one open `Ω_ε` per label, read as the union `∪ Ω_ε` of tagged
//! copies, so unions and intersections act label by label.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::label::IndexLabel;
use crate::topology::{is_topology, set_literal, Mask, SetSystem, Violation};

/// Default product size up to which [`check_diagonal_axioms`] enumerates.
pub const DEFAULT_ENUMERATION_CAP: u128 = 4096;

/// Seed used for sampled verification unless overridden.
pub const DEFAULT_SEED: u64 = 0x5eed_f7a0;

const SAMPLE_PAIRS: usize = 20_000;

/// How the component carriers relate to each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CarrierMode {
    /// One common point set, tagged per label.
    Shared,
    /// Pairwise disjoint carriers.
    Disjoint,
}

/// A finite family of finite spaces indexed by exact decimal labels.
///
/// Components are held as plain set systems so that a malformed component
/// can be loaded and diagnosed rather than rejected at parse time.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexedFamily {
    labels: Vec<IndexLabel>,
    spaces: Vec<SetSystem>,
    mode: CarrierMode,
}

impl IndexedFamily {
    pub fn new(entries: Vec<(IndexLabel, SetSystem)>, mode: CarrierMode) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::input("a family needs at least one label"));
        }
        let mut entries = entries;
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::input(format!("duplicate label {}", w[0].0)));
        }
        if mode == CarrierMode::Shared {
            let n = entries[0].1.universe_size();
            if entries.iter().any(|(_, s)| s.universe_size() != n) {
                return Err(Error::input(
                    "shared carriers must all have the same number of points",
                ));
            }
        }
        let (labels, spaces) = entries.into_iter().unzip();
        Ok(Self {
            labels,
            spaces,
            mode,
        })
    }

    /// Shared carriers when every component has the same size, disjoint
    /// otherwise.
    pub fn with_inferred_mode(entries: Vec<(IndexLabel, SetSystem)>) -> Result<Self> {
        let same = entries
            .windows(2)
            .all(|w| w[0].1.universe_size() == w[1].1.universe_size());
        let mode = if same {
            CarrierMode::Shared
        } else {
            CarrierMode::Disjoint
        };
        Self::new(entries, mode)
    }

    pub fn labels(&self) -> &[IndexLabel] {
        &self.labels
    }

    pub fn spaces(&self) -> &[SetSystem] {
        &self.spaces
    }

    pub fn mode(&self) -> CarrierMode {
        self.mode
    }

    pub fn position(&self, label: &IndexLabel) -> Option<usize> {
        self.labels.binary_search(label).ok()
    }

    pub fn space(&self, label: &IndexLabel) -> Option<&SetSystem> {
        self.position(label).map(|i| &self.spaces[i])
    }

    /// `Π_ε |T_ε|`, the number of diagonal opens.
    pub fn product_size(&self) -> u128 {
        self.spaces.iter().map(|s| s.len() as u128).product()
    }

    /// Parses the family fixture format: a `labels=..` header, an optional
    /// `carriers=shared|disjoint` line, then one topology literal per label.
    /// Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "empty family file"))?;
        let labels = header
            .strip_prefix("labels=")
            .or_else(|| header.strip_prefix("labels ="))
            .ok_or_else(|| Error::parse(hline, "expected `labels=...` header"))?
            .split(',')
            .map(|s| s.parse::<IndexLabel>())
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::parse(hline, e.to_string()))?;
        let mut mode = None;
        let mut spaces = Vec::new();
        for (lineno, line) in lines {
            if let Some(m) = line.strip_prefix("carriers=") {
                mode = Some(match m.trim() {
                    "shared" => CarrierMode::Shared,
                    "disjoint" => CarrierMode::Disjoint,
                    other => {
                        return Err(Error::parse(lineno, format!("unknown carrier mode `{other}`")))
                    }
                });
                continue;
            }
            let system = line.parse::<SetSystem>().map_err(|e| match e {
                Error::Parse { message, .. } => Error::parse(lineno, message),
                other => Error::parse(lineno, other.to_string()),
            })?;
            spaces.push(system);
        }
        if spaces.len() != labels.len() {
            return Err(Error::parse(
                hline,
                format!("{} labels but {} topologies", labels.len(), spaces.len()),
            ));
        }
        let entries = labels.into_iter().zip(spaces).collect();
        match mode {
            Some(m) => Self::new(entries, m),
            None => Self::with_inferred_mode(entries),
        }
    }
}

/// One open per label, aligned with the family's label order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DiagonalOpen {
    components: Vec<Mask>,
}

impl DiagonalOpen {
    /// Checks that each component is an open of its label's space.
    pub fn from_masks(family: &IndexedFamily, components: Vec<Mask>) -> Result<Self> {
        if components.len() != family.labels.len() {
            return Err(Error::input(format!(
                "expected {} components, got {}",
                family.labels.len(),
                components.len()
            )));
        }
        for ((label, space), c) in family.labels.iter().zip(&family.spaces).zip(&components) {
            if !space.contains(*c) {
                return Err(Error::input(format!(
                    "{} is not open in the component at {label}",
                    set_literal(*c)
                )));
            }
        }
        Ok(Self { components })
    }

    /// Builds an open from indices into each component's canonical open list.
    pub fn from_indices(family: &IndexedFamily, indices: &[usize]) -> Result<Self> {
        if indices.len() != family.labels.len() {
            return Err(Error::input("one index per label is required"));
        }
        let masks = indices
            .iter()
            .zip(&family.spaces)
            .map(|(&i, s)| {
                s.sets()
                    .get(i)
                    .copied()
                    .ok_or_else(|| Error::input(format!("open index {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { components: masks })
    }

    pub fn components(&self) -> &[Mask] {
        &self.components
    }

    /// Component at `label`.
    pub fn at(&self, family: &IndexedFamily, label: &IndexLabel) -> Option<Mask> {
        family.position(label).map(|i| self.components[i])
    }
}

impl fmt::Display for DiagonalOpen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.components.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", set_literal(*c))?;
        }
        write!(f, ")")
    }
}

fn combine(
    family: &IndexedFamily,
    a: &DiagonalOpen,
    b: &DiagonalOpen,
    op: impl Fn(Mask, Mask) -> Mask,
) -> Result<DiagonalOpen> {
    let n = family.labels.len();
    if a.components.len() != n || b.components.len() != n {
        return Err(Error::input("diagonal opens belong to a different family"));
    }
    let components = a
        .components
        .iter()
        .zip(&b.components)
        .map(|(x, y)| op(*x, *y))
        .collect();
    DiagonalOpen::from_masks(family, components)
}

/// `A ∪ B = ∪_ε (A_ε ∪ B_ε)`.
pub fn diagonal_union(family: &IndexedFamily, a: &DiagonalOpen, b: &DiagonalOpen) -> Result<DiagonalOpen> {
    combine(family, a, b, |x, y| x | y)
}

/// `A ∩ B = ∪_ε (A_ε ∩ B_ε)`.
pub fn diagonal_intersect(family: &IndexedFamily, a: &DiagonalOpen, b: &DiagonalOpen) -> Result<DiagonalOpen> {
    combine(family, a, b, |x, y| x & y)
}

/// Every diagonal open, in mixed-radix order over the component open lists
/// (last label varying fastest).
pub fn enumerate_diagonal_opens(family: &IndexedFamily, cap: u128) -> Result<Vec<DiagonalOpen>> {
    let total = family.product_size();
    if total > cap {
        return Err(Error::capacity(format!(
            "{total} diagonal opens exceed the enumeration cap {cap}"
        )));
    }
    let mut out = Vec::with_capacity(total as usize);
    let mut idx = vec![0usize; family.spaces.len()];
    if family.spaces.iter().any(|s| s.is_empty()) {
        return Ok(out);
    }
    loop {
        out.push(DiagonalOpen {
            components: idx
                .iter()
                .zip(&family.spaces)
                .map(|(&i, s)| s.sets()[i])
                .collect(),
        });
        let mut pos = idx.len();
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < family.spaces[pos].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// How a diagonal check was carried out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckMode {
    /// Every pair of the enumerated opens was examined.
    Exhaustive { opens: u128 },
    /// Random pairs drawn with a recorded seed.
    Sampled { seed: u64, pairs: usize },
}

/// A failed axiom of the diagonal topology: the label where the componentwise
/// result leaves the component collection, and what went wrong there.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalViolation {
    pub label: IndexLabel,
    pub violation: Violation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalReport {
    pub valid: bool,
    pub mode: CheckMode,
    pub violation: Option<DiagonalViolation>,
}

impl fmt::Display for DiagonalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.mode {
            CheckMode::Exhaustive { opens } => write!(f, "exhaustive over {opens} diagonal opens: ")?,
            CheckMode::Sampled { seed, pairs } => write!(f, "sampled {pairs} pairs (seed {seed}): ")?,
        }
        match &self.violation {
            None => write!(f, "valid"),
            Some(v) => write!(f, "invalid at label {}: {}", v.label, v.violation),
        }
    }
}

/// Verifies the three topology axioms for the collection of diagonal opens.
///
/// When `Π |T_ε| <= cap` every pair of diagonal opens is combined and the
/// componentwise results are looked up; above the cap random pairs are drawn
/// from a [`ChaCha8Rng`] seeded with `seed`.
pub fn check_diagonal_axioms(family: &IndexedFamily, cap: u128, seed: u64) -> DiagonalReport {
    let total = family.product_size();
    let empty_or_full = |pick_full: bool| {
        family.labels.iter().zip(&family.spaces).find_map(|(l, s)| {
            let target = if pick_full { s.universe() } else { 0 };
            (!s.contains(target)).then(|| DiagonalViolation {
                label: l.clone(),
                violation: if pick_full {
                    Violation::MissingUniverse
                } else {
                    Violation::MissingEmpty
                },
            })
        })
    };
    let mode = if total <= cap {
        CheckMode::Exhaustive { opens: total }
    } else {
        CheckMode::Sampled {
            seed,
            pairs: SAMPLE_PAIRS,
        }
    };
    let report = |violation: Option<DiagonalViolation>| DiagonalReport {
        valid: violation.is_none(),
        mode,
        violation,
    };
    if let Some(v) = empty_or_full(false).or_else(|| empty_or_full(true)) {
        return report(Some(v));
    }

    let pair_violation = |a: &[Mask], b: &[Mask]| -> Option<DiagonalViolation> {
        for (k, space) in family.spaces.iter().enumerate() {
            let (x, y) = (a[k], b[k]);
            let v = if !space.contains(x & y) {
                Violation::Intersection(x, y)
            } else if !space.contains(x | y) {
                Violation::Union(x, y)
            } else {
                continue;
            };
            return Some(DiagonalViolation {
                label: family.labels[k].clone(),
                violation: v,
            });
        }
        None
    };

    match mode {
        CheckMode::Exhaustive { .. } => {
            let opens = enumerate_diagonal_opens(family, cap).expect("under cap");
            for (i, a) in opens.iter().enumerate() {
                for b in &opens[i + 1..] {
                    if let Some(v) = pair_violation(&a.components, &b.components) {
                        return report(Some(v));
                    }
                }
            }
            report(None)
        }
        CheckMode::Sampled { .. } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let draw = |rng: &mut ChaCha8Rng| -> Vec<Mask> {
                family
                    .spaces
                    .iter()
                    .map(|s| s.sets()[rng.gen_range(0..s.len())])
                    .collect()
            };
            for _ in 0..SAMPLE_PAIRS {
                let a = draw(&mut rng);
                let b = draw(&mut rng);
                if let Some(v) = pair_violation(&a, &b) {
                    return report(Some(v));
                }
            }
            report(None)
        }
    }
}

/// Per-label validity of the component collections, as a convenience for
/// callers that want to know which components are genuine topologies.
pub fn component_reports(family: &IndexedFamily) -> Vec<(IndexLabel, bool)> {
    family
        .labels
        .iter()
        .zip(&family.spaces)
        .map(|(l, s)| (l.clone(), is_topology(s).valid))
        .collect()
}

/// One chosen point per label.
pub type ObjectSelection = BTreeMap<IndexLabel, usize>;

fn check_known_labels(family: &IndexedFamily, points: &ObjectSelection) -> Result<()> {
    match points.keys().find(|l| family.position(l).is_none()) {
        Some(l) => Err(Error::input(format!("unknown label {l}"))),
        None => Ok(()),
    }
}

/// True iff `object` picks exactly one in-range point for every label.
pub fn is_object(family: &IndexedFamily, object: &ObjectSelection) -> Result<bool> {
    check_known_labels(family, object)?;
    Ok(family.labels.iter().zip(&family.spaces).all(|(l, s)| {
        object
            .get(l)
            .is_some_and(|&p| p < s.universe_size())
    }))
}

/// True iff `omega` (one subset per label, in label order) contains a
/// diagonal open that is a neighborhood of every chosen point.
pub fn is_diagonal_neighborhood(family: &IndexedFamily, omega: &[Mask], object: &ObjectSelection) -> Result<bool> {
    if !is_object(family, object)? {
        return Err(Error::input("selection is not an object of the family"));
    }
    if omega.len() != family.labels.len() {
        return Err(Error::input("one subset per label is required"));
    }
    Ok(family
        .labels
        .iter()
        .zip(&family.spaces)
        .zip(omega)
        .all(|((l, s), &w)| {
            let x = 1 << object[l];
            s.sets().iter().any(|&o| o & x != 0 && o & !w == 0)
        }))
}

/// A discretized internal structure: one point per label, ordered by label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InternalStructurePath {
    pub points: ObjectSelection,
}

impl InternalStructurePath {
    /// The path meets every component in exactly one point.
    pub fn is_valid_for(&self, family: &IndexedFamily) -> Result<bool> {
        is_object(family, &self.points)
    }

    /// Points visited, in increasing label order.
    pub fn trace(&self) -> Vec<(IndexLabel, usize)> {
        self.points.iter().map(|(l, p)| (l.clone(), *p)).collect()
    }

    /// Pointwise equality; the only comparison available on a grid.
    pub fn same_as(&self, other: &Self) -> bool {
        self.points == other.points
    }
}
