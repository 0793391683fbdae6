//! Topologies on small finite ground sets.
//!
//! Points are the integers `0..universe_size` and subsets are bit masks, so a
//! universe holds at most [`MAX_UNIVERSE`] points. Collections are kept in a
//! canonical order (by size, then lexicographically on the sorted element
//! lists) which turns equality of topologies into plain sequence equality.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A subset of the universe, bit `i` set when point `i` belongs to it.
pub type Mask = u32;

/// Largest supported universe.
pub const MAX_UNIVERSE: usize = 24;

/// Largest universe accepted by the brute-force homeomorphism search.
pub const MAX_HOMEOMORPHISM_POINTS: usize = 8;

/// Mask of the full universe `{0, .., n-1}`.
pub fn full_mask(n: usize) -> Mask {
    if n >= 32 {
        Mask::MAX
    } else {
        (1 << n) - 1
    }
}

/// Canonical ordering of subsets: smaller sets first, ties broken by
/// lexicographic order of the ascending element lists.
pub fn canonical_cmp(a: Mask, b: Mask) -> Ordering {
    match a.count_ones().cmp(&b.count_ones()) {
        Ordering::Equal if a == b => Ordering::Equal,
        // the lowest differing element decides: whoever owns it sorts first
        Ordering::Equal => {
            let diff = a ^ b;
            if a & diff & diff.wrapping_neg() != 0 {
                Ordering::Less
            } else {
                Ordering::Greater
            }
        }
        other => other,
    }
}

pub(crate) fn canonicalize(sets: &mut Vec<Mask>) {
    sets.sort_by(|a, b| canonical_cmp(*a, *b));
    sets.dedup();
}

/// Ascending element list of a mask.
pub fn elements(mask: Mask) -> Vec<usize> {
    (0..32).filter(|i| mask & (1 << i) != 0).collect()
}

pub(crate) fn mask_from_elements(n: usize, elems: &[usize]) -> Result<Mask> {
    let mut mask = 0;
    for &e in elems {
        if e >= n {
            return Err(Error::input(format!(
                "element {e} outside universe of size {n}"
            )));
        }
        mask |= 1 << e;
    }
    Ok(mask)
}

/// Packs the bits of `mask` selected by `support` into the low bits, in order.
pub(crate) fn compress(mask: Mask, support: Mask) -> Mask {
    let mut out = 0;
    let mut j = 0;
    for i in 0..32 {
        if support & (1 << i) != 0 {
            if mask & (1 << i) != 0 {
                out |= 1 << j;
            }
            j += 1;
        }
    }
    out
}

/// Image of `mask` under the point map `map` (point `i` goes to `map[i]`).
pub(crate) fn map_mask(mask: Mask, map: &[usize]) -> Mask {
    map.iter()
        .enumerate()
        .filter(|(i, _)| mask & (1 << i) != 0)
        .fold(0, |acc, (_, &j)| acc | (1 << j))
}

/// Preimage of `mask` under the point map `map`.
pub(crate) fn preimage_mask(mask: Mask, map: &[usize]) -> Mask {
    map.iter()
        .enumerate()
        .filter(|(_, &j)| mask & (1 << j) != 0)
        .fold(0, |acc, (i, _)| acc | (1 << i))
}

fn fmt_set(f: &mut fmt::Formatter<'_>, mask: Mask) -> fmt::Result {
    write!(f, "{{")?;
    for (k, e) in elements(mask).into_iter().enumerate() {
        if k > 0 {
            write!(f, ",")?;
        }
        write!(f, "{e}")?;
    }
    write!(f, "}}")
}

/// Renders a subset as `{0,2}`.
pub fn set_literal(mask: Mask) -> String {
    struct S(Mask);
    impl fmt::Display for S {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            fmt_set(f, self.0)
        }
    }
    S(mask).to_string()
}

/// A collection of subsets of `{0, .., universe_size-1}`, deduplicated and
/// in canonical order. It may or may not be a topology.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SetSystem {
    universe_size: usize,
    sets: Vec<Mask>,
}

fn check_universe(n: usize) -> Result<()> {
    if n == 0 || n > MAX_UNIVERSE {
        return Err(Error::input(format!(
            "universe size {n} outside 1..={MAX_UNIVERSE}"
        )));
    }
    Ok(())
}

impl SetSystem {
    pub fn new(universe_size: usize, sets: impl IntoIterator<Item = Mask>) -> Result<Self> {
        check_universe(universe_size)?;
        let full = full_mask(universe_size);
        let mut sets: Vec<Mask> = sets.into_iter().collect();
        if let Some(bad) = sets.iter().find(|s| **s & !full != 0) {
            return Err(Error::input(format!(
                "subset {} escapes universe of size {universe_size}",
                set_literal(*bad)
            )));
        }
        canonicalize(&mut sets);
        Ok(Self {
            universe_size,
            sets,
        })
    }

    /// Builds a system from explicit element lists.
    pub fn from_elements(universe_size: usize, sets: &[Vec<usize>]) -> Result<Self> {
        check_universe(universe_size)?;
        let masks = sets
            .iter()
            .map(|s| mask_from_elements(universe_size, s))
            .collect::<Result<Vec<_>>>()?;
        Self::new(universe_size, masks)
    }

    pub fn universe_size(&self) -> usize {
        self.universe_size
    }

    pub fn universe(&self) -> Mask {
        full_mask(self.universe_size)
    }

    pub fn sets(&self) -> &[Mask] {
        &self.sets
    }

    pub fn contains(&self, mask: Mask) -> bool {
        self.sets
            .binary_search_by(|s| canonical_cmp(*s, mask))
            .is_ok()
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }
}

impl fmt::Display for SetSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={}; opens=", self.universe_size)?;
        for (k, s) in self.sets.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            fmt_set(f, *s)?;
        }
        Ok(())
    }
}

/// Parses the brace list part of a topology literal, `{},{0},{0,1}`.
pub(crate) fn parse_brace_list(text: &str) -> std::result::Result<Vec<Vec<usize>>, String> {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let mut out = Vec::new();
    let mut rest = compact.as_str();
    while !rest.is_empty() {
        let body = rest
            .strip_prefix('{')
            .ok_or_else(|| format!("expected '{{' at `{rest}`"))?;
        let close = body
            .find('}')
            .ok_or_else(|| "unterminated subset".to_string())?;
        let inner = &body[..close];
        let elems = if inner.is_empty() {
            Vec::new()
        } else {
            inner
                .split(',')
                .map(|e| {
                    e.parse::<usize>()
                        .map_err(|_| format!("bad element `{e}`"))
                })
                .collect::<std::result::Result<Vec<_>, _>>()?
        };
        out.push(elems);
        rest = &body[close + 1..];
        if let Some(r) = rest.strip_prefix(',') {
            if r.is_empty() {
                return Err("trailing comma".into());
            }
            rest = r;
        } else if !rest.is_empty() {
            return Err(format!("expected ',' at `{rest}`"));
        }
    }
    Ok(out)
}

impl FromStr for SetSystem {
    type Err = Error;

    /// Parses `n=3; opens={},{0},{0,1,2}`; whitespace is ignored.
    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let (head, tail) = compact
            .split_once(';')
            .ok_or_else(|| Error::parse(1, "expected `n=<size>; opens=...`"))?;
        let n = head
            .strip_prefix("n=")
            .and_then(|v| v.parse::<usize>().ok())
            .ok_or_else(|| Error::parse(1, format!("bad universe size `{head}`")))?;
        let body = tail
            .strip_prefix("opens=")
            .ok_or_else(|| Error::parse(1, "expected `opens=`"))?;
        let sets = parse_brace_list(body).map_err(|m| Error::parse(1, m))?;
        SetSystem::from_elements(n, &sets)
    }
}

/// Which topology axiom a set system violates, with a witness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    MissingEmpty,
    MissingUniverse,
    /// The intersection of the two opens is not in the system.
    Intersection(Mask, Mask),
    /// The union of the two opens is not in the system.
    Union(Mask, Mask),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::MissingEmpty => write!(f, "empty set is not open"),
            Violation::MissingUniverse => write!(f, "full set is not open"),
            Violation::Intersection(a, b) => write!(
                f,
                "intersection of {} and {} is not open",
                set_literal(a),
                set_literal(b)
            ),
            Violation::Union(a, b) => write!(
                f,
                "union of {} and {} is not open",
                set_literal(a),
                set_literal(b)
            ),
        }
    }
}

/// Outcome of [`is_topology`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TopologyReport {
    pub valid: bool,
    pub violation: Option<Violation>,
}

/// Checks the three topology axioms, reporting the first violation found.
///
/// Finite unions reduce to pairwise unions, so pairwise closure under union
/// and intersection is exhaustive.
pub fn is_topology(system: &SetSystem) -> TopologyReport {
    let violation = first_violation(system);
    TopologyReport {
        valid: violation.is_none(),
        violation,
    }
}

fn first_violation(system: &SetSystem) -> Option<Violation> {
    if !system.contains(0) {
        return Some(Violation::MissingEmpty);
    }
    if !system.contains(system.universe()) {
        return Some(Violation::MissingUniverse);
    }
    let sets = system.sets();
    for (i, &a) in sets.iter().enumerate() {
        for &b in &sets[i + 1..] {
            if !system.contains(a & b) {
                return Some(Violation::Intersection(a, b));
            }
            if !system.contains(a | b) {
                return Some(Violation::Union(a, b));
            }
        }
    }
    None
}

/// A verified topology on `{0, .., universe_size-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FiniteTopology {
    system: SetSystem,
}

impl FiniteTopology {
    /// Validates `opens` and wraps it; fails with an input error naming the
    /// violated axiom.
    pub fn new(universe_size: usize, opens: impl IntoIterator<Item = Mask>) -> Result<Self> {
        Self::try_from(SetSystem::new(universe_size, opens)?)
    }

    pub fn from_elements(universe_size: usize, opens: &[Vec<usize>]) -> Result<Self> {
        Self::try_from(SetSystem::from_elements(universe_size, opens)?)
    }

    pub fn discrete(n: usize) -> Result<Self> {
        check_universe(n)?;
        let system = SetSystem::new(n, 0..=full_mask(n))?;
        Ok(Self { system })
    }

    pub fn indiscrete(n: usize) -> Result<Self> {
        Self::new(n, [0, full_mask(n)])
    }

    /// `{∅, {0}, {0,1}}` on two points.
    pub fn sierpinski() -> Self {
        Self::new(2, [0b00, 0b01, 0b11]).expect("Sierpinski space is a topology")
    }

    /// The nested chain `∅ ⊂ {0} ⊂ {0,1} ⊂ .. ⊂ {0,..,n-1}`.
    pub fn chain(n: usize) -> Result<Self> {
        check_universe(n)?;
        Self::new(n, (0..=n).map(full_mask))
    }

    pub fn universe_size(&self) -> usize {
        self.system.universe_size
    }

    pub fn universe(&self) -> Mask {
        self.system.universe()
    }

    pub fn opens(&self) -> &[Mask] {
        self.system.sets()
    }

    pub fn is_open(&self, mask: Mask) -> bool {
        self.system.contains(mask)
    }

    /// Index of `mask` in the canonical open list.
    pub fn index_of(&self, mask: Mask) -> Option<usize> {
        self.system
            .sets
            .binary_search_by(|s| canonical_cmp(*s, mask))
            .ok()
    }

    pub fn len(&self) -> usize {
        self.system.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_system(&self) -> &SetSystem {
        &self.system
    }

    /// Number of opens containing each point.
    pub fn degrees(&self) -> Vec<usize> {
        (0..self.universe_size())
            .map(|p| self.opens().iter().filter(|o| *o & (1 << p) != 0).count())
            .collect()
    }

    /// Smallest open containing `point` (the intersection of all of them).
    pub fn minimal_neighborhood(&self, point: usize) -> Mask {
        self.opens()
            .iter()
            .filter(|o| *o & (1 << point) != 0)
            .fold(self.universe(), |acc, o| acc & o)
    }
}

impl TryFrom<SetSystem> for FiniteTopology {
    type Error = Error;

    fn try_from(system: SetSystem) -> Result<Self> {
        match first_violation(&system) {
            None => Ok(Self { system }),
            Some(v) => Err(Error::input(format!("not a topology: {v}"))),
        }
    }
}

impl FromStr for FiniteTopology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::try_from(s.parse::<SetSystem>()?)
    }
}

impl fmt::Display for FiniteTopology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.system.fmt(f)
    }
}

/// `{O ∩ S : O ∈ T}`, re-indexed so the points of `subset` become
/// `0..|subset|` in increasing order.
pub fn subspace_topology(topology: &FiniteTopology, subset: Mask) -> Result<FiniteTopology> {
    if subset & !topology.universe() != 0 {
        return Err(Error::input(format!(
            "{} is not a subset of the universe",
            set_literal(subset)
        )));
    }
    if subset == 0 {
        return Err(Error::input("subspace on the empty set"));
    }
    let n = subset.count_ones() as usize;
    let opens = topology.opens().iter().map(|o| compress(o & subset, subset));
    let system = SetSystem::new(n, opens)?;
    debug_assert!(first_violation(&system).is_none());
    Ok(FiniteTopology { system })
}

/// Subspace topology pulled back along an injective point map
/// `embedding: sub points -> topology points`: `{e⁻¹(O) : O ∈ T}`.
pub fn induced_topology(topology: &FiniteTopology, embedding: &[usize]) -> Result<FiniteTopology> {
    let n = embedding.len();
    check_universe(n)?;
    if embedding.iter().any(|&p| p >= topology.universe_size()) {
        return Err(Error::input("embedding lands outside the carrier"));
    }
    let opens = topology.opens().iter().map(|o| preimage_mask(*o, embedding));
    Ok(FiniteTopology {
        system: SetSystem::new(n, opens)?,
    })
}

fn same_universe(a: &FiniteTopology, b: &FiniteTopology) -> Result<()> {
    if a.universe_size() != b.universe_size() {
        return Err(Error::input(format!(
            "universe sizes differ: {} vs {}",
            a.universe_size(),
            b.universe_size()
        )));
    }
    Ok(())
}

/// True iff every open of `coarse` is an open of `fine`.
pub fn is_coarser(coarse: &FiniteTopology, fine: &FiniteTopology) -> Result<bool> {
    same_universe(coarse, fine)?;
    Ok(coarse.opens().iter().all(|o| fine.is_open(*o)))
}

/// First open of `coarse` missing from `fine`, if any.
pub fn coarseness_witness(coarse: &FiniteTopology, fine: &FiniteTopology) -> Result<Option<Mask>> {
    same_universe(coarse, fine)?;
    Ok(coarse.opens().iter().copied().find(|o| !fine.is_open(*o)))
}

/// Searches for a homeomorphism `T1 -> T2`.
///
/// Returns `map` with `map[i]` the image of point `i`, such that the image of
/// every open of `t1` is an open of `t2`. Candidates are pruned by the open
/// count, the number of opens through each point and the size of its
/// minimal neighborhood.
pub fn are_homeomorphic(t1: &FiniteTopology, t2: &FiniteTopology) -> Result<Option<Vec<usize>>> {
    for t in [t1, t2] {
        if t.universe_size() > MAX_HOMEOMORPHISM_POINTS {
            return Err(Error::capacity(format!(
                "homeomorphism search is limited to {MAX_HOMEOMORPHISM_POINTS} points, got {}",
                t.universe_size()
            )));
        }
    }
    if t1.universe_size() != t2.universe_size() || t1.len() != t2.len() {
        return Ok(None);
    }
    let sig = |t: &FiniteTopology| -> Vec<(usize, u32)> {
        let deg = t.degrees();
        (0..t.universe_size())
            .map(|p| (deg[p], t.minimal_neighborhood(p).count_ones()))
            .collect()
    };
    let (s1, s2) = (sig(t1), sig(t2));
    let mut sorted1 = s1.clone();
    let mut sorted2 = s2.clone();
    sorted1.sort_unstable();
    sorted2.sort_unstable();
    if sorted1 != sorted2 {
        return Ok(None);
    }

    let n = t1.universe_size();
    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    Ok(search(t1, t2, &s1, &s2, 0, &mut map, &mut used).then_some(map))
}

fn search(
    t1: &FiniteTopology,
    t2: &FiniteTopology,
    s1: &[(usize, u32)],
    s2: &[(usize, u32)],
    point: usize,
    map: &mut [usize],
    used: &mut [bool],
) -> bool {
    let n = map.len();
    if point == n {
        return t1.opens().iter().all(|o| t2.is_open(map_mask(*o, map)));
    }
    for target in 0..n {
        if used[target] || s1[point] != s2[target] {
            continue;
        }
        // minimal neighborhoods of already mapped points must map consistently
        map[point] = target;
        used[target] = true;
        if partial_consistent(t1, t2, map, point) && search(t1, t2, s1, s2, point + 1, map, used) {
            return true;
        }
        used[target] = false;
        map[point] = usize::MAX;
    }
    false
}

fn partial_consistent(t1: &FiniteTopology, t2: &FiniteTopology, map: &[usize], upto: usize) -> bool {
    let assigned = full_mask(upto + 1);
    let image_assigned = map_mask(assigned, &map[..=upto]);
    // for each open O of t1, O restricted to assigned points must map onto the
    // assigned part of some open of t2
    t1.opens().iter().all(|o| {
        let img = map_mask(o & assigned, &map[..=upto]);
        t2.opens().iter().any(|p| p & image_assigned == img)
    })
}

/// All topologies on `n` labeled points, by exhaustive filtering of set
/// systems containing `∅` and the full set. Feasible for `n <= 4`.
pub fn enumerate_topologies(n: usize) -> Result<Vec<FiniteTopology>> {
    if n == 0 || n > 4 {
        return Err(Error::capacity(format!(
            "topology enumeration supports 1..=4 points, got {n}"
        )));
    }
    let full = full_mask(n);
    // proper nonempty subsets are the free choices
    let middle: Vec<Mask> = (1..full).collect();
    let mut out = Vec::new();
    for choice in 0u64..(1u64 << middle.len()) {
        let sets = middle
            .iter()
            .enumerate()
            .filter(|(i, _)| choice & (1 << i) != 0)
            .map(|(_, m)| *m)
            .chain([0, full]);
        let system = SetSystem::new(n, sets)?;
        if let Ok(t) = FiniteTopology::try_from(system) {
            out.push(t);
        }
    }
    Ok(out)
}

/// Groups topologies into homeomorphism classes; each class lists indices
/// into `topologies` in input order.
pub fn homeomorphism_classes(topologies: &[FiniteTopology]) -> Result<Vec<Vec<usize>>> {
    let mut classes: Vec<Vec<usize>> = Vec::new();
    'outer: for (i, t) in topologies.iter().enumerate() {
        for class in classes.iter_mut() {
            if are_homeomorphic(&topologies[class[0]], t)?.is_some() {
                class.push(i);
                continue 'outer;
            }
        }
        classes.push(vec![i]);
    }
    Ok(classes)
}
