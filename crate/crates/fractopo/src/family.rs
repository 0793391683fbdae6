//! Model checker for fractal families of finite topological spaces.
//!
//! A [`FractalFamilySpec`] lists, for each level `n`, spaces keyed by sign
//! strings of length `n + 1`, plus declared parent links carrying an
//! injective point map from the parent's carrier into the child's. The five
//! defining properties are:
//!
//! 1. the number of keys strictly grows from level to level;
//! 2. every member is a topological space;
//! 3. members of one level are pairwise homeomorphic;
//! 4. every key above level 0 has exactly one parent whose topology is the
//!    subspace topology induced by the child;
//! 5. every key below the top has a child whose topology contains the
//!    parent's opens and induces the parent's topology.
//!
//! All comparisons happen in the child's carrier coordinates: parent opens
//! are pushed forward through the declared embedding.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::sign::SignString;
use crate::topology::{
    are_homeomorphic, canonicalize, full_mask, is_topology, map_mask, parse_brace_list,
    preimage_mask, set_literal, FiniteTopology, Mask, SetSystem, MAX_HOMEOMORPHISM_POINTS,
};

/// Highest level a spec may declare.
pub const MAX_FAMILY_LEVEL: usize = 6;

/// One space of the family.
#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub key: SignString,
    /// Point labels of the carrier; opens refer to positions in this list.
    pub carrier: Vec<u32>,
    /// Candidate topology over positions `0..carrier.len()`.
    pub topology: SetSystem,
}

/// Declares `parent ⊂ child` through `embedding[i]` = position in the child
/// carrier of the parent's `i`-th point.
#[derive(Debug, Clone, PartialEq)]
pub struct ParentLink {
    pub child: SignString,
    pub parent: SignString,
    pub embedding: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FractalFamilySpec {
    levels: Vec<BTreeMap<SignString, Member>>,
    links: Vec<ParentLink>,
}

impl FractalFamilySpec {
    /// Structural validation: keys grouped by length into contiguous levels
    /// `0..=N` with `N <= MAX_FAMILY_LEVEL`, no duplicate keys, and every
    /// link joining adjacent existing levels with an injective embedding
    /// into the child carrier.
    pub fn new(members: Vec<Member>, links: Vec<ParentLink>) -> Result<Self> {
        let top = members
            .iter()
            .map(|m| m.key.level())
            .max()
            .ok_or_else(|| Error::input("a family needs at least one member"))?;
        if top > MAX_FAMILY_LEVEL {
            return Err(Error::capacity(format!(
                "level {top} exceeds the cap {MAX_FAMILY_LEVEL}"
            )));
        }
        let mut levels: Vec<BTreeMap<SignString, Member>> = vec![BTreeMap::new(); top + 1];
        for m in members {
            if m.carrier.len() != m.topology.universe_size() {
                return Err(Error::input(format!(
                    "{}: carrier has {} points but topology is over {}",
                    m.key,
                    m.carrier.len(),
                    m.topology.universe_size()
                )));
            }
            let mut sorted = m.carrier.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::input(format!("{}: repeated carrier point", m.key)));
            }
            let level = &mut levels[m.key.level()];
            if level.contains_key(&m.key) {
                return Err(Error::input(format!("duplicate key {}", m.key)));
            }
            level.insert(m.key, m);
        }
        if let Some(n) = levels.iter().position(|l| l.is_empty()) {
            return Err(Error::input(format!("level {n} has no members")));
        }
        let spec = Self { levels, links };
        for link in &spec.links {
            let child = spec
                .member(&link.child)
                .ok_or_else(|| Error::input(format!("link names unknown child {}", link.child)))?;
            let parent = spec
                .member(&link.parent)
                .ok_or_else(|| Error::input(format!("link names unknown parent {}", link.parent)))?;
            if child.key.level() != parent.key.level() + 1 {
                return Err(Error::input(format!(
                    "link {} -> {} does not join adjacent levels",
                    link.child, link.parent
                )));
            }
            if link.embedding.len() != parent.carrier.len() {
                return Err(Error::input(format!(
                    "link {} -> {}: embedding covers {} of {} parent points",
                    link.child,
                    link.parent,
                    link.embedding.len(),
                    parent.carrier.len()
                )));
            }
            if link.embedding.iter().any(|&p| p >= child.carrier.len()) {
                return Err(Error::input(format!(
                    "link {} -> {}: embedding leaves the child carrier",
                    link.child, link.parent
                )));
            }
            let mut seen = link.embedding.clone();
            seen.sort_unstable();
            if seen.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::input(format!(
                    "link {} -> {}: embedding is not injective",
                    link.child, link.parent
                )));
            }
        }
        Ok(spec)
    }

    /// The bundled self-similar fixture: level `n` has all `2^(n+1)` keys,
    /// each on the carrier `{0, .., n+1}` with the nested chain topology
    /// `∅ ⊂ {0} ⊂ {0,1} ⊂ ..`. Level 0 is the Sierpiński space and every
    /// child adds one point plus the open equal to its whole carrier.
    /// Parents are obtained by dropping the last sign; embeddings are the
    /// identity on the parent's points.
    pub fn sierpinski_doubling(max_level: usize) -> Result<Self> {
        if max_level > MAX_FAMILY_LEVEL {
            return Err(Error::capacity(format!(
                "level {max_level} exceeds the cap {MAX_FAMILY_LEVEL}"
            )));
        }
        let mut members = Vec::new();
        let mut links = Vec::new();
        for n in 0..=max_level {
            let size = n + 2;
            let topology = FiniteTopology::chain(size)?.as_system().clone();
            for key in crate::sign::lambda(n)? {
                members.push(Member {
                    key,
                    carrier: (0..size as u32).collect(),
                    topology: topology.clone(),
                });
                if n > 0 {
                    links.push(ParentLink {
                        child: key,
                        parent: key.parent()?,
                        embedding: (0..size - 1).collect(),
                    });
                }
            }
        }
        Self::new(members, links)
    }

    pub fn max_level(&self) -> usize {
        self.levels.len() - 1
    }

    /// Members of level `n` in key order.
    pub fn level(&self, n: usize) -> impl Iterator<Item = &Member> {
        self.levels.get(n).into_iter().flat_map(|l| l.values())
    }

    pub fn keys(&self, n: usize) -> Vec<SignString> {
        self.level(n).map(|m| m.key).collect()
    }

    pub fn member(&self, key: &SignString) -> Option<&Member> {
        self.levels.get(key.level())?.get(key)
    }

    pub(crate) fn member_mut(&mut self, key: &SignString) -> Option<&mut Member> {
        self.levels.get_mut(key.level())?.get_mut(key)
    }

    /// Swaps in a new candidate topology for `key`.
    pub fn replace_topology(&mut self, key: &SignString, topology: SetSystem) -> Result<()> {
        let m = self
            .member_mut(key)
            .ok_or_else(|| Error::input(format!("{key} is not a key of the spec")))?;
        if topology.universe_size() != m.carrier.len() {
            return Err(Error::input(format!(
                "{key}: topology is over {} points, carrier has {}",
                topology.universe_size(),
                m.carrier.len()
            )));
        }
        m.topology = topology;
        Ok(())
    }

    /// Removes every parent link whose child is `key`.
    pub fn remove_parent_links(&mut self, key: &SignString) {
        self.links.retain(|l| l.child != *key);
    }

    pub fn links(&self) -> &[ParentLink] {
        &self.links
    }

    pub(crate) fn links_mut(&mut self) -> &mut Vec<ParentLink> {
        &mut self.links
    }

    pub(crate) fn remove_member(&mut self, key: &SignString) {
        if let Some(level) = self.levels.get_mut(key.level()) {
            level.remove(key);
        }
        self.links.retain(|l| l.child != *key && l.parent != *key);
    }

    /// Links whose child is `key`.
    pub fn parent_links(&self, key: &SignString) -> Vec<&ParentLink> {
        self.links.iter().filter(|l| l.child == *key).collect()
    }

    /// Links whose parent is `key`, ordered by child key.
    pub fn child_links(&self, key: &SignString) -> Vec<&ParentLink> {
        let mut v: Vec<&ParentLink> = self.links.iter().filter(|l| l.parent == *key).collect();
        v.sort_by_key(|l| l.child);
        v
    }

    /// Parses the spec fixture format:
    ///
    /// ```text
    /// level 0: key=+; carrier=0,1; topology={},{0},{0,1}
    /// parent +- -> +: embed 0->0,1->1
    /// ```
    ///
    /// Carrier points and open elements are point labels; blank lines and
    /// `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut members = Vec::new();
        let mut links = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("level") {
                members.push(parse_member(rest, lineno)?);
            } else if let Some(rest) = line.strip_prefix("parent") {
                links.push((lineno, rest.to_string()));
            } else {
                return Err(Error::parse(lineno, format!("unrecognized line `{line}`")));
            }
        }
        let carriers: BTreeMap<SignString, Vec<u32>> =
            members.iter().map(|m| (m.key, m.carrier.clone())).collect();
        let links = links
            .into_iter()
            .map(|(lineno, rest)| parse_link(&rest, lineno, &carriers))
            .collect::<Result<Vec<_>>>()?;
        Self::new(members, links)
    }
}

fn parse_member(rest: &str, lineno: usize) -> Result<Member> {
    let perr = |m: String| Error::parse(lineno, m);
    let (level, body) = rest
        .split_once(':')
        .ok_or_else(|| perr("expected `level <n>: ...`".into()))?;
    let level: usize = level
        .trim()
        .parse()
        .map_err(|_| perr(format!("bad level `{}`", level.trim())))?;
    let mut key = None;
    let mut carrier = None;
    let mut topology = None;
    for field in body.split(';') {
        let (name, value) = field
            .split_once('=')
            .ok_or_else(|| perr(format!("expected `name=value`, got `{}`", field.trim())))?;
        let value = value.trim();
        match name.trim() {
            "key" => key = Some(value.parse::<SignString>().map_err(|e| perr(e.to_string()))?),
            "carrier" => {
                carrier = Some(
                    value
                        .split(',')
                        .map(|p| p.trim().parse::<u32>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| perr(format!("bad carrier `{value}`")))?,
                )
            }
            "topology" => topology = Some(parse_brace_list(value).map_err(perr)?),
            other => return Err(perr(format!("unknown field `{other}`"))),
        }
    }
    let key = key.ok_or_else(|| perr("missing key".into()))?;
    let carrier: Vec<u32> = carrier.ok_or_else(|| perr("missing carrier".into()))?;
    if let Some(p) = carrier.iter().enumerate().find_map(|(i, p)| carrier[..i].contains(p).then_some(p)) {
        return Err(perr(format!("carrier lists point {p} twice")));
    }
    let opens = topology.ok_or_else(|| perr("missing topology".into()))?;
    if key.level() != level {
        return Err(perr(format!("key {key} does not belong to level {level}")));
    }
    let position = |p: usize| -> Result<usize> {
        carrier
            .iter()
            .position(|&c| c as usize == p)
            .ok_or_else(|| perr(format!("point {p} is not in the carrier of {key}")))
    };
    let opens = opens
        .iter()
        .map(|set| set.iter().try_fold(0 as Mask, |acc, &p| Ok(acc | 1 << position(p)?)))
        .collect::<Result<Vec<Mask>>>()?;
    let topology =
        SetSystem::new(carrier.len(), opens).map_err(|e| perr(e.to_string()))?;
    Ok(Member {
        key,
        carrier,
        topology,
    })
}

fn parse_link(rest: &str, lineno: usize, carriers: &BTreeMap<SignString, Vec<u32>>) -> Result<ParentLink> {
    let perr = |m: String| Error::parse(lineno, m);
    let (keys, embed) = rest
        .split_once(':')
        .ok_or_else(|| perr("expected `parent <child> -> <parent>: embed ...`".into()))?;
    let (child, parent) = keys
        .split_once("->")
        .ok_or_else(|| perr("expected `<child> -> <parent>`".into()))?;
    let child: SignString = child.parse().map_err(|e: Error| perr(e.to_string()))?;
    let parent: SignString = parent.parse().map_err(|e: Error| perr(e.to_string()))?;
    let pairs = embed
        .trim()
        .strip_prefix("embed")
        .ok_or_else(|| perr("expected `embed`".into()))?;
    let child_carrier = carriers
        .get(&child)
        .ok_or_else(|| perr(format!("unknown child {child}")))?;
    let parent_carrier = carriers
        .get(&parent)
        .ok_or_else(|| perr(format!("unknown parent {parent}")))?;
    let mut embedding = vec![usize::MAX; parent_carrier.len()];
    for pair in pairs.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (from, to) = pair
            .split_once("->")
            .ok_or_else(|| perr(format!("bad embedding pair `{pair}`")))?;
        let parse_pt = |s: &str| {
            s.trim()
                .parse::<u32>()
                .map_err(|_| perr(format!("bad point `{}`", s.trim())))
        };
        let (from, to) = (parse_pt(from)?, parse_pt(to)?);
        let i = parent_carrier
            .iter()
            .position(|&c| c == from)
            .ok_or_else(|| perr(format!("{from} is not a point of {parent}")))?;
        let j = child_carrier
            .iter()
            .position(|&c| c == to)
            .ok_or_else(|| perr(format!("{to} is not a point of {child}")))?;
        if embedding[i] != usize::MAX {
            return Err(perr(format!("point {from} embedded twice")));
        }
        embedding[i] = j;
    }
    if embedding.contains(&usize::MAX) {
        return Err(perr(format!("embedding of {parent} into {child} is partial")));
    }
    Ok(ParentLink {
        child,
        parent,
        embedding,
    })
}

impl fmt::Display for FractalFamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, level) in self.levels.iter().enumerate() {
            for m in level.values() {
                write!(f, "level {n}: key={}; carrier=", m.key)?;
                for (i, p) in m.carrier.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{p}")?;
                }
                write!(f, "; topology=")?;
                for (i, o) in m.topology.sets().iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    let labels: Vec<String> = crate::topology::elements(*o)
                        .into_iter()
                        .map(|p| m.carrier[p].to_string())
                        .collect();
                    write!(f, "{{{}}}", labels.join(","))?;
                }
                writeln!(f)?;
            }
        }
        let mut links: Vec<&ParentLink> = self.links.iter().collect();
        links.sort_by_key(|l| (l.child.level(), l.child));
        for l in links {
            let (pc, cc) = (
                &self.member(&l.parent).expect("validated").carrier,
                &self.member(&l.child).expect("validated").carrier,
            );
            let pairs: Vec<String> = l
                .embedding
                .iter()
                .enumerate()
                .map(|(i, &j)| format!("{}->{}", pc[i], cc[j]))
                .collect();
            writeln!(f, "parent {} -> {}: embed {}", l.child, l.parent, pairs.join(","))?;
        }
        Ok(())
    }
}

/// The five defining properties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Property {
    I,
    II,
    III,
    IV,
    V,
}

impl Property {
    pub const ALL: [Property; 5] = [Property::I, Property::II, Property::III, Property::IV, Property::V];

    pub fn name(self) -> &'static str {
        match self {
            Property::I => "i",
            Property::II => "ii",
            Property::III => "iii",
            Property::IV => "iv",
            Property::V => "v",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            Property::I => "index sets strictly grow",
            Property::II => "every member is a topological space",
            Property::III => "same-level topologies are equivalent",
            Property::IV => "unique parent with induced subspace topology",
            Property::V => "some child refines and induces the topology",
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropertyOutcome {
    pub property: Property,
    pub passed: bool,
    pub witnesses: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyReport {
    pub outcomes: Vec<PropertyOutcome>,
}

impl FamilyReport {
    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn outcome(&self, p: Property) -> &PropertyOutcome {
        &self.outcomes[p as usize]
    }

    pub fn passed(&self, p: Property) -> bool {
        self.outcome(p).passed
    }

    pub fn failed(&self) -> Vec<Property> {
        self.outcomes
            .iter()
            .filter(|o| !o.passed)
            .map(|o| o.property)
            .collect()
    }
}

impl fmt::Display for FamilyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for o in &self.outcomes {
            let verdict = if o.passed { "pass" } else { "FAIL" };
            writeln!(f, "property {:<3} {verdict}  {}", o.property.name(), o.property.summary())?;
            for w in &o.witnesses {
                writeln!(f, "    {w}")?;
            }
        }
        Ok(())
    }
}

/// Pulls every set of `system` back along `embedding`.
pub(crate) fn pull_back(system: &SetSystem, embedding: &[usize]) -> SetSystem {
    SetSystem::new(
        embedding.len(),
        system.sets().iter().map(|o| preimage_mask(*o, embedding)),
    )
    .expect("embedding length is a valid universe")
}

/// First set present in exactly one of the two systems.
fn first_difference(a: &SetSystem, b: &SetSystem) -> Option<Mask> {
    a.sets()
        .iter()
        .find(|s| !b.contains(**s))
        .or_else(|| b.sets().iter().find(|s| !a.contains(**s)))
        .copied()
}

/// Opens of `coarse` whose image under `embedding` is not open in `fine`.
fn pushforward_gap(coarse: &SetSystem, embedding: &[usize], fine: &SetSystem) -> Option<Mask> {
    coarse
        .sets()
        .iter()
        .copied()
        .find(|o| !fine.contains(map_mask(*o, embedding)))
}

/// Does `link` realize the subspace identity `T_parent = {O ∩ X_parent}`?
fn subspace_identity(spec: &FractalFamilySpec, link: &ParentLink) -> Option<Mask> {
    let parent = spec.member(&link.parent).expect("validated");
    let child = spec.member(&link.child).expect("validated");
    first_difference(&parent.topology, &pull_back(&child.topology, &link.embedding))
}

fn refines(spec: &FractalFamilySpec, link: &ParentLink) -> bool {
    let parent = spec.member(&link.parent).expect("validated");
    let child = spec.member(&link.child).expect("validated");
    pushforward_gap(&parent.topology, &link.embedding, &child.topology).is_none()
        && subspace_identity(spec, link).is_none()
}

/// Runs the five property checks.
///
/// Properties iii–v only consider members whose topology passes ii; broken
/// members are reported once, under ii. Fails with a capacity error when a
/// level needs a homeomorphism test on carriers above
/// [`MAX_HOMEOMORPHISM_POINTS`].
pub fn check_fractal_family(spec: &FractalFamilySpec) -> Result<FamilyReport> {
    let valid: BTreeMap<SignString, bool> = spec
        .levels
        .iter()
        .flat_map(|l| l.values())
        .map(|m| (m.key, is_topology(&m.topology).valid))
        .collect();
    let ok = |k: &SignString| valid.get(k).copied().unwrap_or(false);

    let mut i_w = Vec::new();
    for n in 0..spec.max_level() {
        let (a, b) = (spec.levels[n].len(), spec.levels[n + 1].len());
        if b <= a {
            i_w.push(format!("level {} has {b} keys, level {n} has {a}", n + 1));
        }
    }

    let mut ii_w = Vec::new();
    for m in spec.levels.iter().flat_map(|l| l.values()) {
        if let Some(v) = is_topology(&m.topology).violation {
            ii_w.push(format!("{}: {v}", m.key));
        }
    }

    let mut iii_w = Vec::new();
    for (n, level) in spec.levels.iter().enumerate() {
        let members: Vec<&Member> = level.values().filter(|m| ok(&m.key)).collect();
        let Some(reference) = members.first() else { continue };
        if reference.carrier.len() > MAX_HOMEOMORPHISM_POINTS {
            return Err(Error::capacity(format!(
                "level {n} carriers exceed {MAX_HOMEOMORPHISM_POINTS} points"
            )));
        }
        let rt = FiniteTopology::try_from(reference.topology.clone())?;
        for other in &members[1..] {
            let ot = FiniteTopology::try_from(other.topology.clone())?;
            if are_homeomorphic(&rt, &ot)?.is_none() {
                iii_w.push(format!(
                    "{} and {} are not homeomorphic ({} vs {} opens)",
                    reference.key,
                    other.key,
                    rt.len(),
                    ot.len()
                ));
            }
        }
    }

    let mut iv_w = Vec::new();
    for level in spec.levels.iter().skip(1) {
        for m in level.values() {
            let parents = spec.parent_links(&m.key);
            match parents.as_slice() {
                [] => iv_w.push(format!("{} has no parent (orphan key)", m.key)),
                [link] => {
                    if ok(&link.child) && ok(&link.parent) {
                        if let Some(w) = subspace_identity(spec, link) {
                            iv_w.push(format!(
                                "{} -> {}: induced topology differs at {}",
                                link.child,
                                link.parent,
                                set_literal(w)
                            ));
                        }
                    }
                }
                many => iv_w.push(format!(
                    "{} declares {} parents, expected exactly one",
                    m.key,
                    many.len()
                )),
            }
        }
    }

    let mut v_w = Vec::new();
    for level in spec.levels.iter().take(spec.max_level()) {
        for m in level.values().filter(|m| ok(&m.key)) {
            let found = spec
                .child_links(&m.key)
                .into_iter()
                .filter(|l| ok(&l.child))
                .any(|l| refines(spec, l));
            if !found {
                v_w.push(format!("{} has no child whose topology contains and induces it", m.key));
            }
        }
    }

    let outcomes = [i_w, ii_w, iii_w, iv_w, v_w]
        .into_iter()
        .zip(Property::ALL)
        .map(|(witnesses, property)| PropertyOutcome {
            property,
            passed: witnesses.is_empty(),
            witnesses,
        })
        .collect();
    Ok(FamilyReport { outcomes })
}

fn require_valid(spec: &FractalFamilySpec) -> Result<()> {
    let report = check_fractal_family(spec)?;
    if report.all_passed() {
        Ok(())
    } else {
        let failed: Vec<&str> = report.failed().into_iter().map(Property::name).collect();
        Err(Error::Precondition(format!(
            "spec fails propert{} {}",
            if failed.len() == 1 { "y" } else { "ies" },
            failed.join(", ")
        )))
    }
}

/// Composes `inner: A -> B` with `outer: B -> C`.
fn compose(inner: &[usize], outer: &[usize]) -> Vec<usize> {
    inner.iter().map(|&b| outer[b]).collect()
}

/// An upward walk from `start` to `to_level` through property-v witnesses,
/// taking the least admissible child at each step. Returns the keys
/// (starting with `start`) and the composed embedding `X_start -> X_top`.
fn refining_walk(spec: &FractalFamilySpec, start: SignString, to_level: usize) -> Option<(Vec<SignString>, Vec<usize>)> {
    let size = spec.member(&start)?.carrier.len();
    let mut keys = vec![start];
    let mut embedding: Vec<usize> = (0..size).collect();
    let mut current = start;
    while current.level() < to_level {
        let link = spec
            .child_links(&current)
            .into_iter()
            .find(|l| refines(spec, l))?;
        embedding = compose(&embedding, &link.embedding);
        current = link.child;
        keys.push(current);
    }
    Some((keys, embedding))
}

/// A chain `j0, j1, .., jN` with `T_0 ⊆ T_1 ⊆ .. ⊆ T_N`, built by repeatedly
/// applying property v from `j0`.
pub fn chain_topologies(spec: &FractalFamilySpec, j0: SignString) -> Result<Vec<SignString>> {
    if j0.level() != 0 || spec.member(&j0).is_none() {
        return Err(Error::input(format!("{j0} is not a level-0 key of the spec")));
    }
    require_valid(spec)?;
    let (keys, _) = refining_walk(spec, j0, spec.max_level())
        .ok_or_else(|| Error::Precondition(format!("no refining chain from {j0}")))?;
    for pair in keys.windows(2) {
        let link = spec
            .child_links(&pair[0])
            .into_iter()
            .find(|l| l.child == pair[1])
            .expect("walk follows links");
        let parent = &spec.member(&pair[0]).expect("key").topology;
        let child = &spec.member(&pair[1]).expect("key").topology;
        let coarser = pushforward_gap(parent, &link.embedding, child).is_none();
        if !coarser {
            return Err(Error::Precondition(format!("{} does not refine {}", pair[1], pair[0])));
        }
    }
    Ok(keys)
}

/// The unique descending chain below a key, with the composed embedding
/// `X_0 -> X_top`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetChain {
    /// `j_{N-1}, .., j_0`.
    pub keys: Vec<SignString>,
    pub embedding: Vec<usize>,
}

/// Follows the declared parent links down from `top` to level 0.
pub fn chain_sets(spec: &FractalFamilySpec, top: SignString) -> Result<SetChain> {
    descend(spec, top, 0)
}

fn descend(spec: &FractalFamilySpec, top: SignString, to_level: usize) -> Result<SetChain> {
    let member = spec
        .member(&top)
        .ok_or_else(|| Error::input(format!("{top} is not a key of the spec")))?;
    let mut keys = Vec::new();
    // embedding of the current bottom carrier into the top carrier
    let mut embedding: Vec<usize> = (0..member.carrier.len()).collect();
    let mut current = top;
    while current.level() > to_level {
        let links = spec.parent_links(&current);
        let link = match links.as_slice() {
            [link] => *link,
            [] => {
                return Err(Error::Precondition(format!(
                    "{current} at level {} has no parent link",
                    current.level()
                )))
            }
            _ => {
                return Err(Error::Precondition(format!(
                    "{current} at level {} has several parent links",
                    current.level()
                )))
            }
        };
        embedding = compose(&link.embedding, &embedding);
        current = link.parent;
        keys.push(current);
    }
    Ok(SetChain { keys, embedding })
}

/// Result of [`induced_formula_check`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormulaReport {
    pub holds: bool,
    pub witness: Option<String>,
}

impl FormulaReport {
    fn ok() -> Self {
        Self {
            holds: true,
            witness: None,
        }
    }

    fn fail(w: String) -> Self {
        Self {
            holds: false,
            witness: Some(w),
        }
    }
}

/// Checks, for every key `j_n` at level `n`, that the level-`n` topology is
/// recovered from level `i` by intersecting with the nested carriers.
///
/// For `i > n` the chain upward is the property-v walk; for `i < n` it is
/// the unique chain of parents, and the formula then recovers `T_i` from
/// `T_n`. Equality is exact set-system equality in the lower space's
/// coordinates.
pub fn induced_formula_check(spec: &FractalFamilySpec, n: usize, i: usize) -> Result<FormulaReport> {
    let top = spec.max_level();
    if n > top || i > top {
        return Err(Error::input(format!(
            "levels ({n}, {i}) out of range 0..={top}"
        )));
    }
    if n == i {
        return Ok(FormulaReport::ok());
    }
    for key in spec.keys(n) {
        if i > n {
            let Some((keys, embedding)) = refining_walk(spec, key, i) else {
                return Ok(FormulaReport::fail(format!(
                    "{key}: no refining chain up to level {i}"
                )));
            };
            let lower = &spec.member(&key).expect("key").topology;
            let upper = &spec.member(keys.last().expect("nonempty")).expect("key").topology;
            if let Some(w) = first_difference(lower, &pull_back(upper, &embedding)) {
                return Ok(FormulaReport::fail(format!(
                    "{key} via {}: open {} breaks the identity",
                    keys.last().expect("nonempty"),
                    set_literal(w)
                )));
            }
        } else {
            let chain = match descend(spec, key, i) {
                Ok(c) => c,
                Err(e) => return Ok(FormulaReport::fail(format!("{key}: {e}"))),
            };
            let bottom = chain.keys.last().expect("i < n");
            let lower = &spec.member(bottom).expect("key").topology;
            let upper = &spec.member(&key).expect("key").topology;
            if let Some(w) = first_difference(lower, &pull_back(upper, &chain.embedding)) {
                return Ok(FormulaReport::fail(format!(
                    "{bottom} under {key}: open {} breaks the identity",
                    set_literal(w)
                )));
            }
        }
    }
    Ok(FormulaReport::ok())
}

/// Level-0 topology reported as the weakest one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakestTopology {
    pub key: SignString,
    pub topology: SetSystem,
    /// Whether its opens, pushed through the composed embeddings, are open
    /// in every descendant reachable by parent links.
    pub verified: bool,
}

/// Picks the lexicographically least level-0 key and checks that its
/// topology is coarser than every topology on every chain through it.
pub fn weakest_topology(spec: &FractalFamilySpec) -> WeakestTopology {
    let root = spec.level(0).next().expect("level 0 is nonempty");
    let mut verified = true;
    let size = root.carrier.len();
    let mut frontier: Vec<(SignString, Vec<usize>)> = vec![(root.key, (0..size).collect())];
    while let Some((key, embedding)) = frontier.pop() {
        let member = spec.member(&key).expect("key");
        if pushforward_gap(&root.topology, &embedding, &member.topology).is_some() {
            verified = false;
        }
        for link in spec.child_links(&key) {
            frontier.push((link.child, compose(&embedding, &link.embedding)));
        }
    }
    WeakestTopology {
        key: root.key,
        topology: root.topology.clone(),
        verified,
    }
}

/// Single-fault mutations of a valid spec, each aimed at one property.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    /// Keep only the `+` child of every key below the top level.
    ShrinkTopLevel,
    /// Drop the whole-carrier open from one top-level member.
    BreakTopology,
    /// Add extra opens to one top-level member so it is no longer
    /// homeomorphic to its siblings while still inducing its parent.
    ExtraOpens,
    /// Delete the parent link of one top-level member.
    DropParentLink,
    /// Remove the parent carrier from the opens of every top-level member.
    HideParentCarrier,
}

impl Mutation {
    pub const ALL: [Mutation; 5] = [
        Mutation::ShrinkTopLevel,
        Mutation::BreakTopology,
        Mutation::ExtraOpens,
        Mutation::DropParentLink,
        Mutation::HideParentCarrier,
    ];

    /// The property this mutation is designed to break.
    pub fn target(self) -> Property {
        match self {
            Mutation::ShrinkTopLevel => Property::I,
            Mutation::BreakTopology => Property::II,
            Mutation::ExtraOpens => Property::III,
            Mutation::DropParentLink => Property::IV,
            Mutation::HideParentCarrier => Property::V,
        }
    }

    pub fn for_property(p: Property) -> Mutation {
        Mutation::ALL
            .into_iter()
            .find(|m| m.target() == p)
            .expect("one mutation per property")
    }

    /// Applies the mutation to a spec shaped like
    /// [`FractalFamilySpec::sierpinski_doubling`] with at least two levels.
    pub fn apply(self, spec: &FractalFamilySpec) -> Result<FractalFamilySpec> {
        let top = spec.max_level();
        if top == 0 {
            return Err(Error::input("mutations need at least two levels"));
        }
        let mut out = spec.clone();
        let top_keys = out.keys(top);
        let first = top_keys[0];
        let chain_system = |m: &Member, keep: &dyn Fn(Mask) -> bool, extra: Vec<Mask>| -> Result<SetSystem> {
            let mut sets: Vec<Mask> = m.topology.sets().iter().copied().filter(|s| keep(*s)).collect();
            sets.extend(extra);
            canonicalize(&mut sets);
            SetSystem::new(m.carrier.len(), sets)
        };
        match self {
            Mutation::ShrinkTopLevel => {
                for key in top_keys.into_iter().filter(|k| k.last() == crate::sign::Sign::Minus) {
                    out.remove_member(&key);
                }
            }
            Mutation::BreakTopology => {
                let m = out.member_mut(&first).expect("key");
                let full = full_mask(m.carrier.len());
                m.topology = chain_system(m, &|s| s != full, vec![])?;
            }
            Mutation::ExtraOpens => {
                let m = out.member_mut(&first).expect("key");
                let size = m.carrier.len();
                let newest = 1 << (size - 1);
                let extra = (0..size - 1).map(|k| full_mask(k) | newest).collect();
                m.topology = chain_system(m, &|_| true, extra)?;
            }
            Mutation::DropParentLink => {
                out.links_mut().retain(|l| l.child != first);
            }
            Mutation::HideParentCarrier => {
                for key in top_keys {
                    let m = out.member_mut(&key).expect("key");
                    let parent_carrier = full_mask(m.carrier.len() - 1);
                    m.topology = chain_system(m, &|s| s != parent_carrier, vec![])?;
                }
            }
        }
        Ok(out)
    }
}

impl std::str::FromStr for Mutation {
    type Err = Error;

    /// Accepts the targeted property name (`i` .. `v`).
    fn from_str(s: &str) -> Result<Self> {
        Property::ALL
            .into_iter()
            .find(|p| p.name() == s.trim())
            .map(Mutation::for_property)
            .ok_or_else(|| Error::input(format!("unknown mutation `{s}` (use i, ii, iii, iv or v)")))
    }
}
