//! Bookkeeping for the expanding diagram of local homeomorphisms.
//!
//! Step `n` has the nodes `k ∈ [2^n, 2^{n+1} − 1]`, numbered like a binary
//! heap: the root is 1 and node `k` spawns `2k` (its `+` branch) and
//! `2k + 1` (its `−` branch). Dropping the leading 1 of `k` in binary and
//! reading `0` as `+`, `1` as `−` gives the sign string the node sits on.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::sign::{Sign, SignString};

/// Largest step accepted by [`enumerate_step`].
pub const MAX_STEP: usize = 20;

/// Largest step accepted by [`chart_tuple_labels`]; the strings double in
/// count at every step.
pub const MAX_LABEL_STEP: usize = 10;

/// One node `k` of a step: the space it starts from and its two images.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepEntry {
    pub k: u32,
    /// `None` for the root at step 0.
    pub source: Option<SignString>,
    pub plus_child: SignString,
    pub minus_child: SignString,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepDiagram {
    pub n: usize,
    pub entries: Vec<StepEntry>,
}

impl StepDiagram {
    /// Child labels in node order, `+` before `−` within a node.
    pub fn child_labels(&self) -> Vec<SignString> {
        self.entries
            .iter()
            .flat_map(|e| [e.plus_child, e.minus_child])
            .collect()
    }
}

/// Step of node `k` (`floor(log2 k)`).
pub fn step_of(k: u32) -> usize {
    assert!(k > 0, "heap nodes start at 1");
    (31 - k.leading_zeros()) as usize
}

/// Sign string of node `k`; `None` for the root.
pub fn node_label(k: u32) -> Option<SignString> {
    let n = step_of(k);
    (n > 0).then(|| SignString::from_bits(n, k & ((1 << n) - 1)))
}

/// Node index carrying `label`.
pub fn node_of(label: &SignString) -> u32 {
    (1 << label.len()) | label.bits()
}

pub fn enumerate_step(n: usize) -> Result<StepDiagram> {
    if n > MAX_STEP {
        return Err(Error::capacity(format!("step {n} exceeds the cap {MAX_STEP}")));
    }
    let entries = ((1u32 << n)..(1u32 << (n + 1)))
        .map(|k| {
            let child = |sign: Sign| SignString::from_bits(n + 1, (k << 1 | u32::from(sign == Sign::Minus)) & ((1 << (n + 1)) - 1));
            StepEntry {
                k,
                source: node_label(k),
                plus_child: child(Sign::Plus),
                minus_child: child(Sign::Minus),
            }
        })
        .collect();
    Ok(StepDiagram { n, entries })
}

/// Size of a local chart at step `n`: the open set plus one map per element
/// of Λ_n, i.e. `2^{n+1} + 1`.
pub fn chart_tuple_size(n: usize) -> u64 {
    assert!(n < 63, "step too large for a u64 count");
    (1u64 << (n + 1)) + 1
}

/// The chart tuple at step `n` as composition strings, `Ω` first.
///
/// Step 0 is `(Ω, φ1, T1∘φ1)`; at step `n` the `i`-th map `m` of step
/// `n − 1` belongs to node `k = 2^n + i` and is replaced by `φk∘m` and
/// `Tk∘φk∘m`.
pub fn chart_tuple_labels(n: usize) -> Result<Vec<String>> {
    if n > MAX_LABEL_STEP {
        return Err(Error::capacity(format!(
            "step {n} exceeds the label cap {MAX_LABEL_STEP}"
        )));
    }
    let mut maps: Vec<String> = vec![String::new()];
    for step in 0..=n {
        maps = maps
            .iter()
            .enumerate()
            .flat_map(|(i, m)| {
                let k = (1usize << step) + i;
                let phi = if m.is_empty() {
                    format!("φ{k}")
                } else {
                    format!("φ{k}∘{m}")
                };
                [phi.clone(), format!("T{k}∘{phi}")]
            })
            .collect();
    }
    let mut out = Vec::with_capacity(maps.len() + 1);
    out.push("Ω".to_string());
    out.extend(maps);
    Ok(out)
}

/// Indented text rendering of steps `0..=steps`.
pub fn render(steps: usize) -> Result<String> {
    if steps > MAX_LABEL_STEP {
        return Err(Error::capacity(format!(
            "rendering is limited to {MAX_LABEL_STEP} steps"
        )));
    }
    let mut out = String::new();
    for n in 0..=steps {
        let diagram = enumerate_step(n)?;
        let _ = writeln!(
            out,
            "step({n}): k in [{}, {}], chart = {}-tuple",
            1u32 << n,
            (1u32 << (n + 1)) - 1,
            chart_tuple_size(n)
        );
        for e in &diagram.entries {
            let indent = "  ".repeat(n + 1);
            let source = e.source.map_or("M".to_string(), |s| format!("N^{s}"));
            let k = e.k;
            let _ = writeln!(out, "{indent}[k={k}] {source}");
            let _ = writeln!(out, "{indent}  --φ{k}-->     N^{}", e.plus_child);
            let _ = writeln!(out, "{indent}  --T{k}∘φ{k}--> N^{}", e.minus_child);
        }
        let _ = writeln!(out, "  chart: ({})", chart_tuple_labels(n)?.join(", "));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sign::lambda;

    fn strs(v: &[SignString]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn first_steps() {
        let d0 = enumerate_step(0).unwrap();
        assert_eq!(d0.entries.len(), 1);
        assert_eq!(d0.entries[0].k, 1);
        assert_eq!(d0.entries[0].source, None);
        assert_eq!(strs(&d0.child_labels()), ["+", "-"]);

        let d1 = enumerate_step(1).unwrap();
        let ks: Vec<u32> = d1.entries.iter().map(|e| e.k).collect();
        assert_eq!(ks, [2, 3]);
        assert_eq!(strs(&[d1.entries[0].plus_child, d1.entries[0].minus_child]), ["++", "+-"]);
        assert_eq!(strs(&[d1.entries[1].plus_child, d1.entries[1].minus_child]), ["-+", "--"]);

        let d2 = enumerate_step(2).unwrap();
        assert_eq!(d2.entries.first().unwrap().k, 4);
        assert_eq!(d2.entries.last().unwrap().k, 7);
        assert_eq!(d2.child_labels(), lambda(2).unwrap());
        assert!(enumerate_step(21).is_err());
    }

    #[test]
    fn heap_children_are_next_step_nodes() {
        for n in 0..=10 {
            for e in enumerate_step(n).unwrap().entries {
                assert_eq!(node_of(&e.plus_child), 2 * e.k);
                assert_eq!(node_of(&e.minus_child), 2 * e.k + 1);
                assert_eq!(node_label(2 * e.k), Some(e.plus_child));
            }
        }
    }

    #[test]
    fn chart_sizes_and_labels() {
        assert_eq!([0, 1, 2].map(chart_tuple_size), [3, 5, 9]);
        assert_eq!(chart_tuple_labels(0).unwrap(), ["Ω", "φ1", "T1∘φ1"]);
        assert_eq!(
            chart_tuple_labels(1).unwrap(),
            ["Ω", "φ2∘φ1", "T2∘φ2∘φ1", "φ3∘T1∘φ1", "T3∘φ3∘T1∘φ1"]
        );
        assert_eq!(chart_tuple_labels(3).unwrap().len(), 17);
        for n in 0..=6 {
            let labels = chart_tuple_labels(n).unwrap();
            assert_eq!(labels.len() as u64, chart_tuple_size(n));
            assert!(labels[1..]
                .iter()
                .all(|l| l.ends_with("∘φ1") || l == "φ1" || l.ends_with("T1∘φ1")));
        }
        assert!(chart_tuple_labels(11).is_err());
    }

    #[test]
    fn render_step_zero() {
        let text = render(0).unwrap();
        assert!(text.contains("chart: (Ω, φ1, T1∘φ1)"));
        assert!(text.contains("3-tuple"));
    }
}
