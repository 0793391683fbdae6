//! Sampling graphs of iterated means and writing them out.

use std::io::{self, Write};

use super::{iterated_mean_with, DeltaVector, Generator, MeanSpec, Method};
use crate::error::{Error, Result};
use crate::mean::quadrature::DEFAULT_TOLERANCE;
use crate::sign::SignString;

/// Sampled graph `{(x, F(x))}` on an equally spaced grid.
#[derive(Debug, Clone)]
pub struct GraphSample {
    /// `None` for the raw generator.
    pub spec: Option<MeanSpec>,
    pub points: Vec<(f64, f64)>,
    pub method: Method,
    /// Tolerance on each value; `None` when no quadrature was involved.
    pub tolerance: Option<f64>,
    pub evaluations: u64,
    pub requested: (f64, f64),
    /// The grid interval after shrinking to where the mean is defined.
    pub interval: (f64, f64),
}

impl GraphSample {
    pub fn shrunk(&self) -> bool {
        self.requested != self.interval
    }

    /// `x,y` header and one row per point.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "x,y")?;
        for (x, y) in &self.points {
            writeln!(out, "{},{}", num(*x), num(*y))?;
        }
        Ok(())
    }
}

/// Three graphs with shared signs and deltas, tagged `δ_n, …, δ_0`.
#[derive(Debug, Clone)]
pub struct NSetSample {
    pub graphs: [GraphSample; 3],
    pub tags: Vec<f64>,
}

impl NSetSample {
    /// `# tags=…` comment, then `x,y1,y2,y3`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let tags: Vec<String> = self.tags.iter().map(|t| num(*t)).collect();
        writeln!(out, "# tags={}", tags.join(","))?;
        writeln!(out, "x,y1,y2,y3")?;
        let [a, b, c] = &self.graphs;
        for ((p, q), r) in a.points.iter().zip(&b.points).zip(&c.points) {
            writeln!(out, "{},{},{},{}", num(p.0), num(p.1), num(q.1), num(r.1))?;
        }
        Ok(())
    }
}

/// 17 significant digits.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn grid(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    let step = (hi - lo) / (m - 1) as f64;
    (0..m)
        .map(|i| if i + 1 == m { hi } else { lo + step * i as f64 })
        .collect()
}

fn check_request(interval: (f64, f64), m: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::input(format!("need at least 2 points, got {m}")));
    }
    if !(interval.0.is_finite() && interval.1.is_finite() && interval.0 < interval.1) {
        return Err(Error::input(format!(
            "invalid interval [{}, {}]",
            interval.0, interval.1
        )));
    }
    Ok(())
}

/// Samples the raw generator.
pub fn sample_generator(g: &Generator, interval: (f64, f64), m: usize) -> Result<GraphSample> {
    check_request(interval, m)?;
    let points = grid(interval.0, interval.1, m)
        .into_iter()
        .map(|x| Ok((x, g.eval(x)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(GraphSample {
        spec: None,
        points,
        method: Method::ClosedForm,
        tolerance: None,
        evaluations: m as u64,
        requested: interval,
        interval,
    })
}

/// Samples `F^{σ}_{δ}` on `m` equally spaced points. The interval is shrunk
/// to where every nested window stays in the generator's domain.
pub fn sample_graph(spec: &MeanSpec, interval: (f64, f64), m: usize, method: Method) -> Result<GraphSample> {
    check_request(interval, m)?;
    let (lo, hi) = spec
        .evaluable_range()
        .ok_or_else(|| Error::domain("the windows are wider than the generator domain"))?;
    let shrunk = (interval.0.max(lo), interval.1.min(hi));
    if !(shrunk.0 < shrunk.1) {
        return Err(Error::domain(format!(
            "[{}, {}] has no point where the mean is defined (need x in [{lo}, {hi}])",
            interval.0, interval.1
        )));
    }
    let mut points = Vec::with_capacity(m);
    let mut evaluations = 0;
    let mut used = Method::ClosedForm;
    for x in grid(shrunk.0, shrunk.1, m) {
        let e = iterated_mean_with(spec, x, method, DEFAULT_TOLERANCE)?;
        evaluations += e.evaluations;
        used = e.method;
        points.push((x, e.value));
    }
    Ok(GraphSample {
        spec: Some(spec.clone()),
        points,
        method: used,
        tolerance: (used == Method::Quadrature).then_some(DEFAULT_TOLERANCE),
        evaluations,
        requested: interval,
        interval: shrunk,
    })
}

/// The three graphs of an N-set over a common grid.
///
/// The grid is shrunk to the intersection of the three evaluable ranges so
/// the rows line up.
pub fn build_nset(
    generators: [&Generator; 3],
    signs: SignString,
    deltas: &DeltaVector,
    interval: (f64, f64),
    m: usize,
    method: Method,
) -> Result<NSetSample> {
    let specs = generators
        .iter()
        .enumerate()
        .map(|(i, g)| MeanSpec::new((*g).clone(), signs, deltas.clone())?.with_component(i as u8 + 1))
        .collect::<Result<Vec<_>>>()?;
    let mut common = interval;
    for s in &specs {
        if let Some((lo, hi)) = s.evaluable_range() {
            common = (common.0.max(lo), common.1.min(hi));
        }
    }
    let mut graphs = Vec::with_capacity(3);
    for s in &specs {
        let mut g = sample_graph(s, common, m, method)?;
        g.requested = interval;
        graphs.push(g);
    }
    let graphs: [GraphSample; 3] = graphs.try_into().expect("three graphs");
    let tags = deltas.deltas().iter().rev().copied().collect();
    Ok(NSetSample { graphs, tags })
}
