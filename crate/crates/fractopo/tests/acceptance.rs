//! Acceptance suite: one PASS/FAIL line per criterion, with timing.
//!
//! Run: cargo test -p fractopo --test acceptance

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fractopo::diagonal::{check_diagonal_axioms, enumerate_diagonal_opens, DEFAULT_ENUMERATION_CAP, DEFAULT_SEED};
use fractopo::family::{check_fractal_family, induced_formula_check, FractalFamilySpec, Mutation};
use fractopo::mean::{
    identification_residual, iterated_mean_closed_form, iterated_mean_quadrature, translation_residual, DeltaVector,
    Generator, MeanSpec, Method,
};
use fractopo::sign::{lambda, Sign, SignString};
use fractopo::topology::{enumerate_topologies, homeomorphism_classes, induced_topology, FiniteTopology};
use fractopo::tree::{chart_tuple_labels, chart_tuple_size, enumerate_step};
use fractopo::{IndexLabel, IndexedFamily};

const FIXTURE: &str = include_str!("../fixtures/sierpinski3.family");

struct Outcome {
    passed: bool,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Outcome {
    Outcome {
        passed: true,
        detail: detail.into(),
    }
}

fn fail(detail: impl Into<String>) -> Outcome {
    Outcome {
        passed: false,
        detail: detail.into(),
    }
}

fn cardinalities() -> Outcome {
    let lens: Vec<usize> = (0..=3).map(|n| lambda(n).unwrap().len()).collect();
    if lens == [2, 4, 8, 16] {
        pass(format!("|Λ_n| = {lens:?}"))
    } else {
        fail(format!("|Λ_n| = {lens:?}, expected [2, 4, 8, 16]"))
    }
}

fn expansion() -> Outcome {
    for n in 0..=10usize {
        let d = enumerate_step(n).unwrap();
        let ks: Vec<u32> = d.entries.iter().map(|e| e.k).collect();
        let expected: Vec<u32> = ((1u32 << n)..(1u32 << (n + 1))).collect();
        if ks != expected {
            return fail(format!("step {n}: nodes {:?}..", &ks[..ks.len().min(4)]));
        }
        if d.child_labels() != lambda(n).unwrap() {
            return fail(format!("step {n}: child labels differ from Λ_{n}"));
        }
    }
    pass("steps 0..=10: 2^n nodes in [2^n, 2^{n+1}-1], children = Λ_n")
}

fn chart_tuples() -> Outcome {
    let sizes = [0, 1, 2].map(chart_tuple_size);
    let labels = chart_tuple_labels(1).unwrap();
    let expected = ["Ω", "φ2∘φ1", "T2∘φ2∘φ1", "φ3∘T1∘φ1", "T3∘φ3∘T1∘φ1"];
    if sizes != [3, 5, 9] {
        return fail(format!("sizes {sizes:?}"));
    }
    if labels != expected {
        return fail(format!("step-1 tuple ({})", labels.join(", ")));
    }
    pass(format!("sizes {sizes:?}; step 1 = ({})", labels.join(", ")))
}

fn family_axioms() -> Outcome {
    let spec = match FractalFamilySpec::parse(FIXTURE) {
        Ok(s) => s,
        Err(e) => return fail(format!("fixture: {e}")),
    };
    let report = check_fractal_family(&spec).unwrap();
    if !report.all_passed() {
        return fail(format!("fixture fails {:?}", report.failed()));
    }
    for m in Mutation::ALL {
        let mutated = m.apply(&spec).unwrap();
        let failed = check_fractal_family(&mutated).unwrap().failed();
        if failed != [m.target()] {
            return fail(format!("{m:?} fails {failed:?}, expected only {:?}", m.target()));
        }
    }
    pass("fixture passes i-v; each mutation fails exactly its property")
}

fn formulas() -> Outcome {
    let spec = FractalFamilySpec::parse(FIXTURE).unwrap();
    for n in 0..=2 {
        for i in 0..=2 {
            let r = induced_formula_check(&spec, n, i).unwrap();
            if !r.holds {
                return fail(format!("(n, i) = ({n}, {i}): {}", r.witness.unwrap_or_default()));
            }
        }
    }
    for link in spec.links() {
        let child = FiniteTopology::try_from(spec.member(&link.child).unwrap().topology.clone()).unwrap();
        let parent = &spec.member(&link.parent).unwrap().topology;
        let induced = induced_topology(&child, &link.embedding).unwrap();
        if induced.as_system() != parent {
            return fail(format!("{} -> {}: induced {induced}", link.child, link.parent));
        }
    }
    pass(format!("9 (n, i) pairs and {} level-to-level links", spec.links().len()))
}

/// Independent count: every family of subsets of a 3-point set closed
/// under union and intersection, containing ∅ and the whole set, then
/// grouped under the 6 point permutations.
fn topology_oracle() -> Outcome {
    let mut oracle: Vec<u8> = Vec::new();
    for family in 0u16..256 {
        let family = family as u8;
        let has = |s: u32| family >> s & 1 == 1;
        if !has(0) || !has(7) {
            continue;
        }
        let closed = (0..8).all(|a| (0..8).all(|b| !(has(a) && has(b)) || (has(a | b) && has(a & b))));
        if closed {
            oracle.push(family);
        }
    }
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let permute = |family: u8, p: &[usize; 3]| -> u8 {
        (0..8u32)
            .filter(|s| family >> s & 1 == 1)
            .map(|s| (0..3).filter(|i| s >> i & 1 == 1).fold(0u32, |m, i| m | 1 << p[i]))
            .fold(0u8, |f, s| f | 1 << s)
    };
    let mut orbits: Vec<u8> = oracle
        .iter()
        .map(|&f| perms.iter().map(|p| permute(f, p)).min().unwrap())
        .collect();
    orbits.sort_unstable();
    orbits.dedup();

    let library = enumerate_topologies(3).unwrap();
    let classes = homeomorphism_classes(&library).unwrap();
    let mut lib_families: Vec<u8> = library
        .iter()
        .map(|t| t.opens().iter().fold(0u8, |f, o| f | 1 << o))
        .collect();
    lib_families.sort_unstable();
    oracle.sort_unstable();
    let detail = format!(
        "oracle {} / {}, library {} / {}",
        oracle.len(),
        orbits.len(),
        library.len(),
        classes.len()
    );
    if oracle.len() == 29 && orbits.len() == 9 && lib_families == oracle && classes.len() == 9 {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn translation() -> Outcome {
    let g = Generator::weierstrass(0.5, 13).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let (mut worst_q, mut worst_c) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let d: f64 = rng.gen_range(0.01..0.5);
        let x: f64 = rng.gen_range(-1.0..2.0 - d);
        worst_q = worst_q.max(translation_residual(&g, x, d, Method::Quadrature).unwrap());
        worst_c = worst_c.max(translation_residual(&g, x, d, Method::ClosedForm).unwrap());
    }
    let detail = format!("max residual {worst_q:.2e} (quadrature), {worst_c:.2e} (closed form)");
    if worst_q <= 1e-9 && worst_c <= 1e-12 {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn identification() -> Outcome {
    let g = Generator::weierstrass(0.5, 13).unwrap();
    let spec = MeanSpec::new(g, "+-".parse().unwrap(), DeltaVector::new(vec![0.1, 0.05]).unwrap()).unwrap();
    let probes: Vec<f64> = (0..20).map(|i| -0.8 + 2.5 * i as f64 / 19.0).collect();
    for &x in &probes {
        let r = identification_residual(&spec, x, 0.0, Sign::Plus, Method::ClosedForm).unwrap();
        if r != 0.0 {
            return fail(format!("residual {r:e} at δ = 0, x = {x}"));
        }
    }
    let average = |j: i32| -> f64 {
        let d = 2f64.powi(-j) * 1e-2;
        probes
            .iter()
            .map(|&x| identification_residual(&spec, x, d, Sign::Plus, Method::ClosedForm).unwrap())
            .sum::<f64>()
            / probes.len() as f64
    };
    let series: Vec<f64> = (0..=9).map(average).collect();
    let ratio = series[0] / series[9];
    let detail = format!("exact 0 at δ = 0; mean residual {:.2e} -> {:.2e} ({ratio:.0}x)", series[0], series[9]);
    if ratio >= 10.0 {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn random_spec(rng: &mut ChaCha8Rng, g: &Generator) -> (MeanSpec, f64) {
    let n = rng.gen_range(0..=2usize);
    let signs: Vec<Sign> = (0..=n)
        .map(|_| if rng.gen_bool(0.5) { Sign::Plus } else { Sign::Minus })
        .collect();
    let mut deltas = vec![rng.gen_range(0.01..0.5)];
    for _ in 0..n {
        let last = *deltas.last().unwrap();
        deltas.push(last * rng.gen_range(0.05..0.9));
    }
    let spec = MeanSpec::new(
        g.clone(),
        SignString::new(&signs).unwrap(),
        DeltaVector::new(deltas).unwrap(),
    )
    .unwrap();
    let (lo, hi) = spec.evaluable_range().unwrap();
    let x = rng.gen_range(lo..hi);
    (spec, x)
}

fn closed_vs_quadrature() -> Outcome {
    let g = Generator::weierstrass(0.5, 13).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED ^ 1);
    let mut worst = (0.0f64, String::new());
    for _ in 0..100 {
        let (spec, x) = random_spec(&mut rng, &g);
        let closed = iterated_mean_closed_form(&spec, x).unwrap();
        let quad = iterated_mean_quadrature(&spec, x, 1e-10).unwrap().value;
        let diff = (closed - quad).abs();
        if diff > worst.0 {
            worst = (diff, format!("{} {} at x = {x}", spec.signs, spec.deltas));
        }
    }
    let detail = format!("max |closed - quadrature| = {:.2e} ({})", worst.0, worst.1);
    if worst.0 <= 1e-8 {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn diagonal() -> Outcome {
    let s = FiniteTopology::sierpinski();
    let family = IndexedFamily::with_inferred_mode(vec![
        ("0".parse::<IndexLabel>().unwrap(), s.as_system().clone()),
        ("1".parse::<IndexLabel>().unwrap(), s.as_system().clone()),
    ])
    .unwrap();
    let opens = enumerate_diagonal_opens(&family, DEFAULT_ENUMERATION_CAP).unwrap();
    let report = check_diagonal_axioms(&family, DEFAULT_ENUMERATION_CAP, DEFAULT_SEED);
    let detail = format!("{} opens; {report}", opens.len());
    if opens.len() == 9 && report.valid {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, Duration, fn() -> Outcome); 10] = [
        ("cardinalities", Duration::from_secs(1), cardinalities),
        ("expansion structure", Duration::from_secs(1), expansion),
        ("chart tuples", Duration::from_secs(1), chart_tuples),
        ("fractal-family axioms", Duration::from_secs(10), family_axioms),
        ("induced-topology formulas", Duration::from_secs(10), formulas),
        ("finite-topology oracle", Duration::from_secs(30), topology_oracle),
        ("translation identity", Duration::from_secs(30), translation),
        ("identification property", Duration::from_secs(60), identification),
        ("closed form vs quadrature", Duration::from_secs(120), closed_vs_quadrature),
        ("diagonal topology", Duration::from_secs(1), diagonal),
    ];
    let mut failures = 0;
    for (name, budget, check) in criteria {
        let start = Instant::now();
        let mut outcome = check();
        let elapsed = start.elapsed();
        if elapsed > budget {
            outcome.passed = false;
            outcome.detail = format!("{} [over budget {budget:?}]", outcome.detail);
        }
        let tag = if outcome.passed { "PASS" } else { "FAIL" };
        println!("{tag} {name:<28} {:>9.3}s  {}", elapsed.as_secs_f64(), outcome.detail);
        if !outcome.passed {
            failures += 1;
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
