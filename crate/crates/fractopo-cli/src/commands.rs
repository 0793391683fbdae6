use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fractopo::diagonal::{check_diagonal_axioms, component_reports, enumerate_diagonal_opens, DEFAULT_SEED};
use fractopo::family::{
    chain_topologies, check_fractal_family, induced_formula_check, FractalFamilySpec, Mutation,
};
use fractopo::mean::{
    build_nset, identification_residual, iterated_mean_closed_form, iterated_mean_quadrature, iterated_mean_with,
    sample_generator, sample_graph, translation_residual, DeltaVector, Generator, GraphSample, MeanSpec, Method,
};
use fractopo::sign::{lambda, Sign, SignString};
use fractopo::topology::{enumerate_topologies, homeomorphism_classes, is_topology, FiniteTopology, SetSystem};
use fractopo::tree::{chart_tuple_labels, chart_tuple_size, enumerate_step, render};
use fractopo::{Error, IndexLabel, IndexedFamily};

use crate::{
    CliError, Command, FamilyCmd, GraphCmd, Grid, MeanArgs, MeanCmd, NsetCmd, Output, TopoCmd, TreeCmd, VerifyCmd,
    SEED_VAR,
};

type Res = Result<(), CliError>;

pub(crate) fn dispatch(command: Command, out: &mut Output) -> Res {
    match command {
        Command::Topo(TopoCmd::Check { file, cap }) => topo_check(&file, cap, out),
        Command::Topo(TopoCmd::Enumerate { n }) => topo_enumerate(n, out),
        Command::Family(FamilyCmd::Check { file, mutate }) => family_check(&file, mutate.as_deref(), out),
        Command::Family(FamilyCmd::Chains { file, from }) => family_chains(&file, &from, out),
        Command::Mean(MeanCmd::Eval { mean, x, tol }) => mean_eval(&mean, x, tol, out),
        Command::Graph(GraphCmd::Dump { mean, grid }) => graph_dump(&mean, &grid, out),
        Command::Nset(NsetCmd::Dump {
            gens,
            signs,
            deltas,
            method,
            grid,
        }) => nset_dump(&gens, &signs, &deltas, &method, &grid, out),
        Command::Verify(VerifyCmd::Pr1 {
            mean,
            probes,
            start,
            halvings,
        }) => verify_pr1(&mean, probes, start, halvings, out),
        Command::Verify(VerifyCmd::Translation {
            generator,
            probes,
            method,
            tol,
        }) => verify_translation(&generator, probes, &method, tol, out),
        Command::Verify(VerifyCmd::Formulas { file, n, i }) => verify_formulas(&file, n, i, out),
        Command::Tree(TreeCmd::Print { steps }) => tree_print(steps, out),
        Command::Selftest { mutate } => selftest(mutate.as_deref(), out),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

fn seed() -> Result<u64, CliError> {
    match std::env::var(SEED_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Io(format!("{SEED_VAR}={v} is not a decimal integer"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn load_family(path: &Path) -> Result<FractalFamilySpec, CliError> {
    Ok(FractalFamilySpec::parse(&read(path)?)?)
}

fn topo_check(path: &Path, cap: u128, out: &mut Output) -> Res {
    let text = read(path)?;
    let first = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .find(|l| !l.is_empty())
        .unwrap_or("");
    if first.starts_with("labels") {
        let family = IndexedFamily::parse(&text)?;
        let seed = seed()?;
        let report = check_diagonal_axioms(&family, cap, seed);
        for (label, ok) in component_reports(&family) {
            out.line(format!("component {label}: {}", if ok { "topology" } else { "not a topology" }));
        }
        out.line(format!("diagonal: {report}"));
        out.pair("kind", "family");
        out.pair("labels", family.labels().len());
        out.pair("product_size", family.product_size());
        out.pair("valid", report.valid);
        if !report.valid {
            out.fail();
        }
        return Ok(());
    }
    let mut checked = 0;
    let mut invalid = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let system: SetSystem = line.parse().map_err(|e| match e {
            Error::Parse { message, .. } => Error::Parse { line: i + 1, message },
            other => other,
        })?;
        let report = is_topology(&system);
        checked += 1;
        match report.violation {
            None => out.line(format!("line {}: topology with {} opens", i + 1, system.len())),
            Some(v) => {
                invalid += 1;
                out.line(format!("line {}: not a topology: {v}", i + 1));
            }
        }
    }
    if checked == 0 {
        return Err(Error::Input(format!("{} holds no topology literal", path.display())).into());
    }
    out.pair("kind", "literals");
    out.pair("checked", checked);
    out.pair("invalid", invalid);
    if invalid > 0 {
        out.fail();
    }
    Ok(())
}

fn topo_enumerate(n: usize, out: &mut Output) -> Res {
    let all = enumerate_topologies(n)?;
    let classes = homeomorphism_classes(&all)?;
    out.line(format!("{} labeled topologies on {n} points, {} up to homeomorphism", all.len(), classes.len()));
    for class in &classes {
        out.line(format!("  {:>3} x {}", class.len(), all[class[0]]));
    }
    out.pair("topologies", all.len());
    out.pair("classes", classes.len());
    Ok(())
}

fn family_check(path: &Path, mutate: Option<&str>, out: &mut Output) -> Res {
    let mut spec = load_family(path)?;
    if let Some(m) = mutate {
        let m: Mutation = m.parse()?;
        spec = m.apply(&spec)?;
        out.line(format!("applied mutation {m:?}"));
    }
    let report = check_fractal_family(&spec)?;
    out.text.push_str(&report.to_string());
    for o in &report.outcomes {
        out.pair(&format!("property_{}", o.property.name()), if o.passed { "pass" } else { "fail" });
    }
    if !report.all_passed() {
        let failed: Vec<&str> = report.failed().into_iter().map(|p| p.name()).collect();
        out.line(format!("failed: {}", failed.join(", ")));
        out.fail();
    }
    Ok(())
}

fn family_chains(path: &Path, from: &str, out: &mut Output) -> Res {
    let spec = load_family(path)?;
    let j0: SignString = from.parse()?;
    let chain = chain_topologies(&spec, j0)?;
    let keys: Vec<String> = chain.iter().map(|k| k.to_string()).collect();
    out.line(keys.join(" -> "));
    for k in &chain {
        out.line(format!("  {k}: {}", spec.member(k).expect("chain key").topology));
    }
    out.pair("chain", keys.join(","));
    Ok(())
}

fn method(s: &str) -> Result<Method, CliError> {
    Ok(s.parse()?)
}

fn generator(s: &str) -> Result<Generator, CliError> {
    Ok(s.parse()?)
}

/// `None` when neither signs nor deltas were given.
fn spec_of(args: &MeanArgs) -> Result<Option<MeanSpec>, CliError> {
    let g = generator(&args.generator)?;
    match (&args.signs, &args.deltas) {
        (None, None) => Ok(None),
        (Some(s), Some(d)) => Ok(Some(MeanSpec::new(g, s.parse()?, d.parse()?)?)),
        _ => Err(Error::Input("--signs and --deltas go together".into()).into()),
    }
}

fn required_spec(args: &MeanArgs) -> Result<MeanSpec, CliError> {
    spec_of(args)?.ok_or_else(|| Error::Input("--signs and --deltas are required".into()).into())
}

fn mean_eval(args: &MeanArgs, x: f64, tol: f64, out: &mut Output) -> Res {
    let m = method(&args.method)?;
    match spec_of(args)? {
        None => {
            let g = generator(&args.generator)?;
            let v = g.eval(x)?;
            out.line(v.to_string());
            out.pair("value", v);
            out.pair("method", "direct");
        }
        Some(spec) => {
            let e = iterated_mean_with(&spec, x, m, tol)?;
            out.line(e.value.to_string());
            out.pair("value", e.value);
            out.pair("method", e.method);
            out.pair("evaluations", e.evaluations);
        }
    }
    Ok(())
}

fn write_csv(grid: &Grid, out: &mut Output, write: impl Fn(&mut Vec<u8>) -> std::io::Result<()>) -> Res {
    let mut buf = Vec::new();
    write(&mut buf).map_err(|e| CliError::Io(e.to_string()))?;
    match &grid.out {
        Some(path) => {
            fs::write(path, &buf).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
            out.line(format!("wrote {}", path.display()));
            out.pair("out", path.display());
        }
        None => out.text.push_str(&String::from_utf8_lossy(&buf)),
    }
    Ok(())
}

fn describe_sample(s: &GraphSample, out: &mut Output) {
    out.pair("points", s.points.len());
    out.pair("from", s.interval.0);
    out.pair("to", s.interval.1);
    out.pair("shrunk", s.shrunk());
    out.pair("method", s.method);
    out.pair("evaluations", s.evaluations);
}

fn graph_dump(args: &MeanArgs, grid: &Grid, out: &mut Output) -> Res {
    let m = method(&args.method)?;
    let sample = match spec_of(args)? {
        None => sample_generator(&generator(&args.generator)?, (grid.from, grid.to), grid.points)?,
        Some(spec) => sample_graph(&spec, (grid.from, grid.to), grid.points, m)?,
    };
    if grid.out.is_some() && sample.shrunk() {
        out.line(format!(
            "interval shrunk to [{}, {}] so every window stays in the domain",
            sample.interval.0, sample.interval.1
        ));
    }
    write_csv(grid, out, |buf| sample.write_csv(buf))?;
    describe_sample(&sample, out);
    Ok(())
}

fn nset_dump(gens: &str, signs: &str, deltas: &str, m: &str, grid: &Grid, out: &mut Output) -> Res {
    let gens = gens.split(',').map(generator).collect::<Result<Vec<_>, _>>()?;
    let [a, b, c] = gens.as_slice() else {
        return Err(Error::Input(format!("--gens needs three generators, got {}", gens.len())).into());
    };
    let deltas: DeltaVector = deltas.parse()?;
    let nset = build_nset([a, b, c], signs.parse()?, &deltas, (grid.from, grid.to), grid.points, method(m)?)?;
    write_csv(grid, out, |buf| nset.write_csv(buf))?;
    describe_sample(&nset.graphs[0], out);
    let tags: Vec<String> = nset.tags.iter().map(|t| t.to_string()).collect();
    out.pair("tags", tags.join(","));
    Ok(())
}

fn verify_pr1(args: &MeanArgs, probes: usize, start: f64, halvings: u32, out: &mut Output) -> Res {
    let spec = required_spec(args)?;
    let m = method(&args.method)?;
    if probes == 0 {
        return Err(Error::Input("at least one probe is needed".into()).into());
    }
    let widest = spec.extended(Sign::Plus, start)?;
    let (lo, hi) = widest
        .evaluable_range()
        .ok_or_else(|| Error::Domain("no probe point keeps every window in the domain".into()))?;
    let xs: Vec<f64> = (0..probes)
        .map(|i| lo + (hi - lo) * (i as f64 + 0.5) / probes as f64)
        .collect();
    let mut zero_ok = true;
    for &x in &xs {
        if identification_residual(&spec, x, 0.0, Sign::Plus, m)? != 0.0 {
            zero_ok = false;
        }
    }
    out.line(format!("δ = 0: residual {} at all {probes} probes", if zero_ok { "exactly 0" } else { "NOT 0" }));
    let mut series = Vec::new();
    for j in 0..=halvings {
        let d = start * 0.5f64.powi(j as i32);
        let mut total = 0.0;
        for &x in &xs {
            total += identification_residual(&spec, x, d, Sign::Plus, m)?;
        }
        let avg = total / probes as f64;
        out.line(format!("j={j:<2} δ={d:.6e} mean residual {avg:.6e}"));
        series.push(avg);
    }
    let first = series[0];
    let last = *series.last().expect("nonempty");
    let ratio = if last > 0.0 { first / last } else { f64::INFINITY };
    let ok = zero_ok && ratio >= 10.0;
    out.line(format!("decay {ratio:.1}x: {}", if ok { "pass" } else { "FAIL" }));
    out.pair("zero_exact", zero_ok);
    out.pair("first", first);
    out.pair("last", last);
    out.pair("ratio", ratio);
    out.pair("passed", ok);
    if !ok {
        out.fail();
    }
    Ok(())
}

fn verify_translation(gen: &str, probes: usize, m: &str, tol: f64, out: &mut Output) -> Res {
    let g = generator(gen)?;
    let m = method(m)?;
    let seed = seed()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = g.domain();
    let mut worst = (0.0f64, 0.0, 0.0);
    for _ in 0..probes {
        let d: f64 = rng.gen_range(0.01..0.5f64.min(0.5 * (hi - lo)));
        let x: f64 = rng.gen_range(lo..hi - d);
        let r = translation_residual(&g, x, d, m)?;
        if r >= worst.0 {
            worst = (r, x, d);
        }
    }
    let ok = worst.0 <= tol;
    out.line(format!(
        "{probes} probes (seed {seed}), max residual {:.3e} at x={} δ0={}: {}",
        worst.0,
        worst.1,
        worst.2,
        if ok { "pass" } else { "FAIL" }
    ));
    out.pair("seed", seed);
    out.pair("max_residual", worst.0);
    out.pair("passed", ok);
    if !ok {
        out.fail();
    }
    Ok(())
}

fn verify_formulas(path: &Path, n: usize, i: usize, out: &mut Output) -> Res {
    let spec = load_family(path)?;
    let r = induced_formula_check(&spec, n, i)?;
    match &r.witness {
        None => out.line(format!("levels ({n}, {i}): identity holds")),
        Some(w) => {
            out.line(format!("levels ({n}, {i}): FAIL {w}"));
            out.fail();
        }
    }
    out.pair("holds", r.holds);
    Ok(())
}

fn tree_print(steps: usize, out: &mut Output) -> Res {
    out.text.push_str(&render(steps)?);
    out.pair("steps", steps);
    out.pair("chart_size", chart_tuple_size(steps));
    Ok(())
}

/// One line of the self-test.
fn check(out: &mut Output, name: &str, ok: bool, detail: impl AsRef<str>) {
    out.line(format!("{} {name:<26} {}", if ok { "PASS" } else { "FAIL" }, detail.as_ref()));
    out.pair(&name.replace([' ', '-'], "_"), if ok { "pass" } else { "fail" });
    if !ok {
        out.fail();
    }
}

fn selftest(mutate: Option<&str>, out: &mut Output) -> Res {
    let seed = seed()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let lens: Vec<usize> = (0..=3).map(|n| lambda(n).map(|l| l.len())).collect::<Result<_, _>>()?;
    check(out, "cardinalities", lens == [2, 4, 8, 16], format!("{lens:?}"));

    let mut tree_ok = true;
    for n in 0..=10 {
        let d = enumerate_step(n)?;
        tree_ok &= d.entries.len() == 1 << n
            && d.entries.first().map(|e| e.k) == Some(1 << n)
            && d.child_labels() == lambda(n)?;
    }
    let tuple = chart_tuple_labels(1)?;
    tree_ok &= [0, 1, 2].map(chart_tuple_size) == [3, 5, 9] && tuple.len() == 5;
    check(out, "expansion tree", tree_ok, format!("steps 0..=10, ({})", tuple.join(", ")));

    let mut spec = FractalFamilySpec::sierpinski_doubling(2)?;
    if let Some(m) = mutate {
        let m: Mutation = m.parse()?;
        spec = m.apply(&spec)?;
        out.line(format!("fixture mutated: {m:?}"));
    }
    let report = check_fractal_family(&spec)?;
    let failed: Vec<&str> = report.failed().into_iter().map(|p| p.name()).collect();
    check(out, "family axioms", report.all_passed(), format!("failing: [{}]", failed.join(", ")));

    let mut formulas_ok = true;
    for n in 0..=2 {
        for i in 0..=2 {
            formulas_ok &= induced_formula_check(&spec, n, i).map(|r| r.holds).unwrap_or(false);
        }
    }
    check(out, "induced formulas", formulas_ok, "(n, i) in 0..=2");

    let all = enumerate_topologies(3)?;
    let classes = homeomorphism_classes(&all)?.len();
    check(out, "topologies on 3 points", all.len() == 29 && classes == 9, format!("{} / {classes}", all.len()));

    let s = FiniteTopology::sierpinski();
    let family = IndexedFamily::with_inferred_mode(vec![
        ("0".parse::<IndexLabel>()?, s.as_system().clone()),
        ("1".parse::<IndexLabel>()?, s.as_system().clone()),
    ])?;
    let opens = enumerate_diagonal_opens(&family, 1 << 12)?.len();
    let valid = check_diagonal_axioms(&family, 1 << 12, seed).valid;
    check(out, "diagonal topology", opens == 9 && valid, format!("{opens} opens"));

    let g = Generator::weierstrass(0.5, 13)?;
    let (mut worst_c, mut worst_q) = (0.0f64, 0.0f64);
    for k in 0..20 {
        let d: f64 = rng.gen_range(0.01..0.5);
        let x: f64 = rng.gen_range(-1.0..2.0 - d);
        worst_c = worst_c.max(translation_residual(&g, x, d, Method::ClosedForm)?);
        if k < 5 {
            worst_q = worst_q.max(translation_residual(&g, x, d, Method::Quadrature)?);
        }
    }
    check(
        out,
        "translation",
        worst_c <= 1e-12 && worst_q <= 1e-9,
        format!("{worst_c:.1e} closed, {worst_q:.1e} quadrature"),
    );

    let base = MeanSpec::new(g.clone(), "+-".parse()?, "0.1,0.05".parse()?)?;
    let zero = identification_residual(&base, 0.4, 0.0, Sign::Plus, Method::ClosedForm)?;
    let r0 = identification_residual(&base, 0.4, 1e-2, Sign::Plus, Method::ClosedForm)?;
    let r9 = identification_residual(&base, 0.4, 1e-2 / 512.0, Sign::Plus, Method::ClosedForm)?;
    check(out, "identification", zero == 0.0 && r0 >= 10.0 * r9, format!("{r0:.2e} -> {r9:.2e}"));

    let mut worst = 0.0f64;
    for _ in 0..5 {
        let n = rng.gen_range(0..=2usize);
        let signs: Vec<Sign> = (0..=n).map(|_| if rng.gen_bool(0.5) { Sign::Plus } else { Sign::Minus }).collect();
        let mut deltas = vec![rng.gen_range(0.01..0.5)];
        for _ in 0..n {
            let last: f64 = *deltas.last().expect("nonempty");
            deltas.push(last * rng.gen_range(0.05..0.9));
        }
        let spec = MeanSpec::new(g.clone(), SignString::new(&signs)?, DeltaVector::new(deltas)?)?;
        let (lo, hi) = spec.evaluable_range().expect("small windows");
        let x = rng.gen_range(lo..hi);
        let closed = iterated_mean_closed_form(&spec, x)?;
        let quad = iterated_mean_quadrature(&spec, x, 1e-10)?.value;
        worst = worst.max((closed - quad).abs());
    }
    check(out, "closed form vs quadrature", worst <= 1e-8, format!("{worst:.1e}"));
    out.pair("seed", seed);
    Ok(())
}
