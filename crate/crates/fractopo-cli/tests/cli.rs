use std::fs;

use fractopo::mean::{iterated_mean_closed_form, MeanSpec};
use fractopo::Generator;
use fractopo_cli::{run, CommandResult, EXIT_CAPACITY, EXIT_FAILED, EXIT_INPUT, EXIT_OK};

const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../fractopo/fixtures/sierpinski3.family");

fn cli(args: &[&str]) -> CommandResult {
    run(std::iter::once("fractopo").chain(args.iter().copied()))
}

fn porcelain(r: &CommandResult, key: &str) -> String {
    r.porcelain
        .as_deref()
        .expect("porcelain requested")
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in {:?}", r.porcelain))
        .to_string()
}

#[test]
fn tree_print_first_step() {
    let r = cli(&["tree", "print", "--steps", "0"]);
    assert_eq!(r.exit_code, EXIT_OK);
    assert!(r.report.contains("(Ω, φ1, T1∘φ1)"), "{}", r.report);
    assert!(r.porcelain.is_none());
}

#[test]
fn mutated_family_names_the_property() {
    let r = cli(&["family", "check", FIXTURE]);
    assert_eq!(r.exit_code, EXIT_OK, "{}", r.report);
    let r = cli(&["family", "check", FIXTURE, "--mutate", "iii", "--porcelain"]);
    assert_eq!(r.exit_code, EXIT_FAILED);
    assert!(r.report.contains("failed: iii"), "{}", r.report);
    assert_eq!(porcelain(&r, "property_iii"), "fail");
    assert_eq!(porcelain(&r, "property_iv"), "pass");
}

#[test]
fn mutated_file_on_disk() {
    let spec = fractopo::FractalFamilySpec::parse(&fs::read_to_string(FIXTURE).unwrap()).unwrap();
    let broken = fractopo::Mutation::HideParentCarrier.apply(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.family");
    fs::write(&path, broken.to_string()).unwrap();
    let r = cli(&["family", "check", path.to_str().unwrap()]);
    assert_eq!(r.exit_code, EXIT_FAILED);
    assert!(r.report.contains("failed: v"), "{}", r.report);
}

#[test]
fn mean_eval_matches_library() {
    let spec = MeanSpec::new(Generator::weierstrass(0.5, 13).unwrap(), "+".parse().unwrap(), "0.2".parse().unwrap())
        .unwrap();
    let expected = iterated_mean_closed_form(&spec, 0.0).unwrap();
    let args = ["mean", "eval", "--gen", "weierstrass:0.5:13", "--signs", "+", "--deltas", "0.2", "--x", "0"];
    let r = cli(&[&args[..], &["--porcelain"]].concat());
    assert_eq!(r.exit_code, EXIT_OK);
    assert_eq!(porcelain(&r, "value").parse::<f64>().unwrap(), expected);
    assert_eq!(porcelain(&r, "method"), "closed-form");
    let q = cli(&[&args[..], &["--method", "quadrature"]].concat());
    let v: f64 = q.report.trim().parse().unwrap();
    assert!((v - expected).abs() < 1e-8, "{v} vs {expected}");
}

#[test]
fn exit_codes() {
    assert_eq!(cli(&["frobnicate"]).exit_code, EXIT_INPUT);
    assert_eq!(cli(&["--help"]).exit_code, EXIT_OK);
    assert_eq!(cli(&["mean", "eval", "--gen", "weierstrass:0.5:4", "--x", "0"]).exit_code, EXIT_INPUT);
    assert_eq!(cli(&["family", "check", "/nonexistent/file"]).exit_code, EXIT_INPUT);
    let r = cli(&["tree", "print", "--steps", "11", "--porcelain"]);
    assert_eq!(r.exit_code, EXIT_CAPACITY);
    assert_eq!(porcelain(&r, "error"), "capacity");
    assert_eq!(porcelain(&r, "exit"), "3");
}

#[test]
fn selftest_and_mutation() {
    let r = cli(&["selftest"]);
    assert_eq!(r.exit_code, EXIT_OK, "{}", r.report);
    assert!(!r.report.contains("FAIL"));
    for m in ["i", "ii", "iii", "iv", "v"] {
        let r = cli(&["selftest", "--mutate", m]);
        assert_eq!(r.exit_code, EXIT_FAILED, "mutation {m}");
        assert!(r.report.contains("FAIL family axioms"), "{}", r.report);
    }
}

#[test]
fn dumps_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let dump = |name: &str| {
        let path = dir.path().join(name);
        let r = cli(&[
            "nset", "dump", "--signs", "+-", "--deltas", "0.1,0.05", "--points", "33", "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(r.exit_code, EXIT_OK, "{}", r.report);
        fs::read(path).unwrap()
    };
    let a = dump("a.csv");
    assert_eq!(a, dump("b.csv"));
    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# tags="));
    assert_eq!(lines.next(), Some("x,y1,y2,y3"));
    assert_eq!(lines.count(), 33);

    let g1 = cli(&["graph", "dump", "--signs", "-", "--deltas", "0.3", "--points", "17"]);
    let g2 = cli(&["graph", "dump", "--signs", "-", "--deltas", "0.3", "--points", "17"]);
    assert_eq!(g1.report, g2.report);
    assert_eq!(g1.report.lines().next(), Some("x,y"));
}

#[test]
fn topology_literals_and_families() {
    let dir = tempfile::tempdir().unwrap();
    let lits = dir.path().join("t.topo");
    fs::write(&lits, "n=2; opens={},{0},{0,1}\n# broken\nn=3; opens={},{0},{1},{0,1,2}\n").unwrap();
    let r = cli(&["topo", "check", lits.to_str().unwrap(), "--porcelain"]);
    assert_eq!(r.exit_code, EXIT_FAILED);
    assert!(r.report.contains("line 3: not a topology"), "{}", r.report);
    assert_eq!(porcelain(&r, "invalid"), "1");

    let fam = dir.path().join("f.fam");
    fs::write(&fam, "labels=0,0.5,1\nn=2; opens={},{0},{0,1}\nn=2; opens={},{0,1}\nn=1; opens={},{0}\n").unwrap();
    let r = cli(&["topo", "check", fam.to_str().unwrap(), "--porcelain"]);
    assert_eq!(r.exit_code, EXIT_OK, "{}", r.report);
    assert_eq!(porcelain(&r, "product_size"), "12");

    let r = cli(&["topo", "enumerate", "--n", "3", "--porcelain"]);
    assert_eq!(porcelain(&r, "topologies"), "29");
    assert_eq!(porcelain(&r, "classes"), "9");
}

#[test]
fn verifications() {
    let r = cli(&["verify", "pr1", "--signs", "+-", "--deltas", "0.1,0.05", "--porcelain"]);
    assert_eq!(r.exit_code, EXIT_OK, "{}", r.report);
    assert_eq!(porcelain(&r, "zero_exact"), "true");
    assert!(porcelain(&r, "ratio").parse::<f64>().unwrap() >= 10.0);

    let r = cli(&["verify", "translation", "--probes", "10"]);
    assert_eq!(r.exit_code, EXIT_OK, "{}", r.report);
    let r = cli(&["verify", "translation", "--gen", "cos:1:0.37", "--probes", "10", "--tol", "0"]);
    assert_eq!(r.exit_code, EXIT_FAILED);

    let r = cli(&["verify", "formulas", FIXTURE, "--n", "2", "--i", "0"]);
    assert_eq!(r.exit_code, EXIT_OK, "{}", r.report);
    let r = cli(&["family", "chains", FIXTURE, "--from", "-"]);
    assert_eq!(r.report.lines().next(), Some("- -> -+ -> -++"));
}
