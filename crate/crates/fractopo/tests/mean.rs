use proptest::prelude::*;

use fractopo::mean::{
    build_nset, identification_residual, iterated_mean, iterated_mean_closed_form, iterated_mean_quadrature,
    iterated_mean_with, mean, sample_graph, translate, translate_triple, translation_residual, CosTerm, DeltaVector,
    Generator, MeanSpec, Method,
};
use fractopo::sign::Sign;

fn spec(g: &Generator, signs: &str, deltas: &str) -> MeanSpec {
    MeanSpec::new(g.clone(), signs.parse().unwrap(), deltas.parse().unwrap()).unwrap()
}

fn weierstrass() -> Generator {
    Generator::weierstrass(0.5, 13).unwrap()
}

#[test]
fn tabulated_identity_has_mean_half_delta() {
    let g = Generator::tabulated(vec![(-1.0, -1.0), (2.0, 2.0)]).unwrap();
    let v = mean(&g, 0.0, Sign::Plus, 0.1).unwrap();
    assert!((v - 0.05).abs() < 1e-12, "{v}");
}

#[test]
fn takagi_mean_over_half_unit() {
    // every s(2^k t) averages to 1/4 over [0, 1/2]
    let g = Generator::takagi(0.5).unwrap();
    let s = MeanSpec::new(
        g,
        "+".parse().unwrap(),
        DeltaVector::new(vec![0.5]).unwrap(),
    )
    .unwrap();
    let q = iterated_mean_quadrature(&s, 0.0, 1e-12).unwrap();
    let k = fractopo::mean::generator::truncation_order(0.5) as i32;
    let exact = 0.25 * (1.0 - 0.5f64.powi(k + 1)) / 0.5;
    assert!((q.value - exact).abs() < 1e-11, "{} vs {exact}", q.value);
}

#[test]
fn polynomial_translation_is_exact_on_dyadic_inputs() {
    let g = Generator::polynomial(vec![0.5, -1.0, 3.0, 0.25], -1.0, 2.0).unwrap();
    for (x, d) in [(0.0, 0.5), (0.25, 0.125), (-0.75, 0.0625), (1.5, 0.25)] {
        assert_eq!(translation_residual(&g, x, d, Method::ClosedForm).unwrap(), 0.0);
    }
}

#[test]
fn translation_via_quadrature() {
    let g = weierstrass();
    for (x, d) in [(0.3, 0.1), (-0.9, 0.45), (1.1, 0.02)] {
        assert!(translation_residual(&g, x, d, Method::Quadrature).unwrap() <= 1e-9);
    }
}

#[test]
fn translation_moves_only_abscissae() {
    assert_eq!(translate((0.0, 5.0), 0.1), (0.1, 5.0));
    let p = (0.375, -2.0);
    let back = translate(translate(p, 0.25), -0.25);
    assert_eq!(back, p);
    let t = translate_triple([(0.0, 1.0), (0.0, 2.0), (0.0, 3.0)], 0.5);
    assert_eq!(t.map(|p| p.1), [1.0, 2.0, 3.0]);
}

#[test]
fn identification_respects_the_taylor_bound_for_t() {
    // |g'| = 1, so adding a level of width δ moves the mean by at most δ/2
    let g = Generator::polynomial(vec![0.0, 1.0], -1.0, 2.0).unwrap();
    let s = spec(&g, "+-", "0.2,0.1");
    for j in 0..10 {
        let d = 0.05 * 0.5f64.powi(j);
        for x in [-0.5, 0.0, 0.7, 1.2] {
            for sign in [Sign::Plus, Sign::Minus] {
                let r = identification_residual(&s, x, d, sign, Method::ClosedForm).unwrap();
                assert!(r <= d / 2.0 + 1e-15, "{r} > {}", d / 2.0);
                // for g = t the shift is exactly δ/2
                assert!((r - d / 2.0).abs() < 1e-14);
            }
        }
    }
}

#[test]
fn identification_decays_when_halving() {
    let g = weierstrass();
    let s = spec(&g, "+-", "0.1,0.05");
    let probes: Vec<f64> = (0..20).map(|i| -0.5 + 0.1 * i as f64).collect();
    let avg: Vec<f64> = (0..=10)
        .map(|j| {
            let d = 1e-2 * 0.5f64.powi(j);
            probes
                .iter()
                .map(|&x| identification_residual(&s, x, d, Sign::Minus, Method::ClosedForm).unwrap())
                .sum::<f64>()
                / probes.len() as f64
        })
        .collect();
    assert!(avg.windows(2).all(|w| w[1] < w[0]), "{avg:?}");
    assert!(avg[10] <= 1e-3 * avg[0] * 1.1, "{avg:?}");
}

#[test]
fn samples_and_csv() {
    let g = weierstrass();
    let s = spec(&g, "+", "0.1");
    let sample = sample_graph(&s, (0.0, 1.0), 11, Method::Auto).unwrap();
    assert_eq!(sample.method, Method::ClosedForm);
    for (x, y) in &sample.points {
        assert_eq!(*y, iterated_mean(&s, *x).unwrap());
    }
    let mut buf = Vec::new();
    sample.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next(), Some("x,y"));
    for line in text.lines().skip(1) {
        let (x, y) = line.split_once(',').unwrap();
        let (x, y): (f64, f64) = (x.parse().unwrap(), y.parse().unwrap());
        // 17 significant digits round-trip exactly
        assert!(sample.points.contains(&(x, y)));
    }
}

#[test]
fn nset_of_three_generators() {
    let a = weierstrass();
    let b = Generator::takagi(0.5).unwrap();
    let c = Generator::constant(1.5, -1.0, 2.0).unwrap();
    let n = build_nset(
        [&a, &b, &c],
        "-+".parse().unwrap(),
        &"0.1,0.01".parse().unwrap(),
        (0.0, 0.2),
        5,
        Method::Auto,
    )
    .unwrap();
    assert_eq!(n.tags, vec![0.01, 0.1]);
    assert!(n.graphs[2].points.iter().all(|p| p.1 == 1.5));
    let xs = |i: usize| n.graphs[i].points.iter().map(|p| p.0).collect::<Vec<_>>();
    assert_eq!(xs(0), xs(1));
    assert_eq!(n.graphs[1].method, Method::Quadrature);
    assert_eq!(n.graphs[1].spec.as_ref().unwrap().component, Some(2));
}

fn deltas() -> impl Strategy<Value = Vec<f64>> {
    (0.01f64..0.4, prop::collection::vec(0.05f64..0.9, 0..=2)).prop_map(|(d0, ratios)| {
        let mut out = vec![d0];
        for r in ratios {
            let last = *out.last().unwrap();
            out.push(last * r);
        }
        out
    })
}

fn signs(n: usize) -> impl Strategy<Value = String> {
    prop::collection::vec(prop::bool::ANY, n).prop_map(|v| v.into_iter().map(|b| if b { '+' } else { '-' }).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn linear_in_the_generator(d in deltas(), alpha in -3.0f64..3.0, beta in -3.0f64..3.0, x in -0.3f64..1.0, seed in any::<u64>()) {
        let signs: String = (0..d.len()).map(|i| if seed >> i & 1 == 1 { '-' } else { '+' }).collect();
        let g = weierstrass();
        let h = Generator::cosines(vec![CosTerm { amplitude: 1.0, frequency: 7.0, phase: 0.3 }], -1.0, 2.0).unwrap();
        let both = Generator::combination(vec![(alpha, g.clone()), (beta, h.clone())]).unwrap();
        let dv = DeltaVector::new(d).unwrap();
        let at = |gen: &Generator| {
            let s = MeanSpec::new(gen.clone(), signs.parse().unwrap(), dv.clone()).unwrap();
            iterated_mean_closed_form(&s, x).unwrap()
        };
        prop_assert!((at(&both) - (alpha * at(&g) + beta * at(&h))).abs() < 1e-10);

        let t = Generator::takagi(0.5).unwrap();
        let p = Generator::polynomial(vec![0.0, 1.0, -0.5], -1.0, 2.0).unwrap();
        let mix = Generator::combination(vec![(alpha, t.clone()), (beta, p.clone())]).unwrap();
        let quad = |gen: &Generator| {
            let s = MeanSpec::new(gen.clone(), signs.parse().unwrap(), dv.clone()).unwrap();
            iterated_mean_quadrature(&s, x, 1e-12).unwrap().value
        };
        prop_assert!((quad(&mix) - (alpha * quad(&t) + beta * quad(&p))).abs() < 1e-10);
    }

    #[test]
    fn constants_survive_every_level(d in deltas(), c in -10.0f64..10.0, x in -0.2f64..1.0) {
        let n = d.len();
        let g = Generator::constant(c, -1.0, 2.0).unwrap();
        let s = MeanSpec::new(g, "+".repeat(n).parse().unwrap(), DeltaVector::new(d).unwrap()).unwrap();
        prop_assert_eq!(iterated_mean_closed_form(&s, x).unwrap(), c);
        let q = iterated_mean_quadrature(&s, x, 1e-12).unwrap().value;
        prop_assert!((q - c).abs() <= 1e-12 * c.abs().max(1.0));
    }

    #[test]
    fn polynomial_paths_agree(d in deltas(), x in -0.2f64..1.0, sg in signs(3)) {
        let g = Generator::polynomial(vec![1.0, -2.0, 0.5, 3.0], -1.0, 2.0).unwrap();
        let s = MeanSpec::new(g, sg[..d.len()].parse().unwrap(), DeltaVector::new(d).unwrap()).unwrap();
        let closed = iterated_mean_with(&s, x, Method::ClosedForm, 1e-12).unwrap().value;
        let quad = iterated_mean_with(&s, x, Method::Quadrature, 1e-12).unwrap().value;
        prop_assert!((closed - quad).abs() < 1e-11);
    }
}
