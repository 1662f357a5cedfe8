use proptest::prelude::*;

use stratlab::field::{Dilated, Field};
use stratlab::hcalc::{check_divergence_identity, check_gradient_identity, euclidean_gradient};
use stratlab::testfuncs::{extremizer_h1, random_field, ExtremizerFamily, FamilyKind};
use stratlab::{
    euler_derivative, horizontal_gradient, DiffMode, GroupDescription, ScalarField, StratifiedGroup,
};

const GROUPS: [&str; 5] = [
    "euclidean2",
    "euclidean3",
    "heisenberg1",
    "heisenberg2",
    "h1xr",
];

fn group() -> impl Strategy<Value = StratifiedGroup> {
    prop::sample::select(GROUPS.to_vec()).prop_map(|n| StratifiedGroup::builtin(n).unwrap())
}

fn point_for(g: &StratifiedGroup, raw: &[f64]) -> Vec<f64> {
    let mut x: Vec<f64> = raw.iter().take(g.dim()).copied().collect();
    // keep away from the tube
    if x[..g.first_stratum_dim()]
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        < 0.04
    {
        x[0] += 0.5;
    }
    x
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dilations_compose(g in group(), l in 0.1f64..5.0, m in 0.1f64..5.0,
                         raw in prop::collection::vec(-2.0f64..2.0, 5)) {
        let x = point_for(&g, &raw);
        let a = g.dilate(l, &g.dilate(m, &x).unwrap()).unwrap();
        let b = g.dilate(l * m, &x).unwrap();
        for (ai, bi) in a.iter().zip(&b) {
            prop_assert!((ai - bi).abs() <= 1e-12 * bi.abs().max(1.0));
        }
    }

    #[test]
    fn generators_are_homogeneous_of_degree_one(g in group(), l in 0.2f64..4.0, seed in 0u64..50,
                                                raw in prop::collection::vec(-1.5f64..1.5, 5)) {
        // grad_H (f o delta_l)(x) = l (grad_H f)(delta_l x)
        let f = random_field(&g, seed, 2).unwrap();
        let x = point_for(&g, &raw);
        let fl = Dilated::new(&g, &f, l).unwrap();
        let lhs = horizontal_gradient(&g, &fl, &x, DiffMode::Analytic).unwrap();
        let rhs = horizontal_gradient(&g, &f, &g.dilate(l, &x).unwrap(), DiffMode::Analytic).unwrap();
        let scale = rhs.norm().max(1e-300) * l;
        for (a, b) in lhs.0.iter().zip(&rhs.0) {
            prop_assert!((a - l * b).abs() <= 1e-12 * scale.max(1.0));
        }
    }

    #[test]
    fn euler_operator_commutes_with_dilations(g in group(), l in 0.2f64..4.0, seed in 0u64..50,
                                              raw in prop::collection::vec(-1.5f64..1.5, 5)) {
        let f = random_field(&g, seed, 2).unwrap();
        let x = point_for(&g, &raw);
        let fl = Dilated::new(&g, &f, l).unwrap();
        let a = euler_derivative(&g, &fl, &x, DiffMode::Analytic).unwrap();
        let b = euler_derivative(&g, &f, &g.dilate(l, &x).unwrap(), DiffMode::Analytic).unwrap();
        prop_assert!((a - b).abs() <= 1e-11 * b.abs().max(1.0), "{} vs {}", a, b);
    }

    #[test]
    fn analytic_and_fd_gradients_agree(g in group(), seed in 0u64..200,
                                       raw in prop::collection::vec(-2.0f64..2.0, 5)) {
        let f = random_field(&g, seed, 3).unwrap();
        let x = point_for(&g, &raw);
        let a = euclidean_gradient(&f, &x, DiffMode::Analytic).unwrap();
        let d = euclidean_gradient(&f, &x, DiffMode::Fd).unwrap();
        for (ai, di) in a.iter().zip(&d) {
            prop_assert!((ai - di).abs() <= 1e-6, "{:?} vs {:?}", a, d);
        }
    }

    #[test]
    fn radial_identities_hold_for_any_exponent(g in group(), gamma in -3.0f64..3.0, seed in 0u64..1000) {
        let pts = stratlab::hcalc::sample_points(&g, 20, seed);
        let grad = check_gradient_identity(&g, gamma, &pts, DiffMode::Analytic).unwrap();
        let div = check_divergence_identity(&g, gamma, &pts, DiffMode::Analytic).unwrap();
        prop_assert!(grad.passes(1e-10), "{:?}", grad);
        prop_assert!(div.passes(1e-10), "{:?}", div);
    }

    #[test]
    fn extremizer_support_contract(g in group(), eps in 0.01f64..0.5, r in 2.0f64..50.0,
                                   rp in 0.5f64..20.0, taper in 1.5f64..12.0,
                                   dir in prop::collection::vec(-1.0f64..1.0, 5)) {
        let fam = ExtremizerFamily::new(FamilyKind::H1, -1.0, eps, r, rp).unwrap().with_taper(taper).unwrap();
        let f = fam.build(&g).unwrap();
        let n = g.first_stratum_dim();
        let mut x: Vec<f64> = dir.iter().take(g.dim()).copied().collect();
        let norm = x[..n].iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-3);
        let mut at = |rho: f64, t: f64| {
            for k in 0..n { x[k] = dir[k] / norm * rho; }
            for v in x[n..].iter_mut() { *v = t; }
            f.value(&x)
        };
        prop_assert_eq!(at(eps / taper * 0.99, 0.0), 0.0);
        prop_assert_eq!(at(r * taper * 1.01, 0.0), 0.0);
        let inside = (eps * r).sqrt();
        let v = at(inside, 0.0);
        prop_assert!((v - 1.0 / inside).abs() <= 1e-12 / inside);
        if g.dim() > n {
            prop_assert_eq!(at(inside, 2.0 * rp * 1.01), 0.0);
            let v = at(inside, rp * 0.99);
            prop_assert!((v - 1.0 / inside).abs() <= 1e-12 / inside);
        }
    }
}

#[test]
fn group_json_round_trip_is_bit_exact() {
    let mut groups: Vec<StratifiedGroup> = GROUPS
        .iter()
        .map(|n| StratifiedGroup::builtin(n).unwrap())
        .collect();
    groups.push(StratifiedGroup::heisenberg(3).unwrap());
    for g in groups {
        let text = g.description().to_json();
        let back = StratifiedGroup::from_description(&GroupDescription::from_json(&text).unwrap())
            .unwrap();
        assert_eq!(back.description().to_json(), text);
        assert!(back.same_structure(&g));
        let x: Vec<f64> = (0..g.dim()).map(|i| 0.3 + 0.17 * i as f64).collect();
        assert_eq!(g.frame(&x), back.frame(&x));
    }
}

#[test]
fn float_coefficients_round_trip_bit_exact() {
    let text = r#"{"name": "scaled-heisenberg", "strata": [2, 1], "coeffs": [
        {"k": 1, "l": 2, "m": 1, "monomials": [{"exponents": [0, 1, 0], "value": -0.1234567890123456789}]},
        {"k": 2, "l": 2, "m": 1, "monomials": [{"exponents": [1, 0, 0], "value": 0.7071067811865476}]}
    ]}"#;
    let g = StratifiedGroup::from_description(&GroupDescription::from_json(text).unwrap()).unwrap();
    let once = g.description().to_json();
    let twice = StratifiedGroup::from_description(&GroupDescription::from_json(&once).unwrap())
        .unwrap()
        .description()
        .to_json();
    assert_eq!(once, twice);
    let x = [0.4, -0.9, 1.3];
    let back =
        StratifiedGroup::from_description(&GroupDescription::from_json(&once).unwrap()).unwrap();
    for (a, b) in g.frame(&x).iter().zip(back.frame(&x)) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn h1_extremizer_partials_match_fd_near_seams() {
    let g = StratifiedGroup::heisenberg(1).unwrap();
    let f = extremizer_h1(&g, 0.0, 2.0, 0.1, 10.0, 2.0).unwrap();
    let taper = 10.0;
    for rho in [
        0.1 / taper * 1.3,
        0.1 * 0.999,
        0.1 * 1.001,
        10.0 * 1.01,
        10.0 * taper * 0.9,
    ] {
        for t in [0.0, 2.0 * 1.001, 3.7] {
            let x = [rho * 0.6, rho * 0.8, t];
            let a = euclidean_gradient(&f, &x, DiffMode::Analytic).unwrap();
            let d = euclidean_gradient(&f, &x, DiffMode::Fd).unwrap();
            let scale = a.iter().map(|v| v.abs()).fold(1.0, f64::max);
            for (ai, di) in a.iter().zip(&d) {
                assert!(
                    (ai - di).abs() <= 1e-6 * scale,
                    "rho={rho} t={t}: {a:?} vs {d:?}"
                );
            }
        }
    }
}

#[test]
fn cutoff_is_c2_across_seams() {
    // one-sided second differences agree at every radial seam of the profile
    let g = StratifiedGroup::euclidean(2).unwrap();
    let f = extremizer_h1(&g, 0.0, 2.0, 0.1, 10.0, 1.0).unwrap();
    let val = |rho: f64| f.value(&[rho, 0.0]);
    for seam in f.support().radial_breaks.clone() {
        let h = 1e-4 * seam;
        let left = (val(seam) - 2.0 * val(seam - h) + val(seam - 2.0 * h)) / (h * h);
        let right = (val(seam + 2.0 * h) - 2.0 * val(seam + h) + val(seam)) / (h * h);
        let scale = left.abs().max(right.abs()).max(1.0 / (seam * seam * seam));
        assert!(
            (left - right).abs() <= 1e-2 * scale,
            "seam {seam}: {left} vs {right}"
        );
    }
}
