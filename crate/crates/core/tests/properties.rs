//! Property tests for invariants that hold across random inputs.

mod common;

use paperfold::collar::{build_collar, choose_collar_height};
use paperfold::dd::Dd;
use paperfold::geometry::BoundaryPos;
use paperfold::horseshoe::{kneading, lambda_n, lambda_polynomial, uniform_rho_bar, Symbol};
use paperfold::scalar::{rat, Rational, Scalar};
use paperfold::scar::{build_scar_graph, project, scar_distance, Radius};
use paperfold::scheme::{classify_topology, scheme_validate, Classification};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

fn dd_of(r: Rational) -> Dd {
    Dd::from_i128(*r.numer()) / Dd::from_i128(*r.denom())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_plain_schemes_are_spheres_with_tree_scars(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_plain_scheme(&mut rng);
        let v = scheme_validate(&s).unwrap();
        let l = s.component_length(0);
        prop_assert!((v.total_pairing_length - l / 2.0).abs() < 1e-9);
        prop_assert_eq!(classify_topology(&s).unwrap().classification, Classification::PlainSphere);
        let g = build_scar_graph(&s).unwrap();
        prop_assert_eq!(g.injectivity_radius, Radius::Infinite);
        prop_assert!((g.total_measure - l).abs() < 1e-9);
    }

    #[test]
    fn scar_distance_is_a_pseudometric_on_the_boundary(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_plain_scheme(&mut rng);
        let g = build_scar_graph(&s).unwrap();
        let l = s.component_length(0);
        let pts: Vec<_> = (0..3)
            .map(|_| project(&g, &s, BoundaryPos::new(0, rng.gen_range(0.0..l))).unwrap())
            .collect();
        let d = |i: usize, j: usize| scar_distance(&g, pts[i], pts[j]).unwrap();
        prop_assert!(d(0, 0).abs() < 1e-12);
        prop_assert!((d(0, 1) - d(1, 0)).abs() < 1e-12);
        prop_assert!(d(0, 2) <= d(0, 1) + d(1, 2) + 1e-12);
        // partners under a pairing project to the same scar point
        let p = s.pairings[rng.gen_range(0..s.pairings.len())];
        let u = rng.gen_range(0.0..p.length());
        let x = project(&g, &s, BoundaryPos::new(0, (p.a.start.t + u).rem_euclid(l))).unwrap();
        let y = project(&g, &s, BoundaryPos::new(0, (p.b.start.t + p.partner_offset(u)).rem_euclid(l))).unwrap();
        prop_assert!(scar_distance(&g, x, y).unwrap().abs() < 1e-9);
    }

    #[test]
    fn splitting_a_pairing_keeps_the_topology(seed in any::<u64>(), k in 1i128..32) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for base in [torus(), genus_two(), tailed_square(), cantor_square()] {
            let want = classify_topology(&base).unwrap().classification;
            let i = rng.gen_range(0..base.pairings.len());
            let len = base.pairings[i].length();
            let s = split_pairing(&base, i, len * rat(k, 32));
            prop_assert_eq!(classify_topology(&s).unwrap().classification, want);
        }
    }

    #[test]
    fn collar_coordinates_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.gen_range(3..=8);
        let p = random_convex(&mut rng, k);
        let hbar = choose_collar_height(&p).unwrap() / 2.0;
        let c = build_collar(&p, hbar).unwrap();
        let l = p.boundary_length();
        for _ in 0..20 {
            let t = rng.gen_range(0.0..l);
            let h = rng.gen_range(0.0..=hbar);
            let (t2, h2) = c.locate(c.gamma(t, h)).unwrap();
            let dt = (t2 - t).rem_euclid(l).min((t - t2).rem_euclid(l));
            prop_assert!(dt < 1e-9 && (h2 - h).abs() < 1e-9, "t {} h {} -> {} {}", t, h, t2, h2);
        }
    }

    #[test]
    fn collar_retraction_is_lipschitz(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.gen_range(3..=8);
        let p = random_convex(&mut rng, k);
        let hbar = choose_collar_height(&p).unwrap();
        let c = build_collar(&p, hbar).unwrap();
        let l = p.boundary_length();
        let lip = l / hbar;
        let mut t = rng.gen_range(0.0..l);
        let pts: Vec<_> = (0..12)
            .map(|_| {
                let q = c.gamma(t, rng.gen_range(0.0..=hbar));
                t = (t + rng.gen_range(0.0..0.5) * hbar).rem_euclid(l);
                q
            })
            .collect();
        if let Ok((len, img)) = c.path_image_length(&pts) {
            prop_assert!(img <= lip * len + 1e-9, "{} > {} * {}", img, lip, len);
        }
    }

    #[test]
    fn dd_field_ops_match_rationals(a in -1000i128..1000, b in 1i128..1000, c in -1000i128..1000, d in 1i128..1000) {
        let (x, y) = (rat(a, b), rat(c, d));
        let close = |u: Dd, v: Rational| {
            let e = (u - dd_of(v)).abs().to_f64();
            e <= 1e-29 * v.to_f64().abs().max(1.0)
        };
        prop_assert!(close(dd_of(x) + dd_of(y), x + y));
        prop_assert!(close(dd_of(x) - dd_of(y), x - y));
        prop_assert!(close(dd_of(x) * dd_of(y), x * y));
        if c != 0 {
            prop_assert!(close(dd_of(x) / dd_of(y), x / y));
        }
    }
}

#[test]
fn lambda_roots_and_kneading_periods() {
    for n in 3..=30 {
        let l = lambda_n(n).unwrap();
        assert!(lambda_polynomial(n, l).to_f64().abs() < 1e-12);
        let k = kneading(l, 2 * (n + 2)).unwrap();
        assert_eq!(k[..n + 2], k[n + 2..]);
        assert_eq!(k[n + 1], Symbol::C);
    }
}

#[test]
fn rho_bar_grows_with_t() {
    let delta = 1.0 / 4608.0;
    let mut prev = f64::NEG_INFINITY;
    for k in (1..=40).rev() {
        let v = uniform_rho_bar(delta / 2f64.powi(k)).unwrap();
        assert!(v.ln_value > prev);
        assert!(v.ln_value >= v.ln_modulus_branch && v.ln_value >= v.ln_linear_branch);
        prev = v.ln_value;
    }
}
