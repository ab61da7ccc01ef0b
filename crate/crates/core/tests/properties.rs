use std::sync::OnceLock;

use hyperks::bounds::{
    delta_bound, delta_closed_form, in_U_r, partition_bound, BoundQuery, Count,
};
use hyperks::hyperbolic::{FormSpec, HyperbolicForm};
use hyperks::mixedchar::{
    conditional_expected_poly, lambda_max_mixed, lambda_max_via_cone, mixed_char_poly,
    mixed_roots, MixedSpec, Slot,
};
use hyperks::oracles::{
    check_eng2, default_families, random_context, sweep, Status, SweepConfig, SLACK_TOL,
};
use hyperks::partition::{
    brute_force_partition, greedy_partition, random_instance, validate_instance, Family,
    GreedyOptions, InstanceSpec, BRUTE_FORCE_CAP,
};
use hyperks::polyalg::{real_roots, MultiPoly, UniPoly};
use proptest::prelude::*;

fn forms() -> &'static [(FormSpec, HyperbolicForm)] {
    static FORMS: OnceLock<Vec<(FormSpec, HyperbolicForm)>> = OnceLock::new();
    FORMS.get_or_init(|| {
        let mut specs = default_families();
        specs.push(FormSpec::Product { n: 4 });
        specs
            .into_iter()
            .map(|s| {
                let f = HyperbolicForm::builtin(&s).unwrap();
                (s, f)
            })
            .collect()
    })
}

/// `Σ |c| |y|^α`, the size of the terms cancelling in `p(y)`.
fn abs_eval(p: &MultiPoly, y: &[f64]) -> f64 {
    p.terms()
        .map(|(a, c)| {
            c.abs()
                * a.iter()
                    .zip(y)
                    .map(|(&k, v)| v.abs().powi(k as i32))
                    .product::<f64>()
        })
        .sum()
}

fn vec_in(n: usize, lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(lo..hi, n)
}

fn poly3() -> impl Strategy<Value = MultiPoly> {
    prop::collection::vec((prop::collection::vec(0u16..4, 3), -3.0..3.0f64), 1..12)
        .prop_map(|t| MultiPoly::from_terms(3, t))
}

fn form_and_point() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (0..forms().len()).prop_flat_map(|i| {
        let n = forms()[i].1.nvars();
        (Just(i), vec_in(n, -1.0, 1.0))
    })
}

fn shifted(f: &HyperbolicForm, p: &[f64], s: f64) -> Vec<f64> {
    f.e().iter().zip(p).map(|(e, q)| e + s * q).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn derivative_is_linear(p in poly3(), u in vec_in(3, -2.0, 2.0), v in vec_in(3, -2.0, 2.0),
                            a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let w: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
        let lhs = p.directional_derivative(&w).unwrap();
        let rhs = p.directional_derivative(&u).unwrap().scale(a)
            .add(&p.directional_derivative(&v).unwrap().scale(b)).unwrap();
        let diff = lhs.sub(&rhs).unwrap();
        let scale = p.max_abs_coeff() * 3.0 * 2.0 * 4.0;
        prop_assert!(diff.max_abs_coeff() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn restriction_matches_evaluation(p in poly3(), base in vec_in(3, -2.0, 2.0),
                                      dir in vec_in(3, -2.0, 2.0), t in -3.0..3.0f64) {
        let q = p.restrict_to_line(&base, &dir).unwrap();
        let y: Vec<f64> = base.iter().zip(&dir).map(|(b, d)| b + t * d).collect();
        let exact = p.eval(&y).unwrap();
        prop_assert!((q.eval(t) - exact).abs() <= 1e-9 * abs_eval(&p, &y).max(1e-300) + 1e-300);
    }

    #[test]
    fn derivative_past_degree_vanishes(p in poly3(), v in vec_in(3, -2.0, 2.0)) {
        let d = p.degree().unwrap_or(0);
        let mut q = p.clone();
        for _ in 0..=d {
            q = q.directional_derivative(&v).unwrap();
        }
        prop_assert!(q.is_zero());
    }

    #[test]
    fn roots_are_recovered(mut roots in prop::collection::vec(-10.0..10.0f64, 1..7)) {
        roots.sort_by(|a, b| b.partial_cmp(a).unwrap());
        prop_assume!(roots.windows(2).all(|w| w[0] - w[1] >= 1e-3));
        let q = UniPoly::from_roots(&roots, 1.0);
        let found = real_roots(&q, 1e-7).unwrap();
        prop_assert_eq!(found.len(), roots.len());
        for (a, b) in found.iter().zip(&roots) {
            prop_assert!((a - b).abs() <= 1e-7, "{found:?} vs {roots:?}");
        }
    }

    #[test]
    fn eigenvalues_are_affine((i, p) in form_and_point(), s in 0.0..3.0f64, t in -2.0..2.0f64) {
        let f = &forms()[i].1;
        let x = shifted(f, &p, 1.0);
        let y: Vec<f64> = x.iter().zip(f.e()).map(|(a, e)| s * a + t * e).collect();
        let lx = f.eigenvalues(&x).unwrap();
        let ly = f.eigenvalues(&y).unwrap();
        for (a, b) in lx.iter().zip(&ly) {
            prop_assert!((s * a + t - b).abs() <= 1e-8 * (1.0 + b.abs()), "{lx:?} {ly:?}");
        }
    }

    #[test]
    fn h_is_product_of_eigenvalues((i, p) in form_and_point()) {
        let f = &forms()[i].1;
        let x = shifted(f, &p, 1.0);
        let prod: f64 = f.eigenvalues(&x).unwrap().iter().product();
        let hx = f.poly().eval(&x).unwrap();
        prop_assert!((hx - f.he() * prod).abs() <= 1e-8 * abs_eval(f.poly(), &x).max(hx.abs()));
    }

    #[test]
    fn lambda_max_is_convex((i, p) in form_and_point(), q in vec_in(10, -1.0, 1.0)) {
        let f = &forms()[i].1;
        let x = shifted(f, &p, 1.5);
        let y = shifted(f, &q[..f.nvars()], 1.5);
        let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
        let (lx, ly, lm) = (f.lambda_max(&x).unwrap(), f.lambda_max(&y).unwrap(), f.lambda_max(&mid).unwrap());
        prop_assert!(lm <= 0.5 * (lx + ly) + 1e-9);
        let (sx, sy, sm) = (f.lambda_min(&x).unwrap(), f.lambda_min(&y).unwrap(), f.lambda_min(&mid).unwrap());
        prop_assert!(sm >= 0.5 * (sx + sy) - 1e-9);
    }

    #[test]
    fn spectral_norm_is_subadditive((i, p) in form_and_point(), q in vec_in(10, -1.0, 1.0)) {
        let f = &forms()[i].1;
        let x: Vec<f64> = p.iter().map(|a| 2.0 * a).collect();
        let y: Vec<f64> = q[..f.nvars()].iter().map(|a| 2.0 * a).collect();
        let s: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        let n = |z: &[f64]| f.spectral_norm(z).unwrap();
        prop_assert!(n(&s) <= n(&x) + n(&y) + 1e-9);
    }

    #[test]
    fn trace_is_linear((i, p) in form_and_point(), q in vec_in(10, -1.0, 1.0), a in -2.0..2.0f64) {
        let f = &forms()[i].1;
        let y = &q[..f.nvars()];
        let z: Vec<f64> = p.iter().zip(y).map(|(u, v)| a * u + v).collect();
        let t = |x: &[f64]| f.trace(x).unwrap();
        prop_assert!((t(&z) - a * t(&p) - t(y)).abs() <= 1e-9);
        prop_assert!((t(&p) - f.trace_via_derivative(&p).unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn product_form_eigenvalues_concatenate((i, p) in form_and_point(), q in vec_in(10, -1.0, 1.0)) {
        let f = &forms()[i].1;
        let g = f.product_form(2).unwrap();
        let y = &q[..f.nvars()];
        let xy: Vec<f64> = p.iter().chain(y).copied().collect();
        let mut expect: Vec<f64> = f.eigenvalues(&p).unwrap().into_iter().chain(f.eigenvalues(y).unwrap()).collect();
        expect.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let got = g.eigenvalues(&xy).unwrap();
        for (a, b) in got.iter().zip(&expect) {
            prop_assert!((a - b).abs() <= 1e-7 * (1.0 + b.abs()), "{got:?} {expect:?}");
        }
    }
}

fn family_for(i: u64) -> Family {
    match i % 3 {
        0 => Family::Symdet { n: 2 },
        1 => Family::Symdet { n: 3 },
        _ => Family::Product { n: 4 },
    }
}

fn mixed_instance(seed: u64, m: usize) -> hyperks::partition::Instance {
    random_instance(&InstanceSpec {
        family: family_for(seed),
        m,
        k: 1,
        eps: None,
        max_rank: 2,
        seed,
        equal: false,
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rank_agrees_with_derivative_degree(seed in 0u64..1000) {
        for (spec, f) in forms() {
            let rc = random_context(f, spec, seed).unwrap();
            for w in [&rc.ctx.u, &rc.ctx.v, &rc.ctx.x] {
                prop_assert_eq!(f.rank(w).unwrap(), f.rank_via_derivatives(w).unwrap());
            }
        }
    }

    #[test]
    fn mixed_poly_ignores_order(seed in 0u64..1000, m in 3usize..7) {
        let inst = mixed_instance(seed, m);
        let f = inst.build_form().unwrap();
        let q = mixed_char_poly(&MixedSpec::new(&f, inst.vectors.clone()).unwrap()).unwrap();
        let mut rev = inst.vectors.clone();
        rev.reverse();
        let r = mixed_char_poly(&MixedSpec::new(&f, rev).unwrap()).unwrap();
        prop_assert!(q.rel_distance(&r) <= 1e-10);
    }

    #[test]
    fn mixed_poly_is_multilinear(seed in 0u64..1000, m in 2usize..6, p in 0.0..1.0f64) {
        let a = mixed_instance(seed, m);
        let b = mixed_instance(seed + 3, m);
        let f = a.build_form().unwrap();
        let mix: Vec<f64> = a.vectors[0].iter().zip(&b.vectors[0]).map(|(x, y)| (1.0 - p) * x + p * y).collect();
        let mut ws = a.vectors.clone();
        let qa = mixed_char_poly(&MixedSpec::new(&f, ws.clone()).unwrap()).unwrap();
        ws[0] = b.vectors[0].clone();
        let qb = mixed_char_poly(&MixedSpec::new(&f, ws.clone()).unwrap()).unwrap();
        ws[0] = mix;
        let qm = mixed_char_poly(&MixedSpec::new(&f, ws).unwrap()).unwrap();
        let expect = qa.scale(1.0 - p).add(&qb.scale(p));
        prop_assert!(qm.rel_distance(&expect) <= 1e-10);
    }

    #[test]
    fn pending_slot_averages_its_outcomes(seed in 0u64..1000, m in 2usize..6) {
        let a = mixed_instance(seed, m);
        let b = mixed_instance(seed + 3, m);
        let f = a.build_form().unwrap();
        let decided = |w: &Vec<f64>| {
            let mut slots: Vec<Slot> = a.vectors.iter().cloned().map(Slot::Decided).collect();
            slots[0] = Slot::Decided(w.clone());
            conditional_expected_poly(&f, &slots).unwrap()
        };
        let mut slots: Vec<Slot> = a.vectors.iter().cloned().map(Slot::Decided).collect();
        slots[0] = Slot::Pending(vec![a.vectors[0].clone(), b.vectors[0].clone()]);
        let avg = conditional_expected_poly(&f, &slots).unwrap();
        let expect = decided(&a.vectors[0]).add(&decided(&b.vectors[0])).scale(0.5);
        prop_assert!(avg.rel_distance(&expect) <= 1e-10);
    }

    #[test]
    fn mixed_roots_bracket_the_sum(seed in 0u64..1000, m in 2usize..9) {
        let inst = mixed_instance(seed, m);
        let f = inst.build_form().unwrap();
        let spec = MixedSpec::new(&f, inst.vectors.clone()).unwrap();
        let roots = mixed_roots(&spec).unwrap();
        let s = spec.sum();
        prop_assert!(f.lambda_max(&s).unwrap() <= roots[0] + 1e-8);
        prop_assert!(f.lambda_min(&s).unwrap() >= roots[roots.len() - 1] - 1e-8);
        let via = lambda_max_via_cone(&spec, 1e-12).unwrap();
        prop_assert!((via - roots[0]).abs() <= 1e-6);
        let bound = delta_bound(&BoundQuery::new(inst.eps, Count::Finite(m as u64), inst.r).unwrap()).unwrap();
        prop_assert!(lambda_max_mixed(&spec).unwrap() <= bound.value + 1e-6);
    }
}

#[test]
fn closed_forms_match_across_eps() {
    for eps in [0.05, 0.1, 0.25, 0.5, 0.7, 1.0] {
        for (m, r) in [
            (Count::Infinite, Count::Infinite),
            (Count::Infinite, Count::Finite(2)),
            (Count::Finite(4), Count::Infinite),
            (Count::Finite(10), Count::Infinite),
        ] {
            let q = BoundQuery::new(eps, m, r).unwrap();
            let Ok(Some(closed)) = delta_closed_form(&q) else {
                continue;
            };
            let num = delta_bound(&q).unwrap();
            assert!((num.value - closed).abs() <= 1e-6, "{q:?}: {} vs {closed}", num.value);
            assert!(in_U_r(num.delta, num.mu, r).unwrap());
        }
    }
}

#[test]
fn regions_shrink_as_rank_grows() {
    for r in 1..8u64 {
        for i in 1..120 {
            for j in 1..120 {
                let (delta, mu) = (1.0 + i as f64 * 0.03, j as f64 * 0.08);
                if in_U_r(delta, mu, Count::Finite(r + 1)).unwrap() {
                    assert!(in_U_r(delta, mu, Count::Finite(r)).unwrap(), "({delta}, {mu}) r={r}");
                }
            }
        }
    }
}

#[test]
fn delta_bound_is_monotone() {
    let rs = [1, 2, 3, 4, 8].map(Count::Finite);
    for m in [Count::Finite(6), Count::Infinite] {
        for eps in [0.1, 0.3, 0.6] {
            let vals: Vec<f64> = rs
                .iter()
                .chain([&Count::Infinite])
                .map(|&r| delta_bound(&BoundQuery::new(eps, m, r).unwrap()).unwrap().value)
                .collect();
            // U_{r+1} is contained in U_r, so a larger rank cap cannot lower the infimum
            assert!(vals.windows(2).all(|w| w[1] >= w[0] - 1e-6), "{m:?} {eps}: {vals:?}");
        }
        for r in rs {
            let vals: Vec<f64> = [0.1, 0.2, 0.4, 0.8]
                .iter()
                .map(|&eps| delta_bound(&BoundQuery::new(eps, m, r).unwrap()).unwrap().value)
                .collect();
            assert!(vals.windows(2).all(|w| w[1] >= w[0] - 1e-6), "{m:?} {r:?}: {vals:?}");
        }
    }
}

fn partition_spec(seed: u64) -> InstanceSpec {
    let family = match seed % 3 {
        0 => Family::Symdet { n: 2 },
        1 => Family::Product { n: 3 },
        _ => Family::Lorentz { n: 3 },
    };
    InstanceSpec {
        family,
        m: 4 + 2 * (seed as usize % 3),
        k: 2 + (seed as usize / 3) % 2,
        eps: None,
        max_rank: 1 + (seed as usize / 6) % 2,
        seed,
        equal: false,
    }
}

#[test]
fn greedy_runs_satisfy_their_guarantees() {
    for seed in 0..12 {
        let inst = random_instance(&partition_spec(seed)).unwrap();
        assert!(validate_instance(&inst).unwrap().passed, "seed {seed}");
        let rep = greedy_partition(&inst, &GreedyOptions::default()).unwrap();
        assert!(rep.trajectory_nonincreasing, "seed {seed}: {:?}", rep.trajectory);
        assert!(rep.within_bound, "seed {seed}: {:?} > {}", rep.norms, rep.bound);

        let k = inst.k as u64;
        let r = match inst.r {
            Count::Finite(r) => Count::Finite(r * k),
            Count::Infinite => Count::Infinite,
        };
        let m = Count::Finite(inst.m() as u64);
        let initial = delta_bound(&BoundQuery::new(k as f64 * inst.eps, m, r).unwrap()).unwrap();
        assert!(rep.trajectory[0] <= initial.value + 1e-6);

        let brute = brute_force_partition(&inst, BRUTE_FORCE_CAP).unwrap();
        assert!(brute.min_max_norm <= rep.max_norm() + 1e-9);
        assert!(brute.min_max_norm <= partition_bound(inst.eps, m, inst.r, k).unwrap() + 1e-6);
    }
}

#[test]
fn every_lemma_passes_a_seeded_sweep() {
    let rep = sweep(&SweepConfig { contexts: 60, seed: 2024, ..SweepConfig::default() }).unwrap();
    for l in &rep.by_lemma {
        assert_eq!(l.summary.failed, 0, "{l:?}");
    }
}

#[test]
fn eng2_holds_throughout_the_region() {
    // fresh (δ, μ) per context, biased towards the boundary of U_r
    let mut evaluated = 0;
    for (spec, f) in forms() {
        for seed in 0..40u64 {
            let rc = random_context(f, spec, 7000 + seed).unwrap();
            let xi = 1.0 / rc.ctx.eta(1);
            for (delta, frac) in [(1.05, 0.9), (1.5, 1.0), (2.0, 0.5), (3.0, 0.8), (6.0, 1.0)] {
                let mu = frac * xi;
                let r = Count::Finite(rc.r as u64);
                if !in_U_r(delta, mu, r).unwrap() {
                    continue;
                }
                let c = check_eng2(f, &rc.ctx.x, &rc.ctx.u, &rc.ctx.v, delta, mu, r, SLACK_TOL).unwrap();
                assert_ne!(c.status, Status::Failed, "{spec:?} seed {seed}: {c:?}");
                evaluated += (c.status == Status::Pass) as usize;
            }
        }
    }
    assert!(evaluated > 100, "{evaluated}");
}
