//! One test per acceptance criterion. Each writes a PASS/FAIL line to the
//! real stdout so the verdicts show up without `--nocapture`.

use std::io::Write;
use std::time::{Duration, Instant};

use hyperks::bounds::{
    delta_bound, delta_closed_form, delta_upper_r, mss_bound, partition_bound, BoundQuery, Count,
};
use hyperks::mixedchar::{lambda_max_mixed, lambda_max_via_cone, MixedSpec};
use hyperks::oracles::{sweep, SweepConfig};
use hyperks::partition::{
    brute_force_partition, greedy_partition, random_instance, Family, GreedyOptions, Instance,
    InstanceSpec, BRUTE_FORCE_CAP,
};

fn report(n: usize, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    writeln!(out, "criterion {n:>2}: {verdict}  {detail}").unwrap();
    out.flush().unwrap();
}

fn finish(n: usize, failures: &[String], detail: &str) {
    report(n, failures.is_empty(), detail);
    assert!(failures.is_empty(), "criterion {n}:\n{}", failures.join("\n"));
}

fn q(eps: f64, m: Count, r: Count) -> BoundQuery {
    BoundQuery::new(eps, m, r).unwrap()
}

#[test]
fn criterion_01_closed_forms() {
    let start = Instant::now();
    let mut cases = vec![];
    for (eps, m) in [(0.25, 4), (0.5, 10)] {
        cases.push(q(eps, Count::Finite(m), Count::Infinite));
    }
    for eps in [0.05, 0.25, 1.0] {
        cases.push(q(eps, Count::Infinite, Count::Infinite));
    }
    for eps in [0.1, 0.25, 0.5, 0.7] {
        cases.push(q(eps, Count::Infinite, Count::Finite(2)));
    }
    let mut failures = vec![];
    let mut worst = 0.0f64;
    for c in &cases {
        let closed = delta_closed_form(c).unwrap().unwrap();
        let num = delta_bound(c).unwrap().value;
        worst = worst.max((num - closed).abs());
        if (num - closed).abs() > 1e-6 {
            failures.push(format!("{c:?}: numeric {num} vs closed {closed}"));
        }
    }
    let elapsed = start.elapsed();
    if elapsed >= Duration::from_secs(10) {
        failures.push(format!("took {elapsed:?}"));
    }
    finish(
        1,
        &failures,
        &format!("{} queries, max gap {worst:.2e}, {elapsed:.2?}", cases.len()),
    );
}

#[test]
fn criterion_02_upper_bound() {
    let mut failures = vec![];
    let mut n = 0;
    for r in [3, 4, 8] {
        for eps in [0.1, 0.3, 0.6, 0.9] {
            n += 1;
            let num = delta_bound(&q(eps, Count::Infinite, Count::Finite(r))).unwrap().value;
            let upper = delta_upper_r(eps, Count::Finite(r));
            if num > upper + 1e-6 {
                failures.push(format!("r={r} eps={eps}: delta {num:.6} > upper {upper:.6}"));
            }
        }
    }
    finish(
        2,
        &failures,
        &format!("{}/{n} points within the upper bound", n - failures.len()),
    );
}

#[test]
fn criterion_03_improvement() {
    let mut failures = vec![];
    let mut detail = vec![];
    for k in [3, 4] {
        let ours = partition_bound(0.1, Count::Infinite, Count::Finite(1), k).unwrap();
        let mss = mss_bound(0.1, k);
        detail.push(format!("k={k}: {ours:.4} < {mss:.4}"));
        if ours >= mss - 1e-6 {
            failures.push(format!("k={k}: {ours} not below {mss}"));
        }
    }
    finish(3, &failures, &detail.join(", "));
}

#[test]
fn criterion_04_mss_recovery() {
    let mut failures = vec![];
    let mut worst = 0.0f64;
    for k in [2, 3] {
        for eps in [0.1, 0.25] {
            let ours = partition_bound(eps, Count::Infinite, Count::Infinite, k).unwrap();
            let mss = mss_bound(eps, k);
            worst = worst.max((ours - mss).abs());
            if (ours - mss).abs() > 1e-6 {
                failures.push(format!("k={k} eps={eps}: {ours} vs {mss}"));
            }
        }
    }
    finish(4, &failures, &format!("4 points, max gap {worst:.2e}"));
}

/// The shared instance set of criteria 5, 8 and 9.
fn mixed_instances() -> Vec<Instance> {
    (0..50u64)
        .map(|seed| {
            let family = match seed % 3 {
                0 => Family::Symdet { n: 2 },
                1 => Family::Symdet { n: 3 },
                _ => Family::Product { n: 4 },
            };
            random_instance(&InstanceSpec {
                family,
                m: 4 + (seed as usize * 7) % 9,
                k: 1,
                eps: None,
                max_rank: 1 + (seed as usize / 3) % 2,
                seed: 1000 + seed,
                equal: false,
            })
            .unwrap()
        })
        .collect()
}

#[test]
fn criterion_05_mixed_bound() {
    let start = Instant::now();
    let mut failures = vec![];
    let mut worst = f64::INFINITY;
    for (i, inst) in mixed_instances().iter().enumerate() {
        let f = inst.build_form().unwrap();
        let lm = lambda_max_mixed(&MixedSpec::new(&f, inst.vectors.clone()).unwrap()).unwrap();
        let m = Count::Finite(inst.m() as u64);
        let bound = delta_bound(&q(inst.eps, m, inst.r)).unwrap().value;
        worst = worst.min(bound - lm);
        if lm > bound + 1e-6 {
            failures.push(format!("instance {i}: {lm} > {bound}"));
        }
    }
    let elapsed = start.elapsed();
    if elapsed >= Duration::from_secs(120) {
        failures.push(format!("took {elapsed:?}"));
    }
    finish(
        5,
        &failures,
        &format!("50 instances, min margin {worst:.3e}, {elapsed:.2?}"),
    );
}

/// The shared instance set of criteria 6 and 10.
fn partition_instances() -> Vec<Instance> {
    (0..25u64)
        .map(|seed| {
            let family = match seed % 4 {
                0 => Family::Symdet { n: 2 },
                1 => Family::Product { n: 3 },
                2 => Family::Lorentz { n: 3 },
                _ => Family::Symdet { n: 3 },
            };
            let k = 2 + (seed as usize / 4) % 2;
            let m = if k == 2 { 4 + 2 * (seed as usize % 3) } else { 4 + (seed as usize % 2) * 2 };
            random_instance(&InstanceSpec {
                family,
                m,
                k,
                eps: None,
                max_rank: 1 + (seed as usize / 8) % 2,
                seed: 500 + seed,
                equal: false,
            })
            .unwrap()
        })
        .collect()
}

#[test]
fn criterion_06_partition_guarantee() {
    let start = Instant::now();
    let mut failures = vec![];
    let mut worst = f64::INFINITY;
    for (i, inst) in partition_instances().iter().enumerate() {
        let rep = greedy_partition(inst, &GreedyOptions::default()).unwrap();
        worst = worst.min(rep.bound - rep.max_norm());
        if rep.norms.iter().any(|&x| x > rep.bound + 1e-6) {
            failures.push(format!("instance {i}: norms {:?} > {}", rep.norms, rep.bound));
        }
        if !rep.trajectory_nonincreasing {
            failures.push(format!("instance {i}: trajectory {:?}", rep.trajectory));
        }
    }
    let elapsed = start.elapsed();
    if elapsed >= Duration::from_secs(300) {
        failures.push(format!("took {elapsed:?}"));
    }
    finish(
        6,
        &failures,
        &format!("25 instances, min margin {worst:.3e}, {elapsed:.2?}"),
    );
}

#[test]
fn criterion_07_oracle_suite() {
    let rep = sweep(&SweepConfig::default()).unwrap();
    let failures: Vec<String> = rep
        .by_lemma
        .iter()
        .filter(|l| l.summary.failed > 0)
        .map(|l| format!("{} on {}: {:?}", l.lemma, l.form, l.summary))
        .collect();
    let t = &rep.total;
    finish(
        7,
        &failures,
        &format!(
            "{} contexts, {} checks ({} vacuous, {} skipped), {} failed, worst slack {:.2e}",
            rep.contexts,
            t.checked,
            t.vacuous,
            t.skipped,
            t.failed,
            t.worst_slack.unwrap_or(0.0)
        ),
    );
}

#[test]
fn criterion_08_linearization() {
    let mut failures = vec![];
    let mut worst = f64::INFINITY;
    for (i, inst) in mixed_instances().iter().enumerate() {
        let f = inst.build_form().unwrap();
        let spec = MixedSpec::new(&f, inst.vectors.clone()).unwrap();
        let lm = lambda_max_mixed(&spec).unwrap();
        let ls = f.lambda_max(&spec.sum()).unwrap();
        worst = worst.min(lm - ls);
        if ls > lm + 1e-8 {
            failures.push(format!("instance {i}: lambda_max(sum) {ls} > {lm}"));
        }
    }
    finish(8, &failures, &format!("50 instances, min margin {worst:.3e}"));
}

#[test]
fn criterion_09_independent_oracle() {
    let mut failures = vec![];
    let mut worst = 0.0f64;
    for (i, inst) in mixed_instances().iter().enumerate() {
        let f = inst.build_form().unwrap();
        let spec = MixedSpec::new(&f, inst.vectors.clone()).unwrap();
        let lm = lambda_max_mixed(&spec).unwrap();
        let via = lambda_max_via_cone(&spec, 1e-12).unwrap();
        worst = worst.max((lm - via).abs());
        if (lm - via).abs() > 1e-6 {
            failures.push(format!("instance {i}: {lm} vs {via}"));
        }
    }
    finish(9, &failures, &format!("50 instances, max gap {worst:.2e}"));
}

#[test]
fn criterion_10_brute_force() {
    let mut failures = vec![];
    let mut n = 0;
    for (i, inst) in partition_instances().iter().enumerate() {
        if (inst.k as f64).powi(inst.m() as i32) > 4096.0 {
            continue;
        }
        n += 1;
        let greedy = greedy_partition(inst, &GreedyOptions::default()).unwrap();
        let brute = brute_force_partition(inst, BRUTE_FORCE_CAP).unwrap();
        let (b, g) = (brute.min_max_norm, greedy.max_norm());
        if b > g + 1e-9 || g > greedy.bound + 1e-6 {
            failures.push(format!("instance {i}: brute {b}, greedy {g}, bound {}", greedy.bound));
        }
    }
    if n == 0 {
        failures.push("no instance small enough".into());
    }
    finish(10, &failures, &format!("{n} instances with k^m <= 4096"));
}
