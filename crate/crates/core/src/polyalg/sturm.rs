//! Exact real-rootedness cross-check via Sturm sequences.
//!
//! Coefficients of the normalized polynomial are rounded to a `1e-12` grid
//! and handled as exact rationals. The square-free part `q / gcd(q, q')` is
//! real-rooted iff its Sturm sequence counts `deg` distinct real roots.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use super::UniPoly;
use crate::error::{Error, Result};

/// Degree limit for the exact check.
pub const STURM_MAX_DEGREE: usize = 12;

const GRID: i64 = 1_000_000_000_000;

type QPoly = Vec<BigRational>;

fn trim(p: &mut QPoly) {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
}

fn to_rational(q: &UniPoly) -> QPoly {
    let (n, _) = q.normalized();
    let mut p: QPoly = n
        .coeffs()
        .iter()
        .map(|&c| {
            BigRational::new(
                BigInt::from((c * GRID as f64).round() as i64),
                BigInt::from(GRID),
            )
        })
        .collect();
    trim(&mut p);
    p
}

fn derivative(p: &QPoly) -> QPoly {
    let mut d: QPoly = p
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| c * BigRational::from_integer(BigInt::from(k)))
        .collect();
    trim(&mut d);
    d
}

/// Polynomial long division; returns (quotient, remainder).
fn divmod(a: &QPoly, b: &QPoly) -> (QPoly, QPoly) {
    let mut r = a.clone();
    trim(&mut r);
    let db = b.len() - 1;
    let lead = b[db].clone();
    if r.len() < b.len() {
        return (Vec::new(), r);
    }
    let mut quot = vec![BigRational::zero(); r.len() - db];
    while r.len() >= b.len() {
        let shift = r.len() - b.len();
        let f = r.last().unwrap() / &lead;
        for (i, c) in b.iter().enumerate() {
            r[shift + i] = &r[shift + i] - &f * c;
        }
        quot[shift] = f;
        r.pop();
        trim(&mut r);
    }
    (quot, r)
}

fn gcd(a: &QPoly, b: &QPoly) -> QPoly {
    let (mut x, mut y) = (a.clone(), b.clone());
    while !y.is_empty() {
        let (_, r) = divmod(&x, &y);
        x = y;
        y = r;
    }
    x
}

fn sign_changes(signs: impl Iterator<Item = i8>) -> usize {
    let mut prev = 0i8;
    let mut n = 0;
    for s in signs.filter(|&s| s != 0) {
        if prev != 0 && s != prev {
            n += 1;
        }
        prev = s;
    }
    n
}

/// Number of distinct real roots of a square-free rational polynomial.
fn count_real_roots(p: &QPoly) -> usize {
    let mut chain = vec![p.clone(), derivative(p)];
    loop {
        let n = chain.len();
        if chain[n - 1].is_empty() {
            chain.pop();
            break;
        }
        let (_, r) = divmod(&chain[n - 2], &chain[n - 1]);
        if r.is_empty() {
            break;
        }
        chain.push(r.into_iter().map(|c| -c).collect());
    }
    let sign = |c: &BigRational| {
        if c.is_positive() {
            1i8
        } else if c.is_negative() {
            -1
        } else {
            0
        }
    };
    let at_pos_inf = chain.iter().map(|q| sign(q.last().unwrap()));
    let at_neg_inf = chain.iter().map(|q| {
        let s = sign(q.last().unwrap());
        if (q.len() - 1) % 2 == 1 {
            -s
        } else {
            s
        }
    });
    sign_changes(at_neg_inf) - sign_changes(at_pos_inf)
}

/// Exact Sturm-sequence real-rootedness test for degree at most [`STURM_MAX_DEGREE`].
pub fn sturm_is_real_rooted(q: &UniPoly) -> Result<bool> {
    if q.is_zero() {
        return Ok(true);
    }
    let deg = q.degree().unwrap();
    if deg > STURM_MAX_DEGREE {
        return Err(Error::Unsupported(format!(
            "Sturm check limited to degree {STURM_MAX_DEGREE}, got {deg}"
        )));
    }
    let p = to_rational(q);
    if p.len() <= 1 {
        return Ok(true);
    }
    let g = gcd(&p, &derivative(&p));
    let (sqfree, _) = divmod(&p, &g);
    let d = sqfree.len() - 1;
    Ok(count_real_roots(&sqfree) == d)
}
