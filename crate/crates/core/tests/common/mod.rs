#![allow(dead_code)]

//! Shared test helpers: an exact determinacy oracle, random instances and
//! price samplers.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

use privmarket::payments::{synthesize_price, Contract, MicroPaymentRule};
use privmarket::pricing::{PriceExpr, SemiNorm, Transform};
use privmarket::{LinearQuery, PricedQuery, QueryBundle};

type Q = BigRational;

fn rat(x: f64) -> Q {
    BigRational::from_float(x).expect("finite input")
}

/// Reduced row echelon form of `[a | b]`; returns the pivot columns, or
/// `None` if the system is inconsistent.
fn rref(a: &mut [Vec<Q>], b: &mut [Q]) -> Option<Vec<usize>> {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(r, p);
        b.swap(r, p);
        let inv = Q::one() / a[r][c].clone();
        for x in a[r].iter_mut() {
            *x = &*x * &inv;
        }
        b[r] = &b[r] * &inv;
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for k in 0..cols {
                    let d = &f * &a[r][k];
                    a[i][k] = &a[i][k] - d;
                }
                let d = &f * &b[r];
                b[i] = &b[i] - d;
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    if (r..rows).any(|i| !b[i].is_zero()) {
        return None;
    }
    Some(pivots)
}

/// Affine parametrization `c = c0 + N·t` of all solutions of `A c = q`.
struct Solutions {
    c0: Vec<Q>,
    null: Vec<Vec<Q>>,
}

fn solve_affine(columns: &[Vec<Q>], target: &[Q]) -> Option<Solutions> {
    let m = columns.len();
    let n = target.len();
    let mut a: Vec<Vec<Q>> = (0..n).map(|i| (0..m).map(|j| columns[j][i].clone()).collect()).collect();
    let mut b = target.to_vec();
    let pivots = rref(&mut a, &mut b)?;
    let mut c0 = vec![Q::zero(); m];
    for (row, &p) in pivots.iter().enumerate() {
        c0[p] = b[row].clone();
    }
    let free: Vec<usize> = (0..m).filter(|j| !pivots.contains(j)).collect();
    let null = free
        .iter()
        .map(|&f| {
            let mut v = vec![Q::zero(); m];
            v[f] = Q::one();
            for (row, &p) in pivots.iter().enumerate() {
                v[p] = -a[row][f].clone();
            }
            v
        })
        .collect();
    Some(Solutions { c0, null })
}

/// The finite-variance entries and the affine solution set over them.
fn setup(bundle: &QueryBundle, target: &LinearQuery, relax_infinite: bool) -> Option<(Vec<Q>, Solutions)> {
    let usable: Vec<&PricedQuery> =
        bundle.iter().filter(|e| relax_infinite || e.variance().is_finite()).collect();
    let columns: Vec<Vec<Q>> = usable.iter().map(|e| e.query().coefficients().iter().map(|&x| rat(x)).collect()).collect();
    let weights: Vec<Q> =
        usable.iter().map(|e| if e.variance().is_finite() { rat(e.variance()) } else { Q::one() }).collect();
    let t: Vec<Q> = target.coefficients().iter().map(|&x| rat(x)).collect();
    Some((weights, solve_affine(&columns, &t)?))
}

/// Exact minimum of `Σ c_i² v_i` subject to `Σ c_i q_i = q`, in rational
/// arithmetic; `None` when `q` is outside the span of the finite-variance
/// entries.
pub fn exact_min_variance(bundle: &QueryBundle, target: &LinearQuery) -> Option<f64> {
    let (w, sol) = setup(bundle, target, false)?;
    let k = sol.null.len();
    let m = w.len();
    // Normal equations (Nᵀ W N) t = −Nᵀ W c0.
    let mut a: Vec<Vec<Q>> = vec![vec![Q::zero(); k]; k];
    let mut b: Vec<Q> = vec![Q::zero(); k];
    for r in 0..k {
        for s in 0..k {
            let mut acc = Q::zero();
            for j in 0..m {
                acc += &w[j] * &sol.null[r][j] * &sol.null[s][j];
            }
            a[r][s] = acc;
        }
        let mut acc = Q::zero();
        for j in 0..m {
            acc += &w[j] * &sol.null[r][j] * &sol.c0[j];
        }
        b[r] = -acc;
    }
    let mut t = vec![Q::zero(); k];
    if k > 0 {
        let pivots = rref(&mut a, &mut b).expect("normal equations are consistent");
        for (row, &p) in pivots.iter().enumerate() {
            t[p] = b[row].clone();
        }
    }
    let mut total = Q::zero();
    for j in 0..m {
        let mut c = sol.c0[j].clone();
        for r in 0..k {
            c += &sol.null[r][j] * &t[r];
        }
        total += &w[j] * &c * &c;
    }
    Some(to_f64(&total))
}

fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        let n: &BigInt = x.numer();
        let d: &BigInt = x.denom();
        n.to_f64().unwrap() / d.to_f64().unwrap()
    })
}

/// The same minimum found by a coarse grid over the null-space parameters
/// followed by shrinking compass search. Independent of any factorization.
pub fn grid_min_variance(bundle: &QueryBundle, target: &LinearQuery) -> Option<f64> {
    let (w, sol) = setup(bundle, target, false)?;
    let w: Vec<f64> = w.iter().map(to_f64).collect();
    let c0: Vec<f64> = sol.c0.iter().map(to_f64).collect();
    let null: Vec<Vec<f64>> = sol.null.iter().map(|v| v.iter().map(to_f64).collect()).collect();
    let k = null.len();
    let objective = |t: &[f64]| -> f64 {
        (0..w.len())
            .map(|j| {
                let c = c0[j] + (0..k).map(|r| null[r][j] * t[r]).sum::<f64>();
                w[j] * c * c
            })
            .sum()
    };
    if k == 0 {
        return Some(objective(&[]));
    }

    let mut best = vec![0.0; k];
    let mut best_val = objective(&best);
    let grid: Vec<f64> = (-10..=10).map(|i| i as f64 * 0.5).collect();
    let mut idx = vec![0usize; k];
    loop {
        let t: Vec<f64> = idx.iter().map(|&i| grid[i]).collect();
        let val = objective(&t);
        if val < best_val {
            best_val = val;
            best = t;
        }
        let mut d = 0;
        while d < k {
            idx[d] += 1;
            if idx[d] < grid.len() {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
        if d == k {
            break;
        }
    }

    let mut step = 1.0;
    let mut iterations = 0;
    while step > 1e-13 && iterations < 2_000_000 {
        iterations += 1;
        let mut improved = false;
        for r in 0..k {
            for dir in [1.0, -1.0] {
                let mut t = best.clone();
                t[r] += dir * step;
                let val = objective(&t);
                if val < best_val {
                    best_val = val;
                    best = t;
                    improved = true;
                }
            }
        }
        if improved {
            step *= 2.0;
        } else {
            step *= 0.5;
        }
    }
    Some(best_val)
}

/// Whether `q` lies in the span of all entries (infinite variance included).
pub fn in_span(bundle: &QueryBundle, target: &LinearQuery) -> bool {
    setup(bundle, target, true).is_some()
}

fn small_variance<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    match rng.gen_range(0..10) {
        0 => 0.0,
        1 => f64::INFINITY,
        _ => rng.gen_range(1..=40) as f64 / 4.0,
    }
}

/// A random bundle of `m ≤ 4` queries over `n ≤ 4` items and a target that
/// is usually, but not always, in their span.
pub fn small_instance<R: Rng + ?Sized>(rng: &mut R) -> (QueryBundle, LinearQuery) {
    let n = rng.gen_range(1..=4);
    let m = rng.gen_range(1..=4);
    let bundle: QueryBundle = (0..m)
        .map(|_| {
            let q: Vec<f64> = (0..n).map(|_| rng.gen_range(-3i32..=3) as f64).collect();
            PricedQuery::from_parts(q, small_variance(rng)).unwrap()
        })
        .collect();
    let target = if rng.gen_bool(0.7) {
        let mut q = vec![0.0; n];
        for e in bundle.iter() {
            let c = rng.gen_range(-2i32..=2) as f64;
            for (acc, x) in q.iter_mut().zip(e.query().coefficients()) {
                *acc += c * x;
            }
        }
        q
    } else {
        (0..n).map(|_| rng.gen_range(-3i32..=3) as f64).collect()
    };
    (bundle, LinearQuery::new(target).unwrap())
}

/// `(2p/π)·atan(c·‖q‖²/v)` with `p = 10000`, `c = 7.85e-4`.
pub fn worked_example_price() -> PriceExpr {
    PriceExpr::lincomb(vec![(7.85e-4, PriceExpr::base(SemiNorm::L2))]).atan(2.0 * 10_000.0 / std::f64::consts::PI)
}

/// The four base families over `n` items.
pub fn base_families(n: usize) -> Vec<(String, PriceExpr)> {
    let weights: Vec<f64> = (0..n).map(|i| (i % 3) as f64 * 0.75).collect();
    vec![
        ("l2".into(), PriceExpr::base(SemiNorm::L2)),
        ("weighted_l2".into(), PriceExpr::base(SemiNorm::WeightedL2 { weights })),
        ("linf".into(), PriceExpr::base(SemiNorm::Linf)),
        ("lp3".into(), PriceExpr::base(SemiNorm::Lp { p: 3.0 })),
    ]
}

/// Contracts used to build synthesized `Σ μ_i` prices.
pub fn contract_families(n: usize) -> Vec<(String, Vec<Contract>)> {
    vec![
        ("linear".into(), (0..n).map(|i| Contract::linear(0.01 * (i + 1) as f64)).collect()),
        ("option_a".into(), vec![Contract::option_a(); n]),
        ("option_b".into(), vec![Contract::option_b(); n]),
        (
            "mixed".into(),
            (0..n)
                .map(|i| match i % 3 {
                    0 => Contract::option_a(),
                    1 => Contract::option_b(),
                    _ => Contract::transformed(
                        Transform::Atan { scale: 2.0 * 40.0 / std::f64::consts::PI },
                        vec![Contract::linear(1.0)],
                    ),
                })
                .collect(),
        ),
    ]
}

pub fn rules_for(contracts: &[Contract], gamma: f64) -> Vec<MicroPaymentRule> {
    contracts.iter().map(|w| MicroPaymentRule::for_contract(w, gamma)).collect()
}

pub fn synthesized_families(n: usize, gamma: f64) -> Vec<(String, PriceExpr)> {
    contract_families(n)
        .into_iter()
        .map(|(name, ws)| (format!("sum_mu_{name}"), synthesize_price(&rules_for(&ws, gamma))))
        .collect()
}

fn random_seminorm<R: Rng + ?Sized>(rng: &mut R, n: usize) -> SemiNorm {
    match rng.gen_range(0..4) {
        0 => SemiNorm::L2,
        1 => SemiNorm::Linf,
        2 => SemiNorm::Lp { p: rng.gen_range(1.0..6.0) },
        _ => SemiNorm::WeightedL2 {
            weights: (0..n).map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..3.0) }).collect(),
        },
    }
}

/// A random expression drawn from the full constructor whitelist.
pub fn random_expr<R: Rng + ?Sized>(rng: &mut R, n: usize, depth: usize) -> PriceExpr {
    if depth == 0 || rng.gen_bool(0.3) {
        return PriceExpr::base(random_seminorm(rng, n));
    }
    let child = |rng: &mut R| random_expr(rng, n, depth - 1);
    match rng.gen_range(0..10) {
        0 => {
            let k = rng.gen_range(1..=3);
            PriceExpr::lincomb((0..k).map(|_| (rng.gen_range(0.0..3.0), child(rng))).collect())
        }
        1 => {
            let k = rng.gen_range(1..=3);
            PriceExpr::max((0..k).map(|_| child(rng)).collect())
        }
        2 => child(rng).cutoff(rng.gen_range(0.0..50.0)),
        3 => child(rng).power(rng.gen_range(0.05..=1.0)),
        4 => child(rng).log1p(),
        5 => PriceExpr::max(vec![child(rng).scaled(rng.gen_range(0.0..2.0)), child(rng)]),
        6 => child(rng).atan(rng.gen_range(0.1..20.0)),
        7 => child(rng).tanh(rng.gen_range(0.1..20.0)),
        8 => child(rng).alg_sigmoid(rng.gen_range(0.1..20.0)),
        _ => child(rng).scaled(rng.gen_range(0.0..5.0)),
    }
}

/// Sample mean and its standard error.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}
