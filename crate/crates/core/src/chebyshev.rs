//! Dilated Chebyshev polynomials of the second kind.
//!
//! `μ_0 = 1`, `μ_1 = X` and `X μ_k = μ_{k-1} + μ_{k+1}`. On `[-2, 2]` they satisfy
//! `μ_k(2 cos θ) = sin((k + 1)θ) / sin θ`, which is how sup-norms are computed.
//!
//! Numerical evaluation always runs the three-term recurrence; the expanded
//! integer coefficients are exposed for exact work and cross-checks only.

use std::sync::{Arc, OnceLock, RwLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// `μ_k` as a dense list of exact integer coefficients in ascending powers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DilatedChebyshev {
    degree: usize,
    coefficients: Vec<BigInt>,
}

impl DilatedChebyshev {
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Coefficients of `1, X, X², …, X^degree`.
    pub fn coefficients(&self) -> &[BigInt] {
        &self.coefficients
    }

    /// Horner evaluation on the expanded coefficients; exact, so no stability concern.
    pub fn eval_exact(&self, x: &BigRational) -> BigRational {
        self.coefficients
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, c| acc * x + BigRational::from_integer(c.clone()))
    }

    pub fn eval_integer(&self, x: &BigInt) -> BigInt {
        self.coefficients
            .iter()
            .rev()
            .fold(BigInt::zero(), |acc, c| acc * x + c)
    }

    fn next(&self, prev: &DilatedChebyshev) -> DilatedChebyshev {
        let degree = self.degree + 1;
        let mut coefficients = vec![BigInt::zero(); degree + 1];
        for (i, c) in self.coefficients.iter().enumerate() {
            coefficients[i + 1] += c;
        }
        for (i, c) in prev.coefficients.iter().enumerate() {
            coefficients[i] -= c;
        }
        DilatedChebyshev {
            degree,
            coefficients,
        }
    }
}

fn table() -> &'static RwLock<Vec<Arc<DilatedChebyshev>>> {
    static TABLE: OnceLock<RwLock<Vec<Arc<DilatedChebyshev>>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        RwLock::new(vec![
            Arc::new(DilatedChebyshev {
                degree: 0,
                coefficients: vec![BigInt::one()],
            }),
            Arc::new(DilatedChebyshev {
                degree: 1,
                coefficients: vec![BigInt::zero(), BigInt::one()],
            }),
        ])
    })
}

/// Returns `μ_k` with exact integer coefficients. Memoized process-wide.
pub fn chebyshev_mu(k: usize) -> Arc<DilatedChebyshev> {
    if let Some(p) = table().read().expect("chebyshev table poisoned").get(k) {
        return Arc::clone(p);
    }
    let mut guard = table().write().expect("chebyshev table poisoned");
    while guard.len() <= k {
        let n = guard.len();
        let next = guard[n - 1].next(&guard[n - 2]);
        guard.push(Arc::new(next));
    }
    Arc::clone(&guard[k])
}

/// `μ_k(x)` by the three-term recurrence.
pub fn eval_mu(k: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (0.0, 1.0);
    for _ in 0..k {
        let next = x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `μ_k(x)` by the recurrence in exact rational arithmetic.
pub fn eval_mu_exact(k: usize, x: &BigRational) -> BigRational {
    let (mut prev, mut cur) = (BigRational::zero(), BigRational::one());
    for _ in 0..k {
        let next = x * &cur - &prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `Σ a_k μ_k(x)` with a single pass of the recurrence.
fn eval_combination(combo: &[(f64, usize)], max_degree: usize, x: f64) -> f64 {
    let mut weights = vec![0.0; max_degree + 1];
    for &(a, k) in combo {
        weights[k] += a;
    }
    let (mut prev, mut cur) = (0.0, 1.0);
    let mut sum = weights[0];
    for w in &weights[1..] {
        let next = x * cur - prev;
        prev = cur;
        cur = next;
        sum += w * cur;
    }
    sum
}

const GRID_POINTS: usize = 100_000;
const REFINE_STOP: f64 = 1e-10;
const GOLDEN_BRACKET: f64 = 1e-13;

/// Sup over `[-2, 2]` of `|Σ a_k μ_k(x)|`, given as `(a_k, k)` pairs.
///
/// Works in the angle variable `x = 2 cos θ`: a uniform θ-grid locates the local
/// maxima of the modulus, each is refined by golden-section search, and the grid
/// is doubled until the estimate moves by less than `1e-10`.
pub fn sup_norm_interval(combo: &[(f64, usize)]) -> Result<f64> {
    if combo.is_empty() {
        return Err(Error::EmptyInput);
    }
    let max_degree = combo.iter().map(|&(_, k)| k).max().unwrap_or(0);
    let f = |theta: f64| eval_combination(combo, max_degree, 2.0 * theta.cos()).abs();

    let mut points = GRID_POINTS;
    let mut best = sup_on_grid(&f, points);
    for _ in 0..3 {
        points *= 2;
        let refined = sup_on_grid(&f, points);
        let change = (refined - best).abs();
        best = best.max(refined);
        if change < REFINE_STOP {
            break;
        }
    }
    Ok(best)
}

fn sup_on_grid(f: &impl Fn(f64) -> f64, points: usize) -> f64 {
    let h = std::f64::consts::PI / points as f64;
    let values: Vec<f64> = (0..=points).map(|i| f(i as f64 * h)).collect();
    let mut best = values.iter().cloned().fold(0.0, f64::max);
    for i in 0..=points {
        let left = if i == 0 { f64::NEG_INFINITY } else { values[i - 1] };
        let right = if i == points { f64::NEG_INFINITY } else { values[i + 1] };
        if values[i] >= left && values[i] >= right && values[i] > 0.0 {
            let lo = (i.saturating_sub(1)) as f64 * h;
            let hi = ((i + 1).min(points)) as f64 * h;
            best = best.max(golden_max(f, lo, hi));
        }
    }
    best
}

fn golden_max(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    let mut best = f(lo).max(f(hi)).max(f1).max(f2);
    while hi - lo > GOLDEN_BRACKET {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
            best = best.max(f2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
            best = best.max(f1);
        }
    }
    best
}

fn check_net_range(t: f64, s: f64) -> Result<()> {
    if !(s > 2.0) || !(0.0..=s).contains(&t) {
        return Err(Error::ParameterOutOfRange(format!(
            "net coefficient needs s > 2 and 0 <= t <= s, got t = {t}, s = {s}"
        )));
    }
    Ok(())
}

/// `μ_k(t) / μ_k(s)` for `s > 2`, `0 ≤ t ≤ s`.
///
/// Both recurrences are advanced together and rescaled by a common factor, so
/// the ratio stays finite for any `k`.
pub fn net_coefficient(k: usize, t: f64, s: f64) -> Result<f64> {
    check_net_range(t, s)?;
    let (mut tp, mut tc) = (0.0, 1.0);
    let (mut sp, mut sc) = (0.0, 1.0);
    for _ in 0..k {
        let tn = t * tc - tp;
        let sn = s * sc - sp;
        tp = tc;
        tc = tn;
        sp = sc;
        sc = sn;
        if sc > 1e150 {
            let scale = sc.recip();
            tp *= scale;
            tc *= scale;
            sp *= scale;
            sc = 1.0;
        }
    }
    Ok(tc / sc)
}

/// Exact-mode variant of [`net_coefficient`] for rational `t`, `s`.
pub fn net_coefficient_exact(k: usize, t: &BigRational, s: &BigRational) -> Result<BigRational> {
    let two = BigRational::from_integer(2.into());
    if *s <= two || t < &BigRational::zero() || t > s {
        return Err(Error::ParameterOutOfRange(format!(
            "net coefficient needs s > 2 and 0 <= t <= s, got t = {t}, s = {s}"
        )));
    }
    Ok(eval_mu_exact(k, t) / eval_mu_exact(k, s))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn first_polynomials() {
        assert_eq!(chebyshev_mu(0).coefficients(), ints(&[1]).as_slice());
        assert_eq!(chebyshev_mu(2).coefficients(), ints(&[-1, 0, 1]).as_slice());
        assert_eq!(chebyshev_mu(3).coefficients(), ints(&[0, -2, 0, 1]).as_slice());
        assert_eq!(chebyshev_mu(4).coefficients(), ints(&[1, 0, -3, 0, 1]).as_slice());
    }

    #[test]
    fn leading_coefficient_and_parity() {
        for k in 0..60 {
            let p = chebyshev_mu(k);
            assert_eq!(p.degree(), k);
            assert_eq!(p.coefficients()[k], BigInt::one());
            for (i, c) in p.coefficients().iter().enumerate() {
                if (i + k) % 2 == 1 {
                    assert!(c.is_zero(), "mu_{k} has a coefficient of the wrong parity at X^{i}");
                }
            }
        }
    }

    #[test]
    fn evaluation_examples() {
        assert_eq!(eval_mu(7, 2.0), 8.0);
        assert_eq!(eval_mu(1, 0.0), 0.0);
        assert_eq!(eval_mu(4, 3.0), 55.0);
    }

    #[test]
    fn recurrence_matches_expanded_coefficients_exactly() {
        for k in 0..=200 {
            let p = chebyshev_mu(k);
            for x in -2i64..=3 {
                let xr = BigRational::from_integer(x.into());
                assert_eq!(p.eval_exact(&xr), eval_mu_exact(k, &xr), "k = {k}, x = {x}");
            }
        }
    }

    #[test]
    fn value_at_two() {
        for n in 0..=200usize {
            let v = chebyshev_mu(n).eval_integer(&BigInt::from(2));
            assert_eq!(v, BigInt::from(n + 1));
        }
    }

    #[test]
    fn sup_norm_examples() {
        for d in [0usize, 1, 4, 9] {
            let s = sup_norm_interval(&[(1.0, d)]).unwrap();
            assert!((s - (d as f64 + 1.0)).abs() < 1e-9, "d = {d}: {s}");
        }
        let diff = sup_norm_interval(&[(1.0, 5), (-1.0, 3)]).unwrap();
        assert!(diff <= 3.0);
        // μ_{n+2} - μ_n = 2 cos((n + 2)θ) on the interval
        assert!((diff - 2.0).abs() < 1e-9);
        assert_eq!(sup_norm_interval(&[(0.0, 5)]).unwrap(), 0.0);
        assert!(matches!(sup_norm_interval(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn net_coefficient_examples() {
        for k in 0..30 {
            assert_eq!(net_coefficient(k, 3.5, 3.5).unwrap(), 1.0);
            assert_eq!(net_coefficient(0, 2.7, 4.0).unwrap(), 1.0);
        }
        assert!((net_coefficient(2, 2.0, 3.0).unwrap() - 3.0 / 8.0).abs() < 1e-15);
        let exact = net_coefficient_exact(
            2,
            &BigRational::from_integer(2.into()),
            &BigRational::from_integer(3.into()),
        )
        .unwrap();
        assert_eq!(exact, BigRational::new(3.into(), 8.into()));
        assert!(net_coefficient(3, 3.5, 3.0).is_err());
        assert!(net_coefficient(3, -0.1, 3.0).is_err());
        assert!(net_coefficient(3, 1.0, 2.0).is_err());
    }

    #[test]
    fn net_coefficient_survives_large_degree() {
        let b = net_coefficient(2000, 2.9, 3.0).unwrap();
        assert!(b > 0.0 && b < 1.0 && b.is_finite());
    }
}
