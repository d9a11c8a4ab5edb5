//! Quantum dimensions and fusion rules of the free orthogonal quantum groups.
//!
//! Everything is parameterized by `δ = q + q⁻¹`. The quantum dimensions
//! `D_n` are kept as exact rationals; `q` itself is only ever a float.

use std::fmt;
use std::sync::RwLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

/// `δ = q + q⁻¹ ≥ 2`, held exactly, together with `q ∈ (0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeformationParameter {
    delta: BigRational,
    q: f64,
}

/// The smaller root of `q + 1/q = δ`. Uses the cancellation-free form.
pub fn q_from_delta(delta: f64) -> f64 {
    let disc = (delta * delta - 4.0).max(0.0).sqrt();
    2.0 / (delta + disc)
}

impl DeformationParameter {
    pub fn new(delta: BigRational) -> Result<Self> {
        if delta < BigRational::from_integer(2.into()) {
            return Err(Error::ParameterOutOfRange(format!("delta = {delta} must be >= 2")));
        }
        let q = q_from_delta(delta.to_f64().unwrap_or(f64::INFINITY));
        Ok(Self { delta, q })
    }

    /// The Kac-type parameter `δ = N` of `O_N^+` with `F = I_N`.
    pub fn kac(n: u32) -> Result<Self> {
        Self::new(BigRational::from_integer(n.into()))
    }

    /// Parses `"7/2"`, `"3"` or a finite decimal such as `"2.5"`.
    pub fn parse(text: &str) -> Result<Self> {
        Self::new(parse_rational(text)?)
    }

    pub fn delta(&self) -> &BigRational {
        &self.delta
    }

    pub fn delta_f64(&self) -> f64 {
        self.delta.to_f64().unwrap_or(f64::INFINITY)
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `Some(N)` when `δ` is an integer, i.e. the parameter models `F = I_N`.
    pub fn kac_dimension(&self) -> Option<u32> {
        if self.delta.is_integer() {
            self.delta.to_integer().to_u32()
        } else {
            None
        }
    }

    /// `q = 1`, the `SU(2)` point where the q-power bounds degenerate.
    pub fn is_classical(&self) -> bool {
        self.delta == BigRational::from_integer(2.into())
    }

    pub(crate) fn require_q_below_one(&self) -> Result<()> {
        if self.is_classical() {
            Err(Error::ClassicalParameter)
        } else {
            Ok(())
        }
    }
}

impl fmt::Display for DeformationParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "delta = {} (q = {:.12})", self.delta, self.q)
    }
}

pub fn parse_rational(text: &str) -> Result<BigRational> {
    let text = text.trim();
    let bad = || Error::ParameterOutOfRange(format!("cannot parse `{text}` as a rational number"));
    if let Some((num, den)) = text.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let den: BigInt = den.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(num, den));
    }
    if let Some((int, frac)) = text.split_once('.') {
        let negative = int.starts_with('-');
        let int: BigInt = if int.is_empty() || int == "-" {
            BigInt::zero()
        } else {
            int.parse().map_err(|_| bad())?
        };
        if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let frac: BigInt = frac.parse().map_err(|_| bad())?;
        let magnitude = BigRational::new(int.abs() * &scale + frac, scale);
        return Ok(if negative { -magnitude } else { magnitude });
    }
    let int: BigInt = text.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(int))
}

/// Append-only memo of `D_n` for `n ≥ 0`; `D_{-1} = 0` is implicit.
#[derive(Debug)]
pub struct QDimTable {
    delta: BigRational,
    values: RwLock<Vec<BigRational>>,
}

impl QDimTable {
    pub fn new(param: &DeformationParameter) -> Self {
        Self::from_delta(param.delta().clone())
    }

    pub fn from_delta(delta: BigRational) -> Self {
        let values = vec![BigRational::one(), delta.clone()];
        Self {
            delta,
            values: RwLock::new(values),
        }
    }

    pub fn delta(&self) -> &BigRational {
        &self.delta
    }

    /// Exact `D_n` for `n ≥ -1`.
    pub fn qdim(&self, n: i64) -> Result<BigRational> {
        if n < -1 {
            return Err(Error::IndexOutOfRange(format!("D_{n} is undefined (need n >= -1)")));
        }
        Ok(self.get(n))
    }

    /// `D_n` with the `D_{-1} = 0` convention. Panics below `-1`; use [`qdim`](Self::qdim)
    /// for validated access.
    pub fn get(&self, n: i64) -> BigRational {
        assert!(n >= -1, "D_{n} is undefined");
        if n == -1 {
            return BigRational::zero();
        }
        let n = n as usize;
        if let Some(v) = self.values.read().expect("qdim table poisoned").get(n) {
            return v.clone();
        }
        let mut values = self.values.write().expect("qdim table poisoned");
        while values.len() <= n {
            let k = values.len();
            let next = &self.delta * &values[k - 1] - &values[k - 2];
            values.push(next);
        }
        values[n].clone()
    }

    pub fn get_f64(&self, n: i64) -> f64 {
        self.get(n).to_f64().unwrap_or(f64::INFINITY)
    }
}

/// Closed form `(q^{n+1} - q^{-n-1}) / (q - q^{-1})`, valid for `q < 1`.
pub fn qdim_closed_form(q: f64, n: i64) -> f64 {
    let m = (n + 1) as i32;
    (q.powi(m) - q.powi(-m)) / (q - q.recip())
}

/// Irreducible constituents of `u^a ⊗ u^b`: `|a-b|, |a-b|+2, …, a+b`, each once.
pub fn fuse(a: usize, b: usize) -> Vec<usize> {
    (a.abs_diff(b)..=a + b).step_by(2).collect()
}

pub fn fuses_into(a: usize, b: usize, c: usize) -> bool {
    c >= a.abs_diff(b) && c <= a + b && (a + b + c) % 2 == 0
}

/// Relative slack for the two float comparisons. Both margins decay like `q^{2c}`
/// and drop below double precision long before the inequalities could fail.
const FLOAT_SLACK: f64 = 1e-12;

/// Margins of the dimension inequalities for one `(a, b, c)`.
#[derive(Debug, Clone, Serialize)]
pub struct DimLemmaReport {
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub ratio: String,
    pub ratio_value: f64,
    /// `D_b/D_a - D_{a-b}^{-1}`, exact.
    pub lower_margin: f64,
    /// `q^{a-b} - D_b/D_a`.
    pub upper_margin: f64,
    /// `(1 - q²)^{-1} - q^c D_c`.
    pub c_margin: f64,
    /// `D_{b+n}/D_{a+n}` increases for `-b ≤ n ≤ n_bound`, checked exactly via the
    /// two fusion sums of `u^{b+n} ⊗ u^{a+n+1}` and `u^{b+n+1} ⊗ u^{a+n}`.
    pub monotone_up_to: i64,
    pub holds: bool,
}

/// Evaluates `D_{a-b}^{-1} ≤ D_b/D_a ≤ q^{a-b}` and `q^c D_c ≤ (1-q²)^{-1}`,
/// plus the exact telescoping that makes `D_{b+n}/D_{a+n}` increasing.
pub fn dim_lemma_check(
    param: &DeformationParameter,
    dims: &QDimTable,
    a: usize,
    b: usize,
    c: usize,
    n_bound: i64,
) -> Result<DimLemmaReport> {
    if a <= b {
        return Err(Error::RequiresOrderedLabels { a, b });
    }
    param.require_q_below_one()?;
    let q = param.q();
    let (ai, bi, ci) = (a as i64, b as i64, c as i64);

    let ratio = dims.get(bi) / dims.get(ai);
    let lower = BigRational::one() / dims.get(ai - bi);
    let lower_margin = (&ratio - &lower).to_f64().unwrap_or(f64::NAN);
    let ratio_value = ratio.to_f64().unwrap_or(f64::NAN);
    let upper_margin = q.powi((a - b) as i32) - ratio_value;
    let c_margin = 1.0 / (1.0 - q * q) - q.powi(c as i32) * dims.get_f64(ci);

    for n in -bi..=n_bound {
        let sum_over = |lo: i64, hi: i64| -> BigRational {
            (lo..=hi).step_by(2).fold(BigRational::zero(), |acc, k| acc + dims.get(k))
        };
        let left = dims.get(bi + n) * dims.get(ai + n + 1);
        let left_sum = sum_over(ai - bi + 1, ai + bi + 2 * n + 1);
        if left != left_sum {
            return Err(Error::identity(
                "D_{b+n} D_{a+n+1} = D_{a-b+1} + ... + D_{a+b+2n+1}",
                &[("a", ai), ("b", bi), ("n", n)],
                left,
                left_sum,
            ));
        }
        let right = dims.get(bi + n + 1) * dims.get(ai + n);
        let right_sum = sum_over(ai - bi - 1, ai + bi + 2 * n + 1);
        if right != right_sum {
            return Err(Error::identity(
                "D_{b+n+1} D_{a+n} = D_{a-b-1} + ... + D_{a+b+2n+1}",
                &[("a", ai), ("b", bi), ("n", n)],
                right,
                right_sum,
            ));
        }
        if left > right {
            return Err(Error::identity(
                "D_{b+n}/D_{a+n} increasing",
                &[("a", ai), ("b", bi), ("n", n)],
                left,
                right,
            ));
        }
    }

    Ok(DimLemmaReport {
        a,
        b,
        c,
        ratio: ratio.to_string(),
        ratio_value,
        lower_margin,
        upper_margin,
        c_margin,
        monotone_up_to: n_bound,
        holds: lower_margin >= 0.0
            && upper_margin >= -FLOAT_SLACK * ratio_value
            && c_margin >= -FLOAT_SLACK / (1.0 - q * q),
    })
}
