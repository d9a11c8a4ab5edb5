//! Scalar coefficients of the block calculus and the polynomial bounds built from them.
//!
//! All `D`-identities are evaluated in exact rational arithmetic. Floats appear only
//! where `q` itself enters (bounds, `K(q)`, square roots of `χ²`).

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fusion::{q_from_delta, DeformationParameter, QDimTable};

/// `χ_j^d(k)` as an exact square and its positive square root.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Chi {
    #[serde(serialize_with = "crate::report::ser_rational")]
    pub square: BigRational,
    pub value: f64,
}

/// Signed `C_j^d(s) = 1 - ν⁻¹` with the checks performed on it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CCoeff {
    #[serde(serialize_with = "crate::report::ser_rational")]
    pub value: BigRational,
    /// `D_{d-j-s} D_{j-s-1} / (D_{d-j+1} D_j)`, equal to `|value|`.
    #[serde(serialize_with = "crate::report::ser_rational")]
    pub closed_form: BigRational,
    /// `q^{2s+2} - |C|`.
    pub bound_margin: f64,
}

/// One row of the bound table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bounds {
    pub d: usize,
    /// `R(d) = (d+1)/3`.
    pub lower: f64,
    /// `K(q)(2d² - d + 1)`.
    pub refined: f64,
    /// `P(d) = K(q)(d+1)(2d+1)`.
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct So3Bound {
    pub d: usize,
    pub delta: f64,
    pub q: f64,
    /// `P(2d)` evaluated at `q(δ)`.
    pub bound: f64,
    /// `q(δ) ≤ 3^{-1/2}`, i.e. the constant sum stays below one.
    pub admissible: bool,
}

/// Evaluates every coefficient at one deformation parameter.
#[derive(Debug, Clone)]
pub struct CoeffBundle {
    param: DeformationParameter,
    dims: Arc<QDimTable>,
}

/// `K(q) = (1-q²)^{-1/2} ∏_{i≥0} (1-q^{2i+2})^{-1}`.
pub fn k_of_q(q: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&q) {
        return Err(Error::KDiverges);
    }
    let q2 = q * q;
    let mut k = (1.0 - q2).sqrt().recip();
    let mut power = q2;
    while power > 1e-17 {
        k /= 1.0 - power;
        power *= q2;
    }
    Ok(k)
}

/// `R(d)`, the refined bound and `P(d)` at a real `q < 1`.
pub fn bounds_at(q: f64, d: usize) -> Result<Bounds> {
    let k = k_of_q(q)?;
    let x = d as f64;
    Ok(Bounds {
        d,
        lower: (x + 1.0) / 3.0,
        refined: k * (2.0 * x * x - x + 1.0),
        upper: k * (x + 1.0) * (2.0 * x + 1.0),
    })
}

/// Bound for `SO_q(3)` at a real `δ > 2`: the free orthogonal bound re-indexed at `2d`.
pub fn so3_and_delta(d: usize, delta: f64) -> Result<So3Bound> {
    if !(delta > 2.0) {
        return Err(Error::ParameterOutOfRange(format!("delta = {delta} must exceed 2")));
    }
    let q = q_from_delta(delta);
    let bound = bounds_at(q, 2 * d)?.upper;
    Ok(So3Bound {
        d,
        delta,
        q,
        bound,
        admissible: q <= 3f64.sqrt().recip(),
    })
}

fn ratio_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

impl CoeffBundle {
    pub fn new(param: DeformationParameter) -> Self {
        let dims = Arc::new(QDimTable::new(&param));
        Self { param, dims }
    }

    pub fn with_dims(param: DeformationParameter, dims: Arc<QDimTable>) -> Self {
        Self { param, dims }
    }

    pub fn kac(n: u32) -> Result<Self> {
        Ok(Self::new(DeformationParameter::kac(n)?))
    }

    pub fn param(&self) -> &DeformationParameter {
        &self.param
    }

    pub fn dims(&self) -> &Arc<QDimTable> {
        &self.dims
    }

    pub fn q(&self) -> f64 {
        self.param.q()
    }

    fn dim(&self, n: i64) -> BigRational {
        self.dims.get(n)
    }

    /// `N_{a,b}^c = 1 - D_{(a-b+c)/2} D_{(b-a+c)/2-1} / (D_{a+1} D_b)`.
    pub fn n_coeff(&self, a: usize, b: usize, c: usize) -> Result<BigRational> {
        if !crate::fusion::fuses_into(a, b, c) {
            return Err(Error::UndefinedCoefficient(format!(
                "N^{c}_{{{a},{b}}}: need |a-b| <= c <= a+b and c = a+b mod 2"
            )));
        }
        let (a, b, c) = (a as i64, b as i64, c as i64);
        let num = self.dim((a - b + c) / 2) * self.dim((b - a + c) / 2 - 1);
        let den = self.dim(a + 1) * self.dim(b);
        Ok(BigRational::one() - num / den)
    }

    fn check_jd(&self, j: usize, d: usize) -> Result<()> {
        if j > d {
            Err(Error::IndexOutOfRange(format!("j = {j} exceeds d = {d}")))
        } else {
            Ok(())
        }
    }

    /// `|μ_j^d(k)|² = ∏_{i<j} N^{d-j+k}_{d-j+i,k+i}`; empty product for `j = 0`.
    pub fn mu_sq(&self, j: usize, d: usize, k: usize) -> Result<BigRational> {
        self.check_jd(j, d)?;
        let mut acc = BigRational::one();
        for i in 0..j {
            acc *= self.n_coeff(d - j + i, k + i, d - j + k)?;
        }
        Ok(acc)
    }

    pub fn chi(&self, j: usize, d: usize, k: usize) -> Result<Chi> {
        self.check_jd(j, d)?;
        let (ji, di, ki) = (j as i64, d as i64, k as i64);
        let ratio = self.dim_quotient(&[di - ji, ji + ki], &[di - ji + ki, ji]);
        let mu = self.mu_sq(j, d, k)?;
        let square = ratio / (&mu * &mu);
        let value = ratio_f64(&square).sqrt();
        Ok(Chi { square, value })
    }

    /// `χ_j^d(k+1)² / χ_j^d(k)²`. Telescoping the product form gives
    /// `|μ_j^d(k+1)|² / |μ_j^d(k)|² = D_{d+k+1} D_k / (D_{d-j+k+1} D_{k+j})`, and after
    /// cancelling against the dimension ratio the step is
    /// `D_{j+k+1} D_{j+k} D_{d-j+k} D_{d-j+k+1} / (D_{d+k+1} D_k)²`.
    pub fn chi_square_step(&self, j: usize, d: usize, k: usize) -> Result<BigRational> {
        self.check_jd(j, d)?;
        let (j, d, k) = (j as i64, d as i64, k as i64);
        Ok(self.dim_quotient(&[j + k + 1, j + k, d - j + k, d - j + k + 1], &[d + k + 1, d + k + 1, k, k]))
    }

    /// `∏ D_up / ∏ D_down` with a single reduction at the end.
    fn dim_quotient(&self, up: &[i64], down: &[i64]) -> BigRational {
        let mut num = BigInt::one();
        let mut den = BigInt::one();
        for &n in up {
            let x = self.dim(n);
            num *= x.numer();
            den *= x.denom();
        }
        for &n in down {
            let x = self.dim(n);
            num *= x.denom();
            den *= x.numer();
        }
        BigRational::new(num, den)
    }

    /// `χ_j^d(k)` for `k = 0..=k_max`, stepping with [`CoeffBundle::chi_square_step`].
    pub fn chi_row(&self, j: usize, d: usize, k_max: usize) -> Result<Vec<Chi>> {
        let first = self.chi(j, d, 0)?;
        let mut square = first.square.clone();
        let mut row = Vec::with_capacity(k_max + 1);
        row.push(first);
        for k in 0..k_max {
            square *= self.chi_square_step(j, d, k)?;
            let value = ratio_f64(&square).sqrt();
            row.push(Chi { square: square.clone(), value });
        }
        Ok(row)
    }

    /// `λ_j^d(k) = (D_j D_k / D_{j+k})^{-1} |μ_j^d(k)|^{-2}`.
    pub fn lambda_coeff(&self, j: usize, d: usize, k: usize) -> Result<BigRational> {
        let mu = self.mu_sq(j, d, k)?;
        let (j, k) = (j as i64, k as i64);
        Ok(self.dim(j + k) / (self.dim(j) * self.dim(k) * mu))
    }

    fn check_s(&self, j: usize, d: usize, s: usize) -> Result<()> {
        self.check_jd(j, d)?;
        if s > j.min(d - j) {
            return Err(Error::IndexOutOfRange(format!(
                "s = {s} exceeds min(j, d-j) = {}",
                j.min(d - j)
            )));
        }
        Ok(())
    }

    /// `ν_j^d(s) = D_j D_{d-j+1} / (D_s D_{d-s+1})`.
    pub fn nu_closed(&self, j: usize, d: usize, s: usize) -> Result<BigRational> {
        self.check_s(j, d, s)?;
        let (j, d, s) = (j as i64, d as i64, s as i64);
        Ok(self.dim(j) * self.dim(d - j + 1) / (self.dim(s) * self.dim(d - s + 1)))
    }

    /// The defining product `∏_{i<j-s} N^{d-j}_{d-j-s+i,s+i} / N^{d-j+1}_{d-j-s+i,s+i+1}`.
    pub fn nu_product(&self, j: usize, d: usize, s: usize) -> Result<BigRational> {
        self.check_s(j, d, s)?;
        let mut acc = BigRational::one();
        for i in 0..j - s {
            let top = self.n_coeff(d - j - s + i, s + i, d - j)?;
            let bottom = self.n_coeff(d - j - s + i, s + i + 1, d - j + 1)?;
            acc = acc * top / bottom;
        }
        Ok(acc)
    }

    /// `ν_j^d(s)`, computed both ways; a mismatch is an identity violation.
    pub fn nu(&self, j: usize, d: usize, s: usize) -> Result<BigRational> {
        let product = self.nu_product(j, d, s)?;
        let closed = self.nu_closed(j, d, s)?;
        if product != closed {
            return Err(Error::identity(
                "nu product form = closed form",
                &[("j", j as i64), ("d", d as i64), ("s", s as i64)],
                product,
                closed,
            ));
        }
        Ok(closed)
    }

    pub fn c_coeff(&self, j: usize, d: usize, s: usize) -> Result<CCoeff> {
        let nu = self.nu(j, d, s)?;
        let value = BigRational::one() - nu.recip();
        let (ji, di, si) = (j as i64, d as i64, s as i64);
        let closed_form = self.dim_quotient(&[di - ji - si, ji - si - 1], &[di - ji + 1, ji]);
        let indices = [("j", ji), ("d", di), ("s", si)];
        if value.abs() != closed_form {
            return Err(Error::identity("|C| closed form", &indices, value.abs(), closed_form));
        }
        let bound = self.q().powi(2 * s as i32 + 2);
        let bound_margin = bound - ratio_f64(&closed_form);
        if bound_margin < 0.0 {
            return Err(Error::identity("|C| <= q^(2s+2)", &indices, closed_form, bound));
        }
        Ok(CCoeff {
            value,
            closed_form,
            bound_margin,
        })
    }

    /// `Σ_s |C_j^d(s)| χ^{d-2s}_{j-s}(s+1)`.
    pub fn constant_sum(&self, j: usize, d: usize) -> Result<f64> {
        self.check_jd(j, d)?;
        let mut sum = 0.0;
        for s in 0..=j.min(d - j) {
            let c = self.c_coeff(j, d, s)?;
            if c.closed_form.is_zero() {
                continue;
            }
            let chi = self.chi(j - s, d - 2 * s, s + 1)?;
            sum += ratio_f64(&c.closed_form) * chi.value;
        }
        Ok(sum)
    }

    /// `q²/(1-2q²)`, the uniform bound on the constant sum (finite for `q < 2^{-1/2}`).
    pub fn constant_sum_bound(&self) -> Option<f64> {
        let q2 = self.q() * self.q();
        (2.0 * q2 < 1.0).then(|| q2 / (1.0 - 2.0 * q2))
    }

    /// `(χ_j^d(s+1)/χ_j^d(s))²`, exact.
    pub fn chi_ratio_sq(&self, j: usize, d: usize, s: usize) -> Result<BigRational> {
        Ok(self.chi(j, d, s + 1)?.square / self.chi(j, d, s)?.square)
    }

    pub fn k_of_q(&self) -> Result<f64> {
        k_of_q(self.q())
    }

    pub fn bounds(&self, d: usize) -> Result<Bounds> {
        self.param.require_q_below_one()?;
        bounds_at(self.q(), d)
    }

    pub fn so3_and_delta(&self, d: usize) -> Result<So3Bound> {
        so3_and_delta(d, self.param.delta_f64())
    }

    /// Checks every exact identity of the coefficient calculus for `d ≤ d_max`:
    /// the fusion sum, both telescoped forms of `N`, the `N` closed form used for `χ`,
    /// `ν` two ways and `|C|` in closed form. Returns the number of identities checked.
    pub fn verify_exact_identities(&self, d_max: usize) -> Result<usize> {
        let mut count = 0;
        for a in 0..=d_max {
            for b in 0..=d_max {
                let sum = crate::fusion::fuse(a, b)
                    .into_iter()
                    .fold(BigRational::zero(), |acc, c| acc + self.dim(c as i64));
                let product = self.dim(a as i64) * self.dim(b as i64);
                if sum != product {
                    return Err(Error::identity(
                        "sum of D_c over fuse(a,b) = D_a D_b",
                        &[("a", a as i64), ("b", b as i64)],
                        sum,
                        product,
                    ));
                }
                count += 1;
            }
        }
        for d in 0..=d_max {
            for j in 0..=d {
                count += self.verify_n_closed_form(j, d, d_max)?;
                for s in 0..=j.min(d - j) {
                    count += self.verify_telescoping(j, d, s)?;
                    self.c_coeff(j, d, s)?;
                    count += 2;
                }
            }
        }
        Ok(count)
    }

    /// `N^{d-j+k}_{d-j+i,k+i} = D_i D_{d-j+k+i+1} / (D_{d-j+i+1} D_{k+i})` for `k ≤ k_max`.
    fn verify_n_closed_form(&self, j: usize, d: usize, k_max: usize) -> Result<usize> {
        let (ji, di) = (j as i64, d as i64);
        let mut count = 0;
        for k in 0..=k_max {
            let ki = k as i64;
            for i in 0..j {
                let ii = i as i64;
                let lhs = self.n_coeff(d - j + i, k + i, d - j + k)?;
                let rhs = self.dim(ii) * self.dim(di - ji + ki + ii + 1)
                    / (self.dim(di - ji + ii + 1) * self.dim(ki + ii));
                if lhs != rhs {
                    return Err(Error::identity(
                        "N^{d-j+k}_{d-j+i,k+i} closed form",
                        &[("j", ji), ("d", di), ("k", ki), ("i", ii)],
                        lhs,
                        rhs,
                    ));
                }
                count += 1;
            }
        }
        Ok(count)
    }

    fn verify_telescoping(&self, j: usize, d: usize, s: usize) -> Result<usize> {
        let (ji, di, si) = (j as i64, d as i64, s as i64);
        let mut count = 0;
        for i in 0..j - s {
            let ii = i as i64;
            let indices = [("j", ji), ("d", di), ("s", si), ("i", ii)];

            let lhs = self.dim(di - si - ji + ii + 1) * self.dim(si + ii + 1)
                - self.dim(di - si - ji) * self.dim(si);
            let rhs = self.dim(ii) * self.dim(di - ji + ii + 2);
            if lhs != rhs {
                return Err(Error::identity(
                    "D_{d-s-j+i+1} D_{s+i+1} - D_{d-s-j} D_s = D_i D_{d-j+i+2}",
                    &indices,
                    lhs,
                    rhs,
                ));
            }

            let lhs = self.n_coeff(d - j - s + i, s + i + 1, d - j + 1)?;
            let rhs = self.dim(ii) * self.dim(di - ji + ii + 2)
                / (self.dim(di - si - ji + ii + 1) * self.dim(si + ii + 1));
            if lhs != rhs {
                return Err(Error::identity(
                    "N^{d-j+1}_{d-j-s+i,s+i+1} telescoped",
                    &indices,
                    lhs,
                    rhs,
                ));
            }

            let lhs = self.n_coeff(d - s - j + i, s + i, d - j)?;
            let rhs = self.dim(ii) * self.dim(di - ji + ii + 1)
                / (self.dim(di - si - ji + ii + 1) * self.dim(si + ii));
            if lhs != rhs {
                return Err(Error::identity(
                    "N^{d-j}_{d-s-j+i,s+i} telescoped",
                    &indices,
                    lhs,
                    rhs,
                ));
            }
            count += 3;
        }
        Ok(count)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn three() -> CoeffBundle {
        CoeffBundle::kac(3).unwrap()
    }

    #[test]
    fn n_coeff_examples() {
        let c = three();
        assert_eq!(c.n_coeff(1, 1, 2).unwrap(), r(7, 8));
        assert_eq!(c.n_coeff(0, 0, 0).unwrap(), r(1, 1));
        assert_eq!(c.n_coeff(0, 1, 1).unwrap(), r(8, 9));
        assert!(matches!(c.n_coeff(1, 1, 1), Err(Error::UndefinedCoefficient(_))));
        assert!(matches!(c.n_coeff(1, 1, 4), Err(Error::UndefinedCoefficient(_))));
    }

    #[test]
    fn chi_examples() {
        let c = three();
        let chi = c.chi(0, 1, 1).unwrap();
        assert_eq!(chi.square, r(9, 8));
        let chi = c.chi(1, 1, 1).unwrap();
        assert_eq!(chi.square, r(9, 8));
        assert!((chi.value - 1.0606601717798212).abs() < 1e-15);
        for d in 0..6 {
            for j in 0..=d {
                assert_eq!(c.chi(j, d, 0).unwrap().square, r(1, 1));
            }
        }
        assert!(c.chi(3, 2, 0).is_err());
    }

    #[test]
    fn chi_row_matches_products() {
        for text in ["3", "7/2"] {
            let c = CoeffBundle::new(DeformationParameter::parse(text).unwrap());
            for d in 0..8 {
                for j in 0..=d {
                    let row = c.chi_row(j, d, 9).unwrap();
                    for (k, chi) in row.iter().enumerate() {
                        assert_eq!(chi, &c.chi(j, d, k).unwrap(), "({j},{d},{k})");
                        let step = c.chi_square_step(j, d, k).unwrap();
                        assert_eq!(step, c.chi(j, d, k + 1).unwrap().square / &chi.square);
                    }
                }
            }
        }
    }

    #[test]
    fn mu_and_lambda_examples() {
        let c = three();
        assert_eq!(c.mu_sq(0, 4, 2).unwrap(), r(1, 1));
        assert_eq!(c.mu_sq(1, 1, 1).unwrap(), r(8, 9));
        assert_eq!(c.mu_sq(1, 2, 1).unwrap(), r(7, 8));
        assert_eq!(c.lambda_coeff(0, 5, 3).unwrap(), r(1, 1));
        assert_eq!(c.lambda_coeff(1, 1, 1).unwrap(), r(1, 1));
        assert_eq!(c.lambda_coeff(1, 2, 1).unwrap(), r(64, 63));
    }

    #[test]
    fn nu_examples() {
        let c = three();
        assert_eq!(c.nu(1, 1, 0).unwrap(), r(9, 8));
        assert_eq!(c.nu(1, 2, 0).unwrap(), r(8, 7));
        for d in 0..8 {
            for j in 0..=d {
                let s = j.min(d - j);
                if s == j {
                    assert_eq!(c.nu(j, d, s).unwrap(), r(1, 1));
                }
            }
        }
        assert!(matches!(c.nu(1, 1, 1), Err(Error::IndexOutOfRange(_))));
    }

    #[test]
    fn c_coeff_examples() {
        let c = three();
        assert_eq!(c.c_coeff(1, 2, 0).unwrap().value, r(1, 8));
        assert_eq!(c.c_coeff(1, 2, 1).unwrap().value, r(0, 1));
        // 1 - (9/8)^{-1}; agrees with D_0 D_0 / (D_1 D_1).
        let boundary = c.c_coeff(1, 1, 0).unwrap();
        assert_eq!(boundary.value, r(1, 9));
        assert_eq!(boundary.closed_form, r(1, 9));
        assert_eq!(c.c_coeff(0, 3, 0).unwrap().value, r(0, 1));
    }

    #[test]
    fn constant_sum_examples() {
        let c = three();
        assert!((c.constant_sum(1, 2).unwrap() - 1.0 / 7.0).abs() < 1e-15);
        for d in 0..10 {
            assert_eq!(c.constant_sum(0, d).unwrap(), 0.0);
        }
        let bound = c.constant_sum_bound().unwrap();
        assert!((bound - 0.2060113295832983).abs() < 1e-12);
    }

    #[test]
    fn k_of_q_values() {
        let q = three().q();
        let k = k_of_q(q).unwrap();
        // Independent evaluation through the log of the product.
        let log: f64 = -0.5 * (1.0 - q * q).ln()
            - (0..200).map(|i| (1.0 - q.powi(2 * i + 2)).ln()).sum::<f64>();
        assert!((k - log.exp()).abs() < 1e-13);
        assert!((k - 1.2993).abs() < 5e-4);
        assert!((k_of_q(1e-9).unwrap() - 1.0).abs() < 1e-15);
        assert!(CoeffBundle::kac(4).unwrap().k_of_q().unwrap() < k);
        assert!(matches!(k_of_q(1.0), Err(Error::KDiverges)));
    }

    #[test]
    fn bounds_examples() {
        let c = three();
        let k = c.k_of_q().unwrap();
        assert_eq!(c.bounds(2).unwrap().lower, 1.0);
        let b1 = c.bounds(1).unwrap();
        assert!((b1.upper - 6.0 * k).abs() < 1e-12);
        assert!((b1.refined - 2.0 * k).abs() < 1e-12);
        let b20 = c.bounds(20).unwrap();
        assert_eq!(b20.lower, 7.0);
        assert!((b20.upper - k * 21.0 * 41.0).abs() < 1e-9);
        assert!(matches!(
            CoeffBundle::kac(2).unwrap().bounds(1),
            Err(Error::ClassicalParameter)
        ));
    }

    #[test]
    fn so3_examples() {
        let s = so3_and_delta(1, 6f64.sqrt()).unwrap();
        assert!((s.q - (6f64.sqrt() - 2f64.sqrt()) / 2.0).abs() < 1e-14);
        assert!(s.admissible);
        let c = three();
        let s = c.so3_and_delta(1).unwrap();
        assert!((s.bound - c.k_of_q().unwrap() * 15.0).abs() < 1e-12);
        let s = so3_and_delta(1, 2.2).unwrap();
        assert!(!s.admissible);
        assert!((s.q - 0.6417424).abs() < 1e-6);
        let edge = so3_and_delta(0, 4.0 / 3f64.sqrt() + 1e-12).unwrap();
        assert!(edge.admissible);
        assert!(so3_and_delta(1, 2.0).is_err());
    }

    #[test]
    fn exact_identities_small() {
        for text in ["3", "4", "7/2"] {
            let c = CoeffBundle::new(DeformationParameter::parse(text).unwrap());
            assert!(c.verify_exact_identities(8).unwrap() > 100);
        }
    }
}
