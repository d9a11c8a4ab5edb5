//! Small dense helpers over `DMatrix<Complex64>`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type CMat = DMatrix<Complex64>;

fn split(m: &CMat) -> (DMatrix<f64>, Option<DMatrix<f64>>) {
    let re = m.map(|z| z.re);
    let im = m.iter().any(|z| z.im != 0.0).then(|| m.map(|z| z.im));
    (re, im)
}

/// Complex product through real `dgemm` calls. nalgebra only dispatches real scalars to
/// an optimized kernel; its generic complex product is far slower at oracle sizes.
pub fn cmul(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.ncols(), b.nrows(), "inner dimensions differ");
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    let re_re = &ar * &br;
    let (re, im) = match (ai, bi) {
        (None, None) => (re_re, None),
        (Some(ai), None) => (re_re, Some(&ai * &br)),
        (None, Some(bi)) => (re_re, Some(&ar * &bi)),
        (Some(ai), Some(bi)) => (re_re - &ai * &bi, Some(&ar * &bi + &ai * &br)),
    };
    match im {
        Some(im) => re.zip_map(&im, Complex64::new),
        None => re.map(|x| Complex64::new(x, 0.0)),
    }
}

/// `a* b`.
pub fn cmul_adj(a: &CMat, b: &CMat) -> CMat {
    cmul(&a.adjoint(), b)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Complex standard Gaussian entries, `E|z|² = 1`.
pub fn gaussian(rows: usize, cols: usize, rng: &mut impl Rng) -> CMat {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * scale, im * scale)
    })
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn frobenius_sq(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// `Tr(A* B)`.
pub fn hs_inner(a: &CMat, b: &CMat) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Largest singular value. Dense SVD; callers keep the matrix small.
pub fn spectral_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

/// Largest singular value together with its right singular vector.
pub fn top_right_singular(m: &CMat) -> (f64, Vec<Complex64>) {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let (idx, &sigma) = svd
        .singular_values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty matrix");
    let row = v_t.row(idx);
    (sigma, row.iter().map(|z| z.conj()).collect())
}

/// `max |a_ij - b_ij|`.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// `‖A - B‖_F / max(‖B‖_F, floor)`.
pub fn rel_diff(a: &CMat, b: &CMat, floor: f64) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    let diff: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm_sqr()).sum();
    diff.sqrt() / frobenius_sq(b).sqrt().max(floor)
}

/// Reverses the `m` base-`n` digits of `k`.
pub fn reverse_digits(mut k: usize, n: usize, m: usize) -> usize {
    let mut out = 0;
    for _ in 0..m {
        out = out * n + k % n;
        k /= n;
    }
    out
}

/// Applies `op` to the contiguous legs `[start, start + count)` of a tensor whose row
/// index is the row-major product of `legs`; columns are carried along untouched.
/// Returns the new tensor and its leg sizes, with the touched legs merged into one leg
/// of size `op.nrows()`.
pub fn apply_to_legs(
    data: &CMat,
    legs: &[usize],
    start: usize,
    count: usize,
    op: &CMat,
) -> (CMat, Vec<usize>) {
    let left: usize = legs[..start].iter().product();
    let mid: usize = legs[start..start + count].iter().product();
    let right: usize = legs[start + count..].iter().product();
    assert_eq!(left * mid * right, data.nrows(), "leg sizes do not match rows");
    assert_eq!(op.ncols(), mid, "operator does not match legs");
    let cols = data.ncols();
    let out_mid = op.nrows();
    let mut out = CMat::zeros(left * out_mid * right, cols);
    let mut block = CMat::zeros(mid, right * cols);
    for l in 0..left {
        for m in 0..mid {
            for r in 0..right {
                let row = (l * mid + m) * right + r;
                for c in 0..cols {
                    block[(m, r * cols + c)] = data[(row, c)];
                }
            }
        }
        let image = cmul(op, &block);
        for m in 0..out_mid {
            for r in 0..right {
                let row = (l * out_mid + m) * right + r;
                for c in 0..cols {
                    out[(row, c)] = image[(m, r * cols + c)];
                }
            }
        }
    }
    let mut new_legs = legs[..start].to_vec();
    new_legs.push(out_mid);
    new_legs.extend_from_slice(&legs[start + count..]);
    (out, new_legs)
}

/// Inserts a vector as a new leg at position `at` (a tensor product with a fixed vector).
pub fn insert_leg(data: &CMat, legs: &[usize], at: usize, vector: &[Complex64]) -> (CMat, Vec<usize>) {
    let left: usize = legs[..at].iter().product();
    let right: usize = legs[at..].iter().product();
    assert_eq!(left * right, data.nrows(), "leg sizes do not match rows");
    let v = vector.len();
    let cols = data.ncols();
    let out = CMat::from_fn(left * v * right, cols, |row, c| {
        let l = row / (v * right);
        let i = (row / right) % v;
        let r = row % right;
        vector[i] * data[(l * right + r, c)]
    });
    let mut new_legs = legs[..at].to_vec();
    new_legs.push(v);
    new_legs.extend_from_slice(&legs[at..]);
    (out, new_legs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_product_matches_generic() {
        let mut g = rng(9);
        let a = gaussian(5, 7, &mut g);
        let b = gaussian(7, 3, &mut g);
        assert!(max_abs_diff(&cmul(&a, &b), &(&a * &b)) < 1e-13);
        let real = a.map(|z| Complex64::new(z.re, 0.0));
        assert!(max_abs_diff(&cmul(&real, &b), &(&real * &b)) < 1e-13);
        assert!(max_abs_diff(&cmul(&b.transpose(), &real.transpose()), &(b.transpose() * real.transpose())) < 1e-13);
        assert!(max_abs_diff(&cmul_adj(&a, &a), &(a.adjoint() * &a)) < 1e-13);
    }

    #[test]
    fn digit_reversal() {
        assert_eq!(reverse_digits(0b011, 2, 3), 0b110);
        assert_eq!(reverse_digits(5, 3, 2), 7);
        assert_eq!(reverse_digits(4, 3, 0), 0);
    }

    #[test]
    fn legs_match_kronecker() {
        let mut g = rng(1);
        let a = gaussian(3, 3, &mut g);
        let b = gaussian(2, 4, &mut g);
        let x = gaussian(3 * 4 * 2, 2, &mut g);
        let (y, legs) = apply_to_legs(&x, &[3, 4, 2], 1, 1, &b);
        assert_eq!(legs, vec![3, 2, 2]);
        let full = identity(3).kronecker(&b).kronecker(&identity(2));
        assert!(max_abs_diff(&y, &(full * &x)) < 1e-12);
        let (z, legs) = apply_to_legs(&x, &[3, 4, 2], 0, 1, &a);
        assert_eq!(legs, vec![3, 4, 2]);
        let full = a.kronecker(&identity(8));
        assert!(max_abs_diff(&z, &(full * &x)) < 1e-12);
    }

    #[test]
    fn inserted_leg_is_tensor_product() {
        let mut g = rng(2);
        let x = gaussian(6, 1, &mut g);
        let v = gaussian(4, 1, &mut g);
        let (y, legs) = insert_leg(&x, &[2, 3], 1, v.as_slice());
        assert_eq!(legs, vec![2, 4, 3]);
        for a in 0..2 {
            for i in 0..4 {
                for b in 0..3 {
                    let expect = v[i] * x[a * 3 + b];
                    assert!((y[(a * 4 + i) * 3 + b] - expect).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn norms() {
        let m = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, -3.0),
        ]));
        assert!((spectral_norm(&m) - 3.0).abs() < 1e-14);
        let (s, v) = top_right_singular(&m);
        assert!((s - 3.0).abs() < 1e-14);
        assert!(v[0].norm() < 1e-14 && (v[1].norm() - 1.0).abs() < 1e-14);
        assert_eq!(frobenius_sq(&m), 10.0);
    }
}
