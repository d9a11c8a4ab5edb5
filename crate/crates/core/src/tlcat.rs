//! Dense Temperley-Lieb oracle for `O_N^+` with `F = I_N`.
//!
//! `H_n` is realized as the range of the Jones-Wenzl projector `p_n` inside
//! `(C^N)^{⊗n}`. Besides the full projectors, the oracle keeps an orthonormal basis
//! `J_n` of each range, and every intertwiner is stored in those reduced coordinates:
//! `v_γ^{a,b}` is a `D_a D_b × D_γ` isometry. Tensor indices are row-major, so the index
//! of `x ⊗ y` is `x·dim(y) + y`, matching `DMatrix::kronecker`.

use std::collections::HashMap;
use std::io::Write;
use std::sync::{Arc, RwLock};

use num_complex::Complex64;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fusion::{fuses_into, DeformationParameter, QDimTable};
use crate::linalg::{self, apply_to_legs, insert_leg, CMat};

pub const DEFAULT_DEGREE_CAP: usize = 6;

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A morphism `(C^N)^{⊗source} → (C^N)^{⊗target}` as an explicit matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TLMorphism {
    n: usize,
    source_degree: usize,
    target_degree: usize,
    matrix: CMat,
}

impl TLMorphism {
    pub fn new(n: usize, source_degree: usize, target_degree: usize, matrix: CMat) -> Result<Self> {
        let expect = (n.pow(target_degree as u32), n.pow(source_degree as u32));
        if matrix.shape() != expect {
            return Err(Error::DegreeMismatch(format!(
                "matrix shape {:?} does not match degrees {source_degree} -> {target_degree} at N = {n}",
                matrix.shape()
            )));
        }
        Ok(Self {
            n,
            source_degree,
            target_degree,
            matrix,
        })
    }

    pub fn identity(n: usize, degree: usize) -> Self {
        let dim = n.pow(degree as u32);
        Self {
            n,
            source_degree: degree,
            target_degree: degree,
            matrix: linalg::identity(dim),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn source_degree(&self) -> usize {
        self.source_degree
    }

    pub fn target_degree(&self) -> usize {
        self.target_degree
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    /// `self ∘ rhs`.
    pub fn compose(&self, rhs: &TLMorphism) -> Result<TLMorphism> {
        if self.n != rhs.n || rhs.target_degree != self.source_degree {
            return Err(Error::DegreeMismatch(format!(
                "cannot compose ({} -> {}) after ({} -> {})",
                self.source_degree, self.target_degree, rhs.source_degree, rhs.target_degree
            )));
        }
        Ok(TLMorphism {
            n: self.n,
            source_degree: rhs.source_degree,
            target_degree: self.target_degree,
            matrix: &self.matrix * &rhs.matrix,
        })
    }

    pub fn adjoint(&self) -> TLMorphism {
        TLMorphism {
            n: self.n,
            source_degree: self.target_degree,
            target_degree: self.source_degree,
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn tensor(&self, other: &TLMorphism) -> Result<TLMorphism> {
        if self.n != other.n {
            return Err(Error::DegreeMismatch(format!("N = {} vs N = {}", self.n, other.n)));
        }
        Ok(TLMorphism {
            n: self.n,
            source_degree: self.source_degree + other.source_degree,
            target_degree: self.target_degree + other.target_degree,
            matrix: self.matrix.kronecker(&other.matrix),
        })
    }

    /// `max |(v*v - 1)_{ij}|`.
    pub fn isometry_defect(&self) -> f64 {
        let gram = self.matrix.adjoint() * &self.matrix;
        linalg::max_abs_diff(&gram, &linalg::identity(gram.nrows()))
    }

    /// Writes a JSON header line followed by one line per row of `re im` pairs.
    pub fn dump(&self, out: &mut impl Write, tolerance: f64) -> Result<()> {
        dump_matrix(
            out,
            self.n,
            [self.source_degree, self.target_degree],
            &self.matrix,
            tolerance,
        )
    }
}

#[derive(Serialize)]
struct DumpHeader {
    #[serde(rename = "N")]
    n: usize,
    degrees: [usize; 2],
    rows: usize,
    cols: usize,
    tolerance: f64,
}

pub fn dump_matrix(
    out: &mut impl Write,
    n: usize,
    degrees: [usize; 2],
    matrix: &CMat,
    tolerance: f64,
) -> Result<()> {
    let header = DumpHeader {
        n,
        degrees,
        rows: matrix.nrows(),
        cols: matrix.ncols(),
        tolerance,
    };
    serde_json::to_writer(&mut *out, &header)?;
    writeln!(out)?;
    for r in 0..matrix.nrows() {
        let mut line = String::new();
        for c in 0..matrix.ncols() {
            if c > 0 {
                line.push(' ');
            }
            let z = matrix[(r, c)];
            line.push_str(&format!("{:?} {:?}", z.re, z.im));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Reads back what [`dump_matrix`] wrote.
pub fn read_dump(text: &str) -> Result<(serde_json::Value, CMat)> {
    let mut lines = text.lines();
    let header: serde_json::Value =
        serde_json::from_str(lines.next().ok_or(Error::EmptyInput)?)?;
    let field = |name: &str| {
        header[name]
            .as_u64()
            .map(|v| v as usize)
            .ok_or_else(|| Error::config(Some(1), Some(name), "missing or non-integer"))
    };
    let (rows, cols) = (field("rows")?, field("cols")?);
    let mut m = CMat::zeros(rows, cols);
    for r in 0..rows {
        let line = lines
            .next()
            .ok_or_else(|| Error::config(Some(r + 2), None, "missing row"))?;
        let values: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::config(Some(r + 2), None, e.to_string()))?;
        if values.len() != 2 * cols {
            return Err(Error::config(Some(r + 2), None, "wrong number of entries"));
        }
        for c in 0..cols {
            m[(r, c)] = Complex64::new(values[2 * c], values[2 * c + 1]);
        }
    }
    Ok((header, m))
}

/// `p_n` as a full matrix on `(C^N)^{⊗n}`.
#[derive(Debug, Clone)]
pub struct JonesWenzlProjector {
    pub degree: usize,
    pub matrix: Arc<CMat>,
}

impl JonesWenzlProjector {
    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn idempotency_defect(&self) -> f64 {
        let sq = linalg::cmul(&self.matrix, &self.matrix);
        linalg::max_abs_diff(&sq, &self.matrix)
    }

    pub fn self_adjointness_defect(&self) -> f64 {
        linalg::max_abs_diff(&self.matrix.adjoint(), &self.matrix)
    }
}

/// A normalized intertwiner `v_γ^{a,b}` in reduced coordinates.
#[derive(Debug, Clone)]
pub struct Intertwiner {
    pub a: usize,
    pub b: usize,
    pub gamma: usize,
    /// `D_a D_b × D_γ`, with `v*v = 1`.
    pub v: CMat,
    /// `W*W` before normalization, where `W` is the projected nested cup.
    pub scale: f64,
    dim_b: usize,
}

impl Intertwiner {
    /// Rows `α D_b .. (α+1) D_b` of `v`, i.e. `(e_α* ⊗ 1) v`.
    pub fn row_block(&self, alpha: usize) -> CMat {
        self.v.rows(alpha * self.dim_b, self.dim_b).into_owned()
    }

    pub fn dim_a(&self) -> usize {
        self.v.nrows() / self.dim_b
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }
}

/// Norm data for one restriction `M_k^+ : B(H_l) ⊗ B(H_k) → B(H_{l+k})`.
#[derive(Debug, Clone, Serialize)]
pub struct MPlusNorm {
    pub k: usize,
    pub l: usize,
    /// Squared norm from power iteration on a random start.
    pub norm_sq: f64,
    /// Squared ratio `‖M(x)‖²/‖x‖²` at `x = v v*`.
    pub norm_sq_at_vv: f64,
    /// `D_l D_k / D_{l+k}`.
    pub expected: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AdjointCheck {
    pub k: usize,
    pub l: usize,
    /// Largest relative defect of `⟨Mx, y⟩ = ⟨x, M*y⟩` over the random probes.
    pub probe_defect: f64,
    /// Max entry difference between the adjoint of the assembled matrix and the
    /// assembled formula; `None` when the matrices would be too large.
    pub matrix_defect: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NormRatio {
    pub j: usize,
    pub d: usize,
    pub k: usize,
    pub t_a_sq: f64,
    pub t_b_sq: f64,
    pub ratio: f64,
}

type IntertwinerKey = (usize, usize, usize);

/// Memoizing oracle for one `N`. Caches are shared and write-synchronized.
#[derive(Debug)]
pub struct TensorOracle {
    n: usize,
    cap: usize,
    dims: Arc<QDimTable>,
    projectors: RwLock<Vec<Arc<CMat>>>,
    bases: RwLock<Vec<Arc<CMat>>>,
    intertwiners: RwLock<HashMap<IntertwinerKey, Arc<Intertwiner>>>,
}

impl TensorOracle {
    pub fn new(n: u32, cap: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::ParameterOutOfRange(format!(
                "tensor oracle needs N >= 3 (got {n})"
            )));
        }
        let dims = Arc::new(QDimTable::new(&DeformationParameter::kac(n)?));
        let n = n as usize;
        let p0 = Arc::new(linalg::identity(1));
        let p1 = Arc::new(linalg::identity(n));
        Ok(Self {
            n,
            cap,
            dims,
            projectors: RwLock::new(vec![p0.clone(), p1.clone()]),
            bases: RwLock::new(vec![p0, p1]),
            intertwiners: RwLock::new(HashMap::new()),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn dims(&self) -> &Arc<QDimTable> {
        &self.dims
    }

    /// `D_k` as a dimension. In the Kac case it is the integer `dim H_k`.
    pub fn qdim(&self, k: usize) -> usize {
        self.dims
            .get(k as i64)
            .to_integer()
            .to_usize()
            .expect("quantum dimension fits in usize")
    }

    pub fn qdim_f64(&self, k: usize) -> f64 {
        self.qdim(k) as f64
    }

    pub fn check_degree(&self, degree: usize) -> Result<()> {
        if degree > self.cap {
            Err(Error::DegreeCap {
                degree,
                cap: self.cap,
            })
        } else {
            Ok(())
        }
    }

    /// `t t*` on `C^N ⊗ C^N`, with `t = Σ e_i ⊗ e_i`.
    fn cup_cap(&self) -> CMat {
        let n = self.n;
        CMat::from_fn(n * n, n * n, |r, c| {
            if r / n == r % n && c / n == c % n {
                ONE
            } else {
                ZERO
            }
        })
    }

    /// `e_i = 1 ⊗ (t t*/N) ⊗ 1` acting on strands `i, i+1` of `n` strands.
    pub fn tl_generator(&self, i: usize, n: usize) -> Result<TLMorphism> {
        if n < 2 || i == 0 || i >= n {
            return Err(Error::IndexOutOfRange(format!(
                "generator e_{i} needs 1 <= i <= n-1 with n = {n} >= 2"
            )));
        }
        self.check_degree(n)?;
        let e = self.cup_cap() / Complex64::new(self.n as f64, 0.0);
        let left = linalg::identity(self.n.pow(i as u32 - 1));
        let right = linalg::identity(self.n.pow((n - i - 1) as u32));
        TLMorphism::new(self.n, n, n, left.kronecker(&e).kronecker(&right))
    }

    /// Wenzl's recursion `p_{n+1} = p_n ⊗ 1 - (D_{n-1}/D_n)(p_n ⊗ 1) U_n (p_n ⊗ 1)`,
    /// where `U_n = N e_n` is the unnormalized cup-cap on the last two strands.
    pub fn jones_wenzl(&self, degree: usize) -> Result<JonesWenzlProjector> {
        self.check_degree(degree)?;
        if let Some(p) = self.projectors.read().expect("projector cache poisoned").get(degree) {
            return Ok(JonesWenzlProjector {
                degree,
                matrix: Arc::clone(p),
            });
        }
        let mut cache = self.projectors.write().expect("projector cache poisoned");
        while cache.len() <= degree {
            let k = cache.len() - 1;
            let next = self.wenzl_step(&cache[k], k);
            cache.push(Arc::new(next));
        }
        Ok(JonesWenzlProjector {
            degree,
            matrix: Arc::clone(&cache[degree]),
        })
    }

    fn wenzl_step(&self, p: &CMat, k: usize) -> CMat {
        let n = self.n;
        let lifted = p.kronecker(&linalg::identity(n));
        let dim = lifted.nrows();
        let outer = n.pow(k as u32 - 1);
        // R = (1 ⊗ t*)(p_k ⊗ 1), so (p_k ⊗ 1) U_k (p_k ⊗ 1) = R* R.
        let reduced = CMat::from_fn(outer, dim, |kappa, col| {
            (0..n).map(|i| lifted[(kappa * n * n + i * n + i, col)]).sum()
        });
        let c = self.qdim_f64(k - 1) / self.qdim_f64(k);
        let correction = linalg::cmul_adj(&reduced, &reduced);
        lifted - correction * Complex64::new(c, 0.0)
    }

    /// Orthonormal basis `J_n` of `range(p_n)`, an `N^n × D_n` isometry.
    pub fn basis(&self, degree: usize) -> Result<Arc<CMat>> {
        self.check_degree(degree)?;
        if let Some(j) = self.bases.read().expect("basis cache poisoned").get(degree) {
            return Ok(Arc::clone(j));
        }
        let mut cache = self.bases.write().expect("basis cache poisoned");
        while cache.len() <= degree {
            let k = cache.len();
            let next = self.basis_step(&cache[k - 1], k)?;
            cache.push(Arc::new(next));
        }
        Ok(Arc::clone(&cache[degree]))
    }

    /// Compresses the recursion for `p_k` to `range(p_{k-1}) ⊗ C^N` and keeps the
    /// eigenvalue-one eigenvectors.
    fn basis_step(&self, prev: &CMat, k: usize) -> Result<CMat> {
        let n = self.n;
        let d_prev = prev.ncols();
        let outer = n.pow(k as u32 - 2);
        let b = CMat::from_fn(d_prev * n, outer, |row, kappa| {
            let (r, i) = (row / n, row % n);
            prev[(kappa * n + i, r)].conj()
        });
        let c = self.qdim_f64(k - 2) / self.qdim_f64(k - 1);
        let g = linalg::identity(d_prev * n) - linalg::cmul(&b, &b.adjoint()) * Complex64::new(c, 0.0);
        // Everything is real for F = I_N; a real eigensolver keeps the basis real, which
        // lets later products skip their imaginary halves.
        if g.iter().any(|z| z.im.abs() > 1e-12) {
            return Err(Error::Numerical(format!("compressed p_{k} is not real")));
        }
        let eig = g.map(|z| z.re).symmetric_eigen();
        let keep: Vec<usize> = (0..eig.eigenvalues.len())
            .filter(|&i| eig.eigenvalues[i] > 0.5)
            .collect();
        let expected = self.qdim(k);
        if keep.len() != expected {
            return Err(Error::Numerical(format!(
                "range of p_{k} has dimension {} instead of {expected}",
                keep.len()
            )));
        }
        let y = eig.eigenvectors.select_columns(&keep).map(|x| Complex64::new(x, 0.0));
        let (j, _) = apply_to_legs(&y, &[d_prev, n], 0, 1, prev);
        Ok(j)
    }

    /// `v_γ^{a,b}` in reduced coordinates, built as the projected nested cup.
    pub fn intertwiner(&self, a: usize, b: usize, gamma: usize) -> Result<Arc<Intertwiner>> {
        if !fuses_into(a, b, gamma) {
            return Err(Error::ZeroIntertwinerSpace { a, b, gamma });
        }
        for deg in [a, b, gamma] {
            self.check_degree(deg)?;
        }
        let key = (a, b, gamma);
        if let Some(v) = self.intertwiners.read().expect("intertwiner cache poisoned").get(&key) {
            return Ok(Arc::clone(v));
        }
        let built = Arc::new(self.build_intertwiner(a, b, gamma)?);
        let mut cache = self.intertwiners.write().expect("intertwiner cache poisoned");
        Ok(Arc::clone(cache.entry(key).or_insert(built)))
    }

    /// Unnormalized `(J_a ⊗ J_b)* (1 ⊗ T_m ⊗ 1) J_γ` with `T_m = Σ_κ e_κ ⊗ e_{rev κ}`.
    fn raw_intertwiner(&self, a: usize, b: usize, gamma: usize) -> Result<CMat> {
        let n = self.n;
        let m = (a + b - gamma) / 2;
        let (ja, jb, jg) = (self.basis(a)?, self.basis(b)?, self.basis(gamma)?);
        let (da, db, dg) = (ja.ncols(), jb.ncols(), jg.ncols());
        let outer_a = n.pow((a - m) as u32);
        let inner = n.pow(m as u32);
        let outer_b = n.pow((b - m) as u32);

        let gamma_rows = CMat::from_fn(outer_a, outer_b * dg, |alpha, col| {
            let (beta, g) = (col / dg, col % dg);
            jg[(alpha * outer_b + beta, g)]
        });
        let mut z = CMat::zeros(da * dg, inner * outer_b);
        for kappa in 0..inner {
            let ja_k = CMat::from_fn(outer_a, da, |alpha, r| ja[(alpha * inner + kappa, r)]);
            let zk = linalg::cmul_adj(&ja_k, &gamma_rows);
            for r in 0..da {
                for beta in 0..outer_b {
                    for g in 0..dg {
                        z[(r * dg + g, kappa * outer_b + beta)] = zk[(r, beta * dg + g)];
                    }
                }
            }
        }
        let jb_rev = CMat::from_fn(inner * outer_b, db, |row, s| {
            let (kappa, beta) = (row / outer_b, row % outer_b);
            let rk = linalg::reverse_digits(kappa, n, m);
            jb[(rk * outer_b + beta, s)].conj()
        });
        let p = linalg::cmul(&z, &jb_rev);
        Ok(CMat::from_fn(da * db, dg, |row, g| {
            let (r, s) = (row / db, row % db);
            p[(r * dg + g, s)]
        }))
    }

    fn build_intertwiner(&self, a: usize, b: usize, gamma: usize) -> Result<Intertwiner> {
        let raw = self.raw_intertwiner(a, b, gamma)?;
        let gram = raw.adjoint() * &raw;
        let dg = gram.nrows();
        let scale = (0..dg).map(|i| gram[(i, i)].re).sum::<f64>() / dg as f64;
        if !(scale > 0.0) {
            return Err(Error::ZeroIntertwinerSpace { a, b, gamma });
        }
        let defect = linalg::max_abs_diff(&gram, &(linalg::identity(dg) * Complex64::new(scale, 0.0)));
        if defect > 1e-8 * scale {
            return Err(Error::Numerical(format!(
                "W*W is not scalar for (a, b, gamma) = ({a}, {b}, {gamma}): defect {defect:e}"
            )));
        }
        Ok(Intertwiner {
            a,
            b,
            gamma,
            v: raw / Complex64::new(scale.sqrt(), 0.0),
            scale,
            dim_b: self.qdim(b),
        })
    }

    /// `t_j ∈ H_j ⊗ H_j` in reduced coordinates, with `‖t_j‖² = D_j`.
    pub fn cup(&self, j: usize) -> Result<Vec<Complex64>> {
        self.check_degree(j)?;
        Ok(self.raw_intertwiner(j, j, 0)?.column(0).iter().copied().collect())
    }

    /// `v_γ^{a,b}` as a full morphism `(C^N)^{⊗γ} → (C^N)^{⊗(a+b)}`.
    pub fn iso_intertwiner(&self, a: usize, b: usize, gamma: usize) -> Result<TLMorphism> {
        self.check_degree(a + b)?;
        let v = self.intertwiner(a, b, gamma)?;
        let (ja, jb, jg) = (self.basis(a)?, self.basis(b)?, self.basis(gamma)?);
        let full = ja.kronecker(&*jb) * &v.v * jg.adjoint();
        TLMorphism::new(self.n, gamma, a + b, full)
    }

    /// Norm of `M_k^+` restricted to `B(H_l) ⊗ B(H_k)` for the normalized trace inner
    /// products, by power iteration and by evaluation at `v v*`.
    pub fn m_plus(&self, k: usize, l: usize, seed: u64) -> Result<MPlusNorm> {
        let v = self.intertwiner(l, k, l + k)?;
        let v = &v.v;
        let (dl, dk, dlk) = (self.qdim_f64(l), self.qdim_f64(k), self.qdim_f64(l + k));
        let weight_in = dl * dk;
        let forward = |x: &CMat| v.adjoint() * x * v;
        let ratio = |x: &CMat| {
            let y = forward(x);
            (linalg::frobenius_sq(&y) / dlk) / (linalg::frobenius_sq(x) / weight_in)
        };

        let dim = v.nrows();
        let mut x = linalg::gaussian(dim, dim, &mut linalg::rng(seed));
        let mut estimate = ratio(&x);
        for _ in 0..200 {
            let y = v * forward(&x) * v.adjoint();
            let norm = linalg::frobenius_sq(&y).sqrt();
            if norm == 0.0 {
                break;
            }
            x = y / Complex64::new(norm, 0.0);
            let next = ratio(&x);
            let done = (next - estimate).abs() <= 1e-15 * next;
            estimate = next;
            if done {
                break;
            }
        }
        let vv = v * v.adjoint();
        Ok(MPlusNorm {
            k,
            l,
            norm_sq: estimate,
            norm_sq_at_vv: ratio(&vv),
            expected: weight_in / dlk,
        })
    }

    /// Compares the adjoint of `M_k^+` on `B(H_l) ⊗ B(H_k)` with
    /// `(D_l D_k / D_{l+k}) Ad(v*)`.
    pub fn adjoint_m_plus(&self, k: usize, l: usize, seed: u64, probes: usize) -> Result<AdjointCheck> {
        let v = self.intertwiner(l, k, l + k)?;
        let v = &v.v;
        let (dl, dk, dlk) = (self.qdim_f64(l), self.qdim_f64(k), self.qdim_f64(l + k));
        let factor = Complex64::new(dl * dk / dlk, 0.0);
        let forward = |x: &CMat| v.adjoint() * x * v;
        let backward = |y: &CMat| v * y * v.adjoint() * factor;

        let mut rng = linalg::rng(seed);
        let (din, dout) = (v.nrows(), v.ncols());
        let mut probe_defect: f64 = 0.0;
        for _ in 0..probes {
            let x = linalg::gaussian(din, din, &mut rng);
            let y = linalg::gaussian(dout, dout, &mut rng);
            let lhs = linalg::hs_inner(&forward(&x), &y) / dlk;
            let rhs = linalg::hs_inner(&x, &backward(&y)) / (dl * dk);
            let scale = (linalg::frobenius_sq(&x) / (dl * dk)).sqrt() * (linalg::frobenius_sq(&y) / dlk).sqrt();
            probe_defect = probe_defect.max((lhs - rhs).norm() / scale);
        }

        let matrix_defect = (din * din * dout * dout <= 400_000).then(|| {
            // Orthonormal coordinates: E_pq √(D_l D_k) on the source, E_rs √D_{l+k} on the target.
            let s_in = (dl * dk).sqrt();
            let s_out = dlk.sqrt();
            let unit = |dim: usize, idx: usize| {
                let mut e = CMat::zeros(dim, dim);
                e[(idx / dim, idx % dim)] = ONE;
                e
            };
            let mut m = CMat::zeros(dout * dout, din * din);
            for col in 0..din * din {
                let image = forward(&unit(din, col));
                for row in 0..dout * dout {
                    m[(row, col)] = image[(row / dout, row % dout)] * (s_in / s_out);
                }
            }
            let mut f = CMat::zeros(din * din, dout * dout);
            for col in 0..dout * dout {
                let image = backward(&unit(dout, col));
                for row in 0..din * din {
                    f[(row, col)] = image[(row / din, row % din)] * (s_out / s_in);
                }
            }
            linalg::max_abs_diff(&m.adjoint(), &f)
        });

        Ok(AdjointCheck {
            k,
            l,
            probe_defect,
            matrix_defect,
        })
    }

    /// `‖T_B‖² / ‖T_A‖²` with
    /// `T_A = (v_+^{d-j,j} ⊗ v_+^{j,0} ⊗ ι_k)(ι_{d-j} ⊗ t_j ⊗ ι_k) v^{d-j,k}_{d-j+k}` and
    /// `T_B = (v_+^{d-j,j} ⊗ v_+^{j,k})(ι_{d-j} ⊗ t_j ⊗ ι_k) v^{d-j,k}_{d-j+k}`.
    pub fn morphism_norm_ratio(&self, j: usize, d: usize, k: usize) -> Result<NormRatio> {
        if j > d {
            return Err(Error::IndexOutOfRange(format!("j = {j} exceeds d = {d}")));
        }
        let (dl, dj, dk) = (self.qdim(d - j), self.qdim(j), self.qdim(k));
        let start = self.intertwiner(d - j, k, d - j + k)?;
        let t = self.cup(j)?;
        let (x, _) = insert_leg(&start.v, &[dl, dk], 1, &t);
        let legs = [dl, dj, dj, dk];

        let left = self.intertwiner(d - j, j, d)?.v.adjoint();
        let (x, legs) = apply_to_legs(&x, &legs, 0, 2, &left);
        let trivial = self.intertwiner(j, 0, j)?.v.adjoint();
        let (t_a, legs) = apply_to_legs(&x, &legs, 1, 1, &trivial);
        let right = self.intertwiner(j, k, j + k)?.v.adjoint();
        let (t_b, _) = apply_to_legs(&t_a, &legs, 1, 2, &right);

        let t_a_sq = linalg::spectral_norm(&t_a).powi(2);
        let t_b_sq = linalg::spectral_norm(&t_b).powi(2);
        Ok(NormRatio {
            j,
            d,
            k,
            t_a_sq,
            t_b_sq,
            ratio: t_b_sq / t_a_sq,
        })
    }
}
