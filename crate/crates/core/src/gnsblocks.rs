//! Truncated GNS model `⊕_{k ≤ K} B(H_k)` of `C_red(O_N^+)` with operator-valued elements.
//!
//! `B(H_k)` carries `⟨A, B⟩_k = Tr(A* B)/D_k`. An element `X = Σ T_i ⊗ x_i` is stored per
//! degree `l` as one matrix on `C^m ⊗ H_l` (the sum of the Kronecker products `T_i ⊗ x_i`),
//! and a vector of `C^m ⊗ H` as `m` matrices per degree.
//!
//! The degree-`l` part acts on `B(H_b)` through `Ad(v_a^{l,b})` for every `a ∈ l ⊗ b`.
//! With `V_α` the rows `α D_b .. (α+1) D_b` of `v`, the channel is
//! `ξ ↦ Σ_{α,α'} x[α,α'] V_α* ξ V_{α'}`, which is evaluated with three matrix products.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};

use num_complex::Complex64;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::chebyshev;
use crate::coeffs::CoeffBundle;
use crate::error::{Error, Result};
use crate::fusion::{fuse, fuses_into};
use crate::linalg::{self, cmul, CMat};
use crate::report::{Check, VerificationReport};
use crate::tlcat::TensorOracle;

/// Blocks whose source has at most this many real-orthonormal coordinates get a dense SVD.
const DENSE_COLUMNS: usize = 1024;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// The `(l, b) → a` channel with its intertwiner in the two layouts the kernel needs.
#[derive(Debug)]
struct Channel {
    dl: usize,
    db: usize,
    da: usize,
    v: CMat,
    v_adj: CMat,
    /// `[V_0 V_1 …]`, shape `D_b × D_l D_a`.
    vh: CMat,
    vh_adj: CMat,
}

impl Channel {
    /// `ξ_p ↦ Σ_q Σ_{α,α'} x_{pq}[α,α'] V_α* ξ_q V_{α'}` for `x` on `C^m ⊗ H_l`.
    fn forward(&self, x: &CMat, xi: &[CMat]) -> Vec<CMat> {
        let (dl, db, da, m) = (self.dl, self.db, self.da, xi.len());
        let mut ymat = CMat::zeros(m * dl, db * da);
        for (q, xq) in xi.iter().enumerate() {
            let y = cmul(xq, &self.vh);
            for alpha in 0..dl {
                for r in 0..db {
                    for col in 0..da {
                        ymat[(q * dl + alpha, r * da + col)] = y[(r, alpha * da + col)];
                    }
                }
            }
        }
        let w = cmul(x, &ymat);
        (0..m)
            .map(|p| {
                let wv = CMat::from_fn(dl * db, da, |row, col| {
                    w[(p * dl + row / db, (row % db) * da + col)]
                });
                cmul(&self.v_adj, &wv)
            })
            .collect()
    }

    /// Frobenius adjoint of [`forward`](Self::forward); `x_adj` is `x*`.
    fn backward(&self, x_adj: &CMat, eta: &[CMat]) -> Vec<CMat> {
        let (dl, db, da, m) = (self.dl, self.db, self.da, eta.len());
        let mut umat = CMat::zeros(m * dl, db * da);
        for (p, ep) in eta.iter().enumerate() {
            let u = cmul(&self.v, ep);
            for alpha in 0..dl {
                for r in 0..db {
                    for col in 0..da {
                        umat[(p * dl + alpha, r * da + col)] = u[(alpha * db + r, col)];
                    }
                }
            }
        }
        let z = cmul(x_adj, &umat);
        (0..m)
            .map(|q| {
                let zh = CMat::from_fn(db, dl * da, |r, col| {
                    let (alpha, cc) = (col / da, col % da);
                    z[(q * dl + alpha, r * da + cc)]
                });
                cmul(&zh, &self.vh_adj)
            })
            .collect()
    }
}

/// `⊕_{k ≤ K_max} B(H_k)` at `F = I_N`, backed by the tensor oracle.
#[derive(Debug)]
pub struct GnsTruncation {
    oracle: Arc<TensorOracle>,
    coeffs: CoeffBundle,
    k_max: usize,
    channels: RwLock<HashMap<(usize, usize, usize), Arc<Channel>>>,
}

/// Operator-valued element `X ∈ M_m ⊗ Pol(O_N^+)`, stored per degree.
#[derive(Debug, Clone, PartialEq)]
pub struct GnsElement {
    aux_dim: usize,
    components: BTreeMap<usize, CMat>,
}

/// A vector of `C^m ⊗ ⊕_k B(H_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GnsVector {
    aux_dim: usize,
    blocks: BTreeMap<usize, Vec<CMat>>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PowerEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl GnsElement {
    pub fn zero(aux_dim: usize) -> Self {
        Self {
            aux_dim,
            components: BTreeMap::new(),
        }
    }

    /// `1 ⊗ x` style element supported in one degree; `x` acts on `C^m ⊗ H_degree`.
    pub fn homogeneous(aux_dim: usize, degree: usize, x: CMat) -> Self {
        let mut components = BTreeMap::new();
        components.insert(degree, x);
        Self { aux_dim, components }
    }

    /// `Σ T_i ⊗ x_i` from `(T_i, degree, x_i)` triples.
    pub fn from_terms(trunc: &GnsTruncation, aux_dim: usize, terms: &[(CMat, usize, CMat)]) -> Result<Self> {
        let mut out = Self::zero(aux_dim);
        for (t, degree, x) in terms {
            trunc.oracle.check_degree(*degree)?;
            let dl = trunc.dim(*degree);
            if t.shape() != (aux_dim, aux_dim) || x.shape() != (dl, dl) {
                return Err(Error::DegreeMismatch(format!(
                    "term of degree {degree} needs T: {aux_dim}x{aux_dim} and x: {dl}x{dl}"
                )));
            }
            let piece = t.kronecker(x);
            out.components
                .entry(*degree)
                .and_modify(|acc| *acc += &piece)
                .or_insert(piece);
        }
        Ok(out)
    }

    /// Seeded complex Gaussian element supported on `degrees`.
    pub fn random(trunc: &GnsTruncation, aux_dim: usize, degrees: &[usize], seed: u64) -> Result<Self> {
        let mut rng = linalg::rng(seed);
        let mut components = BTreeMap::new();
        for &l in degrees {
            trunc.oracle.check_degree(l)?;
            let dim = aux_dim * trunc.dim(l);
            components.insert(l, linalg::gaussian(dim, dim, &mut rng));
        }
        Ok(Self { aux_dim, components })
    }

    pub fn aux_dim(&self) -> usize {
        self.aux_dim
    }

    pub fn degrees(&self) -> impl Iterator<Item = usize> + '_ {
        self.components.keys().copied()
    }

    pub fn component(&self, degree: usize) -> Option<&CMat> {
        self.components.get(&degree)
    }

    pub fn max_degree(&self) -> Option<usize> {
        self.components.keys().next_back().copied()
    }

    /// `X^d = (ι ⊗ m_{p_d})(X)`.
    pub fn project_d(&self, d: usize) -> GnsElement {
        let mut components = BTreeMap::new();
        if let Some(x) = self.components.get(&d) {
            components.insert(d, x.clone());
        }
        Self {
            aux_dim: self.aux_dim,
            components,
        }
    }

    pub fn add(&self, other: &GnsElement) -> Result<GnsElement> {
        if self.aux_dim != other.aux_dim {
            return Err(Error::DegreeMismatch("auxiliary dimensions differ".into()));
        }
        let mut out = self.clone();
        for (l, x) in &other.components {
            out.components
                .entry(*l)
                .and_modify(|acc| *acc += x)
                .or_insert_with(|| x.clone());
        }
        Ok(out)
    }

    pub fn is_zero(&self) -> bool {
        self.components.values().all(|x| x.iter().all(|z| *z == Complex64::new(0.0, 0.0)))
    }
}

impl GnsVector {
    pub fn zero(aux_dim: usize) -> Self {
        Self {
            aux_dim,
            blocks: BTreeMap::new(),
        }
    }

    pub fn single(degree: usize, parts: Vec<CMat>) -> Self {
        let aux_dim = parts.len();
        let mut blocks = BTreeMap::new();
        blocks.insert(degree, parts);
        Self { aux_dim, blocks }
    }

    pub fn random(trunc: &GnsTruncation, aux_dim: usize, degrees: &[usize], seed: u64) -> Result<Self> {
        let mut rng = linalg::rng(seed);
        let mut blocks = BTreeMap::new();
        for &b in degrees {
            trunc.check_within(b)?;
            let db = trunc.dim(b);
            blocks.insert(b, (0..aux_dim).map(|_| linalg::gaussian(db, db, &mut rng)).collect());
        }
        Ok(Self { aux_dim, blocks })
    }

    pub fn aux_dim(&self) -> usize {
        self.aux_dim
    }

    pub fn component(&self, degree: usize) -> Option<&[CMat]> {
        self.blocks.get(&degree).map(Vec::as_slice)
    }

    pub fn degrees(&self) -> impl Iterator<Item = usize> + '_ {
        self.blocks.keys().copied()
    }

    fn accumulate(&mut self, degree: usize, parts: Vec<CMat>) {
        match self.blocks.get_mut(&degree) {
            Some(acc) => {
                for (a, p) in acc.iter_mut().zip(parts) {
                    *a += p;
                }
            }
            None => {
                self.blocks.insert(degree, parts);
            }
        }
    }

    pub fn add(&self, other: &GnsVector) -> GnsVector {
        let mut out = self.clone();
        for (b, parts) in &other.blocks {
            out.accumulate(*b, parts.clone());
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> GnsVector {
        GnsVector {
            aux_dim: self.aux_dim,
            blocks: self
                .blocks
                .iter()
                .map(|(b, parts)| (*b, parts.iter().map(|p| p * s).collect()))
                .collect(),
        }
    }

    pub fn sub(&self, other: &GnsVector) -> GnsVector {
        self.add(&other.scale(c(-1.0)))
    }

    /// `Σ_k Σ_p ⟨ξ_{k,p}, η_{k,p}⟩_k`.
    pub fn inner(&self, other: &GnsVector, trunc: &GnsTruncation) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (b, parts) in &self.blocks {
            if let Some(theirs) = other.blocks.get(b) {
                let w = trunc.weight(*b);
                for (x, y) in parts.iter().zip(theirs) {
                    acc += linalg::hs_inner(x, y) / w;
                }
            }
        }
        acc
    }

    pub fn norm(&self, trunc: &GnsTruncation) -> f64 {
        self.blocks
            .iter()
            .map(|(b, parts)| parts.iter().map(linalg::frobenius_sq).sum::<f64>() / trunc.weight(*b))
            .sum::<f64>()
            .sqrt()
    }

    /// `‖self - other‖ / max(‖other‖, floor)` in the weighted norm.
    pub fn rel_diff(&self, other: &GnsVector, trunc: &GnsTruncation, floor: f64) -> f64 {
        self.sub(other).norm(trunc) / other.norm(trunc).max(floor)
    }
}

impl GnsTruncation {
    pub fn new(n: u32, k_max: usize) -> Result<Self> {
        let oracle = Arc::new(TensorOracle::new(n, k_max)?);
        Self::with_oracle(oracle, k_max)
    }

    /// Shares an oracle; its degree cap must cover `K_max`.
    pub fn with_oracle(oracle: Arc<TensorOracle>, k_max: usize) -> Result<Self> {
        oracle.check_degree(k_max)?;
        let coeffs = CoeffBundle::with_dims(
            crate::fusion::DeformationParameter::kac(oracle.n() as u32)?,
            Arc::clone(oracle.dims()),
        );
        Ok(Self {
            oracle,
            coeffs,
            k_max,
            channels: RwLock::new(HashMap::new()),
        })
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn oracle(&self) -> &Arc<TensorOracle> {
        &self.oracle
    }

    pub fn coeffs(&self) -> &CoeffBundle {
        &self.coeffs
    }

    pub fn dim(&self, k: usize) -> usize {
        self.oracle.qdim(k)
    }

    pub fn weight(&self, k: usize) -> f64 {
        self.oracle.qdim_f64(k)
    }

    /// `⟨A, B⟩_k = Tr(A* B)/D_k`.
    pub fn inner(&self, k: usize, a: &CMat, b: &CMat) -> Complex64 {
        linalg::hs_inner(a, b) / self.weight(k)
    }

    fn check_within(&self, k: usize) -> Result<()> {
        if k > self.k_max {
            Err(Error::TruncationOverflow {
                channels: vec![k],
                k_max: self.k_max,
            })
        } else {
            Ok(())
        }
    }

    fn channel(&self, l: usize, b: usize, a: usize) -> Result<Arc<Channel>> {
        let key = (l, b, a);
        if let Some(ch) = self.channels.read().expect("channel cache poisoned").get(&key) {
            return Ok(Arc::clone(ch));
        }
        let v = self.oracle.intertwiner(l, b, a)?.v.clone();
        let (dl, db, da) = (self.dim(l), self.dim(b), self.dim(a));
        let vh = CMat::from_fn(db, dl * da, |r, col| v[((col / da) * db + r, col % da)]);
        let ch = Arc::new(Channel {
            dl,
            db,
            da,
            v_adj: v.adjoint(),
            vh_adj: vh.adjoint(),
            v,
            vh,
        });
        let mut cache = self.channels.write().expect("channel cache poisoned");
        Ok(Arc::clone(cache.entry(key).or_insert(ch)))
    }

    /// `π_h(x)ξ = Σ_{γ ⊂ d ⊗ b} Ad(v_γ^{d,b})(x ⊗ ξ)` for scalar `x ∈ B(H_d)`, `ξ ∈ B(H_b)`.
    pub fn gns_action(&self, d: usize, x: &CMat, b: usize, xi: &CMat) -> Result<BTreeMap<usize, CMat>> {
        let overflow: Vec<usize> = fuse(d, b).into_iter().filter(|&g| g > self.k_max).collect();
        if !overflow.is_empty() {
            return Err(Error::TruncationOverflow {
                channels: overflow,
                k_max: self.k_max,
            });
        }
        self.check_within(d)?;
        let mut out = BTreeMap::new();
        for g in fuse(d, b) {
            let ch = self.channel(d, b, g)?;
            let mut image = ch.forward(x, std::slice::from_ref(xi));
            out.insert(g, image.pop().expect("one auxiliary component"));
        }
        Ok(out)
    }

    /// The same action evaluated with full matrices on `(C^N)^{⊗(d+b)}`; needs `d + b`
    /// within the oracle cap. Independent of the reduced kernel.
    pub fn gns_action_full(&self, d: usize, x: &CMat, b: usize, xi: &CMat) -> Result<BTreeMap<usize, CMat>> {
        let (jd, jb) = (self.oracle.basis(d)?, self.oracle.basis(b)?);
        let x_full = cmul(&cmul(&jd, x), &jd.adjoint());
        let xi_full = cmul(&cmul(&jb, xi), &jb.adjoint());
        let both = x_full.kronecker(&xi_full);
        let mut out = BTreeMap::new();
        for g in fuse(d, b) {
            self.check_within(g)?;
            let v = self.oracle.iso_intertwiner(d, b, g)?;
            let jg = self.oracle.basis(g)?;
            let img = cmul(&cmul(&v.matrix().adjoint(), &both), v.matrix());
            out.insert(g, cmul(&cmul(&jg.adjoint(), &img), &jg));
        }
        Ok(out)
    }

    fn check_aux(&self, x: &GnsElement, xi: &GnsVector) -> Result<()> {
        if x.aux_dim != xi.aux_dim {
            return Err(Error::DegreeMismatch(format!(
                "element has aux dimension {}, vector has {}",
                x.aux_dim, xi.aux_dim
            )));
        }
        Ok(())
    }

    /// `B_{a,b}(X)` applied to `ξ ∈ C^m ⊗ B(H_b)`.
    pub fn apply_block(&self, a: usize, b: usize, x: &GnsElement, xi: &[CMat]) -> Result<Vec<CMat>> {
        self.check_within(a)?;
        self.check_within(b)?;
        let da = self.dim(a);
        let mut out: Vec<CMat> = (0..xi.len()).map(|_| CMat::zeros(da, da)).collect();
        for (l, xl) in &x.components {
            if fuses_into(*l, b, a) {
                let ch = self.channel(*l, b, a)?;
                for (acc, part) in out.iter_mut().zip(ch.forward(xl, xi)) {
                    *acc += part;
                }
            }
        }
        Ok(out)
    }

    /// Adjoint of `B_{a,b}(X)` for the weighted inner products.
    pub fn apply_block_adjoint(&self, a: usize, b: usize, x: &GnsElement, eta: &[CMat]) -> Result<Vec<CMat>> {
        self.check_within(a)?;
        self.check_within(b)?;
        let db = self.dim(b);
        let ratio = c(self.weight(b) / self.weight(a));
        let mut out: Vec<CMat> = (0..eta.len()).map(|_| CMat::zeros(db, db)).collect();
        for (l, xl) in &x.components {
            if fuses_into(*l, b, a) {
                let ch = self.channel(*l, b, a)?;
                for (acc, part) in out.iter_mut().zip(ch.backward(&xl.adjoint(), eta)) {
                    *acc += part * ratio;
                }
            }
        }
        Ok(out)
    }

    /// The compression `P_K X P_K`: channels above `K_max` are dropped.
    pub fn apply(&self, x: &GnsElement, xi: &GnsVector) -> Result<GnsVector> {
        self.check_aux(x, xi)?;
        let mut out = GnsVector::zero(xi.aux_dim);
        for (b, parts) in &xi.blocks {
            for l in x.degrees() {
                for a in fuse(l, *b).into_iter().filter(|&a| a <= self.k_max) {
                    let ch = self.channel(l, *b, a)?;
                    out.accumulate(a, ch.forward(&x.components[&l], parts));
                }
            }
        }
        Ok(out)
    }

    pub fn apply_adjoint(&self, x: &GnsElement, eta: &GnsVector) -> Result<GnsVector> {
        self.check_aux(x, eta)?;
        let mut out = GnsVector::zero(eta.aux_dim);
        for (a, parts) in &eta.blocks {
            for l in x.degrees() {
                let x_adj = x.components[&l].adjoint();
                for b in fuse(l, *a).into_iter().filter(|&b| b <= self.k_max) {
                    let ch = self.channel(l, b, *a)?;
                    let ratio = c(self.weight(b) / self.weight(*a));
                    let image = ch.backward(&x_adj, parts).into_iter().map(|p| p * ratio).collect();
                    out.accumulate(b, image);
                }
            }
        }
        Ok(out)
    }

    /// `X ξ` where every channel must stay inside the truncation.
    pub fn apply_exact(&self, x: &GnsElement, xi: &GnsVector) -> Result<GnsVector> {
        let mut overflow = Vec::new();
        for b in xi.degrees() {
            for l in x.degrees() {
                overflow.extend(fuse(l, b).into_iter().filter(|&a| a > self.k_max));
            }
        }
        if !overflow.is_empty() {
            overflow.sort_unstable();
            overflow.dedup();
            return Err(Error::TruncationOverflow {
                channels: overflow,
                k_max: self.k_max,
            });
        }
        self.apply(x, xi)
    }

    fn unit_parts(&self, b: usize, aux: usize, index: usize) -> Vec<CMat> {
        let db = self.dim(b);
        let (p, entry) = (index / (db * db), index % (db * db));
        let scale = c(self.weight(b).sqrt());
        (0..aux)
            .map(|q| {
                let mut m = CMat::zeros(db, db);
                if q == p {
                    m[(entry / db, entry % db)] = scale;
                }
                m
            })
            .collect()
    }

    fn coords(&self, a: usize, parts: &[CMat]) -> Vec<Complex64> {
        let s = c(self.weight(a).sqrt().recip());
        parts.iter().flat_map(|p| p.transpose().iter().map(|z| z * s).collect::<Vec<_>>()).collect()
    }

    fn from_coords(&self, b: usize, aux: usize, coords: &[Complex64]) -> Vec<CMat> {
        let db = self.dim(b);
        let s = c(self.weight(b).sqrt());
        (0..aux)
            .map(|p| CMat::from_fn(db, db, |r, col| coords[p * db * db + r * db + col] * s))
            .collect()
    }

    /// `B_{a,b}(X)` as a matrix in orthonormal coordinates.
    pub fn block_matrix(&self, a: usize, b: usize, x: &GnsElement) -> Result<CMat> {
        let aux = x.aux_dim;
        let cols = aux * self.dim(b).pow(2);
        let rows = aux * self.dim(a).pow(2);
        let mut m = CMat::zeros(rows, cols);
        for col in 0..cols {
            let image = self.apply_block(a, b, x, &self.unit_parts(b, aux, col))?;
            for (row, z) in self.coords(a, &image).into_iter().enumerate() {
                m[(row, col)] = z;
            }
        }
        Ok(m)
    }

    /// `‖B_{a,b}(X)‖` and a maximizing unit vector. Dense SVD for small sources,
    /// power iteration otherwise (then a lower estimate).
    pub fn block_norm(&self, a: usize, b: usize, x: &GnsElement, seed: u64) -> Result<(PowerEstimate, Vec<CMat>)> {
        let aux = x.aux_dim;
        if aux * self.dim(b).pow(2) <= DENSE_COLUMNS {
            let m = self.block_matrix(a, b, x)?;
            let (sigma, v) = linalg::top_right_singular(&m);
            let est = PowerEstimate {
                value: sigma,
                iterations: 0,
                converged: true,
            };
            return Ok((est, self.from_coords(b, aux, &v)));
        }
        let start = GnsVector::random(self, aux, &[b], seed)?;
        let fwd = |v: &GnsVector| -> Result<GnsVector> {
            let parts = v.component(b).map(<[CMat]>::to_vec).unwrap_or_default();
            Ok(GnsVector::single(a, self.apply_block(a, b, x, &parts)?))
        };
        let bwd = |v: &GnsVector| -> Result<GnsVector> {
            let parts = v.component(a).map(<[CMat]>::to_vec).unwrap_or_default();
            Ok(GnsVector::single(b, self.apply_block_adjoint(a, b, x, &parts)?))
        };
        let (est, vec) = power_iteration(self, fwd, bwd, start, 300, 1e-12)?;
        let parts = vec.component(b).map(<[CMat]>::to_vec).unwrap_or_default();
        Ok((est, parts))
    }

    /// Norm of the compression `P_K X P_K` by power iteration from `start`.
    pub fn truncated_norm(&self, x: &GnsElement, start: GnsVector, max_iter: usize, tol: f64) -> Result<(PowerEstimate, GnsVector)> {
        power_iteration(self, |v| self.apply(x, v), |v| self.apply_adjoint(x, v), start, max_iter, tol)
    }
}

/// Power iteration on `A*A`. The Rayleigh quotient `‖Aξ‖/‖ξ‖` never decreases, so the
/// estimate is at least its value at `start`.
fn power_iteration<F, B>(
    trunc: &GnsTruncation,
    forward: F,
    backward: B,
    start: GnsVector,
    max_iter: usize,
    tol: f64,
) -> Result<(PowerEstimate, GnsVector)>
where
    F: Fn(&GnsVector) -> Result<GnsVector>,
    B: Fn(&GnsVector) -> Result<GnsVector>,
{
    let norm0 = start.norm(trunc);
    if norm0 == 0.0 {
        return Err(Error::Numerical("power iteration started from zero".into()));
    }
    let mut v = start.scale(c(norm0.recip()));
    let mut image = forward(&v)?;
    let mut value = image.norm(trunc);
    for it in 1..=max_iter {
        let back = backward(&image)?;
        let n = back.norm(trunc);
        if n == 0.0 {
            return Ok((
                PowerEstimate {
                    value: 0.0,
                    iterations: it,
                    converged: true,
                },
                v,
            ));
        }
        let next = back.scale(c(n.recip()));
        let next_image = forward(&next)?;
        let next_value = next_image.norm(trunc);
        let done = (next_value - value).abs() <= tol * next_value;
        if next_value >= value {
            v = next;
            image = next_image;
            value = next_value;
        }
        if done {
            return Ok((
                PowerEstimate {
                    value,
                    iterations: it,
                    converged: true,
                },
                v,
            ));
        }
    }
    Ok((
        PowerEstimate {
            value,
            iterations: max_iter,
            converged: false,
        },
        v,
    ))
}

/// `(B_{a,b}(X) ⊗ ι)(Y)` for `Y ∈ C^m ⊗ B(H_b ⊗ H_k)`.
fn block_tensor_identity(
    trunc: &GnsTruncation,
    a: usize,
    b: usize,
    k: usize,
    x: &GnsElement,
    y: &[CMat],
) -> Result<Vec<CMat>> {
    let (da, db, dk) = (trunc.dim(a), trunc.dim(b), trunc.dim(k));
    let aux = y.len();
    let mut out: Vec<CMat> = (0..aux).map(|_| CMat::zeros(da * dk, da * dk)).collect();
    for s in 0..dk {
        for t in 0..dk {
            let slice: Vec<CMat> = y
                .iter()
                .map(|yp| CMat::from_fn(db, db, |r, rr| yp[(r * dk + s, rr * dk + t)]))
                .collect();
            let image = trunc.apply_block(a, b, x, &slice)?;
            for (o, im) in out.iter_mut().zip(image) {
                for r in 0..da {
                    for rr in 0..da {
                        o[(r * dk + s, rr * dk + t)] = im[(r, rr)];
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `w* [(B_{d-j,j}(X) ⊗ ι)(v ξ v*)] w` with `v = v_{j+k}^{j,k}` and `w = v_{d-j+k}^{d-j,k}`.
fn transferred(
    trunc: &GnsTruncation,
    x: &GnsElement,
    d: usize,
    j: usize,
    k: usize,
    xi: &[CMat],
) -> Result<Vec<CMat>> {
    let v = trunc.oracle.intertwiner(j, k, j + k)?;
    let w = trunc.oracle.intertwiner(d - j, k, d - j + k)?;
    let y: Vec<CMat> = xi.iter().map(|p| cmul(&cmul(&v.v, p), &v.v.adjoint())).collect();
    let z = block_tensor_identity(trunc, d - j, j, k, x, &y)?;
    Ok(z.iter().map(|zp| cmul(&cmul(&w.v.adjoint(), zp), &w.v)).collect())
}

fn parts_rel_diff(trunc: &GnsTruncation, degree: usize, lhs: &[CMat], rhs: &[CMat]) -> f64 {
    GnsVector::single(degree, lhs.to_vec()).rel_diff(&GnsVector::single(degree, rhs.to_vec()), trunc, 1e-300)
}

fn parts_norm(trunc: &GnsTruncation, degree: usize, parts: &[CMat]) -> f64 {
    GnsVector::single(degree, parts.to_vec()).norm(trunc)
}

fn random_parts(trunc: &GnsTruncation, b: usize, aux: usize, seed: u64) -> Vec<CMat> {
    let mut rng = linalg::rng(seed);
    let db = trunc.dim(b);
    (0..aux).map(|_| linalg::gaussian(db, db, &mut rng)).collect()
}

/// Reconstructs `X^d ξ` from the diagonals `X_j^d = Σ_k B_{d-j+k,j+k}(X^d)` and compares
/// with the action computed from full tensor matrices. Also records the completeness
/// defect of each `d ⊗ b` decomposition, which is what forces every other block to vanish.
pub fn verify_block_decomposition(trunc: &GnsTruncation, x: &GnsElement, d: usize, seed: u64) -> Result<VerificationReport> {
    if d > trunc.k_max {
        return Err(Error::TruncationOverflow {
            channels: vec![d],
            k_max: trunc.k_max,
        });
    }
    let xd = x.project_d(d);
    let aux = x.aux_dim;
    let sources: Vec<usize> = (0..=trunc.k_max - d).collect();
    let xi = GnsVector::random(trunc, aux, &sources, seed)?;
    let mut report = VerificationReport::default();

    let mut via_blocks = GnsVector::zero(aux);
    for j in 0..=d {
        for k in 0..=(trunc.k_max - d) {
            let b = j + k;
            if b > trunc.k_max - d {
                continue;
            }
            let a = d - j + k;
            let parts = xi.component(b).expect("probe covers every source").to_vec();
            via_blocks.accumulate(a, trunc.apply_block(a, b, &xd, &parts)?);
        }
    }

    let mut direct = GnsVector::zero(aux);
    let xdd = match xd.component(d) {
        Some(m) => m.clone(),
        None => CMat::zeros(aux * trunc.dim(d), aux * trunc.dim(d)),
    };
    let dd = trunc.dim(d);
    for b in &sources {
        let parts = xi.component(*b).expect("probe covers every source");
        for p in 0..aux {
            for q in 0..aux {
                let xpq = xdd.view((p * dd, q * dd), (dd, dd)).into_owned();
                let images = if d + b <= trunc.oracle.cap() {
                    trunc.gns_action_full(d, &xpq, *b, &parts[q])?
                } else {
                    trunc.gns_action(d, &xpq, *b, &parts[q])?
                };
                for (g, img) in images {
                    let mut slot: Vec<CMat> = (0..aux).map(|_| CMat::zeros(trunc.dim(g), trunc.dim(g))).collect();
                    slot[p] = img;
                    direct.accumulate(g, slot);
                }
            }
        }
    }
    report.push(
        Check::residual("block decomposition reconstruction", via_blocks.rel_diff(&direct, trunc, 1e-300), 1e-10)
            .with_index("d", d)
            .with_index("k_max", trunc.k_max)
            .with_seed(seed),
    );

    for b in &sources {
        let dim = trunc.dim(d) * trunc.dim(*b);
        let mut sum = CMat::zeros(dim, dim);
        for g in fuse(d, *b) {
            let v = trunc.oracle.intertwiner(d, *b, g)?;
            sum += cmul(&v.v, &v.v.adjoint());
        }
        let defect = linalg::max_abs_diff(&sum, &linalg::identity(dim));
        report.push(
            Check::residual("channels of d (x) b exhaust H_d (x) H_b", defect, 1e-10 * dim as f64)
                .with_index("d", d)
                .with_index("b", *b),
        );
    }
    Ok(report)
}

/// `B_{d-j+k,j+k}(X^d) = λ_j^d(k) (ι ⊗ M_k^+)(B_{d-j,j}(X^d) ⊗ ι)(ι ⊗ M_k^+)*` on a random probe.
pub fn verify_block_transfer(
    trunc: &GnsTruncation,
    x: &GnsElement,
    d: usize,
    j: usize,
    k: usize,
    seed: u64,
) -> Result<VerificationReport> {
    if j > d {
        return Err(Error::IndexOutOfRange(format!("j = {j} exceeds d = {d}")));
    }
    let (a, b) = (d - j + k, j + k);
    let overflow: Vec<usize> = [a, b, d].into_iter().filter(|&g| g > trunc.k_max).collect();
    if !overflow.is_empty() {
        return Err(Error::TruncationOverflow {
            channels: overflow,
            k_max: trunc.k_max,
        });
    }
    let xd = x.project_d(d);
    let xi = random_parts(trunc, b, x.aux_dim, seed);
    let lhs = trunc.apply_block(a, b, &xd, &xi)?;
    let lambda = trunc.coeffs.lambda_coeff(j, d, k)?.to_f64().unwrap_or(f64::NAN);
    let adj = trunc.weight(j) * trunc.weight(k) / trunc.weight(j + k);
    let rhs: Vec<CMat> = transferred(trunc, &xd, d, j, k, &xi)?
        .into_iter()
        .map(|p| p * c(lambda * adj))
        .collect();
    let mut report = VerificationReport::default();
    report.push(
        Check::residual("block transfer", parts_rel_diff(trunc, a, &lhs, &rhs), 1e-8)
            .with_index("d", d)
            .with_index("j", j)
            .with_index("k", k)
            .with_seed(seed),
    );
    Ok(report)
}

/// The recursion `B_{d-j+1,j+1}(X) - A(X) = B_{d-j+1,j+1}(X^{d+2}) + Σ_s C_j^d(s) B_{d-j+1,j+1}(X^{d-2s})`
/// with `A(X) = (ι ⊗ M_1^+)(B_{d-j,j}(X) ⊗ ι)(ι ⊗ N_1^+)*`, plus the per-degree identities
/// `B(X^{d-2s}) = ν_j^d(s) A(X^{d-2s})` and `A(X^{d+2}) = 0`.
pub fn verify_recursion(trunc: &GnsTruncation, x: &GnsElement, d: usize, j: usize, seed: u64) -> Result<VerificationReport> {
    if j > d {
        return Err(Error::IndexOutOfRange(format!("j = {j} exceeds d = {d}")));
    }
    let (a, b) = (d - j + 1, j + 1);
    let overflow: Vec<usize> = [a, b, d + 2].into_iter().filter(|&g| g > trunc.k_max).collect();
    if !overflow.is_empty() {
        return Err(Error::TruncationOverflow {
            channels: overflow,
            k_max: trunc.k_max,
        });
    }
    let s_max = j.min(d - j);
    let allowed: Vec<usize> = (0..=s_max).map(|s| d - 2 * s).chain([d + 2]).collect();
    if let Some(bad) = x.degrees().find(|l| !allowed.contains(l)) {
        return Err(Error::DegreeMismatch(format!(
            "degree {bad} is outside {{d-2s}} and d+2 for (d, j) = ({d}, {j})"
        )));
    }
    let coeffs = &trunc.coeffs;
    let xi = random_parts(trunc, b, x.aux_dim, seed);
    // (N_1^+)* on B(H_{j+1}) is Ad(v*) exactly; A(Y) reuses the k = 1 transfer.
    let a_of = |y: &GnsElement| transferred(trunc, y, d, j, 1, &xi);
    let b_of = |y: &GnsElement| trunc.apply_block(a, b, y, &xi);
    let mut report = VerificationReport::default();
    let tag = |check: Check| check.with_index("d", d).with_index("j", j).with_seed(seed);

    let lhs: Vec<CMat> = b_of(x)?.into_iter().zip(a_of(x)?).map(|(p, q)| p - q).collect();
    let mut rhs = b_of(&x.project_d(d + 2))?;
    for s in 0..=s_max {
        let cs = coeffs.c_coeff(j, d, s)?.value.to_f64().unwrap_or(f64::NAN);
        for (acc, part) in rhs.iter_mut().zip(b_of(&x.project_d(d - 2 * s))?) {
            *acc += part * c(cs);
        }
    }
    report.push(tag(Check::residual("recursion", parts_rel_diff(trunc, a, &lhs, &rhs), 1e-8)));

    for s in 0..=s_max {
        let xl = x.project_d(d - 2 * s);
        if xl.is_zero() {
            continue;
        }
        let nu = coeffs.nu(j, d, s)?.to_f64().unwrap_or(f64::NAN);
        let scaled: Vec<CMat> = a_of(&xl)?.into_iter().map(|p| p * c(nu)).collect();
        report.push(tag(
            Check::residual("recursion per degree: B = nu A", parts_rel_diff(trunc, a, &b_of(&xl)?, &scaled), 1e-8)
                .with_index("s", s),
        ));
    }
    let top = x.project_d(d + 2);
    if !top.is_zero() {
        let ratio = parts_norm(trunc, a, &a_of(&top)?) / parts_norm(trunc, b, &xi);
        report.push(tag(Check::residual("recursion: A(X^{d+2}) = 0", ratio, 1e-10)));
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct HaagerupReport {
    pub d: usize,
    pub corner_norms: Vec<f64>,
    pub truncated_norm: PowerEstimate,
    /// `max_k ‖B_{d-j+k,j+k}(X^d)‖` over the diagonals inside the truncation.
    pub diagonal_norms: Vec<f64>,
    pub k_of_q: f64,
    pub checks: VerificationReport,
}

/// Left inequality `max_j ‖B_{d-j,j}(X^d)‖ ≤ ‖X^d‖` on the truncation, and with
/// `with_diagonals` the blockwise right-hand chain
/// `‖B_{d-j+k,j+k}‖ ≤ χ_j^d(k) ‖B_{d-j,j}‖ ≤ K(q) ‖B_{d-j,j}‖`,
/// `‖X^d‖ ≤ Σ_j ‖X_j^d‖ ≤ K(q)(d+1) max_j ‖B_{d-j,j}‖`.
pub fn haagerup_inequality_check(
    trunc: &GnsTruncation,
    x: &GnsElement,
    d: usize,
    seed: u64,
    power_iters: usize,
    with_diagonals: bool,
) -> Result<HaagerupReport> {
    if d > trunc.k_max {
        return Err(Error::TruncationOverflow {
            channels: vec![d],
            k_max: trunc.k_max,
        });
    }
    let xd = x.project_d(d);
    let mut corner_norms = Vec::with_capacity(d + 1);
    let mut best: Option<(f64, usize, Vec<CMat>)> = None;
    for j in 0..=d {
        let (est, vec) = trunc.block_norm(d - j, j, &xd, seed ^ (j as u64) << 32)?;
        corner_norms.push(est.value);
        if best.as_ref().is_none_or(|(v, _, _)| est.value > *v) {
            best = Some((est.value, j, vec));
        }
    }
    let (max_corner, j_best, vec) = best.expect("at least one corner");
    let start = GnsVector::single(j_best, vec);
    let (global, _) = trunc.truncated_norm(&xd, start, power_iters, 1e-10)?;

    let mut checks = VerificationReport::default();
    let scale = max_corner.max(f64::MIN_POSITIVE);
    checks.push(
        Check::at_most("haagerup left: max corner <= truncated norm", max_corner, global.value, 1e-12 * scale)
            .with_index("d", d)
            .with_seed(seed),
    );

    let k_q = trunc.coeffs.k_of_q()?;
    let mut diagonal_norms = Vec::new();
    if with_diagonals {
        for j in 0..=d {
            let corner = corner_norms[j];
            let mut diag = 0.0f64;
            for k in 0..=trunc.k_max {
                let (a, b) = (d - j + k, j + k);
                if a > trunc.k_max || b > trunc.k_max {
                    break;
                }
                let norm = if k == 0 {
                    corner
                } else {
                    trunc.block_norm(a, b, &xd, seed.wrapping_add(k as u64))?.0.value
                };
                diag = diag.max(norm);
                let chi = trunc.coeffs.chi(j, d, k)?.value;
                let tol = 1e-9 * corner.max(f64::MIN_POSITIVE);
                checks.push(
                    Check::at_most("block bound: chi", norm, chi * corner, tol)
                        .with_index("d", d)
                        .with_index("j", j)
                        .with_index("k", k)
                        .with_seed(seed),
                );
                checks.push(
                    Check::at_most("block bound: K(q)", norm, k_q * corner, tol)
                        .with_index("d", d)
                        .with_index("j", j)
                        .with_index("k", k)
                        .with_seed(seed),
                );
            }
            diagonal_norms.push(diag);
        }
        let sum: f64 = diagonal_norms.iter().sum();
        let tol = 1e-9 * sum.max(f64::MIN_POSITIVE);
        checks.push(Check::at_most("haagerup right: norm <= sum of diagonals", global.value, sum, tol).with_index("d", d).with_seed(seed));
        checks.push(
            Check::at_most("haagerup right: diagonals <= K(q)(d+1) max corner", sum, k_q * (d as f64 + 1.0) * max_corner, tol)
                .with_index("d", d)
                .with_seed(seed),
        );
    }
    Ok(HaagerupReport {
        d,
        corner_norms,
        truncated_norm: global,
        diagonal_norms,
        k_of_q: k_q,
        checks,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LowerBoundReport {
    pub d: usize,
    pub trunc: usize,
    /// `‖T_{d+2} - S_d - T_{-(d+2)}‖` on `span{e_0..e_trunc}`.
    pub literal_operator_norm: f64,
    /// `‖T_{d+2} - S_d + T_{-(d+2)}‖`, the form that equals `π(μ_{d+2} - μ_d)`.
    pub operator_norm: f64,
    /// Largest entry of `(T_{d+2} - S_d + T_{-(d+2)}) - P π(μ_{d+2} - μ_d) P`.
    pub multiplication_defect: f64,
    /// `‖μ_d‖_∞` on `[-2, 2]`.
    pub numerator: f64,
    /// `‖μ_{d+2} - μ_d‖_∞` on `[-2, 2]`.
    pub denominator: f64,
    pub ratio: f64,
    pub bound: f64,
    pub checks: VerificationReport,
}

/// Multiplication by `μ_d` compressed to `span{μ_0, …, μ_trunc}` in `L²([-2,2], semicircle)`:
/// the fusion adjacency matrix `[c ∈ d ⊗ b]`.
pub fn chebyshev_multiplication(d: usize, trunc: usize) -> CMat {
    CMat::from_fn(trunc + 1, trunc + 1, |a, b| {
        if fuses_into(d, b, a) {
            c(1.0)
        } else {
            c(0.0)
        }
    })
}

/// The same compression by Gauss quadrature for the semicircle law, exact for the
/// polynomial degrees involved.
pub fn chebyshev_multiplication_quadrature(d: usize, trunc: usize) -> CMat {
    let nodes = trunc + d + 2;
    let h = std::f64::consts::PI / (nodes as f64 + 1.0);
    let mut m = CMat::zeros(trunc + 1, trunc + 1);
    for i in 1..=nodes {
        let theta = i as f64 * h;
        let x = 2.0 * theta.cos();
        let w = 2.0 / (nodes as f64 + 1.0) * theta.sin().powi(2);
        let mud = chebyshev::eval_mu(d, x);
        let values: Vec<f64> = (0..=trunc).map(|k| chebyshev::eval_mu(k, x)).collect();
        for a in 0..=trunc {
            for b in 0..=trunc {
                m[(a, b)] += c(w * values[a] * mud * values[b]);
            }
        }
    }
    m
}

fn translation_operator(d: usize, trunc: usize, sign_of_backward: f64) -> nalgebra::DMatrix<f64> {
    let n = d + 2;
    let dim = trunc + 1;
    let mut m = nalgebra::DMatrix::<f64>::zeros(dim, dim);
    for i in 0..dim {
        if i + n < dim {
            m[(i + n, i)] += 1.0;
        }
        if i <= d {
            m[(d - i, i)] -= 1.0;
        }
        if i >= n {
            m[(i - n, i)] += sign_of_backward;
        }
    }
    m
}

/// Operator norm of a square matrix, taken block by block over the connected components
/// of its sparsity graph. The translation operators only couple indices in at most two
/// residue classes mod `d + 2`, so the blocks are small.
fn real_spectral_norm(m: nalgebra::DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut component = vec![usize::MAX; n];
    let mut best: f64 = 0.0;
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        component[start] = start;
        let mut members = vec![start];
        let mut next = 0;
        while next < members.len() {
            let i = members[next];
            next += 1;
            for k in 0..n {
                if component[k] == usize::MAX && (m[(i, k)] != 0.0 || m[(k, i)] != 0.0) {
                    component[k] = start;
                    members.push(k);
                }
            }
        }
        let block = m.select_rows(&members).select_columns(&members);
        best = best.max(block.singular_values().max());
    }
    best
}

/// The character lower bound `‖m_{p_d}‖ ≥ ‖χ_d‖ / ‖χ_{d+2} - χ_d‖ ≥ (d+1)/3`.
pub fn lower_bound_check(d: usize, trunc: usize) -> Result<LowerBoundReport> {
    if trunc < d + 10 {
        return Err(Error::ParameterOutOfRange(format!(
            "truncation {trunc} is below d + 10 = {}",
            d + 10
        )));
    }
    let literal = translation_operator(d, trunc, -1.0);
    let corrected = translation_operator(d, trunc, 1.0);
    let literal_operator_norm = real_spectral_norm(literal);

    // P π(μ_{d+2} - μ_d) P on span{e_0..e_trunc}, from the fusion rules.
    let mult = chebyshev_multiplication(d + 2, trunc) - chebyshev_multiplication(d, trunc);
    let multiplication_defect = (0..=trunc)
        .flat_map(|r| (0..=trunc).map(move |col| (r, col)))
        .map(|(r, col)| (corrected[(r, col)] - mult[(r, col)].re).abs())
        .fold(0.0, f64::max);
    let operator_norm = real_spectral_norm(corrected);

    let numerator = chebyshev::sup_norm_interval(&[(1.0, d)])?;
    let denominator = chebyshev::sup_norm_interval(&[(1.0, d + 2), (-1.0, d)])?;
    let ratio = numerator / denominator;
    let bound = (d as f64 + 1.0) / 3.0;

    let mut checks = VerificationReport::default();
    let tag = |check: Check| check.with_index("d", d).with_index("trunc", trunc);
    checks.push(tag(Check::at_most("translation operator norm <= 3", literal_operator_norm, 3.0, 1e-6)));
    checks.push(tag(Check::at_most("corrected translation operator norm <= 3", operator_norm, 3.0, 1e-6)));
    checks.push(tag(Check::residual("translation form = compressed multiplication", multiplication_defect, 0.0)));
    checks.push(tag(Check::at_most("sup norm of mu_{d+2} - mu_d <= 3", denominator, 3.0, 1e-9)));
    checks.push(tag(Check::close("sup norm of mu_d = d+1", numerator, d as f64 + 1.0, 1e-6)));
    checks.push(tag(Check::at_most("ratio >= (d+1)/3", bound, ratio, 1e-9)));
    Ok(LowerBoundReport {
        d,
        trunc,
        literal_operator_norm,
        operator_norm,
        multiplication_defect,
        numerator,
        denominator,
        ratio,
        bound,
        checks,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CharacterReport {
    pub d: usize,
    pub k_max: usize,
    /// Norm of `π(χ_d)` compressed to `span{Θ_k(1) : k ≤ K_max}` in the tensor model.
    pub tensor_norm: f64,
    /// The same compression computed in the Chebyshev model.
    pub chebyshev_norm: f64,
    /// `‖μ_d‖_∞ = d + 1`, the limit as the truncation grows.
    pub sup_norm: f64,
    pub checks: VerificationReport,
}

/// Links the tensor model to the Chebyshev model: `π(χ_d)Θ_b(1) = Σ_{c ∈ d ⊗ b} Θ_c(1)`,
/// so both compressions agree entrywise and in norm.
pub fn character_consistency(trunc: &GnsTruncation, d: usize) -> Result<CharacterReport> {
    let k = trunc.k_max;
    let mut tensor = CMat::zeros(k + 1, k + 1);
    let mut entry_defect: f64 = 0.0;
    let x = linalg::identity(trunc.dim(d));
    for b in 0..=k {
        let xi = linalg::identity(trunc.dim(b));
        let images = match trunc.gns_action(d, &x, b, &xi) {
            Ok(images) => images,
            Err(Error::TruncationOverflow { .. }) => {
                let mut kept = BTreeMap::new();
                for g in fuse(d, b).into_iter().filter(|&g| g <= k) {
                    let ch = trunc.channel(d, b, g)?;
                    kept.insert(g, ch.forward(&x, std::slice::from_ref(&xi)).remove(0));
                }
                kept
            }
            Err(e) => return Err(e),
        };
        for (g, img) in images {
            // Θ_k(1) has unit norm in the Kac case, so the coefficient is ⟨1, img⟩_g.
            let coeff = trunc.inner(g, &linalg::identity(trunc.dim(g)), &img);
            tensor[(g, b)] = coeff;
            entry_defect = entry_defect.max(linalg::max_abs_diff(&img, &(linalg::identity(trunc.dim(g)) * coeff)));
        }
    }
    let model = chebyshev_multiplication_quadrature(d, k);
    let tensor_norm = linalg::spectral_norm(&tensor);
    let chebyshev_norm = linalg::spectral_norm(&model);
    let sup_norm = chebyshev::sup_norm_interval(&[(1.0, d)])?;

    let mut checks = VerificationReport::default();
    let tag = |check: Check| check.with_index("d", d).with_index("k_max", k);
    checks.push(tag(Check::residual("pi(chi_d) maps identities to identities", entry_defect, 1e-10)));
    checks.push(tag(Check::residual(
        "tensor compression = Chebyshev compression",
        linalg::max_abs_diff(&tensor, &model),
        1e-6,
    )));
    checks.push(tag(Check::close("compressed norms agree", tensor_norm, chebyshev_norm, 1e-6)));
    checks.push(tag(Check::at_most("compressed norm <= sup norm", tensor_norm, sup_norm, 1e-9)));
    Ok(CharacterReport {
        d,
        k_max: k,
        tensor_norm,
        chebyshev_norm,
        sup_norm,
        checks,
    })
}
