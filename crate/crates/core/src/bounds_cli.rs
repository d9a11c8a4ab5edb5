//! Approximation nets, tail sums, bound tables, and the suites behind the command line.
//!
//! Quantities that depend on `K_0` are estimates: `K_0` is taken from a finite grid
//! in `t` and `k` (see [`estimate_k0`]).

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use crate::chebyshev;
use crate::coeffs::{self, Bounds, CoeffBundle, So3Bound};
use crate::error::{Error, Result};
use crate::fusion::{fuse, DeformationParameter};
use crate::gnsblocks::{self, GnsElement, GnsTruncation};
use crate::linalg;
use crate::report::{Check, VerificationReport};
use crate::tlcat::TensorOracle;

/// Default lower end of the `t`-range on which `K_0` is estimated.
pub const DEFAULT_T0: f64 = 2.5;
/// `δ` values tabulated for `SO_q(3)`; the first is `√6`.
pub const SO3_DELTAS: [f64; 4] = [2.449_489_742_783_178, 2.2, 3.0, 4.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum NetFamily {
    FreeOrthogonal { n: f64 },
    QuantumAutomorphism { dim_b: f64 },
}

/// One member `a_i(t) = Σ_{k ≤ i} b_k(t) p_k` of an approximation net.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NetSpec {
    pub family: NetFamily,
    pub t: f64,
    pub i: usize,
}

impl NetSpec {
    /// Accepts the closed ranges `t ∈ [2, N]` and `t ∈ [4, dim B]`; coefficients lie in
    /// `(0, 1)` only strictly inside.
    pub fn new(family: NetFamily, t: f64, i: usize) -> Result<Self> {
        match family {
            NetFamily::FreeOrthogonal { n } => {
                if !(n > 2.0) || !(2.0..=n).contains(&t) {
                    return Err(Error::ParameterOutOfRange(format!(
                        "free orthogonal net needs N > 2 and 2 <= t <= N, got N = {n}, t = {t}"
                    )));
                }
            }
            NetFamily::QuantumAutomorphism { dim_b } => {
                if !(dim_b >= 6.0) || !(4.0..=dim_b).contains(&t) {
                    return Err(Error::ParameterOutOfRange(format!(
                        "quantum automorphism net needs dim B >= 6 and 4 <= t <= dim B, got dim B = {dim_b}, t = {t}"
                    )));
                }
            }
        }
        Ok(Self { family, t, i })
    }

    pub fn free_orthogonal(n: f64, t: f64, i: usize) -> Result<Self> {
        Self::new(NetFamily::FreeOrthogonal { n }, t, i)
    }

    pub fn quantum_automorphism(dim_b: f64, t: f64, i: usize) -> Result<Self> {
        Self::new(NetFamily::QuantumAutomorphism { dim_b }, t, i)
    }

    pub fn coefficient(&self, k: usize) -> Result<f64> {
        match self.family {
            NetFamily::FreeOrthogonal { n } => chebyshev::net_coefficient(k, self.t, n),
            NetFamily::QuantumAutomorphism { dim_b } => chebyshev::net_coefficient(2 * k, self.t.sqrt(), dim_b.sqrt()),
        }
    }

    /// Upper end of the `t`-range.
    pub fn top(&self) -> f64 {
        match self.family {
            NetFamily::FreeOrthogonal { n } => n,
            NetFamily::QuantumAutomorphism { dim_b } => dim_b,
        }
    }
}

/// `(k, b_k(t))` for `k ≤ i`.
pub fn net_table(spec: &NetSpec) -> Result<Vec<(usize, f64)>> {
    (0..=spec.i).map(|k| Ok((k, spec.coefficient(k)?))).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct K0Estimate {
    pub t0: f64,
    pub n: f64,
    pub k_max: usize,
    pub grid_points: usize,
    /// `sup b_k(t)(N/t)^k` over the grid.
    pub k0: f64,
    /// Largest `k` at which the running supremum still increased, over all grid points.
    pub last_increase: usize,
    pub stabilized: bool,
}

/// Empirical `K_0(t_0) = sup_{t ∈ [t_0, N), k ≤ k_max} b_k(t)(N/t)^k` on `grid_points`
/// equally spaced `t`. Stabilized when every running supremum stops growing before `k_max`.
pub fn estimate_k0(t0: f64, n: f64, k_max: usize, grid_points: usize) -> Result<K0Estimate> {
    if !(t0 > 2.0 && t0 < n) {
        return Err(Error::ParameterOutOfRange(format!("K_0 needs 2 < t0 < N, got t0 = {t0}, N = {n}")));
    }
    if grid_points == 0 {
        return Err(Error::EmptyInput);
    }
    let mut k0: f64 = 1.0;
    let mut last_increase = 0;
    for g in 0..grid_points {
        let t = t0 + (n - t0) * g as f64 / grid_points as f64;
        let mut running: f64 = 1.0;
        let log_ratio = (n / t).ln();
        for k in 1..=k_max {
            let value = chebyshev::net_coefficient(k, t, n)? * (k as f64 * log_ratio).exp();
            if value > running * (1.0 + 1e-12) {
                running = value;
                last_increase = last_increase.max(k);
            }
        }
        k0 = k0.max(running);
    }
    Ok(K0Estimate {
        t0,
        n,
        k_max,
        grid_points,
        k0,
        last_increase,
        stabilized: last_increase < k_max,
    })
}

/// `Σ_{k ≥ m} k^p r^k` for `p ∈ {0, 1, 2}`, `0 ≤ r < 1`.
fn geometric_moments(r: f64, m: usize) -> [f64; 3] {
    let rm = r.powi(m as i32);
    let mf = m as f64;
    let a0 = 1.0 / (1.0 - r);
    let a1 = r / (1.0 - r).powi(2);
    let a2 = r * (1.0 + r) / (1.0 - r).powi(3);
    [rm * a0, rm * (mf * a0 + a1), rm * (mf * mf * a0 + 2.0 * mf * a1 + a2)]
}

/// `Σ_{k>i} K_0 (t/N)^k P(k)` with `P(k) = K(q)(k+1)(2k+1)` at `q = q(N)`, in closed form.
pub fn tail_sum(i: usize, t: f64, n: f64, k0: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::ParameterOutOfRange(format!("t = {t} must be nonnegative")));
    }
    if t >= n {
        return Err(Error::SeriesDiverges { t, n });
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let k = coeffs::k_of_q(crate::fusion::q_from_delta(n))?;
    let [s0, s1, s2] = geometric_moments(t / n, i + 1);
    Ok(k0 * k * (2.0 * s2 + 3.0 * s1 + s0))
}

/// Smallest `i` with `tail_sum(i) < eps`.
pub fn cutoff_index(eps: f64, t: f64, n: f64, k0: f64) -> Result<usize> {
    if !(eps > 0.0) {
        return Err(Error::ParameterOutOfRange(format!("cutoff {eps} must be positive")));
    }
    let mut i = 0;
    while tail_sum(i, t, n, k0)? >= eps {
        i += 1;
    }
    Ok(i)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Identities,
    Inequalities,
    Tensor,
    Blocks,
    LowerBound,
    Nets,
    Bounds,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Identities,
        Suite::Inequalities,
        Suite::Tensor,
        Suite::Blocks,
        Suite::LowerBound,
        Suite::Nets,
        Suite::Bounds,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Identities => "identities",
            Suite::Inequalities => "inequalities",
            Suite::Tensor => "tensor",
            Suite::Blocks => "blocks",
            Suite::LowerBound => "lower-bound",
            Suite::Nets => "nets",
            Suite::Bounds => "bounds",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s.trim())
            .ok_or_else(|| format!("unknown suite `{}`", s.trim()))
    }
}

/// Comma-separated suite list; empty text is the empty list.
pub fn parse_suites(text: &str) -> std::result::Result<Vec<Suite>, String> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(Suite::from_str)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format `{other}` (expected json or csv)")),
        }
    }
}

/// Every setting as optional, so sources can be layered.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub n: Option<u32>,
    pub delta: Option<String>,
    pub dmax: Option<usize>,
    pub kmax: Option<usize>,
    pub trunc: Option<usize>,
    pub degree_cap: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub suites: Option<Vec<Suite>>,
    pub t: Option<f64>,
    pub t0: Option<f64>,
    pub cutoff: Option<f64>,
    pub gns_kmax: Option<usize>,
    pub seeds: Option<usize>,
    pub aux_dim: Option<usize>,
}

fn parse_field<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e: T::Err| Error::config(Some(line), Some(key), format!("invalid value `{value}`: {e}")))
}

impl Settings {
    /// Parses `key = value` lines. `#` starts a comment; keys use the flag names.
    pub fn parse_config(text: &str) -> Result<Settings> {
        let mut s = Settings::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::config(Some(line), None, format!("expected key = value, got `{content}`")))?;
            let key = key.trim().replace('_', "-");
            let value = value.trim();
            match key.as_str() {
                "n" => s.n = Some(parse_field(line, &key, value)?),
                "delta" => {
                    DeformationParameter::parse(value).map_err(|e| Error::config(Some(line), Some(&key), e.to_string()))?;
                    s.delta = Some(value.to_owned());
                }
                "dmax" => s.dmax = Some(parse_field(line, &key, value)?),
                "kmax" => s.kmax = Some(parse_field(line, &key, value)?),
                "trunc" => s.trunc = Some(parse_field(line, &key, value)?),
                "degree-cap" => s.degree_cap = Some(parse_field(line, &key, value)?),
                "seed" => s.seed = Some(parse_field(line, &key, value)?),
                "tol" => s.tol = Some(parse_field(line, &key, value)?),
                "format" => s.format = Some(parse_field(line, &key, value)?),
                "out" => s.out = Some(PathBuf::from(value)),
                "suites" => {
                    s.suites = Some(parse_suites(value).map_err(|e| Error::config(Some(line), Some(&key), e))?)
                }
                "t" => s.t = Some(parse_field(line, &key, value)?),
                "t0" => s.t0 = Some(parse_field(line, &key, value)?),
                "cutoff" => s.cutoff = Some(parse_field(line, &key, value)?),
                "gns-kmax" => s.gns_kmax = Some(parse_field(line, &key, value)?),
                "seeds" => s.seeds = Some(parse_field(line, &key, value)?),
                "aux-dim" => s.aux_dim = Some(parse_field(line, &key, value)?),
                _ => return Err(Error::config(Some(line), Some(&key), "unknown key")),
            }
        }
        if s.n.is_some() && s.delta.is_some() {
            return Err(Error::config(None, Some("delta"), "set either n or delta, not both"));
        }
        Ok(s)
    }

    /// Fills every unset field of `self` from `lower`.
    pub fn or(self, lower: Settings) -> Settings {
        // A parameter chosen at a higher level wins as a pair.
        let (n, delta) = if self.n.is_some() || self.delta.is_some() {
            (self.n, self.delta)
        } else {
            (lower.n, lower.delta)
        };
        Settings {
            n,
            delta,
            dmax: self.dmax.or(lower.dmax),
            kmax: self.kmax.or(lower.kmax),
            trunc: self.trunc.or(lower.trunc),
            degree_cap: self.degree_cap.or(lower.degree_cap),
            seed: self.seed.or(lower.seed),
            tol: self.tol.or(lower.tol),
            format: self.format.or(lower.format),
            out: self.out.or(lower.out),
            suites: self.suites.or(lower.suites),
            t: self.t.or(lower.t),
            t0: self.t0.or(lower.t0),
            cutoff: self.cutoff.or(lower.cutoff),
            gns_kmax: self.gns_kmax.or(lower.gns_kmax),
            seeds: self.seeds.or(lower.seeds),
            aux_dim: self.aux_dim.or(lower.aux_dim),
        }
    }

    pub fn resolve(self) -> Result<Config> {
        let (param, label) = match (self.n, &self.delta) {
            (Some(_), Some(_)) => return Err(Error::config(None, Some("delta"), "set either n or delta, not both")),
            (Some(n), None) => (
                DeformationParameter::kac(n).map_err(|e| Error::config(None, Some("n"), e.to_string()))?,
                format!("N={n}"),
            ),
            (None, Some(d)) => (
                DeformationParameter::parse(d).map_err(|e| Error::config(None, Some("delta"), e.to_string()))?,
                format!("delta={d}"),
            ),
            (None, None) => (DeformationParameter::kac(3)?, "N=3".to_owned()),
        };
        let config = Config {
            param,
            label,
            dmax: self.dmax.unwrap_or(20),
            kmax: self.kmax.unwrap_or(20),
            trunc: self.trunc.unwrap_or(500),
            degree_cap: self.degree_cap.unwrap_or(crate::tlcat::DEFAULT_DEGREE_CAP),
            seed: self.seed.unwrap_or(0),
            tol: self.tol.unwrap_or(1e-8),
            format: self.format.unwrap_or(Format::Json),
            out: self.out,
            suites: self.suites.unwrap_or_else(|| Suite::ALL.to_vec()),
            t: self.t,
            t0: self.t0.unwrap_or(DEFAULT_T0),
            cutoff: self.cutoff.unwrap_or(1e-6),
            gns_kmax: self.gns_kmax.unwrap_or(5),
            seeds: self.seeds.unwrap_or(4),
            aux_dim: self.aux_dim.unwrap_or(2),
        };
        for (field, ok) in [
            ("tol", config.tol > 0.0),
            ("cutoff", config.cutoff > 0.0),
            ("aux-dim", config.aux_dim >= 1),
            ("degree-cap", config.degree_cap >= 1),
        ] {
            if !ok {
                return Err(Error::config(None, Some(field), "value out of range"));
            }
        }
        Ok(config)
    }
}

/// Resolved run configuration.
#[derive(Debug, Clone, Serialize)]
pub struct Config {
    #[serde(skip)]
    pub param: DeformationParameter,
    pub label: String,
    pub dmax: usize,
    pub kmax: usize,
    pub trunc: usize,
    pub degree_cap: usize,
    pub seed: u64,
    pub tol: f64,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub suites: Vec<Suite>,
    pub t: Option<f64>,
    pub t0: f64,
    pub cutoff: f64,
    pub gns_kmax: usize,
    pub seeds: usize,
    pub aux_dim: usize,
}

impl Default for Config {
    fn default() -> Self {
        Settings::default().resolve().expect("defaults are valid")
    }
}

impl Config {
    pub fn q(&self) -> f64 {
        self.param.q()
    }

    /// The net parameter: `--t` if given, else midway between `t_0` and `N`.
    pub fn net_t(&self) -> f64 {
        self.t.unwrap_or_else(|| {
            let n = self.param.delta_f64();
            if self.t0 < n {
                self.t0
            } else {
                (2.0 + n) / 2.0
            }
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NetReport {
    pub spec: NetSpec,
    pub table: Vec<(usize, f64)>,
    /// Estimate-based: depends on the empirical `K_0`.
    pub k0: K0Estimate,
    /// Estimate-based `(i, tail_sum(i))`.
    pub tails: Vec<(usize, f64)>,
    pub cutoff: f64,
    /// Smallest `i` with `tail_sum(i) < cutoff` (estimate-based).
    pub cutoff_index: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub suite: Suite,
    pub report: VerificationReport,
    /// Set when the suite could not run at all.
    pub error: Option<String>,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.report.passed()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub parameters: Config,
    pub q: f64,
    pub k_of_q: Option<f64>,
    pub rows: Vec<Bounds>,
    pub so3: Vec<So3Bound>,
    pub nets: Vec<NetReport>,
    pub suites: Vec<SuiteResult>,
}

impl BoundReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(SuiteResult::passed)
    }

    pub fn check_count(&self) -> usize {
        self.suites.iter().map(|s| s.report.len()).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// The bound table as CSV with columns `d, lower, refined, upper`.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["d", "lower", "refined", "upper"])?;
        for row in &self.rows {
            w.write_record([row.d.to_string(), sig15(row.lower), sig15(row.refined), sig15(row.upper)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Fixed-point decimal with 15 significant digits.
pub fn sig15(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exponent = x.abs().log10().floor() as i32;
    let decimals = (14 - exponent).max(0) as usize;
    format!("{x:.decimals$}")
}

enum Payload {
    Rows(Vec<Bounds>, Vec<So3Bound>),
    Nets(Vec<NetReport>),
    Nothing,
}

/// Runs the configured suites concurrently and assembles the report after all finish.
pub fn run_report(config: &Config) -> BoundReport {
    let mut suites = config.suites.clone();
    suites.sort_unstable();
    suites.dedup();
    let outcomes: Vec<(Suite, Result<(VerificationReport, Payload)>)> = suites
        .par_iter()
        .map(|&suite| (suite, run_suite(suite, config)))
        .collect();

    let mut report = BoundReport {
        parameters: config.clone(),
        q: config.q(),
        k_of_q: coeffs::k_of_q(config.q()).ok(),
        rows: Vec::new(),
        so3: Vec::new(),
        nets: Vec::new(),
        suites: Vec::new(),
    };
    for (suite, outcome) in outcomes {
        let result = match outcome {
            Ok((checks, payload)) => {
                match payload {
                    Payload::Rows(rows, so3) => {
                        report.rows = rows;
                        report.so3 = so3;
                    }
                    Payload::Nets(nets) => report.nets = nets,
                    Payload::Nothing => {}
                }
                SuiteResult {
                    suite,
                    report: checks,
                    error: None,
                }
            }
            Err(e) => SuiteResult {
                suite,
                report: VerificationReport::default(),
                error: Some(e.to_string()),
            },
        };
        report.suites.push(result);
    }
    report
}

fn run_suite(suite: Suite, config: &Config) -> Result<(VerificationReport, Payload)> {
    match suite {
        Suite::Identities => Ok((identities_suite(&config.param, config.dmax), Payload::Nothing)),
        Suite::Inequalities => Ok((inequalities_suite(&config.param, config.dmax, config.kmax)?, Payload::Nothing)),
        Suite::Tensor => Ok((tensor_suite(kac_n(config)?, config.degree_cap, config.seed, config.tol)?, Payload::Nothing)),
        Suite::Blocks => Ok((
            blocks_suite(&BlocksPlan {
                n: kac_n(config)?,
                k_max: config.gns_kmax,
                seeds: config.seeds,
                seed: config.seed,
                aux_dim: config.aux_dim,
                power_iters: 8,
            })?,
            Payload::Nothing,
        )),
        Suite::LowerBound => Ok((lower_bound_suite(config.dmax.min(config.trunc.saturating_sub(10)), config.trunc)?, Payload::Nothing)),
        Suite::Nets => {
            let (checks, nets) = nets_suite(config)?;
            Ok((checks, Payload::Nets(nets)))
        }
        Suite::Bounds => {
            let (checks, rows, so3) = bounds_suite(&config.param, config.dmax)?;
            Ok((checks, Payload::Rows(rows, so3)))
        }
    }
}

fn kac_n(config: &Config) -> Result<u32> {
    match config.param.kac_dimension() {
        Some(n) if n >= 3 => Ok(n),
        _ => Err(Error::ParameterOutOfRange(format!(
            "the tensor oracle needs an integer N >= 3, got {}",
            config.label
        ))),
    }
}

fn identity_failure(e: Error) -> Check {
    Check::residual(format!("exact identity: {e}"), f64::NAN, 0.0)
}

/// Exact identities of the coefficient calculus, zero tolerance.
pub fn identities_suite(param: &DeformationParameter, d_max: usize) -> VerificationReport {
    let bundle = CoeffBundle::new(param.clone());
    let mut report = VerificationReport::default();
    match bundle.verify_exact_identities(d_max) {
        Ok(count) => report.push(
            Check::residual("exact identities (fusion sum, N closed forms, nu, |C|)", 0.0, 0.0)
                .with_index("d_max", d_max)
                .with_index("count", count),
        ),
        Err(e) => report.push(identity_failure(e)),
    }
    report
}

/// Float inequalities with strict-sign margins (tolerance zero).
pub fn inequalities_suite(param: &DeformationParameter, d_max: usize, k_max: usize) -> Result<VerificationReport> {
    param.require_q_below_one()?;
    let bundle = CoeffBundle::new(param.clone());
    let q = bundle.q();
    let q2 = q * q;
    let k = bundle.k_of_q()?;
    let ratio_bound_sq = (1.0 - q2).powi(-2);
    let mut report = VerificationReport::default();
    let mut worst_chi = f64::INFINITY;
    let mut worst_ratio = f64::INFINITY;
    for d in 0..=d_max {
        for j in 0..=d {
            let row = bundle.chi_row(j, d, k_max)?;
            let end = bundle.chi(j, d, k_max)?.square;
            if row[k_max].square != end {
                return Err(Error::identity("chi row end = chi product form", &[("j", j as i64), ("d", d as i64)], &row[k_max].square, end));
            }
            for (kk, chi) in row.iter().enumerate() {
                worst_chi = worst_chi.min(k * k - chi.square.to_f64().unwrap_or(f64::NAN));
                if kk < k_max {
                    let r = bundle.chi_square_step(j, d, kk)?.to_f64().unwrap_or(f64::NAN);
                    worst_ratio = worst_ratio.min(ratio_bound_sq - r);
                }
            }
            for s in 0..=j.min(d - j) {
                let c = bundle.c_coeff(j, d, s)?;
                report.push(
                    Check::at_most("|C| <= q^(2s+2)", 0.0, c.bound_margin, 0.0)
                        .with_index("j", j)
                        .with_index("d", d)
                        .with_index("s", s),
                );
            }
            let sum = bundle.constant_sum(j, d)?;
            if let Some(bound) = bundle.constant_sum_bound() {
                report.push(Check::at_most("constant sum <= q^2/(1-2q^2)", sum, bound, 0.0).with_index("j", j).with_index("d", d));
            }
            if q <= 3f64.sqrt().recip() {
                report.push(Check::at_most("constant sum <= 1", sum, 1.0, 0.0).with_index("j", j).with_index("d", d));
            }
        }
    }
    report.push(Check::at_most("chi^2 <= K(q)^2 (worst margin)", 0.0, worst_chi, 0.0).with_index("d_max", d_max).with_index("k_max", k_max));
    report.push(
        Check::at_most("(chi ratio)^2 <= (1-q^2)^-2 (worst margin)", 0.0, worst_ratio, 0.0)
            .with_index("d_max", d_max)
            .with_index("k_max", k_max),
    );
    let root6 = coeffs::so3_and_delta(1, SO3_DELTAS[0])?;
    report.push(Check::at_most("q(sqrt 6) <= 3^(-1/2)", root6.q, 3f64.sqrt().recip(), 0.0));
    Ok(report)
}

/// Tensor-oracle checks at one `N` up to the degree cap.
pub fn tensor_suite(n: u32, cap: usize, seed: u64, tol: f64) -> Result<VerificationReport> {
    let oracle = TensorOracle::new(n, cap)?;
    let bundle = CoeffBundle::kac(n)?;
    let q = bundle.q();
    let mut report = VerificationReport::default();
    let top = cap.saturating_sub(1);
    for deg in 0..=top {
        let p = oracle.jones_wenzl(deg)?;
        let d = oracle.qdim_f64(deg);
        report.push(Check::close("Jones-Wenzl trace = D_n", p.trace(), d, 1e-6).with_index("n", deg));
        report.push(Check::residual("Jones-Wenzl idempotent", p.idempotency_defect(), 1e-10).with_index("n", deg));
        report.push(Check::residual("Jones-Wenzl self-adjoint", p.self_adjointness_defect(), 1e-10).with_index("n", deg));
    }
    for a in 0..=top {
        for b in 0..=top - a {
            let dim = oracle.qdim(a) * oracle.qdim(b);
            let mut sum = linalg::CMat::zeros(dim, dim);
            let channels = fuse(a, b);
            let mats: Vec<_> = channels.iter().map(|&g| oracle.intertwiner(a, b, g)).collect::<Result<_>>()?;
            let mut ortho: f64 = 0.0;
            for (x, vx) in mats.iter().enumerate() {
                sum += linalg::cmul(&vx.v, &vx.v.adjoint());
                for (y, vy) in mats.iter().enumerate() {
                    let g = linalg::cmul_adj(&vx.v, &vy.v);
                    let expect = if x == y { linalg::identity(vx.v.ncols()) } else { linalg::CMat::zeros(g.nrows(), g.ncols()) };
                    ortho = ortho.max(linalg::max_abs_diff(&g, &expect));
                }
            }
            let complete = linalg::max_abs_diff(&sum, &linalg::identity(dim));
            report.push(Check::residual("intertwiner completeness", complete, 1e-8).with_index("a", a).with_index("b", b));
            report.push(Check::residual("intertwiner orthogonality", ortho, 1e-8).with_index("a", a).with_index("b", b));
        }
    }
    for l in 0..=top {
        for k in 1..=top - l {
            let m = oracle.m_plus(k, l, seed)?;
            let rel = (m.norm_sq - m.expected).abs() / m.expected;
            report.push(Check::residual("||M_k^+(p_l x 1)||^2 = D_l D_k / D_(l+k)", rel, tol).with_index("k", k).with_index("l", l));
            let rel_vv = (m.norm_sq_at_vv - m.expected).abs() / m.expected;
            report.push(Check::residual("norm attained at v v*", rel_vv, tol).with_index("k", k).with_index("l", l));
            if k == 1 {
                report.push(Check::at_most("||M_1^+||^2 <= 1 + q^2", m.norm_sq, 1.0 + q * q, tol).with_index("l", l));
            }
            let adj = oracle.adjoint_m_plus(k, l, seed, 3)?;
            report.push(Check::residual("adjoint of M_k^+", adj.probe_defect, 1e-10).with_index("k", k).with_index("l", l).with_seed(seed));
        }
    }
    report.push(Check::at_most("1 + q^2 <= 2", 1.0 + q * q, 2.0, 0.0));
    for d in 0..=3usize {
        for j in 0..=d {
            for k in 0..=2usize {
                if d + k > cap {
                    continue;
                }
                let ratio = oracle.morphism_norm_ratio(j, d, k)?;
                let mu = bundle.mu_sq(j, d, k)?.to_f64().unwrap_or(f64::NAN);
                report.push(
                    Check::close("morphism norm ratio = |mu|^2", ratio.ratio, mu, 1e-6)
                        .with_index("j", j)
                        .with_index("d", d)
                        .with_index("k", k),
                );
            }
        }
    }
    Ok(report)
}

/// Sizes for [`blocks_suite`].
#[derive(Debug, Clone, Copy)]
pub struct BlocksPlan {
    pub n: u32,
    pub k_max: usize,
    pub seeds: usize,
    pub seed: u64,
    /// Seeds cycle through auxiliary dimensions `1..=aux_dim`.
    pub aux_dim: usize,
    pub power_iters: usize,
}

/// Block transfer, recursion, decomposition and the left Haagerup inequality on random
/// elements, one instance family per seed. Instances leaving the truncation are skipped.
pub fn blocks_suite(plan: &BlocksPlan) -> Result<VerificationReport> {
    let trunc = Arc::new(GnsTruncation::new(plan.n, plan.k_max)?);
    let d_top = 3.min(plan.k_max);
    let per_seed: Vec<Result<VerificationReport>> = (0..plan.seeds)
        .into_par_iter()
        .map(|i| {
            let seed = plan.seed.wrapping_add(i as u64);
            let aux = 1 + i % plan.aux_dim.max(1);
            blocks_instance(&trunc, d_top, seed, aux, plan.power_iters)
        })
        .collect();
    let mut report = VerificationReport::default();
    for r in per_seed {
        report.extend(r?);
    }
    for d in 0..=d_top {
        report.extend(gnsblocks::character_consistency(&trunc, d)?.checks);
    }
    Ok(report)
}

fn skip_or<T>(report: &mut VerificationReport, name: &str, indices: &[(&str, i64)], r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::TruncationOverflow { channels, k_max }) => {
            report.skip(name, indices, format!("channels {channels:?} exceed K_max = {k_max}"));
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

fn blocks_instance(trunc: &GnsTruncation, d_top: usize, seed: u64, aux: usize, power_iters: usize) -> Result<VerificationReport> {
    let k_max = trunc.k_max();
    let mut report = VerificationReport::default();
    let mut sub = 0u64;
    let mut next_seed = || {
        sub += 1;
        seed.wrapping_mul(1_000_003).wrapping_add(sub)
    };
    for d in 0..=d_top {
        let x = GnsElement::random(trunc, aux, &[d], next_seed())?;
        let r = gnsblocks::verify_block_decomposition(trunc, &x, d, next_seed());
        if let Some(r) = skip_or(&mut report, "block decomposition", &[("d", d as i64)], r)? {
            report.extend(r);
        }
        for j in 0..=d {
            for k in 0..=2usize {
                if d - j + k > k_max || j + k > k_max {
                    continue;
                }
                let r = gnsblocks::verify_block_transfer(trunc, &x, d, j, k, next_seed())?;
                report.extend(r);
            }
            if d + 2 <= k_max {
                let degrees: Vec<usize> = (0..=j.min(d - j)).map(|s| d - 2 * s).chain([d + 2]).collect();
                let y = GnsElement::random(trunc, aux, &degrees, next_seed())?;
                report.extend(gnsblocks::verify_recursion(trunc, &y, d, j, next_seed())?);
            }
        }
        let h = gnsblocks::haagerup_inequality_check(trunc, &x, d, next_seed(), power_iters, false)?;
        report.extend(h.checks);
    }
    Ok(report)
}

/// Translation-operator norms and the character ratio for `d ≤ d_max`, plus `μ_n(2) = n+1`.
pub fn lower_bound_suite(d_max: usize, trunc: usize) -> Result<VerificationReport> {
    let per_d: Vec<Result<VerificationReport>> = (0..=d_max)
        .into_par_iter()
        .map(|d| gnsblocks::lower_bound_check(d, trunc).map(|r| r.checks))
        .collect();
    let mut report = VerificationReport::default();
    for r in per_d {
        report.extend(r?);
    }
    let two = BigRational::from_integer(2.into());
    let mut bad = Vec::new();
    for n in 0..=200usize {
        if chebyshev::eval_mu_exact(n, &two) != BigRational::from_integer((n + 1).into()) {
            bad.push(n);
        }
    }
    report.push(Check::residual("mu_n(2) = n + 1 exactly for n <= 200", bad.len() as f64, 0.0));
    Ok(report)
}

fn net_report(spec: NetSpec, k0: K0Estimate, cutoff: f64) -> Result<(NetReport, VerificationReport)> {
    let table = net_table(&spec)?;
    let mut checks = VerificationReport::default();
    let top = spec.top();
    let interior = spec.t > spec.family_bottom() && spec.t < top;
    for &(k, b) in &table {
        if interior && k > 0 {
            checks.push(Check::at_most("b_k(t) > 0", 0.0, b, 0.0).with_index("k", k));
            checks.push(Check::at_most("b_k(t) < 1", b, 1.0, 0.0).with_index("k", k));
        }
        let at_top = NetSpec { t: top, ..spec }.coefficient(k)?;
        checks.push(Check::close("b_k at the top of the range = 1", at_top, 1.0, 1e-12).with_index("k", k));
    }
    // Pointwise convergence on a grid approaching the top of the range.
    for k in [1usize, 5, 20] {
        let mut last = spec.coefficient(k)?;
        let mut increasing = true;
        for step in 1..=20 {
            let t = spec.t + (top - spec.t) * step as f64 / 20.0;
            let b = NetSpec { t, ..spec }.coefficient(k)?;
            increasing &= b >= last;
            last = b;
        }
        checks.push(Check::residual("b_k(t) increases to 1 along a t-grid", if increasing { 1.0 - last } else { f64::NAN }, 1e-12).with_index("k", k));
    }

    let (t, n) = match spec.family {
        NetFamily::FreeOrthogonal { n } => (spec.t, n),
        NetFamily::QuantumAutomorphism { dim_b } => (spec.t.sqrt(), dim_b.sqrt()),
    };
    checks.push(Check::at_most("K_0 >= 1", 1.0, k0.k0, 0.0));
    checks.push(Check::residual("K_0 running sup stabilizes", if k0.stabilized { 0.0 } else { f64::NAN }, 0.0).with_index("last_increase", k0.last_increase));
    let mut tails = Vec::new();
    let mut cutoff_index = 0;
    if t < n {
        cutoff_index = self::cutoff_index(cutoff, t, n, k0.k0)?;
        let last = cutoff_index.max(spec.i);
        let mut previous = f64::INFINITY;
        let mut decreasing = true;
        for i in 0..=last {
            let value = tail_sum(i, t, n, k0.k0)?;
            decreasing &= value < previous;
            previous = value;
            tails.push((i, value));
        }
        checks.push(Check::residual("tail sum strictly decreasing in i", if decreasing { 0.0 } else { f64::NAN }, 0.0));
        checks.push(Check::at_most("tail sum at the cutoff index < cutoff", tail_sum(cutoff_index, t, n, k0.k0)?, cutoff, 0.0).with_index("i", cutoff_index));
    }
    Ok((
        NetReport {
            spec,
            table,
            k0,
            tails,
            cutoff,
            cutoff_index,
        },
        checks,
    ))
}

impl NetSpec {
    fn family_bottom(&self) -> f64 {
        match self.family {
            NetFamily::FreeOrthogonal { .. } => 2.0,
            NetFamily::QuantumAutomorphism { .. } => 4.0,
        }
    }
}

/// Net tables, `K_0` and tail sums for the free orthogonal net at `N = δ` and the quantum
/// automorphism net at `dim B = δ²` (same `√t`-scale).
pub fn nets_suite(config: &Config) -> Result<(VerificationReport, Vec<NetReport>)> {
    let n = config.param.delta_f64();
    let t = config.net_t();
    // K_0 is taken over [t0, N]; a net below t0 pulls t0 down unless it sits at the edge t = 2.
    let t0 = if t > 2.0 { config.t0.min(t) } else { config.t0 };
    let k0 = if t0 > 2.0 && t0 < n {
        estimate_k0(t0, n, 200, 64)?
    } else {
        return Err(Error::ParameterOutOfRange(format!("K_0 needs 2 < t0 < N, got t0 = {t0}, N = {n}")));
    };
    let mut checks = VerificationReport::default();
    let mut nets = Vec::new();
    for spec in [
        NetSpec::free_orthogonal(n, t, config.kmax)?,
        NetSpec::quantum_automorphism(n * n, t * t, config.kmax)?,
    ] {
        let (net, c) = net_report(spec, k0.clone(), config.cutoff)?;
        checks.extend(c);
        nets.push(net);
    }
    Ok((checks, nets))
}

/// Bound table for `d ≤ d_max`, the `SO_q(3)` table and their invariants.
pub fn bounds_suite(param: &DeformationParameter, d_max: usize) -> Result<(VerificationReport, Vec<Bounds>, Vec<So3Bound>)> {
    let bundle = CoeffBundle::new(param.clone());
    let k = bundle.k_of_q()?;
    let mut checks = VerificationReport::default();
    let mut rows = Vec::with_capacity(d_max + 1);
    for d in 0..=d_max {
        let row = bundle.bounds(d)?;
        let x = d as f64;
        checks.push(Check::at_most("R(d) <= refined", row.lower, row.refined, 0.0).with_index("d", d));
        checks.push(Check::at_most("refined <= P(d)", row.refined, row.upper, 0.0).with_index("d", d));
        checks.push(Check::close("P(d) = K(q)(d+1)(2d+1)", row.upper, k * (x + 1.0) * (2.0 * x + 1.0), 1e-12 * row.upper).with_index("d", d));
        rows.push(row);
    }
    let mut so3 = Vec::new();
    for delta in SO3_DELTAS {
        for d in 0..=d_max {
            let s = coeffs::so3_and_delta(d, delta)?;
            let p = coeffs::bounds_at(s.q, 2 * d)?.upper;
            checks.push(Check::close("SO_q(3) bound = P(2d)", s.bound, p, 0.0).with_index("d", d));
            if delta >= SO3_DELTAS[0] {
                checks.push(Check::residual("admissible for delta >= sqrt 6", if s.admissible && s.bound.is_finite() { 0.0 } else { f64::NAN }, 0.0).with_index("d", d));
            }
            so3.push(s);
        }
    }
    Ok((checks, rows, so3))
}

/// Quantum dimensions `D_n` for `n ≤ n_max`, exact and as floats.
#[derive(Debug, Clone, Serialize)]
pub struct DimRow {
    pub n: usize,
    #[serde(serialize_with = "crate::report::ser_rational")]
    pub exact: BigRational,
    pub value: f64,
    /// `fuse(n, 1)`.
    pub fusion_with_fundamental: Vec<usize>,
}

pub fn dims_table(param: &DeformationParameter, n_max: usize) -> Vec<DimRow> {
    let table = crate::fusion::QDimTable::new(param);
    (0..=n_max)
        .map(|n| DimRow {
            n,
            exact: table.get(n as i64),
            value: table.get_f64(n as i64),
            fusion_with_fundamental: fuse(n, 1),
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct CoeffRow {
    pub j: usize,
    pub d: usize,
    pub k: usize,
    #[serde(serialize_with = "crate::report::ser_rational")]
    pub mu_sq: BigRational,
    #[serde(serialize_with = "crate::report::ser_rational")]
    pub chi_sq: BigRational,
    pub chi: f64,
    #[serde(serialize_with = "crate::report::ser_rational")]
    pub lambda: BigRational,
}

pub fn coeff_table(param: &DeformationParameter, d_max: usize, k_max: usize) -> Result<Vec<CoeffRow>> {
    let bundle = CoeffBundle::new(param.clone());
    let mut rows = Vec::new();
    for d in 0..=d_max {
        for j in 0..=d {
            for k in 0..=k_max {
                let chi = bundle.chi(j, d, k)?;
                rows.push(CoeffRow {
                    j,
                    d,
                    k,
                    mu_sq: bundle.mu_sq(j, d, k)?,
                    chi_sq: chi.square,
                    chi: chi.value,
                    lambda: bundle.lambda_coeff(j, d, k)?,
                });
            }
        }
    }
    Ok(rows)
}

/// Writes rows as CSV through their JSON form; nested lists are joined with `;`.
pub fn write_rows_csv<T: Serialize>(rows: &[T], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (idx, row) in rows.iter().enumerate() {
        let serde_json::Value::Object(map) = serde_json::to_value(row)? else {
            return Err(Error::Numerical("CSV rows must be records".into()));
        };
        if idx == 0 {
            w.write_record(map.keys())?;
        }
        let fields: Vec<String> = map
            .into_iter()
            .map(|(_, v)| match v {
                serde_json::Value::String(s) => s,
                serde_json::Value::Array(items) => items.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";"),
                other => other.to_string(),
            })
            .collect();
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}
