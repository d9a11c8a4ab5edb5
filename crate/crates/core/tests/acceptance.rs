//! Acceptance criteria 1-7. Runs without the libtest harness so every criterion prints
//! exactly one PASS/FAIL line; exits nonzero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_rational::BigRational;
use num_traits::ToPrimitive;

use fomult::bounds_cli::{self, BlocksPlan, NetSpec};
use fomult::coeffs::{self, CoeffBundle};
use fomult::fusion::DeformationParameter;
use fomult::report::VerificationReport;
use fomult::tlcat::TensorOracle;

// Tolerances, pinned.
const TRACE_TOL: f64 = 1e-6;
const INTERTWINER_TOL: f64 = 1e-8;
const M_PLUS_REL_TOL: f64 = 1e-8;
const RATIO_TOL: f64 = 1e-6;
const TRANSFER_TOL: f64 = 1e-8;
const RECURSION_TOL: f64 = 1e-8;
const DECOMPOSITION_TOL: f64 = 1e-10;
const TRANSLATION_SLACK: f64 = 1e-6;
const TAIL_TARGET: f64 = 1e-6;
const K_EXPECTED: f64 = 1.2993;
const K_TOL: f64 = 5e-4;

struct Outcome {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self { failures: Vec::new(), notes: Vec::new() }
    }

    fn require(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    fn report(&mut self, what: &str, report: &VerificationReport) {
        for c in report.failures().take(5) {
            self.failures.push(format!("{what}: {} {:?} lhs={} rhs={} margin={}", c.name, c.indices, c.lhs, c.rhs, c.margin));
        }
        let extra = report.failures().count().saturating_sub(5);
        if extra > 0 {
            self.failures.push(format!("{what}: {extra} more failures"));
        }
    }
}

/// `D_n` at integer `δ` by the recurrence, independent of the library.
fn qdims(delta: i64, n_max: usize) -> Vec<f64> {
    let mut d = vec![1.0f64, delta as f64];
    while d.len() <= n_max {
        let k = d.len();
        d.push(delta as f64 * d[k - 1] - d[k - 2]);
    }
    d
}

fn q_of(delta: f64) -> f64 {
    (delta - (delta * delta - 4.0).sqrt()) / 2.0
}

/// `K(q)` through `exp` of a log-sum.
fn k_oracle(q: f64) -> f64 {
    let log: f64 = -0.5 * (1.0 - q * q).ln() - (0..400).map(|i| (1.0 - q.powi(2 * i + 2)).ln()).sum::<f64>();
    log.exp()
}

fn deltas() -> Vec<DeformationParameter> {
    ["3", "4", "5", "7/2"].iter().map(|d| DeformationParameter::parse(d).unwrap()).collect()
}

fn criterion_1(out: &mut Outcome) -> Option<Duration> {
    for param in deltas() {
        let bundle = CoeffBundle::new(param.clone());
        match bundle.verify_exact_identities(20) {
            Ok(count) => out.notes.push(format!("delta={}: {count} identities", param.delta())),
            Err(e) => out.failures.push(format!("delta={}: {e}", param.delta())),
        }
        for d in 0..=20 {
            for j in 0..=d {
                for s in 0..=j.min(d - j) {
                    let product = bundle.nu_product(j, d, s).unwrap();
                    let closed = bundle.nu_closed(j, d, s).unwrap();
                    out.require(product == closed, format!("nu mismatch at (j,d,s)=({j},{d},{s})"));
                }
            }
        }
    }
    Some(Duration::from_secs(5))
}

fn criterion_2(out: &mut Outcome) -> Option<Duration> {
    let mut params = deltas();
    // Just above 4/√3, where q = 3^{-1/2}.
    params.push(DeformationParameter::parse("231/100").unwrap());
    for param in &params {
        match bounds_cli::inequalities_suite(param, 20, 20) {
            Ok(r) => {
                out.report(&format!("delta={}", param.delta()), &r);
                out.require(r.checks.iter().all(|c| c.tolerance == 0.0), "inequality tolerances must be zero");
            }
            Err(e) => out.failures.push(e.to_string()),
        }
    }
    let q3 = q_of(3.0);
    let expected = q3 * q3 / (1.0 - 2.0 * q3 * q3);
    let bound = CoeffBundle::kac(3).unwrap().constant_sum_bound().unwrap();
    out.require((bound - expected).abs() < 1e-14 && (bound - 0.20602).abs() < 1e-5, format!("constant sum bound {bound}"));
    let root6 = coeffs::so3_and_delta(1, 6f64.sqrt()).unwrap();
    out.require(root6.admissible, "delta = sqrt 6 must be admissible");
    out.require((root6.q - (6f64.sqrt() - 2f64.sqrt()) / 2.0).abs() < 1e-14 && (root6.q - 0.5176).abs() < 1e-4, format!("q(sqrt 6) = {}", root6.q));
    Some(Duration::from_secs(5))
}

fn criterion_3(out: &mut Outcome) -> Option<Duration> {
    let oracle = TensorOracle::new(3, 6).unwrap();
    let bundle = CoeffBundle::kac(3).unwrap();
    let d = qdims(3, 12);
    out.require(d[..6] == [1.0, 3.0, 8.0, 21.0, 55.0, 144.0], "quantum dimensions at N = 3");
    for n in 0..=5 {
        let p = oracle.jones_wenzl(n).unwrap();
        out.require((p.trace() - d[n]).abs() <= TRACE_TOL, format!("trace p_{n} = {}", p.trace()));
    }
    for a in 0..=5usize {
        for b in 0..=5 - a {
            let dim = (d[a] * d[b]) as usize;
            let mut sum = fomult::linalg::CMat::zeros(dim, dim);
            let gammas = fomult::fusion::fuse(a, b);
            for &g in &gammas {
                let v = oracle.intertwiner(a, b, g).unwrap();
                sum += &v.v * v.v.adjoint();
                for &h in &gammas {
                    let w = oracle.intertwiner(a, b, h).unwrap();
                    let gram = v.v.adjoint() * &w.v;
                    let expect = if g == h { fomult::linalg::identity(gram.nrows()) } else { fomult::linalg::CMat::zeros(gram.nrows(), gram.ncols()) };
                    let defect = fomult::linalg::max_abs_diff(&gram, &expect);
                    out.require(defect <= INTERTWINER_TOL, format!("orthogonality ({a},{b};{g},{h}) defect {defect:e}"));
                }
            }
            let defect = fomult::linalg::max_abs_diff(&sum, &fomult::linalg::identity(dim));
            out.require(defect <= INTERTWINER_TOL, format!("completeness ({a},{b}) defect {defect:e}"));
        }
    }
    let q = q_of(3.0);
    for l in 0..=4usize {
        for k in 1..=5 - l {
            let m = oracle.m_plus(k, l, 17).unwrap();
            let expected = d[l] * d[k] / d[l + k];
            let rel = (m.norm_sq - expected).abs() / expected;
            out.require(rel <= M_PLUS_REL_TOL, format!("||M_{k}^+(p_{l})||^2 = {} vs {expected}", m.norm_sq));
            if k == 1 {
                out.require(m.norm_sq <= 1.0 + q * q + M_PLUS_REL_TOL && 1.0 + q * q <= 2.0, format!("||M_1^+||^2 at l={l}"));
            }
        }
    }
    let m11 = oracle.m_plus(1, 1, 3).unwrap();
    out.require((m11.norm_sq - 9.0 / 8.0).abs() <= M_PLUS_REL_TOL * 9.0 / 8.0, format!("||M_1^+(p_1)||^2 = {}", m11.norm_sq));
    for dd in 0..=3usize {
        for j in 0..=dd {
            for k in 0..=2usize {
                let ratio = oracle.morphism_norm_ratio(j, dd, k).unwrap().ratio;
                let mu = bundle.mu_sq(j, dd, k).unwrap().to_f64().unwrap();
                out.require((ratio - mu).abs() <= RATIO_TOL, format!("norm ratio (j,d,k)=({j},{dd},{k}): {ratio} vs {mu}"));
            }
        }
    }
    None
}

fn criterion_4(out: &mut Outcome) -> Option<Duration> {
    let plan = BlocksPlan { n: 3, k_max: 5, seeds: 20, seed: 1, aux_dim: 2, power_iters: 8 };
    let report = match bounds_cli::blocks_suite(&plan) {
        Ok(r) => r,
        Err(e) => {
            out.failures.push(e.to_string());
            return None;
        }
    };
    out.report("blocks", &report);
    for (prefix, tol) in [
        ("block transfer", TRANSFER_TOL),
        ("recursion", RECURSION_TOL),
        ("block decomposition reconstruction", DECOMPOSITION_TOL),
        ("haagerup left", 0.0),
    ] {
        let checks: Vec<_> = report.checks.iter().filter(|c| c.name.starts_with(prefix)).collect();
        out.require(!checks.is_empty(), format!("no `{prefix}` checks ran"));
        if tol > 0.0 {
            out.require(checks.iter().all(|c| c.tolerance <= tol), format!("`{prefix}` tolerance above {tol:e}"));
        }
        let seeds: std::collections::BTreeSet<_> = checks.iter().filter_map(|c| c.seed).collect();
        out.notes.push(format!("{prefix}: {} checks", checks.len()));
        out.require(!seeds.is_empty(), format!("`{prefix}` checks carry no seeds"));
    }
    // Left Haagerup: the margin itself must be nonnegative, beyond the relative slack.
    for c in report.checks.iter().filter(|c| c.name.starts_with("haagerup left")) {
        out.require(c.margin >= -c.tolerance && c.tolerance <= 1e-12 * c.lhs.max(1.0), format!("haagerup margin {} at {:?}", c.margin, c.indices));
    }
    None
}

fn criterion_5(out: &mut Outcome) -> Option<Duration> {
    for d in 0..=20usize {
        match fomult::gnsblocks::lower_bound_check(d, 500) {
            Ok(r) => {
                out.require(r.literal_operator_norm <= 3.0 + TRANSLATION_SLACK, format!("d={d}: literal norm {}", r.literal_operator_norm));
                out.require(r.ratio >= (d as f64 + 1.0) / 3.0, format!("d={d}: ratio {}", r.ratio));
                // Independent: sup |μ_{d+2} - μ_d| on [-2,2] is 2, attained at x = ±2.
                out.require((r.denominator - 2.0).abs() < 1e-9 && (r.numerator - (d as f64 + 1.0)).abs() < 1e-9, format!("d={d}: sup norms {} {}", r.numerator, r.denominator));
                out.report(&format!("d={d}"), &r.checks);
            }
            Err(e) => out.failures.push(e.to_string()),
        }
    }
    let two = BigRational::from_integer(2.into());
    for n in 0..=200usize {
        let v = fomult::chebyshev::eval_mu_exact(n, &two);
        out.require(v == BigRational::from_integer((n + 1).into()), format!("mu_{n}(2) = {v}"));
    }
    Some(Duration::from_secs(10))
}

fn criterion_6(out: &mut Outcome) -> Option<Duration> {
    let (n, t) = (3.0, 2.5);
    for ti in [2.05, 2.5, 2.9, 2.999] {
        let spec = NetSpec::free_orthogonal(n, ti, 60).unwrap();
        for (k, b) in bounds_cli::net_table(&spec).unwrap().into_iter().skip(1) {
            out.require(b > 0.0 && b < 1.0, format!("b_{k}({ti}) = {b}"));
        }
    }
    let top = NetSpec::free_orthogonal(n, n, 60).unwrap();
    out.require(bounds_cli::net_table(&top).unwrap().iter().all(|&(_, b)| (b - 1.0).abs() < 1e-12), "b_k(N) = 1");
    let k0 = bounds_cli::estimate_k0(t, n, 200, 64).unwrap();
    out.require(k0.stabilized && k0.k0 >= 1.0 && k0.k0.is_finite(), format!("K_0 estimate {k0:?}"));
    let i = bounds_cli::cutoff_index(TAIL_TARGET, t, n, k0.k0).unwrap();
    let mut previous = f64::INFINITY;
    for idx in 0..=i + 20 {
        let v = bounds_cli::tail_sum(idx, t, n, k0.k0).unwrap();
        out.require(v < previous, format!("tail sum not decreasing at i={idx}"));
        previous = v;
    }
    let at_i = bounds_cli::tail_sum(i, t, n, k0.k0).unwrap();
    out.require(at_i < TAIL_TARGET, format!("tail({i}) = {at_i}"));
    out.notes.push(format!("K_0 = {:.6} (last increase at k = {}), i(1e-6) = {i}", k0.k0, k0.last_increase));
    Some(Duration::from_secs(5))
}

fn criterion_7(out: &mut Outcome) -> Option<Duration> {
    let q = q_of(3.0);
    let k = k_oracle(q);
    out.require((k - K_EXPECTED).abs() < K_TOL, format!("K(q) = {k}"));
    out.notes.push(format!("K(q) = {k:.6} at N = 3"));
    let bundle = CoeffBundle::kac(3).unwrap();
    for d in 0..=200usize {
        let row = bundle.bounds(d).unwrap();
        let x = d as f64;
        let upper = k * (x + 1.0) * (2.0 * x + 1.0);
        let refined = k * (2.0 * x * x - x + 1.0);
        out.require((row.upper - upper).abs() <= 1e-12 * upper, format!("P({d}) = {}", row.upper));
        out.require((row.refined - refined).abs() <= 1e-12 * refined, format!("refined({d}) = {}", row.refined));
        out.require(row.lower == (x + 1.0) / 3.0, format!("R({d}) = {}", row.lower));
        out.require(row.lower <= row.refined && row.refined <= row.upper, format!("ordering at d={d}"));
    }
    None
}

fn main() -> ExitCode {
    let criteria: [(&str, fn(&mut Outcome) -> Option<Duration>); 7] = [
        ("1 exact identities", criterion_1),
        ("2 inequalities", criterion_2),
        ("3 tensor oracle", criterion_3),
        ("4 blocks and recursion", criterion_4),
        ("5 lower bound", criterion_5),
        ("6 nets", criterion_6),
        ("7 bound table", criterion_7),
    ];
    let mut all_pass = true;
    for (name, run) in criteria {
        let mut out = Outcome::new();
        let start = Instant::now();
        let budget = run(&mut out);
        let elapsed = start.elapsed();
        if let Some(limit) = budget {
            out.require(elapsed < limit, format!("runtime {elapsed:.2?} exceeds {limit:?}"));
        }
        let pass = out.failures.is_empty();
        all_pass &= pass;
        println!("{} criterion {name} ({elapsed:.2?})", if pass { "PASS" } else { "FAIL" });
        for note in &out.notes {
            println!("    {note}");
        }
        for f in &out.failures {
            println!("    {f}");
        }
    }
    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
