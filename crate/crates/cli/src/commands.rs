//! Subcommand implementations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qkdrate::entropy::{self, checks::InequalityInstance, Order, Spectrum};
use qkdrate::finitekey;
use qkdrate::keyrate;
use qkdrate::qmat;
use qkdrate::states::{self, Protocol, ProtocolSpec};

use crate::config::RunConfig;
use crate::output::{Cell, Table};

/// Failures carrying the process exit code.
#[derive(Debug)]
pub enum CmdError {
    /// Invalid configuration (exit 2).
    Config(String),
    /// Numeric failure such as a missing sign change (exit 3).
    Numeric(String),
    /// A self-test suite failed (exit 4).
    Selftest(String),
}

impl std::fmt::Display for CmdError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CmdError::Config(m) => write!(f, "config error: {m}"),
            CmdError::Numeric(m) => write!(f, "numeric failure: {m}"),
            CmdError::Selftest(m) => write!(f, "selftest failure: {m}"),
        }
    }
}

impl CmdError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CmdError::Config(_) => 2,
            CmdError::Numeric(_) => 3,
            CmdError::Selftest(_) => 4,
        }
    }
}

fn numeric(e: qkdrate::Error) -> CmdError {
    match e {
        qkdrate::Error::Numeric(_) | qkdrate::Error::EigNoConvergence { .. } => {
            CmdError::Numeric(e.to_string())
        }
        other => CmdError::Config(other.to_string()),
    }
}

fn spec_for(cfg: &RunConfig) -> Result<ProtocolSpec, CmdError> {
    match cfg.protocol {
        Protocol::SixState => Ok(states::six_state()),
        Protocol::Bb84 => Ok(states::bb84()),
        Protocol::B92 => states::b92(cfg.alpha).map_err(|e| CmdError::Config(e.to_string())),
    }
}

fn x_column(protocol: Protocol) -> &'static str {
    // The B92 curve parameter is the depolarizing delta.
    match protocol {
        Protocol::B92 => "delta",
        _ => "Q",
    }
}

/// Lower-bound rate rows over a point or range of the curve parameter.
pub fn cmd_rate(cfg: &RunConfig) -> Result<Table, CmdError> {
    let spec = spec_for(cfg)?;
    let xs: Vec<f64> = match (cfg.q_point, cfg.q_range) {
        (Some(x), None) => vec![x],
        (None, Some(range)) => crate::config::range_points(range),
        (Some(_), Some(_)) => {
            return Err(CmdError::Config("give either Q or Q-range, not both".into()))
        }
        (None, None) => return Err(CmdError::Config("rate needs Q or Q-range".into())),
    };
    if xs.is_empty() {
        return Err(CmdError::Config("empty Q range".into()));
    }
    let q = if cfg.optimize_q {
        None
    } else {
        Some(cfg.flip.unwrap_or(0.0))
    };
    let points = keyrate::rate_curve(&spec, &xs, q, cfg.threads).map_err(numeric)?;
    let mut table = Table::new(vec![
        "protocol",
        x_column(cfg.protocol),
        "q",
        "rate",
        "lambda1",
        "lambda2",
        "lambda3",
        "lambda4",
    ]);
    for p in points {
        let l = p.minimizer.lambda();
        table.push(vec![
            Cell::Text(cfg.protocol.name().into()),
            Cell::Real(p.x),
            Cell::Real(p.q_opt),
            Cell::Real(p.rate),
            Cell::Real(l[0]),
            Cell::Real(l[1]),
            Cell::Real(l[2]),
            Cell::Real(l[3]),
        ]);
    }
    Ok(table)
}

/// Positive-rate thresholds with and without pre-processing.
pub fn cmd_threshold(cfg: &RunConfig) -> Result<Table, CmdError> {
    let spec = spec_for(cfg)?;
    let optimized = keyrate::threshold(&spec, true).map_err(numeric)?;
    let plain = keyrate::threshold(&spec, false).map_err(numeric)?;
    let mut table = Table::new(vec!["protocol", "preprocessing", "variable", "threshold"]);
    let var = x_column(cfg.protocol);
    table.push(vec![
        Cell::Text(cfg.protocol.name().into()),
        Cell::Text("optimized".into()),
        Cell::Text(var.into()),
        Cell::Real(optimized),
    ]);
    table.push(vec![
        Cell::Text(cfg.protocol.name().into()),
        Cell::Text("none".into()),
        Cell::Text(var.into()),
        Cell::Real(plain),
    ]);
    Ok(table)
}

/// Classical upper-bound threshold.
pub fn cmd_upper(cfg: &RunConfig) -> Result<Table, CmdError> {
    if cfg.protocol == Protocol::B92 {
        return Err(CmdError::Config(
            "the upper threshold is defined for six-state and bb84".into(),
        ));
    }
    let spec = spec_for(cfg)?;
    let upper = keyrate::upper_threshold(&spec).map_err(numeric)?;
    let mut table = Table::new(vec!["protocol", "threshold"]);
    table.push(vec![
        Cell::Text(cfg.protocol.name().into()),
        Cell::Real(upper),
    ]);
    Ok(table)
}

/// Finite key length for (protocol, Q, n, eps) at the worst-case attack.
pub fn cmd_finite(cfg: &RunConfig) -> Result<Table, CmdError> {
    let spec = spec_for(cfg)?;
    let x = cfg
        .q_point
        .ok_or_else(|| CmdError::Config("finite needs Q".into()))?;
    let (_, lambda) = keyrate::min_over_gamma(&spec, x, 0.0).map_err(numeric)?;
    let r = finitekey::finite_rate(&lambda, cfg.flip.unwrap_or(0.0), cfg.n, cfg.eps)
        .map_err(numeric)?;
    let mut table = Table::new(vec![
        "protocol",
        x_column(cfg.protocol),
        "n",
        "eps",
        "ell",
        "leak_ec",
        "s2",
        "s0",
    ]);
    table.push(vec![
        Cell::Text(cfg.protocol.name().into()),
        Cell::Real(x),
        Cell::Int(r.n as i64),
        Cell::Real(r.eps),
        Cell::Int(r.ell as i64),
        Cell::Int(r.leak_ec as i64),
        Cell::Real(r.s2),
        Cell::Real(r.s0),
    ]);
    Ok(table)
}

/// Full small-block run: sample, estimate, correct, hash. Every step is
/// seeded and the transcript is byte-reproducible.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<Table, CmdError> {
    let spec = spec_for(cfg)?;
    let x = cfg
        .q_point
        .ok_or_else(|| CmdError::Config("simulate needs Q".into()))?;
    if cfg.n == 0 || cfg.n > 20 {
        return Err(CmdError::Config(format!(
            "simulate needs n in 1..=20 (exhaustive decoding), got {}",
            cfg.n
        )));
    }
    let (_, lambda) = keyrate::min_over_gamma(&spec, x, 0.0).map_err(numeric)?;
    let mut table = Table::new(vec!["step", "detail", "value"]);
    let mut put = |step: &str, detail: &str, value: Cell| {
        table.push(vec![Cell::Text(step.into()), Cell::Text(detail.into()), value]);
    };

    put("sample", "n", Cell::Int(cfg.n as i64));
    put("sample", "seed", Cell::Int(cfg.seed as i64));
    put("sample", "qber_true", Cell::Real(lambda.qber()));
    let rec = finitekey::sample_collective(&lambda, cfg.n, cfg.seed);
    let errors = rec
        .x
        .iter()
        .zip(rec.y.iter())
        .filter(|(a, b)| a != b)
        .count();
    put("sample", "hamming_errors", Cell::Int(errors as i64));

    let k = (cfg.n / 2).max(1);
    // Acceptance band: declared QBER plus a three-sigma sampling margin.
    let qber = lambda.qber();
    let margin = 3.0 * (qber * (1.0 - qber) / k as f64).sqrt();
    let (estimate, abort) =
        finitekey::estimate_qber(&rec, k, qber + margin).map_err(numeric)?;
    put("estimate", "sample_size", Cell::Int(k as i64));
    put("estimate", "estimate", Cell::Real(estimate));
    put("estimate", "abort", Cell::Int(i64::from(abort)));
    if abort {
        return Ok(table);
    }

    let mut ec_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    ec_rng.set_stream(101);
    let ec = finitekey::ec_random_binning(&rec.x, &rec.y, lambda.qber(), cfg.eps, &mut ec_rng)
        .map_err(numeric)?;
    put("error_correction", "syndrome_bits", Cell::Int(ec.leak_bits as i64));
    put("error_correction", "success", Cell::Int(i64::from(ec.success)));

    let (cq, e_marginal) = finitekey::attack_spectra(&lambda, 0.0).map_err(numeric)?;
    let pa = finitekey::pa_keylength(&cq, &e_marginal, cfg.n, cfg.eps).map_err(numeric)?;
    put("privacy_amplification", "ell_bound", Cell::Int(pa.ell as i64));
    let ell_used = pa.ell.clamp(1, cfg.n);
    put("privacy_amplification", "ell_used", Cell::Int(ell_used as i64));
    let mut pa_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    pa_rng.set_stream(102);
    let hash_seed = finitekey::ToeplitzSeed::random(cfg.n, ell_used, &mut pa_rng);
    let key_a = finitekey::toeplitz_hash(&rec.x, &hash_seed, ell_used).map_err(numeric)?;
    let key_b = finitekey::toeplitz_hash(&ec.decoded, &hash_seed, ell_used).map_err(numeric)?;
    let bits: String = key_a.iter().map(|b| char::from(b'0' + b)).collect();
    put("privacy_amplification", "key", Cell::Text(bits));
    put(
        "privacy_amplification",
        "keys_match",
        Cell::Int(i64::from(key_a == key_b)),
    );
    Ok(table)
}

struct Suite {
    name: &'static str,
    cases: usize,
    failures: usize,
    note: String,
}

fn run_suites(seed: u64) -> Vec<Suite> {
    let mut suites = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(7001);

    // Eigendecomposition reconstruction.
    {
        let mut failures = 0;
        let cases = 50;
        for _ in 0..cases {
            let dim = 2 + rng.gen_range(0..5usize);
            let rho = qmat::random_density_matrix(dim, &mut rng);
            let (w, v) = qmat::eig_hermitian(rho.mat()).unwrap();
            let diag = qmat::ComplexMatrix::from_fn(dim, |i, j| {
                num_complex::Complex64::new(if i == j { w[i] } else { 0.0 }, 0.0)
            });
            let rec = v.mul(&diag).unwrap().mul(&v.adjoint()).unwrap();
            let worst = rec.sub(rho.mat()).unwrap().frobenius_norm();
            if worst > qmat::tol::RECONSTRUCTION * dim as f64 {
                failures += 1;
            }
        }
        suites.push(Suite {
            name: "eig_reconstruction",
            cases,
            failures,
            note: String::new(),
        });
    }

    // Fidelity-distance sandwich.
    {
        let mut failures = 0;
        let cases = 200;
        for _ in 0..cases {
            let a = qmat::random_density_matrix(3, &mut rng);
            let b = qmat::random_density_matrix(3, &mut rng);
            let f = qmat::fidelity(&a, &b).unwrap();
            let d = qmat::trace_distance(&a, &b).unwrap();
            if 1.0 - f > d + 1e-9 || d > (1.0 - f * f).max(0.0).sqrt() + 1e-9 {
                failures += 1;
            }
        }
        suites.push(Suite {
            name: "fidelity_distance_sandwich",
            cases,
            failures,
            note: String::new(),
        });
    }

    // Twirl invariants.
    {
        let mut failures = 0;
        let cases = 50;
        for _ in 0..cases {
            let rho = qmat::random_density_matrix(4, &mut rng);
            let t = states::bell_twirl(&rho).unwrap();
            let ts = states::bell_twirl_sym(&rho).unwrap();
            let w = states::bell_weights(&ts).unwrap();
            if states::bell_offdiag_norm(&t).unwrap() > 1e-12
                || states::bell_offdiag_norm(&ts).unwrap() > 1e-12
                || (w[2] - w[3]).abs() > 1e-12
            {
                failures += 1;
            }
        }
        suites.push(Suite {
            name: "bell_twirls",
            cases,
            failures,
            note: String::new(),
        });
    }

    // Smooth-entropy inequality suite.
    {
        let mut failures = 0;
        let cases = 200;
        let grid = [0.0, 0.01, 0.1];
        let mut first = String::new();
        for _ in 0..cases {
            let inst = InequalityInstance::random(&mut rng);
            'eps: for &e in &grid {
                for &e1 in &grid {
                    let report = entropy::checks::check_inequalities(&inst, e, e1, 0.01).unwrap();
                    if !report.all_hold() {
                        failures += 1;
                        if first.is_empty() {
                            first = report.violations()[0].name.to_string();
                        }
                        break 'eps;
                    }
                }
            }
        }
        suites.push(Suite {
            name: "entropy_inequalities",
            cases,
            failures,
            note: first,
        });
    }

    // Almost-product entropy bound.
    {
        let mut failures = 0;
        let cases = 200;
        for _ in 0..cases {
            let d = 2 + rng.gen_range(0..3usize);
            let mut probs: Vec<f64> = (0..d).map(|_| rng.gen::<f64>() + 0.05).collect();
            let s: f64 = probs.iter().sum();
            probs.iter_mut().for_each(|p| *p /= s);
            let db = 2 + rng.gen_range(0..3usize);
            let states_v: Vec<_> = (0..d)
                .map(|_| qmat::random_density_matrix(db, &mut rng))
                .collect();
            let (lhs, rhs) = entropy::almost_product_bound(&probs, &states_v).unwrap();
            if lhs < rhs - 1e-9 {
                failures += 1;
            }
        }
        suites.push(Suite {
            name: "almost_product_bound",
            cases,
            failures,
            note: String::new(),
        });
    }

    // Agreement of the two rate-evaluation routes.
    {
        let mut failures = 0;
        let cases = 30;
        for _ in 0..cases {
            let mut l: [f64; 4] = [rng.gen(), rng.gen(), rng.gen(), rng.gen()];
            let s: f64 = l.iter().sum();
            l.iter_mut().for_each(|v| *v /= s);
            let lam = states::BellDiagonal::new(l).unwrap();
            let q: f64 = rng.gen_range(0.0..0.5);
            let a = keyrate::rate_objective_flip(&lam, q).unwrap();
            let chan = keyrate::PreprocessChannel::bit_flip(q).unwrap();
            let b = keyrate::rate_objective(&lam, &chan).unwrap();
            if (a - b).abs() > 1e-9 {
                failures += 1;
            }
        }
        suites.push(Suite {
            name: "rate_route_agreement",
            cases,
            failures,
            note: String::new(),
        });
    }

    // Type-class entropies against dense expansion.
    {
        let mut failures = 0;
        let cases = 20;
        for _ in 0..cases {
            let p: f64 = rand::Rng::gen_range(&mut rng, 0.05..0.95);
            let n = 8;
            let tc = entropy::TypeClassSpectrum::new(vec![p, 1.0 - p], n).unwrap();
            let mut dense = Vec::with_capacity(1 << n);
            for mask in 0..(1u32 << n) {
                let k = mask.count_ones() as i32;
                dense.push(p.powi(n as i32 - k) * (1.0 - p).powi(k));
            }
            let spec = Spectrum::new(dense).unwrap();
            for &eps in &[0.0, 0.05] {
                for &order in &[Order::Zero, Order::Two] {
                    let a = entropy::quantum_smooth_typeclass(order, &tc, eps).unwrap();
                    let b = entropy::quantum_smooth(order, &spec, eps).unwrap();
                    if (a - b).abs() > 1e-9 {
                        failures += 1;
                    }
                }
            }
        }
        suites.push(Suite {
            name: "typeclass_vs_dense",
            cases,
            failures,
            note: String::new(),
        });
    }

    // Toeplitz hashing: linearity and collision rate.
    {
        let mut failures = 0;
        let cases = 2000;
        let n = 24;
        let ell = 6;
        let mut collisions = 0usize;
        for _ in 0..cases {
            let seed = finitekey::ToeplitzSeed::random(n, ell, &mut rng);
            let a: Vec<u8> = (0..n).map(|_| u8::from(rng.gen::<bool>())).collect();
            let mut b: Vec<u8> = (0..n).map(|_| u8::from(rng.gen::<bool>())).collect();
            if a == b {
                b[0] ^= 1;
            }
            let xor: Vec<u8> = a.iter().zip(b.iter()).map(|(p, q)| p ^ q).collect();
            let ha = finitekey::toeplitz_hash(&a, &seed, ell).unwrap();
            let hb = finitekey::toeplitz_hash(&b, &seed, ell).unwrap();
            let hx = finitekey::toeplitz_hash(&xor, &seed, ell).unwrap();
            let hsum: Vec<u8> = ha.iter().zip(hb.iter()).map(|(p, q)| p ^ q).collect();
            if hx != hsum {
                failures += 1;
            }
            collisions += usize::from(ha == hb);
        }
        let p = 2.0f64.powi(-(ell as i32));
        let sigma = (p * (1.0 - p) / cases as f64).sqrt();
        if collisions as f64 / cases as f64 > p + 5.0 * sigma {
            failures += 1;
        }
        suites.push(Suite {
            name: "toeplitz_hashing",
            cases,
            failures,
            note: String::new(),
        });
    }

    suites
}

/// Run the invariant suites; any failure yields exit code 4 in the caller.
pub fn cmd_selftest(cfg: &RunConfig) -> Result<(Table, usize), CmdError> {
    let suites = run_suites(cfg.seed);
    let mut table = Table::new(vec!["suite", "cases", "failures", "status"]);
    let mut failures = 0usize;
    for s in &suites {
        failures += s.failures;
        let status = if s.failures == 0 {
            "pass".to_string()
        } else if s.note.is_empty() {
            "FAIL".to_string()
        } else {
            format!("FAIL ({})", s.note)
        };
        table.push(vec![
            Cell::Text(s.name.into()),
            Cell::Int(s.cases as i64),
            Cell::Int(s.failures as i64),
            Cell::Text(status),
        ]);
    }
    Ok((table, failures))
}
