//! Shannon, von Neumann, and smooth Rényi entropies of orders 0 and 2.
//!
//! Smoothing conventions. The order-0 smooth entropy removes up to `eps`
//! probability mass and minimizes the support size; the order-2 smooth
//! entropy selects a pointwise-dominated subnormalized distribution with
//! mass at least `total - eps`, optimized by capping the largest atoms
//! (water filling from the top). Conditional variants remove joint mass and
//! take the worst conditioning value. These operational definitions are
//! validated in bulk by the inequality suite in [`checks`].
//!
//! Quantum smooth entropies act on the eigenvalue spectrum of a state. For
//! n-fold product states the spectrum is handled exactly through type
//! classes (multinomial multiplicities) without materializing d^n values;
//! multiplicities are evaluated with log-factorials and eigenvalue powers
//! stay in log space, so block lengths of a few thousand stay exact.

pub mod checks;

use crate::qmat::{self, tol, DensityMatrix};
use crate::{Error, Result};

const LN_2: f64 = std::f64::consts::LN_2;

/// 1/e, the additive constant in the almost-product entropy bound.
pub const INV_E: f64 = 0.36787944117144233;

/// log2(x + y) given a = log2(x), b = log2(y).
pub(crate) fn lse2(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (1.0 + (lo - hi).exp2()).log2()
}

/// Cumulative table of ln(k!) for k = 0..=n.
pub(crate) fn ln_factorials(n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n + 1];
    let mut acc = 0.0f64;
    for k in 1..=n {
        acc += (k as f64).ln();
        t[k] = acc;
    }
    t
}

/// log2 of the binomial coefficient from a ln-factorial table.
pub(crate) fn log2_binom(table: &[f64], n: usize, k: usize) -> f64 {
    (table[n] - table[k] - table[n - k]) / LN_2
}

/// Discrete distribution over opaque labels; may be subnormalized.
#[derive(Debug, Clone)]
pub struct ProbDist {
    weights: Vec<f64>,
}

impl ProbDist {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        let mut sum = 0.0;
        for &w in &weights {
            if !w.is_finite() || w < -1e-12 {
                return Err(Error::BadProbability { value: w });
            }
            sum += w.max(0.0);
        }
        if sum <= 0.0 || sum > 1.0 + 1e-9 {
            return Err(Error::BadProbability { value: sum });
        }
        Ok(Self {
            weights: weights.into_iter().map(|w| w.max(0.0)).collect(),
        })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Eigenvalue spectrum of a density matrix: nonnegative, descending,
/// truncated below the spectrum cutoff.
#[derive(Debug, Clone)]
pub struct Spectrum {
    values: Vec<f64>,
}

impl Spectrum {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        let sum: f64 = values.iter().sum();
        if sum > 1.0 + 1e-9 {
            return Err(Error::BadProbability { value: sum });
        }
        for &v in &values {
            if !v.is_finite() || v < -tol::PSD {
                return Err(Error::BadProbability { value: v });
            }
        }
        values.retain(|&v| v > tol::SPECTRUM_TRUNCATION);
        values.sort_by(|a, b| b.partial_cmp(a).unwrap());
        Ok(Self { values })
    }

    pub fn from_density(rho: &DensityMatrix) -> Self {
        Self::new(rho.spectrum()).expect("spectrum of a valid state")
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Classical label distribution with a quantum spectrum attached to each
/// label.
#[derive(Debug, Clone)]
pub struct CqSpectrum {
    entries: Vec<(f64, Spectrum)>,
}

impl CqSpectrum {
    pub fn new(entries: Vec<(f64, Spectrum)>) -> Result<Self> {
        let psum: f64 = entries.iter().map(|(p, _)| *p).sum();
        if (psum - 1.0).abs() > 1e-9 {
            return Err(Error::BadProbability { value: psum });
        }
        for (p, s) in &entries {
            if *p < 0.0 {
                return Err(Error::BadProbability { value: *p });
            }
            if *p > 0.0 && (s.total() - 1.0).abs() > 1e-9 {
                return Err(Error::BadProbability { value: s.total() });
            }
        }
        Ok(Self { entries })
    }

    /// Build from per-label density matrices.
    pub fn from_states(entries: &[(f64, DensityMatrix)]) -> Result<Self> {
        Self::new(
            entries
                .iter()
                .map(|(p, rho)| (*p, Spectrum::from_density(rho)))
                .collect(),
        )
    }

    pub fn entries(&self) -> &[(f64, Spectrum)] {
        &self.entries
    }

    /// Spectrum of the joint state (label register plus quantum system).
    pub fn joint_spectrum(&self) -> Spectrum {
        let mut v = Vec::new();
        for (p, s) in &self.entries {
            for &mu in s.values() {
                v.push(p * mu);
            }
        }
        Spectrum::new(v).expect("joint spectrum of a valid cq state")
    }
}

/// Spectrum of an n-fold product state, represented implicitly: eigenvalue
/// prod_i lambda_i^{k_i} with multiplicity multinomial(n; k).
#[derive(Debug, Clone)]
pub struct TypeClassSpectrum {
    per_symbol: Vec<f64>,
    n: usize,
}

impl TypeClassSpectrum {
    pub fn new(per_symbol: Vec<f64>, n: usize) -> Result<Self> {
        let s = Spectrum::new(per_symbol)?;
        if n == 0 {
            return Err(Error::OutOfRange("type class copies must be >= 1".into()));
        }
        Ok(Self {
            per_symbol: s.values().to_vec(),
            n,
        })
    }

    pub fn per_symbol(&self) -> &[f64] {
        &self.per_symbol
    }

    pub fn copies(&self) -> usize {
        self.n
    }

    /// Total mass of the product spectrum.
    pub fn total(&self) -> f64 {
        self.per_symbol.iter().sum::<f64>().powi(self.n as i32)
    }

    /// Distinct eigenvalue groups of the product spectrum, sorted by value
    /// descending: (ln value, log2 multiplicity).
    fn groups(&self) -> Result<Vec<(f64, f64)>> {
        // Equal single-copy eigenvalues share one type-class axis.
        let mut distinct: Vec<(f64, usize)> = Vec::new();
        for &v in &self.per_symbol {
            match distinct
                .iter_mut()
                .find(|(u, _)| (*u - v).abs() <= 1e-12 * u.max(v))
            {
                Some((_, m)) => *m += 1,
                None => distinct.push((v, 1)),
            }
        }
        let d = distinct.len();
        let n = self.n;
        // Number of classes is C(n + d - 1, d - 1).
        let mut class_count = 1.0f64;
        for i in 1..d {
            class_count *= (n + i) as f64 / i as f64;
        }
        if class_count > 2e7 {
            return Err(Error::Numeric(format!(
                "type class enumeration too large: ~{class_count:.2e} classes for d={d}, n={n}"
            )));
        }
        let lf = ln_factorials(n);
        let ln_v: Vec<f64> = distinct.iter().map(|(v, _)| v.ln()).collect();
        let ln_m: Vec<f64> = distinct.iter().map(|(_, m)| (*m as f64).ln()).collect();
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(class_count as usize);
        let mut k = vec![0usize; d];
        fn rec(
            j: usize,
            left: usize,
            k: &mut [usize],
            d: usize,
            n: usize,
            lf: &[f64],
            ln_v: &[f64],
            ln_m: &[f64],
            out: &mut Vec<(f64, f64)>,
        ) {
            if j == d - 1 {
                k[j] = left;
                let mut ln_value = 0.0;
                let mut ln_count = lf[n];
                for i in 0..d {
                    ln_value += k[i] as f64 * ln_v[i];
                    ln_count += k[i] as f64 * ln_m[i] - lf[k[i]];
                }
                out.push((ln_value, ln_count / LN_2));
                return;
            }
            for kj in 0..=left {
                k[j] = kj;
                rec(j + 1, left - kj, k, d, n, lf, ln_v, ln_m, out);
            }
        }
        rec(0, n, &mut k, d, n, &lf, &ln_v, &ln_m, &mut out);
        out.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        Ok(out)
    }
}

/// Shannon entropy in bits, with 0 log 0 := 0.
pub fn shannon(p: &ProbDist) -> f64 {
    shannon_raw(p.weights())
}

pub(crate) fn shannon_raw(weights: &[f64]) -> f64 {
    -weights
        .iter()
        .filter(|&&w| w > 0.0)
        .map(|&w| w * w.log2())
        .sum::<f64>()
}

/// Binary entropy h(x) in bits.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutOfRange(format!("binary entropy of {x}")));
    }
    Ok(shannon_raw(&[x, 1.0 - x]))
}

/// Von Neumann entropy of a state, in bits.
pub fn von_neumann(rho: &DensityMatrix) -> f64 {
    shannon_raw(&rho.spectrum())
}

/// Von Neumann entropy of a spectrum.
pub fn von_neumann_spectrum(s: &Spectrum) -> f64 {
    shannon_raw(s.values())
}

/// Conditional von Neumann entropy S(U|V) = S(UV) - S(V), where `u_systems`
/// lists the subsystem indices forming U.
pub fn cond_vn(rho: &DensityMatrix, dims: &[usize], u_systems: &[usize]) -> Result<f64> {
    let keep: Vec<usize> = (0..dims.len()).filter(|i| !u_systems.contains(i)).collect();
    let rho_v = qmat::partial_trace(rho, dims, &keep)?;
    Ok(von_neumann(rho) - von_neumann(&rho_v))
}

fn check_eps(eps: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::OutOfRange(format!("smoothing parameter {eps}")));
    }
    Ok(())
}

/// Smooth Rényi entropy of order 0: log2 of the minimum number of labels
/// carrying probability at least `total - eps`.
pub fn smooth_renyi0(p: &ProbDist, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    Ok(renyi0_raw(p.weights(), eps))
}

pub(crate) fn renyi0_raw(weights: &[f64], eps: f64) -> f64 {
    let mut w: Vec<f64> = weights.iter().copied().filter(|&x| x > 0.0).collect();
    w.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let total: f64 = w.iter().sum();
    let target = total - eps;
    if target <= 1e-15 {
        return 0.0;
    }
    let mut acc = 0.0;
    for (i, &x) in w.iter().enumerate() {
        acc += x;
        if acc >= target - 1e-12 {
            return ((i + 1) as f64).log2();
        }
    }
    (w.len() as f64).log2()
}

/// Smooth Rényi entropy of order 2: -log2 of the minimal collision mass
/// over pointwise-dominated Q with mass `total - eps`, achieved by capping
/// the largest atoms at a common level.
pub fn smooth_renyi2(p: &ProbDist, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    Ok(renyi2_raw(p.weights(), eps))
}

pub(crate) fn renyi2_raw(weights: &[f64], eps: f64) -> f64 {
    let mut w: Vec<f64> = weights.iter().copied().filter(|&x| x > 0.0).collect();
    w.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let total: f64 = w.iter().sum();
    if total - eps <= 0.0 {
        return f64::INFINITY;
    }
    let n = w.len();
    let mut prefix = 0.0;
    for g in 0..n {
        prefix += w[g];
        let next = if g + 1 < n { w[g + 1] } else { 0.0 };
        let removable = prefix - next * (g + 1) as f64;
        if removable >= eps {
            let c = (prefix - eps) / (g + 1) as f64;
            let mut coll = (g + 1) as f64 * c * c;
            for &x in &w[g + 1..] {
                coll += x * x;
            }
            return -coll.log2();
        }
    }
    unreachable!("water filling always brackets");
}

/// Conditional atoms grouped by conditioning value: (P(y), conditional
/// weights within y, sorted descending). Conditional weights of each kept
/// group sum to 1.
pub(crate) struct CondAtoms {
    pub(crate) groups: Vec<(f64, Vec<f64>)>,
}

impl CondAtoms {
    pub(crate) fn from_joint(by_condition: &[Vec<f64>]) -> Self {
        let mut groups = Vec::new();
        for row in by_condition {
            let py: f64 = row.iter().sum();
            if py <= 0.0 {
                continue;
            }
            let mut cond: Vec<f64> = row.iter().map(|&x| x / py).filter(|&x| x > 0.0).collect();
            cond.sort_by(|a, b| b.partial_cmp(a).unwrap());
            groups.push((py, cond));
        }
        Self { groups }
    }

    fn from_cq(cq: &CqSpectrum) -> Self {
        let mut groups = Vec::new();
        for (p, s) in cq.entries() {
            if *p <= 0.0 {
                continue;
            }
            groups.push((*p, s.values().to_vec()));
        }
        Self { groups }
    }
}

/// Order-0 conditional smoothing: for a support target k the optimal
/// removal deletes, for each conditioning value, its smallest conditional
/// atoms down to k; the result is the smallest k whose removal cost fits
/// the budget.
fn cond_renyi0_atoms(atoms: &CondAtoms, eps: f64) -> f64 {
    let total: f64 = atoms.groups.iter().map(|(p, _)| p).sum();
    if total - eps <= 1e-15 {
        return 0.0;
    }
    let mut tails: Vec<Vec<f64>> = Vec::new();
    let mut max_s = 0usize;
    for (py, cond) in &atoms.groups {
        let s = cond.len();
        max_s = max_s.max(s);
        // cum[j] = joint mass of the j smallest atoms of this group.
        let mut cum = vec![0.0; s + 1];
        for j in 0..s {
            cum[j + 1] = cum[j] + cond[s - 1 - j] * py;
        }
        tails.push(cum);
    }
    for k in 1..=max_s {
        let mut cost = 0.0;
        for cum in &tails {
            let s = cum.len() - 1;
            if s > k {
                cost += cum[s - k];
            }
        }
        if cost <= eps + 1e-12 {
            return (k as f64).log2();
        }
    }
    (max_s as f64).log2()
}

/// Order-2 conditional smoothing: joint-mass removals split across
/// conditioning values, capping within each value, worst-case value.
/// Solved by bisection on the target collision mass; the minimal removal
/// per value follows in closed form from the sorted conditional atoms.
fn cond_renyi2_atoms(atoms: &CondAtoms, eps: f64) -> f64 {
    fn removal_for(cond: &[f64], prefix: &[f64], suffix_sq: &[f64], tau: f64) -> f64 {
        let n = cond.len();
        if suffix_sq[0] <= tau {
            return 0.0;
        }
        for g in 0..n {
            let next = if g + 1 < n { cond[g + 1] } else { 0.0 };
            if (g + 1) as f64 * next * next + suffix_sq[g + 1] <= tau {
                let c = ((tau - suffix_sq[g + 1]) / (g + 1) as f64).max(0.0).sqrt();
                return prefix[g] - (g + 1) as f64 * c;
            }
        }
        unreachable!("cap at zero always reaches tau >= 0");
    }

    let mut pre: Vec<(f64, Vec<f64>, Vec<f64>, Vec<f64>)> = Vec::new();
    let mut worst0 = 0.0f64;
    for (py, cond) in &atoms.groups {
        let n = cond.len();
        let mut prefix = vec![0.0; n];
        let mut acc = 0.0;
        for (i, &x) in cond.iter().enumerate() {
            acc += x;
            prefix[i] = acc;
        }
        let mut suffix_sq = vec![0.0; n + 1];
        for i in (0..n).rev() {
            suffix_sq[i] = suffix_sq[i + 1] + cond[i] * cond[i];
        }
        worst0 = worst0.max(suffix_sq[0]);
        pre.push((*py, cond.clone(), prefix, suffix_sq));
    }
    if worst0 <= 0.0 {
        return f64::INFINITY;
    }
    let feasible = |tau: f64| -> bool {
        let mut spent = 0.0;
        for (py, cond, prefix, suffix_sq) in &pre {
            spent += py * removal_for(cond, prefix, suffix_sq, tau);
            if spent > eps + 1e-15 {
                return false;
            }
        }
        true
    };
    if feasible(0.0) {
        return f64::INFINITY;
    }
    let mut lo = 0.0f64;
    let mut hi = worst0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    -hi.log2()
}

/// Joint distribution over pairs; `rows[x][y]` with y the conditioning
/// variable.
#[derive(Debug, Clone)]
pub struct JointDist {
    rows: Vec<Vec<f64>>,
}

impl JointDist {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let total: f64 = rows.iter().flatten().sum();
        if !(0.0..=1.0 + 1e-9).contains(&total) {
            return Err(Error::BadProbability { value: total });
        }
        for &v in rows.iter().flatten() {
            if v < -1e-12 || !v.is_finite() {
                return Err(Error::BadProbability { value: v });
            }
        }
        Ok(Self {
            rows: rows
                .into_iter()
                .map(|r| r.into_iter().map(|v| v.max(0.0)).collect())
                .collect(),
        })
    }

    pub(crate) fn by_condition(&self) -> Vec<Vec<f64>> {
        let nx = self.rows.len();
        let ny = self.rows.first().map(|r| r.len()).unwrap_or(0);
        (0..ny)
            .map(|y| (0..nx).map(|x| self.rows[x][y]).collect())
            .collect()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

/// H_0^eps(X|Y) for a classical joint distribution.
pub fn smooth_renyi0_cond(joint: &JointDist, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    Ok(cond_renyi0_atoms(
        &CondAtoms::from_joint(&joint.by_condition()),
        eps,
    ))
}

/// H_2^eps(X|Y) for a classical joint distribution.
pub fn smooth_renyi2_cond(joint: &JointDist, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    Ok(cond_renyi2_atoms(
        &CondAtoms::from_joint(&joint.by_condition()),
        eps,
    ))
}

/// Smooth Rényi order selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Zero,
    Two,
}

/// Quantum smooth Rényi entropy of a spectrum.
pub fn quantum_smooth(order: Order, spectrum: &Spectrum, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    Ok(match order {
        Order::Zero => renyi0_raw(spectrum.values(), eps),
        Order::Two => renyi2_raw(spectrum.values(), eps),
    })
}

/// Quantum smooth Rényi entropy of an n-fold product state, computed
/// exactly over type classes.
pub fn quantum_smooth_typeclass(order: Order, tc: &TypeClassSpectrum, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let groups = tc.groups()?;
    let total = tc.total();
    match order {
        Order::Zero => {
            let target = total - eps;
            if target <= 1e-15 {
                return Ok(0.0);
            }
            let mut acc_mass = 0.0f64;
            let mut acc_count = f64::NEG_INFINITY;
            for &(ln_v, log2_cnt) in &groups {
                let mass = (ln_v + log2_cnt * LN_2).exp();
                if acc_mass + mass >= target - 1e-12 {
                    let need = (target - acc_mass).max(0.0);
                    let log2_partial = if ln_v > -500.0 {
                        let atoms = (need / ln_v.exp()).ceil().max(1.0);
                        atoms.log2().min(log2_cnt)
                    } else {
                        (need.log2() - ln_v / LN_2).min(log2_cnt)
                    };
                    return Ok(lse2(acc_count, log2_partial).max(0.0));
                }
                acc_mass += mass;
                acc_count = lse2(acc_count, log2_cnt);
            }
            Ok(acc_count.max(0.0))
        }
        Order::Two => {
            if total - eps <= 0.0 {
                return Ok(f64::INFINITY);
            }
            let g = groups.len();
            let mut suffix_cv2 = vec![f64::NEG_INFINITY; g + 1];
            for i in (0..g).rev() {
                suffix_cv2[i] = lse2(suffix_cv2[i + 1], groups[i].1 + 2.0 * groups[i].0 / LN_2);
            }
            let mut prefix_mass = 0.0f64;
            let mut prefix_count = f64::NEG_INFINITY;
            for i in 0..g {
                prefix_mass += (groups[i].0 + groups[i].1 * LN_2).exp();
                prefix_count = lse2(prefix_count, groups[i].1);
                let ln_next = if i + 1 < g {
                    groups[i + 1].0
                } else {
                    f64::NEG_INFINITY
                };
                let removable = prefix_mass - (ln_next + prefix_count * LN_2).exp();
                if removable >= eps {
                    let ln_c = (prefix_mass - eps).ln() - prefix_count * LN_2;
                    let capped = prefix_count + 2.0 * ln_c / LN_2;
                    let coll = lse2(capped, suffix_cv2[i + 1]);
                    return Ok(-coll);
                }
            }
            unreachable!("water filling always brackets");
        }
    }
}

/// Conditional quantum smooth entropy S_alpha^eps(U|Z) of a cq state.
pub fn quantum_smooth_cond(order: Order, cq: &CqSpectrum, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let atoms = CondAtoms::from_cq(cq);
    Ok(match order {
        Order::Zero => cond_renyi0_atoms(&atoms, eps),
        Order::Two => cond_renyi2_atoms(&atoms, eps),
    })
}

/// H_0^eps(X^n | Y^n) for n i.i.d. uses of a binary symmetric pair with
/// error probability `err`: the exact count of error patterns left after
/// removing the least likely conditional mass, identical for every y.
pub fn cond_renyi0_bsc(n: usize, err: f64, eps: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&err) {
        return Err(Error::OutOfRange(format!("error probability {err}")));
    }
    check_eps(eps)?;
    let lf = ln_factorials(n);
    let log2_atom = |k: usize| -> f64 {
        if err == 0.0 {
            if k == 0 {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        } else {
            (n - k) as f64 * (1.0 - err).log2() + k as f64 * err.log2()
        }
    };
    // Remove shells from k = n downward while the budget lasts.
    let mut budget = eps;
    let mut cut = n + 1; // first fully removed shell
    for k in (0..=n).rev() {
        let shell_mass = (log2_binom(&lf, n, k) + log2_atom(k)).exp2();
        if shell_mass <= budget {
            budget -= shell_mass;
            cut = k;
        } else {
            break;
        }
    }
    if cut == 0 {
        return Ok(0.0);
    }
    let k = cut - 1;
    let log2_count_k = log2_binom(&lf, n, k);
    let la = log2_atom(k);
    let removed_atoms = if la == f64::NEG_INFINITY {
        log2_count_k
    } else if budget <= 0.0 {
        f64::NEG_INFINITY
    } else {
        ((budget.log2() - la).exp2().floor().max(0.0))
            .log2()
            .min(log2_count_k)
    };
    let mut remaining = f64::NEG_INFINITY;
    for j in 0..k {
        remaining = lse2(remaining, log2_binom(&lf, n, j));
    }
    let frac = (removed_atoms - log2_count_k).exp2().min(1.0);
    let kept_k = if frac >= 1.0 {
        f64::NEG_INFINITY
    } else {
        log2_count_k + (1.0 - frac).log2()
    };
    let out = lse2(remaining, kept_k);
    Ok(out.max(0.0))
}

/// Smallest radius r with P(Bin(n, err) > r) <= eps, plus log2 of the ball
/// volume sum_{k<=r} C(n,k).
pub fn bsc_ball_radius(n: usize, err: f64, eps: f64) -> Result<(usize, f64)> {
    if !(0.0..=0.5).contains(&err) {
        return Err(Error::OutOfRange(format!("error probability {err}")));
    }
    let lf = ln_factorials(n);
    let mut shell = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let lm = if err == 0.0 {
            if k == 0 {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        } else {
            log2_binom(&lf, n, k) + (n - k) as f64 * (1.0 - err).log2() + k as f64 * err.log2()
        };
        shell.push(lm.exp2());
    }
    let mut tail = 0.0;
    let mut r = n;
    while r > 0 && tail + shell[r] <= eps {
        tail += shell[r];
        r -= 1;
    }
    let mut vol = f64::NEG_INFINITY;
    for k in 0..=r {
        vol = lse2(vol, log2_binom(&lf, n, k));
    }
    Ok((r, vol))
}

/// Both sides of the almost-product entropy bound for a cq state
/// sum_x mu_x |x><x| (x) rho_B^x.
///
/// Returns (S(X|B), S(X) - sqrt(2 eps) log2(d) - 1/e) where eps is the
/// trace distance between the state and the product of its marginals.
/// The contract is lhs >= rhs.
pub fn almost_product_bound(probs: &[f64], states: &[DensityMatrix]) -> Result<(f64, f64)> {
    if probs.len() != states.len() || probs.is_empty() {
        return Err(Error::DimMismatch(
            "label probabilities and states must align".into(),
        ));
    }
    let d = probs.len();
    let db = states[0].dim();
    for s in states {
        if s.dim() != db {
            return Err(Error::DimMismatch("conditional states differ in dim".into()));
        }
    }
    let psum: f64 = probs.iter().sum();
    if (psum - 1.0).abs() > 1e-9 {
        return Err(Error::BadProbability { value: psum });
    }
    let mut acc = states[0].mat().scale(probs[0]);
    for i in 1..d {
        acc = acc.add(&states[i].mat().scale(probs[i]))?;
    }
    let rho_b = DensityMatrix::new(acc)?;
    // Block structure: delta(rho_XB, rho_X x rho_B) = sum_x mu_x delta(rho_B^x, rho_B).
    let mut eps = 0.0;
    for i in 0..d {
        eps += probs[i] * qmat::trace_distance(&states[i], &rho_b)?;
    }
    let s_x = shannon_raw(probs);
    // S(XB) of a cq state is H(X) + sum_x mu_x S(rho_B^x).
    let s_xb = s_x
        + probs
            .iter()
            .zip(states.iter())
            .map(|(&p, s)| if p > 0.0 { p * von_neumann(s) } else { 0.0 })
            .sum::<f64>();
    let lhs = s_xb - von_neumann(&rho_b);
    let rhs = s_x - (2.0 * eps).sqrt() * (d as f64).log2() - INV_E;
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::{random_density_matrix, ComplexMatrix, PureState};
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dist(w: &[f64]) -> ProbDist {
        ProbDist::new(w.to_vec()).unwrap()
    }

    #[test]
    fn shannon_examples() {
        assert!((shannon(&ProbDist::uniform(2)) - 1.0).abs() < 1e-15);
        assert!(shannon(&dist(&[1.0])).abs() < 1e-15);
        let h = shannon(&dist(&[0.11, 0.89]));
        assert!((h - binary_entropy(0.11).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn binary_entropy_examples() {
        assert!(binary_entropy(0.0).unwrap().abs() < 1e-15);
        assert!((binary_entropy(0.5).unwrap() - 1.0).abs() < 1e-15);
        let expect = -(0.11f64 * 0.11f64.log2() + 0.89 * 0.89f64.log2());
        assert!((binary_entropy(0.11).unwrap() - expect).abs() < 1e-15);
        assert!((expect - 0.499916).abs() < 1e-6);
        assert!(binary_entropy(1.2).is_err());
    }

    #[test]
    fn von_neumann_examples() {
        assert!((von_neumann(&DensityMatrix::maximally_mixed(2)) - 1.0).abs() < 1e-12);
        let pure = PureState::basis(3, 1).projector();
        assert!(von_neumann(&pure).abs() < 1e-10);
        let s = Spectrum::new(vec![0.85, 0.05, 0.05, 0.05]).unwrap();
        let h = von_neumann_spectrum(&s);
        let oracle = shannon(&dist(&[0.85, 0.05, 0.05, 0.05]));
        assert!((h - oracle).abs() < 1e-15);
        assert!((h - 0.8476).abs() < 2e-4);
    }

    #[test]
    fn cond_vn_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        // Product state: S(U|V) = S(U).
        let a = random_density_matrix(2, &mut rng);
        let b = random_density_matrix(3, &mut rng);
        let prod = qmat::tensor(&a, &b);
        let c = cond_vn(&prod, &[2, 3], &[0]).unwrap();
        assert!((c - von_neumann(&a)).abs() < 1e-9);
        // Maximally entangled: S(A|B) = -1.
        let phi = PureState::normalized(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        ])
        .unwrap()
        .projector();
        assert!((cond_vn(&phi, &[2, 2], &[0]).unwrap() + 1.0).abs() < 1e-9);
        // Classical-classical state equals Shannon conditional entropy.
        let p = [[0.3, 0.1], [0.2, 0.4]];
        let mut m = ComplexMatrix::zeros(4);
        for x in 0..2 {
            for y in 0..2 {
                m.set(2 * x + y, 2 * x + y, Complex64::new(p[x][y], 0.0));
            }
        }
        let cc = DensityMatrix::new(m).unwrap();
        let expect = shannon_raw(&[0.3, 0.1, 0.2, 0.4]) - shannon_raw(&[0.5, 0.5]);
        assert!((cond_vn(&cc, &[2, 2], &[0]).unwrap() - expect).abs() < 1e-9);
    }

    #[test]
    fn renyi0_examples() {
        assert!((smooth_renyi0(&ProbDist::uniform(8), 0.0).unwrap() - 3.0).abs() < 1e-12);
        let v = smooth_renyi0(&ProbDist::uniform(4), 0.25).unwrap();
        assert!((v - 3.0f64.log2()).abs() < 1e-12);
        assert!(smooth_renyi0(&dist(&[1.0]), 0.7).unwrap().abs() < 1e-12);
        assert!(smooth_renyi0(&ProbDist::uniform(4), -0.1).is_err());
    }

    #[test]
    fn renyi0_exhaustive_oracle() {
        fn oracle(w: &[f64], eps: f64) -> f64 {
            let n = w.len();
            let total: f64 = w.iter().sum();
            let mut best = n;
            for mask in 0..(1u32 << n) {
                let mass: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| w[i]).sum();
                if mass >= total - eps - 1e-12 {
                    best = best.min(mask.count_ones() as usize);
                }
            }
            (best.max(1) as f64).log2()
        }
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..40 {
            let n = rng.gen_range(2..=8);
            let mut w: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= s);
            for &eps in &[0.0, 0.01, 0.1, 0.3] {
                let fast = renyi0_raw(&w, eps);
                let slow = oracle(&w, eps);
                assert!((fast - slow).abs() < 1e-9, "w={w:?} eps={eps}");
            }
        }
    }

    #[test]
    fn renyi2_examples() {
        assert!((smooth_renyi2(&ProbDist::uniform(8), 0.0).unwrap() - 3.0).abs() < 1e-12);
        let v = smooth_renyi2(&dist(&[0.7, 0.3]), 0.0).unwrap();
        assert!((v + 0.58f64.log2()).abs() < 1e-12);
        assert!(smooth_renyi2(&ProbDist::uniform(2), 1.0).is_err());
    }

    #[test]
    fn renyi2_grid_oracle() {
        // Exhaustive grid over dominated subnormalized Q at resolution 1e-4.
        fn oracle2(w0: f64, w1: f64, eps: f64) -> f64 {
            let step = 1e-4;
            let target = w0 + w1 - eps;
            let mut best = f64::INFINITY;
            let mut q0 = 0.0;
            while q0 <= w0 + 1e-12 {
                let q1 = (target - q0).clamp(0.0, w1);
                if q0 + q1 >= target - 1e-9 {
                    best = best.min(q0 * q0 + q1 * q1);
                }
                q0 += step;
            }
            -best.log2()
        }
        let fast = renyi2_raw(&[0.7, 0.3], 0.2);
        let slow = oracle2(0.7, 0.3, 0.2);
        assert!((fast - slow).abs() < 1e-6, "fast={fast} slow={slow}");
        assert!(fast >= slow - 1e-9, "capping must be optimal");
    }

    #[test]
    fn renyi_monotone_in_eps() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..30 {
            let n = rng.gen_range(2..=10);
            let mut w: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= s);
            let mut prev0 = f64::INFINITY;
            let mut prev2 = f64::NEG_INFINITY;
            for i in 0..10 {
                let eps = i as f64 * 0.05;
                let r0 = renyi0_raw(&w, eps);
                let r2 = renyi2_raw(&w, eps);
                assert!(r0 <= prev0 + 1e-12, "order 0 must not increase with eps");
                assert!(r2 >= prev2 - 1e-12, "order 2 must not decrease with eps");
                prev0 = r0;
                prev2 = r2;
            }
        }
    }

    #[test]
    fn renyi_order_relation() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..200 {
            let n = rng.gen_range(2..=12);
            let mut w: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= s);
            for &eps in &[0.0, 0.02, 0.1] {
                assert!(renyi2_raw(&w, eps) <= renyi0_raw(&w, eps) + 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn renyi_at_zero_eps_exact() {
        let w = [0.4, 0.3, 0.2, 0.1];
        assert!((renyi0_raw(&w, 0.0) - 2.0).abs() < 1e-12);
        let coll: f64 = w.iter().map(|x| x * x).sum();
        assert!((renyi2_raw(&w, 0.0) + coll.log2()).abs() < 1e-12);
    }

    #[test]
    fn cond_renyi0_examples() {
        let j = JointDist::new(vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        assert!(smooth_renyi0_cond(&j, 0.0).unwrap().abs() < 1e-12);
        let j = JointDist::new(vec![
            vec![0.125, 0.125],
            vec![0.125, 0.125],
            vec![0.125, 0.125],
            vec![0.125, 0.125],
        ])
        .unwrap();
        assert!((smooth_renyi0_cond(&j, 0.0).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn cond_renyi0_exhaustive_oracle() {
        fn oracle(by_cond: &[Vec<f64>], eps: f64) -> f64 {
            let atoms: Vec<(usize, f64)> = by_cond
                .iter()
                .enumerate()
                .flat_map(|(y, row)| row.iter().map(move |&m| (y, m)))
                .filter(|&(_, m)| m > 0.0)
                .collect();
            let ny = by_cond.len();
            let n = atoms.len();
            assert!(n <= 16);
            let mut best = usize::MAX;
            for mask in 0..(1u32 << n) {
                let removed: f64 = (0..n)
                    .filter(|i| mask >> i & 1 == 1)
                    .map(|i| atoms[i].1)
                    .sum();
                if removed > eps + 1e-12 {
                    continue;
                }
                let mut worst = 0usize;
                for y in 0..ny {
                    let cnt = (0..n)
                        .filter(|&i| atoms[i].0 == y && mask >> i & 1 == 0)
                        .count();
                    worst = worst.max(cnt);
                }
                best = best.min(worst.max(1));
            }
            (best as f64).log2()
        }
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..20 {
            let mut rows = vec![vec![0.0; 4]; 4];
            let mut total = 0.0;
            for r in rows.iter_mut() {
                for v in r.iter_mut() {
                    *v = if rng.gen::<f64>() < 0.25 {
                        0.0
                    } else {
                        rng.gen::<f64>()
                    };
                    total += *v;
                }
            }
            for r in rows.iter_mut() {
                for v in r.iter_mut() {
                    *v /= total;
                }
            }
            let j = JointDist::new(rows.clone()).unwrap();
            let fast = smooth_renyi0_cond(&j, 0.1).unwrap();
            let slow = oracle(&j.by_condition(), 0.1);
            assert!((fast - slow).abs() < 1e-9, "rows={rows:?}");
        }
    }

    #[test]
    fn cond_renyi2_allocation_oracle() {
        // Exhaust the across-condition budget split on a fine grid; the
        // water-filling answer must match the best allocation.
        let rows = vec![vec![0.25, 0.05], vec![0.15, 0.2], vec![0.05, 0.3]];
        let j = JointDist::new(rows).unwrap();
        let eps = 0.12;
        let fast = smooth_renyi2_cond(&j, eps).unwrap();
        let atoms = CondAtoms::from_joint(&j.by_condition());
        let mut best = f64::INFINITY;
        let steps = 4000;
        for i in 0..=steps {
            let d0 = eps * i as f64 / steps as f64;
            let d1 = eps - d0;
            let mut worst = 0.0f64;
            for (idx, (py, cond)) in atoms.groups.iter().enumerate() {
                let budget = if idx == 0 { d0 } else { d1 };
                let m = (budget / py).min(1.0);
                let coll = if 1.0 - m <= 0.0 {
                    0.0
                } else {
                    (-renyi2_raw(cond, m)).exp2()
                };
                worst = worst.max(coll);
            }
            best = best.min(worst);
        }
        let slow = -best.log2();
        assert!(fast >= slow - 1e-6, "water fill must dominate the grid");
        assert!((fast - slow).abs() < 2e-3, "fast={fast} slow={slow}");
    }

    #[test]
    fn typeclass_uniform_and_dense_oracle() {
        let tc = TypeClassSpectrum::new(vec![0.5, 0.5], 10).unwrap();
        assert!((quantum_smooth_typeclass(Order::Zero, &tc, 0.0).unwrap() - 10.0).abs() < 1e-9);
        assert!((quantum_smooth_typeclass(Order::Two, &tc, 0.0).unwrap() - 10.0).abs() < 1e-9);

        let tc = TypeClassSpectrum::new(vec![0.7, 0.3], 10).unwrap();
        let mut dense = Vec::with_capacity(1 << 10);
        for mask in 0..(1u32 << 10) {
            let k = mask.count_ones() as i32;
            dense.push(0.7f64.powi(10 - k) * 0.3f64.powi(k));
        }
        let spec = Spectrum::new(dense).unwrap();
        for &eps in &[0.0, 0.01, 0.1, 0.4] {
            let a0 = quantum_smooth_typeclass(Order::Zero, &tc, eps).unwrap();
            let b0 = quantum_smooth(Order::Zero, &spec, eps).unwrap();
            assert!((a0 - b0).abs() < 1e-9, "order0 eps={eps}: {a0} vs {b0}");
            let a2 = quantum_smooth_typeclass(Order::Two, &tc, eps).unwrap();
            let b2 = quantum_smooth(Order::Two, &spec, eps).unwrap();
            assert!((a2 - b2).abs() < 1e-9, "order2 eps={eps}: {a2} vs {b2}");
        }

        // Repeated eigenvalues must group onto one type-class axis.
        let tc = TypeClassSpectrum::new(vec![0.4, 0.3, 0.3], 8).unwrap();
        fn expand(vals: &[f64], n: usize, acc: f64, out: &mut Vec<f64>) {
            if n == 0 {
                out.push(acc);
                return;
            }
            for &v in vals {
                expand(vals, n - 1, acc * v, out);
            }
        }
        let mut dense = Vec::new();
        expand(&[0.4, 0.3, 0.3], 8, 1.0, &mut dense);
        let spec = Spectrum::new(dense).unwrap();
        for &eps in &[0.0, 0.05] {
            for &order in &[Order::Zero, Order::Two] {
                let a = quantum_smooth_typeclass(order, &tc, eps).unwrap();
                let b = quantum_smooth(order, &spec, eps).unwrap();
                assert!((a - b).abs() < 1e-9, "eps={eps}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn typeclass_rate_converges_to_von_neumann() {
        // The per-copy rate S_alpha^eps / n approaches the von Neumann
        // entropy like 1/sqrt(n); by n = 5000 it is within 0.05 at eps 1e-3.
        let h = binary_entropy(0.1).unwrap();
        let mut prev0 = f64::INFINITY;
        let mut prev2 = f64::INFINITY;
        for &n in &[200usize, 1000, 5000] {
            let tc = TypeClassSpectrum::new(vec![0.9, 0.1], n).unwrap();
            let r0 = quantum_smooth_typeclass(Order::Zero, &tc, 1e-3).unwrap() / n as f64;
            let r2 = quantum_smooth_typeclass(Order::Two, &tc, 1e-3).unwrap() / n as f64;
            let d0 = (r0 - h).abs();
            let d2 = (r2 - h).abs();
            assert!(d0 < prev0 + 1e-12, "order-0 deviation must shrink with n");
            assert!(d2 < prev2 + 1e-12, "order-2 deviation must shrink with n");
            prev0 = d0;
            prev2 = d2;
        }
        assert!(prev0 <= 0.05, "order-0 rate deviation at n=5000: {prev0}");
        assert!(prev2 <= 0.05, "order-2 rate deviation at n=5000: {prev2}");
    }

    #[test]
    fn typeclass_deviation_scales_with_sqrt_n() {
        // |S_alpha^eps - n S| grows like c sqrt(n ln(1/eps)); the fitted c
        // must stay bounded across the n range (no faster growth).
        let h = binary_entropy(0.2).unwrap();
        let mut cs = Vec::new();
        for &n in &[50usize, 100, 400, 1000] {
            let tc = TypeClassSpectrum::new(vec![0.8, 0.2], n).unwrap();
            let s0 = quantum_smooth_typeclass(Order::Zero, &tc, 1e-3).unwrap();
            let dev = (s0 - n as f64 * h).abs();
            cs.push(dev / ((n as f64) * (1e3f64).ln()).sqrt());
        }
        let max = cs.iter().cloned().fold(0.0, f64::max);
        assert!(max < 2.0, "scaled deviation constants {cs:?} must stay bounded");
    }

    #[test]
    fn quantum_smooth_cond_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        // Single label equals unconditional.
        let rho = random_density_matrix(3, &mut rng);
        let cq = CqSpectrum::from_states(&[(1.0, rho.clone())]).unwrap();
        for &order in &[Order::Zero, Order::Two] {
            let a = quantum_smooth_cond(order, &cq, 0.05).unwrap();
            let b = quantum_smooth(order, &Spectrum::from_density(&rho), 0.05).unwrap();
            assert!((a - b).abs() < 1e-9);
        }
        // Identical conditionals, eps = 0, order 0.
        let cq = CqSpectrum::from_states(&[(0.5, rho.clone()), (0.5, rho.clone())]).unwrap();
        let a = quantum_smooth_cond(Order::Zero, &cq, 0.0).unwrap();
        let b = quantum_smooth(Order::Zero, &Spectrum::from_density(&rho), 0.0).unwrap();
        assert!((a - b).abs() < 1e-12);
        // Conditioning cannot increase the entropy (reduced-state oracle).
        for _ in 0..25 {
            let r0 = random_density_matrix(3, &mut rng);
            let r1 = random_density_matrix(3, &mut rng);
            let p: f64 = rng.gen_range(0.2..0.8);
            let cq = CqSpectrum::from_states(&[(p, r0.clone()), (1.0 - p, r1.clone())]).unwrap();
            let mix =
                DensityMatrix::new(r0.mat().scale(p).add(&r1.mat().scale(1.0 - p)).unwrap())
                    .unwrap();
            for &order in &[Order::Zero, Order::Two] {
                for &eps in &[0.0, 0.05] {
                    let cond = quantum_smooth_cond(order, &cq, eps).unwrap();
                    let unc = quantum_smooth(order, &Spectrum::from_density(&mix), eps).unwrap();
                    assert!(cond <= unc + 1e-9, "conditioning increased entropy");
                }
            }
        }
    }

    #[test]
    fn cond_bsc_matches_dense() {
        for &(n, err, eps) in &[(8usize, 0.1, 0.05), (8, 0.25, 0.02), (6, 0.0, 0.1)] {
            let fast = cond_renyi0_bsc(n, err, eps).unwrap();
            let size = 1usize << n;
            let mut rows = vec![vec![0.0; size]; size];
            for (x, row) in rows.iter_mut().enumerate() {
                for (y, v) in row.iter_mut().enumerate() {
                    let k = (x ^ y).count_ones() as i32;
                    *v = (1.0 / size as f64) * (1.0 - err).powi(n as i32 - k) * err.powi(k);
                }
            }
            let j = JointDist::new(rows).unwrap();
            let slow = smooth_renyi0_cond(&j, eps).unwrap();
            assert!(
                (fast - slow).abs() < 1e-9,
                "n={n} err={err} eps={eps}: {fast} vs {slow}"
            );
        }
    }

    #[test]
    fn almost_product_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        // Exact product: bound reads S(X|B) >= S(X) - 1/e.
        let shared = random_density_matrix(3, &mut rng);
        let (lhs, rhs) =
            almost_product_bound(&[0.5, 0.5], &[shared.clone(), shared.clone()]).unwrap();
        assert!((lhs - 1.0).abs() < 1e-9, "S(X|B) = S(X) for product");
        assert!((rhs - (1.0 - INV_E)).abs() < 1e-9);
        assert!(lhs >= rhs);
        // X copied into B.
        let b0 = PureState::basis(2, 0).projector();
        let b1 = PureState::basis(2, 1).projector();
        let (lhs, rhs) = almost_product_bound(&[0.5, 0.5], &[b0, b1]).unwrap();
        assert!(lhs.abs() < 1e-9, "S(X|B) = 0 when B stores X");
        assert!(lhs >= rhs, "bound must hold: lhs={lhs} rhs={rhs}");
    }
}
