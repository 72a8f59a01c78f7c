//! Finite-block machinery: collective-attack sampling, parameter
//! estimation, random-binning error correction, Toeplitz privacy
//! amplification, finite key-length accounting, and direct verification of
//! the composable security definition at tiny block lengths.
//!
//! Everything randomized draws from a counter-based, seeded, splittable
//! generator; distinct operations use distinct stream identifiers, so every
//! Monte-Carlo figure is bit-reproducible from the seed alone.
//!
//! The direct security check computes the trace distance between the real
//! key-plus-adversary state and an ideal uniform key exactly. The n-fold
//! adversary state is block diagonal over the pattern of error events, so
//! the 4^n-dimensional computation splits into 2^n blocks of dimension
//! 2^n; the computation is exact, never sampled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::entropy::{
    bsc_ball_radius, cond_renyi0_bsc, quantum_smooth_typeclass, CqSpectrum, Order, Spectrum,
    TypeClassSpectrum,
};
use crate::qmat::{eig_hermitian, ComplexMatrix};
use crate::states::BellDiagonal;
use crate::{Error, Result};

// Stream identifiers for the splittable generator.
const STREAM_SAMPLE: u64 = 1;
const STREAM_ESTIMATE: u64 = 2;
const STREAM_SAMPLING_CHECK: u64 = 3;
const STREAM_SECURITY: u64 = 4;

fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Rank of a set of GF(2) row vectors packed into u64 words.
fn gf2_rank(rows: &[u64]) -> usize {
    let mut basis: Vec<u64> = Vec::new();
    for &row in rows {
        let mut r = row;
        for &b in &basis {
            let pivot = 1u64 << (63 - b.leading_zeros());
            if r & pivot != 0 {
                r ^= b;
            }
        }
        if r != 0 {
            basis.push(r);
        }
    }
    basis.len()
}

/// Bit strings sampled from a collective attack.
#[derive(Debug, Clone)]
pub struct SampleRecord {
    pub n: usize,
    pub x: Vec<u8>,
    pub y: Vec<u8>,
    pub lambda: BellDiagonal,
    pub seed: u64,
}

/// Draw n i.i.d. bit pairs from the measurement statistics of the attack
/// state: Alice's bit is uniform, Bob's differs with probability Q.
pub fn sample_collective(lambda: &BellDiagonal, n: usize, seed: u64) -> SampleRecord {
    let mut rng = rng_stream(seed, STREAM_SAMPLE);
    let q = lambda.qber();
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let xb = u8::from(rng.gen::<f64>() < 0.5);
        let flip = rng.gen::<f64>() < q;
        x.push(xb);
        y.push(xb ^ u8::from(flip));
    }
    SampleRecord {
        n,
        x,
        y,
        lambda: *lambda,
        seed,
    }
}

/// Estimate the QBER on a random k-subset of the record; abort when the
/// estimate exceeds the threshold. The subset is drawn without replacement
/// from the record's own seed.
pub fn estimate_qber(rec: &SampleRecord, k: usize, threshold: f64) -> Result<(f64, bool)> {
    if k == 0 || k > rec.n {
        return Err(Error::OutOfRange(format!(
            "estimation sample size {k} out of 1..={}",
            rec.n
        )));
    }
    let mut rng = rng_stream(rec.seed, STREAM_ESTIMATE);
    let mut idx: Vec<usize> = (0..rec.n).collect();
    for i in 0..k {
        let j = rng.gen_range(i..rec.n);
        idx.swap(i, j);
    }
    let errors = idx[..k].iter().filter(|&&i| rec.x[i] != rec.y[i]).count();
    let estimate = errors as f64 / k as f64;
    Ok((estimate, estimate > threshold))
}

/// Failure probability bound for two-sample measurement consistency on a
/// symmetric state: min(1, 2^(n_e + n_f) exp(-n eps^2 / 8)).
pub fn sampling_bound(n: usize, eps: f64, n_e: usize, n_f: usize) -> f64 {
    if eps <= 0.0 {
        return 1.0;
    }
    let log = (n_e + n_f) as f64 * std::f64::consts::LN_2 - n as f64 * eps * eps / 8.0;
    log.exp().min(1.0)
}

/// Outcome of the empirical two-measurement consistency check.
#[derive(Debug, Clone)]
pub struct SamplingCheckReport {
    pub trials: usize,
    pub violations: usize,
    pub bound: f64,
    /// True when the bound exceeds 1 and the check asserts nothing.
    pub vacuous: bool,
    pub worst_statistic: f64,
}

/// Monte-Carlo check of the two-sample consistency statement on a product
/// attack state: the first measurement reads the error parity of k pairs,
/// the second the Bell-basis frequencies of the remaining n - k pairs. The
/// weighted distance of both empirical frequency vectors to the true
/// single-pair statistics exceeds eps with probability at most
/// [`sampling_bound`] (with 2 and 4 outcomes respectively).
pub fn sampling_consistency_check(
    lambda: &BellDiagonal,
    n: usize,
    k: usize,
    eps: f64,
    trials: usize,
    seed: u64,
) -> Result<SamplingCheckReport> {
    if k == 0 || k >= n {
        return Err(Error::OutOfRange(format!("subset size {k} out of 1..{n}")));
    }
    let q = lambda.qber();
    let lam = lambda.lambda();
    let parity_true = [1.0 - q, q];
    let mut rng = rng_stream(seed, STREAM_SAMPLING_CHECK);
    let mut violations = 0usize;
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let mut same = 0usize;
        for _ in 0..k {
            if rng.gen::<f64>() >= q {
                same += 1;
            }
        }
        let emp_parity = [same as f64 / k as f64, (k - same) as f64 / k as f64];
        let mut bell_counts = [0usize; 4];
        for _ in 0..(n - k) {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut cell = 3;
            for (i, &l) in lam.iter().enumerate() {
                acc += l;
                if u < acc {
                    cell = i;
                    break;
                }
            }
            bell_counts[cell] += 1;
        }
        let d_parity: f64 = 0.5
            * (0..2)
                .map(|i| (emp_parity[i] - parity_true[i]).abs())
                .sum::<f64>();
        let d_bell: f64 = 0.5
            * (0..4)
                .map(|i| (bell_counts[i] as f64 / (n - k) as f64 - lam[i]).abs())
                .sum::<f64>();
        let stat = (k as f64 / n as f64) * d_parity + ((n - k) as f64 / n as f64) * d_bell;
        worst = worst.max(stat);
        if stat > eps {
            violations += 1;
        }
    }
    let bound = sampling_bound(n, eps, 2, 4);
    Ok(SamplingCheckReport {
        trials,
        violations,
        bound,
        vacuous: bound >= 1.0,
        worst_statistic: worst,
    })
}

/// Seed bits of a Toeplitz matrix over GF(2) mapping n bits to ell bits;
/// the seed has length n + ell - 1 and entry (i, j) is bit i + (n-1) - j.
///
/// The first rows of a longer-output matrix form the shorter-output matrix
/// of the seed prefix, which makes key-length sweeps exactly nested.
#[derive(Debug, Clone)]
pub struct ToeplitzSeed {
    bits: Vec<u8>,
}

impl ToeplitzSeed {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::OutOfRange("seed bits must be 0/1".into()));
        }
        Ok(Self { bits })
    }

    pub fn random(n: usize, ell: usize, rng: &mut impl Rng) -> Self {
        let bits = (0..n + ell - 1)
            .map(|_| u8::from(rng.gen::<bool>()))
            .collect();
        Self { bits }
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }
}

/// Toeplitz hash: GF(2) matrix-vector product to ell output bits.
pub fn toeplitz_hash(input: &[u8], seed: &ToeplitzSeed, ell: usize) -> Result<Vec<u8>> {
    let n = input.len();
    if seed.bits.len() != n + ell - 1 {
        return Err(Error::DimMismatch(format!(
            "seed length {} != n + ell - 1 = {}",
            seed.bits.len(),
            n + ell - 1
        )));
    }
    let mut out = vec![0u8; ell];
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0u8;
        for (j, &xj) in input.iter().enumerate() {
            acc ^= seed.bits[i + (n - 1) - j] & xj;
        }
        *o = acc;
    }
    Ok(out)
}

/// Result of one random-binning error-correction run.
#[derive(Debug, Clone)]
pub struct EcResult {
    /// Number of syndrome bits sent.
    pub leak_bits: usize,
    /// Decoder output.
    pub decoded: Vec<u8>,
    /// True when the decoder reproduced Alice's string.
    pub success: bool,
}

/// Random-binning error correction at error rate `err`: Alice sends a
/// Toeplitz syndrome of m = ceil(log2 |ball| + log2(1/eps')) bits with
/// eps' = eps/2; Bob searches the Hamming ball around his string of the
/// radius capturing 1 - eps' of the error weight, in order of increasing
/// distance, for a matching syndrome.
pub fn ec_random_binning(
    x: &[u8],
    y: &[u8],
    err: f64,
    eps: f64,
    rng: &mut impl Rng,
) -> Result<EcResult> {
    let n = x.len();
    if y.len() != n {
        return Err(Error::DimMismatch("strings differ in length".into()));
    }
    if n == 0 || n > 20 {
        return Err(Error::OutOfRange(format!(
            "exhaustive decoding supports 1..=20 bits, got {n}"
        )));
    }
    if !(0.0 < eps && eps < 1.0) {
        return Err(Error::OutOfRange(format!("error-correction eps {eps}")));
    }
    let eps_prime = eps / 2.0;
    let (radius, log2_vol) = bsc_ball_radius(n, err, eps_prime)?;
    let m = (log2_vol + (1.0 / eps_prime).log2()).ceil().max(1.0) as usize;
    let seed = ToeplitzSeed::random(n, m, rng);
    let syndrome = toeplitz_hash(x, &seed, m)?;

    // Enumerate the ball around y by distance, then by flip pattern.
    let mut candidate = y.to_vec();
    let mut decoded = None;
    'outer: for d in 0..=radius {
        if d == 0 {
            if toeplitz_hash(y, &seed, m)? == syndrome {
                decoded = Some(y.to_vec());
                break 'outer;
            }
            continue;
        }
        let mut positions: Vec<usize> = (0..d).collect();
        loop {
            candidate.copy_from_slice(y);
            for &p in &positions {
                candidate[p] ^= 1;
            }
            if toeplitz_hash(&candidate, &seed, m)? == syndrome {
                decoded = Some(candidate.clone());
                break 'outer;
            }
            // Advance to the next d-combination of positions.
            let mut i = d;
            let mut advanced = false;
            while i > 0 {
                i -= 1;
                if positions[i] != i + n - d {
                    positions[i] += 1;
                    for j in i + 1..d {
                        positions[j] = positions[j - 1] + 1;
                    }
                    advanced = true;
                    break;
                }
            }
            if !advanced {
                break;
            }
        }
    }
    match decoded {
        Some(dec) => {
            let success = dec == x;
            Ok(EcResult {
                leak_bits: m,
                decoded: dec,
                success,
            })
        }
        None => Ok(EcResult {
            leak_bits: m,
            decoded: y.to_vec(),
            success: false,
        }),
    }
}

/// Finite key-length accounting output. The epsilon fields expose the
/// additive-constant choices that the asymptotic statements leave open.
#[derive(Debug, Clone)]
pub struct FiniteKeyResult {
    pub n: usize,
    pub eps: f64,
    /// Extractable key length in bits (clamped to [0, n]).
    pub ell: usize,
    /// Error-correction leakage in bits.
    pub leak_ec: usize,
    /// Order-2 smooth entropy of the string-plus-adversary block.
    pub s2: f64,
    /// Order-0 smooth entropy of the adversary block.
    pub s0: f64,
    /// Smoothing parameter used inside the entropies.
    pub eps_smooth: f64,
    /// Privacy-amplification share of eps.
    pub eps_pa: f64,
    /// Error-correction share of eps.
    pub eps_ec: f64,
}

/// Per-copy spectra of the string-plus-adversary state and the adversary
/// marginal, for the q-flipped key bit of a Bell-diagonal attack.
pub fn attack_spectra(lambda: &BellDiagonal, q: f64) -> Result<(CqSpectrum, Spectrum)> {
    if !(0.0..=0.5).contains(&q) {
        return Err(Error::OutOfRange(format!("flip probability {q}")));
    }
    let (s0, s1, _) = lambda.eve_conditionals();
    let mix = |a: &ComplexMatrix, b: &ComplexMatrix| -> Result<Spectrum> {
        let m = a.scale(1.0 - q).add(&b.scale(q))?;
        let (w, _) = eig_hermitian(&m)?;
        Spectrum::new(w.into_iter().map(|v| v.max(0.0)).collect())
    };
    let spec_u0 = mix(s0.mat(), s1.mat())?;
    let spec_u1 = mix(s1.mat(), s0.mat())?;
    let cq = CqSpectrum::new(vec![(0.5, spec_u0), (0.5, spec_u1)])?;
    let e_marginal = Spectrum::new(lambda.lambda().to_vec())?;
    Ok((cq, e_marginal))
}

/// Key length extractable by two-universal hashing from n copies of a cq
/// state: ell <= S2^{eps'}(Z E) - S0^{eps'}(E) - 2 log2(1/eps) with
/// eps' = (eps/8)^2, evaluated exactly over type classes.
pub fn pa_keylength(
    cq: &CqSpectrum,
    e_marginal: &Spectrum,
    n: usize,
    eps: f64,
) -> Result<FiniteKeyResult> {
    if !(0.0 < eps && eps < 1.0) {
        return Err(Error::OutOfRange(format!("security parameter {eps}")));
    }
    let eps_prime = (eps / 8.0) * (eps / 8.0);
    let joint = cq.joint_spectrum();
    let s2 = quantum_smooth_typeclass(
        Order::Two,
        &TypeClassSpectrum::new(joint.values().to_vec(), n)?,
        eps_prime,
    )?;
    let s0 = quantum_smooth_typeclass(
        Order::Zero,
        &TypeClassSpectrum::new(e_marginal.values().to_vec(), n)?,
        eps_prime,
    )?;
    let raw = s2 - s0 - 2.0 * (1.0 / eps).log2();
    let ell = raw.floor().max(0.0).min(n as f64) as usize;
    Ok(FiniteKeyResult {
        n,
        eps,
        ell,
        leak_ec: 0,
        s2,
        s0,
        eps_smooth: eps_prime,
        eps_pa: eps,
        eps_ec: 0.0,
    })
}

/// Finite key length with error correction charged at its
/// information-theoretic size:
/// ell = S2^{eps'}(UE^n) - S0^{eps'}(E^n) - m - 2 log2(1/eps_pa), with the
/// overall eps split evenly between privacy amplification, error
/// correction, and slack.
pub fn finite_rate(lambda: &BellDiagonal, q: f64, n: usize, eps: f64) -> Result<FiniteKeyResult> {
    if !(0.0 < eps && eps < 1.0) {
        return Err(Error::OutOfRange(format!("security parameter {eps}")));
    }
    let eps_pa = eps / 3.0;
    let eps_ec = eps / 3.0;
    let eps_smooth = (eps_pa / 8.0) * (eps_pa / 8.0);
    let (cq, e_marginal) = attack_spectra(lambda, q)?;
    let joint = cq.joint_spectrum();
    let s2 = quantum_smooth_typeclass(
        Order::Two,
        &TypeClassSpectrum::new(joint.values().to_vec(), n)?,
        eps_smooth,
    )?;
    let s0 = quantum_smooth_typeclass(
        Order::Zero,
        &TypeClassSpectrum::new(e_marginal.values().to_vec(), n)?,
        eps_smooth,
    )?;
    let qber = lambda.qber();
    let err_u = q * (1.0 - qber) + (1.0 - q) * qber;
    let eps_ec_prime = eps_ec / 2.0;
    let h0_cond = cond_renyi0_bsc(n, err_u, eps_ec_prime)?;
    let leak = (h0_cond + (1.0 / eps_ec_prime).log2()).ceil().max(0.0) as usize;
    let raw = s2 - s0 - leak as f64 - 2.0 * (1.0 / eps_pa).log2();
    let ell = raw.floor().max(0.0).min(n as f64) as usize;
    Ok(FiniteKeyResult {
        n,
        eps,
        ell,
        leak_ec: leak,
        s2,
        s0,
        eps_smooth,
        eps_pa,
        eps_ec,
    })
}

/// Exact composable-security distance for hashing n raw bits of a
/// Bell-diagonal attack down to ell bits: the trace distance between the
/// hashed-key-plus-adversary state and a uniform key decoupled from the
/// adversary, averaged over `num_seeds` Toeplitz seeds (the seed is handed
/// to the adversary). Returns the distance and whether it is <= eps.
///
/// Seeds are drawn conditioned on the full n x n Toeplitz matrix being
/// invertible; every output-length prefix is then surjective. Without the
/// conditioning a rank-deficient hash leaves the key itself nonuniform,
/// which adds a distance term unrelated to the adversary's correlations.
/// The conditioning also keeps the distance exactly nondecreasing in ell:
/// the first ell rows of a longer hash form the shorter hash, and
/// discarding key bits cannot increase the distance.
pub fn direct_security(
    lambda: &BellDiagonal,
    n: usize,
    ell: usize,
    eps: f64,
    num_seeds: usize,
    seed: u64,
) -> Result<(f64, bool)> {
    if n == 0 || 4usize.pow(n as u32) > 4096 {
        return Err(Error::OutOfRange(format!(
            "direct security supports 4^n <= 4096 (n <= 6), got n = {n}"
        )));
    }
    if ell > n {
        return Err(Error::OutOfRange(format!("ell = {ell} exceeds n = {n}")));
    }
    if num_seeds == 0 {
        return Err(Error::OutOfRange("need at least one hash seed".into()));
    }
    if ell == 0 {
        return Ok((0.0, true));
    }
    let [l1, l2, l3, l4] = lambda.lambda();
    // Per-site amplitude factors: block 0 (no error) carries (sqrt l1,
    // sqrt l2), block 1 (error) carries (sqrt l3, sqrt l4).
    let amp = [[l1.sqrt(), l2.sqrt()], [l3.sqrt(), l4.sqrt()]];
    let size = 1usize << n; // within-block dimension and z-count
    let p_z = 1.0 / size as f64;
    let mut rng = rng_stream(seed, STREAM_SECURITY);
    let mut total = 0.0f64;
    for _ in 0..num_seeds {
        // Draw the full-length seed (shorter outputs nest exactly) until
        // the square matrix is invertible over GF(2).
        let full_masks: Vec<u64> = loop {
            let bits: Vec<u8> = (0..(n + n - 1))
                .map(|_| u8::from(rng.gen::<bool>()))
                .collect();
            let masks: Vec<u64> = (0..n)
                .map(|i| {
                    let mut m = 0u64;
                    for j in 0..n {
                        if bits[i + (n - 1) - j] == 1 {
                            m |= 1 << j;
                        }
                    }
                    m
                })
                .collect();
            if gf2_rank(&masks) == n {
                break masks;
            }
        };
        let masks = &full_masks[..ell];
        let hash = |z: u64| -> usize {
            let mut s = 0usize;
            for (i, m) in masks.iter().enumerate() {
                s |= (((z & m).count_ones() & 1) as usize) << i;
            }
            s
        };
        let hashed: Vec<usize> = (0..size as u64).map(hash).collect();

        let mut dist = 0.0f64;
        let keys = 1usize << ell;
        let uniform = 1.0 / keys as f64;
        for s in 0..keys {
            // chi(u) = sum_z gamma_z (-1)^{z . u}.
            let mut chi = vec![0.0f64; size];
            for (u, c) in chi.iter_mut().enumerate() {
                let mut acc = 0.0f64;
                for (z, &hz) in hashed.iter().enumerate() {
                    let gamma = p_z * (f64::from(u8::from(hz == s)) - uniform);
                    if gamma != 0.0 {
                        let sign = if ((z as u64) & (u as u64)).count_ones() & 1 == 1 {
                            -1.0
                        } else {
                            1.0
                        };
                        acc += gamma * sign;
                    }
                }
                *c = acc;
            }
            // Per block: M[t][t'] = A(b,t) A(b,t') chi(t xor t').
            for b in 0..size {
                let mut a = vec![0.0f64; size];
                let mut all_zero = true;
                for (t, at) in a.iter_mut().enumerate() {
                    let mut prod = 1.0;
                    for site in 0..n {
                        let bi = (b >> site) & 1;
                        let ti = (t >> site) & 1;
                        prod *= amp[bi][ti];
                    }
                    *at = prod;
                    if prod != 0.0 {
                        all_zero = false;
                    }
                }
                if all_zero {
                    continue;
                }
                let m = ComplexMatrix::from_fn(size, |t, t2| {
                    num_complex::Complex64::new(a[t] * a[t2] * chi[t ^ t2], 0.0)
                });
                let (w, _) = eig_hermitian(&m)?;
                dist += 0.5 * w.iter().map(|v| v.abs()).sum::<f64>();
            }
        }
        total += dist;
    }
    let distance = total / num_seeds as f64;
    Ok((distance, distance <= eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::{binary_entropy, von_neumann_spectrum};
    use crate::qmat::{self, DensityMatrix};
    use crate::states::BellDiagonal;

    fn bd(l: [f64; 4]) -> BellDiagonal {
        BellDiagonal::new(l).unwrap()
    }

    #[test]
    fn sampling_is_deterministic_and_exact() {
        let lam = bd([1.0, 0.0, 0.0, 0.0]);
        let rec = sample_collective(&lam, 500, 7);
        assert_eq!(rec.x, rec.y, "perfect correlations");
        let rec2 = sample_collective(&lam, 500, 7);
        assert_eq!(rec.x, rec2.x, "bit-identical across runs");
        let rec3 = sample_collective(&lam, 500, 8);
        assert_ne!(rec.x, rec3.x, "different seeds differ");
    }

    #[test]
    fn sampling_frequencies_converge() {
        let lam = bd([0.25, 0.25, 0.25, 0.25]);
        let rec = sample_collective(&lam, 100_000, 11);
        let errors = rec
            .x
            .iter()
            .zip(rec.y.iter())
            .filter(|(a, b)| a != b)
            .count() as f64;
        let emp = errors / rec.n as f64;
        let sigma = (0.5 * 0.5 / rec.n as f64).sqrt();
        assert!((emp - 0.5).abs() < 3.0 * sigma, "empirical QBER {emp}");
        let (_, _, p_xy) = lam.eve_conditionals();
        for x in 0..2u8 {
            for y in 0..2u8 {
                let count = rec
                    .x
                    .iter()
                    .zip(rec.y.iter())
                    .filter(|(a, b)| **a == x && **b == y)
                    .count() as f64;
                let p = p_xy.rows()[x as usize][y as usize];
                let sigma = (p * (1.0 - p) / rec.n as f64).sqrt();
                assert!((count / rec.n as f64 - p).abs() < 3.0 * sigma);
            }
        }
    }

    #[test]
    fn qber_estimation() {
        let lam = bd([1.0, 0.0, 0.0, 0.0]);
        let rec = sample_collective(&lam, 200, 3);
        let (est, abort) = estimate_qber(&rec, 50, 0.11).unwrap();
        assert_eq!(est, 0.0);
        assert!(!abort);
        // Full-string estimate equals the exact Hamming fraction.
        let lam = bd([0.7, 0.1, 0.1, 0.1]);
        let rec = sample_collective(&lam, 300, 5);
        let exact = rec
            .x
            .iter()
            .zip(rec.y.iter())
            .filter(|(a, b)| a != b)
            .count() as f64
            / 300.0;
        let (est, _) = estimate_qber(&rec, 300, 0.5).unwrap();
        assert!((est - exact).abs() < 1e-12);
        // High noise aborts against a low threshold.
        let lam = bd([0.6, 0.2, 0.1, 0.1]);
        let mut aborts = 0;
        for seed in 0..100 {
            let rec = sample_collective(&lam, 2000, seed);
            let (_, abort) = estimate_qber(&rec, 1000, 0.11).unwrap();
            aborts += usize::from(abort);
        }
        assert_eq!(aborts, 100, "Q = 0.2 must abort at threshold 0.11");
        assert!(estimate_qber(&sample_collective(&lam, 10, 0), 0, 0.1).is_err());
    }

    #[test]
    fn sampling_bound_behavior() {
        assert_eq!(sampling_bound(1000, 0.0, 4, 4), 1.0);
        let b = sampling_bound(100_000, 0.05, 4, 4);
        let expect = 256.0 * (-100_000.0 * 0.0025 / 8.0f64).exp();
        assert!((b - expect).abs() < 1e-18);
        assert!(b < 1e-10, "bound far below one at n = 1e5");
        let mut prev = 1.0;
        for n in [1000, 5000, 20_000, 100_000] {
            let v = sampling_bound(n, 0.05, 4, 4);
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn sampling_check_perfect_state_statistic_zero() {
        let report =
            sampling_consistency_check(&bd([1.0, 0.0, 0.0, 0.0]), 1000, 500, 0.05, 50, 1).unwrap();
        assert_eq!(report.violations, 0);
        assert!(report.worst_statistic.abs() < 1e-12, "statistic must vanish");
    }

    #[test]
    fn sampling_check_no_violations_at_large_n() {
        let lam = bd([0.85, 0.05, 0.05, 0.05]);
        let report = sampling_consistency_check(&lam, 100_000, 50_000, 0.05, 50, 2).unwrap();
        assert_eq!(report.violations, 0);
        assert!(!report.vacuous, "bound must bite at n = 1e5");
        // Tiny eps at small n: vacuous bound, reported as such.
        let report = sampling_consistency_check(&lam, 100, 50, 0.001, 10, 3).unwrap();
        assert!(report.vacuous);
        assert!(report.bound >= 1.0);
    }

    #[test]
    fn toeplitz_linearity() {
        let mut rng = rng_stream(17, 99);
        let n = 24;
        let ell = 8;
        let seed = ToeplitzSeed::random(n, ell, &mut rng);
        let zero = vec![0u8; n];
        assert_eq!(toeplitz_hash(&zero, &seed, ell).unwrap(), vec![0u8; ell]);
        for _ in 0..50 {
            let a: Vec<u8> = (0..n).map(|_| u8::from(rng.gen::<bool>())).collect();
            let b: Vec<u8> = (0..n).map(|_| u8::from(rng.gen::<bool>())).collect();
            let xor: Vec<u8> = a.iter().zip(b.iter()).map(|(p, q)| p ^ q).collect();
            let ha = toeplitz_hash(&a, &seed, ell).unwrap();
            let hb = toeplitz_hash(&b, &seed, ell).unwrap();
            let hx = toeplitz_hash(&xor, &seed, ell).unwrap();
            let hsum: Vec<u8> = ha.iter().zip(hb.iter()).map(|(p, q)| p ^ q).collect();
            assert_eq!(hx, hsum, "hash must be GF(2)-linear");
        }
        assert!(toeplitz_hash(&zero, &seed, ell + 1).is_err());
    }

    #[test]
    fn toeplitz_collision_rate_smoke() {
        let mut rng = rng_stream(23, 98);
        let n = 20;
        let ell = 6;
        let trials = 10_000;
        let mut collisions = 0usize;
        for _ in 0..trials {
            let seed = ToeplitzSeed::random(n, ell, &mut rng);
            let a: Vec<u8> = (0..n).map(|_| u8::from(rng.gen::<bool>())).collect();
            let mut b: Vec<u8> = (0..n).map(|_| u8::from(rng.gen::<bool>())).collect();
            if a == b {
                b[0] ^= 1;
            }
            if toeplitz_hash(&a, &seed, ell).unwrap() == toeplitz_hash(&b, &seed, ell).unwrap() {
                collisions += 1;
            }
        }
        let p = 2.0f64.powi(-(ell as i32));
        let rate = collisions as f64 / trials as f64;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        assert!(rate <= p + 5.0 * sigma, "collision rate {rate} vs bound {p}");
    }

    #[test]
    fn ec_identical_strings() {
        let mut rng = rng_stream(31, 97);
        let x: Vec<u8> = (0..12).map(|_| u8::from(rng.gen::<bool>())).collect();
        let r = ec_random_binning(&x, &x, 0.05, 0.1, &mut rng).unwrap();
        assert!(r.success);
        assert_eq!(r.decoded, x);
        assert!(r.leak_bits < 12, "few leak bits when x = y and err small");
    }

    #[test]
    fn ec_monte_carlo_contract_smoke() {
        let lam = bd([0.85, 0.05, 0.05, 0.05]);
        let mut rng = rng_stream(37, 96);
        let mut failures = 0usize;
        let trials = 200;
        let mut leak = 0usize;
        for t in 0..trials {
            let rec = sample_collective(&lam, 14, 1000 + t as u64);
            let r = ec_random_binning(&rec.x, &rec.y, 0.1, 0.1, &mut rng).unwrap();
            failures += usize::from(!r.success);
            leak = r.leak_bits;
        }
        assert!(
            (failures as f64) / (trials as f64) <= 0.1,
            "{failures}/{trials} failures"
        );
        let h = binary_entropy(0.1).unwrap();
        assert!(
            leak as f64 >= 14.0 * h - 2.0 * (14.0f64).sqrt(),
            "leak {leak} too small"
        );
    }

    #[test]
    fn pa_perfect_key() {
        let lam = bd([1.0, 0.0, 0.0, 0.0]);
        let (cq, e) = attack_spectra(&lam, 0.0).unwrap();
        let r = pa_keylength(&cq, &e, 100, 1e-6).unwrap();
        assert_eq!(r.ell, 60, "100 - 2 log2(1e6) floors to 60, got {}", r.ell);
        assert!((r.s2 - 100.0).abs() < 1e-6);
        assert!(r.s0.abs() < 1e-9);
    }

    #[test]
    fn pa_limiting_eps() {
        let lam = bd([0.85, 0.05, 0.05, 0.05]);
        let (cq, e) = attack_spectra(&lam, 0.0).unwrap();
        let r = pa_keylength(&cq, &e, 200, 0.9999).unwrap();
        // The subtraction term vanishes; ell approaches S2 - S0.
        assert!(((r.s2 - r.s0) - r.ell as f64).abs() <= 1.01);
    }

    #[test]
    fn finite_rate_perfect_and_bounds() {
        let lam = bd([1.0, 0.0, 0.0, 0.0]);
        let r = finite_rate(&lam, 0.0, 100, 1e-6).unwrap();
        assert!(r.ell >= 100 - 70, "ell = {}", r.ell);
        assert!(r.ell <= 100);
        let lam = bd([0.85, 0.05, 0.05, 0.05]);
        for &n in &[50usize, 200, 1000] {
            let r = finite_rate(&lam, 0.0, n, 1e-6).unwrap();
            assert!(r.ell <= n);
        }
    }

    #[test]
    fn finite_rate_fraction_nondecreasing() {
        let lam = bd([0.925, 0.025, 0.025, 0.025]);
        let mut prev = -1.0;
        for &n in &[50usize, 100, 500, 1000] {
            let r = finite_rate(&lam, 0.0, n, 1e-6).unwrap();
            let frac = r.ell as f64 / n as f64;
            assert!(frac >= prev - 1e-12, "ell/n must not decrease");
            prev = frac;
        }
    }

    #[test]
    fn direct_security_trivial_cases() {
        let lam = bd([0.85, 0.05, 0.05, 0.05]);
        let (d, ok) = direct_security(&lam, 4, 0, 0.1, 4, 5).unwrap();
        assert_eq!(d, 0.0);
        assert!(ok);
        // Pure attack: adversary uncorrelated, any ell is perfect.
        let pure = bd([1.0, 0.0, 0.0, 0.0]);
        for ell in 1..=4 {
            let (d, _) = direct_security(&pure, 4, ell, 0.1, 4, 5).unwrap();
            assert!(d < 1e-10, "ell={ell}: distance {d}");
        }
        assert!(direct_security(&lam, 7, 1, 0.1, 1, 1).is_err());
    }

    #[test]
    fn direct_security_matches_dense_reference() {
        // n = 2: build the adversary blocks densely and compare.
        let lam = bd([0.7, 0.1, 0.12, 0.08]);
        let n = 2usize;
        let ell = 1usize;
        let seed = 9u64;
        let num_seeds = 3usize;
        let (fast, _) = direct_security(&lam, n, ell, 0.5, num_seeds, seed).unwrap();

        let (s0, s1, _) = lam.eve_conditionals();
        let sig = [s0, s1];
        let mut rng = rng_stream(seed, STREAM_SECURITY);
        let mut total = 0.0;
        for _ in 0..num_seeds {
            let full_masks: Vec<u64> = loop {
                let bits: Vec<u8> = (0..(n + n - 1))
                    .map(|_| u8::from(rng.gen::<bool>()))
                    .collect();
                let masks: Vec<u64> = (0..n)
                    .map(|i| {
                        let mut m = 0u64;
                        for j in 0..n {
                            if bits[i + (n - 1) - j] == 1 {
                                m |= 1 << j;
                            }
                        }
                        m
                    })
                    .collect();
                if super::gf2_rank(&masks) == n {
                    break masks;
                }
            };
            let masks = &full_masks[..ell];
            let hash = |z: u64| -> usize {
                let mut s = 0usize;
                for (i, m) in masks.iter().enumerate() {
                    s |= (((z & m).count_ones() & 1) as usize) << i;
                }
                s
            };
            let dim = 16usize;
            let mut rho_s = vec![ComplexMatrix::zeros(dim); 1 << ell];
            let mut rho_e = ComplexMatrix::zeros(dim);
            for z in 0..(1usize << n) {
                let z0 = z & 1;
                let z1 = (z >> 1) & 1;
                // Site 0 is the low bit; the kron order must match the
                // sector computation's site indexing.
                let prod = sig[z1].mat().kron(sig[z0].mat()).scale(0.25);
                rho_e = rho_e.add(&prod).unwrap();
                let s = hash(z as u64);
                rho_s[s] = rho_s[s].add(&prod).unwrap();
            }
            let keys = 1usize << ell;
            let mut dist = 0.0;
            for s in 0..keys {
                let diff = rho_s[s].sub(&rho_e.scale(1.0 / keys as f64)).unwrap();
                let (w, _) = eig_hermitian(&diff).unwrap();
                dist += 0.5 * w.iter().map(|v| v.abs()).sum::<f64>();
            }
            total += dist;
        }
        let slow = total / num_seeds as f64;
        assert!((fast - slow).abs() < 1e-10, "sector {fast} vs dense {slow}");
    }

    #[test]
    fn direct_security_monotone_in_ell() {
        let lam = bd([0.85, 0.05, 0.05, 0.05]);
        let mut prev = 0.0;
        for ell in 1..=4 {
            let (d, _) = direct_security(&lam, 4, ell, 1.0 - 1e-9, 6, 13).unwrap();
            assert!(d >= prev - 1e-12, "distance must not decrease with ell");
            prev = d;
        }
        assert!(prev > 0.0, "noisy attack leaves residual correlations");
    }

    #[test]
    fn attack_spectra_consistency() {
        let lam = bd([0.6, 0.2, 0.15, 0.05]);
        let q = 0.2;
        let (cq, e) = attack_spectra(&lam, q).unwrap();
        let (s0, s1, _) = lam.eve_conditionals();
        let m0 =
            DensityMatrix::new(s0.mat().scale(1.0 - q).add(&s1.mat().scale(q)).unwrap()).unwrap();
        let direct = Spectrum::from_density(&m0);
        let got = &cq.entries()[0].1;
        for (a, b) in got.values().iter().zip(direct.values().iter()) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(
            (von_neumann_spectrum(&e)
                - von_neumann_spectrum(&Spectrum::new(lam.lambda().to_vec()).unwrap()))
            .abs()
                < 1e-12
        );
        // Marginal equals the adversary side of the purification.
        let tri = lam.purification();
        let full = tri.psi.projector();
        let rho_e = qmat::partial_trace(&full, &[4, 4], &[1]).unwrap();
        let spec_e = Spectrum::from_density(&rho_e);
        for (a, b) in e.values().iter().zip(spec_e.values().iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
