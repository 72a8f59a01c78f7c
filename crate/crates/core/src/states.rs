//! Bell-basis formalism and protocol definitions.
//!
//! Collective attacks on the protocols treated here are parameterized by
//! Bell-diagonal two-qubit states with weights lambda = (l1, l2, l3, l4)
//! ordered as (Phi+, Phi-, Psi+, Psi-), where Phi± = (|00> ± |11>)/sqrt(2)
//! and Psi± = (|01> ± |10>)/sqrt(2). The quantum bit error rate of such a
//! state under computational-basis measurements is Q = l3 + l4.
//!
//! The module provides the depolarizing twirl onto the Bell diagonal, the
//! sifting-weighted encoding average, the stronger twirl that also
//! equalizes the two Psi weights, the canonical purification held by the
//! adversary, the adversary's conditional states, and the per-protocol
//! encoding operators and QBER-constraint families.

use num_complex::Complex64;

use crate::qmat::{self, apply_kraus, ComplexMatrix, DensityMatrix, PureState};
use crate::{Error, Result};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Pauli X.
pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]])
        .unwrap()
}

/// Pauli Y.
pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[vec![c(0.0, 0.0), c(0.0, -1.0)], vec![c(0.0, 1.0), c(0.0, 0.0)]])
        .unwrap()
}

/// Pauli Z.
pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(-1.0, 0.0)]])
        .unwrap()
}

/// Unitary rotating the computational basis into the x basis (Hadamard).
pub fn basis_change_x() -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_rows(&[vec![c(s, 0.0), c(s, 0.0)], vec![c(s, 0.0), c(-s, 0.0)]]).unwrap()
}

/// Unitary rotating the computational basis into the y basis.
pub fn basis_change_y() -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_rows(&[vec![c(s, 0.0), c(s, 0.0)], vec![c(0.0, s), c(0.0, -s)]]).unwrap()
}

/// The four Bell states in the fixed order (Phi+, Phi-, Psi+, Psi-).
pub fn bell_states() -> [PureState; 4] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [
        PureState::new(vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)]).unwrap(),
        PureState::new(vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-s, 0.0)]).unwrap(),
        PureState::new(vec![c(0.0, 0.0), c(s, 0.0), c(s, 0.0), c(0.0, 0.0)]).unwrap(),
        PureState::new(vec![c(0.0, 0.0), c(s, 0.0), c(-s, 0.0), c(0.0, 0.0)]).unwrap(),
    ]
}

/// Bell-diagonal weights of a two-qubit state: the diagonal entries with
/// respect to the Bell basis.
pub fn bell_weights(rho: &DensityMatrix) -> Result<[f64; 4]> {
    if rho.dim() != 4 {
        return Err(Error::DimMismatch(format!(
            "bell weights of a {}-dim state",
            rho.dim()
        )));
    }
    let bells = bell_states();
    let mut w = [0.0; 4];
    for (i, b) in bells.iter().enumerate() {
        let v = rho.mat().apply(b.amplitudes());
        let val: Complex64 = b
            .amplitudes()
            .iter()
            .zip(v.iter())
            .map(|(a, x)| a.conj() * x)
            .sum();
        w[i] = val.re;
    }
    Ok(w)
}

/// Largest off-diagonal Bell-basis element in absolute value; zero for
/// Bell-diagonal states.
pub fn bell_offdiag_norm(rho: &DensityMatrix) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(Error::DimMismatch(format!(
            "bell off-diagonals of a {}-dim state",
            rho.dim()
        )));
    }
    let bells = bell_states();
    let mut worst = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            if i == j {
                continue;
            }
            let v = rho.mat().apply(bells[j].amplitudes());
            let val: Complex64 = bells[i]
                .amplitudes()
                .iter()
                .zip(v.iter())
                .map(|(a, x)| a.conj() * x)
                .sum();
            worst = worst.max(val.norm());
        }
    }
    Ok(worst)
}

/// The Bell-diagonal attack parameterization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellDiagonal {
    lambda: [f64; 4],
}

impl BellDiagonal {
    pub fn new(lambda: [f64; 4]) -> Result<Self> {
        let sum: f64 = lambda.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::BadProbability { value: sum });
        }
        for &l in &lambda {
            if l < -1e-12 {
                return Err(Error::BadProbability { value: l });
            }
        }
        Ok(Self {
            lambda: lambda.map(|l| l.max(0.0)),
        })
    }

    pub fn lambda(&self) -> [f64; 4] {
        self.lambda
    }

    /// Quantum bit error rate l3 + l4.
    pub fn qber(&self) -> f64 {
        self.lambda[2] + self.lambda[3]
    }

    /// The two-qubit density matrix sum_i lambda_i P_{Phi_i} in the
    /// computational basis.
    pub fn to_density(&self) -> DensityMatrix {
        let bells = bell_states();
        let mut m = ComplexMatrix::zeros(4);
        for (i, b) in bells.iter().enumerate() {
            let p = b.projector();
            m = m.add(&p.mat().scale(self.lambda[i])).unwrap();
        }
        DensityMatrix::new(m).expect("Bell mixture is a valid state")
    }

    /// Canonical purification sum_i sqrt(lambda_i) |Phi_i>_{AB} |nu_i>_E
    /// with {|nu_i>} the standard 4-dim basis.
    pub fn purification(&self) -> PurifiedTriple {
        let bells = bell_states();
        let mut amps = vec![c(0.0, 0.0); 16];
        for (i, b) in bells.iter().enumerate() {
            let w = self.lambda[i].max(0.0).sqrt();
            if w == 0.0 {
                continue;
            }
            for ab in 0..4 {
                amps[ab * 4 + i] += b.amplitudes()[ab] * w;
            }
        }
        PurifiedTriple {
            psi: PureState::new(amps).expect("purification is normalized"),
            lambda: *self,
        }
    }

    /// The adversary's conditional states given Alice's bit, together with
    /// the joint distribution of Alice's and Bob's bits.
    ///
    /// sigma_E^x lives on the 4-dim purifying system: block (nu1, nu2) with
    /// off-diagonal ±sqrt(l1 l2) and block (nu3, nu4) with ±sqrt(l3 l4),
    /// plus sign for x = 0.
    pub fn eve_conditionals(&self) -> (DensityMatrix, DensityMatrix, crate::entropy::JointDist) {
        let [l1, l2, l3, l4] = self.lambda;
        let build = |sign: f64| {
            let mut m = ComplexMatrix::zeros(4);
            m.set(0, 0, c(l1, 0.0));
            m.set(1, 1, c(l2, 0.0));
            m.set(2, 2, c(l3, 0.0));
            m.set(3, 3, c(l4, 0.0));
            m.set(0, 1, c(sign * (l1 * l2).sqrt(), 0.0));
            m.set(1, 0, c(sign * (l1 * l2).sqrt(), 0.0));
            m.set(2, 3, c(sign * (l3 * l4).sqrt(), 0.0));
            m.set(3, 2, c(sign * (l3 * l4).sqrt(), 0.0));
            DensityMatrix::new(m).expect("conditional adversary state is valid")
        };
        let same = (l1 + l2) / 2.0;
        let diff = (l3 + l4) / 2.0;
        let p_xy = crate::entropy::JointDist::new(vec![vec![same, diff], vec![diff, same]])
            .expect("measurement statistics are a distribution");
        (build(1.0), build(-1.0), p_xy)
    }
}

/// A purification of a Bell-diagonal state, on A (x) B (x) E = 2 (x) 2 (x) 4.
#[derive(Debug, Clone)]
pub struct PurifiedTriple {
    pub psi: PureState,
    pub lambda: BellDiagonal,
}

/// Depolarizing twirl onto the Bell diagonal: uniform conjugation by
/// {1(x)1, X(x)X, Y(x)Y, Z(x)Z}. Preserves the Bell-diagonal entries.
pub fn bell_twirl(rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.dim() != 4 {
        return Err(Error::DimMismatch(format!(
            "bell twirl of a {}-dim state",
            rho.dim()
        )));
    }
    let id = ComplexMatrix::identity(2);
    let kraus: Vec<ComplexMatrix> = [id, pauli_x(), pauli_y(), pauli_z()]
        .iter()
        .map(|p| p.kron(p).scale(0.5))
        .collect();
    apply_kraus(rho, &kraus, false)
}

/// Stronger twirl that is also Bell-diagonalizing and in addition equalizes
/// the two Psi weights (l3 = l4 in the output). Eight conjugations by
/// O (x) O*, with O running over products of a diagonal phase and sigma_x.
pub fn bell_twirl_sym(rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.dim() != 4 {
        return Err(Error::DimMismatch(format!(
            "bell twirl of a {}-dim state",
            rho.dim()
        )));
    }
    let id = ComplexMatrix::identity(2);
    let d_minus = ComplexMatrix::from_rows(&[
        vec![c(0.0, -1.0), c(0.0, 0.0)],
        vec![c(0.0, 0.0), c(1.0, 0.0)],
    ])
    .unwrap();
    let d_plus = ComplexMatrix::from_rows(&[
        vec![c(0.0, 1.0), c(0.0, 0.0)],
        vec![c(0.0, 0.0), c(1.0, 0.0)],
    ])
    .unwrap();
    let us = [id.clone(), pauli_z(), d_minus, d_plus];
    let vs = [id, pauli_x()];
    let scale = 1.0 / (8.0f64).sqrt();
    let mut kraus = Vec::with_capacity(8);
    for u in &us {
        for v in &vs {
            let o = u.mul(v)?;
            kraus.push(o.kron(&o.conj()).scale(scale));
        }
    }
    apply_kraus(rho, &kraus, false)
}

/// Encoding and decoding operator pairs with sifting acceptance weights.
#[derive(Debug, Clone)]
pub struct EncodingSet {
    ops: Vec<(ComplexMatrix, ComplexMatrix, f64)>,
}

impl EncodingSet {
    pub fn new(ops: Vec<(ComplexMatrix, ComplexMatrix, f64)>) -> Result<Self> {
        let psum: f64 = ops.iter().map(|(_, _, p)| *p).sum();
        if (psum - 1.0).abs() > 1e-9 {
            return Err(Error::BadProbability { value: psum });
        }
        Ok(Self { ops })
    }

    pub fn ops(&self) -> &[(ComplexMatrix, ComplexMatrix, f64)] {
        &self.ops
    }
}

/// Sifting-weighted encoding average: (1/N) sum_j p_j (A_j (x) B_j) rho
/// (A_j (x) B_j)^dag, returning the normalized state together with N.
pub fn encoding_average(rho: &DensityMatrix, enc: &EncodingSet) -> Result<(DensityMatrix, f64)> {
    if rho.dim() != 4 {
        return Err(Error::DimMismatch(format!(
            "encoding average of a {}-dim state",
            rho.dim()
        )));
    }
    let mut acc = ComplexMatrix::zeros(4);
    for (a, b, p) in &enc.ops {
        let op = a.kron(b);
        acc = acc.add(&op.mul(rho.mat())?.mul(&op.adjoint())?.scale(*p))?;
    }
    let n = acc.trace().re;
    if n < 1e-12 {
        return Err(Error::Numeric(
            "encoding average fully sifted out (normalizer below 1e-12)".into(),
        ));
    }
    Ok((DensityMatrix::new(acc.scale(1.0 / n))?, n))
}

/// Six-state encodings: all three conjugate bases, uniform weights.
/// Alice uses (Vx, Vy, Vz); Bob uses (Vx, Vy^dag, Vz).
pub fn six_state_encodings() -> EncodingSet {
    let third = 1.0 / 3.0;
    EncodingSet::new(vec![
        (basis_change_x(), basis_change_x(), third),
        (basis_change_y(), basis_change_y().adjoint(), third),
        (ComplexMatrix::identity(2), ComplexMatrix::identity(2), third),
    ])
    .unwrap()
}

/// BB84 encodings: x and z bases only.
pub fn bb84_encodings() -> EncodingSet {
    EncodingSet::new(vec![
        (basis_change_x(), basis_change_x(), 0.5),
        (ComplexMatrix::identity(2), ComplexMatrix::identity(2), 0.5),
    ])
    .unwrap()
}

/// B92 preparation operator A mapping bit x to |phi^x> = alpha|0> ± beta|1>.
pub fn b92_prepare(alpha: f64) -> Result<ComplexMatrix> {
    check_b92_alpha(alpha)?;
    let beta = (1.0 - alpha * alpha).sqrt();
    // Row x of A is <phi^x| (real amplitudes).
    ComplexMatrix::from_rows(&[
        vec![c(alpha, 0.0), c(beta, 0.0)],
        vec![c(alpha, 0.0), c(-beta, 0.0)],
    ])
}

/// B92 sifting operator B = |0><phi1_perp| + |1><phi0_perp| with normalized
/// orthogonal complements.
pub fn b92_sift(alpha: f64) -> Result<ComplexMatrix> {
    check_b92_alpha(alpha)?;
    let beta = (1.0 - alpha * alpha).sqrt();
    ComplexMatrix::from_rows(&[
        vec![c(beta, 0.0), c(alpha, 0.0)],
        vec![c(beta, 0.0), c(-alpha, 0.0)],
    ])
}

/// The B92 encoding set is the single sifting operation on Bob's side.
pub fn b92_encodings(alpha: f64) -> Result<EncodingSet> {
    EncodingSet::new(vec![(ComplexMatrix::identity(2), b92_sift(alpha)?, 1.0)])
}

fn check_b92_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < std::f64::consts::FRAC_1_SQRT_2) {
        return Err(Error::OutOfRange(format!(
            "B92 amplitude alpha = {alpha} must lie in (0, 1/sqrt(2))"
        )));
    }
    Ok(())
}

/// The first two Bell weights of a B92 collective attack at error rate Q
/// and adversary-state overlap s: l1 = (1-Q)(1+s)/2, l2 = (1-Q)(1-s)/2.
pub fn b92_lambda12(qber: f64, s: f64) -> Result<(f64, f64)> {
    if !(0.0..0.5).contains(&qber) {
        return Err(Error::OutOfRange(format!("QBER {qber}")));
    }
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::OutOfRange(format!("overlap {s}")));
    }
    Ok((
        (1.0 - qber) * (1.0 + s) / 2.0,
        (1.0 - qber) * (1.0 - s) / 2.0,
    ))
}

/// QBER produced by a depolarizing channel with parameter delta in the
/// B92 protocol: Q = delta / (gamma^2 (1 - 2 delta) + 2 delta) with
/// gamma^2 = 4 alpha^2 (1 - alpha^2).
pub fn b92_q_of_delta(delta: f64, alpha: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&delta) {
        return Err(Error::OutOfRange(format!("depolarizing parameter {delta}")));
    }
    check_b92_alpha(alpha)?;
    let gamma2 = 4.0 * alpha * alpha * (1.0 - alpha * alpha);
    Ok(delta / (gamma2 * (1.0 - 2.0 * delta) + 2.0 * delta))
}

/// Inverse of [`b92_q_of_delta`].
pub fn b92_delta_of_q(qber: f64, alpha: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&qber) {
        return Err(Error::OutOfRange(format!("QBER {qber}")));
    }
    check_b92_alpha(alpha)?;
    let gamma2 = 4.0 * alpha * alpha * (1.0 - alpha * alpha);
    Ok(qber * gamma2 / (1.0 + 2.0 * qber * (gamma2 - 1.0)))
}

/// Bell weights of the sifted B92 state when Bob's qubit passes through a
/// depolarizing channel rho -> (1 - 2 delta) rho + delta 1, followed by the
/// sifting operation and the Bell twirl. Also returns the sifting
/// acceptance probability.
pub fn b92_channel_lambda(delta: f64, alpha: f64) -> Result<(BellDiagonal, f64)> {
    if !(0.0..0.5).contains(&delta) {
        return Err(Error::OutOfRange(format!("depolarizing parameter {delta}")));
    }
    check_b92_alpha(alpha)?;
    let beta = (1.0 - alpha * alpha).sqrt();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    // |chi> = (|0>|phi0> + |1>|phi1>)/sqrt(2).
    let chi = PureState::new(vec![
        c(alpha * s, 0.0),
        c(beta * s, 0.0),
        c(alpha * s, 0.0),
        c(-beta * s, 0.0),
    ])?;
    let rho = chi.projector();
    let rho_a = qmat::partial_trace(&rho, &[2, 2], &[0])?;
    let noisy = DensityMatrix::new(
        rho.mat()
            .scale(1.0 - 2.0 * delta)
            .add(&rho_a.mat().kron(&ComplexMatrix::identity(2)).scale(delta))?,
    )?;
    let (sifted, accept) = encoding_average(&noisy, &b92_encodings(alpha)?)?;
    let w = bell_weights(&bell_twirl(&sifted)?)?;
    Ok((BellDiagonal::new(w)?, accept))
}

/// Protocol selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    SixState,
    Bb84,
    B92,
}

impl Protocol {
    pub fn name(&self) -> &'static str {
        match self {
            Protocol::SixState => "six-state",
            Protocol::Bb84 => "bb84",
            Protocol::B92 => "b92",
        }
    }
}

/// A named free parameter of a constraint family, with box bounds.
#[derive(Debug, Clone)]
pub struct GammaParam {
    pub name: &'static str,
    pub lo: f64,
    pub hi: f64,
}

/// Family of Bell-diagonal states consistent with a protocol at a given
/// QBER; the key-rate infimum runs over the free parameters.
pub struct GammaFamily {
    params: Vec<GammaParam>,
    realize: Box<dyn Fn(f64, &[f64]) -> Result<BellDiagonal> + Send + Sync>,
}

impl GammaFamily {
    pub fn new(
        params: Vec<GammaParam>,
        realize: Box<dyn Fn(f64, &[f64]) -> Result<BellDiagonal> + Send + Sync>,
    ) -> Self {
        Self { params, realize }
    }

    pub fn params(&self) -> &[GammaParam] {
        &self.params
    }

    pub fn realize(&self, qber: f64, values: &[f64]) -> Result<BellDiagonal> {
        (self.realize)(qber, values)
    }

    /// Six-state constraints force a unique state per QBER:
    /// lambda = (1 - 3Q/2, Q/2, Q/2, Q/2).
    pub fn six_state() -> Self {
        Self::new(
            vec![],
            Box::new(|q, _| {
                if !(0.0..0.5).contains(&q) {
                    return Err(Error::OutOfRange(format!("QBER {q}")));
                }
                BellDiagonal::new([1.0 - 1.5 * q, 0.5 * q, 0.5 * q, 0.5 * q])
            }),
        )
    }

    /// BB84 leaves one free parameter: lambda4 = t Q with t in [0, 1], and
    /// lambda = (1 - 2Q + l4, Q - l4, Q - l4, l4).
    pub fn bb84() -> Self {
        Self::new(
            vec![GammaParam {
                name: "lambda4_fraction",
                lo: 0.0,
                hi: 1.0,
            }],
            Box::new(|q, v| {
                if !(0.0..0.5).contains(&q) {
                    return Err(Error::OutOfRange(format!("QBER {q}")));
                }
                let t = v.first().copied().unwrap_or(0.0).clamp(0.0, 1.0);
                let l4 = t * q;
                BellDiagonal::new([1.0 - 2.0 * q + l4, q - l4, q - l4, l4])
            }),
        )
    }

    /// B92 attack pinned to the depolarizing channel reproducing the given
    /// QBER (a singleton per Q).
    pub fn b92_channel(alpha: f64) -> Self {
        Self::new(
            vec![],
            Box::new(move |q, _| {
                let delta = b92_delta_of_q(q, alpha)?;
                Ok(b92_channel_lambda(delta, alpha)?.0)
            }),
        )
    }

    /// The two-parameter B92 family exposing the adversary overlap s and
    /// the Psi-weight split as free coordinates: lambda1, lambda2 from the
    /// overlap, lambda3 = t Q, lambda4 = (1 - t) Q.
    ///
    /// Only the constraints on the first two diagonal entries are encoded,
    /// so minimizing over the full box is strictly looser than the
    /// channel-pinned family; it is kept as a pluggable alternative.
    pub fn b92_two_param() -> Self {
        Self::new(
            vec![
                GammaParam {
                    name: "overlap",
                    lo: 0.0,
                    hi: 1.0,
                },
                GammaParam {
                    name: "psi_split",
                    lo: 0.0,
                    hi: 1.0,
                },
            ],
            Box::new(|q, v| {
                let s = v.first().copied().unwrap_or(1.0).clamp(0.0, 1.0);
                let t = v.get(1).copied().unwrap_or(0.5).clamp(0.0, 1.0);
                let (l1, l2) = b92_lambda12(q, s)?;
                BellDiagonal::new([l1, l2, t * q, (1.0 - t) * q])
            }),
        )
    }
}

/// A protocol's encodings together with its QBER constraint family.
pub struct ProtocolSpec {
    pub protocol: Protocol,
    pub encodings: EncodingSet,
    pub gamma: GammaFamily,
    /// B92 signal amplitude, when applicable.
    pub alpha: Option<f64>,
}

/// Six-state protocol specification.
pub fn six_state() -> ProtocolSpec {
    ProtocolSpec {
        protocol: Protocol::SixState,
        encodings: six_state_encodings(),
        gamma: GammaFamily::six_state(),
        alpha: None,
    }
}

/// BB84 protocol specification.
pub fn bb84() -> ProtocolSpec {
    ProtocolSpec {
        protocol: Protocol::Bb84,
        encodings: bb84_encodings(),
        gamma: GammaFamily::bb84(),
        alpha: None,
    }
}

/// B92 protocol specification at signal amplitude alpha.
pub fn b92(alpha: f64) -> Result<ProtocolSpec> {
    Ok(ProtocolSpec {
        protocol: Protocol::B92,
        encodings: b92_encodings(alpha)?,
        gamma: GammaFamily::b92_channel(alpha),
        alpha: Some(alpha),
    })
}
