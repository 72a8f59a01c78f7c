//! Bulk verification of the smooth-entropy inequality calculus.
//!
//! Every relation used by the key-rate derivation is evaluated two-sided on
//! randomly generated small instances: joint-vs-marginal bounds, chain
//! rules for classical conditioning, per-value and event bounds, the
//! Markov-structure bounds, the order relation, unital monotonicity, and
//! the measurement bounds. A failed check is a correctness bug in the
//! entropy definitions, so the suite doubles as the guard for the
//! smoothing conventions chosen in the parent module.

use rand::Rng;

use super::{
    quantum_smooth, quantum_smooth_cond, renyi0_raw, renyi2_raw, CqSpectrum, Order, Spectrum,
};
use crate::qmat::{
    self, random_density_matrix, random_unitary, ComplexMatrix, DensityMatrix,
};
use crate::Result;

/// Slack below which a two-sided comparison counts as violated.
const SLACK: f64 = 1e-9;

/// One evaluated inequality.
#[derive(Debug, Clone)]
pub struct InequalityCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// True when a side is infinite and the relation is trivially satisfied.
    pub vacuous: bool,
}

impl InequalityCheck {
    fn le(name: &'static str, lhs: f64, rhs: f64) -> Self {
        let vacuous = !lhs.is_finite() || !rhs.is_finite();
        Self {
            name,
            lhs,
            rhs,
            holds: lhs <= rhs + SLACK,
            vacuous,
        }
    }

    fn ge(name: &'static str, lhs: f64, rhs: f64) -> Self {
        let vacuous = !lhs.is_finite() || !rhs.is_finite();
        Self {
            name,
            lhs,
            rhs,
            holds: lhs >= rhs - SLACK,
            vacuous,
        }
    }

    pub fn slack(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

/// Report of all checks on one instance at one epsilon assignment.
#[derive(Debug, Clone, Default)]
pub struct InequalityReport {
    pub checks: Vec<InequalityCheck>,
}

impl InequalityReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    pub fn violations(&self) -> Vec<&InequalityCheck> {
        self.checks.iter().filter(|c| !c.holds).collect()
    }
}

/// Randomly generated test instance: a bipartite state, a cq state, a
/// Markov-structured triple, a projective measurement, and a unital channel.
pub struct InequalityInstance {
    pub du: usize,
    pub dv: usize,
    pub rho_uv: DensityMatrix,
    pub cq: Vec<(f64, DensityMatrix)>,
    pub markov: Vec<(f64, DensityMatrix, DensityMatrix)>,
    pub meas_state: DensityMatrix,
    pub meas_projectors: Vec<ComplexMatrix>,
    pub unital_state: DensityMatrix,
    pub unital_mixture: Vec<(f64, ComplexMatrix)>,
}

impl InequalityInstance {
    pub fn random(rng: &mut impl Rng) -> Self {
        let shapes = [(2usize, 2usize), (2, 3), (3, 2), (2, 4), (4, 2)];
        let (du, dv) = shapes[rng.gen_range(0..shapes.len())];
        let rho_uv = random_density_matrix(du * dv, rng);

        let nz = rng.gen_range(2..=3);
        let dcq = rng.gen_range(2..=4);
        let mut pz: Vec<f64> = (0..nz).map(|_| rng.gen::<f64>() + 0.05).collect();
        let s: f64 = pz.iter().sum();
        pz.iter_mut().for_each(|p| *p /= s);
        let cq: Vec<(f64, DensityMatrix)> = pz
            .iter()
            .map(|&p| (p, random_density_matrix(dcq, rng)))
            .collect();

        let nzm = rng.gen_range(2..=3);
        let dum = rng.gen_range(2..=3);
        let dvm = rng.gen_range(2..=3);
        let mut pm: Vec<f64> = (0..nzm).map(|_| rng.gen::<f64>() + 0.05).collect();
        let s: f64 = pm.iter().sum();
        pm.iter_mut().for_each(|p| *p /= s);
        let markov: Vec<(f64, DensityMatrix, DensityMatrix)> = pm
            .iter()
            .map(|&p| {
                (
                    p,
                    random_density_matrix(dum, rng),
                    random_density_matrix(dvm, rng),
                )
            })
            .collect();

        let dm = rng.gen_range(2..=4);
        let meas_state = random_density_matrix(dm, rng);
        let u = random_unitary(dm, rng);
        // Partition the columns of a random unitary into orthogonal
        // projectors (a complete von Neumann measurement, possibly coarse).
        let nout = rng.gen_range(2..=dm);
        let mut cuts: Vec<usize> = (1..dm).collect();
        for i in (1..cuts.len()).rev() {
            cuts.swap(i, rng.gen_range(0..=i));
        }
        let mut cuts: Vec<usize> = cuts.into_iter().take(nout - 1).collect();
        cuts.sort_unstable();
        cuts.push(dm);
        let mut meas_projectors = Vec::new();
        let mut start = 0usize;
        for &end in &cuts {
            let mut p = ComplexMatrix::zeros(dm);
            for col in start..end {
                for i in 0..dm {
                    for j in 0..dm {
                        let v = p.get(i, j) + u.get(i, col) * u.get(j, col).conj();
                        p.set(i, j, v);
                    }
                }
            }
            meas_projectors.push(p);
            start = end;
        }

        let duc = rng.gen_range(2..=4);
        let unital_state = random_density_matrix(duc, rng);
        let nu = rng.gen_range(2..=4);
        let mut wu: Vec<f64> = (0..nu).map(|_| rng.gen::<f64>() + 0.05).collect();
        let s: f64 = wu.iter().sum();
        wu.iter_mut().for_each(|p| *p /= s);
        let unital_mixture: Vec<(f64, ComplexMatrix)> = wu
            .iter()
            .map(|&p| (p, random_unitary(duc, rng)))
            .collect();

        Self {
            du,
            dv,
            rho_uv,
            cq,
            markov,
            meas_state,
            meas_projectors,
            unital_state,
            unital_mixture,
        }
    }
}

fn s_alpha(order: Order, spec: &Spectrum, eps: f64) -> f64 {
    quantum_smooth(order, spec, eps).expect("eps validated by caller")
}

fn mix_states(parts: &[(f64, &DensityMatrix)]) -> DensityMatrix {
    let mut acc = parts[0].1.mat().scale(parts[0].0);
    for (p, s) in &parts[1..] {
        acc = acc.add(&s.mat().scale(*p)).expect("same dims");
    }
    DensityMatrix::new(acc).expect("convex mixture of states")
}

/// Evaluate every inequality on `instance` at the smoothing assignment
/// (eps, eps1, eps2). All three must lie in [0, 1).
pub fn check_inequalities(
    instance: &InequalityInstance,
    eps: f64,
    eps1: f64,
    eps2: f64,
) -> Result<InequalityReport> {
    let mut checks = Vec::new();
    let e = eps;
    let e1 = eps1;
    let e2 = eps2;
    let log_e = if e > 0.0 { (1.0 / e).log2() } else { f64::INFINITY };
    let log_e2 = if e2 > 0.0 {
        (1.0 / e2).log2()
    } else {
        f64::INFINITY
    };

    // Joint vs marginals on a bipartite state.
    {
        let spec_uv = Spectrum::from_density(&instance.rho_uv);
        let dims = [instance.du, instance.dv];
        let rho_u = qmat::partial_trace(&instance.rho_uv, &dims, &[0])?;
        let rho_v = qmat::partial_trace(&instance.rho_uv, &dims, &[1])?;
        let spec_u = Spectrum::from_density(&rho_u);
        let spec_v = Spectrum::from_density(&rho_v);
        let e_sum = (e + e1).min(1.0 - 1e-12);
        checks.push(InequalityCheck::le(
            "s2_joint_le_s2_marginal_plus_s0",
            s_alpha(Order::Two, &spec_uv, e),
            s_alpha(Order::Two, &spec_u, e_sum) + s_alpha(Order::Zero, &spec_v, e1),
        ));
        checks.push(InequalityCheck::ge(
            "s2_joint_ge_s2_marginal_minus_s0",
            s_alpha(Order::Two, &spec_uv, e_sum),
            s_alpha(Order::Two, &spec_u, e) - s_alpha(Order::Zero, &spec_v, e1),
        ));
        checks.push(InequalityCheck::le(
            "s0_joint_le_sum_of_marginals",
            s_alpha(Order::Zero, &spec_uv, e_sum),
            s_alpha(Order::Zero, &spec_u, e) + s_alpha(Order::Zero, &spec_v, e1),
        ));
        checks.push(InequalityCheck::ge(
            "s0_joint_ge_marginal_difference",
            s_alpha(Order::Zero, &spec_uv, e),
            s_alpha(Order::Zero, &spec_u, e_sum) - s_alpha(Order::Zero, &spec_v, e1),
        ));
        // Order relation, valid for eps <= 0.1 with a one-bit allowance.
        if e <= 0.1 {
            checks.push(InequalityCheck::le(
                "s2_le_s0_plus_one_bit",
                s_alpha(Order::Two, &spec_uv, e),
                s_alpha(Order::Zero, &spec_uv, e) + 1.0,
            ));
        }
    }

    // Classical conditioning on a cq state.
    {
        let cq = CqSpectrum::from_states(&instance.cq)?;
        let joint = cq.joint_spectrum();
        let pz: Vec<f64> = instance.cq.iter().map(|(p, _)| *p).collect();
        let mixed = mix_states(
            &instance
                .cq
                .iter()
                .map(|(p, s)| (*p, s))
                .collect::<Vec<_>>(),
        );
        let spec_mixed = Spectrum::from_density(&mixed);
        let e_sum = (e + e1).min(1.0 - 1e-12);
        let e_sum3 = (e + e1 + e2).min(1.0 - 1e-12);

        for &(order, name) in &[
            (Order::Zero, "s0_conditioning_cannot_increase"),
            (Order::Two, "s2_conditioning_cannot_increase"),
        ] {
            checks.push(InequalityCheck::le(
                name,
                quantum_smooth_cond(order, &cq, e)?,
                s_alpha(order, &spec_mixed, e),
            ));
        }

        checks.push(InequalityCheck::le(
            "s2_cond_le_joint_minus_h2",
            quantum_smooth_cond(Order::Two, &cq, e)?,
            s_alpha(Order::Two, &joint, e_sum) - renyi2_raw(&pz, e1),
        ));
        checks.push(InequalityCheck::ge(
            "s2_cond_ge_joint_minus_h0_minus_log",
            quantum_smooth_cond(Order::Two, &cq, e_sum3)?,
            s_alpha(Order::Two, &joint, e1) - renyi0_raw(&pz, e2) - 2.0 * log_e,
        ));
        checks.push(InequalityCheck::ge(
            "s0_cond_ge_joint_minus_h0",
            quantum_smooth_cond(Order::Zero, &cq, e)?,
            s_alpha(Order::Zero, &joint, e_sum) - renyi0_raw(&pz, e1),
        ));
        checks.push(InequalityCheck::le(
            "s0_cond_le_joint_minus_h2_plus_log",
            quantum_smooth_cond(Order::Zero, &cq, e_sum3)?,
            s_alpha(Order::Zero, &joint, e1) - renyi2_raw(&pz, e2) + 2.0 * log_e,
        ));

        // Per-value relations, one check per conditioning value.
        if e > 0.0 {
            for (idx, (p, state)) in instance.cq.iter().enumerate() {
                let eps_z = (e * p).min(1.0 - 1e-12);
                let spec_z = Spectrum::from_density(state);
                let _ = idx;
                checks.push(InequalityCheck::le(
                    "s2_cond_le_per_value",
                    quantum_smooth_cond(Order::Two, &cq, eps_z)?,
                    s_alpha(Order::Two, &spec_z, e),
                ));
                checks.push(InequalityCheck::ge(
                    "s0_cond_ge_per_value",
                    quantum_smooth_cond(Order::Zero, &cq, eps_z)?,
                    s_alpha(Order::Zero, &spec_z, e),
                ));
            }
        }

        // Event bounds over a subset of conditioning values with mass >= 1 - e.
        {
            let mut order_idx: Vec<usize> = (0..pz.len()).collect();
            order_idx.sort_by(|&a, &b| pz[b].partial_cmp(&pz[a]).unwrap());
            let mut kept = Vec::new();
            let mut mass = 0.0;
            for &i in &order_idx {
                kept.push(i);
                mass += pz[i];
                if mass >= 1.0 - e {
                    break;
                }
            }
            let e_sum = (e + e1).min(1.0 - 1e-12);
            let min_s2 = kept
                .iter()
                .map(|&i| s_alpha(Order::Two, &Spectrum::from_density(&instance.cq[i].1), e1))
                .fold(f64::INFINITY, f64::min);
            let max_s0 = kept
                .iter()
                .map(|&i| s_alpha(Order::Zero, &Spectrum::from_density(&instance.cq[i].1), e1))
                .fold(f64::NEG_INFINITY, f64::max);
            checks.push(InequalityCheck::ge(
                "s2_cond_ge_min_over_event",
                quantum_smooth_cond(Order::Two, &cq, e_sum)?,
                min_s2,
            ));
            checks.push(InequalityCheck::le(
                "s0_cond_le_max_over_event",
                quantum_smooth_cond(Order::Zero, &cq, e_sum)?,
                max_s0,
            ));
        }
    }

    // Markov-structured triple: U and V independent given classical Z.
    {
        let entries_u: Vec<(f64, DensityMatrix)> = instance
            .markov
            .iter()
            .map(|(p, u, _)| (*p, u.clone()))
            .collect();
        let cq_u = CqSpectrum::from_states(&entries_u)?;
        let mut joint_uvz = Vec::new();
        let mut joint_vz = Vec::new();
        for (p, u, v) in &instance.markov {
            let su = Spectrum::from_density(u);
            let sv = Spectrum::from_density(v);
            for &b in sv.values() {
                joint_vz.push(p * b);
                for &a in su.values() {
                    joint_uvz.push(p * a * b);
                }
            }
        }
        let spec_uvz = Spectrum::new(joint_uvz)?;
        let spec_vz = Spectrum::new(joint_vz)?;
        let e_sum = (e + e1).min(1.0 - 1e-12);
        checks.push(InequalityCheck::ge(
            "markov_s2_joint_ge_cond_plus_rest",
            s_alpha(Order::Two, &spec_uvz, e_sum),
            quantum_smooth_cond(Order::Two, &cq_u, e)? + s_alpha(Order::Two, &spec_vz, e1),
        ));
        checks.push(InequalityCheck::le(
            "markov_s0_joint_le_cond_plus_rest",
            s_alpha(Order::Zero, &spec_uvz, e_sum),
            quantum_smooth_cond(Order::Zero, &cq_u, e)? + s_alpha(Order::Zero, &spec_vz, e1),
        ));
    }

    // Unital channels cannot decrease the smooth entropy.
    {
        let kraus: Vec<ComplexMatrix> = instance
            .unital_mixture
            .iter()
            .map(|(p, u)| u.scale(p.sqrt()))
            .collect();
        let mapped = qmat::apply_kraus(&instance.unital_state, &kraus, false)?;
        let before = Spectrum::from_density(&instance.unital_state);
        let after = Spectrum::from_density(&mapped);
        for &(order, name) in &[
            (Order::Zero, "unital_s0_cannot_decrease"),
            (Order::Two, "unital_s2_cannot_decrease"),
        ] {
            checks.push(InequalityCheck::ge(
                name,
                s_alpha(order, &after, e),
                s_alpha(order, &before, e),
            ));
        }
    }

    // Measurement bounds: entropy growth of the measured state is limited
    // by the outcome entropy; conditioning on the outcome loses at most the
    // outcome entropy.
    {
        let rho = &instance.meas_state;
        let measured = qmat::apply_kraus(rho, &instance.meas_projectors, false)?;
        let spec_before = Spectrum::from_density(rho);
        let spec_after = Spectrum::from_density(&measured);
        let mut pz = Vec::new();
        let mut cond_entries = Vec::new();
        for p in &instance.meas_projectors {
            let branch = p.mul(rho.mat())?.mul(&p.adjoint())?;
            let prob = branch.trace().re.max(0.0);
            pz.push(prob);
            if prob > 1e-14 {
                let state = DensityMatrix::new(branch.scale(1.0 / prob))?;
                cond_entries.push((prob, state));
            }
        }
        let cq_out = CqSpectrum::from_states(&cond_entries)?;
        let e_sum = (e + e1).min(1.0 - 1e-12);
        let e_sum3 = (e + e1 + e2).min(1.0 - 1e-12);
        let h0_z = renyi0_raw(&pz, e1);

        checks.push(InequalityCheck::le(
            "meas_s2_growth_bounded_by_outcome",
            s_alpha(Order::Two, &spec_after, e),
            s_alpha(Order::Two, &spec_before, e_sum) + h0_z,
        ));
        checks.push(InequalityCheck::le(
            "meas_s0_growth_bounded_by_outcome",
            s_alpha(Order::Zero, &spec_after, e_sum),
            s_alpha(Order::Zero, &spec_before, e) + h0_z,
        ));
        checks.push(InequalityCheck::ge(
            "proj_s2_ge_cond_minus_outcome",
            s_alpha(Order::Two, &spec_before, e_sum),
            quantum_smooth_cond(Order::Two, &cq_out, e)? - h0_z,
        ));
        checks.push(InequalityCheck::le(
            "proj_s2_le_cond_plus_outcome_plus_log",
            s_alpha(Order::Two, &spec_before, e),
            quantum_smooth_cond(Order::Two, &cq_out, e_sum3)? + renyi0_raw(&pz, e1) + 2.0 * log_e2,
        ));
        checks.push(InequalityCheck::le(
            "proj_s0_le_cond_plus_outcome",
            s_alpha(Order::Zero, &spec_before, e_sum),
            quantum_smooth_cond(Order::Zero, &cq_out, e)? + h0_z,
        ));
        checks.push(InequalityCheck::ge(
            "proj_s0_ge_cond_minus_outcome",
            s_alpha(Order::Zero, &spec_before, e),
            quantum_smooth_cond(Order::Zero, &cq_out, e_sum)? - h0_z,
        ));
    }

    Ok(InequalityReport { checks })
}
