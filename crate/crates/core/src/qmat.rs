//! Dense complex linear algebra for small Hilbert spaces.
//!
//! Everything here targets dimensions of a few thousand at most, which is
//! all the key-rate computations ever need. The Hermitian eigensolver is a
//! cyclic Jacobi iteration with a deterministic sweep order, so results are
//! bit-stable across runs and platforms with the same floating-point
//! semantics.

use num_complex::Complex64;
use rand::Rng;

use crate::{Error, Result};

/// Numerical tolerances used by state validation and the eigensolver.
///
/// These are fixed constants, exposed read-only so tests can refer to the
/// exact thresholds the library enforces.
pub mod tol {
    /// Max entrywise |M - M^dag| for a matrix to count as Hermitian.
    pub const HERMITICITY: f64 = 1e-10;
    /// Eigenvalues of a density matrix must be >= -PSD.
    pub const PSD: f64 = 1e-10;
    /// Trace of a normalized density matrix must be within this of 1.
    pub const TRACE: f64 = 1e-9;
    /// Norm of a pure state must be within this of 1.
    pub const NORM: f64 = 1e-10;
    /// Required accuracy of V diag(w) V^dag reconstruction in tests.
    pub const RECONSTRUCTION: f64 = 1e-8;
    /// Kraus sets must satisfy |sum K^dag K - 1| below this to be
    /// trace preserving.
    pub const KRAUS_TP: f64 = 1e-9;
    /// Spectra are truncated below this value after clamping.
    pub const SPECTRUM_TRUNCATION: f64 = 1e-15;
}

const MAX_JACOBI_SWEEPS: usize = 100;

/// Square matrix of complex numbers, stored row major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    /// Build from a closure over (row, col).
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Build from nested rows; fails if the shape is not square.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let dim = rows.len();
        for r in rows {
            if r.len() != dim {
                return Err(Error::NotSquare {
                    rows: dim,
                    cols: r.len(),
                });
            }
        }
        Ok(Self::from_fn(dim, |i, j| rows[i][j]))
    }

    /// Real matrix embedding.
    pub fn from_real(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        for r in rows {
            if r.len() != dim {
                return Err(Error::NotSquare {
                    rows: dim,
                    cols: r.len(),
                });
            }
        }
        Ok(Self::from_fn(dim, |i, j| Complex64::new(rows[i][j], 0.0)))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(other.data.iter()) {
            *a += *b;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(other.data.iter()) {
            *a -= *b;
        }
        Ok(out)
    }

    pub fn scale(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a *= factor;
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.get(i, k);
                if aik.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..n {
                    let v = out.get(i, j) + aik * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i).conj())
    }

    /// Entrywise complex conjugate (no transpose).
    pub fn conj(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(i, j).conj())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Max entrywise |M - M^dag|.
    pub fn hermiticity_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                let d = (self.get(i, j) - self.get(j, i).conj()).norm();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }

    /// Kronecker product.
    pub fn kron(&self, other: &Self) -> Self {
        let (da, db) = (self.dim, other.dim);
        let n = da * db;
        let mut out = Self::zeros(n);
        for ia in 0..da {
            for ja in 0..da {
                let a = self.get(ia, ja);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for ib in 0..db {
                    for jb in 0..db {
                        out.set(ia * db + ib, ja * db + jb, a * other.get(ib, jb));
                    }
                }
            }
        }
        out
    }

    /// Apply as a linear map to a vector.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim);
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim];
        for i in 0..self.dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..self.dim {
                acc += self.get(i, j) * v[j];
            }
            out[i] = acc;
        }
        out
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimMismatch(format!(
                "{}x{} vs {}x{}",
                self.dim, self.dim, other.dim, other.dim
            )));
        }
        Ok(())
    }
}

/// Hermitian eigendecomposition by cyclic Jacobi rotations.
///
/// Returns eigenvalues in descending order together with the unitary matrix
/// of eigenvectors (columns), so that `m = V diag(w) V^dag`.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let res = m.hermiticity_residual();
    if res > tol::HERMITICITY {
        return Err(Error::NotHermitian { residual: res });
    }
    let n = m.dim();
    let mut a = m.clone();
    // Symmetrize exactly so rounding in the input cannot bias the iteration.
    for i in 0..n {
        for j in 0..n {
            let s = (a.get(i, j) + a.get(j, i).conj()) * 0.5;
            a.set(i, j, s);
            a.set(j, i, s.conj());
        }
    }
    let mut v = ComplexMatrix::identity(n);
    if n <= 1 {
        let w = if n == 1 { vec![a.get(0, 0).re] } else { vec![] };
        return Ok((w, v));
    }

    let scale = a.frobenius_norm().max(1.0);
    let target = 1e-13 * scale;
    let mut converged = false;
    let mut last_off = f64::INFINITY;
    for _sweep in 0..MAX_JACOBI_SWEEPS {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a.get(p, q).norm_sqr();
            }
        }
        last_off = (2.0 * off).sqrt();
        if last_off <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                let r = apq.norm();
                if r <= 1e-300 {
                    continue;
                }
                let phase = apq / r; // e^{i phi}
                let app = a.get(p, p).re;
                let aqq = a.get(q, q).re;
                let theta = (aqq - app) / (2.0 * r);
                let t = if theta >= 0.0 {
                    -1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // G acts on coordinates (p, q):
                //   G_pp = c, G_pq = -s e^{i phi}, G_qp = s e^{-i phi}, G_qq = c
                let se_m = s * phase.conj(); // s e^{-i phi}
                let se_p = s * phase; // s e^{+i phi}

                // Rows/columns k != p,q.
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    let new_kp = akp * c + akq * se_m;
                    let new_kq = -akp * se_p + akq * c;
                    a.set(k, p, new_kp);
                    a.set(p, k, new_kp.conj());
                    a.set(k, q, new_kq);
                    a.set(q, k, new_kq.conj());
                }
                // The 2x2 block itself.
                let new_pp = c * c * app + 2.0 * c * s * r + s * s * aqq;
                let new_qq = c * c * aqq - 2.0 * c * s * r + s * s * app;
                a.set(p, p, Complex64::new(new_pp, 0.0));
                a.set(q, q, Complex64::new(new_qq, 0.0));
                a.set(p, q, Complex64::new(0.0, 0.0));
                a.set(q, p, Complex64::new(0.0, 0.0));
                // Accumulate eigenvectors: V <- V G.
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, vkp * c + vkq * se_m);
                    v.set(k, q, -vkp * se_p + vkq * c);
                }
            }
        }
    }
    if !converged {
        // One last residual check: tiny matrices may hit the sweep cap while
        // already being numerically diagonal.
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a.get(p, q).norm_sqr();
            }
        }
        let off = (2.0 * off).sqrt();
        if off > target {
            return Err(Error::EigNoConvergence {
                sweeps: MAX_JACOBI_SWEEPS,
                residual: off.max(last_off),
            });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a.get(i, i).re).collect();
    // Stable sort keeps the sweep-deterministic order among equal eigenvalues.
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).unwrap());
    let w: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let vs = ComplexMatrix::from_fn(n, |i, j| v.get(i, order[j]));
    Ok((w, vs))
}

/// Complex Hermitian PSD matrix with unit trace (or trace <= 1 when the
/// `subnormalized` flag is set, as used for conditional states).
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
    subnormalized: bool,
}

impl DensityMatrix {
    /// Validate and wrap a normalized density matrix.
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        Self::build(mat, false)
    }

    /// Validate and wrap a state whose trace may be below 1.
    pub fn new_subnormalized(mat: ComplexMatrix) -> Result<Self> {
        Self::build(mat, true)
    }

    fn build(mat: ComplexMatrix, subnormalized: bool) -> Result<Self> {
        let res = mat.hermiticity_residual();
        if res > tol::HERMITICITY {
            return Err(Error::NotHermitian { residual: res });
        }
        let tr = mat.trace().re;
        if subnormalized {
            if !(-tol::TRACE..=1.0 + tol::TRACE).contains(&tr) {
                return Err(Error::BadTrace {
                    deviation: (tr - 1.0).max(-tr),
                });
            }
        } else if (tr - 1.0).abs() > tol::TRACE {
            return Err(Error::BadTrace {
                deviation: (tr - 1.0).abs(),
            });
        }
        let (w, _) = eig_hermitian(&mat)?;
        if let Some(&min) = w.last() {
            if min < -tol::PSD {
                return Err(Error::NotPsd {
                    min_eigenvalue: min,
                });
            }
        }
        Ok(Self { mat, subnormalized })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    #[inline]
    pub fn mat(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn is_subnormalized(&self) -> bool {
        self.subnormalized
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    /// Eigenvalues in descending order, clamped at zero.
    ///
    /// Values in [-PSD tolerance, 0) are numerical noise and are clamped;
    /// anything more negative has already been rejected at construction.
    pub fn spectrum(&self) -> Vec<f64> {
        let (w, _) = eig_hermitian(&self.mat).expect("validated state must diagonalize");
        w.into_iter().map(|x| x.max(0.0)).collect()
    }

    /// Maximally mixed state 1/d.
    pub fn maximally_mixed(dim: usize) -> Self {
        let m = ComplexMatrix::identity(dim).scale(1.0 / dim as f64);
        Self {
            mat: m,
            subnormalized: false,
        }
    }
}

/// Normalized state vector.
#[derive(Debug, Clone)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
}

impl PureState {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > tol::NORM {
            return Err(Error::BadNorm {
                deviation: (norm - 1.0).abs(),
            });
        }
        Ok(Self { amplitudes })
    }

    /// Basis vector |i> in the given dimension.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[i] = Complex64::new(1.0, 0.0);
        Self { amplitudes: amps }
    }

    /// Normalize an arbitrary nonzero vector.
    pub fn normalized(mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-150 {
            return Err(Error::Numeric("cannot normalize zero vector".into()));
        }
        for a in amplitudes.iter_mut() {
            *a /= norm;
        }
        Ok(Self { amplitudes })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    #[inline]
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// |psi><psi| as a density matrix.
    pub fn projector(&self) -> DensityMatrix {
        let d = self.dim();
        let mat = ComplexMatrix::from_fn(d, |i, j| {
            self.amplitudes[i] * self.amplitudes[j].conj()
        });
        DensityMatrix {
            mat,
            subnormalized: false,
        }
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amps.push(a * b);
            }
        }
        Self { amplitudes: amps }
    }
}

/// Kronecker product of two density matrices.
pub fn tensor(a: &DensityMatrix, b: &DensityMatrix) -> DensityMatrix {
    DensityMatrix {
        mat: a.mat().kron(b.mat()),
        subnormalized: a.is_subnormalized() || b.is_subnormalized(),
    }
}

/// Reduced state on the kept subsystems.
///
/// `dims` lists the subsystem dimensions whose product must equal the total
/// dimension; `keep` lists the (sorted, distinct) subsystem indices to keep.
pub fn partial_trace(
    rho: &DensityMatrix,
    dims: &[usize],
    keep: &[usize],
) -> Result<DensityMatrix> {
    let total: usize = dims.iter().product();
    if total != rho.dim() {
        return Err(Error::DimMismatch(format!(
            "subsystem dims product {} != state dim {}",
            total,
            rho.dim()
        )));
    }
    for &k in keep {
        if k >= dims.len() {
            return Err(Error::DimMismatch(format!(
                "keep index {} out of range for {} subsystems",
                k,
                dims.len()
            )));
        }
    }
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !keep_sorted.contains(i)).collect();
    let kept_dim: usize = keep_sorted.iter().map(|&i| dims[i]).product();
    let traced_dim: usize = traced.iter().map(|&i| dims[i]).product();

    // Strides of each subsystem index in the flat basis ordering.
    let mut strides = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let flat_index = |kept_multi: usize, traced_multi: usize| -> usize {
        let mut idx = 0;
        let mut km = kept_multi;
        for &s in keep_sorted.iter().rev() {
            idx += (km % dims[s]) * strides[s];
            km /= dims[s];
        }
        let mut tm = traced_multi;
        for &s in traced.iter().rev() {
            idx += (tm % dims[s]) * strides[s];
            tm /= dims[s];
        }
        idx
    };

    let mut out = ComplexMatrix::zeros(kept_dim);
    for i in 0..kept_dim {
        for j in 0..kept_dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for t in 0..traced_dim {
                acc += rho.mat().get(flat_index(i, t), flat_index(j, t));
            }
            out.set(i, j, acc);
        }
    }
    Ok(DensityMatrix {
        mat: out,
        subnormalized: rho.is_subnormalized(),
    })
}

/// Canonical purification sum_i sqrt(w_i) |v_i>|e_i> on dim^2, with {|e_i>}
/// the standard basis of the second factor. Tracing out the second factor
/// recovers the input.
pub fn purify(rho: &DensityMatrix) -> Result<PureState> {
    let d = rho.dim();
    let (w, v) = eig_hermitian(rho.mat())?;
    if let Some(&min) = w.last() {
        if min < -tol::PSD {
            return Err(Error::NotPsd {
                min_eigenvalue: min,
            });
        }
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); d * d];
    for (i, &wi) in w.iter().enumerate() {
        let c = wi.max(0.0).sqrt();
        if c == 0.0 {
            continue;
        }
        for row in 0..d {
            amps[row * d + i] += v.get(row, i) * c;
        }
    }
    PureState::new(amps)
}

/// Trace distance (1/2) sum |eig(a - b)|.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    let diff = a.mat().sub(b.mat())?;
    let (w, _) = eig_hermitian(&diff)?;
    Ok(0.5 * w.iter().map(|x| x.abs()).sum::<f64>())
}

/// Uhlmann fidelity tr sqrt(sqrt(a) b sqrt(a)).
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch(format!(
            "fidelity of {}x{} vs {}x{}",
            a.dim(),
            a.dim(),
            b.dim(),
            b.dim()
        )));
    }
    let (w, v) = eig_hermitian(a.mat())?;
    let d = a.dim();
    let mut sqrt_a = ComplexMatrix::zeros(d);
    for k in 0..d {
        let c = w[k].max(0.0).sqrt();
        if c == 0.0 {
            continue;
        }
        for i in 0..d {
            for j in 0..d {
                let val = sqrt_a.get(i, j) + v.get(i, k) * v.get(j, k).conj() * c;
                sqrt_a.set(i, j, val);
            }
        }
    }
    let m = sqrt_a.mul(b.mat())?.mul(&sqrt_a)?;
    let (mw, _) = eig_hermitian(&m)?;
    // Eigenvalues at roundoff scale are artifacts of the two matrix products;
    // taking their square root would pollute the sum by ~1e-8 per mode.
    let cut = mw.first().copied().unwrap_or(0.0).max(0.0) * 1e-13;
    let f: f64 = mw
        .iter()
        .filter(|&&x| x > cut)
        .map(|x| x.sqrt())
        .sum();
    Ok(f.min(1.0))
}

/// Apply a completely positive map sum_k K rho K^dag.
///
/// The Kraus set must be trace preserving unless `selective` marks it as a
/// measurement branch, in which case the output may be subnormalized.
pub fn apply_kraus(
    rho: &DensityMatrix,
    kraus: &[ComplexMatrix],
    selective: bool,
) -> Result<DensityMatrix> {
    let d = rho.dim();
    if !selective {
        let mut acc = ComplexMatrix::zeros(d);
        for k in kraus {
            acc = acc.add(&k.adjoint().mul(k)?)?;
        }
        let dev = acc.sub(&ComplexMatrix::identity(d))?.frobenius_norm();
        if dev > tol::KRAUS_TP * (d as f64) {
            return Err(Error::NotTracePreserving { deviation: dev });
        }
    }
    let mut out = ComplexMatrix::zeros(d);
    for k in kraus {
        out = out.add(&k.mul(rho.mat())?.mul(&k.adjoint())?)?;
    }
    if selective {
        DensityMatrix::new_subnormalized(out)
    } else {
        DensityMatrix::new(out)
    }
}

/// Standard normal sample via Box-Muller.
fn gaussian(rng: &mut impl Rng) -> f64 {
    loop {
        let u1: f64 = rng.gen();
        if u1 <= f64::MIN_POSITIVE {
            continue;
        }
        let u2: f64 = rng.gen();
        return (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
    }
}

fn gaussian_complex(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(gaussian(rng), gaussian(rng))
}

/// Random density matrix from the Ginibre ensemble (G G^dag normalized).
pub fn random_density_matrix(dim: usize, rng: &mut impl Rng) -> DensityMatrix {
    let g = ComplexMatrix::from_fn(dim, |_, _| gaussian_complex(rng));
    let m = g.mul(&g.adjoint()).expect("same dim");
    let tr = m.trace().re;
    DensityMatrix::new(m.scale(1.0 / tr)).expect("Ginibre state is valid")
}

/// Haar-ish random unitary via Gram-Schmidt on Gaussian columns.
pub fn random_unitary(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v: Vec<Complex64> = (0..dim).map(|_| gaussian_complex(rng)).collect();
        for c in &cols {
            let ip: Complex64 = c.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
            for (vi, ci) in v.iter_mut().zip(c.iter()) {
                *vi -= ip * ci;
            }
        }
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        for vi in v.iter_mut() {
            *vi /= norm;
        }
        cols.push(v);
    }
    ComplexMatrix::from_fn(dim, |i, j| cols[j][i])
}

/// Random pure state.
pub fn random_pure_state(dim: usize, rng: &mut impl Rng) -> PureState {
    let v: Vec<Complex64> = (0..dim).map(|_| gaussian_complex(rng)).collect();
    PureState::normalized(v).expect("Gaussian vector is nonzero")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eig_identity() {
        let (w, _) = eig_hermitian(&ComplexMatrix::identity(4)).unwrap();
        for x in w {
            assert!((x - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn eig_diagonal_sorted_descending() {
        let mut m = ComplexMatrix::zeros(4);
        for (i, v) in [0.05, 0.85, 0.05, 0.05].iter().enumerate() {
            m.set(i, i, c(*v, 0.0));
        }
        let (w, _) = eig_hermitian(&m).unwrap();
        assert!((w[0] - 0.85).abs() < 1e-15);
        for x in &w[1..] {
            assert!((x - 0.05).abs() < 1e-15);
        }
    }

    #[test]
    fn eig_reconstruction_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &dim in &[2usize, 3, 4, 5, 8, 16] {
            for _ in 0..20 {
                let g = ComplexMatrix::from_fn(dim, |_, _| gaussian_complex(&mut rng));
                let h = g.add(&g.adjoint()).unwrap().scale(0.5);
                let (w, v) = eig_hermitian(&h).unwrap();
                // V unitary.
                let vv = v.adjoint().mul(&v).unwrap();
                let dev = vv.sub(&ComplexMatrix::identity(dim)).unwrap().frobenius_norm();
                assert!(dev < tol::RECONSTRUCTION, "V not unitary: {dev}");
                // Reconstruct.
                let mut rec = ComplexMatrix::zeros(dim);
                for k in 0..dim {
                    for i in 0..dim {
                        for j in 0..dim {
                            let val = rec.get(i, j) + v.get(i, k) * v.get(j, k).conj() * w[k];
                            rec.set(i, j, val);
                        }
                    }
                }
                let mut worst = 0.0f64;
                for i in 0..dim {
                    for j in 0..dim {
                        worst = worst.max((rec.get(i, j) - h.get(i, j)).norm());
                    }
                }
                assert!(worst < tol::RECONSTRUCTION, "reconstruction off by {worst}");
            }
        }
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let mut m = ComplexMatrix::identity(2);
        m.set(0, 1, c(0.5, 0.0));
        assert!(matches!(
            eig_hermitian(&m),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn tensor_examples() {
        let half = DensityMatrix::maximally_mixed(2);
        let quarter = tensor(&half, &half);
        assert_eq!(quarter.dim(), 4);
        for i in 0..4 {
            assert!((quarter.mat().get(i, i).re - 0.25).abs() < 1e-15);
        }
        let zero = PureState::basis(2, 0).projector();
        let one = PureState::basis(2, 1).projector();
        let z01 = tensor(&zero, &one);
        assert!((z01.mat().get(1, 1).re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tensor_trace_multiplicative() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..25 {
            let a = random_density_matrix(3, &mut rng);
            let b = random_density_matrix(2, &mut rng);
            let t = tensor(&a, &b);
            assert!((t.trace() - a.trace() * b.trace()).abs() < 1e-12);
        }
    }

    #[test]
    fn partial_trace_bell_state() {
        let phi_plus = PureState::normalized(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)])
            .unwrap()
            .projector();
        let red = partial_trace(&phi_plus, &[2, 2], &[0]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 0.5 } else { 0.0 };
                assert!((red.mat().get(i, j) - c(expect, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn partial_trace_of_product_recovers_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_density_matrix(2, &mut rng);
        let b = random_density_matrix(3, &mut rng);
        let t = tensor(&a, &b);
        let ra = partial_trace(&t, &[2, 3], &[0]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((ra.mat().get(i, j) - a.mat().get(i, j)).norm() < 1e-12);
            }
        }
        // Trace preserved.
        assert!((ra.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_two_steps_equals_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho = random_density_matrix(12, &mut rng); // 2 x 3 x 2
        let dims = [2usize, 3, 2];
        let one_step = partial_trace(&rho, &dims, &[0]).unwrap();
        let mid = partial_trace(&rho, &dims, &[0, 1]).unwrap();
        let two_step = partial_trace(&mid, &[2, 3], &[0]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((one_step.mat().get(i, j) - two_step.mat().get(i, j)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn partial_trace_dims_mismatch() {
        let rho = DensityMatrix::maximally_mixed(4);
        assert!(partial_trace(&rho, &[2, 3], &[0]).is_err());
    }

    #[test]
    fn purify_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for &dim in &[2usize, 3, 4] {
            let rho = random_density_matrix(dim, &mut rng);
            let psi = purify(&rho).unwrap();
            let red = partial_trace(&psi.projector(), &[dim, dim], &[0]).unwrap();
            for i in 0..dim {
                for j in 0..dim {
                    assert!(
                        (red.mat().get(i, j) - rho.mat().get(i, j)).norm() < 1e-9,
                        "round trip failed at ({i},{j})"
                    );
                }
            }
        }
    }

    #[test]
    fn purify_pure_input() {
        let rho = PureState::basis(2, 0).projector();
        let psi = purify(&rho).unwrap();
        // |0> tensor first basis vector of the ancilla.
        assert!((psi.amplitudes()[0].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn purify_maximally_mixed_is_maximally_entangled() {
        let rho = DensityMatrix::maximally_mixed(2);
        let psi = purify(&rho).unwrap();
        let red = partial_trace(&psi.projector(), &[2, 2], &[1]).unwrap();
        for i in 0..2 {
            assert!((red.mat().get(i, i).re - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn trace_distance_examples() {
        let zero = PureState::basis(2, 0).projector();
        let one = PureState::basis(2, 1).projector();
        assert!(trace_distance(&zero, &zero).unwrap().abs() < 1e-13);
        assert!((trace_distance(&zero, &one).unwrap() - 1.0).abs() < 1e-13);
        // Classical diagonal pair: delta = |p - q|.
        let p = 0.8;
        let q = 0.3;
        let dp = DensityMatrix::new(ComplexMatrix::from_real(&[vec![p, 0.0], vec![0.0, 1.0 - p]]).unwrap()).unwrap();
        let dq = DensityMatrix::new(ComplexMatrix::from_real(&[vec![q, 0.0], vec![0.0, 1.0 - q]]).unwrap()).unwrap();
        assert!((trace_distance(&dp, &dq).unwrap() - (p - q).abs()).abs() < 1e-13);
    }

    #[test]
    fn trace_distance_metric_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let a = random_density_matrix(3, &mut rng);
            let b = random_density_matrix(3, &mut rng);
            let c3 = random_density_matrix(3, &mut rng);
            let dab = trace_distance(&a, &b).unwrap();
            let dba = trace_distance(&b, &a).unwrap();
            assert!((dab - dba).abs() < 1e-12);
            let dac = trace_distance(&a, &c3).unwrap();
            let dcb = trace_distance(&c3, &b).unwrap();
            assert!(dab <= dac + dcb + 1e-9);
            assert!((0.0..=1.0 + 1e-12).contains(&dab));
        }
    }

    #[test]
    fn trace_distance_convexity() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..25 {
            let r1 = random_density_matrix(4, &mut rng);
            let r2 = random_density_matrix(4, &mut rng);
            let sigma = random_density_matrix(4, &mut rng);
            let p: f64 = rng.gen();
            let mixed = DensityMatrix::new(
                r1.mat().scale(p).add(&r2.mat().scale(1.0 - p)).unwrap(),
            )
            .unwrap();
            let lhs = trace_distance(&mixed, &sigma).unwrap();
            let rhs = p * trace_distance(&r1, &sigma).unwrap()
                + (1.0 - p) * trace_distance(&r2, &sigma).unwrap();
            assert!(lhs <= rhs + 1e-9);
        }
    }

    #[test]
    fn fidelity_examples() {
        let zero = PureState::basis(2, 0).projector();
        let one = PureState::basis(2, 1).projector();
        assert!((fidelity(&zero, &zero).unwrap() - 1.0).abs() < 1e-10);
        assert!(fidelity(&zero, &one).unwrap() < 1e-10);
    }

    #[test]
    fn fidelity_pure_state_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for _ in 0..20 {
            let psi = random_pure_state(3, &mut rng);
            let rho = random_density_matrix(3, &mut rng);
            let f = fidelity(&psi.projector(), &rho).unwrap();
            // <psi|rho|psi> directly.
            let overlap: Complex64 = {
                let v = rho.mat().apply(psi.amplitudes());
                psi.amplitudes()
                    .iter()
                    .zip(v.iter())
                    .map(|(a, b)| a.conj() * b)
                    .sum()
            };
            assert!((f - overlap.re.max(0.0).sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn fidelity_distance_sandwich() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        for _ in 0..1000 {
            let a = random_density_matrix(3, &mut rng);
            let b = random_density_matrix(3, &mut rng);
            let f = fidelity(&a, &b).unwrap();
            let d = trace_distance(&a, &b).unwrap();
            assert!(1.0 - f <= d + 1e-9, "lower sandwich violated: F={f}, d={d}");
            assert!(d <= (1.0 - f * f).max(0.0).sqrt() + 1e-9, "upper sandwich violated: F={f}, d={d}");
        }
    }

    #[test]
    fn kraus_identity_and_flip() {
        let rho = PureState::basis(2, 0).projector();
        let id = apply_kraus(&rho, &[ComplexMatrix::identity(2)], false).unwrap();
        assert!((id.mat().get(0, 0).re - 1.0).abs() < 1e-13);
        let sx = ComplexMatrix::from_real(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let flipped = apply_kraus(&rho, &[sx], false).unwrap();
        assert!((flipped.mat().get(1, 1).re - 1.0).abs() < 1e-13);
    }

    #[test]
    fn kraus_rejects_non_trace_preserving() {
        let rho = DensityMatrix::maximally_mixed(2);
        let half = ComplexMatrix::identity(2).scale(0.5);
        assert!(apply_kraus(&rho, &[half.clone()], false).is_err());
        // Same set accepted as a selective branch.
        let out = apply_kraus(&rho, &[half], true).unwrap();
        assert!(out.trace() < 1.0);
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(66);
        let u = random_unitary(4, &mut rng);
        let dev = u
            .adjoint()
            .mul(&u)
            .unwrap()
            .sub(&ComplexMatrix::identity(4))
            .unwrap()
            .frobenius_norm();
        assert!(dev < 1e-10);
    }
}
