//! Channel representations and conversions.
//!
//! Kraus operators are k×n matrices. A Stinespring isometry is a (k·m)×n
//! matrix whose environment index runs fastest, so the Kraus operator for
//! environment basis vector `e` is `K_e[i, x] = V[i·m + e, x]`. The Choi
//! matrix lives on C^n ⊗ C^k (input first): `J = Σ_ab |a⟩⟨b| ⊗ Φ(|a⟩⟨b|)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    apply_id_kron, haar_isometry, herm_eig, partial_trace_env, ComplexMatrix, C64, ZERO,
};

const TP_TOL: f64 = 1e-9;
const STATE_TOL: f64 = 1e-10;
/// Relative eigenvalue threshold (times tr J) for counting Kraus rank.
pub const RANK_TOL: f64 = 1e-9;

/// n-level quantum state.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    rho: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(rho: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(rho, STATE_TOL)
    }

    pub fn with_tolerance(rho: ComplexMatrix, tol: f64) -> Result<Self> {
        rho.require_square()?;
        let t = rho.trace();
        if (t.re - 1.0).abs() > tol || t.im.abs() > tol {
            return Err(Error::InvalidArgument(format!("state trace {t} is not 1")));
        }
        let e = herm_eig(&rho)?;
        if e.min() < -tol {
            return Err(Error::NotPsd { min_eig: e.min() });
        }
        Ok(Self { rho: rho.hermitian_part() })
    }

    /// Pure state |ψ⟩⟨ψ| from a (not necessarily normalized) vector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidArgument("zero vector".into()));
        }
        let v = ComplexMatrix::column(&psi.iter().map(|z| z / norm).collect::<Vec<_>>());
        Self::new(v.matmul(&v.adjoint()))
    }

    pub fn dim(&self) -> usize {
        self.rho.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.rho
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.rho
    }
}

/// Channel in operator-sum form `Φ(ρ) = Σ_j K_j ρ K_j*`.
#[derive(Debug, Clone)]
pub struct KrausChannel {
    dim_in: usize,
    dim_out: usize,
    ops: Vec<ComplexMatrix>,
}

impl KrausChannel {
    /// Validates shapes and trace preservation `Σ K_j* K_j = 1` to 1e-9.
    pub fn new(ops: Vec<ComplexMatrix>) -> Result<Self> {
        Self::with_tolerance(ops, TP_TOL)
    }

    pub fn with_tolerance(ops: Vec<ComplexMatrix>, tol: f64) -> Result<Self> {
        let first = ops.first().ok_or_else(|| Error::InvalidChannel("no Kraus operators".into()))?;
        let (dim_out, dim_in) = first.shape();
        for (i, k) in ops.iter().enumerate() {
            if k.shape() != (dim_out, dim_in) {
                return Err(Error::DimensionMismatch(format!(
                    "Kraus operator {i} is {}x{}, expected {dim_out}x{dim_in}",
                    k.rows(),
                    k.cols()
                )));
            }
            k.check_finite()?;
        }
        let ch = Self { dim_in, dim_out, ops };
        let defect = ch.trace_preservation_defect();
        if defect > tol {
            return Err(Error::InvalidChannel(format!("not trace preserving (defect {defect:e})")));
        }
        Ok(ch)
    }

    pub fn identity(n: usize) -> Self {
        Self { dim_in: n, dim_out: n, ops: vec![ComplexMatrix::identity(n)] }
    }

    /// `U (·) U*` for an isometry U (k×n).
    pub fn isometric(u: ComplexMatrix) -> Result<Self> {
        Self::new(vec![u])
    }

    /// Convex combination Σ p_i Φ_i as a Kraus list.
    pub fn mixture(parts: &[(f64, &KrausChannel)]) -> Result<Self> {
        let mut ops = Vec::new();
        for (p, ch) in parts {
            if *p < 0.0 {
                return Err(Error::InvalidArgument("negative mixture weight".into()));
            }
            if *p == 0.0 {
                continue;
            }
            ops.extend(ch.ops.iter().map(|k| k.scale_real(p.sqrt())));
        }
        Self::new(ops)
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn ops(&self) -> &[ComplexMatrix] {
        &self.ops
    }

    pub fn num_ops(&self) -> usize {
        self.ops.len()
    }

    pub fn trace_preservation_defect(&self) -> f64 {
        let mut s = ComplexMatrix::zeros(self.dim_in, self.dim_in);
        for k in &self.ops {
            s += &k.adjoint_mul(k);
        }
        (&s - &ComplexMatrix::identity(self.dim_in)).max_abs()
    }

    /// Φ(ρ).
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let out = self.apply_matrix(rho.matrix())?;
        DensityMatrix::with_tolerance(out, 1e-9)
    }

    /// Φ(X) for an arbitrary n×n matrix.
    pub fn apply_matrix(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if x.shape() != (self.dim_in, self.dim_in) {
            return Err(Error::DimensionMismatch(format!(
                "channel input is {0}x{0}, got {1}x{2}",
                self.dim_in,
                x.rows(),
                x.cols()
            )));
        }
        let mut out = ComplexMatrix::zeros(self.dim_out, self.dim_out);
        for k in &self.ops {
            out += &k.matmul(x).matmul(&k.adjoint());
        }
        Ok(out)
    }

    /// (id_a ⊗ Φ)(X) for X on C^a ⊗ C^n.
    pub fn apply_extended(&self, x: &ComplexMatrix, ancilla: usize) -> Result<ComplexMatrix> {
        let n = self.dim_in;
        if x.shape() != (ancilla * n, ancilla * n) {
            return Err(Error::DimensionMismatch(format!(
                "extended input must be {0}x{0}, got {1}x{2}",
                ancilla * n,
                x.rows(),
                x.cols()
            )));
        }
        let mut out = ComplexMatrix::zeros(ancilla * self.dim_out, ancilla * self.dim_out);
        for k in &self.ops {
            let big = ComplexMatrix::identity(ancilla).kron(k);
            out += &big.matmul(x).matmul(&big.adjoint());
        }
        Ok(out)
    }

    pub fn to_choi(&self) -> ChoiMatrix {
        choi_from_kraus(self)
    }

    pub fn kraus_rank(&self) -> usize {
        kraus_rank(self)
    }
}

/// Stinespring isometry V: C^n → C^k ⊗ C^m.
#[derive(Debug, Clone)]
pub struct StinespringIsometry {
    dim_in: usize,
    dim_out: usize,
    dim_env: usize,
    v: ComplexMatrix,
}

impl StinespringIsometry {
    /// Validates shape and `V*V = 1` to 1e-9.
    pub fn new(v: ComplexMatrix, dim_out: usize, dim_env: usize) -> Result<Self> {
        Self::with_tolerance(v, dim_out, dim_env, TP_TOL)
    }

    pub fn with_tolerance(v: ComplexMatrix, dim_out: usize, dim_env: usize, tol: f64) -> Result<Self> {
        v.check_finite()?;
        if v.rows() != dim_out * dim_env {
            return Err(Error::DimensionMismatch(format!(
                "isometry has {} rows, expected {dim_out}*{dim_env}",
                v.rows()
            )));
        }
        let dim_in = v.cols();
        let defect = (&v.adjoint_mul(&v) - &ComplexMatrix::identity(dim_in)).max_abs();
        if defect > tol {
            return Err(Error::InvalidChannel(format!("V*V deviates from identity by {defect:e}")));
        }
        Ok(Self { dim_in, dim_out, dim_env, v })
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn dim_env(&self) -> usize {
        self.dim_env
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.dim_in, self.dim_out, self.dim_env)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.v
    }

    /// `(1 ⊗ ⟨e|) V`.
    pub fn kraus_op(&self, e: usize) -> ComplexMatrix {
        let m = self.dim_env;
        ComplexMatrix::from_fn(self.dim_out, self.dim_in, |i, x| self.v[(i * m + e, x)])
    }

    /// `(1 ⊗ U) V` for an m×m unitary U.
    pub fn rotate_env(&self, u: &ComplexMatrix) -> Result<Self> {
        if u.shape() != (self.dim_env, self.dim_env) {
            return Err(Error::DimensionMismatch(format!(
                "environment unitary must be {0}x{0}",
                self.dim_env
            )));
        }
        Self::with_tolerance(apply_id_kron(u, &self.v, self.dim_out), self.dim_out, self.dim_env, 1e-8)
    }

    /// `(1 ⊗ ι) V` with ι: C^m → C^{m'} padding with zeros.
    pub fn embed_env(&self, new_env: usize) -> Result<Self> {
        if new_env < self.dim_env {
            return Err(Error::InvalidArgument(format!(
                "cannot embed environment {} into {new_env}",
                self.dim_env
            )));
        }
        let (k, m) = (self.dim_out, self.dim_env);
        let mut v = ComplexMatrix::zeros(k * new_env, self.dim_in);
        for a in 0..k {
            for e in 0..m {
                for x in 0..self.dim_in {
                    v[(a * new_env + e, x)] = self.v[(a * m + e, x)];
                }
            }
        }
        Ok(Self { dim_in: self.dim_in, dim_out: k, dim_env: new_env, v })
    }

    pub fn to_channel(&self) -> KrausChannel {
        channel_from_stinespring(self)
    }

    /// tr_env(V ρ V*).
    pub fn apply_matrix(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if x.shape() != (self.dim_in, self.dim_in) {
            return Err(Error::DimensionMismatch("state dimension mismatch".into()));
        }
        partial_trace_env(&self.v.matmul(x).matmul(&self.v.adjoint()), self.dim_out, self.dim_env)
    }
}

/// Choi matrix on C^n ⊗ C^k.
#[derive(Debug, Clone)]
pub struct ChoiMatrix {
    dim_in: usize,
    dim_out: usize,
    j: ComplexMatrix,
}

impl ChoiMatrix {
    /// Validates positivity and `tr_out J = 1_n`.
    pub fn new(j: ComplexMatrix, dim_in: usize, dim_out: usize) -> Result<Self> {
        if j.shape() != (dim_in * dim_out, dim_in * dim_out) {
            return Err(Error::DimensionMismatch("Choi matrix shape".into()));
        }
        let e = herm_eig(&j)?;
        if e.min() < -TP_TOL {
            return Err(Error::NotPsd { min_eig: e.min() });
        }
        let marg = partial_trace_env(&j, dim_in, dim_out)?;
        let defect = (&marg - &ComplexMatrix::identity(dim_in)).max_abs();
        if defect > TP_TOL {
            return Err(Error::InvalidChannel(format!("Choi partial trace defect {defect:e}")));
        }
        Ok(Self { dim_in, dim_out, j: j.hermitian_part() })
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.j
    }
}

/// Column vectorization `vec(K)[a·k + i] = K[i, a]` matching the Choi layout.
pub fn vectorize_kraus(op: &ComplexMatrix) -> Vec<C64> {
    let (k, n) = op.shape();
    let mut v = vec![ZERO; n * k];
    for a in 0..n {
        for i in 0..k {
            v[a * k + i] = op[(i, a)];
        }
    }
    v
}

/// Inverse of [`vectorize_kraus`].
pub fn unvectorize_kraus(v: &[C64], dim_in: usize, dim_out: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim_out, dim_in, |i, a| v[a * dim_out + i])
}

/// Choi matrix of a list of (not necessarily trace-preserving) Kraus-like operators.
pub fn choi_of_ops(ops: &[ComplexMatrix], dim_in: usize, dim_out: usize) -> ComplexMatrix {
    let d = dim_in * dim_out;
    let mut j = ComplexMatrix::zeros(d, d);
    for k in ops {
        let v = vectorize_kraus(k);
        for r in 0..d {
            if v[r] == ZERO {
                continue;
            }
            for c in 0..d {
                j[(r, c)] += v[r] * v[c].conj();
            }
        }
    }
    j
}

pub fn choi_from_kraus(ch: &KrausChannel) -> ChoiMatrix {
    ChoiMatrix {
        dim_in: ch.dim_in,
        dim_out: ch.dim_out,
        j: choi_of_ops(&ch.ops, ch.dim_in, ch.dim_out),
    }
}

/// Canonical Kraus operators from the Choi eigendecomposition: one operator
/// per eigenvalue above `RANK_TOL · tr J`, ordered by descending eigenvalue.
pub fn kraus_from_choi(choi: &ChoiMatrix) -> Result<KrausChannel> {
    let e = herm_eig(&choi.j)?;
    let tr: f64 = e.eigenvalues.iter().sum();
    let cut = RANK_TOL * tr.abs().max(f64::MIN_POSITIVE);
    if e.min() < -1e-8 * tr.abs().max(1.0) {
        return Err(Error::NotPsd { min_eig: e.min() });
    }
    let mut ops = Vec::new();
    for idx in (0..e.eigenvalues.len()).rev() {
        let l = e.eigenvalues[idx];
        if l > cut {
            let v: Vec<C64> = e.vector(idx).iter().map(|z| z * l.sqrt()).collect();
            ops.push(unvectorize_kraus(&v, choi.dim_in, choi.dim_out));
        }
    }
    KrausChannel::with_tolerance(ops, 1e-8)
}

/// Number of Choi eigenvalues above `RANK_TOL · tr J`.
pub fn kraus_rank(ch: &KrausChannel) -> usize {
    let j = choi_of_ops(&ch.ops, ch.dim_in, ch.dim_out);
    let e = herm_eig(&j).expect("Choi matrix of a Kraus list is Hermitian");
    let tr: f64 = e.eigenvalues.iter().sum();
    let cut = RANK_TOL * tr.abs().max(f64::MIN_POSITIVE);
    e.eigenvalues.iter().filter(|&&l| l > cut).count()
}

/// Canonical Kraus form with exactly `kraus_rank` operators.
pub fn canonical_kraus(ch: &KrausChannel) -> Result<KrausChannel> {
    kraus_from_choi(&choi_from_kraus(ch))
}

/// `Ṽx = Σ_j K_j x ⊗ |offset + j⟩` in an m-dimensional environment.
pub fn stinespring_from_kraus(ch: &KrausChannel, m: usize, offset: usize) -> Result<StinespringIsometry> {
    let r = ch.ops.len();
    if offset + r > m {
        return Err(Error::Precondition(format!(
            "environment dimension {m} too small for {r} Kraus operators at offset {offset}"
        )));
    }
    let (k, n) = (ch.dim_out, ch.dim_in);
    let mut v = ComplexMatrix::zeros(k * m, n);
    for (j, op) in ch.ops.iter().enumerate() {
        for i in 0..k {
            for x in 0..n {
                v[(i * m + offset + j, x)] = op[(i, x)];
            }
        }
    }
    StinespringIsometry::with_tolerance(v, k, m, 1e-8)
}

/// Kraus operators `K_e = (1 ⊗ ⟨e|) V` for every environment basis vector.
pub fn channel_from_stinespring(v: &StinespringIsometry) -> KrausChannel {
    let ops = (0..v.dim_env).map(|e| v.kraus_op(e)).collect();
    KrausChannel { dim_in: v.dim_in, dim_out: v.dim_out, ops }
}

/// Random channel of the requested Kraus rank from a Haar isometry
/// C^n → C^k ⊗ C^rank.
pub fn random_channel<R: Rng + ?Sized>(n: usize, k: usize, rank: usize, rng: &mut R) -> Result<KrausChannel> {
    if rank == 0 || rank > n * k {
        return Err(Error::InvalidArgument(format!("Kraus rank {rank} outside 1..={}", n * k)));
    }
    if k * rank < n {
        return Err(Error::InvalidArgument(format!(
            "rank {rank} cannot be trace preserving for n={n}, k={k}"
        )));
    }
    let v = haar_isometry(k * rank, n, rng);
    let iso = StinespringIsometry::with_tolerance(v, k, rank, 1e-8)?;
    Ok(channel_from_stinespring(&iso))
}

/// Stinespring isometry of `ch` in environment dimension m, randomized by a
/// Haar unitary on the environment.
pub fn random_dilation<R: Rng + ?Sized>(ch: &KrausChannel, m: usize, rng: &mut R) -> Result<StinespringIsometry> {
    let canon = canonical_kraus(ch)?;
    let base = stinespring_from_kraus(&canon, m, 0)?;
    base.rotate_env(&crate::linalg::haar_unitary(m, rng))
}

/// On-disk channel description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ChannelFile {
    Kraus { dim_in: usize, dim_out: usize, ops: Vec<ComplexMatrix> },
    Stinespring { dim_in: usize, dim_out: usize, dim_env: usize, v: ComplexMatrix },
}

impl ChannelFile {
    pub fn from_kraus(ch: &KrausChannel) -> Self {
        ChannelFile::Kraus { dim_in: ch.dim_in, dim_out: ch.dim_out, ops: ch.ops.clone() }
    }

    pub fn from_stinespring(v: &StinespringIsometry) -> Self {
        ChannelFile::Stinespring { dim_in: v.dim_in, dim_out: v.dim_out, dim_env: v.dim_env, v: v.v.clone() }
    }

    pub fn to_kraus(&self) -> Result<KrausChannel> {
        match self {
            ChannelFile::Kraus { dim_in, dim_out, ops } => {
                let ch = KrausChannel::with_tolerance(ops.clone(), 1e-6)?;
                check_dims(ch.dim_in, ch.dim_out, *dim_in, *dim_out)?;
                Ok(ch)
            }
            ChannelFile::Stinespring { .. } => Ok(self.to_stinespring(None)?.to_channel()),
        }
    }

    /// Stinespring form; Kraus files are dilated with environment `env`
    /// (default: number of operators).
    pub fn to_stinespring(&self, env: Option<usize>) -> Result<StinespringIsometry> {
        match self {
            ChannelFile::Stinespring { dim_in, dim_out, dim_env, v } => {
                let iso = StinespringIsometry::with_tolerance(v.clone(), *dim_out, *dim_env, 1e-6)?;
                check_dims(iso.dim_in, iso.dim_out, *dim_in, *dim_out)?;
                match env {
                    Some(m) if m != *dim_env => iso.embed_env(m),
                    _ => Ok(iso),
                }
            }
            ChannelFile::Kraus { .. } => {
                let ch = self.to_kraus()?;
                let m = env.unwrap_or(ch.num_ops());
                stinespring_from_kraus(&ch, m, 0)
            }
        }
    }

    pub fn env_dim(&self) -> usize {
        match self {
            ChannelFile::Kraus { ops, .. } => ops.len(),
            ChannelFile::Stinespring { dim_env, .. } => *dim_env,
        }
    }
}

fn check_dims(n: usize, k: usize, dn: usize, dk: usize) -> Result<()> {
    if n != dn || k != dk {
        return Err(Error::DimensionMismatch(format!(
            "declared dims ({dn}, {dk}) do not match data ({n}, {k})"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random::{random_density, RngStream};
    use crate::linalg::{haar_unitary, ONE};
    use std::f64::consts::PI;

    fn depolarizing_qubit() -> KrausChannel {
        let mut ops = Vec::new();
        for i in 0..2 {
            for j in 0..2 {
                ops.push(ComplexMatrix::unit(2, 2, i, j).scale_real(std::f64::consts::FRAC_1_SQRT_2));
            }
        }
        KrausChannel::new(ops).unwrap()
    }

    fn omega_unitary(n: usize) -> ComplexMatrix {
        let d: Vec<C64> = (0..n).map(|j| C64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64)).collect();
        ComplexMatrix::diag(&d)
    }

    #[test]
    fn identity_channel_fixes_states() {
        let mut rng = RngStream::new(1).rng();
        let rho = DensityMatrix::new(random_density(3, 3, &mut rng)).unwrap();
        let out = KrausChannel::identity(3).apply(&rho).unwrap();
        assert!(out.matrix().approx_eq(rho.matrix(), 1e-14));
    }

    #[test]
    fn unitary_channel_on_ground_state() {
        let mut rng = RngStream::new(2).rng();
        let u = haar_unitary(2, &mut rng);
        let ch = KrausChannel::isometric(u.clone()).unwrap();
        let ket0 = ComplexMatrix::ket(2, 0);
        let rho = DensityMatrix::pure(&[ONE, ZERO]).unwrap();
        let expect = u.matmul(&ket0).matmul(&ket0.adjoint()).matmul(&u.adjoint());
        assert!(ch.apply(&rho).unwrap().matrix().approx_eq(&expect, 1e-12));
    }

    #[test]
    fn depolarizing_outputs_maximally_mixed() {
        let mut rng = RngStream::new(3).rng();
        let rho = DensityMatrix::new(random_density(2, 2, &mut rng)).unwrap();
        let out = depolarizing_qubit().apply(&rho).unwrap();
        assert!(out.matrix().approx_eq(&ComplexMatrix::identity(2).scale_real(0.5), 1e-12));
        assert_eq!(kraus_rank(&depolarizing_qubit()), 4);
    }

    #[test]
    fn kraus_ranks_of_named_channels() {
        let mut rng = RngStream::new(4).rng();
        assert_eq!(kraus_rank(&KrausChannel::isometric(haar_unitary(3, &mut rng)).unwrap()), 1);
        let id = KrausChannel::identity(3);
        let rot = KrausChannel::isometric(omega_unitary(3)).unwrap();
        let mix = KrausChannel::mixture(&[(0.5, &id), (0.5, &rot)]).unwrap();
        assert_eq!(kraus_rank(&mix), 2);
    }

    #[test]
    fn stinespring_of_identity() {
        let v = stinespring_from_kraus(&KrausChannel::identity(2), 1, 0).unwrap();
        assert!(v.matrix().approx_eq(&ComplexMatrix::identity(2), 0.0));
        let ch = channel_from_stinespring(&v);
        assert_eq!(ch.num_ops(), 1);
        assert!(ch.ops()[0].approx_eq(&ComplexMatrix::identity(2), 0.0));
        assert!(stinespring_from_kraus(&depolarizing_qubit(), 3, 0).is_err());
    }

    #[test]
    fn offset_dilations_are_orthogonal() {
        let mut rng = RngStream::new(5).rng();
        let c1 = random_channel(2, 2, 2, &mut rng).unwrap();
        let c2 = random_channel(2, 2, 3, &mut rng).unwrap();
        let v1 = stinespring_from_kraus(&c1, 5, 0).unwrap();
        let v2 = stinespring_from_kraus(&c2, 5, 2).unwrap();
        assert!(v1.matrix().adjoint_mul(v2.matrix()).max_abs() < 1e-15);
        // kraus operators read back at the shifted indices
        for j in 0..3 {
            assert!(v2.kraus_op(2 + j).approx_eq(&c2.ops()[j], 1e-15));
        }
    }

    #[test]
    fn representation_round_trips_preserve_action() {
        let mut rng = RngStream::new(6).rng();
        for t in 0..20 {
            let (n, k) = (1 + t % 3, 1 + (t / 3) % 3);
            let r = (1 + t % 4).min(n * k).max((n + k - 1) / k);
            let ch = random_channel(n, k, r, &mut rng).unwrap();
            let via_st = channel_from_stinespring(&stinespring_from_kraus(&ch, r + 1, 1).unwrap());
            let via_choi = kraus_from_choi(&choi_from_kraus(&ch)).unwrap();
            assert_eq!(via_choi.num_ops(), r);
            for _ in 0..20 {
                let rho = random_density(n, n, &mut rng);
                let a = ch.apply_matrix(&rho).unwrap();
                assert!(via_st.apply_matrix(&rho).unwrap().approx_eq(&a, 1e-9));
                assert!(via_choi.apply_matrix(&rho).unwrap().approx_eq(&a, 1e-9));
                assert!((a.trace().re - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn random_channel_ranks_and_choi_trace() {
        let mut rng = RngStream::new(7).rng();
        for t in 0..50 {
            let n = 1 + t % 3;
            let k = 1 + (t / 3) % 3;
            let lo = (n + k - 1) / k;
            let r = lo + t % (n * k - lo + 1);
            let ch = random_channel(n, k, r, &mut rng).unwrap();
            assert_eq!(kraus_rank(&ch), r, "n={n} k={k} r={r}");
        }
        let ch = random_channel(2, 2, 4, &mut rng).unwrap();
        assert!((choi_from_kraus(&ch).matrix().trace().re - 2.0).abs() < 1e-12);
        assert!(random_channel(2, 2, 5, &mut rng).is_err());
        assert!(random_channel(3, 1, 2, &mut rng).is_err());
    }

    #[test]
    fn dilations_with_different_offsets_agree() {
        let mut rng = RngStream::new(8).rng();
        let ch = random_channel(2, 3, 2, &mut rng).unwrap();
        let a = stinespring_from_kraus(&ch, 4, 0).unwrap();
        let b = stinespring_from_kraus(&ch, 4, 2).unwrap();
        let rho = random_density(2, 2, &mut rng);
        assert!(a.apply_matrix(&rho).unwrap().approx_eq(&b.apply_matrix(&rho).unwrap(), 1e-12));
    }

    #[test]
    fn channel_file_json_round_trip() {
        let mut rng = RngStream::new(9).rng();
        let ch = random_channel(2, 2, 2, &mut rng).unwrap();
        let s = serde_json::to_string(&ChannelFile::from_kraus(&ch)).unwrap();
        assert!(s.contains("\"kind\":\"kraus\""));
        let back: ChannelFile = serde_json::from_str(&s).unwrap();
        let ch2 = back.to_kraus().unwrap();
        assert_eq!(ch2.num_ops(), 2);
        let v = stinespring_from_kraus(&ch, 3, 0).unwrap();
        let s = serde_json::to_string(&ChannelFile::from_stinespring(&v)).unwrap();
        assert!(s.contains("\"kind\":\"stinespring\""));
        let back: ChannelFile = serde_json::from_str(&s).unwrap();
        assert_eq!(back.to_stinespring(None).unwrap().dims(), (2, 2, 3));
    }

    #[test]
    fn embed_env_pads_with_zeros() {
        let v = stinespring_from_kraus(&KrausChannel::identity(2), 1, 0).unwrap();
        let e = v.embed_env(3).unwrap();
        assert_eq!(e.dims(), (2, 2, 3));
        assert!(e.kraus_op(0).approx_eq(&ComplexMatrix::identity(2), 0.0));
        assert_eq!(e.kraus_op(2).max_abs(), 0.0);
    }
}
