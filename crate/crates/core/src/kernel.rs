//! Γ-equivariant operator kernels and the exact trace recursions.
//!
//! A [`PeriodicKernel`] is an element of the commutant algebra N(X, Γ):
//! an n×n matrix when Γ is finite (or trivial), or a finitely supported
//! map `offset ↦ cell×cell block` when Γ = ℤ^d acts by translations, in
//! which case composition is convolution over offsets. Everything is
//! generic over the scalar: the path-count recursions run over `BigInt`
//! so that every identity can be checked exactly, while the determinant
//! evaluations reuse the same kernels over `Complex64`.
//!
//! The recursions implemented here:
//!   A_0 = I, A_1 = A, A_2 = A² − Q − I, A_m = A_{m−1}A − A_{m−2}Q
//!     (A_m(x, y) counts proper paths of length m from x to y);
//!   t_m = Tr_Γ((Q − I) A_{m−2}) + t_{m−2}, t_1 = t_2 = 0
//!     (tailed proper closed paths based in the fundamental domain);
//!   N_m = Tr_Γ(A_m) − t_m  (reduced closed paths based in the domain);
//!   B_m = A_m − (Q − I) Σ_{k=1}^{⌊m/2⌋} A_{m−2k},
//!     with Tr_Γ B_m = N_m for odd m and N_m − Tr_Γ(Q − I) for even m.
//!
//! ‖A_m‖ ≤ α^m with α = (d + √(d² + 4d))/2, certified numerically by
//! [`norm_certificate`].

use crate::action::Instance;
use crate::error::{Error, Result};
use crate::scalar::RingScalar;
use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};
use std::collections::BTreeMap;
use std::f64::consts::TAU;

/// Dense row-major block over an arbitrary ring scalar.
#[derive(Clone, Debug, PartialEq)]
pub struct Block<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: RingScalar> Block<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut b = Self::zeros(n, n);
        for i in 0..n {
            *b.get_mut(i, i) = T::one();
        }
        b
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.cols + j]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut T {
        &mut self.data[i * self.cols + j]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    fn add(&self, other: &Self) -> Self {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
        }
    }

    fn neg(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| -a.clone()).collect() }
    }

    fn scale(&self, c: &T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a.clone() * c.clone()).collect(),
        }
    }

    fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let cur = out.get(i, j).clone();
                    *out.get_mut(i, j) = cur + a.clone() * b.clone();
                }
            }
        }
        out
    }

    fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn map<U: RingScalar>(&self, f: &impl Fn(&T) -> U) -> Block<U> {
        Block { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }
}

/// Which commutant algebra a kernel lives in.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum KernelSpace {
    Finite { n: usize },
    Periodic { rank: usize, cell: usize },
}

/// An equivariant operator kernel with finite support.
#[derive(Clone, Debug, PartialEq)]
pub enum PeriodicKernel<T> {
    Finite(Block<T>),
    Periodic { rank: usize, cell: usize, blocks: BTreeMap<Vec<i64>, Block<T>> },
}

impl<T: RingScalar> PeriodicKernel<T> {
    pub fn zero(space: &KernelSpace) -> Self {
        match *space {
            KernelSpace::Finite { n } => PeriodicKernel::Finite(Block::zeros(n, n)),
            KernelSpace::Periodic { rank, cell } => {
                PeriodicKernel::Periodic { rank, cell, blocks: BTreeMap::new() }
            }
        }
    }

    pub fn identity(space: &KernelSpace) -> Self {
        match *space {
            KernelSpace::Finite { n } => PeriodicKernel::Finite(Block::identity(n)),
            KernelSpace::Periodic { rank, cell } => {
                let mut blocks = BTreeMap::new();
                blocks.insert(vec![0i64; rank], Block::identity(cell));
                PeriodicKernel::Periodic { rank, cell, blocks }
            }
        }
    }

    pub fn finite_from_fn(n: usize, f: impl Fn(usize, usize) -> T) -> Self {
        PeriodicKernel::Finite(Block::from_fn(n, n, f))
    }

    pub fn space(&self) -> KernelSpace {
        match self {
            PeriodicKernel::Finite(b) => KernelSpace::Finite { n: b.rows() },
            PeriodicKernel::Periodic { rank, cell, .. } => {
                KernelSpace::Periodic { rank: *rank, cell: *cell }
            }
        }
    }

    /// Coefficient at `(i, j)` with the given offset (ignored and required
    /// empty-equivalent-zero for finite kernels).
    pub fn entry(&self, i: usize, j: usize, offset: &[i64]) -> T {
        match self {
            PeriodicKernel::Finite(b) => b.get(i, j).clone(),
            PeriodicKernel::Periodic { blocks, .. } => blocks
                .get(offset)
                .map(|b| b.get(i, j).clone())
                .unwrap_or_else(T::zero),
        }
    }

    /// Adds `value` to the coefficient at `(i, j, offset)`.
    pub fn add_entry(&mut self, i: usize, j: usize, offset: &[i64], value: T) {
        match self {
            PeriodicKernel::Finite(b) => {
                let cur = b.get(i, j).clone();
                *b.get_mut(i, j) = cur + value;
            }
            PeriodicKernel::Periodic { cell, blocks, .. } => {
                let b = blocks
                    .entry(offset.to_vec())
                    .or_insert_with(|| Block::zeros(*cell, *cell));
                let cur = b.get(i, j).clone();
                *b.get_mut(i, j) = cur + value;
            }
        }
    }

    fn check_space(&self, other: &Self) -> Result<()> {
        if self.space() != other.space() {
            return Err(Error::ActionMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_space(other)?;
        Ok(match (self, other) {
            (PeriodicKernel::Finite(a), PeriodicKernel::Finite(b)) => {
                PeriodicKernel::Finite(a.add(b))
            }
            (
                PeriodicKernel::Periodic { rank, cell, blocks: ba },
                PeriodicKernel::Periodic { blocks: bb, .. },
            ) => {
                let mut blocks = ba.clone();
                for (v, b) in bb {
                    match blocks.get_mut(v) {
                        Some(existing) => *existing = existing.add(b),
                        None => {
                            blocks.insert(v.clone(), b.clone());
                        }
                    }
                }
                blocks.retain(|_, b| !b.is_zero());
                PeriodicKernel::Periodic { rank: *rank, cell: *cell, blocks }
            }
            _ => unreachable!("space checked"),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        match self {
            PeriodicKernel::Finite(a) => PeriodicKernel::Finite(a.neg()),
            PeriodicKernel::Periodic { rank, cell, blocks } => PeriodicKernel::Periodic {
                rank: *rank,
                cell: *cell,
                blocks: blocks.iter().map(|(v, b)| (v.clone(), b.neg())).collect(),
            },
        }
    }

    pub fn scale(&self, c: &T) -> Self {
        match self {
            PeriodicKernel::Finite(a) => PeriodicKernel::Finite(a.scale(c)),
            PeriodicKernel::Periodic { rank, cell, blocks } => PeriodicKernel::Periodic {
                rank: *rank,
                cell: *cell,
                blocks: blocks
                    .iter()
                    .map(|(v, b)| (v.clone(), b.scale(c)))
                    .filter(|(_, b)| !b.is_zero())
                    .collect(),
            },
        }
    }

    /// Operator composition: matrix product, or offset convolution
    /// `(S·T)(v) = Σ_w S(w) T(v − w)` with blockwise products.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check_space(other)?;
        Ok(match (self, other) {
            (PeriodicKernel::Finite(a), PeriodicKernel::Finite(b)) => {
                PeriodicKernel::Finite(a.mul(b))
            }
            (
                PeriodicKernel::Periodic { rank, cell, blocks: ba },
                PeriodicKernel::Periodic { blocks: bb, .. },
            ) => {
                let mut blocks: BTreeMap<Vec<i64>, Block<T>> = BTreeMap::new();
                for (va, a) in ba {
                    for (vb, b) in bb {
                        let v: Vec<i64> = va.iter().zip(vb).map(|(x, y)| x + y).collect();
                        let prod = a.mul(b);
                        match blocks.get_mut(&v) {
                            Some(existing) => *existing = existing.add(&prod),
                            None => {
                                blocks.insert(v, prod);
                            }
                        }
                    }
                }
                blocks.retain(|_, b| !b.is_zero());
                PeriodicKernel::Periodic { rank: *rank, cell: *cell, blocks }
            }
            _ => unreachable!("space checked"),
        })
    }

    /// Sum of the diagonal over the listed rows (finite case) or cell
    /// classes (zero-offset block of a translation kernel).
    pub fn trace_over(&self, domain: &[usize]) -> Result<T> {
        match self {
            PeriodicKernel::Finite(b) => {
                let mut acc = T::zero();
                for &x in domain {
                    if x >= b.rows() {
                        return Err(Error::VertexOutOfRange { index: x, n: b.rows() });
                    }
                    acc = acc + b.get(x, x).clone();
                }
                Ok(acc)
            }
            PeriodicKernel::Periodic { rank, cell, blocks } => {
                let zero = vec![0i64; *rank];
                let mut acc = T::zero();
                if let Some(b) = blocks.get(&zero) {
                    for &x in domain {
                        if x >= *cell {
                            return Err(Error::VertexOutOfRange { index: x, n: *cell });
                        }
                        acc = acc + b.get(x, x).clone();
                    }
                }
                Ok(acc)
            }
        }
    }

    /// Tr_Γ for translation kernels: full diagonal of the zero-offset
    /// block.
    pub fn trace_cell(&self) -> Result<T> {
        match self {
            PeriodicKernel::Finite(b) => {
                let domain: Vec<usize> = (0..b.rows()).collect();
                self.trace_over(&domain)
            }
            PeriodicKernel::Periodic { cell, .. } => {
                let domain: Vec<usize> = (0..*cell).collect();
                self.trace_over(&domain)
            }
        }
    }

    /// Symmetry as an operator: coef(i, j, v) = coef(j, i, −v).
    pub fn is_symmetric(&self) -> bool {
        match self {
            PeriodicKernel::Finite(b) => *b == b.transpose(),
            PeriodicKernel::Periodic { blocks, .. } => blocks.iter().all(|(v, b)| {
                let minus: Vec<i64> = v.iter().map(|x| -x).collect();
                match blocks.get(&minus) {
                    Some(other) => b.transpose() == *other,
                    None => b.is_zero(),
                }
            }),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            PeriodicKernel::Finite(b) => b.is_zero(),
            PeriodicKernel::Periodic { blocks, .. } => blocks.values().all(|b| b.is_zero()),
        }
    }

    pub fn map_scalar<U: RingScalar>(&self, f: impl Fn(&T) -> U) -> PeriodicKernel<U> {
        match self {
            PeriodicKernel::Finite(b) => PeriodicKernel::Finite(b.map(&f)),
            PeriodicKernel::Periodic { rank, cell, blocks } => PeriodicKernel::Periodic {
                rank: *rank,
                cell: *cell,
                blocks: blocks.iter().map(|(v, b)| (v.clone(), b.map(&f))).collect(),
            },
        }
    }
}

impl PeriodicKernel<BigInt> {
    pub fn to_complex(&self) -> PeriodicKernel<Complex64> {
        self.map_scalar(|x| Complex64::new(x.to_f64().expect("entry fits f64"), 0.0))
    }

    /// True when every coefficient is ≥ 0 (path counts must be).
    pub fn is_nonnegative(&self) -> bool {
        let nonneg = |b: &Block<BigInt>| b.data.iter().all(|x| x.sign() != num_bigint::Sign::Minus);
        match self {
            PeriodicKernel::Finite(b) => nonneg(b),
            PeriodicKernel::Periodic { blocks, .. } => blocks.values().all(nonneg),
        }
    }
}

impl PeriodicKernel<Complex64> {
    /// Bloch symbol at momentum k: M(k) = Σ_v coef(·, ·, v) e^{i k·v}.
    /// Finite kernels are their own symbol.
    pub fn symbol_at(&self, k: &[f64]) -> DMatrix<Complex64> {
        match self {
            PeriodicKernel::Finite(b) => block_to_dmatrix(b),
            PeriodicKernel::Periodic { rank, cell, blocks } => {
                debug_assert_eq!(k.len(), *rank);
                let mut m = DMatrix::<Complex64>::zeros(*cell, *cell);
                for (v, b) in blocks {
                    let phase: f64 = v.iter().zip(k).map(|(x, kk)| *x as f64 * kk).sum();
                    let e = Complex64::new(0.0, phase).exp();
                    for i in 0..*cell {
                        for j in 0..*cell {
                            m[(i, j)] += e * b.get(i, j);
                        }
                    }
                }
                m
            }
        }
    }
}

pub fn block_to_dmatrix(b: &Block<Complex64>) -> DMatrix<Complex64> {
    DMatrix::from_fn(b.rows, b.cols, |i, j| *b.get(i, j))
}

/// A_0..A_M by the proper-path recursion; entries are nonnegative
/// integers counting non-backtracking paths.
pub fn a_sequence<T: RingScalar>(
    a: &PeriodicKernel<T>,
    q: &PeriodicKernel<T>,
    m_max: usize,
) -> Result<Vec<PeriodicKernel<T>>> {
    let space = a.space();
    if q.space() != space {
        return Err(Error::ActionMismatch);
    }
    let identity = PeriodicKernel::identity(&space);
    let mut seq = Vec::with_capacity(m_max + 1);
    seq.push(identity.clone());
    if m_max >= 1 {
        seq.push(a.clone());
    }
    if m_max >= 2 {
        let a2 = a.compose(a)?.sub(q)?.sub(&identity)?;
        seq.push(a2);
    }
    for m in 3..=m_max {
        let next = seq[m - 1].compose(a)?.sub(&seq[m - 2].compose(q)?)?;
        seq.push(next);
    }
    Ok(seq)
}

/// Tail counts by the recursion t_m = Tr_Γ((Q − I) A_{m−2}) + t_{m−2};
/// index m, with t_0 unused and t_1 = t_2 = 0.
pub fn t_sequence(
    inst: &Instance,
    a_seq: &[PeriodicKernel<BigInt>],
    q: &PeriodicKernel<BigInt>,
) -> Result<Vec<BigInt>> {
    let m_max = a_seq.len().saturating_sub(1);
    let identity = PeriodicKernel::identity(&q.space());
    let q_minus_i = q.sub(&identity)?;
    let mut t = vec![BigInt::zero(); m_max + 1];
    for m in 3..=m_max {
        let term = inst.tr_gamma(&q_minus_i.compose(&a_seq[m - 2])?)?;
        t[m] = term + &t[m - 2];
    }
    Ok(t)
}

/// Tail counts by the closed form
/// t_m = Tr_Γ((Q − I) Σ_{j=1}^{⌊(m−1)/2⌋} A_{m−2j}).
pub fn t_sequence_closed_form(
    inst: &Instance,
    a_seq: &[PeriodicKernel<BigInt>],
    q: &PeriodicKernel<BigInt>,
) -> Result<Vec<BigInt>> {
    let m_max = a_seq.len().saturating_sub(1);
    let identity = PeriodicKernel::identity(&q.space());
    let q_minus_i = q.sub(&identity)?;
    let mut t = vec![BigInt::zero(); m_max + 1];
    for m in 1..=m_max {
        let mut sum = PeriodicKernel::zero(&q.space());
        let mut j = 1;
        while 2 * j <= m - 1 {
            sum = sum.add(&a_seq[m - 2 * j])?;
            j += 1;
        }
        t[m] = inst.tr_gamma(&q_minus_i.compose(&sum)?)?;
    }
    Ok(t)
}

/// B_m = A_m − (Q − I) Σ_{k=1}^{⌊m/2⌋} A_{m−2k}.
pub fn b_sequence(
    a_seq: &[PeriodicKernel<BigInt>],
    q: &PeriodicKernel<BigInt>,
) -> Result<Vec<PeriodicKernel<BigInt>>> {
    let m_max = a_seq.len().saturating_sub(1);
    let space = q.space();
    let identity = PeriodicKernel::identity(&space);
    let q_minus_i = q.sub(&identity)?;
    // running sums Σ_{k>=1} A_{m-2k}, split by parity
    let mut partial = [PeriodicKernel::zero(&space), PeriodicKernel::zero(&space)];
    let mut out = Vec::with_capacity(m_max + 1);
    for (m, a_m) in a_seq.iter().enumerate() {
        if m >= 2 {
            partial[m % 2] = partial[m % 2].add(&a_seq[m - 2])?;
        }
        out.push(a_m.sub(&q_minus_i.compose(&partial[m % 2])?)?);
    }
    Ok(out)
}

/// The exact trace table: Tr_Γ(A_m), t_m, N_m = Tr_Γ(A_m) − t_m,
/// Tr_Γ(B_m), indexed by m = 0..=m_max.
#[derive(Clone, Debug)]
pub struct TraceLedger {
    pub tr_a: Vec<BigInt>,
    pub t: Vec<BigInt>,
    pub n: Vec<BigInt>,
    pub tr_b: Vec<BigInt>,
    pub tr_q_minus_i: BigInt,
    pub alpha: f64,
}

pub fn trace_ledger(inst: &Instance, m_max: usize) -> Result<TraceLedger> {
    let a = inst.adjacency_kernel();
    let q = inst.q_kernel();
    let a_seq = a_sequence(&a, &q, m_max)?;
    let t = t_sequence(inst, &a_seq, &q)?;
    let b_seq = b_sequence(&a_seq, &q)?;
    let identity = PeriodicKernel::identity(&q.space());
    let tr_q_minus_i = inst.tr_gamma(&q.sub(&identity)?)?;
    let mut tr_a = Vec::with_capacity(m_max + 1);
    let mut tr_b = Vec::with_capacity(m_max + 1);
    for m in 0..=m_max {
        tr_a.push(inst.tr_gamma(&a_seq[m])?);
        tr_b.push(inst.tr_gamma(&b_seq[m])?);
    }
    let n: Vec<BigInt> = (0..=m_max).map(|m| &tr_a[m] - &t[m]).collect();
    Ok(TraceLedger { tr_a, t, n, tr_b, tr_q_minus_i, alpha: inst.alpha() })
}

impl TraceLedger {
    /// N_m for m = 1..=m_max as i64 (counts fit comfortably at the sizes
    /// the oracle can cross-check).
    pub fn n_i64(&self) -> Vec<i64> {
        self.n.iter().map(|x| x.to_i64().expect("N_m fits i64")).collect()
    }
}

/// Spectral-norm certificate ‖A_m‖ ≤ α^m.
#[derive(Clone, Debug)]
pub struct NormCertificate {
    pub m: usize,
    pub norm: f64,
    pub bound: f64,
    pub ok: bool,
}

/// Certifies ‖A_m‖ ≤ α^m for m ≤ m_max. Finite kernels use a dense
/// Hermitian eigensolve; translation kernels take the sup of the Bloch
/// symbol norm over a sampled momentum grid (a lower bound on the true
/// norm, so violations are always genuine).
pub fn norm_certificate(inst: &Instance, m_max: usize, samples: usize) -> Result<Vec<NormCertificate>> {
    let a = inst.adjacency_kernel();
    let q = inst.q_kernel();
    let a_seq = a_sequence(&a, &q, m_max)?;
    let alpha = inst.alpha();
    let mut out = Vec::with_capacity(m_max + 1);
    for (m, k) in a_seq.iter().enumerate() {
        let norm = kernel_norm(&k.to_complex(), samples)?;
        let bound = alpha.powi(m as i32);
        // tiny slack for the floating eigensolve
        let ok = norm <= bound * (1.0 + 1e-9) + 1e-12;
        out.push(NormCertificate { m, norm, bound, ok });
    }
    Ok(out)
}

fn hermitian_two_norm(m: &DMatrix<Complex64>) -> f64 {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .fold(0.0f64, |acc, x| acc.max(x.abs()))
}

/// ‖k‖ as an operator: exact (dense eigensolve) for finite kernels,
/// sampled sup over the Brillouin zone for translation kernels.
pub fn kernel_norm(k: &PeriodicKernel<Complex64>, samples: usize) -> Result<f64> {
    match k {
        PeriodicKernel::Finite(b) => Ok(hermitian_two_norm(&block_to_dmatrix(b))),
        PeriodicKernel::Periodic { rank, .. } => {
            let n = samples.max(1);
            let mut sup = 0.0f64;
            let mut idx = vec![0usize; *rank];
            loop {
                let k_pt: Vec<f64> = idx.iter().map(|&i| TAU * i as f64 / n as f64).collect();
                sup = sup.max(hermitian_two_norm(&k.symbol_at(&k_pt)));
                let mut c = 0;
                loop {
                    if c == *rank {
                        break;
                    }
                    idx[c] += 1;
                    if idx[c] < n {
                        break;
                    }
                    idx[c] = 0;
                    c += 1;
                }
                if c == *rank {
                    break;
                }
            }
            Ok(sup)
        }
    }
}

/// A kernel-valued truncated power series Σ_m K_m u^m; the exact carrier
/// for the operator-series identities behind the determinant formula.
#[derive(Clone, Debug)]
pub struct KernelSeries<T> {
    space: KernelSpace,
    coeffs: Vec<PeriodicKernel<T>>,
}

impl<T: RingScalar> KernelSeries<T> {
    pub fn from_coeffs(space: KernelSpace, coeffs: Vec<PeriodicKernel<T>>) -> Self {
        Self { space, coeffs }
    }

    pub fn zero(space: KernelSpace, order: usize) -> Self {
        let coeffs = (0..=order).map(|_| PeriodicKernel::zero(&space)).collect();
        Self { space, coeffs }
    }

    pub fn identity(space: KernelSpace, order: usize) -> Self {
        let mut s = Self::zero(space.clone(), order);
        s.coeffs[0] = PeriodicKernel::identity(&space);
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, m: usize) -> &PeriodicKernel<T> {
        &self.coeffs[m]
    }

    pub fn coeffs(&self) -> &[PeriodicKernel<T>] {
        &self.coeffs
    }

    /// The deformed-Laplacian series Δ(u) = I − A u + Q u², padded to
    /// `order`.
    pub fn delta(a: &PeriodicKernel<T>, q: &PeriodicKernel<T>, order: usize) -> Self {
        let space = a.space();
        let mut s = Self::identity(space, order.max(2));
        s.coeffs[1] = a.neg();
        s.coeffs[2] = q.clone();
        s
    }

    /// f(u) = A u − Q u², the perturbation with Δ(u) = I − f(u).
    pub fn perturbation(a: &PeriodicKernel<T>, q: &PeriodicKernel<T>, order: usize) -> Self {
        let space = a.space();
        let mut s = Self::zero(space, order.max(2));
        s.coeffs[1] = a.clone();
        s.coeffs[2] = q.neg();
        s
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let order = self.order().min(other.order());
        let mut coeffs = Vec::with_capacity(order + 1);
        for m in 0..=order {
            coeffs.push(self.coeffs[m].add(&other.coeffs[m])?);
        }
        Ok(Self { space: self.space.clone(), coeffs })
    }

    /// Product truncated at the smaller order.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        let order = self.order().min(other.order());
        let mut coeffs = Vec::with_capacity(order + 1);
        for m in 0..=order {
            let mut acc = PeriodicKernel::zero(&self.space);
            for k in 0..=m {
                if self.coeffs[k].is_zero() || other.coeffs[m - k].is_zero() {
                    continue;
                }
                acc = acc.add(&self.coeffs[k].compose(&other.coeffs[m - k])?)?;
            }
            coeffs.push(acc);
        }
        Ok(Self { space: self.space.clone(), coeffs })
    }

    /// Coefficientwise derivative; order drops by one.
    pub fn derivative(&self) -> Self {
        let mut coeffs = Vec::with_capacity(self.order());
        let mut factor = T::zero();
        for m in 1..=self.order() {
            factor = factor + T::one();
            debug_assert!(m >= 1);
            coeffs.push(self.coeffs[m].scale(&factor));
        }
        Self { space: self.space.clone(), coeffs }
    }

    /// Geometric inverse (I − g)^{-1} = Σ g^n for a series with zero
    /// constant term; errors otherwise.
    pub fn geometric_inverse_of_one_minus(&self) -> Result<Self> {
        if !self.coeffs[0].is_zero() {
            return Err(Error::BadConstantTerm { expected: "0" });
        }
        let order = self.order();
        let mut acc = Self::identity(self.space.clone(), order);
        let mut power = Self::identity(self.space.clone(), order);
        for _ in 1..=order {
            power = power.mul(self)?;
            if power.coeffs.iter().all(|k| k.is_zero()) {
                break;
            }
            acc = acc.add(&power)?;
        }
        Ok(acc)
    }

    /// Tr_Γ of every coefficient.
    pub fn trace_series(&self, inst: &Instance) -> Result<Vec<T>> {
        self.coeffs.iter().map(|k| inst.tr_gamma(k)).collect()
    }
}
