//! Analytic determinants and the determinant formula.
//!
//! For an operator A whose spectral convex hull misses 0, the analytic
//! determinant is det_τ(A) = exp(τ(log A)), where the branch of log is
//! cut along the ray opposite the hull: with θ₀ the argument of the hull
//! point nearest the origin, the hull lies in the half-plane
//! {Re(e^{−iθ₀}λ) > 0} and log_{θ₀}(λ) = iθ₀ + Log(e^{−iθ₀}λ) is
//! holomorphic there. det_τ does not depend on the admissible branch.
//!
//! Three evaluation routes for det_Γ(Δ(u)), Δ(u) = I − Au + Qu²:
//!
//! * **series** — exp(−Σ_{n≥1} Tr_Γ(f(u)ⁿ)/n) with f(u) = Au − Qu²,
//!   valid for |u| < 1/α where ‖f(u)‖ ≤ d|u| + (d−1)|u|² < 1, with the
//!   geometric tail bounding the truncation error;
//! * **eigen** — finite quotients: eigenvalues of the dense Δ(u) and the
//!   hull-branch log, with Tr_Γ = (|VB|/|VX|)·tr by freeness;
//! * **bloch** — lattices: exp((2π)^{−d} ∫ tr log Δ(u, k) dk) by the
//!   periodic trapezoid rule over the Brillouin zone, the branch fixed
//!   once for the whole symbol family so the integrand stays smooth.
//!
//! The determinant formula itself: 1/Z(u) = (1 − u²)^{−χ(B)} det_Γ(Δ(u)),
//! checked exactly in series mode and numerically in value mode.

use crate::action::Instance;
use crate::error::{Error, Result};
use crate::graph::PeriodicGraph;
use crate::kernel::{block_to_dmatrix, KernelSeries, PeriodicKernel};
use crate::series::{binomial_one_minus_upow, TruncatedSeries};
use crate::{Cplx, ExactSeries, Rat};
use nalgebra::DMatrix;
use num_bigint::BigInt;
use rand::Rng;
use std::f64::consts::TAU;

/// The trace τ = c·tr used by the analytic determinant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TraceKind {
    /// τ = tr.
    Full,
    /// τ = tr/n.
    Normalized,
    /// τ = c·tr, e.g. c = 1/|Γ| for the restricted trace of a free action.
    Scaled(f64),
}

impl TraceKind {
    fn weight(&self, n: usize) -> f64 {
        match self {
            TraceKind::Full => 1.0,
            TraceKind::Normalized => 1.0 / n as f64,
            TraceKind::Scaled(c) => *c,
        }
    }

    /// τ(I) for an n-dimensional algebra.
    pub fn unit_trace(&self, n: usize) -> f64 {
        self.weight(n) * n as f64
    }
}

/// Branch data for the hull-avoiding logarithm.
#[derive(Clone, Copy, Debug)]
pub struct HullBranch {
    /// Argument of the hull point nearest 0; the cut runs along
    /// −e^{iθ₀}·ℝ₊.
    pub theta0: f64,
    /// Distance from 0 to the hull.
    pub distance: f64,
    pub spectral_radius: f64,
}

/// Relative tolerance of the hull test: 0 counts as outside only when its
/// distance to the hull exceeds this times the spectral radius.
pub const HULL_REL_TOL: f64 = 1e-9;

fn cross(o: Cplx, a: Cplx, b: Cplx) -> f64 {
    (a.re - o.re) * (b.im - o.im) - (a.im - o.im) * (b.re - o.re)
}

/// Convex hull (monotone chain), counter-clockwise, no repeated endpoint.
fn convex_hull(points: &[Cplx]) -> Vec<Cplx> {
    let mut pts: Vec<Cplx> = points.to_vec();
    pts.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).expect("finite points"));
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut lower: Vec<Cplx> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Cplx> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn point_segment_nearest(a: Cplx, b: Cplx) -> Cplx {
    let ab = b - a;
    let denom = ab.norm_sqr();
    if denom == 0.0 {
        return a;
    }
    let t = ((-a.re) * ab.re + (-a.im) * ab.im) / denom;
    a + ab * t.clamp(0.0, 1.0)
}

/// Checks 0 ∉ conv σ and selects the branch direction. Errors with
/// `HullContainsZero` when 0 is inside or within tolerance of the hull.
pub fn hull_branch(points: &[Cplx], rel_tol: f64) -> Result<HullBranch> {
    if points.is_empty() {
        return Err(Error::Numerical("empty spectrum".into()));
    }
    if points.iter().any(|p| !p.re.is_finite() || !p.im.is_finite()) {
        return Err(Error::Numerical("non-finite eigenvalue".into()));
    }
    let spectral_radius = points.iter().map(|p| p.norm()).fold(0.0, f64::max);
    let hull = convex_hull(points);
    if hull.len() >= 3 {
        let inside = (0..hull.len()).all(|i| {
            let a = hull[i];
            let b = hull[(i + 1) % hull.len()];
            cross(a, b, Cplx::new(0.0, 0.0)) >= 0.0
        });
        if inside {
            return Err(Error::HullContainsZero);
        }
    }
    let mut nearest = hull[0];
    let mut distance = hull[0].norm();
    if hull.len() >= 2 {
        for i in 0..hull.len() {
            let a = hull[i];
            let b = hull[(i + 1) % hull.len()];
            let p = point_segment_nearest(a, b);
            if p.norm() < distance {
                distance = p.norm();
                nearest = p;
            }
            if hull.len() == 2 {
                break;
            }
        }
    }
    if distance <= rel_tol * spectral_radius {
        return Err(Error::HullContainsZero);
    }
    Ok(HullBranch { theta0: nearest.arg(), distance, spectral_radius })
}

/// log with the cut along −e^{iθ₀}·ℝ₊.
pub fn log_with_branch(z: Cplx, theta0: f64) -> Cplx {
    Cplx::new(0.0, theta0) + (z * Cplx::new(0.0, -theta0).exp()).ln()
}

/// Eigenvalues of a square complex matrix (closed form for 1×1 and 2×2,
/// Schur otherwise).
pub fn matrix_eigenvalues(m: &DMatrix<Cplx>) -> Result<Vec<Cplx>> {
    match m.nrows() {
        0 => Err(Error::Numerical("empty matrix".into())),
        1 => Ok(vec![m[(0, 0)]]),
        2 => {
            let tr = m[(0, 0)] + m[(1, 1)];
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            let disc = (tr * tr - det * 4.0).sqrt();
            Ok(vec![(tr + disc) * 0.5, (tr - disc) * 0.5])
        }
        _ => {
            let eig = m
                .clone()
                .eigenvalues()
                .ok_or_else(|| Error::Numerical("eigenvalue iteration failed".into()))?;
            Ok(eig.iter().copied().collect())
        }
    }
}

fn sum_branch_logs(eigs: &[Cplx], theta0: f64) -> Cplx {
    eigs.iter().map(|&l| log_with_branch(l, theta0)).sum()
}

/// det_τ(A) = exp(τ(log A)), with the hull-branch log.
pub fn analytic_det(m: &DMatrix<Cplx>, tau: TraceKind) -> Result<Cplx> {
    let eigs = matrix_eigenvalues(m)?;
    let branch = hull_branch(&eigs, HULL_REL_TOL)?;
    let c = tau.weight(m.nrows());
    Ok((sum_branch_logs(&eigs, branch.theta0) * c).exp())
}

/// det_τ with an explicitly chosen branch direction; the direction must
/// keep the whole spectrum in its half-plane. Any two admissible choices
/// give the same value when τ(I) is an integer, which is what the
/// branch-independence test exercises.
pub fn analytic_det_with_theta(m: &DMatrix<Cplx>, tau: TraceKind, theta0: f64) -> Result<Cplx> {
    let eigs = matrix_eigenvalues(m)?;
    if eigs
        .iter()
        .any(|l| (l * Cplx::new(0.0, -theta0).exp()).re <= 0.0)
    {
        return Err(Error::BranchObstruction);
    }
    let c = tau.weight(m.nrows());
    Ok((sum_branch_logs(&eigs, theta0) * c).exp())
}

/// |det_τ(zA) − z^{τ(I)} det_τ(A)|, the scaling-property residual;
/// z^{τ(I)} uses the principal log of z.
pub fn scaling_residual(m: &DMatrix<Cplx>, z: Cplx, tau: TraceKind) -> Result<f64> {
    if z == Cplx::new(0.0, 0.0) {
        return Err(Error::Numerical("scaling by zero".into()));
    }
    let scaled = m.map(|x| x * z);
    let lhs = analytic_det(&scaled, tau)?;
    let z_pow = (z.ln() * tau.unit_trace(m.nrows())).exp();
    let rhs = z_pow * analytic_det(m, tau)?;
    Ok((lhs - rhs).norm())
}

/// |det_τ(A) − det_τ(U) det_τ(H)| for a normal A with polar parts
/// U = A H^{−1}, H = (A*A)^{1/2}; for normal A the polar parts share
/// eigenvectors with A, so their spectra are {λ/|λ|} and {|λ|}.
pub fn polar_factor_residual(m: &DMatrix<Cplx>, tau: TraceKind) -> Result<f64> {
    let eigs = matrix_eigenvalues(m)?;
    let branch = hull_branch(&eigs, HULL_REL_TOL)?;
    let u_eigs: Vec<Cplx> = eigs.iter().map(|l| l / l.norm()).collect();
    let u_branch = hull_branch(&u_eigs, HULL_REL_TOL)?;
    let c = tau.weight(m.nrows());
    let det_a = (sum_branch_logs(&eigs, branch.theta0) * c).exp();
    let det_u = (sum_branch_logs(&u_eigs, u_branch.theta0) * c).exp();
    let det_h: Cplx = (eigs.iter().map(|l| l.norm().ln()).sum::<f64>() * c).exp().into();
    Ok((det_a - det_u * det_h).norm())
}

/// A Haar-generic unitary: Q factor of a random complex matrix.
pub fn random_unitary(n: usize, rng: &mut impl Rng) -> DMatrix<Cplx> {
    let m = DMatrix::from_fn(n, n, |_, _| {
        Cplx::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    m.qr().q()
}

/// A random normal matrix with spectrum in the sector
/// {r e^{iφ}: r ∈ [0.5, 2], |φ| ≤ 1.2}, hence safely inside the
/// determinant's domain (the hull misses 0).
pub fn random_normal_in_domain(n: usize, rng: &mut impl Rng) -> DMatrix<Cplx> {
    let u = random_unitary(n, rng);
    let d = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            let r = rng.random_range(0.5..2.0);
            let phi = rng.random_range(-1.2..1.2);
            Cplx::new(0.0, phi).exp() * r
        } else {
            Cplx::new(0.0, 0.0)
        }
    });
    &u * d * u.adjoint()
}

/// Convergence controls for the operator-power series route.
#[derive(Clone, Copy, Debug)]
pub struct SeriesOptions {
    /// Absolute tolerance on the log-determinant tail.
    pub tol: f64,
    pub max_terms: usize,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_terms: 10_000 }
    }
}

/// Convergence controls for the Brillouin-zone trapezoid rule.
#[derive(Clone, Copy, Debug)]
pub struct QuadratureOptions {
    /// Relative tolerance on the determinant under grid doubling.
    pub tol: f64,
    /// Starting points per dimension.
    pub start_n: usize,
    /// Cap on points per dimension.
    pub max_n: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self { tol: 1e-10, start_n: 16, max_n: 4096 }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct EvalOptions {
    pub series: SeriesOptions,
    pub quadrature: QuadratureOptions,
}

/// Builds the complex perturbation kernel f(u) = A·u − Q·u².
fn perturbation_at(inst: &Instance, u: Cplx) -> Result<PeriodicKernel<Cplx>> {
    let a = inst.adjacency_kernel().to_complex();
    let q = inst.q_kernel().to_complex();
    a.scale(&u).sub(&q.scale(&(u * u)))
}

/// det_Γ(Δ(u)) by the operator-power series
/// exp(−Σ_{n=1}^{M} Tr_Γ(f(u)ⁿ)/n), f(u) = Au − Qu², for |u| < 1/α.
/// The truncation point is chosen so the geometric tail
/// τ(I)·‖f‖^{M+1}/((M+1)(1−‖f‖)) drops below `opts.tol`.
pub fn det_gamma_series(inst: &Instance, u: Cplx, opts: &SeriesOptions) -> Result<Cplx> {
    let alpha = inst.alpha();
    let bound = 1.0 / alpha;
    if u.norm() >= bound {
        return Err(Error::DomainError { modulus: u.norm(), bound, bound_name: "1/alpha" });
    }
    if u.norm() == 0.0 {
        return Ok(Cplx::new(1.0, 0.0));
    }
    let d = inst.max_degree() as f64;
    let f_norm = d * u.norm() + (d - 1.0).max(0.0) * u.norm_sqr();
    debug_assert!(f_norm < 1.0, "|u| < 1/alpha forces ‖f‖ < 1");
    let unit_trace = inst.quotient()?.vb as f64;

    let f = perturbation_at(inst, u)?;
    let mut power = f.clone();
    let mut log_sum = Cplx::new(0.0, 0.0);
    for n in 1..=opts.max_terms {
        let tr = inst.tr_gamma(&power)?;
        log_sum -= tr / n as f64;
        let tail = unit_trace * f_norm.powi(n as i32 + 1) / ((n as f64 + 1.0) * (1.0 - f_norm));
        if tail < opts.tol {
            return Ok(log_sum.exp());
        }
        power = power.compose(&f)?;
    }
    Err(Error::TruncationNotConverged { tol: opts.tol, max_terms: opts.max_terms })
}

/// det_Γ(Δ(u)) for a finite quotient via the dense spectrum: with a free
/// action, Tr_Γ = (|VB|/|VX|)·tr, so det_Γ = exp((|VB|/|VX|) Σ log λ).
pub fn det_gamma_eigen(inst: &Instance, u: Cplx) -> Result<Cplx> {
    let Instance::Finite { graph, .. } = inst else {
        return Err(Error::ActionMismatch);
    };
    let n = graph.vertex_count();
    let vb = inst.quotient()?.vb;
    let a = inst.adjacency_kernel().to_complex();
    let q = inst.q_kernel().to_complex();
    let delta = DMatrix::from_fn(n, n, |i, j| {
        let id = if i == j { Cplx::new(1.0, 0.0) } else { Cplx::new(0.0, 0.0) };
        id - a.entry(i, j, &[]) * u + q.entry(i, j, &[]) * u * u
    });
    analytic_det(&delta, TraceKind::Scaled(vb as f64 / n as f64))
}

/// The exact polynomial det(Δ(u)) ∈ ℚ[u] of a finite graph (full trace;
/// degree ≤ 2|VX|), as a truncated series that happens to terminate.
pub fn det_polynomial(inst: &Instance) -> Result<ExactSeries> {
    let Instance::Finite { graph, .. } = inst else {
        return Err(Error::ActionMismatch);
    };
    let order = 2 * graph.vertex_count();
    let a = inst.adjacency_kernel();
    let q = inst.q_kernel();
    let f = KernelSeries::perturbation(&a, &q, order);
    let mut log_series = ExactSeries::zero(order);
    let mut power = f.clone();
    for n in 1..=order {
        let traces: Vec<BigInt> = power
            .coeffs()
            .iter()
            .map(|k| k.trace_cell())
            .collect::<Result<_>>()?;
        let inv_n = Rat::new(BigInt::from(-1), BigInt::from(n as i64));
        let term = TruncatedSeries::from_coeffs(
            traces.iter().map(|t| Rat::new(t.clone(), 1.into()) * inv_n.clone()).collect(),
        );
        log_series = log_series.add(&term);
        if n < order {
            power = power.mul(&f)?;
        }
    }
    log_series.exp()
}

/// Tr_Γ log Δ(u) as an exact rational series:
/// −Σ_{n=1}^{order} Tr_Γ(f(u)ⁿ)/n with f(u) = Au − Qu².
pub fn log_det_series_exact(inst: &Instance, order: usize) -> Result<ExactSeries> {
    let a = inst.adjacency_kernel();
    let q = inst.q_kernel();
    let f = KernelSeries::perturbation(&a, &q, order);
    let mut log_series = ExactSeries::zero(order);
    let mut power = f.clone();
    for n in 1..=order {
        let traces = power.trace_series(inst)?;
        let inv_n = Rat::new(BigInt::from(-1), BigInt::from(n as i64));
        let term = TruncatedSeries::from_coeffs(
            traces.iter().map(|t| Rat::new(t.clone(), 1.into()) * inv_n.clone()).collect(),
        );
        log_series = log_series.add(&term);
        if n < order {
            power = power.mul(&f)?;
        }
    }
    Ok(log_series)
}

/// Method selector for [`det_gamma`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DetMethod {
    Auto,
    Series,
    Bloch,
    Eigen,
}

/// det_Γ(Δ(u)) by the requested route.
pub fn det_gamma(inst: &Instance, u: Cplx, method: DetMethod, opts: &EvalOptions) -> Result<Cplx> {
    match (method, inst) {
        (DetMethod::Series, _) => det_gamma_series(inst, u, &opts.series),
        (DetMethod::Eigen, _) => det_gamma_eigen(inst, u),
        (DetMethod::Bloch, Instance::Periodic { graph }) => {
            det_gamma_bloch(graph, u, &opts.quadrature)
        }
        (DetMethod::Bloch, Instance::Finite { .. }) => Err(Error::ActionMismatch),
        (DetMethod::Auto, Instance::Finite { .. }) => det_gamma_eigen(inst, u),
        (DetMethod::Auto, Instance::Periodic { graph }) => {
            if u.norm() < 0.95 / inst.alpha() {
                det_gamma_series(inst, u, &opts.series)
            } else {
                det_gamma_bloch(graph, u, &opts.quadrature)
            }
        }
    }
}

/// 1/Z(u) = (1 − u²)^{−χ(B)} det_Γ(Δ(u)) at a point.
pub fn determinant_formula_value(
    inst: &Instance,
    u: Cplx,
    method: DetMethod,
    opts: &EvalOptions,
) -> Result<Cplx> {
    let chi_b = inst.quotient()?.chi_b;
    let prefactor = (Cplx::new(1.0, 0.0) - u * u).powi(-chi_b as i32);
    Ok(prefactor * det_gamma(inst, u, method, opts)?)
}

/// 1/Z(u) as an exact rational series:
/// (1 − u²)^{−χ(B)} · exp(Tr_Γ log Δ(u)).
pub fn determinant_formula_series(inst: &Instance, order: usize) -> Result<ExactSeries> {
    let chi_b = inst.quotient()?.chi_b;
    let prefactor = binomial_one_minus_upow(2, -chi_b, 1, order)?;
    let det_series = log_det_series_exact(inst, order)?.exp()?;
    Ok(prefactor.mul(&det_series))
}

/// Bloch symbol of a ℤ^d-equivariant kernel: the |F|×|F| matrix
/// M(k) = Σ_v coef(·,·,v) e^{i k·v}.
#[derive(Clone, Debug)]
pub struct BlochSymbol {
    rank: usize,
    cell: usize,
    terms: Vec<(Vec<i64>, DMatrix<Cplx>)>,
}

impl BlochSymbol {
    pub fn from_kernel(k: &PeriodicKernel<Cplx>) -> Result<Self> {
        match k {
            PeriodicKernel::Finite(_) => Err(Error::ActionMismatch),
            PeriodicKernel::Periodic { rank, cell, .. } => {
                let mut terms = Vec::new();
                if let PeriodicKernel::Periodic { blocks, .. } = k {
                    for (v, b) in blocks {
                        terms.push((v.clone(), block_to_dmatrix(b)));
                    }
                }
                Ok(Self { rank: *rank, cell: *cell, terms })
            }
        }
    }

    pub fn eval(&self, k: &[f64]) -> DMatrix<Cplx> {
        debug_assert_eq!(k.len(), self.rank);
        let mut m = DMatrix::<Cplx>::zeros(self.cell, self.cell);
        for (v, b) in &self.terms {
            let phase: f64 = v.iter().zip(k).map(|(x, kk)| *x as f64 * kk).sum();
            m += b * Cplx::new(0.0, phase).exp();
        }
        m
    }
}

struct DeltaSymbol {
    a: BlochSymbol,
    q: BlochSymbol,
    rank: usize,
    cell: usize,
}

impl DeltaSymbol {
    fn new(pg: &PeriodicGraph) -> Result<Self> {
        let inst = Instance::periodic(pg.clone());
        let a = BlochSymbol::from_kernel(&inst.adjacency_kernel().to_complex())?;
        let q = BlochSymbol::from_kernel(&inst.q_kernel().to_complex())?;
        Ok(Self { a, q, rank: pg.rank(), cell: pg.cell_size() })
    }

    fn delta_at(&self, u: Cplx, k: &[f64]) -> DMatrix<Cplx> {
        let mut m = self.q.eval(k) * (u * u) - self.a.eval(k) * u;
        for i in 0..self.cell {
            m[(i, i)] += Cplx::new(1.0, 0.0);
        }
        m
    }

    /// Visits every grid point of the n-per-dimension Brillouin grid.
    fn for_grid(&self, n: usize, mut f: impl FnMut(&[f64]) -> Result<()>) -> Result<()> {
        let mut idx = vec![0usize; self.rank];
        let mut k = vec![0f64; self.rank];
        loop {
            for (kk, &i) in k.iter_mut().zip(&idx) {
                *kk = TAU * i as f64 / n as f64;
            }
            f(&k)?;
            let mut c = 0;
            loop {
                if c == self.rank {
                    break;
                }
                idx[c] += 1;
                if idx[c] < n {
                    break;
                }
                idx[c] = 0;
                c += 1;
            }
            if c == self.rank {
                break;
            }
        }
        Ok(())
    }
}

/// det_Γ(Δ(u)) by Brillouin-zone quadrature:
/// exp((2π)^{−d} ∫ tr log Δ(u, k) dk), trapezoid rule with grid doubling
/// until the value is stable, the log branch fixed by the convex hull of
/// the whole sampled symbol spectrum. Valid wherever that hull misses 0 —
/// in particular on all of Ω for regular lattices — which extends far
/// beyond the series region |u| < 1/α.
pub fn det_gamma_bloch(pg: &PeriodicGraph, u: Cplx, opts: &QuadratureOptions) -> Result<Cplx> {
    let sym = DeltaSymbol::new(pg)?;
    if sym.rank == 0 {
        // degenerate lattice: the cell is the whole graph
        let eigs = matrix_eigenvalues(&sym.delta_at(u, &[]))?;
        let branch = hull_branch(&eigs, HULL_REL_TOL).map_err(|e| match e {
            Error::HullContainsZero => Error::BranchObstruction,
            other => other,
        })?;
        return Ok(sum_branch_logs(&eigs, branch.theta0).exp());
    }

    // probe pass: fix the branch from the sampled family spectrum
    let probe_n = if sym.rank == 1 { 256 } else { 64 };
    let mut family: Vec<Cplx> = Vec::new();
    sym.for_grid(probe_n, |k| {
        family.extend(matrix_eigenvalues(&sym.delta_at(u, k))?);
        Ok(())
    })?;
    let branch = hull_branch(&family, HULL_REL_TOL).map_err(|e| match e {
        Error::HullContainsZero => Error::BranchObstruction,
        other => other,
    })?;
    let rot = Cplx::new(0.0, -branch.theta0).exp();

    let integrate = |n: usize| -> Result<Cplx> {
        let mut sum = Cplx::new(0.0, 0.0);
        sym.for_grid(n, |k| {
            let eigs = matrix_eigenvalues(&sym.delta_at(u, k))?;
            for l in &eigs {
                if (l * rot).re <= 0.0 {
                    return Err(Error::BranchObstruction);
                }
            }
            sum += sum_branch_logs(&eigs, branch.theta0);
            Ok(())
        })?;
        Ok(sum / (n as f64).powi(sym.rank as i32))
    };

    let mut n = opts.start_n.max(2);
    let mut prev = integrate(n)?.exp();
    while 2 * n <= opts.max_n {
        n *= 2;
        let cur = integrate(n)?.exp();
        if (cur - prev).norm() <= opts.tol * cur.norm().max(1.0) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::QuadratureNotConverged { tol: opts.tol, max_n: opts.max_n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::c6_mod_z3;
    use crate::graph::SimpleGraph;
    use crate::kernel::trace_ledger;
    use crate::series::zeta_series;
    use num_traits::{ToPrimitive, Zero};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn diag(entries: &[Cplx]) -> DMatrix<Cplx> {
        DMatrix::from_fn(entries.len(), entries.len(), |i, j| {
            if i == j { entries[i] } else { Cplx::new(0.0, 0.0) }
        })
    }

    fn c(re: f64, im: f64) -> Cplx {
        Cplx::new(re, im)
    }

    #[test]
    fn diag_one_i_has_eighth_root_determinant() {
        let m = diag(&[c(1.0, 0.0), c(0.0, 1.0)]);
        let d = analytic_det(&m, TraceKind::Normalized).unwrap();
        let expect = c(0.0, PI / 4.0).exp();
        assert!((d - expect).norm() < 1e-12);
    }

    #[test]
    fn positive_diagonal_matches_geometric_mean() {
        let m = diag(&[c(1.0, 0.0), c(4.0, 0.0)]);
        let d = analytic_det(&m, TraceKind::Normalized).unwrap();
        assert!((d - c(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn scalar_matrix_recovers_scalar() {
        let z = c(0.7, -0.4);
        let m = diag(&[z, z, z]);
        let d = analytic_det(&m, TraceKind::Normalized).unwrap();
        assert!((d - z).norm() < 1e-12);
    }

    #[test]
    fn hull_containing_zero_is_rejected() {
        // diag(1, i)² = diag(1, −1): the hull is the segment [−1, 1] ∋ 0,
        // which is how the product property fails
        let m = diag(&[c(1.0, 0.0), c(-1.0, 0.0)]);
        assert!(matches!(analytic_det(&m, TraceKind::Normalized), Err(Error::HullContainsZero)));
    }

    #[test]
    fn branch_choice_does_not_matter() {
        let m = diag(&[c(1.0, 0.2), c(0.3, 1.1), c(0.9, -0.4)]);
        let d1 = analytic_det_with_theta(&m, TraceKind::Normalized, 0.2).unwrap();
        let d2 = analytic_det_with_theta(&m, TraceKind::Normalized, 0.9).unwrap();
        assert!((d1 - d2).norm() < 1e-13);
        let inadmissible = analytic_det_with_theta(&m, TraceKind::Normalized, PI);
        assert!(matches!(inadmissible, Err(Error::BranchObstruction)));
    }

    #[test]
    fn scaling_property_examples() {
        let m = diag(&[c(1.0, 0.0), c(4.0, 0.0)]);
        assert!(scaling_residual(&m, c(2.0, 0.0), TraceKind::Normalized).unwrap() < 1e-12);
        let m = diag(&[c(1.0, 0.0), c(0.0, 1.0)]);
        let z = c(0.0, PI / 4.0).exp();
        assert!(scaling_residual(&m, z, TraceKind::Normalized).unwrap() < 1e-12);
    }

    #[test]
    fn scaling_property_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..20 {
            let n = rng.random_range(2..5);
            let m = random_normal_in_domain(n, &mut rng);
            let z = c(0.0, rng.random_range(-PI..PI)).exp() * rng.random_range(0.5..2.0);
            assert!(scaling_residual(&m, z, TraceKind::Normalized).unwrap() < 1e-12);
        }
    }

    #[test]
    fn polar_factorization_random_normals() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..10 {
            let n = rng.random_range(2..5);
            let m = random_normal_in_domain(n, &mut rng);
            assert!(polar_factor_residual(&m, TraceKind::Normalized).unwrap() < 1e-10);
        }
    }

    #[test]
    fn series_det_at_zero_is_one() {
        let inst = Instance::finite(SimpleGraph::complete(4));
        let d = det_gamma_series(&inst, c(0.0, 0.0), &SeriesOptions::default()).unwrap();
        assert_eq!(d, c(1.0, 0.0));
    }

    #[test]
    fn series_det_domain_checked() {
        let inst = Instance::finite(SimpleGraph::complete(4));
        let err = det_gamma_series(&inst, c(0.5, 0.0), &SeriesOptions::default()).unwrap_err();
        assert!(matches!(err, Error::DomainError { bound_name: "1/alpha", .. }));
    }

    #[test]
    fn line_lattice_det_is_one() {
        let pg = PeriodicGraph::hypercubic(1);
        let inst = Instance::periodic(pg.clone());
        for u in [c(0.1, 0.0), c(0.3, 0.0), c(0.3, 0.2)] {
            if u.norm() < 1.0 / inst.alpha() {
                let s = det_gamma_series(&inst, u, &SeriesOptions::default()).unwrap();
                assert!((s - c(1.0, 0.0)).norm() < 1e-10, "series at {u}");
            }
            let b = det_gamma_bloch(&pg, u, &QuadratureOptions::default()).unwrap();
            assert!((b - c(1.0, 0.0)).norm() < 1e-10, "bloch at {u}");
        }
    }

    #[test]
    fn k4_series_det_matches_polynomial() {
        let inst = Instance::finite(SimpleGraph::complete(4));
        let u = c(0.2, 0.0);
        let by_series = det_gamma_series(&inst, u, &SeriesOptions::default()).unwrap();
        let poly = det_polynomial(&inst).unwrap();
        let by_poly = poly.map(|r| c(r.to_f64().unwrap(), 0.0)).eval(&u);
        assert!((by_series - by_poly).norm() < 1e-12);
        let by_eigen = det_gamma_eigen(&inst, u).unwrap();
        assert!((by_eigen - by_poly).norm() < 1e-12);
    }

    #[test]
    fn k4_det_polynomial_is_the_known_factorization() {
        // det(Δ(u)) for K4 factors as (1−u)(1−2u)(1+u+2u²)³
        let inst = Instance::finite(SimpleGraph::complete(4));
        let poly = det_polynomial(&inst).unwrap();
        let order = poly.order();
        let lin = |a: i64, b: i64| {
            TruncatedSeries::from_coeffs(
                (0..=order)
                    .map(|m| match m {
                        0 => Rat::new(a.into(), 1.into()),
                        1 => Rat::new(b.into(), 1.into()),
                        _ => Rat::zero(),
                    })
                    .collect(),
            )
        };
        let quad = TruncatedSeries::from_coeffs(
            (0..=order)
                .map(|m| match m {
                    0 | 1 => Rat::new(1.into(), 1.into()),
                    2 => Rat::new(2.into(), 1.into()),
                    _ => Rat::zero(),
                })
                .collect(),
        );
        let expect = lin(1, -1).mul(&lin(1, -2)).mul(&quad).mul(&quad).mul(&quad);
        assert_eq!(poly, expect);
    }

    #[test]
    fn square_lattice_dual_methods_agree() {
        let pg = PeriodicGraph::hypercubic(2);
        let inst = Instance::periodic(pg.clone());
        for u in [c(0.1, 0.0), c(0.05, 0.08), c(-0.12, 0.03)] {
            let s = det_gamma_series(&inst, u, &SeriesOptions::default()).unwrap();
            let b = det_gamma_bloch(&pg, u, &QuadratureOptions::default()).unwrap();
            assert!((s - b).norm() < 1e-10, "u={u}: series {s} vs bloch {b}");
        }
    }

    #[test]
    fn square_lattice_extended_evaluation() {
        // u = 1.1 is far outside the series region |u| < 1/α ≈ 0.207 but
        // inside Ω for q = 3; the quadrature must stabilize
        let pg = PeriodicGraph::hypercubic(2);
        let v = det_gamma_bloch(&pg, c(1.1, 0.0), &QuadratureOptions::default()).unwrap();
        assert!(v.norm() > 0.0 && v.re.is_finite());
        // u = 0.9 lies on the excluded real segment [1/3, 1]: Δ(u, k) has a
        // vanishing eigenvalue, so no branch exists
        let err = det_gamma_bloch(&pg, c(0.9, 0.0), &QuadratureOptions::default()).unwrap_err();
        assert!(matches!(err, Error::BranchObstruction));
    }

    #[test]
    fn determinant_formula_series_line_lattice_is_one() {
        let inst = Instance::periodic(PeriodicGraph::hypercubic(1));
        let series = determinant_formula_series(&inst, 16).unwrap();
        assert_eq!(series, ExactSeries::one(16));
    }

    #[test]
    fn determinant_formula_series_matches_zeta_inverse() {
        for inst in [
            Instance::finite(SimpleGraph::complete(4)),
            c6_mod_z3(),
            Instance::periodic(PeriodicGraph::hypercubic(2)),
        ] {
            let order = 12;
            let ledger = trace_ledger(&inst, order).unwrap();
            let z = zeta_series(&ledger.n, order);
            let lhs = z.inverse().unwrap();
            let rhs = determinant_formula_series(&inst, order).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn square_lattice_value_matches_series_expansion() {
        let inst = Instance::periodic(PeriodicGraph::hypercubic(2));
        let u = c(0.05, 0.0);
        let order = 20;
        let ledger = trace_ledger(&inst, order).unwrap();
        let z = zeta_series(&ledger.n, order);
        let z_val = z.map(|r| c(r.to_f64().unwrap(), 0.0)).eval(&u);
        let one_over_z =
            determinant_formula_value(&inst, u, DetMethod::Series, &EvalOptions::default())
                .unwrap();
        assert!((one_over_z - 1.0 / z_val).norm() < 1e-9);
    }

    #[test]
    fn log_derivative_of_log_det_matches_b_traces() {
        // Tr_Γ(Σ B_m u^m) = −u d/du Tr_Γ log Δ(u), exactly per coefficient
        for inst in [Instance::finite(SimpleGraph::complete(4)), c6_mod_z3()] {
            let order = 10;
            let ledger = trace_ledger(&inst, order).unwrap();
            let log_det = log_det_series_exact(&inst, order).unwrap();
            let minus_u_dlog = log_derivative_times_u(&log_det).neg();
            for m in 1..=order {
                assert_eq!(
                    minus_u_dlog.coeff(m),
                    Rat::new(ledger.tr_b[m].clone(), 1.into()),
                    "m={m}"
                );
            }
        }
    }

    fn log_derivative_times_u(s: &ExactSeries) -> ExactSeries {
        let d = s.derivative();
        let mut coeffs = vec![Rat::zero(); s.order() + 1];
        for m in 0..=d.order() {
            if m + 1 <= s.order() {
                coeffs[m + 1] = d.coeff(m);
            }
        }
        TruncatedSeries::from_coeffs(coeffs)
    }

    #[test]
    fn trace_log_derivative_identity() {
        // −d/du Tr_Γ log(I − f(u)) = Tr_Γ(f'(u)(I − f(u))^{−1}), exactly
        for inst in [Instance::finite(SimpleGraph::complete(4)), Instance::periodic(PeriodicGraph::hypercubic(2))] {
            let order = 10;
            let a = inst.adjacency_kernel();
            let q = inst.q_kernel();
            let f = KernelSeries::perturbation(&a, &q, order);
            let lhs = log_det_series_exact(&inst, order).unwrap().derivative().neg();
            let inv = f.geometric_inverse_of_one_minus().unwrap();
            let prod = f.derivative().mul(&inv).unwrap();
            let rhs_traces = prod.trace_series(&inst).unwrap();
            for m in 0..lhs.order() {
                assert_eq!(lhs.coeff(m), Rat::new(rhs_traces[m].clone(), 1.into()), "m={m}");
            }
        }
    }

    #[test]
    fn c6_quotient_det_value_consistent() {
        // eigen route (cube root via scaled trace) against the series route
        let inst = c6_mod_z3();
        let u = c(0.15, 0.1);
        let by_eigen = det_gamma_eigen(&inst, u).unwrap();
        let by_series = det_gamma_series(&inst, u, &SeriesOptions::default()).unwrap();
        assert!((by_eigen - by_series).norm() < 1e-11);
    }
}
