use super::problem::{Constraint, Equality, Objective, SdpProblem};
use crate::error::Result;
use crate::linalg::{max_eig_sym, spectral_norm_sym, sym_eigen, Cholesky, Matrix, SymMatrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct SdpSettings<T> {
    /// Absolute residual tolerance, multiplied by `1 + norm_bound`.
    pub residual_tol: T,
    /// Stop once the barrier duality gap bound `m/τ` falls below this.
    pub gap_tol: T,
    pub max_newton_iterations: usize,
    pub max_outer_iterations: usize,
    pub barrier_growth: T,
    /// Starting point for the interior path; ignored if not strictly inside the box.
    pub warm_start: Option<SymMatrix<T>>,
}

impl<T: Scalar> Default for SdpSettings<T> {
    fn default() -> Self {
        let eps = T::epsilon();
        Self {
            residual_tol: T::lit(1e-7).max(eps * T::lit(100.0)),
            gap_tol: T::lit(1e-9).max(eps * T::lit(1e3)),
            max_newton_iterations: 2000,
            max_outer_iterations: 40,
            barrier_growth: T::lit(10.0),
            warm_start: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Feasible,
    Infeasible,
    NumericFailure,
}

#[derive(Debug, Clone)]
pub struct SolverStats<T> {
    pub newton_iterations: usize,
    pub outer_iterations: usize,
    /// Best uniform shift `t` reached (constraints hold as `G(P) ⪯ −tI`).
    pub shift: T,
    pub gap_bound: T,
    /// Largest eigenvalue of each original constraint residual at the returned `P`.
    pub residuals: Vec<T>,
    pub equality_violation: T,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct SdpResult<T> {
    pub status: SdpStatus,
    pub p: Option<SymMatrix<T>>,
    /// Largest uniform strictness `ε + t*` (MaximizeMargin only).
    pub margin: Option<T>,
    pub stats: SolverStats<T>,
}

impl<T: Scalar> SdpResult<T> {
    pub fn is_feasible(&self) -> bool {
        self.status == SdpStatus::Feasible
    }
}

/// Coordinates of symmetric matrices in the Frobenius-orthonormal basis
/// `E_ii`, `(E_ij + E_ji)/√2`.
struct SymBasis {
    n: usize,
    pairs: Vec<(usize, usize)>,
}

impl SymBasis {
    fn new(n: usize) -> Self {
        let pairs = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
        Self { n, pairs }
    }

    fn dim(&self) -> usize {
        self.pairs.len()
    }

    fn coords<T: Scalar>(&self, m: &Matrix<T>) -> Vec<T> {
        let r2 = T::lit(std::f64::consts::SQRT_2);
        self.pairs
            .iter()
            .map(|&(i, j)| {
                if i == j {
                    m[(i, i)]
                } else {
                    (m[(i, j)] + m[(j, i)]) / r2
                }
            })
            .collect()
    }

    fn matrix<T: Scalar>(&self, v: &[T]) -> SymMatrix<T> {
        let r2 = T::lit(std::f64::consts::SQRT_2);
        let mut m = Matrix::zeros(self.n, self.n);
        for (&(i, j), &x) in self.pairs.iter().zip(v) {
            if i == j {
                m[(i, i)] = x;
            } else {
                m[(i, j)] = x / r2;
                m[(j, i)] = x / r2;
            }
        }
        SymMatrix::from_symmetric_part(&m)
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

fn axpy<T: Scalar>(y: &mut [T], a: T, x: &[T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// `P = P0 + Σ z_j E_j` spanning the affine set cut out by the equalities.
struct AffineParam<T> {
    p0: Vec<T>,
    basis: Vec<Vec<T>>,
}

enum ParamOutcome<T> {
    Ok(AffineParam<T>),
    Inconsistent(String),
}

fn affine_parametrization<T: Scalar>(sb: &SymBasis, equalities: &[Equality<T>]) -> ParamOutcome<T> {
    let d = sb.dim();
    let mut rows: Vec<Vec<T>> = Vec::new();
    let mut rhs: Vec<T> = Vec::new();
    for (k, eq) in equalities.iter().enumerate() {
        let mut a = sb.coords(eq.coeff.as_matrix());
        let mut b = eq.rhs;
        let scale = dot(&a, &a).sqrt();
        if scale == T::zero() {
            if b.abs() > T::lit(1e-9) * (T::one() + b.abs()) {
                return ParamOutcome::Inconsistent(format!("equality {k} has zero coefficients but rhs {b}"));
            }
            continue;
        }
        for _ in 0..2 {
            for (q, &beta) in rows.iter().zip(&rhs) {
                let c = dot(&a, q);
                axpy(&mut a, -c, q);
                b -= c * beta;
            }
        }
        let nrm = dot(&a, &a).sqrt();
        if nrm <= T::lit(1e-9) * scale {
            if b.abs() > T::lit(1e-7) * (T::one() + eq.rhs.abs()) * scale.max(T::one()) {
                return ParamOutcome::Inconsistent(format!(
                    "equality {k} contradicts earlier equalities (residual {b})"
                ));
            }
            continue;
        }
        rows.push(a.iter().map(|&x| x / nrm).collect());
        rhs.push(b / nrm);
    }

    let mut p0 = vec![T::zero(); d];
    for (q, &beta) in rows.iter().zip(&rhs) {
        axpy(&mut p0, beta, q);
    }

    let mut basis: Vec<Vec<T>> = Vec::new();
    for k in 0..d {
        if rows.len() + basis.len() == d {
            break;
        }
        let mut e = vec![T::zero(); d];
        e[k] = T::one();
        for _ in 0..2 {
            for q in rows.iter().chain(basis.iter()) {
                let c = dot(&e, q);
                axpy(&mut e, -c, q);
            }
        }
        let nrm = dot(&e, &e).sqrt();
        if nrm > T::lit(1e-6) {
            basis.push(e.iter().map(|&x| x / nrm).collect());
        }
    }
    ParamOutcome::Ok(AffineParam { p0, basis })
}

/// Affine symmetric block `C + Σ z_j D_j (+ t I)` that must stay negative definite.
struct Block<T> {
    c: Matrix<T>,
    d: Vec<Matrix<T>>,
    shifted: bool,
}

impl<T: Scalar> Block<T> {
    fn dim(&self) -> usize {
        self.c.rows()
    }

    fn value(&self, z: &[T], t: T) -> Matrix<T> {
        let mut m = self.c.clone();
        for (dj, &zj) in self.d.iter().zip(z) {
            if zj != T::zero() {
                m = m.add(&dj.scale(zj));
            }
        }
        if self.shifted {
            m = m.add_identity(t);
        }
        m
    }
}

type BlockMap<T> = Box<dyn Fn(&SymMatrix<T>) -> Matrix<T>>;

/// Reduced form of a constraint: the linear map it applies to `P` plus the
/// equalities implied by singular directions of a constant input block.
struct Reduced<T> {
    map: BlockMap<T>,
}

fn reduce_constraint<T: Scalar>(c: &Constraint<T>, n: usize, implied: &mut Vec<Equality<T>>) -> Result<Reduced<T>> {
    match c {
        Constraint::Lyapunov(lc) => {
            let lc = lc.clone();
            Ok(Reduced {
                map: Box::new(move |p| lc.residual(p).into_matrix()),
            })
        }
        Constraint::Bordered(bc) => {
            let s = bc.input_block();
            let eig = sym_eigen(&s)?;
            let smax = eig.values.iter().fold(T::zero(), |a, v| a.max(v.abs()));
            let null_tol = T::lit(1e-10) * (T::one() + smax);
            let m = bc.m_u();
            let offset = bc.coupling_offset();
            let mut kept = Vec::new();
            for k in 0..m {
                let u: Vec<T> = (0..m).map(|i| eig.vectors[(i, k)]).collect();
                if eig.values[k].abs() <= null_tol {
                    let w = bc.b.matvec(&u);
                    let target = offset.matvec(&u);
                    for i in 0..n {
                        let mut coeff = Matrix::zeros(n, n);
                        for j in 0..n {
                            coeff[(i, j)] += w[j] * T::lit(0.5);
                            coeff[(j, i)] += w[j] * T::lit(0.5);
                        }
                        implied.push(Equality {
                            coeff: SymMatrix::from_symmetric_part(&coeff),
                            rhs: target[i],
                        });
                    }
                } else {
                    kept.push(k);
                }
            }
            let r = kept.len();
            let mut rot = Matrix::zeros(n + m, n + r);
            for i in 0..n {
                rot[(i, i)] = T::one();
            }
            for (col, &k) in kept.iter().enumerate() {
                for i in 0..m {
                    rot[(n + i, n + col)] = eig.vectors[(i, k)];
                }
            }
            let bc = bc.clone();
            Ok(Reduced {
                map: Box::new(move |p| bc.residual(p).congruence(&rot).into_matrix()),
            })
        }
    }
}

struct Barrier<T> {
    blocks: Vec<Block<T>>,
    nz: usize,
}

struct Local<T> {
    f: T,
    grad: Vec<T>,
    hess: Matrix<T>,
}

impl<T: Scalar> Barrier<T> {
    fn nvars(&self) -> usize {
        self.nz + 1
    }

    fn weight(&self) -> T {
        T::lit(self.blocks.iter().map(|b| b.dim()).sum::<usize>() as f64)
    }

    /// `-τ t - Σ log det(-G_b)`, or `None` outside the domain.
    fn value(&self, x: &[T], tau: T) -> Option<T> {
        let (z, t) = (&x[..self.nz], x[self.nz]);
        let mut f = -tau * t;
        for b in &self.blocks {
            let s = b.value(z, t).neg();
            let ch = Cholesky::new(&s).ok()?;
            f -= ch.log_det();
        }
        f.is_finite().then_some(f)
    }

    fn local(&self, x: &[T], tau: T) -> Option<Local<T>> {
        let nv = self.nvars();
        let (z, t) = (&x[..self.nz], x[self.nz]);
        let mut f = -tau * t;
        let mut grad = vec![T::zero(); nv];
        grad[self.nz] = -tau;
        let mut hess = Matrix::zeros(nv, nv);
        for b in &self.blocks {
            let s = b.value(z, t).neg();
            let ch = Cholesky::new(&s).ok()?;
            f -= ch.log_det();
            let w = ch.inverse();
            let mut ms: Vec<Option<Matrix<T>>> = b.d.iter().map(|d| Some(w.matmul(d))).collect();
            ms.push(if b.shifted { Some(w.clone()) } else { None });
            for (v, mv) in ms.iter().enumerate() {
                let Some(mv) = mv else { continue };
                grad[v] += mv.trace();
                for (u, mu) in ms.iter().enumerate().skip(v) {
                    let Some(mu) = mu else { continue };
                    let h = trace_of_product(mv, mu);
                    hess[(v, u)] += h;
                    if u != v {
                        hess[(u, v)] += h;
                    }
                }
            }
        }
        Some(Local { f, grad, hess })
    }
}

fn trace_of_product<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> T {
    let n = a.rows();
    let mut s = T::zero();
    for i in 0..n {
        for k in 0..n {
            s += a[(i, k)] * b[(k, i)];
        }
    }
    s
}

fn newton_direction<T: Scalar>(hess: &Matrix<T>, grad: &[T]) -> Option<Vec<T>> {
    let neg: Vec<T> = grad.iter().map(|&g| -g).collect();
    let mut reg = T::zero();
    let scale = hess.max_abs().max(T::one());
    for _ in 0..8 {
        let h = hess.add_identity(reg);
        if let Ok(ch) = Cholesky::new(&h) {
            return Some(ch.solve_vec(&neg));
        }
        reg = if reg == T::zero() {
            scale * T::lit(1e-12)
        } else {
            reg * T::lit(100.0)
        };
    }
    None
}

enum PathEnd<T> {
    Done(Vec<T>),
    CertifiedInfeasible(Vec<T>),
    Failure(Vec<T>, String),
}

/// Solves the problem by a primal log-barrier path-following method in the
/// affine coordinates of `P` plus a uniform shift variable `t`.
pub fn solve<T: Scalar>(problem: &SdpProblem<T>, settings: &SdpSettings<T>) -> Result<SdpResult<T>> {
    problem.validate()?;
    let n = problem.n;
    let nb = problem.norm_bound;
    let sb = SymBasis::new(n);
    let abs_tol = settings.residual_tol * (T::one() + nb);

    let mut equalities = problem.equalities.clone();
    let mut reduced = Vec::with_capacity(problem.constraints.len());
    for c in &problem.constraints {
        reduced.push(reduce_constraint(c, n, &mut equalities)?);
    }

    let param = match affine_parametrization(&sb, &equalities) {
        ParamOutcome::Ok(p) => p,
        ParamOutcome::Inconsistent(msg) => {
            return Ok(infeasible_result(problem, None, T::neg_infinity(), msg));
        }
    };
    let p0 = sb.matrix(&param.p0);
    let e_mats: Vec<SymMatrix<T>> = param.basis.iter().map(|e| sb.matrix(e)).collect();
    if spectral_norm_sym(&p0)? >= nb {
        return Ok(infeasible_result(
            problem,
            Some(p0),
            T::neg_infinity(),
            "equalities force P outside the norm bound".into(),
        ));
    }

    let zero = SymMatrix::zeros(n);
    let mut blocks = Vec::with_capacity(reduced.len() + 2);
    for red in &reduced {
        let at_zero = (red.map)(&zero);
        let c = (red.map)(&p0);
        let d = e_mats.iter().map(|e| (red.map)(e).sub(&at_zero)).collect();
        blocks.push(Block { c, d, shifted: true });
    }
    let nbi = Matrix::identity(n).scale(nb);
    blocks.push(Block {
        c: p0.as_matrix().sub(&nbi),
        d: e_mats.iter().map(|e| e.as_matrix().clone()).collect(),
        shifted: false,
    });
    blocks.push(Block {
        c: p0.as_matrix().neg().sub(&nbi),
        d: e_mats.iter().map(|e| e.as_matrix().neg()).collect(),
        shifted: false,
    });
    let barrier = Barrier {
        blocks,
        nz: e_mats.len(),
    };

    let mut z0 = vec![T::zero(); barrier.nz];
    if let Some(ws) = &settings.warm_start {
        if ws.n() == n {
            let delta: Vec<T> = sb
                .coords(ws.as_matrix())
                .iter()
                .zip(&param.p0)
                .map(|(&a, &b)| a - b)
                .collect();
            let zw: Vec<T> = param.basis.iter().map(|e| dot(e, &delta)).collect();
            let inside = barrier.blocks[reduced.len()..]
                .iter()
                .all(|b| Cholesky::new(&b.value(&zw, T::zero()).neg()).is_ok());
            if inside {
                z0 = zw;
            }
        }
    }
    let mut worst = T::neg_infinity();
    for b in &barrier.blocks[..reduced.len()] {
        let g = SymMatrix::from_symmetric_part(&b.value(&z0, T::zero()));
        worst = worst.max(max_eig_sym(&g)?);
    }
    let mut x = z0;
    x.push(-worst - T::one());

    let m = barrier.weight();
    let mut stats = SolverStats {
        newton_iterations: 0,
        outer_iterations: 0,
        shift: x[barrier.nz],
        gap_bound: T::infinity(),
        residuals: Vec::new(),
        equality_violation: T::zero(),
        message: String::new(),
    };
    let feasibility = problem.objective == Objective::Feasibility;
    let end = follow_path(&barrier, x, m, feasibility, abs_tol, settings, &mut stats);

    let (x, status_hint) = match end {
        PathEnd::Done(x) => (x, None),
        PathEnd::CertifiedInfeasible(x) => (x, Some(SdpStatus::Infeasible)),
        PathEnd::Failure(x, msg) => {
            stats.message = msg;
            (x, Some(SdpStatus::NumericFailure))
        }
    };
    let t = x[barrier.nz];
    stats.shift = t;
    let mut coords = param.p0.clone();
    for (e, &zj) in param.basis.iter().zip(&x[..barrier.nz]) {
        axpy(&mut coords, zj, e);
    }
    let p = sb.matrix(&coords);
    stats.residuals = super::verify_solution(&p, problem)?;
    stats.equality_violation = equalities.iter().map(|e| e.violation(&p)).fold(T::zero(), T::max);
    let worst_res = stats.residuals.iter().fold(T::neg_infinity(), |a, &b| a.max(b));

    let verified = worst_res <= abs_tol && stats.equality_violation <= abs_tol;
    let status = match status_hint {
        Some(SdpStatus::Infeasible) => SdpStatus::Infeasible,
        _ if t < -abs_tol => SdpStatus::Infeasible,
        _ if verified => SdpStatus::Feasible,
        Some(s) => s,
        None => {
            stats.message = format!(
                "solution failed verification (worst residual {worst_res}, equality violation {})",
                stats.equality_violation
            );
            SdpStatus::NumericFailure
        }
    };
    let min_eps = problem
        .constraints
        .iter()
        .map(|c| c.epsilon())
        .fold(T::infinity(), T::min);
    let margin = (problem.objective == Objective::MaximizeMargin).then_some(min_eps + t);
    Ok(SdpResult {
        status,
        p: Some(p),
        margin,
        stats,
    })
}

fn infeasible_result<T: Scalar>(
    problem: &SdpProblem<T>,
    p: Option<SymMatrix<T>>,
    shift: T,
    message: String,
) -> SdpResult<T> {
    SdpResult {
        status: SdpStatus::Infeasible,
        p,
        margin: (problem.objective == Objective::MaximizeMargin).then_some(shift),
        stats: SolverStats {
            newton_iterations: 0,
            outer_iterations: 0,
            shift,
            gap_bound: T::infinity(),
            residuals: Vec::new(),
            equality_violation: T::zero(),
            message,
        },
    }
}

fn follow_path<T: Scalar>(
    barrier: &Barrier<T>,
    mut x: Vec<T>,
    m: T,
    feasibility: bool,
    abs_tol: T,
    settings: &SdpSettings<T>,
    stats: &mut SolverStats<T>,
) -> PathEnd<T> {
    let nz = barrier.nz;
    let centering_tol = T::lit(1e-10).max(T::epsilon() * T::lit(1e3));
    let armijo = T::lit(0.25);
    let mut tau = m / (T::one() + x[nz].abs());
    for outer in 0..settings.max_outer_iterations {
        stats.outer_iterations = outer + 1;
        loop {
            if stats.newton_iterations >= settings.max_newton_iterations {
                return PathEnd::Failure(x, "Newton iteration cap reached".into());
            }
            let Some(loc) = barrier.local(&x, tau) else {
                return PathEnd::Failure(x, "iterate left the barrier domain".into());
            };
            let Some(dx) = newton_direction(&loc.hess, &loc.grad) else {
                return PathEnd::Failure(x, "singular barrier Hessian".into());
            };
            stats.newton_iterations += 1;
            let slope = dot(&loc.grad, &dx);
            if -slope / T::lit(2.0) <= centering_tol {
                break;
            }
            let mut alpha = T::one();
            let mut accepted = None;
            while alpha > T::lit(1e-14) {
                let trial: Vec<T> = x.iter().zip(&dx).map(|(&a, &d)| a + alpha * d).collect();
                if let Some(f) = barrier.value(&trial, tau) {
                    if f <= loc.f + armijo * alpha * slope {
                        accepted = Some(trial);
                        break;
                    }
                }
                alpha *= T::lit(0.5);
            }
            match accepted {
                Some(next) => x = next,
                None => break,
            }
            if feasibility && x[nz] > T::zero() {
                stats.gap_bound = m / tau;
                return PathEnd::Done(x);
            }
        }
        stats.gap_bound = m / tau;
        if x[nz] + m / tau < -abs_tol {
            return PathEnd::CertifiedInfeasible(x);
        }
        if m / tau <= settings.gap_tol {
            return PathEnd::Done(x);
        }
        tau *= settings.barrier_growth;
    }
    PathEnd::Done(x)
}
