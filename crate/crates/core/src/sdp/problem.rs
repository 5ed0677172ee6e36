use crate::dissipativity::SupplyRate;
use crate::error::{Error, Result};
use crate::linalg::{max_eig_sym, Matrix, SymMatrix};
use crate::scalar::Scalar;

/// `AᵀP + PA + 2λP + εI ⪯ 0`.
#[derive(Debug, Clone)]
pub struct LyapunovConstraint<T> {
    pub a: Matrix<T>,
    pub lambda: T,
    pub epsilon: T,
}

/// Dissipation inequality of `(A, B, C, D)` against a supply rate, as a
/// bordered LMI in `P` over `(δx, δu)`.
#[derive(Debug, Clone)]
pub struct BorderedConstraint<T> {
    pub a: Matrix<T>,
    pub b: Matrix<T>,
    pub c: Matrix<T>,
    pub d: Matrix<T>,
    pub supply: SupplyRate<T>,
    pub lambda: T,
    pub epsilon: T,
}

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum Constraint<T> {
    Lyapunov(LyapunovConstraint<T>),
    Bordered(BorderedConstraint<T>),
}

/// Affine equality `⟨coeff, P⟩ = rhs` (Frobenius inner product).
#[derive(Debug, Clone)]
pub struct Equality<T> {
    pub coeff: SymMatrix<T>,
    pub rhs: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Feasibility,
    MaximizeMargin,
}

#[derive(Debug, Clone)]
pub struct SdpProblem<T> {
    pub n: usize,
    pub constraints: Vec<Constraint<T>>,
    pub equalities: Vec<Equality<T>>,
    pub norm_bound: T,
    pub objective: Objective,
}

pub const DEFAULT_NORM_BOUND: f64 = 10.0;

impl<T: Scalar> LyapunovConstraint<T> {
    pub fn new(a: Matrix<T>, lambda: T, epsilon: T) -> Self {
        Self { a, lambda, epsilon }
    }

    pub fn residual(&self, p: &SymMatrix<T>) -> SymMatrix<T> {
        let pa = p.as_matrix().matmul(&self.a);
        let m = pa
            .transpose()
            .add(&pa)
            .add(&p.as_matrix().scale(T::lit(2.0) * self.lambda))
            .add_identity(self.epsilon);
        SymMatrix::from_symmetric_part(&m)
    }
}

impl<T: Scalar> BorderedConstraint<T> {
    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn m_u(&self) -> usize {
        self.b.cols()
    }

    /// Input-input block `−DᵀQD − LᵀD − DᵀL − R`, independent of `P`.
    pub fn input_block(&self) -> SymMatrix<T> {
        let q = self.supply.q.as_matrix();
        let l = &self.supply.l;
        let dt = self.d.transpose();
        let ld = l.transpose().matmul(&self.d);
        let m = dt
            .matmul(q)
            .matmul(&self.d)
            .add(&ld)
            .add(&ld.transpose())
            .add(self.supply.r.as_matrix())
            .neg();
        SymMatrix::from_symmetric_part(&m)
    }

    /// State-input block `PB − CᵀL − CᵀQD`.
    pub fn coupling_block(&self, p: &SymMatrix<T>) -> Matrix<T> {
        let ct = self.c.transpose();
        p.as_matrix()
            .matmul(&self.b)
            .sub(&ct.matmul(&self.supply.l))
            .sub(&ct.matmul(self.supply.q.as_matrix()).matmul(&self.d))
    }

    /// Constant part `CᵀL + CᵀQD` of the coupling block.
    pub(crate) fn coupling_offset(&self) -> Matrix<T> {
        let ct = self.c.transpose();
        ct.matmul(&self.supply.l)
            .add(&ct.matmul(self.supply.q.as_matrix()).matmul(&self.d))
    }

    pub fn state_block(&self, p: &SymMatrix<T>) -> SymMatrix<T> {
        let pa = p.as_matrix().matmul(&self.a);
        let ctqc = self.c.transpose().matmul(self.supply.q.as_matrix()).matmul(&self.c);
        let m = pa
            .transpose()
            .add(&pa)
            .add(&p.as_matrix().scale(T::lit(2.0) * self.lambda))
            .sub(&ctqc)
            .add_identity(self.epsilon);
        SymMatrix::from_symmetric_part(&m)
    }

    pub fn residual(&self, p: &SymMatrix<T>) -> SymMatrix<T> {
        let tl = self.state_block(p).into_matrix();
        let tr = self.coupling_block(p);
        let br = self.input_block().into_matrix();
        SymMatrix::from_symmetric_part(&Matrix::from_blocks(&tl, &tr, &tr.transpose(), &br))
    }

    fn check_dims(&self, n: usize) -> Result<()> {
        let (my, mu) = (self.supply.m_y(), self.supply.m_u());
        let ok = self.a.rows() == n
            && self.a.cols() == n
            && self.b.rows() == n
            && self.b.cols() == mu
            && self.c.rows() == my
            && self.c.cols() == n
            && self.d.rows() == my
            && self.d.cols() == mu;
        if ok {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "bordered constraint blocks A {}x{}, B {}x{}, C {}x{}, D {}x{} do not fit n={n}, m_y={my}, m_u={mu}",
                self.a.rows(),
                self.a.cols(),
                self.b.rows(),
                self.b.cols(),
                self.c.rows(),
                self.c.cols(),
                self.d.rows(),
                self.d.cols()
            )))
        }
    }
}

impl<T: Scalar> Constraint<T> {
    pub fn residual(&self, p: &SymMatrix<T>) -> SymMatrix<T> {
        match self {
            Constraint::Lyapunov(c) => c.residual(p),
            Constraint::Bordered(c) => c.residual(p),
        }
    }

    pub fn lambda(&self) -> T {
        match self {
            Constraint::Lyapunov(c) => c.lambda,
            Constraint::Bordered(c) => c.lambda,
        }
    }

    pub fn epsilon(&self) -> T {
        match self {
            Constraint::Lyapunov(c) => c.epsilon,
            Constraint::Bordered(c) => c.epsilon,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if !(self.lambda() >= T::zero()) || !(self.epsilon() >= T::zero()) {
            return Err(Error::InvalidInput(format!(
                "rate and strictness must be nonnegative (lambda={}, epsilon={})",
                self.lambda(),
                self.epsilon()
            )));
        }
        match self {
            Constraint::Lyapunov(c) => {
                if c.a.rows() != n || c.a.cols() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "Lyapunov constraint has {}x{} matrix, expected {n}x{n}",
                        c.a.rows(),
                        c.a.cols()
                    )));
                }
                if !c.a.is_finite() {
                    return Err(Error::InvalidInput("non-finite constraint matrix".into()));
                }
                Ok(())
            }
            Constraint::Bordered(c) => c.check_dims(n),
        }
    }
}

impl<T: Scalar> Equality<T> {
    /// Pins the entry `P[i][j]` (and its mirror) to `value`.
    pub fn entry(n: usize, i: usize, j: usize, value: T) -> Self {
        let mut m = Matrix::zeros(n, n);
        if i == j {
            m[(i, i)] = T::one();
        } else {
            m[(i, j)] = T::lit(0.5);
            m[(j, i)] = T::lit(0.5);
        }
        Self {
            coeff: SymMatrix::from_symmetric_part(&m),
            rhs: value,
        }
    }

    /// `tr(P) = value`.
    pub fn trace(n: usize, value: T) -> Self {
        Self {
            coeff: SymMatrix::identity(n),
            rhs: value,
        }
    }

    pub fn violation(&self, p: &SymMatrix<T>) -> T {
        (self.coeff.as_matrix().frob_dot(p.as_matrix()) - self.rhs).abs()
    }
}

impl<T: Scalar> SdpProblem<T> {
    pub fn new(n: usize, constraints: Vec<Constraint<T>>) -> Self {
        Self {
            n,
            constraints,
            equalities: Vec::new(),
            norm_bound: T::lit(DEFAULT_NORM_BOUND),
            objective: Objective::Feasibility,
        }
    }

    /// One Lyapunov constraint per matrix, sharing rate and strictness.
    pub fn lyapunov(vertices: &[Matrix<T>], lambda: T, epsilon: T) -> Self {
        let n = vertices.first().map_or(0, |a| a.rows());
        let constraints = vertices
            .iter()
            .map(|a| Constraint::Lyapunov(LyapunovConstraint::new(a.clone(), lambda, epsilon)))
            .collect();
        Self::new(n, constraints)
    }

    pub fn with_equalities(mut self, equalities: Vec<Equality<T>>) -> Self {
        self.equalities = equalities;
        self
    }

    pub fn with_norm_bound(mut self, bound: T) -> Self {
        self.norm_bound = bound;
        self
    }

    pub fn with_objective(mut self, objective: Objective) -> Self {
        self.objective = objective;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidInput("SDP dimension must be positive".into()));
        }
        if self.constraints.is_empty() {
            return Err(Error::InvalidInput("SDP needs at least one constraint".into()));
        }
        if !(self.norm_bound > T::zero()) || !self.norm_bound.is_finite() {
            return Err(Error::InvalidInput(format!(
                "norm_bound must be finite and positive, got {}",
                self.norm_bound
            )));
        }
        for c in &self.constraints {
            c.validate(self.n)?;
        }
        for e in &self.equalities {
            if e.coeff.n() != self.n {
                return Err(Error::DimensionMismatch(format!(
                    "equality coefficient is {}x{}, expected {}x{}",
                    e.coeff.n(),
                    e.coeff.n(),
                    self.n,
                    self.n
                )));
            }
        }
        Ok(())
    }
}

/// Largest eigenvalue of each constraint's residual matrix at `p`.
pub fn verify_solution<T: Scalar>(p: &SymMatrix<T>, problem: &SdpProblem<T>) -> Result<Vec<T>> {
    if p.n() != problem.n {
        return Err(Error::DimensionMismatch(format!(
            "P is {}x{}, problem expects {}x{}",
            p.n(),
            p.n(),
            problem.n,
            problem.n
        )));
    }
    problem.validate()?;
    problem
        .constraints
        .iter()
        .map(|c| max_eig_sym(&c.residual(p)))
        .collect()
}
