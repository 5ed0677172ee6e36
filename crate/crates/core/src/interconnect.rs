//! Interconnection of dissipative subsystems through a static matrix `u = Hy + v`.

use crate::dissipativity::{gain_supply, scale_supply, DissipativityCertificate, OpenVertexFamily, SupplyRate};
use crate::dominance::{storage_inertia, DominanceCertificate, VertexFamily};
use crate::error::{Error, Result};
use crate::linalg::{inverse, max_eig_sym, Matrix, SymMatrix};
use crate::scalar::Scalar;
use crate::sdp::{verify_solution, SdpProblem};

/// Subsystem supplies together with the interconnection matrix.
#[derive(Debug, Clone)]
pub struct InterconnectionSpec<T> {
    supplies: Vec<SupplyRate<T>>,
    h: Matrix<T>,
    input_offsets: Vec<usize>,
    output_offsets: Vec<usize>,
}

impl<T: Scalar> InterconnectionSpec<T> {
    pub fn new(supplies: Vec<SupplyRate<T>>, h: Matrix<T>) -> Result<Self> {
        if supplies.is_empty() {
            return Err(Error::InvalidInput(
                "interconnection needs at least one subsystem".into(),
            ));
        }
        let offsets = |f: &dyn Fn(&SupplyRate<T>) -> usize| {
            let mut acc = vec![0];
            for s in &supplies {
                acc.push(acc.last().unwrap() + f(s));
            }
            acc
        };
        let input_offsets = offsets(&|s| s.m_u());
        let output_offsets = offsets(&|s| s.m_y());
        let (mu, my) = (*input_offsets.last().unwrap(), *output_offsets.last().unwrap());
        if h.rows() != mu || h.cols() != my {
            return Err(Error::DimensionMismatch(format!(
                "H is {}x{}, expected {mu}x{my} (total inputs x total outputs)",
                h.rows(),
                h.cols()
            )));
        }
        if !h.is_finite() {
            return Err(Error::InvalidInput("H has non-finite entries".into()));
        }
        Ok(Self {
            supplies,
            h,
            input_offsets,
            output_offsets,
        })
    }

    pub fn supplies(&self) -> &[SupplyRate<T>] {
        &self.supplies
    }

    pub fn h(&self) -> &Matrix<T> {
        &self.h
    }

    /// Block boundaries of the stacked input vector.
    pub fn input_offsets(&self) -> &[usize] {
        &self.input_offsets
    }

    /// Block boundaries of the stacked output vector.
    pub fn output_offsets(&self) -> &[usize] {
        &self.output_offsets
    }

    /// Block-diagonal aggregate `(Q̄, L̄, R̄)`.
    pub fn aggregate(&self) -> SupplyRate<T> {
        let qs: Vec<_> = self.supplies.iter().map(|s| &s.q).collect();
        let ls: Vec<_> = self.supplies.iter().map(|s| &s.l).collect();
        let rs: Vec<_> = self.supplies.iter().map(|s| &s.r).collect();
        SupplyRate {
            q: SymMatrix::block_diag(&qs),
            l: Matrix::block_diag(&ls),
            r: SymMatrix::block_diag(&rs),
        }
    }

    pub fn compose(&self) -> Result<ComposedSupply<T>> {
        let bar = self.aggregate();
        let h = &self.h;
        let ht = h.transpose();
        let lh = bar.l.matmul(h);
        let rh = bar.r.as_matrix().matmul(h);
        let q = bar.q.as_matrix().add(&lh).add(&lh.transpose()).add(&ht.matmul(&rh));
        let l = bar.l.add(&ht.matmul(bar.r.as_matrix()));
        let supply = SupplyRate::new(SymMatrix::from_symmetric_part(&q), l, bar.r)?;
        ComposedSupply::from_supply(supply)
    }
}

/// Closed-loop supply on `(δy, δv)` with its `Q ⪯ 0` verdict.
#[derive(Debug, Clone)]
pub struct ComposedSupply<T> {
    pub supply: SupplyRate<T>,
    pub q_max_eig: T,
    pub tol: T,
    pub q_negative_semidefinite: bool,
}

impl<T: Scalar> ComposedSupply<T> {
    fn from_supply(supply: SupplyRate<T>) -> Result<Self> {
        let q_max_eig = max_eig_sym(&supply.q)?;
        let tol = q_verdict_tol(&supply.q);
        Ok(Self {
            q_negative_semidefinite: q_max_eig <= tol,
            supply,
            q_max_eig,
            tol,
        })
    }
}

fn q_verdict_tol<T: Scalar>(q: &SymMatrix<T>) -> T {
    T::lit(1e-9) * (T::one() + q.as_matrix().max_abs())
}

pub fn compose_supplies<T: Scalar>(supplies: &[SupplyRate<T>], h: &Matrix<T>) -> Result<ComposedSupply<T>> {
    InterconnectionSpec::new(supplies.to_vec(), h.clone())?.compose()
}

/// `H` for the negative feedback `u₁ = −y₂ + v₁`, `u₂ = y₁ + v₂`.
pub fn negative_feedback_matrix<T: Scalar>(m_u1: usize, m_y1: usize, m_u2: usize, m_y2: usize) -> Result<Matrix<T>> {
    if m_u1 != m_y2 || m_u2 != m_y1 {
        return Err(Error::DimensionMismatch(format!(
            "feedback needs m_u1 = m_y2 and m_u2 = m_y1, got ({m_u1}, {m_y1}) and ({m_u2}, {m_y2})"
        )));
    }
    let mut h = Matrix::zeros(m_u1 + m_u2, m_y1 + m_y2);
    h.set_block(0, m_y1, &Matrix::identity(m_u1).neg());
    h.set_block(m_u1, 0, &Matrix::identity(m_u2));
    Ok(h)
}

pub fn feedback_compose<T: Scalar>(s1: &SupplyRate<T>, s2: &SupplyRate<T>) -> Result<ComposedSupply<T>> {
    let h = negative_feedback_matrix(s1.m_u(), s1.m_y(), s2.m_u(), s2.m_y())?;
    compose_supplies(&[s1.clone(), s2.clone()], &h)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmallGain<T> {
    /// Scaling of the second subsystem's supply that makes the loop supply `Q ⪯ 0`.
    Tau(T),
    NotSatisfiable,
}

/// Picks `τ ∈ [γ₁², 1/γ₂²]` (geometric midpoint `γ₁/γ₂`) for the loop of two gain supplies.
pub fn small_gain_check<T: Scalar>(gamma1: T, gamma2: T) -> Result<SmallGain<T>> {
    for g in [gamma1, gamma2] {
        if !(g > T::zero()) || !g.is_finite() {
            return Err(Error::InvalidInput(format!(
                "gains must be finite and positive, got {g}"
            )));
        }
    }
    if gamma1 * gamma2 > T::one() + T::lit(1e-9) {
        return Ok(SmallGain::NotSatisfiable);
    }
    Ok(SmallGain::Tau(gamma1 / gamma2))
}

/// The scaled loop supply for a small-gain verdict, for inspection.
pub fn small_gain_composition<T: Scalar>(gamma1: T, gamma2: T, m: usize, tau: T) -> Result<ComposedSupply<T>> {
    let s1 = gain_supply(m, m, gamma1)?;
    let s2 = scale_supply(&gain_supply(m, m, gamma2)?, tau)?;
    feedback_compose(&s1, &s2)
}

fn check_loop_well_posed<T: Scalar>(
    h: &Matrix<T>,
    d1: &Matrix<T>,
    d2: &Matrix<T>,
    (mu1, my1): (usize, usize),
    (mu2, my2): (usize, usize),
) -> Result<()> {
    let h11 = h.block(0, 0, mu1, my1);
    let h12 = h.block(0, my1, mu1, my2);
    let h21 = h.block(mu1, 0, mu2, my1);
    let h22 = h.block(mu1, my1, mu2, my2);
    if !h11.matmul(d1).is_zero() {
        return Err(Error::AlgebraicLoop(
            "subsystem 1 feeds its own feedthrough back".into(),
        ));
    }
    if !h22.matmul(d2).is_zero() {
        return Err(Error::AlgebraicLoop(
            "subsystem 2 feeds its own feedthrough back".into(),
        ));
    }
    if !h12.matmul(d2).is_zero() && !h21.matmul(d1).is_zero() {
        return Err(Error::AlgebraicLoop(
            "both subsystems have feedthrough on the feedback path".into(),
        ));
    }
    Ok(())
}

/// Interconnected Jacobians for every pair of subsystem vertices.
pub fn build_closed_loop_family<T: Scalar>(
    fam1: &OpenVertexFamily<T>,
    fam2: &OpenVertexFamily<T>,
    h: &Matrix<T>,
) -> Result<VertexFamily<T>> {
    let (n1, n2) = (fam1.n(), fam2.n());
    let (mu1, my1, mu2, my2) = (fam1.m_u(), fam1.m_y(), fam2.m_u(), fam2.m_y());
    if h.rows() != mu1 + mu2 || h.cols() != my1 + my2 {
        return Err(Error::DimensionMismatch(format!(
            "H is {}x{}, expected {}x{}",
            h.rows(),
            h.cols(),
            mu1 + mu2,
            my1 + my2
        )));
    }
    let mut vertices = Vec::with_capacity(fam1.vertices().len() * fam2.vertices().len());
    for v1 in fam1.vertices() {
        for v2 in fam2.vertices() {
            check_loop_well_posed(h, &v1.d, &v2.d, (mu1, my1), (mu2, my2))?;
            let a = Matrix::block_diag(&[&v1.a, &v2.a]);
            let b = Matrix::block_diag(&[&v1.b, &v2.b]);
            let c = Matrix::block_diag(&[&v1.c, &v2.c]);
            let d = Matrix::block_diag(&[&v1.d, &v2.d]);
            // u = Hy + v, y = Cx + Du  =>  u = (I − HD)⁻¹HCx at v = 0.
            let m = Matrix::identity(mu1 + mu2).sub(&h.matmul(&d));
            let minv = inverse(&m).map_err(|_| Error::AlgebraicLoop("I − HD is singular".into()))?;
            vertices.push(a.add(&b.matmul(&minv).matmul(h).matmul(&c)));
        }
    }
    debug_assert_eq!(vertices[0].rows(), n1 + n2);
    VertexFamily::new(vertices)
}

/// Block-diagonal storage of two dissipativity certificates, verified on the
/// closed-loop family at the smaller strictness.
pub fn aggregate_certificates<T: Scalar>(
    c1: &DissipativityCertificate<T>,
    c2: &DissipativityCertificate<T>,
    h: &Matrix<T>,
    closed_family: &VertexFamily<T>,
) -> Result<DominanceCertificate<T>> {
    let lambda = c1.lambda;
    if (c1.lambda - c2.lambda).abs() > T::lit(1e-12) * (T::one() + c1.lambda.abs()) {
        return Err(Error::CompositionUnsound(format!(
            "subsystem rates differ ({} vs {})",
            c1.lambda, c2.lambda
        )));
    }
    let composed = compose_supplies(&[c1.supply.clone(), c2.supply.clone()], h)?;
    if !composed.q_negative_semidefinite {
        return Err(Error::CompositionUnsound(format!(
            "composed output weight is not negative semidefinite (max eigenvalue {})",
            composed.q_max_eig
        )));
    }
    let n = c1.n() + c2.n();
    if closed_family.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "closed-loop family has dimension {}, certificates give {n}",
            closed_family.n()
        )));
    }
    let p = SymMatrix::block_diag(&[&c1.p, &c2.p]);
    let epsilon = c1.epsilon.min(c2.epsilon);
    let problem = SdpProblem::lyapunov(closed_family.vertices(), lambda, epsilon);
    let residuals = verify_solution(&p, &problem)?;
    let margin = residuals.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
    let tol = T::lit(1e-6) * (T::one() + p.as_matrix().max_abs());
    if margin > tol {
        return Err(Error::CompositionUnsound(format!(
            "block-diagonal storage violates the closed-loop LMI by {margin}"
        )));
    }
    let inertia = storage_inertia(&p, None)?;
    let degree = c1.degree + c2.degree;
    if inertia.neg != degree || inertia.zero != 0 {
        return Err(Error::CompositionUnsound(format!(
            "aggregate storage has inertia {inertia}, expected {degree} negative"
        )));
    }
    Ok(DominanceCertificate {
        p,
        degree,
        lambda,
        epsilon,
        margin,
    })
}
