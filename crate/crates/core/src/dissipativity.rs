//! Differential dissipativity: supply rates, bordered vertex LMIs, minimal gains.

use crate::dominance::{spectral_split, storage_inertia, CertificateRecord};
use crate::error::{Error, Result};
use crate::linalg::{max_eig_sym, Matrix, SymMatrix};
use crate::scalar::Scalar;
use crate::sdp::{self, BorderedConstraint, Constraint, Equality, Objective, SdpProblem, SdpSettings, SdpStatus};

/// Quadratic supply `s(δy, δu) = δyᵀQδy + 2δyᵀLδu + δuᵀRδu`.
#[derive(Debug, Clone, PartialEq)]
pub struct SupplyRate<T> {
    pub q: SymMatrix<T>,
    pub l: Matrix<T>,
    pub r: SymMatrix<T>,
}

impl<T: Scalar> SupplyRate<T> {
    pub fn new(q: SymMatrix<T>, l: Matrix<T>, r: SymMatrix<T>) -> Result<Self> {
        if l.rows() != q.n() || l.cols() != r.n() {
            return Err(Error::DimensionMismatch(format!(
                "supply cross term is {}x{}, expected {}x{}",
                l.rows(),
                l.cols(),
                q.n(),
                r.n()
            )));
        }
        Ok(Self { q, l, r })
    }

    pub fn zero(m_y: usize, m_u: usize) -> Self {
        Self {
            q: SymMatrix::zeros(m_y),
            l: Matrix::zeros(m_y, m_u),
            r: SymMatrix::zeros(m_u),
        }
    }

    pub fn m_y(&self) -> usize {
        self.q.n()
    }

    pub fn m_u(&self) -> usize {
        self.r.n()
    }

    pub fn evaluate(&self, dy: &[T], du: &[T]) -> T {
        let ldu = self.l.matvec(du);
        let cross = dy.iter().zip(&ldu).fold(T::zero(), |a, (&x, &y)| a + x * y);
        self.q.quad_form(dy) + T::lit(2.0) * cross + self.r.quad_form(du)
    }

    /// The full symmetric matrix `[[Q, L], [Lᵀ, R]]`.
    pub fn block_matrix(&self) -> SymMatrix<T> {
        let m = Matrix::from_blocks(self.q.as_matrix(), &self.l, &self.l.transpose(), self.r.as_matrix());
        SymMatrix::from_symmetric_part(&m)
    }
}

/// Passivity supply `2δyᵀδu`.
pub fn passivity_supply<T: Scalar>(m: usize) -> Result<SupplyRate<T>> {
    if m == 0 {
        return Err(Error::InvalidInput("passivity supply needs m >= 1".into()));
    }
    Ok(SupplyRate {
        q: SymMatrix::zeros(m),
        l: Matrix::identity(m),
        r: SymMatrix::zeros(m),
    })
}

/// Gain supply `γ²|δu|² − |δy|²`.
pub fn gain_supply<T: Scalar>(m_y: usize, m_u: usize, gamma: T) -> Result<SupplyRate<T>> {
    if !(gamma > T::zero()) || !gamma.is_finite() {
        return Err(Error::InvalidInput(format!("gain must be positive, got {gamma}")));
    }
    if m_y == 0 || m_u == 0 {
        return Err(Error::InvalidInput("gain supply needs nonzero dimensions".into()));
    }
    Ok(SupplyRate {
        q: SymMatrix::identity(m_y).scale(-T::one()),
        l: Matrix::zeros(m_y, m_u),
        r: SymMatrix::identity(m_u).scale(gamma * gamma),
    })
}

pub fn scale_supply<T: Scalar>(s: &SupplyRate<T>, tau: T) -> Result<SupplyRate<T>> {
    if !(tau > T::zero()) || !tau.is_finite() {
        return Err(Error::InvalidInput(format!("supply scale must be positive, got {tau}")));
    }
    Ok(SupplyRate {
        q: s.q.scale(tau),
        l: s.l.scale(tau),
        r: s.r.scale(tau),
    })
}

/// Linearization `(A, B, C, D)` of an open system at one hull corner.
#[derive(Debug, Clone, PartialEq)]
pub struct OpenVertex<T> {
    pub a: Matrix<T>,
    pub b: Matrix<T>,
    pub c: Matrix<T>,
    pub d: Matrix<T>,
}

#[derive(Debug, Clone)]
pub struct OpenVertexFamily<T> {
    n: usize,
    m_u: usize,
    m_y: usize,
    vertices: Vec<OpenVertex<T>>,
    varying_output: bool,
}

impl<T: Scalar> OpenVertexFamily<T> {
    pub fn new(vertices: Vec<OpenVertex<T>>) -> Result<Self> {
        let first = vertices
            .first()
            .ok_or_else(|| Error::InvalidInput("open vertex family is empty".into()))?;
        let (n, m_u, m_y) = (first.a.rows(), first.b.cols(), first.c.rows());
        if n == 0 || m_u == 0 || m_y == 0 {
            return Err(Error::InvalidInput("open vertices need nonzero dimensions".into()));
        }
        for (i, v) in vertices.iter().enumerate() {
            let shapes = [
                (v.a.rows(), v.a.cols(), n, n),
                (v.b.rows(), v.b.cols(), n, m_u),
                (v.c.rows(), v.c.cols(), m_y, n),
                (v.d.rows(), v.d.cols(), m_y, m_u),
            ];
            if shapes.iter().any(|&(r, c, er, ec)| r != er || c != ec) {
                return Err(Error::DimensionMismatch(format!(
                    "open vertex {i} does not match n={n}, m_u={m_u}, m_y={m_y}"
                )));
            }
            if !(v.a.is_finite() && v.b.is_finite() && v.c.is_finite() && v.d.is_finite()) {
                return Err(Error::InvalidInput(format!("open vertex {i} has non-finite entries")));
            }
        }
        let varying_output = vertices.iter().any(|v| v.c != first.c || v.d != first.d);
        Ok(Self {
            n,
            m_u,
            m_y,
            vertices,
            varying_output,
        })
    }

    /// Family sharing `B, C, D` across the given state matrices.
    pub fn from_state_vertices(a: &[Matrix<T>], b: Matrix<T>, c: Matrix<T>, d: Matrix<T>) -> Result<Self> {
        Self::new(
            a.iter()
                .map(|a| OpenVertex {
                    a: a.clone(),
                    b: b.clone(),
                    c: c.clone(),
                    d: d.clone(),
                })
                .collect(),
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m_u(&self) -> usize {
        self.m_u
    }

    pub fn m_y(&self) -> usize {
        self.m_y
    }

    pub fn vertices(&self) -> &[OpenVertex<T>] {
        &self.vertices
    }

    pub fn varying_output(&self) -> bool {
        self.varying_output
    }

    pub fn state_matrices(&self) -> Vec<Matrix<T>> {
        self.vertices.iter().map(|v| v.a.clone()).collect()
    }

    /// Bordered LMI constraints of this family against `supply`.
    pub fn constraints(&self, supply: &SupplyRate<T>, lambda: T, epsilon: T) -> Vec<Constraint<T>> {
        self.vertices
            .iter()
            .map(|v| {
                Constraint::Bordered(BorderedConstraint {
                    a: v.a.clone(),
                    b: v.b.clone(),
                    c: v.c.clone(),
                    d: v.d.clone(),
                    supply: supply.clone(),
                    lambda,
                    epsilon,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct DissipativityCertificate<T> {
    pub p: SymMatrix<T>,
    pub degree: usize,
    pub lambda: T,
    pub epsilon: T,
    pub supply: SupplyRate<T>,
    /// Worst largest eigenvalue of the bordered vertex residuals (non-positive).
    pub margin: T,
}

impl<T: Scalar> DissipativityCertificate<T> {
    pub fn n(&self) -> usize {
        self.p.n()
    }

    pub fn to_record(&self) -> CertificateRecord {
        CertificateRecord {
            n: self.n(),
            p: self.degree,
            lambda: self.lambda.to_f64_lossy(),
            epsilon: self.epsilon.to_f64_lossy(),
            margin: self.margin.to_f64_lossy(),
            storage: self.p.as_matrix().to_rows_f64(),
            supply_q: Some(self.supply.q.as_matrix().to_rows_f64()),
            supply_l: Some(self.supply.l.to_rows_f64()),
            supply_r: Some(self.supply.r.as_matrix().to_rows_f64()),
        }
    }

    pub fn from_record(rec: &CertificateRecord) -> Result<Self> {
        let missing = || Error::InvalidInput("dissipativity certificate lacks Q/L/R".into());
        let q = SymMatrix::from_f64_rows(rec.supply_q.as_ref().ok_or_else(missing)?)?;
        let l = Matrix::from_f64_rows(rec.supply_l.as_ref().ok_or_else(missing)?)?;
        let r = SymMatrix::from_f64_rows(rec.supply_r.as_ref().ok_or_else(missing)?)?;
        let p = SymMatrix::from_f64_rows(&rec.storage)?;
        if p.n() != rec.n || rec.p > rec.n {
            return Err(Error::InvalidInput("certificate record dimensions disagree".into()));
        }
        Ok(Self {
            p,
            degree: rec.p,
            lambda: T::lit(rec.lambda),
            epsilon: T::lit(rec.epsilon),
            supply: SupplyRate::new(q, l, r)?,
            margin: T::lit(rec.margin),
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.to_record()).expect("certificate record serializes")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let rec: CertificateRecord =
            serde_json::from_value(v.clone()).map_err(|e| Error::InvalidInput(format!("certificate JSON: {e}")))?;
        Self::from_record(&rec)
    }
}

#[derive(Debug, Clone)]
pub struct DissipativityOptions<T> {
    pub norm_bound: T,
    pub objective: Objective,
    pub settings: SdpSettings<T>,
    pub equalities: Vec<Equality<T>>,
    pub zero_tol: Option<T>,
}

impl<T: Scalar> Default for DissipativityOptions<T> {
    fn default() -> Self {
        Self {
            norm_bound: T::lit(sdp::DEFAULT_NORM_BOUND),
            objective: Objective::Feasibility,
            settings: SdpSettings::default(),
            equalities: Vec::new(),
            zero_tol: None,
        }
    }
}

fn q_max_eig<T: Scalar>(supply: &SupplyRate<T>) -> Result<T> {
    max_eig_sym(&supply.q)
}

fn check_supply_fits<T: Scalar>(family: &OpenVertexFamily<T>, supply: &SupplyRate<T>) -> Result<()> {
    if supply.m_y() != family.m_y() || supply.m_u() != family.m_u() {
        return Err(Error::DimensionMismatch(format!(
            "supply is {}x{} (m_y x m_u) but family has m_y={}, m_u={}",
            supply.m_y(),
            supply.m_u(),
            family.m_y(),
            family.m_u()
        )));
    }
    if family.varying_output() {
        let qmax = q_max_eig(supply)?;
        let tol = T::lit(1e-12) * (T::one() + supply.q.as_matrix().max_abs());
        if qmax > tol {
            return Err(Error::VaryingOutputNotConvex {
                max_eig_q: qmax.to_f64_lossy(),
            });
        }
    }
    Ok(())
}

pub fn solve_dissipativity_with<T: Scalar>(
    family: &OpenVertexFamily<T>,
    supply: &SupplyRate<T>,
    lambda: T,
    epsilon: T,
    opts: &DissipativityOptions<T>,
) -> Result<DissipativityCertificate<T>> {
    check_supply_fits(family, supply)?;
    let problem = SdpProblem::new(family.n(), family.constraints(supply, lambda, epsilon))
        .with_equalities(opts.equalities.clone())
        .with_norm_bound(opts.norm_bound)
        .with_objective(opts.objective);
    let res = sdp::solve(&problem, &opts.settings)?;
    match res.status {
        SdpStatus::Feasible => {}
        SdpStatus::Infeasible => {
            return Err(Error::Infeasible(format!(
                "no storage satisfies the {} bordered vertex LMIs at rate {lambda} (best shift {}){}",
                family.vertices().len(),
                res.stats.shift,
                if res.stats.message.is_empty() {
                    String::new()
                } else {
                    format!(": {}", res.stats.message)
                }
            )))
        }
        SdpStatus::NumericFailure => return Err(Error::NumericFailure(res.stats.message.clone())),
    }
    let p = res.p.expect("feasible result carries P");
    let inertia = storage_inertia(&p, opts.zero_tol)?;
    if inertia.zero != 0 {
        return Err(Error::InertiaMismatch(format!(
            "storage is singular, inertia {inertia}"
        )));
    }
    let degree = inertia.neg;
    if epsilon > T::zero() && q_max_eig(supply)? <= T::zero() {
        for (i, v) in family.vertices().iter().enumerate() {
            let (pos, neg) = spectral_split(&v.a, lambda, T::zero())?;
            if pos != degree || neg != family.n() - degree {
                return Err(Error::InertiaMismatch(format!(
                    "storage has inertia {inertia} but vertex {i} splits {pos}/{neg} at rate {lambda}"
                )));
            }
        }
    }
    let margin = res.stats.residuals.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
    Ok(DissipativityCertificate {
        p,
        degree,
        lambda,
        epsilon,
        supply: supply.clone(),
        margin,
    })
}

pub fn solve_dissipativity<T: Scalar>(
    family: &OpenVertexFamily<T>,
    supply: &SupplyRate<T>,
    lambda: T,
    epsilon: T,
) -> Result<DissipativityCertificate<T>> {
    solve_dissipativity_with(family, supply, lambda, epsilon, &DissipativityOptions::default())
}

/// How the homogeneous storage is normalized during gain bisection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainNormalization {
    /// `tr(P) = 1` together with the norm bound.
    UnitTrace,
    /// Only `−N·I ⪯ P ⪯ N·I`.
    NormBound,
}

#[derive(Debug, Clone)]
pub struct MinGainOptions<T> {
    pub normalization: GainNormalization,
    pub norm_bound: T,
    pub settings: SdpSettings<T>,
    pub warm_start: bool,
}

impl<T: Scalar> Default for MinGainOptions<T> {
    fn default() -> Self {
        Self {
            normalization: GainNormalization::UnitTrace,
            norm_bound: T::lit(sdp::DEFAULT_NORM_BOUND),
            settings: SdpSettings::default(),
            warm_start: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GainResult<T> {
    pub gamma: T,
    pub certificate: DissipativityCertificate<T>,
    pub probes: Vec<(T, bool)>,
}

pub const DEFAULT_GAIN_TOL: f64 = 1e-3;

fn gain_probe<T: Scalar>(
    family: &OpenVertexFamily<T>,
    p: usize,
    lambda: T,
    epsilon: T,
    gamma: T,
    opts: &MinGainOptions<T>,
    warm: Option<&SymMatrix<T>>,
) -> Result<std::result::Result<DissipativityCertificate<T>, Error>> {
    let supply = gain_supply(family.m_y(), family.m_u(), gamma)?;
    let equalities = match opts.normalization {
        GainNormalization::UnitTrace => vec![Equality::trace(family.n(), T::one())],
        GainNormalization::NormBound => Vec::new(),
    };
    let mut settings = opts.settings.clone();
    if opts.warm_start {
        settings.warm_start = warm.cloned();
    }
    let dopts = DissipativityOptions {
        norm_bound: opts.norm_bound,
        objective: Objective::Feasibility,
        settings,
        equalities,
        zero_tol: None,
    };
    match solve_dissipativity_with(family, &supply, lambda, epsilon, &dopts) {
        Ok(cert) if cert.degree == p => Ok(Ok(cert)),
        Ok(cert) => Ok(Err(Error::InertiaMismatch(format!(
            "storage at gain {gamma} has degree {}, expected {p}",
            cert.degree
        )))),
        Err(e @ (Error::Infeasible(_) | Error::InertiaMismatch(_) | Error::NumericFailure(_))) => Ok(Err(e)),
        Err(e) => Err(e),
    }
}

/// Smallest gain `γ` in `bracket` for which the family is p-dissipative with
/// respect to the gain supply, by bisection to absolute tolerance `tol`.
pub fn min_gain_with<T: Scalar>(
    family: &OpenVertexFamily<T>,
    p: usize,
    lambda: T,
    epsilon: T,
    bracket: (T, T),
    tol: T,
    opts: &MinGainOptions<T>,
) -> Result<GainResult<T>> {
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) || !(lo > T::zero()) || !hi.is_finite() {
        return Err(Error::BracketInvalid(format!("need 0 < lo < hi, got ({lo}, {hi})")));
    }
    if !(tol > T::zero()) {
        return Err(Error::InvalidInput("bisection tolerance must be positive".into()));
    }
    if p > family.n() {
        return Err(Error::InvalidInput(format!(
            "degree {p} exceeds dimension {}",
            family.n()
        )));
    }
    let mut probes = Vec::new();
    let mut best = match gain_probe(family, p, lambda, epsilon, hi, opts, None)? {
        Ok(cert) => cert,
        Err(Error::InertiaMismatch(msg)) => return Err(Error::InertiaMismatch(msg)),
        Err(e) => return Err(Error::BracketInvalid(format!("upper end {hi} is not feasible: {e}"))),
    };
    probes.push((hi, true));
    if gain_probe(family, p, lambda, epsilon, lo, opts, Some(&best.p))?.is_ok() {
        return Err(Error::BracketInvalid(format!("lower end {lo} is already feasible")));
    }
    probes.push((lo, false));
    while hi - lo > tol {
        let mid = (lo + hi) / T::lit(2.0);
        match gain_probe(family, p, lambda, epsilon, mid, opts, Some(&best.p))? {
            Ok(cert) => {
                hi = mid;
                best = cert;
                probes.push((mid, true));
            }
            Err(_) => {
                lo = mid;
                probes.push((mid, false));
            }
        }
    }
    Ok(GainResult {
        gamma: hi,
        certificate: best,
        probes,
    })
}

pub fn min_gain<T: Scalar>(
    family: &OpenVertexFamily<T>,
    p: usize,
    lambda: T,
    epsilon: T,
    bracket: (T, T),
    tol: T,
) -> Result<GainResult<T>> {
    min_gain_with(family, p, lambda, epsilon, bracket, tol, &MinGainOptions::default())
}

#[derive(Debug, Clone)]
pub struct PiDegree<T> {
    pub degree: usize,
    /// Absent when the storage degenerates to zero (pure proportional action).
    pub certificate: Option<DissipativityCertificate<T>>,
}

/// Passivity degree of the controller `ẋ_c = ū`, `ȳ = k_P(ū) + k_I x_c` with
/// `∂k_P ∈ [lo, hi]`.
pub fn pi_degree<T: Scalar>(k_i: T, dkp_bounds: (T, T), lambda: T, epsilon: T) -> Result<PiDegree<T>> {
    let (lo, hi) = dkp_bounds;
    if !(lo >= T::zero()) || !(hi >= lo) || !hi.is_finite() {
        return Err(Error::InvalidInput(format!(
            "proportional slope bounds must satisfy 0 <= lo <= hi, got ({lo}, {hi})"
        )));
    }
    if !k_i.is_finite() {
        return Err(Error::InvalidInput("integral gain must be finite".into()));
    }
    let one = |v: T| Matrix::from_diag(&[v]);
    let mut slopes = vec![lo];
    if hi != lo {
        slopes.push(hi);
    }
    let family = OpenVertexFamily::new(
        slopes
            .iter()
            .map(|&s| OpenVertex {
                a: one(T::zero()),
                b: one(T::one()),
                c: one(k_i),
                d: one(s),
            })
            .collect(),
    )?;
    let supply = passivity_supply(1)?;
    match solve_dissipativity(&family, &supply, lambda, epsilon) {
        Ok(cert) => Ok(PiDegree {
            degree: cert.degree,
            certificate: Some(cert),
        }),
        Err(Error::InertiaMismatch(_)) if k_i == T::zero() => Ok(PiDegree {
            degree: 0,
            certificate: None,
        }),
        Err(e) => Err(e),
    }
}
