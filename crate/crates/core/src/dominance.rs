//! p-dominance certification of vertex families of Jacobians.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{default_zero_tol, eig_general, inertia_of, Inertia, Matrix, SymMatrix};
use crate::scalar::Scalar;
use crate::sdp::{self, Objective, SdpProblem, SdpSettings, SdpStatus};

/// Finite set of Jacobians whose convex hull covers the differential of a vector field.
#[derive(Debug, Clone)]
pub struct VertexFamily<T> {
    vertices: Vec<Matrix<T>>,
}

impl<T: Scalar> VertexFamily<T> {
    pub fn new(vertices: Vec<Matrix<T>>) -> Result<Self> {
        let first = vertices
            .first()
            .ok_or_else(|| Error::InvalidInput("vertex family is empty".into()))?;
        let n = first.rows();
        if n == 0 {
            return Err(Error::InvalidInput("vertices must be nonempty matrices".into()));
        }
        for (i, v) in vertices.iter().enumerate() {
            if v.rows() != n || v.cols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "vertex {i} is {}x{}, expected {n}x{n}",
                    v.rows(),
                    v.cols()
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("vertex {i} has non-finite entries")));
            }
        }
        Ok(Self { vertices })
    }

    pub fn single(a: Matrix<T>) -> Result<Self> {
        Self::new(vec![a])
    }

    pub fn n(&self) -> usize {
        self.vertices[0].rows()
    }

    pub fn vertices(&self) -> &[Matrix<T>] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

/// Quadratic storage certifying p-dominance of every vertex at rate `lambda`.
#[derive(Debug, Clone)]
pub struct DominanceCertificate<T> {
    pub p: SymMatrix<T>,
    pub degree: usize,
    pub lambda: T,
    pub epsilon: T,
    /// Worst largest eigenvalue of the vertex residuals (non-positive).
    pub margin: T,
}

/// Plain-`f64` serialized form shared by dominance and dissipativity certificates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateRecord {
    pub n: usize,
    pub p: usize,
    pub lambda: f64,
    pub epsilon: f64,
    pub margin: f64,
    #[serde(rename = "P")]
    pub storage: Vec<Vec<f64>>,
    #[serde(rename = "Q", default, skip_serializing_if = "Option::is_none")]
    pub supply_q: Option<Vec<Vec<f64>>>,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub supply_l: Option<Vec<Vec<f64>>>,
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub supply_r: Option<Vec<Vec<f64>>>,
}

impl<T: Scalar> DominanceCertificate<T> {
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
            supply_q: None,
            supply_l: None,
            supply_r: None,
        }
    }

    pub fn from_record(rec: &CertificateRecord) -> Result<Self> {
        let p = SymMatrix::from_f64_rows(&rec.storage)?;
        if p.n() != rec.n || rec.p > rec.n {
            return Err(Error::InvalidInput(format!(
                "certificate record declares n={} p={} but P is {}x{}",
                rec.n,
                rec.p,
                p.n(),
                p.n()
            )));
        }
        Ok(Self {
            p,
            degree: rec.p,
            lambda: T::lit(rec.lambda),
            epsilon: T::lit(rec.epsilon),
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

/// Verdict of the spectral splitting test at one rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "p")]
pub enum Split {
    ConsistentSplit(usize),
    NoSplit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitInterval<T> {
    pub lo: T,
    pub hi: T,
    pub p: usize,
    /// Half the grid step at each end; the true interval edge lies within it.
    pub resolution: T,
}

#[derive(Debug, Clone)]
pub struct SplittingReport<T> {
    pub lambda_grid: Vec<T>,
    pub per_lambda: Vec<Split>,
    pub intervals: Vec<SplitInterval<T>>,
}

impl<T: Scalar> SplittingReport<T> {
    pub fn split_at(&self, lambda: T) -> Option<Split> {
        self.lambda_grid
            .iter()
            .position(|&l| l == lambda)
            .map(|i| self.per_lambda[i])
    }
}

/// Default half-width of the exclusion band around the imaginary axis.
pub fn default_margin_band<T: Scalar>(a: &Matrix<T>) -> T {
    T::lit(1e-6) * (T::one() + a.norm_inf())
}

/// Counts eigenvalues of `A + λI` to the right of `band` and to the left of `-band`.
pub fn spectral_split<T: Scalar>(a: &Matrix<T>, lambda: T, band: T) -> Result<(usize, usize)> {
    Ok(eig_general(&a.add_identity(lambda))?.split(band))
}

#[derive(Debug, Clone)]
pub struct DominanceOptions<T> {
    pub norm_bound: T,
    pub objective: Objective,
    pub settings: SdpSettings<T>,
    /// Inertia zero threshold; `None` uses `n·‖P‖∞·1e-9`.
    pub zero_tol: Option<T>,
}

impl<T: Scalar> Default for DominanceOptions<T> {
    fn default() -> Self {
        Self {
            norm_bound: T::lit(sdp::DEFAULT_NORM_BOUND),
            objective: Objective::Feasibility,
            settings: SdpSettings::default(),
            zero_tol: None,
        }
    }
}

fn check_rate<T: Scalar>(lambda: T, epsilon: T) -> Result<()> {
    if !(lambda >= T::zero()) || !lambda.is_finite() {
        return Err(Error::InvalidInput(format!(
            "rate must be finite and >= 0, got {lambda}"
        )));
    }
    if !(epsilon >= T::zero()) || !epsilon.is_finite() {
        return Err(Error::InvalidInput(format!(
            "strictness must be finite and >= 0, got {epsilon}"
        )));
    }
    Ok(())
}

pub(crate) fn storage_inertia<T: Scalar>(p: &SymMatrix<T>, zero_tol: Option<T>) -> Result<Inertia> {
    inertia_of(p, zero_tol.unwrap_or_else(|| default_zero_tol(p)))
}

/// Solves the vertex-relaxed dominance LMI and returns the certificate with
/// its SDP margin (`ε + t*` under MaximizeMargin).
pub fn solve_dominance_with<T: Scalar>(
    family: &VertexFamily<T>,
    lambda: T,
    epsilon: T,
    opts: &DominanceOptions<T>,
) -> Result<(DominanceCertificate<T>, Option<T>)> {
    check_rate(lambda, epsilon)?;
    let problem = SdpProblem::lyapunov(family.vertices(), lambda, epsilon)
        .with_norm_bound(opts.norm_bound)
        .with_objective(opts.objective);
    let res = sdp::solve(&problem, &opts.settings)?;
    match res.status {
        SdpStatus::Feasible => {}
        SdpStatus::Infeasible => {
            return Err(Error::Infeasible(format!(
                "no storage satisfies the {} vertex LMIs at rate {lambda} (best shift {})",
                family.len(),
                res.stats.shift
            )))
        }
        SdpStatus::NumericFailure => {
            return Err(Error::NumericFailure(res.stats.message.clone()));
        }
    }
    let p = res.p.expect("feasible result carries P");
    let inertia = storage_inertia(&p, opts.zero_tol)?;
    if inertia.zero != 0 {
        return Err(Error::InertiaMismatch(format!(
            "storage is singular, inertia {inertia}"
        )));
    }
    let degree = inertia.neg;
    let n = family.n();
    for (i, a) in family.vertices().iter().enumerate() {
        let (pos, neg) = spectral_split(a, lambda, T::zero())?;
        if pos != degree || neg != n - degree {
            return Err(Error::InertiaMismatch(format!(
                "storage has inertia {inertia} but vertex {i} splits {pos}/{neg} at rate {lambda}"
            )));
        }
    }
    let margin = res.stats.residuals.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
    Ok((
        DominanceCertificate {
            p,
            degree,
            lambda,
            epsilon,
            margin,
        },
        res.margin,
    ))
}

pub fn solve_dominance<T: Scalar>(family: &VertexFamily<T>, lambda: T, epsilon: T) -> Result<DominanceCertificate<T>> {
    solve_dominance_with(family, lambda, epsilon, &DominanceOptions::default()).map(|(c, _)| c)
}

/// Dominance of a single linear system with prescribed degree `p`.
pub fn check_dominance_lti<T: Scalar>(
    a: &Matrix<T>,
    p: usize,
    lambda: T,
    epsilon: T,
) -> Result<DominanceCertificate<T>> {
    check_rate(lambda, epsilon)?;
    let family = VertexFamily::single(a.clone())?;
    let n = family.n();
    if p > n {
        return Err(Error::InvalidInput(format!("degree {p} exceeds dimension {n}")));
    }
    let (pos, neg) = spectral_split(a, lambda, T::zero())?;
    if pos != p || neg != n - p {
        return Err(Error::Infeasible(format!(
            "A + {lambda}I has {pos} eigenvalues with positive real part, {neg} with negative real part and {} on the axis; degree {p} needs a {p}/{} split",
            n - pos - neg,
            n - p
        )));
    }
    let cert = match solve_dominance(&family, lambda, epsilon) {
        Ok(c) => c,
        Err(Error::Infeasible(msg)) => {
            return Err(Error::Infeasible(format!(
                "spectrum splits {p}/{} but strictness {epsilon} is not reachable within the norm bound: {msg}",
                n - p
            )))
        }
        Err(e) => return Err(e),
    };
    if cert.degree != p {
        return Err(Error::InertiaMismatch(format!(
            "solver storage has degree {} but the spectrum splits {p}/{}",
            cert.degree,
            n - p
        )));
    }
    Ok(cert)
}

/// Spectral splitting test over a grid of rates. Grid points are sorted
/// ascending; `margin_band = None` uses `1e-6·(1 + ‖A‖∞)` per sample.
pub fn spectral_scan<T: Scalar>(
    samples: &[Matrix<T>],
    lambda_grid: &[T],
    margin_band: Option<T>,
) -> Result<SplittingReport<T>> {
    if samples.is_empty() || lambda_grid.is_empty() {
        return Err(Error::InvalidInput("spectral scan needs samples and rates".into()));
    }
    if let Some(b) = margin_band {
        if !(b >= T::zero()) {
            return Err(Error::InvalidInput("margin_band must be >= 0".into()));
        }
    }
    let mut grid = lambda_grid.to_vec();
    if grid.iter().any(|l| !l.is_finite()) {
        return Err(Error::InvalidInput("rate grid has non-finite entries".into()));
    }
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite"));

    let spectra = samples
        .iter()
        .map(|a| eig_general(a).map(|s| (s, margin_band.unwrap_or_else(|| default_margin_band(a)))))
        .collect::<Result<Vec<_>>>()?;
    let per_lambda: Vec<Split> = grid
        .iter()
        .map(|&lambda| {
            let mut common = None;
            for (spec, band) in &spectra {
                let n = spec.len();
                let shifted: Vec<T> = spec.real_parts().iter().map(|&r| r + lambda).collect();
                if shifted.iter().any(|r| r.abs() <= *band) {
                    return Split::NoSplit;
                }
                let pos = shifted.iter().filter(|&&r| r > T::zero()).count();
                debug_assert!(pos <= n);
                match common {
                    None => common = Some(pos),
                    Some(c) if c != pos => return Split::NoSplit,
                    _ => {}
                }
            }
            Split::ConsistentSplit(common.expect("nonempty samples"))
        })
        .collect();

    let mut intervals: Vec<SplitInterval<T>> = Vec::new();
    let half = |i: usize| -> T {
        let left = if i > 0 { grid[i] - grid[i - 1] } else { T::zero() };
        let right = if i + 1 < grid.len() {
            grid[i + 1] - grid[i]
        } else {
            T::zero()
        };
        left.max(right) / T::lit(2.0)
    };
    let mut i = 0;
    while i < grid.len() {
        if let Split::ConsistentSplit(p) = per_lambda[i] {
            let start = i;
            while i + 1 < grid.len() && per_lambda[i + 1] == Split::ConsistentSplit(p) {
                i += 1;
            }
            intervals.push(SplitInterval {
                lo: grid[start],
                hi: grid[i],
                p,
                resolution: half(start).max(half(i)),
            });
        }
        i += 1;
    }
    Ok(SplittingReport {
        lambda_grid: grid,
        per_lambda,
        intervals,
    })
}

/// Outcome of one grid point in a rate search.
#[derive(Debug, Clone)]
pub struct RateAttempt<T> {
    pub lambda: T,
    pub outcome: std::result::Result<T, String>,
}

#[derive(Debug, Clone)]
pub struct RateSearchResult<T> {
    pub lambda: T,
    pub certificate: DominanceCertificate<T>,
    /// Optimal uniform strictness at the chosen rate.
    pub margin: T,
    pub attempts: Vec<RateAttempt<T>>,
}

/// Searches the grid for the rate with the largest certified margin at degree `p`.
pub fn rate_search<T: Scalar>(
    family: &VertexFamily<T>,
    p: usize,
    lambda_grid: &[T],
    epsilon: T,
) -> Result<RateSearchResult<T>> {
    if lambda_grid.is_empty() {
        return Err(Error::InvalidInput("rate grid is empty".into()));
    }
    if p > family.n() {
        return Err(Error::InvalidInput(format!(
            "degree {p} exceeds dimension {}",
            family.n()
        )));
    }
    let scan = spectral_scan(family.vertices(), lambda_grid, None)?;
    let opts = DominanceOptions {
        objective: Objective::MaximizeMargin,
        ..DominanceOptions::default()
    };
    let mut attempts = Vec::new();
    let mut best: Option<(T, DominanceCertificate<T>, T)> = None;
    for (&lambda, split) in scan.lambda_grid.iter().zip(&scan.per_lambda) {
        if *split != Split::ConsistentSplit(p) {
            attempts.push(RateAttempt {
                lambda,
                outcome: Err(format!("spectral prefilter: {split:?}")),
            });
            continue;
        }
        match solve_dominance_with(family, lambda, epsilon, &opts) {
            Ok((cert, margin)) if cert.degree == p => {
                let margin = margin.expect("MaximizeMargin reports a margin");
                attempts.push(RateAttempt {
                    lambda,
                    outcome: Ok(margin),
                });
                if best.as_ref().is_none_or(|(_, _, m)| margin > *m) {
                    best = Some((lambda, cert, margin));
                }
            }
            Ok((cert, _)) => attempts.push(RateAttempt {
                lambda,
                outcome: Err(format!("storage has degree {}", cert.degree)),
            }),
            Err(e) => attempts.push(RateAttempt {
                lambda,
                outcome: Err(e.to_string()),
            }),
        }
    }
    match best {
        Some((lambda, certificate, margin)) => Ok(RateSearchResult {
            lambda,
            certificate,
            margin,
            attempts,
        }),
        None => Err(Error::NotFound(format!(
            "no rate in the grid admits a degree-{p} certificate"
        ))),
    }
}
