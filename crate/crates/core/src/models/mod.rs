//! Built-in mechanical and electromechanical models, their Jacobian hulls and
//! trajectory-level checks.

mod builtin;
mod sim;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::dissipativity::{OpenVertex, OpenVertexFamily};
use crate::dominance::VertexFamily;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

pub use builtin::{builtin, builtin_names, default_params};
pub use sim::{
    check_incremental_decay, classify_attractor, cone_invariance_check, integrate, integrate_field,
    integrate_prolonged, AttractorClass, ConeVerdict, DecayVerdict, Trajectory, CONE_TOL, DECAY_REL_TOL, DEFAULT_DT,
};

pub type VectorField<T> = Arc<dyn Fn(&[T]) -> Vec<T> + Send + Sync>;
pub type JacobianField<T> = Arc<dyn Fn(&[T]) -> Matrix<T> + Send + Sync>;

/// Interval enclosing a state-dependent Jacobian entry over the whole state space.
#[derive(Debug, Clone, PartialEq)]
pub struct EntryBound<T> {
    pub row: usize,
    pub col: usize,
    pub lo: T,
    pub hi: T,
    pub label: String,
}

/// Input and output maps of an open model. `d` lists the feedthrough
/// matrices at the corners of its range.
#[derive(Debug, Clone)]
pub struct Ports<T> {
    pub b: Matrix<T>,
    pub c: Matrix<T>,
    pub d: Vec<Matrix<T>>,
}

#[derive(Clone)]
pub struct ModelDef<T> {
    pub name: String,
    pub state_names: Vec<String>,
    pub params: BTreeMap<String, f64>,
    field: VectorField<T>,
    jacobian: JacobianField<T>,
    template: Matrix<T>,
    nonlinear: Vec<EntryBound<T>>,
    ports: Option<Ports<T>>,
}

impl<T: fmt::Debug> fmt::Debug for ModelDef<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelDef")
            .field("name", &self.name)
            .field("state_names", &self.state_names)
            .field("params", &self.params)
            .field("nonlinear", &self.nonlinear)
            .finish_non_exhaustive()
    }
}

impl<T: Scalar> ModelDef<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        state_names: Vec<String>,
        params: BTreeMap<String, f64>,
        field: VectorField<T>,
        jacobian: JacobianField<T>,
        template: Matrix<T>,
        nonlinear: Vec<EntryBound<T>>,
        ports: Option<Ports<T>>,
    ) -> Result<Self> {
        let n = state_names.len();
        if n == 0 || template.rows() != n || template.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "model template is {}x{} for {n} states",
                template.rows(),
                template.cols()
            )));
        }
        for e in &nonlinear {
            if e.row >= n || e.col >= n || e.lo > e.hi || e.lo.is_nan() || e.hi.is_nan() {
                return Err(Error::InvalidInput(format!(
                    "bad bound for Jacobian entry `{}`",
                    e.label
                )));
            }
        }
        if let Some(p) = &ports {
            let (mu, my) = (p.b.cols(), p.c.rows());
            if p.b.rows() != n || p.c.cols() != n || p.d.is_empty() {
                return Err(Error::DimensionMismatch("port matrices do not fit the state".into()));
            }
            if p.d.iter().any(|d| d.rows() != my || d.cols() != mu) {
                return Err(Error::DimensionMismatch("feedthrough does not fit the ports".into()));
            }
        }
        Ok(Self {
            name: name.into(),
            state_names,
            params,
            field,
            jacobian,
            template,
            nonlinear,
            ports,
        })
    }

    /// Linear model `ẋ = Ax`.
    pub fn linear(a: Matrix<T>) -> Result<Self> {
        if !a.is_square() || a.rows() == 0 {
            return Err(Error::InvalidInput(
                "linear model needs a nonempty square matrix".into(),
            ));
        }
        let n = a.rows();
        let fa = a.clone();
        let ja = a.clone();
        Self::new(
            "linear",
            (1..=n).map(|i| format!("x{i}")).collect(),
            BTreeMap::new(),
            Arc::new(move |x: &[T]| fa.matvec(x)),
            Arc::new(move |_: &[T]| ja.clone()),
            a,
            Vec::new(),
            None,
        )
    }

    pub fn n(&self) -> usize {
        self.state_names.len()
    }

    pub fn vector_field(&self, x: &[T]) -> Vec<T> {
        (self.field)(x)
    }

    pub fn jacobian(&self, x: &[T]) -> Matrix<T> {
        (self.jacobian)(x)
    }

    pub fn field_fn(&self) -> VectorField<T> {
        self.field.clone()
    }

    /// Jacobian with every state-dependent entry zeroed.
    pub fn template(&self) -> &Matrix<T> {
        &self.template
    }

    pub fn nonlinear_entries(&self) -> &[EntryBound<T>] {
        &self.nonlinear
    }

    pub fn ports(&self) -> Option<&Ports<T>> {
        self.ports.as_ref()
    }

    pub fn with_ports(mut self, ports: Ports<T>) -> Result<Self> {
        let n = self.n();
        if ports.b.rows() != n || ports.c.cols() != n || ports.d.is_empty() {
            return Err(Error::DimensionMismatch("port matrices do not fit the state".into()));
        }
        self.ports = Some(ports);
        Ok(self)
    }

    /// Hull corners of the Jacobian: all `2^k` combinations of the bounded
    /// nonlinear entries with a nonzero range.
    pub fn jacobian_vertices(&self) -> Result<VertexFamily<T>> {
        let varying: Vec<&EntryBound<T>> = self.nonlinear.iter().filter(|e| e.lo != e.hi).collect();
        for e in &self.nonlinear {
            if !e.lo.is_finite() || !e.hi.is_finite() {
                return Err(Error::UnboundedEntry(e.label.clone()));
            }
        }
        if varying.len() > 16 {
            return Err(Error::InvalidInput(format!(
                "{} varying Jacobian entries give too many vertices",
                varying.len()
            )));
        }
        let mut base = self.template.clone();
        for e in self.nonlinear.iter().filter(|e| e.lo == e.hi) {
            base[(e.row, e.col)] += e.lo;
        }
        let vertices = (0..1usize << varying.len())
            .map(|mask| {
                let mut a = base.clone();
                for (bit, e) in varying.iter().enumerate() {
                    a[(e.row, e.col)] += if mask >> bit & 1 == 0 { e.lo } else { e.hi };
                }
                a
            })
            .collect();
        VertexFamily::new(vertices)
    }

    /// Jacobians evaluated at the given states.
    pub fn jacobian_samples(&self, states: &[Vec<T>]) -> Result<Vec<Matrix<T>>> {
        if states.is_empty() {
            return Err(Error::InvalidInput("sample grid is empty".into()));
        }
        states
            .iter()
            .map(|x| {
                if x.len() != self.n() {
                    return Err(Error::DimensionMismatch(format!(
                        "sample state has {} entries, model has {}",
                        x.len(),
                        self.n()
                    )));
                }
                Ok(self.jacobian(x))
            })
            .collect()
    }

    /// Open vertex family: Jacobian corners combined with feedthrough corners.
    pub fn open_family(&self) -> Result<OpenVertexFamily<T>> {
        let ports = self
            .ports
            .as_ref()
            .ok_or_else(|| Error::Precondition(format!("model `{}` has no input/output ports", self.name)))?;
        let fam = self.jacobian_vertices()?;
        let mut vertices = Vec::with_capacity(fam.len() * ports.d.len());
        for a in fam.vertices() {
            for d in &ports.d {
                vertices.push(OpenVertex {
                    a: a.clone(),
                    b: ports.b.clone(),
                    c: ports.c.clone(),
                    d: d.clone(),
                });
            }
        }
        OpenVertexFamily::new(vertices)
    }

    /// Central-difference Jacobian with step `h·(1 + |x_j|)`.
    pub fn finite_difference_jacobian(&self, x: &[T], h: T) -> Matrix<T> {
        let n = self.n();
        let mut j = Matrix::zeros(n, n);
        let mut xp = x.to_vec();
        for col in 0..n {
            let step = h * (T::one() + x[col].abs());
            xp[col] = x[col] + step;
            let fp = self.vector_field(&xp);
            xp[col] = x[col] - step;
            let fm = self.vector_field(&xp);
            xp[col] = x[col];
            for row in 0..n {
                j[(row, col)] = (fp[row] - fm[row]) / (T::lit(2.0) * step);
            }
        }
        j
    }
}

/// States sweeping one coordinate over `[lo, hi]` with the others held at `base`.
pub fn coordinate_grid<T: Scalar>(base: &[T], coord: usize, lo: T, hi: T, count: usize) -> Result<Vec<Vec<T>>> {
    if coord >= base.len() {
        return Err(Error::InvalidInput(format!(
            "coordinate {coord} out of range for {} states",
            base.len()
        )));
    }
    if count == 0 || !(lo <= hi) {
        return Err(Error::InvalidInput("grid needs count >= 1 and lo <= hi".into()));
    }
    Ok((0..count)
        .map(|k| {
            let mut x = base.to_vec();
            x[coord] = if count == 1 {
                lo
            } else {
                lo + (hi - lo) * T::lit(k as f64 / (count - 1) as f64)
            };
            x
        })
        .collect())
}

#[cfg(test)]
mod tests;
