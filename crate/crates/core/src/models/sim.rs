use std::fmt::Write as _;

use super::ModelDef;
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::scalar::Scalar;

pub const DEFAULT_DT: f64 = 1e-3;

const BLOWUP: f64 = 1e150;

/// States on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub dt: T,
    pub times: Vec<T>,
    pub states: Vec<Vec<T>>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn n(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    pub fn last(&self) -> &[T] {
        self.states.last().expect("trajectory has samples")
    }

    pub fn component(&self, i: usize) -> Vec<T> {
        self.states.iter().map(|x| x[i]).collect()
    }

    /// CSV with header `t,x1,...,xn` and 12 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for i in 1..=self.n() {
            let _ = write!(out, ",x{i}");
        }
        out.push('\n');
        for (t, x) in self.times.iter().zip(&self.states) {
            let _ = write!(out, "{:.11e}", t.to_f64_lossy());
            for v in x {
                let _ = write!(out, ",{:.11e}", v.to_f64_lossy());
            }
            out.push('\n');
        }
        out
    }
}

fn check_grid<T: Scalar>(dt: T, t_end: T) -> Result<usize> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
    }
    if !(t_end >= dt) || !t_end.is_finite() {
        return Err(Error::InvalidInput(format!(
            "horizon {t_end} must be at least one step {dt}"
        )));
    }
    Ok((t_end / dt).round().to_usize().expect("finite step count"))
}

fn axpy<T: Scalar>(x: &[T], a: T, k: &[T]) -> Vec<T> {
    x.iter().zip(k).map(|(&xi, &ki)| xi + a * ki).collect()
}

fn rk4_step<T: Scalar>(f: &dyn Fn(&[T]) -> Vec<T>, x: &[T], dt: T) -> Vec<T> {
    let half = dt / T::lit(2.0);
    let k1 = f(x);
    let k2 = f(&axpy(x, half, &k1));
    let k3 = f(&axpy(x, half, &k2));
    let k4 = f(&axpy(x, dt, &k3));
    let sixth = dt / T::lit(6.0);
    (0..x.len())
        .map(|i| x[i] + sixth * (k1[i] + T::lit(2.0) * (k2[i] + k3[i]) + k4[i]))
        .collect()
}

fn diverged<T: Scalar>(x: &[T]) -> bool {
    x.iter().any(|v| !v.is_finite() || v.abs() > T::lit(BLOWUP))
}

/// Classical fixed-step RK4 of an arbitrary vector field.
pub fn integrate_field<T: Scalar>(f: &dyn Fn(&[T]) -> Vec<T>, x0: &[T], dt: T, t_end: T) -> Result<Trajectory<T>> {
    let steps = check_grid(dt, t_end)?;
    if x0.is_empty() || diverged(x0) {
        return Err(Error::InvalidInput("initial state must be nonempty and finite".into()));
    }
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(T::zero());
    states.push(x0.to_vec());
    for k in 1..=steps {
        let next = rk4_step(f, states.last().unwrap(), dt);
        let t = dt * T::lit(k as f64);
        if diverged(&next) {
            return Err(Error::Divergence { time: t.to_f64_lossy() });
        }
        times.push(t);
        states.push(next);
    }
    Ok(Trajectory { dt, times, states })
}

fn check_state<T: Scalar>(model: &ModelDef<T>, x: &[T], what: &str) -> Result<()> {
    if x.len() != model.n() {
        return Err(Error::DimensionMismatch(format!(
            "{what} has {} entries, model `{}` has {} states",
            x.len(),
            model.name,
            model.n()
        )));
    }
    Ok(())
}

pub fn integrate<T: Scalar>(model: &ModelDef<T>, x0: &[T], dt: T, t_end: T) -> Result<Trajectory<T>> {
    check_state(model, x0, "initial state")?;
    let f = model.field_fn();
    integrate_field(&*f, x0, dt, t_end)
}

fn prolonged_field<T: Scalar>(model: &ModelDef<T>) -> impl Fn(&[T]) -> Vec<T> + '_ {
    let n = model.n();
    move |z: &[T]| {
        let (x, dx) = z.split_at(n);
        let mut out = model.vector_field(x);
        out.extend(model.jacobian(x).matvec(dx));
        out
    }
}

/// Joint integration of `(ẋ, δẋ) = (f(x), ∂f(x)δx)`.
pub fn integrate_prolonged<T: Scalar>(
    model: &ModelDef<T>,
    x0: &[T],
    dx0: &[T],
    dt: T,
    t_end: T,
) -> Result<(Trajectory<T>, Trajectory<T>)> {
    check_state(model, x0, "initial state")?;
    check_state(model, dx0, "initial variation")?;
    let n = model.n();
    let z0: Vec<T> = x0.iter().chain(dx0).copied().collect();
    let joint = integrate_field(&prolonged_field(model), &z0, dt, t_end)?;
    let split = |range: std::ops::Range<usize>| Trajectory {
        dt,
        times: joint.times.clone(),
        states: joint.states.iter().map(|z| z[range.clone()].to_vec()).collect(),
    };
    Ok((split(0..n), split(n..2 * n)))
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttractorClass<T> {
    FixedPoint { state: Vec<T> },
    PeriodicOrbit { period: T, amplitude: T },
    Unknown { diagnostics: String },
}

impl<T> AttractorClass<T> {
    pub fn kind(&self) -> &'static str {
        match self {
            AttractorClass::FixedPoint { .. } => "fixed_point",
            AttractorClass::PeriodicOrbit { .. } => "periodic_orbit",
            AttractorClass::Unknown { .. } => "unknown",
        }
    }
}

fn dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum::<T>().sqrt()
}

fn norm<T: Scalar>(a: &[T]) -> T {
    a.iter().map(|&x| x * x).sum::<T>().sqrt()
}

/// Half of the per-coordinate range, as a vector norm.
fn amplitude<T: Scalar>(states: &[Vec<T>]) -> T {
    let n = states[0].len();
    let half: Vec<T> = (0..n)
        .map(|i| {
            let (lo, hi) = states.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), x| {
                (lo.min(x[i]), hi.max(x[i]))
            });
            (hi - lo) / T::lit(2.0)
        })
        .collect();
    norm(&half)
}

pub const MIN_TAIL_SAMPLES: usize = 100;

/// Classifies the asymptotic behaviour visible in the last `tail_fraction`
/// of the trajectory. `tol = None` uses `1e-4·(1 + ‖x(T)‖)`.
pub fn classify_attractor<T: Scalar>(traj: &Trajectory<T>, tail_fraction: T, tol: Option<T>) -> AttractorClass<T> {
    let unknown = |d: String| AttractorClass::Unknown { diagnostics: d };
    if traj.is_empty() || !(tail_fraction > T::zero()) || tail_fraction > T::one() {
        return unknown("empty trajectory or tail fraction outside (0, 1]".into());
    }
    let len = traj.len();
    let tail_len = (T::lit(len as f64) * tail_fraction)
        .floor()
        .to_usize()
        .unwrap_or(0)
        .min(len);
    if tail_len < MIN_TAIL_SAMPLES {
        return unknown(format!("tail has {tail_len} samples, need {MIN_TAIL_SAMPLES}"));
    }
    let tail = &traj.states[len - tail_len..];
    let end = traj.last();
    let tol = tol.unwrap_or_else(|| T::lit(1e-4) * (T::one() + norm(end)));

    let d: Vec<T> = tail.iter().map(|x| dist(x, end)).collect();
    let displacement = d.iter().fold(T::zero(), |a, &b| a.max(b));
    if displacement <= tol {
        return AttractorClass::FixedPoint { state: end.to_vec() };
    }

    let amp = amplitude(tail);
    if amp <= T::lit(10.0) * tol {
        return unknown(format!(
            "tail drifts by {displacement:e} with amplitude {amp:e}, below the orbit threshold {:e}",
            T::lit(10.0) * tol
        ));
    }
    let (first, second) = tail.split_at(tail_len / 2);
    let (a1, a2) = (amplitude(first), amplitude(second));
    if (a1 - a2).abs() > T::lit(0.1) * a2 {
        return unknown(format!(
            "oscillation amplitude drifts from {a1:e} to {a2:e} across the tail"
        ));
    }

    // Returns to the neighbourhood of the final state.
    let near = (T::lit(0.02) * displacement).max(T::lit(10.0) * tol);
    let mut returns: Vec<usize> = (1..tail_len - 1)
        .filter(|&i| d[i] <= near && d[i] <= d[i - 1] && d[i] < d[i + 1])
        .collect();
    returns.push(tail_len - 1);
    if returns.len() < 3 {
        return unknown(format!(
            "only {} recurrences within {near:e} of the final state",
            returns.len() - 1
        ));
    }
    let gaps: Vec<T> = returns.windows(2).map(|w| T::lit((w[1] - w[0]) as f64)).collect();
    let m = T::lit(gaps.len() as f64);
    let mean = gaps.iter().copied().sum::<T>() / m;
    let sd = (gaps.iter().map(|&g| (g - mean) * (g - mean)).sum::<T>() / m).sqrt();
    if sd > T::lit(0.05) * mean {
        return unknown(format!(
            "recurrence spacing is irregular (mean {mean:e} samples, std {sd:e})"
        ));
    }
    AttractorClass::PeriodicOrbit {
        period: mean * traj.dt,
        amplitude: amp,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayVerdict<T> {
    pub holds: bool,
    /// Largest increase of `e^{2λt}V(x−y)` between samples, relative to its running magnitude.
    pub worst_violation: T,
    pub samples: usize,
}

pub const DECAY_REL_TOL: f64 = 1e-6;

/// Checks that `t ↦ e^{2λt}(x(t)−y(t))ᵀP(x(t)−y(t))` is nonincreasing.
#[allow(clippy::too_many_arguments)]
pub fn check_incremental_decay<T: Scalar>(
    model: &ModelDef<T>,
    p: &SymMatrix<T>,
    lambda: T,
    x0: &[T],
    y0: &[T],
    dt: T,
    t_end: T,
) -> Result<DecayVerdict<T>> {
    if p.n() != model.n() {
        return Err(Error::DimensionMismatch(format!(
            "storage is {}x{}, model has {} states",
            p.n(),
            p.n(),
            model.n()
        )));
    }
    let xs = integrate(model, x0, dt, t_end)?;
    let ys = integrate(model, y0, dt, t_end)?;
    let w: Vec<T> = xs
        .states
        .iter()
        .zip(&ys.states)
        .zip(&xs.times)
        .map(|((x, y), &t)| {
            let z: Vec<T> = x.iter().zip(y).map(|(&a, &b)| a - b).collect();
            (T::lit(2.0) * lambda * t).exp() * p.quad_form(&z)
        })
        .collect();
    let mut scale = w[0].abs();
    let mut worst = T::zero();
    for k in 0..w.len() - 1 {
        scale = scale.max(w[k + 1].abs());
        if scale > T::zero() {
            worst = worst.max((w[k + 1] - w[k]) / scale);
        }
    }
    Ok(DecayVerdict {
        holds: worst <= T::lit(DECAY_REL_TOL),
        worst_violation: worst,
        samples: w.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeVerdict<T> {
    pub holds: bool,
    /// Largest `V(δx)/|δx|²` seen along the flow.
    pub worst: T,
}

pub const CONE_TOL: f64 = 1e-8;

/// Forward invariance of `{δx : δxᵀPδx ≤ 0}` under the prolonged flow.
pub fn cone_invariance_check<T: Scalar>(
    model: &ModelDef<T>,
    p: &SymMatrix<T>,
    x0: &[T],
    dx0: &[T],
    dt: T,
    t_end: T,
) -> Result<ConeVerdict<T>> {
    check_state(model, x0, "initial state")?;
    check_state(model, dx0, "initial variation")?;
    if p.n() != model.n() {
        return Err(Error::DimensionMismatch("storage does not match the model".into()));
    }
    let steps = check_grid(dt, t_end)?;
    let n0 = norm(dx0);
    if !(n0 > T::zero()) {
        return Err(Error::Precondition("initial variation must be nonzero".into()));
    }
    let tol = T::lit(CONE_TOL);
    let ratio = |dx: &[T]| p.quad_form(dx) / dx.iter().map(|&v| v * v).sum::<T>();
    let start = ratio(dx0);
    if start > tol {
        return Err(Error::Precondition(format!(
            "initial variation lies outside the cone (V/|δx|² = {start:e})"
        )));
    }
    let f = prolonged_field(model);
    let n = model.n();
    let mut z: Vec<T> = x0.iter().copied().chain(dx0.iter().map(|&v| v / n0)).collect();
    let mut worst = start;
    for k in 1..=steps {
        z = rk4_step(&f, &z, dt);
        if diverged(&z) {
            return Err(Error::Divergence {
                time: (dt * T::lit(k as f64)).to_f64_lossy(),
            });
        }
        let nd = norm(&z[n..]);
        if !(nd > T::zero()) {
            return Err(Error::NumericFailure("variation collapsed to zero".into()));
        }
        for v in &mut z[n..] {
            *v /= nd;
        }
        worst = worst.max(ratio(&z[n..]));
    }
    Ok(ConeVerdict {
        holds: worst <= tol,
        worst,
    })
}
