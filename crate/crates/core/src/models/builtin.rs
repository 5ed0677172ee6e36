use std::collections::BTreeMap;
use std::sync::Arc;

use super::{EntryBound, ModelDef, Ports};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

const NAMES: &[&str] = &[
    "duffing",
    "duffing_linear",
    "duffing_convex",
    "duffing_double_well",
    "duffing_polynomial",
    "pendulum",
    "duffing_dc",
    "duffing_dc_pi",
    "mass_spring_tanh_P",
    "mass_spring_tanh_PI",
    "pi_controller",
    "linear",
];

pub fn builtin_names() -> &'static [&'static str] {
    NAMES
}

#[derive(Debug, Clone, Copy)]
enum Potential {
    Linear {
        k: f64,
    },
    /// `α = 3x + 2 sin x`, slope in `[1, 5]`.
    Convex,
    /// `α = x/2 − sin x`, the force of `U = x²/4 + cos x`.
    DoubleWell,
    /// `α = a x³ − b x`, slope bounded only on `|x| ≤ x_max`.
    Polynomial {
        a: f64,
        b: f64,
        x_max: f64,
    },
    Sine,
}

impl Potential {
    fn alpha<T: Scalar>(self, x: T) -> T {
        match self {
            Potential::Linear { k } => T::lit(k) * x,
            Potential::Convex => T::lit(3.0) * x + T::lit(2.0) * x.sin(),
            Potential::DoubleWell => x / T::lit(2.0) - x.sin(),
            Potential::Polynomial { a, b, .. } => T::lit(a) * x * x * x - T::lit(b) * x,
            Potential::Sine => x.sin(),
        }
    }

    fn slope<T: Scalar>(self, x: T) -> T {
        match self {
            Potential::Linear { k } => T::lit(k),
            Potential::Convex => T::lit(3.0) + T::lit(2.0) * x.cos(),
            Potential::DoubleWell => T::lit(0.5) - x.cos(),
            Potential::Polynomial { a, b, .. } => T::lit(3.0 * a) * x * x - T::lit(b),
            Potential::Sine => x.cos(),
        }
    }

    /// Exact range of the slope over the region the model is meant for.
    fn slope_range(self) -> (f64, f64) {
        match self {
            Potential::Linear { k } => (k, k),
            Potential::Convex => (1.0, 5.0),
            Potential::DoubleWell => (-0.5, 1.5),
            Potential::Polynomial { a, b, x_max } => (-b, 3.0 * a * x_max * x_max - b),
            Potential::Sine => (-1.0, 1.0),
        }
    }

    fn default_bounds(self) -> (f64, f64) {
        match self {
            Potential::DoubleWell => (-2.0, 5.0),
            other => other.slope_range(),
        }
    }
}

fn potential_of(name: &str, p: &BTreeMap<String, f64>) -> Option<Potential> {
    Some(match name {
        "duffing" | "duffing_double_well" | "duffing_dc" | "duffing_dc_pi" => Potential::DoubleWell,
        "duffing_linear" => Potential::Linear { k: p["k"] },
        "duffing_convex" => Potential::Convex,
        "duffing_polynomial" => Potential::Polynomial {
            a: p["a"],
            b: p["b"],
            x_max: p["x_max"],
        },
        "pendulum" => Potential::Sine,
        _ => return None,
    })
}

fn base_defaults(name: &str) -> Result<Vec<(&'static str, f64)>> {
    let mech = [("c", 5.0)];
    let mut d: Vec<(&'static str, f64)> = match name {
        "duffing" | "duffing_convex" | "duffing_double_well" | "pendulum" => {
            vec![mech[0], ("u", 0.0)]
        }
        "duffing_linear" => vec![mech[0], ("u", 0.0), ("k", 1.0)],
        "duffing_polynomial" => vec![mech[0], ("u", 0.0), ("a", 7.0 / 75.0), ("b", 2.0), ("x_max", 5.0)],
        "duffing_dc" => vec![mech[0], ("R", 1.0), ("k_f", 1.0), ("k_e", 1.0), ("L", 0.1), ("V", 0.0)],
        "duffing_dc_pi" => vec![
            mech[0],
            ("R", 1.0),
            ("k_f", 1.0),
            ("k_e", 1.0),
            ("L", 0.1),
            ("k_p", 1.0),
            ("k_i", 5.0),
            ("r", 0.0),
            ("pi_voltage_input", 0.0),
        ],
        "mass_spring_tanh_P" => vec![("k", 1.0), mech[0], ("k_p", 1.0), ("v", 0.0)],
        "mass_spring_tanh_PI" => vec![
            ("k", 1.0),
            mech[0],
            ("k_p", 1.0),
            ("k_i", -1.0),
            ("v", 0.0),
            ("output", 0.0),
            ("kappa", 0.0),
        ],
        "pi_controller" => vec![("k_i", -1.0), ("dkp_lo", 0.0), ("dkp_hi", 2.0), ("ubar", 0.0)],
        "linear" => vec![("a", -1.0)],
        other => return Err(Error::UnknownModel(other.to_string())),
    };
    if name.starts_with("duffing") || name == "pendulum" {
        d.push(("dalpha_lo", f64::NAN));
        d.push(("dalpha_hi", f64::NAN));
    }
    Ok(d)
}

/// Parameter defaults of a builtin, with derived slope bounds filled in.
pub fn default_params(name: &str) -> Result<BTreeMap<String, f64>> {
    let mut map: BTreeMap<String, f64> = base_defaults(name)?
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    if let Some(pot) = potential_of(name, &map) {
        let (lo, hi) = pot.default_bounds();
        map.insert("dalpha_lo".into(), lo);
        map.insert("dalpha_hi".into(), hi);
    }
    Ok(map)
}

fn merge(name: &str, overrides: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>> {
    let mut map: BTreeMap<String, f64> = base_defaults(name)?
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    for (k, &v) in overrides {
        match map.get_mut(k) {
            Some(slot) => *slot = v,
            None => return Err(Error::InvalidInput(format!("model `{name}` has no parameter `{k}`"))),
        }
        if !v.is_finite() {
            return Err(Error::ParameterOutOfRange(format!("{k} = {v} is not finite")));
        }
    }
    if let Some(pot) = potential_of(name, &map) {
        let (dlo, dhi) = pot.default_bounds();
        for (key, def) in [("dalpha_lo", dlo), ("dalpha_hi", dhi)] {
            let slot = map.get_mut(key).expect("slope bound key");
            if slot.is_nan() {
                *slot = def;
            }
        }
    }
    Ok(map)
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::ParameterOutOfRange(msg()))
    }
}

fn check_flag(p: &BTreeMap<String, f64>, key: &str) -> Result<bool> {
    let v = p[key];
    require(v == 0.0 || v == 1.0, || format!("{key} must be 0 or 1, got {v}"))?;
    Ok(v == 1.0)
}

fn slope_bounds(pot: Potential, p: &BTreeMap<String, f64>) -> Result<(f64, f64)> {
    let (lo, hi) = (p["dalpha_lo"], p["dalpha_hi"]);
    let (tlo, thi) = pot.slope_range();
    let slack = 1e-12 * (1.0 + tlo.abs().max(thi.abs()));
    require(lo <= hi, || format!("dalpha_lo = {lo} exceeds dalpha_hi = {hi}"))?;
    require(lo <= tlo + slack && hi >= thi - slack, || {
        format!("slope bounds [{lo}, {hi}] do not enclose the spring slope range [{tlo}, {thi}]")
    })?;
    Ok((lo, hi))
}

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn col<T: Scalar>(v: &[f64]) -> Matrix<T> {
    Matrix::column(&v.iter().map(|&x| T::lit(x)).collect::<Vec<_>>())
}

fn row<T: Scalar>(v: &[f64]) -> Matrix<T> {
    Matrix::row(&v.iter().map(|&x| T::lit(x)).collect::<Vec<_>>())
}

fn mat<T: Scalar>(rows: &[&[f64]]) -> Matrix<T> {
    Matrix::from_f64_rows(rows).expect("static model matrix")
}

fn bound<T: Scalar>(row: usize, col: usize, lo: f64, hi: f64, label: &str) -> EntryBound<T> {
    EntryBound {
        row,
        col,
        lo: T::lit(lo),
        hi: T::lit(hi),
        label: label.to_string(),
    }
}

/// Builds a builtin model with the given parameter overrides.
pub fn builtin<T: Scalar>(name: &str, overrides: &BTreeMap<String, f64>) -> Result<ModelDef<T>> {
    let p = merge(name, overrides)?;
    match name {
        "duffing" | "duffing_linear" | "duffing_convex" | "duffing_double_well" | "duffing_polynomial" | "pendulum" => {
            duffing(name, p)
        }
        "duffing_dc" => duffing_dc(p),
        "duffing_dc_pi" => duffing_dc_pi(p),
        "mass_spring_tanh_P" => tanh_p(p),
        "mass_spring_tanh_PI" => tanh_pi(p),
        "pi_controller" => pi_controller(p),
        "linear" => {
            let a = p["a"];
            let m = ModelDef::linear(mat(&[&[a]]))?;
            let m = m.with_ports(Ports {
                b: mat(&[&[1.0]]),
                c: mat(&[&[1.0]]),
                d: vec![mat(&[&[0.0]])],
            })?;
            Ok(ModelDef { params: p, ..m })
        }
        other => Err(Error::UnknownModel(other.to_string())),
    }
}

fn duffing<T: Scalar>(name: &str, p: BTreeMap<String, f64>) -> Result<ModelDef<T>> {
    let pot = potential_of(name, &p).expect("mechanical model");
    let c = p["c"];
    require(c >= 0.0, || format!("damping c = {c} must be >= 0"))?;
    if let Potential::Polynomial { a, x_max, .. } = pot {
        require(a >= 0.0 && x_max > 0.0, || {
            "polynomial spring needs a >= 0, x_max > 0".into()
        })?;
    }
    let (lo, hi) = slope_bounds(pot, &p)?;
    let u = T::lit(p["u"]);
    let ct = T::lit(c);
    ModelDef::new(
        name,
        names(&["x_p", "x_v"]),
        p,
        Arc::new(move |x: &[T]| vec![x[1], -pot.alpha(x[0]) - ct * x[1] + u]),
        Arc::new(move |x: &[T]| {
            let mut j = Matrix::zeros(2, 2);
            j[(0, 1)] = T::one();
            j[(1, 0)] = -pot.slope(x[0]);
            j[(1, 1)] = -ct;
            j
        }),
        mat(&[&[0.0, 1.0], &[0.0, -c]]),
        vec![bound(1, 0, -hi, -lo, "-dalpha(x_p)")],
        Some(Ports {
            b: col(&[0.0, 1.0]),
            c: row(&[-1.0, 0.0]),
            d: vec![mat(&[&[0.0]])],
        }),
    )
}

struct Electrical {
    r: f64,
    k_f: f64,
    k_e: f64,
    l: f64,
}

fn electrical(p: &BTreeMap<String, f64>) -> Result<Electrical> {
    let e = Electrical {
        r: p["R"],
        k_f: p["k_f"],
        k_e: p["k_e"],
        l: p["L"],
    };
    require(e.l > 0.0, || format!("inductance L = {} must be > 0", e.l))?;
    require(e.r > 0.0, || format!("resistance R = {} must be > 0", e.r))?;
    require(p["c"] >= 0.0, || format!("damping c = {} must be >= 0", p["c"]))?;
    Ok(e)
}

fn duffing_dc<T: Scalar>(p: BTreeMap<String, f64>) -> Result<ModelDef<T>> {
    let pot = Potential::DoubleWell;
    let e = electrical(&p)?;
    let (lo, hi) = slope_bounds(pot, &p)?;
    let (c, v) = (p["c"], p["V"]);
    let [ct, vt, rt, kft, ket, lt] = [c, v, e.r, e.k_f, e.k_e, e.l].map(T::lit);
    let template = mat(&[&[0.0, 1.0, 0.0], &[0.0, -c, e.k_f], &[0.0, -e.k_e / e.l, -e.r / e.l]]);
    let jt = template.clone();
    ModelDef::new(
        "duffing_dc",
        names(&["x_p", "x_v", "x_i"]),
        p,
        Arc::new(move |x: &[T]| {
            vec![
                x[1],
                -pot.alpha(x[0]) - ct * x[1] + kft * x[2],
                (-rt * x[2] - ket * x[1] + vt) / lt,
            ]
        }),
        Arc::new(move |x: &[T]| {
            let mut j = jt.clone();
            j[(1, 0)] = -pot.slope(x[0]);
            j
        }),
        template,
        vec![bound(1, 0, -hi, -lo, "-dalpha(x_p)")],
        Some(Ports {
            b: col(&[0.0, 0.0, 1.0 / e.l]),
            c: row(&[1.0, 0.0, 0.0]),
            d: vec![mat(&[&[0.0]])],
        }),
    )
}

fn duffing_dc_pi<T: Scalar>(p: BTreeMap<String, f64>) -> Result<ModelDef<T>> {
    let pot = Potential::DoubleWell;
    let e = electrical(&p)?;
    let (lo, hi) = slope_bounds(pot, &p)?;
    let physical = check_flag(&p, "pi_voltage_input")?;
    let s = if physical { 1.0 / e.l } else { 1.0 };
    let (c, kp, ki, r) = (p["c"], p["k_p"], p["k_i"], p["r"]);
    let [ct, rt, kft, ket, lt, kpt, kit, reft, st] = [c, e.r, e.k_f, e.k_e, e.l, kp, ki, r, s].map(T::lit);
    let template = mat(&[
        &[0.0, 1.0, 0.0, 0.0],
        &[0.0, -c, e.k_f, 0.0],
        &[-s * kp, -e.k_e / e.l, -e.r / e.l, s * ki],
        &[-1.0, 0.0, 0.0, 0.0],
    ]);
    let jt = template.clone();
    ModelDef::new(
        "duffing_dc_pi",
        names(&["x_p", "x_v", "x_i", "x_c"]),
        p,
        Arc::new(move |x: &[T]| {
            let volt = kpt * (reft - x[0]) + kit * x[3];
            vec![
                x[1],
                -pot.alpha(x[0]) - ct * x[1] + kft * x[2],
                (-rt * x[2] - ket * x[1]) / lt + st * volt,
                reft - x[0],
            ]
        }),
        Arc::new(move |x: &[T]| {
            let mut j = jt.clone();
            j[(1, 0)] = -pot.slope(x[0]);
            j
        }),
        template,
        vec![bound(1, 0, -hi, -lo, "-dalpha(x_p)")],
        None,
    )
}

fn sech2<T: Scalar>(z: T) -> T {
    let t = z.tanh();
    T::one() - t * t
}

fn tanh_p<T: Scalar>(p: BTreeMap<String, f64>) -> Result<ModelDef<T>> {
    let (k, c, kp, v) = (p["k"], p["c"], p["k_p"], p["v"]);
    require(kp >= 0.0, || format!("k_p = {kp} must be >= 0 (monotone feedback)"))?;
    require(c >= 0.0, || format!("damping c = {c} must be >= 0"))?;
    let [kt, ct, kpt, vt] = [k, c, kp, v].map(T::lit);
    let two = T::lit(2.0);
    ModelDef::new(
        "mass_spring_tanh_P",
        names(&["x_p", "x_v"]),
        p,
        Arc::new(move |x: &[T]| vec![x[1], -kt * x[0] - ct * x[1] + kpt * (two * x[0]).tanh() + vt]),
        Arc::new(move |x: &[T]| {
            let mut j = Matrix::zeros(2, 2);
            j[(0, 1)] = T::one();
            j[(1, 0)] = -kt + two * kpt * sech2(two * x[0]);
            j[(1, 1)] = -ct;
            j
        }),
        mat(&[&[0.0, 1.0], &[0.0, -c]]),
        vec![bound(1, 0, -k, -k + 2.0 * kp, "-k + dk_p(x_p)")],
        Some(Ports {
            b: col(&[0.0, 1.0]),
            c: row(&[1.0, 0.0]),
            d: vec![mat(&[&[0.0]])],
        }),
    )
}

fn tanh_pi<T: Scalar>(p: BTreeMap<String, f64>) -> Result<ModelDef<T>> {
    let (k, c, kp, ki, v, kappa) = (p["k"], p["c"], p["k_p"], p["k_i"], p["v"], p["kappa"]);
    let output = check_flag(&p, "output")? as usize;
    require(kp >= 0.0, || format!("k_p = {kp} must be >= 0 (monotone feedback)"))?;
    require(c >= 0.0, || format!("damping c = {c} must be >= 0"))?;
    let [kt, ct, kpt, kit, vt, kat] = [k, c, kp, ki, v, kappa].map(T::lit);
    let two = T::lit(2.0);
    let template = mat(&[&[0.0, 1.0, 0.0], &[0.0, -c, ki], &[1.0, 0.0, 0.0]]);
    let mut spring = (-k, -k + 2.0 * kp);
    let mut bounds = Vec::new();
    if output == 0 {
        spring = (spring.0 - kappa.abs(), spring.1 + kappa.abs());
    } else {
        bounds.push(bound(1, 1, -kappa.abs(), kappa.abs(), "dDelta(x_v)"));
    }
    bounds.insert(0, bound(1, 0, spring.0, spring.1, "-k + dk_p(x_p)"));
    let mut c_out = [0.0; 3];
    c_out[output] = 1.0;
    ModelDef::new(
        "mass_spring_tanh_PI",
        names(&["x_p", "x_v", "x_c"]),
        p,
        Arc::new(move |x: &[T]| {
            let u = kpt * (two * x[0]).tanh() + kit * x[2] + vt + kat * x[output].sin();
            vec![x[1], -kt * x[0] - ct * x[1] + u, x[0]]
        }),
        Arc::new(move |x: &[T]| {
            let mut j = Matrix::zeros(3, 3);
            j[(0, 1)] = T::one();
            j[(1, 0)] = -kt + two * kpt * sech2(two * x[0]);
            j[(1, 1)] = -ct;
            j[(1, 2)] = kit;
            j[(2, 0)] = T::one();
            j[(1, output)] += kat * x[output].cos();
            j
        }),
        template,
        bounds,
        Some(Ports {
            b: col(&[0.0, 1.0, 0.0]),
            c: row(&c_out),
            d: vec![mat(&[&[0.0]])],
        }),
    )
}

fn pi_controller<T: Scalar>(p: BTreeMap<String, f64>) -> Result<ModelDef<T>> {
    let (ki, lo, hi, ubar) = (p["k_i"], p["dkp_lo"], p["dkp_hi"], p["ubar"]);
    require(0.0 <= lo && lo <= hi, || {
        format!("proportional slope bounds must satisfy 0 <= lo <= hi, got [{lo}, {hi}]")
    })?;
    let mut d = vec![mat(&[&[lo]])];
    if hi != lo {
        d.push(mat(&[&[hi]]));
    }
    let u = T::lit(ubar);
    ModelDef::new(
        "pi_controller",
        names(&["x_c"]),
        p,
        Arc::new(move |_: &[T]| vec![u]),
        Arc::new(|_: &[T]| Matrix::zeros(1, 1)),
        Matrix::zeros(1, 1),
        Vec::new(),
        Some(Ports {
            b: mat(&[&[1.0]]),
            c: mat(&[&[ki]]),
            d,
        }),
    )
}
