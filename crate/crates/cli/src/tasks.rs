use std::path::PathBuf;

use anyhow::{anyhow, bail, Context};
use domcert_core::dissipativity::{min_gain_with, solve_dissipativity_with, DissipativityOptions, MinGainOptions};
use domcert_core::dominance::{
    default_margin_band, rate_search, solve_dominance_with, spectral_scan, spectral_split, DominanceOptions,
};
use domcert_core::interconnect::negative_feedback_matrix;
use domcert_core::models::{classify_attractor, coordinate_grid, integrate};
use domcert_core::sdp::{verify_solution, SdpProblem};
use domcert_core::{
    aggregate_certificates, build_closed_loop_family, builtin, compose_supplies, gain_supply, inertia,
    passivity_supply, scale_supply, AttractorClass, DissipativityCertificate, DominanceCertificate, Error, Matrix,
    ModelDef, OpenVertex, OpenVertexFamily, Split, SupplyRate, SymMatrix, VertexFamily,
};
use serde_json::json;

use crate::config::{LoadedConfig, ModelSpec, Normalization, SupplyKind, SupplySpec, DEFAULTS};
use crate::plot;
use crate::report::{write_atomic, CertificateEntry, CertificateKind, FamilyRecord, IntervalRecord, Report};

pub enum Outcome {
    Ok,
    Infeasible(String),
}

pub type TaskResult = anyhow::Result<Outcome>;

pub struct Ctx<'a> {
    pub cfg: &'a LoadedConfig,
    pub report: &'a mut Report,
    /// Stem for plot-data siblings; `None` disables them.
    pub plot_base: Option<PathBuf>,
}

impl Ctx<'_> {
    fn emit(&mut self, suffix: &str, contents: &str) -> anyhow::Result<()> {
        if let Some(base) = &self.plot_base {
            let path = PathBuf::from(format!("{}.{suffix}", base.display()));
            write_atomic(&path, contents.as_bytes()).with_context(|| format!("writing {}", path.display()))?;
            self.report.artifacts.push(path.display().to_string());
        }
        Ok(())
    }

    fn epsilon(&self) -> f64 {
        self.cfg.config.task.epsilon.unwrap_or(DEFAULTS.epsilon)
    }

    fn norm_bound(&self) -> f64 {
        self.cfg.config.task.norm_bound.unwrap_or(DEFAULTS.norm_bound)
    }

    fn lambda(&self) -> anyhow::Result<f64> {
        self.cfg
            .config
            .task
            .lambda
            .ok_or_else(|| anyhow!("task.lambda is required"))
    }

    fn model(&self) -> anyhow::Result<&ModelSpec> {
        self.cfg
            .config
            .model
            .as_ref()
            .ok_or_else(|| anyhow!("config has no [model] section"))
    }
}

/// Infeasibility-type core errors become an infeasible outcome; the rest propagate.
fn soft<T>(r: domcert_core::Result<T>) -> anyhow::Result<Result<T, String>> {
    match r {
        Ok(v) => Ok(Ok(v)),
        Err(e) if e.is_infeasibility() => Ok(Err(e.to_string())),
        Err(e) => Err(e.into()),
    }
}

fn matrix(rows: &[Vec<f64>], what: &str) -> anyhow::Result<Matrix<f64>> {
    Matrix::from_f64_rows(rows).with_context(|| format!("{what} is not a rectangular matrix"))
}

fn rows(m: &Matrix<f64>) -> Vec<Vec<f64>> {
    m.to_rows_f64()
}

fn builtin_model(spec: &ModelSpec) -> anyhow::Result<Option<ModelDef<f64>>> {
    match (&spec.name, &spec.vertices) {
        (Some(_), Some(_)) => bail!("model: give either `name` or `vertices`, not both"),
        (Some(name), None) => Ok(Some(
            builtin(name, &spec.params).with_context(|| format!("model `{name}`"))?,
        )),
        (None, Some(_)) => {
            if !spec.params.is_empty() {
                bail!("model.params only applies to builtin models");
            }
            Ok(None)
        }
        (None, None) => bail!("model: one of `name` or `vertices` is required"),
    }
}

fn explicit_vertices(spec: &ModelSpec) -> anyhow::Result<Vec<Matrix<f64>>> {
    let v = spec
        .vertices
        .as_ref()
        .ok_or_else(|| anyhow!("model.vertices missing"))?;
    v.iter()
        .enumerate()
        .map(|(k, a)| matrix(a, &format!("model.vertices[{k}]")))
        .collect()
}

fn state_family(spec: &ModelSpec) -> anyhow::Result<VertexFamily<f64>> {
    match builtin_model(spec)? {
        Some(md) => Ok(md.jacobian_vertices()?),
        None => Ok(VertexFamily::new(explicit_vertices(spec)?)?),
    }
}

fn open_family(spec: &ModelSpec) -> anyhow::Result<OpenVertexFamily<f64>> {
    if let Some(md) = builtin_model(spec)? {
        return md
            .open_family()
            .with_context(|| format!("model `{}` has no input/output ports", md.name));
    }
    let a = explicit_vertices(spec)?;
    let b = matrix(
        spec.b
            .as_ref()
            .ok_or_else(|| anyhow!("model.b is required for open models"))?,
        "model.b",
    )?;
    let c = matrix(
        spec.c
            .as_ref()
            .ok_or_else(|| anyhow!("model.c is required for open models"))?,
        "model.c",
    )?;
    let d = match &spec.d {
        Some(d) => matrix(d, "model.d")?,
        None => Matrix::zeros(c.rows(), b.cols()),
    };
    Ok(OpenVertexFamily::from_state_vertices(&a, b, c, d)?)
}

fn simulation_model(spec: &ModelSpec) -> anyhow::Result<ModelDef<f64>> {
    match builtin_model(spec)? {
        Some(md) => Ok(md),
        None => {
            let mut v = explicit_vertices(spec)?;
            if v.len() != 1 {
                bail!(
                    "simulating explicit vertices needs exactly one (linear) vertex, got {}",
                    v.len()
                );
            }
            Ok(ModelDef::linear(v.remove(0))?)
        }
    }
}

fn samples(spec: &ModelSpec) -> anyhow::Result<Vec<Matrix<f64>>> {
    match (&spec.samples, builtin_model(spec)?) {
        (Some(g), Some(md)) => {
            let base = g.base.clone().unwrap_or_else(|| vec![0.0; md.n()]);
            if base.len() != md.n() {
                bail!(
                    "model.samples.base has length {}, model has {} states",
                    base.len(),
                    md.n()
                );
            }
            let grid = coordinate_grid(&base, g.coordinate, g.lo, g.hi, g.count).context("model.samples")?;
            Ok(md.jacobian_samples(&grid)?)
        }
        (Some(_), None) => bail!("model.samples needs a builtin model"),
        (None, _) => Ok(state_family(spec)?.vertices().to_vec()),
    }
}

fn supply(spec: Option<&SupplySpec>, m_y: usize, m_u: usize) -> anyhow::Result<SupplyRate<f64>> {
    let kind = spec.map_or(SupplyKind::Passivity, |s| s.kind);
    let base = match kind {
        SupplyKind::Passivity => {
            if m_y != m_u {
                bail!("supply: passivity needs as many outputs as inputs, got {m_y} and {m_u}");
            }
            passivity_supply(m_u)?
        }
        SupplyKind::Gain => gain_supply(
            m_y,
            m_u,
            spec.and_then(|s| s.gamma)
                .ok_or_else(|| anyhow!("supply.gamma is required"))?,
        )?,
        SupplyKind::Zero => SupplyRate::zero(m_y, m_u),
        SupplyKind::Custom => {
            let s = spec.expect("custom kind comes from a spec");
            let q = s.q.as_ref().ok_or_else(|| anyhow!("supply.q is required"))?;
            let l = s.l.as_ref().ok_or_else(|| anyhow!("supply.l is required"))?;
            let r = s.r.as_ref().ok_or_else(|| anyhow!("supply.r is required"))?;
            SupplyRate::new(
                SymMatrix::new(matrix(q, "supply.q")?)?,
                matrix(l, "supply.l")?,
                SymMatrix::new(matrix(r, "supply.r")?)?,
            )?
        }
    };
    match spec.and_then(|s| s.tau) {
        Some(t) => Ok(scale_supply(&base, t)?),
        None => Ok(base),
    }
}

fn dominance_entry(role: &str, cert: &DominanceCertificate<f64>, fam: &VertexFamily<f64>) -> CertificateEntry {
    CertificateEntry {
        role: role.into(),
        kind: CertificateKind::Dominance,
        certificate: cert.to_record(),
        family: FamilyRecord {
            a: fam.vertices().iter().map(rows).collect(),
            ..FamilyRecord::default()
        },
    }
}

fn dissipativity_entry(
    role: &str,
    cert: &DissipativityCertificate<f64>,
    fam: &OpenVertexFamily<f64>,
) -> CertificateEntry {
    let v = fam.vertices();
    CertificateEntry {
        role: role.into(),
        kind: CertificateKind::Dissipativity,
        certificate: cert.to_record(),
        family: FamilyRecord {
            a: v.iter().map(|x| rows(&x.a)).collect(),
            b: Some(v.iter().map(|x| rows(&x.b)).collect()),
            c: Some(v.iter().map(|x| rows(&x.c)).collect()),
            d: Some(v.iter().map(|x| rows(&x.d)).collect()),
        },
    }
}

fn emit_locus_and_cone(ctx: &mut Ctx, spec: &ModelSpec, p: Option<&SymMatrix<f64>>) -> anyhow::Result<()> {
    if ctx.plot_base.is_none() {
        return Ok(());
    }
    let s = samples(spec)?;
    ctx.emit("locus.csv", &plot::locus_csv(&s)?)?;
    if let Some(p) = p.filter(|p| p.n() == 2) {
        ctx.emit("cone.csv", &plot::cone_csv(p)?)?;
    }
    Ok(())
}

fn split_json(s: Split) -> serde_json::Value {
    match s {
        Split::ConsistentSplit(p) => json!({ "consistent": true, "p": p }),
        Split::NoSplit => json!({ "consistent": false }),
    }
}

pub fn scan(ctx: &mut Ctx) -> TaskResult {
    let spec = ctx.model()?.clone();
    let grid = ctx
        .cfg
        .config
        .task
        .lambda_grid
        .ok_or_else(|| anyhow!("task.lambda_grid is required"))?
        .points()?;
    let s = samples(&spec)?;
    let rep = spectral_scan(&s, &grid, None)?;
    ctx.report.intervals = rep
        .intervals
        .iter()
        .map(|iv| IntervalRecord {
            lo: iv.lo,
            hi: iv.hi,
            p: iv.p,
            resolution: iv.resolution,
        })
        .collect();
    let per: Vec<_> = rep
        .lambda_grid
        .iter()
        .zip(&rep.per_lambda)
        .map(|(l, s)| json!({ "lambda": l, "split": split_json(*s) }))
        .collect();
    ctx.report.detail("samples", s.len());
    ctx.report.detail("per_lambda", per);
    emit_locus_and_cone(ctx, &spec, None)?;
    if rep.intervals.is_empty() {
        return Ok(Outcome::Infeasible(
            "no rate on the grid splits every sampled Jacobian consistently".into(),
        ));
    }
    Ok(Outcome::Ok)
}

pub fn analyze(ctx: &mut Ctx) -> TaskResult {
    let spec = ctx.model()?.clone();
    let fam = state_family(&spec)?;
    let eps = ctx.epsilon();
    let want = ctx.cfg.config.task.p;
    let cert = if let Some(lambda) = ctx.cfg.config.task.lambda {
        let pre = spectral_scan(fam.vertices(), &[lambda], None)?.per_lambda[0];
        let mut splits = Vec::new();
        for a in fam.vertices() {
            let (right, left) = spectral_split(a, lambda, default_margin_band(a))?;
            splits.push(json!({ "right_of_rate": right, "left_of_rate": left }));
        }
        ctx.report.detail(
            "prefilter",
            json!({ "lambda": lambda, "split": split_json(pre), "vertices": splits }),
        );
        match (pre, want) {
            (Split::NoSplit, _) => {
                emit_locus_and_cone(ctx, &spec, None)?;
                return Ok(Outcome::Infeasible(format!(
                    "spectral prefilter: the {} vertices do not share an eigenvalue split at rate {lambda}, so no dominance storage exists there",
                    fam.len()
                )));
            }
            (Split::ConsistentSplit(q), Some(p)) if q != p => {
                emit_locus_and_cone(ctx, &spec, None)?;
                return Ok(Outcome::Infeasible(format!(
                    "spectral prefilter: vertices split {q}/{} at rate {lambda}, requested degree {p}",
                    fam.n() - q
                )));
            }
            _ => {}
        }
        let opts = DominanceOptions {
            norm_bound: ctx.norm_bound(),
            ..DominanceOptions::default()
        };
        match soft(solve_dominance_with(&fam, lambda, eps, &opts))? {
            Ok((c, _)) => c,
            Err(msg) => {
                emit_locus_and_cone(ctx, &spec, None)?;
                return Ok(Outcome::Infeasible(msg));
            }
        }
    } else if let Some(g) = ctx.cfg.config.task.lambda_grid {
        let p = want.ok_or_else(|| anyhow!("task.p is required when searching over task.lambda_grid"))?;
        match soft(rate_search(&fam, p, &g.points()?, eps))? {
            Ok(res) => {
                let attempts: Vec<_> = res
                    .attempts
                    .iter()
                    .map(|a| match &a.outcome {
                        Ok(m) => json!({ "lambda": a.lambda, "margin": m }),
                        Err(e) => json!({ "lambda": a.lambda, "error": e }),
                    })
                    .collect();
                ctx.report.detail(
                    "rate_search",
                    json!({ "lambda": res.lambda, "margin": res.margin, "attempts": attempts }),
                );
                res.certificate
            }
            Err(msg) => return Ok(Outcome::Infeasible(msg)),
        }
    } else {
        bail!("task.lambda or task.lambda_grid is required");
    };
    ctx.report.certificates.push(dominance_entry("model", &cert, &fam));
    emit_locus_and_cone(ctx, &spec, Some(&cert.p))?;
    if let Some(p) = want.filter(|&p| p != cert.degree) {
        return Ok(Outcome::Infeasible(format!(
            "storage found has degree {}, requested {p}",
            cert.degree
        )));
    }
    Ok(Outcome::Ok)
}

fn dissipativity_options(ctx: &Ctx) -> DissipativityOptions<f64> {
    DissipativityOptions {
        norm_bound: ctx.norm_bound(),
        ..DissipativityOptions::default()
    }
}

pub fn dissipate(ctx: &mut Ctx) -> TaskResult {
    let spec = ctx.model()?.clone();
    let fam = open_family(&spec)?;
    let s = supply(ctx.cfg.config.task.supply.as_ref(), fam.m_y(), fam.m_u())?;
    let lambda = ctx.lambda()?;
    let cert = match soft(solve_dissipativity_with(
        &fam,
        &s,
        lambda,
        ctx.epsilon(),
        &dissipativity_options(ctx),
    ))? {
        Ok(c) => c,
        Err(msg) => return Ok(Outcome::Infeasible(msg)),
    };
    ctx.report.certificates.push(dissipativity_entry("model", &cert, &fam));
    if ctx.plot_base.is_some() && cert.n() == 2 {
        ctx.emit("cone.csv", &plot::cone_csv(&cert.p)?)?;
    }
    if let Some(p) = ctx.cfg.config.task.p.filter(|&p| p != cert.degree) {
        return Ok(Outcome::Infeasible(format!(
            "storage found has degree {}, requested {p}",
            cert.degree
        )));
    }
    Ok(Outcome::Ok)
}

pub fn gain(ctx: &mut Ctx) -> TaskResult {
    let spec = ctx.model()?.clone();
    let fam = open_family(&spec)?;
    let t = &ctx.cfg.config.task;
    let p = t.p.ok_or_else(|| anyhow!("task.p is required"))?;
    let [lo, hi] = t.gamma_bracket.unwrap_or(DEFAULTS.gamma_bracket);
    let tol = t.gain_tol.unwrap_or(DEFAULTS.gain_tol);
    let opts = MinGainOptions {
        normalization: match t.normalization.unwrap_or(Normalization::UnitTrace) {
            Normalization::UnitTrace => domcert_core::dissipativity::GainNormalization::UnitTrace,
            Normalization::NormBound => domcert_core::dissipativity::GainNormalization::NormBound,
        },
        norm_bound: ctx.norm_bound(),
        ..MinGainOptions::default()
    };
    let lambda = ctx.lambda()?;
    let res = match soft(min_gain_with(&fam, p, lambda, ctx.epsilon(), (lo, hi), tol, &opts))? {
        Ok(r) => r,
        Err(msg) => return Ok(Outcome::Infeasible(msg)),
    };
    let probes: Vec<_> = res
        .probes
        .iter()
        .map(|(g, ok)| json!({ "gamma": g, "feasible": ok }))
        .collect();
    ctx.report.detail("gamma", res.gamma);
    ctx.report.detail("probes", probes);
    ctx.report
        .certificates
        .push(dissipativity_entry("model", &res.certificate, &fam));
    Ok(Outcome::Ok)
}

pub fn compose(ctx: &mut Ctx) -> TaskResult {
    let subs = ctx.cfg.config.subsystems.clone();
    if subs.len() != 2 {
        bail!("compose needs exactly two [[subsystem]] entries, got {}", subs.len());
    }
    let lambda = ctx.lambda()?;
    let eps = ctx.epsilon();
    let opts = dissipativity_options(ctx);
    let mut fams = Vec::new();
    let mut certs = Vec::new();
    for (k, sub) in subs.iter().enumerate() {
        let fam = open_family(&sub.model).with_context(|| format!("subsystem[{k}]"))?;
        let s = supply(sub.supply.as_ref(), fam.m_y(), fam.m_u()).with_context(|| format!("subsystem[{k}]"))?;
        let cert = match soft(solve_dissipativity_with(&fam, &s, lambda, eps, &opts))? {
            Ok(c) => c,
            Err(msg) => return Ok(Outcome::Infeasible(format!("subsystem[{k}]: {msg}"))),
        };
        ctx.report
            .certificates
            .push(dissipativity_entry(&format!("subsystem{}", k + 1), &cert, &fam));
        if let Some(p) = sub.p.filter(|&p| p != cert.degree) {
            return Ok(Outcome::Infeasible(format!(
                "subsystem[{k}]: storage has degree {}, requested {p}",
                cert.degree
            )));
        }
        fams.push(fam);
        certs.push(cert);
    }
    let h = match &ctx.cfg.config.task.h {
        Some(h) => matrix(h, "task.h")?,
        None => negative_feedback_matrix(fams[0].m_u(), fams[0].m_y(), fams[1].m_u(), fams[1].m_y())?,
    };
    let composed = compose_supplies(&[certs[0].supply.clone(), certs[1].supply.clone()], &h)?;
    ctx.report.detail(
        "composed_supply",
        json!({
            "Q": rows(composed.supply.q.as_matrix()),
            "L": rows(&composed.supply.l),
            "R": rows(composed.supply.r.as_matrix()),
            "q_max_eig": composed.q_max_eig,
            "q_negative_semidefinite": composed.q_negative_semidefinite,
        }),
    );
    if !composed.q_negative_semidefinite {
        return Ok(Outcome::Infeasible(format!(
            "composed supply is not negative semidefinite in the outputs (largest eigenvalue {:.3e})",
            composed.q_max_eig
        )));
    }
    let closed = build_closed_loop_family(&fams[0], &fams[1], &h)?;
    match aggregate_certificates(&certs[0], &certs[1], &h, &closed) {
        Ok(cert) => {
            ctx.report
                .certificates
                .push(dominance_entry("closed_loop", &cert, &closed));
            if ctx.plot_base.is_some() {
                ctx.emit("locus.csv", &plot::locus_csv(closed.vertices())?)?;
            }
            Ok(Outcome::Ok)
        }
        Err(e @ Error::CompositionUnsound(_)) => Ok(Outcome::Infeasible(e.to_string())),
        Err(e) => Err(e.into()),
    }
}

pub fn simulate(ctx: &mut Ctx) -> TaskResult {
    let spec = ctx.model()?.clone();
    let md = simulation_model(&spec)?;
    let t = &ctx.cfg.config.task;
    let x0 = t.x0.clone().ok_or_else(|| anyhow!("task.x0 is required"))?;
    if x0.len() != md.n() {
        bail!("task.x0 has length {}, model has {} states", x0.len(), md.n());
    }
    let dt = t.dt.unwrap_or(DEFAULTS.dt);
    let t_end = t.t_end.unwrap_or(DEFAULTS.t_end);
    let tail = t.tail_fraction.unwrap_or(DEFAULTS.tail_fraction);
    let traj = integrate(&md, &x0, dt, t_end)?;
    let class = classify_attractor(&traj, tail, None);
    ctx.report.attractor = Some(match &class {
        AttractorClass::FixedPoint { state } => json!({ "kind": class.kind(), "state": state }),
        AttractorClass::PeriodicOrbit { period, amplitude } => {
            json!({ "kind": class.kind(), "period": period, "amplitude": amplitude })
        }
        AttractorClass::Unknown { diagnostics } => json!({ "kind": class.kind(), "diagnostics": diagnostics }),
    });
    ctx.report.detail("state_names", &md.state_names);
    ctx.report.detail("final_state", traj.last());
    ctx.report.detail("samples", traj.len());
    let path = match (&ctx.cfg.config.output.trajectory, &ctx.plot_base) {
        (Some(p), _) => PathBuf::from(p),
        (None, Some(base)) => PathBuf::from(format!("{}.trajectory.csv", base.display())),
        (None, None) => PathBuf::from(format!("{}.trajectory.csv", ctx.cfg.stem())),
    };
    write_atomic(&path, traj.to_csv().as_bytes()).with_context(|| format!("writing {}", path.display()))?;
    ctx.report.artifacts.push(path.display().to_string());
    Ok(Outcome::Ok)
}

struct Check {
    role: String,
    worst: f64,
    tol: f64,
    degree_ok: bool,
    found: String,
    expected: usize,
}

fn check_entry(entry: &CertificateEntry, rel_tol: f64) -> anyhow::Result<Check> {
    let fam = &entry.family;
    let a: Vec<Matrix<f64>> = fam
        .a
        .iter()
        .enumerate()
        .map(|(k, m)| matrix(m, &format!("family.a[{k}]")))
        .collect::<anyhow::Result<_>>()?;
    let (p, degree, problem) = match entry.kind {
        CertificateKind::Dominance => {
            let c = DominanceCertificate::<f64>::from_record(&entry.certificate)?;
            let problem = SdpProblem::lyapunov(&a, c.lambda, c.epsilon);
            (c.p, c.degree, problem)
        }
        CertificateKind::Dissipativity => {
            let c = DissipativityCertificate::<f64>::from_record(&entry.certificate)?;
            let pick = |v: &Option<Vec<Vec<Vec<f64>>>>, name: &str| -> anyhow::Result<Vec<Matrix<f64>>> {
                let v = v
                    .as_ref()
                    .ok_or_else(|| anyhow!("family.{name} missing for a dissipativity certificate"))?;
                v.iter().map(|m| matrix(m, &format!("family.{name}"))).collect()
            };
            let (b, cc, d) = (pick(&fam.b, "b")?, pick(&fam.c, "c")?, pick(&fam.d, "d")?);
            if b.len() != a.len() || cc.len() != a.len() || d.len() != a.len() {
                bail!("family vertex lists have different lengths");
            }
            let vertices = (0..a.len())
                .map(|k| OpenVertex {
                    a: a[k].clone(),
                    b: b[k].clone(),
                    c: cc[k].clone(),
                    d: d[k].clone(),
                })
                .collect();
            let open = OpenVertexFamily::new(vertices)?;
            let problem = SdpProblem::new(c.n(), open.constraints(&c.supply, c.lambda, c.epsilon));
            (c.p, c.degree, problem)
        }
    };
    let worst = verify_solution(&p, &problem)?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    let found = inertia(&p)?;
    Ok(Check {
        role: entry.role.clone(),
        worst,
        tol: rel_tol * (1.0 + p.as_matrix().max_abs()),
        degree_ok: found.neg == degree && found.zero == 0,
        found: found.to_string(),
        expected: degree,
    })
}

pub fn verify(ctx: &mut Ctx) -> TaskResult {
    let t = ctx.cfg.config.task.clone();
    let entries: Vec<CertificateEntry> = match (&t.report, &t.certificate) {
        (Some(_), Some(_)) => bail!("task: give either `report` or `certificate`, not both"),
        (Some(path), None) => {
            let path = ctx.cfg.resolve(path);
            let text = std::fs::read_to_string(&path).with_context(|| format!("reading report {}", path.display()))?;
            let v: serde_json::Value = serde_json::from_str(&text).context("report is not JSON")?;
            let certs = v
                .get("certificates")
                .cloned()
                .ok_or_else(|| anyhow!("report has no certificates"))?;
            serde_json::from_value(certs).context("report certificates")?
        }
        (None, Some(path)) => {
            let path = ctx.cfg.resolve(path);
            let text =
                std::fs::read_to_string(&path).with_context(|| format!("reading certificate {}", path.display()))?;
            let rec: domcert_core::dominance::CertificateRecord =
                serde_json::from_str(&text).context("certificate record")?;
            let spec = ctx.model()?.clone();
            let entry = if rec.supply_q.is_some() {
                let fam = open_family(&spec)?;
                let cert = DissipativityCertificate::<f64>::from_record(&rec)?;
                dissipativity_entry("certificate", &cert, &fam)
            } else {
                let fam = state_family(&spec)?;
                let cert = DominanceCertificate::<f64>::from_record(&rec)?;
                dominance_entry("certificate", &cert, &fam)
            };
            vec![entry]
        }
        (None, None) => bail!("task.report or task.certificate is required"),
    };
    if entries.is_empty() {
        bail!("nothing to verify: no certificates found");
    }
    let rel_tol = t.tol.unwrap_or(DEFAULTS.verify_tol);
    let mut failed = Vec::new();
    let mut checks = Vec::new();
    for e in &entries {
        let c = check_entry(e, rel_tol).with_context(|| format!("certificate `{}`", e.role))?;
        let pass = c.worst <= c.tol && c.degree_ok;
        if !pass {
            failed.push(c.role.clone());
        }
        checks.push(json!({
            "role": c.role,
            "worst_residual": c.worst,
            "tol": c.tol,
            "inertia": c.found,
            "expected_degree": c.expected,
            "pass": pass,
        }));
    }
    ctx.report.detail("checks", checks);
    ctx.report.certificates = entries;
    if failed.is_empty() {
        Ok(Outcome::Ok)
    } else {
        Ok(Outcome::Infeasible(format!(
            "certificates failed verification: {}",
            failed.join(", ")
        )))
    }
}
