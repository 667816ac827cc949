//! Subcommand handlers. Each returns a JSON report and whether its check passed.

use crate::args::*;
use crate::suite::{group_section, spread, Suite};
use carnot_core::algebra::{builtin, build_free_nilpotent, verify_stratification, AlgebraError, AlgebraSpec, BasisLabel, SpecJson};
use carnot_core::fields::{coordinate_names, display_field, FieldSet, SystemCoefficients};
use carnot_core::group::{
    ball_volume_estimate, dilate, dilate_f64, gauge_distance, gauge_distance_f64, gauge_norm, gauge_norm_f64, inverse, GroupLaw, Point,
};
use carnot_core::numerics::{assemble_and_solve, caccioppoli_check, hormander_ratio, peetre_seminorm, Grid, GridField, SeminormParams, SolveOptions};
use carnot_core::poly::{Monomial, Polynomial};
use carnot_core::q::{fmt_q, parse_q, Q};
use carnot_core::regularity::{excess_decay_check, harmonic_preset, higher_order_estimate_check, sup_estimate_check};
use carnot_core::rewrite::{naive_order_obstruction, reduce_to_base, sweep, LayerProfile};
use serde::Serialize;
use serde_json::{json, Value};
use std::sync::Arc;

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or input files; exit 2.
    Usage(String),
    /// A computation failed or a check could not be carried out; exit 1.
    Failure(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Failure(m) => m,
        }
    }
}

pub type Res<T> = Result<T, CliError>;

fn usage(m: impl Into<String>) -> CliError {
    CliError::Usage(m.into())
}

fn failure(e: impl ToString) -> CliError {
    CliError::Failure(e.to_string())
}

pub struct Outcome {
    pub report: Value,
    pub ok: bool,
}

impl Outcome {
    fn ok(report: Value) -> Self {
        Outcome { report, ok: true }
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable")
}

pub struct Context {
    pub group_name: String,
    pub n: usize,
    pub precision: Precision,
    pub seed: u64,
}

fn algebra_error(e: AlgebraError) -> CliError {
    match e {
        AlgebraError::Invalid(_) => failure(e),
        _ => usage(e.to_string()),
    }
}

fn read_spec_file(path: &str) -> Res<SpecJson> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read `{path}`: {e}")))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("bad group-spec JSON in `{path}`: {e}")))
}

/// Builtin name or path to a group-spec file.
pub fn load_group(name: &str) -> Result<AlgebraSpec, (CliError, Option<AlgebraError>)> {
    if name.ends_with(".json") || std::path::Path::new(name).is_file() {
        let model = read_spec_file(name).map_err(|e| (e, None))?;
        AlgebraSpec::from_json_model(&model).map_err(|e| (algebra_error(e.clone()), Some(e)))
    } else {
        builtin(name).map_err(|e| (algebra_error(e.clone()), Some(e)))
    }
}

impl Context {
    fn spec(&self) -> Res<AlgebraSpec> {
        load_group(&self.group_name).map_err(|e| e.0)
    }
}

fn split_list(s: &str) -> Vec<&str> {
    s.trim().trim_start_matches(['[', '(']).trim_end_matches([']', ')']).split(',').map(|t| t.trim().trim_matches('"')).filter(|t| !t.is_empty()).collect()
}

fn parse_usizes(s: &str, what: &str) -> Res<Vec<usize>> {
    split_list(s).iter().map(|t| t.parse().map_err(|_| usage(format!("bad {what} `{s}`")))).collect()
}

fn parse_f64s(s: &str, what: &str) -> Res<Vec<f64>> {
    split_list(s).iter().map(|t| t.parse().map_err(|_| usage(format!("bad {what} `{s}`")))).collect()
}

fn parse_label(s: &str, spec: &AlgebraSpec) -> Res<BasisLabel> {
    let v = parse_usizes(s, "label")?;
    let [k, i] = v[..] else { return Err(usage(format!("label `{s}` must be k,i"))) };
    let l = BasisLabel::new(k, i);
    spec.flat(l).ok_or_else(|| usage(format!("{l} is not a basis label of this group")))?;
    Ok(l)
}

fn check_dim<T>(v: Vec<T>, spec: &AlgebraSpec, s: &str) -> Res<Vec<T>> {
    if v.len() == spec.dim() {
        Ok(v)
    } else {
        Err(usage(format!("point `{s}` has {} coordinates, the group has dimension {}", v.len(), spec.dim())))
    }
}

fn point_q(s: &str, spec: &AlgebraSpec) -> Res<Point<Q>> {
    let v: Vec<Q> = split_list(s).iter().map(|t| parse_q(t).map_err(usage)).collect::<Res<_>>()?;
    Ok(Point::new(check_dim(v, spec, s)?))
}

fn point_f(s: &str, spec: &AlgebraSpec) -> Res<Vec<f64>> {
    let v: Vec<f64> = split_list(s)
        .iter()
        .map(|t| t.parse::<f64>().or_else(|_| parse_q(t).map(|q| carnot_core::q::to_f64(&q))).map_err(|_| usage(format!("bad number `{t}`"))))
        .collect::<Res<_>>()?;
    check_dim(v, spec, s)
}

fn q_json(p: &Point<Q>) -> Value {
    json!(p.coords.iter().map(fmt_q).collect::<Vec<_>>())
}

/// `[{"exp":[...],"coeff":"1/2"}, ...]`, or a list of such lists for several components.
pub fn parse_polys(s: &str, dim: usize) -> Res<Vec<Polynomial>> {
    let v: Value = serde_json::from_str(s).map_err(|e| usage(format!("bad polynomial JSON: {e}")))?;
    let arr = v.as_array().ok_or_else(|| usage("polynomial must be a JSON array of terms"))?;
    if arr.iter().all(Value::is_array) && !arr.is_empty() {
        arr.iter().map(|c| parse_terms(c, dim)).collect()
    } else {
        Ok(vec![parse_terms(&v, dim)?])
    }
}

fn parse_terms(v: &Value, dim: usize) -> Res<Polynomial> {
    let mut p = Polynomial::zero();
    for t in v.as_array().ok_or_else(|| usage("expected a term list"))? {
        let exp: Vec<u32> = t["exp"]
            .as_array()
            .ok_or_else(|| usage("term needs an `exp` array"))?
            .iter()
            .map(|e| e.as_u64().map(|x| x as u32).ok_or_else(|| usage("exponents must be non-negative integers")))
            .collect::<Res<_>>()?;
        if exp.len() > dim {
            return Err(usage(format!("exponent vector longer than the dimension {dim}")));
        }
        let c = match &t["coeff"] {
            Value::String(s) => parse_q(s).map_err(usage)?,
            Value::Number(n) => parse_q(&n.to_string()).map_err(usage)?,
            Value::Null => Q::from_integer(1.into()),
            _ => return Err(usage("coeff must be a string or number")),
        };
        p.add_term(Monomial::from_exponents(&exp), c);
    }
    Ok(p)
}

/// `zero`, `poly:harmonic`, `poly:pKI`, `poly:p[k,i]` or `poly:json:[...]`.
pub fn parse_data(s: &str, spec: &AlgebraSpec) -> Res<Polynomial> {
    if s == "zero" {
        return Ok(Polynomial::zero());
    }
    let body = s.strip_prefix("poly:").ok_or_else(|| usage(format!("unknown data `{s}`")))?;
    if body == "harmonic" {
        if spec.m < 2 {
            return Err(usage("the harmonic preset needs at least two generators"));
        }
        return Ok(harmonic_preset(spec));
    }
    if let Some(j) = body.strip_prefix("json:") {
        let mut v = parse_polys(j, spec.dim())?;
        return if v.len() == 1 { Ok(v.remove(0)) } else { Err(usage("expected a single component")) };
    }
    let lab = body.strip_prefix('p').ok_or_else(|| usage(format!("unknown polynomial `{body}`")))?;
    let lab = if lab.contains(',') {
        lab.to_string()
    } else if lab.len() == 2 {
        format!("{},{}", &lab[..1], &lab[1..])
    } else {
        return Err(usage(format!("coordinate `{body}` must be pKI or p[k,i]")));
    };
    Ok(Polynomial::var(spec.flat(parse_label(&lab, spec)?).expect("checked")))
}

fn grid_for(spec: &AlgebraSpec, n: usize) -> Res<Arc<Grid>> {
    if n < 2 {
        return Err(usage("grid size must be at least 2"));
    }
    Ok(Arc::new(Grid::new(Arc::new(GroupLaw::new(spec)), n, 1.0)))
}

fn solve_laplace(spec: &AlgebraSpec, g: Arc<Grid>, bc: &Polynomial, f: &Polynomial) -> Res<(GridField, carnot_core::numerics::SolveReport)> {
    let bcf = GridField::from_polys(g.clone(), std::slice::from_ref(bc));
    let ff = GridField::from_polys(g, std::slice::from_ref(f));
    assemble_and_solve(&SystemCoefficients::identity(1, spec.m), &bcf, &ff, &[], &SolveOptions::default()).map_err(failure)
}

fn bump(g: Arc<Grid>) -> GridField {
    GridField::from_fn(g, |p| {
        let r2 = p.iter().map(|x| 4.0 * x * x).sum::<f64>();
        if r2 < 1.0 {
            (-1.0 / (1.0 - r2)).exp()
        } else {
            0.0
        }
    })
}

fn make_field(spec: &AlgebraSpec, n: usize, source: &str) -> Res<GridField> {
    let g = grid_for(spec, n)?;
    if source == "bump" {
        return Ok(bump(g));
    }
    if let Some(rest) = source.strip_prefix("harmonic") {
        let data = match rest.strip_prefix(':') {
            Some(d) => parse_data(d, spec)?,
            None if rest.is_empty() => parse_data("poly:harmonic", spec)?,
            None => return Err(usage(format!("unknown field `{source}`"))),
        };
        return Ok(solve_laplace(spec, g, &data, &Polynomial::zero())?.0);
    }
    Ok(GridField::from_polys(g, &[parse_data(source, spec)?]))
}

const STABLE_FACTOR: f64 = 2.0;
/// Constants below this are discretization noise of an identically zero quantity.
const ZERO_FLOOR: f64 = 1e-9;

struct SweepRun {
    spec: AlgebraSpec,
    resolutions: Vec<usize>,
    fields: Vec<GridField>,
    center: Vec<f64>,
}

fn run_sweep(ctx: &Context, sw: &Sweep, default_field: &str) -> Res<SweepRun> {
    let spec = ctx.spec()?;
    let resolutions = match &sw.resolutions {
        Some(s) => parse_usizes(s, "resolutions")?,
        None => vec![(ctx.n / 2).max(2), ctx.n],
    };
    if resolutions.is_empty() {
        return Err(usage("need at least one resolution"));
    }
    let center = match &sw.center {
        Some(c) => point_f(c, &spec)?,
        None => vec![0.0; spec.dim()],
    };
    let source = sw.field.as_deref().unwrap_or(default_field);
    let fields = resolutions.iter().map(|&n| make_field(&spec, n, source)).collect::<Res<_>>()?;
    Ok(SweepRun { spec, resolutions, fields, center })
}

/// Common report shape: per-resolution reports, the compared values and their spread.
fn sweep_report(check: &str, run: &SweepRun, values: Vec<f64>, reports: Vec<Value>, extra: Value) -> Outcome {
    let ratio = spread(&values);
    let all_zero = values.iter().all(|v| v.abs() < ZERO_FLOOR);
    let stable = all_zero || ratio.is_some_and(|r| r < STABLE_FACTOR);
    let mut report = json!({
        "check": check,
        "resolutions": run.resolutions,
        "values": values,
        "ratio": ratio,
        "reports": reports,
        "stable": stable,
        "degenerate": all_zero,
    });
    if let (Value::Object(m), Value::Object(e)) = (&mut report, extra) {
        m.extend(e);
    }
    Outcome { report, ok: stable }
}

pub fn algebra(ctx: &Context, cmd: &AlgebraCmd) -> Res<Outcome> {
    match cmd {
        AlgebraCmd::New { free } => {
            let spec = match free {
                Some(mr) => {
                    let v = parse_usizes(mr, "m,r")?;
                    let [m, r] = v[..] else { return Err(usage("--free takes m,r")) };
                    build_free_nilpotent(m, r).map_err(algebra_error)?
                }
                None => ctx.spec()?,
            };
            Ok(Outcome::ok(to_value(&spec.to_json_model())))
        }
        AlgebraCmd::Check { spec } => {
            let name = spec.as_deref().unwrap_or(&ctx.group_name);
            match load_group(name) {
                Ok(s) => {
                    let strat = verify_stratification(&s);
                    let violations: Vec<String> = s.invariant_violations().iter().map(ToString::to_string).collect();
                    let ok = strat.pass && violations.is_empty();
                    Ok(Outcome { report: json!({"group": name, "valid": ok, "violations": violations, "stratification": strat, "brackets": s.describe_brackets()}), ok })
                }
                Err((_, Some(AlgebraError::Invalid(v)))) => Ok(Outcome {
                    report: json!({"group": name, "valid": false, "violations": v.iter().map(ToString::to_string).collect::<Vec<_>>(), "details": v}),
                    ok: false,
                }),
                Err((e, _)) => Err(e),
            }
        }
        AlgebraCmd::Dims => Ok(Outcome::ok(json!(ctx.spec()?.layer_dims))),
    }
}

pub fn group(ctx: &Context, cmd: &GroupCmd) -> Res<Outcome> {
    let spec = ctx.spec()?;
    let law = GroupLaw::new(&spec);
    let exact = ctx.precision == Precision::Exact;
    let v = match cmd {
        GroupCmd::Mul { p, q } if exact => q_json(&law.product(&point_q(p, &spec)?, &point_q(q, &spec)?)),
        GroupCmd::Mul { p, q } => json!(law.product_f64(&point_f(p, &spec)?, &point_f(q, &spec)?)),
        GroupCmd::Inv { point } if exact => q_json(&inverse(&point_q(point, &spec)?)),
        GroupCmd::Inv { point } => json!(point_f(point, &spec)?.iter().map(|x| -x).collect::<Vec<_>>()),
        GroupCmd::Dilate { s, point } if exact => q_json(&dilate(&spec, &parse_q(s).map_err(usage)?, &point_q(point, &spec)?)),
        GroupCmd::Dilate { s, point } => {
            let s: f64 = s.parse().map_err(|_| usage(format!("bad scale `{s}`")))?;
            json!(dilate_f64(&spec, s, &point_f(point, &spec)?))
        }
        GroupCmd::Gauge { point } if exact => json!(gauge_norm(&spec, &point_q(point, &spec)?)),
        GroupCmd::Gauge { point } => json!(gauge_norm_f64(&spec, &point_f(point, &spec)?)),
        GroupCmd::Dist { p, q } if exact => json!(gauge_distance(&law, &point_q(p, &spec)?, &point_q(q, &spec)?)),
        GroupCmd::Dist { p, q } => json!(gauge_distance_f64(&law, &point_f(p, &spec)?, &point_f(q, &spec)?)),
        GroupCmd::Ballvol { radius, samples } => {
            if !(*radius > 0.0) || *samples == 0 {
                return Err(usage("radius and samples must be positive"));
            }
            let mut v = to_value(&ball_volume_estimate(&spec, *radius, *samples, ctx.seed));
            v["seed"] = json!(ctx.seed);
            v["homogeneous_dimension"] = json!(spec.homogeneous_dimension());
            v
        }
    };
    Ok(Outcome::ok(v))
}

pub fn fields(ctx: &Context, cmd: &FieldsCmd) -> Res<Outcome> {
    let spec = ctx.spec()?;
    let fs = FieldSet::new(&spec);
    let names = coordinate_names(&spec);
    match cmd {
        FieldsCmd::Show { label } => {
            let l = parse_label(label, &spec)?;
            let x = fs.field(l);
            Ok(Outcome::ok(json!({
                "label": [l.layer, l.index],
                "operator": display_field(&spec, x),
                "coefficients": x.coeffs.iter().map(|c| c.display_with(&names)).collect::<Vec<_>>(),
            })))
        }
        FieldsCmd::Residual { u, f } => {
            let u = parse_polys(u, spec.dim())?;
            let f = match f {
                Some(f) => parse_polys(f, spec.dim())?,
                None => vec![Polynomial::zero(); u.len()],
            };
            if f.len() != u.len() {
                return Err(usage("u and f need the same number of components"));
            }
            let a = SystemCoefficients::identity(u.len(), spec.m);
            let res = fs.system_residual(&a, &u, &[], &f);
            let zero = res.iter().all(Polynomial::is_zero);
            Ok(Outcome::ok(json!({"residual": res.iter().map(|p| p.display_with(&names)).collect::<Vec<_>>(), "zero": zero})))
        }
    }
}

pub fn rewrite(cmd: &RewriteCmd) -> Res<Outcome> {
    match cmd {
        RewriteCmd::Trace { step, profile, json: path } => {
            let counts = parse_usizes(profile, "profile")?;
            let p = LayerProfile::new(*step, counts).map_err(|e| usage(e.to_string()))?;
            let trace = reduce_to_base(&p).map_err(failure)?;
            let ok = trace.measure_strictly_decreases();
            let v = to_value(&trace);
            if let Some(path) = path {
                let text = serde_json::to_string_pretty(&v).expect("serializable") + "\n";
                std::fs::write(path, text).map_err(|e| usage(format!("cannot write `{path}`: {e}")))?;
            }
            Ok(Outcome { report: v, ok })
        }
        RewriteCmd::Obstruction => {
            let rep = naive_order_obstruction();
            let ok = rep.obstructed == vec![2];
            Ok(Outcome { report: to_value(&rep), ok })
        }
        RewriteCmd::Sweep { steps, max_total } => {
            let steps = parse_usizes(steps, "steps")?;
            if steps.iter().any(|&s| s < 2) {
                return Err(usage("steps must be at least 2"));
            }
            let rep = sweep(&steps, *max_total);
            let mut v = to_value(&rep);
            v["pass"] = json!(rep.pass());
            Ok(Outcome { report: v, ok: rep.pass() })
        }
    }
}

/// Returns the report and the node table `coordinates..., components...`.
pub fn solve(ctx: &Context, a: &SolveArgs) -> Res<(Outcome, String)> {
    let spec = ctx.spec()?;
    let bc = parse_data(&a.bc, &spec)?;
    let f = parse_data(&a.f, &spec)?;
    let g = grid_for(&spec, ctx.n)?;
    let (u, rep) = solve_laplace(&spec, g.clone(), &bc, &f)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = coordinate_names(&spec);
    header.extend((1..=u.ncomp).map(|c| format!("u{c}")));
    w.write_record(&header).expect("in-memory write");
    let mut p = vec![0.0; g.dim()];
    for k in 0..g.nodes() {
        g.point_into(k, &mut p);
        let row: Vec<String> = p.iter().copied().chain((0..u.ncomp).map(|c| u.component(c)[k])).map(|x| x.to_string()).collect();
        w.write_record(&row).expect("in-memory write");
    }
    let table = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8");
    let mut v = to_value(&rep);
    v["n"] = json!(ctx.n);
    v["nodes"] = json!(g.nodes());
    v["l2_norm"] = json!(u.l2_sq().sqrt());
    Ok((Outcome::ok(v), table))
}

pub fn verify(ctx: &Context, cmd: &VerifyCmd) -> Res<Outcome> {
    match cmd {
        VerifyCmd::Caccioppoli { sweep, radius } => {
            let run = run_sweep(ctx, sweep, "harmonic")?;
            let reps = run.fields.iter().map(|u| caccioppoli_check(u, None, &[], &run.center, *radius).map_err(failure)).collect::<Res<Vec<_>>>()?;
            let values = reps.iter().map(|r| r.constant).collect();
            Ok(sweep_report("caccioppoli", &run, values, reps.iter().map(to_value).collect(), json!({"radius": radius})))
        }
        VerifyCmd::Peetre { sweep, direction, alpha, epsilon0 } => {
            let run = run_sweep(ctx, sweep, "bump")?;
            let dir = parse_label(direction, &run.spec)?;
            if !(*alpha > 0.0 && *alpha <= 1.0) || !(*epsilon0 > 0.0) {
                return Err(usage("need 0 < alpha <= 1 and epsilon0 > 0"));
            }
            let values: Vec<f64> = run
                .fields
                .iter()
                .map(|u| peetre_seminorm(u, &SeminormParams { direction: dir, alpha: *alpha, epsilon0: *epsilon0, samples: 16 }))
                .collect();
            let reps = values.iter().map(|v| json!({"seminorm": v})).collect();
            Ok(sweep_report("peetre", &run, values, reps, json!({"direction": [dir.layer, dir.index], "alpha": alpha, "epsilon0": epsilon0})))
        }
        VerifyCmd::Hormander { sweep, direction, epsilon0 } => {
            let run = run_sweep(ctx, sweep, "bump")?;
            let dir = parse_label(direction, &run.spec)?;
            if !(*epsilon0 > 0.0) {
                return Err(usage("epsilon0 must be positive"));
            }
            let reps: Vec<_> = run.fields.iter().map(|u| hormander_ratio(u, dir, *epsilon0)).collect();
            let values = reps.iter().map(|r| r.ratio).collect();
            Ok(sweep_report("hormander", &run, values, reps.iter().map(to_value).collect(), json!({"epsilon0": epsilon0})))
        }
        VerifyCmd::Decay { sweep, tau, radii, radius } => {
            let run = run_sweep(ctx, sweep, "harmonic")?;
            let radii = parse_f64s(radii, "radii")?;
            let reps = run
                .fields
                .iter()
                .map(|u| excess_decay_check(u, &run.center, *tau, *radius, &radii).map_err(failure))
                .collect::<Res<Vec<_>>>()?;
            let values = reps.iter().map(|r| r.normalized_integral).collect();
            let fitted = reps.last().and_then(|r| r.fitted_exponent);
            let q = run.spec.homogeneous_dimension();
            Ok(sweep_report(
                "decay",
                &run,
                values,
                reps.iter().map(to_value).collect(),
                json!({"fitted_exponent": fitted, "homogeneous_dimension": q, "tau": tau, "radii": radii}),
            ))
        }
        VerifyCmd::Supbound { sweep, radius } => {
            let run = run_sweep(ctx, sweep, "harmonic")?;
            let reps = run.fields.iter().map(|u| sup_estimate_check(u, &run.center, *radius).map_err(failure)).collect::<Res<Vec<_>>>()?;
            let values = reps.iter().map(|r| r.ratio).collect();
            Ok(sweep_report("supbound", &run, values, reps.iter().map(to_value).collect(), json!({"radius": radius})))
        }
        VerifyCmd::Estimate { sweep, word, radius } => {
            let run = run_sweep(ctx, sweep, "harmonic")?;
            let word: Vec<BasisLabel> = word.split(';').map(|l| parse_label(l, &run.spec)).collect::<Res<_>>()?;
            let reps = run
                .fields
                .iter()
                .map(|u| higher_order_estimate_check(u, None, &[], &word, &run.center, *radius).map_err(failure))
                .collect::<Res<Vec<_>>>()?;
            let values = reps.iter().map(|r| r.constant).collect();
            Ok(sweep_report("estimate", &run, values, reps.iter().map(to_value).collect(), json!({"radius": radius})))
        }
    }
}

pub fn suite(ctx: &Context) -> Outcome {
    let section = match load_group(&ctx.group_name) {
        Ok(spec) => group_section(&ctx.group_name, Ok(spec)),
        Err((_, Some(e))) => group_section(&ctx.group_name, Err(e)),
        Err((e, None)) => group_section(&ctx.group_name, Err(AlgebraError::BadSpec(e.message().to_string()))),
    };
    let rep = Suite::new(ctx.seed).run_all(Some(section));
    Outcome { ok: rep.pass, report: to_value(&rep) }
}
