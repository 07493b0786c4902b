//! Command-line front end.
//!
//! Every command writes a single JSON report (or geometry file) and maps
//! failures onto exit codes:
//! 0 success, 2 domain/usage error, 3 tolerance failure, 4 trace failure,
//! 5 ill-conditioned linking.

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;

use crate::calculus::{
    residual_scan, ControlField, Region, SamplingSpec, SharedField, DEFAULT_STEP,
};
use crate::coords::{self, CartesianPoint, ToroidalPoint};
use crate::error::Error;
use crate::export;
use crate::fibers::{
    self, gauss_linking_with, total_linking, Fiber, IndexSetup, LinkingMethod, LinkingResult,
    TraceOptions, Windings,
};
use crate::geometry;
use crate::hopf::{self, HopfMapSpec};
use crate::symmetry::{
    compose_target, parse_complex, parse_polynomial, transform_base, BaseConformalMap,
    ConformalPrimitive, TargetMap,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_TOLERANCE: i32 = 3;
pub const EXIT_TRACE: i32 = 4;
pub const EXIT_LINKING: i32 = 5;

/// Caps the size of the worker pool.
pub const THREADS_ENV: &str = "HOPF_EIKONAL_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "hopf-eikonal",
    version,
    about = "Toroidal Hopf maps solving the complex eikonal equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case", tag = "command")]
enum Command {
    /// Evaluate a field at one point.
    Eval(EvalArgs),
    /// Sample the normalized eikonal residual.
    Scan(ScanArgs),
    /// Trace the level set through a point of the target and export it.
    Trace(TraceArgs),
    /// Linking number of two fibers read from CSV.
    Link(LinkArgs),
    /// Hopf index as the linking number of two level sets.
    Index(IndexArgs),
    /// Run the geometry checks (vertical annihilation, coframe duality, conformal metric).
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
struct MapArgs {
    /// Winding number around ξ.
    #[arg(short = 'm', default_value_t = 1, allow_negative_numbers = true)]
    m: i32,
    /// Winding number around φ.
    #[arg(short = 'n', default_value_t = 1, allow_negative_numbers = true)]
    n: i32,
}

impl MapArgs {
    fn spec(&self) -> Result<HopfMapSpec, CliError> {
        Ok(HopfMapSpec::new(self.m, self.n)?)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
struct FieldArgs {
    #[command(flatten)]
    map: MapArgs,
    /// Use a built-in control field (x+2iy, x+iy, const, exp) instead of χ^(m,n).
    #[arg(long)]
    field: Option<String>,
    /// Holomorphic map F applied to the field, as ascending coefficients ("0,0,1" is w²).
    #[arg(long, allow_hyphen_values = true)]
    target: Option<String>,
    /// Denominator coefficients, making F rational.
    #[arg(long, requires = "target", allow_hyphen_values = true)]
    target_den: Option<String>,
    /// Conformal map of the base, repeatable and applied in order:
    /// translate:x,y,z | rotate:ax,ay,az,angle | dilate:s | invert.
    #[arg(long = "transform", allow_hyphen_values = true)]
    transforms: Vec<String>,
}

fn parse_target(
    target: &Option<String>,
    den: &Option<String>,
) -> Result<Option<TargetMap>, CliError> {
    let Some(num) = target else { return Ok(None) };
    let num = parse_polynomial(num)?;
    Ok(Some(match den {
        Some(d) => TargetMap::rational(num, parse_polynomial(d)?)?,
        None => TargetMap::Polynomial(num),
    }))
}

impl FieldArgs {
    /// The field and, when it is a plain Hopf map, its winding pair.
    fn build(&self) -> Result<(SharedField, Option<HopfMapSpec>), CliError> {
        let (mut field, spec): (SharedField, _) = match &self.field {
            Some(name) => {
                let control = ControlField::from_name(name).ok_or_else(|| {
                    CliError::usage(format!(
                        "unknown control field '{name}' (expected one of {})",
                        ControlField::NAMES.join(", ")
                    ))
                })?;
                (Arc::new(control), None)
            }
            None => {
                let spec = self.map.spec()?;
                (Arc::new(spec), Some(spec))
            }
        };
        if !self.transforms.is_empty() {
            let steps = self
                .transforms
                .iter()
                .map(|t| ConformalPrimitive::parse(t))
                .collect::<crate::Result<Vec<_>>>()?;
            field = transform_base(field, BaseConformalMap::new(steps));
        }
        if let Some(map) = parse_target(&self.target, &self.target_den)? {
            field = compose_target(field, map);
        }
        let plain = self.transforms.is_empty() && self.target.is_none();
        Ok((field, spec.filter(|_| plain)))
    }
}

#[derive(Debug, Clone, Args, Serialize)]
struct SamplingArgs {
    /// Number of candidate points.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Half-width of the sampling cube centered at the origin.
    #[arg(long, default_value_t = 2.0)]
    extent: f64,
    /// Sample uniformly in η ∈ [a, b] instead of the cube.
    #[arg(long, value_name = "A,B")]
    eta_range: Option<String>,
    /// Exclusion tube radius around the focal circle.
    #[arg(long, default_value_t = crate::calculus::DEFAULT_CIRCLE_EXCLUSION)]
    circle_exclusion: f64,
    /// Exclusion tube radius around the z-axis.
    #[arg(long, default_value_t = crate::calculus::DEFAULT_AXIS_EXCLUSION)]
    axis_exclusion: f64,
    /// Finite-difference step.
    #[arg(long, default_value_t = DEFAULT_STEP)]
    h: f64,
}

impl SamplingArgs {
    fn spec(&self) -> Result<SamplingSpec, CliError> {
        let region = match &self.eta_range {
            Some(r) => {
                let v = parse_floats(r)?;
                let [eta_min, eta_max] = v.as_slice() else {
                    return Err(CliError::usage(format!(
                        "--eta-range expects A,B, got '{r}'"
                    )));
                };
                Region::Toroidal {
                    eta_min: *eta_min,
                    eta_max: *eta_max,
                }
            }
            None => Region::Box {
                min: [-self.extent; 3],
                max: [self.extent; 3],
            },
        };
        let spec = SamplingSpec {
            region,
            samples: self.samples,
            circle_exclusion: self.circle_exclusion,
            axis_exclusion: self.axis_exclusion,
            seed: self.seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
struct TraceOptionArgs {
    /// Maximal arc-length step (default: 1e-3 of the torus' minor circumference).
    #[arg(long)]
    step: Option<f64>,
    /// Local error tolerance of the integrator.
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    #[arg(long, default_value_t = 200_000)]
    max_steps: usize,
}

impl TraceOptionArgs {
    fn options(&self) -> Result<TraceOptions, CliError> {
        let opts = TraceOptions {
            initial_step: self.step,
            tolerance: self.tolerance,
            max_steps: self.max_steps,
            ..TraceOptions::default()
        };
        opts.validate()?;
        Ok(opts)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
struct EvalArgs {
    #[command(flatten)]
    field: FieldArgs,
    /// Cartesian point x,y,z.
    #[arg(long, allow_hyphen_values = true)]
    point: String,
}

#[derive(Debug, Clone, Args, Serialize)]
struct ScanArgs {
    #[command(flatten)]
    field: FieldArgs,
    #[command(flatten)]
    sampling: SamplingArgs,
    /// Exit with code 3 if the max normalized residual exceeds this.
    #[arg(long)]
    fail_above: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum GeometryFormat {
    Csv,
    Obj,
}

#[derive(Debug, Clone, Args, Serialize)]
struct TraceArgs {
    #[command(flatten)]
    map: MapArgs,
    /// Torus of the level set.
    #[arg(long, default_value_t = 0.6)]
    eta: f64,
    /// Phase of the level set.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    sigma: f64,
    /// Target value (complex literal such as "0.5+0.2i"); overrides --eta/--sigma.
    #[arg(long, allow_hyphen_values = true)]
    level: Option<String>,
    #[arg(long, value_enum, default_value_t = GeometryFormat::Csv)]
    format: GeometryFormat,
    /// Geometry output file; without it the geometry goes to stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[command(flatten)]
    trace: TraceOptionArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum MethodArg {
    SolidAngle,
    Midpoint,
}

#[derive(Debug, Clone, Args, Serialize)]
struct LinkArgs {
    /// CSV with columns fiber_id,point_index,x,y,z.
    input: PathBuf,
    /// Second CSV; without it, `input` must hold exactly two fibers.
    other: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = MethodArg::SolidAngle)]
    method: MethodArg,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
struct IndexArgs {
    #[command(flatten)]
    map: MapArgs,
    /// Tori of the two level sets.
    #[arg(long, default_value = "0.6,1.2")]
    etas: String,
    /// Phases of the two level sets.
    #[arg(long, default_value = "0,1", allow_hyphen_values = true)]
    sigmas: String,
    /// Experimental: index of F∘χ for a polynomial or rational F.
    #[arg(long, allow_hyphen_values = true)]
    target: Option<String>,
    #[arg(long, requires = "target", allow_hyphen_values = true)]
    target_den: Option<String>,
    #[command(flatten)]
    trace: TraceOptionArgs,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
struct VerifyArgs {
    #[command(flatten)]
    map: MapArgs,
    #[command(flatten)]
    sampling: SamplingArgs,
    #[arg(long, default_value_t = 1e-6)]
    tol_vertical: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol_duality: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol_conformal: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol_split: f64,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::NoClosure { .. } | Error::CorrectorDiverged { .. } => EXIT_TRACE,
            Error::FibersTooClose { .. } | Error::OpenFiber => EXIT_LINKING,
            _ => EXIT_USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Self::usage(format!("I/O error: {e}"))
    }
}

/// Result of a successful command: text for stdout and an exit code
/// (nonzero for tolerance or conditioning failures that still produce a report).
struct Outcome {
    stdout: String,
    code: i32,
}

fn parse_floats(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::usage(format!("cannot parse number '{t}' in '{s}'")))
        })
        .collect()
}

fn parse_point(s: &str) -> Result<CartesianPoint, CliError> {
    match parse_floats(s)?.as_slice() {
        [x, y, z] => Ok(CartesianPoint::new(*x, *y, *z)),
        _ => Err(CliError::usage(format!(
            "expected a point x,y,z, got '{s}'"
        ))),
    }
}

fn parse_pair(s: &str, what: &str) -> Result<[f64; 2], CliError> {
    match parse_floats(s)?.as_slice() {
        [a, b] => Ok([*a, *b]),
        _ => Err(CliError::usage(format!(
            "{what} expects two values A,B, got '{s}'"
        ))),
    }
}

fn format_complex(c: Complex64) -> String {
    let sign = if c.im.is_sign_negative() { '-' } else { '+' };
    format!("{}{}{}i", c.re, sign, c.im.abs())
}

#[derive(Serialize)]
struct ComplexJson {
    re: f64,
    im: f64,
}

impl From<Complex64> for ComplexJson {
    fn from(c: Complex64) -> Self {
        Self { re: c.re, im: c.im }
    }
}

#[derive(Serialize)]
struct MapJson {
    m: i32,
    n: i32,
}

impl From<HopfMapSpec> for MapJson {
    fn from(s: HopfMapSpec) -> Self {
        Self { m: s.m(), n: s.n() }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serialization cannot fail");
    s.push('\n');
    s
}

/// Writes to `path` atomically, or returns the text for stdout.
fn emit(text: String, path: &Option<PathBuf>) -> Result<String, CliError> {
    match path {
        Some(p) => {
            export::write_atomic(p, |w| w.write_all(text.as_bytes()))?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

fn cmd_eval(args: &EvalArgs, config: &Command) -> Result<Outcome, CliError> {
    #[derive(Serialize)]
    struct Report<'a> {
        field: String,
        point: [f64; 3],
        value: ComplexJson,
        display: String,
        toroidal: Option<ToroidalPoint>,
        config: &'a Command,
    }
    let (field, _) = args.field.build()?;
    let p = parse_point(&args.point)?;
    let value = field.evaluate(&p)?;
    let toroidal = coords::to_toroidal(&p).ok();
    let report = Report {
        field: field.describe(),
        point: [p.x, p.y, p.z],
        value: value.into(),
        display: format_complex(value),
        toroidal,
        config,
    };
    Ok(Outcome {
        stdout: to_json(&report),
        code: EXIT_OK,
    })
}

fn cmd_scan(args: &ScanArgs, config: &Command) -> Result<Outcome, CliError> {
    #[derive(Serialize)]
    struct Report<'a> {
        map: Option<MapJson>,
        field: String,
        samples: usize,
        h: f64,
        max: f64,
        mean: f64,
        p99: f64,
        excluded: usize,
        seed: u64,
        fail_above: Option<f64>,
        passed: bool,
        config: &'a Command,
    }
    let (field, spec) = args.field.build()?;
    let sampling = args.sampling.spec()?;
    let r = residual_scan(&field, &sampling, args.sampling.h)?;
    let passed = args.fail_above.is_none_or(|t| r.max <= t);
    let report = Report {
        map: spec.map(MapJson::from),
        field: r.field,
        samples: r.samples,
        h: r.h,
        max: r.max,
        mean: r.mean,
        p99: r.p99,
        excluded: r.excluded,
        seed: sampling.seed,
        fail_above: args.fail_above,
        passed,
        config,
    };
    Ok(Outcome {
        stdout: emit(to_json(&report), &args.output)?,
        code: if passed { EXIT_OK } else { EXIT_TOLERANCE },
    })
}

fn write_geometry(fibers: &[Fiber], format: GeometryFormat, w: &mut dyn Write) -> io::Result<()> {
    match format {
        GeometryFormat::Csv => export::write_csv(fibers, w),
        GeometryFormat::Obj => export::write_obj(fibers, w),
    }
}

fn cmd_trace(args: &TraceArgs, config: &Command) -> Result<Outcome, CliError> {
    #[derive(Serialize)]
    struct FiberSummary {
        points: usize,
        arc_length: f64,
        windings: Option<Windings>,
    }
    #[derive(Serialize)]
    struct Report<'a> {
        map: MapJson,
        level: ComplexJson,
        components: usize,
        fibers: Vec<FiberSummary>,
        output: &'a Path,
        config: &'a Command,
    }
    let spec = args.map.spec()?;
    let opts = args.trace.options()?;
    let level = match &args.level {
        Some(l) => parse_complex(l)?,
        None => Complex64::from_polar(hopf::profile_f(&spec, args.eta)?, args.sigma),
    };
    let fibers = fibers::trace_level_set(&spec, level, &opts)?;
    match &args.output {
        None => {
            let mut buf = Vec::new();
            write_geometry(&fibers, args.format, &mut buf)?;
            Ok(Outcome {
                stdout: String::from_utf8(buf).expect("geometry output is ASCII"),
                code: EXIT_OK,
            })
        }
        Some(path) => {
            export::write_atomic(path, |w| write_geometry(&fibers, args.format, w))?;
            let report = Report {
                map: spec.into(),
                level: level.into(),
                components: fibers.len(),
                fibers: fibers
                    .iter()
                    .map(|f| FiberSummary {
                        points: f.points.len(),
                        arc_length: f.arc_length,
                        windings: f.windings,
                    })
                    .collect(),
                output: path,
                config,
            };
            Ok(Outcome {
                stdout: to_json(&report),
                code: EXIT_OK,
            })
        }
    }
}

#[derive(Serialize)]
struct LinkingJson {
    raw: f64,
    rounded: i64,
    deviation: f64,
    reliable: bool,
}

impl From<LinkingResult> for LinkingJson {
    fn from(r: LinkingResult) -> Self {
        Self {
            raw: r.raw,
            rounded: r.rounded,
            deviation: r.deviation,
            reliable: r.is_reliable(),
        }
    }
}

fn cmd_link(args: &LinkArgs, config: &Command) -> Result<Outcome, CliError> {
    #[derive(Serialize)]
    struct Report<'a> {
        #[serde(flatten)]
        result: LinkingJson,
        method: LinkingMethod,
        fibers: [usize; 2],
        config: &'a Command,
    }
    let method = match args.method {
        MethodArg::SolidAngle => LinkingMethod::SolidAngle,
        MethodArg::Midpoint => LinkingMethod::Midpoint,
    };
    let first = export::read_csv_file(&args.input)?;
    let (a, b) = match &args.other {
        Some(path) => (first, export::read_csv_file(path)?),
        None => {
            if first.len() != 2 {
                return Err(CliError::usage(format!(
                    "{} holds {} fibers; expected exactly 2 (or pass a second file)",
                    args.input.display(),
                    first.len()
                )));
            }
            let mut it = first.into_iter();
            let a = it.next().into_iter().collect::<Vec<_>>();
            (a, it.collect())
        }
    };
    if a.is_empty() || b.is_empty() {
        return Err(CliError::usage("no fibers in input"));
    }
    let result = if a.len() == 1 && b.len() == 1 {
        gauss_linking_with(&a[0], &b[0], method)?
    } else {
        let mut raw = Vec::new();
        for fa in &a {
            for fb in &b {
                raw.push(gauss_linking_with(fa, fb, method)?.raw);
            }
        }
        LinkingResult::from_raw(crate::calculus::compensated_sum(raw))
    };
    let code = if result.is_reliable() {
        EXIT_OK
    } else {
        EXIT_LINKING
    };
    let report = Report {
        result: result.into(),
        method,
        fibers: [a.len(), b.len()],
        config,
    };
    Ok(Outcome {
        stdout: emit(to_json(&report), &args.output)?,
        code,
    })
}

fn cmd_index(args: &IndexArgs, config: &Command) -> Result<Outcome, CliError> {
    #[derive(Serialize)]
    struct Report<'a> {
        map: MapJson,
        #[serde(flatten)]
        result: LinkingJson,
        expected: i64,
        per_component: Option<LinkingJson>,
        components: u32,
        target: Option<String>,
        experimental: bool,
        note: &'static str,
        config: &'a Command,
    }
    let spec = args.map.spec()?;
    let opts = args.trace.options()?;
    let setup = IndexSetup {
        etas: parse_pair(&args.etas, "--etas")?,
        sigmas: parse_pair(&args.sigmas, "--sigmas")?,
    };
    let components = fibers::component_count(&spec);
    let note = if components > 1 {
        "level sets have gcd(|m|,|n|) components; the index sums the linking of all component pairs"
    } else {
        "level sets are connected"
    };
    let report = match parse_target(&args.target, &args.target_den)? {
        None => {
            let r = fibers::hopf_index_report(&spec, &setup, &opts)?;
            Report {
                map: spec.into(),
                result: r.total.into(),
                expected: spec.expected_index(),
                per_component: Some(r.per_component.into()),
                components,
                target: None,
                experimental: false,
                note,
                config,
            }
        }
        Some(map) => {
            // {F∘χ = c} is the union of {χ = w} over the solutions of F(w) = c.
            let [la, lb] = setup.levels(&spec)?;
            let pre_a = map.preimages(map.eval(la)?)?;
            let pre_b = map.preimages(map.eval(lb)?)?;
            let trace_all = |levels: &[Complex64]| -> crate::Result<Vec<Fiber>> {
                let mut out = Vec::new();
                for &w in levels {
                    out.extend(fibers::trace_level_set(&spec, w, &opts)?);
                }
                Ok(out)
            };
            let total = total_linking(&trace_all(&pre_a)?, &trace_all(&pre_b)?)?;
            let d = map.degree() as i64;
            Report {
                map: spec.into(),
                result: total.into(),
                expected: d * d * spec.expected_index(),
                per_component: None,
                components,
                target: Some(map.to_string()),
                experimental: true,
                note: "experimental: linking of the preimages of two regular values of F∘χ",
                config,
            }
        }
    };
    let code = if !report.result.reliable {
        EXIT_LINKING
    } else if report.result.rounded != report.expected {
        EXIT_TOLERANCE
    } else {
        EXIT_OK
    };
    Ok(Outcome {
        stdout: emit(to_json(&report), &args.output)?,
        code,
    })
}

#[derive(Serialize)]
struct CheckJson {
    name: &'static str,
    value: f64,
    tolerance: f64,
    passed: bool,
}

fn check_max(name: &'static str, value: f64, tolerance: f64) -> CheckJson {
    CheckJson {
        name,
        value,
        tolerance,
        passed: value <= tolerance,
    }
}

fn cmd_verify(args: &VerifyArgs, config: &Command) -> Result<Outcome, CliError> {
    #[derive(Serialize)]
    struct Report<'a> {
        map: MapJson,
        samples: usize,
        excluded: usize,
        seed: u64,
        checks: Vec<CheckJson>,
        passed: bool,
        config: &'a Command,
    }
    let spec = args.map.spec()?;
    let sampling = args.sampling.spec()?;
    let g = geometry::geometry_scan(&spec, &sampling, args.sampling.h)?;
    let checks = vec![
        check_max(
            "vertical_annihilation",
            g.vertical_annihilation,
            args.tol_vertical,
        ),
        check_max(
            "frame_orthonormality",
            g.frame_orthonormality,
            args.tol_duality,
        ),
        check_max("coframe_duality", g.coframe_duality, args.tol_duality),
        check_max("conformal_offdiag", g.conformal_offdiag, args.tol_conformal),
        check_max(
            "conformal_proportionality",
            g.conformal_proportionality,
            args.tol_conformal,
        ),
        CheckJson {
            name: "lambda_positive",
            value: g.lambda_min,
            tolerance: 0.0,
            passed: g.lambda_min > 0.0,
        },
        check_max("split_orthogonality", g.split_orthogonality, args.tol_split),
        check_max("split_balance", g.split_balance, args.tol_split),
    ];
    let passed = checks.iter().all(|c| c.passed);
    let report = Report {
        map: spec.into(),
        samples: g.samples,
        excluded: g.excluded,
        seed: sampling.seed,
        checks,
        passed,
        config,
    };
    Ok(Outcome {
        stdout: emit(to_json(&report), &args.output)?,
        code: if passed { EXIT_OK } else { EXIT_TOLERANCE },
    })
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| {
            CliError::usage(format!(
                "{THREADS_ENV} must be a positive integer, got '{value}'"
            ))
        })?;
    // Fails only if the global pool already exists, e.g. on a second call in-process.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(())
}

fn dispatch(command: &Command) -> Result<Outcome, CliError> {
    configure_threads()?;
    match command {
        Command::Eval(a) => cmd_eval(a, command),
        Command::Scan(a) => cmd_scan(a, command),
        Command::Trace(a) => cmd_trace(a, command),
        Command::Link(a) => cmd_link(a, command),
        Command::Index(a) => cmd_index(a, command),
        Command::Verify(a) => cmd_verify(a, command),
    }
}

/// Parses `args` (including the program name) and runs the command, returning the exit code.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = stdout.write_all(rendered.as_bytes());
                return EXIT_OK;
            }
            let _ = stderr.write_all(rendered.as_bytes());
            return EXIT_USAGE;
        }
    };
    match dispatch(&cli.command) {
        Ok(outcome) => {
            if stdout.write_all(outcome.stdout.as_bytes()).is_err() {
                return EXIT_USAGE;
            }
            outcome.code
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message);
            e.code
        }
    }
}

pub fn run() -> i32 {
    run_with(
        std::env::args_os(),
        &mut io::stdout().lock(),
        &mut io::stderr().lock(),
    )
}
