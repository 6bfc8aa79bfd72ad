//! Command-line front end: every subcommand reads JSON set documents, runs
//! one library operation and writes the result as JSON (or CSV for
//! `project`).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use conzono::containment::{inner_reduce_zonotope, inner_scale, make_template, ScaleNorm, TemplateKind};
use conzono::halfspace::{conzono_halfspace_intersection, intersect_hpolytope, ContainmentCheck};
use conzono::hull::{convex_hull, convex_hull_with_point};
use conzono::invariance::{mrpi_iterative, rpi_onestep, AutonomousSystem};
use conzono::io::{self, IoError, SetDocument, SetValue};
use conzono::nalgebra::{DMatrix, DVector};
use conzono::numerics::set_feasibility_tolerance;
use conzono::oracle;
use conzono::pontryagin::{pontryagin_iterative, pontryagin_onestep};
use conzono::reach::{wayset, wayset_inner_box, wayset_reduce, WaysetMethod};
use conzono::reduction::{reduce_fully, remove_redundant_pairs, DEFAULT_EPS};
use conzono::{ConstrainedZonotope, Halfspace, SetError, Zonotope};

#[derive(Parser, Debug)]
#[command(
    name = "conzono",
    version,
    about = "Zonotope and constrained-zonotope set operations"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// LP feasibility tolerance.
    #[arg(long, global = true, value_name = "TOL")]
    lp_tol: Option<f64>,
    /// Monte Carlo samples for volumes in three or more dimensions.
    #[arg(long, global = true, default_value_t = oracle::DEFAULT_SAMPLES, value_name = "N")]
    mc_samples: usize,
    /// Seed for Monte Carlo sampling.
    #[arg(long, global = true, default_value_t = oracle::DEFAULT_SEED)]
    seed: u64,
    /// Refinement passes of the interval emptiness check.
    #[arg(long, global = true, default_value_t = conzono::halfspace::DEFAULT_PASSES, value_name = "N")]
    ia_passes: usize,
}

#[derive(Args, Debug)]
struct Output {
    /// Output file; standard output when omitted.
    #[arg(short, long, value_name = "FILE")]
    output: Option<PathBuf>,
    /// Name stored in the output document.
    #[arg(long)]
    name: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Affine image `R Z + t`.
    Map {
        input: PathBuf,
        /// Matrix rows separated by `;`, entries by `,`.
        #[arg(long, allow_hyphen_values = true)]
        matrix: String,
        /// Translation added after the map.
        #[arg(long, allow_hyphen_values = true)]
        offset: Option<String>,
        #[command(flatten)]
        out: Output,
    },
    /// Minkowski sum.
    Sum {
        first: PathBuf,
        second: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Intersection, or generalized intersection `{x in Z | R x in Y}`
    /// with `--matrix`. A halfspace-form second operand is cut face by face.
    Intersect {
        first: PathBuf,
        second: PathBuf,
        /// Map applied before intersecting, rows separated by `;`
        #[arg(long, allow_hyphen_values = true)]
        matrix: Option<String>,
        /// Redundancy check for halfspace-form operands.
        #[arg(long, value_enum, default_value_t = Check::Lp)]
        check: Check,
        #[command(flatten)]
        out: Output,
    },
    /// Intersection with the halfspace `h^T x <= f`.
    Halfspace {
        input: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        h: String,
        #[arg(long, allow_hyphen_values = true)]
        f: f64,
        #[command(flatten)]
        out: Output,
    },
    /// Merge parallel generators and remove redundant pairs.
    Reduce {
        input: PathBuf,
        /// Parallelism tolerance.
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
        /// Only remove redundant generator/constraint pairs.
        #[arg(long)]
        keep_parallel: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Inner approximation.
    Inner {
        input: PathBuf,
        /// Reduced generator count for a zonotope input.
        #[arg(long, conflicts_with = "template")]
        order: Option<usize>,
        /// Shape scaled into a constrained zonotope input
        #[arg(long, value_enum, default_value_t = Template::Box)]
        template: Template,
        /// Norm of the scale factors in the one-step program
        #[arg(long, value_enum, default_value_t = Norm::Inf)]
        norm: Norm,
        /// Point the result must contain.
        #[arg(long, allow_hyphen_values = true)]
        anchor: Option<String>,
        #[command(flatten)]
        out: Output,
    },
    /// Convex hull of two sets, or of a set and a point.
    Hull {
        first: PathBuf,
        #[arg(required_unless_present = "point")]
        second: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true, conflicts_with = "second")]
        point: Option<String>,
        #[command(flatten)]
        out: Output,
    },
    /// Robust positively invariant set of `x+ = A x + w`.
    Rpi {
        /// State matrix rows separated by `;`.
        #[arg(long, allow_hyphen_values = true)]
        dynamics: String,
        /// Disturbance zonotope document.
        #[arg(long)]
        disturbance: PathBuf,
        /// Generator powers for the one-step program.
        #[arg(long, conflicts_with = "eps")]
        steps: Option<usize>,
        /// Accuracy of the iterative outer approximation.
        #[arg(long)]
        eps: Option<f64>,
        /// Norm of the scale factors in the one-step program
        #[arg(long, value_enum, default_value_t = Norm::Inf)]
        norm: Norm,
        #[command(flatten)]
        out: Output,
    },
    /// Pontryagin difference `Z1 - Z2`.
    Pontryagin {
        minuend: PathBuf,
        subtrahend: PathBuf,
        /// Exact recursion or one-step inner approximation
        #[arg(long, value_enum, default_value_t = DifferenceMethod::Iterative)]
        method: DifferenceMethod,
        /// Norm of the scale factors in the one-step program
        #[arg(long, value_enum, default_value_t = Norm::Inf)]
        norm: Norm,
        #[command(flatten)]
        out: Output,
    },
    /// Backward reachable wayset of a scenario document.
    Wayset {
        scenario: PathBuf,
        /// How each step meets the state constraints
        #[arg(long, value_enum, default_value_t = Strategy::Zh)]
        strategy: Strategy,
        /// Remove redundant pairs from the result.
        #[arg(long)]
        reduce: bool,
        /// Replace the wayset by its largest inner box.
        #[arg(long)]
        inner_box: bool,
        /// Force the inner box to contain the scenario anchor.
        #[arg(long, requires = "inner_box")]
        anchored: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Volume of a set, or the ratio `(V(A)/V(B))^(1/n)`.
    Volume {
        input: PathBuf,
        #[arg(long)]
        ratio: Option<PathBuf>,
    },
    /// Two-dimensional projection polygon as CSV.
    Project {
        input: PathBuf,
        /// Zero-based coordinates to keep.
        #[arg(long)]
        dims: String,
        #[arg(short, long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Dimension, sizes and orders.
    Info { input: PathBuf },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Check {
    Zh,
    Lp,
    Ia,
    Never,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Template {
    Box,
    Zonotope,
    DropPair,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Norm {
    One,
    Two,
    Inf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum DifferenceMethod {
    Iterative,
    Onestep,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Strategy {
    /// Cut a face only when the parent zonotope crosses it
    #[value(name = "ZH", alias = "zh")]
    Zh,
    /// Generalized intersection with the generator form of the state set every step
    #[value(name = "GI", alias = "gi")]
    Gi,
    /// Cut only when an LP shows the set leaves the face
    #[value(name = "LP", alias = "lp")]
    Lp,
    /// Cut unless interval refinement proves the outside part empty
    #[value(name = "IA", alias = "ia")]
    Ia,
}

impl From<Norm> for ScaleNorm {
    fn from(n: Norm) -> Self {
        match n {
            Norm::One => ScaleNorm::One,
            Norm::Two => ScaleNorm::Two,
            Norm::Inf => ScaleNorm::Inf,
        }
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Io(IoError),
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::Io(e)
    }
}

impl From<SetError> for Failure {
    fn from(e: SetError) -> Self {
        Failure::Io(IoError::Set(e))
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Io(IoError::Set(SetError::Numerical(_) | SetError::BudgetExceeded(_))) => 3,
            Failure::Io(_) => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage: {m}"),
            Failure::Io(e) => write!(f, "{e}"),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn numbers(what: &str, text: &str) -> Outcome<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Failure::Usage(format!("{what}: `{t}` is not a number")))
        })
        .collect()
}

fn vector(what: &str, text: &str) -> Outcome<DVector<f64>> {
    Ok(DVector::from_vec(numbers(what, text)?))
}

fn matrix(what: &str, text: &str) -> Outcome<DMatrix<f64>> {
    let rows = text.split(';').map(|r| numbers(what, r)).collect::<Outcome<Vec<_>>>()?;
    let width = rows[0].len();
    if rows.iter().any(|r| r.len() != width) {
        return Err(Failure::Usage(format!("{what}: rows have different lengths")));
    }
    Ok(DMatrix::from_fn(rows.len(), width, |i, j| rows[i][j]))
}

fn load(path: &Path) -> Outcome<SetValue> {
    Ok(io::read_set(path)?.to_value()?)
}

fn generator_form(path: &Path) -> Outcome<ConstrainedZonotope> {
    load(path)?.to_conzono().ok_or_else(|| {
        Failure::Io(IoError::Schema {
            field: "kind".into(),
            message: format!("{}: a generator-form set is required", path.display()),
        })
    })
}

fn zonotope(path: &Path) -> Outcome<Zonotope> {
    match load(path)? {
        SetValue::Zonotope(z) => Ok(z),
        SetValue::Point(p) => Ok(Zonotope::singleton(p)?),
        _ => Err(Failure::Io(IoError::Schema {
            field: "kind".into(),
            message: format!("{}: a zonotope is required", path.display()),
        })),
    }
}

/// Keeps zonotopes as zonotopes when the operation preserves the kind.
fn as_value(z: ConstrainedZonotope) -> SetValue {
    if z.is_zonotope() {
        SetValue::Zonotope(z.parent())
    } else {
        SetValue::Conzono(z)
    }
}

fn emit(out: &Output, value: &SetValue) -> Outcome<()> {
    let doc = SetDocument::from_value(value, out.name.clone());
    match &out.output {
        Some(p) => io::write_set(p, &doc)?,
        None => print!("{}", io::to_json(&doc)),
    }
    Ok(())
}

fn check_of(c: Check, passes: usize) -> ContainmentCheck {
    match c {
        Check::Zh => ContainmentCheck::ParentZonotope,
        Check::Lp => ContainmentCheck::Lp,
        Check::Ia => ContainmentCheck::Interval { passes },
        Check::Never => ContainmentCheck::Never,
    }
}

fn run(cli: Cli) -> Outcome<()> {
    let g = &cli.global;
    if let Some(tol) = g.lp_tol {
        set_feasibility_tolerance(tol).map_err(|e| Failure::Usage(e.to_string()))?;
    }
    match &cli.command {
        Command::Map {
            input,
            matrix: m,
            offset,
            out,
        } => {
            let r = matrix("--matrix", m)?;
            let mapped = match load(input)? {
                SetValue::Zonotope(z) => SetValue::Zonotope(z.linear_map(&r)?),
                SetValue::Point(p) => {
                    if r.ncols() != p.len() {
                        return Err(SetError::DimensionMismatch("map columns vs point".into()).into());
                    }
                    SetValue::Point(&r * p)
                }
                SetValue::Conzono(z) => SetValue::Conzono(z.linear_map(&r)?),
                SetValue::HPolytope(_) => {
                    return Err(Failure::Usage(
                        "halfspace-form sets cannot be mapped; convert first".into(),
                    ))
                }
            };
            let mapped = match offset {
                None => mapped,
                Some(t) => {
                    let t = vector("--offset", t)?;
                    match mapped {
                        SetValue::Zonotope(z) => SetValue::Zonotope(z.translate(&t)?),
                        SetValue::Conzono(z) => SetValue::Conzono(z.translate(&t)?),
                        SetValue::Point(p) if p.len() == t.len() => SetValue::Point(p + t),
                        _ => return Err(SetError::DimensionMismatch("offset".into()).into()),
                    }
                }
            };
            emit(out, &mapped)
        }
        Command::Sum { first, second, out } => {
            let (a, b) = (generator_form(first)?, generator_form(second)?);
            emit(out, &as_value(a.minkowski_sum(&b)?))
        }
        Command::Intersect {
            first,
            second,
            matrix: m,
            check,
            out,
        } => {
            let x = generator_form(first)?;
            let z = match (load(second)?, m) {
                (SetValue::HPolytope(p), None) => intersect_hpolytope(&x, &p, check_of(*check, g.ia_passes))?.set,
                (SetValue::HPolytope(_), Some(_)) => {
                    return Err(Failure::Usage("--matrix needs a generator-form second operand".into()))
                }
                (y, m) => {
                    let y = y.to_conzono().expect("non-halfspace sets have a generator form");
                    match m {
                        Some(m) => x.generalized_intersection(&y, &matrix("--matrix", m)?)?,
                        None => x.intersection(&y)?,
                    }
                }
            };
            emit(out, &SetValue::Conzono(z))
        }
        Command::Halfspace { input, h, f, out } => {
            let hs = Halfspace::new(vector("--h", h)?, *f)?;
            let z = generator_form(input)?;
            emit(out, &SetValue::Conzono(conzono_halfspace_intersection(&z, &hs)?))
        }
        Command::Reduce {
            input,
            eps,
            keep_parallel,
            out,
        } => {
            let z = generator_form(input)?;
            let r = if *keep_parallel {
                remove_redundant_pairs(&z)?
            } else {
                reduce_fully(&z, *eps)?
            };
            emit(out, &as_value(r))
        }
        Command::Inner {
            input,
            order,
            template,
            norm,
            anchor,
            out,
        } => {
            if let Some(n_r) = order {
                let z = zonotope(input)?;
                return emit(out, &SetValue::Zonotope(inner_reduce_zonotope(&z, *n_r)?));
            }
            let z = generator_form(input)?;
            let kind = match template {
                Template::Box => TemplateKind::Box,
                Template::Zonotope => TemplateKind::Zonotope,
                Template::DropPair => TemplateKind::DropPair,
            };
            let points = match anchor {
                Some(a) => vec![vector("--anchor", a)?],
                None => Vec::new(),
            };
            let t = make_template(&z, kind)?;
            let (set, _) = inner_scale(&z, &t, (*norm).into(), &points)?;
            emit(out, &as_value(set))
        }
        Command::Hull {
            first,
            second,
            point,
            out,
        } => {
            let a = generator_form(first)?;
            let h = match (second, point) {
                (Some(b), _) => convex_hull(&a, &generator_form(b)?)?,
                (None, Some(p)) => convex_hull_with_point(&a, &vector("--point", p)?)?,
                (None, None) => unreachable!("clap requires one operand"),
            };
            emit(out, &SetValue::Conzono(h))
        }
        Command::Rpi {
            dynamics,
            disturbance,
            steps,
            eps,
            norm,
            out,
        } => {
            let sys = AutonomousSystem::new(matrix("--dynamics", dynamics)?, zonotope(disturbance)?, None)?;
            let z = match (steps, eps) {
                (Some(s), _) => rpi_onestep(&sys, *s, (*norm).into())?.0,
                (None, e) => {
                    let (z, alpha, s) = mrpi_iterative(&sys, e.unwrap_or(1e-6))?;
                    eprintln!("contraction {alpha}, {s} terms");
                    z
                }
            };
            emit(out, &SetValue::Zonotope(z))
        }
        Command::Pontryagin {
            minuend,
            subtrahend,
            method,
            norm,
            out,
        } => {
            let b = zonotope(subtrahend)?;
            match method {
                DifferenceMethod::Iterative => {
                    let (d, empty) = pontryagin_iterative(&generator_form(minuend)?, &b)?;
                    if empty {
                        eprintln!("difference is empty");
                    }
                    emit(out, &SetValue::Conzono(d))
                }
                DifferenceMethod::Onestep => {
                    let (d, _) = pontryagin_onestep(&zonotope(minuend)?, &b, (*norm).into())?;
                    emit(out, &SetValue::Zonotope(d))
                }
            }
        }
        Command::Wayset {
            scenario,
            strategy,
            reduce,
            inner_box,
            anchored,
            out,
        } => {
            let sc = io::read_scenario(scenario)?.to_scenario()?;
            let method = match strategy {
                Strategy::Zh => WaysetMethod::ParentZonotope,
                Strategy::Gi => WaysetMethod::Generalized,
                Strategy::Lp => WaysetMethod::Lp,
                Strategy::Ia => WaysetMethod::Interval { passes: g.ia_passes },
            };
            let w = wayset(&sc.system, &sc.target, sc.horizon, method, false)?;
            if w.empty {
                eprintln!("wayset is empty");
            }
            let mut set = w.set;
            if *reduce {
                set = wayset_reduce(&set)?;
            }
            if *inner_box {
                let anchor = if *anchored {
                    Some(sc.anchor.as_ref().ok_or_else(|| {
                        Failure::Io(IoError::Schema {
                            field: "anchor".into(),
                            message: "required by --anchored".into(),
                        })
                    })?)
                } else {
                    None
                };
                set = wayset_inner_box(&set, anchor)?;
            }
            emit(out, &as_value(set))
        }
        Command::Volume { input, ratio } => {
            let a = generator_form(input)?;
            match ratio {
                Some(b) => {
                    let r = oracle::volume_ratio(&a, &generator_form(b)?, g.mc_samples, g.seed)?;
                    println!("{r}");
                }
                None => {
                    let v = oracle::volume(&a, g.mc_samples, g.seed)?;
                    println!("{} {}", v.value, v.stderr);
                }
            }
            Ok(())
        }
        Command::Project { input, dims, output } => {
            let dims = dims
                .split(',')
                .map(|t| t.trim().parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| Failure::Usage("--dims takes two coordinate indices".into()))?;
            if dims.len() != 2 {
                return Err(Failure::Usage("--dims takes exactly two coordinate indices".into()));
            }
            let z = generator_form(input)?;
            let p = oracle::projector(z.dim(), &dims)?;
            let flat = z.linear_map(&p)?;
            let poly = oracle::convex_hull_2d(&oracle::enumerate_vertices(&flat)?);
            let mut csv = String::from("x,y\n");
            for v in &poly {
                csv.push_str(&format!("{},{}\n", v[0], v[1]));
            }
            match output {
                Some(path) => std::fs::write(path, csv).map_err(|source| IoError::File {
                    path: path.display().to_string(),
                    source,
                })?,
                None => print!("{csv}"),
            }
            Ok(())
        }
        Command::Info { input } => {
            match load(input)? {
                SetValue::HPolytope(p) => {
                    println!("kind hpolytope\nn {}\nrows {}", p.dim(), p.n_rows());
                }
                SetValue::Point(p) => println!("kind point\nn {}", p.len()),
                v => {
                    let kind = if matches!(v, SetValue::Zonotope(_)) {
                        "zonotope"
                    } else {
                        "conzono"
                    };
                    let z = v.to_conzono().expect("generator form");
                    println!(
                        "kind {kind}\nn {}\nn_g {}\nn_c {}\norder {}\ndof_order {}",
                        z.dim(),
                        z.n_gens(),
                        z.n_cons(),
                        z.order(),
                        z.dof_order()
                    );
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
