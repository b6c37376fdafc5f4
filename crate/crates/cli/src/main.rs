//! `g2loop` command-line front end.
//!
//! Exit codes: 0 success, 1 verification or numerical failure, 2 usage error.

mod verify;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use g2loop::cayley::{multiplication_table, Dim};
use g2loop::filament::{perturbed_circle, simulate, FilamentState, FlowConfig, CFL_DEFAULT};
use g2loop::g2struct::{isotropic_plane, phi, Triple, MAXIMALITY_PROBES};
use g2loop::loopspace::{arclength_pairing, complex_structure, transgressed_standard, DiscreteLoop, FieldFile, NormalField};
use g2loop::maslov::{parabola_example, relative_index, Filling, GridDims, HomotopyData};
use g2loop::sampling::seeded_rng;
use g2loop::Error;
use serde::Serialize;
use serde_json::json;

const THREADS_ENV: &str = "G2LOOP_THREADS";

#[derive(Parser, Debug)]
#[command(name = "g2loop", version, about = "Octonionic geometry, loop-space forms, Maslov indices and filament flow")]
struct Cli {
    /// Print reports as JSON instead of tables.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Octonion multiplication table as JSON.
    Table {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Three-form checks and isotropic planes.
    G2 {
        #[command(subcommand)]
        command: G2Command,
    },
    /// Forms on the loop space.
    Loop {
        #[command(subcommand)]
        command: LoopCommand,
    },
    /// Relative Maslov index pipeline.
    Maslov {
        #[command(subcommand)]
        command: MaslovCommand,
    },
    /// Binormal flow of a closed curve.
    Flow(FlowArgs),
}

#[derive(Subcommand, Debug)]
enum G2Command {
    /// Run the invariant suite on the standard form.
    Verify,
    /// The 4-plane span{i, j, l, (i×j)×l} for basis indices i,j,l in 1..=7.
    Isotropic {
        #[arg(long, value_parser = parse_triple)]
        triple: [usize; 3],
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum LoopCommand {
    /// ω(X, Y) for a loop (CSV) and two normal fields (JSON).
    Omega {
        #[arg(long = "loop")]
        loop_file: PathBuf,
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum MaslovCommand {
    /// Relative index of a homotopy file.
    Index {
        #[arg(long)]
        data: PathBuf,
        /// Also report the index mod 4.
        #[arg(long)]
        mod4: bool,
    },
    /// Write the paraboloid-against-plane homotopy.
    Parabola {
        #[arg(long, allow_negative_numbers = true)]
        rho: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "3", value_parser = parse_dim)]
        dim: Dim,
        #[arg(long, value_enum, default_value_t = FillingArg::Linear)]
        filling: FillingArg,
        /// Grid as A,B,C (τ intervals, t intervals, z samples).
        #[arg(long, default_value = "16,16,64", value_parser = parse_grid)]
        grid: GridDims,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FillingArg {
    Linear,
    Bulged,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum InitKind {
    Circle,
    File,
}

#[derive(Args, Debug)]
struct FlowArgs {
    #[arg(long, value_enum, default_value_t = InitKind::Circle)]
    init: InitKind,
    /// Loop CSV for `--init file`.
    #[arg(long = "loop")]
    loop_file: Option<PathBuf>,
    #[arg(long, default_value = "3", value_parser = parse_dim)]
    dim: Dim,
    #[arg(long, default_value_t = 256)]
    n: usize,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true, value_parser = positive)]
    radius: f64,
    /// Amplitude of a random normal perturbation of the circle.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true, value_parser = non_negative)]
    perturb: f64,
    /// Resample a file loop to unit speed before the run.
    #[arg(long)]
    arclength: bool,
    #[arg(long, default_value_t = 1e-4, allow_negative_numbers = true, value_parser = positive)]
    dt: f64,
    #[arg(long, default_value_t = 10_000)]
    steps: usize,
    /// Snapshot and first-integral interval in steps.
    #[arg(long, default_value_t = 100, value_parser = at_least_one)]
    report: usize,
    #[arg(long, default_value_t = CFL_DEFAULT, allow_negative_numbers = true, value_parser = positive)]
    cfl: f64,
    /// Apply the 2/3-rule filter after every step.
    #[arg(long)]
    filter: bool,
    /// Trajectory CSV.
    #[arg(long)]
    out: PathBuf,
    /// First-integral CSV; defaults to the trajectory path with `.conserved.csv`.
    #[arg(long)]
    conserved: Option<PathBuf>,
}

fn parse_dim(s: &str) -> Result<Dim, String> {
    let n: usize = s.parse().map_err(|_| format!("expected 3 or 7, got {s:?}"))?;
    Dim::from_usize(n).map_err(|_| format!("expected 3 or 7, got {n}"))
}

fn positive(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(format!("must be positive, got {s}"))
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if x >= 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(format!("must be non-negative, got {s}"))
    }
}

fn parse_triple(s: &str) -> Result<[usize; 3], String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|_| format!("bad index {p:?}")))
        .collect::<Result<_, _>>()?;
    match v.as_slice() {
        &[i, j, l] if [i, j, l].iter().all(|k| (1..=7).contains(k)) => Ok([i, j, l]),
        _ => Err(format!("expected three indices in 1..=7 as i,j,l, got {s:?}")),
    }
}

fn parse_grid(s: &str) -> Result<GridDims, String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|_| format!("bad grid size {p:?}")))
        .collect::<Result<_, _>>()?;
    match v.as_slice() {
        &[a, b, c] if a >= 1 && b >= 1 && c >= 8 => Ok(GridDims { a, b, c }),
        _ => Err(format!("expected A,B,C with A,B ≥ 1 and C ≥ 8, got {s:?}")),
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Check(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Check(_) => 1,
        }
    }
}

/// Input and parameter problems are usage errors; everything the numerics
/// reject after accepting the input is a failure.
impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Io(_)
            | Error::Parse(_)
            | Error::InvalidHomotopy(_)
            | Error::InvalidParameter(_)
            | Error::DimensionMismatch(_)
            | Error::TooFewSamples { .. }
            | Error::NotNormal { .. }
            | Error::NotImmersed { .. }
            | Error::BadTriple(_)
            | Error::NoIntersection(_) => Failure::Usage(msg),
            _ => Failure::Check(msg),
        }
    }
}

type Outcome = Result<(), Failure>;

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Outcome {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

fn print_json<T: Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable report"));
}

fn cmd_table(out: Option<PathBuf>, json_mode: bool) -> Outcome {
    let table = multiplication_table();
    let text = serde_json::to_string_pretty(&table).expect("serializable table") + "\n";
    match out {
        Some(p) => {
            write_text(&p, &text)?;
            if json_mode {
                print_json(&json!({ "written": p.display().to_string() }));
            } else {
                println!("wrote {}", p.display());
            }
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_verify(seed: u64, json_mode: bool) -> Outcome {
    let checks = verify::run_suite(seed);
    let ok = checks.iter().all(|c| c.pass);
    if json_mode {
        print_json(&json!({ "pass": ok, "seed": seed, "checks": checks }));
    } else {
        let w = checks.iter().map(|c| c.name.chars().count()).max().unwrap_or(0);
        println!("{:<w$}  {:>10}  {:>8}  result", "check", "worst", "tol");
        for c in &checks {
            let pad = w - c.name.chars().count();
            println!(
                "{}{}  {:>10.3e}  {:>8.1e}  {}",
                c.name,
                " ".repeat(pad),
                c.worst,
                c.tol,
                if c.pass { "PASS" } else { "FAIL" }
            );
        }
        println!("{}", if ok { "all checks passed" } else { "some checks FAILED" });
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::Check("invariant suite failed".into()))
    }
}

fn cmd_isotropic(triple: [usize; 3], out: Option<PathBuf>, json_mode: bool) -> Outcome {
    let [i, j, l] = triple;
    let plane = isotropic_plane(&Triple::basis(i, j, l))?;
    let probe = plane.probe_maximality(phi(), MAXIMALITY_PROBES);
    let basis: Vec<Vec<f64>> = plane.basis().iter().map(|v| v.as_slice().to_vec()).collect();
    let doc = json!({
        "format": "g2loop-isotropic-plane",
        "version": 1,
        "triple": triple,
        "basis": basis,
        "max_form_value": plane.max_form_value(phi()),
        "maximal": probe.maximal,
        "probes": probe.probes,
        "min_violation": probe.min_violation,
    });
    let text = serde_json::to_string_pretty(&doc).expect("serializable plane") + "\n";
    match out {
        Some(p) => {
            write_text(&p, &text)?;
            if json_mode {
                print_json(&json!({ "written": p.display().to_string(), "maximal": probe.maximal }));
            } else {
                println!("wrote {} (maximal: {})", p.display(), probe.maximal);
            }
        }
        None => print!("{text}"),
    }
    if probe.maximal {
        Ok(())
    } else {
        Err(Failure::Check("plane failed the maximality probe".into()))
    }
}

fn read_field(path: &Path, gamma: &DiscreteLoop) -> Result<NormalField, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    let f = FieldFile::from_json(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    if f.dim != gamma.dim().n() || f.n != gamma.n() {
        return Err(Failure::Usage(format!(
            "{}: field has dim {} and {} samples, loop has dim {} and {}",
            path.display(),
            f.dim,
            f.n,
            gamma.dim(),
            gamma.n()
        )));
    }
    NormalField::new(gamma, f.flat()).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn cmd_omega(loop_file: PathBuf, x: PathBuf, y: PathBuf, json_mode: bool) -> Outcome {
    let gamma = DiscreteLoop::read_csv(open(&loop_file)?)
        .map_err(|e| Failure::Usage(format!("{}: {e}", loop_file.display())))?;
    let x = read_field(&x, &gamma)?;
    let y = read_field(&y, &gamma)?;
    let omega = transgressed_standard(&gamma, &x, &y)?;
    let jx = complex_structure(&gamma, &x)?;
    let pairing = arclength_pairing(&gamma, &jx, &y)?;
    if json_mode {
        print_json(&json!({ "omega": omega, "j_pairing": pairing, "difference": omega - pairing }));
    } else {
        println!("omega(X,Y)          {omega:.15e}");
        println!("∮(JX,Y)|γ'|dz       {pairing:.15e}");
        println!("difference          {:.3e}", omega - pairing);
    }
    Ok(())
}

fn cmd_index(data: PathBuf, mod4: bool, json_mode: bool) -> Outcome {
    let text = std::fs::read_to_string(&data).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", data.display())))?;
    let h = HomotopyData::from_json(&text).map_err(|e| Failure::Usage(format!("{}: {e}", data.display())))?;
    let ri = relative_index(&h)?;
    let m4 = ri.value.rem_euclid(4);
    if json_mode {
        let mut doc = json!({
            "label": ri.label,
            "dim": h.dim,
            "index": ri.value,
            "mu_s": ri.mu_s,
            "slices": ri.per_slice.len(),
        });
        if mod4 {
            doc["mod4"] = json!(m4);
        }
        print_json(&doc);
    } else {
        println!("label          {}", ri.label);
        println!("dim            {}", h.dim);
        println!("index          {}", ri.value);
        if mod4 {
            println!("index mod 4    {m4}");
        }
        println!("mu(S) before   {}", ri.mu_s);
        println!("slices agree   {}", ri.per_slice.len());
    }
    Ok(())
}

fn cmd_parabola(rho: f64, out: PathBuf, dim: Dim, filling: FillingArg, grid: GridDims, json_mode: bool) -> Outcome {
    let filling = match filling {
        FillingArg::Linear => Filling::Linear,
        FillingArg::Bulged => Filling::Bulged,
    };
    let ex = parabola_example(rho, dim, filling, grid).map_err(|e| match e {
        Error::NoIntersection(_) | Error::InvalidParameter(_) => Failure::Usage(format!("--rho: {e}")),
        e => e.into(),
    })?;
    let written = match &ex.data {
        Some(h) => {
            write_text(&out, &(h.to_json()? + "\n"))?;
            true
        }
        None => false,
    };
    if json_mode {
        print_json(&json!({ "rho": rho, "radii": ex.radii, "written": written.then(|| out.display().to_string()) }));
    } else {
        let radii: Vec<String> = ex.radii.iter().map(|r| format!("{r:.12}")).collect();
        println!("intersection radii   {}", radii.join(", "));
        if written {
            println!("wrote {}", out.display());
        } else {
            println!("the surfaces touch along one circle; no homotopy written");
        }
    }
    Ok(())
}

fn initial_loop(a: &FlowArgs, seed: u64) -> Result<DiscreteLoop, Failure> {
    match a.init {
        InitKind::Circle => {
            if a.loop_file.is_some() {
                return Err(Failure::Usage("--loop is only used with --init file".into()));
            }
            if a.perturb == 0.0 {
                return Ok(DiscreteLoop::arclength_circle(a.dim, a.radius, a.n)?);
            }
            let mut rng = seeded_rng(seed);
            let g = perturbed_circle(&mut rng, a.dim, a.n, a.perturb, 4)?;
            let pts: Vec<f64> = g.points().iter().map(|x| x * a.radius).collect();
            Ok(DiscreteLoop::with_period(a.dim, g.period(), pts)?.arclength_normalized()?)
        }
        InitKind::File => {
            let path = a
                .loop_file
                .as_ref()
                .ok_or_else(|| Failure::Usage("--init file requires --loop".into()))?;
            let g = DiscreteLoop::read_csv(open(path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            if g.dim() != a.dim {
                return Err(Failure::Usage(format!("--dim {} does not match the loop file (dim {})", a.dim, g.dim())));
            }
            Ok(if a.arclength { g.arclength_normalized()? } else { g })
        }
    }
}

fn conserved_path(a: &FlowArgs) -> PathBuf {
    a.conserved.clone().unwrap_or_else(|| {
        let stem = a.out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "traj".into());
        a.out.with_file_name(format!("{stem}.conserved.csv"))
    })
}

fn cmd_flow(a: FlowArgs, seed: u64, json_mode: bool) -> Outcome {
    let g = initial_loop(&a, seed)?;
    let s0 = FilamentState::new(g)?;
    let cfg = FlowConfig { cfl: a.cfl, filter: a.filter, ..FlowConfig::default() };
    let bound = s0.max_dt(&cfg);
    if a.dt >= bound {
        return Err(Failure::Usage(format!(
            "--dt {} exceeds the stability bound {bound:.4e} for this loop (cfl {})",
            a.dt, a.cfl
        )));
    }
    let tr = simulate(&s0, a.dt, a.steps, a.report, &cfg)?;
    let cpath = conserved_path(&a);
    let mut w = create(&a.out)?;
    tr.write_csv(&mut w)?;
    w.flush().map_err(|e| Failure::Usage(format!("cannot write {}: {e}", a.out.display())))?;
    let mut w = create(&cpath)?;
    tr.report.write_csv(&mut w)?;
    w.flush().map_err(|e| Failure::Usage(format!("cannot write {}: {e}", cpath.display())))?;

    let [d1, d2, d3] = tr.report.max_drift();
    let last = tr.report.rows().last().expect("report has the initial row");
    if json_mode {
        print_json(&json!({
            "dim": a.dim,
            "n": a.n,
            "dt": a.dt,
            "steps": a.steps,
            "final_time": tr.final_state.time(),
            "I": [last.i1, last.i2, last.i3],
            "max_drift": [d1, d2, d3],
            "trajectory": a.out.display().to_string(),
            "conserved": cpath.display().to_string(),
        }));
    } else {
        println!("dim {}  n {}  dt {:e}  steps {}", a.dim, a.n, a.dt, a.steps);
        println!("final time        {:.6}", tr.final_state.time());
        println!("{:<4} {:>24} {:>12}", "", "value", "max drift");
        for (name, v, d) in [("I1", last.i1, d1), ("I2", last.i2, d2), ("I3", last.i3, d3)] {
            println!("{name:<4} {v:>24.15e} {d:>12.3e}");
        }
        println!("wrote {} and {}", a.out.display(), cpath.display());
    }
    Ok(())
}

fn configure_threads() -> Outcome {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(format!("{THREADS_ENV}: {e}")))
}

fn run(cli: Cli) -> Outcome {
    configure_threads()?;
    let (json_mode, seed) = (cli.json, cli.seed);
    match cli.command {
        Command::Table { out } => cmd_table(out, json_mode),
        Command::G2 { command: G2Command::Verify } => cmd_verify(seed, json_mode),
        Command::G2 { command: G2Command::Isotropic { triple, out } } => cmd_isotropic(triple, out, json_mode),
        Command::Loop { command: LoopCommand::Omega { loop_file, x, y } } => cmd_omega(loop_file, x, y, json_mode),
        Command::Maslov { command: MaslovCommand::Index { data, mod4 } } => cmd_index(data, mod4, json_mode),
        Command::Maslov { command: MaslovCommand::Parabola { rho, out, dim, filling, grid } } => {
            cmd_parabola(rho, out, dim, filling, grid, json_mode)
        }
        Command::Flow(a) => cmd_flow(a, seed, json_mode),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let code = f.code();
            match f {
                Failure::Usage(m) => eprintln!("error: {m}"),
                Failure::Check(m) => eprintln!("failed: {m}"),
            }
            ExitCode::from(code)
        }
    }
}

fn at_least_one(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err(format!("expected a positive integer, got {s:?}")),
    }
}
