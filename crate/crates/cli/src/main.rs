use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use billiard_book::book::{book_from_json, book_to_json, validate_book, BilliardBook};
use billiard_book::dynamics::{sample_start_seeded, simulate, write_csv, PhaseState, TrajectoryStatus};
use billiard_book::game::{compile_general, compile_simple, game_from_json, validate_game, verify_game, CompileReport};
use billiard_book::render::{render_svg, Layout, RenderSpec};
use billiard_book::topology::build_fomenko_graph;
use billiard_book::{LeafId, Point, UnitVector};

const INVALID: u8 = 2;
const IO: u8 = 3;
const SINGULAR: u8 = 4;
const UNKNOWN_ATOM: u8 = 5;
const MISMATCH: u8 = 6;

/// Billiards on confocal billiard books.
#[derive(Parser)]
#[command(name = "billiard-book", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the book realising an ordered game.
    Compile(CompileArgs),
    /// Run the billiard flow on a book.
    Simulate(SimulateArgs),
    /// Compute the Fomenko graph of a book.
    Fomenko(FomenkoArgs),
    /// Check that sampled trajectories on a book follow a game.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct CompileArgs {
    game: PathBuf,
    /// Allow runs of repeated ellipses.
    #[arg(long)]
    general: bool,
    #[arg(long)]
    out: PathBuf,
    /// Where to write the compile report; defaults to `<out>.report.json`.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    book: PathBuf,
    /// Starting leaf id; defaults to the first leaf.
    #[arg(long)]
    leaf: Option<u32>,
    /// Starting point `x,y`.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true, requires = "vel", conflicts_with = "caustic")]
    pos: Option<(f64, f64)>,
    /// Starting velocity `vx,vy` (normalised).
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true, requires = "pos")]
    vel: Option<(f64, f64)>,
    /// Sample a start with this caustic instead of giving one.
    #[arg(long, allow_hyphen_values = true)]
    caustic: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    events: usize,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Draw all leaves in one panel with the caustic.
    #[arg(long)]
    overlay: bool,
}

#[derive(Args)]
struct FomenkoArgs {
    book: PathBuf,
    #[arg(long)]
    dot: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    book: PathBuf,
    game: PathBuf,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Failure carrying its exit code; the message goes to stderr.
struct Fail(u8, String);

type CmdResult = Result<u8, Fail>;

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (x, y) = s.split_once(',').ok_or("expected `x,y`")?;
    let p = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    Ok((p(x)?, p(y)?))
}

fn read(path: &Path) -> Result<String, Fail> {
    fs::read_to_string(path).map_err(|e| Fail(IO, format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), Fail> {
    fs::write(path, contents).map_err(|e| Fail(IO, format!("{}: {e}", path.display())))
}

fn load_book(path: &Path) -> Result<BilliardBook, Fail> {
    let book = book_from_json(&read(path)?).map_err(|e| Fail(INVALID, format!("{}: {e}", path.display())))?;
    let violations = validate_book(&book);
    if !violations.is_empty() {
        let lines: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(Fail(INVALID, lines.join("\n")));
    }
    Ok(book)
}

fn report_json(r: &CompileReport) -> String {
    let annuli: BTreeMap<usize, u32> = r.annulus_ids.iter().map(|(&k, l)| (k, l.0)).collect();
    let disks: BTreeMap<usize, Vec<u32>> = r
        .disk_ids
        .iter()
        .map(|(&k, v)| (k, v.iter().map(|l| l.0).collect()))
        .collect();
    let value = serde_json::json!({
        "normalized_game": r.game,
        "shift": r.shift,
        "annulus_ids": annuli,
        "disk_ids": disks,
        "leaf_count": r.leaf_count,
        "s_count": r.s_count,
    });
    serde_json::to_string_pretty(&value).expect("report serialises") + "\n"
}

fn compile(args: CompileArgs) -> CmdResult {
    let game = game_from_json(&read(&args.game)?).map_err(|e| Fail(INVALID, format!("{}: {e}", args.game.display())))?;
    let check = validate_game(&game);
    if !check.is_valid() {
        let lines: Vec<String> = check.violations.iter().map(|v| v.to_string()).collect();
        return Err(Fail(INVALID, lines.join("\n")));
    }
    let report = if args.general {
        compile_general(&game)
    } else {
        compile_simple(&game)
    }
    .map_err(|e| Fail(INVALID, e.to_string()))?;
    write(&args.out, &book_to_json(&report.book))?;
    let report_path = args.report.unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".report.json");
        p.into()
    });
    write(&report_path, &report_json(&report))?;
    println!("leaves: {}", report.leaf_count);
    println!("s: {}", report.s_count);
    Ok(0)
}

fn start_state(book: &BilliardBook, args: &SimulateArgs) -> Result<PhaseState, Fail> {
    let leaf = match args.leaf {
        Some(id) => LeafId(id),
        None => book.leaves[0].id,
    };
    let l = book.leaf(leaf).map_err(|e| Fail(INVALID, e.to_string()))?;
    match (args.pos, args.vel, args.caustic) {
        (Some((x, y)), Some((vx, vy)), None) => {
            let p = Point::new(x, y);
            let v = UnitVector::new(vx, vy).ok_or_else(|| Fail(INVALID, "velocity must be non-zero".into()))?;
            if !l.contains(&book.family, p, 1e-9) {
                return Err(Fail(INVALID, format!("({x}, {y}) is not in leaf {leaf}")));
            }
            Ok(PhaseState::new(p, v, leaf))
        }
        (None, None, Some(c)) => {
            sample_start_seeded(book, leaf, c, args.seed).map_err(|e| Fail(INVALID, e.to_string()))
        }
        _ => Err(Fail(INVALID, "give either --pos and --vel or --caustic".into())),
    }
}

fn simulate_cmd(args: SimulateArgs) -> CmdResult {
    let book = load_book(&args.book)?;
    let start = start_state(&book, &args)?;
    let t = simulate(&book, start, args.events);
    if let Some(path) = &args.csv {
        let mut buf = Vec::new();
        write_csv(&t, &mut buf).map_err(|e| Fail(IO, e.to_string()))?;
        write(path, &String::from_utf8(buf).expect("csv is utf-8"))?;
    }
    if let Some(path) = &args.svg {
        let spec = RenderSpec {
            layout: if args.overlay { Layout::Overlay } else { Layout::SideBySide },
            ..RenderSpec::default()
        };
        let svg = render_svg(&book, std::slice::from_ref(&t), &spec).map_err(|e| Fail(INVALID, e.to_string()))?;
        write(path, &svg)?;
    }
    println!("caustic: {}", t.caustic);
    println!("drift: {:e}", t.caustic_drift(&book.family));
    println!("events: {}", t.events.len());
    match t.status {
        TrajectoryStatus::Completed => Ok(0),
        TrajectoryStatus::SingularLevelHit { ellipse } => Err(Fail(
            SINGULAR,
            format!("trajectory hit the singular level tangent to C_{ellipse}"),
        )),
        TrajectoryStatus::Escaped => Err(Fail(INVALID, "trajectory left its leaf".into())),
    }
}

fn fomenko(args: FomenkoArgs) -> CmdResult {
    let book = load_book(&args.book)?;
    let graph = build_fomenko_graph(&book).map_err(|e| Fail(INVALID, e.to_string()))?;
    if let Some(path) = &args.dot {
        write(path, &graph.to_dot())?;
    }
    println!("{}", graph.census_string());
    for v in graph.capacity_violations() {
        eprintln!("warning: atom {v} has degree {} but type {}", graph.degree(v), graph.atoms[v].atom_type);
    }
    if graph.has_unknown() {
        return Err(Fail(UNKNOWN_ATOM, "graph contains atoms of unknown type".into()));
    }
    Ok(0)
}

fn verify(args: VerifyArgs) -> CmdResult {
    let book = load_book(&args.book)?;
    let game = game_from_json(&read(&args.game)?).map_err(|e| Fail(INVALID, format!("{}: {e}", args.game.display())))?;
    if args.samples == 0 {
        eprintln!("warning: no samples requested; nothing verified");
    }
    let mismatches = verify_game(&book, &game, args.samples, args.seed).map_err(|e| Fail(INVALID, e.to_string()))?;
    println!("samples: {}", args.samples);
    println!("mismatches: {}", mismatches.len());
    if let Some(m) = mismatches.first() {
        let index = m.index.map_or("none".to_string(), |i| i.to_string());
        return Err(Fail(
            MISMATCH,
            format!(
                "sample {} (caustic {}, seed {}) diverges at event {index}: {}",
                m.sample, m.caustic, m.seed, m.reason
            ),
        ));
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compile(a) => compile(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Fomenko(a) => fomenko(a),
        Command::Verify(a) => verify(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Fail(code, msg)) => {
            eprintln!("{msg}");
            ExitCode::from(code)
        }
    }
}
