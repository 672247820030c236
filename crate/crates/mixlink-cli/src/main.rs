mod svg;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use mixlink::braids::{braid_from_word, check_pfibered, extract_word, track_roots, FibrationCertificate};
use mixlink::linker::{link_of_singularity, link_unchecked, LinkError};
use mixlink::mixedpoly::{classify_structure, StructureReport};
use mixlink::newton::face_to_loop;
use mixlink::realizer::{build_tower, validate_realization, Level, RealizationReport, TowerSpec};
use mixlink::{
    format_poly, newton_polygon, parse_poly, BraidWord, Config, GaussRat, LinkDescription, LoopPoly, NewtonData, NondegReport,
    Status,
};

const SCHEMA: &str = "mixlink/1";

#[derive(Parser)]
#[command(name = "mxl", version, about = "Newton boundaries, non-degeneracy, braids and links of mixed polynomials")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Grid points per search dimension (overrides MXL_GRID).
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Samples of the circle parameter (overrides MXL_SAMPLES).
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Residual tolerance (overrides MXL_TOL).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Include wall-clock timings in reports.
    #[arg(long, global = true)]
    timings: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Newton boundary and non-degeneracy verdicts.
    Analyze {
        poly: String,
        /// Write the report here instead of stdout.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Also compute the link when the preconditions hold.
        #[arg(long)]
        link: bool,
    },
    /// Link of the singularity at the origin.
    Link {
        poly: String,
        #[arg(long)]
        json: Option<PathBuf>,
        /// Skip the non-degeneracy gate.
        #[arg(long)]
        force: bool,
    },
    /// Braid of the loop of one face.
    Braid {
        poly: String,
        /// One-based face index.
        #[arg(long, default_value_t = 1)]
        face: usize,
        #[arg(long)]
        json: Option<PathBuf>,
        /// Also write the sampled strands here.
        #[arg(long)]
        strands_out: Option<PathBuf>,
    },
    /// P-fiberedness of a braid representative.
    Pfibered {
        /// Braid word, e.g. "1 1 1".
        #[arg(long, conflicts_with = "loop_file")]
        word: Option<String>,
        /// Loop polynomial as JSON.
        #[arg(long = "loop", value_name = "FILE")]
        loop_file: Option<PathBuf>,
        /// O-multiplicity.
        #[arg(long, default_value_t = 0)]
        m: u32,
        /// Power `e^{it} -> e^{i n t}` applied to a word's representative.
        #[arg(long, default_value_t = 2)]
        power: i64,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Build a tower polynomial realizing nested braid closures.
    Realize {
        tower: PathBuf,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// SVG diagram of a braid word.
    Render {
        #[arg(long)]
        word: String,
        /// Strand count (defaults to the largest generator plus one).
        #[arg(long)]
        strands: Option<usize>,
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
    },
}

#[derive(Serialize)]
struct AnalysisReport {
    schema: &'static str,
    input: String,
    polynomial: String,
    structure: StructureReport,
    newton: NewtonData,
    nondegeneracy: NondegReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    link: Option<LinkDescription>,
    #[serde(skip_serializing_if = "Option::is_none")]
    link_error: Option<String>,
    config: Config,
    #[serde(skip_serializing_if = "Option::is_none")]
    timings: Option<Timings>,
}

#[derive(Serialize, Default)]
struct Timings {
    newton_ms: f64,
    nondegeneracy_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    link_ms: Option<f64>,
}

#[derive(Serialize)]
struct BraidReport {
    schema: &'static str,
    face: usize,
    g: String,
    strands: usize,
    zero_multiplicity: u32,
    affine: bool,
    word: BraidWord,
    permutation: Vec<usize>,
    components: usize,
}

#[derive(Serialize)]
struct PfiberedReport {
    schema: &'static str,
    g: String,
    certificate: FibrationCertificate,
}

/// A tower level: either a braid word or a loop polynomial.
#[derive(Deserialize)]
struct LevelInput {
    word: Option<String>,
    #[serde(rename = "loop")]
    loop_poly: Option<LoopPoly<GaussRat>>,
}

#[derive(Deserialize)]
struct TowerInput {
    levels: Vec<LevelInput>,
}

#[derive(Serialize)]
struct RealizeReport {
    schema: &'static str,
    polynomial: String,
    spec: TowerSpec,
    strong_inner_nd: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    validation: Option<RealizationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    validation_error: Option<String>,
}

fn exit_for(s: Status) -> u8 {
    match s {
        Status::Verified => 0,
        Status::Refuted => 2,
        Status::Inconclusive => 3,
    }
}

fn emit<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display())),
        None => write_stdout(&(text + "\n")),
    }
}

fn write_stdout(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn config(cli: &Cli) -> Result<Config> {
    let mut c = Config::from_env()?;
    if let Some(g) = cli.grid {
        c.grid = g.max(8);
    }
    if let Some(s) = cli.samples {
        c.samples = s.max(16);
    }
    if let Some(t) = cli.tol {
        if !(t > 0.0 && t < 1.0) {
            bail!("--tol must lie in (0, 1)");
        }
        c.tol = t;
    }
    Ok(c)
}

fn run(cli: Cli) -> Result<u8> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    let cfg = config(&cli)?;
    match &cli.command {
        Command::Analyze { poly, json, link } => {
            let p = parse_poly(poly)?;
            let t0 = Instant::now();
            let nd = newton_polygon(&p)?;
            let newton_ms = ms(t0);
            let t1 = Instant::now();
            let report = mixlink::nondegen::analyze_with(&p, &nd, &cfg)?;
            let nondegeneracy_ms = ms(t1);
            let mut timings = Timings { newton_ms, nondegeneracy_ms, link_ms: None };
            let (mut ld, mut lerr) = (None, None);
            if *link {
                let t2 = Instant::now();
                match link_of_singularity(&p, &cfg) {
                    Ok(d) => ld = Some(d),
                    Err(e) => lerr = Some(e.to_string()),
                }
                timings.link_ms = Some(ms(t2));
            }
            let code = exit_for(report.inner_nd);
            let out = AnalysisReport {
                schema: SCHEMA,
                input: poly.clone(),
                polynomial: format_poly(&p),
                structure: classify_structure(&p),
                newton: nd,
                nondegeneracy: report,
                link: ld,
                link_error: lerr,
                config: cfg,
                timings: cli.timings.then_some(timings),
            };
            emit(&out, json.as_deref())?;
            Ok(code)
        }
        Command::Link { poly, json, force } => {
            let p = parse_poly(poly)?;
            let res = if *force { link_unchecked(&p, &cfg) } else { link_of_singularity(&p, &cfg) };
            match res {
                Ok(d) => {
                    emit(&d, json.as_deref())?;
                    Ok(0)
                }
                Err(LinkError::PreconditionFailed { inner, nice, .. }) => {
                    eprintln!("preconditions not met: inner non-degeneracy {inner}, niceness {nice}");
                    Ok(exit_for(inner.and(nice)))
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::Braid { poly, face, json, strands_out } => {
            let p = parse_poly(poly)?;
            let g = face_to_loop(&p, *face)?;
            let b = track_roots::<f64, _>(&g, cfg.samples)?;
            let w = extract_word(&b)?;
            if let Some(path) = strands_out {
                emit(&b, Some(path))?;
            }
            let out = BraidReport {
                schema: SCHEMA,
                face: *face,
                g: g.to_string(),
                strands: b.strand_count(),
                zero_multiplicity: b.zero_multiplicity,
                affine: b.affine,
                permutation: w.permutation(),
                components: w.components(),
                word: w,
            };
            emit(&out, json.as_deref())?;
            Ok(0)
        }
        Command::Pfibered { word, loop_file, m, power, json } => {
            let g = match (word, loop_file) {
                (Some(w), None) => {
                    let w = BraidWord::parse(w, None)?;
                    let (_, g) = braid_from_word(&w, 8, *m > 0, cfg.samples)?;
                    g.power(*power)
                }
                (None, Some(path)) => {
                    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                    serde_json::from_str::<LoopPoly<GaussRat>>(&text)?
                }
                _ => bail!("give exactly one of --word and --loop"),
            };
            let cert = check_pfibered::<f64, _>(&g, *m, cfg.samples)?;
            let code = exit_for(cert.status);
            emit(&PfiberedReport { schema: SCHEMA, g: g.to_string(), certificate: cert }, json.as_deref())?;
            Ok(code)
        }
        Command::Realize { tower, json } => {
            let text = fs::read_to_string(tower).with_context(|| format!("reading {}", tower.display()))?;
            let input: TowerInput = serde_json::from_str(&text)?;
            let levels = input
                .levels
                .into_iter()
                .enumerate()
                .map(|(i, l)| match (l.word, l.loop_poly) {
                    (Some(w), None) => Level::from_word(&BraidWord::parse(&w, None)?, i > 0, cfg.samples).map_err(Into::into),
                    (None, Some(g)) => Level::from_loop(g, cfg.samples).map_err(Into::into),
                    _ => Err(anyhow!("level {} needs exactly one of \"word\" and \"loop\"", i + 1)),
                })
                .collect::<Result<Vec<_>>>()?;
            let t = build_tower(&levels, &cfg)?;
            let (validation, validation_error) = match validate_realization(&t.f, &t.spec, &cfg) {
                Ok(v) => (Some(v), None),
                Err(e) => (None, Some(e.to_string())),
            };
            let status = if validation_error.is_some() { Status::Refuted } else { t.report.strong_inner_nd };
            let out = RealizeReport {
                schema: SCHEMA,
                polynomial: format_poly(&t.f),
                spec: t.spec,
                strong_inner_nd: t.report.strong_inner_nd,
                validation,
                validation_error,
            };
            emit(&out, json.as_deref())?;
            Ok(exit_for(status))
        }
        Command::Render { word, strands, output } => {
            let w = BraidWord::parse(word, *strands)?;
            let svg = svg::render_word(&w);
            match output {
                Some(p) => fs::write(p, svg).with_context(|| format!("writing {}", p.display()))?,
                None => write_stdout(&svg)?,
            }
            Ok(0)
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
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
