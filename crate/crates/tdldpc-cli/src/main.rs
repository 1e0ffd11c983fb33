use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use tdldpc::classifier::{classify, reference_catalog};
use tdldpc::code::{code_from_mols, ParityCheckMatrix};
use tdldpc::existence::{constraint_table, eval_constraints, find_instances, is_recommended, AbsorbingSetType};
use tdldpc::gf::PrimeField;
use tdldpc::mols::MolsSet;
use tdldpc::setsystem::enumerate_colourings;
use tdldpc::sim::{point_seed, reports_csv, run_simulation, ChannelConfig, DecoderConfig, SimReport};
use tdldpc::symbolic::elimination_process;

const DEFAULT_SEED: u64 = 1;

#[derive(Parser)]
#[command(name = "tdldpc", version, about = "TD LDPC codes from cyclic MOLS: construction, absorbing sets, simulation")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "subcommand")]
enum Command {
    /// Build the parity-check matrix for a set of cyclic MOLS.
    Construct(CodeArgs),
    /// Enumerate absorbing-set candidates with block size k and up to t blocks.
    Classify(ClassifyArgs),
    /// Constraint violations and candidate existence for one code.
    Analyze(AnalyzeArgs),
    /// Symbolic elimination constraints for one candidate.
    Derive(DeriveArgs),
    /// Monte-Carlo BPSK/AWGN simulation with sum-product decoding.
    Simulate(SimArgs),
    /// Re-run the command recorded in a manifest.
    #[serde(skip)]
    Replay(ReplayArgs),
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
struct CodeArgs {
    /// Field order (prime).
    #[arg(short, long)]
    q: u64,
    /// Scale factors of the reduced squares, comma separated.
    #[arg(short, long, value_delimiter = ',', required = true)]
    alphas: Vec<i64>,
    /// Output directory.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
struct AnalyzeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    code: CodeArgs,
    /// Skip the exhaustive search for candidate instances.
    #[arg(long)]
    #[serde(default)]
    constraints_only: bool,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
struct ClassifyArgs {
    #[arg(short, long)]
    k: usize,
    #[arg(short, long)]
    t: usize,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
struct DeriveArgs {
    #[arg(short, long)]
    k: usize,
    /// Candidate label such as "(4,4)" or "(6,2){3}".
    #[arg(short, long)]
    candidate: String,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
struct SimArgs {
    #[arg(short, long)]
    q: u64,
    #[arg(short, long, value_delimiter = ',', required = true)]
    alphas: Vec<i64>,
    /// Eb/N0 points in dB, comma separated.
    #[arg(short, long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    ebn0: Vec<f64>,
    #[arg(short, long, default_value_t = 10_000)]
    frames: u64,
    #[arg(short = 'i', long, default_value_t = 50)]
    max_iters: usize,
    #[arg(long, default_value_t = 30.0)]
    llr_clip: f64,
    #[arg(short, long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Worker threads; results do not depend on it.
    #[arg(short = 'j', long)]
    #[serde(skip)]
    threads: Option<usize>,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone, Debug)]
struct ReplayArgs {
    manifest: PathBuf,
    /// Write into this directory instead of the recorded one.
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[arg(short = 'j', long)]
    threads: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    version: String,
    seed: Option<u64>,
    command: Command,
    outputs: Vec<String>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Math(anyhow::Error),
    Resource(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Math(_) => 3,
            Failure::Resource(_) => 4,
        }
    }
}

type Res<T> = Result<T, Failure>;

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn math(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Math(e.into())
}

fn io(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Resource(e.into())
}

fn build_code(q: u64, alphas: &[i64]) -> Res<ParityCheckMatrix> {
    let f = PrimeField::new(q).map_err(usage)?;
    if alphas.is_empty() || alphas.len() > 2 {
        return Err(usage(format!("expected one or two scale factors, got {}", alphas.len())));
    }
    let m = MolsSet::reduced(f, alphas).map_err(usage)?;
    Ok(code_from_mols(&m))
}

struct Out {
    dir: Option<PathBuf>,
    written: Vec<String>,
}

impl Out {
    fn new(dir: Option<PathBuf>) -> Res<Self> {
        if let Some(d) = &dir {
            fs::create_dir_all(d).with_context(|| format!("creating {}", d.display())).map_err(io)?;
        }
        Ok(Out { dir, written: Vec::new() })
    }

    fn write(&mut self, name: &str, text: &str) -> Res<()> {
        if let Some(d) = &self.dir {
            let p = d.join(name);
            fs::write(&p, text).with_context(|| format!("writing {}", p.display())).map_err(io)?;
            self.written.push(name.to_string());
        }
        Ok(())
    }

    fn finish(mut self, command: &Command, seed: Option<u64>) -> Res<()> {
        if self.dir.is_none() {
            return Ok(());
        }
        let mut outputs = std::mem::take(&mut self.written);
        outputs.push("manifest.json".into());
        let m = Manifest {
            version: format!("tdldpc-cli {}", env!("CARGO_PKG_VERSION")),
            seed,
            command: command.clone(),
            outputs,
        };
        self.write("manifest.json", &to_json(&m)?)
    }
}

fn to_json<T: Serialize>(v: &T) -> Res<String> {
    serde_json::to_string_pretty(v).map(|s| s + "\n").map_err(math)
}

#[derive(Serialize)]
struct CodeSummary {
    #[serde(flatten)]
    descriptor: tdldpc::code::CodeDescriptor,
    rows: usize,
    girth: Option<usize>,
    quasi_cyclic: bool,
}

fn construct(a: &CodeArgs, cmd: &Command) -> Res<()> {
    let h = build_code(a.q, &a.alphas)?;
    let summary = CodeSummary {
        descriptor: h.descriptor(),
        rows: h.rows(),
        girth: h.girth(),
        quasi_cyclic: h.circulant_grid().is_ok(),
    };
    let d = &summary.descriptor;
    println!("N = {}, column weight = {}, rows = {}", d.n, d.k, summary.rows);
    println!("rank = {}, dimension = {}, rate = {:.6}", d.rank, d.n - d.rank, d.rate);
    match summary.girth {
        Some(g) => println!("girth = {g}"),
        None => println!("girth = infinite"),
    }
    println!("quasi-cyclic = {}", summary.quasi_cyclic);
    let mut out = Out::new(a.out.clone())?;
    out.write("H.alist", &h.to_alist())?;
    out.write("code.json", &to_json(&summary)?)?;
    out.finish(cmd, None)
}

fn classify_cmd(a: &ClassifyArgs, cmd: &Command) -> Res<()> {
    let cat = classify(a.k, a.t).map_err(usage)?;
    let mut text = String::new();
    for c in &cat.candidates {
        text += &c.render();
        text.push('\n');
    }
    println!("{} candidates", cat.len());
    for ((x, y), n) in cat.counts() {
        println!("  ({x},{y}) x {n}");
    }
    let mut out = Out::new(a.out.clone())?;
    out.write("catalog.json", &to_json(&cat)?)?;
    out.write("matrices.txt", &text)?;
    out.finish(cmd, None)
}

#[derive(Serialize)]
struct CandidateReport {
    label: String,
    present: Option<bool>,
    instances: usize,
    note: Option<String>,
}

#[derive(Serialize)]
struct Analysis {
    q: u64,
    alphas: Vec<i64>,
    violations: Vec<String>,
    recommended: Option<bool>,
    candidates: Vec<CandidateReport>,
}

fn analyze(args: &AnalyzeArgs, cmd: &Command) -> Res<()> {
    let a = &args.code;
    let h = build_code(a.q, &a.alphas)?;
    let m = a.alphas.len();
    let reduced: Vec<u32> = h.descriptor().alphas;
    let (violations, recommended) = if m == 2 {
        let table = constraint_table();
        let v = eval_constraints(a.q as u32, reduced[0], reduced[1])
            .into_iter()
            .map(|id| table[id as usize - 1].name())
            .collect();
        (v, Some(is_recommended(a.q as u32, reduced[0], reduced[1])))
    } else {
        (Vec::new(), None)
    };
    let mut candidates = Vec::new();
    let catalog = if args.constraints_only { Vec::new() } else { reference_catalog(m + 2) };
    for (label, sys) in catalog {
        let mut rep = CandidateReport { label, present: Some(false), instances: 0, note: None };
        for c in enumerate_colourings(&sys, m + 2) {
            let ty = AbsorbingSetType { system: sys.clone(), colouring: c, mapping: None };
            match find_instances(&h, &ty) {
                Ok(v) => rep.instances += v.len(),
                Err(e) => rep.note = Some(e.to_string()),
            }
        }
        rep.present = if rep.instances > 0 {
            Some(true)
        } else if rep.note.is_some() {
            None
        } else {
            Some(false)
        };
        candidates.push(rep);
    }
    if m == 2 {
        println!("violated: {}", if violations.is_empty() { "none".to_string() } else { violations.join(", ") });
        println!("recommended: {}", if recommended == Some(true) { "yes" } else { "no" });
    }
    for c in &candidates {
        let v = match c.present {
            Some(true) => format!("present ({} sets)", c.instances),
            Some(false) => "absent".to_string(),
            None => "undetermined".to_string(),
        };
        println!("  {:<10} {v}", c.label);
    }
    let rep = Analysis { q: a.q, alphas: a.alphas.clone(), violations, recommended, candidates };
    let mut out = Out::new(a.out.clone())?;
    out.write("analysis.json", &to_json(&rep)?)?;
    out.finish(cmd, None)
}

fn derive(a: &DeriveArgs, cmd: &Command) -> Res<()> {
    if !(3..=4).contains(&a.k) {
        return Err(usage(format!("derive supports k = 3 or 4, got {}", a.k)));
    }
    let sys = reference_catalog(a.k)
        .into_iter()
        .find(|(l, _)| *l == a.candidate)
        .map(|(_, s)| s)
        .ok_or_else(|| usage(format!("unknown candidate {} for k = {}", a.candidate, a.k)))?;
    let res = elimination_process(&sys, a.k).map_err(math)?;
    // The tabulated labels refer to two scale factors.
    let show = |f: &tdldpc::symbolic::Formula| if a.k == 4 { f.render() } else { f.render_plain() };
    for (j, cc) in res.iter().enumerate() {
        println!("colouring {} {}", j + 1, cc.colouring.short());
        let mut groups: Vec<(String, Vec<usize>)> = Vec::new();
        for (l, d) in cc.derivations.iter().enumerate() {
            let f = show(&d.formula);
            match groups.iter_mut().find(|(g, _)| *g == f) {
                Some((_, v)) => v.push(l + 1),
                None => groups.push((f, vec![l + 1])),
            }
        }
        for (f, ells) in groups {
            let ells: Vec<String> = ells.iter().map(usize::to_string).collect();
            println!("  l = {}: {f}", ells.join(","));
        }
        println!("  combined: {}", show(&cc.formula));
    }
    let mut out = Out::new(a.out.clone())?;
    out.write("derivation.json", &to_json(&res)?)?;
    out.finish(cmd, None)
}

fn simulate(a: &SimArgs, cmd: &Command) -> Res<()> {
    let h = build_code(a.q, &a.alphas)?;
    let dec = DecoderConfig { max_iters: a.max_iters, llr_clip: a.llr_clip };
    let channels: Vec<ChannelConfig> = a
        .ebn0
        .iter()
        .enumerate()
        .map(|(i, &db)| ChannelConfig { ebn0_db: db, seed: point_seed(a.seed, i), frames: a.frames })
        .collect();
    if a.frames == 0 {
        return Err(usage("--frames must be at least 1"));
    }
    if a.threads == Some(0) {
        return Err(usage("--threads must be at least 1"));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = a.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(io)?;
    let reports: Vec<SimReport> = pool
        .install(|| channels.iter().map(|ch| run_simulation(&h, ch, &dec)).collect::<Result<_, _>>())
        .map_err(usage)?;
    for r in &reports {
        println!(
            "Eb/N0 = {} dB: frames {}, frame errors {}, FER {:e}, BER {:e}",
            r.channel.ebn0_db, r.channel.frames, r.frame_errors, r.fer, r.ber
        );
        for c in &r.detections {
            println!("  ({},{}) total {} fully {} elementary {}", c.a, c.b, c.total, c.fully, c.elementary);
        }
    }
    let mut out = Out::new(a.out.clone())?;
    out.write("sim.csv", &reports_csv(&reports))?;
    out.write("reports.json", &to_json(&reports)?)?;
    out.finish(cmd, Some(a.seed))
}

fn replay(a: &ReplayArgs) -> Res<()> {
    let text =
        fs::read_to_string(&a.manifest).with_context(|| format!("reading {}", a.manifest.display())).map_err(io)?;
    let m: Manifest = serde_json::from_str(&text).context("parsing manifest").map_err(math)?;
    let mut cmd = m.command;
    let here = a.manifest.parent().map(Path::to_path_buf);
    let out = a.out.clone().or(here);
    match &mut cmd {
        Command::Construct(x) => x.out = out,
        Command::Analyze(x) => x.code.out = out,
        Command::Classify(x) => x.out = out,
        Command::Derive(x) => x.out = out,
        Command::Simulate(x) => {
            x.out = out;
            x.threads = a.threads;
        }
        Command::Replay(_) => return Err(math(anyhow::anyhow!("manifest records a replay"))),
    }
    run(&cmd)
}

fn single<T>(f: impl FnOnce() -> Res<T> + Send) -> Res<T>
where
    T: Send,
{
    rayon::ThreadPoolBuilder::new().num_threads(1).build().map_err(io)?.install(f)
}

fn run(cmd: &Command) -> Res<()> {
    match cmd {
        Command::Construct(a) => single(|| construct(a, cmd)),
        Command::Classify(a) => single(|| classify_cmd(a, cmd)),
        Command::Analyze(a) => single(|| analyze(a, cmd)),
        Command::Derive(a) => single(|| derive(a, cmd)),
        Command::Simulate(a) => simulate(a, cmd),
        Command::Replay(a) => replay(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                Failure::Usage(s) => eprintln!("error: {s}"),
                Failure::Math(err) | Failure::Resource(err) => eprintln!("error: {err:#}"),
            }
            ExitCode::from(e.code())
        }
    }
}
