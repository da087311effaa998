//! `visedit` command-line front end.
//!
//! Exit codes: 0 on success, 2 for unreadable or malformed inputs, 3 when the
//! viseme search fails (including out-of-vocabulary words) and 4 when an edit
//! cannot be planned.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use visedit::ingest::{
    build_query, parse_alignment, parse_dictionary, parse_edit_spec, parse_parameter_track,
    AlignedTranscript, DurationSource, EditSpec, ParameterTrack, PronunciationDict,
};
use visedit::plan::edl;
use visedit::stats::{self, MatchMode, Sampling};
use visedit::{CostParams, Error, Parallelism, PlanOptions, Stage};

#[derive(Parser)]
#[command(name = "visedit", version, about = "Plan text-based edits of talking-head parameter tracks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search, retime and blend one edit; writes edl.json, blended.vftk and report.txt.
    Plan(PlanArgs),
    /// Match-probability curves and per-viseme duration statistics for a corpus.
    Stats(StatsArgs),
    /// Check input files without planning.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct Common {
    /// Worker threads; 1 runs sequentially. Outputs do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Also write intermediate tables.
    #[arg(short, long)]
    verbose: bool,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    alignment: PathBuf,
    #[arg(long)]
    dict: PathBuf,
    #[arg(long)]
    track: PathBuf,
    #[arg(long)]
    edit: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Weight of the length difference in the swap cost.
    #[arg(long, default_value_t = 1e-4)]
    chi: f64,
    /// Short-segment penalty.
    #[arg(long, default_value_t = 0.001)]
    phi: f64,
    /// Cross-fade width in milliseconds; 0 disables blending.
    #[arg(long, default_value_t = 67.0)]
    window_ms: f64,
    /// Output frame rate; defaults to the track's.
    #[arg(long)]
    fps_out: Option<f64>,
    /// Background source frames as `start:end`, end exclusive.
    #[arg(long, value_parser = parse_region)]
    bg_region: Option<std::ops::Range<usize>>,
    /// Dictionary variant for new words that do not name one.
    #[arg(long)]
    pron_variant: Option<usize>,
    /// Accepted for symmetry with `stats`; planning uses no randomness.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    alignment: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = stats::DEFAULT_SEED)]
    seed: u64,
    /// Monte Carlo draws per window length.
    #[arg(long, default_value_t = stats::DEFAULT_TRIALS)]
    trials: u64,
    /// Count every window instead of sampling.
    #[arg(long)]
    exhaustive: bool,
    /// Largest window length.
    #[arg(long, default_value_t = 10)]
    k_max: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    alignment: Option<PathBuf>,
    #[arg(long)]
    dict: Option<PathBuf>,
    #[arg(long)]
    track: Option<PathBuf>,
    #[arg(long)]
    edit: Option<PathBuf>,
}

fn parse_region(s: &str) -> Result<std::ops::Range<usize>, String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected start:end, got `{s}`"))?;
    let a: usize = a.trim().parse().map_err(|e| format!("bad start `{a}`: {e}"))?;
    let b: usize = b.trim().parse().map_err(|e| format!("bad end `{b}`: {e}"))?;
    if b <= a {
        return Err(format!("empty region {a}:{b}"));
    }
    Ok(a..b)
}

/// An error tagged with the file or step it came from.
struct Failure {
    what: String,
    error: Error,
}

impl Failure {
    fn code(&self) -> u8 {
        match self.error.stage() {
            Stage::Parse => 2,
            Stage::Search => 3,
            Stage::Plan => 4,
        }
    }
}

trait Context<T> {
    fn context(self, what: impl std::fmt::Display) -> Result<T, Failure>;
}

impl<T> Context<T> for Result<T, Error> {
    fn context(self, what: impl std::fmt::Display) -> Result<T, Failure> {
        self.map_err(|error| Failure {
            what: what.to_string(),
            error,
        })
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(Error::from)
        .context(path.display())
}

fn load_alignment(path: &Path) -> Result<AlignedTranscript, Failure> {
    parse_alignment(&read_text(path)?).context(path.display())
}

fn load_dict(path: &Path) -> Result<PronunciationDict, Failure> {
    parse_dictionary(&read_text(path)?).context(path.display())
}

fn load_edit(path: &Path) -> Result<EditSpec, Failure> {
    parse_edit_spec(&read_text(path)?).context(path.display())
}

fn load_track(path: &Path) -> Result<ParameterTrack, Failure> {
    let bytes = fs::read(path).map_err(Error::from).context(path.display())?;
    parse_parameter_track(&bytes).context(path.display())
}

fn write(dir: &Path, name: &str, bytes: impl AsRef<[u8]>) -> Result<(), Failure> {
    let path = dir.join(name);
    fs::write(&path, bytes)
        .map_err(Error::from)
        .context(path.display())
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir)
        .map_err(Error::from)
        .context(dir.display())
}

fn parallelism(threads: Option<usize>) -> Parallelism {
    match threads {
        Some(1) => Parallelism::Sequential,
        _ => Parallelism::Parallel,
    }
}

fn cmd_plan(args: &PlanArgs) -> Result<(), Failure> {
    let transcript = load_alignment(&args.alignment)?;
    let dict = load_dict(&args.dict)?;
    let track = load_track(&args.track)?;
    let mut edit = load_edit(&args.edit)?;
    if let Some(v) = args.pron_variant {
        for w in edit.words.iter_mut().filter(|w| w.variant.is_none()) {
            w.variant = Some(v);
        }
    }

    let params = CostParams {
        chi: args.chi,
        phi: args.phi,
        ..CostParams::default()
    };
    params.validate().context("cost parameters")?;
    let mut opts = PlanOptions {
        fps_out: args.fps_out,
        window: args.window_ms / 1000.0,
        bg_region: args.bg_region.clone(),
        ..PlanOptions::default()
    };
    opts.search.parallelism = parallelism(args.common.threads);

    let plan = visedit::plan_edit(&edit, &transcript, &track, &dict, &params, &opts)
        .context("plan")?;

    create_dir(&args.out)?;
    write(&args.out, "edl.json", edl::to_edl_json(&plan, &transcript, params.phi))?;
    write(&args.out, "blended.vftk", plan.track.to_track().to_vftk())?;
    let report = edl::report(&plan, &transcript, params.phi);
    write(&args.out, "report.txt", &report)?;
    if args.common.verbose {
        if let Some(search) = &plan.search {
            write(&args.out, "search_table.csv", search.table_csv())?;
        }
        print!("{report}");
    }
    println!(
        "planned {} frames ({:.3} s) into {}",
        plan.track.len(),
        plan.duration(),
        args.out.display()
    );
    Ok(())
}

fn cmd_stats(args: &StatsArgs) -> Result<(), Failure> {
    let transcript = load_alignment(&args.alignment)?;
    if args.k_max == 0 {
        return Err(Failure {
            what: "--k-max".into(),
            error: Error::InvalidParameter("must be at least 1".into()),
        });
    }
    let sampling = if args.exhaustive {
        Sampling::Exhaustive
    } else {
        Sampling::MonteCarlo {
            trials: args.trials,
            seed: args.seed,
        }
    };
    let par = parallelism(args.common.threads);
    let sentences = transcript.sentence_labels();
    let curves = [MatchMode::Phoneme, MatchMode::Viseme]
        .into_iter()
        .map(|mode| {
            stats::match_probability_curve(&sentences, 1..=args.k_max, mode, sampling, par)
                .context(format!("{} match probability", mode.as_str()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let durations = stats::duration_stats(&transcript);
    let (probability_csv, duration_csv) = stats::export_curves(&curves, &durations);

    create_dir(&args.out)?;
    write(&args.out, "match_probability.csv", &probability_csv)?;
    write(&args.out, "durations.csv", &duration_csv)?;
    if args.common.verbose {
        print!("{probability_csv}");
    }
    println!(
        "{} sentences, viseme median spread {:.2}x; wrote {}",
        sentences.len(),
        durations.median_spread(),
        args.out.display()
    );
    Ok(())
}

fn cmd_validate(args: &ValidateArgs) -> Vec<Failure> {
    let mut failures = Vec::new();
    let transcript = keep(&mut failures, args.alignment.as_deref().map(load_alignment));
    let dict = keep(&mut failures, args.dict.as_deref().map(load_dict));
    let track = keep(&mut failures, args.track.as_deref().map(load_track));
    let edit = keep(&mut failures, args.edit.as_deref().map(load_edit));

    if let Some(t) = &transcript {
        println!(
            "alignment: {} words, {} phones, {} sentences, {:.3} s",
            t.words.len(),
            t.phones.len(),
            t.sentences.len(),
            t.duration()
        );
    }
    if let Some(d) = &dict {
        println!("dictionary: {} words", d.len());
    }
    if let Some(tr) = &track {
        println!("track: {} frames at {} fps, {:.3} s", tr.len(), tr.fps, tr.duration());
    }
    if let (Some(t), Some(tr)) = (&transcript, &track) {
        let gap = (tr.duration() - t.duration()).abs();
        if gap > 1.0 / tr.fps {
            failures.push(Failure {
                what: "track/alignment".into(),
                error: Error::InvalidParameter(format!(
                    "track lasts {:.3} s but the transcript {:.3} s",
                    tr.duration(),
                    t.duration()
                )),
            });
        }
    }
    if let (Some(e), Some(t)) = (&edit, &transcript) {
        let checked = match &dict {
            Some(d) => {
                let medians = stats::duration_stats(t);
                build_query(e, d, t, DurationSource::CorpusMedians(&medians)).map(|q| {
                    println!("edit: {:?}, {} query phones", e.kind, q.phones.len());
                })
            }
            None => e.region(t).map(|r| {
                println!("edit: {:?} over words {}..{}", e.kind, r.start, r.end);
            }),
        };
        if let Err(error) = checked {
            failures.push(Failure {
                what: "edit".into(),
                error,
            });
        }
    }
    failures
}

fn keep<T>(failures: &mut Vec<Failure>, loaded: Option<Result<T, Failure>>) -> Option<T> {
    match loaded? {
        Ok(v) => Some(v),
        Err(f) => {
            failures.push(f);
            None
        }
    }
}

fn run_with_threads<T>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T
where
    T: Send,
{
    #[cfg(feature = "parallel")]
    if let Some(n) = threads.filter(|&n| n > 1) {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            return pool.install(f);
        }
    }
    let _ = threads;
    f()
}

fn report(failure: &Failure) -> ExitCode {
    eprintln!("error: {}: {}", failure.what, failure.error);
    ExitCode::from(failure.code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Plan(a) => run_with_threads(a.common.threads, || cmd_plan(a)),
        Command::Stats(a) => run_with_threads(a.common.threads, || cmd_stats(a)),
        Command::Validate(a) => {
            let failures = cmd_validate(a);
            if failures.is_empty() {
                println!("ok");
                return ExitCode::SUCCESS;
            }
            for f in &failures {
                eprintln!("error: {}: {}", f.what, f.error);
            }
            return ExitCode::from(2);
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report(&f),
    }
}
