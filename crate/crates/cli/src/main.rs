use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use emotrans::emotion::parse_emotion_list;
use emotrans::harness::{
    bws_pack, bws_score, evaluate_batch, format_table, parse_annotations, parse_answer_key, read_records,
    run_challenge_suite, spearman, write_annotator_file, write_answer_key, Dimension, EvalRecord, HarnessError,
    PackEntry, Preset, PresetChoice, RunConfig,
};
use emotrans::scoring::ObjectiveWeights;
use emotrans::{transfer, Emotion, TransferOutcome};

#[derive(Parser, Debug)]
#[command(name = "emotrans", version, about = "Emotion style transfer by lexical substitution")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rewrite one sentence towards a target emotion.
    Transfer(TransferArgs),
    /// Automatic evaluation of a corpus under one or more presets.
    Eval(EvalArgs),
    /// Build best-worst scaling tuples from evaluation records.
    BwsPack(BwsPackArgs),
    /// Aggregate best-worst annotations into per-configuration scores.
    BwsScore(BwsScoreArgs),
    /// Spearman correlation between two rankings.
    Spearman(SpearmanArgs),
    /// Run the six challenge sentences against every target.
    Challenge(ChallengeArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// Run configuration file (`key = value` lines).
    #[arg(short, long)]
    config: PathBuf,
    /// Preset overriding the configuration: bfwn, atwn, atun or atin.
    #[arg(long)]
    preset: Option<Preset>,
    /// Objective weights `emo,sim,flu`, summing to one.
    #[arg(long)]
    lambda: Option<ObjectiveWeights>,
}

#[derive(Args, Debug)]
struct TransferArgs {
    #[command(flatten)]
    common: Common,
    /// Target emotion (name or code).
    #[arg(short, long)]
    target: Emotion,
    /// Number of ranked variations to print.
    #[arg(long)]
    top: Option<usize>,
    /// Input sentence, raw or pre-tagged `word/TAG` pairs.
    sentence: String,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Run configuration file (`key = value` lines).
    #[arg(short, long)]
    config: PathBuf,
    /// One sentence per line.
    #[arg(long)]
    corpus: PathBuf,
    /// Comma-separated targets or `all`; defaults to the configuration's.
    #[arg(long)]
    targets: Option<String>,
    /// Comma-separated presets; defaults to all four.
    #[arg(long)]
    presets: Option<String>,
    /// Record stream (JSON lines); defaults to the configuration's `output`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the summary table here instead of standard output.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BwsPackArgs {
    /// Evaluation records covering exactly four configurations.
    #[arg(long)]
    records: PathBuf,
    /// Number of tuples.
    #[arg(short, long)]
    n: usize,
    /// File shown to annotators.
    #[arg(long)]
    annotator: PathBuf,
    /// Hidden answer key.
    #[arg(long)]
    key: PathBuf,
}

#[derive(Args, Debug)]
struct BwsScoreArgs {
    /// Answer key written by bws-pack.
    #[arg(long)]
    key: PathBuf,
    /// `tuple_id<TAB>best<TAB>worst` lines.
    #[arg(long)]
    annotations: PathBuf,
    /// emotion or similarity.
    #[arg(long, default_value = "emotion")]
    dimension: Dimension,
}

#[derive(Args, Debug)]
struct SpearmanArgs {
    /// One value per line, or `label<TAB>value` lines (e.g. bws-score output).
    a: PathBuf,
    b: PathBuf,
}

#[derive(Args, Debug)]
struct ChallengeArgs {
    #[command(flatten)]
    common: Common,
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
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Transfer(a) => cmd_transfer(a),
        Command::Eval(a) => cmd_eval(a),
        Command::BwsPack(a) => cmd_bws_pack(a),
        Command::BwsScore(a) => cmd_bws_score(a),
        Command::Spearman(a) => cmd_spearman(a),
        Command::Challenge(a) => cmd_challenge(a),
    }
}

fn read(path: &Path) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn write(path: &Path, text: &str) -> Result<(), HarnessError> {
    fs::write(path, text).map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn stdout_err(e: io::Error) -> HarnessError {
    HarnessError::Io {
        path: "<stdout>".into(),
        source: e,
    }
}

fn load_config(c: &Common) -> Result<RunConfig, HarnessError> {
    let mut cfg = RunConfig::load(&c.config)?;
    if let Some(p) = c.preset {
        cfg.preset = PresetChoice::Named(p);
    }
    if let Some(w) = c.lambda {
        cfg.weights = Some(w);
    }
    Ok(cfg)
}

fn preset_name(cfg: &RunConfig) -> String {
    match &cfg.preset {
        PresetChoice::Named(p) => p.label().to_string(),
        PresetChoice::Custom(_) => "custom".to_string(),
    }
}

fn cmd_transfer(a: TransferArgs) -> Result<(), HarnessError> {
    let mut cfg = load_config(&a.common)?;
    if let Some(n) = a.top {
        cfg.top_n = n;
    }
    let pipeline = cfg.pipeline();
    pipeline.validate()?;
    let resources = cfg.load_resources(false)?;
    let name = preset_name(&cfg);
    match transfer(&a.sentence, a.target, &pipeline, &resources)? {
        TransferOutcome::Transferred(r) => {
            log::info!(
                "{} selections, {} variations{}",
                r.selections.len(),
                r.generated,
                if r.truncated { " (truncated)" } else { "" }
            );
            let mut out = io::stdout().lock();
            for v in &r.top {
                let rec = EvalRecord::new(&r, &name, v);
                writeln!(out, "{}", rec.to_json()).map_err(stdout_err)?;
            }
            Ok(())
        }
        TransferOutcome::NoCandidates { input, target, .. } => Err(HarnessError::Data(format!(
            "no substitution candidates for `{input}` towards {target}"
        ))),
    }
}

fn cmd_eval(a: EvalArgs) -> Result<(), HarnessError> {
    let cfg = RunConfig::load(&a.config)?;
    let targets = match &a.targets {
        Some(t) => parse_emotion_list(t).map_err(|e| HarnessError::Usage(e.to_string()))?,
        None => cfg.targets.clone(),
    };
    let presets: Vec<Preset> = match &a.presets {
        Some(p) => p
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect::<Result<_, _>>()?,
        None => Preset::ALL.to_vec(),
    };
    if presets.is_empty() {
        return Err(HarnessError::Usage("no presets given".into()));
    }
    let configs: Vec<(String, _)> = presets
        .iter()
        .map(|p| (p.label().to_string(), cfg.pipeline_for(*p)))
        .collect();
    let corpus: Vec<String> = read(&a.corpus)?.lines().map(str::to_string).collect();
    let resources = cfg.load_resources(true)?;

    let out_path = a.out.or_else(|| cfg.output.clone());
    let mut sink = match &out_path {
        Some(p) => Some(BufWriter::new(fs::File::create(p).map_err(|e| HarnessError::Io {
            path: p.clone(),
            source: e,
        })?)),
        None => None,
    };
    let (report, records) = evaluate_batch(
        &corpus,
        &configs,
        &targets,
        &resources,
        sink.as_mut().map(|w| w as &mut dyn Write),
    )?;
    if let (Some(mut w), Some(p)) = (sink, &out_path) {
        w.flush().map_err(|e| HarnessError::Io {
            path: p.clone(),
            source: e,
        })?;
    }
    log::info!("{} records from {} sentences", records.len(), report.sentences);
    let tsv = report.to_tsv();
    match &a.report {
        Some(p) => write(p, &tsv),
        None => io::stdout().write_all(tsv.as_bytes()).map_err(stdout_err),
    }
}

fn cmd_bws_pack(a: BwsPackArgs) -> Result<(), HarnessError> {
    let entries: Vec<PackEntry> = read_records(&read(&a.records)?)?
        .into_iter()
        .map(|r| PackEntry {
            input: r.input,
            target: r.target,
            configuration: r.preset,
            output: r.output,
        })
        .collect();
    let tuples = bws_pack(&entries, a.n)?;
    write(&a.annotator, &write_annotator_file(&tuples))?;
    write(&a.key, &write_answer_key(&tuples))?;
    println!("{} tuples", tuples.len());
    Ok(())
}

fn cmd_bws_score(a: BwsScoreArgs) -> Result<(), HarnessError> {
    let tuples = parse_answer_key(&read(&a.key)?)?;
    let annotations = parse_annotations(&read(&a.annotations)?)?;
    let result = bws_score(&tuples, &annotations, a.dimension)?;
    print!("{}", result.to_tsv());
    Ok(())
}

/// Values from a ranking file, with labels when every line carries one.
/// A first line whose value does not parse is taken as a header.
fn parse_ranking(text: &str, what: &Path) -> Result<Vec<(Option<String>, f64)>, HarnessError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').map(str::trim).collect();
        let (label, value) = if f.len() == 1 { (None, f[0]) } else { (Some(f[0].to_string()), f[1]) };
        match value.parse::<f64>() {
            Ok(v) => out.push((label, v)),
            Err(_) if i == 0 => continue,
            Err(_) => {
                return Err(HarnessError::Data(format!(
                    "{} line {}: `{value}` is not a number",
                    what.display(),
                    i + 1
                )))
            }
        }
    }
    Ok(out)
}

fn align(
    a: Vec<(Option<String>, f64)>,
    b: Vec<(Option<String>, f64)>,
) -> Result<(Vec<f64>, Vec<f64>), HarnessError> {
    let labeled = |r: &[(Option<String>, f64)]| !r.is_empty() && r.iter().all(|(l, _)| l.is_some());
    if !(labeled(&a) && labeled(&b)) {
        return Ok((a.into_iter().map(|x| x.1).collect(), b.into_iter().map(|x| x.1).collect()));
    }
    if a.len() != b.len() {
        return Err(HarnessError::Data(format!(
            "rankings have different lengths ({} and {})",
            a.len(),
            b.len()
        )));
    }
    let mut ys = Vec::with_capacity(a.len());
    for (l, _) in &a {
        let y = b
            .iter()
            .find(|(m, _)| m == l)
            .ok_or_else(|| HarnessError::Data(format!("label `{}` missing from second ranking", l.as_ref().unwrap())))?;
        ys.push(y.1);
    }
    Ok((a.into_iter().map(|x| x.1).collect(), ys))
}

fn cmd_spearman(a: SpearmanArgs) -> Result<(), HarnessError> {
    let ra = parse_ranking(&read(&a.a)?, &a.a)?;
    let rb = parse_ranking(&read(&a.b)?, &a.b)?;
    let (x, y) = align(ra, rb)?;
    println!("{:.6}", spearman(&x, &y)?);
    Ok(())
}

fn cmd_challenge(a: ChallengeArgs) -> Result<(), HarnessError> {
    let cfg = load_config(&a.common)?;
    let pipeline = cfg.pipeline();
    pipeline.validate()?;
    let resources = cfg.load_resources(false)?;
    let rows = run_challenge_suite(&pipeline, &resources);
    print!("{}", format_table(&rows));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rankings_plain_and_labeled() {
        let p = Path::new("x");
        let plain = parse_ranking("1\n2.5\n\n3\n", p).unwrap();
        assert_eq!(plain.iter().map(|x| x.1).collect::<Vec<_>>(), [1.0, 2.5, 3.0]);
        let tsv = "configuration\temotion_score\tbest\n At+In\t0.5\t3\nBf+WN\t-0.25\t1\n";
        let labeled = parse_ranking(tsv, p).unwrap();
        assert_eq!(labeled, [(Some("At+In".into()), 0.5), (Some("Bf+WN".into()), -0.25)]);
        assert!(parse_ranking("1\nfoo\n", p).is_err());
    }

    #[test]
    fn labeled_rankings_align_by_label() {
        let a = vec![(Some("x".into()), 1.0), (Some("y".into()), 2.0)];
        let b = vec![(Some("y".into()), 20.0), (Some("x".into()), 10.0)];
        assert_eq!(align(a.clone(), b).unwrap(), (vec![1.0, 2.0], vec![10.0, 20.0]));
        let c = vec![(Some("x".into()), 1.0), (Some("z".into()), 2.0)];
        assert!(align(a, c).is_err());
    }
}
