//! The `useg` command line.
//!
//! Exit codes: 0 on success, 1 on validation errors, 2 on I/O errors.
//! Results go to the output stream (or `--out`), diagnostics to the error
//! stream.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::arabic::{from_buckwalter, normalize, to_buckwalter};
use crate::corpus::{
    all_turns, corpus_stats, load_corpus, materialize, save_corpus, split_corpus, write_corpus,
    Dialogue,
};
use crate::error::{Error, Result};
use crate::features::{parse_window, FeatureTemplate, MAX_WINDOW};
use crate::metrics::{evaluate, percent, report, EvalOptions, Metrics, ReportFormat};
use crate::pos::{LexiconPosProvider, TagMapping};
use crate::segmenter::{
    decode, preprocess, tag_corpus, token_sequence, train_segmenter, PosSource, Segmentation,
};
use crate::svm::{LinearModel, TrainConfig};
use crate::wawanizer::{wawanize_turn, WawLexicon};

/// Directory holding default lexicon files.
pub const DATA_DIR_ENV: &str = "USEG_DATA_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "useg",
    version,
    about = "Segment Arabic dialogue turns into utterances"
)]
struct Cli {
    /// Seed for every random choice
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Only report errors
    #[arg(long, short, global = true)]
    quiet: bool,
    /// Write results to this file instead of standard output
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Normalize Arabic text, one line at a time
    Normalize(TextInput),
    /// Transliterate to Buckwalter, or back with --reverse
    Translit {
        #[arg(long)]
        reverse: bool,
        #[command(flatten)]
        input: TextInput,
    },
    /// Normalize and split prefixed waw
    Wawanize {
        #[arg(long)]
        waw_lexicon: Option<PathBuf>,
        #[command(flatten)]
        input: TextInput,
    },
    /// Corpus statistics
    Stats {
        corpus: PathBuf,
        #[arg(long, default_value = "table")]
        format: String,
    },
    /// Split a corpus per genre into train/dev/test files
    Split {
        corpus: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Train, dev and test fractions
        #[arg(long, default_value = "0.7,0.2,0.1")]
        ratios: String,
        /// Shuffle turns within each genre using --seed
        #[arg(long)]
        seeded_shuffle: bool,
    },
    /// Train a segmentation model
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        template: TemplateArgs,
        #[command(flatten)]
        svm: SvmArgs,
        #[command(flatten)]
        pos: PosArgs,
    },
    /// Tag a corpus or raw text with a trained model
    Tag {
        #[arg(long)]
        model: PathBuf,
        /// Corpus file whose turns are tagged
        #[arg(long, conflicts_with = "text")]
        input: Option<PathBuf>,
        /// Raw text, one turn per line
        #[arg(long, required_unless_present = "input")]
        text: Option<String>,
        #[arg(long, value_enum)]
        emit: Option<Emit>,
        #[arg(long)]
        waw_lexicon: Option<PathBuf>,
        #[command(flatten)]
        pos: PosArgs,
    },
    /// Score predicted segmentation against gold
    Eval {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long, default_value = "table")]
        format: String,
        /// Count the first token of each turn in P/R/F1
        #[arg(long)]
        include_first: bool,
    },
    /// Train and evaluate one model per window size
    Sweep {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        dev: PathBuf,
        /// Comma-separated windows; defaults to -1/+1 through -5/+5
        #[arg(long, allow_hyphen_values = true)]
        windows: Option<String>,
        #[arg(long, default_value_t = 3)]
        prev_tags: usize,
        #[arg(long)]
        no_pos: bool,
        #[arg(long)]
        bigrams: bool,
        #[command(flatten)]
        svm: SvmArgs,
        #[command(flatten)]
        pos: PosArgs,
    },
}

#[derive(Debug, Args)]
struct TextInput {
    /// Text to process; read from --input or standard input when absent
    text: Vec<String>,
    #[arg(long, conflicts_with = "text")]
    input: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TemplateArgs {
    #[arg(long, default_value = "-2/+2", allow_hyphen_values = true)]
    window: String,
    #[arg(long, default_value_t = 3)]
    prev_tags: usize,
    #[arg(long)]
    no_pos: bool,
    #[arg(long)]
    bigrams: bool,
}

#[derive(Debug, Args)]
struct SvmArgs {
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    /// Multiplier on C for B-Seg examples
    #[arg(long)]
    class_weight: Option<f64>,
}

#[derive(Debug, Args)]
struct PosArgs {
    #[arg(long, value_enum, default_value_t = PosMode::Lexicon)]
    pos: PosMode,
    /// Prefix rules mapping corpus POS tags to flags (with --pos gold)
    #[arg(long)]
    tag_map: Option<PathBuf>,
    #[arg(long)]
    conj_lexicon: Option<PathBuf>,
    #[arg(long)]
    propn_lexicon: Option<PathBuf>,
    #[arg(long)]
    nouns_lexicon: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PosMode {
    Lexicon,
    Gold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    Corpus,
    Utterances,
}

/// A file from the `USEG_DATA_DIR` directory, if that variable is set and
/// the file exists.
fn data_file(name: &str) -> Option<PathBuf> {
    let dir = std::env::var_os(DATA_DIR_ENV)?;
    let path = Path::new(&dir).join(name);
    path.is_file().then_some(path)
}

fn waw_lexicon(explicit: &Option<PathBuf>) -> Result<WawLexicon> {
    match explicit.clone().or_else(|| data_file("waw_seed.txt")) {
        Some(path) => Ok(WawLexicon::load(path)?.0),
        None => Ok(WawLexicon::seed()),
    }
}

enum PosChoice {
    Provider(LexiconPosProvider),
    Gold(TagMapping),
}

impl PosChoice {
    fn source(&self) -> PosSource<'_> {
        match self {
            PosChoice::Provider(p) => PosSource::Provider(p),
            PosChoice::Gold(m) => PosSource::Gold(m),
        }
    }
}

impl PosArgs {
    fn provider(&self) -> Result<LexiconPosProvider> {
        let mut p = LexiconPosProvider::builtin();
        if let Some(f) = self
            .conj_lexicon
            .clone()
            .or_else(|| data_file("conjunctions.txt"))
        {
            p = p.with_conjunctions_file(f)?;
        }
        if let Some(f) = self
            .propn_lexicon
            .clone()
            .or_else(|| data_file("proper_nouns.txt"))
        {
            p = p.with_proper_nouns_file(f)?;
        }
        if let Some(f) = self
            .nouns_lexicon
            .clone()
            .or_else(|| data_file("nouns.txt"))
        {
            p = p.with_nouns_file(f)?;
        }
        Ok(p)
    }

    fn choice(&self) -> Result<PosChoice> {
        match self.pos {
            PosMode::Lexicon => Ok(PosChoice::Provider(self.provider()?)),
            PosMode::Gold => {
                let mapping = match self.tag_map.clone().or_else(|| data_file("tag_map.txt")) {
                    Some(path) => TagMapping::load(path)?,
                    None => TagMapping::default(),
                };
                Ok(PosChoice::Gold(mapping))
            }
        }
    }
}

impl SvmArgs {
    fn config(&self, seed: u64) -> Result<TrainConfig> {
        let mut config = TrainConfig {
            c: self.c,
            max_iters: self.max_iters,
            tol: self.tol,
            shuffle_seed: seed,
            ..TrainConfig::default()
        };
        if let Some(w) = self.class_weight {
            config.class_weights.insert("B-Seg".into(), w);
        }
        config.validate()?;
        Ok(config)
    }
}

impl TemplateArgs {
    fn template(&self) -> Result<FeatureTemplate> {
        let (before, after) = parse_window(&self.window)?;
        Ok(FeatureTemplate::new(before, after, self.prev_tags)?
            .with_pos(!self.no_pos)
            .with_bigrams(self.bigrams))
    }
}

impl TextInput {
    fn lines(&self) -> Result<Vec<String>> {
        let text = if !self.text.is_empty() {
            self.text.join(" ")
        } else if let Some(path) = &self.input {
            fs::read_to_string(path).map_err(|e| Error::io(path, e))?
        } else {
            let mut s = String::new();
            io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| Error::io("<stdin>", e))?;
            s
        };
        Ok(text.lines().map(str::to_string).collect())
    }
}

fn parse_ratios(s: &str) -> Result<[f64; 3]> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Config(format!("ratios {s:?} are not three numbers")))?;
    <[f64; 3]>::try_from(parts)
        .map_err(|_| Error::Config(format!("ratios {s:?} are not three numbers")))
}

/// The default sweep grid, `-1/+1` through `-5/+5`.
pub fn default_sweep_grid(n_prev_tags: usize) -> Result<Vec<FeatureTemplate>> {
    (1..=MAX_WINDOW)
        .map(|size| FeatureTemplate::symmetric(size, n_prev_tags))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub template: FeatureTemplate,
    pub alphabet_size: usize,
    pub metrics: Metrics,
}

/// Trains one model per template on `train` and scores each on `dev`.
/// Rows are ranked by F1; ties keep grid order.
pub fn sweep(
    train: &[Dialogue],
    dev: &[Dialogue],
    templates: &[FeatureTemplate],
    pos: PosSource<'_>,
    config: &TrainConfig,
) -> Result<Vec<SweepRow>> {
    if all_turns(dev).next().is_none() {
        return Err(Error::EmptyInput("development set has no turns".into()));
    }
    if templates.is_empty() {
        return Err(Error::Config("no window settings to sweep".into()));
    }
    let mut rows = templates
        .par_iter()
        .map(|&template| {
            let started = Instant::now();
            let (model, _) = train_segmenter(all_turns(train), pos, template, config)?;
            let predicted = tag_corpus(&model, dev, pos)?;
            let metrics = evaluate(
                all_turns(dev),
                all_turns(&predicted),
                EvalOptions::default(),
            )?;
            log::info!(
                "window {}: {} features, {:.2?}",
                template.window_label(),
                model.alphabet().len(),
                started.elapsed()
            );
            Ok(SweepRow {
                template,
                alphabet_size: model.alphabet().len(),
                metrics,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| b.metrics.f1.total_cmp(&a.metrics.f1));
    Ok(rows)
}

pub fn render_sweep(rows: &[SweepRow]) -> String {
    let mut out = String::from("rank\twindow\tprev_tags\tfeatures\tP\tR\tF1\tAcc\tbest\n");
    for (i, row) in rows.iter().enumerate() {
        let m = &row.metrics;
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            i + 1,
            row.template.window_label(),
            row.template.n_prev_tags(),
            row.alphabet_size,
            percent(m.precision),
            percent(m.recall),
            percent(m.f1),
            percent(m.accuracy),
            if i == 0 { "*" } else { "" }
        )
        .unwrap();
    }
    out
}

fn utterance_lines(segmentations: &[Segmentation]) -> String {
    let mut out = String::new();
    for s in segmentations {
        for u in s.utterance_texts() {
            writeln!(out, "{u}").unwrap();
        }
        out.push('\n');
    }
    out
}

fn execute(cli: Cli) -> Result<String> {
    let mut out = String::new();
    match cli.command {
        Command::Normalize(input) => {
            for line in input.lines()? {
                writeln!(out, "{}", normalize(&line)).unwrap();
            }
        }
        Command::Translit { reverse, input } => {
            for (n, line) in input.lines()?.iter().enumerate() {
                if reverse {
                    let arabic = from_buckwalter(line)
                        .map_err(|e| Error::parse("<input>", n + 1, e.to_string()))?;
                    writeln!(out, "{arabic}").unwrap();
                } else {
                    writeln!(out, "{}", to_buckwalter(line)).unwrap();
                }
            }
        }
        Command::Wawanize {
            waw_lexicon: path,
            input,
        } => {
            let lexicon = waw_lexicon(&path)?;
            for line in input.lines()? {
                let normalized = normalize(&line);
                let words: Vec<&str> = normalized.as_str().split_whitespace().collect();
                writeln!(out, "{}", wawanize_turn(&words, &lexicon).join(" ")).unwrap();
            }
        }
        Command::Stats { corpus, format } => {
            let stats = corpus_stats(&load_corpus(&corpus)?);
            match format.parse::<ReportFormat>()? {
                ReportFormat::Json => {
                    out = serde_json::to_string_pretty(&stats).expect("stats serialize");
                    out.push('\n');
                }
                _ => out = stats.to_string(),
            }
        }
        Command::Split {
            corpus,
            out_dir,
            ratios,
            seeded_shuffle,
        } => {
            let ratios = parse_ratios(&ratios)?;
            let dialogues = load_corpus(&corpus)?;
            let split = split_corpus(&dialogues, ratios, seeded_shuffle.then_some(cli.seed))?;
            fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
            for (name, refs) in [
                ("train", &split.train),
                ("dev", &split.dev),
                ("test", &split.test),
            ] {
                let path = out_dir.join(format!("{name}.useg"));
                save_corpus(&materialize(&dialogues, refs), &path)?;
                writeln!(out, "{name}\t{}\t{}", refs.len(), path.display()).unwrap();
            }
        }
        Command::Train {
            corpus,
            model: model_path,
            template,
            svm,
            pos,
        } => {
            let template = template.template()?;
            let config = svm.config(cli.seed)?;
            let pos = pos.choice()?;
            let dialogues = load_corpus(&corpus)?;
            let (model, solutions) =
                train_segmenter(all_turns(&dialogues), pos.source(), template, &config)?;
            model.save(&model_path)?;
            writeln!(out, "template\t{template}").unwrap();
            writeln!(out, "features\t{}", model.alphabet().len()).unwrap();
            for (class, s) in model.classes().iter().zip(&solutions) {
                writeln!(
                    out,
                    "class\t{class}\tsweeps={}\tconverged={}\tdual={:.6}",
                    s.sweeps, s.converged, s.dual_objective
                )
                .unwrap();
            }
        }
        Command::Tag {
            model,
            input,
            text,
            emit,
            waw_lexicon: lexicon_path,
            pos,
        } => {
            let model = LinearModel::load(&model)?;
            let pos = pos.choice()?;
            if let Some(path) = input {
                let dialogues = load_corpus(&path)?;
                let tagged = tag_corpus(&model, &dialogues, pos.source())?;
                out = match emit.unwrap_or(Emit::Corpus) {
                    Emit::Corpus => write_corpus(&tagged),
                    Emit::Utterances => {
                        let segs: Vec<Segmentation> = all_turns(&tagged)
                            .map(|t| {
                                Segmentation::from_tags(
                                    t.tokens.clone(),
                                    t.tags.clone().unwrap_or_default(),
                                )
                            })
                            .collect();
                        utterance_lines(&segs)
                    }
                };
            } else {
                if emit == Some(Emit::Corpus) {
                    return Err(Error::Config(
                        "raw --text can only be emitted as utterances".into(),
                    ));
                }
                if matches!(pos, PosChoice::Gold(_)) {
                    return Err(Error::Config("raw --text carries no gold POS tags".into()));
                }
                let lexicon = waw_lexicon(&lexicon_path)?;
                let text = text.unwrap_or_default();
                let mut segs = Vec::new();
                for line in text.lines().filter(|l| !l.trim().is_empty()) {
                    let tokens = preprocess(line, &lexicon)?;
                    let tags = decode(&model, &token_sequence(&tokens, pos.source()))?;
                    segs.push(Segmentation::from_tags(tokens, tags));
                }
                if segs.is_empty() {
                    return Err(Error::EmptyInput("no text to tag".into()));
                }
                out = utterance_lines(&segs);
            }
        }
        Command::Eval {
            gold,
            pred,
            format,
            include_first,
        } => {
            let format: ReportFormat = format.parse()?;
            let gold = load_corpus(&gold)?;
            let pred = load_corpus(&pred)?;
            let m = evaluate(
                all_turns(&gold),
                all_turns(&pred),
                EvalOptions { include_first },
            )?;
            out = report(&m, format);
        }
        Command::Sweep {
            train,
            dev,
            windows,
            prev_tags,
            no_pos,
            bigrams,
            svm,
            pos,
        } => {
            let templates = match windows {
                None => default_sweep_grid(prev_tags)?,
                Some(list) => list
                    .split(',')
                    .map(|w| {
                        let (b, a) = parse_window(w)?;
                        FeatureTemplate::new(b, a, prev_tags)
                    })
                    .collect::<Result<Vec<_>>>()?,
            };
            let templates: Vec<FeatureTemplate> = templates
                .into_iter()
                .map(|t| t.with_pos(!no_pos).with_bigrams(bigrams))
                .collect();
            let config = svm.config(cli.seed)?;
            let pos = pos.choice()?;
            let train = load_corpus(&train)?;
            let dev = load_corpus(&dev)?;
            let rows = sweep(&train, &dev, &templates, pos.source(), &config)?;
            out = render_sweep(&rows);
        }
    }
    Ok(out)
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    if cli.quiet {
        log::set_max_level(log::LevelFilter::Error);
    }
    let target = cli.out.clone();
    let result = execute(cli).and_then(|text| match &target {
        Some(path) => fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_io() {
                2
            } else {
                1
            }
        }
    }
}
