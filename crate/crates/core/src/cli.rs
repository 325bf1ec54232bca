//! `termtrie build | annotate | eval`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::annotator::Annotator;
use crate::coder::{assemble_dictionary, BuildReport, DictionaryMode, DictionarySpec};
use crate::corpus::{evaluate, EvalReport};
use crate::corpus::{
    gold_tuples, parse_aligned_causes_file, predicted_tuples, read_annotations_file,
    write_annotations_file, ColumnRef, CorpusFormat, LineAnnotations, TermListFormat,
};
use crate::matcher::{AbbreviationTable, MatchConfig};
use crate::normalize::NormalizationConfig;
use crate::trie::Dictionary;

#[derive(Debug, Parser)]
#[command(
    name = "termtrie",
    version,
    about = "Dictionary-based concept annotation and coding"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a dictionary and print its report.
    Build(BuildArgs),
    /// Annotate the raw texts of a corpus.
    Annotate(AnnotateArgs),
    /// Compare predicted annotations with gold codes.
    Eval(EvalArgs),
}

fn parse_delimiter(s: &str) -> Result<u8, String> {
    match s {
        "\\t" | "tab" => Ok(b'\t'),
        _ if s.len() == 1 && s.is_ascii() => Ok(s.as_bytes()[0]),
        _ => Err(format!(
            "delimiter must be a single ASCII character, got `{s}`"
        )),
    }
}

#[derive(Debug, Clone, Args)]
pub struct CsvArgs {
    /// CSV delimiter for corpus, term list and annotation files.
    #[arg(long, default_value = ";", value_parser = parse_delimiter)]
    pub delimiter: u8,
    /// Document id column (name or zero-based index).
    #[arg(long, default_value = "DocID")]
    pub col_doc: ColumnRef,
    /// Line id column.
    #[arg(long, default_value = "LineID")]
    pub col_line: ColumnRef,
    /// Raw text column.
    #[arg(long, default_value = "RawText")]
    pub col_raw: ColumnRef,
    /// Standard text column.
    #[arg(long, default_value = "StandardText")]
    pub col_standard: ColumnRef,
    /// Code column.
    #[arg(long, default_value = "ICD10")]
    pub col_code: ColumnRef,
}

impl CsvArgs {
    fn corpus_format(&self, standard: bool, code: bool) -> CorpusFormat {
        CorpusFormat {
            delimiter: self.delimiter,
            doc: self.col_doc.clone(),
            line: self.col_line.clone(),
            raw: self.col_raw.clone(),
            standard: standard.then(|| self.col_standard.clone()),
            code: code.then(|| self.col_code.clone()),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DictionaryArgs {
    /// Coded AlignedCauses file used as a term source (repeatable).
    #[arg(long = "corpus")]
    pub corpus: Vec<PathBuf>,
    /// External label/code term list (repeatable); used with
    /// `--mode corpus_plus_external`.
    #[arg(long = "terms")]
    pub terms: Vec<PathBuf>,
    /// corpus_only or corpus_plus_external.
    #[arg(long, default_value = "corpus_only")]
    pub mode: DictionaryMode,
    /// Label column of the term lists.
    #[arg(long, default_value = "label")]
    pub col_label: ColumnRef,
    /// Code column of the term lists.
    #[arg(long, default_value = "code")]
    pub col_term_code: ColumnRef,
    /// Stopword file, one token per line (default: 25 built-in French words).
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    #[command(flatten)]
    pub csv: CsvArgs,
}

impl DictionaryArgs {
    fn normalization(&self) -> anyhow::Result<NormalizationConfig> {
        Ok(match &self.stopwords {
            Some(path) => NormalizationConfig::from_stopword_file(path)?,
            None => NormalizationConfig::default(),
        })
    }

    fn spec(&self) -> DictionarySpec {
        DictionarySpec {
            corpus_sources: self.corpus.clone(),
            external_term_lists: self.terms.clone(),
            mode: self.mode,
            corpus_format: self.csv.corpus_format(true, true),
            term_list_format: TermListFormat {
                delimiter: self.csv.delimiter,
                label: self.col_label.clone(),
                code: self.col_term_code.clone(),
            },
        }
    }

    fn build(&self, norm: &NormalizationConfig) -> anyhow::Result<(Dictionary, BuildReport)> {
        if self.mode == DictionaryMode::CorpusOnly && !self.terms.is_empty() {
            eprintln!("warning: --terms ignored in corpus_only mode");
        }
        Ok(assemble_dictionary(&self.spec(), norm)?)
    }
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub dictionary: DictionaryArgs,
    /// Also write the report as JSON.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnnotateArgs {
    #[command(flatten)]
    pub dictionary: DictionaryArgs,
    /// Corpus whose raw texts are annotated.
    #[arg(long)]
    pub input: PathBuf,
    /// Annotation CSV to write.
    #[arg(long)]
    pub output: PathBuf,
    /// Abbreviation file, `abbrev=expansion` per line (default: 9 built-in
    /// entries).
    #[arg(long)]
    pub abbreviations: Option<PathBuf>,
    /// Maximum edit distance for fuzzy token matching; 0 disables it.
    #[arg(long, default_value_t = 1)]
    pub max_dist: usize,
    /// Minimum token length for fuzzy matching.
    #[arg(long, default_value_t = 5)]
    pub fuzzy_min_len: usize,
    /// Worker threads (default: number of processors).
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Corpus with gold codes.
    #[arg(long)]
    pub gold: PathBuf,
    /// Annotation CSV produced by `annotate`.
    #[arg(long)]
    pub predicted: PathBuf,
    /// JSON report path.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub csv: CsvArgs,
}

pub fn run(cli: Cli, out: &mut dyn Write) -> anyhow::Result<()> {
    match cli.command {
        Command::Build(args) => {
            let report = cmd_build(&args)?;
            writeln!(out, "{report}")?;
        }
        Command::Annotate(args) => {
            let summary = cmd_annotate(&args)?;
            writeln!(
                out,
                "lines={} annotations={}",
                summary.lines, summary.annotations
            )?;
        }
        Command::Eval(args) => {
            let report = cmd_eval(&args)?;
            writeln!(out, "tp={} fp={} fn={}", report.tp, report.fp, report.fn_)?;
            writeln!(out, "{report}")?;
        }
    }
    Ok(())
}

pub fn cmd_build(args: &BuildArgs) -> anyhow::Result<BuildReport> {
    let norm = args.dictionary.normalization()?;
    let (_, report) = args.dictionary.build(&norm)?;
    if let Some(path) = &args.output {
        write_json(path, &report)?;
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnnotateSummary {
    pub lines: usize,
    pub annotations: usize,
}

pub fn cmd_annotate(args: &AnnotateArgs) -> anyhow::Result<AnnotateSummary> {
    if args.workers == Some(0) {
        bail!("--workers must be at least 1");
    }
    let norm = args.dictionary.normalization()?;
    let abbrevs = match &args.abbreviations {
        Some(path) => AbbreviationTable::from_file(path, &norm)?,
        None => AbbreviationTable::default_for(&norm),
    };
    let (dict, report) = args.dictionary.build(&norm)?;
    eprintln!("dictionary: {report}");

    let input_fmt = args.dictionary.csv.corpus_format(false, false);
    let corpus = parse_aligned_causes_file(&args.input, &input_fmt)?;
    if corpus.skipped > 0 {
        eprintln!(
            "warning: skipped {} malformed rows in {}",
            corpus.skipped,
            args.input.display()
        );
    }

    // Rows repeat when a line carries several gold codes; annotate each
    // (doc, line, raw text) once.
    let mut lines: Vec<(&str, &str, &str)> = corpus
        .records
        .iter()
        .map(|r| (r.doc_id.as_str(), r.line_id.as_str(), r.raw_text.as_str()))
        .collect();
    let mut seen = std::collections::HashSet::new();
    lines.retain(|l| seen.insert(*l));

    let matching = MatchConfig {
        max_dist: args.max_dist,
        fuzzy_min_len: args.fuzzy_min_len,
    };
    let annotator = Annotator::new(&dict, &norm, &abbrevs, matching);
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.workers {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().context("starting worker pool")?;
    let annotated: Vec<LineAnnotations> = pool.install(|| {
        lines
            .par_iter()
            .map(|&(doc, line, raw)| LineAnnotations {
                doc_id: doc.to_owned(),
                line_id: line.to_owned(),
                raw_text: raw.to_owned(),
                annotations: annotator.annotate_line(raw),
            })
            .collect()
    });

    let count = write_annotations_file(&annotated, &args.output, args.dictionary.csv.delimiter)?;
    Ok(AnnotateSummary {
        lines: annotated.len(),
        annotations: count,
    })
}

pub fn cmd_eval(args: &EvalArgs) -> anyhow::Result<EvalReport> {
    let gold = parse_aligned_causes_file(&args.gold, &args.csv.corpus_format(false, true))?;
    let predicted = read_annotations_file(&args.predicted, args.csv.delimiter)?;
    let report = evaluate(&gold_tuples(&gold.records), &predicted_tuples(&predicted));
    if let Some(path) = &args.output {
        write_json(path, &report)?;
    }
    Ok(report)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let json = serde_json::to_string_pretty(value)?;
    fs::write(path, json + "\n").with_context(|| format!("writing {}", path.display()))
}
