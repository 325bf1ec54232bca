//! Dictionary construction from coded corpora and external term lists.
//!
//! Standard texts are normalized into token-path keys and counted per code.
//! A key seen with several codes keeps its most frequent one; on equal
//! counts the lexicographically smallest code is kept. External term lists
//! only contribute keys the corpus did not already provide.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

use crate::corpus::{
    parse_aligned_causes_file, parse_term_list_file, ColumnRef, CorpusFormat, CorpusRecord,
    TermListFormat,
};
use crate::error::{Error, Result};
use crate::normalize::{tokenize, NormalizationConfig};
use crate::trie::{Dictionary, DictionaryTrie, Term};

/// Occurrence counts of codes (and surface labels) per normalized key.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CodeFrequencyTable {
    codes: BTreeMap<String, BTreeMap<String, u64>>,
    labels: BTreeMap<String, BTreeMap<String, u64>>,
}

fn argmax(counts: &BTreeMap<String, u64>) -> Option<&str> {
    // BTreeMap iterates in key order, so the first maximum is the smallest key.
    let mut best: Option<(&str, u64)> = None;
    for (key, &count) in counts {
        if best.is_none_or(|(_, c)| count > c) {
            best = Some((key, count));
        }
    }
    best.map(|(k, _)| k)
}

impl CodeFrequencyTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Counts one `(label, code)` occurrence. Returns `false` without
    /// counting when the label normalizes to nothing or the code is blank.
    pub fn add(&mut self, label: &str, code: &str, cfg: &NormalizationConfig) -> bool {
        self.add_n(label, code, 1, cfg)
    }

    pub fn add_n(&mut self, label: &str, code: &str, n: u64, cfg: &NormalizationConfig) -> bool {
        let code = code.trim();
        let tokens = tokenize(label, cfg).tokens;
        if tokens.is_empty() || code.is_empty() || n == 0 {
            return false;
        }
        let key = tokens.join(" ");
        *self
            .codes
            .entry(key.clone())
            .or_default()
            .entry(code.to_owned())
            .or_default() += n;
        *self
            .labels
            .entry(key)
            .or_default()
            .entry(label.trim().to_owned())
            .or_default() += n;
        true
    }

    pub fn codes(&self, key: &str) -> Option<&BTreeMap<String, u64>> {
        self.codes.get(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.codes.keys().map(String::as_str)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.codes.contains_key(key)
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    /// Keys seen with more than one code.
    pub fn ambiguous_count(&self) -> usize {
        self.codes.values().filter(|c| c.len() > 1).count()
    }

    /// Most frequent code for `key`; ties go to the smallest code.
    pub fn resolve_code(&self, key: &str) -> Result<&str> {
        self.codes
            .get(key)
            .and_then(argmax)
            .ok_or_else(|| Error::MissingKey(key.to_owned()))
    }

    /// Most frequent surface label for `key`, used as the term label.
    pub fn resolve_label(&self, key: &str) -> Result<&str> {
        self.labels
            .get(key)
            .and_then(argmax)
            .ok_or_else(|| Error::MissingKey(key.to_owned()))
    }

    /// One resolved term per key, in key order.
    pub fn resolved_terms(&self) -> impl Iterator<Item = Term> + '_ {
        self.keys().map(move |key| {
            let tokens = key.split(' ').map(str::to_owned).collect();
            let label = self.resolve_label(key).expect("key present");
            let code = self.resolve_code(key).expect("key present");
            Term::from_tokens(tokens, label, code).expect("keys are non-empty and codes non-blank")
        })
    }
}

pub fn resolve_code<'t>(table: &'t CodeFrequencyTable, key: &str) -> Result<&'t str> {
    table.resolve_code(key)
}

/// Frequency table harvested from corpus standard texts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusHarvest {
    pub table: CodeFrequencyTable,
    /// Rows with an empty standard text, code, or normalized key.
    pub skipped: usize,
}

pub fn build_dictionary_from_corpus(
    records: &[CorpusRecord],
    cfg: &NormalizationConfig,
) -> CorpusHarvest {
    let mut harvest = CorpusHarvest::default();
    for record in records {
        let counted = match (&record.standard_text, &record.code) {
            (Some(text), Some(code)) => harvest.table.add(text, code, cfg),
            _ => false,
        };
        if !counted {
            harvest.skipped += 1;
        }
    }
    harvest
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DictionaryMode {
    /// Terms from annotated corpora only.
    #[default]
    CorpusOnly,
    /// Corpus terms plus external term lists for uncovered keys.
    CorpusPlusExternal,
}

impl FromStr for DictionaryMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "corpus_only" => Ok(DictionaryMode::CorpusOnly),
            "corpus_plus_external" => Ok(DictionaryMode::CorpusPlusExternal),
            other => Err(format!(
                "unknown mode `{other}` (expected corpus_only or corpus_plus_external)"
            )),
        }
    }
}

impl fmt::Display for DictionaryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DictionaryMode::CorpusOnly => "corpus_only",
            DictionaryMode::CorpusPlusExternal => "corpus_plus_external",
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct DictionarySpec {
    pub corpus_sources: Vec<PathBuf>,
    pub external_term_lists: Vec<PathBuf>,
    pub mode: DictionaryMode,
    pub corpus_format: CorpusFormat,
    pub term_list_format: TermListFormat,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct BuildReport {
    pub terms: usize,
    pub codes: usize,
    /// External keys dropped because the corpus already provided them.
    pub conflicts: usize,
    /// Keys seen with more than one code before resolution.
    pub ambiguous: usize,
    pub skipped_rows: usize,
}

impl fmt::Display for BuildReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "terms={} codes={} conflicts={} ambiguous={} skipped={}",
            self.terms, self.codes, self.conflicts, self.ambiguous, self.skipped_rows
        )
    }
}

/// Builds a frozen dictionary from in-memory tables; corpus keys win over
/// external ones.
pub fn assemble_from_tables(
    corpus: &CodeFrequencyTable,
    external: Option<&CodeFrequencyTable>,
) -> (Dictionary, BuildReport) {
    let mut trie = DictionaryTrie::new();
    let mut report = BuildReport {
        ambiguous: corpus.ambiguous_count(),
        ..BuildReport::default()
    };
    for term in corpus.resolved_terms() {
        trie.insert_term(term).expect("resolved terms are valid");
    }
    if let Some(external) = external {
        report.ambiguous += external
            .keys()
            .filter(|k| !corpus.contains(k))
            .filter(|k| external.codes(k).is_some_and(|c| c.len() > 1))
            .count();
        for term in external.resolved_terms() {
            if corpus.contains(&term.key()) {
                report.conflicts += 1;
                continue;
            }
            trie.insert_term(term).expect("resolved terms are valid");
        }
    }
    report.terms = trie.term_count();
    report.codes = trie.code_count();
    (trie.freeze(), report)
}

pub fn assemble_dictionary(
    spec: &DictionarySpec,
    cfg: &NormalizationConfig,
) -> Result<(Dictionary, BuildReport)> {
    let use_external = spec.mode == DictionaryMode::CorpusPlusExternal;
    if spec.corpus_sources.is_empty() && (!use_external || spec.external_term_lists.is_empty()) {
        return Err(Error::NoSources);
    }

    let mut corpus_fmt = spec.corpus_format.clone();
    corpus_fmt
        .standard
        .get_or_insert_with(|| ColumnRef::name("StandardText"));
    corpus_fmt
        .code
        .get_or_insert_with(|| ColumnRef::name("ICD10"));

    let mut corpus = CodeFrequencyTable::new();
    let mut skipped = 0;
    for path in &spec.corpus_sources {
        let parsed = parse_aligned_causes_file(path, &corpus_fmt)?;
        let harvest = build_dictionary_from_corpus(&parsed.records, cfg);
        skipped += parsed.skipped + harvest.skipped;
        merge_into(&mut corpus, harvest.table);
    }

    let external = if use_external {
        let mut table = CodeFrequencyTable::new();
        for path in &spec.external_term_lists {
            let (entries, rows_skipped) = parse_term_list_file(path, &spec.term_list_format)?;
            skipped += rows_skipped;
            for (label, code) in entries {
                if !table.add(&label, &code, cfg) {
                    skipped += 1;
                }
            }
        }
        Some(table)
    } else {
        None
    };

    let (dict, mut report) = assemble_from_tables(&corpus, external.as_ref());
    report.skipped_rows = skipped;
    Ok((dict, report))
}

fn merge_into(target: &mut CodeFrequencyTable, source: CodeFrequencyTable) {
    for (key, codes) in source.codes {
        let entry = target.codes.entry(key).or_default();
        for (code, n) in codes {
            *entry.entry(code).or_default() += n;
        }
    }
    for (key, labels) in source.labels {
        let entry = target.labels.entry(key).or_default();
        for (label, n) in labels {
            *entry.entry(label).or_default() += n;
        }
    }
}
