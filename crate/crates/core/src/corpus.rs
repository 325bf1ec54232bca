//! AlignedCauses CSV ingestion, annotation output, and micro-averaged
//! precision/recall over `(doc, line, code)` tuples.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::annotator::Annotation;
use crate::error::{Error, Result};
use crate::matcher::MatchTechnique;

/// A CSV column chosen by header name or zero-based index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnRef {
    Name(String),
    Index(usize),
}

impl ColumnRef {
    pub fn name(name: &str) -> Self {
        ColumnRef::Name(name.to_owned())
    }

    fn resolve(&self, headers: &csv::StringRecord) -> Result<usize> {
        match self {
            ColumnRef::Index(i) if *i < headers.len() => Ok(*i),
            ColumnRef::Index(i) => Err(Error::MissingColumn(i.to_string())),
            ColumnRef::Name(name) => headers
                .iter()
                .position(|h| h.trim().trim_start_matches('\u{feff}') == name)
                .ok_or_else(|| Error::MissingColumn(name.clone())),
        }
    }
}

impl FromStr for ColumnRef {
    type Err = std::convert::Infallible;

    /// All-digit strings select by index, anything else by name.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => ColumnRef::Index(i),
            Err(_) => ColumnRef::Name(s.to_owned()),
        })
    }
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnRef::Name(n) => f.write_str(n),
            ColumnRef::Index(i) => write!(f, "{i}"),
        }
    }
}

/// Dialect and column selection for AlignedCauses files. `standard` and
/// `code` are optional so that unannotated input can be read with the same
/// parser; when set, the column must exist.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusFormat {
    pub delimiter: u8,
    pub doc: ColumnRef,
    pub line: ColumnRef,
    pub raw: ColumnRef,
    pub standard: Option<ColumnRef>,
    pub code: Option<ColumnRef>,
}

impl Default for CorpusFormat {
    fn default() -> Self {
        Self {
            delimiter: b';',
            doc: ColumnRef::name("DocID"),
            line: ColumnRef::name("LineID"),
            raw: ColumnRef::name("RawText"),
            standard: Some(ColumnRef::name("StandardText")),
            code: Some(ColumnRef::name("ICD10")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusRecord {
    pub doc_id: String,
    pub line_id: String,
    pub raw_text: String,
    pub standard_text: Option<String>,
    pub code: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedCorpus {
    pub records: Vec<CorpusRecord>,
    /// Rows dropped because they were short or lacked a document/line id.
    pub skipped: usize,
}

fn non_empty(field: Option<&str>) -> Option<String> {
    field
        .map(str::trim)
        .filter(|f| !f.is_empty())
        .map(str::to_owned)
}

fn reader_builder(delimiter: u8) -> csv::ReaderBuilder {
    let mut builder = csv::ReaderBuilder::new();
    builder
        .delimiter(delimiter)
        .flexible(true)
        .has_headers(true);
    builder
}

pub fn parse_aligned_causes<R: Read>(input: R, fmt: &CorpusFormat) -> Result<ParsedCorpus> {
    let mut reader = reader_builder(fmt.delimiter).from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| Error::csv("reading header", e))?
        .clone();
    let doc = fmt.doc.resolve(&headers)?;
    let line = fmt.line.resolve(&headers)?;
    let raw = fmt.raw.resolve(&headers)?;
    let standard = fmt
        .standard
        .as_ref()
        .map(|c| c.resolve(&headers))
        .transpose()?;
    let code = fmt.code.as_ref().map(|c| c.resolve(&headers)).transpose()?;

    let mut parsed = ParsedCorpus::default();
    for row in reader.records() {
        let row = match row {
            Ok(row) => row,
            Err(e) if e.is_io_error() => return Err(Error::csv("reading corpus", e)),
            Err(_) => {
                parsed.skipped += 1;
                continue;
            }
        };
        let (Some(doc_id), Some(line_id), Some(raw_text)) = (
            non_empty(row.get(doc)),
            non_empty(row.get(line)),
            row.get(raw),
        ) else {
            parsed.skipped += 1;
            continue;
        };
        parsed.records.push(CorpusRecord {
            doc_id,
            line_id,
            raw_text: raw_text.to_owned(),
            standard_text: standard.and_then(|i| non_empty(row.get(i))),
            code: code.and_then(|i| non_empty(row.get(i))),
        });
    }
    Ok(parsed)
}

pub fn parse_aligned_causes_file(
    path: impl AsRef<Path>,
    fmt: &CorpusFormat,
) -> Result<ParsedCorpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_aligned_causes(file, fmt).map_err(|e| with_path(e, path))
}

fn with_path(e: Error, path: &Path) -> Error {
    match e {
        Error::Csv { context, source } => Error::Csv {
            context: format!("{}: {context}", path.display()),
            source,
        },
        Error::MissingColumn(col) => Error::MissingColumn(format!("{col}` in `{}", path.display())),
        other => other,
    }
}

/// Dialect of an external label/code term list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermListFormat {
    pub delimiter: u8,
    pub label: ColumnRef,
    pub code: ColumnRef,
}

impl Default for TermListFormat {
    fn default() -> Self {
        Self {
            delimiter: b';',
            label: ColumnRef::name("label"),
            code: ColumnRef::name("code"),
        }
    }
}

/// `(label, code)` rows of a term list plus the number of rows skipped for
/// an empty label or code.
pub fn parse_term_list<R: Read>(
    input: R,
    fmt: &TermListFormat,
) -> Result<(Vec<(String, String)>, usize)> {
    let mut reader = reader_builder(fmt.delimiter).from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| Error::csv("reading header", e))?
        .clone();
    let label = fmt.label.resolve(&headers)?;
    let code = fmt.code.resolve(&headers)?;
    let mut entries = Vec::new();
    let mut skipped = 0;
    for row in reader.records() {
        let row = row.map_err(|e| Error::csv("reading term list", e))?;
        match (non_empty(row.get(label)), non_empty(row.get(code))) {
            (Some(l), Some(c)) => entries.push((l, c)),
            _ => skipped += 1,
        }
    }
    Ok((entries, skipped))
}

pub fn parse_term_list_file(
    path: impl AsRef<Path>,
    fmt: &TermListFormat,
) -> Result<(Vec<(String, String)>, usize)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_term_list(file, fmt).map_err(|e| with_path(e, path))
}

/// Annotations of one corpus line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineAnnotations {
    pub doc_id: String,
    pub line_id: String,
    pub raw_text: String,
    pub annotations: Vec<Annotation>,
}

/// One row of the annotation CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationRow {
    pub doc_id: String,
    pub line_id: String,
    pub start_char: usize,
    pub end_char: usize,
    pub matched_text: String,
    pub term_label: String,
    pub code: String,
    pub techniques: Vec<MatchTechnique>,
}

pub const ANNOTATION_HEADER: [&str; 8] = [
    "doc_id",
    "line_id",
    "start_char",
    "end_char",
    "matched_text",
    "term_label",
    "code",
    "techniques",
];

/// Orders ids numerically when both parse as integers, textually otherwise.
fn id_cmp(a: &str, b: &str) -> Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y).then_with(|| a.cmp(b)),
        _ => a.cmp(b),
    }
}

fn row_cmp(a: &AnnotationRow, b: &AnnotationRow) -> Ordering {
    id_cmp(&a.doc_id, &b.doc_id)
        .then_with(|| id_cmp(&a.line_id, &b.line_id))
        .then_with(|| a.start_char.cmp(&b.start_char))
        .then_with(|| a.end_char.cmp(&b.end_char))
}

pub fn annotation_rows(lines: &[LineAnnotations]) -> Vec<AnnotationRow> {
    let mut rows: Vec<AnnotationRow> = lines
        .iter()
        .flat_map(|line| {
            line.annotations.iter().map(move |a| AnnotationRow {
                doc_id: line.doc_id.clone(),
                line_id: line.line_id.clone(),
                start_char: a.start_char,
                end_char: a.end_char,
                matched_text: line.raw_text[a.start_char..a.end_char].to_owned(),
                term_label: a.term_label.clone(),
                code: a.code.clone(),
                techniques: a.techniques.clone(),
            })
        })
        .collect();
    rows.sort_by(row_cmp);
    rows
}

/// Writes the annotation CSV sorted by (doc, line, start); returns the
/// number of data rows.
pub fn write_annotations<W: Write>(
    lines: &[LineAnnotations],
    output: W,
    delimiter: u8,
) -> Result<usize> {
    write_annotation_rows(&annotation_rows(lines), output, delimiter)
}

pub fn write_annotation_rows<W: Write>(
    rows: &[AnnotationRow],
    output: W,
    delimiter: u8,
) -> Result<usize> {
    let mut writer = csv::WriterBuilder::new()
        .delimiter(delimiter)
        .from_writer(output);
    let err = |e| Error::csv("writing annotations", e);
    writer.write_record(ANNOTATION_HEADER).map_err(err)?;
    for row in rows {
        let techniques = row
            .techniques
            .iter()
            .map(|t| t.as_str())
            .collect::<Vec<_>>()
            .join(",");
        writer
            .write_record([
                row.doc_id.as_str(),
                row.line_id.as_str(),
                &row.start_char.to_string(),
                &row.end_char.to_string(),
                &row.matched_text,
                &row.term_label,
                &row.code,
                &techniques,
            ])
            .map_err(err)?;
    }
    writer
        .flush()
        .map_err(|e| Error::csv("writing annotations", e.into()))?;
    Ok(rows.len())
}

pub fn write_annotations_file(
    lines: &[LineAnnotations],
    path: impl AsRef<Path>,
    delimiter: u8,
) -> Result<usize> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_annotations(lines, std::io::BufWriter::new(file), delimiter)
        .map_err(|e| with_path(e, path))
}

pub fn read_annotations<R: Read>(input: R, delimiter: u8) -> Result<Vec<AnnotationRow>> {
    let mut reader = reader_builder(delimiter).flexible(false).from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| Error::csv("reading header", e))?
        .clone();
    let mut cols = [0usize; 8];
    for (slot, name) in cols.iter_mut().zip(ANNOTATION_HEADER) {
        *slot = ColumnRef::name(name).resolve(&headers)?;
    }
    let mut rows = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::csv("reading annotations", e))?;
        let field = |k: usize| row.get(cols[k]).unwrap_or("");
        let offset = |k: usize| {
            field(k)
                .trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidField {
                    row: i + 1,
                    column: ANNOTATION_HEADER[k].to_owned(),
                    value: field(k).to_owned(),
                })
        };
        let techniques = field(7)
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<MatchTechnique>>>()?;
        rows.push(AnnotationRow {
            doc_id: field(0).to_owned(),
            line_id: field(1).to_owned(),
            start_char: offset(2)?,
            end_char: offset(3)?,
            matched_text: field(4).to_owned(),
            term_label: field(5).to_owned(),
            code: field(6).to_owned(),
            techniques,
        });
    }
    Ok(rows)
}

pub fn read_annotations_file(path: impl AsRef<Path>, delimiter: u8) -> Result<Vec<AnnotationRow>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_annotations(file, delimiter).map_err(|e| with_path(e, path))
}

/// One gold or predicted code assignment.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CodeTuple {
    pub doc_id: String,
    pub line_id: String,
    pub code: String,
}

impl CodeTuple {
    pub fn new(doc_id: &str, line_id: &str, code: &str) -> Self {
        Self {
            doc_id: doc_id.to_owned(),
            line_id: line_id.to_owned(),
            code: code.to_owned(),
        }
    }
}

/// Gold tuples from corpus records; rows without a code contribute none.
pub fn gold_tuples(records: &[CorpusRecord]) -> BTreeSet<CodeTuple> {
    records
        .iter()
        .filter_map(|r| {
            r.code
                .as_deref()
                .map(|c| CodeTuple::new(&r.doc_id, &r.line_id, c))
        })
        .collect()
}

pub fn predicted_tuples(rows: &[AnnotationRow]) -> BTreeSet<CodeTuple> {
    rows.iter()
        .map(|r| CodeTuple::new(&r.doc_id, &r.line_id, &r.code))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalReport {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

impl EvalReport {
    /// Metrics from raw counts. With no gold and no predictions every metric
    /// is 1.0; with exactly one side empty every metric is 0.0.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let predicted = tp + fp;
        let gold = tp + fn_;
        let (precision, recall) = match (predicted, gold) {
            (0, 0) => (1.0, 1.0),
            (0, _) | (_, 0) => (0.0, 0.0),
            (p, g) => (tp as f64 / p as f64, tp as f64 / g as f64),
        };
        let f_measure = if predicted == 0 && gold == 0 {
            1.0
        } else if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            tp,
            fp,
            fn_,
            precision,
            recall,
            f_measure,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "precision {:.3} recall {:.3} f {:.3}",
            self.precision, self.recall, self.f_measure
        )
    }
}

/// Micro-averaged set comparison; duplicates on either side count once.
pub fn evaluate<'a, G, P>(gold: G, predicted: P) -> EvalReport
where
    G: IntoIterator<Item = &'a CodeTuple>,
    P: IntoIterator<Item = &'a CodeTuple>,
{
    let gold: BTreeSet<&CodeTuple> = gold.into_iter().collect();
    let predicted: BTreeSet<&CodeTuple> = predicted.into_iter().collect();
    let tp = gold.intersection(&predicted).count();
    EvalReport::from_counts(tp, predicted.len() - tp, gold.len() - tp)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE_ONE: &str = "\
DocID;LineID;RawText;StandardText;ICD10
1;1;SYNDROME DE GLISEMENT AVEC GRABATISATION DEPUIS OCTOBRE 2012;syndrome glissement;R453
1;1;SYNDROME DE GLISEMENT AVEC GRABATISATION DEPUIS OCTOBRE 2012;grabatisation 2 mois;R263
";

    fn t(doc: &str, line: &str, code: &str) -> CodeTuple {
        CodeTuple::new(doc, line, code)
    }

    #[test]
    fn parses_table_one() {
        let parsed = parse_aligned_causes(TABLE_ONE.as_bytes(), &CorpusFormat::default()).unwrap();
        assert_eq!(parsed.records.len(), 2);
        assert_eq!(parsed.records[0].raw_text, parsed.records[1].raw_text);
        assert_eq!(parsed.records[0].code.as_deref(), Some("R453"));
        assert_eq!(parsed.records[1].code.as_deref(), Some("R263"));
        assert_eq!(
            parsed.records[1].standard_text.as_deref(),
            Some("grabatisation 2 mois")
        );
    }

    #[test]
    fn header_only_and_missing_fields() {
        let fmt = CorpusFormat::default();
        let parsed =
            parse_aligned_causes("DocID;LineID;RawText;StandardText;ICD10\n".as_bytes(), &fmt)
                .unwrap();
        assert!(parsed.records.is_empty());

        let text = "DocID;LineID;RawText;StandardText;ICD10\n\
                    7;2;deces;;\n\
                    7;3;avc\n\
                    ;4;orphan;x;Y\n";
        let parsed = parse_aligned_causes(text.as_bytes(), &fmt).unwrap();
        assert_eq!(parsed.records.len(), 2);
        assert_eq!(parsed.records[0].code, None);
        assert_eq!(parsed.records[0].standard_text, None);
        assert_eq!(parsed.records[1].raw_text, "avc");
        assert_eq!(parsed.records[1].code, None);
        assert_eq!(parsed.skipped, 1);
    }

    #[test]
    fn missing_column_is_named() {
        let fmt = CorpusFormat {
            code: Some(ColumnRef::name("CODE")),
            ..CorpusFormat::default()
        };
        let err = parse_aligned_causes(TABLE_ONE.as_bytes(), &fmt).unwrap_err();
        assert!(err.to_string().contains("CODE"), "{err}");
    }

    #[test]
    fn columns_by_index() {
        let fmt = CorpusFormat {
            delimiter: b',',
            doc: "0".parse().unwrap(),
            line: "1".parse().unwrap(),
            raw: "2".parse().unwrap(),
            standard: None,
            code: Some("3".parse().unwrap()),
        };
        let parsed = parse_aligned_causes("a,b,c,d\n1,1,avc,I640\n".as_bytes(), &fmt).unwrap();
        assert_eq!(parsed.records[0].code.as_deref(), Some("I640"));
        assert!(parse_aligned_causes("a,b\n".as_bytes(), &fmt).is_err());
    }

    #[test]
    fn term_list_parsing() {
        let fmt = TermListFormat::default();
        let (entries, skipped) =
            parse_term_list("label;code\nasthme;J459\n;X\navc;I64\n".as_bytes(), &fmt).unwrap();
        assert_eq!(
            entries,
            [
                ("asthme".into(), "J459".into()),
                ("avc".into(), "I64".into())
            ]
        );
        assert_eq!(skipped, 1);
    }

    #[test]
    fn evaluation_examples() {
        let gold = [
            t("1", "1", "a"),
            t("1", "1", "b"),
            t("1", "2", "c"),
            t("2", "1", "d"),
        ];
        let pred = [t("1", "1", "a"), t("1", "1", "b"), t("2", "1", "e")];
        let r = evaluate(&gold, &pred);
        assert_eq!((r.tp, r.fp, r.fn_), (2, 1, 2));
        assert!((r.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.recall - 0.5).abs() < 1e-12);
        assert!((r.f_measure - 4.0 / 7.0).abs() < 1e-12);
        assert_eq!(r.to_string(), "precision 0.667 recall 0.500 f 0.571");

        let same = evaluate(&gold, &gold);
        assert_eq!(
            (same.precision, same.recall, same.f_measure),
            (1.0, 1.0, 1.0)
        );
    }

    #[test]
    fn degenerate_denominators() {
        let none: [CodeTuple; 0] = [];
        let one = [t("1", "1", "a")];
        assert_eq!(evaluate(&none, &none).f_measure, 1.0);
        let r = evaluate(&one, &none);
        assert_eq!((r.precision, r.recall, r.f_measure), (0.0, 0.0, 0.0));
        let r = evaluate(&none, &one);
        assert_eq!((r.precision, r.recall, r.f_measure), (0.0, 0.0, 0.0));
        let r = evaluate(&one, &[t("1", "1", "b")]);
        assert_eq!(r.f_measure, 0.0);
    }

    #[test]
    fn duplicates_count_once() {
        let gold = [t("1", "1", "a"), t("1", "1", "a")];
        let r = evaluate(&gold, &gold[..1]);
        assert_eq!((r.tp, r.fp, r.fn_), (1, 0, 0));
    }

    #[test]
    fn json_report_keys() {
        let json: serde_json::Value =
            serde_json::from_str(&EvalReport::from_counts(2, 1, 2).to_json()).unwrap();
        for key in ["tp", "fp", "fn", "precision", "recall", "f_measure"] {
            assert!(json.get(key).is_some(), "{key}");
        }
        assert_eq!(json["fn"], 2);
    }

    fn annotation(start: usize, end: usize, code: &str) -> Annotation {
        Annotation {
            start_char: start,
            end_char: end,
            tokens: 0..1,
            matched_tokens: vec![],
            term_label: format!("term {code}"),
            code: code.to_owned(),
            techniques: vec![MatchTechnique::Perfect, MatchTechnique::Levenshtein],
        }
    }

    #[test]
    fn writes_sorted_rows() {
        let line = |doc: &str, line: &str, anns: Vec<Annotation>| LineAnnotations {
            doc_id: doc.into(),
            line_id: line.into(),
            raw_text: "abcdefghij".into(),
            annotations: anns,
        };
        let lines = vec![
            line(
                "10",
                "1",
                vec![annotation(5, 8, "B"), annotation(0, 3, "A")],
            ),
            line("2", "1", vec![annotation(4, 6, "D"), annotation(0, 2, "C")]),
        ];
        let mut out = Vec::new();
        assert_eq!(write_annotations(&lines, &mut out, b';').unwrap(), 4);
        let rows = read_annotations(out.as_slice(), b';').unwrap();
        let codes: Vec<_> = rows.iter().map(|r| r.code.as_str()).collect();
        assert_eq!(codes, ["C", "D", "A", "B"]);
        assert_eq!(rows[0].matched_text, "ab");
        assert_eq!(
            rows[0].techniques,
            [MatchTechnique::Perfect, MatchTechnique::Levenshtein]
        );

        let mut out = Vec::new();
        assert_eq!(write_annotations(&[], &mut out, b';').unwrap(), 0);
        assert_eq!(
            String::from_utf8(out).unwrap().trim_end(),
            ANNOTATION_HEADER.join(";")
        );
    }

    #[test]
    fn comma_delimiter_quotes_techniques() {
        let lines = vec![LineAnnotations {
            doc_id: "1".into(),
            line_id: "1".into(),
            raw_text: "abc".into(),
            annotations: vec![annotation(0, 3, "A")],
        }];
        let mut out = Vec::new();
        write_annotations(&lines, &mut out, b',').unwrap();
        let rows = read_annotations(out.as_slice(), b',').unwrap();
        assert_eq!(rows, annotation_rows(&lines));
    }
}
