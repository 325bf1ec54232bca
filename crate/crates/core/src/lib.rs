//! Dictionary-based concept annotation.
//!
//! Terms are normalized, tokenized and stored in a token trie. Input lines
//! go through the same normalization and are walked through the trie with
//! exact, abbreviation, and edit-distance matching per token; the longest
//! term reached from each start position is reported with its code.
//!
//! ```
//! use termtrie::{
//!     annotate_line, AbbreviationTable, Dictionary, MatchConfig, NormalizationConfig, Term,
//! };
//!
//! let norm = NormalizationConfig::default();
//! let dict = Dictionary::from_terms([
//!     Term::new("insuffisance cardiaque aigue", "I509", &norm).unwrap(),
//! ])
//! .unwrap();
//! let abbrevs = AbbreviationTable::parse("ins=insuffisance", &norm).unwrap();
//!
//! let found = annotate_line("INS CARDIAQU AIGUE", &dict, &norm, &abbrevs, MatchConfig::default());
//! assert_eq!(found[0].code, "I509");
//! ```

pub mod annotator;
pub mod cli;
pub mod coder;
pub mod corpus;
mod error;
pub mod matcher;
pub mod normalize;
pub mod trie;

pub use annotator::{annotate_line, Annotation, Annotator, MatchState, TerminalHit};
pub use coder::{
    assemble_dictionary, build_dictionary_from_corpus, resolve_code, BuildReport,
    CodeFrequencyTable, DictionaryMode, DictionarySpec,
};
pub use corpus::{evaluate, CodeTuple, CorpusFormat, CorpusRecord, EvalReport, TermListFormat};
pub use error::{Error, Result};
pub use matcher::{
    build_bigram_index, expand_abbreviation, levenshtein_distance, match_token, AbbreviationTable,
    BigramIndex, MatchConfig, MatchTechnique, TokenMatch,
};
pub use normalize::{is_stopword, normalize_text, tokenize, NormalizationConfig, TokenizedText};
pub use trie::{Dictionary, DictionaryTrie, NodeId, Term, TermRecord};
