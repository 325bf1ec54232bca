//! Per-token matching against the children of a trie position.
//!
//! Four techniques are tried for each input token: exact lookup, expansion
//! through an abbreviation table, bounded edit distance against child
//! tokens, and bounded edit distance against the concatenation of a child
//! and grandchild token (composed words such as "meningoencephalite").

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::normalize::{normalize_text, tokenize, NormalizationConfig};
use crate::trie::{Dictionary, DictionaryTrie, NodeId};

const DEFAULT_ABBREVIATIONS: &str = include_str!("../data/abbreviations.txt");

/// How one input token was matched. Variants are ordered by priority,
/// `Perfect` first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MatchTechnique {
    Perfect,
    Abbreviation,
    Levenshtein,
    BigramLevenshtein,
}

impl MatchTechnique {
    /// Lower is better.
    pub fn priority(self) -> u32 {
        match self {
            MatchTechnique::Perfect => 0,
            MatchTechnique::Abbreviation => 1,
            MatchTechnique::Levenshtein => 2,
            MatchTechnique::BigramLevenshtein => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MatchTechnique::Perfect => "perfect",
            MatchTechnique::Abbreviation => "abbreviation",
            MatchTechnique::Levenshtein => "levenshtein",
            MatchTechnique::BigramLevenshtein => "bigram_levenshtein",
        }
    }
}

impl fmt::Display for MatchTechnique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MatchTechnique {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "perfect" => Ok(MatchTechnique::Perfect),
            "abbreviation" => Ok(MatchTechnique::Abbreviation),
            "levenshtein" => Ok(MatchTechnique::Levenshtein),
            "bigram_levenshtein" => Ok(MatchTechnique::BigramLevenshtein),
            other => Err(Error::UnknownTechnique(other.to_owned())),
        }
    }
}

/// Fuzzy matching knobs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchConfig {
    /// Maximum edit distance. `0` disables both fuzzy techniques.
    pub max_dist: usize,
    /// Input tokens shorter than this (in characters) are never matched
    /// fuzzily.
    pub fuzzy_min_len: usize,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            max_dist: 1,
            fuzzy_min_len: 5,
        }
    }
}

impl MatchConfig {
    pub fn exact() -> Self {
        Self {
            max_dist: 0,
            ..Self::default()
        }
    }
}

/// Levenshtein distance over Unicode scalar values.
pub fn levenshtein_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Distance between `a` and `b` if it is at most `max`, computed on a
/// diagonal band with early exit.
pub fn levenshtein_within(a: &[char], b: &[char], max: usize) -> Option<usize> {
    if a.len().abs_diff(b.len()) > max {
        return None;
    }
    const FAR: usize = usize::MAX / 2;
    let mut prev: Vec<usize> = (0..=b.len())
        .map(|j| if j <= max { j } else { FAR })
        .collect();
    let mut cur = vec![FAR; b.len() + 1];
    for i in 1..=a.len() {
        let lo = i.saturating_sub(max).max(1);
        let hi = (i + max).min(b.len());
        cur.fill(FAR);
        cur[0] = if i <= max { i } else { FAR };
        let mut row_min = cur[0];
        for j in lo..=hi {
            let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            let v = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
            cur[j] = v;
            row_min = row_min.min(v);
        }
        if row_min > max {
            return None;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let d = prev[b.len()];
    (d <= max).then_some(d)
}

/// Abbreviation → expansions. Keys and expansion tokens are normalized.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AbbreviationTable {
    entries: BTreeMap<String, Vec<Vec<String>>>,
}

impl AbbreviationTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// The nine shipped entries, normalized with `cfg`.
    pub fn default_for(cfg: &NormalizationConfig) -> Self {
        Self::parse(DEFAULT_ABBREVIATIONS, cfg).expect("shipped abbreviation file is valid")
    }

    /// Parses `abbrev=expansion words` lines; `#` comments and blank lines
    /// are skipped. An abbreviation may appear on several lines.
    pub fn parse(text: &str, cfg: &NormalizationConfig) -> Result<Self> {
        let mut table = Self::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (abbrev, expansion) = line.split_once('=').ok_or_else(|| Error::Abbreviation {
                line: i + 1,
                message: "expected `abbreviation=expansion`".into(),
            })?;
            table
                .insert(abbrev, expansion, cfg)
                .map_err(|message| Error::Abbreviation {
                    line: i + 1,
                    message,
                })?;
        }
        Ok(table)
    }

    pub fn from_file(path: impl AsRef<Path>, cfg: &NormalizationConfig) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, cfg)
    }

    pub fn insert(
        &mut self,
        abbrev: &str,
        expansion: &str,
        cfg: &NormalizationConfig,
    ) -> std::result::Result<(), String> {
        let key = normalize_text(abbrev);
        let key = match key.split_whitespace().collect::<Vec<_>>().as_slice() {
            [single] => (*single).to_owned(),
            _ => return Err(format!("abbreviation `{abbrev}` must be a single token")),
        };
        let tokens = tokenize(expansion, cfg).tokens;
        if tokens.is_empty() {
            return Err(format!("expansion of `{abbrev}` is empty"));
        }
        if tokens.len() == 1 && tokens[0] == key {
            return Err(format!("`{abbrev}` expands to itself"));
        }
        let expansions = self.entries.entry(key).or_default();
        if !expansions.contains(&tokens) {
            expansions.push(tokens);
        }
        Ok(())
    }

    pub fn expand(&self, token: &str) -> &[Vec<String>] {
        self.entries.get(token).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[Vec<String>])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }
}

pub fn expand_abbreviation<'a>(token: &str, abbrevs: &'a AbbreviationTable) -> &'a [Vec<String>] {
    abbrevs.expand(token)
}

/// A child/grandchild edge pair usable for composed-word matching.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BigramEdge {
    pub concat: Vec<char>,
    pub first: NodeId,
    pub second: NodeId,
}

/// Consecutive token pairs of the dictionary.
///
/// `by_concat` maps the concatenated pair to the token pairs producing it;
/// `by_parent` lists, for each node, the pairs starting at one of its
/// children, which is what the matcher scans.
#[derive(Debug, Clone, Default)]
pub struct BigramIndex {
    by_concat: BTreeMap<String, Vec<(String, String)>>,
    by_parent: HashMap<NodeId, Vec<BigramEdge>>,
}

impl BigramIndex {
    pub fn build(trie: &DictionaryTrie) -> Self {
        let mut index = Self::default();
        for parent in trie.node_ids() {
            let mut edges = Vec::new();
            for (t1, first) in trie.children(parent) {
                for (t2, second) in trie.children(first) {
                    let concat = format!("{t1}{t2}");
                    let pairs = index.by_concat.entry(concat.clone()).or_default();
                    let pair = (t1.to_owned(), t2.to_owned());
                    if !pairs.contains(&pair) {
                        pairs.push(pair);
                    }
                    edges.push(BigramEdge {
                        concat: concat.chars().collect(),
                        first,
                        second,
                    });
                }
            }
            if !edges.is_empty() {
                index.by_parent.insert(parent, edges);
            }
        }
        for pairs in index.by_concat.values_mut() {
            pairs.sort();
        }
        index
    }

    pub fn lookup(&self, concat: &str) -> &[(String, String)] {
        self.by_concat.get(concat).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn edges_from(&self, node: NodeId) -> &[BigramEdge] {
        self.by_parent.get(&node).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn contains(&self, first: &str, second: &str) -> bool {
        self.lookup(&format!("{first}{second}"))
            .iter()
            .any(|(a, b)| a == first && b == second)
    }

    /// All distinct token pairs, ordered by concatenation.
    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.by_concat
            .values()
            .flatten()
            .map(|(a, b)| (a.as_str(), b.as_str()))
    }

    pub fn len(&self) -> usize {
        self.by_concat.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.by_concat.is_empty()
    }
}

pub fn build_bigram_index(trie: &DictionaryTrie) -> BigramIndex {
    BigramIndex::build(trie)
}

/// One way an input token advances the trie.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenMatch {
    pub technique: MatchTechnique,
    /// Number of trie edges advanced: 2 for composed words, the expansion
    /// length for abbreviations, 1 otherwise.
    pub consumed_dict_tokens: usize,
    pub target: NodeId,
}

/// Every way `input` can advance from `node`, one match per target node
/// (the highest-priority technique wins), ordered by priority then node.
pub fn match_token(
    input: &str,
    node: NodeId,
    dict: &Dictionary,
    abbrevs: &AbbreviationTable,
    cfg: &MatchConfig,
) -> Vec<TokenMatch> {
    let trie = dict.trie();
    let mut found: BTreeMap<NodeId, TokenMatch> = BTreeMap::new();
    let mut offer = |m: TokenMatch| match found.get(&m.target) {
        Some(existing) if existing.technique <= m.technique => {}
        _ => {
            found.insert(m.target, m);
        }
    };

    if let Some(target) = trie.child_lookup(node, input) {
        offer(TokenMatch {
            technique: MatchTechnique::Perfect,
            consumed_dict_tokens: 1,
            target,
        });
    }

    for expansion in abbrevs.expand(input) {
        if let Some(target) = trie.walk_from(node, expansion) {
            offer(TokenMatch {
                technique: MatchTechnique::Abbreviation,
                consumed_dict_tokens: expansion.len(),
                target,
            });
        }
    }

    let chars: Vec<char> = input.chars().collect();
    if cfg.max_dist > 0 && chars.len() >= cfg.fuzzy_min_len {
        let mut candidate = Vec::new();
        for (token, target) in trie.children(node) {
            candidate.clear();
            candidate.extend(token.chars());
            if levenshtein_within(&chars, &candidate, cfg.max_dist).is_some() {
                offer(TokenMatch {
                    technique: MatchTechnique::Levenshtein,
                    consumed_dict_tokens: 1,
                    target,
                });
            }
        }
        for edge in dict.bigrams().edges_from(node) {
            if levenshtein_within(&chars, &edge.concat, cfg.max_dist).is_some() {
                offer(TokenMatch {
                    technique: MatchTechnique::BigramLevenshtein,
                    consumed_dict_tokens: 2,
                    target: edge.second,
                });
            }
        }
    }

    let mut matches: Vec<TokenMatch> = found.into_values().collect();
    matches.sort_by_key(|m| (m.technique, m.target));
    matches
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trie::tests::figure_one;
    use crate::trie::Term;

    fn dict(terms: &[(&str, &str)]) -> Dictionary {
        let cfg = NormalizationConfig::default();
        Dictionary::from_terms(terms.iter().map(|(l, c)| Term::new(l, c, &cfg).unwrap())).unwrap()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(levenshtein_distance("cardiaqu", "cardiaque"), 1);
        assert_eq!(levenshtein_distance("x", "x"), 0);
        assert_eq!(
            levenshtein_distance("meningoencephalite", "meningoencephalite"),
            0
        );
        assert_eq!(
            levenshtein_distance("meningoencephalite", "meningo encephalite"),
            1
        );
        assert_eq!(levenshtein_distance("", "abc"), 3);
        assert_eq!(levenshtein_distance("kitten", "sitting"), 3);
        assert_eq!(levenshtein_distance("œdème", "oedeme"), 3);
    }

    #[test]
    fn banded_distance_agrees() {
        let words = [
            "",
            "a",
            "ab",
            "abc",
            "cardiaque",
            "cardiaqu",
            "cardiaques",
            "kitten",
            "sitting",
        ];
        for a in words {
            for b in words {
                let full = levenshtein_distance(a, b);
                let ac: Vec<char> = a.chars().collect();
                let bc: Vec<char> = b.chars().collect();
                for max in 0..5 {
                    let banded = levenshtein_within(&ac, &bc, max);
                    assert_eq!(banded, (full <= max).then_some(full), "{a} {b} {max}");
                }
            }
        }
    }

    #[test]
    fn abbreviation_parsing() {
        let cfg = NormalizationConfig::default();
        let table = AbbreviationTable::default_for(&cfg);
        assert_eq!(table.len(), 9);
        assert_eq!(table.expand("ins"), [vec!["insuffisance".to_owned()]]);
        assert_eq!(
            table.expand("avc"),
            [vec![
                "accident".to_owned(),
                "vasculaire".to_owned(),
                "cerebral".to_owned()
            ]]
        );
        assert_eq!(
            table.expand("idm"),
            [vec!["infarctus".to_owned(), "myocarde".to_owned()]]
        );
        assert!(table.expand("cardiaque").is_empty());

        assert!(AbbreviationTable::parse("ins insuffisance", &cfg).is_err());
        assert!(AbbreviationTable::parse("avc=AVC", &cfg).is_err());
        assert!(AbbreviationTable::parse("a b=x", &cfg).is_err());
        let t = AbbreviationTable::parse("# c\n\nIC=insuffisance cardiaque\nic=ictere\n", &cfg)
            .unwrap();
        assert_eq!(t.expand("ic").len(), 2);
    }

    #[test]
    fn bigram_index_of_figure_one() {
        let trie = figure_one();
        let index = build_bigram_index(&trie);
        let pairs: Vec<_> = index.pairs().collect();
        assert_eq!(pairs.len(), 5);
        for (a, b) in [
            ("insuffisance", "cardiaque"),
            ("cardiaque", "aigue"),
            ("cardiaque", "congestive"),
            ("insuffisance", "respiratoire"),
            ("respiratoire", "aigue"),
        ] {
            assert!(index.contains(a, b), "{a} {b}");
        }
        assert!(build_bigram_index(&DictionaryTrie::new()).is_empty());
        assert!(dict(&[("asthme", "J459")]).bigrams().is_empty());
    }

    #[test]
    fn abbreviation_match() {
        let d = dict(&[("insuffisance cardiaque", "I509")]);
        let abbrevs =
            AbbreviationTable::parse("ins=insuffisance", &NormalizationConfig::default()).unwrap();
        let m = match_token(
            "ins",
            d.trie().root(),
            &d,
            &abbrevs,
            &MatchConfig::default(),
        );
        assert_eq!(
            m,
            [TokenMatch {
                technique: MatchTechnique::Abbreviation,
                consumed_dict_tokens: 1,
                target: d.trie().walk(&["insuffisance"]).unwrap(),
            }]
        );
    }

    #[test]
    fn multi_token_abbreviation() {
        let d = dict(&[("accident vasculaire cerebral", "I64")]);
        let abbrevs = AbbreviationTable::default_for(&NormalizationConfig::default());
        let m = match_token(
            "avc",
            d.trie().root(),
            &d,
            &abbrevs,
            &MatchConfig::default(),
        );
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].consumed_dict_tokens, 3);
        assert_eq!(d.trie().terminal(m[0].target).unwrap().code, "I64");
    }

    #[test]
    fn composed_word_matches_two_paths() {
        let d = dict(&[
            ("meningoencephalite", "G049"),
            ("meningo encephalite virale", "A86"),
        ]);
        let m = match_token(
            "meningoencephalite",
            d.trie().root(),
            &d,
            &AbbreviationTable::new(),
            &MatchConfig::default(),
        );
        let techniques: Vec<_> = m.iter().map(|m| m.technique).collect();
        assert_eq!(
            techniques,
            [MatchTechnique::Perfect, MatchTechnique::BigramLevenshtein]
        );
        assert_eq!(
            m[1].target,
            d.trie().walk(&["meningo", "encephalite"]).unwrap()
        );
        assert_eq!(m[1].consumed_dict_tokens, 2);
    }

    #[test]
    fn short_tokens_are_not_fuzzy() {
        let d = dict(&[("avc", "I640"), ("asthme", "J459")]);
        let none = AbbreviationTable::new();
        let cfg = MatchConfig::default();
        assert!(match_token("avk", d.trie().root(), &d, &none, &cfg).is_empty());
        assert!(match_token("zzz", d.trie().root(), &d, &none, &cfg).is_empty());
        let m = match_token("astme", d.trie().root(), &d, &none, &cfg);
        assert_eq!(m[0].technique, MatchTechnique::Levenshtein);
    }

    #[test]
    fn exact_config_disables_fuzzy() {
        let d = dict(&[("meningo encephalite", "A86"), ("cardiaque", "I51")]);
        let none = AbbreviationTable::new();
        let root = d.trie().root();
        assert!(
            match_token("meningoencephalite", root, &d, &none, &MatchConfig::exact()).is_empty()
        );
        assert!(match_token("cardiaqu", root, &d, &none, &MatchConfig::exact()).is_empty());
    }

    #[test]
    fn duplicate_targets_keep_best_technique() {
        let d = dict(&[("cardiaque", "I51")]);
        let abbrevs =
            AbbreviationTable::parse("cardiaqe=cardiaque", &NormalizationConfig::default())
                .unwrap();
        let m = match_token(
            "cardiaqe",
            d.trie().root(),
            &d,
            &abbrevs,
            &MatchConfig::default(),
        );
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].technique, MatchTechnique::Abbreviation);
    }

    #[test]
    fn technique_names_round_trip() {
        for t in [
            MatchTechnique::Perfect,
            MatchTechnique::Abbreviation,
            MatchTechnique::Levenshtein,
            MatchTechnique::BigramLevenshtein,
        ] {
            assert_eq!(t.as_str().parse::<MatchTechnique>().unwrap(), t);
        }
        assert!("fuzzy".parse::<MatchTechnique>().is_err());
    }
}
