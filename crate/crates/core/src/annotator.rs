//! Trie traversal over a tokenized line.
//!
//! Each input token advances every live [`MatchState`] through
//! [`match_token`]; a state forks once per match, so composed words and
//! fuzzy matches can explore several paths at once. A fresh root state is
//! started at every token not covered by a committed annotation. States
//! sharing a start token form a group; once no state of the leftmost group
//! is alive, its longest terminal is committed and scanning continues after
//! it. A group that passed no terminal commits nothing.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::ops::Range;

use crate::matcher::{match_token, AbbreviationTable, MatchConfig, MatchTechnique};
use crate::normalize::{tokenize, NormalizationConfig, TokenizedText};
use crate::trie::{Dictionary, NodeId};

/// The deepest terminal a state has passed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TerminalHit {
    /// Exclusive input-token index.
    pub end: usize,
    pub node: NodeId,
    pub techniques: Vec<MatchTechnique>,
}

/// A live traversal position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchState {
    pub node: NodeId,
    pub start: usize,
    pub techniques: Vec<MatchTechnique>,
    pub last_terminal: Option<TerminalHit>,
}

impl MatchState {
    pub fn root(dict: &Dictionary, start: usize) -> Self {
        Self {
            node: dict.trie().root(),
            start,
            techniques: Vec::new(),
            last_terminal: None,
        }
    }

    fn priority_sum(&self) -> u32 {
        self.techniques.iter().map(|t| t.priority()).sum()
    }
}

/// Result of advancing a set of states by one token.
#[derive(Debug, Clone, Default)]
pub struct Advance {
    pub alive: Vec<MatchState>,
    /// States that found no match but had passed a terminal.
    pub finished: Vec<MatchState>,
}

/// A detected term occurrence in a line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    /// Byte offsets into the raw line, on character boundaries.
    pub start_char: usize,
    pub end_char: usize,
    pub tokens: Range<usize>,
    pub matched_tokens: Vec<String>,
    pub term_label: String,
    pub code: String,
    pub techniques: Vec<MatchTechnique>,
}

/// Shared inputs of the traversal, borrowed for the duration of a call.
#[derive(Debug, Clone, Copy)]
pub struct Annotator<'a> {
    pub dict: &'a Dictionary,
    pub norm: &'a NormalizationConfig,
    pub abbrevs: &'a AbbreviationTable,
    pub matching: MatchConfig,
}

impl<'a> Annotator<'a> {
    pub fn new(
        dict: &'a Dictionary,
        norm: &'a NormalizationConfig,
        abbrevs: &'a AbbreviationTable,
        matching: MatchConfig,
    ) -> Self {
        Self {
            dict,
            norm,
            abbrevs,
            matching,
        }
    }

    pub fn annotate_line(&self, raw: &str) -> Vec<Annotation> {
        let text = tokenize(raw, self.norm);
        self.annotate_tokenized(&text)
    }

    pub fn annotate_tokenized(&self, text: &TokenizedText) -> Vec<Annotation> {
        self.annotate_tokens(&text.tokens)
            .into_iter()
            .map(|(start, hit)| {
                let record = self
                    .dict
                    .trie()
                    .terminal(hit.node)
                    .expect("hits are recorded on terminal nodes");
                let span = text.span(start..hit.end);
                Annotation {
                    start_char: span.start,
                    end_char: span.end,
                    tokens: start..hit.end,
                    matched_tokens: text.tokens[start..hit.end].to_vec(),
                    term_label: record.label.clone(),
                    code: record.code.clone(),
                    techniques: hit.techniques,
                }
            })
            .collect()
    }

    /// Committed `(start token, hit)` pairs over normalized tokens.
    pub fn annotate_tokens<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<(usize, TerminalHit)> {
        let mut committed = Vec::new();
        let mut live: Vec<MatchState> = Vec::new();
        let mut groups: BTreeMap<usize, Vec<TerminalHit>> = BTreeMap::new();
        let mut covered_until = 0;

        for (index, token) in tokens.iter().enumerate() {
            let spawn = index >= covered_until;
            if spawn {
                groups.entry(index).or_default();
            }
            let step = self.advance_states(std::mem::take(&mut live), token.as_ref(), index, spawn);
            for state in step.finished {
                let hit = state.last_terminal.expect("finished states carry a hit");
                groups.entry(state.start).or_default().push(hit);
            }
            live = step.alive;
            self.resolve(&mut groups, &mut live, &mut covered_until, &mut committed);
        }

        for state in live.drain(..) {
            if let Some(hit) = state.last_terminal {
                groups.entry(state.start).or_default().push(hit);
            }
        }
        self.resolve(&mut groups, &mut live, &mut covered_until, &mut committed);
        committed
    }

    /// Commits leftmost groups that have no live state left.
    fn resolve(
        &self,
        groups: &mut BTreeMap<usize, Vec<TerminalHit>>,
        live: &mut Vec<MatchState>,
        covered_until: &mut usize,
        committed: &mut Vec<(usize, TerminalHit)>,
    ) {
        while let Some((&start, _)) = groups.first_key_value() {
            if live.iter().any(|s| s.start == start) {
                break;
            }
            let hits = groups.remove(&start).unwrap_or_default();
            let Some(best) = self.best_hit(hits.iter()) else {
                continue;
            };
            let end = best.end;
            committed.push((start, best.clone()));
            *covered_until = end;
            groups.retain(|&s, _| s >= end);
            live.retain(|s| s.start >= end);
        }
    }

    /// Forks every state once per token match; states without a match die.
    /// With `spawn_fresh`, a root state anchored at `index` is tried too.
    pub fn advance_states(
        &self,
        states: Vec<MatchState>,
        token: &str,
        index: usize,
        spawn_fresh: bool,
    ) -> Advance {
        let mut states = states;
        if spawn_fresh {
            states.push(MatchState::root(self.dict, index));
        }
        let trie = self.dict.trie();
        let mut alive: BTreeMap<(usize, NodeId), MatchState> = BTreeMap::new();
        let mut finished = Vec::new();

        for state in states {
            let matches = match_token(token, state.node, self.dict, self.abbrevs, &self.matching);
            if matches.is_empty() {
                if state.last_terminal.is_some() {
                    finished.push(state);
                }
                continue;
            }
            for m in matches {
                let mut techniques = state.techniques.clone();
                techniques.push(m.technique);
                let last_terminal = match trie.terminal(m.target) {
                    Some(_) => Some(TerminalHit {
                        end: index + 1,
                        node: m.target,
                        techniques: techniques.clone(),
                    }),
                    None => state.last_terminal.clone(),
                };
                let next = MatchState {
                    node: m.target,
                    start: state.start,
                    techniques,
                    last_terminal,
                };
                // Paths converging on the same node from the same start share
                // every future extension; keep the cheaper trail.
                match alive.get_mut(&(next.start, next.node)) {
                    None => {
                        alive.insert((next.start, next.node), next);
                    }
                    Some(existing) => self.merge_states(existing, next),
                }
            }
        }

        Advance {
            alive: alive.into_values().collect(),
            finished,
        }
    }

    fn merge_states(&self, existing: &mut MatchState, other: MatchState) {
        let other_better = (other.priority_sum(), &other.techniques)
            < (existing.priority_sum(), &existing.techniques);
        let best_hit = match (existing.last_terminal.take(), other.last_terminal.clone()) {
            (Some(a), Some(b)) => {
                if self.compare_hits(&b, &a) == Ordering::Less {
                    Some(b)
                } else {
                    Some(a)
                }
            }
            (a, b) => a.or(b),
        };
        if other_better {
            *existing = other;
        }
        existing.last_terminal = best_hit;
    }

    /// `Less` means `a` is preferred: more tokens, then lower technique
    /// priority sum, then smaller label.
    fn compare_hits(&self, a: &TerminalHit, b: &TerminalHit) -> Ordering {
        let label = |h: &TerminalHit| {
            self.dict
                .trie()
                .terminal(h.node)
                .map(|t| t.label.as_str())
                .unwrap_or("")
        };
        let cost = |h: &TerminalHit| h.techniques.iter().map(|t| t.priority()).sum::<u32>();
        b.end
            .cmp(&a.end)
            .then_with(|| cost(a).cmp(&cost(b)))
            .then_with(|| label(a).cmp(label(b)))
            .then_with(|| a.techniques.cmp(&b.techniques))
            .then_with(|| a.node.cmp(&b.node))
    }

    fn best_hit<'h>(&self, hits: impl Iterator<Item = &'h TerminalHit>) -> Option<&'h TerminalHit> {
        hits.min_by(|a, b| self.compare_hits(a, b))
    }

    /// The longest terminal passed by any of `states`, which must share a
    /// start token.
    pub fn select_longest(&self, states: &[MatchState]) -> Option<TerminalHit> {
        debug_assert!(states.windows(2).all(|w| w[0].start == w[1].start));
        self.best_hit(states.iter().filter_map(|s| s.last_terminal.as_ref()))
            .cloned()
    }
}

pub fn annotate_line(
    raw: &str,
    dict: &Dictionary,
    norm: &NormalizationConfig,
    abbrevs: &AbbreviationTable,
    matching: MatchConfig,
) -> Vec<Annotation> {
    Annotator::new(dict, norm, abbrevs, matching).annotate_line(raw)
}
