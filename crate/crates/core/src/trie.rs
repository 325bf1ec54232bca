//! Token trie holding dictionary terms.
//!
//! Every term is a path of normalized tokens from the root. Nodes are stored
//! in an arena and addressed by [`NodeId`]; a node carries a [`TermRecord`]
//! when the path leading to it spells a complete term.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::matcher::BigramIndex;
use crate::normalize::{tokenize, NormalizationConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(u32);

impl NodeId {
    pub const ROOT: NodeId = NodeId(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Label and code stored on a terminal node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermRecord {
    pub label: String,
    pub code: String,
}

/// A dictionary entry: the normalized tokens of `label` plus its code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    tokens: Vec<String>,
    label: String,
    code: String,
}

impl Term {
    /// Tokenizes `label` with `cfg`.
    pub fn new(label: &str, code: &str, cfg: &NormalizationConfig) -> Result<Self> {
        let tokens = tokenize(label, cfg).tokens;
        Self::from_tokens(tokens, label, code)
    }

    pub fn from_tokens(tokens: Vec<String>, label: &str, code: &str) -> Result<Self> {
        if tokens.is_empty() || tokens.iter().any(String::is_empty) {
            return Err(Error::EmptyTerm(label.to_owned()));
        }
        if code.trim().is_empty() {
            return Err(Error::EmptyCode(label.to_owned()));
        }
        Ok(Self {
            tokens,
            label: label.to_owned(),
            code: code.trim().to_owned(),
        })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn code(&self) -> &str {
        &self.code
    }

    /// Space-joined token path, the key used by frequency tables.
    pub fn key(&self) -> String {
        self.tokens.join(" ")
    }
}

#[derive(Debug, Clone)]
struct Node {
    token: Option<String>,
    parent: Option<NodeId>,
    depth: usize,
    children: BTreeMap<String, NodeId>,
    terminal: Option<TermRecord>,
}

#[derive(Debug, Clone)]
pub struct DictionaryTrie {
    nodes: Vec<Node>,
    term_count: usize,
}

impl Default for DictionaryTrie {
    fn default() -> Self {
        Self::new()
    }
}

impl DictionaryTrie {
    pub fn new() -> Self {
        Self {
            nodes: vec![Node {
                token: None,
                parent: None,
                depth: 0,
                children: BTreeMap::new(),
                terminal: None,
            }],
            term_count: 0,
        }
    }

    pub fn root(&self) -> NodeId {
        NodeId::ROOT
    }

    /// Inserts `term`, returning the record it replaced if the token path
    /// was already terminal.
    pub fn insert_term(&mut self, term: Term) -> Result<Option<TermRecord>> {
        if term.tokens.is_empty() {
            return Err(Error::EmptyTerm(term.label));
        }
        let mut node = NodeId::ROOT;
        for token in &term.tokens {
            node = match self.nodes[node.index()].children.get(token) {
                Some(&child) => child,
                None => {
                    let child = NodeId(self.nodes.len() as u32);
                    let depth = self.nodes[node.index()].depth + 1;
                    self.nodes.push(Node {
                        token: Some(token.clone()),
                        parent: Some(node),
                        depth,
                        children: BTreeMap::new(),
                        terminal: None,
                    });
                    self.nodes[node.index()]
                        .children
                        .insert(token.clone(), child);
                    child
                }
            };
        }
        let record = TermRecord {
            label: term.label,
            code: term.code,
        };
        let previous = self.nodes[node.index()].terminal.replace(record);
        if previous.is_none() {
            self.term_count += 1;
        }
        Ok(previous)
    }

    /// Child of `node` reached by exactly `token`; never looks deeper.
    pub fn child_lookup(&self, node: NodeId, token: &str) -> Option<NodeId> {
        self.nodes[node.index()].children.get(token).copied()
    }

    /// Edge tokens leaving `node`, in sorted order.
    pub fn children_tokens(&self, node: NodeId) -> impl Iterator<Item = &str> + '_ {
        self.nodes[node.index()].children.keys().map(String::as_str)
    }

    pub fn children(&self, node: NodeId) -> impl Iterator<Item = (&str, NodeId)> + '_ {
        self.nodes[node.index()]
            .children
            .iter()
            .map(|(token, &id)| (token.as_str(), id))
    }

    pub fn terminal(&self, node: NodeId) -> Option<&TermRecord> {
        self.nodes[node.index()].terminal.as_ref()
    }

    pub fn token(&self, node: NodeId) -> Option<&str> {
        self.nodes[node.index()].token.as_deref()
    }

    pub fn parent(&self, node: NodeId) -> Option<NodeId> {
        self.nodes[node.index()].parent
    }

    pub fn depth(&self, node: NodeId) -> usize {
        self.nodes[node.index()].depth
    }

    /// Tokens on the path from the root to `node`.
    pub fn path_tokens(&self, node: NodeId) -> Vec<&str> {
        let mut path = Vec::with_capacity(self.depth(node));
        let mut cursor = node;
        while let Some(parent) = self.parent(cursor) {
            path.push(self.token(cursor).expect("non-root node has a token"));
            cursor = parent;
        }
        path.reverse();
        path
    }

    /// Follows `tokens` from the root by exact lookup.
    pub fn walk<S: AsRef<str>>(&self, tokens: &[S]) -> Option<NodeId> {
        self.walk_from(NodeId::ROOT, tokens)
    }

    pub fn walk_from<S: AsRef<str>>(&self, start: NodeId, tokens: &[S]) -> Option<NodeId> {
        tokens
            .iter()
            .try_fold(start, |node, token| self.child_lookup(node, token.as_ref()))
    }

    pub fn term_count(&self) -> usize {
        self.term_count
    }

    /// Number of nodes including the root.
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    /// Terminal nodes with their records, in insertion order of the nodes.
    pub fn terminals(&self) -> impl Iterator<Item = (NodeId, &TermRecord)> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter_map(|(i, node)| node.terminal.as_ref().map(|t| (NodeId(i as u32), t)))
    }

    /// Number of distinct codes across terminal nodes.
    pub fn code_count(&self) -> usize {
        let codes: std::collections::BTreeSet<&str> =
            self.terminals().map(|(_, t)| t.code.as_str()).collect();
        codes.len()
    }

    /// Stops further insertion and builds the bigram index.
    pub fn freeze(self) -> Dictionary {
        let bigrams = BigramIndex::build(&self);
        Dictionary {
            trie: self,
            bigrams,
        }
    }
}

/// A frozen trie together with its bigram index. Immutable and `Sync`, so
/// one instance can serve any number of annotating threads.
#[derive(Debug, Clone)]
pub struct Dictionary {
    trie: DictionaryTrie,
    bigrams: BigramIndex,
}

impl Dictionary {
    pub fn from_terms<I: IntoIterator<Item = Term>>(terms: I) -> Result<Self> {
        let mut trie = DictionaryTrie::new();
        for term in terms {
            trie.insert_term(term)?;
        }
        Ok(trie.freeze())
    }

    pub fn trie(&self) -> &DictionaryTrie {
        &self.trie
    }

    pub fn bigrams(&self) -> &BigramIndex {
        &self.bigrams
    }

    pub fn term_count(&self) -> usize {
        self.trie.term_count()
    }

    pub fn code_count(&self) -> usize {
        self.trie.code_count()
    }
}
