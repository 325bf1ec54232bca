#![allow(dead_code)]

use std::collections::HashMap;

use termtrie::{Dictionary, NormalizationConfig, Term};

/// Textbook edit-distance recurrence over prefix lengths, memoized.
pub fn levenshtein_oracle(a: &str, b: &str) -> usize {
    fn go(a: &[char], b: &[char], i: usize, j: usize, memo: &mut [Option<usize>]) -> usize {
        if i == 0 {
            return j;
        }
        if j == 0 {
            return i;
        }
        let slot = i * (b.len() + 1) + j;
        if let Some(d) = memo[slot] {
            return d;
        }
        let cost = usize::from(a[i - 1] != b[j - 1]);
        let d = (go(a, b, i - 1, j, memo) + 1)
            .min(go(a, b, i, j - 1, memo) + 1)
            .min(go(a, b, i - 1, j - 1, memo) + cost);
        memo[slot] = Some(d);
        d
    }
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut memo = vec![None; (a.len() + 1) * (b.len() + 1)];
    go(&a, &b, a.len(), b.len(), &mut memo)
}

/// Greedy leftmost-longest exact window search: at each start, the longest
/// window that is a dictionary term wins; without one, move one token on.
pub fn window_oracle(
    terms: &HashMap<Vec<String>, String>,
    tokens: &[String],
) -> Vec<(usize, usize, String)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let hit = (i + 1..=tokens.len())
            .rev()
            .find_map(|j| terms.get(&tokens[i..j]).map(|code| (j, code.clone())));
        match hit {
            Some((j, code)) => {
                out.push((i, j, code));
                i = j;
            }
            None => i += 1,
        }
    }
    out
}

pub const VOCAB: [&str; 6] = ["alpha", "beta", "gamma", "delta", "epsilon", "zeta"];

/// Builds a dictionary from token lists; later duplicates overwrite earlier
/// ones, as in the trie. Returns the dictionary and the path→code map.
pub fn dictionary_from_paths(paths: &[Vec<String>]) -> (Dictionary, HashMap<Vec<String>, String>) {
    let mut map = HashMap::new();
    let mut terms = Vec::new();
    for (i, path) in paths.iter().enumerate() {
        let code = format!("C{i:03}");
        map.insert(path.clone(), code.clone());
        terms.push(Term::from_tokens(path.clone(), &path.join(" "), &code).unwrap());
    }
    (Dictionary::from_terms(terms).unwrap(), map)
}

pub fn default_norm() -> NormalizationConfig {
    NormalizationConfig::default()
}
