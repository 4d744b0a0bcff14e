//! Linguistic difficulty features: Yngve syntactic-complexity scores from
//! bracketed parse trees, average log word frequency, and average senses
//! per word.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Penn-style parse tree: internal nodes carry category labels, leaves
/// carry words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseTree {
    Internal { label: String, children: Vec<ParseTree> },
    Leaf { word: String },
}

impl ParseTree {
    /// Leaf words in sentence order.
    pub fn leaves(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            ParseTree::Leaf { word } => out.push(word),
            ParseTree::Internal { children, .. } => {
                for c in children {
                    c.collect_leaves(out);
                }
            }
        }
    }

    /// Single-line bracketed form; parsing it back yields an equal tree.
    pub fn to_bracketed(&self) -> String {
        match self {
            ParseTree::Leaf { word } => word.clone(),
            ParseTree::Internal { label, children } => {
                let inner: Vec<String> = children.iter().map(|c| c.to_bracketed()).collect();
                format!("({} {})", label, inner.join(" "))
            }
        }
    }
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn token(&mut self) -> Result<&'a str> {
        let start = self.pos;
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b == b'(' || b == b')' || b.is_ascii_whitespace() {
                break;
            }
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.error("expected a token"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .map_err(|_| self.error("invalid UTF-8 in token"))
    }

    fn node(&mut self) -> Result<ParseTree> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                let open = self.pos;
                self.pos += 1;
                self.skip_ws();
                // a label is any bare token before the children; a PTB-style
                // unlabeled wrapper `( (S ...))` gets an empty label
                let label = match self.peek() {
                    Some(b'(') => String::new(),
                    Some(b')') => {
                        self.pos = open;
                        return Err(self.error("empty node"));
                    }
                    Some(_) => self.token()?.to_string(),
                    None => return Err(self.error("unbalanced parentheses: unexpected end of input")),
                };
                let mut children = Vec::new();
                loop {
                    self.skip_ws();
                    match self.peek() {
                        Some(b')') => {
                            self.pos += 1;
                            break;
                        }
                        Some(b'(') => children.push(self.node()?),
                        Some(_) => {
                            let word = self.token()?.to_string();
                            children.push(ParseTree::Leaf { word });
                        }
                        None => {
                            return Err(
                                self.error("unbalanced parentheses: unexpected end of input")
                            )
                        }
                    }
                }
                if children.is_empty() {
                    self.pos = open;
                    return Err(self.error("empty node"));
                }
                Ok(ParseTree::Internal { label, children })
            }
            Some(b')') => Err(self.error("unbalanced parentheses: unexpected `)`")),
            _ => Err(self.error("expected `(`")),
        }
    }
}

/// Parse one bracketed tree, e.g. `(S (NP (DT the) (NN dog)) (VP (VBD ran)))`.
pub fn parse_bracketed(text: &str) -> Result<ParseTree> {
    let mut parser = Parser {
        bytes: text.as_bytes(),
        pos: 0,
    };
    parser.skip_ws();
    let tree = parser.node()?;
    parser.skip_ws();
    if parser.pos != parser.bytes.len() {
        return Err(parser.error("trailing input after tree"));
    }
    if tree.leaves().is_empty() {
        return Err(Error::Parse {
            offset: 0,
            message: "leaf-less tree".into(),
        });
    }
    Ok(tree)
}

/// Per-leaf Yngve depths: each node's children score k−1, k−2, …, 0 from
/// left to right, and a leaf's depth is the sum of scores on its
/// root-to-leaf path.
pub fn yngve_depths(tree: &ParseTree) -> Vec<f64> {
    let mut out = Vec::new();
    walk(tree, 0.0, &mut out);
    out
}

fn walk(node: &ParseTree, path_score: f64, out: &mut Vec<f64>) {
    match node {
        ParseTree::Leaf { .. } => out.push(path_score),
        ParseTree::Internal { children, .. } => {
            let k = children.len();
            for (idx, child) in children.iter().enumerate() {
                walk(child, path_score + (k - 1 - idx) as f64, out);
            }
        }
    }
}

/// Mean Yngve depth over the leaves (the per-sentence score).
pub fn yngve_sentence_score(tree: &ParseTree) -> f64 {
    let depths = yngve_depths(tree);
    depths.iter().sum::<f64>() / depths.len() as f64
}

/// Word → value table (corpus counts or sense counts) with an explicit
/// out-of-vocabulary default. Lookup tries the exact form first, then the
/// lowercased form when case folding is on.
#[derive(Debug, Clone)]
pub struct Lexicon {
    map: HashMap<String, f64>,
    pub case_fold: bool,
    pub oov_default: f64,
}

impl Lexicon {
    /// Frequency lexicon: OOV words count 0.
    pub fn frequency(map: HashMap<String, f64>) -> Result<Self> {
        Self::new(map, true, 0.0)
    }

    /// Sense-count lexicon: every word has at least one sense.
    pub fn senses(map: HashMap<String, f64>) -> Result<Self> {
        Self::new(map, true, 1.0)
    }

    pub fn new(map: HashMap<String, f64>, case_fold: bool, oov_default: f64) -> Result<Self> {
        if map.values().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(Error::Invalid("lexicon values must be finite and >= 0".into()));
        }
        if !oov_default.is_finite() || oov_default < 0.0 {
            return Err(Error::Invalid("OOV default must be finite and >= 0".into()));
        }
        Ok(Lexicon {
            map,
            case_fold,
            oov_default,
        })
    }

    pub fn lookup(&self, word: &str) -> f64 {
        if let Some(&v) = self.map.get(word) {
            return v;
        }
        if self.case_fold {
            if let Some(&v) = self.map.get(&word.to_lowercase()) {
                return v;
            }
        }
        self.oov_default
    }
}

/// Mean over words of ln(count + 1).
pub fn avg_log_frequency(words: &[&str], lexicon: &Lexicon) -> Result<f64> {
    if words.is_empty() {
        return Err(Error::EmptySentence);
    }
    let sum: f64 = words.iter().map(|w| (lexicon.lookup(w) + 1.0).ln()).sum();
    Ok(sum / words.len() as f64)
}

/// Mean sense count per word.
pub fn avg_senses(words: &[&str], lexicon: &Lexicon) -> Result<f64> {
    if words.is_empty() {
        return Err(Error::EmptySentence);
    }
    let sum: f64 = words.iter().map(|w| lexicon.lookup(w)).sum();
    Ok(sum / words.len() as f64)
}

/// True for tokens made entirely of ASCII punctuation, for the optional
/// punctuation-stripping mode.
pub fn is_punctuation(word: &str) -> bool {
    !word.is_empty() && word.chars().all(|c| c.is_ascii_punctuation())
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOG: &str = "(S (NP (DT the) (NN dog)) (VP (VBD ran)))";

    #[test]
    fn parse_single_leaf() {
        let tree = parse_bracketed("(X w)").unwrap();
        assert_eq!(
            tree,
            ParseTree::Internal {
                label: "X".into(),
                children: vec![ParseTree::Leaf { word: "w".into() }],
            }
        );
    }

    #[test]
    fn parse_dog_sentence() {
        let tree = parse_bracketed(DOG).unwrap();
        assert_eq!(tree.leaves(), vec!["the", "dog", "ran"]);
    }

    #[test]
    fn parse_is_whitespace_insensitive() {
        let spaced = "( S  ( NP ( DT the )\t( NN dog ) ) ( VP ( VBD ran ) ) )";
        assert_eq!(parse_bracketed(DOG).unwrap(), parse_bracketed(spaced).unwrap());
    }

    #[test]
    fn parse_truncated_reports_offset() {
        let text = "(S (NP (DT the)";
        match parse_bracketed(text).unwrap_err() {
            Error::Parse { offset, message } => {
                assert_eq!(offset, text.len());
                assert!(message.contains("unbalanced"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn parse_empty_node_errors() {
        assert!(matches!(parse_bracketed("()"), Err(Error::Parse { .. })));
        assert!(matches!(parse_bracketed("(X)"), Err(Error::Parse { .. })));
        assert!(matches!(parse_bracketed("(S (NP))"), Err(Error::Parse { .. })));
    }

    #[test]
    fn parse_unlabeled_wrapper() {
        let tree = parse_bracketed("( (S (X a) (Y b)) )").unwrap();
        assert_eq!(tree.leaves(), vec!["a", "b"]);
    }

    #[test]
    fn roundtrip_through_bracketed_form() {
        let tree = parse_bracketed(DOG).unwrap();
        assert_eq!(parse_bracketed(&tree.to_bracketed()).unwrap(), tree);
    }

    #[test]
    fn yngve_flat_tree() {
        let n = 5;
        let children: Vec<ParseTree> = (0..n)
            .map(|i| ParseTree::Leaf { word: format!("w{i}") })
            .collect();
        let tree = ParseTree::Internal { label: "S".into(), children };
        assert_eq!(yngve_depths(&tree), vec![4.0, 3.0, 2.0, 1.0, 0.0]);
        assert_eq!(yngve_sentence_score(&tree), 2.0);
    }

    #[test]
    fn yngve_dog_sentence_hand_trace() {
        let tree = parse_bracketed(DOG).unwrap();
        assert_eq!(yngve_depths(&tree), vec![2.0, 1.0, 0.0]);
        assert_eq!(yngve_sentence_score(&tree), 1.0);
    }

    #[test]
    fn yngve_right_spine_last_word_zero() {
        let tree = parse_bracketed("(A (B x) (C (D y) (E (F z) (G w))))").unwrap();
        let depths = yngve_depths(&tree);
        assert_eq!(*depths.last().unwrap(), 0.0);
    }

    #[test]
    fn yngve_single_leaf_scores_zero() {
        let tree = parse_bracketed("(X w)").unwrap();
        assert_eq!(yngve_sentence_score(&tree), 0.0);
    }

    #[test]
    fn yngve_label_invariant() {
        let a = parse_bracketed(DOG).unwrap();
        let b = parse_bracketed("(Q (Q (Q the) (Q dog)) (Q (Q ran)))").unwrap();
        assert_eq!(yngve_depths(&a), yngve_depths(&b));
    }

    /// Total depth mass by per-node contribution: each node's score times
    /// the number of leaves it dominates.
    fn total_mass_per_node(tree: &ParseTree) -> f64 {
        fn leaves_under(node: &ParseTree) -> usize {
            match node {
                ParseTree::Leaf { .. } => 1,
                ParseTree::Internal { children, .. } => children.iter().map(leaves_under).sum(),
            }
        }
        fn go(node: &ParseTree) -> f64 {
            match node {
                ParseTree::Leaf { .. } => 0.0,
                ParseTree::Internal { children, .. } => {
                    let k = children.len();
                    children
                        .iter()
                        .enumerate()
                        .map(|(i, c)| (k - 1 - i) as f64 * leaves_under(c) as f64 + go(c))
                        .sum()
                }
            }
        }
        go(tree)
    }

    #[test]
    fn yngve_mass_identity() {
        for text in [DOG, "(A (B (C x) (D y) (E z)) (F (G u)) (H v))", "(X w)"] {
            let tree = parse_bracketed(text).unwrap();
            let per_leaf: f64 = yngve_depths(&tree).iter().sum();
            assert_eq!(per_leaf, total_mass_per_node(&tree));
        }
    }

    fn toy_lexicon() -> Lexicon {
        let map: HashMap<String, f64> = [
            ("the", 100.0),
            ("dog", 25.0),
            ("ran", 10.0),
            ("cat", 30.0),
            ("sat", 5.0),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        Lexicon::frequency(map).unwrap()
    }

    #[test]
    fn log_frequency_oov_is_zero() {
        let lex = toy_lexicon();
        assert_eq!(avg_log_frequency(&["zyzzyva", "qwyjibo"], &lex).unwrap(), 0.0);
    }

    #[test]
    fn log_frequency_single_word_formula() {
        let map: HashMap<String, f64> =
            [("w".to_string(), std::f64::consts::E - 1.0)].into_iter().collect();
        let lex = Lexicon::frequency(map).unwrap();
        assert!((avg_log_frequency(&["w"], &lex).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn log_frequency_matches_hand_oracle() {
        let lex = toy_lexicon();
        let got = avg_log_frequency(&["the", "dog", "zyzzyva"], &lex).unwrap();
        let expected = (101f64.ln() + 26f64.ln() + 1f64.ln()) / 3.0;
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn log_frequency_case_folds() {
        let lex = toy_lexicon();
        let upper = avg_log_frequency(&["The"], &lex).unwrap();
        let lower = avg_log_frequency(&["the"], &lex).unwrap();
        assert_eq!(upper, lower);
    }

    #[test]
    fn log_frequency_monotone_in_count() {
        let mut map: HashMap<String, f64> = [("w".to_string(), 5.0)].into_iter().collect();
        let low = avg_log_frequency(&["w", "x"], &Lexicon::frequency(map.clone()).unwrap()).unwrap();
        map.insert("w".to_string(), 50.0);
        let high = avg_log_frequency(&["w", "x"], &Lexicon::frequency(map).unwrap()).unwrap();
        assert!(high > low);
    }

    #[test]
    fn senses_examples() {
        let map: HashMap<String, f64> = [("a".to_string(), 2.0), ("b".to_string(), 4.0)]
            .into_iter()
            .collect();
        let lex = Lexicon::senses(map).unwrap();
        assert_eq!(avg_senses(&["a", "b"], &lex).unwrap(), 3.0);
        // all monosemous
        let mono = Lexicon::senses(
            [("x".to_string(), 1.0)].into_iter().collect(),
        )
        .unwrap();
        assert_eq!(avg_senses(&["x", "oov"], &mono).unwrap(), 1.0);
        // mixed OOV + known: (2 + 1) / 2
        assert_eq!(avg_senses(&["a", "oov"], &lex).unwrap(), 1.5);
    }

    #[test]
    fn empty_sentence_errors() {
        let lex = toy_lexicon();
        assert!(matches!(avg_log_frequency(&[], &lex), Err(Error::EmptySentence)));
        assert!(matches!(avg_senses(&[], &lex), Err(Error::EmptySentence)));
    }

    #[test]
    fn punctuation_detector() {
        assert!(is_punctuation(","));
        assert!(is_punctuation("..."));
        assert!(!is_punctuation("don't"));
        assert!(!is_punctuation("word"));
    }
}
