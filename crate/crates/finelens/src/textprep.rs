//! Text preprocessing: lowercase, tokenize, dictionary filter, stopwords,
//! length bounds, table lemmatization, and corpus-level rare-term pruning.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default custom stopword list: the twelve most frequent tokens of the
/// decision corpus.
pub const DEFAULT_CUSTOM_STOPWORDS: [&str; 12] = [
    "data",
    "article",
    "personal",
    "protection",
    "processing",
    "company",
    "authority",
    "regulation",
    "information",
    "case",
    "art",
    "page",
];

#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    pub dictionary: HashSet<String>,
    pub lemma_map: HashMap<String, String>,
    pub standard_stopwords: HashSet<String>,
    pub custom_stopwords: HashSet<String>,
}

impl Lexicon {
    /// Load from a directory holding `dictionary.txt`, `lemmas.tsv`,
    /// `stopwords.txt`, and optionally `custom_stopwords.txt` (falls back
    /// to the default twelve-token list).
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let dictionary = read_word_file(&dir.join("dictionary.txt"))?;
        let standard_stopwords = read_word_file(&dir.join("stopwords.txt"))?;
        let custom_path = dir.join("custom_stopwords.txt");
        let custom_stopwords = if custom_path.exists() {
            read_word_file(&custom_path)?
        } else {
            DEFAULT_CUSTOM_STOPWORDS
                .iter()
                .map(|s| s.to_string())
                .collect()
        };
        let lemma_map = read_lemma_file(&dir.join("lemmas.tsv"))?;
        Ok(Self {
            dictionary,
            lemma_map,
            standard_stopwords,
            custom_stopwords,
        })
    }

    fn is_stopword(&self, word: &str) -> bool {
        self.standard_stopwords.contains(word) || self.custom_stopwords.contains(word)
    }
}

fn read_word_file(path: &Path) -> Result<HashSet<String>> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut words = HashSet::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let w = line.trim();
        if !w.is_empty() {
            words.insert(w.to_lowercase());
        }
    }
    Ok(words)
}

fn read_lemma_file(path: &Path) -> Result<HashMap<String, String>> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut map = HashMap::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split('\t');
        let word = parts.next().unwrap_or("");
        let lemma = parts.next().ok_or_else(|| Error::Parse {
            line: idx + 1,
            message: format!("lemmas.tsv: expected `word<TAB>lemma`, got {line:?}"),
        })?;
        map.insert(word.to_lowercase(), lemma.to_lowercase());
    }
    Ok(map)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrepConfig {
    pub min_token_len: usize,
    pub max_token_len: usize,
    pub min_corpus_count: usize,
}

impl Default for PrepConfig {
    fn default() -> Self {
        Self {
            min_token_len: 3,
            max_token_len: 20,
            min_corpus_count: 3,
        }
    }
}

impl PrepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_token_len < 1 || self.min_token_len > self.max_token_len {
            return Err(Error::InvalidConfig(format!(
                "token length bounds [{}, {}] invalid",
                self.min_token_len, self.max_token_len
            )));
        }
        if self.min_corpus_count < 1 {
            return Err(Error::InvalidConfig("min_corpus_count must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenizedDoc {
    pub case_id: String,
    pub lemmas: Vec<String>,
}

/// Run steps (a)-(f) on one document: lowercase, split on non-alphanumerics,
/// keep alphabetic dictionary words, drop stopwords, enforce length bounds,
/// lemmatize, then re-apply the stopword and length filters to the lemma.
/// The rare-term cut (g) is corpus-level; see [`prune_rare_terms`].
pub fn preprocess_document(text: &str, lexicon: &Lexicon, config: &PrepConfig) -> Vec<String> {
    let lowered = text.to_lowercase();
    let mut out = Vec::new();
    for token in lowered.split(|c: char| !c.is_alphanumeric()) {
        if token.is_empty() || !token.chars().all(|c| c.is_alphabetic()) {
            continue;
        }
        if !lexicon.dictionary.contains(token) {
            continue;
        }
        if lexicon.is_stopword(token) {
            continue;
        }
        let len = token.chars().count();
        if len < config.min_token_len || len > config.max_token_len {
            continue;
        }
        let lemma = lexicon.lemma_map.get(token).map_or(token, String::as_str);
        if lexicon.is_stopword(lemma) {
            continue;
        }
        let lemma_len = lemma.chars().count();
        if lemma_len < config.min_token_len || lemma_len > config.max_token_len {
            continue;
        }
        out.push(lemma.to_string());
    }
    out
}

/// Step (g): drop every lemma whose total count across all documents is
/// below `min_corpus_count`. Within-document order is preserved.
pub fn prune_rare_terms(docs: &[TokenizedDoc], config: &PrepConfig) -> Vec<TokenizedDoc> {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for doc in docs {
        for lemma in &doc.lemmas {
            *counts.entry(lemma).or_insert(0) += 1;
        }
    }
    docs.iter()
        .map(|doc| TokenizedDoc {
            case_id: doc.case_id.clone(),
            lemmas: doc
                .lemmas
                .iter()
                .filter(|l| counts[l.as_str()] >= config.min_corpus_count)
                .cloned()
                .collect(),
        })
        .collect()
}

/// The k most frequent lemmas by total count, ties broken lexicographically.
pub fn top_frequent_terms(docs: &[TokenizedDoc], k: usize) -> Vec<(String, usize)> {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for doc in docs {
        for lemma in &doc.lemmas {
            *counts.entry(lemma).or_insert(0) += 1;
        }
    }
    let mut entries: Vec<(String, usize)> = counts
        .into_iter()
        .map(|(l, c)| (l.to_string(), c))
        .collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    entries.truncate(k);
    entries
}

/// Tokenized docs persist as JSON Lines, one `{case_id, lemmas}` per line.
pub fn save_docs<W: Write>(docs: &[TokenizedDoc], mut out: W) -> std::io::Result<()> {
    for doc in docs {
        serde_json::to_writer(&mut out, doc)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn load_docs(path: &Path) -> Result<Vec<TokenizedDoc>> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut docs = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        docs.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?);
    }
    Ok(docs)
}

#[cfg(test)]
pub fn mini_lexicon() -> Lexicon {
    let dict = [
        "the", "fined", "fine", "companies", "company", "appealed", "appeal", "breach", "severe",
        "notice", "gdpr",
    ];
    let mut lexicon = Lexicon {
        dictionary: dict.iter().map(|s| s.to_string()).collect(),
        lemma_map: HashMap::new(),
        standard_stopwords: ["the", "a", "of"].iter().map(|s| s.to_string()).collect(),
        custom_stopwords: DEFAULT_CUSTOM_STOPWORDS
            .iter()
            .map(|s| s.to_string())
            .collect(),
    };
    // hand-trace fixture: "gdpr" intentionally left out of the dictionary
    lexicon.dictionary.remove("gdpr");
    for (w, l) in [
        ("fined", "fine"),
        ("companies", "company"),
        ("appealed", "appeal"),
    ] {
        lexicon.lemma_map.insert(w.into(), l.into());
    }
    lexicon
}
