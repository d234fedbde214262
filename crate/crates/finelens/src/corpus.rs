//! Enforcement-case records: load, validate, merge shared decisions.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sector {
    Individuals,
    PublicSector,
    Telecom,
    PrivateSector,
    Unknown,
}

impl Sector {
    pub const ALL: [Sector; 5] = [
        Sector::Individuals,
        Sector::PublicSector,
        Sector::Telecom,
        Sector::PrivateSector,
        Sector::Unknown,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Sector::Individuals => "Individuals",
            Sector::PublicSector => "PublicSector",
            Sector::Telecom => "Telecom",
            Sector::PrivateSector => "PrivateSector",
            Sector::Unknown => "Unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnforcementCase {
    pub case_id: String,
    pub country: String,
    pub year: i32,
    pub sector: Sector,
    pub articles: BTreeSet<u32>,
    pub fine_eur: f64,
    pub decision_ref: String,
    pub text: String,
}

const KNOWN_FIELDS: [&str; 8] = [
    "case_id",
    "country",
    "year",
    "sector",
    "articles",
    "fine_eur",
    "decision_ref",
    "text",
];

impl EnforcementCase {
    pub fn validate(&self) -> Result<()> {
        let fail = |message: String| {
            Err(Error::InvalidCase {
                case_id: self.case_id.clone(),
                message,
            })
        };
        if self.case_id.is_empty() {
            return fail("empty case_id".into());
        }
        if self.country.len() != 2 || !self.country.chars().all(|c| c.is_ascii_uppercase()) {
            return fail(format!(
                "country {:?} is not an uppercase ISO-3166 alpha-2 code",
                self.country
            ));
        }
        if !(self.fine_eur > 0.0) {
            return fail(format!("non-positive fine {}", self.fine_eur));
        }
        if self.articles.is_empty() {
            return fail("articles empty".into());
        }
        if let Some(a) = self.articles.iter().find(|&&a| !(1..=99).contains(&a)) {
            return fail(format!("article {a} outside [1, 99]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    pub cases: Vec<EnforcementCase>,
}

impl Corpus {
    pub fn new(cases: Vec<EnforcementCase>) -> Result<Self> {
        let corpus = Corpus { cases };
        corpus.validate()?;
        Ok(corpus)
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for case in &self.cases {
            case.validate()?;
            if !seen.insert(case.case_id.as_str()) {
                return Err(Error::DuplicateCaseId(case.case_id.clone()));
            }
        }
        Ok(())
    }

    pub fn case_ids(&self) -> Vec<String> {
        self.cases.iter().map(|c| c.case_id.clone()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseMode {
    /// Unknown fields are rejected.
    Strict,
    /// Unknown fields are ignored with a warning on stderr.
    Lenient,
}

/// Load a JSON Lines corpus, one case per line, preserving file order.
pub fn load_cases(path: &Path, mode: ParseMode) -> Result<Corpus> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut cases = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        cases.push(parse_case_line(&line, line_no, mode)?);
    }
    Corpus::new(cases)
}

fn parse_case_line(line: &str, line_no: usize, mode: ParseMode) -> Result<EnforcementCase> {
    let value: serde_json::Value = serde_json::from_str(line).map_err(|e| Error::Parse {
        line: line_no,
        message: e.to_string(),
    })?;
    let obj = value.as_object().ok_or_else(|| Error::Parse {
        line: line_no,
        message: "record is not a JSON object".into(),
    })?;
    for key in obj.keys() {
        if !KNOWN_FIELDS.contains(&key.as_str()) {
            match mode {
                ParseMode::Strict => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("unknown field {key:?}"),
                    })
                }
                ParseMode::Lenient => {
                    eprintln!("warning: line {line_no}: ignoring unknown field {key:?}");
                }
            }
        }
    }
    serde_json::from_value(value).map_err(|e| Error::Parse {
        line: line_no,
        message: e.to_string(),
    })
}

/// Write a corpus back out as JSON Lines, one case per line.
pub fn save_cases<W: Write>(corpus: &Corpus, mut out: W) -> std::io::Result<()> {
    for case in &corpus.cases {
        serde_json::to_writer(&mut out, case)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Collapse cases sharing a decision_ref into one: articles unioned, fines
/// summed, other meta-data taken from the first occurrence. Cases with
/// conflicting country or year under the same decision_ref are rejected.
pub fn merge_shared_decisions(corpus: &Corpus) -> Result<Corpus> {
    let mut order: Vec<String> = Vec::new();
    let mut merged: HashMap<String, EnforcementCase> = HashMap::new();
    for case in &corpus.cases {
        match merged.get_mut(&case.decision_ref) {
            None => {
                order.push(case.decision_ref.clone());
                merged.insert(case.decision_ref.clone(), case.clone());
            }
            Some(existing) => {
                if existing.country != case.country {
                    return Err(Error::MergeConflict {
                        decision_ref: case.decision_ref.clone(),
                        message: format!(
                            "country mismatch: {} vs {}",
                            existing.country, case.country
                        ),
                    });
                }
                if existing.year != case.year {
                    return Err(Error::MergeConflict {
                        decision_ref: case.decision_ref.clone(),
                        message: format!("year mismatch: {} vs {}", existing.year, case.year),
                    });
                }
                existing.articles.extend(case.articles.iter().copied());
                existing.fine_eur += case.fine_eur;
            }
        }
    }
    let cases = order
        .into_iter()
        .map(|r| merged.remove(&r).expect("merged entry"))
        .collect();
    Ok(Corpus { cases })
}

/// Natural log of each fine, in corpus order.
pub fn log_fines(corpus: &Corpus) -> Vec<f64> {
    corpus.cases.iter().map(|c| c.fine_eur.ln()).collect()
}

#[cfg(test)]
pub fn test_case(id: &str, articles: &[u32], fine: f64) -> EnforcementCase {
    EnforcementCase {
        case_id: id.to_string(),
        country: "FI".to_string(),
        year: 2019,
        sector: Sector::PrivateSector,
        articles: articles.iter().copied().collect(),
        fine_eur: fine,
        decision_ref: format!("dec-{id}"),
        text: String::new(),
    }
}
