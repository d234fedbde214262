//! Design matrices: TF, TF-IDF, meta-data dummies, near-zero-variance
//! filtering, and column-wise concatenation.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::textprep::TokenizedDoc;

#[derive(Debug, Clone)]
pub struct Vocabulary {
    /// Lemmas in lexicographic order; column layout of the term matrices.
    pub terms: Vec<String>,
    pub index: HashMap<String, usize>,
    /// Document frequency per term.
    pub df: Vec<usize>,
    pub n_docs: usize,
}

pub fn build_vocabulary(docs: &[TokenizedDoc]) -> Result<Vocabulary> {
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut df_map: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in docs {
        let distinct: BTreeSet<&str> = doc.lemmas.iter().map(String::as_str).collect();
        for lemma in distinct {
            *df_map.entry(lemma).or_insert(0) += 1;
        }
    }
    let terms: Vec<String> = df_map.keys().map(|s| s.to_string()).collect();
    let df: Vec<usize> = df_map.values().copied().collect();
    let index = terms
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i))
        .collect();
    Ok(Vocabulary {
        terms,
        index,
        df,
        n_docs: docs.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub row_ids: Vec<String>,
    pub col_names: Vec<String>,
    pub values: Mat,
}

impl FeatureMatrix {
    pub fn new(row_ids: Vec<String>, col_names: Vec<String>, values: Mat) -> Result<Self> {
        if values.rows() != row_ids.len() || values.cols() != col_names.len() {
            return Err(Error::ShapeMismatch(format!(
                "matrix {}x{} vs {} row ids, {} col names",
                values.rows(),
                values.cols(),
                row_ids.len(),
                col_names.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for name in &col_names {
            if !seen.insert(name) {
                return Err(Error::ColumnCollision(name.clone()));
            }
        }
        Ok(Self {
            row_ids,
            col_names,
            values,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.values.rows()
    }

    /// Row subset in the given index order.
    pub fn select_rows(&self, idx: &[usize]) -> FeatureMatrix {
        let rows: Vec<Vec<f64>> = idx.iter().map(|&i| self.values.row(i).to_vec()).collect();
        let values = if rows.is_empty() {
            Mat::zeros(0, self.n_cols())
        } else {
            Mat::from_rows(&rows)
        };
        FeatureMatrix {
            row_ids: idx.iter().map(|&i| self.row_ids[i].clone()).collect(),
            col_names: self.col_names.clone(),
            values,
        }
    }

    pub fn n_cols(&self) -> usize {
        self.values.cols()
    }
}

/// Raw term counts, one row per document, columns in vocabulary order.
pub fn tf_matrix(docs: &[TokenizedDoc], vocab: &Vocabulary) -> Result<FeatureMatrix> {
    let mut values = Mat::zeros(docs.len(), vocab.terms.len());
    for (i, doc) in docs.iter().enumerate() {
        for lemma in &doc.lemmas {
            let j = *vocab
                .index
                .get(lemma)
                .ok_or_else(|| Error::OutOfVocabulary(lemma.clone()))?;
            values.set(i, j, values.get(i, j) + 1.0);
        }
    }
    FeatureMatrix::new(
        docs.iter().map(|d| d.case_id.clone()).collect(),
        vocab.terms.clone(),
        values,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdfVariant {
    /// idf(t) = ln(N / df(t))
    Plain,
    /// idf(t) = ln((1 + N) / (1 + df(t))) + 1
    Smooth,
}

pub fn idf_weights(vocab: &Vocabulary, variant: IdfVariant) -> Vec<f64> {
    let n = vocab.n_docs as f64;
    vocab
        .df
        .iter()
        .map(|&df| match variant {
            IdfVariant::Plain => (n / df as f64).ln(),
            IdfVariant::Smooth => ((1.0 + n) / (1.0 + df as f64)).ln() + 1.0,
        })
        .collect()
}

/// TF scaled column-wise by idf.
pub fn tfidf_matrix(
    docs: &[TokenizedDoc],
    vocab: &Vocabulary,
    variant: IdfVariant,
) -> Result<FeatureMatrix> {
    let mut tf = tf_matrix(docs, vocab)?;
    let idf = idf_weights(vocab, variant);
    for i in 0..tf.n_rows() {
        for (j, &w) in idf.iter().enumerate() {
            tf.values.set(i, j, tf.values.get(i, j) * w);
        }
    }
    Ok(tf)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DummyGroup {
    Articles,
    Year,
    Country,
    Sector,
}

impl DummyGroup {
    pub const ALL: [DummyGroup; 4] = [
        DummyGroup::Articles,
        DummyGroup::Year,
        DummyGroup::Country,
        DummyGroup::Sector,
    ];
}

/// 0/1 indicator columns for the requested meta-data groups. Articles get
/// one column per observed article number (a case may set several); year,
/// country, and sector get one column per observed category with no
/// reference category dropped. Columns are sorted within each group.
pub fn dummy_encode(corpus: &Corpus, groups: &[DummyGroup]) -> Result<FeatureMatrix> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut col_names: Vec<String> = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let n = corpus.len();

    let mut ordered_groups = groups.to_vec();
    ordered_groups.sort();
    ordered_groups.dedup();

    for group in ordered_groups {
        match group {
            DummyGroup::Articles => {
                let observed: BTreeSet<u32> = corpus
                    .cases
                    .iter()
                    .flat_map(|c| c.articles.iter().copied())
                    .collect();
                for article in observed {
                    let mut col = vec![0.0; n];
                    for (i, case) in corpus.cases.iter().enumerate() {
                        if case.articles.contains(&article) {
                            col[i] = 1.0;
                        }
                    }
                    col_names.push(format!("art{article}"));
                    columns.push(col);
                }
            }
            DummyGroup::Year => {
                let observed: BTreeSet<i32> = corpus.cases.iter().map(|c| c.year).collect();
                for year in observed {
                    let col = corpus
                        .cases
                        .iter()
                        .map(|c| if c.year == year { 1.0 } else { 0.0 })
                        .collect();
                    col_names.push(format!("year:{year}"));
                    columns.push(col);
                }
            }
            DummyGroup::Country => {
                let observed: BTreeSet<&str> =
                    corpus.cases.iter().map(|c| c.country.as_str()).collect();
                for country in observed {
                    let col = corpus
                        .cases
                        .iter()
                        .map(|c| if c.country == country { 1.0 } else { 0.0 })
                        .collect();
                    col_names.push(format!("country:{country}"));
                    columns.push(col);
                }
            }
            DummyGroup::Sector => {
                let observed: BTreeSet<&str> =
                    corpus.cases.iter().map(|c| c.sector.name()).collect();
                for sector in observed {
                    let col = corpus
                        .cases
                        .iter()
                        .map(|c| if c.sector.name() == sector { 1.0 } else { 0.0 })
                        .collect();
                    col_names.push(format!("sector:{sector}"));
                    columns.push(col);
                }
            }
        }
    }

    let mut values = Mat::zeros(n, columns.len());
    for (j, col) in columns.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            values.set(i, j, v);
        }
    }
    FeatureMatrix::new(corpus.case_ids(), col_names, values)
}

/// Drop columns that are constant, or whose most-frequent/second-most-
/// frequent value ratio reaches `freq_cut` while the percentage of distinct
/// values stays under `unique_cut_pct`. Defaults mirror caret's nearZeroVar
/// (freq_cut 95/5 = 19, unique cut 10%).
pub fn near_zero_variance_filter(
    matrix: &FeatureMatrix,
    freq_cut: f64,
    unique_cut_pct: f64,
) -> Result<(FeatureMatrix, Vec<String>)> {
    if matrix.n_rows() == 0 {
        return Err(Error::EmptyCorpus);
    }
    let n = matrix.n_rows();
    let mut kept_idx = Vec::new();
    let mut dropped = Vec::new();
    for j in 0..matrix.n_cols() {
        let mut counts: HashMap<u64, usize> = HashMap::new();
        for i in 0..n {
            *counts.entry(matrix.values.get(i, j).to_bits()).or_insert(0) += 1;
        }
        let distinct = counts.len();
        let drop = if distinct <= 1 {
            true
        } else {
            let mut freqs: Vec<usize> = counts.values().copied().collect();
            freqs.sort_unstable_by(|a, b| b.cmp(a));
            let ratio = freqs[0] as f64 / freqs[1] as f64;
            ratio >= freq_cut && 100.0 * distinct as f64 / (n as f64) < unique_cut_pct
        };
        if drop {
            dropped.push(matrix.col_names[j].clone());
        } else {
            kept_idx.push(j);
        }
    }
    let surviving = FeatureMatrix::new(
        matrix.row_ids.clone(),
        kept_idx.iter().map(|&j| matrix.col_names[j].clone()).collect(),
        matrix.values.select_cols(&kept_idx),
    )?;
    Ok((surviving, dropped))
}

pub const NZV_FREQ_CUT: f64 = 19.0;
pub const NZV_UNIQUE_CUT_PCT: f64 = 10.0;

/// Columns of `a` followed by columns of `b`; rows must align exactly.
pub fn hconcat(a: &FeatureMatrix, b: &FeatureMatrix) -> Result<FeatureMatrix> {
    if a.row_ids != b.row_ids {
        return Err(Error::ShapeMismatch(
            "hconcat: row ids differ or are ordered differently".into(),
        ));
    }
    let mut col_names = a.col_names.clone();
    col_names.extend(b.col_names.iter().cloned());
    let mut values = Mat::zeros(a.n_rows(), a.n_cols() + b.n_cols());
    for i in 0..a.n_rows() {
        for j in 0..a.n_cols() {
            values.set(i, j, a.values.get(i, j));
        }
        for j in 0..b.n_cols() {
            values.set(i, a.n_cols() + j, b.values.get(i, j));
        }
    }
    FeatureMatrix::new(a.row_ids.clone(), col_names, values)
}

/// CSV export: header `case_id,<col...>`, one row per case. Floats use the
/// shortest round-trip representation so output is byte-stable.
pub fn write_csv<W: Write>(matrix: &FeatureMatrix, mut out: W) -> std::io::Result<()> {
    write!(out, "case_id")?;
    for name in &matrix.col_names {
        write!(out, ",{name}")?;
    }
    writeln!(out)?;
    for i in 0..matrix.n_rows() {
        write!(out, "{}", matrix.row_ids[i])?;
        for j in 0..matrix.n_cols() {
            write!(out, ",{}", matrix.values.get(i, j))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<FeatureMatrix> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse {
            line: 1,
            message: "empty CSV".into(),
        })?
        .map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
    let mut cols = header.split(',');
    if cols.next() != Some("case_id") {
        return Err(Error::Parse {
            line: 1,
            message: "expected leading case_id column".into(),
        });
    }
    let col_names: Vec<String> = cols.map(str::to_string).collect();
    let mut row_ids = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line.map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        row_ids.push(
            fields
                .next()
                .ok_or_else(|| Error::Parse {
                    line: line_no,
                    message: "missing case_id".into(),
                })?
                .to_string(),
        );
        let row: Vec<f64> = fields
            .map(|f| {
                f.parse::<f64>().map_err(|e| Error::Parse {
                    line: line_no,
                    message: format!("bad number {f:?}: {e}"),
                })
            })
            .collect::<Result<_>>()?;
        if row.len() != col_names.len() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {} values, got {}", col_names.len(), row.len()),
            });
        }
        rows.push(row);
    }
    let values = if rows.is_empty() {
        Mat::zeros(0, col_names.len())
    } else {
        Mat::from_rows(&rows)
    };
    FeatureMatrix::new(row_ids, col_names, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{test_case, Sector};

    fn doc(id: &str, lemmas: &[&str]) -> TokenizedDoc {
        TokenizedDoc {
            case_id: id.to_string(),
            lemmas: lemmas.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn vocabulary_counts_documents_not_tokens() {
        let docs = vec![doc("d1", &["a", "b"]), doc("d2", &["b"])];
        let v = build_vocabulary(&docs).unwrap();
        assert_eq!(v.terms, vec!["a", "b"]);
        assert_eq!(v.df, vec![1, 2]);
        assert_eq!(v.n_docs, 2);

        let single = vec![doc("d", &["x", "x"])];
        let v = build_vocabulary(&single).unwrap();
        assert_eq!(v.df, vec![1]);
    }

    #[test]
    fn vocabulary_empty_corpus_errors() {
        assert!(build_vocabulary(&[]).is_err());
    }

    #[test]
    fn tf_counts_and_zero_rows() {
        let docs = vec![doc("d1", &["a", "a", "b"]), doc("d2", &[])];
        let v = build_vocabulary(&docs).unwrap();
        let tf = tf_matrix(&docs, &v).unwrap();
        assert_eq!(tf.values.row(0), &[2.0, 1.0]);
        assert_eq!(tf.values.row(1), &[0.0, 0.0]);
    }

    #[test]
    fn tf_rejects_out_of_vocabulary() {
        let docs = vec![doc("d1", &["a"])];
        let v = build_vocabulary(&docs).unwrap();
        let bad = vec![doc("d1", &["zzz"])];
        assert!(matches!(
            tf_matrix(&bad, &v),
            Err(Error::OutOfVocabulary(_))
        ));
    }

    #[test]
    fn tfidf_hand_computed() {
        let docs = vec![doc("d1", &["a", "a", "b"]), doc("d2", &["b", "c"])];
        let v = build_vocabulary(&docs).unwrap();
        let m = tfidf_matrix(&docs, &v, IdfVariant::Plain).unwrap();
        let ln2 = 2.0_f64.ln();
        // a: df 1 -> idf ln2; b: df 2 -> idf 0; c: df 1 -> idf ln2
        assert!((m.values.get(0, 0) - 2.0 * ln2).abs() < 1e-12);
        assert_eq!(m.values.get(0, 1), 0.0);
        assert_eq!(m.values.get(1, 1), 0.0);
        assert!((m.values.get(1, 2) - ln2).abs() < 1e-12);
    }

    #[test]
    fn tfidf_single_document_all_zero() {
        let docs = vec![doc("d1", &["a", "b", "a"])];
        let v = build_vocabulary(&docs).unwrap();
        let m = tfidf_matrix(&docs, &v, IdfVariant::Plain).unwrap();
        for j in 0..m.n_cols() {
            assert_eq!(m.values.get(0, j), 0.0);
        }
    }

    #[test]
    fn tfidf_equals_tf_times_idf_elementwise() {
        let docs = vec![
            doc("d1", &["a", "b", "c", "a"]),
            doc("d2", &["b"]),
            doc("d3", &["c", "c", "a"]),
        ];
        let v = build_vocabulary(&docs).unwrap();
        let tf = tf_matrix(&docs, &v).unwrap();
        let tfidf = tfidf_matrix(&docs, &v, IdfVariant::Plain).unwrap();
        let idf = idf_weights(&v, IdfVariant::Plain);
        for i in 0..tf.n_rows() {
            for j in 0..tf.n_cols() {
                assert_eq!(tfidf.values.get(i, j), tf.values.get(i, j) * idf[j]);
            }
        }
    }

    #[test]
    fn dummy_rows_mark_membership() {
        let mut c = test_case("c1", &[5, 6], 100.0);
        c.country = "ES".into();
        c.sector = Sector::Telecom;
        let corpus = Corpus::new(vec![c]).unwrap();
        let m = dummy_encode(&corpus, &DummyGroup::ALL).unwrap();
        assert_eq!(
            m.col_names,
            vec!["art5", "art6", "year:2019", "country:ES", "sector:Telecom"]
        );
        assert_eq!(m.values.row(0), &[1.0, 1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn dummy_group_sums() {
        let mut a = test_case("a", &[5, 6, 32], 1.0);
        let mut b = test_case("b", &[6], 2.0);
        a.country = "ES".into();
        b.country = "DE".into();
        b.sector = Sector::PublicSector;
        b.year = 2020;
        let corpus = Corpus::new(vec![a, b]).unwrap();
        let m = dummy_encode(&corpus, &DummyGroup::ALL).unwrap();
        for (i, case) in corpus.cases.iter().enumerate() {
            let mut art_sum = 0.0;
            let mut year_sum = 0.0;
            let mut country_sum = 0.0;
            let mut sector_sum = 0.0;
            for (j, name) in m.col_names.iter().enumerate() {
                let v = m.values.get(i, j);
                if name.starts_with("art") {
                    art_sum += v;
                } else if name.starts_with("year:") {
                    year_sum += v;
                } else if name.starts_with("country:") {
                    country_sum += v;
                } else {
                    sector_sum += v;
                }
            }
            assert_eq!(art_sum, case.articles.len() as f64);
            assert_eq!(year_sum, 1.0);
            assert_eq!(country_sum, 1.0);
            assert_eq!(sector_sum, 1.0);
        }
    }

    #[test]
    fn dummy_sector_only_difference() {
        let mut a = test_case("a", &[5], 1.0);
        let mut b = test_case("b", &[5], 1.0);
        a.sector = Sector::Telecom;
        b.sector = Sector::Unknown;
        let corpus = Corpus::new(vec![a, b]).unwrap();
        let m = dummy_encode(&corpus, &DummyGroup::ALL).unwrap();
        for (j, name) in m.col_names.iter().enumerate() {
            if name.starts_with("sector:") {
                assert_ne!(m.values.get(0, j), m.values.get(1, j));
            } else {
                assert_eq!(m.values.get(0, j), m.values.get(1, j));
            }
        }
    }

    fn nzv_fixture() -> FeatureMatrix {
        // 100 rows: col0 constant, col1 has 99 zeros and one 1, col2 balanced
        let rows: Vec<Vec<f64>> = (0..100)
            .map(|i| {
                vec![
                    7.0,
                    if i == 0 { 1.0 } else { 0.0 },
                    if i % 2 == 0 { 1.0 } else { 0.0 },
                ]
            })
            .collect();
        FeatureMatrix::new(
            (0..100).map(|i| format!("r{i}")).collect(),
            vec!["const".into(), "rare".into(), "balanced".into()],
            Mat::from_rows(&rows),
        )
        .unwrap()
    }

    #[test]
    fn nzv_drops_constant_and_dominated() {
        let m = nzv_fixture();
        let (kept, dropped) =
            near_zero_variance_filter(&m, NZV_FREQ_CUT, NZV_UNIQUE_CUT_PCT).unwrap();
        assert_eq!(dropped, vec!["const", "rare"]);
        assert_eq!(kept.col_names, vec!["balanced"]);
    }

    #[test]
    fn nzv_is_idempotent() {
        let m = nzv_fixture();
        let (once, _) = near_zero_variance_filter(&m, NZV_FREQ_CUT, NZV_UNIQUE_CUT_PCT).unwrap();
        let (twice, dropped2) =
            near_zero_variance_filter(&once, NZV_FREQ_CUT, NZV_UNIQUE_CUT_PCT).unwrap();
        assert_eq!(once, twice);
        assert!(dropped2.is_empty());
    }

    #[test]
    fn hconcat_and_errors() {
        let a = FeatureMatrix::new(
            vec!["r1".into(), "r2".into()],
            vec!["x".into(), "y".into()],
            Mat::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]),
        )
        .unwrap();
        let b = FeatureMatrix::new(
            vec!["r1".into(), "r2".into()],
            vec!["z".into()],
            Mat::from_rows(&[vec![5.0], vec![6.0]]),
        )
        .unwrap();
        let c = hconcat(&a, &b).unwrap();
        assert_eq!(c.col_names, vec!["x", "y", "z"]);
        assert_eq!(c.values.row(0), &[1.0, 2.0, 5.0]);

        // zero-column concat is identity on values
        let empty = FeatureMatrix::new(
            vec!["r1".into(), "r2".into()],
            vec![],
            Mat::zeros(2, 0),
        )
        .unwrap();
        let same = hconcat(&a, &empty).unwrap();
        assert_eq!(same.values, a.values);

        // mismatched row order
        let swapped = FeatureMatrix::new(
            vec!["r2".into(), "r1".into()],
            vec!["w".into()],
            Mat::from_rows(&[vec![0.0], vec![0.0]]),
        )
        .unwrap();
        assert!(hconcat(&a, &swapped).is_err());

        // name collision
        let dup = FeatureMatrix::new(
            vec!["r1".into(), "r2".into()],
            vec!["x".into()],
            Mat::from_rows(&[vec![0.0], vec![0.0]]),
        )
        .unwrap();
        assert!(hconcat(&a, &dup).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let m = FeatureMatrix::new(
            vec!["r1".into(), "r2".into()],
            vec!["x".into(), "y".into()],
            Mat::from_rows(&[vec![1.5, -2.0], vec![0.0, 0.3333333333333333]]),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_csv(&m, &mut buf).unwrap();
        let mut f = tempfile::NamedTempFile::new().unwrap();
        std::io::Write::write_all(&mut f, &buf).unwrap();
        let back = read_csv(f.path()).unwrap();
        assert_eq!(back, m);
    }
}
