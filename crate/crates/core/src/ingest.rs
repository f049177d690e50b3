//! Loading and validation of relationship tuples and their side inputs.
//!
//! File formats:
//!
//! * tuples: JSON lines with fields `doc_id`, `source`, `date` (ISO day or
//!   null), `arg1`, `arg1_head`, `rel`, `rel_head`, `arg2`, `arg2_head`.
//!   Heads may be omitted or null, in which case the last token is used.
//! * embeddings: a header line `d=<int>` (further `key=value` fields are
//!   allowed), then one tab-separated row per phrase: the phrase followed by
//!   `d` numbers.
//! * seeds: one entry per line, optionally `entry<TAB>frequency`.
//! * stop words: one word per line.
//! * aliases: `alias<TAB>canonical` per line.
//!
//! Blank lines and lines starting with `#` are ignored in the text formats.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::NaiveDate;
use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{default_stop_words, normalize_phrase, resolve_head};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Social,
    News,
}

impl std::fmt::Display for Source {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Source::Social => "social",
            Source::News => "news",
        })
    }
}

/// One extracted `(arg1, rel, arg2)` observation.
///
/// Phrases are normalised and heads are single tokens of their phrase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationTuple {
    pub doc_id: String,
    pub source: Source,
    pub date: Option<NaiveDate>,
    pub arg1: String,
    pub arg1_head: String,
    pub rel: String,
    pub rel_head: String,
    pub arg2: String,
    pub arg2_head: String,
}

impl RelationTuple {
    /// Builds a tuple from raw text, normalising phrases and resolving heads.
    ///
    /// Fails when an argument is empty after normalisation or a news tuple
    /// carries no date.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        doc_id: impl Into<String>,
        source: Source,
        date: Option<NaiveDate>,
        arg1: &str,
        rel: &str,
        arg2: &str,
    ) -> Result<Self> {
        Self::with_heads(
            doc_id,
            source,
            date,
            (arg1, None),
            (rel, None),
            (arg2, None),
        )
        .map(|(t, _)| t)
    }

    fn with_heads(
        doc_id: impl Into<String>,
        source: Source,
        date: Option<NaiveDate>,
        arg1: (&str, Option<&str>),
        rel: (&str, Option<&str>),
        arg2: (&str, Option<&str>),
    ) -> Result<(Self, usize)> {
        let mut fallbacks = 0;
        let mut part = |what: &str, (text, head): (&str, Option<&str>)| {
            let phrase = normalize_phrase(text);
            let (head, fell_back) = resolve_head(&phrase, head)
                .ok_or_else(|| Error::InvalidInput(format!("{what} is empty")))?;
            fallbacks += usize::from(fell_back);
            Ok::<_, Error>((phrase, head))
        };
        let (arg1, arg1_head) = part("arg1", arg1)?;
        let (rel, rel_head) = part("rel", rel)?;
        let (arg2, arg2_head) = part("arg2", arg2)?;
        if source == Source::News && date.is_none() {
            return Err(Error::InvalidInput("news tuple without a date".into()));
        }
        Ok((
            RelationTuple {
                doc_id: doc_id.into(),
                source,
                date,
                arg1,
                arg1_head,
                rel,
                rel_head,
                arg2,
                arg2_head,
            },
            fallbacks,
        ))
    }

    /// Tokens of both argument phrases, arg1 first.
    pub fn arg_tokens(&self) -> impl Iterator<Item = &str> {
        self.arg1.split(' ').chain(self.arg2.split(' '))
    }

    /// Tokens of all three phrases in reading order.
    pub fn all_tokens(&self) -> impl Iterator<Item = &str> {
        self.arg1
            .split(' ')
            .chain(self.rel.split(' '))
            .chain(self.arg2.split(' '))
    }
}

#[derive(Debug, Deserialize)]
struct TupleRecord {
    doc_id: String,
    source: Source,
    #[serde(default)]
    date: Option<String>,
    arg1: String,
    #[serde(default)]
    arg1_head: Option<String>,
    rel: String,
    #[serde(default)]
    rel_head: Option<String>,
    arg2: String,
    #[serde(default)]
    arg2_head: Option<String>,
}

/// An immutable set of tuples with derived vocabulary and date span.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    tuples: Vec<RelationTuple>,
    vocabulary: BTreeMap<String, u64>,
    span: Option<(NaiveDate, NaiveDate)>,
}

impl Corpus {
    pub fn from_tuples(tuples: Vec<RelationTuple>) -> Self {
        let vocabulary = build_vocabulary(&tuples);
        let span = tuples
            .iter()
            .filter_map(|t| t.date)
            .fold(None, |acc, d| match acc {
                None => Some((d, d)),
                Some((lo, hi)) => Some((d.min(lo), d.max(hi))),
            });
        Corpus {
            tuples,
            vocabulary,
            span,
        }
    }

    pub fn tuples(&self) -> &[RelationTuple] {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    /// Argument-token frequencies; its size is the vocabulary size `v`.
    pub fn vocabulary(&self) -> &BTreeMap<String, u64> {
        &self.vocabulary
    }

    /// `(t_min, t_max)` over dated tuples.
    pub fn span(&self) -> Option<(NaiveDate, NaiveDate)> {
        self.span
    }

    /// Occurrence counts of every distinct argument phrase.
    pub fn phrase_counts(&self) -> BTreeMap<String, u64> {
        let mut counts = BTreeMap::new();
        for t in &self.tuples {
            *counts.entry(t.arg1.clone()).or_insert(0) += 1;
            *counts.entry(t.arg2.clone()).or_insert(0) += 1;
        }
        counts
    }

    /// Tuples dated in `[start, end)`; undated tuples never qualify.
    pub fn dated_between(
        &self,
        start: NaiveDate,
        end: NaiveDate,
    ) -> impl Iterator<Item = &RelationTuple> {
        self.tuples
            .iter()
            .filter(move |t| t.date.is_some_and(|d| d >= start && d < end))
    }

    /// Tokens of all phrases of tuples dated in `[start, end)`.
    pub fn tokens_between(&self, start: NaiveDate, end: NaiveDate) -> Vec<String> {
        self.dated_between(start, end)
            .flat_map(|t| t.all_tokens().map(str::to_string))
            .collect()
    }

    /// Writes the corpus as tuple JSON lines.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for t in &self.tuples {
            serde_json::to_writer(&mut out, t)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).map_err(|e| Error::io(path, e))?;
        fs::write(path, buf).map_err(|e| Error::io(path, e))
    }
}

/// Token → occurrence count over every arg1/arg2 phrase.
pub fn build_vocabulary(tuples: &[RelationTuple]) -> BTreeMap<String, u64> {
    let mut vocab = BTreeMap::new();
    for tok in tuples.iter().flat_map(RelationTuple::arg_tokens) {
        *vocab.entry(tok.to_string()).or_insert(0) += 1;
    }
    vocab
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub loaded: usize,
    pub malformed: usize,
    pub head_fallbacks: usize,
    pub duplicates: usize,
}

/// Reads tuple JSON lines.
///
/// Malformed records are skipped and counted; more than half malformed is
/// fatal. Records whose `source` differs from `source` count as malformed.
pub fn load_tuples(path: &Path, source: Source) -> Result<(Corpus, LoadReport)> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut report = LoadReport::default();
    let mut tuples = Vec::new();
    let mut total = 0;
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        total += 1;
        match parse_record(&line, source) {
            Ok((t, fallbacks)) => {
                report.head_fallbacks += fallbacks;
                tuples.push(t);
            }
            Err(msg) => {
                report.malformed += 1;
                warn!(
                    "{}:{}: skipping malformed record: {msg}",
                    path.display(),
                    idx + 1
                );
            }
        }
    }
    if report.malformed * 2 > total {
        return Err(Error::TooManyMalformed {
            path: path.to_path_buf(),
            malformed: report.malformed,
            total,
        });
    }
    report.loaded = tuples.len();
    Ok((Corpus::from_tuples(tuples), report))
}

fn parse_record(line: &str, source: Source) -> std::result::Result<(RelationTuple, usize), String> {
    let rec: TupleRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    if rec.source != source {
        return Err(format!("expected source {source}, found {}", rec.source));
    }
    let date = match rec.date.as_deref() {
        None | Some("") => None,
        Some(d) => Some(
            NaiveDate::parse_from_str(d, "%Y-%m-%d").map_err(|e| format!("bad date {d:?}: {e}"))?,
        ),
    };
    RelationTuple::with_heads(
        rec.doc_id,
        rec.source,
        date,
        (&rec.arg1, rec.arg1_head.as_deref()),
        (&rec.rel, rec.rel_head.as_deref()),
        (&rec.arg2, rec.arg2_head.as_deref()),
    )
    .map_err(|e| e.to_string())
}

/// Fixed-dimension phrase vectors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmbeddingTable {
    dim: usize,
    entries: BTreeMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        EmbeddingTable {
            dim,
            entries: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Inserts a vector; returns true when it replaced an existing phrase.
    pub fn insert(&mut self, phrase: &str, vector: Vec<f64>) -> Result<bool> {
        if vector.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "vector for {phrase:?} has {} components, expected {}",
                vector.len(),
                self.dim
            )));
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite component for {phrase:?}"
            )));
        }
        Ok(self
            .entries
            .insert(normalize_phrase(phrase), vector)
            .is_some())
    }

    pub fn get(&self, phrase: &str) -> Option<&[f64]> {
        self.entries.get(phrase).map(Vec::as_slice)
    }

    /// The phrase's own vector, else the mean of its tokens' vectors.
    pub fn embed(&self, phrase: &str) -> Option<Vec<f64>> {
        if let Some(v) = self.get(phrase) {
            return Some(v.to_vec());
        }
        let mut sum = vec![0.0; self.dim];
        let mut n = 0usize;
        for tok in phrase.split(' ') {
            if let Some(v) = self.get(tok) {
                sum.iter_mut().zip(v).for_each(|(s, x)| *s += x);
                n += 1;
            }
        }
        (n > 0).then(|| sum.into_iter().map(|s| s / n as f64).collect())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "d={}", self.dim)?;
        for (phrase, v) in &self.entries {
            out.write_all(phrase.as_bytes())?;
            for x in v {
                write!(out, "\t{x}")?;
            }
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write(&mut buf).map_err(|e| Error::io(path, e))?;
        fs::write(path, buf).map_err(|e| Error::io(path, e))
    }
}

/// Reads an embedding sidecar. Returns the table and the number of duplicate
/// phrases (the last row wins).
pub fn load_embeddings(path: &Path) -> Result<(EmbeddingTable, usize)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
    let (hline, header) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "missing `d=<int>` header"))?;
    let dim = header
        .split_whitespace()
        .find_map(|f| f.strip_prefix("d="))
        .and_then(|d| d.parse::<usize>().ok())
        .filter(|&d| d > 0)
        .ok_or_else(|| Error::parse(path, hline + 1, format!("bad header {header:?}")))?;

    let mut table = EmbeddingTable::new(dim);
    let mut duplicates = 0;
    for (idx, line) in lines {
        let lineno = idx + 1;
        let mut fields = line.split('\t');
        let phrase = fields.next().unwrap_or_default();
        let values = fields
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::parse(path, lineno, format!("bad number {f:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if values.len() != dim {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected {dim} values, found {}", values.len()),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::parse(path, lineno, "non-finite component"));
        }
        if normalize_phrase(phrase).is_empty() {
            return Err(Error::parse(path, lineno, "empty phrase"));
        }
        if table.insert(phrase, values)? {
            duplicates += 1;
            warn!(
                "{}:{lineno}: duplicate phrase {phrase:?}, keeping the last row",
                path.display()
            );
        }
    }
    Ok((table, duplicates))
}

fn content_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| (i + 1, l.to_string()))
        .collect())
}

/// NER-derived seed entities with corpus frequencies, lexicographically
/// ordered.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedEntityList {
    entries: BTreeMap<String, u64>,
}

impl SeedEntityList {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an entry; repeated entries accumulate frequency.
    pub fn add(&mut self, entity: &str, frequency: u64) {
        let entity = normalize_phrase(entity);
        if !entity.is_empty() {
            *self.entries.entry(entity).or_insert(0) += frequency.max(1);
        }
    }

    pub fn contains(&self, entity: &str) -> bool {
        self.entries.contains_key(entity)
    }

    pub fn frequency(&self, entity: &str) -> Option<u64> {
        self.entries.get(entity).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Seeds occurring in a phrase's tokens, as contiguous runs for
    /// multi-word seeds.
    pub fn seeds_in(&self, phrase_tokens: &[&str]) -> Vec<&str> {
        self.entries
            .keys()
            .map(String::as_str)
            .filter(|s| crate::text::phrase_contains(phrase_tokens, s))
            .collect()
    }

    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (e, f) in &self.entries {
            writeln!(out, "{e}\t{f}")?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write(&mut buf).map_err(|e| Error::io(path, e))?;
        fs::write(path, buf).map_err(|e| Error::io(path, e))
    }
}

impl<S: AsRef<str>> FromIterator<S> for SeedEntityList {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        let mut list = SeedEntityList::new();
        for s in iter {
            list.add(s.as_ref(), 1);
        }
        list
    }
}

pub fn load_seeds(path: &Path) -> Result<SeedEntityList> {
    let mut list = SeedEntityList::new();
    for (lineno, line) in content_lines(path)? {
        let mut fields = line.split('\t');
        let entity = fields.next().unwrap_or_default();
        let freq = match fields.next().map(str::trim) {
            None | Some("") => 1,
            Some(f) => f
                .parse::<u64>()
                .ok()
                .filter(|&f| f >= 1)
                .ok_or_else(|| Error::parse(path, lineno, format!("bad frequency {f:?}")))?,
        };
        list.add(entity, freq);
    }
    Ok(list)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopList {
    words: BTreeSet<String>,
}

impl Default for StopList {
    fn default() -> Self {
        default_stop_words().collect()
    }
}

impl StopList {
    pub fn empty() -> Self {
        StopList {
            words: BTreeSet::new(),
        }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }
}

impl<S: AsRef<str>> FromIterator<S> for StopList {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        StopList {
            words: iter
                .into_iter()
                .map(|w| normalize_phrase(w.as_ref()))
                .filter(|w| !w.is_empty())
                .collect(),
        }
    }
}

pub fn load_stop_words(path: &Path) -> Result<StopList> {
    Ok(content_lines(path)?.into_iter().map(|(_, l)| l).collect())
}

/// Surface form → canonical actant name. Canonical names map to themselves.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AliasMap {
    map: BTreeMap<String, String>,
}

impl AliasMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, alias: &str, canonical: &str) -> Result<()> {
        let alias = normalize_phrase(alias);
        let canonical = normalize_phrase(canonical);
        if alias.is_empty() || canonical.is_empty() {
            return Err(Error::InvalidInput("empty alias or canonical name".into()));
        }
        if let Some(existing) = self.map.get(&canonical) {
            if existing != &canonical {
                return Err(Error::InvalidInput(format!(
                    "canonical name {canonical:?} is itself an alias of {existing:?}"
                )));
            }
        }
        if let Some(existing) = self.map.get(&alias) {
            if existing != &canonical {
                return Err(Error::InvalidInput(format!(
                    "{alias:?} maps to both {existing:?} and {canonical:?}"
                )));
            }
        }
        self.map.insert(canonical.clone(), canonical.clone());
        self.map.insert(alias, canonical);
        Ok(())
    }

    pub fn canonical<'a>(&'a self, name: &'a str) -> &'a str {
        self.map.get(name).map_or(name, String::as_str)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

pub fn load_aliases(path: &Path) -> Result<AliasMap> {
    let mut map = AliasMap::new();
    for (lineno, line) in content_lines(path)? {
        let (alias, canonical) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, lineno, "expected alias<TAB>canonical"))?;
        map.insert(alias, canonical)
            .map_err(|e| Error::parse(path, lineno, e.to_string()))?;
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    const GATES: &str = r#"{"doc_id":"n1","source":"news","date":"2020-04-09","arg1":"Bill Gates","arg1_head":"Gates","rel":"invented","rel_head":"invented","arg2":"5G to depopulate the world","arg2_head":"world"}"#;

    #[test]
    fn loads_extraction_record_verbatim() {
        let f = write_tmp(GATES);
        let (corpus, report) = load_tuples(f.path(), Source::News).unwrap();
        assert_eq!(report.loaded, 1);
        let t = &corpus.tuples()[0];
        assert_eq!(t.arg1, "bill gates");
        assert_eq!(t.arg1_head, "gates");
        assert_eq!(t.rel_head, "invented");
        assert_eq!(t.arg2, "5g to depopulate the world");
        assert_eq!(t.arg2_head, "world");
        assert_eq!(t.date, NaiveDate::from_ymd_opt(2020, 4, 9));
    }

    #[test]
    fn empty_file_gives_empty_corpus() {
        let f = write_tmp("");
        let (corpus, report) = load_tuples(f.path(), Source::Social).unwrap();
        assert!(corpus.is_empty());
        assert!(corpus.vocabulary().is_empty());
        assert_eq!(corpus.span(), None);
        assert_eq!(report.malformed, 0);
    }

    #[test]
    fn malformed_lines_are_counted_and_skipped() {
        let ok = r#"{"doc_id":"p","source":"social","date":null,"arg1":"corona virus","rel":"kills","arg2":"people"}"#;
        let f = write_tmp(&format!("{ok}\n{{not json\n{ok}\n"));
        let (corpus, report) = load_tuples(f.path(), Source::Social).unwrap();
        assert_eq!(corpus.len(), 2);
        assert_eq!(report.malformed, 1);
    }

    #[test]
    fn majority_malformed_is_fatal() {
        let f = write_tmp("x\ny\n{}\n");
        assert!(matches!(
            load_tuples(f.path(), Source::Social),
            Err(Error::TooManyMalformed {
                malformed: 3,
                total: 3,
                ..
            })
        ));
    }

    #[test]
    fn news_without_date_and_source_mismatch_are_malformed() {
        let undated =
            r#"{"doc_id":"n","source":"news","date":null,"arg1":"a","rel":"b","arg2":"c"}"#;
        let social =
            r#"{"doc_id":"n","source":"social","date":null,"arg1":"a","rel":"b","arg2":"c"}"#;
        let f = write_tmp(&format!("{GATES}\n{GATES}\n{undated}\n{social}\n"));
        let (corpus, report) = load_tuples(f.path(), Source::News).unwrap();
        assert_eq!((corpus.len(), report.malformed), (2, 2));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_tuples(Path::new("/nonexistent/tuples.jsonl"), Source::Social).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn vocabulary_counts_both_argument_slots() {
        let t = RelationTuple::new("d", Source::Social, None, "corona virus", "kills", "people")
            .unwrap();
        let c = Corpus::from_tuples(vec![t]);
        let expected: BTreeMap<String, u64> = [("corona", 1), ("virus", 1), ("people", 1)]
            .map(|(k, v)| (k.to_string(), v))
            .into();
        assert_eq!(c.vocabulary(), &expected);

        let t =
            RelationTuple::new("d", Source::Social, None, "virus", "infects", "the virus").unwrap();
        assert_eq!(build_vocabulary(&[t])["virus"], 2);
        assert!(build_vocabulary(&[]).is_empty());
    }

    #[test]
    fn embeddings_load_and_validate() {
        let f = write_tmp("d=4 model=test\nalpha\t1\t2\t3\t4\nbeta gamma\t0\t0\t0\t1\n");
        let (t, dups) = load_embeddings(f.path()).unwrap();
        assert_eq!((t.len(), t.dim(), dups), (2, 4, 0));

        let f = write_tmp("d=4\nalpha\t1\t2\t3\t4\nbeta\t1\t2\t3\n");
        match load_embeddings(f.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }

        let f = write_tmp("d=2\nalpha\t1\tNaN\n");
        assert!(matches!(
            load_embeddings(f.path()),
            Err(Error::Parse { line: 2, .. })
        ));

        let f = write_tmp("d=2\nalpha\t1\t2\nalpha\t3\t4\n");
        let (t, dups) = load_embeddings(f.path()).unwrap();
        assert_eq!((t.len(), dups), (1, 1));
        assert_eq!(t.get("alpha"), Some(&[3.0, 4.0][..]));
    }

    #[test]
    fn embedding_falls_back_to_token_mean() {
        let mut t = EmbeddingTable::new(2);
        t.insert("corona", vec![1.0, 0.0]).unwrap();
        t.insert("virus", vec![0.0, 1.0]).unwrap();
        assert_eq!(t.embed("corona virus"), Some(vec![0.5, 0.5]));
        assert_eq!(t.embed("bank loan"), None);
    }

    #[test]
    fn seeds_stops_and_aliases() {
        let f = write_tmp("corona\t5\nvirus\n# comment\ncorona\t2\n");
        let seeds = load_seeds(f.path()).unwrap();
        assert_eq!(seeds.frequency("corona"), Some(7));
        assert_eq!(seeds.frequency("virus"), Some(1));

        let f = write_tmp("trump\tdonald trump\ndonald\tdonald trump\n");
        let aliases = load_aliases(f.path()).unwrap();
        assert_eq!(aliases.canonical("trump"), "donald trump");
        assert_eq!(aliases.canonical("donald trump"), "donald trump");
        assert_eq!(aliases.canonical("gates"), "gates");

        let f = write_tmp("a\tb\nb\tc\n");
        assert!(load_aliases(f.path()).is_err());

        let stops = StopList::default();
        assert!(stops.contains("is") && !stops.contains("funds"));
    }

    #[test]
    fn span_tracks_dated_tuples() {
        let d = |day| NaiveDate::from_ymd_opt(2020, 3, day);
        let mk = |date| RelationTuple::new("x", Source::Social, date, "a", "r", "b").unwrap();
        let c = Corpus::from_tuples(vec![mk(d(30)), mk(None), mk(d(28))]);
        assert_eq!(c.span(), Some((d(28).unwrap(), d(30).unwrap())));
        assert_eq!(c.dated_between(d(28).unwrap(), d(30).unwrap()).count(), 1);
    }
}
