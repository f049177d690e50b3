//! Community coverage of time-bounded sub-corpora and lagged correlation of
//! the resulting series.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::{Duration, NaiveDate};
use log::warn;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Corpus;
use crate::seed;
use crate::text::count_token_runs;

/// Day-indexed values with strictly increasing days.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    points: Vec<(NaiveDate, f64)>,
    /// Width of the moving average already applied (1 = raw).
    smoothing: usize,
}

impl TimeSeries {
    pub fn new(points: Vec<(NaiveDate, f64)>) -> Result<Self> {
        if let Some(w) = points.windows(2).find(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidInput(format!(
                "series days not increasing at {}",
                w[1].0
            )));
        }
        if let Some((d, v)) = points.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite value {v} on {d}")));
        }
        Ok(TimeSeries {
            points,
            smoothing: 1,
        })
    }

    pub fn points(&self) -> &[(NaiveDate, f64)] {
        &self.points
    }

    pub fn smoothing(&self) -> usize {
        self.smoothing
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Centred moving average over `width` days. Near the ends (or around
    /// missing days) only the days present inside the window are averaged.
    pub fn smoothed(&self, width: usize) -> TimeSeries {
        let width = width.max(1);
        let before = ((width - 1) / 2) as i64;
        let after = (width / 2) as i64;
        let by_day: BTreeMap<NaiveDate, f64> = self.points.iter().copied().collect();
        let points = self
            .points
            .iter()
            .map(|&(d, _)| {
                let vals: Vec<f64> = by_day
                    .range(d - Duration::days(before)..=d + Duration::days(after))
                    .map(|(_, v)| *v)
                    .collect();
                (d, vals.iter().sum::<f64>() / vals.len() as f64)
            })
            .collect();
        TimeSeries {
            points,
            smoothing: self.smoothing * width,
        }
    }
}

/// Token counts of a sub-corpus, for scoring many vocabularies against it.
pub struct TokenCounts<'a> {
    tokens: Vec<&'a str>,
    counts: HashMap<&'a str, usize>,
}

impl<'a> TokenCounts<'a> {
    pub fn new<T: AsRef<str>>(tokens: &'a [T]) -> Self {
        let tokens: Vec<&str> = tokens.iter().map(AsRef::as_ref).collect();
        let mut counts = HashMap::new();
        for t in &tokens {
            *counts.entry(*t).or_insert(0) += 1;
        }
        TokenCounts { tokens, counts }
    }

    fn occurrences(&self, entry: &str) -> usize {
        if entry.contains(' ') {
            count_token_runs(&self.tokens, &entry.split(' ').collect::<Vec<_>>())
        } else {
            self.counts.get(entry).copied().unwrap_or(0)
        }
    }

    /// See [`coverage_score`].
    pub fn score<W: AsRef<str>>(&self, words: &[W]) -> Result<f64> {
        let vocab: BTreeSet<&str> = words
            .iter()
            .map(AsRef::as_ref)
            .filter(|w| !w.is_empty())
            .collect();
        if vocab.is_empty() {
            return Err(Error::InvalidInput("community vocabulary is empty".into()));
        }
        if self.tokens.is_empty() {
            return Ok(0.0);
        }
        let hits: usize = vocab.iter().map(|w| self.occurrences(w)).sum();
        Ok(hits as f64 / (vocab.len() * self.tokens.len()) as f64)
    }
}

/// Share of corpus tokens matching the community vocabulary, normalised by
/// vocabulary size: `Σ_w count(w in C) / (|V| · |C|)`.
///
/// Multi-word entries count contiguous occurrences. Duplicate entries are
/// counted once. An empty corpus scores 0.
pub fn coverage_score<W: AsRef<str>, T: AsRef<str>>(words: &[W], tokens: &[T]) -> Result<f64> {
    TokenCounts::new(tokens).score(words)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineParams {
    pub samples: usize,
    pub size: usize,
    pub seed: u64,
}

impl Default for BaselineParams {
    fn default() -> Self {
        BaselineParams {
            samples: 20,
            size: 500,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeCoverage {
    pub score: f64,
    pub baseline: f64,
    /// `score / baseline`; infinite when the baseline is 0 but the score is
    /// not, 0 when the score is 0.
    pub ratio: f64,
    pub infinite: bool,
    pub with_replacement: bool,
}

/// Coverage of a community relative to random communities drawn from
/// `vocab`.
pub fn relative_coverage<W: AsRef<str>, T: AsRef<str>, V: AsRef<str>>(
    words: &[W],
    tokens: &[T],
    vocab: &[V],
    params: &BaselineParams,
) -> Result<RelativeCoverage> {
    let mut pool: Vec<&str> = vocab
        .iter()
        .map(AsRef::as_ref)
        .filter(|w| !w.is_empty())
        .collect();
    pool.sort_unstable();
    pool.dedup();
    if pool.is_empty() || params.samples == 0 || params.size == 0 {
        return Err(Error::InvalidInput(
            "baseline needs a non-empty vocabulary, samples and size".into(),
        ));
    }
    let counts = TokenCounts::new(tokens);
    let score = counts.score(words)?;
    let with_replacement = pool.len() < params.size;
    if with_replacement {
        warn!(
            "vocabulary of {} entries is smaller than the baseline size {}; sampling with replacement",
            pool.len(),
            params.size
        );
    }
    let mut rng = seed::rng(params.seed);
    let mut total = 0.0;
    for _ in 0..params.samples {
        let sample: Vec<&str> = if with_replacement {
            (0..params.size)
                .map(|_| pool[rng.random_range(0..pool.len())])
                .collect()
        } else {
            index::sample(&mut rng, pool.len(), params.size)
                .into_iter()
                .map(|i| pool[i])
                .collect()
        };
        total += counts.score(&sample)?;
    }
    let baseline = total / params.samples as f64;
    let (ratio, infinite) = if score == 0.0 {
        (0.0, false)
    } else if baseline == 0.0 {
        (f64::INFINITY, true)
    } else {
        (score / baseline, false)
    };
    Ok(RelativeCoverage {
        score,
        baseline,
        ratio,
        infinite,
        with_replacement,
    })
}

/// Coverage score of `words` in the tokens of each `[start, start + width)`
/// sub-corpus of `corpus`.
pub fn coverage_series<W: AsRef<str>>(
    words: &[W],
    corpus: &Corpus,
    starts: &[NaiveDate],
    width: u32,
) -> Result<TimeSeries> {
    let points = starts
        .iter()
        .map(|&d| {
            let tokens = corpus.tokens_between(d, d + Duration::days(width as i64));
            coverage_score(words, &tokens).map(|m| (d, m))
        })
        .collect::<Result<Vec<_>>>()?;
    TimeSeries::new(points)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCorrelation {
    /// `(lag, r)` for every lag in `[-max_lag, max_lag]`; `None` where one
    /// side is constant over the overlap.
    pub values: Vec<(i64, Option<f64>)>,
    pub best_lag: Option<i64>,
    pub best: Option<f64>,
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Pearson correlation of `a(d)` with `b(d + lag)` over shared days, for
/// each lag in `[-max_lag, max_lag]`. A positive best lag means `b` trails
/// `a`. Ties in the maximum go to the smallest `|lag|`, then the smaller
/// lag.
pub fn cross_correlate(a: &TimeSeries, b: &TimeSeries, max_lag: u32) -> Result<CrossCorrelation> {
    let bmap: BTreeMap<NaiveDate, f64> = b.points.iter().copied().collect();
    let max_lag = max_lag as i64;
    let mut values = Vec::new();
    for lag in -max_lag..=max_lag {
        let (x, y): (Vec<f64>, Vec<f64>) = a
            .points
            .iter()
            .filter_map(|&(d, v)| bmap.get(&(d + Duration::days(lag))).map(|&w| (v, w)))
            .unzip();
        if x.len() < 3 {
            return Err(Error::InvalidInput(format!(
                "only {} overlapping days at lag {lag}; need at least 3",
                x.len()
            )));
        }
        let r = pearson(&x, &y);
        if r.is_none() {
            warn!("correlation undefined at lag {lag}: constant series over the overlap");
        }
        values.push((lag, r));
    }
    let best = values
        .iter()
        .filter_map(|&(lag, r)| r.map(|r| (lag, r)))
        .max_by(|a, b| {
            a.1.total_cmp(&b.1)
                .then(b.0.abs().cmp(&a.0.abs()))
                .then(b.0.cmp(&a.0))
        });
    Ok(CrossCorrelation {
        best_lag: best.map(|b| b.0),
        best: best.map(|b| b.1),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(vals: &[f64]) -> TimeSeries {
        let d0: NaiveDate = "2020-01-01".parse().unwrap();
        TimeSeries::new(
            vals.iter()
                .enumerate()
                .map(|(i, &v)| (d0 + Duration::days(i as i64), v))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn coverage_examples() {
        let c = ["5g", "tower", "5g", "virus"];
        assert_eq!(coverage_score(&["5g", "tower"], &c).unwrap(), 0.375);
        assert_eq!(coverage_score(&["bank"], &c).unwrap(), 0.0);
        assert_eq!(
            coverage_score(&["5g", "tower", "x"], &["5g"; 7]).unwrap(),
            1.0 / 3.0
        );
        assert_eq!(coverage_score(&["5g"], &[] as &[&str]).unwrap(), 0.0);
        assert!(coverage_score(&[] as &[&str], &c).is_err());
        // multi-word entries count contiguous runs
        assert_eq!(
            coverage_score(&["5g tower"], &["5g", "tower", "5g"]).unwrap(),
            1.0 / 3.0
        );
    }

    #[test]
    fn relative_coverage_zero_and_determinism() {
        let tokens = ["a", "b", "c", "a"];
        let vocab = ["a", "b", "c", "d"];
        let p = BaselineParams {
            samples: 5,
            size: 2,
            seed: 7,
        };
        let r = relative_coverage(&["zzz"], &tokens, &vocab, &p).unwrap();
        assert_eq!(r.ratio, 0.0);
        let r1 = relative_coverage(&["a"], &tokens, &vocab, &p).unwrap();
        let r2 = relative_coverage(&["a"], &tokens, &["d", "c", "b", "a"], &p).unwrap();
        assert_eq!(r1, r2);
        let r = relative_coverage(&["a"], &tokens, &["x", "y"], &p).unwrap();
        assert!(r.infinite && r.ratio.is_infinite());
    }

    #[test]
    fn self_and_shifted_correlation() {
        let a = series(&[1.0, 3.0, 2.0, 5.0, 4.0, 0.0, 2.0, 6.0, 1.0, 3.0, 2.0, 7.0]);
        let cc = cross_correlate(&a, &a, 3).unwrap();
        assert_eq!(cc.best_lag, Some(0));
        assert!((cc.best.unwrap() - 1.0).abs() < 1e-12);
        let d0: NaiveDate = "2020-01-01".parse().unwrap();
        let shifted = TimeSeries::new(
            a.points()
                .iter()
                .map(|&(d, v)| (d + Duration::days(3), v))
                .collect(),
        )
        .unwrap();
        assert_eq!(cross_correlate(&a, &shifted, 4).unwrap().best_lag, Some(3));
        let flat =
            TimeSeries::new((0..6).map(|i| (d0 + Duration::days(i), 1.0)).collect()).unwrap();
        let cc = cross_correlate(&flat, &flat, 1).unwrap();
        assert!(cc.values.iter().all(|(_, r)| r.is_none()));
        assert_eq!(cc.best_lag, None);
        assert!(cross_correlate(&series(&[1.0, 2.0, 3.0]), &series(&[1.0, 2.0, 3.0]), 1).is_err());
    }

    #[test]
    fn smoothing_truncates_at_edges() {
        let s = series(&[0.0, 0.0, 5.0, 0.0, 0.0]).smoothed(5);
        let v: Vec<f64> = s.points().iter().map(|p| p.1).collect();
        assert_eq!(v, vec![5.0 / 3.0, 1.25, 1.0, 1.25, 5.0 / 3.0]);
        assert_eq!(s.smoothing(), 5);
    }
}
