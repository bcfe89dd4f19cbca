//! Filtered link-prediction ranking.
//!
//! Every test fact yields two queries, `R(s, ?)` and `R(?, o)`. All
//! entities are scored as completions; competitors that form a known-true
//! fact are removed, and the gold completion is ranked with the mid-rank
//! rule `1 + #better + #tied / 2`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{DatasetBundle, Split, Triple};
use crate::error::{Error, Result};
use crate::geometry;
use crate::model::ParameterStore;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Subject,
    Object,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Subject => "subject",
            Side::Object => "object",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueryRank {
    pub triple: Triple,
    pub side: Side,
    pub rank: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub per_query: Vec<QueryRank>,
    pub mrr: f64,
    pub hits: BTreeMap<usize, f64>,
}

/// The machine-readable part of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub mrr: f64,
    pub hits: BTreeMap<usize, f64>,
    pub n_queries: usize,
}

impl EvalReport {
    pub fn n_queries(&self) -> usize {
        self.per_query.len()
    }

    pub fn hits_at(&self, k: usize) -> Option<f64> {
        self.hits.get(&k).copied()
    }

    pub fn summary(&self) -> EvalSummary {
        EvalSummary {
            mrr: self.mrr,
            hits: self.hits.clone(),
            n_queries: self.n_queries(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.summary())?)
    }

    /// `subject,relation,object,side,rank` with vocabulary names.
    pub fn write_per_query_csv(&self, path: &Path, bundle: &DatasetBundle) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "subject,relation,object,side,rank").map_err(io)?;
        for q in &self.per_query {
            let (s, r, o) = bundle.vocab.names_of(&q.triple).ok_or_else(|| {
                Error::InvalidArgument(format!("triple {:?} not in vocabulary", q.triple))
            })?;
            writeln!(
                w,
                "{},{},{},{},{}",
                csv_field(s),
                csv_field(r),
                csv_field(o),
                q.side.as_str(),
                q.rank
            )
            .map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

fn csv_field(s: &str) -> std::borrow::Cow<'_, str> {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\"")).into()
    } else {
        s.into()
    }
}

/// Scores of every entity as the completion of `triple` on `side`.
pub fn candidate_scores(store: &ParameterStore, triple: &Triple, side: Side) -> Vec<f64> {
    let n = store.dim();
    let mut scratch = vec![0.0; n];
    let mut term = vec![0.0; n];
    let r = store.relation(triple.relation);
    (0..store.num_entities())
        .map(|c| {
            let (s, o) = match side {
                Side::Subject => (store.entity(c), store.entity(triple.object)),
                Side::Object => (store.entity(triple.subject), store.entity(c)),
            };
            store.term_into(s, o, &mut scratch, &mut term);
            geometry::distance_unchecked(&term, r)
        })
        .collect()
}

fn check_ids(store: &ParameterStore, t: &Triple) -> Result<()> {
    let ne = store.num_entities();
    if t.subject >= ne || t.object >= ne {
        return Err(Error::IdOutOfRange {
            kind: "entity",
            id: t.subject.max(t.object),
            size: ne,
        });
    }
    if t.relation >= store.num_relations() {
        return Err(Error::IdOutOfRange {
            kind: "relation",
            id: t.relation,
            size: store.num_relations(),
        });
    }
    Ok(())
}

fn known_competitors<'a>(bundle: &'a DatasetBundle, t: &Triple, side: Side) -> &'a [usize] {
    match side {
        Side::Subject => bundle.filter.known_subjects(t.relation, t.object),
        Side::Object => bundle.filter.known_objects(t.subject, t.relation),
    }
}

fn gold_of(t: &Triple, side: Side) -> usize {
    match side {
        Side::Subject => t.subject,
        Side::Object => t.object,
    }
}

/// Mid-rank of the gold entity among `scores`, ignoring every candidate
/// listed in `filtered` other than the gold itself.
pub fn filtered_rank(scores: &[f64], gold: usize, filtered: &[usize]) -> f64 {
    let g = scores[gold];
    let (mut less, mut equal) = (0usize, 0usize);
    for (c, &s) in scores.iter().enumerate() {
        if c == gold {
            continue;
        }
        if s < g {
            less += 1;
        } else if s == g {
            equal += 1;
        }
    }
    for &c in filtered {
        if c == gold {
            continue;
        }
        let s = scores[c];
        if s < g {
            less -= 1;
        } else if s == g {
            equal -= 1;
        }
    }
    1.0 + less as f64 + equal as f64 / 2.0
}

pub fn rank_query(store: &ParameterStore, triple: &Triple, side: Side, bundle: &DatasetBundle) -> Result<f64> {
    check_ids(store, triple)?;
    let scores = candidate_scores(store, triple, side);
    Ok(filtered_rank(
        &scores,
        gold_of(triple, side),
        known_competitors(bundle, triple, side),
    ))
}

/// MRR and Hits@k over a list of ranks.
pub fn metrics_from_ranks(ranks: &[f64], ks: &[usize]) -> (f64, BTreeMap<usize, f64>) {
    let n = ranks.len().max(1) as f64;
    let mrr = ranks.iter().map(|r| 1.0 / r).sum::<f64>() / n;
    let hits = ks
        .iter()
        .map(|&k| {
            let count = ranks.iter().filter(|&&r| r <= k as f64).count();
            (k, count as f64 / n)
        })
        .collect();
    (mrr, hits)
}

/// Filtered evaluation on the test split.
pub fn evaluate(store: &ParameterStore, bundle: &DatasetBundle, ks: &[usize]) -> Result<EvalReport> {
    evaluate_split(store, bundle, Split::Test, ks)
}

pub fn evaluate_split(
    store: &ParameterStore,
    bundle: &DatasetBundle,
    split: Split,
    ks: &[usize],
) -> Result<EvalReport> {
    let triples = bundle.split(split);
    if triples.is_empty() {
        return Err(Error::InvalidArgument(format!("{split:?} split is empty")));
    }
    let queries: Vec<(Triple, Side)> = triples
        .iter()
        .flat_map(|t| [(*t, Side::Subject), (*t, Side::Object)])
        .collect();
    let per_query = queries
        .par_iter()
        .map(|(t, side)| {
            rank_query(store, t, *side, bundle).map(|rank| QueryRank {
                triple: *t,
                side: *side,
                rank,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ranks: Vec<f64> = per_query.iter().map(|q| q.rank).collect();
    let (mrr, hits) = metrics_from_ranks(&ranks, ks);
    Ok(EvalReport {
        per_query,
        mrr,
        hits,
    })
}

/// Expected MRR when the gold's position among the surviving candidates is
/// uniform: the mean over queries of H_C / C.
pub fn random_baseline_mrr(bundle: &DatasetBundle, split: Split) -> f64 {
    let ne = bundle.num_entities();
    let triples = bundle.split(split);
    let mut total = 0.0;
    let mut count = 0usize;
    for t in triples {
        for side in [Side::Subject, Side::Object] {
            let gold = gold_of(t, side);
            let removed = known_competitors(bundle, t, side)
                .iter()
                .filter(|&&c| c != gold)
                .count();
            let c = ne - removed;
            let harmonic: f64 = (1..=c).map(|k| 1.0 / k as f64).sum();
            total += harmonic / c as f64;
            count += 1;
        }
    }
    total / count.max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_params, ParameterStore, Variant};

    #[test]
    fn unique_minimum_is_rank_one() {
        assert_eq!(filtered_rank(&[0.1, 0.5, 0.7], 0, &[]), 1.0);
    }

    #[test]
    fn single_tie_is_rank_one_and_a_half() {
        assert_eq!(filtered_rank(&[0.3, 0.3, 0.9], 0, &[]), 1.5);
    }

    #[test]
    fn filtered_competitor_is_dropped() {
        // candidate 0 beats gold 1 but is a known fact
        assert_eq!(filtered_rank(&[0.1, 0.2, 0.9], 1, &[]), 2.0);
        assert_eq!(filtered_rank(&[0.1, 0.2, 0.9], 1, &[0, 1]), 1.0);
    }

    #[test]
    fn metric_arithmetic() {
        let (mrr, hits) = metrics_from_ranks(&[1.0, 2.0, 4.0], &[1, 3, 10]);
        assert!((mrr - 1.75 / 3.0).abs() < 1e-15);
        assert_eq!(hits[&10], 1.0);
        assert_eq!(hits[&3], 2.0 / 3.0);
        assert_eq!(hits[&1], 1.0 / 3.0);
    }

    fn toy_bundle() -> DatasetBundle {
        DatasetBundle::from_named(
            &[("a", "r", "b"), ("b", "r", "c"), ("c", "q", "a")],
            &[("a", "r", "c")],
            &[("a", "r", "c"), ("b", "q", "b")],
        )
        .unwrap()
    }

    #[test]
    fn degenerate_store_ties_everything() {
        let bundle = toy_bundle();
        let ne = bundle.num_entities();
        let entities: Vec<f64> = (0..ne).flat_map(|_| [0.1, -0.2]).collect();
        let store = ParameterStore::from_parts(2, 1, Variant::EuclideanAdd, entities, vec![0.0, 0.3, 0.2, 0.0]).unwrap();
        let report = evaluate(&store, &bundle, &[1, 10]).unwrap();
        for q in &report.per_query {
            let gold = gold_of(&q.triple, q.side);
            let removed = known_competitors(&bundle, &q.triple, q.side)
                .iter()
                .filter(|&&c| c != gold)
                .count();
            let survivors = (ne - removed) as f64;
            assert_eq!(q.rank, 1.0 + (survivors - 1.0) / 2.0);
        }
    }

    #[test]
    fn evaluation_is_repeatable_and_bounded() {
        let bundle = toy_bundle();
        let store = init_params(bundle.num_entities(), bundle.num_relations(), 4, 2, Variant::EuclideanAdd, 3).unwrap();
        let a = evaluate(&store, &bundle, &[1, 3, 10]).unwrap();
        let b = evaluate(&store, &bundle, &[1, 3, 10]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_queries(), 4);
        assert!(a.mrr > 0.0 && a.mrr <= 1.0);
        assert!(a.hits[&1] <= a.hits[&3] && a.hits[&3] <= a.hits[&10]);
        let json: serde_json::Value = serde_json::from_str(&a.to_json().unwrap()).unwrap();
        assert_eq!(json["n_queries"], 4);
    }

    #[test]
    fn random_baseline_for_unfiltered_queries() {
        let bundle = DatasetBundle::from_named(&[("a", "r", "b"), ("c", "r", "d")], &[], &[("a", "r", "d")]).unwrap();
        // four entities; (a,r,?) has b filtered, (?,r,d) has c filtered
        let expected = (1.0 + 0.5 + 1.0 / 3.0) / 3.0;
        assert!((random_baseline_mrr(&bundle, Split::Test) - expected).abs() < 1e-15);
    }

    #[test]
    fn empty_split_is_an_error() {
        let bundle = DatasetBundle::from_named(&[("a", "r", "b")], &[], &[]).unwrap();
        let store = init_params(2, 1, 2, 0, Variant::EuclideanAdd, 1).unwrap();
        assert!(evaluate(&store, &bundle, &[10]).is_err());
    }
}
