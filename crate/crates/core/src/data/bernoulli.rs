use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::Triple;
use crate::error::{Error, Result};

/// Per-relation corruption statistics: mean distinct tails per head,
/// mean distinct heads per tail, and the resulting probability of
/// corrupting the subject.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BernoulliStats {
    pub tph: f64,
    pub hpt: f64,
    pub p_corrupt_subject: f64,
}

impl BernoulliStats {
    pub fn p_corrupt_object(&self) -> f64 {
        1.0 - self.p_corrupt_subject
    }
}

#[derive(Debug, Clone, Default)]
pub struct BernoulliTable {
    stats: Vec<Option<BernoulliStats>>,
}

impl BernoulliTable {
    pub fn get(&self, relation: usize) -> Result<&BernoulliStats> {
        self.stats
            .get(relation)
            .and_then(Option::as_ref)
            .ok_or(Error::EmptyRelation(relation))
    }

    pub fn len(&self) -> usize {
        self.stats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stats.is_empty()
    }
}

pub fn compute_bernoulli_stats(train: &[Triple], num_relations: usize) -> BernoulliTable {
    let mut tails: Vec<BTreeMap<usize, BTreeSet<usize>>> = vec![BTreeMap::new(); num_relations];
    let mut heads: Vec<BTreeMap<usize, BTreeSet<usize>>> = vec![BTreeMap::new(); num_relations];
    for t in train {
        if t.relation >= num_relations {
            continue;
        }
        tails[t.relation]
            .entry(t.subject)
            .or_default()
            .insert(t.object);
        heads[t.relation]
            .entry(t.object)
            .or_default()
            .insert(t.subject);
    }
    let mean_size = |m: &BTreeMap<usize, BTreeSet<usize>>| {
        m.values().map(|s| s.len()).sum::<usize>() as f64 / m.len() as f64
    };
    let stats = tails
        .iter()
        .zip(&heads)
        .map(|(t, h)| {
            if t.is_empty() {
                return None;
            }
            let tph = mean_size(t);
            let hpt = mean_size(h);
            Some(BernoulliStats {
                tph,
                hpt,
                p_corrupt_subject: tph / (tph + hpt),
            })
        })
        .collect();
    BernoulliTable { stats }
}
