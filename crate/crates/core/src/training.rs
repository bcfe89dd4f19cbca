//! Negative sampling, the margin loss with its analytic gradients, and the
//! Riemannian SGD loop.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{DatasetBundle, Split, Triple};
use crate::error::{Error, Result};
use crate::evaluation;
use crate::geometry::{self, DEFAULT_EPS};
use crate::model::{self, ParameterStore, Variant};
use crate::rng::{self, Stream, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorruptionMode {
    /// Side chosen with the relation's tph/(tph+hpt) statistic.
    Bernoulli,
    /// Fair coin between subject and object.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub gamma: f64,
    pub lambda: f64,
    pub eta: f64,
    pub negs_e: usize,
    pub negs_r: usize,
    pub dim: usize,
    /// Permutation shift; `None` means ⌊n/2⌋.
    pub beta: Option<usize>,
    pub variant: Variant,
    pub max_epochs: usize,
    pub eval_every: usize,
    pub batches_per_epoch: usize,
    pub eps: f64,
    pub seed: u64,
    pub corruption_mode: CorruptionMode,
    /// Apply the regularizer gradient to every vector on every step
    /// instead of only to the vectors touched by the batch.
    pub full_reg_sweep: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            lambda: 0.8,
            eta: 0.01,
            negs_e: 10,
            negs_r: 0,
            dim: 100,
            beta: None,
            variant: Variant::EuclideanAdd,
            max_epochs: 2000,
            eval_every: 50,
            batches_per_epoch: 10,
            eps: DEFAULT_EPS,
            seed: 0,
            corruption_mode: CorruptionMode::Bernoulli,
            full_reg_sweep: false,
        }
    }
}

impl TrainConfig {
    pub fn beta(&self) -> usize {
        self.beta.unwrap_or(self.dim / 2)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.gamma > 0.0) {
            return bad(format!("gamma must be > 0 (got {})", self.gamma));
        }
        if !(self.lambda >= 0.0) {
            return bad(format!("lambda must be >= 0 (got {})", self.lambda));
        }
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return bad(format!("eta must be finite and >= 0 (got {})", self.eta));
        }
        if self.negs_e + self.negs_r == 0 {
            return bad("negs_e + negs_r must be >= 1".into());
        }
        if self.dim == 0 {
            return bad("dim must be >= 1".into());
        }
        if self.beta() >= self.dim {
            return bad(format!("beta {} must be < dim {}", self.beta(), self.dim));
        }
        if self.eval_every == 0 || self.batches_per_epoch == 0 {
            return bad("eval_every and batches_per_epoch must be >= 1".into());
        }
        if !(self.eps > 0.0) {
            return bad(format!("eps must be > 0 (got {})", self.eps));
        }
        Ok(())
    }
}

/// Draws `negs_e` entity-corrupted and `negs_r` relation-corrupted copies
/// of `triple`. Replacements never equal the value they replace.
pub fn sample_negatives(
    triple: &Triple,
    bundle: &DatasetBundle,
    mode: CorruptionMode,
    negs_e: usize,
    negs_r: usize,
    rng: &mut StreamRng,
) -> Result<Vec<Triple>> {
    if negs_e + negs_r == 0 {
        return Err(Error::InvalidArgument("need at least one negative".into()));
    }
    let ne = bundle.num_entities();
    let nr = bundle.num_relations();
    if negs_e > 0 && ne < 2 {
        return Err(Error::InvalidArgument("entity corruption needs |E| >= 2".into()));
    }
    if negs_r > 0 && nr < 2 {
        return Err(Error::InvalidArgument("relation corruption needs |R| >= 2".into()));
    }
    let p_subject = match mode {
        CorruptionMode::Uniform => 0.5,
        CorruptionMode::Bernoulli => bundle.bernoulli.get(triple.relation)?.p_corrupt_subject,
    };
    // uniform over the other n−1 values
    let other = |rng: &mut StreamRng, current: usize, n: usize| {
        let k = rng.gen_range(0..n - 1);
        if k >= current {
            k + 1
        } else {
            k
        }
    };
    let mut out = Vec::with_capacity(negs_e + negs_r);
    for _ in 0..negs_e {
        let mut t = *triple;
        if rng.gen_bool(p_subject) {
            t.subject = other(rng, t.subject, ne);
        } else {
            t.object = other(rng, t.object, ne);
        }
        out.push(t);
    }
    for _ in 0..negs_r {
        let mut t = *triple;
        t.relation = other(rng, t.relation, nr);
        out.push(t);
    }
    Ok(out)
}

/// A positive fact with the negatives it is contrasted against.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    pub positive: Triple,
    pub negatives: Vec<Triple>,
}

/// Sparse Euclidean gradients keyed by vector id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gradients {
    pub entities: BTreeMap<usize, Vec<f64>>,
    pub relations: BTreeMap<usize, Vec<f64>>,
}

impl Gradients {
    fn entity(&mut self, id: usize, dim: usize) -> &mut Vec<f64> {
        self.entities.entry(id).or_insert_with(|| vec![0.0; dim])
    }

    fn relation(&mut self, id: usize, dim: usize) -> &mut Vec<f64> {
        self.relations.entry(id).or_insert_with(|| vec![0.0; dim])
    }

    fn touch(&mut self, t: &Triple, dim: usize) {
        self.entity(t.subject, dim);
        self.entity(t.object, dim);
        self.relation(t.relation, dim);
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty() && self.relations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutcome {
    /// hinge + λ·regularizer
    pub loss: f64,
    pub hinge: f64,
    /// Σ (1 − ‖θ‖²) over every vector in the store.
    pub regularizer: f64,
    pub active_pairs: usize,
    /// Scores whose gradient was skipped because term and relation coincide.
    pub degenerate: usize,
    pub grads: Gradients,
}

/// Samples negatives for `positives`, then evaluates loss and gradients.
pub fn batch_loss_and_grads(
    store: &ParameterStore,
    positives: &[Triple],
    bundle: &DatasetBundle,
    config: &TrainConfig,
    rng: &mut StreamRng,
) -> Result<BatchOutcome> {
    let pairs = positives
        .iter()
        .map(|p| {
            Ok(TrainingPair {
                positive: *p,
                negatives: sample_negatives(p, bundle, config.corruption_mode, config.negs_e, config.negs_r, rng)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    loss_and_grads(store, &pairs, config)
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

struct Scratch {
    permuted: Vec<f64>,
    term: Vec<f64>,
    grad_term: Vec<f64>,
    grad_permuted: Vec<f64>,
    grad_subject: Vec<f64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self {
            permuted: vec![0.0; n],
            term: vec![0.0; n],
            grad_term: vec![0.0; n],
            grad_permuted: vec![0.0; n],
            grad_subject: vec![0.0; n],
        }
    }
}

fn score(store: &ParameterStore, t: &Triple, scratch: &mut Scratch) -> f64 {
    store.term_into(
        store.entity(t.subject),
        store.entity(t.object),
        &mut scratch.permuted,
        &mut scratch.term,
    );
    geometry::distance_unchecked(&scratch.term, store.relation(t.relation))
}

/// Adds `weight`·∇f(t) into `grads`; returns false at a coincident point.
fn accumulate_score_grad(
    store: &ParameterStore,
    t: &Triple,
    weight: f64,
    grads: &mut Gradients,
    scratch: &mut Scratch,
) -> bool {
    let n = store.dim();
    let s = store.entity(t.subject);
    let o = store.entity(t.object);
    let r = store.relation(t.relation);
    store.term_into(s, o, &mut scratch.permuted, &mut scratch.term);
    scratch.grad_term.iter_mut().for_each(|v| *v = 0.0);
    let grad_r = grads.relation(t.relation, n);
    if !geometry::accumulate_distance_grad(&scratch.term, r, weight, &mut scratch.grad_term, grad_r) {
        return false;
    }
    let perm = store.permutation();
    match store.variant() {
        Variant::EuclideanAdd => {
            let gs = grads.entity(t.subject, n);
            gs.iter_mut().zip(&scratch.grad_term).for_each(|(a, b)| *a += b);
            perm.add_inverse_into(&scratch.grad_term, grads.entity(t.object, n));
        }
        Variant::MobiusAdd => {
            scratch.grad_subject.iter_mut().for_each(|v| *v = 0.0);
            scratch.grad_permuted.iter_mut().for_each(|v| *v = 0.0);
            geometry::mobius_add_backward(
                s,
                &scratch.permuted,
                &scratch.grad_term,
                &mut scratch.grad_subject,
                &mut scratch.grad_permuted,
            );
            let gs = grads.entity(t.subject, n);
            gs.iter_mut().zip(&scratch.grad_subject).for_each(|(a, b)| *a += b);
            perm.add_inverse_into(&scratch.grad_permuted, grads.entity(t.object, n));
        }
    }
    true
}

/// Σ over every vector of (1 − ‖θ‖²).
pub fn regularizer(store: &ParameterStore) -> f64 {
    let n = store.dim();
    store
        .entity_matrix()
        .chunks_exact(n)
        .chain(store.relation_matrix().chunks_exact(n))
        .map(|row| 1.0 - geometry::sq_norm(row))
        .sum()
}

/// Loss only, for fixed pairs. Mirrors [`loss_and_grads`] without the
/// gradient bookkeeping.
pub fn total_loss(store: &ParameterStore, pairs: &[TrainingPair], config: &TrainConfig) -> Result<f64> {
    let mut scratch = Scratch::new(store.dim());
    let mut hinge = 0.0;
    for pair in pairs {
        check_ids(store, &pair.positive)?;
        let f_pos = score(store, &pair.positive, &mut scratch);
        for neg in &pair.negatives {
            check_ids(store, neg)?;
            let m = config.gamma + f_pos - score(store, neg, &mut scratch);
            if m > 0.0 {
                hinge += m;
            }
        }
    }
    Ok(hinge + config.lambda * regularizer(store))
}

/// Loss and Euclidean gradients for fixed pairs.
///
/// Every vector appearing in the pairs gets an entry in the gradient map,
/// even when all its hinges are inactive, so that the regularizer reaches
/// it. With `full_reg_sweep` every vector of the store gets one.
pub fn loss_and_grads(store: &ParameterStore, pairs: &[TrainingPair], config: &TrainConfig) -> Result<BatchOutcome> {
    let n = store.dim();
    let mut scratch = Scratch::new(n);
    let mut grads = Gradients::default();
    let mut hinge = 0.0;
    let mut active_pairs = 0;
    let mut degenerate = 0;

    for pair in pairs {
        check_ids(store, &pair.positive)?;
        grads.touch(&pair.positive, n);
        let f_pos = score(store, &pair.positive, &mut scratch);
        let mut active_here = 0usize;
        for neg in &pair.negatives {
            check_ids(store, neg)?;
            grads.touch(neg, n);
            let margin = config.gamma + f_pos - score(store, neg, &mut scratch);
            if margin > 0.0 {
                hinge += margin;
                active_here += 1;
                if !accumulate_score_grad(store, neg, -1.0, &mut grads, &mut scratch) {
                    degenerate += 1;
                }
            }
        }
        if active_here > 0
            && !accumulate_score_grad(store, &pair.positive, active_here as f64, &mut grads, &mut scratch)
        {
            degenerate += 1;
        }
        active_pairs += active_here;
    }

    let reg = regularizer(store);
    if config.lambda > 0.0 {
        if config.full_reg_sweep {
            for id in 0..store.num_entities() {
                grads.entity(id, n);
            }
            for id in 0..store.num_relations() {
                grads.relation(id, n);
            }
        }
        let two_lambda = 2.0 * config.lambda;
        for (id, g) in grads.entities.iter_mut() {
            g.iter_mut()
                .zip(store.entity(*id))
                .for_each(|(gi, th)| *gi -= two_lambda * th);
        }
        for (id, g) in grads.relations.iter_mut() {
            g.iter_mut()
                .zip(store.relation(*id))
                .for_each(|(gi, th)| *gi -= two_lambda * th);
        }
    }

    Ok(BatchOutcome {
        loss: hinge + config.lambda * reg,
        hinge,
        regularizer: reg,
        active_pairs,
        degenerate,
        grads,
    })
}

/// θ ← proj(θ − η·(1−‖θ‖²)²/4·∇θ, a_θ) for every vector with a gradient.
///
/// The whole step is rejected, leaving the store untouched, if any gradient
/// is non-finite.
pub fn rsgd_step(store: &mut ParameterStore, grads: &Gradients, eta: f64, eps: f64) -> Result<()> {
    for (kind, map) in [("entity", &grads.entities), ("relation", &grads.relations)] {
        for (id, g) in map {
            if let Some(pos) = g.iter().position(|v| !v.is_finite()) {
                return Err(Error::NumericAbort(format!(
                    "non-finite gradient at {kind} {id}, coordinate {pos} ({})",
                    g[pos]
                )));
            }
        }
    }
    let entity_radius = store.entity_radius();
    let relation_radius = store.relation_radius();
    let update = |theta: &mut [f64], g: &[f64], radius: f64, kind: &str, id: usize| -> Result<()> {
        let step = eta * geometry::riemannian_scale_sq(geometry::sq_norm(theta));
        theta.iter_mut().zip(g).for_each(|(t, gi)| *t -= step * gi);
        geometry::project_in_place(theta, radius, eps);
        let n = geometry::norm(theta);
        if !(n < radius) {
            return Err(Error::NumericAbort(format!(
                "{kind} {id} left its constraint (norm {n}, radius {radius})"
            )));
        }
        Ok(())
    };
    for (id, g) in &grads.entities {
        update(store.entity_mut(*id), g, entity_radius, "entity", *id)?;
    }
    for (id, g) in &grads.relations {
        update(store.relation_mut(*id), g, relation_radius, "relation", *id)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub epoch: usize,
    pub loss: f64,
    pub val_mrr: Option<f64>,
    pub val_hits10: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub rows: Vec<LogRow>,
}

impl TrainingLog {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,loss,val_mrr,val_hits10\n");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{}", r.epoch, r.loss, opt(r.val_mrr), opt(r.val_hits10));
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn evaluations(&self) -> impl Iterator<Item = &LogRow> {
        self.rows.iter().filter(|r| r.val_mrr.is_some())
    }
}

pub enum TrainEvent<'a> {
    EpochDone(&'a LogRow),
    Improved {
        epoch: usize,
        val_mrr: f64,
        store: &'a ParameterStore,
    },
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Best store by validation MRR, or the last one when nothing was evaluated.
    pub best: ParameterStore,
    pub last: ParameterStore,
    pub log: TrainingLog,
    pub best_epoch: Option<usize>,
    pub best_val_mrr: Option<f64>,
}

pub fn train(bundle: &DatasetBundle, config: &TrainConfig) -> Result<TrainOutcome> {
    train_with(bundle, config, |_| Ok(()))
}

/// Trains from a fresh initialization, reporting progress to `observer`.
///
/// Each epoch shuffles the training facts, splits them into
/// `batches_per_epoch` mini-batches (the last absorbs the remainder) and
/// takes one RSGD step per batch with freshly drawn negatives. Validation
/// MRR is computed every `eval_every` epochs and on the final epoch.
pub fn train_with(
    bundle: &DatasetBundle,
    config: &TrainConfig,
    mut observer: impl FnMut(TrainEvent<'_>) -> Result<()>,
) -> Result<TrainOutcome> {
    config.validate()?;
    if bundle.train.is_empty() {
        return Err(Error::InvalidArgument("training split is empty".into()));
    }
    let mut store = model::init_params(
        bundle.num_entities(),
        bundle.num_relations(),
        config.dim,
        config.beta(),
        config.variant,
        config.seed,
    )?;
    let mut shuffle_rng = rng::stream(config.seed, Stream::Shuffle);
    let mut neg_rng = rng::stream(config.seed, Stream::Negatives);
    let mut order: Vec<usize> = (0..bundle.train.len()).collect();
    let batches = config.batches_per_epoch;
    let base = order.len() / batches;

    let mut log = TrainingLog::default();
    let mut best: Option<(usize, f64, ParameterStore)> = None;

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut shuffle_rng);
        let mut hinge = 0.0;
        for b in 0..batches {
            let start = b * base;
            let end = if b + 1 == batches { order.len() } else { start + base };
            if start == end {
                continue;
            }
            let positives: Vec<Triple> = order[start..end].iter().map(|&i| bundle.train[i]).collect();
            let out = batch_loss_and_grads(&store, &positives, bundle, config, &mut neg_rng)?;
            if !out.loss.is_finite() {
                return Err(Error::NumericAbort(format!("non-finite loss at epoch {epoch}")));
            }
            hinge += out.hinge;
            rsgd_step(&mut store, &out.grads, config.eta, config.eps)?;
        }
        let loss = hinge + config.lambda * regularizer(&store);

        let mut row = LogRow {
            epoch,
            loss,
            val_mrr: None,
            val_hits10: None,
        };
        let due = epoch % config.eval_every == 0 || epoch == config.max_epochs;
        if due && !bundle.valid.is_empty() {
            store.check_invariants()?;
            let report = evaluation::evaluate_split(&store, bundle, Split::Valid, &[10])?;
            row.val_mrr = Some(report.mrr);
            row.val_hits10 = report.hits_at(10);
            if best.as_ref().map_or(true, |(_, m, _)| report.mrr > *m) {
                best = Some((epoch, report.mrr, store.clone()));
                observer(TrainEvent::Improved {
                    epoch,
                    val_mrr: report.mrr,
                    store: &store,
                })?;
            }
        }
        observer(TrainEvent::EpochDone(&row))?;
        log.rows.push(row);
    }

    let (best_epoch, best_val_mrr, best_store) = match best {
        Some((e, m, s)) => (Some(e), Some(m), s),
        None => (None, None, store.clone()),
    };
    Ok(TrainOutcome {
        best: best_store,
        last: store,
        log,
        best_epoch,
        best_val_mrr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::init_params;

    fn bundle() -> DatasetBundle {
        DatasetBundle::from_named(
            &[
                ("a", "r", "b"),
                ("b", "r", "c"),
                ("c", "q", "d"),
                ("d", "q", "a"),
                ("a", "q", "c"),
            ],
            &[("a", "r", "c")],
            &[("b", "q", "d")],
        )
        .unwrap()
    }

    fn small_config() -> TrainConfig {
        TrainConfig {
            dim: 6,
            beta: Some(2),
            negs_e: 2,
            negs_r: 1,
            lambda: 0.3,
            gamma: 1.0,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn one_entity_negative_differs_in_one_slot() {
        let b = bundle();
        let mut rng = rng::stream(1, Stream::Negatives);
        for t in &b.train {
            for mode in [CorruptionMode::Uniform, CorruptionMode::Bernoulli] {
                let negs = sample_negatives(t, &b, mode, 1, 0, &mut rng).unwrap();
                assert_eq!(negs.len(), 1);
                let n = negs[0];
                assert_eq!(n.relation, t.relation);
                assert!((n.subject != t.subject) ^ (n.object != t.object));
            }
        }
    }

    #[test]
    fn relation_negatives_always_change_the_relation() {
        let b = bundle();
        let mut rng = rng::stream(2, Stream::Negatives);
        for _ in 0..500 {
            let negs = sample_negatives(&b.train[0], &b, CorruptionMode::Uniform, 0, 1, &mut rng).unwrap();
            assert_ne!(negs[0].relation, b.train[0].relation);
            assert_eq!((negs[0].subject, negs[0].object), (b.train[0].subject, b.train[0].object));
        }
    }

    #[test]
    fn bernoulli_side_frequency() {
        // one head with five tails: p(subject) = 5/6
        let train: Vec<(String, String, String)> =
            (0..5).map(|i| ("h".into(), "r".into(), format!("t{i}"))).collect();
        let b = DatasetBundle::from_named(&train, &[], &[]).unwrap();
        let mut rng = rng::stream(3, Stream::Negatives);
        let trials = 100_000;
        let mut subject = 0;
        for _ in 0..trials {
            let n = sample_negatives(&b.train[0], &b, CorruptionMode::Bernoulli, 1, 0, &mut rng).unwrap()[0];
            if n.subject != b.train[0].subject {
                subject += 1;
            }
        }
        let freq = subject as f64 / trials as f64;
        assert!((0.82..=0.85).contains(&freq), "{freq}");
    }

    #[test]
    fn sampling_errors() {
        let b = DatasetBundle::from_named(&[("a", "r", "b")], &[], &[]).unwrap();
        let mut rng = rng::stream(0, Stream::Negatives);
        assert!(sample_negatives(&b.train[0], &b, CorruptionMode::Uniform, 0, 1, &mut rng).is_err());
        assert!(sample_negatives(&b.train[0], &b, CorruptionMode::Uniform, 0, 0, &mut rng).is_err());
        let single = DatasetBundle::from_named(&[("a", "r", "a")], &[], &[]).unwrap();
        assert!(sample_negatives(&single.train[0], &single, CorruptionMode::Uniform, 1, 0, &mut rng).is_err());
    }

    /// A store where the scores of two facts are known exactly: with s = o = 0
    /// the score is 2·artanh(‖r‖).
    fn hinge_fixture(f_pos: f64, f_neg: f64) -> (ParameterStore, TrainingPair) {
        let radius = |f: f64| (f / 2.0).tanh();
        let store = ParameterStore::from_parts(
            1,
            0,
            Variant::EuclideanAdd,
            vec![0.0, 0.0],
            vec![radius(f_pos), radius(f_neg)],
        )
        .unwrap();
        let pair = TrainingPair {
            positive: Triple::new(0, 0, 1),
            negatives: vec![Triple::new(0, 1, 1)],
        };
        (store, pair)
    }

    #[test]
    fn inactive_hinge_contributes_nothing() {
        let (store, pair) = hinge_fixture(0.5, 2.0);
        let cfg = TrainConfig {
            gamma: 1.0,
            lambda: 0.0,
            ..small_config()
        };
        let out = loss_and_grads(&store, &[pair], &cfg).unwrap();
        assert_eq!(out.loss, 0.0);
        assert_eq!(out.active_pairs, 0);
        assert!(out.grads.entities.values().chain(out.grads.relations.values()).flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn active_hinge_value() {
        let (store, pair) = hinge_fixture(1.5, 1.0);
        let cfg = TrainConfig {
            gamma: 1.0,
            lambda: 0.0,
            ..small_config()
        };
        let out = loss_and_grads(&store, &[pair], &cfg).unwrap();
        assert!((out.loss - 1.5).abs() < 1e-12, "{}", out.loss);
        assert_eq!(out.active_pairs, 1);
    }

    #[test]
    fn regularizer_value() {
        let store = ParameterStore::from_parts(1, 0, Variant::EuclideanAdd, vec![0.3], vec![0.6]).unwrap();
        let cfg = TrainConfig {
            lambda: 0.8,
            ..small_config()
        };
        let out = loss_and_grads(&store, &[], &cfg).unwrap();
        assert!((out.loss - 1.24).abs() < 1e-12);
        assert!(out.grads.is_empty());
        let sweep = TrainConfig {
            full_reg_sweep: true,
            ..cfg
        };
        let out = loss_and_grads(&store, &[], &sweep).unwrap();
        assert!((out.grads.entities[&0][0] + 2.0 * 0.8 * 0.3).abs() < 1e-15);
        assert!((out.grads.relations[&0][0] + 2.0 * 0.8 * 0.6).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_step_is_a_no_op() {
        let mut store = init_params(4, 2, 3, 1, Variant::EuclideanAdd, 0).unwrap();
        let before = store.clone();
        let mut g = Gradients::default();
        g.entities.insert(1, vec![0.0; 3]);
        rsgd_step(&mut store, &g, 0.5, DEFAULT_EPS).unwrap();
        assert_eq!(store, before);
    }

    #[test]
    fn step_at_origin_uses_quarter_scale() {
        let mut store = ParameterStore::from_parts(2, 0, Variant::EuclideanAdd, vec![0.0, 0.0], vec![0.0, 0.0]).unwrap();
        let mut g = Gradients::default();
        g.entities.insert(0, vec![1.0, 0.0]);
        rsgd_step(&mut store, &g, 0.01, DEFAULT_EPS).unwrap();
        assert!((store.entity(0)[0] + 0.0025).abs() < 1e-18);
        assert_eq!(store.entity(0)[1], 0.0);
    }

    #[test]
    fn large_steps_stay_inside_constraints() {
        let mut store = init_params(4, 2, 3, 1, Variant::EuclideanAdd, 0).unwrap();
        let mut g = Gradients::default();
        g.entities.insert(0, vec![-1e6, 2e6, 0.0]);
        g.relations.insert(1, vec![5e5, 0.0, 1e6]);
        rsgd_step(&mut store, &g, 0.8, DEFAULT_EPS).unwrap();
        store.check_invariants().unwrap();
        assert!(geometry::norm(store.entity(0)) > 0.49);
    }

    #[test]
    fn non_finite_gradient_aborts_without_touching_store() {
        let mut store = init_params(4, 2, 3, 1, Variant::EuclideanAdd, 0).unwrap();
        let before = store.clone();
        let mut g = Gradients::default();
        g.entities.insert(0, vec![1.0, 1.0, 1.0]);
        g.relations.insert(1, vec![f64::NAN, 0.0, 0.0]);
        assert!(matches!(rsgd_step(&mut store, &g, 0.1, DEFAULT_EPS), Err(Error::NumericAbort(_))));
        assert_eq!(store, before);
    }

    #[test]
    fn pure_regularizer_step_pushes_outward() {
        let store0 = ParameterStore::from_parts(
            4,
            1,
            Variant::EuclideanAdd,
            (0..20).map(|i| 0.01 * (i as f64 - 9.5)).collect(),
            (0..8).map(|i| 0.05 * (i as f64 - 3.5)).collect(),
        )
        .unwrap();
        let mut store = store0.clone();
        let cfg = TrainConfig {
            lambda: 0.5,
            full_reg_sweep: true,
            ..small_config()
        };
        let out = loss_and_grads(&store, &[], &cfg).unwrap();
        rsgd_step(&mut store, &out.grads, 0.01, DEFAULT_EPS).unwrap();
        for i in 0..5 {
            assert!(geometry::norm(store.entity(i)) > geometry::norm(store0.entity(i)));
        }
        for i in 0..2 {
            assert!(geometry::norm(store.relation(i)) > geometry::norm(store0.relation(i)));
        }
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let b = bundle();
        for variant in [Variant::EuclideanAdd, Variant::MobiusAdd] {
            let cfg = TrainConfig {
                variant,
                ..small_config()
            };
            let store = init_params(b.num_entities(), b.num_relations(), 6, 2, variant, 5).unwrap();
            // rescale rows so distances are well away from zero
            let rescale = |m: &[f64], target: f64| {
                m.chunks_exact(6)
                    .flat_map(|row| {
                        let f = target / geometry::norm(row);
                        row.iter().map(move |v| v * f)
                    })
                    .collect::<Vec<_>>()
            };
            let store = ParameterStore::from_parts(
                6,
                2,
                variant,
                rescale(store.entity_matrix(), 0.35),
                rescale(store.relation_matrix(), 0.6),
            )
            .unwrap();
            let mut rng = rng::stream(9, Stream::Negatives);
            let pairs: Vec<TrainingPair> = b
                .train
                .iter()
                .map(|p| TrainingPair {
                    positive: *p,
                    negatives: sample_negatives(p, &b, cfg.corruption_mode, 2, 1, &mut rng).unwrap(),
                })
                .collect();
            let out = loss_and_grads(&store, &pairs, &cfg).unwrap();
            assert!(out.active_pairs > 0);
            let h = 1e-6;
            let perturb = |ent: bool, id: usize, k: usize, delta: f64| {
                let mut e = store.entity_matrix().to_vec();
                let mut r = store.relation_matrix().to_vec();
                if ent {
                    e[id * 6 + k] += delta;
                } else {
                    r[id * 6 + k] += delta;
                }
                let s = ParameterStore::from_parts(6, 2, variant, e, r).unwrap();
                total_loss(&s, &pairs, &cfg).unwrap()
            };
            for (ent, map) in [(true, &out.grads.entities), (false, &out.grads.relations)] {
                for (id, g) in map {
                    for k in 0..6 {
                        let fd = (perturb(ent, *id, k, h) - perturb(ent, *id, k, -h)) / (2.0 * h);
                        let denom = fd.abs().max(g[k].abs()).max(1e-2);
                        assert!((fd - g[k]).abs() / denom < 1e-5, "{variant:?} ent={ent} id={id} k={k}: fd {fd} vs {}", g[k]);
                    }
                }
            }
        }
    }

    #[test]
    fn tiny_dataset_loss_decreases() {
        let b = bundle();
        let cfg = TrainConfig {
            lambda: 0.0,
            eta: 0.01,
            ..small_config()
        };
        let mut store = init_params(b.num_entities(), b.num_relations(), 6, 2, Variant::EuclideanAdd, 1).unwrap();
        let mut rng = rng::stream(4, Stream::Negatives);
        let pairs: Vec<TrainingPair> = b
            .train
            .iter()
            .map(|p| TrainingPair {
                positive: *p,
                negatives: sample_negatives(p, &b, cfg.corruption_mode, 2, 1, &mut rng).unwrap(),
            })
            .collect();
        let initial = total_loss(&store, &pairs, &cfg).unwrap();
        for _ in 0..200 {
            let out = loss_and_grads(&store, &pairs, &cfg).unwrap();
            rsgd_step(&mut store, &out.grads, cfg.eta, cfg.eps).unwrap();
        }
        let fin = total_loss(&store, &pairs, &cfg).unwrap();
        assert!(fin < initial, "{fin} >= {initial}");
    }

    #[test]
    fn training_is_deterministic_and_logs_evaluations() {
        let b = bundle();
        let cfg = TrainConfig {
            max_epochs: 20,
            eval_every: 5,
            batches_per_epoch: 2,
            ..small_config()
        };
        let a = train(&b, &cfg).unwrap();
        let c = train(&b, &cfg).unwrap();
        assert_eq!(a.log, c.log);
        assert_eq!(a.best, c.best);
        assert_eq!(a.log.rows.len(), 20);
        assert_eq!(a.log.evaluations().count(), 4);
        assert!(a.log.to_csv().starts_with("epoch,loss,val_mrr,val_hits10\n5,") || a.log.to_csv().contains("\n5,"));
        a.last.check_invariants().unwrap();
    }

    #[test]
    fn zero_learning_rate_freezes_parameters() {
        let b = bundle();
        let cfg = TrainConfig {
            eta: 0.0,
            max_epochs: 10,
            eval_every: 2,
            ..small_config()
        };
        let out = train(&b, &cfg).unwrap();
        let init = init_params(b.num_entities(), b.num_relations(), 6, 2, Variant::EuclideanAdd, cfg.seed).unwrap();
        assert_eq!(out.last, init);
        let mrrs: Vec<f64> = out.log.evaluations().filter_map(|r| r.val_mrr).collect();
        assert!(mrrs.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn empty_training_split_is_rejected() {
        let b = DatasetBundle::from_named::<&str>(&[], &[], &[]).unwrap();
        assert!(train(&b, &small_config()).is_err());
    }
}
