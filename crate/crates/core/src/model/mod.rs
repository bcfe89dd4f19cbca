//! Parameter storage, initialization and scoring.

mod checkpoint;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Triple;
use crate::error::{Error, Result};
use crate::geometry::{self, PermutationSpec, DEFAULT_EPS};
use crate::rng::{self, Stream};

pub use checkpoint::{load_checkpoint, save_checkpoint, sidecar_paths, CheckpointManifest};

pub const ENTITY_RADIUS: f64 = 0.5;
pub const RELATION_RADIUS: f64 = 1.0;

/// How the subject and the permuted object are composed into a term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// `s + Π_β o` with entity norms below ½.
    EuclideanAdd,
    /// `s ⊕ Π_β o` with entities anywhere in the ball.
    MobiusAdd,
}

impl Variant {
    pub fn entity_radius(self) -> f64 {
        match self {
            Variant::EuclideanAdd => ENTITY_RADIUS,
            Variant::MobiusAdd => RELATION_RADIUS,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::EuclideanAdd => "euclidean-add",
            Variant::MobiusAdd => "mobius-add",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean-add" => Ok(Variant::EuclideanAdd),
            "mobius-add" => Ok(Variant::MobiusAdd),
            other => Err(Error::InvalidArgument(format!("unknown variant `{other}`"))),
        }
    }
}

/// All entity and relation vectors, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterStore {
    dim: usize,
    permutation: PermutationSpec,
    variant: Variant,
    pub(crate) entities: Vec<f64>,
    pub(crate) relations: Vec<f64>,
}

impl ParameterStore {
    /// Wraps raw matrices, checking shapes and norm constraints.
    pub fn from_parts(
        dim: usize,
        beta: usize,
        variant: Variant,
        entities: Vec<f64>,
        relations: Vec<f64>,
    ) -> Result<Self> {
        if dim == 0 || entities.len() % dim != 0 || relations.len() % dim != 0 {
            return Err(Error::InvalidArgument(format!(
                "matrix sizes {} / {} are not multiples of dimension {dim}",
                entities.len(),
                relations.len()
            )));
        }
        let store = Self {
            dim,
            permutation: PermutationSpec::new(dim, beta)?,
            variant,
            entities,
            relations,
        };
        store.check_invariants()?;
        Ok(store)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn beta(&self) -> usize {
        self.permutation.shift()
    }

    pub fn permutation(&self) -> &PermutationSpec {
        &self.permutation
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn entity_radius(&self) -> f64 {
        self.variant.entity_radius()
    }

    pub fn relation_radius(&self) -> f64 {
        RELATION_RADIUS
    }

    pub fn num_entities(&self) -> usize {
        self.entities.len() / self.dim
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len() / self.dim
    }

    #[inline]
    pub fn entity(&self, id: usize) -> &[f64] {
        &self.entities[id * self.dim..(id + 1) * self.dim]
    }

    #[inline]
    pub fn relation(&self, id: usize) -> &[f64] {
        &self.relations[id * self.dim..(id + 1) * self.dim]
    }

    #[inline]
    pub(crate) fn entity_mut(&mut self, id: usize) -> &mut [f64] {
        &mut self.entities[id * self.dim..(id + 1) * self.dim]
    }

    #[inline]
    pub(crate) fn relation_mut(&mut self, id: usize) -> &mut [f64] {
        &mut self.relations[id * self.dim..(id + 1) * self.dim]
    }

    pub fn entity_matrix(&self) -> &[f64] {
        &self.entities
    }

    pub fn relation_matrix(&self) -> &[f64] {
        &self.relations
    }

    pub fn mean_entity_norm(&self) -> f64 {
        let n = self.num_entities();
        (0..n).map(|i| geometry::norm(self.entity(i))).sum::<f64>() / n.max(1) as f64
    }

    /// Every entity strictly inside its radius, every relation inside the ball.
    pub fn check_invariants(&self) -> Result<()> {
        let check = |rows: &[f64], radius: f64, kind: &str| -> Result<()> {
            for (i, row) in rows.chunks_exact(self.dim).enumerate() {
                if row.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite {
                        context: "parameter store",
                    });
                }
                let n = geometry::norm(row);
                if n >= radius {
                    return Err(Error::InvalidArgument(format!(
                        "{kind} {i} has norm {n} >= {radius}"
                    )));
                }
            }
            Ok(())
        };
        check(&self.entities, self.entity_radius(), "entity")?;
        check(&self.relations, self.relation_radius(), "relation")
    }

    fn check_entity(&self, id: usize) -> Result<()> {
        if id >= self.num_entities() {
            return Err(Error::IdOutOfRange {
                kind: "entity",
                id,
                size: self.num_entities(),
            });
        }
        Ok(())
    }

    fn check_triple(&self, t: &Triple) -> Result<()> {
        self.check_entity(t.subject)?;
        self.check_entity(t.object)?;
        if t.relation >= self.num_relations() {
            return Err(Error::IdOutOfRange {
                kind: "relation",
                id: t.relation,
                size: self.num_relations(),
            });
        }
        Ok(())
    }

    /// Writes the term vector of `(s, o)` into `out`, using `scratch` for Π_β o.
    #[inline]
    pub fn term_into(&self, s: &[f64], o: &[f64], scratch: &mut [f64], out: &mut [f64]) {
        self.permutation.apply_into(o, scratch);
        match self.variant {
            Variant::EuclideanAdd => {
                for ((t, a), b) in out.iter_mut().zip(s).zip(scratch.iter()) {
                    *t = a + b;
                }
            }
            Variant::MobiusAdd => geometry::mobius_add_into(s, scratch, out),
        }
    }
}

/// Glorot-uniform initialization followed by projection onto each
/// vector's constraint radius.
pub fn init_params(
    num_entities: usize,
    num_relations: usize,
    dim: usize,
    beta: usize,
    variant: Variant,
    seed: u64,
) -> Result<ParameterStore> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be >= 1".into()));
    }
    let mut rng = rng::stream(seed, Stream::Init);
    let mut matrix = |rows: usize, radius: f64| {
        let bound = (6.0 / (rows + dim) as f64).sqrt();
        let mut m: Vec<f64> = (0..rows * dim)
            .map(|_| rng.gen_range(-bound..=bound))
            .collect();
        for row in m.chunks_exact_mut(dim) {
            geometry::project_in_place(row, radius, DEFAULT_EPS);
        }
        m
    };
    let entities = matrix(num_entities, variant.entity_radius());
    let relations = matrix(num_relations, RELATION_RADIUS);
    ParameterStore::from_parts(dim, beta, variant, entities, relations)
}

/// The composite vector for the pair `(s, o)`.
pub fn term_embedding(store: &ParameterStore, subject: usize, object: usize) -> Result<Vec<f64>> {
    store.check_entity(subject)?;
    store.check_entity(object)?;
    let n = store.dim();
    let mut scratch = vec![0.0; n];
    let mut out = vec![0.0; n];
    store.term_into(store.entity(subject), store.entity(object), &mut scratch, &mut out);
    Ok(out)
}

/// Implausibility of a fact: hyperbolic distance between its term vector
/// and its relation vector. Lower is more plausible.
pub fn score_hyperkg(store: &ParameterStore, triple: &Triple) -> Result<f64> {
    store.check_triple(triple)?;
    let term = term_embedding(store, triple.subject, triple.object)?;
    geometry::poincare_distance(&term, store.relation(triple.relation))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    L2,
}

impl Norm {
    pub fn of(self, x: &[f64]) -> f64 {
        match self {
            Norm::L1 => x.iter().map(|v| v.abs()).sum(),
            Norm::L2 => geometry::norm(x),
        }
    }
}

/// ‖s + r − o‖ for plain vectors.
pub fn transe_distance(s: &[f64], r: &[f64], o: &[f64], norm: Norm) -> f64 {
    let v: Vec<f64> = s.iter().zip(r).zip(o).map(|((a, b), c)| a + b - c).collect();
    norm.of(&v)
}

/// Unconstrained Euclidean entity and relation vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct TransEStore {
    pub dim: usize,
    pub entities: Vec<Vec<f64>>,
    pub relations: Vec<Vec<f64>>,
}

pub fn score_transe(store: &TransEStore, triple: &Triple, norm: Norm) -> Result<f64> {
    fn get<'a>(rows: &'a [Vec<f64>], id: usize, kind: &'static str) -> Result<&'a [f64]> {
        rows.get(id).map(Vec::as_slice).ok_or(Error::IdOutOfRange {
            kind,
            id,
            size: rows.len(),
        })
    }
    let s = get(&store.entities, triple.subject, "entity")?;
    let r = get(&store.relations, triple.relation, "relation")?;
    let o = get(&store.entities, triple.object, "entity")?;
    Ok(transe_distance(s, r, o, norm))
}
