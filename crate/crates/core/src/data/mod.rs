//! Dataset ingestion: vocabularies, triple files, filter sets and
//! corruption statistics.

mod bernoulli;
mod degrees;

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use bernoulli::{compute_bernoulli_stats, BernoulliStats, BernoulliTable};
pub use degrees::{
    degree_analysis, degree_analysis_with_min, discrete_power_law_mle, hurwitz_zeta, DegreeReport,
    DegreeSummary, HistogramBin,
};

/// A fact `relation(subject, object)` over dense ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub subject: usize,
    pub relation: usize,
    pub object: usize,
}

impl Triple {
    pub fn new(subject: usize, relation: usize, object: usize) -> Self {
        Self {
            subject,
            relation,
            object,
        }
    }
}

#[derive(Debug, Clone, Default)]
struct SymbolTable {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl SymbolTable {
    fn get(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    fn insert(&mut self, name: &str) -> usize {
        if let Some(id) = self.index.get(name) {
            return *id;
        }
        let id = self.names.len();
        self.names.push(name.to_owned());
        self.index.insert(name.to_owned(), id);
        id
    }

    fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        for name in &self.names {
            hasher.update(name.as_bytes());
            hasher.update(b"\n");
        }
        hex::encode(hasher.finalize())
    }
}

/// Bijective name ↔ id maps for entities and relations, ids dense from 0
/// in first-appearance order.
#[derive(Debug, Clone, Default)]
pub struct Vocabulary {
    entities: SymbolTable,
    relations: SymbolTable,
    sealed: bool,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Once sealed, unknown symbols are rejected instead of registered.
    pub fn seal(&mut self) {
        self.sealed = true;
    }

    pub fn unseal(&mut self) {
        self.sealed = false;
    }

    pub fn is_sealed(&self) -> bool {
        self.sealed
    }

    pub fn num_entities(&self) -> usize {
        self.entities.names.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.names.len()
    }

    pub fn entity_id(&self, name: &str) -> Option<usize> {
        self.entities.get(name)
    }

    pub fn relation_id(&self, name: &str) -> Option<usize> {
        self.relations.get(name)
    }

    pub fn entity_name(&self, id: usize) -> Option<&str> {
        self.entities.names.get(id).map(String::as_str)
    }

    pub fn relation_name(&self, id: usize) -> Option<&str> {
        self.relations.names.get(id).map(String::as_str)
    }

    pub fn entity_names(&self) -> &[String] {
        &self.entities.names
    }

    pub fn relation_names(&self) -> &[String] {
        &self.relations.names
    }

    pub fn intern_entity(&mut self, name: &str) -> Result<usize> {
        match self.entities.get(name) {
            Some(id) => Ok(id),
            None if self.sealed => Err(Error::UnknownSymbol {
                kind: "entity",
                name: name.to_owned(),
            }),
            None => Ok(self.entities.insert(name)),
        }
    }

    pub fn intern_relation(&mut self, name: &str) -> Result<usize> {
        match self.relations.get(name) {
            Some(id) => Ok(id),
            None if self.sealed => Err(Error::UnknownSymbol {
                kind: "relation",
                name: name.to_owned(),
            }),
            None => Ok(self.relations.insert(name)),
        }
    }

    pub fn intern_triple(&mut self, subject: &str, relation: &str, object: &str) -> Result<Triple> {
        let s = self.intern_entity(subject)?;
        let r = self.intern_relation(relation)?;
        let o = self.intern_entity(object)?;
        Ok(Triple::new(s, r, o))
    }

    /// SHA-256 over the newline-terminated entity names in id order.
    pub fn entity_digest(&self) -> String {
        self.entities.digest()
    }

    pub fn relation_digest(&self) -> String {
        self.relations.digest()
    }

    pub fn names_of(&self, t: &Triple) -> Option<(&str, &str, &str)> {
        Some((
            self.entity_name(t.subject)?,
            self.relation_name(t.relation)?,
            self.entity_name(t.object)?,
        ))
    }
}

/// Reads a `subject<TAB>relation<TAB>object` file.
///
/// Blank lines and lines starting with `#` are skipped. Symbols not yet in
/// the vocabulary are appended in order of first appearance, unless the
/// vocabulary is sealed.
pub fn load_triples(path: &Path, vocab: Option<Vocabulary>) -> Result<(Vec<Triple>, Vocabulary)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut vocab = vocab.unwrap_or_default();
    let triples = parse_triples(&text, path, &mut vocab)?;
    Ok((triples, vocab))
}

fn parse_triples(text: &str, path: &Path, vocab: &mut Vocabulary) -> Result<Vec<Triple>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let parse_err = |message: String| Error::Parse {
            path: path.to_owned(),
            line: idx + 1,
            message,
        };
        if fields.len() != 3 {
            return Err(parse_err(format!(
                "expected 3 tab-separated fields, found {}",
                fields.len()
            )));
        }
        if fields.iter().any(|f| f.is_empty()) {
            return Err(parse_err("empty field".into()));
        }
        let t = vocab
            .intern_triple(fields[0], fields[1], fields[2])
            .map_err(|e| parse_err(e.to_string()))?;
        out.push(t);
    }
    Ok(out)
}

pub fn write_triples(path: &Path, triples: &[Triple], vocab: &Vocabulary) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for t in triples {
        let (s, r, o) = vocab.names_of(t).ok_or_else(|| {
            Error::InvalidArgument(format!("triple {t:?} not covered by vocabulary"))
        })?;
        writeln!(w, "{s}\t{r}\t{o}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }

    pub fn file_name(self) -> &'static str {
        match self {
            Split::Train => "train.txt",
            Split::Valid => "valid.txt",
            Split::Test => "test.txt",
        }
    }
}

/// All known-true triples, indexed for both query directions.
#[derive(Debug, Clone, Default)]
pub struct FilterSet {
    all: HashSet<Triple>,
    objects: HashMap<(usize, usize), Vec<usize>>,
    subjects: HashMap<(usize, usize), Vec<usize>>,
}

impl FilterSet {
    pub fn from_triples<'a>(triples: impl IntoIterator<Item = &'a Triple>) -> Self {
        let mut set = FilterSet::default();
        for t in triples {
            if set.all.insert(*t) {
                set.objects
                    .entry((t.subject, t.relation))
                    .or_default()
                    .push(t.object);
                set.subjects
                    .entry((t.relation, t.object))
                    .or_default()
                    .push(t.subject);
            }
        }
        for v in set.objects.values_mut().chain(set.subjects.values_mut()) {
            v.sort_unstable();
        }
        set
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.all.contains(t)
    }

    pub fn len(&self) -> usize {
        self.all.len()
    }

    pub fn is_empty(&self) -> bool {
        self.all.is_empty()
    }

    /// Known objects `o` with `relation(subject, o)`.
    pub fn known_objects(&self, subject: usize, relation: usize) -> &[usize] {
        self.objects
            .get(&(subject, relation))
            .map_or(&[], Vec::as_slice)
    }

    /// Known subjects `s` with `relation(s, object)`.
    pub fn known_subjects(&self, relation: usize, object: usize) -> &[usize] {
        self.subjects
            .get(&(relation, object))
            .map_or(&[], Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Triple> {
        self.all.iter()
    }
}

/// Train/valid/test splits with their shared vocabulary and derived indexes.
#[derive(Debug, Clone)]
pub struct DatasetBundle {
    pub train: Vec<Triple>,
    pub valid: Vec<Triple>,
    pub test: Vec<Triple>,
    pub vocab: Vocabulary,
    pub filter: FilterSet,
    pub bernoulli: BernoulliTable,
}

impl DatasetBundle {
    pub fn from_splits(
        train: Vec<Triple>,
        valid: Vec<Triple>,
        test: Vec<Triple>,
        mut vocab: Vocabulary,
    ) -> Result<Self> {
        let ne = vocab.num_entities();
        let nr = vocab.num_relations();
        for t in train.iter().chain(&valid).chain(&test) {
            if t.subject >= ne || t.object >= ne {
                return Err(Error::IdOutOfRange {
                    kind: "entity",
                    id: t.subject.max(t.object),
                    size: ne,
                });
            }
            if t.relation >= nr {
                return Err(Error::IdOutOfRange {
                    kind: "relation",
                    id: t.relation,
                    size: nr,
                });
            }
        }
        vocab.seal();
        let filter = FilterSet::from_triples(train.iter().chain(&valid).chain(&test));
        let bernoulli = compute_bernoulli_stats(&train, nr);
        Ok(Self {
            train,
            valid,
            test,
            vocab,
            filter,
            bernoulli,
        })
    }

    /// Builds a bundle from symbolic triples, assigning ids in
    /// first-appearance order over train, then valid, then test.
    pub fn from_named<S: AsRef<str>>(
        train: &[(S, S, S)],
        valid: &[(S, S, S)],
        test: &[(S, S, S)],
    ) -> Result<Self> {
        let mut vocab = Vocabulary::new();
        let mut intern = |rows: &[(S, S, S)]| -> Result<Vec<Triple>> {
            rows.iter()
                .map(|(s, r, o)| vocab.intern_triple(s.as_ref(), r.as_ref(), o.as_ref()))
                .collect()
        };
        let train = intern(train)?;
        let valid = intern(valid)?;
        let test = intern(test)?;
        Self::from_splits(train, valid, test, vocab)
    }

    /// Loads `train.txt`, `valid.txt` and `test.txt` from `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let path_of = |s: Split| -> Result<PathBuf> {
            let p = dir.join(s.file_name());
            if p.is_file() {
                Ok(p)
            } else {
                Err(Error::io(
                    p,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "missing split file"),
                ))
            }
        };
        let (train, vocab) = load_triples(&path_of(Split::Train)?, None)?;
        let (valid, vocab) = load_triples(&path_of(Split::Valid)?, Some(vocab))?;
        let (test, vocab) = load_triples(&path_of(Split::Test)?, Some(vocab))?;
        Self::from_splits(train, valid, test, vocab)
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for split in [Split::Train, Split::Valid, Split::Test] {
            write_triples(&dir.join(split.file_name()), self.split(split), &self.vocab)?;
        }
        Ok(())
    }

    pub fn split(&self, split: Split) -> &[Triple] {
        match split {
            Split::Train => &self.train,
            Split::Valid => &self.valid,
            Split::Test => &self.test,
        }
    }

    pub fn num_entities(&self) -> usize {
        self.vocab.num_entities()
    }

    pub fn num_relations(&self) -> usize {
        self.vocab.num_relations()
    }

    pub fn all_triples(&self) -> impl Iterator<Item = &Triple> {
        self.train.iter().chain(&self.valid).chain(&self.test)
    }
}
