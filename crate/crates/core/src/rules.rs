//! Forward chaining for the two `is_a`/`part_of` rules and a generator of
//! small datasets whose held-out facts follow from them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;

use rand::seq::{IteratorRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{DatasetBundle, Split};
use crate::error::{Error, Result};
use crate::rng::{self, Stream, StreamRng};

pub const IS_A: &str = "is_a";
pub const PART_OF: &str = "part_of";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    IsA,
    PartOf,
}

impl Predicate {
    pub fn as_str(self) -> &'static str {
        match self {
            Predicate::IsA => IS_A,
            Predicate::PartOf => PART_OF,
        }
    }
}

/// An atom over rule variables, numbered x=0, y=1, z=2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Atom {
    pub predicate: Predicate,
    pub args: [usize; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RuleDef {
    pub body: [Atom; 2],
    pub head: Atom,
}

const fn atom(predicate: Predicate, a: usize, b: usize) -> Atom {
    Atom { predicate, args: [a, b] }
}

impl RuleDef {
    const fn shared_variables(&self) -> usize {
        let [b0, b1] = self.body;
        let mut shared = 0;
        let mut i = 0;
        while i < 2 {
            if b1.args[i] == b0.args[0] || b1.args[i] == b0.args[1] {
                shared += 1;
            }
            i += 1;
        }
        shared
    }

    /// Both body atoms share exactly one variable and every head variable
    /// occurs in the body.
    pub const fn is_quasi_chained(&self) -> bool {
        let [b0, b1] = self.body;
        let mut i = 0;
        while i < 2 {
            let v = self.head.args[i];
            if v != b0.args[0] && v != b0.args[1] && v != b1.args[0] && v != b1.args[1] {
                return false;
            }
            i += 1;
        }
        self.shared_variables() == 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Rule {
    /// is_a(x, y) ∧ part_of(y, z) → part_of(x, z)
    #[serde(rename = "a")]
    A,
    /// part_of(x, y) ∧ is_a(y, z) → part_of(x, z)
    #[serde(rename = "b")]
    B,
}

impl Rule {
    pub const fn def(self) -> RuleDef {
        match self {
            Rule::A => RuleDef {
                body: [atom(Predicate::IsA, 0, 1), atom(Predicate::PartOf, 1, 2)],
                head: atom(Predicate::PartOf, 0, 2),
            },
            Rule::B => RuleDef {
                body: [atom(Predicate::PartOf, 0, 1), atom(Predicate::IsA, 1, 2)],
                head: atom(Predicate::PartOf, 0, 2),
            },
        }
    }

    /// Parses `a`, `b` or `ab`.
    pub fn parse_set(s: &str) -> Result<Vec<Rule>> {
        match s {
            "a" => Ok(vec![Rule::A]),
            "b" => Ok(vec![Rule::B]),
            "ab" | "ba" | "a,b" => Ok(vec![Rule::A, Rule::B]),
            other => Err(Error::InvalidArgument(format!("unknown rule set '{other}' (expected a, b or ab)"))),
        }
    }
}

const _: () = assert!(Rule::A.def().is_quasi_chained() && Rule::B.def().is_quasi_chained());

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::A => "a",
            Rule::B => "b",
        })
    }
}

pub type Pair = (usize, usize);

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleKB {
    pub is_a: BTreeSet<Pair>,
    pub part_of: BTreeSet<Pair>,
}

impl RuleKB {
    pub fn facts(&self, p: Predicate) -> &BTreeSet<Pair> {
        match p {
            Predicate::IsA => &self.is_a,
            Predicate::PartOf => &self.part_of,
        }
    }

    fn facts_mut(&mut self, p: Predicate) -> &mut BTreeSet<Pair> {
        match p {
            Predicate::IsA => &mut self.is_a,
            Predicate::PartOf => &mut self.part_of,
        }
    }

    pub fn len(&self) -> usize {
        self.is_a.len() + self.part_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_subset(&self, other: &RuleKB) -> bool {
        self.is_a.is_subset(&other.is_a) && self.part_of.is_subset(&other.part_of)
    }
}

/// One rule application: `premises` entail `conclusion`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Derivation {
    pub rule: Rule,
    pub premises: [(Predicate, Pair); 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Closure {
    pub kb: RuleKB,
    /// The first derivation found for every fact absent from the input.
    pub derivations: BTreeMap<(Predicate, Pair), Derivation>,
}

impl Closure {
    pub fn is_derived(&self, p: Predicate, fact: Pair) -> bool {
        self.derivations.contains_key(&(p, fact))
    }

    /// Rule applications, innermost first, that produce `fact` from input facts.
    pub fn chain(&self, p: Predicate, fact: Pair) -> Vec<(Derivation, (Predicate, Pair))> {
        let mut out = Vec::new();
        self.chain_into(p, fact, &mut out);
        out
    }

    fn chain_into(&self, p: Predicate, fact: Pair, out: &mut Vec<(Derivation, (Predicate, Pair))>) {
        if let Some(d) = self.derivations.get(&(p, fact)) {
            for (pp, pf) in d.premises {
                self.chain_into(pp, pf, out);
            }
            out.push((*d, (p, fact)));
        }
    }
}

#[derive(Default)]
struct Index {
    by_first: BTreeMap<usize, Vec<usize>>,
    by_second: BTreeMap<usize, Vec<usize>>,
}

impl Index {
    fn insert(&mut self, (a, b): Pair) {
        self.by_first.entry(a).or_default().push(b);
        self.by_second.entry(b).or_default().push(a);
    }
}

/// Least fixpoint of `kb` under `rules`, by semi-naive evaluation: each
/// round joins only the facts new in the previous round against everything.
pub fn close(kb: &RuleKB, rules: &[Rule]) -> Closure {
    let mut out = kb.clone();
    let mut index: BTreeMap<Predicate, Index> = BTreeMap::new();
    for p in [Predicate::IsA, Predicate::PartOf] {
        let idx = index.entry(p).or_default();
        kb.facts(p).iter().for_each(|f| idx.insert(*f));
    }
    let mut derivations = BTreeMap::new();
    let mut delta: Vec<(Predicate, Pair)> = kb
        .is_a
        .iter()
        .map(|f| (Predicate::IsA, *f))
        .chain(kb.part_of.iter().map(|f| (Predicate::PartOf, *f)))
        .collect();

    while !delta.is_empty() {
        let mut fresh: BTreeMap<(Predicate, Pair), Derivation> = BTreeMap::new();
        for &(pred, fact) in &delta {
            for &rule in rules {
                let def = rule.def();
                for k in 0..2 {
                    let this = def.body[k];
                    if this.predicate != pred {
                        continue;
                    }
                    let other = def.body[1 - k];
                    let mut binding = [None; 3];
                    binding[this.args[0]] = Some(fact.0);
                    binding[this.args[1]] = Some(fact.1);
                    // position in `other` of the variable bound by `this`
                    let (bound_pos, bound_val) = if let Some(v) = binding[other.args[0]] {
                        (0, v)
                    } else {
                        (1, binding[other.args[1]].expect("rules share one variable"))
                    };
                    let idx = &index[&other.predicate];
                    let partners = if bound_pos == 0 {
                        idx.by_first.get(&bound_val)
                    } else {
                        idx.by_second.get(&bound_val)
                    };
                    for &w in partners.into_iter().flatten() {
                        let mut b = binding;
                        b[other.args[1 - bound_pos]] = Some(w);
                        let other_fact = if bound_pos == 0 { (bound_val, w) } else { (w, bound_val) };
                        let head = (
                            b[def.head.args[0]].expect("head variable bound"),
                            b[def.head.args[1]].expect("head variable bound"),
                        );
                        if out.facts(def.head.predicate).contains(&head) {
                            continue;
                        }
                        let mut premises = [(pred, fact), (other.predicate, other_fact)];
                        if k == 1 {
                            premises.swap(0, 1);
                        }
                        fresh
                            .entry((def.head.predicate, head))
                            .or_insert(Derivation { rule, premises });
                    }
                }
            }
        }
        delta = fresh.keys().copied().collect();
        for ((p, f), d) in fresh {
            out.facts_mut(p).insert(f);
            index.entry(p).or_default().insert(f);
            derivations.insert((p, f), d);
        }
    }
    Closure { kb: out, derivations }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub rules: Vec<Rule>,
    /// Entities to place in the taxonomy and the set of wholes.
    pub n_entities: usize,
    /// Target for train + valid + test facts.
    pub n_facts: usize,
    pub n_valid: usize,
    pub n_test: usize,
    pub seed: u64,
}

impl GeneratorConfig {
    /// Sized after the single-rule dataset (418 entities, 600 facts).
    pub fn wd(seed: u64) -> Self {
        Self {
            rules: vec![Rule::A],
            n_entities: 418,
            n_facts: 600,
            n_valid: 25,
            n_test: 25,
            seed,
        }
    }

    /// Sized after the two-rule dataset (763 entities, 1200 facts).
    pub fn wdpp(seed: u64) -> Self {
        Self {
            rules: vec![Rule::A, Rule::B],
            n_entities: 763,
            n_facts: 1200,
            n_valid: 40,
            n_test: 40,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceStep {
    pub rule: Rule,
    pub premises: Vec<[String; 3]>,
    pub conclusion: [String; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeldOutFact {
    pub split: String,
    pub fact: [String; 3],
    pub chain: Vec<ProvenanceStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config: GeneratorConfig,
    pub train_is_a: usize,
    pub train_base_part_of: usize,
    pub train_derived_part_of: usize,
    pub held_out: Vec<HeldOutFact>,
}

#[derive(Debug, Clone)]
pub struct GeneratedDataset {
    pub bundle: DatasetBundle,
    pub provenance: Provenance,
}

impl GeneratedDataset {
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        self.bundle.write_dir(dir)?;
        let path = dir.join("provenance.json");
        let text = serde_json::to_string_pretty(&self.provenance)? + "\n";
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}

/// Random forest over `nodes` with branching in 2..=5 and depth in 3..=5.
/// Returns (child, parent) edges.
fn random_forest(nodes: &[usize], rng: &mut StreamRng) -> Vec<Pair> {
    let mut edges = Vec::new();
    let mut next = 0;
    while next < nodes.len() {
        let root = nodes[next];
        next += 1;
        let depth = rng.gen_range(3..=5);
        let mut frontier = vec![root];
        for _ in 0..depth {
            let mut level = Vec::new();
            for &parent in &frontier {
                for _ in 0..rng.gen_range(2..=5) {
                    if next == nodes.len() {
                        return edges;
                    }
                    edges.push((nodes[next], parent));
                    level.push(nodes[next]);
                    next += 1;
                }
            }
            frontier = level;
        }
    }
    edges
}

fn name(id: usize) -> String {
    format!("Q{id}")
}

fn named(p: Predicate, (a, b): Pair) -> [String; 3] {
    [name(a), p.as_str().to_string(), name(b)]
}

/// Builds a taxonomy and part-whole facts, closes them under the configured
/// rules and holds out derived `part_of` facts for validation and test.
///
/// Under rule (a) alone the wholes are flat; with rule (b) they form their
/// own `is_a` forest. Base `part_of` edges are added until the closed
/// knowledge base reaches `n_facts`.
pub fn generate_wd_like(config: &GeneratorConfig) -> Result<GeneratedDataset> {
    if config.rules.is_empty() {
        return Err(Error::InvalidArgument("at least one rule is required".into()));
    }
    if config.n_entities < 20 {
        return Err(Error::Infeasible(format!("{} entities cannot host a taxonomy", config.n_entities)));
    }
    let held = config.n_valid + config.n_test;
    let uses_b = config.rules.contains(&Rule::B);
    const ATTEMPTS: u64 = 16;
    for attempt in 0..ATTEMPTS {
        let mut rng = rng::substream(config.seed, Stream::Generator, attempt);
        let mut ids: Vec<usize> = (0..config.n_entities).collect();
        ids.shuffle(&mut rng);
        let n_parts = if uses_b { config.n_entities * 3 / 5 } else { config.n_entities * 4 / 5 };
        let (parts, wholes) = ids.split_at(n_parts);

        let mut kb = RuleKB::default();
        kb.is_a.extend(random_forest(parts, &mut rng));
        if uses_b {
            kb.is_a.extend(random_forest(wholes, &mut rng));
        }
        let inner_parts: Vec<usize> = {
            let parents: BTreeSet<usize> = kb.is_a.iter().map(|&(_, p)| p).collect();
            parts.iter().copied().filter(|p| parents.contains(p)).collect()
        };
        if inner_parts.is_empty() {
            continue;
        }

        let mut closure = close(&kb, &config.rules);
        let mut unused_wholes: Vec<usize> = wholes.to_vec();
        unused_wholes.shuffle(&mut rng);
        // candidates that would overshoot the target by more than 5% are rejected
        let ceiling = config.n_facts + config.n_facts / 20;
        let floor = config.n_facts - config.n_facts / 20;
        let mut rejections = 0;
        while closure.kb.len() < floor && rejections < 1000 {
            let y = *parts.choose(&mut rng).expect("non-empty");
            // spread base facts over the wholes before reusing them
            let z = unused_wholes.pop().unwrap_or_else(|| *wholes.choose(&mut rng).expect("non-empty"));
            if closure.kb.part_of.contains(&(y, z)) {
                rejections += 1;
                continue;
            }
            let mut candidate = kb.clone();
            candidate.part_of.insert((y, z));
            let grown = close(&candidate, &config.rules);
            if grown.kb.len() > ceiling {
                rejections += 1;
                continue;
            }
            kb = candidate;
            closure = grown;
        }

        let derived: Vec<Pair> = closure
            .kb
            .part_of
            .iter()
            .copied()
            .filter(|f| closure.is_derived(Predicate::PartOf, *f))
            .collect();
        if derived.len() < held {
            continue;
        }
        let picked: Vec<Pair> = derived.iter().copied().choose_multiple(&mut rng, held);
        let mut picked = picked;
        picked.shuffle(&mut rng);
        let (valid, test) = picked.split_at(config.n_valid);
        let held_set: BTreeSet<Pair> = picked.iter().copied().collect();

        let train_kb = RuleKB {
            is_a: closure.kb.is_a.clone(),
            part_of: closure.kb.part_of.difference(&held_set).copied().collect(),
        };
        let rederived = close(&train_kb, &config.rules);
        if !held_set.iter().all(|f| rederived.kb.part_of.contains(f)) {
            continue;
        }

        let to_named = |facts: &mut dyn Iterator<Item = (Predicate, Pair)>| -> Vec<[String; 3]> {
            facts.map(|(p, f)| named(p, f)).collect()
        };
        let train = to_named(
            &mut train_kb
                .is_a
                .iter()
                .map(|f| (Predicate::IsA, *f))
                .chain(train_kb.part_of.iter().map(|f| (Predicate::PartOf, *f))),
        );
        let valid_named = to_named(&mut valid.iter().map(|f| (Predicate::PartOf, *f)));
        let test_named = to_named(&mut test.iter().map(|f| (Predicate::PartOf, *f)));
        let as_tuples = |v: &[[String; 3]]| -> Vec<(String, String, String)> {
            v.iter().map(|[s, r, o]| (s.clone(), r.clone(), o.clone())).collect()
        };
        let bundle = DatasetBundle::from_named(&as_tuples(&train), &as_tuples(&valid_named), &as_tuples(&test_named))?;

        let step = |d: &Derivation, conclusion: (Predicate, Pair)| ProvenanceStep {
            rule: d.rule,
            premises: d.premises.iter().map(|(p, f)| named(*p, *f)).collect(),
            conclusion: named(conclusion.0, conclusion.1),
        };
        let held_out = [(Split::Valid, valid), (Split::Test, test)]
            .iter()
            .flat_map(|(split, facts)| {
                facts.iter().map(|f| HeldOutFact {
                    split: split.as_str().to_string(),
                    fact: named(Predicate::PartOf, *f),
                    chain: rederived
                        .chain(Predicate::PartOf, *f)
                        .iter()
                        .map(|(d, c)| step(d, *c))
                        .collect(),
                })
            })
            .collect();
        let train_derived = train_kb
            .part_of
            .iter()
            .filter(|f| !kb.part_of.contains(f))
            .count();
        let provenance = Provenance {
            config: config.clone(),
            train_is_a: train_kb.is_a.len(),
            train_base_part_of: kb.part_of.len(),
            train_derived_part_of: train_derived,
            held_out,
        };
        return Ok(GeneratedDataset { bundle, provenance });
    }
    Err(Error::Infeasible(format!(
        "could not derive {held} held-out facts from {} entities after {ATTEMPTS} attempts",
        config.n_entities
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kb(is_a: &[Pair], part_of: &[Pair]) -> RuleKB {
        RuleKB {
            is_a: is_a.iter().copied().collect(),
            part_of: part_of.iter().copied().collect(),
        }
    }

    #[test]
    fn single_application() {
        // is_a(c, b), part_of(b, a) with a=0, b=1, c=2
        let c = close(&kb(&[(2, 1)], &[(1, 0)]), &[Rule::A]);
        assert!(c.kb.part_of.contains(&(2, 0)));
        assert_eq!(c.kb.len(), 3);
        let d = c.derivations[&(Predicate::PartOf, (2, 0))];
        assert_eq!(d.rule, Rule::A);
        assert_eq!(d.premises, [(Predicate::IsA, (2, 1)), (Predicate::PartOf, (1, 0))]);
    }

    #[test]
    fn nothing_to_do_without_part_of() {
        let input = kb(&[(1, 0), (2, 1)], &[]);
        assert_eq!(close(&input, &[Rule::A, Rule::B]).kb, input);
    }

    #[test]
    fn chain_of_two() {
        // is_a(d,c), is_a(c,b), part_of(b,a)
        let input = kb(&[(3, 2), (2, 1)], &[(1, 0)]);
        let c = close(&input, &[Rule::A]);
        assert_eq!(c.kb.len(), input.len() + 2);
        assert!(c.kb.part_of.contains(&(2, 0)) && c.kb.part_of.contains(&(3, 0)));
        let chain = c.chain(Predicate::PartOf, (3, 0));
        assert_eq!(chain.len(), 2);
        assert_eq!(chain[1].1, (Predicate::PartOf, (3, 0)));
    }

    #[test]
    fn rule_b_walks_up_wholes() {
        // part_of(x, y), is_a(y, z), is_a(z, w)
        let c = close(&kb(&[(1, 2), (2, 3)], &[(0, 1)]), &[Rule::B]);
        assert!(c.kb.part_of.contains(&(0, 2)) && c.kb.part_of.contains(&(0, 3)));
        assert!(close(&kb(&[(1, 2)], &[(0, 1)]), &[Rule::A]).derivations.is_empty());
    }

    fn brute_force(kb: &RuleKB, rules: &[Rule]) -> RuleKB {
        let mut out = kb.clone();
        loop {
            let mut added = false;
            let snapshot = out.clone();
            for &(x, y) in &snapshot.is_a {
                for &(y2, z) in &snapshot.part_of {
                    if rules.contains(&Rule::A) && y == y2 {
                        added |= out.part_of.insert((x, z));
                    }
                }
            }
            for &(x, y) in &snapshot.part_of {
                for &(y2, z) in &snapshot.is_a {
                    if rules.contains(&Rule::B) && y == y2 {
                        added |= out.part_of.insert((x, z));
                    }
                }
            }
            if !added {
                return out;
            }
        }
    }

    fn random_kb(rng: &mut StreamRng, n: usize, facts: usize) -> RuleKB {
        let mut kb = RuleKB::default();
        for _ in 0..facts {
            let pair = (rng.gen_range(0..n), rng.gen_range(0..n));
            if rng.gen_bool(0.5) {
                kb.is_a.insert(pair);
            } else {
                kb.part_of.insert(pair);
            }
        }
        kb
    }

    #[test]
    fn agrees_with_brute_force_and_is_idempotent_and_monotone() {
        let mut rng = rng::stream(1, Stream::Custom(0));
        for _ in 0..50 {
            let kb1 = random_kb(&mut rng, 12, 20);
            let mut kb2 = kb1.clone();
            kb2.part_of.extend(random_kb(&mut rng, 12, 6).part_of);
            for rules in [vec![Rule::A], vec![Rule::B], vec![Rule::A, Rule::B]] {
                let c1 = close(&kb1, &rules);
                assert_eq!(c1.kb, brute_force(&kb1, &rules));
                assert_eq!(close(&c1.kb, &rules).kb, c1.kb);
                assert_eq!(c1.kb.is_a, kb1.is_a);
                assert!(c1.kb.is_subset(&close(&kb2, &rules).kb));
                for (p, f) in c1.derivations.keys() {
                    let chain = c1.chain(*p, *f);
                    assert_eq!(chain.last().unwrap().1, (*p, *f));
                }
            }
        }
    }

    #[test]
    fn rule_set_parsing() {
        assert_eq!(Rule::parse_set("ab").unwrap(), vec![Rule::A, Rule::B]);
        assert!(Rule::parse_set("c").is_err());
    }

    #[test]
    fn wd_scale_generation() {
        let g = generate_wd_like(&GeneratorConfig::wd(3)).unwrap();
        let b = &g.bundle;
        assert_eq!(b.num_relations(), 2);
        let within = |actual: usize, target: f64| (actual as f64 - target).abs() <= 0.2 * target;
        assert!(within(b.num_entities(), 418.0), "{}", b.num_entities());
        assert!(within(b.train.len(), 550.0), "{}", b.train.len());
        assert_eq!((b.valid.len(), b.test.len()), (25, 25));
        let part_of = b.vocab.relation_id(PART_OF).unwrap();
        let train: BTreeSet<_> = b.train.iter().collect();
        for t in b.valid.iter().chain(&b.test) {
            assert_eq!(t.relation, part_of);
            assert!(!train.contains(t));
        }
        assert_eq!(g.provenance.held_out.len(), 50);
        assert!(g.provenance.held_out.iter().all(|h| !h.chain.is_empty()));
    }

    #[test]
    fn wdpp_scale_generation() {
        let g = generate_wd_like(&GeneratorConfig::wdpp(3)).unwrap();
        let within = |actual: usize, target: f64| (actual as f64 - target).abs() <= 0.2 * target;
        assert!(within(g.bundle.num_entities(), 763.0), "{}", g.bundle.num_entities());
        assert!(within(g.bundle.train.len(), 1120.0), "{}", g.bundle.train.len());
        assert!(g
            .provenance
            .held_out
            .iter()
            .flat_map(|h| &h.chain)
            .any(|s| s.rule == Rule::B));
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_wd_like(&GeneratorConfig::wd(9)).unwrap();
        let b = generate_wd_like(&GeneratorConfig::wd(9)).unwrap();
        assert_eq!(a.bundle.train, b.bundle.train);
        assert_eq!(a.provenance, b.provenance);
        let dir = tempfile::tempdir().unwrap();
        a.write_dir(dir.path()).unwrap();
        assert!(dir.path().join("provenance.json").exists());
    }

    #[test]
    fn infeasible_configs() {
        let mut cfg = GeneratorConfig::wd(0);
        cfg.n_entities = 5;
        assert!(matches!(generate_wd_like(&cfg), Err(Error::Infeasible(_))));
        cfg.n_entities = 30;
        cfg.n_facts = 30;
        cfg.n_valid = 500;
        assert!(matches!(generate_wd_like(&cfg), Err(Error::Infeasible(_))));
    }
}
