//! Seeded generator of knowledge graphs, labels and annotated questions,
//! plus the bundled hand-built mini graph.
//!
//! Generated persons share family names and are indexed under their family
//! name as an alias, so a family-name mention is ambiguous and only the
//! graph neighbourhood tells the candidates apart. Some places are
//! homonyms. Several predicates share a surface variant ("born" for both
//! birth place and birth date), and half of the relation mentions are
//! paraphrases the expansions do not cover.
//!
//! Every entity has a popularity in `[0.3, 1]` that becomes its label
//! weight, and question anchors are drawn in proportion to popularity
//! squared. Retrieval rank is therefore informative about the anchor but
//! not about the other entities of a question.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{parse_expansions, parse_labels, LabelEntry, LabelIndex};
use crate::kg::{KnowledgeGraph, Triple};
use crate::spotter::{GoldSpan, Question};
use crate::Kind;

pub const TRIPLES_FILE: &str = "triples.tsv";
pub const LABELS_FILE: &str = "labels.tsv";
pub const EXPANSIONS_FILE: &str = "expansions.tsv";
pub const DATASET_FILE: &str = "dataset.json";
pub const TRAIN_FILE: &str = "train.json";

const MINI_TRIPLES: &str = include_str!("../data/mini_kg/triples.tsv");
const MINI_LABELS: &str = include_str!("../data/mini_kg/labels.tsv");
const MINI_EXPANSIONS: &str = include_str!("../data/mini_kg/expansions.tsv");
const MINI_QUESTIONS: &str = include_str!("../data/mini_kg/questions.json");
const MINI_TRAIN: &str = include_str!("../data/mini_kg/train.json");

/// The question every part of the crate uses as its running example.
pub const FOUNDER_QUESTION: &str = "Where was the founder of Tesla and SpaceX born?";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub entities: usize,
    /// Evaluation questions.
    pub questions: usize,
    /// Training questions, drawn from the same graph.
    pub train_questions: usize,
    pub seed: u64,
    /// Probability that a person is mentioned by family name only.
    pub family_name_mentions: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            entities: 200,
            questions: 100,
            train_questions: 200,
            seed: 7,
            family_name_mentions: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub triples: Vec<Triple>,
    pub labels: Vec<LabelEntry>,
    pub expansions: Vec<(String, String)>,
    pub questions: Vec<Question>,
    pub train: Vec<Question>,
}

impl SyntheticData {
    pub fn knowledge_graph(&self) -> Result<KnowledgeGraph> {
        KnowledgeGraph::from_triples(
            self.triples
                .iter()
                .map(|t| (t.subject.as_str(), t.predicate.as_str(), t.object.as_str())),
        )
    }

    pub fn index(&self) -> Result<LabelIndex> {
        LabelIndex::build(self.labels.clone(), &self.expansions)
    }

    /// Writes the five data files and returns their paths.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut triples = String::new();
        for t in &self.triples {
            triples.push_str(&format!("{}\t{}\t{}\n", t.subject, t.predicate, t.object));
        }
        let mut labels = String::new();
        for l in &self.labels {
            if l.weight == 1.0 {
                labels.push_str(&format!("{}\t{}\t{}\n", l.uri, l.label, l.kind.code()));
            } else {
                labels.push_str(&format!("{}\t{}\t{}\t{}\n", l.uri, l.label, l.kind.code(), l.weight));
            }
        }
        let mut expansions = String::new();
        for (l, v) in &self.expansions {
            expansions.push_str(&format!("{l}\t{v}\n"));
        }
        let files = [
            (TRIPLES_FILE, triples),
            (LABELS_FILE, labels),
            (EXPANSIONS_FILE, expansions),
            (DATASET_FILE, serde_json::to_string_pretty(&self.questions)? + "\n"),
            (TRAIN_FILE, serde_json::to_string_pretty(&self.train)? + "\n"),
        ];
        let mut paths = Vec::new();
        for (name, body) in files {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
            paths.push(path);
        }
        Ok(paths)
    }

    /// Same graph and labels, questions swapped for `questions`.
    pub fn with_questions(&self, questions: Vec<Question>) -> Self {
        SyntheticData {
            questions,
            ..self.clone()
        }
    }
}

/// The bundled mini graph with its evaluation questions and a disjoint
/// training set rich in ambiguous labels.
pub fn mini_kg() -> Result<SyntheticData> {
    let kg = KnowledgeGraph::parse(MINI_TRIPLES, "mini_kg/triples.tsv")?;
    let questions: Vec<Question> = serde_json::from_str(MINI_QUESTIONS)?;
    let train: Vec<Question> = serde_json::from_str(MINI_TRAIN)?;
    for q in questions.iter().chain(&train) {
        q.validate()?;
    }
    Ok(SyntheticData {
        triples: kg
            .triples()
            .map(|(s, p, o)| Triple::new(s, p, o))
            .collect(),
        labels: parse_labels(MINI_LABELS, "mini_kg/labels.tsv")?,
        expansions: parse_expansions(MINI_EXPANSIONS, "mini_kg/expansions.tsv")?,
        train,
        questions,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Class {
    Person,
    Place,
    Organisation,
    Work,
}

struct Predicate {
    uri: &'static str,
    label: &'static str,
    variants: &'static [&'static str],
    /// Surface forms used in questions but absent from the expansions.
    paraphrases: &'static [&'static str],
    domain: Class,
    range: Class,
    /// Chance that an entity of the domain class carries this predicate.
    density: f64,
}

const PREDICATES: &[Predicate] = &[
    Predicate { uri: "syn:birthPlace", label: "birth place", variants: &["born", "birthplace", "hometown"], paraphrases: &["place of birth", "native town"], domain: Class::Person, range: Class::Place, density: 0.45 },
    Predicate { uri: "syn:birthDate", label: "birth date", variants: &["born", "birthday"], paraphrases: &["date of birth", "year of birth"], domain: Class::Person, range: Class::Place, density: 0.4 },
    Predicate { uri: "syn:deathPlace", label: "death place", variants: &["died"], paraphrases: &["place of death", "death town"], domain: Class::Person, range: Class::Place, density: 0.25 },
    Predicate { uri: "syn:residence", label: "residence", variants: &["lives", "resident", "hometown"], paraphrases: &["place of residence", "living place"], domain: Class::Person, range: Class::Place, density: 0.3 },
    Predicate { uri: "syn:spouse", label: "spouse", variants: &["wife", "husband", "married", "partner"], paraphrases: &["married to", "spouse name"], domain: Class::Person, range: Class::Person, density: 0.3 },
    Predicate { uri: "syn:child", label: "child", variants: &["son", "daughter", "children"], paraphrases: &["offspring", "kids"], domain: Class::Person, range: Class::Person, density: 0.25 },
    Predicate { uri: "syn:employer", label: "employer", variants: &["works for", "employed", "worked"], paraphrases: &["employed by", "employing company"], domain: Class::Person, range: Class::Organisation, density: 0.35 },
    Predicate { uri: "syn:almaMater", label: "alma mater", variants: &["studied", "graduated", "attended"], paraphrases: &["studied at", "school attended"], domain: Class::Person, range: Class::Organisation, density: 0.3 },
    Predicate { uri: "syn:foundedBy", label: "founded by", variants: &["founder", "founded", "created"], paraphrases: &["founding person", "established by"], domain: Class::Organisation, range: Class::Person, density: 0.6 },
    Predicate { uri: "syn:location", label: "location", variants: &["located", "headquarters", "based"], paraphrases: &["located in", "location city"], domain: Class::Organisation, range: Class::Place, density: 0.7 },
    Predicate { uri: "syn:parentCompany", label: "parent company", variants: &["owned by", "subsidiary", "owner"], paraphrases: &["parent firm", "owning company"], domain: Class::Organisation, range: Class::Organisation, density: 0.2 },
    Predicate { uri: "syn:author", label: "author", variants: &["writer", "wrote", "written", "created"], paraphrases: &["authored by", "book author"], domain: Class::Work, range: Class::Person, density: 0.6 },
    Predicate { uri: "syn:director", label: "director", variants: &["directed", "made"], paraphrases: &["directed by", "film director"], domain: Class::Work, range: Class::Person, density: 0.4 },
    Predicate { uri: "syn:starring", label: "starring", variants: &["starred", "actor", "partner"], paraphrases: &["cast member", "starring actor"], domain: Class::Work, range: Class::Person, density: 0.4 },
    Predicate { uri: "syn:publisher", label: "publisher", variants: &["published", "owner"], paraphrases: &["published by", "publishing house"], domain: Class::Work, range: Class::Organisation, density: 0.5 },
    Predicate { uri: "syn:country", label: "country", variants: &["nation", "located"], paraphrases: &["country name", "in which country"], domain: Class::Place, range: Class::Place, density: 0.5 },
];

const GIVEN: &[&str] = &[
    "Ada", "Alan", "Anna", "Boris", "Clara", "Dmitri", "Edith", "Elena", "Felix", "Greta", "Hugo", "Ines",
    "Ivan", "Jonas", "Julia", "Karl", "Lena", "Leon", "Maria", "Marek", "Nadia", "Niko", "Olga", "Oskar",
    "Paula", "Pavel", "Rosa", "Rufus", "Sara", "Stefan", "Tara", "Tomas", "Ursula", "Viktor", "Wanda", "Yuri",
];

const ONSETS: &[&str] = &["b", "br", "d", "f", "g", "gr", "k", "kr", "l", "m", "n", "p", "r", "s", "st", "t", "tr", "v", "z"];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u", "ai", "ei", "ou"];
const CODAS: &[&str] = &["", "n", "r", "s", "l", "m", "th", "nd", "rk"];

/// Chance that a relation is mentioned by a paraphrase the lexicon lacks.
const RELATION_PARAPHRASES: f64 = 0.5;

/// Persons per family name; a family-name mention matches all of them.
const PERSONS_PER_FAMILY: usize = 4;

/// Gold spans per generated question; fewer only when the anchor's
/// neighbourhood runs out.
const SPANS_PER_QUESTION: usize = 4;

/// Chance that a question also mentions the far end of a second hop.
const FAR_ENTITY: f64 = 0.2;

/// Chance that a new place reuses an existing place name.
const PLACE_HOMONYMS: f64 = 0.5;

const ORG_SUFFIXES: &[&str] = &["Industries", "Records", "Press", "Labs", "Motors", "University"];
const WORK_NOUNS: &[&str] = &["River", "Harbour", "Winter", "Garden", "Signal", "Mirror", "Empire", "Voyage", "Orchard", "Lantern"];

struct Entity {
    uri: String,
    label: String,
    alias: Option<String>,
    class: Class,
    popularity: f64,
}

/// Deterministic for a given configuration.
pub fn generate(cfg: &SyntheticConfig) -> Result<SyntheticData> {
    if cfg.entities < 20 {
        return Err(Error::Config(format!("need at least 20 entities, got {}", cfg.entities)));
    }
    if !(0.0..=1.0).contains(&cfg.family_name_mentions) {
        return Err(Error::Config("family_name_mentions must lie in [0, 1]".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let entities = make_entities(cfg.entities, &mut rng);
    let by_class: BTreeMap<Class, Vec<usize>> = entities.iter().enumerate().fold(BTreeMap::new(), |mut m, (i, e)| {
        m.entry(e.class).or_insert_with(Vec::new).push(i);
        m
    });

    // Edges as (subject, predicate index, object). Dates are literal nodes.
    let mut edges: BTreeSet<(usize, usize, usize)> = BTreeSet::new();
    let mut literals: Vec<(usize, String)> = Vec::new();
    for (s, e) in entities.iter().enumerate() {
        for (p, pred) in PREDICATES.iter().enumerate() {
            if pred.domain != e.class {
                continue;
            }
            if pred.uri == "syn:birthDate" {
                if rng.gen_bool(pred.density) {
                    literals.push((s, format!("{}-{:02}-{:02}", rng.gen_range(1900..2000), rng.gen_range(1..13), rng.gen_range(1..29))));
                }
                continue;
            }
            if rng.gen_bool(pred.density) {
                let pool = &by_class[&pred.range];
                let o = pool[rng.gen_range(0..pool.len())];
                if o != s {
                    edges.insert((s, p, o));
                }
            }
        }
    }

    let birth_date = PREDICATES.iter().position(|p| p.uri == "syn:birthDate").expect("declared above");
    let mut triples: Vec<Triple> = edges
        .iter()
        .map(|&(s, p, o)| Triple::new(&entities[s].uri, PREDICATES[p].uri, &entities[o].uri))
        .collect();
    triples.extend(literals.iter().map(|(s, d)| Triple::new(&entities[*s].uri, PREDICATES[birth_date].uri, d)));

    let mut labels: Vec<LabelEntry> = entities
        .iter()
        .map(|e| LabelEntry { weight: e.popularity, ..LabelEntry::new(&e.uri, &e.label, Kind::Entity) })
        .collect();
    // Frequent predicates rank first among equally similar labels.
    labels.extend(
        PREDICATES
            .iter()
            .map(|p| LabelEntry { weight: 0.5 + p.density / 2.0, ..LabelEntry::new(p.uri, p.label, Kind::Relation) }),
    );
    let mut expansions: BTreeSet<(String, String)> = BTreeSet::new();
    for e in &entities {
        if let Some(a) = &e.alias {
            expansions.insert((e.label.clone(), a.clone()));
        }
    }
    for p in PREDICATES {
        for v in p.variants {
            expansions.insert((p.label.to_string(), v.to_string()));
        }
    }

    // Incident edges per entity, literal birth dates included.
    let mut incident: HashMap<usize, Vec<Incident>> = HashMap::new();
    for &(s, p, o) in &edges {
        incident.entry(s).or_default().push(Incident { predicate: p, other: Some(o) });
        incident.entry(o).or_default().push(Incident { predicate: p, other: Some(s) });
    }
    for (s, _) in &literals {
        incident.entry(*s).or_default().push(Incident { predicate: birth_date, other: None });
    }
    let anchors: Vec<usize> = (0..entities.len()).filter(|i| incident.contains_key(i)).collect();
    if anchors.is_empty() {
        return Err(Error::Config("generated graph has no edges".into()));
    }
    let anchor_weights = WeightedIndex::new(anchors.iter().map(|&i| entities[i].popularity.powi(2)))
        .expect("popularities are positive");

    let make_questions = |count: usize, prefix: &str, rng: &mut ChaCha8Rng| -> Vec<Question> {
        (0..count)
            .map(|i| {
                let anchor = anchors[anchor_weights.sample(rng)];
                make_question(&format!("{prefix}-{i:04}"), &entities, anchor, &incident, cfg, rng)
            })
            .collect()
    };
    let questions = make_questions(cfg.questions, "syn", &mut rng);
    let train = make_questions(cfg.train_questions, "train", &mut rng);

    Ok(SyntheticData {
        triples,
        labels,
        expansions: expansions.into_iter().collect(),
        questions,
        train,
    })
}

#[derive(Debug, Clone, Copy)]
struct Incident {
    predicate: usize,
    /// None for a literal object.
    other: Option<usize>,
}

fn syllable_name(rng: &mut ChaCha8Rng, parts: usize) -> String {
    let mut s = String::new();
    for _ in 0..parts {
        s.push_str(ONSETS.choose(rng).expect("non-empty"));
        s.push_str(VOWELS.choose(rng).expect("non-empty"));
    }
    s.push_str(CODAS.choose(rng).expect("non-empty"));
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => s,
    }
}

/// Rounded so that the written labels file reproduces the weight exactly.
fn popularity(rng: &mut ChaCha8Rng) -> f64 {
    (rng.gen_range(0.3..=1.0f64) * 1000.0).round() / 1000.0
}

fn make_entities(n: usize, rng: &mut ChaCha8Rng) -> Vec<Entity> {
    let persons = n * 55 / 100;
    let places = n * 15 / 100;
    let orgs = n * 15 / 100;
    let works = n - persons - places - orgs;

    // Roughly ten persons per family name.
    let mut family: BTreeSet<String> = BTreeSet::new();
    let ppf = PERSONS_PER_FAMILY;
    while family.len() < (persons / ppf).max(3) {
        family.insert(syllable_name(rng, 2));
    }
    let family: Vec<String> = family.into_iter().collect();

    let mut used: HashMap<String, usize> = HashMap::new();
    let mut uri_for = |label: &str| -> String {
        let base = format!("syn:{}", label.replace(' ', "_"));
        let count = used.entry(base.clone()).or_insert(0);
        *count += 1;
        if *count == 1 { base } else { format!("{base}_{count}") }
    };

    let mut out = Vec::with_capacity(n);
    for _ in 0..persons {
        let g = GIVEN.choose(rng).expect("non-empty");
        let f = family.choose(rng).expect("non-empty");
        let label = format!("{g} {f}");
        out.push(Entity { uri: uri_for(&label), label, alias: Some(f.clone()), class: Class::Person, popularity: popularity(rng) });
    }
    let mut place_names: Vec<String> = Vec::new();
    for _ in 0..places {
        let label = match place_names.choose(rng) {
            Some(existing) if rng.gen_bool(PLACE_HOMONYMS) => existing.clone(),
            _ => syllable_name(rng, 3),
        };
        place_names.push(label.clone());
        out.push(Entity { uri: uri_for(&label), label, alias: None, class: Class::Place, popularity: popularity(rng) });
    }
    for _ in 0..orgs {
        let stem = syllable_name(rng, 2);
        let label = format!("{stem} {}", ORG_SUFFIXES.choose(rng).expect("non-empty"));
        out.push(Entity { uri: uri_for(&label), label, alias: Some(stem), class: Class::Organisation, popularity: popularity(rng) });
    }
    for _ in 0..works {
        let label = format!("The {} of {}", WORK_NOUNS.choose(rng).expect("non-empty"), syllable_name(rng, 2));
        out.push(Entity { uri: uri_for(&label), label, alias: None, class: Class::Work, popularity: popularity(rng) });
    }
    out
}

fn mention(e: &Entity, cfg: &SyntheticConfig, rng: &mut ChaCha8Rng) -> String {
    match (&e.alias, e.class) {
        (Some(a), Class::Person) if rng.gen_bool(cfg.family_name_mentions) => a.clone(),
        (Some(a), Class::Organisation) if rng.gen_bool(0.5) => a.clone(),
        _ => e.label.clone(),
    }
}

fn relation_mention(p: &Predicate, rng: &mut ChaCha8Rng) -> String {
    if rng.gen_bool(RELATION_PARAPHRASES) {
        return p.paraphrases.choose(rng).expect("non-empty").to_string();
    }
    let i = rng.gen_range(0..=p.variants.len());
    if i == 0 { p.label.to_string() } else { p.variants[i - 1].to_string() }
}

/// An anchor entity, one to three of its edges, and sometimes the entity at
/// the far end of an edge: two to four keywords in total.
fn make_question(
    id: &str,
    entities: &[Entity],
    anchor: usize,
    incident: &HashMap<usize, Vec<Incident>>,
    cfg: &SyntheticConfig,
    rng: &mut ChaCha8Rng,
) -> Question {
    let mut edges = incident[&anchor].clone();
    edges.shuffle(rng);
    let mut seen_predicates = BTreeSet::new();
    edges.retain(|e| seen_predicates.insert(e.predicate));

    let mut spans = vec![GoldSpan {
        phrase: mention(&entities[anchor], cfg, rng),
        kind: Kind::Entity,
        uri: entities[anchor].uri.clone(),
    }];
    for edge in edges {
        if spans.len() >= SPANS_PER_QUESTION {
            break;
        }
        let p = &PREDICATES[edge.predicate];
        spans.push(GoldSpan { phrase: relation_mention(p, rng), kind: Kind::Relation, uri: p.uri.to_string() });
        if let Some(o) = edge.other {
            if spans.len() < SPANS_PER_QUESTION && rng.gen_bool(FAR_ENTITY) {
                spans.push(GoldSpan { phrase: mention(&entities[o], cfg, rng), kind: Kind::Entity, uri: entities[o].uri.clone() });
            }
        }
    }
    // A phrase that repeats would make gold alignment ambiguous.
    let mut phrases = BTreeSet::new();
    spans.retain(|s| phrases.insert(crate::index::text::normalize(&s.phrase)));
    spans.shuffle(rng);

    let text = format!(
        "What {}?",
        spans.iter().map(|s| s.phrase.as_str()).collect::<Vec<_>>().join(" of the ")
    );
    Question { id: id.to_string(), text, spans: Some(spans) }
}
