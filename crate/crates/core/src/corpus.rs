//! Deterministic synthetic corpora: taxonomies, a source mapping and
//! template-generated company descriptions with known gold labels.
//!
//! Every industry gets its own theme words and every product/service code
//! its own product words; no content word is shared between two codes.
//! A company description is built from a run of its industry's theme words
//! and a run of one product's words, plus one generic filler word. With
//! `noise > 0` each content word is independently swapped for a random
//! vocabulary word.
//!
//! A fraction `mapped_fraction` of industries is reachable through the
//! source mapping; companies whose primary industry is covered carry one of
//! that industry's source triples, all others carry none.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::taxonomy::{
    write_companies, CompanyRecord, IndustryCode, IndustryTaxonomy, ProductServiceCode, ProductServiceTaxonomy,
    SourceCodeTriple, SourceMapping, TaxonomyError,
};

pub const INDUSTRIES_FILE: &str = "industries.csv";
pub const PRODUCTS_FILE: &str = "products.csv";
pub const MAPPING_FILE: &str = "mapping.csv";
pub const COMPANIES_FILE: &str = "companies.jsonl";

const THEME_WORDS: usize = 5;
const THEME_RUN: usize = 4;
const PRODUCT_WORDS: usize = 3;
const PRODUCT_RUN: usize = 2;
const SECONDARY_PROB: f64 = 0.2;
const SECONDARY_RUN: usize = 2;

const FILLER: &[&str] = &[
    "leading",
    "global",
    "trusted",
    "modern",
    "independent",
    "regional",
    "innovative",
    "established",
];
const ONSETS: &[&str] = &[
    "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "tr",
];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u"];
const CODAS: &[&str] = &["", "", "n", "r", "l", "s"];

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("invalid corpus spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusSpec {
    pub n_industries: usize,
    pub ps_min: usize,
    pub ps_max: usize,
    pub n_companies: usize,
    /// Fraction of industries reachable through the source mapping, which
    /// is also the expected fraction of companies carrying source triples.
    pub mapped_fraction: f64,
    /// Per-word substitution probability.
    pub noise: f64,
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            n_industries: 12,
            ps_min: 8,
            ps_max: 15,
            n_companies: 2000,
            mapped_fraction: 0.75,
            noise: 0.0,
            seed: 7,
        }
    }
}

impl CorpusSpec {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let bad = |m: &str| Err(CorpusError::InvalidSpec(m.to_owned()));
        if self.n_industries == 0 || self.n_companies == 0 || self.ps_min == 0 {
            return bad("counts must be positive");
        }
        if self.ps_min > self.ps_max {
            return bad("ps_min must not exceed ps_max");
        }
        if !(0.0..=1.0).contains(&self.mapped_fraction) || !(0.0..=1.0).contains(&self.noise) {
            return bad("fractions must be in [0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub industries: IndustryTaxonomy,
    pub products: ProductServiceTaxonomy,
    pub mapping: SourceMapping,
    pub companies: Vec<CompanyRecord>,
}

impl Corpus {
    pub fn write_to_dir(&self, dir: impl AsRef<Path>) -> Result<(), CorpusError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        self.industries
            .write_csv(std::fs::File::create(dir.join(INDUSTRIES_FILE))?)?;
        self.products
            .write_csv(std::fs::File::create(dir.join(PRODUCTS_FILE))?)?;
        self.mapping.write_csv(std::fs::File::create(dir.join(MAPPING_FILE))?)?;
        let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join(COMPANIES_FILE))?);
        write_companies(&mut f, &self.companies)?;
        f.flush()?;
        Ok(())
    }
}

struct WordSource {
    used: BTreeSet<String>,
}

impl WordSource {
    fn new() -> Self {
        Self {
            used: FILLER.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn fresh(&mut self, rng: &mut impl Rng) -> String {
        loop {
            let syllables = rng.random_range(2..=3);
            let mut w = String::new();
            for _ in 0..syllables {
                w.push_str(ONSETS.choose(rng).unwrap());
                w.push_str(VOWELS.choose(rng).unwrap());
            }
            w.push_str(CODAS.choose(rng).unwrap());
            if self.used.insert(w.clone()) {
                return w;
            }
        }
    }

    fn fresh_n(&mut self, n: usize, rng: &mut impl Rng) -> Vec<String> {
        (0..n).map(|_| self.fresh(rng)).collect()
    }
}

fn capitalize(words: &[String]) -> String {
    words
        .iter()
        .map(|w| {
            let mut c = w.chars();
            match c.next() {
                Some(f) => f.to_uppercase().chain(c).collect::<String>(),
                None => String::new(),
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// A run of `len` consecutive words starting at a random offset.
fn run<'a>(words: &'a [String], len: usize, rng: &mut impl Rng) -> &'a [String] {
    let start = rng.random_range(0..=words.len() - len);
    &words[start..start + len]
}

pub fn generate_corpus(spec: &CorpusSpec) -> Result<Corpus, CorpusError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut words = WordSource::new();

    let mut industry_codes = Vec::with_capacity(spec.n_industries);
    let mut themes = Vec::with_capacity(spec.n_industries);
    let mut ps_codes = Vec::new();
    // per industry: (product id, product words)
    let mut products: Vec<Vec<(String, Vec<String>)>> = Vec::with_capacity(spec.n_industries);
    for i in 0..spec.n_industries {
        let id = format!("IND_{:02}", i + 1);
        let theme = words.fresh_n(THEME_WORDS, &mut rng);
        industry_codes.push(IndustryCode {
            id: id.clone(),
            name: capitalize(&theme[..2]),
            description: theme.join(" "),
        });
        let n_ps = rng.random_range(spec.ps_min..=spec.ps_max);
        let mut children = Vec::with_capacity(n_ps);
        for j in 0..n_ps {
            let ps_id = format!("PS_{:02}_{:02}", i + 1, j + 1);
            let pw = words.fresh_n(PRODUCT_WORDS, &mut rng);
            ps_codes.push(ProductServiceCode {
                id: ps_id.clone(),
                industry_id: id.clone(),
                name: capitalize(&pw[..2]),
                description: pw.join(" "),
            });
            children.push((ps_id, pw));
        }
        themes.push(theme);
        products.push(children);
    }
    let industries = IndustryTaxonomy::new(industry_codes)?;
    let ps_taxonomy = ProductServiceTaxonomy::new(ps_codes, &industries)?;

    let n_covered = (spec.mapped_fraction * spec.n_industries as f64).round() as usize;
    let mut order: Vec<usize> = (0..spec.n_industries).collect();
    order.shuffle(&mut rng);
    let mut covered = vec![false; spec.n_industries];
    for &i in &order[..n_covered] {
        covered[i] = true;
    }
    let mut triples: Vec<Vec<SourceCodeTriple>> = vec![Vec::new(); spec.n_industries];
    let mut entries = Vec::new();
    for i in 0..spec.n_industries {
        if !covered[i] {
            continue;
        }
        let n = rng.random_range(1..=3);
        for j in 0..n {
            let t = SourceCodeTriple::new(
                format!("SEC_{}", i % 4 + 1),
                format!("GRP_{:02}", i + 1),
                format!("CODE_{:02}_{}", i + 1, j + 1),
            );
            entries.push((t.clone(), industries.codes()[i].id.clone()));
            triples[i].push(t);
        }
    }
    let mapping = SourceMapping::new(entries, &industries)?;

    let vocab: Vec<&String> = themes
        .iter()
        .flatten()
        .chain(products.iter().flatten().flat_map(|(_, w)| w))
        .collect();
    let noisy = |w: &str, rng: &mut ChaCha8Rng| -> String {
        if spec.noise > 0.0 && rng.random_bool(spec.noise) {
            (*vocab.choose(rng).unwrap()).clone()
        } else {
            w.to_owned()
        }
    };

    let mut companies = Vec::with_capacity(spec.n_companies);
    for c in 0..spec.n_companies {
        let primary = rng.random_range(0..spec.n_industries);
        let (ps_id, pw) = products[primary].choose(&mut rng).unwrap().clone();
        let mut text: Vec<String> = vec![FILLER.choose(&mut rng).unwrap().to_string()];
        for w in run(&themes[primary], THEME_RUN, &mut rng) {
            text.push(noisy(w, &mut rng));
        }
        for w in run(&pw, PRODUCT_RUN, &mut rng) {
            text.push(noisy(w, &mut rng));
        }
        let mut gold_industries = vec![industries.codes()[primary].id.clone()];
        if spec.n_industries > 1 && rng.random_bool(SECONDARY_PROB) {
            let mut secondary = rng.random_range(0..spec.n_industries - 1);
            if secondary >= primary {
                secondary += 1;
            }
            for w in run(&themes[secondary], SECONDARY_RUN, &mut rng) {
                text.push(noisy(w, &mut rng));
            }
            gold_industries.push(industries.codes()[secondary].id.clone());
        }
        let source_codes = if covered[primary] {
            Some(triples[primary].choose(&mut rng).unwrap().clone())
        } else {
            None
        };
        companies.push(CompanyRecord {
            id: format!("C{:05}", c + 1),
            description: text.join(" "),
            source_codes,
            gold_industries: Some(gold_industries),
            gold_ps_codes: Some(vec![ps_id]),
        });
    }

    Ok(Corpus {
        industries,
        products: ps_taxonomy,
        mapping,
        companies,
    })
}
