//! NK fitness landscapes and multi-environment landscape sets.
//!
//! Each of the N traits depends on itself and K other traits. Its
//! contribution is read from a table of `2^(K+1)` values in `[0, 1]`, indexed
//! by the trait's own bit (most significant) followed by its neighbors' bits
//! in stored order. Fitness is the mean contribution.
//!
//! Landscapes serialize to JSON as
//!
//! ```json
//! { "schema_version": 1, "n": 2, "k": 1,
//!   "neighbors": [[1], [0]],
//!   "tables": [[0.1, 0.5, 0.25, 0.9], [0.3, 0.2, 0.7, 0.6]] }
//! ```
//!
//! and environment sets as `{ "schema_version": 1, "v": 0.5, "varied_traits": 5,
//! "landscapes": [ ... ] }`. Table values are written at full precision and
//! read back bit-exactly.

use std::fs;
use std::path::Path;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest N accepted by [`Landscape::exhaustive_optimum`].
pub const MAX_EXHAUSTIVE_TRAITS: usize = 20;

pub const LANDSCAPE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LandscapeRepr", into = "LandscapeRepr")]
pub struct Landscape {
    n: usize,
    k: usize,
    neighbors: Vec<Vec<usize>>,
    tables: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct LandscapeRepr {
    schema_version: u32,
    n: usize,
    k: usize,
    neighbors: Vec<Vec<usize>>,
    tables: Vec<Vec<f64>>,
}

impl TryFrom<LandscapeRepr> for Landscape {
    type Error = Error;

    fn try_from(repr: LandscapeRepr) -> Result<Self> {
        if repr.schema_version != LANDSCAPE_SCHEMA_VERSION {
            return Err(Error::InvalidParameter(format!(
                "unsupported landscape schema version {}",
                repr.schema_version
            )));
        }
        Landscape::from_parts(repr.n, repr.k, repr.neighbors, repr.tables)
    }
}

impl From<Landscape> for LandscapeRepr {
    fn from(l: Landscape) -> Self {
        LandscapeRepr {
            schema_version: LANDSCAPE_SCHEMA_VERSION,
            n: l.n,
            k: l.k,
            neighbors: l.neighbors,
            tables: l.tables,
        }
    }
}

/// Result of enumerating every genotype of a landscape.
#[derive(Debug, Clone, PartialEq)]
pub struct ExhaustiveOptimum {
    pub best_traits: Vec<bool>,
    pub best_fitness: f64,
    /// Genotypes at least as fit as each of their N one-bit neighbors.
    pub local_optima: usize,
}

impl Landscape {
    /// Random landscape: neighbors drawn without replacement from the other
    /// traits, table entries uniform on `[0, 1)`.
    pub fn generate<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("N must be at least 1".into()));
        }
        if k >= n {
            return Err(Error::InvalidParameter(format!("K = {k} must be below N = {n}")));
        }
        let neighbors = (0..n)
            .map(|i| {
                sample(rng, n - 1, k)
                    .into_iter()
                    .map(|j| if j >= i { j + 1 } else { j })
                    .collect()
            })
            .collect();
        let tables = (0..n).map(|_| random_table(k, rng)).collect();
        Ok(Landscape {
            n,
            k,
            neighbors,
            tables,
        })
    }

    /// Assembles a landscape from explicit parts, checking every invariant.
    pub fn from_parts(
        n: usize,
        k: usize,
        neighbors: Vec<Vec<usize>>,
        tables: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if n == 0 || k >= n {
            return Err(Error::InvalidParameter(format!("need 0 <= K < N, got N={n}, K={k}")));
        }
        if neighbors.len() != n || tables.len() != n {
            return Err(Error::InvalidParameter(format!(
                "expected {n} neighbor lists and tables, got {} and {}",
                neighbors.len(),
                tables.len()
            )));
        }
        for (i, list) in neighbors.iter().enumerate() {
            let mut sorted = list.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if list.len() != k || sorted.len() != k || list.iter().any(|&j| j == i || j >= n) {
                return Err(Error::InvalidParameter(format!(
                    "trait {i}: neighbors must be {k} distinct other traits, got {list:?}"
                )));
            }
        }
        for (i, table) in tables.iter().enumerate() {
            if table.len() != 1 << (k + 1) {
                return Err(Error::InvalidParameter(format!(
                    "trait {i}: table has {} entries, expected {}",
                    table.len(),
                    1 << (k + 1)
                )));
            }
            if table.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidParameter(format!(
                    "trait {i}: table entries must lie in [0, 1]"
                )));
            }
        }
        Ok(Landscape {
            n,
            k,
            neighbors,
            tables,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn neighbors(&self, trait_index: usize) -> &[usize] {
        &self.neighbors[trait_index]
    }

    pub fn table(&self, trait_index: usize) -> &[f64] {
        &self.tables[trait_index]
    }

    /// Mean contribution over all traits; `traits.len()` must equal N.
    pub fn fitness(&self, traits: &[bool]) -> Result<f64> {
        if traits.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: traits.len(),
            });
        }
        Ok(self.fitness_unchecked(traits))
    }

    /// Table value contributed by one trait under the given genotype.
    pub fn contribution(&self, trait_index: usize, traits: &[bool]) -> f64 {
        let index = self.neighbors[trait_index]
            .iter()
            .fold(usize::from(traits[trait_index]), |acc, &j| {
                (acc << 1) | usize::from(traits[j])
            });
        self.tables[trait_index][index]
    }

    #[inline]
    pub(crate) fn fitness_unchecked(&self, traits: &[bool]) -> f64 {
        let total: f64 = self
            .neighbors
            .iter()
            .zip(&self.tables)
            .zip(traits)
            .map(|((neighbors, table), &own)| {
                let index = neighbors
                    .iter()
                    .fold(usize::from(own), |acc, &j| (acc << 1) | usize::from(traits[j]));
                table[index]
            })
            .sum();
        total / self.n as f64
    }

    /// Enumerates all `2^N` genotypes. Genotype `g` sets trait `i` to bit `i`
    /// of `g`.
    pub fn exhaustive_optimum(&self) -> Result<ExhaustiveOptimum> {
        if self.n > MAX_EXHAUSTIVE_TRAITS {
            return Err(Error::TooLarge(self.n));
        }
        let count = 1usize << self.n;
        let mut traits = vec![false; self.n];
        let values: Vec<f64> = (0..count)
            .map(|g| {
                for (i, t) in traits.iter_mut().enumerate() {
                    *t = (g >> i) & 1 == 1;
                }
                self.fitness_unchecked(&traits)
            })
            .collect();
        let (best, &best_fitness) = values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("at least one genotype");
        let local_optima = (0..count)
            .filter(|&g| (0..self.n).all(|i| values[g] >= values[g ^ (1 << i)]))
            .count();
        Ok(ExhaustiveOptimum {
            best_traits: (0..self.n).map(|i| (best >> i) & 1 == 1).collect(),
            best_fitness,
            local_optima,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("landscape serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::json("<string>", e))
    }
}

fn random_table<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    (0..1 << (k + 1)).map(|_| rng.random::<f64>()).collect()
}

/// One landscape per environment, sharing N, K and the epistasis map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EnvironmentSetRepr", into = "EnvironmentSetRepr")]
pub struct EnvironmentSet {
    v: f64,
    varied_traits: usize,
    landscapes: Vec<Landscape>,
}

#[derive(Serialize, Deserialize)]
struct EnvironmentSetRepr {
    schema_version: u32,
    v: f64,
    varied_traits: usize,
    landscapes: Vec<Landscape>,
}

impl TryFrom<EnvironmentSetRepr> for EnvironmentSet {
    type Error = Error;

    fn try_from(repr: EnvironmentSetRepr) -> Result<Self> {
        if repr.schema_version != LANDSCAPE_SCHEMA_VERSION {
            return Err(Error::InvalidParameter(format!(
                "unsupported environment schema version {}",
                repr.schema_version
            )));
        }
        let Some(first) = repr.landscapes.first() else {
            return Err(Error::InvalidParameter("environment set is empty".into()));
        };
        if repr.varied_traits != varied_trait_count(first.n, repr.v)? {
            return Err(Error::InvalidParameter(format!(
                "varied_traits {} inconsistent with V = {}",
                repr.varied_traits, repr.v
            )));
        }
        for l in &repr.landscapes[1..] {
            if l.n != first.n || l.k != first.k || l.neighbors != first.neighbors {
                return Err(Error::InvalidParameter(
                    "environment landscapes must share N, K and neighbors".into(),
                ));
            }
            if l.tables[repr.varied_traits..] != first.tables[repr.varied_traits..] {
                return Err(Error::InvalidParameter(
                    "shared traits must have identical tables".into(),
                ));
            }
        }
        Ok(EnvironmentSet {
            v: repr.v,
            varied_traits: repr.varied_traits,
            landscapes: repr.landscapes,
        })
    }
}

impl From<EnvironmentSet> for EnvironmentSetRepr {
    fn from(e: EnvironmentSet) -> Self {
        EnvironmentSetRepr {
            schema_version: LANDSCAPE_SCHEMA_VERSION,
            v: e.v,
            varied_traits: e.varied_traits,
            landscapes: e.landscapes,
        }
    }
}

/// `N * V` as an exact trait count; rejects non-integral products.
pub fn varied_trait_count(n: usize, v: f64) -> Result<usize> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidParameter(format!("V = {v} outside [0, 1]")));
    }
    let product = n as f64 * v;
    let rounded = product.round();
    if (product - rounded).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "N * V = {product} is not an integer"
        )));
    }
    Ok(rounded as usize)
}

impl EnvironmentSet {
    /// Landscape 0 is generated fresh; each further landscape copies it and
    /// re-draws the tables of traits `0..N*V`.
    pub fn generate<R: Rng + ?Sized>(
        n: usize,
        k: usize,
        environments: usize,
        v: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if environments == 0 {
            return Err(Error::InvalidParameter("E must be at least 1".into()));
        }
        let varied_traits = varied_trait_count(n, v)?;
        let base = Landscape::generate(n, k, rng)?;
        let mut landscapes = Vec::with_capacity(environments);
        for _ in 1..environments {
            let mut variant = base.clone();
            for table in &mut variant.tables[..varied_traits] {
                *table = random_table(k, rng);
            }
            landscapes.push(variant);
        }
        landscapes.insert(0, base);
        Ok(EnvironmentSet {
            v,
            varied_traits,
            landscapes,
        })
    }

    /// A set holding one landscape.
    pub fn single(landscape: Landscape) -> Self {
        EnvironmentSet {
            v: 0.0,
            varied_traits: 0,
            landscapes: vec![landscape],
        }
    }

    pub fn landscapes(&self) -> &[Landscape] {
        &self.landscapes
    }

    pub fn len(&self) -> usize {
        self.landscapes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.landscapes.is_empty()
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    pub fn varied_traits(&self) -> usize {
        self.varied_traits
    }

    pub fn n(&self) -> usize {
        self.landscapes[0].n
    }

    pub fn k(&self) -> usize {
        self.landscapes[0].k
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::json(path, e))?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }
}
