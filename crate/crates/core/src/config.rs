//! Run configuration in TOML.
//!
//! ```toml
//! [seed]
//! p = 2
//! sites = [[1]]
//! amplitudes = [0.01]
//!
//! [boxes]
//! char_n = 30
//! char_j = 45
//! ```
//!
//! Every section other than `[seed]` is optional. The config hash is the
//! SHA-256 of the canonical JSON form of the parsed config together with the
//! contents of any `H`-coefficient files, so comments and formatting do not
//! affect it.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::genericity::{GenericityOptions, IiMode, DEFAULT_ALGEBRA_CAP};
use crate::lattice::{CoeffRecord, SpectralCoeffs};
use crate::seed::{LinearSeed, Nonlinearity};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedSection {
    pub p: u32,
    pub sites: Vec<Vec<i64>>,
    /// Explicit amplitudes. With `delta` they are a template rescaled to
    /// `max |a_k| = delta`.
    #[serde(default)]
    pub amplitudes: Option<Vec<f64>>,
    #[serde(default)]
    pub delta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HTermSection {
    pub m: u32,
    /// JSON list of `{n, j, re, im}` records, relative to the config file.
    pub coefficients: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoxSection {
    /// Characteristic enumeration: `‖n‖₁ ≤ char_n`, `‖j‖_∞ ≤ char_j`.
    pub char_n: i64,
    pub char_j: i64,
    /// Truncated operator `F′_N`.
    pub op_n: i64,
    pub op_j: i64,
    /// Newton box radii; `⌈|ln δ|^{1.5}⌉` when absent.
    pub newton_n: Option<i64>,
    pub newton_j: Option<i64>,
    pub newton_grow_to: Option<i64>,
}

impl Default for BoxSection {
    fn default() -> Self {
        Self {
            char_n: 30,
            char_j: 45,
            op_n: 3,
            op_j: 10,
            newton_n: None,
            newton_j: None,
            newton_grow_to: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceSection {
    pub solve_tol: f64,
    pub max_iter: usize,
    pub rho: f64,
    pub epsilon: f64,
    /// `δN` must not exceed this for the truncated gap estimate.
    pub smallness: f64,
}

impl Default for ToleranceSection {
    fn default() -> Self {
        Self {
            solve_tol: 1e-11,
            max_iter: 30,
            rho: 0.5,
            epsilon: 0.1,
            smallness: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenericityModeName {
    Exhaustive,
    Sampled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenericitySection {
    pub mode: GenericityModeName,
    pub cap: u64,
    pub samples: u64,
    pub algebra_cap: usize,
}

impl Default for GenericitySection {
    fn default() -> Self {
        Self {
            mode: GenericityModeName::Exhaustive,
            cap: 1_000_000,
            samples: 2_000,
            algebra_cap: DEFAULT_ALGEBRA_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveSection {
    pub delta: f64,
    pub a_exp: f64,
    pub k: f64,
    pub grid: Option<usize>,
    pub dt: Option<f64>,
    pub checkpoints: usize,
}

impl Default for EvolveSection {
    fn default() -> Self {
        Self {
            delta: 0.02,
            a_exp: 1.5,
            k: 10.0,
            grid: None,
            dt: None,
            checkpoints: 500,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeasureSection {
    pub samples: u64,
    pub epsilons: Vec<f64>,
    pub a_inf: f64,
    pub site_box: f64,
    pub threshold: f64,
}

impl Default for MeasureSection {
    fn default() -> Self {
        Self {
            samples: 10_000,
            epsilons: vec![0.1, 0.03, 0.01],
            a_inf: 0.1,
            site_box: 5.0,
            threshold: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: SeedSection,
    #[serde(default)]
    pub h_terms: Vec<HTermSection>,
    #[serde(default)]
    pub boxes: BoxSection,
    #[serde(default)]
    pub tolerances: ToleranceSection,
    #[serde(default)]
    pub genericity: GenericitySection,
    #[serde(default)]
    pub evolve: EvolveSection,
    #[serde(default)]
    pub measure: MeasureSection,
    #[serde(default)]
    pub rng_seed: u64,
}

/// A parsed and validated config with its `H` series loaded.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub h_series: Vec<(u32, SpectralCoeffs<f64>)>,
    pub hash: String,
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be positive and finite, got {v}")))
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let field = e.span().map_or_else(|| "<document>".to_string(), |s| format!("<bytes {}..{}>", s.start, s.end));
            Error::config(field, e.message().to_string())
        })
    }

    /// Amplitudes after applying `delta`.
    pub fn amplitudes(&self) -> Result<Vec<f64>> {
        let s = &self.seed;
        let base = match (&s.amplitudes, s.delta) {
            (Some(a), _) => a.clone(),
            (None, Some(_)) => vec![1.0; s.sites.len()],
            (None, None) => return Err(Error::config("seed.amplitudes", "give amplitudes, delta, or both")),
        };
        match s.delta {
            Some(d) => {
                positive("seed.delta", d)?;
                Ok(rescale(&base, d))
            }
            None => Ok(base),
        }
    }

    pub fn seed_with_delta(&self, delta: Option<f64>) -> Result<LinearSeed> {
        let mut a = self.amplitudes()?;
        if let Some(d) = delta {
            positive("--delta", d)?;
            a = rescale(&a, d);
        }
        LinearSeed::new(self.seed.sites.clone(), a, self.seed.p).map_err(|e| Error::config("seed", e.to_string()))
    }

    pub fn seed(&self) -> Result<LinearSeed> {
        self.seed_with_delta(None)
    }

    /// Field-level validation of everything except the `H` files.
    pub fn validate(&self) -> Result<()> {
        self.seed()?;
        let b = &self.boxes;
        for (f, v) in [("boxes.char_n", b.char_n), ("boxes.char_j", b.char_j), ("boxes.op_n", b.op_n), ("boxes.op_j", b.op_j)] {
            if v < 1 {
                return Err(Error::config(f, "must be >= 1"));
            }
        }
        for (f, v) in [("boxes.newton_n", b.newton_n), ("boxes.newton_j", b.newton_j), ("boxes.newton_grow_to", b.newton_grow_to)] {
            if matches!(v, Some(x) if x < 1) {
                return Err(Error::config(f, "must be >= 1"));
            }
        }
        let t = &self.tolerances;
        positive("tolerances.solve_tol", t.solve_tol)?;
        positive("tolerances.rho", t.rho)?;
        positive("tolerances.epsilon", t.epsilon)?;
        positive("tolerances.smallness", t.smallness)?;
        if t.max_iter == 0 {
            return Err(Error::config("tolerances.max_iter", "must be >= 1"));
        }
        let e = &self.evolve;
        if !(e.delta >= 0.0) {
            return Err(Error::config("evolve.delta", "must be >= 0"));
        }
        positive("evolve.a_exp", e.a_exp)?;
        positive("evolve.k", e.k)?;
        if let Some(dt) = e.dt {
            positive("evolve.dt", dt)?;
        }
        if matches!(e.grid, Some(m) if m < 4) {
            return Err(Error::config("evolve.grid", "must be >= 4"));
        }
        let m = &self.measure;
        if m.samples == 0 {
            return Err(Error::config("measure.samples", "must be >= 1"));
        }
        positive("measure.a_inf", m.a_inf)?;
        positive("measure.site_box", m.site_box)?;
        positive("measure.threshold", m.threshold)?;
        for eps in &m.epsilons {
            positive("measure.epsilons", *eps)?;
        }
        if self.genericity.samples == 0 {
            return Err(Error::config("genericity.samples", "must be >= 1"));
        }
        for h in &self.h_terms {
            if h.m < 2 {
                return Err(Error::config("h_terms.m", "H terms start at m = 2"));
            }
        }
        Ok(())
    }

    pub fn genericity_options(&self, mode: Option<GenericityModeName>, samples: Option<u64>, rng_seed: Option<u64>) -> GenericityOptions {
        let g = &self.genericity;
        let rng_seed = rng_seed.unwrap_or(self.rng_seed);
        let samples = samples.unwrap_or(g.samples);
        let mode_ii = match mode.unwrap_or_else(|| g.mode.clone()) {
            GenericityModeName::Exhaustive => IiMode::Exhaustive {
                cap: g.cap,
                fallback_samples: samples,
                rng_seed,
            },
            GenericityModeName::Sampled => IiMode::Sampled { count: samples, rng_seed },
        };
        GenericityOptions {
            mode_ii,
            algebra_cap: g.algebra_cap,
        }
    }
}

fn rescale(a: &[f64], delta: f64) -> Vec<f64> {
    let m = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if m == 0.0 {
        return a.to_vec();
    }
    a.iter().map(|x| x / m * delta).collect()
}

impl LoadedConfig {
    /// Parses, validates and loads `H` files relative to `base_dir`.
    pub fn from_str_in(text: &str, base_dir: &Path) -> Result<Self> {
        let config = RunConfig::from_toml(text)?;
        config.validate()?;
        let seed = config.seed()?;
        let mut h_series = Vec::new();
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_vec(&config)?);
        for h in &config.h_terms {
            let path = base_dir.join(&h.coefficients);
            let raw = std::fs::read_to_string(&path)
                .map_err(|e| Error::config("h_terms.coefficients", format!("{}: {e}", path.display())))?;
            let recs: Vec<CoeffRecord> =
                serde_json::from_str(&raw).map_err(|e| Error::config("h_terms.coefficients", e.to_string()))?;
            let series = SpectralCoeffs::from_records(seed.b(), seed.d(), &recs)
                .map_err(|e| Error::config("h_terms.coefficients", e.to_string()))?;
            hasher.update(serde_json::to_vec(&series.to_records())?);
            h_series.push((h.m, series));
        }
        Ok(Self {
            config,
            h_series,
            hash: hex::encode(hasher.finalize()),
        })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("<file>", format!("cannot read {}: {e}", path.display())))?;
        Self::from_str_in(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn nonlinearity(&self) -> Result<Nonlinearity<f64>> {
        let mut nl = Nonlinearity::power(self.config.seed.p);
        for (m, s) in &self.h_series {
            nl = nl
                .with_term(*m, s.clone())
                .map_err(|e| Error::config("h_terms", e.to_string()))?;
        }
        Ok(nl)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PELL: &str = "[seed]\np = 2\nsites = [[1]]\namplitudes = [0.01]\n";

    #[test]
    fn parse_and_hash() {
        let a = LoadedConfig::from_str_in(PELL, Path::new(".")).unwrap();
        let b = LoadedConfig::from_str_in(&format!("# comment\n{PELL}\n[boxes]\nchar_n = 30\n"), Path::new(".")).unwrap();
        assert_eq!(a.hash, b.hash);
        assert_eq!(a.hash.len(), 64);
        let c = LoadedConfig::from_str_in(&PELL.replace("0.01", "0.02"), Path::new(".")).unwrap();
        assert_ne!(a.hash, c.hash);
    }

    #[test]
    fn field_level_errors() {
        let e = LoadedConfig::from_str_in(&PELL.replace("[[1]]", "[[0]]"), Path::new(".")).unwrap_err();
        assert!(e.to_string().contains("j_k != 0"), "{e}");
        let e = LoadedConfig::from_str_in(&format!("{PELL}[tolerances]\nrho = -1.0\n"), Path::new(".")).unwrap_err();
        assert!(e.to_string().contains("tolerances.rho"));
        assert!(LoadedConfig::from_str_in(&format!("{PELL}bogus = 1\n"), Path::new(".")).is_err());
        let e = LoadedConfig::from_str_in("[seed]\np = 2\nsites = [[1]]\n", Path::new(".")).unwrap_err();
        assert!(e.to_string().contains("seed.amplitudes"));
    }

    #[test]
    fn delta_rescales() {
        let c = RunConfig::from_toml("[seed]\np = 2\nsites = [[1], [2]]\namplitudes = [2.0, 1.0]\ndelta = 0.01\n").unwrap();
        assert_eq!(c.amplitudes().unwrap(), vec![0.01, 0.005]);
        let s = c.seed_with_delta(Some(0.02)).unwrap();
        assert_eq!(s.amplitudes(), &[0.02, 0.01]);
    }
}
