//! Name-keyed registries of interchangeable strategies.
//!
//! Every family of pluggable behaviour (overlap kernels, spectral models,
//! cos²Θ distributions, simulation engines, theory queries) is a trait
//! object. A [`Registry`] maps a stable name to a constructor that builds
//! the boxed strategy from numeric [`Params`], so configuration files and
//! the CLI can select variants at runtime.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// Numeric parameters handed to a strategy constructor.
///
/// Constructors consume the keys they understand; [`Params::finish`] then
/// rejects anything left over so typos in a config file are not silently
/// ignored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params {
    values: BTreeMap<String, f64>,
}

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.values.insert(key.to_string(), value);
        self
    }

    pub fn insert(&mut self, key: impl Into<String>, value: f64) {
        self.values.insert(key.into(), value);
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.values.get(key).copied()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Starts a checked read of these parameters.
    pub fn reader(&self) -> ParamReader<'_> {
        ParamReader {
            params: self,
            seen: Vec::new(),
        }
    }
}

impl FromIterator<(String, f64)> for Params {
    fn from_iter<I: IntoIterator<Item = (String, f64)>>(iter: I) -> Self {
        Self {
            values: iter.into_iter().collect(),
        }
    }
}

pub struct ParamReader<'a> {
    params: &'a Params,
    seen: Vec<&'static str>,
}

impl ParamReader<'_> {
    pub fn get_or(&mut self, key: &'static str, default: f64) -> f64 {
        self.seen.push(key);
        self.params.get(key).unwrap_or(default)
    }

    pub fn require(&mut self, key: &'static str) -> Result<f64> {
        self.seen.push(key);
        self.params.get(key).ok_or_else(|| Error::InvalidParameter {
            name: key,
            reason: "required parameter missing".into(),
        })
    }

    /// Fails if any parameter was supplied that no `get_or`/`require` asked for.
    pub fn finish(self) -> Result<()> {
        for (key, _) in self.params.iter() {
            if !self.seen.contains(&key) {
                return Err(Error::Config(format!(
                    "unknown parameter `{key}` (expected one of: {})",
                    self.seen.join(", ")
                )));
            }
        }
        Ok(())
    }
}

type Builder<T> = Box<dyn Fn(&Params) -> Result<Box<T>> + Send + Sync>;

struct Entry<T: ?Sized> {
    summary: &'static str,
    build: Builder<T>,
}

/// Maps names to constructors for boxed strategies of type `T`.
pub struct Registry<T: ?Sized> {
    kind: &'static str,
    entries: BTreeMap<&'static str, Entry<T>>,
}

impl<T: ?Sized> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: BTreeMap::new(),
        }
    }

    /// Registers `name`. A later registration under the same name replaces
    /// the earlier one.
    pub fn register<F>(&mut self, name: &'static str, summary: &'static str, build: F) -> &mut Self
    where
        F: Fn(&Params) -> Result<Box<T>> + Send + Sync + 'static,
    {
        self.entries.insert(
            name,
            Entry {
                summary,
                build: Box::new(build),
            },
        );
        self
    }

    pub fn build(&self, name: &str, params: &Params) -> Result<Box<T>> {
        match self.entries.get(name) {
            Some(entry) => (entry.build)(params),
            None => Err(Error::UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
                available: self.names().collect::<Vec<_>>().join(", "),
            }),
        }
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }

    pub fn describe(&self) -> impl Iterator<Item = (&'static str, &'static str)> + '_ {
        self.entries.iter().map(|(name, e)| (*name, e.summary))
    }

    pub fn kind(&self) -> &'static str {
        self.kind
    }
}

impl<T: ?Sized> fmt::Debug for Registry<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("kind", &self.kind)
            .field("names", &self.entries.keys().collect::<Vec<_>>())
            .finish()
    }
}
