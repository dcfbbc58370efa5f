//! Named, strictly positive model parameters.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};

/// A vector of named real model parameters (wave speed, wavenumber scale,
/// surface tension, depth, ...). Entries are strictly positive; the names
/// and their order come from the owning model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Params {
    names: Vec<&'static str>,
    values: Vec<f64>,
}

impl Params {
    /// Builds a parameter vector, checking positivity of every entry.
    pub fn new(names: &'static [&'static str], values: Vec<f64>) -> Result<Self> {
        assert_eq!(names.len(), values.len(), "name/value length mismatch");
        for (&name, &value) in names.iter().zip(&values) {
            if value <= 0.0 || !value.is_finite() {
                return Err(Error::InvalidParameter {
                    name: name.to_string(),
                    value,
                    constraint: "strictly positive and finite",
                });
            }
        }
        Ok(Params {
            names: names.to_vec(),
            values,
        })
    }

    pub fn names(&self) -> &[&'static str] {
        &self.names
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value by position.
    pub fn value(&self, index: usize) -> f64 {
        self.values[index]
    }

    /// Value by name.
    pub fn get(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|&n| n == name)
            .map(|i| self.values[i])
    }

    /// Position of a named parameter.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|&n| n == name)
    }

    /// Returns a copy with entry `index` replaced by `value`.
    pub fn with_value(&self, index: usize, value: f64) -> Params {
        let mut out = self.clone();
        out.values[index] = value;
        out
    }

    /// Name -> value map with deterministic (sorted) iteration order.
    pub fn as_map(&self) -> BTreeMap<String, f64> {
        self.names
            .iter()
            .zip(&self.values)
            .map(|(&n, &v)| (n.to_string(), v))
            .collect()
    }
}

/// Fixed parameters supplied by the caller to a kernel solve (e.g. the
/// surface tension T for the infinite-depth Whitham model).
#[derive(Debug, Clone, Default)]
pub struct FixedParams(BTreeMap<String, f64>);

impl FixedParams {
    pub fn new() -> Self {
        FixedParams(BTreeMap::new())
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.0.insert(name.to_string(), value);
        self
    }

    pub fn set(&mut self, name: &str, value: f64) {
        self.0.insert(name.to_string(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    /// Fetches a required entry, checking positivity.
    pub fn require(&self, model: &'static str, name: &'static str) -> Result<f64> {
        let value = self
            .get(name)
            .ok_or(Error::MissingParameter { model, name })?;
        if value <= 0.0 || !value.is_finite() {
            return Err(Error::InvalidParameter {
                name: name.to_string(),
                value,
                constraint: "strictly positive and finite",
            });
        }
        Ok(value)
    }
}
