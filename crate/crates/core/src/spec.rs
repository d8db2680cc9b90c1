//! The `name:key=value[,key=value]*` grammar shared by the CLI's
//! distribution and policy arguments.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SpecArgs<'a> {
    input: &'a str,
    pub name: String,
    pairs: Vec<(&'a str, &'a str)>,
}

/// Splits `input` into a lower-cased name and its key/value pairs.
/// Duplicate keys and empty keys are rejected.
pub fn parse_spec(input: &str) -> Result<SpecArgs<'_>> {
    let trimmed = input.trim();
    if trimmed.is_empty() {
        return Err(Error::parse(input, "empty specification"));
    }
    let (name, rest) = match trimmed.split_once(':') {
        Some((n, r)) => (n.trim(), Some(r)),
        None => (trimmed, None),
    };
    if name.is_empty() {
        return Err(Error::parse(input, "missing name"));
    }
    let mut pairs: Vec<(&str, &str)> = Vec::new();
    if let Some(rest) = rest {
        for item in rest.split(',') {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::parse(input, format!("`{item}` is not key=value")))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(Error::parse(input, "empty key"));
            }
            if pairs.iter().any(|(seen, _)| *seen == k) {
                return Err(Error::parse(input, format!("duplicate key `{k}`")));
            }
            pairs.push((k, v));
        }
    }
    Ok(SpecArgs {
        input,
        name: name.to_ascii_lowercase(),
        pairs,
    })
}

impl<'a> SpecArgs<'a> {
    pub fn input(&self) -> &'a str {
        self.input
    }

    pub fn raw(&self, key: &str) -> Option<&'a str> {
        self.pairs.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
    }

    pub fn number(&self, key: &str) -> Result<Option<f64>> {
        self.raw(key)
            .map(|v| parse_number(self.input, key, v))
            .transpose()
    }

    pub fn require(&self, key: &str) -> Result<f64> {
        self.number(key)?
            .ok_or_else(|| Error::parse(self.input, format!("missing key `{key}`")))
    }

    /// Rejects keys outside `allowed`.
    pub fn only(&self, allowed: &[&str]) -> Result<()> {
        for (k, _) in &self.pairs {
            if !allowed.contains(k) {
                return Err(Error::parse(
                    self.input,
                    format!("unknown key `{k}` for `{}` (expected one of {allowed:?})", self.name),
                ));
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

pub(crate) fn parse_number(input: &str, key: &str, value: &str) -> Result<f64> {
    let v: f64 = value
        .trim()
        .parse()
        .map_err(|_| Error::parse(input, format!("`{key}` has non-numeric value `{value}`")))?;
    if !v.is_finite() {
        return Err(Error::parse(input, format!("`{key}` must be finite")));
    }
    Ok(v)
}

/// Comma-separated list of finite numbers, e.g. `0.01,0.1,1`.
pub fn parse_number_list(input: &str) -> Result<Vec<f64>> {
    let trimmed = input.trim();
    if trimmed.is_empty() {
        return Err(Error::parse(input, "empty list"));
    }
    trimmed
        .split(',')
        .map(|item| parse_number(input, "list item", item))
        .collect()
}
