//! Flat `key = value` parameter files.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// String-valued parameters; typed access parses on demand.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Params(BTreeMap<String, String>);

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses `key = value` lines. `#` starts a comment; blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = Self::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("line {}: expected `key = value`, got `{line}`", lineno + 1)))?;
            let k = k.trim();
            if k.is_empty() || k.contains(char::is_whitespace) {
                return Err(Error::Format(format!("line {}: bad key `{k}`", lineno + 1)));
            }
            out.set(k, v.trim());
        }
        Ok(out)
    }

    /// Parses a single `key=value` override.
    pub fn parse_assignment(s: &str) -> Result<(String, String)> {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("expected key=value, got `{s}`")))?;
        Ok((k.trim().to_string(), v.trim().to_string()))
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl Into<String>) -> &mut Self {
        self.0.insert(key.into(), value.into());
        self
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.set(key, value.to_string());
        self
    }

    pub fn contains(&self, key: &str) -> bool {
        self.0.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    /// Overlays `other` on top of `self`.
    pub fn merged(&self, other: &Params) -> Params {
        let mut out = self.clone();
        for (k, v) in &other.0 {
            out.0.insert(k.clone(), v.clone());
        }
        out
    }

    fn text(&self, key: &str) -> Result<&str> {
        match self.0.get(key) {
            Some(v) if !v.is_empty() => Ok(v),
            _ => Err(Error::MissingKey(key.to_string())),
        }
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        let v = self.text(key)?;
        v.parse()
            .map_err(|e| Error::Format(format!("parameter `{key}` = `{v}`: {e}")))
    }

    /// Comma-separated list; `;` separates groups in [`Params::groups`].
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>>
    where
        T::Err: fmt::Display,
    {
        parse_list(key, self.text(key)?)
    }

    /// `;`-separated groups of comma-separated values.
    pub fn groups<T: FromStr>(&self, key: &str) -> Result<Vec<Vec<T>>>
    where
        T::Err: fmt::Display,
    {
        self.text(key)?
            .split(';')
            .filter(|g| !g.trim().is_empty())
            .map(|g| parse_list(key, g))
            .collect()
    }
}

fn parse_list<T: FromStr>(key: &str, text: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|e| Error::Format(format!("parameter `{key}` item `{s}`: {e}")))
        })
        .collect()
}

impl fmt::Display for Params {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.0 {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_file() {
        let p = Params::parse("# run\nsigma = 1.5\n\n n=1024 # points\nepsilons = 0.5, 0.25\n").unwrap();
        assert_eq!(p.get::<f64>("sigma").unwrap(), 1.5);
        assert_eq!(p.get::<usize>("n").unwrap(), 1024);
        assert_eq!(p.list::<f64>("epsilons").unwrap(), vec![0.5, 0.25]);
    }

    #[test]
    fn round_trips_through_display() {
        let p = Params::new().with("a", 1).with("b", "x,y");
        assert_eq!(Params::parse(&p.to_string()).unwrap(), p);
    }

    #[test]
    fn reports_errors() {
        assert!(matches!(Params::parse("novalue"), Err(Error::Format(_))));
        assert!(matches!(Params::parse("bad key = 1"), Err(Error::Format(_))));
        let p = Params::parse("x =\ny = abc").unwrap();
        assert!(matches!(p.get::<f64>("x"), Err(Error::MissingKey(_))));
        assert!(matches!(p.get::<f64>("z"), Err(Error::MissingKey(_))));
        assert!(matches!(p.get::<f64>("y"), Err(Error::Format(_))));
    }

    #[test]
    fn groups_split_on_semicolons() {
        let p = Params::new().with("triples", "1,2,0; 2,2,1");
        assert_eq!(p.groups::<f64>("triples").unwrap(), vec![vec![1.0, 2.0, 0.0], vec![2.0, 2.0, 1.0]]);
    }
}
