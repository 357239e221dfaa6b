//! Resolution of run parameters: command-line flag, then the key=value
//! config file, then the built-in default. Every resolved value is recorded
//! for the manifest.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use gisflow::Error;

pub struct Settings {
    file: BTreeMap<String, String>,
    resolved: Vec<(String, String)>,
}

/// Comma-separated list of numbers, as used for cut thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatList(pub Vec<f64>);

impl FromStr for FloatList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad number `{}`", t.trim())))
            .collect::<Result<Vec<_>, _>>()
            .map(FloatList)
    }
}

impl Display for FloatList {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, Error> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("config line {}: expected `key = value`", i + 1)))?;
        let key = key.trim().replace('_', "-");
        if map.insert(key.clone(), value.trim().to_owned()).is_some() {
            return Err(Error::Config(format!("config line {}: `{key}` set twice", i + 1)));
        }
    }
    Ok(map)
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self, Error> {
        let file = match path {
            Some(p) => {
                let text = fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("cannot read config {}: {e}", p.display())))?;
                parse_config_text(&text)?
            }
            None => BTreeMap::new(),
        };
        Ok(Self {
            file,
            resolved: Vec::new(),
        })
    }

    fn from_file<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, Error>
    where
        T::Err: Display,
    {
        match self.file.remove(key) {
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| Error::Config(format!("config `{key}`: {e}"))),
            None => Ok(None),
        }
    }

    pub fn get<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, Error>
    where
        T::Err: Display,
    {
        let file = self.from_file(key)?;
        let v = flag.or(file).unwrap_or(default);
        self.resolved.push((key.to_owned(), v.to_string()));
        Ok(v)
    }

    /// Like [`Settings::get`] for parameters whose default is "unset".
    pub fn get_opt<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, Error>
    where
        T::Err: Display,
    {
        let file = self.from_file(key)?;
        let v = flag.or(file);
        let shown = v.as_ref().map(|v| v.to_string()).unwrap_or_else(|| "none".into());
        self.resolved.push((key.to_owned(), shown));
        Ok(v)
    }

    /// Fails on config keys that no parameter consumed.
    pub fn finish(self) -> Result<Vec<(String, String)>, Error> {
        if let Some(key) = self.file.keys().next() {
            return Err(Error::Config(format!("unknown config key `{key}`")));
        }
        Ok(self.resolved)
    }
}
