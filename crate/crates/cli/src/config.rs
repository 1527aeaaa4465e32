use anyhow::{bail, Context, Result};
use g2glue::scalar::{format_rational, parse_rational, Rational};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Float,
}

pub const DEFAULT_SEED: u64 = 20240917;

/// Resolved run parameters: defaults, then the config file, then flags.
#[derive(Clone, Debug)]
pub struct Settings {
    pub mode: Mode,
    pub seed: u64,
    pub gamma: Rational,
    pub a: f64,
    pub t: f64,
    pub out: Option<PathBuf>,
    pub tolerances: BTreeMap<String, f64>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            mode: Mode::Exact,
            seed: DEFAULT_SEED,
            gamma: parse_rational("1/100").expect("literal"),
            a: 1.0,
            t: 1.0,
            out: None,
            tolerances: BTreeMap::new(),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub seed: Option<u64>,
    pub gamma: Option<String>,
    pub a: Option<f64>,
    pub t: Option<f64>,
    pub out: Option<PathBuf>,
}

impl Settings {
    pub fn resolve(config: Option<&Path>, flags: &Overrides) -> Result<Settings> {
        let mut s = Settings::default();
        if let Some(path) = config {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            s.apply_file(&text)?;
        }
        if let Some(m) = flags.mode {
            s.mode = m;
        }
        if let Some(seed) = flags.seed {
            s.seed = seed;
        }
        if let Some(g) = &flags.gamma {
            s.set("gamma", g)?;
        }
        if let Some(a) = flags.a {
            s.set("a", &a.to_string())?;
        }
        if let Some(t) = flags.t {
            s.set("t", &t.to_string())?;
        }
        if let Some(o) = &flags.out {
            s.out = Some(o.clone());
        }
        Ok(s)
    }

    /// `key = value` lines; `#` starts a comment.
    pub fn apply_file(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                bail!("line {}: expected key = value", n + 1);
            };
            self.set(k.trim(), v.trim()).with_context(|| format!("line {}", n + 1))?;
        }
        Ok(())
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "mode" => {
                self.mode = match value {
                    "exact" => Mode::Exact,
                    "float" => Mode::Float,
                    other => bail!("unknown mode {other}"),
                }
            }
            "seed" => self.seed = value.parse().context("seed")?,
            "gamma" => {
                let g = parse_rational(value).with_context(|| format!("gamma {value} is not a rational"))?;
                if g <= Rational::from_integer(0.into()) {
                    bail!("gamma must be positive");
                }
                self.gamma = g;
            }
            "a" | "t" => {
                let x: f64 = value.parse().with_context(|| format!("{key} = {value}"))?;
                if !(x.is_finite() && x > 0.0) {
                    bail!("{key} must be positive");
                }
                if key == "a" {
                    self.a = x;
                } else {
                    self.t = x;
                }
            }
            "out" => self.out = Some(PathBuf::from(value)),
            k if k.starts_with("tol.") => {
                let x: f64 = value.parse().with_context(|| format!("{key} = {value}"))?;
                self.tolerances.insert(k["tol.".len()..].to_string(), x);
            }
            other => bail!("unknown key {other}"),
        }
        Ok(())
    }

    pub fn tol(&self, name: &str, default: f64) -> f64 {
        self.tolerances.get(name).copied().unwrap_or(default)
    }

    pub fn gamma_f64(&self) -> f64 {
        g2glue::scalar::Scalar::to_f64(&self.gamma)
    }

    pub fn describe(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("a".into(), self.a.to_string());
        m.insert("gamma".into(), format_rational(&self.gamma));
        m.insert("t".into(), self.t.to_string());
        for (k, v) in &self.tolerances {
            m.insert(format!("tol.{k}"), v.to_string());
        }
        m
    }
}
