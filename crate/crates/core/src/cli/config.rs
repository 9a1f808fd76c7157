//! Run settings merged from flags, environment, an INI file and defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ini::Ini;

use crate::error::{Error, Result};
use crate::params::RawParams;
use crate::radial::IntegrationConfig;

/// Keys accepted on the command line, in the environment (`PRADIAL_<KEY>`)
/// and in the config file.
pub const KEYS: [&str; 16] = [
    "N", "p", "m", "q", "alpha", "beta", "a", "b", "r0", "rmax", "rtol", "atol", "cap", "out", "seed", "workers",
];

const PARAM_KEYS: [&str; 6] = ["N", "p", "m", "q", "alpha", "beta"];

/// Raw string values by key. Flag values win over file values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<&'static str, String>,
}

impl Settings {
    pub fn from_sources(cli: &[(&'static str, Option<String>)], config: Option<&Path>) -> Result<Self> {
        let mut values = match config {
            Some(path) => read_ini(path)?,
            None => BTreeMap::new(),
        };
        for (key, value) in cli {
            if let Some(v) = value {
                values.insert(*key, v.clone());
            }
        }
        Ok(Settings { values })
    }

    pub fn set_default(&mut self, key: &'static str, value: &str) {
        self.values.entry(key).or_insert_with(|| value.to_string());
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn spec(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.raw(key).map(|s| parse_spec(key, s)).transpose()
    }

    pub fn f64_opt(&self, key: &str) -> Result<Option<f64>> {
        match self.spec(key)? {
            None => Ok(None),
            Some(v) if v.len() == 1 => Ok(Some(v[0])),
            Some(_) => Err(Error::Config(format!("{key} takes a single value here"))),
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64_opt(key)?.unwrap_or(default))
    }

    pub fn f64_req(&self, key: &str) -> Result<f64> {
        self.f64_opt(key)?
            .ok_or_else(|| Error::Config(format!("missing --{key}")))
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => s
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{key} must be a nonnegative integer, got {s:?}"))),
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(self.raw("out").unwrap_or("out"))
    }

    pub fn seed(&self) -> Result<u64> {
        self.u64_or("seed", 0)
    }

    pub fn workers(&self) -> Result<usize> {
        let default = std::thread::available_parallelism().map_or(1, |n| n.get()) as u64;
        match self.u64_or("workers", default)? {
            0 => Err(Error::Config("workers must be at least 1".into())),
            w => Ok(w as usize),
        }
    }

    /// Single parameter tuple; all six keys are required.
    pub fn params(&self) -> Result<RawParams> {
        let n = self.f64_req("N")?;
        Ok(RawParams {
            n: dimension(n)?,
            p: self.f64_req("p")?,
            m: self.f64_req("m")?,
            q: self.f64_req("q")?,
            alpha: self.f64_req("alpha")?,
            beta: self.f64_req("beta")?,
        })
    }

    /// Cartesian grid over the parameter specs, `N` outermost.
    pub fn param_grid(&self) -> Result<Vec<RawParams>> {
        let mut axes = Vec::with_capacity(6);
        for key in PARAM_KEYS {
            axes.push(
                self.spec(key)?
                    .ok_or_else(|| Error::Config(format!("missing --{key}")))?,
            );
        }
        let mut grid = Vec::new();
        for &n in &axes[0] {
            let n = dimension(n)?;
            for &p in &axes[1] {
                for &m in &axes[2] {
                    for &q in &axes[3] {
                        for &alpha in &axes[4] {
                            for &beta in &axes[5] {
                                grid.push(RawParams { n, p, m, q, alpha, beta });
                            }
                        }
                    }
                }
            }
        }
        Ok(grid)
    }

    pub fn initial(&self) -> Result<(f64, f64)> {
        let a = self.f64_or("a", 1.0)?;
        let b = self.f64_or("b", 1.0)?;
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::Config(format!("initial values must be positive, got a={a}, b={b}")));
        }
        Ok((a, b))
    }

    pub fn integration(&self) -> Result<IntegrationConfig> {
        let d = IntegrationConfig::default();
        let cfg = IntegrationConfig {
            r0: self.f64_or("r0", d.r0)?,
            r_max: self.f64_or("rmax", d.r_max)?,
            rtol: self.f64_or("rtol", d.rtol)?,
            atol: self.f64_or("atol", d.atol)?,
            blowup_cap: self.f64_or("cap", d.blowup_cap)?,
            ..d
        };
        if !(cfg.r0 > 0.0 && cfg.r0 < 1.0 && cfg.r_max > 1.0) {
            return Err(Error::Config(format!(
                "need 0 < r0 < 1 < rmax, got r0={}, rmax={}",
                cfg.r0, cfg.r_max
            )));
        }
        if !(cfg.blowup_cap > 1.0) {
            return Err(Error::Config(format!("cap must exceed 1, got {}", cfg.blowup_cap)));
        }
        if !(cfg.rtol > 0.0 && cfg.atol > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        Ok(cfg)
    }
}

fn dimension(n: f64) -> Result<u32> {
    if n.fract() == 0.0 && (0.0..=u32::MAX as f64).contains(&n) {
        Ok(n as u32)
    } else {
        Err(Error::Config(format!("N must be an integer, got {n}")))
    }
}

/// Keys may appear in any section or before the first section header.
fn read_ini(path: &Path) -> Result<BTreeMap<&'static str, String>> {
    let ini = Ini::load_from_file(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut out = BTreeMap::new();
    for (section, props) in ini.iter() {
        for (key, value) in props.iter() {
            let known = KEYS
                .iter()
                .find(|k| **k == key)
                .ok_or_else(|| Error::Config(format!("{}: unknown key {key:?} in [{}]", path.display(), section.unwrap_or(""))))?;
            if out.insert(*known, value.to_string()).is_some() {
                return Err(Error::Config(format!("{}: key {key:?} given twice", path.display())));
            }
        }
    }
    Ok(out)
}

/// Comma-separated items, each a number or an inclusive range `start:stop:step`.
pub fn parse_spec(key: &str, text: &str) -> Result<Vec<f64>> {
    let bad = |what: &str| Error::Config(format!("{key}: {what} in {text:?}"));
    let num = |s: &str| -> Result<f64> {
        let x: f64 = s.trim().parse().map_err(|_| bad(&format!("cannot parse {:?}", s.trim())))?;
        if x.is_finite() {
            Ok(x)
        } else {
            Err(bad("non-finite value"))
        }
    };
    let mut out = Vec::new();
    for item in text.split(',') {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [x] => out.push(num(x)?),
            [start, stop, step] => {
                let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
                if !(step > 0.0) || stop < start {
                    return Err(bad("range needs step > 0 and stop >= start"));
                }
                let count = ((stop - start) / step + 1e-9).floor() as usize;
                if count > 1_000_000 {
                    return Err(bad("range too long"));
                }
                out.extend((0..=count).map(|i| start + i as f64 * step));
            }
            _ => return Err(bad("expected a number or start:stop:step")),
        }
    }
    Ok(out)
}
