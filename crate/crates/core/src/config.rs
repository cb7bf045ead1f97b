//! Model files: `key: value` lines, `#` comments, and indented continuation
//! lines that extend the previous value.
//!
//! ```text
//! format: 1
//! name: left-covariant
//! dim: 4
//! metric: -1 1 1 1
//! params: a0 a1 a2 a3
//! order: 6
//! phi: eta(mu,nu)*(1 + dot(a,p))
//! chi: 0
//! ```
//!
//! `phi` is lowered with `mu` bound to the row and `nu` to the column;
//! `phi[i][j]` overrides one entry. `chi` is lowered with `mu` bound and
//! `chi[i]` overrides one component. `null: a` imposes `a.a = 0` on the
//! vector parameter `a`. Without `params`, the symbols are `l, a0..a{n-1}`.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{lower, parse, Env, Expr};
use crate::realization::{Realization, MAX_DIM};
use crate::series::Series;
use crate::space::{banks, Banks, Metric, ParamSpace, Space};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub name: String,
    pub dim: usize,
    pub metric: Metric,
    pub params: Vec<String>,
    pub null: Option<String>,
    pub order: Option<u32>,
    pub phi: Expr,
    pub phi_entries: BTreeMap<(usize, usize), Expr>,
    pub chi: Option<Expr>,
    pub chi_entries: BTreeMap<usize, Expr>,
}

fn config_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Config(format!("line {line}: {}", msg.into()))
}

/// Re-bases an expression syntax error onto the line of the file.
fn parse_at(src: &str, line: usize) -> Result<Expr> {
    parse(src).map_err(|e| match e {
        Error::Syntax {
            line: l,
            col,
            message,
            expected,
        } => Error::Syntax {
            line: line + l - 1,
            col,
            message,
            expected,
        },
        other => other,
    })
}

/// `phi[1][2]` -> `("phi", [1, 2])`
fn split_key(key: &str, line: usize) -> Result<(String, Vec<usize>)> {
    let (stem, rest) = key.split_once('[').map(|(s, r)| (s, format!("[{r}"))).unwrap_or((key, String::new()));
    let mut idx = Vec::new();
    let mut rest = rest.as_str();
    while let Some(r) = rest.strip_prefix('[') {
        let (n, tail) = r.split_once(']').ok_or_else(|| config_err(line, format!("bad key '{key}'")))?;
        idx.push(n.trim().parse().map_err(|_| config_err(line, format!("bad index in '{key}'")))?);
        rest = tail;
    }
    if !rest.is_empty() {
        return Err(config_err(line, format!("bad key '{key}'")));
    }
    Ok((stem.trim().to_string(), idx))
}

impl ModelConfig {
    pub fn parse(text: &str) -> Result<ModelConfig> {
        // (key, value, first line)
        let mut entries: Vec<(String, String, usize)> = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let body = raw.split('#').next().unwrap_or("");
            if body.trim().is_empty() {
                continue;
            }
            if raw.starts_with(char::is_whitespace) {
                let last = entries
                    .last_mut()
                    .ok_or_else(|| config_err(line, "continuation line before any key"))?;
                last.1.push('\n');
                last.1.push_str(body);
                continue;
            }
            let (key, value) = body
                .split_once(':')
                .ok_or_else(|| config_err(line, "expected 'key: value'"))?;
            entries.push((key.trim().to_string(), value.trim().to_string(), line));
        }

        let mut seen = BTreeMap::new();
        let mut cfg = ModelConfig {
            name: String::new(),
            dim: 0,
            metric: Metric::lorentzian(1),
            params: Vec::new(),
            null: None,
            order: None,
            phi: Expr::Int(0),
            phi_entries: BTreeMap::new(),
            chi: None,
            chi_entries: BTreeMap::new(),
        };
        let mut metric = None;
        let mut format = None;
        let mut have_phi = false;
        for (key, value, line) in &entries {
            if seen.insert(key.clone(), *line).is_some() {
                return Err(config_err(*line, format!("duplicate key '{key}'")));
            }
            let (stem, idx) = split_key(key, *line)?;
            let int = |v: &str| -> Result<u64> {
                v.trim()
                    .parse()
                    .map_err(|_| config_err(*line, format!("'{key}' expects an integer")))
            };
            match (stem.as_str(), idx.as_slice()) {
                ("format", []) => format = Some(int(value)?),
                ("name", []) => cfg.name = value.clone(),
                ("dim", []) => cfg.dim = int(value)? as usize,
                ("order", []) => cfg.order = Some(int(value)? as u32),
                ("metric", []) => {
                    let sig = value
                        .split_whitespace()
                        .map(|s| s.parse::<i8>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| config_err(*line, "metric expects a list of +1/-1"))?;
                    metric = Some(Metric::from_signature(sig).map_err(|e| config_err(*line, e.to_string()))?);
                }
                ("params", []) => cfg.params = value.split_whitespace().map(String::from).collect(),
                ("null", []) => cfg.null = Some(value.clone()),
                ("phi", []) => {
                    cfg.phi = parse_at(value, *line)?;
                    have_phi = true;
                }
                ("phi", [a, b]) => {
                    cfg.phi_entries.insert((*a, *b), parse_at(value, *line)?);
                }
                ("chi", []) => cfg.chi = Some(parse_at(value, *line)?),
                ("chi", [a]) => {
                    cfg.chi_entries.insert(*a, parse_at(value, *line)?);
                }
                _ => return Err(config_err(*line, format!("unknown key '{key}'"))),
            }
        }
        match format {
            Some(v) if v == FORMAT_VERSION as u64 => {}
            Some(v) => return Err(Error::Config(format!("unsupported format version {v}"))),
            None => return Err(Error::Config("missing 'format: 1'".into())),
        }
        if cfg.name.is_empty() {
            return Err(Error::Config("missing 'name'".into()));
        }
        if cfg.dim == 0 || cfg.dim > MAX_DIM {
            return Err(Error::Config(format!("'dim' must be in 1..={MAX_DIM}")));
        }
        cfg.metric = match metric {
            Some(m) if m.dim() != cfg.dim => {
                return Err(Error::Config(format!("metric has {} entries, dim is {}", m.dim(), cfg.dim)))
            }
            Some(m) => m,
            None => Metric::lorentzian(cfg.dim),
        };
        if !have_phi && cfg.phi_entries.len() != cfg.dim * cfg.dim {
            return Err(Error::Config("missing 'phi'".into()));
        }
        if !have_phi {
            cfg.phi = parse("eta(mu,nu)")?;
        }
        for &(a, b) in cfg.phi_entries.keys() {
            if a >= cfg.dim || b >= cfg.dim {
                return Err(Error::Config(format!("phi[{a}][{b}] is out of range")));
            }
        }
        for &a in cfg.chi_entries.keys() {
            if a >= cfg.dim {
                return Err(Error::Config(format!("chi[{a}] is out of range")));
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<ModelConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        ModelConfig::parse(&text)
    }

    pub fn space(&self) -> Result<Arc<Space>> {
        let names = if self.params.is_empty() {
            std::iter::once("l".to_string())
                .chain((0..self.dim).map(|i| format!("a{i}")))
                .collect()
        } else {
            self.params.clone()
        };
        let space = Space::new(self.metric.clone(), ParamSpace::new(names)?);
        match &self.null {
            None => Ok(space),
            Some(stem) => {
                let v = space
                    .vector_param(stem)
                    .ok_or_else(|| Error::Config(format!("null constraint needs parameters {stem}0..{stem}{}", self.dim - 1)))?;
                space.with_null_constraint(&v)
            }
        }
    }

    /// Lowers every entry and validates the realization. The explicit
    /// `order` wins over the file's.
    pub fn realization(&self, order: Option<u32>) -> Result<Realization> {
        let order = order.or(self.order).unwrap_or(6);
        let space = self.space()?;
        let env = Env::new(&space, &Banks::new(&[banks::P]), order, order.saturating_mul(2));
        let n = self.dim;
        let mut phi = Vec::with_capacity(n);
        for a in 0..n {
            let mut row = Vec::with_capacity(n);
            for b in 0..n {
                let e = self.phi_entries.get(&(a, b)).unwrap_or(&self.phi);
                row.push(lower(e, &env.with_indices(a, b))?);
            }
            phi.push(row);
        }
        let mut chi = Vec::with_capacity(n);
        for a in 0..n {
            let e = self.chi_entries.get(&a).or(self.chi.as_ref());
            chi.push(match e {
                Some(e) => lower(e, &env.with_indices(a, a))?,
                None => Series::zero(&space, &env.banks, order, env.pcap),
            });
        }
        Realization::new(&self.name, &space, order, phi, chi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::realization::CatalogOptions;

    const LEFT: &str = "format: 1
name: left
dim: 3
# kappa, left covariant
phi: eta(mu,nu)
  * (1 + dot(a,p))
order: 4
";

    #[test]
    fn left_covariant_matches_catalog() {
        let cfg = ModelConfig::parse(LEFT).unwrap();
        let r = cfg.realization(None).unwrap();
        let cat = Realization::catalog("kappa-left", 3, 4, &CatalogOptions::default()).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(r.phi(a, b).to_string(), cat.phi(a, b).to_string());
            }
        }
    }

    #[test]
    fn entry_overrides_and_null() {
        let text = "format: 1\nname: t\ndim: 2\nmetric: -1 1\nnull: a\nphi: eta(mu,nu)\nphi[0][1]: a[0]*p[1]\n";
        let r = ModelConfig::parse(text).unwrap().realization(Some(3)).unwrap();
        assert_eq!(r.phi(0, 1).to_string(), "a0*p1");
        assert!(r.space().params().null_rule().is_some());
    }

    #[test]
    fn errors() {
        assert!(matches!(ModelConfig::parse("name: x\ndim: 2\nphi: 1"), Err(Error::Config(_))));
        assert!(matches!(ModelConfig::parse("format: 2\nname: x\ndim: 2\nphi: 1"), Err(Error::Config(_))));
        match ModelConfig::parse("format: 1\nname: x\ndim: 2\nphi: dot(a,") {
            Err(Error::Syntax { line, col, .. }) => assert_eq!((line, col), (4, 7)),
            other => panic!("{other:?}"),
        }
        let bad = ModelConfig::parse("format: 1\nname: x\ndim: 2\nphi: 2*eta(mu,nu)").unwrap();
        assert!(matches!(bad.realization(None), Err(Error::InvalidModel(_))));
    }
}
