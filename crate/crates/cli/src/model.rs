use std::path::PathBuf;

use clap::Args;
use ncphase_core::config::ModelConfig;
use ncphase_core::error::{Error, Result};
use ncphase_core::realization::{default_dim, CatalogOptions, Realization};
use ncphase_core::star::MAX_ORDER;
use ncphase_core::Rational;

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Catalog model name.
    #[arg(long, conflicts_with = "config")]
    pub model: Option<String>,
    /// Model file (`format: 1`).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dimension; the model's default when omitted.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Truncation order in momenta.
    #[arg(long, default_value_t = 6)]
    pub order: u32,
    /// Twist family parameter, a rational.
    #[arg(long, default_value = "0")]
    pub u: String,
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    s.trim()
        .parse()
        .map_err(|_| Error::Config(format!("'{s}' is not a rational number")))
}

impl ModelArgs {
    pub fn u(&self) -> Result<Rational> {
        parse_rational(&self.u)
    }

    pub fn load(&self) -> Result<Realization> {
        if self.order == 0 || self.order > MAX_ORDER {
            return Err(Error::OrderOverflow {
                order: self.order,
                cap: MAX_ORDER,
            });
        }
        match (&self.model, &self.config) {
            (Some(name), None) => {
                let n = self.dim.unwrap_or_else(|| default_dim(name));
                Realization::catalog(name, n, self.order + 1, &CatalogOptions::default())
            }
            (None, Some(path)) => {
                let cfg = ModelConfig::load(path)?;
                if let Some(n) = self.dim.filter(|&n| n != cfg.dim) {
                    return Err(Error::Dimension {
                        got: n,
                        expected: format!("{} from {}", cfg.dim, path.display()),
                    });
                }
                cfg.realization(Some(self.order + 1))
            }
            _ => Err(Error::Config("give either --model or --config".into())),
        }
    }
}
