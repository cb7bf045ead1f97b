//! Check results with the first discrepancy, if any.

use std::fmt;

use crate::scalar::GaussScalar;
use crate::series::Series;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Verdict {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn is_pass(&self) -> bool {
        *self == Verdict::Pass
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        }
    }
}

/// Leading term of a nonzero difference.
#[derive(Clone, Debug, PartialEq)]
pub struct Discrepancy {
    pub indices: Vec<usize>,
    pub monomial: String,
    pub coeff: GaussScalar,
}

impl Discrepancy {
    /// `None` when `diff` is zero.
    pub fn from_series(indices: &[usize], diff: &Series) -> Option<Discrepancy> {
        let (k, c) = diff.leading_term()?;
        Some(Discrepancy {
            indices: indices.to_vec(),
            monomial: diff.monomial_string(k),
            coeff: c.clone(),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub model: String,
    pub check: String,
    pub order: u32,
    pub verdict: Verdict,
    pub discrepancy: Option<Discrepancy>,
    /// Wall time in milliseconds; zero unless timing was requested.
    pub ms: u64,
    /// Free-form detail, e.g. the full associator when a check fails.
    pub detail: Option<String>,
}

impl Report {
    pub fn new(model: &str, check: &str, order: u32) -> Report {
        Report {
            model: model.to_string(),
            check: check.to_string(),
            order,
            verdict: Verdict::Pass,
            discrepancy: None,
            ms: 0,
            detail: None,
        }
    }

    /// Records `diff` at `indices`; the first nonzero difference fails the report.
    pub fn compare(&mut self, indices: &[usize], diff: &Series) {
        if self.discrepancy.is_none() {
            if let Some(d) = Discrepancy::from_series(indices, diff) {
                self.discrepancy = Some(d);
                self.verdict = Verdict::Fail;
            }
        }
    }

    pub fn fail(&mut self, detail: impl Into<String>) {
        self.verdict = Verdict::Fail;
        if self.detail.is_none() {
            self.detail = Some(detail.into());
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Report {
        self.detail = Some(detail.into());
        self
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} order={} {}",
            self.model,
            self.check,
            self.order,
            self.verdict.as_str()
        )?;
        if let Some(d) = &self.discrepancy {
            write!(f, " at {:?}: {} * {}", d.indices, d.coeff, d.monomial)?;
        }
        if let Some(t) = &self.detail {
            write!(f, " ({t})")?;
        }
        Ok(())
    }
}
