//! Tensor powers of the Borel algebra spanned by `A = a.p` and `D = x.p`,
//! `[D, A] = i A`, in PBW form with every `A` left of every `D`.
//!
//! Twists of Jordanian type are checked here for the Hopf cocycle condition
//! `(F (x) 1)(Delta_0 (x) id) F = (1 (x) F)(id (x) Delta_0) F`, truncated by
//! total `A`-degree.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::report::{Discrepancy, Report, Verdict};
use crate::scalar::{binomial, GaussScalar, Rational};

/// `sum c A^a1 D^d1 (x) A^a2 D^d2 (x) ...`, keys `[a1, d1, a2, d2, ...]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BorelElement {
    slots: usize,
    cap: u32,
    terms: BTreeMap<Vec<u32>, GaussScalar>,
}

impl BorelElement {
    pub fn zero(slots: usize, cap: u32) -> BorelElement {
        BorelElement {
            slots,
            cap,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(slots: usize, cap: u32) -> BorelElement {
        BorelElement::monomial(slots, cap, &vec![0; 2 * slots], GaussScalar::one())
    }

    /// `c A^a D^d` in each slot, dropped above the cap.
    pub fn monomial(slots: usize, cap: u32, key: &[u32], c: GaussScalar) -> BorelElement {
        let mut out = BorelElement::zero(slots, cap);
        out.insert(key.to_vec(), c);
        out
    }

    /// `A` or `D` in one slot.
    pub fn generator(slots: usize, cap: u32, slot: usize, is_d: bool) -> BorelElement {
        let mut key = vec![0; 2 * slots];
        key[2 * slot + is_d as usize] = 1;
        BorelElement::monomial(slots, cap, &key, GaussScalar::one())
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &GaussScalar)> {
        self.terms.iter()
    }

    fn a_degree(key: &[u32]) -> u32 {
        key.iter().step_by(2).sum()
    }

    fn insert(&mut self, key: Vec<u32>, c: GaussScalar) {
        if c.is_zero() || Self::a_degree(&key) > self.cap {
            return;
        }
        match self.terms.entry(key) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += &c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    fn check(&self, other: &BorelElement) -> Result<()> {
        if self.slots != other.slots {
            return Err(Error::IncompatibleSeries(format!(
                "Borel elements with {} and {} slots",
                self.slots, other.slots
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &BorelElement) -> Result<BorelElement> {
        self.check(other)?;
        let mut out = self.clone();
        out.cap = self.cap.min(other.cap);
        out.terms.retain(|k, _| Self::a_degree(k) <= out.cap);
        for (k, c) in &other.terms {
            out.insert(k.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn scale(&self, c: &GaussScalar) -> BorelElement {
        let mut out = BorelElement::zero(self.slots, self.cap);
        for (k, v) in &self.terms {
            out.insert(k.clone(), v * c);
        }
        out
    }

    /// Slotwise product using `D^d A^b = A^b (D + i b)^d`.
    pub fn mul(&self, other: &BorelElement) -> Result<BorelElement> {
        self.check(other)?;
        let cap = self.cap.min(other.cap);
        let mut out = BorelElement::zero(self.slots, cap);
        for (k1, c1) in &self.terms {
            let deg1 = Self::a_degree(k1);
            for (k2, c2) in &other.terms {
                if deg1 + Self::a_degree(k2) > cap {
                    continue;
                }
                // expand slot by slot
                let mut partial: Vec<(Vec<u32>, GaussScalar)> = vec![(Vec::new(), c1 * c2)];
                for s in 0..self.slots {
                    let (a1, d1, a2, d2) = (k1[2 * s], k1[2 * s + 1], k2[2 * s], k2[2 * s + 1]);
                    let mut next = Vec::new();
                    for (key, c) in &partial {
                        // (D + i a2)^d1 = sum_j C(d1, j) (i a2)^(d1 - j) D^j
                        for j in 0..=d1 {
                            let shift = d1 - j;
                            if a2 == 0 && shift > 0 {
                                continue;
                            }
                            let w = GaussScalar::real(&binomial(d1, j) * &Rational::from_int(a2 as i64).pow(shift))
                                .mul_int_ipow(1, shift as i64);
                            let mut k = key.clone();
                            k.push(a1 + a2);
                            k.push(j + d2);
                            next.push((k, c * &w));
                        }
                    }
                    partial = next;
                }
                for (k, c) in partial {
                    out.insert(k, c);
                }
            }
        }
        Ok(out)
    }

    /// `exp(X)` for `X` without `A`-free terms.
    pub fn exp(&self) -> Result<BorelElement> {
        if self.terms.keys().any(|k| Self::a_degree(k) == 0) {
            return Err(Error::ExpansionDomain("Borel exp needs positive A-degree".into()));
        }
        let mut out = BorelElement::one(self.slots, self.cap);
        let mut term = out.clone();
        let mut k = 0i64;
        loop {
            k += 1;
            term = term.mul(self)?.scale(&GaussScalar::ratio(1, k));
            if term.is_zero() {
                return Ok(out);
            }
            out = out.add(&term)?;
        }
    }

    /// Inserts an identity slot at `at`.
    pub fn pad(&self, at: usize) -> BorelElement {
        let mut out = BorelElement::zero(self.slots + 1, self.cap);
        for (k, c) in &self.terms {
            let mut key = k.clone();
            key.splice(2 * at..2 * at, [0, 0]);
            out.terms.insert(key, c.clone());
        }
        out
    }

    /// Applies the primitive coproduct `X -> X (x) 1 + 1 (x) X` to slot `at`.
    pub fn split(&self, at: usize) -> BorelElement {
        let mut out = BorelElement::zero(self.slots + 1, self.cap);
        for (k, c) in &self.terms {
            let (a, d) = (k[2 * at], k[2 * at + 1]);
            // slots commute, so (A1 + A2)^a (D1 + D2)^d is already PBW ordered
            for i in 0..=a {
                for j in 0..=d {
                    let w = GaussScalar::real(&binomial(a, i) * &binomial(d, j));
                    let mut key = k.clone();
                    key.splice(2 * at..2 * at + 2, [i, j, a - i, d - j]);
                    out.insert(key, c * &w);
                }
            }
        }
        out
    }

    /// `f(A)` in one slot of a `slots`-fold product, from Maclaurin coefficients.
    pub fn function_of_a(slots: usize, cap: u32, slot: usize, coeffs: impl Fn(u32) -> Rational) -> BorelElement {
        let mut out = BorelElement::zero(slots, cap);
        for k in 0..=cap {
            let mut key = vec![0; 2 * slots];
            key[2 * slot] = k;
            out.insert(key, GaussScalar::real(coeffs(k)));
        }
        out
    }
}

/// Twists written in the Borel generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BorelTwist {
    Identity,
    /// `exp(-i ln(1 - A) (x) D)`
    JordanianRight,
    /// `exp(-i D (x) ln(1 + A))`
    JordanianLeft,
    /// `exp(-i A (x) D)`, not a cocycle.
    Naive,
}

impl BorelTwist {
    pub fn from_name(name: &str) -> Result<BorelTwist> {
        Ok(match name {
            "identity" => BorelTwist::Identity,
            "jordanian-right" => BorelTwist::JordanianRight,
            "jordanian-left" => BorelTwist::JordanianLeft,
            "naive" => BorelTwist::Naive,
            _ => return Err(Error::NotBorel(name.to_string())),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            BorelTwist::Identity => "identity",
            BorelTwist::JordanianRight => "jordanian-right",
            BorelTwist::JordanianLeft => "jordanian-left",
            BorelTwist::Naive => "naive",
        }
    }

    pub fn build(&self, cap: u32) -> Result<BorelElement> {
        let d = |slot| BorelElement::generator(2, cap, slot, true);
        let minus_i = GaussScalar::i().scale(&Rational::from_int(-1));
        let arg = match self {
            BorelTwist::Identity => return Ok(BorelElement::one(2, cap)),
            BorelTwist::JordanianRight => {
                // ln(1 - A) = -sum A^k / k
                let log = BorelElement::function_of_a(2, cap, 0, |k| {
                    if k == 0 {
                        Rational::zero()
                    } else {
                        Rational::new(-1, k as i64)
                    }
                });
                log.mul(&d(1))?
            }
            BorelTwist::JordanianLeft => {
                let log = BorelElement::function_of_a(2, cap, 1, |k| {
                    if k == 0 {
                        Rational::zero()
                    } else {
                        Rational::new(if k % 2 == 1 { 1 } else { -1 }, k as i64)
                    }
                });
                d(0).mul(&log)?
            }
            BorelTwist::Naive => BorelElement::generator(2, cap, 0, false).mul(&d(1))?,
        };
        arg.scale(&minus_i).exp()
    }
}

/// `(F (x) 1)(Delta_0 (x) id) F = (1 (x) F)(id (x) Delta_0) F` up to `A`-degree `cap`.
pub fn cocycle_check_borel(twist: BorelTwist, cap: u32) -> Result<Report> {
    let f = twist.build(cap)?;
    let lhs = f.pad(2).mul(&f.split(0))?;
    let rhs = f.pad(0).mul(&f.split(1))?;
    let diff = lhs.add(&rhs.scale(&GaussScalar::from_int(-1)))?;
    let mut report = Report::new(twist.name(), "cocycle", cap);
    if let Some((k, c)) = diff.terms().next() {
        report.verdict = Verdict::Fail;
        report.discrepancy = Some(Discrepancy {
            indices: vec![],
            monomial: monomial_string(k),
            coeff: c.clone(),
        });
    }
    Ok(report)
}

fn monomial_string(key: &[u32]) -> String {
    key.chunks(2)
        .map(|s| {
            let mut parts = Vec::new();
            for (name, e) in [("A", s[0]), ("D", s[1])] {
                match e {
                    0 => {}
                    1 => parts.push(name.to_string()),
                    _ => parts.push(format!("{name}^{e}")),
                }
            }
            if parts.is_empty() {
                "1".to_string()
            } else {
                parts.join("*")
            }
        })
        .collect::<Vec<_>>()
        .join(" (x) ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commutation_relation() {
        let a = BorelElement::generator(1, 4, 0, false);
        let d = BorelElement::generator(1, 4, 0, true);
        let da = d.mul(&a).unwrap();
        let ad = a.mul(&d).unwrap();
        // [D, A] = i A
        let comm = da.add(&ad.scale(&GaussScalar::from_int(-1))).unwrap();
        assert_eq!(comm, a.scale(&GaussScalar::i()));
    }

    #[test]
    fn product_is_associative() {
        let a = BorelElement::generator(1, 5, 0, false);
        let d = BorelElement::generator(1, 5, 0, true);
        let x = d.mul(&d).unwrap().add(&a).unwrap();
        let y = a.mul(&d).unwrap().add(&d).unwrap();
        let z = d.mul(&a).unwrap().mul(&a).unwrap();
        assert_eq!(x.mul(&y).unwrap().mul(&z).unwrap(), x.mul(&y.mul(&z).unwrap()).unwrap());
    }

    #[test]
    fn cocycle_verdicts() {
        for (t, ok) in [
            (BorelTwist::Identity, true),
            (BorelTwist::JordanianRight, true),
            (BorelTwist::JordanianLeft, true),
            (BorelTwist::Naive, false),
        ] {
            let r = cocycle_check_borel(t, 4).unwrap();
            assert_eq!(r.verdict.is_pass(), ok, "{r}");
        }
    }
}
