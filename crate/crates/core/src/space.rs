//! Variable layout: exponent vectors, metric, parameter symbols and banks.

use std::fmt;
use std::sync::Arc;

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::scalar::Rational;

/// Maximum number of variables (or parameters) a single monomial can carry.
pub const MAX_VARS: usize = 16;

/// Exponent vector over at most [`MAX_VARS`] variables.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Exps(pub [u8; MAX_VARS]);

impl Exps {
    pub const ZERO: Exps = Exps([0; MAX_VARS]);

    pub fn unit(i: usize) -> Exps {
        let mut e = Exps::ZERO;
        e.0[i] = 1;
        e
    }

    #[inline]
    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&x| x as u32).sum()
    }

    /// Degree restricted to the positions where `mask` is one.
    #[inline]
    pub fn masked_degree(&self, mask: &Exps) -> u32 {
        self.0
            .iter()
            .zip(mask.0.iter())
            .map(|(&x, &m)| (x & m.wrapping_neg()) as u32)
            .sum()
    }

    #[inline]
    pub fn add(&self, other: &Exps) -> Exps {
        let mut out = [0u8; MAX_VARS];
        for (o, (a, b)) in out.iter_mut().zip(self.0.iter().zip(other.0.iter())) {
            *o = a + b;
        }
        Exps(out)
    }

    /// Componentwise `self - other`, `None` if any component would go negative.
    pub fn checked_sub(&self, other: &Exps) -> Option<Exps> {
        let mut out = [0u8; MAX_VARS];
        for (o, (a, b)) in out.iter_mut().zip(self.0.iter().zip(other.0.iter())) {
            *o = a.checked_sub(*b)?;
        }
        Some(Exps(out))
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    pub fn get(&self, i: usize) -> u8 {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, v: u8) {
        self.0[i] = v;
    }

    pub fn max_exponent(&self) -> u8 {
        self.0.iter().copied().max().unwrap_or(0)
    }
}

impl fmt::Debug for Exps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let last = self.0.iter().rposition(|&x| x != 0).map_or(0, |p| p + 1);
        write!(f, "{:?}", &self.0[..last])
    }
}

/// Graded order: total degree first, then larger exponents on earlier variables first.
impl Ord for Exps {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Exps {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Diagonal metric signature, entries `+1` or `-1`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Metric(Vec<i8>);

impl Metric {
    /// `diag(-1, 1, ..., 1)`.
    pub fn lorentzian(n: usize) -> Metric {
        Metric((0..n).map(|i| if i == 0 { -1 } else { 1 }).collect())
    }

    pub fn euclidean(n: usize) -> Metric {
        Metric(vec![1; n])
    }

    pub fn from_signature(sig: Vec<i8>) -> Result<Metric> {
        if sig.is_empty() || sig.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidModel(format!(
                "metric signature must be a nonempty list of +1/-1, got {sig:?}"
            )));
        }
        Ok(Metric(sig))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `eta_{mu mu}`; the inverse metric has the same diagonal.
    #[inline]
    pub fn diag(&self, mu: usize) -> i64 {
        self.0[mu] as i64
    }

    /// `eta_{mu nu}`.
    pub fn entry(&self, mu: usize, nu: usize) -> i64 {
        if mu == nu {
            self.diag(mu)
        } else {
            0
        }
    }

    pub fn signature(&self) -> &[i8] {
        &self.0
    }
}

/// `a_lead^2 = sum_j c_j a_j^2`, the rewriting form of a null-vector constraint.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct NullRule {
    pub lead: usize,
    pub rest: Vec<(usize, Rational)>,
}

/// Model-scoped formal parameter symbols.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct ParamSpace {
    names: Vec<String>,
    null: Option<NullRule>,
}

impl ParamSpace {
    pub fn new(names: Vec<String>) -> Result<ParamSpace> {
        if names.len() > MAX_VARS {
            return Err(Error::TooManyVariables {
                needed: names.len(),
                max: MAX_VARS,
            });
        }
        Ok(ParamSpace { names, null: None })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn null_rule(&self) -> Option<&NullRule> {
        self.null.as_ref()
    }

    /// Rewrite exponent/coefficient pairs into the normal form modulo the
    /// null-vector rule (exponent of the lead symbol at most one).
    pub fn reduce(
        &self,
        par: Exps,
        coeff: crate::scalar::GaussScalar,
        out: &mut SmallVec<[(Exps, crate::scalar::GaussScalar); 4]>,
    ) {
        match &self.null {
            Some(rule) if par.get(rule.lead) >= 2 => {
                let mut base = par;
                base.set(rule.lead, par.get(rule.lead) - 2);
                for (j, c) in &rule.rest {
                    let mut e = base;
                    e.set(*j, e.get(*j) + 2);
                    self.reduce(e, coeff.scale(c), out);
                }
            }
            _ => out.push((par, coeff)),
        }
    }
}

/// Dimension, metric and parameters shared by every value of one model.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Space {
    n: usize,
    metric: Metric,
    params: ParamSpace,
}

impl Space {
    pub fn new(metric: Metric, params: ParamSpace) -> Arc<Space> {
        Arc::new(Space {
            n: metric.dim(),
            metric,
            params,
        })
    }

    /// Space with parameters `l`, `a0..a{n-1}` (and nothing else).
    pub fn standard(metric: Metric) -> Arc<Space> {
        let n = metric.dim();
        let mut names = vec!["l".to_string()];
        names.extend((0..n).map(|i| format!("a{i}")));
        Space::new(metric, ParamSpace::new(names).expect("n too large"))
    }

    /// Same as [`Space::standard`] with the constraint `a.a = 0` imposed.
    pub fn standard_null(metric: Metric) -> Result<Arc<Space>> {
        let n = metric.dim();
        let mut names = vec!["l".to_string()];
        names.extend((0..n).map(|i| format!("a{i}")));
        let mut params = ParamSpace::new(names)?;
        let a: Vec<usize> = (0..n).map(|i| 1 + i).collect();
        params.null = Some(null_rule(&metric, &a)?);
        Ok(Space::new(metric, params))
    }

    pub fn with_null_constraint(&self, vector: &[usize]) -> Result<Arc<Space>> {
        let mut params = self.params.clone();
        params.null = Some(null_rule(&self.metric, vector)?);
        Ok(Space::new(self.metric.clone(), params))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn params(&self) -> &ParamSpace {
        &self.params
    }

    pub fn param(&self, name: &str) -> Result<usize> {
        self.params
            .index_of(name)
            .ok_or_else(|| Error::UnknownSymbol(name.to_string()))
    }

    /// Indices of the vector parameter `a0..a{n-1}`, if declared.
    pub fn vector_param(&self, stem: &str) -> Option<Vec<usize>> {
        (0..self.n)
            .map(|i| self.params.index_of(&format!("{stem}{i}")))
            .collect()
    }
}

fn null_rule(metric: &Metric, vector: &[usize]) -> Result<NullRule> {
    if vector.len() != metric.dim() || vector.is_empty() {
        return Err(Error::InvalidModel(
            "null constraint needs one parameter per dimension".into(),
        ));
    }
    // sum_mu eta_mu a_mu^2 = 0  =>  a_0^2 = -sum_{mu>0} (eta_mu / eta_0) a_mu^2
    let lead_eta = metric.diag(0);
    let rest = (1..vector.len())
        .map(|mu| (vector[mu], Rational::new(-metric.diag(mu), lead_eta)))
        .collect();
    Ok(NullRule {
        lead: vector[0],
        rest,
    })
}

/// A bank of `n` variables, e.g. the momenta `k_0..k_{n-1}`.
///
/// Graded banks count toward the truncation order of a series; ungraded
/// banks (coordinates, the flow parameter `t`) do not.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Bank {
    pub name: &'static str,
    pub graded: bool,
    /// Number of variables; `None` means the model dimension.
    pub width: Option<u8>,
}

impl Bank {
    pub const fn momentum(name: &'static str) -> Bank {
        Bank {
            name,
            graded: true,
            width: None,
        }
    }

    pub const fn free(name: &'static str) -> Bank {
        Bank {
            name,
            graded: false,
            width: None,
        }
    }

    pub const fn scalar(name: &'static str) -> Bank {
        Bank {
            name,
            graded: false,
            width: Some(1),
        }
    }

    pub fn width(&self, n: usize) -> usize {
        self.width.map_or(n, |w| w as usize)
    }
}

pub mod banks {
    use super::Bank;
    pub const P: Bank = Bank::momentum("p");
    pub const K: Bank = Bank::momentum("k");
    pub const Q: Bank = Bank::momentum("q");
    pub const K1: Bank = Bank::momentum("k1");
    pub const K2: Bank = Bank::momentum("k2");
    pub const K3: Bank = Bank::momentum("k3");
    /// Tensor legs of a coproduct, `p (x) 1`, `1 (x) p`, ...
    pub const L1: Bank = Bank::momentum("p1");
    pub const L2: Bank = Bank::momentum("p2");
    pub const L3: Bank = Bank::momentum("p3");
    pub const T: Bank = Bank::scalar("t");
    pub const X: Bank = Bank::free("x");
    /// Momenta inside operators; truncation there is by parameter degree.
    pub const OP_P: Bank = Bank::free("p");
    pub const X1: Bank = Bank::free("x1");
    pub const P1: Bank = Bank::free("p1");
    pub const X2: Bank = Bank::free("x2");
    pub const P2: Bank = Bank::free("p2");
}

/// Ordered list of banks of a series.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Banks(SmallVec<[Bank; 4]>);

impl Banks {
    pub fn new(list: &[Bank]) -> Banks {
        Banks(list.iter().copied().collect())
    }

    pub fn empty() -> Banks {
        Banks(SmallVec::new())
    }

    pub fn list(&self) -> &[Bank] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn position(&self, bank: &Bank) -> Option<usize> {
        self.0.iter().position(|b| b == bank)
    }

    /// Offset of the first variable of bank `b`.
    pub fn offset(&self, b: usize, n: usize) -> usize {
        self.0[..b].iter().map(|bk| bk.width(n)).sum()
    }

    /// Variable index of component `mu` of bank `b`.
    pub fn var(&self, b: usize, mu: usize, n: usize) -> usize {
        self.offset(b, n) + mu
    }

    pub fn num_vars(&self, n: usize) -> usize {
        self.0.iter().map(|b| b.width(n)).sum()
    }

    /// `(bank index, component)` of a variable index.
    pub fn locate(&self, var: usize, n: usize) -> (usize, usize) {
        let mut off = 0;
        for (b, bank) in self.0.iter().enumerate() {
            let w = bank.width(n);
            if var < off + w {
                return (b, var - off);
            }
            off += w;
        }
        panic!("variable index {var} out of range")
    }

    /// Mask with ones at variables of graded banks.
    pub fn graded_mask(&self, n: usize) -> Exps {
        let mut m = Exps::ZERO;
        let mut off = 0;
        for bank in &self.0 {
            let w = bank.width(n);
            if bank.graded {
                for i in off..off + w {
                    m.set(i, 1);
                }
            }
            off += w;
        }
        m
    }

    /// Mask of the variables of bank `b`.
    pub fn bank_mask(&self, b: usize, n: usize) -> Exps {
        let mut m = Exps::ZERO;
        let off = self.offset(b, n);
        for i in off..off + self.0[b].width(n) {
            m.set(i, 1);
        }
        m
    }

    pub fn check_fits(&self, n: usize) -> Result<()> {
        let needed = self.num_vars(n);
        if needed > MAX_VARS {
            Err(Error::TooManyVariables {
                needed,
                max: MAX_VARS,
            })
        } else {
            Ok(())
        }
    }

    pub fn variable_name(&self, var: usize, n: usize) -> String {
        let (b, mu) = self.locate(var, n);
        let bank = &self.0[b];
        if bank.width(n) == 1 && bank.width.is_some() {
            bank.name.to_string()
        } else {
            format!("{}{}", bank.name, mu)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::GaussScalar;

    #[test]
    fn null_rule_rewrites_lead_square() {
        let space = Space::standard_null(Metric::lorentzian(4)).unwrap();
        let rule = space.params().null_rule().unwrap();
        assert_eq!(rule.lead, 1);
        let mut par = Exps::ZERO;
        par.set(1, 3);
        let mut out = SmallVec::new();
        space.params().reduce(par, GaussScalar::one(), &mut out);
        // a0^3 = a0 (a1^2 + a2^2 + a3^2)
        assert_eq!(out.len(), 3);
        for (e, c) in out {
            assert_eq!(e.get(1), 1);
            assert!(c.is_one());
            assert_eq!(e.degree(), 3);
        }
    }

    #[test]
    fn graded_order_puts_low_degree_first() {
        let a = Exps::unit(3);
        let mut b = Exps::unit(0);
        b.set(0, 2);
        assert!(a < b);
        assert!(Exps::unit(0) < Exps::unit(1));
    }

    #[test]
    fn bank_layout() {
        let bs = Banks::new(&[banks::K, banks::T, banks::Q]);
        assert_eq!(bs.num_vars(4), 9);
        assert_eq!(bs.var(2, 1, 4), 6);
        assert_eq!(bs.locate(4, 4), (1, 0));
        assert_eq!(bs.variable_name(4, 4), "t");
        assert_eq!(bs.graded_mask(4).degree(), 8);
    }
}
