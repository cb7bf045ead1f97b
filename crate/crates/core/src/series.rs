//! Truncated multivariate power series with Gaussian-rational coefficients
//! and polynomial dependence on formal parameters.
//!
//! A series lives over an ordered list of [`Banks`]. Two caps bound every
//! stored term: the total degree over graded banks (`order`) and the total
//! parameter degree (`pcap`). Both are ideals, so ring operations and
//! composition with substitutions of positive degree are exact below the caps.

use std::fmt;
use std::sync::Arc;

use rustc_hash::FxHashMap;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::scalar::{binomial_rational, factorial, GaussScalar, Rational};
use crate::space::{Bank, Banks, Exps, Space};

/// No truncation on this axis.
pub const UNBOUNDED: u32 = u32::MAX;

/// Monomial in the bank variables together with a monomial in the parameters.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct Key {
    pub mono: Exps,
    pub par: Exps,
}

impl Key {
    pub const ONE: Key = Key {
        mono: Exps::ZERO,
        par: Exps::ZERO,
    };

    pub fn new(mono: Exps, par: Exps) -> Key {
        Key { mono, par }
    }

    #[inline]
    fn mul(&self, other: &Key) -> Key {
        Key {
            mono: self.mono.add(&other.mono),
            par: self.par.add(&other.par),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Series {
    space: Arc<Space>,
    banks: Banks,
    order: u32,
    pcap: u32,
    terms: Vec<(Key, GaussScalar)>,
}

/// What a bank of the source series becomes under [`Series::compose_banks`].
#[derive(Clone, Copy)]
pub enum BankMap<'a> {
    /// Rename to the given bank of the target.
    To(Bank),
    /// Substitute component `mu` by `subs[mu]`.
    With(&'a [Series]),
    /// Set every variable of the bank to zero.
    Zero,
}

/// Named analytic functions with known Maclaurin coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnalyticFn {
    Exp,
    /// `ln(1 + u)`
    Log1p,
    /// `sqrt(1 + u)`
    Sqrt1p,
    /// `1 / (1 + u)`
    Inv1p,
    /// `(e^u - 1) / u`
    Expm1Over,
    /// `ln(1 + u) / u`
    Log1pOver,
}

impl AnalyticFn {
    pub fn name(&self) -> &'static str {
        match self {
            AnalyticFn::Exp => "exp",
            AnalyticFn::Log1p => "ln1p",
            AnalyticFn::Sqrt1p => "sqrt1p",
            AnalyticFn::Inv1p => "inv1p",
            AnalyticFn::Expm1Over => "expm1_over",
            AnalyticFn::Log1pOver => "ln1p_over",
        }
    }

    pub fn from_name(name: &str) -> Option<AnalyticFn> {
        Some(match name {
            "exp" => AnalyticFn::Exp,
            "ln1p" | "log1p" => AnalyticFn::Log1p,
            "sqrt1p" => AnalyticFn::Sqrt1p,
            "inv1p" => AnalyticFn::Inv1p,
            "expm1_over" => AnalyticFn::Expm1Over,
            "ln1p_over" | "log1p_over" => AnalyticFn::Log1pOver,
            _ => return None,
        })
    }

    /// Coefficient of `u^k`.
    pub fn coefficient(&self, k: u32) -> Rational {
        let sign = if k % 2 == 0 { 1 } else { -1 };
        match self {
            AnalyticFn::Exp => factorial(k).recip().unwrap(),
            AnalyticFn::Log1p => {
                if k == 0 {
                    Rational::zero()
                } else {
                    Rational::new(-sign, k as i64)
                }
            }
            AnalyticFn::Sqrt1p => binomial_rational(&Rational::new(1, 2), k),
            AnalyticFn::Inv1p => Rational::from_int(sign),
            AnalyticFn::Expm1Over => factorial(k + 1).recip().unwrap(),
            AnalyticFn::Log1pOver => Rational::new(sign, k as i64 + 1),
        }
    }
}

impl Series {
    pub fn zero(space: &Arc<Space>, banks: &Banks, order: u32, pcap: u32) -> Series {
        Series {
            space: space.clone(),
            banks: banks.clone(),
            order,
            pcap,
            terms: Vec::new(),
        }
    }

    pub fn constant(space: &Arc<Space>, banks: &Banks, order: u32, pcap: u32, c: GaussScalar) -> Series {
        Series::from_terms(space, banks, order, pcap, [(Key::ONE, c)])
    }

    /// Component `mu` of bank `bank`.
    pub fn var(space: &Arc<Space>, banks: &Banks, order: u32, pcap: u32, bank: usize, mu: usize) -> Series {
        let v = banks.var(bank, mu, space.dim());
        Series::from_terms(
            space,
            banks,
            order,
            pcap,
            [(Key::new(Exps::unit(v), Exps::ZERO), GaussScalar::one())],
        )
    }

    /// The parameter with index `idx` as a series.
    pub fn param(space: &Arc<Space>, banks: &Banks, order: u32, pcap: u32, idx: usize) -> Series {
        Series::from_terms(
            space,
            banks,
            order,
            pcap,
            [(Key::new(Exps::ZERO, Exps::unit(idx)), GaussScalar::one())],
        )
    }

    /// Builds a series, merging duplicate keys and applying the caps and
    /// the parameter rewriting rules.
    pub fn from_terms<I>(space: &Arc<Space>, banks: &Banks, order: u32, pcap: u32, terms: I) -> Series
    where
        I: IntoIterator<Item = (Key, GaussScalar)>,
    {
        let mut s = Series::zero(space, banks, order, pcap);
        let mask = banks.graded_mask(space.dim());
        let mut acc: FxHashMap<Key, GaussScalar> = FxHashMap::default();
        let mut buf = SmallVec::new();
        for (k, c) in terms {
            if c.is_zero() || k.mono.masked_degree(&mask) > order || k.par.degree() > pcap {
                continue;
            }
            buf.clear();
            space.params().reduce(k.par, c, &mut buf);
            for (par, c) in buf.drain(..) {
                *acc.entry(Key::new(k.mono, par)).or_insert_with(GaussScalar::zero) += &c;
            }
        }
        s.terms = finish(acc);
        s
    }

    pub fn zero_like(&self) -> Series {
        Series::zero(&self.space, &self.banks, self.order, self.pcap)
    }

    pub fn constant_like(&self, c: GaussScalar) -> Series {
        Series::constant(&self.space, &self.banks, self.order, self.pcap, c)
    }

    pub fn one_like(&self) -> Series {
        self.constant_like(GaussScalar::one())
    }

    pub fn var_like(&self, bank: usize, mu: usize) -> Series {
        Series::var(&self.space, &self.banks, self.order, self.pcap, bank, mu)
    }

    pub fn param_like(&self, idx: usize) -> Series {
        Series::param(&self.space, &self.banks, self.order, self.pcap, idx)
    }

    pub fn from_terms_like<I>(&self, terms: I) -> Series
    where
        I: IntoIterator<Item = (Key, GaussScalar)>,
    {
        Series::from_terms(&self.space, &self.banks, self.order, self.pcap, terms)
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn banks(&self) -> &Banks {
        &self.banks
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn pcap(&self) -> u32 {
        self.pcap
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn terms(&self) -> &[(Key, GaussScalar)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Weighted degree of a key (graded banks only).
    pub fn degree_of(&self, key: &Key) -> u32 {
        key.mono.masked_degree(&self.banks.graded_mask(self.dim()))
    }

    pub fn coeff(&self, key: &Key) -> GaussScalar {
        match self.terms.binary_search_by(|(k, _)| k.cmp(key)) {
            Ok(i) => self.terms[i].1.clone(),
            Err(_) => GaussScalar::zero(),
        }
    }

    /// Constant coefficient (no variables, no parameters).
    pub fn constant_term(&self) -> GaussScalar {
        self.coeff(&Key::ONE)
    }

    /// Coefficient of a bank monomial as a parameter polynomial (empty banks).
    pub fn coefficient_of(&self, mono: &Exps) -> Series {
        Series::from_terms(
            &self.space,
            &Banks::empty(),
            UNBOUNDED,
            self.pcap,
            self.terms
                .iter()
                .filter(|(k, _)| &k.mono == mono)
                .map(|(k, c)| (Key::new(Exps::ZERO, k.par), c.clone())),
        )
    }

    /// Same terms, new caps (only ever lowers what is stored).
    pub fn truncated(&self, order: u32, pcap: u32) -> Series {
        let order = order.min(self.order);
        let pcap = pcap.min(self.pcap);
        let mask = self.banks.graded_mask(self.dim());
        Series {
            space: self.space.clone(),
            banks: self.banks.clone(),
            order,
            pcap,
            terms: self
                .terms
                .iter()
                .filter(|(k, _)| k.mono.masked_degree(&mask) <= order && k.par.degree() <= pcap)
                .cloned()
                .collect(),
        }
    }

    /// Replaces the caps without touching the stored terms.
    pub fn with_caps(mut self, order: u32, pcap: u32) -> Series {
        self.order = order;
        self.pcap = pcap;
        self.truncated(order, pcap)
    }

    fn compatible(&self, other: &Series) -> Result<()> {
        if !(Arc::ptr_eq(&self.space, &other.space) || self.space == other.space) {
            return Err(Error::IncompatibleSeries("different parameter spaces".into()));
        }
        if self.banks != other.banks {
            return Err(Error::IncompatibleSeries(format!(
                "banks {:?} vs {:?}",
                self.bank_names(),
                other.bank_names()
            )));
        }
        Ok(())
    }

    fn bank_names(&self) -> Vec<&'static str> {
        self.banks.list().iter().map(|b| b.name).collect()
    }

    pub fn checked_add(&self, other: &Series) -> Result<Series> {
        self.compatible(other)?;
        Ok(self.merge(other, false))
    }

    pub fn checked_sub(&self, other: &Series) -> Result<Series> {
        self.compatible(other)?;
        Ok(self.merge(other, true))
    }

    pub fn checked_mul(&self, other: &Series) -> Result<Series> {
        self.compatible(other)?;
        Ok(self.mul_capped(other, self.order.min(other.order), self.pcap.min(other.pcap)))
    }

    fn merge(&self, other: &Series, negate: bool) -> Series {
        let order = self.order.min(other.order);
        let pcap = self.pcap.min(other.pcap);
        let mask = self.banks.graded_mask(self.dim());
        let keep = |k: &Key| k.mono.masked_degree(&mask) <= order && k.par.degree() <= pcap;
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.terms, &other.terms);
        while i < a.len() || j < b.len() {
            let ord = match (a.get(i), b.get(j)) {
                (Some((ka, _)), Some((kb, _))) => ka.cmp(kb),
                (Some(_), None) => std::cmp::Ordering::Less,
                _ => std::cmp::Ordering::Greater,
            };
            match ord {
                std::cmp::Ordering::Less => {
                    if keep(&a[i].0) {
                        out.push(a[i].clone());
                    }
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    if keep(&b[j].0) {
                        let c = if negate { -&b[j].1 } else { b[j].1.clone() };
                        out.push((b[j].0, c));
                    }
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    if keep(&a[i].0) {
                        let c = if negate { &a[i].1 - &b[j].1 } else { &a[i].1 + &b[j].1 };
                        if !c.is_zero() {
                            out.push((a[i].0, c));
                        }
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        Series {
            space: self.space.clone(),
            banks: self.banks.clone(),
            order,
            pcap,
            terms: out,
        }
    }

    fn mul_capped(&self, other: &Series, order: u32, pcap: u32) -> Series {
        let mask = self.banks.graded_mask(self.dim());
        let grade = |s: &Series| {
            let mut v: Vec<(u32, u32, usize)> = s
                .terms
                .iter()
                .enumerate()
                .map(|(i, (k, _))| (k.mono.masked_degree(&mask), k.par.degree(), i))
                .collect();
            v.sort_unstable();
            v
        };
        let ga = grade(self);
        let gb = grade(other);
        let mut acc: FxHashMap<Key, GaussScalar> = FxHashMap::default();
        let null = self.space.params().null_rule().is_some();
        let mut buf = SmallVec::new();
        for &(da, pa, ia) in &ga {
            if da > order {
                break;
            }
            let (ka, ca) = &self.terms[ia];
            for &(db, pb, ib) in &gb {
                if da + db > order {
                    break;
                }
                if pa + pb > pcap {
                    continue;
                }
                let (kb, cb) = &other.terms[ib];
                let key = ka.mul(kb);
                let c = ca * cb;
                if null {
                    buf.clear();
                    self.space.params().reduce(key.par, c, &mut buf);
                    for (par, c) in buf.drain(..) {
                        *acc.entry(Key::new(key.mono, par)).or_insert_with(GaussScalar::zero) += &c;
                    }
                } else {
                    match acc.get_mut(&key) {
                        Some(e) => *e += &c,
                        None => {
                            acc.insert(key, c);
                        }
                    }
                }
            }
        }
        Series {
            space: self.space.clone(),
            banks: self.banks.clone(),
            order,
            pcap,
            terms: finish(acc),
        }
    }

    pub fn scale(&self, c: &GaussScalar) -> Series {
        if c.is_zero() {
            return self.zero_like();
        }
        let mut s = self.clone();
        for (_, v) in s.terms.iter_mut() {
            *v = &*v * c;
        }
        s
    }

    pub fn scale_rational(&self, r: &Rational) -> Series {
        self.scale(&GaussScalar::real(r.clone()))
    }

    pub fn mul_i(&self) -> Series {
        let mut s = self.clone();
        for (_, v) in s.terms.iter_mut() {
            *v = v.mul_i();
        }
        s
    }

    pub fn pow(&self, e: u32) -> Series {
        let mut acc = self.one_like();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Keeps only the terms accepted by `f`.
    pub fn filter<F: Fn(&Key) -> bool>(&self, f: F) -> Series {
        let mut s = self.clone();
        s.terms.retain(|(k, _)| f(k));
        s
    }

    pub fn map_keys<F: Fn(&Key) -> Option<Key>>(&self, f: F) -> Series {
        self.from_terms_like(
            self.terms
                .iter()
                .filter_map(|(k, c)| f(k).map(|k2| (k2, c.clone()))),
        )
    }

    /// Part of total degree `d` in bank `b`.
    pub fn bank_degree_part(&self, b: usize, d: u32) -> Series {
        let mask = self.banks.bank_mask(b, self.dim());
        self.filter(|k| k.mono.masked_degree(&mask) == d)
    }

    pub fn bank_degree(&self, key: &Key, b: usize) -> u32 {
        key.mono.masked_degree(&self.banks.bank_mask(b, self.dim()))
    }

    /// Part of parameter degree zero.
    pub fn undeformed(&self) -> Series {
        self.filter(|k| k.par.is_zero())
    }

    /// Sets every variable of bank `b` to zero.
    pub fn set_bank_zero(&self, b: usize) -> Series {
        let mask = self.banks.bank_mask(b, self.dim());
        self.filter(|k| k.mono.masked_degree(&mask) == 0)
    }

    /// Partial derivative with respect to variable index `var`.
    pub fn derivative(&self, var: usize) -> Series {
        self.from_terms_like(self.terms.iter().filter_map(|(k, c)| {
            let e = k.mono.get(var);
            if e == 0 {
                return None;
            }
            let mut mono = k.mono;
            mono.set(var, e - 1);
            Some((Key::new(mono, k.par), c.scale(&Rational::from_int(e as i64))))
        }))
    }

    /// Same variables relabelled with new banks of identical widths.
    pub fn rebank(&self, banks: &Banks) -> Series {
        assert_eq!(
            banks.num_vars(self.dim()),
            self.banks.num_vars(self.dim()),
            "rebank needs identical layout widths"
        );
        Series::from_terms(&self.space, banks, self.order, self.pcap, self.terms.iter().cloned())
    }

    /// Moves the series into a larger bank layout.
    pub fn embed(&self, target: &Banks, mapping: &[Bank]) -> Series {
        let maps: Vec<BankMap> = mapping.iter().map(|b| BankMap::To(*b)).collect();
        self.compose_banks(target, &maps, self.order, self.pcap)
            .expect("renaming cannot fail")
    }

    /// Substitutes variables bank by bank; renamed banks keep their
    /// exponents, substituted banks are replaced by the given series.
    pub fn compose_banks(&self, target: &Banks, maps: &[BankMap], order: u32, pcap: u32) -> Result<Series> {
        assert_eq!(maps.len(), self.banks.len(), "one map per bank");
        let n = self.dim();
        target.check_fits(n)?;
        let mut order = order.min(self.order);
        let mut pcap = pcap.min(self.pcap);
        let mut rename: Vec<Option<usize>> = vec![None; MAXV];
        let mut subst: Vec<Option<&Series>> = vec![None; MAXV];
        let mut zeroed = Exps::ZERO;
        let tmask = target.graded_mask(n);
        for (b, map) in maps.iter().enumerate() {
            let bank = self.banks.list()[b];
            let w = bank.width(n);
            let off = self.banks.offset(b, n);
            match map {
                BankMap::To(tb) => {
                    let tbi = target.position(tb).ok_or_else(|| {
                        Error::IncompatibleSeries(format!("target has no bank {}", tb.name))
                    })?;
                    if target.list()[tbi].width(n) != w {
                        return Err(Error::IncompatibleSeries("bank width mismatch".into()));
                    }
                    for mu in 0..w {
                        rename[off + mu] = Some(target.var(tbi, mu, n));
                    }
                }
                BankMap::With(subs) => {
                    if subs.len() != w {
                        return Err(Error::IncompatibleSeries(format!(
                            "bank {} needs {} substitutions, got {}",
                            bank.name,
                            w,
                            subs.len()
                        )));
                    }
                    for (mu, g) in subs.iter().enumerate() {
                        if g.banks != *target {
                            return Err(Error::IncompatibleSeries(format!(
                                "substitution for {}{} lives over {:?}",
                                bank.name,
                                mu,
                                g.bank_names()
                            )));
                        }
                        if bank.graded && g.terms.iter().any(|(k, _)| k.mono.masked_degree(&tmask) == 0) {
                            return Err(Error::CompositionDomain(format!("{}{}", bank.name, mu)));
                        }
                        if !bank.graded && !g.constant_term().is_zero() {
                            return Err(Error::CompositionDomain(format!("{}{}", bank.name, mu)));
                        }
                        order = order.min(g.order);
                        pcap = pcap.min(g.pcap);
                        subst[off + mu] = Some(g);
                    }
                }
                BankMap::Zero => {
                    for mu in 0..w {
                        zeroed.set(off + mu, 1);
                    }
                }
            }
        }

        // group source terms by their substituted part
        let mut groups: FxHashMap<Exps, Vec<(Key, GaussScalar)>> = FxHashMap::default();
        'terms: for (k, c) in &self.terms {
            let mut sub_part = Exps::ZERO;
            let mut mono = Exps::ZERO;
            for v in 0..self.banks.num_vars(n) {
                let e = k.mono.get(v);
                if e == 0 {
                    continue;
                }
                if zeroed.get(v) != 0 {
                    continue 'terms;
                }
                if let Some(t) = rename[v] {
                    mono.set(t, mono.get(t) + e);
                } else {
                    sub_part.set(v, e);
                }
            }
            groups
                .entry(sub_part)
                .or_default()
                .push((Key::new(mono, k.par), c.clone()));
        }

        let one = Series::constant(&self.space, target, order, pcap, GaussScalar::one());
        let mut memo: FxHashMap<Exps, Series> = FxHashMap::default();
        memo.insert(Exps::ZERO, one);
        let mut keys: Vec<Exps> = groups.keys().copied().collect();
        keys.sort();
        let mut out = Series::zero(&self.space, target, order, pcap);
        for m in keys {
            let p = power_product(&m, &subst, &mut memo);
            if p.is_zero() {
                continue;
            }
            let rest = Series::from_terms(&self.space, target, order, pcap, groups.remove(&m).unwrap());
            out = out.merge(&p.mul_capped(&rest, order, pcap), false);
        }
        Ok(out)
    }

    /// `f(g)` for a one-bank `f` and a vector `g` over some target layout.
    pub fn compose(&self, subs: &[Series]) -> Result<Series> {
        if self.banks.len() != 1 {
            return Err(Error::IncompatibleSeries("compose expects a one-bank series".into()));
        }
        let target = subs
            .first()
            .map(|g| g.banks.clone())
            .ok_or_else(|| Error::IncompatibleSeries("empty substitution".into()))?;
        self.compose_banks(&target, &[BankMap::With(subs)], UNBOUNDED, UNBOUNDED)
    }

    /// `F(self)` for a named analytic function; `self` must have no constant term.
    pub fn expand_fn(&self, f: AnalyticFn) -> Result<Series> {
        let mask = self.banks.graded_mask(self.dim());
        if self
            .terms
            .iter()
            .any(|(k, _)| k.mono.masked_degree(&mask) == 0 && k.par.is_zero())
        {
            return Err(Error::ExpansionDomain(f.name().into()));
        }
        let mut out = self.constant_like(f.coefficient(0).into());
        let mut power = self.one_like();
        let mut k = 0;
        loop {
            k += 1;
            power = &power * self;
            if power.is_zero() {
                break;
            }
            let c = f.coefficient(k);
            if !c.is_zero() {
                out = &out + &power.scale_rational(&c);
            }
        }
        Ok(out)
    }

    /// Leading term in the canonical order (used for discrepancy reports).
    pub fn leading_term(&self) -> Option<&(Key, GaussScalar)> {
        self.terms.first()
    }

    pub fn monomial_string(&self, key: &Key) -> String {
        let n = self.dim();
        let mut factors = Vec::new();
        let names = self.space.params().names();
        for (i, name) in names.iter().enumerate() {
            push_factor(&mut factors, name, key.par.get(i));
        }
        for v in 0..self.banks.num_vars(n) {
            push_factor(&mut factors, &self.banks.variable_name(v, n), key.mono.get(v));
        }
        if factors.is_empty() {
            "1".into()
        } else {
            factors.join("*")
        }
    }

    /// Equality after truncating both sides to the smaller caps.
    pub fn agrees_with(&self, other: &Series) -> bool {
        let order = self.order.min(other.order);
        let pcap = self.pcap.min(other.pcap);
        self.banks == other.banks
            && self.truncated(order, pcap).terms == other.truncated(order, pcap).terms
    }
}

const MAXV: usize = crate::space::MAX_VARS;

fn power_product(m: &Exps, subst: &[Option<&Series>], memo: &mut FxHashMap<Exps, Series>) -> Series {
    if let Some(s) = memo.get(m) {
        return s.clone();
    }
    let v = (0..MAXV).find(|&v| m.get(v) > 0).unwrap();
    let mut prev = *m;
    prev.set(v, m.get(v) - 1);
    let base = power_product(&prev, subst, memo);
    let g = subst[v].expect("substituted variable");
    let p = if base.is_zero() {
        base
    } else {
        base.mul_capped(g, base.order, base.pcap)
    };
    memo.insert(*m, p.clone());
    p
}

fn push_factor(out: &mut Vec<String>, name: &str, e: u8) {
    match e {
        0 => {}
        1 => out.push(name.to_string()),
        _ => out.push(format!("{name}^{e}")),
    }
}

fn finish(acc: FxHashMap<Key, GaussScalar>) -> Vec<(Key, GaussScalar)> {
    let mut v: Vec<(Key, GaussScalar)> = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
    v.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    v
}

/// Inverse of a near-identity map: returns `L` with `K(L(k)) = k`.
///
/// The constant linear part of `K` must be invertible; the rest is solved by
/// fixed-point iteration, which gains at least one degree per step.
pub fn revert(map: &[Series]) -> Result<Vec<Series>> {
    let first = map
        .first()
        .ok_or_else(|| Error::Reversion("empty map".into()))?;
    let n = map.len();
    if first.banks.len() != 1 || first.banks.num_vars(first.dim()) != n {
        return Err(Error::Reversion("map must be one bank of matching width".into()));
    }
    for s in map {
        first.compatible(s)?;
    }
    let lin: Vec<Vec<GaussScalar>> = map
        .iter()
        .map(|s| (0..n).map(|nu| s.coeff(&Key::new(Exps::unit(nu), Exps::ZERO))).collect())
        .collect();
    let inv = invert_matrix(&lin).ok_or_else(|| Error::Reversion("linear part is singular".into()))?;
    let vars: Vec<Series> = (0..n).map(|nu| first.var_like(0, nu)).collect();
    let apply_inv = |v: &[Series]| -> Vec<Series> {
        (0..n)
            .map(|mu| {
                (0..n).fold(first.zero_like(), |acc, nu| &acc + &v[nu].scale(&inv[mu][nu]))
            })
            .collect()
    };
    let higher: Vec<Series> = map
        .iter()
        .map(|s| s.filter(|k| !(k.par.is_zero() && k.mono.degree() == 1)))
        .collect();
    if higher.iter().any(|h| !h.constant_term().is_zero()) {
        return Err(Error::Reversion("map has a constant term".into()));
    }
    let mut current = apply_inv(&vars);
    let limit = first.order.saturating_add(first.pcap).min(512) + 2;
    for _ in 0..limit {
        let rhs: Vec<Series> = higher
            .iter()
            .zip(&vars)
            .map(|(h, v)| Ok(v - &h.compose(&current)?))
            .collect::<Result<_>>()?;
        let next = apply_inv(&rhs);
        if next.iter().zip(&current).all(|(a, b)| a.terms == b.terms) {
            return Ok(next);
        }
        current = next;
    }
    Err(Error::Reversion("fixed-point iteration did not converge".into()))
}

/// Gauss-Jordan inverse over the Gaussian rationals.
pub fn invert_matrix(m: &[Vec<GaussScalar>]) -> Option<Vec<Vec<GaussScalar>>> {
    let n = m.len();
    let mut a: Vec<Vec<GaussScalar>> = m.to_vec();
    let mut inv: Vec<Vec<GaussScalar>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { GaussScalar::one() } else { GaussScalar::zero() })
                .collect()
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        inv.swap(col, piv);
        let p = a[col][col].recip()?;
        for j in 0..n {
            a[col][j] = &a[col][j] * &p;
            inv[col][j] = &inv[col][j] * &p;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for j in 0..n {
                    let t = &a[col][j] * &f;
                    a[r][j] -= &t;
                    let t = &inv[col][j] * &f;
                    inv[r][j] -= &t;
                }
            }
        }
    }
    Some(inv)
}

impl PartialEq for Series {
    fn eq(&self, other: &Self) -> bool {
        self.banks == other.banks && self.terms == other.terms
    }
}

impl fmt::Display for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (k, c)) in self.terms.iter().enumerate() {
            let mono = self.monomial_string(k);
            let negative = if c.re.is_zero() {
                c.im.is_negative()
            } else {
                c.re.is_negative()
            };
            let (neg, c) = if negative && (c.re.is_zero() || c.im.is_zero()) {
                (true, -c)
            } else {
                (false, c.clone())
            };
            match (i, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            if mono == "1" {
                write!(f, "{c}")?;
            } else if c.is_one() {
                write!(f, "{mono}")?;
            } else {
                write!(f, "{c}*{mono}")?;
            }
        }
        Ok(())
    }
}

macro_rules! series_binop {
    ($tr:ident, $m:ident, $checked:ident) => {
        impl std::ops::$tr<&Series> for &Series {
            type Output = Series;
            fn $m(self, rhs: &Series) -> Series {
                self.$checked(rhs).unwrap_or_else(|e| panic!("{e}"))
            }
        }
        impl std::ops::$tr<Series> for Series {
            type Output = Series;
            fn $m(self, rhs: Series) -> Series {
                (&self).$m(&rhs)
            }
        }
    };
}
series_binop!(Add, add, checked_add);
series_binop!(Sub, sub, checked_sub);
series_binop!(Mul, mul, checked_mul);

impl std::ops::Neg for &Series {
    type Output = Series;
    fn neg(self) -> Series {
        let mut s = self.clone();
        for (_, c) in s.terms.iter_mut() {
            *c = -&*c;
        }
        s
    }
}

impl std::ops::Neg for Series {
    type Output = Series;
    fn neg(self) -> Series {
        -&self
    }
}

/// Polynomial in the model parameters (a series without banks).
#[derive(Clone, Debug, PartialEq)]
pub struct ParamPoly(Series);

impl ParamPoly {
    pub fn zero(space: &Arc<Space>) -> ParamPoly {
        ParamPoly(Series::zero(space, &Banks::empty(), UNBOUNDED, UNBOUNDED))
    }

    pub fn constant(space: &Arc<Space>, c: GaussScalar) -> ParamPoly {
        ParamPoly(Series::constant(space, &Banks::empty(), UNBOUNDED, UNBOUNDED, c))
    }

    pub fn symbol(space: &Arc<Space>, idx: usize) -> ParamPoly {
        ParamPoly(Series::param(space, &Banks::empty(), UNBOUNDED, UNBOUNDED, idx))
    }

    pub fn from_series(s: Series) -> Result<ParamPoly> {
        if !s.banks.is_empty() {
            return Err(Error::IncompatibleSeries("parameter polynomial with banks".into()));
        }
        Ok(ParamPoly(s))
    }

    pub fn as_series(&self) -> &Series {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn scale(&self, c: &GaussScalar) -> ParamPoly {
        ParamPoly(self.0.scale(c))
    }

    /// Lifts into a series over `like`'s banks and caps.
    pub fn lift(&self, like: &Series) -> Series {
        like.from_terms_like(self.0.terms.iter().cloned())
    }
}

impl fmt::Display for ParamPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl std::ops::Add<&ParamPoly> for &ParamPoly {
    type Output = ParamPoly;
    fn add(self, rhs: &ParamPoly) -> ParamPoly {
        ParamPoly(&self.0 + &rhs.0)
    }
}

impl std::ops::Sub<&ParamPoly> for &ParamPoly {
    type Output = ParamPoly;
    fn sub(self, rhs: &ParamPoly) -> ParamPoly {
        ParamPoly(&self.0 - &rhs.0)
    }
}

impl std::ops::Mul<&ParamPoly> for &ParamPoly {
    type Output = ParamPoly;
    fn mul(self, rhs: &ParamPoly) -> ParamPoly {
        ParamPoly(&self.0 * &rhs.0)
    }
}

impl std::ops::Neg for &ParamPoly {
    type Output = ParamPoly;
    fn neg(self) -> ParamPoly {
        ParamPoly(-&self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{banks, Metric};

    fn one_bank(order: u32) -> (Arc<Space>, Banks, Series) {
        let space = Space::standard(Metric::lorentzian(2));
        let b = Banks::new(&[banks::K]);
        let z = Series::zero(&space, &b, order, UNBOUNDED);
        (space, b, z)
    }

    #[test]
    fn difference_of_squares() {
        let (_, _, z) = one_bank(4);
        let k0 = z.var_like(0, 0);
        let one = z.one_like();
        let prod = &(&one + &k0) * &(&one - &k0);
        assert_eq!(prod, &one - &(&k0 * &k0));
    }

    #[test]
    fn multiplying_by_zero() {
        let (_, _, z) = one_bank(4);
        let k0 = z.var_like(0, 0);
        assert!((&k0 * &z).is_zero());
    }

    #[test]
    fn geometric_times_one_minus() {
        // (sum_{j<=N} k^j)(1 - k) = 1 - k^{N+1}, and k^{N+1} is truncated away
        for n in 1..7 {
            let (_, _, z) = one_bank(n);
            let k0 = z.var_like(0, 0);
            let geo = (0..=n).fold(z.zero_like(), |acc, j| &acc + &k0.pow(j));
            let prod = &geo * &(&z.one_like() - &k0);
            assert_eq!(prod, z.one_like());
        }
    }

    #[test]
    fn compose_square_with_shifted_variable() {
        let (_, _, z) = one_bank(6);
        let k0 = z.var_like(0, 0);
        let k1 = z.var_like(0, 1);
        let f = &k0 * &k0;
        let g0 = &k0 + &(&k0 * &k0);
        let got = f.compose(&[g0, k1]).unwrap();
        let expect = &(&k0.pow(2) + &k0.pow(3).scale(&GaussScalar::from_int(2))) + &k0.pow(4);
        assert_eq!(got, expect);
    }

    #[test]
    fn compose_rejects_constant_term() {
        let (_, _, z) = one_bank(6);
        let k0 = z.var_like(0, 0);
        let g = &z.one_like() + &k0;
        let err = k0.compose(&[g, z.var_like(0, 1)]).unwrap_err();
        assert!(matches!(err, Error::CompositionDomain(_)));
    }

    #[test]
    fn bank_mismatch_is_an_error() {
        let (space, _, z) = one_bank(3);
        let other = Series::zero(&space, &Banks::new(&[banks::Q]), 3, UNBOUNDED);
        assert!(matches!(z.checked_add(&other), Err(Error::IncompatibleSeries(_))));
    }

    #[test]
    fn log_of_exp_is_identity() {
        let (_, _, z) = one_bank(7);
        let u = &z.var_like(0, 0) + &z.var_like(0, 1).scale(&GaussScalar::ratio(1, 3));
        let e = u.expand_fn(AnalyticFn::Exp).unwrap();
        let back = (&e - &z.one_like()).expand_fn(AnalyticFn::Log1p).unwrap();
        assert_eq!(back, u);
    }

    #[test]
    fn inv1p_is_geometric() {
        let space = Space::standard(Metric::lorentzian(2));
        let b = Banks::new(&[banks::P]);
        let z = Series::zero(&space, &b, 5, UNBOUNDED);
        let a0 = z.param_like(1);
        let a1 = z.param_like(2);
        // a.p = -a0 p0 + a1 p1
        let ap = &(&a1 * &z.var_like(0, 1)) - &(&a0 * &z.var_like(0, 0));
        let got = ap.expand_fn(AnalyticFn::Inv1p).unwrap();
        let mut expect = z.zero_like();
        for j in 0..=5 {
            expect = &expect + &ap.pow(j).scale(&GaussScalar::from_int(if j % 2 == 0 { 1 } else { -1 }));
        }
        assert_eq!(got, expect);
    }

    #[test]
    fn expansion_requires_zero_constant() {
        let (_, _, z) = one_bank(3);
        let u = &z.one_like() + &z.var_like(0, 0);
        assert!(matches!(u.expand_fn(AnalyticFn::Exp), Err(Error::ExpansionDomain(_))));
    }

    #[test]
    fn revert_identity() {
        let (_, _, z) = one_bank(5);
        let id = vec![z.var_like(0, 0), z.var_like(0, 1)];
        assert_eq!(revert(&id).unwrap(), id);
    }

    #[test]
    fn revert_singular_linear_part() {
        let (_, _, z) = one_bank(5);
        let k0 = z.var_like(0, 0);
        let map = vec![k0.clone(), k0];
        assert!(matches!(revert(&map), Err(Error::Reversion(_))));
    }

    #[test]
    fn display_is_canonical() {
        let (_, _, z) = one_bank(3);
        let k0 = z.var_like(0, 0);
        let k1 = z.var_like(0, 1);
        let l = z.param_like(0);
        let s = &(&(&k1 - &k0.scale(&GaussScalar::ratio(1, 2))) + &(&l * &k0.pow(2))) + &z.one_like();
        assert_eq!(s.to_string(), "1 - 1/2*k0 + k1 + l*k0^2");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        type Terms = Vec<(u32, u32, i64)>;

        fn terms() -> impl Strategy<Value = Terms> {
            prop::collection::vec((0..4u32, 0..4u32, -3..=3i64), 0..6)
        }

        fn build(z: &Series, t: &Terms) -> Series {
            let (k0, k1) = (z.var_like(0, 0), z.var_like(0, 1));
            t.iter().fold(z.zero_like(), |acc, &(i, j, c)| {
                &acc + &(&k0.pow(i) * &k1.pow(j)).scale(&GaussScalar::from_int(c))
            })
        }

        fn no_constant(s: Series) -> Series {
            s.filter(|k| *k != Key::ONE)
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn ring_axioms(a in terms(), b in terms(), c in terms()) {
                let (_, _, z) = one_bank(5);
                let (a, b, c) = (build(&z, &a), build(&z, &b), build(&z, &c));
                prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
                prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
                prop_assert_eq!(&a * &b, &b * &a);
                prop_assert!((&(&a + &b) - &(&b + &a)).is_zero());
                prop_assert_eq!(&a * &z.one_like(), a.clone());
            }

            #[test]
            fn exp_turns_sums_into_products(a in terms(), b in terms()) {
                let (_, _, z) = one_bank(5);
                let (a, b) = (no_constant(build(&z, &a)), no_constant(build(&z, &b)));
                let ea = a.expand_fn(AnalyticFn::Exp).unwrap();
                let eb = b.expand_fn(AnalyticFn::Exp).unwrap();
                prop_assert_eq!((&a + &b).expand_fn(AnalyticFn::Exp).unwrap(), &ea * &eb);
            }

            #[test]
            fn revert_is_two_sided(h0 in terms(), h1 in terms(), m in (1..=3i64, -2..=2i64, 1..=3i64)) {
                let (_, _, z) = one_bank(5);
                let (k0, k1) = (z.var_like(0, 0), z.var_like(0, 1));
                let higher = |t: &Terms| build(&z, t).filter(|k| k.mono.degree() >= 2);
                let (a, b, d) = (GaussScalar::from_int(m.0), GaussScalar::from_int(m.1), GaussScalar::from_int(m.2));
                // upper triangular linear part, always invertible
                let map = vec![
                    &(&k0.scale(&a) + &k1.scale(&b)) + &higher(&h0),
                    &k1.scale(&d) + &higher(&h1),
                ];
                let inv = revert(&map).unwrap();
                let vars = vec![k0, k1];
                for mu in 0..2 {
                    prop_assert_eq!(map[mu].compose(&inv).unwrap(), vars[mu].clone());
                    prop_assert_eq!(inv[mu].compose(&map).unwrap(), vars[mu].clone());
                }
            }
        }
    }
}
