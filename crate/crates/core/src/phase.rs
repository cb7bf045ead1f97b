//! Normal-ordered Weyl-Heisenberg operators, `[p_mu, x_nu] = -i eta_{mu nu}`.

use std::fmt;
use std::sync::Arc;

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::scalar::GaussScalar;
use crate::series::{BankMap, Key, Series, UNBOUNDED};
use crate::space::{banks, Banks, Exps, Space};

/// `sum_A x^A s_A(p)` with every `x` left of every `p`, truncated by
/// parameter degree.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseOperator {
    s: Series,
    xcap: u32,
}

/// A letter of an unordered word.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Letter {
    X(usize),
    P(usize),
}

pub fn operator_banks() -> Banks {
    Banks::new(&[banks::X, banks::OP_P])
}

/// `m (m-1) ... (m-j+1)`
fn falling(m: u8, j: u32) -> i64 {
    (0..j as i64).map(|i| m as i64 - i).product()
}

fn binom(b: u8, j: u32) -> i64 {
    falling(b, j) / falling(j as u8, j)
}

/// `prod_mu j_mu! C(m_mu, j_mu) C(b_mu, j_mu)` over all `j <= min(m, b)`,
/// with the accumulated power of `-i` and metric signs folded in.
pub(crate) fn contractions(
    n: usize,
    m: &[u8],
    b: &[u8],
    metric: &crate::space::Metric,
    mut f: impl FnMut(&[u8], i64, i64),
) {
    let mut j = vec![0u8; n];
    loop {
        let mut coeff: i64 = 1;
        let mut ipow: i64 = 0;
        for mu in 0..n {
            let jm = j[mu] as u32;
            if jm > 0 {
                coeff *= falling(m[mu], jm) * binom(b[mu], jm);
                // (-i eta)^j
                ipow += 3 * jm as i64;
                if metric.diag(mu) < 0 && jm % 2 == 1 {
                    coeff = -coeff;
                }
            }
        }
        f(&j, coeff, ipow);
        // odometer
        let mut mu = 0;
        loop {
            if mu == n {
                return;
            }
            if j[mu] < m[mu].min(b[mu]) {
                j[mu] += 1;
                break;
            }
            j[mu] = 0;
            mu += 1;
        }
    }
}

impl PhaseOperator {
    pub fn zero(space: &Arc<Space>, pcap: u32, xcap: u32) -> PhaseOperator {
        PhaseOperator {
            s: Series::zero(space, &operator_banks(), UNBOUNDED, pcap),
            xcap,
        }
    }

    pub fn from_series(s: Series, xcap: u32) -> Result<PhaseOperator> {
        if s.banks() != &operator_banks() {
            return Err(Error::IncompatibleSeries("operator needs banks [x, p]".into()));
        }
        let op = PhaseOperator { s, xcap };
        op.check_xcap()?;
        Ok(op)
    }

    fn like(&self, s: Series) -> Result<PhaseOperator> {
        let op = PhaseOperator { s, xcap: self.xcap };
        op.check_xcap()?;
        Ok(op)
    }

    fn check_xcap(&self) -> Result<()> {
        let d = self.x_degree();
        if d > self.xcap {
            return Err(Error::CoordinateDegreeCap {
                degree: d,
                cap: self.xcap,
            });
        }
        Ok(())
    }

    pub fn constant(space: &Arc<Space>, pcap: u32, xcap: u32, c: GaussScalar) -> PhaseOperator {
        PhaseOperator {
            s: Series::constant(space, &operator_banks(), UNBOUNDED, pcap, c),
            xcap,
        }
    }

    pub fn one(space: &Arc<Space>, pcap: u32, xcap: u32) -> PhaseOperator {
        PhaseOperator::constant(space, pcap, xcap, GaussScalar::one())
    }

    pub fn x(space: &Arc<Space>, pcap: u32, xcap: u32, mu: usize) -> PhaseOperator {
        PhaseOperator {
            s: Series::var(space, &operator_banks(), UNBOUNDED, pcap, 0, mu),
            xcap,
        }
    }

    pub fn p(space: &Arc<Space>, pcap: u32, xcap: u32, mu: usize) -> PhaseOperator {
        PhaseOperator {
            s: Series::var(space, &operator_banks(), UNBOUNDED, pcap, 1, mu),
            xcap,
        }
    }

    /// A function of the momenta given as a one-bank series.
    pub fn from_momentum(f: &Series, pcap: u32, xcap: u32) -> Result<PhaseOperator> {
        if f.banks().len() != 1 {
            return Err(Error::IncompatibleSeries("momentum function must have one bank".into()));
        }
        let s = f.compose_banks(&operator_banks(), &[BankMap::To(banks::OP_P)], UNBOUNDED, pcap)?;
        PhaseOperator::from_series(s, xcap)
    }

    /// A polynomial in `x` (one bank) as a multiplication operator.
    pub fn from_position(f: &Series, pcap: u32, xcap: u32) -> Result<PhaseOperator> {
        let s = f.compose_banks(&operator_banks(), &[BankMap::To(banks::X)], UNBOUNDED, pcap)?;
        PhaseOperator::from_series(s, xcap)
    }

    pub fn x_like(&self, mu: usize) -> PhaseOperator {
        PhaseOperator::x(self.space(), self.pcap(), self.xcap, mu)
    }

    pub fn p_like(&self, mu: usize) -> PhaseOperator {
        PhaseOperator::p(self.space(), self.pcap(), self.xcap, mu)
    }

    pub fn one_like(&self) -> PhaseOperator {
        PhaseOperator::one(self.space(), self.pcap(), self.xcap)
    }

    pub fn zero_like(&self) -> PhaseOperator {
        PhaseOperator::zero(self.space(), self.pcap(), self.xcap)
    }

    pub fn param_like(&self, idx: usize) -> PhaseOperator {
        PhaseOperator {
            s: self.s.param_like(idx),
            xcap: self.xcap,
        }
    }

    pub fn series(&self) -> &Series {
        &self.s
    }

    pub fn space(&self) -> &Arc<Space> {
        self.s.space()
    }

    pub fn dim(&self) -> usize {
        self.s.dim()
    }

    pub fn pcap(&self) -> u32 {
        self.s.pcap()
    }

    pub fn xcap(&self) -> u32 {
        self.xcap
    }

    pub fn is_zero(&self) -> bool {
        self.s.is_zero()
    }

    pub fn x_degree(&self) -> u32 {
        let mask = operator_banks().bank_mask(0, self.dim());
        self.s
            .terms()
            .iter()
            .map(|(k, _)| k.mono.masked_degree(&mask))
            .max()
            .unwrap_or(0)
    }

    pub fn truncated(&self, pcap: u32) -> PhaseOperator {
        PhaseOperator {
            s: self.s.truncated(UNBOUNDED, pcap),
            xcap: self.xcap,
        }
    }

    pub fn add(&self, other: &PhaseOperator) -> Result<PhaseOperator> {
        self.like(self.s.checked_add(&other.s)?)
    }

    pub fn sub(&self, other: &PhaseOperator) -> Result<PhaseOperator> {
        self.like(self.s.checked_sub(&other.s)?)
    }

    pub fn neg(&self) -> PhaseOperator {
        PhaseOperator {
            s: -&self.s,
            xcap: self.xcap,
        }
    }

    pub fn scale(&self, c: &GaussScalar) -> PhaseOperator {
        PhaseOperator {
            s: self.s.scale(c),
            xcap: self.xcap,
        }
    }

    /// Product, re-normal-ordered term by term:
    /// `p^m x^b = sum_j j! C(m,j) C(b,j) (-i eta)^j x^(b-j) p^(m-j)` per component.
    pub fn mul(&self, other: &PhaseOperator) -> Result<PhaseOperator> {
        if self.s.banks() != other.s.banks() || self.space() != other.space() {
            return Err(Error::IncompatibleSeries("operators over different spaces".into()));
        }
        let n = self.dim();
        let pcap = self.pcap().min(other.pcap());
        let metric = self.space().metric().clone();
        let mut acc: FxHashMap<Key, GaussScalar> = FxHashMap::default();
        for (k1, c1) in self.s.terms() {
            let pd1 = k1.par.degree();
            let m: Vec<u8> = (0..n).map(|mu| k1.mono.get(n + mu)).collect();
            for (k2, c2) in other.s.terms() {
                if pd1 + k2.par.degree() > pcap {
                    continue;
                }
                let b: Vec<u8> = (0..n).map(|mu| k2.mono.get(mu)).collect();
                let base = k1.mono.add(&k2.mono);
                let par = k1.par.add(&k2.par);
                let c12 = c1 * c2;
                contractions(n, &m, &b, &metric, |j, coeff, ipow| {
                    let mut mono = base;
                    for mu in 0..n {
                        mono.set(mu, mono.get(mu) - j[mu]);
                        mono.set(n + mu, mono.get(n + mu) - j[mu]);
                    }
                    let c = c12.mul_int_ipow(coeff, ipow);
                    *acc.entry(Key::new(mono, par)).or_insert_with(GaussScalar::zero) += &c;
                });
            }
        }
        let s = Series::from_terms(self.space(), &operator_banks(), UNBOUNDED, pcap, acc);
        self.like(s)
    }

    pub fn commutator(&self, other: &PhaseOperator) -> Result<PhaseOperator> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    pub fn pow(&self, e: u32) -> Result<PhaseOperator> {
        let mut acc = self.one_like();
        for _ in 0..e {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// `exp(A)` for `A` of positive parameter degree.
    pub fn exp(&self) -> Result<PhaseOperator> {
        if self.s.terms().iter().any(|(k, _)| k.par.is_zero()) {
            return Err(Error::ExpansionDomain("operator exp".into()));
        }
        let mut out = self.one_like();
        let mut term = self.one_like();
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

    /// Inverse of `1 + N` with `N` of positive parameter degree.
    pub fn inverse(&self) -> Result<PhaseOperator> {
        let nil = self.sub(&self.one_like())?;
        if nil.s.terms().iter().any(|(k, _)| k.par.is_zero()) {
            return Err(Error::NotInvertible("operator is not 1 + O(parameters)".into()));
        }
        let mut out = self.one_like();
        let mut term = self.one_like();
        loop {
            term = term.mul(&nil)?.neg();
            if term.is_zero() {
                return Ok(out);
            }
            out = out.add(&term)?;
        }
    }

    /// Action on a polynomial in `x` (one ungraded bank):
    /// `x_mu |> f = x_mu f`, `p_mu |> f = -i eta_{mu mu} df/dx_mu`.
    pub fn act(&self, f: &Series) -> Result<Series> {
        let n = self.dim();
        if f.banks().len() != 1 || f.banks().list()[0].graded {
            return Err(Error::IncompatibleSeries("act expects a polynomial in one x bank".into()));
        }
        let metric = self.space().metric();
        let pcap = self.pcap().min(f.pcap());
        let mut acc: FxHashMap<Key, GaussScalar> = FxHashMap::default();
        for (ko, co) in self.s.terms() {
            for (kf, cf) in f.terms() {
                if ko.par.degree() + kf.par.degree() > pcap {
                    continue;
                }
                let mut mono = Exps::ZERO;
                let mut coeff: i64 = 1;
                let mut ipow: i64 = 0;
                let mut vanishes = false;
                for mu in 0..n {
                    let m = ko.mono.get(n + mu);
                    let e = kf.mono.get(mu);
                    if m > e {
                        vanishes = true;
                        break;
                    }
                    // d^m x^e = e!/(e-m)! x^(e-m)
                    for j in 0..m {
                        coeff *= (e - j) as i64;
                    }
                    ipow += 3 * m as i64;
                    if metric.diag(mu) < 0 && m % 2 == 1 {
                        coeff = -coeff;
                    }
                    mono.set(mu, ko.mono.get(mu) + e - m);
                }
                if vanishes {
                    continue;
                }
                let c = (co * cf).mul_int_ipow(coeff, ipow);
                *acc.entry(Key::new(mono, ko.par.add(&kf.par))).or_insert_with(GaussScalar::zero) += &c;
            }
        }
        Ok(Series::from_terms(self.space(), f.banks(), UNBOUNDED, pcap, acc))
    }

    /// `self |> 1`.
    pub fn act_on_one(&self) -> Result<Series> {
        let one = Series::constant(
            self.space(),
            &Banks::new(&[banks::X]),
            UNBOUNDED,
            self.pcap(),
            GaussScalar::one(),
        );
        self.act(&one)
    }

    /// The operator as a function of `p` alone, if it has no `x`.
    pub fn momentum_part(&self) -> Option<Series> {
        if self.x_degree() > 0 {
            return None;
        }
        let target = Banks::new(&[banks::P]);
        Some(Series::from_terms(
            self.space(),
            &target,
            UNBOUNDED,
            self.pcap(),
            self.s.terms().iter().map(|(k, c)| {
                let mut mono = Exps::ZERO;
                for mu in 0..self.dim() {
                    mono.set(mu, k.mono.get(self.dim() + mu));
                }
                (Key::new(mono, k.par), c.clone())
            }),
        ))
    }

    /// Coefficient of `x_beta` (as a series in `p`) and the `x`-free part;
    /// `None` if some term has `x`-degree above one.
    pub fn split_linear(&self) -> Option<(Vec<Series>, Series)> {
        let n = self.dim();
        if self.x_degree() > 1 {
            return None;
        }
        let target = Banks::new(&[banks::P]);
        let pick = |beta: Option<usize>| {
            Series::from_terms(
                self.space(),
                &target,
                UNBOUNDED,
                self.pcap(),
                self.s.terms().iter().filter_map(|(k, c)| {
                    let xs: Vec<u8> = (0..n).map(|mu| k.mono.get(mu)).collect();
                    let ok = match beta {
                        None => xs.iter().all(|&e| e == 0),
                        Some(b) => xs[b] == 1,
                    };
                    if !ok {
                        return None;
                    }
                    let mut mono = Exps::ZERO;
                    for mu in 0..n {
                        mono.set(mu, k.mono.get(n + mu));
                    }
                    Some((Key::new(mono, k.par), c.clone()))
                }),
            )
        };
        Some(((0..n).map(|b| pick(Some(b))).collect(), pick(None)))
    }

    /// Normal form of a word in the generators.
    pub fn normal_order(space: &Arc<Space>, pcap: u32, xcap: u32, word: &[Letter]) -> Result<PhaseOperator> {
        let mut acc = PhaseOperator::one(space, pcap, xcap);
        for l in word {
            let g = match *l {
                Letter::X(mu) => PhaseOperator::x(space, pcap, xcap, mu),
                Letter::P(mu) => PhaseOperator::p(space, pcap, xcap, mu),
            };
            acc = acc.mul(&g)?;
        }
        Ok(acc)
    }

    /// `x . p = sum eta_{mu mu} x_mu p_mu`.
    pub fn dilatation(space: &Arc<Space>, pcap: u32, xcap: u32) -> Result<PhaseOperator> {
        let mut d = PhaseOperator::zero(space, pcap, xcap);
        for mu in 0..space.dim() {
            let t = PhaseOperator::x(space, pcap, xcap, mu)
                .mul(&PhaseOperator::p(space, pcap, xcap, mu))?
                .scale(&GaussScalar::from_int(space.metric().diag(mu)));
            d = d.add(&t)?;
        }
        Ok(d)
    }

    /// `M_{mu nu} = x_mu p_nu - x_nu p_mu`.
    pub fn lorentz(space: &Arc<Space>, pcap: u32, xcap: u32, mu: usize, nu: usize) -> Result<PhaseOperator> {
        let x = |i| PhaseOperator::x(space, pcap, xcap, i);
        let p = |i| PhaseOperator::p(space, pcap, xcap, i);
        x(mu).mul(&p(nu))?.sub(&x(nu).mul(&p(mu))?)
    }
}

impl fmt::Display for PhaseOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.s.fmt(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::Metric;

    fn space() -> Arc<Space> {
        Space::standard(Metric::lorentzian(2))
    }

    #[test]
    fn swap_rule() {
        let s = space();
        let w = PhaseOperator::normal_order(&s, 4, 8, &[Letter::P(0), Letter::X(0)]).unwrap();
        // p0 x0 = x0 p0 - i eta_00 = x0 p0 + i
        let expect = PhaseOperator::normal_order(&s, 4, 8, &[Letter::X(0), Letter::P(0)])
            .unwrap()
            .add(&PhaseOperator::constant(&s, 4, 8, GaussScalar::i()))
            .unwrap();
        assert_eq!(w, expect);
        let w = PhaseOperator::normal_order(&s, 4, 8, &[Letter::P(1), Letter::X(0)]).unwrap();
        assert_eq!(w.to_string(), "x0*p1");
    }

    #[test]
    fn p_x_x() {
        let s = space();
        let w = PhaseOperator::normal_order(&s, 4, 8, &[Letter::P(0), Letter::X(0), Letter::X(0)]).unwrap();
        // x0^2 p0 - 2 i eta_00 x0
        assert_eq!(w.to_string(), "2*i*x0 + x0^2*p0");
    }

    #[test]
    fn action_of_momentum() {
        let s = space();
        let x1 = PhaseOperator::x(&s, 4, 8, 1).act_on_one().unwrap();
        let got = PhaseOperator::p(&s, 4, 8, 1).act(&x1).unwrap();
        assert_eq!(got.to_string(), "-i");
        let m = PhaseOperator::lorentz(&s, 4, 8, 0, 1).unwrap();
        assert!(m.act_on_one().unwrap().is_zero());
    }

    #[test]
    fn x_cap_is_an_error() {
        let s = space();
        let x = PhaseOperator::x(&s, 4, 2, 0);
        let err = x.pow(3).unwrap_err();
        assert!(matches!(err, Error::CoordinateDegreeCap { degree: 3, cap: 2 }));
    }

    #[test]
    fn exp_and_inverse() {
        let s = space();
        let l = PhaseOperator::one(&s, 5, 4).param_like(0);
        let a = l.mul(&PhaseOperator::p(&s, 5, 4, 0)).unwrap();
        let e = a.exp().unwrap();
        let ei = a.neg().exp().unwrap();
        assert_eq!(e.mul(&ei).unwrap(), e.one_like());
        assert_eq!(e.inverse().unwrap(), ei);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn letter() -> impl Strategy<Value = Letter> {
            prop_oneof![(0..2usize).prop_map(Letter::X), (0..2usize).prop_map(Letter::P)]
        }

        fn word() -> impl Strategy<Value = Vec<Letter>> {
            prop::collection::vec(letter(), 0..4)
        }

        fn operator() -> impl Strategy<Value = Vec<(Vec<Letter>, i64)>> {
            prop::collection::vec((word(), -2..=2i64), 1..4)
        }

        fn build(s: &Arc<Space>, t: &[(Vec<Letter>, i64)]) -> PhaseOperator {
            t.iter().fold(PhaseOperator::zero(s, 8, 16), |acc, (w, c)| {
                let w = PhaseOperator::normal_order(s, 8, 16, w).unwrap();
                acc.add(&w.scale(&GaussScalar::from_int(*c))).unwrap()
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn normal_order_is_multiplicative(w1 in word(), w2 in word()) {
                let s = space();
                let joined: Vec<Letter> = w1.iter().chain(&w2).copied().collect();
                let lhs = PhaseOperator::normal_order(&s, 8, 16, &joined).unwrap();
                let a = PhaseOperator::normal_order(&s, 8, 16, &w1).unwrap();
                let b = PhaseOperator::normal_order(&s, 8, 16, &w2).unwrap();
                prop_assert_eq!(lhs, a.mul(&b).unwrap());
            }

            #[test]
            fn commutator_is_a_lie_bracket(a in operator(), b in operator(), c in operator()) {
                let s = space();
                let (a, b, c) = (build(&s, &a), build(&s, &b), build(&s, &c));
                let ab = a.commutator(&b).unwrap();
                prop_assert_eq!(ab.neg(), b.commutator(&a).unwrap());
                prop_assert_eq!(a.commutator(&b.add(&c).unwrap()).unwrap(), ab.add(&a.commutator(&c).unwrap()).unwrap());
                let jacobi = a.commutator(&b.commutator(&c).unwrap()).unwrap()
                    .add(&b.commutator(&c.commutator(&a).unwrap()).unwrap()).unwrap()
                    .add(&c.commutator(&a.commutator(&b).unwrap()).unwrap()).unwrap();
                prop_assert!(jacobi.is_zero());
            }

            #[test]
            fn act_is_a_module_action(a in operator(), b in operator(), f in operator()) {
                let s = space();
                let (a, b) = (build(&s, &a), build(&s, &b));
                let f = build(&s, &f).act_on_one().unwrap();
                prop_assert_eq!(a.mul(&b).unwrap().act(&f).unwrap(), a.act(&b.act(&f).unwrap()).unwrap());
            }
        }
    }
}
