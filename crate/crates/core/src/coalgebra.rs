//! Coproducts of momenta, two-slot operators and twists.
//!
//! A [`TensorOperator`] is `sum (x^A s(p)) (x) (x^B t(p))` with each slot
//! normal ordered. Twists are infinite series, so every tensor operator
//! carries a grading that makes its truncation exact:
//!
//! * [`Grading::Weight`]: total momentum degree minus total coordinate
//!   degree. Contractions `p x -> -i eta` preserve it, so it is exact for any
//!   operands whose terms all have nonnegative weight.
//! * [`Grading::FirstSlot`]: momentum degree of the first slot, for operands
//!   whose first slot holds no coordinates.
//!
//! The parameter-degree cap always applies as well.

use std::sync::Arc;

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::phase::{contractions, operator_banks, PhaseOperator};
use crate::realization::Realization;
use crate::report::Report;
use crate::scalar::{factorial, GaussScalar, Rational};
use crate::series::{AnalyticFn, BankMap, Key, Series, UNBOUNDED};
use crate::space::{banks, Banks, Exps, Space};
use crate::star::CompositionLaw;

/// Layout `[p1, p2]` of coproducts, `p1 = p (x) 1` and `p2 = 1 (x) p`.
pub fn leg_banks() -> Banks {
    Banks::new(&[banks::L1, banks::L2])
}

/// Layout `[x1, p1, x2, p2]` of tensor operators.
pub fn tensor_banks() -> Banks {
    Banks::new(&[banks::X1, banks::P1, banks::X2, banks::P2])
}

#[derive(Clone, Debug)]
pub struct CoproductSeries {
    pub model: String,
    pub order: u32,
    /// `Delta p_mu` over `[p1, p2]`.
    pub dp: Vec<Series>,
}

/// `Delta p_mu = D_mu(p (x) 1, 1 (x) p)`.
pub fn coproduct(law: &CompositionLaw) -> CoproductSeries {
    let lb = leg_banks();
    CoproductSeries {
        model: law.model.clone(),
        order: law.order,
        dp: law.d.iter().map(|d| d.rebank(&lb)).collect(),
    }
}

/// `Delta p_mu = exp(K^{-1}_b(p) (x) phi_{a b}(p) d/dp_a)(1 (x) p_mu)`,
/// built from `K^{-1}` and `phi` without going through `J`.
pub fn coproduct_lie_series(r: &Realization, law: &CompositionLaw) -> Result<CoproductSeries> {
    let n = r.dim();
    let lb = leg_banks();
    let kinv: Vec<Series> = law.kinv.iter().map(|s| s.embed(&lb, &[banks::L1])).collect();
    let phi: Vec<Vec<Series>> = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| r.phi(a, b).truncated(law.order, UNBOUNDED).embed(&lb, &[banks::L2]))
                .collect()
        })
        .collect();
    // V = sum_{a,b} eta_bb K^{-1}_b(p1) phi_ab(p2) d/dp2_a
    let coef: Vec<Series> = (0..n)
        .map(|a| {
            (0..n).fold(kinv[0].zero_like(), |acc, b| {
                let e = GaussScalar::from_int(r.space().metric().diag(b));
                &acc + &(&kinv[b] * &phi[a][b]).scale(&e)
            })
        })
        .collect();
    let field = |f: &Series| -> Series {
        (0..n).fold(f.zero_like(), |acc, a| {
            let d = f.derivative(lb.var(1, a, n));
            if d.is_zero() {
                acc
            } else {
                &acc + &(&coef[a] * &d)
            }
        })
    };
    let dp = (0..n)
        .map(|mu| {
            let start = Series::var(r.space(), &lb, law.order, law.g.pcap(), 1, mu);
            let mut out = start.clone();
            let mut term = start;
            let mut m = 0i64;
            loop {
                m += 1;
                term = field(&term).scale(&GaussScalar::ratio(1, m));
                if term.is_zero() {
                    return out;
                }
                out = &out + &term;
            }
        })
        .collect();
    Ok(CoproductSeries {
        model: law.model.clone(),
        order: law.order,
        dp,
    })
}

/// `(Delta (x) id) Delta p = (id (x) Delta) Delta p` over `[p1, p2, p3]`.
pub fn coassociativity_check(cop: &CoproductSeries) -> Result<Report> {
    let b3 = Banks::new(&[banks::L1, banks::L2, banks::L3]);
    let pcap = cop.dp[0].pcap();
    let d12: Vec<Series> = cop.dp.iter().map(|d| d.embed(&b3, &[banks::L1, banks::L2])).collect();
    let d23: Vec<Series> = cop.dp.iter().map(|d| d.embed(&b3, &[banks::L2, banks::L3])).collect();
    let mut report = Report::new(&cop.model, "coassoc", cop.order);
    for (mu, d) in cop.dp.iter().enumerate() {
        let l = d.compose_banks(&b3, &[BankMap::With(&d12), BankMap::To(banks::L3)], cop.order, pcap)?;
        let r = d.compose_banks(&b3, &[BankMap::To(banks::L1), BankMap::With(&d23)], cop.order, pcap)?;
        report.compare(&[mu], &(&l - &r));
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Grading {
    Weight,
    FirstSlot,
}

/// Grading, its cap, and the parameter-degree cap of a tensor computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Truncation {
    pub grading: Grading,
    pub cap: u32,
    pub pcap: u32,
}

impl Truncation {
    /// Weight grading exact for data from `law` (`D` is needed one degree
    /// above the weight).
    pub fn weight(law: &CompositionLaw) -> Truncation {
        Truncation {
            grading: Grading::Weight,
            cap: law.order.saturating_sub(1),
            pcap: law.g.pcap(),
        }
    }

    /// First-slot grading exact for data from `law`; the parameter cap
    /// bounds the second slot.
    pub fn first_slot(law: &CompositionLaw) -> Truncation {
        Truncation {
            grading: Grading::FirstSlot,
            cap: law.order,
            pcap: law.order.saturating_sub(1),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TensorOperator {
    s: Series,
    trunc: Truncation,
}

impl TensorOperator {
    fn grade(&self, k: &Key) -> i64 {
        grade(self.s.dim(), self.trunc.grading, k)
    }

    /// Wraps a series over [`tensor_banks`], dropping terms above the caps.
    pub fn from_series(s: Series, trunc: Truncation) -> Result<TensorOperator> {
        if s.banks() != &tensor_banks() {
            return Err(Error::IncompatibleSeries("tensor operator needs banks [x1, p1, x2, p2]".into()));
        }
        let n = s.dim();
        for (k, _) in s.terms() {
            let g = grade(n, trunc.grading, k);
            if g < 0 {
                return Err(Error::IncompatibleSeries(format!(
                    "term {} has negative weight",
                    s.monomial_string(k)
                )));
            }
            if trunc.grading == Grading::FirstSlot && (0..n).any(|mu| k.mono.get(mu) > 0) {
                return Err(Error::IncompatibleSeries(
                    "first-slot grading needs a coordinate-free first slot".into(),
                ));
            }
        }
        let s = s.with_caps(UNBOUNDED, trunc.pcap);
        let s = s.filter(|k| grade(n, trunc.grading, k) <= trunc.cap as i64);
        Ok(TensorOperator { s, trunc })
    }

    pub fn identity(space: &Arc<Space>, trunc: Truncation) -> TensorOperator {
        TensorOperator {
            s: Series::constant(space, &tensor_banks(), UNBOUNDED, trunc.pcap, GaussScalar::one()),
            trunc,
        }
    }

    /// `a (x) b` for two phase-space operators.
    pub fn product(a: &PhaseOperator, b: &PhaseOperator, trunc: Truncation) -> Result<TensorOperator> {
        let tb = tensor_banks();
        let l = a.series().embed(&tb, &[banks::X1, banks::P1]);
        let r = b.series().embed(&tb, &[banks::X2, banks::P2]);
        TensorOperator::from_series(&l * &r, trunc)
    }

    /// A function of `p1 = p (x) 1` and `p2 = 1 (x) p` given over a two-bank layout.
    pub fn from_legs(f: &Series, trunc: Truncation) -> Result<TensorOperator> {
        if f.banks().len() != 2 {
            return Err(Error::IncompatibleSeries("expected a two-bank series".into()));
        }
        let s = f.compose_banks(
                &tensor_banks(),
                &[BankMap::To(banks::P1), BankMap::To(banks::P2)],
                UNBOUNDED,
                trunc.pcap,
            )?;
        TensorOperator::from_series(s, trunc)
    }

    pub fn series(&self) -> &Series {
        &self.s
    }

    pub fn truncation(&self) -> Truncation {
        self.trunc
    }

    pub fn space(&self) -> &Arc<Space> {
        self.s.space()
    }

    pub fn is_zero(&self) -> bool {
        self.s.is_zero()
    }

    fn like(&self, s: Series) -> TensorOperator {
        let n = self.s.dim();
        let (g, cap) = (self.trunc.grading, self.trunc.cap as i64);
        TensorOperator {
            s: s.filter(|k| grade(n, g, k) <= cap),
            trunc: self.trunc,
        }
    }

    fn check(&self, other: &TensorOperator) -> Result<()> {
        if self.trunc != other.trunc {
            return Err(Error::IncompatibleSeries("tensor operators with different truncations".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &TensorOperator) -> Result<TensorOperator> {
        self.check(other)?;
        Ok(self.like(self.s.checked_add(&other.s)?))
    }

    pub fn sub(&self, other: &TensorOperator) -> Result<TensorOperator> {
        self.check(other)?;
        Ok(self.like(self.s.checked_sub(&other.s)?))
    }

    pub fn scale(&self, c: &GaussScalar) -> TensorOperator {
        self.like(self.s.scale(c))
    }

    /// Slotwise product with both slots re-normal-ordered.
    pub fn mul(&self, other: &TensorOperator) -> Result<TensorOperator> {
        self.check(other)?;
        let n = self.s.dim();
        let metric = self.space().metric().clone();
        let (pcap, cap) = (self.trunc.pcap, self.trunc.cap as i64);
        let rhs: Vec<(i64, u32, &Key, &GaussScalar)> = other
            .s
            .terms()
            .iter()
            .map(|(k, c)| (other.grade(k), k.par.degree(), k, c))
            .collect();
        let mut acc: FxHashMap<Key, GaussScalar> = FxHashMap::default();
        for (k1, c1) in self.s.terms() {
            let g1 = self.grade(k1);
            let d1 = k1.par.degree();
            let m1: Vec<u8> = (0..n).map(|mu| k1.mono.get(n + mu)).collect();
            let m2: Vec<u8> = (0..n).map(|mu| k1.mono.get(3 * n + mu)).collect();
            for &(g2, d2, k2, c2) in &rhs {
                if g1 + g2 > cap || d1 + d2 > pcap {
                    continue;
                }
                let b1: Vec<u8> = (0..n).map(|mu| k2.mono.get(mu)).collect();
                let b2: Vec<u8> = (0..n).map(|mu| k2.mono.get(2 * n + mu)).collect();
                let base = k1.mono.add(&k2.mono);
                let par = k1.par.add(&k2.par);
                let c12 = c1 * c2;
                contractions(n, &m1, &b1, &metric, |j1, e1, i1| {
                    contractions(n, &m2, &b2, &metric, |j2, e2, i2| {
                        let mut mono = base;
                        for mu in 0..n {
                            mono.set(mu, mono.get(mu) - j1[mu]);
                            mono.set(n + mu, mono.get(n + mu) - j1[mu]);
                            mono.set(2 * n + mu, mono.get(2 * n + mu) - j2[mu]);
                            mono.set(3 * n + mu, mono.get(3 * n + mu) - j2[mu]);
                        }
                        let c = c12.mul_int_ipow(e1 * e2, i1 + i2);
                        *acc.entry(Key::new(mono, par)).or_insert_with(GaussScalar::zero) += &c;
                    });
                });
            }
        }
        let s = Series::from_terms(self.space(), &tensor_banks(), UNBOUNDED, pcap, acc);
        Ok(self.like(s))
    }

    /// Every term must raise the grading or the parameter degree, so that
    /// powers terminate.
    fn check_nilpotent(&self, what: &str) -> Result<()> {
        let bounded_par = self.trunc.pcap != UNBOUNDED;
        for (k, _) in self.s.terms() {
            if self.grade(k) == 0 && !(bounded_par && k.par.degree() > 0) {
                return Err(Error::ExpansionDomain(format!(
                    "{what}: term {} has degree zero",
                    self.s.monomial_string(k)
                )));
            }
        }
        Ok(())
    }

    /// `exp(A)` in the slotwise operator algebra.
    pub fn exp(&self) -> Result<TensorOperator> {
        self.check_nilpotent("exp")?;
        let mut out = TensorOperator::identity(self.space(), self.trunc);
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

    /// `:exp(A):`, the exponential with every coordinate moved left of every
    /// momentum in each slot (a commutative exponential of the symbol).
    pub fn normal_exp(&self) -> Result<TensorOperator> {
        self.check_nilpotent("normal-ordered exp")?;
        let mut out = self.s.one_like();
        let mut term = out.clone();
        let mut k = 0i64;
        loop {
            k += 1;
            term = self.like(&term * &self.s).s.scale(&GaussScalar::ratio(1, k));
            if term.is_zero() {
                return Ok(self.like(out));
            }
            out = &out + &term;
        }
    }

    /// Keeps the terms with at most one first-slot momentum. The rest form an
    /// ideal of the symbol algebra and vanish on `x_mu (x) g` under `|> (x) 1`.
    pub fn first_slot_linear(&self) -> TensorOperator {
        let n = self.s.dim();
        TensorOperator {
            s: self.s.filter(|k| (n..2 * n).map(|v| k.mono.get(v) as u32).sum::<u32>() <= 1),
            trunc: self.trunc,
        }
    }

    /// `:exp(A):` modulo the ideal dropped by [`first_slot_linear`](Self::first_slot_linear).
    pub fn normal_exp_first_slot_linear(&self) -> Result<TensorOperator> {
        let a = self.first_slot_linear();
        a.check_nilpotent("normal-ordered exp")?;
        let mut out = a.s.one_like();
        let mut term = out.clone();
        let mut k = 0i64;
        loop {
            k += 1;
            term = a.like(&term * &a.s).first_slot_linear().s.scale(&GaussScalar::ratio(1, k));
            if term.is_zero() {
                return Ok(a.like(out));
            }
            out = &out + &term;
        }
    }

    /// Inverse of `1 + N` by the geometric series.
    pub fn inverse(&self) -> Result<TensorOperator> {
        let one = TensorOperator::identity(self.space(), self.trunc);
        let nil = self.sub(&one)?;
        nil.check_nilpotent("inverse")
            .map_err(|e| Error::NotInvertible(e.to_string()))?;
        let mut out = one.clone();
        let mut term = one;
        loop {
            term = term.mul(&nil)?.scale(&GaussScalar::from_int(-1));
            if term.is_zero() {
                return Ok(out);
            }
            out = out.add(&term)?;
        }
    }

    /// `m self (|> (x) |>)(f (x) g)` for polynomials `f`, `g` in one `x` bank.
    pub fn act_on_pair(&self, f: &Series, g: &Series) -> Result<Series> {
        let n = self.s.dim();
        let ob = operator_banks();
        let slot = |k: &Key, from: usize, par: Exps, c: GaussScalar| -> Result<PhaseOperator> {
            let mut mono = Exps::ZERO;
            for v in 0..2 * n {
                mono.set(v, k.mono.get(from + v));
            }
            let s = Series::from_terms(self.space(), &ob, UNBOUNDED, self.trunc.pcap, [(Key::new(mono, par), c)]);
            PhaseOperator::from_series(s, UNBOUNDED)
        };
        let mut out = f.zero_like();
        for (k, c) in self.s.terms() {
            let l = slot(k, 0, k.par, c.clone())?.act(f)?;
            let r = slot(k, 2 * n, Exps::ZERO, GaussScalar::one())?.act(g)?;
            out = &out + &(&l * &r);
        }
        Ok(out)
    }

    /// `m (self (|> (x) 1)) (x_mu (x) 1)`: the first slot acts on `x_mu`,
    /// and the result multiplies the second slot from the left.
    pub fn act_first_on_coordinate(&self, mu: usize) -> Series {
        let n = self.s.dim();
        let eta = self.space().metric().diag(mu);
        let target = operator_banks();
        Series::from_terms(
            self.space(),
            &target,
            UNBOUNDED,
            self.trunc.pcap,
            self.s.terms().iter().filter_map(|(k, c)| {
                let p1: Vec<u8> = (0..n).map(|a| k.mono.get(n + a)).collect();
                let total: u32 = p1.iter().map(|&e| e as u32).sum();
                let mut mono = Exps::ZERO;
                for a in 0..n {
                    mono.set(a, k.mono.get(a) + k.mono.get(2 * n + a));
                    mono.set(n + a, k.mono.get(3 * n + a));
                }
                match total {
                    0 => {
                        mono.set(mu, mono.get(mu) + 1);
                        Some((Key::new(mono, k.par), c.clone()))
                    }
                    // p_mu |> x_mu = -i eta_mu
                    1 if p1[mu] == 1 => Some((Key::new(mono, k.par), c.mul_int_ipow(eta, 3))),
                    _ => None,
                }
            }),
        )
    }
}

fn grade(n: usize, g: Grading, k: &Key) -> i64 {
    let sum = |from: usize| (from..from + n).map(|v| k.mono.get(v) as i64).sum::<i64>();
    match g {
        Grading::Weight => sum(n) + sum(3 * n) - sum(0) - sum(2 * n),
        Grading::FirstSlot => sum(n),
    }
}

fn op(pcap: u32) -> impl Fn(&Series) -> Result<PhaseOperator> {
    move |f: &Series| PhaseOperator::from_momentum(f, pcap, UNBOUNDED)
}

fn slot_x(space: &Arc<Space>, pcap: u32, mu: usize) -> PhaseOperator {
    PhaseOperator::x(space, pcap, UNBOUNDED, mu)
}

fn slot_p(space: &Arc<Space>, pcap: u32, mu: usize) -> PhaseOperator {
    PhaseOperator::p(space, pcap, UNBOUNDED, mu)
}

fn eta(space: &Space, mu: usize) -> GaussScalar {
    GaussScalar::from_int(space.metric().diag(mu))
}

/// `sum_mu eta_mu a_mu p_mu` over `[p]`.
fn a_dot_p(space: &Arc<Space>, pcap: u32) -> Result<Series> {
    let pb = Banks::new(&[banks::P]);
    let mut s = Series::zero(space, &pb, UNBOUNDED, pcap);
    for mu in 0..space.dim() {
        let a = Series::param(space, &pb, UNBOUNDED, pcap, space.param(&format!("a{mu}"))?);
        let p = Series::var(space, &pb, UNBOUNDED, pcap, 0, mu);
        s = &s + &(&a * &p).scale(&eta(space, mu));
    }
    Ok(s)
}

/// The family `F^{-1}_u = :exp(i((1-u) x_a (x) 1 + u 1 (x) x_a)(Delta - Delta_0) p_a): exp(i G)`.
pub fn twist_normal_ordered(law: &CompositionLaw, u: &Rational, trunc: Truncation) -> Result<TensorOperator> {
    normal_ordered(law, u, trunc, false)
}

/// [`twist_normal_ordered`] reduced by [`TensorOperator::first_slot_linear`]:
/// all that [`twist_consistency`] reads, at a fraction of the cost.
pub fn twist_normal_ordered_on_coordinates(law: &CompositionLaw, u: &Rational, trunc: Truncation) -> Result<TensorOperator> {
    normal_ordered(law, u, trunc, true)
}

fn normal_ordered(law: &CompositionLaw, u: &Rational, trunc: Truncation, linear: bool) -> Result<TensorOperator> {
    let exp = |t: TensorOperator| if linear { t.normal_exp_first_slot_linear() } else { t.normal_exp() };
    let space = law.g.space().clone();
    let tb = tensor_banks();
    let pcap = trunc.pcap;
    let lift = |s: &Series| -> Result<Series> {
        s.compose_banks(&tb, &[BankMap::To(banks::P1), BankMap::To(banks::P2)], UNBOUNDED, pcap)
    };
    let v = |bank: usize, mu: usize| Series::var(&space, &tb, UNBOUNDED, pcap, bank, mu);
    let one_minus_u = &Rational::one() - u;
    let mut arg = Series::zero(&space, &tb, UNBOUNDED, pcap);
    for (mu, d) in law.d.iter().enumerate() {
        let delta = &(&lift(d)? - &v(1, mu)) - &v(3, mu);
        let x = &v(0, mu).scale_rational(&one_minus_u) + &v(2, mu).scale_rational(u);
        arg = &arg + &(&x * &delta).scale(&eta(&space, mu));
    }
    let body = exp(TensorOperator::from_series(arg.mul_i(), trunc)?)?;
    if law.g.is_zero() {
        return Ok(body);
    }
    let g = exp(TensorOperator::from_series(lift(&law.g)?.mul_i(), trunc)?)?;
    // the exp(i G) factor has momenta only, so it multiplies the symbol from the right
    let out = body.like(&body.s * &g.s);
    Ok(if linear { out.first_slot_linear() } else { out })
}

/// `F^{-1} = e^{-i p_a (x) x_a} e^{i p^W_b (x) x_g phi_{g b}(p)} e^{i G}`.
pub fn twist_exp_form(r: &Realization, law: &CompositionLaw, trunc: Truncation) -> Result<TensorOperator> {
    let n = r.dim();
    let space = r.space().clone();
    let pcap = trunc.pcap;
    let to_op = op(pcap);
    let mut first = TensorOperator::from_series(Series::zero(&space, &tensor_banks(), UNBOUNDED, pcap), trunc)?;
    let mut second = first.clone();
    for mu in 0..n {
        let t = TensorOperator::product(&slot_p(&space, pcap, mu), &slot_x(&space, pcap, mu), trunc)?;
        first = first.add(&t.scale(&(&eta(&space, mu) * &-GaussScalar::i())))?;
    }
    for b in 0..n {
        let pw = to_op(&law.kinv[b])?;
        let mut xphi = PhaseOperator::zero(&space, pcap, UNBOUNDED);
        for g in 0..n {
            let f = to_op(&r.phi(g, b).truncated(UNBOUNDED, pcap))?;
            xphi = xphi.add(&slot_x(&space, pcap, g).mul(&f)?.scale(&eta(&space, g)))?;
        }
        let t = TensorOperator::product(&pw, &xphi, trunc)?;
        second = second.add(&t.scale(&(&eta(&space, b) * &GaussScalar::i())))?;
    }
    let mut out = first.exp()?.mul(&second.exp()?)?;
    if !law.g.is_zero() {
        let g = TensorOperator::from_legs(&law.g, trunc)?.scale(&GaussScalar::i()).exp()?;
        out = out.mul(&g)?;
    }
    Ok(out)
}

/// Right Jordanian twist `F = exp(-i ln(1 - a.p) (x) D)`, `D = x.p`.
pub fn jordanian_right(space: &Arc<Space>, trunc: Truncation) -> Result<TensorOperator> {
    jordanian_right_exponent(space, trunc)?.exp()
}

/// The exponent `-i ln(1 - a.p) (x) D` of [`jordanian_right`].
pub fn jordanian_right_exponent(space: &Arc<Space>, trunc: Truncation) -> Result<TensorOperator> {
    let pcap = trunc.pcap;
    let log = a_dot_p(space, pcap)?.scale(&GaussScalar::from_int(-1)).expand_fn(AnalyticFn::Log1p)?;
    let d = PhaseOperator::dilatation(space, pcap, UNBOUNDED)?;
    let t = TensorOperator::product(&op(pcap)(&log)?, &d, trunc)?;
    Ok(t.scale(&-GaussScalar::i()))
}

/// Left Jordanian twist `F = exp(-i D (x) ln(1 + a.p))`.
pub fn jordanian_left(space: &Arc<Space>, trunc: Truncation) -> Result<TensorOperator> {
    jordanian_left_exponent(space, trunc)?.exp()
}

pub fn jordanian_left_exponent(space: &Arc<Space>, trunc: Truncation) -> Result<TensorOperator> {
    let pcap = trunc.pcap;
    let log = a_dot_p(space, pcap)?.expand_fn(AnalyticFn::Log1p)?;
    let d = PhaseOperator::dilatation(space, pcap, UNBOUNDED)?;
    let t = TensorOperator::product(&d, &op(pcap)(&log)?, trunc)?;
    Ok(t.scale(&-GaussScalar::i()))
}

/// Left-covariant twist of the algebroid construction,
/// `F = exp(-i a_a p^W_b (x) x_b p_a)`.
pub fn left_algebroid(law: &CompositionLaw, trunc: Truncation) -> Result<TensorOperator> {
    left_algebroid_exponent(law, trunc)?.exp()
}

pub fn left_algebroid_exponent(law: &CompositionLaw, trunc: Truncation) -> Result<TensorOperator> {
    let space = law.g.space().clone();
    let n = space.dim();
    let pcap = trunc.pcap;
    let to_op = op(pcap);
    let mut arg = TensorOperator::from_series(Series::zero(&space, &tensor_banks(), UNBOUNDED, pcap), trunc)?;
    for b in 0..n {
        let pw = to_op(&law.kinv[b])?;
        let mut l = PhaseOperator::zero(&space, pcap, UNBOUNDED);
        for a in 0..n {
            let coef = PhaseOperator::zero(&space, pcap, UNBOUNDED).param_like(space.param(&format!("a{a}"))?);
            let xp = slot_x(&space, pcap, b).mul(&slot_p(&space, pcap, a))?;
            l = l.add(&coef.mul(&xp)?.scale(&eta(&space, a)))?;
        }
        let t = TensorOperator::product(&pw, &l, trunc)?;
        arg = arg.add(&t.scale(&eta(&space, b)))?;
    }
    Ok(arg.scale(&-GaussScalar::i()))
}

/// Light-like Drinfeld twist `F = exp(i a_a p_b ln(1 + a.p)/(a.p) (x) M_{a b})`.
pub fn light_like_drinfeld(space: &Arc<Space>, trunc: Truncation) -> Result<TensorOperator> {
    light_like_drinfeld_exponent(space, trunc)?.exp()
}

pub fn light_like_drinfeld_exponent(space: &Arc<Space>, trunc: Truncation) -> Result<TensorOperator> {
    let n = space.dim();
    let pcap = trunc.pcap;
    let pb = Banks::new(&[banks::P]);
    let ratio = a_dot_p(space, pcap)?.expand_fn(AnalyticFn::Log1pOver)?;
    let mut arg = TensorOperator::from_series(Series::zero(space, &tensor_banks(), UNBOUNDED, pcap), trunc)?;
    for a in 0..n {
        let av = Series::param(space, &pb, UNBOUNDED, pcap, space.param(&format!("a{a}"))?);
        for b in 0..n {
            if a == b {
                continue;
            }
            let pbv = Series::var(space, &pb, UNBOUNDED, pcap, 0, b);
            let left = &(&av * &pbv) * &ratio;
            let m = PhaseOperator::lorentz(space, pcap, UNBOUNDED, a, b)?;
            let t = TensorOperator::product(&op(pcap)(&left)?, &m, trunc)?;
            arg = arg.add(&t.scale(&(&eta(space, a) * &eta(space, b))))?;
        }
    }
    Ok(arg.scale(&GaussScalar::i()))
}

/// `Delta_0 p_mu + (p_mu a_a - a_mu (p_a + a_a p^2 / 2) / (1 + a.p)) (x) p_a`
/// over `[p1, p2]`, for a space with `a^2 = 0`.
pub fn light_like_coproduct(space: &Arc<Space>, order: u32) -> Result<Vec<Series>> {
    let n = space.dim();
    let lb = leg_banks();
    let pcap = 2 * order;
    let p1 = |mu| Series::var(space, &lb, order, pcap, 0, mu);
    let p2 = |mu| Series::var(space, &lb, order, pcap, 1, mu);
    let a = |mu: usize| -> Result<Series> {
        Ok(Series::param(space, &lb, order, pcap, space.param(&format!("a{mu}"))?))
    };
    let dot = |u: &dyn Fn(usize) -> Result<Series>, v: &dyn Fn(usize) -> Result<Series>| -> Result<Series> {
        (0..n).try_fold(Series::zero(space, &lb, order, pcap), |acc, mu| {
            Ok(&acc + &(&u(mu)? * &v(mu)?).scale(&eta(space, mu)))
        })
    };
    let p1r = |mu| Ok(p1(mu));
    let p2r = |mu| Ok(p2(mu));
    let ap = dot(&a, &p1r)?;
    let inv = ap.expand_fn(AnalyticFn::Inv1p)?;
    let psq = dot(&p1r, &p1r)?;
    let ap2 = dot(&a, &p2r)?;
    let pp2 = dot(&p1r, &p2r)?;
    let half = GaussScalar::ratio(1, 2);
    // contraction of the bracket with p2: p_mu (a.p2) - a_mu (p.p2 + (a.p2) p^2 / 2) / (1 + a.p)
    let tail = &(&pp2 + &(&ap2 * &psq).scale(&half)) * &inv;
    (0..n)
        .map(|mu| Ok(&(&(&p1(mu) + &p2(mu)) + &(&p1(mu) * &ap2)) - &(&a(mu)? * &tail)))
        .collect()
}

/// `x_a phi_{a mu}(p) + chi_mu(p)` as an operator symbol over `[x, p]`.
fn hat_x_symbol(r: &Realization, mu: usize, pcap: u32) -> Result<Series> {
    let ob = operator_banks();
    let mut s = r.chi(mu).compose_banks(&ob, &[BankMap::To(banks::OP_P)], UNBOUNDED, pcap)?;
    for a in 0..r.dim() {
        let f = r.phi(a, mu).compose_banks(&ob, &[BankMap::To(banks::OP_P)], UNBOUNDED, pcap)?;
        let x = Series::var(r.space(), &ob, UNBOUNDED, pcap, 0, a);
        s = &s + &(&x * &f).scale(&eta(r.space(), a));
    }
    Ok(s)
}

/// `m F^{-1}(|> (x) 1)(x_mu (x) 1) = x_a phi_{a mu} + chi_mu` for every `mu`,
/// compared within the truncation of `finv`.
pub fn twist_consistency(r: &Realization, finv: &TensorOperator) -> Result<Report> {
    let t = finv.truncation();
    let n = r.dim();
    let mut report = Report::new(r.name(), "twist", t.cap);
    for mu in 0..n {
        let got = finv.act_first_on_coordinate(mu);
        let mut want = hat_x_symbol(r, mu, t.pcap)?;
        if t.grading == Grading::Weight {
            let cap = t.cap;
            // the first slot spends one unit of weight on x_mu
            let w = |k: &Key| {
                let deg = |from: usize| (from..from + n).map(|v| k.mono.get(v) as i64).sum::<i64>();
                deg(n) - deg(0)
            };
            want = want.filter(|k| w(k) < cap as i64);
        }
        report.compare(&[mu], &(&got - &want));
    }
    Ok(report)
}

/// `F (Delta_0 p_mu) F^{-1} = Delta p_mu` within the truncation of `f`.
pub fn coproduct_conjugation_check(f: &TensorOperator, cop: &CoproductSeries) -> Result<Report> {
    let finv = f.inverse()?;
    conjugation_report(f.truncation(), cop, |x| f.mul(x)?.mul(&finv))
}

/// [`coproduct_conjugation_check`] for `F = exp(B)`, conjugating by the
/// series `sum_k ad_B^k / k!` instead of multiplying by `F` and `F^{-1}`.
pub fn exponent_conjugation_check(b: &TensorOperator, cop: &CoproductSeries) -> Result<Report> {
    b.check_nilpotent("conjugation")?;
    conjugation_report(b.truncation(), cop, |x| adjoint_exp(b, x))
}

/// `e^B X e^{-B}` for `B` of positive grade; every commutator raises the grade.
pub fn adjoint_exp(b: &TensorOperator, x: &TensorOperator) -> Result<TensorOperator> {
    let mut out = x.clone();
    let mut term = x.clone();
    let mut k = 0;
    loop {
        k += 1;
        term = b.mul(&term)?.sub(&term.mul(b)?)?.scale(&GaussScalar::ratio(1, k));
        if term.is_zero() {
            return Ok(out);
        }
        out = out.add(&term)?;
    }
}

fn conjugation_report<C>(t: Truncation, cop: &CoproductSeries, conj: C) -> Result<Report>
where
    C: Fn(&TensorOperator) -> Result<TensorOperator>,
{
    let space = cop.dp[0].space().clone();
    let tb = tensor_banks();
    let mut report = Report::new(&cop.model, "conjugation", t.cap);
    for (mu, dp) in cop.dp.iter().enumerate() {
        let d0 = &Series::var(&space, &tb, UNBOUNDED, t.pcap, 1, mu) + &Series::var(&space, &tb, UNBOUNDED, t.pcap, 3, mu);
        let got = conj(&TensorOperator::from_series(d0, t)?)?;
        let want = TensorOperator::from_legs(dp, t)?;
        report.compare(&[mu], got.sub(&want)?.series());
    }
    Ok(report)
}

/// `sum_{k+l=n} (-1)^k x^k p x^l / (k! l!)` in the one-dimensional
/// operator algebra; the degree-`n` part of `e^{-x} p e^{x} = p - i`.
pub fn combinatorial_sum(n: u32, sign_by_total: bool) -> Result<PhaseOperator> {
    let space = Space::standard(crate::space::Metric::euclidean(1));
    let x = PhaseOperator::x(&space, UNBOUNDED, UNBOUNDED, 0);
    let p = PhaseOperator::p(&space, UNBOUNDED, UNBOUNDED, 0);
    let mut acc = PhaseOperator::zero(&space, UNBOUNDED, UNBOUNDED);
    for k in 0..=n {
        let l = n - k;
        let e = if sign_by_total { n } else { k };
        let sign = if e % 2 == 0 { 1 } else { -1 };
        let c = GaussScalar::real((&factorial(k) * &factorial(l)).recip().unwrap()).mul_int_ipow(sign, 0);
        acc = acc.add(&x.pow(k)?.mul(&p)?.mul(&x.pow(l)?)?.scale(&c))?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::realization::CatalogOptions;
    use crate::star::composition_law;

    fn setup(name: &str, n: usize, order: u32) -> (Realization, CompositionLaw) {
        let r = Realization::catalog(name, n, order, &CatalogOptions::default()).unwrap();
        let law = composition_law(&r, order).unwrap();
        (r, law)
    }

    #[test]
    fn lie_series_matches_composition() {
        for name in ["kappa-right", "kappa-left", "snyder", "su2"] {
            let (r, law) = setup(name, 3, 5);
            let a = coproduct(&law);
            let b = coproduct_lie_series(&r, &law).unwrap();
            for mu in 0..3 {
                assert_eq!(a.dp[mu], b.dp[mu], "{name} {mu}");
            }
        }
    }

    #[test]
    fn coassociativity_verdicts() {
        for (name, ok) in [("kappa-right", true), ("kappa-left", true), ("snyder", false)] {
            let (_, law) = setup(name, 3, 5);
            let rep = coassociativity_check(&coproduct(&law)).unwrap();
            assert_eq!(rep.verdict.is_pass(), ok, "{name}: {rep}");
        }
    }

    #[test]
    fn normal_ordered_twists_reproduce_coordinates() {
        for name in ["kappa-right", "snyder", "su2"] {
            let (r, law) = setup(name, 3, 5);
            let t = Truncation::weight(&law);
            for u in [Rational::zero(), Rational::new(1, 2), Rational::one()] {
                let finv = twist_normal_ordered(&law, &u, t).unwrap();
                let rep = twist_consistency(&r, &finv).unwrap();
                assert!(rep.verdict.is_pass(), "{name} u={u}: {rep}");
            }
        }
    }

    #[test]
    fn reduced_twist_is_the_projection() {
        for name in ["snyder", "kappa-light", "su2"] {
            let (r, law) = setup(name, 3, 4);
            let t = Truncation::weight(&law);
            for u in [Rational::zero(), Rational::new(1, 2)] {
                let full = twist_normal_ordered(&law, &u, t).unwrap();
                let reduced = twist_normal_ordered_on_coordinates(&law, &u, t).unwrap();
                assert_eq!(full.first_slot_linear(), reduced, "{name}");
                assert!(twist_consistency(&r, &reduced).unwrap().verdict.is_pass());
            }
        }
    }

    #[test]
    fn exp_form_is_the_right_endpoint() {
        for name in ["kappa-right", "snyder"] {
            let (r, law) = setup(name, 3, 4);
            let t = Truncation::first_slot(&law);
            let e = twist_exp_form(&r, &law, t).unwrap();
            let one = twist_normal_ordered(&law, &Rational::one(), t).unwrap();
            assert_eq!(e, one, "{name}");
            assert!(twist_consistency(&r, &e).unwrap().verdict.is_pass());
        }
    }

    #[test]
    fn conjugation_gives_the_coproduct() {
        for name in ["kappa-right", "snyder"] {
            let (_, law) = setup(name, 3, 4);
            let t = Truncation::weight(&law);
            let f = twist_normal_ordered(&law, &Rational::new(1, 2), t).unwrap().inverse().unwrap();
            let rep = coproduct_conjugation_check(&f, &coproduct(&law)).unwrap();
            assert!(rep.verdict.is_pass(), "{name}: {rep}");
        }
    }

    #[test]
    fn jordanian_twists() {
        for (name, right) in [("kappa-right", true), ("kappa-left", false)] {
            let (r, law) = setup(name, 3, 5);
            let t = Truncation::weight(&law);
            let f = if right {
                jordanian_right(r.space(), t).unwrap()
            } else {
                jordanian_left(r.space(), t).unwrap()
            };
            let rep = twist_consistency(&r, &f.inverse().unwrap()).unwrap();
            assert!(rep.verdict.is_pass(), "{name}: {rep}");
            let rep = coproduct_conjugation_check(&f, &coproduct(&law)).unwrap();
            assert!(rep.verdict.is_pass(), "{name}: {rep}");
        }
    }

    #[test]
    fn consistency_detects_the_wrong_model() {
        let (_, law) = setup("kappa-right", 3, 5);
        let (left, _) = setup("kappa-left", 3, 5);
        let finv = twist_normal_ordered(&law, &Rational::zero(), Truncation::weight(&law)).unwrap();
        assert!(!twist_consistency(&left, &finv).unwrap().verdict.is_pass());
    }

    #[test]
    fn algebroid_and_drinfeld_twists() {
        for (name, which) in [("kappa-left", 0), ("kappa-light", 1)] {
            let (r, law) = setup(name, 3, 4);
            let t = Truncation::weight(&law);
            let f = if which == 0 {
                left_algebroid(&law, t).unwrap()
            } else {
                light_like_drinfeld(r.space(), t).unwrap()
            };
            let rep = twist_consistency(&r, &f.inverse().unwrap()).unwrap();
            assert!(rep.verdict.is_pass(), "{name}: {rep}");
            let rep = coproduct_conjugation_check(&f, &coproduct(&law)).unwrap();
            assert!(rep.verdict.is_pass(), "{name}: {rep}");
        }
    }

    #[test]
    fn covariant_coproducts() {
        let (_, law) = setup("kappa-right", 3, 5);
        let cop = coproduct(&law);
        // p_mu (x) 1 + (1 - a.p) (x) p_mu
        assert_eq!(cop.dp[1].to_string(), "p11 + p21 + a0*p10*p21 - a1*p11*p21 - a2*p12*p21");
        let (_, law) = setup("kappa-left", 3, 5);
        let cop = coproduct(&law);
        // p_mu (x) (1 + a.p) + 1 (x) p_mu
        assert_eq!(cop.dp[1].to_string(), "p11 + p21 - a0*p11*p20 + a1*p11*p21 + a2*p11*p22");
    }

    #[test]
    fn light_like_coproduct_matches_formula() {
        let (r, law) = setup("kappa-light", 3, 5);
        let want = light_like_coproduct(r.space(), 5).unwrap();
        let cop = coproduct(&law);
        for mu in 0..3 {
            assert!((&cop.dp[mu] - &want[mu].truncated(5, cop.dp[mu].pcap())).is_zero(), "{mu}");
        }
    }

    #[test]
    fn undeformed_twist_is_identity() {
        let (_, law) = setup("undeformed", 3, 4);
        let t = Truncation::weight(&law);
        let f = twist_normal_ordered(&law, &Rational::new(1, 2), t).unwrap();
        assert_eq!(f, TensorOperator::identity(law.g.space(), t));
    }

    #[test]
    fn adjoint_series_matches_conjugation() {
        let (r, law) = setup("kappa-light", 3, 4);
        let t = Truncation::weight(&law);
        let b = light_like_drinfeld_exponent(r.space(), t).unwrap();
        let f = b.exp().unwrap();
        let finv = f.inverse().unwrap();
        for mu in 0..3 {
            let x = TensorOperator::from_series(Series::var(r.space(), &tensor_banks(), UNBOUNDED, t.pcap, 1, mu), t).unwrap();
            assert_eq!(adjoint_exp(&b, &x).unwrap(), f.mul(&x).unwrap().mul(&finv).unwrap());
        }
        let cop = coproduct(&law);
        assert!(exponent_conjugation_check(&b, &cop).unwrap().verdict.is_pass());
    }

    #[test]
    fn left_covariant_twists_agree() {
        let (_, law) = setup("kappa-left", 3, 4);
        let t = Truncation::weight(&law);
        let cop = coproduct(&law);
        let a = jordanian_left(law.g.space(), t).unwrap();
        let b = left_algebroid(&law, t).unwrap();
        assert_ne!(a, b);
        assert!(coproduct_conjugation_check(&a, &cop).unwrap().verdict.is_pass());
        assert!(coproduct_conjugation_check(&b, &cop).unwrap().verdict.is_pass());
    }

    #[test]
    fn combinatorial_sum_vanishes() {
        assert!(!combinatorial_sum(1, false).unwrap().is_zero());
        for n in 2..6 {
            assert!(combinatorial_sum(n, false).unwrap().is_zero(), "{n}");
        }
        assert!(!combinatorial_sum(2, true).unwrap().is_zero());
    }
}
