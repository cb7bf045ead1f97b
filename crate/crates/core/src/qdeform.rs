//! Quadratic deformations generated by the abelian dilatation twist
//! `F = exp(sum a_{ab} D_a (x) D_b)`, `D_a = x_a p_a` (no summation).
//!
//! The metric is Euclidean so that `D_a |> f = -i x_a df/dx_a`. Every
//! exponential is a series in the `a` symbols, truncated at `order`.

use std::sync::{Arc, OnceLock};

use crate::coalgebra::{tensor_banks, Grading, TensorOperator, Truncation};
use crate::error::{Error, Result};
use crate::phase::PhaseOperator;
use crate::report::Report;
use crate::scalar::GaussScalar;
use crate::series::{AnalyticFn, Key, Series, UNBOUNDED};
use crate::space::{banks, Banks, Exps, Metric, ParamSpace, Space};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symmetry {
    /// `a_ba = -a_ab`
    Antisymmetric,
    /// `a_ba = a_ab`
    Symmetric,
}

#[derive(Clone, Debug)]
pub struct QDeformation {
    space: Arc<Space>,
    mode: Symmetry,
    order: u32,
    /// `F^{-1}`, built on first use.
    finv: OnceLock<TensorOperator>,
}

/// Name of the independent symbol behind `a_{ab}`.
fn symbol(a: usize, b: usize) -> String {
    format!("a{}{}", a.min(b), a.max(b))
}

impl QDeformation {
    pub fn new(n: usize, mode: Symmetry, order: u32) -> Result<QDeformation> {
        if n == 0 || n > crate::realization::MAX_DIM {
            return Err(Error::Dimension {
                got: n,
                expected: format!("1..={}", crate::realization::MAX_DIM),
            });
        }
        let mut names = Vec::new();
        for a in 0..n {
            let from = if mode == Symmetry::Antisymmetric { a + 1 } else { a };
            names.extend((from..n).map(|b| symbol(a, b)));
        }
        let space = Space::new(Metric::euclidean(n), ParamSpace::new(names)?);
        Ok(QDeformation {
            space,
            mode,
            order,
            finv: OnceLock::new(),
        })
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn mode(&self) -> Symmetry {
        self.mode
    }

    fn zero(&self) -> PhaseOperator {
        PhaseOperator::zero(&self.space, self.order, UNBOUNDED)
    }

    /// `a_{ab}` as a constant operator.
    pub fn a(&self, a: usize, b: usize) -> PhaseOperator {
        if a == b && self.mode == Symmetry::Antisymmetric {
            return self.zero();
        }
        let idx = self.space.params().index_of(&symbol(a, b)).expect("declared");
        let s = self.zero().param_like(idx);
        if a > b && self.mode == Symmetry::Antisymmetric {
            s.neg()
        } else {
            s
        }
    }

    pub fn x(&self, a: usize) -> PhaseOperator {
        PhaseOperator::x(&self.space, self.order, UNBOUNDED, a)
    }

    pub fn p(&self, a: usize) -> PhaseOperator {
        PhaseOperator::p(&self.space, self.order, UNBOUNDED, a)
    }

    /// `D_a = x_a p_a`
    pub fn d(&self, a: usize) -> Result<PhaseOperator> {
        self.x(a).mul(&self.p(a))
    }

    /// `exp(i sum_b a_{ab} D_b)`, or with `a_{ba}` when `transposed`.
    fn dilatation_exp(&self, a: usize, transposed: bool) -> Result<PhaseOperator> {
        let mut arg = self.zero();
        for b in 0..self.dim() {
            let c = if transposed { self.a(b, a) } else { self.a(a, b) };
            arg = arg.add(&c.mul(&self.d(b)?)?)?;
        }
        arg.scale(&GaussScalar::i()).exp()
    }

    /// `phi_a = exp(i sum_b a_{ab} D_b)`
    pub fn phi(&self, a: usize) -> Result<PhaseOperator> {
        self.dilatation_exp(a, false)
    }

    /// `phi~_a = exp(i sum_b a_{ba} D_b)`
    pub fn phi_tilde(&self, a: usize) -> Result<PhaseOperator> {
        self.dilatation_exp(a, true)
    }

    /// `x^_a = x_a phi_a`
    pub fn xhat(&self, a: usize) -> Result<PhaseOperator> {
        self.x(a).mul(&self.phi(a)?)
    }

    /// `y^_a = x_a phi~_a`, the coordinates of the opposite twist.
    pub fn yhat(&self, a: usize) -> Result<PhaseOperator> {
        self.x(a).mul(&self.phi_tilde(a)?)
    }

    /// `c_{ab} = exp(a_{ab})`
    pub fn c(&self, a: usize, b: usize) -> Result<PhaseOperator> {
        self.a(a, b).exp()
    }

    /// `q_{ab} = exp(a_{ab} - a_{ba})`; `exp(2 a_{ab})` when antisymmetric.
    pub fn q(&self, a: usize, b: usize) -> Result<PhaseOperator> {
        self.a(a, b).sub(&self.a(b, a))?.exp()
    }

    /// `exp(sum_{ab} a_{ab} m_a n_b)` as a parameter series over `like`'s banks.
    fn weight(&self, m: &Exps, nexp: &Exps, like: &Series) -> Result<Series> {
        let mut arg = like.zero_like();
        for a in 0..self.dim() {
            for b in 0..self.dim() {
                let k = m.get(a) as i64 * nexp.get(b) as i64;
                if k != 0 {
                    let coef = self.a(a, b).series().terms().to_vec();
                    for (key, c) in coef {
                        let t = like.from_terms_like([(Key::new(Exps::ZERO, key.par), c.mul_int_ipow(k, 0))]);
                        arg = &arg + &t;
                    }
                }
            }
        }
        if arg.is_zero() {
            Ok(like.one_like())
        } else {
            arg.expand_fn(AnalyticFn::Exp)
        }
    }

    /// `f * g = m F^{-1} (|> (x) |>)(f (x) g)` for polynomials in `x`. On
    /// monomials `D_a` acts by `-i m_a`, so `x^m * x^n = exp(a_{ab} m_a n_b) x^{m+n}`.
    pub fn star(&self, f: &Series, g: &Series) -> Result<Series> {
        let pb = position_banks();
        if f.banks() != &pb || g.banks() != &pb {
            return Err(Error::IncompatibleSeries("star expects polynomials in x".into()));
        }
        let mut out = f.zero_like();
        for (k1, c1) in f.terms() {
            for (k2, c2) in g.terms() {
                let w = self.weight(&k1.mono, &k2.mono, f)?;
                let mono = f.from_terms_like([(Key::new(k1.mono.add(&k2.mono), k1.par.add(&k2.par)), c1 * c2)]);
                out = &out + &(&w * &mono);
            }
        }
        Ok(out)
    }

    pub fn coordinate(&self, a: usize) -> Series {
        Series::var(&self.space, &position_banks(), UNBOUNDED, self.order, 0, a)
    }

    fn trunc(&self) -> Truncation {
        Truncation {
            grading: Grading::Weight,
            cap: 2,
            pcap: self.order,
        }
    }

    /// `sum a_{ab} D_a (x) D_b`, or with the slots swapped when `opposite`.
    fn twist_exponent(&self, opposite: bool) -> Result<TensorOperator> {
        let t = self.trunc();
        let mut arg = TensorOperator::from_series(Series::zero(&self.space, &tensor_banks(), UNBOUNDED, self.order), t)?;
        for a in 0..self.dim() {
            for b in 0..self.dim() {
                let (l, r) = if opposite { (b, a) } else { (a, b) };
                let term = TensorOperator::product(&self.a(a, b).mul(&self.d(l)?)?, &self.d(r)?, t)?;
                arg = arg.add(&term)?;
            }
        }
        Ok(arg)
    }

    /// `F^{-1} = exp(-sum a_{ab} D_a (x) D_b)`, or of `F^op` when `opposite`.
    pub fn twist_inverse(&self, opposite: bool) -> Result<TensorOperator> {
        if !opposite {
            if let Some(t) = self.finv.get() {
                return Ok(t.clone());
            }
        }
        let finv = self.twist_exponent(opposite)?.scale(&-GaussScalar::one()).exp()?;
        if !opposite {
            let _ = self.finv.set(finv.clone());
        }
        Ok(finv)
    }

    fn tensor(&self, l: &PhaseOperator, r: &PhaseOperator) -> Result<TensorOperator> {
        TensorOperator::product(l, r, self.trunc())
    }

    /// `Delta_0 X = X (x) 1 + 1 (x) X`
    fn primitive(&self, x: &PhaseOperator) -> Result<TensorOperator> {
        let one = PhaseOperator::one(&self.space, self.order, UNBOUNDED);
        self.tensor(x, &one)?.add(&self.tensor(&one, x)?)
    }

    /// `F X F^{-1} = sum_k ad_A^k(X) / k!` with `F = exp(A)`. Each commutator
    /// raises the degree in `a`, so the sum ends at the truncation.
    fn conjugate(&self, x: &TensorOperator) -> Result<TensorOperator> {
        let a = self.twist_exponent(false)?;
        let mut out = x.clone();
        let mut term = x.clone();
        let mut k = 0;
        loop {
            k += 1;
            term = a.mul(&term)?.sub(&term.mul(&a)?)?.scale(&GaussScalar::ratio(1, k));
            if term.is_zero() {
                return Ok(out);
            }
            out = out.add(&term)?;
        }
    }

    /// `F (Delta_0 p_a) F^{-1}`
    pub fn coproduct_p(&self, a: usize) -> Result<TensorOperator> {
        self.conjugate(&self.primitive(&self.p(a))?)
    }

    /// `F (Delta_0 D_a) F^{-1}`
    pub fn coproduct_d(&self, a: usize) -> Result<TensorOperator> {
        self.conjugate(&self.primitive(&self.d(a)?)?)
    }

    /// `F Delta_0(phi_a) F^{-1}`, with `Delta_0(phi_a) = exp(i a_{ab} Delta_0 D_b)`.
    pub fn coproduct_phi(&self, a: usize) -> Result<TensorOperator> {
        let mut arg = TensorOperator::from_series(Series::zero(&self.space, &tensor_banks(), UNBOUNDED, self.order), self.trunc())?;
        for b in 0..self.dim() {
            let db = self.primitive(&self.d(b)?)?;
            let coef = self.tensor(&self.a(a, b), &PhaseOperator::one(&self.space, self.order, UNBOUNDED))?;
            arg = arg.add(&coef.mul(&db)?)?;
        }
        self.conjugate(&arg.scale(&GaussScalar::i()).exp()?)
    }

    /// `m F^{-1}(|> (x) 1)(x_a (x) 1)`, which should equal `x^_a`.
    pub fn xhat_from_twist(&self, a: usize, opposite: bool) -> Result<Series> {
        Ok(self.twist_inverse(opposite)?.act_first_on_coordinate(a))
    }
}

pub fn position_banks() -> Banks {
    Banks::new(&[banks::X])
}

fn diff(a: &PhaseOperator, b: &PhaseOperator) -> Result<Series> {
    Ok(a.sub(b)?.series().clone())
}

/// Every operator and star identity of the dilatation deformation.
pub fn qdeform_checks(q: &QDeformation) -> Result<Vec<Report>> {
    let n = q.dim();
    let name = match q.mode {
        Symmetry::Antisymmetric => "qdeform",
        Symmetry::Symmetric => "qdeform-symmetric",
    };
    let new = |check: &str| Report::new(name, check, q.order);
    let xh: Vec<PhaseOperator> = (0..n).map(|a| q.xhat(a)).collect::<Result<_>>()?;
    let yh: Vec<PhaseOperator> = (0..n).map(|a| q.yhat(a)).collect::<Result<_>>()?;
    let phi: Vec<PhaseOperator> = (0..n).map(|a| q.phi(a)).collect::<Result<_>>()?;
    let phit: Vec<PhaseOperator> = (0..n).map(|a| q.phi_tilde(a)).collect::<Result<_>>()?;
    let one = PhaseOperator::one(&q.space, q.order, UNBOUNDED);
    let mut out = Vec::new();

    let mut r = new("dilatation");
    for a in 0..n {
        for b in 0..n {
            let (da, db) = (q.d(a)?, q.d(b)?);
            r.compare(&[a, b, 0], da.commutator(&db)?.series());
            let delta = if a == b { GaussScalar::one() } else { GaussScalar::zero() };
            let want = q.p(a).scale(&(&GaussScalar::i() * &delta));
            r.compare(&[a, b, 1], &diff(&da.commutator(&q.p(b))?, &want)?);
            let want = q.x(a).scale(&(&-GaussScalar::i() * &delta));
            r.compare(&[a, b, 2], &diff(&da.commutator(&q.x(b))?, &want)?);
        }
    }
    out.push(r);

    let mut r = new("realization");
    for a in 0..n {
        r.compare(&[a, 0], &(&phi[a].act_on_one()? - &one.act_on_one()?));
        r.compare(&[a, 1], &(&xh[a].act_on_one()? - &q.x(a).act_on_one()?));
        r.compare(&[a, 2], &(&yh[a].act_on_one()? - &q.x(a).act_on_one()?));
        r.compare(&[a, 3], &(&q.xhat_from_twist(a, false)? - xh[a].series()));
        r.compare(&[a, 4], &(&q.xhat_from_twist(a, true)? - yh[a].series()));
    }
    out.push(r);

    let mut r = new("q-commutation");
    for a in 0..n {
        for b in 0..n {
            let lhs = xh[a].mul(&xh[b])?;
            let rhs = q.q(a, b)?.mul(&xh[b])?.mul(&xh[a])?;
            r.compare(&[a, b, 0], &diff(&lhs, &rhs)?);
            // p_a x^_b - e^{a_ba} x^_b p_a = -i delta_ab phi_b
            let lhs = q.p(a).mul(&xh[b])?.sub(&q.c(b, a)?.mul(&xh[b])?.mul(&q.p(a))?)?;
            let want = if a == b { phi[b].scale(&-GaussScalar::i()) } else { q.zero() };
            r.compare(&[a, b, 1], &diff(&lhs, &want)?);
            // phi_a x^_b = e^{a_ab} x^_b phi_a
            let lhs = phi[a].mul(&xh[b])?;
            let rhs = q.c(a, b)?.mul(&xh[b])?.mul(&phi[a])?;
            r.compare(&[a, b, 2], &diff(&lhs, &rhs)?);
        }
    }
    out.push(r);

    let mut r = new("y-partner");
    for a in 0..n {
        for b in 0..n {
            r.compare(&[a, b, 0], xh[a].commutator(&yh[b])?.series());
            let rhs = q.q(b, a)?.mul(&yh[b])?.mul(&yh[a])?;
            r.compare(&[a, b, 1], &diff(&yh[a].mul(&yh[b])?, &rhs)?);
        }
    }
    out.push(r);

    let mut r = new("coproduct");
    for a in 0..n {
        let want = q.tensor(&q.p(a), &phi[a])?.add(&q.tensor(&phit[a], &q.p(a))?)?;
        r.compare(&[a, 0], q.coproduct_p(a)?.sub(&want)?.series());
        let want = q.primitive(&q.d(a)?)?;
        r.compare(&[a, 1], q.coproduct_d(a)?.sub(&want)?.series());
        let want = q.tensor(&phi[a], &phi[a])?;
        r.compare(&[a, 2], q.coproduct_phi(a)?.sub(&want)?.series());
    }
    out.push(r);

    let mut r = new("star");
    let x: Vec<Series> = (0..n).map(|a| q.coordinate(a)).collect();
    for a in 0..n {
        for b in 0..n {
            let qab = q.q(a, b)?.series().clone();
            let qab = position_scalar(&qab, &x[0]);
            let lhs = q.star(&x[a], &x[b])?;
            r.compare(&[a, b, 0], &(&lhs - &(&qab * &q.star(&x[b], &x[a])?)));
            let cab = position_scalar(q.c(a, b)?.series(), &x[0]);
            r.compare(&[a, b, 1], &(&lhs - &(&cab * &(&x[a] * &x[b]))));
            for c in 0..n {
                let l = q.star(&q.star(&x[a], &x[b])?, &x[c])?;
                let rr = q.star(&x[a], &q.star(&x[b], &x[c])?)?;
                r.compare(&[a, b, c], &(&l - &rr));
            }
        }
    }
    out.push(r);

    let mut r = new("cocycle");
    r.compare(&[], &cocycle_defect(q)?);
    out.push(r);

    if q.mode == Symmetry::Symmetric {
        let mut r = new("symmetric");
        for a in 0..n {
            r.compare(&[a, 0], &diff(&phi[a], &phit[a])?);
            for b in 0..n {
                r.compare(&[a, b], xh[a].commutator(&xh[b])?.series());
            }
        }
        let f = &(&x[0] * &x[0]) + &x[n - 1];
        let g = &(&x[n - 1] * &x[0]) + &x[0].constant_like(GaussScalar::from_int(2));
        r.compare(&[], &(&q.star(&f, &g)? - &q.star(&g, &f)?));
        out.push(r);
    } else {
        let mut r = new("antisymmetric");
        for a in 0..n {
            r.compare(&[a, 0], &diff(&phit[a].mul(&phi[a])?, &one)?);
            r.compare(&[a, 1], q.q(a, a)?.sub(&one)?.series());
            for b in 0..n {
                let lhs = q.q(b, a)?.mul(&q.q(a, b)?)?;
                r.compare(&[a, b], &diff(&lhs, &one)?);
            }
        }
        out.push(r);
    }
    Ok(out)
}

/// Rewrites a parameter-only series into the banks of `like`.
fn position_scalar(s: &Series, like: &Series) -> Series {
    like.from_terms_like(s.terms().iter().map(|(k, c)| (Key::new(Exps::ZERO, k.par), c.clone())))
}

/// `(F (x) 1)(Delta_0 (x) id) F - (1 (x) F)(id (x) Delta_0) F` with the
/// commuting `D_a` of three slots as free variables.
fn cocycle_defect(q: &QDeformation) -> Result<Series> {
    let n = q.dim();
    let b3 = Banks::new(&[banks::X1, banks::X2, banks::P1]);
    let d = |slot: usize, a: usize| Series::var(&q.space, &b3, UNBOUNDED, q.order, slot, a);
    let a = |i: usize, j: usize| position_scalar(q.a(i, j).series(), &d(0, 0));
    // exp(sum a_ij L_i R_j)
    let f = |l: &dyn Fn(usize) -> Series, r: &dyn Fn(usize) -> Series| -> Result<Series> {
        let mut arg = d(0, 0).zero_like();
        for i in 0..n {
            for j in 0..n {
                arg = &arg + &(&a(i, j) * &(&l(i) * &r(j)));
            }
        }
        if arg.is_zero() {
            Ok(arg.one_like())
        } else {
            arg.expand_fn(AnalyticFn::Exp)
        }
    };
    let lhs = &f(&|i| d(0, i), &|j| d(1, j))? * &f(&|i| &d(0, i) + &d(1, i), &|j| d(2, j))?;
    let rhs = &f(&|i| d(1, i), &|j| d(2, j))? * &f(&|i| d(0, i), &|j| &d(1, j) + &d(2, j))?;
    Ok(&lhs - &rhs)
}

/// First-order quadratic realization `x^_m = x_m + i K_{m g b a} x_a x_b p_g`.
/// `k4[((m n + g) n + b) n + a]` holds `K_{m g b a}`, each a parameter-only
/// operator of positive degree; products of two entries are dropped.
pub fn quadratic_first_order(space: &Arc<Space>, k4: &[PhaseOperator]) -> Result<Vec<PhaseOperator>> {
    let n = space.dim();
    if k4.len() != n.pow(4) {
        return Err(Error::Dimension {
            got: k4.len(),
            expected: format!("{}", n.pow(4)),
        });
    }
    let x = |a| PhaseOperator::x(space, 1, UNBOUNDED, a);
    let p = |a| PhaseOperator::p(space, 1, UNBOUNDED, a);
    (0..n)
        .map(|m| {
            let mut out = x(m);
            for g in 0..n {
                for b in 0..n {
                    for a in 0..n {
                        let k = k4[((m * n + g) * n + b) * n + a].truncated(1);
                        if k.is_zero() {
                            continue;
                        }
                        let t = k.mul(&x(a))?.mul(&x(b))?.mul(&p(g))?.scale(&GaussScalar::i());
                        out = out.add(&t)?;
                    }
                }
            }
            Ok(out)
        })
        .collect()
}

/// `[x^_m, x^_n] = (K_{m n g d} - K_{n m g d}) x^_g x^_d` to first order in `K`.
pub fn quadratic_commutator_check(space: &Arc<Space>, k4: &[PhaseOperator]) -> Result<Report> {
    let n = space.dim();
    let xh = quadratic_first_order(space, k4)?;
    let mut r = Report::new("quadratic", "commutator", 1);
    let at = |m: usize, g: usize, b: usize, a: usize| k4[((m * n + g) * n + b) * n + a].truncated(1);
    for m in 0..n {
        for nu in 0..n {
            let lhs = xh[m].commutator(&xh[nu])?;
            let mut rhs = PhaseOperator::zero(space, 1, UNBOUNDED);
            for g in 0..n {
                for d in 0..n {
                    let theta = at(m, nu, g, d).sub(&at(nu, m, g, d))?;
                    rhs = rhs.add(&theta.mul(&xh[g])?.mul(&xh[d])?)?;
                }
            }
            r.compare(&[m, nu], &diff(&lhs, &rhs)?);
        }
    }
    Ok(r)
}

/// `K_{m g b a} = a_{m g} delta_{g b} delta_{a m}`, the first-order data of
/// the dilatation realization.
pub fn dilatation_k4(q: &QDeformation) -> Vec<PhaseOperator> {
    let n = q.dim();
    let mut out = vec![PhaseOperator::zero(&q.space, 1, UNBOUNDED); n.pow(4)];
    for m in 0..n {
        for g in 0..n {
            out[((m * n + g) * n + g) * n + m] = q.a(m, g).truncated(1);
        }
    }
    out
}
