//! Realizations `x^_mu = x_alpha phi_{alpha mu}(p) + chi_mu(p)` and the model catalog.
//!
//! Repeated indices are contracted with the metric, so at zeroth order in
//! the deformation `phi = eta` and `x^ = x`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::phase::PhaseOperator;
use crate::scalar::{GaussScalar, Rational};
use crate::series::{AnalyticFn, ParamPoly, Series};
use crate::space::{banks, Banks, Metric, Space};

#[derive(Clone, Debug)]
pub struct Realization {
    name: String,
    space: Arc<Space>,
    order: u32,
    phi: Vec<Vec<Series>>,
    chi: Vec<Series>,
    linear: Option<LinearRealization>,
}

/// Constant tensor `K_{beta mu alpha}` of a linear realization,
/// `phi_{alpha mu} = eta_{alpha mu} + K_{beta mu alpha} p^beta`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearRealization {
    space: Arc<Space>,
    k: Vec<ParamPoly>,
}

/// Names accepted by [`Realization::catalog`].
pub const CATALOG: &[&str] = &[
    "undeformed",
    "snyder",
    "snyder-gen",
    "su2",
    "kappa-right",
    "kappa-left",
    "kappa-light",
    "kappa-snyder",
];

/// Extra inputs for catalog entries that take them.
#[derive(Clone, Debug)]
pub struct CatalogOptions {
    /// Coefficients of `phi1(s)` and `phi2(s)`, `s = l^2 p^2`, for `snyder-gen`.
    pub phi1: Vec<Rational>,
    pub phi2: Vec<Rational>,
    /// Overrides the default signature (not allowed for `su2`).
    pub metric: Option<Metric>,
}

impl Default for CatalogOptions {
    fn default() -> Self {
        CatalogOptions {
            phi1: vec![Rational::one(), Rational::new(1, 4)],
            phi2: vec![Rational::one(), Rational::new(-1, 3)],
            metric: None,
        }
    }
}

/// Default dimension of a catalog model.
pub fn default_dim(name: &str) -> usize {
    if name == "su2" {
        3
    } else {
        4
    }
}

pub fn levi_civita(i: usize, j: usize, k: usize) -> i64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1,
        _ => 0,
    }
}

/// Largest dimension the engine's variable layouts accommodate.
pub const MAX_DIM: usize = 4;

/// Builders for one-bank momentum series of a model.
#[derive(Clone)]
pub struct MomentumKit {
    pub space: Arc<Space>,
    pub banks: Banks,
    pub order: u32,
    pub pcap: u32,
}

impl MomentumKit {
    pub fn new(space: &Arc<Space>, order: u32) -> MomentumKit {
        MomentumKit {
            space: space.clone(),
            banks: Banks::new(&[banks::P]),
            order,
            pcap: order.saturating_mul(2),
        }
    }

    pub fn with_bank(mut self, bank: crate::space::Bank) -> MomentumKit {
        self.banks = Banks::new(&[bank]);
        self
    }

    pub fn zero(&self) -> Series {
        Series::zero(&self.space, &self.banks, self.order, self.pcap)
    }

    pub fn c(&self, c: GaussScalar) -> Series {
        Series::constant(&self.space, &self.banks, self.order, self.pcap, c)
    }

    pub fn int(&self, n: i64) -> Series {
        self.c(GaussScalar::from_int(n))
    }

    pub fn p(&self, mu: usize) -> Series {
        Series::var(&self.space, &self.banks, self.order, self.pcap, 0, mu)
    }

    pub fn param(&self, name: &str) -> Result<Series> {
        let idx = self.space.param(name)?;
        Ok(Series::param(&self.space, &self.banks, self.order, self.pcap, idx))
    }

    pub fn a(&self, mu: usize) -> Result<Series> {
        self.param(&format!("a{mu}"))
    }

    pub fn eta(&self, mu: usize, nu: usize) -> i64 {
        self.space.metric().entry(mu, nu)
    }

    /// `sum_mu eta_{mu mu} u_mu v_mu`.
    pub fn dot(&self, u: &[Series], v: &[Series]) -> Series {
        let m = self.space.metric();
        u.iter().zip(v).enumerate().fold(self.zero(), |acc, (mu, (a, b))| {
            &acc + &(a * b).scale(&GaussScalar::from_int(m.diag(mu)))
        })
    }

    pub fn momenta(&self) -> Vec<Series> {
        (0..self.space.dim()).map(|mu| self.p(mu)).collect()
    }

    pub fn avec(&self) -> Result<Vec<Series>> {
        (0..self.space.dim()).map(|mu| self.a(mu)).collect()
    }

    /// Polynomial with rational coefficients evaluated at `s`.
    pub fn poly(&self, coeffs: &[Rational], s: &Series) -> Series {
        let mut out = self.zero();
        let mut pw = self.int(1);
        for c in coeffs {
            out = &out + &pw.scale_rational(c);
            pw = &pw * s;
        }
        out
    }
}

impl Realization {
    /// Builds and validates a realization from its `phi` and `chi` series
    /// (one graded momentum bank each).
    pub fn new(name: &str, space: &Arc<Space>, order: u32, phi: Vec<Vec<Series>>, chi: Vec<Series>) -> Result<Realization> {
        let n = space.dim();
        if n == 0 || n > MAX_DIM {
            return Err(Error::Dimension {
                got: n,
                expected: format!("1..={MAX_DIM}"),
            });
        }
        if phi.len() != n || phi.iter().any(|r| r.len() != n) || chi.len() != n {
            return Err(Error::InvalidModel(format!("{name}: phi must be {n}x{n} and chi of length {n}")));
        }
        let r = Realization {
            name: name.to_string(),
            space: space.clone(),
            order,
            phi,
            chi,
            linear: None,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn from_linear(name: &str, k: &LinearRealization, order: u32) -> Result<Realization> {
        let kit = MomentumKit::new(&k.space, order);
        let n = k.space.dim();
        let mut phi = vec![vec![kit.zero(); n]; n];
        for (alpha, row) in phi.iter_mut().enumerate() {
            for (mu, entry) in row.iter_mut().enumerate() {
                let mut s = kit.int(kit.eta(alpha, mu));
                for beta in 0..n {
                    let c = k.entry(beta, mu, alpha);
                    if !c.is_zero() {
                        let term = &c.lift(&kit.zero()) * &kit.p(beta);
                        s = &s + &term.scale(&GaussScalar::from_int(kit.eta(beta, beta)));
                    }
                }
                *entry = s;
            }
        }
        let chi = vec![kit.zero(); n];
        let mut r = Realization::new(name, &k.space, order, phi, chi)?;
        r.linear = Some(k.clone());
        Ok(r)
    }

    pub fn catalog(name: &str, n: usize, order: u32, opts: &CatalogOptions) -> Result<Realization> {
        if !CATALOG.contains(&name) {
            return Err(Error::UnknownModel(name.to_string()));
        }
        if n == 0 || n > MAX_DIM {
            return Err(Error::Dimension {
                got: n,
                expected: format!("1..={MAX_DIM}"),
            });
        }
        let metric = match (&opts.metric, name) {
            (Some(_), "su2") => {
                return Err(Error::InvalidModel("su2 uses the Euclidean metric".into()));
            }
            (Some(m), _) => {
                if m.dim() != n {
                    return Err(Error::Dimension {
                        got: m.dim(),
                        expected: format!("metric of dimension {n}"),
                    });
                }
                m.clone()
            }
            (None, "su2") => Metric::euclidean(n),
            (None, _) => Metric::lorentzian(n),
        };
        if name == "su2" && n != 3 {
            return Err(Error::Dimension {
                got: n,
                expected: "3 (Euclidean)".into(),
            });
        }
        let space = if name == "kappa-light" {
            Space::standard_null(metric)?
        } else {
            Space::standard(metric)
        };
        let kit = MomentumKit::new(&space, order);
        let p = kit.momenta();
        let eta = |a, m| kit.int(kit.eta(a, m));
        let build = |f: &dyn Fn(usize, usize) -> Series| -> Vec<Vec<Series>> {
            (0..n).map(|a| (0..n).map(|m| f(a, m)).collect()).collect()
        };
        let zero_chi = vec![kit.zero(); n];
        match name {
            "undeformed" => Realization::new(name, &space, order, build(&|a, m| eta(a, m)), zero_chi),
            "snyder" => {
                let l2 = kit.param("l")?.pow(2);
                let phi = build(&|a, m| &eta(a, m) + &(&l2 * &(&p[a] * &p[m])));
                Realization::new(name, &space, order, phi, zero_chi)
            }
            "snyder-gen" => {
                let l2 = kit.param("l")?.pow(2);
                let s = &l2 * &kit.dot(&p, &p);
                let f1 = kit.poly(&opts.phi1, &s);
                let f2 = kit.poly(&opts.phi2, &s);
                let phi = build(&|a, m| &(&eta(a, m) * &f1) + &(&l2 * &(&(&p[a] * &p[m]) * &f2)));
                Realization::new(name, &space, order, phi, zero_chi)
            }
            "su2" => {
                let l = kit.param("l")?;
                let root = (&(&l * &l) * &kit.dot(&p, &p)).scale(&GaussScalar::from_int(-1));
                let root = root.expand_fn(AnalyticFn::Sqrt1p)?;
                // x^_i = x_i sqrt(1 - l^2 p^2) + l eps_ijk x_j p_k
                let phi = build(&|j, i| {
                    let mut s = &eta(j, i) * &root;
                    for (k, pk) in p.iter().enumerate() {
                        let e = levi_civita(i, j, k);
                        if e != 0 {
                            s = &s + &(&l * pk).scale(&GaussScalar::from_int(e));
                        }
                    }
                    s
                });
                Realization::new(name, &space, order, phi, zero_chi)
            }
            "kappa-right" => {
                let k = LinearRealization::right_covariant(&space, &a_polys(&space)?);
                Realization::from_linear(name, &k, order)
            }
            "kappa-left" => {
                let k = LinearRealization::left_covariant(&space, &a_polys(&space)?);
                Realization::from_linear(name, &k, order)
            }
            "kappa-light" | "kappa-snyder" => {
                let k = LinearRealization::light_like(&space, &a_polys(&space)?);
                Realization::from_linear(name, &k, order)
            }
            _ => unreachable!(),
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.dim();
        for a in 0..n {
            for m in 0..n {
                let s = &self.phi[a][m];
                if s.banks() != &Banks::new(&[banks::P]) {
                    return Err(Error::InvalidModel(format!("{}: phi must be a series in p", self.name)));
                }
                let zeroth = s.undeformed();
                let expect = s.constant_like(GaussScalar::from_int(self.space.metric().entry(a, m)));
                if zeroth != expect {
                    return Err(Error::InvalidModel(format!(
                        "{}: phi_{a}{m} at zeroth order in the parameters is {zeroth}, expected {}",
                        self.name,
                        self.space.metric().entry(a, m)
                    )));
                }
            }
            let z = self.chi[a].undeformed();
            if !z.is_zero() {
                return Err(Error::InvalidModel(format!(
                    "{}: chi_{a} does not vanish at zeroth order: {z}",
                    self.name
                )));
            }
        }
        Ok(())
    }

    /// True when each `phi` term has momentum degree at most its parameter
    /// degree and each `chi` term at most one less. Operator identities are
    /// then exact when truncated by parameter degree.
    pub fn is_graded(&self) -> bool {
        let ok = |s: &Series, shift: u32| {
            s.terms()
                .iter()
                .all(|(k, _)| k.mono.degree() + shift <= k.par.degree())
        };
        self.phi.iter().flatten().all(|s| ok(s, 0)) && self.chi.iter().all(|s| ok(s, 1))
    }

    fn require_graded(&self) -> Result<()> {
        if self.is_graded() {
            Ok(())
        } else {
            Err(Error::InvalidModel(format!(
                "{}: operator checks need every momentum power paired with a parameter power",
                self.name
            )))
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: &str) -> Realization {
        self.name = name.to_string();
        self
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

    pub fn phi(&self, alpha: usize, mu: usize) -> &Series {
        &self.phi[alpha][mu]
    }

    pub fn chi(&self, mu: usize) -> &Series {
        &self.chi[mu]
    }

    pub fn has_chi(&self) -> bool {
        self.chi.iter().any(|c| !c.is_zero())
    }

    pub fn linear(&self) -> Option<&LinearRealization> {
        self.linear.as_ref()
    }

    pub fn kit(&self) -> MomentumKit {
        MomentumKit::new(&self.space, self.order)
    }

    /// `x^_mu` as an operator truncated at parameter degree `pcap`.
    pub fn hat_x(&self, mu: usize, pcap: u32, xcap: u32) -> Result<PhaseOperator> {
        self.require_graded()?;
        let n = self.dim();
        let mut out = PhaseOperator::from_momentum(&self.chi[mu], pcap, xcap)?;
        for alpha in 0..n {
            let f = PhaseOperator::from_momentum(&self.phi[alpha][mu], pcap, xcap)?;
            let x = PhaseOperator::x(&self.space, pcap, xcap, alpha);
            let t = x.mul(&f)?.scale(&GaussScalar::from_int(self.space.metric().diag(alpha)));
            out = out.add(&t)?;
        }
        Ok(out)
    }

    pub fn hat_xs(&self, pcap: u32, xcap: u32) -> Result<Vec<PhaseOperator>> {
        (0..self.dim()).map(|mu| self.hat_x(mu, pcap, xcap)).collect()
    }
}

fn a_polys(space: &Arc<Space>) -> Result<Vec<ParamPoly>> {
    (0..space.dim())
        .map(|mu| Ok(ParamPoly::symbol(space, space.param(&format!("a{mu}"))?)))
        .collect()
}

impl LinearRealization {
    pub fn new<F>(space: &Arc<Space>, f: F) -> LinearRealization
    where
        F: Fn(usize, usize, usize) -> ParamPoly,
    {
        let n = space.dim();
        let mut k = Vec::with_capacity(n * n * n);
        for b in 0..n {
            for m in 0..n {
                for a in 0..n {
                    k.push(f(b, m, a));
                }
            }
        }
        LinearRealization {
            space: space.clone(),
            k,
        }
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    /// `K_{beta mu alpha}`.
    pub fn entry(&self, beta: usize, mu: usize, alpha: usize) -> &ParamPoly {
        let n = self.space.dim();
        &self.k[(beta * n + mu) * n + alpha]
    }

    fn eta(&self, a: usize, b: usize) -> GaussScalar {
        GaussScalar::from_int(self.space.metric().entry(a, b))
    }

    pub fn zero(space: &Arc<Space>) -> LinearRealization {
        LinearRealization::new(space, |_, _, _| ParamPoly::zero(space))
    }

    /// `K_{beta mu alpha} = -a_mu eta_{alpha beta}`: `x^_mu = x_mu - a_mu (x.p)`.
    pub fn right_covariant(space: &Arc<Space>, a: &[ParamPoly]) -> LinearRealization {
        let m = space.metric().clone();
        LinearRealization::new(space, |b, mu, al| {
            a[mu].scale(&GaussScalar::from_int(-m.entry(al, b)))
        })
    }

    /// `K_{beta mu alpha} = a_beta eta_{mu alpha}`: `x^_mu = x_mu (1 + a.p)`.
    pub fn left_covariant(space: &Arc<Space>, a: &[ParamPoly]) -> LinearRealization {
        let m = space.metric().clone();
        LinearRealization::new(space, |b, mu, al| a[b].scale(&GaussScalar::from_int(m.entry(mu, al))))
    }

    /// `x^_mu = x_mu (1 + a.p) - (a.x) p_mu`.
    pub fn light_like(space: &Arc<Space>, a: &[ParamPoly]) -> LinearRealization {
        let m = space.metric().clone();
        LinearRealization::new(space, |b, mu, al| {
            &a[b].scale(&GaussScalar::from_int(m.entry(mu, al)))
                - &a[al].scale(&GaussScalar::from_int(m.entry(b, mu)))
        })
    }

    /// `K_{beta mu alpha} = a_alpha eta_{mu beta} - a_mu eta_{alpha beta}`.
    pub fn kappa_snyder_form(space: &Arc<Space>, a: &[ParamPoly]) -> LinearRealization {
        let m = space.metric().clone();
        LinearRealization::new(space, |b, mu, al| {
            &a[al].scale(&GaussScalar::from_int(m.entry(mu, b)))
                - &a[mu].scale(&GaussScalar::from_int(m.entry(al, b)))
        })
    }

    /// Structure constants `C_{mu nu alpha} = K_{mu nu alpha} - K_{nu mu alpha}`.
    pub fn structure_constants(&self) -> Vec<ParamPoly> {
        let n = self.space.dim();
        let mut c = Vec::with_capacity(n * n * n);
        for mu in 0..n {
            for nu in 0..n {
                for al in 0..n {
                    c.push(self.entry(mu, nu, al) - self.entry(nu, mu, al));
                }
            }
        }
        c
    }

    /// Evaluates the quadratic closure condition
    /// `K_{b m l} K_{l n a} - K_{b n l} K_{l m a} = (K_{m n l} - K_{n m l}) K_{b l a}`
    /// (contractions over `l` through the metric). Returns the structure
    /// constants, indexed `(mu * n + nu) * n + alpha`, when it holds.
    pub fn lie_closure_check(&self) -> (bool, Vec<ParamPoly>) {
        let n = self.space.dim();
        let c = self.structure_constants();
        for b in 0..n {
            for mu in 0..n {
                for nu in 0..n {
                    for al in 0..n {
                        let mut acc = ParamPoly::zero(&self.space);
                        for la in 0..n {
                            let e = self.eta(la, la);
                            let t1 = self.entry(b, mu, la) * self.entry(la, nu, al);
                            let t2 = self.entry(b, nu, la) * self.entry(la, mu, al);
                            let t3 = &c[(mu * n + nu) * n + la] * self.entry(b, la, al);
                            acc = &acc + &(&(&t1 - &t2) - &t3).scale(&e);
                        }
                        if !acc.is_zero() {
                            return (false, c);
                        }
                    }
                }
            }
        }
        (true, c)
    }

    /// `script K_{mu nu}(k) = K_{mu alpha nu} k^alpha` as an `n x n` matrix of
    /// series over the layout of `k`.
    pub fn script_k(&self, k: &[Series]) -> Vec<Vec<Series>> {
        let n = self.space.dim();
        let zero = k[0].zero_like();
        (0..n)
            .map(|mu| {
                (0..n)
                    .map(|nu| {
                        (0..n).fold(zero.clone(), |acc, al| {
                            let c = self.entry(mu, al, nu);
                            if c.is_zero() {
                                return acc;
                            }
                            let e = GaussScalar::from_int(self.space.metric().diag(al));
                            &acc + &(&c.lift(&zero) * &k[al]).scale(&e)
                        })
                    })
                    .collect()
            })
            .collect()
    }
}

/// `true` when the series has no dependence on the momenta.
pub fn is_momentum_free(s: &Series) -> bool {
    s.terms().iter().all(|(k, _)| k.mono.is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snyder_phi() {
        let r = Realization::catalog("snyder", 4, 6, &CatalogOptions::default()).unwrap();
        assert_eq!(r.phi(0, 0).to_string(), "-1 + l^2*p0^2");
        assert_eq!(r.phi(1, 2).to_string(), "l^2*p1*p2");
        assert!(r.is_graded());
    }

    #[test]
    fn kappa_left_phi() {
        let r = Realization::catalog("kappa-left", 4, 6, &CatalogOptions::default()).unwrap();
        assert_eq!(r.phi(1, 1).to_string(), "1 - a0*p0 + a1*p1 + a2*p2 + a3*p3");
        assert!(r.phi(0, 1).is_zero());
    }

    #[test]
    fn su2_phi() {
        let r = Realization::catalog("su2", 3, 4, &CatalogOptions::default()).unwrap();
        // x^_0 = x_0 sqrt(1 - l^2 p^2) + l (x_1 p_2 - x_2 p_1)
        assert_eq!(r.phi(1, 0).to_string(), "l*p2");
        assert_eq!(r.phi(2, 0).to_string(), "-l*p1");
        assert_eq!(
            r.phi(0, 0).truncated(2, 8).to_string(),
            "1 - 1/2*l^2*p0^2 - 1/2*l^2*p1^2 - 1/2*l^2*p2^2"
        );
        assert!(Realization::catalog("su2", 4, 4, &CatalogOptions::default()).is_err());
    }

    #[test]
    fn unknown_model() {
        let err = Realization::catalog("yang", 4, 6, &CatalogOptions::default()).unwrap_err();
        assert!(matches!(err, Error::UnknownModel(_)));
    }

    #[test]
    fn catalog_is_deterministic() {
        for name in CATALOG {
            let n = default_dim(name);
            let a = Realization::catalog(name, n, 4, &CatalogOptions::default()).unwrap();
            let b = Realization::catalog(name, n, 4, &CatalogOptions::default()).unwrap();
            for al in 0..n {
                for mu in 0..n {
                    assert_eq!(a.phi(al, mu), b.phi(al, mu));
                }
            }
        }
    }

    #[test]
    fn invalid_zeroth_order() {
        let space = Space::standard(Metric::lorentzian(2));
        let kit = MomentumKit::new(&space, 3);
        let phi = vec![vec![kit.int(1), kit.zero()], vec![kit.zero(), kit.int(1)]];
        let err = Realization::new("bad", &space, 3, phi, vec![kit.zero(), kit.zero()]).unwrap_err();
        assert!(err.to_string().contains("phi_00"));
    }

    #[test]
    fn right_covariant_closes() {
        let space = Space::standard(Metric::lorentzian(3));
        let k = LinearRealization::right_covariant(&space, &a_polys(&space).unwrap());
        let (closed, c) = k.lie_closure_check();
        assert!(closed);
        // C_{mu nu alpha} = a_mu eta_{nu alpha} - a_nu eta_{mu alpha}
        assert_eq!(c[(1 * 3 + 2) * 3 + 2].to_string(), "a1");
        assert_eq!(c[(1 * 3 + 2) * 3 + 1].to_string(), "-a2");
        let (closed, _) = LinearRealization::kappa_snyder_form(&space, &a_polys(&space).unwrap()).lie_closure_check();
        assert!(!closed);
        assert!(LinearRealization::zero(&space).lie_closure_check().0);
    }

    #[test]
    fn catalog_reduces_to_the_metric() {
        for name in CATALOG {
            let n = default_dim(name);
            let r = Realization::catalog(name, n, 4, &CatalogOptions::default()).unwrap();
            let metric = r.space().metric().clone();
            for al in 0..n {
                for mu in 0..n {
                    let eta = if al == mu { metric.diag(mu) } else { 0 };
                    let expect = r.kit().int(eta);
                    assert_eq!(r.phi(al, mu).undeformed(), expect, "{name} phi_{al}{mu}");
                }
                assert!(r.chi(al).undeformed().is_zero(), "{name}");
            }
        }
    }
}
