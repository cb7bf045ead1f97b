//! Plane-wave data `J`, `h`, the composition law `(D, G)` and star products.
//!
//! `e^{i k.x^} |> e^{i q.x} = e^{i J(k,q).x + i h(k,q)}`, where `J` and `h`
//! solve the flow `dJ_mu/dt = k_b phi_{mu b}(J)`, `dh/dt = k_b chi_b(J)`.
//! Each power of `t` carries one power of `k`, so the flow is integrated
//! degree by degree in `k`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::realization::{LinearRealization, Realization};
use crate::report::Report;
use crate::scalar::{factorial, GaussScalar, Rational};
use crate::series::{revert, BankMap, Key, Series};
use crate::space::{banks, Banks, Exps};

/// Largest truncation order accepted by the solvers.
pub const MAX_ORDER: u32 = 12;

/// Layout `[k, q]` of two-momentum series.
pub fn kq_banks() -> Banks {
    Banks::new(&[banks::K, banks::Q])
}

/// Layout `[x]` of position polynomials.
pub fn position_banks() -> Banks {
    Banks::new(&[banks::X])
}

fn check_order(order: u32) -> Result<()> {
    if order > MAX_ORDER {
        Err(Error::OrderOverflow {
            order,
            cap: MAX_ORDER,
        })
    } else {
        Ok(())
    }
}

/// `J_mu(k, q)` and `h(k, q)` over the layout `[k, q]`.
#[derive(Clone, Debug)]
pub struct JPair {
    pub j: Vec<Series>,
    pub h: Series,
}

struct Flow<'a> {
    r: &'a Realization,
    k: Vec<Series>,
    q: Vec<Series>,
    eta: Vec<GaussScalar>,
}

impl<'a> Flow<'a> {
    fn new(r: &'a Realization, order: u32) -> Flow<'a> {
        let n = r.dim();
        let kq = kq_banks();
        let pcap = order.saturating_mul(2);
        let var = |b, mu| Series::var(r.space(), &kq, order, pcap, b, mu);
        Flow {
            r,
            k: (0..n).map(|mu| var(0, mu)).collect(),
            q: (0..n).map(|mu| var(1, mu)).collect(),
            eta: (0..n)
                .map(|mu| GaussScalar::from_int(r.space().metric().diag(mu)))
                .collect(),
        }
    }

    /// `k_b phi_{mu b}(J)` for every `mu`, and `k_b chi_b(J)`.
    fn field(&self, j: &[Series]) -> Result<(Vec<Series>, Series)> {
        let n = self.r.dim();
        let kin: Vec<Series> = (0..n).map(|b| self.k[b].scale(&self.eta[b])).collect();
        let v = (0..n)
            .into_par_iter()
            .map(|mu| {
                let mut acc = j[0].zero_like();
                for (b, kb) in kin.iter().enumerate() {
                    let phi = self.r.phi(mu, b);
                    if !phi.is_zero() {
                        acc = &acc + &(kb * &phi.compose(j)?);
                    }
                }
                Ok(acc)
            })
            .collect::<Result<Vec<Series>>>()?;
        let mut w = j[0].zero_like();
        for (b, kb) in kin.iter().enumerate() {
            let chi = self.r.chi(b);
            if !chi.is_zero() {
                w = &w + &(kb * &chi.compose(j)?);
            }
        }
        Ok((v, w))
    }
}

/// Divides each term by its degree in `k` (terms free of `k` are dropped).
fn integrate_k(s: &Series) -> Series {
    let mask = s.banks().bank_mask(0, s.dim());
    s.from_terms_like(s.terms().iter().filter_map(|(key, c)| {
        let d = key.mono.masked_degree(&mask);
        (d > 0).then(|| (*key, c.scale(&Rational::new(1, d as i64))))
    }))
}

/// Multiplies each term by its degree in `k`, i.e. `k . d/dk`.
fn euler_k(s: &Series) -> Series {
    let mask = s.banks().bank_mask(0, s.dim());
    s.from_terms_like(s.terms().iter().filter_map(|(key, c)| {
        let d = key.mono.masked_degree(&mask);
        (d > 0).then(|| (*key, c.scale(&Rational::from_int(d as i64))))
    }))
}

/// Solves the flow for `J` and `h` by integrating one degree in `k` per pass.
pub fn solve_j_h(r: &Realization, order: u32) -> Result<JPair> {
    check_order(order)?;
    let flow = Flow::new(r, order);
    let mut j = flow.q.clone();
    for _ in 0..order {
        let (v, _) = flow.field(&j)?;
        j = v.iter().zip(&flow.q).map(|(v, q)| q + &integrate_k(v)).collect();
    }
    let (_, w) = flow.field(&j)?;
    Ok(JPair { h: integrate_k(&w), j })
}

/// `J` of a linear realization from the matrix exponential:
/// `J = q e^M + k (e^M - 1)/M` with `M_{g mu} = eta_gg script K_{g mu}(k)`.
pub fn closed_form_linear(lin: &LinearRealization, order: u32) -> Result<JPair> {
    check_order(order)?;
    let space = lin.space();
    let n = space.dim();
    let kq = kq_banks();
    let pcap = order.saturating_mul(2);
    let var = |b, mu| Series::var(space, &kq, order, pcap, b, mu);
    let k: Vec<Series> = (0..n).map(|mu| var(0, mu)).collect();
    let q: Vec<Series> = (0..n).map(|mu| var(1, mu)).collect();
    let zero = k[0].zero_like();
    let sk = lin.script_k(&k);
    let m: Vec<Vec<Series>> = sk
        .iter()
        .enumerate()
        .map(|(g, row)| {
            let e = GaussScalar::from_int(space.metric().diag(g));
            row.iter().map(|s| s.scale(&e)).collect()
        })
        .collect();
    let matmul = |a: &[Vec<Series>], b: &[Vec<Series>]| -> Vec<Vec<Series>> {
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).fold(zero.clone(), |acc, l| &acc + &(&a[i][l] * &b[l][j])))
                    .collect()
            })
            .collect()
    };
    let mut power: Vec<Vec<Series>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { zero.one_like() } else { zero.clone() })
                .collect()
        })
        .collect();
    let mut exp_m = vec![vec![zero.clone(); n]; n];
    let mut phi1 = vec![vec![zero.clone(); n]; n];
    let mut p = 0u32;
    while power.iter().flatten().any(|s| !s.is_zero()) {
        let c0 = factorial(p).recip().unwrap();
        let c1 = factorial(p + 1).recip().unwrap();
        for i in 0..n {
            for j in 0..n {
                exp_m[i][j] = &exp_m[i][j] + &power[i][j].scale_rational(&c0);
                phi1[i][j] = &phi1[i][j] + &power[i][j].scale_rational(&c1);
            }
        }
        power = matmul(&power, &m);
        p += 1;
    }
    let j = (0..n)
        .map(|mu| {
            (0..n).fold(zero.clone(), |acc, g| {
                &(&acc + &(&q[g] * &exp_m[g][mu])) + &(&k[g] * &phi1[g][mu])
            })
        })
        .collect();
    Ok(JPair { j, h: zero })
}

/// Residual of the flow equations evaluated on `pair`: one series per `J_mu`
/// followed by the one for `h`. All vanish for an exact solution.
pub fn pde_residual(r: &Realization, pair: &JPair) -> Result<Vec<Series>> {
    let order = pair.h.order();
    let flow = Flow::new(r, order);
    let (v, w) = flow.field(&pair.j)?;
    let mut out: Vec<Series> = pair.j.iter().zip(&v).map(|(j, v)| &euler_k(j) - v).collect();
    out.push(&euler_k(&pair.h) - &w);
    Ok(out)
}

/// Solves the flow and checks the residual together with `J(0,q) = q`, `h(0,q) = 0`.
pub fn pde_check(r: &Realization, order: u32) -> Result<Report> {
    let pair = solve_j_h(r, order)?;
    let mut report = Report::new(r.name(), "pde", order);
    for (i, res) in pde_residual(r, &pair)?.iter().enumerate() {
        report.compare(&[i], res);
    }
    for (mu, j) in pair.j.iter().enumerate() {
        let q = j.var_like(1, mu);
        report.compare(&[mu], &(&j.set_bank_zero(0) - &q));
    }
    report.compare(&[r.dim()], &pair.h.set_bank_zero(0));
    Ok(report)
}

/// Composition law of plane waves together with the maps `K` and `K^{-1}`.
#[derive(Clone, Debug)]
pub struct CompositionLaw {
    pub model: String,
    pub order: u32,
    /// `D_mu(k, q)` over `[k, q]`.
    pub d: Vec<Series>,
    /// `G(k, q)` over `[k, q]`.
    pub g: Series,
    /// `K_mu(k) = J_mu(k, 0)` over `[k]`.
    pub k: Vec<Series>,
    /// `K^{-1}_mu(k)` over `[k]`.
    pub kinv: Vec<Series>,
}

impl CompositionLaw {
    pub fn from_pair(model: &str, pair: &JPair) -> Result<CompositionLaw> {
        let kq = kq_banks();
        let kb = Banks::new(&[banks::K]);
        let order = pair.h.order();
        let pcap = pair.h.pcap();
        let k = pair
            .j
            .iter()
            .map(|j| j.compose_banks(&kb, &[BankMap::To(banks::K), BankMap::Zero], order, pcap))
            .collect::<Result<Vec<Series>>>()?;
        let kinv = revert(&k)?;
        let sub: Vec<Series> = kinv.iter().map(|s| s.embed(&kq, &[banks::K])).collect();
        let at = |s: &Series, q: BankMap| s.compose_banks(&kq, &[BankMap::With(&sub), q], order, pcap);
        let d = pair
            .j
            .iter()
            .map(|j| at(j, BankMap::To(banks::Q)))
            .collect::<Result<Vec<Series>>>()?;
        let g = &at(&pair.h, BankMap::To(banks::Q))? - &at(&pair.h, BankMap::Zero)?;
        Ok(CompositionLaw {
            model: model.to_string(),
            order,
            d,
            g,
            k,
            kinv,
        })
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    /// Nonzero differences among `D(k,0) = k`, `D(0,q) = q`, `G(k,0) = G(0,q) = 0`
    /// and `D = k + q` at zeroth order in the parameters.
    pub fn invariant_defects(&self) -> Vec<Series> {
        let mut out = Vec::new();
        for (mu, d) in self.d.iter().enumerate() {
            let k = d.var_like(0, mu);
            let q = d.var_like(1, mu);
            out.push(&d.set_bank_zero(1) - &k);
            out.push(&d.set_bank_zero(0) - &q);
            out.push(&d.undeformed() - &(&k + &q));
        }
        out.push(self.g.set_bank_zero(0));
        out.push(self.g.set_bank_zero(1));
        out.retain(|s| !s.is_zero());
        out
    }
}

pub fn composition_law(r: &Realization, order: u32) -> Result<CompositionLaw> {
    CompositionLaw::from_pair(r.name(), &solve_j_h(r, order)?)
}

/// Both sides of the associativity conditions over `[k1, k2, k3]`: the
/// `D` components followed by the two sides of the `G` pentagon.
pub fn associator_sides(law: &CompositionLaw) -> Result<Vec<(Series, Series)>> {
    let b3 = Banks::new(&[banks::K1, banks::K2, banks::K3]);
    let (order, pcap) = (law.order, law.g.pcap());
    let d12: Vec<Series> = law.d.iter().map(|d| d.embed(&b3, &[banks::K1, banks::K2])).collect();
    let d23: Vec<Series> = law.d.iter().map(|d| d.embed(&b3, &[banks::K2, banks::K3])).collect();
    let left = |s: &Series| s.compose_banks(&b3, &[BankMap::With(&d12), BankMap::To(banks::K3)], order, pcap);
    let right = |s: &Series| s.compose_banks(&b3, &[BankMap::To(banks::K1), BankMap::With(&d23)], order, pcap);
    let mut sides = law
        .d
        .par_iter()
        .map(|d| Ok((left(d)?, right(d)?)))
        .collect::<Result<Vec<_>>>()?;
    let g = &law.g;
    let gl = &g.embed(&b3, &[banks::K1, banks::K2]) + &left(g)?;
    let gr = &g.embed(&b3, &[banks::K2, banks::K3]) + &right(g)?;
    sides.push((gl, gr));
    Ok(sides)
}

/// `D(D(k1,k2),k3) = D(k1,D(k2,k3))` and the `G` pentagon; the discrepancy
/// index is the component of `D`, or `n` for `G`.
pub fn associativity_check(law: &CompositionLaw) -> Result<Report> {
    let mut report = Report::new(&law.model, "assoc", law.order);
    for (i, (l, r)) in associator_sides(law)?.iter().enumerate() {
        report.compare(&[i], &(l - r));
    }
    Ok(report)
}

/// Star products of position polynomials by coefficient extraction from
/// `e^{i (D(k,q).x + G(k,q))}`.
#[derive(Clone, Debug)]
pub struct StarProduct {
    n: usize,
    degree: u32,
    eta: Vec<i64>,
    /// The exponential over `[k, q, x]`.
    plane: Series,
}

impl StarProduct {
    /// Supports products whose total degree is at most `degree`.
    pub fn new(law: &CompositionLaw, degree: u32) -> Result<StarProduct> {
        if degree > law.order {
            return Err(Error::OrderOverflow {
                order: degree,
                cap: law.order,
            });
        }
        let n = law.dim();
        let layout = Banks::new(&[banks::K, banks::Q, banks::X]);
        layout.check_fits(n)?;
        let pcap = law.g.pcap();
        let space = law.g.space();
        let eta: Vec<i64> = (0..n).map(|mu| space.metric().diag(mu)).collect();
        let mut arg = law.g.truncated(degree, pcap).embed(&layout, &[banks::K, banks::Q]);
        for (mu, d) in law.d.iter().enumerate() {
            let d = d.truncated(degree, pcap).embed(&layout, &[banks::K, banks::Q]);
            let x = Series::var(space, &layout, degree, pcap, 2, mu);
            arg = &arg + &(&d * &x).scale(&GaussScalar::from_int(eta[mu]));
        }
        let plane = arg.mul_i().expand_fn(crate::series::AnalyticFn::Exp)?;
        Ok(StarProduct {
            n,
            degree,
            eta,
            plane,
        })
    }

    /// `x^a * x^b` for exponent vectors over the `n` coordinates.
    pub fn monomials(&self, a: &[u8], b: &[u8]) -> Result<Series> {
        let n = self.n;
        let total: u32 = a.iter().chain(b).map(|&e| e as u32).sum();
        if total > self.degree {
            return Err(Error::OrderOverflow {
                order: total,
                cap: self.degree,
            });
        }
        // x^A = (-i)^{|A|} eta^A A! [k^A] e^{i k.x}
        let mut c = GaussScalar::i_pow(-(total as i64));
        for (mu, &e) in a.iter().chain(b).enumerate() {
            let s = self.eta[mu % n].pow(e as u32);
            c = c.scale(&(&factorial(e as u32) * &Rational::from_int(s)));
        }
        let out_banks = position_banks();
        let space = self.plane.space();
        let terms = self.plane.terms().iter().filter_map(|(key, v)| {
            let matches = (0..n).all(|mu| key.mono.get(mu) == a[mu] && key.mono.get(n + mu) == b[mu]);
            matches.then(|| {
                let mut x = Exps::ZERO;
                for mu in 0..n {
                    x.set(mu, key.mono.get(2 * n + mu));
                }
                (Key::new(x, key.par), v * &c)
            })
        });
        Ok(Series::from_terms(
            space,
            &out_banks,
            crate::series::UNBOUNDED,
            self.plane.pcap(),
            terms,
        ))
    }

    /// Bilinear extension to polynomials over `[x]`.
    pub fn star(&self, f: &Series, g: &Series) -> Result<Series> {
        let n = self.n;
        let mut out = Series::zero(
            self.plane.space(),
            &position_banks(),
            crate::series::UNBOUNDED,
            self.plane.pcap(),
        );
        let exps = |k: &Key| -> Vec<u8> { (0..n).map(|mu| k.mono.get(mu)).collect() };
        for (kf, cf) in f.terms() {
            for (kg, cg) in g.terms() {
                let m = self.monomials(&exps(kf), &exps(kg))?;
                let par = Series::from_terms(
                    m.space(),
                    m.banks(),
                    m.order(),
                    m.pcap(),
                    [(Key::new(Exps::ZERO, kf.par.add(&kg.par)), cf * cg)],
                );
                out = &out + &(&m * &par);
            }
        }
        Ok(out)
    }

    /// The position coordinate `x_mu` as a polynomial.
    pub fn x(&self, mu: usize) -> Series {
        Series::var(
            self.plane.space(),
            &position_banks(),
            crate::series::UNBOUNDED,
            self.plane.pcap(),
            0,
            mu,
        )
    }

    /// `(x_mu * x_nu) * x_rho - x_mu * (x_nu * x_rho)`.
    pub fn associator(&self, mu: usize, nu: usize, rho: usize) -> Result<Series> {
        let (a, b, c) = (self.x(mu), self.x(nu), self.x(rho));
        let left = self.star(&self.star(&a, &b)?, &c)?;
        let right = self.star(&a, &self.star(&b, &c)?)?;
        Ok(&left - &right)
    }
}

/// Coordinate associators for every index triple; the first nonzero one is
/// reported at `(mu, nu, rho)`.
pub fn coordinate_associator_check(law: &CompositionLaw) -> Result<Report> {
    let star = StarProduct::new(law, 3)?;
    let n = law.dim();
    let triples: Vec<[usize; 3]> = (0..n)
        .flat_map(|a| (0..n).flat_map(move |b| (0..n).map(move |c| [a, b, c])))
        .collect();
    let diffs = triples
        .par_iter()
        .map(|t| star.associator(t[0], t[1], t[2]))
        .collect::<Result<Vec<Series>>>()?;
    let mut report = Report::new(&law.model, "assoc-coordinates", law.order);
    for (t, d) in triples.iter().zip(&diffs) {
        report.compare(t, d);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::realization::CatalogOptions;

    fn model(name: &str, n: usize) -> Realization {
        Realization::catalog(name, n, 6, &CatalogOptions::default()).unwrap()
    }

    #[test]
    fn undeformed_flow() {
        let pair = solve_j_h(&model("undeformed", 3), 6).unwrap();
        assert_eq!(pair.j[1].to_string(), "k1 + q1");
        assert!(pair.h.is_zero());
    }

    #[test]
    fn right_covariant_d_is_finite() {
        let law = composition_law(&model("kappa-right", 3), 6).unwrap();
        // D_mu = k_mu + q_mu (1 - a.k)
        assert_eq!(law.d[1].to_string(), "k1 + q1 + a0*k0*q1 - a1*k1*q1 - a2*k2*q1");
        assert!(law.g.is_zero());
        assert!(law.invariant_defects().is_empty());
    }

    #[test]
    fn residual_vanishes() {
        for name in ["snyder", "su2", "kappa-left"] {
            let r = model(name, 3);
            assert!(pde_check(&r, 5).unwrap().verdict.is_pass(), "{name}");
        }
    }

    #[test]
    fn residual_detects_perturbation() {
        let r = model("snyder", 3);
        let mut pair = solve_j_h(&r, 5).unwrap();
        let l = pair.j[0].param_like(0);
        pair.j[0] = &pair.j[0] + &(&l * &(&pair.j[0].var_like(0, 1) * &pair.j[0].var_like(1, 2)));
        assert!(pde_residual(&r, &pair).unwrap().iter().any(|s| !s.is_zero()));
    }

    #[test]
    fn linear_closed_form_matches_flow() {
        let r = model("kappa-light", 3);
        let flow = solve_j_h(&r, 5).unwrap();
        let closed = closed_form_linear(r.linear().unwrap(), 5).unwrap();
        assert_eq!(flow.j, closed.j);
    }

    #[test]
    fn snyder_low_products() {
        let law = composition_law(&model("snyder", 3), 3).unwrap();
        let star = StarProduct::new(&law, 3).unwrap();
        let xy = star.star(&star.x(0), &star.x(1)).unwrap();
        assert_eq!(xy.to_string(), "x0*x1");
        assert_eq!(star.associator(0, 1, 0).unwrap().to_string(), "-1/2*l^2*x1");
    }

    #[test]
    fn undeformed_star_is_pointwise() {
        let law = composition_law(&model("undeformed", 3), 4).unwrap();
        let star = StarProduct::new(&law, 4).unwrap();
        let m = star.monomials(&[1, 1, 0], &[0, 1, 1]).unwrap();
        assert_eq!(m.to_string(), "x0*x1^2*x2");
    }

    #[test]
    fn associativity_verdicts() {
        let right = composition_law(&model("kappa-right", 3), 5).unwrap();
        assert!(associativity_check(&right).unwrap().verdict.is_pass());
        let snyder = composition_law(&model("snyder", 3), 5).unwrap();
        assert!(!associativity_check(&snyder).unwrap().verdict.is_pass());
    }

    #[test]
    fn boundary_values_and_inverse_on_catalog() {
        for name in crate::realization::CATALOG {
            let r = model(name, crate::realization::default_dim(name));
            let law = composition_law(&r, 4).unwrap();
            assert!(law.invariant_defects().is_empty(), "{name}");
            let id: Vec<Series> = (0..r.dim()).map(|mu| law.k[0].var_like(0, mu)).collect();
            let round: Vec<Series> = law.k.iter().map(|k| k.compose(&law.kinv).unwrap()).collect();
            assert_eq!(round, id, "{name}");
        }
    }
}
