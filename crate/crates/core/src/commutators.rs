//! `[x^_mu, x^_nu] = i x^_alpha C_{mu nu alpha}(p) + i d_{mu nu}(p)` and the Jacobi check.

use rayon::prelude::*;

use crate::error::Result;
use crate::phase::PhaseOperator;
use crate::realization::{is_momentum_free, Realization};
use crate::report::Report;
use crate::scalar::GaussScalar;
use crate::series::Series;

/// Generalized structure functions of a realization.
#[derive(Clone, Debug)]
pub struct DeformedCommutators {
    n: usize,
    /// `c[(mu * n + nu) * n + alpha]`
    c: Vec<Series>,
    d: Vec<Series>,
}

impl DeformedCommutators {
    pub fn c(&self, mu: usize, nu: usize, alpha: usize) -> &Series {
        &self.c[(mu * self.n + nu) * self.n + alpha]
    }

    pub fn d(&self, mu: usize, nu: usize) -> &Series {
        &self.d[mu * self.n + nu]
    }

    /// `C` independent of the momenta and `d` constant.
    pub fn is_lie(&self) -> bool {
        self.c.iter().all(is_momentum_free) && self.d.iter().all(is_momentum_free)
    }
}

/// Solves `[x^_mu, x^_nu]` for `C` and `d`, truncated at parameter degree `pcap`.
///
/// The `x`-linear part `sum_b x_b c_b(p)` satisfies
/// `eta_bb c_b = i sum_a eta_aa phi_ba C_a`; the matrix is the identity plus
/// terms of positive parameter degree and is inverted by a Neumann series.
pub fn deformed_commutators(r: &Realization, pcap: u32) -> Result<DeformedCommutators> {
    let n = r.dim();
    let xcap = 2 * pcap.max(1);
    let xs = r.hat_xs(pcap, xcap)?;
    let metric = r.space().metric().clone();
    let eta = |a: usize| GaussScalar::from_int(metric.diag(a));
    // E = Psi - 1 with Psi_ba = eta_aa phi_ba
    let e: Vec<Vec<Series>> = (0..n)
        .map(|b| {
            (0..n)
                .map(|a| {
                    let mut s = r.phi(b, a).truncated(u32::MAX, pcap).scale(&eta(a));
                    if a == b {
                        s = &s - &s.one_like();
                    }
                    s
                })
                .collect()
        })
        .collect();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|m| (0..n).map(move |v| (m, v))).collect();
    let solved: Vec<Result<(Vec<Series>, Series)>> = pairs
        .par_iter()
        .map(|&(mu, nu)| {
            let comm = xs[mu].commutator(&xs[nu])?;
            let (lin, rest) = comm
                .split_linear()
                .expect("commutators of realizations are at most linear in x");
            let lin: Vec<Series> = lin
                .iter()
                .enumerate()
                .map(|(b, s)| s.truncated(u32::MAX, pcap).scale(&eta(b)))
                .collect();
            // y = Psi^{-1} (eta c) by y <- eta c - E y
            let mut y = lin.clone();
            for _ in 0..pcap + 2 {
                let next: Vec<Series> = (0..n)
                    .map(|b| (0..n).fold(lin[b].clone(), |acc, a| &acc - &(&e[b][a] * &y[a])))
                    .collect();
                if next == y {
                    break;
                }
                y = next;
            }
            let minus_i = -GaussScalar::i();
            let c: Vec<Series> = y.iter().map(|s| s.scale(&minus_i)).collect();
            let mut d = rest.truncated(u32::MAX, pcap).scale(&minus_i);
            for (a, ca) in c.iter().enumerate() {
                let chi = r.chi(a).truncated(u32::MAX, pcap);
                d = &d - &(&chi * ca).scale(&eta(a));
            }
            Ok((c, d))
        })
        .collect();
    let mut out = DeformedCommutators {
        n,
        c: Vec::with_capacity(n * n * n),
        d: Vec::with_capacity(n * n),
    };
    for s in solved {
        let (c, d) = s?;
        out.c.extend(c);
        out.d.push(d);
    }
    Ok(out)
}

/// `sum_cyclic [x^_mu, [x^_nu, x^_rho]] = 0` for all index triples.
pub fn jacobi_check(r: &Realization, pcap: u32) -> Result<Report> {
    let n = r.dim();
    let xcap = 3 * pcap.max(1) + 3;
    let xs = r.hat_xs(pcap, xcap)?;
    let mut comm = vec![Vec::new(); n];
    for (i, row) in comm.iter_mut().enumerate() {
        for j in 0..n {
            row.push(xs[i].commutator(&xs[j])?);
        }
    }
    let triples: Vec<(usize, usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).flat_map(move |b| (b + 1..n).map(move |c| (a, b, c))))
        .collect();
    let sums: Vec<Result<PhaseOperator>> = triples
        .par_iter()
        .map(|&(a, b, c)| {
            xs[a]
                .commutator(&comm[b][c])?
                .add(&xs[b].commutator(&comm[c][a])?)?
                .add(&xs[c].commutator(&comm[a][b])?)
        })
        .collect();
    let mut report = Report::new(r.name(), "jacobi", pcap);
    for (t, s) in triples.iter().zip(sums) {
        report.compare(&[t.0, t.1, t.2], s?.series());
    }
    Ok(report)
}

/// Passes when `C` is momentum independent and `d` constant, i.e. the
/// coordinates close a Lie algebra.
pub fn closure_check(r: &Realization, pcap: u32) -> Result<Report> {
    let dc = deformed_commutators(r, pcap)?;
    let n = r.dim();
    let mut report = Report::new(r.name(), "closure", pcap);
    'outer: for mu in 0..n {
        for nu in 0..n {
            for al in 0..n {
                let c = dc.c(mu, nu, al);
                if !is_momentum_free(c) {
                    let dependent = c.filter(|k| !k.mono.is_zero());
                    report.compare(&[mu, nu, al], &dependent);
                    break 'outer;
                }
            }
            let d = dc.d(mu, nu);
            if !is_momentum_free(d) {
                report.compare(&[mu, nu], &d.filter(|k| !k.mono.is_zero()));
                break 'outer;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::realization::CatalogOptions;

    fn model(name: &str, n: usize, order: u32) -> Realization {
        Realization::catalog(name, n, order, &CatalogOptions::default()).unwrap()
    }

    #[test]
    fn snyder_structure_functions() {
        let r = model("snyder", 3, 4);
        let dc = deformed_commutators(&r, 4).unwrap();
        // C_{mu nu alpha} = l^2 (eta_{mu alpha} p_nu - eta_{nu alpha} p_mu)
        assert_eq!(dc.c(0, 1, 0).to_string(), "-l^2*p1");
        assert_eq!(dc.c(0, 1, 1).to_string(), "-l^2*p0");
        assert!(dc.c(0, 1, 2).is_zero());
        assert!(dc.d(0, 1).is_zero());
        assert!(!dc.is_lie());
    }

    #[test]
    fn right_covariant_constants() {
        let r = model("kappa-right", 3, 4);
        let dc = deformed_commutators(&r, 4).unwrap();
        // a_mu eta_{nu alpha} - a_nu eta_{mu alpha}
        assert_eq!(dc.c(0, 1, 1).to_string(), "a0");
        assert_eq!(dc.c(0, 1, 0).to_string(), "a1");
        assert!(dc.is_lie());
    }

    #[test]
    fn su2_constants() {
        let r = model("su2", 3, 4);
        let dc = deformed_commutators(&r, 4).unwrap();
        // [x^_i, x^_j] = 2 i l eps_ijk x^_k
        assert_eq!(dc.c(0, 1, 2).to_string(), "2*l");
        assert_eq!(dc.c(1, 0, 2).to_string(), "-2*l");
        assert!(dc.is_lie());
    }

    #[test]
    fn undeformed_is_trivial() {
        let r = model("undeformed", 4, 3);
        let dc = deformed_commutators(&r, 3).unwrap();
        assert!(dc.c.iter().all(|s| s.is_zero()));
        assert!(dc.d.iter().all(|s| s.is_zero()));
    }

    #[test]
    fn jacobi_holds() {
        for name in ["snyder", "kappa-light"] {
            assert!(jacobi_check(&model(name, 4, 4), 4).unwrap().verdict.is_pass());
        }
        assert!(jacobi_check(&model("su2", 3, 4), 4).unwrap().verdict.is_pass());
    }
}
