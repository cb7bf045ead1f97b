use std::time::Instant;

use rayon::prelude::*;

use ncphase_core::borel::{cocycle_check_borel, BorelTwist};
use ncphase_core::coalgebra::{
    coassociativity_check, coproduct, coproduct_conjugation_check, twist_consistency, twist_normal_ordered,
    twist_normal_ordered_on_coordinates, Truncation,
};
use ncphase_core::commutators::{closure_check, jacobi_check};
use ncphase_core::error::{Error, Result};
use ncphase_core::expr::{eval, Env};
use ncphase_core::qdeform::{qdeform_checks, QDeformation, Symmetry};
use ncphase_core::realization::{default_dim, CatalogOptions, Realization, CATALOG};
use ncphase_core::report::Report;
use ncphase_core::star::{
    associativity_check, composition_law, coordinate_associator_check, pde_check, position_banks, CompositionLaw,
    StarProduct,
};
use ncphase_core::{Rational, Series};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Check {
    Jacobi,
    Closure,
    Assoc,
    Coassoc,
    Twist,
    Conjugation,
    Cocycle,
    Qdeform,
    Pde,
}

impl Check {
    /// Checks on the operators of a realization; `check all` and `batch` run these.
    pub const OPERATOR: [Check; 6] = [
        Check::Jacobi,
        Check::Closure,
        Check::Assoc,
        Check::Coassoc,
        Check::Twist,
        Check::Conjugation,
    ];

    pub fn needs_model(self) -> bool {
        !matches!(self, Check::Cocycle | Check::Qdeform)
    }
}

pub struct Options {
    pub order: u32,
    pub u: Rational,
    pub twist: Option<String>,
    pub symmetric: bool,
    pub timing: bool,
}

/// The twist truncation keeps weights below the law's order, so the law is
/// built one order higher to report at `order`.
fn twist_law(r: &Realization, order: u32) -> Result<CompositionLaw> {
    composition_law(r, order + 1)
}

fn run_one(c: Check, r: Option<&Realization>, dim: Option<usize>, o: &Options) -> Result<Vec<Report>> {
    let model = || r.ok_or_else(|| Error::Config("this check needs --model or --config".into()));
    // The operator checks are capped in parameter degree; report the order asked for.
    let at_order = |mut rep: Report| {
        rep.order = o.order;
        rep
    };
    let pcap = 2 * o.order;
    Ok(match c {
        Check::Jacobi => vec![at_order(jacobi_check(model()?, pcap)?)],
        Check::Closure => vec![at_order(closure_check(model()?, pcap)?)],
        Check::Assoc => {
            let law = composition_law(model()?, o.order)?;
            let mut rep = associativity_check(&law)?;
            if !rep.verdict.is_pass() && o.order >= 2 {
                let coords = coordinate_associator_check(&law)?;
                if let Some(d) = &coords.discrepancy {
                    let [mu, nu, rho] = [d.indices[0], d.indices[1], d.indices[2]];
                    rep.fail(format!(
                        "(x{mu}*x{nu})*x{rho} - x{mu}*(x{nu}*x{rho}) has {} {}",
                        d.coeff, d.monomial
                    ));
                }
            }
            vec![rep]
        }
        Check::Coassoc => {
            let law = composition_law(model()?, o.order)?;
            vec![coassociativity_check(&coproduct(&law))?]
        }
        Check::Twist => {
            let r = model()?;
            let law = twist_law(r, o.order)?;
            let finv = twist_normal_ordered_on_coordinates(&law, &o.u, Truncation::weight(&law))?;
            vec![twist_consistency(r, &finv)?]
        }
        Check::Conjugation => {
            let law = twist_law(model()?, o.order)?;
            let finv = twist_normal_ordered(&law, &o.u, Truncation::weight(&law))?;
            vec![coproduct_conjugation_check(&finv.inverse()?, &coproduct(&law))?]
        }
        Check::Cocycle => {
            let twists = match &o.twist {
                Some(name) => vec![BorelTwist::from_name(name)?],
                None => vec![
                    BorelTwist::Identity,
                    BorelTwist::JordanianRight,
                    BorelTwist::JordanianLeft,
                ],
            };
            twists
                .into_iter()
                .map(|t| cocycle_check_borel(t, o.order))
                .collect::<Result<_>>()?
        }
        Check::Qdeform => {
            let mode = if o.symmetric {
                Symmetry::Symmetric
            } else {
                Symmetry::Antisymmetric
            };
            let q = QDeformation::new(dim.unwrap_or(3), mode, o.order)?;
            qdeform_checks(&q)?
        }
        Check::Pde => vec![pde_check(model()?, o.order)?],
    })
}

pub fn run(c: Check, r: Option<&Realization>, dim: Option<usize>, o: &Options) -> Result<Vec<Report>> {
    let t = Instant::now();
    let mut reports = run_one(c, r, dim, o)?;
    if o.timing {
        let ms = t.elapsed().as_millis() as u64;
        for rep in &mut reports {
            rep.ms = ms;
        }
    }
    Ok(reports)
}

/// Every catalog model at its default dimension against every operator
/// check, in parallel, reported in catalog order.
pub fn batch(order: u32, u: &Rational, timing: bool) -> Result<Vec<Report>> {
    let jobs: Vec<(&str, Check)> = CATALOG
        .iter()
        .flat_map(|&m| Check::OPERATOR.iter().map(move |&c| (m, c)))
        .collect();
    let opts = Options {
        order,
        u: u.clone(),
        twist: None,
        symmetric: false,
        timing,
    };
    let out: Vec<Result<Vec<Report>>> = jobs
        .par_iter()
        .map(|&(name, c)| {
            let r = Realization::catalog(name, default_dim(name), order + 1, &CatalogOptions::default())?;
            run(c, Some(&r), None, &opts)
        })
        .collect();
    let mut reports = Vec::new();
    for r in out {
        reports.extend(r?);
    }
    Ok(reports)
}

/// `f * g` for polynomials written in `x[0]..x[n-1]` and the parameters.
pub fn star(r: &Realization, order: u32, f: &str, g: &str) -> Result<Series> {
    let law = composition_law(r, order)?;
    let env = Env::new(r.space(), &position_banks(), order, 2 * order);
    let (f, g) = (eval(f, &env)?, eval(g, &env)?);
    StarProduct::new(&law, order)?.star(&f, &g)
}
