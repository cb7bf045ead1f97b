//! Acceptance suite. Prints one line per criterion and exits nonzero when a
//! criterion fails that is not listed in `KNOWN_FAILURES`.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use ncphase_core::borel::{cocycle_check_borel, BorelTwist};
use ncphase_core::coalgebra::{
    combinatorial_sum, coproduct, exponent_conjugation_check, jordanian_left_exponent, jordanian_right, leg_banks,
    left_algebroid_exponent, light_like_coproduct, light_like_drinfeld_exponent, twist_consistency, twist_exp_form,
    twist_normal_ordered_on_coordinates, Truncation,
};
use ncphase_core::commutators::closure_check;
use ncphase_core::expr::{eval, Env};
use ncphase_core::qdeform::{qdeform_checks, QDeformation, Symmetry};
use ncphase_core::realization::{default_dim, CatalogOptions, LinearRealization, Realization, CATALOG};
use ncphase_core::star::{
    associativity_check, closed_form_linear, composition_law, kq_banks, pde_check, solve_j_h,
    StarProduct,
};
use ncphase_core::{GaussScalar, ParamPoly, Rational, Result, Series, Space};

/// Criteria that cannot hold as stated, with the reason.
const KNOWN_FAILURES: &[(u32, &str)] = &[
    (3, "the displayed D has the opposite sign of the l eps term for the realization it is derived from"),
    (11, "with the sign (-1)^n the sum is (-1)^n times the degree-n part of e^x p e^x, which is nonzero"),
];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn catalog(name: &str, n: usize, order: u32) -> Result<Realization> {
    Realization::catalog(name, n, order, &CatalogOptions::default())
}

/// `D_mu` of `law` against a closed form lowered over `[k, q]`.
fn matches_closed_form(d: &[Series], space: &std::sync::Arc<Space>, order: u32, src: &str) -> Result<Option<usize>> {
    let pcap = d[0].pcap();
    let env = Env::new(space, &kq_banks(), order, pcap);
    for (mu, dmu) in d.iter().enumerate() {
        let want = eval(src, &env.with_indices(mu, mu))?.truncated(order, pcap);
        if !(dmu - &want).is_zero() {
            return Ok(Some(mu));
        }
    }
    Ok(None)
}

fn snyder_associator() -> Result<Outcome> {
    let n = 4;
    let law = composition_law(&catalog("snyder", n, 3)?, 3)?;
    let star = StarProduct::new(&law, 3)?;
    let x0 = star.x(0);
    let l2 = x0.param_like(law.g.space().param("l")?).pow(2);
    let half = GaussScalar::ratio(1, 2);
    let eta = |a: usize, b: usize| GaussScalar::from_int(law.g.space().metric().entry(a, b));
    for mu in 0..n {
        for nu in 0..n {
            for rho in 0..n {
                let got = star.associator(mu, nu, rho)?;
                let want = &(&star.x(nu).scale(&eta(mu, rho)) - &star.x(mu).scale(&eta(nu, rho))) * &l2;
                if !(&got - &want.scale(&half)).is_zero() {
                    return Ok(outcome(false, format!("({mu},{nu},{rho}): {got}")));
                }
            }
        }
    }
    Ok(outcome(true, "64 triples, n=4"))
}

fn snyder_closed_form() -> Result<Outcome> {
    let r = catalog("snyder", 4, 6)?;
    let law = composition_law(&r, 6)?;
    let src = "(k[mu] - l^2/(1 + sqrt1p(l^2*dot(k,k)))*k[mu]*dot(k,q) + sqrt1p(l^2*dot(k,k))*q[mu]) / (1 - l^2*dot(k,q))";
    Ok(match matches_closed_form(&law.d, r.space(), 6, src)? {
        None => outcome(true, "n=4, order 6"),
        Some(mu) => outcome(false, format!("D_{mu} differs")),
    })
}

fn su2_closed_form() -> Result<Outcome> {
    let r = catalog("su2", 3, 6)?;
    let law = composition_law(&r, 6)?;
    let form = |sign: &str| {
        format!(
            "k[mu]*sqrt1p(-l^2*dot(q,q)) + sqrt1p(-l^2*dot(k,k))*q[mu] {sign} l*(epsilon(mu,1,2)*(k[1]*q[2] - k[2]*q[1]) \
             + epsilon(mu,2,0)*(k[2]*q[0] - k[0]*q[2]) + epsilon(mu,0,1)*(k[0]*q[1] - k[1]*q[0]))"
        )
    };
    if matches_closed_form(&law.d, r.space(), 6, &form("+"))?.is_none() {
        return Ok(outcome(true, "n=3 Euclidean, order 6"));
    }
    let flipped = matches_closed_form(&law.d, r.space(), 6, &form("-"))?.is_none();
    Ok(outcome(
        false,
        format!("engine D has -l eps_ijk k_j q_k; matches with that sign: {flipped}"),
    ))
}

fn right_covariant() -> Result<Outcome> {
    let n = 4;
    let r = catalog("kappa-right", n, 6)?;
    let law = composition_law(&r, 6)?;
    if let Some(mu) = matches_closed_form(&law.d, r.space(), 6, "k[mu] + q[mu]*(1 - dot(a,k))")? {
        return Ok(outcome(false, format!("D_{mu}")));
    }
    let cop = coproduct(&law);
    let env = Env::new(r.space(), &leg_banks(), 6, cop.dp[0].pcap());
    for (mu, dp) in cop.dp.iter().enumerate() {
        if !(dp - &eval("p1[mu] + (1 - dot(a,p1))*p2[mu]", &env.with_indices(mu, mu))?).is_zero() {
            return Ok(outcome(false, format!("Delta p{mu}")));
        }
    }
    let t = Truncation::first_slot(&law);
    if twist_exp_form(&r, &law, t)?.inverse()? != jordanian_right(r.space(), t)? {
        return Ok(outcome(false, "algebroid twist differs from the Jordanian twist"));
    }
    let cocycle = cocycle_check_borel(BorelTwist::JordanianRight, 6)?;
    if !cocycle.verdict.is_pass() {
        return Ok(outcome(false, cocycle.to_string()));
    }
    Ok(outcome(true, "D, coproduct, algebroid = Jordanian, cocycle"))
}

fn left_covariant() -> Result<Outcome> {
    let n = 4;
    let r = catalog("kappa-left", n, 7)?;
    let law6 = composition_law(&r, 6)?;
    if let Some(mu) = matches_closed_form(&law6.d, r.space(), 6, "k[mu]*(1 + dot(a,q)) + q[mu]")? {
        return Ok(outcome(false, format!("D_{mu}")));
    }
    let law = composition_law(&r, 7)?;
    let t = Truncation::weight(&law);
    let cop = coproduct(&law);
    let env = Env::new(r.space(), &leg_banks(), 7, cop.dp[0].pcap());
    for (mu, dp) in cop.dp.iter().enumerate() {
        if !(dp - &eval("p1[mu]*(1 + dot(a,p2)) + p2[mu]", &env.with_indices(mu, mu))?).is_zero() {
            return Ok(outcome(false, format!("Delta p{mu}")));
        }
    }
    // Both twists are single exponentials; distinct exponents give distinct twists.
    let algebroid = left_algebroid_exponent(&law, t)?;
    let jordanian = jordanian_left_exponent(r.space(), t)?;
    for (name, b) in [("algebroid", &algebroid), ("jordanian", &jordanian)] {
        let rep = exponent_conjugation_check(b, &cop)?;
        if !rep.verdict.is_pass() {
            return Ok(outcome(false, format!("{name}: {rep}")));
        }
    }
    Ok(outcome(
        algebroid != jordanian,
        "distinct twists, same coproduct at order 6",
    ))
}

fn light_like() -> Result<Outcome> {
    let r = catalog("kappa-light", 4, 7)?;
    let law6 = composition_law(&r, 6)?;
    let cop6 = coproduct(&law6);
    let want = light_like_coproduct(r.space(), 6)?;
    for (mu, dp) in cop6.dp.iter().enumerate() {
        if !(dp - &want[mu].truncated(6, dp.pcap())).is_zero() {
            return Ok(outcome(false, format!("Delta p{mu} differs from the formula")));
        }
    }
    let law = composition_law(&r, 7)?;
    let b = light_like_drinfeld_exponent(r.space(), Truncation::weight(&law))?;
    let rep = exponent_conjugation_check(&b, &coproduct(&law))?;
    Ok(outcome(rep.verdict.is_pass(), format!("formula and Drinfeld twist: {rep}")))
}

fn l_times(space: &std::sync::Arc<Space>, c: i64) -> Result<ParamPoly> {
    Ok(ParamPoly::symbol(space, space.param("l")?).scale(&GaussScalar::from_int(c)))
}

fn random_vector(space: &std::sync::Arc<Space>, rng: &mut ChaCha8Rng) -> Result<Vec<ParamPoly>> {
    loop {
        let c: Vec<i64> = (0..space.dim()).map(|_| rng.gen_range(-2..=2)).collect();
        if c.iter().any(|&v| v != 0) {
            return c.into_iter().map(|v| l_times(space, v)).collect();
        }
    }
}

fn random_generic(space: &std::sync::Arc<Space>, rng: &mut ChaCha8Rng) -> Result<LinearRealization> {
    let n = space.dim();
    let entries: Vec<ParamPoly> = (0..n * n * n)
        .map(|_| l_times(space, rng.gen_range(-1..=1)))
        .collect::<Result<_>>()?;
    Ok(LinearRealization::new(space, |b, m, a| entries[(b * n + m) * n + a].clone()))
}

fn closure_iff_associativity() -> Result<Outcome> {
    let order = 4;
    let mut checked = 0;
    for &name in CATALOG {
        let r = catalog(name, default_dim(name), order)?;
        let closes = closure_check(&r, 2 * order)?.verdict.is_pass();
        let assoc = associativity_check(&composition_law(&r, order)?)?.verdict.is_pass();
        if closes != assoc {
            return Ok(outcome(false, format!("{name}: closure {closes}, associativity {assoc}")));
        }
        checked += 1;
    }
    let space = Space::standard(ncphase_core::Metric::lorentzian(3));
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut closing, mut open) = (0, 0);
    let mut tries = 0;
    while closing < 10 || open < 10 {
        tries += 1;
        if tries > 500 {
            return Ok(outcome(false, "could not sample both classes"));
        }
        let a = random_vector(&space, &mut rng)?;
        let k = match rng.gen_range(0..4) {
            0 => LinearRealization::right_covariant(&space, &a),
            1 => LinearRealization::left_covariant(&space, &a),
            2 => LinearRealization::kappa_snyder_form(&space, &a),
            _ => random_generic(&space, &mut rng)?,
        };
        let (lie, _) = k.lie_closure_check();
        if (lie && closing >= 10) || (!lie && open >= 10) {
            continue;
        }
        let r = Realization::from_linear("random", &k, order)?;
        let assoc = associativity_check(&composition_law(&r, order)?)?.verdict.is_pass();
        if lie != assoc {
            return Ok(outcome(false, format!("random K #{tries}: closure {lie}, associativity {assoc}")));
        }
        if lie {
            closing += 1;
        } else {
            open += 1;
        }
        checked += 1;
    }
    Ok(outcome(true, format!("{checked} realizations (10 closing, 10 not, catalog)")))
}

fn linear_closed_form() -> Result<Outcome> {
    let space = Space::standard(ncphase_core::Metric::lorentzian(3));
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let ks: Vec<LinearRealization> = (0..10).map(|_| random_generic(&space, &mut rng)).collect::<Result<_>>()?;
    let bad = ks
        .par_iter()
        .enumerate()
        .map(|(i, k)| {
            let r = Realization::from_linear("random", k, 6)?;
            let flow = solve_j_h(&r, 6)?;
            let closed = closed_form_linear(k, 6)?;
            Ok((flow.j != closed.j || flow.h != closed.h).then_some(i))
        })
        .collect::<Result<Vec<Option<usize>>>>()?;
    Ok(match bad.into_iter().flatten().next() {
        None => outcome(true, "10 random K, n=3, order 6"),
        Some(i) => outcome(false, format!("random K #{i}")),
    })
}

fn twist_consistency_all() -> Result<Outcome> {
    let us = [Rational::zero(), Rational::new(1, 2), Rational::one()];
    let bad = CATALOG
        .par_iter()
        .map(|&name| {
            let r = catalog(name, default_dim(name), 7)?;
            let law = composition_law(&r, 7)?;
            for u in &us {
                let finv = twist_normal_ordered_on_coordinates(&law, u, Truncation::weight(&law))?;
                let rep = twist_consistency(&r, &finv)?;
                if !rep.verdict.is_pass() {
                    return Ok(Some(format!("u={u}: {rep}")));
                }
            }
            Ok(None)
        })
        .collect::<Result<Vec<Option<String>>>>()?;
    Ok(match bad.into_iter().flatten().next() {
        None => outcome(true, "8 models, u in {0, 1/2, 1}, order 6"),
        Some(d) => outcome(false, d),
    })
}

fn qdeform() -> Result<Outcome> {
    for mode in [Symmetry::Antisymmetric, Symmetry::Symmetric] {
        let q = QDeformation::new(3, mode, 6)?;
        for rep in qdeform_checks(&q)? {
            if !rep.verdict.is_pass() {
                return Ok(outcome(false, rep.to_string()));
            }
        }
    }
    Ok(outcome(true, "n=3, order 6, both modes"))
}

fn combinatorial_identity() -> Result<Outcome> {
    let mut literal_zero = true;
    let mut alternating_zero = true;
    for n in 2..=12 {
        literal_zero &= combinatorial_sum(n, true)?.is_zero();
        alternating_zero &= combinatorial_sum(n, false)?.is_zero();
    }
    Ok(outcome(
        literal_zero,
        format!("n=2..12; with (-1)^k instead the sum vanishes: {alternating_zero}"),
    ))
}

fn pde_residual() -> Result<Outcome> {
    let bad = CATALOG
        .par_iter()
        .map(|&name| {
            let rep = pde_check(&catalog(name, default_dim(name), 6)?, 6)?;
            Ok((!rep.verdict.is_pass()).then(|| rep.to_string()))
        })
        .collect::<Result<Vec<Option<String>>>>()?;
    Ok(match bad.into_iter().flatten().next() {
        None => outcome(true, "8 models, order 6"),
        Some(d) => outcome(false, d),
    })
}

type Criterion = (u32, &'static str, fn() -> Result<Outcome>);

const CRITERIA: &[Criterion] = &[
    (1, "snyder associator", snyder_associator),
    (2, "snyder closed-form D", snyder_closed_form),
    (3, "su(2) closed-form D", su2_closed_form),
    (4, "right covariant", right_covariant),
    (5, "left covariant", left_covariant),
    (6, "light-like coproduct", light_like),
    (7, "closure iff associativity", closure_iff_associativity),
    (8, "linear closed form", linear_closed_form),
    (9, "twist consistency", twist_consistency_all),
    (10, "q-deformation", qdeform),
    (11, "combinatorial identity", combinatorial_identity),
    (12, "pde residual", pde_residual),
];

/// Criterion numbers on the command line select a subset.
fn main() {
    let start = Instant::now();
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut unexpected = 0;
    let mut passed = 0;
    let mut ran = 0;
    for (id, name, f) in CRITERIA.iter().filter(|(id, _, _)| only.is_empty() || only.contains(id)) {
        let t = Instant::now();
        let o = f().unwrap_or_else(|e| outcome(false, format!("error: {e}")));
        let known = KNOWN_FAILURES.iter().find(|(k, _)| k == id);
        let verdict = match (o.pass, known) {
            (true, _) => "PASS",
            (false, Some(_)) => "FAIL (known)",
            (false, None) => {
                unexpected += 1;
                "FAIL"
            }
        };
        ran += 1;
        passed += o.pass as usize;
        println!("criterion {id:>2} {verdict:<12} {name}: {} [{} ms]", o.detail, t.elapsed().as_millis());
        if let (false, Some((_, why))) = (o.pass, known) {
            println!("               {why}");
        }
    }
    println!(
        "{passed}/{ran} criteria pass, {unexpected} unexpected failure(s), {:.1} s",
        start.elapsed().as_secs_f64()
    );
    if unexpected > 0 {
        std::process::exit(1);
    }
}
