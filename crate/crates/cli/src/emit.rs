use clap::ValueEnum;
use serde_json::{json, Value};

use ncphase_core::coalgebra::CoproductSeries;
use ncphase_core::realization::{default_dim, CATALOG};
use ncphase_core::report::Report;
use ncphase_core::star::CompositionLaw;
use ncphase_core::{GaussScalar, Series};

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
}

fn lines(items: impl IntoIterator<Item = String>) -> String {
    let mut out = String::new();
    for l in items {
        out.push_str(&l);
        out.push('\n');
    }
    out
}

/// Exact rationals go out as strings so nothing is rounded.
fn parts(c: &GaussScalar) -> (String, String) {
    (c.re.to_string(), c.im.to_string())
}

pub fn report_json(r: &Report) -> Value {
    let discrepancy = r.discrepancy.as_ref().map(|d| {
        let (re, im) = parts(&d.coeff);
        json!({
            "indices": d.indices,
            "monomial": d.monomial,
            "coeff_re": re,
            "coeff_im": im,
        })
    });
    let mut v = json!({
        "model": r.model,
        "check": r.check,
        "order": r.order,
        "verdict": r.verdict.as_str(),
        "discrepancy": discrepancy,
        "ms": r.ms,
    });
    if let Some(d) = &r.detail {
        v["detail"] = json!(d);
    }
    v
}

/// One record per line in JSON mode.
pub fn reports(rs: &[Report], fmt: Format) -> String {
    match fmt {
        Format::Text => lines(rs.iter().map(|r| r.to_string())),
        Format::Json => lines(rs.iter().map(|r| report_json(r).to_string())),
    }
}

pub fn catalog(fmt: Format) -> String {
    match fmt {
        Format::Text => lines(CATALOG.iter().map(|m| format!("{m} (dim {})", default_dim(m)))),
        Format::Json => lines(CATALOG.iter().map(|m| json!({"model": m, "dim": default_dim(m)}).to_string())),
    }
}

pub fn named_series(model: &str, order: u32, rows: &[(String, Series)], fmt: Format) -> String {
    match fmt {
        Format::Text => lines(rows.iter().map(|(k, s)| format!("{k} = {s}"))),
        Format::Json => {
            let map: serde_json::Map<String, Value> =
                rows.iter().map(|(k, s)| (k.clone(), json!(s.to_string()))).collect();
            lines([json!({"model": model, "order": order, "series": map}).to_string()])
        }
    }
}

pub fn composition(law: &CompositionLaw, fmt: Format) -> String {
    let mut rows: Vec<(String, Series)> = law
        .d
        .iter()
        .enumerate()
        .map(|(m, s)| (format!("D_{m}"), s.clone()))
        .collect();
    rows.push(("G".into(), law.g.clone()));
    named_series(&law.model, law.order, &rows, fmt)
}

pub fn coproduct(cop: &CoproductSeries, fmt: Format) -> String {
    let rows: Vec<(String, Series)> = cop
        .dp
        .iter()
        .enumerate()
        .map(|(m, s)| (format!("Delta p{m}"), s.clone()))
        .collect();
    named_series(&cop.model, cop.order, &rows, fmt)
}
