use std::process::{Command, Output};

fn ncphase(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ncphase"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn catalog_lists_every_model() {
    let o = ncphase(&["catalog"]);
    assert!(o.status.success());
    let out = stdout(&o);
    for m in ["undeformed", "snyder", "su2", "kappa-light", "kappa-snyder"] {
        assert!(out.contains(m), "{m} missing from\n{out}");
    }
}

#[test]
fn snyder_is_not_associative() {
    let o = ncphase(&["check", "assoc", "--model", "snyder", "--order", "3"]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.starts_with("snyder assoc order=3 fail"), "{out}");
    // the failing associator is spelled out in coordinates
    assert!(out.contains("(x0*x1)*x0 - x0*(x1*x0) has -1/2 l^2*x1"), "{out}");
}

#[test]
fn json_record_fields_in_order() {
    let o = ncphase(&["check", "closure", "--model", "kappa-right", "--dim", "2", "--order", "3", "--format", "json"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let v: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(v["model"], "kappa-right");
    assert_eq!(v["verdict"], "pass");
    assert!(v["discrepancy"].is_null());
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, ["model", "check", "order", "verdict", "discrepancy", "ms"]);
}

#[test]
fn failing_json_carries_exact_coefficient() {
    let o = ncphase(&["check", "cocycle", "--twist", "naive", "--order", "3", "--format", "json"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    let d = &v["discrepancy"];
    assert_eq!(d["coeff_re"], "0");
    assert_eq!(d["coeff_im"], "-1");
}

#[test]
fn twist_accepts_rational_u() {
    let o = ncphase(&["check", "twist", "--model", "su2", "--order", "4", "--u", "1/2"]);
    assert!(o.status.success(), "{}", stdout(&o));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(ncphase(&["check", "jacobi", "--model", "nope"]).status.code(), Some(2));
    assert_eq!(ncphase(&["check", "jacobi"]).status.code(), Some(2));
    assert_eq!(ncphase(&["check", "jacobi", "--model", "snyder", "--order", "40"]).status.code(), Some(2));
    assert_eq!(ncphase(&["check", "twist", "--model", "snyder", "--u", "half"]).status.code(), Some(2));
    assert_eq!(ncphase(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn config_file_and_syntax_errors() {
    let dir = std::env::temp_dir().join(format!("ncphase-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let good = dir.join("left.model");
    std::fs::write(&good, "format: 1\nname: left\ndim: 2\nphi: eta(mu,nu)*(1 + dot(a,p))\n").unwrap();
    let o = ncphase(&["coproduct", "--config", good.to_str().unwrap(), "--order", "2"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("Delta p1 = "), "{}", stdout(&o));

    let bad = dir.join("bad.model");
    std::fs::write(&bad, "format: 1\nname: bad\ndim: 2\nphi: dot(a,\n").unwrap();
    let o = ncphase(&["check", "jacobi", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("4:7"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn out_flag_writes_file() {
    let path = std::env::temp_dir().join(format!("ncphase-out-{}.txt", std::process::id()));
    let o = ncphase(&["dmu", "--model", "kappa-right", "--dim", "2", "--order", "2", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("D_0 = k0 + q0"), "{text}");
    std::fs::remove_file(&path).ok();
}

#[test]
fn star_of_coordinates() {
    let o = ncphase(&["star", "--model", "kappa-right", "--dim", "2", "--order", "2", "x[0]", "x[1]"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("f*g = "));
}

#[test]
fn batch_output_follows_catalog_order() {
    let o = ncphase(&["batch", "--order", "2"]);
    let out = stdout(&o);
    let models: Vec<&str> = out.lines().map(|l| l.split(' ').next().unwrap()).collect();
    assert_eq!(models.len(), 8 * 6, "{out}");
    let mut seen: Vec<&str> = models.clone();
    seen.dedup();
    assert_eq!(seen, ncphase_core::realization::CATALOG);
    // Snyder and kappa-Snyder are not associative, so the batch as a whole fails
    assert_eq!(o.status.code(), Some(1));
}
