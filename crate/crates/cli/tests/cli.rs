//! End-to-end checks of the command-line surface: spec'd subcommands,
//! report determinism, expression round-trips and exit codes.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hyperq"))
}

fn curves_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../curves")
}

#[test]
fn times_reports_painleve_values() {
    let out = bin()
        .args(["times", "--curve"])
        .arg(curves_dir().join("painleve1.curve"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schema"], "hyperq.report/1");
    let items = v["items"].as_array().unwrap();
    let get = |name: &str| -> String {
        items
            .iter()
            .find(|i| i["name"] == name)
            .unwrap_or_else(|| panic!("missing {name}"))["value"]
            .as_str()
            .unwrap()
            .to_string()
    };
    assert_eq!(get("pole0.t1"), "3*u^2");
    assert_eq!(get("pole0.t5"), "-2");
    assert_eq!(get("pole0.B1"), "-2*u^3");
    assert_eq!(get("pole0.B5"), "-3/5*u^5");
}

#[test]
fn gd_prints_r2() {
    let out = bin().args(["gd", "--k", "2"]).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["items"][0]["value"], "3*U^2 - 1/2*h^2*U''");
}

#[test]
fn check_pde_airy_passes() {
    let out = bin()
        .args(["check-pde", "--divisor", "[z1]-[z2]", "--order", "2", "--curve"])
        .arg(curves_dir().join("airy.curve"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["status"], "pass");
}

#[test]
fn reports_are_deterministic() {
    let run = || {
        bin()
            .args(["check-loop", "--max-level", "1", "--curve"])
            .arg(curves_dir().join("painleve1.curve"))
            .output()
            .unwrap()
    };
    let a = run();
    let b = run();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout, "reports differ between runs");
}

#[test]
fn omega_expression_round_trips() {
    let out = bin()
        .args(["omega", "--g", "0", "--n", "3", "--curve"])
        .arg(curves_dir().join("painleve1.curve"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let expr = v["items"][0]["value"].as_str().unwrap();
    let parsed = hyperq_core::grammar::parse(expr).unwrap();
    assert_eq!(parsed.to_grammar(), expr, "round trip changed the canonical form");
    assert_eq!(expr, "1/6/((u)*(z1)^2*(z2)^2*(z3)^2)");
}

#[test]
fn cache_round_trip() {
    let dir = std::env::temp_dir().join(format!("hyperq-cache-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cache = dir.join("omega.json");
    let run = || {
        bin()
            .args(["omega", "--g", "1", "--n", "1"])
            .arg("--cache")
            .arg(&cache)
            .arg("--curve")
            .arg(curves_dir().join("painleve1.curve"))
            .output()
            .unwrap()
    };
    let a = run();
    assert!(a.status.success());
    assert!(cache.exists());
    let b = run();
    assert_eq!(a.stdout, b.stdout);
    let cache_json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&cache).unwrap()).unwrap();
    assert_eq!(cache_json["schema"], "hyperq.cache/1");
    assert!(cache_json["omegas"]["1,1"].is_string());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn bad_curve_is_config_error() {
    let dir = std::env::temp_dir().join(format!("hyperq-bad-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.curve");
    std::fs::write(&path, "[curve]\nname = bad\nparameters =\nx = z^2\ny = z^2\n").unwrap();
    let out = bin().args(["times", "--curve"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn elliptic_dict_runs() {
    let out = bin()
        .args(["elliptic-dict", "--nu", "11/10+1/20i", "--tau", "3/20+21/20i"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["status"], "pass");
    assert_eq!(v["meta"]["G4prime_convention"], "NegDTau");
    assert_eq!(v["meta"]["I_form"], "Legendre");
}
