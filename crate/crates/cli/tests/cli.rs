use std::path::Path;
use std::process::{Command, Output};

use dikey::channels::{ChannelChoi, ChannelDevice};
use dikey::devices::{MeasurementSet, Povm, StateDevice};
use dikey::document::{Device, DeviceDocument};
use dikey::linalg::{c, permute_subsystems, ComplexMatrix, DenseLimit, DensityMatrix};
use dikey::states::{default_p, make_rho_d, UnitaryChoice, UnitaryKind};
use serde_json::Value;

fn dikey(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dikey")).args(args).env_remove("DIKEY_DENSE_LIMIT").output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = dikey(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn ok_json(args: &[&str]) -> Value {
    serde_json::from_str(&ok(args)).unwrap()
}

fn err(args: &[&str]) -> String {
    let out = dikey(args);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    String::from_utf8(out.stderr).unwrap()
}

/// Projective measurement onto the columns of a unitary.
fn basis_povm(u: &ComplexMatrix) -> Povm {
    let effects = (0..u.ncols())
        .map(|k| {
            let v = u.column(k);
            v * v.adjoint()
        })
        .collect();
    Povm::new(effects).unwrap()
}

fn measurements(dim: usize) -> MeasurementSet {
    let f = UnitaryChoice::new(UnitaryKind::Fourier, dim).unwrap().matrix();
    let povms = || vec![Povm::computational(dim), basis_povm(&f)];
    MeasurementSet::new(povms(), povms()).unwrap()
}

fn phi_plus() -> DensityMatrix {
    let s = 0.5f64.sqrt();
    DensityMatrix::pure(&[c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)], vec![2, 2]).unwrap()
}

fn write_device(dir: &Path, name: &str, dev: Device) -> String {
    let path = dir.join(name);
    std::fs::write(&path, DeviceDocument::from_device(&dev).to_json()).unwrap();
    path.to_str().unwrap().to_owned()
}

fn rho_2_device() -> Device {
    let s = make_rho_d(2, &UnitaryChoice::new(UnitaryKind::Hadamard, 2).unwrap(), default_p(2), DenseLimit::default())
        .unwrap();
    // (key_A, key_B, shield_A, shield_B) → (key_A shield_A) ⊗ (key_B shield_B)
    let m = permute_subsystems(s.density_matrix().matrix(), &[2, 2, 2, 2], &[0, 2, 1, 3]).unwrap();
    let rho = DensityMatrix::new(m, vec![4, 4]).unwrap();
    Device::State(StateDevice::new(measurements(4), rho).unwrap())
}

#[test]
fn bounds_around_the_threshold() {
    let at = |d: &str| ok_json(&["bounds", "--d", d]);
    let r24 = at("24");
    assert_eq!(r24["schema_version"], 1);
    assert_eq!(r24["gap_established"], true);
    assert!((r24["lower"].as_f64().unwrap() - 0.173_871_647_390_062_32).abs() < 1e-12);
    assert_eq!(at("23")["gap_established"], false);
    let big = at("1048576");
    assert!(big["lower"].as_f64().unwrap() >= 0.98);
    assert_eq!(big["upper"].as_f64().unwrap(), 1.0 / 1025.0);
}

#[test]
fn bounds_for_distilled_copies_match_larger_d() {
    let distilled = ok_json(&["bounds", "--d", "2", "--m", "4"]);
    let direct = ok_json(&["bounds", "--d", "16"]);
    for key in ["lower", "upper"] {
        assert!((distilled[key].as_f64().unwrap() - direct[key].as_f64().unwrap()).abs() < 1e-12, "{key}");
    }
}

#[test]
fn bounds_from_parameters_are_normalized() {
    let r = ok_json(&["bounds", "--alpha", "2", "--beta", "2", "--gamma", "1", "--delta", "0"]);
    assert_eq!(r["params"]["alpha"], 0.25);
    assert_eq!(r["upper"], 0.5);
    err(&["bounds", "--alpha", "0.25", "--beta", "0.25", "--gamma", "0.5", "--delta", "0"]);
    err(&["bounds", "--d", "24", "--m", "0"]);
    err(&["bounds"]);
}

#[test]
fn threshold_search() {
    assert_eq!(ok(&["threshold", "--lo", "2", "--hi", "100"]), "24\n");
    assert_eq!(ok(&["threshold", "--lo", "30", "--hi", "100"]), "30\n");
    assert!(err(&["threshold", "--lo", "2", "--hi", "10"]).contains("no threshold"));
    err(&["threshold", "--lo", "10", "--hi", "10"]);
}

#[test]
fn region_csv() {
    let csv = ok(&["region", "--a-grid", "2", "--alpha-grid", "2"]);
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[0], "a,alpha,entropy,threshold,in_gap");
    assert_eq!(lines[4], "1,0.5,0,1,true");
    let fine = ok(&["region", "--a-grid", "101", "--alpha-grid", "101"]);
    assert_eq!(fine.lines().count(), 101 * 101 + 1);
    assert!(fine.lines().last().unwrap().starts_with("1,0.5,") && fine.ends_with(",true\n"));
    err(&["region", "--a-grid", "1", "--alpha-grid", "5"]);
}

#[test]
fn region_boundary_from_column_scan() {
    let csv = ok(&["region", "--a-grid", "2", "--alpha-grid", "10001"]);
    let first_in_gap =
        csv.lines().skip(1).map(|l| l.split(',').collect::<Vec<_>>()).find(|f| f[0] == "1" && f[4] == "true").unwrap();
    let alpha: f64 = first_in_gap[1].parse().unwrap();
    assert!(alpha > 0.410 && alpha < 0.416, "{alpha}");
}

#[test]
fn region_json_matches_csv() {
    let v = ok_json(&["region", "--a-grid", "3", "--alpha-grid", "4", "--format", "json"]);
    let pts = v["points"].as_array().unwrap();
    assert_eq!(pts.len(), 12);
    let csv = ok(&["region", "--a-grid", "3", "--alpha-grid", "4"]);
    for (pt, line) in pts.iter().zip(csv.lines().skip(1)) {
        let f: Vec<_> = line.split(',').collect();
        assert_eq!(pt["a"].as_f64().unwrap(), f[0].parse::<f64>().unwrap());
        assert_eq!(pt["entropy_value"].as_f64().unwrap(), f[2].parse::<f64>().unwrap());
        assert_eq!(pt["in_gap"].as_bool().unwrap(), f[4] == "true");
    }
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["region", "--a-grid", "37", "--alpha-grid", "53"],
        vec!["region", "--a-grid", "5", "--alpha-grid", "5", "--format", "json"],
        vec!["state", "--d", "3"],
        vec!["verify", "--d", "2", "--unitary", "hadamard"],
    ] {
        let a = ok(&args);
        assert_eq!(a, ok(&args), "{args:?}");
        let path = dir.path().join("out");
        let p = path.to_str().unwrap();
        let mut with_output = args.clone();
        with_output.extend(["--output", p]);
        assert_eq!(ok(&with_output), "");
        assert_eq!(std::fs::read_to_string(&path).unwrap(), a);
    }
}

#[test]
fn state_reports() {
    let r = ok_json(&["state", "--d", "4", "--unitary", "fourier"]);
    assert_eq!(r["schema_version"], 1);
    assert!((r["params"]["gamma"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-10);
    assert_eq!(r["ppt"]["ppt"], true);
    assert!((r["block_norms"]["c"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-10);

    let r = ok_json(&["state", "--d", "2", "--p", "1"]);
    assert!((r["params"]["beta"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(r["lower"], 0.0);

    let r = ok_json(&["state", "--d", "100000", "--checks", "none"]);
    assert_eq!(r["ppt"], Value::Null);
    assert_eq!(r["bounds"]["gap_established"], true);
    assert!(r["block_norms"]["a1"].as_f64().unwrap() > 0.49);
}

#[test]
fn state_without_mixing_is_not_ppt() {
    let r = ok_json(&["state", "--d", "3", "--p", "0"]);
    assert_eq!(r["ppt"]["ppt"], false);
    assert_eq!(r["bounds"], Value::Null);
    let r = ok_json(&["state", "--d", "3", "--p", "0", "--checks", "none"]);
    assert_eq!(r["bounds"], Value::Null);
}

#[test]
fn dense_limit_is_enforced() {
    assert!(err(&["state", "--d", "40"]).contains("dense limit"));
    assert!(err(&["--dense-limit", "16", "state", "--d", "4"]).contains("dense limit"));
    assert!(err(&["verify", "--d", "40"]).contains("dense limit"));
    ok(&["--dense-limit", "16", "state", "--d", "2"]);
    err(&["--dense-limit", "3", "bounds", "--d", "2"]);
    let out = Command::new(env!("CARGO_BIN_EXE_dikey"))
        .args(["state", "--d", "4"])
        .env("DIKEY_DENSE_LIMIT", "16")
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn invalid_state_inputs() {
    err(&["state", "--d", "0"]);
    err(&["state", "--d", "2", "--p", "1.5"]);
    err(&["state", "--d", "2", "--unitary", "pauli"]);
}

#[test]
fn verify_decomposition() {
    for (d, u) in [("2", "hadamard"), ("4", "fourier"), ("3", "fourier")] {
        let r = ok_json(&["verify", "--d", d, "--unitary", u]);
        assert_eq!(r["holds"], true, "d={d}");
        assert!(r["reconstruction_residual"].as_f64().unwrap() <= 1e-9);
    }
    // without mixing the state is not PPT
    err(&["verify", "--d", "2", "--p", "0"]);
}

#[test]
fn attack_on_rho_2_preserves_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let dev = write_device(dir.path(), "rho2.json", rho_2_device());
    let r = ok_json(&["attack", "--device", &dev, "--kind", "state"]);
    assert_eq!(r["kind"], "state");
    assert!(r["distance"].as_f64().unwrap() <= 1e-12);
    assert!(r["witness_min_eigenvalue"].as_f64().unwrap() >= -1e-9);

    // the attacked document is itself a valid device that attacks back
    let out = dir.path().join("attacked.json");
    let r = ok_json(&["attack", "--device", &dev, "--attacked-out", out.to_str().unwrap()]);
    assert_eq!(r["attacked"], Value::Null);
    let attacked = DeviceDocument::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(matches!(attacked.to_device().unwrap(), Device::State(_)));
    let back = ok_json(&["attack", "--device", out.to_str().unwrap()]);
    assert!(back["distance"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn attack_rejects_entangled_state() {
    let dir = tempfile::tempdir().unwrap();
    let dev =
        write_device(dir.path(), "phi.json", Device::State(StateDevice::new(measurements(2), phi_plus()).unwrap()));
    assert!(err(&["attack", "--device", &dev, "--kind", "state"]).contains("state not PPT"));
}

#[test]
fn attack_on_channels() {
    let dir = tempfile::tempdir().unwrap();
    let rho = DensityMatrix::maximally_mixed(vec![2, 2]);
    let identity = ChannelDevice::new(measurements(2), phi_plus(), ChannelChoi::identity(2)).unwrap();
    let id_path = write_device(dir.path(), "id.json", Device::Channel(identity));
    assert!(err(&["attack", "--device", &id_path, "--kind", "channel"]).contains("channel not completely co-positive"));

    let ms = MeasurementSet::new(measurements(2).alice().to_vec(), measurements(3).bob().to_vec()).unwrap();
    let depol = Device::Channel(ChannelDevice::new(ms, rho, ChannelChoi::fully_depolarizing(2, 3)).unwrap());
    let path = write_device(dir.path(), "depol.json", depol);
    let r = ok_json(&["attack", "--device", &path, "--kind", "channel"]);
    assert_eq!(r["kind"], "channel");
    assert!(r["distance"].as_f64().unwrap() <= 1e-12);
    assert!(err(&["attack", "--device", &path, "--kind", "state"]).contains("--kind"));
}

#[test]
fn attack_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    err(&["attack", "--device", dir.path().join("missing.json").to_str().unwrap()]);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"schema_version\": 1, \"kind\": \"state\"}").unwrap();
    err(&["attack", "--device", bad.to_str().unwrap()]);
    let dev = write_device(dir.path(), "rho2.json", rho_2_device());
    assert!(err(&["--dense-limit", "8", "attack", "--device", &dev]).contains("dense limit"));
}
