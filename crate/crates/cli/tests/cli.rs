use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn ciscurv(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ciscurv"));
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("CISCURV_THREADS", t),
        None => cmd.env_remove("CISCURV_THREADS"),
    };
    cmd.output().expect("binary runs")
}

fn scratch(name: &str, contents: &str) -> String {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&path, contents).unwrap();
    path.display().to_string()
}

fn report(out: &Output) -> Value {
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("JSON report")
}

fn error_kind(out: &Output) -> String {
    assert_eq!(out.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&out.stderr).expect("JSON error object");
    v["error"]["kind"].as_str().unwrap().to_string()
}

const CONIC: &str = r#"{"n":2,"m":1,"terms":[
    {"j":0,"alpha":[2,0],"re":1,"im":0},
    {"j":0,"alpha":[0,2],"re":1,"im":0},
    {"j":0,"alpha":[0,0],"re":-1,"im":0}]}"#;

const CYLINDER: &str = r#"{"n":3,"m":1,"terms":[
    {"j":0,"alpha":[0,0,1],"re":1,"im":0},
    {"j":0,"alpha":[2,0,0],"re":-1,"im":0}]}"#;

#[test]
fn codim_table_embeds_config_and_version() {
    let v = report(&ciscurv(&["codim", "--table", "--d", "2", "--n", "7"], None));
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["config"]["tolerances"]["rank_tol"], 1e-8);
    let rows = v["result"].as_array().unwrap();
    let ricci = rows.iter().find(|r| r["locus"]["tag"] == "RicciDegenerate").unwrap();
    // d(n-d-1)+1
    assert_eq!(ricci["codim_lower_bound"], 9);
}

#[test]
fn codim_text_table() {
    let out = ciscurv(&["codim", "--table", "--d", "1", "--n", "3", "--text"], None);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("locus"));
    assert!(text.contains("Inflection"));
}

#[test]
fn missing_map_is_a_file_not_found_error() {
    let out = ciscurv(&["curvature", "--map", "missing.json"], None);
    assert_eq!(error_kind(&out), "file_not_found");
}

#[test]
fn malformed_map_reports_its_location() {
    let path = scratch("broken.json", "{\"n\": 2,\n \"m\": }");
    let out = ciscurv(&["curvature", "--map", &path], None);
    assert_eq!(error_kind(&out), "parse_error");
    let v: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(v["error"]["message"].as_str().unwrap().contains("line 2"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(ciscurv(&["bogus"], None).status.code(), Some(2));
    assert_eq!(
        ciscurv(&["codim", "--d", "1", "--n", "3", "--frobnicate"], None)
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn bad_config_is_rejected() {
    let path = scratch("bad_config.json", r#"{"tolerances": {"zero_tol": -1.0}}"#);
    let out = ciscurv(&["--config", &path, "codim", "--d", "1", "--n", "3"], None);
    assert_eq!(error_kind(&out), "invalid_argument");
}

#[test]
fn config_file_overrides_defaults() {
    let path = scratch("config.json", r#"{"seed": 11, "tolerances": {"rank_tol": 1e-6}}"#);
    let v = report(&ciscurv(&["--config", &path, "codim", "--d", "1", "--n", "3"], None));
    assert_eq!(v["config"]["seed"], 11);
    assert_eq!(v["config"]["tolerances"]["rank_tol"], 1e-6);
    assert_eq!(v["config"]["tolerances"]["zero_tol"], 1e-9);
}

#[test]
fn cylinder_curvature_and_certificates() {
    let path = scratch("cylinder.json", CYLINDER);
    let v = report(&ciscurv(
        &[
            "curvature",
            "--map",
            &path,
            "--vector",
            "1,0;0,0",
            "--vector2",
            "0,0;1,0",
        ],
        None,
    ));
    // II(e1, e1) = 2 e3, everything else vanishes
    assert_eq!(v["result"]["holsec"], -8.0);
    assert_eq!(v["result"]["holbisec"].as_f64().unwrap(), 0.0);
    assert_eq!(v["result"]["scalar"], -16.0);
    let v = report(&ciscurv(&["certify", "--map", &path, "--kind", "ricci"], None));
    assert_eq!(
        v["result"]["negativity_certificate"]["verdict"],
        "certified_not_negative"
    );
    let v = report(&ciscurv(&["certify", "--map", &path, "--kind", "scalar"], None));
    assert_eq!(v["result"]["negativity_certificate"]["verdict"], "certified_negative");
    let v = report(&ciscurv(
        &[
            "certify",
            "--map",
            &path,
            "--kind",
            "exterior",
            "--l",
            "1",
            "--restarts",
            "4",
        ],
        None,
    ));
    assert_eq!(v["result"]["verdict"], "not_positive");
    // II(e2, .) = 0, so the kernel at e2 is the whole tangent plane
    assert_eq!(v["result"]["max_kernel_dim"], 2);
}

#[test]
fn point_off_the_zero_set_is_rejected() {
    let path = scratch("conic_curv.json", CONIC);
    let out = ciscurv(&["curvature", "--map", &path, "--point", "0,0;0,0"], None);
    assert_eq!(error_kind(&out), "degenerate_germ");
}

#[test]
fn linescan_finds_the_tangent_of_the_conic() {
    let path = scratch("conic.json", CONIC);
    let v = report(&ciscurv(
        &["linescan", "--map", &path, "--point", "1,0;0,0", "--l", "2"],
        None,
    ));
    assert_eq!(v["result"]["scan"]["order"], 2);
    assert_eq!(v["result"]["scan"]["contained"], false);
}

#[test]
fn brody_certificate_holds() {
    let path = scratch(
        "disk.json",
        r#"{"n":1,"m":2,"terms":[
        {"j":0,"alpha":[1],"re":1,"im":0},
        {"j":1,"alpha":[3],"re":0.5,"im":0.5}]}"#,
    );
    let v = report(&ciscurv(&["brody", "--map", &path, "--deg-max", "12"], None));
    assert_eq!(v["result"]["certificate"]["holds"], true);
    let constant = scratch(
        "constant.json",
        r#"{"n":1,"m":1,"terms":[{"j":0,"alpha":[0],"re":1,"im":0}]}"#,
    );
    let out = ciscurv(&["brody", "--map", &constant, "--deg-max", "4"], None);
    assert_eq!(error_kind(&out), "degenerate_input");
}

#[test]
fn spaced_classes_below_four_are_an_invalid_schedule() {
    let args = [
        "donaldson",
        "--n",
        "1",
        "--m",
        "1",
        "--l",
        "1",
        "--radius",
        "4",
        "--D",
        "3",
        "--oracle",
        "transversality",
        "--seed",
        "7",
    ];
    assert_eq!(error_kind(&ciscurv(&args, None)), "invalid_schedule");
}

#[test]
fn donaldson_reports_are_byte_identical() {
    let csv = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("margins.csv");
    let csv = csv.display().to_string();
    let args = [
        "donaldson",
        "--n",
        "1",
        "--m",
        "1",
        "--l",
        "1",
        "--radius",
        "2",
        "--D",
        "4",
        "--oracle",
        "transversality",
        "--seed",
        "7",
        "--csv",
        &csv,
    ];
    let a = ciscurv(&args, Some("1"));
    let b = ciscurv(&args, Some("3"));
    let c = ciscurv(&args, None);
    let v = report(&a);
    assert!(v["result"]["final_margin"].as_f64().unwrap() > 0.0);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    let table = std::fs::read_to_string(&csv).unwrap();
    assert!(table.starts_with("radius,points,min_final_margin,guaranteed_margin\n"));
    assert_eq!(
        table.lines().count(),
        1 + v["result"]["margin_vs_radius"].as_array().unwrap().len()
    );
}

#[test]
fn line_control_grows_with_scale() {
    let v = report(&ciscurv(
        &[
            "hyperbolic-experiment",
            "--scales",
            "4,16",
            "--family",
            "line",
            "--candidates",
            "4",
        ],
        None,
    ));
    let rows = v["result"]["rows"].as_array().unwrap();
    let best: Vec<f64> = rows.iter().map(|r| r["best_derivative"].as_f64().unwrap()).collect();
    assert!(best[1] > 1.8 * best[0], "{best:?}");
}

#[test]
fn thread_variable_is_validated() {
    let out = ciscurv(&["codim", "--d", "1", "--n", "3"], Some("zero"));
    assert_eq!(error_kind(&out), "invalid_argument");
}
