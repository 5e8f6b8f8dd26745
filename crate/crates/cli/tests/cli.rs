use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn repo(rel: &str) -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "..", "..", rel]
        .iter()
        .collect()
}

fn lipdyn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lipdyn"))
        .args(args)
        .output()
        .expect("spawn lipdyn")
}

fn ok(args: &[&str]) -> String {
    let out = lipdyn(args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn validator() -> jsonschema::Validator {
    let text = std::fs::read_to_string(repo("schemas/report.schema.json")).unwrap();
    jsonschema::validator_for(&serde_json::from_str(&text).unwrap()).unwrap()
}

fn json(args: &[&str]) -> Value {
    let v: Value = serde_json::from_str(&ok(args)).unwrap();
    let errors: Vec<String> = validator().iter_errors(&v).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{args:?}: {errors:?}");
    v
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn orbit_csv() {
    let text = ok(&[
        "orbit",
        "--map",
        "builtin:logistic:a=3.2",
        "--x0",
        "0.3",
        "--iters",
        "20",
        "--burn-in",
        "0",
    ]);
    assert!(text.starts_with("index,x\n"));
    assert!(!text.contains('\r'));
    assert_eq!(csv_rows(&text).len(), 20);

    let pw = repo("maps/piecewise.map");
    let text = ok(&[
        "orbit",
        "--map",
        pw.to_str().unwrap(),
        "--x0",
        "0.5",
        "--iters",
        "10",
    ]);
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 10);
    // x_n = 0.5^(2^n) while the orbit stays in [0, 1].
    let mut expected = 0.5f64;
    for (n, row) in rows.iter().enumerate() {
        expected *= expected;
        assert_eq!(row[0], (n + 1).to_string());
        assert_eq!(row[1].parse::<f64>().unwrap(), expected);
    }
}

#[test]
fn orbit_json_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("o.json");
    let out = ok(&[
        "orbit",
        "--map",
        "builtin:tent_ab:a=-2,b=1",
        "--x0",
        "0.2",
        "--iters",
        "5",
        "--burn-in",
        "3",
        "--format",
        "json",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!(validator().is_valid(&v));
    assert_eq!(v["records"][0]["index"], 4);
    assert_eq!(v["records"].as_array().unwrap().len(), 5);
}

#[test]
fn bad_map_files_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.map");
    std::fs::write(&bad, "map f(x) =\n  2*x +").unwrap();
    let out = lipdyn(&["orbit", "--map", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2, column 8"));

    let missing = dir.path().join("missing.map");
    assert_eq!(
        lipdyn(&["orbit", "--map", missing.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn usage_errors() {
    assert_eq!(lipdyn(&["--help"]).status.code(), Some(0));
    assert_eq!(lipdyn(&["--version"]).status.code(), Some(0));
    assert_eq!(lipdyn(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(lipdyn(&["orbit"]).status.code(), Some(1));
    assert_eq!(
        lipdyn(&["orbit", "--map", "builtin:logistic:a=3", "--radius", "0"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        lipdyn(&["classify", "--map", "builtin:logistic:a=3"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        lipdyn(&[
            "classify",
            "--map",
            "builtin:logistic:a=3",
            "--point",
            "0.5"
        ])
        .status
        .code(),
        Some(1)
    );
}

fn verdicts(v: &Value) -> Vec<(f64, String)> {
    v["points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| (f(&p["p"]), p["verdict"].as_str().unwrap().to_string()))
        .collect()
}

#[test]
fn classify_examples() {
    let v = json(&[
        "classify",
        "--map",
        "builtin:logistic:a=2",
        "--auto",
        "--interval",
        "0,1",
    ]);
    assert_eq!(
        verdicts(&v),
        vec![(0.0, "Source".to_string()), (0.5, "Sink".to_string())]
    );
    let p = &v["points"][1];
    assert_eq!(p["smooth_oracle"]["verdict"], "Sink");
    assert_eq!(p["method"], "lipschitz_test");
    assert!(f(&p["c_evidence"]["value"]) <= 0.95);

    let v = json(&[
        "classify",
        "--map",
        "builtin:tent_ab:a=-2,b=1",
        "--point",
        "0.3333333333",
    ]);
    assert_eq!(v["points"][0]["verdict"], "Source");

    let v = json(&[
        "classify",
        "--map",
        "builtin:logistic:a=3",
        "--point",
        "0.6666666667",
    ]);
    assert_eq!(v["points"][0]["verdict"], "Inconclusive");
}

#[test]
fn classify_piecewise_and_cycles() {
    let pw = repo("maps/piecewise.map");
    let v = json(&[
        "classify",
        "--map",
        pw.to_str().unwrap(),
        "--auto",
        "--interval",
        "-2,3",
    ]);
    let found = verdicts(&v);
    assert_eq!(found.len(), 2);
    assert!(found.iter().all(|(_, verdict)| verdict == "Inconclusive"));
    assert_eq!(v["points"][1]["one_sided"]["right"].as_f64(), Some(0.5));

    let v = json(&[
        "classify",
        "--map",
        "builtin:logistic:a=3.2",
        "--point",
        "0.51",
        "--period",
        "2",
    ]);
    let point = &v["points"][0];
    assert_eq!(point["period"], 2);
    assert_eq!(point["verdict"], "Sink");
    assert!((f(&point["smooth_oracle"]["abs_derivative"]) - 0.16).abs() < 1e-9);
}

#[test]
fn analyze_examples() {
    let v = json(&[
        "analyze",
        "--map",
        "builtin:logistic:a=4",
        "--x0",
        "0.3",
        "--iters",
        "100000",
    ]);
    assert!((f(&v["h_n"]) - 2f64.ln()).abs() < 5e-3);
    assert_eq!(v["chaotic"], true);
    assert!(v["period"].is_null());

    let v = json(&["analyze", "--map", "builtin:logistic:a=3.2", "--x0", "0.3"]);
    assert_eq!(v["period"], 2);
    assert!((f(&v["h_n"]) + 0.916).abs() < 1e-3);
    assert_eq!(v["chaotic"], false);

    let v = json(&[
        "analyze",
        "--map",
        "builtin:tent_ab:a=-2,b=1",
        "--x0",
        "0.2",
    ]);
    assert!((f(&v["h_n"]) - std::f64::consts::LN_2).abs() < 1e-4);
    assert_eq!(v["float_collapse"], true);
    assert!(v["notes"]
        .as_array()
        .unwrap()
        .iter()
        .any(|n| n.as_str().unwrap().contains("float_collapse")));
}

#[test]
fn escape_exits_two() {
    let out = lipdyn(&["analyze", "--map", "builtin:logistic:a=4.5", "--x0", "0.3"]);
    assert_eq!(out.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(validator().is_valid(&v));
    assert_eq!(v["status"], "orbit_escaped");
    assert!(v["L"].is_null());

    let out = lipdyn(&[
        "orbit",
        "--map",
        "builtin:affine:c=10,d=0",
        "--x0",
        "1",
        "--iters",
        "50",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(csv_rows(&String::from_utf8(out.stdout).unwrap()).len() < 50);
}

fn sweep(from: &str, to: &str, steps: &str) -> Output {
    lipdyn(&[
        "sweep", "--family", "logistic", "--param", "a", "--from", from, "--to", to, "--steps",
        steps, "--x0", "0.3",
    ])
}

#[test]
fn sweep_examples() {
    let out = sweep("2.5", "4.0", "16");
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("param,h_n,status,detected_period,escaped\n"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 16);
    let params: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(params.windows(2).all(|w| w[0] < w[1]));
    let at = |a: f64| {
        rows.iter()
            .find(|r| (r[0].parse::<f64>().unwrap() - a).abs() < 1e-9)
            .unwrap()
    };
    let r32 = at(3.2);
    assert_eq!(r32[3], "2");
    assert!(r32[1].parse::<f64>().unwrap() < 0.0);
    assert!(at(4.0)[1].parse::<f64>().unwrap() > 0.6);

    assert_eq!(
        csv_rows(&String::from_utf8(sweep("2.5", "4.0", "2").stdout).unwrap()).len(),
        2
    );
    assert_eq!(sweep("4.0", "2.5", "16").status.code(), Some(1));
    assert_eq!(sweep("2.5", "2.5", "16").status.code(), Some(1));
    assert_eq!(sweep("2.5", "4.0", "1").status.code(), Some(1));
}

#[test]
fn sweep_records_row_failures() {
    let text = ok(&[
        "sweep", "--family", "logistic", "--param", "a", "--from", "3.9", "--to", "4.5", "--steps",
        "3",
    ]);
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[2][2], "orbit_escaped");
    assert_eq!(rows[2][4], "true");

    let v = json(&[
        "sweep",
        "--family",
        "tent_ab:b=1",
        "--param",
        "a",
        "--from",
        "-2",
        "--to",
        "-1",
        "--steps",
        "3",
        "--format",
        "json",
        "--iters",
        "2000",
        "--burn-in",
        "0",
    ]);
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn output_is_deterministic() {
    let runs: [&[&str]; 4] = [
        &[
            "classify",
            "--map",
            "builtin:logistic:a=2",
            "--auto",
            "--interval",
            "0,1",
            "--seed",
            "7",
        ],
        &[
            "analyze",
            "--map",
            "builtin:logistic:a=4",
            "--x0",
            "0.3",
            "--iters",
            "20000",
        ],
        &[
            "orbit",
            "--map",
            "builtin:logistic:a=3.7",
            "--iters",
            "200",
            "--format",
            "json",
        ],
        &[
            "sweep", "--family", "logistic", "--param", "a", "--from", "2.5", "--to", "4",
            "--steps", "16",
        ],
    ];
    for args in runs {
        assert_eq!(lipdyn(args).stdout, lipdyn(args).stdout, "{args:?}");
    }
}
