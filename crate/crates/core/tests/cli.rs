use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn lear(args: &[&str]) -> Output {
    lear_env(args, &[])
}

fn lear_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lear"));
    cmd.args(args).env_remove("LEAR_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn lear")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn ok_json(args: &[&str]) -> Value {
    let o = lear(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_str(&stdout(&o)).unwrap()
}

fn schema(name: &str) -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(format!("{name}.schema.json"));
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// The subset of JSON Schema the published schemas use.
fn validate(value: &Value, s: &Value, root: &Value, path: &str) -> Result<(), String> {
    if let Some(r) = s.get("$ref").and_then(Value::as_str) {
        let name = r.strip_prefix("#/$defs/").ok_or_else(|| format!("unsupported $ref {r}"))?;
        return validate(value, &root["$defs"][name], root, path);
    }
    if let Some(options) = s.get("anyOf").and_then(Value::as_array) {
        if !options.iter().any(|o| validate(value, o, root, path).is_ok()) {
            return Err(format!("{path}: matches no anyOf branch"));
        }
    }
    if let Some(c) = s.get("const") {
        if value != c {
            return Err(format!("{path}: expected {c}"));
        }
    }
    if let Some(e) = s.get("enum").and_then(Value::as_array) {
        if !e.contains(value) {
            return Err(format!("{path}: {value} not in enum"));
        }
    }
    if let Some(t) = s.get("type") {
        let types: Vec<&str> = match t {
            Value::String(t) => vec![t.as_str()],
            Value::Array(ts) => ts.iter().filter_map(Value::as_str).collect(),
            _ => return Err("bad type".into()),
        };
        let matches = |t: &str| match t {
            "object" => value.is_object(),
            "array" => value.is_array(),
            "string" => value.is_string(),
            "boolean" => value.is_boolean(),
            "null" => value.is_null(),
            "number" => value.is_number(),
            "integer" => value.is_u64() || value.is_i64(),
            _ => false,
        };
        if !types.iter().any(|t| matches(t)) {
            return Err(format!("{path}: {value} is not {types:?}"));
        }
    }
    if let (Some(min), Some(v)) = (s.get("minimum").and_then(Value::as_f64), value.as_f64()) {
        if v < min {
            return Err(format!("{path}: {v} < {min}"));
        }
    }
    if let Some(obj) = value.as_object() {
        for key in s.get("required").and_then(Value::as_array).into_iter().flatten() {
            if !obj.contains_key(key.as_str().unwrap()) {
                return Err(format!("{path}: missing {key}"));
            }
        }
        let props = s.get("properties").and_then(Value::as_object);
        for (k, v) in obj {
            match props.and_then(|p| p.get(k)) {
                Some(ps) => validate(v, ps, root, &format!("{path}.{k}"))?,
                None if s.get("additionalProperties") == Some(&Value::Bool(false)) => {
                    return Err(format!("{path}: unexpected field {k}"))
                }
                None => {}
            }
        }
    }
    if let (Some(items), Some(arr)) = (s.get("items"), value.as_array()) {
        for (i, v) in arr.iter().enumerate() {
            validate(v, items, root, &format!("{path}[{i}]"))?;
        }
    }
    Ok(())
}

fn assert_schema(value: &Value, name: &str) {
    let s = schema(name);
    if let Err(e) = validate(value, &s, &s, "$") {
        panic!("{name}: {e}\n{value}");
    }
}

struct Workspace {
    dir: tempfile::TempDir,
}

impl Workspace {
    fn new() -> Self {
        Self { dir: tempfile::tempdir().unwrap() }
    }

    fn write(&self, name: &str, text: &str) -> String {
        let p = self.dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p.to_string_lossy().into_owned()
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn simulated(&self, n: usize, times: &str, seed: u64) -> String {
        let spec = self.write(
            "spec.json",
            &format!(
                r#"{{"n_subjects": {n}, "times": {times}, "beta": [0.5], "design": "intercept",
                    "covariance": {{"lear": {{"sigma2": 1.0, "rho_l": 0.5, "delta": 2.0}}}}, "seed": {seed}}}"#
            ),
        );
        let out = self.path("data.csv").to_string_lossy().into_owned();
        let o = lear(&["simulate", "--spec", &spec, "--out", &out]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        out
    }
}

fn expect_error(args: &[&str], code: &str, exit: i32) -> String {
    let o = lear(args);
    assert_eq!(o.status.code(), Some(exit), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    let line = stdout(&o);
    assert_eq!(line.lines().count(), 1, "{line}");
    let v: Value = serde_json::from_str(&line).unwrap();
    assert_schema(&v, "error");
    assert_eq!(v["error"], code);
    assert_eq!(v["exit_code"], exit);
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(!err.trim().is_empty());
    err
}

#[test]
fn build_matrix_compound_symmetry() {
    let o = lear(&["build-matrix", "--rho-l", "0.5", "--delta", "0", "--sigma2", "1", "--times", "1,2,3"]);
    assert!(o.status.success());
    assert_eq!(
        stdout(&o),
        "1.0000000000000000e0 5.0000000000000000e-1 5.0000000000000000e-1\n\
         5.0000000000000000e-1 1.0000000000000000e0 5.0000000000000000e-1\n\
         5.0000000000000000e-1 5.0000000000000000e-1 1.0000000000000000e0\n"
    );
}

#[test]
fn build_matrix_json_uses_pooled_extremes() {
    let v = ok_json(&[
        "build-matrix", "--rho-l", "0.5", "--delta", "1", "--times", "1,2,3,4", "--times", "1,2", "--subject", "1",
        "--format", "json",
    ]);
    assert_schema(&v, "matrix_report");
    assert_eq!(v["d_max"], 3.0);
    assert_eq!(v["matrix"][0][1], 0.5);
}

#[test]
fn reparam_examples() {
    let v = ok_json(&["reparam", "--direction", "lear2arma", "--rho-l", "0.6", "--delta", "2", "--range", "2"]);
    assert_schema(&v, "reparam_report");
    assert_eq!(v["arma11"]["tau"], 0.6);
    assert!((v["arma11"]["rho_a"].as_f64().unwrap() - 0.6).abs() < 1e-15);

    let v = ok_json(&["reparam", "--direction", "lear2arma", "--rho-l", "0.5", "--delta", "1", "--times", "1,2,3,4"]);
    assert!((v["arma11"]["rho_a"].as_f64().unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);

    let v = ok_json(&["reparam", "--direction", "arma2lear", "--tau", "0.6", "--rho-a", "0.6", "--range", "2", "--verify"]);
    assert_schema(&v, "reparam_report");
    assert_eq!(v["lear"]["rho_l"], 0.6);
    assert!((v["lear"]["delta"].as_f64().unwrap() - 2.0).abs() < 1e-14);
    assert!(v["max_abs_difference"].as_f64().unwrap() < 1e-15);

    let v = ok_json(&["reparam", "--direction", "arma2lear", "--tau", "0.5", "--rho-a", "1", "--range", "2"]);
    assert_eq!(v["lear"]["delta"], 0.0);

    // spacing 2: parameters stay on the grid's own scale
    let v = ok_json(&[
        "reparam", "--direction", "lear2arma", "--rho-l", "0.5", "--delta", "2", "--times", "0,2,4,6", "--verify",
    ]);
    assert_eq!((v["spacing"].as_f64(), v["range"].as_f64()), (Some(2.0), Some(4.0)));
    assert!(v["max_abs_difference"].as_f64().unwrap() < 1e-15);
}

#[test]
fn reparam_domain_errors() {
    expect_error(
        &["reparam", "--direction", "arma2lear", "--tau", "0.5", "--rho-a", "-0.3", "--range", "2"],
        "outside_lear_image",
        7,
    );
    expect_error(&["reparam", "--direction", "arma2lear", "--tau", "0", "--rho-a", "0.5", "--range", "2"], "unidentifiable", 7);
    expect_error(
        &["reparam", "--direction", "lear2arma", "--rho-l", "0.5", "--delta", "1", "--times", "1,2,4"],
        "not_special_case",
        7,
    );
    expect_error(&["reparam", "--direction", "lear2arma", "--rho-l", "0.5", "--delta", "1", "--times", "1,2"], "degenerate_range", 3);
}

#[test]
fn invalid_parameters_list_every_violation() {
    let err = expect_error(&["build-matrix", "--rho-l", "1.0", "--delta", "-0.1", "--times", "1,2,3"], "invalid_params", 3);
    assert!(err.contains("rho_L must be < 1") && err.contains("delta must be >= 0"), "{err}");
}

#[test]
fn usage_errors_exit_two() {
    let o = lear(&["fit", "--input", "x.csv"]);
    assert_eq!(o.status.code(), Some(2));
    let o = lear(&["build-matrix", "--rho-l", "0.5", "--delta", "0", "--times", "1,2", "--format", "xml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn ingest_errors() {
    let ws = Workspace::new();
    let missing = ws.path("nope.csv").to_string_lossy().into_owned();
    expect_error(&["check-special-case", "--input", &missing], "io_error", 4);
    let dup = ws.write("dup.csv", "subject,time,y\ns1,1,0.5\ns1,2,0.7\ns1,2,0.9\n");
    let err = expect_error(&["check-special-case", "--input", &dup], "duplicate_measurement", 5);
    assert!(err.contains("line 4"), "{err}");
    let bad = ws.write("bad.csv", "subject,time,y\ns1,1,0.5\ns1,x,0.7\n");
    let err = expect_error(&["fit", "--input", &bad, "--param", "lear"], "parse_error", 5);
    assert!(err.contains("line 3"), "{err}");
    let single = ws.write("single.csv", "subject,time,y\ns1,1,0.5\n");
    expect_error(&["fit", "--input", &single, "--param", "lear"], "degenerate_grid", 3);
}

#[test]
fn special_case_report_from_csv() {
    let ws = Workspace::new();
    let irregular = ws.write("irr.csv", "subject,time,y\na,1,0\na,2,1\na,4,2\nb,1,0\nb,2,1\nb,3,3\n");
    let v = ok_json(&["check-special-case", "--input", &irregular]);
    assert_schema(&v, "special_case_report");
    assert_eq!(v["eligible"], false);
    assert_eq!(v["equally_spaced"], false);

    let spaced = ws.write("h2.csv", "id,week,resp\na,0,1\na,2,2\na,4,3\nb,0,1\nb,2,0\n");
    let v = ok_json(&["check-special-case", "--input", &spaced, "--subject-col", "id", "--time-col", "week", "--y-col", "resp"]);
    assert_schema(&v, "special_case_report");
    assert_eq!((v["eligible"].as_bool(), v["spacing"].as_f64()), (Some(true), Some(2.0)));
}

#[test]
fn fit_and_compare_reports_validate() {
    let ws = Workspace::new();
    let data = ws.simulated(150, "[1, 2, 3, 4, 5]", 31);
    let lear_fit = ok_json(&["fit", "--input", &data, "--param", "lear"]);
    assert_schema(&lear_fit, "fit_result");
    assert_eq!(lear_fit["criterion"], "REML");
    let arma_fit = ok_json(&["fit", "--input", &data, "--param", "arma11", "--criterion", "ml"]);
    assert_schema(&arma_fit, "fit_result");
    assert_eq!(arma_fit["parameterization"], "ARMA11");

    let cmp = ok_json(&["compare", "--input", &data]);
    assert_schema(&cmp, "comparison_report");
    let diff = cmp["lear"]["max_loglik"].as_f64().unwrap() - cmp["arma11"]["max_loglik"].as_f64().unwrap();
    assert!(diff.abs() < 1e-4, "{diff}");
    let mut standalone = lear_fit.clone();
    standalone.as_object_mut().unwrap().remove("schema_version");
    assert_eq!(cmp["lear"], standalone);
}

#[test]
fn json_numbers_round_trip_exactly() {
    let ws = Workspace::new();
    let data = ws.simulated(40, "[1, 2, 3, 4]", 5);
    let text = stdout(&lear(&["fit", "--input", &data, "--param", "lear", "--criterion", "ml"]));
    let v: Value = serde_json::from_str(&text).unwrap();
    let parsed = lear::io::read_long_csv_path(Path::new(&data), &lear::io::CsvSchema::default()).unwrap();
    let direct = lear::fit(&parsed, lear::Parameterization::Lear, lear::Criterion::Ml, &lear::FitOptions::default()).unwrap();
    assert_eq!(v["max_loglik"].as_f64().unwrap().to_bits(), direct.max_loglik.to_bits());
    let back: lear::FitResult = serde_json::from_value(v.clone()).unwrap();
    assert_eq!(back, direct);
}

#[test]
fn field_sets_are_stable() {
    let ws = Workspace::new();
    let keys = |v: &Value| v.as_object().unwrap().keys().cloned().collect::<Vec<_>>();
    let first = ok_json(&["compare", "--input", &ws.simulated(30, "[1, 2, 3]", 1)]);
    let second = ok_json(&["compare", "--input", &ws.simulated(60, "[0, 1, 2, 3]", 2)]);
    assert_eq!(keys(&first), keys(&second));
    assert_eq!(keys(&first["lear"]), keys(&second["arma11"]));
}

#[test]
fn config_file_and_flag_precedence() {
    let ws = Workspace::new();
    let data = ws.simulated(60, "[1, 2, 3, 4]", 9);
    let cfg = ws.write("fit.toml", "criterion = \"ml\"\ndelta-cap = 2.0\ngrid-points = 11\n");
    let v = ok_json(&["fit", "--input", &data, "--param", "lear", "--config", &cfg]);
    assert_eq!(v["criterion"], "ML");
    assert_eq!(v["bounds"][1][1], 4.0);
    let v = ok_json(&["fit", "--input", &data, "--param", "lear", "--config", &cfg, "--criterion", "reml", "--delta-cap", "3"]);
    assert_eq!(v["criterion"], "REML");
    assert_eq!(v["bounds"][1][1], 6.0);

    let broken = ws.write("broken.toml", "grid-points = \"lots\"\n");
    expect_error(&["fit", "--input", &data, "--param", "lear", "--config", &broken], "config_error", 5);
    let o = lear_env(&["fit", "--input", &data, "--param", "lear"], &[("LEAR_THREADS", "many")]);
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn arma_fit_refuses_irregular_data() {
    let ws = Workspace::new();
    let data = ws.write("irr.csv", "subject,time,y\na,1,0\na,2,1\na,4,2\nb,1,0.3\nb,2,1.2\nb,4,1.9\nc,1,0.1\nc,2,0.5\nc,4,2.4\n");
    expect_error(&["fit", "--input", &data, "--param", "arma11"], "not_special_case", 7);
    expect_error(&["compare", "--input", &data], "not_special_case", 7);
    let v = ok_json(&["fit", "--input", &data, "--param", "lear", "--criterion", "ml"]);
    assert_schema(&v, "fit_result");
}

#[test]
fn simulate_to_stdout_matches_file_output() {
    let ws = Workspace::new();
    let file = ws.simulated(5, "[1, 2, 3]", 77);
    let spec = ws.path("spec.json").to_string_lossy().into_owned();
    let o = lear(&["simulate", "--spec", &spec]);
    assert!(o.status.success());
    assert_eq!(o.stdout, std::fs::read(file).unwrap());
}

#[test]
fn covariate_designs_round_trip_through_csv() {
    let ws = Workspace::new();
    let spec = ws.write(
        "spec.json",
        r#"{"n_subjects": 30, "times": [0, 1, 2, 3], "beta": [1.0, 0.25], "design": "intercept_time",
            "covariance": {"arma11": {"sigma2": 1.5, "tau": 0.4, "rho_a": 0.7}}, "seed": 4}"#,
    );
    let out = ws.path("cov.csv").to_string_lossy().into_owned();
    assert!(lear(&["simulate", "--spec", &spec, "--out", &out, "--covariates"]).status.success());
    let header = std::fs::read_to_string(&out).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header, "subject,time,y,x1,x2");
    let a = ok_json(&["fit", "--input", &out, "--param", "arma11", "--design", "covariates", "--covariates", "x1,x2", "--no-intercept"]);
    let b = ok_json(&["fit", "--input", &out, "--param", "arma11", "--design", "intercept-time"]);
    assert_eq!(a, b);
    assert_eq!(a["beta_hat"].as_array().unwrap().len(), 2);
}
