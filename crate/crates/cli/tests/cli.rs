use std::f64::consts::FRAC_2_SQRT_PI;

use std::process::{Command, Output};

use fracrl_cli::report::{Record, ReportDocument, Status};

fn fracrl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracrl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> (ReportDocument, String, i32) {
    let mut all = vec!["--format", "json"];
    all.extend_from_slice(args);
    let out = fracrl(&all);
    let text = String::from_utf8(out.stdout).unwrap();
    let doc = serde_json::from_str(&text).unwrap_or_else(|e| panic!("{e}: {text}"));
    (doc, text, out.status.code().unwrap())
}

fn derivative_value(doc: &ReportDocument) -> f64 {
    match &doc.results[0] {
        Record::Derivative { result, .. } => result.value.unwrap(),
        other => panic!("unexpected record {other:?}"),
    }
}

#[test]
fn deriv_golden_values() {
    for (f, at, want) in [
        ("sqrt(t)", "0.7", 0.886_226_925_452_758),
        ("t^2", "1.0", 1.504_505_556_127_134),
        ("5", "1.0", 0.0),
    ] {
        for method in ["auto", "symbolic", "quadrature", "oracle"] {
            let (doc, _, code) = json(&[
                "deriv", "--fn", f, "--alpha", "0.5", "--at", at, "--method", method,
            ]);
            assert_eq!(code, 0);
            assert_eq!(doc.status, Status::Ok);
            let tol = if method == "oracle" { 1e-5 } else { 1e-8 };
            assert!((derivative_value(&doc) - want).abs() < tol, "{f} {method}");
        }
    }
}

#[test]
fn table_shows_seven_digits() {
    let out = fracrl(&["deriv", "--fn", "sqrt(t)", "--at", "0.7"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("0.8862269"), "{text}");
    assert!(text.ends_with("status: OK\n"));
}

#[test]
fn check_exit_codes_follow_verdict() {
    let kinked = "sqrt(t)+relu(t-1)";
    let (doc, _, code) = json(&[
        "check", "leibniz", "--u", kinked, "--v", kinked, "--alpha", "0.5", "--at", "1",
    ]);
    assert_eq!(code, 1);
    assert_eq!(doc.status, Status::Violated);
    let Record::Rule { report, .. } = &doc.results[0] else {
        panic!()
    };
    assert!((report.lhs - FRAC_2_SQRT_PI).abs() < 1e-6);
    assert!((report.rhs - 1.772_453_9).abs() < 1e-6);

    let (doc, _, code) = json(&[
        "check",
        "chain-a",
        "--f",
        "u^2",
        "--u",
        "1-t+2*relu(t-1)",
        "--alpha",
        "0.5",
        "--at",
        "1",
    ]);
    assert_eq!(code, 1);
    let Record::Rule { report, .. } = &doc.results[0] else {
        panic!()
    };
    assert!((report.lhs + 0.752_252_8).abs() < 1e-6);
    assert_eq!(report.rhs, 0.0);

    let (doc, _, code) = json(&[
        "check", "leibniz", "--u", "t", "--v", "1", "--alpha", "0.5", "--at", "1",
    ]);
    assert_eq!(code, 0);
    assert_eq!(doc.status, Status::Holds);

    let (_, _, code) = json(&[
        "check",
        "chain-b",
        "--f",
        "sqrt(u)+relu(u-1)",
        "--u",
        "t^2",
        "--at",
        "1",
    ]);
    assert_eq!(code, 1);
}

#[test]
fn reproduce_succeeds() {
    let (doc, _, code) = json(&["reproduce"]);
    assert_eq!(code, 0);
    assert_eq!(doc.status, Status::Reproduced);
    assert_eq!(doc.results.len(), 6);
    let Record::Counterexample(ce5) = &doc.results[4] else {
        panic!()
    };
    assert_eq!(ce5.id, "CE5");
    assert!((ce5.expected_rhs - 1.253_314_1).abs() < 1e-7);
    let Record::LocalityCheck(loc) = &doc.results[5] else {
        panic!()
    };
    assert!(loc.report.max_deviation <= 1e-8);
}

#[test]
fn locality_defaults_agree() {
    let (doc, _, code) = json(&["locality"]);
    assert_eq!(code, 0);
    assert_eq!(doc.status, Status::Local);
    let (_, _, code) = json(&[
        "locality",
        "--alpha",
        "0.3",
        "--cont",
        "t",
        "--cont",
        "1 + 2*(t-1)",
    ]);
    assert_eq!(code, 0);
}

#[test]
fn error_exit_codes() {
    let cases: [(&[&str], i32); 8] = [
        (&["deriv", "--fn", "sqrt(t", "--at", "1"], 2),
        (&["deriv", "--fn", "t +", "--at", "1"], 2),
        (&["deriv", "--fn", "piecewise(t, 1, t + 1)", "--at", "1"], 2),
        (&["deriv", "--fn", "t", "--at", "7"], 3),
        (&["deriv", "--fn", "t", "--at", "-1"], 3),
        (&["deriv", "--fn", "t", "--at", "1", "--alpha", "1.5"], 3),
        (
            &["check", "chain-b", "--f", "u", "--u", "4 - t", "--at", "1"],
            3,
        ),
        (
            &[
                "deriv",
                "--fn",
                "(sqrt(t)+relu(t-1))^2",
                "--at",
                "2",
                "--method",
                "symbolic",
            ],
            4,
        ),
    ];
    for (args, want) in cases {
        let out = fracrl(args);
        assert_eq!(out.status.code(), Some(want), "{args:?}");
        assert!(out.stdout.is_empty());
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    }
    // missing operand is a usage error
    assert_eq!(
        fracrl(&["check", "chain-a", "--f", "u^2", "--at", "1"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn output_is_deterministic() {
    for format in ["table", "json", "csv"] {
        for args in [
            vec!["reproduce"],
            vec!["deriv", "--fn", "(sqrt(t)+relu(t-1))^2", "--at", "2"],
            vec![
                "check", "leibniz", "--u", "sqrt(t)", "--v", "t", "--at", "1.5",
            ],
        ] {
            let mut all = vec!["--format", format];
            all.extend(args);
            let a = fracrl(&all);
            let b = fracrl(&all);
            assert_eq!(a.stdout, b.stdout, "{all:?}");
            assert_eq!(a.status.code(), b.status.code());
        }
    }
}

#[test]
fn json_round_trips() {
    for args in [
        vec!["reproduce"],
        vec!["deriv", "--fn", "t + pshift(1, 1, 0.3)", "--at", "1"],
        vec![
            "check",
            "chain-a",
            "--f",
            "sqrt(u) + relu(u-1)",
            "--u",
            "t^2",
            "--at",
            "1",
        ],
        vec!["locality", "--alpha", "0.7"],
    ] {
        let (doc, text, _) = json(&args);
        let again = serde_json::to_string_pretty(&doc).unwrap() + "\n";
        assert_eq!(again, text);
        let back: ReportDocument = serde_json::from_str(&again).unwrap();
        assert_eq!(back, doc);
    }
}

#[test]
fn csv_has_one_row_per_result() {
    let out = fracrl(&["--format", "csv", "reproduce"]);
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    assert_eq!(reader.headers().unwrap().get(0), Some("id"));
    let rows: Vec<_> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 6);
    assert_eq!(&rows[0][0], "CE1");
    let lhs: f64 = rows[0][2].parse().unwrap();
    assert!((lhs - FRAC_2_SQRT_PI).abs() < 1e-12);
}

#[test]
fn global_flags_are_echoed() {
    let (doc, _, _) = json(&[
        "deriv",
        "--fn",
        "t",
        "--at",
        "2",
        "--nodes",
        "32",
        "--domain-end",
        "8",
        "--tol",
        "1e-9",
    ]);
    assert_eq!(doc.config.nodes, 32);
    assert_eq!(doc.config.domain_end, 8.0);
    assert_eq!(doc.config.tol, 1e-9);
    let (_, _, code) = json(&["deriv", "--fn", "t", "--at", "6", "--domain-end", "8"]);
    assert_eq!(code, 0);
}
