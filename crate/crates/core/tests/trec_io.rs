use listrank_core::eval::{format_qrels, format_run, parse_qrels, parse_run, EvalError, RunEntry};

const QRELS: &str = "\
q1 0 d1 2
q1 0 d7 0
q2 0 a 1
q2 0 b 3
";

const RUN: &str = "\
q1 Q0 d7 1 12.5 bm25
q1 Q0 d1 2 3 bm25
q1 Q0 d9 3 -0.25 bm25
q2 Q0 b 1 0.1 bm25
q2 Q0 a 2 0.1 bm25
";

#[test]
fn canonical_files_round_trip_byte_for_byte() {
    assert_eq!(format_qrels(&parse_qrels(QRELS, true).unwrap()), QRELS);
    assert_eq!(format_run(&parse_run(RUN).unwrap()), RUN);
}

#[test]
fn field_mapping() {
    let q = parse_qrels("q1 0 d7 2\n", true).unwrap();
    assert_eq!(q.grade("q1", "d7"), Some(2));
    let r = parse_run(RUN).unwrap();
    assert_eq!(
        r[2],
        RunEntry {
            query_id: "q1".into(),
            doc_id: "d9".into(),
            rank: 3,
            score: -0.25,
            tag: "bm25".into(),
        }
    );
}

fn line_of(err: EvalError) -> usize {
    match err {
        EvalError::MalformedLine { line, .. } | EvalError::InvariantViolation { line, .. } => line,
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn malformed_lines_carry_line_numbers() {
    let bad_qrels = "q1 0 d1 2\n\nq1 0 d2\n";
    assert_eq!(line_of(parse_qrels(bad_qrels, false).unwrap_err()), 3);
    assert_eq!(line_of(parse_qrels("q1 0 d1 -1\n", false).unwrap_err()), 1);
    assert_eq!(
        line_of(parse_qrels("q 0 d 1\nq 0 d 2\n", true).unwrap_err()),
        2
    );
    assert!(parse_qrels("q 0 d 1\nq 0 d 2\n", false).is_ok());

    let cases = [
        ("q Q0 a 1 1.0 t\nq Q0 b 3 0.5 t\n", 2),
        ("q Q0 a 1 1.0 t\nq Q0 b two 0.5 t\n", 2),
        ("q Q0 a 1 1.0 t\nq Q0 b 2 2.0 t\n", 2),
        ("q Q0 a 1 1.0 t\nq Q0 a 2 0.5 t\n", 2),
        ("q Q0 a 1 1.0\n", 1),
        ("q Q0 a 1 nan t\n", 1),
    ];
    for (text, line) in cases {
        assert_eq!(line_of(parse_run(text).unwrap_err()), line, "{text:?}");
    }
}
