use std::fs;

use wordfiber::cli::{run_with, EXIT_BUDGET, EXIT_OK, EXIT_USAGE};

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("wordfiber").chain(args.iter().copied());
    let code = run_with(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn body(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn dist_commutator_on_s3() {
    let (code, out, _) = run(&["dist", "--group", "S:3", "--word", "[x1,x2]"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("# seed=0"));
    assert!(out.contains("# wordfiber version="));
    let rows = body(&out);
    assert_eq!(
        rows[0],
        "group,word,n,class_rep,class_size,count,total,probability_decimal"
    );
    let identity: Vec<&str> = rows[1].split(',').collect();
    assert_eq!(identity[3], "1;2;3");
    assert_eq!(identity[5], "18");
    assert_eq!(identity[6], "36");
}

#[test]
fn genprob_and_words_examples() {
    let (code, out, _) = run(&["genprob", "--p", "2", "--n", "2", "--r", "2"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(body(&out)[1], "2,2,2,3/8,3/8,true");

    let (code, out, _) = run(&["words", "--n", "2", "--max-len", "2", "--count-only"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(body(&out), vec!["count", "16"]);

    let (_, out, _) = run(&["words", "--n", "2", "--max-len", "1"]);
    assert_eq!(
        body(&out)[1..],
        ["0,x1,1", "1,x1^-1,1", "2,x2,1", "3,x2^-1,1"]
    );

    let (_, out, _) = run(&["words", "--word", "x1 x1 [x1,x2]"]);
    assert_eq!(body(&out)[1], "x1 x2^-1 x1 x2,4,2,x2^-1 x1^-1 x2 x1^-1");
}

#[test]
fn exit_codes() {
    let (code, _, err) = run(&[
        "dist", "--group", "S:8", "--word", "[x1,x2]", "--budget", "1000",
    ]);
    assert_eq!(code, EXIT_BUDGET);
    assert!(err.contains("budget exceeded"));

    let (code, _, err) = run(&["dist", "--group", "S:3", "--word", "x1 ^"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("position"));

    assert_eq!(run(&["nonsense"]).0, EXIT_USAGE);
    assert_eq!(run(&["dist", "--group", "S:3"]).0, EXIT_USAGE);
    assert_eq!(
        run(&["dist", "--group", "S:3", "--word", "x1", "--budget", "0"]).0,
        EXIT_USAGE
    );
    assert_eq!(
        run(&["genprob", "--p", "2", "--n", "2", "--r", "3"]).0,
        EXIT_USAGE
    );
    assert_eq!(run(&["free", "--p", "2"]).0, EXIT_USAGE);
    assert_eq!(run(&["--help"]).0, EXIT_OK);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "# sweep member\ncommand = mc\ngroup = S:4\nword = [x1,x2]\ntrials = 2000\nseed = 5\n",
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();

    let (code, from_file, _) = run(&["--config", cfg]);
    assert_eq!(code, EXIT_OK);
    let (_, explicit, _) = run(&[
        "mc", "--group", "S:4", "--word", "[x1,x2]", "--trials", "2000", "--seed", "5",
    ]);
    assert_eq!(from_file, explicit);

    let (_, overridden, _) = run(&["mc", "--config", cfg, "--seed", "6"]);
    assert!(overridden.contains("# seed=6"));
    assert!(body(&overridden)[1].ends_with(",6"));
}

#[test]
fn out_file_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dist.json");
    let (code, out, _) = run(&[
        "dist",
        "--group",
        "D:5",
        "--word",
        "x1^2",
        "--format",
        "json",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    assert!(out.is_empty());
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["metadata"]["seed"], 0);
    assert_eq!(doc["metadata"]["config"]["group"], "D:5");
    assert_eq!(doc["report"]["prob_identity"], "3/5");
}

#[test]
fn output_independent_of_thread_count() {
    for args in [
        vec![
            "mc", "--group", "SL:2:5", "--word", "x1^2", "--trials", "20000", "--seed", "3",
        ],
        vec![
            "free",
            "--p",
            "3",
            "--levels",
            "3",
            "--max-len",
            "4",
            "--trials",
            "60",
            "--seed",
            "9",
        ],
        vec![
            "scan", "--family", "D", "--params", "3..9", "--word", "x1^2",
        ],
    ] {
        let mut one = args.clone();
        one.extend(["--threads", "1"]);
        let mut four = args.clone();
        four.extend(["--threads", "4"]);
        let (c1, a, _) = run(&one);
        let (c4, b, _) = run(&four);
        assert_eq!((c1, c4), (EXIT_OK, EXIT_OK));
        assert_eq!(a, b, "{args:?}");
    }
}

#[test]
fn scan_reports_verdict_and_member_errors() {
    let (code, out, _) = run(&[
        "scan", "--family", "SL2", "--params", "3,4,5,7", "--word", "x1^2",
    ]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("# member_error param=4"));
    assert!(out.contains("# verdict=decaying"));
    assert!(out.contains("sampled_infimum="));
    assert_eq!(body(&out).len(), 4);
}

#[test]
fn coset_and_free_reports() {
    let (code, out, _) = run(&[
        "coset",
        "--group",
        "D:12",
        "--subgroup-gens",
        "r1",
        "--reps",
        "r0s",
        "--word",
        "x1^2",
    ]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(body(&out)[1], "D:12,x1^2,12,2,r0s,true,");

    let (_, out, _) = run(&[
        "coset",
        "--group",
        "D:12",
        "--subgroup-gens",
        "r1",
        "--reps",
        "r0",
        "--word",
        "x1^2",
    ]);
    assert_eq!(body(&out)[1], "D:12,x1^2,12,2,r0,false,r1");

    let (code, out, _) = run(&[
        "free",
        "--p",
        "3",
        "--levels",
        "2",
        "--max-len",
        "2",
        "--trials",
        "5",
    ]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("# certified_scope=words of length <= 2 in 2 generators; levels 1..=2"));
    assert_eq!(body(&out).len(), 1 + 5 * 2);
}
