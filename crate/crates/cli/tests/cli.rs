use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::Path;
use std::process::{Command, Output, Stdio};

const HELLO: &str = "M518x529S14c20481x471S27106503x489";
const HELLO_TOKENS: &str = "M p518 p529 S14c c2 r0 p481 p471 S271 c0 r6 p503 p489";

const CORPUS: &str = "\
4\t1\ten\tM518x529S14c20481x471S27106503x489\thello||hi
4\t2\ten\tM500x500\tcookie||biscuit
11\t3\ten\tM500x500 M500x500\thouse
16\t9\tes\tM500x500\tcasa||hogar||3
52\t1\tsl\tM500x500\tzdarma B (UPOL)
52\t2\tsl\tM510x517S29f0c491x484\tvprašaj
";

fn signbank(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_signbank"))
        .args(args)
        .env_remove("CHAT_API_KEY")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn tokenizes_hello_from_stdin() {
    let out = signbank(&["tokenize"], &format!("{HELLO}\n"));
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(stdout(&out), format!("{HELLO_TOKENS}\n"));
}

#[test]
fn empty_input_is_empty_output() {
    let out = signbank(&["tokenize"], "");
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "");
}

#[test]
fn malformed_line_is_reported_and_fails() {
    let out = signbank(&["tokenize"], &format!("{HELLO}\nM518x529S14c2\n{HELLO}\n"));
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
    assert_eq!(stdout(&out).lines().count(), 2);
}

#[test]
fn token_ids_decode_back() {
    let ids = signbank(&["tokenize", "--ids"], &format!("{HELLO}\n"));
    assert_eq!(stdout(&ids).split_whitespace().count(), 13);
    let back = signbank(&["detokenize"], &format!("{HELLO_TOKENS}\n"));
    assert_eq!(stdout(&back).trim(), HELLO);
    let vocab = signbank(&["vocab"], "");
    assert_eq!(stdout(&vocab).lines().count(), 1182);
}

#[test]
fn missing_paths_and_bad_settings_exit_2() {
    let out = signbank(&["rules", "--input", "/does/not/exist.tsv"], "");
    assert_eq!(code(&out), 2);
    let out = signbank(&["tokenize", "--strategy", "e9"], "");
    assert_eq!(code(&out), 2);
    let out = signbank(&["tokenize", "--no-such-flag"], "");
    assert_eq!(code(&out), 2);
}

#[test]
fn rules_annotate_and_log_every_entry() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "corpus.tsv", CORPUS);
    let log = dir.path().join("rules.jsonl");
    let out = signbank(
        &["rules", "--input", &input, "--rules-log", log.to_str().unwrap()],
        "",
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let log = fs::read_to_string(log).unwrap();
    assert_eq!(log.lines().count(), CORPUS.lines().count());
    assert!(log.contains(r#""rule_id":"slovene""#));
    let rows = stdout(&out);
    assert!(rows.contains("52\t1\tsl\tM500x500\tzdarma\n"), "{rows}");
    // the question-mark sign is dropped outright
    assert!(!rows.contains("52\t2"));
}

#[test]
fn rejected_rows_are_collected() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "corpus.tsv", &format!("{CORPUS}4\tx\ten\tM500x500\tbad id\n"));
    let rejects = dir.path().join("rejects.tsv");
    let out = signbank(&["validate", "--input", &input, "--rejects", rejects.to_str().unwrap()], "");
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains(":7:"), "{}", stderr(&out));
    let rejects = fs::read_to_string(rejects).unwrap();
    assert_eq!(rejects.lines().count(), 1);
    assert!(rejects.starts_with("7\t"));
}

fn sent_and_resumed(err: &str) -> (usize, usize) {
    let line = err.lines().find(|l| l.starts_with("requests sent:")).unwrap();
    let nums: Vec<usize> = line
        .split(|c: char| !c.is_ascii_digit())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().unwrap())
        .collect();
    (nums[0], nums[1])
}

#[test]
fn identity_clean_is_reproducible_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "corpus.tsv", CORPUS);
    let checkpoint = dir.path().join("clean.ckpt.jsonl");
    let ckpt = checkpoint.to_str().unwrap();
    let args = ["clean", "--backend", "identity", "--strategy", "e2", "--input", &input];

    let fresh = signbank(&args, "");
    assert_eq!(code(&fresh), 0, "{}", stderr(&fresh));
    assert_eq!(sent_and_resumed(&stderr(&fresh)), (6, 0));

    let mut with_ckpt = args.to_vec();
    with_ckpt.extend(["--checkpoint", ckpt, "--max-in-flight", "3"]);
    let first = signbank(&with_ckpt, "");
    assert_eq!(stdout(&first), stdout(&fresh));

    let kept: Vec<String> = fs::read_to_string(&checkpoint).unwrap().lines().take(2).map(|l| format!("{l}\n")).collect();
    assert_eq!(kept.len(), 2);
    fs::write(&checkpoint, kept.concat()).unwrap();
    let resumed = signbank(&with_ckpt, "");
    assert_eq!(code(&resumed), 0);
    assert_eq!(sent_and_resumed(&stderr(&resumed)), (4, 2));
    assert_eq!(stdout(&resumed), stdout(&fresh));
}

#[test]
fn e1_sends_nothing_and_e4_needs_gold() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "corpus.tsv", CORPUS);
    let e1 = signbank(&["clean", "--backend", "identity", "--strategy", "e1", "--input", &input], "");
    assert_eq!(sent_and_resumed(&stderr(&e1)), (0, 0));
    let e4 = signbank(&["clean", "--backend", "identity", "--strategy", "e4", "--input", &input], "");
    assert_eq!(code(&e4), 2);
    let gold = write(dir.path(), "gold.tsv", "4\t2\tCookie\n");
    let e4 = signbank(
        &["clean", "--backend", "identity", "--strategy", "e4", "--input", &input, "--gold", &gold],
        "",
    );
    assert_eq!(code(&e4), 0, "{}", stderr(&e4));
}

#[test]
fn estimate_only_prints_cost_without_credentials_or_writes() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "corpus.tsv", CORPUS);
    let target = dir.path().join("cleaned.tsv");
    let out = signbank(
        &[
            "clean", "--strategy", "e2", "--model", "gpt-4-0613", "--input", &input, "--out",
            target.to_str().unwrap(), "--estimate-only",
        ],
        "",
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("requests: 6"), "{text}");
    assert!(text.contains("$0.03 per 1K tokens"), "{text}");
    assert!(text.contains("estimated cost: $"));
    assert!(!target.exists());
}

#[test]
fn http_backend_without_credential_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "corpus.tsv", CORPUS);
    let out = signbank(&["clean", "--strategy", "e2", "--input", &input], "");
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("CHAT_API_KEY"));
}

/// Answers every connection with the same cleaned list and counts requests.
fn completion_server(n: usize) -> (String, std::thread::JoinHandle<Vec<String>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let base = format!("http://{}/v1", listener.local_addr().unwrap());
    let handle = std::thread::spawn(move || {
        let mut seen = Vec::new();
        for _ in 0..n {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream);
            let mut head = String::new();
            let mut length = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap();
                }
                head.push_str(&line);
                if line == "\r\n" {
                    break;
                }
            }
            let mut body = vec![0; length];
            reader.read_exact(&mut body).unwrap();
            let reply = r#"{"choices":[{"message":{"role":"assistant","content":"[\"Clean\"]"}}]}"#;
            write!(
                reader.into_inner(),
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
                reply.len()
            )
            .unwrap();
            seen.push(head);
        }
        seen
    });
    (base, handle)
}

#[test]
fn http_clean_reads_the_key_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "corpus.tsv", "4\t1\ten\tM500x500\thello\n4\t2\ten\tM500x500\tbye\n");
    let (base, server) = completion_server(2);
    let out = Command::new(env!("CARGO_BIN_EXE_signbank"))
        .args(["clean", "--strategy", "e2", "--max-in-flight", "1", "--api-base", &base, "--input", &input])
        .env("CHAT_API_KEY", "test-secret")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(stdout(&out), "4\t1\ten\tM500x500\tClean\n4\t2\ten\tM500x500\tClean\n");
    let heads = server.join().unwrap();
    assert_eq!(heads.len(), 2);
    assert!(heads.iter().all(|h| h.to_ascii_lowercase().contains("authorization: bearer test-secret")));
}

#[test]
fn dry_run_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "corpus.tsv", CORPUS);
    let out_dir = dir.path().join("out");
    let o = out_dir.to_str().unwrap();
    for args in [
        vec!["rules", "--input", &input, "--out", &format!("{o}/r.tsv"), "--rules-log", &format!("{o}/log")],
        vec!["clean", "--strategy", "e2", "--input", &input, "--checkpoint", &format!("{o}/ck"), "--out", &format!("{o}/c.tsv")],
        vec!["split", "--input", &input, "--dev-size", "1", "--out", o],
        vec!["export", "--input", &input, "--out", o],
    ] {
        let mut args = args.clone();
        args.push("--dry-run");
        let out = signbank(&args, "");
        assert_eq!(code(&out), 0, "{args:?}: {}", stderr(&out));
        assert!(!out_dir.exists(), "{args:?} wrote files");
    }
    assert!(!dir.path().join("out").exists());
}

#[test]
fn eval_iou_identical_sets_score_one() {
    let dir = tempfile::tempdir().unwrap();
    let gold = write(dir.path(), "gold.tsv", "4\t1\thello||hi\n4\t2\t\n11\t3\thouse\n");
    let out = signbank(&["eval-iou", "--input", &gold, "--gold", &gold, "--json"], "");
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["mean"], 1.0);
    assert_eq!(report["per_entry"].as_array().unwrap().len(), 3);

    let pred = write(dir.path(), "pred.tsv", "4\t1\thello\n4\t2\t\n11\t3\thome\n");
    let out = signbank(&["eval-iou", "--input", &pred, "--gold", &gold], "");
    let table = stdout(&out);
    // (1/2 + 1 + 0) / 3
    assert!(table.lines().last().unwrap().ends_with("0.5000"), "{table}");

    let short = write(dir.path(), "short.tsv", "4\t1\thello\n");
    let out = signbank(&["eval-iou", "--input", &short, "--gold", &gold], "");
    assert_eq!(code(&out), 1);
}

#[test]
fn split_then_export_matches_term_counts() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "corpus.tsv", CORPUS);
    let test_ids = write(dir.path(), "test_ids.tsv", "11\t3\n");
    let splits = dir.path().join("splits");
    let out = signbank(
        &["split", "--input", &input, "--test-ids", &test_ids, "--dev-size", "2", "--out", splits.to_str().unwrap()],
        "",
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let summary: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!((summary["train"].as_u64(), summary["dev"].as_u64(), summary["test"].as_u64()), (Some(3), Some(2), Some(1)));

    let export_dir = dir.path().join("export");
    let mut args = vec!["export", "--out", export_dir.to_str().unwrap()];
    let files: Vec<String> = ["train", "dev", "test"]
        .iter()
        .map(|s| splits.join(format!("{s}.tsv")).to_str().unwrap().to_string())
        .collect();
    for f in &files {
        args.extend(["--input", f.as_str()]);
    }
    let out = signbank(&args, "");
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(export_dir.join("manifest.json")).unwrap()).unwrap();
    let mut total = 0;
    for name in ["train", "dev", "test"] {
        let pairs = manifest["splits"][name]["pairs"].as_u64().unwrap() as usize;
        let source = fs::read_to_string(export_dir.join(format!("{name}.source.txt"))).unwrap();
        let target = fs::read_to_string(export_dir.join(format!("{name}.target.txt"))).unwrap();
        assert_eq!(source.lines().count(), pairs);
        assert_eq!(target.lines().count(), pairs);
        assert!(source.lines().all(|l| l.starts_with('$')));
        total += pairs;
    }
    // hello, hi, cookie, biscuit, house, casa, hogar, 3, zdarma B (UPOL), vprašaj
    assert_eq!(total, 10);
    // dev takes the first non-test entries in key order
    let dev = fs::read_to_string(export_dir.join("dev.source.txt")).unwrap();
    assert!(dev.starts_with(&format!("$ase $en {HELLO_TOKENS}\n")), "{dev}");
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "corpus.tsv", CORPUS);
    let config = write(
        dir.path(),
        "pipeline.toml",
        &format!("dev_size = 5\n[paths]\ninput = [{input:?}]\n"),
    );
    let splits = dir.path().join("s");
    let s = splits.to_str().unwrap();
    let from_config = signbank(&["split", "--config", &config, "--out", s], "");
    assert_eq!(code(&from_config), 0, "{}", stderr(&from_config));
    assert!(stdout(&from_config).contains(r#""dev":5"#));
    let overridden = signbank(&["split", "--config", &config, "--dev-size", "1", "--out", s], "");
    assert!(stdout(&overridden).contains(r#""dev":1"#));
    let broken = write(dir.path(), "broken.toml", "strategy = 4\n");
    assert_eq!(code(&signbank(&["vocab", "--config", &broken], "")), 2);
}
