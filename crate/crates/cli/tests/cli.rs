use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::thread;

use pkgraph::prompt::{KEY_DISCOVERY, TYPE_DESCRIPTION, TYPE_SUGGESTION, VALUE_EXTRACTION};
use serde_json::Value;

fn demo_corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/demo_corpus.jsonl")
}

fn pkgraph(args: &[&str]) -> Output {
    pkgraph_env(args, &[])
}

/// Run the binary with a clean model environment plus `env`.
fn pkgraph_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pkgraph"));
    for var in ["LLM_ENDPOINT", "LLM_MODEL", "LLM_API_KEY", "EMBED_ENDPOINT", "EMBED_MODEL", "EMBED_API_KEY"] {
        cmd.env_remove(var);
    }
    cmd.envs(env.iter().copied()).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn build_demo(out: &Path, extra: &[&str]) -> Output {
    let corpus = demo_corpus();
    let mut args = vec!["build", corpus.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    pkgraph(&args)
}

fn manifest(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn eval_types_prints_the_score() {
    let o = pkgraph(&["eval", "types", "--acc", "0.952", "--comp", "0.948", "--cov", "0.960"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).lines().next().unwrap().ends_with("0.953"), "{}", stdout(&o));

    let o = pkgraph(&["eval", "--json", "types", "--acc", "0.9", "--cov", "1", "--products", "323000", "--canonical-types", "16692"]);
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let comp = report["results"]["compression"].as_f64().unwrap();
    assert!((0.946..=0.950).contains(&comp));
    assert!(!report["conventions"].as_array().unwrap().is_empty());
}

#[test]
fn exit_codes() {
    let o = pkgraph(&["eval", "types", "--acc", "1.5", "--comp", "0.5", "--cov", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("outside"));

    let o = pkgraph(&["build", "/definitely/missing/corpus.jsonl"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/definitely/missing/corpus.jsonl"), "{}", stderr(&o));

    assert_eq!(pkgraph(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(pkgraph(&["build"]).status.code(), Some(2));
    assert_eq!(pkgraph(&["eval", "types", "--acc", "x", "--cov", "1"]).status.code(), Some(2));
    assert_eq!(pkgraph(&["--policy", "lenient", "eval", "kappa", "--a", "a", "--b", "b"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let o = pkgraph(&["inspect", "x", "--graph", dir.path().join("none.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = pkgraph(&["gen-corpus", "--types", "0", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_corpus_line_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.jsonl");
    std::fs::write(&corpus, "{\"id\":\"a\",\"title\":\"x\"}\nnot json\n").unwrap();
    let o = pkgraph(&["build", corpus.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn inspect_by_name_and_id_agree() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    assert_eq!(build_demo(out, &[]).status.code(), Some(0));

    let by_name = pkgraph(&["inspect", "Pen Mouse", "--out", out.to_str().unwrap()]);
    assert_eq!(by_name.status.code(), Some(0), "{}", stderr(&by_name));
    let text = stdout(&by_name);
    let keys_at = text.find("HasKey ->").expect(&text);
    let brand_at = text.find("AttributeKey \"Brand\"").expect(&text);
    assert!(brand_at > keys_at);

    let id = text.split_whitespace().next().unwrap();
    let by_id = pkgraph(&["inspect", id, "--out", out.to_str().unwrap()]);
    assert_eq!(stdout(&by_id), text);

    let missing = pkgraph(&["inspect", "No Such Thing", "--out", out.to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(1));

    // the value "Acme" and its typing key
    let acme = stdout(&pkgraph(&["inspect", "acme", "--kind", "value", "--out", out.to_str().unwrap()]));
    assert!(acme.contains("<- HasValue (1)"), "{acme}");
}

#[test]
fn builds_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(build_demo(a.path(), &[]).status.code(), Some(0));
    assert_eq!(build_demo(b.path(), &["--workers", "1"]).status.code(), Some(0));
    for f in ["graph.json", "edges.jsonl", "report.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn manifest_records_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let o = build_demo(out, &["--policy", "strict", "--no-images", "--k", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = manifest(out);
    let p = &m["config"]["pipeline"];
    assert_eq!(p["policy"], "strict");
    assert_eq!(p["use_images"], false);
    assert_eq!(p["k"], 5);
    assert_eq!(m["backends"]["kgd"], "rule@0.92/strict");
    assert_eq!(m["prompts"].as_object().unwrap().len(), 8);
    let corpus = std::fs::read(demo_corpus()).unwrap();
    assert_eq!(m["corpus"]["sha256"], pkgraph_cli::build::sha256_hex(&corpus));
    assert!(m["started_at"].as_str().unwrap() <= m["finished_at"].as_str().unwrap());
    for f in ["graph", "report", "edges"] {
        assert!(Path::new(m["outputs"][f].as_str().unwrap()).exists());
    }
}

#[test]
fn config_file_env_and_flags_layer() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("pkgraph.toml");
    std::fs::write(&cfg, "policy = \"strict\"\nworkers = 2\nbackend = \"llm\"\n[llm]\nmodel = \"from-file\"\n").unwrap();
    let corpus = demo_corpus();
    let out = dir.path().join("o");
    let args = |extra: &[&'static str]| -> Vec<String> {
        let mut v: Vec<String> = ["--config", cfg.to_str().unwrap(), "build", corpus.to_str().unwrap(), "--out", out.to_str().unwrap()]
            .iter()
            .map(|s| s.to_string())
            .collect();
        v.extend(extra.iter().map(|s| s.to_string()));
        v
    };

    // the file asks for the llm backend without an endpoint
    let a = args(&[]);
    let o = pkgraph(&a.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("LLM_ENDPOINT"));

    // flags override the file
    let a = args(&["--backend", "rule", "--policy", "basic"]);
    let o = pkgraph_env(&a.iter().map(String::as_str).collect::<Vec<_>>(), &[("LLM_MODEL", "from-env")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = manifest(&out);
    assert_eq!(m["config"]["pipeline"]["policy"], "basic");
    assert_eq!(m["config"]["pipeline"]["workers"], 2);
    assert_eq!(m["config"]["llm"]["model"], "from-env");
}

#[test]
fn gen_corpus_then_score_build() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = pkgraph(&["gen-corpus", "--listings", "80", "--types", "8", "--seed", "3", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let corpus = dir.path().join("corpus.jsonl");
    let o = pkgraph(&["build", corpus.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(0));
    let edges = dir.path().join("edges.jsonl");
    let truth = dir.path().join("truth.jsonl");
    let o = pkgraph(&["eval", "--json", "edges", "--predicted", edges.to_str().unwrap(), "--reference", truth.to_str().unwrap()]);
    let r: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["inputs"]["shared_products"], 80);
    assert_eq!(r["results"]["values"]["f1"], 1.0);
}

#[test]
fn label_metrics_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p.to_str().unwrap().to_string()
    };
    let a = write("a.json", "[\"yes\", \"no\", \"yes\", \"yes\"]");
    let b = write("b.json", "[\"yes\", \"no\", \"no\", \"yes\"]");
    let o = pkgraph(&["eval", "kappa", "--a", &a, "--b", &b]);
    assert_eq!(stdout(&o).trim(), "kappa 0.500");
    let short = write("s.json", "[\"yes\"]");
    assert_eq!(pkgraph(&["eval", "kappa", "--a", &a, "--b", &short]).status.code(), Some(1));
    let broken = write("x.json", "{not json");
    assert_eq!(pkgraph(&["eval", "kappa", "--a", &a, "--b", &broken]).status.code(), Some(2));

    let panel = write(
        "panel.json",
        r#"{"j1": ["a","b","c"], "j2": ["a","b","d"], "j3": ["a","b","e"], "j4": ["a","c","f"], "j5": ["b","c","g"]}"#,
    );
    let cand = write("cand.json", r#"{"m": ["a","b","z"]}"#);
    let o = pkgraph(&["eval", "--json", "consensus", "--panel", &panel, "--candidates", &cand]);
    let r: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["results"]["consensus"], serde_json::json!(["a", "b", null]));
    assert_eq!(r["results"]["candidate_accuracy"]["m"], 1.0);

    let keysets = write("k.json", r#"{"m1": ["Brand", "Color"], "m2": ["Brand"]}"#);
    let priors = write("p.json", r#"{"m1": 0.5, "m2": 0.5}"#);
    let o = pkgraph(&["eval", "--json", "keys", "--keysets", &keysets, "--priors", &priors]);
    let r: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((r["results"]["gt_hat"].as_f64().unwrap() - 1.25).abs() < 1e-12);
    let no_prior = write("p2.json", r#"{"m1": 0.5}"#);
    assert_eq!(pkgraph(&["eval", "keys", "--keysets", &keysets, "--priors", &no_prior]).status.code(), Some(1));

    // --out also stores the full report
    let out = dir.path().join("reports");
    pkgraph(&["eval", "kappa", "--a", &a, "--b", &b, "--out", out.to_str().unwrap()]);
    assert!(out.join("eval_kappa.json").exists());
}

// --- model backend against a local chat server

fn quoted_after<'a>(text: &'a str, marker: &str) -> Vec<&'a str> {
    text.match_indices(marker)
        .filter_map(|(i, _)| {
            let rest = &text[i + marker.len()..];
            rest.find('\'').map(|end| &rest[..end])
        })
        .collect()
}

/// Plays every agent role. Decisions merge into a neighbour with the same
/// name, otherwise add.
fn answer(prompt: &str) -> String {
    let starts = |t: &str| prompt.starts_with(&t[..40]);
    if starts(TYPE_SUGGESTION.text) {
        "Pen Mouse".into()
    } else if starts(TYPE_DESCRIPTION.text) {
        "A pen shaped pointing device.".into()
    } else if starts(KEY_DISCOVERY.text) {
        "| Attribute Name | Description | Examples |\n|---|---|---|\n| Brand | Maker | Wacom |\n| Color | Body color | Black |\n".into()
    } else if starts(VALUE_EXTRACTION.text) {
        let id = |name: &str| {
            prompt
                .lines()
                .find(|l| l.contains(&format!("| {name} |")))
                .and_then(|l| l.trim_matches('|').split('|').next())
                .map(|s| s.trim().to_string())
                .unwrap()
        };
        format!("{{\"{}\": \"Wacom\", \"{}\": \"Black\"}}", id("Brand"), id("Color"))
    } else {
        let candidate = quoted_after(prompt, "{'node_name': '");
        let ids: Vec<&str> = prompt
            .match_indices("{'node_id': ")
            .map(|(i, _)| {
                let rest = &prompt[i + 12..];
                &rest[..rest.find(',').unwrap()]
            })
            .collect();
        let names = quoted_after(prompt, ", 'node_name': '");
        match ids.iter().zip(&names).find(|(_, n)| candidate.first() == Some(*n)) {
            Some((id, _)) => format!("MERGE {id}"),
            None => "ADD".into(),
        }
    }
}

fn chat_server() -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    thread::spawn(move || {
        for stream in listener.incoming() {
            let stream = stream.unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap() == 0 || line == "\r\n" {
                    break;
                }
                if let Some((k, v)) = line.split_once(':') {
                    if k.eq_ignore_ascii_case("content-length") {
                        len = v.trim().parse().unwrap();
                    }
                }
            }
            let mut body = vec![0; len];
            reader.read_exact(&mut body).unwrap();
            let req: Value = serde_json::from_slice(&body).unwrap();
            let prompt = req["messages"][0]["content"][0]["text"].as_str().unwrap();
            let reply = serde_json::json!({"choices": [{"message": {"content": answer(prompt)}}]}).to_string();
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
                reply.len()
            )
            .unwrap();
        }
    });
    url
}

#[test]
fn llm_backend_build_through_http() {
    let url = chat_server();
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.jsonl");
    std::fs::write(
        &corpus,
        "{\"id\":\"a\",\"title\":\"Wacom pen mouse black\"}\n{\"id\":\"b\",\"title\":\"Another Wacom pen mouse\"}\n",
    )
    .unwrap();
    let out = dir.path().join("o");
    let o = pkgraph_env(
        &["build", corpus.to_str().unwrap(), "--backend", "llm", "--out", out.to_str().unwrap()],
        &[("LLM_ENDPOINT", url.as_str())],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("assigned 2  types 1"), "{}", stdout(&o));
    let m = manifest(&out);
    assert_eq!(m["backends"]["kgd"], "llm:Qwen3-30B-A3B-Instruct-2507/basic");
    assert_eq!(m["backends"]["values"], "llm:Qwen3-VL-8B");
    let edges = std::fs::read_to_string(out.join("edges.jsonl")).unwrap();
    assert_eq!(edges.lines().count(), 2);
    assert!(edges.lines().all(|l| l.contains("[\"Brand\",\"Wacom\"]") && l.contains("[\"Color\",\"Black\"]")), "{edges}");
    let shown = stdout(&pkgraph(&["inspect", "Wacom", "--out", out.to_str().unwrap()]));
    assert!(shown.contains("<- HasAttribute (2)"), "{shown}");
}
