use std::process::{Command, Output};

use serde_json::Value;

fn argred(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_argred")).args(args).env("ARGRED_THREADS", "2").output().expect("spawn argred")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(args: &[&str]) -> Value {
    let mut all = args.to_vec();
    all.push("--json");
    let o = argred(&all);
    serde_json::from_str(&stdout(&o)).unwrap_or_else(|e| panic!("{e}: {}", stdout(&o)))
}

fn golden() -> Vec<(String, String, String, String)> {
    let mut out = Vec::new();
    for text in [include_str!("../../core/tests/golden/pi.txt"), include_str!("../../core/tests/golden/ln2.txt")] {
        for line in text.lines().filter(|l| !l.starts_with('#')) {
            let mut p = line.splitn(4, ' ').map(str::to_string);
            out.push((p.next().unwrap(), p.next().unwrap(), p.next().unwrap(), p.next().unwrap()));
        }
    }
    out
}

#[test]
fn all_tables_match_the_golden_files() {
    let v = json(&["constants", "--all"]);
    let records = v["constants"].as_array().unwrap();
    assert_eq!(records.len(), 8);
    for (constant, format, name, value) in golden() {
        let rec = records
            .iter()
            .find(|r| r["constant"] == constant.as_str() && r["precision"] == format.as_str())
            .unwrap_or_else(|| panic!("no record for {constant} {format}"));
        assert_eq!(rec[name.as_str()], value.as_str(), "{constant} {format} {name}");
    }
}

#[test]
fn double_pi_table_text() {
    let o = argred(&["constants", "--const", "pi", "--format", "double"]);
    assert!(o.status.success());
    let s = stdout(&o);
    for want in ["5734161139222659 * 2^-54", "7074237752028440 * 2^-51", "4967757600021504 * 2^-105", "7744522442262976 * 2^-155"] {
        assert!(s.contains(want), "{s}");
    }
}

#[test]
fn quad_ln2_table_json() {
    let v = json(&["constants", "--const", "ln2", "--format", "quad"]);
    let rec = &v["constants"][0];
    assert_eq!(rec["R"], "7490900928631539394323262730195514 * 2^-112");
    assert_eq!(rec["C3"], "-9437982846677142208552339635087788 * 2^-338");
}

#[test]
fn three_trailing_zero_bits() {
    let v = json(&["constants", "--const", "pi", "--format", "double", "--q", "3", "--audit"]);
    let c1 = v["constants"][0]["C1"].as_str().unwrap();
    let m: u64 = c1.split(" * ").next().unwrap().parse().unwrap();
    assert_eq!(m.trailing_zeros() >= 3, true, "{c1}");
    assert!(v["audits"][0]["items"].as_array().unwrap().iter().any(|i| i["theorem"] == "appendix"));
    let o = argred(&["constants", "--const", "pi", "--format", "double", "--q", "3", "--audit"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn reduce_ten_by_pi() {
    let v = json(&["reduce", "--x", "10.0", "--const", "pi", "--format", "double", "--N", "0"]);
    let r = &v["reduction"];
    assert_eq!(r["z"], "6755399441055744 * 2^-51");
    assert_eq!(r["exact_first"], true);
    assert_eq!(r["exact_second"], true);
    assert_eq!(r["rounding_ops_second"], 9);
}

#[test]
fn reduce_zero() {
    let v = json(&["reduce", "--x", "0"]);
    for k in ["z", "u", "v1", "v2", "w"] {
        assert!(v["reduction"][k].as_str().unwrap().starts_with("0 "), "{k}: {v}");
    }
}

#[test]
fn huge_argument_is_a_range_error() {
    let o = argred(&["reduce", "--x", "1e300", "--const", "pi", "--format", "double"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("|xR| <= 2^{p-N-2} - 2^{-N}"), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["reduce", "--x", "1", "--format", "binary7"][..],
        &["constants", "--p", "8"],
        &["verify", "--theorem", "thm99"],
        &["verify", "--theorem", "eft", "--exhaustive"],
    ] {
        let o = argred(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        assert!(stdout(&o).is_empty(), "{args:?}");
    }
}

#[test]
fn verify_examples_pass() {
    for args in [
        &["verify", "--theorem", "sterbenz2", "--beta", "2", "--p1", "6", "--p2", "3", "--exhaustive"][..],
        &["verify", "--theorem", "correct3", "--p", "8", "--exhaustive"],
        &["verify", "--theorem", "thm6", "--format", "double", "--const", "pi", "--trials", "20000", "--seed", "42"],
    ] {
        let o = argred(args);
        assert!(o.status.success(), "{args:?}: {}{}", stdout(&o), stderr(&o));
        assert!(stdout(&o).trim_end().ends_with("pass"), "{}", stdout(&o));
    }
}

#[test]
fn failed_audit_exits_one_naming_the_hypothesis() {
    let o = argred(&["constants", "--const", "pi", "--format", "single", "--q", "8", "--audit"]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stderr(&o).contains("audit failed: single / appendix: R C1 <= 1"), "{}", stderr(&o));
    assert!(stdout(&o).contains("overall: FAIL"));
}

#[test]
fn result_header_replays_the_run() {
    for args in [
        &["verify", "--theorem", "thm3", "--p", "6", "--N", "0,2", "--window", "5", "--exhaustive", "--ties", "away"][..],
        &["verify", "--theorem", "correct1", "--p", "6", "--q", "2,3", "--no-underflow-tight"],
        &["verify", "--theorem", "thm6", "--format", "single", "--const", "ln2", "--N", "3", "--trials", "300", "--seed", "4"],
        &["verify", "--theorem", "sterbenz", "--beta", "3", "--p", "3", "--window", "4"],
        &["verify", "--theorem", "thm7", "--p", "8", "--e-min-q", "-100", "--e-max", "100", "--trials", "50"],
    ] {
        let first = stdout(&argred(args));
        let header = first.lines().next().unwrap();
        let flags = &header[header.find('[').unwrap() + 1..header.find(']').unwrap()];
        let mut again = vec!["verify"];
        again.extend(flags.split(' '));
        let second = stdout(&argred(&again));
        assert_eq!(first, second, "{args:?} vs {again:?}");
    }
}

#[test]
fn single_case_replay_line_runs() {
    let o = argred(&["verify", "--theorem", "eft", "--format", "double", "--x", "3", "--y", "1 * 2^-60"]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    let words = split_shell("argred verify --theorem thm6 --format double --const 'ln2' --N 5 --x '7010 * 2^-6'");
    let o = argred(&words[1..].iter().map(String::as_str).collect::<Vec<_>>());
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("1 cases"), "{}", stdout(&o));
}

/// Splits a replay line on spaces, keeping single-quoted words together.
fn split_shell(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    for ch in s.chars() {
        match ch {
            '\'' => quoted = !quoted,
            ' ' if !quoted => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

#[test]
fn json_values_reparse() {
    let v = json(&["constants", "--const", "ln2", "--format", "single"]);
    let rec = &v["constants"][0];
    for k in ["R", "C1", "C2", "C3"] {
        let s = rec[k].as_str().unwrap();
        let o = argred(&["reduce", "--x", s, "--format", "single"]);
        assert!(o.status.success() || stderr(&o).contains("out of range"), "{k} = {s}: {}", stderr(&o));
        assert!(!stderr(&o).contains("rounded"), "{s} should parse exactly");
    }
    let cfg = json(&["verify", "--theorem", "eft", "--trials", "100"]);
    assert_eq!(cfg["config"]["mode"]["kind"], "randomized");
    assert_eq!(cfg["cases"], 100);
}

#[test]
fn identical_seed_gives_identical_output() {
    let args = ["verify", "--theorem", "thm6", "--format", "single", "--const", "ln2", "--N", "0,3", "--trials", "5000", "--seed", "9", "--json"];
    let a = argred(&args);
    let b = Command::new(env!("CARGO_BIN_EXE_argred")).args(args).env("ARGRED_THREADS", "1").output().unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn demo_finds_a_witness() {
    let o = argred(&["demo-codywaite"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("witness: x ="), "{}", stdout(&o));
    let v = json(&["demo-codywaite", "--const", "ln2", "--format", "single", "--N", "2"]);
    assert!(v["witness"].is_number());
}
