use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn pilotwave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pilotwave"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("small.toml");
    fs::write(&cfg, "[ensemble]\nn = 60\nt1 = 1.0\ncheckpoints = 2\n").unwrap();
    let run = |dir: &str, threads: &str| {
        let out = tmp.path().join(dir);
        let o = pilotwave(&[
            "figures",
            "fig3",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "11",
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let a = csv_files(&run("a", "1"));
    let b = csv_files(&run("b", "2"));
    assert_eq!(a.len(), 4);
    assert_eq!(a, b);

    let first = run("c", "1");
    let manifest = fs::read(first.join("manifest.json")).unwrap();
    run("c", "1");
    assert_eq!(manifest, fs::read(first.join("manifest.json")).unwrap());
}

#[test]
fn usage_errors_exit_with_2() {
    assert_eq!(code(&pilotwave(&[])), 2);
    assert_eq!(code(&pilotwave(&["no-such-scenario"])), 2);
    assert_eq!(code(&pilotwave(&["figures", "fig9"])), 2);
    assert_eq!(code(&pilotwave(&["selftest", "--criterion", "14"])), 2);
}

#[test]
fn config_errors_exit_with_2_and_name_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "[trajectory]\nq0 = [0.5]\nt1 = = 4\n").unwrap();
    let o = pilotwave(&["trajectory", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn failed_check_exits_with_1_only_when_strict() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("loose.toml");
    // Without the 2/x^2 allowance the acceleration does go negative.
    fs::write(&cfg, "[grid]\nnx = 40\nnt = 20\nb_check = 0.0\n").unwrap();
    let out = tmp.path().join("o");
    let args = ["asymptotic-bound", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    assert_eq!(code(&pilotwave(&args)), 0);
    let mut strict = args.to_vec();
    strict.push("--strict");
    assert_eq!(code(&pilotwave(&strict)), 1);
    let manifest = fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"passed\": false"));
}

#[test]
fn start_on_a_node_is_a_numerical_abort() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("node.toml");
    fs::write(&cfg, "[state]\nterms = [[1, 1.0, 0.0]]\n[trajectory]\nq0 = [0.0]\n").unwrap();
    let o = pilotwave(&["trajectory", "--config", cfg.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn describe_prints_presets() {
    let o = pilotwave(&["describe", "--preset", "fig4"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("kind = \"hydrogen\""));
    assert!(code(&pilotwave(&["describe", "--preset", "fig7"])) == 2);
}
