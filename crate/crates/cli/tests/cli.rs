use std::path::Path;
use std::process::{Command, Output};

fn run(cache: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_supertr"))
        .args(args)
        .env("SUPERTR_CACHE_DIR", cache)
        .output()
        .expect("binary runs")
}

fn s(v: &[String]) -> Vec<&str> {
    v.iter().map(|x| x.as_str()).collect()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

#[test]
fn compute_airy_chi3() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("a.json");
    let o = run(&d.path().join("c"), &["compute", "--curve", "airy", "--chi-max", "3", "--engine", "both", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = supertr_cli::results::ResultFile::parse(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let vals: Vec<_> = r.entries.iter().map(|e| (e.g, e.bos.clone(), e.fer.clone(), e.value.as_str())).collect();
    assert_eq!(vals, vec![(0, vec![1], vec![0, 2], "1/2"), (0, vec![1, 1, 1], vec![], "-1"), (1, vec![3], vec![], "-1/4")]);
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let c = d.path().join("c");
    assert_eq!(code(&run(&c, &["compute", "--curve", "airy", "--chi-max", "2"])), 2);
    assert_eq!(code(&run(&c, &["compute", "--curve", "nonesuch"])), 2);
    let spec = d.path().join("s.json");
    std::fs::write(&spec, r#"{"name": "s", "epsilon": 3, "tau": {"3": "1"}, "trunc": 6}"#).unwrap();
    assert_eq!(code(&run(&c, &["compute", "--curve", spec.to_str().unwrap(), "--chi-max", "5"])), 3);
    std::fs::write(&spec, r#"{"name": "s", "epsilon": 3, "tau": {"3": "1.5"}, "trunc": 6}"#).unwrap();
    assert_eq!(code(&run(&c, &["compute", "--curve", spec.to_str().unwrap(), "--chi-max", "3"])), 2);
    assert_eq!(code(&run(&c, &["verify-algebra", "--degree", "1", "--mode-range", "1", "--corrupt-central"])), 4);
}

#[test]
fn cache_round_trip() {
    let d = tempfile::tempdir().unwrap();
    let c = d.path().join("c");
    let a = d.path().join("a.json");
    let b = d.path().join("b.json");
    let args = |p: &Path| vec!["compute".to_string(), "--curve".into(), "phi11".into(), "--chi-max".into(), "4".into(), "--out".into(), p.to_str().unwrap().into()];
    assert_eq!(code(&run(&c, &s(&args(&a)))), 0);
    let entries: Vec<_> = std::fs::read_dir(&c).unwrap().collect();
    assert_eq!(entries.len(), 2);
    assert_eq!(code(&run(&c, &s(&args(&b)))), 0);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    // corrupt the cached body: evicted and recomputed with identical bytes
    let json = std::fs::read_dir(&c).unwrap().map(|e| e.unwrap().path()).find(|p| p.extension().unwrap() == "json").unwrap();
    std::fs::write(&json, "{}").unwrap();
    let o = run(&c, &s(&args(&b)));
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("evicted"));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let mut nc = args(&b);
    nc.push("--no-cache".into());
    assert_eq!(code(&run(&c, &s(&nc))), 0);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    // different parameter, different hash
    let mut t2 = args(&b);
    t2.extend(["--param".to_string(), "t=2".into()]);
    assert_eq!(code(&run(&c, &s(&t2))), 0);
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(std::fs::read_dir(&c).unwrap().count(), 4);
}

#[test]
fn crosscheck_and_curves() {
    let d = tempfile::tempdir().unwrap();
    let c = d.path().join("c");
    for args in [
        vec!["crosscheck", "--curve", "airy", "--chi-max", "6"],
        vec!["crosscheck", "--curve", "ramond", "--chi-max", "5"],
        vec!["crosscheck", "--curve", "random", "--param", "seed=11", "--chi-max", "6"],
        vec!["verify-curve", "--curve", "ramond", "--trunc", "12"],
        vec!["verify-algebra", "--degree", "1", "--mode-range", "1"],
        vec!["list-curves"],
    ] {
        let o = run(&c, &args);
        assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn export_csv() {
    let d = tempfile::tempdir().unwrap();
    let c = d.path().join("c");
    let a = d.path().join("a.json");
    let csv = d.path().join("a.csv");
    assert_eq!(code(&run(&c, &["compute", "--curve", "airy", "--chi-max", "4", "--out", a.to_str().unwrap()])), 0);
    let o = run(&c, &["export", "--input", a.to_str().unwrap(), "--csv", "--out", csv.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("g,bos,fer,value\n"));
    assert!(text.contains("\n0,1 1 1 3,,3\n"));
}
