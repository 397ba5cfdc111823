use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn rnapars(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rnapars"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn three_structures(dir: &Path) -> String {
    write(dir, "s.txt", ">x\n((..))\n>y\n(....)\n>z\n......\n")
}

#[test]
fn distance_rows_and_metrics() {
    let dir = TempDir::new().unwrap();
    let same = write(dir.path(), "same.txt", ">a\n(..)..\n>b\n(..)..\n");
    for metric in ["rf", "il", "re", "bp"] {
        let out = rnapars(&["distance", "-s", &same, "--metric", metric]);
        assert!(out.status.success());
        assert_eq!(
            stdout(&out),
            format!("id1,id2,metric,value\na,b,{metric},0\n")
        );
    }
    let s = three_structures(dir.path());
    let out = rnapars(&[
        "distance",
        "-s",
        &s,
        "--metric",
        "il",
        "--pairs",
        "first-vs-rest",
    ]);
    assert_eq!(stdout(&out), "id1,id2,metric,value\nx,y,il,3\nx,z,il,4\n");

    let rf = stdout(&rnapars(&["distance", "-s", &s, "--metric", "rf"]));
    let bp = stdout(&rnapars(&["distance", "-s", &s, "--metric", "bp"]));
    assert_eq!(rf.replace(",rf,", ",bp,"), bp);
}

#[test]
fn median_command() {
    let dir = TempDir::new().unwrap();
    let s = three_structures(dir.path());
    let out = rnapars(&["median", "-s", &s, "--metric", "rf", "--constraint", "nc"]);
    assert_eq!(
        stdout(&out),
        "metric,constraint,mcost,dotbracket\nrf,nc,2,(....)\n"
    );

    let one = write(dir.path(), "one.txt", ">a\n(.(...).)\n");
    let out = rnapars(&["median", "-s", &one, "--metric", "il"]);
    assert_eq!(
        stdout(&out),
        "metric,constraint,mcost,dotbracket\nil,nc,0,(.(...).)\n"
    );

    let out = rnapars(&["median", "-s", &s, "--metric", "re"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("unsupported") && err.contains("open problem"),
        "{err}"
    );
}

#[test]
fn smallpars_command() {
    let dir = TempDir::new().unwrap();
    let s = write(dir.path(), "s.txt", ">x\n((..))\n>y\n((..))\n>z\n(....)\n");
    let t = write(dir.path(), "t.nwk", "((x,y),z);\n");
    let out = rnapars(&["smallpars", "-s", &s, "-t", &t]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("node_id,depth,num_base_pairs,dotbracket,spcost,spcost_per_edge\n"));
    assert!(text.contains("n0,0,1,(....),,\n"));
    assert!(text.ends_with("total,,,,1,0.25\n"), "{text}");

    let out = rnapars(&[
        "smallpars",
        "-s",
        &s,
        "-t",
        &t,
        "--metric",
        "re",
        "--solver",
        "leaf-restricted",
    ]);
    assert!(out.status.success());

    let out = rnapars(&[
        "smallpars",
        "-s",
        &s,
        "-t",
        &t,
        "--metric",
        "il",
        "--solver",
        "exact",
    ]);
    assert_eq!(out.status.code(), Some(2));

    let out = rnapars(&[
        "smallpars",
        "-s",
        &s,
        "-t",
        &t,
        "--metric",
        "il",
        "--constraint",
        "ilc",
        "--solver",
        "median-heuristic",
    ]);
    assert!(out.status.success());

    let bad = write(dir.path(), "bad.nwk", "((x,y),w);\n");
    let out = rnapars(&["smallpars", "-s", &s, "-t", &bad]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("z") && err.contains("w"), "{err}");
}

#[test]
fn sample_and_experiment() {
    let dir = TempDir::new().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for d in [&out_a, &out_b] {
        let out = rnapars(&[
            "sample",
            "--length",
            "100",
            "--theta",
            "3",
            "--height",
            "5",
            "--seed",
            "5",
            "--replicates",
            "2",
            "--outdir",
            d.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    let sa = fs::read_to_string(out_a.join("rep001/structures.txt")).unwrap();
    let sb = fs::read_to_string(out_b.join("rep001/structures.txt")).unwrap();
    assert_eq!(sa, sb);
    let records: Vec<&str> = sa.lines().filter(|l| !l.starts_with('>')).collect();
    assert_eq!(records.len(), 32);
    for r in records {
        let s: rnapars::SecondaryStructure = r.parse().unwrap();
        assert_eq!(s.len(), 100);
        assert!(s.satisfies_min_hairpin(3));
    }

    let args = [
        "experiment",
        "--dataset",
        out_a.to_str().unwrap(),
        "--no-timing",
    ];
    let first = stdout(&rnapars(&args));
    let second = stdout(&rnapars(&args));
    assert_eq!(first, second);
    assert!(
        first.starts_with("replicate,method,node_height,mean_bp,max_bp,spcost_per_edge,wall_ms\n")
    );
    // 2 replicates × 4 methods × 6 heights
    assert_eq!(first.lines().count(), 1 + 2 * 4 * 6);

    let out = rnapars(&[
        "experiment",
        "--methods",
        "",
        "--replicates",
        "1",
        "--length",
        "20",
        "--height",
        "1",
    ]);
    assert_eq!(
        stdout(&out),
        "replicate,method,node_height,mean_bp,max_bp,spcost_per_edge,wall_ms\n"
    );
}

#[test]
fn experiment_on_stockholm_family() {
    let dir = TempDir::new().unwrap();
    let fam = dir.path().join("RF0001");
    fs::create_dir(&fam).unwrap();
    write(
        &fam,
        "alignment.sto",
        "# STOCKHOLM 1.0\na GGAAACC\nb GCAAAGC\nc GAAAA-C\n#=GC SS_cons <<...>>\n//\n",
    );
    write(&fam, "tree.nwk", "((a,b),c);\n");
    let out = rnapars(&[
        "experiment",
        "--dataset",
        fam.to_str().unwrap(),
        "--methods",
        "rf_nc",
        "--no-timing",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    // Leaves keep one pair each after the gapped column is dropped.
    assert!(text.contains("RF0001,rf_nc,0,1,1,"), "{text}");
    assert!(String::from_utf8_lossy(&out.stderr).contains("RF0001: dropped 1 gapped column"));
}

#[test]
fn config_file_and_output_options() {
    let dir = TempDir::new().unwrap();
    let s = three_structures(dir.path());
    let cfg = write(
        dir.path(),
        "run.cfg",
        "# defaults\nmetric = il\npairs=first-vs-rest\n",
    );
    let out = rnapars(&["distance", "-s", &s, "--config", &cfg]);
    assert_eq!(stdout(&out), "id1,id2,metric,value\nx,y,il,3\nx,z,il,4\n");
    // Explicit flags win over the config file.
    let out = rnapars(&["distance", "-s", &s, "--config", &cfg, "--metric", "bp"]);
    assert_eq!(stdout(&out), "id1,id2,metric,value\nx,y,bp,1\nx,z,bp,2\n");

    let target = dir.path().join("o.json");
    let out = rnapars(&[
        "median",
        "-s",
        &s,
        "--json",
        "--out",
        target.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let json = fs::read_to_string(target).unwrap();
    assert!(json.contains("\"dotbracket\": \"(....)\""), "{json}");
}

#[test]
fn input_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let ragged = write(dir.path(), "r.txt", ">a\n((....))..\n>b\n((....)).\n");
    assert_eq!(rnapars(&["distance", "-s", &ragged]).status.code(), Some(2));
    let missing = dir.path().join("nope.txt");
    assert_eq!(
        rnapars(&["distance", "-s", missing.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        rnapars(&["distance", "--metric", "xx"]).status.code(),
        Some(2)
    );
    assert_eq!(rnapars(&["--help"]).status.code(), Some(0));
}

#[test]
fn hidden_oracle() {
    let out = rnapars(&["oracle", "structures", "--length", "3"]);
    assert_eq!(stdout(&out), "dotbracket\n().\n(.)\n.()\n...\n");
}
