use std::path::Path;
use std::process::{Command, Output};

fn hmd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hmd")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn compress_then_check_with_oracle() {
    let dir = tempfile::tempdir().unwrap();
    for (input, scheme) in [("random:40x33", "hmd"), ("random:40x33", "lmf"), ("random-cell:9x6", "csr"), ("random-cell:9x6", "hmd")] {
        let file = dir.path().join(format!("{scheme}.hmdc"));
        let out = hmd(&["compress", "--in", input, "--scheme", scheme, "--factor", "2", "--out", path(&file)]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let out = hmd(&["check", "--a", path(&file), "--oracle"]);
        assert_eq!(code(&out), 0);
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(text.contains(&format!("={scheme}")), "{text}");
        assert!(text.contains("oracle: pass"), "{text}");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out_file = dir.path().join("x.hmdc");
    let out = path(&out_file);

    assert_eq!(code(&hmd(&["--help"])), 0);
    assert_eq!(code(&hmd(&[])), 1);
    assert_eq!(code(&hmd(&["bench", "cell"])), 1);
    assert_eq!(code(&hmd(&["compress", "--in", "random:4x4", "--scheme", "dense", "--factor", "2", "--out", out])), 1);
    assert_eq!(code(&hmd(&["compress", "--in", "random:4x4", "--scheme", "hmd", "--factor", "100", "--out", out])), 2);
    assert_eq!(code(&hmd(&["compress", "--in", "random:10x10", "--scheme", "lmf", "--factor", "50", "--out", out])), 2);
    assert!(!out_file.exists());

    let bad = dir.path().join("bad.hmdc");
    std::fs::write(&bad, b"HMDC0\0\0\0garbage garbage").unwrap();
    assert_eq!(code(&hmd(&["check", "--a", path(&bad)])), 3);

    let good = dir.path().join("good.hmdc");
    hmd(&["compress", "--in", "random:8x8", "--scheme", "csr", "--factor", "2", "--out", path(&good)]);
    let bytes = std::fs::read(&good).unwrap();
    std::fs::write(&bad, &bytes[..bytes.len() - 8]).unwrap();
    assert_eq!(code(&hmd(&["check", "--a", path(&bad)])), 3);
    assert_eq!(code(&hmd(&["compress", "--in", path(&good), "--scheme", "hmd", "--factor", "2", "--out", out])), 1);
}

#[test]
fn bench_and_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let csv_file = dir.path().join("bench.csv");
    let out = hmd(&[
        "bench", "matvec", "--dims", "64x48", "--schemes", "hmd,csr", "--factors", "2,40", "--warmup", "0", "--iters", "3",
        "--out", path(&csv_file),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv_file).unwrap();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 5);
    assert_eq!(&rows[0][0], "dense");
    // hmd cannot reach 40x on this shape; its measured fields stay empty
    let infeasible = rows.iter().find(|r| &r[0] == "hmd" && &r[1] == "40").unwrap();
    assert!(infeasible.iter().skip(2).all(str::is_empty));

    let out = hmd(&["report", "--in", path(&csv_file), "--format", "csv"]);
    assert_eq!(code(&out), 0);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), text);
    let out = hmd(&["report", "--in", path(&csv_file)]);
    assert!(String::from_utf8(out.stdout).unwrap().contains("infeasible"));

    std::fs::write(&csv_file, "not,a,report\n1,2,3\n").unwrap();
    assert_eq!(code(&hmd(&["report", "--in", path(&csv_file)])), 3);
}
