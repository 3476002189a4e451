use std::process::{Command, Output};

fn ptcm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ptcm")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn encode_prints_ranks_and_amplitudes() {
    let o = ptcm(&["encode", "--bits", "1011"]);
    assert!(o.status.success());
    let text = stdout(&o);
    // (7,5) outputs 11 10 00 01 then tail 01 11 on natural 4-ASK labels.
    assert!(text.contains("ranks 3 2 0 1 1 3"), "{text}");
    assert!(text.lines().any(|l| l.starts_with("amplitudes ")));
}

#[test]
fn sweep_writes_csv_with_fixed_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.cfg");
    let out = dir.path().join("r.csv");
    std::fs::write(&cfg, "decoder.list = va, rsse:1\nsim.snr_db = 6, 8\nsim.max_bits = 4000\n").unwrap();
    let o = ptcm(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "sweep"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "decoder,snr_db,bits,errors,ber,states_full,states_reduced,seconds");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("va,6,"));
    assert!(lines[4].starts_with("rsse:1,8,"));
}

#[test]
fn ber_honours_decoder_and_profile_flags() {
    let o = ptcm(&["--decoder", "rsse", "--profile", "2", "--seed", "3", "ber", "--snr", "inf"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let row = text.lines().nth(1).unwrap();
    let cols: Vec<&str> = row.split(',').collect();
    assert_eq!(cols[0], "rsse:2");
    assert_eq!(cols[3], "0");
    assert_eq!((cols[5], cols[6]), ("16", "8"));
}

#[test]
fn complexity_reports_reduction() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.cfg");
    std::fs::write(&cfg, "channel.preset = three-tap\ndecoder.list = va, rsse:2/1\n").unwrap();
    let o = ptcm(&["--config", cfg.to_str().unwrap(), "complexity"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.starts_with("va,64,64,")));
    assert!(text.lines().any(|l| l.starts_with("rsse:2/1,64,8,") && l.ends_with(",8")), "{text}");
}

#[test]
fn selftest_passes() {
    let o = ptcm(&["selftest", "--trials", "50"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("PASS")).count(), 3);
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "sim.colour = blue\n").unwrap();
    assert_eq!(ptcm(&["--config", cfg.to_str().unwrap(), "ber"]).status.code(), Some(2));
    assert_eq!(ptcm(&["--profile", "2,4", "--config", "/dev/null", "ber"]).status.code(), Some(2));
    assert_eq!(ptcm(&["--config", "/nonexistent/ptcm.cfg", "sweep"]).status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_with_3() {
    assert_eq!(ptcm(&["encode", "--bits", "10x1"]).status.code(), Some(3));
    let o = ptcm(&["--out", "/nonexistent/dir/r.csv", "ber", "--snr", "inf"]);
    assert_eq!(o.status.code(), Some(3));
}
