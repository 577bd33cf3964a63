use std::process::Command;

fn bonus() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bonus"))
}

#[test]
fn simulate_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let outs: Vec<_> = ["a", "b"]
        .iter()
        .map(|sub| {
            let out = dir.path().join(sub);
            let status = bonus()
                .args(["simulate", "calibration", "--scale", "0.05", "--reps", "4", "--seed", "3", "--out"])
                .arg(&out)
                .output()
                .unwrap();
            assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
            out
        })
        .collect();
    for file in ["calibration.csv", "calibration.svg"] {
        let a = std::fs::read(outs[0].join(file)).unwrap();
        let b = std::fs::read(outs[1].join(file)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{file} differs between runs");
    }
}

#[test]
fn missing_input_exits_nonzero() {
    let out = bonus().args(["run", "definitely-missing.csv"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("definitely-missing.csv"));
}

#[test]
fn run_on_a_zscore_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("z.csv");
    let mut text = String::from("p1,p2,p3\n");
    let mut state: u64 = 7;
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    };
    for i in 0..400 {
        let boost = if i < 40 { 6.0 } else { 1.0 };
        let (a, b, c) = (next(), next(), next());
        text.push_str(&format!("{},{},{}\n", a * boost * 1.7, b * 1.7, c * 1.7));
    }
    std::fs::write(&path, text).unwrap();
    let out_dir = dir.path().join("res");
    let out = bonus()
        .args(["run", "--learner", "pca:1", "--alpha", "0.2", "--out"])
        .arg(&out_dir)
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rejected = std::fs::read_to_string(out_dir.join("rejected.csv")).unwrap();
    assert!(rejected.starts_with("row\n"));
}

#[test]
fn lemma_check_command() {
    let out = bonus().args(["lemma-check", "--a-max", "4", "--b-max", "4"]).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("violations: 0"));
}
