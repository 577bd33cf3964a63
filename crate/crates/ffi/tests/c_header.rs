use std::path::PathBuf;
use std::process::Command;

#[test]
fn header_compiles_and_links() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let profile_dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).parent().unwrap().join(if cfg!(debug_assertions) {
        "debug"
    } else {
        "release"
    });
    let lib = [profile_dir.join("deps"), profile_dir.clone()]
        .iter()
        .map(|d| d.join("libbonus_ffi.a"))
        .find(|p| p.exists())
        .unwrap_or_else(|| panic!("no libbonus_ffi.a under {}", profile_dir.display()));
    let exe = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("bonus_smoke");
    let status = Command::new("cc")
        .arg(manifest.join("tests/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("a C compiler on PATH");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("rejected "));
}
