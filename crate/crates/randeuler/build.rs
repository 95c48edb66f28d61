use std::process::Command;

fn main() {
    // Version string for provenance blocks in JSON summaries.
    let describe = Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| format!("v{}", env!("CARGO_PKG_VERSION")));
    println!("cargo:rustc-env=RANDEULER_GIT_DESCRIBE={describe}");
    println!("cargo:rerun-if-changed=build.rs");
}
