use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde::Serialize;

/// Writes `<command>_<label>.csv|json` into one directory and collects the
/// pass/fail outcome of every requested check.
pub struct Output {
    dir: PathBuf,
    command: &'static str,
    seed: u64,
    quiet: bool,
    checks: Vec<(String, bool)>,
}

/// `0.1` → `0.1`, `-1` → `m1`; keeps labels shell- and filename-friendly.
pub fn tag(x: impl Display) -> String {
    x.to_string()
        .chars()
        .map(|c| match c {
            '-' => 'm',
            ':' | ',' | '/' | ' ' => '_',
            c => c,
        })
        .collect()
}

impl Output {
    pub fn new(dir: &Path, command: &'static str, seed: u64, quiet: bool) -> anyhow::Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Output {
            dir: dir.to_path_buf(),
            command,
            seed,
            quiet,
            checks: Vec::new(),
        })
    }

    pub fn note(&self, msg: impl Display) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }

    fn write(&self, name: String, body: &str) -> anyhow::Result<PathBuf> {
        let path = self.dir.join(name);
        if path.exists() {
            self.note(format!("warning: overwriting {}", path.display()));
        }
        std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        self.note(format!("wrote {}", path.display()));
        Ok(path)
    }

    /// CSV with a leading `#` line carrying the command, seed and write time.
    pub fn csv(&self, label: &str, body: &str) -> anyhow::Result<PathBuf> {
        let stamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let text = format!(
            "# levy-bridge {} seed={} unix_time={stamp}\n{body}",
            self.command, self.seed
        );
        self.write(format!("{}_{label}.csv", self.command), &text)
    }

    pub fn json(&self, label: &str, value: &impl Serialize) -> anyhow::Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(format!("{}_{label}.json", self.command), &text)
    }

    pub fn check(&mut self, name: impl Into<String>, pass: bool) -> bool {
        let name = name.into();
        self.note(format!("{} {name}", if pass { "PASS" } else { "FAIL" }));
        self.checks.push((name, pass));
        pass
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags() {
        assert_eq!(tag(0.1), "0.1");
        assert_eq!(tag("box:-1,1,1"), "box_m1_1_1");
    }

    #[test]
    fn files_and_checks() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = Output::new(dir.path(), "kernel", 7, true).unwrap();
        let p = out.csv("a", "x,value\n0,1\n").unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("# levy-bridge kernel seed=7 "));
        assert!(text.ends_with("\nx,value\n0,1\n"));
        assert!(p.ends_with("kernel_a.csv"));
        out.check("one", true);
        assert!(out.all_pass());
        out.check("two", false);
        assert!(!out.all_pass());
    }
}
