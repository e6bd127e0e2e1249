#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn corpus_small_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/corpus-small")
}

pub fn git(dir: &Path, args: &[&str], epoch: i64) {
    let date = format!("@{epoch} +0000");
    let out = Command::new("git")
        .arg("-C")
        .arg(dir)
        .args(args)
        .env("GIT_AUTHOR_NAME", "fixture")
        .env("GIT_AUTHOR_EMAIL", "fixture@example.invalid")
        .env("GIT_COMMITTER_NAME", "fixture")
        .env("GIT_COMMITTER_EMAIL", "fixture@example.invalid")
        .env("GIT_AUTHOR_DATE", &date)
        .env("GIT_COMMITTER_DATE", &date)
        .env("GIT_CONFIG_NOSYSTEM", "1")
        .env("HOME", dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "git {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn copy_dir(from: &Path, to: &Path) {
    for entry in std::fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let dst = to.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            std::fs::create_dir_all(&dst).unwrap();
            copy_dir(&entry.path(), &dst);
        } else {
            std::fs::copy(entry.path(), dst).unwrap();
        }
    }
}

fn commit_and_tag(dir: &Path, tag: &str, epoch: i64) {
    git(dir, &["add", "-A"], epoch);
    git(
        dir,
        &["commit", "--quiet", "--allow-empty", "-m", tag],
        epoch,
    );
    git(dir, &["tag", tag], epoch);
}

/// corpus-small at `v1`; `v2` adds one directory with one function and
/// removes `lib/__init__.py`.
pub fn corpus_repo(dir: &Path) {
    git(dir, &["init", "--quiet", "-b", "main"], 1_600_000_000);
    copy_dir(&corpus_small_dir(), dir);
    commit_and_tag(dir, "v1", 1_600_000_000);
    std::fs::create_dir_all(dir.join("tools")).unwrap();
    std::fs::write(dir.join("tools/cli.py"), "def run():\n    return 0\n").unwrap();
    std::fs::remove_file(dir.join("lib/__init__.py")).unwrap();
    commit_and_tag(dir, "v2", 1_600_003_600);
}

fn write_files(dir: &Path, files: &[(&str, &str)]) {
    for (path, body) in files {
        let p = dir.join(path);
        std::fs::create_dir_all(p.parent().unwrap()).unwrap();
        std::fs::write(p, body).unwrap();
    }
}

/// Two releases whose directory-view diff is known by hand.
pub fn diff_repo(dir: &Path) {
    git(dir, &["init", "--quiet", "-b", "main"], 1_600_000_000);
    write_files(
        dir,
        &[
            ("a.py", "def f():\n    return 1\n"),
            ("pkg/b.py", "def g():\n    return 2\n"),
            ("pkg/old.py", "VALUE = 3\n"),
        ],
    );
    commit_and_tag(dir, "v1", 1_600_000_000);
    write_files(
        dir,
        &[
            ("newdir/c.py", "def k():\n    return 4\n"),
            ("pkg/d.py", "VALUE = 5\n"),
        ],
    );
    std::fs::remove_file(dir.join("pkg/old.py")).unwrap();
    commit_and_tag(dir, "v2", 1_600_003_600);
}

/// A project without classes at tag `v1`.
pub fn classless_repo(dir: &Path) {
    git(dir, &["init", "--quiet", "-b", "main"], 1_600_000_000);
    std::fs::write(dir.join("a.py"), "def f():\n    pass\n").unwrap();
    commit_and_tag(dir, "v1", 1_600_000_000);
}

pub struct Run {
    pub code: i32,
    pub stdout: Vec<u8>,
    pub stderr: String,
}

impl Run {
    pub fn json(&self) -> serde_json::Value {
        serde_json::from_slice(&self.stdout).unwrap_or_else(|e| {
            panic!(
                "stdout is not json ({e}): {}",
                String::from_utf8_lossy(&self.stdout)
            )
        })
    }

    pub fn text(&self) -> String {
        String::from_utf8_lossy(&self.stdout).into_owned()
    }
}

pub fn archdelta(cache: &Path, args: &[&str]) -> Run {
    let out: Output = Command::new(env!("CARGO_BIN_EXE_archdelta"))
        .args(args)
        .env("ARCHDELTA_CACHE", cache)
        .env_remove("RUST_LOG")
        .output()
        .unwrap();
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: out.stdout,
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}
