//! Every `rlsgp ...` command shown in the repository README must execute
//! successfully.

use std::process::Command;

/// Splits a shell-ish command line, honouring double quotes.
fn split_args(line: &str) -> Vec<String> {
    let mut args = Vec::new();
    let mut current = String::new();
    let mut in_quotes = false;
    for ch in line.chars() {
        match ch {
            '"' => in_quotes = !in_quotes,
            c if c.is_whitespace() && !in_quotes => {
                if !current.is_empty() {
                    args.push(std::mem::take(&mut current));
                }
            }
            c => current.push(c),
        }
    }
    if !current.is_empty() {
        args.push(current);
    }
    args
}

fn readme_commands() -> Vec<Vec<String>> {
    let readme = include_str!("../../../README.md");
    let mut commands = Vec::new();
    let mut in_block = false;
    for line in readme.lines() {
        if line.trim_start().starts_with("```") {
            in_block = !in_block;
            continue;
        }
        if !in_block {
            continue;
        }
        let line = line.trim().trim_start_matches("$ ");
        if let Some(rest) = line.strip_prefix("rlsgp ") {
            commands.push(split_args(rest));
        }
    }
    commands
}

#[test]
fn every_readme_command_succeeds() {
    let commands = readme_commands();
    assert!(commands.len() >= 6, "README should document several commands");
    let workdir = tempfile::tempdir().unwrap();
    for args in commands {
        let display = args.join(" ");
        let out = Command::new(env!("CARGO_BIN_EXE_rlsgp"))
            .args(&args)
            .current_dir(workdir.path())
            .output()
            .expect("spawn rlsgp");
        assert!(
            out.status.success(),
            "README command failed: rlsgp {display}\nstderr: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}
