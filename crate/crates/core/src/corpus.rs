//! Labelled program collections.
//!
//! A corpus is a directory of `*.prog` (or `*.ts`) files; `name.label`
//! next to `name.prog` holds `NT` (non-terminating) or `T` (terminating).

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::prove::{load_file, prove, Answer, ProveOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Label {
    #[serde(rename = "NT")]
    NonTerminating,
    #[serde(rename = "T")]
    Terminating,
}

impl Label {
    pub fn parse(s: &str) -> Option<Label> {
        match s.trim() {
            "NT" => Some(Label::NonTerminating),
            "T" => Some(Label::Terminating),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CorpusRow {
    pub name: String,
    pub label: Option<Label>,
    pub answer: Option<Answer>,
    /// `check (c,d,D)` of the proving attempt.
    pub proved_by: Option<String>,
    pub attempts: usize,
    pub seconds: f64,
    pub error: Option<String>,
}

impl CorpusRow {
    /// `NO` on a program labelled terminating.
    pub fn unsound(&self) -> bool {
        self.label == Some(Label::Terminating) && self.answer == Some(Answer::No)
    }
}

/// Program files of a corpus directory, sorted by name.
pub fn corpus_files(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("prog") | Some("ts")))
        .collect();
    out.sort();
    Ok(out)
}

pub fn read_label(program: &Path) -> Option<Label> {
    std::fs::read_to_string(program.with_extension("label")).ok().and_then(|s| Label::parse(&s))
}

pub fn run_file(path: &Path, opts: &ProveOptions) -> CorpusRow {
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let label = read_label(path);
    match load_file(path) {
        Err(e) => CorpusRow { name, label, answer: None, proved_by: None, attempts: 0, seconds: 0.0, error: Some(e.to_string()) },
        Ok(ts) => {
            let r = prove(&ts, opts);
            let proved_by = r.proving_attempt().map(|a| format!("{} ({},{},{})", a.check, a.c, a.d, a.deg));
            CorpusRow {
                name,
                label,
                answer: Some(r.answer.clone()),
                proved_by,
                attempts: r.attempts.len(),
                seconds: r.seconds,
                error: None,
            }
        }
    }
}

pub fn run_corpus(dir: &Path, opts: &ProveOptions) -> std::io::Result<Vec<CorpusRow>> {
    Ok(corpus_files(dir)?.iter().map(|p| run_file(p, opts)).collect())
}

pub fn to_csv(rows: &[CorpusRow]) -> String {
    let mut s = String::from("name,label,answer,proved_by,attempts,seconds,error\n");
    for r in rows {
        let label = match r.label {
            Some(Label::NonTerminating) => "NT",
            Some(Label::Terminating) => "T",
            None => "",
        };
        let answer = r.answer.as_ref().map(|a| a.to_string()).unwrap_or_default();
        let quote = |x: &str| format!("\"{}\"", x.replace('"', "\"\""));
        s.push_str(&format!(
            "{},{},{},{},{},{:.3},{}\n",
            r.name,
            label,
            answer,
            quote(r.proved_by.as_deref().unwrap_or("")),
            r.attempts,
            r.seconds,
            quote(r.error.as_deref().unwrap_or(""))
        ));
    }
    s
}
