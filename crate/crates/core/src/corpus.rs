//! The example programs shipped with the checker and their expected
//! verdicts.

use std::path::{Path, PathBuf};

use crate::lang::Pos;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expected {
    Safe,
    Unsafe,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusCase {
    pub path: PathBuf,
    pub verdict: Expected,
    /// Line and column of the first diagnostic, for unsafe cases.
    pub location: Option<(u32, u32)>,
    pub section: String,
}

impl CorpusCase {
    pub fn name(&self) -> String {
        self.path.file_stem().map(|s| s.to_string_lossy().to_string()).unwrap_or_default()
    }

    pub fn at(&self, p: Pos) -> bool {
        self.location == Some((p.line, p.col))
    }
}

struct Row {
    path: String,
    verdict: String,
    location: String,
    section: String,
}

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn parse_location(s: &str) -> Result<Option<(u32, u32)>, String> {
    if s == "-" || s.is_empty() {
        return Ok(None);
    }
    let (l, c) = s.split_once(':').ok_or_else(|| format!("bad location `{s}`"))?;
    let l = l.parse().map_err(|_| format!("bad line in `{s}`"))?;
    let c = c.parse().map_err(|_| format!("bad column in `{s}`"))?;
    Ok(Some((l, c)))
}

/// Read a tab-separated manifest: path, verdict, location, section.
/// Paths are relative to the manifest's directory.
pub fn read_manifest(path: &Path) -> Result<Vec<CorpusCase>, String> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut rd = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .has_headers(true)
        .from_path(path)
        .map_err(|e| format!("{}: {e}", path.display()))?;
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| format!("{}: {e}", path.display()))?;
        let field = |i: usize| rec.get(i).unwrap_or("").trim().to_string();
        let row = Row { path: field(0), verdict: field(1), location: field(2), section: field(3) };
        let verdict = match row.verdict.as_str() {
            "SAFE" => Expected::Safe,
            "UNSAFE" => Expected::Unsafe,
            v => return Err(format!("{}: unknown verdict `{v}`", path.display())),
        };
        let location = parse_location(&row.location)?;
        if verdict == Expected::Unsafe && location.is_none() {
            return Err(format!("{}: unsafe case `{}` has no location", path.display(), row.path));
        }
        out.push(CorpusCase { path: dir.join(&row.path), verdict, location, section: row.section });
    }
    Ok(out)
}

pub fn corpus_manifest() -> Vec<CorpusCase> {
    read_manifest(&corpus_dir().join("manifest.tsv")).expect("corpus manifest")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lists_every_file() {
        let cases = corpus_manifest();
        assert!(cases.len() >= 11);
        for c in &cases {
            assert!(c.path.is_file(), "{}", c.path.display());
        }
        let unsafe_: Vec<String> =
            cases.iter().filter(|c| c.verdict == Expected::Unsafe).map(|c| c.name()).collect();
        assert_eq!(unsafe_, vec!["head_client_unsafe", "quicksort_weak_join", "avl_insert_node_only"]);
    }

    #[test]
    fn locations_parse() {
        assert_eq!(parse_location("14:12").unwrap(), Some((14, 12)));
        assert_eq!(parse_location("-").unwrap(), None);
        assert!(parse_location("x").is_err());
    }
}
