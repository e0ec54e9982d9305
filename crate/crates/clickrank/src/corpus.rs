//! Loading documents and stopword lists from disk.
//!
//! A corpus is either a directory of UTF-8 `.txt` files (file stem is the
//! doc id, first line the title, the rest the body) or a JSON manifest: an
//! array of `{doc_id, uri, title, body}` objects.

use std::fs;
use std::path::{Path, PathBuf};

use clickrank_core::index::{CorpusIndex, Document, IndexError};
use clickrank_core::text::StopwordList;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("bad manifest {path}: {source}")]
    Manifest { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    Index(#[from] IndexError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io { path: path.into(), source }
}

/// Documents from a `.txt` directory, sorted by doc id.
pub fn load_dir(dir: &Path) -> Result<Vec<Document>, CorpusError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "txt"))
        .collect();
    paths.sort();
    paths.iter().map(|p| load_txt(p)).collect()
}

fn load_txt(path: &Path) -> Result<Document, CorpusError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let (title, body) = match text.split_once('\n') {
        Some((t, b)) => (t.trim_end_matches('\r').trim(), b),
        None => (text.trim(), ""),
    };
    let abs = fs::canonicalize(path).map_err(io_err(path))?;
    Ok(Document {
        doc_id: path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
        uri: format!("file://{}", abs.display()),
        title: title.to_string(),
        body: body.to_string(),
    })
}

pub fn load_manifest(path: &Path) -> Result<Vec<Document>, CorpusError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| CorpusError::Manifest { path: path.into(), source })
}

pub fn save_manifest(path: &Path, docs: &[Document]) -> Result<(), CorpusError> {
    let json = serde_json::to_vec_pretty(docs).expect("documents serialize");
    fs::write(path, json).map_err(io_err(path))
}

/// A directory is read as `.txt` files, anything else as a manifest.
pub fn load(path: &Path) -> Result<Vec<Document>, CorpusError> {
    if path.is_dir() {
        load_dir(path)
    } else {
        load_manifest(path)
    }
}

pub fn build_index(docs: Vec<Document>, stopwords: &StopwordList, k: usize) -> Result<CorpusIndex, CorpusError> {
    let mut index = CorpusIndex::new(k);
    for doc in docs {
        index.ingest(doc, stopwords)?;
    }
    Ok(index)
}

/// The default stopword list, extended with the words of `path` (one per
/// line, `#` comments) when given.
pub fn load_stopwords(path: Option<&Path>) -> Result<StopwordList, CorpusError> {
    let Some(path) = path else {
        return Ok(StopwordList::default());
    };
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let extra = text.lines().map(|l| l.split('#').next().unwrap_or("").trim()).filter(|l| !l.is_empty());
    let base = StopwordList::default();
    Ok(StopwordList::from_terms(base.iter().chain(extra)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn txt_directory() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("b.txt"), "Bank cards\ncard card atm\n").unwrap();
        fs::write(dir.path().join("a.txt"), "Only a title").unwrap();
        fs::write(dir.path().join("skip.md"), "not a doc").unwrap();
        let docs = load_dir(dir.path()).unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[0].doc_id, "a");
        assert_eq!(docs[0].body, "");
        assert_eq!(docs[1].title, "Bank cards");
        assert_eq!(docs[1].body, "card card atm\n");
        assert!(docs[1].uri.starts_with("file://"));
    }

    #[test]
    fn manifest_round_trip_and_index() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.json");
        let docs = vec![Document {
            doc_id: "d".into(),
            uri: "https://example.org/d".into(),
            title: "D".into(),
            body: "card card atm".into(),
        }];
        save_manifest(&path, &docs).unwrap();
        let back = load(&path).unwrap();
        assert_eq!(back, docs);
        let idx = build_index(back, &StopwordList::default(), 10).unwrap();
        assert_eq!(idx.match_query(&["atm"]).unwrap().len(), 1);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let doc = Document { doc_id: "d".into(), uri: "u".into(), title: "t".into(), body: "x".into() };
        let err = build_index(vec![doc.clone(), doc], &StopwordList::default(), 10).unwrap_err();
        assert!(matches!(err, CorpusError::Index(IndexError::DuplicateDocument(_))));
    }

    #[test]
    fn stopword_file_extends_default() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stop.txt");
        fs::write(&path, "# extra\nCard\n\n").unwrap();
        let list = load_stopwords(Some(&path)).unwrap();
        assert!(list.contains("card"));
        assert!(list.contains("the"));
        assert!(list.contains("because"));
    }
}
