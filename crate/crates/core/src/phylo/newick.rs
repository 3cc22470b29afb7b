//! Newick reading and writing.
//!
//! Branch lengths, internal node labels and `[...]` comments are accepted and
//! dropped. Labels may be quoted with single quotes (`''` escapes a quote).

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use super::tree::{PhyloTree, Taxon, TreeKind};
use crate::error::{MafError, Result};

/// Parsed Newick structure before taxa are assigned.
#[derive(Debug)]
struct RawTree {
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    label: Vec<Option<String>>,
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(MafError::Parse { pos: self.pos, msg: msg.into() })
    }

    fn skip_ws(&mut self) -> Result<()> {
        loop {
            match self.src.get(self.pos) {
                Some(c) if c.is_ascii_whitespace() => self.pos += 1,
                Some(b'[') => {
                    let start = self.pos;
                    while self.pos < self.src.len() && self.src[self.pos] != b']' {
                        self.pos += 1;
                    }
                    if self.pos == self.src.len() {
                        self.pos = start;
                        return self.err("unterminated comment");
                    }
                    self.pos += 1;
                }
                _ => return Ok(()),
            }
        }
    }

    fn peek(&mut self) -> Result<Option<u8>> {
        self.skip_ws()?;
        Ok(self.src.get(self.pos).copied())
    }

    fn label(&mut self) -> Result<Option<String>> {
        match self.peek()? {
            Some(b'\'') => {
                self.pos += 1;
                let mut out = Vec::new();
                loop {
                    match self.src.get(self.pos) {
                        None => return self.err("unterminated quoted label"),
                        Some(b'\'') if self.src.get(self.pos + 1) == Some(&b'\'') => {
                            out.push(b'\'');
                            self.pos += 2;
                        }
                        Some(b'\'') => {
                            self.pos += 1;
                            break;
                        }
                        Some(&c) => {
                            out.push(c);
                            self.pos += 1;
                        }
                    }
                }
                match String::from_utf8(out) {
                    Ok(s) => Ok(Some(s)),
                    Err(_) => self.err("label is not valid UTF-8"),
                }
            }
            _ => {
                let start = self.pos;
                while let Some(&c) = self.src.get(self.pos) {
                    if c.is_ascii_whitespace() || b"(),:;[]'".contains(&c) {
                        break;
                    }
                    self.pos += 1;
                }
                if start == self.pos {
                    return Ok(None);
                }
                match std::str::from_utf8(&self.src[start..self.pos]) {
                    Ok(s) => Ok(Some(s.to_string())),
                    Err(_) => self.err("label is not valid UTF-8"),
                }
            }
        }
    }

    fn branch_length(&mut self) -> Result<()> {
        if self.peek()? == Some(b':') {
            self.pos += 1;
            self.skip_ws()?;
            let start = self.pos;
            while let Some(&c) = self.src.get(self.pos) {
                if c.is_ascii_digit() || b"+-.eE".contains(&c) {
                    self.pos += 1;
                } else {
                    break;
                }
            }
            let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
            if text.parse::<f64>().is_err() {
                self.pos = start;
                return self.err("malformed branch length");
            }
        }
        Ok(())
    }

    fn subtree(&mut self, raw: &mut RawTree, parent: Option<usize>) -> Result<usize> {
        let id = raw.parent.len();
        raw.parent.push(parent);
        raw.children.push(Vec::new());
        raw.label.push(None);
        if let Some(p) = parent {
            raw.children[p].push(id);
        }
        if self.peek()? == Some(b'(') {
            self.pos += 1;
            loop {
                self.subtree(raw, Some(id))?;
                match self.peek()? {
                    Some(b',') => self.pos += 1,
                    Some(b')') => {
                        self.pos += 1;
                        break;
                    }
                    Some(_) => return self.err("expected ',' or ')'"),
                    None => return self.err("unbalanced parentheses"),
                }
            }
            // internal labels are dropped
            self.label()?;
        } else {
            match self.label()? {
                Some(l) => raw.label[id] = Some(l),
                None => match self.peek()? {
                    Some(b')') | Some(b',') | Some(b':') | Some(b';') | None => {}
                    Some(_) => return self.err("unexpected character"),
                },
            }
            if raw.label[id].as_deref().is_none_or(str::is_empty) {
                return Err(MafError::EmptyLabel);
            }
        }
        self.branch_length()?;
        Ok(id)
    }

    fn tree(mut self) -> Result<RawTree> {
        let mut raw = RawTree { parent: Vec::new(), children: Vec::new(), label: Vec::new() };
        self.subtree(&mut raw, None)?;
        match self.peek()? {
            Some(b';') => self.pos += 1,
            Some(b')') => return self.err("unbalanced parentheses"),
            Some(_) => return self.err("expected ';'"),
            None => return self.err("missing terminating ';'"),
        }
        if self.peek()?.is_some() {
            return self.err("trailing text after ';'");
        }
        Ok(raw)
    }
}

impl RawTree {
    fn parse(text: &str) -> Result<RawTree> {
        Parser { src: text.as_bytes(), pos: 0 }.tree()
    }

    fn check_degrees(&self, kind: TreeKind) -> Result<()> {
        for (v, kids) in self.children.iter().enumerate() {
            let d = kids.len();
            if d == 0 {
                continue;
            }
            let ok = match (self.parent[v], kind) {
                (None, TreeKind::Rooted) => d == 2,
                (None, TreeKind::Unrooted) => d == 2 || d == 3,
                (Some(_), _) => d == 2,
            };
            if !ok {
                let what = if self.parent[v].is_none() { "root" } else { "internal node" };
                return Err(MafError::Degree(format!("{} with {} children", what, d)));
            }
        }
        Ok(())
    }

    fn leaf_labels(&self) -> Result<Vec<String>> {
        let mut out: Vec<String> = self
            .label
            .iter()
            .zip(&self.children)
            .filter(|(_, c)| c.is_empty())
            .map(|(l, _)| l.clone().ok_or(MafError::EmptyLabel))
            .collect::<Result<_>>()?;
        out.sort();
        for w in out.windows(2) {
            if w[0] == w[1] {
                return Err(MafError::DuplicateLabel(w[0].clone()));
            }
        }
        Ok(out)
    }

    fn build(&self, kind: TreeKind, labels: Arc<[String]>) -> Result<PhyloTree> {
        let index: HashMap<&str, Taxon> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        let taxon: Vec<Option<Taxon>> = self
            .label
            .iter()
            .zip(&self.children)
            .map(|(l, c)| if c.is_empty() { l.as_deref().and_then(|l| index.get(l).copied()) } else { None })
            .collect();
        PhyloTree::from_graph(
            kind,
            labels,
            self.parent.len(),
            |v| self.parent[v].into_iter().chain(self.children[v].iter().copied()),
            &|v| taxon[v],
            &|_| true,
            Some(0),
        )
    }
}

/// Parse one tree; its taxa are numbered by the sorted order of its labels.
pub fn parse_newick(text: &str, kind: TreeKind) -> Result<PhyloTree> {
    let raw = RawTree::parse(text)?;
    raw.check_degrees(kind)?;
    let labels: Arc<[String]> = raw.leaf_labels()?.into();
    raw.build(kind, labels)
}

/// Parse two trees that must carry the same label set; the pair shares one
/// label universe.
pub fn parse_pair(first: &str, second: &str, kind: TreeKind) -> Result<(PhyloTree, PhyloTree)> {
    let r1 = RawTree::parse(first)?;
    let r2 = RawTree::parse(second)?;
    r1.check_degrees(kind)?;
    r2.check_degrees(kind)?;
    let l1 = r1.leaf_labels()?;
    let l2 = r2.leaf_labels()?;
    if l1 != l2 {
        return Err(MafError::TaxaMismatch);
    }
    let labels: Arc<[String]> = l1.into();
    Ok((r1.build(kind, labels.clone())?, r2.build(kind, labels)?))
}

/// Tree strings from a text file: one per line, blank lines and lines
/// starting with `#` skipped.
pub fn read_tree_lines(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path)?;
    Ok(tree_lines(&text))
}

pub fn tree_lines(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}
