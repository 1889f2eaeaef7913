//! Corpus files, synthetic fixtures and report serialization.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::docmetrics::{CorpusReport, DocScores};
use crate::error::{Error, Result};

/// One evaluation item. `source` is only echoed by the reward service.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    pub hypothesis: String,
    pub reference: String,
}

impl CorpusRecord {
    pub fn new(id: impl Into<String>, hypothesis: impl Into<String>, reference: impl Into<String>) -> Self {
        CorpusRecord {
            id: id.into(),
            source: None,
            hypothesis: hypothesis.into(),
            reference: reference.into(),
        }
    }
}

/// Parses JSONL, collecting every bad line instead of stopping at the first.
/// Blank lines are ignored; line numbers are 1-based.
pub fn parse_corpus_lines<R: BufRead>(reader: R) -> (Vec<CorpusRecord>, Vec<Error>) {
    let mut records = Vec::new();
    let mut errors = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = match line {
            Ok(l) => l,
            Err(e) => {
                errors.push(Error::MalformedLine {
                    line: line_no,
                    reason: e.to_string(),
                });
                break;
            }
        };
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<CorpusRecord>(&line) {
            Ok(rec) => {
                if !seen.insert(rec.id.clone()) {
                    errors.push(Error::DuplicateId { line: line_no, id: rec.id });
                } else {
                    records.push(rec);
                }
            }
            Err(e) => errors.push(Error::MalformedLine {
                line: line_no,
                reason: e.to_string(),
            }),
        }
    }
    (records, errors)
}

/// Reads a JSONL corpus; fails on the first bad line.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<Vec<CorpusRecord>> {
    let (records, errors) = parse_corpus_lines(reader);
    match errors.into_iter().next() {
        Some(e) => Err(e),
        None => Ok(records),
    }
}

pub fn read_corpus_file(path: impl AsRef<Path>) -> Result<Vec<CorpusRecord>> {
    let file = fs::File::open(path)?;
    read_corpus(std::io::BufReader::new(file))
}

/// Serializes records as JSONL.
pub fn write_corpus(records: &[CorpusRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

/// Pairs two line-aligned files, one document per line. Ids are 1-based line
/// numbers.
pub fn read_line_pair(hyp_path: impl AsRef<Path>, ref_path: impl AsRef<Path>) -> Result<Vec<CorpusRecord>> {
    let hyp = fs::read_to_string(hyp_path)?;
    let refs = fs::read_to_string(ref_path)?;
    let h: Vec<&str> = hyp.lines().collect();
    let r: Vec<&str> = refs.lines().collect();
    if h.len() != r.len() {
        return Err(Error::LengthMismatch(h.len(), r.len()));
    }
    Ok(h.into_iter()
        .zip(r)
        .enumerate()
        .map(|(i, (h, r))| CorpusRecord::new((i + 1).to_string(), h, r))
        .collect())
}

/// Pairs files with the same name in two directories; every reference file
/// needs a hypothesis. Records are ordered by file name.
pub fn read_dir_pair(hyp_dir: impl AsRef<Path>, ref_dir: impl AsRef<Path>) -> Result<Vec<CorpusRecord>> {
    let mut names: Vec<String> = fs::read_dir(ref_dir.as_ref())?
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().map(|t| t.is_file()).unwrap_or(false))
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    let mut out = Vec::with_capacity(names.len());
    for name in names {
        let hyp_path = hyp_dir.as_ref().join(&name);
        if !hyp_path.is_file() {
            return Err(Error::Config(format!("no hypothesis file for {name}")));
        }
        out.push(CorpusRecord::new(
            name.clone(),
            fs::read_to_string(hyp_path)?,
            fs::read_to_string(ref_dir.as_ref().join(&name))?,
        ));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Synthetic fixtures

/// Tag names in the style of technical documentation markup.
pub const TAG_VOCABULARY: [&str; 58] = [
    "concept", "task", "reference", "topic", "title", "shortdesc", "prolog", "metadata", "source", "keywords",
    "conbody", "taskbody", "refbody", "section", "p", "ph", "b", "i", "u", "codeph", "uicontrol", "menucascade",
    "note", "ul", "ol", "li", "sl", "sli", "dl", "dlentry", "dt", "dd", "table", "tgroup", "thead", "tbody", "row",
    "entry", "steps", "step", "cmd", "info", "stepresult", "context", "result", "example", "fig", "image", "xref",
    "link", "term", "keyword", "filepath", "userinput", "systemoutput", "q", "lines", "draft-comment",
];

const SYLLABLES: [&str; 24] = [
    "ka", "to", "ri", "sen", "mo", "la", "vi", "de", "nu", "po", "ex", "ta", "lor", "min", "qua", "se", "ber", "fi",
    "go", "han", "ju", "ne", "so", "wa",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorruptionKind {
    DropNode,
    RelabelTag,
    SwapSiblings,
    BreakWellformedness,
    PerturbText,
}

impl CorruptionKind {
    /// Whether the operator changes the tag structure of a valid document.
    pub fn is_structural(self) -> bool {
        !matches!(self, CorruptionKind::PerturbText)
    }
}

impl FromStr for CorruptionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "drop-node" => Ok(CorruptionKind::DropNode),
            "relabel-tag" => Ok(CorruptionKind::RelabelTag),
            "swap-siblings" => Ok(CorruptionKind::SwapSiblings),
            "break-wellformedness" => Ok(CorruptionKind::BreakWellformedness),
            "perturb-text" => Ok(CorruptionKind::PerturbText),
            other => Err(Error::Config(format!("unknown corruption {other:?}"))),
        }
    }
}

/// With probability `rate`, a document gets `count` applications of `kind`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorruptionRate {
    pub kind: CorruptionKind,
    pub rate: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureSpec {
    pub doc_count: usize,
    pub median_nodes: f64,
    pub mean_nodes: f64,
    pub max_nodes: usize,
    pub max_depth: usize,
    /// Number of tags drawn from [`TAG_VOCABULARY`].
    pub tag_vocabulary: usize,
    /// Chance that a node carries an attribute.
    pub attribute_rate: f64,
    pub corruptions: Vec<CorruptionRate>,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        FixtureSpec {
            doc_count: 100,
            median_nodes: 18.0,
            mean_nodes: 27.36,
            max_nodes: 150,
            max_depth: 7,
            tag_vocabulary: 58,
            attribute_rate: 0.1,
            corruptions: Vec::new(),
        }
    }
}

impl FixtureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.median_nodes >= 1.0) || !(self.mean_nodes >= self.median_nodes) {
            return Err(Error::Config("need 1 <= median_nodes <= mean_nodes".into()));
        }
        if self.max_nodes == 0 || self.max_depth == 0 {
            return Err(Error::Config("max_nodes and max_depth must be positive".into()));
        }
        if self.tag_vocabulary < 2 || self.tag_vocabulary > TAG_VOCABULARY.len() {
            return Err(Error::Config(format!(
                "tag vocabulary must be within 2..={}",
                TAG_VOCABULARY.len()
            )));
        }
        if !(0.0..=1.0).contains(&self.attribute_rate) {
            return Err(Error::Config("attribute_rate must be in [0, 1]".into()));
        }
        for c in &self.corruptions {
            if !(0.0..=1.0).contains(&c.rate) {
                return Err(Error::Config(format!("rate for {:?} must be in [0, 1]", c.kind)));
            }
        }
        Ok(())
    }

    pub fn with_corruption(mut self, kind: CorruptionKind, rate: f64, count: usize) -> Self {
        self.corruptions.push(CorruptionRate { kind, rate, count });
        self
    }
}

/// A generated record plus the corruptions actually applied to its
/// hypothesis, one entry per application.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureRecord {
    pub record: CorpusRecord,
    pub corruptions: Vec<CorruptionKind>,
}

impl FixtureRecord {
    pub fn count(&self, kind: CorruptionKind) -> usize {
        self.corruptions.iter().filter(|&&k| k == kind).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Item {
    Text(String),
    Elem(Elem),
}

/// Owned element used while building and corrupting fixtures. The fragment
/// itself is an `Elem` with an empty tag.
#[derive(Debug, Clone, PartialEq)]
struct Elem {
    tag: String,
    attrs: Vec<(String, String)>,
    content: Vec<Item>,
}

impl Elem {
    fn new(tag: &str) -> Self {
        Elem {
            tag: tag.to_string(),
            attrs: Vec::new(),
            content: Vec::new(),
        }
    }

    fn children(&self) -> impl Iterator<Item = &Elem> {
        self.content.iter().filter_map(|i| match i {
            Item::Elem(e) => Some(e),
            Item::Text(_) => None,
        })
    }

    fn has_text(&self) -> bool {
        self.content.iter().any(|i| matches!(i, Item::Text(t) if !t.trim().is_empty()))
    }

    /// Tag skeleton, ignoring text and attributes.
    fn shape(&self, out: &mut String) {
        out.push('(');
        out.push_str(&self.tag);
        for c in self.children() {
            c.shape(out);
        }
        out.push(')');
    }

    fn collect_tags(&self, out: &mut HashSet<String>) {
        if !self.tag.is_empty() {
            out.insert(self.tag.clone());
        }
        for c in self.children() {
            c.collect_tags(out);
        }
    }

    fn write(&self, out: &mut String) {
        let is_fragment = self.tag.is_empty();
        if !is_fragment {
            out.push('<');
            out.push_str(&self.tag);
            for (k, v) in &self.attrs {
                let _ = write!(out, " {k}=\"{v}\"");
            }
            if self.content.is_empty() {
                out.push_str("/>");
                return;
            }
            out.push('>');
        }
        for item in &self.content {
            match item {
                Item::Text(t) => out.push_str(t),
                Item::Elem(e) => e.write(out),
            }
        }
        if !is_fragment {
            let _ = write!(out, "</{}>", self.tag);
        }
    }

    fn serialize(&self) -> String {
        let mut s = String::new();
        self.write(&mut s);
        s
    }
}

/// Pre-order paths (child positions within `content`) of every element
/// below the fragment.
fn element_paths(root: &Elem) -> Vec<Vec<usize>> {
    fn go(e: &Elem, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        for (i, item) in e.content.iter().enumerate() {
            if let Item::Elem(c) = item {
                path.push(i);
                out.push(path.clone());
                go(c, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(root, &mut Vec::new(), &mut out);
    out
}

fn at_mut<'a>(root: &'a mut Elem, path: &[usize]) -> &'a mut Elem {
    let mut cur = root;
    for &i in path {
        cur = match &mut cur.content[i] {
            Item::Elem(e) => e,
            Item::Text(_) => unreachable!("paths only point at elements"),
        };
    }
    cur
}

fn random_word(rng: &mut ChaCha8Rng) -> String {
    let n = rng.random_range(2..=4);
    (0..n).map(|_| *SYLLABLES.choose(rng).unwrap()).collect()
}

fn random_text(rng: &mut ChaCha8Rng) -> String {
    let n = rng.random_range(1..=6);
    (0..n).map(|_| random_word(rng)).collect::<Vec<_>>().join(" ")
}

fn generate_tree(spec: &FixtureSpec, rng: &mut ChaCha8Rng) -> Elem {
    let mu = spec.median_nodes.ln();
    let sigma = (2.0 * (spec.mean_nodes / spec.median_nodes).ln()).sqrt();
    let size = LogNormal::new(mu, sigma.max(1e-9))
        .expect("valid lognormal parameters")
        .sample(rng)
        .round()
        .clamp(1.0, spec.max_nodes as f64) as usize;
    let vocab = &TAG_VOCABULARY[..spec.tag_vocabulary];

    // parent index and depth for each node; node 0 is the top element
    let mut parent = vec![usize::MAX];
    let mut depth = vec![1usize];
    for _ in 1..size {
        let p = loop {
            let p = rng.random_range(0..parent.len());
            if depth[p] < spec.max_depth {
                break p;
            }
        };
        parent.push(p);
        depth.push(depth[p] + 1);
    }
    let mut has_children = vec![false; size];
    for &p in parent.iter().skip(1) {
        has_children[p] = true;
    }

    let mut nodes: Vec<Elem> = (0..size)
        .map(|i| {
            let tag = if i == 0 { vocab[0] } else { *vocab[1..].choose(rng).unwrap() };
            let mut e = Elem::new(tag);
            if rng.random_bool(spec.attribute_rate) {
                e.attrs.push(("id".into(), format!("n{i}")));
            }
            let text_p = if has_children[i] { 0.4 } else { 0.9 };
            if rng.random_bool(text_p) {
                e.content.push(Item::Text(random_text(rng)));
            }
            e
        })
        .collect();
    // attach children in reverse so each parent sees them in creation order
    for i in (1..size).rev() {
        let child = std::mem::replace(&mut nodes[i], Elem::new(""));
        let p = &mut nodes[parent[i]];
        let pos = if matches!(p.content.first(), Some(Item::Text(_))) { 1 } else { 0 };
        p.content.insert(pos, Item::Elem(child));
    }
    // occasional tail text after children
    let top = std::mem::replace(&mut nodes[0], Elem::new(""));
    let mut fragment = Elem::new("");
    fragment.content.push(Item::Elem(top));
    fragment
}

fn relabel(doc: &mut Elem, original_tags: &HashSet<String>, touched: &mut HashSet<Vec<usize>>, rng: &mut ChaCha8Rng) -> bool {
    let candidates: Vec<Vec<usize>> = element_paths(doc).into_iter().filter(|p| !touched.contains(p)).collect();
    let Some(path) = candidates.choose(rng).cloned() else {
        return false;
    };
    let mut present = original_tags.clone();
    doc.collect_tags(&mut present);
    let unused: Vec<&str> = TAG_VOCABULARY.iter().copied().filter(|t| !present.contains(*t)).collect();
    let new_tag = match unused.choose(rng) {
        Some(t) => t.to_string(),
        None => (0..).map(|i| format!("x-tag{i}")).find(|t| !present.contains(t)).unwrap(),
    };
    at_mut(doc, &path).tag = new_tag;
    touched.insert(path);
    true
}

fn drop_node(doc: &mut Elem, rng: &mut ChaCha8Rng) -> bool {
    let paths = element_paths(doc);
    let Some(path) = paths.choose(rng) else {
        return false;
    };
    let (last, parent_path) = path.split_last().unwrap();
    let parent = at_mut(doc, parent_path);
    let Item::Elem(removed) = parent.content.remove(*last) else {
        unreachable!()
    };
    for (offset, item) in removed.content.into_iter().enumerate() {
        parent.content.insert(last + offset, item);
    }
    true
}

fn swap_siblings(doc: &mut Elem, rng: &mut ChaCha8Rng) -> bool {
    let mut options: Vec<(Vec<usize>, usize, usize)> = Vec::new();
    let mut parents = vec![Vec::new()];
    parents.extend(element_paths(doc));
    for p in parents {
        let e = at_mut(doc, &p);
        let kids: Vec<(usize, String)> = e
            .content
            .iter()
            .enumerate()
            .filter_map(|(i, item)| match item {
                Item::Elem(c) => {
                    let mut s = String::new();
                    c.shape(&mut s);
                    Some((i, s))
                }
                Item::Text(_) => None,
            })
            .collect();
        for a in 0..kids.len() {
            for b in a + 1..kids.len() {
                if kids[a].1 != kids[b].1 {
                    options.push((p.clone(), kids[a].0, kids[b].0));
                }
            }
        }
    }
    let Some((p, a, b)) = options.choose(rng).cloned() else {
        return false;
    };
    at_mut(doc, &p).content.swap(a, b);
    true
}

fn perturb_text(doc: &mut Elem, rng: &mut ChaCha8Rng) -> bool {
    let with_text: Vec<Vec<usize>> = element_paths(doc).into_iter().filter(|p| at_mut(doc, p).has_text()).collect();
    let Some(path) = with_text.choose(rng) else {
        return false;
    };
    let e = at_mut(doc, path);
    for item in &mut e.content {
        if let Item::Text(t) = item {
            if t.trim().is_empty() {
                continue;
            }
            let mut words: Vec<String> = t.split(' ').map(String::from).collect();
            let i = rng.random_range(0..words.len());
            let mut w = random_word(rng);
            while w == words[i] {
                w = random_word(rng);
            }
            words[i] = w;
            *t = words.join(" ");
            return true;
        }
    }
    false
}

fn break_wellformedness(doc: &str, rng: &mut ChaCha8Rng) -> String {
    let broken = match rng.random_range(0..3) {
        0 => match doc.rfind("</") {
            Some(i) => {
                let end = doc[i..].find('>').map(|j| i + j + 1).unwrap_or(doc.len());
                format!("{}{}", &doc[..i], &doc[end..])
            }
            None => format!("{doc}<unclosed>"),
        },
        1 => format!("{doc}<unclosed>"),
        _ => format!("{doc}&bogus;"),
    };
    if crate::xmltree::parse_document(&broken).is_valid() {
        format!("{doc}<unclosed>")
    } else {
        broken
    }
}

fn generate_record(spec: &FixtureSpec, seed: u64, index: usize) -> FixtureRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let reference = generate_tree(spec, &mut rng);
    let mut original_tags = HashSet::new();
    reference.collect_tags(&mut original_tags);

    let mut hyp = reference.clone();
    let mut applied = Vec::new();
    let mut relabeled = HashSet::new();
    let mut broken = 0usize;
    for c in &spec.corruptions {
        if !rng.random_bool(c.rate) {
            continue;
        }
        for _ in 0..c.count {
            let done = match c.kind {
                CorruptionKind::RelabelTag => relabel(&mut hyp, &original_tags, &mut relabeled, &mut rng),
                CorruptionKind::DropNode => {
                    // paths of earlier relabels are no longer stable
                    relabeled.clear();
                    drop_node(&mut hyp, &mut rng)
                }
                CorruptionKind::SwapSiblings => {
                    relabeled.clear();
                    swap_siblings(&mut hyp, &mut rng)
                }
                CorruptionKind::PerturbText => perturb_text(&mut hyp, &mut rng),
                CorruptionKind::BreakWellformedness => {
                    broken += 1;
                    true
                }
            };
            if done {
                applied.push(c.kind);
            }
        }
    }
    let mut hyp_text = hyp.serialize();
    for _ in 0..broken {
        hyp_text = break_wellformedness(&hyp_text, &mut rng);
    }
    FixtureRecord {
        record: CorpusRecord::new(format!("doc-{index:04}"), hyp_text, reference.serialize()),
        corruptions: applied,
    }
}

/// Deterministic synthetic corpus: a clean reference per record and a
/// hypothesis derived from it by the configured corruptions. Each record has
/// its own random stream, so records can be generated independently.
pub fn generate_fixtures(spec: &FixtureSpec, seed: u64) -> Result<Vec<FixtureRecord>> {
    spec.validate()?;
    Ok((0..spec.doc_count).map(|i| generate_record(spec, seed, i)).collect())
}

// ---------------------------------------------------------------------------
// Reports

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Json,
    Tsv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "tsv" => Ok(ReportFormat::Tsv),
            other => Err(Error::Config(format!("unknown report format {other:?} (json or tsv)"))),
        }
    }
}

/// Fixed 4-decimal rendering used in every report.
pub fn fmt4(v: f64) -> String {
    let s = format!("{v:.4}");
    if s == "-0.0000" {
        "0.0000".into()
    } else {
        s
    }
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

fn json_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "null".into(), fmt4)
}

fn json_doc(id: &str, d: &DocScores) -> String {
    format!(
        "{{\"id\": {}, \"status\": \"{}\", \"xml_validity\": {}, \"xml_match\": {}, \"tree_sim\": {}, \"node_chrf\": {}, \"optimal_node_chrf\": {}, \"edit_count\": {}, \"reason\": {}}}",
        json_str(id),
        d.status.name(),
        d.xml_validity.map_or_else(|| "null".into(), |v| v.to_string()),
        d.xml_match.map_or_else(|| "null".into(), |v| v.to_string()),
        json_opt(d.tree_sim),
        json_opt(d.node_chrf),
        json_opt(d.optimal_node_chrf),
        json_opt(d.edit_count),
        d.reason.as_deref().map_or_else(|| "null".into(), json_str),
    )
}

fn tsv_cell(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

const TSV_COLUMNS: [&str; 12] = [
    "id",
    "status",
    "xml_validity",
    "xml_match",
    "tree_sim",
    "node_chrf",
    "optimal_node_chrf",
    "edit_count",
    "content_bleu",
    "xml_bleu",
    "strucauc",
    "reason",
];

/// Renders a report. Output is byte-identical for identical reports.
pub fn write_report(report: &CorpusReport, format: ReportFormat) -> Vec<u8> {
    use crate::docmetrics::{DocStatus, Metric};
    let mut out = String::new();
    match format {
        ReportFormat::Json => {
            let count = |s: DocStatus| report.per_doc.iter().filter(|d| d.status == s).count();
            out.push_str("{\n");
            let _ = writeln!(out, "  \"documents\": {},", report.per_doc.len());
            let _ = writeln!(out, "  \"scored\": {},", count(DocStatus::Scored));
            let _ = writeln!(out, "  \"hyp_invalid\": {},", count(DocStatus::HypInvalid));
            let _ = writeln!(out, "  \"ref_invalid\": {},", count(DocStatus::RefInvalid));
            let _ = writeln!(out, "  \"strucauc_k\": {},", fmt4(report.strucauc_k));
            out.push_str("  \"metrics\": {");
            for (i, (m, v)) in report.aggregates.values.iter().enumerate() {
                let sep = if i == 0 { "\n" } else { ",\n" };
                let _ = write!(out, "{sep}    \"{}\": {}", m.name(), fmt4(*v));
            }
            out.push_str("\n  },\n");
            out.push_str("  \"strucauc_curve\": [");
            if let Some(curve) = &report.aggregates.strucauc_curve {
                for (i, p) in curve.iter().enumerate() {
                    let sep = if i == 0 { "\n" } else { ",\n" };
                    let _ = write!(out, "{sep}    {{\"k\": {}, \"score\": {}}}", fmt4(p.k), fmt4(p.score));
                }
                out.push_str("\n  ");
            }
            out.push_str("],\n");
            out.push_str("  \"per_doc\": [");
            for (i, (id, d)) in report.ids.iter().zip(&report.per_doc).enumerate() {
                let sep = if i == 0 { "\n" } else { ",\n" };
                let _ = write!(out, "{sep}    {}", json_doc(id, d));
            }
            if !report.per_doc.is_empty() {
                out.push_str("\n  ");
            }
            out.push_str("]\n}\n");
        }
        ReportFormat::Tsv => {
            out.push_str(&TSV_COLUMNS.join("\t"));
            out.push('\n');
            let opt = |v: Option<f64>| v.map(fmt4).unwrap_or_default();
            for (id, d) in report.ids.iter().zip(&report.per_doc) {
                let cells = [
                    tsv_cell(id),
                    d.status.name().to_string(),
                    d.xml_validity.map(|v| v.to_string()).unwrap_or_default(),
                    d.xml_match.map(|v| v.to_string()).unwrap_or_default(),
                    opt(d.tree_sim),
                    opt(d.node_chrf),
                    opt(d.optimal_node_chrf),
                    opt(d.edit_count),
                    String::new(),
                    String::new(),
                    String::new(),
                    d.reason.as_deref().map(tsv_cell).unwrap_or_default(),
                ];
                out.push_str(&cells.join("\t"));
                out.push('\n');
            }
            let agg = |m: Metric| opt(report.aggregates.get(m));
            let cells = [
                "ALL".to_string(),
                "aggregate".to_string(),
                agg(Metric::XmlValidity),
                agg(Metric::XmlMatch),
                agg(Metric::TreeSim),
                agg(Metric::NodeChrf),
                agg(Metric::OptimalNodeChrf),
                String::new(),
                agg(Metric::ContentBleu),
                agg(Metric::XmlBleu),
                agg(Metric::StrucAuc),
                String::new(),
            ];
            out.push_str(&cells.join("\t"));
            out.push('\n');
        }
    }
    out.into_bytes()
}
