//! Fragment parsing into ordered labeled trees.
//!
//! A document is parsed as an XML fragment wrapped in a synthetic root, so
//! documents with several top-level elements (or loose top-level text) still
//! form a single tree. Comments and processing instructions are dropped, a
//! leading XML declaration or DOCTYPE is skipped, entity references are decoded
//! and attributes are kept sorted by name.

use std::fmt::Write as _;

/// Index of a node inside a [`DocTree`].
pub type NodeId = usize;

/// A run of character data owned directly by a node.
///
/// `before_child` is the number of element children that precede the chunk,
/// which is enough to reconstruct document order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextChunk {
    pub before_child: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeNode {
    /// Element name. Empty only for the synthetic root.
    pub tag: String,
    /// `(name, value)` pairs sorted by name.
    pub attributes: Vec<(String, String)>,
    /// Whitespace-normalized concatenation of the node's own text chunks.
    pub direct_text: String,
    pub children: Vec<NodeId>,
    pub parent: Option<NodeId>,
    chunks: Vec<TextChunk>,
}

impl TreeNode {
    fn new(tag: String, attributes: Vec<(String, String)>, parent: Option<NodeId>) -> Self {
        TreeNode {
            tag,
            attributes,
            direct_text: String::new(),
            children: Vec::new(),
            parent,
            chunks: Vec::new(),
        }
    }

    /// Raw (decoded, not normalized) text chunks in document order.
    pub fn text_chunks(&self) -> &[TextChunk] {
        &self.chunks
    }

    /// True when the node carries no non-whitespace text of its own.
    pub fn is_text_blank(&self) -> bool {
        self.direct_text.is_empty()
    }
}

/// Ordered labeled tree with a synthetic root at index 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocTree {
    nodes: Vec<TreeNode>,
}

/// Result of parsing a document. Parse failures are values, never panics.
#[derive(Debug, Clone, PartialEq)]
pub enum ParseOutcome {
    Valid(DocTree),
    Invalid(String),
}

impl ParseOutcome {
    pub fn is_valid(&self) -> bool {
        matches!(self, ParseOutcome::Valid(_))
    }

    pub fn tree(&self) -> Option<&DocTree> {
        match self {
            ParseOutcome::Valid(t) => Some(t),
            ParseOutcome::Invalid(_) => None,
        }
    }

    pub fn into_tree(self) -> Option<DocTree> {
        match self {
            ParseOutcome::Valid(t) => Some(t),
            ParseOutcome::Invalid(_) => None,
        }
    }

    pub fn reason(&self) -> Option<&str> {
        match self {
            ParseOutcome::Valid(_) => None,
            ParseOutcome::Invalid(r) => Some(r),
        }
    }
}

impl DocTree {
    fn with_root() -> Self {
        DocTree {
            nodes: vec![TreeNode::new(String::new(), Vec::new(), None)],
        }
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id]
    }

    /// Number of element nodes, excluding the synthetic root.
    pub fn node_count(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Element nodes in pre-order, synthetic root excluded.
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.node_count());
        let mut stack: Vec<NodeId> = self.nodes[0].children.iter().rev().copied().collect();
        while let Some(id) = stack.pop() {
            out.push(id);
            stack.extend(self.nodes[id].children.iter().rev());
        }
        out
    }

    /// Depth of the deepest element; the root's children are at depth 1.
    pub fn depth(&self) -> usize {
        fn go(t: &DocTree, id: NodeId) -> usize {
            t.nodes[id]
                .children
                .iter()
                .map(|&c| 1 + go(t, c))
                .max()
                .unwrap_or(0)
        }
        go(self, 0)
    }

    /// Visits the content of `id` in document order: text chunks and children
    /// interleaved.
    fn for_each_content<'a>(&'a self, id: NodeId, mut f: impl FnMut(Content<'a>)) {
        let node = &self.nodes[id];
        let mut chunks = node.chunks.iter().peekable();
        for (i, &child) in node.children.iter().enumerate() {
            while let Some(c) = chunks.next_if(|c| c.before_child <= i) {
                f(Content::Text(&c.text));
            }
            f(Content::Element(child));
        }
        for c in chunks {
            f(Content::Text(&c.text));
        }
    }

    /// Maximal text runs between tag boundaries, whitespace-normalized, with
    /// whitespace-only runs dropped.
    pub fn text_segments(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_segments(0, &mut out);
        out
    }

    fn collect_segments(&self, id: NodeId, out: &mut Vec<String>) {
        self.for_each_content(id, |c| match c {
            Content::Text(t) => {
                let n = normalize_whitespace(t);
                if !n.is_empty() {
                    out.push(n);
                }
            }
            Content::Element(child) => self.collect_segments(child, out),
        });
    }

    /// Canonical serialization of the whole fragment (root contents only).
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        self.write_content(0, &mut out);
        out
    }

    /// Canonical serialization of one element and its descendants: sorted
    /// attributes, collapsed whitespace, blank text runs dropped, no
    /// indentation.
    pub fn serialize_subtree(&self, id: NodeId) -> String {
        let mut out = String::new();
        if id == 0 {
            self.write_content(0, &mut out);
        } else {
            self.write_element(id, &mut out);
        }
        out
    }

    fn write_element(&self, id: NodeId, out: &mut String) {
        let node = &self.nodes[id];
        out.push('<');
        out.push_str(&node.tag);
        for (name, value) in &node.attributes {
            let _ = write!(out, " {}=\"{}\"", name, escape(value, true));
        }
        let empty = node.children.is_empty() && node.chunks.iter().all(|c| is_blank(&c.text));
        if empty {
            out.push_str("/>");
            return;
        }
        out.push('>');
        self.write_content(id, out);
        out.push_str("</");
        out.push_str(&node.tag);
        out.push('>');
    }

    fn write_content(&self, id: NodeId, out: &mut String) {
        self.for_each_content(id, |c| match c {
            Content::Text(t) => {
                if !is_blank(t) {
                    out.push_str(&escape(&collapse_whitespace(t), false));
                }
            }
            Content::Element(child) => self.write_element(child, out),
        });
    }
}

enum Content<'a> {
    Text(&'a str),
    Element(NodeId),
}

/// Structural equality from the roots: same child counts, order and tags, and
/// optionally identical attribute lists. Text is ignored.
pub fn is_isomorphic(a: &DocTree, b: &DocTree, compare_attributes: bool) -> bool {
    if a.node_count() != b.node_count() {
        return false;
    }
    let mut stack = vec![(a.root(), b.root())];
    while let Some((x, y)) = stack.pop() {
        let (nx, ny) = (a.node(x), b.node(y));
        if nx.tag != ny.tag || nx.children.len() != ny.children.len() {
            return false;
        }
        if compare_attributes && nx.attributes != ny.attributes {
            return false;
        }
        stack.extend(nx.children.iter().copied().zip(ny.children.iter().copied()));
    }
    true
}

/// Joins all text segments with single spaces. Falls back to dropping
/// tag-like spans when the text does not parse.
pub fn strip_markup(text: &str) -> String {
    match parse_document(text) {
        ParseOutcome::Valid(tree) => tree.text_segments().join(" "),
        ParseOutcome::Invalid(_) => {
            let mut out = String::with_capacity(text.len());
            let mut rest = text;
            while let Some(open) = rest.find('<') {
                out.push_str(&rest[..open]);
                out.push(' ');
                match rest[open..].find('>') {
                    Some(close) => rest = &rest[open + close + 1..],
                    // a lone '<' is kept as text
                    None => {
                        rest = &rest[open..];
                        break;
                    }
                }
            }
            out.push_str(rest);
            normalize_whitespace(&out)
        }
    }
}

/// Collapses whitespace runs to a single space and trims both ends.
pub fn normalize_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn collapse_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut in_ws = false;
    for ch in s.chars() {
        if ch.is_whitespace() {
            if !in_ws {
                out.push(' ');
            }
            in_ws = true;
        } else {
            out.push(ch);
            in_ws = false;
        }
    }
    out
}

fn is_blank(s: &str) -> bool {
    s.chars().all(char::is_whitespace)
}

fn escape(s: &str, attr: bool) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' if attr => out.push_str("&quot;"),
            _ => out.push(ch),
        }
    }
    out
}

fn is_legal_char(c: char) -> bool {
    matches!(c, '\t' | '\n' | '\r')
        || ('\u{20}'..='\u{D7FF}').contains(&c)
        || ('\u{E000}'..='\u{FFFD}').contains(&c)
        || c >= '\u{10000}'
}

fn is_name_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == ':' || (c as u32) > 0x7F
}

fn is_name_char(c: char) -> bool {
    is_name_start(c) || c.is_ascii_digit() || c == '-' || c == '.'
}

fn decode_entities(s: &str) -> Result<String, String> {
    if !s.contains('&') {
        return Ok(s.to_string());
    }
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        let after = &rest[amp + 1..];
        let semi = after
            .find(';')
            .filter(|&i| i > 0 && !after[..i].contains(|c: char| c.is_whitespace() || c == '&'))
            .ok_or_else(|| "unterminated or bare '&' in text".to_string())?;
        let name = &after[..semi];
        let decoded = match name {
            "amp" => '&',
            "lt" => '<',
            "gt" => '>',
            "quot" => '"',
            "apos" => '\'',
            _ => {
                let code = if let Some(hex) = name.strip_prefix("#x") {
                    u32::from_str_radix(hex, 16).ok()
                } else if let Some(dec) = name.strip_prefix('#') {
                    dec.parse::<u32>().ok()
                } else {
                    return Err(format!("unknown entity &{name};"));
                };
                code.and_then(char::from_u32)
                    .filter(|&c| is_legal_char(c))
                    .ok_or_else(|| format!("invalid character reference &{name};"))?
            }
        };
        out.push(decoded);
        rest = &after[semi + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    tree: DocTree,
    stack: Vec<NodeId>,
    seen_element: bool,
}

impl<'a> Parser<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn skip_ws(&mut self) -> bool {
        let r = self.rest();
        let trimmed = r.trim_start_matches([' ', '\t', '\n', '\r']);
        let skipped = r.len() - trimmed.len();
        self.pos += skipped;
        skipped > 0
    }

    fn skip_past(&mut self, terminator: &str, what: &str) -> Result<&'a str, String> {
        match self.rest().find(terminator) {
            Some(i) => {
                let body = &self.rest()[..i];
                self.pos += i + terminator.len();
                Ok(body)
            }
            None => Err(format!("unterminated {what}")),
        }
    }

    fn name(&mut self) -> Option<&'a str> {
        let r = self.rest();
        let mut chars = r.char_indices();
        match chars.next() {
            Some((_, c)) if is_name_start(c) => {}
            _ => return None,
        }
        let end = chars
            .find(|&(_, c)| !is_name_char(c))
            .map(|(i, _)| i)
            .unwrap_or(r.len());
        self.pos += end;
        Some(&r[..end])
    }

    fn current(&self) -> NodeId {
        *self.stack.last().expect("stack always holds the root")
    }

    fn push_text(&mut self, text: String) {
        let id = self.current();
        let node = &mut self.tree.nodes[id];
        let before_child = node.children.len();
        match node.chunks.last_mut() {
            Some(last) if last.before_child == before_child => last.text.push_str(&text),
            _ => node.chunks.push(TextChunk { before_child, text }),
        }
    }

    fn skip_doctype(&mut self) -> Result<(), String> {
        // Handles quoted literals and an internal subset in brackets.
        let mut depth = 0usize;
        let mut quote: Option<char> = None;
        for (i, c) in self.rest().char_indices() {
            match quote {
                Some(q) if c == q => quote = None,
                Some(_) => {}
                None => match c {
                    '"' | '\'' => quote = Some(c),
                    '[' => depth += 1,
                    ']' => depth = depth.saturating_sub(1),
                    '>' if depth == 0 => {
                        self.pos += i + 1;
                        return Ok(());
                    }
                    _ => {}
                },
            }
        }
        Err("unterminated DOCTYPE declaration".into())
    }

    fn open_tag(&mut self) -> Result<(), String> {
        self.pos += 1;
        let tag = self
            .name()
            .ok_or_else(|| "invalid element name after '<'".to_string())?
            .to_string();
        let mut attributes: Vec<(String, String)> = Vec::new();
        loop {
            let had_ws = self.skip_ws();
            let r = self.rest();
            if r.starts_with("/>") || r.starts_with('>') {
                let self_closing = r.starts_with("/>");
                self.pos += if self_closing { 2 } else { 1 };
                attributes.sort_by(|a, b| a.0.cmp(&b.0));
                let parent = self.current();
                let id = self.tree.nodes.len();
                self.tree
                    .nodes
                    .push(TreeNode::new(tag, attributes, Some(parent)));
                self.tree.nodes[parent].children.push(id);
                self.seen_element = true;
                if !self_closing {
                    self.stack.push(id);
                }
                return Ok(());
            }
            if r.is_empty() {
                return Err(format!("unterminated start tag <{tag}"));
            }
            if !had_ws {
                return Err(format!("malformed attribute list in <{tag}>"));
            }
            let name = self
                .name()
                .ok_or_else(|| format!("malformed attribute in <{tag}>"))?
                .to_string();
            self.skip_ws();
            if self.peek() != Some('=') {
                return Err(format!("attribute {name} in <{tag}> has no value"));
            }
            self.pos += 1;
            self.skip_ws();
            let quote = match self.peek() {
                Some(q @ ('"' | '\'')) => q,
                _ => return Err(format!("unquoted value for attribute {name} in <{tag}>")),
            };
            self.pos += 1;
            let raw = self.skip_past(&quote.to_string(), "attribute value")?;
            if raw.contains('<') {
                return Err(format!("'<' in value of attribute {name}"));
            }
            let value = decode_entities(raw)?;
            if attributes.iter().any(|(n, _)| *n == name) {
                return Err(format!("duplicate attribute {name} in <{tag}>"));
            }
            attributes.push((name, value));
        }
    }

    fn close_tag(&mut self) -> Result<(), String> {
        self.pos += 2;
        let name = self
            .name()
            .ok_or_else(|| "invalid name in closing tag".to_string())?;
        self.skip_ws();
        if self.peek() != Some('>') {
            return Err(format!("malformed closing tag </{name}"));
        }
        self.pos += 1;
        let top = self.current();
        if top == 0 {
            return Err(format!("unexpected closing tag </{name}>"));
        }
        let open = &self.tree.nodes[top].tag;
        if open != name {
            return Err(format!("mismatched closing tag </{name}>, expected </{open}>"));
        }
        self.stack.pop();
        Ok(())
    }

    fn run(mut self) -> Result<DocTree, String> {
        while self.pos < self.src.len() {
            let r = self.rest();
            if !r.starts_with('<') {
                let end = r.find('<').unwrap_or(r.len());
                let text = decode_entities(&r[..end])?;
                self.pos += end;
                self.push_text(text);
            } else if r.starts_with("<!--") {
                self.pos += 4;
                self.skip_past("-->", "comment")?;
            } else if r.starts_with("<![CDATA[") {
                self.pos += 9;
                let body = self.skip_past("]]>", "CDATA section")?.to_string();
                self.push_text(body);
            } else if r.starts_with("<!DOCTYPE") {
                if self.seen_element || self.stack.len() > 1 {
                    return Err("DOCTYPE declaration after content".into());
                }
                self.skip_doctype()?;
            } else if r.starts_with("<?") {
                self.pos += 2;
                self.skip_past("?>", "processing instruction")?;
            } else if r.starts_with("<!") {
                return Err("unsupported markup declaration".into());
            } else if r.starts_with("</") {
                self.close_tag()?;
            } else {
                self.open_tag()?;
            }
        }
        if self.stack.len() > 1 {
            let top = self.current();
            return Err(format!("unclosed element {}", self.tree.nodes[top].tag));
        }
        let mut tree = self.tree;
        for node in &mut tree.nodes {
            let joined: String = node.chunks.iter().map(|c| c.text.as_str()).collect();
            node.direct_text = normalize_whitespace(&joined);
        }
        Ok(tree)
    }
}

/// Parses `text` as an XML fragment under a synthetic root.
pub fn parse_document(text: &str) -> ParseOutcome {
    if let Some(bad) = text.chars().find(|&c| !is_legal_char(c)) {
        return ParseOutcome::Invalid(format!("illegal character U+{:04X}", bad as u32));
    }
    let parser = Parser {
        src: text,
        pos: 0,
        tree: DocTree::with_root(),
        stack: vec![0],
        seen_element: false,
    };
    match parser.run() {
        Ok(tree) => ParseOutcome::Valid(tree),
        Err(reason) => ParseOutcome::Invalid(reason),
    }
}
