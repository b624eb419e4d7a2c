//! Pattern syntax and the binary parse tree.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! union  := concat ('|' concat)*
//! concat := star star*
//! star   := atom '*'*
//! atom   := literal | '\' any-byte | '(' union ')'
//! ```
//!
//! Both binary operators associate to the left, so `abc` parses as
//! `Cat(Cat(a, b), c)`. Every byte except `(`, `)`, `|`, `*` and `\` is a
//! literal; a backslash makes the following byte literal.

use crate::error::{SyntaxError, SyntaxErrorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Cat,
    Union,
    Star,
    Char(u8),
}

impl Label {
    pub fn arity(self) -> usize {
        match self {
            Label::Cat | Label::Union => 2,
            Label::Star => 1,
            Label::Char(_) => 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ParseNode {
    pub label: Label,
    pub children: Vec<usize>,
    pub parent: Option<usize>,
}

/// Rooted, ordered, binary parse tree stored as an arena.
#[derive(Debug, Clone)]
pub struct ParseTree {
    nodes: Vec<ParseNode>,
    root: usize,
}

impl ParseTree {
    pub fn builder() -> TreeBuilder {
        TreeBuilder::default()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: usize) -> &ParseNode {
        &self.nodes[id]
    }

    pub fn label(&self, id: usize) -> Label {
        self.nodes[id].label
    }

    pub fn children(&self, id: usize) -> &[usize] {
        &self.nodes[id].children
    }

    pub fn parent(&self, id: usize) -> Option<usize> {
        self.nodes[id].parent
    }

    pub fn nodes(&self) -> &[ParseNode] {
        &self.nodes
    }

    /// Node ids in post-order (children left to right, then the node).
    pub fn postorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![(self.root, false)];
        while let Some((id, expanded)) = stack.pop() {
            if expanded {
                out.push(id);
                continue;
            }
            stack.push((id, true));
            for &c in self.children(id).iter().rev() {
                stack.push((c, false));
            }
        }
        out
    }

    /// Node ids in pre-order.
    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            out.push(id);
            for &c in self.children(id).iter().rev() {
                stack.push(c);
            }
        }
        out
    }

    /// Distinct literal bytes, sorted.
    pub fn alphabet(&self) -> Vec<u8> {
        let mut seen = [false; 256];
        for n in &self.nodes {
            if let Label::Char(c) = n.label {
                seen[c as usize] = true;
            }
        }
        (0..=255u8).filter(|&c| seen[c as usize]).collect()
    }

    /// Structural equality: same labels and shape, regardless of arena order.
    pub fn same_structure(&self, other: &ParseTree) -> bool {
        let mut stack = vec![(self.root, other.root)];
        while let Some((a, b)) = stack.pop() {
            if self.label(a) != other.label(b) {
                return false;
            }
            let (ca, cb) = (self.children(a), other.children(b));
            if ca.len() != cb.len() {
                return false;
            }
            stack.extend(ca.iter().copied().zip(cb.iter().copied()));
        }
        true
    }

    fn check_links(&self) -> bool {
        self.nodes.iter().enumerate().all(|(id, n)| {
            n.children.len() == n.label.arity()
                && n.children.iter().all(|&c| self.nodes[c].parent == Some(id))
        }) && self.nodes[self.root].parent.is_none()
    }
}

impl PartialEq for ParseTree {
    fn eq(&self, other: &Self) -> bool {
        self.same_structure(other)
    }
}

impl Eq for ParseTree {}

#[derive(Debug, Default)]
pub struct TreeBuilder {
    nodes: Vec<ParseNode>,
}

impl TreeBuilder {
    fn push(&mut self, label: Label, children: Vec<usize>) -> usize {
        let id = self.nodes.len();
        for &c in &children {
            debug_assert!(
                self.nodes[c].parent.is_none(),
                "node {c} already has a parent"
            );
            self.nodes[c].parent = Some(id);
        }
        self.nodes.push(ParseNode {
            label,
            children,
            parent: None,
        });
        id
    }

    pub fn char(&mut self, c: u8) -> usize {
        self.push(Label::Char(c), Vec::new())
    }

    pub fn cat(&mut self, left: usize, right: usize) -> usize {
        self.push(Label::Cat, vec![left, right])
    }

    pub fn union(&mut self, left: usize, right: usize) -> usize {
        self.push(Label::Union, vec![left, right])
    }

    pub fn star(&mut self, inner: usize) -> usize {
        self.push(Label::Star, vec![inner])
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Panics if `root` is out of range or the nodes do not form one tree under `root`.
    pub fn finish(self, root: usize) -> ParseTree {
        let tree = ParseTree {
            nodes: self.nodes,
            root,
        };
        assert!(tree.check_links(), "malformed parse tree");
        assert_eq!(
            tree.postorder().len(),
            tree.len(),
            "unreachable nodes in parse tree"
        );
        tree
    }
}

pub fn is_meta(c: u8) -> bool {
    matches!(c, b'(' | b')' | b'|' | b'*' | b'\\')
}

/// Parses a pattern into its parse tree.
pub fn parse(pattern: impl AsRef<[u8]>) -> Result<ParseTree, SyntaxError> {
    let input = pattern.as_ref();
    if input.is_empty() {
        return Err(SyntaxError {
            offset: 0,
            kind: SyntaxErrorKind::EmptyPattern,
        });
    }
    let mut p = Parser {
        input,
        pos: 0,
        open: Vec::new(),
        b: TreeBuilder::default(),
    };
    let root = p.union()?;
    if p.pos < input.len() {
        // union() only stops early on ')'
        return Err(p.err(SyntaxErrorKind::UnbalancedClose));
    }
    Ok(p.b.finish(root))
}

struct Parser<'a> {
    input: &'a [u8],
    pos: usize,
    open: Vec<usize>,
    b: TreeBuilder,
}

impl Parser<'_> {
    fn err(&self, kind: SyntaxErrorKind) -> SyntaxError {
        SyntaxError {
            offset: self.pos,
            kind,
        }
    }

    fn peek(&self) -> Option<u8> {
        self.input.get(self.pos).copied()
    }

    fn union(&mut self) -> Result<usize, SyntaxError> {
        let mut left = self.concat()?;
        while self.peek() == Some(b'|') {
            self.pos += 1;
            let right = self.concat()?;
            left = self.b.union(left, right);
        }
        Ok(left)
    }

    fn concat(&mut self) -> Result<usize, SyntaxError> {
        let mut acc: Option<usize> = None;
        loop {
            match self.peek() {
                None | Some(b'|') | Some(b')') => break,
                Some(_) => {
                    let item = self.star()?;
                    acc = Some(match acc {
                        Some(l) => self.b.cat(l, item),
                        None => item,
                    });
                }
            }
        }
        acc.ok_or_else(|| match self.peek() {
            None if !self.open.is_empty() => SyntaxError {
                offset: *self.open.last().unwrap(),
                kind: SyntaxErrorKind::UnbalancedOpen,
            },
            Some(b')') if self.open.is_empty() => self.err(SyntaxErrorKind::UnbalancedClose),
            Some(b')') if self.input[self.pos - 1] == b'(' => self.err(SyntaxErrorKind::EmptyGroup),
            _ => self.err(SyntaxErrorKind::EmptyAlternative),
        })
    }

    fn star(&mut self) -> Result<usize, SyntaxError> {
        let mut node = self.atom()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            node = self.b.star(node);
        }
        Ok(node)
    }

    fn atom(&mut self) -> Result<usize, SyntaxError> {
        let c = self.peek().expect("atom called at end of input");
        match c {
            b'*' => Err(self.err(SyntaxErrorKind::DanglingStar)),
            b'\\' => {
                self.pos += 1;
                let lit = self.peek().ok_or(SyntaxError {
                    offset: self.pos - 1,
                    kind: SyntaxErrorKind::TrailingEscape,
                })?;
                self.pos += 1;
                Ok(self.b.char(lit))
            }
            b'(' => {
                self.open.push(self.pos);
                self.pos += 1;
                let inner = self.union()?;
                if self.peek() != Some(b')') {
                    return Err(SyntaxError {
                        offset: *self.open.last().unwrap(),
                        kind: SyntaxErrorKind::UnbalancedOpen,
                    });
                }
                self.open.pop();
                self.pos += 1;
                Ok(inner)
            }
            _ => {
                self.pos += 1;
                Ok(self.b.char(c))
            }
        }
    }
}

/// Fully parenthesized rendering; `parse(print(t))` is structurally `t`.
pub fn print(tree: &ParseTree) -> Vec<u8> {
    enum Item {
        Node(usize),
        Text(&'static [u8]),
    }
    let mut out = Vec::new();
    let mut stack = vec![Item::Node(tree.root())];
    while let Some(item) = stack.pop() {
        let id = match item {
            Item::Text(t) => {
                out.extend_from_slice(t);
                continue;
            }
            Item::Node(id) => id,
        };
        let ch = tree.children(id);
        match tree.label(id) {
            Label::Char(c) => {
                if is_meta(c) {
                    out.push(b'\\');
                }
                out.push(c);
            }
            Label::Cat | Label::Union => {
                let sep: &'static [u8] = if tree.label(id) == Label::Cat {
                    b")("
                } else {
                    b")|("
                };
                stack.extend([
                    Item::Text(b")"),
                    Item::Node(ch[1]),
                    Item::Text(sep),
                    Item::Node(ch[0]),
                    Item::Text(b"("),
                ]);
            }
            Label::Star => {
                stack.extend([Item::Text(b")*"), Item::Node(ch[0]), Item::Text(b"(")]);
            }
        }
    }
    out
}
