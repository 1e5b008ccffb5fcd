//! Composition trees: which fundamental problem replaced which gate slot.
//!
//! Text form: `pair`, `triple`, `twoperm(n)`, with optional children
//! `kind(slotK:<subtree>, ...)`, e.g. `pair(slot1:pair(slot0:triple))`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::HppError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    /// Two gates that commute or anticommute.
    Pair,
    /// Three gates, `U2 U1 U0` against `U0 U1 U2`.
    Triple,
    /// `n` gates, forward order against reversed order.
    TwoPerm(usize),
}

impl NodeKind {
    pub fn arity(self) -> usize {
        match self {
            NodeKind::Pair => 2,
            NodeKind::Triple => 3,
            NodeKind::TwoPerm(n) => n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CompositionTree {
    kind: NodeKind,
    /// One entry per gate slot of `kind`; `None` is a leaf.
    children: Vec<Option<CompositionTree>>,
}

impl CompositionTree {
    /// A fundamental node whose slots are all leaves.
    pub fn leaf(kind: NodeKind) -> Result<Self, HppError> {
        if let NodeKind::TwoPerm(n) = kind {
            if n < 2 {
                return Err(HppError::InvalidTree(format!(
                    "twoperm needs at least 2 gates, got {n}"
                )));
            }
        }
        Ok(Self {
            kind,
            children: vec![None; kind.arity()],
        })
    }

    pub fn pair() -> Self {
        Self::leaf(NodeKind::Pair).expect("pair is valid")
    }

    pub fn triple() -> Self {
        Self::leaf(NodeKind::Triple).expect("triple is valid")
    }

    /// Replaces the leaf at `slot` with `subtree`.
    pub fn with_child(mut self, slot: usize, subtree: CompositionTree) -> Result<Self, HppError> {
        if matches!(self.kind, NodeKind::TwoPerm(_)) {
            return Err(HppError::InvalidTree(
                "twoperm nodes only take leaf children".into(),
            ));
        }
        if matches!(subtree.kind, NodeKind::TwoPerm(_)) {
            return Err(HppError::InvalidTree(
                "twoperm may only appear at the root".into(),
            ));
        }
        let arity = self.kind.arity();
        let entry = self
            .children
            .get_mut(slot)
            .ok_or(HppError::SlotOutOfRange { slot, n: arity })?;
        if entry.is_some() {
            return Err(HppError::InvalidTree(format!("slot {slot} assigned twice")));
        }
        *entry = Some(subtree);
        Ok(self)
    }

    pub fn kind(&self) -> NodeKind {
        self.kind
    }

    pub fn children(&self) -> &[Option<CompositionTree>] {
        &self.children
    }

    pub fn is_fundamental(&self) -> bool {
        self.children.iter().all(Option::is_none)
    }

    /// Number of gates of the induced instance.
    pub fn leaf_count(&self) -> usize {
        self.children
            .iter()
            .map(|c| c.as_ref().map_or(1, CompositionTree::leaf_count))
            .sum()
    }

    /// Number of fundamental nodes, i.e. of sub-labels.
    pub fn node_count(&self) -> usize {
        1 + self
            .children
            .iter()
            .flatten()
            .map(CompositionTree::node_count)
            .sum::<usize>()
    }

    /// Gate count of the largest fundamental node in the tree.
    pub fn max_fundamental_size(&self) -> usize {
        self.children
            .iter()
            .flatten()
            .map(CompositionTree::max_fundamental_size)
            .fold(self.kind.arity(), usize::max)
    }

    /// Sub-label cardinalities in tree order: own label, then each subtree
    /// child's labels in slot order.
    pub fn label_shape(&self) -> Vec<usize> {
        let mut out = vec![2];
        for child in self.children.iter().flatten() {
            out.extend(child.label_shape());
        }
        out
    }

    /// A tree of pair nodes with `leaves` gates: the smaller half goes to
    /// slot 0 and the larger half to slot 1 (so three leaves give the
    /// `pair(slot1:pair)` instance).
    pub fn balanced_pairs(leaves: usize) -> Result<Self, HppError> {
        if leaves < 2 {
            return Err(HppError::InvalidTree(format!(
                "a pair tree needs at least 2 leaves, got {leaves}"
            )));
        }
        let small = leaves / 2;
        let large = leaves - small;
        let mut tree = Self::pair();
        if small > 1 {
            tree = tree.with_child(0, Self::balanced_pairs(small)?)?;
        }
        if large > 1 {
            tree = tree.with_child(1, Self::balanced_pairs(large)?)?;
        }
        Ok(tree)
    }

    /// Every tree over `kinds` (pair/triple only) with exactly `leaves` leaves.
    pub fn enumerate(leaves: usize, kinds: &[NodeKind]) -> Vec<Self> {
        if leaves < 2 {
            return Vec::new();
        }
        let mut out = Vec::new();
        for &kind in kinds {
            if matches!(kind, NodeKind::TwoPerm(_)) {
                continue;
            }
            let arity = kind.arity();
            if arity > leaves {
                continue;
            }
            for sizes in compositions(leaves, arity) {
                let options: Vec<Vec<Option<Self>>> = sizes
                    .iter()
                    .map(|&s| {
                        if s == 1 {
                            vec![None]
                        } else {
                            Self::enumerate(s, kinds).into_iter().map(Some).collect()
                        }
                    })
                    .collect();
                for children in cartesian(&options) {
                    out.push(Self { kind, children });
                }
            }
        }
        out
    }

    /// Every tree over `kinds` with between 2 and `max_leaves` leaves.
    pub fn enumerate_up_to(max_leaves: usize, kinds: &[NodeKind]) -> Vec<Self> {
        (2..=max_leaves)
            .flat_map(|l| Self::enumerate(l, kinds))
            .collect()
    }

    /// A random tree over `kinds` (pair/triple) with exactly `leaves` leaves.
    pub fn random<R: Rng + ?Sized>(
        leaves: usize,
        kinds: &[NodeKind],
        rng: &mut R,
    ) -> Result<Self, HppError> {
        let usable: Vec<NodeKind> = kinds
            .iter()
            .copied()
            .filter(|k| !matches!(k, NodeKind::TwoPerm(_)) && k.arity() <= leaves)
            .collect();
        if leaves < 2 || usable.is_empty() {
            return Err(HppError::InvalidTree(format!(
                "no tree with {leaves} leaves over {kinds:?}"
            )));
        }
        // a node of arity a can hold any leaf count >= a, so every split below is realizable
        let kind = usable[rng.random_range(0..usable.len())];
        let arity = kind.arity();
        let mut sizes = vec![1usize; arity];
        for _ in 0..leaves - arity {
            let slot = rng.random_range(0..arity);
            sizes[slot] += 1;
        }
        let mut children = Vec::with_capacity(arity);
        for s in sizes {
            children.push(if s == 1 {
                None
            } else {
                Some(Self::random(s, kinds, rng)?)
            });
        }
        Ok(Self { kind, children })
    }

    /// Structural checks: arities match, twoperm only at the root with leaf children.
    pub fn validate(&self) -> Result<(), HppError> {
        self.validate_at(true)
    }

    fn validate_at(&self, is_root: bool) -> Result<(), HppError> {
        if self.children.len() != self.kind.arity() {
            return Err(HppError::InvalidTree("child count does not match arity".into()));
        }
        if let NodeKind::TwoPerm(n) = self.kind {
            if !is_root {
                return Err(HppError::InvalidTree(
                    "twoperm may only appear at the root".into(),
                ));
            }
            if n < 2 {
                return Err(HppError::InvalidTree("twoperm needs at least 2 gates".into()));
            }
            if !self.is_fundamental() {
                return Err(HppError::InvalidTree(
                    "twoperm nodes only take leaf children".into(),
                ));
            }
        }
        for child in self.children.iter().flatten() {
            child.validate_at(false)?;
        }
        Ok(())
    }
}

/// Ordered ways to write `total` as `parts` positive integers.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 1..=total - (parts - 1) {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn cartesian<T: Clone>(options: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut acc: Vec<Vec<T>> = vec![Vec::new()];
    for opts in options {
        let mut next = Vec::with_capacity(acc.len() * opts.len());
        for prefix in &acc {
            for o in opts {
                let mut v = prefix.clone();
                v.push(o.clone());
                next.push(v);
            }
        }
        acc = next;
    }
    acc
}

impl fmt::Display for CompositionTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            NodeKind::Pair => write!(f, "pair")?,
            NodeKind::Triple => write!(f, "triple")?,
            NodeKind::TwoPerm(n) => return write!(f, "twoperm({n})"),
        }
        let subtrees: Vec<String> = self
            .children
            .iter()
            .enumerate()
            .filter_map(|(slot, c)| c.as_ref().map(|t| format!("slot{slot}:{t}")))
            .collect();
        if !subtrees.is_empty() {
            write!(f, "({})", subtrees.join(","))?;
        }
        Ok(())
    }
}

impl FromStr for CompositionTree {
    type Err = HppError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parser = Parser {
            src: s.as_bytes(),
            pos: 0,
        };
        let tree = parser.tree()?;
        parser.skip_ws();
        if parser.pos != parser.src.len() {
            return Err(parser.error("trailing input"));
        }
        tree.validate()?;
        Ok(tree)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, what: &str) -> HppError {
        HppError::TreeSyntax {
            position: self.pos,
            message: what.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn word(&mut self) -> String {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn number(&mut self) -> Result<usize, HppError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .ok()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| self.error("expected a number"))
    }

    fn tree(&mut self) -> Result<CompositionTree, HppError> {
        let name = self.word();
        let kind = match name.as_str() {
            "pair" => NodeKind::Pair,
            "triple" => NodeKind::Triple,
            "twoperm" => {
                if !self.eat(b'(') {
                    return Err(self.error("twoperm needs a gate count, e.g. twoperm(4)"));
                }
                let n = self.number()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                return CompositionTree::leaf(NodeKind::TwoPerm(n));
            }
            "" => return Err(self.error("expected pair, triple or twoperm(n)")),
            other => return Err(self.error(&format!("unknown node kind `{other}`"))),
        };
        let mut tree = CompositionTree::leaf(kind)?;
        if self.eat(b'(') {
            loop {
                let label = self.word();
                if label != "slot" {
                    return Err(self.error("expected `slotK:`"));
                }
                let slot = self.number()?;
                if !self.eat(b':') {
                    return Err(self.error("expected `:` after slot index"));
                }
                let child = self.tree()?;
                tree = tree.with_child(slot, child)?;
                if self.eat(b',') {
                    continue;
                }
                if self.eat(b')') {
                    break;
                }
                return Err(self.error("expected `,` or `)`"));
            }
        }
        Ok(tree)
    }
}
