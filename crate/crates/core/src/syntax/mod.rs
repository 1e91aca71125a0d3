//! Lightweight universal syntax trees and the metrics derived from them.
//!
//! The tree is not a faithful C++/Java AST. It is a shape sketch built
//! from keyword anchors and delimiter matching over a fixed 23-type
//! inventory, so bigram slots stay stable across files and broken input
//! still yields a tree.

mod metrics;
mod parser;

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::tokenizer::Diagnostic;

pub use metrics::{bigram_key, syntax_metrics, SyntaxMetrics};
pub use parser::parse_syntax;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeType {
    TranslationUnit,
    Function,
    ParameterList,
    Parameter,
    Block,
    If,
    Else,
    Switch,
    Case,
    For,
    While,
    DoWhile,
    Ternary,
    Return,
    Declaration,
    Call,
    Identifier,
    Literal,
    BinaryOp,
    UnaryOp,
    Import,
    Class,
    Other,
}

impl NodeType {
    pub const ALL: [NodeType; 23] = [
        NodeType::TranslationUnit,
        NodeType::Function,
        NodeType::ParameterList,
        NodeType::Parameter,
        NodeType::Block,
        NodeType::If,
        NodeType::Else,
        NodeType::Switch,
        NodeType::Case,
        NodeType::For,
        NodeType::While,
        NodeType::DoWhile,
        NodeType::Ternary,
        NodeType::Return,
        NodeType::Declaration,
        NodeType::Call,
        NodeType::Identifier,
        NodeType::Literal,
        NodeType::BinaryOp,
        NodeType::UnaryOp,
        NodeType::Import,
        NodeType::Class,
        NodeType::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NodeType::TranslationUnit => "TranslationUnit",
            NodeType::Function => "Function",
            NodeType::ParameterList => "ParameterList",
            NodeType::Parameter => "Parameter",
            NodeType::Block => "Block",
            NodeType::If => "If",
            NodeType::Else => "Else",
            NodeType::Switch => "Switch",
            NodeType::Case => "Case",
            NodeType::For => "For",
            NodeType::While => "While",
            NodeType::DoWhile => "DoWhile",
            NodeType::Ternary => "Ternary",
            NodeType::Return => "Return",
            NodeType::Declaration => "Declaration",
            NodeType::Call => "Call",
            NodeType::Identifier => "Identifier",
            NodeType::Literal => "Literal",
            NodeType::BinaryOp => "BinaryOp",
            NodeType::UnaryOp => "UnaryOp",
            NodeType::Import => "Import",
            NodeType::Class => "Class",
            NodeType::Other => "Other",
        }
    }

    pub fn from_name(name: &str) -> Option<NodeType> {
        NodeType::ALL.into_iter().find(|t| t.name() == name)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Control and loop constructs counted by nesting depth.
    pub fn is_control(self) -> bool {
        matches!(
            self,
            NodeType::If | NodeType::Switch | NodeType::For | NodeType::While | NodeType::DoWhile
        )
    }
}

impl fmt::Display for NodeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntaxNode {
    pub kind: NodeType,
    pub children: Vec<SyntaxNode>,
    /// Root has depth 1.
    pub depth: usize,
}

impl SyntaxNode {
    pub fn new(kind: NodeType, children: Vec<SyntaxNode>) -> Self {
        SyntaxNode {
            kind,
            children,
            depth: 0,
        }
    }

    pub fn leaf(kind: NodeType) -> Self {
        Self::new(kind, Vec::new())
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    fn assign_depths(&mut self, depth: usize) {
        self.depth = depth;
        for child in &mut self.children {
            child.assign_depths(depth + 1);
        }
    }

    /// Pre-order traversal.
    pub fn walk(&self, visit: &mut impl FnMut(&SyntaxNode, Option<&SyntaxNode>)) {
        fn go<'a>(
            node: &'a SyntaxNode,
            parent: Option<&'a SyntaxNode>,
            visit: &mut impl FnMut(&SyntaxNode, Option<&SyntaxNode>),
        ) {
            visit(node, parent);
            for child in &node.children {
                go(child, Some(node), visit);
            }
        }
        go(self, None, visit);
    }

    /// Compact one-line form: `Function(ParameterList Block(Return))`.
    pub fn to_sexpr(&self) -> String {
        let mut out = String::new();
        self.write_sexpr(&mut out);
        out
    }

    fn write_sexpr(&self, out: &mut String) {
        out.push_str(self.kind.name());
        if !self.children.is_empty() {
            out.push('(');
            for (i, child) in self.children.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                child.write_sexpr(out);
            }
            out.push(')');
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntaxTree {
    pub root: SyntaxNode,
    pub node_count: usize,
    pub diagnostics: Vec<Diagnostic>,
}

impl SyntaxTree {
    pub fn new(mut root: SyntaxNode, diagnostics: Vec<Diagnostic>) -> Self {
        root.assign_depths(1);
        let mut node_count = 0;
        root.walk(&mut |_, _| node_count += 1);
        SyntaxTree {
            root,
            node_count,
            diagnostics,
        }
    }

    /// Indented text dump, one node per line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        self.root.walk(&mut |node, _| {
            let _ = writeln!(out, "{}{}", "  ".repeat(node.depth - 1), node.kind);
        });
        out
    }

    pub fn count(&self, kind: NodeType) -> usize {
        let mut n = 0;
        self.root.walk(&mut |node, _| {
            if node.kind == kind {
                n += 1
            }
        });
        n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inventory_is_fixed() {
        assert_eq!(NodeType::ALL.len(), 23);
        for (i, t) in NodeType::ALL.iter().enumerate() {
            assert_eq!(t.index(), i);
            assert_eq!(NodeType::from_name(t.name()), Some(*t));
        }
    }

    #[test]
    fn depths_and_dump() {
        let tree = SyntaxTree::new(
            SyntaxNode::new(
                NodeType::TranslationUnit,
                vec![SyntaxNode::new(
                    NodeType::Function,
                    vec![SyntaxNode::leaf(NodeType::ParameterList)],
                )],
            ),
            Vec::new(),
        );
        assert_eq!(tree.node_count, 3);
        assert_eq!(tree.root.children[0].children[0].depth, 3);
        assert_eq!(tree.dump(), "TranslationUnit\n  Function\n    ParameterList\n");
        assert_eq!(tree.root.to_sexpr(), "TranslationUnit(Function(ParameterList))");
    }
}
