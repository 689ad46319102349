//! Resolved syntax tree for one module of the supported subset.
//!
//! Identifiers are resolved to [`NetId`] indices into [`ModuleAst::nets`] and
//! parameters are folded to constants while parsing, so every width in the
//! tree is concrete.

use serde::{Deserialize, Serialize};

use super::value::BitVector;

pub type NetId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PortDir {
    Input,
    Output,
    Inout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetKind {
    Wire,
    Reg,
    Integer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortDecl {
    pub name: String,
    pub dir: PortDir,
    pub width: u32,
    pub net: NetId,
}

/// Declared range of a vector, `[msb:lsb]`. Scalars use `[0:0]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Range {
    pub msb: i64,
    pub lsb: i64,
}

impl Range {
    pub fn scalar() -> Self {
        Range { msb: 0, lsb: 0 }
    }

    pub fn width(&self) -> u32 {
        ((self.msb - self.lsb).unsigned_abs() + 1) as u32
    }

    /// Bit offset (from the LSB) of declared index `i`, if in range.
    pub fn offset(&self, i: i64) -> Option<u32> {
        let (lo, hi) = (self.msb.min(self.lsb), self.msb.max(self.lsb));
        if i < lo || i > hi {
            return None;
        }
        Some(if self.msb >= self.lsb {
            (i - self.lsb) as u32
        } else {
            (self.lsb - i) as u32
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetDecl {
    pub name: String,
    pub kind: NetKind,
    pub range: Range,
    pub signed: bool,
    /// Unpacked dimension of a one-dimensional memory, `[lo:hi]`.
    pub array: Option<(i64, i64)>,
    pub dir: Option<PortDir>,
    pub line: usize,
}

impl NetDecl {
    pub fn width(&self) -> u32 {
        self.range.width()
    }

    pub fn array_len(&self) -> usize {
        self.array
            .map(|(a, b)| ((a - b).unsigned_abs() + 1) as usize)
            .unwrap_or(1)
    }

    pub fn array_offset(&self, i: i64) -> Option<usize> {
        let (a, b) = self.array?;
        let (lo, hi) = (a.min(b), a.max(b));
        (lo..=hi).contains(&i).then(|| (i - lo) as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UnaryOp {
    Plus,
    Neg,
    Not,
    LogicNot,
    RedAnd,
    RedOr,
    RedXor,
    RedNand,
    RedNor,
    RedXnor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Pow,
    And,
    Or,
    Xor,
    Xnor,
    Shl,
    Shr,
    AShl,
    AShr,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    CaseEq,
    CaseNe,
    LogicAnd,
    LogicOr,
}

impl BinaryOp {
    pub fn symbol(&self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Mod => "%",
            BinaryOp::Pow => "**",
            BinaryOp::And => "&",
            BinaryOp::Or => "|",
            BinaryOp::Xor => "^",
            BinaryOp::Xnor => "~^",
            BinaryOp::Shl => "<<",
            BinaryOp::Shr => ">>",
            BinaryOp::AShl => "<<<",
            BinaryOp::AShr => ">>>",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::CaseEq => "===",
            BinaryOp::CaseNe => "!==",
            BinaryOp::LogicAnd => "&&",
            BinaryOp::LogicOr => "||",
        }
    }

    pub fn from_symbol(s: &str) -> Option<BinaryOp> {
        Some(match s {
            "+" => BinaryOp::Add,
            "-" => BinaryOp::Sub,
            "*" => BinaryOp::Mul,
            "/" => BinaryOp::Div,
            "%" => BinaryOp::Mod,
            "**" => BinaryOp::Pow,
            "&" => BinaryOp::And,
            "|" => BinaryOp::Or,
            "^" => BinaryOp::Xor,
            "~^" | "^~" => BinaryOp::Xnor,
            "<<" => BinaryOp::Shl,
            ">>" => BinaryOp::Shr,
            "<<<" => BinaryOp::AShl,
            ">>>" => BinaryOp::AShr,
            "<" => BinaryOp::Lt,
            "<=" => BinaryOp::Le,
            ">" => BinaryOp::Gt,
            ">=" => BinaryOp::Ge,
            "==" => BinaryOp::Eq,
            "!=" => BinaryOp::Ne,
            "===" => BinaryOp::CaseEq,
            "!==" => BinaryOp::CaseNe,
            "&&" => BinaryOp::LogicAnd,
            "||" => BinaryOp::LogicOr,
            _ => return None,
        })
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(&self) -> u8 {
        match self {
            BinaryOp::Pow => 12,
            BinaryOp::Mul | BinaryOp::Div | BinaryOp::Mod => 11,
            BinaryOp::Add | BinaryOp::Sub => 10,
            BinaryOp::Shl | BinaryOp::Shr | BinaryOp::AShl | BinaryOp::AShr => 9,
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => 8,
            BinaryOp::Eq | BinaryOp::Ne | BinaryOp::CaseEq | BinaryOp::CaseNe => 7,
            BinaryOp::And => 6,
            BinaryOp::Xor | BinaryOp::Xnor => 5,
            BinaryOp::Or => 4,
            BinaryOp::LogicAnd => 3,
            BinaryOp::LogicOr => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Const {
        value: BitVector,
        signed: bool,
        /// Unsized literals are 32 bits wide for width propagation.
        sized: bool,
    },
    Net(NetId),
    /// Bit-select on a vector, or element-select on a memory.
    Index(NetId, Box<Expr>),
    /// Constant part-select `[msb:lsb]` in declared index space.
    Part {
        net: NetId,
        msb: i64,
        lsb: i64,
    },
    /// Indexed part-select `[base +: width]` / `[base -: width]`.
    IndexedPart {
        net: NetId,
        base: Box<Expr>,
        width: u32,
        ascending: bool,
    },
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Ternary(Box<Expr>, Box<Expr>, Box<Expr>),
    Concat(Vec<Expr>),
    Replicate(u32, Vec<Expr>),
    Signed(Box<Expr>),
    Unsigned(Box<Expr>),
}

impl Expr {
    /// Every net this expression reads.
    pub fn nets(&self, out: &mut Vec<NetId>) {
        match self {
            Expr::Const { .. } => {}
            Expr::Net(n) | Expr::Part { net: n, .. } => out.push(*n),
            Expr::Index(n, i) => {
                out.push(*n);
                i.nets(out);
            }
            Expr::IndexedPart { net, base, .. } => {
                out.push(*net);
                base.nets(out);
            }
            Expr::Unary(_, a) | Expr::Signed(a) | Expr::Unsigned(a) => a.nets(out),
            Expr::Binary(_, a, b) => {
                a.nets(out);
                b.nets(out);
            }
            Expr::Ternary(c, t, f) => {
                c.nets(out);
                t.nets(out);
                f.nets(out);
            }
            Expr::Concat(ps) | Expr::Replicate(_, ps) => ps.iter().for_each(|p| p.nets(out)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LValue {
    Net(NetId),
    Index(NetId, Expr),
    Part {
        net: NetId,
        msb: i64,
        lsb: i64,
    },
    IndexedPart {
        net: NetId,
        base: Expr,
        width: u32,
        ascending: bool,
    },
    Concat(Vec<LValue>),
}

impl LValue {
    pub fn nets(&self, out: &mut Vec<NetId>) {
        match self {
            LValue::Net(n) | LValue::Index(n, _) => out.push(*n),
            LValue::Part { net, .. } | LValue::IndexedPart { net, .. } => out.push(*net),
            LValue::Concat(parts) => parts.iter().for_each(|p| p.nets(out)),
        }
    }

    /// Nets read by index expressions inside the target.
    pub fn index_reads(&self, out: &mut Vec<NetId>) {
        match self {
            LValue::Net(_) | LValue::Part { .. } => {}
            LValue::Index(_, e) | LValue::IndexedPart { base: e, .. } => e.nets(out),
            LValue::Concat(parts) => parts.iter().for_each(|p| p.index_reads(out)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousAssign {
    pub lhs: LValue,
    pub expr: Expr,
    pub line: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseKind {
    Case,
    Casez,
    Casex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseItem {
    /// Each label carries its literal don't-care mask (for casez/casex).
    pub labels: Vec<(Expr, Option<u128>)>,
    pub body: Stmt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Stmt {
    Block(Vec<Stmt>),
    Blocking(LValue, Expr),
    NonBlocking(LValue, Expr),
    If(Expr, Box<Stmt>, Option<Box<Stmt>>),
    Case {
        kind: CaseKind,
        subject: Expr,
        items: Vec<CaseItem>,
        default: Option<Box<Stmt>>,
    },
    For {
        init: Box<Stmt>,
        cond: Expr,
        step: Box<Stmt>,
        body: Box<Stmt>,
    },
    /// `$display` and friends; no effect in simulation.
    SystemTask(String),
    Null,
}

impl Stmt {
    /// Every net the statement reads (conditions, right-hand sides, indices).
    pub fn reads(&self, out: &mut Vec<NetId>) {
        match self {
            Stmt::Block(v) => v.iter().for_each(|s| s.reads(out)),
            Stmt::Blocking(lv, e) | Stmt::NonBlocking(lv, e) => {
                lv.index_reads(out);
                e.nets(out);
            }
            Stmt::If(c, t, f) => {
                c.nets(out);
                t.reads(out);
                if let Some(f) = f {
                    f.reads(out);
                }
            }
            Stmt::Case {
                subject,
                items,
                default,
                ..
            } => {
                subject.nets(out);
                for i in items {
                    i.labels.iter().for_each(|(l, _)| l.nets(out));
                    i.body.reads(out);
                }
                if let Some(d) = default {
                    d.reads(out);
                }
            }
            Stmt::For { init, cond, step, body } => {
                init.reads(out);
                cond.nets(out);
                step.reads(out);
                body.reads(out);
            }
            Stmt::SystemTask(_) | Stmt::Null => {}
        }
    }

    /// Every net the statement assigns.
    pub fn writes(&self, out: &mut Vec<NetId>) {
        match self {
            Stmt::Block(v) => v.iter().for_each(|s| s.writes(out)),
            Stmt::Blocking(lv, _) | Stmt::NonBlocking(lv, _) => lv.nets(out),
            Stmt::If(_, t, f) => {
                t.writes(out);
                if let Some(f) = f {
                    f.writes(out);
                }
            }
            Stmt::Case { items, default, .. } => {
                items.iter().for_each(|i| i.body.writes(out));
                if let Some(d) = default {
                    d.writes(out);
                }
            }
            Stmt::For { init, step, body, .. } => {
                init.writes(out);
                step.writes(out);
                body.writes(out);
            }
            Stmt::SystemTask(_) | Stmt::Null => {}
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Edge {
    Posedge,
    Negedge,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Trigger {
    /// `@(*)` or a level-sensitive list, treated as `@(*)`.
    Combinational,
    Edges(Vec<(Edge, NetId)>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlwaysBlock {
    pub trigger: Trigger,
    pub body: Stmt,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Connections {
    Named(Vec<(String, Option<Expr>)>),
    Positional(Vec<Option<Expr>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub module: String,
    pub name: String,
    /// Parameter overrides, by name or by position.
    pub params: Vec<(Option<String>, BitVector)>,
    pub connections: Connections,
    pub line: usize,
}

/// A construct that parses but that the internal simulator does not execute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Unsupported {
    pub construct: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleAst {
    pub name: String,
    pub line: usize,
    pub ports: Vec<PortDecl>,
    pub nets: Vec<NetDecl>,
    pub params: Vec<(String, BitVector)>,
    pub assigns: Vec<ContinuousAssign>,
    pub always_blocks: Vec<AlwaysBlock>,
    pub initial_blocks: Vec<Stmt>,
    pub instances: Vec<Instance>,
    pub unsupported: Vec<Unsupported>,
}

impl ModuleAst {
    pub fn net_id(&self, name: &str) -> Option<NetId> {
        self.nets.iter().position(|n| n.name == name)
    }

    pub fn port(&self, name: &str) -> Option<&PortDecl> {
        self.ports.iter().find(|p| p.name == name)
    }

    pub fn inputs(&self) -> impl Iterator<Item = &PortDecl> {
        self.ports.iter().filter(|p| p.dir == PortDir::Input)
    }

    pub fn outputs(&self) -> impl Iterator<Item = &PortDecl> {
        self.ports.iter().filter(|p| p.dir != PortDir::Input)
    }

    /// The first construct the internal simulator cannot execute, if any.
    pub fn first_unsupported(&self) -> Option<&Unsupported> {
        self.unsupported.first()
    }
}

/// Parsed source file: every module in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceUnit {
    pub modules: Vec<ModuleAst>,
    /// Token stream of each module, kept for re-parsing with parameter
    /// overrides during elaboration.
    #[serde(skip)]
    pub(crate) module_tokens: Vec<Vec<super::lexer::Token>>,
}

impl SourceUnit {
    pub fn module(&self, name: &str) -> Option<&ModuleAst> {
        self.modules.iter().find(|m| m.name == name)
    }

    /// The design's top module: the last module not instantiated by another.
    pub fn top(&self) -> Option<&ModuleAst> {
        let instantiated: Vec<&str> = self
            .modules
            .iter()
            .flat_map(|m| m.instances.iter().map(|i| i.module.as_str()))
            .collect();
        self.modules
            .iter()
            .rev()
            .find(|m| !instantiated.contains(&m.name.as_str()))
            .or_else(|| self.modules.last())
    }
}
