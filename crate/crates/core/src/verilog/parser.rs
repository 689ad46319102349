//! Recursive-descent parser for the Verilog subset.
//!
//! The parser resolves identifiers against the module's declarations and
//! folds parameters as it goes. Constructs that are legal Verilog but outside
//! what the simulator executes are parsed (so syntax checking stays faithful)
//! and recorded in [`ModuleAst::unsupported`].

use std::collections::{BTreeMap, HashMap};

use super::ast::*;
use super::eval;
use super::lexer::{self, Token, TokenKind};
use super::value::{self, BitVector, MAX_WIDTH};
use super::Diagnostic;

type PResult<T> = Result<T, Diagnostic>;

pub(crate) type Overrides = BTreeMap<String, BitVector>;

const GATE_PRIMITIVES: &[&str] = &[
    "and", "or", "not", "nand", "nor", "xor", "xnor", "buf", "bufif0", "bufif1", "notif0", "notif1", "pullup",
    "pulldown",
];

/// Parses every module in `tokens`. Returns the unit plus warnings, or the
/// diagnostics that made parsing fail.
pub(crate) fn parse_tokens(tokens: Vec<Token>) -> Result<(SourceUnit, Vec<Diagnostic>), Vec<Diagnostic>> {
    let mut modules = Vec::new();
    let mut sources = Vec::new();
    let mut warnings = Vec::new();
    let empty = Overrides::new();
    let mut p = Parser::new(&tokens, &empty);
    while p.peek().is_some() {
        let start = p.pos;
        if !(p.at("module") || p.at("macromodule")) {
            let tok = p.peek().unwrap();
            return Err(vec![Diagnostic::error(
                tok.line,
                "E-PARSE",
                format!("expected `module`, found `{}`", tok.text),
            )]);
        }
        let (m, w) = p.module().map_err(|d| vec![d])?;
        warnings.extend(w);
        sources.push(tokens[start..p.pos].to_vec());
        modules.push(m);
    }
    if modules.is_empty() {
        return Err(vec![Diagnostic::error(1, "E-EMPTY", "no module declaration found")]);
    }
    let unit = SourceUnit {
        modules,
        module_tokens: sources,
    };
    check_unit(&unit)?;
    Ok((unit, warnings))
}

/// Re-parses one module's tokens with parameter overrides applied.
pub(crate) fn reparse_module(tokens: &[Token], overrides: &Overrides) -> PResult<ModuleAst> {
    let mut p = Parser::new(tokens, overrides);
    p.module().map(|(m, _)| m)
}

fn check_unit(unit: &SourceUnit) -> Result<(), Vec<Diagnostic>> {
    let mut errors = Vec::new();
    for (i, m) in unit.modules.iter().enumerate() {
        if unit.modules[..i].iter().any(|o| o.name == m.name) {
            errors.push(Diagnostic::error(
                m.line,
                "E-DUPMOD",
                format!("module `{}` is defined more than once", m.name),
            ));
        }
        for inst in &m.instances {
            let Some(sub) = unit.module(&inst.module) else {
                errors.push(Diagnostic::error(
                    inst.line,
                    "E-UNKMOD",
                    format!("unknown module type `{}`", inst.module),
                ));
                continue;
            };
            match &inst.connections {
                Connections::Named(conns) => {
                    for (port, _) in conns {
                        if sub.port(port).is_none() {
                            errors.push(Diagnostic::error(
                                inst.line,
                                "E-PORT",
                                format!("module `{}` has no port `{port}`", sub.name),
                            ));
                        }
                    }
                }
                Connections::Positional(conns) => {
                    if conns.len() > sub.ports.len() {
                        errors.push(Diagnostic::error(
                            inst.line,
                            "E-PORT",
                            format!(
                                "instance `{}` connects {} ports but `{}` has {}",
                                inst.name,
                                conns.len(),
                                sub.name,
                                sub.ports.len()
                            ),
                        ));
                    }
                }
            }
        }
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    overrides: &'a Overrides,
}

/// Per-module declaration state.
#[derive(Default)]
struct Scope {
    nets: Vec<NetDecl>,
    index: HashMap<String, NetId>,
    /// Placeholder nets referenced before (or without) a declaration, with
    /// the first line and whether every use could create an implicit net.
    undeclared: BTreeMap<NetId, (usize, bool)>,
    /// Port names from a non-ANSI header, in order.
    header_ports: Vec<String>,
    params: Vec<(String, BitVector)>,
    param_index: HashMap<String, (BitVector, bool)>,
    unsupported: Vec<Unsupported>,
}

struct PortStyle {
    dir: PortDir,
    kind: Option<NetKind>,
    signed: bool,
    range: Range,
}

impl<'a> Parser<'a> {
    fn new(toks: &'a [Token], overrides: &'a Overrides) -> Self {
        Parser {
            toks,
            pos: 0,
            overrides,
        }
    }

    fn peek(&self) -> Option<&'a Token> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, off: usize) -> Option<&'a Token> {
        self.toks.get(self.pos + off)
    }

    fn at(&self, text: &str) -> bool {
        self.peek().is_some_and(|t| t.is(text))
    }

    fn line(&self) -> usize {
        self.peek().or_else(|| self.toks.last()).map(|t| t.line).unwrap_or(1)
    }

    fn bump(&mut self) -> PResult<&'a Token> {
        let tok = self
            .toks
            .get(self.pos)
            .ok_or_else(|| Diagnostic::error(self.line(), "E-EOF", "unexpected end of input"))?;
        self.pos += 1;
        Ok(tok)
    }

    fn eat(&mut self, text: &str) -> bool {
        if self.at(text) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, text: &str) -> PResult<()> {
        match self.peek() {
            Some(t) if t.is(text) => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(self.error(format!("expected `{text}`, found `{}`", t.text))),
            None => Err(Diagnostic::error(
                self.line(),
                "E-EOF",
                format!("expected `{text}` before end of input"),
            )),
        }
    }

    fn error(&self, message: impl Into<String>) -> Diagnostic {
        Diagnostic::error(self.line(), "E-PARSE", message)
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier && !t.text.starts_with('$') => {
                self.pos += 1;
                Ok(t.text.clone())
            }
            Some(t) => Err(self.error(format!("expected identifier, found `{}`", t.text))),
            None => Err(Diagnostic::error(
                self.line(),
                "E-EOF",
                "expected identifier before end of input",
            )),
        }
    }

    // ---------------------------------------------------------------- module

    fn module(&mut self) -> PResult<(ModuleAst, Vec<Diagnostic>)> {
        let line = self.line();
        self.bump()?; // module / macromodule
        let name = self.ident()?;
        let mut scope = Scope::default();
        let mut m = ModuleAst {
            name,
            line,
            ports: Vec::new(),
            nets: Vec::new(),
            params: Vec::new(),
            assigns: Vec::new(),
            always_blocks: Vec::new(),
            initial_blocks: Vec::new(),
            instances: Vec::new(),
            unsupported: Vec::new(),
        };
        let mut ansi_ports: Vec<NetId> = Vec::new();

        if self.eat("#") {
            self.expect("(")?;
            if !self.at(")") {
                loop {
                    let local = self.at("localparam");
                    if self.at("parameter") || local {
                        self.bump()?;
                    }
                    self.param_decl_one(&mut scope, local)?;
                    if !self.eat(",") {
                        break;
                    }
                }
            }
            self.expect(")")?;
        }

        if self.eat("(") {
            if self.at("input") || self.at("output") || self.at("inout") {
                let mut style: Option<PortStyle> = None;
                loop {
                    if let Some(dir) = self.direction() {
                        let (kind, signed, range) = self.net_type_and_range(&mut scope)?;
                        style = Some(PortStyle {
                            dir,
                            kind,
                            signed,
                            range,
                        });
                    }
                    let st = style
                        .as_ref()
                        .ok_or_else(|| self.error("port declaration missing direction"))?;
                    let pline = self.line();
                    let pname = self.ident()?;
                    let kind = st.kind.unwrap_or(if st.dir == PortDir::Input {
                        NetKind::Wire
                    } else {
                        NetKind::Wire
                    });
                    if st.dir == PortDir::Input && kind == NetKind::Reg {
                        return Err(Diagnostic::error(
                            pline,
                            "E-PORT",
                            format!("input port `{pname}` cannot be declared reg"),
                        ));
                    }
                    let id = self.declare(
                        &mut scope,
                        &pname,
                        Some(kind),
                        st.range,
                        st.signed,
                        Some(st.dir),
                        None,
                        pline,
                    )?;
                    ansi_ports.push(id);
                    if !self.eat(",") {
                        break;
                    }
                }
            } else if !self.at(")") {
                loop {
                    let pname = self.ident()?;
                    if scope.header_ports.contains(&pname) {
                        return Err(self.error(format!("duplicate port `{pname}`")));
                    }
                    scope.header_ports.push(pname);
                    if !self.eat(",") {
                        break;
                    }
                }
            }
            self.expect(")")?;
        }
        self.expect(";")?;

        loop {
            match self.peek() {
                None => {
                    return Err(Diagnostic::error(
                        self.line(),
                        "E-EOF",
                        format!("missing `endmodule` for module `{}`", m.name),
                    ))
                }
                Some(t) if t.is("endmodule") => {
                    self.pos += 1;
                    break;
                }
                Some(t) if t.is("module") || t.is("macromodule") => {
                    return Err(self.error(format!(
                        "nested module declaration; missing `endmodule` for `{}`",
                        m.name
                    )))
                }
                _ => self.module_item(&mut scope, &mut m)?,
            }
        }

        // Ports
        if ansi_ports.is_empty() {
            for pname in &scope.header_ports {
                let id = scope.index[pname];
                let net = &scope.nets[id];
                let dir = net.dir.ok_or_else(|| {
                    Diagnostic::error(m.line, "E-PORT", format!("port `{pname}` has no direction declaration"))
                })?;
                m.ports.push(PortDecl {
                    name: pname.clone(),
                    dir,
                    width: net.width(),
                    net: id,
                });
            }
        } else {
            for id in ansi_ports {
                let net = &scope.nets[id];
                m.ports.push(PortDecl {
                    name: net.name.clone(),
                    dir: net.dir.unwrap(),
                    width: net.width(),
                    net: id,
                });
            }
        }
        for net in &scope.nets {
            if net.dir.is_some() && !m.ports.iter().any(|p| p.name == net.name) {
                return Err(Diagnostic::error(
                    net.line,
                    "E-PORT",
                    format!("`{}` is declared as a port but is not in the port list", net.name),
                ));
            }
        }

        let mut warnings = Vec::new();
        for (&id, &(line, implicit_ok)) in &scope.undeclared {
            let name = &scope.nets[id].name;
            if implicit_ok {
                warnings.push(Diagnostic::warning(
                    line,
                    "W-IMPLICIT",
                    format!("implicit 1-bit net `{name}`"),
                ));
            } else {
                return Err(Diagnostic::error(line, "E-UNDECL", format!("`{name}` is not declared")));
            }
        }

        m.nets = scope.nets;
        m.params = scope.params;
        m.unsupported = scope.unsupported;
        check_drivers(&mut m)?;
        Ok((m, warnings))
    }

    fn direction(&mut self) -> Option<PortDir> {
        let dir = match self.peek()?.text.as_str() {
            "input" => PortDir::Input,
            "output" => PortDir::Output,
            "inout" => PortDir::Inout,
            _ => return None,
        };
        self.pos += 1;
        Some(dir)
    }

    /// `[wire|reg|integer] [signed] [range]`
    fn net_type_and_range(&mut self, scope: &mut Scope) -> PResult<(Option<NetKind>, bool, Range)> {
        let kind = if self.eat("wire") || self.eat("tri") {
            Some(NetKind::Wire)
        } else if self.eat("reg") {
            Some(NetKind::Reg)
        } else if self.eat("integer") {
            Some(NetKind::Integer)
        } else {
            None
        };
        let mut signed = kind == Some(NetKind::Integer);
        if self.eat("signed") {
            signed = true;
        } else if self.eat("unsigned") {
            signed = false;
        }
        let range = if kind == Some(NetKind::Integer) {
            Range { msb: 31, lsb: 0 }
        } else if self.at("[") {
            self.range(scope)?
        } else {
            Range::scalar()
        };
        Ok((kind, signed, range))
    }

    fn range(&mut self, scope: &mut Scope) -> PResult<Range> {
        self.expect("[")?;
        let msb = self.const_int(scope)?;
        self.expect(":")?;
        let lsb = self.const_int(scope)?;
        self.expect("]")?;
        let r = Range { msb, lsb };
        if r.width() > MAX_WIDTH {
            scope.unsupported.push(Unsupported {
                construct: format!("vector wider than {MAX_WIDTH} bits"),
                line: self.line(),
            });
        }
        Ok(r)
    }

    fn const_int(&mut self, scope: &mut Scope) -> PResult<i64> {
        let line = self.line();
        let e = self.expr(scope)?;
        let v = self.const_value(&e, line)?;
        let signed = eval::is_signed_const(&e);
        Ok(if signed { v.as_signed() as i64 } else { v.bits() as i64 })
    }

    fn const_value(&self, e: &Expr, line: usize) -> PResult<BitVector> {
        eval::const_eval(e).map_err(|err| Diagnostic::error(line, "E-CONST", err.to_string()))
    }

    #[allow(clippy::too_many_arguments)]
    fn declare(
        &mut self,
        scope: &mut Scope,
        name: &str,
        kind: Option<NetKind>,
        range: Range,
        signed: bool,
        dir: Option<PortDir>,
        array: Option<(i64, i64)>,
        line: usize,
    ) -> PResult<NetId> {
        if scope.param_index.contains_key(name) {
            return Err(Diagnostic::error(
                line,
                "E-REDECL",
                format!("`{name}` is already declared as a parameter"),
            ));
        }
        if let Some(&id) = scope.index.get(name) {
            if scope.undeclared.remove(&id).is_some() {
                let net = &mut scope.nets[id];
                net.kind = kind.unwrap_or(NetKind::Wire);
                net.range = range;
                net.signed = signed;
                net.dir = dir;
                net.array = array;
                net.line = line;
                return Ok(id);
            }
            let net = &mut scope.nets[id];
            let header_port = scope.header_ports.iter().any(|p| p == name);
            // `output y; reg y;` or a header port getting its direction.
            let merge_dir = dir.is_some() && net.dir.is_none() && header_port;
            let merge_kind = dir.is_none() && net.dir.is_some() && kind.is_some();
            if merge_dir {
                net.dir = dir;
                if let Some(k) = kind {
                    net.kind = k;
                }
                net.range = range;
                net.signed |= signed;
                return Ok(id);
            }
            if merge_kind {
                if range != Range::scalar() && net.range != Range::scalar() && range != net.range {
                    return Err(Diagnostic::error(
                        line,
                        "E-REDECL",
                        format!("`{name}` redeclared with a different range"),
                    ));
                }
                if range != Range::scalar() {
                    net.range = range;
                }
                if net.dir == Some(PortDir::Input) && kind == Some(NetKind::Reg) {
                    return Err(Diagnostic::error(
                        line,
                        "E-PORT",
                        format!("input port `{name}` cannot be declared reg"),
                    ));
                }
                net.kind = kind.unwrap();
                net.signed |= signed;
                return Ok(id);
            }
            return Err(Diagnostic::error(
                line,
                "E-REDECL",
                format!("`{name}` is declared more than once"),
            ));
        }
        if dir.is_some() && !scope.header_ports.is_empty() && !scope.header_ports.iter().any(|p| p == name) {
            return Err(Diagnostic::error(
                line,
                "E-PORT",
                format!("`{name}` is declared as a port but is not in the port list"),
            ));
        }
        let id = scope.nets.len();
        scope.nets.push(NetDecl {
            name: name.to_string(),
            kind: kind.unwrap_or(NetKind::Wire),
            range,
            signed,
            array,
            dir,
            line,
        });
        scope.index.insert(name.to_string(), id);
        Ok(id)
    }

    /// Resolves a net name, creating a placeholder for forward references.
    fn reference(&mut self, scope: &mut Scope, name: &str, line: usize, implicit_ok: bool) -> NetId {
        if let Some(&id) = scope.index.get(name) {
            if let Some(entry) = scope.undeclared.get_mut(&id) {
                entry.1 &= implicit_ok;
            }
            return id;
        }
        // Non-ANSI header ports are declared later in the body.
        let id = scope.nets.len();
        scope.nets.push(NetDecl {
            name: name.to_string(),
            kind: NetKind::Wire,
            range: Range::scalar(),
            signed: false,
            array: None,
            dir: None,
            line,
        });
        scope.index.insert(name.to_string(), id);
        scope.undeclared.insert(id, (line, implicit_ok));
        id
    }

    fn unsupported(&self, scope: &mut Scope, construct: impl Into<String>, line: usize) {
        scope.unsupported.push(Unsupported {
            construct: construct.into(),
            line,
        });
    }

    fn param_decl_one(&mut self, scope: &mut Scope, local: bool) -> PResult<()> {
        let mut signed = false;
        if self.eat("signed") {
            signed = true;
        }
        self.eat("integer");
        let range = if self.at("[") { Some(self.range(scope)?) } else { None };
        let line = self.line();
        let name = self.ident()?;
        self.expect("=")?;
        let e = self.expr(scope)?;
        let mut value = self.const_value(&e, line)?;
        let mut is_signed = signed || (range.is_none() && eval::is_signed_const(&e));
        if !local {
            if let Some(v) = self.overrides.get(&name) {
                value = *v;
                if range.is_none() {
                    is_signed = false;
                }
            }
        }
        if let Some(r) = range {
            value = if is_signed {
                value.sign_resize(r.width().min(MAX_WIDTH))
            } else {
                value.resize(r.width().min(MAX_WIDTH))
            };
        }
        if scope.index.contains_key(&name) || scope.param_index.contains_key(&name) {
            return Err(Diagnostic::error(
                line,
                "E-REDECL",
                format!("`{name}` is declared more than once"),
            ));
        }
        scope.params.push((name.clone(), value));
        scope.param_index.insert(name, (value, is_signed));
        Ok(())
    }

    fn skip_to(&mut self, end: &str) -> PResult<()> {
        while !self.at(end) {
            if self.at("endmodule") {
                return Err(self.error(format!("expected `{end}` before `endmodule`")));
            }
            self.bump()?;
        }
        self.bump()?;
        Ok(())
    }

    fn module_item(&mut self, scope: &mut Scope, m: &mut ModuleAst) -> PResult<()> {
        let tok = self.peek().unwrap();
        let line = tok.line;
        match tok.text.as_str() {
            "input" | "output" | "inout" if tok.kind == TokenKind::Keyword => {
                let dir = self.direction().unwrap();
                let (kind, signed, range) = self.net_type_and_range(scope)?;
                loop {
                    let nline = self.line();
                    let name = self.ident()?;
                    if dir == PortDir::Input && kind == Some(NetKind::Reg) {
                        return Err(Diagnostic::error(
                            nline,
                            "E-PORT",
                            format!("input port `{name}` cannot be declared reg"),
                        ));
                    }
                    let id = self.declare(scope, &name, kind, range, signed, Some(dir), None, nline)?;
                    if self.eat("=") {
                        let e = self.expr(scope)?;
                        self.init_assign(scope, m, id, e, nline);
                    }
                    if !self.eat(",") {
                        break;
                    }
                }
                self.expect(";")
            }
            "wire" | "reg" | "integer" | "tri" if tok.kind == TokenKind::Keyword => {
                let (kind, signed, range) = self.net_type_and_range(scope)?;
                loop {
                    let nline = self.line();
                    let name = self.ident()?;
                    let mut array = None;
                    if self.at("[") {
                        self.bump()?;
                        let a = self.const_int(scope)?;
                        self.expect(":")?;
                        let b = self.const_int(scope)?;
                        self.expect("]")?;
                        array = Some((a, b));
                        if (a - b).unsigned_abs() >= 1 << 16 {
                            self.unsupported(scope, "memory with more than 65536 entries", nline);
                        }
                        if self.at("[") {
                            self.range(scope)?;
                            self.unsupported(scope, "multi-dimensional memory", nline);
                        }
                    }
                    let id = self.declare(scope, &name, kind, range, signed, None, array, nline)?;
                    if self.eat("=") {
                        let e = self.expr(scope)?;
                        self.init_assign(scope, m, id, e, nline);
                    }
                    if !self.eat(",") {
                        break;
                    }
                }
                self.expect(";")
            }
            "parameter" | "localparam" => {
                let local = tok.text == "localparam";
                self.bump()?;
                loop {
                    self.param_decl_one(scope, local)?;
                    if !self.eat(",") {
                        break;
                    }
                }
                self.expect(";")
            }
            "assign" => {
                self.bump()?;
                if self.at("#") {
                    self.delay(scope)?;
                    self.unsupported(scope, "delay", line);
                }
                loop {
                    let aline = self.line();
                    let lhs = self.lvalue(scope, true)?;
                    self.expect("=")?;
                    let expr = self.expr(scope)?;
                    m.assigns.push(ContinuousAssign { lhs, expr, line: aline });
                    if !self.eat(",") {
                        break;
                    }
                }
                self.expect(";")
            }
            "always" => {
                self.bump()?;
                let trigger = if self.at("@") {
                    self.event_control(scope)?
                } else {
                    self.unsupported(scope, "always block without event control", line);
                    Trigger::Combinational
                };
                let body = self.stmt(scope)?;
                m.always_blocks.push(AlwaysBlock { trigger, body, line });
                Ok(())
            }
            "initial" => {
                self.bump()?;
                let body = self.stmt(scope)?;
                m.initial_blocks.push(body);
                Ok(())
            }
            "generate" => {
                self.unsupported(scope, "generate block", line);
                self.skip_to("endgenerate")
            }
            "genvar" => {
                self.unsupported(scope, "genvar", line);
                self.skip_to(";")
            }
            "function" => {
                self.unsupported(scope, "function", line);
                self.skip_to("endfunction")
            }
            "task" => {
                self.unsupported(scope, "task", line);
                self.skip_to("endtask")
            }
            "specify" => {
                self.unsupported(scope, "specify block", line);
                self.skip_to("endspecify")
            }
            "real" | "realtime" | "time" | "event" | "defparam" | "supply0" | "supply1" => {
                let what = tok.text.clone();
                self.unsupported(scope, what, line);
                self.skip_to(";")
            }
            "for" | "if" | "case" => Err(self.error(format!(
                "`{}` at module level (generate without `generate`) is not supported",
                tok.text
            ))),
            t if tok.kind == TokenKind::Keyword && GATE_PRIMITIVES.contains(&t) => {
                self.unsupported(scope, format!("gate primitive `{t}`"), line);
                self.skip_to(";")
            }
            ";" => {
                self.bump()?;
                Ok(())
            }
            _ if tok.kind == TokenKind::Identifier && !tok.text.starts_with('$') => self.instantiation(scope, m),
            _ => Err(self.error(format!("unexpected `{}` in module body", tok.text))),
        }
    }

    fn init_assign(&mut self, scope: &mut Scope, m: &mut ModuleAst, id: NetId, e: Expr, line: usize) {
        match scope.nets[id].kind {
            NetKind::Wire => m.assigns.push(ContinuousAssign {
                lhs: LValue::Net(id),
                expr: e,
                line,
            }),
            _ => {
                if scope.nets[id].array.is_some() {
                    self.unsupported(scope, "memory initializer", line);
                }
                m.initial_blocks.push(Stmt::Blocking(LValue::Net(id), e));
            }
        }
    }

    fn instantiation(&mut self, scope: &mut Scope, m: &mut ModuleAst) -> PResult<()> {
        let module = self.ident()?;
        let mut params = Vec::new();
        if self.eat("#") {
            if self.eat("(") {
                if !self.at(")") {
                    loop {
                        if self.eat(".") {
                            let pname = self.ident()?;
                            self.expect("(")?;
                            let line = self.line();
                            let e = self.expr(scope)?;
                            self.expect(")")?;
                            params.push((Some(pname), self.const_value(&e, line)?));
                        } else {
                            let line = self.line();
                            let e = self.expr(scope)?;
                            params.push((None, self.const_value(&e, line)?));
                        }
                        if !self.eat(",") {
                            break;
                        }
                    }
                }
                self.expect(")")?;
            } else {
                let line = self.line();
                let e = self.primary(scope)?;
                params.push((None, self.const_value(&e, line)?));
            }
        }
        loop {
            let line = self.line();
            let name = self.ident()?;
            if self.at("[") {
                self.range(scope)?;
                self.unsupported(scope, "instance array", line);
            }
            self.expect("(")?;
            let connections = if self.at(".") {
                let mut named = Vec::new();
                loop {
                    self.expect(".")?;
                    let port = self.ident()?;
                    self.expect("(")?;
                    let e = if self.at(")") {
                        None
                    } else {
                        Some(self.expr_implicit(scope)?)
                    };
                    self.expect(")")?;
                    if named.iter().any(|(p, _): &(String, _)| *p == port) {
                        return Err(self.error(format!("port `{port}` connected twice")));
                    }
                    named.push((port, e));
                    if !self.eat(",") {
                        break;
                    }
                }
                Connections::Named(named)
            } else {
                let mut pos = Vec::new();
                if !self.at(")") {
                    loop {
                        if self.at(",") || self.at(")") {
                            pos.push(None);
                        } else {
                            pos.push(Some(self.expr_implicit(scope)?));
                        }
                        if !self.eat(",") {
                            break;
                        }
                    }
                }
                Connections::Positional(pos)
            };
            self.expect(")")?;
            m.instances.push(Instance {
                module: module.clone(),
                name,
                params: params.clone(),
                connections,
                line,
            });
            if !self.eat(",") {
                break;
            }
        }
        self.expect(";")
    }

    /// Port-connection expressions may create implicit nets.
    fn expr_implicit(&mut self, scope: &mut Scope) -> PResult<Expr> {
        if let (Some(t), Some(next)) = (self.peek(), self.peek_at(1)) {
            if t.kind == TokenKind::Identifier
                && !t.text.starts_with('$')
                && (next.is(")") || next.is(","))
                && !scope.param_index.contains_key(&t.text)
            {
                let line = t.line;
                let name = t.text.clone();
                self.pos += 1;
                return Ok(Expr::Net(self.reference(scope, &name, line, true)));
            }
        }
        self.expr(scope)
    }

    fn event_control(&mut self, scope: &mut Scope) -> PResult<Trigger> {
        let line = self.line();
        self.expect("@")?;
        if self.eat("*") {
            return Ok(Trigger::Combinational);
        }
        self.expect("(")?;
        if self.at("*") {
            self.bump()?;
            self.expect(")")?;
            return Ok(Trigger::Combinational);
        }
        let mut edges = Vec::new();
        let mut levels = 0usize;
        loop {
            let edge = if self.eat("posedge") {
                Some(Edge::Posedge)
            } else if self.eat("negedge") {
                Some(Edge::Negedge)
            } else {
                None
            };
            let nline = self.line();
            let name = self.ident()?;
            let id = self.reference(scope, &name, nline, false);
            if self.at("[") {
                self.bump()?;
                self.expr(scope)?;
                self.expect("]")?;
                self.unsupported(scope, "bit-select in sensitivity list", nline);
            }
            match edge {
                Some(e) => edges.push((e, id)),
                None => levels += 1,
            }
            if !(self.eat("or") || self.eat(",")) {
                break;
            }
        }
        self.expect(")")?;
        if edges.is_empty() {
            Ok(Trigger::Combinational)
        } else {
            if levels > 0 {
                self.unsupported(scope, "mixed edge and level sensitivity", line);
            }
            Ok(Trigger::Edges(edges))
        }
    }

    fn delay(&mut self, scope: &mut Scope) -> PResult<()> {
        self.expect("#")?;
        if self.eat("(") {
            self.expr(scope)?;
            self.expect(")")?;
        } else {
            let t = self.bump()?;
            if !(t.kind == TokenKind::Number || t.kind == TokenKind::Identifier) {
                return Err(self.error(format!("bad delay value `{}`", t.text)));
            }
        }
        Ok(())
    }

    // ------------------------------------------------------------ statements

    fn stmt(&mut self, scope: &mut Scope) -> PResult<Stmt> {
        let tok = self
            .peek()
            .ok_or_else(|| Diagnostic::error(self.line(), "E-EOF", "expected statement before end of input"))?;
        let line = tok.line;
        match tok.text.as_str() {
            ";" => {
                self.bump()?;
                Ok(Stmt::Null)
            }
            "begin" => {
                self.bump()?;
                if self.eat(":") {
                    self.ident()?;
                    // Block-local declarations live in module scope.
                    while self.at("integer") || self.at("reg") {
                        let (kind, signed, range) = self.net_type_and_range(scope)?;
                        loop {
                            let nline = self.line();
                            let name = self.ident()?;
                            if !scope.index.contains_key(&name) {
                                self.declare(scope, &name, kind, range, signed, None, None, nline)?;
                            }
                            if !self.eat(",") {
                                break;
                            }
                        }
                        self.expect(";")?;
                    }
                }
                let mut stmts = Vec::new();
                while !self.at("end") {
                    if self.peek().is_none() || self.at("endmodule") {
                        return Err(Diagnostic::error(line, "E-PARSE", "`begin` without matching `end`"));
                    }
                    stmts.push(self.stmt(scope)?);
                }
                self.bump()?;
                if self.eat(":") {
                    self.ident()?;
                }
                Ok(Stmt::Block(stmts))
            }
            "if" => {
                self.bump()?;
                self.expect("(")?;
                let cond = self.expr(scope)?;
                self.expect(")")?;
                let then = self.stmt(scope)?;
                let els = if self.eat("else") {
                    Some(Box::new(self.stmt(scope)?))
                } else {
                    None
                };
                Ok(Stmt::If(cond, Box::new(then), els))
            }
            "case" | "casez" | "casex" => self.case_stmt(scope),
            "for" => {
                self.bump()?;
                self.expect("(")?;
                let init = self.assignment(scope, true)?;
                self.expect(";")?;
                let cond = self.expr(scope)?;
                self.expect(";")?;
                let step = self.assignment(scope, true)?;
                self.expect(")")?;
                let body = self.stmt(scope)?;
                Ok(Stmt::For {
                    init: Box::new(init),
                    cond,
                    step: Box::new(step),
                    body: Box::new(body),
                })
            }
            "while" | "repeat" | "wait" => {
                let what = tok.text.clone();
                self.bump()?;
                self.expect("(")?;
                self.expr(scope)?;
                self.expect(")")?;
                self.unsupported(scope, format!("`{what}` statement"), line);
                self.stmt(scope)?;
                Ok(Stmt::Null)
            }
            "forever" => {
                self.bump()?;
                self.unsupported(scope, "`forever` statement", line);
                self.stmt(scope)?;
                Ok(Stmt::Null)
            }
            "#" => {
                self.delay(scope)?;
                self.unsupported(scope, "delay", line);
                self.stmt(scope)
            }
            "@" => {
                self.event_control(scope)?;
                self.unsupported(scope, "event control inside a statement", line);
                self.stmt(scope)
            }
            "disable" | "->" => {
                let what = tok.text.clone();
                self.unsupported(scope, format!("`{what}` statement"), line);
                self.skip_to(";")?;
                Ok(Stmt::Null)
            }
            "fork" => {
                self.unsupported(scope, "fork/join", line);
                self.skip_to("join")?;
                Ok(Stmt::Null)
            }
            _ if tok.kind == TokenKind::Identifier && tok.text.starts_with('$') => {
                let name = tok.text.clone();
                self.bump()?;
                if self.eat("(") {
                    if !self.at(")") {
                        loop {
                            if !(self.at(",") || self.at(")")) {
                                self.expr(scope)?;
                            }
                            if !self.eat(",") {
                                break;
                            }
                        }
                    }
                    self.expect(")")?;
                }
                self.expect(";")?;
                Ok(Stmt::SystemTask(name))
            }
            _ => {
                let s = self.assignment(scope, false)?;
                self.expect(";")?;
                Ok(s)
            }
        }
    }

    fn assignment(&mut self, scope: &mut Scope, blocking_only: bool) -> PResult<Stmt> {
        let line = self.line();
        let lhs = self.lvalue(scope, false)?;
        let nonblocking = if self.eat("=") {
            false
        } else if !blocking_only && self.eat("<=") {
            true
        } else {
            let found = self.peek().map(|t| t.text.clone()).unwrap_or_default();
            return Err(self.error(format!("expected assignment operator, found `{found}`")));
        };
        if self.at("#") {
            self.delay(scope)?;
            self.unsupported(scope, "intra-assignment delay", line);
        }
        let rhs = self.expr(scope)?;
        Ok(if nonblocking {
            Stmt::NonBlocking(lhs, rhs)
        } else {
            Stmt::Blocking(lhs, rhs)
        })
    }

    fn case_stmt(&mut self, scope: &mut Scope) -> PResult<Stmt> {
        let line = self.line();
        let kind = match self.bump()?.text.as_str() {
            "casez" => CaseKind::Casez,
            "casex" => CaseKind::Casex,
            _ => CaseKind::Case,
        };
        self.expect("(")?;
        let subject = self.expr(scope)?;
        self.expect(")")?;
        let mut items = Vec::new();
        let mut default = None;
        loop {
            if self.eat("endcase") {
                break;
            }
            if self.peek().is_none() || self.at("endmodule") {
                return Err(Diagnostic::error(line, "E-PARSE", "`case` without matching `endcase`"));
            }
            if self.eat("default") {
                self.eat(":");
                if default.is_some() {
                    return Err(self.error("multiple `default` items in case"));
                }
                default = Some(Box::new(self.stmt(scope)?));
                continue;
            }
            let mut labels = Vec::new();
            loop {
                let label = self.expr(scope)?;
                let mask = match (&label, kind) {
                    (Expr::Const { value, .. }, CaseKind::Casez | CaseKind::Casex) if !value.is_fully_known() => {
                        Some(value.known_mask())
                    }
                    _ => None,
                };
                labels.push((label, mask));
                if !self.eat(",") {
                    break;
                }
            }
            self.expect(":")?;
            let body = self.stmt(scope)?;
            items.push(CaseItem { labels, body });
        }
        Ok(Stmt::Case {
            kind,
            subject,
            items,
            default,
        })
    }

    fn lvalue(&mut self, scope: &mut Scope, implicit_ok: bool) -> PResult<LValue> {
        if self.eat("{") {
            let mut parts = Vec::new();
            loop {
                parts.push(self.lvalue(scope, implicit_ok)?);
                if !self.eat(",") {
                    break;
                }
            }
            self.expect("}")?;
            return Ok(LValue::Concat(parts));
        }
        let line = self.line();
        let name = self.ident()?;
        if scope.param_index.contains_key(&name) {
            return Err(Diagnostic::error(
                line,
                "E-ASSIGN",
                format!("cannot assign to parameter `{name}`"),
            ));
        }
        let id = self.reference(scope, &name, line, implicit_ok);
        if !self.at("[") {
            return Ok(LValue::Net(id));
        }
        let sel = self.select(scope, id)?;
        if self.at("[") {
            self.select(scope, id)?;
            self.unsupported(scope, "nested select on assignment target", line);
        }
        Ok(match sel {
            Expr::Index(n, i) => LValue::Index(n, *i),
            Expr::Part { net, msb, lsb } => LValue::Part { net, msb, lsb },
            Expr::IndexedPart {
                net,
                base,
                width,
                ascending,
            } => LValue::IndexedPart {
                net,
                base: *base,
                width,
                ascending,
            },
            _ => unreachable!(),
        })
    }

    /// Parses `[i]`, `[m:l]`, `[b+:w]` or `[b-:w]` applied to `net`.
    fn select(&mut self, scope: &mut Scope, net: NetId) -> PResult<Expr> {
        self.expect("[")?;
        let first = self.expr(scope)?;
        let out = if self.eat(":") {
            let line = self.line();
            let msb = self.const_value(&first, line)?;
            let lsb_e = self.expr(scope)?;
            let lsb = self.const_value(&lsb_e, line)?;
            Expr::Part {
                net,
                msb: signed_int(&first, msb),
                lsb: signed_int(&lsb_e, lsb),
            }
        } else if self.at("+:") || self.at("-:") {
            let ascending = self.bump()?.text == "+:";
            let line = self.line();
            let w = self.expr(scope)?;
            let width = self.const_value(&w, line)?.bits();
            if width == 0 || width > MAX_WIDTH as u128 {
                return Err(Diagnostic::error(line, "E-CONST", "bad indexed part-select width"));
            }
            Expr::IndexedPart {
                net,
                base: Box::new(first),
                width: width as u32,
                ascending,
            }
        } else {
            Expr::Index(net, Box::new(first))
        };
        self.expect("]")?;
        Ok(out)
    }

    // ----------------------------------------------------------- expressions

    fn expr(&mut self, scope: &mut Scope) -> PResult<Expr> {
        let cond = self.binary(scope, 0)?;
        if self.eat("?") {
            let t = self.expr(scope)?;
            self.expect(":")?;
            let f = self.expr(scope)?;
            return Ok(Expr::Ternary(Box::new(cond), Box::new(t), Box::new(f)));
        }
        Ok(cond)
    }

    fn binary(&mut self, scope: &mut Scope, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary(scope)?;
        loop {
            let Some(tok) = self.peek() else { break };
            if tok.kind != TokenKind::Operator {
                break;
            }
            let Some(op) = BinaryOp::from_symbol(&tok.text) else {
                break;
            };
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.bump()?;
            let next_min = if op == BinaryOp::Pow { prec } else { prec + 1 };
            let rhs = self.binary(scope, next_min)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self, scope: &mut Scope) -> PResult<Expr> {
        let Some(tok) = self.peek() else {
            return Err(Diagnostic::error(
                self.line(),
                "E-EOF",
                "expected expression before end of input",
            ));
        };
        if tok.kind == TokenKind::Operator {
            let op = match tok.text.as_str() {
                "+" => Some(UnaryOp::Plus),
                "-" => Some(UnaryOp::Neg),
                "~" => Some(UnaryOp::Not),
                "!" => Some(UnaryOp::LogicNot),
                "&" => Some(UnaryOp::RedAnd),
                "|" => Some(UnaryOp::RedOr),
                "^" => Some(UnaryOp::RedXor),
                "~&" => Some(UnaryOp::RedNand),
                "~|" => Some(UnaryOp::RedNor),
                "~^" | "^~" => Some(UnaryOp::RedXnor),
                _ => None,
            };
            if let Some(op) = op {
                self.bump()?;
                let operand = self.unary(scope)?;
                return Ok(Expr::Unary(op, Box::new(operand)));
            }
        }
        self.primary(scope)
    }

    fn primary(&mut self, scope: &mut Scope) -> PResult<Expr> {
        let tok = self.bump()?;
        let line = tok.line;
        match tok.kind {
            TokenKind::Number => number_expr(&tok.text).map_err(|msg| {
                if msg.starts_with("real") {
                    Diagnostic::error(line, "E-UNSUP", msg)
                } else {
                    Diagnostic::error(line, "E-NUMBER", msg)
                }
            }),
            TokenKind::String => {
                let body = &tok.text[1..tok.text.len() - 1];
                let bytes = body.as_bytes();
                if bytes.is_empty() || bytes.len() > 16 {
                    self.unsupported(scope, "string literal in expression", line);
                    return Ok(Expr::Const {
                        value: BitVector::zero(8),
                        signed: false,
                        sized: true,
                    });
                }
                let bits = bytes.iter().fold(0u128, |acc, b| (acc << 8) | *b as u128);
                Ok(Expr::Const {
                    value: BitVector::new(8 * bytes.len() as u32, bits),
                    signed: false,
                    sized: true,
                })
            }
            TokenKind::Punct if tok.text == "(" => {
                let e = self.expr(scope)?;
                self.expect(")")?;
                Ok(e)
            }
            TokenKind::Punct if tok.text == "{" => {
                let first = self.expr(scope)?;
                if self.at("{") {
                    let count = self.const_value(&first, line)?.bits();
                    self.bump()?;
                    let mut parts = Vec::new();
                    loop {
                        parts.push(self.expr(scope)?);
                        if !self.eat(",") {
                            break;
                        }
                    }
                    self.expect("}")?;
                    self.expect("}")?;
                    if count == 0 || count > MAX_WIDTH as u128 {
                        return Err(Diagnostic::error(line, "E-CONST", "bad replication count"));
                    }
                    return Ok(Expr::Replicate(count as u32, parts));
                }
                let mut parts = vec![first];
                while self.eat(",") {
                    parts.push(self.expr(scope)?);
                }
                self.expect("}")?;
                Ok(Expr::Concat(parts))
            }
            TokenKind::Identifier if tok.text.starts_with('$') => {
                let name = tok.text.clone();
                match name.as_str() {
                    "$signed" | "$unsigned" | "$clog2" => {
                        self.expect("(")?;
                        let inner = self.expr(scope)?;
                        self.expect(")")?;
                        Ok(match name.as_str() {
                            "$signed" => Expr::Signed(Box::new(inner)),
                            "$unsigned" => Expr::Unsigned(Box::new(inner)),
                            _ => {
                                let v = self.const_value(&inner, line)?.bits();
                                let log = if v <= 1 { 0 } else { 128 - (v - 1).leading_zeros() };
                                Expr::Const {
                                    value: BitVector::new(32, log as u128),
                                    signed: true,
                                    sized: false,
                                }
                            }
                        })
                    }
                    _ => {
                        if self.eat("(") {
                            if !self.at(")") {
                                loop {
                                    self.expr(scope)?;
                                    if !self.eat(",") {
                                        break;
                                    }
                                }
                            }
                            self.expect(")")?;
                        }
                        self.unsupported(scope, format!("system function `{name}`"), line);
                        Ok(Expr::Const {
                            value: BitVector::zero(32),
                            signed: false,
                            sized: false,
                        })
                    }
                }
            }
            TokenKind::Identifier => {
                let name = tok.text.clone();
                if let Some(&(value, signed)) = scope.param_index.get(&name) {
                    if self.at("[") {
                        self.unsupported(scope, "select on a parameter", line);
                        self.bump()?;
                        self.expr(scope)?;
                        if self.eat(":") {
                            self.expr(scope)?;
                        }
                        self.expect("]")?;
                    }
                    return Ok(Expr::Const {
                        value,
                        signed,
                        sized: true,
                    });
                }
                if self.at("(") {
                    self.unsupported(scope, format!("function call `{name}`"), line);
                    self.bump()?;
                    if !self.at(")") {
                        loop {
                            self.expr(scope)?;
                            if !self.eat(",") {
                                break;
                            }
                        }
                    }
                    self.expect(")")?;
                    return Ok(Expr::Const {
                        value: BitVector::zero(1),
                        signed: false,
                        sized: true,
                    });
                }
                let id = self.reference(scope, &name, line, false);
                if !self.at("[") {
                    return Ok(Expr::Net(id));
                }
                let sel = self.select(scope, id)?;
                if self.at("[") {
                    // mem[i][j]: bit select of a memory word.
                    let inner = self.select(scope, id)?;
                    if !matches!(sel, Expr::Index(..)) {
                        return Err(Diagnostic::error(line, "E-PARSE", "invalid nested select"));
                    }
                    self.unsupported(scope, "select on a memory word", line);
                    return Ok(inner);
                }
                Ok(sel)
            }
            _ => Err(Diagnostic::error(
                line,
                "E-PARSE",
                format!("unexpected `{}` in expression", tok.text),
            )),
        }
    }
}

fn signed_int(e: &Expr, v: BitVector) -> i64 {
    if eval::is_signed_const(e) {
        v.as_signed() as i64
    } else {
        v.bits() as i64
    }
}

fn number_expr(text: &str) -> Result<Expr, String> {
    if text.contains('.') {
        return Err(format!("real literal `{text}` is not supported"));
    }
    match value::parse_based(text)? {
        Some(lit) => {
            let value = if lit.known == value::mask(lit.width) {
                BitVector::new(lit.width, lit.bits)
            } else {
                BitVector::with_unknown(lit.width, lit.bits, lit.known)
            };
            Ok(Expr::Const {
                value,
                signed: lit.signed,
                sized: lit.sized,
            })
        }
        None => {
            let v: u128 = text
                .replace('_', "")
                .parse()
                .map_err(|_| format!("bad number `{text}`"))?;
            let width = value::min_width(v).max(32);
            Ok(Expr::Const {
                value: BitVector::new(width, v),
                signed: true,
                sized: false,
            })
        }
    }
}

/// Rejects continuous assignments to regs and procedural assignments to
/// nets; records multi-driver situations as unsupported.
fn check_drivers(m: &mut ModuleAst) -> PResult<()> {
    let mut cont_driven: HashMap<NetId, Vec<(u32, u32)>> = HashMap::new();
    for a in &m.assigns {
        let mut targets = Vec::new();
        a.lhs.nets(&mut targets);
        for id in targets {
            let net = &m.nets[id];
            if net.kind != NetKind::Wire {
                return Err(Diagnostic::error(
                    a.line,
                    "E-ASSIGN",
                    format!("continuous assignment to reg `{}`", net.name),
                ));
            }
            if net.dir == Some(PortDir::Input) {
                return Err(Diagnostic::error(
                    a.line,
                    "E-ASSIGN",
                    format!("continuous assignment to input port `{}`", net.name),
                ));
            }
        }
        for (id, lo, hi) in lvalue_bits(&a.lhs, &m.nets) {
            let spans = cont_driven.entry(id).or_default();
            if spans.iter().any(|&(l, h)| lo <= h && l <= hi) {
                m.unsupported.push(Unsupported {
                    construct: format!("multiple drivers on `{}`", m.nets[id].name),
                    line: a.line,
                });
            }
            spans.push((lo, hi));
        }
    }
    let mut proc_owner: HashMap<NetId, usize> = HashMap::new();
    for (bi, blk) in m.always_blocks.iter().enumerate() {
        let mut targets = Vec::new();
        stmt_targets(&blk.body, &mut targets);
        for id in targets {
            let net = &m.nets[id];
            if net.kind == NetKind::Wire {
                return Err(Diagnostic::error(
                    blk.line,
                    "E-ASSIGN",
                    format!("procedural assignment to net `{}` (declare it reg)", net.name),
                ));
            }
            if cont_driven.contains_key(&id) {
                m.unsupported.push(Unsupported {
                    construct: format!("`{}` driven by both assign and always", net.name),
                    line: blk.line,
                });
            }
            if let Some(&owner) = proc_owner.get(&id) {
                if owner != bi {
                    m.unsupported.push(Unsupported {
                        construct: format!("`{}` assigned in more than one always block", net.name),
                        line: blk.line,
                    });
                }
            } else {
                proc_owner.insert(id, bi);
            }
        }
    }
    for s in &m.initial_blocks {
        let mut targets = Vec::new();
        stmt_targets(s, &mut targets);
        for id in targets {
            if m.nets[id].kind == NetKind::Wire {
                return Err(Diagnostic::error(
                    m.nets[id].line,
                    "E-ASSIGN",
                    format!("procedural assignment to net `{}`", m.nets[id].name),
                ));
            }
        }
    }
    Ok(())
}

/// Bit spans (offsets from LSB, inclusive) written by an assignment target.
fn lvalue_bits(lv: &LValue, nets: &[NetDecl]) -> Vec<(NetId, u32, u32)> {
    match lv {
        LValue::Net(n) => vec![(*n, 0, nets[*n].width() - 1)],
        LValue::Index(n, Expr::Const { value, .. }) => match nets[*n].range.offset(value.bits() as i64) {
            Some(o) if nets[*n].array.is_none() => vec![(*n, o, o)],
            _ => vec![(*n, 0, nets[*n].width() - 1)],
        },
        LValue::Part { net, msb, lsb } => {
            let r = nets[*net].range;
            match (r.offset(*msb), r.offset(*lsb)) {
                (Some(a), Some(b)) => vec![(*net, a.min(b), a.max(b))],
                _ => vec![(*net, 0, nets[*net].width() - 1)],
            }
        }
        LValue::Index(n, _) | LValue::IndexedPart { net: n, .. } => {
            vec![(*n, 0, nets[*n].width() - 1)]
        }
        LValue::Concat(parts) => parts.iter().flat_map(|p| lvalue_bits(p, nets)).collect(),
    }
}

pub(crate) fn stmt_targets(s: &Stmt, out: &mut Vec<NetId>) {
    match s {
        Stmt::Block(v) => v.iter().for_each(|s| stmt_targets(s, out)),
        Stmt::Blocking(lv, _) | Stmt::NonBlocking(lv, _) => {
            let mut nets = Vec::new();
            lv.nets(&mut nets);
            for n in nets {
                if !out.contains(&n) {
                    out.push(n);
                }
            }
        }
        Stmt::If(_, t, e) => {
            stmt_targets(t, out);
            if let Some(e) = e {
                stmt_targets(e, out);
            }
        }
        Stmt::Case { items, default, .. } => {
            items.iter().for_each(|i| stmt_targets(&i.body, out));
            if let Some(d) = default {
                stmt_targets(d, out);
            }
        }
        Stmt::For { init, step, body, .. } => {
            stmt_targets(init, out);
            stmt_targets(step, out);
            stmt_targets(body, out);
        }
        Stmt::SystemTask(_) | Stmt::Null => {}
    }
}

#[allow(dead_code)]
pub(crate) fn is_legal_identifier(s: &str) -> bool {
    lexer::is_identifier(s)
}
