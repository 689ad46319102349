//! Two-state expression evaluation and statement execution.
//!
//! Widths follow Verilog sizing: every operand of a context-determined
//! operator is extended to the widest width in its context before the
//! operation, and signed arithmetic happens only when all operands in the
//! context are signed. Division or modulo by zero yields 0 (four-state
//! simulators give X).

use thiserror::Error;

use super::ast::*;
use super::value::{mask, sign_extend, BitVector, MAX_WIDTH};

/// Upper bound on `for` loop iterations inside one block execution.
pub const LOOP_LIMIT: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("combinational loop through `{0}`")]
    CombinationalLoop(String),
    #[error("port `{port}` expects {expected} bits, got a {got}-bit value")]
    WidthMismatch { port: String, expected: u32, got: u32 },
    #[error("unsupported construct: {construct} (line {line})")]
    UnsupportedConstruct { construct: String, line: usize },
    #[error("no value given for input `{0}`")]
    MissingInput(String),
    #[error("`{0}` is not an input port")]
    UnknownPort(String),
    #[error("input `{0}` has unknown (x/z) bits")]
    UnknownInput(String),
    #[error("module contains edge-triggered logic")]
    NotCombinational,
    #[error("not a constant expression")]
    NotConstant,
    #[error("expression wider than {MAX_WIDTH} bits")]
    TooWide,
    #[error("loop did not terminate within {0} iterations")]
    LoopBound(usize),
    #[error("whole-memory reference to `{0}`")]
    MemoryReference(String),
}

pub type EvalResult<T> = Result<T, EvalError>;

/// Storage for every net: one word per memory element (one for vectors).
pub type Values = Vec<Vec<u128>>;

pub fn initial_values(nets: &[NetDecl]) -> Values {
    nets.iter().map(|n| vec![0; n.array_len()]).collect()
}

fn net<'a>(nets: &'a [NetDecl], id: NetId) -> EvalResult<&'a NetDecl> {
    nets.get(id).ok_or(EvalError::NotConstant)
}

/// Self-determined width of `e`.
pub fn self_width(e: &Expr, nets: &[NetDecl]) -> EvalResult<u32> {
    let w = match e {
        Expr::Const { value, .. } => value.width(),
        Expr::Net(id) => net(nets, *id)?.width(),
        Expr::Index(id, _) => {
            let n = net(nets, *id)?;
            if n.array.is_some() {
                n.width()
            } else {
                1
            }
        }
        Expr::Part { msb, lsb, .. } => ((msb - lsb).unsigned_abs() + 1) as u32,
        Expr::IndexedPart { width, .. } => *width,
        Expr::Unary(op, a) => match op {
            UnaryOp::Plus | UnaryOp::Neg | UnaryOp::Not => self_width(a, nets)?,
            _ => 1,
        },
        Expr::Binary(op, a, b) => match op {
            BinaryOp::Add
            | BinaryOp::Sub
            | BinaryOp::Mul
            | BinaryOp::Div
            | BinaryOp::Mod
            | BinaryOp::And
            | BinaryOp::Or
            | BinaryOp::Xor
            | BinaryOp::Xnor => self_width(a, nets)?.max(self_width(b, nets)?),
            BinaryOp::Pow | BinaryOp::Shl | BinaryOp::Shr | BinaryOp::AShl | BinaryOp::AShr => self_width(a, nets)?,
            _ => 1,
        },
        Expr::Ternary(_, t, f) => self_width(t, nets)?.max(self_width(f, nets)?),
        Expr::Concat(parts) => {
            let mut sum = 0u32;
            for p in parts {
                sum += self_width(p, nets)?;
            }
            sum
        }
        Expr::Replicate(n, parts) => {
            let mut sum = 0u32;
            for p in parts {
                sum += self_width(p, nets)?;
            }
            sum.saturating_mul(*n)
        }
        Expr::Signed(a) | Expr::Unsigned(a) => self_width(a, nets)?,
    };
    if w > MAX_WIDTH {
        return Err(EvalError::TooWide);
    }
    Ok(w)
}

/// Whether `e` is a signed expression.
pub fn is_signed(e: &Expr, nets: &[NetDecl]) -> bool {
    match e {
        Expr::Const { signed, .. } => *signed,
        Expr::Net(id) => nets.get(*id).is_some_and(|n| n.signed),
        Expr::Index(id, _) => nets.get(*id).is_some_and(|n| n.array.is_some() && n.signed),
        Expr::Part { .. } | Expr::IndexedPart { .. } => false,
        Expr::Unary(op, a) => match op {
            UnaryOp::Plus | UnaryOp::Neg | UnaryOp::Not => is_signed(a, nets),
            _ => false,
        },
        Expr::Binary(op, a, b) => match op {
            BinaryOp::Add
            | BinaryOp::Sub
            | BinaryOp::Mul
            | BinaryOp::Div
            | BinaryOp::Mod
            | BinaryOp::And
            | BinaryOp::Or
            | BinaryOp::Xor
            | BinaryOp::Xnor => is_signed(a, nets) && is_signed(b, nets),
            BinaryOp::Pow | BinaryOp::Shl | BinaryOp::Shr | BinaryOp::AShl | BinaryOp::AShr => is_signed(a, nets),
            _ => false,
        },
        Expr::Ternary(_, t, f) => is_signed(t, nets) && is_signed(f, nets),
        Expr::Concat(_) | Expr::Replicate(..) => false,
        Expr::Signed(_) => true,
        Expr::Unsigned(_) => false,
    }
}

pub fn is_signed_const(e: &Expr) -> bool {
    is_signed(e, &[])
}

/// Evaluates an expression that references no nets.
pub fn const_eval(e: &Expr) -> EvalResult<BitVector> {
    let w = self_width(e, &[])?;
    let ctx = Ctx { nets: &[], vals: &[] };
    let v = ctx.eval(e, w, is_signed(e, &[]))?;
    Ok(BitVector::new(w, v))
}

fn extend(v: u128, from: u32, to: u32, signed: bool) -> u128 {
    if signed {
        sign_extend(v, from, to)
    } else {
        v & mask(from) & mask(to)
    }
}

fn to_i128(v: u128, w: u32) -> i128 {
    sign_extend(v, w, 128) as i128
}

/// Read-only evaluation context.
pub struct Ctx<'a> {
    pub nets: &'a [NetDecl],
    pub vals: &'a [Vec<u128>],
}

impl Ctx<'_> {
    fn read(&self, id: NetId) -> EvalResult<u128> {
        let n = net(self.nets, id)?;
        if n.array.is_some() {
            return Err(EvalError::MemoryReference(n.name.clone()));
        }
        Ok(self.vals[id][0])
    }

    /// Evaluates an index expression to a declared index.
    fn index(&self, e: &Expr) -> EvalResult<i64> {
        let w = self_width(e, self.nets)?;
        let s = is_signed(e, self.nets);
        let v = self.eval(e, w, s)?;
        Ok(if s {
            to_i128(v, w).clamp(i64::MIN as i128, i64::MAX as i128) as i64
        } else {
            v.min(i64::MAX as u128) as i64
        })
    }

    fn part(&self, id: NetId, m: i64, l: i64) -> EvalResult<u128> {
        let n = net(self.nets, id)?;
        let v = self.read(id)?;
        let width = ((m - l).unsigned_abs() + 1) as u32;
        if width > MAX_WIDTH {
            return Err(EvalError::TooWide);
        }
        if let (Some(a), Some(b)) = (n.range.offset(m), n.range.offset(l)) {
            return Ok((v >> a.min(b)) & mask(width));
        }
        let mut out = 0u128;
        for j in 0..width as i64 {
            let idx = if m >= l { l + j } else { l - j };
            if let Some(o) = n.range.offset(idx) {
                out |= ((v >> o) & 1) << j;
            }
        }
        Ok(out)
    }

    /// Evaluates `e` in a context of width `w` and signedness `sgn`,
    /// returning the value masked to `w` bits.
    pub fn eval(&self, e: &Expr, w: u32, sgn: bool) -> EvalResult<u128> {
        if w > MAX_WIDTH {
            return Err(EvalError::TooWide);
        }
        let m = mask(w);
        let v = match e {
            Expr::Const { value, .. } => extend(value.bits(), value.width(), w, sgn),
            Expr::Net(id) => {
                let n = net(self.nets, *id)?;
                extend(self.read(*id)?, n.width(), w, sgn)
            }
            Expr::Index(id, idx) => {
                let n = net(self.nets, *id)?;
                let i = self.index(idx)?;
                if n.array.is_some() {
                    let word = n.array_offset(i).map(|o| self.vals[*id][o]).unwrap_or(0);
                    extend(word, n.width(), w, sgn)
                } else {
                    let v = self.read(*id)?;
                    n.range.offset(i).map(|o| (v >> o) & 1).unwrap_or(0)
                }
            }
            Expr::Part { net: id, msb, lsb } => self.part(*id, *msb, *lsb)? & m,
            Expr::IndexedPart {
                net: id,
                base,
                width,
                ascending,
            } => {
                let n = net(self.nets, *id)?;
                let b = self.index(base)?;
                let (ms, ls) = indexed_bounds(n.range, b, *width, *ascending);
                self.part(*id, ms, ls)? & m
            }
            Expr::Unary(op, a) => match op {
                UnaryOp::Plus => self.eval(a, w, sgn)?,
                UnaryOp::Neg => self.eval(a, w, sgn)?.wrapping_neg() & m,
                UnaryOp::Not => !self.eval(a, w, sgn)? & m,
                UnaryOp::LogicNot => (self.truth(a)? == 0) as u128,
                _ => {
                    let aw = self_width(a, self.nets)?;
                    let v = self.eval(a, aw, is_signed(a, self.nets))?;
                    let am = mask(aw);
                    let r = match op {
                        UnaryOp::RedAnd => v == am,
                        UnaryOp::RedOr => v != 0,
                        UnaryOp::RedXor => v.count_ones() % 2 == 1,
                        UnaryOp::RedNand => v != am,
                        UnaryOp::RedNor => v == 0,
                        UnaryOp::RedXnor => v.count_ones() % 2 == 0,
                        _ => unreachable!(),
                    };
                    r as u128
                }
            },
            Expr::Binary(op, a, b) => self.binary(*op, a, b, w, sgn)?,
            Expr::Ternary(c, t, f) => {
                if self.truth(c)? != 0 {
                    self.eval(t, w, sgn)?
                } else {
                    self.eval(f, w, sgn)?
                }
            }
            Expr::Concat(parts) => self.concat(parts)?,
            Expr::Replicate(n, parts) => {
                let pw: u32 = parts
                    .iter()
                    .map(|p| self_width(p, self.nets))
                    .sum::<EvalResult<u32>>()?;
                if pw.saturating_mul(*n) > MAX_WIDTH {
                    return Err(EvalError::TooWide);
                }
                let unit = self.concat(parts)?;
                let mut out = 0u128;
                for _ in 0..*n {
                    out = if pw >= 128 { unit } else { (out << pw) | unit };
                }
                out
            }
            Expr::Signed(a) => {
                let aw = self_width(a, self.nets)?;
                let v = self.eval(a, aw, is_signed(a, self.nets))?;
                extend(v, aw, w, sgn)
            }
            Expr::Unsigned(a) => {
                let aw = self_width(a, self.nets)?;
                let v = self.eval(a, aw, is_signed(a, self.nets))?;
                extend(v, aw, w, false)
            }
        };
        Ok(v & m)
    }

    /// Self-determined value of `e`, for truth tests.
    fn truth(&self, e: &Expr) -> EvalResult<u128> {
        let w = self_width(e, self.nets)?;
        self.eval(e, w, is_signed(e, self.nets))
    }

    fn concat(&self, parts: &[Expr]) -> EvalResult<u128> {
        let mut out = 0u128;
        let mut total = 0u32;
        for p in parts {
            let pw = self_width(p, self.nets)?;
            total += pw;
            if total > MAX_WIDTH {
                return Err(EvalError::TooWide);
            }
            let v = self.eval(p, pw, false)?;
            out = if pw >= 128 { v } else { (out << pw) | v };
        }
        Ok(out)
    }

    fn binary(&self, op: BinaryOp, a: &Expr, b: &Expr, w: u32, sgn: bool) -> EvalResult<u128> {
        let m = mask(w);
        Ok(match op {
            BinaryOp::Add => self.eval(a, w, sgn)?.wrapping_add(self.eval(b, w, sgn)?) & m,
            BinaryOp::Sub => self.eval(a, w, sgn)?.wrapping_sub(self.eval(b, w, sgn)?) & m,
            BinaryOp::Mul => self.eval(a, w, sgn)?.wrapping_mul(self.eval(b, w, sgn)?) & m,
            BinaryOp::Div | BinaryOp::Mod => {
                let x = self.eval(a, w, sgn)?;
                let y = self.eval(b, w, sgn)?;
                if y == 0 {
                    0
                } else if sgn {
                    let (xi, yi) = (to_i128(x, w), to_i128(y, w));
                    let r = if op == BinaryOp::Div {
                        xi.wrapping_div(yi)
                    } else {
                        xi.wrapping_rem(yi)
                    };
                    r as u128 & m
                } else if op == BinaryOp::Div {
                    x / y
                } else {
                    x % y
                }
            }
            BinaryOp::Pow => {
                let base = self.eval(a, w, sgn)?;
                let bw = self_width(b, self.nets)?;
                let bs = is_signed(b, self.nets);
                let ev = self.eval(b, bw, bs)?;
                if bs && to_i128(ev, bw) < 0 {
                    // Integer power with a negative exponent.
                    let bi = to_i128(base, w);
                    match bi {
                        1 => 1,
                        -1 => {
                            if ev & 1 == 1 {
                                m
                            } else {
                                1
                            }
                        }
                        _ => 0,
                    }
                } else {
                    let mut result: u128 = 1;
                    let mut sq = base;
                    let mut e = ev;
                    while e > 0 {
                        if e & 1 == 1 {
                            result = result.wrapping_mul(sq) & m;
                        }
                        sq = sq.wrapping_mul(sq) & m;
                        e >>= 1;
                    }
                    result & m
                }
            }
            BinaryOp::And => self.eval(a, w, sgn)? & self.eval(b, w, sgn)?,
            BinaryOp::Or => self.eval(a, w, sgn)? | self.eval(b, w, sgn)?,
            BinaryOp::Xor => self.eval(a, w, sgn)? ^ self.eval(b, w, sgn)?,
            BinaryOp::Xnor => !(self.eval(a, w, sgn)? ^ self.eval(b, w, sgn)?) & m,
            BinaryOp::Shl | BinaryOp::AShl | BinaryOp::Shr | BinaryOp::AShr => {
                let x = self.eval(a, w, sgn)?;
                let amt = self.truth(b)?;
                match op {
                    BinaryOp::Shl | BinaryOp::AShl => {
                        if amt >= w as u128 {
                            0
                        } else {
                            (x << amt) & m
                        }
                    }
                    BinaryOp::AShr if sgn => {
                        let s = to_i128(x, w);
                        (s >> amt.min(127)) as u128 & m
                    }
                    _ => {
                        if amt >= w as u128 {
                            0
                        } else {
                            x >> amt
                        }
                    }
                }
            }
            BinaryOp::Lt
            | BinaryOp::Le
            | BinaryOp::Gt
            | BinaryOp::Ge
            | BinaryOp::Eq
            | BinaryOp::Ne
            | BinaryOp::CaseEq
            | BinaryOp::CaseNe => {
                let ow = self_width(a, self.nets)?.max(self_width(b, self.nets)?);
                let s = is_signed(a, self.nets) && is_signed(b, self.nets);
                let x = self.eval(a, ow, s)?;
                let y = self.eval(b, ow, s)?;
                let ord = if s {
                    to_i128(x, ow).cmp(&to_i128(y, ow))
                } else {
                    x.cmp(&y)
                };
                use std::cmp::Ordering::*;
                let r = match op {
                    BinaryOp::Lt => ord == Less,
                    BinaryOp::Le => ord != Greater,
                    BinaryOp::Gt => ord == Greater,
                    BinaryOp::Ge => ord != Less,
                    BinaryOp::Eq | BinaryOp::CaseEq => ord == Equal,
                    _ => ord != Equal,
                };
                r as u128
            }
            BinaryOp::LogicAnd => (self.truth(a)? != 0 && self.truth(b)? != 0) as u128,
            BinaryOp::LogicOr => (self.truth(a)? != 0 || self.truth(b)? != 0) as u128,
        })
    }
}

/// Declared `[msb:lsb]` bounds of an indexed part-select.
fn indexed_bounds(range: Range, base: i64, width: u32, ascending: bool) -> (i64, i64) {
    let w = width as i64;
    let descending_decl = range.msb >= range.lsb;
    match (ascending, descending_decl) {
        (true, true) => (base + w - 1, base),
        (true, false) => (base, base + w - 1),
        (false, true) => (base, base - w + 1),
        (false, false) => (base - w + 1, base),
    }
}

/// A pending write of `width` bits at bit offset `lo` of one net word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Write {
    pub net: NetId,
    pub elem: usize,
    pub lo: u32,
    pub width: u32,
    pub value: u128,
}

pub fn apply(vals: &mut Values, w: &Write) {
    let m = mask(w.width);
    let slot = &mut vals[w.net][w.elem];
    if w.lo >= 128 {
        return;
    }
    let field = m << w.lo;
    *slot = (*slot & !field) | ((w.value & m) << w.lo);
}

pub fn lvalue_width(lv: &LValue, nets: &[NetDecl]) -> EvalResult<u32> {
    let w = match lv {
        LValue::Net(id) => {
            let n = net(nets, *id)?;
            if n.array.is_some() {
                return Err(EvalError::MemoryReference(n.name.clone()));
            }
            n.width()
        }
        LValue::Index(id, _) => {
            let n = net(nets, *id)?;
            if n.array.is_some() {
                n.width()
            } else {
                1
            }
        }
        LValue::Part { msb, lsb, .. } => ((msb - lsb).unsigned_abs() + 1) as u32,
        LValue::IndexedPart { width, .. } => *width,
        LValue::Concat(parts) => {
            let mut sum = 0;
            for p in parts {
                sum += lvalue_width(p, nets)?;
            }
            sum
        }
    };
    if w > MAX_WIDTH {
        return Err(EvalError::TooWide);
    }
    Ok(w)
}

/// Resolves an assignment of `value` (already `lvalue_width` bits) into
/// concrete writes, evaluating any index expressions now.
pub fn resolve_writes(ctx: &Ctx, lv: &LValue, value: u128, out: &mut Vec<Write>) -> EvalResult<()> {
    match lv {
        LValue::Net(id) => {
            let n = net(ctx.nets, *id)?;
            out.push(Write {
                net: *id,
                elem: 0,
                lo: 0,
                width: n.width(),
                value,
            });
        }
        LValue::Index(id, idx) => {
            let n = net(ctx.nets, *id)?;
            let i = ctx.index(idx)?;
            if n.array.is_some() {
                if let Some(elem) = n.array_offset(i) {
                    out.push(Write {
                        net: *id,
                        elem,
                        lo: 0,
                        width: n.width(),
                        value,
                    });
                }
            } else if let Some(o) = n.range.offset(i) {
                out.push(Write {
                    net: *id,
                    elem: 0,
                    lo: o,
                    width: 1,
                    value: value & 1,
                });
            }
        }
        LValue::Part { net: id, msb, lsb } => part_writes(ctx, *id, *msb, *lsb, value, out)?,
        LValue::IndexedPart {
            net: id,
            base,
            width,
            ascending,
        } => {
            let n = net(ctx.nets, *id)?;
            let b = ctx.index(base)?;
            let (ms, ls) = indexed_bounds(n.range, b, *width, *ascending);
            part_writes(ctx, *id, ms, ls, value, out)?;
        }
        LValue::Concat(parts) => {
            let mut rest = value;
            for p in parts.iter().rev() {
                let pw = lvalue_width(p, ctx.nets)?;
                resolve_writes(ctx, p, rest & mask(pw), out)?;
                rest = if pw >= 128 { 0 } else { rest >> pw };
            }
        }
    }
    Ok(())
}

fn part_writes(ctx: &Ctx, id: NetId, m: i64, l: i64, value: u128, out: &mut Vec<Write>) -> EvalResult<()> {
    let n = net(ctx.nets, id)?;
    let width = ((m - l).unsigned_abs() + 1) as u32;
    if let (Some(a), Some(b)) = (n.range.offset(m), n.range.offset(l)) {
        out.push(Write {
            net: id,
            elem: 0,
            lo: a.min(b),
            width,
            value,
        });
        return Ok(());
    }
    for j in 0..width as i64 {
        let idx = if m >= l { l + j } else { l - j };
        if let Some(o) = n.range.offset(idx) {
            out.push(Write {
                net: id,
                elem: 0,
                lo: o,
                width: 1,
                value: (value >> j) & 1,
            });
        }
    }
    Ok(())
}

/// Evaluates `rhs` for assignment to `lv` and returns the resulting writes.
pub fn assignment(ctx: &Ctx, lv: &LValue, rhs: &Expr) -> EvalResult<Vec<Write>> {
    let lw = lvalue_width(lv, ctx.nets)?;
    let rw = self_width(rhs, ctx.nets)?;
    let w = lw.max(rw);
    let v = ctx.eval(rhs, w, is_signed(rhs, ctx.nets))? & mask(lw);
    let mut out = Vec::new();
    resolve_writes(ctx, lv, v, &mut out)?;
    Ok(out)
}

/// Executes a procedural statement. Blocking writes land in `vals`
/// immediately; non-blocking writes are appended to `nba`.
pub fn exec(stmt: &Stmt, nets: &[NetDecl], vals: &mut Values, nba: &mut Vec<Write>) -> EvalResult<()> {
    match stmt {
        Stmt::Block(stmts) => {
            for s in stmts {
                exec(s, nets, vals, nba)?;
            }
        }
        Stmt::Blocking(lv, e) => {
            let writes = assignment(&Ctx { nets, vals }, lv, e)?;
            writes.iter().for_each(|w| apply(vals, w));
        }
        Stmt::NonBlocking(lv, e) => {
            let writes = assignment(&Ctx { nets, vals }, lv, e)?;
            nba.extend(writes);
        }
        Stmt::If(c, t, f) => {
            if (Ctx { nets, vals }).truth(c)? != 0 {
                exec(t, nets, vals, nba)?;
            } else if let Some(f) = f {
                exec(f, nets, vals, nba)?;
            }
        }
        Stmt::Case {
            subject,
            items,
            default,
            ..
        } => {
            let ctx = Ctx { nets, vals };
            let mut w = self_width(subject, nets)?;
            let mut signed = is_signed(subject, nets);
            for item in items {
                for (l, _) in &item.labels {
                    w = w.max(self_width(l, nets)?);
                    signed &= is_signed(l, nets);
                }
            }
            let s = ctx.eval(subject, w, signed)?;
            let mut chosen = None;
            'outer: for item in items {
                for (l, care) in &item.labels {
                    let v = ctx.eval(l, w, signed)?;
                    let care = match care {
                        Some(c) => {
                            let lw = self_width(l, nets)?;
                            (c | !mask(lw)) & mask(w)
                        }
                        None => mask(w),
                    };
                    if (s ^ v) & care == 0 {
                        chosen = Some(&item.body);
                        break 'outer;
                    }
                }
            }
            match (chosen, default) {
                (Some(body), _) => exec(body, nets, vals, nba)?,
                (None, Some(d)) => exec(d, nets, vals, nba)?,
                (None, None) => {}
            }
        }
        Stmt::For { init, cond, step, body } => {
            exec(init, nets, vals, nba)?;
            let mut n = 0usize;
            while (Ctx { nets, vals }).truth(cond)? != 0 {
                n += 1;
                if n > LOOP_LIMIT {
                    return Err(EvalError::LoopBound(LOOP_LIMIT));
                }
                exec(body, nets, vals, nba)?;
                exec(step, nets, vals, nba)?;
            }
        }
        Stmt::SystemTask(_) | Stmt::Null => {}
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(w: u32, v: u128, signed: bool) -> Expr {
        Expr::Const {
            value: BitVector::new(w, v),
            signed,
            sized: true,
        }
    }

    fn bin(op: BinaryOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    #[test]
    fn context_width_keeps_carry() {
        // 4'hF + 4'h1 evaluated in an 8-bit context.
        let e = bin(BinaryOp::Add, c(4, 15, false), c(4, 1, false));
        let ctx = Ctx { nets: &[], vals: &[] };
        assert_eq!(ctx.eval(&e, 8, false).unwrap(), 16);
        assert_eq!(const_eval(&e).unwrap(), BitVector::new(4, 0));
    }

    #[test]
    fn signed_comparison_needs_both_signed() {
        let minus_one = c(4, 0xf, true);
        let one = c(4, 1, true);
        assert_eq!(
            const_eval(&bin(BinaryOp::Lt, minus_one.clone(), one)).unwrap().bits(),
            1
        );
        let uone = c(4, 1, false);
        assert_eq!(const_eval(&bin(BinaryOp::Lt, minus_one, uone)).unwrap().bits(), 0);
    }

    #[test]
    fn arithmetic_shift_right() {
        let e = bin(BinaryOp::AShr, c(8, 0x80, true), c(2, 2, false));
        assert_eq!(const_eval(&e).unwrap().bits(), 0xe0);
        let e = bin(BinaryOp::AShr, c(8, 0x80, false), c(2, 2, false));
        assert_eq!(const_eval(&e).unwrap().bits(), 0x20);
    }

    #[test]
    fn divide_by_zero_is_zero() {
        let e = bin(BinaryOp::Div, c(8, 9, false), c(8, 0, false));
        assert_eq!(const_eval(&e).unwrap().bits(), 0);
        let e = bin(BinaryOp::Mod, c(8, 9, false), c(8, 0, false));
        assert_eq!(const_eval(&e).unwrap().bits(), 0);
    }

    #[test]
    fn concat_and_replicate() {
        let e = Expr::Concat(vec![c(4, 0xa, false), c(4, 0x5, false)]);
        assert_eq!(const_eval(&e).unwrap(), BitVector::new(8, 0xa5));
        let e = Expr::Replicate(3, vec![c(2, 0b10, false)]);
        assert_eq!(const_eval(&e).unwrap(), BitVector::new(6, 0b101010));
    }

    #[test]
    fn power_and_signed_negative_exponent() {
        let e = bin(BinaryOp::Pow, c(32, 3, true), c(32, 4, true));
        assert_eq!(const_eval(&e).unwrap().bits(), 81);
        let e = bin(BinaryOp::Pow, c(32, 2, true), c(32, 0xffff_ffff, true));
        assert_eq!(const_eval(&e).unwrap().bits(), 0);
    }

    #[test]
    fn too_wide_concat_is_rejected() {
        let e = Expr::Concat(vec![c(128, 1, false), c(1, 1, false)]);
        assert_eq!(const_eval(&e), Err(EvalError::TooWide));
    }
}
