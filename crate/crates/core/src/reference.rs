//! Reference models: output expressions over declared inputs, evaluated with
//! unbounded integer arithmetic and truncated to each output's width.
//!
//! Expression syntax is C-like: `?:`, `|| &&`, `| ^ &`, `== !=`,
//! `< <= > >=`, `<< >>`, `+ -`, `* / %`, `**`, unary `- ~ !`, bit select
//! `x[i]`, constant slices `x[h:l]`, concatenation `{a, b}`, replication
//! `{n{a}}`, and the functions `min`, `max`, `abs`, `popcount`, `signed(x, w)`,
//! `reduce_and`, `reduce_or`, `reduce_xor`. `and`, `or` and `not` are aliases.
//! Literals are decimal, `0x`/`0b`/`0o` prefixed, or sized (`8'hff`).
//! Division and modulo floor toward negative infinity; a zero divisor
//! yields 0.

use std::collections::{BTreeMap, HashSet};

use num::bigint::{BigInt, Sign};
use num::{Integer, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::verilog::BitVector;

const MAX_SHIFT: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefPort {
    pub name: String,
    pub width: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefOutput {
    pub name: String,
    pub width: u32,
    pub expr: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceModel {
    pub inputs: Vec<RefPort>,
    pub outputs: Vec<RefOutput>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RefError {
    #[error("output `{output}`, column {pos}: {message}")]
    Parse {
        output: String,
        pos: usize,
        message: String,
    },
    #[error("output `{output}` references undeclared input `{name}`")]
    Undeclared { output: String, name: String },
    #[error("port `{0}` must have width 1..=128")]
    BadWidth(String),
    #[error("duplicate port name `{0}`")]
    Duplicate(String),
    #[error("reference has no outputs")]
    NoOutputs,
    #[error("missing value for input `{0}`")]
    MissingInput(String),
    #[error("evaluation error in `{output}`: {message}")]
    Eval { output: String, message: String },
}

impl ReferenceModel {
    pub fn compile(&self) -> Result<CompiledReference, RefError> {
        let mut seen = HashSet::new();
        for (name, width) in self
            .inputs
            .iter()
            .map(|p| (&p.name, p.width))
            .chain(self.outputs.iter().map(|o| (&o.name, o.width)))
        {
            if !(1..=128).contains(&width) {
                return Err(RefError::BadWidth(name.clone()));
            }
            if !seen.insert(name.clone()) {
                return Err(RefError::Duplicate(name.clone()));
            }
        }
        if self.outputs.is_empty() {
            return Err(RefError::NoOutputs);
        }
        let exprs = self
            .outputs
            .iter()
            .map(|o| {
                let toks = tokenize(&o.expr).map_err(|(pos, message)| RefError::Parse {
                    output: o.name.clone(),
                    pos,
                    message,
                })?;
                let mut p = Parser {
                    toks,
                    pos: 0,
                    inputs: &self.inputs,
                    output: &o.name,
                };
                let e = p.expr()?;
                if p.pos < p.toks.len() {
                    return Err(p.err("unexpected trailing input"));
                }
                Ok(e)
            })
            .collect::<Result<_, RefError>>()?;
        Ok(CompiledReference {
            model: self.clone(),
            exprs,
        })
    }

    pub fn total_input_bits(&self) -> u32 {
        self.inputs.iter().map(|p| p.width).sum()
    }
}

#[derive(Debug, Clone)]
pub struct CompiledReference {
    model: ReferenceModel,
    exprs: Vec<RExpr>,
}

impl CompiledReference {
    pub fn model(&self) -> &ReferenceModel {
        &self.model
    }

    /// Golden outputs for one input assignment. Unknown input bits read as 0.
    pub fn eval(&self, inputs: &BTreeMap<String, BitVector>) -> Result<BTreeMap<String, BitVector>, RefError> {
        let vals: Vec<BigInt> = self
            .model
            .inputs
            .iter()
            .map(|p| {
                inputs
                    .get(&p.name)
                    .map(|v| BigInt::from(v.bits() & v.known_mask() & crate::verilog::value::mask(p.width)))
                    .ok_or_else(|| RefError::MissingInput(p.name.clone()))
            })
            .collect::<Result<_, _>>()?;
        self.model
            .outputs
            .iter()
            .zip(&self.exprs)
            .map(|(o, e)| {
                let v = e.eval(&vals).map_err(|message| RefError::Eval {
                    output: o.name.clone(),
                    message,
                })?;
                Ok((o.name.clone(), BitVector::new(o.width, truncate(&v, o.width))))
            })
            .collect()
    }
}

fn mask_big(w: u32) -> BigInt {
    (BigInt::one() << w as usize) - 1
}

fn truncate(v: &BigInt, w: u32) -> u128 {
    (v & mask_big(w)).to_u128().expect("masked to <= 128 bits")
}

fn bool_big(b: bool) -> BigInt {
    if b {
        BigInt::one()
    } else {
        BigInt::zero()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigInt, Option<u32>),
    Ident(String),
    Op(&'static str),
}

const OPS: &[&str] = &[
    "**", "||", "&&", "==", "!=", "<=", ">=", "<<", ">>", "?", ":", "(", ")", "[", "]", "{", "}", ",", "+", "-", "*",
    "/", "%", "&", "|", "^", "~", "!", "<", ">",
];

fn tokenize(s: &str) -> Result<Vec<(Tok, usize)>, (usize, String)> {
    let b = s.as_bytes();
    let mut i = 0;
    let mut out = Vec::new();
    while i < b.len() {
        let c = b[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == b'\'' {
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_' || b[i] == b'\'') {
                i += 1;
            }
            let text: String = s[start..i].chars().filter(|&c| c != '_').collect();
            let (v, w) = parse_number(&text).ok_or((start, format!("bad number `{text}`")))?;
            out.push((Tok::Num(v, w), start));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            let word = &s[start..i];
            out.push((
                match word {
                    "and" => Tok::Op("&&"),
                    "or" => Tok::Op("||"),
                    "not" => Tok::Op("!"),
                    _ => Tok::Ident(word.to_string()),
                },
                start,
            ));
        } else if let Some(op) = OPS.iter().find(|op| s[i..].starts_with(**op)) {
            i += op.len();
            out.push((Tok::Op(op), start));
        } else {
            return Err((
                start,
                format!("unexpected character `{}`", s[start..].chars().next().unwrap()),
            ));
        }
    }
    Ok(out)
}

fn parse_number(t: &str) -> Option<(BigInt, Option<u32>)> {
    if let Some(q) = t.find('\'') {
        let width: Option<u32> = if q == 0 { None } else { Some(t[..q].parse().ok()?) };
        let rest = t[q + 1..].trim_start_matches(['s', 'S']);
        let mut chars = rest.chars();
        let radix = match chars.next()?.to_ascii_lowercase() {
            'b' => 2,
            'o' => 8,
            'd' => 10,
            'h' => 16,
            _ => return None,
        };
        let v = BigInt::parse_bytes(chars.as_str().as_bytes(), radix)?;
        if let Some(w) = width {
            if w == 0 || w > 128 {
                return None;
            }
            return Some((v & mask_big(w), Some(w)));
        }
        return Some((v, None));
    }
    let lower = t.to_ascii_lowercase();
    let (digits, radix) = if let Some(r) = lower.strip_prefix("0x") {
        (r, 16)
    } else if let Some(r) = lower.strip_prefix("0b") {
        (r, 2)
    } else if let Some(r) = lower.strip_prefix("0o") {
        (r, 8)
    } else {
        (lower.as_str(), 10)
    };
    Some((BigInt::parse_bytes(digits.as_bytes(), radix)?, None))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Min,
    Max,
    Abs,
    Popcount,
    Signed,
    ReduceAnd,
    ReduceOr,
    ReduceXor,
}

#[derive(Debug, Clone)]
enum RExpr {
    Lit(BigInt, Option<u32>),
    Var(usize, u32),
    Unary(&'static str, Box<RExpr>),
    Binary(&'static str, Box<RExpr>, Box<RExpr>),
    Ternary(Box<RExpr>, Box<RExpr>, Box<RExpr>),
    Bit(Box<RExpr>, Box<RExpr>),
    Slice(Box<RExpr>, u32, u32),
    Concat(Vec<(RExpr, u32)>),
    Repl(u32, Box<RExpr>, u32),
    Call(Func, Vec<RExpr>, Option<u32>),
}

impl RExpr {
    /// Bit width when statically known.
    fn width(&self) -> Option<u32> {
        match self {
            RExpr::Lit(_, w) => *w,
            RExpr::Var(_, w) => Some(*w),
            RExpr::Bit(..) => Some(1),
            RExpr::Slice(_, h, l) => Some(h - l + 1),
            RExpr::Concat(parts) => Some(parts.iter().map(|(_, w)| w).sum()),
            RExpr::Repl(n, _, w) => Some(n * w),
            RExpr::Binary(op, ..) if matches!(*op, "==" | "!=" | "<" | "<=" | ">" | ">=" | "&&" | "||") => Some(1),
            RExpr::Unary("!", _) => Some(1),
            RExpr::Call(Func::ReduceAnd | Func::ReduceOr | Func::ReduceXor, ..) => Some(1),
            _ => None,
        }
    }

    fn eval(&self, vars: &[BigInt]) -> Result<BigInt, String> {
        Ok(match self {
            RExpr::Lit(v, _) => v.clone(),
            RExpr::Var(i, _) => vars[*i].clone(),
            RExpr::Unary(op, a) => {
                let a = a.eval(vars)?;
                match *op {
                    "-" => -a,
                    "~" => !a,
                    "!" => bool_big(a.is_zero()),
                    "+" => a,
                    _ => unreachable!("unary {op}"),
                }
            }
            RExpr::Binary(op, a, b) => {
                let (a, b) = (a.eval(vars)?, b.eval(vars)?);
                match *op {
                    "+" => a + b,
                    "-" => a - b,
                    "*" => a * b,
                    "/" => {
                        if b.is_zero() {
                            BigInt::zero()
                        } else {
                            a.div_floor(&b)
                        }
                    }
                    "%" => {
                        if b.is_zero() {
                            BigInt::zero()
                        } else {
                            a.mod_floor(&b)
                        }
                    }
                    "**" => {
                        let e = b
                            .to_u32()
                            .filter(|&e| e <= 1024)
                            .ok_or("exponent must be in 0..=1024")?;
                        num::pow(a, e as usize)
                    }
                    "&" => a & b,
                    "|" => a | b,
                    "^" => a ^ b,
                    "<<" => a << shift_amount(&b)?,
                    ">>" => a >> shift_amount(&b)?,
                    "==" => bool_big(a == b),
                    "!=" => bool_big(a != b),
                    "<" => bool_big(a < b),
                    "<=" => bool_big(a <= b),
                    ">" => bool_big(a > b),
                    ">=" => bool_big(a >= b),
                    "&&" => bool_big(!a.is_zero() && !b.is_zero()),
                    "||" => bool_big(!a.is_zero() || !b.is_zero()),
                    _ => unreachable!("binary {op}"),
                }
            }
            RExpr::Ternary(c, t, f) => {
                if c.eval(vars)?.is_zero() {
                    f.eval(vars)?
                } else {
                    t.eval(vars)?
                }
            }
            RExpr::Bit(a, i) => {
                let i = shift_amount(&i.eval(vars)?)?;
                (a.eval(vars)? >> i) & BigInt::one()
            }
            RExpr::Slice(a, h, l) => (a.eval(vars)? >> *l as usize) & mask_big(h - l + 1),
            RExpr::Concat(parts) => {
                let mut acc = BigInt::zero();
                for (p, w) in parts {
                    acc = (acc << *w as usize) | (p.eval(vars)? & mask_big(*w));
                }
                acc
            }
            RExpr::Repl(n, a, w) => {
                let v = a.eval(vars)? & mask_big(*w);
                let mut acc = BigInt::zero();
                for _ in 0..*n {
                    acc = (acc << *w as usize) | &v;
                }
                acc
            }
            RExpr::Call(f, args, w) => {
                let vs: Vec<BigInt> = args.iter().map(|a| a.eval(vars)).collect::<Result<_, _>>()?;
                match f {
                    Func::Min => vs.into_iter().min().unwrap(),
                    Func::Max => vs.into_iter().max().unwrap(),
                    Func::Abs => vs[0].abs(),
                    Func::Popcount => {
                        if vs[0].sign() == Sign::Minus {
                            return Err("popcount of a negative value".into());
                        }
                        BigInt::from(vs[0].to_biguint().unwrap().count_ones())
                    }
                    Func::Signed => {
                        let w = vs[1]
                            .to_u32()
                            .filter(|w| (1..=128).contains(w))
                            .ok_or("signed width must be 1..=128")?;
                        let m = &vs[0] & mask_big(w);
                        if m.bit(w as u64 - 1) {
                            m - (BigInt::one() << w as usize)
                        } else {
                            m
                        }
                    }
                    Func::ReduceAnd => bool_big((&vs[0] & mask_big(w.unwrap())) == mask_big(w.unwrap())),
                    Func::ReduceOr => bool_big(!(&vs[0] & mask_big(w.unwrap())).is_zero()),
                    Func::ReduceXor => {
                        let m = (&vs[0] & mask_big(w.unwrap())).to_biguint().unwrap();
                        bool_big(m.count_ones() % 2 == 1)
                    }
                }
            }
        })
    }
}

fn shift_amount(b: &BigInt) -> Result<usize, String> {
    b.to_usize()
        .filter(|&s| s <= MAX_SHIFT)
        .ok_or_else(|| format!("shift/index amount must be in 0..={MAX_SHIFT}"))
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    inputs: &'a [RefPort],
    output: &'a str,
}

fn binary_prec(op: &str) -> Option<u8> {
    Some(match op {
        "||" => 1,
        "&&" => 2,
        "|" => 3,
        "^" => 4,
        "&" => 5,
        "==" | "!=" => 6,
        "<" | "<=" | ">" | ">=" => 7,
        "<<" | ">>" => 8,
        "+" | "-" => 9,
        "*" | "/" | "%" => 10,
        "**" => 11,
        _ => return None,
    })
}

impl Parser<'_> {
    fn err(&self, message: &str) -> RefError {
        RefError::Parse {
            output: self.output.to_string(),
            pos: self.toks.get(self.pos).map_or(usize::MAX, |t| t.1),
            message: message.to_string(),
        }
    }

    fn peek_op(&self) -> Option<&'static str> {
        match self.toks.get(self.pos) {
            Some((Tok::Op(o), _)) => Some(o),
            _ => None,
        }
    }

    fn eat(&mut self, op: &str) -> bool {
        if self.peek_op() == Some(op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, op: &str) -> Result<(), RefError> {
        if self.eat(op) {
            Ok(())
        } else {
            Err(self.err(&format!("expected `{op}`")))
        }
    }

    fn expr(&mut self) -> Result<RExpr, RefError> {
        let c = self.binary(1)?;
        if self.eat("?") {
            let t = self.expr()?;
            self.expect(":")?;
            let f = self.expr()?;
            return Ok(RExpr::Ternary(Box::new(c), Box::new(t), Box::new(f)));
        }
        Ok(c)
    }

    fn binary(&mut self, min: u8) -> Result<RExpr, RefError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.peek_op() {
            let Some(p) = binary_prec(op) else { break };
            if p < min {
                break;
            }
            self.pos += 1;
            // `**` is right-associative.
            let next = if op == "**" { p } else { p + 1 };
            let rhs = self.binary(next)?;
            lhs = RExpr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<RExpr, RefError> {
        for op in ["-", "~", "!", "+"] {
            if self.eat(op) {
                let a = self.unary()?;
                return Ok(RExpr::Unary(op, Box::new(a)));
            }
        }
        self.postfix()
    }

    fn const_u32(&self, e: &RExpr) -> Result<u32, RefError> {
        match e {
            RExpr::Lit(v, _) => v.to_u32().ok_or_else(|| self.err("constant out of range")),
            _ => Err(self.err("expected an integer constant")),
        }
    }

    fn postfix(&mut self) -> Result<RExpr, RefError> {
        let mut e = self.primary()?;
        while self.eat("[") {
            let i = self.expr()?;
            if self.eat(":") {
                let l = self.expr()?;
                self.expect("]")?;
                let (h, l) = (self.const_u32(&i)?, self.const_u32(&l)?);
                if h < l || h >= 1024 {
                    return Err(self.err("slice bounds must satisfy high >= low"));
                }
                e = RExpr::Slice(Box::new(e), h, l);
            } else {
                self.expect("]")?;
                e = RExpr::Bit(Box::new(e), Box::new(i));
            }
        }
        Ok(e)
    }

    fn sized(&self, e: RExpr) -> Result<(RExpr, u32), RefError> {
        let w = e
            .width()
            .ok_or_else(|| self.err("concatenation operands need a known width (use a sized literal or a slice)"))?;
        Ok((e, w))
    }

    fn primary(&mut self) -> Result<RExpr, RefError> {
        let Some((tok, _)) = self.toks.get(self.pos).cloned() else {
            return Err(self.err("unexpected end of expression"));
        };
        self.pos += 1;
        match tok {
            Tok::Num(v, w) => Ok(RExpr::Lit(v, w)),
            Tok::Ident(name) => {
                if self.peek_op() == Some("(") {
                    return self.call(&name);
                }
                let idx = self
                    .inputs
                    .iter()
                    .position(|p| p.name == name)
                    .ok_or_else(|| RefError::Undeclared {
                        output: self.output.to_string(),
                        name: name.clone(),
                    })?;
                Ok(RExpr::Var(idx, self.inputs[idx].width))
            }
            Tok::Op("(") => {
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            Tok::Op("{") => {
                let first = self.expr()?;
                if self.eat("{") {
                    let n = self.const_u32(&first)?;
                    let mut parts = Vec::new();
                    loop {
                        let e = self.expr()?;
                        parts.push(self.sized(e)?);
                        if !self.eat(",") {
                            break;
                        }
                    }
                    self.expect("}")?;
                    let (inner, w) = if parts.len() == 1 {
                        parts.pop().unwrap()
                    } else {
                        let w = parts.iter().map(|(_, w)| w).sum();
                        (RExpr::Concat(parts), w)
                    };
                    self.expect("}")?;
                    return Ok(RExpr::Repl(n, Box::new(inner), w));
                }
                let mut parts = vec![self.sized(first)?];
                while self.eat(",") {
                    let e = self.expr()?;
                    parts.push(self.sized(e)?);
                }
                self.expect("}")?;
                Ok(RExpr::Concat(parts))
            }
            _ => {
                self.pos -= 1;
                Err(self.err("expected an operand"))
            }
        }
    }

    fn call(&mut self, name: &str) -> Result<RExpr, RefError> {
        let (f, arity) = match name {
            "min" => (Func::Min, None),
            "max" => (Func::Max, None),
            "abs" => (Func::Abs, Some(1)),
            "popcount" => (Func::Popcount, Some(1)),
            "signed" => (Func::Signed, Some(2)),
            "reduce_and" => (Func::ReduceAnd, Some(1)),
            "reduce_or" => (Func::ReduceOr, Some(1)),
            "reduce_xor" => (Func::ReduceXor, Some(1)),
            _ => return Err(self.err(&format!("unknown function `{name}`"))),
        };
        self.expect("(")?;
        let mut args = Vec::new();
        if !self.eat(")") {
            loop {
                args.push(self.expr()?);
                if self.eat(")") {
                    break;
                }
                self.expect(",")?;
            }
        }
        let ok = match arity {
            Some(n) => args.len() == n,
            None => !args.is_empty(),
        };
        if !ok {
            return Err(self.err(&format!("wrong number of arguments to `{name}`")));
        }
        let w = match f {
            Func::ReduceAnd | Func::ReduceOr | Func::ReduceXor => Some(
                args[0]
                    .width()
                    .ok_or_else(|| self.err("reduction operand needs a known width"))?,
            ),
            _ => None,
        };
        Ok(RExpr::Call(f, args, w))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(inputs: &[(&str, u32)], outputs: &[(&str, u32, &str)]) -> ReferenceModel {
        ReferenceModel {
            inputs: inputs
                .iter()
                .map(|(n, w)| RefPort {
                    name: n.to_string(),
                    width: *w,
                })
                .collect(),
            outputs: outputs
                .iter()
                .map(|(n, w, e)| RefOutput {
                    name: n.to_string(),
                    width: *w,
                    expr: e.to_string(),
                })
                .collect(),
        }
    }

    fn run(m: &ReferenceModel, ins: &[(&str, u32, u128)]) -> BTreeMap<String, u128> {
        let c = m.compile().unwrap();
        let map = ins
            .iter()
            .map(|(n, w, v)| (n.to_string(), BitVector::new(*w, *v)))
            .collect();
        c.eval(&map).unwrap().into_iter().map(|(k, v)| (k, v.bits())).collect()
    }

    fn one(expr: &str, w: u32, ins: &[(&str, u32, u128)]) -> u128 {
        let inputs: Vec<(&str, u32)> = ins.iter().map(|(n, w, _)| (*n, *w)).collect();
        let m = model(&inputs, &[("y", w, expr)]);
        run(&m, ins)["y"]
    }

    #[test]
    fn arithmetic_truncates_at_output() {
        let ab = [("a", 8, 200), ("b", 8, 100)];
        assert_eq!(one("a + b", 9, &ab), 300);
        assert_eq!(one("a + b", 8, &ab), 44);
        assert_eq!(one("b - a", 8, &ab), 156);
        assert_eq!(one("(a + b) >> 1", 8, &ab), 150);
        assert_eq!(one("~a", 8, &ab), 55);
        assert_eq!(one("a * b", 16, &ab), 20000);
        assert_eq!(one("a / 0", 8, &ab), 0);
        assert_eq!(one("a % 7", 8, &ab), 4);
        assert_eq!(one("2 ** 10", 16, &[]), 1024);
        assert_eq!(one("2 ** 3 ** 2", 16, &[]), 512);
    }

    #[test]
    fn bits_and_concat() {
        let a = [("a", 8, 0b1011_0110)];
        assert_eq!(one("a[1]", 1, &a), 1);
        assert_eq!(one("a[7:4]", 4, &a), 0b1011);
        assert_eq!(one("{a[3:0], a[7:4]}", 8, &a), 0b0110_1011);
        assert_eq!(one("{4'b1001, 2'd1}", 6, &[]), 0b100101);
        assert_eq!(one("{3{a[0], 1'b1}}", 6, &a), 0b010101);
        assert_eq!(one("popcount(a)", 4, &a), 5);
        assert_eq!(one("reduce_xor(a)", 1, &a), 1);
        assert_eq!(one("reduce_and(a[2:1])", 1, &a), 1);
        assert_eq!(one("reduce_or(a[0])", 1, &a), 0);
    }

    #[test]
    fn logic_compare_ternary() {
        let s = [("s", 1, 1), ("a", 4, 3), ("b", 4, 9)];
        assert_eq!(one("s ? a : b", 4, &s), 3);
        assert_eq!(one("!s ? a : b", 4, &s), 9);
        assert_eq!(one("a < b && s", 1, &s), 1);
        assert_eq!(one("a >= b or not s", 1, &s), 0);
        assert_eq!(one("max(a, b, 4)", 4, &s), 9);
        assert_eq!(one("signed(b, 4) < 0", 1, &s), 1);
        assert_eq!(one("abs(signed(b, 4))", 4, &s), 7);
        assert_eq!(one("0x10 | 0b1 | 0o2 | 8'h80", 8, &[]), 0x93);
    }

    #[test]
    fn compile_errors() {
        let m = model(&[("a", 4)], &[("y", 4, "a + c")]);
        assert!(matches!(m.compile(), Err(RefError::Undeclared { .. })));
        let m = model(&[("a", 4)], &[("y", 4, "a +")]);
        assert!(matches!(m.compile(), Err(RefError::Parse { .. })));
        let m = model(&[("a", 4)], &[("y", 4, "{a + 1, a}")]);
        assert!(matches!(m.compile(), Err(RefError::Parse { .. })));
        let m = model(&[("a", 0)], &[("y", 4, "a")]);
        assert!(matches!(m.compile(), Err(RefError::BadWidth(_))));
        let m = model(&[("a", 4)], &[("a", 4, "a")]);
        assert!(matches!(m.compile(), Err(RefError::Duplicate(_))));
        let m = model(&[("a", 4)], &[("y", 4, "foo(a)")]);
        assert!(m.compile().is_err());
        let c = model(&[("a", 4)], &[("y", 4, "a")]).compile().unwrap();
        assert!(matches!(c.eval(&BTreeMap::new()), Err(RefError::MissingInput(_))));
    }

    #[test]
    fn json_roundtrip() {
        let m = model(&[("a", 4), ("b", 4)], &[("y", 5, "a + b")]);
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(serde_json::from_str::<ReferenceModel>(&s).unwrap(), m);
    }
}
