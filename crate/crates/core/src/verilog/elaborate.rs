//! Flattens a module hierarchy into one [`ModuleAst`].
//!
//! Each instance's nets are copied into the parent under `inst.name`, its
//! blocks are renumbered, and port connections become continuous assigns.

use super::ast::*;
use super::parser::{self, Overrides};
use super::Diagnostic;

const MAX_DEPTH: usize = 32;

pub(crate) fn flatten(unit: &SourceUnit, top: &str) -> Result<ModuleAst, Diagnostic> {
    let idx = unit
        .modules
        .iter()
        .position(|m| m.name == top)
        .ok_or_else(|| Diagnostic::error(1, "E-UNKMOD", format!("no module named `{top}`")))?;
    flatten_module(unit, unit.modules[idx].clone(), 0)
}

fn flatten_module(unit: &SourceUnit, mut m: ModuleAst, depth: usize) -> Result<ModuleAst, Diagnostic> {
    if m.instances.is_empty() {
        return Ok(m);
    }
    if depth >= MAX_DEPTH {
        return Err(Diagnostic::error(
            m.line,
            "E-RECURSE",
            format!("module hierarchy deeper than {MAX_DEPTH} (recursive instantiation?)"),
        ));
    }
    let instances = std::mem::take(&mut m.instances);
    for inst in instances {
        let sub_idx = unit.modules.iter().position(|s| s.name == inst.module).ok_or_else(|| {
            Diagnostic::error(inst.line, "E-UNKMOD", format!("unknown module type `{}`", inst.module))
        })?;
        let base = &unit.modules[sub_idx];
        let sub = if inst.params.is_empty() {
            base.clone()
        } else {
            let mut overrides = Overrides::new();
            let declared: Vec<&String> = base.params.iter().map(|(n, _)| n).collect();
            for (i, (name, value)) in inst.params.iter().enumerate() {
                let pname = match name {
                    Some(n) => n.clone(),
                    None => declared
                        .get(i)
                        .map(|s| s.to_string())
                        .ok_or_else(|| Diagnostic::error(inst.line, "E-PARAM", "too many parameter overrides"))?,
                };
                if !declared.contains(&&pname) {
                    return Err(Diagnostic::error(
                        inst.line,
                        "E-PARAM",
                        format!("module `{}` has no parameter `{pname}`", base.name),
                    ));
                }
                overrides.insert(pname, *value);
            }
            let tokens = unit
                .module_tokens
                .get(sub_idx)
                .ok_or_else(|| Diagnostic::error(inst.line, "E-PARAM", "parameter overrides need the module source"))?;
            parser::reparse_module(tokens, &overrides)?
        };
        let sub = flatten_module(unit, sub, depth + 1)?;
        merge(&mut m, sub, &inst)?;
    }
    Ok(m)
}

fn merge(parent: &mut ModuleAst, sub: ModuleAst, inst: &Instance) -> Result<(), Diagnostic> {
    let off = parent.nets.len();
    for n in &sub.nets {
        let mut n = n.clone();
        n.name = format!("{}.{}", inst.name, n.name);
        n.dir = None;
        parent.nets.push(n);
    }
    for a in sub.assigns.clone() {
        parent.assigns.push(ContinuousAssign {
            lhs: remap_lv(a.lhs, off),
            expr: remap_expr(a.expr, off),
            line: a.line,
        });
    }
    for b in sub.always_blocks.clone() {
        let trigger = match b.trigger {
            Trigger::Combinational => Trigger::Combinational,
            Trigger::Edges(es) => Trigger::Edges(es.into_iter().map(|(e, n)| (e, n + off)).collect()),
        };
        parent.always_blocks.push(AlwaysBlock {
            trigger,
            body: remap_stmt(b.body, off),
            line: b.line,
        });
    }
    for s in sub.initial_blocks.clone() {
        parent.initial_blocks.push(remap_stmt(s, off));
    }
    parent.unsupported.extend(sub.unsupported.iter().cloned());

    let pairs: Vec<(&PortDecl, Expr)> = match &inst.connections {
        Connections::Named(conns) => conns
            .iter()
            .filter_map(|(name, e)| {
                let e = e.clone()?;
                sub.port(name).map(|p| (p, e))
            })
            .collect(),
        Connections::Positional(conns) => sub
            .ports
            .iter()
            .zip(conns)
            .filter_map(|(p, e)| e.clone().map(|e| (p, e)))
            .collect(),
    };
    for (port, expr) in pairs {
        let inner = port.net + off;
        match port.dir {
            PortDir::Input => parent.assigns.push(ContinuousAssign {
                lhs: LValue::Net(inner),
                expr,
                line: inst.line,
            }),
            PortDir::Output => {
                let lhs = expr_to_lvalue(expr).ok_or_else(|| {
                    Diagnostic::error(
                        inst.line,
                        "E-PORT",
                        format!(
                            "output port `{}` of `{}` connected to a non-assignable expression",
                            port.name, inst.name
                        ),
                    )
                })?;
                parent.assigns.push(ContinuousAssign {
                    lhs,
                    expr: Expr::Net(inner),
                    line: inst.line,
                });
            }
            PortDir::Inout => parent.unsupported.push(Unsupported {
                construct: format!("inout port `{}` on instance `{}`", port.name, inst.name),
                line: inst.line,
            }),
        }
    }
    Ok(())
}

fn expr_to_lvalue(e: Expr) -> Option<LValue> {
    Some(match e {
        Expr::Net(n) => LValue::Net(n),
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
        Expr::Concat(parts) => LValue::Concat(parts.into_iter().map(expr_to_lvalue).collect::<Option<_>>()?),
        _ => return None,
    })
}

fn remap_expr(e: Expr, off: usize) -> Expr {
    let r = |b: Box<Expr>| Box::new(remap_expr(*b, off));
    match e {
        Expr::Const { .. } => e,
        Expr::Net(n) => Expr::Net(n + off),
        Expr::Index(n, i) => Expr::Index(n + off, r(i)),
        Expr::Part { net, msb, lsb } => Expr::Part {
            net: net + off,
            msb,
            lsb,
        },
        Expr::IndexedPart {
            net,
            base,
            width,
            ascending,
        } => Expr::IndexedPart {
            net: net + off,
            base: r(base),
            width,
            ascending,
        },
        Expr::Unary(op, a) => Expr::Unary(op, r(a)),
        Expr::Binary(op, a, b) => Expr::Binary(op, r(a), r(b)),
        Expr::Ternary(c, t, f) => Expr::Ternary(r(c), r(t), r(f)),
        Expr::Concat(ps) => Expr::Concat(ps.into_iter().map(|p| remap_expr(p, off)).collect()),
        Expr::Replicate(n, ps) => Expr::Replicate(n, ps.into_iter().map(|p| remap_expr(p, off)).collect()),
        Expr::Signed(a) => Expr::Signed(r(a)),
        Expr::Unsigned(a) => Expr::Unsigned(r(a)),
    }
}

fn remap_lv(lv: LValue, off: usize) -> LValue {
    match lv {
        LValue::Net(n) => LValue::Net(n + off),
        LValue::Index(n, i) => LValue::Index(n + off, remap_expr(i, off)),
        LValue::Part { net, msb, lsb } => LValue::Part {
            net: net + off,
            msb,
            lsb,
        },
        LValue::IndexedPart {
            net,
            base,
            width,
            ascending,
        } => LValue::IndexedPart {
            net: net + off,
            base: remap_expr(base, off),
            width,
            ascending,
        },
        LValue::Concat(ps) => LValue::Concat(ps.into_iter().map(|p| remap_lv(p, off)).collect()),
    }
}

fn remap_stmt(s: Stmt, off: usize) -> Stmt {
    let rb = |b: Box<Stmt>| Box::new(remap_stmt(*b, off));
    match s {
        Stmt::Block(v) => Stmt::Block(v.into_iter().map(|s| remap_stmt(s, off)).collect()),
        Stmt::Blocking(lv, e) => Stmt::Blocking(remap_lv(lv, off), remap_expr(e, off)),
        Stmt::NonBlocking(lv, e) => Stmt::NonBlocking(remap_lv(lv, off), remap_expr(e, off)),
        Stmt::If(c, t, f) => Stmt::If(remap_expr(c, off), rb(t), f.map(rb)),
        Stmt::Case {
            kind,
            subject,
            items,
            default,
        } => Stmt::Case {
            kind,
            subject: remap_expr(subject, off),
            items: items
                .into_iter()
                .map(|i| CaseItem {
                    labels: i.labels.into_iter().map(|(l, m)| (remap_expr(l, off), m)).collect(),
                    body: remap_stmt(i.body, off),
                })
                .collect(),
            default: default.map(rb),
        },
        Stmt::For { init, cond, step, body } => Stmt::For {
            init: rb(init),
            cond: remap_expr(cond, off),
            step: rb(step),
            body: rb(body),
        },
        Stmt::SystemTask(_) | Stmt::Null => s,
    }
}
