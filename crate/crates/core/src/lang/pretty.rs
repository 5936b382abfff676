//! Canonical MiniLang printer: one statement per line, four-space indent,
//! minimal parentheses.

use std::fmt::Write;

use super::ast::*;

pub fn pretty_print(class: &ClassDecl) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "class {} {{", class.name);
    for f in &class.fields {
        let _ = writeln!(out, "    {} {};", f.ty, f.name);
    }
    for m in &class.methods {
        let params: Vec<String> = m.params.iter().map(|p| format!("{} {}", p.ty, p.name)).collect();
        if m.is_ctor {
            let _ = writeln!(out, "    {}({}) {{", m.name, params.join(", "));
        } else {
            let vis = match m.visibility {
                Visibility::Public => "public",
                Visibility::Private => "private",
            };
            let ret = m.ret.map_or("void", Type::keyword);
            let _ = writeln!(out, "    {vis} {ret} {}({}) {{", m.name, params.join(", "));
        }
        print_body(&mut out, &m.body, 2);
        out.push_str("    }\n");
    }
    out.push_str("}\n");
    out
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("    ");
    }
}

fn print_body(out: &mut String, body: &[Stmt], depth: usize) {
    for s in body {
        indent(out, depth);
        print_stmt(out, s, depth);
    }
}

fn print_stmt(out: &mut String, s: &Stmt, depth: usize) {
    match &s.kind {
        StmtKind::Decl { ty, name, init, .. } => {
            let _ = writeln!(out, "{ty} {name} = {};", expr_to_string(init));
        }
        StmtKind::Assign { name, value, .. } => {
            let _ = writeln!(out, "{name} = {};", expr_to_string(value));
        }
        StmtKind::If { cond, then_body, else_body, .. } => {
            let _ = writeln!(out, "if ({}) {{", expr_to_string(cond));
            print_body(out, then_body, depth + 1);
            indent(out, depth);
            match else_body {
                None => out.push_str("}\n"),
                Some(e) if e.len() == 1 && matches!(e[0].kind, StmtKind::If { .. }) => {
                    out.push_str("} else ");
                    print_stmt(out, &e[0], depth);
                }
                Some(e) => {
                    out.push_str("} else {\n");
                    print_body(out, e, depth + 1);
                    indent(out, depth);
                    out.push_str("}\n");
                }
            }
        }
        StmtKind::While { cond, body, .. } => {
            let _ = writeln!(out, "while ({}) {{", expr_to_string(cond));
            print_body(out, body, depth + 1);
            indent(out, depth);
            out.push_str("}\n");
        }
        StmtKind::Return(None) => out.push_str("return;\n"),
        StmtKind::Return(Some(e)) => {
            let _ = writeln!(out, "return {};", expr_to_string(e));
        }
        StmtKind::Throw(k) => {
            let _ = writeln!(out, "throw {k};");
        }
        StmtKind::Expr(e) => {
            let _ = writeln!(out, "{};", expr_to_string(e));
        }
    }
}

pub fn literal_to_string(lit: &Literal) -> String {
    match lit {
        Literal::Int(v) => v.to_string(),
        // Debug keeps a decimal point or exponent so the lexer reads it back as a float.
        Literal::Float(v) => format!("{v:?}"),
        Literal::Bool(b) => b.to_string(),
        Literal::Str(s) => {
            let mut q = String::from("\"");
            for c in s.chars() {
                match c {
                    '"' => q.push_str("\\\""),
                    '\\' => q.push_str("\\\\"),
                    '\n' => q.push_str("\\n"),
                    '\t' => q.push_str("\\t"),
                    c => q.push(c),
                }
            }
            q.push('"');
            q
        }
    }
}

pub fn expr_to_string(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e, 0);
    s
}

/// `min_prec` is the weakest binding the context accepts without parentheses.
fn write_expr(out: &mut String, e: &Expr, min_prec: u8) {
    match &e.kind {
        ExprKind::Lit(lit) => {
            let text = literal_to_string(lit);
            // A negative literal behaves like a unary expression.
            if text.starts_with('-') && min_prec > 7 {
                let _ = write!(out, "({text})");
            } else {
                out.push_str(&text);
            }
        }
        ExprKind::Var { name, .. } => out.push_str(name),
        ExprKind::Unary(op, inner) => {
            out.push(match op {
                UnaryOp::Neg => '-',
                UnaryOp::Not => '!',
            });
            // `- -x` must not lex as a single token pair ambiguity; parenthesize nested unaries.
            let needs = matches!(inner.kind, ExprKind::Unary(..))
                || matches!(&inner.kind, ExprKind::Lit(Literal::Int(v)) if *v < 0)
                || matches!(&inner.kind, ExprKind::Lit(Literal::Float(v)) if v.is_sign_negative())
                || (*op == UnaryOp::Neg && matches!(inner.kind, ExprKind::Lit(Literal::Int(_) | Literal::Float(_))));
            if needs {
                out.push('(');
                write_expr(out, inner, 0);
                out.push(')');
            } else {
                write_expr(out, inner, 8);
            }
        }
        ExprKind::Binary(op, l, r) => {
            let prec = op.precedence();
            let paren = prec < min_prec;
            if paren {
                out.push('(');
            }
            write_expr(out, l, prec);
            let _ = write!(out, " {} ", op.token());
            // Left-associative: the right operand binds strictly tighter.
            write_expr(out, r, prec + 1);
            if paren {
                out.push(')');
            }
        }
        ExprKind::Call { name, args, .. } => {
            out.push_str(name);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, a, 0);
            }
            out.push(')');
        }
    }
}
