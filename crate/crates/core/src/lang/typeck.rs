//! Static checks: name resolution, expression typing, definite return and
//! unreachable-statement rejection.

use std::collections::HashMap;

use super::ast::*;
use super::FrontendError;

struct Sig {
    id: MethodId,
    params: Vec<Type>,
    ret: Option<Type>,
    is_ctor: bool,
}

struct Scope<'a> {
    fields: &'a HashMap<String, (u32, Type)>,
    methods: &'a HashMap<String, Sig>,
    frames: Vec<HashMap<String, (u32, Type)>>,
    next_slot: u32,
    ret: Option<Type>,
}

impl Scope<'_> {
    fn lookup(&self, name: &str) -> Option<(Place, Type)> {
        for frame in self.frames.iter().rev() {
            if let Some(&(slot, ty)) = frame.get(name) {
                return Some((Place::Local(slot), ty));
            }
        }
        self.fields.get(name).map(|&(idx, ty)| (Place::Field(idx), ty))
    }

    fn declare(&mut self, name: &str, ty: Type, pos: Pos) -> Result<u32, FrontendError> {
        if self.frames.iter().any(|f| f.contains_key(name)) {
            return Err(FrontendError::ty(pos, format!("variable `{name}` is already defined")));
        }
        let slot = self.next_slot;
        self.next_slot += 1;
        self.frames.last_mut().expect("scope frame").insert(name.to_string(), (slot, ty));
        Ok(slot)
    }
}

pub fn check_class(class: &mut ClassDecl) -> Result<(), FrontendError> {
    let fields: HashMap<String, (u32, Type)> =
        class.fields.iter().enumerate().map(|(i, f)| (f.name.clone(), (i as u32, f.ty))).collect();
    let methods: HashMap<String, Sig> = class
        .methods
        .iter()
        .enumerate()
        .map(|(i, m)| {
            (
                m.name.clone(),
                Sig { id: i as MethodId, params: m.params.iter().map(|p| p.ty).collect(), ret: m.ret, is_ctor: m.is_ctor },
            )
        })
        .collect();

    for method in &mut class.methods {
        let mut scope = Scope { fields: &fields, methods: &methods, frames: vec![HashMap::new()], next_slot: 0, ret: method.ret };
        for p in &method.params {
            scope.declare(&p.name, p.ty, method.pos)?;
        }
        let returns = check_block(&mut method.body, &mut scope)?;
        if method.ret.is_some() && !returns {
            return Err(FrontendError::ty(method.pos, format!("method `{}` may finish without returning a value", method.name)));
        }
        method.frame_size = scope.next_slot;
    }
    Ok(())
}

/// Returns whether the block always completes abruptly (return or throw).
fn check_block(body: &mut [Stmt], scope: &mut Scope) -> Result<bool, FrontendError> {
    scope.frames.push(HashMap::new());
    let mut terminated = false;
    for stmt in body.iter_mut() {
        if terminated {
            scope.frames.pop();
            return Err(FrontendError::ty(stmt.pos, "unreachable statement"));
        }
        terminated = check_stmt(stmt, scope)?;
    }
    scope.frames.pop();
    Ok(terminated)
}

fn check_stmt(stmt: &mut Stmt, scope: &mut Scope) -> Result<bool, FrontendError> {
    let pos = stmt.pos;
    match &mut stmt.kind {
        StmtKind::Decl { ty, name, slot, init } => {
            let t = check_expr(init, scope)?;
            if t != *ty {
                return Err(FrontendError::ty(pos, format!("cannot initialize `{name}` of type {ty} with {t}")));
            }
            *slot = scope.declare(name, *ty, pos)?;
            Ok(false)
        }
        StmtKind::Assign { name, place, value } => {
            let Some((p, ty)) = scope.lookup(name) else {
                return Err(FrontendError::ty(pos, format!("unknown variable `{name}`")));
            };
            let t = check_expr(value, scope)?;
            if t != ty {
                return Err(FrontendError::ty(pos, format!("cannot assign {t} to `{name}` of type {ty}")));
            }
            *place = p;
            Ok(false)
        }
        StmtKind::If { cond, then_body, else_body, .. } => {
            expect_type(cond, Type::Bool, scope)?;
            let then_ret = check_block(then_body, scope)?;
            let else_ret = match else_body {
                Some(b) => check_block(b, scope)?,
                None => false,
            };
            Ok(then_ret && else_ret)
        }
        StmtKind::While { cond, body, .. } => {
            expect_type(cond, Type::Bool, scope)?;
            check_block(body, scope)?;
            Ok(false)
        }
        StmtKind::Return(value) => {
            match (value, scope.ret) {
                (None, None) => {}
                (Some(e), Some(want)) => {
                    let t = check_expr(e, scope)?;
                    if t != want {
                        return Err(FrontendError::ty(pos, format!("returning {t} from a method declared {want}")));
                    }
                }
                (None, Some(want)) => return Err(FrontendError::ty(pos, format!("missing return value of type {want}"))),
                (Some(_), None) => return Err(FrontendError::ty(pos, "void method cannot return a value")),
            }
            Ok(true)
        }
        StmtKind::Throw(_) => Ok(true),
        StmtKind::Expr(e) => {
            if !matches!(e.kind, ExprKind::Call { .. }) {
                return Err(FrontendError::ty(pos, "expression statement must be a method call"));
            }
            check_call(e, scope, true)?;
            Ok(false)
        }
    }
}

fn expect_type(e: &mut Expr, want: Type, scope: &Scope) -> Result<(), FrontendError> {
    let t = check_expr(e, scope)?;
    if t != want {
        return Err(FrontendError::ty(e.pos, format!("expected {want}, found {t}")));
    }
    Ok(())
}

fn check_call(e: &mut Expr, scope: &Scope, as_stmt: bool) -> Result<Option<Type>, FrontendError> {
    let pos = e.pos;
    let ExprKind::Call { name, method, args } = &mut e.kind else { unreachable!("not a call") };
    let Some(sig) = scope.methods.get(name.as_str()) else {
        return Err(FrontendError::ty(pos, format!("unknown method `{name}`")));
    };
    if sig.is_ctor {
        return Err(FrontendError::ty(pos, "constructors cannot be called from code"));
    }
    if sig.params.len() != args.len() {
        return Err(FrontendError::ty(
            pos,
            format!("`{name}` expects {} arguments, found {}", sig.params.len(), args.len()),
        ));
    }
    for (arg, &want) in args.iter_mut().zip(&sig.params) {
        expect_type(arg, want, scope)?;
    }
    if sig.ret.is_none() && !as_stmt {
        return Err(FrontendError::ty(pos, format!("void method `{name}` used as a value")));
    }
    *method = Some(sig.id);
    if let Some(t) = sig.ret {
        e.ty = t;
    }
    Ok(sig.ret)
}

fn check_expr(e: &mut Expr, scope: &Scope) -> Result<Type, FrontendError> {
    let pos = e.pos;
    let ty = match &mut e.kind {
        ExprKind::Lit(lit) => lit.ty(),
        ExprKind::Var { name, place } => {
            let Some((p, ty)) = scope.lookup(name) else {
                return Err(FrontendError::ty(pos, format!("unknown variable `{name}`")));
            };
            *place = p;
            ty
        }
        ExprKind::Unary(op, inner) => {
            let t = check_expr(inner, scope)?;
            match op {
                UnaryOp::Neg if t.is_numeric() => t,
                UnaryOp::Not if t == Type::Bool => t,
                UnaryOp::Neg => return Err(FrontendError::ty(pos, format!("cannot negate {t}"))),
                UnaryOp::Not => return Err(FrontendError::ty(pos, format!("`!` needs bool, found {t}"))),
            }
        }
        ExprKind::Binary(op, l, r) => {
            let lt = check_expr(l, scope)?;
            let rt = check_expr(r, scope)?;
            let op = *op;
            match op {
                BinOp::Arith(_) if lt == rt && lt.is_numeric() => lt,
                BinOp::Rel(rel) if lt == rt && (lt.is_numeric() || rel.is_equality()) => Type::Bool,
                BinOp::And | BinOp::Or if lt == Type::Bool && rt == Type::Bool => Type::Bool,
                _ => {
                    return Err(FrontendError::ty(pos, format!("operator `{}` cannot combine {lt} and {rt}", op.token())))
                }
            }
        }
        ExprKind::Call { .. } => return check_call(e, scope, false).map(|t| t.expect("non-void call")),
    };
    e.ty = ty;
    Ok(ty)
}
