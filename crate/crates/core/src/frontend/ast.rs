use crate::expr::Expr;
use crate::frontend::query::QueryTemplate;
use crate::value::TypeTag;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: TypeTag,
}

impl Param {
    pub fn new(name: impl Into<String>, ty: TypeTag) -> Self {
        Param {
            name: name.into(),
            ty,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decl {
    pub name: String,
    pub ty: TypeTag,
    pub init: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Assign {
        var: String,
        expr: Expr,
    },
    /// `ELSIF` chains nest in `else_branch`.
    If {
        cond: Expr,
        then_branch: Vec<Stmt>,
        else_branch: Vec<Stmt>,
    },
    ForRange {
        label: Option<String>,
        var: String,
        lo: Expr,
        hi: Expr,
        body: Vec<Stmt>,
    },
    While {
        label: Option<String>,
        cond: Expr,
        body: Vec<Stmt>,
    },
    Loop {
        label: Option<String>,
        body: Vec<Stmt>,
    },
    Exit {
        label: Option<String>,
        cond: Option<Expr>,
    },
    Continue {
        label: Option<String>,
        cond: Option<Expr>,
    },
    Return(Expr),
}

impl Stmt {
    pub fn is_loop(&self) -> bool {
        matches!(
            self,
            Stmt::ForRange { .. } | Stmt::While { .. } | Stmt::Loop { .. }
        )
    }

    pub fn label(&self) -> Option<&str> {
        match self {
            Stmt::ForRange { label, .. } | Stmt::While { label, .. } | Stmt::Loop { label, .. } => {
                label.as_deref()
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionAst {
    pub name: String,
    pub params: Vec<Param>,
    pub decls: Vec<Decl>,
    pub body: Vec<Stmt>,
    pub return_type: TypeTag,
    /// Embedded queries in source order; `queries[i].id == QueryId(i + 1)`.
    pub queries: Vec<QueryTemplate>,
}

impl FunctionAst {
    /// Declared type of a parameter, declaration, or loop variable (loop variables are int).
    pub fn var_type(&self, name: &str) -> Option<TypeTag> {
        self.params
            .iter()
            .find(|p| p.name == name)
            .map(|p| p.ty)
            .or_else(|| self.decls.iter().find(|d| d.name == name).map(|d| d.ty))
            .or_else(|| loop_var_declared(&self.body, name).then_some(TypeTag::Int))
    }
}

fn loop_var_declared(stmts: &[Stmt], name: &str) -> bool {
    stmts.iter().any(|s| match s {
        Stmt::ForRange { var, body, .. } => var == name || loop_var_declared(body, name),
        Stmt::While { body, .. } | Stmt::Loop { body, .. } => loop_var_declared(body, name),
        Stmt::If {
            then_branch,
            else_branch,
            ..
        } => loop_var_declared(then_branch, name) || loop_var_declared(else_branch, name),
        _ => false,
    })
}

/// Visits every statement, outer before inner.
pub fn walk_stmts<'a>(stmts: &'a [Stmt], f: &mut impl FnMut(&'a Stmt)) {
    for s in stmts {
        f(s);
        match s {
            Stmt::If {
                then_branch,
                else_branch,
                ..
            } => {
                walk_stmts(then_branch, f);
                walk_stmts(else_branch, f);
            }
            Stmt::ForRange { body, .. } | Stmt::While { body, .. } | Stmt::Loop { body, .. } => {
                walk_stmts(body, f)
            }
            _ => {}
        }
    }
}
