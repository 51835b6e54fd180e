use std::fmt;

use thiserror::Error;

/// Free variable of a flux expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    U,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::U => "u",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tanh,
    Exp,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tanh => "tanh",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tanh" => Func::Tanh,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Tanh => v.tanh(),
            Func::Exp => v.exp(),
            Func::Sqrt => v.sqrt(),
        }
    }
}

/// Expression node. Every variant carries exactly the children its arity
/// requires, so a constructed tree is always well-formed.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(Var),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
    Call(Func, Box<Node>),
}

/// Evaluation produced a NaN from finite inputs.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("domain error at node {node} ({op}) for x = {x}, u = {u}")]
pub struct DomainError {
    /// Pre-order index of the offending node.
    pub node: usize,
    pub op: &'static str,
    pub x: f64,
    pub u: f64,
}

/// A parsed flux expression in the variables `x` and `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxExpr {
    root: Node,
}

impl FluxExpr {
    pub fn new(root: Node) -> Self {
        FluxExpr { root }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn uses(&self, var: Var) -> bool {
        fn walk(n: &Node, var: Var) -> bool {
            match n {
                Node::Const(_) => false,
                Node::Var(v) => *v == var,
                Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => walk(a, var),
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                    walk(a, var) || walk(b, var)
                }
            }
        }
        walk(&self.root, var)
    }

    pub fn node_count(&self) -> usize {
        fn count(n: &Node) -> usize {
            match n {
                Node::Const(_) | Node::Var(_) => 1,
                Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => 1 + count(a),
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                    1 + count(a) + count(b)
                }
            }
        }
        count(&self.root)
    }

    /// Plain IEEE evaluation; NaN propagates silently.
    pub fn eval(&self, x: f64, u: f64) -> f64 {
        eval_node(&self.root, x, u)
    }

    /// Evaluation that reports the first node producing a NaN from non-NaN
    /// operands.
    pub fn evaluate(&self, x: f64, u: f64) -> Result<f64, DomainError> {
        let mut next_id = 0;
        checked_eval(&self.root, x, u, &mut next_id)
    }

    /// Exact symbolic partial derivative.
    pub fn differentiate(&self, var: Var) -> FluxExpr {
        FluxExpr::new(diff(&self.root, var))
    }
}

fn eval_node(n: &Node, x: f64, u: f64) -> f64 {
    match n {
        Node::Const(c) => *c,
        Node::Var(Var::X) => x,
        Node::Var(Var::U) => u,
        Node::Neg(a) => -eval_node(a, x, u),
        Node::Add(a, b) => eval_node(a, x, u) + eval_node(b, x, u),
        Node::Sub(a, b) => eval_node(a, x, u) - eval_node(b, x, u),
        Node::Mul(a, b) => eval_node(a, x, u) * eval_node(b, x, u),
        Node::Div(a, b) => eval_node(a, x, u) / eval_node(b, x, u),
        Node::Pow(a, k) => eval_node(a, x, u).powi(*k),
        Node::Call(f, a) => f.apply(eval_node(a, x, u)),
    }
}

fn checked_eval(n: &Node, x: f64, u: f64, next_id: &mut usize) -> Result<f64, DomainError> {
    let id = *next_id;
    *next_id += 1;
    let fail = |op: &'static str| DomainError { node: id, op, x, u };
    let value = match n {
        Node::Const(c) => return Ok(*c),
        Node::Var(Var::X) => return Ok(x),
        Node::Var(Var::U) => return Ok(u),
        Node::Neg(a) => return Ok(-checked_eval(a, x, u, next_id)?),
        Node::Add(a, b) => {
            let (l, r) = (checked_eval(a, x, u, next_id)?, checked_eval(b, x, u, next_id)?);
            (l + r, "+")
        }
        Node::Sub(a, b) => {
            let (l, r) = (checked_eval(a, x, u, next_id)?, checked_eval(b, x, u, next_id)?);
            (l - r, "-")
        }
        Node::Mul(a, b) => {
            let (l, r) = (checked_eval(a, x, u, next_id)?, checked_eval(b, x, u, next_id)?);
            (l * r, "*")
        }
        Node::Div(a, b) => {
            let (l, r) = (checked_eval(a, x, u, next_id)?, checked_eval(b, x, u, next_id)?);
            (l / r, "/")
        }
        Node::Pow(a, k) => (checked_eval(a, x, u, next_id)?.powi(*k), "^"),
        Node::Call(f, a) => (f.apply(checked_eval(a, x, u, next_id)?), f.name()),
    };
    if value.0.is_nan() {
        Err(fail(value.1))
    } else {
        Ok(value.0)
    }
}

// Smart constructors with constant folding. Nothing beyond folding and the
// additive/multiplicative identities is simplified.

fn c(v: f64) -> Node {
    Node::Const(v)
}

fn as_const(n: &Node) -> Option<f64> {
    match n {
        Node::Const(v) => Some(*v),
        _ => None,
    }
}

fn neg(a: Node) -> Node {
    match a {
        Node::Const(v) => c(-v),
        Node::Neg(inner) => *inner,
        other => Node::Neg(Box::new(other)),
    }
}

fn add(a: Node, b: Node) -> Node {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => c(x + y),
        (Some(z), _) if z == 0.0 => b,
        (_, Some(z)) if z == 0.0 => a,
        _ => Node::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Node, b: Node) -> Node {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => c(x - y),
        (Some(z), _) if z == 0.0 => neg(b),
        (_, Some(z)) if z == 0.0 => a,
        _ => Node::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Node, b: Node) -> Node {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => c(x * y),
        (Some(z), _) | (_, Some(z)) if z == 0.0 => c(0.0),
        (Some(o), _) if o == 1.0 => b,
        (_, Some(o)) if o == 1.0 => a,
        _ => Node::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Node, b: Node) -> Node {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => c(x / y),
        (Some(z), _) if z == 0.0 => c(0.0),
        (_, Some(o)) if o == 1.0 => a,
        _ => Node::Div(Box::new(a), Box::new(b)),
    }
}

fn pow(a: Node, k: i32) -> Node {
    match (as_const(&a), k) {
        (Some(v), _) => c(v.powi(k)),
        (_, 0) => c(1.0),
        (_, 1) => a,
        _ => Node::Pow(Box::new(a), k),
    }
}

fn call(f: Func, a: Node) -> Node {
    match as_const(&a) {
        Some(v) => c(f.apply(v)),
        None => Node::Call(f, Box::new(a)),
    }
}

fn diff(n: &Node, var: Var) -> Node {
    match n {
        Node::Const(_) => c(0.0),
        Node::Var(v) => c(if *v == var { 1.0 } else { 0.0 }),
        Node::Neg(a) => neg(diff(a, var)),
        Node::Add(a, b) => add(diff(a, var), diff(b, var)),
        Node::Sub(a, b) => sub(diff(a, var), diff(b, var)),
        Node::Mul(a, b) => add(
            mul(diff(a, var), (**b).clone()),
            mul((**a).clone(), diff(b, var)),
        ),
        Node::Div(a, b) => {
            let num = sub(
                mul(diff(a, var), (**b).clone()),
                mul((**a).clone(), diff(b, var)),
            );
            div(num, pow((**b).clone(), 2))
        }
        Node::Pow(a, k) => mul(
            mul(c(f64::from(*k)), pow((**a).clone(), k - 1)),
            diff(a, var),
        ),
        Node::Call(f, a) => {
            let inner = (**a).clone();
            let outer = match f {
                Func::Sin => call(Func::Cos, inner),
                Func::Cos => neg(call(Func::Sin, inner)),
                Func::Tanh => sub(c(1.0), pow(call(Func::Tanh, inner), 2)),
                Func::Exp => call(Func::Exp, inner),
                Func::Sqrt => div(c(1.0), mul(c(2.0), call(Func::Sqrt, inner))),
            };
            mul(outer, diff(a, var))
        }
    }
}

/// Fully parenthesised rendering; re-parsing it yields a tree with identical
/// evaluation.
impl fmt::Display for FluxExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(&self.root, f)
    }
}

fn write_node(n: &Node, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match n {
        Node::Const(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => {
            write!(f, "(-{})", -v)
        }
        Node::Const(v) => write!(f, "{v}"),
        Node::Var(v) => f.write_str(v.name()),
        Node::Neg(a) => {
            f.write_str("(-")?;
            write_node(a, f)?;
            f.write_str(")")
        }
        Node::Add(a, b) => binary(f, a, "+", b),
        Node::Sub(a, b) => binary(f, a, "-", b),
        Node::Mul(a, b) => binary(f, a, "*", b),
        Node::Div(a, b) => binary(f, a, "/", b),
        Node::Pow(a, k) => {
            f.write_str("(")?;
            write_node(a, f)?;
            write!(f, "^{k})")
        }
        Node::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_node(a, f)?;
            f.write_str(")")
        }
    }
}

fn binary(f: &mut fmt::Formatter<'_>, a: &Node, op: &str, b: &Node) -> fmt::Result {
    f.write_str("(")?;
    write_node(a, f)?;
    write!(f, "{op}")?;
    write_node(b, f)?;
    f.write_str(")")
}
