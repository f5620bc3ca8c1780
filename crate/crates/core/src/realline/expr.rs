//! Arithmetic expressions in one variable `x`.
//!
//! Grammar (EBNF):
//!
//! ```text
//! expr   = term { ("+" | "-") term } ;
//! term   = unary { ("*" | "/") unary } ;
//! unary  = ("-" | "+") unary | power ;
//! power  = atom [ "^" unary ] ;              (* right associative *)
//! atom   = number | "x" | const | call | "(" expr ")" ;
//! call   = func "(" expr { "," expr } ")" ;
//! const  = "pi" | "e" ;
//! func   = "sqrt" | "exp" | "log" | "ln" | "sin" | "cos" | "tan" | "abs"
//!        | "pow" | "sign" | "min" | "max" | "tanh" | "sinh" | "cosh" | "atan" ;
//! number = digit { digit } [ "." { digit } ] [ ("e" | "E") [ "+" | "-" ] digit { digit } ] ;
//! ```
//!
//! `-x^2` parses as `-(x^2)`. `log` is the natural logarithm.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Exp,
    Log,
    Sin,
    Cos,
    Tan,
    Abs,
    Pow,
    Sign,
    Min,
    Max,
    Tanh,
    Sinh,
    Cosh,
    Atan,
}

impl Func {
    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "abs" => Func::Abs,
            "pow" => Func::Pow,
            "sign" => Func::Sign,
            "min" => Func::Min,
            "max" => Func::Max,
            "tanh" => Func::Tanh,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "atan" => Func::Atan,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Abs => "abs",
            Func::Pow => "pow",
            Func::Sign => "sign",
            Func::Min => "min",
            Func::Max => "max",
            Func::Tanh => "tanh",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Atan => "atan",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Pow | Func::Min | Func::Max => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var,
    Pi,
    E,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl Expr {
    /// Raw IEEE evaluation; callers check finiteness.
    pub fn eval_raw(&self, x: f64) -> f64 {
        match self {
            Expr::Num(c) => *c,
            Expr::Var => x,
            Expr::Pi => std::f64::consts::PI,
            Expr::E => std::f64::consts::E,
            Expr::Neg(a) => -a.eval_raw(x),
            Expr::Bin(op, a, b) => {
                let a = a.eval_raw(x);
                let b = b.eval_raw(x);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => pow(a, b),
                }
            }
            Expr::Call(f, args) => {
                let a = args[0].eval_raw(x);
                match f {
                    Func::Sqrt => a.sqrt(),
                    Func::Exp => a.exp(),
                    Func::Log => a.ln(),
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Tan => a.tan(),
                    Func::Abs => a.abs(),
                    Func::Sign => {
                        if a > 0.0 {
                            1.0
                        } else if a < 0.0 {
                            -1.0
                        } else {
                            0.0
                        }
                    }
                    Func::Tanh => a.tanh(),
                    Func::Sinh => a.sinh(),
                    Func::Cosh => a.cosh(),
                    Func::Atan => a.atan(),
                    Func::Pow => pow(a, args[1].eval_raw(x)),
                    Func::Min => a.min(args[1].eval_raw(x)),
                    Func::Max => a.max(args[1].eval_raw(x)),
                }
            }
        }
    }

    fn depends_on_x(&self) -> bool {
        match self {
            Expr::Var => true,
            Expr::Num(_) | Expr::Pi | Expr::E => false,
            Expr::Neg(a) => a.depends_on_x(),
            Expr::Bin(_, a, b) => a.depends_on_x() || b.depends_on_x(),
            Expr::Call(_, args) => args.iter().any(Expr::depends_on_x),
        }
    }

    /// Symbolic derivative with respect to `x`, lightly simplified.
    pub fn derivative(&self) -> Expr {
        use Expr::*;
        match self {
            Num(_) | Pi | E => Num(0.0),
            Var => Num(1.0),
            Neg(a) => neg(a.derivative()),
            Bin(op, a, b) => {
                let (da, db) = (a.derivative(), b.derivative());
                let (a, b) = ((**a).clone(), (**b).clone());
                match op {
                    BinOp::Add => add(da, db),
                    BinOp::Sub => sub(da, db),
                    BinOp::Mul => add(mul(da, b.clone()), mul(a, db)),
                    BinOp::Div => div(
                        sub(mul(da, b.clone()), mul(a, db)),
                        powc(b, 2.0),
                    ),
                    BinOp::Pow => pow_derivative(a, b, da, db),
                }
            }
            Call(f, args) => {
                let a = args[0].clone();
                let da = a.derivative();
                match f {
                    Func::Sqrt => div(da, mul(Num(2.0), call1(Func::Sqrt, a))),
                    Func::Exp => mul(call1(Func::Exp, a), da),
                    Func::Log => div(da, a),
                    Func::Sin => mul(call1(Func::Cos, a), da),
                    Func::Cos => neg(mul(call1(Func::Sin, a), da)),
                    Func::Tan => div(da, powc(call1(Func::Cos, a), 2.0)),
                    Func::Abs => mul(call1(Func::Sign, a), da),
                    Func::Sign => Num(0.0),
                    Func::Tanh => mul(sub(Num(1.0), powc(call1(Func::Tanh, a), 2.0)), da),
                    Func::Sinh => mul(call1(Func::Cosh, a), da),
                    Func::Cosh => mul(call1(Func::Sinh, a), da),
                    Func::Atan => div(da, add(Num(1.0), powc(a, 2.0))),
                    Func::Pow => {
                        let b = args[1].clone();
                        let db = b.derivative();
                        pow_derivative(a, b, da, db)
                    }
                    Func::Min | Func::Max => {
                        // max(a,b)' = (a'+b')/2 + sign(a-b)(a'-b')/2, min flips the sign term
                        let b = args[1].clone();
                        let db = b.derivative();
                        let half_sum = mul(Num(0.5), add(da.clone(), db.clone()));
                        let half_diff = mul(
                            mul(Num(0.5), call1(Func::Sign, sub(a, b))),
                            sub(da, db),
                        );
                        if *f == Func::Max {
                            add(half_sum, half_diff)
                        } else {
                            sub(half_sum, half_diff)
                        }
                    }
                }
            }
        }
    }
}

fn pow(a: f64, b: f64) -> f64 {
    if b == 2.0 {
        a * a
    } else {
        a.powf(b)
    }
}

fn pow_derivative(a: Expr, b: Expr, da: Expr, db: Expr) -> Expr {
    if !b.depends_on_x() {
        // n a^(n-1) a'
        let n_minus_1 = sub(b.clone(), Expr::Num(1.0));
        mul(mul(b, Expr::Bin(BinOp::Pow, Box::new(a), Box::new(n_minus_1))), da)
    } else {
        let base = Expr::Bin(BinOp::Pow, Box::new(a.clone()), Box::new(b.clone()));
        let inner = add(mul(db, call1(Func::Log, a.clone())), div(mul(b, da), a));
        mul(base, inner)
    }
}

fn call1(f: Func, a: Expr) -> Expr {
    Expr::Call(f, vec![a])
}

fn is_num(e: &Expr, v: f64) -> bool {
    matches!(e, Expr::Num(c) if *c == v)
}

fn fold(op: BinOp, a: Expr, b: Expr) -> Expr {
    if let (Expr::Num(x), Expr::Num(y)) = (&a, &b) {
        let r = match op {
            BinOp::Add => x + y,
            BinOp::Sub => x - y,
            BinOp::Mul => x * y,
            BinOp::Div => x / y,
            BinOp::Pow => pow(*x, *y),
        };
        if r.is_finite() {
            return Expr::Num(r);
        }
    }
    Expr::Bin(op, Box::new(a), Box::new(b))
}

fn add(a: Expr, b: Expr) -> Expr {
    if is_num(&a, 0.0) {
        b
    } else if is_num(&b, 0.0) {
        a
    } else {
        fold(BinOp::Add, a, b)
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    if is_num(&b, 0.0) {
        a
    } else if is_num(&a, 0.0) {
        neg(b)
    } else {
        fold(BinOp::Sub, a, b)
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    if is_num(&a, 0.0) || is_num(&b, 0.0) {
        Expr::Num(0.0)
    } else if is_num(&a, 1.0) {
        b
    } else if is_num(&b, 1.0) {
        a
    } else {
        fold(BinOp::Mul, a, b)
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    if is_num(&a, 0.0) {
        Expr::Num(0.0)
    } else if is_num(&b, 1.0) {
        a
    } else {
        fold(BinOp::Div, a, b)
    }
}

fn powc(a: Expr, n: f64) -> Expr {
    fold(BinOp::Pow, a, Expr::Num(n))
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(c) => Expr::Num(-c),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

// ---------------------------------------------------------------------------
// Printing

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
        Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
        Expr::Neg(_) => 3,
        Expr::Bin(BinOp::Pow, ..) => 4,
        Expr::Num(c) if *c < 0.0 || c.is_sign_negative() => 3,
        _ => 5,
    }
}

struct Wrapped<'a>(&'a Expr, bool);

impl fmt::Display for Wrapped<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.1 {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // `{:?}` on f64 is the shortest representation that round-trips
            Expr::Num(c) => {
                let s = format!("{c:?}");
                f.write_str(&s)
            }
            Expr::Var => f.write_str("x"),
            Expr::Pi => f.write_str("pi"),
            Expr::E => f.write_str("e"),
            Expr::Neg(a) => write!(f, "-{}", Wrapped(a, prec(a) < 4)),
            Expr::Bin(op, a, b) => {
                let p = prec(self);
                let (sym, wrap_a, wrap_b) = match op {
                    BinOp::Add => ("+", prec(a) < p, prec(b) <= p),
                    BinOp::Sub => ("-", prec(a) < p, prec(b) <= p),
                    BinOp::Mul => ("*", prec(a) < p, prec(b) <= p),
                    BinOp::Div => ("/", prec(a) < p, prec(b) <= p),
                    // right associative; unary minus in the exponent is fine
                    BinOp::Pow => ("^", prec(a) <= p, prec(b) < 3),
                };
                write!(f, "{} {} {}", Wrapped(a, wrap_a), sym, Wrapped(b, wrap_b))
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == '.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let v: f64 = text
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::Syntax {
                    pos: start,
                    msg: format!("malformed number `{text}`"),
                })?;
            out.push((start, Tok::Num(v)));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
            continue;
        }
        let tok = match c {
            '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            _ => {
                return Err(Error::Syntax {
                    pos: start,
                    msg: format!("unexpected character `{c}`"),
                })
            }
        };
        out.push((start, tok));
        i += c.len_utf8();
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        let pos = self.here();
        match self.bump() {
            Some(t) if t == want => Ok(()),
            _ => Err(Error::Syntax { pos, msg: format!("expected {what}") }),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(c @ ('+' | '-'))) = self.peek().cloned() {
            self.bump();
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(c @ ('*' | '/'))) = self.peek().cloned() {
            self.bump();
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(Tok::Op('-')) => {
                self.bump();
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some(Tok::Op('+')) => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.bump();
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let pos = self.here();
        match self.bump() {
            Some(Tok::Num(v)) => Ok(Expr::Num(v)),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                if let Some(Tok::LParen) = self.peek() {
                    let func = Func::lookup(&name)
                        .ok_or(Error::UnknownIdentifier { name: name.clone(), pos })?;
                    self.bump();
                    let mut args = vec![self.expr()?];
                    while let Some(Tok::Comma) = self.peek() {
                        self.bump();
                        args.push(self.expr()?);
                    }
                    self.expect(Tok::RParen, "`)`")?;
                    if args.len() != func.arity() {
                        return Err(Error::Syntax {
                            pos,
                            msg: format!(
                                "`{name}` takes {} argument(s), got {}",
                                func.arity(),
                                args.len()
                            ),
                        });
                    }
                    return Ok(Expr::Call(func, args));
                }
                match name.as_str() {
                    "x" => Ok(Expr::Var),
                    "pi" => Ok(Expr::Pi),
                    "e" => Ok(Expr::E),
                    _ => Err(Error::UnknownIdentifier { name, pos }),
                }
            }
            Some(_) => Err(Error::Syntax { pos, msg: "unexpected token".into() }),
            None => Err(Error::Syntax { pos, msg: "unexpected end of input".into() }),
        }
    }
}

pub fn parse_expr(text: &str) -> Result<Expr> {
    if text.trim().is_empty() {
        return Err(Error::Syntax { pos: 0, msg: "empty expression".into() });
    }
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0, end: text.len() };
    let e = p.expr()?;
    if p.pos < p.toks.len() {
        return Err(Error::Syntax { pos: p.here(), msg: "trailing input".into() });
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str, x: f64) -> f64 {
        parse_expr(s).unwrap().eval_raw(x)
    }

    #[test]
    fn precedence() {
        assert_eq!(ev("-x^2", 3.0), -9.0);
        assert_eq!(ev("2^3^2", 0.0), 512.0);
        assert_eq!(ev("2^-1", 0.0), 0.5);
        assert_eq!(ev("1 - 2 - 3", 0.0), -4.0);
        assert_eq!(ev("8 / 4 / 2", 0.0), 1.0);
        assert_eq!(ev("2e1 + e", 0.0), 20.0 + std::f64::consts::E);
        assert_eq!(ev("1.5E-1", 0.0), 0.15);
    }

    #[test]
    fn errors_carry_position() {
        assert_eq!(
            parse_expr("1 + foo"),
            Err(Error::UnknownIdentifier { name: "foo".into(), pos: 4 })
        );
        assert!(matches!(parse_expr("1 + "), Err(Error::Syntax { pos: 4, .. })));
        assert!(matches!(parse_expr("(1 + x"), Err(Error::Syntax { pos: 6, .. })));
        assert!(matches!(parse_expr("sin(1, 2)"), Err(Error::Syntax { pos: 0, .. })));
        assert!(matches!(parse_expr("x $ 1"), Err(Error::Syntax { pos: 2, .. })));
        assert!(matches!(parse_expr("   "), Err(Error::Syntax { .. })));
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let cases = [
            "1/sqrt(1+x^2)",
            "x^3 - 2*x",
            "exp(-x^2)*cos(3*x)",
            "log(2+x^2)",
            "pow(1+x^2, 0.25)",
            "x^x",
            "atan(x)/(1+tanh(x))",
            "max(x, 1-x) + min(x^2, 2)",
            "sinh(x)*cosh(x) + tan(x/3)",
        ];
        for s in cases {
            let e = parse_expr(s).unwrap();
            let de = e.derivative();
            for &x in &[0.3, 0.7, 1.3, 2.1] {
                let h = 1e-6;
                let fd = (e.eval_raw(x + h) - e.eval_raw(x - h)) / (2.0 * h);
                let an = de.eval_raw(x);
                assert!((fd - an).abs() <= 1e-6 * (1.0 + an.abs()), "{s} at {x}: {fd} vs {an}");
            }
        }
    }

    #[test]
    fn second_derivative_of_inverse_sqrt() {
        let e = parse_expr("1/sqrt(1+x^2)").unwrap();
        let d2 = e.derivative().derivative();
        for &x in &[0.0f64, 0.5, 3.0, -7.0] {
            let exact = (2.0 * x * x - 1.0) / (1.0 + x * x).powf(2.5);
            assert!((d2.eval_raw(x) - exact).abs() < 1e-12);
        }
    }
}
