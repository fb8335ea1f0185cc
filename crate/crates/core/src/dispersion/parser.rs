//! Recursive-descent parser for user-defined symbols.
//!
//! Grammar (standard precedence, `^` binds tighter than unary minus and is
//! right associative):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := ('-' | '+') unary | power
//! power := atom ('^' unary)?
//! atom  := number | 'k' | param | func '(' expr (',' expr)* ')' | '(' expr ')'
//! ```

use std::collections::BTreeMap;

use crate::error::{Error, Result};

const FUNCTIONS: [(&str, usize); 6] = [
    ("sqrt", 1),
    ("tanh", 1),
    ("abs", 1),
    ("exp", 1),
    ("cos", 1),
    ("pow", 2),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Tanh,
    Abs,
    Exp,
    Cos,
    Pow,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sqrt" => Self::Sqrt,
            "tanh" => Self::Tanh,
            "abs" => Self::Abs,
            "exp" => Self::Exp,
            "cos" => Self::Cos,
            "pow" => Self::Pow,
            _ => return None,
        })
    }

    fn arity(self) -> usize {
        if self == Self::Pow {
            2
        } else {
            1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Parsed expression in the single variable `k`. Parameters are substituted
/// at parse time.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    K,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl Expr {
    pub fn eval(&self, k: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::K => k,
            Expr::Neg(e) => -e.eval(k),
            Expr::Bin(op, l, r) => {
                let (l, r) = (l.eval(k), r.eval(k));
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => l / r,
                    BinOp::Pow => l.powf(r),
                }
            }
            Expr::Call(f, args) => {
                let x = args[0].eval(k);
                match f {
                    Func::Sqrt => x.sqrt(),
                    Func::Tanh => x.tanh(),
                    Func::Abs => x.abs(),
                    Func::Exp => x.exp(),
                    Func::Cos => x.cos(),
                    Func::Pow => x.powf(args[1].eval(k)),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Op(c) => format!("'{c}'"),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::End => "end of input".into(),
        }
    }
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
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let value = text.parse::<f64>().map_err(|_| Error::Parse {
                position: start,
                expected: vec!["number".into()],
                found: format!("'{text}'"),
            })?;
            out.push((start, Tok::Num(value)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
        } else {
            let tok = match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                _ => {
                    let found = src[start..].chars().next().unwrap_or(c);
                    return Err(Error::Parse {
                        position: start,
                        expected: vec!["operator".into(), "operand".into()],
                        found: format!("'{found}'"),
                    });
                }
            };
            out.push((start, tok));
            i += 1;
        }
    }
    out.push((src.len(), Tok::End));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    params: &'a BTreeMap<String, f64>,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn bump(&mut self) -> (usize, Tok) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T> {
        let (position, tok) = &self.toks[self.pos];
        Err(Error::Parse {
            position: *position,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: tok.describe(),
        })
    }

    fn operand_expectations(&self) -> Vec<String> {
        let mut v = vec![
            "number".to_string(),
            "'k'".into(),
            "'('".into(),
            "'-'".into(),
        ];
        v.extend(self.params.keys().map(|p| format!("'{p}'")));
        v.extend(FUNCTIONS.iter().map(|(f, _)| format!("'{f}('")));
        v
    }

    fn expect(&mut self, tok: Tok, label: &str) -> Result<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.fail(&[label])
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Tok::Op('-') => {
                self.bump();
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Tok::Op('+') => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if name == "k" {
                    self.bump();
                    return Ok(Expr::K);
                }
                if let Some(&v) = self.params.get(&name) {
                    self.bump();
                    return Ok(Expr::Num(v));
                }
                let Some(func) = Func::from_name(&name) else {
                    let ex = self.operand_expectations();
                    let (position, tok) = &self.toks[self.pos];
                    return Err(Error::Parse {
                        position: *position,
                        expected: ex,
                        found: tok.describe(),
                    });
                };
                self.bump();
                self.expect(Tok::LParen, "'('")?;
                let mut args = vec![self.expr()?];
                while *self.peek() == Tok::Comma {
                    self.bump();
                    args.push(self.expr()?);
                }
                if args.len() != func.arity() {
                    let label = if args.len() < func.arity() {
                        "','"
                    } else {
                        "')'"
                    };
                    return self.fail(&[label]);
                }
                self.expect(Tok::RParen, "')'")?;
                Ok(Expr::Call(func, args))
            }
            _ => {
                let ex = self.operand_expectations();
                let refs: Vec<&str> = ex.iter().map(String::as_str).collect();
                self.fail(&refs)
            }
        }
    }
}

/// Parses `src` into an expression tree, substituting named parameters.
pub fn parse_expr(src: &str, params: &BTreeMap<String, f64>) -> Result<Expr> {
    let mut p = Parser {
        toks: tokenize(src)?,
        pos: 0,
        params,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.fail(&["operator", "end of input"]);
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(src: &str, k: f64) -> f64 {
        parse_expr(src, &BTreeMap::new()).unwrap().eval(k)
    }

    #[test]
    fn precedence() {
        assert_eq!(eval("1+2*3", 0.0), 7.0);
        assert_eq!(eval("-k^2", 3.0), -9.0);
        assert_eq!(eval("2^3^2", 0.0), 512.0);
        assert_eq!(eval("2^-1", 0.0), 0.5);
        assert_eq!(eval("(1+k)*(1-k)", 2.0), -3.0);
        assert_eq!(eval("8/2/2", 0.0), 2.0);
        assert_eq!(eval("pow(k, 3) - 1e1", 2.0), -2.0);
        assert_eq!(eval("1.5e-1 * 2", 0.0), 0.3);
    }

    #[test]
    fn parameters_substituted() {
        let mut params = BTreeMap::new();
        params.insert("alpha".to_string(), 2.0);
        let e = parse_expr("1+abs(k)^alpha", &params).unwrap();
        assert_eq!(e.eval(-3.0), 10.0);
    }

    #[test]
    fn error_positions() {
        let params = BTreeMap::new();
        match parse_expr("1 + * k", &params) {
            Err(Error::Parse {
                position, expected, ..
            }) => {
                assert_eq!(position, 4);
                assert!(expected.contains(&"'k'".to_string()));
            }
            other => panic!("{other:?}"),
        }
        match parse_expr("sqrt(k", &params) {
            Err(Error::Parse {
                position,
                expected,
                found,
            }) => {
                assert_eq!(position, 6);
                assert_eq!(expected, vec!["')'".to_string()]);
                assert_eq!(found, "end of input");
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_expr("q*k", &params),
            Err(Error::Parse { position: 0, .. })
        ));
        assert!(matches!(
            parse_expr("k $ 2", &params),
            Err(Error::Parse { position: 2, .. })
        ));
        assert!(matches!(
            parse_expr("pow(k)", &params),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_expr("k k", &params),
            Err(Error::Parse { position: 2, .. })
        ));
    }
}
