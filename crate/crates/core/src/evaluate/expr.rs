//! Guard expressions for simulated SUT blocks and mutant kill conditions.
//!
//! ```text
//! expr    := or
//! or      := and (("or" | "||") and)*
//! and     := unary (("and" | "&&") unary)*
//! unary   := ("not" | "!") unary | atom
//! atom    := "(" expr ")" | "true" | "false"
//!          | "covered" "(" unit ")"
//!          | param op value
//!          | param ["not"] "in" "{" value ("," value)* "}"
//! op      := "=" | "==" | "!=" | "<" | "<=" | ">" | ">="
//! ```
//!
//! Values are bare tokens (`[A-Za-z0-9_.+-]+`) or double-quoted strings and
//! must belong to the parameter's domain. Ordering comparisons use position
//! in the domain, not numeric value. `covered(n)` is only accepted where the
//! caller allows coverage references (kill guards).

use std::collections::BTreeSet;
use std::fmt;

use crate::model::{ParameterModel, TestCase};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ExprError {
    #[error("guard `{guard}`: {message}")]
    Syntax { guard: String, message: String },
    #[error("guard `{guard}`: unknown parameter `{param}`")]
    UnknownParameter { guard: String, param: String },
    #[error("guard `{guard}`: `{value}` is not a value of `{param}`")]
    UnknownValue {
        guard: String,
        param: String,
        value: String,
    },
    #[error("guard `{guard}`: covered(...) is not allowed here")]
    CoverageNotAllowed { guard: String },
    #[error("guard `{guard}`: unit {unit} outside [0, {total})")]
    UnitOutOfRange { guard: String, unit: usize, total: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    fn apply(self, lhs: usize, rhs: usize) -> bool {
        match self {
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ne => lhs != rhs,
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Const(bool),
    Cmp { param: usize, op: CmpOp, value: usize },
    In { param: usize, values: BTreeSet<usize> },
    Covered(usize),
    Not(Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
}

impl Expr {
    /// `covered` is the case's coverage; `None` treats `covered(n)` as false.
    pub fn eval(&self, case: &TestCase, covered: Option<&BTreeSet<usize>>) -> bool {
        match self {
            Expr::Const(b) => *b,
            Expr::Cmp { param, op, value } => op.apply(case.value(*param), *value),
            Expr::In { param, values } => values.contains(&case.value(*param)),
            Expr::Covered(u) => covered.is_some_and(|c| c.contains(u)),
            Expr::Not(e) => !e.eval(case, covered),
            Expr::And(es) => es.iter().all(|e| e.eval(case, covered)),
            Expr::Or(es) => es.iter().any(|e| e.eval(case, covered)),
        }
    }

    pub fn params(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.collect_params(&mut out);
        out
    }

    fn collect_params(&self, out: &mut BTreeSet<usize>) {
        match self {
            Expr::Cmp { param, .. } | Expr::In { param, .. } => {
                out.insert(*param);
            }
            Expr::Not(e) => e.collect_params(out),
            Expr::And(es) | Expr::Or(es) => es.iter().for_each(|e| e.collect_params(out)),
            Expr::Const(_) | Expr::Covered(_) => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Word(String),
    Quoted(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Op(CmpOp),
    AndSym,
    OrSym,
    Bang,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Word(w) => write!(f, "`{w}`"),
            Tok::Quoted(q) => write!(f, "\"{q}\""),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Op(op) => write!(f, "{op:?}"),
            Tok::AndSym => f.write_str("`&&`"),
            Tok::OrSym => f.write_str("`||`"),
            Tok::Bang => f.write_str("`!`"),
        }
    }
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '+' | '-')
}

fn lex(src: &str) -> Result<Vec<Tok>, String> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let next = chars.get(i + 1).copied();
        match c {
            c if c.is_whitespace() => i += 1,
            '(' => {
                out.push(Tok::LParen);
                i += 1
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1
            }
            '{' => {
                out.push(Tok::LBrace);
                i += 1
            }
            '}' => {
                out.push(Tok::RBrace);
                i += 1
            }
            ',' => {
                out.push(Tok::Comma);
                i += 1
            }
            '=' => {
                out.push(Tok::Op(CmpOp::Eq));
                i += if next == Some('=') { 2 } else { 1 };
            }
            '!' if next == Some('=') => {
                out.push(Tok::Op(CmpOp::Ne));
                i += 2
            }
            '!' => {
                out.push(Tok::Bang);
                i += 1
            }
            '<' if next == Some('=') => {
                out.push(Tok::Op(CmpOp::Le));
                i += 2
            }
            '<' => {
                out.push(Tok::Op(CmpOp::Lt));
                i += 1
            }
            '>' if next == Some('=') => {
                out.push(Tok::Op(CmpOp::Ge));
                i += 2
            }
            '>' => {
                out.push(Tok::Op(CmpOp::Gt));
                i += 1
            }
            '&' if next == Some('&') => {
                out.push(Tok::AndSym);
                i += 2
            }
            '|' if next == Some('|') => {
                out.push(Tok::OrSym);
                i += 2
            }
            '"' => {
                let start = i + 1;
                let end = chars[start..]
                    .iter()
                    .position(|&c| c == '"')
                    .ok_or("unterminated string")?;
                out.push(Tok::Quoted(chars[start..start + end].iter().collect()));
                i = start + end + 1;
            }
            c if is_word_char(c) => {
                let start = i;
                while i < chars.len() && is_word_char(chars[i]) {
                    i += 1;
                }
                out.push(Tok::Word(chars[start..i].iter().collect()));
            }
            other => return Err(format!("unexpected character `{other}`")),
        }
    }
    Ok(out)
}

/// Where a guard appears, and therefore what it may reference.
#[derive(Debug, Clone, Copy)]
pub struct GuardContext<'a> {
    pub model: &'a ParameterModel,
    /// `Some(total_units)` enables `covered(n)`.
    pub coverage_units: Option<usize>,
}

pub fn parse_guard(src: &str, ctx: GuardContext<'_>) -> Result<Expr, ExprError> {
    let syntax = |message: String| ExprError::Syntax {
        guard: src.to_string(),
        message,
    };
    let toks = lex(src).map_err(syntax)?;
    if toks.is_empty() {
        return Err(syntax("empty guard".into()));
    }
    let mut p = Parser { toks, pos: 0, src, ctx };
    let e = p.or()?;
    if let Some(t) = p.peek() {
        return Err(syntax(format!("unexpected {t} after expression")));
    }
    Ok(e)
}

struct Parser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    src: &'a str,
    ctx: GuardContext<'a>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn err(&self, message: impl Into<String>) -> ExprError {
        ExprError::Syntax {
            guard: self.src.to_string(),
            message: message.into(),
        }
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Some(Tok::Word(x)) if x == w)
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ExprError> {
        match self.bump() {
            Some(t) if t == tok => Ok(()),
            Some(t) => Err(self.err(format!("expected {tok}, found {t}"))),
            None => Err(self.err(format!("expected {tok}, found end of guard"))),
        }
    }

    fn or(&mut self) -> Result<Expr, ExprError> {
        let mut terms = vec![self.and()?];
        while self.is_word("or") || self.peek() == Some(&Tok::OrSym) {
            self.bump();
            terms.push(self.and()?);
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            Expr::Or(terms)
        })
    }

    fn and(&mut self) -> Result<Expr, ExprError> {
        let mut terms = vec![self.unary()?];
        while self.is_word("and") || self.peek() == Some(&Tok::AndSym) {
            self.bump();
            terms.push(self.unary()?);
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            Expr::And(terms)
        })
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.is_word("not") || self.peek() == Some(&Tok::Bang) {
            self.bump();
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn value_token(&mut self) -> Result<String, ExprError> {
        match self.bump() {
            Some(Tok::Word(w)) | Some(Tok::Quoted(w)) => Ok(w),
            Some(t) => Err(self.err(format!("expected a value, found {t}"))),
            None => Err(self.err("expected a value, found end of guard")),
        }
    }

    fn resolve_value(&self, param: usize, token: &str) -> Result<usize, ExprError> {
        let p = self.ctx.model.parameter(param);
        p.value_index(token).ok_or_else(|| ExprError::UnknownValue {
            guard: self.src.to_string(),
            param: p.name.clone(),
            value: token.to_string(),
        })
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.bump() {
            Some(Tok::LParen) => {
                let e = self.or()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Word(w)) if w == "true" => Ok(Expr::Const(true)),
            Some(Tok::Word(w)) if w == "false" => Ok(Expr::Const(false)),
            Some(Tok::Word(w)) if w == "covered" && self.peek() == Some(&Tok::LParen) => {
                self.bump();
                let unit_tok = self.value_token()?;
                self.expect(Tok::RParen)?;
                let total = self.ctx.coverage_units.ok_or_else(|| ExprError::CoverageNotAllowed {
                    guard: self.src.to_string(),
                })?;
                let unit: usize = unit_tok
                    .parse()
                    .map_err(|_| self.err(format!("`{unit_tok}` is not a unit id")))?;
                if unit >= total {
                    return Err(ExprError::UnitOutOfRange {
                        guard: self.src.to_string(),
                        unit,
                        total,
                    });
                }
                Ok(Expr::Covered(unit))
            }
            Some(Tok::Word(name)) | Some(Tok::Quoted(name)) => {
                let param = self
                    .ctx
                    .model
                    .index_of(&name)
                    .ok_or_else(|| ExprError::UnknownParameter {
                        guard: self.src.to_string(),
                        param: name.clone(),
                    })?;
                let negated = if self.is_word("not") {
                    self.bump();
                    if !self.is_word("in") {
                        return Err(self.err("expected `in` after `not`"));
                    }
                    true
                } else {
                    false
                };
                if self.is_word("in") {
                    self.bump();
                    self.expect(Tok::LBrace)?;
                    let mut values = BTreeSet::new();
                    loop {
                        let tok = self.value_token()?;
                        values.insert(self.resolve_value(param, &tok)?);
                        match self.bump() {
                            Some(Tok::Comma) => continue,
                            Some(Tok::RBrace) => break,
                            Some(t) => return Err(self.err(format!("expected `,` or `}}`, found {t}"))),
                            None => return Err(self.err("unterminated value set")),
                        }
                    }
                    let e = Expr::In { param, values };
                    return Ok(if negated { Expr::Not(Box::new(e)) } else { e });
                }
                let op = match self.bump() {
                    Some(Tok::Op(op)) => op,
                    Some(t) => return Err(self.err(format!("expected a comparison after `{name}`, found {t}"))),
                    None => return Err(self.err(format!("expected a comparison after `{name}`"))),
                };
                let tok = self.value_token()?;
                let value = self.resolve_value(param, &tok)?;
                Ok(Expr::Cmp { param, op, value })
            }
            Some(t) => Err(self.err(format!("unexpected {t}"))),
            None => Err(self.err("unexpected end of guard")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Parameter;

    fn model() -> ParameterModel {
        ParameterModel::new(vec![
            Parameter::new("male", &["true", "false"]),
            Parameter::new("age", &["0", "10", "20", "50"]),
            Parameter::new("eps", &["0.00", "1.00", "1E-8"]),
        ])
        .unwrap()
    }

    fn parse(src: &str) -> Result<Expr, ExprError> {
        let m = model();
        parse_guard(
            src,
            GuardContext {
                model: &m,
                coverage_units: Some(10),
            },
        )
    }

    fn eval(src: &str, case: &[usize], cov: &[usize]) -> bool {
        let c: BTreeSet<usize> = cov.iter().copied().collect();
        parse(src).unwrap().eval(&TestCase(case.to_vec()), Some(&c))
    }

    #[test]
    fn comparisons_use_domain_order() {
        assert!(eval("age >= 20", &[0, 2, 0], &[]));
        assert!(!eval("age < 10", &[0, 1, 0], &[]));
        assert!(eval("age != 0 and male = false", &[1, 3, 0], &[]));
        assert!(eval("eps == 1E-8", &[0, 0, 2], &[]));
    }

    #[test]
    fn precedence_and_grouping() {
        // and binds tighter than or
        assert!(eval("male = true or age = 0 and eps = 1.00", &[0, 3, 0], &[]));
        assert!(!eval("(male = true or age = 0) and eps = 1.00", &[0, 3, 0], &[]));
        assert!(eval("not (age = 0) && !(male = true)", &[1, 1, 0], &[]));
    }

    #[test]
    fn set_membership() {
        assert!(eval("age in {10, 50}", &[0, 3, 0], &[]));
        assert!(eval("age not in {10, 50}", &[0, 0, 0], &[]));
        assert!(eval("eps in {\"0.00\"}", &[0, 0, 0], &[]));
    }

    #[test]
    fn coverage_references() {
        assert!(eval("covered(7) and age = 0", &[0, 0, 0], &[7]));
        assert!(!eval("covered(7)", &[0, 0, 0], &[6]));
        let m = model();
        let err = parse_guard(
            "covered(1)",
            GuardContext {
                model: &m,
                coverage_units: None,
            },
        )
        .unwrap_err();
        assert!(matches!(err, ExprError::CoverageNotAllowed { .. }));
        assert!(matches!(
            parse("covered(10)"),
            Err(ExprError::UnitOutOfRange { unit: 10, .. })
        ));
    }

    #[test]
    fn constants() {
        assert!(eval("true", &[0, 0, 0], &[]));
        assert!(!eval("false or not true", &[0, 0, 0], &[]));
    }

    #[test]
    fn errors_name_the_problem() {
        assert_eq!(
            parse("height = 3").unwrap_err(),
            ExprError::UnknownParameter {
                guard: "height = 3".into(),
                param: "height".into()
            }
        );
        assert!(matches!(parse("age = 30"), Err(ExprError::UnknownValue { .. })));
        assert!(matches!(parse("age ="), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse("(age = 0"), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse("age = 0 age"), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse(""), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse("age # 0"), Err(ExprError::Syntax { .. })));
    }

    #[test]
    fn params_collects_references() {
        let e = parse("male = true and (age in {0} or not eps = 1.00) or covered(2)").unwrap();
        assert_eq!(e.params(), [0, 1, 2].into_iter().collect());
    }
}
