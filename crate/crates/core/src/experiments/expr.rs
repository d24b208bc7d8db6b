//! Arithmetic expressions accepted wherever a config expects a number, so
//! that irrational parameters such as `4*sqrt(2)*pi` can be given exactly.
//!
//! Grammar: `+ - * /`, unary minus, parentheses, decimal literals, the
//! constant `pi` and the functions `sqrt`, `sin`, `cos`, `exp`.

use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("bad expression '{input}': {reason}")]
pub struct ExprError {
    pub input: String,
    pub reason: String,
}

pub fn eval(input: &str) -> Result<f64, ExprError> {
    let mut p = Parser {
        src: input.as_bytes(),
        pos: 0,
        input,
    };
    let v = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error(format!("unexpected '{}'", &input[p.pos..])));
    }
    if !v.is_finite() {
        return Err(p.error("value is not finite".into()));
    }
    Ok(v)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    input: &'a str,
}

impl Parser<'_> {
    fn error(&self, reason: String) -> ExprError {
        ExprError {
            input: self.input.to_string(),
            reason,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<f64, ExprError> {
        let mut acc = self.term()?;
        while let Some(op @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            acc = if op == b'+' { acc + rhs } else { acc - rhs };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<f64, ExprError> {
        let mut acc = self.unary()?;
        while let Some(op @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            acc = if op == b'*' { acc * rhs } else { acc / rhs };
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<f64, ExprError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<f64, ExprError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let v = self.expr()?;
                self.expect(b')')?;
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let name = &self.input[start..self.pos];
                if name == "pi" {
                    return Ok(std::f64::consts::PI);
                }
                let f: fn(f64) -> f64 = match name {
                    "sqrt" => f64::sqrt,
                    "sin" => f64::sin,
                    "cos" => f64::cos,
                    "exp" => f64::exp,
                    _ => return Err(self.error(format!("unknown name '{name}'"))),
                };
                self.expect(b'(')?;
                let v = self.expr()?;
                self.expect(b')')?;
                Ok(f(v))
            }
            Some(c) => Err(self.error(format!("unexpected '{}'", c as char))),
            None => Err(self.error("unexpected end of input".into())),
        }
    }

    fn number(&mut self) -> Result<f64, ExprError> {
        let start = self.pos;
        let bytes = self.src;
        while self.pos < bytes.len()
            && (bytes[self.pos].is_ascii_digit() || bytes[self.pos] == b'.')
        {
            self.pos += 1;
        }
        if self.pos < bytes.len() && (bytes[self.pos] == b'e' || bytes[self.pos] == b'E') {
            let mut p = self.pos + 1;
            if p < bytes.len() && (bytes[p] == b'+' || bytes[p] == b'-') {
                p += 1;
            }
            if p < bytes.len() && bytes[p].is_ascii_digit() {
                while p < bytes.len() && bytes[p].is_ascii_digit() {
                    p += 1;
                }
                self.pos = p;
            }
        }
        let text = &self.input[start..self.pos];
        text.parse()
            .map_err(|_| self.error(format!("bad number '{text}'")))
    }

    fn expect(&mut self, c: u8) -> Result<(), ExprError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected '{}'", c as char)))
        }
    }
}

/// A config number: either a JSON number or a string expression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct NumVisitor;

        impl Visitor<'_> for NumVisitor {
            type Value = Num;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or an arithmetic expression string")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Num, E> {
                Ok(Num(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Num, E> {
                Ok(Num(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Num, E> {
                Ok(Num(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Num, E> {
                eval(v).map(Num).map_err(E::custom)
            }
        }

        d.deserialize_any(NumVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn evaluates_expressions() {
        assert_eq!(eval("4*sqrt(2)*pi").unwrap(), 4.0 * 2f64.sqrt() * PI);
        assert_eq!(
            eval("2*pi/(4*sqrt(2)*pi)").unwrap(),
            2.0 * PI / (4.0 * 2f64.sqrt() * PI)
        );
        assert_eq!(eval(" 0.1 / 32 ").unwrap(), 0.1 / 32.0);
        assert_eq!(eval("-2").unwrap(), -2.0);
        assert_eq!(eval("1e-16").unwrap(), 1e-16);
        assert_eq!(eval("2.5E+2 - 50").unwrap(), 200.0);
        assert_eq!(eval("1 - 2 - 3").unwrap(), -4.0);
        assert_eq!(eval("8 / 2 / 2").unwrap(), 2.0);
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "pi pi", "sqrt 2", "foo(1)", "1/0", "(1", "1.2.3"] {
            assert!(eval(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn num_accepts_both_forms() {
        let v: Vec<Num> = serde_json::from_str(r#"[1, 2.5, "pi"]"#).unwrap();
        assert_eq!(v, vec![Num(1.0), Num(2.5), Num(PI)]);
        assert!(serde_json::from_str::<Num>(r#""nope""#).is_err());
    }
}
