//! Arithmetic expressions over named parameters.
//!
//! Grammar: `expr = term (('+' | '-') term)*`, `term = unary (('*' | '/') unary)*`,
//! `unary = '-' unary | power`, `power = atom ('^' unary)?`,
//! `atom = number | name | '(' expr ')'`. Exponents must be integers. The
//! spatial names `x` and `r` are rejected: coefficients are given as arrays
//! of powers, so a spatial name inside an entry means a non-polynomial term.

use std::collections::BTreeMap;

use super::ModelError;
use crate::scalar::{pow, Scalar};

pub fn eval_expression<S: Scalar>(text: &str, params: &BTreeMap<String, S>) -> Result<S, ModelError> {
    let mut p = Parser { text, bytes: text.as_bytes(), pos: 0, params };
    let v = p.expr()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(p.fail("trailing input"));
    }
    Ok(v)
}

struct Parser<'a, S> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
    params: &'a BTreeMap<String, S>,
}

impl<'a, S: Scalar> Parser<'a, S> {
    fn fail(&self, reason: &str) -> ModelError {
        ModelError::Expression { expr: self.text.to_string(), reason: format!("{} at offset {}", reason, self.pos) }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<S, ModelError> {
        let mut v = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            v = if c == b'+' { v + rhs } else { v - rhs };
        }
        Ok(v)
    }

    fn term(&mut self) -> Result<S, ModelError> {
        let mut v = self.unary()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            if c == b'*' {
                v = v * rhs;
            } else {
                if rhs.is_zero() {
                    return Err(self.fail("division by zero"));
                }
                v = v / rhs;
            }
        }
        Ok(v)
    }

    fn unary(&mut self) -> Result<S, ModelError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(-self.unary()?);
        }
        if self.peek() == Some(b'+') {
            self.pos += 1;
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<S, ModelError> {
        let base = self.atom()?;
        if self.peek() != Some(b'^') {
            return Ok(base);
        }
        self.pos += 1;
        let e = self.unary()?;
        let ef = e.to_f64();
        if ef.fract() != 0.0 || ef.abs() > 64.0 {
            return Err(self.fail("exponent must be an integer of magnitude at most 64"));
        }
        let k = ef.abs() as u32;
        let v = pow(&base, k);
        if ef < 0.0 {
            if v.is_zero() {
                return Err(self.fail("division by zero"));
            }
            Ok(S::one() / v)
        } else {
            Ok(v)
        }
    }

    fn atom(&mut self) -> Result<S, ModelError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let v = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.fail("expected ')'"));
                }
                self.pos += 1;
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.bytes.len()
                    && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = &self.text[start..self.pos];
                if let Some(v) = self.params.get(name) {
                    return Ok(v.clone());
                }
                match name {
                    "x" | "r" => Err(ModelError::NonPolynomial(self.text.to_string())),
                    "pi" => Ok(S::from_f64(std::f64::consts::PI)),
                    _ => Err(ModelError::MissingParameter(name.to_string())),
                }
            }
            _ => Err(self.fail("expected a number, name or '('")),
        }
    }

    /// Decimal literal evaluated in `S`, so `0.1` is exactly `1/10` for rationals.
    fn number(&mut self) -> Result<S, ModelError> {
        let ten = S::from_i64(10);
        let mut v = S::zero();
        let mut digits = 0;
        let mut frac = 0i32;
        let mut seen_dot = false;
        while let Some(&c) = self.bytes.get(self.pos) {
            if c.is_ascii_digit() {
                v = v * ten.clone() + S::from_i64((c - b'0') as i64);
                digits += 1;
                if seen_dot {
                    frac += 1;
                }
            } else if c == b'.' && !seen_dot {
                seen_dot = true;
            } else {
                break;
            }
            self.pos += 1;
        }
        if digits == 0 {
            return Err(self.fail("malformed number"));
        }
        let mut exp = -frac;
        if let Some(b'e' | b'E') = self.bytes.get(self.pos) {
            self.pos += 1;
            let neg = match self.bytes.get(self.pos) {
                Some(b'-') => {
                    self.pos += 1;
                    true
                }
                Some(b'+') => {
                    self.pos += 1;
                    false
                }
                _ => false,
            };
            let start = self.pos;
            while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
                self.pos += 1;
            }
            let e: i32 = self.text[start..self.pos].parse().map_err(|_| self.fail("malformed exponent"))?;
            exp += if neg { -e } else { e };
        }
        if exp.abs() > 308 {
            return Err(self.fail("exponent out of range"));
        }
        let scale = pow(&ten, exp.unsigned_abs());
        Ok(if exp >= 0 { v * scale } else { v / scale })
    }
}
