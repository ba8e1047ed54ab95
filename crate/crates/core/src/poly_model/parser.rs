//! Recursive-descent parser for the term-sum expression language:
//!
//! ```text
//! expr       := term (('+'|'-') term)*
//! term       := [complexlit '*'] factor ('*' factor)*
//! factor     := 'r[' int ',' int ']'
//! complexlit := '(' float (('+'|'-') float 'i')? ')' | float
//! ```
//!
//! Whitespace is allowed between tokens. A sign may precede the first term
//! and the real part inside parentheses.

use super::{MultiIndexTerm, PolynomialSpec};
use crate::error::{Error, Result};
use crate::{c64, C64};

/// Parses `text` into a canonical spec over `dim x dim` matrices. The degree
/// is the longest product seen; terms are not homogenized.
pub fn parse_polynomial(text: &str, dim: usize) -> Result<PolynomialSpec> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, dim };
    let terms = p.expr()?;
    PolynomialSpec::from_terms(dim, terms)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    dim: usize,
}

impl Parser<'_> {
    fn expr(&mut self) -> Result<Vec<MultiIndexTerm>> {
        self.skip_ws();
        if self.pos == self.src.len() {
            return Err(Error::EmptyExpression);
        }
        let mut terms = Vec::new();
        let mut sign = self.sign().unwrap_or(1.0);
        loop {
            let mut term = self.term()?;
            term.coeff *= sign;
            terms.push(term);
            self.skip_ws();
            match self.sign() {
                Some(s) => sign = s,
                None if self.pos == self.src.len() => break,
                None => return Err(self.error("expected '+', '-' or end of input")),
            }
        }
        Ok(terms)
    }

    fn term(&mut self) -> Result<MultiIndexTerm> {
        self.skip_ws();
        let coeff = match self.peek() {
            Some(b'r') => c64(1.0, 0.0),
            Some(b'(') | Some(b'0'..=b'9') | Some(b'.') => {
                let c = self.complexlit()?;
                self.skip_ws();
                self.expect(b'*')?;
                c
            }
            _ => return Err(self.error("expected a coefficient or 'r['")),
        };
        let mut indices = Vec::new();
        loop {
            self.skip_ws();
            let (i, j) = self.factor()?;
            indices.push(i);
            indices.push(j);
            self.skip_ws();
            if self.peek() == Some(b'*') {
                self.pos += 1;
            } else {
                break;
            }
        }
        Ok(MultiIndexTerm::new(indices, coeff))
    }

    fn factor(&mut self) -> Result<(usize, usize)> {
        self.expect(b'r')?;
        self.skip_ws();
        self.expect(b'[')?;
        let i = self.index()?;
        self.skip_ws();
        self.expect(b',')?;
        let j = self.index()?;
        self.skip_ws();
        self.expect(b']')?;
        Ok((i, j))
    }

    fn index(&mut self) -> Result<usize> {
        self.skip_ws();
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected an index"));
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        let index: usize =
            text.parse().map_err(|_| Error::Syntax { pos: start, msg: format!("index '{text}' is too large") })?;
        if index >= self.dim {
            return Err(Error::IndexOutOfRange { index, dim: self.dim });
        }
        Ok(index)
    }

    fn complexlit(&mut self) -> Result<C64> {
        if self.peek() != Some(b'(') {
            return Ok(c64(self.float()?, 0.0));
        }
        self.pos += 1;
        self.skip_ws();
        let re_sign = self.sign().unwrap_or(1.0);
        self.skip_ws();
        let re = re_sign * self.float()?;
        self.skip_ws();
        let im = match self.sign() {
            Some(s) => {
                self.skip_ws();
                let v = s * self.float()?;
                self.skip_ws();
                self.expect(b'i')?;
                v
            }
            None => 0.0,
        };
        self.skip_ws();
        self.expect(b')')?;
        Ok(c64(re, im))
    }

    fn float(&mut self) -> Result<f64> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while matches!(p.peek(), Some(b'0'..=b'9')) {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut mantissa = digits(self);
        if self.peek() == Some(b'.') {
            self.pos += 1;
            mantissa += digits(self);
        }
        if mantissa == 0 {
            self.pos = start;
            return Err(self.error("expected a number"));
        }
        if matches!(self.peek(), Some(b'e') | Some(b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii number");
        text.parse::<f64>().map_err(|_| Error::Syntax { pos: start, msg: format!("bad number '{text}'") })
    }

    fn sign(&mut self) -> Option<f64> {
        match self.peek() {
            Some(b'+') => {
                self.pos += 1;
                Some(1.0)
            }
            Some(b'-') => {
                self.pos += 1;
                Some(-1.0)
            }
            _ => None,
        }
    }

    fn expect(&mut self, byte: u8) -> Result<()> {
        if self.peek() == Some(byte) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected '{}'", byte as char)))
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b) if b.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn error(&self, msg: &str) -> Error {
        let found = match self.peek() {
            Some(b) => format!("found '{}'", b as char),
            None => "found end of input".to_string(),
        };
        Error::Syntax { pos: self.pos, msg: format!("{msg}, {found}") }
    }
}
