//! Plain-text expression syntax: `q1^2*p3 - 2/3*r^-1`.
//!
//! Identifiers `q1..q3`, `p1..p3` (with `q`, `p` as aliases for the first
//! pair) and `r` are phase-space atoms; every other identifier is a formal
//! parameter. Numbers are read exactly, so `0.1` is `1/10`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use super::expr::PhaseExpr;
use super::AlgebraError;

pub fn parse(src: &str) -> Result<PhaseExpr, AlgebraError> {
    let mut p = Parser {
        src: src.as_bytes(),
        pos: 0,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> AlgebraError {
        AlgebraError::Parse {
            pos: self.pos,
            msg: msg.to_string(),
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

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<PhaseExpr, AlgebraError> {
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                acc = &acc + &self.term()?;
            } else if self.eat(b'-') {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<PhaseExpr, AlgebraError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat(b'*') {
                acc = &acc * &self.unary()?;
            } else if self.eat(b'/') {
                let at = self.pos;
                let d = self.unary()?;
                if d.is_zero() {
                    return Err(AlgebraError::Parse {
                        pos: at,
                        msg: "division by zero".into(),
                    });
                }
                let inv = d.inverse().map_err(|_| AlgebraError::Parse {
                    pos: at,
                    msg: format!(
                        "cannot divide by `{d}`: only monomials in r and parameters are invertible"
                    ),
                })?;
                acc = &acc * &inv;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<PhaseExpr, AlgebraError> {
        if self.eat(b'-') {
            return Ok(-self.unary()?);
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<PhaseExpr, AlgebraError> {
        let base = self.atom()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        let at = self.pos;
        let neg = if self.eat(b'-') {
            true
        } else {
            self.eat(b'+');
            false
        };
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected an integer exponent"));
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        let n: u32 = text.parse().map_err(|_| self.error("exponent too large"))?;
        if !neg {
            return Ok(base.pow(n));
        }
        let inv = base.inverse().map_err(|_| AlgebraError::Parse {
            pos: at,
            msg: format!("negative power of `{base}` is outside the expression ring"),
        })?;
        Ok(inv.pow(n))
    }

    fn atom(&mut self) -> Result<PhaseExpr, AlgebraError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => Ok(self.ident()),
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<PhaseExpr, AlgebraError> {
        let start = self.pos;
        let mut digits = String::new();
        let mut frac_len = 0u32;
        let mut seen_dot = false;
        while let Some(&c) = self.src.get(self.pos) {
            if c.is_ascii_digit() {
                digits.push(c as char);
                if seen_dot {
                    frac_len += 1;
                }
            } else if c == b'.' && !seen_dot {
                seen_dot = true;
            } else {
                break;
            }
            self.pos += 1;
        }
        if digits.is_empty() {
            self.pos = start;
            return Err(self.error("malformed number"));
        }
        let mut exp10: i64 = -(frac_len as i64);
        if matches!(self.src.get(self.pos), Some(b'e') | Some(b'E')) {
            let save = self.pos;
            self.pos += 1;
            let neg = match self.src.get(self.pos) {
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
            let es = self.pos;
            while self.src.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
            if es == self.pos {
                // not an exponent; leave `e` for the identifier that follows
                self.pos = save;
            } else {
                let e: i64 = std::str::from_utf8(&self.src[es..self.pos])
                    .expect("ascii")
                    .parse()
                    .map_err(|_| self.error("exponent too large"))?;
                exp10 += if neg { -e } else { e };
            }
        }
        if exp10.abs() > 4096 {
            return Err(self.error("decimal exponent out of range"));
        }
        let mantissa: BigInt = digits.parse().expect("digits");
        let scale = num_traits::pow(BigInt::from(10), exp10.unsigned_abs() as usize);
        let value = if exp10 >= 0 {
            BigRational::from_integer(mantissa * scale)
        } else {
            BigRational::new(mantissa, scale)
        };
        if value.is_zero() {
            return Ok(PhaseExpr::zero());
        }
        Ok(PhaseExpr::rational(value))
    }

    fn ident(&mut self) -> PhaseExpr {
        let start = self.pos;
        while self
            .src
            .get(self.pos)
            .is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        match name {
            "q" | "q1" => PhaseExpr::q(0),
            "q2" => PhaseExpr::q(1),
            "q3" => PhaseExpr::q(2),
            "p" | "p1" => PhaseExpr::p(0),
            "p2" => PhaseExpr::p(1),
            "p3" => PhaseExpr::p(2),
            "r" => PhaseExpr::r_pow(1),
            other => PhaseExpr::param(other),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_syntax() {
        let e = parse("q1^2*p3 - 2/3*r^-1").unwrap();
        let expect = &(&PhaseExpr::q(0).pow(2) * &PhaseExpr::p(2))
            - &(&PhaseExpr::frac(2, 3) * &PhaseExpr::r_pow(-1));
        assert_eq!(e, expect);
    }

    #[test]
    fn precedence_and_decimals() {
        assert_eq!(parse("-q^2").unwrap(), -PhaseExpr::q(0).pow(2));
        assert_eq!(
            parse("0.25*(p + q)").unwrap(),
            &PhaseExpr::frac(1, 4) * &(&PhaseExpr::p(0) + &PhaseExpr::q(0))
        );
        assert_eq!(parse("1.5e2").unwrap(), PhaseExpr::int(150));
        assert_eq!(parse("p^2/(2*m)").unwrap().to_string(), "1/2*m^-1*p1^2");
        assert_eq!(parse("r^2").unwrap(), parse("q1^2+q2^2+q3^2").unwrap());
    }

    #[test]
    fn errors_point_at_the_problem() {
        assert!(matches!(parse("q1 +"), Err(AlgebraError::Parse { .. })));
        assert!(matches!(
            parse("1/q1"),
            Err(AlgebraError::Parse { pos: 2, .. })
        ));
        assert!(matches!(parse("(q1"), Err(AlgebraError::Parse { .. })));
        assert!(matches!(
            parse("q1 $"),
            Err(AlgebraError::Parse { pos: 3, .. })
        ));
        assert!(matches!(parse("q^-1"), Err(AlgebraError::Parse { .. })));
    }
}
