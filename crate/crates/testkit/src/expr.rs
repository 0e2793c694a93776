//! Evaluate-while-parsing oracle for the derived-metric language, plus a random
//! expression generator.

use rand::Rng;

/// Reasons evaluation can fail, without the node text the production evaluator carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleEvalError {
    DivisionByZero,
    LogDomain,
    Unbound,
    NonFinite,
}

/// Reasons the text is rejected before any evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleSyntaxError {
    Syntax(usize),
    UnknownFunction(String),
    WrongArity { func: String, found: usize },
}

type Eval = Result<f64, OracleEvalError>;

struct Oracle<'a> {
    src: &'a [u8],
    pos: usize,
    vars: &'a dyn Fn(&str) -> Option<f64>,
}

fn finite(x: f64) -> Eval {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(OracleEvalError::NonFinite)
    }
}

impl Oracle<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), OracleSyntaxError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(OracleSyntaxError::Syntax(self.pos))
        }
    }

    fn expr(&mut self) -> Result<Eval, OracleSyntaxError> {
        let mut acc = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            acc = acc.and_then(|a| rhs.and_then(|b| finite(if c == b'+' { a + b } else { a - b })));
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Eval, OracleSyntaxError> {
        let mut acc = self.factor()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.factor()?;
            acc = acc.and_then(|a| {
                rhs.and_then(|b| {
                    if c == b'*' {
                        finite(a * b)
                    } else if b == 0.0 {
                        Err(OracleEvalError::DivisionByZero)
                    } else {
                        finite(a / b)
                    }
                })
            });
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Eval, OracleSyntaxError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let v = self.expr()?;
                self.expect(b')')?;
                Ok(v)
            }
            Some(b'0'..=b'9') => self.number(),
            Some(b'a'..=b'z') => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && matches!(self.src[self.pos], b'a'..=b'z' | b'0'..=b'9' | b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos])
                    .unwrap()
                    .to_owned();
                if self.peek() == Some(b'(') {
                    self.pos += 1;
                    let mut args = vec![self.expr()?];
                    while self.peek() == Some(b',') {
                        self.pos += 1;
                        args.push(self.expr()?);
                    }
                    self.expect(b')')?;
                    self.call(&name, args)
                } else {
                    Ok((self.vars)(&name).ok_or(OracleEvalError::Unbound))
                }
            }
            _ => Err(OracleSyntaxError::Syntax(self.pos)),
        }
    }

    fn number(&mut self) -> Result<Eval, OracleSyntaxError> {
        let start = self.pos;
        let digits = |o: &mut Self| {
            let s = o.pos;
            while o.pos < o.src.len() && o.src[o.pos].is_ascii_digit() {
                o.pos += 1;
            }
            o.pos > s
        };
        digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            if !digits(self) {
                return Err(OracleSyntaxError::Syntax(self.pos));
            }
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if !digits(self) {
                return Err(OracleSyntaxError::Syntax(self.pos));
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let x: f64 = text.parse().map_err(|_| OracleSyntaxError::Syntax(start))?;
        Ok(finite(x))
    }

    fn call(&mut self, name: &str, args: Vec<Eval>) -> Result<Eval, OracleSyntaxError> {
        let arity = match name {
            "exp" | "log" => 1,
            "min" | "max" | "pow" => 2,
            "clamp" => 3,
            _ => return Err(OracleSyntaxError::UnknownFunction(name.to_owned())),
        };
        if args.len() != arity {
            return Err(OracleSyntaxError::WrongArity {
                func: name.to_owned(),
                found: args.len(),
            });
        }
        let mut vals = Vec::with_capacity(arity);
        for a in args {
            match a {
                Ok(v) => vals.push(v),
                Err(e) => return Ok(Err(e)),
            }
        }
        let v = match name {
            "exp" => vals[0].exp(),
            "log" => {
                if vals[0] <= 0.0 {
                    return Ok(Err(OracleEvalError::LogDomain));
                }
                vals[0].ln()
            }
            "min" => vals[0].min(vals[1]),
            "max" => vals[0].max(vals[1]),
            "pow" => vals[0].powf(vals[1]),
            _ => {
                // min(max(x, lo), hi), spelled out
                let (x, lo, hi) = (vals[0], vals[1], vals[2]);
                let floored = if x > lo { x } else { lo };
                if floored < hi {
                    floored
                } else {
                    hi
                }
            }
        };
        Ok(finite(v))
    }
}

/// Parses and evaluates `text` in one pass.
pub fn evaluate(
    text: &str,
    vars: &dyn Fn(&str) -> Option<f64>,
) -> Result<Result<f64, OracleEvalError>, OracleSyntaxError> {
    let mut o = Oracle {
        src: text.as_bytes(),
        pos: 0,
        vars,
    };
    let v = o.expr()?;
    if o.peek().is_some() {
        return Err(OracleSyntaxError::Syntax(o.pos));
    }
    Ok(v)
}

fn literal(rng: &mut impl Rng) -> String {
    match rng.gen_range(0..4) {
        0 => rng.gen_range(0..20).to_string(),
        1 => format!("{:.3}", rng.gen_range(0.0..10.0)),
        2 => format!(
            "{}.{}e{}",
            rng.gen_range(1..10),
            rng.gen_range(0..100),
            rng.gen_range(-2..3)
        ),
        _ => format!("{}E+{}", rng.gen_range(1..10), rng.gen_range(0..2)),
    }
}

fn space(rng: &mut impl Rng) -> &'static str {
    [" ", "", "  "][rng.gen_range(0..3)]
}

/// Random well-formed expression text over `vars`, nested at most `depth` levels.
pub fn random_expression(rng: &mut impl Rng, vars: &[&str], depth: u32) -> String {
    if depth == 0 || rng.gen_bool(0.25) {
        return if vars.is_empty() || rng.gen_bool(0.5) {
            literal(rng)
        } else {
            vars[rng.gen_range(0..vars.len())].to_owned()
        };
    }
    let sub = |rng: &mut _| random_expression(rng, vars, depth - 1);
    match rng.gen_range(0..10) {
        0..=5 => {
            let op = ["+", "-", "*", "/"][rng.gen_range(0..4)];
            let (a, b) = (sub(rng), sub(rng));
            let (s1, s2) = (space(rng), space(rng));
            format!("{a}{s1}{op}{s2}{b}")
        }
        6 => format!("({})", sub(rng)),
        _ => {
            let (name, arity) = [
                ("min", 2),
                ("max", 2),
                ("pow", 2),
                ("exp", 1),
                ("log", 1),
                ("clamp", 3),
            ][rng.gen_range(0..6)];
            let args: Vec<String> = (0..arity).map(|_| sub(rng)).collect();
            format!("{name}({})", args.join(&format!(",{}", space(rng))))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(text: &str) -> Result<Result<f64, OracleEvalError>, OracleSyntaxError> {
        evaluate(text, &|n| (n == "x").then_some(4.0))
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(eval("2 + 3 * 4"), Ok(Ok(14.0)));
        assert_eq!(eval("(2 + 3) * 4"), Ok(Ok(20.0)));
        assert_eq!(eval("10 - 4 - 3"), Ok(Ok(3.0)));
        assert_eq!(
            eval("x / (x - x)"),
            Ok(Err(OracleEvalError::DivisionByZero))
        );
        assert_eq!(eval("clamp(7, 0, 5)"), Ok(Ok(5.0)));
        assert_eq!(eval("log(0)"), Ok(Err(OracleEvalError::LogDomain)));
        assert_eq!(eval("y + 1"), Ok(Err(OracleEvalError::Unbound)));
        assert!(matches!(
            eval("min(1)"),
            Err(OracleSyntaxError::WrongArity { .. })
        ));
        assert!(matches!(
            eval("foo(1)"),
            Err(OracleSyntaxError::UnknownFunction(_))
        ));
        assert!(matches!(eval("1 +"), Err(OracleSyntaxError::Syntax(_))));
        assert_eq!(eval("1.5e2"), Ok(Ok(150.0)));
    }
}
