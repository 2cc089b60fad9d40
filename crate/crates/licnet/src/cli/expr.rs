//! Arithmetic over one scalar for parameterized documents: matrix entries
//! may be strings like "(1-2*$alpha)/3" evaluated against a --alpha value.
//! Grammar: literals, $alpha, + - * /, unary minus, parentheses.

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Alpha,
    Plus,
    Minus,
    Star,
    Slash,
    Open,
    Close,
}

fn tokenize(s: &str) -> Result<Vec<Token>, String> {
    let mut out = Vec::new();
    let bytes = s.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                out.push(Token::Plus);
                i += 1;
            }
            '-' => {
                out.push(Token::Minus);
                i += 1;
            }
            '*' => {
                out.push(Token::Star);
                i += 1;
            }
            '/' => {
                out.push(Token::Slash);
                i += 1;
            }
            '(' => {
                out.push(Token::Open);
                i += 1;
            }
            ')' => {
                out.push(Token::Close);
                i += 1;
            }
            '$' => {
                if s[i..].starts_with("$alpha") {
                    out.push(Token::Alpha);
                    i += 6;
                } else {
                    return Err(format!("unknown variable at byte {i} in {s:?}"));
                }
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_digit() || bytes[i] == b'.' || bytes[i] == b'e'
                        || bytes[i] == b'E'
                        || ((bytes[i] == b'+' || bytes[i] == b'-')
                            && i > start
                            && (bytes[i - 1] == b'e' || bytes[i - 1] == b'E')))
                {
                    i += 1;
                }
                let lit = &s[start..i];
                let v: f64 = lit
                    .parse()
                    .map_err(|_| format!("bad numeric literal {lit:?} in {s:?}"))?;
                out.push(Token::Num(v));
            }
            other => return Err(format!("unexpected character {other:?} in {s:?}")),
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    alpha: Option<f64>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<f64, String> {
        let mut acc = self.term()?;
        while let Some(op) = self.peek().cloned() {
            match op {
                Token::Plus => {
                    self.next();
                    acc += self.term()?;
                }
                Token::Minus => {
                    self.next();
                    acc -= self.term()?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<f64, String> {
        let mut acc = self.factor()?;
        while let Some(op) = self.peek().cloned() {
            match op {
                Token::Star => {
                    self.next();
                    acc *= self.factor()?;
                }
                Token::Slash => {
                    self.next();
                    acc /= self.factor()?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<f64, String> {
        match self.next() {
            Some(Token::Num(v)) => Ok(v),
            Some(Token::Alpha) => self.alpha.ok_or_else(|| {
                "expression uses $alpha but no --alpha value was given".to_string()
            }),
            Some(Token::Minus) => Ok(-self.factor()?),
            Some(Token::Open) => {
                let v = self.expr()?;
                match self.next() {
                    Some(Token::Close) => Ok(v),
                    _ => Err("missing closing parenthesis".to_string()),
                }
            }
            other => Err(format!("unexpected token {other:?}")),
        }
    }
}

/// Evaluate an entry expression against an optional alpha value.
pub(crate) fn eval(s: &str, alpha: Option<f64>) -> Result<f64, String> {
    let tokens = tokenize(s)?;
    if tokens.is_empty() {
        return Err("empty expression".to_string());
    }
    let mut p = Parser { tokens: &tokens, pos: 0, alpha };
    let v = p.expr()?;
    if p.pos != tokens.len() {
        return Err(format!("trailing tokens in {s:?}"));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::eval;

    #[test]
    fn arithmetic_and_alpha() {
        assert_eq!(eval("0.5", None).unwrap(), 0.5);
        assert_eq!(eval("1-$alpha", Some(0.3)).unwrap(), 0.7);
        assert!((eval("(2-$alpha)/3", Some(0.35)).unwrap() - 0.55).abs() < 1e-15);
        assert!((eval("(-2+7*$alpha)/3", Some(0.35)).unwrap() - 0.15).abs() < 1e-15);
        assert_eq!(eval(" 1 + 2*3 ", None).unwrap(), 7.0);
        assert_eq!(eval("-0.25", None).unwrap(), -0.25);
        assert_eq!(eval("1e-2", None).unwrap(), 0.01);
    }

    #[test]
    fn errors() {
        assert!(eval("1-$alpha", None).is_err());
        assert!(eval("1+", None).is_err());
        assert!(eval("(1", None).is_err());
        assert!(eval("$beta", None).is_err());
        assert!(eval("1 2", None).is_err());
    }
}
