use super::ast::Pos;
use super::FrontendError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    /// Integer literal that only fits after negation (`-9223372036854775808`).
    IntMinMagnitude,
    Float(f64),
    Str(String),
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

const PUNCTS: [&str; 21] = [
    "<=", ">=", "==", "!=", "&&", "||", "{", "}", "(", ")", ";", ",", "=", "+", "-", "*", "/", "%", "<", ">", "!",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, FrontendError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);

    let advance = |i: &mut usize, line: &mut u32, col: &mut u32, c: char| {
        *i += 1;
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };

    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, c);
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                { let ch = chars[i]; advance(&mut i, &mut line, &mut col, ch) };
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                { let ch = chars[i]; advance(&mut i, &mut line, &mut col, ch) };
            }
            out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), pos });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            let mut is_float = false;
            while i < chars.len() && chars[i].is_ascii_digit() {
                { let ch = chars[i]; advance(&mut i, &mut line, &mut col, ch) };
            }
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                is_float = true;
                advance(&mut i, &mut line, &mut col, '.');
                while i < chars.len() && chars[i].is_ascii_digit() {
                    { let ch = chars[i]; advance(&mut i, &mut line, &mut col, ch) };
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    is_float = true;
                    while i < j {
                        { let ch = chars[i]; advance(&mut i, &mut line, &mut col, ch) };
                    }
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        { let ch = chars[i]; advance(&mut i, &mut line, &mut col, ch) };
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let tok = if is_float {
                let v: f64 = text
                    .parse()
                    .map_err(|_| FrontendError::syntax(pos, format!("bad float literal `{text}`")))?;
                if !v.is_finite() {
                    return Err(FrontendError::syntax(pos, format!("float literal `{text}` out of range")));
                }
                Tok::Float(v)
            } else {
                match text.parse::<i64>() {
                    Ok(v) => Tok::Int(v),
                    Err(_) if text == "9223372036854775808" => Tok::IntMinMagnitude,
                    Err(_) => return Err(FrontendError::syntax(pos, format!("integer literal `{text}` out of range"))),
                }
            };
            out.push(Token { tok, pos });
            continue;
        }
        if c == '"' {
            advance(&mut i, &mut line, &mut col, c);
            let mut s = String::new();
            loop {
                let Some(&ch) = chars.get(i) else {
                    return Err(FrontendError::syntax(pos, "unterminated string literal"));
                };
                advance(&mut i, &mut line, &mut col, ch);
                match ch {
                    '"' => break,
                    '\n' => return Err(FrontendError::syntax(pos, "newline in string literal")),
                    '\\' => {
                        let Some(&esc) = chars.get(i) else {
                            return Err(FrontendError::syntax(pos, "unterminated string literal"));
                        };
                        advance(&mut i, &mut line, &mut col, esc);
                        s.push(match esc {
                            'n' => '\n',
                            't' => '\t',
                            '"' => '"',
                            '\\' => '\\',
                            other => {
                                return Err(FrontendError::syntax(
                                    Pos { line, col: col - 1 },
                                    format!("unknown escape `\\{other}`"),
                                ))
                            }
                        });
                    }
                    other => s.push(other),
                }
            }
            out.push(Token { tok: Tok::Str(s), pos });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        let Some(p) = PUNCTS.iter().find(|p| rest.starts_with(**p)) else {
            return Err(FrontendError::syntax(pos, format!("unexpected character `{c}`")));
        };
        for ch in p.chars() {
            advance(&mut i, &mut line, &mut col, ch);
        }
        out.push(Token { tok: Tok::Punct(p), pos });
    }
    out.push(Token { tok: Tok::Eof, pos: Pos { line, col } });
    Ok(out)
}
