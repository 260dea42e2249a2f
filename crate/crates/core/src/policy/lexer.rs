use super::PolicyError;

#[derive(Clone, Debug, PartialEq)]
pub(super) enum Tok {
    Word(String),
    Number(f64),
    Eq,
    Ge,
    Le,
    Lt,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    /// `;` or a newline outside brackets.
    Sep,
    Eof,
}

#[derive(Clone, Debug)]
pub(super) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.')
}

pub(super) fn lex(text: &str) -> Result<Vec<Token>, PolicyError> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    for (line_no, line) in text.lines().enumerate() {
        let line_no = line_no + 1;
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            let push = |out: &mut Vec<Token>, tok| {
                out.push(Token {
                    tok,
                    line: line_no,
                    col,
                })
            };
            match c {
                '#' => break,
                c if c.is_whitespace() => {}
                ';' => push(&mut out, Tok::Sep),
                ',' => push(&mut out, Tok::Comma),
                '{' | '(' => {
                    depth += 1;
                    push(&mut out, if c == '{' { Tok::LBrace } else { Tok::LParen });
                }
                '}' | ')' => {
                    depth = depth.saturating_sub(1);
                    push(&mut out, if c == '}' { Tok::RBrace } else { Tok::RParen });
                }
                '=' | '>' | '<' => {
                    let next_eq = chars.get(i + 1) == Some(&'=');
                    let tok = match (c, next_eq) {
                        ('=', true) => Tok::Eq,
                        ('>', true) => Tok::Ge,
                        ('<', true) => Tok::Le,
                        ('<', false) => Tok::Lt,
                        _ => {
                            return Err(PolicyError::SyntaxError {
                                line: line_no,
                                col,
                                message: format!("unexpected '{c}'"),
                            })
                        }
                    };
                    if next_eq {
                        i += 1;
                    }
                    push(&mut out, tok);
                }
                c if is_word_char(c) => {
                    let start = i;
                    while i + 1 < chars.len() && is_word_char(chars[i + 1]) {
                        i += 1;
                    }
                    let word: String = chars[start..=i].iter().collect();
                    let starts_numeric =
                        word.starts_with(|c: char| c.is_ascii_digit() || c == '-' || c == '.');
                    let tok = match word.parse::<f64>() {
                        Ok(v) if starts_numeric && v.is_finite() => Tok::Number(v),
                        _ => Tok::Word(word),
                    };
                    push(&mut out, tok);
                }
                _ => {
                    return Err(PolicyError::SyntaxError {
                        line: line_no,
                        col,
                        message: format!("unexpected character '{c}'"),
                    })
                }
            }
            i += 1;
        }
        if depth == 0 {
            out.push(Token {
                tok: Tok::Sep,
                line: line_no,
                col: chars.len() + 1,
            });
        }
    }
    let line = text.lines().count().max(1);
    out.push(Token {
        tok: Tok::Eof,
        line,
        col: text.lines().last().map_or(1, |l| l.chars().count() + 1),
    });
    Ok(out)
}
