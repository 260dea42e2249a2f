use std::collections::BTreeSet;

use super::ast::{Action, Comparison, ConfidenceSubject, Expr, Policy, Rule, Target, Term};
use super::lexer::{lex, Tok, Token};
use super::PolicyError;
use crate::classifier::ClassLabel;

const KEYWORDS: [&str; 20] = [
    "allow",
    "deny",
    "share",
    "upload",
    "retain",
    "when",
    "priority",
    "default",
    "budget",
    "discard",
    "and",
    "or",
    "not",
    "screen",
    "app",
    "in",
    "tag",
    "present",
    "has",
    "confidence",
];

/// Parses policy text; statements are separated by `;` or newlines and `#`
/// starts a comment.
pub fn parse_policy(text: &str) -> Result<Policy, PolicyError> {
    let mut p = Parser {
        tokens: lex(text)?,
        pos: 0,
        last_subject: ConfidenceSubject::Screen,
    };
    let mut policy = Policy::default();
    let mut priorities = BTreeSet::new();
    loop {
        match &p.peek().tok {
            Tok::Eof => break,
            Tok::Sep => {
                p.pos += 1;
            }
            Tok::Word(w) if w == "default" => {
                p.pos += 1;
                let action = p.action()?;
                let target = p.target()?;
                if policy.defaults.insert(target, action).is_some() {
                    return Err(PolicyError::DuplicateDefault(target));
                }
                p.end_statement()?;
            }
            Tok::Word(w) if w == "budget" => {
                p.pos += 1;
                p.keyword("discard")?;
                p.expect(&Tok::Le, "'<='")?;
                let at = p.peek().clone();
                let value = p.number()?;
                if !(0.0..=1.0).contains(&value) {
                    return Err(syntax(
                        &at,
                        format!("discard budget {value} is not a fraction in [0, 1]"),
                    ));
                }
                if policy.discard_budget.replace(value).is_some() {
                    return Err(syntax(&at, "discard budget declared twice".into()));
                }
                p.end_statement()?;
            }
            _ => {
                let rule = p.rule(policy.rules.len())?;
                if let Some(pr) = rule.priority {
                    if !priorities.insert(pr) {
                        return Err(PolicyError::DuplicatePriority(pr));
                    }
                }
                policy.rules.push(rule);
                p.end_statement()?;
            }
        }
    }
    Ok(policy)
}

fn syntax(at: &Token, message: String) -> PolicyError {
    PolicyError::SyntaxError {
        line: at.line,
        col: at.col,
        message,
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Word(w) => format!("'{w}'"),
        Tok::Number(n) => format!("number {n}"),
        Tok::Sep => "end of statement".into(),
        Tok::Eof => "end of input".into(),
        other => format!("{other:?}"),
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    last_subject: ConfidenceSubject,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(&self.peek().tok, Tok::Word(x) if x == w)
    }

    fn expect(&mut self, tok: &Tok, what: &str) -> Result<Token, PolicyError> {
        let t = self.next();
        if &t.tok == tok {
            Ok(t)
        } else {
            Err(syntax(
                &t,
                format!("expected {what}, found {}", describe(&t.tok)),
            ))
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), PolicyError> {
        let t = self.next();
        match &t.tok {
            Tok::Word(w) if w == kw => Ok(()),
            other => Err(syntax(
                &t,
                format!("expected '{kw}', found {}", describe(other)),
            )),
        }
    }

    fn end_statement(&mut self) -> Result<(), PolicyError> {
        let t = self.peek();
        match t.tok {
            Tok::Sep | Tok::Eof => Ok(()),
            _ => Err(syntax(
                t,
                format!("expected end of statement, found {}", describe(&t.tok)),
            )),
        }
    }

    /// Consumes a non-keyword identifier; a keyword is a syntax error.
    fn ident(&mut self, what: &str) -> Result<(String, Token), PolicyError> {
        let t = self.next();
        match &t.tok {
            Tok::Word(w) if !KEYWORDS.contains(&w.as_str()) => Ok((w.clone(), t.clone())),
            other => Err(syntax(
                &t,
                format!("expected {what}, found {}", describe(other)),
            )),
        }
    }

    fn number(&mut self) -> Result<f64, PolicyError> {
        let t = self.next();
        match t.tok {
            Tok::Number(v) => Ok(v),
            ref other => Err(syntax(
                &t,
                format!("expected a number, found {}", describe(other)),
            )),
        }
    }

    fn action(&mut self) -> Result<Action, PolicyError> {
        let t = self.next();
        match &t.tok {
            Tok::Word(w) if w == "allow" => Ok(Action::Allow),
            Tok::Word(w) if w == "deny" => Ok(Action::Deny),
            other => Err(syntax(
                &t,
                format!("expected 'allow' or 'deny', found {}", describe(other)),
            )),
        }
    }

    fn target(&mut self) -> Result<Target, PolicyError> {
        let t = self.next();
        match &t.tok {
            Tok::Word(w) if w == "share" => Ok(Target::Share),
            Tok::Word(w) if w == "upload" => Ok(Target::Upload),
            Tok::Word(w) if w == "retain" => Ok(Target::Retain),
            Tok::Word(w) if !KEYWORDS.contains(&w.as_str()) => {
                Err(PolicyError::UnknownIdentifier {
                    name: w.clone(),
                    line: t.line,
                    col: t.col,
                })
            }
            other => Err(syntax(
                &t,
                format!(
                    "expected a target (share, upload, retain), found {}",
                    describe(other)
                ),
            )),
        }
    }

    fn rule(&mut self, id: usize) -> Result<Rule, PolicyError> {
        let action = self.action()?;
        let target = self.target()?;
        self.keyword("when")?;
        self.last_subject = ConfidenceSubject::Screen;
        let condition = self.or_expr()?;
        let priority = if self.is_word("priority") {
            self.pos += 1;
            let at = self.peek().clone();
            let v = self.number()?;
            if v.fract() != 0.0 || v.abs() > i64::MAX as f64 / 2.0 {
                return Err(syntax(&at, format!("priority {v} is not an integer")));
            }
            Some(v as i64)
        } else {
            None
        };
        Ok(Rule {
            id,
            action,
            target,
            condition,
            priority,
        })
    }

    fn or_expr(&mut self) -> Result<Expr, PolicyError> {
        let mut lhs = self.and_expr()?;
        while self.is_word("or") {
            self.pos += 1;
            lhs = Expr::Or(Box::new(lhs), Box::new(self.and_expr()?));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, PolicyError> {
        let mut lhs = self.unary()?;
        while self.is_word("and") {
            self.pos += 1;
            lhs = Expr::And(Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, PolicyError> {
        if self.is_word("not") {
            self.pos += 1;
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        if self.peek().tok == Tok::LParen {
            self.pos += 1;
            let e = self.or_expr()?;
            self.expect(&Tok::RParen, "')'")?;
            return Ok(e);
        }
        self.term().map(Expr::Term)
    }

    fn app_label(&mut self) -> Result<ClassLabel, PolicyError> {
        let (name, at) = self.ident("an application class")?;
        ClassLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == name)
            .ok_or(PolicyError::UnknownIdentifier {
                name,
                line: at.line,
                col: at.col,
            })
    }

    fn term(&mut self) -> Result<Term, PolicyError> {
        let t = self.next();
        let word = match &t.tok {
            Tok::Word(w) => w.clone(),
            other => {
                return Err(syntax(
                    &t,
                    format!("expected a condition, found {}", describe(other)),
                ))
            }
        };
        match word.as_str() {
            "screen" => {
                self.last_subject = ConfidenceSubject::Screen;
                Ok(Term::Screen)
            }
            "app" => {
                self.last_subject = ConfidenceSubject::App;
                if self.peek().tok == Tok::Eq {
                    self.pos += 1;
                    return Ok(Term::AppIs(self.app_label()?));
                }
                self.keyword("in").map_err(|_| {
                    let at = self.tokens[self.pos.saturating_sub(1)].clone();
                    syntax(
                        &at,
                        format!(
                            "expected '==' or 'in' after 'app', found {}",
                            describe(&at.tok)
                        ),
                    )
                })?;
                self.expect(&Tok::LBrace, "'{'")?;
                let mut set = vec![self.app_label()?];
                while self.peek().tok == Tok::Comma {
                    self.pos += 1;
                    set.push(self.app_label()?);
                }
                self.expect(&Tok::RBrace, "'}'")?;
                Ok(Term::AppIn(set))
            }
            "tag" => {
                if self.is_word("present") {
                    self.pos += 1;
                    return Ok(Term::TagPresent);
                }
                if self.is_word("has") {
                    self.pos += 1;
                    let (name, _) = self.ident("an application identifier")?;
                    return Ok(Term::TagHas(name));
                }
                let at = self.peek();
                Err(syntax(
                    at,
                    format!(
                        "expected 'present' or 'has' after 'tag', found {}",
                        describe(&at.tok)
                    ),
                ))
            }
            "confidence" => {
                let op = self.next();
                let comparison = match op.tok {
                    Tok::Ge => Comparison::AtLeast,
                    Tok::Lt => Comparison::Below,
                    ref other => {
                        return Err(syntax(
                            &op,
                            format!("expected '>=' or '<', found {}", describe(other)),
                        ))
                    }
                };
                let value = self.number()?;
                Ok(Term::Confidence {
                    subject: self.last_subject,
                    comparison,
                    value,
                })
            }
            w if KEYWORDS.contains(&w) => {
                Err(syntax(&t, format!("expected a condition, found '{w}'")))
            }
            _ => Err(PolicyError::UnknownIdentifier {
                name: word,
                line: t.line,
                col: t.col,
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn and(a: Expr, b: Expr) -> Expr {
        Expr::And(Box::new(a), Box::new(b))
    }

    fn or(a: Expr, b: Expr) -> Expr {
        Expr::Or(Box::new(a), Box::new(b))
    }

    fn term(t: Term) -> Expr {
        Expr::Term(t)
    }

    #[test]
    fn upload_restriction_is_one_and_rule() {
        let p = parse_policy("deny upload when screen and app in {gmail, messenger}").unwrap();
        assert_eq!(p.rules.len(), 1);
        let r = &p.rules[0];
        assert_eq!(
            (r.action, r.target, r.priority),
            (Action::Deny, Target::Upload, None)
        );
        assert_eq!(
            r.condition,
            and(
                term(Term::Screen),
                term(Term::AppIn(vec![ClassLabel::Gmail, ClassLabel::Messenger]))
            )
        );
    }

    #[test]
    fn whitelist_parses() {
        let p = parse_policy("allow share when tag has minecraft\ndefault deny share").unwrap();
        assert_eq!(p.rules[0].condition, term(Term::TagHas("minecraft".into())));
        assert_eq!(p.default_for(Target::Share), Action::Deny);
        assert_eq!(p.default_for(Target::Upload), Action::Allow);
    }

    #[test]
    fn missing_target_is_a_syntax_error() {
        assert_eq!(
            parse_policy("deny when screen"),
            Err(PolicyError::SyntaxError {
                line: 1,
                col: 6,
                message: "expected a target (share, upload, retain), found 'when'".into()
            })
        );
    }

    #[test]
    fn precedence_and_associativity() {
        let p =
            parse_policy("deny share when not screen or tag present and app == gmail or screen")
                .unwrap();
        let want = or(
            or(
                Expr::Not(Box::new(term(Term::Screen))),
                and(term(Term::TagPresent), term(Term::AppIs(ClassLabel::Gmail))),
            ),
            term(Term::Screen),
        );
        assert_eq!(p.rules[0].condition, want);
    }

    #[test]
    fn confidence_binds_to_latest_subject() {
        let p = parse_policy(
            "deny share when confidence >= 0.9\n\
             deny upload when app == gmail and confidence >= 0.5\n\
             deny retain when app == gmail and screen and confidence < 0.2",
        )
        .unwrap();
        let subject = |i: usize| {
            let mut found = None;
            fn walk(e: &Expr, found: &mut Option<ConfidenceSubject>) {
                match e {
                    Expr::Term(Term::Confidence { subject, .. }) => *found = Some(*subject),
                    Expr::Term(_) => {}
                    Expr::Not(a) => walk(a, found),
                    Expr::And(a, b) | Expr::Or(a, b) => {
                        walk(a, found);
                        walk(b, found);
                    }
                }
            }
            walk(&p.rules[i].condition, &mut found);
            found.unwrap()
        };
        assert_eq!(subject(0), ConfidenceSubject::Screen);
        assert_eq!(subject(1), ConfidenceSubject::App);
        assert_eq!(subject(2), ConfidenceSubject::Screen);
    }

    #[test]
    fn error_kinds() {
        assert_eq!(
            parse_policy("default deny share; default allow share"),
            Err(PolicyError::DuplicateDefault(Target::Share))
        );
        assert!(matches!(
            parse_policy("deny share when monitor"),
            Err(PolicyError::UnknownIdentifier { ref name, line: 1, col: 17 }) if name == "monitor"
        ));
        assert!(matches!(
            parse_policy("deny share when app == slack"),
            Err(PolicyError::UnknownIdentifier { ref name, .. }) if name == "slack"
        ));
        assert!(matches!(
            parse_policy("deny print when screen"),
            Err(PolicyError::UnknownIdentifier { ref name, .. }) if name == "print"
        ));
        assert_eq!(
            parse_policy(
                "deny share when screen priority 2\nallow share when tag present priority 2"
            ),
            Err(PolicyError::DuplicatePriority(2))
        );
        assert!(matches!(
            parse_policy("budget discard <= 1.5"),
            Err(PolicyError::SyntaxError { .. })
        ));
        assert!(matches!(
            parse_policy("deny share when (screen"),
            Err(PolicyError::SyntaxError { .. })
        ));
        assert!(matches!(
            parse_policy("deny share when screen screen"),
            Err(PolicyError::SyntaxError { .. })
        ));
        assert!(matches!(
            parse_policy("deny share when screen priority 1.5"),
            Err(PolicyError::SyntaxError { .. })
        ));
    }

    #[test]
    fn multiline_sets_comments_and_budget() {
        let p = parse_policy(
            "# propriety\n\
             deny share when app in {gmail,\n    facebook}  # sensitive\n\
             budget discard <= 0.2; default allow share\n",
        )
        .unwrap();
        assert_eq!(p.rules.len(), 1);
        assert_eq!(p.discard_budget, Some(0.2));
    }

    #[test]
    fn empty_policy() {
        assert_eq!(parse_policy("\n# nothing\n;;").unwrap(), Policy::default());
    }
}
