//! Text form of traversal grammars.
//!
//! ```text
//! # representative democracy
//! grammar rd {
//!   start Human;
//!   terminal Solution;
//!   state Human : Human {
//!     try votedOn -> Solution;
//!     try uses -> Domain;
//!     else die;
//!   }
//!   state Domain : Domain {
//!     try trusts where target_voted -> Human;
//!     try similarTo -> Domain;
//!     else die;
//!   }
//! }
//! ```
//!
//! Guards: `target_voted`, `current_in(<set>)`, `target_in(<set>)`. The
//! `grammar <name> { }` wrapper is optional (the name defaults to `custom`),
//! `start` defaults to the first state, `: <Sort>` may be left out when the
//! state id is a sort name, and `else die;` may be left out.

use std::fmt::Write as _;

use crate::graph::{Schema, SchemaMode, Sort};

use super::{EdgeGuard, GrammarError, GrammarErrorKind, GrammarState, Reference, Rule, TraversalGrammar};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Punct(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    pos: (usize, usize),
}

fn syntax(pos: (usize, usize), message: impl Into<String>) -> GrammarError {
    GrammarError::at(GrammarErrorKind::SyntaxError, pos, message.into())
}

fn lex(text: &str) -> Result<Vec<Token>, GrammarError> {
    let mut out = Vec::new();
    for (li, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        let chars: Vec<(usize, char)> = line.char_indices().collect();
        let mut i = 0;
        while i < chars.len() {
            let (_, c) = chars[i];
            let pos = (li + 1, i + 1);
            if c.is_whitespace() {
                i += 1;
            } else if c.is_ascii_alphabetic() || c == '_' {
                let mut j = i;
                while j < chars.len() && (chars[j].1.is_ascii_alphanumeric() || chars[j].1 == '_') {
                    j += 1;
                }
                let word: String = chars[i..j].iter().map(|&(_, c)| c).collect();
                out.push(Token {
                    tok: Tok::Ident(word),
                    pos,
                });
                i = j;
            } else if c == '-' && chars.get(i + 1).map(|p| p.1) == Some('>') {
                out.push(Token {
                    tok: Tok::Punct("->"),
                    pos,
                });
                i += 2;
            } else {
                let p = match c {
                    '{' => "{",
                    '}' => "}",
                    ';' => ";",
                    ':' => ":",
                    ',' => ",",
                    '(' => "(",
                    ')' => ")",
                    _ => return Err(syntax(pos, format!("unexpected character {c:?}"))),
                };
                out.push(Token {
                    tok: Tok::Punct(p),
                    pos,
                });
                i += 1;
            }
        }
    }
    let lines = text.lines().count().max(1);
    let pos = if text.ends_with('\n') {
        (lines + 1, 1)
    } else {
        (lines, text.lines().last().map_or(0, |l| l.chars().count()) + 1)
    };
    out.push(Token { tok: Tok::Eof, pos });
    Ok(out)
}

const KEYWORDS: [&str; 8] = ["grammar", "start", "terminal", "state", "try", "where", "else", "die"];

struct Parser<'s> {
    tokens: Vec<Token>,
    at: usize,
    schema: &'s Schema,
}

#[derive(Default)]
struct Positions {
    start: (usize, usize),
    states: Vec<(usize, usize)>,
    nexts: Vec<Vec<(usize, usize)>>,
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.tokens[self.at]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.at].clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(&self.peek().tok, Tok::Punct(q) if *q == p)
    }

    fn is_keyword(&self, k: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(w) if w == k)
    }

    fn describe(tok: &Tok) -> String {
        match tok {
            Tok::Ident(w) => format!("{w:?}"),
            Tok::Punct(p) => format!("{p:?}"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn expect_punct(&mut self, p: &'static str) -> Result<(), GrammarError> {
        if self.is_punct(p) {
            self.bump();
            Ok(())
        } else {
            let t = self.peek();
            Err(syntax(t.pos, format!("expected {p:?}, found {}", Self::describe(&t.tok))))
        }
    }

    fn expect_keyword(&mut self, k: &str) -> Result<(), GrammarError> {
        if self.is_keyword(k) {
            self.bump();
            Ok(())
        } else {
            let t = self.peek();
            Err(syntax(t.pos, format!("expected {k:?}, found {}", Self::describe(&t.tok))))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, (usize, usize)), GrammarError> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Ident(w) if !KEYWORDS.contains(&w.as_str()) => {
                self.bump();
                Ok((w, t.pos))
            }
            other => Err(syntax(
                t.pos,
                format!("expected {what}, found {}", Self::describe(&other)),
            )),
        }
    }

    fn sort(&mut self) -> Result<Sort, GrammarError> {
        let (word, pos) = self.ident("a node sort")?;
        word.parse().map_err(|_| {
            GrammarError::at(
                GrammarErrorKind::UnknownSort,
                pos,
                format!("{word} is not one of Human, Domain, Problem, Solution"),
            )
        })
    }

    fn grammar(&mut self) -> Result<(TraversalGrammar, Positions), GrammarError> {
        let mut name = "custom".to_owned();
        let wrapped = self.is_keyword("grammar");
        if wrapped {
            self.bump();
            name = self.ident("a grammar name")?.0;
            self.expect_punct("{")?;
        }
        let mut start: Option<String> = None;
        let mut terminal = Vec::new();
        let mut states = Vec::new();
        let mut pos = Positions::default();
        loop {
            if wrapped && self.is_punct("}") {
                self.bump();
                break;
            }
            if !wrapped && self.peek().tok == Tok::Eof {
                break;
            }
            let t = self.peek().clone();
            match &t.tok {
                Tok::Ident(k) if k == "start" => {
                    self.bump();
                    let (s, p) = self.ident("a state id")?;
                    if start.is_some() {
                        return Err(syntax(t.pos, "start declared twice"));
                    }
                    start = Some(s);
                    pos.start = p;
                    self.expect_punct(";")?;
                }
                Tok::Ident(k) if k == "terminal" => {
                    self.bump();
                    loop {
                        let s = self.sort()?;
                        if !terminal.contains(&s) {
                            terminal.push(s);
                        }
                        if self.is_punct(",") {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    self.expect_punct(";")?;
                }
                Tok::Ident(k) if k == "state" => {
                    self.bump();
                    let (st, nexts) = self.state()?;
                    if states.is_empty() && start.is_none() {
                        pos.start = t.pos;
                    }
                    pos.states.push(t.pos);
                    pos.nexts.push(nexts);
                    states.push(st);
                }
                other => {
                    return Err(syntax(
                        t.pos,
                        format!("expected start, terminal or state, found {}", Self::describe(other)),
                    ))
                }
            }
        }
        if self.peek().tok != Tok::Eof {
            let t = self.peek();
            return Err(syntax(t.pos, format!("unexpected {} after grammar", Self::describe(&t.tok))));
        }
        let start = match start.or_else(|| states.first().map(|s: &GrammarState| s.id.clone())) {
            Some(s) => s,
            None => return Err(syntax(self.peek().pos, "grammar declares no states")),
        };
        let g = TraversalGrammar {
            name,
            start,
            terminal,
            states,
        };
        Ok((g, pos))
    }

    fn state(&mut self) -> Result<(GrammarState, Vec<(usize, usize)>), GrammarError> {
        let (id, id_pos) = self.ident("a state id")?;
        let sort = if self.is_punct(":") {
            self.bump();
            self.sort()?
        } else {
            id.parse().map_err(|_| {
                syntax(id_pos, format!("state {id} needs a sort (`state {id} : <Sort>`)"))
            })?
        };
        self.expect_punct("{")?;
        let mut rules = Vec::new();
        let mut nexts = Vec::new();
        loop {
            if self.is_keyword("try") {
                self.bump();
                let (rule, next_pos) = self.rule()?;
                rules.push(rule);
                nexts.push(next_pos);
            } else if self.is_keyword("else") {
                self.bump();
                self.expect_keyword("die")?;
                self.expect_punct(";")?;
                self.expect_punct("}")?;
                break;
            } else if self.is_punct("}") {
                self.bump();
                break;
            } else {
                let t = self.peek();
                return Err(syntax(
                    t.pos,
                    format!("expected try, else or '}}', found {}", Self::describe(&t.tok)),
                ));
            }
        }
        Ok((GrammarState { id, sort, rules }, nexts))
    }

    fn rule(&mut self) -> Result<(Rule, (usize, usize)), GrammarError> {
        let (label, label_pos) = self.ident("an edge label")?;
        if !self.schema.knows(&label) {
            return Err(GrammarError::at(
                GrammarErrorKind::UnknownLabel,
                label_pos,
                format!("label {label} is not in the schema"),
            ));
        }
        let guard = if self.is_keyword("where") {
            self.bump();
            self.guard()?
        } else {
            EdgeGuard::None
        };
        self.expect_punct("->")?;
        let (next, next_pos) = self.ident("a state id or terminal sort")?;
        self.expect_punct(";")?;
        Ok((Rule { label, guard, next }, next_pos))
    }

    fn guard(&mut self) -> Result<EdgeGuard, GrammarError> {
        let (word, pos) = self.ident("a guard")?;
        match word.as_str() {
            "target_voted" => Ok(EdgeGuard::TargetHasVotedOn),
            "current_in" | "target_in" => {
                self.expect_punct("(")?;
                let (set, _) = self.ident("a node set name")?;
                self.expect_punct(")")?;
                Ok(if word == "current_in" {
                    EdgeGuard::CurrentInSet(set)
                } else {
                    EdgeGuard::TargetInSet(set)
                })
            }
            _ => Err(GrammarError::at(
                GrammarErrorKind::UnknownGuard,
                pos,
                format!("unknown guard {word}; expected target_voted, current_in(..) or target_in(..)"),
            )),
        }
    }
}

/// Parses grammar text, checking labels against the core schema.
pub fn parse_grammar(text: &str) -> Result<TraversalGrammar, GrammarError> {
    parse_grammar_with_schema(text, &Schema::new(SchemaMode::MultipleDomains))
}

pub fn parse_grammar_with_schema(text: &str, schema: &Schema) -> Result<TraversalGrammar, GrammarError> {
    let tokens = lex(text)?;
    let mut parser = Parser {
        tokens,
        at: 0,
        schema,
    };
    let (grammar, pos) = parser.grammar()?;
    grammar.check(|r| match r {
        Reference::Start => pos.start,
        Reference::State(s) => pos.states[s],
        Reference::Next(s, r) => pos.nexts[s][r],
    })?;
    Ok(grammar)
}

fn guard_text(guard: &EdgeGuard) -> Option<String> {
    match guard {
        EdgeGuard::None => None,
        EdgeGuard::TargetHasVotedOn => Some("target_voted".into()),
        EdgeGuard::CurrentInSet(s) => Some(format!("current_in({s})")),
        EdgeGuard::TargetInSet(s) => Some(format!("target_in({s})")),
    }
}

/// Canonical text: declaration order, two-space indent, LF endings.
pub fn serialize_grammar(g: &TraversalGrammar) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "grammar {} {{", g.name);
    let _ = writeln!(out, "  start {};", g.start);
    if !g.terminal.is_empty() {
        let sorts: Vec<&str> = g.terminal.iter().map(|s| s.name()).collect();
        let _ = writeln!(out, "  terminal {};", sorts.join(", "));
    }
    for st in &g.states {
        let _ = writeln!(out, "  state {} : {} {{", st.id, st.sort);
        for rule in &st.rules {
            match guard_text(&rule.guard) {
                Some(guard) => {
                    let _ = writeln!(out, "    try {} where {} -> {};", rule.label, guard, rule.next);
                }
                None => {
                    let _ = writeln!(out, "    try {} -> {};", rule.label, rule.next);
                }
            }
        }
        out.push_str("    else die;\n  }\n");
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{builtin, BUILTIN_NAMES};

    const DD: &str = "\
# direct democracy
grammar dd {
  start Human;
  terminal Solution;
  state Human : Human {
    try votedOn -> Solution;
    else die;
  }
}
";

    #[test]
    fn dd_text_matches_builtin() {
        assert_eq!(parse_grammar(DD).unwrap(), builtin("dd").unwrap());
    }

    #[test]
    fn canonical_dd() {
        let text = serialize_grammar(&builtin("dd").unwrap());
        assert_eq!(text, DD.trim_start_matches("# direct democracy\n"));
    }

    #[test]
    fn builtins_round_trip() {
        for name in BUILTIN_NAMES {
            let g = builtin(name).unwrap();
            let text = serialize_grammar(&g);
            assert_eq!(parse_grammar(&text).unwrap(), g, "{name}");
            assert_eq!(serialize_grammar(&g), text);
        }
    }

    #[test]
    fn lenient_forms() {
        let g = parse_grammar("state Human { try votedOn -> Solution; }\nterminal Solution;").unwrap();
        assert_eq!(g.name(), "custom");
        assert_eq!(g.start(), "Human");
        assert_eq!(g.states()[0].sort, Sort::Human);
    }

    #[test]
    fn unknown_label() {
        let err = parse_grammar("state Human { try fly -> Solution; }").unwrap_err();
        assert_eq!(err.kind, GrammarErrorKind::UnknownLabel);
        assert_eq!((err.line, err.column), (1, 19));
    }

    #[test]
    fn dangling_state_is_located() {
        let text = "grammar g {\n  terminal Solution;\n  state Human : Human {\n    try trusts -> Ghost;\n  }\n}\n";
        let err = parse_grammar(text).unwrap_err();
        assert_eq!(err.kind, GrammarErrorKind::DanglingState);
        assert_eq!((err.line, err.column), (4, 19));
    }

    #[test]
    fn unknown_guard_and_sort() {
        let err = parse_grammar("state Human { try trusts where friendly -> Human; }").unwrap_err();
        assert_eq!(err.kind, GrammarErrorKind::UnknownGuard);
        let err = parse_grammar("state H : Robot { }").unwrap_err();
        assert_eq!(err.kind, GrammarErrorKind::UnknownSort);
    }

    #[test]
    fn syntax_errors_are_located() {
        for (text, line, column) in [
            ("grammar g {", 1, 12),
            ("state Human { try votedOn Solution; }", 1, 27),
            ("state Human { try votedOn -> Solution }", 1, 39),
            ("grammar g { start Human; } extra", 1, 28),
            ("state Human { try votedOn -> Solution; }\n  @", 2, 3),
            ("", 1, 1),
        ] {
            let err = parse_grammar(text).unwrap_err();
            assert_eq!(err.kind, GrammarErrorKind::SyntaxError, "{text:?}: {err}");
            assert_eq!((err.line, err.column), (line, column), "{text:?}: {err}");
        }
    }

    #[test]
    fn extension_labels_need_the_schema() {
        let text = "state Human { try pro -> Solution; }\nterminal Solution;";
        assert!(parse_grammar(text).is_err());
        let mut schema = Schema::new(SchemaMode::MultipleDomains);
        schema.register("pro", Sort::Human, Sort::Solution);
        assert!(parse_grammar_with_schema(text, &schema).is_ok());
    }
}
