//! Terms, atoms, rules, directives, queries and shell commands, together with
//! their parsers and printers.
//!
//! Terms are function-free: symbolic constants, integers and variables. Rule
//! heads are a single atom, a singleton choice `{a}`, or falsity (an integrity
//! constraint). Comparisons `= != < <= > >=` may appear in rule bodies only.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// Prefix reserved for atoms generated by the engine (query targets, query
/// guards). User identifiers may never start with it.
pub const RESERVED_PREFIX: &str = "__";

/***** AST *****/

/// A function-free term.
///
/// The derived order puts integers (numerically) before symbolic constants
/// (lexicographically), which is also the order used by comparisons.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Int(i64),
    Sym(String),
    Var(String),
}

impl Term {
    pub fn is_ground(&self) -> bool {
        !matches!(self, Term::Var(_))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Int(n) => write!(f, "{n}"),
            Term::Sym(s) | Term::Var(s) => f.write_str(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: impl Into<String>, args: Vec<Term>) -> Self {
        Atom { predicate: predicate.into(), args }
    }

    /// A nullary atom.
    pub fn prop(predicate: impl Into<String>) -> Self {
        Atom::new(predicate, Vec::new())
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    /// True for engine-generated atoms.
    pub fn is_reserved(&self) -> bool {
        self.predicate.starts_with(RESERVED_PREFIX)
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(|t| match t {
            Term::Var(v) => Some(v.as_str()),
            _ => None,
        })
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.predicate)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (k, arg) in self.args.iter().enumerate() {
                if k > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{arg}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// An atom or its default negation.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub positive: bool,
    pub atom: Atom,
}

impl Literal {
    pub fn pos(atom: Atom) -> Self {
        Literal { positive: true, atom }
    }

    pub fn neg(atom: Atom) -> Self {
        Literal { positive: false, atom }
    }

    pub fn complement(&self) -> Self {
        Literal { positive: !self.positive, atom: self.atom.clone() }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.positive {
            f.write_str("not ")?;
        }
        write!(f, "{}", self.atom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn as_str(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

/// A built-in comparison between two terms.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Comparison {
    pub left: Term,
    pub op: CmpOp,
    pub right: Term,
}

impl Comparison {
    /// Evaluates the comparison, or `None` while either side is a variable.
    pub fn eval(&self) -> Option<bool> {
        if !self.left.is_ground() || !self.right.is_ground() {
            return None;
        }
        let ord = self.left.cmp(&self.right);
        Some(match self.op {
            CmpOp::Eq => ord.is_eq(),
            CmpOp::Ne => ord.is_ne(),
            CmpOp::Lt => ord.is_lt(),
            CmpOp::Le => ord.is_le(),
            CmpOp::Gt => ord.is_gt(),
            CmpOp::Ge => ord.is_ge(),
        })
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.left, self.op.as_str(), self.right)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BodyElem {
    Literal(Literal),
    Comparison(Comparison),
}

impl BodyElem {
    pub fn variables(&self) -> Vec<&str> {
        match self {
            BodyElem::Literal(l) => l.atom.variables().collect(),
            BodyElem::Comparison(c) => [&c.left, &c.right]
                .into_iter()
                .filter_map(|t| match t {
                    Term::Var(v) => Some(v.as_str()),
                    _ => None,
                })
                .collect(),
        }
    }
}

impl fmt::Display for BodyElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BodyElem::Literal(l) => write!(f, "{l}"),
            BodyElem::Comparison(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Head {
    Atom(Atom),
    Choice(Atom),
    Falsity,
}

impl Head {
    pub fn atom(&self) -> Option<&Atom> {
        match self {
            Head::Atom(a) | Head::Choice(a) => Some(a),
            Head::Falsity => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rule {
    pub head: Head,
    pub body: Vec<BodyElem>,
}

impl Rule {
    pub fn new(head: Head, body: Vec<BodyElem>) -> Self {
        Rule { head, body }
    }

    /// Positive body atoms, comparisons excluded.
    pub fn positive_body(&self) -> impl Iterator<Item = &Atom> {
        self.body.iter().filter_map(|b| match b {
            BodyElem::Literal(l) if l.positive => Some(&l.atom),
            _ => None,
        })
    }

    pub fn negative_body(&self) -> impl Iterator<Item = &Atom> {
        self.body.iter().filter_map(|b| match b {
            BodyElem::Literal(l) if !l.positive => Some(&l.atom),
            _ => None,
        })
    }

    pub fn is_ground(&self) -> bool {
        self.variables().is_empty()
    }

    /// All variables of the rule, sorted.
    pub fn variables(&self) -> BTreeSet<&str> {
        let mut vars: BTreeSet<&str> = self.head.atom().into_iter().flat_map(Atom::variables).collect();
        for b in &self.body {
            vars.extend(b.variables());
        }
        vars
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.head {
            Head::Atom(a) => write!(f, "{a}")?,
            Head::Choice(a) => write!(f, "{{{a}}}")?,
            Head::Falsity => {}
        }
        if !self.body.is_empty() || self.head == Head::Falsity {
            f.write_str(if self.head == Head::Falsity { ":- " } else { " :- " })?;
            for (k, b) in self.body.iter().enumerate() {
                if k > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{b}")?;
            }
        }
        f.write_str(".")
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Program {
    pub rules: Vec<Rule>,
}

impl Program {
    pub fn new(rules: Vec<Rule>) -> Self {
        Program { rules }
    }

    /// Head atoms; falsity is never among them.
    pub fn heads(&self) -> BTreeSet<&Atom> {
        self.rules.iter().filter_map(|r| r.head.atom()).collect()
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Directive {
    /// `#external a : body.`
    External { atom: Atom, condition: Vec<BodyElem> },
    /// `#show p/n.`
    Show { predicate: String, arity: usize },
}

impl fmt::Display for Directive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Directive::External { atom, condition } => {
                write!(f, "#external {atom}")?;
                for (k, b) in condition.iter().enumerate() {
                    f.write_str(if k == 0 { " : " } else { ", " })?;
                    write!(f, "{b}")?;
                }
                f.write_str(".")
            }
            Directive::Show { predicate, arity } => write!(f, "#show {predicate}/{arity}."),
        }
    }
}

/// A query in negation normal form: negation only ever sits on an atom.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum QueryExpr {
    Atom(Atom),
    Not(Atom),
    And(Vec<QueryExpr>),
    Or(Vec<QueryExpr>),
}

impl QueryExpr {
    pub fn is_ground(&self) -> bool {
        match self {
            QueryExpr::Atom(a) | QueryExpr::Not(a) => a.is_ground(),
            QueryExpr::And(cs) | QueryExpr::Or(cs) => cs.iter().all(QueryExpr::is_ground),
        }
    }

    pub fn atoms(&self) -> Vec<&Atom> {
        match self {
            QueryExpr::Atom(a) | QueryExpr::Not(a) => vec![a],
            QueryExpr::And(cs) | QueryExpr::Or(cs) => cs.iter().flat_map(QueryExpr::atoms).collect(),
        }
    }

    /// The literals of a pure conjunction (a lone literal counts), or `None`
    /// when the expression contains a disjunction.
    pub fn as_conjunction(&self) -> Option<Vec<Literal>> {
        match self {
            QueryExpr::Atom(a) => Some(vec![Literal::pos(a.clone())]),
            QueryExpr::Not(a) => Some(vec![Literal::neg(a.clone())]),
            QueryExpr::And(cs) => {
                let mut out = Vec::new();
                for c in cs {
                    out.extend(c.as_conjunction()?);
                }
                Some(out)
            }
            QueryExpr::Or(_) => None,
        }
    }
}

impl fmt::Display for QueryExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn join(f: &mut fmt::Formatter<'_>, cs: &[QueryExpr], sep: &str, nested: bool) -> fmt::Result {
            for (k, c) in cs.iter().enumerate() {
                if k > 0 {
                    f.write_str(sep)?;
                }
                let bracket = nested && matches!(c, QueryExpr::And(_) | QueryExpr::Or(_));
                if bracket {
                    write!(f, "[{c}]")?;
                } else {
                    write!(f, "{c}")?;
                }
            }
            Ok(())
        }
        match self {
            QueryExpr::Atom(a) => write!(f, "{a}"),
            QueryExpr::Not(a) => write!(f, "not {a}"),
            QueryExpr::And(cs) => join(f, cs, " & ", true),
            QueryExpr::Or(cs) => join(f, cs, " | ", true),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Command {
    Load(String),
    Define { program: Program, directives: Vec<Directive> },
    External { atom: Atom, condition: Vec<BodyElem> },
    Assert(Atom),
    Open(Atom),
    Retract(Atom),
    Release(Atom),
    Assume(Literal),
    Cancel(Literal),
    Query(QueryExpr),
    Option(Vec<String>),
    State,
    Help,
    Exit,
}

/***** ERRORS *****/

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("{0}")]
    Syntax(String),
    #[error("identifier '{0}' uses the reserved prefix '__'")]
    ReservedPrefix(String),
    #[error("choice heads must contain exactly one atom")]
    ChoiceHead,
    #[error("unknown command '{0}' (try 'help')")]
    UnknownCommand(String),
    #[error("{0}")]
    Argument(String),
    #[error("non-ground queries must be conjunctions of literals")]
    NonGroundQuery,
    #[error("negation may only be applied to atoms")]
    NegatedSubexpression,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{line}:{column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

impl ParseError {
    fn new(line: usize, column: usize, kind: ParseErrorKind) -> Self {
        ParseError { line, column, kind }
    }

    fn argument(msg: impl Into<String>) -> Self {
        ParseError::new(1, 1, ParseErrorKind::Argument(msg.into()))
    }
}

pub type ParseResult<T> = Result<T, ParseError>;

/***** LEXER *****/

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Var(String),
    Int(i64),
    Directive(String),
    Not,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Semicolon,
    Dot,
    If,
    Colon,
    Slash,
    Amp,
    Pipe,
    Cmp(CmpOp),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Var(s) => write!(f, "'{s}'"),
            Tok::Int(n) => write!(f, "'{n}'"),
            Tok::Directive(d) => write!(f, "'#{d}'"),
            Tok::Not => f.write_str("'not'"),
            Tok::LParen => f.write_str("'('"),
            Tok::RParen => f.write_str("')'"),
            Tok::LBrace => f.write_str("'{'"),
            Tok::RBrace => f.write_str("'}'"),
            Tok::LBracket => f.write_str("'['"),
            Tok::RBracket => f.write_str("']'"),
            Tok::Comma => f.write_str("','"),
            Tok::Semicolon => f.write_str("';'"),
            Tok::Dot => f.write_str("'.'"),
            Tok::If => f.write_str("':-'"),
            Tok::Colon => f.write_str("':'"),
            Tok::Slash => f.write_str("'/'"),
            Tok::Amp => f.write_str("'&'"),
            Tok::Pipe => f.write_str("'|'"),
            Tok::Cmp(op) => write!(f, "'{}'", op.as_str()),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> ParseResult<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let mut push = |tok: Tok, len: usize, i: &mut usize, col: &mut usize| {
            out.push(Token { tok, line: tl, col: tc });
            *i += len;
            *col += len;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
            }
            '%' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '(' => push(Tok::LParen, 1, &mut i, &mut col),
            ')' => push(Tok::RParen, 1, &mut i, &mut col),
            '{' => push(Tok::LBrace, 1, &mut i, &mut col),
            '}' => push(Tok::RBrace, 1, &mut i, &mut col),
            '[' => push(Tok::LBracket, 1, &mut i, &mut col),
            ']' => push(Tok::RBracket, 1, &mut i, &mut col),
            ',' => push(Tok::Comma, 1, &mut i, &mut col),
            ';' => push(Tok::Semicolon, 1, &mut i, &mut col),
            '.' => push(Tok::Dot, 1, &mut i, &mut col),
            '/' => push(Tok::Slash, 1, &mut i, &mut col),
            '&' => push(Tok::Amp, 1, &mut i, &mut col),
            '|' => push(Tok::Pipe, 1, &mut i, &mut col),
            '=' => push(Tok::Cmp(CmpOp::Eq), 1, &mut i, &mut col),
            ':' if chars.get(i + 1) == Some(&'-') => push(Tok::If, 2, &mut i, &mut col),
            ':' => push(Tok::Colon, 1, &mut i, &mut col),
            '!' if chars.get(i + 1) == Some(&'=') => push(Tok::Cmp(CmpOp::Ne), 2, &mut i, &mut col),
            '<' if chars.get(i + 1) == Some(&'=') => push(Tok::Cmp(CmpOp::Le), 2, &mut i, &mut col),
            '<' => push(Tok::Cmp(CmpOp::Lt), 1, &mut i, &mut col),
            '>' if chars.get(i + 1) == Some(&'=') => push(Tok::Cmp(CmpOp::Ge), 2, &mut i, &mut col),
            '>' => push(Tok::Cmp(CmpOp::Gt), 1, &mut i, &mut col),
            '-' | '0'..='9' => {
                let start = i;
                let mut j = i + 1;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                let lit: String = chars[start..j].iter().collect();
                if lit == "-" {
                    return Err(ParseError::new(tl, tc, ParseErrorKind::Syntax("unexpected '-'".into())));
                }
                let n = lit.parse::<i64>().map_err(|_| {
                    ParseError::new(tl, tc, ParseErrorKind::Syntax(format!("integer '{lit}' out of range")))
                })?;
                push(Tok::Int(n), j - start, &mut i, &mut col);
            }
            '#' => {
                let mut j = i + 1;
                while j < chars.len() && chars[j].is_ascii_alphanumeric() {
                    j += 1;
                }
                let name: String = chars[i + 1..j].iter().collect();
                if name.is_empty() {
                    return Err(ParseError::new(
                        tl,
                        tc,
                        ParseErrorKind::Syntax("expected directive name after '#'".into()),
                    ));
                }
                push(Tok::Directive(name), j - i, &mut i, &mut col);
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let word: String = chars[i..j].iter().collect();
                let tok = if word.starts_with(RESERVED_PREFIX) {
                    return Err(ParseError::new(tl, tc, ParseErrorKind::ReservedPrefix(word)));
                } else if c == '_' {
                    return Err(ParseError::new(
                        tl,
                        tc,
                        ParseErrorKind::Syntax(format!("identifier '{word}' must start with a letter")),
                    ));
                } else if word == "not" {
                    Tok::Not
                } else if c.is_ascii_uppercase() {
                    Tok::Var(word)
                } else {
                    Tok::Ident(word)
                };
                push(tok, j - i, &mut i, &mut col);
            }
            other => {
                return Err(ParseError::new(tl, tc, ParseErrorKind::Syntax(format!("unexpected character '{other}'"))));
            }
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

/***** PARSER *****/

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn new(text: &str) -> ParseResult<Self> {
        Ok(Parser { toks: lex(text)?, pos: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let idx = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[idx].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn at_eof(&self) -> bool {
        *self.peek() == Tok::Eof
    }

    fn error_here(&self, kind: ParseErrorKind) -> ParseError {
        let t = &self.toks[self.pos];
        ParseError::new(t.line, t.col, kind)
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        let found = self.peek().clone();
        self.error_here(ParseErrorKind::Syntax(format!("expected {expected}, found {found}")))
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> ParseResult<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn term(&mut self) -> ParseResult<Term> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(Term::Sym(s))
            }
            Tok::Var(s) => {
                self.bump();
                Ok(Term::Var(s))
            }
            Tok::Int(n) => {
                self.bump();
                Ok(Term::Int(n))
            }
            _ => Err(self.unexpected("a term")),
        }
    }

    fn atom(&mut self) -> ParseResult<Atom> {
        let predicate = match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                s
            }
            _ => return Err(self.unexpected("an atom")),
        };
        let mut args = Vec::new();
        if *self.peek() == Tok::LParen {
            self.bump();
            loop {
                args.push(self.term()?);
                match self.peek() {
                    Tok::Comma => {
                        self.bump();
                    }
                    Tok::RParen => {
                        self.bump();
                        break;
                    }
                    _ => return Err(self.unexpected("',' or ')'")),
                }
            }
        }
        Ok(Atom { predicate, args })
    }

    fn body_elem(&mut self) -> ParseResult<BodyElem> {
        if *self.peek() == Tok::Not {
            self.bump();
            return Ok(BodyElem::Literal(Literal::neg(self.atom()?)));
        }
        let comparison =
            matches!((self.peek(), self.peek_at(1)), (Tok::Var(_) | Tok::Int(_), _) | (Tok::Ident(_), Tok::Cmp(_)));
        if comparison {
            let left = self.term()?;
            let op = match self.peek() {
                Tok::Cmp(op) => *op,
                _ => return Err(self.unexpected("a comparison operator")),
            };
            self.bump();
            let right = self.term()?;
            Ok(BodyElem::Comparison(Comparison { left, op, right }))
        } else {
            Ok(BodyElem::Literal(Literal::pos(self.atom()?)))
        }
    }

    fn body(&mut self) -> ParseResult<Vec<BodyElem>> {
        let mut body = vec![self.body_elem()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            body.push(self.body_elem()?);
        }
        Ok(body)
    }

    fn statement(&mut self, program: &mut Program, directives: &mut Vec<Directive>) -> ParseResult<()> {
        match self.peek().clone() {
            Tok::Directive(name) => {
                let here = self.error_here(ParseErrorKind::Syntax(String::new()));
                self.bump();
                match name.as_str() {
                    "external" => {
                        let atom = self.atom()?;
                        let condition = if *self.peek() == Tok::Colon {
                            self.bump();
                            self.body()?
                        } else {
                            Vec::new()
                        };
                        self.expect(Tok::Dot, "'.'")?;
                        directives.push(Directive::External { atom, condition });
                    }
                    "show" => {
                        let predicate = match self.peek().clone() {
                            Tok::Ident(s) => {
                                self.bump();
                                s
                            }
                            _ => return Err(self.unexpected("a predicate name")),
                        };
                        self.expect(Tok::Slash, "'/'")?;
                        let arity = match *self.peek() {
                            Tok::Int(n) if n >= 0 => {
                                self.bump();
                                n as usize
                            }
                            _ => return Err(self.unexpected("an arity")),
                        };
                        self.expect(Tok::Dot, "'.'")?;
                        directives.push(Directive::Show { predicate, arity });
                    }
                    other => {
                        return Err(ParseError::new(
                            here.line,
                            here.column,
                            ParseErrorKind::Syntax(format!("unsupported directive '#{other}'")),
                        ))
                    }
                }
            }
            Tok::If => {
                self.bump();
                let body = self.body()?;
                self.expect(Tok::Dot, "'.'")?;
                program.rules.push(Rule::new(Head::Falsity, body));
            }
            Tok::LBrace => {
                self.bump();
                let atom = self.atom()?;
                match self.peek() {
                    Tok::RBrace => {
                        self.bump();
                    }
                    Tok::Semicolon | Tok::Comma | Tok::Ident(_) => {
                        return Err(self.error_here(ParseErrorKind::ChoiceHead));
                    }
                    _ => return Err(self.unexpected("'}'")),
                }
                let body = self.rule_tail()?;
                program.rules.push(Rule::new(Head::Choice(atom), body));
            }
            Tok::Ident(_) => {
                let atom = self.atom()?;
                let body = self.rule_tail()?;
                program.rules.push(Rule::new(Head::Atom(atom), body));
            }
            _ => return Err(self.unexpected("a rule or directive")),
        }
        Ok(())
    }

    fn rule_tail(&mut self) -> ParseResult<Vec<BodyElem>> {
        let body = if *self.peek() == Tok::If {
            self.bump();
            self.body()?
        } else {
            Vec::new()
        };
        self.expect(Tok::Dot, "'.'")?;
        Ok(body)
    }

    fn query_or(&mut self) -> ParseResult<QueryExpr> {
        let mut parts = vec![self.query_and()?];
        while *self.peek() == Tok::Pipe {
            self.bump();
            parts.push(self.query_and()?);
        }
        Ok(flatten(parts, false))
    }

    fn query_and(&mut self) -> ParseResult<QueryExpr> {
        let mut parts = vec![self.query_unary()?];
        while *self.peek() == Tok::Amp {
            self.bump();
            parts.push(self.query_unary()?);
        }
        Ok(flatten(parts, true))
    }

    fn query_unary(&mut self) -> ParseResult<QueryExpr> {
        match self.peek() {
            Tok::Not => {
                self.bump();
                if matches!(self.peek(), Tok::LBracket | Tok::Not) {
                    return Err(self.error_here(ParseErrorKind::NegatedSubexpression));
                }
                Ok(QueryExpr::Not(self.atom()?))
            }
            Tok::LBracket => {
                self.bump();
                let inner = self.query_or()?;
                self.expect(Tok::RBracket, "']'")?;
                Ok(inner)
            }
            _ => Ok(QueryExpr::Atom(self.atom()?)),
        }
    }
}

fn flatten(parts: Vec<QueryExpr>, conjunction: bool) -> QueryExpr {
    if parts.len() == 1 {
        return parts.into_iter().next().unwrap();
    }
    let mut out = Vec::with_capacity(parts.len());
    for p in parts {
        match (p, conjunction) {
            (QueryExpr::And(cs), true) | (QueryExpr::Or(cs), false) => out.extend(cs),
            (p, _) => out.push(p),
        }
    }
    if conjunction {
        QueryExpr::And(out)
    } else {
        QueryExpr::Or(out)
    }
}

/// Parses a program text into its rules and directives, preserving order.
pub fn parse_program(text: &str) -> ParseResult<(Program, Vec<Directive>)> {
    let mut p = Parser::new(text)?;
    let mut program = Program::default();
    let mut directives = Vec::new();
    while !p.at_eof() {
        p.statement(&mut program, &mut directives)?;
    }
    Ok((program, directives))
}

/// Parses a query: `not` binds to atoms, `&` binds tighter than `|`, and
/// square brackets group. A trailing `.` is accepted.
pub fn parse_query(text: &str) -> ParseResult<QueryExpr> {
    let mut p = Parser::new(text)?;
    if p.at_eof() {
        return Err(p.unexpected("a query"));
    }
    let expr = p.query_or()?;
    if *p.peek() == Tok::Dot {
        p.bump();
    }
    if !p.at_eof() {
        return Err(p.unexpected("'&', '|' or end of query"));
    }
    if !expr.is_ground() && expr.as_conjunction().is_none() {
        return Err(ParseError::new(1, 1, ParseErrorKind::NonGroundQuery));
    }
    Ok(expr)
}

/// Parses a single atom with an optional trailing `.`.
pub fn parse_atom(text: &str) -> ParseResult<Atom> {
    let mut p = Parser::new(text)?;
    let atom = p.atom()?;
    if *p.peek() == Tok::Dot {
        p.bump();
    }
    if !p.at_eof() {
        return Err(p.unexpected("end of input"));
    }
    Ok(atom)
}

fn parse_ground_atom(text: &str) -> ParseResult<Atom> {
    let atom = parse_atom(text)?;
    if !atom.is_ground() {
        return Err(ParseError::argument(format!("'{atom}' is not ground")));
    }
    Ok(atom)
}

fn parse_ground_literal(text: &str) -> ParseResult<Literal> {
    let trimmed = text.trim();
    let lit = match trimmed.strip_prefix("not") {
        Some(rest) if rest.starts_with(char::is_whitespace) => Literal::neg(parse_ground_atom(rest)?),
        _ => Literal::pos(parse_ground_atom(trimmed)?),
    };
    Ok(lit)
}

/// Result of feeding one line to the command parser.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Parsed {
    Command(Command),
    /// A `define` that is not yet terminated by `?`; carries the buffered
    /// rule text to pass back as continuation.
    NeedMore(String),
}

/// Parses one shell line. `continuation` is the rule text buffered from a
/// previous `define` line that was not yet terminated by `?`.
pub fn parse_command(line: &str, continuation: Option<&str>) -> ParseResult<Parsed> {
    if let Some(buffered) = continuation {
        return define_text(format!("{buffered}\n{line}"));
    }
    let trimmed = line.trim();
    let (word, rest) = match trimmed.find(char::is_whitespace) {
        Some(k) => (&trimmed[..k], trimmed[k..].trim()),
        None => (trimmed, ""),
    };
    let no_args = |cmd: Command| {
        if rest.is_empty() {
            Ok(Parsed::Command(cmd))
        } else {
            Err(ParseError::argument(format!("'{word}' takes no arguments")))
        }
    };
    let required = |what: &str| {
        if rest.is_empty() {
            Err(ParseError::argument(format!("'{word}' expects {what}")))
        } else {
            Ok(rest)
        }
    };
    match word {
        "load" => Ok(Parsed::Command(Command::Load(required("a file name")?.to_string()))),
        "define" => define_text(rest.to_string()),
        "external" => {
            let mut text = format!("#external {}", required("an atom")?);
            if !text.ends_with('.') {
                text.push('.');
            }
            let (program, mut directives) = parse_program(&text)?;
            match (program.rules.is_empty(), directives.pop(), directives.is_empty()) {
                (true, Some(Directive::External { atom, condition }), true) => {
                    Ok(Parsed::Command(Command::External { atom, condition }))
                }
                _ => Err(ParseError::argument("malformed external declaration")),
            }
        }
        "assert" => Ok(Parsed::Command(Command::Assert(parse_ground_atom(required("an atom")?)?))),
        "open" => Ok(Parsed::Command(Command::Open(parse_ground_atom(required("an atom")?)?))),
        "retract" => Ok(Parsed::Command(Command::Retract(parse_ground_atom(required("an atom")?)?))),
        "release" => Ok(Parsed::Command(Command::Release(parse_ground_atom(required("an atom")?)?))),
        "assume" => Ok(Parsed::Command(Command::Assume(parse_ground_literal(required("a literal")?)?))),
        "cancel" => Ok(Parsed::Command(Command::Cancel(parse_ground_literal(required("a literal")?)?))),
        "query" => Ok(Parsed::Command(Command::Query(parse_query(required("a query")?)?))),
        "option" => Ok(Parsed::Command(Command::Option(
            required("arguments")?.split_whitespace().map(str::to_string).collect(),
        ))),
        "state" => no_args(Command::State),
        "help" => no_args(Command::Help),
        "exit" | "quit" => no_args(Command::Exit),
        "" => Err(ParseError::argument("empty command")),
        other => Err(ParseError::new(1, 1, ParseErrorKind::UnknownCommand(other.to_string()))),
    }
}

fn define_text(text: String) -> ParseResult<Parsed> {
    match text.find('?') {
        None => Ok(Parsed::NeedMore(text)),
        Some(k) => {
            if !text[k + 1..].trim().is_empty() {
                return Err(ParseError::argument("unexpected input after '?'"));
            }
            let (program, directives) = parse_program(&text[..k])?;
            Ok(Parsed::Command(Command::Define { program, directives }))
        }
    }
}
