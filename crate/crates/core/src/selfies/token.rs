use std::fmt;
use std::str::FromStr;

use crate::chem::Element;

use super::SelfiesError;

/// One SELFIES symbol. Bond fields carry the requested order (1-3); the
/// decoder clamps them to the available valence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Token {
    Atom { bond: u8, element: Element, charge: i8 },
    /// Ring closure to an earlier atom; `size` index tokens follow.
    Ring { bond: u8, size: u8 },
    /// Branch from the current atom; `size` index tokens follow.
    Branch { bond: u8, size: u8 },
    Pad,
}

/// Tokens whose position in this list encodes an index digit (base 16).
/// Any other token reads as 0.
pub const INDEX_TOKENS: [&str; 16] = [
    "[C]", "[Ring1]", "[Ring2]", "[Branch1]", "[=Branch1]", "[#Branch1]", "[Branch2]", "[=Branch2]",
    "[#Branch2]", "[O]", "[N]", "[=N]", "[=C]", "[#C]", "[=O]", "[#N]",
];

impl Token {
    pub fn atom(element: Element, charge: i8, bond: u8) -> Token {
        Token::Atom { bond, element, charge }
    }

    /// Bonding capacity of an atom token, `None` for other tokens.
    pub fn capacity(&self) -> Option<u8> {
        match *self {
            Token::Atom { element, charge, .. } => crate::chem::allowed_valence(element, charge),
            _ => None,
        }
    }

    pub fn index_value(&self) -> usize {
        let s = self.to_string();
        INDEX_TOKENS.iter().position(|t| *t == s).unwrap_or(0)
    }

    pub fn from_index_value(v: usize) -> Token {
        INDEX_TOKENS[v].parse().expect("index tokens are valid")
    }

    pub(crate) fn is_supported_atom(element: Element, charge: i8) -> bool {
        matches!(
            (element, charge),
            (Element::H | Element::F, 0) | (Element::C | Element::N | Element::O, -1..=1)
        )
    }
}

fn bond_prefix(bond: u8) -> &'static str {
    match bond {
        2 => "=",
        3 => "#",
        _ => "",
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Token::Atom { bond, element, charge } => {
                write!(f, "[{}{}", bond_prefix(bond), element.symbol())?;
                match charge {
                    0 => {}
                    c if c > 0 => write!(f, "+{c}")?,
                    c => write!(f, "{c}")?,
                }
                f.write_str("]")
            }
            Token::Ring { bond, size } => write!(f, "[{}Ring{size}]", bond_prefix(bond)),
            Token::Branch { bond, size } => write!(f, "[{}Branch{size}]", bond_prefix(bond)),
            Token::Pad => f.write_str("[pad]"),
        }
    }
}

impl FromStr for Token {
    type Err = SelfiesError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || SelfiesError::UnknownToken(s.to_string());
        let body = s.strip_prefix('[').and_then(|b| b.strip_suffix(']')).ok_or_else(unknown)?;
        if body == "pad" {
            return Ok(Token::Pad);
        }
        let (bond, rest) = match body.as_bytes().first() {
            Some(b'=') => (2, &body[1..]),
            Some(b'#') => (3, &body[1..]),
            _ => (1, body),
        };
        for (name, is_ring) in [("Ring", true), ("Branch", false)] {
            if let Some(n) = rest.strip_prefix(name) {
                let size = match n {
                    "1" => 1,
                    "2" => 2,
                    _ => return Err(unknown()),
                };
                return Ok(if is_ring {
                    Token::Ring { bond, size }
                } else {
                    Token::Branch { bond, size }
                });
            }
        }
        let (sym, charge) = match rest.find(['+', '-']) {
            Some(p) => {
                let c: i8 = rest[p..].parse().map_err(|_| unknown())?;
                (&rest[..p], c)
            }
            None => (rest, 0),
        };
        let element = Element::from_symbol(sym).ok_or_else(unknown)?;
        if !Token::is_supported_atom(element, charge) || charge == 0 && rest.len() != sym.len() {
            return Err(unknown());
        }
        Ok(Token::Atom { bond, element, charge })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct TokenSequence {
    pub tokens: Vec<Token>,
}

impl TokenSequence {
    pub fn new(tokens: Vec<Token>) -> Self {
        TokenSequence { tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Token strings, in order.
    pub fn symbols(&self) -> Vec<String> {
        self.tokens.iter().map(Token::to_string).collect()
    }
}

impl fmt::Display for TokenSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.tokens.iter().try_for_each(|t| write!(f, "{t}"))
    }
}

impl FromStr for TokenSequence {
    type Err = SelfiesError;

    /// Splits `[..][..]...` into tokens; text outside brackets is an error.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut tokens = Vec::new();
        let mut rest = s;
        while !rest.is_empty() {
            if !rest.starts_with('[') {
                return Err(SelfiesError::UnknownToken(rest.to_string()));
            }
            let end = rest.find(']').ok_or_else(|| SelfiesError::UnknownToken(rest.to_string()))?;
            tokens.push(rest[..=end].parse()?);
            rest = &rest[end + 1..];
        }
        Ok(TokenSequence { tokens })
    }
}
