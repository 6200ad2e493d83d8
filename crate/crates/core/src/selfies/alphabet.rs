use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{SelfiesError, Token, TokenSequence};
use crate::num::Matrix;

const HEADER: &str = "# adkl-alphabet v1";

/// Sorted token inventory; the position of a token is its one-hot column.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Alphabet {
    tokens: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl TryFrom<Vec<String>> for Alphabet {
    type Error = SelfiesError;

    fn try_from(tokens: Vec<String>) -> Result<Self, SelfiesError> {
        Alphabet::from_tokens(tokens)
    }
}

impl From<Alphabet> for Vec<String> {
    fn from(a: Alphabet) -> Self {
        a.tokens
    }
}

impl Alphabet {
    /// Sorted union of the corpus tokens plus `[pad]`.
    pub fn build(corpus: &[TokenSequence]) -> Result<Self, SelfiesError> {
        if corpus.is_empty() {
            return Err(SelfiesError::EmptyCorpus);
        }
        let set: BTreeSet<String> = corpus.iter().flat_map(|s| s.tokens.iter().map(Token::to_string)).collect();
        Self::from_tokens(set.into_iter().collect())
    }

    /// Validates, sorts and deduplicates; `[pad]` is added if absent.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self, SelfiesError> {
        let mut set = BTreeSet::new();
        for t in tokens {
            t.parse::<Token>()?;
            set.insert(t);
        }
        set.insert(Token::Pad.to_string());
        let tokens: Vec<String> = set.into_iter().collect();
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Ok(Alphabet { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn index_of(&self, token: &Token) -> Option<usize> {
        self.index.get(&token.to_string()).copied()
    }

    pub fn pad_index(&self) -> usize {
        self.index[&Token::Pad.to_string()]
    }

    pub fn token(&self, i: usize) -> Option<Token> {
        self.tokens.get(i).map(|t| t.parse().expect("alphabet tokens are validated"))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from(HEADER);
        s.push('\n');
        for t in &self.tokens {
            s.push_str(t);
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, SelfiesError> {
        let mut lines = text.lines();
        if lines.next().map(str::trim_end) != Some(HEADER) {
            return Err(SelfiesError::AlphabetFile(format!("expected header {HEADER:?}")));
        }
        Self::from_tokens(lines.map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect())
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_text())
    }

    pub fn load(path: &Path) -> Result<Self, SelfiesError> {
        let text = std::fs::read_to_string(path).map_err(|e| SelfiesError::AlphabetFile(e.to_string()))?;
        Self::parse(&text)
    }
}

/// `max_len` rows of one-hot columns, stored as the column index per row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OneHotMatrix {
    pub max_len: usize,
    pub alphabet_size: usize,
    columns: Vec<usize>,
}

impl OneHotMatrix {
    pub fn column(&self, row: usize) -> usize {
        self.columns[row]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        if self.columns[row] == col {
            1.0
        } else {
            0.0
        }
    }

    /// Row-major flattening, `max_len * alphabet_size` long.
    pub fn flat(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.max_len * self.alphabet_size];
        self.write_flat(&mut v);
        v
    }

    pub fn write_flat(&self, out: &mut [f64]) {
        out.fill(0.0);
        for (r, &c) in self.columns.iter().enumerate() {
            out[r * self.alphabet_size + c] = 1.0;
        }
    }

    /// Positions of the ones in the flattened vector.
    pub fn active_indices(&self) -> Vec<usize> {
        self.columns.iter().enumerate().map(|(r, &c)| r * self.alphabet_size + c).collect()
    }

    /// Reads back a flattened row-major matrix; each row must hold a single 1.
    pub fn from_flat(flat: &[f64], max_len: usize, alphabet_size: usize) -> Result<Self, SelfiesError> {
        if flat.len() != max_len * alphabet_size {
            return Err(SelfiesError::MalformedOneHot(0));
        }
        let columns = flat
            .chunks(alphabet_size)
            .enumerate()
            .map(|(r, row)| {
                let ones: Vec<usize> = row.iter().enumerate().filter(|(_, &x)| x == 1.0).map(|(i, _)| i).collect();
                let zeros = row.iter().filter(|&&x| x == 0.0).count();
                match ones.as_slice() {
                    [c] if zeros + 1 == alphabet_size => Ok(*c),
                    _ => Err(SelfiesError::MalformedOneHot(r)),
                }
            })
            .collect::<Result<_, _>>()?;
        Ok(OneHotMatrix {
            max_len,
            alphabet_size,
            columns,
        })
    }

    /// Inverse of [`one_hot`]: the tokens before the first pad row.
    pub fn decode(&self, alphabet: &Alphabet) -> TokenSequence {
        let pad = alphabet.pad_index();
        TokenSequence::new(
            self.columns
                .iter()
                .take_while(|&&c| c != pad)
                .map(|&c| alphabet.token(c).expect("column within alphabet"))
                .collect(),
        )
    }
}

pub fn one_hot(seq: &TokenSequence, alphabet: &Alphabet, max_len: usize) -> Result<OneHotMatrix, SelfiesError> {
    if seq.len() > max_len {
        return Err(SelfiesError::SequenceTooLong {
            len: seq.len(),
            max_len,
        });
    }
    let pad = alphabet.pad_index();
    let mut columns = Vec::with_capacity(max_len);
    for t in &seq.tokens {
        columns.push(alphabet.index_of(t).ok_or_else(|| SelfiesError::UnknownToken(t.to_string()))?);
    }
    columns.resize(max_len, pad);
    Ok(OneHotMatrix {
        max_len,
        alphabet_size: alphabet.len(),
        columns,
    })
}

/// One flattened one-hot row per sequence.
pub fn one_hot_batch(seqs: &[TokenSequence], alphabet: &Alphabet, max_len: usize) -> Result<Matrix, SelfiesError> {
    let width = max_len * alphabet.len();
    let mut m = Matrix::zeros(seqs.len(), width);
    for (i, s) in seqs.iter().enumerate() {
        one_hot(s, alphabet, max_len)?.write_flat(m.row_mut(i));
    }
    Ok(m)
}
