use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub const LEFT_MARKER: &str = "<L>";
pub const RIGHT_MARKER: &str = "<R>";

/// A letter of the extended alphabet. `Left` is the call-kind marker that opens
/// every input of a two-way machine and `Right` the return-kind marker closing it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    Call(u32),
    Ret(u32),
    Left,
    Right,
}

impl Letter {
    pub fn is_call(self) -> bool {
        matches!(self, Letter::Call(_) | Letter::Left)
    }

    pub fn is_marker(self) -> bool {
        matches!(self, Letter::Left | Letter::Right)
    }

    /// Reading direction swap: calls become returns and the markers trade places.
    pub fn mirror(self) -> Letter {
        match self {
            Letter::Call(i) => Letter::Ret(i),
            Letter::Ret(i) => Letter::Call(i),
            Letter::Left => Letter::Right,
            Letter::Right => Letter::Left,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dir {
    Fwd,
    Bwd,
}

impl Dir {
    pub fn flip(self) -> Dir {
        match self {
            Dir::Fwd => Dir::Bwd,
            Dir::Bwd => Dir::Fwd,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            Dir::Fwd => "fw",
            Dir::Bwd => "bw",
        }
    }
}

impl fmt::Display for Dir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Whether reading `a` in direction `d` pushes onto the stack.
pub fn is_push(d: Dir, a: Letter) -> bool {
    (d == Dir::Fwd) == a.is_call()
}

#[derive(Clone, Debug)]
pub struct StructuredAlphabet {
    calls: Vec<String>,
    returns: Vec<String>,
    index: HashMap<String, Letter>,
}

impl PartialEq for StructuredAlphabet {
    fn eq(&self, other: &Self) -> bool {
        self.calls == other.calls && self.returns == other.returns
    }
}

impl Eq for StructuredAlphabet {}

impl StructuredAlphabet {
    pub fn new<S: AsRef<str>>(calls: &[S], returns: &[S]) -> Result<Self> {
        if calls.is_empty() || returns.is_empty() {
            return Err(Error::InvalidAlphabet("calls and returns must be nonempty".into()));
        }
        let mut index = HashMap::new();
        let all = calls
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_ref(), Letter::Call(i as u32)))
            .chain(returns.iter().enumerate().map(|(i, s)| (s.as_ref(), Letter::Ret(i as u32))));
        for (name, letter) in all {
            if name.is_empty() || name.chars().any(char::is_whitespace) {
                return Err(Error::InvalidAlphabet(format!("bad symbol name `{name}`")));
            }
            if name == LEFT_MARKER || name == RIGHT_MARKER {
                return Err(Error::InvalidAlphabet(format!("`{name}` is reserved")));
            }
            if index.insert(name.to_string(), letter).is_some() {
                return Err(Error::InvalidAlphabet(format!("duplicate symbol `{name}`")));
            }
        }
        Ok(StructuredAlphabet {
            calls: calls.iter().map(|s| s.as_ref().to_string()).collect(),
            returns: returns.iter().map(|s| s.as_ref().to_string()).collect(),
            index,
        })
    }

    pub fn shared<S: AsRef<str>>(calls: &[S], returns: &[S]) -> Result<Arc<Self>> {
        Self::new(calls, returns).map(Arc::new)
    }

    pub fn calls(&self) -> &[String] {
        &self.calls
    }

    pub fn returns(&self) -> &[String] {
        &self.returns
    }

    pub fn num_calls(&self) -> usize {
        self.calls.len()
    }

    pub fn num_returns(&self) -> usize {
        self.returns.len()
    }

    /// Looks up a user symbol; markers are not part of the user alphabet.
    pub fn letter(&self, name: &str) -> Option<Letter> {
        self.index.get(name).copied()
    }

    /// Looks up a symbol of the extended alphabet, markers included.
    pub fn extended_letter(&self, name: &str) -> Option<Letter> {
        match name {
            LEFT_MARKER => Some(Letter::Left),
            RIGHT_MARKER => Some(Letter::Right),
            _ => self.letter(name),
        }
    }

    pub fn name(&self, a: Letter) -> &str {
        match a {
            Letter::Call(i) => &self.calls[i as usize],
            Letter::Ret(i) => &self.returns[i as usize],
            Letter::Left => LEFT_MARKER,
            Letter::Right => RIGHT_MARKER,
        }
    }

    pub fn contains(&self, a: Letter) -> bool {
        match a {
            Letter::Call(i) => (i as usize) < self.calls.len(),
            Letter::Ret(i) => (i as usize) < self.returns.len(),
            _ => true,
        }
    }

    pub fn call_letters(&self) -> impl Iterator<Item = Letter> + '_ {
        (0..self.calls.len() as u32).map(Letter::Call)
    }

    pub fn return_letters(&self) -> impl Iterator<Item = Letter> + '_ {
        (0..self.returns.len() as u32).map(Letter::Ret)
    }

    /// User letters, calls first.
    pub fn letters(&self) -> impl Iterator<Item = Letter> + '_ {
        self.call_letters().chain(self.return_letters())
    }

    pub fn extended_letters(&self) -> impl Iterator<Item = Letter> + '_ {
        self.letters().chain([Letter::Left, Letter::Right])
    }

    /// The alphabet seen by a reader going right-to-left.
    pub fn mirror(&self) -> StructuredAlphabet {
        StructuredAlphabet::new(&self.returns, &self.calls).expect("mirror of a valid alphabet")
    }
}
