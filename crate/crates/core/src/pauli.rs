//! Multi-site Pauli operators (no global phase) and the textual operator
//! format `"X:(4,4),X:(4,3)"` used by the CLI and JSON interfaces.
//! Coordinates in the textual form are 1-based (row, col).

use crate::ensemble::GridGeometry;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PauliLetter {
    X,
    Y,
    Z,
}

impl fmt::Display for PauliLetter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PauliLetter::X => write!(f, "X"),
            PauliLetter::Y => write!(f, "Y"),
            PauliLetter::Z => write!(f, "Z"),
        }
    }
}

/// Tensor product of single-site Paulis over linear site indices;
/// identity everywhere else. Hermitian and involutory by construction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PauliString {
    terms: BTreeMap<usize, PauliLetter>,
}

impl PauliString {
    pub fn from_terms<I: IntoIterator<Item = (usize, PauliLetter)>>(terms: I) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (site, letter) in terms {
            if map.insert(site, letter).is_some() {
                return Err(Error::InvalidOperator(format!(
                    "site {site} appears more than once"
                )));
            }
        }
        Ok(Self { terms: map })
    }

    pub fn single(site: usize, letter: PauliLetter) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(site, letter);
        Self { terms }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, PauliLetter)> + '_ {
        self.terms.iter().map(|(&s, &l)| (s, l))
    }

    pub fn sites(&self) -> impl Iterator<Item = usize> + '_ {
        self.terms.keys().copied()
    }

    pub fn letter_at(&self, site: usize) -> Option<PauliLetter> {
        self.terms.get(&site).copied()
    }

    pub fn max_site(&self) -> Option<usize> {
        self.terms.keys().next_back().copied()
    }

    /// True iff every letter is Z (so the string is diagonal and fixes |0..0>).
    pub fn is_z_type(&self) -> bool {
        self.terms.values().all(|&l| l == PauliLetter::Z)
    }

    pub fn check_in_range(&self, n: usize) -> Result<()> {
        for site in self.sites() {
            if site >= n {
                return Err(Error::SiteOutOfRange { site, n });
            }
        }
        Ok(())
    }

    /// Eigenvalue (+1 or -1) of a Z-type string on the computational basis
    /// state `basis`.
    pub fn z_eigenvalue(&self, basis: u64) -> Result<f64> {
        if !self.is_z_type() {
            return Err(Error::InvalidOperator(
                "eigenvalue on a basis state requires a Z-type string".into(),
            ));
        }
        let mut zmask = 0u64;
        for site in self.sites() {
            zmask |= 1 << site;
        }
        Ok(if (basis & zmask).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        })
    }

    /// Parses `"X:(4,4),X:(4,3)"` against a grid, resolving 1-based (row,col)
    /// coordinates to linear site indices.
    pub fn parse(text: &str, geometry: &GridGeometry) -> Result<Self> {
        let text = text.trim();
        if text.is_empty() {
            return Err(Error::InvalidOperator("empty operator string".into()));
        }
        let mut terms = Vec::new();
        for part in text.split(',').collect::<Vec<_>>().chunks(2) {
            // each term contains one comma inside the parentheses, so terms
            // arrive as consecutive chunk pairs: "X:(4" and "4)"
            let [head, tail] = part else {
                return Err(Error::InvalidOperator(format!(
                    "malformed operator term near '{}'",
                    part.join(",")
                )));
            };
            let term = format!("{head},{tail}");
            let term = term.trim();
            let (letter_str, coords) = term.split_once(':').ok_or_else(|| {
                Error::InvalidOperator(format!("expected 'P:(r,c)' in '{term}'"))
            })?;
            let letter = match letter_str.trim() {
                "X" | "x" => PauliLetter::X,
                "Y" | "y" => PauliLetter::Y,
                "Z" | "z" => PauliLetter::Z,
                other => {
                    return Err(Error::InvalidOperator(format!(
                        "unknown Pauli letter '{other}'"
                    )))
                }
            };
            let coords = coords.trim();
            let inner = coords
                .strip_prefix('(')
                .and_then(|c| c.strip_suffix(')'))
                .ok_or_else(|| {
                    Error::InvalidOperator(format!("expected '(r,c)' in '{term}'"))
                })?;
            let (r_str, c_str) = inner.split_once(',').ok_or_else(|| {
                Error::InvalidOperator(format!("expected two coordinates in '{term}'"))
            })?;
            let row: usize = r_str.trim().parse().map_err(|_| {
                Error::InvalidOperator(format!("bad row '{r_str}' in '{term}'"))
            })?;
            let col: usize = c_str.trim().parse().map_err(|_| {
                Error::InvalidOperator(format!("bad col '{c_str}' in '{term}'"))
            })?;
            terms.push((geometry.index(row, col)?, letter));
        }
        Self::from_terms(terms)
    }

    /// Renders the textual form using 1-based (row,col) coordinates.
    pub fn format(&self, geometry: &GridGeometry) -> String {
        self.iter()
            .map(|(site, letter)| {
                let (r, c) = geometry.coords(site);
                format!("{letter}:({r},{c})")
            })
            .collect::<Vec<_>>()
            .join(",")
    }
}
