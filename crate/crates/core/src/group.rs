//! Finite groups given by their multiplication tables.

use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroupError {
    #[error("multiplication table is empty")]
    Empty,
    #[error("row {row} has {len} entries, expected {order}")]
    Ragged { row: usize, len: usize, order: usize },
    #[error("entry {value} at ({row}, {col}) is not an element index below {order}")]
    OutOfRange { row: usize, col: usize, value: usize, order: usize },
    #[error("row or column {0} is not a permutation, so the table is not a group")]
    NotLatin(usize),
    #[error("no identity element")]
    NoIdentity,
    #[error("({a}*{b})*{c} != {a}*({b}*{c})")]
    NotAssociative { a: usize, b: usize, c: usize },
    #[error("cannot parse table: {0}")]
    Parse(String),
    #[error("{0}")]
    InvalidPreset(String),
}

/// A finite group on the elements `0..order`, `mul[a][b] = a·b`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupTable {
    name: String,
    mul: Vec<Vec<usize>>,
    identity: usize,
    inverse: Vec<usize>,
}

impl GroupTable {
    /// Validates closure, the Latin-square property, the identity and
    /// associativity (O(n³); fine for the desk-scale groups used here).
    pub fn new(name: impl Into<String>, mul: Vec<Vec<usize>>) -> Result<Self, GroupError> {
        let n = mul.len();
        if n == 0 {
            return Err(GroupError::Empty);
        }
        for (row, r) in mul.iter().enumerate() {
            if r.len() != n {
                return Err(GroupError::Ragged {
                    row,
                    len: r.len(),
                    order: n,
                });
            }
            for (col, &value) in r.iter().enumerate() {
                if value >= n {
                    return Err(GroupError::OutOfRange {
                        row,
                        col,
                        value,
                        order: n,
                    });
                }
            }
        }
        for i in 0..n {
            let mut seen_row = vec![false; n];
            let mut seen_col = vec![false; n];
            for j in 0..n {
                seen_row[mul[i][j]] = true;
                seen_col[mul[j][i]] = true;
            }
            if seen_row.contains(&false) || seen_col.contains(&false) {
                return Err(GroupError::NotLatin(i));
            }
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|g| mul[e][g] == g && mul[g][e] == g))
            .ok_or(GroupError::NoIdentity)?;
        for a in 0..n {
            for b in 0..n {
                let ab = mul[a][b];
                for c in 0..n {
                    if mul[ab][c] != mul[a][mul[b][c]] {
                        return Err(GroupError::NotAssociative { a, b, c });
                    }
                }
            }
        }
        let inverse = (0..n)
            .map(|g| (0..n).find(|&h| mul[g][h] == identity).expect("Latin rows"))
            .collect();
        Ok(Self {
            name: name.into(),
            mul,
            identity,
            inverse,
        })
    }

    /// ℤ/n with element k ↔ k mod n.
    pub fn cyclic(n: usize) -> Result<Self, GroupError> {
        if n == 0 {
            return Err(GroupError::InvalidPreset("cyclic group needs n >= 1".into()));
        }
        let mul = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
        Self::new(format!("cyclic({n})"), mul)
    }

    /// Dihedral group of order 2n; element `i + n·j` is r^i s^j.
    pub fn dihedral(n: usize) -> Result<Self, GroupError> {
        if n < 2 {
            return Err(GroupError::InvalidPreset("dihedral group needs n >= 2".into()));
        }
        let order = 2 * n;
        let mul = (0..order)
            .map(|x| {
                let (a, b) = (x % n, x / n);
                (0..order)
                    .map(|y| {
                        let (c, d) = (y % n, y / n);
                        // r^a s^b r^c s^d = r^{a ± c} s^{b+d}
                        let rot = if b == 0 { (a + c) % n } else { (a + n - c) % n };
                        rot + n * ((b + d) % 2)
                    })
                    .collect()
            })
            .collect();
        Self::new(format!("dihedral({n})"), mul)
    }

    /// Symmetric group S₄, permutations of {0,1,2,3} in lexicographic order,
    /// product = composition (a·b)(i) = a(b(i)).
    pub fn symmetric4() -> Self {
        let perms = permutations4();
        let index = |p: &[usize; 4]| perms.iter().position(|q| q == p).expect("closed");
        let mul = perms
            .iter()
            .map(|a| {
                perms
                    .iter()
                    .map(|b| index(&[a[b[0]], a[b[1]], a[b[2]], a[b[3]]]))
                    .collect()
            })
            .collect();
        Self::new("symmetric4", mul).expect("S4 table is a group")
    }

    /// Parses a table with one row per element and comma-separated indices.
    /// Blank lines and lines starting with `#` are ignored.
    pub fn from_csv_str(name: impl Into<String>, text: &str) -> Result<Self, GroupError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(text.as_bytes());
        let mut mul = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| GroupError::Parse(e.to_string()))?;
            if record.iter().all(str::is_empty) {
                continue;
            }
            let row = record
                .iter()
                .map(|f| {
                    f.parse::<usize>()
                        .map_err(|e| GroupError::Parse(format!("{f:?}: {e}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            mul.push(row);
        }
        Self::new(name, mul)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self, GroupError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GroupError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_csv_str(path.display().to_string(), &text)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn order(&self) -> usize {
        self.mul.len()
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mul[a][b]
    }

    pub fn inverse(&self, g: usize) -> usize {
        self.inverse[g]
    }

    /// A symmetric generating set for the presets: {±1} for ℤ/n,
    /// {r, r⁻¹, s} for dihedral groups, adjacent transpositions for S₄.
    /// Other tables get the full set of non-identity elements.
    pub fn standard_generators(&self) -> Vec<usize> {
        let n = self.order();
        if self.name.starts_with("cyclic") {
            let mut g = vec![1 % n, (n - 1) % n];
            g.sort_unstable();
            g.dedup();
            g.retain(|&x| x != self.identity);
            g
        } else if self.name.starts_with("dihedral") {
            let half = n / 2;
            vec![1, half - 1, half]
                .into_iter()
                .collect::<std::collections::BTreeSet<_>>()
                .into_iter()
                .collect()
        } else if self.name == "symmetric4" {
            let perms = permutations4();
            [[1, 0, 2, 3], [0, 2, 1, 3], [0, 1, 3, 2]]
                .iter()
                .map(|t| perms.iter().position(|p| p == t).expect("transposition"))
                .collect()
        } else {
            (0..n).filter(|&g| g != self.identity).collect()
        }
    }
}

fn permutations4() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let p = [a, b, c, d];
                    let mut seen = [false; 4];
                    p.iter().for_each(|&i| seen[i] = true);
                    if seen.iter().all(|&s| s) {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}
