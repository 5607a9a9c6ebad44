use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendKind {
    Scalar,
    FiniteGroup,
}

/// A finite von Neumann algebra: `C` or the group algebra `C[G]` acting on
/// `l^2(G)`. Elements are indexed by position in the multiplication table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlgebraBackend {
    kind: BackendKind,
    name: String,
    labels: Vec<String>,
    table: Vec<Vec<usize>>,
    identity: usize,
    inverse: Vec<usize>,
}

pub type Backend = Arc<AlgebraBackend>;

impl AlgebraBackend {
    pub fn scalar() -> Backend {
        Arc::new(AlgebraBackend {
            kind: BackendKind::Scalar,
            name: "scalar".into(),
            labels: vec!["e".into()],
            table: vec![vec![0]],
            identity: 0,
            inverse: vec![0],
        })
    }

    /// Build a group backend from a multiplication table, `table[a][b] = a*b`.
    /// Validates closure, identity, inverses and associativity.
    pub fn from_table(name: &str, labels: Vec<String>, table: Vec<Vec<usize>>) -> Result<Backend> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::GroupTable("empty group".into()));
        }
        if n > 64 {
            return Err(Error::GroupTable(format!("order {n} exceeds 64")));
        }
        if table.len() != n || table.iter().any(|r| r.len() != n) {
            return Err(Error::GroupTable("table is not square of group order".into()));
        }
        if table.iter().flatten().any(|&x| x >= n) {
            return Err(Error::GroupTable("entry out of range".into()));
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|a| table[e][a] == a && table[a][e] == a))
            .ok_or_else(|| Error::GroupTable("no identity".into()))?;
        let mut inverse = vec![0; n];
        for a in 0..n {
            inverse[a] = (0..n)
                .find(|&b| table[a][b] == identity && table[b][a] == identity)
                .ok_or_else(|| Error::GroupTable(format!("element {} has no inverse", labels[a])))?;
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if table[table[a][b]][c] != table[a][table[b][c]] {
                        return Err(Error::GroupTable(format!(
                            "not associative at ({}, {}, {})",
                            labels[a], labels[b], labels[c]
                        )));
                    }
                }
            }
        }
        let kind = if n == 1 { BackendKind::Scalar } else { BackendKind::FiniteGroup };
        Ok(Arc::new(AlgebraBackend { kind, name: name.into(), labels, table, identity, inverse }))
    }

    /// `Z/m` with generator `g`; labels `e, g, g^2, ...`.
    pub fn cyclic(m: usize) -> Result<Backend> {
        if m == 0 || m > 64 {
            return Err(Error::GroupTable(format!("cyclic order {m} outside 1..=64")));
        }
        let labels = (0..m).map(cyclic_label).collect();
        let table = (0..m).map(|a| (0..m).map(|b| (a + b) % m).collect()).collect();
        Self::from_table(&format!("cyclic:{m}"), labels, table)
    }

    /// `Z/m x Z/m` with generators `a = (1,0)` and `b = (0,1)`.
    pub fn cyclic_square(m: usize) -> Result<Backend> {
        if m == 0 || m * m > 64 {
            return Err(Error::GroupTable(format!("Z/{m} x Z/{m} has order above 64")));
        }
        let idx = |i: usize, j: usize| i * m + j;
        let mut labels = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                labels.push(format!("({i},{j})"));
            }
        }
        let mut table = vec![vec![0; m * m]; m * m];
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    for l in 0..m {
                        table[idx(i, j)][idx(k, l)] = idx((i + k) % m, (j + l) % m);
                    }
                }
            }
        }
        Self::from_table(&format!("cyclic2:{m}"), labels, table)
    }

    /// Symmetric group on three letters, as permutations composed right to left.
    pub fn symmetric3() -> Backend {
        let perms: [[usize; 3]; 6] = [[0, 1, 2], [1, 0, 2], [0, 2, 1], [2, 1, 0], [1, 2, 0], [2, 0, 1]];
        let labels = ["e", "(12)", "(23)", "(13)", "(123)", "(132)"];
        let find = |p: [usize; 3]| perms.iter().position(|q| *q == p).unwrap();
        let table = (0..6)
            .map(|a| {
                (0..6)
                    .map(|b| {
                        let (pa, pb) = (perms[a], perms[b]);
                        find([pa[pb[0]], pa[pb[1]], pa[pb[2]]])
                    })
                    .collect()
            })
            .collect();
        Self::from_table("symmetric3", labels.iter().map(|s| s.to_string()).collect(), table)
            .expect("S3 table is a group")
    }

    /// Quaternion group `{±1, ±i, ±j, ±k}`.
    pub fn quaternion8() -> Backend {
        // unit (0..4 = 1,i,j,k) and sign bit
        let labels = ["1", "-1", "i", "-i", "j", "-j", "k", "-k"];
        let decode = |x: usize| (x / 2, x % 2 == 1);
        let encode = |u: usize, neg: bool| 2 * u + usize::from(neg);
        // unit products: (unit, negate)
        let unit_mul = |a: usize, b: usize| -> (usize, bool) {
            match (a, b) {
                (0, x) | (x, 0) => (x, false),
                (1, 1) | (2, 2) | (3, 3) => (0, true),
                (1, 2) => (3, false),
                (2, 1) => (3, true),
                (2, 3) => (1, false),
                (3, 2) => (1, true),
                (3, 1) => (2, false),
                (1, 3) => (2, true),
                _ => unreachable!(),
            }
        };
        let table = (0..8)
            .map(|a| {
                (0..8)
                    .map(|b| {
                        let ((ua, na), (ub, nb)) = (decode(a), decode(b));
                        let (u, n) = unit_mul(ua, ub);
                        encode(u, n ^ na ^ nb)
                    })
                    .collect()
            })
            .collect();
        Self::from_table("quaternion8", labels.iter().map(|s| s.to_string()).collect(), table)
            .expect("Q8 table is a group")
    }

    /// Parse a backend name: `scalar`, `cyclic:m`, `cyclic2:m`, `symmetric3`, `quaternion8`.
    pub fn named(name: &str) -> Result<Backend> {
        let parse_m = |s: &str| -> Result<usize> {
            s.parse().map_err(|_| Error::Parameter(format!("bad group order in {name:?}")))
        };
        match name {
            "scalar" => Ok(Self::scalar()),
            "symmetric3" => Ok(Self::symmetric3()),
            "quaternion8" => Ok(Self::quaternion8()),
            _ => {
                if let Some(m) = name.strip_prefix("cyclic2:") {
                    Self::cyclic_square(parse_m(m)?)
                } else if let Some(m) = name.strip_prefix("cyclic:") {
                    Self::cyclic(parse_m(m)?)
                } else {
                    Err(Error::Parameter(format!("unknown backend {name:?}")))
                }
            }
        }
    }

    pub fn kind(&self) -> BackendKind {
        self.kind
    }
    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn order(&self) -> usize {
        self.labels.len()
    }
    pub fn identity(&self) -> usize {
        self.identity
    }
    pub fn labels(&self) -> &[String] {
        &self.labels
    }
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }
    pub fn inv(&self, a: usize) -> usize {
        self.inverse[a]
    }
    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::Lookup(format!("no group element {label:?} in {}", self.name)))
    }
    pub fn table(&self) -> &[Vec<usize>] {
        &self.table
    }
}

fn cyclic_label(k: usize) -> String {
    match k {
        0 => "e".into(),
        1 => "g".into(),
        _ => format!("g^{k}"),
    }
}

pub fn same_backend(a: &Backend, b: &Backend) -> bool {
    Arc::ptr_eq(a, b) || a == b
}
