use super::{Formula, Literal};

/// Clause-literal incidence matrix in coordinate form.
///
/// Row `r` is a clause; for the compacted variable with index `i` (0-based) the
/// positive literal sits at column `i` and the negative literal at column
/// `num_vars + i`. `var_map[i]` is the original (1-based) variable behind
/// compacted index `i`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SparseGraph {
    pub num_clauses: usize,
    pub num_vars: usize,
    pub edges: Vec<(u32, u32)>,
    pub var_map: Vec<u32>,
}

impl SparseGraph {
    pub fn num_literals(&self) -> usize {
        2 * self.num_vars
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Column of a literal over compacted variable `idx` (0-based).
    pub fn column(num_vars: usize, idx: usize, sign: bool) -> u32 {
        if sign {
            idx as u32
        } else {
            (num_vars + idx) as u32
        }
    }

    /// Column of the negation of the literal at `col`.
    pub fn negated_column(&self, col: usize) -> usize {
        if col < self.num_vars {
            col + self.num_vars
        } else {
            col - self.num_vars
        }
    }

    /// Checks index bounds and duplicate-freedom.
    pub fn validate(&self) -> crate::Result<()> {
        if self.var_map.len() != self.num_vars {
            return Err(crate::Error::Shape(format!(
                "var_map has {} entries for {} variables",
                self.var_map.len(),
                self.num_vars
            )));
        }
        let mut sorted = self.edges.clone();
        sorted.sort_unstable();
        for w in sorted.windows(2) {
            if w[0] == w[1] {
                return Err(crate::Error::Shape(format!("duplicate edge {:?}", w[0])));
            }
        }
        for &(r, c) in &self.edges {
            if r as usize >= self.num_clauses || c as usize >= self.num_literals() {
                return Err(crate::Error::Shape(format!(
                    "edge ({r}, {c}) outside {}x{}",
                    self.num_clauses,
                    self.num_literals()
                )));
            }
        }
        Ok(())
    }

    /// Rows of the graph as DIMACS-style clauses over compacted variables.
    pub fn rows(&self) -> Vec<Vec<Literal>> {
        let mut rows = vec![Vec::new(); self.num_clauses];
        for &(r, c) in &self.edges {
            let c = c as usize;
            let lit = if c < self.num_vars {
                Literal::pos(c as u32 + 1)
            } else {
                Literal::neg((c - self.num_vars) as u32 + 1)
            };
            rows[r as usize].push(lit);
        }
        rows
    }

    /// Edge-list dump: a header line followed by one `row col` pair per line.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!(
            "c clauses {} vars {} edges {}\nc var_map",
            self.num_clauses,
            self.num_vars,
            self.edges.len()
        );
        for v in &self.var_map {
            out.push(' ');
            out.push_str(&v.to_string());
        }
        out.push('\n');
        for (r, c) in &self.edges {
            out.push_str(&format!("{r} {c}\n"));
        }
        out
    }
}

/// Graph of a formula with one edge per literal occurrence and the identity var_map.
pub fn clause_literal_graph(f: &Formula) -> SparseGraph {
    let n = f.num_vars as usize;
    let mut edges = Vec::with_capacity(f.num_literal_occurrences());
    for (row, clause) in f.clauses.iter().enumerate() {
        for lit in &clause.literals {
            edges.push((
                row as u32,
                SparseGraph::column(n, lit.var as usize - 1, lit.sign),
            ));
        }
    }
    SparseGraph {
        num_clauses: f.clauses.len(),
        num_vars: n,
        edges,
        var_map: (1..=f.num_vars).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::random_ksat;

    #[test]
    fn column_convention() {
        let g = clause_literal_graph(&Formula::from_dimacs_clauses(&[&[1, -2]]));
        assert_eq!(g.edges, vec![(0, 0), (0, 3)]);
        let g = clause_literal_graph(&Formula::from_dimacs_clauses(&[&[1], &[-1]]));
        assert_eq!(g.edges, vec![(0, 0), (1, 1)]);
        assert_eq!(g.var_map, vec![1]);
        assert_eq!(g.negated_column(0), 1);
    }

    #[test]
    fn edge_count_is_occurrences() {
        let f = random_ksat(30, 120, 3, 4).unwrap();
        let g = clause_literal_graph(&f);
        assert_eq!(g.num_edges(), 3 * 120);
        g.validate().unwrap();
        let rows = g.rows();
        for (row, c) in rows.iter().zip(&f.clauses) {
            assert_eq!(row, &c.literals);
        }
    }
}
