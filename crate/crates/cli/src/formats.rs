//! Plain-text data files.
//!
//! Lattice: a header line `rows cols`, then `rows` lines of `cols` spins, each
//! `1` or `-1`. Graph: a header line `n <nodes>`, then one `i j` line per edge,
//! 1-indexed. In both, `#` starts a comment and blank lines are ignored.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use grf_evidence::ergm::{graph_stats, UndirectedGraph};
use grf_evidence::ising::{suff_stats, LatticeConfig, NeighborhoodOrder};
use grf_evidence::{ModelFamily, ModelSpec};

#[derive(Clone, Debug, PartialEq)]
pub enum Data {
    Lattice(LatticeConfig),
    Graph(UndirectedGraph),
}

impl Data {
    /// Sufficient statistics of this dataset under `spec`.
    pub fn stats(&self, spec: &ModelSpec) -> Result<Vec<f64>> {
        match (self, spec.family()) {
            (Data::Lattice(y), ModelFamily::IsingFirstOrder | ModelFamily::IsingSecondOrder) => {
                if (y.rows(), y.cols()) != lattice_dims(spec) {
                    bail!(
                        "lattice is {}x{}, model expects {:?}",
                        y.rows(),
                        y.cols(),
                        lattice_dims(spec)
                    );
                }
                Ok(suff_stats(y, NeighborhoodOrder::of(spec)?).0)
            }
            (Data::Graph(g), ModelFamily::ErgmEdges | ModelFamily::ErgmEdgesTwoStars) => {
                Ok(graph_stats(g, spec)?.0)
            }
            _ => bail!("data file does not match the model family"),
        }
    }

    pub fn to_text(&self) -> String {
        match self {
            Data::Lattice(y) => format_lattice(y),
            Data::Graph(g) => format_edge_list(g),
        }
    }
}

fn lattice_dims(spec: &ModelSpec) -> (usize, usize) {
    match spec.domain() {
        grf_evidence::Domain::Lattice { rows, cols } => (rows, cols),
        grf_evidence::Domain::Graph { .. } => (0, 0),
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

pub fn parse_lattice(text: &str) -> Result<LatticeConfig> {
    let mut lines = content_lines(text);
    let (ln, header) = lines.next().context("empty lattice file")?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(str::parse)
        .collect::<Result<_, _>>()
        .with_context(|| format!("line {ln}: bad header"))?;
    let [rows, cols] = dims[..] else {
        bail!("line {ln}: header must be `rows cols`");
    };
    let mut spins = vec![0i8; rows * cols];
    let mut r = 0;
    for (ln, line) in lines {
        if r == rows {
            bail!("line {ln}: more than {rows} rows");
        }
        let row: Vec<i8> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .with_context(|| format!("line {ln}: bad spin"))?;
        if row.len() != cols {
            bail!("line {ln}: expected {cols} spins, found {}", row.len());
        }
        for (c, s) in row.into_iter().enumerate() {
            // Column-major site order, matching the lattice type.
            spins[c * rows + r] = s;
        }
        r += 1;
    }
    if r != rows {
        bail!("expected {rows} rows, found {r}");
    }
    Ok(LatticeConfig::new(rows, cols, spins)?)
}

pub fn format_lattice(y: &LatticeConfig) -> String {
    let mut s = format!("{} {}\n", y.rows(), y.cols());
    for r in 0..y.rows() {
        let row: Vec<String> = (0..y.cols()).map(|c| y.get(r, c).to_string()).collect();
        let _ = writeln!(s, "{}", row.join(" "));
    }
    s
}

pub fn parse_edge_list(text: &str) -> Result<UndirectedGraph> {
    let mut lines = content_lines(text);
    let (ln, header) = lines.next().context("empty edge-list file")?;
    let n: usize = match header.split_whitespace().collect::<Vec<_>>()[..] {
        ["n", n] => n
            .parse()
            .with_context(|| format!("line {ln}: bad node count"))?,
        _ => bail!("line {ln}: header must be `n <nodes>`"),
    };
    let mut edges = Vec::new();
    for (ln, line) in lines {
        let ij: Vec<usize> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .with_context(|| format!("line {ln}: bad edge"))?;
        let [i, j] = ij[..] else {
            bail!("line {ln}: an edge is two node numbers");
        };
        if i == 0 || j == 0 || i > n || j > n {
            bail!("line {ln}: node numbers run from 1 to {n}");
        }
        edges.push((i - 1, j - 1));
    }
    UndirectedGraph::from_edges(n, &edges).context("invalid edge list")
}

pub fn format_edge_list(g: &UndirectedGraph) -> String {
    let mut s = format!("n {}\n", g.node_count());
    for (i, j) in g.edges() {
        let _ = writeln!(s, "{} {}", i + 1, j + 1);
    }
    s
}

/// Reads a lattice or a graph, told apart by the header.
pub fn read_data(path: &Path) -> Result<Data> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let is_graph = content_lines(&text)
        .next()
        .is_some_and(|(_, l)| l.starts_with('n'));
    let data = if is_graph {
        Data::Graph(parse_edge_list(&text)?)
    } else {
        Data::Lattice(parse_lattice(&text)?)
    };
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_round_trip() {
        let text = "# comment\n2 3\n1 -1 1\n-1 -1 1\n";
        let y = parse_lattice(text).unwrap();
        assert_eq!(y.get(0, 1), -1);
        assert_eq!(y.get(1, 2), 1);
        assert_eq!(parse_lattice(&format_lattice(&y)).unwrap(), y);
        assert!(parse_lattice("2 2\n1 1\n").is_err());
        assert!(parse_lattice("2 2\n1 1\n1 2\n").is_err());
        assert!(parse_lattice("2 2\n1 1 1\n1 1\n").is_err());
    }

    #[test]
    fn edge_list_round_trip() {
        let g = parse_edge_list("n 4\n1 2\n2 3 # tie\n\n3 4\n").unwrap();
        assert_eq!(g.edge_count(), 3);
        assert!(g.has_edge(0, 1));
        assert_eq!(parse_edge_list(&format_edge_list(&g)).unwrap(), g);
        assert!(parse_edge_list("n 3\n1 4\n").is_err());
        assert!(parse_edge_list("n 3\n0 1\n").is_err());
        assert!(parse_edge_list("3\n1 2\n").is_err());
    }

    #[test]
    fn stats_check_the_model() {
        let y = Data::Lattice(parse_lattice("2 2\n1 1\n1 1\n").unwrap());
        assert_eq!(
            y.stats(&ModelSpec::ising_second_order(2, 2).unwrap())
                .unwrap(),
            vec![4.0, 2.0]
        );
        assert!(y
            .stats(&ModelSpec::ising_first_order(3, 3).unwrap())
            .is_err());
        assert!(y.stats(&ModelSpec::ergm_edges(4).unwrap()).is_err());
    }
}
