//! Node covariates, dyad outcomes and the feature recipe that turns node
//! attributes into dyad regressors.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

/// Numeric node attributes keyed by a string id.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeTable {
    pub ids: Vec<String>,
    pub columns: Vec<String>,
    /// Row-major `n x columns.len()`.
    pub values: Vec<f64>,
}

impl NodeTable {
    pub fn new(ids: Vec<String>, columns: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if values.len() != ids.len() * columns.len() {
            return Err(Error::Config(format!(
                "{} values for {} nodes and {} columns",
                values.len(),
                ids.len(),
                columns.len()
            )));
        }
        Ok(NodeTable { ids, columns, values })
    }

    /// Nodes labelled `0..n` with the given columns.
    pub fn from_columns(columns: &[(&str, Vec<f64>)]) -> Result<Self> {
        let n = columns.first().map_or(0, |c| c.1.len());
        if columns.iter().any(|c| c.1.len() != n) {
            return Err(Error::Config("node columns differ in length".into()));
        }
        let values = (0..n)
            .flat_map(|i| columns.iter().map(move |c| c.1[i]))
            .collect();
        NodeTable::new(
            (0..n).map(|i| i.to_string()).collect(),
            columns.iter().map(|c| c.0.to_string()).collect(),
            values,
        )
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Config(format!("no node column named '{name}'")))
    }

    pub fn get(&self, i: usize, col: usize) -> f64 {
        self.values[i * self.columns.len() + col]
    }

    /// Reads a CSV with a header row and an `id` column; other columns must
    /// be numeric.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = rdr
            .headers()
            .map_err(|e| Error::Config(format!("node file header: {e}")))?
            .clone();
        let id_col = header
            .iter()
            .position(|h| h == "id")
            .ok_or_else(|| Error::Config("node file needs an 'id' column".into()))?;
        let columns: Vec<String> = header
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != id_col)
            .map(|(_, h)| h.to_string())
            .collect();
        let mut ids = Vec::new();
        let mut values = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let line = row + 2;
            let rec = rec.map_err(|e| Error::MalformedLine {
                line,
                text: e.to_string(),
            })?;
            for (k, field) in rec.iter().enumerate() {
                if k == id_col {
                    ids.push(field.to_string());
                } else {
                    values.push(field.parse::<f64>().map_err(|_| Error::MalformedLine {
                        line,
                        text: format!("non-numeric value {field:?}"),
                    })?);
                }
            }
        }
        NodeTable::new(ids, columns, values)
    }

    fn index(&self) -> HashMap<&str, usize> {
        self.ids.iter().enumerate().map(|(k, s)| (s.as_str(), k)).collect()
    }
}

/// Reads `i,j,y` outcome rows (header optional), resolving ids against the
/// node table.
pub fn parse_outcomes(text: &str, nodes: &NodeTable) -> Result<Vec<(usize, usize, f64)>> {
    let index = nodes.index();
    let mut out = Vec::new();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    for (row, rec) in rdr.records().enumerate() {
        let line = row + 1;
        let rec = rec.map_err(|e| Error::MalformedLine {
            line,
            text: e.to_string(),
        })?;
        if rec.is_empty() || rec.get(0).is_some_and(|f| f.starts_with('#')) {
            continue;
        }
        if rec.len() != 3 {
            return Err(Error::MalformedLine {
                line,
                text: rec.iter().collect::<Vec<_>>().join(","),
            });
        }
        if line == 1 && rec.get(2).is_some_and(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        let node = |f: &str| {
            index.get(f).copied().ok_or_else(|| Error::MalformedLine {
                line,
                text: format!("unknown node id {f:?}"),
            })
        };
        let (i, j) = (node(&rec[0])?, node(&rec[1])?);
        if i == j {
            return Err(Error::SelfLoop {
                line,
                node: rec[0].to_string(),
            });
        }
        let y = rec[2].parse::<f64>().map_err(|_| Error::MalformedLine {
            line,
            text: format!("non-numeric outcome {:?}", &rec[2]),
        })?;
        out.push((i, j, y));
    }
    Ok(out)
}

/// One regressor built from the attributes of the two dyad members.
#[derive(Clone, Debug, PartialEq)]
pub enum Term {
    Const,
    /// Attribute of the sender `i`.
    Send(String),
    /// Attribute of the receiver `j`.
    Recv(String),
    AbsDiff(String),
    /// `x_i * x_j`.
    Prod(String),
    /// `x_i + x_j`.
    Sum(String),
    /// `1(x_i == x_j)`.
    Same(String),
    /// Log great-circle distance in km from latitude/longitude in degrees.
    LogDist { lat: String, lon: String },
}

impl Term {
    /// Unchanged when the two dyad members swap roles.
    pub fn is_symmetric(&self) -> bool {
        !matches!(self, Term::Send(_) | Term::Recv(_))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const => write!(f, "const"),
            Term::Send(c) => write!(f, "send:{c}"),
            Term::Recv(c) => write!(f, "recv:{c}"),
            Term::AbsDiff(c) => write!(f, "absdiff:{c}"),
            Term::Prod(c) => write!(f, "prod:{c}"),
            Term::Sum(c) => write!(f, "sum:{c}"),
            Term::Same(c) => write!(f, "same:{c}"),
            Term::LogDist { lat, lon } => write!(f, "logdist:{lat},{lon}"),
        }
    }
}

impl FromStr for Term {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "const" {
            return Ok(Term::Const);
        }
        let (kind, arg) = s
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("bad recipe term '{s}'")))?;
        let arg = arg.trim().to_string();
        if arg.is_empty() {
            return Err(Error::Config(format!("recipe term '{s}' names no column")));
        }
        Ok(match kind.trim() {
            "send" => Term::Send(arg),
            "recv" => Term::Recv(arg),
            "absdiff" => Term::AbsDiff(arg),
            "prod" => Term::Prod(arg),
            "sum" => Term::Sum(arg),
            "same" => Term::Same(arg),
            "logdist" => {
                let (lat, lon) = arg
                    .split_once(',')
                    .ok_or_else(|| Error::Config("logdist needs 'lat,lon'".into()))?;
                Term::LogDist {
                    lat: lat.trim().into(),
                    lon: lon.trim().into(),
                }
            }
            other => return Err(Error::Config(format!("unknown recipe term kind '{other}'"))),
        })
    }
}

/// Ordered list of regressors.
#[derive(Clone, Debug, PartialEq)]
pub struct Recipe(pub Vec<Term>);

impl Recipe {
    /// One term per line (or separated by `;`); `#` starts a comment.
    /// `logdist:lat,lon` keeps its comma.
    pub fn parse(text: &str) -> Result<Self> {
        let terms = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(|l| l.split(';'))
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(str::parse)
            .collect::<Result<Vec<Term>>>()?;
        if terms.is_empty() {
            return Err(Error::Config("recipe has no terms".into()));
        }
        Ok(Recipe(terms))
    }

    pub fn names(&self) -> Vec<String> {
        self.0.iter().map(Term::to_string).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        self.0.iter().all(Term::is_symmetric)
    }

    /// Builds the regressor row `w(X_i, X_j)`.
    pub fn row(&self, nodes: &NodeTable, i: usize, j: usize) -> Result<Vec<f64>> {
        self.0
            .iter()
            .map(|t| {
                let col = |c: &str| nodes.column(c);
                let v = match t {
                    Term::Const => 1.0,
                    Term::Send(c) => nodes.get(i, col(c)?),
                    Term::Recv(c) => nodes.get(j, col(c)?),
                    Term::AbsDiff(c) => {
                        let k = col(c)?;
                        (nodes.get(i, k) - nodes.get(j, k)).abs()
                    }
                    Term::Prod(c) => {
                        let k = col(c)?;
                        nodes.get(i, k) * nodes.get(j, k)
                    }
                    Term::Sum(c) => {
                        let k = col(c)?;
                        nodes.get(i, k) + nodes.get(j, k)
                    }
                    Term::Same(c) => {
                        let k = col(c)?;
                        (nodes.get(i, k) == nodes.get(j, k)) as u8 as f64
                    }
                    Term::LogDist { lat, lon } => {
                        let (a, b) = (col(lat)?, col(lon)?);
                        let d = great_circle_km(
                            (nodes.get(i, a), nodes.get(i, b)),
                            (nodes.get(j, a), nodes.get(j, b)),
                        );
                        d.ln()
                    }
                };
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::UndefinedInput(format!(
                        "term {t} is not finite for dyad ({i}, {j})"
                    )))
                }
            })
            .collect()
    }
}

/// Haversine distance on a sphere of radius 6371 km.
pub fn great_circle_km(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (p1, p2) = (a.0.to_radians(), b.0.to_radians());
    let dp = p2 - p1;
    let dl = (b.1 - a.1).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * 6371.0 * h.sqrt().asin()
}

/// Dyad-level outcomes with their regressors.
///
/// Directed data hold ordered dyads `(i, j)`; undirected data hold each
/// dyad once with `i < j`. Dyads need not all be observed.
#[derive(Clone, Debug)]
pub struct DyadicDataset {
    n: usize,
    directed: bool,
    dyads: Vec<(usize, usize)>,
    y: DVector<f64>,
    w: DMatrix<f64>,
    names: Vec<String>,
    lookup: Vec<u32>,
}

const ABSENT: u32 = u32::MAX;

impl DyadicDataset {
    pub fn new(
        n: usize,
        directed: bool,
        dyads: Vec<(usize, usize)>,
        y: Vec<f64>,
        w: DMatrix<f64>,
        names: Vec<String>,
    ) -> Result<Self> {
        if y.len() != dyads.len() || w.nrows() != dyads.len() {
            return Err(Error::Config("outcome, regressor and dyad counts differ".into()));
        }
        if names.len() != w.ncols() {
            return Err(Error::Config("one name per regressor column required".into()));
        }
        if n < 2 {
            return Err(Error::UndefinedInput("dyadic data need at least 2 nodes".into()));
        }
        if let Some(k) = w.iter().position(|x| !x.is_finite()) {
            return Err(Error::UndefinedInput(format!(
                "non-finite regressor in dyad {:?}",
                dyads[k % dyads.len()]
            )));
        }
        if y.iter().any(|x| !x.is_finite()) {
            return Err(Error::UndefinedInput("non-finite outcome".into()));
        }
        let mut lookup = vec![ABSENT; n * n];
        let mut canon = Vec::with_capacity(dyads.len());
        for (r, &(i, j)) in dyads.iter().enumerate() {
            for v in [i, j] {
                if v >= n {
                    return Err(Error::VertexOutOfRange { vertex: v, n });
                }
            }
            if i == j {
                return Err(Error::UndefinedInput(format!("self-dyad ({i}, {i})")));
            }
            let (a, b) = if directed || i < j { (i, j) } else { (j, i) };
            if lookup[a * n + b] != ABSENT {
                return Err(Error::UndefinedInput(format!("dyad ({a}, {b}) repeated")));
            }
            lookup[a * n + b] = r as u32;
            if !directed {
                lookup[b * n + a] = r as u32;
            }
            canon.push((a, b));
        }
        Ok(DyadicDataset {
            n,
            directed,
            dyads: canon,
            y: DVector::from_vec(y),
            w,
            names,
            lookup,
        })
    }

    /// Builds regressors from node attributes. For undirected data the
    /// outcome of `(i, j)` and `(j, i)` must agree; only `i < j` is kept.
    pub fn from_nodes(
        nodes: &NodeTable,
        outcomes: &[(usize, usize, f64)],
        recipe: &Recipe,
        directed: bool,
    ) -> Result<Self> {
        let n = nodes.n();
        let mut kept: Vec<(usize, usize, f64)> = Vec::with_capacity(outcomes.len());
        if directed {
            kept.extend_from_slice(outcomes);
        } else {
            let mut seen: HashMap<(usize, usize), f64> = HashMap::new();
            for &(i, j, y) in outcomes {
                let key = (i.min(j), i.max(j));
                match seen.get(&key) {
                    Some(&prev) if prev != y => {
                        return Err(Error::UndefinedInput(format!(
                            "undirected outcomes for ({}, {}) disagree",
                            key.0, key.1
                        )))
                    }
                    Some(_) => {}
                    None => {
                        seen.insert(key, y);
                        kept.push((key.0, key.1, y));
                    }
                }
            }
        }
        let k = recipe.0.len();
        let mut w = DMatrix::zeros(kept.len(), k);
        for (r, &(i, j, _)) in kept.iter().enumerate() {
            let row = recipe.row(nodes, i, j)?;
            for (c, v) in row.into_iter().enumerate() {
                w[(r, c)] = v;
            }
        }
        DyadicDataset::new(
            n,
            directed,
            kept.iter().map(|&(i, j, _)| (i, j)).collect(),
            kept.iter().map(|d| d.2).collect(),
            w,
            recipe.names(),
        )
    }

    /// Complete dyad census from closures for outcome and regressors.
    pub fn complete(
        n: usize,
        directed: bool,
        names: Vec<String>,
        mut f: impl FnMut(usize, usize) -> (f64, Vec<f64>),
    ) -> Result<Self> {
        let k = names.len();
        let mut dyads = Vec::new();
        let mut y = Vec::new();
        let mut w = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i == j || (!directed && j < i) {
                    continue;
                }
                let (yy, ww) = f(i, j);
                if ww.len() != k {
                    return Err(Error::Config("regressor row length mismatch".into()));
                }
                dyads.push((i, j));
                y.push(yy);
                w.extend(ww);
            }
        }
        let rows = dyads.len();
        DyadicDataset::new(n, directed, dyads, y, DMatrix::from_row_slice(rows, k, &w), names)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn len(&self) -> usize {
        self.dyads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dyads.is_empty()
    }

    pub fn dyads(&self) -> &[(usize, usize)] {
        &self.dyads
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn dim(&self) -> usize {
        self.w.ncols()
    }

    /// Row holding dyad `(i, j)`; for undirected data either order works.
    pub fn row_of(&self, i: usize, j: usize) -> Option<usize> {
        match self.lookup[i * self.n + j] {
            ABSENT => None,
            r => Some(r as usize),
        }
    }

    /// Dyads possible but absent from the data.
    pub fn missing(&self) -> usize {
        let total = if self.directed {
            self.n * (self.n - 1)
        } else {
            self.n * (self.n - 1) / 2
        };
        total - self.dyads.len()
    }

    /// Subset of rows, relabelled onto a new node set.
    pub(crate) fn select_rows(
        &self,
        n: usize,
        dyads: Vec<(usize, usize)>,
        rows: &[usize],
    ) -> Result<Self> {
        let y = rows.iter().map(|&r| self.y[r]).collect();
        let w = DMatrix::from_fn(rows.len(), self.dim(), |a, c| self.w[(rows[a], c)]);
        DyadicDataset::new(n, self.directed, dyads, y, w, self.names.clone())
    }

    /// Relabels nodes by `perm` (new label of old node `v` is `perm[v]`).
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let dyads = self.dyads.iter().map(|&(i, j)| (perm[i], perm[j])).collect();
        let rows: Vec<usize> = (0..self.len()).collect();
        self.select_rows(self.n, dyads, &rows)
    }
}
