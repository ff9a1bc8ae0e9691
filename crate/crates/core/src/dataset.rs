//! Tabular input, design-matrix construction, standardization and fold splits.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use ndarray::{s, Array1, Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::rng;

pub const INTERCEPT: &str = "(Intercept)";

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<f64>),
    /// Level labels in first-appearance order, and one code per row.
    Categorical { levels: Vec<String>, codes: Vec<usize> },
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Categorical { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row labels as text (numbers printed in shortest form).
    pub fn labels(&self) -> Vec<String> {
        match self {
            Column::Numeric(v) => v.iter().map(|x| x.to_string()).collect(),
            Column::Categorical { levels, codes } => {
                codes.iter().map(|&c| levels[c].clone()).collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataTable {
    names: Vec<String>,
    columns: Vec<Column>,
    n_rows: usize,
}

impl DataTable {
    pub fn new(names: Vec<String>, columns: Vec<Column>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::Spec("one name per column required".into()));
        }
        let n_rows = columns.first().map_or(0, Column::len);
        if columns.iter().any(|c| c.len() != n_rows) {
            return Err(Error::Spec("columns differ in length".into()));
        }
        for (i, name) in names.iter().enumerate() {
            if names[..i].contains(name) {
                return Err(Error::Spec(format!("duplicate column name `{name}`")));
            }
        }
        Ok(Self { names, columns, n_rows })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| &self.columns[i])
            .ok_or_else(|| Error::Spec(format!("no column named `{name}`")))
    }

    pub fn numeric(&self, name: &str) -> Result<&[f64]> {
        match self.column(name)? {
            Column::Numeric(v) => Ok(v),
            Column::Categorical { .. } => {
                Err(Error::Spec(format!("column `{name}` is not numeric")))
            }
        }
    }
}

/// Reads a CSV file with a header row.
pub fn load_csv(path: impl AsRef<Path>) -> Result<DataTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_csv(file)
}

/// Parses CSV text. Rows in errors are 1-based data rows (the header is row 0).
pub fn read_csv<R: Read>(reader: R) -> Result<DataTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| ingest(0, "", e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(ingest(0, "", "missing header".into()));
    }
    for (i, h) in header.iter().enumerate() {
        if h.is_empty() {
            return Err(ingest(0, &format!("#{}", i + 1), "empty column name".into()));
        }
        if header[..i].contains(h) {
            return Err(ingest(0, h, "duplicate header".into()));
        }
    }
    let mut cells: Vec<Vec<String>> = vec![Vec::new(); header.len()];
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 1;
        let rec = rec.map_err(|e| ingest(row, "", e.to_string()))?;
        for (j, name) in header.iter().enumerate() {
            match rec.get(j) {
                Some(v) if !v.is_empty() => cells[j].push(v.to_string()),
                _ => return Err(ingest(row, name, "missing value".into())),
            }
        }
    }
    let columns = cells.into_iter().map(parse_column).collect();
    DataTable::new(header, columns)
}

fn ingest(row: usize, col: &str, msg: String) -> Error {
    Error::Ingest { row, col: col.to_string(), msg }
}

fn parse_column(raw: Vec<String>) -> Column {
    let parsed: Option<Vec<f64>> = raw
        .iter()
        .map(|s| s.parse::<f64>().ok().filter(|v| v.is_finite()))
        .collect();
    if let Some(v) = parsed {
        return Column::Numeric(v);
    }
    let (levels, codes) = categorize(raw);
    Column::Categorical { levels, codes }
}

fn categorize(raw: Vec<String>) -> (Vec<String>, Vec<usize>) {
    let mut levels: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let codes = raw
        .into_iter()
        .map(|s| {
            *index.entry(s.clone()).or_insert_with(|| {
                levels.push(s);
                levels.len() - 1
            })
        })
        .collect();
    (levels, codes)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Numeric(String),
    /// Treatment coding of a categorical column; `None` uses the first level.
    Dummy { name: String, reference: Option<String> },
    Interaction(Box<Term>, Box<Term>),
}

impl Term {
    pub fn numeric(name: &str) -> Self {
        Term::Numeric(name.to_string())
    }

    pub fn dummy(name: &str, reference: Option<&str>) -> Self {
        Term::Dummy { name: name.to_string(), reference: reference.map(str::to_string) }
    }

    pub fn interaction(a: Term, b: Term) -> Self {
        Term::Interaction(Box::new(a), Box::new(b))
    }

    fn mentions(&self, col: &str) -> bool {
        match self {
            Term::Numeric(n) | Term::Dummy { name: n, .. } => n == col,
            Term::Interaction(a, b) => a.mentions(col) || b.mentions(col),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignSpec {
    pub response: String,
    pub terms: Vec<Term>,
    pub intercept: bool,
    pub weights: Option<String>,
    pub cluster: Option<String>,
    pub event: Option<String>,
}

impl DesignSpec {
    pub fn new(response: &str, terms: Vec<Term>) -> Self {
        Self {
            response: response.to_string(),
            terms,
            intercept: true,
            weights: None,
            cluster: None,
            event: None,
        }
    }
}

/// Response, design and optional per-row metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelMatrix {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
    pub names: Vec<String>,
    pub weights: Option<Array1<f64>>,
    pub cluster: Option<Vec<String>>,
    pub event: Option<Array1<f64>>,
}

impl ModelMatrix {
    /// Plain design; columns are named `x1..xp` unless the first is all ones,
    /// which is named as the intercept.
    pub fn new(x: Array2<f64>, y: Array1<f64>) -> Self {
        let p = x.ncols();
        let first_ones = p > 0 && x.column(0).iter().all(|&v| v == 1.0);
        let names = (0..p)
            .map(|j| {
                if j == 0 && first_ones {
                    INTERCEPT.to_string()
                } else {
                    format!("x{j}")
                }
            })
            .collect();
        Self::with_names(x, y, names)
    }

    pub fn with_names(x: Array2<f64>, y: Array1<f64>, names: Vec<String>) -> Self {
        Self { x, y, names, weights: None, cluster: None, event: None }
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn has_intercept(&self) -> bool {
        self.names.first().is_some_and(|n| n == INTERCEPT)
    }

    /// Design without the intercept column.
    pub fn covariates(&self) -> ArrayView2<'_, f64> {
        let start = usize::from(self.has_intercept());
        self.x.slice(s![.., start..])
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.names[usize::from(self.has_intercept())..]
    }

    /// Rows selected by index, metadata included.
    pub fn subset(&self, rows: &[usize]) -> ModelMatrix {
        ModelMatrix {
            x: self.x.select(ndarray::Axis(0), rows),
            y: self.y.select(ndarray::Axis(0), rows),
            names: self.names.clone(),
            weights: self.weights.as_ref().map(|w| w.select(ndarray::Axis(0), rows)),
            cluster: self
                .cluster
                .as_ref()
                .map(|c| rows.iter().map(|&i| c[i].clone()).collect()),
            event: self.event.as_ref().map(|e| e.select(ndarray::Axis(0), rows)),
        }
    }
}

struct Block {
    names: Vec<String>,
    cols: Vec<Vec<f64>>,
}

fn expand(table: &DataTable, term: &Term) -> Result<Block> {
    match term {
        Term::Numeric(name) => match table.column(name)? {
            Column::Numeric(v) => Ok(Block { names: vec![name.clone()], cols: vec![v.clone()] }),
            Column::Categorical { .. } => expand(table, &Term::dummy(name, None)),
        },
        Term::Dummy { name, reference } => {
            let (levels, codes) = match table.column(name)? {
                Column::Categorical { levels, codes } => (levels.clone(), codes.clone()),
                numeric => categorize(numeric.labels()),
            };
            let ref_idx = match reference {
                None => 0,
                Some(r) => levels.iter().position(|l| l == r).ok_or_else(|| {
                    Error::Spec(format!("reference level `{r}` not found in `{name}`"))
                })?,
            };
            let mut block = Block { names: Vec::new(), cols: Vec::new() };
            for (k, level) in levels.iter().enumerate() {
                if k == ref_idx {
                    continue;
                }
                block.names.push(format!("{name}{level}"));
                block
                    .cols
                    .push(codes.iter().map(|&c| if c == k { 1.0 } else { 0.0 }).collect());
            }
            Ok(block)
        }
        Term::Interaction(a, b) => {
            let ba = expand(table, a)?;
            let bb = expand(table, b)?;
            let mut block = Block { names: Vec::new(), cols: Vec::new() };
            for (na, ca) in ba.names.iter().zip(&ba.cols) {
                for (nb, cb) in bb.names.iter().zip(&bb.cols) {
                    block.names.push(format!("{na}:{nb}"));
                    block.cols.push(ca.iter().zip(cb).map(|(u, v)| u * v).collect());
                }
            }
            Ok(block)
        }
    }
}

/// Builds the design: intercept first, then each term in order.
pub fn build_design(table: &DataTable, spec: &DesignSpec) -> Result<ModelMatrix> {
    if spec.terms.iter().any(|t| t.mentions(&spec.response)) {
        return Err(Error::Spec(format!("response `{}` appears among the terms", spec.response)));
    }
    let n = table.n_rows();
    let y = Array1::from(table.numeric(&spec.response)?.to_vec());
    let mut names: Vec<String> = Vec::new();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    if spec.intercept {
        names.push(INTERCEPT.to_string());
        cols.push(vec![1.0; n]);
    }
    for term in &spec.terms {
        let block = expand(table, term)?;
        names.extend(block.names);
        cols.extend(block.cols);
    }
    for (i, name) in names.iter().enumerate() {
        if names[..i].contains(name) {
            return Err(Error::Spec(format!("duplicate design column `{name}`")));
        }
    }
    for (name, col) in names.iter().zip(&cols) {
        if col.iter().all(|&v| v == 0.0) {
            return Err(Error::DegenerateColumn(name.clone()));
        }
    }
    let x = Array2::from_shape_fn((n, cols.len()), |(i, j)| cols[j][i]);
    let mut mm = ModelMatrix::with_names(x, y, names);
    if let Some(w) = &spec.weights {
        let w = table.numeric(w)?;
        if let Some(i) = w.iter().position(|&v| v <= 0.0) {
            return Err(Error::Spec(format!("weight in row {} is not positive", i + 1)));
        }
        mm.weights = Some(Array1::from(w.to_vec()));
    }
    if let Some(c) = &spec.cluster {
        mm.cluster = Some(table.column(c)?.labels());
    }
    if let Some(e) = &spec.event {
        let e = table.numeric(e)?;
        if e.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::Spec("event indicator must be 0 or 1".into()));
        }
        mm.event = Some(Array1::from(e.to_vec()));
    }
    Ok(mm)
}

/// Column means and scales (divisor n) used to standardize a design.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    pub column_means: Array1<f64>,
    pub column_scales: Array1<f64>,
    pub response_mean: f64,
}

impl Standardization {
    /// Applies the stored centering and scaling to raw covariates.
    pub fn apply(&self, x: ArrayView2<f64>) -> Array2<f64> {
        (&x - &self.column_means) / &self.column_scales
    }

    /// Original-scale `(intercept, slopes)` from standardized coefficients.
    pub fn back_transform(&self, beta_std: &Array1<f64>) -> (f64, Array1<f64>) {
        let slopes = beta_std / &self.column_scales;
        let intercept = self.response_mean - slopes.dot(&self.column_means);
        (intercept, slopes)
    }
}

/// Centers and scales every non-intercept column and centers the response.
/// The intercept column is dropped.
pub fn standardize(mm: &ModelMatrix) -> Result<(ModelMatrix, Standardization)> {
    let xc = mm.covariates();
    let n = mm.n() as f64;
    let means = xc.mean_axis(ndarray::Axis(0)).unwrap_or_else(|| Array1::zeros(xc.ncols()));
    let mut scales = Array1::<f64>::zeros(xc.ncols());
    for (j, col) in xc.columns().into_iter().enumerate() {
        let m = means[j];
        let sd = (col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt();
        if !(sd >= 1e-12 * m.abs().max(1.0)) {
            return Err(Error::DegenerateColumn(mm.covariate_names()[j].clone()));
        }
        scales[j] = sd;
    }
    let y_mean = mm.y.mean().unwrap_or(0.0);
    let st = Standardization { column_means: means, column_scales: scales, response_mean: y_mean };
    let out = ModelMatrix {
        x: st.apply(xc),
        y: &mm.y - y_mean,
        names: mm.covariate_names().to_vec(),
        weights: mm.weights.clone(),
        cluster: mm.cluster.clone(),
        event: mm.event.clone(),
    };
    Ok((out, st))
}

/// Random balanced partition of `0..n` into `k` folds.
pub fn kfold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 || k > n {
        return Err(Error::Spec(format!("need 2 <= K <= n, got K={k}, n={n}")));
    }
    let perm = rng::permutation(&mut rng::seeded(seed), n);
    let mut folds = vec![Vec::with_capacity(n / k + 1); k];
    for (pos, i) in perm.into_iter().enumerate() {
        folds[pos % k].push(i);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(text: &str) -> Result<DataTable> {
        read_csv(text.as_bytes())
    }

    #[test]
    fn parse_numeric() {
        let t = table("x,y\n1,2\n3,4\n5,6\n").unwrap();
        assert_eq!(t.n_rows(), 3);
        assert_eq!(t.numeric("y").unwrap(), &[2.0, 4.0, 6.0]);
    }

    #[test]
    fn empty_cell_reports_row() {
        let err = table("x,y\n1,2\n3,\n5,6\n").unwrap_err();
        assert_eq!(err, Error::Ingest { row: 2, col: "y".into(), msg: "missing value".into() });
    }

    #[test]
    fn duplicate_header() {
        assert!(matches!(table("x,x\n1,2\n"), Err(Error::Ingest { row: 0, .. })));
    }

    #[test]
    fn categorical_levels_in_order() {
        let t = table("g\nb\na\nb\n").unwrap();
        match t.column("g").unwrap() {
            Column::Categorical { levels, codes } => {
                assert_eq!(levels, &["b", "a"]);
                assert_eq!(codes, &[0, 1, 0]);
            }
            _ => panic!("expected categorical"),
        }
        let t = table("g\na\nb\na\n").unwrap();
        assert!(matches!(t.column("g").unwrap(), Column::Categorical { levels, .. } if levels == &["a", "b"]));
    }

    #[test]
    fn quoted_fields() {
        let t = table("name,v\n\"a,b\",1\nc,2\n").unwrap();
        assert_eq!(t.column("name").unwrap().labels(), vec!["a,b", "c"]);
    }

    #[test]
    fn design_intercept_numeric() {
        let t = table("x,y\n1,2\n3,4\n5,6\n").unwrap();
        let mm = build_design(&t, &DesignSpec::new("y", vec![Term::numeric("x")])).unwrap();
        assert_eq!(mm.p(), 2);
        assert!(mm.x.column(0).iter().all(|&v| v == 1.0));
        assert!(mm.has_intercept());
    }

    #[test]
    fn design_dummies() {
        let t = table("g,y\na,1\nb,2\nc,3\na,4\n").unwrap();
        let mm = build_design(&t, &DesignSpec::new("y", vec![Term::dummy("g", None)])).unwrap();
        assert_eq!(mm.names, vec![INTERCEPT, "gb", "gc"]);
        let mm = build_design(&t, &DesignSpec::new("y", vec![Term::dummy("g", Some("c"))])).unwrap();
        assert_eq!(mm.names, vec![INTERCEPT, "ga", "gb"]);
        assert_eq!(mm.x.column(1).to_vec(), vec![1.0, 0.0, 0.0, 1.0]);
        let err = build_design(&t, &DesignSpec::new("y", vec![Term::dummy("g", Some("z"))]));
        assert!(matches!(err, Err(Error::Spec(_))));
    }

    #[test]
    fn design_interaction_and_duplicates() {
        let t = table("a,b,y\n1,2,0\n3,4,1\n5,-1,2\n").unwrap();
        let spec = DesignSpec::new(
            "y",
            vec![Term::numeric("a"), Term::numeric("b"), Term::interaction(Term::numeric("a"), Term::numeric("b"))],
        );
        let mm = build_design(&t, &spec).unwrap();
        assert_eq!(mm.names[3], "a:b");
        assert_eq!(mm.x.column(3).to_vec(), vec![2.0, 12.0, -5.0]);
        let dup = DesignSpec::new("y", vec![Term::numeric("a"), Term::numeric("a")]);
        assert!(matches!(build_design(&t, &dup), Err(Error::Spec(_))));
        let resp = DesignSpec::new("y", vec![Term::numeric("y")]);
        assert!(matches!(build_design(&t, &resp), Err(Error::Spec(_))));
    }

    #[test]
    fn standardize_example() {
        let x = ndarray::array![[1.0, 1.0], [1.0, 2.0], [1.0, 3.0]];
        let mm = ModelMatrix::new(x, ndarray::array![1.0, 2.0, 6.0]);
        let (s, st) = standardize(&mm).unwrap();
        assert_eq!(s.p(), 1);
        let r = 1.5f64.sqrt();
        for (a, b) in s.x.column(0).iter().zip([-r, 0.0, r]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(s.y.sum().abs() < 1e-12);
        assert!((st.response_mean - 3.0).abs() < 1e-15);
        let again = standardize(&ModelMatrix::with_names(s.x.clone(), s.y.clone(), vec!["z".into()]))
            .unwrap()
            .0;
        assert!((&again.x - &s.x).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn standardize_constant() {
        let x = ndarray::array![[1.0, 5.0], [1.0, 5.0], [1.0, 5.0]];
        let mm = ModelMatrix::new(x, ndarray::array![1.0, 2.0, 3.0]);
        assert_eq!(standardize(&mm).unwrap_err(), Error::DegenerateColumn("x1".into()));
    }

    #[test]
    fn folds() {
        let f = kfold_indices(10, 5, 1).unwrap();
        assert!(f.iter().all(|v| v.len() == 2));
        assert_eq!(f, kfold_indices(10, 5, 1).unwrap());
        let mut sizes: Vec<usize> = kfold_indices(7, 3, 9).unwrap().iter().map(Vec::len).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![2, 2, 3]);
        assert!(kfold_indices(5, 1, 0).is_err());
        assert!(kfold_indices(5, 6, 0).is_err());
    }

    #[test]
    fn folds_partition_exhaustive_small() {
        for n in 2..=40 {
            for k in 2..=n {
                let f = kfold_indices(n, k, (n * 31 + k) as u64).unwrap();
                let mut all: Vec<usize> = f.concat();
                all.sort_unstable();
                assert_eq!(all, (0..n).collect::<Vec<_>>());
                let mx = f.iter().map(Vec::len).max().unwrap();
                let mn = f.iter().map(Vec::len).min().unwrap();
                assert!(mx - mn <= 1);
            }
        }
    }

    proptest! {
        #[test]
        fn folds_partition(n in 2usize..=200, kf in 0.0f64..1.0, seed in any::<u64>()) {
            let k = 2 + ((n - 2) as f64 * kf) as usize;
            let f = kfold_indices(n, k, seed).unwrap();
            let mut all: Vec<usize> = f.concat();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        }
    }
}
