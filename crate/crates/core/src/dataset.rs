//! Tabular datasets: schemas, CSV loading, built-in fixtures, normalization,
//! stratified splitting, and contradiction bookkeeping.
//!
//! A [`Dataset`] couples an attribute schema with labelled patterns. Loading
//! never drops rows: missing markers (`?`) are imputed with the column mode,
//! and contradictory duplicate patterns are only rewritten by an explicit
//! [`clean_contradictions`] call.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

/// What kind of values an attribute holds.
///
/// Continuous attributes carry their observed `[min, max]` range (kept up to
/// date by the loader and by normalization). Categorical attributes carry an
/// ordered symbol domain; patterns store indices into it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum AttributeKind<S: Scalar> {
    Continuous { min: S, max: S },
    Categorical { symbols: Vec<String> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributeSchema<S: Scalar> {
    pub name: String,
    pub kind: AttributeKind<S>,
}

impl<S: Scalar> AttributeSchema<S> {
    pub fn continuous(name: &str) -> Self {
        AttributeSchema {
            name: name.to_string(),
            kind: AttributeKind::Continuous {
                min: S::zero(),
                max: S::zero(),
            },
        }
    }

    pub fn categorical(name: &str, symbols: &[&str]) -> Self {
        AttributeSchema {
            name: name.to_string(),
            kind: AttributeKind::Categorical {
                symbols: symbols.iter().map(|s| s.to_string()).collect(),
            },
        }
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self.kind, AttributeKind::Continuous { .. })
    }
}

/// One cell of a pattern: a number for continuous attributes, a symbol index
/// for categorical ones.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Value<S: Scalar> {
    Number(S),
    Symbol(usize),
}

impl<S: Scalar> Value<S> {
    pub fn number(self) -> S {
        match self {
            Value::Number(x) => x,
            Value::Symbol(_) => panic!("categorical value where a number was expected"),
        }
    }

    pub fn symbol(self) -> usize {
        match self {
            Value::Symbol(i) => i,
            Value::Number(_) => panic!("numeric value where a symbol was expected"),
        }
    }

    // Totally ordered key for exact grouping; numbers are grouped by bit
    // pattern, which is sound because loaded values are finite.
    fn key(self) -> (u8, u64) {
        match self {
            Value::Number(x) => (0, x.as_f64().to_bits()),
            Value::Symbol(i) => (1, i as u64),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pattern<S: Scalar> {
    pub values: Vec<Value<S>>,
    pub label: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset<S: Scalar> {
    pub schema: Vec<AttributeSchema<S>>,
    pub classes: Vec<String>,
    pub patterns: Vec<Pattern<S>>,
}

impl<S: Scalar> Dataset<S> {
    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// Number of patterns per class, indexed by class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes.len()];
        for p in &self.patterns {
            counts[p.label] += 1;
        }
        counts
    }
}

/// Options for [`load_csv`]. `class_column` indexes the raw CSV fields
/// (before `ignore_columns` are dropped); `None` means the last field.
#[derive(Clone, Debug, Default)]
pub struct CsvOptions {
    pub has_header: bool,
    pub class_column: Option<usize>,
    pub ignore_columns: Vec<usize>,
}

/// Loads a CSV file against a known schema.
///
/// Every row must have exactly `schema.len() + 1 + ignore_columns.len()`
/// fields. `?` marks a missing attribute value; after reading, each missing
/// entry is imputed with its column's most frequent value (ties broken toward
/// the smallest value or symbol index), so no row is dropped. Class labels
/// are collected in first-appearance order. Parse errors carry the 1-based
/// line number.
pub fn load_csv<S: Scalar>(
    path: &Path,
    schema: &[AttributeSchema<S>],
    options: &CsvOptions,
) -> Result<Dataset<S>> {
    let raw = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_csv_str(&raw, schema, options)
}

fn load_csv_str<S: Scalar>(
    raw: &str,
    schema: &[AttributeSchema<S>],
    options: &CsvOptions,
) -> Result<Dataset<S>> {
    let expected_fields = schema.len() + 1 + options.ignore_columns.len();
    let class_column = options.class_column.unwrap_or(expected_fields - 1);
    if class_column >= expected_fields || options.ignore_columns.contains(&class_column) {
        return Err(Error::Config(format!(
            "class column {class_column} out of range for {expected_fields} fields"
        )));
    }

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(raw.as_bytes());

    let mut classes: Vec<String> = Vec::new();
    let mut patterns: Vec<Pattern<S>> = Vec::new();
    // (pattern index, attribute index) pairs awaiting imputation.
    let mut missing: Vec<(usize, usize)> = Vec::new();

    for (index, record) in reader.records().enumerate() {
        let line = index + 1;
        let record = record.map_err(|e| Error::Parse {
            row: line,
            message: e.to_string(),
        })?;
        if options.has_header && index == 0 {
            continue;
        }
        if record.len() != expected_fields {
            return Err(Error::Parse {
                row: line,
                message: format!("expected {expected_fields} fields, found {}", record.len()),
            });
        }

        let mut values = Vec::with_capacity(schema.len());
        let mut attr = 0usize;
        let mut label = usize::MAX;
        for (field_idx, token) in record.iter().enumerate() {
            if options.ignore_columns.contains(&field_idx) {
                continue;
            }
            if field_idx == class_column {
                if token == "?" {
                    return Err(Error::Parse {
                        row: line,
                        message: "missing class label".to_string(),
                    });
                }
                label = match classes.iter().position(|c| c == token) {
                    Some(i) => i,
                    None => {
                        classes.push(token.to_string());
                        classes.len() - 1
                    }
                };
                continue;
            }
            let spec = &schema[attr];
            if token == "?" {
                missing.push((patterns.len(), attr));
                // Placeholder until imputation; kind-correct so later passes
                // need no special casing.
                values.push(match &spec.kind {
                    AttributeKind::Continuous { .. } => Value::Number(S::zero()),
                    AttributeKind::Categorical { .. } => Value::Symbol(0),
                });
            } else {
                values.push(parse_value(token, spec, line)?);
            }
            attr += 1;
        }
        patterns.push(Pattern { values, label });
    }

    if patterns.is_empty() {
        return Err(Error::Data("no data rows".to_string()));
    }

    impute(&mut patterns, &missing, schema)?;

    let mut schema = schema.to_vec();
    update_observed_ranges(&mut schema, &patterns);
    Ok(Dataset {
        schema,
        classes,
        patterns,
    })
}

fn parse_value<S: Scalar>(
    token: &str,
    spec: &AttributeSchema<S>,
    line: usize,
) -> Result<Value<S>> {
    match &spec.kind {
        AttributeKind::Continuous { .. } => {
            let x: S = token.parse().map_err(|_| Error::Parse {
                row: line,
                message: format!("attribute '{}': invalid number '{token}'", spec.name),
            })?;
            if !x.is_finite() {
                return Err(Error::Parse {
                    row: line,
                    message: format!("attribute '{}': non-finite value '{token}'", spec.name),
                });
            }
            Ok(Value::Number(x))
        }
        AttributeKind::Categorical { symbols } => {
            let i = symbols
                .iter()
                .position(|s| s == token)
                .ok_or_else(|| Error::Parse {
                    row: line,
                    message: format!("attribute '{}': unknown symbol '{token}'", spec.name),
                })?;
            Ok(Value::Symbol(i))
        }
    }
}

fn impute<S: Scalar>(
    patterns: &mut [Pattern<S>],
    missing: &[(usize, usize)],
    schema: &[AttributeSchema<S>],
) -> Result<()> {
    let mut by_attr: HashMap<usize, Vec<usize>> = HashMap::new();
    for &(p, a) in missing {
        by_attr.entry(a).or_default().push(p);
    }
    for (&attr, rows) in &mut by_attr.iter() {
        let holes: Vec<usize> = rows.clone();
        let mode = attribute_mode(patterns, attr, &holes).ok_or_else(|| {
            Error::Data(format!(
                "attribute '{}' has no observed values to impute from",
                schema[attr].name
            ))
        })?;
        for &p in &holes {
            patterns[p].values[attr] = mode;
        }
    }
    Ok(())
}

/// Most frequent value of an attribute, ignoring the rows listed in `holes`.
/// Ties go to the smallest value (or symbol index).
fn attribute_mode<S: Scalar>(
    patterns: &[Pattern<S>],
    attr: usize,
    holes: &[usize],
) -> Option<Value<S>> {
    let mut counts: HashMap<(u8, u64), (usize, Value<S>)> = HashMap::new();
    for (i, p) in patterns.iter().enumerate() {
        if holes.contains(&i) {
            continue;
        }
        let v = p.values[attr];
        counts.entry(v.key()).or_insert((0, v)).0 += 1;
    }
    counts
        .into_values()
        .max_by(|(na, va), (nb, vb)| na.cmp(nb).then_with(|| value_order(*vb, *va)))
        .map(|(_, v)| v)
}

fn value_order<S: Scalar>(a: Value<S>, b: Value<S>) -> std::cmp::Ordering {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => x.partial_cmp(&y).expect("finite values"),
        (Value::Symbol(x), Value::Symbol(y)) => x.cmp(&y),
        _ => unreachable!("mixed value kinds within one attribute"),
    }
}

fn update_observed_ranges<S: Scalar>(schema: &mut [AttributeSchema<S>], patterns: &[Pattern<S>]) {
    for (a, spec) in schema.iter_mut().enumerate() {
        if let AttributeKind::Continuous { min, max } = &mut spec.kind {
            let mut lo = S::infinity();
            let mut hi = S::neg_infinity();
            for p in patterns {
                let x = p.values[a].number();
                lo = lo.min(x);
                hi = hi.max(x);
            }
            *min = lo;
            *max = hi;
        }
    }
}

/// Infers a schema from a CSV file: a column is continuous when every
/// non-missing token parses as a number, categorical otherwise (symbols in
/// first-appearance order). Attribute names come from the header row when
/// present, else `attr1`, `attr2`, ...
pub fn infer_schema<S: Scalar>(path: &Path, options: &CsvOptions) -> Result<Vec<AttributeSchema<S>>> {
    let raw = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(raw.as_bytes());

    let mut header: Option<Vec<String>> = None;
    let mut columns: Option<Vec<Vec<String>>> = None;
    for (index, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            row: index + 1,
            message: e.to_string(),
        })?;
        if options.has_header && index == 0 {
            header = Some(record.iter().map(|t| t.to_string()).collect());
            continue;
        }
        let columns = columns.get_or_insert_with(|| vec![Vec::new(); record.len()]);
        if record.len() != columns.len() {
            return Err(Error::Parse {
                row: index + 1,
                message: format!("expected {} fields, found {}", columns.len(), record.len()),
            });
        }
        for (c, token) in record.iter().enumerate() {
            columns[c].push(token.to_string());
        }
    }
    let columns = columns.ok_or_else(|| Error::Data("no data rows".to_string()))?;
    let field_count = columns.len();
    let class_column = options.class_column.unwrap_or(field_count.saturating_sub(1));

    let mut schema = Vec::new();
    for (c, tokens) in columns.iter().enumerate() {
        if c == class_column || options.ignore_columns.contains(&c) {
            continue;
        }
        let name = header
            .as_ref()
            .and_then(|h| h.get(c).cloned())
            .filter(|n| !n.is_empty())
            .unwrap_or_else(|| format!("attr{}", schema.len() + 1));
        let numeric = tokens
            .iter()
            .filter(|t| *t != "?")
            .all(|t| t.parse::<f64>().map(|x| x.is_finite()).unwrap_or(false));
        if numeric {
            schema.push(AttributeSchema::continuous(&name));
        } else {
            let mut symbols: Vec<String> = Vec::new();
            for t in tokens.iter().filter(|t| *t != "?") {
                if !symbols.iter().any(|s| s == t) {
                    symbols.push(t.clone());
                }
            }
            schema.push(AttributeSchema {
                name,
                kind: AttributeKind::Categorical { symbols },
            });
        }
    }
    Ok(schema)
}

/// The two embedded fixtures.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fixture {
    Golf,
    Season,
}

impl Fixture {
    pub fn parse(name: &str) -> Result<Fixture> {
        match name {
            "golf" => Ok(Fixture::Golf),
            "season" => Ok(Fixture::Season),
            other => Err(Error::Config(format!(
                "unknown fixture '{other}' (expected 'golf' or 'season')"
            ))),
        }
    }
}

/// Returns one of the embedded fixture datasets.
///
/// `golf` is the classic 14-day weather table (play / dont-play). `season`
/// is an 11-pattern reconstruction of a small season-classification table:
/// three categorical attributes, four classes; the attribute named `weather`
/// is a reconstructed name, and the rows are arranged so the known reference
/// ruleset (yellow or leafless trees mean autumn, low temperature winter,
/// high temperature summer, everything else spring) classifies all of them
/// correctly.
pub fn builtin_fixture<S: Scalar>(which: Fixture) -> Dataset<S> {
    match which {
        Fixture::Golf => golf(),
        Fixture::Season => season(),
    }
}

fn golf<S: Scalar>() -> Dataset<S> {
    let schema = vec![
        AttributeSchema::categorical("outlook", &["sunny", "overcast", "rainy"]),
        AttributeSchema::continuous("temperature"),
        AttributeSchema::continuous("humidity"),
        AttributeSchema::categorical("wind", &["weak", "strong"]),
    ];
    // (outlook, temperature, humidity, wind, play?)
    const ROWS: [(usize, f64, f64, usize, bool); 14] = [
        (0, 85.0, 85.0, 0, false),
        (0, 80.0, 90.0, 1, false),
        (1, 83.0, 86.0, 0, true),
        (2, 70.0, 96.0, 0, true),
        (2, 68.0, 80.0, 0, true),
        (2, 65.0, 70.0, 1, false),
        (1, 64.0, 65.0, 1, true),
        (0, 72.0, 95.0, 0, false),
        (0, 69.0, 70.0, 0, true),
        (2, 75.0, 80.0, 0, true),
        (0, 75.0, 70.0, 1, true),
        (1, 72.0, 90.0, 1, true),
        (1, 81.0, 75.0, 0, true),
        (2, 71.0, 91.0, 1, false),
    ];
    let patterns = ROWS
        .iter()
        .map(|&(outlook, t, h, wind, play)| Pattern {
            values: vec![
                Value::Symbol(outlook),
                Value::Number(S::of(t)),
                Value::Number(S::of(h)),
                Value::Symbol(wind),
            ],
            label: usize::from(play),
        })
        .collect();
    let mut data = Dataset {
        schema,
        classes: vec!["dont-play".to_string(), "play".to_string()],
        patterns,
    };
    update_observed_ranges(&mut data.schema, &data.patterns);
    data
}

fn season<S: Scalar>() -> Dataset<S> {
    let schema = vec![
        AttributeSchema::categorical("weather", &["sunny", "rainy", "cloudy"]),
        AttributeSchema::categorical("tree", &["green", "yellow", "leafless"]),
        AttributeSchema::categorical("temperature", &["low", "medium", "mild", "high"]),
    ];
    // (weather, tree, temperature, season)
    const ROWS: [(usize, usize, usize, usize); 11] = [
        (0, 0, 1, 0), // sunny, green, medium -> spring
        (1, 0, 1, 0), // rainy, green, medium -> spring
        (2, 0, 2, 0), // cloudy, green, mild -> spring
        (0, 0, 2, 0), // sunny, green, mild -> spring
        (0, 0, 3, 1), // sunny, green, high -> summer
        (1, 0, 3, 1), // rainy, green, high -> summer
        (1, 1, 1, 2), // rainy, yellow, medium -> autumn
        (2, 1, 2, 2), // cloudy, yellow, mild -> autumn
        (1, 2, 1, 2), // rainy, leafless, medium -> autumn
        (2, 0, 0, 3), // cloudy, green, low -> winter
        (0, 0, 0, 3), // sunny, green, low -> winter
    ];
    let patterns = ROWS
        .iter()
        .map(|&(w, t, temp, label)| Pattern {
            values: vec![Value::Symbol(w), Value::Symbol(t), Value::Symbol(temp)],
            label,
        })
        .collect();
    Dataset {
        schema,
        classes: ["spring", "summer", "autumn", "winter"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        patterns,
    }
}

/// Canonical iris schema: four continuous measurements.
pub fn iris_schema<S: Scalar>() -> Vec<AttributeSchema<S>> {
    vec![
        AttributeSchema::continuous("sepal-length"),
        AttributeSchema::continuous("sepal-width"),
        AttributeSchema::continuous("petal-length"),
        AttributeSchema::continuous("petal-width"),
    ]
}

/// Loads an iris CSV: `sl,sw,pl,pw,label`, no header.
pub fn load_iris<S: Scalar>(path: &Path) -> Result<Dataset<S>> {
    load_csv(path, &iris_schema(), &CsvOptions::default())
}

/// Canonical breast-cytology schema: nine integer-graded attributes.
pub fn breast_schema<S: Scalar>() -> Vec<AttributeSchema<S>> {
    (1..=9)
        .map(|i| AttributeSchema::continuous(&format!("A{i}")))
        .collect()
}

/// Loads a breast-cytology CSV: eleven fields per row (leading sample ID,
/// nine attributes, class `2` or `4`), `?` for missing, no header. Class
/// codes are renamed benign/malignant.
pub fn load_breast<S: Scalar>(path: &Path) -> Result<Dataset<S>> {
    let options = CsvOptions {
        has_header: false,
        class_column: Some(10),
        ignore_columns: vec![0],
    };
    let mut data = load_csv(path, &breast_schema(), &options)?;
    for class in &mut data.classes {
        match class.as_str() {
            "2" => *class = "benign".to_string(),
            "4" => *class = "malignant".to_string(),
            other => return Err(Error::Data(format!("unexpected class code '{other}'"))),
        }
    }
    Ok(data)
}

/// How each attribute was rescaled, so a held-out split can be normalized
/// with the training split's statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum NormRule<S: Scalar> {
    Keep,
    TenScale,
    MinMax { min: S, max: S },
    Constant,
}

pub type NormStats<S> = Vec<NormRule<S>>;

/// Rescales continuous attributes for network consumption.
///
/// Attributes whose observed values are all integers in 1..=10 are divided
/// by 10; other continuous attributes are min-max scaled to `[0, 1]` by
/// their observed range. A constant attribute maps to 0.0 and logs a
/// warning. Categorical attributes pass through. Rule extraction in direct
/// mode runs on raw values; only network-facing paths normalize.
pub fn normalize<S: Scalar>(data: &Dataset<S>) -> (Dataset<S>, NormStats<S>) {
    let mut stats = Vec::with_capacity(data.schema.len());
    for (a, spec) in data.schema.iter().enumerate() {
        let rule = match &spec.kind {
            AttributeKind::Categorical { .. } => NormRule::Keep,
            // Ranges are taken from the patterns, not the schema's recorded
            // ones, so hand-assembled datasets normalize correctly too.
            AttributeKind::Continuous { .. } => {
                let mut ten_scale = true;
                let mut range: Option<(S, S)> = None;
                for p in &data.patterns {
                    let x = p.values[a].number();
                    let xf = x.as_f64();
                    ten_scale &= xf.fract() == 0.0 && (1.0..=10.0).contains(&xf);
                    range = Some(match range {
                        None => (x, x),
                        Some((lo, hi)) => (lo.min(x), hi.max(x)),
                    });
                }
                match range {
                    Some(_) if ten_scale => NormRule::TenScale,
                    Some((lo, hi)) if lo < hi => NormRule::MinMax { min: lo, max: hi },
                    _ => {
                        log::warn!(
                            "attribute '{}' is constant; normalizing to 0.0",
                            spec.name
                        );
                        NormRule::Constant
                    }
                }
            }
        };
        stats.push(rule);
    }
    (normalize_with(data, &stats), stats)
}

/// Applies previously computed normalization rules (e.g. the training
/// split's) to another dataset with the same schema.
pub fn normalize_with<S: Scalar>(data: &Dataset<S>, stats: &NormStats<S>) -> Dataset<S> {
    assert_eq!(data.schema.len(), stats.len(), "schema/stats length mismatch");
    let mut out = data.clone();
    for p in &mut out.patterns {
        for (a, rule) in stats.iter().enumerate() {
            if let Value::Number(x) = p.values[a] {
                let y = match rule {
                    NormRule::Keep => x,
                    NormRule::TenScale => x / S::of(10.0),
                    NormRule::MinMax { min, max } => (x - *min) / (*max - *min),
                    NormRule::Constant => S::zero(),
                };
                p.values[a] = Value::Number(y);
            }
        }
    }
    update_observed_ranges(&mut out.schema, &out.patterns);
    out
}

/// Deterministic stratified split: each class is shuffled with a seeded RNG
/// and `test_fraction` of it (rounded) goes to the test split, so per-class
/// proportions are preserved within one pattern. Pattern order within each
/// split follows the original dataset order.
pub fn stratified_split<S: Scalar>(
    data: &Dataset<S>,
    test_fraction: f64,
    seed: u64,
) -> Result<(Dataset<S>, Dataset<S>)> {
    if !(0.0..=1.0).contains(&test_fraction) {
        return Err(Error::Config(format!(
            "test fraction {test_fraction} outside [0, 1]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_test = vec![false; data.patterns.len()];
    for class in 0..data.classes.len() {
        let mut indices: Vec<usize> = (0..data.patterns.len())
            .filter(|&i| data.patterns[i].label == class)
            .collect();
        indices.shuffle(&mut rng);
        let take = (indices.len() as f64 * test_fraction).round() as usize;
        for &i in indices.iter().take(take) {
            in_test[i] = true;
        }
    }
    let pick = |want_test: bool| Dataset {
        schema: data.schema.clone(),
        classes: data.classes.clone(),
        patterns: data
            .patterns
            .iter()
            .enumerate()
            .filter(|(i, _)| in_test[*i] == want_test)
            .map(|(_, p)| p.clone())
            .collect(),
    };
    Ok((pick(false), pick(true)))
}

fn group_patterns<S: Scalar>(data: &Dataset<S>) -> Vec<Vec<usize>> {
    let mut groups: HashMap<Vec<(u8, u64)>, usize> = HashMap::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for (i, p) in data.patterns.iter().enumerate() {
        let key: Vec<(u8, u64)> = p.values.iter().map(|v| v.key()).collect();
        match groups.get(&key) {
            Some(&g) => members[g].push(i),
            None => {
                groups.insert(key, members.len());
                members.push(vec![i]);
            }
        }
    }
    members
}

/// Fraction of patterns that disagree with the majority label of their
/// identical-attribute group: `sum(group size - majority count) / total`.
/// This is the tight lower bound on the training error of any deterministic
/// classifier over these attributes.
pub fn inconsistency_rate<S: Scalar>(data: &Dataset<S>) -> f64 {
    if data.patterns.is_empty() {
        return 0.0;
    }
    let mut clashing = 0usize;
    for group in group_patterns(data) {
        let mut counts: HashMap<usize, usize> = HashMap::new();
        for &i in &group {
            *counts.entry(data.patterns[i].label).or_insert(0) += 1;
        }
        let majority = counts.values().copied().max().unwrap_or(0);
        clashing += group.len() - majority;
    }
    clashing as f64 / data.patterns.len() as f64
}

/// Rewrites each pattern's label to the majority label of its
/// identical-attribute group (ties toward the lowest class index).
/// Idempotent; the result has zero inconsistency.
pub fn clean_contradictions<S: Scalar>(data: &Dataset<S>) -> Dataset<S> {
    let mut out = data.clone();
    for group in group_patterns(data) {
        let mut counts: HashMap<usize, usize> = HashMap::new();
        for &i in &group {
            *counts.entry(data.patterns[i].label).or_insert(0) += 1;
        }
        let majority = counts
            .iter()
            .map(|(&label, &n)| (label, n))
            .max_by(|a, b| a.1.cmp(&b.1).then_with(|| b.0.cmp(&a.0)))
            .map(|(label, _)| label)
            .expect("group is non-empty");
        for &i in &group {
            out.patterns[i].label = majority;
        }
    }
    out
}

/// Renders a dataset back to CSV (no header), the inverse of loading.
pub fn dataset_to_csv<S: Scalar>(data: &Dataset<S>) -> String {
    let mut out = String::new();
    for p in &data.patterns {
        for (a, v) in p.values.iter().enumerate() {
            match (v, &data.schema[a].kind) {
                (Value::Number(x), _) => {
                    let _ = write!(out, "{x}");
                }
                (Value::Symbol(i), AttributeKind::Categorical { symbols }) => {
                    out.push_str(&symbols[*i]);
                }
                (Value::Symbol(_), _) => unreachable!("symbol in continuous attribute"),
            }
            out.push(',');
        }
        out.push_str(&data.classes[p.label]);
        out.push('\n');
    }
    out
}
