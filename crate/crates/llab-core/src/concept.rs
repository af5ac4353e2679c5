//! Finite concept classes over named points and labels.
//!
//! A [`ConceptClass`] is a finite table: one row per hypothesis, one column
//! per domain point, each cell holding a label index. All other machinery in
//! the crate (dimension recursions, learners, adversaries, oracles) operates
//! on these tables and on [`VersionSpace`] snapshots of them. Classes are
//! immutable after construction and shared through [`ClassRef`], so version
//! spaces are cheap to copy and safe to hand to concurrent tasks.
//!
//! Construction canonicalizes the table: hypothesis rows are de-duplicated
//! (first occurrence kept, order preserved), shapes are validated, and the
//! cell count is checked against the configured resource cap.

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::caps::Caps;
use crate::error::{Error, Result};

/// Shared handle to an immutable concept class.
pub type ClassRef = Arc<ConceptClass>;

/// Label index predicted when a learner's version space is empty.
pub const DEFAULT_LABEL: usize = 0;

/// Counter-based generator used for all seeded randomness in this crate.
///
/// ChaCha is a counter-mode stream cipher, so a `(seed, stream)` pair fully
/// determines the output on every platform. Derived generators for trial
/// `k` of a seeded procedure use `stream = k` over the caller's seed.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A finite multiclass concept class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConceptClass {
    point_names: Vec<String>,
    label_names: Vec<String>,
    /// Row-major table, `hypotheses x points`, cells are label indices.
    table: Vec<u32>,
}

impl ConceptClass {
    /// Builds a class from raw parts, validating shape and budget.
    ///
    /// `hypotheses` holds one row per hypothesis, each row one label index
    /// per point. Duplicate rows are dropped, keeping the first occurrence.
    pub fn from_parts(
        point_names: Vec<String>,
        label_names: Vec<String>,
        hypotheses: Vec<Vec<usize>>,
        caps: &Caps,
    ) -> Result<ClassRef> {
        if point_names.is_empty() {
            return Err(Error::InvalidInput("point list must be non-empty".into()));
        }
        if label_names.is_empty() {
            return Err(Error::InvalidInput("label list must be non-empty".into()));
        }
        if label_names.len() > u32::MAX as usize {
            return Err(Error::InvalidInput("label alphabet too large".into()));
        }
        caps.check_cells(hypotheses.len(), point_names.len(), "concept class")?;

        let nx = point_names.len();
        let ny = label_names.len();
        let mut table: Vec<u32> = Vec::new();
        let mut seen: HashSet<Vec<u32>> = HashSet::new();
        for (h, row) in hypotheses.iter().enumerate() {
            if row.len() != nx {
                return Err(Error::InvalidInput(format!(
                    "hypothesis {h} has {} entries, expected {nx}",
                    row.len()
                )));
            }
            let mut packed = Vec::with_capacity(nx);
            for (x, &y) in row.iter().enumerate() {
                if y >= ny {
                    return Err(Error::InvalidInput(format!(
                        "hypothesis {h} labels point {x} with {y}, alphabet has {ny} labels"
                    )));
                }
                packed.push(y as u32);
            }
            if seen.insert(packed.clone()) {
                table.extend_from_slice(&packed);
            }
        }

        Ok(Arc::new(ConceptClass { point_names, label_names, table }))
    }

    /// Number of domain points.
    pub fn n_points(&self) -> usize {
        self.point_names.len()
    }

    /// Number of labels in the alphabet.
    pub fn n_labels(&self) -> usize {
        self.label_names.len()
    }

    /// Number of (distinct) hypotheses.
    pub fn n_hypotheses(&self) -> usize {
        self.table.len() / self.point_names.len()
    }

    /// Name of point `x`.
    pub fn point_name(&self, x: usize) -> &str {
        &self.point_names[x]
    }

    /// Name of label `y`.
    pub fn label_name(&self, y: usize) -> &str {
        &self.label_names[y]
    }

    /// All point names in index order.
    pub fn point_names(&self) -> &[String] {
        &self.point_names
    }

    /// All label names in index order.
    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    /// Label assigned by hypothesis `h` to point `x`.
    pub fn eval(&self, h: usize, x: usize) -> usize {
        self.table[h * self.point_names.len() + x] as usize
    }

    /// The full row of hypothesis `h`.
    pub fn row(&self, h: usize) -> &[u32] {
        let nx = self.point_names.len();
        &self.table[h * nx..(h + 1) * nx]
    }

    /// Validates that `(x, y)` is a legal labeled example for this class.
    pub fn check_example(&self, x: usize, y: usize) -> Result<()> {
        if x >= self.n_points() {
            return Err(Error::InvalidInput(format!(
                "point index {x} out of range, class has {} points",
                self.n_points()
            )));
        }
        if y >= self.n_labels() {
            return Err(Error::InvalidInput(format!(
                "label index {y} out of range, class has {} labels",
                self.n_labels()
            )));
        }
        Ok(())
    }

    /// New class holding only the listed hypothesis rows (order preserved).
    pub fn subclass(&self, rows: &[usize], caps: &Caps) -> Result<ClassRef> {
        let mut hyps = Vec::with_capacity(rows.len());
        for &h in rows {
            if h >= self.n_hypotheses() {
                return Err(Error::InvalidInput(format!(
                    "hypothesis index {h} out of range, class has {}",
                    self.n_hypotheses()
                )));
            }
            hyps.push(self.row(h).iter().map(|&y| y as usize).collect());
        }
        ConceptClass::from_parts(self.point_names.clone(), self.label_names.clone(), hyps, caps)
    }
}

/// Serialized form of a concept class.
///
/// Field names are part of the on-disk contract: `points` and `labels` list
/// names, `hypotheses` lists one row of label indices per hypothesis.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassFile {
    points: Vec<String>,
    labels: Vec<String>,
    hypotheses: Vec<Vec<usize>>,
}

impl ConceptClass {
    /// Parses a class from its JSON representation.
    pub fn from_json(json: &str, caps: &Caps) -> Result<ClassRef> {
        let file: ClassFile = serde_json::from_str(json)
            .map_err(|e| Error::InvalidInput(format!("malformed class file: {e}")))?;
        ConceptClass::from_parts(file.points, file.labels, file.hypotheses, caps)
    }

    /// Serializes the class as JSON.
    pub fn to_json(&self) -> String {
        let file = ClassFile {
            points: self.point_names.clone(),
            labels: self.label_names.clone(),
            hypotheses: (0..self.n_hypotheses())
                .map(|h| self.row(h).iter().map(|&y| y as usize).collect())
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("class serialization cannot fail")
    }

    /// Loads a class from a JSON file on disk.
    pub fn from_file(path: &std::path::Path, caps: &Caps) -> Result<ClassRef> {
        let json = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
        ConceptClass::from_json(&json, caps)
    }
}

/// Fixed-width bit set over hypothesis indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MemberSet {
    words: Vec<u64>,
    count: usize,
}

impl MemberSet {
    fn empty_words(n: usize) -> Vec<u64> {
        vec![0u64; n.div_ceil(64)]
    }

    /// Set containing all of `0..n`.
    pub fn full(n: usize) -> MemberSet {
        let mut words = Self::empty_words(n);
        for (i, w) in words.iter_mut().enumerate() {
            let lo = i * 64;
            let hi = (lo + 64).min(n);
            if hi > lo {
                let width = hi - lo;
                *w = if width == 64 { u64::MAX } else { (1u64 << width) - 1 };
            }
        }
        MemberSet { words, count: n }
    }

    /// Empty set over a universe of size `n`.
    pub fn empty(n: usize) -> MemberSet {
        MemberSet { words: Self::empty_words(n), count: 0 }
    }

    /// Number of members.
    pub fn len(&self) -> usize {
        self.count
    }

    /// True when no member is present.
    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// True when index `i` is present.
    pub fn contains(&self, i: usize) -> bool {
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    /// Inserts index `i`.
    pub fn insert(&mut self, i: usize) {
        let w = &mut self.words[i / 64];
        let bit = 1u64 << (i % 64);
        if *w & bit == 0 {
            *w |= bit;
            self.count += 1;
        }
    }

    /// Iterates member indices in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let base = wi * 64;
            std::iter::successors((w != 0).then_some(w), |&m| {
                let rest = m & (m - 1);
                (rest != 0).then_some(rest)
            })
            .map(move |m| base + m.trailing_zeros() as usize)
        })
    }

    /// Canonical word representation, usable as a memo key.
    pub fn key(&self) -> &[u64] {
        &self.words
    }
}

/// A subset of a class's hypotheses, together with the class itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VersionSpace {
    class: ClassRef,
    members: MemberSet,
}

impl VersionSpace {
    /// Version space containing every hypothesis of `class`.
    pub fn full(class: &ClassRef) -> VersionSpace {
        VersionSpace { class: Arc::clone(class), members: MemberSet::full(class.n_hypotheses()) }
    }

    /// Version space over `class` with the given member set.
    pub fn with_members(class: &ClassRef, members: MemberSet) -> VersionSpace {
        VersionSpace { class: Arc::clone(class), members }
    }

    /// The underlying class.
    pub fn class(&self) -> &ClassRef {
        &self.class
    }

    /// The member set.
    pub fn members(&self) -> &MemberSet {
        &self.members
    }

    /// Number of surviving hypotheses.
    pub fn len(&self) -> usize {
        self.members.len()
    }

    /// True when no hypothesis survives.
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Member hypothesis indices in increasing order.
    pub fn member_indices(&self) -> Vec<usize> {
        self.members.iter().collect()
    }

    /// Keeps exactly the members `h` with `h(x) = y`.
    pub fn restrict(&self, x: usize, y: usize) -> Result<VersionSpace> {
        self.class.check_example(x, y)?;
        let mut members = MemberSet::empty(self.class.n_hypotheses());
        for h in self.members.iter() {
            if self.class.eval(h, x) == y {
                members.insert(h);
            }
        }
        Ok(VersionSpace { class: Arc::clone(&self.class), members })
    }

    /// Restricts by every example of `s` in order.
    pub fn restrict_sequence(&self, s: &LabeledSequence) -> Result<VersionSpace> {
        let mut v = self.clone();
        for &(x, y) in s.entries() {
            v = v.restrict(x, y)?;
        }
        Ok(v)
    }

    /// Labels realized at `x` by at least one member, in increasing order.
    pub fn realized_labels_at(&self, x: usize) -> Result<Vec<usize>> {
        self.class.check_example(x, 0)?;
        let ny = self.class.n_labels();
        let mut seen = vec![false; ny];
        for h in self.members.iter() {
            seen[self.class.eval(h, x)] = true;
        }
        Ok((0..ny).filter(|&y| seen[y]).collect())
    }
}

/// True when some member of `v` is consistent with every example of `s`.
///
/// Realizability only depends on the set of examples, not their order.
pub fn is_realizable(v: &VersionSpace, s: &LabeledSequence) -> Result<bool> {
    s.validate(v.class())?;
    Ok(v.members.iter().any(|h| {
        s.entries().iter().all(|&(x, y)| v.class.eval(h, x) == y)
    }))
}

/// An ordered sequence of `(point, label)` examples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSequence {
    entries: Vec<(usize, usize)>,
}

impl LabeledSequence {
    /// Builds a sequence from `(point, label)` pairs.
    pub fn new(entries: Vec<(usize, usize)>) -> LabeledSequence {
        LabeledSequence { entries }
    }

    /// The examples in order.
    pub fn entries(&self) -> &[(usize, usize)] {
        &self.entries
    }

    /// Number of examples.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// True when the sequence has no examples.
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Checks every index against the class alphabets.
    pub fn validate(&self, class: &ConceptClass) -> Result<()> {
        for &(x, y) in &self.entries {
            class.check_example(x, y)?;
        }
        Ok(())
    }

    /// The subsequence at the given positions, in the given order.
    pub fn select(&self, positions: &[usize]) -> Result<LabeledSequence> {
        let mut entries = Vec::with_capacity(positions.len());
        for &t in positions {
            let &(x, y) = self.entries.get(t).ok_or_else(|| {
                Error::InvalidInput(format!("position {t} out of range, sequence has {}", self.len()))
            })?;
            entries.push((x, y));
        }
        Ok(LabeledSequence { entries })
    }

    /// Parses a sequence from JSON: a list of `[point, label]` pairs.
    pub fn from_json(json: &str) -> Result<LabeledSequence> {
        let pairs: Vec<[usize; 2]> = serde_json::from_str(json)
            .map_err(|e| Error::InvalidInput(format!("malformed sequence file: {e}")))?;
        Ok(LabeledSequence { entries: pairs.into_iter().map(|[x, y]| (x, y)).collect() })
    }

    /// Serializes the sequence as JSON.
    pub fn to_json(&self) -> String {
        let pairs: Vec<[usize; 2]> = self.entries.iter().map(|&(x, y)| [x, y]).collect();
        serde_json::to_string(&pairs).expect("sequence serialization cannot fail")
    }

    /// Loads a sequence from a JSON file on disk.
    pub fn from_file(path: &std::path::Path) -> Result<LabeledSequence> {
        let json = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
        LabeledSequence::from_json(&json)
    }
}

/// Tolerance on the total mass of a prediction distribution.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// A probability distribution over label indices.
///
/// Stored sparsely; absent labels carry zero mass. Iteration order is the
/// label index order, so downstream output is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionDistribution {
    mass: BTreeMap<usize, f64>,
}

impl PredictionDistribution {
    /// Distribution from `(label, mass)` pairs; zero masses are dropped.
    pub fn from_masses(pairs: impl IntoIterator<Item = (usize, f64)>) -> PredictionDistribution {
        let mut mass = BTreeMap::new();
        for (y, m) in pairs {
            if m != 0.0 {
                *mass.entry(y).or_insert(0.0) += m;
            }
        }
        PredictionDistribution { mass }
    }

    /// Point mass on a single label.
    pub fn point_mass(y: usize) -> PredictionDistribution {
        PredictionDistribution { mass: BTreeMap::from([(y, 1.0)]) }
    }

    /// Mass assigned to label `y`.
    pub fn mass(&self, y: usize) -> f64 {
        self.mass.get(&y).copied().unwrap_or(0.0)
    }

    /// `(label, mass)` pairs in increasing label order.
    pub fn masses(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.mass.iter().map(|(&y, &m)| (y, m))
    }

    /// Checks support range, non-negativity, and unit total mass.
    pub fn validate(&self, n_labels: usize) -> Result<()> {
        let mut total = 0.0;
        for (&y, &m) in &self.mass {
            if y >= n_labels {
                return Err(Error::Internal(format!(
                    "distribution supports label {y}, alphabet has {n_labels}"
                )));
            }
            if m.is_nan() || m < 0.0 {
                return Err(Error::Internal(format!("label {y} has negative or NaN mass {m}")));
            }
            total += m;
        }
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::Internal(format!("total mass {total} is not 1")));
        }
        Ok(())
    }
}

/// The separating family: hypotheses `h_A(x) = A` for `x` in `A`, else `*`.
///
/// The domain has `m` points; the label alphabet lists all `2^m` subsets
/// `A` of the domain (in subset-mask order, the empty set first) followed
/// by the star label `*`. One hypothesis per subset, so `2^m` rows.
pub fn example1_class(m: usize, caps: &Caps) -> Result<ClassRef> {
    if m == 0 {
        return Err(Error::InvalidInput("domain must have at least one point".into()));
    }
    if m >= usize::BITS as usize - 1 {
        return Err(Error::InvalidInput(format!("domain of {m} points is not representable")));
    }
    let subsets = 1usize << m;
    caps.check_cells(subsets, m, "separating family")?;

    let point_names: Vec<String> = (1..=m).map(|i| format!("x{i}")).collect();
    let mut label_names: Vec<String> = Vec::with_capacity(subsets + 1);
    for mask in 0..subsets {
        let inner: Vec<&str> =
            (0..m).filter(|&i| mask >> i & 1 == 1).map(|i| point_names[i].as_str()).collect();
        label_names.push(format!("{{{}}}", inner.join(",")));
    }
    label_names.push("*".to_string());
    let star = subsets;

    let hypotheses: Vec<Vec<usize>> = (0..subsets)
        .map(|mask| (0..m).map(|x| if mask >> x & 1 == 1 { mask } else { star }).collect())
        .collect();

    ConceptClass::from_parts(point_names, label_names, hypotheses, caps)
}

/// The full binary class: every `{0,1}`-labeling of `n` points.
pub fn full_binary_class(n: usize, caps: &Caps) -> Result<ClassRef> {
    if n == 0 {
        return Err(Error::InvalidInput("domain must have at least one point".into()));
    }
    if n >= usize::BITS as usize - 1 {
        return Err(Error::InvalidInput(format!("domain of {n} points is not representable")));
    }
    let rows = 1usize << n;
    caps.check_cells(rows, n, "full binary class")?;
    let point_names = (1..=n).map(|i| format!("x{i}")).collect();
    let label_names = vec!["0".to_string(), "1".to_string()];
    let hypotheses: Vec<Vec<usize>> =
        (0..rows).map(|h| (0..n).map(|x| h >> x & 1).collect()).collect();
    ConceptClass::from_parts(point_names, label_names, hypotheses, caps)
}

/// A seeded random class with `nx` points, `ny` labels, and at most `nh`
/// hypotheses (duplicates sampled rows collapse).
pub fn random_class(seed: u64, nx: usize, ny: usize, nh: usize, caps: &Caps) -> Result<ClassRef> {
    if nx == 0 || ny == 0 || nh == 0 {
        return Err(Error::InvalidInput(
            "random class needs at least one point, label, and hypothesis".into(),
        ));
    }
    caps.check_cells(nh, nx, "random class")?;
    let mut rng = seeded_rng(seed, 0);
    let hypotheses: Vec<Vec<usize>> =
        (0..nh).map(|_| (0..nx).map(|_| rng.gen_range(0..ny)).collect()).collect();
    let point_names = (1..=nx).map(|i| format!("x{i}")).collect();
    let label_names = (1..=ny).map(|j| format!("y{j}")).collect();
    ConceptClass::from_parts(point_names, label_names, hypotheses, caps)
}

/// The binary loss class of `class` over the product domain `points x labels`.
///
/// Hypothesis `h` maps the product point `(x, y)` to `1` when `h(x) != y`
/// and to `0` otherwise. Product points are ordered point-major. Distinct
/// hypotheses always induce distinct loss rows, so the hypothesis count is
/// preserved.
pub fn loss_class(class: &ConceptClass, caps: &Caps) -> Result<ClassRef> {
    let nx = class.n_points();
    let ny = class.n_labels();
    let cols = nx
        .checked_mul(ny)
        .ok_or_else(|| Error::Resource("loss class product domain overflows".into()))?;
    caps.check_cells(class.n_hypotheses(), cols, "loss class")?;

    let mut point_names = Vec::with_capacity(cols);
    for x in 0..nx {
        for y in 0..ny {
            point_names.push(format!("({},{})", class.point_name(x), class.label_name(y)));
        }
    }
    let label_names = vec!["0".to_string(), "1".to_string()];
    let hypotheses: Vec<Vec<usize>> = (0..class.n_hypotheses())
        .map(|h| {
            let mut row = Vec::with_capacity(cols);
            for x in 0..nx {
                for y in 0..ny {
                    row.push(usize::from(class.eval(h, x) != y));
                }
            }
            row
        })
        .collect();
    ConceptClass::from_parts(point_names, label_names, hypotheses, caps)
}
