use std::collections::HashMap;
use std::path::Path;

use super::csvio::{csv_err, field, finish, fmt_f64, parse_field, reader, writer};
use super::item::ItemBank;
use crate::error::{Error, Result};

/// Maximum allowed deviation of an option-probability row sum from 1.
pub const PROB_SUM_TOL: f64 = 1e-6;

/// Examinee x item table of option-probability vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct OptionProbMatrix {
    examinee_ids: Vec<String>,
    item_ids: Vec<String>,
    /// Examinee-major cells.
    cells: Vec<Vec<f64>>,
    retention: Option<Vec<f64>>,
}

fn check_prob_row(examinee_id: &str, item_id: &str, row: &[f64]) -> Result<()> {
    let bad = |message: String| Error::InvalidProbabilities {
        examinee_id: examinee_id.to_string(),
        item_id: item_id.to_string(),
        message,
    };
    if row.is_empty() {
        return Err(bad("empty probability vector".into()));
    }
    if let Some(p) = row.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(bad(format!("invalid probability {p}")));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > PROB_SUM_TOL {
        return Err(bad(format!("probabilities sum to {sum}")));
    }
    Ok(())
}

fn check_retention(n: usize, retention: &Option<Vec<f64>>) -> Result<()> {
    if let Some(r) = retention {
        if r.len() != n {
            return Err(Error::LengthMismatch {
                left: r.len(),
                right: n,
            });
        }
        if let Some(p) = r.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Validation(format!("retention {p} outside [0, 1]")));
        }
    }
    Ok(())
}

impl OptionProbMatrix {
    pub fn new(
        examinee_ids: Vec<String>,
        item_ids: Vec<String>,
        cells: Vec<Vec<f64>>,
        retention: Option<Vec<f64>>,
    ) -> Result<Self> {
        let expected = examinee_ids.len() * item_ids.len();
        if cells.len() != expected {
            return Err(Error::LengthMismatch {
                left: cells.len(),
                right: expected,
            });
        }
        for (c, row) in cells.iter().enumerate() {
            let (i, j) = (c / item_ids.len(), c % item_ids.len());
            check_prob_row(&examinee_ids[i], &item_ids[j], row)?;
        }
        check_retention(examinee_ids.len(), &retention)?;
        Ok(Self {
            examinee_ids,
            item_ids,
            cells,
            retention,
        })
    }

    pub fn examinee_ids(&self) -> &[String] {
        &self.examinee_ids
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn n_examinees(&self) -> usize {
        self.examinee_ids.len()
    }

    pub fn n_items(&self) -> usize {
        self.item_ids.len()
    }

    pub fn cell(&self, examinee: usize, item: usize) -> &[f64] {
        &self.cells[examinee * self.item_ids.len() + item]
    }

    pub fn retention(&self) -> Option<&[f64]> {
        self.retention.as_deref()
    }

    pub fn with_retention(mut self, retention: Option<Vec<f64>>) -> Result<Self> {
        check_retention(self.examinee_ids.len(), &retention)?;
        self.retention = retention;
        Ok(self)
    }

    /// Checks item ids and option counts against `bank`.
    pub fn validate_against(&self, bank: &ItemBank) -> Result<()> {
        for (j, id) in self.item_ids.iter().enumerate() {
            let item = bank.get(id).ok_or_else(|| Error::InvalidItem {
                item_id: id.clone(),
                message: "not present in item bank".into(),
            })?;
            for (i, ex) in self.examinee_ids.iter().enumerate() {
                let len = self.cell(i, j).len();
                if len != item.n_options() {
                    return Err(Error::InvalidProbabilities {
                        examinee_id: ex.clone(),
                        item_id: id.clone(),
                        message: format!("{len} probabilities for {} options", item.n_options()),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Examinee x item chosen options and their 0/1 scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMatrix {
    examinee_ids: Vec<String>,
    item_ids: Vec<String>,
    chosen: Vec<u32>,
    scored: Vec<u8>,
    retention: Option<Vec<f64>>,
}

impl ResponseMatrix {
    pub fn new(
        examinee_ids: Vec<String>,
        item_ids: Vec<String>,
        chosen: Vec<u32>,
        scored: Vec<u8>,
        retention: Option<Vec<f64>>,
    ) -> Result<Self> {
        let expected = examinee_ids.len() * item_ids.len();
        for len in [chosen.len(), scored.len()] {
            if len != expected {
                return Err(Error::LengthMismatch {
                    left: len,
                    right: expected,
                });
            }
        }
        if scored.iter().any(|&s| s > 1) {
            return Err(Error::Validation("scored cells must be 0 or 1".into()));
        }
        check_retention(examinee_ids.len(), &retention)?;
        Ok(Self {
            examinee_ids,
            item_ids,
            chosen,
            scored,
            retention,
        })
    }

    /// Builds a matrix from chosen options, deriving scores from the bank's keys.
    /// Columns follow the bank order.
    pub fn from_choices(
        bank: &ItemBank,
        examinee_ids: Vec<String>,
        chosen: Vec<u32>,
        retention: Option<Vec<f64>>,
    ) -> Result<Self> {
        let k = bank.len();
        let scored = chosen
            .iter()
            .enumerate()
            .map(|(c, &opt)| u8::from(opt as usize == bank.items()[c % k].key))
            .collect();
        let m = Self::new(examinee_ids, bank.item_ids(), chosen, scored, retention)?;
        m.validate_against(bank)?;
        Ok(m)
    }

    /// Builds a matrix from 0/1 scores alone; incorrect cells choose the first distractor.
    pub fn from_scored(bank: &ItemBank, examinee_ids: Vec<String>, scored: Vec<u8>) -> Result<Self> {
        let k = bank.len();
        let chosen = scored
            .iter()
            .enumerate()
            .map(|(c, &s)| {
                let item = &bank.items()[c % k];
                let opt = if s == 1 { item.key } else { usize::from(item.key == 0) };
                opt as u32
            })
            .collect();
        Self::from_choices(bank, examinee_ids, chosen, None)
    }

    pub fn examinee_ids(&self) -> &[String] {
        &self.examinee_ids
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn n_examinees(&self) -> usize {
        self.examinee_ids.len()
    }

    pub fn n_items(&self) -> usize {
        self.item_ids.len()
    }

    pub fn chosen(&self, examinee: usize, item: usize) -> u32 {
        self.chosen[examinee * self.item_ids.len() + item]
    }

    pub fn scored(&self, examinee: usize, item: usize) -> u8 {
        self.scored[examinee * self.item_ids.len() + item]
    }

    /// Scores of one examinee in column order.
    pub fn scored_row(&self, examinee: usize) -> &[u8] {
        let k = self.item_ids.len();
        &self.scored[examinee * k..(examinee + 1) * k]
    }

    pub fn scored_column(&self, item: usize) -> impl Iterator<Item = u8> + '_ {
        self.scored.iter().skip(item).step_by(self.item_ids.len()).copied()
    }

    pub fn total_scores(&self) -> Vec<u32> {
        (0..self.n_examinees())
            .map(|i| self.scored_row(i).iter().map(|&s| u32::from(s)).sum())
            .collect()
    }

    pub fn retention(&self) -> Option<&[f64]> {
        self.retention.as_deref()
    }

    pub fn with_retention(mut self, retention: Option<Vec<f64>>) -> Result<Self> {
        check_retention(self.examinee_ids.len(), &retention)?;
        self.retention = retention;
        Ok(self)
    }

    /// Checks ids, option ranges, and that every scored cell equals `chosen == key`.
    pub fn validate_against(&self, bank: &ItemBank) -> Result<()> {
        for (j, id) in self.item_ids.iter().enumerate() {
            let item = bank.get(id).ok_or_else(|| Error::InvalidItem {
                item_id: id.clone(),
                message: "not present in item bank".into(),
            })?;
            for (i, ex) in self.examinee_ids.iter().enumerate() {
                let chosen = self.chosen(i, j) as usize;
                if chosen >= item.n_options() {
                    return Err(Error::Validation(format!(
                        "examinee {ex}, item {id}: chosen option {chosen} out of range"
                    )));
                }
                if self.scored(i, j) != u8::from(chosen == item.key) {
                    return Err(Error::Validation(format!(
                        "examinee {ex}, item {id}: scored {} inconsistent with chosen {chosen} (key {})",
                        self.scored(i, j),
                        item.key
                    )));
                }
            }
        }
        Ok(())
    }

    /// Concatenates examinees of two matrices over the same items.
    pub fn stack(&self, other: &ResponseMatrix) -> Result<ResponseMatrix> {
        if self.item_ids != other.item_ids {
            return Err(Error::Validation("cannot stack matrices over different items".into()));
        }
        let retention = match (&self.retention, &other.retention) {
            (Some(a), Some(b)) => Some(a.iter().chain(b).copied().collect()),
            _ => None,
        };
        ResponseMatrix::new(
            self.examinee_ids.iter().chain(&other.examinee_ids).cloned().collect(),
            self.item_ids.clone(),
            self.chosen.iter().chain(&other.chosen).copied().collect(),
            self.scored.iter().chain(&other.scored).copied().collect(),
            retention,
        )
    }
}

/// Incrementally assigns dense indices to ids in first-appearance order.
#[derive(Default)]
struct Interner {
    ids: Vec<String>,
    index: HashMap<String, usize>,
}

impl Interner {
    fn intern(&mut self, id: &str) -> usize {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        self.ids.push(id.to_string());
        self.index.insert(id.to_string(), self.ids.len() - 1);
        self.ids.len() - 1
    }
}

const PROB_HEADER: [&str; 4] = ["examinee_id", "item_id", "option_index", "prob"];
const RESPONSE_HEADER: [&str; 4] = ["examinee_id", "item_id", "chosen", "scored"];
const RETENTION_HEADER: [&str; 2] = ["examinee_id", "retention"];

pub fn write_option_prob_matrix(path: impl AsRef<Path>, m: &OptionProbMatrix) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    w.write_record(PROB_HEADER).map_err(|e| csv_err(path, e))?;
    for (i, ex) in m.examinee_ids.iter().enumerate() {
        for (j, item) in m.item_ids.iter().enumerate() {
            for (o, &p) in m.cell(i, j).iter().enumerate() {
                w.write_record([ex.as_str(), item.as_str(), &o.to_string(), &fmt_f64(p)])
                    .map_err(|e| csv_err(path, e))?;
            }
        }
    }
    finish(path, w)
}

/// Reads a long-format option-probability CSV. Rows must be grouped by
/// examinee and, within an examinee, by item with contiguous option indices
/// starting at 0. Every examinee must answer the same items in the same order.
pub fn read_option_prob_matrix(path: impl AsRef<Path>) -> Result<OptionProbMatrix> {
    let path = path.as_ref();
    let mut rdr = reader(path, &PROB_HEADER)?;
    let mut examinees = Interner::default();
    let mut items = Interner::default();
    // (examinee, item) -> probabilities, in file order
    let mut cells: Vec<((usize, usize), Vec<f64>)> = Vec::new();
    let mut rec = csv::StringRecord::new();
    while rdr.read_record(&mut rec).map_err(|e| csv_err(path, e))? {
        let line = rec.position().map_or(0, |p| p.line());
        let ex = examinees.intern(field(path, &rec, 0)?);
        let it = items.intern(field(path, &rec, 1)?);
        let opt: usize = parse_field(path, &rec, 2)?;
        let prob: f64 = parse_field(path, &rec, 3)?;
        match cells.last_mut() {
            Some((key, probs)) if *key == (ex, it) => {
                if opt != probs.len() {
                    return Err(Error::parse(
                        path,
                        format!("line {line}: option index {opt} out of sequence"),
                    ));
                }
                probs.push(prob);
            }
            _ => {
                if opt != 0 {
                    return Err(Error::parse(path, format!("line {line}: cell must start at option 0")));
                }
                cells.push(((ex, it), vec![prob]));
            }
        }
    }
    let n_items = items.ids.len();
    for (c, ((ex, it), _)) in cells.iter().enumerate() {
        if (*ex, *it) != (c / n_items.max(1), c % n_items.max(1)) {
            return Err(Error::parse(
                path,
                format!(
                    "examinee {} item {}: rows must be grouped by examinee with a complete item set in a fixed order",
                    examinees.ids[*ex], items.ids[*it]
                ),
            ));
        }
    }
    OptionProbMatrix::new(
        examinees.ids,
        items.ids,
        cells.into_iter().map(|(_, p)| p).collect(),
        None,
    )
}

pub fn write_response_matrix(path: impl AsRef<Path>, m: &ResponseMatrix) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    w.write_record(RESPONSE_HEADER).map_err(|e| csv_err(path, e))?;
    for (i, ex) in m.examinee_ids.iter().enumerate() {
        for (j, item) in m.item_ids.iter().enumerate() {
            w.write_record([
                ex.as_str(),
                item.as_str(),
                &m.chosen(i, j).to_string(),
                &m.scored(i, j).to_string(),
            ])
            .map_err(|e| csv_err(path, e))?;
        }
    }
    finish(path, w)
}

/// Reads a long-format response CSV and validates it against `bank`.
pub fn read_response_matrix(path: impl AsRef<Path>, bank: &ItemBank) -> Result<ResponseMatrix> {
    let path = path.as_ref();
    let mut rdr = reader(path, &RESPONSE_HEADER)?;
    let mut examinees = Interner::default();
    let mut items = Interner::default();
    let mut chosen = Vec::new();
    let mut scored = Vec::new();
    let mut rec = csv::StringRecord::new();
    while rdr.read_record(&mut rec).map_err(|e| csv_err(path, e))? {
        let ex = examinees.intern(field(path, &rec, 0)?);
        let it = items.intern(field(path, &rec, 1)?);
        let c = chosen.len();
        let n_items = items.ids.len();
        // Item set is fixed by the first examinee.
        let expected = if ex == 0 { (0, c) } else { (c / n_items, c % n_items) };
        if (ex, it) != expected {
            let line = rec.position().map_or(0, |p| p.line());
            return Err(Error::parse(
                path,
                format!("line {line}: rows must be grouped by examinee with a complete item set in a fixed order"),
            ));
        }
        chosen.push(parse_field::<u32>(path, &rec, 2)?);
        scored.push(parse_field::<u8>(path, &rec, 3)?);
    }
    let m = ResponseMatrix::new(examinees.ids, items.ids, chosen, scored, None)?;
    if m.n_items() != bank.len() {
        return Err(Error::Validation(format!(
            "response file covers {} items, bank has {}",
            m.n_items(),
            bank.len()
        )));
    }
    m.validate_against(bank)?;
    Ok(m)
}

pub fn write_retention(path: impl AsRef<Path>, examinee_ids: &[String], retention: &[f64]) -> Result<()> {
    let path = path.as_ref();
    if examinee_ids.len() != retention.len() {
        return Err(Error::LengthMismatch {
            left: examinee_ids.len(),
            right: retention.len(),
        });
    }
    let mut w = writer(path)?;
    w.write_record(RETENTION_HEADER).map_err(|e| csv_err(path, e))?;
    for (id, r) in examinee_ids.iter().zip(retention) {
        w.write_record([id.as_str(), &fmt_f64(*r)])
            .map_err(|e| csv_err(path, e))?;
    }
    finish(path, w)
}

/// Reads a retention sidecar and aligns it to `examinee_ids`.
pub fn read_retention(path: impl AsRef<Path>, examinee_ids: &[String]) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let mut rdr = reader(path, &RETENTION_HEADER)?;
    let mut by_id = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let id = field(path, &rec, 0)?.to_string();
        let r: f64 = parse_field(path, &rec, 1)?;
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::Validation(format!(
                "examinee {id}: retention {r} outside [0, 1]"
            )));
        }
        if by_id.insert(id.clone(), r).is_some() {
            return Err(Error::Validation(format!("examinee {id}: duplicate retention row")));
        }
    }
    examinee_ids
        .iter()
        .map(|id| {
            by_id
                .get(id)
                .copied()
                .ok_or_else(|| Error::Validation(format!("examinee {id}: no retention row")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;
    use std::fs;

    use super::*;
    use crate::data::Item;

    fn bank(k: usize) -> ItemBank {
        let items = (0..k)
            .map(|j| {
                let opts = (0..4).map(|o| format!("opt{o}")).collect();
                Item::new(format!("i{j}"), "stem", opts, j % 4)
            })
            .collect();
        ItemBank::new(items, BTreeMap::new()).unwrap()
    }

    fn ids(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    #[test]
    fn single_cell_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let m = OptionProbMatrix::new(ids("e", 1), ids("i", 1), vec![vec![0.1, 0.2, 0.3, 0.4]], None).unwrap();
        write_option_prob_matrix(&path, &m).unwrap();
        let back = read_option_prob_matrix(&path).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.cell(0, 0), &[0.1, 0.2, 0.3, 0.4]);
    }

    #[test]
    fn unnormalized_row_rejected_on_read() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        fs::write(
            &path,
            "examinee_id,item_id,option_index,prob\ne1,i1,0,0.5\ne1,i1,1,0.5\ne1,i1,2,0.5\ne1,i1,3,0.5\n",
        )
        .unwrap();
        match read_option_prob_matrix(&path) {
            Err(Error::InvalidProbabilities {
                examinee_id, item_id, ..
            }) => assert_eq!((examinee_id.as_str(), item_id.as_str()), ("e1", "i1")),
            other => panic!("expected normalization error, got {other:?}"),
        }
    }

    #[test]
    fn negative_probability_rejected() {
        assert!(OptionProbMatrix::new(ids("e", 1), ids("i", 1), vec![vec![1.2, -0.2]], None).is_err());
    }

    #[test]
    fn ungrouped_rows_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        fs::write(
            &path,
            "examinee_id,item_id,option_index,prob\ne1,i1,0,1\ne2,i1,0,1\ne1,i2,0,1\ne2,i2,0,1\n",
        )
        .unwrap();
        assert!(matches!(read_option_prob_matrix(&path), Err(Error::Parse { .. })));
    }

    #[test]
    fn option_count_checked_against_bank() {
        let m = OptionProbMatrix::new(ids("e", 1), ids("i", 1), vec![vec![0.5, 0.5]], None).unwrap();
        assert!(m.validate_against(&bank(1)).is_err());
    }

    #[test]
    fn inconsistent_scored_rejected_on_read() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        // item i0 is keyed 0; choosing 1 must score 0
        fs::write(&path, "examinee_id,item_id,chosen,scored\ne1,i0,1,1\n").unwrap();
        assert!(matches!(
            read_response_matrix(&path, &bank(1)),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn response_dimension_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        fs::write(&path, "examinee_id,item_id,chosen,scored\ne1,i0,0,1\n").unwrap();
        assert!(read_response_matrix(&path, &bank(2)).is_err());
    }

    #[test]
    fn responses_round_trip() {
        let b = bank(3);
        let m = ResponseMatrix::from_choices(&b, ids("e", 2), vec![0, 1, 2, 3, 1, 2], None).unwrap();
        assert_eq!(m.scored_row(0), &[1, 1, 1]);
        assert_eq!(m.scored_row(1), &[0, 1, 1]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        write_response_matrix(&path, &m).unwrap();
        assert_eq!(read_response_matrix(&path, &b).unwrap(), m);
    }

    #[test]
    fn retention_sidecar_aligns_by_id() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ret.csv");
        write_retention(&path, &ids("e", 3), &[0.25, 0.5, 1.0]).unwrap();
        let order = vec!["e2".to_string(), "e0".to_string()];
        assert_eq!(read_retention(&path, &order).unwrap(), vec![1.0, 0.25]);
        assert!(read_retention(&path, &["zz".to_string()]).is_err());
    }
}
