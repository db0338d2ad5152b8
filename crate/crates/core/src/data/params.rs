use std::collections::HashSet;
use std::path::Path;

use super::csvio::{csv_err, field, finish, fmt_f64, parse_field, reader, writer};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// 2PL parameters of one item: discrimination `a` and difficulty `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemParams2PL<T> {
    pub item_id: String,
    pub a: T,
    pub b: T,
}

impl<T: Scalar> ItemParams2PL<T> {
    pub fn new(item_id: impl Into<String>, a: T, b: T) -> Self {
        Self {
            item_id: item_id.into(),
            a,
            b,
        }
    }
}

/// Normal latent ability distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupDist<T> {
    pub mean: T,
    pub sd: T,
}

impl<T: Scalar> GroupDist<T> {
    pub fn new(mean: T, sd: T) -> Result<Self> {
        if !mean.is_finite() || !sd.is_finite() || sd <= T::zero() {
            return Err(Error::Validation(format!("invalid group distribution ({mean}, {sd})")));
        }
        Ok(Self { mean, sd })
    }

    pub fn standard() -> Self {
        Self {
            mean: T::zero(),
            sd: T::one(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbilityEstimate<T> {
    pub examinee_id: String,
    pub theta: T,
    /// Posterior standard deviation at the mode.
    pub se: Option<T>,
}

const PARAMS_HEADER: [&str; 3] = ["item_id", "a", "b"];
const GROUP_HEADER: [&str; 2] = ["mean", "sd"];
const ABILITY_HEADER: [&str; 3] = ["examinee_id", "theta", "se"];

pub fn write_params(path: impl AsRef<Path>, params: &[ItemParams2PL<f64>]) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    w.write_record(PARAMS_HEADER).map_err(|e| csv_err(path, e))?;
    for p in params {
        w.write_record([p.item_id.as_str(), &fmt_f64(p.a), &fmt_f64(p.b)])
            .map_err(|e| csv_err(path, e))?;
    }
    finish(path, w)
}

pub fn read_params(path: impl AsRef<Path>) -> Result<Vec<ItemParams2PL<f64>>> {
    let path = path.as_ref();
    let mut rdr = reader(path, &PARAMS_HEADER)?;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let id = field(path, &rec, 0)?.to_string();
        let a: f64 = parse_field(path, &rec, 1)?;
        let b: f64 = parse_field(path, &rec, 2)?;
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidItem {
                item_id: id,
                message: format!("non-finite parameters ({a}, {b})"),
            });
        }
        if !seen.insert(id.clone()) {
            return Err(Error::InvalidItem {
                item_id: id,
                message: "duplicate parameter row".into(),
            });
        }
        out.push(ItemParams2PL::new(id, a, b));
    }
    Ok(out)
}

pub fn write_group(path: impl AsRef<Path>, group: &GroupDist<f64>) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    w.write_record(GROUP_HEADER).map_err(|e| csv_err(path, e))?;
    w.write_record([fmt_f64(group.mean), fmt_f64(group.sd)])
        .map_err(|e| csv_err(path, e))?;
    finish(path, w)
}

pub fn read_group(path: impl AsRef<Path>) -> Result<GroupDist<f64>> {
    let path = path.as_ref();
    let mut rdr = reader(path, &GROUP_HEADER)?;
    let rec = rdr
        .records()
        .next()
        .ok_or_else(|| Error::parse(path, "no group row"))?
        .map_err(|e| csv_err(path, e))?;
    GroupDist::new(parse_field(path, &rec, 0)?, parse_field(path, &rec, 1)?)
}

pub fn write_abilities(path: impl AsRef<Path>, abilities: &[AbilityEstimate<f64>]) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    w.write_record(ABILITY_HEADER).map_err(|e| csv_err(path, e))?;
    for est in abilities {
        let se = est.se.map(fmt_f64).unwrap_or_default();
        w.write_record([est.examinee_id.as_str(), &fmt_f64(est.theta), &se])
            .map_err(|e| csv_err(path, e))?;
    }
    finish(path, w)
}

pub fn read_abilities(path: impl AsRef<Path>) -> Result<Vec<AbilityEstimate<f64>>> {
    let path = path.as_ref();
    let mut rdr = reader(path, &ABILITY_HEADER)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let theta: f64 = parse_field(path, &rec, 1)?;
        if !theta.is_finite() {
            return Err(Error::parse(path, format!("non-finite theta {theta}")));
        }
        let se = if field(path, &rec, 2)?.is_empty() {
            None
        } else {
            Some(parse_field::<f64>(path, &rec, 2)?)
        };
        out.push(AbilityEstimate {
            examinee_id: field(path, &rec, 0)?.to_string(),
            theta,
            se,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    proptest! {
        #[test]
        fn params_round_trip_exactly(
            rows in proptest::collection::vec((1e-3f64..10.0, -30.0f64..30.0), 1..40)
        ) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("params.csv");
            let params: Vec<_> = rows
                .iter()
                .enumerate()
                .map(|(j, &(a, b))| ItemParams2PL::new(format!("item{j}"), a, b))
                .collect();
            write_params(&path, &params).unwrap();
            prop_assert_eq!(read_params(&path).unwrap(), params);
        }

        #[test]
        fn abilities_round_trip_exactly(
            rows in proptest::collection::vec((-40.0f64..40.0, proptest::option::of(0.0f64..20.0)), 0..30)
        ) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("theta.csv");
            let est: Vec<_> = rows
                .iter()
                .enumerate()
                .map(|(i, &(theta, se))| AbilityEstimate { examinee_id: format!("E{i}"), theta, se })
                .collect();
            write_abilities(&path, &est).unwrap();
            prop_assert_eq!(read_abilities(&path).unwrap(), est);
        }
    }

    #[test]
    fn group_round_trip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("group.csv");
        let g = GroupDist::new(-0.29, 1.0737).unwrap();
        write_group(&path, &g).unwrap();
        assert_eq!(read_group(&path).unwrap(), g);
        assert!(GroupDist::new(0.0, 0.0).is_err());
        assert!(GroupDist::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn duplicate_param_rows_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("params.csv");
        std::fs::write(&path, "item_id,a,b\nx,1,0\nx,2,0\n").unwrap();
        assert!(read_params(&path).is_err());
    }

    #[test]
    fn wrong_header_is_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("params.csv");
        std::fs::write(&path, "id,a,b\nx,1,0\n").unwrap();
        assert!(matches!(read_params(&path), Err(Error::Parse { .. })));
    }
}
