//! Serde helpers for nalgebra types, written as nested lists.

use nalgebra::{DMatrix, DVector};
use serde::ser::{SerializeSeq, Serializer};

pub fn matrix<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for r in m.row_iter() {
        seq.serialize_element(&r.iter().copied().collect::<Vec<f64>>())?;
    }
    seq.end()
}

pub fn vector<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter())
}
