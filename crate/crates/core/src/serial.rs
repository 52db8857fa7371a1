//! JSON layout for dense matrices: `{rows, cols, data}` with `data` row-major.

use nalgebra::{DMatrix, DVector};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::linalg::Scalar;

#[derive(Serialize, Deserialize)]
struct Dense<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

pub mod dense {
    use super::*;

    pub fn serialize<S: Serializer, T: Scalar + Serialize>(m: &DMatrix<T>, s: S) -> Result<S::Ok, S::Error> {
        let (rows, cols) = m.shape();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(m[(i, j)]);
            }
        }
        Dense { rows, cols, data }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>, T: Scalar + Deserialize<'de>>(d: D) -> Result<DMatrix<T>, D::Error> {
        let v = Dense::<T>::deserialize(d)?;
        if v.data.len() != v.rows * v.cols {
            return Err(D::Error::custom(format!(
                "matrix data has {} entries, expected {}x{}",
                v.data.len(),
                v.rows,
                v.cols
            )));
        }
        if !v.data.iter().all(|x| x.is_finite()) {
            return Err(D::Error::custom("matrix entries must be finite"));
        }
        Ok(DMatrix::from_row_slice(v.rows, v.cols, &v.data))
    }
}

pub mod dense_vec {
    use super::*;

    pub fn serialize<S: Serializer, T: Scalar + Serialize>(v: &DVector<T>, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>, T: Scalar + Deserialize<'de>>(d: D) -> Result<DVector<T>, D::Error> {
        let data = Vec::<T>::deserialize(d)?;
        if !data.iter().all(|x| x.is_finite()) {
            return Err(D::Error::custom("vector entries must be finite"));
        }
        Ok(DVector::from_vec(data))
    }
}
