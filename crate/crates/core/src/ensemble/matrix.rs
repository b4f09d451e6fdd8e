use thiserror::Error;

use crate::label::{argmax, ClassLabel, NUM_CLASSES};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatrixError {
    #[error("{producer}: row {row} sums to {sum}, outside 1 ± {tol}", tol = ProbabilityMatrix::ROW_SUM_TOLERANCE)]
    RowSum { producer: String, row: usize, sum: f64 },
    #[error("{producer}: row {row} column {col} has probability {value} outside [0, 1]")]
    EntryOutOfRange {
        producer: String,
        row: usize,
        col: usize,
        value: f64,
    },
}

/// Per-example class probabilities emitted by one classifier.
///
/// Every entry lies in `[0, 1]` and every row sums to 1 within
/// [`ProbabilityMatrix::ROW_SUM_TOLERANCE`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMatrix {
    producer: String,
    rows: Vec<[f64; NUM_CLASSES]>,
}

impl ProbabilityMatrix {
    pub const ROW_SUM_TOLERANCE: f64 = 1e-6;

    pub fn new(producer: impl Into<String>, rows: Vec<[f64; NUM_CLASSES]>) -> Result<Self, MatrixError> {
        let producer = producer.into();
        for (r, row) in rows.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(MatrixError::EntryOutOfRange {
                        producer,
                        row: r,
                        col: c,
                        value: v,
                    });
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > Self::ROW_SUM_TOLERANCE {
                return Err(MatrixError::RowSum { producer, row: r, sum });
            }
        }
        Ok(ProbabilityMatrix { producer, rows })
    }

    /// Skips validation; callers guarantee the rows come from a softmax or an average of valid rows.
    pub(crate) fn from_valid_rows(producer: impl Into<String>, rows: Vec<[f64; NUM_CLASSES]>) -> Self {
        ProbabilityMatrix {
            producer: producer.into(),
            rows,
        }
    }

    pub fn uniform(producer: impl Into<String>, n: usize) -> Self {
        Self::from_valid_rows(producer, vec![[1.0 / NUM_CLASSES as f64; NUM_CLASSES]; n])
    }

    pub fn producer(&self) -> &str {
        &self.producer
    }

    pub fn with_producer(mut self, producer: impl Into<String>) -> Self {
        self.producer = producer.into();
        self
    }

    pub fn rows(&self) -> &[[f64; NUM_CLASSES]] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[f64; NUM_CLASSES] {
        &self.rows[i]
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Per-row argmax, ties to the lowest class index.
    pub fn labels(&self) -> Vec<ClassLabel> {
        self.rows
            .iter()
            .map(|r| ClassLabel::from_index(argmax(r)).expect("argmax within class range"))
            .collect()
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> ProbabilityMatrix {
        Self::from_valid_rows(self.producer.clone(), indices.iter().map(|&i| self.rows[i]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_names_producer_and_row() {
        let err = ProbabilityMatrix::new("cnn", vec![[0.2, 0.5, 0.3], [0.5, 0.5, 0.01]]).unwrap_err();
        match &err {
            MatrixError::RowSum { producer, row, .. } => {
                assert_eq!(producer, "cnn");
                assert_eq!(*row, 1);
            }
            other => panic!("{other:?}"),
        }
        assert!(err.to_string().starts_with("cnn: row 1"));
        assert!(matches!(
            ProbabilityMatrix::new("x", vec![[1.2, -0.2, 0.0]]),
            Err(MatrixError::EntryOutOfRange { col: 0, .. })
        ));
        assert!(ProbabilityMatrix::new("x", vec![[0.3333333, 0.3333333, 0.3333333]]).is_ok());
    }

    #[test]
    fn labels_use_lowest_index_on_ties() {
        let m = ProbabilityMatrix::new("m", vec![[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.2, 0.2, 0.6]]).unwrap();
        assert_eq!(m.labels(), [ClassLabel::Hateful, ClassLabel::Offensive, ClassLabel::Neither]);
    }
}
