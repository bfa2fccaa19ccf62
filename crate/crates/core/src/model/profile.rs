use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("player {player}: expected {expected} values, got {got}")]
    RowLength { player: usize, expected: usize, got: usize },
    #[error("player {player}: value {value} is not finite and non-negative")]
    BadValue { player: usize, value: f64 },
}

/// Valuations of all players, stored player-major. Matching players have one entry per
/// item; matroid players have a single entry.
#[derive(Debug, Clone, PartialEq)]
pub struct ValuationProfile {
    width: usize,
    values: Vec<f64>,
}

impl ValuationProfile {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, ProfileError> {
        let width = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * width);
        for (player, row) in rows.into_iter().enumerate() {
            if row.len() != width {
                return Err(ProfileError::RowLength { player, expected: width, got: row.len() });
            }
            if let Some(&value) = row.iter().find(|v| !v.is_finite() || **v < 0.0) {
                return Err(ProfileError::BadValue { player, value });
            }
            values.extend(row);
        }
        Ok(Self { width, values })
    }

    /// One scalar value per player (matroid and single-value settings).
    pub fn scalars(values: Vec<f64>) -> Result<Self, ProfileError> {
        Self::new(values.into_iter().map(|v| vec![v]).collect())
    }

    pub(crate) fn from_flat(width: usize, values: Vec<f64>) -> Self {
        debug_assert!(width > 0 && values.len() % width == 0);
        Self { width, values }
    }

    pub fn players(&self) -> usize {
        if self.width == 0 {
            0
        } else {
            self.values.len() / self.width
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn row(&self, player: usize) -> &[f64] {
        &self.values[player * self.width..(player + 1) * self.width]
    }

    pub fn value(&self, player: usize, item: usize) -> f64 {
        self.values[player * self.width + item]
    }

    /// The player's scalar type: its largest entry.
    pub fn scalar(&self, player: usize) -> f64 {
        self.row(player).iter().copied().fold(0.0, f64::max)
    }

    /// Copy with one player's row replaced.
    pub fn with_row(&self, player: usize, row: &[f64]) -> Self {
        assert_eq!(row.len(), self.width, "row width mismatch");
        let mut out = self.clone();
        out.values[player * self.width..(player + 1) * self.width].copy_from_slice(row);
        out
    }

    pub fn matrix(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.width).map(<[f64]>::to_vec).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_and_negative() {
        assert!(ValuationProfile::new(vec![vec![0.1, 0.2], vec![0.3]]).is_err());
        assert!(ValuationProfile::new(vec![vec![-0.1]]).is_err());
        assert!(ValuationProfile::new(vec![vec![f64::NAN]]).is_err());
    }

    #[test]
    fn scalar_is_row_max() {
        let p = ValuationProfile::new(vec![vec![0.6, 0.4], vec![0.0, 0.7]]).unwrap();
        assert_eq!(p.scalar(0), 0.6);
        assert_eq!(p.scalar(1), 0.7);
        let q = p.with_row(1, &[0.1, 0.2]);
        assert_eq!(q.row(1), &[0.1, 0.2]);
        assert_eq!(q.row(0), p.row(0));
    }
}
