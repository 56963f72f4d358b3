use serde::{Deserialize, Serialize};

use super::TransformSpec;
use crate::error::{ChemError, Result};

/// Which shearlet cone a directional band lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cone {
    Horizontal,
    Vertical,
    /// Glued window straddling both cones along a diagonal.
    Diagonal,
}

/// Orientation label of a subband.
///
/// Angles describe the orientation of the structures a band responds to
/// (edges, stripe crests), measured in degrees from the column axis towards
/// the row axis, in `[0, 180)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Orientation {
    Approximation,
    /// Lowpass along columns, highpass along rows: horizontal structures.
    Lh,
    /// Highpass along columns, lowpass along rows: vertical structures.
    Hl,
    /// Highpass along both axes: diagonal structures.
    Hh,
    Shear { cone: Cone, shear: i32, angle_deg: f64 },
}

impl Orientation {
    pub fn label(&self) -> String {
        match self {
            Orientation::Approximation => "LL".into(),
            Orientation::Lh => "LH".into(),
            Orientation::Hl => "HL".into(),
            Orientation::Hh => "HH".into(),
            Orientation::Shear { angle_deg, .. } => format!("{angle_deg:.1}deg"),
        }
    }

    /// Structure orientation in degrees, when the band has a single one.
    /// `HH` mixes both diagonals and reports 45.
    pub fn angle_deg(&self) -> Option<f64> {
        match self {
            Orientation::Approximation => None,
            Orientation::Lh => Some(0.0),
            Orientation::Hl => Some(90.0),
            Orientation::Hh => Some(45.0),
            Orientation::Shear { angle_deg, .. } => Some(*angle_deg),
        }
    }

    pub fn is_approximation(&self) -> bool {
        matches!(self, Orientation::Approximation)
    }
}

/// One (scale, orientation) block of the flattened coefficient vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subband {
    /// 1 is the finest scale; the approximation band sits one above the coarsest detail scale.
    pub scale: usize,
    pub orientation: Orientation,
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Subband {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Maps flat coefficient indices to (scale, orientation, position).
///
/// Ordering is coarsest-first: the approximation band, then detail scales from
/// coarsest to finest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubbandLayout {
    pub transform: TransformSpec,
    pub image_rows: usize,
    pub image_cols: usize,
    /// Number of detail scales.
    pub levels: usize,
    subbands: Vec<Subband>,
}

impl SubbandLayout {
    pub fn new(
        transform: TransformSpec,
        image_rows: usize,
        image_cols: usize,
        levels: usize,
        subbands: Vec<Subband>,
    ) -> Result<Self> {
        let layout = Self {
            transform,
            image_rows,
            image_cols,
            levels,
            subbands,
        };
        layout.validate()?;
        Ok(layout)
    }

    /// Checks the partition, single-approximation and scale-ordering invariants.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ChemError::LayoutMismatch(m));
        let mut next = 0;
        for (i, b) in self.subbands.iter().enumerate() {
            if b.offset != next {
                return bad(format!("subband {i} starts at {} expected {next}", b.offset));
            }
            if b.is_empty() {
                return bad(format!("subband {i} is empty"));
            }
            next += b.len();
        }
        let approx: Vec<_> = self
            .subbands
            .iter()
            .filter(|b| b.orientation.is_approximation())
            .collect();
        if approx.len() != 1 {
            return bad(format!("expected one approximation band, found {}", approx.len()));
        }
        if !self.subbands[0].orientation.is_approximation() {
            return bad("approximation band must come first".into());
        }
        if self.subbands[0].scale != self.levels + 1 {
            return bad("approximation band must carry scale levels+1".into());
        }
        for w in self.subbands.windows(2) {
            if w[1].scale > w[0].scale {
                return bad("scales must be ordered coarsest-first".into());
            }
        }
        if self.subbands.iter().skip(1).any(|b| b.scale == 0 || b.scale > self.levels) {
            return bad("detail scale out of range".into());
        }
        Ok(())
    }

    pub fn subbands(&self) -> &[Subband] {
        &self.subbands
    }

    pub fn total_len(&self) -> usize {
        self.subbands.last().map_or(0, |b| b.offset + b.len())
    }

    /// Index of the subband containing flat coefficient `j`.
    pub fn subband_index(&self, j: usize) -> usize {
        assert!(j < self.total_len(), "coefficient index {j} out of range");
        self.subbands.partition_point(|b| b.offset <= j) - 1
    }

    pub fn subband_of(&self, j: usize) -> &Subband {
        &self.subbands[self.subband_index(j)]
    }

    pub fn scale_of(&self, j: usize) -> usize {
        self.subband_of(j).scale
    }

    /// Number of distinct scale indices, including the approximation.
    pub fn scale_count(&self) -> usize {
        self.levels + 1
    }

    /// Flat indices of coefficients whose scale is at most `max_scale`.
    pub fn indices_up_to_scale(&self, max_scale: usize) -> Vec<usize> {
        self.subbands
            .iter()
            .filter(|b| b.scale <= max_scale)
            .flat_map(|b| b.range())
            .collect()
    }

    pub fn same_shape(&self, other: &SubbandLayout) -> bool {
        self == other
    }
}
