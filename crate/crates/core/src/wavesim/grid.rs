use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

/// Uniform 1D grid `origin + i·spacing`, `i < points`. The origin is kept on
/// the lattice of integer multiples of `spacing`, so shifted windows and
/// structure edges always coincide with grid points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub origin: f64,
    pub spacing: f64,
    pub points: usize,
}

impl Window {
    /// Window of `points` cells whose centre is the lattice point nearest `centre`.
    pub fn around(centre: f64, spacing: f64, points: usize) -> Result<Self> {
        if !(spacing > 0.0) || points < 3 {
            return Err(Error::InvalidArgument(format!(
                "window needs positive spacing and at least 3 points (got {spacing}, {points})"
            )));
        }
        let first = ((centre - (points / 2) as f64 * spacing) / spacing).round();
        Ok(Window {
            origin: first * spacing,
            spacing,
            points,
        })
    }

    pub fn y(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.spacing
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.y(i)).collect()
    }

    pub fn span(&self) -> f64 {
        self.points as f64 * self.spacing
    }

    /// Reference point that the co-moving window keeps on the tracked minimum.
    pub fn centre(&self) -> f64 {
        self.y(self.points / 2)
    }

    pub fn snap(&self, y: f64) -> f64 {
        ((y - self.origin) / self.spacing).round() * self.spacing + self.origin
    }

    /// Whole cells the window must move so that its centre is within half a
    /// cell of `target`.
    pub fn cells_to(&self, target: f64) -> i64 {
        let d = target - self.centre();
        if d.abs() > 0.5 * self.spacing {
            (d / self.spacing).round() as i64
        } else {
            0
        }
    }

    pub fn shifted(&self, cells: i64) -> Window {
        Window {
            origin: self.origin + cells as f64 * self.spacing,
            ..*self
        }
    }

    pub fn same_grid(&self, other: &Window) -> bool {
        self.points == other.points
            && (self.spacing - other.spacing).abs() < 1e-12
            && (self.origin - other.origin).abs() < 1e-9 * self.spacing.max(1.0)
    }

    pub fn check_same(&self, other: &Window) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }

    /// Indicator of `start <= y < start + length` on the grid.
    pub fn mask(&self, start: f64, length: f64) -> Vec<bool> {
        let eps = 1e-9 * self.spacing;
        (0..self.points)
            .map(|i| {
                let y = self.y(i);
                y >= start - eps && y < start + length - eps
            })
            .collect()
    }
}

/// Moves the contents of `a` by `cells` towards lower indices, dropping values
/// that leave the window and zero-filling the vacated cells.
pub fn shift_values(a: &mut [C64], cells: i64) {
    let n = a.len();
    let zero = C64::new(0.0, 0.0);
    if cells.unsigned_abs() as usize >= n {
        a.fill(zero);
        return;
    }
    if cells > 0 {
        let s = cells as usize;
        a.copy_within(s.., 0);
        a[n - s..].fill(zero);
    } else if cells < 0 {
        let s = (-cells) as usize;
        a.copy_within(..n - s, s);
        a[..s].fill(zero);
    }
}

/// Two-axis version of [`shift_values`] for a row-major `n × n` array.
pub fn shift_values_2d(a: &mut [C64], n: usize, cells: i64) {
    if cells == 0 {
        return;
    }
    let zero = C64::new(0.0, 0.0);
    let s = cells.unsigned_abs() as usize;
    if s >= n {
        a.fill(zero);
        return;
    }
    if cells > 0 {
        a.copy_within(s * n.., 0);
        a[(n - s) * n..].fill(zero);
    } else {
        a.copy_within(..(n - s) * n, s * n);
        a[..s * n].fill(zero);
    }
    for row in a.chunks_exact_mut(n) {
        shift_values(row, cells);
    }
}

pub fn inner(a: &[C64], b: &[C64], spacing: f64) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>() * spacing
}

pub fn norm_sqr(a: &[C64], spacing: f64) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>() * spacing
}
