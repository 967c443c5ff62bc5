use serde::{Deserialize, Serialize};

use super::mask::VesselMap;
use crate::error::{Error, Result};

pub const DEFAULT_MIN_BOX: usize = 16;

/// Fraction of pixels marked as vessel.
pub fn vessel_density(map: &VesselMap) -> f64 {
    map.count_ones() as f64 / map.area() as f64
}

/// Number of `size x size` cells, on a grid anchored at the origin with
/// partial cells at the right and bottom edges, holding at least one vessel
/// pixel.
pub fn box_count(map: &VesselMap, size: usize) -> usize {
    assert!(size >= 1, "box size must be positive");
    let cols = map.width().div_ceil(size);
    let rows = map.height().div_ceil(size);
    let mut hit = vec![false; cols * rows];
    let mut count = 0;
    for (x, y) in map.ones() {
        let cell = (y / size) * cols + x / size;
        if !hit[cell] {
            hit[cell] = true;
            count += 1;
        }
    }
    count
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxCount {
    pub box_size: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxCountSeries {
    /// Largest box first, halving down to the minimum size.
    pub entries: Vec<BoxCount>,
    pub fitted_dimension: f64,
    pub r2: f64,
}

/// Box sizes from the largest power of two not exceeding the longer side,
/// halving while the size stays at or above `min_box`.
pub fn box_sizes(width: usize, height: usize, min_box: usize) -> Vec<usize> {
    let longer = width.max(height);
    let mut s = 1usize << (usize::BITS - 1 - longer.leading_zeros());
    let mut out = Vec::new();
    while s >= min_box.max(1) {
        out.push(s);
        if s == 1 {
            break;
        }
        s /= 2;
    }
    out
}

/// Box-counting dimension: least-squares slope of `ln N(s)` against
/// `ln(1/s)` over the dyadic box sizes.
pub fn fractal_dimension(map: &VesselMap, min_box: usize) -> Result<BoxCountSeries> {
    if min_box == 0 {
        return Err(Error::InvalidConfig("min_box must be positive".into()));
    }
    if map.width().max(map.height()) < 2 * min_box {
        return Err(Error::ImageTooSmall {
            width: map.width(),
            height: map.height(),
            min_box,
        });
    }
    if map.count_ones() == 0 {
        return Err(Error::EmptyMask);
    }
    let entries: Vec<BoxCount> = box_sizes(map.width(), map.height(), min_box)
        .into_iter()
        .map(|s| BoxCount {
            box_size: s,
            count: box_count(map, s),
        })
        .collect();

    let xs: Vec<f64> = entries.iter().map(|e| -(e.box_size as f64).ln()).collect();
    let ys: Vec<f64> = entries.iter().map(|e| (e.count as f64).ln()).collect();
    let (slope, r2) = least_squares(&xs, &ys);
    Ok(BoxCountSeries {
        entries,
        fitted_dimension: slope,
        r2,
    })
}

/// Slope and coefficient of determination of the OLS line through the
/// points. A fit with no residual variance reports r2 = 1.
fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    (slope, r2)
}
