//! Explanation data: per-mode spectral response, per-point petal glyphs and
//! grid aggregation of thumbnails.

use std::path::Path;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::data::Thumbnails;
use crate::error::{invalid, Error, Result};
use crate::optimizer::ProjectionMatrix;
use crate::spectral::SpectralSubspace;

/// Modes shown per glyph unless configured otherwise.
pub const DEFAULT_GLYPH_MODES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralResponse {
    /// 1-based mode indices (the trivial mode is 0 and never present).
    pub mode_index: Vec<usize>,
    pub magnitude: Vec<f64>,
    pub eigenvalue: Vec<f64>,
}

/// Row norms of `P` against their eigenvalues.
pub fn spectral_response(p: &ProjectionMatrix, eigenvalues: &[f64]) -> Result<SpectralResponse> {
    if eigenvalues.len() < p.rows() {
        return Err(Error::ShapeMismatch(format!("{} eigenvalues for {} rows of P", eigenvalues.len(), p.rows())));
    }
    let magnitude = p.values().rows().into_iter().map(|r| r.dot(&r).sqrt()).collect();
    Ok(SpectralResponse {
        mode_index: (1..=p.rows()).collect(),
        magnitude,
        eigenvalue: eigenvalues[..p.rows()].to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleMode {
    IndexOrdered,
    Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Petal {
    pub mode: usize,
    /// `|u_{n,s}|`, drawn as the outline.
    pub participation: f64,
    /// `||u_{n,s} p_s||`, drawn as the fill.
    pub contribution: f64,
    /// `contribution - participation * ref_scale`; positive means emphasized.
    pub delta: f64,
    /// `atan2` of `p_s` for two-dimensional embeddings.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PetalGlyph {
    pub point_id: usize,
    pub petals: Vec<Petal>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlyphSet {
    pub k: usize,
    pub ref_scale: f64,
    /// Petals are laid out clockwise by increasing mode index.
    pub arrangement: String,
    pub angle_modes: Vec<AngleMode>,
    pub glyphs: Vec<PetalGlyph>,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// Glyphs for `point_ids` over the leading `k` modes. The amplification
/// reference is the median of `contribution / participation` over all
/// petals with non-zero participation.
pub fn glyph_data(u: &SpectralSubspace<'_>, p: &ProjectionMatrix, point_ids: &[usize], k: usize) -> Result<GlyphSet> {
    if p.rows() != u.s() {
        return Err(Error::ShapeMismatch(format!("P has {} rows, subspace {}", p.rows(), u.s())));
    }
    if k == 0 || k > u.s() {
        return Err(invalid(format!("glyph modes must be in 1..={}, got {k}", u.s())));
    }
    if let Some(&bad) = point_ids.iter().find(|&&i| i >= u.n()) {
        return Err(invalid(format!("point id {bad} out of range for {} points", u.n())));
    }
    let pv = p.values();
    let norms: Vec<f64> = (0..k).map(|s| pv.row(s).dot(&pv.row(s)).sqrt()).collect();
    let two_d = p.cols() == 2;
    let mut ratios = Vec::new();
    for &i in point_ids {
        for (s, norm) in norms.iter().enumerate() {
            if u.basis[[i, s]] != 0.0 {
                ratios.push(*norm);
            }
        }
    }
    let ref_scale = median(ratios);
    let glyphs = point_ids
        .iter()
        .map(|&i| PetalGlyph {
            point_id: i,
            petals: (0..k)
                .map(|s| {
                    let participation = u.basis[[i, s]].abs();
                    let contribution = participation * norms[s];
                    Petal {
                        mode: s + 1,
                        participation,
                        contribution,
                        delta: contribution - participation * ref_scale,
                        direction: two_d.then(|| pv[[s, 1]].atan2(pv[[s, 0]])),
                    }
                })
                .collect(),
        })
        .collect();
    let mut angle_modes = vec![AngleMode::IndexOrdered];
    if two_d {
        angle_modes.push(AngleMode::Direction);
    }
    Ok(GlyphSet { k, ref_scale, arrangement: "clockwise".into(), angle_modes, glyphs })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub col: usize,
    pub row: usize,
    pub count: usize,
    pub mean_thumbnail: Vec<f64>,
    pub mean_position: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub grid_cols: usize,
    pub grid_rows: usize,
    /// `[min_x, max_x, min_y, max_y]` of the binned embedding.
    pub bounds: [f64; 4],
    pub thumb_width: usize,
    pub thumb_height: usize,
    /// Non-empty cells, ordered by row then column.
    pub cells: Vec<GridCell>,
}

/// Equal-width bin of `v` in `[lo, hi]`; boundary values go to the lower bin.
fn bin(v: f64, lo: f64, hi: f64, bins: usize) -> usize {
    if hi <= lo {
        return 0;
    }
    let t = (v - lo) / (hi - lo) * bins as f64;
    (t.ceil() as usize).saturating_sub(1).min(bins - 1)
}

pub fn grid_aggregate(y: ArrayView2<'_, f64>, thumbs: Option<&Thumbnails>, cols: usize, rows: usize) -> Result<GridSummary> {
    let thumbs = thumbs.ok_or(Error::MissingThumbnails)?;
    if cols == 0 || rows == 0 {
        return Err(invalid("grid dimensions must be at least 1"));
    }
    if y.ncols() != 2 {
        return Err(invalid(format!("grid aggregation needs a 2-D embedding, got {} columns", y.ncols())));
    }
    if thumbs.len() != y.nrows() {
        return Err(Error::ShapeMismatch(format!("{} thumbnails for {} points", thumbs.len(), y.nrows())));
    }
    let extent = |c: usize| {
        y.column(c).iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    };
    let (x0, x1) = extent(0);
    let (y0, y1) = extent(1);
    let size = thumbs.width * thumbs.height;
    let mut counts = vec![0usize; cols * rows];
    let mut pix = vec![0.0; cols * rows * size];
    let mut pos = vec![[0.0; 2]; cols * rows];
    for (i, pt) in y.rows().into_iter().enumerate() {
        let cell = bin(pt[1], y0, y1, rows) * cols + bin(pt[0], x0, x1, cols);
        counts[cell] += 1;
        pos[cell][0] += pt[0];
        pos[cell][1] += pt[1];
        for (acc, v) in pix[cell * size..(cell + 1) * size].iter_mut().zip(thumbs.image(i)) {
            *acc += v;
        }
    }
    let cells = (0..cols * rows)
        .filter(|&c| counts[c] > 0)
        .map(|c| {
            let n = counts[c] as f64;
            GridCell {
                col: c % cols,
                row: c / cols,
                count: counts[c],
                mean_thumbnail: pix[c * size..(c + 1) * size].iter().map(|v| v / n).collect(),
                mean_position: vec![pos[c][0] / n, pos[c][1] / n],
            }
        })
        .collect();
    Ok(GridSummary {
        grid_cols: cols,
        grid_rows: rows,
        bounds: [x0, x1, y0, y1],
        thumb_width: thumbs.width,
        thumb_height: thumbs.height,
        cells,
    })
}

/// Writes the cell means as one grayscale PNG, row 0 at the bottom.
/// Pixel values are scaled linearly from their global range to 0..=255.
pub fn write_contact_sheet(grid: &GridSummary, path: &Path) -> Result<()> {
    let (w, h) = (grid.thumb_width, grid.thumb_height);
    let (lo, hi) = grid
        .cells
        .iter()
        .flat_map(|c| c.mean_thumbnail.iter())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let width = u32::try_from(grid.grid_cols * w).map_err(|_| invalid("contact sheet too wide"))?;
    let height = u32::try_from(grid.grid_rows * h).map_err(|_| invalid("contact sheet too tall"))?;
    let mut img = image::GrayImage::new(width, height);
    for cell in &grid.cells {
        let top = (grid.grid_rows - 1 - cell.row) * h;
        for py in 0..h {
            for px in 0..w {
                let v = (cell.mean_thumbnail[py * w + px] - lo) / span;
                let g = (v * 255.0).round().clamp(0.0, 255.0) as u8;
                img.put_pixel((cell.col * w + px) as u32, (top + py) as u32, image::Luma([g]));
            }
        }
    }
    img.save(path).map_err(|e| Error::Format { path: path.to_path_buf(), reason: e.to_string() })
}
