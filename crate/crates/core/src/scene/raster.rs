use super::WallConfig;
use crate::em::{GridSpec, SimGrid};
use crate::error::Result;

/// Rasterizes `config` onto the grid described by `spec`, with the window
/// covering the wall strip `[0, width]`.
pub fn rasterize(config: &WallConfig, spec: &GridSpec) -> Result<SimGrid> {
    rasterize_window(config, spec, 0)
}

/// Rasterizes a window whose left interior edge sits `x_offset_cells` cells
/// from the wall strip origin. Layers continue laterally past the strip;
/// grains exist only inside it.
///
/// A cell takes the permittivity of whatever contains its center: air above
/// the surface and past the last layer, otherwise the layer, overridden by
/// any grain disk containing the center. PML cells copy the nearest interior
/// cell.
pub fn rasterize_window(config: &WallConfig, spec: &GridSpec, x_offset_cells: i64) -> Result<SimGrid> {
    config.validate()?;
    let mut grid = spec.empty_grid()?;
    let cell = grid.cell_m;
    let nx = grid.nx;
    let p = grid.pml_cells;
    let surface = grid.surface_row();
    let cols = grid.interior_cols();

    let mut bounds = Vec::with_capacity(config.layers.len());
    let mut acc = 0.0;
    for l in &config.layers {
        acc += l.thickness_m;
        bounds.push(acc);
    }

    // Interior wall rows: layered background.
    for r in 0..grid.wall_rows {
        let y = (r as f64 + 0.5) * cell;
        let Some(k) = bounds.iter().position(|&b| y < b) else {
            break;
        };
        let eps = config.layers[k].eps_r;
        let row = surface + r;
        for c in 0..cols {
            let idx = grid.idx(row, p + c);
            grid.eps_r[idx] = eps;
            grid.sigma[idx] = spec.layer_sigma;
        }
    }

    for g in &config.grains {
        let r2 = g.radius_m * g.radius_m;
        let row_lo = ((g.y_m - g.radius_m) / cell).floor().max(0.0) as usize;
        let row_hi = (((g.y_m + g.radius_m) / cell).ceil() as usize).min(grid.wall_rows);
        let cx = g.x_m - x_offset_cells as f64 * cell;
        let col_lo = ((cx - g.radius_m) / cell).floor().max(0.0) as usize;
        let col_hi_f = ((cx + g.radius_m) / cell).ceil();
        if col_hi_f <= 0.0 {
            continue;
        }
        let col_hi = (col_hi_f as usize).min(cols);
        for r in row_lo..row_hi {
            let dy = (r as f64 + 0.5) * cell - g.y_m;
            for c in col_lo..col_hi {
                let dx = (c as f64 + 0.5) * cell - cx;
                if dx * dx + dy * dy <= r2 {
                    let idx = grid.idx(surface + r, p + c);
                    grid.eps_r[idx] = g.eps_r;
                    grid.sigma[idx] = spec.layer_sigma;
                }
            }
        }
    }

    // Extend the interior into the absorbing layers.
    let ny = grid.ny;
    for row in 0..ny {
        let src_row = row.clamp(p, ny - p - 1);
        for col in 0..nx {
            let src_col = col.clamp(p, nx - p - 1);
            if src_row != row || src_col != col {
                let from = grid.idx(src_row, src_col);
                let to = grid.idx(row, col);
                grid.eps_r[to] = grid.eps_r[from];
                grid.sigma[to] = grid.sigma[from];
            }
        }
    }
    Ok(grid)
}
