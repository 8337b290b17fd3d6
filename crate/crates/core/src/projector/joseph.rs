//! Joseph's ray-driven interpolation: step plane by plane along the dominant
//! transverse axis and sample the volume bilinearly in the other two axes.

use crate::volume::VolumeGrid;

/// Calls `visit(flat_index, weight)` for every voxel touched by the line
/// through `src` and `dst`; `weight` is the bilinear weight times the step
/// length (mm). `flat_index` addresses a `(z, y, x)` row-major array.
pub(crate) fn trace(
    grid: &VolumeGrid,
    src: [f64; 3],
    dst: [f64; 3],
    mut visit: impl FnMut(usize, f64),
) {
    let d = [dst[0] - src[0], dst[1] - src[1], dst[2] - src[2]];
    let norm = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    let dims = [grid.nx, grid.ny, grid.nz];
    let strides = [1, grid.nx, grid.nx * grid.ny];
    let (main, a, b) = if d[0].abs() >= d[1].abs() {
        (0, 1, 2)
    } else {
        (1, 0, 2)
    };
    if d[main] == 0.0 {
        return;
    }
    let s = grid.index_of(src);
    let ra = d[a] / d[main];
    let rb = d[b] / d[main];
    let step = grid.pitch * norm / d[main].abs();

    // plane range where both transverse coordinates stay within (-1, n)
    let mut lo = 0.0f64;
    let mut hi = (dims[main] - 1) as f64;
    for (r, off, n) in [(ra, s[a], dims[a]), (rb, s[b], dims[b])] {
        // coordinate(m) = off + (m - s[main]) * r
        if r == 0.0 {
            if off <= -1.0 || off >= n as f64 {
                return;
            }
            continue;
        }
        let m1 = s[main] + (-1.0 - off) / r;
        let m2 = s[main] + (n as f64 - off) / r;
        lo = lo.max(m1.min(m2).floor());
        hi = hi.min(m1.max(m2).ceil());
    }
    if hi < lo {
        return;
    }
    for m in lo as usize..=hi as usize {
        let t = m as f64 - s[main];
        let fa = s[a] + t * ra;
        let fb = s[b] + t * rb;
        let a0 = fa.floor();
        let b0 = fb.floor();
        let wa = fa - a0;
        let wb = fb - b0;
        let (a0, b0) = (a0 as isize, b0 as isize);
        let base = m * strides[main];
        for (ai, wai) in [(a0, 1.0 - wa), (a0 + 1, wa)] {
            if ai < 0 || ai as usize >= dims[a] || wai == 0.0 {
                continue;
            }
            for (bi, wbi) in [(b0, 1.0 - wb), (b0 + 1, wb)] {
                if bi < 0 || bi as usize >= dims[b] || wbi == 0.0 {
                    continue;
                }
                visit(
                    base + ai as usize * strides[a] + bi as usize * strides[b],
                    wai * wbi * step,
                );
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_ray_through_uniform_block_sums_to_length() {
        let g = VolumeGrid::centered(10, 10, 1, 1.0);
        let mut total = 0.0;
        trace(&g, [-100.0, 0.3, 0.0], [100.0, 0.3, 0.0], |_, w| total += w);
        assert!((total - 10.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_ray_length() {
        let g = VolumeGrid::centered(20, 20, 1, 0.5);
        let mut total = 0.0;
        trace(&g, [-50.0, -50.0, 0.0], [50.0, 50.0, 0.0], |_, w| {
            total += w
        });
        // 20 planes along x, each contributing pitch * sqrt(2)
        assert!((total - 20.0 * 0.5 * 2f64.sqrt()).abs() < 1e-9, "{total}");
    }

    #[test]
    fn ray_missing_the_grid_visits_nothing() {
        let g = VolumeGrid::centered(8, 8, 1, 1.0);
        let mut n = 0;
        trace(&g, [-50.0, 20.0, 0.0], [50.0, 20.0, 0.0], |_, _| n += 1);
        assert_eq!(n, 0);
        trace(&g, [-50.0, 0.0, 5.0], [50.0, 0.0, 5.0], |_, _| n += 1);
        assert_eq!(n, 0);
    }
}
