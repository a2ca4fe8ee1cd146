use serde::{Deserialize, Serialize};

use super::mapping::LbpMapping;
use super::neighborhood::{lerp2, taps, NeighborhoodSpec, Tap};
use crate::error::{ensure, Result};
use crate::par;
use crate::real::Real;
use crate::tensor::{pad, PadSpec, Tensor};

/// What to do with pixels whose ring leaves the image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Border {
    /// Replicate-pad so every pixel gets a code.
    #[default]
    Replicate,
    /// Only code pixels whose whole ring lies inside the image.
    Crop,
}

/// Interpolated differences smaller than this fraction of the corner
/// differences they were blended from count as ties. Blending with
/// irrational weights can turn an exact tie into a residual of either sign;
/// the relative cut keeps codes invariant under `a·x + b`, `a > 0`.
const TIE_REL: f64 = 1e-9;

/// Mapped LBP code of every pixel of an `H x W` plane.
///
/// Nearest sampling compares pixel values exactly. Bilinear sampling
/// interpolates the differences to the center and applies the relative tie
/// rule above.
pub fn lbp_image<T: Real>(
    plane: &Tensor<T>,
    spec: &NeighborhoodSpec,
    mapping: &LbpMapping,
    border: Border,
) -> Result<Tensor<u32>> {
    spec.validate()?;
    ensure!(
        plane.rank() == 2,
        "expected an H x W plane, got shape {:?}",
        plane.shape()
    );
    ensure!(
        mapping.points() == spec.points,
        "mapping built for {} points, neighborhood has {}",
        mapping.points(),
        spec.points
    );
    let (h, w) = (plane.shape()[0], plane.shape()[1]);
    let reach = spec.reach();
    let min = 2 * reach + 1;
    ensure!(
        h >= min && w >= min,
        "plane {h}x{w} smaller than the {min}x{min} neighborhood"
    );

    let margin = reach + 1;
    let padded = pad(&plane.cast::<f64>(), &PadSpec::replicate(&[margin, margin]))?;
    let wp = w + 2 * margin;
    let src = padded.data();
    let taps = taps(spec);

    let (rows, cols) = match border {
        Border::Replicate => (0..h, 0..w),
        Border::Crop => (reach..h - reach, reach..w - reach),
    };
    let (ho, wo) = (rows.len(), cols.len());
    let mut out = vec![0u32; ho * wo];
    par::for_each_chunk(&mut out, wo, |oi, row| {
        let y = (rows.start + oi + margin) as isize;
        for (oj, code) in row.iter_mut().enumerate() {
            let x = (cols.start + oj + margin) as isize;
            let at = |dy: isize, dx: isize| src[((y + dy) as usize) * wp + (x + dx) as usize];
            let c = at(0, 0);
            let mut raw = 0u32;
            for (i, tap) in taps.iter().enumerate() {
                let bit = match *tap {
                    Tap::Pixel(dy, dx) => at(dy, dx) - c >= 0.0,
                    Tap::Cell { row, col, fy, fx } => {
                        let d = [
                            at(row, col) - c,
                            at(row, col + 1) - c,
                            at(row + 1, col) - c,
                            at(row + 1, col + 1) - c,
                        ];
                        let v = lerp2(d[0], d[1], d[2], d[3], fy, fx);
                        let scale: f64 = d.iter().map(|e| e.abs()).sum();
                        v >= -TIE_REL * scale
                    }
                };
                raw |= u32::from(bit) << i;
            }
            *code = mapping.map(raw);
        }
    });
    Tensor::new(&[ho, wo], out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lbp::{lbp_code, sample_ring, Interpolation, MappingKind};
    use crate::rng::SeededRng;

    #[test]
    fn worked_patch() {
        let patch =
            Tensor::new(&[3, 3], vec![9.0, 7.0, 5.0, 6.0, 5.0, 3.0, 2.0, 4.0, 8.0]).unwrap();
        let raw = LbpMapping::build(MappingKind::Raw, 8).unwrap();
        let codes = lbp_image(&patch, &NeighborhoodSpec::unit8(), &raw, Border::Crop).unwrap();
        assert_eq!(codes.data(), &[158]);
    }

    #[test]
    fn constant_image_maps_all_ones() {
        let plane = Tensor::filled(&[6, 6], 10.0f32).unwrap();
        for kind in [
            MappingKind::Raw,
            MappingKind::Ri,
            MappingKind::U2,
            MappingKind::Riu2,
        ] {
            let m = LbpMapping::build(kind, 8).unwrap();
            let codes =
                lbp_image(&plane, &NeighborhoodSpec::unit8(), &m, Border::Replicate).unwrap();
            assert!(codes.data().iter().all(|&c| c == m.map(255)));
        }
    }

    #[test]
    fn crop_shrinks_by_reach() {
        let plane = Tensor::filled(&[9, 11], 0.0f64).unwrap();
        let spec = NeighborhoodSpec::new(2.0, 16, Interpolation::Bilinear).unwrap();
        let m = LbpMapping::build(MappingKind::Riu2, 16).unwrap();
        assert_eq!(
            lbp_image(&plane, &spec, &m, Border::Crop).unwrap().shape(),
            &[5, 7]
        );
        let tiny = Tensor::filled(&[4, 9], 0.0f64).unwrap();
        assert!(lbp_image(&tiny, &spec, &m, Border::Crop).is_err());
    }

    #[test]
    fn matches_per_pixel_composition() {
        let mut rng = SeededRng::new(11);
        let plane = Tensor::<f64>::random(&[12, 10], &mut rng, 0.0, 1.0).unwrap();
        let raw = LbpMapping::build(MappingKind::Raw, 8).unwrap();
        let spec = NeighborhoodSpec::new(1.5, 8, Interpolation::Bilinear).unwrap();
        let codes = lbp_image(&plane, &spec, &raw, Border::Replicate).unwrap();
        for r in 0..12 {
            for c in 0..10 {
                let s = sample_ring(&plane, (r, c), &spec).unwrap();
                assert_eq!(codes.get(&[r, c]), lbp_code(&s, plane.get(&[r, c])));
            }
        }
    }
}
