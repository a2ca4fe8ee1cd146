use super::neighborhood::{sample_ring, NeighborhoodSpec};
use crate::error::{ensure, Result};
use crate::real::Real;
use crate::tensor::Tensor;

/// `Σ s(x_i - x_c) 2^i` with `s(d) = 1` iff `d >= 0`.
pub fn lbp_code(samples: &[f64], center: f64) -> u32 {
    debug_assert!(samples.len() <= 24);
    samples.iter().enumerate().fold(0, |code, (i, &x)| {
        code | (u32::from(x - center >= 0.0) << i)
    })
}

/// Bit `i` compares consecutive ring samples: `s(x_{i+1 mod p} - x_i)`.
pub fn elbp_angular_code<T: Real>(
    plane: &Tensor<T>,
    center: (usize, usize),
    spec: &NeighborhoodSpec,
) -> Result<u32> {
    let s = sample_ring(plane, center, spec)?;
    let p = s.len();
    Ok((0..p).fold(0, |code, i| {
        code | (u32::from(s[(i + 1) % p] - s[i] >= 0.0) << i)
    }))
}

/// Bit `i` compares matched angles on two rings: `s(outer_i - inner_i)`.
pub fn elbp_radial_code<T: Real>(
    plane: &Tensor<T>,
    center: (usize, usize),
    inner: &NeighborhoodSpec,
    outer: &NeighborhoodSpec,
) -> Result<u32> {
    ensure!(
        inner.radius < outer.radius,
        "inner radius {} must be smaller than outer radius {}",
        inner.radius,
        outer.radius
    );
    ensure!(
        inner.points == outer.points,
        "rings must have equal point counts ({} vs {})",
        inner.points,
        outer.points
    );
    ensure!(
        inner.start_angle == outer.start_angle,
        "rings must share the start angle"
    );
    let a = sample_ring(plane, center, inner)?;
    let b = sample_ring(plane, center, outer)?;
    Ok(a.iter()
        .zip(&b)
        .enumerate()
        .fold(0, |code, (i, (x_in, x_out))| {
            code | (u32::from(x_out - x_in >= 0.0) << i)
        }))
}

/// Center-symmetric code: bit `i` is `s(x_i - x_{i+p/2} - threshold)`.
pub fn cslbp_code(samples: &[f64], threshold: f64) -> Result<u32> {
    let p = samples.len();
    ensure!(
        p.is_multiple_of(2) && p > 0,
        "center-symmetric LBP needs an even point count, got {p}"
    );
    ensure!(
        threshold >= 0.0,
        "threshold must be non-negative, got {threshold}"
    );
    let half = p / 2;
    Ok((0..half).fold(0, |code, i| {
        code | (u32::from(samples[i] - samples[i + half] - threshold >= 0.0) << i)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lbp::Interpolation;

    #[test]
    fn constant_patch_sets_all_bits() {
        assert_eq!(lbp_code(&[4.0; 8], 4.0), 255);
        assert_eq!(cslbp_code(&[4.0; 8], 0.0).unwrap(), 15);
        assert_eq!(cslbp_code(&[4.0; 8], 0.5).unwrap(), 0);
    }

    #[test]
    fn strict_maximum_center() {
        assert_eq!(lbp_code(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0], 9.0), 0);
    }

    #[test]
    fn cslbp_rejects_odd() {
        assert!(cslbp_code(&[1.0; 7], 0.0).is_err());
        assert!(cslbp_code(&[1.0; 8], -1.0).is_err());
    }

    #[test]
    fn extended_codes_on_constant_and_radial_fields() {
        let flat = Tensor::filled(&[9, 9], 2.0f64).unwrap();
        let inner = NeighborhoodSpec::unit8();
        let outer = NeighborhoodSpec::new(2.0, 8, Interpolation::Nearest).unwrap();
        assert_eq!(elbp_angular_code(&flat, (4, 4), &inner).unwrap(), 255);
        assert_eq!(
            elbp_radial_code(&flat, (4, 4), &inner, &outer).unwrap(),
            255
        );

        let cone = Tensor::from_fn(&[9, 9], |i| {
            let (dy, dx) = (i[0] as f64 - 4.0, i[1] as f64 - 4.0);
            (dy * dy + dx * dx).sqrt()
        })
        .unwrap();
        assert_eq!(
            elbp_radial_code(&cone, (4, 4), &inner, &outer).unwrap(),
            255
        );
        assert!(elbp_radial_code(&cone, (4, 4), &outer, &inner).is_err());
    }
}
