//! Affine grayscale augmentation used to inflate tiny labeled sets.
//!
//! A sampled transform composes rotation, shear, zoom, translation, and an
//! optional horizontal flip, all relative to the image center; images are
//! resampled with bilinear interpolation and zero (background) fill.

use crate::numerics::Prng;
use crate::{Error, Image, Result, IMAGE_LEN, IMAGE_SIDE};

/// Ranges for the random affine parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentPolicy {
    /// Maximum absolute rotation in degrees.
    pub rotation_deg: f32,
    /// Maximum absolute horizontal/vertical translation as a fraction of the
    /// image side.
    pub shift_frac: f32,
    /// Maximum absolute x-axis shear factor.
    pub shear: f32,
    /// Scale factor range `(low, high)`; `(1, 1)` disables zoom.
    pub zoom_range: (f32, f32),
    /// Horizontal flip with probability one half.
    pub hflip: bool,
}

impl AugmentPolicy {
    /// No-op policy: every sampled transform is the identity.
    pub fn none() -> Self {
        AugmentPolicy {
            rotation_deg: 0.0,
            shift_frac: 0.0,
            shear: 0.0,
            zoom_range: (1.0, 1.0),
            hflip: false,
        }
    }

    /// Digits: small rotations and shifts only.
    pub fn mnist_digits() -> Self {
        AugmentPolicy {
            rotation_deg: 10.0,
            shift_frac: 0.1,
            shear: 0.0,
            zoom_range: (1.0, 1.0),
            hflip: false,
        }
    }

    /// Fashion products: horizontal flips and a very small zoom.
    pub fn fashion() -> Self {
        AugmentPolicy {
            rotation_deg: 0.0,
            shift_frac: 0.0,
            shear: 0.0,
            zoom_range: (0.9, 1.1),
            hflip: true,
        }
    }

    /// Handwritten characters: 20° rotations, 0.2 shifts, 0.2 shear, zoom in
    /// `[0.8, 1.2]`.
    pub fn omniglot() -> Self {
        AugmentPolicy {
            rotation_deg: 20.0,
            shift_frac: 0.2,
            shear: 0.2,
            zoom_range: (0.8, 1.2),
            hflip: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rotation_deg < 0.0 {
            return Err(Error::Argument("rotation range must be >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.shift_frac) {
            return Err(Error::Argument("shift fraction must lie in [0, 1)".into()));
        }
        let (lo, hi) = self.zoom_range;
        if lo <= 0.0 || hi < lo {
            return Err(Error::Argument(format!(
                "zoom range ({lo}, {hi}) must satisfy 0 < low <= high"
            )));
        }
        Ok(())
    }
}

/// 2×3 affine map from *output* pixel coordinates to *input* coordinates,
/// row-major: `ix = m[0]·ox + m[1]·oy + m[2]`, `iy = m[3]·ox + m[4]·oy + m[5]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineTransform(pub [f32; 6]);

impl AffineTransform {
    pub fn identity() -> Self {
        AffineTransform([1.0, 0.0, 0.0, 0.0, 1.0, 0.0])
    }

    /// Pure translation of the image content by `(dx, dy)` pixels
    /// (the inverse map subtracts the offsets).
    pub fn translation(dx: f32, dy: f32) -> Self {
        AffineTransform([1.0, 0.0, -dx, 0.0, 1.0, -dy])
    }

    /// Horizontal flip about the image center; pixel centers map to pixel
    /// centers, so applying it twice is an exact identity.
    pub fn horizontal_flip() -> Self {
        let c = (IMAGE_SIDE - 1) as f32 / 2.0;
        AffineTransform([-1.0, 0.0, 2.0 * c, 0.0, 1.0, 0.0])
    }

    #[inline]
    fn map(&self, x: f32, y: f32) -> (f32, f32) {
        let m = &self.0;
        (m[0] * x + m[1] * y + m[2], m[3] * x + m[4] * y + m[5])
    }
}

// 3×3 row-major helpers used only to compose transform primitives.
type Mat3 = [f32; 9];

fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = [0.0f32; 9];
    for i in 0..3 {
        for j in 0..3 {
            c[i * 3 + j] = (0..3).map(|k| a[i * 3 + k] * b[k * 3 + j]).sum();
        }
    }
    c
}

fn about_center(m: Mat3) -> Mat3 {
    let c = (IMAGE_SIDE - 1) as f32 / 2.0;
    let to = [1.0, 0.0, c, 0.0, 1.0, c, 0.0, 0.0, 1.0];
    let from = [1.0, 0.0, -c, 0.0, 1.0, -c, 0.0, 0.0, 1.0];
    mat_mul(&to, &mat_mul(&m, &from))
}

/// Draw one transform from the policy.
///
/// The forward map applies, in order: optional flip, shift, zoom, shear,
/// rotation (rotation/shear/zoom/flip about the image center, shift in
/// pixels). The returned matrix is the exact inverse, built by composing the
/// primitive inverses in reverse order. Every parameter is drawn on every
/// call so the stream consumption is independent of the ranges.
pub fn sample_transform(policy: &AugmentPolicy, prng: &mut Prng) -> AffineTransform {
    let theta = prng
        .uniform(-policy.rotation_deg, policy.rotation_deg)
        .to_radians();
    let side = IMAGE_SIDE as f32;
    let dx = prng.uniform(-policy.shift_frac, policy.shift_frac) * side;
    let dy = prng.uniform(-policy.shift_frac, policy.shift_frac) * side;
    let shear = prng.uniform(-policy.shear, policy.shear);
    let zoom = prng.uniform(policy.zoom_range.0, policy.zoom_range.1);
    let flip = prng.next_f64() < 0.5 && policy.hflip;

    let (sin, cos) = (-theta).sin_cos();
    let inv_rotate = about_center([cos, -sin, 0.0, sin, cos, 0.0, 0.0, 0.0, 1.0]);
    let inv_shear = about_center([1.0, -shear, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
    let inv_zoom = about_center([1.0 / zoom, 0.0, 0.0, 0.0, 1.0 / zoom, 0.0, 0.0, 0.0, 1.0]);
    let inv_shift = [1.0, 0.0, -dx, 0.0, 1.0, -dy, 0.0, 0.0, 1.0];
    let inv_flip = if flip {
        about_center([-1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0])
    } else {
        [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]
    };

    // inverse(rotate ∘ shear ∘ zoom ∘ shift ∘ flip)
    //   = flip⁻¹ ∘ shift⁻¹ ∘ zoom⁻¹ ∘ shear⁻¹ ∘ rotate⁻¹
    let m = mat_mul(
        &inv_flip,
        &mat_mul(&inv_shift, &mat_mul(&inv_zoom, &mat_mul(&inv_shear, &inv_rotate))),
    );
    AffineTransform([m[0], m[1], m[2], m[3], m[4], m[5]])
}

/// Resample a 28×28 image through `transform` with bilinear interpolation.
///
/// Coordinates that fall outside the input read as 0 (background); outputs
/// are clamped to `[0, 1]`.
pub fn apply_transform(image: &[f32], transform: &AffineTransform) -> Result<Image> {
    if image.len() != IMAGE_LEN {
        return Err(Error::Dimension {
            context: "augment image length",
            expected: IMAGE_LEN,
            got: image.len(),
        });
    }
    let side = IMAGE_SIDE as isize;
    let sample = |x: isize, y: isize| -> f32 {
        if x < 0 || y < 0 || x >= side || y >= side {
            0.0
        } else {
            image[(y * side + x) as usize]
        }
    };
    let mut out = vec![0.0f32; IMAGE_LEN];
    for oy in 0..IMAGE_SIDE {
        for ox in 0..IMAGE_SIDE {
            let (ix, iy) = transform.map(ox as f32, oy as f32);
            let x0 = ix.floor();
            let y0 = iy.floor();
            let fx = ix - x0;
            let fy = iy - y0;
            let (x0, y0) = (x0 as isize, y0 as isize);
            let v = sample(x0, y0) * (1.0 - fx) * (1.0 - fy)
                + sample(x0 + 1, y0) * fx * (1.0 - fy)
                + sample(x0, y0 + 1) * (1.0 - fx) * fy
                + sample(x0 + 1, y0 + 1) * fx * fy;
            out[oy * IMAGE_SIDE + ox] = v.clamp(0.0, 1.0);
        }
    }
    Ok(out)
}

/// Grow `images` to exactly `target_count` entries: the originals first,
/// then transformed copies of sources chosen round-robin.
pub fn augment_pool(
    images: &[Image],
    policy: &AugmentPolicy,
    target_count: usize,
    prng: &mut Prng,
) -> Result<Vec<Image>> {
    if images.is_empty() {
        return Err(Error::Argument("augment_pool needs at least one source image".into()));
    }
    if target_count < images.len() {
        return Err(Error::Argument(format!(
            "target_count {target_count} is smaller than the {} source images",
            images.len()
        )));
    }
    policy.validate()?;
    let mut pool = images.to_vec();
    for j in 0..target_count - images.len() {
        let src = &images[j % images.len()];
        let t = sample_transform(policy, prng);
        pool.push(apply_transform(src, &t)?);
    }
    Ok(pool)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn checkerboard() -> Image {
        (0..IMAGE_LEN)
            .map(|i| {
                let (r, c) = (i / IMAGE_SIDE, i % IMAGE_SIDE);
                if (r / 4 + c / 4) % 2 == 0 {
                    0.8
                } else {
                    0.1
                }
            })
            .collect()
    }

    #[test]
    fn zero_policy_samples_the_identity() {
        let mut prng = Prng::new(1);
        let t = sample_transform(&AugmentPolicy::none(), &mut prng);
        assert_eq!(t, AffineTransform::identity());
    }

    #[test]
    fn sampling_is_deterministic_under_seed() {
        let policy = AugmentPolicy::omniglot();
        let t1 = sample_transform(&policy, &mut Prng::new(9));
        let t2 = sample_transform(&policy, &mut Prng::new(9));
        assert_eq!(t1, t2);
    }

    #[test]
    fn rotation_only_policy_stays_within_range() {
        // The inverse of a pure rotation about the center is a rotation; its
        // angle can be read back from the matrix entries.
        let policy = AugmentPolicy {
            rotation_deg: 15.0,
            ..AugmentPolicy::none()
        };
        let mut prng = Prng::new(4);
        for _ in 0..10_000 {
            let t = sample_transform(&policy, &mut prng);
            let angle = t.0[3].atan2(t.0[0]).to_degrees();
            assert!(angle.abs() <= 15.0 + 1e-3, "rotation {angle} out of range");
        }
    }

    #[test]
    fn identity_transform_preserves_image() {
        let img = checkerboard();
        let out = apply_transform(&img, &AffineTransform::identity()).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn horizontal_flip_is_an_involution() {
        // Asymmetric image: bright stripe in columns 3..6.
        let img: Image = (0..IMAGE_LEN)
            .map(|i| if (3..6).contains(&(i % IMAGE_SIDE)) { 0.9 } else { 0.1 })
            .collect();
        let flip = AffineTransform::horizontal_flip();
        let once = apply_transform(&img, &flip).unwrap();
        let twice = apply_transform(&once, &flip).unwrap();
        assert_eq!(twice, img);
        assert_ne!(once, img);
    }

    #[test]
    fn integer_translation_matches_index_remapping() {
        let img = checkerboard();
        let shifted = apply_transform(&img, &AffineTransform::translation(2.0, 0.0)).unwrap();

        // Index-remapping oracle: column c of the output reads column c−2 of
        // the input, with zero fill on the left edge.
        for r in 0..IMAGE_SIDE {
            for c in 0..IMAGE_SIDE {
                let expected = if c < 2 { 0.0 } else { img[r * IMAGE_SIDE + c - 2] };
                assert_eq!(shifted[r * IMAGE_SIDE + c], expected, "pixel ({r},{c})");
            }
        }
    }

    #[test]
    fn augment_pool_returns_originals_when_target_equals_count() {
        let imgs = vec![checkerboard(), vec![0.5; IMAGE_LEN]];
        let mut prng = Prng::new(3);
        let pool = augment_pool(&imgs, &AugmentPolicy::mnist_digits(), 2, &mut prng).unwrap();
        assert_eq!(pool, imgs);
    }

    #[test]
    fn augment_pool_inflates_single_source_to_target() {
        let imgs = vec![checkerboard()];
        let mut prng = Prng::new(3);
        let pool = augment_pool(&imgs, &AugmentPolicy::mnist_digits(), 500, &mut prng).unwrap();
        assert_eq!(pool.len(), 500);
        assert_eq!(pool[0], imgs[0]);
    }

    #[test]
    fn augment_pool_is_deterministic() {
        let imgs = vec![checkerboard()];
        let make = || {
            let mut prng = Prng::new(21);
            augment_pool(&imgs, &AugmentPolicy::omniglot(), 50, &mut prng).unwrap()
        };
        assert_eq!(make(), make());
    }

    #[test]
    fn augment_pool_rejects_bad_arguments() {
        let mut prng = Prng::new(0);
        assert!(augment_pool(&[], &AugmentPolicy::none(), 5, &mut prng).is_err());
        let imgs = vec![checkerboard(); 3];
        assert!(augment_pool(&imgs, &AugmentPolicy::none(), 2, &mut prng).is_err());
    }

    proptest! {
        /// Outputs stay 28×28 with values in [0, 1] for any policy draw.
        #[test]
        fn outputs_stay_in_unit_range(seed in 0u64..500) {
            let img = checkerboard();
            let mut prng = Prng::new(seed);
            let t = sample_transform(&AugmentPolicy::omniglot(), &mut prng);
            let out = apply_transform(&img, &t).unwrap();
            prop_assert_eq!(out.len(), IMAGE_LEN);
            prop_assert!(out.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }

        /// A zero-range policy is the identity on every image.
        #[test]
        fn zero_policy_is_identity_on_any_image(seed in 0u64..500) {
            let mut prng = Prng::new(seed);
            let img: Image = (0..IMAGE_LEN).map(|_| prng.next_f32()).collect();
            let t = sample_transform(&AugmentPolicy::none(), &mut prng);
            let out = apply_transform(&img, &t).unwrap();
            prop_assert_eq!(out, img);
        }
    }
}
