use imgcore::{gaussian_blur, gradient, warp, Raster, VectorField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn noise_image(w: usize, h: usize, seed: u64) -> Raster {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    Raster::from_fn(w, h, |_, _| rng.gen_range(0.0..1.0)).unwrap()
}

#[test]
fn blur_semigroup() {
    // Compared on the interior: replicate-edge padding composes differently
    // for two passes than for one, so border bands legitimately differ.
    let img = noise_image(72, 64, 7);
    for (a, b) in [(1.0f64, 1.0f64), (0.8, 1.5), (2.0, 1.2)] {
        let two_step = gaussian_blur(&gaussian_blur(&img, a).unwrap(), b).unwrap();
        let one_step = gaussian_blur(&img, (a * a + b * b).sqrt()).unwrap();
        let margin = (4.0 * (a + b)).ceil() as usize + 2;
        let mut sum = 0.0;
        let mut n = 0usize;
        for y in margin..64 - margin {
            for x in margin..72 - margin {
                let d = two_step.get(x, y) - one_step.get(x, y);
                sum += d * d;
                n += 1;
            }
        }
        let rms = (sum / n as f64).sqrt();
        assert!(rms < 1e-4, "semigroup interior rms {rms} for ({a}, {b})");
    }
}

#[test]
fn warp_roundtrip_on_smooth_image() {
    // Warp by f then by -f recovers interior pixels to within two bilinear
    // interpolation error bounds. On a smooth image with bounded second
    // derivative M, one bilinear resampling errs at most M/8 per step.
    let img = Raster::from_fn(32, 32, |x, y| {
        0.5 + 0.25 * ((x as f64) * 0.3).sin() * ((y as f64) * 0.25).cos()
    })
    .unwrap();
    // Second-derivative bound of the analytic expression above.
    let m = 0.25 * (0.3f64 * 0.3 + 0.25 * 0.25);
    let bound = 2.0 * m / 8.0 + 1e-9;

    let mut f = VectorField::zeros(32, 32);
    for y in 0..32 {
        for x in 0..32 {
            f.set(x, y, 0.4, -0.3);
        }
    }
    let fwd = warp(&img, &f).unwrap();
    let back = warp(&fwd.raster, &f.negate()).unwrap();
    for y in 2..30 {
        for x in 2..30 {
            let err = (back.raster.get(x, y) - img.get(x, y)).abs();
            assert!(err <= bound, "roundtrip err {err} at ({x},{y}) bound {bound}");
        }
    }
}

#[test]
fn gradient_energy_decreases_with_blur_scale() {
    let img = noise_image(64, 64, 11);
    let mut prev = f64::INFINITY;
    for sigma in [0.5, 1.0, 2.0, 4.0] {
        let smooth = gaussian_blur(&img, sigma).unwrap();
        let (gx, gy) = gradient(&smooth).unwrap();
        let mean_mag: f64 = gx
            .data()
            .iter()
            .zip(gy.data())
            .map(|(a, b)| (a * a + b * b).sqrt())
            .sum::<f64>()
            / (64.0 * 64.0);
        assert!(mean_mag < prev, "sigma {sigma}: {mean_mag} !< {prev}");
        prev = mean_mag;
    }
}

mod prop {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn blur_stays_in_range(seed in 0u64..1000, sigma in 0.1f64..3.0) {
            let img = noise_image(16, 16, seed);
            let out = gaussian_blur(&img, sigma).unwrap();
            for &v in out.data() {
                prop_assert!((-1e-12..=1.0 + 1e-12).contains(&v));
            }
        }

        #[test]
        fn blur_preserves_mean_of_periodic_constant(c in 0.0f64..1.0, sigma in 0.1f64..2.0) {
            let img = Raster::constant(12, 9, c).unwrap();
            let out = gaussian_blur(&img, sigma).unwrap();
            for &v in out.data() {
                prop_assert!((v - c).abs() < 1e-12);
            }
        }
    }
}
