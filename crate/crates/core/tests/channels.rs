use polarcraft::channels::{ChannelKind, ChannelModel};
use polarcraft::encoding::modulate;
use polarcraft::rng;

const SAMPLES: usize = 1_000_000;
const BLOCK: usize = 1000;

/// Noise samples `y - a x` (with `a = 1` off the fading channel) and the fading gains.
fn noise(channel: &ChannelModel, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut r = rng::derive(seed, &[]);
    let bits: Vec<u8> = (0..BLOCK).map(|i| (i % 3 == 0) as u8).collect();
    let x = modulate(&bits);
    let mut z = Vec::with_capacity(SAMPLES);
    let mut gains = Vec::new();
    for _ in 0..SAMPLES / BLOCK {
        let y = channel.transmit(&x, &mut r);
        let a = y.fading_gains.clone().unwrap_or_else(|| vec![1.0; BLOCK]);
        for ((s, xi), ai) in y.samples.iter().zip(&x.symbols).zip(&a) {
            z.push(s - ai * xi);
        }
        gains.extend(y.fading_gains.unwrap_or_default());
    }
    (z, gains)
}

fn variance(v: &[f64]) -> f64 {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

#[test]
fn noise_variance_matches_sigma() {
    // nu = 10 keeps the fourth moment finite so the sample variance settles
    let cases = [
        ChannelModel::new(ChannelKind::Awgn, 0.7, None).unwrap(),
        ChannelModel::new(ChannelKind::Rayleigh, 0.7, None).unwrap(),
        ChannelModel::new(ChannelKind::StudentT, 0.7, Some(10.0)).unwrap(),
    ];
    for (i, ch) in cases.iter().enumerate() {
        let (z, _) = noise(ch, 100 + i as u64);
        let ratio = variance(&z) / (0.7 * 0.7);
        assert!((ratio - 1.0).abs() < 0.01, "{:?}: variance ratio {ratio}", ch.kind);
    }
}

#[test]
fn rayleigh_gains_have_unit_power() {
    let ch = ChannelModel::new(ChannelKind::Rayleigh, 1.0, None).unwrap();
    let (_, gains) = noise(&ch, 7);
    assert_eq!(gains.len(), SAMPLES);
    assert!(gains.iter().all(|&a| a > 0.0));
    let power = gains.iter().map(|a| a * a).sum::<f64>() / SAMPLES as f64;
    assert!((power - 1.0).abs() < 0.01, "{power}");
}

#[test]
fn heavy_tailed_noise_is_centered_and_symmetric() {
    let ch = ChannelModel::new(ChannelKind::StudentT, 1.0, None).unwrap();
    let (z, _) = noise(&ch, 8);
    let positive = z.iter().filter(|&&v| v > 0.0).count() as f64 / SAMPLES as f64;
    assert!((positive - 0.5).abs() < 0.005, "{positive}");
    let mut sorted = z.clone();
    sorted.sort_by(f64::total_cmp);
    assert!(sorted[SAMPLES / 2].abs() < 0.01);
}

#[test]
fn llr_signs_follow_samples() {
    let mut r = rng::derive(9, &[]);
    let bits: Vec<u8> = (0..64).map(|i| (i % 2) as u8).collect();
    let x = modulate(&bits);
    for kind in [ChannelKind::Awgn, ChannelKind::StudentT, ChannelKind::Rayleigh] {
        for sigma in [0.3, 1.0, 2.5] {
            let ch = ChannelModel::new(kind, sigma, None).unwrap();
            let y = ch.transmit(&x, &mut r);
            let l = ch.llr(&y).unwrap();
            for (li, yi) in l.iter().zip(&y.samples) {
                assert_eq!(li.signum(), yi.signum());
            }
        }
    }
}

#[test]
fn transmission_is_reproducible() {
    let ch = ChannelModel::awgn_snr(1.5);
    let x = modulate(&[0, 1, 1, 0, 1, 0, 0, 1]);
    let a = ch.transmit(&x, &mut rng::derive(3, &[1]));
    let b = ch.transmit(&x, &mut rng::derive(3, &[1]));
    let c = ch.transmit(&x, &mut rng::derive(3, &[2]));
    assert_eq!(a, b);
    assert_ne!(a, c);
}
