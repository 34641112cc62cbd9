//! Randomized invariants for the codec surface.

use proptest::prelude::*;
use zblb::bitplane::{negabinary_decode, negabinary_encode};
use zblb::codec::{
    beta_for_tolerance, compress_block, compress_grid, decompress_block, decompress_grid,
    exponent_index, partition, reassemble, rounding_offset, CodecConfig, Rounding,
};
use zblb::container::Container;
use zblb::transform::{
    backward_exact, backward_lossy, forward_exact, forward_lossy, sequency_permutation,
};
use zblb::Rat;

/// Reference negabinary digits by repeated division.
fn negabinary_reference(mut v: i128) -> u128 {
    let mut out = 0u128;
    let mut bit = 0;
    while v != 0 {
        let mut r = v % -2;
        v /= -2;
        if r < 0 {
            r += 2;
            v += 1;
        }
        out |= (r as u128) << bit;
        bit += 1;
    }
    out
}

/// A value exactly representable with a 24-bit significand.
fn snapped_f64() -> impl Strategy<Value = f64> {
    (-(1i64 << 24)..(1i64 << 24), -12i32..12)
        .prop_map(|(m, e)| m as f64 * (e as f64).exp2())
}

fn config() -> impl Strategy<Value = CodecConfig> {
    (1u8..=3, 0u16..=32, prop_oneof![
        Just(Rounding::Never),
        Just(Rounding::First),
        Just(Rounding::Last)
    ])
        .prop_map(|(d, beta, rounding)| CodecConfig { d, k: 24, q: 30, beta, rounding })
}

proptest! {
    #[test]
    fn negabinary_round_trips_and_matches_reference(v in -(1i128 << 80)..(1i128 << 80)) {
        let b = negabinary_encode(v);
        prop_assert_eq!(negabinary_decode(b), v);
        prop_assert_eq!(b, negabinary_reference(v));
    }

    #[test]
    fn lossy_transform_inverts_on_aligned_blocks(
        vals in proptest::collection::vec(-(1i128 << 40)..(1i128 << 40), 4),
    ) {
        // multiples of 4 survive the 1-d shift pair exactly
        let block: Vec<i128> = vals.iter().map(|v| v * 4).collect();
        let mut t = block.clone();
        forward_lossy(&mut t, 1);
        backward_lossy(&mut t, 1);
        prop_assert_eq!(t, block);
    }

    #[test]
    fn exact_transform_round_trips(
        nums in proptest::collection::vec(-1000i128..1000, 16),
        dens in proptest::collection::vec(1i128..50, 16),
    ) {
        let block: Vec<Rat> = nums.iter().zip(&dens).map(|(&n, &d)| Rat::new(n, d)).collect();
        let mut t = block.clone();
        forward_exact(&mut t, 2);
        backward_exact(&mut t, 2);
        prop_assert_eq!(t, block);
    }

    #[test]
    fn sequency_orders_are_permutations(d in 1u8..=3) {
        let p = sequency_permutation(d);
        let n = 4usize.pow(d as u32);
        let mut seen = vec![false; n];
        for &i in &p {
            prop_assert!(!seen[i]);
            seen[i] = true;
        }
        prop_assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn compression_is_deterministic(
        block in proptest::collection::vec(snapped_f64(), 4),
        beta in 0u16..=32,
    ) {
        let cfg = CodecConfig { d: 1, k: 24, q: 30, beta, rounding: Rounding::Last };
        let a = compress_block(&block, &cfg).unwrap();
        let b = compress_block(&block, &cfg).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn round_trip_error_stays_under_envelope(
        block in proptest::collection::vec(snapped_f64(), 4),
        cfg in config().prop_filter("1-d", |c| c.d == 1),
    ) {
        prop_assume!(block.iter().any(|&x| x != 0.0));
        let e_max = block.iter().filter_map(|&x| exponent_index(x)).max().unwrap();
        let cb = compress_block(&block, &cfg).unwrap();
        let out = decompress_block(&cb, &cfg);
        let l = e_max - cfg.q as i32 + 1;
        let bound = 8.0 * ((l + cfg.eta() + 1) as f64).exp2()
            + ((e_max - cfg.k as i32 + 2) as f64).exp2();
        for (o, b) in out.iter().zip(&block) {
            prop_assert!((o - b).abs() <= bound, "{o} vs {b} (bound {bound})");
        }
    }

    #[test]
    fn full_precision_is_near_lossless(block in proptest::collection::vec(snapped_f64(), 4)) {
        prop_assume!(block.iter().any(|&x| x != 0.0));
        let cfg = CodecConfig { d: 1, k: 24, q: 30, beta: 32, rounding: Rounding::Never };
        let e_max = block.iter().filter_map(|&x| exponent_index(x)).max().unwrap();
        let cb = compress_block(&block, &cfg).unwrap();
        let out = decompress_block(&cb, &cfg);
        let tol = ((e_max - 22) as f64).exp2();
        for (o, b) in out.iter().zip(&block) {
            prop_assert!((o - b).abs() <= tol);
        }
    }

    #[test]
    fn partition_reassembles_exactly(
        dims in (1usize..14, 1usize..14),
        seed in any::<u64>(),
    ) {
        let cfg = CodecConfig { d: 2, k: 24, q: 30, beta: 10, rounding: Rounding::Never };
        let n = dims.0 * dims.1;
        let data: Vec<f64> = (0..n)
            .map(|i| (((i as u64).wrapping_mul(seed | 1) >> 17) as f64 / 1e6).sin())
            .collect();
        let dims = [dims.0, dims.1, 1];
        let blocks = partition(&data, dims, &cfg).unwrap();
        prop_assert_eq!(reassemble(&blocks, dims, &cfg), data);
    }

    #[test]
    fn container_round_trips(
        dims in (1usize..10, 1usize..10),
        beta in 0u16..=32,
        blocks_seed in any::<u32>(),
    ) {
        let config = CodecConfig { d: 2, k: 24, q: 30, beta, rounding: Rounding::First };
        let n = dims.0 * dims.1;
        let data: Vec<f64> = (0..n)
            .map(|i| ((i as u32).wrapping_mul(blocks_seed | 1) >> 8) as f64 / 256.0 - 32000.0)
            .collect();
        let dims = [dims.0, dims.1, 1];
        let blocks = compress_grid(&data, dims, &config).unwrap();
        let c = Container { config, dims, blocks };
        let rt = Container::deserialize(&c.serialize()).unwrap();
        prop_assert_eq!(&rt, &c);
        // and decode agrees
        prop_assert_eq!(
            decompress_grid(&rt.blocks, rt.dims, &rt.config),
            decompress_grid(&c.blocks, c.dims, &c.config)
        );
    }

    #[test]
    fn beta_for_tolerance_is_minimal(tol_exp in -40i32..10, e_max in -30i32..30) {
        let cfg = CodecConfig { d: 1, k: 24, q: 30, beta: 0, rounding: Rounding::Never };
        let tol = (tol_exp as f64).exp2();
        let beta = beta_for_tolerance(tol, e_max, &cfg);
        let l = e_max - cfg.q as i32 + 1;
        let step = |b: u16| ((l + cfg.q as i32 + 1 - b as i32) as f64).exp2();
        if beta < cfg.q as u16 + 2 {
            prop_assert!(step(beta) <= tol, "step {} > tol {tol}", step(beta));
        }
        if beta > 0 {
            prop_assert!(step(beta - 1) > tol, "beta not minimal");
        }
    }

    #[test]
    fn rounding_offset_centers_the_truncation_mean(eta in 0i32..40) {
        // offset is the nearest integer to 2^{eta+1}/6 with sign opposing
        // the truncation mean (-2)^{eta+1}/6
        let o = rounding_offset(eta) as f64;
        let mean = if eta % 2 == 0 { -1.0 } else { 1.0 } * ((eta + 1) as f64).exp2() / 6.0;
        prop_assert!((o + mean).abs() <= 0.5 + 1e-9, "eta={eta}: o={o} mean={mean}");
    }
}
