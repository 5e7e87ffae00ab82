use proptest::prelude::*;

use neuroenc::codec::{decode_image, encode_image, EncodeMode, ImageU8};
use neuroenc::io::{parse_idx_images, parse_idx_labels, read_pgm, read_spike_table, write_pgm, write_spike_table};
use neuroenc::model::{
    branch_integrating_time, decode_pixel_from_interval, interspike_interval_analytic, BranchSet, DecodeTolerance,
    DeviceParams, Pixel,
};
use neuroenc::simulator::{measure_intervals, simulate_pixel, SimConfig};

fn image() -> impl Strategy<Value = ImageU8> {
    (0usize..6, 0usize..6).prop_flat_map(|(r, c)| {
        proptest::collection::vec(any::<u8>(), r * c).prop_map(move |px| ImageU8::new(r, c, px).unwrap())
    })
}

proptest! {
    #[test]
    fn scaling_capacitors_scales_times(alpha in 0.1f64..3.0, p in any::<u8>()) {
        let params = DeviceParams::default().without_leak();
        let base = BranchSet::default();
        let scaled = BranchSet::new(
            base.branches().iter().map(|b| neuroenc::Branch::new(b.c_mem * alpha, b.k_weight)).collect(),
        ).unwrap();
        for (b, s) in base.branches().iter().zip(scaled.branches()) {
            let x = branch_integrating_time(Pixel(p), b, &params).unwrap();
            let xs = branch_integrating_time(Pixel(p), s, &params).unwrap();
            prop_assert!(((xs - alpha * x) / xs).abs() < 1e-14);
        }
        for i in 0..base.interval_count() {
            let d = interspike_interval_analytic(Pixel(p), i, &base, &params).unwrap();
            let ds = interspike_interval_analytic(Pixel(p), i, &scaled, &params).unwrap();
            prop_assert!(((ds - alpha * d) / ds).abs() < 1e-13);
        }
    }

    #[test]
    fn decode_inverts_analytic_interval(p in any::<u8>(), leak in prop_oneof![Just(0.0), 0.0f64..5e-9]) {
        let params = DeviceParams { i_leak: leak, ..DeviceParams::default() };
        let bset = BranchSet::default();
        for i in 0..bset.interval_count() {
            let d = interspike_interval_analytic(Pixel(p), i, &bset, &params).unwrap();
            prop_assert_eq!(decode_pixel_from_interval(d, i, &bset, &params, DecodeTolerance::default()).unwrap(), Pixel(p));
        }
    }

    #[test]
    fn simulated_intervals_agree(p in any::<u8>(), leak in prop_oneof![Just(0.0), 0.0f64..5e-9]) {
        let params = DeviceParams { i_leak: leak, ..DeviceParams::default() };
        let bset = BranchSet::default();
        let train = simulate_pixel(Pixel(p), &bset, &params, &SimConfig::for_params(&params), 0.0).unwrap().train;
        for (i, d) in measure_intervals(&train).unwrap().into_iter().enumerate() {
            let want = interspike_interval_analytic(Pixel(p), i, &bset, &params).unwrap();
            prop_assert!(((d - want) / want).abs() < 1e-9);
        }
    }

    #[test]
    fn image_round_trip_through_files(img in image(), simulated in any::<bool>()) {
        let params = DeviceParams::default();
        let bset = BranchSet::default();
        let mode = if simulated { EncodeMode::Simulated } else { EncodeMode::Analytic };
        let enc = encode_image(&img, &bset, &params, None, mode).unwrap();
        let mut csv = Vec::new();
        write_spike_table(&enc, &mut csv).unwrap();
        let back = read_spike_table(std::str::from_utf8(&csv).unwrap()).unwrap();
        let decoded = decode_image(&back, &bset, &params).unwrap();
        prop_assert_eq!(&decoded, &img);

        let mut pgm = Vec::new();
        write_pgm(&decoded, &mut pgm).unwrap();
        prop_assert_eq!(read_pgm(&pgm).unwrap(), img);
    }

    #[test]
    fn encoding_is_deterministic(img in image()) {
        let params = DeviceParams::default();
        let bset = BranchSet::default();
        let a = encode_image(&img, &bset, &params, None, EncodeMode::Simulated).unwrap();
        let b = encode_image(&img, &bset, &params, None, EncodeMode::Simulated).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn idx_parsers_never_panic(bytes in proptest::collection::vec(any::<u8>(), 0..64)) {
        let _ = parse_idx_images(&bytes);
        let _ = parse_idx_labels(&bytes);
        let _ = read_pgm(&bytes);
    }

    #[test]
    fn idx_header_fuzz_never_panics(dims in proptest::array::uniform3(any::<u32>()), tail in proptest::collection::vec(any::<u8>(), 0..32)) {
        let mut bytes = vec![0, 0, 8, 3];
        for d in dims {
            bytes.extend_from_slice(&d.to_be_bytes());
        }
        bytes.extend(tail);
        let _ = parse_idx_images(&bytes);
    }

    #[test]
    fn spike_table_reader_never_panics(text in "[#a-z0-9_=,.\\n -]{0,200}") {
        let _ = read_spike_table(&text);
    }
}
