use blockwht::format::{read_matrix, write_matrix};
use blockwht::precision::*;
use blockwht::{ElementType, Error, Matrix};
use half::{bf16, f16};
use proptest::prelude::*;

/// Independent E4M3 decoder: bias 7, 3 mantissa bits, S.1111.111 is NaN.
fn e4m3_value(code: u8) -> Option<f64> {
    let sign = if code & 0x80 != 0 { -1.0 } else { 1.0 };
    let exp = i32::from((code >> 3) & 0xF);
    let man = f64::from(code & 0x7);
    if exp == 15 && man == 7.0 {
        return None;
    }
    let mag = if exp == 0 {
        man / 8.0 * 2f64.powi(-6)
    } else {
        (1.0 + man / 8.0) * 2f64.powi(exp - 7)
    };
    Some(sign * mag)
}

#[test]
fn fp8_all_codes_round_trip() {
    let mut finite = 0;
    for code in 0..=255u8 {
        let decoded = fp8_e4m3_from_bits(code);
        match e4m3_value(code) {
            None => assert!(decoded.is_nan()),
            Some(v) => {
                finite += 1;
                assert_eq!(decoded.to_bits(), v.to_bits(), "code {code:#04x}");
                assert_eq!(
                    round_to(v, ElementType::Fp8E4M3).unwrap().to_bits(),
                    v.to_bits()
                );
                assert_eq!(fp8_e4m3_to_bits(v), code);
            }
        }
    }
    assert_eq!(finite, 254);
    assert_eq!(max_finite(ElementType::Fp8E4M3), 448.0);
    assert_eq!(round_to(1e6, ElementType::Fp8E4M3).unwrap(), 448.0);
}

/// Decodes every 16-bit pattern, then checks rounding of each pattern, of
/// each midpoint between neighbours (ties to even) and of points just off
/// the midpoint, all against the `half` crate.
fn exhaustive_16bit(
    dtype: ElementType,
    decode: fn(u16) -> f64,
    encode: fn(f64) -> u16,
    oracle_from_bits: fn(u16) -> f32,
    oracle_round: fn(f32) -> (f32, bool),
) {
    for bits in 0..=u16::MAX {
        let ours = decode(bits);
        let theirs = f64::from(oracle_from_bits(bits));
        if theirs.is_nan() {
            assert!(ours.is_nan());
            continue;
        }
        assert_eq!(
            ours.to_bits(),
            theirs.to_bits(),
            "{dtype} pattern {bits:#06x}"
        );
        if theirs.is_finite() {
            assert_eq!(encode(ours), bits);
            assert_eq!(round_to(ours, dtype).unwrap().to_bits(), ours.to_bits());
        }
    }
    let positives: Vec<f32> = (0..0x7fffu16)
        .map(oracle_from_bits)
        .filter(|v| v.is_finite())
        .collect();
    for pair in positives.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let mid = ((f64::from(lo) + f64::from(hi)) / 2.0) as f32;
        for probe in [mid, mid.next_down(), mid.next_up()] {
            for x in [probe, -probe] {
                let (expect, finite) = oracle_round(x);
                if !finite {
                    continue;
                }
                let got = round_to(f64::from(x), dtype).unwrap();
                assert_eq!(
                    got.to_bits(),
                    f64::from(expect).to_bits(),
                    "{dtype} rounding {x:e}"
                );
            }
        }
    }
}

#[test]
fn f16_exhaustive_against_half() {
    exhaustive_16bit(
        ElementType::F16,
        f16_from_bits,
        f16_to_bits,
        |b| f16::from_bits(b).to_f32(),
        |x| {
            let h = f16::from_f32(x);
            (h.to_f32(), h.is_finite())
        },
    );
}

#[test]
fn bf16_exhaustive_against_half() {
    exhaustive_16bit(
        ElementType::BF16,
        bf16_from_bits,
        bf16_to_bits,
        |b| bf16::from_bits(b).to_f32(),
        |x| {
            let h = bf16::from_f32(x);
            (h.to_f32(), h.is_finite())
        },
    );
}

#[test]
fn overflow_boundaries() {
    assert_eq!(round_to(65519.0, ElementType::F16).unwrap(), 65504.0);
    assert!(matches!(
        round_to(65520.0, ElementType::F16),
        Err(Error::OverflowToInfinity { .. })
    ));
    let bf16_max = f64::from(bf16::MAX.to_f32());
    assert_eq!(max_finite(ElementType::BF16), bf16_max);
    assert!(round_to(bf16_max * 1.01, ElementType::BF16).is_err());
}

fn finite_f64() -> impl Strategy<Value = f64> {
    prop_oneof![
        -70000.0f64..70000.0,
        -1e-3f64..1e-3,
        any::<f32>()
            .prop_filter("finite", |v| v.is_finite())
            .prop_map(f64::from),
    ]
}

fn dtype() -> impl Strategy<Value = ElementType> {
    prop::sample::select(ElementType::ALL.to_vec())
}

fn payload_bits(t: ElementType, raw: u64) -> f64 {
    match t {
        ElementType::F64 => f64::from_bits(raw),
        ElementType::F32 => f32_from_bits(raw as u32),
        ElementType::F16 => f16_from_bits(raw as u16),
        ElementType::BF16 => bf16_from_bits(raw as u16),
        ElementType::Fp8E4M3 => fp8_e4m3_from_bits(raw as u8),
    }
}

proptest! {
    #[test]
    fn round_to_is_idempotent_and_odd(x in finite_f64(), t in dtype()) {
        if let Ok(r) = round_to(x, t) {
            prop_assert_eq!(round_to(r, t).unwrap().to_bits(), r.to_bits());
            prop_assert_eq!(round_to(-x, t).unwrap().to_bits(), (-r).to_bits());
            prop_assert!(is_representable(r, t));
        }
    }

    #[test]
    fn file_format_round_trips_bytes(
        t in dtype(),
        rows in 0usize..5,
        cols in 1usize..9,
        raw in prop::collection::vec(any::<u64>(), 40),
    ) {
        let data: Vec<f64> = raw[..rows * cols].iter().map(|&r| payload_bits(t, r)).collect();
        let m = Matrix::new(rows, cols, t, data).unwrap();
        let mut bytes = Vec::new();
        let n = write_matrix(&m, &mut bytes).unwrap();
        prop_assert_eq!(n, bytes.len());
        prop_assert_eq!(n, 13 + rows * cols * t.byte_width());
        let back = read_matrix(&mut bytes.as_slice()).unwrap();
        let mut again = Vec::new();
        write_matrix(&back, &mut again).unwrap();
        prop_assert_eq!(bytes, again);
    }
}
