use plc_sbl::fec::{encode, viterbi_decode, BitVector, ConvCode};
use plc_sbl::numerics::SimRng;
use proptest::prelude::*;
use rand::Rng;

fn bits(w: u32, len: usize) -> Vec<u8> {
    (0..len).map(|i| ((w >> i) & 1) as u8).collect()
}

#[test]
fn clean_decoding_is_exhaustively_exact() {
    let code = ConvCode::default();
    for len in 1..=12 {
        for w in 0u32..1 << len {
            let msg = bits(w, len);
            let dec = viterbi_decode(&code, &encode(&code, &msg)).unwrap();
            assert_eq!(dec.bits.into_inner(), msg);
            assert_eq!(dec.distance, 0);
        }
    }
}

#[test]
fn viterbi_is_ml_on_noisy_words() {
    let code = ConvCode::default();
    let mut rng = SimRng::new(41);
    for _ in 0..300 {
        let len = rng.gen_range(1..=10);
        let mut rx = encode(&code, &bits(rng.gen(), len)).into_inner();
        for b in rx.iter_mut() {
            if rng.gen::<f64>() < 0.2 {
                *b ^= 1;
            }
        }
        let best = (0u32..1 << len).map(|w| encode(&code, &bits(w, len)).hamming(&rx)).min().unwrap();
        let dec = viterbi_decode(&code, &rx).unwrap();
        assert_eq!(dec.distance, best);
        assert_eq!(encode(&code, &dec.bits).hamming(&rx), best);
    }
}

fn msg(max: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..2, 1..=max)
}

proptest! {
    #[test]
    fn clean_decoding_up_to_64(m in msg(64)) {
        let code = ConvCode::default();
        let dec = viterbi_decode(&code, &encode(&code, &m)).unwrap();
        prop_assert_eq!(dec.bits.into_inner(), m);
    }

    #[test]
    fn encoder_is_linear(a in msg(64), seed in any::<u64>()) {
        let code = ConvCode::default();
        let mut rng = SimRng::new(seed);
        let b: Vec<u8> = (0..a.len()).map(|_| rng.gen_range(0..2)).collect();
        let sum = BitVector::new(a.iter().zip(&b).map(|(x, y)| x ^ y).collect()).unwrap();
        prop_assert_eq!(encode(&code, &sum), encode(&code, &a).xor(&encode(&code, &b)));
    }
}
