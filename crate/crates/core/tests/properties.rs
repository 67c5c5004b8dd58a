mod common;

use alias_core::io::{read_table, read_weights, write_table, write_weights};
use alias_core::model::DEFAULT_TOLERANCE;
use alias_core::sample::{assign_sections, section_sample_count};
use alias_core::split::partial_pary_search;
use alias_core::*;
use proptest::prelude::*;

fn weights() -> impl Strategy<Value = Vec<f64>> {
    prop_oneof![
        prop::collection::vec(1e-6f64..1.0, 1..400),
        prop::collection::vec(prop_oneof![Just(1.0), Just(2.0), Just(0.5)], 1..200),
        prop::collection::vec((0u32..12).prop_map(|e| 2f64.powi(e as i32 - 6)), 1..300),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn psa_equals_vose(ws in weights(), s in 1usize..40, workers in 1usize..4, chunk in prop::option::of(2usize..20)) {
        let w = make_weight_set(ws).unwrap();
        let v = vose_construct(&w);
        let t = psa_construct(&w, &PsaConfig { sections: s, workers, chunk_capacity: chunk, ..Default::default() }).unwrap();
        prop_assert_eq!(common::compare_rows(&t, &v, 0.0), None);
    }

    #[test]
    fn every_builder_conserves_mass(ws in weights(), s in 1usize..40, block in 2usize..64, threshold in 1usize..6) {
        let w = make_weight_set(ws).unwrap();
        let tables = [
            vose_construct(&w),
            psa_construct(&w, &PsaConfig { sections: s, ..Default::default() }).unwrap(),
            psa_plus_construct(&w, &PsaPlusConfig {
                psa: PsaConfig { sections: s, ..Default::default() },
                block_size: block,
                threshold,
            }).unwrap(),
        ];
        for t in &tables {
            let rep = validate_table(t, &w, DEFAULT_TOLERANCE).unwrap();
            prop_assert!(rep.ok, "{:?}", rep);
        }
    }

    #[test]
    fn pary_equals_binary(mut hay in prop::collection::vec(0u16..500, 0..600),
                          mut qs in prop::collection::vec(0u16..520, 0..80),
                          p in 3usize..40) {
        hay.sort_unstable();
        qs.sort_unstable();
        let hay: Vec<f64> = hay.into_iter().map(f64::from).collect();
        let qs: Vec<f64> = qs.into_iter().map(f64::from).collect();
        let got = partial_pary_search(&hay, &qs, p).unwrap();
        let want: Vec<usize> = qs.iter().map(|&q| hay.partition_point(|&x| x < q)).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn section_counts_sum(n_rows in 1usize..100_000, frac in 0.0f64..1.0, m in 0u64..u64::MAX / 4, seed: u64) {
        let size = ((n_rows as f64 * frac) as usize).clamp(1, n_rows).max(n_rows / 2000).max(1);
        let key = RngStream::new(seed, 0);
        let a = assign_sections(n_rows, size, m, &key).unwrap();
        prop_assert_eq!(a.counts.iter().sum::<u64>(), m);
        let j = (seed as usize) % a.sections();
        prop_assert_eq!(section_sample_count(n_rows, size, m, &key, j).unwrap(), a.counts[j]);
    }

    #[test]
    fn binary_formats_round_trip(ws in weights()) {
        let w = make_weight_set(ws).unwrap();
        let t = vose_construct(&w);
        let mut buf = Vec::new();
        write_table(&t, &mut buf).unwrap();
        let back = read_table(buf.as_slice()).unwrap();
        prop_assert!(back.rows().iter().zip(t.rows()).all(|(a, b)| a.weight.to_bits() == b.weight.to_bits() && a.alias == b.alias));
        prop_assert_eq!(back.total().to_bits(), t.total().to_bits());
        let mut buf = Vec::new();
        write_weights(&w, &mut buf).unwrap();
        let back = read_weights(buf.as_slice()).unwrap();
        prop_assert!(back.weights().iter().zip(w.weights()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn resolve_stays_in_range(ws in weights(), u in 0.0f64..1.0) {
        let w = make_weight_set(ws).unwrap();
        let t = vose_construct(&w);
        prop_assert!(t.resolve(u) < w.n());
    }
}
