mod common;

use alias_core::sample::{assign_sections, assign_subtree, sample_batch_parallel, section_rows};
use alias_core::*;

fn table(n: usize) -> (WeightSet, AliasTable) {
    let w = make_weight_set((1..=n).map(|i| 1.0 / i as f64).collect()).unwrap();
    let t = vose_construct(&w);
    (w, t)
}

#[test]
fn sectioned_draws_stay_in_their_section() {
    let (_, t) = table(1000);
    let key = RngStream::new(2, 7);
    let size = 64;
    let a = assign_sections(t.n(), size, 50_000, &key).unwrap();
    let out = sectioned_sample(&t, size, 50_000, &key).unwrap();
    let mut pos = 0;
    for (j, &c) in a.counts.iter().enumerate() {
        let rows = section_rows(t.n(), size, j);
        for &item in &out[pos..pos + c as usize] {
            let ok = rows.contains(&item) || rows.clone().any(|r| t.rows()[r].alias == item);
            assert!(ok, "item {item} cannot come from section {j}");
        }
        pos += c as usize;
    }
    assert_eq!(pos, out.len());
}

#[test]
fn samplers_pass_chi_square() {
    let (w, t) = table(1000);
    let probs = w.probabilities();
    let key = RngStream::new(3, 0);
    let m = 2_000_000;
    let runs = [
        sample_batch(&t, m, &mut key.clone()),
        sample_batch_parallel(&t, m, &key, 2).unwrap(),
        sectioned_sample(&t, 64, m, &key).unwrap(),
        sectioned_sample_parallel(&t, 1000, m, &key, 3).unwrap(),
    ];
    for s in &runs {
        let counts = frequency_counts(s, t.n()).unwrap();
        let r = chi_square_test(&counts, &probs, 0.001).unwrap();
        assert!(r.pass, "{r:?}");
    }
}

#[test]
fn subtree_recomputation_is_exact() {
    let key = RngStream::new(8, 8);
    let (n_rows, size, m) = (1_000_000, 1000, 987_654_321);
    let a = assign_sections(n_rows, size, m, &key).unwrap();
    // walk a few paths of the halving tree
    for path in [0u32, 0b1011, 0b0110, 0xffff] {
        let mut secs = 0..a.sections();
        for bit in 0..6 {
            let mid = secs.start + secs.len() / 2;
            secs = if path >> bit & 1 == 0 { secs.start..mid } else { mid..secs.end };
            let node_m: u64 = a.counts[secs.clone()].iter().sum();
            let sub = assign_subtree(n_rows, size, &key, secs.clone(), node_m).unwrap();
            assert_eq!(sub, a.counts[secs.clone()]);
        }
    }
}

#[test]
fn sample_streams_are_reproducible() {
    let (_, t) = table(5000);
    let key = RngStream::new(10, 3);
    assert_eq!(
        sectioned_sample(&t, 128, 10_000, &key).unwrap(),
        sectioned_sample_parallel(&t, 128, 10_000, &key, 4).unwrap()
    );
    assert_ne!(
        sectioned_sample(&t, 128, 10_000, &key).unwrap(),
        sectioned_sample(&t, 128, 10_000, &RngStream::new(10, 4)).unwrap()
    );
}

#[test]
fn rng_state_resumes() {
    let mut r = RngStream::new(5, 6);
    for _ in 0..37 {
        r.next_f64();
    }
    let mut resumed = RngStream::from_state(r.state());
    for _ in 0..100 {
        assert_eq!(r.next_f64(), resumed.next_f64());
    }
}
