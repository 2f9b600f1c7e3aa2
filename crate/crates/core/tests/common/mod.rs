#![allow(dead_code)]

pub mod oracle;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use seqcem_core::dataset::{BinaryColumn, Column, Dataset, Feature};

pub fn num(name: &str, values: &[f64]) -> Feature {
    Feature { name: name.into(), column: Column::Numeric(values.to_vec()) }
}

pub fn cat(name: &str, levels: &[&str], codes: &[u32]) -> Feature {
    Feature {
        name: name.into(),
        column: Column::Categorical { levels: levels.iter().map(|s| s.to_string()).collect(), codes: codes.to_vec() },
    }
}

pub fn binary(name: &str, values: &[u8]) -> BinaryColumn {
    BinaryColumn { name: name.into(), values: values.to_vec(), labels: ["0".into(), "1".into()] }
}

pub fn dataset(features: Vec<Feature>, s: &[u8], y: &[u8]) -> Dataset {
    Dataset::from_columns(features, binary("s", s), binary("y", y), None).unwrap()
}

pub fn dataset_with_ids(features: Vec<Feature>, s: &[u8], y: &[u8], ids: Vec<u64>) -> Dataset {
    Dataset::from_columns(features, binary("s", s), binary("y", y), Some(ids)).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random mixed-type dataset with small integer-valued numeric columns so
/// that distance and value ties are common. Guarantees at least one unit of
/// each S class.
pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, n_num: usize, n_cat: usize) -> Dataset {
    let mut features = Vec::new();
    for v in 0..n_num {
        let vals: Vec<f64> = (0..n).map(|_| rng.random_range(0..6) as f64).collect();
        features.push(num(&format!("x{v}"), &vals));
    }
    for v in 0..n_cat {
        let codes: Vec<u32> = (0..n).map(|_| rng.random_range(0..3)).collect();
        features.push(cat(&format!("c{v}"), &["a", "b", "c"], &codes));
    }
    let mut s: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
    s[0] = 0;
    s[n - 1] = 1;
    let y: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
    dataset(features, &s, &y)
}

/// Dataset whose row order is `perm` applied to `ds` (row `r` of the result
/// is row `perm[r]` of `ds`), ids carried along.
pub fn permute_rows(ds: &Dataset, perm: &[usize]) -> Dataset {
    ds.select(perm).unwrap()
}
