//! Process-wide cache of the critical values `C_L`.
//!
//! The table for one `(α, seed, replicates)` triple only ever grows: noise
//! replicates are drawn sequentially, so extending the maximal length leaves
//! the values for shorter lengths unchanged and the cache never changes a
//! result.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use diffraxis_core::multiscale::{nested_noise_maxima, quantiles_by_length};
use diffraxis_core::{Error, Result};
use rayon::prelude::*;

type Key = (u64, u64, usize);

fn cache() -> &'static Mutex<HashMap<Key, Arc<Vec<f64>>>> {
    static CACHE: OnceLock<Mutex<HashMap<Key, Arc<Vec<f64>>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// `C_1 … C_{max_len}` (at least), index `L − 1`.
pub fn critical_values(max_len: usize, alpha: f64, seed: u64, replicates: usize) -> Result<Arc<Vec<f64>>> {
    if max_len == 0 || replicates == 0 || !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput("invalid critical value request"));
    }
    let key = (alpha.to_bits(), seed, replicates);
    if let Some(table) = cache().lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
        if table.len() >= max_len {
            return Ok(Arc::clone(table));
        }
    }
    let runs: Vec<Vec<f64>> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| nested_noise_maxima(max_len, seed, r))
        .collect();
    let table = Arc::new(quantiles_by_length(&runs, alpha));
    let mut guard = cache().lock().unwrap_or_else(|e| e.into_inner());
    let entry = guard.entry(key).or_insert_with(|| Arc::clone(&table));
    if entry.len() < table.len() {
        *entry = Arc::clone(&table);
    }
    Ok(table)
}
