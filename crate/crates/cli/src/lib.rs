//! Library side of the command-line front end; `main` is a thin wrapper so
//! the pieces stay testable.

pub mod config;
pub mod emit;
pub mod run;

/// Cap the global thread pool from ENTANGLEMETER_THREADS when set.
pub fn init_threads() {
    if let Ok(v) = std::env::var("ENTANGLEMETER_THREADS") {
        if let Ok(threads) = v.parse::<usize>() {
            if threads >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}
