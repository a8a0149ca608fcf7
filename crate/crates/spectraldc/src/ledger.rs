//! Instrumented two-level memory model.
//!
//! A [`CostLedger`] counts flops, words moved between slow and fast memory,
//! and messages (block transfers). Fast memory holds `M` words; residency is
//! tracked per named block with an LRU policy, so touching a resident block
//! is free while a miss moves the whole block (one message, `p*q` words).
//! Evicting a dirty block writes it back and is charged the same way.
//!
//! Counting is observation only: kernels read the configured `M` to choose
//! blocksizes but never change their arithmetic based on whether counting is
//! enabled, so enabling the ledger cannot perturb numerical results.
//!
//! Flop accounting conventions (used consistently by every kernel):
//! - multiply-accumulate in matrix multiply: 2 flops per scalar pair,
//! - applying a Householder reflector with `h` nonzeros to `c` columns
//!   (or rows): `4*h*c + h` flops,
//! - generating a reflector from `h` entries: `3*h` flops,
//! - a symmetric two-sided reflector application to an `n`-wide block:
//!   `4*h*n + 4*h` flops.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

/// Default fast-memory size (words) used by no-op ledgers.
pub const DEFAULT_FAST_MEMORY: usize = 4096;

/// Counter triple shared by totals and per-phase entries.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counters {
    pub flops: u64,
    pub words: u64,
    pub messages: u64,
}

impl Counters {
    fn add(&mut self, other: Counters) {
        self.flops += other.flops;
        self.words += other.words;
        self.messages += other.messages;
    }
}

/// Identifier for a logical block region (one per operand per kernel call).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RegionId(u64);

#[derive(Default)]
struct LruState {
    // block -> (last-use tick, words, dirty)
    resident: HashMap<(RegionId, u64), (u64, usize, bool)>,
    by_tick: BTreeMap<u64, (RegionId, u64)>,
    occupancy: usize,
    tick: u64,
}

#[derive(Default)]
struct LedgerState {
    totals: Counters,
    phases: BTreeMap<String, Counters>,
    phase_stack: Vec<String>,
    lru: LruState,
}

/// Flop/word/message ledger behind every instrumented kernel.
pub struct CostLedger {
    m_words: usize,
    counting: bool,
    next_region: AtomicU64,
    state: Mutex<LedgerState>,
}

/// Scoped phase label; records made while the guard lives are attributed to
/// the label (in addition to the ledger totals).
pub struct PhaseGuard<'a> {
    ledger: &'a CostLedger,
    active: bool,
}

impl Drop for PhaseGuard<'_> {
    fn drop(&mut self) {
        if self.active {
            let mut st = self.ledger.state.lock().unwrap();
            st.phase_stack.pop();
        }
    }
}

impl CostLedger {
    /// Counting ledger with fast memory of `m_words` words.
    pub fn new(m_words: usize) -> Self {
        CostLedger {
            m_words: m_words.max(4),
            counting: true,
            next_region: AtomicU64::new(0),
            state: Mutex::new(LedgerState::default()),
        }
    }

    /// Non-counting sink with the default fast-memory size.
    pub fn noop() -> Self {
        Self::silent(DEFAULT_FAST_MEMORY)
    }

    /// Non-counting sink that still advertises `m_words` (kernels pick the
    /// same blocksizes as a counting ledger with the same `M`).
    pub fn silent(m_words: usize) -> Self {
        CostLedger {
            m_words: m_words.max(4),
            counting: false,
            next_region: AtomicU64::new(0),
            state: Mutex::new(LedgerState::default()),
        }
    }

    pub fn fast_memory(&self) -> usize {
        self.m_words
    }

    pub fn is_counting(&self) -> bool {
        self.counting
    }

    /// Kernel blocksize `b = floor(sqrt(M/3))`, clamped to at least 1:
    /// three `b x b` blocks fit in fast memory at once.
    pub fn block_size(&self) -> usize {
        (((self.m_words as f64) / 3.0).sqrt().floor() as usize).max(1)
    }

    pub fn new_region(&self) -> RegionId {
        RegionId(self.next_region.fetch_add(1, Ordering::Relaxed))
    }

    /// Enter a labelled phase; nested phases attribute to the innermost.
    pub fn phase(&self, label: &str) -> PhaseGuard<'_> {
        if !self.counting {
            return PhaseGuard {
                ledger: self,
                active: false,
            };
        }
        let mut st = self.state.lock().unwrap();
        st.phase_stack.push(label.to_string());
        PhaseGuard {
            ledger: self,
            active: true,
        }
    }

    fn record(&self, c: Counters) {
        if !self.counting {
            return;
        }
        let mut st = self.state.lock().unwrap();
        st.totals.add(c);
        if let Some(label) = st.phase_stack.last().cloned() {
            st.phases.entry(label).or_default().add(c);
        }
    }

    pub fn add_flops(&self, flops: u64) {
        self.record(Counters {
            flops,
            ..Default::default()
        });
    }

    /// Raw accumulation of pre-counted words/messages/flops (no LRU).
    pub fn record_raw(&self, words: u64, messages: u64, flops: u64) {
        self.record(Counters {
            flops,
            words,
            messages,
        });
    }

    /// Touch a block of `words` words for reading (`dirty = false`) or
    /// writing (`dirty = true`). A miss transfers the block (1 message,
    /// `words` words); evicting a dirty block writes it back.
    pub fn touch(&self, region: RegionId, block: u64, words: usize, dirty: bool) {
        if !self.counting {
            return;
        }
        assert!(words >= 1, "block transfers move at least one word");
        let mut st = self.state.lock().unwrap();
        let mut moved = Counters::default();
        let key = (region, block);

        st.lru.tick += 1;
        let tick = st.lru.tick;
        if let Some(&(old_tick, sz, was_dirty)) = st.lru.resident.get(&key) {
            // Hit: refresh recency, possibly upgrade dirtiness.
            st.lru.by_tick.remove(&old_tick);
            st.lru.by_tick.insert(tick, key);
            st.lru
                .resident
                .insert(key, (tick, sz, was_dirty || dirty));
        } else {
            moved.words += words as u64;
            moved.messages += 1;
            // Evict LRU blocks until the new one fits.
            while st.lru.occupancy + words > self.m_words && !st.lru.by_tick.is_empty() {
                let (&t, &victim) = st.lru.by_tick.iter().next().unwrap();
                st.lru.by_tick.remove(&t);
                let (_, vsz, vdirty) = st.lru.resident.remove(&victim).unwrap();
                st.lru.occupancy -= vsz;
                if vdirty {
                    moved.words += vsz as u64;
                    moved.messages += 1;
                }
            }
            if words <= self.m_words {
                st.lru.resident.insert(key, (tick, words, dirty));
                st.lru.by_tick.insert(tick, key);
                st.lru.occupancy += words;
            } else if dirty {
                // Oversized block streams straight through; count writeback.
                moved.words += words as u64;
                moved.messages += 1;
            }
        }

        st.totals.add(moved);
        if let Some(label) = st.phase_stack.last().cloned() {
            st.phases.entry(label).or_default().add(moved);
        }
    }

    pub fn totals(&self) -> Counters {
        self.state.lock().unwrap().totals
    }

    pub fn phase_totals(&self) -> BTreeMap<String, Counters> {
        self.state.lock().unwrap().phases.clone()
    }

    /// CSV report: `phase,flops,words,messages,M,n,P` with one row per phase
    /// plus a `total` row. `n` and `p` are caller-supplied run metadata.
    pub fn csv_report(&self, n: usize, p: usize) -> String {
        let mut out = String::from("phase,flops,words,messages,M,n,P\n");
        let st = self.state.lock().unwrap();
        for (label, c) in &st.phases {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                label, c.flops, c.words, c.messages, self.m_words, n, p
            ));
        }
        let t = st.totals;
        out.push_str(&format!(
            "total,{},{},{},{},{},{}\n",
            t.flops, t.words, t.messages, self.m_words, n, p
        ));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_sum_additively() {
        let ledger = CostLedger::new(64);
        ledger.record_raw(0, 0, 0);
        assert_eq!(ledger.totals(), Counters::default());
        ledger.record_raw(3, 1, 10);
        ledger.record_raw(5, 2, 20);
        let t = ledger.totals();
        assert_eq!((t.words, t.messages, t.flops), (8, 3, 30));
    }

    #[test]
    fn lru_hit_is_free() {
        let ledger = CostLedger::new(100);
        let r = ledger.new_region();
        ledger.touch(r, 0, 40, false);
        ledger.touch(r, 0, 40, false);
        let t = ledger.totals();
        assert_eq!((t.words, t.messages), (40, 1));
    }

    #[test]
    fn lru_evicts_and_writes_back_dirty() {
        let ledger = CostLedger::new(100);
        let r = ledger.new_region();
        ledger.touch(r, 0, 60, true); // resident, dirty
        ledger.touch(r, 1, 60, false); // evicts block 0 -> writeback
        let t = ledger.totals();
        assert_eq!(t.words, 60 + 60 + 60);
        assert_eq!(t.messages, 3);
    }

    #[test]
    fn disabled_ledger_stays_zero() {
        let ledger = CostLedger::noop();
        let r = ledger.new_region();
        ledger.touch(r, 0, 10, true);
        ledger.add_flops(100);
        assert_eq!(ledger.totals(), Counters::default());
    }

    #[test]
    fn concurrent_recording_loses_nothing() {
        let ledger = std::sync::Arc::new(CostLedger::new(1024));
        let mut handles = Vec::new();
        for _ in 0..8 {
            let l = ledger.clone();
            handles.push(std::thread::spawn(move || {
                for _ in 0..1000 {
                    l.record_raw(1, 1, 1);
                }
            }));
        }
        for h in handles {
            h.join().unwrap();
        }
        let t = ledger.totals();
        assert_eq!((t.flops, t.words, t.messages), (8000, 8000, 8000));
    }

    #[test]
    fn phase_attribution() {
        let ledger = CostLedger::new(64);
        {
            let _p = ledger.phase("stage-a");
            ledger.add_flops(5);
        }
        ledger.add_flops(7);
        let phases = ledger.phase_totals();
        assert_eq!(phases["stage-a"].flops, 5);
        assert_eq!(ledger.totals().flops, 12);
    }

    #[test]
    fn block_size_follows_fast_memory() {
        assert_eq!(CostLedger::new(3).block_size(), 1);
        assert_eq!(CostLedger::new(300).block_size(), 10);
        assert_eq!(CostLedger::new(4096).block_size(), 36);
    }
}
