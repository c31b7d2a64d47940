//! The memory-controller cache in front of DRAM: 128 KiB, direct-mapped,
//! 4-word lines, write-allocate, write-back. Every miss stalls the whole
//! grid for the DRAM latency (plus another if a dirty line is evicted).

use std::collections::HashMap;

use crate::machine::GridConfig;

pub const LINE_WORDS: usize = 4;
pub const CACHE_WORDS: usize = 64 * 1024;
pub const LINES: usize = CACHE_WORDS / LINE_WORDS;

pub struct Cache {
    /// Base word address of the resident line, per set.
    tags: Vec<Option<u64>>,
    dirty: Vec<bool>,
    data: Vec<u16>,
    pub hits: u64,
    pub misses: u64,
}

impl Default for Cache {
    fn default() -> Self {
        Self::new()
    }
}

impl Cache {
    pub fn new() -> Self {
        Cache {
            tags: vec![None; LINES],
            dirty: vec![false; LINES],
            data: vec![0; CACHE_WORDS],
            hits: 0,
            misses: 0,
        }
    }

    fn set_of(addr: u64) -> usize {
        (addr as usize / LINE_WORDS) % LINES
    }

    fn line_base(addr: u64) -> u64 {
        addr & !(LINE_WORDS as u64 - 1)
    }

    /// Make the line holding `addr` resident; returns stall cycles.
    fn fill(&mut self, addr: u64, dram: &mut HashMap<u64, u16>, cfg: &GridConfig) -> u64 {
        let set = Self::set_of(addr);
        let base = Self::line_base(addr);
        if self.tags[set] == Some(base) {
            self.hits += 1;
            return cfg.cache_hit_latency as u64;
        }
        self.misses += 1;
        let mut stall = cfg.dram_latency as u64;
        if let Some(old) = self.tags[set] {
            if self.dirty[set] {
                stall += cfg.dram_latency as u64;
                for i in 0..LINE_WORDS {
                    let v = self.data[set * LINE_WORDS + i];
                    if v != 0 {
                        dram.insert(old + i as u64, v);
                    } else {
                        dram.remove(&(old + i as u64));
                    }
                }
            }
        }
        for i in 0..LINE_WORDS {
            self.data[set * LINE_WORDS + i] =
                dram.get(&(base + i as u64)).copied().unwrap_or(0);
        }
        self.tags[set] = Some(base);
        self.dirty[set] = false;
        stall
    }

    pub fn read(
        &mut self,
        addr: u64,
        dram: &mut HashMap<u64, u16>,
        cfg: &GridConfig,
    ) -> (u16, u64) {
        let stall = self.fill(addr, dram, cfg);
        let set = Self::set_of(addr);
        (self.data[set * LINE_WORDS + addr as usize % LINE_WORDS], stall)
    }

    pub fn write(
        &mut self,
        addr: u64,
        val: u16,
        dram: &mut HashMap<u64, u16>,
        cfg: &GridConfig,
    ) -> u64 {
        let stall = self.fill(addr, dram, cfg);
        let set = Self::set_of(addr);
        self.data[set * LINE_WORDS + addr as usize % LINE_WORDS] = val;
        self.dirty[set] = true;
        stall
    }

    /// Coherent host view (display readback); no stall, no stats.
    pub fn peek(&self, addr: u64, dram: &HashMap<u64, u16>) -> u16 {
        let set = Self::set_of(addr);
        if self.tags[set] == Some(Self::line_base(addr)) {
            self.data[set * LINE_WORDS + addr as usize % LINE_WORDS]
        } else {
            dram.get(&addr).copied().unwrap_or(0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hit_after_fill_and_dirty_eviction() {
        let cfg = GridConfig::new(1, 1);
        let mut dram = HashMap::new();
        dram.insert(7u64, 0x1234u16);
        let mut c = Cache::new();
        assert_eq!(c.read(7, &mut dram, &cfg), (0x1234, 100));
        // same line: hit, free
        assert_eq!(c.read(4, &mut dram, &cfg), (0, 0));
        assert_eq!(c.write(5, 9, &mut dram, &cfg), 0);
        assert_eq!((c.hits, c.misses), (2, 1));
        // conflicting line: miss plus dirty write-back
        let far = 7 + CACHE_WORDS as u64;
        assert_eq!(c.read(far, &mut dram, &cfg).1, 200);
        assert_eq!(dram.get(&5), Some(&9));
        // the evicted value survives the round trip; the resident line is
        // clean now, so only the fill pays
        assert_eq!(c.read(5, &mut dram, &cfg), (9, 100));
    }

    #[test]
    fn peek_sees_cached_writes() {
        let cfg = GridConfig::new(1, 1);
        let mut dram = HashMap::new();
        let mut c = Cache::new();
        c.write(40, 3, &mut dram, &cfg);
        assert_eq!(c.peek(40, &dram), 3);
        assert!(!dram.contains_key(&40));
    }
}
