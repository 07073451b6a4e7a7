use crate::error::SimError;
use std::fmt::Write as _;

/// Hardware inventory and timing knobs of the modelled accelerator.
///
/// Throughputs are in elements per cycle. The clock is 1 GHz unless
/// overridden, so bandwidths are given in bytes per cycle.
#[derive(Clone, Debug, PartialEq)]
pub struct HardwareConfig {
    pub n_clusters: usize,
    pub nttu_count: usize,
    /// Butterfly rows of an NTTU; it consumes 2M elements per cycle and has log2(2M) stages.
    pub nttu_m: usize,
    pub tp_count: usize,
    /// Column count of every CU in a cluster.
    pub cu_columns: Vec<usize>,
    pub cu_rows: usize,
    pub cu_ntt_per_row: usize,
    pub cu_mac_per_row: usize,
    /// CUs may host the phase-2 NTT.
    pub cu_ntt: bool,
    /// CUs may host MAC kernels; otherwise MACs go to the EWE.
    pub cu_mac: bool,
    pub autou_count: usize,
    pub rotator_count: usize,
    pub ewe_count: usize,
    pub vpu_count: usize,
    pub lane_width: usize,
    pub ewe_lanes: usize,
    pub fill_extra: u64,
    pub word_bits: u32,
    pub local_buffer_kib: usize,
    pub scratchpad_mib: usize,
    pub noc_bytes_per_cycle: u64,
    pub noc_latency: u64,
    pub hbm_stacks: usize,
    pub hbm_bytes_per_cycle: u64,
    pub freq_ghz: f64,
}

impl Default for HardwareConfig {
    fn default() -> Self {
        HardwareConfig {
            n_clusters: 4,
            nttu_count: 2,
            nttu_m: 128,
            tp_count: 2,
            cu_columns: vec![1, 2, 2, 2, 2, 3],
            cu_rows: 128,
            cu_ntt_per_row: 2,
            cu_mac_per_row: 1,
            cu_ntt: true,
            cu_mac: true,
            autou_count: 1,
            rotator_count: 1,
            ewe_count: 1,
            vpu_count: 1,
            lane_width: 256,
            ewe_lanes: 512,
            fill_extra: 4,
            word_bits: 36,
            local_buffer_kib: 1024,
            scratchpad_mib: 180,
            noc_bytes_per_cycle: 4096,
            noc_latency: 16,
            hbm_stacks: 2,
            hbm_bytes_per_cycle: 1000,
            freq_ghz: 1.0,
        }
    }
}

impl HardwareConfig {
    pub fn with_clusters(mut self, n: usize) -> Self {
        self.n_clusters = n;
        self
    }

    /// Same inventory with the CUs barred from NTT work.
    pub fn without_cu_ntt(mut self) -> Self {
        self.cu_ntt = false;
        self
    }

    pub fn nttu_lanes(&self) -> usize {
        2 * self.nttu_m
    }

    pub fn nttu_stages(&self) -> u32 {
        self.nttu_lanes().trailing_zeros()
    }

    pub fn cu_ntt_lanes(&self) -> usize {
        self.cu_ntt_per_row * self.cu_rows
    }

    /// MAC operations per cycle of a CU with `columns` columns.
    pub fn cu_mac_rate(&self, columns: usize) -> usize {
        self.cu_mac_per_row * self.cu_rows * columns
    }

    pub fn word_bytes(&self) -> f64 {
        self.word_bits as f64 / 8.0
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::Config(m.to_string()));
        if self.n_clusters == 0 {
            return bad("n_clusters must be positive");
        }
        if self.nttu_count == 0 {
            return bad("at least one NTTU per cluster is required");
        }
        if !self.nttu_m.is_power_of_two() || self.nttu_m < 2 {
            return bad("nttu_m must be a power of two");
        }
        if self.cu_columns.contains(&0) {
            return bad("CU column counts must be positive");
        }
        if self.cu_rows == 0 || self.cu_ntt_per_row == 0 || self.cu_mac_per_row == 0 {
            return bad("CU rates must be positive");
        }
        if self.ewe_count == 0 || self.rotator_count == 0 || self.vpu_count == 0 || self.autou_count == 0 {
            return bad("every cluster needs an EWE, Rotator, VPU and AutoU");
        }
        if self.lane_width == 0 || self.ewe_lanes == 0 {
            return bad("lane widths must be positive");
        }
        if self.noc_bytes_per_cycle == 0 || self.hbm_bytes_per_cycle == 0 {
            return bad("bandwidths must be positive");
        }
        if self.freq_ghz.is_nan() || self.freq_ghz <= 0.0 {
            return bad("freq_ghz must be positive");
        }
        Ok(())
    }

    /// Parses `key = value` lines. `#` starts a comment; unknown keys are errors.
    /// Keys not present keep their default.
    pub fn parse(text: &str) -> Result<Self, SimError> {
        let mut c = HardwareConfig::default();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| SimError::Config(format!("line {}: expected key = value", ln + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            let bad_value = || SimError::Config(format!("line {}: bad value for {k}: {v}", ln + 1));
            macro_rules! num {
                ($t:ty) => {
                    v.parse::<$t>().map_err(|_| bad_value())?
                };
            }
            match k {
                "n_clusters" => c.n_clusters = num!(usize),
                "nttu_count" => c.nttu_count = num!(usize),
                "nttu_m" => c.nttu_m = num!(usize),
                "tp_count" => c.tp_count = num!(usize),
                "cu_columns" => {
                    c.cu_columns = if v.is_empty() {
                        vec![]
                    } else {
                        v.split(',')
                            .map(|s| s.trim().parse::<usize>())
                            .collect::<Result<_, _>>()
                            .map_err(|_| bad_value())?
                    }
                }
                "cu_rows" => c.cu_rows = num!(usize),
                "cu_ntt_per_row" => c.cu_ntt_per_row = num!(usize),
                "cu_mac_per_row" => c.cu_mac_per_row = num!(usize),
                "cu_ntt" => c.cu_ntt = num!(bool),
                "cu_mac" => c.cu_mac = num!(bool),
                "autou_count" => c.autou_count = num!(usize),
                "rotator_count" => c.rotator_count = num!(usize),
                "ewe_count" => c.ewe_count = num!(usize),
                "vpu_count" => c.vpu_count = num!(usize),
                "lane_width" => c.lane_width = num!(usize),
                "ewe_lanes" => c.ewe_lanes = num!(usize),
                "fill_extra" => c.fill_extra = num!(u64),
                "word_bits" => c.word_bits = num!(u32),
                "local_buffer_kib" => c.local_buffer_kib = num!(usize),
                "scratchpad_mib" => c.scratchpad_mib = num!(usize),
                "noc_bytes_per_cycle" => c.noc_bytes_per_cycle = num!(u64),
                "noc_latency" => c.noc_latency = num!(u64),
                "hbm_stacks" => c.hbm_stacks = num!(usize),
                "hbm_bytes_per_cycle" => c.hbm_bytes_per_cycle = num!(u64),
                "freq_ghz" => c.freq_ghz = num!(f64),
                _ => return Err(SimError::Config(format!("line {}: unknown key {k}", ln + 1))),
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn emit(&self) -> String {
        let mut s = String::new();
        let cols: Vec<String> = self.cu_columns.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(s, "# per-cluster inventory");
        let _ = writeln!(s, "n_clusters = {}", self.n_clusters);
        let _ = writeln!(s, "nttu_count = {}", self.nttu_count);
        let _ = writeln!(s, "nttu_m = {}", self.nttu_m);
        let _ = writeln!(s, "tp_count = {}", self.tp_count);
        let _ = writeln!(s, "cu_columns = {}", cols.join(","));
        let _ = writeln!(s, "cu_rows = {}", self.cu_rows);
        let _ = writeln!(s, "cu_ntt_per_row = {}", self.cu_ntt_per_row);
        let _ = writeln!(s, "cu_mac_per_row = {}", self.cu_mac_per_row);
        let _ = writeln!(s, "cu_ntt = {}", self.cu_ntt);
        let _ = writeln!(s, "cu_mac = {}", self.cu_mac);
        let _ = writeln!(s, "autou_count = {}", self.autou_count);
        let _ = writeln!(s, "rotator_count = {}", self.rotator_count);
        let _ = writeln!(s, "ewe_count = {}", self.ewe_count);
        let _ = writeln!(s, "vpu_count = {}", self.vpu_count);
        let _ = writeln!(s, "# datapath");
        let _ = writeln!(s, "lane_width = {}", self.lane_width);
        let _ = writeln!(s, "ewe_lanes = {}", self.ewe_lanes);
        let _ = writeln!(s, "fill_extra = {}", self.fill_extra);
        let _ = writeln!(s, "word_bits = {}", self.word_bits);
        let _ = writeln!(s, "# memory");
        let _ = writeln!(s, "local_buffer_kib = {}", self.local_buffer_kib);
        let _ = writeln!(s, "scratchpad_mib = {}", self.scratchpad_mib);
        let _ = writeln!(s, "noc_bytes_per_cycle = {}", self.noc_bytes_per_cycle);
        let _ = writeln!(s, "noc_latency = {}", self.noc_latency);
        let _ = writeln!(s, "hbm_stacks = {}", self.hbm_stacks);
        let _ = writeln!(s, "hbm_bytes_per_cycle = {}", self.hbm_bytes_per_cycle);
        let _ = writeln!(s, "freq_ghz = {}", self.freq_ghz);
        s
    }
}
