use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type SimRng = ChaCha8Rng;

/// Independent named random streams derived from one root seed, so that
/// changing how much one component draws never perturbs another.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStreams {
    root: u64,
}

impl RngStreams {
    pub const WORKLOAD: &'static str = "workload";
    pub const JITTER: &'static str = "jitter";
    pub const QUALITY: &'static str = "quality";
    pub const STRATEGY: &'static str = "strategy";
    pub const GENERATION: &'static str = "generation";
    pub const ROUTER: &'static str = "router";
    pub const MARKET: &'static str = "market";
    pub const WARMUP: &'static str = "warmup";

    pub fn new(root: u64) -> Self {
        RngStreams { root }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    pub fn stream(&self, name: &str) -> SimRng {
        let mut hasher = Sha256::new();
        hasher.update(self.root.to_le_bytes());
        hasher.update(name.as_bytes());
        let digest = hasher.finalize();
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest);
        SimRng::from_seed(seed)
    }

    /// A stream keyed by name and an index, e.g. one per agent.
    pub fn indexed(&self, name: &str, index: usize) -> SimRng {
        self.stream(&format!("{name}/{index}"))
    }
}
