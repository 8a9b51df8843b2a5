use std::fs::File;
use std::io::{self, Read};
use std::path::Path;

use md5::Md5;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Checksum family declared by an index field: `Files` carries MD5,
/// `Checksums-Sha256` carries SHA-256.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DigestAlgo {
    Md5,
    Sha256,
}

impl DigestAlgo {
    pub fn hex_len(self) -> usize {
        match self {
            DigestAlgo::Md5 => 32,
            DigestAlgo::Sha256 => 64,
        }
    }

    pub fn is_valid_hex(self, s: &str) -> bool {
        s.len() == self.hex_len() && s.bytes().all(|b| b.is_ascii_hexdigit())
    }

    pub fn digest_bytes(self, data: &[u8]) -> String {
        match self {
            DigestAlgo::Md5 => hex::encode(Md5::digest(data)),
            DigestAlgo::Sha256 => hex::encode(Sha256::digest(data)),
        }
    }

    /// Streaming digest of a file, with its size.
    pub fn digest_file(self, path: &Path) -> io::Result<(String, u64)> {
        let mut file = File::open(path)?;
        let mut buf = vec![0u8; 64 * 1024];
        let mut size = 0u64;
        macro_rules! stream {
            ($hasher:expr) => {{
                let mut h = $hasher;
                loop {
                    let n = file.read(&mut buf)?;
                    if n == 0 {
                        break;
                    }
                    size += n as u64;
                    h.update(&buf[..n]);
                }
                hex::encode(h.finalize())
            }};
        }
        let hex = match self {
            DigestAlgo::Md5 => stream!(Md5::new()),
            DigestAlgo::Sha256 => stream!(Sha256::new()),
        };
        Ok((hex, size))
    }
}
