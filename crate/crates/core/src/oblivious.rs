//! Oblivious shares: the operator commits to a secret seed so that miners can
//! recognise shares but not blocks.
//!
//! Byte layout. Hashes are SHA-256d and compared as 256-bit big-endian
//! integers. A share is valid iff `H(header) < 2^(256-share_bits)`, a block
//! iff additionally `H(H(header) ‖ seed) < 2^256/D`. The header is
//! `prefix ‖ extra_hash ‖ nonce` with `extra_hash = H(seed)` (32 bytes) and
//! the nonce as 8 big-endian bytes. Records on the wire are sequences of
//! fields, each a 4-byte big-endian length followed by that many bytes:
//! work is `[prefix, extra_hash, share_bits (4 bytes)]`, a submission is
//! `[prefix, extra_hash, nonce]`. The seed is never encoded.

use rand::RngCore;
use sha2::{Digest, Sha256};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::stochastic::RngStream;

pub type Hash = [u8; 32];

/// Share target exponent at full scale: shares need `hash < 2^224`.
pub const FULL_SHARE_BITS: u32 = 32;

pub fn sha256d(data: &[u8]) -> Hash {
    let first = Sha256::digest(data);
    Sha256::digest(first).into()
}

/// `hash < 2^(256-bits)`, i.e. the top `bits` bits are zero.
pub fn below_pow2(hash: &Hash, bits: u32) -> bool {
    if bits == 0 {
        return true;
    }
    if bits > 256 {
        return false;
    }
    let full = (bits / 8) as usize;
    if hash[..full].iter().any(|&b| b != 0) {
        return false;
    }
    let rem = bits % 8;
    rem == 0 || hash[full] >> (8 - rem) == 0
}

/// `hash < 2^256 / d`, evaluated exactly as `hash·d < 2^256` in five 64-bit limbs.
pub fn below_difficulty(hash: &Hash, d: u64) -> bool {
    if d == 0 {
        return false;
    }
    let mut limbs = [0u64; 5];
    let mut carry = 0u128;
    for i in 0..4 {
        let start = 32 - 8 * (i + 1);
        let word = u64::from_be_bytes(hash[start..start + 8].try_into().unwrap());
        let prod = word as u128 * d as u128 + carry;
        limbs[i] = prod as u64;
        carry = prod >> 64;
    }
    limbs[4] = carry as u64;
    limbs[4] == 0
}

/// Operator-side work package. Holds the secret seed.
#[derive(Clone, PartialEq, Eq)]
pub struct ObliviousWorkPackage {
    secret_seed: [u8; 32],
    pub extra_hash: Hash,
    pub prefix: Vec<u8>,
    pub share_bits: u32,
}

impl std::fmt::Debug for ObliviousWorkPackage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ObliviousWorkPackage")
            .field("extra_hash", &self.extra_hash)
            .field("prefix", &self.prefix)
            .field("share_bits", &self.share_bits)
            .finish_non_exhaustive()
    }
}

impl ObliviousWorkPackage {
    pub fn new(secret_seed: [u8; 32], prefix: Vec<u8>, share_bits: u32) -> Result<Self> {
        if share_bits > 256 {
            return Err(Error::param("share_bits", "must be <= 256"));
        }
        Ok(ObliviousWorkPackage {
            extra_hash: sha256d(&secret_seed),
            secret_seed,
            prefix,
            share_bits,
        })
    }

    pub fn random(rng: &mut RngStream, prefix: Vec<u8>, share_bits: u32) -> Result<Self> {
        let mut seed = [0u8; 32];
        rng.fill_bytes(&mut seed);
        Self::new(seed, prefix, share_bits)
    }

    pub fn miner_work(&self) -> MinerWork {
        MinerWork {
            prefix: self.prefix.clone(),
            extra_hash: self.extra_hash,
            share_bits: self.share_bits,
        }
    }

    pub fn secret_seed(&self) -> &[u8; 32] {
        &self.secret_seed
    }
}

/// What miners receive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinerWork {
    pub prefix: Vec<u8>,
    pub extra_hash: Hash,
    pub share_bits: u32,
}

/// A share submitted back to the operator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Submission {
    pub prefix: Vec<u8>,
    pub extra_hash: Hash,
    pub nonce: u64,
}

impl Submission {
    pub fn header(&self) -> Vec<u8> {
        header(&self.prefix, &self.extra_hash, self.nonce)
    }
}

fn header(prefix: &[u8], extra_hash: &Hash, nonce: u64) -> Vec<u8> {
    let mut h = Vec::with_capacity(prefix.len() + 40);
    h.extend_from_slice(prefix);
    h.extend_from_slice(extra_hash);
    h.extend_from_slice(&nonce.to_be_bytes());
    h
}

impl MinerWork {
    pub fn block_hash(&self, nonce: u64) -> Hash {
        sha256d(&header(&self.prefix, &self.extra_hash, nonce))
    }

    /// Miner-side check; says nothing about whether the share is a block.
    pub fn miner_check_share(&self, nonce: u64) -> bool {
        below_pow2(&self.block_hash(nonce), self.share_bits)
    }

    pub fn submission(&self, nonce: u64) -> Submission {
        Submission {
            prefix: self.prefix.clone(),
            extra_hash: self.extra_hash,
            nonce,
        }
    }
}

/// Operator-side check of a submitted share.
pub fn operator_check_block(share: &Submission, secret_seed: &[u8; 32], d: u64) -> Result<bool> {
    if sha256d(secret_seed) != share.extra_hash {
        return Err(Error::Protocol("ExtraHash does not match the secret seed".into()));
    }
    let block_hash = sha256d(&share.header());
    let mut buf = [0u8; 64];
    buf[..32].copy_from_slice(&block_hash);
    buf[32..].copy_from_slice(secret_seed);
    Ok(below_difficulty(&sha256d(&buf), d))
}

fn put_field(out: &mut Vec<u8>, bytes: &[u8]) {
    out.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
    out.extend_from_slice(bytes);
}

fn fields(mut data: &[u8]) -> Result<Vec<&[u8]>> {
    let mut out = Vec::new();
    while !data.is_empty() {
        if data.len() < 4 {
            return Err(Error::Protocol("truncated length prefix".into()));
        }
        let n = u32::from_be_bytes(data[..4].try_into().unwrap()) as usize;
        data = &data[4..];
        if data.len() < n {
            return Err(Error::Protocol("field shorter than its length prefix".into()));
        }
        out.push(&data[..n]);
        data = &data[n..];
    }
    Ok(out)
}

fn exact<const N: usize>(f: &[u8], what: &str) -> Result<[u8; N]> {
    f.try_into()
        .map_err(|_| Error::Protocol(format!("{what} must be {N} bytes, got {}", f.len())))
}

impl MinerWork {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        put_field(&mut out, &self.prefix);
        put_field(&mut out, &self.extra_hash);
        put_field(&mut out, &self.share_bits.to_be_bytes());
        out
    }

    pub fn decode(data: &[u8]) -> Result<Self> {
        let f = fields(data)?;
        if f.len() != 3 {
            return Err(Error::Protocol(format!("work needs 3 fields, got {}", f.len())));
        }
        Ok(MinerWork {
            prefix: f[0].to_vec(),
            extra_hash: exact(f[1], "extra_hash")?,
            share_bits: u32::from_be_bytes(exact(f[2], "share_bits")?),
        })
    }
}

impl Submission {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        put_field(&mut out, &self.prefix);
        put_field(&mut out, &self.extra_hash);
        put_field(&mut out, &self.nonce.to_be_bytes());
        out
    }

    pub fn decode(data: &[u8]) -> Result<Self> {
        let f = fields(data)?;
        if f.len() != 3 {
            return Err(Error::Protocol(format!("submission needs 3 fields, got {}", f.len())));
        }
        Ok(Submission {
            prefix: f[0].to_vec(),
            extra_hash: exact(f[1], "extra_hash")?,
            nonce: u64::from_be_bytes(exact(f[2], "nonce")?),
        })
    }
}

/// Outcome of mining `shares` shares against one work package.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObliviousTrial {
    pub attempts: u64,
    pub shares: u64,
    pub blocks: u64,
    /// 2×2 table: rows = miner's guess (block hash in the lower half of the
    /// share target), columns = actual block.
    pub table: [[u64; 2]; 2],
    pub chi_square: f64,
    pub p_value: f64,
    /// Fraction of shares where the guess matched the truth.
    pub guess_accuracy: f64,
}

/// Mine nonces until `shares` shares are found and classify each share both
/// ways: by the miner's best observable guess and by the operator.
pub fn oblivious_trial(seed: u64, share_bits: u32, d: u64, shares: u64) -> Result<ObliviousTrial> {
    if shares == 0 {
        return Err(Error::param("shares", "must be >= 1"));
    }
    let mut rng = RngStream::new(seed, 0);
    let pkg = ObliviousWorkPackage::random(&mut rng, b"poolsim".to_vec(), share_bits)?;
    let work = pkg.miner_work();
    let mut table = [[0u64; 2]; 2];
    let (mut attempts, mut found, mut blocks) = (0u64, 0u64, 0u64);
    let mut nonce = rng.next_u64();
    while found < shares {
        attempts += 1;
        nonce = nonce.wrapping_add(1);
        let h = work.block_hash(nonce);
        if !below_pow2(&h, share_bits) {
            continue;
        }
        found += 1;
        let guess = below_pow2(&h, share_bits + 1);
        let actual = operator_check_block(&work.submission(nonce), pkg.secret_seed(), d)?;
        blocks += actual as u64;
        table[guess as usize][actual as usize] += 1;
    }
    let (chi_square, p_value) = chi_square_2x2(&table);
    let correct = table[0][0] + table[1][1];
    Ok(ObliviousTrial {
        attempts,
        shares: found,
        blocks,
        table,
        chi_square,
        p_value,
        guess_accuracy: correct as f64 / found as f64,
    })
}

/// Pearson chi-square test of independence for a 2×2 table (1 dof).
pub fn chi_square_2x2(t: &[[u64; 2]; 2]) -> (f64, f64) {
    let n: u64 = t.iter().flatten().sum();
    let rows = [t[0][0] + t[0][1], t[1][0] + t[1][1]];
    let cols = [t[0][0] + t[1][0], t[0][1] + t[1][1]];
    let mut chi = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let e = rows[i] as f64 * cols[j] as f64 / n as f64;
            if e > 0.0 {
                chi += (t[i][j] as f64 - e).powi(2) / e;
            }
        }
    }
    let p = ChiSquared::new(1.0).map(|d| 1.0 - d.cdf(chi)).unwrap_or(f64::NAN);
    (chi, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparator_boundaries() {
        // threshold 2^(256-8): first byte must be zero
        let mut h = [0xffu8; 32];
        h[0] = 0;
        assert!(below_pow2(&h, 8));
        h[0] = 1;
        assert!(!below_pow2(&h, 8));
        // threshold 2^(256-12): 0x000f_ff.. passes, 0x0010_00.. fails
        let mut h = [0u8; 32];
        h[1] = 0x0f;
        h[2..].fill(0xff);
        assert!(below_pow2(&h, 12));
        let mut h = [0u8; 32];
        h[1] = 0x10;
        assert!(!below_pow2(&h, 12));
    }

    #[test]
    fn difficulty_comparator() {
        let max = [0xffu8; 32];
        assert!(below_difficulty(&max, 1));
        assert!(!below_difficulty(&max, 2));
        // 2^256/16 = 2^252: 0x0f ff.. passes, 0x10 00.. fails
        let mut h = [0xffu8; 32];
        h[0] = 0x0f;
        assert!(below_difficulty(&h, 16));
        let mut h = [0u8; 32];
        h[0] = 0x10;
        assert!(!below_difficulty(&h, 16));
        assert!(!below_difficulty(&[0u8; 32], 0));
    }

    #[test]
    fn d1_every_share_is_a_block_and_tamper_is_rejected() {
        let pkg = ObliviousWorkPackage::new([7u8; 32], vec![1, 2, 3], 0).unwrap();
        let work = pkg.miner_work();
        for nonce in 0..50 {
            assert!(operator_check_block(&work.submission(nonce), pkg.secret_seed(), 1).unwrap());
        }
        let mut bad = work.submission(1);
        bad.extra_hash[0] ^= 1;
        assert!(matches!(
            operator_check_block(&bad, pkg.secret_seed(), 1),
            Err(Error::Protocol(_))
        ));
    }

    #[test]
    fn records_round_trip() {
        let pkg = ObliviousWorkPackage::new([9u8; 32], b"hdr".to_vec(), 10).unwrap();
        let w = pkg.miner_work();
        assert_eq!(MinerWork::decode(&w.encode()).unwrap(), w);
        let s = w.submission(42);
        assert_eq!(Submission::decode(&s.encode()).unwrap(), s);
        assert!(Submission::decode(&s.encode()[..10]).is_err());
        assert!(!w.encode().windows(32).any(|x| x == pkg.secret_seed()));
    }

    #[test]
    fn share_rate_matches_widened_threshold() {
        let pkg = ObliviousWorkPackage::new([3u8; 32], b"x".to_vec(), 10).unwrap();
        let w = pkg.miner_work();
        let n = 1_000_000u64;
        let k = (0..n).filter(|&i| w.miner_check_share(i)).count() as f64;
        let p = 2f64.powi(-10);
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((k - n as f64 * p).abs() < 3.0 * sd, "{k}");
    }

    #[test]
    fn blocks_among_shares_and_independence() {
        let t = oblivious_trial(11, 4, 16, 10_000).unwrap();
        let p: f64 = 1.0 / 16.0;
        let sd = (10_000.0 * p * (1.0 - p)).sqrt();
        assert!((t.blocks as f64 - 10_000.0 * p).abs() < 3.0 * sd, "{}", t.blocks);
        assert!(t.p_value > 0.01, "{t:?}");
    }
}
