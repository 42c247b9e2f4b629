//! Session-key derivation from the folded structure of a pre-shared secret.
//!
//! The secret is transcoded through the canonical codon table, folded, and
//! reduced to a master sequence: the secret's bases rearranged stems-first
//! (stem bases in ascending position, then loop bases), 2-bit packed, followed
//! by the dot-bracket string. Secrets whose fold has fewer than
//! [`MIN_STEM_BASES`] paired positions use the packed sequence in its original
//! order. The master sequence is stretched with PBKDF2-HMAC-SHA256.
//!
//! Loop bases stay in the master sequence so that two secrets differing only
//! in unpaired positions never share a key.

use std::fmt;

use crate::codon::{encode, CodonSBox, RnaSequence};
use crate::crypto::{pbkdf2::pbkdf2_hmac_sha256, sha256};
use crate::error::{Error, Result};
use crate::fold::{fold, EnergyModel, SecondaryStructure};
use crate::pbox::{apply, derive_permutation};

pub const KEY_LEN: usize = 32;
pub const SALT_LEN: usize = 16;
pub const ITERATIONS: u32 = 10_000;
pub const MIN_STEM_BASES: usize = 16;

#[derive(Clone, PartialEq, Eq)]
pub struct MasterSequence {
    pub bytes: Vec<u8>,
    /// SHA-256 of the secret's RNA string followed by its dot-bracket.
    pub source_fingerprint: [u8; 32],
}

impl fmt::Debug for MasterSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MasterSequence")
            .field("len", &self.bytes.len())
            .field("source_fingerprint", &hex(&self.source_fingerprint[..8]))
            .finish()
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct SessionKey {
    pub key: [u8; KEY_LEN],
    pub salt: [u8; SALT_LEN],
    pub iterations: u32,
}

impl SessionKey {
    /// Short public identifier: first 8 bytes of SHA-256(key), hex encoded.
    pub fn fingerprint(&self) -> String {
        hex(&sha256(&self.key)[..8])
    }
}

impl fmt::Debug for SessionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SessionKey")
            .field("fingerprint", &self.fingerprint())
            .field("salt", &hex(&self.salt))
            .field("iterations", &self.iterations)
            .finish()
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Folds the secret and returns both the RNA and its structure.
pub fn fold_secret(secret: &[u8], model: &EnergyModel) -> Result<(RnaSequence, SecondaryStructure)> {
    if secret.is_empty() {
        return Err(Error::InvalidSecret("secret must be non-empty"));
    }
    let rna = encode(secret, &CodonSBox::identity());
    let structure = fold(&rna, model);
    Ok((rna, structure))
}

pub fn extract_master(secret: &[u8], model: &EnergyModel) -> Result<MasterSequence> {
    let (rna, structure) = fold_secret(secret, model)?;
    let mut bytes = if structure.pair_count() * 2 >= MIN_STEM_BASES {
        apply(&rna, &derive_permutation(&structure))?.pack()
    } else {
        rna.pack()
    };
    bytes.extend_from_slice(structure.dot_bracket.as_bytes());

    let mut src = rna.to_string().into_bytes();
    src.extend_from_slice(structure.dot_bracket.as_bytes());
    Ok(MasterSequence { bytes, source_fingerprint: sha256(&src) })
}

pub fn derive_key(master: &MasterSequence, salt: &[u8]) -> Result<SessionKey> {
    let salt: [u8; SALT_LEN] = salt
        .try_into()
        .map_err(|_| Error::InvalidSalt { expected: SALT_LEN, actual: salt.len() })?;
    let mut key = [0u8; KEY_LEN];
    pbkdf2_hmac_sha256(&master.bytes, &salt, ITERATIONS, &mut key);
    Ok(SessionKey { key, salt, iterations: ITERATIONS })
}

/// `extract_master` followed by `derive_key`.
pub fn session_key(secret: &[u8], salt: &[u8], model: &EnergyModel) -> Result<SessionKey> {
    derive_key(&extract_master(secret, model)?, salt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codon::Nucleotide;
    use crate::crypto::KeystreamSampler;
    use crate::fold::fold_invocations;
    use std::collections::HashSet;

    #[test]
    fn pair_free_secret_uses_full_sequence() {
        // 0x00 -> AAAAAA: no complementary bases at all.
        let m = EnergyModel::default();
        let master = extract_master(&[0x00, 0x00, 0x00], &m).unwrap();
        let rna = encode(&[0, 0, 0], &CodonSBox::identity());
        let mut expected = rna.pack();
        expected.extend_from_slice(".".repeat(rna.len()).as_bytes());
        assert_eq!(master.bytes, expected);
    }

    #[test]
    fn stem_branch_used_for_structured_secrets() {
        let m = EnergyModel::default();
        let secret = b"test-secret with enough length to fold into stems";
        let (rna, s) = fold_secret(secret, &m).unwrap();
        let stems: Vec<Nucleotide> =
            (0..rna.len()).filter(|&i| s.pair_table[i].is_some()).map(|i| rna.bases[i]).collect();
        let loops: Vec<Nucleotide> =
            (0..rna.len()).filter(|&i| s.pair_table[i].is_none()).map(|i| rna.bases[i]).collect();
        assert!(stems.len() >= MIN_STEM_BASES);
        let master = extract_master(secret, &m).unwrap();
        let mut expected = crate::codon::pack_bases(&[stems, loops].concat());
        expected.extend_from_slice(s.dot_bracket.as_bytes());
        assert_eq!(master.bytes, expected);
    }

    #[test]
    fn master_is_deterministic() {
        let m = EnergyModel::default();
        assert_eq!(extract_master(b"test-secret", &m).unwrap(), extract_master(b"test-secret", &m).unwrap());
    }

    #[test]
    fn empty_secret_rejected() {
        assert!(matches!(extract_master(b"", &EnergyModel::default()), Err(Error::InvalidSecret(_))));
    }

    #[test]
    fn one_byte_change_changes_master() {
        let m = EnergyModel::default();
        let mut rng = KeystreamSampler::from_seed(b"master-sensitivity");
        for _ in 0..1000 {
            let len = 1 + rng.below(24) as usize;
            let a: Vec<u8> = (0..len).map(|_| rng.next_u32() as u8).collect();
            let mut b = a.clone();
            let pos = rng.below(len as u32) as usize;
            b[pos] ^= 1 + rng.below(255) as u8;
            assert_ne!(extract_master(&a, &m).unwrap().bytes, extract_master(&b, &m).unwrap().bytes);
        }
    }

    #[test]
    fn salt_length_enforced() {
        let master = extract_master(b"pw", &EnergyModel::default()).unwrap();
        assert!(matches!(derive_key(&master, &[0u8; 15]), Err(Error::InvalidSalt { actual: 15, .. })));
        assert!(derive_key(&master, &[0u8; 17]).is_err());
        let k = derive_key(&master, &[0u8; 16]).unwrap();
        assert_eq!(k.iterations, 10_000);
        assert_eq!(k.key.len(), 32);
    }

    #[test]
    fn key_matches_direct_pbkdf2() {
        let master = extract_master(b"pw", &EnergyModel::default()).unwrap();
        let salt = [7u8; 16];
        let mut expected = [0u8; 32];
        pbkdf2_hmac_sha256(&master.bytes, &salt, 10_000, &mut expected);
        assert_eq!(derive_key(&master, &salt).unwrap().key, expected);
    }

    #[test]
    fn salts_diversify_keys() {
        let master = extract_master(b"diffusion", &EnergyModel::default()).unwrap();
        let mut rng = KeystreamSampler::from_seed(b"salts");
        let first = derive_key(&master, &[1u8; 16]).unwrap();
        assert_eq!(first, derive_key(&master, &[1u8; 16]).unwrap());
        let mut keys = HashSet::new();
        for _ in 0..200 {
            let salt: Vec<u8> = (0..16).map(|_| rng.next_u32() as u8).collect();
            assert!(keys.insert(derive_key(&master, &salt).unwrap().key));
        }
    }

    #[test]
    fn every_derivation_folds_the_secret() {
        let before = fold_invocations();
        session_key(b"guess", &[0u8; 16], &EnergyModel::default()).unwrap();
        assert!(fold_invocations() - before >= 1);
    }

    #[test]
    fn debug_never_prints_key_bytes() {
        let k = session_key(b"pw", &[0u8; 16], &EnergyModel::default()).unwrap();
        let dbg = format!("{k:?}");
        assert!(!dbg.contains(&hex(&k.key)));
        assert!(dbg.contains(&k.fingerprint()));
    }
}
