//! Append-only, hash-chained, MAC-tagged vote log and its sync journal.
//!
//! Log file layout (little-endian):
//!
//! ```text
//! "BVL1" || device_id(8) || record*
//! ```
//!
//! See [`record`] for the record layout. Each entry hash covers the previous
//! entry hash, so editing any interior record breaks every later link, and
//! the per-device MAC stops an attacker without the device key from
//! recomputing the chain.

mod journal;
mod log;
pub mod record;
pub mod storage;

use thiserror::Error;

pub use journal::{check_consistency, read_unsynced, SyncJournal, SyncJournalEntry, JOURNAL_MAGIC};
pub use log::{verify_log_bytes, ChainStatus, VoteLog, LOG_HEADER_LEN, LOG_MAGIC};
pub use record::{verify_entries, DeviceId, LogEntry};
pub use storage::{FileStorage, MemStorage, Storage, StorageFaults};

#[derive(Debug, Error)]
pub enum WormError {
    #[error("storage error: {0}")]
    Storage(#[from] std::io::Error),
    #[error("not a vote log (bad header)")]
    BadHeader,
    #[error("log belongs to device {found}, expected {expected}")]
    DeviceMismatch { expected: DeviceId, found: DeviceId },
    #[error("log tampered at seq {seq_no}")]
    TamperedAt { seq_no: u32 },
    #[error("sync journal corrupt: {0}")]
    JournalCorrupt(&'static str),
    #[error("ciphertext length {0} is not a positive multiple of 16")]
    InvalidCiphertext(usize),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{Aes128Key, Digest256, Iv128};

    const DEV: DeviceId = DeviceId::new(*b"TERM-007");

    fn key() -> Aes128Key {
        Aes128Key::new([0x11; 16])
    }

    fn filled(n: u32) -> VoteLog<MemStorage> {
        let mut log = VoteLog::open(MemStorage::new(), DEV, key()).unwrap();
        for i in 0..n {
            let ct = vec![i as u8; 16 * (1 + i as usize % 2)];
            assert_eq!(log.append(100 * i as u64, Iv128::new([i as u8; 16]), ct).unwrap(), i);
        }
        log
    }

    #[test]
    fn genesis_and_dense_seq() {
        let log = filled(5);
        assert_eq!(log.entries()[0].prev_hash, Digest256::ZERO);
        for (i, e) in log.entries().iter().enumerate() {
            assert_eq!(e.seq_no, i as u32);
        }
        assert_eq!(log.storage().bytes()[..4], *b"BVL1");
        assert_eq!(log.storage().bytes()[4..12], *DEV.as_bytes());
    }

    #[test]
    fn reopen_continues_chain() {
        let log = filled(4);
        let head = log.head_hash();
        let storage = log.into_storage();
        let mut log = VoteLog::open(storage, DEV, key()).unwrap();
        assert_eq!(log.len(), 4);
        assert_eq!(log.head_hash(), head);
        assert_eq!(log.append(999, Iv128::new([0xee; 16]), vec![1; 16]).unwrap(), 4);
        assert_eq!(log.entries()[4].prev_hash, head);
        assert_eq!(log.verify_chain().unwrap(), ChainStatus::Intact { entries: 5, torn_tail_bytes: 0 });
    }

    #[test]
    fn built_logs_are_byte_identical() {
        assert_eq!(filled(7).storage().bytes(), filled(7).storage().bytes());
    }

    #[test]
    fn torn_final_record_heals_at_every_offset() {
        let before = filled(3);
        let good = before.storage().bytes().to_vec();
        let after = {
            let mut l = filled(3);
            l.append(777, Iv128::new([7; 16]), vec![9; 32]).unwrap();
            l.storage().bytes().to_vec()
        };
        for cut in good.len()..after.len() {
            let torn = MemStorage::from_bytes(after[..cut].to_vec());
            match verify_log_bytes(torn.bytes(), &key()).unwrap() {
                ChainStatus::Intact { entries: 3, torn_tail_bytes } => assert_eq!(torn_tail_bytes, cut - good.len()),
                other => panic!("cut {cut}: {other:?}"),
            }
            let log = VoteLog::open(torn, DEV, key()).unwrap();
            assert_eq!(log.len(), 3, "cut {cut}");
            assert_eq!(log.storage().bytes(), &good[..]);
        }
    }

    #[test]
    fn torn_header_is_rewritten() {
        for cut in 0..LOG_HEADER_LEN {
            let bytes = filled(0).storage().bytes()[..cut].to_vec();
            let log = VoteLog::open(MemStorage::from_bytes(bytes), DEV, key()).unwrap();
            assert_eq!(log.storage().bytes().len(), LOG_HEADER_LEN);
        }
    }

    #[test]
    fn interior_damage_is_tampering_not_truncation() {
        let log = filled(6);
        let mut bytes = log.storage().bytes().to_vec();
        let offset = LOG_HEADER_LEN + 4 + 30 + 2; // inside entry 0 ciphertext
        bytes[offset] ^= 0x40;
        let err = VoteLog::open(MemStorage::from_bytes(bytes), DEV, key()).unwrap_err();
        assert!(matches!(err, WormError::TamperedAt { seq_no: 0 }));
    }

    #[test]
    fn failed_append_leaves_log_unchanged() {
        let mut log = filled(2);
        let snapshot = log.storage().bytes().to_vec();
        log.storage_mut().faults.fail_appends = 1;
        assert!(matches!(log.append(1, Iv128::new([0; 16]), vec![0; 16]), Err(WormError::Storage(_))));
        assert_eq!(log.storage().bytes(), &snapshot[..]);
        assert_eq!(log.len(), 2);

        log.storage_mut().faults.tear_next_append_at = Some(10);
        log.storage_mut().faults.fail_truncate = true;
        assert!(log.append(1, Iv128::new([0; 16]), vec![0; 16]).is_err());
        assert_eq!(log.len(), 2);
        log.storage_mut().faults.fail_truncate = false;
        assert_eq!(log.append(2, Iv128::new([1; 16]), vec![0; 16]).unwrap(), 2);
        assert!(log.verify_chain().unwrap().is_intact());
    }

    #[test]
    fn device_mismatch() {
        let storage = filled(1).into_storage();
        let err = VoteLog::open(storage, DeviceId::new(*b"OTHER---"), key()).unwrap_err();
        assert!(matches!(err, WormError::DeviceMismatch { .. }));
    }

    #[test]
    fn rejects_bad_ciphertext() {
        let mut log = filled(0);
        assert!(matches!(log.append(0, Iv128::new([0; 16]), vec![0; 15]), Err(WormError::InvalidCiphertext(15))));
        assert!(matches!(log.append(0, Iv128::new([0; 16]), vec![]), Err(WormError::InvalidCiphertext(0))));
    }

    #[test]
    fn journal_ranges() {
        let mut j = SyncJournal::open(MemStorage::new()).unwrap();
        assert_eq!(j.head(), None);
        j.record_batch_assignment(0, 0, 19, 10).unwrap();
        j.record_batch_assignment(1, 20, 39, 20).unwrap();
        assert_eq!(j.head(), Some(39));
        j.record_batch_assignment(0, 0, 19, 99).unwrap();
        assert_eq!(j.records().len(), 2);
        assert!(matches!(j.record_batch_assignment(2, 41, 50, 30), Err(WormError::JournalCorrupt(_))));
        assert!(matches!(j.record_batch_assignment(2, 30, 50, 30), Err(WormError::JournalCorrupt(_))));
        assert!(matches!(j.record_batch_assignment(5, 40, 50, 30), Err(WormError::JournalCorrupt(_))));
        assert_eq!(j.head(), Some(39));
    }

    #[test]
    fn journal_gap_after_first_batch() {
        let mut j = SyncJournal::open(MemStorage::new()).unwrap();
        j.record_batch_assignment(0, 0, 19, 1).unwrap();
        assert!(matches!(j.record_batch_assignment(1, 21, 40, 2), Err(WormError::JournalCorrupt(_))));
    }

    #[test]
    fn journal_reopen_and_torn_tail() {
        let mut j = SyncJournal::open(MemStorage::new()).unwrap();
        j.record_batch_assignment(0, 0, 4, 1).unwrap();
        j.record_batch_assignment(1, 5, 9, 2).unwrap();
        let bytes = j.storage().bytes().to_vec();
        let reopened = SyncJournal::open(MemStorage::from_bytes(bytes.clone())).unwrap();
        assert_eq!(reopened.records(), j.records());

        let torn = SyncJournal::open(MemStorage::from_bytes(bytes[..bytes.len() - 7].to_vec())).unwrap();
        assert_eq!(torn.records().len(), 1);
        assert_eq!(torn.storage().bytes().len(), 4 + 52);

        let mut flipped = bytes.clone();
        flipped[10] ^= 1;
        assert!(matches!(SyncJournal::open(MemStorage::from_bytes(flipped)), Err(WormError::JournalCorrupt(_))));
    }

    #[test]
    fn unsynced_ranges() {
        let log = filled(30);
        let mut j = SyncJournal::open(MemStorage::new()).unwrap();
        assert_eq!(read_unsynced(&log, &j).unwrap().len(), 30);
        j.record_batch_assignment(0, 0, 19, 1).unwrap();
        let rest = read_unsynced(&log, &j).unwrap();
        assert_eq!(rest.first().unwrap().seq_no, 20);
        assert_eq!(rest.len(), 10);
        j.record_batch_assignment(1, 20, 29, 2).unwrap();
        assert!(read_unsynced(&log, &j).unwrap().is_empty());

        let short = filled(10);
        assert!(matches!(read_unsynced(&short, &j), Err(WormError::JournalCorrupt(_))));
    }
}
