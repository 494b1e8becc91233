use super::*;
use crate::sync::build_batches;
use crate::testutil::*;

fn batches(dev: u8, votes: &[(u32, u16)]) -> Vec<BatchManifest> {
    build_batches(vote_log(dev, votes).entries(), device(dev), 0, 20).unwrap()
}

#[test]
fn fresh_server_is_all_zero() {
    let server = Server::new(keyring(&[1]));
    let s = server.snapshot();
    assert_eq!((s.turnout, s.auth_success, s.auth_failure, s.votes_received), (0, 0, 0, 0));
    assert!(s.anomalies.is_empty() && s.last_sync_at.is_empty());
    assert_eq!(s.avg_cycle_ms, 0.0);
    let t = server.tally(&ballot());
    assert_eq!(t.counts.values().copied().collect::<Vec<_>>(), [0, 0, 0]);
    assert!(t.excluded.is_empty());
}

#[test]
fn valid_batch_is_acked_and_replay_is_duplicate() {
    let b = batches(1, &simple_votes(20));
    let mut server = Server::new(keyring(&[1]));
    assert_eq!(server.ingest(&b[0].encode(), 5), UploadOutcome::Ack { batch_id: 0 });
    assert_eq!(server.accepted_len(), 20);
    let before = server.ledger().clone();
    assert_eq!(server.ingest(&b[0].encode(), 9), UploadOutcome::AckDuplicate { batch_id: 0 });
    assert_eq!(server.ledger(), &before);
    assert_eq!(server.snapshot().last_sync_at[&device(1)], 5);
    assert!(server.anomalies().is_empty());
}

#[test]
fn corruption_sweep_over_every_manifest_byte() {
    let m = &batches(1, &simple_votes(20))[0];
    let clean = m.encode();
    for off in 0..clean.len() {
        let mut bytes = clean.clone();
        bytes[off] ^= 0x01;
        let mut server = Server::new(keyring(&[1]));
        let outcome = server.ingest(&bytes, 0);
        assert!(matches!(outcome, UploadOutcome::Nack { .. }), "offset {off}: {outcome:?}");
        assert_eq!(server.accepted_len(), 0, "offset {off}");
        assert_eq!(server.ledger(), &Ledger::default());
    }
    let mut bytes = clean.clone();
    bytes[200] ^= 0x01;
    let mut server = Server::new(keyring(&[1]));
    assert_eq!(server.ingest(&bytes, 0), UploadOutcome::Nack { batch_id: 0, reason: NackReason::ChecksumMismatch });
    assert_eq!(server.anomalies()[0].kind, AnomalyKind::ChecksumFailure);
}

#[test]
fn out_of_order_batch_is_chain_break() {
    let b = batches(1, &simple_votes(40));
    let mut server = Server::new(keyring(&[1]));
    let outcome = server.ingest(&b[1].encode(), 0);
    assert_eq!(outcome, UploadOutcome::Nack { batch_id: 1, reason: NackReason::ChainBreak });
    assert_eq!(server.anomalies()[0].kind, AnomalyKind::ChainBreak);
    assert_eq!(server.anomalies()[0].seq_no, Some(20));
    assert_eq!(server.accepted_len(), 0);
    assert!(server.ingest(&b[0].encode(), 1).is_ack());
    assert!(server.ingest(&b[1].encode(), 2).is_ack());
}

#[test]
fn resealed_entry_with_wrong_key_is_rejected() {
    let log = vote_log(1, &simple_votes(3));
    let mut entries = log.entries().to_vec();
    let e = &entries[1];
    entries[1] = LogEntry::seal(e.device_id, e.seq_no, e.timestamp, e.iv, e.ciphertext.clone(), e.prev_hash, &device_key(9));
    let m = BatchManifest::new(device(1), 0, entries).unwrap();
    let mut server = Server::new(keyring(&[1]));
    assert!(matches!(server.ingest(&m.encode(), 0), UploadOutcome::Nack { reason: NackReason::ChainBreak, .. }));
}

#[test]
fn different_batch_under_known_id_is_replay_anomaly() {
    let b = batches(1, &simple_votes(30));
    let mut server = Server::new(keyring(&[1]));
    server.ingest(&b[0].encode(), 0);
    let imposter = BatchManifest::new(device(1), 0, b[1].entries.clone()).unwrap();
    let before = server.ledger().clone();
    assert!(matches!(server.ingest(&imposter.encode(), 1), UploadOutcome::Nack { batch_id: 0, .. }));
    assert_eq!(server.anomalies()[0].kind, AnomalyKind::ReplayedBatch);
    assert_eq!(server.ledger(), &before);
}

#[test]
fn unknown_device_is_malformed() {
    let b = batches(4, &simple_votes(2));
    let mut server = Server::new(keyring(&[1]));
    assert!(matches!(server.ingest(&b[0].encode(), 0), UploadOutcome::Nack { reason: NackReason::MalformedManifest, .. }));
}

#[test]
fn tally_counts_and_conserves() {
    let votes = simple_votes(80);
    let mut server = Server::new(keyring(&[1]));
    for b in batches(1, &votes) {
        assert!(server.ingest(&b.encode(), 0).is_ack());
    }
    let t = server.tally(&ballot());
    assert!(t.excluded.is_empty());
    let mut expected = BTreeMap::new();
    for (_, c) in &votes {
        *expected.entry(*c).or_insert(0u64) += 1;
    }
    assert_eq!(t.counts, expected);
    assert_eq!(t.counted() + t.excluded.len() as u64, server.accepted_len() as u64);
}

#[test]
fn cross_device_duplicate_counts_once() {
    let mut server = Server::new(keyring(&[1, 2]));
    for b in batches(1, &[(5, 1), (6, 2)]) {
        server.ingest(&b.encode(), 0);
    }
    for b in batches(2, &[(7, 3), (5, 3)]) {
        server.ingest(&b.encode(), 0);
    }
    let t = server.tally(&ballot());
    assert_eq!(t.counts[&1], 1);
    assert_eq!(t.counts[&3], 1);
    assert_eq!(t.excluded, [Exclusion { reason: ExcludeReason::DuplicateUid, device_id: device(2), seq_no: 1 }]);

    let first = server.detect_anomalies(100);
    let again = server.detect_anomalies(200);
    assert_eq!(first, again);
    let dups: Vec<_> = first.iter().filter(|a| a.kind == AnomalyKind::DuplicateUidAcrossDevices).collect();
    assert_eq!(dups.len(), 1);
    assert_eq!(dups[0].uid, Some(voter(5)));
    assert_eq!((dups[0].device_id, dups[0].other_device_id), (device(2), Some(device(1))));
}

#[test]
fn undecryptable_and_unknown_candidates_are_excluded() {
    use crate::crypto::{encrypt_packet, Iv128};
    let mut log = crate::wormlog::VoteLog::open(crate::wormlog::MemStorage::new(), device(1), device_key(1)).unwrap();
    let iv = Iv128::new([1; 16]);
    log.append(1, iv, encrypt_packet(&Aes128Key::new([0x77; 16]), &iv, b"wrong key").unwrap()).unwrap();
    log.append(2, iv, encrypt_packet(&VOTE_KEY, &iv, b"short").unwrap()).unwrap();
    let p = crate::terminal::build_vote_packet(&voter(1), 42, 3);
    log.append(3, iv, encrypt_packet(&VOTE_KEY, &iv, &p).unwrap()).unwrap();
    let m = BatchManifest::new(device(1), 0, log.entries().to_vec()).unwrap();
    let mut server = Server::new(keyring(&[1]));
    assert!(server.ingest(&m.encode(), 0).is_ack());
    let t = server.tally(&ballot());
    assert_eq!(t.counted(), 0);
    let reasons: Vec<_> = t.excluded.iter().map(|x| x.reason).collect();
    assert_eq!(reasons.len(), 3);
    assert_eq!(reasons[1], ExcludeReason::MalformedPacket);
    assert_eq!(reasons[2], ExcludeReason::UnknownCandidate);
    // A wrong key almost always breaks padding but may by chance decode to garbage.
    assert!(matches!(reasons[0], ExcludeReason::PaddingError | ExcludeReason::MalformedPacket));
}

#[test]
fn timestamp_regression_is_flagged_once() {
    use crate::crypto::{encrypt_packet, Iv128};
    let mut log = crate::wormlog::VoteLog::open(crate::wormlog::MemStorage::new(), device(1), device_key(1)).unwrap();
    for (i, ts) in [100u64, 50, 200].into_iter().enumerate() {
        let iv = Iv128::new([i as u8; 16]);
        let p = crate::terminal::build_vote_packet(&voter(i as u32), 1, ts);
        log.append(ts, iv, encrypt_packet(&VOTE_KEY, &iv, &p).unwrap()).unwrap();
    }
    let m = BatchManifest::new(device(1), 0, log.entries().to_vec()).unwrap();
    let mut server = Server::new(keyring(&[1]));
    server.ingest(&m.encode(), 0);
    let a = server.detect_anomalies(1);
    assert_eq!(a.len(), 1);
    assert_eq!((a[0].kind, a[0].seq_no), (AnomalyKind::TimestampRegression, Some(1)));
    assert_eq!(server.detect_anomalies(2).len(), 1);
}

#[test]
fn telemetry_is_monotone() {
    let mut server = Server::new(keyring(&[1]));
    let t = |v| Telemetry { auth_success: v, votes_committed: v, ..Telemetry::default() };
    server.record_telemetry(device(1), &t(5));
    server.record_telemetry(device(1), &t(3));
    assert_eq!(server.snapshot().turnout, 5);
    server.record_telemetry(device(1), &t(8));
    assert_eq!(server.snapshot().auth_success, 8);
}

#[test]
fn archive_roundtrip() {
    let mut server = Server::new(keyring(&[1, 2]));
    for b in batches(1, &simple_votes(25)) {
        server.ingest(&b.encode(), 0);
    }
    for b in batches(2, &[(90, 2), (91, 3)]) {
        server.ingest(&b.encode(), 0);
    }
    let bytes = server.write_archive();
    assert_eq!(&bytes[..4], ARCHIVE_MAGIC);
    let restored = Server::from_archive(&bytes, keyring(&[1, 2])).unwrap();
    assert_eq!(restored.tally(&ballot()), server.tally(&ballot()));
    assert!(restored.recheck().is_ok());

    let empty = Server::from_archive(ARCHIVE_MAGIC, keyring(&[1])).unwrap();
    assert_eq!(empty.accepted_len(), 0);

    for off in [4, 20, 100, bytes.len() - 1] {
        let mut bad = bytes.clone();
        bad[off] ^= 0x04;
        assert!(Server::from_archive(&bad, keyring(&[1, 2])).is_err(), "offset {off}");
    }
    assert!(Server::from_archive(&bytes[..bytes.len() - 3], keyring(&[1, 2])).is_err());
}
