//! Card issuance and the eligibility check, including the attacks a reader
//! has to refuse.

use rfid_vote::cardauth::{authenticate, issue_card, load_registry, save_registry, CardImage, Uid, VoterRegistry};
use rfid_vote::crypto::{Aes128Key, Iv128};

fn main() {
    let card_key = Aes128Key::new([0x11; 16]);
    let registry_key = Aes128Key::new([0x22; 16]);
    let alice = Uid::from_hex("04000001").unwrap();
    let bob = Uid::from_hex("04000002").unwrap();
    let mut registry = VoterRegistry::with_voters(&registry_key, [alice, bob]).unwrap();

    let card = issue_card(alice, &card_key);
    println!("issued {} token {}", card.uid, hex::encode(card.token));

    let forged = CardImage { uid: bob, token: [0xee; 16] };
    let altered = CardImage { uid: Uid::from_hex("04000003").unwrap(), token: card.token };
    let stranger = issue_card(Uid::from_hex("04ffffff").unwrap(), &card_key);
    for (label, c) in [("genuine", &card), ("forged", &forged), ("altered uid", &altered), ("unregistered", &stranger)] {
        println!("{label:<14} {:?}", authenticate(&registry, c, &card_key));
    }

    registry.mark_voted(&alice, 12_000).unwrap();
    println!("{:<14} {:?}", "after voting", authenticate(&registry, &card, &card_key));

    let blob = save_registry(&registry, &registry_key, &Iv128::new([3; 16])).unwrap();
    let back = load_registry(&blob, &registry_key).unwrap();
    println!("registry file {} bytes, {} voters, {} voted", blob.len(), back.len(), back.voted_count());
    println!("wrong key -> {:?}", load_registry(&blob, &card_key).err());
}
